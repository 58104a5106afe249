//! Dual-threshold detection with sensing memory.
//!
//! A RESI sample is compared against a pass (`ack_db`) and a fail
//! (`nack_db`) threshold, giving three outcomes. The memory then splits the
//! `Absent` outcome into `Lost` (a target was being tracked) and `NotFound`.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_MEMORY_CAPACITY: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub ack_db: f64,
    pub nack_db: f64,
}

impl Thresholds {
    pub fn new(ack_db: f64, nack_db: f64) -> Result<Self> {
        let t = Self { ack_db, nack_db };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ack_db.is_finite() && self.nack_db.is_finite()) {
            return Err(invalid("thresholds", "must be finite"));
        }
        if !(self.ack_db > self.nack_db) {
            return Err(invalid(
                "thresholds.ack_db",
                format!("must exceed nack_db ({} <= {})", self.ack_db, self.nack_db),
            ));
        }
        Ok(())
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            ack_db: 10.0,
            nack_db: 0.0,
        }
    }
}

/// Ordered `Absent < Possible < Detected`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Absent,
    Possible,
    Detected,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Absent => "ABSENT",
            Outcome::Possible => "POSSIBLE",
            Outcome::Detected => "DETECTED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Feedback {
    Ack,
    Nack,
    Lost,
    NotFound,
}

impl Feedback {
    pub const ALL: [Feedback; 4] = [
        Feedback::Ack,
        Feedback::Nack,
        Feedback::Lost,
        Feedback::NotFound,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Feedback::Ack => "ACK",
            Feedback::Nack => "NACK",
            Feedback::Lost => "LOST",
            Feedback::NotFound => "NOT_FOUND",
        }
    }
}

impl fmt::Display for Feedback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryEntry {
    pub time_s: f64,
    pub outcome: Outcome,
    pub feedback: Feedback,
    pub tx_beam_index: usize,
    pub rx_beam_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensingMemory {
    capacity: usize,
    history: VecDeque<MemoryEntry>,
    last_ack_time: Option<f64>,
    tracked: bool,
}

impl SensingMemory {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(invalid("memory_capacity", "must be >= 1"));
        }
        Ok(Self {
            capacity,
            history: VecDeque::with_capacity(capacity),
            last_ack_time: None,
            tracked: false,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn history(&self) -> impl ExactSizeIterator<Item = &MemoryEntry> {
        self.history.iter()
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn last_ack_time(&self) -> Option<f64> {
        self.last_ack_time
    }

    /// An Ack has been issued and no NotFound since.
    pub fn tracked(&self) -> bool {
        self.tracked
    }
}

impl Default for SensingMemory {
    fn default() -> Self {
        Self::new(DEFAULT_MEMORY_CAPACITY).expect("nonzero capacity")
    }
}

/// Thresholds are inclusive from below: a sample equal to a threshold falls
/// in the upper class.
pub fn classify(resi_db: f64, thr: &Thresholds) -> Outcome {
    if resi_db >= thr.ack_db {
        Outcome::Detected
    } else if resi_db >= thr.nack_db {
        Outcome::Possible
    } else {
        Outcome::Absent
    }
}

pub fn decide_feedback(outcome: Outcome, mem: &SensingMemory) -> Feedback {
    match outcome {
        Outcome::Detected => Feedback::Ack,
        Outcome::Possible => Feedback::Nack,
        Outcome::Absent if mem.tracked => Feedback::Lost,
        Outcome::Absent => Feedback::NotFound,
    }
}

pub fn update_memory(
    mem: &SensingMemory,
    time_s: f64,
    outcome: Outcome,
    feedback: Feedback,
    tx_beam: usize,
    rx_beam: usize,
) -> Result<SensingMemory> {
    if let Some(last) = mem.history.back() {
        if !(time_s > last.time_s) {
            return Err(Error::NonMonotoneTime {
                previous: last.time_s,
                got: time_s,
            });
        }
    }
    let mut next = mem.clone();
    if next.history.len() == next.capacity {
        next.history.pop_front();
    }
    next.history.push_back(MemoryEntry {
        time_s,
        outcome,
        feedback,
        tx_beam_index: tx_beam,
        rx_beam_index: rx_beam,
    });
    match feedback {
        Feedback::Ack => {
            next.tracked = true;
            next.last_ack_time = Some(time_s);
        }
        Feedback::NotFound => next.tracked = false,
        Feedback::Nack | Feedback::Lost => {}
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    const THR: Thresholds = Thresholds {
        ack_db: 10.0,
        nack_db: 0.0,
    };

    #[test]
    fn classify_examples() {
        assert_eq!(classify(15.0, &THR), Outcome::Detected);
        assert_eq!(classify(5.0, &THR), Outcome::Possible);
        assert_eq!(classify(10.0, &THR), Outcome::Detected);
        assert_eq!(classify(0.0, &THR), Outcome::Possible);
        assert_eq!(classify(-0.1, &THR), Outcome::Absent);
        assert_eq!(classify(f64::NEG_INFINITY, &THR), Outcome::Absent);
    }

    #[test]
    fn thresholds_must_be_ordered() {
        assert!(Thresholds::new(0.0, 0.0).is_err());
        assert!(Thresholds::new(-1.0, 0.0).is_err());
        assert!(Thresholds::new(f64::NAN, 0.0).is_err());
        assert!(Thresholds::new(10.0, 0.0).is_ok());
    }

    #[test]
    fn feedback_mapping() {
        let empty = SensingMemory::default();
        assert_eq!(decide_feedback(Outcome::Detected, &empty), Feedback::Ack);
        assert_eq!(decide_feedback(Outcome::Possible, &empty), Feedback::Nack);
        assert_eq!(decide_feedback(Outcome::Absent, &empty), Feedback::NotFound);

        let tracked = update_memory(&empty, 0.2, Outcome::Detected, Feedback::Ack, 3, 4).unwrap();
        let tracked = update_memory(&tracked, 0.3, Outcome::Detected, Feedback::Ack, 3, 4).unwrap();
        assert_eq!(decide_feedback(Outcome::Absent, &tracked), Feedback::Lost);
        assert_eq!(decide_feedback(Outcome::Detected, &tracked), Feedback::Ack);
    }

    #[test]
    fn first_ack_starts_tracking() {
        let mem = update_memory(
            &SensingMemory::default(),
            0.2,
            Outcome::Detected,
            Feedback::Ack,
            0,
            0,
        )
        .unwrap();
        assert!(mem.tracked());
        assert_eq!(mem.last_ack_time(), Some(0.2));
    }

    #[test]
    fn not_found_clears_tracking_but_lost_does_not() {
        let mem = update_memory(&SensingMemory::default(), 0.0, Outcome::Detected, Feedback::Ack, 0, 0)
            .unwrap();
        let mem = update_memory(&mem, 0.1, Outcome::Absent, Feedback::Lost, 0, 0).unwrap();
        assert!(mem.tracked());
        let mem = update_memory(&mem, 0.2, Outcome::Absent, Feedback::NotFound, 0, 0).unwrap();
        assert!(!mem.tracked());
        assert_eq!(mem.last_ack_time(), Some(0.0));
    }

    #[test]
    fn history_is_bounded_fifo() {
        let mut mem = SensingMemory::default();
        for k in 0..21 {
            mem = update_memory(&mem, k as f64 * 0.1, Outcome::Possible, Feedback::Nack, k, 0)
                .unwrap();
        }
        assert_eq!(mem.len(), 20);
        assert_eq!(mem.history().next().unwrap().tx_beam_index, 1);
    }

    #[test]
    fn time_must_increase() {
        let mem =
            update_memory(&SensingMemory::default(), 1.0, Outcome::Absent, Feedback::NotFound, 0, 0)
                .unwrap();
        assert!(matches!(
            update_memory(&mem, 1.0, Outcome::Absent, Feedback::NotFound, 0, 0),
            Err(Error::NonMonotoneTime { .. })
        ));
    }

    #[test]
    fn outcome_order() {
        assert!(Outcome::Absent < Outcome::Possible && Outcome::Possible < Outcome::Detected);
    }
}
