//! Closed-loop e-ARQ reactions: what the Tx/Rx pair does after each
//! sensing feedback.
//!
//! | feedback   | action                                                    |
//! |------------|-----------------------------------------------------------|
//! | `Ack`      | hold the current beams, reset counters                    |
//! | `Nack`     | sweep the narrow tier                                     |
//! | `Lost`     | run the lost timer, escalate power on expiry, sweep all   |
//! | `NotFound` | switch to the wide tier and sweep it                      |

use serde::{Deserialize, Serialize};

use crate::array::Codebook;
use crate::detector::Feedback;
use crate::error::{invalid, Error, Result};

/// Tolerance for comparing the accumulated lost time against the timer.
const TIMER_EPS_S: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeConfig {
    pub tx_beam_index: usize,
    pub rx_beam_index: usize,
    pub power_level_index: usize,
    pub wide_mode: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TerminationReason {
    MaxRetransmissions,
    OutOfCoverage,
    RunEnded,
}

impl TerminationReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminationReason::MaxRetransmissions => "MAX_RETRANSMISSIONS",
            TerminationReason::OutOfCoverage => "OUT_OF_COVERAGE",
            TerminationReason::RunEnded => "RUN_ENDED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSchedule {
    pub levels_w: Vec<f64>,
}

impl PowerSchedule {
    pub fn new(levels_w: Vec<f64>) -> Result<Self> {
        let s = Self { levels_w };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels_w.is_empty() {
            return Err(invalid("power_schedule.levels_w", "must not be empty"));
        }
        if self.levels_w.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(invalid("power_schedule.levels_w", "levels must be > 0"));
        }
        if self.levels_w.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("power_schedule.levels_w", "levels must be strictly increasing"));
        }
        Ok(())
    }

    pub fn power_w(&self, level: usize) -> f64 {
        self.levels_w[level.min(self.levels_w.len() - 1)]
    }

    pub fn len(&self) -> usize {
        self.levels_w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels_w.is_empty()
    }
}

impl Default for PowerSchedule {
    fn default() -> Self {
        Self {
            levels_w: vec![1e-4, 3e-4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolLimits {
    /// Consecutive non-Ack iterations allowed before giving up.
    pub max_retransmissions: u32,
    /// Continuous Lost time before the next power level is used.
    pub lost_timer_s: f64,
    /// Step power down one level on Ack.
    pub reduce_power_on_ack: bool,
}

impl ProtocolLimits {
    pub fn validate(&self) -> Result<()> {
        if self.max_retransmissions == 0 {
            return Err(invalid("protocol.max_retransmissions", "must be >= 1"));
        }
        if !(self.lost_timer_s.is_finite() && self.lost_timer_s > 0.0) {
            return Err(invalid("protocol.lost_timer_s", "must be > 0"));
        }
        Ok(())
    }
}

impl Default for ProtocolLimits {
    fn default() -> Self {
        Self {
            max_retransmissions: 50,
            lost_timer_s: 0.5,
            reduce_power_on_ack: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolState {
    pub config: NodeConfig,
    pub lost_elapsed_s: f64,
    pub retransmission_count: u32,
    pub terminated: bool,
    pub termination_reason: Option<TerminationReason>,
}

impl ProtocolState {
    /// Both nodes start on their central wide beam at the lowest power.
    pub fn initial(tx: &Codebook, rx: &Codebook) -> Self {
        Self {
            config: NodeConfig {
                tx_beam_index: tx.central_wide_index(),
                rx_beam_index: rx.central_wide_index(),
                power_level_index: 0,
                wide_mode: true,
            },
            lost_elapsed_s: 0.0,
            retransmission_count: 0,
            terminated: false,
            termination_reason: None,
        }
    }

    pub fn terminate(&mut self, reason: TerminationReason) {
        self.terminated = true;
        self.termination_reason = Some(reason);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepResult {
    pub tx_beam_index: usize,
    pub rx_beam_index: usize,
    pub resi_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    pub state: ProtocolState,
    pub sweep: Option<SweepResult>,
    pub power_increased: bool,
}

/// Exhaustive argmax over the candidate cross product. Ties (and NaN
/// probes, treated as `-inf`) resolve to the lexicographically smallest
/// `(tx, rx)` pair.
pub fn beam_sweep<P>(
    mut probe: P,
    tx_candidates: &[usize],
    rx_candidates: &[usize],
) -> Result<SweepResult>
where
    P: FnMut(usize, usize) -> f64,
{
    if tx_candidates.is_empty() || rx_candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let mut best: Option<SweepResult> = None;
    for &tx in tx_candidates {
        for &rx in rx_candidates {
            let mut value = probe(tx, rx);
            if value.is_nan() {
                value = f64::NEG_INFINITY;
            }
            let better = match &best {
                None => true,
                Some(b) => {
                    value > b.resi_db
                        || (value == b.resi_db && (tx, rx) < (b.tx_beam_index, b.rx_beam_index))
                }
            };
            if better {
                best = Some(SweepResult {
                    tx_beam_index: tx,
                    rx_beam_index: rx,
                    resi_db: value,
                });
            }
        }
    }
    Ok(best.expect("non-empty candidates"))
}

/// Applies the reconfiguration rule for `feedback`.
///
/// `probe(tx, rx, power_level)` returns the noise-free RESI of a beam pair
/// at the current target position. It is never called on `Ack`.
#[allow(clippy::too_many_arguments)]
pub fn react<P>(
    feedback: Feedback,
    state: &ProtocolState,
    tx_codebook: &Codebook,
    rx_codebook: &Codebook,
    schedule: &PowerSchedule,
    limits: &ProtocolLimits,
    mut probe: P,
    dt_s: f64,
) -> Result<Reaction>
where
    P: FnMut(usize, usize, usize) -> f64,
{
    if state.terminated {
        return Err(Error::Terminated);
    }
    let mut next = state.clone();
    let mut power_increased = false;

    let candidates = match feedback {
        Feedback::Ack => {
            next.config.wide_mode = false;
            next.retransmission_count = 0;
            next.lost_elapsed_s = 0.0;
            if limits.reduce_power_on_ack && next.config.power_level_index > 0 {
                next.config.power_level_index -= 1;
            }
            return Ok(Reaction {
                state: next,
                sweep: None,
                power_increased,
            });
        }
        Feedback::Nack => {
            next.lost_elapsed_s = 0.0;
            (tx_codebook.narrow_indices(), rx_codebook.narrow_indices())
        }
        Feedback::Lost => {
            next.lost_elapsed_s += dt_s;
            if next.lost_elapsed_s + TIMER_EPS_S >= limits.lost_timer_s
                && next.config.power_level_index + 1 < schedule.len()
            {
                next.config.power_level_index += 1;
                next.lost_elapsed_s = 0.0;
                power_increased = true;
            }
            (tx_codebook.all_indices(), rx_codebook.all_indices())
        }
        Feedback::NotFound => {
            next.lost_elapsed_s = 0.0;
            let pick = |cb: &Codebook| {
                let wide = cb.wide_indices();
                if wide.is_empty() {
                    cb.narrow_indices()
                } else {
                    wide
                }
            };
            (pick(tx_codebook), pick(rx_codebook))
        }
    };

    let level = next.config.power_level_index;
    let best = beam_sweep(|tx, rx| probe(tx, rx, level), &candidates.0, &candidates.1)?;
    next.config.tx_beam_index = best.tx_beam_index;
    next.config.rx_beam_index = best.rx_beam_index;
    next.config.wide_mode = match feedback {
        Feedback::NotFound => true,
        _ => tx_codebook.is_wide(best.tx_beam_index) || rx_codebook.is_wide(best.rx_beam_index),
    };
    next.retransmission_count = next.retransmission_count.saturating_add(1);

    Ok(Reaction {
        state: next,
        sweep: Some(best),
        power_increased,
    })
}

/// Why the loop should stop, if it should. The retransmission limit wins
/// when both conditions hold.
pub fn terminated(
    state: &ProtocolState,
    limits: &ProtocolLimits,
    target_in_coverage: bool,
) -> Option<TerminationReason> {
    if state.retransmission_count >= limits.max_retransmissions {
        Some(TerminationReason::MaxRetransmissions)
    } else if !target_in_coverage {
        Some(TerminationReason::OutOfCoverage)
    } else {
        None
    }
}
