//! Random straight-trajectory batches and the per-iteration feedback
//! statistics they produce.
//!
//! Run `i` draws from the ChaCha stream `i` of `master_seed`, so each run's
//! randomness is fixed regardless of how runs are scheduled across threads.
//! Tallies are integer counts summed in run order.

use std::f64::consts::TAU;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{Feedback, Thresholds};
use crate::error::{invalid, Result};
use crate::geometry::Vec2;
use crate::scenario::{Region, Scenario};
use crate::sim::{Simulator, Trace};

/// Uniform start in `region`, uniform heading, fixed speed.
pub fn sample_trajectory<R: Rng + ?Sized>(rng: &mut R, region: &Region, speed_m_s: f64) -> (Vec2, Vec2) {
    let x = region.min.x + rng.random::<f64>() * region.width();
    let y = region.min.y + rng.random::<f64>() * region.height();
    let heading = rng.random::<f64>() * TAU;
    (Vec2::new(x, y), Vec2::from_polar(speed_m_s, heading))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunTally {
    pub ack: u64,
    pub nack: u64,
    pub lost: u64,
    pub not_found: u64,
    pub nlos: u64,
    pub iterations: u64,
    pub power_increased: bool,
}

impl RunTally {
    pub fn from_trace(trace: &Trace) -> Self {
        let mut t = RunTally {
            power_increased: trace.power_increased(),
            ..Default::default()
        };
        for r in &trace.records {
            t.iterations += 1;
            t.nlos += u64::from(r.nlos_flag);
            match r.feedback {
                Feedback::Ack => t.ack += 1,
                Feedback::Nack => t.nack += 1,
                Feedback::Lost => t.lost += 1,
                Feedback::NotFound => t.not_found += 1,
            }
        }
        t
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Totals {
    ack: u64,
    nack: u64,
    lost: u64,
    not_found: u64,
    nlos: u64,
    iterations: u64,
    runs_with_power_increase: u64,
    runs: u64,
}

impl Totals {
    fn add(mut self, t: &RunTally) -> Self {
        self.ack += t.ack;
        self.nack += t.nack;
        self.lost += t.lost;
        self.not_found += t.not_found;
        self.nlos += t.nlos;
        self.iterations += t.iterations;
        self.runs_with_power_increase += u64::from(t.power_increased);
        self.runs += 1;
        self
    }
}

/// Percentages per sensing iteration, except `additional_resources_pct`
/// which is per trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsTable {
    pub ack_pct: f64,
    pub nack_pct: f64,
    pub lost_pct: f64,
    pub notfound_pct: f64,
    pub nlos_pct: f64,
    pub additional_resources_pct: f64,
    pub run_count: u64,
}

impl StatsTable {
    pub fn from_tallies<'a>(tallies: impl IntoIterator<Item = &'a RunTally>) -> Self {
        let t = tallies.into_iter().fold(Totals::default(), Totals::add);
        let pct = |n: u64, d: u64| if d == 0 { 0.0 } else { 100.0 * n as f64 / d as f64 };
        StatsTable {
            ack_pct: pct(t.ack, t.iterations),
            nack_pct: pct(t.nack, t.iterations),
            lost_pct: pct(t.lost, t.iterations),
            notfound_pct: pct(t.not_found, t.iterations),
            nlos_pct: pct(t.nlos, t.iterations),
            additional_resources_pct: pct(t.runs_with_power_increase, t.runs),
            run_count: t.runs,
        }
    }

    pub fn feedback_sum_pct(&self) -> f64 {
        self.ack_pct + self.nack_pct + self.lost_pct + self.notfound_pct
    }
}

/// Builds run `index` of a batch: a fresh trajectory from the template and
/// a per-run noise seed, both drawn from stream `index` of `master_seed`.
pub fn run_instance(template: &Scenario, master_seed: u64, index: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    let speed = template.target_velocity.norm();
    let (start, velocity) = sample_trajectory(&mut rng, &template.coverage_region, speed);
    let mut s = template.clone();
    s.target_start = start;
    s.target_velocity = velocity;
    s.rng_seed = rng.next_u64();
    s
}

fn tally_runs(template: &Scenario, n_runs: usize, master_seed: u64) -> Result<Vec<RunTally>> {
    if n_runs == 0 {
        return Err(invalid("n_runs", "must be >= 1"));
    }
    // validate once up front so per-run failures cannot occur
    Simulator::new(template.clone())?;
    (0..n_runs as u64)
        .into_par_iter()
        .map(|i| {
            let trace = Simulator::new(run_instance(template, master_seed, i))?.run()?;
            Ok(RunTally::from_trace(&trace))
        })
        .collect()
}

/// Runs `n_runs` random trajectories on the current rayon pool.
pub fn run_montecarlo(template: &Scenario, n_runs: usize, master_seed: u64) -> Result<StatsTable> {
    let tallies = tally_runs(template, n_runs, master_seed)?;
    Ok(StatsTable::from_tallies(&tallies))
}

/// Runs `f` on a dedicated rayon pool of `threads` workers, so the batch
/// functions in this module parallelize over exactly that many threads.
pub fn with_thread_pool<T, F>(threads: usize, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> Result<T> + Send,
{
    if threads == 0 {
        return Err(invalid("threads", "must be >= 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| invalid("threads", e.to_string()))?;
    pool.install(f)
}

/// Same as [`run_montecarlo`] on a dedicated pool of `threads` workers.
pub fn run_montecarlo_with_threads(
    template: &Scenario,
    n_runs: usize,
    master_seed: u64,
    threads: usize,
) -> Result<StatsTable> {
    with_thread_pool(threads, || run_montecarlo(template, n_runs, master_seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSweepRow {
    pub ack_db: f64,
    pub nack_db: f64,
    #[serde(flatten)]
    pub stats: StatsTable,
}

/// One batch per threshold pair, all sharing `master_seed` so that every
/// pair sees the same trajectories and noise draws.
pub fn sweep_thresholds(
    template: &Scenario,
    grid: &[Thresholds],
    n_runs: usize,
    master_seed: u64,
) -> Result<Vec<ThresholdSweepRow>> {
    grid.iter()
        .map(|thr| {
            thr.validate()?;
            let mut s = template.clone();
            s.thresholds = *thr;
            Ok(ThresholdSweepRow {
                ack_db: thr.ack_db,
                nack_db: thr.nack_db,
                stats: run_montecarlo(&s, n_runs, master_seed)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_speed_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (start, v) = sample_trajectory(&mut rng, &Region::default(), 2.25);
            assert!((v.norm() - 2.25).abs() < 1e-12);
            assert!(Region::default().contains(start));
        }
    }

    #[test]
    fn trajectory_is_reproducible() {
        let a = sample_trajectory(&mut ChaCha8Rng::seed_from_u64(9), &Region::default(), 2.25);
        let b = sample_trajectory(&mut ChaCha8Rng::seed_from_u64(9), &Region::default(), 2.25);
        assert_eq!(a, b);
    }

    #[test]
    fn single_run_matches_its_trace() {
        let template = Scenario::toy_example();
        let stats = run_montecarlo(&template, 1, 42).unwrap();
        let trace = Simulator::new(run_instance(&template, 42, 0)).unwrap().run().unwrap();
        let n = trace.records.len() as f64;
        if n > 0.0 {
            assert_eq!(stats.ack_pct, 100.0 * trace.feedback_count(Feedback::Ack) as f64 / n);
            assert_eq!(stats.lost_pct, 100.0 * trace.feedback_count(Feedback::Lost) as f64 / n);
        }
        assert_eq!(stats.run_count, 1);
        assert_eq!(
            stats.additional_resources_pct,
            if trace.power_increased() { 100.0 } else { 0.0 }
        );
    }

    #[test]
    fn zero_runs_is_rejected() {
        assert!(run_montecarlo(&Scenario::toy_example(), 0, 1).is_err());
    }

    #[test]
    fn sweep_rejects_invalid_pairs() {
        let grid = [Thresholds { ack_db: 0.0, nack_db: 5.0 }];
        assert!(sweep_thresholds(&Scenario::toy_example(), &grid, 2, 1).is_err());
    }
}
