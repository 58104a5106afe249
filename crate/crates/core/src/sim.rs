//! Time-stepped execution of one scenario.
//!
//! Each iteration measures the echo with the current beams, runs the
//! detector, feeds the result back to the protocol and records everything
//! needed to reproduce the RESI/SNR/feedback timeline. Exactly one Gaussian
//! draw is taken per iteration; beam sweeps reuse the iteration's geometry
//! without drawing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::array::{gain_toward, Codebook};
use crate::detector::{classify, decide_feedback, update_memory, Feedback, Outcome, SensingMemory};
use crate::error::{Error, Result};
use crate::geometry::{los_clear, reflected_path, Vec2};
use crate::link::{
    bistatic_echo_power, db_to_linear, measure_resi, noise_power, resi, ue_snr, LinkParams,
    PathInfo, PathKind,
};
use crate::protocol::{react, terminated, ProtocolState, TerminationReason};
use crate::scenario::Scenario;

/// Echo geometry at `target`. The Tx leg must be clear; the Rx side uses the
/// direct path when visible and otherwise the wall bounce.
pub fn best_physical_path(scenario: &Scenario, target: Vec2) -> PathInfo {
    let tx = scenario.tx_array.position;
    let rx = scenario.rx_array.position;
    let obstacles = &scenario.obstacles;
    if target == tx || target == rx || !los_clear(tx, target, obstacles).unwrap_or(false) {
        return PathInfo::none();
    }
    let range_tx_to_target = tx.distance(target);
    let angle_at_tx = (target - tx).angle();

    if los_clear(target, rx, obstacles).unwrap_or(false) {
        return PathInfo {
            kind: PathKind::Direct,
            range_tx_to_target,
            range_target_to_rx: target.distance(rx),
            angle_at_tx,
            angle_at_rx: (target - rx).angle(),
        };
    }
    let bounce = scenario
        .wall
        .as_ref()
        .and_then(|w| reflected_path(target, rx, w, obstacles).ok().flatten());
    match bounce {
        Some(p) => PathInfo {
            kind: PathKind::WallReflected,
            range_tx_to_target,
            range_target_to_rx: p.total_length(),
            angle_at_tx,
            angle_at_rx: p.arrival_angle,
        },
        None => PathInfo::none(),
    }
}

/// Whether the direct target–Rx segment is blocked by an obstacle.
pub fn nlos(scenario: &Scenario, target: Vec2) -> bool {
    let rx = scenario.rx_array.position;
    target != rx && !los_clear(target, rx, &scenario.obstacles).unwrap_or(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub time_s: f64,
    pub target_position: Vec2,
    pub path_kind: PathKind,
    pub nlos_flag: bool,
    pub resi_db: f64,
    pub resi_noise_free_db: f64,
    pub outcome: Outcome,
    pub feedback: Feedback,
    pub tx_beam_index: usize,
    pub rx_beam_index: usize,
    pub power_level_index: usize,
    pub power_w: f64,
    pub ue_snr_db: f64,
    /// A beam sweep ran in reaction to this iteration's feedback.
    pub swept: bool,
    /// The reaction moved to the next power level (effective next iteration).
    pub power_increased: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub records: Vec<StepRecord>,
    pub termination: TerminationReason,
}

/// Rounds to the nanosecond so `k * dt` prints as `0.3`, not `0.30000000000000004`.
fn tidy_time(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEvent {
    pub time_s: f64,
    pub event: String,
}

impl Trace {
    pub fn feedback_count(&self, feedback: Feedback) -> usize {
        self.records.iter().filter(|r| r.feedback == feedback).count()
    }

    pub fn power_increased(&self) -> bool {
        self.records.iter().any(|r| r.power_increased)
    }

    /// Feedback changes (including the first feedback) at the time they are
    /// reported, and power increases at the time the new level is first used.
    pub fn events(&self) -> Vec<TraceEvent> {
        let mut out = Vec::new();
        let mut prev: Option<&StepRecord> = None;
        for r in &self.records {
            if let Some(p) = prev {
                if r.power_level_index > p.power_level_index {
                    out.push(TraceEvent {
                        time_s: tidy_time(r.time_s),
                        event: "POWER_INCREASE".to_string(),
                    });
                }
            }
            if prev.is_none_or(|p| p.feedback != r.feedback) {
                out.push(TraceEvent {
                    time_s: tidy_time(r.time_s),
                    event: r.feedback.as_str().to_string(),
                });
            }
            prev = Some(r);
        }
        if let Some(last) = self.records.last() {
            out.push(TraceEvent {
                time_s: tidy_time(last.time_s),
                event: format!("TERMINATED_{}", self.termination.as_str()),
            });
        }
        out
    }
}

/// A validated scenario together with its codebooks and noise floor.
#[derive(Debug, Clone)]
pub struct Simulator {
    scenario: Scenario,
    tx_codebook: Codebook,
    rx_codebook: Codebook,
    noise_w: f64,
}

impl Simulator {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let (tx_codebook, rx_codebook) = scenario.codebooks()?;
        let noise_w = noise_power(scenario.link.bandwidth_hz, scenario.link.noise_figure_db)?;
        Ok(Self {
            scenario,
            tx_codebook,
            rx_codebook,
            noise_w,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn tx_codebook(&self) -> &Codebook {
        &self.tx_codebook
    }

    pub fn rx_codebook(&self) -> &Codebook {
        &self.rx_codebook
    }

    pub fn initial_state(&self) -> ProtocolState {
        ProtocolState::initial(&self.tx_codebook, &self.rx_codebook)
    }

    pub fn initial_memory(&self) -> SensingMemory {
        SensingMemory::new(self.scenario.memory_capacity).expect("validated capacity")
    }

    pub fn link_params(&self, power_level: usize) -> LinkParams {
        LinkParams {
            tx_power_w: self.scenario.power_schedule.power_w(power_level),
            bandwidth_hz: self.scenario.link.bandwidth_hz,
            noise_figure_db: self.scenario.link.noise_figure_db,
            rcs_m2: self.scenario.link.rcs_m2,
            carrier_hz: self.scenario.tx_array.carrier_hz,
        }
    }

    /// Target inside the coverage region and within both codebook sectors.
    pub fn in_coverage(&self, target: Vec2) -> bool {
        let s = &self.scenario;
        if !s.coverage_region.contains(target) {
            return false;
        }
        let in_sector = |cfg: &crate::array::ArrayConfig, cb: &Codebook| {
            target != cfg.position && cb.contains_angle(cfg.relative_angle((target - cfg.position).angle()))
        };
        in_sector(&s.tx_array, &self.tx_codebook) && in_sector(&s.rx_array, &self.rx_codebook)
    }

    /// Noise-free RESI of one beam pair along `path`.
    pub fn noise_free_resi(&self, path: &PathInfo, tx_beam: usize, rx_beam: usize, power_level: usize) -> f64 {
        let echo = self.echo_power(path, tx_beam, rx_beam, power_level);
        resi(echo, self.noise_w).expect("positive noise")
    }

    fn echo_power(&self, path: &PathInfo, tx_beam: usize, rx_beam: usize, power_level: usize) -> f64 {
        if path.kind == PathKind::None {
            return 0.0;
        }
        let s = &self.scenario;
        let (Some(tb), Some(rb)) = (self.tx_codebook.beam(tx_beam), self.rx_codebook.beam(rx_beam)) else {
            return 0.0;
        };
        let g_tx = gain_toward(&s.tx_array, tb, path.angle_at_tx);
        let g_rx = gain_toward(&s.rx_array, rb, path.angle_at_rx);
        let params = self.link_params(power_level);
        let mut p = bistatic_echo_power(&params, g_tx, g_rx, path.range_tx_to_target, path.range_target_to_rx)
            .unwrap_or(0.0);
        if path.kind == PathKind::WallReflected {
            p /= db_to_linear(s.link.wall_loss_db);
        }
        p
    }

    fn ue_snr_db(&self, target: Vec2, tx_beam: usize, power_level: usize) -> f64 {
        let s = &self.scenario;
        let tx = s.tx_array.position;
        let Some(beam) = self.tx_codebook.beam(tx_beam) else {
            return crate::link::RESI_FLOOR_DB;
        };
        let gain = gain_toward(&s.tx_array, beam, (target - tx).angle());
        ue_snr(&self.link_params(power_level), gain, tx.distance(target))
            .unwrap_or(crate::link::RESI_FLOOR_DB)
    }

    /// One sensing iteration at `time_s`.
    pub fn step<R: rand::Rng + ?Sized>(
        &self,
        state: &ProtocolState,
        memory: &SensingMemory,
        time_s: f64,
        rng: &mut R,
    ) -> Result<(StepRecord, ProtocolState, SensingMemory)> {
        if state.terminated {
            return Err(Error::Terminated);
        }
        let s = &self.scenario;
        let target = s.target_position(time_s);
        let path = best_physical_path(s, target);
        let nlos_flag = nlos(s, target);
        let cfg = state.config;

        let resi_noise_free_db =
            self.noise_free_resi(&path, cfg.tx_beam_index, cfg.rx_beam_index, cfg.power_level_index);
        let resi_db = measure_resi(resi_noise_free_db, s.link.resi_noise_std_db, rng);
        let outcome = classify(resi_db, &s.thresholds);
        let feedback = decide_feedback(outcome, memory);

        let reaction = react(
            feedback,
            state,
            &self.tx_codebook,
            &self.rx_codebook,
            &s.power_schedule,
            &s.protocol,
            |tx, rx, level| self.noise_free_resi(&path, tx, rx, level),
            s.dt_s,
        )?;
        let memory = update_memory(memory, time_s, outcome, feedback, cfg.tx_beam_index, cfg.rx_beam_index)?;

        let record = StepRecord {
            time_s,
            target_position: target,
            path_kind: path.kind,
            nlos_flag,
            resi_db,
            resi_noise_free_db,
            outcome,
            feedback,
            tx_beam_index: cfg.tx_beam_index,
            rx_beam_index: cfg.rx_beam_index,
            power_level_index: cfg.power_level_index,
            power_w: s.power_schedule.power_w(cfg.power_level_index),
            ue_snr_db: self.ue_snr_db(target, cfg.tx_beam_index, cfg.power_level_index),
            swept: reaction.sweep.is_some(),
            power_increased: reaction.power_increased,
        };
        Ok((record, reaction.state, memory))
    }

    /// Runs until the scenario duration elapses or the protocol terminates.
    pub fn run(&self) -> Result<Trace> {
        let s = &self.scenario;
        let mut rng = ChaCha8Rng::seed_from_u64(s.rng_seed);
        let mut state = self.initial_state();
        let mut memory = self.initial_memory();
        let mut records = Vec::with_capacity(s.step_count());

        for k in 0..s.step_count() {
            let time_s = k as f64 * s.dt_s;
            let in_cov = self.in_coverage(s.target_position(time_s));
            if let Some(reason) = terminated(&state, &s.protocol, in_cov) {
                state.terminate(reason);
                break;
            }
            let (record, next_state, next_memory) = self.step(&state, &memory, time_s, &mut rng)?;
            records.push(record);
            state = next_state;
            memory = next_memory;
        }
        Ok(Trace {
            records,
            termination: state.termination_reason.unwrap_or(TerminationReason::RunEnded),
        })
    }
}

pub fn run_scenario(scenario: &Scenario) -> Result<Trace> {
    Simulator::new(scenario.clone())?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Obstacle;

    fn open_scene() -> Scenario {
        let mut s = Scenario::toy_example();
        s.obstacles.clear();
        s
    }

    #[test]
    fn direct_path_in_open_geometry() {
        let p = best_physical_path(&open_scene(), Vec2::new(0.0, 40.0));
        assert_eq!(p.kind, PathKind::Direct);
        assert!((p.range_tx_to_target - 40.0).abs() < 1e-12);
        assert!((p.range_target_to_rx - 40.0).abs() < 1e-12);
    }

    #[test]
    fn wall_bounce_when_direct_is_blocked() {
        let s = Scenario::toy_example();
        let p = best_physical_path(&s, Vec2::new(0.0, 40.0));
        assert_eq!(p.kind, PathKind::WallReflected);
        assert!((p.range_target_to_rx - 2.0 * 500f64.sqrt()).abs() < 1e-9);
        // arrival direction points from Rx at (-40,40) to the bounce at (-20,50)
        assert!((p.angle_at_rx - (10f64).atan2(20.0)).abs() < 1e-12);
    }

    #[test]
    fn no_path_when_everything_is_blocked() {
        let mut s = Scenario::toy_example();
        s.obstacles.push(Obstacle { center: Vec2::new(-10.0, 45.0), side: 3.0 });
        s.obstacles.push(Obstacle { center: Vec2::new(-30.0, 45.0), side: 3.0 });
        let p = best_physical_path(&s, Vec2::new(0.0, 40.0));
        assert_eq!(p.kind, PathKind::None);
    }

    #[test]
    fn blocked_tx_leg_gives_no_path() {
        let mut s = open_scene();
        s.obstacles.push(Obstacle { center: Vec2::new(0.0, 20.0), side: 2.0 });
        assert_eq!(best_physical_path(&s, Vec2::new(0.0, 40.0)).kind, PathKind::None);
    }

    #[test]
    fn zero_duration_gives_empty_trace() {
        let mut s = Scenario::toy_example();
        s.duration_s = 0.0;
        let t = run_scenario(&s).unwrap();
        assert!(t.records.is_empty());
        assert_eq!(t.termination, TerminationReason::RunEnded);
        assert!(t.events().is_empty());
    }

    #[test]
    fn first_iteration_is_not_found() {
        let t = run_scenario(&Scenario::toy_example()).unwrap();
        assert_eq!(t.records[0].feedback, Feedback::NotFound);
        assert_eq!(t.records[0].time_s, 0.0);
    }

    #[test]
    fn same_seed_same_trace() {
        let a = run_scenario(&Scenario::toy_example()).unwrap();
        let b = run_scenario(&Scenario::toy_example()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn step_on_terminated_state_fails() {
        let sim = Simulator::new(Scenario::toy_example()).unwrap();
        let mut st = sim.initial_state();
        st.terminate(TerminationReason::OutOfCoverage);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            sim.step(&st, &sim.initial_memory(), 0.0, &mut rng).unwrap_err(),
            Error::Terminated
        );
    }

    #[test]
    fn trajectory_leaving_coverage_terminates() {
        let mut s = open_scene();
        s.target_start = Vec2::new(20.0, 30.0);
        s.target_velocity = Vec2::new(2.25, 0.0);
        let t = run_scenario(&s).unwrap();
        assert_eq!(t.termination, TerminationReason::OutOfCoverage);
        assert!(t.records.len() < 40);
    }
}
