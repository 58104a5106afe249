//! Scenario configuration: world geometry, arrays, link parameters and
//! protocol settings for one simulated trajectory.
//!
//! The JSON form mirrors these field names one-to-one. Units are meters,
//! seconds, radians, watts, hertz and dB.

use std::f64::consts::FRAC_PI_3;

use serde::{Deserialize, Serialize};

use crate::array::{make_codebook, ArrayConfig, Codebook};
use crate::detector::{Thresholds, DEFAULT_MEMORY_CAPACITY};
use crate::error::{invalid, Error, Result};
use crate::geometry::{Obstacle, Vec2, Wall};
use crate::protocol::{PowerSchedule, ProtocolLimits};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodebookSpec {
    pub n_narrow: usize,
    /// Codebook sector is `[-half_width, +half_width]` about boresight.
    pub sector_half_width: f64,
    /// Active-element count of each wide tier.
    pub wide_element_counts: Vec<usize>,
}

impl Default for CodebookSpec {
    fn default() -> Self {
        Self {
            n_narrow: 18,
            sector_half_width: FRAC_PI_3,
            wide_element_counts: vec![4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub min: Vec2,
    pub max: Vec2,
}

impl Region {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn center(&self) -> Vec2 {
        (self.min + self.max) * 0.5
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

impl Default for Region {
    fn default() -> Self {
        Self {
            min: Vec2::new(-35.0, 10.0),
            max: Vec2::new(25.0, 60.0),
        }
    }
}

/// Receiver-side and propagation parameters. Transmit power comes from the
/// power schedule and the carrier from the arrays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingLink {
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub rcs_m2: f64,
    /// Extra loss on the wall bounce, dB.
    pub wall_loss_db: f64,
    /// Standard deviation of the dB-domain RESI measurement noise.
    pub resi_noise_std_db: f64,
}

impl Default for SensingLink {
    fn default() -> Self {
        Self {
            bandwidth_hz: 15e3,
            noise_figure_db: 6.0,
            rcs_m2: 1.0,
            wall_loss_db: 3.0,
            resi_noise_std_db: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub tx_array: ArrayConfig,
    pub rx_array: ArrayConfig,
    #[serde(default)]
    pub codebook: CodebookSpec,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub wall: Option<Wall>,
    pub target_start: Vec2,
    pub target_velocity: Vec2,
    pub duration_s: f64,
    pub dt_s: f64,
    pub link: SensingLink,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub power_schedule: PowerSchedule,
    #[serde(default)]
    pub protocol: ProtocolLimits,
    #[serde(default = "default_memory_capacity")]
    pub memory_capacity: usize,
    #[serde(default)]
    pub coverage_region: Region,
    pub rng_seed: u64,
}

fn default_memory_capacity() -> usize {
    DEFAULT_MEMORY_CAPACITY
}

pub const TX_POSITION: Vec2 = Vec2::new(0.0, 0.0);
pub const RX_POSITION: Vec2 = Vec2::new(-40.0, 40.0);
pub const TARGET_SPEED_M_S: f64 = 2.25;

fn gnb(position: Vec2, look_at: Vec2) -> ArrayConfig {
    ArrayConfig {
        num_elements: 16,
        spacing_wavelengths: 0.5,
        carrier_hz: 24e9,
        boresight: (look_at - position).angle(),
        position,
    }
}

impl Scenario {
    /// Two gNBs with 16-element half-wavelength arrays at 24 GHz, both
    /// looking at the center of the coverage region, one obstacle in front
    /// of the receiver and a wall above the scene.
    pub fn toy_example() -> Self {
        let region = Region::default();
        let start = Vec2::new(10.0, 25.0);
        let heading = Vec2::new(-25.0, 55.0) - start;
        Self {
            tx_array: gnb(TX_POSITION, region.center()),
            rx_array: gnb(RX_POSITION, region.center()),
            codebook: CodebookSpec::default(),
            obstacles: vec![Obstacle {
                center: Vec2::new(-20.0, 40.0),
                side: 5.0,
            }],
            wall: Some(Wall {
                endpoint_a: Vec2::new(-30.0, 50.0),
                endpoint_b: Vec2::new(10.0, 50.0),
            }),
            target_start: start,
            target_velocity: heading * (TARGET_SPEED_M_S / heading.norm()),
            duration_s: 20.0,
            dt_s: 0.1,
            link: SensingLink {
                rcs_m2: 32.0,
                wall_loss_db: 14.0,
                ..SensingLink::default()
            },
            thresholds: Thresholds {
                ack_db: 10.0,
                nack_db: 7.0,
            },
            power_schedule: PowerSchedule::default(),
            protocol: ProtocolLimits::default(),
            memory_capacity: DEFAULT_MEMORY_CAPACITY,
            coverage_region: region,
            rng_seed: 7,
        }
    }

    /// Parses JSON and validates. Errors carry the JSON path of the
    /// offending field and, for syntax errors, the line and column.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario =
            serde_path_to_error::deserialize(de).map_err(|e| Error::ScenarioParse {
                path: match e.path().to_string().as_str() {
                    "." | "" => "<root>".to_string(),
                    p => p.to_string(),
                },
                message: e.inner().to_string(),
            })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.tx_array.validate().map_err(|e| prefix("tx_array", e))?;
        self.rx_array.validate().map_err(|e| prefix("rx_array", e))?;
        if self.tx_array.carrier_hz != self.rx_array.carrier_hz {
            return Err(invalid("rx_array.carrier_hz", "must equal tx_array.carrier_hz"));
        }
        for o in &self.obstacles {
            o.validate()?;
        }
        if let Some(w) = &self.wall {
            w.validate()?;
        }
        self.target_start.check_finite("target_start")?;
        self.target_velocity.check_finite("target_velocity")?;
        if !(self.target_velocity.norm() > 0.0) {
            return Err(invalid("target_velocity", "speed must be > 0"));
        }
        if !(self.dt_s.is_finite() && self.dt_s > 0.0) {
            return Err(invalid("dt_s", "must be > 0"));
        }
        if !(self.duration_s.is_finite() && self.duration_s >= 0.0) {
            return Err(invalid("duration_s", "must be >= 0"));
        }
        let l = &self.link;
        for (field, v) in [("link.bandwidth_hz", l.bandwidth_hz), ("link.rcs_m2", l.rcs_m2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(field, format!("must be > 0, got {v}")));
            }
        }
        for (field, v) in [
            ("link.noise_figure_db", l.noise_figure_db),
            ("link.wall_loss_db", l.wall_loss_db),
            ("link.resi_noise_std_db", l.resi_noise_std_db),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(field, format!("must be >= 0, got {v}")));
            }
        }
        self.thresholds.validate()?;
        self.power_schedule.validate()?;
        self.protocol.validate()?;
        if self.memory_capacity == 0 {
            return Err(invalid("memory_capacity", "must be >= 1"));
        }
        let r = &self.coverage_region;
        if !(r.width() > 0.0 && r.height() > 0.0) {
            return Err(invalid("coverage_region", "must have positive width and height"));
        }
        self.codebooks()?;
        Ok(())
    }

    pub fn codebooks(&self) -> Result<(Codebook, Codebook)> {
        let cfg = &self.codebook;
        let sector = (-cfg.sector_half_width, cfg.sector_half_width);
        let tiers = &cfg.wide_element_counts;
        let tx = make_codebook(&self.tx_array, sector, cfg.n_narrow, tiers)
            .map_err(|e| prefix("codebook", e))?;
        let rx = make_codebook(&self.rx_array, sector, cfg.n_narrow, tiers)
            .map_err(|e| prefix("codebook", e))?;
        Ok((tx, rx))
    }

    pub fn target_position(&self, time_s: f64) -> Vec2 {
        self.target_start + self.target_velocity * time_s
    }

    /// Number of sensing iterations, one every `dt_s` starting at t = 0.
    pub fn step_count(&self) -> usize {
        (self.duration_s / self.dt_s + 1e-9).floor() as usize
    }

    pub fn with_obstacle_side(mut self, side: f64) -> Self {
        for o in &mut self.obstacles {
            o.side = side;
        }
        self
    }
}

fn prefix(scope: &'static str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { field, reason } => Error::InvalidParameter {
            field: scope,
            reason: format!("{field}: {reason}"),
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_example_round_trips_through_json() {
        let s = Scenario::toy_example();
        let back = Scenario::from_json_str(&s.to_json_pretty()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn toy_example_speed_matches_table() {
        let s = Scenario::toy_example();
        assert!((s.target_velocity.norm() - 2.25).abs() < 1e-12);
        assert_eq!(s.step_count(), 200);
    }

    #[test]
    fn parse_errors_name_the_field() {
        let mut v: serde_json::Value = serde_json::from_str(&Scenario::toy_example().to_json_pretty()).unwrap();
        v["link"]["rcs_m2"] = serde_json::json!("big");
        let err = Scenario::from_json_str(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("link.rcs_m2"), "{err}");

        let mut v: serde_json::Value = serde_json::from_str(&Scenario::toy_example().to_json_pretty()).unwrap();
        v.as_object_mut().unwrap().remove("dt_s");
        let err = Scenario::from_json_str(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("dt_s"), "{err}");
    }

    #[test]
    fn validation_errors_name_the_field() {
        let mut s = Scenario::toy_example();
        s.dt_s = 0.0;
        let err = Scenario::from_json_str(&s.to_json_pretty()).unwrap_err().to_string();
        assert!(err.contains("dt_s"), "{err}");

        let mut s = Scenario::toy_example();
        s.thresholds.nack_db = 20.0;
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("ack_db"), "{err}");
    }

    #[test]
    fn syntax_error_reports_location() {
        let err = Scenario::from_json_str("{\n  \"dt_s\": 0.1,\n  oops\n}")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn zero_duration_has_no_steps() {
        let mut s = Scenario::toy_example();
        s.duration_s = 0.0;
        s.validate().unwrap();
        assert_eq!(s.step_count(), 0);
    }
}
