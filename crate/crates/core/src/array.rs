//! Uniform linear array with uniform weights, and the narrow/wide beam
//! codebook each node sweeps over.
//!
//! Gains are linear power gains normalized so that a beam's peak equals its
//! number of active elements. Wide beams switch off trailing elements, which
//! both widens the main lobe and lowers the peak.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub num_elements: usize,
    pub spacing_wavelengths: f64,
    pub carrier_hz: f64,
    /// Array normal in the world frame, radians.
    pub boresight: f64,
    pub position: Vec2,
}

impl ArrayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_elements == 0 {
            return Err(invalid("num_elements", "must be >= 1"));
        }
        if !(self.spacing_wavelengths.is_finite() && self.spacing_wavelengths > 0.0) {
            return Err(invalid("spacing_wavelengths", "must be > 0"));
        }
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return Err(invalid("carrier_hz", "must be > 0"));
        }
        if !self.boresight.is_finite() {
            return Err(invalid("boresight", "must be finite"));
        }
        self.position.check_finite("position")
    }

    /// Angle of a world-frame direction relative to boresight, wrapped to (-π, π].
    pub fn relative_angle(&self, world_angle: f64) -> f64 {
        wrap_angle(world_angle - self.boresight)
    }

    pub fn narrow_beam(&self, steer_angle: f64) -> Beam {
        Beam {
            steer_angle,
            active_elements: self.num_elements,
        }
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    /// Relative to boresight, radians.
    pub steer_angle: f64,
    pub active_elements: usize,
}

/// `|AF|² / M` for a uniformly weighted sub-aperture of `beam.active_elements`.
pub fn array_gain(config: &ArrayConfig, beam: &Beam, angle: f64) -> f64 {
    let m = beam.active_elements.max(1);
    let phase_step = TAU * config.spacing_wavelengths * (angle.sin() - beam.steer_angle.sin());
    let (mut re, mut im) = (0.0_f64, 0.0_f64);
    for n in 0..m {
        let (s, c) = (phase_step * n as f64).sin_cos();
        re += c;
        im += s;
    }
    (re * re + im * im) / m as f64
}

/// Gain toward a world-frame direction; zero behind the array plane.
pub fn gain_toward(config: &ArrayConfig, beam: &Beam, world_angle: f64) -> f64 {
    let rel = config.relative_angle(world_angle);
    if rel.abs() > FRAC_PI_2 {
        0.0
    } else {
        array_gain(config, beam, rel)
    }
}

/// Width of the contiguous half-power interval around the steering angle,
/// clipped to the front half-plane.
pub fn beamwidth_3db(config: &ArrayConfig, beam: &Beam) -> f64 {
    let half = beam.active_elements as f64 / 2.0;
    let above = |a: f64| array_gain(config, beam, a) >= half;
    let edge = |dir: f64| -> f64 {
        const STEP: f64 = 1e-3;
        let limit = dir * FRAC_PI_2;
        let mut inside = beam.steer_angle;
        loop {
            let next = inside + dir * STEP;
            if (next - limit) * dir >= 0.0 {
                return if above(limit) {
                    limit
                } else {
                    bisect(inside, limit, &above)
                };
            }
            if !above(next) {
                return bisect(inside, next, &above);
            }
            inside = next;
        }
    };
    edge(1.0) - edge(-1.0)
}

/// `inside` satisfies the predicate, `outside` does not.
fn bisect(mut inside: f64, mut outside: f64, pred: &impl Fn(f64) -> bool) -> f64 {
    while (outside - inside).abs() > 1e-10 {
        let mid = 0.5 * (inside + outside);
        if pred(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    0.5 * (inside + outside)
}

/// Narrow beams followed by wide beams. Beam indices used throughout the
/// simulator address this combined list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub narrow_beams: Vec<Beam>,
    pub wide_beams: Vec<Beam>,
    pub sector: (f64, f64),
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.narrow_beams.len() + self.wide_beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn beam(&self, index: usize) -> Option<&Beam> {
        let n = self.narrow_beams.len();
        if index < n {
            self.narrow_beams.get(index)
        } else {
            self.wide_beams.get(index - n)
        }
    }

    pub fn is_wide(&self, index: usize) -> bool {
        index >= self.narrow_beams.len() && index < self.len()
    }

    pub fn narrow_indices(&self) -> Vec<usize> {
        (0..self.narrow_beams.len()).collect()
    }

    pub fn wide_indices(&self) -> Vec<usize> {
        (self.narrow_beams.len()..self.len()).collect()
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }

    /// Index of the wide beam steered closest to boresight; falls back to the
    /// central narrow beam when there is no wide tier.
    pub fn central_wide_index(&self) -> usize {
        let pick = |beams: &[Beam], offset: usize| {
            beams
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.steer_angle.abs().total_cmp(&b.1.steer_angle.abs()))
                .map(|(i, _)| i + offset)
        };
        pick(&self.wide_beams, self.narrow_beams.len())
            .or_else(|| pick(&self.narrow_beams, 0))
            .unwrap_or(0)
    }

    pub fn contains_angle(&self, relative_angle: f64) -> bool {
        relative_angle >= self.sector.0 && relative_angle <= self.sector.1
    }
}

fn sine_grid(count: usize, sector: (f64, f64)) -> Vec<f64> {
    let (s0, s1) = (sector.0.sin(), sector.1.sin());
    if count == 1 {
        return vec![(0.5 * (s0 + s1)).asin()];
    }
    (0..count)
        .map(|i| (s0 + (s1 - s0) * i as f64 / (count - 1) as f64).asin())
        .collect()
}

/// Builds narrow beams on a uniform-in-sine grid across `sector`, and one
/// coarser grid per wide tier. A tier with `m` active elements gets
/// `ceil(n_narrow * m / M)` beams so its overlap matches the narrow tier.
pub fn make_codebook(
    config: &ArrayConfig,
    sector: (f64, f64),
    n_narrow: usize,
    wide_element_counts: &[usize],
) -> Result<Codebook> {
    config.validate()?;
    if n_narrow == 0 {
        return Err(invalid("n_narrow", "must be >= 1"));
    }
    if !(sector.1 > sector.0) {
        return Err(invalid("sector", "max angle must exceed min angle"));
    }
    if sector.0 <= -FRAC_PI_2 || sector.1 >= FRAC_PI_2 {
        return Err(invalid("sector", "must lie strictly within ±π/2 of boresight"));
    }
    let full = config.num_elements;
    let narrow_beams = sine_grid(n_narrow, sector)
        .into_iter()
        .map(|steer_angle| Beam {
            steer_angle,
            active_elements: full,
        })
        .collect();

    let mut wide_beams = Vec::new();
    for &m in wide_element_counts {
        if m == 0 || m > full {
            return Err(invalid(
                "wide_element_counts",
                format!("entries must be in 1..={full}, got {m}"),
            ));
        }
        let count = (n_narrow * m).div_ceil(full).max(1);
        wide_beams.extend(sine_grid(count, sector).into_iter().map(|steer_angle| Beam {
            steer_angle,
            active_elements: m,
        }));
    }

    Ok(Codebook {
        narrow_beams,
        wide_beams,
        sector,
    })
}
