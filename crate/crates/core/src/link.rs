//! Bistatic radar echo power, receiver noise and the derived RESI test
//! statistic, plus the Friis SNR seen by a UE riding on the target.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const BOLTZMANN_J_PER_K: f64 = 1.380649e-23;
pub const REFERENCE_TEMPERATURE_K: f64 = 290.0;
pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

/// Value reported instead of `-inf` when no echo reaches the receiver.
pub const RESI_FLOOR_DB: f64 = -300.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub tx_power_w: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    /// Target radar cross-section, m².
    pub rcs_m2: f64,
    pub carrier_hz: f64,
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |field, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(field, format!("must be > 0, got {v}")))
            }
        };
        positive("tx_power_w", self.tx_power_w)?;
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("rcs_m2", self.rcs_m2)?;
        positive("carrier_hz", self.carrier_hz)?;
        if !(self.noise_figure_db.is_finite() && self.noise_figure_db >= 0.0) {
            return Err(invalid("noise_figure_db", "must be >= 0"));
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT_M_S / self.carrier_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Direct,
    WallReflected,
    None,
}

impl PathKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PathKind::Direct => "DIRECT",
            PathKind::WallReflected => "WALL_REFLECTED",
            PathKind::None => "NONE",
        }
    }
}

/// Echo geometry for one target position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathInfo {
    pub kind: PathKind,
    pub range_tx_to_target: f64,
    /// For a wall bounce this is the full target → wall → Rx length.
    pub range_target_to_rx: f64,
    /// World-frame direction from Tx toward the target.
    pub angle_at_tx: f64,
    /// World-frame direction from Rx toward the target, or toward the
    /// reflection point for a wall bounce.
    pub angle_at_rx: f64,
}

impl PathInfo {
    pub fn none() -> Self {
        Self {
            kind: PathKind::None,
            range_tx_to_target: 0.0,
            range_target_to_rx: 0.0,
            angle_at_tx: 0.0,
            angle_at_rx: 0.0,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Thermal noise `k·T0·B·F`.
pub fn noise_power(bandwidth_hz: f64, noise_figure_db: f64) -> Result<f64> {
    if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
        return Err(invalid("bandwidth_hz", format!("must be > 0, got {bandwidth_hz}")));
    }
    Ok(BOLTZMANN_J_PER_K * REFERENCE_TEMPERATURE_K * bandwidth_hz * db_to_linear(noise_figure_db))
}

/// Bistatic radar equation: `Pt·Gt·Gr·λ²·σ / ((4π)³·r_tx²·r_rx²)`.
pub fn bistatic_echo_power(
    params: &LinkParams,
    gain_tx: f64,
    gain_rx: f64,
    r_tx: f64,
    r_rx: f64,
) -> Result<f64> {
    if !(r_tx > 0.0) {
        return Err(invalid("r_tx", format!("range must be > 0, got {r_tx}")));
    }
    if !(r_rx > 0.0) {
        return Err(invalid("r_rx", format!("range must be > 0, got {r_rx}")));
    }
    if gain_tx < 0.0 || gain_rx < 0.0 {
        return Err(invalid("gain", "gains must be >= 0"));
    }
    let lambda = params.wavelength_m();
    let four_pi_cubed = (4.0 * PI).powi(3);
    Ok(params.tx_power_w * gain_tx * gain_rx * lambda * lambda * params.rcs_m2
        / (four_pi_cubed * r_tx * r_tx * r_rx * r_rx))
}

/// Echo-to-noise ratio in dB, floored at [`RESI_FLOOR_DB`].
pub fn resi(echo_power_w: f64, noise_power_w: f64) -> Result<f64> {
    if !(noise_power_w > 0.0) {
        return Err(invalid("noise_power_w", "must be > 0"));
    }
    if echo_power_w < 0.0 {
        return Err(invalid("echo_power_w", "must be >= 0"));
    }
    if echo_power_w == 0.0 {
        return Ok(RESI_FLOOR_DB);
    }
    Ok(linear_to_db(echo_power_w / noise_power_w).max(RESI_FLOOR_DB))
}

/// Friis SNR at an isotropic UE, dB.
pub fn ue_snr(params: &LinkParams, gain_tx_toward_ue: f64, distance_m: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(invalid("distance_m", format!("must be > 0, got {distance_m}")));
    }
    let lambda = params.wavelength_m();
    let spreading = 4.0 * PI * distance_m;
    let received = params.tx_power_w * gain_tx_toward_ue * lambda * lambda / (spreading * spreading);
    let noise = noise_power(params.bandwidth_hz, params.noise_figure_db)?;
    if received == 0.0 {
        return Ok(RESI_FLOOR_DB);
    }
    Ok(linear_to_db(received / noise))
}

/// Noise-free RESI plus a zero-mean Gaussian perturbation in dB. Draws
/// exactly one normal sample per call.
pub fn measure_resi<R: Rng + ?Sized>(noise_free_db: f64, std_db: f64, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    noise_free_db + std_db * z
}
