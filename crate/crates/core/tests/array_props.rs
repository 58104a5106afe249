use std::f64::consts::{FRAC_PI_3, PI};

use earq_core::array::{array_gain, beamwidth_3db, make_codebook, ArrayConfig, Beam};
use earq_core::geometry::Vec2;
use proptest::prelude::*;

fn ula(m: usize) -> ArrayConfig {
    ArrayConfig {
        num_elements: m,
        spacing_wavelengths: 0.5,
        carrier_hz: 24e9,
        boresight: 0.0,
        position: Vec2::ZERO,
    }
}

/// Closed-form uniform array factor `sin²(Mψ/2) / (M sin²(ψ/2))`.
fn closed_form_gain(m: usize, d: f64, steer: f64, angle: f64) -> f64 {
    let psi = 2.0 * PI * d * (angle.sin() - steer.sin());
    let den = (psi / 2.0).sin();
    if den.abs() < 1e-12 {
        return m as f64;
    }
    let num = (m as f64 * psi / 2.0).sin();
    num * num / (m as f64 * den * den)
}

/// Half-power half-width found by bisection on the closed form.
fn closed_form_half_width(m: usize) -> f64 {
    let half = m as f64 / 2.0;
    let (mut lo, mut hi) = (0.0_f64, PI / m as f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if closed_form_gain(m, 0.5, 0.0, mid) >= half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[test]
fn broadside_width_of_sixteen_elements() {
    let cfg = ula(16);
    let w = beamwidth_3db(&cfg, &cfg.narrow_beam(0.0));
    let oracle = 2.0 * closed_form_half_width(16);
    assert!((w - oracle).abs() < 1e-6, "{w} vs {oracle}");
    // textbook approximation 0.886 λ / (M d)
    assert!((w - 0.1108).abs() / 0.1108 < 0.05, "{w}");
}

#[test]
fn peak_gain_equals_active_elements_for_every_beam() {
    let cb = make_codebook(&ula(16), (-FRAC_PI_3, FRAC_PI_3), 18, &[4, 8]).unwrap();
    for i in cb.all_indices() {
        let b = cb.beam(i).unwrap();
        let g = array_gain(&ula(16), b, b.steer_angle);
        assert!((g - b.active_elements as f64).abs() < 1e-9, "beam {i}: {g}");
    }
}

#[test]
fn sixteen_versus_four_elements_is_six_db() {
    let cfg = ula(16);
    let wide = Beam {
        steer_angle: 0.0,
        active_elements: 4,
    };
    let diff = 10.0 * (array_gain(&cfg, &cfg.narrow_beam(0.0), 0.0) / array_gain(&cfg, &wide, 0.0)).log10();
    assert!((diff - 6.0206).abs() < 0.01, "{diff}");
}

#[test]
fn every_sector_angle_is_within_some_half_power_beam() {
    let cfg = ula(16);
    let sector = (-FRAC_PI_3, FRAC_PI_3);
    let cb = make_codebook(&cfg, sector, 18, &[4]).unwrap();
    let n = 10_000;
    for k in 0..=n {
        let a = sector.0 + (sector.1 - sector.0) * k as f64 / n as f64;
        for tier in [cb.narrow_indices(), cb.wide_indices()] {
            let covered = tier.iter().any(|&i| {
                let b = cb.beam(i).unwrap();
                array_gain(&cfg, b, a) >= b.active_elements as f64 / 2.0
            });
            assert!(covered, "angle {a} not covered");
        }
    }
}

#[test]
fn wide_tier_is_wider_than_narrow_tier() {
    let cfg = ula(16);
    let narrow = beamwidth_3db(&cfg, &cfg.narrow_beam(0.0));
    let wide = beamwidth_3db(
        &cfg,
        &Beam {
            steer_angle: 0.0,
            active_elements: 4,
        },
    );
    assert!(wide > 3.5 * narrow, "{wide} vs {narrow}");
}

proptest! {
    #[test]
    fn gain_matches_closed_form(m in 1usize..33, steer in -1.2..1.2_f64, angle in -1.5..1.5_f64) {
        let cfg = ula(m);
        let b = Beam { steer_angle: steer, active_elements: m };
        let g = array_gain(&cfg, &b, angle);
        prop_assert!((g - closed_form_gain(m, 0.5, steer, angle)).abs() < 1e-9 * m as f64);
        prop_assert!(g <= m as f64 + 1e-9);
        prop_assert!(g >= 0.0);
    }

    #[test]
    fn gain_is_mirror_symmetric(steer in -1.2..1.2_f64, angle in -1.5..1.5_f64) {
        let cfg = ula(16);
        let g = array_gain(&cfg, &cfg.narrow_beam(steer), angle);
        let h = array_gain(&cfg, &cfg.narrow_beam(-steer), -angle);
        prop_assert!((g - h).abs() < 1e-9);
    }
}
