//! Pulse-area propagation through an absorber, dφ/dz = −(α/2)·sin φ.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagationConfig {
    /// Input area, radians.
    pub phi0: f64,
    /// Absorption coefficient, 1/length.
    pub alpha: f64,
    pub z_max: f64,
    pub dz: f64,
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidPropagation(m.to_string()));
        if !self.phi0.is_finite() {
            return bad("phi0 must be finite");
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad("alpha must be >= 0");
        }
        if !(self.dz.is_finite() && self.dz > 0.0) {
            return bad("dz must be > 0");
        }
        if !(self.z_max.is_finite() && self.z_max >= 0.0) {
            return bad("z_max must be >= 0");
        }
        Ok(())
    }
}

fn slope(alpha: f64, phi: f64) -> f64 {
    -0.5 * alpha * phi.sin()
}

/// RK4 solution sampled at every step, `(z, φ(z))`, ending exactly at `z_max`.
pub fn propagate_area(config: &PropagationConfig) -> Result<Vec<(f64, f64)>> {
    config.validate()?;
    let PropagationConfig {
        phi0,
        alpha,
        z_max,
        dz,
    } = *config;
    let n = ((z_max / dz) * (1.0 - 1e-12)).ceil() as usize;
    let h = if n == 0 { 0.0 } else { z_max / n as f64 };

    let mut out = Vec::with_capacity(n + 1);
    let mut phi = phi0;
    out.push((0.0, phi));
    for k in 0..n {
        let k1 = slope(alpha, phi);
        let k2 = slope(alpha, phi + 0.5 * h * k1);
        let k3 = slope(alpha, phi + 0.5 * h * k2);
        let k4 = slope(alpha, phi + h * k3);
        phi += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        out.push(((k + 1) as f64 * h, phi));
    }
    Ok(out)
}

/// Small-area limit φ₀·e^{−αz/2}.
pub fn beer_law(phi0: f64, alpha: f64, z: f64) -> f64 {
    phi0 * (-0.5 * alpha * z).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn run(phi0: f64, alpha: f64, z_max: f64) -> Vec<(f64, f64)> {
        propagate_area(&PropagationConfig {
            phi0,
            alpha,
            z_max,
            dz: 1e-3,
        })
        .unwrap()
    }

    #[test]
    fn fixed_points_are_stationary() {
        for phi0 in [0.0, PI, 2.0 * PI] {
            let max_dev = run(phi0, 1.0, 5.0)
                .iter()
                .map(|(_, p)| (p - phi0).abs())
                .fold(0.0, f64::max);
            assert!(max_dev <= 1e-12, "phi0={phi0}: {max_dev}");
        }
    }

    #[test]
    fn beer_law_limit() {
        let out = run(0.01, 1.0, 2.0);
        let (z, phi) = *out.last().unwrap();
        assert_eq!(z, 2.0);
        let expected = 0.01 * (-1.0f64).exp();
        assert!(((phi - expected) / expected).abs() < 0.01);
    }

    #[test]
    fn pi_is_unstable_zero_is_stable() {
        let above = run(PI + 0.01, 1.0, 10.0).last().unwrap().1;
        let below = run(PI - 0.01, 1.0, 10.0).last().unwrap().1;
        assert!(above - PI > 0.01);
        assert!(PI - below > 0.01);
        assert!(run(0.01, 1.0, 10.0).last().unwrap().1 < 0.01 * 0.01);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = PropagationConfig {
            phi0: 0.1,
            alpha: 1.0,
            z_max: 1.0,
            dz: 0.1,
        };
        assert!(propagate_area(&PropagationConfig {
            alpha: -1.0,
            ..base
        })
        .is_err());
        assert!(propagate_area(&PropagationConfig { dz: 0.0, ..base }).is_err());
        assert!(propagate_area(&PropagationConfig {
            z_max: -1.0,
            ..base
        })
        .is_err());
        assert_eq!(
            propagate_area(&PropagationConfig { z_max: 0.0, ..base }).unwrap(),
            vec![(0.0, 0.1)]
        );
    }

    proptest! {
        #[test]
        fn monotone_decay_below_pi(phi0 in 1e-3f64..(PI - 1e-3), alpha in 0.1f64..3.0) {
            let out = propagate_area(&PropagationConfig { phi0, alpha, z_max: 5.0, dz: 1e-2 }).unwrap();
            for w in out.windows(2) {
                prop_assert!(w[1].1 < w[0].1);
                prop_assert!(w[1].1 > 0.0);
            }
        }

        #[test]
        fn small_area_tracks_beer_law(phi0 in 1e-4f64..0.01, az in 0.0f64..5.0) {
            let out = propagate_area(&PropagationConfig { phi0, alpha: 1.0, z_max: az, dz: 1e-2 }).unwrap();
            let (z, phi) = *out.last().unwrap();
            let expected = beer_law(phi0, 1.0, z);
            prop_assert!(((phi - expected) / expected).abs() <= 0.01);
        }
    }
}
