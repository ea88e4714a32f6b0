//! Closed-form stage solutions for a resonant atom with no decay.
//!
//! On resonance only accumulated pulse areas matter, so every function here
//! takes areas (radians) rather than times. Notation used in comments:
//! `A = φ_D + φ_R1` (optical area before the control pair) and
//! `C = φ_C1 + φ_C2` (total control area).
//!
//! After R₂ the state is written through its amplitudes
//! ψ = (ψ₁, i·ψ₂, ψ₃) with real ψ₁, ψ₂, ψ₃:
//!
//! ```text
//! ψ₁ = cos(R/2)cos(A/2) − cos(C/2) sin(R/2) sin(A/2)
//! ψ₂ = sin(R/2)cos(A/2) + cos(C/2) cos(R/2) sin(A/2)
//! ψ₃ = −sin(C/2) sin(A/2)
//! ```
//!
//! which yields all six independent elements, including ρ₁₃ and ρ₂₃.

use std::fmt;

use nalgebra::Matrix3;

use crate::state::{DensityMatrix, C64};

/// Pulse areas of the five-pulse protocol, radians. Stages ignore areas they
/// do not use.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageAreas {
    pub phi_d: f64,
    pub phi_r1: f64,
    pub phi_c1: f64,
    pub phi_c2: f64,
    pub phi_r2: f64,
}

impl StageAreas {
    /// φ_D = 0.1π, every other pulse π.
    pub fn canonical() -> Self {
        Self::with_data(0.1 * std::f64::consts::PI)
    }

    /// Given data area, every other pulse π.
    pub fn with_data(phi_d: f64) -> Self {
        let pi = std::f64::consts::PI;
        Self {
            phi_d,
            phi_r1: pi,
            phi_c1: pi,
            phi_c2: pi,
            phi_r2: pi,
        }
    }

    pub fn zero() -> Self {
        Self {
            phi_d: 0.0,
            phi_r1: 0.0,
            phi_c1: 0.0,
            phi_c2: 0.0,
            phi_r2: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.phi_d,
            self.phi_r1,
            self.phi_c1,
            self.phi_c2,
            self.phi_r2,
        ]
        .iter()
        .all(|a| a.is_finite())
    }
}

impl Default for StageAreas {
    fn default() -> Self {
        Self::canonical()
    }
}

/// Protocol stage after which a state is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stage {
    Data,
    R1,
    C1,
    C2,
    /// Second rephasing pulse of the full controlled sequence.
    R2,
}

impl Stage {
    pub const CHAIN: [Stage; 5] = [Stage::Data, Stage::R1, Stage::C1, Stage::C2, Stage::R2];

    pub fn label(self) -> &'static str {
        match self {
            Stage::Data => "D",
            Stage::R1 => "R1",
            Stage::C1 => "C1",
            Stage::C2 => "C2",
            Stage::R2 => "R2",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn from_elements(r11: f64, r22: f64, r33: f64, r12: C64, r13: C64, r23: C64) -> DensityMatrix {
    let m = Matrix3::new(
        C64::new(r11, 0.0),
        r12,
        r13,
        r12.conj(),
        C64::new(r22, 0.0),
        r23,
        r13.conj(),
        r23.conj(),
        C64::new(r33, 0.0),
    );
    DensityMatrix::from_matrix(m)
}

/// Two-level rotation of the ground state by total optical area `a`.
fn optical_rotation(a: f64) -> DensityMatrix {
    let zero = C64::new(0.0, 0.0);
    let half = 0.5 * a;
    from_elements(
        half.cos().powi(2),
        half.sin().powi(2),
        0.0,
        C64::new(0.0, -0.5 * a.sin()),
        zero,
        zero,
    )
}

/// State after the data pulse.
pub fn after_data(phi_d: f64) -> DensityMatrix {
    optical_rotation(phi_d)
}

/// After the first rephasing pulse; areas simply add on resonance.
pub fn after_r1(phi_d: f64, phi_r1: f64) -> DensityMatrix {
    optical_rotation(phi_d + phi_r1)
}

/// Bare double rephasing (no control pair).
pub fn after_r2_dr(phi_d: f64, phi_r1: f64, phi_r2: f64) -> DensityMatrix {
    optical_rotation(phi_d + phi_r1 + phi_r2)
}

/// Control pair of total area `c` applied to the post-R₁ state.
fn control_rotation(a: f64, c: f64) -> DensityMatrix {
    let sa2 = (0.5 * a).sin().powi(2);
    let (sc, cc) = (0.5 * c).sin_cos();
    from_elements(
        (0.5 * a).cos().powi(2),
        cc * cc * sa2,
        sc * sc * sa2,
        C64::new(0.0, -0.5 * cc * a.sin()),
        C64::new(-0.5 * sc * a.sin(), 0.0),
        C64::new(0.0, -0.5 * c.sin() * sa2),
    )
}

/// After the first control pulse: ρ₁₂ scaled by cos(φ_C1/2), shelved part in ρ₁₃.
pub fn after_c1(phi_d: f64, phi_r1: f64, phi_c1: f64) -> DensityMatrix {
    control_rotation(phi_d + phi_r1, phi_c1)
}

/// After the second control pulse: ρ₁₂ scaled by cos((φ_C1+φ_C2)/2).
pub fn after_c2(phi_d: f64, phi_r1: f64, phi_c1: f64, phi_c2: f64) -> DensityMatrix {
    control_rotation(phi_d + phi_r1, phi_c1 + phi_c2)
}

/// Final state of the controlled double-rephasing sequence.
pub fn after_r2_cdr(
    phi_d: f64,
    phi_r1: f64,
    phi_c1: f64,
    phi_c2: f64,
    phi_r2: f64,
) -> DensityMatrix {
    let (sa, ca) = (0.5 * (phi_d + phi_r1)).sin_cos();
    let (sc, cc) = (0.5 * (phi_c1 + phi_c2)).sin_cos();
    let (sr, cr) = (0.5 * phi_r2).sin_cos();

    let psi1 = cr * ca - cc * sr * sa;
    let psi2 = sr * ca + cc * cr * sa;
    let psi3 = -sc * sa;

    from_elements(
        psi1 * psi1,
        psi2 * psi2,
        psi3 * psi3,
        C64::new(0.0, -psi1 * psi2),
        C64::new(psi1 * psi3, 0.0),
        C64::new(0.0, psi2 * psi3),
    )
}

/// Evaluates one stage from a full set of areas.
pub fn stage_state(stage: Stage, a: &StageAreas) -> DensityMatrix {
    match stage {
        Stage::Data => after_data(a.phi_d),
        Stage::R1 => after_r1(a.phi_d, a.phi_r1),
        Stage::C1 => after_c1(a.phi_d, a.phi_r1, a.phi_c1),
        Stage::C2 => after_c2(a.phi_d, a.phi_r1, a.phi_c1, a.phi_c2),
        Stage::R2 => after_r2_cdr(a.phi_d, a.phi_r1, a.phi_c1, a.phi_c2, a.phi_r2),
    }
}

/// The five stage states D → R₁ → C₁ → C₂ → R₂.
pub fn stage_chain(areas: &StageAreas) -> Vec<(Stage, DensityMatrix)> {
    Stage::CHAIN
        .iter()
        .map(|&s| (s, stage_state(s, areas)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{ground_state, max_element_distance, validate};
    use std::f64::consts::PI;

    const TOL: f64 = 1e-9;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn data_pulse_examples() {
        assert!(max_element_distance(&after_data(0.0), &ground_state()) < 1e-15);

        let s = after_data(PI / 2.0);
        assert!(close(s.rho12().im, -0.5, 1e-15));
        assert!(close(s.rho11(), 0.5, 1e-15));
        assert!(close(s.rho22(), 0.5, 1e-15));

        // sin²(0.05π), sin(0.1π)/2
        let s = after_data(0.1 * PI);
        assert!(close(s.rho22(), 0.024471741852423, 1e-12));
        assert!(close(s.rho12().im, -0.154508497187474, 1e-12));
        assert_eq!(s.rho12().re, 0.0);
    }

    #[test]
    fn r1_examples() {
        assert!(close(
            after_r1(0.1 * PI, PI).rho12().im,
            0.154508497187474,
            TOL
        ));
        assert!(max_element_distance(&after_r1(0.1 * PI, 0.0), &after_data(0.1 * PI)) < 1e-15);
        let s = after_r1(PI / 2.0, PI);
        assert!(close(s.rho12().im, 0.5, 1e-15));
        assert!(close(s.rho22(), 0.5, 1e-15));
    }

    #[test]
    fn bare_double_rephasing_is_absorptive() {
        let s = after_r2_dr(0.1 * PI, PI, PI);
        assert!(close(s.rho12().im, -0.154508497187474, TOL));
        assert!(close(s.rho22(), 0.024471741852423, TOL));
        assert!(
            max_element_distance(&after_r2_dr(0.1 * PI, PI, 0.0), &after_r1(0.1 * PI, PI)) < 1e-15
        );
        assert!(close(after_r2_dr(PI / 2.0, PI, PI).rho12().im, -0.5, 1e-15));
    }

    #[test]
    fn c1_shelves_coherence_into_spin() {
        let s = after_c1(0.1 * PI, PI, PI);
        assert!(s.rho12().norm() < 1e-15);
        assert!(s.rho22().abs() < 1e-15);
        assert!(close(s.rho13().re, 0.154508497187474, TOL));
        assert!(s.rho13().im.abs() < 1e-15);
        assert!(close(s.rho33(), 0.975528258147577, TOL));

        assert!(
            max_element_distance(&after_c1(0.1 * PI, PI, 0.0), &after_r1(0.1 * PI, PI)) < 1e-15
        );

        let s = after_c1(PI / 2.0, PI, PI);
        assert!(close(s.rho13().norm(), 0.5, 1e-15));
        assert!(s.rho12().norm() < 1e-15);
    }

    #[test]
    fn c2_round_trip_inverts_and_recovers() {
        let s = after_c2(0.1 * PI, PI, PI, PI);
        assert!(close(s.rho12().im, -0.154508497187474, TOL));
        assert!(s.rho33().abs() < 1e-15);

        let r1 = after_r1(0.1 * PI, PI);
        assert!(max_element_distance(&after_c2(0.1 * PI, PI, PI, 3.0 * PI), &r1) < 1e-12);
        assert!(max_element_distance(&after_c2(0.1 * PI, PI, 0.0, 0.0), &r1) < 1e-15);
    }

    #[test]
    fn cdr_final_state_is_emissive_without_inversion() {
        let s = after_r2_cdr(0.1 * PI, PI, PI, PI, PI);
        assert!(close(s.rho12().im, 0.154508497187474, TOL));
        assert!(close(s.rho22(), 0.024471741852423, TOL));
        assert!(s.rho33().abs() < TOL);

        let c2 = after_c2(0.1 * PI, PI, PI, PI);
        assert!(max_element_distance(&after_r2_cdr(0.1 * PI, PI, PI, PI, 0.0), &c2) < 1e-15);

        assert!(close(
            after_r2_cdr(PI / 2.0, PI, PI, PI, PI).rho12().im,
            0.5,
            1e-15
        ));
    }

    #[test]
    fn chain_sign_sequences() {
        let signs = |phi_d: f64| -> Vec<f64> {
            stage_chain(&StageAreas::with_data(phi_d))
                .iter()
                .map(|(_, s)| s.rho12().im)
                .collect()
        };
        let want = [
            -0.154508497187474,
            0.154508497187474,
            0.0,
            -0.154508497187474,
            0.154508497187474,
        ];
        for (got, want) in signs(0.1 * PI).iter().zip(want) {
            assert!(close(*got, want, TOL), "{got} vs {want}");
        }
        for (got, want) in signs(PI / 2.0).iter().zip([-0.5, 0.5, 0.0, -0.5, 0.5]) {
            assert!(close(*got, want, TOL));
        }
        for (_, s) in stage_chain(&StageAreas::zero()) {
            assert!(max_element_distance(&s, &ground_state()) < 1e-15);
        }
    }

    #[test]
    fn every_stage_state_is_valid_on_area_grid() {
        let grid: Vec<f64> = (0..=16).map(|k| k as f64 * PI / 4.0).collect();
        for &d in &grid[..5] {
            for &r1 in &grid {
                for &c in &grid {
                    let a = StageAreas {
                        phi_d: d,
                        phi_r1: r1,
                        phi_c1: c,
                        phi_c2: 0.7 * c,
                        phi_r2: r1 + 0.3,
                    };
                    for (st, s) in stage_chain(&a) {
                        assert!(validate(&s).is_ok(), "{st} at {a:?}: {}", validate(&s));
                    }
                }
            }
        }
    }
}
