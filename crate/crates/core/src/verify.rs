//! Cross-validation suite behind the `verify` subcommand: closed forms vs
//! hard-pulse unitaries vs RK4, the equation-of-motion transcription check and
//! the area-theorem limits.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::Matrix3;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::analytic::{after_c2, after_r1, after_r2_cdr, stage_chain, StageAreas};
use crate::area::{propagate_area, PropagationConfig};
use crate::ode::{integrate_sequence, rhs, DriveSample};
use crate::state::{
    ground_state, max_element_distance, AtomParams, Channel, DensityMatrix, Pulse, PulseSequence,
    C64,
};
use crate::unitary::run_sequence_hard;

/// sin(0.1π)/2.
pub const CANONICAL_COHERENCE: f64 = 0.154_508_497_187_473_7;
/// sin²(0.05π).
pub const CANONICAL_EXCITED: f64 = 0.024_471_741_852_423_2;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

fn check(id: u8, name: &'static str, worst: f64, tol: f64) -> CheckResult {
    CheckResult {
        id,
        name,
        passed: worst <= tol,
        detail: format!("max deviation {worst:.3e} (tolerance {tol:.0e})"),
    }
}

fn chain_deviation(phi_d: f64, expected: [f64; 5]) -> f64 {
    stage_chain(&StageAreas::with_data(phi_d))
        .iter()
        .zip(expected)
        .map(|((_, s), want)| (s.rho12().im - want).abs())
        .fold(0.0, f64::max)
}

pub fn check_stage_values() -> CheckResult {
    let c = CANONICAL_COHERENCE;
    let mut worst = chain_deviation(0.1 * PI, [-c, c, 0.0, -c, c]);
    let last = after_r2_cdr(0.1 * PI, PI, PI, PI, PI);
    worst = worst
        .max(last.rho33().abs())
        .max((last.rho22() - CANONICAL_EXCITED).abs());
    check(1, "stage values (canonical areas)", worst, 1e-9)
}

pub fn check_half_pi_chain() -> CheckResult {
    let worst = chain_deviation(0.5 * PI, [-0.5, 0.5, 0.0, -0.5, 0.5]);
    check(2, "pi/2 data pulse sign chain", worst, 1e-9)
}

pub fn check_recovery() -> CheckResult {
    let d = 0.1 * PI;
    let r1 = after_r1(d, PI);
    let mut worst: f64 = 0.0;
    for (c1, c2) in [(PI, 3.0 * PI), (2.0 * PI, 2.0 * PI), (0.3, 4.0 * PI - 0.3)] {
        worst = worst.max(max_element_distance(&after_c2(d, PI, c1, c2), &r1));
    }
    for (c1, c2) in [(PI, PI), (0.5 * PI, 1.5 * PI)] {
        let s = after_c2(d, PI, c1, c2);
        worst = worst.max((s.rho12() + r1.rho12()).norm());
    }
    check(
        3,
        "control-pair recovery (4pi) and inversion (2pi)",
        worst,
        1e-12,
    )
}

const US: f64 = 1e-6;

/// Canonical controlled sequence with 1 µs pulses (hard when `duration` is 0).
pub fn canonical_cdr_sequence(duration: f64) -> PulseSequence {
    let starts = [0.0, 10.0, 12.0, 16.0, 30.0];
    let channels = [
        Channel::Optical12,
        Channel::Optical12,
        Channel::Control23,
        Channel::Control23,
        Channel::Optical12,
    ];
    let areas = [0.1 * PI, PI, PI, PI, PI];
    let pulses = starts
        .iter()
        .zip(channels)
        .zip(areas)
        .map(|((&t, ch), a)| Pulse::new(ch, a, t * US, duration).expect("valid pulse"))
        .collect();
    PulseSequence::new(pulses, 32.0 * US).expect("valid sequence")
}

pub fn check_engine_equivalence() -> CheckResult {
    let analytic = after_r2_cdr(0.1 * PI, PI, PI, PI, PI);
    let atom = AtomParams::resonant();
    let hard = run_sequence_hard(
        &ground_state(),
        &canonical_cdr_sequence(0.0),
        &atom,
        &[32.0 * US],
    )
    .map(|t| t.last().expect("non-empty").state);
    let ode = integrate_sequence(
        &ground_state(),
        &canonical_cdr_sequence(US),
        &atom,
        1e-9,
        1000,
    );

    let (hard, ode) = match (hard, ode) {
        (Ok(h), Ok(o)) => (h, o),
        (h, o) => {
            return CheckResult {
                id: 4,
                name: "analytic / unitary / RK4 agreement",
                passed: false,
                detail: format!("engine error: {:?} {:?}", h.err(), o.err()),
            }
        }
    };
    let final_ode = ode.last().expect("non-empty").state;
    let worst_state = max_element_distance(&analytic, &hard)
        .max(max_element_distance(&analytic, &final_ode))
        .max(max_element_distance(&hard, &final_ode));
    let drift = ode
        .iter()
        .map(|p| {
            (p.state.trace().re - 1.0)
                .abs()
                .max((p.state.purity() - 1.0).abs())
        })
        .fold(0.0, f64::max);
    CheckResult {
        id: 4,
        name: "analytic / unitary / RK4 agreement",
        passed: worst_state <= 1e-8 && drift <= 1e-9,
        detail: format!("max element deviation {worst_state:.3e} (tolerance 1e-8), trace/purity drift {drift:.3e} (tolerance 1e-9)"),
    }
}

/// −i[H, ρ] with H = −½[[0, Ω_j, 0], [Ω_j, 0, Ω_k], [0, Ω_k, 0]].
pub fn commutator_rhs(rho: &DensityMatrix, drive: DriveSample) -> Matrix3<C64> {
    let z = C64::new(0.0, 0.0);
    let j = C64::new(-0.5 * drive.omega_j, 0.0);
    let k = C64::new(-0.5 * drive.omega_k, 0.0);
    let h = Matrix3::new(z, j, z, j, z, k, z, k, z);
    let m = rho.matrix();
    (h * m - m * h) * C64::new(0.0, -1.0)
}

/// Random mixed state: convex combination of three random pure states.
pub fn random_state<R: Rng>(rng: &mut R) -> DensityMatrix {
    let mut acc = Matrix3::<C64>::zeros();
    let weights: [f64; 3] = [rng.random(), rng.random(), rng.random()];
    let total: f64 = weights.iter().sum();
    for w in weights {
        let psi =
            [0, 1, 2].map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        acc += DensityMatrix::from_amplitudes(psi).into_matrix() * C64::new(w / total, 0.0);
    }
    DensityMatrix::from_matrix(acc)
}

pub fn check_rhs_transcription() -> CheckResult {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let rho = random_state(&mut rng);
        let drive = DriveSample {
            omega_j: rng.random_range(-2.0..2.0),
            omega_k: rng.random_range(-2.0..2.0),
        };
        let got = rhs(&rho, drive, &AtomParams::resonant());
        let want = commutator_rhs(&rho, drive);
        worst = worst.max((got - want).iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    check(
        5,
        "equation-of-motion transcription vs commutator",
        worst,
        1e-14,
    )
}

pub fn check_area_theorem() -> CheckResult {
    let beer = propagate_area(&PropagationConfig {
        phi0: 0.01,
        alpha: 1.0,
        z_max: 2.0,
        dz: 1e-3,
    });
    let fixed = propagate_area(&PropagationConfig {
        phi0: PI,
        alpha: 1.0,
        z_max: 2.0,
        dz: 1e-3,
    });
    let (beer, fixed) = match (beer, fixed) {
        (Ok(b), Ok(f)) => (b, f),
        _ => {
            return CheckResult {
                id: 8,
                name: "area theorem",
                passed: false,
                detail: "propagation failed".into(),
            }
        }
    };
    let expected = 0.01 * (-1.0f64).exp();
    let rel = (beer.last().expect("non-empty").1 - expected).abs() / expected;
    let drift = fixed
        .iter()
        .map(|(_, p)| (p - PI).abs())
        .fold(0.0, f64::max);
    CheckResult {
        id: 8,
        name: "area theorem",
        passed: rel <= 0.01 && drift <= 1e-12,
        detail: format!("Beer's-law relative error {rel:.3e} (tolerance 1e-2), pi drift {drift:.3e} (tolerance 1e-12)"),
    }
}

/// Runs every check in order.
pub fn run_verification() -> Vec<CheckResult> {
    vec![
        check_stage_values(),
        check_half_pi_chain(),
        check_recovery(),
        check_engine_equivalence(),
        check_rhs_transcription(),
        check_area_theorem(),
    ]
}
