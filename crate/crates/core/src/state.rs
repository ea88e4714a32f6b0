//! Density-matrix and protocol data types shared by every engine.
//!
//! Basis order is fixed everywhere: index 0 is the ground level |1⟩, index 1
//! the optically excited level |2⟩ and index 2 the auxiliary spin level |3⟩.
//! Public accessors take 1-based level numbers so that `coherence(1, 2)` reads
//! as ρ₁₂.

use std::fmt;

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::error::Error;

/// Maximum allowed |ρ_ij − conj(ρ_ji)|.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Maximum allowed |tr ρ − 1|.
pub const TRACE_TOL: f64 = 1e-10;
/// Smallest eigenvalue allowed before a state counts as non-positive.
pub const MIN_EIGENVALUE: f64 = -1e-9;

pub type C64 = Complex64;

/// 3×3 density matrix of a single atom.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(Matrix3<C64>);

impl DensityMatrix {
    /// Wraps a raw matrix without checking any invariant; see [`validate`].
    pub fn from_matrix(m: Matrix3<C64>) -> Self {
        Self(m)
    }

    /// Pure state |ψ⟩⟨ψ| from (unnormalized) amplitudes.
    pub fn from_amplitudes(psi: [C64; 3]) -> Self {
        let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        let m = Matrix3::from_fn(|i, j| psi[i] * psi[j].conj() / norm);
        Self(m)
    }

    /// All population in level `level` (1-based).
    pub fn basis_state(level: usize) -> Result<Self, Error> {
        let idx = level_index(level)?;
        let mut m = Matrix3::zeros();
        m[(idx, idx)] = C64::new(1.0, 0.0);
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix3<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix3<C64> {
        self.0
    }

    /// Element ρ_ij with 1-based level numbers.
    pub fn element(&self, i: usize, j: usize) -> Result<C64, Error> {
        Ok(self.0[(level_index(i)?, level_index(j)?)])
    }

    /// Off-diagonal element ρ_ij (1-based, i ≠ j).
    pub fn coherence(&self, i: usize, j: usize) -> Result<C64, Error> {
        if i == j {
            return Err(Error::LevelIndex { i, j });
        }
        self.element(i, j)
    }

    /// Population ρ_ii of level `i` (1-based).
    pub fn population(&self, i: usize) -> Result<f64, Error> {
        Ok(self.element(i, i)?.re)
    }

    // 0-based shortcuts used by the engines and the table writers.
    pub(crate) fn at(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn rho11(&self) -> f64 {
        self.0[(0, 0)].re
    }

    pub fn rho22(&self) -> f64 {
        self.0[(1, 1)].re
    }

    pub fn rho33(&self) -> f64 {
        self.0[(2, 2)].re
    }

    pub fn rho12(&self) -> C64 {
        self.0[(0, 1)]
    }

    pub fn rho13(&self) -> C64 {
        self.0[(0, 2)]
    }

    pub fn rho23(&self) -> C64 {
        self.0[(1, 2)]
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// tr(ρ²); 1 for pure states.
    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    /// Replaces ρ with (ρ + ρ†)/2.
    pub fn symmetrized(&self) -> Self {
        Self((self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl fmt::Display for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..3 {
            let row: Vec<String> = (0..3)
                .map(|j| {
                    let z = self.0[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

fn level_index(level: usize) -> Result<usize, Error> {
    if (1..=3).contains(&level) {
        Ok(level - 1)
    } else {
        Err(Error::LevelIndex { i: level, j: level })
    }
}

/// All atoms start here: ρ₁₁ = 1.
pub fn ground_state() -> DensityMatrix {
    let mut m = Matrix3::zeros();
    m[(0, 0)] = C64::new(1.0, 0.0);
    DensityMatrix(m)
}

/// Which invariant of [`DensityMatrix`] was broken.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InvariantKind {
    Hermiticity,
    Trace,
    Positivity,
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Violation {
    pub kind: InvariantKind,
    /// Measured deviation: max |ρ_ij − conj ρ_ji|, |tr ρ − 1| or −λ_min.
    pub magnitude: f64,
}

/// Outcome of [`validate`]; always carries the measured deviations.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub hermiticity: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violation(&self, kind: InvariantKind) -> Option<&Violation> {
        self.violations.iter().find(|v| v.kind == kind)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("{:?}={:.3e}", v.kind, v.magnitude))
            .collect();
        write!(f, "violated: {}", parts.join(", "))
    }
}

/// Checks hermiticity, unit trace and positive semidefiniteness.
pub fn validate(rho: &DensityMatrix) -> ValidationReport {
    let m = rho.matrix();
    let mut violations = Vec::new();
    if !rho.is_finite() {
        violations.push(Violation {
            kind: InvariantKind::NonFinite,
            magnitude: f64::INFINITY,
        });
        return ValidationReport {
            hermiticity: f64::NAN,
            trace_error: f64::NAN,
            min_eigenvalue: f64::NAN,
            violations,
        };
    }

    let mut hermiticity: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            hermiticity = hermiticity.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    let trace_error = (m.trace() - C64::new(1.0, 0.0)).norm();
    // eigenvalues of the Hermitian part
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let min_eigenvalue = herm
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);

    if hermiticity > HERMITICITY_TOL {
        violations.push(Violation {
            kind: InvariantKind::Hermiticity,
            magnitude: hermiticity,
        });
    }
    if trace_error > TRACE_TOL {
        violations.push(Violation {
            kind: InvariantKind::Trace,
            magnitude: trace_error,
        });
    }
    if min_eigenvalue < MIN_EIGENVALUE {
        violations.push(Violation {
            kind: InvariantKind::Positivity,
            magnitude: -min_eigenvalue,
        });
    }
    ValidationReport {
        hermiticity,
        trace_error,
        min_eigenvalue,
        violations,
    }
}

/// max_ij |a_ij − b_ij|.
pub fn max_element_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    a.matrix()
        .iter()
        .zip(b.matrix().iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Transition a pulse drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    /// |1⟩ ↔ |2⟩ optical transition (data and rephasing pulses).
    Optical12,
    /// |2⟩ ↔ |3⟩ control transition.
    Control23,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Optical12 => "optical12",
            Channel::Control23 => "control23",
        }
    }

    /// 0-based indices of the coupled pair.
    pub(crate) fn levels(self) -> (usize, usize) {
        match self {
            Channel::Optical12 => (0, 1),
            Channel::Control23 => (1, 2),
        }
    }
}

impl std::str::FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "optical12" => Ok(Channel::Optical12),
            "control23" => Ok(Channel::Control23),
            other => Err(Error::UnknownChannel(other.to_string())),
        }
    }
}

/// One square drive segment. `duration == 0` is an instantaneous hard pulse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pulse {
    pub channel: Channel,
    /// Pulse area ∫Ω dt in radians.
    pub area: f64,
    /// Seconds.
    pub t_start: f64,
    /// Seconds.
    pub duration: f64,
}

impl Pulse {
    pub fn new(channel: Channel, area: f64, t_start: f64, duration: f64) -> Result<Self, Error> {
        if !area.is_finite() {
            return Err(Error::InvalidPulse(format!("area {area} is not finite")));
        }
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Error::InvalidPulse(format!(
                "duration {duration} must be >= 0"
            )));
        }
        if !(t_start.is_finite() && t_start >= 0.0) {
            return Err(Error::InvalidPulse(format!(
                "t_start {t_start} must be >= 0"
            )));
        }
        Ok(Self {
            channel,
            area,
            t_start,
            duration,
        })
    }

    pub fn hard(channel: Channel, area: f64, t_start: f64) -> Result<Self, Error> {
        Self::new(channel, area, t_start, 0.0)
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }

    pub fn is_hard(&self) -> bool {
        self.duration == 0.0
    }

    /// Constant Rabi frequency of the square envelope; infinite for hard pulses.
    pub fn rabi_frequency(&self) -> f64 {
        if self.is_hard() {
            f64::INFINITY
        } else {
            self.area / self.duration
        }
    }
}

/// Ordered pulses plus the end of the observation window.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSequence {
    pulses: Vec<Pulse>,
    t_end: f64,
}

impl PulseSequence {
    pub fn new(pulses: Vec<Pulse>, t_end: f64) -> Result<Self, Error> {
        for w in pulses.windows(2) {
            if w[1].t_start < w[0].t_start {
                return Err(Error::UnsortedSequence { at: w[1].t_start });
            }
            if w[1].t_start < w[0].t_end() {
                return Err(Error::OverlappingPulses {
                    first_end: w[0].t_end(),
                    second_start: w[1].t_start,
                });
            }
        }
        let last_end = pulses.iter().map(Pulse::t_end).fold(0.0, f64::max);
        if !(t_end.is_finite() && t_end >= last_end) {
            return Err(Error::WindowTooShort { t_end, last_end });
        }
        Ok(Self { pulses, t_end })
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn all_hard(&self) -> bool {
        self.pulses.iter().all(Pulse::is_hard)
    }
}

/// Per-level diagonal decay rates (1/s).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DecayRates(pub [f64; 3]);

/// Parameters of one ensemble member.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AtomParams {
    /// Optical detuning of |2⟩, rad/s.
    pub delta: f64,
    /// Detuning of the spin level |3⟩, rad/s.
    pub delta_s: f64,
    pub gamma: DecayRates,
}

impl AtomParams {
    pub fn resonant() -> Self {
        Self::default()
    }

    pub fn detuned(delta: f64) -> Self {
        Self {
            delta,
            ..Self::default()
        }
    }

    pub fn with_decay(mut self, gamma: [f64; 3]) -> Result<Self, Error> {
        if gamma.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::InvalidDecay(gamma));
        }
        self.gamma = DecayRates(gamma);
        Ok(self)
    }
}
