//! Inhomogeneously broadened ensemble: macroscopic polarization, echo-time
//! prediction by phase accounting, and echo detection/classification.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ode::visit_ode;
use crate::state::{ground_state, AtomParams, Channel, PulseSequence, C64};
use crate::unitary::{visit_hard, Emit};

/// Gaussian inhomogeneous line sampled on a uniform symmetric grid.
///
/// The uniform grid makes the ensemble response periodic: the polarization
/// revives every 2π/Δδ where Δδ = 2·span·σ/(n_atoms − 1). Sequences must keep
/// every phase offset well below that period.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleSpec {
    /// Gaussian standard deviation of δ, rad/s.
    pub sigma: f64,
    pub n_atoms: usize,
    /// Grid half-width in units of `sigma`.
    pub span: f64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            sigma: 2.0 * PI * 1e6,
            n_atoms: 201,
            span: 5.0,
        }
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidEnsemble(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if self.n_atoms < 3 || self.n_atoms.is_multiple_of(2) {
            return Err(Error::InvalidEnsemble(format!(
                "n_atoms must be odd and >= 3, got {}",
                self.n_atoms
            )));
        }
        if !(self.span.is_finite() && self.span >= 0.0) {
            return Err(Error::InvalidEnsemble(format!(
                "span must be >= 0, got {}",
                self.span
            )));
        }
        Ok(())
    }

    /// Spacing of the detuning grid, rad/s.
    pub fn grid_spacing(&self) -> f64 {
        2.0 * self.span * self.sigma / (self.n_atoms - 1) as f64
    }

    /// Revival period 2π/Δδ of the discretized line (infinite for span 0).
    pub fn revival_period(&self) -> f64 {
        2.0 * PI / self.grid_spacing()
    }

    /// Sampling step resolving the fastest ensemble beat: 1/(40·span·σ/2π).
    pub fn default_time_step(&self) -> f64 {
        1.0 / (40.0 * self.span.max(1.0) * self.sigma / (2.0 * PI))
    }
}

/// Detunings −span·σ … +span·σ with normalized Gaussian weights.
pub fn build_ensemble(spec: &EnsembleSpec) -> Result<Vec<(AtomParams, f64)>> {
    spec.validate()?;
    let n = spec.n_atoms;
    let half = (n / 2) as i64;
    let step = spec.grid_spacing();
    let raw: Vec<(f64, f64)> = (-half..=half)
        .map(|k| {
            let delta = k as f64 * step;
            let x = delta / spec.sigma;
            (delta, (-0.5 * x * x).exp())
        })
        .collect();
    let total: f64 = raw.iter().map(|(_, w)| w).sum();
    Ok(raw
        .into_iter()
        .map(|(delta, w)| (AtomParams::detuned(delta), w / total))
        .collect())
}

/// Uniform sample times 0, dt, 2dt, … up to and including `t_end`.
pub fn time_grid(t_end: f64, dt: f64) -> Vec<f64> {
    let n = (t_end / dt * (1.0 + 1e-12)).floor() as usize;
    (0..=n).map(|k| k as f64 * dt).collect()
}

/// Propagation engine used per atom.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Engine {
    Hard,
    /// RK4 with maximum step `dt` seconds.
    Ode {
        dt: f64,
    },
}

/// Ensemble-averaged observables on the sample grid.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleTrace {
    pub times: Vec<f64>,
    /// P(t) = Σ w_i ρ₁₂⁽ⁱ⁾(t).
    pub polarization: Vec<C64>,
    pub rho11: Vec<f64>,
    pub rho22: Vec<f64>,
    pub rho33: Vec<f64>,
}

impl EnsembleTrace {
    fn zeros(times: &[f64]) -> Self {
        let n = times.len();
        Self {
            times: times.to_vec(),
            polarization: vec![C64::new(0.0, 0.0); n],
            rho11: vec![0.0; n],
            rho22: vec![0.0; n],
            rho33: vec![0.0; n],
        }
    }

    fn accumulate(&mut self, other: &AtomTrace, w: f64) {
        for (i, s) in other.iter().enumerate() {
            self.polarization[i] += s.0 * w;
            self.rho11[i] += s.1 * w;
            self.rho22[i] += s.2 * w;
            self.rho33[i] += s.3 * w;
        }
    }

    /// Index of the sample closest to `t`.
    pub fn index_near(&self, t: f64) -> Option<usize> {
        (0..self.times.len()).min_by(|&a, &b| {
            (self.times[a] - t)
                .abs()
                .total_cmp(&(self.times[b] - t).abs())
        })
    }
}

type AtomTrace = Vec<(C64, f64, f64, f64)>;

fn atom_trace(
    seq: &PulseSequence,
    atom: &AtomParams,
    times: &[f64],
    engine: Engine,
) -> Result<AtomTrace> {
    let mut out = vec![(C64::new(0.0, 0.0), 0.0, 0.0, 0.0); times.len()];
    let record = |emit: Emit, _t: f64, s: &crate::state::DensityMatrix| {
        if let Emit::Sample(i) = emit {
            out[i] = (s.rho12(), s.rho11(), s.rho22(), s.rho33());
        }
    };
    match engine {
        Engine::Hard => visit_hard(&ground_state(), seq, atom, times, record)?,
        Engine::Ode { dt } => visit_ode(&ground_state(), seq, atom, dt, times, record)?,
    }
    Ok(out)
}

/// Atoms integrated concurrently per chunk; the reduction always runs in
/// atom order so results do not depend on the thread count.
const CHUNK: usize = 16;

/// Weighted ensemble sum of ρ₁₂ and populations at each sample time.
pub fn simulate_polarization(
    seq: &PulseSequence,
    spec: &EnsembleSpec,
    times: &[f64],
    engine: Engine,
) -> Result<EnsembleTrace> {
    let atoms = build_ensemble(spec)?;
    simulate_atoms(seq, &atoms, times, engine)
}

/// Same as [`simulate_polarization`] for an explicit list of weighted atoms.
pub fn simulate_atoms(
    seq: &PulseSequence,
    atoms: &[(AtomParams, f64)],
    times: &[f64],
    engine: Engine,
) -> Result<EnsembleTrace> {
    let mut acc = EnsembleTrace::zeros(times);
    for chunk in atoms.chunks(CHUNK) {
        let traces: Vec<Result<AtomTrace>> = chunk
            .par_iter()
            .map(|(atom, _)| atom_trace(seq, atom, times, engine))
            .collect();
        for (trace, (_, w)) in traces.into_iter().zip(chunk) {
            acc.accumulate(&trace?, *w);
        }
    }
    Ok(acc)
}

fn area_class(area: f64) -> Option<u8> {
    // 0 → multiple of 2π, 1 → odd multiple of π
    let r = area.rem_euclid(2.0 * PI);
    let tol = 1e-9;
    if r < tol || 2.0 * PI - r < tol {
        Some(0)
    } else if (r - PI).abs() < tol {
        Some(1)
    } else {
        None
    }
}

/// Echo times from phase accounting.
///
/// s(t) = ∂arg ρ₁₂/∂δ starts at 0 with the data pulse (the first optical
/// pulse that is not a multiple of π), grows at unit rate while the
/// coherence is optical, flips sign at each optical π pulse and freezes
/// while a control π pulse has shelved it in the spin level. Every zero of
/// s(t) after the first rephasing pulse, up to `t_end`, is an echo.
pub fn predict_echo_times(seq: &PulseSequence) -> Result<Vec<f64>> {
    let mut echoes = Vec::new();
    let mut excited = false;
    let mut rephased = false;
    let mut shelved = false;
    let mut s = 0.0;
    let mut t_prev = 0.0;

    let mut run_until =
        |t: f64, s: &mut f64, t_prev: &mut f64, excited: bool, rephased: bool, shelved: bool| {
            let len = t - *t_prev;
            if excited && !shelved && len > 0.0 {
                if rephased && *s < 0.0 && *s + len >= 0.0 {
                    echoes.push(*t_prev - *s);
                }
                *s += len;
            }
            *t_prev = t;
        };

    for p in seq.pulses() {
        let t = p.t_start + 0.5 * p.duration;
        run_until(t, &mut s, &mut t_prev, excited, rephased, shelved);
        let class = area_class(p.area);
        match p.channel {
            Channel::Optical12 if !excited => {
                if class.is_none() {
                    excited = true;
                    s = 0.0;
                }
            }
            Channel::Optical12 => match class {
                Some(1) => {
                    s = -s;
                    rephased = true;
                }
                Some(_) => {}
                None => return Err(Error::NonCanonicalArea { area: p.area }),
            },
            Channel::Control23 => match class {
                Some(1) => shelved = !shelved,
                Some(_) => {}
                None => return Err(Error::NonCanonicalArea { area: p.area }),
            },
        }
    }
    run_until(seq.t_end(), &mut s, &mut t_prev, excited, rephased, shelved);
    Ok(echoes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EchoLabel {
    E1,
    E2,
    Other,
}

impl fmt::Display for EchoLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EchoLabel::E1 => "E1",
            EchoLabel::E2 => "E2",
            EchoLabel::Other => "other",
        })
    }
}

/// Im P > 0 radiates, Im P < 0 re-absorbs like the data pulse.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EchoKind {
    Emissive,
    Absorptive,
}

impl EchoKind {
    pub fn sign(self) -> i8 {
        match self {
            EchoKind::Emissive => 1,
            EchoKind::Absorptive => -1,
        }
    }
}

impl fmt::Display for EchoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EchoKind::Emissive => "emissive",
            EchoKind::Absorptive => "absorptive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EchoEvent {
    pub time: f64,
    pub index: usize,
    /// Peak |P|.
    pub amplitude: f64,
    pub polarization: C64,
    pub kind: EchoKind,
    pub label: EchoLabel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EchoReport {
    pub events: Vec<EchoEvent>,
    pub times: Vec<f64>,
    pub polarization: Vec<C64>,
}

impl EchoReport {
    pub fn event(&self, label: EchoLabel) -> Option<&EchoEvent> {
        self.events.iter().find(|e| e.label == label)
    }
}

impl fmt::Display for EchoReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.events.is_empty() {
            return writeln!(f, "no echoes detected");
        }
        for e in &self.events {
            writeln!(
                f,
                "{} {} t={:.6} us |P|={:.6e} ImP={:+.6e}",
                e.label,
                e.kind,
                e.time * 1e6,
                e.amplitude,
                e.polarization.im
            )?;
        }
        Ok(())
    }
}

/// Default detection threshold as a fraction of max |P|.
pub const DEFAULT_THRESHOLD: f64 = 0.2;

/// Finds interior local maxima of |P| above `threshold · max|P|`, away from
/// pulses, and labels them against [`predict_echo_times`].
///
/// Samples inside a pulse, or within one sample step after it, are skipped:
/// the free-induction signal right after a pulse peaks at the pulse edge.
pub fn detect_echoes(
    times: &[f64],
    polarization: &[C64],
    seq: &PulseSequence,
    threshold: f64,
) -> EchoReport {
    let n = times.len().min(polarization.len());
    let mag: Vec<f64> = polarization[..n].iter().map(|p| p.norm()).collect();
    let peak = mag.iter().copied().fold(0.0, f64::max);
    let mut report = EchoReport {
        events: Vec::new(),
        times: times[..n].to_vec(),
        polarization: polarization[..n].to_vec(),
    };
    if n < 3 || peak <= 0.0 {
        return report;
    }
    let level = threshold * peak;
    let predicted = predict_echo_times(seq).unwrap_or_default();

    for i in 1..n - 1 {
        let step = times[i + 1] - times[i];
        let t = times[i];
        let near_pulse = seq
            .pulses()
            .iter()
            .any(|p| t >= p.t_start - 1e-9 * step && t <= p.t_end() + step * (1.0 + 1e-9));
        if near_pulse || mag[i] < level || mag[i] < mag[i - 1] || mag[i] <= mag[i + 1] {
            continue;
        }
        let label = predicted
            .iter()
            .position(|&te| (te - t).abs() <= 3.0 * step * (1.0 + 1e-9))
            .map(|k| match k {
                0 => EchoLabel::E1,
                1 => EchoLabel::E2,
                _ => EchoLabel::Other,
            })
            .unwrap_or(EchoLabel::Other);
        let p = polarization[i];
        report.events.push(EchoEvent {
            time: t,
            index: i,
            amplitude: mag[i],
            polarization: p,
            kind: if p.im > 0.0 {
                EchoKind::Emissive
            } else {
                EchoKind::Absorptive
            },
            label,
        });
    }
    report
}
