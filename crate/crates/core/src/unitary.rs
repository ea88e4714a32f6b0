//! Hard-pulse propagation: ideal resonant rotations interleaved with exact
//! free evolution under each atom's detuning.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::state::{AtomParams, Channel, DensityMatrix, PulseSequence, C64};

/// Maximum |U·U† − I| accepted by [`StageUnitary::new`].
pub const UNITARITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageUnitary(Matrix3<C64>);

impl StageUnitary {
    pub fn new(m: Matrix3<C64>) -> Result<Self> {
        let u = Self(m);
        let dev = u.unitarity_error();
        if dev > UNITARITY_TOL || !dev.is_finite() {
            return Err(Error::InvalidPulse(format!(
                "matrix is not unitary (deviation {dev:.3e})"
            )));
        }
        Ok(u)
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<C64> {
        &self.0
    }

    /// max |U·U† − I|.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.0 * self.0.adjoint() - Matrix3::identity();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `self` applied after `first`.
    pub fn then_after(&self, first: &StageUnitary) -> StageUnitary {
        Self(self.0 * first.0)
    }
}

/// Rotation exp(i·area/2·σx) on the channel's two-level subspace.
///
/// Acting on |1⟩ with the optical channel this gives ρ₁₂ = −(i/2)·sin(area).
pub fn pulse_unitary(channel: Channel, area: f64) -> StageUnitary {
    let (a, b) = channel.levels();
    let (s, c) = (0.5 * area).sin_cos();
    let mut m = Matrix3::identity();
    m[(a, a)] = C64::new(c, 0.0);
    m[(b, b)] = C64::new(c, 0.0);
    m[(a, b)] = C64::new(0.0, s);
    m[(b, a)] = C64::new(0.0, s);
    StageUnitary(m)
}

/// diag(1, e^{−iδ·dt}, e^{−iδ_s·dt}): coherences pick up ρ₁₂ → ρ₁₂·e^{+iδ·dt}.
///
/// In the frame rotating with both lasers the spin level carries only its own
/// detuning, so shelved coherence stops accumulating optical phase.
pub fn free_evolution_unitary(atom: &AtomParams, dt: f64) -> StageUnitary {
    let mut m = Matrix3::identity();
    m[(1, 1)] = C64::from_polar(1.0, -atom.delta * dt);
    m[(2, 2)] = C64::from_polar(1.0, -atom.delta_s * dt);
    StageUnitary(m)
}

/// U ρ U†.
pub fn apply_unitary(rho: &DensityMatrix, u: &StageUnitary) -> DensityMatrix {
    DensityMatrix::from_matrix(u.0 * rho.matrix() * u.0.adjoint())
}

/// One emitted trajectory sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub state: DensityMatrix,
    /// `Some(k)` when this is the state immediately after pulse `k`.
    pub after_pulse: Option<usize>,
}

pub type Trajectory = Vec<TrajectoryPoint>;

fn check_hard(seq: &PulseSequence) -> Result<()> {
    if let Some(p) = seq.pulses().iter().find(|p| !p.is_hard()) {
        return Err(Error::FinitePulse {
            t_start: p.t_start,
            duration: p.duration,
        });
    }
    Ok(())
}

fn check_sorted(times: &[f64]) -> Result<()> {
    if let Some(w) = times.windows(2).find(|w| w[1] < w[0]) {
        return Err(Error::UnsortedSequence { at: w[1] });
    }
    Ok(())
}

/// Slack for deciding that a pulse at `t_p` acts before a sample at `t`.
pub(crate) fn time_slack(t: f64) -> f64 {
    1e-9 * t.abs().max(1e-12)
}

/// What a visited state corresponds to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Emit {
    Sample(usize),
    AfterPulse(usize),
}

/// Visits the state at every sample time; a pulse at exactly a sample time
/// acts before that sample. Free evolution is always taken from the last
/// pulse so phase error does not accumulate with the sample count.
pub(crate) fn visit_hard<F>(
    rho0: &DensityMatrix,
    seq: &PulseSequence,
    atom: &AtomParams,
    times: &[f64],
    mut visit: F,
) -> Result<()>
where
    F: FnMut(Emit, f64, &DensityMatrix),
{
    check_hard(seq)?;
    check_sorted(times)?;

    let mut anchor_t = 0.0;
    let mut anchor = *rho0;
    let mut next_pulse = 0;
    let pulses = seq.pulses();

    let advance_to = |t: f64, anchor_t: &mut f64, anchor: &mut DensityMatrix, k: usize| {
        let free = free_evolution_unitary(atom, t - *anchor_t);
        let p = &pulses[k];
        let u = pulse_unitary(p.channel, p.area).then_after(&free);
        *anchor = apply_unitary(anchor, &u);
        *anchor_t = t;
    };

    for (idx, &t) in times.iter().enumerate() {
        while next_pulse < pulses.len() && pulses[next_pulse].t_start <= t + time_slack(t) {
            let tp = pulses[next_pulse].t_start;
            advance_to(tp, &mut anchor_t, &mut anchor, next_pulse);
            visit(Emit::AfterPulse(next_pulse), tp, &anchor);
            next_pulse += 1;
        }
        let state = if t == anchor_t {
            anchor
        } else {
            apply_unitary(&anchor, &free_evolution_unitary(atom, t - anchor_t))
        };
        visit(Emit::Sample(idx), t, &state);
    }
    while next_pulse < pulses.len() {
        let tp = pulses[next_pulse].t_start;
        advance_to(tp, &mut anchor_t, &mut anchor, next_pulse);
        visit(Emit::AfterPulse(next_pulse), tp, &anchor);
        next_pulse += 1;
    }
    Ok(())
}

/// Evolves `rho0` through a hard-pulse sequence, emitting the state at each
/// sample time and right after each pulse, in time order.
pub fn run_sequence_hard(
    rho0: &DensityMatrix,
    seq: &PulseSequence,
    atom: &AtomParams,
    sample_times: &[f64],
) -> Result<Trajectory> {
    let mut out = Vec::with_capacity(sample_times.len() + seq.pulses().len());
    visit_hard(rho0, seq, atom, sample_times, |emit, time, state| {
        out.push(TrajectoryPoint {
            time,
            state: *state,
            after_pulse: match emit {
                Emit::AfterPulse(k) => Some(k),
                Emit::Sample(_) => None,
            },
        });
    })?;
    Ok(out)
}
