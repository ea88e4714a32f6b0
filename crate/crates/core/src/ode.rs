//! Fixed-step RK4 integration of the three-level density-matrix equations
//! for square finite-duration pulses, with detuning and optional diagonal
//! decay.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::state::{AtomParams, Channel, DensityMatrix, Pulse, PulseSequence, C64};
use crate::unitary::{apply_unitary, pulse_unitary, time_slack, Emit, Trajectory, TrajectoryPoint};

/// Instantaneous Rabi frequencies (rad/s) on the two transitions.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DriveSample {
    /// |1⟩ ↔ |2⟩.
    pub omega_j: f64,
    /// |2⟩ ↔ |3⟩.
    pub omega_k: f64,
}

impl DriveSample {
    pub const OFF: DriveSample = DriveSample {
        omega_j: 0.0,
        omega_k: 0.0,
    };

    pub fn of_pulse(p: &Pulse) -> Self {
        let omega = p.rabi_frequency();
        match p.channel {
            Channel::Optical12 => DriveSample {
                omega_j: omega,
                omega_k: 0.0,
            },
            Channel::Control23 => DriveSample {
                omega_j: 0.0,
                omega_k: omega,
            },
        }
    }
}

/// dρ/dt for a Hermitian ρ.
///
/// Written element by element: the six independent elements follow from
/// H = −½[[0, Ω_j, 0], [Ω_j, 0, Ω_k], [0, Ω_k, 0]] + diag(0, δ, δ_s)
/// and the anticommutator decay −½{Γ, ρ}; the lower triangle is filled
/// by conjugation.
pub fn rhs(rho: &DensityMatrix, drive: DriveSample, atom: &AtomParams) -> Matrix3<C64> {
    let i = C64::new(0.0, 1.0);
    let hj = 0.5 * drive.omega_j;
    let hk = 0.5 * drive.omega_k;
    let [g1, g2, g3] = atom.gamma.0;

    let r11 = rho.at(0, 0);
    let r22 = rho.at(1, 1);
    let r33 = rho.at(2, 2);
    let r12 = rho.at(0, 1);
    let r13 = rho.at(0, 2);
    let r23 = rho.at(1, 2);
    let r21 = rho.at(1, 0);
    let r32 = rho.at(2, 1);

    let d11 = -i * hj * (r12 - r21) - g1 * r11;
    let d22 = -i * hj * (r21 - r12) - i * hk * (r23 - r32) - g2 * r22;
    let d33 = -i * hk * (r32 - r23) - g3 * r33;
    let d12 = -i * hj * (r11 - r22) - i * hk * r13 + i * atom.delta * r12 - 0.5 * (g1 + g2) * r12;
    let d13 = -i * hk * r12 + i * hj * r23 + i * atom.delta_s * r13 - 0.5 * (g1 + g3) * r13;
    let d23 = -i * hk * (r22 - r33) + i * hj * r13
        - i * (atom.delta - atom.delta_s) * r23
        - 0.5 * (g2 + g3) * r23;

    Matrix3::new(
        d11,
        d12,
        d13,
        d12.conj(),
        d22,
        d23,
        d13.conj(),
        d23.conj(),
        d33,
    )
}

/// One classical RK4 step of length `dt`, followed by re-symmetrization.
pub fn rk4_step<F>(
    rho: &DensityMatrix,
    t: f64,
    dt: f64,
    drive: F,
    atom: &AtomParams,
) -> Result<DensityMatrix>
where
    F: Fn(f64) -> DriveSample,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidStep(dt));
    }
    let y = *rho.matrix();
    let h = C64::new(dt, 0.0);
    let half = C64::new(0.5 * dt, 0.0);
    let f = |m: Matrix3<C64>, tt: f64| rhs(&DensityMatrix::from_matrix(m), drive(tt), atom);

    let k1 = f(y, t);
    let k2 = f(y + k1 * half, t + 0.5 * dt);
    let k3 = f(y + k2 * half, t + 0.5 * dt);
    let k4 = f(y + k3 * h, t + dt);
    let next = y + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * (h / 6.0);

    let out = DensityMatrix::from_matrix(next).symmetrized();
    if !out.is_finite() {
        return Err(Error::NonFiniteState { t: t + dt });
    }
    Ok(out)
}

fn shortest_finite_duration(seq: &PulseSequence) -> Option<f64> {
    seq.pulses()
        .iter()
        .filter(|p| !p.is_hard())
        .map(|p| p.duration)
        .reduce(f64::min)
}

/// Checks `dt` against the sequence: positive and at most 1/100 of the
/// shortest finite pulse.
pub fn check_step(seq: &PulseSequence, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidStep(dt));
    }
    if let Some(d) = shortest_finite_duration(seq) {
        let limit = d / 100.0;
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::StepTooCoarse { dt, limit });
        }
    }
    Ok(())
}

/// Which pulse (if any) drives the open interval around `t_mid`.
fn drive_at(pulses: &[Pulse], t_mid: f64) -> DriveSample {
    pulses
        .iter()
        .find(|p| !p.is_hard() && p.t_start < t_mid && t_mid < p.t_end())
        .map(DriveSample::of_pulse)
        .unwrap_or(DriveSample::OFF)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Mark {
    /// Hard pulse `k` is applied here, before any sample at the same time.
    HardPulse(usize),
    PulseEnd(usize),
    Sample(usize),
}

/// Integrates through `seq`, visiting the state at each sample time and after
/// each pulse. Zero-duration pulses are applied as exact rotations; finite
/// pulses and free evolution are stepped with RK4 using equal sub-steps no
/// longer than `dt` between consecutive event times.
pub(crate) fn visit_ode<F>(
    rho0: &DensityMatrix,
    seq: &PulseSequence,
    atom: &AtomParams,
    dt: f64,
    times: &[f64],
    mut visit: F,
) -> Result<()>
where
    F: FnMut(Emit, f64, &DensityMatrix),
{
    check_step(seq, dt)?;
    if let Some(w) = times.windows(2).find(|w| w[1] < w[0]) {
        return Err(Error::UnsortedSequence { at: w[1] });
    }
    let pulses = seq.pulses();

    let mut marks: Vec<(f64, Mark)> = Vec::with_capacity(times.len() + 2 * pulses.len());
    for (k, p) in pulses.iter().enumerate() {
        if p.is_hard() {
            marks.push((p.t_start, Mark::HardPulse(k)));
        } else {
            marks.push((p.t_end(), Mark::PulseEnd(k)));
        }
    }
    marks.extend(times.iter().enumerate().map(|(i, &t)| (t, Mark::Sample(i))));
    // stable: pulses before samples at equal times
    marks.sort_by(|a, b| a.0.total_cmp(&b.0));

    // finite pulse starts are breakpoints too
    let starts: Vec<f64> = pulses
        .iter()
        .filter(|p| !p.is_hard())
        .map(|p| p.t_start)
        .collect();

    let mut t = 0.0;
    let mut rho = *rho0;
    let mut next_start = 0;
    for (tm, mark) in marks {
        while next_start < starts.len() && starts[next_start] < tm {
            rho = advance(&rho, t, starts[next_start], dt, pulses, atom)?;
            t = t.max(starts[next_start]);
            next_start += 1;
        }
        if tm > t + time_slack(tm) {
            rho = advance(&rho, t, tm, dt, pulses, atom)?;
            t = tm;
        }
        match mark {
            Mark::HardPulse(k) => {
                rho = apply_unitary(&rho, &pulse_unitary(pulses[k].channel, pulses[k].area));
                visit(Emit::AfterPulse(k), tm, &rho);
            }
            Mark::PulseEnd(k) => visit(Emit::AfterPulse(k), tm, &rho),
            Mark::Sample(i) => visit(Emit::Sample(i), tm, &rho),
        }
    }
    Ok(())
}

/// RK4 from `t0` to `t1` with equal sub-steps of at most `dt`.
fn advance(
    rho: &DensityMatrix,
    t0: f64,
    t1: f64,
    dt: f64,
    pulses: &[Pulse],
    atom: &AtomParams,
) -> Result<DensityMatrix> {
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(*rho);
    }
    let n = ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let mut out = *rho;
    for step in 0..n {
        let ts = t0 + step as f64 * h;
        let drive = drive_at(pulses, ts + 0.5 * h);
        out = rk4_step(&out, ts, h, |_| drive, atom)?;
    }
    Ok(out)
}

/// Integrates a sequence and samples every `stride` steps of `dt` on the
/// grid k·dt, plus `t_end` and the state right after each pulse.
pub fn integrate_sequence(
    rho0: &DensityMatrix,
    seq: &PulseSequence,
    atom: &AtomParams,
    dt: f64,
    stride: usize,
) -> Result<Trajectory> {
    check_step(seq, dt)?;
    let stride = stride.max(1);
    let every = dt * stride as f64;
    let mut times: Vec<f64> = (0..)
        .map(|k| k as f64 * every)
        .take_while(|&t| t < seq.t_end() - time_slack(seq.t_end()))
        .collect();
    times.push(seq.t_end());

    let mut out = Vec::with_capacity(times.len() + seq.pulses().len());
    visit_ode(rho0, seq, atom, dt, &times, |emit, time, state| {
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
