use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("level indices ({i}, {j}) must be distinct and within 1..=3")]
    LevelIndex { i: usize, j: usize },

    #[error("unknown channel `{0}` (expected optical12 or control23)")]
    UnknownChannel(String),

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("pulses not sorted by start time (pulse at t={at})")]
    UnsortedSequence { at: f64 },

    #[error("pulses overlap: previous ends at {first_end}, next starts at {second_start}")]
    OverlappingPulses { first_end: f64, second_start: f64 },

    #[error("t_end={t_end} precedes the last pulse end {last_end}")]
    WindowTooShort { t_end: f64, last_end: f64 },

    #[error("decay rates must be finite and non-negative, got {0:?}")]
    InvalidDecay([f64; 3]),

    #[error("hard-pulse engine got a pulse of duration {duration} s at t={t_start}")]
    FinitePulse { t_start: f64, duration: f64 },

    #[error("time step {dt} exceeds shortest pulse duration / 100 ({limit})")]
    StepTooCoarse { dt: f64, limit: f64 },

    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),

    #[error("integration produced a non-finite state at t={t}; reduce dt")]
    NonFiniteState { t: f64 },

    #[error("pulse area {area} is not a multiple of pi; echo timing is undefined")]
    NonCanonicalArea { area: f64 },

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("invalid propagation config: {0}")]
    InvalidPropagation(String),

    #[error("unknown stage `{0}`")]
    UnknownStage(String),

    #[error("unknown area `{0}`")]
    UnknownArea(String),

    #[error("unknown figure `{0}`")]
    UnknownFigure(String),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("NON_FINITE_VALUE: refusing to serialize {value} in column `{column}`")]
    NonFiniteValue { column: String, value: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
