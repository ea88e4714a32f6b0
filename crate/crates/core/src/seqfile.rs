//! JSON sequence files.
//!
//! ```json
//! {
//!   "pulses": [
//!     {"channel": "optical12", "area_pi": 0.1, "t_start": 0, "duration": 0}
//!   ],
//!   "ensemble": {"sigma_hz": 1e6, "n_atoms": 201, "span": 5},
//!   "grid": {"t_end": 45, "dt": 0.005}
//! }
//! ```
//!
//! Times are in microseconds, frequencies in Hz and areas in units of π.
//! `pulses` and `grid.t_end` are required; `duration` defaults to 0 (hard
//! pulse), `ensemble` fields default to σ = 1 MHz, 201 atoms, span 5 and
//! `grid.dt` to 1/(40·span·σ).

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleSpec;
use crate::error::Error;
use crate::state::{Channel, Pulse, PulseSequence};

const US: f64 = 1e-6;

/// Machine-readable parse failure codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorCode {
    SyntaxError,
    InvalidValue,
    UnknownChannel,
    OverlappingPulses,
    MissingField,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::SyntaxError => "SYNTAX_ERROR",
            ErrorCode::InvalidValue => "INVALID_VALUE",
            ErrorCode::UnknownChannel => "UNKNOWN_CHANNEL",
            ErrorCode::OverlappingPulses => "OVERLAPPING_PULSES",
            ErrorCode::MissingField => "MISSING_FIELD",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceFileError {
    pub code: ErrorCode,
    pub message: String,
    /// 1-based line and column for syntax/type errors.
    pub position: Option<(usize, usize)>,
}

impl fmt::Display for SequenceFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code.as_str(), self.message)?;
        if let Some((line, col)) = self.position {
            write!(f, " at line {line}, column {col}")?;
        }
        Ok(())
    }
}

impl std::error::Error for SequenceFileError {}

impl SequenceFileError {
    fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            position: None,
        }
    }
}

/// Sampling of the simulated window, seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridConfig {
    pub t_end: f64,
    pub dt: f64,
}

/// Fully validated contents of a sequence file.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceConfig {
    pub sequence: PulseSequence,
    pub ensemble: EnsembleSpec,
    pub grid: GridConfig,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    pulses: Option<Vec<RawPulse>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ensemble: Option<RawEnsemble>,
    grid: Option<RawGrid>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawPulse {
    channel: Option<String>,
    area_pi: Option<f64>,
    t_start: Option<f64>,
    #[serde(default)]
    duration: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawEnsemble {
    sigma_hz: Option<f64>,
    n_atoms: Option<usize>,
    span: Option<f64>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
}

fn required<T>(v: Option<T>, what: &str) -> Result<T, SequenceFileError> {
    v.ok_or_else(|| {
        SequenceFileError::new(
            ErrorCode::MissingField,
            format!("missing required field `{what}`"),
        )
    })
}

fn invalid(e: Error) -> SequenceFileError {
    let code = match e {
        Error::OverlappingPulses { .. } => ErrorCode::OverlappingPulses,
        Error::UnknownChannel(_) => ErrorCode::UnknownChannel,
        _ => ErrorCode::InvalidValue,
    };
    SequenceFileError::new(code, e.to_string())
}

/// Parses and validates a sequence file, applying defaults.
pub fn parse_sequence_file(text: &str) -> Result<SequenceConfig, SequenceFileError> {
    let raw: RawFile = serde_json::from_str(text).map_err(|e| {
        let code = match e.classify() {
            serde_json::error::Category::Data => ErrorCode::InvalidValue,
            _ => ErrorCode::SyntaxError,
        };
        SequenceFileError {
            code,
            message: e.to_string(),
            position: Some((e.line(), e.column())),
        }
    })?;

    let mut pulses = Vec::new();
    for (k, p) in required(raw.pulses, "pulses")?.into_iter().enumerate() {
        let channel: Channel = required(p.channel, &format!("pulses[{k}].channel"))?
            .parse()
            .map_err(invalid)?;
        let area_pi = required(p.area_pi, &format!("pulses[{k}].area_pi"))?;
        let t_start = required(p.t_start, &format!("pulses[{k}].t_start"))?;
        let duration = p.duration.unwrap_or(0.0);
        pulses
            .push(Pulse::new(channel, area_pi * PI, t_start * US, duration * US).map_err(invalid)?);
    }
    // files may list pulses in any order
    let mut sorted = pulses;
    sorted.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
    for w in sorted.windows(2) {
        if w[1].t_start < w[0].t_end() {
            return Err(invalid(Error::OverlappingPulses {
                first_end: w[0].t_end(),
                second_start: w[1].t_start,
            }));
        }
    }

    let defaults = EnsembleSpec::default();
    let ens = raw.ensemble.unwrap_or_default();
    let ensemble = EnsembleSpec {
        sigma: ens
            .sigma_hz
            .map(|hz| 2.0 * PI * hz)
            .unwrap_or(defaults.sigma),
        n_atoms: ens.n_atoms.unwrap_or(defaults.n_atoms),
        span: ens.span.unwrap_or(defaults.span),
    };
    ensemble.validate().map_err(invalid)?;

    let grid = required(raw.grid, "grid")?;
    let t_end = required(grid.t_end, "grid.t_end")? * US;
    let dt = match grid.dt {
        Some(dt) => dt * US,
        None => ensemble.default_time_step(),
    };
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SequenceFileError::new(
            ErrorCode::InvalidValue,
            format!("grid.dt must be > 0, got {dt}"),
        ));
    }
    let sequence = PulseSequence::new(sorted, t_end).map_err(invalid)?;
    Ok(SequenceConfig {
        sequence,
        ensemble,
        grid: GridConfig { t_end, dt },
    })
}

/// Writes a configuration back in the file format (all fields explicit).
pub fn serialize_sequence(config: &SequenceConfig) -> String {
    let raw = RawFile {
        pulses: Some(
            config
                .sequence
                .pulses()
                .iter()
                .map(|p| RawPulse {
                    channel: Some(p.channel.name().to_string()),
                    area_pi: Some(p.area / PI),
                    t_start: Some(p.t_start / US),
                    duration: Some(p.duration / US),
                })
                .collect(),
        ),
        ensemble: Some(RawEnsemble {
            sigma_hz: Some(config.ensemble.sigma / (2.0 * PI)),
            n_atoms: Some(config.ensemble.n_atoms),
            span: Some(config.ensemble.span),
        }),
        grid: Some(RawGrid {
            t_end: Some(config.grid.t_end / US),
            dt: Some(config.grid.dt / US),
        }),
    };
    let mut s = serde_json::to_string_pretty(&raw).expect("plain data always serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const CDR: &str = include_str!("../sequences/cdr.json");
    const DR: &str = include_str!("../sequences/dr.json");

    #[test]
    fn canonical_cdr_file() {
        let c = parse_sequence_file(CDR).unwrap();
        let areas: Vec<f64> = c.sequence.pulses().iter().map(|p| p.area / PI).collect();
        let want = [0.1, 1.0, 1.0, 1.0, 1.0];
        for (a, w) in areas.iter().zip(want) {
            assert!((a - w).abs() < 1e-15);
        }
        let starts: Vec<f64> = c.sequence.pulses().iter().map(|p| p.t_start / US).collect();
        assert_eq!(starts, vec![0.0, 10.0, 12.0, 16.0, 30.0]);
        assert!(c.sequence.all_hard());
        assert_eq!(c.ensemble, EnsembleSpec::default());
    }

    #[test]
    fn dr_file_drops_control_pair() {
        let c = parse_sequence_file(DR).unwrap();
        assert_eq!(c.sequence.pulses().len(), 3);
        assert!(c
            .sequence
            .pulses()
            .iter()
            .all(|p| p.channel == Channel::Optical12));
    }

    #[test]
    fn error_codes() {
        let bad_channel =
            r#"{"pulses":[{"channel":"optical13","area_pi":1,"t_start":0}],"grid":{"t_end":1}}"#;
        assert_eq!(
            parse_sequence_file(bad_channel).unwrap_err().code,
            ErrorCode::UnknownChannel
        );

        let overlap = r#"{"pulses":[{"channel":"optical12","area_pi":1,"t_start":0,"duration":2},
                                   {"channel":"optical12","area_pi":1,"t_start":1,"duration":1}],"grid":{"t_end":5}}"#;
        assert_eq!(
            parse_sequence_file(overlap).unwrap_err().code,
            ErrorCode::OverlappingPulses
        );

        let missing = r#"{"pulses":[{"channel":"optical12","t_start":0}],"grid":{"t_end":5}}"#;
        let e = parse_sequence_file(missing).unwrap_err();
        assert_eq!(e.code, ErrorCode::MissingField);
        assert!(e.message.contains("area_pi"));

        let e = parse_sequence_file("{\"pulses\": [\n  {,}\n]}").unwrap_err();
        assert_eq!(e.code, ErrorCode::SyntaxError);
        assert_eq!(e.position.unwrap().0, 2);

        let e = parse_sequence_file(r#"{"pulses":[],"grid":{"t_end":"x"}}"#).unwrap_err();
        assert_eq!(e.code, ErrorCode::InvalidValue);

        assert_eq!(
            parse_sequence_file(r#"{"pulses":[]}"#).unwrap_err().code,
            ErrorCode::MissingField
        );
    }

    #[test]
    fn empty_pulse_list_is_free_evolution() {
        let c = parse_sequence_file(r#"{"pulses":[],"grid":{"t_end":3}}"#).unwrap();
        assert!(c.sequence.is_empty());
        assert!((c.grid.dt - 5e-9).abs() < 1e-20);
    }
}
