use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cdr_echo::analytic::{stage_chain, StageAreas};
use cdr_echo::area::{propagate_area, PropagationConfig};
use cdr_echo::ensemble::{
    detect_echoes, predict_echo_times, simulate_polarization, time_grid, Engine, DEFAULT_THRESHOLD,
};
use cdr_echo::seqfile::parse_sequence_file;
use cdr_echo::sweep::{
    figure_dataset, format_float, run_sweep, to_csv_string, write_csv, FigureId, SweepSpec, Table,
};
use cdr_echo::verify::run_verification;

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

/// Controlled double-rephasing photon echo simulator.
#[derive(Debug, Parser)]
#[command(name = "cdr-echo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write all fourteen figure datasets as CSV.
    Figures {
        #[arg(long, default_value = "figures")]
        out: PathBuf,
    },
    /// Sweep one pulse area through a closed-form stage.
    Sweep {
        /// after_data, after_r1, after_r2_dr, after_c1, after_c2 or after_r2_cdr
        #[arg(long)]
        stage: String,
        /// phi_d, phi_r1, phi_c1, phi_c2 or phi_r2
        #[arg(long)]
        vary: String,
        #[arg(long, value_parser = parse_area, default_value = "0")]
        lo: f64,
        #[arg(long, value_parser = parse_area, default_value = "4pi")]
        hi: f64,
        #[arg(long, default_value_t = 401)]
        steps: usize,
        #[command(flatten)]
        areas: AreaArgs,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the five stage states for the given areas.
    Stages {
        #[command(flatten)]
        areas: AreaArgs,
    },
    /// Simulate an inhomogeneous ensemble through a sequence file and report echoes.
    Echo {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long, value_enum, default_value_t = EngineArg::Hard)]
        engine: EngineArg,
        /// Detection threshold as a fraction of the largest |P|.
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Write the sampled polarization trace as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Propagate a pulse area through an absorber.
    Propagate {
        #[arg(long, value_parser = parse_area)]
        phi0: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        zmax: f64,
        #[arg(long, default_value_t = 1e-3)]
        dz: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-check closed forms, unitaries and RK4; nonzero exit on any breach.
    Verify,
}

/// Areas accept radians or multiples of π: `0.3`, `pi`, `0.1pi`, `pi/2`.
#[derive(Debug, clap::Args)]
struct AreaArgs {
    #[arg(long, value_parser = parse_area, default_value = "0.1pi")]
    phid: f64,
    #[arg(long, value_parser = parse_area, default_value = "pi")]
    phir1: f64,
    #[arg(long, value_parser = parse_area, default_value = "pi")]
    phic1: f64,
    #[arg(long, value_parser = parse_area, default_value = "pi")]
    phic2: f64,
    #[arg(long, value_parser = parse_area, default_value = "pi")]
    phir2: f64,
}

impl AreaArgs {
    fn areas(&self) -> StageAreas {
        StageAreas {
            phi_d: self.phid,
            phi_r1: self.phir1,
            phi_c1: self.phic1,
            phi_c2: self.phic2,
            phi_r2: self.phir2,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EngineArg {
    Hard,
    Ode,
}

fn parse_area(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    let num = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|e| format!("bad area `{s}`: {e}"))
    };
    let value = if let Some(den) = t.strip_prefix("pi/") {
        PI / num(den)?
    } else if let Some(coef) = t.strip_suffix("pi") {
        let coef = coef.trim().trim_end_matches('*');
        match coef {
            "" => PI,
            "-" => -PI,
            c => num(c)? * PI,
        }
    } else {
        num(&t)?
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("area `{s}` is not finite"))
    }
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    fn io(message: impl ToString) -> Self {
        Self {
            code: EXIT_IO,
            message: message.to_string(),
        }
    }
}

impl From<cdr_echo::Error> for Failure {
    fn from(e: cdr_echo::Error) -> Self {
        match e {
            cdr_echo::Error::Io(_) => Failure::io(e),
            other => Failure::usage(other),
        }
    }
}

fn emit(table: &Table, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => write_csv(table, path).map_err(Failure::from),
        None => {
            print!("{}", to_csv_string(table)?);
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Figures { out } => {
            fs::create_dir_all(&out).map_err(|e| Failure::io(format!("{}: {e}", out.display())))?;
            for id in FigureId::ALL {
                let path = out.join(format!("{}.csv", id.name()));
                write_csv(&figure_dataset(id), &path)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Sweep {
            stage,
            vary,
            lo,
            hi,
            steps,
            areas,
            out,
        } => {
            let spec = SweepSpec {
                stage: stage.parse()?,
                varying: vary.parse()?,
                lo,
                hi,
                steps,
                fixed: areas.areas(),
            };
            emit(&run_sweep(&spec)?, out.as_deref())
        }
        Command::Stages { areas } => {
            println!("stage,im_rho12,re_rho13,im_rho13,im_rho23,rho11,rho22,rho33");
            for (stage, s) in stage_chain(&areas.areas()) {
                let cells = [
                    s.rho12().im,
                    s.rho13().re,
                    s.rho13().im,
                    s.rho23().im,
                    s.rho11(),
                    s.rho22(),
                    s.rho33(),
                ]
                .map(format_float);
                println!("{},{}", stage, cells.join(","));
            }
            Ok(())
        }
        Command::Echo {
            seq,
            engine,
            threshold,
            out,
        } => {
            let text = fs::read_to_string(&seq)
                .map_err(|e| Failure::io(format!("{}: {e}", seq.display())))?;
            let config = parse_sequence_file(&text).map_err(Failure::usage)?;
            let times = time_grid(config.grid.t_end, config.grid.dt);
            let engine = match engine {
                EngineArg::Hard => Engine::Hard,
                EngineArg::Ode => Engine::Ode { dt: config.grid.dt },
            };
            let trace = simulate_polarization(&config.sequence, &config.ensemble, &times, engine)?;
            let report = detect_echoes(
                &trace.times,
                &trace.polarization,
                &config.sequence,
                threshold,
            );

            if let Ok(predicted) = predict_echo_times(&config.sequence) {
                let us: Vec<String> = predicted
                    .iter()
                    .map(|t| format!("{:.6}", t * 1e6))
                    .collect();
                println!("predicted echo times (us): [{}]", us.join(", "));
            }
            print!("{report}");
            for e in &report.events {
                println!(
                    "{} populations: rho11={:.6} rho22={:.6} rho33={:.6}{}",
                    e.label,
                    trace.rho11[e.index],
                    trace.rho22[e.index],
                    trace.rho33[e.index],
                    if trace.rho22[e.index] > trace.rho11[e.index] {
                        " (inverted)"
                    } else {
                        ""
                    }
                );
            }
            if let Some(path) = out {
                let rows = trace
                    .times
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let p = trace.polarization[i];
                        vec![
                            t * 1e6,
                            p.re,
                            p.im,
                            p.norm(),
                            trace.rho11[i],
                            trace.rho22[i],
                            trace.rho33[i],
                        ]
                    })
                    .collect();
                let table = Table {
                    metadata: vec![("sequence".into(), seq.display().to_string())],
                    columns: [
                        "time_us", "re_p", "im_p", "abs_p", "rho11", "rho22", "rho33",
                    ]
                    .map(String::from)
                    .to_vec(),
                    rows,
                };
                write_csv(&table, &path)?;
            }
            Ok(())
        }
        Command::Propagate {
            phi0,
            alpha,
            zmax,
            dz,
            out,
        } => {
            let samples = propagate_area(&PropagationConfig {
                phi0,
                alpha,
                z_max: zmax,
                dz,
            })?;
            let table = Table {
                metadata: vec![
                    ("phi0".into(), format_float(phi0)),
                    ("alpha".into(), format_float(alpha)),
                ],
                columns: vec!["z".into(), "phi".into()],
                rows: samples.into_iter().map(|(z, p)| vec![z, p]).collect(),
            };
            emit(&table, out.as_deref())
        }
        Command::Verify => {
            let results = run_verification();
            for r in &results {
                println!("{r}");
            }
            if results.iter().all(|r| r.passed) {
                println!("all checks passed");
                Ok(())
            } else {
                Err(Failure {
                    code: EXIT_VERIFY,
                    message: "verification failed".into(),
                })
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
