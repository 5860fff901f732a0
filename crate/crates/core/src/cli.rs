//! Batch front end.
//!
//! ```text
//! icflow [--out DIR] [--workers N] run CONFIG
//! icflow validate-speed NAME
//! icflow oracle KAPPA ALPHA RHO0 T
//! ```
//!
//! `run` reads a TOML file with the sections `[flow]`, `[grid]` and
//! `[output]`:
//!
//! ```toml
//! [flow]
//! mode = "flow"              # flow | counterexample | validate
//! kappa = 0                  # 0, 1 or -1
//! speed = "mean_curvature"
//! alpha = 1.0
//! t_end = 2.0
//! record_every = 0.02        # optional, default t_end / 100
//! cfl_safety = 0.2           # optional
//! cfl_constant = 4.0         # optional
//! max_steps = 1000000        # optional
//! workers = 1                # optional
//! initial = "sphere"         # sphere | perturbed_sphere | shifted_graph
//! rho0 = 1.0                 # sphere, perturbed_sphere
//! amplitude = 0.1            # perturbed_sphere: rho0 + amplitude cos(theta)^harmonic
//! harmonic = 2               # perturbed_sphere
//! s = 6.0                    # shifted_graph: s + fbar
//! fbar = "p2_axisym"         # shifted_graph
//! fbar_amplitude = 0.3       # shifted_graph, optional
//! epsilon0 = 0.1             # counterexample, optional
//! samples = 512              # validate, optional
//!
//! [grid]
//! n_theta = 32
//! n_phi = 64
//!
//! [output]
//! dir = "out"                # optional; --out takes precedence
//! ```
//!
//! A run writes `diagnostics.csv`, `final.snap` and `run.meta` into the
//! output directory; counterexample runs add `conformal.snap` and a one-line
//! `verdict.csv`.
//!
//! Exit status is 0 for a normal run, 1 for configuration or usage errors
//! and 2 for blow-up, loss of convexity or a failed validation.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Deserialize;
use thiserror::Error;

use crate::counterexample::{run_counterexample, BaseFunction, CounterexampleConfig};
use crate::diagnostics::write_csv;
use crate::error::FlowError;
use crate::geometry::{write_snapshot, SphericalGrid, SurfaceState};
use crate::reference::SphereSolution;
use crate::spaceform::SpaceForm;
use crate::speed::{halton_samples, validate_assumption, FlowExponent, SpeedFunction};
use crate::stepper::{self, FlowConfig, FlowOutcome, DEFAULT_CFL_CONSTANT, DEFAULT_CFL_SAFETY};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_ABNORMAL: i32 = 2;

pub const DEFAULT_OUT_DIR: &str = "icflow-out";
pub const DEFAULT_SAMPLES: usize = 512;

/// A configuration problem, located by its key path where possible.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },

    #[error("{0}")]
    Syntax(String),

    #[error("{key}: {message}")]
    Key { key: String, message: String },
}

impl ConfigError {
    fn key(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Key {
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn missing(key: &str) -> Self {
        ConfigError::key(key, "missing")
    }

    /// The offending key path, if the error names one.
    pub fn key_path(&self) -> Option<&str> {
        match self {
            ConfigError::Key { key, .. } => Some(key),
            _ => None,
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawConfig {
    flow: Option<RawFlow>,
    grid: Option<RawGrid>,
    output: Option<RawOutput>,
}

#[derive(Debug, Default, Deserialize)]
struct RawFlow {
    mode: Option<String>,
    kappa: Option<i64>,
    speed: Option<String>,
    alpha: Option<f64>,
    t_end: Option<f64>,
    record_every: Option<f64>,
    cfl_safety: Option<f64>,
    cfl_constant: Option<f64>,
    max_steps: Option<u64>,
    workers: Option<u64>,
    initial: Option<String>,
    rho0: Option<f64>,
    amplitude: Option<f64>,
    harmonic: Option<u32>,
    s: Option<f64>,
    fbar: Option<String>,
    fbar_amplitude: Option<f64>,
    epsilon0: Option<f64>,
    samples: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
struct RawGrid {
    n_theta: Option<u64>,
    n_phi: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
struct RawOutput {
    dir: Option<PathBuf>,
}

/// Initial surface descriptors.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialSurface {
    Sphere {
        rho0: f64,
    },
    /// `rho0 + amplitude cos(theta)^harmonic`.
    PerturbedSphere {
        rho0: f64,
        amplitude: f64,
        harmonic: u32,
    },
    /// `s + fbar(theta, phi)`.
    ShiftedGraph {
        s: f64,
        fbar: BaseFunction,
    },
}

impl InitialSurface {
    pub fn build(&self, grid: std::sync::Arc<SphericalGrid>) -> crate::Result<SurfaceState> {
        match *self {
            InitialSurface::Sphere { rho0 } => SurfaceState::sphere(grid, rho0),
            InitialSurface::PerturbedSphere {
                rho0,
                amplitude,
                harmonic,
            } => SurfaceState::from_fn(grid, |theta, _| {
                rho0 + amplitude * theta.cos().powi(harmonic as i32)
            }),
            InitialSurface::ShiftedGraph { s, fbar } => {
                SurfaceState::from_fn(grid, |theta, phi| s + fbar.value(theta, phi))
            }
        }
    }
}

/// A plain flow run.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowSpec {
    pub space_form: SpaceForm,
    pub speed: SpeedFunction,
    pub alpha: FlowExponent,
    pub initial: InitialSurface,
    pub n_theta: usize,
    pub n_phi: usize,
    pub t_end: f64,
    pub record_every: f64,
    pub cfl_safety: f64,
    pub cfl_constant: f64,
    pub max_steps: usize,
    pub workers: usize,
}

/// A validated configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum RunMode {
    Flow(FlowSpec),
    Counterexample {
        flow: FlowSpec,
        s: f64,
        fbar: BaseFunction,
        epsilon0: f64,
    },
    Validate {
        speed: SpeedFunction,
        samples: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub mode: RunMode,
    pub out_dir: Option<PathBuf>,
}

impl RunSpec {
    pub fn set_workers(&mut self, workers: usize) {
        match &mut self.mode {
            RunMode::Flow(flow) | RunMode::Counterexample { flow, .. } => flow.workers = workers,
            RunMode::Validate { .. } => {}
        }
    }
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunSpec, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

/// Validates configuration text.
pub fn parse_config_str(text: &str) -> Result<RunSpec, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let mut unknown: Vec<String> = Vec::new();
    let mut track = |path: serde_ignored::Path<'_>| {
        let key = path.to_string();
        unknown.push(
            key.split('.')
                .filter(|part| *part != "?")
                .collect::<Vec<_>>()
                .join("."),
        );
    };
    let ignoring = serde_ignored::Deserializer::new(de, &mut track);
    let raw: RawConfig = serde_path_to_error::deserialize(ignoring).map_err(|e| {
        let key = e.path().to_string();
        ConfigError::Key {
            key,
            message: e.into_inner().message().trim().to_string(),
        }
    })?;
    if let Some(key) = unknown.into_iter().next() {
        return Err(ConfigError::key(&key, "unknown key"));
    }
    let flow = raw.flow.ok_or_else(|| ConfigError::missing("flow"))?;
    let out_dir = raw.output.unwrap_or_default().dir;

    let mode = flow.mode.as_deref().unwrap_or("flow");
    let speed_name = |default: Option<&str>| -> Result<SpeedFunction, ConfigError> {
        let name = flow
            .speed
            .as_deref()
            .or(default)
            .ok_or_else(|| ConfigError::missing("flow.speed"))?;
        SpeedFunction::from_name(name).map_err(|e| ConfigError::key("flow.speed", e.to_string()))
    };
    let mode = match mode {
        "validate" => {
            let samples = match flow.samples {
                None => DEFAULT_SAMPLES,
                Some(0) => return Err(ConfigError::key("flow.samples", "must be positive")),
                Some(n) => n as usize,
            };
            RunMode::Validate {
                speed: speed_name(None)?,
                samples,
            }
        }
        "flow" => RunMode::Flow(flow_spec(&flow, raw.grid, speed_name(None)?)?),
        "counterexample" => {
            let speed = speed_name(Some("mean_curvature"))?;
            if speed != SpeedFunction::MeanCurvature {
                return Err(ConfigError::key(
                    "flow.speed",
                    "the counterexample evolves by mean_curvature",
                ));
            }
            let spec = flow_spec(&flow, raw.grid, speed)?;
            if spec.space_form != SpaceForm::Hyperbolic {
                return Err(ConfigError::key(
                    "flow.kappa",
                    "the counterexample needs kappa = -1",
                ));
            }
            if spec.alpha.get() >= 1.0 {
                return Err(ConfigError::key(
                    "flow.alpha",
                    "the counterexample needs alpha < 1",
                ));
            }
            let InitialSurface::ShiftedGraph { s, fbar } = spec.initial else {
                return Err(ConfigError::key(
                    "flow.initial",
                    "the counterexample starts from a shifted_graph",
                ));
            };
            let epsilon0 = positive("flow.epsilon0", flow.epsilon0.unwrap_or(0.1))?;
            RunMode::Counterexample {
                flow: spec,
                s,
                fbar,
                epsilon0,
            }
        }
        other => {
            return Err(ConfigError::key(
                "flow.mode",
                format!("unknown mode `{other}` (expected flow, counterexample or validate)"),
            ))
        }
    };
    Ok(RunSpec { mode, out_dir })
}

fn positive(key: &str, x: f64) -> Result<f64, ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::key(key, format!("must be positive (got {x})")))
    }
}

fn required(key: &str, x: Option<f64>) -> Result<f64, ConfigError> {
    positive(key, x.ok_or_else(|| ConfigError::missing(key))?)
}

fn flow_spec(
    flow: &RawFlow,
    grid: Option<RawGrid>,
    speed: SpeedFunction,
) -> Result<FlowSpec, ConfigError> {
    let kappa = flow
        .kappa
        .ok_or_else(|| ConfigError::missing("flow.kappa"))?;
    let space_form = i32::try_from(kappa)
        .ok()
        .and_then(|k| SpaceForm::from_kappa(k).ok())
        .ok_or_else(|| {
            ConfigError::key("flow.kappa", format!("must be 0, 1 or -1 (got {kappa})"))
        })?;
    let alpha_value = flow
        .alpha
        .ok_or_else(|| ConfigError::missing("flow.alpha"))?;
    let alpha = FlowExponent::new(alpha_value)
        .map_err(|e| ConfigError::key("flow.alpha", e.to_string()))?;
    if space_form == SpaceForm::Spherical && alpha_value != 1.0 {
        return Err(ConfigError::key(
            "flow.alpha",
            format!("the S3 flow requires alpha = 1 (got {alpha_value})"),
        ));
    }
    let t_end = required("flow.t_end", flow.t_end)?;
    let record_every = match flow.record_every {
        Some(r) => positive("flow.record_every", r)?,
        None => t_end / 100.0,
    };
    let cfl_safety = flow.cfl_safety.unwrap_or(DEFAULT_CFL_SAFETY);
    if !(cfl_safety > 0.0 && cfl_safety <= 1.0) {
        return Err(ConfigError::key(
            "flow.cfl_safety",
            format!("must lie in (0, 1] (got {cfl_safety})"),
        ));
    }
    let cfl_constant = positive(
        "flow.cfl_constant",
        flow.cfl_constant.unwrap_or(DEFAULT_CFL_CONSTANT),
    )?;
    let max_steps = match flow.max_steps {
        Some(0) => return Err(ConfigError::key("flow.max_steps", "must be positive")),
        Some(n) => n as usize,
        None => usize::MAX,
    };
    let workers = match flow.workers {
        Some(0) => return Err(ConfigError::key("flow.workers", "must be positive")),
        Some(n) => n as usize,
        None => 1,
    };

    let initial_kind = flow
        .initial
        .as_deref()
        .ok_or_else(|| ConfigError::missing("flow.initial"))?;
    let initial = match initial_kind {
        "sphere" => InitialSurface::Sphere {
            rho0: required("flow.rho0", flow.rho0)?,
        },
        "perturbed_sphere" => InitialSurface::PerturbedSphere {
            rho0: required("flow.rho0", flow.rho0)?,
            amplitude: flow
                .amplitude
                .ok_or_else(|| ConfigError::missing("flow.amplitude"))?,
            harmonic: flow
                .harmonic
                .ok_or_else(|| ConfigError::missing("flow.harmonic"))?,
        },
        "shifted_graph" => {
            let name = flow
                .fbar
                .as_deref()
                .ok_or_else(|| ConfigError::missing("flow.fbar"))?;
            InitialSurface::ShiftedGraph {
                s: required("flow.s", flow.s)?,
                fbar: BaseFunction::from_name(name, flow.fbar_amplitude)
                    .map_err(|e| ConfigError::key("flow.fbar", e.to_string()))?,
            }
        }
        other => {
            return Err(ConfigError::key(
                "flow.initial",
                format!("unknown initial surface `{other}`"),
            ))
        }
    };

    let grid = grid.ok_or_else(|| ConfigError::missing("grid"))?;
    let n_theta = grid
        .n_theta
        .ok_or_else(|| ConfigError::missing("grid.n_theta"))?;
    let n_phi = grid
        .n_phi
        .ok_or_else(|| ConfigError::missing("grid.n_phi"))?;
    if n_theta < 2 {
        return Err(ConfigError::key("grid.n_theta", "must be at least 2"));
    }
    if n_phi < 4 || n_phi % 2 != 0 {
        return Err(ConfigError::key(
            "grid.n_phi",
            "must be even and at least 4",
        ));
    }
    Ok(FlowSpec {
        space_form,
        speed,
        alpha,
        initial,
        n_theta: n_theta as usize,
        n_phi: n_phi as usize,
        t_end,
        record_every,
        cfl_safety,
        cfl_constant,
        max_steps,
        workers,
    })
}

impl FlowSpec {
    pub fn flow_config(&self) -> crate::Result<FlowConfig> {
        let grid = SphericalGrid::shared(self.n_theta, self.n_phi)?;
        let initial = self.initial.build(grid)?;
        let mut cfg = FlowConfig::new(self.space_form, self.speed, self.alpha, initial, self.t_end);
        cfg.record_every = self.record_every;
        cfg.cfl_safety = self.cfl_safety;
        cfg.cfl_constant = self.cfl_constant;
        cfg.max_steps = self.max_steps;
        cfg.workers = self.workers;
        Ok(cfg)
    }
}

/// Formats with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    if (-4..12).contains(&exponent) {
        format!("{:.*}", (11 - exponent) as usize, x)
    } else {
        format!("{x:.11e}")
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "icflow",
    version,
    about = "Inverse curvature flows in R3, S3 and H3"
)]
struct Cli {
    /// Output directory for run artefacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for a run; overrides `flow.workers` and never changes the output.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a configuration file.
    Run { config: PathBuf },
    /// Check a registered speed function against the axioms.
    ValidateSpeed { name: String },
    /// Print the radius of the sphere solution at time t.
    #[command(allow_negative_numbers = true)]
    Oracle {
        kappa: i32,
        alpha: f64,
        rho0: f64,
        t: f64,
    },
}

/// Entry point; returns the process exit status.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Oracle {
            kappa,
            alpha,
            rho0,
            t,
        } => oracle(kappa, alpha, rho0, t, out),
        Command::ValidateSpeed { name } => match SpeedFunction::from_name(&name) {
            Ok(speed) => validate(speed, DEFAULT_SAMPLES, out),
            Err(e) => Err(Failure::Config(e.to_string())),
        },
        Command::Run { config } => match parse_config(&config) {
            Ok(mut spec) => {
                if let Some(n) = cli.workers {
                    spec.set_workers(n as usize);
                }
                execute(&spec, cli.out.as_deref(), out)
            }
            Err(e) => Err(Failure::Config(e.to_string())),
        },
    };
    match result {
        Ok(code) => code,
        Err(Failure::Config(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_CONFIG
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_CONFIG
        }
    }
}

enum Failure {
    Config(String),
    Io(io::Error),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<FlowError> for Failure {
    fn from(e: FlowError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn oracle(kappa: i32, alpha: f64, rho0: f64, t: f64, out: &mut dyn Write) -> Result<i32, Failure> {
    let sf = SpaceForm::from_kappa(kappa)?;
    let solution = SphereSolution::new(sf, FlowExponent::new(alpha)?, rho0)?;
    if !(t >= 0.0) {
        return Err(Failure::Config(format!("t must be non-negative (got {t})")));
    }
    writeln!(out, "{}", sig12(solution.radius(t)?))?;
    Ok(EXIT_OK)
}

fn validate(speed: SpeedFunction, samples: usize, out: &mut dyn Write) -> Result<i32, Failure> {
    let report = validate_assumption(&speed, &halton_samples(samples, 0.05, 20.0));
    writeln!(out, "{report}")?;
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_ABNORMAL
    })
}

/// Runs a validated configuration, writing artefacts under `out_dir`
/// (falling back to the config's `[output] dir`, then [`DEFAULT_OUT_DIR`]).
fn execute(spec: &RunSpec, out_dir: Option<&Path>, out: &mut dyn Write) -> Result<i32, Failure> {
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| spec.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    match &spec.mode {
        RunMode::Validate { speed, samples } => validate(*speed, *samples, out),
        RunMode::Flow(flow) => {
            let cfg = flow.flow_config()?;
            fs::create_dir_all(&dir)?;
            let started = Instant::now();
            let outcome = stepper::run(&cfg)?;
            write_flow_outputs(&dir, flow.space_form, &outcome, started)?;
            writeln!(
                out,
                "termination={} steps={} t={}",
                outcome.termination,
                outcome.steps,
                sig12(outcome.final_state.t)
            )?;
            Ok(exit_code(&outcome))
        }
        RunMode::Counterexample {
            flow,
            s,
            fbar,
            epsilon0,
        } => {
            let mut cfg = CounterexampleConfig::new(
                flow.alpha,
                *fbar,
                *s,
                flow.n_theta,
                flow.n_phi,
                flow.t_end,
            );
            cfg.record_every = flow.record_every;
            cfg.cfl_safety = flow.cfl_safety;
            cfg.epsilon0 = *epsilon0;
            cfg.workers = flow.workers;
            fs::create_dir_all(&dir)?;
            let started = Instant::now();
            let result = run_counterexample(&cfg)?;
            write_flow_outputs(&dir, SpaceForm::Hyperbolic, &result.flow, started)?;
            let mut f = BufWriter::new(File::create(dir.join("conformal.snap"))?);
            result.write_conformal(&mut f)?;
            f.flush()?;
            let line = result.verdict_line();
            fs::write(dir.join("verdict.csv"), format!("{line}\n"))?;
            writeln!(out, "{line}")?;
            Ok(exit_code(&result.flow))
        }
    }
}

fn exit_code(outcome: &FlowOutcome) -> i32 {
    if outcome.termination.is_normal() {
        EXIT_OK
    } else {
        EXIT_ABNORMAL
    }
}

fn write_flow_outputs(
    dir: &Path,
    sf: SpaceForm,
    outcome: &FlowOutcome,
    started: Instant,
) -> io::Result<()> {
    let mut csv = BufWriter::new(File::create(dir.join("diagnostics.csv"))?);
    write_csv(&mut csv, &outcome.records)?;
    csv.flush()?;
    let mut snap = BufWriter::new(File::create(dir.join("final.snap"))?);
    write_snapshot(&mut snap, sf, &outcome.final_state)?;
    snap.flush()?;
    let mut meta = String::new();
    let _ = writeln!(meta, "termination={}", outcome.termination);
    let _ = writeln!(meta, "steps={}", outcome.steps);
    let _ = writeln!(meta, "t_final={}", sig12(outcome.final_state.t));
    let _ = writeln!(meta, "wall_time_s={:.3}", started.elapsed().as_secs_f64());
    if let Some(e) = &outcome.error {
        let _ = writeln!(meta, "error={e}");
    }
    fs::write(dir.join("run.meta"), meta)
}
