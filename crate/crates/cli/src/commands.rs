//! Argument parsing, run configuration and the subcommand handlers.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hypmin::asymptotics::{
    geometric_radii, localization_experiment, smooth_expansion_experiment, theorem1_experiment, theorem2_experiment,
    AsymptoticsError, AsymptoticsReport, LocalizationConfig, SectorConfig, Theorem2Config,
};
use hypmin::cone_profile::{solve_cone_profile, supersolution_params, ConeError};
use hypmin::elliptic_solver::{solve_domain_with, SolveOptions, SolverError};
use hypmin::geometry::{Domain, DomainSpec, GeometryError, Point};
use hypmin::mobius::{apply_t, isometry_defect, jacobian_t, AmbientPoint, MobiusError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{self, IoError};
use crate::plot;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Environment variable capping the worker threads.
pub const THREADS_VAR: &str = "HYPMIN_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] IoError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(IoError::ReadFailure { .. } | IoError::Malformed { .. }) => EXIT_USAGE,
            CliError::Solver(_) | CliError::Io(IoError::WriteFailure { .. }) => EXIT_SOLVER,
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::InvalidParameter(_) => CliError::Usage(e.to_string()),
            e => CliError::Solver(e.to_string()),
        }
    }
}

impl From<AsymptoticsError> for CliError {
    fn from(e: AsymptoticsError) -> Self {
        match e {
            AsymptoticsError::InvalidParameter(_) => CliError::Usage(e.to_string()),
            e => CliError::Solver(e.to_string()),
        }
    }
}

impl From<ConeError> for CliError {
    fn from(e: ConeError) -> Self {
        match e {
            ConeError::InvalidParameter(_) => CliError::Usage(e.to_string()),
            e => CliError::Solver(e.to_string()),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<MobiusError> for CliError {
    fn from(e: MobiusError) -> Self {
        CliError::Solver(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "hypmin",
    version,
    about = "Minimal graphs in hyperbolic space over planar domains"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the zero-boundary problem on a domain.
    Solve(SolveArgs),
    /// Solve the cone profile ODE.
    Cone(ConeArgs),
    /// Certify the supersolution of the cone profile.
    CertifySupersolution(CertifyArgs),
    /// Check the isometry properties of the Möbius map at random points.
    MobiusCheck(MobiusArgs),
    /// Run a boundary-asymptotics experiment.
    #[command(subcommand)]
    Verify(Verify),
    /// Render a report or field as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Subcommand)]
pub enum Verify {
    /// Rate of convergence to the tangent-cone solution at a corner.
    Thm1(Thm1Args),
    /// Refined rate against the osculating lens of a perturbed lens.
    Thm2(Thm2Args),
    /// Decay of the difference between two domains agreeing at a corner.
    Localization(LocalizationArgs),
    /// Leading boundary expansion on a smooth domain.
    Smooth(SmoothArgs),
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory of the run.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 256)]
    pub resolution: usize,
    /// Newton tolerance on the normalized residual.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Power p of the unknown u = f^p; defaults to 2 on smooth domains and
    /// 3 at corners.
    #[arg(long)]
    pub exponent: Option<f64>,
    /// Also write an SVG plot.
    #[arg(long)]
    pub plot: bool,
}

impl SolverArgs {
    fn options(&self, default_exponent: f64) -> SolveOptions {
        SolveOptions {
            resolution: self.resolution,
            tol: self.tol,
            exponent: self.exponent.unwrap_or(default_exponent),
            frame: None,
        }
    }
}

#[derive(Debug, Args)]
pub struct SectorArgs {
    /// Relative distance of the sector from the boundary.
    #[arg(long, default_value_t = 0.3)]
    pub delta: f64,
    /// Explicit radii; overrides the geometric sequence.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.2)]
    pub r_max: f64,
    #[arg(long, default_value_t = 0.02)]
    pub r_min: f64,
    #[arg(long, default_value_t = 8)]
    pub radii_count: usize,
    /// Corner `x,y`; defaults to the vertex of a lens domain.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub vertex: Option<Vec<f64>>,
}

impl SectorArgs {
    fn radii(&self) -> Result<Vec<f64>> {
        match &self.radii {
            Some(r) => Ok(r.clone()),
            None => {
                if !(self.r_max > self.r_min && self.r_min > 0.0) || self.radii_count < 2 {
                    return Err(CliError::Usage(format!(
                        "need r_max > r_min > 0 and at least 2 radii, got {} > {}, {}",
                        self.r_max, self.r_min, self.radii_count
                    )));
                }
                Ok(geometric_radii(self.r_max, self.r_min, self.radii_count))
            }
        }
    }

    fn vertex(&self, spec: Option<&DomainSpec>) -> Result<Point> {
        if let Some(v) = &self.vertex {
            return Ok(Point::new(v[0], v[1]));
        }
        match spec {
            Some(DomainSpec::Lens { vertex, .. } | DomainSpec::PerturbedLens { vertex, .. }) => {
                Ok(Point::new(vertex[0], vertex[1]))
            }
            Some(spec) => Domain::new(spec.clone())?
                .corner_points()
                .first()
                .copied()
                .ok_or_else(|| CliError::Usage("domain has no corner; pass --vertex".into())),
            None => Ok(Point::new(0.0, 0.0)),
        }
    }

    fn config(&self, spec: Option<&DomainSpec>, solve: SolveOptions) -> Result<SectorConfig> {
        Ok(SectorConfig::new(self.vertex(spec)?, self.delta, self.radii()?, solve))
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Domain file (JSON).
    #[arg(long)]
    pub domain: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ConeArgs {
    #[arg(long)]
    pub mu: f64,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub mu: f64,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct MobiusArgs {
    /// Pole distances L.
    #[arg(long = "l", value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
    pub l: Vec<f64>,
    /// Random points per L.
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    /// Ambient dimension n + 1.
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct Thm1Args {
    #[arg(long)]
    pub domain: PathBuf,
    #[command(flatten)]
    pub sector: SectorArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct Thm2Args {
    #[arg(long, default_value_t = 0.25)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub kappa1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub kappa2: f64,
    /// Hölder exponent of the perturbation.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0.75)]
    pub mu_max: f64,
    #[command(flatten)]
    pub sector: SectorArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct LocalizationArgs {
    /// Modified domain.
    #[arg(long)]
    pub domain: PathBuf,
    /// Domain it is compared with.
    #[arg(long)]
    pub reference: PathBuf,
    /// Radius around the vertex where the domains agree.
    #[arg(long)]
    pub r0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[command(flatten)]
    pub sector: SectorArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1, 0.05, 0.025])]
    pub depths: Vec<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Report JSON or field sidecar JSON.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Resolved configuration of a run, recorded in its manifest.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub domain: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub resolution: Option<usize>,
    pub tol: Option<f64>,
    pub exponent: Option<f64>,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
    pub mu: Option<f64>,
    pub n: Option<usize>,
    pub radii: Vec<f64>,
    pub plot: bool,
    pub seed: Option<u64>,
    pub threads: usize,
}

impl RunConfig {
    fn with_solver(mut self, s: &SolverArgs, default_exponent: f64) -> Self {
        self.resolution = Some(s.resolution);
        self.tol = Some(s.tol);
        self.exponent = Some(s.exponent.unwrap_or(default_exponent));
        self.plot = s.plot;
        self
    }

    fn with_sector(mut self, s: &SectorArgs) -> Result<Self> {
        self.delta = Some(s.delta);
        self.radii = s.radii()?;
        Ok(self)
    }

    /// Resolves the configuration of a parsed command line.
    pub fn from_command(command: &Command, threads: usize) -> Result<Self> {
        let base = |name: &str, out: &OutArgs| RunConfig {
            command: name.into(),
            out: out.out.clone(),
            threads,
            ..Default::default()
        };
        let cfg = match command {
            Command::Solve(a) => RunConfig {
                domain: Some(a.domain.clone()),
                ..base("solve", &a.out)
            }
            .with_solver(&a.solver, 2.0),
            Command::Cone(a) => RunConfig {
                mu: Some(a.mu),
                n: Some(a.n),
                tol: Some(a.tol),
                ..base("cone", &a.out)
            },
            Command::CertifySupersolution(a) => RunConfig {
                mu: Some(a.mu),
                n: Some(a.n),
                ..base("certify-supersolution", &a.out)
            },
            Command::MobiusCheck(a) => RunConfig {
                seed: Some(a.seed),
                n: Some(a.dim),
                ..base("mobius-check", &a.out)
            },
            Command::Verify(Verify::Thm1(a)) => RunConfig {
                domain: Some(a.domain.clone()),
                ..base("verify thm1", &a.out)
            }
            .with_solver(&a.solver, 3.0)
            .with_sector(&a.sector)?,
            Command::Verify(Verify::Thm2(a)) => RunConfig {
                mu: Some(a.mu),
                alpha: Some(a.alpha),
                epsilon: Some(a.epsilon),
                ..base("verify thm2", &a.out)
            }
            .with_solver(&a.solver, 3.0)
            .with_sector(&a.sector)?,
            Command::Verify(Verify::Localization(a)) => RunConfig {
                domain: Some(a.domain.clone()),
                reference: Some(a.reference.clone()),
                ..base("verify localization", &a.out)
            }
            .with_solver(&a.solver, 3.0)
            .with_sector(&a.sector)?,
            Command::Verify(Verify::Smooth(a)) => RunConfig {
                domain: Some(a.domain.clone()),
                radii: a.depths.clone(),
                ..base("verify smooth", &a.out)
            }
            .with_solver(&a.solver, 2.0),
            Command::Plot(a) => RunConfig {
                input: Some(a.input.clone()),
                plot: true,
                ..base("plot", &a.out)
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        for path in [&self.domain, &self.reference, &self.input].into_iter().flatten() {
            if !path.is_file() {
                return Err(CliError::Usage(format!("{} does not exist", path.display())));
            }
        }
        if self.resolution.is_some_and(|r| r < 8) {
            return Err(CliError::Usage("resolution must be at least 8".into()));
        }
        if self.tol.is_some_and(|t| !(t > 0.0)) {
            return Err(CliError::Usage("tolerance must be positive".into()));
        }
        if self.radii.iter().any(|r| !(*r > 0.0)) {
            return Err(CliError::Usage("radii and depths must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of a handler: files written and whether the verdict held.
struct Outcome {
    files: Vec<PathBuf>,
    verdict: bool,
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| {
        CliError::Io(IoError::WriteFailure {
            path: dir.to_path_buf(),
            reason: e.to_string(),
        })
    })
}

fn solve(a: &SolveArgs) -> Result<Outcome> {
    let spec = io::read_domain(&a.domain)?;
    let field = solve_domain_with(&spec, &a.solver.options(2.0))?;
    let (csv, json) = io::write_field(&a.out.out, "field", &field)?;
    let mut files = vec![csv, json];
    if a.solver.plot {
        let svg = a.out.out.join("field.svg");
        plot::plot_field(&field, &svg)?;
        files.push(svg);
    }
    Ok(Outcome { files, verdict: true })
}

fn cone(a: &ConeArgs) -> Result<Outcome> {
    let profile = solve_cone_profile(a.mu, a.n, a.tol)?;
    let (csv, json) = io::write_profile(&a.out.out, "profile", &profile)?;
    Ok(Outcome {
        files: vec![csv, json],
        verdict: true,
    })
}

#[derive(Serialize)]
struct CertificationRecord {
    mu: f64,
    n: usize,
    certified: bool,
    certificate: Option<hypmin::cone_profile::SupersolutionCertificate>,
    failure: Option<String>,
}

fn certify(a: &CertifyArgs) -> Result<Outcome> {
    let (certificate, failure) = match supersolution_params(a.mu, a.n) {
        Ok(c) => (Some(c), None),
        Err(e @ (ConeError::CertificationFailed { .. } | ConeError::SearchExhausted)) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let record = CertificationRecord {
        mu: a.mu,
        n: a.n,
        certified: certificate.is_some(),
        certificate,
        failure,
    };
    let path = a.out.out.join("certificate.json");
    io::write_json(&path, &record)?;
    Ok(Outcome {
        files: vec![path],
        verdict: record.certified,
    })
}

/// Tolerances of the Möbius checks.
const ISOMETRY_TOL: f64 = 1e-9;
const EXACT_TOL: f64 = 1e-12;

#[derive(Serialize)]
struct MobiusRecord {
    l: f64,
    max_isometry_defect: f64,
    jacobian_defect_at_pole_image: f64,
    fixed_point_defect: f64,
    pole_maps_to_infinity: bool,
    passed: bool,
}

#[derive(Serialize)]
struct MobiusReport {
    seed: u64,
    dim: usize,
    points: usize,
    checks: Vec<MobiusRecord>,
    passed: bool,
}

fn mobius_for(l: f64, dim: usize, points: usize, rng: &mut ChaCha8Rng) -> Result<MobiusRecord> {
    if !(l > 0.0) {
        return Err(CliError::Usage(format!("L = {l} must be positive")));
    }
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let mut x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0 * l..3.0 * l)).collect();
        x[dim - 1] = rng.gen_range(0.05 * l..3.0 * l);
        worst = worst.max(isometry_defect(l, &AmbientPoint::new(&x))?);
    }
    let mut opposite = vec![0.0; dim];
    opposite[0] = -l;
    let j = jacobian_t(l, &AmbientPoint::new(&opposite))?;
    let mut jacobian_defect: f64 = 0.0;
    for r in 0..dim {
        for c in 0..dim {
            let target = if r == c { 0.5 } else { 0.0 };
            jacobian_defect = jacobian_defect.max((j[(r, c)] - target).abs());
        }
    }
    let mut fixed = vec![0.0; dim];
    fixed[dim - 1] = l;
    let image = apply_t(l, &AmbientPoint::new(&fixed))?;
    let fixed_defect = image
        .coords()
        .map(|c| c.iter().zip(&fixed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .unwrap_or(f64::INFINITY);
    let mut pole = vec![0.0; dim];
    pole[0] = l;
    let pole_maps_to_infinity = matches!(
        apply_t(l, &AmbientPoint::new(&pole)),
        Ok(AmbientPoint::AtInfinity) | Err(MobiusError::AtInfinity)
    );
    let passed =
        worst <= ISOMETRY_TOL && jacobian_defect <= EXACT_TOL && fixed_defect <= EXACT_TOL && pole_maps_to_infinity;
    Ok(MobiusRecord {
        l,
        max_isometry_defect: worst,
        jacobian_defect_at_pole_image: jacobian_defect,
        fixed_point_defect: fixed_defect,
        pole_maps_to_infinity,
        passed,
    })
}

fn mobius(a: &MobiusArgs) -> Result<Outcome> {
    if a.dim < 2 {
        return Err(CliError::Usage("dimension must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let checks =
        a.l.iter()
            .map(|&l| mobius_for(l, a.dim, a.points, &mut rng))
            .collect::<Result<Vec<_>>>()?;
    let passed = checks.iter().all(|c| c.passed);
    let report = MobiusReport {
        seed: a.seed,
        dim: a.dim,
        points: a.points,
        checks,
        passed,
    };
    let path = a.out.out.join("mobius.json");
    io::write_json(&path, &report)?;
    Ok(Outcome {
        files: vec![path],
        verdict: passed,
    })
}

fn report_outcome(report: &AsymptoticsReport, out: &Path, with_plot: bool) -> Result<Outcome> {
    let (csv, json) = io::write_report(out, "report", report)?;
    let mut files = vec![csv, json];
    if with_plot {
        let svg = out.join("report.svg");
        plot::plot_report(report, &svg)?;
        files.push(svg);
    }
    Ok(Outcome {
        files,
        verdict: report.verdict,
    })
}

fn thm1(a: &Thm1Args) -> Result<Outcome> {
    let spec = io::read_domain(&a.domain)?;
    let cfg = a.sector.config(Some(&spec), a.solver.options(3.0))?;
    let report = theorem1_experiment(&spec, &cfg)?;
    report_outcome(&report, &a.out.out, a.solver.plot)
}

fn thm2(a: &Thm2Args) -> Result<Outcome> {
    let cfg = Theorem2Config {
        sector: a.sector.config(None, a.solver.options(3.0))?,
        mu: a.mu,
        kappa1: a.kappa1,
        kappa2: a.kappa2,
        alpha: a.alpha,
        epsilon: a.epsilon,
        amplitude: a.amplitude,
        mu_max: a.mu_max,
    };
    let report = theorem2_experiment(&cfg)?;
    report_outcome(&report, &a.out.out, a.solver.plot)
}

fn localization(a: &LocalizationArgs) -> Result<Outcome> {
    let spec = io::read_domain(&a.domain)?;
    let reference = io::read_domain(&a.reference)?;
    let cfg = LocalizationConfig {
        sector: a.sector.config(Some(&reference), a.solver.options(3.0))?,
        r0: a.r0,
        beta: a.beta,
    };
    let report = localization_experiment(&spec, &reference, &cfg)?;
    report_outcome(&report, &a.out.out, a.solver.plot)
}

fn smooth(a: &SmoothArgs) -> Result<Outcome> {
    let spec = io::read_domain(&a.domain)?;
    let report = smooth_expansion_experiment(&spec, &a.depths, &a.solver.options(2.0))?;
    report_outcome(&report, &a.out.out, a.solver.plot)
}

fn plot_input(a: &PlotArgs) -> Result<Outcome> {
    let stem = a
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "plot".into());
    let svg = a.out.out.join(format!("{stem}.svg"));
    match io::read_report(&a.input) {
        Ok(report) => plot::plot_report(&report, &svg)?,
        Err(IoError::Malformed { .. }) => plot::plot_field(&io::read_field(&a.input)?, &svg)?,
        Err(e) => return Err(e.into()),
    }
    Ok(Outcome {
        files: vec![svg],
        verdict: true,
    })
}

fn dispatch(command: &Command) -> Result<Outcome> {
    match command {
        Command::Solve(a) => solve(a),
        Command::Cone(a) => cone(a),
        Command::CertifySupersolution(a) => certify(a),
        Command::MobiusCheck(a) => mobius(a),
        Command::Verify(Verify::Thm1(a)) => thm1(a),
        Command::Verify(Verify::Thm2(a)) => thm2(a),
        Command::Verify(Verify::Localization(a)) => localization(a),
        Command::Verify(Verify::Smooth(a)) => smooth(a),
        Command::Plot(a) => plot_input(a),
    }
}

fn threads() -> Result<usize> {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var(THREADS_VAR) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n.min(available)),
            _ => Err(CliError::Usage(format!(
                "{THREADS_VAR} = {v:?} is not a positive integer"
            ))),
        },
        Err(_) => Ok(available),
    }
}

/// Runs a parsed command and writes its manifest. Returns the exit code.
pub fn execute(command: &Command) -> Result<i32> {
    let threads = threads()?;
    let config = RunConfig::from_command(command, threads)?;
    create_out(&config.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Solver(e.to_string()))?;
    let result = pool.install(|| dispatch(command));
    let (files, code, err) = match result {
        Ok(o) => {
            let code = if o.verdict { EXIT_OK } else { EXIT_VERDICT };
            (o.files, code, None)
        }
        Err(e) => (Vec::new(), e.exit_code(), Some(e)),
    };
    let config_json = serde_json::to_value(&config).map_err(|e| CliError::Solver(e.to_string()))?;
    io::write_manifest(&config.out, &config.command, config_json, code, &files)?;
    match err {
        Some(e) => Err(e),
        None => Ok(code),
    }
}
