//! Subcommands. Each builds one [`Table`] from the resolved configuration.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cowvad_core::{
    amplification_factor, beam_divergence, classify_regime, density_map, fit_boost, locate_points, nth_point,
    optimal_epsilon, probability_map, sweep_epsilon, sweep_theta, synthesize_measurements, tilt_sensitivity,
    CoherencyPoint, Error as CoreError, FitModel, FitOptions, ParamMask, PointKind, Regime, RegimeLabel, Setup,
};

use crate::config::{parse_config, ConfigError, OutputFormat, RunConfig};
use crate::measurements::{read_measurements, to_table, MeasurementError};
use crate::output::{write_table, Cell, Meta, Table};

#[derive(Debug, Parser)]
#[command(
    name = "cowvad",
    version,
    about = "Incidence-angle model of an optical weak-value amplification setup"
)]
pub struct Cli {
    /// Configuration file (`key = value`); defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `output.format`.
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Artifact path; standard output when omitted.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Noise seed, echoed in every artifact.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Coherency,
    Anti,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelArg {
    Exact,
    InverseWva,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FreeArg {
    KSigma,
    Epsilon,
    ThetaOffset,
    ZOffset,
}

/// Angle range given directly or as a span around a numbered point.
#[derive(Debug, Clone, Args)]
pub struct ThetaRange {
    #[arg(long)]
    pub min_theta: Option<f64>,
    #[arg(long)]
    pub max_theta: Option<f64>,
    /// Centre the range on this point (coherency points, or anti-coherency
    /// points under anti-coherency selection).
    #[arg(long, conflicts_with_all = ["min_theta", "max_theta"])]
    pub point: Option<usize>,
    /// Half-width of the range around `--point` (rad).
    #[arg(long, default_value_t = 0.01, requires = "point")]
    pub span: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List coherency and anti-coherency angles.
    Coherency {
        #[arg(long, default_value_t = 0.0)]
        min_theta: f64,
        #[arg(long, default_value_t = 1.0)]
        max_theta: f64,
        #[arg(long, value_enum, default_value = "coherency")]
        kind: KindArg,
    },
    /// Pointer position and probability against incidence angle.
    SweepTheta {
        #[command(flatten)]
        range: ThetaRange,
        #[arg(long, default_value_t = 201)]
        points: usize,
        /// Add the tilt sensitivity column.
        #[arg(long)]
        slope: bool,
    },
    /// Pointer position against post-selector deviation at one angle.
    SweepEpsilon {
        #[arg(long, conflicts_with = "point")]
        theta: Option<f64>,
        #[arg(long)]
        point: Option<usize>,
        /// Explicit list (rad); overrides the uniform range.
        #[arg(long, value_delimiter = ',')]
        epsilons: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        min_eps: f64,
        #[arg(long, default_value_t = 0.1)]
        max_eps: f64,
        #[arg(long, default_value_t = 101)]
        eps_points: usize,
    },
    /// Pointer density over angle and absolute position, one row per cell.
    DensityMap {
        #[command(flatten)]
        range: ThetaRange,
        #[arg(long, default_value_t = 101)]
        theta_points: usize,
        /// Defaults to the smallest `gamma_o` over the range minus 5 sigma.
        #[arg(long)]
        z_min: Option<f64>,
        /// Defaults to the largest `gamma_o` over the range plus 5 sigma.
        #[arg(long)]
        z_max: Option<f64>,
        #[arg(long, default_value_t = 201)]
        z_points: usize,
    },
    /// Post-selection probability over angle and raw selector deviation.
    ProbabilityMap {
        #[command(flatten)]
        range: ThetaRange,
        #[arg(long, default_value_t = 101)]
        theta_points: usize,
        #[arg(long, default_value_t = 0.0)]
        min_eps: f64,
        #[arg(long, default_value_t = FRAC_PI_2)]
        max_eps: f64,
        #[arg(long, default_value_t = 101)]
        eps_points: usize,
    },
    /// Selector deviation maximising the pointer shift at each point.
    OptimizeEpsilon {
        #[arg(long)]
        point: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        max_theta: f64,
    },
    /// Tilt sensitivity at one point for selector deviations in units of gamma/sigma.
    SensitivityTable {
        #[arg(long, default_value_t = 7)]
        point: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,1.5,2,4")]
        epsilons: Vec<f64>,
    },
    /// Fit the boost strength to a measurement CSV.
    FitBoost {
        #[arg(long)]
        measurements: PathBuf,
        #[arg(long, default_value_t = 7)]
        point: usize,
        #[arg(long, value_enum, default_value = "exact")]
        model: ModelArg,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "k-sigma")]
        free: Vec<FreeArg>,
    },
    /// Seeded synthetic measurements around a point.
    Synthesize {
        #[arg(long, default_value_t = 7)]
        point: usize,
        #[arg(long, default_value_t = 25)]
        samples: usize,
        /// Offsets span `[-half_span, half_span]` (rad).
        #[arg(long, default_value_t = 5e-3)]
        half_span: f64,
        /// Standard deviation of the noise on each mean (m).
        #[arg(long, default_value_t = 2e-6)]
        noise: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Coherency { .. } => "coherency",
            Command::SweepTheta { .. } => "sweep-theta",
            Command::SweepEpsilon { .. } => "sweep-epsilon",
            Command::DensityMap { .. } => "density-map",
            Command::ProbabilityMap { .. } => "probability-map",
            Command::OptimizeEpsilon { .. } => "optimize-epsilon",
            Command::SensitivityTable { .. } => "sensitivity-table",
            Command::FitBoost { .. } => "fit-boost",
            Command::Synthesize { .. } => "synthesize",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("measurements: {0}")]
    Measurements(#[from] MeasurementError),
    #[error("{0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(CoreError),
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter(_)
            | CoreError::InvalidRange { .. }
            | CoreError::PointNotFound { .. }
            | CoreError::AngleOutOfDomain { .. }
            | CoreError::NoRefraction { .. } => RunError::Usage(e.to_string()),
            other => RunError::Numerical(other),
        }
    }
}

impl RunError {
    /// 2 for configuration, usage and input problems, 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Numerical(_) => 3,
            _ => 2,
        }
    }
}

fn point_kind(setup: &Setup) -> PointKind {
    match setup.selection.regime() {
        Regime::Coherency => PointKind::Coherency,
        Regime::AntiCoherency => PointKind::Anti,
    }
}

fn point(setup: &Setup, n: usize) -> Result<CoherencyPoint, RunError> {
    Ok(nth_point(&setup.crystal, setup.beam.wavenumber, n, point_kind(setup))?)
}

fn resolve_range(setup: &Setup, r: &ThetaRange) -> Result<(f64, f64), RunError> {
    match r.point {
        Some(n) => {
            let p = point(setup, n)?;
            Ok((p.theta - r.span, p.theta + r.span))
        }
        None => Ok((r.min_theta.unwrap_or(0.0), r.max_theta.unwrap_or(1.2))),
    }
}

fn uniform(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, RunError> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) || n == 0 || (n == 1 && lo != hi) {
        return Err(RunError::Usage(format!("invalid range [{lo}, {hi}] with {n} points")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

fn kind_name(kind: PointKind) -> &'static str {
    match kind {
        PointKind::Coherency => "coherency",
        PointKind::Anti => "anti-coherency",
    }
}

fn label_name(label: RegimeLabel) -> &'static str {
    match label {
        RegimeLabel::Wva => "wva",
        RegimeLabel::InverseWva => "inverse-wva",
        RegimeLabel::Intermediate => "intermediate",
        RegimeLabel::Strong => "strong",
    }
}

fn all_degenerate(t: &Table, column: usize) -> bool {
    !t.rows.is_empty() && t.rows.iter().all(|r| r[column] == Cell::Missing)
}

fn degenerate_sweep() -> RunError {
    RunError::Numerical(CoreError::DegeneratePostSelection {
        probability: 0.0,
        floor: cowvad_core::P_FLOOR,
    })
}

/// Build the artifact for `command` under `cfg`.
pub fn build_table(command: &Command, cfg: &RunConfig, seed: u64) -> Result<Table, RunError> {
    let setup = cfg.setup();
    let sigma = setup.beam.sigma;
    let k_o = setup.beam.wavenumber;
    match command {
        Command::Coherency {
            min_theta,
            max_theta,
            kind,
        } => {
            let kinds: &[PointKind] = match kind {
                KindArg::Coherency => &[PointKind::Coherency],
                KindArg::Anti => &[PointKind::Anti],
                KindArg::Both => &[PointKind::Coherency, PointKind::Anti],
            };
            let mut points = Vec::new();
            for &k in kinds {
                points.extend(locate_points(&setup.crystal, k_o, (*min_theta, *max_theta), k)?);
            }
            points.sort_by(|a, b| a.theta.total_cmp(&b.theta));
            let mut t = Table::new(&[
                "index",
                "kind",
                "theta_rad",
                "phase_cycles",
                "gamma_common_m",
                "gamma_m",
                "gamma_over_sigma",
                "classical_slope_m_per_rad",
                "phase_slope_per_rad",
            ]);
            for p in points {
                t.push(vec![
                    p.index.into(),
                    kind_name(p.kind).into(),
                    p.theta.into(),
                    p.phase_cycles.into(),
                    p.gamma_common.into(),
                    p.gamma.into(),
                    (p.gamma / sigma).into(),
                    p.classical_slope.into(),
                    p.phase_slope.into(),
                ]);
            }
            Ok(t)
        }
        Command::SweepTheta { range, points, slope } => {
            let r = resolve_range(&setup, range)?;
            let records = sweep_theta(&setup, r, *points, slope.then_some(cfg.dtheta))?;
            let mut t = Table::new(&[
                "theta_rad",
                "gamma_common_m",
                "gamma_m",
                "phi_rad",
                "z_exp_m",
                "probability",
                "slope_m_per_rad",
                "regime",
            ]);
            for rec in records {
                let ip = setup.params(rec.theta)?;
                let label = classify_regime(&ip, &setup.selection, &setup.beam, &setup.boost, &cfg.thresholds);
                t.push(vec![
                    rec.theta.into(),
                    rec.gamma_common.into(),
                    rec.gamma.into(),
                    rec.phi.into(),
                    rec.z_exp.into(),
                    rec.probability.into(),
                    rec.slope.into(),
                    label_name(label).into(),
                ]);
            }
            if all_degenerate(&t, 4) {
                return Err(degenerate_sweep());
            }
            Ok(t)
        }
        Command::SweepEpsilon {
            theta,
            point: n,
            epsilons,
            min_eps,
            max_eps,
            eps_points,
        } => {
            let theta = match (theta, n) {
                (Some(t), _) => *t,
                (None, Some(n)) => point(&setup, *n)?.theta,
                (None, None) => return Err(RunError::Usage("one of --theta or --point is required".into())),
            };
            let eps = if epsilons.is_empty() {
                uniform(*min_eps, *max_eps, *eps_points)?
            } else {
                epsilons.clone()
            };
            let records = sweep_epsilon(&setup, theta, &eps)?;
            let mut t = Table::new(&[
                "epsilon_rad",
                "theta_rad",
                "gamma_common_m",
                "z_exp_m",
                "shift_m",
                "wva_m",
                "probability",
                "regime",
            ]);
            for rec in records {
                let ip = setup.params(theta)?;
                let sel = setup.selection.with_epsilon(rec.epsilon)?;
                let label = classify_regime(&ip, &sel, &setup.beam, &setup.boost, &cfg.thresholds);
                t.push(vec![
                    rec.epsilon.into(),
                    theta.into(),
                    rec.gamma_common.into(),
                    rec.z_exp.into(),
                    rec.z_exp.map(|z| z - rec.gamma_common).into(),
                    rec.wva.into(),
                    rec.probability.into(),
                    label_name(label).into(),
                ]);
            }
            if all_degenerate(&t, 3) {
                return Err(degenerate_sweep());
            }
            Ok(t)
        }
        Command::DensityMap {
            range,
            theta_points,
            z_min,
            z_max,
            z_points,
        } => {
            let (lo, hi) = resolve_range(&setup, range)?;
            let thetas = uniform(lo, hi, *theta_points)?;
            let (mut g_lo, mut g_hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &th in &thetas {
                let g = setup.params(th)?.gamma_common;
                g_lo = g_lo.min(g);
                g_hi = g_hi.max(g);
            }
            let zs = uniform(
                z_min.unwrap_or(g_lo - 5.0 * sigma),
                z_max.unwrap_or(g_hi + 5.0 * sigma),
                *z_points,
            )?;
            let map = density_map(&setup, &thetas, &zs)?;
            let mut t = Table::new(&["theta_rad", "z_m", "density_per_m"]);
            for (i, &th) in map.rows_axis.iter().enumerate() {
                for (j, &z) in map.cols_axis.iter().enumerate() {
                    t.push(vec![th.into(), z.into(), map.get(i, j).into()]);
                }
            }
            Ok(t)
        }
        Command::ProbabilityMap {
            range,
            theta_points,
            min_eps,
            max_eps,
            eps_points,
        } => {
            let (lo, hi) = resolve_range(&setup, range)?;
            let map = probability_map(
                &setup,
                &uniform(lo, hi, *theta_points)?,
                &uniform(*min_eps, *max_eps, *eps_points)?,
            )?;
            let mut t = Table::new(&["theta_rad", "epsilon_rad", "probability"]);
            for (i, &th) in map.rows_axis.iter().enumerate() {
                for (j, &e) in map.cols_axis.iter().enumerate() {
                    t.push(vec![th.into(), e.into(), map.get(i, j).into()]);
                }
            }
            Ok(t)
        }
        Command::OptimizeEpsilon { point: n, max_theta } => {
            let points = match n {
                Some(n) => vec![point(&setup, *n)?],
                None => locate_points(&setup.crystal, k_o, (0.0, *max_theta), point_kind(&setup))?,
            };
            let mut t = Table::new(&[
                "index",
                "theta_rad",
                "gamma_over_sigma",
                "epsilon_star_rad",
                "epsilon_star_over_half_gamma_sigma",
                "shift_m",
                "shift_over_sigma",
                "probability",
            ]);
            for p in points {
                let best = optimal_epsilon(&p, &setup)?;
                let x = p.gamma / sigma;
                t.push(vec![
                    p.index.into(),
                    p.theta.into(),
                    x.into(),
                    best.epsilon.into(),
                    (best.epsilon / (0.5 * x)).into(),
                    best.shift.into(),
                    (best.shift / sigma).into(),
                    best.probability.into(),
                ]);
            }
            Ok(t)
        }
        Command::SensitivityTable { point: n, epsilons } => {
            let p = point(&setup, *n)?;
            let x = p.gamma / sigma;
            let mut t = Table::new(&[
                "epsilon_gamma_sigma",
                "epsilon_rad",
                "theta_rad",
                "slope_m_per_rad",
                "classical_slope_m_per_rad",
                "amplification",
                "probability",
            ]);
            for &f in epsilons {
                let s = Setup {
                    selection: setup.selection.with_epsilon(f * x)?,
                    ..setup
                };
                let slope = tilt_sensitivity(&s, p.theta, cfg.dtheta)?;
                t.push(vec![
                    f.into(),
                    (f * x).into(),
                    p.theta.into(),
                    slope.into(),
                    p.classical_slope.into(),
                    amplification_factor(slope, p.classical_slope)?.into(),
                    s.probability(p.theta)?.into(),
                ]);
            }
            Ok(t)
        }
        Command::FitBoost {
            measurements,
            point: n,
            model,
            free,
        } => {
            let file = fs::File::open(measurements).map_err(|source| RunError::Io {
                path: measurements.display().to_string(),
                source,
            })?;
            let samples = read_measurements(io::BufReader::new(file))?;
            let p = point(&setup, *n)?;
            let options = FitOptions {
                model: match model {
                    ModelArg::Exact => FitModel::Exact,
                    ModelArg::InverseWva => FitModel::InverseWva,
                },
                free: ParamMask {
                    k_sigma: free.contains(&FreeArg::KSigma),
                    epsilon: free.contains(&FreeArg::Epsilon),
                    theta_offset: free.contains(&FreeArg::ThetaOffset),
                    z_offset: free.contains(&FreeArg::ZOffset),
                },
                ..FitOptions::default()
            };
            let fit = fit_boost(&samples, &p, &setup, &options)?;
            let mut t = Table::new(&[
                "k_sigma_hat",
                "epsilon_rad",
                "theta_offset_rad",
                "z_offset_m",
                "divergence_rad",
                "residual_rms_m",
                "gradient_norm",
                "iterations",
                "converged",
                "samples",
            ]);
            t.push(vec![
                fit.k_sigma_hat.into(),
                fit.params.epsilon.into(),
                fit.params.theta_offset.into(),
                fit.params.z_offset.into(),
                beam_divergence(fit.k_sigma_hat, &setup.beam).into(),
                fit.residual_rms.into(),
                fit.gradient_norm.into(),
                fit.iterations.into(),
                fit.converged.into(),
                samples.len().into(),
            ]);
            Ok(t)
        }
        Command::Synthesize {
            point: n,
            samples,
            half_span,
            noise,
        } => {
            let p = point(&setup, *n)?;
            let offsets = uniform(-half_span, *half_span, *samples)?;
            Ok(to_table(&synthesize_measurements(&setup, &p, &offsets, *noise, seed)?))
        }
    }
}

pub fn load_config(cli: &Cli) -> Result<RunConfig, RunError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| RunError::Io {
                path: path.display().to_string(),
                source,
            })?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(f) = cli.format {
        cfg.format = match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
    }
    Ok(cfg)
}

/// Parse config, build the artifact and write it. The artifact is rendered
/// in memory first so a failure never leaves a partial file behind.
pub fn run(cli: &Cli) -> Result<(), RunError> {
    let cfg = load_config(cli)?;
    let table = build_table(&cli.command, &cfg, cli.seed)?;
    let meta = Meta {
        command: cli.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        seed: cli.seed,
        config: &cfg,
    };
    let mut buf = Vec::new();
    write_table(&mut buf, &table, &meta, cfg.format).expect("writing to memory");
    match &cli.output {
        Some(path) => fs::write(path, &buf).map_err(|source| RunError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => io::stdout().lock().write_all(&buf).map_err(|source| RunError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}
