//! End-to-end experiments: configuration, synthetic data with fine-to-coarse
//! restriction, noise, reconstruction with any method, and artifacts on disk.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, PatError, Result};
use crate::grid::{make_grid, Grid2D, ScalarField};
use crate::io;
use crate::kspace::simulate;
use crate::medium::{make_medium, make_phantom, CoefficientSpec, Medium, PhantomSpec, Primitive};
use crate::operator::LinearOperator;
use crate::pat::{inner_x, inner_y, norm_x, norm_y, PatOperator};
use crate::sensors::{boundary_sensors, SensorArray, Sinogram, View};
use crate::solvers::{cgne, landweber, steepest_descent, IterationLog, StopRule, DEFAULT_TAU};
use crate::variational::{h1_reconstruct, operator_norm, tv_reconstruct, DiscreteGradient, TvOptions, NORM_SEED};

/// Power iterations behind the default Landweber step.
pub const LANDWEBER_NORM_ITERS: usize = 20;
/// Threshold on the largest adjoint mismatch accepted by [`adjoint_test`].
pub const ADJOINT_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Landweber,
    SteepestDescent,
    Cgne,
    H1,
    Tv,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Landweber, Method::SteepestDescent, Method::Cgne, Method::H1, Method::Tv];

    pub fn needs_lambda(self) -> bool {
        matches!(self, Method::H1 | Method::Tv)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Landweber => "landweber",
            Method::SteepestDescent => "sd",
            Method::Cgne => "cg",
            Method::H1 => "h1",
            Method::Tv => "tv",
        })
    }
}

impl FromStr for Method {
    type Err = PatError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "landweber" | "lw" => Ok(Method::Landweber),
            "sd" | "steepest" | "steepest_descent" => Ok(Method::SteepestDescent),
            "cg" | "cgne" => Ok(Method::Cgne),
            "h1" => Ok(Method::H1),
            "tv" => Ok(Method::Tv),
            other => Err(invalid(format!("unknown method `{other}` (landweber, sd, cg, h1, tv)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopKind {
    MaxIters,
    Discrepancy,
}

impl fmt::Display for StopKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopKind::MaxIters => "max_iters",
            StopKind::Discrepancy => "discrepancy",
        })
    }
}

impl FromStr for StopKind {
    type Err = PatError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "max_iters" => Ok(StopKind::MaxIters),
            "discrepancy" => Ok(StopKind::Discrepancy),
            other => Err(invalid(format!("unknown stop rule `{other}` (max_iters, discrepancy)"))),
        }
    }
}

/// Where the synthetic data come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataGrid {
    /// Twice finer in space and time, then restricted.
    Fine,
    /// The reconstruction grid itself (commits the inverse crime).
    Same,
}

impl fmt::Display for DataGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataGrid::Fine => "fine",
            DataGrid::Same => "same",
        })
    }
}

impl FromStr for DataGrid {
    type Err = PatError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fine" => Ok(DataGrid::Fine),
            "same" => Ok(DataGrid::Same),
            other => Err(invalid(format!("unknown data grid `{other}` (fine, same)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_omega: usize,
    pub oversize: usize,
    pub speed: CoefficientSpec,
    pub damping: CoefficientSpec,
    pub phantom: PhantomSpec,
    pub view: View,
    pub final_time: f64,
    pub nt: usize,
    pub method: Method,
    pub lambda: Option<f64>,
    pub max_iters: usize,
    /// Target relative l2 noise level; 0 disables noise.
    pub noise: f64,
    pub seed: u64,
    pub stop: StopKind,
    pub tau: f64,
    /// Landweber step; defaults to `0.9 * 2 / ||W||^2`.
    pub gamma: Option<f64>,
    pub data_grid: DataGrid,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_omega: 101,
            oversize: 2,
            speed: CoefficientSpec::default_speed(),
            damping: CoefficientSpec::default_damping(),
            phantom: PhantomSpec::default_phantom(),
            view: View::Full,
            final_time: 2.5,
            nt: 251,
            method: Method::Cgne,
            lambda: None,
            max_iters: 40,
            noise: 0.0,
            seed: 0,
            stop: StopKind::MaxIters,
            tau: DEFAULT_TAU,
            gamma: None,
            data_grid: DataGrid::Fine,
            output: None,
        }
    }
}

/// Keys accepted by [`ExperimentConfig::set`] and the config file.
pub const CONFIG_KEYS: [&str; 18] = [
    "n_omega", "oversize", "speed", "damping", "phantom", "sensors", "T", "nt", "method", "lambda", "max_iters",
    "noise", "seed", "stop", "tau", "gamma", "data_grid", "output",
];

impl ExperimentConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let num = |v: &str| -> Result<f64> { v.parse().map_err(|_| invalid(format!("{key}: `{v}` is not a number"))) };
        let int = |v: &str| -> Result<usize> {
            v.parse().map_err(|_| invalid(format!("{key}: `{v}` is not a nonnegative integer")))
        };
        let opt = |v: &str| -> Result<Option<f64>> {
            if v.is_empty() || v == "none" {
                Ok(None)
            } else {
                num(v).map(Some)
            }
        };
        match key {
            "n_omega" => self.n_omega = int(value)?,
            "oversize" => self.oversize = int(value)?,
            "speed" => self.speed = value.parse()?,
            "damping" => self.damping = value.parse()?,
            "phantom" => self.phantom = value.parse()?,
            "sensors" => self.view = value.parse()?,
            "T" => self.final_time = num(value)?,
            "nt" => self.nt = int(value)?,
            "method" => self.method = value.parse()?,
            "lambda" => self.lambda = opt(value)?,
            "max_iters" => self.max_iters = int(value)?,
            "noise" => self.noise = num(value)?,
            "seed" => self.seed = value.parse().map_err(|_| invalid(format!("seed: `{value}` is not an integer")))?,
            "stop" => self.stop = value.parse()?,
            "tau" => self.tau = num(value)?,
            "gamma" => self.gamma = opt(value)?,
            "data_grid" => self.data_grid = value.parse()?,
            "output" => self.output = if value.is_empty() { None } else { Some(PathBuf::from(value)) },
            _ => return Err(invalid(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Flat `key = value` text; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply(text)?;
        Ok(cfg)
    }

    pub fn apply(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(k.trim(), v).map_err(|e| invalid(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        kv("n_omega", self.n_omega.to_string());
        kv("oversize", self.oversize.to_string());
        kv("speed", self.speed.to_string());
        kv("damping", self.damping.to_string());
        kv("phantom", self.phantom.to_string());
        kv("sensors", self.view.to_string());
        kv("T", self.final_time.to_string());
        kv("nt", self.nt.to_string());
        kv("method", self.method.to_string());
        kv("lambda", opt(self.lambda));
        kv("max_iters", self.max_iters.to_string());
        kv("noise", self.noise.to_string());
        kv("seed", self.seed.to_string());
        kv("stop", self.stop.to_string());
        kv("tau", self.tau.to_string());
        kv("gamma", opt(self.gamma));
        kv("data_grid", self.data_grid.to_string());
        kv("output", self.output.as_ref().map(|p| p.display().to_string()).unwrap_or_default());
        s
    }

    pub fn grid(&self) -> Result<Grid2D> {
        make_grid(self.n_omega, self.oversize)
    }

    /// Checks every parameter before any simulation starts.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        self.phantom.validate()?;
        make_medium(grid, &self.speed, &self.damping)?;
        if self.nt < 2 {
            return Err(invalid(format!("nt must be at least 2, got {}", self.nt)));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(invalid(format!("T must be positive, got {}", self.final_time)));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(invalid(format!("noise must be nonnegative, got {}", self.noise)));
        }
        if !(self.tau > 1.0) {
            return Err(invalid(format!("tau must exceed 1, got {}", self.tau)));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(invalid(format!("gamma must be positive, got {g}")));
            }
        }
        match (self.method, self.lambda) {
            (m, None) if m.needs_lambda() => {
                return Err(invalid(format!("method {m} needs lambda")));
            }
            (Method::Tv, Some(l)) if !(l > 0.0 && l.is_finite()) => {
                return Err(invalid(format!("tv needs lambda > 0, got {l}")));
            }
            (_, Some(l)) if !(l >= 0.0 && l.is_finite()) => {
                return Err(invalid(format!("lambda must be nonnegative, got {l}")));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Adds i.i.d. Gaussian noise rescaled so `||g_delta - g||_2 = target_rel ||g||_2`.
/// Returns the noisy data and `delta = target_rel ||g||_2`.
pub fn add_noise(g: &Sinogram, target_rel: f64, seed: u64) -> Result<(Sinogram, f64)> {
    add_noise_windowed(g, target_rel, seed, None)
}

/// As [`add_noise`], with noise restricted to the rows where `window` is nonzero.
pub fn add_noise_windowed(g: &Sinogram, target_rel: f64, seed: u64, window: Option<&[f64]>) -> Result<(Sinogram, f64)> {
    if !(target_rel >= 0.0 && target_rel.is_finite()) {
        return Err(invalid(format!("noise level must be nonnegative, got {target_rel}")));
    }
    if let Some(w) = window {
        if w.len() != g.count() {
            return Err(PatError::DimensionMismatch { expected: g.count(), got: w.len() });
        }
    }
    if target_rel == 0.0 {
        return Ok((g.clone(), 0.0));
    }
    let gn = g.l2();
    if gn == 0.0 {
        return Err(invalid("relative noise on zero data is undefined"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = Array2::from_shape_simple_fn(g.values.dim(), || StandardNormal.sample(&mut rng));
    if let Some(w) = window {
        for (mut row, &c) in noise.outer_iter_mut().zip(w) {
            if c == 0.0 {
                row.fill(0.0);
            }
        }
    }
    let nn = noise.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
    if nn == 0.0 {
        return Err(invalid("noise window is empty"));
    }
    let delta = target_rel * gn;
    noise *= delta / nn;
    Ok((Sinogram { values: &g.values + &noise, h_t: g.h_t }, delta))
}

/// `||f_k - f_true||_2 / ||f_true||_2`.
pub fn rel_error(f_k: &Array1<f64>, f_true: &Array1<f64>) -> Result<f64> {
    if f_k.len() != f_true.len() {
        return Err(PatError::DimensionMismatch { expected: f_true.len(), got: f_k.len() });
    }
    let tn = f_true.dot(f_true).sqrt();
    if tn == 0.0 {
        return Err(invalid("relative error against a zero field"));
    }
    Ok((f_k - f_true).mapv(|v| v * v).sum().sqrt() / tn)
}

/// `||W f_k - g||_2 / ||g||_2` in plain sums.
pub fn rel_residual<O: LinearOperator>(op: &O, f_k: &Array1<f64>, g: &Array1<f64>) -> Result<f64> {
    let gn = g.dot(g).sqrt();
    if gn == 0.0 {
        return Err(invalid("relative residual for zero data"));
    }
    let r = op.apply(f_k)? - g;
    Ok(r.dot(&r).sqrt() / gn)
}

/// Coarse sinogram from one on the twice finer grid: every second time
/// sample and a (1/4, 1/2, 1/4) average over the fine sensors around each
/// coarse one (the sensor ring is closed, so indices wrap).
pub fn restrict_sinogram(fine: &Sinogram) -> Result<Sinogram> {
    let (count, nt) = fine.values.dim();
    if count % 2 != 0 || nt % 2 == 0 {
        return Err(invalid(format!(
            "restriction needs an even sensor count and odd sample count, got {count} x {nt}"
        )));
    }
    let (cc, ct) = (count / 2, nt.div_ceil(2));
    let v = &fine.values;
    let values = Array2::from_shape_fn((cc, ct), |(s, m)| {
        let (c, k) = (2 * s, 2 * m);
        let prev = (c + count - 1) % count;
        let next = (c + 1) % count;
        0.25 * v[[prev, k]] + 0.5 * v[[c, k]] + 0.25 * v[[next, k]]
    });
    Ok(Sinogram { values, h_t: 2.0 * fine.h_t })
}

/// Exact data for the configured phantom and medium, on the reconstruction
/// sensor/time grid, zeroed on unobserved sensors.
pub fn simulate_data(cfg: &ExperimentConfig) -> Result<Sinogram> {
    let (grid, nt) = match cfg.data_grid {
        DataGrid::Same => (cfg.grid()?, cfg.nt),
        DataGrid::Fine => (make_grid(2 * cfg.n_omega - 1, cfg.oversize)?, 2 * cfg.nt - 1),
    };
    let medium = make_medium(grid, &cfg.speed, &cfg.damping)?;
    let phantom = make_phantom(grid, &cfg.phantom)?;
    let sensors = boundary_sensors(grid, View::Full)?;
    let h_t = cfg.final_time / (nt - 1) as f64;
    let (mut g, _) = simulate(&phantom, &medium, &sensors, nt, h_t, None)?;
    if cfg.data_grid == DataGrid::Fine {
        g = restrict_sinogram(&g)?;
    }
    let coarse = boundary_sensors(cfg.grid()?, cfg.view)?;
    for (mut row, &c) in g.values.outer_iter_mut().zip(&coarse.chi) {
        if c == 0.0 {
            row.fill(0.0);
        }
    }
    Ok(g)
}

/// A reconstruction problem: operator, truth, and (possibly noisy) data.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: ExperimentConfig,
    pub op: PatOperator,
    pub truth: ScalarField,
    pub clean: Sinogram,
    pub data: Sinogram,
    /// Plain l2 noise norm.
    pub delta: f64,
    /// Noise norm in the data-space metric, used by the discrepancy rule.
    pub delta_y: f64,
}

impl Problem {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid()?;
        let medium = make_medium(grid, &cfg.speed, &cfg.damping)?;
        let sensors = boundary_sensors(grid, cfg.view)?;
        let op = PatOperator::new(medium, sensors, cfg.nt, cfg.final_time)?;
        let truth = make_phantom(grid, &cfg.phantom)?;
        let clean = simulate_data(cfg)?;
        Self::with_data(cfg.clone(), op, truth, clean)
    }

    /// Wraps given exact data; noise is added per the config.
    pub fn with_data(config: ExperimentConfig, op: PatOperator, truth: ScalarField, clean: Sinogram) -> Result<Self> {
        let (data, delta) = add_noise_windowed(&clean, config.noise, config.seed, Some(&op.sensors.chi))?;
        let noise = Sinogram { values: &data.values - &clean.values, h_t: data.h_t };
        let delta_y = norm_y(&noise, &op.sensors)?;
        Ok(Self { config, op, truth, clean, data, delta, delta_y })
    }

    /// Same operator and exact data with a different noise level or seed.
    pub fn renoised(&self, noise: f64, seed: u64) -> Result<Self> {
        let mut cfg = self.config.clone();
        cfg.noise = noise;
        cfg.seed = seed;
        Self::with_data(cfg, self.op.clone(), self.truth.clone(), self.clean.clone())
    }

    pub fn truth_vec(&self) -> Array1<f64> {
        crate::pat::flatten(self.truth.values.clone())
    }

    pub fn data_vec(&self) -> Array1<f64> {
        crate::pat::flatten(self.data.values.clone())
    }

    pub fn gradient(&self) -> Result<DiscreteGradient> {
        let g = self.op.grid;
        DiscreteGradient::new(g.nx, g.ny, g.h, self.op.domain().clone(), g.h * g.h)
    }

    pub fn stop_rule(&self, max_iters: usize) -> Result<StopRule> {
        match self.config.stop {
            StopKind::MaxIters => Ok(StopRule::MaxIters(max_iters)),
            StopKind::Discrepancy => StopRule::discrepancy(self.delta_y, self.config.tau, max_iters),
        }
    }

    /// `0.9 * 2 / L^2` with `L` from power iteration.
    pub fn landweber_step(&self) -> Result<f64> {
        let l = operator_norm(&[&self.op as &dyn LinearOperator], LANDWEBER_NORM_ITERS, NORM_SEED)?;
        if l == 0.0 {
            return Err(invalid("forward operator vanishes"));
        }
        Ok(0.9 * 2.0 / (l * l))
    }

    pub fn solve(&self, method: Method, stop: &StopRule, lambda: Option<f64>) -> Result<(Array1<f64>, IterationLog)> {
        let g = self.data_vec();
        let truth = self.truth_vec();
        let t = Some(&truth);
        let need = |l: Option<f64>| l.ok_or_else(|| invalid(format!("method {method} needs lambda")));
        match method {
            Method::Landweber => {
                let gamma = match self.config.gamma {
                    Some(g) => g,
                    None => self.landweber_step()?,
                };
                landweber(&self.op, &g, gamma, stop, t)
            }
            Method::SteepestDescent => steepest_descent(&self.op, &g, stop, t),
            Method::Cgne => cgne(&self.op, &g, stop, t),
            Method::H1 => h1_reconstruct(&self.op, &self.gradient()?, &g, need(lambda)?, stop, t),
            Method::Tv => {
                let opts = TvOptions::new(need(lambda)?, stop.max_iters());
                tv_reconstruct(&self.op, &self.gradient()?, &g, &opts, t)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub method: Method,
    pub iterations: usize,
    pub rel_error: f64,
    pub rel_residual: f64,
    pub delta: f64,
    pub log: IterationLog,
    pub reconstruction: ScalarField,
}

/// Simulates data, reconstructs, and writes artifacts when an output
/// directory is configured.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let problem = Problem::build(cfg)?;
    let stop = problem.stop_rule(cfg.max_iters)?;
    let (f, log) = problem.solve(cfg.method, &stop, cfg.lambda)?;
    let reconstruction = problem.op.vec_to_field(&f)?;
    let report = ExperimentReport {
        method: cfg.method,
        iterations: log.iterations(),
        rel_error: rel_error(&f, &problem.truth_vec())?,
        rel_residual: rel_residual(&problem.op, &f, &problem.data_vec())?,
        delta: problem.delta,
        log,
        reconstruction,
    };
    if let Some(dir) = &cfg.output {
        write_artifacts(dir, &problem, &report)?;
    }
    Ok(report)
}

fn write_artifacts(dir: &Path, problem: &Problem, report: &ExperimentReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    io::save_field(&problem.truth, dir.join("phantom.patf"))?;
    io::save_pgm(&problem.truth.values, dir.join("phantom.pgm"))?;
    io::save_field(&report.reconstruction, dir.join("reconstruction.patf"))?;
    io::save_pgm(&report.reconstruction.values, dir.join("reconstruction.pgm"))?;
    io::save_sinogram(&problem.data, dir.join("data.pats"))?;
    io::save_pgm(&problem.data.values, dir.join("data.pgm"))?;
    report.log.write_csv(std::io::BufWriter::new(fs::File::create(dir.join("log.csv"))?))?;
    fs::write(dir.join("config.txt"), problem.config.to_text())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointReport {
    pub mismatches: Vec<f64>,
}

impl AdjointReport {
    pub fn max(&self) -> f64 {
        self.mismatches.iter().copied().fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max() <= ADJOINT_TOLERANCE
    }
}

/// Relative mismatch `|<W f, g>_Y - <f, W* g>_X| / (||W f|| ||g|| + ||f|| ||W* g||)`,
/// zero when both scales vanish.
pub fn dot_mismatch(op: &PatOperator, f: &ScalarField, g: &Sinogram) -> Result<f64> {
    let wf = op.forward(f)?;
    let wsg = op.adjoint_field(g)?;
    let lhs = inner_y(&wf, g, &op.sensors)?;
    let rhs = inner_x(f, &wsg, &op.medium)?;
    let scale = norm_y(&wf, &op.sensors)? * norm_y(g, &op.sensors)? + norm_x(f, &op.medium)? * norm_x(&wsg, &op.medium)?;
    Ok(if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale })
}

/// Dot-product test of the adjoint with `trials` random smooth pairs.
pub fn adjoint_test(cfg: &ExperimentConfig, trials: usize) -> Result<AdjointReport> {
    if trials == 0 {
        return Err(invalid("adjoint test needs at least one trial"));
    }
    let grid = cfg.grid()?;
    let medium = make_medium(grid, &cfg.speed, &cfg.damping)?;
    let sensors = boundary_sensors(grid, cfg.view)?;
    let op = PatOperator::new(medium, sensors, cfg.nt, cfg.final_time)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut mismatches = Vec::with_capacity(trials);
    for _ in 0..trials {
        let f = random_field(grid, &mut rng)?;
        let g = random_sinogram(&op.sensors, op.nt, op.h_t, &mut rng);
        mismatches.push(dot_mismatch(&op, &f, &g)?);
    }
    Ok(AdjointReport { mismatches })
}

/// Three smooth bumps with random centres, radii and signed amplitudes.
pub fn random_field(grid: Grid2D, rng: &mut impl Rng) -> Result<ScalarField> {
    let prims = (0..3)
        .map(|_| {
            let r = rng.gen_range(0.15..0.45);
            let reach = 0.9 - r;
            let rho = reach * rng.gen::<f64>().sqrt();
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            Primitive::bump(rho * phi.cos(), rho * phi.sin(), r, rng.gen_range(-1.0..1.0))
        })
        .collect();
    make_phantom(grid, &PhantomSpec::new(prims))
}

/// Random superposition of a few smooth sensor/time modes, tapered to zero at `t = 0`.
pub fn random_sinogram(sensors: &SensorArray, nt: usize, h_t: f64, rng: &mut impl Rng) -> Sinogram {
    let count = sensors.count();
    let final_time = (nt - 1) as f64 * h_t;
    let modes: Vec<(f64, f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(1.0..12.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0..6) as f64,
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let values = Array2::from_shape_fn((count, nt), |(s, k)| {
        let t = k as f64 * h_t;
        let arc = std::f64::consts::TAU * s as f64 / count as f64;
        let taper = (std::f64::consts::PI * t / (2.0 * final_time)).sin();
        taper
            * modes
                .iter()
                .map(|&(a, w, ph, m, ps)| a * (w * t + ph).sin() * (m * arc + ps).cos())
                .sum::<f64>()
    });
    Sinogram { values, h_t }
}

/// Builds the configured operator alone (no data).
pub fn build_operator(cfg: &ExperimentConfig) -> Result<PatOperator> {
    let grid = cfg.grid()?;
    let medium: Medium = make_medium(grid, &cfg.speed, &cfg.damping)?;
    let sensors = boundary_sensors(grid, cfg.view)?;
    PatOperator::new(medium, sensors, cfg.nt, cfg.final_time)
}
