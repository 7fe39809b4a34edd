use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use patlab::experiment::{add_noise_windowed, simulate_data, CONFIG_KEYS};
use patlab::io::{load_field, load_sinogram, save_field, save_pgm, save_sinogram};
use patlab::{
    adjoint_test, boundary_sensors, make_medium, make_phantom, rel_error, rel_residual, run_experiment, ExperimentConfig,
    PatError, Problem, StopRule,
};

#[derive(Parser)]
#[command(name = "pat", version, about = "Photoacoustic tomography in damped, heterogeneous media")]
struct Cli {
    /// Load `key = value` defaults from this file; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(flatten)]
    params: Params,

    #[command(subcommand)]
    command: Command,
}

/// One flag per config key. Values are parsed by the config itself so the
/// file and the command line accept exactly the same syntax.
#[derive(Args, Default)]
struct Params {
    /// Samples per side of [-1, 1]^2 (odd).
    #[arg(long, global = true)]
    n_omega: Option<String>,
    /// Computational domain half-width.
    #[arg(long, global = true)]
    oversize: Option<String>,
    /// e.g. `1;bump:0.3,0,0.4,0.2`
    #[arg(long, global = true)]
    speed: Option<String>,
    #[arg(long, global = true)]
    damping: Option<String>,
    /// `;`-separated primitives, e.g. `disk:0,0,0.3,1;bump:0.2,0.1,0.2,0.5`
    #[arg(long, global = true)]
    phantom: Option<String>,
    /// `full` or `half_plane:<x>`
    #[arg(long, global = true)]
    sensors: Option<String>,
    /// Final time T.
    #[arg(long = "final-time", visible_alias = "T", global = true)]
    final_time: Option<String>,
    /// Time samples on [0, T].
    #[arg(long, global = true)]
    nt: Option<String>,
    /// landweber | sd | cg | h1 | tv
    #[arg(long, global = true)]
    method: Option<String>,
    #[arg(long, global = true)]
    lambda: Option<String>,
    #[arg(long, global = true)]
    max_iters: Option<String>,
    /// Relative l2 noise level, e.g. 0.59.
    #[arg(long, global = true)]
    noise: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// `max_iters` or `discrepancy`
    #[arg(long, global = true)]
    stop: Option<String>,
    #[arg(long, global = true)]
    tau: Option<String>,
    #[arg(long, global = true)]
    gamma: Option<String>,
    /// `fine` (default) or `same`
    #[arg(long, global = true)]
    data_grid: Option<String>,
    #[arg(long, global = true)]
    output: Option<String>,
}

impl Params {
    fn pairs(&self) -> [(&'static str, &Option<String>); 18] {
        [
            ("n_omega", &self.n_omega),
            ("oversize", &self.oversize),
            ("speed", &self.speed),
            ("damping", &self.damping),
            ("phantom", &self.phantom),
            ("sensors", &self.sensors),
            ("T", &self.final_time),
            ("nt", &self.nt),
            ("method", &self.method),
            ("lambda", &self.lambda),
            ("max_iters", &self.max_iters),
            ("noise", &self.noise),
            ("seed", &self.seed),
            ("stop", &self.stop),
            ("tau", &self.tau),
            ("gamma", &self.gamma),
            ("data_grid", &self.data_grid),
            ("output", &self.output),
        ]
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample the phantom on the reconstruction grid.
    Phantom {
        #[arg(long, value_name = "FILE.patf")]
        out: PathBuf,
        #[arg(long, value_name = "FILE.pgm")]
        pgm: Option<PathBuf>,
    },
    /// Sample sound speed and damping on the reconstruction grid.
    Medium {
        #[arg(long, value_name = "FILE.patf")]
        speed_out: PathBuf,
        #[arg(long, value_name = "FILE.patf")]
        damping_out: PathBuf,
    },
    /// Simulate exact boundary data for the phantom.
    Simulate {
        #[arg(long, value_name = "FILE.pats")]
        out: PathBuf,
        #[arg(long, value_name = "FILE.pgm")]
        pgm: Option<PathBuf>,
    },
    /// Add Gaussian noise at the configured level and seed.
    Noise {
        #[arg(long, value_name = "FILE.pats")]
        input: PathBuf,
        #[arg(long, value_name = "FILE.pats")]
        out: PathBuf,
    },
    /// Reconstruct from a sinogram file.
    Reconstruct {
        #[arg(long, value_name = "FILE.pats")]
        data: PathBuf,
        #[arg(long, value_name = "FILE.patf")]
        out: PathBuf,
        /// Iteration log.
        #[arg(long, value_name = "FILE.csv")]
        log: Option<PathBuf>,
        /// Reference field for relative errors.
        #[arg(long, value_name = "FILE.patf")]
        truth: Option<PathBuf>,
        /// Noise norm in the data-space metric (needed for `stop = discrepancy`).
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Dot-product test of the adjoint operator.
    AdjointTest {
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
    /// Relative error of a field, and its relative residual against data.
    Metrics {
        #[arg(long, value_name = "FILE.patf")]
        field: PathBuf,
        #[arg(long, value_name = "FILE.patf")]
        truth: Option<PathBuf>,
        #[arg(long, value_name = "FILE.pats")]
        data: Option<PathBuf>,
    },
    /// Simulate, add noise, reconstruct and write every artifact.
    Run,
    /// Print the effective configuration.
    Config,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

fn config(cli: &Cli) -> patlab::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    for (key, value) in cli.params.pairs() {
        debug_assert!(CONFIG_KEYS.contains(&key));
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> patlab::Result<()> {
    let cfg = config(cli)?;
    match &cli.command {
        Command::Phantom { out, pgm } => {
            let f = make_phantom(cfg.grid()?, &cfg.phantom)?;
            save_field(&f, out)?;
            if let Some(p) = pgm {
                save_pgm(&f.values, p)?;
            }
            println!("phantom {}x{} written to {}", f.grid.nx, f.grid.ny, out.display());
        }
        Command::Medium { speed_out, damping_out } => {
            let m = make_medium(cfg.grid()?, &cfg.speed, &cfg.damping)?;
            save_field(&m.c, speed_out)?;
            save_field(&m.a, damping_out)?;
            println!("c in [{:.4}, {:.4}], a in [{:.4}, {:.4}], c0 = {:.4}", m.c.min(), m.c.max(), m.a.min(), m.a.max(), m.c0);
        }
        Command::Simulate { out, pgm } => {
            let g = simulate_data(&cfg)?;
            save_sinogram(&g, out)?;
            if let Some(p) = pgm {
                save_pgm(&g.values, p)?;
            }
            println!("{} sensors x {} samples written to {}", g.count(), g.nt(), out.display());
        }
        Command::Noise { input, out } => {
            let g = load_sinogram(input)?;
            // limited-view data only carries noise where sensors observe
            let sensors = boundary_sensors(cfg.grid()?, cfg.view)?;
            let window = (sensors.count() == g.count()).then_some(sensors.chi.as_slice());
            let (noisy, delta) = add_noise_windowed(&g, cfg.noise, cfg.seed, window)?;
            save_sinogram(&noisy, out)?;
            println!("delta = {delta:.6e} (relative {})", cfg.noise);
        }
        Command::Reconstruct { data, out, log, truth, delta } => reconstruct(&cfg, data, out, log.as_deref(), truth.as_deref(), *delta)?,
        Command::AdjointTest { trials } => {
            let report = adjoint_test(&cfg, *trials)?;
            for (i, m) in report.mismatches.iter().enumerate() {
                println!("trial {i}: {m:.3e}");
            }
            println!("max mismatch {:.3e}", report.max());
            if !report.passed() {
                return Err(PatError::Breakdown {
                    iteration: 0,
                    reason: format!("adjoint mismatch {:.3e} exceeds 1e-2", report.max()),
                });
            }
        }
        Command::Metrics { field, truth, data } => {
            let f = load_field(field)?;
            if let Some(t) = truth {
                let t = load_field(t)?;
                f.grid.check_same(&t.grid)?;
                println!("relative error {:.6}", rel_error(&flat(&f.values), &flat(&t.values))?);
            }
            if let Some(d) = data {
                let op = patlab::experiment::build_operator(&cfg)?;
                let g = load_sinogram(d)?;
                let res = rel_residual(&op, &op.field_to_vec(&f)?, &op.sinogram_to_vec(&g)?)?;
                println!("relative residual {res:.6}");
            }
        }
        Command::Run => {
            let report = run_experiment(&cfg)?;
            println!("method {} iterations {}", report.method, report.iterations);
            println!("relative error {:.6}", report.rel_error);
            println!("relative residual {:.6}", report.rel_residual);
            if let Some(dir) = &cfg.output {
                println!("artifacts in {}", dir.display());
            }
        }
        Command::Config => print!("{}", cfg.to_text()),
    }
    Ok(())
}

fn reconstruct(
    cfg: &ExperimentConfig,
    data: &Path,
    out: &Path,
    log_path: Option<&Path>,
    truth: Option<&Path>,
    delta: Option<f64>,
) -> patlab::Result<()> {
    let op = patlab::experiment::build_operator(cfg)?;
    let g = load_sinogram(data)?;
    let truth = match truth {
        Some(p) => load_field(p)?,
        None => patlab::ScalarField::zeros(op.grid),
    };
    let mut problem = Problem::with_data(ExperimentConfig { noise: 0.0, ..cfg.clone() }, op, truth, g)?;
    let stop = match cfg.stop {
        patlab::StopKind::MaxIters => StopRule::MaxIters(cfg.max_iters),
        patlab::StopKind::Discrepancy => {
            let d = delta.ok_or_else(|| PatError::InvalidArgument("stop = discrepancy needs --delta".into()))?;
            problem.delta_y = d;
            StopRule::discrepancy(d, cfg.tau, cfg.max_iters)?
        }
    };
    let has_truth = problem.truth.max_abs() > 0.0;
    let (f, mut log) = problem.solve(cfg.method, &stop, cfg.lambda)?;
    if !has_truth {
        log.records.iter_mut().for_each(|r| r.rel_error = None);
    }
    let field = problem.op.vec_to_field(&f)?;
    save_field(&field, out)?;
    if let Some(p) = log_path {
        log.write_csv(std::io::BufWriter::new(std::fs::File::create(p)?))?;
    }
    println!("method {} iterations {}", cfg.method, log.iterations());
    println!("relative residual {:.6}", rel_residual(&problem.op, &f, &problem.data_vec())?);
    if has_truth {
        println!("relative error {:.6}", rel_error(&f, &problem.truth_vec())?);
    }
    Ok(())
}

fn flat(v: &ndarray::Array2<f64>) -> ndarray::Array1<f64> {
    v.iter().copied().collect()
}
