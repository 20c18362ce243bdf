//! Command-line front end.
//!
//! Exit codes: 0 success, 1 error, 2 usage, 3 the run diverged,
//! 4 a verification check failed. `TDGL_THREADS` sets the worker count
//! (default: all available cores).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tdgl::config::RunConfig;
use tdgl::driver::{self, files, RunStatus, RunSummary, DEFAULT_PROBE_STEPS};
use tdgl::integrators::{round_sig, AlgorithmId};
use tdgl::render::{self, Quantity};
use tdgl::verify::{self, Tolerances, VerifyOptions};

const EXIT_ERROR: u8 = 1;
const EXIT_DIVERGED: u8 = 3;
const EXIT_VERIFY_FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "tdgl", version, about = "Time-dependent Ginzburg-Landau vortex solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate from the seeded Meissner state.
    Run(RunArgs),
    /// Continue a run from its checkpoint.
    Resume(ResumeArgs),
    /// Largest stable time step per algorithm.
    StabilityScan(ScanArgs),
    /// Write a PGM image of a snapshot field.
    Render(RenderArgs),
    /// Run the oracle suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Desk,
    Benchmark,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Built-in configuration used when no file is given.
    #[arg(long, value_enum, default_value = "desk")]
    preset: Preset,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    dt: Option<f64>,
    /// I, II, III or IV.
    #[arg(long)]
    algorithm: Option<AlgorithmId>,
    /// Vector-potential update period.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, c: &mut RunConfig) {
        if let Some(v) = self.dt {
            c.integrator.dt = v;
        }
        if let Some(v) = self.algorithm {
            c.integrator.algorithm = v;
        }
        if let Some(v) = self.m {
            c.integrator.m = v;
        }
        if let Some(v) = self.max_steps {
            c.integrator.max_steps = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = &self.out {
            c.io.out_dir = v.clone();
        }
    }
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, Box<dyn std::error::Error>> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => match self.preset {
                Preset::Desk => RunConfig::desk(AlgorithmId::Implicit, 0.5),
                Preset::Benchmark => RunConfig::benchmark(),
            },
        };
        self.overrides.apply(&mut c);
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct ResumeArgs {
    /// Output directory of the interrupted run.
    dir: PathBuf,
    /// Checkpoint to start from (default: the directory's checkpoint).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated list.
    #[arg(long, value_delimiter = ',', default_value = "I,II,III,IV")]
    algorithms: Vec<AlgorithmId>,
    #[arg(long, default_value_t = 1e-3)]
    lo: f64,
    #[arg(long, default_value_t = 100.0)]
    hi: f64,
    /// Steps per stability probe.
    #[arg(long, default_value_t = DEFAULT_PROBE_STEPS)]
    steps: u64,
    /// Also write the table as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    snapshot: PathBuf,
    /// modulus, phase or field.
    #[arg(long, short, default_value = "modulus")]
    quantity: String,
    /// Image path (default: snapshot path with the quantity and .pgm).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Mark detected vortices.
    #[arg(long)]
    vortices: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = Tolerances::default().operator)]
    tol_operator: f64,
    #[arg(long, default_value_t = Tolerances::default().residual)]
    tol_residual: f64,
    #[arg(long, default_value_t = Tolerances::default().semigroup)]
    tol_semigroup: f64,
    #[arg(long, default_value_t = Tolerances::default().adi_ratio)]
    tol_adi_ratio: f64,
    #[arg(long, default_value_t = Tolerances::default().gauge)]
    tol_gauge: f64,
    #[arg(long, default_value_t = VerifyOptions::default().systems)]
    systems: usize,
    #[arg(long, default_value_t = VerifyOptions::default().gauge_samples)]
    gauge_samples: usize,
    #[arg(long, default_value_t = VerifyOptions::default().seed)]
    seed: u64,
}

fn init_threads() -> Result<(), Box<dyn std::error::Error>> {
    if let Ok(v) = std::env::var("TDGL_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| format!("TDGL_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn print_summary(s: &RunSummary, out: &Path) {
    println!("status        {:?}", s.status);
    println!("algorithm     {} dt {} m {}", s.algorithm, s.dt, s.m);
    println!("N             {}", s.steps);
    println!("C (s/step)    {:.6e}", s.seconds_per_step);
    println!("T (min)       {:.4}", s.total_minutes);
    println!("vortices      {}", s.vortex_count);
    println!("energy        {}", s.energy);
    if let (Some(l), Some(a)) = (s.mean_bond_length, s.mean_bond_angle) {
        println!("bonds         length {l:.4} angle {:.2} deg", a.to_degrees());
    }
    println!("output        {}", out.display());
}

fn finish_run(s: RunSummary, out: &Path) -> ExitCode {
    print_summary(&s, out);
    if s.status == RunStatus::Diverged {
        ExitCode::from(EXIT_DIVERGED)
    } else {
        ExitCode::SUCCESS
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cmd {
        Command::Run(a) => {
            let c = a.config.load()?;
            let out = c.io.out_dir.clone();
            Ok(finish_run(driver::run(c)?, &out))
        }
        Command::Resume(a) => {
            let mut c = RunConfig::load(&a.dir.join(files::CONFIG))?;
            c.io.out_dir = a.dir.clone();
            a.overrides.apply(&mut c);
            c.validate()?;
            let ckpt = a.checkpoint.unwrap_or_else(|| a.dir.join(files::CHECKPOINT));
            let out = c.io.out_dir.clone();
            Ok(finish_run(driver::resume(c, &ckpt)?, &out))
        }
        Command::StabilityScan(a) => {
            let c = a.config.load()?;
            let rows = driver::stability_scan(&c, &a.algorithms, a.lo, a.hi, a.steps);
            println!("{:<10} {:>12}  note", "algorithm", "max dt");
            for r in &rows {
                let dt = r.limit.map_or("-".to_owned(), |v| format!("{}", round_sig(v, 3)));
                let note = match (&r.error, r.unbounded) {
                    (Some(e), _) => e.clone(),
                    (None, true) => "stable at the upper bound".to_owned(),
                    (None, false) => String::new(),
                };
                println!("{:<10} {:>12}  {}", r.algorithm, dt, note);
            }
            if let Some(p) = a.json {
                tdgl::io::write_json(&p, &rows)?;
            }
            Ok(if rows.iter().any(|r| r.error.is_some()) { ExitCode::from(EXIT_ERROR) } else { ExitCode::SUCCESS })
        }
        Command::Render(a) => {
            let q: Quantity = a.quantity.parse()?;
            let out = a.out.unwrap_or_else(|| a.snapshot.with_extension(format!("{q}.pgm")));
            let r = render::render(&a.snapshot, q, &out, a.vortices)?;
            println!("{} {}x{} min {} max {}", out.display(), r.width, r.height, r.min, r.max);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(a) => {
            let opts = VerifyOptions {
                tol: Tolerances {
                    operator: a.tol_operator,
                    residual: a.tol_residual,
                    semigroup: a.tol_semigroup,
                    adi_ratio: a.tol_adi_ratio,
                    gauge: a.tol_gauge,
                },
                systems: a.systems,
                gauge_samples: a.gauge_samples,
                seed: a.seed,
                ..Default::default()
            };
            let report = verify::run_checks(&opts);
            print!("{report}");
            Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VERIFY_FAILED) })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| dispatch(cli.command));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
