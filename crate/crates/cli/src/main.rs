use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mmdflow_cli::manifest::{
    Checkpoints, InitName, KernelName, Preset, PrecisionName, RunManifest, SummationSpec, TargetName,
};
use mmdflow_cli::{bench, run, verify, Failure};

#[derive(Parser)]
#[command(name = "mmdflow", version, about = "Particle flows for kernel MMD functionals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a flow and write snapshots and a trace.
    Flow(FlowArgs),
    /// Run numerical self-checks.
    Verify {
        /// splines, profiles, slicing, cpd, dirac, transport or all.
        #[arg(default_value = "all")]
        suite: String,
    },
    /// Time the Annulus flow with every kernel and print CSV.
    Bench {
        #[arg(long, default_value_t = 50_000)]
        iters: usize,
    },
}

#[derive(Args)]
struct FlowArgs {
    /// Start from a manifest file.
    #[arg(long, conflicts_with = "preset")]
    manifest: Option<PathBuf>,
    /// Start from a named configuration (default three-rings).
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long, value_enum)]
    kernel: Option<KernelName>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    d_slice: Option<usize>,
    /// three-rings, bananas, annulus, gauss-mixture or csv:PATH.
    #[arg(long)]
    target: Option<String>,
    /// gaussian, uniform or csv:PATH.
    #[arg(long)]
    init: Option<String>,
    /// Number of particles.
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    /// Comma-separated iterations or even:N.
    #[arg(long)]
    checkpoints: Option<Checkpoints>,
    #[arg(long, value_enum)]
    precision: Option<PrecisionName>,
    /// dense or sliced:P.
    #[arg(long)]
    summation: Option<SummationSpec>,
    /// Seed of the initial cloud and of the slice rotations.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved manifest and exit without running.
    #[arg(long)]
    emit_manifest: bool,
}

fn split_path(value: &str) -> (&str, Option<PathBuf>) {
    match value.split_once(':') {
        Some((kind, path)) => (kind, Some(PathBuf::from(path))),
        None => (value, None),
    }
}

fn build_manifest(a: &FlowArgs) -> Result<RunManifest, Failure> {
    let mut m = match &a.manifest {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            RunManifest::from_toml(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => RunManifest::preset(a.preset.unwrap_or(Preset::ThreeRings)),
    };
    if let Some(k) = a.kernel {
        m.kernel.kind = k;
    }
    m.kernel.sigma = a.sigma.unwrap_or(m.kernel.sigma);
    m.kernel.eps = a.eps.unwrap_or(m.kernel.eps);
    m.kernel.m = a.m.or(m.kernel.m);
    m.kernel.d_slice = a.d_slice.or(m.kernel.d_slice);
    if let Some(t) = &a.target {
        let (kind, path) = split_path(t);
        m.target.kind = match kind {
            "three-rings" => TargetName::ThreeRings,
            "bananas" => TargetName::Bananas,
            "annulus" => TargetName::Annulus,
            "gauss-mixture" => TargetName::GaussMixture,
            "csv" => TargetName::CustomCsv,
            _ => return Err(Failure::Usage(format!("unknown target {t:?}"))),
        };
        if m.target.kind == TargetName::GaussMixture && m.target.d.is_none() {
            m.target.d = Some(2);
        }
        m.target.path = path;
        m.target.points = None;
    }
    if let Some(i) = &a.init {
        let (kind, path) = split_path(i);
        m.init.kind = match kind {
            "gaussian" => InitName::Gaussian,
            "uniform" => InitName::Uniform,
            "csv" => InitName::Csv,
            _ => return Err(Failure::Usage(format!("unknown initialization {i:?}"))),
        };
        m.init.path = path;
    }
    m.init.n = a.particles.or(m.init.n);
    m.flow.tau = a.tau.unwrap_or(m.flow.tau);
    if let Some(iters) = a.iters {
        m.flow.iters = iters;
        if a.checkpoints.is_none() {
            if let Checkpoints::List(_) = m.flow.checkpoints {
                m.flow.checkpoints = Checkpoints::List(if iters == 0 { vec![0] } else { vec![0, iters] });
            }
        }
    }
    if let Some(c) = &a.checkpoints {
        m.flow.checkpoints = c.clone();
    }
    if let Some(p) = a.precision {
        m.flow.precision = p;
    }
    if let Some(s) = a.summation {
        m.flow.summation = s;
    }
    if let Some(seed) = a.seed {
        m.init.seed = seed;
        m.flow.seed = seed;
    }
    if let Some(out) = &a.out {
        m.out = out.clone();
    }
    Ok(m)
}

fn flow_command(a: &FlowArgs) -> Result<(), Failure> {
    let manifest = build_manifest(a)?;
    if a.emit_manifest {
        print!("{}", manifest.to_toml());
        return Ok(());
    }
    let prepared = run::prepare(manifest)?;
    let trace = run::execute(&prepared)?;
    for r in trace.rows() {
        println!("iter {:>8}  t {:>10.4}  mmd2 {:>12.5e}  w2 {:>12.5e}", r.iter, r.time, r.mmd2, r.w2);
    }
    println!("wrote {}", prepared.manifest.out.display());
    Ok(())
}

fn verify_command(suite: &str) -> Result<(), Failure> {
    let checks = verify::run_suite(suite).ok_or_else(|| {
        Failure::Usage(format!("unknown suite {suite:?}; expected one of {} or all", verify::SUITES.join(", ")))
    })?;
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status}  {:<10} {:<width$}  {}", c.suite, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}

fn init_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("MMDFLOW_THREADS") else {
        return Ok(());
    };
    let threads: usize =
        value.parse().map_err(|_| Failure::Usage(format!("MMDFLOW_THREADS must be a number, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Runtime(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match &cli.command {
        Command::Flow(a) => flow_command(a),
        Command::Verify { suite } => verify_command(suite),
        Command::Bench { iters } => {
            bench::run(*iters, &mut std::io::stdout().lock()).map_err(|e| Failure::Runtime(e.to_string()))
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
