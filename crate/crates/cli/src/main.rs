use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eigenbound::verify::{self, CertificateReport, ExperimentConfig};

#[derive(Parser)]
#[command(name = "eigenbound", version, about = "Eigenvalue bounds on complex curves: experiments and certificates")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed for random metrics, maps and samples.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for report.json, tables.csv and plot.csv.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use the theoretical capture fraction in the headline constant.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Icosphere refinement level.
    #[arg(long, global = true)]
    level: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Sampled geometry and cutoff property suites.
    GeometrySuite {
        #[arg(long)]
        psi_lower: Option<f64>,
    },
    /// First eigenvalue against the bound for the identity map.
    BlyCheck {
        #[arg(long)]
        bumpy_cases: Option<usize>,
    },
    /// The model first eigenfunction on the round mesh.
    EigenfunctionCheck,
    /// Constructive chain from packing to the headline inequality.
    Certify {
        /// Values of k for the configured mesh and map.
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        /// Random (metric, map, k) cases instead of the configured one.
        #[arg(long)]
        cases: Option<usize>,
    },
    /// Normalized eigenvalues across random metrics and maps.
    KorevaarSweep {
        #[arg(long)]
        cases: Option<usize>,
    },
    /// Weyl slope with eigenvalue and bound trends.
    Weyl {
        #[arg(long)]
        count: Option<usize>,
    },
}

fn config(cli: &Cli) -> eigenbound::Result<ExperimentConfig> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &g.out {
        cfg.out = Some(out.clone());
    }
    if let Some(level) = g.level {
        cfg.mesh.level = level;
    }
    cfg.strict |= g.strict;
    match &cli.command {
        Command::GeometrySuite { psi_lower: Some(v) } => cfg.suite.psi_lower = *v,
        Command::BlyCheck { bumpy_cases: Some(n) } => cfg.bly.bumpy_cases = *n,
        Command::Certify { k, cases } => {
            if let Some(k) = k {
                cfg.k_values = k.clone();
            }
            if let Some(n) = cases {
                cfg.certify.cases = *n;
            }
        }
        Command::KorevaarSweep { cases: Some(n) } => cfg.sweep.cases = *n,
        Command::Weyl { count: Some(n) } => cfg.weyl.count = *n,
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &ExperimentConfig) -> eigenbound::Result<CertificateReport> {
    match cli.command {
        Command::GeometrySuite { .. } => verify::geometry_suite(&cfg.suite, cfg.seed),
        Command::BlyCheck { .. } => verify::bly_check(cfg),
        Command::EigenfunctionCheck => verify::eigenfunction_check(cfg),
        Command::Certify { .. } => verify::certify(cfg),
        Command::KorevaarSweep { .. } => verify::korevaar_sweep(cfg),
        Command::Weyl { .. } => verify::weyl(cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let cfg = match config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match run(&cli, &cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("eigenbound-out"));
    if let Err(e) = report.write_outputs(&out) {
        eprintln!("error: writing {}: {e}", out.display());
        return ExitCode::from(2);
    }
    for c in report.failures() {
        eprintln!("FAIL {}: lhs={:e} rhs={:e} {}", c.name, c.lhs, c.rhs, c.detail.as_deref().unwrap_or(""));
    }
    let checks = report.all_checks().count();
    println!(
        "{} {}: {}/{} checks passed, report in {}",
        if report.all_pass { "PASS" } else { "FAIL" },
        report.command,
        checks - report.failures().len(),
        checks,
        out.display()
    );
    if report.all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
