use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fdot::experiments::{echo_path, run_to_file, Command, ExperimentConfig};
use fdot::{BranchPolicy, RadiusRule};

#[derive(Parser)]
#[command(
    name = "fdot",
    version,
    about = "Peak-time forward model and target reconstruction"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample u_m, U_m and the asymptotic profile on a uniform time axis.
    Curve(Common),
    /// Numeric and approximate peak times along one parameter axis.
    PeakSweep(Common),
    /// Simulated three-measurement reconstructions.
    Reconstruct(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Auto,
    Small,
    Large,
}

#[derive(Clone, Copy, ValueEnum)]
enum RadiusArg {
    Geometric,
    AddPairTerm,
}

#[derive(Args)]
struct Common {
    /// TOML config; omitted keys take defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output CSV; the resolved config is written beside it as .config.json.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Relative noise level on simulated peak times.
    #[arg(long, value_name = "DELTA")]
    noise: Option<f64>,
    #[arg(long, value_enum)]
    branch: Option<BranchArg>,
    #[arg(long, value_enum)]
    radius_rule: Option<RadiusArg>,
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

fn resolve(c: &Common) -> fdot::Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(d) = c.noise {
        cfg.set_noise(d);
    }
    if let Some(b) = c.branch {
        cfg.branch = match b {
            BranchArg::Auto => BranchPolicy::Auto,
            BranchArg::Small => BranchPolicy::Small,
            BranchArg::Large => BranchPolicy::Large,
        };
    }
    if let Some(r) = c.radius_rule {
        cfg.radius_rule = match r {
            RadiusArg::Geometric => RadiusRule::Geometric,
            RadiusArg::AddPairTerm => RadiusRule::AddPairTerm,
        };
    }
    if let Some(t) = c.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common, default_out) = match &cli.command {
        Cmd::Curve(c) => (Command::Curve, c, "curve.csv"),
        Cmd::PeakSweep(c) => (Command::PeakSweep, c, "peak_sweep.csv"),
        Cmd::Reconstruct(c) => (Command::Reconstruct, c, "reconstruct.csv"),
    };
    let cfg = match resolve(common) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    if cfg.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(default_out));
    match run_to_file(command, &cfg, &out) {
        Ok(soft) => {
            if soft > 0 {
                eprintln!("{soft} row(s) reported errors; see the error column");
            }
            eprintln!("wrote {} and {}", out.display(), echo_path(&out).display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
