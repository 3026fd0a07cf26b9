//! Run an experiment config from code rather than through the binary, and
//! print the CSV to stdout.
//!
//! ```text
//! cargo run --release --example run_config -- configs/peak_sweep_ell1000.toml peak-sweep
//! ```

use std::io::stdout;
use std::path::Path;

use fdot::experiments::{run_curve, run_peak_sweep, run_reconstruct, write_csv, ExperimentConfig};

fn main() -> fdot::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(p) => ExperimentConfig::load(Path::new(&p))?,
        None => ExperimentConfig::default(),
    };
    match args.next().as_deref().unwrap_or("peak-sweep") {
        "curve" => write_csv(stdout(), &run_curve(&cfg)?),
        "reconstruct" => write_csv(stdout(), &run_reconstruct(&cfg)?),
        _ => write_csv(stdout(), &run_peak_sweep(&cfg)?),
    }
}
