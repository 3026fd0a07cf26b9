//! Median relative error of repeated noisy reconstructions, one seed per run.

use fdot::{simulate, InversionConfig, NoiseSpec, PhysicalParams, RadiusRule, SdPair, Target};
use rayon::prelude::*;

fn main() -> fdot::Result<()> {
    let runs = 25u64;
    let pair = SdPair::planar([6.0, 10.0], [14.0, 10.0])?;
    let target = Target::at(8.0, 7.0, 20.0)?;
    let config = InversionConfig::new(PhysicalParams::tissue(100.0))
        .with_radius_rule(RadiusRule::AddPairTerm);

    for delta in [0.0, 0.01, 0.05] {
        let mut errs: Vec<f64> = (0..runs)
            .into_par_iter()
            .map(|seed| {
                let noise = NoiseSpec::new(delta, seed)?;
                Ok(simulate(&target, &pair, &config, noise)?.rel_err.unwrap())
            })
            .map(|r: fdot::Result<f64>| r.unwrap_or(f64::INFINITY))
            .collect();
        errs.sort_by(f64::total_cmp);
        println!(
            "delta = {delta:<5} median RelErr = {:.3e}  worst = {:.3e}",
            errs[errs.len() / 2],
            errs[errs.len() - 1]
        );
    }
    Ok(())
}
