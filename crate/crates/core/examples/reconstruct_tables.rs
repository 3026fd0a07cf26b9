//! Noise-free reconstructions of two targets from four initial pairs, with
//! the radius rule that reproduces the reference tables.
//!
//! Pass `geometric` as the first argument to use the geometric radius instead.

use fdot::{simulate, InversionConfig, NoiseSpec, PhysicalParams, RadiusRule, SdPair, Target};

fn main() -> fdot::Result<()> {
    let rule = match std::env::args().nth(1).as_deref() {
        Some("geometric") => RadiusRule::Geometric,
        _ => RadiusRule::AddPairTerm,
    };
    let pairs = [
        ([6.0, 10.0], [14.0, 10.0]),
        ([0.0, 5.0], [8.0, 5.0]),
        ([5.0, 8.0], [5.0, 0.0]),
        ([8.0, 15.0], [16.0, 15.0]),
    ];
    for ell in [100.0, 1000.0] {
        let config = InversionConfig::new(PhysicalParams::tissue(ell)).with_radius_rule(rule);
        println!("ell = {ell} ps, {rule:?}");
        for z in [20.0, 30.0] {
            let target = Target::at(8.0, 7.0, z)?;
            for (s, d) in pairs {
                let res = simulate(&target, &SdPair::planar(s, d)?, &config, NoiseSpec::none())?;
                let e = res.estimate;
                println!(
                    "  x_s={s:?} x_d={d:?}  t_peak={:7.2}  x_inv=({:.2}, {:.2}, {:.2})  RelErr={:.2e}",
                    res.peak_times()[0],
                    e[0],
                    e[1],
                    e[2],
                    res.rel_err.unwrap()
                );
            }
        }
    }
    Ok(())
}
