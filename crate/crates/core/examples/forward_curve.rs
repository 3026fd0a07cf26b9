//! Sample the zero-lifetime response, the lifetime response and the
//! asymptotic profile for one target, and locate the numeric peak.
//!
//! ```text
//! cargo run --release --example forward_curve
//! ```

use fdot::{peak_time_numeric, ForwardModel, PeakSearch, PhysicalParams, SdPair, Target, TimeGrid};

fn main() -> fdot::Result<()> {
    let pair = SdPair::planar([6.0, 10.0], [14.0, 10.0])?;
    let target = Target::at(10.0, 10.0, 20.0)?;
    let model = ForwardModel::new(&pair, &target, &PhysicalParams::tissue(100.0));

    let curve = model.curve(&TimeGrid::uniform(2400.0, 24)?)?;
    let asym = curve.asymptotic();
    println!("{:>8} {:>12} {:>12} {:>12}", "t_ps", "u_m", "U_m", "u_m^a");
    for (i, t) in curve.times.iter().enumerate() {
        println!(
            "{t:8.1} {:12.4e} {:12.4e} {:12.4e}",
            curve.zero_lifetime[i], curve.values[i], asym[i]
        );
    }

    let peak = peak_time_numeric(&model, &PeakSearch::default())?;
    println!("numeric peak: {:.2} ps", peak.t_peak);
    Ok(())
}
