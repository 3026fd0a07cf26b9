//! Compare the numeric peak with the four approximations over target depth,
//! for a short and a long fluorescence lifetime.

use fdot::approx::{large_ell_validity, small_ell_expansion};
use fdot::{
    approx_peak_large_ell, approx_peak_small_ell, asymptotic_peak_large_ell, peak_time_numeric,
    ForwardModel, PeakEquationContext, PeakSearch, PhysicalParams, SdPair, Target,
};

fn main() -> fdot::Result<()> {
    let pair = SdPair::planar([6.0, 10.0], [14.0, 10.0])?;
    for ell in [100.0, 1000.0] {
        let params = PhysicalParams::tissue(ell);
        println!("ell = {ell} ps");
        println!(
            "{:>5} {:>8} {:>9} {:>9} {:>9} {:>9} {:>9}",
            "x3", "lambda", "numeric", "t^s", "t^p0", "t^l0", "t^l"
        );
        for z in [20.0, 30.0, 40.0, 50.0, 60.0] {
            let target = Target::at(10.0, 10.0, z)?;
            let t = peak_time_numeric(
                &ForwardModel::new(&pair, &target, &params),
                &PeakSearch::default(),
            )?
            .t_peak;
            let ctx = PeakEquationContext::from_geometry(&pair, &target, &params);
            let p0 = approx_peak_small_ell(&ctx)?.t_peak;
            let (l0, l) = if large_ell_validity(&ctx).holds() {
                (
                    format!("{:9.2}", approx_peak_large_ell(&ctx)?.t_peak),
                    format!("{:9.2}", asymptotic_peak_large_ell(&ctx)?.t_peak),
                )
            } else {
                ("-".into(), "-".into())
            };
            println!(
                "{z:5.0} {:8.3} {t:9.2} {:9.2} {p0:9.2} {l0:>9} {l:>9}",
                ctx.lambda,
                small_ell_expansion(&ctx)
            );
        }
    }
    Ok(())
}
