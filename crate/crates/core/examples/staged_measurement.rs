//! Drive the three measurement stages by hand, as an instrument loop would:
//! ask where to place the pair, measure, record.

use fdot::{
    peak_time_numeric, ForwardModel, InversionConfig, PeakSearch, PhysicalParams, SdPair,
    StagedInversion, Target,
};

fn main() -> fdot::Result<()> {
    let params = PhysicalParams::tissue(1000.0);
    let hidden = Target::at(8.0, 7.0, 30.0)?;
    let mut staged = StagedInversion::new(
        SdPair::planar([6.0, 10.0], [14.0, 10.0])?,
        InversionConfig::new(params),
    );

    while let Some(pair) = staged.next_placement() {
        let stage = staged.stage();
        let m = pair.midpoint();
        // Stand-in for the instrument.
        let t = peak_time_numeric(
            &ForwardModel::new(&pair, &hidden, &params),
            &PeakSearch::default(),
        )?
        .t_peak;
        let rec = staged.record(t)?;
        println!(
            "{stage:<24} midpoint ({:6.2}, {:6.2})  t_peak {t:8.2} ps  {:?} branch  radius {:.3} mm",
            m[0], m[1], rec.branch, rec.radius
        );
    }
    let res = staged.finish()?;
    let e = res.estimate;
    println!(
        "estimate ({:.3}, {:.3}, {:.3}), discriminant {:.3}",
        e[0], e[1], e[2], res.tetrahedron.discriminant
    );
    Ok(())
}
