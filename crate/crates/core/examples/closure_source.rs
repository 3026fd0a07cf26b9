//! Any `FnMut(&SdPair) -> Result<f64>` can act as the peak-time source. Here
//! the source replays measurements from a lookup keyed by pair midpoint.

use fdot::{invert, BranchPolicy, InversionConfig, PhysicalParams, RadiusRule, SdPair};

fn main() -> fdot::Result<()> {
    // Peak times (ps) recorded at three pair placements, ell = 100 ps, with
    // the pairs moved by the add-pair-term radius.
    let recorded = [
        ((10.0, 10.0), 543.189),
        ((30.3999, 10.0), 782.331),
        ((10.0, 30.3999), 802.384),
    ];
    let config = InversionConfig::new(PhysicalParams::tissue(100.0))
        .with_branch(BranchPolicy::Small)
        .with_radius_rule(RadiusRule::AddPairTerm);

    let mut lookup = |pair: &SdPair| {
        let m = pair.midpoint();
        recorded
            .iter()
            .find(|((x, y), _)| (x - m[0]).abs() < 0.5 && (y - m[1]).abs() < 0.5)
            .map(|&(_, t)| t)
            .ok_or_else(|| {
                fdot::FdotError::InvalidParameter(format!(
                    "no record near ({:.1}, {:.1})",
                    m[0], m[1]
                ))
            })
    };
    let res = invert(
        &SdPair::planar([6.0, 10.0], [14.0, 10.0])?,
        &config,
        &mut lookup,
    )?;
    println!("radii {:?}", res.radii());
    println!("estimate {:?}", res.estimate.as_slice());
    Ok(())
}
