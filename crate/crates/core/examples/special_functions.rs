//! The scaled complementary error function and the boundary factor K-hat
//! where the unscaled product would overflow.

use fdot::{erfcx, khat, PhysicalParams};

fn main() {
    for x in [-3.0, 0.0, 0.5, 5.0, 30.0, 1e3, 1e8] {
        println!("erfcx({x:>8}) = {:.15e}", erfcx(x));
    }
    let p = PhysicalParams::tissue(0.0);
    for t in [1.0, 100.0, 1000.0, 1e5] {
        println!("khat(x3=20, t={t:>6}) = {:.12}", khat(20.0, t, &p));
    }
}
