//! The built-in transition priors and the overlap boost.

use convsim::turntaking::{boost_overlap, Recipe};

fn main() {
    for recipe in Recipe::ALL {
        println!("{:<12} {:?}", recipe.name(), recipe.prior());
    }
    for factor in [0.5, 2.0, 4.0] {
        let p = boost_overlap(&Recipe::Callhome.params(), factor).p;
        println!("callhome x{factor:<3} [{:.4}, {:.4}, {:.4}, {:.4}]", p[0], p[1], p[2], p[3]);
    }
}
