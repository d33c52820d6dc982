use std::f64::consts::PI;

use avtorus_core::sysdsl::{parse_expr, SystemSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two-dimensional system of order 3 with random trigonometric terms.
pub fn trig_system(seed: u64) -> SystemSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = || format!("{:.3}", rng.gen_range(-1.0..1.0));
    let srcs = [
        [
            format!("{}*sin(t)*x2 + {}*cos(t)*x1^2 + {}", c(), c(), c()),
            format!("{}*cos(t)*x1*x2 + {}*sin(2*t) + {}*x1", c(), c(), c()),
        ],
        [
            format!("{}*cos(t)*x1 + {}*x2^2*sin(t)", c(), c()),
            format!("{}*sin(t)^2*x1 + {}*x2*cos(2*t)", c(), c()),
        ],
        [
            format!("{}*x1*x2*cos(2*t) + {}*sin(t)", c(), c()),
            format!("{}*sin(t)*x1^3 + {}*x2", c(), c()),
        ],
    ];
    let terms = srcs
        .iter()
        .map(|c| c.iter().map(|s| parse_expr(s, 2).unwrap()).collect())
        .collect();
    SystemSpec::new("trig", 2, 2.0 * PI, terms).unwrap()
}
