use std::f64::consts::PI;
use std::time::Instant;

use avtorus_core::corenum::{IntegratorConfig, QuadConfig};
use avtorus_core::melnikov::{jet_oracle_f, melnikov_f, y_function};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::trig_system;

#[test]
fn recursion_matches_jet() {
    let sys = trig_system(7);
    let quad = QuadConfig::default();
    let cfg = IntegratorConfig::adaptive(1e-12, 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    for _ in 0..5 {
        let z = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        for i in 1..=3 {
            let a = melnikov_f(&sys, i, &z, &quad).unwrap();
            let b = jet_oracle_f(&sys, i, &z, &cfg).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-5 * y.abs().max(1e-3), "order {i} at {z:?}: {a:?} vs {b:?}");
            }
        }
    }
    eprintln!("elapsed {:?}", start.elapsed());
}

#[test]
fn first_order_is_direct_quadrature() {
    let sys = trig_system(3);
    let quad = QuadConfig::default();
    let z = [0.4, -0.2];
    let y1 = y_function(&sys, 1, 2.0 * PI, &z, &quad).unwrap();
    let direct = avtorus_core::corenum::quad::integrate(
        |s| {
            let e = sys.terms(1).unwrap();
            Ok(e.iter().map(|c| c.eval(s, &z).unwrap()).collect())
        },
        0.0,
        2.0 * PI,
        2,
        &quad,
    )
    .unwrap();
    for (a, b) in y1.iter().zip(&direct) {
        assert!((a - b).abs() < 1e-10);
    }
}
