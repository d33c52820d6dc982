use std::f64::consts::PI;

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use avtorus_core::bell::{bell_eval, BellTable};
use avtorus_core::corenum::{QuadConfig, VectorField};
use avtorus_core::example4d::{cylindrical_system, section_map, theta_map, CartesianField, Example4DConfig};
use avtorus_core::melnikov::melnikov_f;
use avtorus_core::toruslab::ReturnMap;

fn bell(c: &mut Criterion) {
    let x: Vec<f64> = (1..=8).map(|i| 1.0 / i as f64).collect();
    c.bench_function("bell_table_12", |b| b.iter(|| BellTable::new(black_box(12))));
    c.bench_function("bell_eval_10_3", |b| b.iter(|| bell_eval(10, 3, black_box(&x)).unwrap()));
}

fn melnikov(c: &mut Criterion) {
    let sys = cylindrical_system(&Example4DConfig::default()).unwrap();
    let quad = QuadConfig::default();
    let z = [1.1, 0.7, -0.2];
    for i in 1..=3 {
        c.bench_function(&format!("melnikov_f{i}_example"), |b| {
            b.iter(|| melnikov_f(&sys, i, black_box(&z), &quad).unwrap())
        });
    }
}

fn fields(c: &mut Criterion) {
    let field = CartesianField::new(&Example4DConfig::default(), 1.0 / 15.0);
    let p = [0.8, 0.6, 1.0, 0.1];
    let mut out = [0.0; 4];
    c.bench_function("cartesian_field_eval", |b| {
        b.iter(|| field.eval(0.0, black_box(&p), &mut out).unwrap())
    });
}

fn maps(c: &mut Criterion) {
    let cfg = Example4DConfig::default();
    let section = section_map(&cfg, 1.0 / 15.0, 2.0 * PI / 2000.0);
    let strobe = theta_map(&cfg, 1.0 / 15.0, 32);
    c.bench_function("section_map_step", |b| b.iter(|| section.apply(black_box(&[1.0, 1.0, 0.0])).unwrap()));
    c.bench_function("theta_map_step", |b| b.iter(|| strobe.apply(black_box(&[1.0, 1.0, 0.0])).unwrap()));
}

criterion_group!(benches, bell, melnikov, fields, maps);
criterion_main!(benches);
