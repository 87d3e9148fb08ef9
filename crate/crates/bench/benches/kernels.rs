use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use henon_bench::{laplacian_params, zonal_system};
use henon_core::bifurcation::{locate_alpha_k, BifurcationConfig};
use henon_core::core_model::{evaluate_bubble, kernel_z};
use henon_core::sturm_liouville::{assemble_mode_problem, solve_first_eigen, Domain};
use henon_core::ParamFamily;

fn closed_form(c: &mut Criterion) {
    let params = laplacian_params();
    let radii: Vec<f64> = (0..1000).map(|i| 1e-3 * 1.014f64.powi(i)).collect();
    c.bench_function("bubble_and_kernel_1000_radii", |b| {
        b.iter(|| radii.iter().map(|&r| evaluate_bubble(&params, 1.0, r) + kernel_z(&params, r)).sum::<f64>())
    });
}

fn eigen_solve(c: &mut Criterion) {
    let params = laplacian_params();
    let prob = assemble_mode_problem(&params, 2, Domain::Ball { eps: 1e-2 }).unwrap().with_verify(false);
    c.bench_function("first_ball_eigenpair", |b| b.iter(|| solve_first_eigen(black_box(&prob)).unwrap().value));
}

fn locate(c: &mut Criterion) {
    let family = ParamFamily::new(4, 2.0).unwrap();
    let cfg = BifurcationConfig::default();
    let mut g = c.benchmark_group("locate");
    g.sample_size(10);
    g.bench_function("alpha_2_eps_0.1", |b| {
        b.iter(|| locate_alpha_k(&family, 2, black_box(0.1), &cfg).unwrap().alpha_k_eps)
    });
    g.finish();
}

fn galerkin(c: &mut Criterion) {
    let sys = zonal_system(200);
    let c0 = sys.closed_form_radial(2.375).unwrap();
    c.bench_function("galerkin_residual_200", |b| b.iter(|| sys.residual(black_box(&c0), 2.375).unwrap()));
    let mut g = c.benchmark_group("galerkin");
    g.sample_size(10);
    g.bench_function("jacobian_200", |b| b.iter(|| sys.jacobian(black_box(&c0), 2.375).unwrap()));
    g.finish();
}

criterion_group!(benches, closed_form, eigen_solve, locate, galerkin);
criterion_main!(benches);
