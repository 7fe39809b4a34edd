use ndarray::Array1;
use patlab::experiment::{build_operator, dot_mismatch, random_field, random_sinogram};
use patlab::{adjoint_test, ExperimentConfig, LinearOperator, Metric, ScalarField, Sinogram, View};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small() -> ExperimentConfig {
    ExperimentConfig { n_omega: 21, nt: 51, ..Default::default() }
}

#[test]
fn adjoint_passes_dot_test_on_a_coarse_grid() {
    let report = adjoint_test(&small(), 4).unwrap();
    println!("mismatches {:?}", report.mismatches);
    assert!(report.passed());
}

#[test]
fn adjoint_passes_dot_test_with_limited_view() {
    let cfg = ExperimentConfig { view: View::HalfPlane(-0.25), seed: 3, ..small() };
    assert!(adjoint_test(&cfg, 3).unwrap().passed());
}

#[test]
fn unobserved_data_gives_zero_mismatch() {
    let cfg = ExperimentConfig { view: View::HalfPlane(1.5), ..small() };
    let op = build_operator(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = random_field(op.grid, &mut rng).unwrap();
    let g = random_sinogram(&op.sensors, op.nt, op.h_t, &mut rng);
    assert_eq!(dot_mismatch(&op, &f, &g).unwrap(), 0.0);
}

#[test]
fn zero_inputs_give_zero_mismatch() {
    let op = build_operator(&small()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f = random_field(op.grid, &mut rng).unwrap();
    let zero = Sinogram::zeros(op.sensors.count(), op.nt, op.h_t);
    assert_eq!(dot_mismatch(&op, &f, &zero).unwrap(), 0.0);
    let g = random_sinogram(&op.sensors, op.nt, op.h_t, &mut rng);
    assert_eq!(dot_mismatch(&op, &ScalarField::zeros(op.grid), &g).unwrap(), 0.0);
}

#[test]
fn adjoint_lives_on_the_support_ball() {
    let op = build_operator(&small()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = random_sinogram(&op.sensors, op.nt, op.h_t, &mut rng);
    let back = op.adjoint_field(&g).unwrap();
    for ((i, j), &v) in back.values.indexed_iter() {
        if op.omega0_mask[[i, j]] == 0.0 {
            assert_eq!(v, 0.0);
        }
    }
    assert!(back.max_abs() > 0.0);
}

#[test]
fn forward_ignores_values_outside_the_support_ball() {
    let op = build_operator(&small()).unwrap();
    let f = ScalarField::from_fn(op.grid, |x, y| if x.hypot(y) > 0.95 { 1.0 } else { 0.0 });
    assert_eq!(op.forward(&f).unwrap().max_abs(), 0.0);
}

#[test]
fn metrics_carry_quadrature_weights() {
    let op = build_operator(&small()).unwrap();
    let Metric::Diagonal(w) = op.domain() else { panic!() };
    let h2 = op.grid.h * op.grid.h;
    let c_max = op.medium.c0;
    assert!(w.iter().all(|&v| v == 0.0 || (v >= h2 / (c_max * c_max) * (1.0 - 1e-12) && v <= h2 * (1.0 + 1e-12))));
    let Metric::Diagonal(r) = op.range() else { panic!() };
    let expect = op.grid.h * op.h_t;
    assert!(r.iter().all(|&v| (v - expect).abs() < 1e-15));
}

#[test]
fn vector_views_round_trip() {
    let op = build_operator(&small()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = random_field(op.grid, &mut rng).unwrap();
    assert_eq!(op.vec_to_field(&op.field_to_vec(&f).unwrap()).unwrap(), f);
    let g = random_sinogram(&op.sensors, op.nt, op.h_t, &mut rng);
    assert_eq!(op.vec_to_sinogram(&op.sinogram_to_vec(&g).unwrap()).unwrap(), g);
    assert!(op.apply(&Array1::zeros(3)).is_err());
}
