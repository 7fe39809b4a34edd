//! Benchmark fixtures shared by the criterion benches.

use patlab::experiment::build_operator;
use patlab::{make_phantom, ExperimentConfig, PatOperator, ScalarField};

/// Default medium and full view at `n_omega` samples per side.
pub fn fixture(n_omega: usize, nt: usize) -> (PatOperator, ScalarField) {
    let cfg = ExperimentConfig { n_omega, nt, ..Default::default() };
    let op = build_operator(&cfg).expect("valid benchmark config");
    let f = make_phantom(op.grid, &cfg.phantom).expect("default phantom fits");
    (op, f)
}
