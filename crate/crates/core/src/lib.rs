//! Photoacoustic tomography in damped, heterogeneous media: a k-space wave
//! solver, the forward operator and its adjoint, and iterative and variational
//! reconstruction methods.

pub mod error;
pub mod experiment;
pub mod grid;
pub mod io;
pub mod kspace;
pub mod medium;
pub mod operator;
pub mod pat;
pub mod sensors;
pub mod solvers;
pub mod spectral;
pub mod variational;

pub use error::{PatError, Result};
pub use experiment::{
    add_noise, adjoint_test, rel_error, rel_residual, run_experiment, DataGrid, ExperimentConfig, ExperimentReport,
    Method, Problem, StopKind,
};
pub use grid::{make_grid, Grid2D, ScalarField};
pub use kspace::{init_state, simulate, Propagator, SpectralKernel, WaveState};
pub use medium::{make_medium, make_phantom, CoefficientSpec, Medium, PhantomSpec, Primitive, Shape};
pub use operator::{DenseOperator, LinearOperator, Metric};
pub use pat::PatOperator;
pub use sensors::{boundary_sensors, SensorArray, Sinogram, View};
pub use solvers::{cgne, discrepancy_stop, landweber, steepest_descent, IterationLog, IterationRecord, StopRule};
pub use variational::{
    dual_clip, h1_reconstruct, operator_norm, tv_reconstruct, DiscreteGradient, PdState, TvOptions, VectorField,
};
