//! Exponential-integrator Fourier Galerkin solver for semilinear parabolic
//! equations `u_t = D lap u + f(t, u, grad u)` on periodic boxes.
//!
//! Space is discretized by tensor-product Fourier collocation, which turns
//! the diffusion operator into the diagonal multiplier `D |k~|^2`; time by
//! explicit exponential Runge-Kutta schemes of orders one to three that treat
//! the stiff linear part through the exact semigroup and the nonlinearity
//! through phi-function-weighted stage combinations. Each step costs a few
//! FFTs, so stepping is O(N log N) in the node count.
//!
//! Module map:
//! - [`grid`]: domains, collocation grids, the Laplacian symbol
//! - [`transform`]: nodal/coefficient conversion, spectral gradient, dealiasing
//! - [`phi`]: phi-functions and the shipped Runge-Kutta tableaux
//! - [`integrate`]: the stepper and trajectory driver
//! - [`problems`]: the shipped model problems and user-defined ones
//! - [`diagnostics`]: Sobolev norms, rate tables, radius and energy tracking

pub mod diagnostics;
pub mod grid;
pub mod integrate;
pub mod phi;
pub mod problems;
pub mod transform;

pub use diagnostics::{
    error_norms, fh_energy, interface_radius, rates, restrict_to, sobolev_norm, sup_norm,
    DiagnosticsError, ErrorRecord, RadiusMeasure, RateTable,
};
pub use grid::{build_grid, laplacian_symbol, DomainSpec, Grid, GridError, Symbol};
pub use integrate::{integrate, step, IntegrateResult, Observer, State, StepError, StepPlan};
pub use phi::{eval_combo, phi, tableau, PhiCombo, PhiError, PhiTerm, Scheme, Tableau};
pub use problems::{
    eval_reaction, example1, example_burgers, example_fh, example_mcf, heat, mcf_limit_radius,
    EnergyParams, InitialData, PointwiseFn, Problem, ProblemError,
};
pub use transform::{
    dealias, forward, gradient, inverse, prolong, DealiasRule, PhysicalField, SpectralField,
    TransformError,
};
