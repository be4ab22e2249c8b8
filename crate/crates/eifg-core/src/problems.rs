//! Reaction terms, initial conditions, exact solutions and parameters for the
//! shipped model problems, plus support for user-defined ones.

use crate::grid::{DomainSpec, Grid};
use crate::transform::{
    apply_dealias_inplace, apply_derivative_inplace, fft_forward_inplace, fft_inverse_checked,
    DealiasRule, PhysicalField, TransformError,
};
use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("{problem}: parameter {name} = {value} is invalid")]
    InvalidParameter {
        problem: String,
        name: &'static str,
        value: f64,
    },
    #[error("{problem}: reaction produced a non-finite value at t = {t}")]
    NonFiniteReaction { problem: String, t: f64 },
    #[error("{problem}: seeded random initial data requires an explicit seed")]
    MissingSeed { problem: String },
    #[error(
        "{problem}: gradient fields do not match the declared dependence (expected: {expected})"
    )]
    GradientMismatch { problem: String, expected: bool },
    #[error("{problem}: grid domain does not match the problem domain")]
    DomainMismatch { problem: String },
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// Parameters of the Flory-Huggins free energy, attached to problems whose
/// trajectories should report a discrete energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    pub epsilon: f64,
    pub theta: f64,
    pub theta_c: f64,
}

/// Nodal sampling closure for initial data.
pub type PointwiseFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// How the initial field is produced.
#[derive(Clone)]
pub enum InitialData {
    /// Sample a closed form at the grid nodes.
    Pointwise(Arc<PointwiseFn>),
    /// Independent uniform values per node from a seeded generator.
    SeededUniform { lo: f64, hi: f64 },
}

type ReactionFn = dyn Fn(f64, &PhysicalField, Option<&[PhysicalField]>) -> Result<ArrayD<f64>, ProblemError>
    + Send
    + Sync;
type ScalarFn = dyn Fn(f64, &[f64]) -> f64 + Send + Sync;

/// A semilinear problem `u_t = D lap u + g(t, u, grad u)`: the domain (with
/// its diffusion coefficient), the reaction evaluator, initial data and an
/// optional exact solution.
#[derive(Clone)]
pub struct Problem {
    name: String,
    domain: DomainSpec,
    gradient_dependent: bool,
    reaction: Arc<ReactionFn>,
    exact: Option<Arc<ScalarFn>>,
    initial: InitialData,
    params: BTreeMap<String, f64>,
    energy: Option<EnergyParams>,
    tracks_radius: bool,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dims", &self.domain.dims())
            .field("gradient_dependent", &self.gradient_dependent)
            .field("params", &self.params)
            .finish()
    }
}

impl Problem {
    /// Assembles a user-defined problem from its reaction evaluator and
    /// initial data. The domain carries the diffusion coefficient.
    pub fn custom(
        name: impl Into<String>,
        domain: DomainSpec,
        gradient_dependent: bool,
        reaction: impl Fn(f64, &PhysicalField, Option<&[PhysicalField]>) -> Result<ArrayD<f64>, ProblemError>
            + Send
            + Sync
            + 'static,
        initial: InitialData,
    ) -> Self {
        Self {
            name: name.into(),
            domain,
            gradient_dependent,
            reaction: Arc::new(reaction),
            exact: None,
            initial,
            params: BTreeMap::new(),
            energy: None,
            tracks_radius: false,
        }
    }

    /// Attaches a closed-form solution `u(t, x)`.
    pub fn with_exact(mut self, f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.exact = Some(Arc::new(f));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn gradient_dependent(&self) -> bool {
        self.gradient_dependent
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn energy_params(&self) -> Option<EnergyParams> {
        self.energy
    }

    pub fn tracks_radius(&self) -> bool {
        self.tracks_radius
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn needs_seed(&self) -> bool {
        matches!(self.initial, InitialData::SeededUniform { .. })
    }

    /// Closed-form solution value, when the problem carries one.
    pub fn exact_value(&self, t: f64, coords: &[f64]) -> Option<f64> {
        self.exact.as_ref().map(|f| f(t, coords))
    }

    /// Samples the exact solution on a grid.
    pub fn exact_field(&self, grid: &Grid, t: f64) -> Option<PhysicalField> {
        let f = self.exact.as_ref()?;
        Some(PhysicalField::from_fn(grid, |x| f(t, x)))
    }

    /// Produces the initial field; seeded problems require `seed`.
    pub fn initial_field(
        &self,
        grid: &Grid,
        seed: Option<u64>,
    ) -> Result<PhysicalField, ProblemError> {
        if grid.domain() != &self.domain {
            return Err(ProblemError::DomainMismatch {
                problem: self.name.clone(),
            });
        }
        match &self.initial {
            InitialData::Pointwise(f) => Ok(PhysicalField::from_fn(grid, |x| f(x))),
            InitialData::SeededUniform { lo, hi } => {
                let seed = seed.ok_or_else(|| ProblemError::MissingSeed {
                    problem: self.name.clone(),
                })?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let span = hi - lo;
                let values =
                    ArrayD::from_shape_fn(IxDyn(grid.sizes()), |_| lo + span * rng.random::<f64>());
                Ok(PhysicalField::new(grid.clone(), values).expect("shape by construction"))
            }
        }
    }
}

/// Evaluates the reaction term at the nodes, enforcing the gradient contract
/// and rejecting non-finite output.
pub fn eval_reaction(
    problem: &Problem,
    t: f64,
    u: &PhysicalField,
    grad: Option<&[PhysicalField]>,
) -> Result<PhysicalField, ProblemError> {
    if grad.is_some() != problem.gradient_dependent {
        return Err(ProblemError::GradientMismatch {
            problem: problem.name.clone(),
            expected: problem.gradient_dependent,
        });
    }
    let values = (problem.reaction)(t, u, grad)?;
    if !values.iter().all(|v| v.is_finite()) {
        return Err(ProblemError::NonFiniteReaction {
            problem: problem.name.clone(),
            t,
        });
    }
    Ok(PhysicalField::new(u.grid().clone(), values)?)
}

fn require_positive(problem: &str, name: &'static str, value: f64) -> Result<(), ProblemError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ProblemError::InvalidParameter {
            problem: problem.to_string(),
            name,
            value,
        })
    }
}

// ---------------------------------------------------------------------------
// Example 1: forced reaction-diffusion with a manufactured solution.

/// One coordinate factor of the manufactured solution, `w^2 (w-1)^2 sin(2 pi w)`.
fn rd_factor(w: f64) -> f64 {
    let q = w * w - w;
    q * q * (2.0 * PI * w).sin()
}

/// Second derivative of [`rd_factor`], hand-differentiated.
fn rd_factor_dd(w: f64) -> f64 {
    let q = w * w - w;
    let qp = 2.0 * w - 1.0;
    let big_q = q * q;
    let big_qp = 2.0 * q * qp;
    let big_qpp = 2.0 * qp * qp + 4.0 * q;
    let (s, c) = (2.0 * PI * w).sin_cos();
    big_qpp * s + 4.0 * PI * big_qp * c - 4.0 * PI * PI * big_q * s
}

/// 3D reaction-diffusion `u_t = lap u - u + f(t,x,y,z)` on `[0,1]^3` whose
/// forcing is derived from the exact solution
/// `u = exp(-t) prod_i w_i^2 (w_i-1)^2 sin(2 pi w_i)`.
pub fn example1() -> Problem {
    let name = "example1";
    let domain =
        DomainSpec::new(&[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)], 1.0).expect("static domain");
    let exact: Arc<ScalarFn> =
        Arc::new(|t, x| (-t).exp() * rd_factor(x[0]) * rd_factor(x[1]) * rd_factor(x[2]));
    let u0 = exact.clone();
    let reaction = move |t: f64, u: &PhysicalField, _: Option<&[PhysicalField]>| {
        let grid = u.grid();
        let p: Vec<Vec<f64>> = (0..3)
            .map(|ax| grid.nodes(ax).iter().map(|&w| rd_factor(w)).collect())
            .collect();
        let pdd: Vec<Vec<f64>> = (0..3)
            .map(|ax| grid.nodes(ax).iter().map(|&w| rd_factor_dd(w)).collect())
            .collect();
        let decay = (-t).exp();
        // g = -u + f with f = -exp(-t) * (P''PP + PP''P + PPP'')
        let mut out = u.values().mapv(|v| -v);
        let (n1, n2) = (grid.sizes()[1], grid.sizes()[2]);
        if let Some(slice) = out.as_slice_mut() {
            let mut pos = 0;
            for i in 0..grid.sizes()[0] {
                for j in 0..n1 {
                    for k in 0..n2 {
                        let lap = pdd[0][i] * p[1][j] * p[2][k]
                            + p[0][i] * pdd[1][j] * p[2][k]
                            + p[0][i] * p[1][j] * pdd[2][k];
                        slice[pos] -= decay * lap;
                        pos += 1;
                    }
                }
            }
        } else {
            for (idx, v) in out.indexed_iter_mut() {
                let (i, j, k) = (idx[0], idx[1], idx[2]);
                let lap = pdd[0][i] * p[1][j] * p[2][k]
                    + p[0][i] * pdd[1][j] * p[2][k]
                    + p[0][i] * p[1][j] * pdd[2][k];
                *v -= decay * lap;
            }
        }
        Ok(out)
    };
    Problem {
        name: name.to_string(),
        domain,
        gradient_dependent: false,
        reaction: Arc::new(reaction),
        exact: Some(exact),
        initial: InitialData::Pointwise(Arc::new(move |x| u0(0.0, x))),
        params: BTreeMap::new(),
        energy: None,
        tracks_radius: false,
    }
}

// ---------------------------------------------------------------------------
// Example 2: Allen-Cahn mean curvature flow.

/// Limit radius of the shrinking interface, `sqrt(R0^2 + 2 (1 - d) t)`.
pub fn mcf_limit_radius(r0: f64, dims: usize, t: f64) -> f64 {
    (r0 * r0 + 2.0 * (1.0 - dims as f64) * t).max(0.0).sqrt()
}

/// Allen-Cahn equation `u_t = lap u - (u^3 - u)/eps^2` on `[-0.5, 0.5]^d`
/// with a tanh-profile circle/sphere of radius 0.4 as initial data.
pub fn example_mcf(epsilon: f64, dims: usize) -> Result<Problem, ProblemError> {
    let name = "mcf";
    require_positive(name, "epsilon", epsilon)?;
    if !(2..=3).contains(&dims) {
        return Err(ProblemError::InvalidParameter {
            problem: name.to_string(),
            name: "dims",
            value: dims as f64,
        });
    }
    let r0 = 0.4;
    let domain = DomainSpec::new(&vec![(-0.5, 0.5); dims], 1.0).expect("static domain");
    let inv_eps2 = 1.0 / (epsilon * epsilon);
    let width = std::f64::consts::SQRT_2 * epsilon;
    let reaction = move |_t: f64, u: &PhysicalField, _: Option<&[PhysicalField]>| {
        Ok(u.values().mapv(|v| (v - v * v * v) * inv_eps2))
    };
    let mut params = BTreeMap::new();
    params.insert("epsilon".into(), epsilon);
    params.insert("R_0".into(), r0);
    params.insert("dims".into(), dims as f64);
    Ok(Problem {
        name: name.to_string(),
        domain,
        gradient_dependent: false,
        reaction: Arc::new(reaction),
        exact: None,
        initial: InitialData::Pointwise(Arc::new(move |x| {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            ((r0 - r) / width).tanh()
        })),
        params,
        energy: None,
        tracks_radius: true,
    })
}

// ---------------------------------------------------------------------------
// Example 3: 3D viscous Burgers equation.

/// Burgers equation `u_t = eps lap u - (u^2 / 2)_x` on `[0,2]x[0,1]x[0,1]`
/// with the Cole-Hopf exact solution. The nonlinearity is evaluated in
/// conservative form: square at the nodes, differentiate the product
/// spectrally, optionally dealiasing the squared field.
pub fn example_burgers(epsilon: f64, rule: DealiasRule) -> Result<Problem, ProblemError> {
    let name = "burgers";
    require_positive(name, "epsilon", epsilon)?;
    let domain =
        DomainSpec::new(&[(0.0, 2.0), (0.0, 1.0), (0.0, 1.0)], epsilon).expect("static domain");
    let exact: Arc<ScalarFn> = Arc::new(move |t, x| {
        let decay = (-PI * PI * epsilon * t).exp();
        2.0 * epsilon * PI * decay * (PI * x[0]).sin() / (2.0 + decay * (PI * x[0]).cos())
    });
    let u0 = exact.clone();
    let reaction = move |_t: f64, u: &PhysicalField, _: Option<&[PhysicalField]>| {
        let grid = u.grid();
        let mut w_hat = u.values().mapv(|v| Complex64::new(0.5 * v * v, 0.0));
        fft_forward_inplace(grid, &mut w_hat);
        apply_dealias_inplace(grid, &mut w_hat, rule);
        apply_derivative_inplace(grid, &mut w_hat, 0);
        let mut out = ArrayD::zeros(IxDyn(grid.sizes()));
        fft_inverse_checked(grid, &mut w_hat, &mut out)?;
        out.mapv_inplace(|v| -v);
        Ok(out)
    };
    let mut params = BTreeMap::new();
    params.insert("epsilon".into(), epsilon);
    Ok(Problem {
        name: name.to_string(),
        domain,
        gradient_dependent: true,
        reaction: Arc::new(reaction),
        exact: Some(exact),
        initial: InitialData::Pointwise(Arc::new(move |x| u0(0.0, x))),
        params,
        energy: None,
        tracks_radius: false,
    })
}

// ---------------------------------------------------------------------------
// Example 4: Allen-Cahn with Flory-Huggins potential.

/// Clamp distance from the logarithmic singularities at u = +-1.
const FH_CLAMP: f64 = 1e-12;

/// Grain-coarsening Allen-Cahn equation
/// `u_t = eps^2 lap u + (theta/2) ln((1-u)/(1+u)) + theta_c u` on `[0,1]^3`
/// with seeded uniform random initial data in `[-0.9, 0.9]`.
///
/// The logarithm's argument is clamped to `|u| <= 1 - 1e-12`; the flow itself
/// keeps `|u|` below the potential's root, but an explicit step can overshoot
/// transiently.
pub fn example_fh(epsilon: f64, theta: f64, theta_c: f64) -> Result<Problem, ProblemError> {
    let name = "fh";
    require_positive(name, "epsilon", epsilon)?;
    require_positive(name, "theta", theta)?;
    require_positive(name, "theta_c", theta_c)?;
    let domain = DomainSpec::new(&[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)], epsilon * epsilon)
        .expect("static domain");
    let half_theta = 0.5 * theta;
    let hi = 1.0 - FH_CLAMP;
    let reaction = move |_t: f64, u: &PhysicalField, _: Option<&[PhysicalField]>| {
        Ok(u.values().mapv(|v| {
            let uc = v.clamp(-hi, hi);
            // ln((1-u)/(1+u)) as a difference of ln_1p keeps g exactly odd
            half_theta * ((-uc).ln_1p() - uc.ln_1p()) + theta_c * v
        }))
    };
    let mut params = BTreeMap::new();
    params.insert("epsilon".into(), epsilon);
    params.insert("theta".into(), theta);
    params.insert("theta_c".into(), theta_c);
    Ok(Problem {
        name: name.to_string(),
        domain,
        gradient_dependent: false,
        reaction: Arc::new(reaction),
        exact: None,
        initial: InitialData::SeededUniform { lo: -0.9, hi: 0.9 },
        params,
        energy: Some(EnergyParams {
            epsilon,
            theta,
            theta_c,
        }),
        tracks_radius: false,
    })
}

// ---------------------------------------------------------------------------
// Heat equation, the linear smoke problem.

/// Pure diffusion `u_t = D lap u` on `[0, 2 pi]^d` with `u0 = sin(x_1)` and
/// exact solution `exp(-D t) sin(x_1)`.
pub fn heat(dims: usize, diffusion: f64) -> Result<Problem, ProblemError> {
    let name = "heat";
    require_positive(name, "D", diffusion)?;
    if !(1..=3).contains(&dims) {
        return Err(ProblemError::InvalidParameter {
            problem: name.to_string(),
            name: "dims",
            value: dims as f64,
        });
    }
    let domain = DomainSpec::new(&vec![(0.0, 2.0 * PI); dims], diffusion).expect("static domain");
    let exact: Arc<ScalarFn> = Arc::new(move |t, x| (-diffusion * t).exp() * x[0].sin());
    let u0 = exact.clone();
    let reaction = move |_t: f64, u: &PhysicalField, _: Option<&[PhysicalField]>| {
        Ok(ArrayD::zeros(IxDyn(u.grid().sizes())))
    };
    let mut params = BTreeMap::new();
    params.insert("D".into(), diffusion);
    params.insert("dims".into(), dims as f64);
    Ok(Problem {
        name: name.to_string(),
        domain,
        gradient_dependent: false,
        reaction: Arc::new(reaction),
        exact: Some(exact),
        initial: InitialData::Pointwise(Arc::new(move |x| u0(0.0, x))),
        params,
        energy: None,
        tracks_radius: false,
    })
}
