//! Time stepping for the semi-discrete system `u_hat' = -L_hat u_hat + g_hat`
//! with explicit exponential Runge-Kutta schemes.
//!
//! One step with an s-stage tableau:
//!
//! ```text
//! U_hat_i   = exp(-c_i tau L_hat) u_hat_n + tau sum_{j<i} a_ij(-tau L_hat) G_hat_j
//! G_hat_j   = fft( g(t_n + c_j tau, ifft(U_hat_j), grad) )
//! u_hat_n+1 = exp(-tau L_hat) u_hat_n + tau sum_i b_i(-tau L_hat) G_hat_i
//! ```
//!
//! All exponential and weight tensors are diagonal in Fourier space and are
//! precomputed once per (tableau, tau, grid); uniform stepping reuses them
//! every step, and stage work arrays are recycled to keep allocation out of
//! the hot loop.

use crate::grid::{laplacian_symbol, Grid};
use crate::phi::{eval_combo, PhiError, Tableau};
use crate::problems::{eval_reaction, Problem, ProblemError};
use crate::transform::{
    apply_dealias_inplace, apply_derivative_inplace, fft_forward_inplace, fft_inverse_checked,
    forward, DealiasRule, PhysicalField, SpectralField, TransformError,
};
use ndarray::{ArrayD, IxDyn, Zip};
use num_complex::Complex64;
use std::time::Instant;
use thiserror::Error;

/// Any coefficient magnitude beyond this aborts the run as divergence.
const BLOWUP_LIMIT: f64 = 1e100;

#[derive(Debug, Clone, Error)]
pub enum StepError {
    #[error("solution blew up at step {step_index} (max |u_hat| = {max_magnitude:.3e})")]
    BlowUp {
        step_index: usize,
        max_magnitude: f64,
    },
    #[error("invalid integration setup: {0}")]
    Setup(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Phi(#[from] PhiError),
}

/// Fully-discrete solution state at one time level.
#[derive(Debug, Clone)]
pub struct State {
    pub time: f64,
    pub step_index: usize,
    pub field: SpectralField,
}

/// Precomputed tensors for one uniform step size: semigroup factors
/// `exp(-c_i tau lambda)`, stage weights `a_ij` and output weights `b_i`
/// evaluated over the diffusion symbol.
pub struct StepPlan {
    grid: Grid,
    tableau: Tableau,
    tau: f64,
    dealias: DealiasRule,
    full_exp: ArrayD<f64>,
    stage_exp: Vec<Option<ArrayD<f64>>>,
    a_weights: Vec<Vec<Option<ArrayD<f64>>>>,
    b_weights: Vec<ArrayD<f64>>,
}

impl StepPlan {
    pub fn new(
        grid: &Grid,
        tableau: &Tableau,
        tau: f64,
        dealias: DealiasRule,
    ) -> Result<Self, StepError> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(PhiError::NonPositiveStep(tau).into());
        }
        let symbol = laplacian_symbol(grid);
        let full_exp = symbol.values().mapv(|l| (-tau * l).exp());
        let stage_exp = tableau
            .nodes()
            .iter()
            .map(|&c| {
                if c == 0.0 {
                    None
                } else {
                    Some(symbol.values().mapv(|l| (-c * tau * l).exp()))
                }
            })
            .collect();
        let mut a_weights = Vec::with_capacity(tableau.stages());
        for i in 0..tableau.stages() {
            let mut row = Vec::with_capacity(i);
            for combo in tableau.a_row(i) {
                if combo.is_zero() {
                    row.push(None);
                } else {
                    row.push(Some(eval_combo(combo, tau, &symbol)?));
                }
            }
            a_weights.push(row);
        }
        let b_weights = tableau
            .b()
            .iter()
            .map(|combo| eval_combo(combo, tau, &symbol))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            grid: grid.clone(),
            tableau: tableau.clone(),
            tau,
            dealias,
            full_exp,
            stage_exp,
            a_weights,
            b_weights,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn tableau(&self) -> &Tableau {
        &self.tableau
    }

    /// Semigroup factor for the full step, `exp(-tau lambda_k)`.
    pub fn full_exponential(&self) -> &ArrayD<f64> {
        &self.full_exp
    }
}

/// Reusable stage arrays for one simulation.
struct Workspace {
    stage_hat: ArrayD<Complex64>,
    scratch: ArrayD<Complex64>,
    out: ArrayD<Complex64>,
    ghat: Vec<ArrayD<Complex64>>,
    u_nodal: PhysicalField,
    grad_nodal: Vec<PhysicalField>,
}

impl Workspace {
    fn new(grid: &Grid, stages: usize, gradient_dependent: bool) -> Self {
        let shape = IxDyn(grid.sizes());
        let zero_field = || {
            PhysicalField::new(grid.clone(), ArrayD::zeros(shape.clone()))
                .expect("shape by construction")
        };
        Self {
            stage_hat: ArrayD::zeros(shape.clone()),
            scratch: ArrayD::zeros(shape.clone()),
            out: ArrayD::zeros(shape.clone()),
            ghat: (0..stages).map(|_| ArrayD::zeros(shape.clone())).collect(),
            u_nodal: zero_field(),
            grad_nodal: if gradient_dependent {
                (0..grid.dims()).map(|_| zero_field()).collect()
            } else {
                Vec::new()
            },
        }
    }
}

fn check_finite(data: &ArrayD<Complex64>, step_index: usize) -> Result<(), StepError> {
    let mut max_mag = 0.0f64;
    let mut finite = true;
    for v in data.iter() {
        if !(v.re.is_finite() && v.im.is_finite()) {
            finite = false;
            break;
        }
        max_mag = max_mag.max(v.re.abs()).max(v.im.abs());
    }
    if !finite || max_mag > BLOWUP_LIMIT {
        return Err(StepError::BlowUp {
            step_index,
            max_magnitude: if finite { max_mag } else { f64::INFINITY },
        });
    }
    Ok(())
}

/// One step on preallocated work arrays; the result lands in `ws.out`.
fn step_into(
    coeffs: &ArrayD<Complex64>,
    t_n: f64,
    step_index: usize,
    plan: &StepPlan,
    problem: &Problem,
    ws: &mut Workspace,
) -> Result<(), StepError> {
    let grid = &plan.grid;
    let tau = plan.tau;
    let stages = plan.tableau.stages();
    for i in 0..stages {
        match &plan.stage_exp[i] {
            None => ws.stage_hat.assign(coeffs),
            Some(e) => Zip::from(&mut ws.stage_hat)
                .and(e)
                .and(coeffs)
                .for_each(|o, &e, &u| *o = u * e),
        }
        for j in 0..i {
            if let Some(w) = &plan.a_weights[i][j] {
                Zip::from(&mut ws.stage_hat)
                    .and(w)
                    .and(&ws.ghat[j])
                    .for_each(|o, &w, &g| *o += g * (tau * w));
            }
        }
        check_finite(&ws.stage_hat, step_index)?;

        ws.scratch.assign(&ws.stage_hat);
        fft_inverse_checked(grid, &mut ws.scratch, ws.u_nodal.values_mut())?;
        if problem.gradient_dependent() {
            for axis in 0..grid.dims() {
                ws.scratch.assign(&ws.stage_hat);
                apply_derivative_inplace(grid, &mut ws.scratch, axis);
                fft_inverse_checked(grid, &mut ws.scratch, ws.grad_nodal[axis].values_mut())?;
            }
        }
        let grad = if problem.gradient_dependent() {
            Some(&ws.grad_nodal[..])
        } else {
            None
        };
        let t_stage = t_n + plan.tableau.nodes()[i] * tau;
        let g = eval_reaction(problem, t_stage, &ws.u_nodal, grad)?;
        Zip::from(&mut ws.ghat[i])
            .and(g.values())
            .for_each(|o, &v| *o = Complex64::new(v, 0.0));
        fft_forward_inplace(grid, &mut ws.ghat[i]);
        apply_dealias_inplace(grid, &mut ws.ghat[i], plan.dealias);
    }

    Zip::from(&mut ws.out)
        .and(&plan.full_exp)
        .and(coeffs)
        .for_each(|o, &e, &u| *o = u * e);
    for i in 0..stages {
        Zip::from(&mut ws.out)
            .and(&plan.b_weights[i])
            .and(&ws.ghat[i])
            .for_each(|o, &w, &g| *o += g * (tau * w));
    }
    check_finite(&ws.out, step_index)
}

/// Advances one state by a single step. Allocates its own work arrays; loops
/// should use [`integrate`], which reuses them.
pub fn step(state: &State, plan: &StepPlan, problem: &Problem) -> Result<State, StepError> {
    if state.field.grid() != &plan.grid {
        return Err(StepError::Setup(
            "state and plan live on different grids".into(),
        ));
    }
    let mut ws = Workspace::new(
        &plan.grid,
        plan.tableau.stages(),
        problem.gradient_dependent(),
    );
    step_into(
        state.field.coeffs(),
        state.time,
        state.step_index,
        plan,
        problem,
        &mut ws,
    )?;
    Ok(State {
        time: state.time + plan.tau,
        step_index: state.step_index + 1,
        field: SpectralField::new(plan.grid.clone(), ws.out)?,
    })
}

type ObserverFn<'a> = dyn FnMut(usize, f64, &State) -> Result<(), StepError> + 'a;

/// Trajectory observer: called with `(step index, time, state)` at step 0, at
/// the final step, and every `stride` steps in between (`stride = 0` records
/// the endpoints only).
pub struct Observer<'a> {
    pub stride: usize,
    pub callback: Box<ObserverFn<'a>>,
}

impl<'a> Observer<'a> {
    pub fn new(
        stride: usize,
        callback: impl FnMut(usize, f64, &State) -> Result<(), StepError> + 'a,
    ) -> Self {
        Self {
            stride,
            callback: Box::new(callback),
        }
    }

    fn due(&self, step_index: usize, n_steps: usize) -> bool {
        step_index == 0
            || step_index == n_steps
            || (self.stride > 0 && step_index.is_multiple_of(self.stride))
    }
}

/// Final state plus stepping cost (observer and I/O time excluded).
#[derive(Debug)]
pub struct IntegrateResult {
    pub state: State,
    pub step_seconds: f64,
}

impl IntegrateResult {
    pub fn seconds_per_step(&self) -> f64 {
        self.step_seconds / self.state.step_index.max(1) as f64
    }
}

/// Integrates from `u0` to `t_final` in `n_steps` uniform steps.
pub fn integrate(
    u0: &PhysicalField,
    t_final: f64,
    n_steps: usize,
    tableau: &Tableau,
    problem: &Problem,
    dealias: DealiasRule,
    observers: &mut [Observer<'_>],
) -> Result<IntegrateResult, StepError> {
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(StepError::Setup(format!(
            "final time must be positive, got {t_final}"
        )));
    }
    if n_steps == 0 {
        return Err(StepError::Setup("n_steps must be at least 1".into()));
    }
    if u0.grid().domain() != problem.domain() {
        return Err(StepError::Setup(format!(
            "initial field domain does not match problem {:?}",
            problem.name()
        )));
    }
    let tau = t_final / n_steps as f64;
    let plan = StepPlan::new(u0.grid(), tableau, tau, dealias)?;
    let mut state = State {
        time: 0.0,
        step_index: 0,
        field: forward(u0)?,
    };
    let mut ws = Workspace::new(u0.grid(), tableau.stages(), problem.gradient_dependent());
    for obs in observers.iter_mut() {
        if obs.due(0, n_steps) {
            (obs.callback)(0, 0.0, &state)?;
        }
    }
    let mut step_seconds = 0.0;
    for n in 1..=n_steps {
        let t_n = tau * (n - 1) as f64;
        let started = Instant::now();
        step_into(state.field.coeffs(), t_n, n - 1, &plan, problem, &mut ws)?;
        step_seconds += started.elapsed().as_secs_f64();
        std::mem::swap(state.field.coeffs_mut(), &mut ws.out);
        state.time = tau * n as f64;
        state.step_index = n;
        for obs in observers.iter_mut() {
            if obs.due(n, n_steps) {
                (obs.callback)(n, state.time, &state)?;
            }
        }
    }
    Ok(IntegrateResult {
        state,
        step_seconds,
    })
}
