//! The phi-functions of exponential integrators and the exponential
//! Runge-Kutta tableaux built from them.
//!
//! `phi_0(z) = exp(z)` and `phi_{j+1}(z) = (phi_j(z) - 1/j!) / z`. On the
//! nonpositive real axis every value lies in `(0, 1/j!]`. The naive recurrence
//! loses all digits as `z -> 0`, so small arguments use a truncated Taylor
//! series instead.

use crate::grid::Symbol;
use ndarray::ArrayD;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhiError {
    #[error("phi_{j} unsupported; shipped tableaux need j <= {MAX_PHI_INDEX} only")]
    UnsupportedOrder { j: usize },
    #[error("phi evaluated at positive argument {z}; diffusion symbols are nonnegative")]
    PositiveArgument { z: f64 },
    #[error("interpolation node c2 = {0} outside (0, 1]")]
    InvalidNode(f64),
    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),
}

/// Highest phi index needed by the shipped tableaux.
pub const MAX_PHI_INDEX: usize = 3;

/// Switch point between the Taylor branch and the closed-form recurrence.
const TAYLOR_CUTOFF: f64 = 0.5;

/// Evaluates `phi_j(z)` for `j in 0..=3` and `z <= 0`.
pub fn phi(j: usize, z: f64) -> Result<f64, PhiError> {
    if j > MAX_PHI_INDEX {
        return Err(PhiError::UnsupportedOrder { j });
    }
    if z > 0.0 {
        return Err(PhiError::PositiveArgument { z });
    }
    Ok(phi_unchecked(j, z))
}

/// `1/j!` for small `j`.
fn inv_factorial(j: usize) -> f64 {
    const INV: [f64; 5] = [1.0, 1.0, 1.0 / 2.0, 1.0 / 6.0, 1.0 / 24.0];
    INV[j]
}

pub(crate) fn phi_unchecked(j: usize, z: f64) -> f64 {
    debug_assert!(j <= MAX_PHI_INDEX && z <= 0.0);
    if j == 0 {
        return z.exp();
    }
    if z.abs() < TAYLOR_CUTOFF {
        phi_taylor(j, z)
    } else {
        // For z <= -1/2 the numerators stay well away from cancellation.
        let mut v = (z.exp() - 1.0) / z;
        for m in 1..j {
            v = (v - inv_factorial(m)) / z;
        }
        v
    }
}

/// `sum_{n>=0} z^n / (n+j)!`, terms added until the relative term drops
/// below 1e-18 (at most 30 terms for |z| < 1/2).
fn phi_taylor(j: usize, z: f64) -> f64 {
    let mut term = inv_factorial(j);
    let mut sum = term;
    for n in 1..=30 {
        term *= z / (n + j) as f64;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// One additive term of a tableau weight: `coeff * phi_j(-node_scale tau lambda)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiTerm {
    pub coeff: f64,
    pub phi_index: usize,
    pub node_scale: f64,
}

/// A linear combination of phi-functions at scaled arguments, the form every
/// exponential Runge-Kutta weight takes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhiCombo {
    terms: Vec<PhiTerm>,
}

impl PhiCombo {
    pub fn new(terms: Vec<PhiTerm>) -> Result<Self, PhiError> {
        for t in &terms {
            if t.phi_index > MAX_PHI_INDEX {
                return Err(PhiError::UnsupportedOrder { j: t.phi_index });
            }
            if !(t.node_scale > 0.0 && t.node_scale <= 1.0) {
                return Err(PhiError::InvalidNode(t.node_scale));
            }
        }
        Ok(Self { terms })
    }

    /// The all-zero weight (e.g. a vanishing tableau entry).
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn terms(&self) -> &[PhiTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Scalar evaluation at one eigenvalue.
    pub fn eval_scalar(&self, tau: f64, lambda: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * phi_unchecked(t.phi_index, -t.node_scale * tau * lambda))
            .sum()
    }

    /// Value at `lambda = 0`, i.e. `sum coeff / j!`.
    pub fn at_zero(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * inv_factorial(t.phi_index))
            .sum()
    }
}

/// Evaluates a weight combination entrywise over a diffusion symbol.
pub fn eval_combo(combo: &PhiCombo, tau: f64, symbol: &Symbol) -> Result<ArrayD<f64>, PhiError> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(PhiError::NonPositiveStep(tau));
    }
    Ok(symbol
        .values()
        .mapv(|lambda| combo.eval_scalar(tau, lambda)))
}

/// The shipped schemes: explicit exponential Runge-Kutta of temporal orders
/// one to three.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Eifg1,
    Eifg2,
    Eifg3,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Eifg1 => "eifg1",
            Scheme::Eifg2 => "eifg2",
            Scheme::Eifg3 => "eifg3",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eifg1" => Ok(Scheme::Eifg1),
            "eifg2" => Ok(Scheme::Eifg2),
            "eifg3" => Ok(Scheme::Eifg3),
            other => Err(format!(
                "unknown scheme {other:?} (expected eifg1 | eifg2 | eifg3)"
            )),
        }
    }
}

/// Coefficients of an explicit exponential Runge-Kutta method: nodes `c_i`
/// with `c_1 = 0`, strictly lower-triangular stage weights `a_ij` and output
/// weights `b_i`, all expressed as phi-combinations.
#[derive(Debug, Clone, PartialEq)]
pub struct Tableau {
    scheme: Scheme,
    c: Vec<f64>,
    a: Vec<Vec<PhiCombo>>,
    b: Vec<PhiCombo>,
}

impl Tableau {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn stages(&self) -> usize {
        self.c.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.c
    }

    /// Stage weights of stage `i` (len `i`, empty for the first stage).
    pub fn a_row(&self, i: usize) -> &[PhiCombo] {
        &self.a[i]
    }

    pub fn b(&self) -> &[PhiCombo] {
        &self.b
    }
}

/// Builds one of the shipped tableaux. `c2` is the free interpolation node of
/// the two-stage scheme and is ignored by the others; the default choice in
/// the experiments is 1/2.
pub fn tableau(scheme: Scheme, c2: f64) -> Result<Tableau, PhiError> {
    let term = |coeff: f64, phi_index: usize, node_scale: f64| PhiTerm {
        coeff,
        phi_index,
        node_scale,
    };
    let combo = |terms: Vec<PhiTerm>| PhiCombo::new(terms).expect("valid tableau entry");
    match scheme {
        Scheme::Eifg1 => Ok(Tableau {
            scheme,
            c: vec![0.0],
            a: vec![vec![]],
            b: vec![combo(vec![term(1.0, 1, 1.0)])],
        }),
        Scheme::Eifg2 => {
            if !(c2 > 0.0 && c2 <= 1.0) {
                return Err(PhiError::InvalidNode(c2));
            }
            Ok(Tableau {
                scheme,
                c: vec![0.0, c2],
                a: vec![vec![], vec![combo(vec![term(c2, 1, c2)])]],
                b: vec![
                    combo(vec![term(1.0, 1, 1.0), term(-1.0 / c2, 2, 1.0)]),
                    combo(vec![term(1.0 / c2, 2, 1.0)]),
                ],
            })
        }
        Scheme::Eifg3 => {
            // four-stage third-order tableau; phi_{j,k} = phi_j(-c_k tau L)
            let half = 0.5;
            Ok(Tableau {
                scheme,
                c: vec![0.0, 0.5, 0.5, 1.0],
                a: vec![
                    vec![],
                    vec![combo(vec![term(0.5, 1, half)])],
                    vec![
                        combo(vec![term(0.5, 1, half), term(-1.0, 2, half)]),
                        combo(vec![term(1.0, 2, half)]),
                    ],
                    vec![
                        combo(vec![term(1.0, 1, 1.0), term(-2.0, 2, 1.0)]),
                        PhiCombo::zero(),
                        combo(vec![term(2.0, 2, 1.0)]),
                    ],
                ],
                b: vec![
                    combo(vec![
                        term(1.0, 1, 1.0),
                        term(-3.0, 2, 1.0),
                        term(4.0, 3, 1.0),
                    ]),
                    combo(vec![term(2.0, 2, 1.0), term(-4.0, 3, 1.0)]),
                    combo(vec![term(2.0, 2, 1.0), term(-4.0, 3, 1.0)]),
                    combo(vec![term(-1.0, 2, 1.0), term(4.0, 3, 1.0)]),
                ],
            })
        }
    }
}
