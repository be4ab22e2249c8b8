//! Periodic rectangular domains, uniform collocation grids and the diagonal
//! Fourier symbol of the (negative) Laplacian.
//!
//! The retained mode set on each axis is `k in [-N/2, N/2 - 1]`, stored in
//! standard DFT layout `(0, 1, ..., N/2 - 1, -N/2, ..., -1)` so coefficient
//! tensors line up with FFT output. Wavenumbers are scaled to the interval
//! length, `k~ = 2 pi k / (b - a)`.

use ndarray::{ArrayD, IxDyn};
use thiserror::Error;

/// Errors from domain and grid construction.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("domain dimension {0} outside the supported range 1..=3")]
    UnsupportedDims(usize),
    #[error("axis {axis}: interval [{a}, {b}] is empty or inverted")]
    EmptyInterval { axis: usize, a: f64, b: f64 },
    #[error("diffusion coefficient must be positive, got {0}")]
    NonPositiveDiffusion(f64),
    #[error("axis {axis}: grid size {size} must be an even integer >= 2")]
    InvalidSize { axis: usize, size: usize },
    #[error("expected {expected} grid sizes for a {expected}-dimensional domain, got {got}")]
    SizeCountMismatch { expected: usize, got: usize },
}

/// A rectangular product domain `[a_1,b_1] x ... x [a_d,b_d]` with periodic
/// boundary conditions and a constant diffusion coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    intervals: Vec<(f64, f64)>,
    diffusion: f64,
}

impl DomainSpec {
    pub fn new(intervals: &[(f64, f64)], diffusion: f64) -> Result<Self, GridError> {
        let dims = intervals.len();
        if !(1..=3).contains(&dims) {
            return Err(GridError::UnsupportedDims(dims));
        }
        for (axis, &(a, b)) in intervals.iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(GridError::EmptyInterval { axis, a, b });
            }
        }
        if !(diffusion.is_finite() && diffusion > 0.0) {
            return Err(GridError::NonPositiveDiffusion(diffusion));
        }
        Ok(Self {
            intervals: intervals.to_vec(),
            diffusion,
        })
    }

    /// Unit-diffusion cube `[0, 2 pi]^d`, the natural domain for smoke tests.
    pub fn unit_torus(dims: usize) -> Result<Self, GridError> {
        Self::new(&vec![(0.0, 2.0 * std::f64::consts::PI); dims], 1.0)
    }

    pub fn dims(&self) -> usize {
        self.intervals.len()
    }

    pub fn interval(&self, axis: usize) -> (f64, f64) {
        self.intervals[axis]
    }

    pub fn length(&self, axis: usize) -> f64 {
        let (a, b) = self.intervals[axis];
        b - a
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    /// Lebesgue measure of the box.
    pub fn volume(&self) -> f64 {
        self.intervals.iter().map(|&(a, b)| b - a).product()
    }
}

/// Uniform collocation grid on a [`DomainSpec`]: per-axis even sizes, node
/// coordinates and scaled wavenumbers in DFT order.
///
/// Grids are immutable after construction; fields keep one by value so
/// simulation state stays freely copyable and shareable across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: DomainSpec,
    sizes: Vec<usize>,
    nodes: Vec<Vec<f64>>,
    wavenumbers: Vec<Vec<f64>>,
}

/// Builds the collocation grid for `domain` with the given per-axis sizes.
///
/// Every size must be even and at least 2, one per domain axis.
pub fn build_grid(domain: &DomainSpec, sizes: &[usize]) -> Result<Grid, GridError> {
    if sizes.len() != domain.dims() {
        return Err(GridError::SizeCountMismatch {
            expected: domain.dims(),
            got: sizes.len(),
        });
    }
    for (axis, &n) in sizes.iter().enumerate() {
        if n < 2 || n % 2 != 0 {
            return Err(GridError::InvalidSize { axis, size: n });
        }
    }
    let mut nodes = Vec::with_capacity(sizes.len());
    let mut wavenumbers = Vec::with_capacity(sizes.len());
    for (axis, &n) in sizes.iter().enumerate() {
        let (a, _) = domain.interval(axis);
        let len = domain.length(axis);
        let h = len / n as f64;
        nodes.push((0..n).map(|j| a + j as f64 * h).collect());
        let scale = 2.0 * std::f64::consts::PI / len;
        wavenumbers.push(
            (0..n)
                .map(|idx| {
                    let k = if idx < n / 2 {
                        idx as i64
                    } else {
                        idx as i64 - n as i64
                    };
                    scale * k as f64
                })
                .collect(),
        );
    }
    Ok(Grid {
        domain: domain.clone(),
        sizes: sizes.to_vec(),
        nodes,
        wavenumbers,
    })
}

impl Grid {
    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn dims(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Node coordinates along one axis, `x_j = a + j (b - a) / N`.
    pub fn nodes(&self, axis: usize) -> &[f64] {
        &self.nodes[axis]
    }

    /// Scaled wavenumbers along one axis in DFT order.
    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.wavenumbers[axis]
    }

    pub fn node_count(&self) -> usize {
        self.sizes.iter().product()
    }

    /// Quadrature weight of one node, `|Omega| / prod N_i`.
    pub fn cell_volume(&self) -> f64 {
        self.domain.volume() / self.node_count() as f64
    }
}

/// The diagonal multiplier `D |k~|^2` of the diffusion operator over the
/// retained mode set.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    values: ArrayD<f64>,
}

/// Assembles `D (k~_1^2 + ... + k~_d^2)` entrywise; the zero mode is exactly 0.
pub fn laplacian_symbol(grid: &Grid) -> Symbol {
    let d = grid.diffusion();
    let mut values = ArrayD::zeros(IxDyn(grid.sizes()));
    for (idx, v) in values.indexed_iter_mut() {
        let mut sum = 0.0;
        for axis in 0..grid.dims() {
            let k = grid.wavenumbers(axis)[idx[axis]];
            sum += k * k;
        }
        *v = d * sum;
    }
    Symbol { values }
}

impl Symbol {
    pub fn values(&self) -> &ArrayD<f64> {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

impl Grid {
    fn diffusion(&self) -> f64 {
        self.domain.diffusion()
    }
}
