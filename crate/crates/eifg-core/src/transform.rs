//! Conversion between nodal and coefficient representations, spectral
//! differentiation and dealiasing.
//!
//! Coefficients are normalized so that `u_hat_k = (prod N_i)^-1 sum_j u(x_j)
//! exp(-i k~ . x_j)`; the coefficient then equals the amplitude of the basis
//! function `exp(i k~ . x)` in the truncated expansion. Since nodes carry the
//! physical offset `a_i`, a per-axis phase `exp(-i k~ a_i)` is applied on top
//! of the plain DFT whenever an interval does not start at zero.

use crate::grid::Grid;
use ndarray::{ArrayD, Axis, IxDyn, Zip};
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("field values contain a non-finite entry")]
    NonFiniteInput,
    #[error("tensor shape {got:?} does not match grid sizes {expected:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error(
        "imaginary residue {max_imag:.3e} above threshold {threshold:.3e}; \
         coefficients violate Hermitian symmetry"
    )]
    SymmetryViolation { max_imag: f64, threshold: f64 },
}

/// Dealiasing applied to coefficients of nonlinear products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DealiasRule {
    /// Keep all modes (the default).
    #[default]
    None,
    /// Zero every coefficient with `|k_i| > N_i / 3` on any axis.
    TwoThirds,
}

impl std::str::FromStr for DealiasRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "two_thirds" => Ok(Self::TwoThirds),
            other => Err(format!(
                "unknown dealias rule {other:?} (expected none | two_thirds)"
            )),
        }
    }
}

/// Real nodal values `u(x_j)` on a collocation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    grid: Grid,
    values: ArrayD<f64>,
}

impl PhysicalField {
    pub fn new(grid: Grid, values: ArrayD<f64>) -> Result<Self, TransformError> {
        if values.shape() != grid.sizes() {
            return Err(TransformError::ShapeMismatch {
                expected: grid.sizes().to_vec(),
                got: values.shape().to_vec(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Samples a closed-form function at the grid nodes.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut values = ArrayD::zeros(IxDyn(grid.sizes()));
        let mut coords = vec![0.0; grid.dims()];
        for (idx, v) in values.indexed_iter_mut() {
            for axis in 0..grid.dims() {
                coords[axis] = grid.nodes(axis)[idx[axis]];
            }
            *v = f(&coords);
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &ArrayD<f64> {
        &self.values
    }

    pub fn into_values(self) -> ArrayD<f64> {
        self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut ArrayD<f64> {
        &mut self.values
    }
}

/// Complex coefficients `u_hat_k` over the retained mode set.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: ArrayD<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid, coeffs: ArrayD<Complex64>) -> Result<Self, TransformError> {
        if coeffs.shape() != grid.sizes() {
            return Err(TransformError::ShapeMismatch {
                expected: grid.sizes().to_vec(),
                got: coeffs.shape().to_vec(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &ArrayD<Complex64> {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> ArrayD<Complex64> {
        self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut ArrayD<Complex64> {
        &mut self.coeffs
    }
}

/// Nodal values to coefficients. Rejects non-finite input.
pub fn forward(u: &PhysicalField) -> Result<SpectralField, TransformError> {
    if !u.values.iter().all(|v| v.is_finite()) {
        return Err(TransformError::NonFiniteInput);
    }
    let mut data = u.values.mapv(|v| Complex64::new(v, 0.0));
    fft_forward_inplace(&u.grid, &mut data);
    Ok(SpectralField {
        grid: u.grid.clone(),
        coeffs: data,
    })
}

/// Coefficients to nodal values, `u(x_j) = sum_k u_hat_k exp(i k~ . x_j)`.
///
/// The imaginary residue left by Hermitian-symmetric coefficients is checked
/// against `10 eps ||u_hat||_1` (an upper bound for the reconstruction
/// amplitude) and discarded; anything larger is a symmetry violation.
pub fn inverse(u_hat: &SpectralField) -> Result<PhysicalField, TransformError> {
    let mut data = u_hat.coeffs.clone();
    let mut out = ArrayD::zeros(IxDyn(u_hat.grid.sizes()));
    fft_inverse_checked(&u_hat.grid, &mut data, &mut out)?;
    Ok(PhysicalField {
        grid: u_hat.grid.clone(),
        values: out,
    })
}

/// Spectral gradient: component `i` carries coefficients `i k~_i u_hat_k`.
///
/// The Nyquist mode `k_i = -N_i/2` has no conjugate partner and is zeroed in
/// component `i`, the conventional fix for real data.
pub fn gradient(u_hat: &SpectralField) -> Vec<SpectralField> {
    (0..u_hat.grid.dims())
        .map(|axis| {
            let mut data = u_hat.coeffs.clone();
            apply_derivative_inplace(&u_hat.grid, &mut data, axis);
            SpectralField {
                grid: u_hat.grid.clone(),
                coeffs: data,
            }
        })
        .collect()
}

/// Spectral prolongation onto a finer grid over the same domain: coefficients
/// are carried over, new modes are zero, and each refined axis splits its
/// unpaired Nyquist coefficient evenly between `-N/2` and `+N/2` so real
/// fields stay real. Exact for everything the coarse grid resolves.
pub fn prolong(u_hat: &SpectralField, fine_grid: &Grid) -> Result<SpectralField, TransformError> {
    if u_hat.grid().domain() != fine_grid.domain() {
        return Err(TransformError::GridMismatch);
    }
    let coarse_sizes = u_hat.grid().sizes();
    if fine_grid
        .sizes()
        .iter()
        .zip(coarse_sizes.iter())
        .any(|(&f, &c)| f < c)
    {
        return Err(TransformError::ShapeMismatch {
            expected: coarse_sizes.to_vec(),
            got: fine_grid.sizes().to_vec(),
        });
    }
    let mut data = u_hat.coeffs.clone();
    for axis in 0..fine_grid.dims() {
        let n = data.shape()[axis];
        let m = fine_grid.sizes()[axis];
        if m == n {
            continue;
        }
        let mut shape = data.shape().to_vec();
        shape[axis] = m;
        let mut out: ArrayD<Complex64> = ArrayD::zeros(IxDyn(&shape));
        for src in 0..n {
            let slab = data.index_axis(Axis(axis), src);
            if src == n / 2 {
                let half = slab.mapv(|v| v * 0.5);
                out.index_axis_mut(Axis(axis), n / 2).assign(&half);
                out.index_axis_mut(Axis(axis), m - n / 2).assign(&half);
            } else {
                let dst = if src < n / 2 { src } else { src + m - n };
                out.index_axis_mut(Axis(axis), dst).assign(&slab);
            }
        }
        data = out;
    }
    Ok(SpectralField {
        grid: fine_grid.clone(),
        coeffs: data,
    })
}

/// Applies a dealias rule, returning a fresh field.
pub fn dealias(u_hat: &SpectralField, rule: DealiasRule) -> SpectralField {
    let mut data = u_hat.coeffs.clone();
    apply_dealias_inplace(&u_hat.grid, &mut data, rule);
    SpectralField {
        grid: u_hat.grid.clone(),
        coeffs: data,
    }
}

// ---------------------------------------------------------------------------
// In-place engine shared with the time stepper.

static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    let mut planner = PLANNER
        .get_or_init(|| Mutex::new(FftPlanner::new()))
        .lock()
        .expect("FFT planner lock poisoned");
    planner.plan_fft(len, direction)
}

fn fft_along_axes(data: &mut ArrayD<Complex64>, direction: FftDirection) {
    let shape: Vec<usize> = data.shape().to_vec();
    let last = shape.len() - 1;
    for (axis, &n) in shape.iter().enumerate() {
        let fft = plan(n, direction);
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        if axis == last && data.is_standard_layout() {
            // contiguous lanes: one multi-chunk call
            let slice = data.as_slice_mut().expect("standard layout");
            fft.process_with_scratch(slice, &mut scratch);
        } else {
            let mut lane_buf = vec![Complex64::default(); n];
            for mut lane in data.lanes_mut(Axis(axis)) {
                for (b, v) in lane_buf.iter_mut().zip(lane.iter()) {
                    *b = *v;
                }
                fft.process_with_scratch(&mut lane_buf, &mut scratch);
                for (v, b) in lane.iter_mut().zip(lane_buf.iter()) {
                    *v = *b;
                }
            }
        }
    }
}

/// Multiplies each axis-`axis` slab by a per-index scalar.
fn scale_along_axis(data: &mut ArrayD<Complex64>, axis: usize, factors: &[Complex64]) {
    for (idx, mut slab) in data.axis_iter_mut(Axis(axis)).enumerate() {
        let f = factors[idx];
        slab.mapv_inplace(|v| v * f);
    }
}

/// Phase `exp(-i k~ a)` per retained mode of one axis; `None` when `a = 0`.
fn axis_phase(grid: &Grid, axis: usize, sign: f64) -> Option<Vec<Complex64>> {
    let (a, _) = grid.domain().interval(axis);
    if a == 0.0 {
        return None;
    }
    Some(
        grid.wavenumbers(axis)
            .iter()
            .map(|&k| Complex64::from_polar(1.0, sign * k * a))
            .collect(),
    )
}

pub(crate) fn fft_forward_inplace(grid: &Grid, data: &mut ArrayD<Complex64>) {
    debug_assert_eq!(data.shape(), grid.sizes());
    fft_along_axes(data, FftDirection::Forward);
    let norm = 1.0 / grid.node_count() as f64;
    data.mapv_inplace(|v| v * norm);
    for axis in 0..grid.dims() {
        if let Some(phase) = axis_phase(grid, axis, -1.0) {
            scale_along_axis(data, axis, &phase);
        }
    }
}

/// Unnormalized inverse transform with Hermitian-residue check; the real part
/// lands in `out`.
pub(crate) fn fft_inverse_checked(
    grid: &Grid,
    data: &mut ArrayD<Complex64>,
    out: &mut ArrayD<f64>,
) -> Result<(), TransformError> {
    debug_assert_eq!(data.shape(), grid.sizes());
    debug_assert_eq!(out.shape(), grid.sizes());
    let coeff_l1: f64 = data.iter().map(|c| c.norm()).sum();
    for axis in 0..grid.dims() {
        if let Some(phase) = axis_phase(grid, axis, 1.0) {
            scale_along_axis(data, axis, &phase);
        }
    }
    fft_along_axes(data, FftDirection::Inverse);
    // ||u_hat||_1 bounds the reconstruction amplitude; the log factor covers
    // roundoff accumulated across the butterfly levels of all axes.
    let levels = 1.0 + (grid.node_count() as f64).log2();
    let threshold = 10.0 * f64::EPSILON * coeff_l1 * levels;
    let mut max_imag = 0.0f64;
    for v in data.iter() {
        max_imag = max_imag.max(v.im.abs());
    }
    if max_imag > threshold {
        return Err(TransformError::SymmetryViolation {
            max_imag,
            threshold,
        });
    }
    Zip::from(out).and(&*data).for_each(|o, v| *o = v.re);
    Ok(())
}

/// Multiplies by `i k~_axis` and zeroes the unpaired Nyquist plane of `axis`.
pub(crate) fn apply_derivative_inplace(grid: &Grid, data: &mut ArrayD<Complex64>, axis: usize) {
    let n = grid.sizes()[axis];
    let factors: Vec<Complex64> = grid
        .wavenumbers(axis)
        .iter()
        .enumerate()
        .map(|(idx, &k)| {
            if idx == n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k)
            }
        })
        .collect();
    scale_along_axis(data, axis, &factors);
}

pub(crate) fn apply_dealias_inplace(grid: &Grid, data: &mut ArrayD<Complex64>, rule: DealiasRule) {
    if rule == DealiasRule::None {
        return;
    }
    for axis in 0..grid.dims() {
        let n = grid.sizes()[axis] as i64;
        let mask: Vec<bool> = (0..n)
            .map(|idx| {
                let k = if idx < n / 2 { idx } else { idx - n };
                3 * k.abs() > n
            })
            .collect();
        for (idx, mut slab) in data.axis_iter_mut(Axis(axis)).enumerate() {
            if mask[idx] {
                slab.fill(Complex64::new(0.0, 0.0));
            }
        }
    }
}
