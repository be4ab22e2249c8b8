//! Sobolev norms via Parseval weights, convergence-rate tables, interface
//! radius, discrete free energy and sup-norm tracking.

use crate::grid::Grid;
use crate::transform::{forward, gradient, inverse, PhysicalField, SpectralField, TransformError};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("interface radius needs a 2- or 3-dimensional field, got {0}")]
    UnsupportedDims(usize),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// Discrete Sobolev norm `sqrt(|Omega| sum_k (1 + |k~|^2)^s |u_hat_k|^2)` for
/// `s in {0, 1, 2}`; `s = 0` is the plain L2 norm.
///
/// The full weight `(1 + |k~|^2)^s` is used rather than the seminorm
/// `|k~|^(2s)` so errors in the mean mode stay visible; observed rates are
/// unaffected.
pub fn sobolev_norm(u_hat: &SpectralField, s: usize) -> f64 {
    assert!(s <= 2, "sobolev_norm supports s in 0..=2");
    let grid = u_hat.grid();
    let volume = grid.domain().volume();
    let mut sum = 0.0;
    for (idx, c) in u_hat.coeffs().indexed_iter() {
        let mut k2 = 0.0;
        for axis in 0..grid.dims() {
            let k = grid.wavenumbers(axis)[idx[axis]];
            k2 += k * k;
        }
        let weight = match s {
            0 => 1.0,
            1 => 1.0 + k2,
            _ => {
                let w = 1.0 + k2;
                w * w
            }
        };
        sum += weight * c.norm_sqr();
    }
    (volume * sum).sqrt()
}

/// L2, H1 and H2 norms of the nodal difference `u - reference`, computed by
/// differencing at the collocation points and transforming once.
pub fn error_norms(
    u: &PhysicalField,
    reference: &PhysicalField,
) -> Result<[f64; 3], TransformError> {
    if u.grid() != reference.grid() {
        return Err(TransformError::GridMismatch);
    }
    let diff = PhysicalField::new(u.grid().clone(), u.values() - reference.values())?;
    let diff_hat = forward(&diff)?;
    Ok([
        sobolev_norm(&diff_hat, 0),
        sobolev_norm(&diff_hat, 1),
        sobolev_norm(&diff_hat, 2),
    ])
}

/// Largest nodal magnitude.
pub fn sup_norm(u: &PhysicalField) -> f64 {
    u.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Measure-based interface radius of a phase field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusMeasure {
    pub radius: f64,
    /// Set when no node is in the positive phase.
    pub collapsed: bool,
}

/// Radius of the `u > 0` region from its measure: `A = cell volume * #{u > 0}`,
/// then `R = sqrt(A/pi)` in 2D or `(3A/(4 pi))^(1/3)` in 3D.
///
/// Counting positive nodes is grid-orientation independent and robust to
/// interface noise, unlike ray intersection.
pub fn interface_radius(u: &PhysicalField) -> Result<RadiusMeasure, DiagnosticsError> {
    let dims = u.grid().dims();
    if !(2..=3).contains(&dims) {
        return Err(DiagnosticsError::UnsupportedDims(dims));
    }
    let positive = u.values().iter().filter(|&&v| v > 0.0).count();
    if positive == 0 {
        return Ok(RadiusMeasure {
            radius: 0.0,
            collapsed: true,
        });
    }
    let area = u.grid().cell_volume() * positive as f64;
    let radius = if dims == 2 {
        (area / std::f64::consts::PI).sqrt()
    } else {
        (3.0 * area / (4.0 * std::f64::consts::PI)).cbrt()
    };
    Ok(RadiusMeasure {
        radius,
        collapsed: false,
    })
}

/// Discrete Flory-Huggins free energy
/// `int (theta/2)((1+u)ln(1+u) + (1-u)ln(1-u)) - (theta_c/2) u^2 + (eps^2/2)|grad u|^2`
/// by the uniform nodal rule, with the gradient taken spectrally.
pub fn fh_energy(
    u: &PhysicalField,
    epsilon: f64,
    theta: f64,
    theta_c: f64,
) -> Result<f64, DiagnosticsError> {
    let clamp = 1.0 - 1e-12;
    let mut potential = 0.0;
    for &v in u.values().iter() {
        let uc = v.clamp(-clamp, clamp);
        let entropy = (1.0 + uc) * uc.ln_1p() + (1.0 - uc) * (-uc).ln_1p();
        potential += 0.5 * theta * entropy - 0.5 * theta_c * v * v;
    }
    let u_hat = forward(u)?;
    let mut grad_sq = 0.0;
    for component in gradient(&u_hat) {
        let nodal = inverse(&component)?;
        grad_sq += nodal.values().iter().map(|g| g * g).sum::<f64>();
    }
    Ok(u.grid().cell_volume() * (potential + 0.5 * epsilon * epsilon * grad_sq))
}

/// One row of a convergence study: the resolution, the three error norms
/// against the reference, and the stepping cost.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub n_steps: usize,
    pub sizes: Vec<usize>,
    /// `[e_0, e_1, e_2]` = L2, H1, H2 errors.
    pub errors: [f64; 3],
    pub seconds_per_step: f64,
}

/// Error records with observed convergence rates between successive rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub records: Vec<ErrorRecord>,
    /// `rates[i][s]` relates record `i` to record `i-1`; the first row and
    /// any pair without a well-defined refinement stay `None`.
    pub rates: Vec<[Option<f64>; 3]>,
}

/// Refinement ratio between two successive records, when exactly one of
/// (space, time) was refined uniformly.
fn refinement_ratio(coarse: &ErrorRecord, fine: &ErrorRecord) -> Option<f64> {
    let time_refined = fine.n_steps != coarse.n_steps;
    let space_refined = fine.sizes != coarse.sizes;
    match (time_refined, space_refined) {
        (true, false) => {
            let r = fine.n_steps as f64 / coarse.n_steps as f64;
            (r > 1.0).then_some(r)
        }
        (false, true) => {
            if coarse.sizes.len() != fine.sizes.len() {
                return None;
            }
            let r = fine.sizes[0] as f64 / coarse.sizes[0] as f64;
            let uniform = coarse
                .sizes
                .iter()
                .zip(fine.sizes.iter())
                .all(|(&c, &f)| f as f64 / c as f64 == r);
            (uniform && r > 1.0).then_some(r)
        }
        _ => None,
    }
}

/// Observed rates `CR = log(e_coarse / e_fine) / log(ratio)` down the table.
/// Zero or non-finite errors leave the rate undefined.
pub fn rates(records: Vec<ErrorRecord>) -> RateTable {
    let mut out = vec![[None; 3]];
    for i in 1..records.len() {
        let mut row = [None; 3];
        if let Some(ratio) = refinement_ratio(&records[i - 1], &records[i]) {
            for (s, cell) in row.iter_mut().enumerate() {
                let (coarse, fine) = (records[i - 1].errors[s], records[i].errors[s]);
                if coarse.is_finite() && fine.is_finite() && coarse > 0.0 && fine > 0.0 {
                    *cell = Some((coarse / fine).ln() / ratio.ln());
                }
            }
        }
        out.push(row);
    }
    RateTable {
        records,
        rates: out,
    }
}

/// Samples a field defined on a finer grid at the nodes of a coarser one.
/// Requires every fine size to be an integer multiple of its coarse partner
/// so coarse nodes are a subset of fine nodes.
pub fn restrict_to(
    fine: &PhysicalField,
    coarse_grid: &Grid,
) -> Result<PhysicalField, TransformError> {
    if fine.grid().domain() != coarse_grid.domain() {
        return Err(TransformError::GridMismatch);
    }
    let fine_sizes = fine.grid().sizes();
    let coarse_sizes = coarse_grid.sizes();
    let mut strides = Vec::with_capacity(coarse_sizes.len());
    for (&f, &c) in fine_sizes.iter().zip(coarse_sizes.iter()) {
        if f % c != 0 {
            return Err(TransformError::ShapeMismatch {
                expected: coarse_sizes.to_vec(),
                got: fine_sizes.to_vec(),
            });
        }
        strides.push(f / c);
    }
    let values = ndarray::ArrayD::from_shape_fn(ndarray::IxDyn(coarse_sizes), |idx| {
        let mut fine_idx = Vec::with_capacity(strides.len());
        for (axis, stride) in strides.iter().enumerate() {
            fine_idx.push(idx[axis] * stride);
        }
        fine.values()[ndarray::IxDyn(&fine_idx)]
    });
    PhysicalField::new(coarse_grid.clone(), values)
}
