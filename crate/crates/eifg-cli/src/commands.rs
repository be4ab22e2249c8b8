//! The three harness commands: convergence studies, single simulations and
//! timing sweeps.

use crate::config::{Reference, SweepKind, Validated};
use crate::error::CliError;
use crate::snapshot::write_snapshot;
use crate::table::{fmt_e, write_csv};
use eifg_core::{
    build_grid, error_norms, fh_energy, integrate, interface_radius, inverse, prolong, rates,
    sup_norm, ErrorRecord, Grid, Observer, PhysicalField, RateTable, SpectralField, StepError,
};
use rayon::prelude::*;
use std::cell::RefCell;
use std::path::PathBuf;

#[derive(Debug)]
pub struct ConvergeReport {
    pub table: RateTable,
    pub csv_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagRow {
    pub step: usize,
    pub time: f64,
    pub sup_norm: f64,
    pub energy: Option<f64>,
    pub radius: Option<f64>,
}

#[derive(Debug)]
pub struct SimulateReport {
    pub rows: Vec<DiagRow>,
    pub snapshots: Vec<PathBuf>,
    pub csv_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub sizes: Vec<usize>,
    pub n_steps: usize,
    pub seconds_per_step: f64,
    pub growth_factor: Option<f64>,
}

#[derive(Debug)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub csv_path: PathBuf,
}

fn ensure_output_dir(v: &Validated) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&v.output_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", v.output_dir.display())))?;
    Ok(v.output_dir.clone())
}

/// One sweep entry run to completion: final coefficients plus stepping cost.
fn run_entry(
    v: &Validated,
    sizes: &[usize],
    n_steps: usize,
) -> Result<(SpectralField, f64), CliError> {
    let grid = build_grid(v.problem.domain(), sizes)?;
    let u0 = v
        .problem
        .initial_field(&grid, v.seed)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let res = integrate(
        &u0,
        v.t_final,
        n_steps,
        &v.tableau,
        &v.problem,
        v.dealias,
        &mut [],
    )?;
    let secs = res.seconds_per_step();
    Ok((res.state.field, secs))
}

/// Errors are measured in function space: the numerical solution is carried
/// onto the comparison grid by spectral prolongation and differenced there,
/// so the truncated tail of the reference contributes, matching how spectral
/// error tables are normally reported.
fn errors_against(field: &SpectralField, reference: &PhysicalField) -> Result<[f64; 3], CliError> {
    let prolonged = prolong(field, reference.grid()).map_err(StepError::from)?;
    let nodal = inverse(&prolonged).map_err(StepError::from)?;
    error_norms(&nodal, reference).map_err(|e| StepError::from(e).into())
}

fn oversampled_grid(v: &Validated, sizes: &[usize]) -> Result<Grid, CliError> {
    let doubled: Vec<usize> = sizes.iter().map(|&n| 2 * n).collect();
    Ok(build_grid(v.problem.domain(), &doubled)?)
}

/// Runs a convergence study and writes `converge.csv`.
pub fn cmd_converge(v: &Validated, jobs: usize) -> Result<ConvergeReport, CliError> {
    let reference = v
        .reference
        .ok_or_else(|| CliError::Config("converge requires a reference mode".into()))?;
    if reference == Reference::Exact && !v.problem.has_exact() {
        return Err(CliError::Config(format!(
            "reference=exact but problem {:?} has no exact solution",
            v.problem.name()
        )));
    }
    let entries: Vec<(Vec<usize>, usize)> = match &v.sweep {
        SweepKind::Temporal { grid, steps } => steps.iter().map(|&n| (grid.clone(), n)).collect(),
        SweepKind::Spatial { grids, n_steps } => {
            grids.iter().map(|g| (g.clone(), *n_steps)).collect()
        }
        SweepKind::Single { .. } => {
            return Err(CliError::Config(
                "converge requires a temporal or spatial sweep (lists may have one entry)".into(),
            ));
        }
    };
    let out_dir = ensure_output_dir(v)?;

    // reference=finest runs the finest entry up front and drops it from the rows
    let (row_entries, finest_reference): (Vec<(Vec<usize>, usize)>, Option<PhysicalField>) =
        match reference {
            Reference::Exact => (entries, None),
            Reference::Finest => {
                if entries.len() < 2 {
                    return Err(CliError::Config(
                        "reference=finest needs at least two sweep entries".into(),
                    ));
                }
                let (finest_sizes, finest_steps) = entries.last().expect("nonempty").clone();
                let (field, _) = run_entry(v, &finest_sizes, finest_steps)?;
                let nodal = inverse(&field).map_err(StepError::from)?;
                (entries[..entries.len() - 1].to_vec(), Some(nodal))
            }
        };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))?;
    let results: Result<Vec<ErrorRecord>, CliError> = pool.install(|| {
        row_entries
            .par_iter()
            .map(|(sizes, n_steps)| {
                let (field, secs) = run_entry(v, sizes, *n_steps)?;
                let errs = match (&finest_reference, reference) {
                    (Some(ref_nodal), _) => errors_against(&field, ref_nodal)?,
                    (None, _) => {
                        let cmp_grid = oversampled_grid(v, sizes)?;
                        let exact = v
                            .problem
                            .exact_field(&cmp_grid, v.t_final)
                            .expect("checked above");
                        errors_against(&field, &exact)?
                    }
                };
                Ok(ErrorRecord {
                    n_steps: *n_steps,
                    sizes: sizes.clone(),
                    errors: errs,
                    seconds_per_step: secs,
                })
            })
            .collect()
    });
    let table = rates(results?);

    let dims = v.problem.domain().dims();
    let mut header = vec!["N_T".to_string()];
    for axis in 0..dims {
        header.push(format!("N_{}", axis + 1));
    }
    for s in 0..3 {
        header.push(format!("e{s}"));
        header.push(format!("CR{s}"));
    }
    header.push("sec_per_step".into());
    let mut rows = Vec::new();
    for (rec, rate) in table.records.iter().zip(table.rates.iter()) {
        let mut row = vec![rec.n_steps.to_string()];
        row.extend(rec.sizes.iter().map(|n| n.to_string()));
        for (err, cr) in rec.errors.iter().zip(rate.iter()) {
            row.push(fmt_e(*err));
            row.push(cr.map(fmt_e).unwrap_or_default());
        }
        row.push(fmt_e(rec.seconds_per_step));
        rows.push(row);
    }
    let csv_path = out_dir.join("converge.csv");
    write_csv(&csv_path, &header, &rows)?;
    Ok(ConvergeReport { table, csv_path })
}

/// Runs one simulation, writing snapshots and `diagnostics.csv` at the
/// configured stride. On blow-up the partial outputs stay on disk next to a
/// `BLOWUP.txt` marker.
pub fn cmd_simulate(v: &Validated) -> Result<SimulateReport, CliError> {
    let (grid_sizes, n_steps) = match &v.sweep {
        SweepKind::Single { grid, n_steps } => (grid.clone(), *n_steps),
        _ => {
            return Err(CliError::Config(
                "simulate takes a single-run config, not a sweep".into(),
            ))
        }
    };
    let out_dir = ensure_output_dir(v)?;
    let csv_path = out_dir.join("diagnostics.csv");
    // fail on an unwritable directory before any stepping
    std::fs::File::create(&csv_path)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", csv_path.display())))?;

    let grid = build_grid(v.problem.domain(), &grid_sizes)?;
    let u0 = v
        .problem
        .initial_field(&grid, v.seed)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let energy_params = v.problem.energy_params();
    let wants_radius = v.problem.tracks_radius();

    let rows: RefCell<Vec<DiagRow>> = RefCell::new(Vec::new());
    let snapshots: RefCell<Vec<PathBuf>> = RefCell::new(Vec::new());
    // failures raised inside the observer, reported with their own exit class
    let observer_failure: RefCell<Option<CliError>> = RefCell::new(None);
    let abort = |e: CliError| -> StepError {
        *observer_failure.borrow_mut() = Some(e);
        StepError::Setup("observer aborted the run".into())
    };
    let result = {
        let observer = Observer::new(v.snapshot_stride, |step, time, state| {
            let nodal = inverse(&state.field)?;
            let energy = match energy_params {
                Some(p) => Some(
                    fh_energy(&nodal, p.epsilon, p.theta, p.theta_c)
                        .map_err(|e| abort(CliError::Numerical(e.to_string())))?,
                ),
                None => None,
            };
            let radius = if wants_radius {
                Some(
                    interface_radius(&nodal)
                        .map_err(|e| abort(CliError::Numerical(e.to_string())))?
                        .radius,
                )
            } else {
                None
            };
            rows.borrow_mut().push(DiagRow {
                step,
                time,
                sup_norm: sup_norm(&nodal),
                energy,
                radius,
            });
            let path = out_dir.join(format!("snapshot_{step:08}.eifg"));
            write_snapshot(&path, &nodal, time)
                .map_err(|e| abort(CliError::Io(format!("{}: {e}", path.display()))))?;
            snapshots.borrow_mut().push(path);
            Ok(())
        });
        integrate(
            &u0,
            v.t_final,
            n_steps,
            &v.tableau,
            &v.problem,
            v.dealias,
            &mut [observer],
        )
    };

    // diagnostics rows collected so far are written even when the run failed
    let rows = rows.into_inner();
    let mut header = vec!["t".to_string(), "sup_norm".to_string()];
    if energy_params.is_some() {
        header.push("energy".into());
    }
    if wants_radius {
        header.push("radius".into());
    }
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut row = vec![fmt_e(r.time), fmt_e(r.sup_norm)];
            if let Some(e) = r.energy {
                row.push(fmt_e(e));
            }
            if let Some(rad) = r.radius {
                row.push(fmt_e(rad));
            }
            row
        })
        .collect();
    write_csv(&csv_path, &header, &csv_rows)?;

    if let Some(failure) = observer_failure.into_inner() {
        return Err(failure);
    }
    match result {
        Ok(_) => Ok(SimulateReport {
            rows,
            snapshots: snapshots.into_inner(),
            csv_path,
        }),
        Err(err) => {
            if let StepError::BlowUp { .. } = err {
                let marker = out_dir.join("BLOWUP.txt");
                let _ = std::fs::write(&marker, format!("{err}\n"));
            }
            Err(err.into())
        }
    }
}

/// `log(time ratio) / log(node-count ratio)`: 1 means cost per node is flat.
fn growth_factor(prev_secs: f64, prev_nodes: usize, secs: f64, nodes: usize) -> f64 {
    (secs / prev_secs).ln() / (nodes as f64 / prev_nodes as f64).ln()
}

/// Times stepping cost per resolution (run serially for clean numbers) and
/// writes `bench.csv` with growth factors.
pub fn cmd_bench(v: &Validated) -> Result<BenchReport, CliError> {
    let (grids, n_steps): (Vec<Vec<usize>>, usize) = match &v.sweep {
        SweepKind::Spatial { grids, n_steps } => (grids.clone(), *n_steps),
        SweepKind::Single { grid, n_steps } => (vec![grid.clone()], *n_steps),
        SweepKind::Temporal { .. } => {
            return Err(CliError::Config(
                "bench takes a spatial sweep (or a single resolution)".into(),
            ))
        }
    };
    let out_dir = ensure_output_dir(v)?;
    let mut rows: Vec<BenchRow> = Vec::new();
    for sizes in &grids {
        let (_, secs) = run_entry(v, sizes, n_steps)?;
        let nodes: usize = sizes.iter().product();
        let factor = rows.last().map(|prev: &BenchRow| {
            growth_factor(
                prev.seconds_per_step,
                prev.sizes.iter().product(),
                secs,
                nodes,
            )
        });
        rows.push(BenchRow {
            sizes: sizes.clone(),
            n_steps,
            seconds_per_step: secs,
            growth_factor: factor,
        });
    }
    let dims = v.problem.domain().dims();
    let mut header = vec!["N_T".to_string()];
    for axis in 0..dims {
        header.push(format!("N_{}", axis + 1));
    }
    header.push("sec_per_step".into());
    header.push("growth_factor".into());
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut row = vec![r.n_steps.to_string()];
            row.extend(r.sizes.iter().map(|n| n.to_string()));
            row.push(fmt_e(r.seconds_per_step));
            row.push(r.growth_factor.map(fmt_e).unwrap_or_default());
            row
        })
        .collect();
    let csv_path = out_dir.join("bench.csv");
    write_csv(&csv_path, &header, &csv_rows)?;
    Ok(BenchReport { rows, csv_path })
}
