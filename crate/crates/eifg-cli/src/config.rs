//! JSON run configuration: parsing, strict validation and problem assembly.
//!
//! Unknown keys anywhere in the document are errors, so a typo in a sweep
//! definition fails loudly instead of silently running the wrong study.

use crate::error::CliError;
use eifg_core::{example1, example_burgers, example_fh, example_mcf, heat};
use eifg_core::{tableau, DealiasRule, Problem, Scheme, Tableau};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Raw JSON document.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Problem name: example1 | mcf | burgers | fh | heat.
    pub problem: String,
    /// Problem parameters (epsilon, theta, theta_c, dims, D as applicable).
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Scheme name: eifg1 | eifg2 | eifg3.
    pub scheme: String,
    /// Interpolation node of the two-stage scheme (default 1/2).
    pub c2: Option<f64>,
    /// Grid sizes: one grid (`[32,32,32]`) or a spatial sweep (`[[8,8,8],...]`).
    pub grid: GridField,
    /// Final time.
    pub t_final: f64,
    /// Step count: one value or a temporal sweep list.
    pub n_steps: StepsField,
    /// Dealias rule: none | two_thirds (default none).
    pub dealias: Option<String>,
    /// RNG seed; required by problems with random initial data.
    pub seed: Option<u64>,
    /// Where CSV tables and snapshots go (default "."; `--out` overrides).
    pub output_dir: Option<PathBuf>,
    /// Record diagnostics and snapshots every this many steps
    /// (0 = endpoints only; default 0).
    pub snapshot_stride: Option<usize>,
    /// Convergence reference: exact | finest.
    pub reference: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum GridField {
    Single(Vec<usize>),
    Sweep(Vec<Vec<usize>>),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum StepsField {
    Single(usize),
    Sweep(Vec<usize>),
}

/// Which resolutions the invocation covers; exactly one variant per config.
#[derive(Debug, Clone)]
pub enum SweepKind {
    Single {
        grid: Vec<usize>,
        n_steps: usize,
    },
    Temporal {
        grid: Vec<usize>,
        steps: Vec<usize>,
    },
    Spatial {
        grids: Vec<Vec<usize>>,
        n_steps: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    Exact,
    Finest,
}

/// A validated configuration ready to run.
#[derive(Debug)]
pub struct Validated {
    pub problem: Problem,
    pub scheme: Scheme,
    pub tableau: Tableau,
    pub dealias: DealiasRule,
    pub sweep: SweepKind,
    pub t_final: f64,
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    pub snapshot_stride: usize,
    pub reference: Option<Reference>,
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Pulls one parameter, removing it from the working map.
fn take_param(params: &mut BTreeMap<String, f64>, key: &str) -> Option<f64> {
    params.remove(key)
}

fn take_dims(params: &mut BTreeMap<String, f64>, default: usize) -> Result<usize, CliError> {
    match take_param(params, "dims") {
        None => Ok(default),
        Some(v) => {
            if v.fract() == 0.0 && (1.0..=3.0).contains(&v) {
                Ok(v as usize)
            } else {
                Err(config_err(format!("dims must be 1, 2 or 3, got {v}")))
            }
        }
    }
}

/// Builds the named problem, consuming its parameters; leftovers are errors.
pub fn build_problem(
    name: &str,
    params: &BTreeMap<String, f64>,
    dealias: DealiasRule,
) -> Result<Problem, CliError> {
    let mut params = params.clone();
    let problem = match name {
        "example1" => example1(),
        "mcf" => {
            let epsilon = take_param(&mut params, "epsilon")
                .ok_or_else(|| config_err("mcf requires parameter epsilon"))?;
            let dims = take_dims(&mut params, 2)?;
            example_mcf(epsilon, dims).map_err(|e| config_err(e.to_string()))?
        }
        "burgers" => {
            let epsilon = take_param(&mut params, "epsilon")
                .ok_or_else(|| config_err("burgers requires parameter epsilon"))?;
            example_burgers(epsilon, dealias).map_err(|e| config_err(e.to_string()))?
        }
        "fh" => {
            let epsilon = take_param(&mut params, "epsilon").unwrap_or(0.1);
            let theta = take_param(&mut params, "theta").unwrap_or(0.8);
            let theta_c = take_param(&mut params, "theta_c").unwrap_or(1.6);
            example_fh(epsilon, theta, theta_c).map_err(|e| config_err(e.to_string()))?
        }
        "heat" => {
            let diffusion = take_param(&mut params, "D").unwrap_or(1.0);
            let dims = take_dims(&mut params, 3)?;
            heat(dims, diffusion).map_err(|e| config_err(e.to_string()))?
        }
        other => return Err(config_err(format!("unknown problem {other:?}"))),
    };
    if let Some(key) = params.keys().next() {
        return Err(config_err(format!(
            "unknown parameter {key:?} for problem {name:?}"
        )));
    }
    Ok(problem)
}

fn check_grid(grid: &[usize], dims: usize) -> Result<(), CliError> {
    if grid.len() != dims {
        return Err(config_err(format!(
            "grid {grid:?} has {} sizes but the problem is {dims}-dimensional",
            grid.len()
        )));
    }
    Ok(())
}

fn strictly_increasing<T: PartialOrd>(xs: &[T]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

pub fn validate(config: &RunConfig) -> Result<Validated, CliError> {
    let scheme: Scheme = config.scheme.parse().map_err(|e: String| config_err(e))?;
    let c2 = config.c2.unwrap_or(0.5);
    let tab = tableau(scheme, c2).map_err(|e| config_err(e.to_string()))?;
    let dealias: DealiasRule = match &config.dealias {
        None => DealiasRule::None,
        Some(s) => s.parse().map_err(|e: String| config_err(e))?,
    };
    let problem = build_problem(&config.problem, &config.params, dealias)?;

    if !(config.t_final.is_finite() && config.t_final > 0.0) {
        return Err(config_err(format!(
            "t_final must be positive, got {}",
            config.t_final
        )));
    }

    let sweep = match (&config.grid, &config.n_steps) {
        (GridField::Single(grid), StepsField::Single(n)) => SweepKind::Single {
            grid: grid.clone(),
            n_steps: *n,
        },
        (GridField::Single(grid), StepsField::Sweep(steps)) => {
            if steps.is_empty() {
                return Err(config_err("temporal sweep list is empty"));
            }
            if !strictly_increasing(steps) {
                return Err(config_err("temporal sweep must be strictly increasing"));
            }
            SweepKind::Temporal {
                grid: grid.clone(),
                steps: steps.clone(),
            }
        }
        (GridField::Sweep(grids), StepsField::Single(n)) => {
            if grids.is_empty() {
                return Err(config_err("spatial sweep list is empty"));
            }
            for pair in grids.windows(2) {
                if pair[0].len() != pair[1].len()
                    || !pair[0].iter().zip(pair[1].iter()).all(|(a, b)| a < b)
                {
                    return Err(config_err(
                        "spatial sweep grids must refine every axis monotonically",
                    ));
                }
            }
            SweepKind::Spatial {
                grids: grids.clone(),
                n_steps: *n,
            }
        }
        (GridField::Sweep(_), StepsField::Sweep(_)) => {
            return Err(config_err(
                "config sweeps both grid and n_steps; pick exactly one",
            ));
        }
    };

    let dims = problem.domain().dims();
    match &sweep {
        SweepKind::Single { grid, n_steps } => {
            check_grid(grid, dims)?;
            if *n_steps == 0 {
                return Err(config_err("n_steps must be at least 1"));
            }
        }
        SweepKind::Temporal { grid, steps } => {
            check_grid(grid, dims)?;
            if steps[0] == 0 {
                return Err(config_err("n_steps must be at least 1"));
            }
        }
        SweepKind::Spatial { grids, n_steps } => {
            for grid in grids {
                check_grid(grid, dims)?;
            }
            if *n_steps == 0 {
                return Err(config_err("n_steps must be at least 1"));
            }
        }
    }

    let reference = match config.reference.as_deref() {
        None => None,
        Some("exact") => Some(Reference::Exact),
        Some("finest") => Some(Reference::Finest),
        Some(other) => {
            return Err(config_err(format!(
                "unknown reference {other:?} (expected exact | finest)"
            )))
        }
    };

    if problem.needs_seed() && config.seed.is_none() {
        return Err(config_err(format!(
            "problem {:?} has random initial data and requires a seed",
            problem.name()
        )));
    }

    Ok(Validated {
        problem,
        scheme,
        tableau: tab,
        dealias,
        sweep,
        t_final: config.t_final,
        seed: config.seed,
        output_dir: config
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(".")),
        snapshot_stride: config.snapshot_stride.unwrap_or(0),
        reference,
    })
}
