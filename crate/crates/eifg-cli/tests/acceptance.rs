//! Acceptance suite: one test per shipped-behavior criterion, each printing a
//! PASS/FAIL line (visible with `--nocapture`). Criteria cover the
//! phi-function oracle, linear exactness, observed temporal and spatial
//! orders, the Burgers regression ceiling, interface shrinkage, discrete
//! energy/bound preservation, FFT cost scaling and the core property suite.
//!
//! The tests serialize on a mutex: several criteria are timed and the timing
//! ones must not contend for cores.

use eifg_cli::{cmd_bench, cmd_converge, cmd_simulate, config};
use eifg_core::{
    build_grid, error_norms, eval_reaction, example1, example_burgers, example_fh, example_mcf,
    forward, integrate, inverse, laplacian_symbol, mcf_limit_radius, phi, prolong, tableau,
    DealiasRule, PhysicalField, Scheme,
};
use ndarray::{ArrayD, IxDyn};
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

static GATE: OnceLock<Mutex<()>> = OnceLock::new();

fn exclusive() -> MutexGuard<'static, ()> {
    GATE.get_or_init(|| Mutex::new(()))
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn verdict(number: usize, name: &str, pass: bool, detail: String) {
    println!(
        "acceptance criterion {number:2} ({name}): {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {number} ({name}) failed: {detail}");
}

fn within_budget(started: Instant, limit_secs: f64) -> (bool, f64) {
    let elapsed = started.elapsed().as_secs_f64();
    (elapsed < limit_secs, elapsed)
}

fn validated(json: &str) -> config::Validated {
    let raw: config::RunConfig = serde_json::from_str(json).expect("valid test config");
    config::validate(&raw).expect("test config validates")
}

/// Least-squares slope of log(error) against log(dt).
fn ls_slope(errors: &[f64], steps: &[usize], t_final: f64) -> f64 {
    let xs: Vec<f64> = steps.iter().map(|&n| (t_final / n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (sx, sy) = (xs.iter().sum::<f64>(), ys.iter().sum::<f64>());
    let sxx = xs.iter().map(|x| x * x).sum::<f64>();
    let sxy = xs.iter().zip(ys.iter()).map(|(x, y)| x * y).sum::<f64>();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

// ---------------------------------------------------------------------------
// criterion 1: phi functions against an exact-rational series oracle

mod oracle {
    use num::bigint::{BigInt, Sign};
    use num::rational::BigRational;
    use num::{Signed, ToPrimitive, Zero};

    fn magnitude_bits(r: &BigRational) -> i64 {
        if r.is_zero() {
            return i64::MIN / 2;
        }
        r.numer().abs().bits() as i64 - r.denom().bits() as i64
    }

    fn rational_to_f64(r: &BigRational) -> f64 {
        if r.is_zero() {
            return 0.0;
        }
        let sign = if r.numer().sign() == Sign::Minus {
            -1.0
        } else {
            1.0
        };
        let p = r.numer().abs();
        let q = r.denom().clone();
        let shift: i64 = 64 - (p.bits() as i64 - q.bits() as i64);
        let m = if shift >= 0 {
            (p << shift as u64) / q
        } else {
            p / (q << (-shift) as u64)
        };
        sign * m.to_f64().expect("64-bit mantissa") * (-shift as f64).exp2()
    }

    /// `phi_j(z) = sum_{n>=0} z^n/(n+j)!` summed in exact rational arithmetic
    /// until the term magnitude falls 200 bits (~60 digits) below the sum.
    pub fn phi(j: usize, z: f64) -> f64 {
        let zr = BigRational::from_float(z).expect("finite argument");
        let factorial: BigInt = (1..=j as u64)
            .map(BigInt::from)
            .product::<BigInt>()
            .max(BigInt::from(1));
        let mut term = BigRational::new(BigInt::from(1), factorial);
        let mut sum = term.clone();
        for n in 1..3000usize {
            term = term * &zr / BigInt::from(n + j);
            sum += &term;
            if magnitude_bits(&term) < magnitude_bits(&sum) - 200 {
                break;
            }
        }
        rational_to_f64(&sum)
    }
}

#[test]
fn c01_phi_oracle_equivalence() {
    let _gate = exclusive();
    let started = Instant::now();
    let arguments = [-1e-12, -1e-6, -0.4, -1.0, -10.0, -100.0];
    let mut worst = 0.0f64;
    let mut worst_at = (0usize, 0.0f64);
    for j in 0..=3 {
        for &z in &arguments {
            let got = phi(j, z).expect("valid domain");
            let want = oracle::phi(j, z);
            let rel = (got - want).abs() / want.abs();
            if rel > worst {
                worst = rel;
                worst_at = (j, z);
            }
        }
    }
    let (in_time, elapsed) = within_budget(started, 1.0);
    verdict(
        1,
        "phi oracle equivalence",
        worst <= 1e-14 && in_time,
        format!(
            "worst rel err {worst:.2e} at phi_{}({}) (tol 1e-14), {elapsed:.2}s (< 1s)",
            worst_at.0, worst_at.1
        ),
    );
}

// ---------------------------------------------------------------------------
// criterion 2: the linear part is integrated exactly

#[test]
fn c02_linear_exactness() {
    let _gate = exclusive();
    let started = Instant::now();
    let problem = eifg_core::heat(3, 1.0).unwrap();
    let grid = build_grid(problem.domain(), &[16, 16, 16]).unwrap();
    let u0 = PhysicalField::from_fn(&grid, |x| {
        x[0].sin() + 0.5 * (2.0 * x[1]).cos() + 0.25 * (x[0] + 3.0 * x[1] - 2.0 * x[2]).sin()
    });
    let u0_hat = forward(&u0).unwrap();
    let symbol = laplacian_symbol(&grid);
    let reference: ArrayD<_> = ndarray::Zip::from(u0_hat.coeffs())
        .and(symbol.values())
        .map_collect(|&c, &l| c * (-l).exp());
    let ref_max = reference.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let mut worst = 0.0f64;
    for scheme in [Scheme::Eifg1, Scheme::Eifg2, Scheme::Eifg3] {
        for n_steps in [1usize, 7, 32] {
            let tab = tableau(scheme, 0.5).unwrap();
            let res = integrate(
                &u0,
                1.0,
                n_steps,
                &tab,
                &problem,
                DealiasRule::None,
                &mut [],
            )
            .unwrap();
            for (a, b) in res.state.field.coeffs().iter().zip(reference.iter()) {
                worst = worst.max((a - b).norm() / ref_max);
            }
        }
    }
    let (in_time, elapsed) = within_budget(started, 5.0);
    verdict(
        2,
        "linear exactness",
        worst <= 1e-12 && in_time,
        format!("worst normwise deviation {worst:.2e} (tol 1e-12), {elapsed:.2}s (< 5s)"),
    );
}

// ---------------------------------------------------------------------------
// criterion 3: second-order temporal convergence of the two-stage scheme

#[test]
fn c03_eifg2_temporal_order() {
    let _gate = exclusive();
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let v = validated(&format!(
        r#"{{"problem":"example1","scheme":"eifg2","grid":[32,32,32],"t_final":1.0,
            "n_steps":[4,8,16,32],"reference":"exact","output_dir":"{}"}}"#,
        dir.path().display()
    ));
    let report = cmd_converge(&v, 1).unwrap();
    let steps: Vec<usize> = report.table.records.iter().map(|r| r.n_steps).collect();
    let e1: Vec<f64> = report.table.records.iter().map(|r| r.errors[1]).collect();
    let slope = ls_slope(&e1, &steps, 1.0);
    let (in_time, elapsed) = within_budget(started, 120.0);
    verdict(
        3,
        "EIFG2 temporal order",
        (slope - 2.0).abs() <= 0.25 && in_time,
        format!("H1 LS slope {slope:.3} (want 2.0 +- 0.25), {elapsed:.1}s (< 120s)"),
    );
}

// ---------------------------------------------------------------------------
// criterion 4: third-order temporal convergence of the four-stage scheme
//
// Note: the four-stage tableau has stiff order three but classical order
// four; at this configuration's mild stiffness it converges at its classical
// order (the cited experiments themselves report pairwise rates up to 4.11).
// The stated window is asserted as written.

#[test]
fn c04_eifg3_temporal_order() {
    let _gate = exclusive();
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let v = validated(&format!(
        r#"{{"problem":"burgers","params":{{"epsilon":0.1}},"scheme":"eifg3",
            "grid":[128,4,4],"t_final":2.0,"n_steps":[2,4,8,16],"reference":"exact",
            "output_dir":"{}"}}"#,
        dir.path().display()
    ));
    let report = cmd_converge(&v, 1).unwrap();
    let steps: Vec<usize> = report.table.records.iter().map(|r| r.n_steps).collect();
    let e2: Vec<f64> = report.table.records.iter().map(|r| r.errors[2]).collect();
    let slope = ls_slope(&e2, &steps, 2.0);
    let (in_time, elapsed) = within_budget(started, 120.0);
    verdict(
        4,
        "EIFG3 temporal order",
        (slope - 3.0).abs() <= 0.5 && in_time,
        format!(
            "H2 LS slope {slope:.3} (window 3.0 +- 0.5; scheme's classical order is 4, \
             stiff-regime order 3 is verified separately), {elapsed:.1}s (< 120s)"
        ),
    );
}

// ---------------------------------------------------------------------------
// criterion 5: fourth-order spatial accuracy on the manufactured problem

#[test]
fn c05_eifg2_spatial_accuracy() {
    let _gate = exclusive();
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let v = validated(&format!(
        r#"{{"problem":"example1","scheme":"eifg2",
            "grid":[[8,8,8],[16,16,16],[32,32,32]],"t_final":1.0,"n_steps":1024,
            "reference":"exact","output_dir":"{}"}}"#,
        dir.path().display()
    ));
    let report = cmd_converge(&v, 1).unwrap();
    let r1 = report.table.rates[1][0];
    let r2 = report.table.rates[2][0];
    let ok = matches!((r1, r2), (Some(a), Some(b)) if a >= 4.0 && b >= 4.0);
    let (in_time, elapsed) = within_budget(started, 180.0);
    verdict(
        5,
        "EIFG2 spatial accuracy",
        ok && in_time,
        format!(
            "L2 rates 8->16: {:?}, 16->32: {:?} (want >= 4.0 each), {elapsed:.1}s (< 180s)",
            r1.map(|r| format!("{r:.2}")),
            r2.map(|r| format!("{r:.2}"))
        ),
    );
}

// ---------------------------------------------------------------------------
// criterion 6: Burgers exact-solution regression ceiling

#[test]
fn c06_burgers_regression() {
    let _gate = exclusive();
    let started = Instant::now();
    let problem = example_burgers(0.1, DealiasRule::None).unwrap();
    let grid = build_grid(problem.domain(), &[256, 4, 4]).unwrap();
    let u0 = problem.initial_field(&grid, None).unwrap();
    let tab = tableau(Scheme::Eifg3, 0.5).unwrap();
    let res = integrate(&u0, 2.0, 256, &tab, &problem, DealiasRule::None, &mut []).unwrap();
    let cmp_grid = build_grid(problem.domain(), &[512, 8, 8]).unwrap();
    let exact = problem.exact_field(&cmp_grid, 2.0).unwrap();
    let nodal = inverse(&prolong(&res.state.field, &cmp_grid).unwrap()).unwrap();
    let e0 = error_norms(&nodal, &exact).unwrap()[0];
    let (in_time, elapsed) = within_budget(started, 60.0);
    verdict(
        6,
        "Burgers regression",
        e0 <= 1e-6 && in_time,
        format!("final L2 error {e0:.3e} (ceiling 1e-6), {elapsed:.1}s (< 60s)"),
    );
}

// ---------------------------------------------------------------------------
// criterion 7: mean curvature flow interface shrinkage

#[test]
fn c07_mcf_radius() {
    let _gate = exclusive();
    let started = Instant::now();
    assert!((mcf_limit_radius(0.4, 2, 0.075) - 0.1).abs() < 1e-12);
    let dir = tempfile::tempdir().unwrap();
    let v = validated(&format!(
        r#"{{"problem":"mcf","params":{{"epsilon":0.075,"dims":2}},"scheme":"eifg2",
            "grid":[256,256],"t_final":0.075,"n_steps":256,"snapshot_stride":8,
            "output_dir":"{}"}}"#,
        dir.path().display()
    ));
    let report = cmd_simulate(&v).unwrap();
    let radii: Vec<f64> = report.rows.iter().map(|r| r.radius.unwrap()).collect();
    let monotone = radii.windows(2).all(|w| w[1] <= w[0]);
    let final_gap = (radii.last().unwrap() - 0.1f64).abs();
    let (in_time, elapsed) = within_budget(started, 120.0);
    verdict(
        7,
        "MCF interface radius",
        monotone && final_gap <= 0.05 && in_time,
        format!(
            "monotone={monotone} over {} strides, |R(T) - 0.1| = {final_gap:.4} (tol 0.05), \
             {elapsed:.1}s (< 120s)",
            radii.len()
        ),
    );
}

// ---------------------------------------------------------------------------
// criterion 8: Flory-Huggins bound and energy decay at desk scale

#[test]
fn c08_fh_structure() {
    let _gate = exclusive();
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let v = validated(&format!(
        r#"{{"problem":"fh","scheme":"eifg2","grid":[64,64,64],"t_final":5.0,
            "n_steps":2048,"seed":42,"snapshot_stride":64,"output_dir":"{}"}}"#,
        dir.path().display()
    ));
    let report = cmd_simulate(&v).unwrap();
    let sup_bound = 0.9575 + 0.01;
    let max_sup = report
        .rows
        .iter()
        .map(|r| r.sup_norm)
        .fold(0.0f64, f64::max);
    let energies: Vec<f64> = report.rows.iter().map(|r| r.energy.unwrap()).collect();
    let decaying = energies.windows(2).all(|w| w[1] <= w[0]);
    let (in_time, elapsed) = within_budget(started, 600.0);
    verdict(
        8,
        "Flory-Huggins structure",
        max_sup <= sup_bound && decaying && in_time,
        format!(
            "max sup {max_sup:.4} (bound {sup_bound}), energy nonincreasing={decaying} over {} \
             strides, {elapsed:.0}s (< 600s)",
            energies.len()
        ),
    );
}

// ---------------------------------------------------------------------------
// criterion 9: near-linear FFT cost scaling

#[test]
fn c09_fft_scaling() {
    let _gate = exclusive();
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let v = validated(&format!(
        r#"{{"problem":"example1","scheme":"eifg2",
            "grid":[[32,32,32],[64,64,64],[128,128,128]],"t_final":0.01,"n_steps":10,
            "output_dir":"{}"}}"#,
        dir.path().display()
    ));
    let report = cmd_bench(&v).unwrap();
    let factors: Vec<f64> = report.rows.iter().filter_map(|r| r.growth_factor).collect();
    let ok = factors.len() == 2 && factors.iter().all(|f| (0.85..=1.35).contains(f));
    let (in_time, elapsed) = within_budget(started, 600.0);
    verdict(
        9,
        "FFT cost scaling",
        ok && in_time,
        format!(
            "growth factors {:?} (window [0.85, 1.35]), sec/step {:?}, {elapsed:.1}s (< 600s)",
            factors
                .iter()
                .map(|f| format!("{f:.3}"))
                .collect::<Vec<_>>(),
            report
                .rows
                .iter()
                .map(|r| format!("{:.4}", r.seconds_per_step))
                .collect::<Vec<_>>()
        ),
    );
}

// ---------------------------------------------------------------------------
// criterion 10: property suite (identities the solver must satisfy exactly)

fn fd_second<F: Fn(f64) -> f64>(f: F, w: f64, h: f64) -> f64 {
    (-f(w + 2.0 * h) + 16.0 * f(w + h) - 30.0 * f(w) + 16.0 * f(w - h) - f(w - 2.0 * h))
        / (12.0 * h * h)
}

fn fd_first<F: Fn(f64) -> f64>(f: F, w: f64, h: f64) -> f64 {
    (-f(w + 2.0 * h) + 8.0 * f(w + h) - 8.0 * f(w - h) + f(w - 2.0 * h)) / (12.0 * h)
}

#[test]
fn c10_property_suites() {
    let _gate = exclusive();
    let started = Instant::now();
    let mut failures: Vec<String> = Vec::new();

    // Parseval identity and round trip on a seeded random field
    {
        use rand::{Rng, SeedableRng};
        let dom = eifg_core::DomainSpec::new(&[(0.0, 2.0), (-0.5, 0.5)], 1.0).unwrap();
        let grid = build_grid(&dom, &[32, 16]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2718);
        let u = PhysicalField::new(
            grid.clone(),
            ArrayD::from_shape_fn(IxDyn(grid.sizes()), |_| rng.random::<f64>() - 0.5),
        )
        .unwrap();
        let u_hat = forward(&u).unwrap();
        let spectral =
            u_hat.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>() * grid.domain().volume();
        let nodal = u.values().iter().map(|v| v * v).sum::<f64>() * grid.cell_volume();
        if (spectral - nodal).abs() > 1e-12 * nodal {
            failures.push(format!("Parseval: {spectral} vs {nodal}"));
        }
        let back = inverse(&u_hat).unwrap();
        let scale = u.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let rt = u
            .values()
            .iter()
            .zip(back.values().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if rt > 1e-12 * scale {
            failures.push(format!("round trip: {rt:.3e}"));
        }
    }

    // tableau consistency sums
    for (scheme, c2) in [
        (Scheme::Eifg1, 0.5),
        (Scheme::Eifg2, 0.5),
        (Scheme::Eifg2, 1.0),
        (Scheme::Eifg3, 0.5),
    ] {
        let t = tableau(scheme, c2).unwrap();
        let b_sum: f64 = t.b().iter().map(|c| c.at_zero()).sum();
        if (b_sum - 1.0).abs() > 1e-14 {
            failures.push(format!("{scheme:?} sum b_i(0) = {b_sum}"));
        }
        for i in 1..t.stages() {
            let a_sum: f64 = t.a_row(i).iter().map(|c| c.at_zero()).sum();
            if (a_sum - t.nodes()[i]).abs() > 1e-14 {
                failures.push(format!("{scheme:?} stage {i} sum a_ij(0) = {a_sum}"));
            }
        }
    }

    // reaction oddness (bit-exact) and roots
    {
        let fh = example_fh(0.1, 0.8, 1.6).unwrap();
        let grid = build_grid(fh.domain(), &[8, 8, 8]).unwrap();
        let u = fh.initial_field(&grid, Some(31)).unwrap();
        let neg = PhysicalField::new(grid.clone(), u.values().mapv(|v| -v)).unwrap();
        let g_pos = eval_reaction(&fh, 0.0, &u, None).unwrap();
        let g_neg = eval_reaction(&fh, 0.0, &neg, None).unwrap();
        if !g_pos
            .values()
            .iter()
            .zip(g_neg.values().iter())
            .all(|(a, b)| *a == -*b)
        {
            failures.push("Flory-Huggins reaction is not exactly odd".into());
        }

        let mcf = example_mcf(0.1, 2).unwrap();
        let grid2 = build_grid(mcf.domain(), &[4, 4]).unwrap();
        for root in [-1.0, 0.0, 1.0] {
            let u = PhysicalField::from_fn(&grid2, |_| root);
            let g = eval_reaction(&mcf, 0.0, &u, None).unwrap();
            if !g.values().iter().all(|&v| v == 0.0) {
                failures.push(format!("MCF reaction not zero at u = {root}"));
            }
        }
    }

    // manufactured-solution residuals via finite-difference oracles
    {
        let p = example1();
        let grid = build_grid(p.domain(), &[32, 32, 32]).unwrap();
        let exact = |t: f64, x: &[f64]| p.exact_value(t, x).unwrap();
        for &t in &[0.0, 0.5, 1.0] {
            let u = p.exact_field(&grid, t).unwrap();
            let g = eval_reaction(&p, t, &u, None).unwrap();
            let mut worst = 0.0f64;
            for i in (0..32).step_by(4) {
                for j in (0..32).step_by(4) {
                    for k in (0..32).step_by(4) {
                        let (x, y, z) = (grid.nodes(0)[i], grid.nodes(1)[j], grid.nodes(2)[k]);
                        let ut = fd_first(|s| exact(s, &[x, y, z]), t, 1e-4);
                        let lap = fd_second(|w| exact(t, &[w, y, z]), x, 3e-4)
                            + fd_second(|w| exact(t, &[x, w, z]), y, 3e-4)
                            + fd_second(|w| exact(t, &[x, y, w]), z, 3e-4);
                        worst = worst.max((ut - lap - g.values()[[i, j, k]]).abs());
                    }
                }
            }
            if worst > 1e-8 {
                failures.push(format!(
                    "reaction-diffusion residual {worst:.2e} at t = {t}"
                ));
            }
        }

        let b = example_burgers(0.1, DealiasRule::None).unwrap();
        let bex = |t: f64, x: f64| b.exact_value(t, &[x, 0.0, 0.0]).unwrap();
        for &t in &[0.0, 1.0, 2.0] {
            let mut worst = 0.0f64;
            for i in 0..128 {
                let x = 2.0 * i as f64 / 128.0;
                let ut = fd_first(|s| bex(s, x), t, 1e-4);
                let lap = fd_second(|w| bex(t, w), x, 3e-4);
                let ux = fd_first(|w| bex(t, w), x, 3e-4);
                let r = ut - 0.1 * lap + bex(t, x) * ux;
                worst = worst.max(r.abs());
            }
            if worst > 1e-8 {
                failures.push(format!("Burgers residual {worst:.2e} at t = {t}"));
            }
        }
    }

    let (in_time, elapsed) = within_budget(started, 60.0);
    verdict(
        10,
        "property suites",
        failures.is_empty() && in_time,
        if failures.is_empty() {
            format!("Parseval, round trip, tableau sums, oddness/roots, residuals all green, {elapsed:.1}s (< 60s)")
        } else {
            failures.join("; ")
        },
    );
}
