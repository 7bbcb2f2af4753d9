//! Randomized invariant suites for every module, run by `qsynth verify`.
//!
//! Each suite draws instance `i` from the substream `(seed, suite name, i)`,
//! so a failure is reproducible from the seed and the index alone.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cli::config::{run_config, ExperimentConfig};
use crate::clifford::{
    self, apply_in_place, apply_inverse_in_place, sign_pattern_overlap, to_matrix, CliffordDesc,
};
use crate::executors::{
    first_success_dense, first_success_mixture, run_four_query, run_one_query, run_postselect,
    run_ten_query, substitution_bound, Evaluator, RunOptions,
};
use crate::f2linalg::F2Matrix;
use crate::geometry::{
    binomial_sigma, cap_fraction, coverage_deficit, monte_carlo_cap, sphere_measure,
    sphere_measure_monte_carlo, GeometryQuery,
};
use crate::numerics::{
    diff_norm, haar_from_rng, norm2, partial_trace_keep_first, purify_error_bound, purify_rank1,
    trace_distance_mixed, trace_distance_pure, CMatrix, DensityMatrix, PureState, C64,
};
use crate::rng::substream;
use crate::synthesis::{
    build_plan, derive_hash_params, derive_params, plan_to_oracle, PlanMode, StepPayload,
};

type Check = fn(&mut ChaCha8Rng, usize) -> Result<(), String>;

#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub name: String,
    pub instances: usize,
    pub failures: Vec<String>,
    pub elapsed_ms: u128,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn random_mixed(n: usize, rng: &mut ChaCha8Rng) -> Result<DensityMatrix, String> {
    let k = rng.random_range(1..=3);
    let states: Vec<PureState> = (0..k).map(|_| haar_from_rng(n, rng)).collect();
    let mut w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    let terms: Vec<(f64, &[C64])> = w.iter().zip(&states).map(|(&w, s)| (w, s.amps())).collect();
    DensityMatrix::mixture(n, &terms).map_err(err)
}

// numerics

fn td_pure_vs_norm(rng: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let n = rng.random_range(1..=4);
    let (a, b) = (haar_from_rng(n, rng), haar_from_rng(n, rng));
    let td = trace_distance_pure(&a, &b).map_err(err)?;
    ensure!(
        td <= diff_norm(a.amps(), b.amps()) + 1e-9,
        "td {td} above 2-norm distance"
    );
    Ok(())
}

fn td_mixed_vs_fidelity(rng: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let n = rng.random_range(1..=3);
    let rho = random_mixed(n, rng)?;
    let psi = haar_from_rng(n, rng);
    let td = trace_distance_mixed(&rho, &psi.outer()).map_err(err)?;
    let bound = (1.0 - rho.expectation(&psi).map_err(err)?).max(0.0).sqrt();
    ensure!(
        td <= bound + 1e-8,
        "td {td} above sqrt(tr(rho(I - psi))) = {bound}"
    );
    Ok(())
}

fn td_metric(rng: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let n = rng.random_range(1..=3);
    let (a, b, c) = (
        random_mixed(n, rng)?,
        random_mixed(n, rng)?,
        random_mixed(n, rng)?,
    );
    let ab = trace_distance_mixed(&a, &b).map_err(err)?;
    let ba = trace_distance_mixed(&b, &a).map_err(err)?;
    let ac = trace_distance_mixed(&a, &c).map_err(err)?;
    let cb = trace_distance_mixed(&c, &b).map_err(err)?;
    ensure!((ab - ba).abs() < 1e-12, "asymmetric: {ab} vs {ba}");
    ensure!(
        ab <= ac + cb + 1e-8,
        "triangle violated: {ab} > {ac} + {cb}"
    );
    Ok(())
}

fn partial_trace_full(rng: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let n = rng.random_range(1..=4);
    let v = haar_from_rng(n, rng);
    let r = partial_trace_keep_first(&v, n).map_err(err)?;
    let d = r.matrix().max_abs_diff(v.outer().matrix());
    ensure!(d < 1e-12, "differs from outer product by {d}");
    Ok(())
}

fn purify_exact(rng: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let n = rng.random_range(1..=4);
    let rho = haar_from_rng(n, rng).outer();
    let out = purify_rank1(&rho, 0.0).map_err(err)?;
    let d = out.outer().matrix().max_abs_diff(rho.matrix());
    ensure!(d < 1e-9, "outer product off by {d}");
    Ok(())
}

fn purify_perturbed(rng: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let n = rng.random_range(1..=4);
    let delta = 1e-10;
    let rho = haar_from_rng(n, rng).outer();
    let exact = purify_rank1(&rho, 0.0).map_err(err)?;
    let noise: Vec<C64> = (0..rho.dim() * rho.dim())
        .map(|_| {
            C64::from_polar(
                delta * rng.random::<f64>(),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let d = rho.dim();
    let pert = rho.map_entries(|i, j, v| v + noise[i * d + j]);
    let out = purify_rank1(&pert, delta).map_err(err)?;
    let bound = purify_error_bound(n, delta);
    let worst = exact
        .amps()
        .iter()
        .zip(out.amps())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    ensure!(worst <= bound, "entry error {worst} above bound {bound}");
    Ok(())
}

// f2linalg

fn rank_row_shuffle(rng: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let (r, c) = (rng.random_range(1..=16), rng.random_range(1..=16));
    let m = F2Matrix::random(r, c, rng);
    let mut order: Vec<usize> = (0..r).collect();
    order.shuffle(rng);
    let mut p = F2Matrix::zeros(r, c);
    for (i, &src) in order.iter().enumerate() {
        for j in 0..c {
            p.set(i, j, m.get(src, j));
        }
    }
    ensure!(
        m.rank() == p.rank(),
        "rank {} vs {} after shuffle",
        m.rank(),
        p.rank()
    );
    Ok(())
}

fn mul_composes(rng: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let (a_rows, inner, b_cols) = (
        rng.random_range(1..=20),
        rng.random_range(1..=20),
        rng.random_range(1..=20),
    );
    let a = F2Matrix::random(a_rows, inner, rng);
    let b = F2Matrix::random(inner, b_cols, rng);
    let ab = a.mul(&b).map_err(err)?;
    let x = rng.random::<u64>() & ((1u64 << b_cols) - 1);
    let lhs = ab.apply_to_index(x).map_err(err)?;
    let rhs = a
        .apply_to_index(b.apply_to_index(x).map_err(err)?)
        .map_err(err)?;
    ensure!(lhs == rhs, "(AB)x = {lhs} but A(Bx) = {rhs}");
    Ok(())
}

fn invertible_density(rng: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let n = rng.random_range(1..=24);
    let draws = 64;
    let ok = (0..draws)
        .filter(|_| F2Matrix::random(n, n, rng).rank() == n)
        .count();
    // |GL_n(F2)| / 2^{n²} > 0.288; 64 draws fall below 1/8 with negligible probability
    ensure!(
        ok * 8 >= draws,
        "only {ok}/{draws} random {n}x{n} matrices invertible"
    );
    let m = F2Matrix::random_invertible(n, rng);
    ensure!(
        m.rank() == n,
        "random_invertible returned rank {}",
        m.rank()
    );
    Ok(())
}

// clifford

fn clifford_norm_and_inverse(rng: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let n = rng.random_range(1..=6);
    let d = CliffordDesc::random(n, rng);
    let v = haar_from_rng(n, rng).into_amps();
    let mut w = v.clone();
    apply_in_place(&d, &mut w);
    ensure!(
        (norm2(&w) - 1.0).abs() < 1e-10,
        "norm drifted to {}",
        norm2(&w)
    );
    apply_inverse_in_place(&d, &mut w);
    let e = diff_norm(&v, &w);
    ensure!(e < 1e-10, "inverse misses by {e}");
    Ok(())
}

fn clifford_matrix_unitary(rng: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let n = rng.random_range(1..=2);
    let u = to_matrix(&CliffordDesc::random(n, rng)).map_err(err)?;
    let e = u.mul(&u.adjoint()).max_abs_diff(&CMatrix::identity(1 << n));
    ensure!(e < 1e-12, "U U^dagger off identity by {e}");
    Ok(())
}

fn clifford_overlap_frequency(rng: &mut ChaCha8Rng, i: usize) -> Result<(), String> {
    let n = 2 + i % 3;
    let eta = haar_from_rng(n, rng);
    let draws = 2_000;
    let hits = (0..draws)
        .filter(|_| {
            sign_pattern_overlap(eta.amps(), &CliffordDesc::random(n, rng)) >= clifford::ALPHA
        })
        .count();
    ensure!(
        hits as f64 >= 0.01 * draws as f64,
        "frequency {hits}/{draws} below 0.01 at n = {n}"
    );
    let (d, ov) =
        clifford::find_overlap_clifford(&eta, clifford::ALPHA, 1000, rng.random()).map_err(err)?;
    let again = sign_pattern_overlap(eta.amps(), &d);
    ensure!(
        ov >= clifford::ALPHA && (again - ov).abs() < 1e-12,
        "certificate {ov} re-verified as {again}"
    );
    Ok(())
}

// synthesis

fn random_epsilon(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.02..0.45)
}

fn exact_recursion(rng: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let n = rng.random_range(1..=3);
    let p = derive_params(n, random_epsilon(rng)).map_err(err)?;
    ensure!(
        p.beta_t() <= 0.01 * p.epsilon,
        "beta^T = {} above 0.01 eps",
        p.beta_t()
    );
    let psi = haar_from_rng(n, rng);
    let plan = build_plan(&psi, &p, PlanMode::Exact, rng.random()).map_err(err)?;
    let (a, b) = (p.alpha, p.beta);
    let mut bk = 1.0;
    for k in 0..plan.steps.len() {
        let (r, next) = (plan.residual_norms[k], plan.residual_norms[k + 1]);
        ensure!(r <= bk + 1e-12, "residual {r} above beta^{k} = {bk}");
        ensure!(
            next * next <= r * r - 2.0 * a * a * bk * r + a * a * bk * bk + 1e-12,
            "recursion fails at step {k}"
        );
        bk *= b;
    }
    ensure!(
        plan.residual_t() <= bk + 1e-12,
        "final residual above beta^T"
    );
    Ok(())
}

fn perturbed_residual(rng: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let n = rng.random_range(1..=3);
    let p = derive_params(n, random_epsilon(rng)).map_err(err)?;
    let psi = haar_from_rng(n, rng);
    let plan = build_plan(
        &psi,
        &p,
        PlanMode::default_perturbed(&p, rng.random()),
        rng.random(),
    )
    .map_err(err)?;
    ensure!(
        plan.residual_t() < 1.7 * p.beta_t(),
        "perturbed residual {} not below 1.7 beta^T",
        plan.residual_t()
    );
    Ok(())
}

fn oracle_determinism(rng: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let n = rng.random_range(1..=3);
    let p = derive_params(n, 0.25).map_err(err)?;
    let psi = haar_from_rng(n, rng);
    let seed = rng.random();
    let a = plan_to_oracle(&build_plan(&psi, &p, PlanMode::Exact, seed).map_err(err)?);
    let b = plan_to_oracle(&build_plan(&psi, &p, PlanMode::Exact, seed).map_err(err)?);
    ensure!(
        a.to_bytes() == b.to_bytes(),
        "equal plans gave different oracle bytes"
    );
    let w = a.total_input_bits();
    for _ in 0..32 {
        let x = rng.random::<u64>() & ((1u64 << w) - 1);
        ensure!(
            a.query(x).map_err(err)? == a.query(x).map_err(err)?,
            "query {x} not repeatable"
        );
    }
    Ok(())
}

fn hash_invariants(rng: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let n = rng.random_range(1..=4);
    let p = derive_hash_params(n, rng.random_range(0.1..0.45)).map_err(err)?;
    let psi = haar_from_rng(n, rng);
    let plan = build_plan(&psi, &p, PlanMode::Exact, rng.random()).map_err(err)?;
    for (k, s) in plan.steps.iter().enumerate() {
        if let StepPayload::Hash(h) = &s.payload {
            ensure!(
                h.is_injective(),
                "step {k}: hash matrix not injective on its support"
            );
        }
        let (r, next) = (plan.residual_norms[k], plan.residual_norms[k + 1]);
        if r == 0.0 {
            continue;
        }
        ensure!(
            s.overlap >= p.alpha - 1e-12,
            "step {k}: overlap {} below {}",
            s.overlap,
            p.alpha
        );
        let c = s.coefficient;
        let bound = r * r - 2.0 * c * s.overlap * r + c * c;
        ensure!(
            (next * next - bound).abs() < 1e-10,
            "step {k}: residual recursion off"
        );
    }
    Ok(())
}

// executors

fn tiny_opts(rng: &mut ChaCha8Rng) -> RunOptions {
    RunOptions {
        t_override: Some(2),
        s_override: Some(2),
        ..RunOptions::with_seed(rng.random())
    }
}

fn executor_norms_and_counts(rng: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let psi = haar_from_rng(1, rng);
    let mut opts = tiny_opts(rng);
    opts.ideal = rng.random();
    let r = run_four_query(&psi, 0.2, Evaluator::Dense, &opts).map_err(err)?;
    ensure!(
        r.query_count == 4,
        "four-query made {} queries",
        r.query_count
    );
    ensure!(
        r.diagnostics["norm_drift"] < 1e-9,
        "four-query norm drift {}",
        r.diagnostics["norm_drift"]
    );
    ensure!(
        r.diagnostics["structured_vs_dense"] < 1e-10,
        "branch expansion differs by {}",
        r.diagnostics["structured_vs_dense"]
    );
    let r = run_ten_query(&psi, 0.2, &opts).map_err(err)?;
    ensure!(
        r.query_count == 10,
        "ten-query made {} queries",
        r.query_count
    );
    ensure!(
        r.diagnostics["norm_drift"] < 1e-9,
        "ten-query norm drift {}",
        r.diagnostics["norm_drift"]
    );
    let r = run_one_query(&psi, 0.2, &opts).map_err(err)?;
    ensure!(
        r.query_count == 1 && (r.diagnostics["trace"] - 1.0).abs() < 1e-9,
        "one-query count or trace off"
    );
    let p = derive_params(1, 0.2).map_err(err)?.with_t(2).map_err(err)?;
    let plan = build_plan(&psi, &p, PlanMode::Exact, rng.random()).map_err(err)?;
    let r = run_postselect(&plan, &plan_to_oracle(&plan)).map_err(err)?;
    ensure!(
        r.query_count == 1 && (r.diagnostics["state_norm"] - 1.0).abs() < 1e-9,
        "postselect count or norm off"
    );
    Ok(())
}

fn first_success_order(rng: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let s = rng.random_range(2..=3);
    let winner = rng.random_range(0..s);
    let copies: Vec<Vec<C64>> = (0..s)
        .map(|k| {
            let mut v = haar_from_rng(2, rng).into_amps();
            if k != winner {
                v[..2].iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
                let nrm = norm2(&v);
                v.iter_mut().for_each(|a| *a /= nrm);
            }
            v
        })
        .collect();
    let refs: Vec<&[C64]> = copies.iter().map(|c| c.as_slice()).collect();
    let mut shuffled = refs.clone();
    shuffled.shuffle(rng);
    let a = first_success_mixture(&refs, 1).map_err(err)?;
    let b = first_success_dense(&shuffled, 1, 1).map_err(err)?;
    let d = a.matrix().max_abs_diff(b.matrix());
    ensure!(d < 1e-10, "selection changed by {d} under copy reordering");
    Ok(())
}

fn substitution_bounds(rng: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let n = rng.random_range(1..=2);
    let psi = haar_from_rng(n, rng);
    let opts = RunOptions {
        t_override: Some(rng.random_range(2..=4)),
        ..RunOptions::with_seed(rng.random())
    };
    let r = run_ten_query(&psi, 0.2, &opts).map_err(err)?;
    let e = r.error_2norm.unwrap_or(f64::NAN);
    let bound = substitution_bound(10, r.diagnostics["prep_deviation"]);
    ensure!(e <= bound + 1e-9, "ten-query error {e} above {bound}");
    let opts = RunOptions {
        s_override: Some(2),
        ..opts
    };
    let r = run_four_query(&psi, 0.2, Evaluator::Structured, &opts).map_err(err)?;
    let e = r.error_2norm.unwrap_or(f64::NAN);
    let bound = 2.0 * r.diagnostics["delta_s"] + r.diagnostics["substitution_bound"];
    ensure!(e <= bound + 1e-9, "four-query error {e} above {bound}");
    Ok(())
}

// geometry

fn cap_monte_carlo(rng: &mut ChaCha8Rng, i: usize) -> Result<(), String> {
    let grid = [(1, 0.3), (1, 0.5), (1, 0.8), (2, 0.3), (2, 0.5), (2, 0.8)];
    let (n, eps) = grid[i % grid.len()];
    let q = GeometryQuery::new(n, eps).map_err(err)?;
    let trials = 20_000;
    let p = cap_fraction(&q);
    let est = monte_carlo_cap(&q, trials, rng.random()).map_err(err)?;
    // a floor of 1/trials keeps the tiny caps from demanding zero hits
    let tol = 4.0 * binomial_sigma(p, trials).max(1.0 / trials as f64);
    ensure!((est - p).abs() <= tol, "n = {n}, eps = {eps}: {est} vs {p}");
    Ok(())
}

fn sphere_measure_sampling(rng: &mut ChaCha8Rng, i: usize) -> Result<(), String> {
    let d = i % 6;
    let est = sphere_measure_monte_carlo(d, 2_000_000, rng.random());
    let exact = sphere_measure(d);
    ensure!(
        (est / exact - 1.0).abs() < 0.01,
        "d = {d}: {est} vs {exact}"
    );
    Ok(())
}

fn deficit_limits(rng: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let n = rng.random_range(2..=12);
    let eps = rng.random_range(0.01..0.25);
    let lo = coverage_deficit(n, eps, 0, 3, 3).map_err(err)?;
    let hi = coverage_deficit(n, eps, 1 << 40, 3, 3).map_err(err)?;
    let mid = coverage_deficit(n, eps, 1000, 3, 3).map_err(err)?;
    ensure!(
        lo < 0.0 && hi > 0.0 && lo < mid && mid < hi,
        "limits {lo}, {mid}, {hi}"
    );
    Ok(())
}

// cli

fn config_round_trip(rng: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let algorithms = ["postselect", "one-query", "ten-query", "four-query"];
    let text = format!(
        r#"{{"n": {}, "epsilon": {}, "algorithm": "{}", "target": {{"haar": {{"seed": {}}}}}, "seed": {}, "overrides": {{"t": 2, "s": 2}}}}"#,
        rng.random_range(1..=2),
        rng.random_range(0.05..0.45),
        algorithms[rng.random_range(0..4)],
        rng.random::<u32>(),
        rng.random::<u32>()
    );
    let a = ExperimentConfig::from_json(&text).map_err(err)?;
    let b = ExperimentConfig::from_json(&a.to_json()).map_err(err)?;
    ensure!(a == b, "config changed on round trip");
    let (ra, rb) = (run_config(&a).map_err(err)?, run_config(&b).map_err(err)?);
    let key = |r: &crate::executors::ExecutionReport| {
        (
            r.error_2norm.map(f64::to_bits),
            r.error_trace.map(f64::to_bits),
            r.success_amplitude.map(f64::to_bits),
            r.residual_t.to_bits(),
        )
    };
    ensure!(key(&ra.report) == key(&rb.report), "rerun differs");
    Ok(())
}

pub const SUITES: &[(&str, Check)] = &[
    ("numerics/trace-distance-pure", td_pure_vs_norm),
    ("numerics/trace-distance-fidelity", td_mixed_vs_fidelity),
    ("numerics/trace-distance-metric", td_metric),
    ("numerics/partial-trace", partial_trace_full),
    ("numerics/purify-exact", purify_exact),
    ("numerics/purify-perturbed", purify_perturbed),
    ("f2linalg/rank-row-shuffle", rank_row_shuffle),
    ("f2linalg/mul-composition", mul_composes),
    ("f2linalg/invertible-density", invertible_density),
    ("clifford/norm-and-inverse", clifford_norm_and_inverse),
    ("clifford/matrix-unitary", clifford_matrix_unitary),
    ("clifford/overlap-frequency", clifford_overlap_frequency),
    ("synthesis/exact-recursion", exact_recursion),
    ("synthesis/perturbed-residual", perturbed_residual),
    ("synthesis/oracle-determinism", oracle_determinism),
    ("synthesis/hash-invariants", hash_invariants),
    ("executors/norms-and-counts", executor_norms_and_counts),
    ("executors/first-success-order", first_success_order),
    ("executors/substitution-bounds", substitution_bounds),
    ("geometry/cap-monte-carlo", cap_monte_carlo),
    ("geometry/sphere-measure", sphere_measure_sampling),
    ("geometry/deficit-limits", deficit_limits),
    ("cli/config-round-trip", config_round_trip),
];

fn run_suite(name: &str, check: Check, instances: usize, seed: u64) -> SuiteResult {
    let start = Instant::now();
    let failures: Vec<String> = (0..instances)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = substream(seed, name, i as u64);
            check(&mut rng, i)
                .err()
                .map(|e| format!("instance {i}: {e}"))
        })
        .collect();
    SuiteResult {
        name: name.into(),
        instances,
        failures,
        elapsed_ms: start.elapsed().as_millis(),
    }
}

/// Runs the suites whose names contain `filter` (all when `None`).
pub fn run_selected(instances: usize, seed: u64, filter: Option<&str>) -> VerifyReport {
    let suites = SUITES
        .iter()
        .filter(|(name, _)| filter.is_none_or(|f| name.contains(f)))
        .map(|&(name, check)| run_suite(name, check, instances, seed))
        .collect();
    VerifyReport { suites }
}

pub fn run_all(instances: usize, seed: u64) -> VerifyReport {
    run_selected(instances, seed, None)
}
