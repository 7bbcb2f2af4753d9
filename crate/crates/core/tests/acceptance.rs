//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::HashSet;
use std::f64::consts::{PI, SQRT_2};
use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;

use qsynth::clifford::{
    apply_in_place, find_overlap_clifford, sign_pattern_overlap, CliffordDesc, ALPHA,
};
use qsynth::executors::{
    first_success_dense, prepare_inner, run_four_query, run_one_query, run_postselect,
    run_ten_query, substitution_bound, Evaluator, ExecutionReport, Output, RunOptions,
};
use qsynth::geometry::{cap_fraction, monte_carlo_cap, sphere_measure, GeometryQuery};
use qsynth::numerics::{
    haar_from_rng, haar_random_state, purify_rank1, random_real_state, trace_distance_mixed,
    DensityMatrix, PureState, C64,
};
use qsynth::rng::substream;
use qsynth::synthesis::{build_plan, derive_params, find_hash_matrix, hash_state_for, PlanMode};

const GRID_N: [usize; 3] = [2, 3, 4];
const GRID_EPS: [f64; 2] = [0.1, 0.01];
const TARGETS: usize = 20;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

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

fn targets(label: &str, n: usize, eps: f64, count: usize) -> Vec<(u64, PureState)> {
    (0..count)
        .map(|i| {
            let seed =
                qsynth::rng::derive_key(n as u64 * 1000 + (1.0 / eps) as u64, label, i as u64);
            (seed, haar_random_state(n, seed))
        })
        .collect()
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn pure(r: &ExecutionReport) -> Result<&PureState, String> {
    match &r.output {
        Output::Pure(p) => Ok(p),
        _ => Err(format!("{} did not return a state vector", r.algorithm)),
    }
}

// 1 - (1 - alpha^2)^{1/2} over alpha, with alpha = 0.35
fn gamma() -> f64 {
    (1.0 - (1.0 - 0.35f64 * 0.35).sqrt()) / 0.35
}

fn postselect_end_to_end() -> Outcome {
    let g = gamma();
    ensure!(g > 0.18 && (g - 0.1807).abs() < 1e-4, "gamma = {g}");
    let mut worst = 0.0f64;
    let mut slowest = 0.0f64;
    for n in GRID_N {
        for eps in GRID_EPS {
            for (seed, psi) in targets("postselect", n, eps, TARGETS) {
                let start = Instant::now();
                let (plan, oracle) =
                    prepare_inner(&psi, eps, &RunOptions::with_seed(seed)).map_err(err)?;
                let r = run_postselect(&plan, &oracle).map_err(err)?;
                let secs = start.elapsed().as_secs_f64();
                if n == 4 && eps == 0.01 {
                    slowest = slowest.max(secs);
                }
                ensure!(r.query_count == 1, "query_count {}", r.query_count);
                let phi = pure(&r)?.amps();
                ensure!(
                    phi.len() == 1 << (plan.params.t + n),
                    "output length {}",
                    phi.len()
                );
                // A = 0 block against gamma psi, the rest against a norm of sqrt(1 - gamma^2)
                let head: Vec<C64> = psi.amps().iter().map(|a| a * g).collect();
                let d0 = dist(&phi[..1 << n], &head);
                let rest = norm(&phi[1 << n..]);
                let e = (d0 * d0 + (rest - (1.0 - g * g).sqrt()).powi(2)).sqrt();
                let reported = r.error_2norm.ok_or("no error reported")?;
                ensure!(
                    (e - reported).abs() < 1e-10,
                    "reported {reported}, recomputed {e}"
                );
                ensure!(e <= eps, "n = {n}, eps = {eps}: error {e}");
                let amp = r.success_amplitude.ok_or("no amplitude")?;
                ensure!((amp - g).abs() <= eps, "success amplitude {amp}");
                worst = worst.max(e / eps);
            }
        }
    }
    ensure!(slowest < 120.0, "n = 4, eps = 0.01 took {slowest:.1} s");
    Ok(format!(
        "{} runs, max error/eps {worst:.2e}, slowest n=4 run {slowest:.2} s",
        6 * TARGETS
    ))
}

fn residual_decay() -> Outcome {
    let mut plans = 0;
    for n in GRID_N {
        for eps in GRID_EPS {
            let p = derive_params(n, eps).map_err(err)?;
            let bt = p.beta.powi(p.big_t as i32);
            ensure!(bt <= 0.01 * eps, "beta^T = {bt} at eps = {eps}");
            for (seed, psi) in targets("residual", n, eps, TARGETS) {
                let plan = build_plan(&psi, &p, PlanMode::Exact, seed).map_err(err)?;
                ensure!(plan.steps.len() == p.big_t, "{} steps", plan.steps.len());
                let mut eta = psi.amps().to_vec();
                let mut bk = 1.0;
                for k in 0..=p.big_t {
                    let r = norm(&eta);
                    ensure!(
                        r <= bk + 1e-12,
                        "n = {n}: residual {r} above beta^{k} = {bk}"
                    );
                    ensure!(
                        (r - plan.residual_norms[k]).abs() < 1e-10,
                        "plan residual {k} disagrees"
                    );
                    if k < p.big_t {
                        let s = &plan.steps[k];
                        let phi = s.state();
                        ensure!(
                            (s.coefficient - p.alpha * bk).abs() < 1e-15,
                            "coefficient {k}"
                        );
                        eta.iter_mut()
                            .zip(phi.amps())
                            .for_each(|(e, f)| *e -= f * s.coefficient);
                        bk *= p.beta;
                    }
                }
                plans += 1;
            }
        }
    }
    Ok(format!("{plans} plans, every step checked against beta^k"))
}

// sum_{k<s} (1-p)^k theta theta^dagger + (1-p)^s |0><0|
fn first_success_reference(theta: &[C64], s: usize) -> DensityMatrix {
    let d = theta.len();
    let n = d.trailing_zeros() as usize;
    let p: f64 = theta.iter().map(|a| a.norm_sqr()).sum();
    let q = 1.0 - p;
    let w: f64 = (0..s).map(|k| q.powi(k as i32)).sum();
    let mut m = qsynth::numerics::CMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            m.set(i, j, theta[i] * theta[j].conj() * w);
        }
    }
    m.set(0, 0, m.get(0, 0) + q.powi(s as i32));
    DensityMatrix::new(n, m).expect("square")
}

fn one_query() -> Outcome {
    let mut worst = 0.0f64;
    for n in GRID_N {
        for eps in GRID_EPS {
            for (seed, psi) in targets("one-query", n, eps, TARGETS) {
                let r = run_one_query(&psi, eps, &RunOptions::with_seed(seed)).map_err(err)?;
                let Output::Reduced(rho) = &r.output else {
                    return Err("no reduced output".into());
                };
                let td = trace_distance_mixed(rho, &psi.outer()).map_err(err)?;
                ensure!(r.query_count == 1, "query_count {}", r.query_count);
                ensure!(td <= eps, "n = {n}, eps = {eps}: td {td}");
                worst = worst.max(td / eps);
            }
        }
    }
    let mut cross = 0.0f64;
    for (seed, psi) in targets("one-query-dense", 2, 0.1, 5) {
        let opts = RunOptions {
            t_override: Some(2),
            s_override: Some(2),
            ..RunOptions::with_seed(seed)
        };
        let r = run_one_query(&psi, 0.1, &opts).map_err(err)?;
        let Output::Reduced(analytic) = &r.output else {
            return Err("no reduced output".into());
        };
        let (plan, oracle) = prepare_inner(&psi, 0.1 / 4.0, &opts).map_err(err)?;
        let copy = run_postselect(&plan, &oracle).map_err(err)?;
        let phi = pure(&copy)?.amps();
        let dense = first_success_dense(&[phi, phi], 2, 2).map_err(err)?;
        let reference = first_success_reference(&phi[..4], 2);
        let d = analytic
            .matrix()
            .max_abs_diff(dense.matrix())
            .max(reference.matrix().max_abs_diff(dense.matrix()));
        ensure!(d < 1e-9, "dense cross-check off by {d}");
        cross = cross.max(d);
    }
    Ok(format!(
        "max td/eps {worst:.2e}; dense s=2 agreement {cross:.1e}"
    ))
}

fn ten_query() -> Outcome {
    let mut worst = 0.0f64;
    for n in GRID_N {
        for eps in GRID_EPS {
            for (i, (seed, psi)) in targets("ten-query", n, eps, TARGETS)
                .into_iter()
                .enumerate()
            {
                let opts = RunOptions::with_seed(seed);
                let r = run_ten_query(&psi, eps, &opts).map_err(err)?;
                ensure!(r.query_count == 10, "query_count {}", r.query_count);
                let e = r.error_2norm.ok_or("no error")?;
                let bound = substitution_bound(10, eps / (9.0 * SQRT_2));
                ensure!(
                    e <= eps && e <= bound,
                    "n = {n}, eps = {eps}: error {e}, bound {bound}"
                );
                worst = worst.max(e / eps);
                if i < 3 {
                    let r = run_ten_query(
                        &psi,
                        eps,
                        &RunOptions {
                            ideal: true,
                            ..opts
                        },
                    )
                    .map_err(err)?;
                    let v = pure(&r)?.amps();
                    let d = (dist(&v[..1 << n], psi.amps()).powi(2) + norm(&v[1 << n..]).powi(2))
                        .sqrt();
                    ensure!(d < 1e-9, "ideal substitution off by {d}");
                }
            }
        }
    }
    Ok(format!(
        "max error/eps {worst:.2e}; ideal substitution exact"
    ))
}

fn four_query() -> Outcome {
    let mut worst = 0.0f64;
    let mut ideal_ratio = 0.0f64;
    for n in GRID_N {
        for eps in GRID_EPS {
            for (i, (seed, psi)) in targets("four-query", n, eps, 3).into_iter().enumerate() {
                let opts = RunOptions::with_seed(seed);
                let r = run_four_query(&psi, eps, Evaluator::Structured, &opts).map_err(err)?;
                ensure!(r.query_count == 4, "query_count {}", r.query_count);
                let e = r.error_2norm.ok_or("no error")?;
                ensure!(e <= eps, "n = {n}, eps = {eps}: error {e}");
                worst = worst.max(e / eps);
                if i == 0 {
                    let r = run_four_query(
                        &psi,
                        eps,
                        Evaluator::Structured,
                        &RunOptions {
                            ideal: true,
                            ..opts
                        },
                    )
                    .map_err(err)?;
                    let s = r.s.ok_or("no s")?;
                    let delta = (1.0 - gamma() * gamma()).sqrt();
                    let ds = delta.powi(s as i32);
                    let l7 = r.diagnostics["line7_distance"];
                    let fin = r.error_2norm.ok_or("no error")?;
                    // distances come from norms near 1, so their squares carry ~1e-14 of rounding
                    ensure!(
                        l7 <= ds + 1e-9,
                        "intermediate distance {l7} above delta^s = {ds}"
                    );
                    ensure!(fin <= 2.0 * ds + 1e-9, "final {fin} above 2 delta^s");
                    ideal_ratio = ideal_ratio.max(l7 / ds).max(fin / (2.0 * ds));
                }
            }
        }
    }
    let mut cross = 0.0f64;
    for (seed, psi) in targets("four-query-dense", 1, 0.1, 5) {
        let opts = RunOptions {
            t_override: Some(2),
            s_override: Some(2),
            ..RunOptions::with_seed(seed)
        };
        let r = run_four_query(&psi, 0.1, Evaluator::Dense, &opts).map_err(err)?;
        let d = r.diagnostics["structured_vs_dense"];
        ensure!(d < 1e-10, "structured vs dense {d}");
        cross = cross.max(d);
    }
    Ok(format!(
        "max error/eps {worst:.2e}; ideal distance/bound {ideal_ratio:.7}; dense s=2 agreement {cross:.1e}"
    ))
}

fn perturbed_robustness() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..TARGETS {
        let n = 1 + i % 4;
        let eps = [0.1, 0.01][i % 2];
        let p = derive_params(n, eps).map_err(err)?;
        let bt = p.beta.powi(p.big_t as i32);
        let bound = 2f64.powf(-(n as f64) / 2.0) * 0.01 * bt * bt;
        let mode = PlanMode::default_perturbed(&p, i as u64);
        let PlanMode::Perturbed { bound: b, .. } = mode else {
            return Err("not perturbed".into());
        };
        ensure!(
            (b - bound).abs() <= 1e-12 * bound,
            "perturbation bound {b} vs {bound}"
        );
        let psi = haar_random_state(n, 500 + i as u64);
        let plan = build_plan(&psi, &p, mode, i as u64).map_err(err)?;
        let r = plan.residual_t();
        ensure!(
            r < 1.7 * bt,
            "n = {n}: residual {r} not below 1.7 beta^T = {}",
            1.7 * bt
        );
        worst = worst.max(r / bt);
    }
    Ok(format!("{TARGETS} targets, max residual/beta^T {worst:.3}"))
}

fn hash_strategy() -> Outcome {
    let mut rng = substream(7, "acceptance-hash", 0);
    let mut min_ratio = f64::INFINITY;
    for i in 0..100 {
        let n = 1 + i % 10;
        let psi = random_real_state(n, &mut rng);
        let (h, mu) = hash_state_for(&psi, 1000, i as u64).map_err(err)?;
        let nrm = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let unit: Vec<f64> = psi.iter().map(|x| x / nrm).collect();
        let mut mags: Vec<f64> = unit.iter().map(|x| x.abs()).collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        let mu_ref = mags
            .iter()
            .enumerate()
            .map(|(j, m)| m * ((j + 1) as f64).sqrt())
            .fold(0.0, f64::max);
        ensure!((mu - mu_ref).abs() < 1e-12, "mu {mu} vs {mu_ref}");
        let h_n: f64 = (1..=1u64 << n).map(|j| 1.0 / j as f64).sum();
        ensure!(mu >= 1.0 / h_n.sqrt() - 1e-12, "mu {mu} below 1/sqrt(H)");
        let ov: f64 = h.amplitudes().iter().zip(&unit).map(|(a, b)| a * b).sum();
        ensure!(
            ov >= mu / (2.0 * SQRT_2) - 1e-12,
            "n = {n}: overlap {ov} below mu/(2 sqrt 2)"
        );
        min_ratio = min_ratio.min(ov / mu);
    }
    for i in 0..100u64 {
        let n = rng.random_range(1..=12usize);
        let k = rng.random_range(0..=n.min(8));
        let s: Vec<u64> = sample(&mut rng, 1 << n, 1 << k)
            .into_iter()
            .map(|x| x as u64)
            .collect();
        let a = find_hash_matrix(&s, k, n, 200, i).map_err(err)?;
        let image: HashSet<u64> = s
            .iter()
            .map(|&x| a.apply_to_index(x))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        ensure!(
            k == 0 || 2 * image.len() > 1 << k,
            "n = {n}, k = {k}: image {}",
            image.len()
        );
    }
    Ok(format!(
        "min overlap/mu {min_ratio:.3}; 100 hash matrices verified by enumeration"
    ))
}

// 2^{-n/2} sum_x |Re <eta|C|x>|, columns built by applying C to each basis vector
fn overlap_by_columns(eta: &[C64], d: &CliffordDesc) -> f64 {
    let dim = eta.len();
    let mut total = 0.0;
    for x in 0..dim {
        let mut col = vec![C64::new(0.0, 0.0); dim];
        col[x] = C64::new(1.0, 0.0);
        apply_in_place(d, &mut col);
        let w: C64 = eta.iter().zip(&col).map(|(e, c)| e.conj() * c).sum();
        total += w.re.abs();
    }
    total / (dim as f64).sqrt()
}

fn clifford_frequency() -> Outcome {
    let mut lowest = f64::INFINITY;
    for n in GRID_N {
        for j in 0..20u64 {
            let mut rng = substream(11, "acceptance-clifford", n as u64 * 100 + j);
            let eta = haar_from_rng(n, &mut rng);
            let mut hits = 0;
            for trial in 0..10_000 {
                let d = CliffordDesc::random(n, &mut rng);
                let ov = sign_pattern_overlap(eta.amps(), &d);
                if trial < 50 {
                    let r = overlap_by_columns(eta.amps(), &d);
                    ensure!((ov - r).abs() < 1e-12, "overlap {ov} vs column sum {r}");
                }
                if ov >= ALPHA {
                    hits += 1;
                }
            }
            let f = hits as f64 / 10_000.0;
            ensure!(f >= 0.01, "n = {n}: frequency {f}");
            lowest = lowest.min(f);
            let (d, ov) = find_overlap_clifford(&eta, ALPHA, 1000, j).map_err(err)?;
            let check = overlap_by_columns(eta.amps(), &d);
            ensure!(
                ov >= ALPHA && check >= ALPHA && (check - ov).abs() < 1e-12,
                "certificate {ov} re-verified as {check}"
            );
        }
    }
    Ok(format!(
        "lowest frequency {lowest:.4}; 60 certificates re-verified"
    ))
}

fn geometry() -> Outcome {
    let mut worst = 0.0f64;
    let mut slowest = 0.0f64;
    for n in [1, 2] {
        for eps in [0.3, 0.5, 0.8] {
            let q = GeometryQuery::new(n, eps).map_err(err)?;
            let m = 2 << n;
            let p = eps.powi(m - 2);
            ensure!((cap_fraction(&q) - p).abs() < 1e-15, "cap fraction");
            let trials = 1_000_000;
            let start = Instant::now();
            let est = monte_carlo_cap(&q, trials, 42).map_err(err)?;
            let secs = start.elapsed().as_secs_f64();
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            ensure!(
                (est - p).abs() <= 4.0 * sigma,
                "n = {n}, eps = {eps}: {est} vs {p}"
            );
            ensure!(secs < 30.0, "{secs:.1} s");
            worst = worst.max((est - p).abs() / sigma);
            slowest = slowest.max(secs);
        }
    }
    for (d, want) in [2.0, 2.0 * PI, 4.0 * PI, 2.0 * PI * PI]
        .into_iter()
        .enumerate()
    {
        ensure!((sphere_measure(d) - want).abs() < 1e-12, "measure of S_{d}");
    }
    Ok(format!(
        "max deviation {worst:.2} sigma, slowest {slowest:.2} s"
    ))
}

fn purification() -> Outcome {
    let delta = 1e-10;
    let mut rng = substream(13, "acceptance-purify", 0);
    let mut worst = 0.0f64;
    for i in 0..40 {
        let n = 1 + i % 4;
        let d = 1usize << n;
        let psi = haar_from_rng(n, &mut rng);
        let rho = psi.outer();
        let noisy = rho.map_entries(|_, _, v| {
            v + C64::from_polar(delta * rng.random::<f64>(), rng.random_range(0.0..2.0 * PI))
        });
        let out = purify_rank1(&noisy, delta).map_err(err)?;
        let y = (0..d)
            .find(|&y| noisy.get(y, y).re >= 0.75 / d as f64)
            .ok_or("no column")?;
        let bound = 2.0 * delta.sqrt() / (0.125 / (d * d) as f64).sqrt();
        let scale = rho.get(y, y).re.sqrt();
        for x in 0..d {
            let e = (out.amps()[x] - rho.get(x, y) / scale).norm();
            ensure!(e <= bound, "n = {n}: entry error {e} above {bound}");
            worst = worst.max(e / bound);
        }
    }
    Ok(format!("40 inputs, max entry error/bound {worst:.2e}"))
}

fn property_suites() -> Outcome {
    let start = Instant::now();
    let report = qsynth::verify::run_all(200, 0);
    let secs = start.elapsed().as_secs_f64();
    let failed: Vec<String> = report
        .suites
        .iter()
        .filter(|s| !s.passed())
        .map(|s| {
            format!(
                "{}: {}",
                s.name,
                s.failures.first().cloned().unwrap_or_default()
            )
        })
        .collect();
    ensure!(failed.is_empty(), "{}", failed.join("; "));
    ensure!(secs < 600.0, "{secs:.0} s");
    Ok(format!(
        "{} suites x 200 instances in {secs:.1} s",
        report.suites.len()
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("postselected circuit end to end", postselect_end_to_end),
        ("residual decay", residual_decay),
        ("one-query mixed output", one_query),
        ("ten-query amplification", ten_query),
        ("four-query amplification", four_query),
        ("perturbed amplitudes", perturbed_robustness),
        ("hash strategy", hash_strategy),
        ("Clifford overlap frequency", clifford_frequency),
        ("sphere caps and measures", geometry),
        ("rank-one purification", purification),
        ("randomized property suites", property_suites),
    ];
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if filter.as_ref().is_some_and(|f| !name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1} s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.1} s]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
