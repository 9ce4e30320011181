//! Acceptance criteria 1 to 9. Prints one PASS/FAIL line per criterion.
//!
//! `cargo test --test acceptance -- 3 5` runs a subset. The process exits
//! non-zero on a failure only when `SHOTLEARN_ACCEPTANCE_STRICT=1`.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::Rng;
use shotlearn::experiment::{
    analytic_swap_tests, is_strict_subset, pool, run_grid, success_region, to_csv_string, ExperimentConfig, GridResult, Method,
    PooledCell,
};
use shotlearn::experiment::{log_log_slope, variance_point, Quantity};
use shotlearn::hilbert::{reduced_purity, sample_state, PureState, StateClass, Subsystem, C64};
use shotlearn::meanest::train;
use shotlearn::measurement::{Shots, SwapMode};
use shotlearn::oracle::{average_state, exact_delta, optimal_observable, sym_projector, twirl, DenseOperator};
use shotlearn::rng::RngStream;
use shotlearn::shadows::{
    build_shadow, calibrated_shadow_budget, collision_rates, overlap_from_shadows, shadow_budget, split_copies, DimensionSymbol,
    ShadowProtocol,
};

use StateClass::{Entangled as Ent, Separable as Sep};

type Criterion = (usize, &'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for d in [2usize, 3, 4, 8, 16, 32] {
        let f = d as f64;
        let closed = [
            (Sep, Sep, 4.0 / (f * f * (f + 1.0) * (f + 1.0))),
            (Ent, Ent, 2.0 / f.powi(4)),
            (Sep, Ent, 2.0 / (f.powi(3) * (f + 1.0))),
            (Ent, Sep, 2.0 / (f.powi(3) * (f + 1.0))),
        ];
        for (y, y2, want) in closed {
            worst = worst.max((exact_delta(y, y2, d) - want).abs());
        }
    }
    let mut worst_dense: f64 = 0.0;
    for d in [2usize, 3, 4] {
        let sep = average_state(Sep, 2, d).unwrap();
        let ent = average_state(Ent, 2, d).unwrap();
        for (a, b, y, y2) in [(&sep, &sep, Sep, Sep), (&ent, &ent, Ent, Ent), (&sep, &ent, Sep, Ent)] {
            worst_dense = worst_dense.max((a.trace_product(b).re - exact_delta(y, y2, d)).abs());
        }
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-12 && worst_dense <= 1e-10 && t < Duration::from_secs(10),
        format!(
            "closed forms max err {worst:.1e} (tol 1e-12), dense max err {worst_dense:.1e} (tol 1e-10), {t:.1?} (limit 10 s)"
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::new(2, 0);
    let mut worst: f64 = 0.0;
    for d in [2usize, 4, 8] {
        let a = optimal_observable(d).unwrap();
        for class in [Sep, Ent] {
            for _ in 0..1000 {
                let s = sample_state(class, d, &mut rng).unwrap();
                worst = worst.max((a.expectation_two_copy(&s).unwrap() - class.sign()).abs());
            }
        }
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-9 && t < Duration::from_secs(30),
        format!(
            "max |Tr[A* ψ⊗ψ] − y| = {worst:.1e} over 1000 states per class at d ∈ {{2,4,8}} (tol 1e-9), {t:.1?} (limit 30 s)"
        ),
    )
}

/// Probability of the `P₊` outcome on the two A halves, from the dense
/// projector.
fn p_plus_dense(s: &PureState) -> f64 {
    let d = s.local_dim();
    // ψ⊗ψ is ordered (A₁B₁A₂B₂); reorder to (A₁A₂B₁B₂).
    let psi = s.amplitudes();
    let mut v = vec![C64::new(0.0, 0.0); d.pow(4)];
    for a1 in 0..d {
        for b1 in 0..d {
            for a2 in 0..d {
                for b2 in 0..d {
                    v[((a1 * d + a2) * d + b1) * d + b2] = psi[a1 * d + b1] * psi[a2 * d + b2];
                }
            }
        }
    }
    sym_projector(d, 1.0).kron(&DenseOperator::identity(d * d)).expectation(&v).re
}

fn criterion_3() -> Outcome {
    let trials = 100_000u64;
    let mut rng = RngStream::new(3, 0);
    let mut parts = Vec::new();
    let mut passed = true;
    for d in [2usize, 4] {
        let mut consistency: f64 = 0.0;
        for class in [Sep, Ent] {
            for _ in 0..20 {
                let s = sample_state(class, d, &mut rng).unwrap();
                let p = 0.5 * (1.0 + reduced_purity(&s, Subsystem::A));
                consistency = consistency.max((p - p_plus_dense(&s)).abs());
            }
        }
        let mut correct = 0u64;
        for t in 0..trials {
            let class = if t % 2 == 0 { Sep } else { Ent };
            let s = sample_state(class, d, &mut rng).unwrap();
            let p_plus = 0.5 * (1.0 + reduced_purity(&s, Subsystem::A));
            let guess = if rng.random::<f64>() < p_plus { Sep } else { Ent };
            correct += u64::from(guess == class);
        }
        let emp = correct as f64 / trials as f64;
        let f = d as f64;
        let want = 0.75 - 1.0 / (4.0 * f);
        let se = (want * (1.0 - want) / trials as f64).sqrt();
        let ok = (emp - want).abs() <= 3.0 * se && consistency < 1e-10;
        passed &= ok;
        parts.push(format!("d={d}: {emp:.4} vs {want:.4} (3 se = {:.4}), P₊ dense check {consistency:.1e}", 3.0 * se));
    }
    outcome(passed, parts.join("; "))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let (n, s, trials) = (16usize, Shots::Finite(16), 10_000usize);
    let targets = [1.0 / 9.0, 1.0 / 8.0, 5.0 / 72.0, -5.0 / 72.0];
    let names = ["Δ̂++", "Δ̂−−", "B_obs(+)", "B_obs(−)"];
    let mut passed = true;
    let mut parts = Vec::new();
    for mode in [SwapMode::SingleCopy, SwapMode::TwoCopy] {
        let root = RngStream::new(4, mode as u64);
        let samples: Vec<[f64; 4]> = (0..trials)
            .map(|t| {
                let mut r = root.derive(t as u64);
                let sep: Vec<PureState> = (0..n).map(|_| sample_state(Sep, 2, &mut r).unwrap()).collect();
                let ent: Vec<PureState> = (0..n).map(|_| sample_state(Ent, 2, &mut r).unwrap()).collect();
                let model = train(&sep, &ent, s, mode, &r.derive(1)).unwrap();
                let tp = sample_state(Sep, 2, &mut r).unwrap();
                let tm = sample_state(Ent, 2, &mut r).unwrap();
                let mut sr = r.derive(2);
                let bp = model.score(&tp, s, &mut sr).unwrap().value;
                let bm = model.score(&tm, s, &mut sr).unwrap().value;
                [model.delta_pp_hat, model.delta_mm_hat, bp, bm]
            })
            .collect();
        let mut worst_z: f64 = 0.0;
        for k in 0..4 {
            let col: Vec<f64> = samples.iter().map(|x| x[k]).collect();
            let (m, v) = mean_var(&col);
            let z = (m - targets[k]).abs() / (v / trials as f64).sqrt();
            if z > 4.0 {
                parts.push(format!("{mode:?} {} mean {m:.5} vs {:.5} (z={z:.2})", names[k], targets[k]));
            }
            worst_z = worst_z.max(z);
        }
        passed &= worst_z <= 4.0;
        parts.push(format!("{mode:?} worst |z| = {worst_z:.2}"));
    }
    let t = start.elapsed();
    passed &= t < Duration::from_secs(300);
    parts.push(format!("{t:.1?} (limit 5 min)"));
    outcome(passed, format!("(N,S)=(16,16), d=2, 10⁴ trials, tol 4 se: {}", parts.join("; ")))
}

fn criterion_5() -> Outcome {
    let (d, trials, seed) = (4usize, 2000usize, 5u64);
    let two = SwapMode::TwoCopy;
    let point = |n: usize, s: u64, mode: SwapMode, t: usize| variance_point(d, n, Shots::Finite(s), mode, t, seed).unwrap();
    let fit = |xs: &[f64], rows: &[shotlearn::experiment::VarianceRow], q: Quantity| {
        let v: Vec<f64> = rows.iter().map(|r| r.get(q).var).collect();
        log_log_slope(xs, &v, trials).0
    };

    let ss = [16u64, 32, 64, 128, 256];
    let rows_s: Vec<_> = ss.iter().map(|&s| point(16, s, two, trials)).collect();
    let slope_s = fit(&ss.map(|s| s as f64), &rows_s, Quantity::Train);

    let ns = [16usize, 32, 64, 128];
    let rows_n: Vec<_> = ns.iter().map(|&n| point(n, 64, two, trials)).collect();
    let xs_n = ns.map(|n| n as f64);
    let slope_n = fit(&xs_n, &rows_n, Quantity::Train);
    let slope_test = fit(&xs_n, &rows_n, Quantity::Test);

    let single = point(16, 256, SwapMode::SingleCopy, 10_000);
    let double = point(16, 256, two, 10_000);
    let order = single.train.var < double.train.var && single.score.var < double.score.var;

    let ok_s = (slope_s + 1.0).abs() <= 0.15;
    let ok_n = (slope_n + 2.0).abs() <= 0.2;
    let ok_t = (slope_test + 1.0).abs() <= 0.15;
    outcome(
        ok_s && ok_n && ok_t && order,
        format!(
            "d=4 two-copy: train vs S {slope_s:.3} (−1 ± 0.15), train vs N {slope_n:.3} (−2 ± 0.2), test vs N {slope_test:.3} (−1 ± 0.15); \
             S=256 Var train single {:.2e} < two {:.2e}, Var B single {:.2e} < two {:.2e}",
            single.train.var, double.train.var, single.score.var, double.score.var
        ),
    )
}

fn pooled(g: &GridResult) -> BTreeMap<(usize, Shots, Method), PooledCell> {
    pool(&g.rows).into_iter().map(|c| ((c.n, c.s, c.method), c)).collect()
}

fn criterion_6() -> Outcome {
    let cfg = ExperimentConfig::from_json(
        r#"{"dims":[8],"Ns":[64,128,256,512,1024],"Ss":[64,16384],
            "methods":["svm_exact","svm_swap","meanest_single"],"trials":3,"base_seed":11}"#,
    )
    .unwrap();
    let g = run_grid(&cfg).unwrap();
    let cells = pooled(&g);
    let big = Shots::Finite(1 << 14);
    let small = Shots::Finite(64);
    let get = |n, s, m| cells.get(&(n, s, m)).expect("cell present");
    let within = |a: &PooledCell, b: &PooledCell| {
        (a.success_rate - b.success_rate).abs() <= 3.0 * (a.stderr * a.stderr + b.stderr * b.stderr).sqrt()
    };

    let mut parts = Vec::new();
    let exact_ok = cfg.ns.iter().filter(|&&n| n >= 256).all(|&n| get(n, big, Method::SvmExact).success_rate >= 0.99);
    let exact_line: Vec<String> =
        cfg.ns.iter().map(|&n| format!("N={n}:{:.3}", get(n, big, Method::SvmExact).success_rate)).collect();
    let first = cfg.ns.iter().find(|&&n| get(n, big, Method::SvmExact).success_rate >= 0.99);
    parts.push(format!(
        "[{}] svm_exact ≥ 0.99 for N ≥ 256 ({}; first N reaching 0.99: {})",
        if exact_ok { "ok" } else { "miss" },
        exact_line.join(" "),
        first.map_or("none".to_string(), |n| n.to_string())
    ));

    let swap_ok = cfg.ns.iter().all(|&n| within(get(n, big, Method::SvmSwap), get(n, big, Method::SvmExact)));
    parts.push(format!("[{}] svm_swap(S=2¹⁴) within 3 se of svm_exact at every N", if swap_ok { "ok" } else { "miss" }));

    let mean_ok = cfg.ns.iter().all(|&n| within(get(n, big, Method::MeanestSingle), get(n, big, Method::SvmSwap)));
    let mean_line: Vec<String> = cfg
        .ns
        .iter()
        .map(|&n| {
            format!(
                "N={n}:{:.3}/{:.3}",
                get(n, big, Method::MeanestSingle).success_rate,
                get(n, big, Method::SvmSwap).success_rate
            )
        })
        .collect();
    parts.push(format!(
        "[{}] meanest_single within 3 se of svm_swap at S=2¹⁴ ({})",
        if mean_ok { "ok" } else { "miss" },
        mean_line.join(" ")
    ));

    let noisy = get(256, small, Method::SvmSwap).success_rate;
    let exact = get(256, big, Method::SvmExact).success_rate;
    let gap_ok = exact - noisy >= 0.05;
    parts.push(format!(
        "[{}] S=64 svm_swap {noisy:.3} vs svm_exact {exact:.3} at N=256, gap ≥ 0.05",
        if gap_ok { "ok" } else { "miss" }
    ));
    outcome(exact_ok && swap_ok && mean_ok && gap_ok, format!("d=8, M=200, 3 trials: {}", parts.join("; ")))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig::from_json(
        r#"{"dims":[2,4,8],"Ns":[16,32,64,128,256,512,1024,2048,4096],
            "Ss":[16,32,64,128,256,512,1024,2048,4096],"methods":["svm_swap"],"trials":1,"base_seed":7}"#,
    )
    .unwrap();
    let g = run_grid(&cfg).unwrap();
    let region = success_region(&g.rows, cfg.success_threshold);
    let r2 = region.get(2, Method::SvmSwap);
    let r4 = region.get(4, Method::SvmSwap);
    let r8 = region.get(8, Method::SvmSwap);
    let ok = is_strict_subset(&r8, &r4) && is_strict_subset(&r4, &r2) && !r8.is_empty();
    outcome(
        ok,
        format!(
            "svm_swap 99% region sizes d=2:{} d=4:{} d=8:{} of 81 cells, d8 ⊊ d4 ⊊ d2, {:.0?}",
            r2.len(),
            r4.len(),
            r8.len(),
            start.elapsed()
        ),
    )
}

/// A state on `D = d²` with `|⟨a|b⟩|² = f` against `|00⟩`.
fn state_pair(d: usize, f: f64) -> (PureState, PureState) {
    let a = PureState::basis(d, 0, 0).unwrap();
    let mut amps = vec![C64::new(0.0, 0.0); d * d];
    amps[0] = C64::new(f.sqrt(), 0.0);
    amps[d * d - 1] = C64::new((1.0 - f).sqrt(), 0.0);
    (a, PureState::new(amps, d, None).unwrap())
}

fn criterion_8() -> Outcome {
    let mut parts = Vec::new();
    let mut passed = true;
    let mut rng = RngStream::new(8, 0);

    // Analytic: Σ_x ⟨xx| T²(|a⟩⟨a| ⊗ |b⟩⟨b|) |xx⟩.
    let dim = 4;
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let a = sample_state(Sep, 2, &mut rng).unwrap();
        let b = sample_state(Ent, 2, &mut rng).unwrap();
        let f = shotlearn::overlap(&a, &b).unwrap();
        let t = twirl(&DenseOperator::projector(&kron_vec(a.amplitudes(), b.amplitudes())), 2, dim).unwrap().materialize();
        let q: f64 = (0..dim).map(|x| t.entries()[(x * dim + x, x * dim + x)].re).sum();
        worst = worst.max((q - (1.0 + f) / (dim as f64 + 1.0)).abs());
    }
    passed &= worst < 1e-10;
    parts.push(format!("T² identity max err {worst:.1e}"));

    // Monte Carlo: mean per-unitary collision rate over fresh unitaries.
    let (a, b) = state_pair(2, 0.3);
    let protocol = ShadowProtocol::sample(dim, 20_000, &mut rng).unwrap();
    let sa = build_shadow(&a, &protocol, 4, &rng.derive(1)).unwrap();
    let sb = build_shadow(&b, &protocol, 4, &rng.derive(2)).unwrap();
    let (m, v) = mean_var(&collision_rates(&sa, &sb).unwrap());
    let want = (1.0 + 0.3) / 5.0;
    let z = (m - want).abs() / (v / 20_000.0).sqrt();
    passed &= z <= 4.0;
    parts.push(format!("MC E[q̂] {m:.4} vs {want:.4} (|z|={z:.2}, tol 4)"));

    for d in [2usize, 4] {
        let dim = d * d;
        for sigma in [0.2, 0.1] {
            let (n_u, n_m) = calibrated_shadow_budget(sigma, dim).unwrap();
            let worst_std = shadow_std(d, sigma, (n_u, n_m), 2000);
            passed &= worst_std <= sigma;
            parts.push(format!("D={dim} σ={sigma}: (N_U,N_M)=({n_u},{n_m}) max std {worst_std:.3}"));
        }
    }
    // Uncalibrated formulas, reported only.
    let mut raw = Vec::new();
    for d in [2usize, 4] {
        for sigma in [0.2, 0.1] {
            for symbol in [DimensionSymbol::Subsystem, DimensionSymbol::Total] {
                let budget = shadow_budget(sigma, d * d, symbol).unwrap();
                raw.push(format!("{symbol:?} D={} σ={sigma} {budget:?} std {:.3}", d * d, shadow_std(d, sigma, budget, 500)));
            }
        }
    }
    let (n_u, n_m) = split_copies(4096);
    parts.push(format!("raw budgets [{}]; grid split S=4096 → ({n_u},{n_m})", raw.join(", ")));
    outcome(passed, parts.join("; "))
}

/// Largest empirical std of the shadow overlap estimate over `F ∈ {0, ½, 1}`.
fn shadow_std(d: usize, sigma: f64, (n_u, n_m): (u64, u64), trials: usize) -> f64 {
    let dim = d * d;
    let mut worst: f64 = 0.0;
    for f in [0.0, 0.5, 1.0] {
        let (a, b) = state_pair(d, f);
        let root = RngStream::new(hash(dim, sigma, f) ^ n_u.rotate_left(17) ^ n_m, 8);
        let est: Vec<f64> = (0..trials)
            .map(|t| {
                let r = root.derive(t as u64);
                let p = ShadowProtocol::sample(dim, n_u as usize, &mut r.derive(0)).unwrap();
                let sa = build_shadow(&a, &p, n_m as u32, &r.derive(1)).unwrap();
                let sb = build_shadow(&b, &p, n_m as u32, &r.derive(2)).unwrap();
                overlap_from_shadows(&sa, &sb).unwrap()
            })
            .collect();
        worst = worst.max(mean_var(&est).1.sqrt());
    }
    worst
}

fn hash(dim: usize, sigma: f64, f: f64) -> u64 {
    shotlearn::rng::hash_words(&[dim as u64, sigma.to_bits(), f.to_bits()])
}

fn criterion_9() -> Outcome {
    let cfg = ExperimentConfig::from_json(
        r#"{"dims":[2,4],"Ns":[4,16],"Ss":[16,"inf"],"methods":["svm_swap","svm_exact","meanest_single",
            "meanest_two","svm_shadow","meanest_shadow"],"trials":2,"test_count":50,"base_seed":9}"#,
    )
    .unwrap();
    let a = run_grid(&cfg).unwrap();
    let b = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(|| run_grid(&cfg).unwrap());
    let (ca, cb) = (to_csv_string(&a.rows).unwrap(), to_csv_string(&b.rows).unwrap());
    let identical = ca == cb && a.costs == b.costs;

    let mut mismatches = 0usize;
    let mut checked = 0usize;
    for (row, cost) in a.rows.iter().zip(&a.costs) {
        checked += 1;
        let want_tests = analytic_swap_tests(row.method, row.n, row.s, cfg.test_count);
        let mut ok = row.swap_tests == want_tests && cost.swap_tests == want_tests && cost.is_consistent();
        if matches!(row.method, Method::SvmShadow | Method::MeanestShadow) {
            let (n_u, n_m) = split_copies(row.s.tests());
            ok &= row.state_copies == (2 * row.n + cfg.test_count) as u64 * n_u * n_m;
        } else if let Some(mode) = row.method.swap_mode() {
            ok &= row.state_copies == want_tests * mode.copies_per_shot();
        } else if row.method == Method::SvmSwap {
            ok &= row.state_copies == want_tests * 2;
        }
        mismatches += usize::from(!ok);
    }
    outcome(
        identical && mismatches == 0 && checked > 0,
        format!(
            "rerun CSV byte-identical across thread pools: {identical} ({} bytes); cost mismatches {mismatches}/{checked}",
            ca.len()
        ),
    )
}

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [Criterion; 9] = [
        (1, "oracle exactness", criterion_1),
        (2, "optimal observable", criterion_2),
        (3, "SWAP-measurement baseline", criterion_3),
        (4, "estimator unbiasedness", criterion_4),
        (5, "variance scaling", criterion_5),
        (6, "desk-scale learning curves at d=8", criterion_6),
        (7, "success-region nesting", criterion_7),
        (8, "shadow estimator", criterion_8),
        (9, "determinism and cost ledger", criterion_9),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (k, name, f) in criteria {
        if !selected.is_empty() && !selected.contains(&k) {
            continue;
        }
        ran += 1;
        let o = f();
        failed += usize::from(!o.passed);
        println!("{} {k} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed);
    let strict = std::env::var("SHOTLEARN_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
