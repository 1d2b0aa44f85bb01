//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Run with `cargo test -p gwspeed --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use gwspeed::network::{build_conductances, effective_conductance_to_level, regular_return_gf};
use gwspeed::rng::{derive_seed, stream, Domain, DEFAULT_SEED};
use gwspeed::speed::parse_grid;
use gwspeed::stats::binomial_sigma;
use gwspeed::*;

type Verdict = (bool, String);

fn two_three() -> OffspringDistribution {
    OffspringDistribution::parse_pmf("2:0.5,3:0.5").unwrap()
}

fn tree(dist: &OffspringDistribution, index: u64, depth: u32) -> QuenchedTree {
    let mut t = QuenchedTree::new(dist.clone(), stream(DEFAULT_SEED, Domain::Tree, index));
    t.materialize(depth);
    t
}

fn regular_tree_speed() -> Verdict {
    let mut worst = String::new();
    let mut ok = true;
    let mut max_z = 0.0f64;
    for d in [2u32, 3] {
        for (i, lambda) in [0.0, 0.5, 1.0, 1.5].into_iter().enumerate() {
            let dist = OffspringDistribution::regular(d);
            let est = simulate_speed(&dist, lambda, 100_000, 32, derive_seed(DEFAULT_SEED, (d * 10 + i as u32) as u64), Graph::Tree)
                .unwrap();
            let exact = (d as f64 - lambda) / (d as f64 + lambda);
            let err = (est.mean - exact).abs();
            let z = if est.stderr > 0.0 { err / est.stderr } else if err == 0.0 { 0.0 } else { f64::INFINITY };
            let pass = err <= 0.01 && z <= 3.0;
            if !pass || z > max_z {
                worst = format!("d={d} lambda={lambda}: {:.6} vs {:.6} (se {:.2e})", est.mean, exact, est.stderr);
            }
            max_z = max_z.max(z);
            ok &= pass;
        }
    }
    (ok, format!("max z {max_z:.2}; worst {worst}"))
}

fn triple_oracle() -> Verdict {
    let dist = two_three();
    let (mut rel, mut outside, mut count) = (0.0f64, 0usize, 0usize);
    let mut zs = Vec::new();
    for t in 0..100u64 {
        let mut tr = tree(&dist, t, 8);
        let mut starred = tr.clone();
        starred.attach_star_root().unwrap();
        for n in [1u32, 4, 8] {
            for (li, lambda) in [0.25, 1.0, 1.5].into_iter().enumerate() {
                let beta = compute_beta(&tr, n, lambda).unwrap().root_beta();
                let c = effective_conductance_to_level(&build_conductances(&starred, lambda, n).unwrap(), n).unwrap();
                rel = rel.max((beta - c).abs() / beta);
                let seed = derive_seed(DEFAULT_SEED, t * 100 + n as u64 * 10 + li as u64);
                let mc = hitting_beta_mc(HittingSource::Quenched(&mut tr), lambda, n, 10_000, seed).unwrap();
                let sigma = binomial_sigma(beta, mc.trials);
                count += 1;
                let miss = (mc.estimate - beta).abs() > 3.0 * sigma || (mc.estimate - c).abs() > 3.0 * sigma;
                outside += miss as usize;
                zs.push((mc.estimate - beta) / sigma);
            }
        }
    }
    let zm = zs.iter().sum::<f64>() / zs.len() as f64;
    let zv = zs.iter().map(|z| (z - zm).powi(2)).sum::<f64>() / (zs.len() - 1) as f64;
    let expected = count as f64 * 0.0027;
    (
        rel <= 1e-12 && outside == 0,
        format!(
            "recursion vs conductance max rel gap {rel:.2e}; {outside} of {count} MC estimates outside 3 sigma \
             ({expected:.1} expected by chance; z mean {zm:.3}, variance {zv:.3})"
        ),
    )
}

fn regular_escape() -> Verdict {
    let mut t = QuenchedTree::new(OffspringDistribution::regular(2), stream(DEFAULT_SEED, Domain::Tree, 0));
    let mc = hitting_beta_mc(HittingSource::Quenched(&mut t), 1.0, 20, 10_000, DEFAULT_SEED).unwrap();
    let sigma = binomial_sigma(0.5, mc.trials);
    let mc_ok = (mc.estimate - 0.5).abs() <= 3.0 * sigma;
    let mut resid = 0.0f64;
    for i in 0..10 {
        for j in 0..10 {
            let lambda = 0.4 * i as f64;
            let z = 0.1 + 0.1 * j as f64;
            let u = regular_return_gf(2, lambda, z).unwrap();
            let r = u - (lambda / (lambda + 2.0) * z + 2.0 / (lambda + 2.0) * z * u * u);
            resid = resid.max(r.abs());
        }
    }
    (
        mc_ok && resid <= 1e-12,
        format!("beta_20 MC {:.4} vs 0.5 (sigma {sigma:.4}); quadratic residual {resid:.2e}", mc.estimate),
    )
}

fn derivatives() -> Verdict {
    let dist = two_three();
    let mut path_gap = 0.0f64;
    for t in 0..100u64 {
        let tr = tree(&dist, t, 8);
        for n in [1u32, 4, 8] {
            for lambda in [0.25, 1.0, 1.5] {
                let table = compute_beta_with_derivative(&tr, n, lambda).unwrap();
                let d = table.root_dbeta().unwrap();
                let p = beta_derivative_path_sum(&tr, &table).unwrap();
                path_gap = path_gap.max((d - p).abs() / d.abs());
            }
        }
    }
    let fixed = tree(&dist, 1000, 10);
    let h = 1e-4;
    let mut fd_gap = 0.0f64;
    for lambda in [0.25, 0.5, 1.0, 1.5] {
        let table = compute_beta_with_derivative(&fixed, 10, lambda).unwrap();
        let d = table.root_dbeta().unwrap();
        let p = beta_derivative_path_sum(&fixed, &table).unwrap();
        path_gap = path_gap.max((d - p).abs() / d.abs());
        let up = compute_beta(&fixed, 10, lambda + h).unwrap().root_beta();
        let down = compute_beta(&fixed, 10, lambda - h).unwrap().root_beta();
        fd_gap = fd_gap.max(((up - down) / (2.0 * h) - d).abs());
    }
    (
        path_gap <= 1e-12 && fd_gap <= 1e-5,
        format!("recursion vs path sum max rel gap {path_gap:.2e}; finite difference gap {fd_gap:.2e}"),
    )
}

fn bounds() -> Verdict {
    let dist = two_three();
    let lambdas = [0.25, 0.5, 1.0, 1.1];
    let pools = sample_pools(&dist, &lambdas, 12, 10_000, DEFAULT_SEED, PoolMethod::Tree).unwrap();
    let draws = TupleDraws::sample(&dist, 100_000, 10_000, DEFAULT_SEED);
    let mut violations = 0usize;
    let mut details = Vec::new();
    for pool in &pools {
        let l = pool.lambda;
        let tuples = TuplePool::assemble(&draws, pool).unwrap();
        let (lo, hi) = (1.0 - l / 2.0, 1.0 - l / 3.0);
        let v_beta = pool.samples.iter().filter(|(b, _)| !(*b >= lo && *b <= hi)).count();
        let v_dbeta = pool
            .samples
            .iter()
            .filter(|(b, db)| !(-db > 0.0 && -db <= b / (2.0 - l)))
            .count();
        let floor = 2.0 - l / 2.0;
        let v_den = tuples.denominators().filter(|&d| d < floor).count();
        let report = check_bounds(&pool.samples, Some(12), &dist, l, Some(&tuples));
        let v = v_beta + v_dbeta + v_den + report.violations();
        violations += v;
        details.push(format!("lambda={l}: {v}"));
    }
    (
        violations == 0,
        format!("10000 pool samples and 100000 tuples per lambda; violations {}", details.join(", ")),
    )
}

fn lambda_one() -> Verdict {
    let dist = two_three();
    let exact = speed_exact_lambda1(&dist).unwrap();
    // 5/12 is not a double; compare with the same sum in floating point and
    // with the nearest double to 5/12.
    let oracle = 0.5 * (1.0 / 3.0) + 0.5 * (1.0 / 2.0);
    let exact_ok = exact == oracle && (exact - 5.0 / 12.0).abs() <= 2.0 * f64::EPSILON;
    let pool = sample_pool(&dist, 1.0, 14, 100_000, DEFAULT_SEED, PoolMethod::Population).unwrap();
    let f = speed_formula_mc(&dist, 1.0, &pool, 100_000, DEFAULT_SEED).unwrap();
    let f_err = (f.speed - 5.0 / 12.0).abs();
    let f_ok = f_err <= 0.01 && f_err <= 3.0 * f.stderr;
    let s = simulate_speed(&dist, 1.0, 100_000, 32, DEFAULT_SEED, Graph::Tree).unwrap();
    let s_ok = (s.mean - 5.0 / 12.0).abs() <= 3.0 * s.stderr;
    (
        exact_ok && f_ok && s_ok,
        format!(
            "exact {exact}; formula {:.6} +- {:.2e}; simulation {:.6} +- {:.2e}",
            f.speed, f.stderr, s.mean, s.stderr
        ),
    )
}

fn monotonicity() -> Verdict {
    let dist = two_three();
    let grid = parse_grid("0:1.17:0.09").unwrap();
    assert_eq!(grid.len(), 14);
    assert_eq!(*grid.last().unwrap(), 1.17);
    let threshold = dist.monotonicity_threshold().unwrap();
    assert!(1.17 < threshold);
    let curve = speed_curve(&dist, &grid, 12, 100_000, 100_000, DEFAULT_SEED, &CurveOptions::default()).unwrap();
    assert_eq!(curve.levels, vec![12, 15]);
    let bad_pairs = curve.monotonicity.pairs.iter().filter(|p| !p.decreasing).count();
    let mut weak = 0usize;
    let mut min_ratio = f64::INFINITY;
    for points in &curve.points {
        for p in points.iter().filter(|p| p.lambda > 0.0) {
            let (m, se) = (p.ineq8_margin.unwrap(), p.ineq8_stderr.unwrap());
            weak += (m <= 3.0 * se) as usize;
            min_ratio = min_ratio.min(m / se);
        }
    }
    let min_drop = curve
        .monotonicity
        .pairs
        .iter()
        .map(|p| -p.change / p.change_stderr.max(f64::MIN_POSITIVE))
        .fold(f64::INFINITY, f64::min);
    (
        curve.monotonicity.strictly_decreasing == Some(true) && bad_pairs == 0 && weak == 0,
        format!(
            "{} pairs, {bad_pairs} not decreasing (min drop/se {min_drop:.1}); criterion margin/se min {min_ratio:.1}, {weak} weak",
            curve.monotonicity.pairs.len()
        ),
    )
}

fn start_comparison() -> Verdict {
    let cases = [("2:1", 1.0), ("2:0.5,3:0.5", 0.5), ("2:0.5,3:0.5", 1.0)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (pmf, lambda)) in cases.into_iter().enumerate() {
        let dist = OffspringDistribution::parse_pmf(pmf).unwrap();
        let c = lemma0_compare(&dist, lambda, 100_000, 32, derive_seed(DEFAULT_SEED, 900 + i as u64)).unwrap();
        ok &= c.z < 3.0;
        parts.push(format!("{pmf} lambda={lambda}: z={:.2}", c.z));
    }
    (ok, parts.join("; "))
}

fn extinction() -> Verdict {
    let d = OffspringDistribution::parse_pmf("0:0.25,2:0.75").unwrap();
    let q = d.extinction_probability(1e-14).unwrap();
    ((q - 1.0 / 3.0).abs() < 1e-10, format!("q = {q:.15}"))
}

fn determinism() -> Verdict {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_gwspeed"))
            .args(["verify", "--suite", "all", "--pmf", "2:0.5,3:0.5", "--seed", "7"])
            .output()
            .expect("binary runs")
    };
    let (a, b) = (run(), run());
    let same = a.stdout == b.stdout && !a.stdout.is_empty();
    (
        same && a.status.code() == b.status.code(),
        format!(
            "{} report bytes, identical: {same}, exit codes {:?}/{:?}",
            a.stdout.len(),
            a.status.code(),
            b.status.code()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("regular-tree speed matches (d-l)/(d+l)", regular_tree_speed),
        ("recursion, conductance and hitting MC agree", triple_oracle),
        ("regular-tree escape probability and return generating function", regular_escape),
        ("derivative recursion vs path sum and finite difference", derivatives),
        ("escape probability, derivative and denominator bounds", bounds),
        ("exact speed at lambda = 1 vs formula and simulation", lambda_one),
        ("strict decrease of the speed on [0, threshold]", monotonicity),
        ("speed does not depend on the artificial root", start_comparison),
        ("extinction probability", extinction),
        ("verify reports are byte-identical", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            });
        failed += !ok as usize;
        println!(
            "{} [{:>2}] {name}: {detail} ({:.1}s)",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
