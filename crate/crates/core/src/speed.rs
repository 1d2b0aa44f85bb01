//! Annealed speed formula, the strict-decrease criterion and speed curves.
//!
//! With `(β_i, β'_i)` iid copies of the root escape probability and its
//! λ-derivative, independent of `ν`, and `S = Σ_{i=0}^{ν} β_i`:
//!
//! ```text
//! ℓ_λ = E[(ν−λ) β₀ / (λ−1+S)] / E[(ν+λ) β₀ / (λ−1+S)]
//!     = E[(ν−λ)/(ν+1) · g] / E[(ν+λ)/(ν+1) · g],     g = S/(λ−1+S).
//! ```
//!
//! Writing `h = Σ(β_i + (1−λ)β'_i)/(λ−1+S)²` (so `dg/dλ = −h`) and
//! `a = E[ν/(ν+1) g]`, `b = E[g/(ν+1)]`, `c = E[ν/(ν+1) h]`, `d = E[h/(ν+1)]`,
//! differentiation gives `ℓ'_λ = 2(λ(ad − bc) − ab)/(a + λb)²`, so
//! `ℓ'_λ < 0 ⇔ ad − bc < ab/λ`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::beta::{sample_pools, BetaPool, Genealogy, PoolMethod};
use crate::error::{Error, Result};
use crate::offspring::{monotonicity_threshold_for, OffspringDistribution};
use crate::rng::{self, Domain};
use crate::stats::{mean_stderr, ratio_of_means};
use crate::walker::{simulate_speed, Graph};

const TUPLE_CHUNK: usize = 4096;

/// Random indices for tuples `(ν, β₀, …, β_ν)`: the offspring count and
/// `ν + 1` positions in a pool. Reused across λ for common random numbers.
#[derive(Debug, Clone)]
pub struct TupleDraws {
    pub pool_size: usize,
    nu: Vec<u32>,
    offsets: Vec<u32>,
    picks: Vec<u32>,
}

impl TupleDraws {
    pub fn sample(dist: &OffspringDistribution, count: usize, pool_size: usize, seed: u64) -> Self {
        let chunks = count.div_ceil(TUPLE_CHUNK);
        let parts: Vec<(Vec<u32>, Vec<u32>)> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = rng::stream(seed, Domain::Tuples, c as u64);
                let lo = c * TUPLE_CHUNK;
                let hi = (lo + TUPLE_CHUNK).min(count);
                let mut nus = Vec::with_capacity(hi - lo);
                let mut picks = Vec::new();
                for _ in lo..hi {
                    let nu = dist.sample(&mut rng);
                    nus.push(nu);
                    picks.extend((0..=nu).map(|_| rng.gen_range(0..pool_size as u32)));
                }
                (nus, picks)
            })
            .collect();
        let mut nu = Vec::with_capacity(count);
        let mut offsets = Vec::with_capacity(count + 1);
        let mut picks = Vec::new();
        offsets.push(0);
        for (n, p) in parts {
            for k in n {
                nu.push(k);
                offsets.push(offsets.last().unwrap() + k + 1);
            }
            picks.extend(p);
        }
        Self {
            pool_size,
            nu,
            offsets,
            picks,
        }
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }
}

/// Tuples `(ν, β₀..β_ν, β'₀..β'_ν)` at one λ, stored flat.
#[derive(Debug, Clone)]
pub struct TuplePool {
    pub lambda: f64,
    pub level: u32,
    nu: Vec<u32>,
    offsets: Vec<u32>,
    betas: Vec<f64>,
    dbetas: Vec<f64>,
}

impl TuplePool {
    /// Fills the draws with jointly sampled `(β, β')` pairs from `pool`.
    pub fn assemble(draws: &TupleDraws, pool: &BetaPool) -> Result<Self> {
        if draws.pool_size != pool.len() {
            return Err(Error::invalid(format!(
                "tuple draws index a pool of {} but the pool holds {}",
                draws.pool_size,
                pool.len()
            )));
        }
        let (betas, dbetas) = draws
            .picks
            .iter()
            .map(|&i| pool.samples[i as usize])
            .unzip();
        Ok(Self {
            lambda: pool.lambda,
            level: pool.level,
            nu: draws.nu.clone(),
            offsets: draws.offsets.clone(),
            betas,
            dbetas,
        })
    }

    /// Builds a pool from explicit tuples (used for exact, zero-variance inputs).
    pub fn from_tuples(lambda: f64, tuples: &[(u32, Vec<(f64, f64)>)]) -> Result<Self> {
        let mut out = Self {
            lambda,
            level: u32::MAX,
            nu: Vec::new(),
            offsets: vec![0],
            betas: Vec::new(),
            dbetas: Vec::new(),
        };
        for (nu, pairs) in tuples {
            if pairs.len() != *nu as usize + 1 {
                return Err(Error::invalid(format!(
                    "tuple with nu = {nu} needs {} pairs, got {}",
                    nu + 1,
                    pairs.len()
                )));
            }
            out.nu.push(*nu);
            out.offsets.push(out.offsets.last().unwrap() + nu + 1);
            out.betas.extend(pairs.iter().map(|p| p.0));
            out.dbetas.extend(pairs.iter().map(|p| p.1));
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    /// `(ν, β₀..β_ν, β'₀..β'_ν)` of tuple `i`.
    pub fn tuple(&self, i: usize) -> (u32, &[f64], &[f64]) {
        let r = self.offsets[i] as usize..self.offsets[i + 1] as usize;
        (self.nu[i], &self.betas[r.clone()], &self.dbetas[r])
    }

    /// `λ − 1 + Σ_{i≤ν} β_i` per tuple.
    pub fn denominators(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.lambda - 1.0 + self.tuple(i).1.iter().sum::<f64>())
    }

    fn check_denominators(&self) -> Result<()> {
        for (i, den) in self.denominators().enumerate() {
            if !(den > 0.0) {
                return Err(Error::DegenerateDenominator {
                    index: i,
                    nu: self.nu[i],
                    denominator: den,
                });
            }
        }
        Ok(())
    }

    /// Per-tuple `(ν, g, h)`.
    fn ghs(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let lambda = self.lambda;
        (0..self.len()).map(move |i| {
            let (nu, betas, dbetas) = self.tuple(i);
            let s: f64 = betas.iter().sum();
            let s_mixed: f64 = betas
                .iter()
                .zip(dbetas)
                .map(|(b, d)| b + (1.0 - lambda) * d)
                .sum();
            let den = lambda - 1.0 + s;
            (nu as f64, s / den, s_mixed / (den * den))
        })
    }
}

/// Both estimators of the speed formula on one tuple set.
#[derive(Debug, Clone, Serialize)]
pub struct SpeedFormulaEstimate {
    pub lambda: f64,
    /// `E[(ν−λ)β₀/(λ−1+S)] / E[(ν+λ)β₀/(λ−1+S)]`.
    pub speed: f64,
    pub stderr: f64,
    /// The exchangeability-symmetrised ratio using `S/(ν+1)` in place of `β₀`.
    pub symmetric_speed: f64,
    pub symmetric_stderr: f64,
    pub tuples: usize,
    /// Per-tuple linearised deviations of `speed` (delta method), kept for
    /// paired comparisons between λ values on the same tuples.
    #[serde(skip)]
    influence: Vec<f64>,
}

impl SpeedFormulaEstimate {
    /// Standard error of `other.speed − self.speed` when both were computed
    /// on the same tuple draws.
    pub fn paired_diff_stderr(&self, other: &SpeedFormulaEstimate) -> f64 {
        assert_eq!(self.influence.len(), other.influence.len());
        let diffs: Vec<f64> = other
            .influence
            .iter()
            .zip(&self.influence)
            .map(|(a, b)| a - b)
            .collect();
        mean_stderr(&diffs).1
    }
}

/// Evaluates the speed formula on assembled tuples.
pub fn speed_formula_from_tuples(tuples: &TuplePool) -> Result<SpeedFormulaEstimate> {
    if tuples.len() < 2 {
        return Err(Error::invalid("need at least 2 tuples"));
    }
    tuples.check_denominators()?;
    let lambda = tuples.lambda;
    let m = tuples.len();
    let (mut num, mut den) = (Vec::with_capacity(m), Vec::with_capacity(m));
    let (mut snum, mut sden) = (Vec::with_capacity(m), Vec::with_capacity(m));
    for i in 0..m {
        let (nu, betas, _) = tuples.tuple(i);
        let nu = nu as f64;
        let s: f64 = betas.iter().sum();
        let w = betas[0] / (lambda - 1.0 + s);
        num.push((nu - lambda) * w);
        den.push((nu + lambda) * w);
        let g = s / (lambda - 1.0 + s) / (nu + 1.0);
        snum.push((nu - lambda) * g);
        sden.push((nu + lambda) * g);
    }
    let (speed, stderr) = ratio_of_means(&num, &den);
    let (symmetric_speed, symmetric_stderr) = ratio_of_means(&snum, &sden);
    let ybar = den.iter().sum::<f64>() / m as f64;
    let influence = num
        .iter()
        .zip(&den)
        .map(|(x, y)| (x - speed * y) / ybar)
        .collect();
    Ok(SpeedFormulaEstimate {
        lambda,
        speed,
        stderr,
        symmetric_speed,
        symmetric_stderr,
        tuples: m,
        influence,
    })
}

/// Speed formula with `tuples` fresh tuple draws from `pool`.
pub fn speed_formula_mc(
    dist: &OffspringDistribution,
    lambda: f64,
    pool: &BetaPool,
    tuples: usize,
    seed: u64,
) -> Result<SpeedFormulaEstimate> {
    if !(lambda >= 0.0 && lambda < dist.mean()) {
        return Err(Error::unsupported(format!(
            "speed formula needs 0 <= lambda < m = {}",
            dist.mean()
        )));
    }
    if dist.has_leaves() {
        return Err(Error::unsupported("speed formula needs a leafless offspring law"));
    }
    if (pool.lambda - lambda).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "pool was sampled at lambda = {} but the formula is evaluated at {lambda}",
            pool.lambda
        )));
    }
    let draws = TupleDraws::sample(dist, tuples, pool.len(), seed);
    speed_formula_from_tuples(&TuplePool::assemble(&draws, pool)?)
}

/// Bootstrap standard error of the speed formula (resampling tuples).
pub fn speed_formula_bootstrap_stderr(tuples: &TuplePool, replicates: usize, seed: u64) -> f64 {
    let lambda = tuples.lambda;
    let rows: Vec<(f64, f64)> = (0..tuples.len())
        .map(|i| {
            let (nu, betas, _) = tuples.tuple(i);
            let s: f64 = betas.iter().sum();
            let w = betas[0] / (lambda - 1.0 + s);
            ((nu as f64 - lambda) * w, (nu as f64 + lambda) * w)
        })
        .collect();
    let stats: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(seed, Domain::Tuples, u64::MAX - r as u64);
            let (mut x, mut y) = (0.0, 0.0);
            for _ in 0..rows.len() {
                let (a, b) = rows[rng.gen_range(0..rows.len())];
                x += a;
                y += b;
            }
            x / y
        })
        .collect();
    let (_, se_of_mean) = mean_stderr(&stats);
    se_of_mean * (replicates as f64).sqrt()
}

/// Exact speed at `λ = 1`: `E[(ν−1)/(ν+1)]`.
pub fn speed_exact_lambda1(dist: &OffspringDistribution) -> Result<f64> {
    if dist.has_leaves() || !dist.is_supercritical() {
        return Err(Error::unsupported(
            "exact speed at lambda = 1 needs a leafless supercritical law",
        ));
    }
    Ok(dist
        .entries()
        .iter()
        .map(|&(k, p)| p * (k as f64 - 1.0) / (k as f64 + 1.0))
        .sum())
}

/// Sample expectations of the strict-decrease criterion at one λ.
#[derive(Debug, Clone, Serialize)]
pub struct Ineq8Report {
    pub lambda: f64,
    /// `E[ν/(ν+1) · S/(λ−1+S)]`
    pub e1: f64,
    /// `E[1/(ν+1) · Σ(β_i + (1−λ)β'_i)/(λ−1+S)²]`
    pub e2: f64,
    /// `E[1/(ν+1) · S/(λ−1+S)]`
    pub e3: f64,
    /// `E[ν/(ν+1) · Σ(β_i + (1−λ)β'_i)/(λ−1+S)²]`
    pub e4: f64,
    /// `e1 · e2 − e3 · e4`
    pub lhs: f64,
    /// `e1 · e3 / λ`
    pub rhs: f64,
    pub holds: bool,
    /// `rhs − lhs`
    pub margin: f64,
    pub mc_stderr: f64,
    /// `dℓ/dλ` implied by the same expectations.
    pub speed_slope: f64,
}

pub fn inequality8(
    dist: &OffspringDistribution,
    lambda: f64,
    tuples: &TuplePool,
) -> Result<Ineq8Report> {
    let m1 = dist.min_degree();
    if m1 < 2 {
        return Err(Error::unsupported(format!(
            "criterion needs minimal degree >= 2, got {m1}"
        )));
    }
    if !(lambda > 0.0 && lambda < m1 as f64) {
        return Err(Error::unsupported(format!(
            "criterion is stated for 0 < lambda < m1 = {m1}, got {lambda}"
        )));
    }
    if (tuples.lambda - lambda).abs() > 1e-12 {
        return Err(Error::invalid("tuples were built at a different lambda"));
    }
    if tuples.len() < 2 {
        return Err(Error::invalid("need at least 2 tuples"));
    }
    tuples.check_denominators()?;
    let m = tuples.len() as f64;
    let rows: Vec<[f64; 4]> = tuples
        .ghs()
        .map(|(nu, g, h)| {
            let w1 = nu / (nu + 1.0);
            let w0 = 1.0 / (nu + 1.0);
            [w1 * g, w0 * h, w0 * g, w1 * h]
        })
        .collect();
    let mut e = [0.0; 4];
    for r in &rows {
        for k in 0..4 {
            e[k] += r[k];
        }
    }
    e.iter_mut().for_each(|x| *x /= m);
    let [e1, e2, e3, e4] = e;
    let lhs = e1 * e2 - e3 * e4;
    let rhs = e1 * e3 / lambda;
    let margin = rhs - lhs;
    // Delta method on margin(e1, e2, e3, e4) = e1·e3/λ − e1·e2 + e3·e4.
    let grad = [e3 / lambda - e2, -e1, e1 / lambda + e4, e3];
    let lin: Vec<f64> = rows
        .iter()
        .map(|r| (0..4).map(|k| grad[k] * r[k]).sum())
        .collect();
    let (_, mc_stderr) = mean_stderr(&lin);
    let d = e1 + lambda * e3;
    Ok(Ineq8Report {
        lambda,
        e1,
        e2,
        e3,
        e4,
        lhs,
        rhs,
        holds: lhs < rhs,
        margin,
        mc_stderr,
        speed_slope: -2.0 * lambda * margin / (d * d),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpeedCurvePoint {
    pub lambda: f64,
    pub level: u32,
    pub speed_formula: f64,
    pub speed_formula_stderr: f64,
    pub speed_mc: Option<f64>,
    pub speed_mc_stderr: Option<f64>,
    pub ineq8_margin: Option<f64>,
    pub ineq8_stderr: Option<f64>,
    pub ineq8_holds: Option<bool>,
    /// Standard error of the change from the previous grid point (paired).
    pub step_stderr: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairCheck {
    pub level: u32,
    pub lambda_from: f64,
    pub lambda_to: f64,
    pub change: f64,
    pub change_stderr: f64,
    pub decreasing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    pub threshold: Option<f64>,
    /// `None` when no verdict is given (minimal degree below 2).
    pub strictly_decreasing: Option<bool>,
    pub refused: Option<String>,
    pub pairs: Vec<PairCheck>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpeedCurve {
    pub levels: Vec<u32>,
    /// `points[j]` is the curve at truncation `levels[j]`.
    pub points: Vec<Vec<SpeedCurvePoint>>,
    pub monotonicity: MonotonicityReport,
}

impl SpeedCurve {
    /// CSV for the first truncation level with header
    /// `lambda,speed_formula,stderr,speed_mc,mc_stderr,ineq8_margin,ineq8_stderr,holds`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        write_curve_csv(&self.points[0], out)
    }
}

pub fn write_curve_csv<W: std::io::Write>(
    points: &[SpeedCurvePoint],
    out: W,
) -> std::io::Result<()> {
    use crate::fmt::sig;
    let opt = |x: Option<f64>| x.map(sig).unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "lambda",
        "speed_formula",
        "stderr",
        "speed_mc",
        "mc_stderr",
        "ineq8_margin",
        "ineq8_stderr",
        "holds",
    ])?;
    for p in points {
        w.write_record([
            sig(p.lambda),
            sig(p.speed_formula),
            sig(p.speed_formula_stderr),
            opt(p.speed_mc),
            opt(p.speed_mc_stderr),
            opt(p.ineq8_margin),
            opt(p.ineq8_stderr),
            p.ineq8_holds.map(|h| h.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()
}

#[derive(Debug, Clone)]
pub struct CurveOptions {
    pub method: PoolMethod,
    /// Extra truncation depth re-evaluated for the stability check.
    pub extra_depth: u32,
    /// Walk steps per replica for the optional direct-simulation column (0 = off).
    pub mc_steps: u64,
    pub mc_replicas: usize,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            method: PoolMethod::Population,
            extra_depth: 3,
            mc_steps: 0,
            mc_replicas: 32,
        }
    }
}

/// Parses a grid `start:stop:step` (inclusive of `stop` up to rounding).
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::invalid(format!("grid must be start:stop:step, got {text:?}")));
    }
    let nums = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad grid number {p:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let (a, b, h) = (nums[0], nums[1], nums[2]);
    if !(h > 0.0) {
        return Err(Error::invalid("grid step must be > 0"));
    }
    if b < a {
        return Err(Error::invalid("grid stop must be >= start"));
    }
    let count = ((b - a) / h + 1e-9).floor() as usize;
    Ok((0..=count)
        .map(|i| crate::fmt::rounded(a + i as f64 * h))
        .collect())
}

/// Speed curve over `grid` with common random numbers.
///
/// One random structure (a genealogy for the population method, `samples`
/// trees for the tree method) and one set of tuple draws are sampled once;
/// every λ re-runs the recursions on that structure and forms the same
/// tuples. The curve is produced at depth `n` and `n + extra_depth`, and the
/// strict-decrease verdict over `[0, λ*]` must hold at both.
pub fn speed_curve(
    dist: &OffspringDistribution,
    grid: &[f64],
    n: u32,
    samples: usize,
    tuples: usize,
    seed: u64,
    opts: &CurveOptions,
) -> Result<SpeedCurve> {
    if grid.is_empty() {
        return Err(Error::invalid("empty lambda grid"));
    }
    for &l in grid {
        if !(l >= 0.0 && l < dist.mean()) {
            return Err(Error::invalid(format!(
                "grid point {l} outside [0, m) with m = {}",
                dist.mean()
            )));
        }
    }
    if dist.has_leaves() {
        return Err(Error::unsupported("speed curve needs a leafless offspring law"));
    }
    let levels = vec![n, n + opts.extra_depth];
    let draws = TupleDraws::sample(dist, tuples, samples, seed);
    let positive: Vec<f64> = grid.iter().copied().filter(|&l| l > 0.0).collect();

    let pools_per_level: Vec<Vec<BetaPool>> = match opts.method {
        PoolMethod::Population => {
            let genealogy = Genealogy::sample(dist, samples, *levels.iter().max().unwrap(), seed);
            levels
                .iter()
                .map(|&lvl| {
                    positive
                        .par_iter()
                        .map(|&l| BetaPool {
                            samples: genealogy.evaluate(l, lvl),
                            level: lvl,
                            lambda: l,
                            method: PoolMethod::Population,
                        })
                        .collect()
                })
                .collect()
        }
        PoolMethod::Tree => levels
            .iter()
            .map(|&lvl| sample_pools(dist, &positive, lvl, samples, seed, PoolMethod::Tree))
            .collect::<Result<_>>()?,
    };

    let threshold = monotonicity_threshold_for(dist.min_degree()).ok();
    let mut points = Vec::new();
    let mut pairs = Vec::new();
    for (lvl_idx, &lvl) in levels.iter().enumerate() {
        let mut row: Vec<SpeedCurvePoint> = Vec::with_capacity(grid.len());
        let mut estimates: Vec<Option<SpeedFormulaEstimate>> = Vec::with_capacity(grid.len());
        let mut pool_iter = pools_per_level[lvl_idx].iter();
        for (gi, &lambda) in grid.iter().enumerate() {
            let mut point = SpeedCurvePoint {
                lambda,
                level: lvl,
                speed_formula: 1.0,
                speed_formula_stderr: 0.0,
                speed_mc: None,
                speed_mc_stderr: None,
                ineq8_margin: None,
                ineq8_stderr: None,
                ineq8_holds: None,
                step_stderr: None,
            };
            let est = if lambda > 0.0 {
                let pool = pool_iter.next().expect("one pool per positive lambda");
                let tp = TuplePool::assemble(&draws, pool)?;
                let est = speed_formula_from_tuples(&tp)?;
                point.speed_formula = est.speed;
                point.speed_formula_stderr = est.stderr;
                if dist.min_degree() >= 2 && lambda < dist.min_degree() as f64 {
                    let r = inequality8(dist, lambda, &tp)?;
                    point.ineq8_margin = Some(r.margin);
                    point.ineq8_stderr = Some(r.mc_stderr);
                    point.ineq8_holds = Some(r.holds);
                }
                Some(est)
            } else {
                None
            };
            if opts.mc_steps > 0 && lvl_idx == 0 {
                let sim = simulate_speed(
                    dist,
                    lambda,
                    opts.mc_steps,
                    opts.mc_replicas,
                    rng::derive_seed(seed, 100 + gi as u64),
                    Graph::Tree,
                )?;
                point.speed_mc = Some(sim.mean);
                point.speed_mc_stderr = Some(sim.stderr);
            }
            if gi > 0 {
                let prev = &row[gi - 1];
                let step_se = match (&estimates[gi - 1], &est) {
                    (Some(a), Some(b)) => a.paired_diff_stderr(b),
                    (None, Some(b)) => b.stderr,
                    (Some(a), None) => a.stderr,
                    (None, None) => 0.0,
                };
                point.step_stderr = Some(step_se);
                if threshold.is_some_and(|t| lambda <= t) {
                    let change = point.speed_formula - prev.speed_formula;
                    pairs.push(PairCheck {
                        level: lvl,
                        lambda_from: prev.lambda,
                        lambda_to: lambda,
                        change,
                        change_stderr: step_se,
                        decreasing: change < 0.0,
                    });
                }
            }
            estimates.push(est);
            row.push(point);
        }
        points.push(row);
    }

    let monotonicity = match threshold {
        None => MonotonicityReport {
            threshold: None,
            strictly_decreasing: None,
            refused: Some(format!(
                "no verdict: minimal degree {} < 2",
                dist.min_degree()
            )),
            pairs,
        },
        Some(t) => MonotonicityReport {
            threshold: Some(t),
            strictly_decreasing: Some(pairs.iter().all(|p| p.decreasing)),
            refused: None,
            pairs,
        },
    };
    Ok(SpeedCurve {
        levels,
        points,
        monotonicity,
    })
}
