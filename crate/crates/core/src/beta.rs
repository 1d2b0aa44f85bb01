//! Escape probabilities `β_n(x)` on truncated trees and their λ-derivatives.
//!
//! `β_n(x)` is the probability that the walk started at `x` reaches generation
//! `n` before the parent of `x`. It is 1 on generation `n` and satisfies
//! `β_n(x) = S/(λ + S)` with `S = Σ_i β_n(xi)` above it. Differentiating in λ
//! gives `−β'_n(x) = A_n(x)·Σ_i(−β'_n(xi)) + B_n(x)` with
//! `A_n = λ/(λ+S)²` and `B_n = S/(λ+S)²`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::regular_effective_conductance;
use crate::offspring::OffspringDistribution;
use crate::rng::{self, Domain};
use crate::speed::TuplePool;
use crate::tree::{QuenchedTree, VertexId};

/// Per-vertex recursion values for one `(tree, n, λ)`; indexed by vertex id.
/// Entries outside `0 ≤ |x| ≤ n` are NaN.
#[derive(Debug, Clone)]
pub struct BetaTable {
    pub level: u32,
    pub lambda: f64,
    pub beta: Vec<f64>,
    /// `β'_n(x)` (non-positive); `None` until [`compute_beta_derivative`] ran.
    pub dbeta: Option<Vec<f64>>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl BetaTable {
    pub fn root_beta(&self) -> f64 {
        self.beta[0]
    }

    pub fn root_dbeta(&self) -> Result<f64> {
        self.dbeta
            .as_ref()
            .map(|d| d[0])
            .ok_or_else(|| Error::InvalidState("derivative not computed".into()))
    }

    /// `(β, β')` of every vertex strictly above the boundary generation.
    pub fn interior_samples(&self, tree: &QuenchedTree) -> Result<Vec<(f64, f64)>> {
        let dbeta = self
            .dbeta
            .as_ref()
            .ok_or_else(|| Error::InvalidState("derivative not computed".into()))?;
        Ok(tree
            .tree_vertices()
            .filter(|&v| (tree.depth(v) as i64) < self.level as i64)
            .map(|v| (self.beta[v as usize], dbeta[v as usize]))
            .collect())
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

fn in_range(tree: &QuenchedTree, v: VertexId, n: u32) -> bool {
    Some(v) != tree.star_root() && (0..=n as i32).contains(&tree.depth(v))
}

/// Evaluates `β_n` bottom-up on `tree`, filling `A_n` and `B_n` as well.
pub fn compute_beta(tree: &QuenchedTree, n: u32, lambda: f64) -> Result<BetaTable> {
    check_lambda(lambda)?;
    if !tree.is_materialized_to(n) {
        return Err(Error::invalid(format!("tree is not materialised down to depth {n}")));
    }
    let len = tree.len();
    let mut beta = vec![f64::NAN; len];
    let mut a = vec![f64::NAN; len];
    let mut b = vec![f64::NAN; len];
    // Children always carry larger ids than their parent (the artificial
    // root is skipped), so a reverse sweep visits children first.
    for v in (0..len as VertexId).rev() {
        if !in_range(tree, v, n) {
            continue;
        }
        let i = v as usize;
        if tree.depth(v) == n as i32 {
            beta[i] = 1.0;
            a[i] = 0.0;
            b[i] = 0.0;
            continue;
        }
        let children = tree.children(v).expect("materialised");
        if children.is_empty() {
            return Err(Error::unsupported(format!(
                "vertex {v} at depth {} is a leaf; the recursion needs a leafless tree",
                tree.depth(v)
            )));
        }
        let s: f64 = children.map(|c| beta[c as usize]).sum();
        let denom = lambda + s;
        beta[i] = s / denom;
        a[i] = lambda / (denom * denom);
        b[i] = s / (denom * denom);
    }
    Ok(BetaTable {
        level: n,
        lambda,
        beta,
        dbeta: None,
        a,
        b,
    })
}

/// Fills `table.dbeta` through `−β'_n(x) = A_n(x)·Σ_i(−β'_n(xi)) + B_n(x)`.
pub fn compute_beta_derivative(tree: &QuenchedTree, table: &mut BetaTable) -> Result<()> {
    if table.beta.len() != tree.len() {
        return Err(Error::InvalidState(
            "beta table was computed on a different tree".into(),
        ));
    }
    let n = table.level;
    let mut neg = vec![f64::NAN; tree.len()];
    for v in (0..tree.len() as VertexId).rev() {
        if !in_range(tree, v, n) {
            continue;
        }
        let i = v as usize;
        neg[i] = if tree.depth(v) == n as i32 {
            0.0
        } else {
            let below: f64 = tree
                .children(v)
                .expect("materialised")
                .map(|c| neg[c as usize])
                .sum();
            table.a[i] * below + table.b[i]
        };
    }
    table.dbeta = Some(neg.into_iter().map(|x| -x).collect());
    Ok(())
}

/// `β_n` and `β'_n` in one call.
pub fn compute_beta_with_derivative(
    tree: &QuenchedTree,
    n: u32,
    lambda: f64,
) -> Result<BetaTable> {
    let mut table = compute_beta(tree, n, lambda)?;
    compute_beta_derivative(tree, &mut table)?;
    Ok(table)
}

/// `β'_n(e)` from the unrolled sum
/// `−β'_n(e) = Σ_{k<n} Σ_{|x|=k} B_n(x) Π_{i<k} A_n(x_i)`,
/// where `x_i` is the ancestor of `x` in generation `i`. Each ancestor product
/// is recomputed by walking the parent chain, independently of the recursion.
pub fn beta_derivative_path_sum(tree: &QuenchedTree, table: &BetaTable) -> Result<f64> {
    if table.beta.len() != tree.len() {
        return Err(Error::InvalidState(
            "beta table was computed on a different tree".into(),
        ));
    }
    let n = table.level as i32;
    let mut by_level: Vec<Vec<VertexId>> = vec![Vec::new(); n.max(0) as usize];
    for v in tree.tree_vertices() {
        let d = tree.depth(v);
        if (0..n).contains(&d) {
            by_level[d as usize].push(v);
        }
    }
    let mut total = 0.0;
    for level in &by_level {
        for &x in level {
            let mut prod = 1.0;
            let mut y = x;
            while y != tree.root() {
                y = tree.parent(y).expect("non-root vertex has a parent");
                prod *= table.a[y as usize];
            }
            total += table.b[x as usize] * prod;
        }
    }
    Ok(-total)
}

/// Root `(β_n(e), β'_n(e))` for each λ, reusing two scratch buffers.
///
/// Same recursion as [`compute_beta_with_derivative`] without building full
/// tables; used by the pool samplers.
pub(crate) fn root_values(
    tree: &QuenchedTree,
    n: u32,
    lambdas: &[f64],
    beta: &mut Vec<f64>,
    neg_dbeta: &mut Vec<f64>,
) -> Result<Vec<(f64, f64)>> {
    let len = tree.len();
    beta.clear();
    beta.resize(len, 0.0);
    neg_dbeta.clear();
    neg_dbeta.resize(len, 0.0);
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        for v in (0..len as VertexId).rev() {
            let i = v as usize;
            let d = tree.depth(v);
            if d < 0 || d > n as i32 {
                continue;
            }
            if d == n as i32 {
                beta[i] = 1.0;
                neg_dbeta[i] = 0.0;
                continue;
            }
            let children = tree.children(v).expect("materialised");
            if children.is_empty() {
                return Err(Error::unsupported("leaf above the truncation level"));
            }
            let (mut s, mut ds) = (0.0, 0.0);
            for c in children {
                s += beta[c as usize];
                ds += neg_dbeta[c as usize];
            }
            let denom = lambda + s;
            let d2 = denom * denom;
            beta[i] = s / denom;
            neg_dbeta[i] = (lambda * ds + s) / d2;
        }
        out.push((beta[0], -neg_dbeta[0]));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolMethod {
    /// One independent truncated tree per sample: exact iid draws of `(β_n(e), β'_n(e))`.
    Tree,
    /// Population dynamics on a fixed random genealogy; approximately iid.
    Population,
}

impl std::str::FromStr for PoolMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(PoolMethod::Tree),
            "population" => Ok(PoolMethod::Population),
            _ => Err(Error::invalid(format!("unknown pool method {s:?}"))),
        }
    }
}

/// Joint samples of `(β_n(e), β'_n(e))` at one λ.
#[derive(Debug, Clone)]
pub struct BetaPool {
    pub samples: Vec<(f64, f64)>,
    pub level: u32,
    pub lambda: f64,
    pub method: PoolMethod,
}

impl BetaPool {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_beta(&self) -> f64 {
        self.samples.iter().map(|s| s.0).sum::<f64>() / self.samples.len() as f64
    }

    /// A pool holding `count` copies of one exact `(β, β')` pair.
    pub fn constant(beta: f64, dbeta: f64, count: usize, lambda: f64) -> Self {
        Self {
            samples: vec![(beta, dbeta); count],
            level: u32::MAX,
            lambda,
            method: PoolMethod::Tree,
        }
    }

    /// CSV with header `beta,dbeta`, one sample per row.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["beta", "dbeta"])?;
        for &(b, d) in &self.samples {
            w.write_record([crate::fmt::sig(b), crate::fmt::sig(d)])?;
        }
        w.flush()
    }
}

fn check_pool_args(dist: &OffspringDistribution, lambdas: &[f64], count: usize) -> Result<()> {
    if dist.has_leaves() {
        return Err(Error::unsupported(
            "beta pools need an offspring law without leaves (p_0 = 0)",
        ));
    }
    if count == 0 {
        return Err(Error::invalid("pool size must be at least 1"));
    }
    lambdas.iter().try_for_each(|&l| check_lambda(l))
}

/// Pool of `count` joint `(β_n, β'_n)` samples at one λ.
pub fn sample_pool(
    dist: &OffspringDistribution,
    lambda: f64,
    n: u32,
    count: usize,
    seed: u64,
    method: PoolMethod,
) -> Result<BetaPool> {
    Ok(sample_pools(dist, &[lambda], n, count, seed, method)?
        .pop()
        .expect("one lambda"))
}

/// Pools for several λ built from the same random trees (or genealogy), so
/// that sample `i` of every pool comes from the same realisation.
pub fn sample_pools(
    dist: &OffspringDistribution,
    lambdas: &[f64],
    n: u32,
    count: usize,
    seed: u64,
    method: PoolMethod,
) -> Result<Vec<BetaPool>> {
    check_pool_args(dist, lambdas, count)?;
    let per_lambda: Vec<Vec<(f64, f64)>> = match method {
        PoolMethod::Tree => {
            let rows: Vec<Vec<(f64, f64)>> = (0..count)
                .into_par_iter()
                .map_init(
                    || {
                        (
                            QuenchedTree::new(dist.clone(), rng::stream(seed, Domain::PoolTree, 0)),
                            Vec::new(),
                            Vec::new(),
                        )
                    },
                    |(tree, beta, dbeta), i| {
                        tree.resample(n, rng::stream(seed, Domain::PoolTree, i as u64));
                        root_values(tree, n, lambdas, beta, dbeta)
                    },
                )
                .collect::<Result<_>>()?;
            (0..lambdas.len())
                .map(|j| rows.iter().map(|r| r[j]).collect())
                .collect()
        }
        PoolMethod::Population => {
            let genealogy = Genealogy::sample(dist, count, n, seed);
            lambdas.iter().map(|&l| genealogy.evaluate(l, n)).collect()
        }
    };
    Ok(per_lambda
        .into_iter()
        .zip(lambdas)
        .map(|(samples, &lambda)| BetaPool {
            samples,
            level: n,
            lambda,
            method,
        })
        .collect())
}

const GENEALOGY_CHUNK: usize = 4096;

/// A layered random genealogy for population dynamics.
///
/// Layer `h` holds `width` nodes; node `j` of layer `h` has `ν` children drawn
/// uniformly (with replacement) among the nodes of layer `h + 1`. Evaluating at
/// depth `n` sets layer `n` to the boundary value 1 and runs the recursion up
/// to layer 0, whose nodes form the pool. Each top node therefore sees a
/// depth-`n` truncated tree whose subtrees may occasionally be shared.
///
/// Deeper evaluations reuse the same top layers, so per node
/// `β_{n+1} ≤ β_n`, and the same genealogy evaluated at several λ gives
/// common random numbers across λ.
#[derive(Debug, Clone)]
pub struct Genealogy {
    width: usize,
    /// `layers[h]`: CSR child lists of layer-`h` nodes into layer `h + 1`.
    layers: Vec<(Vec<u32>, Vec<u32>)>,
}

impl Genealogy {
    pub fn sample(dist: &OffspringDistribution, width: usize, depth: u32, seed: u64) -> Self {
        let layers = (0..depth as usize)
            .map(|h| Self::sample_layer(dist, width, h, seed))
            .collect();
        Self { width, layers }
    }

    fn sample_layer(
        dist: &OffspringDistribution,
        width: usize,
        h: usize,
        seed: u64,
    ) -> (Vec<u32>, Vec<u32>) {
        use rand::Rng;
        let chunks = width.div_ceil(GENEALOGY_CHUNK);
        let parts: Vec<(Vec<u32>, Vec<u32>)> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng =
                    rng::stream(seed, Domain::Population, ((h as u64) << 32) | c as u64);
                let lo = c * GENEALOGY_CHUNK;
                let hi = (lo + GENEALOGY_CHUNK).min(width);
                let mut counts = Vec::with_capacity(hi - lo);
                let mut picks = Vec::new();
                for _ in lo..hi {
                    let k = dist.sample(&mut rng);
                    counts.push(k);
                    picks.extend((0..k).map(|_| rng.gen_range(0..width as u32)));
                }
                (counts, picks)
            })
            .collect();
        let mut offsets = Vec::with_capacity(width + 1);
        let mut picks = Vec::new();
        offsets.push(0u32);
        for (counts, p) in parts {
            for k in counts {
                offsets.push(offsets.last().unwrap() + k);
            }
            picks.extend(p);
        }
        (offsets, picks)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> u32 {
        self.layers.len() as u32
    }

    /// Top-layer `(β_n, β'_n)` values for truncation depth `n ≤ depth()`.
    pub fn evaluate(&self, lambda: f64, n: u32) -> Vec<(f64, f64)> {
        assert!(n <= self.depth(), "genealogy too shallow");
        let mut below = vec![(1.0, 0.0); self.width];
        let mut here = vec![(0.0, 0.0); self.width];
        for h in (0..n as usize).rev() {
            let (offsets, picks) = &self.layers[h];
            for (j, slot) in here.iter_mut().enumerate() {
                let kids = &picks[offsets[j] as usize..offsets[j + 1] as usize];
                let (mut s, mut ds) = (0.0, 0.0);
                for &c in kids {
                    let (b, d) = below[c as usize];
                    s += b;
                    ds -= d;
                }
                let denom = lambda + s;
                *slot = (s / denom, -(lambda * ds + s) / (denom * denom));
            }
            std::mem::swap(&mut below, &mut here);
        }
        below
    }
}

/// Outcome of one family of bound checks.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub name: &'static str,
    pub evaluated: usize,
    pub violations: usize,
    /// Smallest slack seen (negative means violated).
    pub worst_slack: f64,
    pub skipped: Option<String>,
}

impl BoundCheck {
    fn skipped(name: &'static str, reason: impl Into<String>) -> Self {
        Self {
            name,
            evaluated: 0,
            violations: 0,
            worst_slack: f64::NAN,
            skipped: Some(reason.into()),
        }
    }

    fn tally(name: &'static str, slacks: impl Iterator<Item = f64>) -> Self {
        let mut c = Self {
            name,
            evaluated: 0,
            violations: 0,
            worst_slack: f64::INFINITY,
            skipped: None,
        };
        for s in slacks {
            c.evaluated += 1;
            if s < 0.0 {
                c.violations += 1;
            }
            c.worst_slack = c.worst_slack.min(s);
        }
        c
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub lambda: f64,
    pub checks: Vec<BoundCheck>,
}

impl BoundReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Relative slack absorbed as rounding when a bound is attained with equality.
const BOUND_RTOL: f64 = 1e-12;

/// Checks samples of `(β, β')` (and optionally tuples) against
///
/// * `1 − (λ∧m₁)/m₁ ≤ β ≤ 1 − λ/m₂` (`beta_lower`, `beta_upper`),
/// * `0 < −β' ≤ β/(m₁ − λ)` (`dbeta_positive`, `dbeta_upper`),
/// * `λ − 1 + Σ_{i≤ν} β_i ≥ m₁ − λ/m₁` for tuples (`tuple_denominator`).
///
/// `level = Some(n)` marks truncated values `β_n`. Then `β_n ≥ β` still gives
/// the lower bound, but the upper bound is replaced by the exact truncated
/// value on the `m₂`-ary tree, which decreases to `1 − λ/m₂`.
pub fn check_bounds(
    samples: &[(f64, f64)],
    level: Option<u32>,
    dist: &OffspringDistribution,
    lambda: f64,
    tuples: Option<&TuplePool>,
) -> BoundReport {
    let m1 = dist.min_degree() as f64;
    let m2 = dist.max_degree() as f64;
    let mut checks = Vec::new();

    if dist.has_leaves() {
        let reason = "offspring law has leaves";
        for name in [
            "beta_lower",
            "beta_upper",
            "dbeta_positive",
            "dbeta_upper",
            "tuple_denominator",
        ] {
            checks.push(BoundCheck::skipped(name, reason));
        }
        return BoundReport { lambda, checks };
    }

    if lambda < dist.mean() {
        let lower = 1.0 - lambda.min(m1) / m1;
        let upper = match level {
            Some(n) if lambda > 0.0 => {
                regular_effective_conductance(dist.max_degree(), lambda, n)
                    .map(|c| c.max(1.0 - lambda / m2))
                    .unwrap_or(1.0 - lambda / m2)
            }
            _ => 1.0 - lambda / m2,
        };
        checks.push(BoundCheck::tally(
            "beta_lower",
            samples.iter().map(|&(b, _)| b - lower + BOUND_RTOL),
        ));
        checks.push(BoundCheck::tally(
            "beta_upper",
            samples.iter().map(|&(b, _)| upper - b + BOUND_RTOL),
        ));
    } else {
        checks.push(BoundCheck::skipped("beta_lower", "needs lambda < m"));
        checks.push(BoundCheck::skipped("beta_upper", "needs lambda < m"));
    }

    if lambda >= m1 {
        checks.push(BoundCheck::skipped("dbeta_positive", "needs lambda < m1"));
        checks.push(BoundCheck::skipped("dbeta_upper", "needs lambda < m1"));
    } else if level == Some(0) {
        checks.push(BoundCheck::skipped(
            "dbeta_positive",
            "derivative vanishes at truncation depth 0",
        ));
        checks.push(BoundCheck::tally(
            "dbeta_upper",
            samples
                .iter()
                .map(|&(b, d)| b / (m1 - lambda) * (1.0 + BOUND_RTOL) + d),
        ));
    } else {
        checks.push(BoundCheck::tally(
            "dbeta_positive",
            samples.iter().map(|&(_, d)| {
                if -d > 0.0 {
                    -d
                } else {
                    -1.0
                }
            }),
        ));
        checks.push(BoundCheck::tally(
            "dbeta_upper",
            samples
                .iter()
                .map(|&(b, d)| b / (m1 - lambda) * (1.0 + BOUND_RTOL) + d),
        ));
    }

    match tuples {
        None => checks.push(BoundCheck::skipped("tuple_denominator", "no tuples supplied")),
        Some(_) if lambda >= m1 => {
            checks.push(BoundCheck::skipped("tuple_denominator", "needs lambda < m1"))
        }
        Some(t) => {
            let floor = m1 - lambda / m1;
            checks.push(BoundCheck::tally(
                "tuple_denominator",
                t.denominators()
                    .map(|den| den - floor + BOUND_RTOL * floor.abs().max(1.0)),
            ));
        }
    }
    BoundReport { lambda, checks }
}
