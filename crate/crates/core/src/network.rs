//! Electric-network view of the tree with an artificial root.
//!
//! With `λ > 0` the walk is the random walk of the network whose edge between
//! `x` and its parent has conductance `λ^{−|x|}` (the edge `{e★, e}` gets 1).
//! Because `π(e★) = 1`, the effective conductance between `e★` and generation
//! `n` equals the escape probability `β_n(e)`.

use crate::error::{Error, Result};
use crate::tree::{QuenchedTree, VertexId};

/// Below this bias the series-parallel reduction runs on log-resistances;
/// conductances `λ^{−k}` overflow quickly for small λ.
pub const LOG_SPACE_BELOW: f64 = 0.1;

/// Edge weights of `(𝕋★, c₀)` truncated at generation `level`.
#[derive(Debug, Clone)]
pub struct WeightedTreeNetwork<'a> {
    tree: &'a QuenchedTree,
    pub level: u32,
    pub lambda: f64,
    /// `log c` of the edge from each vertex to its parent (NaN for `e★` and
    /// for vertices below the truncation level).
    pub log_edge_conductance: Vec<f64>,
}

impl<'a> WeightedTreeNetwork<'a> {
    /// Conductance of the edge joining `v` to its parent.
    pub fn edge_conductance(&self, v: VertexId) -> f64 {
        self.log_edge_conductance[v as usize].exp()
    }

    /// `π(v)`: total conductance of the edges at `v` inside the truncated network.
    pub fn pi(&self, v: VertexId) -> f64 {
        let tree = self.tree;
        if Some(v) == tree.star_root() {
            return self.edge_conductance(tree.root());
        }
        let mut total = self.edge_conductance(v);
        if tree.depth(v) < self.level as i32 {
            if let Some(children) = tree.children(v) {
                total += children.map(|c| self.edge_conductance(c)).sum::<f64>();
            }
        }
        total
    }

    pub fn tree(&self) -> &QuenchedTree {
        self.tree
    }
}

fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Assigns `c₀` on a tree that carries `e★` and is materialised to `n`.
pub fn build_conductances(
    tree: &QuenchedTree,
    lambda: f64,
    n: u32,
) -> Result<WeightedTreeNetwork<'_>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::unsupported(format!(
            "conductances need lambda > 0, got {lambda}"
        )));
    }
    let star = tree
        .star_root()
        .ok_or_else(|| Error::invalid("network needs the artificial root e*"))?;
    if !tree.is_materialized_to(n) {
        return Err(Error::invalid(format!("tree is not materialised down to depth {n}")));
    }
    let log_lambda = lambda.ln();
    let log_edge_conductance = (0..tree.len() as VertexId)
        .map(|v| {
            let d = tree.depth(v);
            if v == star || d > n as i32 {
                f64::NAN
            } else if d == 0 {
                0.0
            } else {
                -(d as f64) * log_lambda
            }
        })
        .collect();
    Ok(WeightedTreeNetwork {
        tree,
        level: n,
        lambda,
        log_edge_conductance,
    })
}

/// Effective conductance between `e★` and generation `n ≤ net.level`, by
/// series-parallel reduction: `R(x) = 0` on generation `n`, otherwise
/// `R(x) = 1 / Σ_i 1/(1/c(x, xi) + R(xi))`; the answer is `1/(1/c(e★, e) + R(e))`.
pub fn effective_conductance_to_level(net: &WeightedTreeNetwork<'_>, n: u32) -> Result<f64> {
    if n > net.level {
        return Err(Error::invalid(format!(
            "level {n} lies below the network truncation {}",
            net.level
        )));
    }
    if net.lambda < LOG_SPACE_BELOW {
        Ok(conductance_log_space(net, n))
    } else {
        Ok(conductance_direct(net, n))
    }
}

fn conductance_direct(net: &WeightedTreeNetwork<'_>, n: u32) -> f64 {
    let tree = net.tree;
    let mut resistance = vec![0.0; tree.len()];
    for v in (0..tree.len() as VertexId).rev() {
        let d = tree.depth(v);
        if Some(v) == tree.star_root() || d >= n as i32 {
            continue;
        }
        let conductance: f64 = tree
            .children(v)
            .expect("materialised")
            .map(|c| 1.0 / (1.0 / net.edge_conductance(c) + resistance[c as usize]))
            .sum();
        resistance[v as usize] = 1.0 / conductance;
    }
    1.0 / (1.0 / net.edge_conductance(tree.root()) + resistance[tree.root() as usize])
}

fn conductance_log_space(net: &WeightedTreeNetwork<'_>, n: u32) -> f64 {
    let tree = net.tree;
    let mut log_r = vec![f64::NEG_INFINITY; tree.len()];
    for v in (0..tree.len() as VertexId).rev() {
        let d = tree.depth(v);
        if Some(v) == tree.star_root() || d >= n as i32 {
            continue;
        }
        // log Σ_i exp(−log(r_i + R_i)), with log r_i = −log c_i.
        let log_cond = tree
            .children(v)
            .expect("materialised")
            .map(|c| -logaddexp(-net.log_edge_conductance[c as usize], log_r[c as usize]))
            .fold(f64::NEG_INFINITY, logaddexp);
        log_r[v as usize] = -log_cond;
    }
    let root = tree.root() as usize;
    (-logaddexp(-net.log_edge_conductance[root], log_r[root])).exp()
}

/// Effective conductance of the `d`-ary tree truncated at depth `n`
/// (equal to `β_n(e)` on that tree). The level structure collapses the
/// reduction to `R_k = (λ^{k+1} + R_{k+1}) / d`.
pub fn regular_effective_conductance(d: u32, lambda: f64, n: u32) -> Result<f64> {
    if d == 0 {
        return Err(Error::invalid("regular tree needs degree >= 1"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let mut r = 0.0;
    for k in (0..n).rev() {
        r = (lambda.powi(k as i32 + 1) + r) / d as f64;
    }
    Ok(1.0 / (1.0 + r))
}

/// Conductances of the `m₁`-ary truncation, the tree itself and the
/// `m₂`-ary truncation; Rayleigh monotonicity orders them.
pub fn conductance_sandwich(tree: &QuenchedTree, lambda: f64, n: u32) -> Result<(f64, f64, f64)> {
    let dist = tree.distribution();
    if dist.has_leaves() {
        return Err(Error::unsupported("sandwich needs a leafless offspring law"));
    }
    let mid = match tree.star_root() {
        Some(_) => effective_conductance_to_level(&build_conductances(tree, lambda, n)?, n)?,
        None => {
            let mut starred = tree.clone();
            starred.attach_star_root()?;
            effective_conductance_to_level(&build_conductances(&starred, lambda, n)?, n)?
        }
    };
    let low = regular_effective_conductance(dist.min_degree(), lambda, n)?;
    let high = regular_effective_conductance(dist.max_degree(), lambda, n)?;
    let slack = 1e-12 * high.abs().max(1.0);
    if low > mid + slack || mid > high + slack {
        return Err(Error::Internal(format!(
            "Rayleigh ordering violated: {low} <= {mid} <= {high}"
        )));
    }
    Ok((low, mid, high))
}

/// `U(x, y | z)` on the `(d+1)`-regular tree: the generating function of the
/// first hitting time of the parent `y` from `x`, in the cancellation-free form
/// `2λz / ((λ+d) + √((λ+d)² − 4dλz²))`.
pub fn regular_return_gf(d: u32, lambda: f64, z: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::invalid("degree must be >= 1"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if !(z > 0.0 && z <= 1.0) {
        return Err(Error::invalid(format!("z must lie in (0, 1], got {z}")));
    }
    let d = d as f64;
    if z == 1.0 {
        return Ok(lambda.min(d) / d);
    }
    let s = lambda + d;
    Ok(2.0 * lambda * z / (s + (s * s - 4.0 * d * lambda * z * z).sqrt()))
}

/// Probability `1 − (λ∧d)/d` that the walk from a non-root vertex of the
/// `(d+1)`-regular tree never hits its parent.
pub fn regular_escape_probability(d: u32, lambda: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::invalid("degree must be >= 1"));
    }
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    let d = d as f64;
    Ok(1.0 - lambda.min(d) / d)
}
