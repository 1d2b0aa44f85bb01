//! Quenched simulation of the λ-biased walk.
//!
//! From a vertex `x` with `ν(x)` children the walk moves to the parent with
//! probability `λ/(λ+ν(x))` and to each child with `1/(λ+ν(x))`. On `𝕋` the
//! root has no parent and steps to a uniform child; on `𝕋★` the root's parent
//! is `e★`, and from `e★` the walk returns to `e`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::offspring::OffspringDistribution;
use crate::rng::{self, Domain, StreamRng};
use crate::stats::{binomial_sigma, mean_stderr};
use crate::tree::{QuenchedTree, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Graph {
    /// The Galton-Watson tree rooted at `e`.
    #[serde(rename = "T")]
    Tree,
    /// The same tree with the artificial parent `e★` above `e`.
    #[serde(rename = "T_star")]
    StarTree,
}

impl Graph {
    pub fn label(self) -> &'static str {
        match self {
            Graph::Tree => "T",
            Graph::StarTree => "T_star",
        }
    }
}

impl std::str::FromStr for Graph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" | "t" | "tree" => Ok(Graph::Tree),
            "T_star" | "tstar" | "t_star" | "star" => Ok(Graph::StarTree),
            _ => Err(Error::invalid(format!("unknown graph {s:?} (expected T or T_star)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WalkState {
    pub position: VertexId,
    pub steps: u64,
    pub rng: StreamRng,
}

impl WalkState {
    pub fn at_root(tree: &QuenchedTree, rng: StreamRng) -> Self {
        Self {
            position: tree.root(),
            steps: 0,
            rng,
        }
    }
}

/// Picks among `parent` (weight λ) and `k` children (weight 1 each).
/// Returns `None` for the parent, `Some(i)` for child `i`.
#[inline]
fn choose(rng: &mut StreamRng, lambda: f64, k: u32) -> Option<u32> {
    let u = rng.gen::<f64>() * (lambda + k as f64);
    if u < lambda {
        None
    } else {
        Some(((u - lambda) as u32).min(k - 1))
    }
}

/// One step of the walk; children are drawn lazily on first visit.
///
/// On [`Graph::StarTree`] the tree must carry `e★`.
pub fn transition_step(
    tree: &mut QuenchedTree,
    state: &mut WalkState,
    lambda: f64,
    graph: Graph,
) {
    let x = state.position;
    state.steps += 1;
    if Some(x) == tree.star_root() {
        state.position = tree.root();
        return;
    }
    let children = tree.ensure_children(x);
    let k = children.len() as u32;
    let has_parent = x != tree.root() || graph == Graph::StarTree;
    if k == 0 {
        // Only reachable with leaves; stay put at a leaf of `𝕋`'s root.
        if has_parent && lambda > 0.0 {
            state.position = tree.parent(x).expect("parent");
        }
        return;
    }
    if !has_parent {
        state.position = children.start + state.rng.gen_range(0..k);
        return;
    }
    state.position = match choose(&mut state.rng, lambda, k) {
        None => tree.parent(x).expect("star root attached"),
        Some(i) => children.start + i,
    };
}

/// The kernel row `p(x, ·)` as `(neighbour, probability)` pairs.
pub fn transition_probabilities(
    tree: &mut QuenchedTree,
    x: VertexId,
    lambda: f64,
    graph: Graph,
) -> Vec<(VertexId, f64)> {
    if Some(x) == tree.star_root() {
        return vec![(tree.root(), 1.0)];
    }
    let children = tree.ensure_children(x);
    let k = children.len() as f64;
    if x == tree.root() && graph == Graph::Tree {
        return children.map(|c| (c, 1.0 / k)).collect();
    }
    let parent = tree.parent(x).expect("star root attached");
    std::iter::once((parent, lambda / (lambda + k)))
        .chain(children.map(|c| (c, 1.0 / (lambda + k))))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicaResult {
    pub replica: usize,
    pub final_depth: i64,
    pub steps: u64,
    pub speed: f64,
}

/// Monte Carlo estimate of the speed `lim |X_n|/n`.
#[derive(Debug, Clone, Serialize)]
pub struct SpeedEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub replicas: usize,
    pub steps_per_replica: u64,
    pub lambda: f64,
    pub graph: Graph,
    /// False when `λ ≥ m`: the walk is not transient and the estimate is
    /// reported without a guarantee.
    pub transient: bool,
    pub per_replica: Vec<ReplicaResult>,
}

impl SpeedEstimate {
    /// CSV with header `replica,final_depth,steps,speed`.
    pub fn write_replica_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["replica", "final_depth", "steps", "speed"])?;
        for r in &self.per_replica {
            w.write_record([
                r.replica.to_string(),
                r.final_depth.to_string(),
                r.steps.to_string(),
                crate::fmt::sig(r.speed),
            ])?;
        }
        w.flush()
    }
}

fn check_walk_args(dist: &OffspringDistribution, lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if dist.has_leaves() {
        return Err(Error::unsupported(
            "walk simulation needs an offspring law without leaves",
        ));
    }
    Ok(())
}

/// Runs `replicas` independent walks of `steps` steps, each on its own fresh
/// tree, and averages the terminal statistic `|X_steps| / steps`.
pub fn simulate_speed(
    dist: &OffspringDistribution,
    lambda: f64,
    steps: u64,
    replicas: usize,
    seed: u64,
    graph: Graph,
) -> Result<SpeedEstimate> {
    check_walk_args(dist, lambda)?;
    if steps == 0 {
        return Err(Error::invalid("steps must be >= 1"));
    }
    if replicas < 2 {
        return Err(Error::invalid("need at least 2 replicas for a standard error"));
    }
    let per_replica: Vec<ReplicaResult> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut tree = QuenchedTree::new(dist.clone(), rng::stream(seed, Domain::Tree, r as u64));
            if graph == Graph::StarTree {
                tree.attach_star_root().expect("fresh tree");
            }
            let mut state = WalkState::at_root(&tree, rng::stream(seed, Domain::Walk, r as u64));
            for _ in 0..steps {
                transition_step(&mut tree, &mut state, lambda, graph);
            }
            let depth = tree.depth(state.position) as i64;
            ReplicaResult {
                replica: r,
                final_depth: depth,
                steps,
                speed: depth as f64 / steps as f64,
            }
        })
        .collect();
    let speeds: Vec<f64> = per_replica.iter().map(|r| r.speed).collect();
    let (mean, stderr) = mean_stderr(&speeds);
    Ok(SpeedEstimate {
        mean,
        stderr,
        replicas,
        steps_per_replica: steps,
        lambda,
        graph,
        transient: lambda < dist.mean(),
        per_replica,
    })
}

/// Proportion estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HitEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub successes: usize,
    pub trials: usize,
}

pub enum HittingSource<'a> {
    /// One fixed tree; children beyond what is materialised are drawn lazily.
    Quenched(&'a mut QuenchedTree),
    /// A fresh tree for every trial.
    Annealed(&'a OffspringDistribution),
}

/// Walk on `𝕋★` from `e` until it reaches generation `n` (success) or `e★`.
fn hit_trial<F>(mut children: F, lambda: f64, n: u32, rng: &mut StreamRng) -> bool
where
    F: FnMut(VertexId) -> (std::ops::Range<VertexId>, Option<VertexId>, i32),
{
    let mut x: VertexId = 0;
    loop {
        let (kids, parent, depth) = children(x);
        if depth >= n as i32 {
            return true;
        }
        let k = kids.len() as u32;
        if k == 0 {
            if lambda == 0.0 {
                return false;
            }
            match parent {
                Some(p) => x = p,
                None => return false,
            }
            continue;
        }
        match choose(rng, lambda, k) {
            None => match parent {
                Some(p) => x = p,
                None => return false,
            },
            Some(i) => x = kids.start + i,
        }
    }
}

/// Monte Carlo estimate of `β_n(e)` (quenched) or `E β_n(e)` (annealed).
pub fn hitting_beta_mc(
    source: HittingSource<'_>,
    lambda: f64,
    n: u32,
    trials: usize,
    seed: u64,
) -> Result<HitEstimate> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if n == 0 {
        return Err(Error::invalid("target level must be >= 1"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let walk_rng = |t: usize| rng::stream(seed, Domain::HittingWalk, t as u64);
    let outcomes: Vec<bool> = match source {
        HittingSource::Quenched(tree) if tree.is_materialized_to(n) => {
            let tree: &QuenchedTree = tree;
            let root = tree.root();
            (0..trials)
                .into_par_iter()
                .map(|t| {
                    let look = |x: VertexId| {
                        let parent = if x == root { None } else { tree.parent(x) };
                        let kids = tree.children(x).unwrap_or(0..0);
                        (kids, parent, tree.depth(x))
                    };
                    hit_trial(look, lambda, n, &mut walk_rng(t))
                })
                .collect()
        }
        HittingSource::Quenched(tree) => {
            let root = tree.root();
            (0..trials)
                .map(|t| {
                    let look = |x: VertexId| {
                        let kids = if tree.depth(x) < n as i32 {
                            tree.ensure_children(x)
                        } else {
                            0..0
                        };
                        let parent = if x == root { None } else { tree.parent(x) };
                        (kids, parent, tree.depth(x))
                    };
                    hit_trial(look, lambda, n, &mut walk_rng(t))
                })
                .collect()
        }
        HittingSource::Annealed(dist) => (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut tree =
                    QuenchedTree::new(dist.clone(), rng::stream(seed, Domain::HittingTree, t as u64));
                let look = |x: VertexId| {
                    let kids = if tree.depth(x) < n as i32 {
                        tree.ensure_children(x)
                    } else {
                        0..0
                    };
                    (kids, tree.parent(x), tree.depth(x))
                };
                hit_trial(look, lambda, n, &mut walk_rng(t))
            })
            .collect(),
    };
    let successes = outcomes.iter().filter(|&&s| s).count();
    let p = successes as f64 / trials as f64;
    Ok(HitEstimate {
        estimate: p,
        stderr: binomial_sigma(p, trials),
        successes,
        trials,
    })
}

/// Speed on `𝕋` against speed on `𝕋★`, with independent seeds.
#[derive(Debug, Clone, Serialize)]
pub struct StartComparison {
    pub on_tree: SpeedEstimate,
    pub on_star_tree: SpeedEstimate,
    /// `|mean_T − mean_T★| / √(se_T² + se_T★²)`.
    pub z: f64,
}

pub fn lemma0_compare(
    dist: &OffspringDistribution,
    lambda: f64,
    steps: u64,
    replicas: usize,
    seed: u64,
) -> Result<StartComparison> {
    if lambda >= dist.mean() {
        return Err(Error::unsupported(
            "speed comparison needs lambda < m (transient regime)",
        ));
    }
    let on_tree = simulate_speed(dist, lambda, steps, replicas, seed, Graph::Tree)?;
    let on_star_tree = simulate_speed(
        dist,
        lambda,
        steps,
        replicas,
        rng::derive_seed(seed, 1),
        Graph::StarTree,
    )?;
    let diff = (on_tree.mean - on_star_tree.mean).abs();
    let se = on_tree.stderr.hypot(on_star_tree.stderr);
    let z = if se == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / se
    };
    Ok(StartComparison {
        on_tree,
        on_star_tree,
        z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary() -> OffspringDistribution {
        OffspringDistribution::regular(2)
    }

    #[test]
    fn kernel_rows() {
        let dist = OffspringDistribution::parse_pmf("2:0.5,3:0.5").unwrap();
        let mut t = QuenchedTree::new(dist, rng::stream(1, Domain::Tree, 0));
        t.attach_star_root().unwrap();
        let c = t.ensure_children(0).start;
        let g = t.ensure_children(c).start;
        for &lambda in &[0.0, 0.5, 1.0, 2.5] {
            for graph in [Graph::Tree, Graph::StarTree] {
                for v in [0, c, g, t.star_root().unwrap()] {
                    let row = transition_probabilities(&mut t, v, lambda, graph);
                    let total: f64 = row.iter().map(|r| r.1).sum();
                    assert!((total - 1.0).abs() < 1e-15);
                }
            }
        }
        let mut b = QuenchedTree::new(binary(), rng::stream(1, Domain::Tree, 0));
        let x = b.ensure_children(0).start;
        let row = transition_probabilities(&mut b, x, 1.0, Graph::Tree);
        assert_eq!(row.len(), 3);
        assert!(row.iter().all(|r| (r.1 - 1.0 / 3.0).abs() < 1e-15));
        let row = transition_probabilities(&mut b, x, 0.0, Graph::Tree);
        assert_eq!(row[0], (0, 0.0));
        assert!(row[1..].iter().all(|r| r.1 == 0.5));
        let three = OffspringDistribution::regular(3);
        let mut r = QuenchedTree::new(three, rng::stream(1, Domain::Tree, 0));
        let row = transition_probabilities(&mut r, 0, 1.0, Graph::Tree);
        assert_eq!(row.len(), 3);
        assert!(row.iter().all(|r| (r.1 - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn step_frequencies_follow_kernel() {
        let mut t = QuenchedTree::new(binary(), rng::stream(2, Domain::Tree, 0));
        let x = t.ensure_children(0).start;
        let kids = t.ensure_children(x);
        let mut counts = [0usize; 3];
        let n = 60_000;
        let mut state = WalkState::at_root(&t, rng::stream(2, Domain::Walk, 0));
        for _ in 0..n {
            state.position = x;
            transition_step(&mut t, &mut state, 1.0, Graph::Tree);
            let slot = if state.position == 0 {
                0
            } else {
                (state.position - kids.start + 1) as usize
            };
            counts[slot] += 1;
        }
        for c in counts {
            let f = c as f64 / n as f64;
            assert!((f - 1.0 / 3.0).abs() < 4.0 * binomial_sigma(1.0 / 3.0, n));
        }
    }

    #[test]
    fn quenched_environment_is_stable_under_revisits() {
        let dist = OffspringDistribution::parse_pmf("1:0.3,2:0.4,5:0.3").unwrap();
        let mut t = QuenchedTree::new(dist, rng::stream(5, Domain::Tree, 0));
        let mut state = WalkState::at_root(&t, rng::stream(5, Domain::Walk, 0));
        let mut seen = std::collections::HashMap::new();
        for _ in 0..20_000 {
            transition_step(&mut t, &mut state, 1.5, Graph::Tree);
            let k = t.ensure_children(state.position);
            assert_eq!(*seen.entry(state.position).or_insert(k.clone()), k);
        }
    }

    #[test]
    fn zero_bias_never_backtracks() {
        for pmf in ["2:1", "2:0.5,3:0.5", "1:0.5,4:0.5"] {
            let dist = OffspringDistribution::parse_pmf(pmf).unwrap();
            for graph in [Graph::Tree, Graph::StarTree] {
                let est = simulate_speed(&dist, 0.0, 500, 4, 3, graph).unwrap();
                assert_eq!(est.mean, 1.0);
                assert_eq!(est.stderr, 0.0);
            }
        }
    }

    #[test]
    fn speed_is_reproducible_and_flags_recurrence() {
        let a = simulate_speed(&binary(), 1.0, 2000, 4, 9, Graph::Tree).unwrap();
        let b = simulate_speed(&binary(), 1.0, 2000, 4, 9, Graph::Tree).unwrap();
        assert_eq!(a.per_replica, b.per_replica);
        assert!(a.transient);
        let r = simulate_speed(&binary(), 2.5, 200, 2, 9, Graph::StarTree).unwrap();
        assert!(!r.transient);
        assert!(simulate_speed(&binary(), 1.0, 100, 1, 9, Graph::Tree).is_err());
        let leafy = OffspringDistribution::parse_pmf("0:0.2,3:0.8").unwrap();
        assert!(simulate_speed(&leafy, 1.0, 100, 2, 9, Graph::Tree).is_err());
    }

    #[test]
    fn replica_csv() {
        let est = simulate_speed(&binary(), 0.0, 10, 2, 0, Graph::Tree).unwrap();
        let mut buf = Vec::new();
        est.write_replica_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "replica,final_depth,steps,speed\n0,10,10,1\n1,10,10,1\n"
        );
    }

    #[test]
    fn hitting_at_zero_bias_is_certain() {
        let dist = OffspringDistribution::parse_pmf("2:0.5,3:0.5").unwrap();
        let est = hitting_beta_mc(HittingSource::Annealed(&dist), 0.0, 5, 500, 1).unwrap();
        assert_eq!(est.estimate, 1.0);
        let mut t = QuenchedTree::sample_truncated(&dist, 5, 1);
        let est = hitting_beta_mc(HittingSource::Quenched(&mut t), 0.0, 5, 500, 1).unwrap();
        assert_eq!(est.estimate, 1.0);
    }

    #[test]
    fn lazy_and_materialised_quenched_hitting() {
        // Both against the exact binary-tree values.
        let mut t = QuenchedTree::sample_truncated(&binary(), 1, 0);
        let est = hitting_beta_mc(HittingSource::Quenched(&mut t), 1.0, 1, 20_000, 4).unwrap();
        assert!((est.estimate - 2.0 / 3.0).abs() < 3.0 * binomial_sigma(2.0 / 3.0, 20_000));
        let mut lazy = QuenchedTree::new(binary(), rng::stream(0, Domain::Tree, 0));
        let est = hitting_beta_mc(HittingSource::Quenched(&mut lazy), 1.0, 3, 20_000, 4).unwrap();
        let exact = 8.0 / 15.0; // β_3 on the binary tree at λ = 1
        assert!((est.estimate - exact).abs() < 3.0 * binomial_sigma(exact, 20_000));
    }

    #[test]
    fn start_comparison_degenerate_case() {
        let cmp = lemma0_compare(&binary(), 0.0, 100, 4, 1).unwrap();
        assert_eq!(cmp.z, 0.0);
        assert!(lemma0_compare(&binary(), 2.0, 100, 4, 1).is_err());
    }
}
