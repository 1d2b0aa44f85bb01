//! Finite-support offspring laws and their scalar characteristics.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::sig;

/// Tolerance on `Σ p_k = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Default stopping tolerance of the extinction fixed-point iteration.
pub const EXTINCTION_TOL: f64 = 1e-12;
const EXTINCTION_MAX_ITER: usize = 1_000_000;

/// Offspring law `ν` with finitely many atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringDistribution {
    /// `(k, p_k)` sorted by `k`, all `p_k > 0`.
    entries: Vec<(u32, f64)>,
    cdf: Vec<f64>,
    mean: f64,
}

/// JSON form `{"pmf": {"2": 0.5, "3": 0.5}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PmfJson {
    pub pmf: BTreeMap<String, f64>,
}

impl OffspringDistribution {
    pub fn new(entries: &[(i64, f64)]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("empty offspring distribution"));
        }
        let mut map = BTreeMap::new();
        for &(k, p) in entries {
            if k < 0 {
                return Err(Error::invalid(format!("negative offspring count {k}")));
            }
            if k > u32::MAX as i64 {
                return Err(Error::invalid(format!("offspring count {k} too large")));
            }
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::invalid(format!(
                    "probability of {k} must lie in (0, 1], got {}",
                    sig(p)
                )));
            }
            if map.insert(k as u32, p).is_some() {
                return Err(Error::invalid(format!("duplicate offspring count {k}")));
            }
        }
        let total: f64 = map.values().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid(format!("probabilities sum to {}", sig(total))));
        }
        let entries: Vec<(u32, f64)> = map.into_iter().collect();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = entries
            .iter()
            .map(|&(_, p)| {
                acc += p;
                acc
            })
            .collect();
        // Guard against the last cumulative value falling just short of 1.
        *cdf.last_mut().unwrap() = f64::INFINITY;
        let mean = entries.iter().map(|&(k, p)| k as f64 * p).sum();
        Ok(Self { entries, cdf, mean })
    }

    /// Point mass at `d` (the `d`-ary regular tree).
    pub fn regular(d: u32) -> Self {
        Self::new(&[(d as i64, 1.0)]).expect("point mass is valid")
    }

    /// Parses the text form `"k:p,k:p,..."`.
    pub fn parse_pmf(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, p) = item
                .split_once(':')
                .ok_or_else(|| Error::invalid(format!("expected k:p, got {item:?}")))?;
            let k: i64 = k
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad offspring count {k:?}")))?;
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad probability {p:?}")))?;
            entries.push((k, p));
        }
        Self::new(&entries)
    }

    pub fn from_pmf_map(pmf: &BTreeMap<String, f64>) -> Result<Self> {
        let entries = pmf
            .iter()
            .map(|(k, &p)| {
                k.trim()
                    .parse::<i64>()
                    .map(|k| (k, p))
                    .map_err(|_| Error::invalid(format!("bad offspring count {k:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&entries)
    }

    /// Parses `{"pmf": {"2": 0.5, "3": 0.5}}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: PmfJson =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("bad pmf JSON: {e}")))?;
        Self::from_pmf_map(&parsed.pmf)
    }

    pub fn to_json(&self) -> PmfJson {
        PmfJson {
            pmf: self
                .entries
                .iter()
                .map(|&(k, p)| (k.to_string(), p))
                .collect(),
        }
    }

    pub fn to_pmf_string(&self) -> String {
        self.entries
            .iter()
            .map(|&(k, p)| format!("{k}:{p}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn prob(&self, k: u32) -> f64 {
        self.entries
            .iter()
            .find(|&&(j, _)| j == k)
            .map_or(0.0, |&(_, p)| p)
    }

    /// `m = E ν`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Smallest support point `m₁`.
    pub fn min_degree(&self) -> u32 {
        self.entries[0].0
    }

    /// Largest support point `m₂` (always finite here).
    pub fn max_degree(&self) -> u32 {
        self.entries[self.entries.len() - 1].0
    }

    pub fn has_leaves(&self) -> bool {
        self.min_degree() == 0
    }

    pub fn is_supercritical(&self) -> bool {
        self.mean > 1.0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.gen();
        let i = self.cdf.iter().position(|&c| u < c).unwrap_or(self.cdf.len() - 1);
        self.entries[i].0
    }

    /// Probability generating function `f(s) = Σ p_k s^k` on `[0, 1]`.
    pub fn pgf(&self, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::invalid(format!("pgf argument {} outside [0, 1]", sig(s))));
        }
        Ok(self.pgf_unchecked(s))
    }

    fn pgf_unchecked(&self, s: f64) -> f64 {
        self.entries.iter().map(|&(k, p)| p * s.powi(k as i32)).sum()
    }

    /// Extinction probability `q`, the smallest fixed point of the PGF.
    ///
    /// Iterates `s ← f(s)` from `s = 0`; the iterates increase to the smallest
    /// fixed point. Stops once successive iterates differ by less than `tol`.
    pub fn extinction_probability(&self, tol: f64) -> Result<f64> {
        if !self.is_supercritical() {
            return Err(Error::unsupported(format!(
                "extinction probability requires m > 1, got m = {}",
                sig(self.mean)
            )));
        }
        if !self.has_leaves() {
            return Ok(0.0);
        }
        let mut s = 0.0;
        for _ in 0..EXTINCTION_MAX_ITER {
            let next = self.pgf_unchecked(s);
            if (next - s).abs() < tol {
                return Ok(next);
            }
            s = next;
        }
        Ok(s)
    }

    /// Upper end `m₁ / (1 + √(1 − 1/m₁))` of the range where the speed is
    /// known to be strictly decreasing.
    pub fn monotonicity_threshold(&self) -> Result<f64> {
        monotonicity_threshold_for(self.min_degree())
    }

    /// The interval `(E[ν q^{ν−1}], m)` of biases with positive deterministic speed.
    pub fn positivity_window(&self) -> Result<(f64, f64)> {
        let q = self.extinction_probability(EXTINCTION_TOL)?;
        // powi(0) == 1 gives the 0⁰ = 1 convention for k = 1, q = 0.
        let low = self
            .entries
            .iter()
            .filter(|&&(k, _)| k > 0)
            .map(|&(k, p)| k as f64 * p * q.powi(k as i32 - 1))
            .sum();
        Ok((low, self.mean))
    }
}

/// `m₁ / (1 + √(1 − 1/m₁))` for a minimal degree `m₁ ≥ 2`.
pub fn monotonicity_threshold_for(min_degree: u32) -> Result<f64> {
    if min_degree < 2 {
        return Err(Error::unsupported(format!(
            "monotonicity threshold needs minimal degree >= 2, got {min_degree}"
        )));
    }
    let m1 = min_degree as f64;
    Ok(m1 / (1.0 + (1.0 - 1.0 / m1).sqrt()))
}
