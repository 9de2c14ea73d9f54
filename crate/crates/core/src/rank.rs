//! PageRank and personalized PageRank over an undirected graph.
//!
//! Each undirected edge counts as two directed links, so a node's out-degree
//! is its degree. The teleport term is `(1 - d) * r_u` where `r` is uniform
//! (`1/n`) for plain PageRank and the preference vector otherwise; dangling
//! nodes spread their mass uniformly over all nodes. The resulting scores
//! always sum to one.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::{round_sig, Scalar};

/// Dense direct solves are limited to this many nodes.
pub const DIRECT_SOLVE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankConfig<T> {
    pub damping: T,
    pub tolerance: T,
    pub max_iterations: usize,
}

impl<T: Scalar> Default for RankConfig<T> {
    fn default() -> Self {
        Self {
            damping: T::lit(0.85),
            tolerance: T::default_tolerance(),
            max_iterations: 10_000,
        }
    }
}

impl<T: Scalar> RankConfig<T> {
    pub fn with_damping(damping: T) -> Self {
        Self {
            damping,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.damping > T::zero() && self.damping < T::one()) {
            return Err(Error::InvalidParams(format!(
                "damping must lie in (0, 1), got {}",
                self.damping
            )));
        }
        if !(self.tolerance > T::zero()) {
            return Err(Error::InvalidParams("tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankVector<T> {
    pub scores: Vec<T>,
    pub damping: T,
    pub personalization: Option<Vec<T>>,
    pub iterations_used: usize,
    pub residual: T,
}

impl<T: Scalar> RankVector<T> {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn sum(&self) -> T {
        self.scores.iter().copied().sum()
    }

    pub fn to_json(&self) -> RankJson {
        let sig = |v: &T| round_sig(v.as_f64(), 12);
        RankJson {
            d: round_sig(self.damping.as_f64(), 12),
            scores: self.scores.iter().map(sig).collect(),
            personalization: self
                .personalization
                .as_ref()
                .map(|p| p.iter().map(sig).collect()),
        }
    }
}

impl<T> std::ops::Index<usize> for RankVector<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.scores[i]
    }
}

/// `{ "d": real, "scores": [...], "personalization": [...] | null }`,
/// values rounded to 12 significant digits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankJson {
    pub d: f64,
    pub scores: Vec<f64>,
    pub personalization: Option<Vec<f64>>,
}

pub fn pagerank<T: Scalar>(g: &Graph, cfg: &RankConfig<T>) -> Result<RankVector<T>> {
    let n = nonempty(g)?;
    let uniform = vec![T::one() / T::from_count(n); n];
    let (scores, iterations_used, residual) = power_iterate(g, &uniform, cfg)?;
    Ok(RankVector {
        scores,
        damping: cfg.damping,
        personalization: None,
        iterations_used,
        residual,
    })
}

/// Personalized PageRank. `preference` must be non-negative with a positive
/// sum; it is normalized to sum to one.
pub fn personalized_pagerank<T: Scalar>(
    g: &Graph,
    preference: &[T],
    cfg: &RankConfig<T>,
) -> Result<RankVector<T>> {
    nonempty(g)?;
    let r = normalize_preference(g, preference)?;
    let (scores, iterations_used, residual) = power_iterate(g, &r, cfg)?;
    Ok(RankVector {
        scores,
        damping: cfg.damping,
        personalization: Some(r),
        iterations_used,
        residual,
    })
}

/// Indicator preference vector `r_node = 1`, zero elsewhere.
pub fn indicator<T: Scalar>(n: usize, node: usize) -> Vec<T> {
    let mut r = vec![T::zero(); n];
    r[node] = T::one();
    r
}

fn nonempty(g: &Graph) -> Result<usize> {
    match g.node_count() {
        0 => Err(Error::InvalidParams("graph has no nodes".into())),
        n => Ok(n),
    }
}

fn normalize_preference<T: Scalar>(g: &Graph, preference: &[T]) -> Result<Vec<T>> {
    let n = g.node_count();
    if preference.len() != n {
        return Err(Error::InvalidPreference(format!(
            "expected {n} weights, got {}",
            preference.len()
        )));
    }
    if let Some((i, w)) = preference
        .iter()
        .enumerate()
        .find(|(_, w)| !w.is_finite() || **w < T::zero())
    {
        return Err(Error::InvalidPreference(format!("weight {w} for node {i}")));
    }
    let total: T = preference.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::InvalidPreference("weights sum to zero".into()));
    }
    Ok(preference.iter().map(|&w| w / total).collect())
}

fn power_iterate<T: Scalar>(
    g: &Graph,
    teleport: &[T],
    cfg: &RankConfig<T>,
) -> Result<(Vec<T>, usize, T)> {
    cfg.validate()?;
    let n = g.node_count();
    let d = cfg.damping;
    let inv_n = T::one() / T::from_count(n);
    let inv_deg: Vec<T> = g
        .degrees()
        .into_iter()
        .map(|k| if k == 0 { T::zero() } else { T::one() / T::from_count(k) })
        .collect();

    let mut x = vec![inv_n; n];
    let mut next = vec![T::zero(); n];
    let mut residual = T::infinity();
    for it in 1..=cfg.max_iterations {
        let dangling: T = (0..n)
            .filter(|&v| g.degree(v) == 0)
            .map(|v| x[v])
            .sum();
        let spread = dangling * inv_n;
        for (u, slot) in next.iter_mut().enumerate() {
            let inflow: T = g.neighbors(u).iter().map(|&v| x[v] * inv_deg[v]).sum();
            *slot = (T::one() - d) * teleport[u] + d * (inflow + spread);
        }
        residual = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (*a - *b).abs())
            .sum();
        std::mem::swap(&mut x, &mut next);
        if residual < cfg.tolerance {
            return Ok((x, it, residual));
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iterations,
        residual: residual.as_f64(),
    })
}

/// Solves `(I - d M) x = (1 - d) r` by Gaussian elimination, where `M` is the
/// column-stochastic transition matrix (dangling columns uniform). Intended
/// as a cross-check of the iterative solvers on small graphs.
pub fn solve_rank_direct<T: Scalar>(
    g: &Graph,
    preference: Option<&[T]>,
    damping: T,
) -> Result<RankVector<T>> {
    let n = nonempty(g)?;
    if n > DIRECT_SOLVE_LIMIT {
        return Err(Error::TooLarge {
            what: "direct solve",
            got: n,
            limit: DIRECT_SOLVE_LIMIT,
        });
    }
    RankConfig {
        damping,
        ..RankConfig::default()
    }
    .validate()?;
    let r = match preference {
        Some(p) => normalize_preference(g, p)?,
        None => vec![T::one() / T::from_count(n); n],
    };

    // Row-major augmented matrix [A | b].
    let w = n + 1;
    let mut a = vec![T::zero(); n * w];
    for u in 0..n {
        a[u * w + u] = T::one();
        a[u * w + n] = (T::one() - damping) * r[u];
    }
    for v in 0..n {
        let k = g.degree(v);
        if k == 0 {
            let share = damping / T::from_count(n);
            for u in 0..n {
                a[u * w + v] = a[u * w + v] - share;
            }
        } else {
            let share = damping / T::from_count(k);
            for &u in g.neighbors(v) {
                a[u * w + v] = a[u * w + v] - share;
            }
        }
    }

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i * w + col]
                    .abs()
                    .partial_cmp(&a[j * w + col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("non-empty range");
        if a[pivot * w + col].abs() <= T::epsilon() {
            return Err(Error::SingularSystem);
        }
        if pivot != col {
            for c in 0..w {
                a.swap(pivot * w + c, col * w + c);
            }
        }
        let p = a[col * w + col];
        for row in col + 1..n {
            let f = a[row * w + col] / p;
            if f == T::zero() {
                continue;
            }
            for c in col..w {
                a[row * w + c] = a[row * w + c] - f * a[col * w + c];
            }
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = a[row * w + n];
        for c in row + 1..n {
            acc = acc - a[row * w + c] * x[c];
        }
        x[row] = acc / a[row * w + row];
    }

    let residual = fixed_point_residual(g, &x, &r, damping);
    Ok(RankVector {
        scores: x,
        damping,
        personalization: preference.map(|_| r),
        iterations_used: 0,
        residual,
    })
}

/// L1 norm of `x - ((1 - d) r + d M x)`.
pub fn fixed_point_residual<T: Scalar>(g: &Graph, x: &[T], r: &[T], d: T) -> T {
    let n = g.node_count();
    let inv_n = T::one() / T::from_count(n);
    let dangling: T = (0..n).filter(|&v| g.degree(v) == 0).map(|v| x[v]).sum();
    (0..n)
        .map(|u| {
            let inflow: T = g
                .neighbors(u)
                .iter()
                .map(|&v| x[v] / T::from_count(g.degree(v)))
                .sum();
            (x[u] - ((T::one() - d) * r[u] + d * (inflow + dangling * inv_n))).abs()
        })
        .sum()
}
