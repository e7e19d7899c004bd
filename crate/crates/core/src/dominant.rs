//! Dominant-set extraction: internally coherent, externally separated node
//! groups found by replicator dynamics on the standard simplex.
//!
//! For a nonnegative symmetric zero-diagonal weight matrix `A`, the dynamics
//! `x <- x .* (A x) / (x' A x)` climbs the cohesiveness `f(x) = x' A x`; the
//! support of a converged point is a dominant set. Peeling extracted sets off
//! and re-running on the remainder yields a seed clustering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SimilarityGraph;

/// Parameters for one extraction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominantSetConfig {
    /// L1 convergence threshold on the strategy vector.
    pub tol: f64,
    pub max_iters: usize,
    /// Membership cutoff; `None` selects `1 / (10 * active_count)`.
    pub support_threshold: Option<f64>,
    /// Exhaustive peeling stops once extractions fall below this
    /// cohesiveness and the remainder becomes singletons.
    pub min_cohesiveness: f64,
}

impl Default for DominantSetConfig {
    fn default() -> Self {
        Self { tol: 1e-7, max_iters: 10_000, support_threshold: None, min_cohesiveness: 1e-9 }
    }
}

/// One extracted dominant set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominantSet {
    /// Member node ids, in ascending order.
    pub members: Vec<usize>,
    /// Participation weight of each member (the converged strategy mass).
    pub weights: Vec<f64>,
    /// Final value of `x' A x`.
    pub cohesiveness: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl DominantSet {
    fn singleton(node: usize) -> Self {
        Self {
            members: vec![node],
            weights: vec![1.0],
            cohesiveness: 0.0,
            iterations: 0,
            converged: true,
        }
    }
}

/// How peeling terminates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    /// Extract exactly this many clusters; the rest becomes residual.
    FirstK(usize),
    /// Peel until every node is covered; incoherent leftovers become
    /// singleton clusters and the residual is empty.
    Exhaustive,
}

/// Result of a peel-off pass: disjoint clusters plus uncovered residual.
/// Cluster supports never overlap, and their union plus the residual is the
/// whole node set.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedClustering {
    pub clusters: Vec<DominantSet>,
    pub residual: Vec<usize>,
}

impl SeedClustering {
    /// Total documents covered by clusters.
    pub fn covered(&self) -> usize {
        self.clusters.iter().map(|c| c.members.len()).sum()
    }
}

/// Runs replicator dynamics from the barycenter of the active set and returns
/// the support of the converged strategy as a dominant set.
///
/// A single active node is degenerate and comes back as a singleton with zero
/// cohesiveness. A multi-node active set with no internal edges has nothing
/// to climb and errors with [`Error::NoCohesiveStructure`].
pub fn extract_dominant_set(
    g: &SimilarityGraph,
    active: &[usize],
    cfg: &DominantSetConfig,
) -> Result<DominantSet> {
    if active.is_empty() {
        return Err(Error::EmptyActiveSet);
    }
    let m = active.len();
    if m == 1 {
        return Ok(DominantSet::singleton(active[0]));
    }
    let w = g.weights();
    // sub-adjacency over the active nodes
    let mut a = vec![0.0; m * m];
    for (r, &i) in active.iter().enumerate() {
        for (c, &j) in active.iter().enumerate() {
            a[r * m + c] = w[(i, j)];
        }
    }
    let mut x = vec![1.0 / m as f64; m];
    let mut y = vec![0.0; m];
    let mut f: f64;
    let mut iterations = 0;
    let mut converged = false;
    for it in 0..cfg.max_iters {
        // y = A x, f = x' A x
        for r in 0..m {
            let row = &a[r * m..(r + 1) * m];
            y[r] = row.iter().zip(&x).map(|(w, xv)| w * xv).sum();
        }
        f = x.iter().zip(&y).map(|(xv, yv)| xv * yv).sum();
        if f <= 0.0 {
            // Nonnegative weights make f nonnegative, and the barycenter of a
            // set with any internal edge gives f > 0; zero means no structure.
            return Err(Error::NoCohesiveStructure);
        }
        let mut l1 = 0.0;
        for r in 0..m {
            let next = x[r] * y[r] / f;
            l1 += (next - x[r]).abs();
            x[r] = next;
        }
        iterations = it + 1;
        if l1 < cfg.tol {
            converged = true;
            break;
        }
    }
    // Final cohesiveness at the point we stopped on.
    for r in 0..m {
        let row = &a[r * m..(r + 1) * m];
        y[r] = row.iter().zip(&x).map(|(w, xv)| w * xv).sum();
    }
    f = x.iter().zip(&y).map(|(xv, yv)| xv * yv).sum();

    let threshold = cfg.support_threshold.unwrap_or(1.0 / (10.0 * m as f64));
    let mut members = Vec::new();
    let mut weights = Vec::new();
    for r in 0..m {
        if x[r] > threshold {
            members.push(active[r]);
            weights.push(x[r]);
        }
    }
    debug_assert!(!members.is_empty(), "max strategy mass always exceeds the default cutoff");
    Ok(DominantSet { members, weights, cohesiveness: f, iterations, converged })
}

/// Repeatedly extracts dominant sets, removing each support before the next
/// round.
///
/// With [`StopRule::FirstK`] exactly `k` clusters come back and the leftover
/// nodes form the residual; fewer extractable clusters is an error reporting
/// how many succeeded. With [`StopRule::Exhaustive`] peeling continues until
/// the graph is exhausted; when no cohesive structure remains (or extraction
/// drops below `min_cohesiveness`) the leftover nodes are returned as
/// singleton clusters, so the residual is always empty.
pub fn peel_off(
    g: &SimilarityGraph,
    stop: StopRule,
    cfg: &DominantSetConfig,
) -> Result<SeedClustering> {
    let mut remaining: Vec<usize> = (0..g.n()).collect();
    let mut clusters = Vec::new();
    match stop {
        StopRule::FirstK(k) => {
            assert!(k >= 1, "requested cluster count must be at least 1");
            for _ in 0..k {
                if remaining.is_empty() {
                    return Err(Error::FewerThanK { requested: k, found: clusters.len() });
                }
                match extract_dominant_set(g, &remaining, cfg) {
                    Ok(ds) => {
                        remaining.retain(|n| !ds.members.contains(n));
                        clusters.push(ds);
                    }
                    Err(Error::NoCohesiveStructure) => {
                        return Err(Error::FewerThanK { requested: k, found: clusters.len() })
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok(SeedClustering { clusters, residual: remaining })
        }
        StopRule::Exhaustive => {
            while !remaining.is_empty() {
                match extract_dominant_set(g, &remaining, cfg) {
                    Ok(ds) if ds.cohesiveness >= cfg.min_cohesiveness || remaining.len() == 1 => {
                        remaining.retain(|n| !ds.members.contains(n));
                        clusters.push(ds);
                    }
                    Ok(_) | Err(Error::NoCohesiveStructure) => {
                        // Nothing coherent left; the rest stands alone.
                        for &n in &remaining {
                            clusters.push(DominantSet::singleton(n));
                        }
                        remaining.clear();
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok(SeedClustering { clusters, residual: remaining })
        }
    }
}

/// Similarity between two disjoint clusters: the sum of cross weights scaled
/// by the combined size, `sum(s_rt) / (|a| + |b|)`.
pub fn cluster_similarity(a: &[usize], b: &[usize], s: &SimilarityGraph) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "clusters must be nonempty");
    debug_assert!(a.iter().all(|x| !b.contains(x)), "clusters must be disjoint");
    let w = s.weights();
    let mut total = 0.0;
    for &r in a {
        for &t in b {
            total += w[(r, t)];
        }
    }
    total / (a.len() + b.len()) as f64
}
