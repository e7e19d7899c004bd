//! Pairwise document graphs: cosine dissimilarity, Gaussian kernel
//! similarity, degree-normalized similarity, and sparsification.
//!
//! All graphs are symmetric with a zero diagonal; builders compute the upper
//! triangle once and mirror it, so symmetry is exact rather than approximate.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weighting::FeatureMatrix;

/// What the edge weights of a graph mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphKind {
    /// Cosine dissimilarity: 0 for identical directions, larger is farther.
    Proximity,
    /// Gaussian kernel similarity in (0, 1].
    Kernel,
    /// Degree-normalized kernel similarity.
    Laplacian,
    /// Similarity graph with edges removed by a sparsifier.
    Sparsified,
}

impl GraphKind {
    pub fn name(self) -> &'static str {
        match self {
            GraphKind::Proximity => "proximity",
            GraphKind::Kernel => "kernel",
            GraphKind::Laplacian => "laplacian",
            GraphKind::Sparsified => "sparsified",
        }
    }
}

/// Symmetric weighted graph over documents with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    kind: GraphKind,
    weights: DMatrix<f64>,
    sigma: Option<f64>,
    k_nn: Option<usize>,
}

impl SimilarityGraph {
    /// Wraps an explicit weight matrix. The matrix must be square and
    /// symmetric within `1e-12`; the diagonal is forced to zero and the
    /// lower triangle mirrored from the upper so the invariants hold exactly.
    pub fn from_weights(mut weights: DMatrix<f64>, kind: GraphKind) -> Result<Self> {
        assert_eq!(weights.nrows(), weights.ncols(), "weight matrix must be square");
        let n = weights.nrows();
        for i in 0..n {
            weights[(i, i)] = 0.0;
            for j in (i + 1)..n {
                let d = (weights[(i, j)] - weights[(j, i)]).abs();
                assert!(d <= 1e-12, "weights must be symmetric, asymmetry {d} at ({i},{j})");
                let w = weights[(i, j)];
                if kind != GraphKind::Proximity {
                    assert!(w >= 0.0, "similarity weights must be nonnegative");
                }
                weights[(j, i)] = w;
            }
        }
        Ok(Self { kind, weights, sigma: None, k_nn: None })
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    pub fn k_nn(&self) -> Option<usize> {
        self.k_nn
    }

    /// Nodes whose total incident weight is zero.
    pub fn isolated_nodes(&self) -> Vec<usize> {
        (0..self.n())
            .filter(|&i| self.weights.row(i).iter().all(|&w| w == 0.0))
            .collect()
    }
}

/// Default neighborhood size for k-nn sparsification: `max(ceil(log2 n), 10)`.
pub fn default_knn(n: usize) -> usize {
    let log2_ceil = if n <= 1 { 0 } else { (usize::BITS - (n - 1).leading_zeros()) as usize };
    log2_ceil.max(10)
}

/// Builds the cosine dissimilarity graph `w_ij = 1 - cos(x_i, x_j)`.
///
/// Documents with a zero feature vector have no direction, so their presence
/// is an error naming the offending indices.
pub fn cosine_proximity(features: &FeatureMatrix) -> Result<SimilarityGraph> {
    let norms = features.l2_norms();
    let zero: Vec<usize> =
        norms.iter().enumerate().filter(|&(_, &v)| v == 0.0).map(|(i, _)| i).collect();
    if !zero.is_empty() {
        return Err(Error::ZeroNormRows { indices: zero });
    }
    let n = features.n_docs();
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let cos = features.row_dot(i, j) / (norms[i] * norms[j]);
            let d = 1.0 - cos;
            w[(i, j)] = d;
            w[(j, i)] = d;
        }
    }
    Ok(SimilarityGraph { kind: GraphKind::Proximity, weights: w, sigma: None, k_nn: None })
}

/// Turns a proximity graph into Gaussian kernel similarities
/// `s_ij = exp(-w_ij^2 / sigma^2)` with a zero diagonal.
pub fn gaussian_kernel(g: &SimilarityGraph, sigma: f64) -> Result<SimilarityGraph> {
    if g.kind() != GraphKind::Proximity {
        return Err(Error::GraphKindMismatch {
            expected: GraphKind::Proximity.name(),
            found: g.kind().name(),
        });
    }
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(Error::BadSigma { sigma });
    }
    let n = g.n();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let w = g.weights()[(i, j)];
            let v = (-(w * w) / (sigma * sigma)).exp();
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    Ok(SimilarityGraph { kind: GraphKind::Kernel, weights: s, sigma: Some(sigma), k_nn: None })
}

/// Degree-normalizes a kernel graph: `l_ij = s_ij / sqrt(d_i d_j)` with
/// `d_i` the weighted degree of node `i`. Zero-degree nodes make the
/// normalization undefined and are reported as an error.
pub fn normalized_laplacian(g: &SimilarityGraph) -> Result<SimilarityGraph> {
    if g.kind() != GraphKind::Kernel {
        return Err(Error::GraphKindMismatch {
            expected: GraphKind::Kernel.name(),
            found: g.kind().name(),
        });
    }
    let n = g.n();
    let degrees: Vec<f64> = (0..n).map(|i| g.weights().row(i).sum()).collect();
    let dead: Vec<usize> =
        degrees.iter().enumerate().filter(|&(_, &d)| d <= 0.0).map(|(i, _)| i).collect();
    if !dead.is_empty() {
        return Err(Error::ZeroDegree { nodes: dead });
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = g.weights()[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
            l[(i, j)] = v;
            l[(j, i)] = v;
        }
    }
    Ok(SimilarityGraph { kind: GraphKind::Laplacian, weights: l, sigma: g.sigma(), k_nn: None })
}

/// Keeps each node's `k` strongest neighbors and symmetrizes by union: an
/// edge survives if either endpoint keeps it. Ties at the cutoff go to the
/// lower index. Distances cannot be sparsified this way, so proximity
/// graphs are rejected.
pub fn knn_sparsify(g: &SimilarityGraph, k: usize) -> Result<SimilarityGraph> {
    if g.kind() == GraphKind::Proximity {
        return Err(Error::GraphKindMismatch {
            expected: "kernel, laplacian, or sparsified",
            found: g.kind().name(),
        });
    }
    if k == 0 {
        return Err(Error::BadKnn);
    }
    let n = g.n();
    let w = g.weights();
    let mut keep = vec![vec![false; n]; n];
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| {
            w[(i, b)].partial_cmp(&w[(i, a)]).unwrap().then(a.cmp(&b))
        });
        for &j in order.iter().take(k) {
            keep[i][j] = true;
        }
    }
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if keep[i][j] || keep[j][i] {
                out[(i, j)] = w[(i, j)];
                out[(j, i)] = w[(i, j)];
            }
        }
    }
    Ok(SimilarityGraph {
        kind: GraphKind::Sparsified,
        weights: out,
        sigma: g.sigma(),
        k_nn: Some(k),
    })
}

/// Zeroes every off-diagonal weight at or below `epsilon`.
pub fn epsilon_sparsify(g: &SimilarityGraph, epsilon: f64) -> Result<SimilarityGraph> {
    if g.kind() == GraphKind::Proximity {
        return Err(Error::GraphKindMismatch {
            expected: "kernel, laplacian, or sparsified",
            found: g.kind().name(),
        });
    }
    if epsilon < 0.0 || !epsilon.is_finite() {
        return Err(Error::BadEpsilon { epsilon });
    }
    let n = g.n();
    let mut out = g.weights().clone();
    for i in 0..n {
        for j in 0..n {
            if i != j && out[(i, j)] <= epsilon {
                out[(i, j)] = 0.0;
            }
        }
    }
    Ok(SimilarityGraph { kind: GraphKind::Sparsified, weights: out, sigma: g.sigma(), k_nn: g.k_nn() })
}

/// Writes an edge-list cache: a header with kind and build parameters, then
/// one `i j w` line per upper-triangle nonzero. Weights round-trip exactly.
pub fn dump_graph<W: Write>(g: &SimilarityGraph, mut w: W) -> Result<()> {
    let sigma = match g.sigma() {
        Some(s) => format!("{s}"),
        None => "none".to_string(),
    };
    let k_nn = match g.k_nn() {
        Some(k) => format!("{k}"),
        None => "none".to_string(),
    };
    writeln!(w, "gamecluster-graph {} {} sigma={} k_nn={}", g.n(), g.kind().name(), sigma, k_nn)?;
    for i in 0..g.n() {
        for j in (i + 1)..g.n() {
            let v = g.weights()[(i, j)];
            if v != 0.0 {
                writeln!(w, "{i} {j} {v}")?;
            }
        }
    }
    Ok(())
}

/// Loads a graph cache written by [`dump_graph`].
pub fn load_graph<R: BufRead>(reader: R) -> Result<SimilarityGraph> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::GraphCache { line: 1, msg: "missing header".into() })?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != "gamecluster-graph" {
        return Err(Error::GraphCache { line: 1, msg: "bad header".into() });
    }
    let n: usize = parts[1]
        .parse()
        .map_err(|_| Error::GraphCache { line: 1, msg: "bad node count".into() })?;
    let kind = match parts[2] {
        "proximity" => GraphKind::Proximity,
        "kernel" => GraphKind::Kernel,
        "laplacian" => GraphKind::Laplacian,
        "sparsified" => GraphKind::Sparsified,
        other => {
            return Err(Error::GraphCache { line: 1, msg: format!("unknown kind `{other}`") })
        }
    };
    let parse_opt = |field: &str, name: &str| -> Result<Option<String>> {
        let v = field
            .strip_prefix(&format!("{name}="))
            .ok_or_else(|| Error::GraphCache { line: 1, msg: format!("missing {name}") })?;
        Ok(if v == "none" { None } else { Some(v.to_string()) })
    };
    let sigma = parse_opt(parts[3], "sigma")?
        .map(|v| v.parse::<f64>().map_err(|_| Error::GraphCache { line: 1, msg: "bad sigma".into() }))
        .transpose()?;
    let k_nn = parse_opt(parts[4], "k_nn")?
        .map(|v| v.parse::<usize>().map_err(|_| Error::GraphCache { line: 1, msg: "bad k_nn".into() }))
        .transpose()?;

    let mut weights = DMatrix::zeros(n, n);
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 2;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::GraphCache { line: line_no, msg: "expected `i j w`".into() });
        }
        let i: usize = toks[0]
            .parse()
            .map_err(|_| Error::GraphCache { line: line_no, msg: "bad i".into() })?;
        let j: usize = toks[1]
            .parse()
            .map_err(|_| Error::GraphCache { line: line_no, msg: "bad j".into() })?;
        let v: f64 = toks[2]
            .parse()
            .map_err(|_| Error::GraphCache { line: line_no, msg: "bad weight".into() })?;
        if i >= n || j >= n || i >= j {
            return Err(Error::GraphCache { line: line_no, msg: "bad edge indices".into() });
        }
        weights[(i, j)] = v;
        weights[(j, i)] = v;
    }
    Ok(SimilarityGraph { kind, weights, sigma, k_nn })
}
