//! Term weighting and dimensionality reduction: tf-idf rows and latent
//! semantic projection by truncated singular value decomposition.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use sha2::{Digest, Sha256};

use crate::corpus::DocumentTermMatrix;
use crate::error::{Error, Result};

/// Row storage for document feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    /// Row-major dense matrix, documents as rows.
    Dense(DMatrix<f64>),
    /// Per-document sorted `(dim, value)` entries.
    Sparse(Vec<Vec<(usize, f64)>>),
}

/// Real-valued document feature matrix produced by a weighting step.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_docs: usize,
    n_dims: usize,
    storage: Storage,
    row_normalized: bool,
    /// Retained spectrum when the matrix came out of [`lsa_project`].
    singular_values: Option<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn from_dense(values: DMatrix<f64>, row_normalized: bool) -> Self {
        Self {
            n_docs: values.nrows(),
            n_dims: values.ncols(),
            storage: Storage::Dense(values),
            row_normalized,
            singular_values: None,
        }
    }

    pub fn from_sparse(n_dims: usize, rows: Vec<Vec<(usize, f64)>>, row_normalized: bool) -> Self {
        Self {
            n_docs: rows.len(),
            n_dims,
            storage: Storage::Sparse(rows),
            row_normalized,
            singular_values: None,
        }
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn row_normalized(&self) -> bool {
        self.row_normalized
    }

    pub fn singular_values(&self) -> Option<&[f64]> {
        self.singular_values.as_deref()
    }

    /// Materializes the dense form (documents as rows).
    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(rows) => {
                let mut m = DMatrix::zeros(self.n_docs, self.n_dims);
                for (d, row) in rows.iter().enumerate() {
                    for &(t, v) in row {
                        m[(d, t)] = v;
                    }
                }
                m
            }
        }
    }

    /// Euclidean norm of each document row.
    pub fn l2_norms(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(m) => (0..self.n_docs).map(|d| m.row(d).norm()).collect(),
            Storage::Sparse(rows) => rows
                .iter()
                .map(|row| row.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt())
                .collect(),
        }
    }

    /// Documents whose feature vector is identically zero.
    pub fn zero_norm_rows(&self) -> Vec<usize> {
        self.l2_norms()
            .iter()
            .enumerate()
            .filter(|&(_, &n)| n == 0.0)
            .map(|(d, _)| d)
            .collect()
    }

    /// Dot product of two document rows.
    pub fn row_dot(&self, a: usize, b: usize) -> f64 {
        match &self.storage {
            Storage::Dense(m) => m.row(a).dot(&m.row(b)),
            Storage::Sparse(rows) => sparse_dot(&rows[a], &rows[b]),
        }
    }
}

fn sparse_dot(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let mut s = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

/// tf-idf weighting with natural-log idf, followed by L2 row normalization.
///
/// The weight of term `t` in document `d` is `count(d,t) * ln(n_docs / df(t))`
/// where `df(t)` counts documents with a positive count of `t`. Rows that end
/// up all-zero (empty documents, or documents made of corpus-wide terms) are
/// left as zero vectors; [`FeatureMatrix::zero_norm_rows`] lists them.
pub fn tfidf(m: &DocumentTermMatrix) -> Result<FeatureMatrix> {
    let n_docs = m.n_docs();
    let mut df = vec![0usize; m.n_terms()];
    let mut any = false;
    for d in 0..n_docs {
        for &(t, c) in m.row(d) {
            if c > 0.0 {
                df[t] += 1;
                any = true;
            }
        }
    }
    if !any {
        return Err(Error::NoOccurrences);
    }
    let idf: Vec<f64> = df
        .iter()
        .map(|&f| if f == 0 { 0.0 } else { (n_docs as f64 / f as f64).ln() })
        .collect();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n_docs);
    for d in 0..n_docs {
        let mut row: Vec<(usize, f64)> =
            m.row(d).iter().map(|&(t, c)| (t, c * idf[t])).collect();
        let norm = row.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for e in &mut row {
                e.1 /= norm;
            }
        }
        rows.push(row);
    }
    Ok(FeatureMatrix::from_sparse(m.n_terms(), rows, true))
}

/// Projects documents onto the top `k` latent dimensions of the feature
/// matrix. Document coordinates are the left singular vectors scaled by
/// their singular values, with each vector's sign fixed so its
/// largest-magnitude entry is positive. Retained singular values come back
/// in non-increasing order on the result.
pub fn lsa_project(features: &FeatureMatrix, k: usize) -> Result<FeatureMatrix> {
    let max = features.n_docs().min(features.n_dims());
    if k == 0 {
        return Err(Error::BadRank);
    }
    if k > max {
        return Err(Error::RankTooLarge { requested: k, max });
    }
    let (mut coords, sigma) = match features.storage() {
        Storage::Dense(m) => dense_svd_coords(m, k),
        Storage::Sparse(_) => gram_svd_coords(features, k),
    };
    fix_column_signs(&mut coords);
    let mut out = FeatureMatrix::from_dense(coords, false);
    out.singular_values = Some(sigma);
    Ok(out)
}

/// Dense route: full SVD, singular triples sorted by decreasing value.
fn dense_svd_coords(m: &DMatrix<f64>, k: usize) -> (DMatrix<f64>, Vec<f64>) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd requested u");
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap().then(a.cmp(&b)));
    let mut coords = DMatrix::zeros(m.nrows(), k);
    let mut sigma = Vec::with_capacity(k);
    for (col, &src) in order.iter().take(k).enumerate() {
        let sv = s[src];
        sigma.push(sv);
        for r in 0..m.nrows() {
            coords[(r, col)] = u[(r, src)] * sv;
        }
    }
    (coords, sigma)
}

/// Sparse route: eigendecomposition of the document Gram matrix M*M^T, whose
/// eigenvectors are the left singular vectors and eigenvalues the squared
/// singular values. Avoids densifying the (documents x terms) matrix.
fn gram_svd_coords(features: &FeatureMatrix, k: usize) -> (DMatrix<f64>, Vec<f64>) {
    let n = features.n_docs();
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = features.row_dot(i, j);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(gram);
    let vals = &eig.eigenvalues;
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap().then(a.cmp(&b)));
    let mut coords = DMatrix::zeros(n, k);
    let mut sigma = Vec::with_capacity(k);
    for (col, &src) in order.iter().take(k).enumerate() {
        // Tiny negative eigenvalues are roundoff from an exactly PSD matrix.
        let sv = vals[src].max(0.0).sqrt();
        sigma.push(sv);
        for r in 0..n {
            coords[(r, col)] = eig.eigenvectors[(r, src)] * sv;
        }
    }
    (coords, sigma)
}

/// Flips column signs so the largest-magnitude entry of each column is
/// positive; ties go to the lowest row index.
fn fix_column_signs(m: &mut DMatrix<f64>) {
    for c in 0..m.ncols() {
        let mut best = 0usize;
        for r in 1..m.nrows() {
            if m[(r, c)].abs() > m[(best, c)].abs() {
                best = r;
            }
        }
        if m[(best, c)] < 0.0 {
            for r in 0..m.nrows() {
                m[(r, c)] = -m[(r, c)];
            }
        }
    }
}

fn hash_lines(lines: &[String]) -> String {
    let mut hasher = Sha256::new();
    for l in lines {
        hasher.update(l.as_bytes());
        hasher.update(b"\n");
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}

/// Writes a textual cache of the feature matrix. The header records the
/// dimensions and a content hash so a tampered or truncated cache is
/// rejected on load. Values round-trip bit-exactly.
pub fn dump_features<W: Write>(features: &FeatureMatrix, mut w: W) -> Result<()> {
    let storage_tag = match features.storage() {
        Storage::Dense(_) => "dense",
        Storage::Sparse(_) => "sparse",
    };
    let mut lines: Vec<String> = Vec::with_capacity(features.n_docs());
    match features.storage() {
        Storage::Dense(m) => {
            for r in 0..m.nrows() {
                let row: Vec<String> = (0..m.ncols()).map(|c| format!("{}", m[(r, c)])).collect();
                lines.push(row.join(" "));
            }
        }
        Storage::Sparse(rows) => {
            for row in rows {
                let entries: Vec<String> =
                    row.iter().map(|&(t, v)| format!("{t}:{v}")).collect();
                lines.push(entries.join(" "));
            }
        }
    }
    writeln!(
        w,
        "gamecluster-features {} {} {} {} {}",
        features.n_docs(),
        features.n_dims(),
        u8::from(features.row_normalized()),
        storage_tag,
        hash_lines(&lines)
    )?;
    for l in &lines {
        writeln!(w, "{l}")?;
    }
    Ok(())
}

/// Loads a cache produced by [`dump_features`], verifying the content hash.
pub fn load_features<R: BufRead>(reader: R) -> Result<FeatureMatrix> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::FeatureCache { line: 1, msg: "missing header".into() })?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 6 || parts[0] != "gamecluster-features" {
        return Err(Error::FeatureCache { line: 1, msg: "bad header".into() });
    }
    let fail = |msg: &str| Error::FeatureCache { line: 1, msg: msg.into() };
    let n_docs: usize = parts[1].parse().map_err(|_| fail("bad n_docs"))?;
    let n_dims: usize = parts[2].parse().map_err(|_| fail("bad n_dims"))?;
    let normalized = match parts[3] {
        "0" => false,
        "1" => true,
        _ => return Err(fail("bad normalized flag")),
    };
    let dense = match parts[4] {
        "dense" => true,
        "sparse" => false,
        _ => return Err(fail("bad storage tag")),
    };
    let expected_hash = parts[5].to_string();

    let mut body: Vec<String> = Vec::with_capacity(n_docs);
    for i in 0..n_docs {
        let line = lines.next().transpose()?.ok_or_else(|| Error::FeatureCache {
            line: i + 2,
            msg: "missing row".into(),
        })?;
        body.push(line);
    }
    if hash_lines(&body) != expected_hash {
        return Err(Error::FeatureCache { line: 1, msg: "content hash mismatch".into() });
    }

    let storage = if dense {
        let mut m = DMatrix::zeros(n_docs, n_dims);
        for (r, line) in body.iter().enumerate() {
            let vals: Vec<&str> = line.split_whitespace().collect();
            if vals.len() != n_dims {
                return Err(Error::FeatureCache { line: r + 2, msg: "wrong row length".into() });
            }
            for (c, v) in vals.iter().enumerate() {
                m[(r, c)] = v.parse().map_err(|_| Error::FeatureCache {
                    line: r + 2,
                    msg: format!("bad value `{v}`"),
                })?;
            }
        }
        Storage::Dense(m)
    } else {
        let mut rows = Vec::with_capacity(n_docs);
        for (r, line) in body.iter().enumerate() {
            let mut row: Vec<(usize, f64)> = Vec::new();
            for tok in line.split_whitespace() {
                let (t, v) = tok.split_once(':').ok_or_else(|| Error::FeatureCache {
                    line: r + 2,
                    msg: format!("bad entry `{tok}`"),
                })?;
                let t: usize = t.parse().map_err(|_| Error::FeatureCache {
                    line: r + 2,
                    msg: format!("bad index `{t}`"),
                })?;
                if t >= n_dims {
                    return Err(Error::FeatureCache {
                        line: r + 2,
                        msg: format!("index {t} out of range"),
                    });
                }
                let v: f64 = v.parse().map_err(|_| Error::FeatureCache {
                    line: r + 2,
                    msg: format!("bad value `{v}`"),
                })?;
                row.push((t, v));
            }
            rows.push(row);
        }
        Storage::Sparse(rows)
    };
    Ok(FeatureMatrix {
        n_docs,
        n_dims,
        storage,
        row_normalized: normalized,
        singular_values: None,
    })
}
