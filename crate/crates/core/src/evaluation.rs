//! Clustering quality against ground truth: best-map accuracy through an
//! optimal cluster-to-class assignment, and normalized mutual information.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Joint count table: `table[cluster][class]` over prediction/truth pairs.
fn contingency(pred: &[usize], truth: &[usize]) -> Result<Vec<Vec<u64>>> {
    if pred.is_empty() || truth.is_empty() {
        return Err(Error::EmptyLabeling);
    }
    if pred.len() != truth.len() {
        return Err(Error::LabelLengthMismatch { pred_len: pred.len(), truth_len: truth.len() });
    }
    let kp = pred.iter().max().unwrap() + 1;
    let kt = truth.iter().max().unwrap() + 1;
    let mut table = vec![vec![0u64; kt]; kp];
    for (&c, &t) in pred.iter().zip(truth) {
        table[c][t] += 1;
    }
    Ok(table)
}

/// Minimum-cost perfect assignment on a square cost matrix, by the classic
/// O(n^3) potentials method. Returns the column matched to each row.
fn assignment_min_cost(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-indexed potentials over rows (u) and columns (v)
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1]; // column -> row, 0 means free
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        if matched_row[j] != 0 {
            row_to_col[matched_row[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Optimal cluster-to-class mapping maximizing matched documents.
///
/// The contingency table is padded square and solved as an assignment
/// problem. Every cluster id maps somewhere: clusters matched to a real
/// class get that class; surplus clusters (more clusters than classes) get
/// fresh ids past the last class, assigned in cluster order.
pub fn best_map(pred: &[usize], truth: &[usize]) -> Result<Vec<(usize, usize)>> {
    let table = contingency(pred, truth)?;
    let kp = table.len();
    let kt = table[0].len();
    let side = kp.max(kt);
    let mut cost = vec![vec![0.0f64; side]; side];
    for (c, row) in table.iter().enumerate() {
        for (t, &count) in row.iter().enumerate() {
            cost[c][t] = -(count as f64);
        }
    }
    let matched = assignment_min_cost(&cost);
    let mut mapping = Vec::with_capacity(kp);
    let mut fresh = kt;
    for (c, &target) in matched.iter().enumerate().take(kp) {
        if target < kt {
            mapping.push((c, target));
        } else {
            mapping.push((c, fresh));
            fresh += 1;
        }
    }
    Ok(mapping)
}

/// Fraction of documents whose best-mapped cluster equals their class.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let kt = table[0].len();
    let mapping = best_map(pred, truth)?;
    let mut matched = 0u64;
    for &(c, t) in &mapping {
        if t < kt {
            matched += table[c][t];
        }
    }
    Ok(matched as f64 / pred.len() as f64)
}

/// Mutual information between the two labelings, in bits.
pub fn mutual_information(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    Ok(mi_from_table(&table))
}

fn mi_from_table(table: &[Vec<u64>]) -> f64 {
    let n: u64 = table.iter().flatten().sum();
    let nf = n as f64;
    let cluster_sums: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let kt = table[0].len();
    let class_sums: Vec<u64> = (0..kt).map(|t| table.iter().map(|r| r[t]).sum()).collect();
    let mut mi = 0.0;
    for (c, row) in table.iter().enumerate() {
        for (t, &count) in row.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let joint = count as f64 / nf;
            let ratio = (count as f64 * nf) / (cluster_sums[c] as f64 * class_sums[t] as f64);
            mi += joint * ratio.log2();
        }
    }
    mi
}

fn entropy(sums: &[u64], n: u64) -> f64 {
    let nf = n as f64;
    let mut h = 0.0;
    for &s in sums {
        if s > 0 {
            let p = s as f64 / nf;
            h -= p * p.log2();
        }
    }
    h
}

/// Normalized mutual information: `MI / max(H(pred), H(truth))`, in bits.
///
/// When both labelings collapse to a single class the partitions are
/// identical and the score is 1; when exactly one does, the mutual
/// information is zero and so is the score.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let n: u64 = table.iter().flatten().sum();
    let cluster_sums: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let kt = table[0].len();
    let class_sums: Vec<u64> = (0..kt).map(|t| table.iter().map(|r| r[t]).sum()).collect();
    let hp = entropy(&cluster_sums, n);
    let ht = entropy(&class_sums, n);
    let denom = hp.max(ht);
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok(mi_from_table(&table) / denom)
}

/// Full scoring report for one predicted labeling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    pub nmi: f64,
    /// Optimal cluster-to-class mapping, surplus clusters on fresh ids.
    pub mapping: Vec<(usize, usize)>,
    /// Joint counts `contingency[cluster][class]`.
    pub contingency: Vec<Vec<u64>>,
}

/// Scores a predicted labeling against ground truth.
pub fn evaluate(pred: &[usize], truth: &[usize]) -> Result<EvalReport> {
    let table = contingency(pred, truth)?;
    Ok(EvalReport {
        n: pred.len(),
        accuracy: accuracy(pred, truth)?,
        nmi: nmi(pred, truth)?,
        mapping: best_map(pred, truth)?,
        contingency: table,
    })
}
