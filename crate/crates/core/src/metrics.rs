//! External clustering quality measures: NMI, ACC and purity.
//!
//! NMI is normalized by the geometric mean of the two entropies,
//! `I(P; T) / sqrt(H(P) H(T))`, with natural logarithms.

use crate::error::{Error, Result};

/// Counts of samples per (predicted cluster, true class) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    /// `counts[p][t]`, rows indexed by distinct predicted labels in ascending
    /// order, columns by distinct true labels.
    pub counts: Vec<Vec<usize>>,
    pub n: usize,
}

fn dense_ids(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut uniq = labels.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    let ids = labels
        .iter()
        .map(|l| uniq.binary_search(l).expect("label present"))
        .collect();
    (ids, uniq.len())
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} predicted labels, {} true labels",
                pred.len(),
                truth.len()
            )));
        }
        if pred.is_empty() {
            return Err(Error::InvalidArgument("empty label vectors".into()));
        }
        let (p, np) = dense_ids(pred);
        let (t, nt) = dense_ids(truth);
        let mut counts = vec![vec![0usize; nt]; np];
        for (&i, &j) in p.iter().zip(&t) {
            counts[i][j] += 1;
        }
        Ok(Self {
            counts,
            n: pred.len(),
        })
    }

    fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    fn col_sums(&self) -> Vec<usize> {
        let cols = self.counts.first().map_or(0, Vec::len);
        (0..cols).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }
}

fn entropy(sums: &[usize], n: f64) -> f64 {
    sums.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let n = table.n as f64;
    let rows = table.row_sums();
    let cols = table.col_sums();
    let hp = entropy(&rows, n);
    let ht = entropy(&cols, n);
    if hp == 0.0 || ht == 0.0 {
        // a constant labeling matches only another constant labeling
        return Ok(if hp == ht { 1.0 } else { 0.0 });
    }
    let mut mi = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    Ok((mi / (hp * ht).sqrt()).clamp(0.0, 1.0))
}

/// Best-matching accuracy under a one-to-one relabeling of the clusters.
pub fn acc(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let size = table.counts.len().max(table.counts[0].len());
    let max = table.n as i64;
    let cost: Vec<Vec<i64>> = (0..size)
        .map(|i| {
            (0..size)
                .map(|j| {
                    let c = table.counts.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0);
                    max - c as i64
                })
                .collect()
        })
        .collect();
    let matching = hungarian(&cost);
    let matched: usize = matching
        .iter()
        .enumerate()
        .map(|(i, &j)| table.counts.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0))
        .sum();
    Ok(matched as f64 / table.n as f64)
}

pub fn purity(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let hits: usize = table
        .counts
        .iter()
        .map(|r| r.iter().copied().max().unwrap_or(0))
        .sum();
    Ok(hits as f64 / table.n as f64)
}

/// Minimum-cost perfect matching on a square cost matrix (Kuhn–Munkres with
/// potentials, O(n³)). Returns the column assigned to each row.
pub fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    const INF: i64 = i64::MAX / 4;
    // 1-based potentials; p[j] is the row matched to column j
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
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
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    assignment
}
