//! k-means and normalized spectral clustering.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub clusters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iters: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignment: ClusterAssignment,
    /// Within-cluster sum of squares of the returned assignment.
    pub inertia: f64,
    /// Centroids as columns, `features × clusters`.
    pub centroids: DMatrix<f64>,
    /// Inertia after each assignment step of the winning restart.
    pub history: Vec<f64>,
    /// Final inertia of every restart, in restart order.
    pub restart_inertias: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn columns(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    x.column_iter().map(|c| c.iter().copied().collect()).collect()
}

/// Greedy k-means++: each new center is the best of `2 + ⌊ln k⌋`
/// D²-weighted candidates.
fn seed_centers(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut closest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = closest.iter().sum();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let cand = if total > 0.0 {
                let mut target = rng.random::<f64>() * total;
                let mut pick = n - 1;
                for (i, &d) in closest.iter().enumerate() {
                    if target < d {
                        pick = i;
                        break;
                    }
                    target -= d;
                }
                pick
            } else {
                rng.random_range(0..n)
            };
            let updated: Vec<f64> = points
                .iter()
                .zip(&closest)
                .map(|(p, &d)| d.min(sq_dist(p, &points[cand])))
                .collect();
            let potential: f64 = updated.iter().sum();
            if best.as_ref().is_none_or(|(b, _, _)| potential < *b) {
                best = Some((potential, cand, updated));
            }
        }
        let (_, cand, updated) = best.expect("at least one trial");
        centers.push(points[cand].clone());
        closest = updated;
    }
    centers
}

fn assign(points: &[Vec<f64>], centers: &[Vec<f64>], labels: &mut [usize]) -> (f64, bool) {
    let mut inertia = 0.0;
    let mut changed = false;
    for (p, label) in points.iter().zip(labels.iter_mut()) {
        let (best, d) = centers
            .iter()
            .enumerate()
            .map(|(j, c)| (j, sq_dist(p, c)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        if *label != best {
            *label = best;
            changed = true;
        }
        inertia += d;
    }
    (inertia, changed)
}

fn centroids(points: &[Vec<f64>], labels: &[usize], k: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|x| *x /= c as f64);
        }
    }
    (sums, counts)
}

/// Moves the point farthest from its center into each empty cluster.
fn repair_empty(points: &[Vec<f64>], centers: &mut [Vec<f64>], labels: &mut [usize], inertia: &mut f64) {
    let k = centers.len();
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let far = (0..points.len())
            .filter(|&i| counts[labels[i]] > 1)
            .map(|i| (i, sq_dist(&points[i], &centers[labels[i]])))
            .fold((usize::MAX, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if far.0 == usize::MAX {
            return;
        }
        *inertia -= far.1;
        labels[far.0] = empty;
        centers[empty] = points[far.0].clone();
    }
}

struct Run {
    labels: Vec<usize>,
    centers: Vec<Vec<f64>>,
    inertia: f64,
    history: Vec<f64>,
}

fn lloyd(points: &[Vec<f64>], k: usize, max_iters: usize, seed: u64) -> Run {
    let dim = points[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centers(points, k, &mut rng);
    let mut labels = vec![usize::MAX; points.len()];
    let mut history = Vec::new();
    for _ in 0..max_iters.max(1) {
        let (mut inertia, changed) = assign(points, &centers, &mut labels);
        repair_empty(points, &mut centers, &mut labels, &mut inertia);
        history.push(inertia);
        if !changed && history.len() > 1 {
            break;
        }
        centers = centroids(points, &labels, k, dim).0;
    }
    let (centers, _) = centroids(points, &labels, k, dim);
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| sq_dist(p, &centers[l]))
        .sum();
    Run {
        labels,
        centers,
        inertia,
        history,
    }
}

/// Best-of-restarts Lloyd's algorithm on the columns of `x` (features × n).
pub fn kmeans(x: &DMatrix<f64>, clusters: usize, opts: &KMeansOptions) -> Result<KMeansResult> {
    let n = x.ncols();
    if clusters == 0 || n < clusters {
        return Err(Error::InvalidArgument(format!(
            "cannot form {clusters} clusters from {n} samples"
        )));
    }
    let points = columns(x);
    let mut master = ChaCha8Rng::seed_from_u64(opts.seed);
    let seeds: Vec<u64> = (0..opts.restarts.max(1)).map(|_| master.random()).collect();
    let runs: Vec<Run> = seeds
        .par_iter()
        .map(|&s| lloyd(&points, clusters, opts.max_iters, s))
        .collect();
    let restart_inertias: Vec<f64> = runs.iter().map(|r| r.inertia).collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.inertia < a.inertia { b } else { a })
        .expect("at least one restart");

    let mut counts = vec![0usize; clusters];
    for &l in &best.labels {
        counts[l] += 1;
    }
    if counts.contains(&0) {
        return Err(Error::EmptyClusters { clusters });
    }
    let centroids = DMatrix::from_fn(x.nrows(), clusters, |i, j| best.centers[j][i]);
    Ok(KMeansResult {
        assignment: ClusterAssignment {
            labels: best.labels,
            clusters,
        },
        inertia: best.inertia,
        centroids,
        history: best.history,
        restart_inertias,
    })
}

/// Spectral embedding used by [`spectral_cluster`]: the eigenvectors of the
/// `clusters` smallest eigenvalues of `I − D^{-1/2} S̄ D^{-1/2}`, rows scaled
/// to unit length. Returned as `clusters × n` so that samples are columns.
pub fn spectral_embedding(s: &DMatrix<f64>, clusters: usize) -> Result<DMatrix<f64>> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "graph must be square, got {}x{}",
            n,
            s.ncols()
        )));
    }
    if clusters == 0 || clusters > n {
        return Err(Error::InvalidArgument(format!(
            "cannot embed {n} nodes into {clusters} clusters"
        )));
    }
    if s.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidArgument("graph weights must be finite and nonnegative".into()));
    }
    let s_bar = (s + s.transpose()) * 0.5;
    let degree: Vec<f64> = s_bar.row_iter().map(|r| r.sum()).collect();
    if let Some(node) = degree.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::ZeroDegreeNode { node });
    }
    let inv_sqrt: Vec<f64> = degree.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut lsym = DMatrix::from_fn(n, n, |i, j| -inv_sqrt[i] * s_bar[(i, j)] * inv_sqrt[j]);
    for i in 0..n {
        lsym[(i, i)] += 1.0;
    }
    let eig = SymmetricEigen::new(lsym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let mut emb = DMatrix::zeros(clusters, n);
    for (k, &col) in order.iter().take(clusters).enumerate() {
        for i in 0..n {
            emb[(k, i)] = eig.eigenvectors[(i, col)];
        }
    }
    for mut col in emb.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    Ok(emb)
}

/// Normalized spectral clustering of a nonnegative graph.
pub fn spectral_cluster(s: &DMatrix<f64>, clusters: usize, seed: u64) -> Result<ClusterAssignment> {
    let emb = spectral_embedding(s, clusters)?;
    let km = kmeans(
        &emb,
        clusters,
        &KMeansOptions {
            seed,
            ..KMeansOptions::default()
        },
    )?;
    Ok(km.assignment)
}
