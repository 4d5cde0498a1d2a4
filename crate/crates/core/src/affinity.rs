//! Per-view Gaussian K-nearest-neighbor affinity graphs.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::MultiViewDataset;
use crate::error::{Error, Result};

/// Above this many samples the kernel width is estimated from a subsample of pairs.
const EXACT_MEDIAN_MAX_N: usize = 4000;
const MEDIAN_SUBSAMPLE_PAIRS: usize = 2_000_000;
const MEDIAN_SUBSAMPLE_SEED: u64 = 0x5eed_a11f;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AffinityMode {
    /// Every row scaled to sum to `V`.
    #[default]
    RowScaled,
    /// Symmetrized, then scaled globally so the total mass is `n·V`.
    Symmetric,
}

/// Raw Gaussian K-NN affinity before scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct RawAffinity {
    pub matrix: DMatrix<f64>,
    pub kernel_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    pub matrix: DMatrix<f64>,
    pub mode: AffinityMode,
    pub kernel_width: f64,
}

/// Squared Euclidean distances between the columns of `x`.
pub fn pairwise_sq_distances(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.ncols();
    let gram = x.transpose() * x;
    let mut d = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            let v = (gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)]).max(0.0);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let len = values.len();
    if len % 2 == 1 {
        values[len / 2]
    } else {
        0.5 * (values[len / 2 - 1] + values[len / 2])
    }
}

/// Median distance over distinct sample pairs.
fn median_pair_distance(sq: &DMatrix<f64>) -> f64 {
    let n = sq.nrows();
    let mut dists = if n <= EXACT_MEDIAN_MAX_N {
        let mut all = Vec::with_capacity(n * (n - 1) / 2);
        for j in 0..n {
            for i in 0..j {
                all.push(sq[(i, j)].sqrt());
            }
        }
        all
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(MEDIAN_SUBSAMPLE_SEED);
        (0..MEDIAN_SUBSAMPLE_PAIRS)
            .map(|_| {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                sq[(i, j)].sqrt()
            })
            .collect()
    };
    median(&mut dists)
}

/// Indices of the `k` nearest other samples of every sample; ties go to the
/// smaller index.
pub fn knn_indices(sq: &DMatrix<f64>, k: usize) -> Vec<Vec<usize>> {
    let n = sq.nrows();
    (0..n)
        .map(|i| {
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| sq[(i, a)].total_cmp(&sq[(i, b)]).then(a.cmp(&b)));
            others.truncate(k);
            others
        })
        .collect()
}

/// Gaussian kernel restricted to the symmetric K-NN relation, zero diagonal.
/// The kernel width is the median pairwise distance between samples.
pub fn knn_gaussian_affinity(x: &DMatrix<f64>, k: usize) -> Result<RawAffinity> {
    let n = x.ncols();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "neighbor count K = {k} must satisfy 1 <= K < n = {n}"
        )));
    }
    let sq = pairwise_sq_distances(x);
    let sigma = median_pair_distance(&sq);
    if !(sigma > 0.0) {
        return Err(Error::DegenerateView { view: 0 });
    }
    let two_sigma_sq = 2.0 * sigma * sigma;
    let mut a = DMatrix::zeros(n, n);
    for (i, nbrs) in knn_indices(&sq, k).into_iter().enumerate() {
        for j in nbrs {
            let w = (-sq[(i, j)] / two_sigma_sq).exp();
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
    }
    Ok(RawAffinity {
        matrix: a,
        kernel_width: sigma,
    })
}

pub fn scale_affinity(raw: &RawAffinity, n_views: usize, mode: AffinityMode) -> Result<AffinityGraph> {
    let a = &raw.matrix;
    let n = a.nrows();
    let v = n_views as f64;
    for (i, row) in a.row_iter().enumerate() {
        if !(row.sum() > 0.0) {
            return Err(Error::IsolatedSample { sample: i });
        }
    }
    let matrix = match mode {
        AffinityMode::RowScaled => {
            let mut out = a.clone();
            for mut row in out.row_iter_mut() {
                let s = row.sum();
                row.apply(|x| *x = v * *x / s);
            }
            out
        }
        AffinityMode::Symmetric => {
            let mut m = (a + a.transpose()) * 0.5;
            let scale = (n as f64) * v / m.sum();
            m *= scale;
            // scaling can break exact symmetry through rounding
            for j in 0..n {
                for i in 0..j {
                    m[(j, i)] = m[(i, j)];
                }
            }
            m
        }
    };
    Ok(AffinityGraph {
        matrix,
        mode,
        kernel_width: raw.kernel_width,
    })
}

/// Builds and scales one affinity graph per view.
pub fn build_affinities(ds: &MultiViewDataset, k: usize, mode: AffinityMode) -> Result<Vec<AffinityGraph>> {
    let n_views = ds.n_views();
    ds.views()
        .par_iter()
        .enumerate()
        .map(|(v, x)| {
            let raw = knn_gaussian_affinity(x, k).map_err(|e| e.in_view(v))?;
            scale_affinity(&raw, n_views, mode)
        })
        .collect()
}
