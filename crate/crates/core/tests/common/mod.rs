#![allow(dead_code)]

use mvfsgl::data::{make_blobs_multiview, minmax_normalize, BlobSpec, Blobs};
use mvfsgl::{DMatrix, MultiViewDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>())
}

/// Random matrix with orthonormal columns (Gram–Schmidt on a Gaussian draw).
pub fn random_orthonormal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut q = gaussian(rng, rows, cols);
    for j in 0..cols {
        for k in 0..j {
            let proj = q.column(k).dot(&q.column(j));
            let qk = q.column(k).clone_owned();
            q.column_mut(j).axpy(-proj, &qk, 1.0);
        }
        let norm = q.column(j).norm();
        q.column_mut(j).scale_mut(1.0 / norm);
    }
    q
}

/// Row-stochastic matrix with some exact zeros.
pub fn random_stochastic(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut s = DMatrix::from_fn(n, n, |_, _| {
        if rng.random::<f64>() < 0.3 {
            0.0
        } else {
            rng.random::<f64>()
        }
    });
    for i in 0..n {
        s[(i, i)] += 0.1;
        let total = s.row(i).sum();
        s.row_mut(i).scale_mut(1.0 / total);
    }
    s
}

/// Euclidean projection onto the simplex by enumerating every support set.
pub fn brute_force_simplex(r: &[f64]) -> Vec<f64> {
    let n = r.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let shift = (support.iter().map(|&i| r[i]).sum::<f64>() - 1.0) / support.len() as f64;
        let mut x = vec![0.0; n];
        let mut feasible = true;
        for &i in &support {
            x[i] = r[i] - shift;
            if x[i] < -1e-12 {
                feasible = false;
            }
        }
        if !feasible {
            continue;
        }
        let dist: f64 = x.iter().zip(r).map(|(a, b)| (a - b).powi(2)).sum();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, x));
        }
    }
    best.expect("the full support projection of a shifted vector is always tried").1
}

/// Simplex projection by bisection on the threshold.
pub fn bisection_simplex(r: &[f64]) -> Vec<f64> {
    let mass = |t: f64| r.iter().map(|x| (x - t).max(0.0)).sum::<f64>();
    let mut lo = r.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    r.iter().map(|x| (x - t).max(0.0)).collect()
}

pub fn blobs(spec: &BlobSpec) -> (Blobs, MultiViewDataset) {
    let blobs = make_blobs_multiview(spec).expect("valid blob spec");
    let normalized = minmax_normalize(&blobs.dataset);
    (blobs, normalized)
}

/// The default three-blob fixture.
pub fn fixture(seed: u64) -> (Blobs, MultiViewDataset) {
    blobs(&BlobSpec {
        seed,
        ..BlobSpec::default()
    })
}

/// The three-blob fixture buried in many uniform noise features.
pub fn noisy_fixture(seed: u64) -> (Blobs, MultiViewDataset) {
    blobs(&BlobSpec {
        noisy: 100,
        separation: 6.0,
        seed,
        ..BlobSpec::default()
    })
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
