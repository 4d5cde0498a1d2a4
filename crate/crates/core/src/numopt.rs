//! Closed-form and root-finding solvers for the constrained subproblems.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Euclidean projection onto the probability simplex `{s : Σs = 1, s ≥ 0}`.
///
/// Sort-and-threshold: `s_i = max(r_i − τ, 0)` with `τ` chosen so that the
/// active entries sum to one.
pub fn project_simplex(r: &[f64]) -> Vec<f64> {
    if r.is_empty() {
        return Vec::new();
    }
    let mut sorted = r.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    r.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Orthonormal-column `Q` (same shape as `m`) maximizing `Tr(Qᵀ M)`.
///
/// With the thin SVD `M = U Σ Vᵀ`, `Q = U Vᵀ`. This is the same matrix as the
/// `V I Uᵀ` form written against the SVD of `Mᵀ`.
pub fn solve_procrustes(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (a, b) = m.shape();
    if a < b {
        return Err(Error::InvalidArgument(format!(
            "orthogonal Procrustes needs rows >= columns, got {a}x{b}"
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite Procrustes target".into()));
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    Ok(u * v_t)
}

/// Quantities driving the view-weight subproblem
/// `min Σ_v (q_v δ_v² − 2 p_v δ_v)` over the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaScratch {
    /// `p_v = Tr(A_v Sᵀ)`
    pub p: Vec<f64>,
    /// `q_v = Tr(A_v A_vᵀ)`, strictly positive
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSolution {
    pub delta: Vec<f64>,
    pub k: Vec<f64>,
    pub mu_tilde: f64,
    pub iterations: usize,
}

const ROOT_TOL: f64 = 1e-12;
const ROOT_MAX_ITERS: usize = 100;

impl DeltaScratch {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.len() != q.len() || p.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "p has {} entries, q has {}",
                p.len(),
                q.len()
            )));
        }
        if let Some(v) = q.iter().position(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("q[{v}] = {} is not positive", q[v])));
        }
        Ok(Self { p, q })
    }

    /// Per-view slope `1 / (q_v Σ_u 1/q_u)`; these sum to one.
    fn slopes(&self) -> Vec<f64> {
        let inv_sum: f64 = self.q.iter().map(|q| 1.0 / q).sum();
        self.q.iter().map(|q| 1.0 / (q * inv_sum)).collect()
    }

    fn k(&self, slopes: &[f64]) -> Vec<f64> {
        let ratio_sum: f64 = self.p.iter().zip(&self.q).map(|(p, q)| p / q).sum();
        self.p
            .iter()
            .zip(&self.q)
            .zip(slopes)
            .map(|((p, q), c)| p / q + (1.0 - ratio_sum) * c)
            .collect()
    }

    /// `Σ_v (q_v δ_v² − 2 p_v δ_v)`: the view-weight objective up to a constant.
    pub fn objective(&self, delta: &[f64]) -> f64 {
        delta
            .iter()
            .zip(self.p.iter().zip(&self.q))
            .map(|(d, (p, q))| q * d * d - 2.0 * p * d)
            .sum()
    }
}

fn root_fn(k: &[f64], c: &[f64], mu: f64) -> (f64, f64) {
    let mut f = -mu;
    let mut slope = -1.0;
    for (&kv, &cv) in k.iter().zip(c) {
        let t = -kv + mu * cv;
        if t > 0.0 {
            f += t;
        }
        // right derivative: a term at its kink counts as active
        if t >= 0.0 {
            slope += cv;
        }
    }
    (f, slope)
}

/// Solves the view-weight subproblem through its KKT system.
///
/// `f(μ̃) = Σ_v (−k_v + μ̃ c_v)₊ − μ̃` is convex, non-increasing and piecewise
/// linear with `f(0) ≥ 0`, so Newton from `μ̃ = 0` approaches the root from
/// the left. Bisection on the bracket takes over if a step stalls.
pub fn solve_delta(scratch: &DeltaScratch) -> Result<DeltaSolution> {
    let c = scratch.slopes();
    let k = scratch.k(&c);

    // all terms active ⇒ f = −Σk = −1 < 0
    let mut hi = k
        .iter()
        .zip(&c)
        .map(|(kv, cv)| kv / cv)
        .fold(0.0f64, f64::max)
        + 1.0;
    let mut lo = 0.0;
    let mut mu = 0.0;
    let mut iterations = 0;
    let (mut f, mut slope) = root_fn(&k, &c, mu);
    while f.abs() > ROOT_TOL {
        if iterations >= ROOT_MAX_ITERS {
            return Err(Error::RootSolve {
                iterations,
                residual: f.abs(),
            });
        }
        iterations += 1;
        if f > 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        let newton = if slope < 0.0 { mu - f / slope } else { f64::NAN };
        mu = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
        (f, slope) = root_fn(&k, &c, mu);
    }
    let delta = k
        .iter()
        .zip(&c)
        .map(|(kv, cv)| (kv - mu * cv).max(0.0))
        .collect();
    Ok(DeltaSolution {
        delta,
        k,
        mu_tilde: mu,
        iterations,
    })
}
