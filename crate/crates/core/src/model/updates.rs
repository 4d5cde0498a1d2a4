use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::laplacian::{laplacian, GraphLaplacian};
use super::state::ModelState;
use super::{relative_change, Jmvfg};
use crate::affinity::{pairwise_sq_distances, AffinityGraph};
use crate::error::{Error, Result};
use crate::numopt::{project_simplex, solve_delta, solve_procrustes, DeltaScratch};

/// Floor on `‖w_i‖` when refreshing `D`.
pub(crate) const ROW_NORM_FLOOR: f64 = 1e-8;
const CHOLESKY_JITTER: f64 = 1e-10;

/// Weighted contributions of each term of the objective, summed over views.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    /// `Σ_v ‖W_vᵀX_v − B_v Hᵀ‖²`
    pub decomposition: f64,
    /// `η Σ_v ‖W_v‖₂,₁`
    pub sparsity: f64,
    /// `γ Σ_v Tr(W_vᵀX_v L X_vᵀW_v)`
    pub locality: f64,
    /// `β Σ_v ‖S − δ_v A_v‖²`
    pub graph: f64,
    /// `α ‖H − Z‖²`
    pub penalty: f64,
}

impl ObjectiveTerms {
    pub fn objective(&self) -> f64 {
        self.decomposition + self.sparsity + self.locality + self.graph
    }

    pub fn penalized(&self) -> f64 {
        self.objective() + self.penalty
    }
}

pub(crate) fn l21_norm(w: &DMatrix<f64>) -> f64 {
    w.row_iter().map(|r| r.norm()).sum()
}

/// `Tr(Y L Yᵀ)`.
pub(crate) fn laplacian_form(y: &DMatrix<f64>, l: &DMatrix<f64>) -> f64 {
    (y * l).dot(y)
}

fn sq_dist_to_scaled(s: &DMatrix<f64>, a: &DMatrix<f64>, scale: f64) -> f64 {
    s.iter()
        .zip(a.iter())
        .map(|(s, a)| {
            let d = s - scale * a;
            d * d
        })
        .sum()
}

impl Jmvfg<'_> {
    pub fn objective_terms(&self, state: &ModelState) -> ObjectiveTerms {
        let lap = laplacian(&state.s);
        self.objective_terms_with(state, &lap)
    }

    fn objective_terms_with(&self, state: &ModelState, lap: &GraphLaplacian) -> ObjectiveTerms {
        let hp = &self.hp;
        let ht = state.h.transpose();
        let per_view: Vec<[f64; 4]> = (0..self.n_views())
            .into_par_iter()
            .map(|v| {
                let x = &self.views[v];
                let w = &state.w[v];
                let y = w.transpose() * x;
                let residual = &y - &state.b[v] * &ht;
                [
                    residual.norm_squared(),
                    l21_norm(w),
                    laplacian_form(&y, &lap.l),
                    sq_dist_to_scaled(&state.s, &self.affinities[v].matrix, state.delta[v]),
                ]
            })
            .collect();
        let mut terms = ObjectiveTerms {
            decomposition: 0.0,
            sparsity: 0.0,
            locality: 0.0,
            graph: 0.0,
            penalty: hp.alpha * (&state.h - &state.z).norm_squared(),
        };
        for [dec, l21, loc, graph] in per_view {
            terms.decomposition += dec;
            terms.sparsity += hp.eta * l21;
            terms.locality += hp.gamma * loc;
            terms.graph += hp.beta * graph;
        }
        terms
    }

    /// Unpenalized objective; the convergence test runs on this value.
    pub fn objective(&self, state: &ModelState) -> f64 {
        self.objective_terms(state).objective()
    }

    /// Objective plus `α‖H − Z‖²`.
    pub fn penalized_objective(&self, state: &ModelState) -> f64 {
        self.objective_terms(state).penalized()
    }

    pub fn delta_scratch(&self, state: &ModelState) -> Result<DeltaScratch> {
        let p = self
            .affinities
            .iter()
            .map(|a| a.matrix.dot(&state.s))
            .collect();
        let q = self
            .affinities
            .iter()
            .map(|a| a.matrix.norm_squared())
            .collect();
        DeltaScratch::new(p, q)
    }

    pub fn update_delta(&self, state: &mut ModelState) -> Result<()> {
        let scratch = self.delta_scratch(state)?;
        state.delta = solve_delta(&scratch)?.delta;
        Ok(())
    }

    /// Solves `(XXᵀ + γXLXᵀ + ηD) W = X H Bᵀ` per view, then refreshes `D`.
    pub fn update_w(&self, state: &mut ModelState) -> Result<()> {
        let lap = laplacian(&state.s);
        let updated: Vec<(DMatrix<f64>, DVector<f64>)> = (0..self.n_views())
            .into_par_iter()
            .map(|v| {
                let x = &self.views[v];
                let system = self.w_system(v, &state.d[v], &lap.l);
                let rhs = x * &state.h * state.b[v].transpose();
                let w = solve_spd(system, &rhs).map_err(|e| e.in_view(v))?;
                let d = DVector::from_iterator(
                    w.nrows(),
                    w.row_iter()
                        .map(|r| 1.0 / (2.0 * r.norm().max(ROW_NORM_FLOOR))),
                );
                Ok((w, d))
            })
            .collect::<Result<_>>()?;
        for (v, (w, d)) in updated.into_iter().enumerate() {
            state.w[v] = w;
            state.d[v] = d;
        }
        Ok(())
    }

    /// `XXᵀ + γXLXᵀ + η diag(d)` for view `v`.
    pub fn w_system(&self, v: usize, d: &DVector<f64>, l: &DMatrix<f64>) -> DMatrix<f64> {
        let x = &self.views[v];
        let mut system = self.grams[v].clone();
        if self.hp.gamma != 0.0 {
            system += (x * l * x.transpose()) * self.hp.gamma;
        }
        for i in 0..system.nrows() {
            system[(i, i)] += self.hp.eta * d[i];
        }
        system
    }

    /// `B_v ← argmax Tr(B_vᵀ W_vᵀ X_v H)` over orthonormal columns.
    pub fn update_b(&self, state: &mut ModelState) -> Result<()> {
        let b = (0..self.n_views())
            .into_par_iter()
            .map(|v| {
                let target = state.w[v].transpose() * &self.views[v] * &state.h;
                solve_procrustes(&target)
            })
            .collect::<Result<Vec<_>>>()?;
        state.b = b;
        Ok(())
    }

    pub fn update_z(&self, state: &mut ModelState) {
        state.z = state.h.map(|h| h.max(0.0));
    }

    /// `H ← argmax Tr(Hᵀ M)` with `M = Σ_v X_vᵀ W_v B_v + αZ`.
    pub fn update_h(&self, state: &mut ModelState) -> Result<()> {
        let mut target = &state.z * self.hp.alpha;
        for v in 0..self.n_views() {
            target += self.views[v].transpose() * (&state.w[v] * &state.b[v]);
        }
        state.h = solve_procrustes(&target)?;
        Ok(())
    }

    /// Row-wise simplex projection of
    /// `r_i = (2 Σ_v δ_v a_vi − (γ/2β) Σ_v g_vi) / 2V`, where `g_v` holds the
    /// squared distances between projected samples `W_vᵀ x_j`.
    pub fn update_s(&self, state: &mut ModelState) -> Result<()> {
        let hp = &self.hp;
        if !(hp.beta > 0.0) {
            return Err(Error::InvalidArgument(
                "the S update divides by beta; with beta = 0 disable graph learning explicitly \
                 (learn_graph = false) instead"
                    .into(),
            ));
        }
        let n = self.n_samples();
        let v_count = self.n_views() as f64;
        let mut target = DMatrix::zeros(n, n);
        for (a, dv) in self.affinities.iter().zip(&state.delta) {
            target += &a.matrix * (2.0 * dv);
        }
        if hp.gamma != 0.0 {
            let distances: Vec<DMatrix<f64>> = (0..self.n_views())
                .into_par_iter()
                .map(|v| pairwise_sq_distances(&(state.w[v].transpose() * &self.views[v])))
                .collect();
            let coef = hp.gamma / (2.0 * hp.beta);
            for g in &distances {
                target -= g * coef;
            }
        }
        target /= 2.0 * v_count;
        let mut s = DMatrix::zeros(n, n);
        for i in 0..n {
            let row: Vec<f64> = target.row(i).iter().copied().collect();
            for (j, x) in project_simplex(&row).into_iter().enumerate() {
                s[(i, j)] = x;
            }
        }
        state.s = s;
        Ok(())
    }
}

/// Cholesky solve with one jittered retry.
fn solve_spd(mut system: DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(chol) = system.clone().cholesky() {
        return Ok(chol.solve(rhs));
    }
    for i in 0..system.nrows() {
        system[(i, i)] += CHOLESKY_JITTER;
    }
    if let Some(chol) = system.clone().cholesky() {
        return Ok(chol.solve(rhs));
    }
    let eig = system.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    Err(Error::NotPositiveDefinite { view: 0, condition })
}

/// Output of graph learning on the affinity graphs alone (no feature terms).
#[derive(Debug, Clone, PartialEq)]
pub struct GraphOnlyResult {
    pub s: DMatrix<f64>,
    pub delta: Vec<f64>,
    pub objectives: Vec<f64>,
    pub converged: bool,
}

/// Minimizes `Σ_v ‖S − δ_v A_v‖²` over row-stochastic `S` and simplex `δ` by
/// alternating the two exact block updates.
pub fn pure_graph_learning(
    affinities: &[AffinityGraph],
    epsilon: f64,
    max_iters: usize,
) -> Result<GraphOnlyResult> {
    let v_count = affinities.len();
    if v_count == 0 {
        return Err(Error::InvalidArgument("no affinity graphs".into()));
    }
    let n = affinities[0].matrix.nrows();
    let mut delta = vec![1.0 / v_count as f64; v_count];
    let fuse = |delta: &[f64]| {
        let mut s = DMatrix::zeros(n, n);
        for (a, dv) in affinities.iter().zip(delta) {
            s += &a.matrix * *dv;
        }
        s
    };
    let objective = |s: &DMatrix<f64>, delta: &[f64]| -> f64 {
        affinities
            .iter()
            .zip(delta)
            .map(|(a, dv)| sq_dist_to_scaled(s, &a.matrix, *dv))
            .sum()
    };
    let mut s = fuse(&delta);
    let mut prev = objective(&s, &delta);
    let mut objectives = Vec::new();
    let mut converged = false;
    let q: Vec<f64> = affinities.iter().map(|a| a.matrix.norm_squared()).collect();
    for _ in 0..max_iters {
        let p = affinities.iter().map(|a| a.matrix.dot(&s)).collect();
        delta = solve_delta(&DeltaScratch::new(p, q.clone())?)?.delta;
        let target = fuse(&delta) / v_count as f64;
        for i in 0..n {
            let row: Vec<f64> = target.row(i).iter().copied().collect();
            for (j, x) in project_simplex(&row).into_iter().enumerate() {
                s[(i, j)] = x;
            }
        }
        let obj = objective(&s, &delta);
        objectives.push(obj);
        if relative_change(prev, obj) <= epsilon {
            converged = true;
            break;
        }
        prev = obj;
    }
    Ok(GraphOnlyResult {
        s,
        delta,
        objectives,
        converged,
    })
}
