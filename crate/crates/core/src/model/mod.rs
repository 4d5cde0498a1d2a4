//! Joint feature selection and graph learning by alternating minimization.
//!
//! The solver minimizes, over `W_v`, `B_v`, `H`, `Z`, `S` and `δ`,
//!
//! ```text
//! Σ_v ‖W_vᵀX_v − B_v Hᵀ‖² + η‖W_v‖₂,₁ + γ Tr(W_vᵀX_v L X_vᵀW_v) + β‖S − δ_v A_v‖²
//!     + α‖H − Z‖²
//! ```
//!
//! subject to `HᵀH = I`, `B_vᵀB_v = I`, `Z ≥ 0`, row-stochastic `S ≥ 0` and `δ`
//! on the simplex, where `L` is the Laplacian of `(S + Sᵀ)/2`. Each update
//! solves its block exactly (or, for `W`, minimizes the reweighted ℓ2,1
//! surrogate), so the penalized objective is non-increasing step by step.

mod features;
mod laplacian;
mod state;
mod trace;
mod updates;

pub use features::{feature_scores, select_features, selected_count, FeatureRanking};
pub use laplacian::{laplacian, GraphLaplacian};
pub use state::{ModelState, Residuals};
pub use trace::{IterationRecord, RunTrace, Step};
pub use updates::{pure_graph_learning, GraphOnlyResult, ObjectiveTerms};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::affinity::{build_affinities, AffinityGraph, AffinityMode};
use crate::clustering::{kmeans, KMeansOptions};
use crate::data::{stack_views, MultiViewDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// ℓ2,1 weight η
    pub eta: f64,
    /// graph-learning weight β
    pub beta: f64,
    /// locality-preservation weight γ
    pub gamma: f64,
    /// penalty factor α on ‖H − Z‖²
    pub alpha: f64,
    pub clusters: usize,
    /// K for the K-NN affinity graphs
    pub neighbors: usize,
    /// relative objective-change tolerance
    pub epsilon: f64,
    pub max_iters: usize,
    /// projected dimension per view, `clusters` when unset
    pub projected_dim: Option<usize>,
    pub affinity: AffinityMode,
    /// When false the S update is skipped and S stays at its initial fused graph.
    pub learn_graph: bool,
}

impl Hyperparams {
    pub fn new(clusters: usize) -> Self {
        Self {
            eta: 1.0,
            beta: 1.0,
            gamma: 1.0,
            alpha: 1e3,
            clusters,
            neighbors: 5,
            epsilon: 1e-5,
            max_iters: 100,
            projected_dim: None,
            affinity: AffinityMode::RowScaled,
            learn_graph: true,
        }
    }

    pub fn projected_dim(&self) -> usize {
        self.projected_dim.unwrap_or(self.clusters)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.clusters < 2 {
            return bad(format!("cluster count must be >= 2, got {}", self.clusters));
        }
        for (name, value) in [("eta", self.eta), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(value >= 0.0) || !value.is_finite() {
                return bad(format!("{name} must be finite and >= 0, got {value}"));
            }
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return bad(format!("alpha must be finite and > 0, got {}", self.alpha));
        }
        if self.neighbors == 0 {
            return bad("neighbor count must be >= 1".into());
        }
        if !(self.epsilon >= 0.0) {
            return bad(format!("epsilon must be >= 0, got {}", self.epsilon));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be >= 1".into());
        }
        if self.projected_dim() < self.clusters {
            return bad(format!(
                "projected dimension {} is smaller than the cluster count {}",
                self.projected_dim(),
                self.clusters
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub state: ModelState,
    pub trace: RunTrace,
    pub converged: bool,
}

/// Problem data bound to one dataset: the views, their affinity graphs and
/// the hyperparameters.
pub struct Jmvfg<'a> {
    views: &'a [DMatrix<f64>],
    affinities: Vec<AffinityGraph>,
    hp: Hyperparams,
    grams: Vec<DMatrix<f64>>,
}

impl<'a> Jmvfg<'a> {
    /// Builds the per-view affinity graphs from `ds`, which should already be
    /// min-max normalized.
    pub fn new(ds: &'a MultiViewDataset, hp: Hyperparams) -> Result<Self> {
        hp.validate()?;
        let affinities = build_affinities(ds, hp.neighbors, hp.affinity)?;
        Self::with_affinities(ds, affinities, hp)
    }

    pub fn with_affinities(
        ds: &'a MultiViewDataset,
        affinities: Vec<AffinityGraph>,
        hp: Hyperparams,
    ) -> Result<Self> {
        hp.validate()?;
        let n = ds.n_samples();
        if ds.n_samples() < hp.clusters {
            return Err(Error::InvalidArgument(format!(
                "{n} samples cannot form {} clusters",
                hp.clusters
            )));
        }
        if affinities.len() != ds.n_views() {
            return Err(Error::DimensionMismatch(format!(
                "{} affinity graphs for {} views",
                affinities.len(),
                ds.n_views()
            )));
        }
        if let Some(v) = affinities.iter().position(|a| a.matrix.shape() != (n, n)) {
            return Err(Error::DimensionMismatch(format!("affinity graph {v} is not {n}x{n}")));
        }
        let views = ds.views();
        let grams = views.par_iter().map(|x| x * x.transpose()).collect();
        Ok(Self {
            views,
            affinities,
            hp,
            grams,
        })
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    pub fn affinities(&self) -> &[AffinityGraph] {
        &self.affinities
    }

    pub fn views(&self) -> &[DMatrix<f64>] {
        self.views
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn n_samples(&self) -> usize {
        self.views[0].ncols()
    }

    /// Initial state: uniform `δ`, `S = Σ δ_v A_v` with rows rescaled to sum
    /// to one, `H` from k-means on the
    /// concatenated views, `W_v = [I 0]ᵀ`, `D_v = I` and `B_v` from its
    /// Procrustes update.
    pub fn initialize(&self, seed: u64) -> Result<ModelState> {
        let n = self.n_samples();
        let v_count = self.n_views();
        let c = self.hp.clusters;
        let d = self.hp.projected_dim();

        let delta = vec![1.0 / v_count as f64; v_count];
        let mut s = DMatrix::zeros(n, n);
        for (a, dv) in self.affinities.iter().zip(&delta) {
            s += &a.matrix * *dv;
        }
        // start from a feasible graph so the first S step cannot increase the objective
        for mut row in s.row_iter_mut() {
            let total = row.sum();
            row /= total;
        }

        let stacked = stack_views(self.views);
        let km = kmeans(
            &stacked,
            c,
            &KMeansOptions {
                seed,
                ..KMeansOptions::default()
            },
        )?;
        let mut sizes = vec![0usize; c];
        for &l in &km.assignment.labels {
            sizes[l] += 1;
        }
        if sizes.contains(&0) {
            return Err(Error::EmptyClusters { clusters: c });
        }
        let mut h = DMatrix::zeros(n, c);
        for (i, &l) in km.assignment.labels.iter().enumerate() {
            h[(i, l)] = 1.0 / (sizes[l] as f64).sqrt();
        }

        let w: Vec<_> = self
            .views
            .iter()
            .map(|x| DMatrix::identity(x.nrows(), d))
            .collect();
        let diag = self
            .views
            .iter()
            .map(|x| nalgebra::DVector::from_element(x.nrows(), 1.0))
            .collect();
        let mut state = ModelState {
            w,
            b: vec![DMatrix::zeros(d, c); v_count],
            z: h.clone(),
            h,
            s,
            delta,
            d: diag,
        };
        self.update_b(&mut state)?;
        Ok(state)
    }

    /// Runs the alternating updates from a fresh initialization.
    pub fn fit(&self, seed: u64) -> Result<FitResult> {
        let mut state = self.initialize(seed)?;
        let (trace, converged) = self.run(&mut state)?;
        Ok(FitResult {
            state,
            trace,
            converged,
        })
    }

    /// Iterates from `state` until the relative change of the objective drops
    /// to `epsilon` or `max_iters` is reached.
    pub fn run(&self, state: &mut ModelState) -> Result<(RunTrace, bool)> {
        let initial = self.objective(state);
        let initial_penalized = self.penalized_objective(state);
        let mut trace = RunTrace::new(initial, initial_penalized);
        let mut prev = initial;
        let mut converged = false;
        for iteration in 1..=self.hp.max_iters {
            let record = self.iterate(state, iteration)?;
            let obj = record.objective;
            trace.push(record);
            if relative_change(prev, obj) <= self.hp.epsilon {
                converged = true;
                break;
            }
            prev = obj;
        }
        Ok((trace, converged))
    }

    /// One pass of the six block updates in order δ, W/D, B, Z, H, S.
    pub fn iterate(&self, state: &mut ModelState, iteration: usize) -> Result<IterationRecord> {
        let mut step_deltas = [0.0; 6];
        let mut before = self.penalized_objective(state);
        for (i, step) in Step::ALL.iter().enumerate() {
            match step {
                Step::Delta => self.update_delta(state)?,
                Step::W => self.update_w(state)?,
                Step::B => self.update_b(state)?,
                Step::Z => self.update_z(state),
                Step::H => self.update_h(state)?,
                Step::S => {
                    if self.hp.learn_graph {
                        self.update_s(state)?
                    }
                }
            }
            let after = self.penalized_objective(state);
            if !after.is_finite() {
                return Err(Error::NonFinite {
                    step: step.name(),
                    iteration,
                });
            }
            step_deltas[i] = after - before;
            before = after;
        }
        Ok(IterationRecord {
            iteration,
            objective: self.objective(state),
            penalized: before,
            step_deltas,
            residuals: state.residuals(),
        })
    }
}

/// `|(prev − cur) / prev|`, with `0/0` read as no change.
pub fn relative_change(prev: f64, cur: f64) -> f64 {
    if prev == cur {
        0.0
    } else if prev == 0.0 {
        f64::INFINITY
    } else {
        ((prev - cur) / prev).abs()
    }
}

/// Builds the affinity graphs from `ds` and runs the solver.
pub fn fit(ds: &MultiViewDataset, hp: &Hyperparams, seed: u64) -> Result<FitResult> {
    Jmvfg::new(ds, hp.clone())?.fit(seed)
}
