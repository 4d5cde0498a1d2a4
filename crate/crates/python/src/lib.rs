//! Python bindings. Matrices cross the boundary as row-major lists of lists;
//! data matrices are features × samples, as in the Rust crate.

use mvfsgl::affinity::AffinityMode;
use mvfsgl::clustering::{self, KMeansOptions};
use mvfsgl::data::{self, BlobSpec};
use mvfsgl::model::{self, FeatureRanking};
use mvfsgl::{metrics, numopt, Hyperparams, MultiViewDataset};
use nalgebra::DMatrix;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

type Rows = Vec<Vec<f64>>;
/// Views, labels and the informative row indices of each view.
type BlobsOut = (Vec<Rows>, Vec<usize>, Vec<Vec<usize>>);

fn to_py(e: mvfsgl::Error) -> PyErr {
    match e {
        mvfsgl::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_matrix(rows: &Rows) -> PyResult<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|row| row.len() != c) {
        return Err(PyValueError::new_err(format!(
            "ragged matrix: row {i} has {} entries, expected {c}",
            rows[i].len()
        )));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn to_rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn dataset(views: &[Rows], labels: Option<Vec<usize>>) -> PyResult<MultiViewDataset> {
    let mats = views.iter().map(to_matrix).collect::<PyResult<Vec<_>>>()?;
    MultiViewDataset::new(mats, labels).map_err(to_py)
}

fn affinity_mode(name: &str) -> PyResult<AffinityMode> {
    match name {
        "row" => Ok(AffinityMode::RowScaled),
        "sym" => Ok(AffinityMode::Symmetric),
        other => Err(PyValueError::new_err(format!(
            "affinity must be 'row' or 'sym', got {other:?}"
        ))),
    }
}

/// Min-max scales every feature row of every view to [0, 1].
#[pyfunction]
fn normalize(views: Vec<Rows>) -> PyResult<Vec<Rows>> {
    let ds = data::minmax_normalize(&dataset(&views, None)?);
    Ok(ds.views().iter().map(to_rows).collect())
}

/// Gaussian blobs in several views. Returns `(views, labels, informative_rows)`.
#[pyfunction]
#[pyo3(signature = (n=150, clusters=3, views=2, informative=5, noisy=15, separation=10.0, seed=1))]
fn make_blobs(
    n: usize,
    clusters: usize,
    views: usize,
    informative: usize,
    noisy: usize,
    separation: f64,
    seed: u64,
) -> PyResult<BlobsOut> {
    let blobs = data::make_blobs_multiview(&BlobSpec {
        n,
        clusters,
        views,
        informative,
        noisy,
        separation,
        seed,
    })
    .map_err(to_py)?;
    let mats = blobs.dataset.views().iter().map(to_rows).collect();
    let labels = blobs.dataset.labels().unwrap_or_default().to_vec();
    Ok((mats, labels, blobs.informative))
}

/// Learned state and trace of one fit.
#[pyclass(module = "mvfsgl", frozen)]
struct FitResult {
    inner: model::FitResult,
}

#[pymethods]
impl FitResult {
    /// Unified row-stochastic graph, n × n.
    #[getter]
    fn s(&self) -> Rows {
        to_rows(&self.inner.state.s)
    }

    #[getter]
    fn h(&self) -> Rows {
        to_rows(&self.inner.state.h)
    }

    /// Per-view feature selection matrices, m_v × d.
    #[getter]
    fn w(&self) -> Vec<Rows> {
        self.inner.state.w.iter().map(to_rows).collect()
    }

    #[getter]
    fn delta(&self) -> Vec<f64> {
        self.inner.state.delta.clone()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.trace.len()
    }

    /// Objective value after every iteration.
    #[getter]
    fn objectives(&self) -> Vec<f64> {
        self.inner.trace.objectives()
    }

    fn trace_csv(&self) -> String {
        self.inner.trace.to_csv()
    }

    /// Per view, `(scores, order)` with `order` sorted by descending score.
    fn feature_scores(&self) -> Vec<(Vec<f64>, Vec<usize>)> {
        model::feature_scores(&self.inner.state)
            .into_iter()
            .map(|FeatureRanking { scores, order }| (scores, order))
            .collect()
    }

    /// Indices of the features kept per view at `percent`, in original order.
    fn selected_features(&self, percent: f64) -> PyResult<Vec<Vec<usize>>> {
        if !(percent > 0.0 && percent <= 100.0) {
            return Err(PyValueError::new_err(format!(
                "percent must lie in (0, 100], got {percent}"
            )));
        }
        Ok(model::feature_scores(&self.inner.state)
            .iter()
            .map(|r| {
                let mut keep = r.top(model::selected_count(r.order.len(), percent)).to_vec();
                keep.sort_unstable();
                keep
            })
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "FitResult(iterations={}, converged={}, objective={})",
            self.inner.trace.len(),
            if self.inner.converged { "True" } else { "False" },
            self.inner.trace.objectives().last().copied().unwrap_or(f64::NAN)
        )
    }
}

/// Fits the model on min-max normalized copies of `views`.
#[pyfunction]
#[pyo3(signature = (
    views, clusters, *, eta=1.0, beta=1.0, gamma=1.0, alpha=1e3, neighbors=5,
    epsilon=1e-5, max_iters=100, projected_dim=None, affinity="row", seed=0
))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    views: Vec<Rows>,
    clusters: usize,
    eta: f64,
    beta: f64,
    gamma: f64,
    alpha: f64,
    neighbors: usize,
    epsilon: f64,
    max_iters: usize,
    projected_dim: Option<usize>,
    affinity: &str,
    seed: u64,
) -> PyResult<FitResult> {
    let ds = data::minmax_normalize(&dataset(&views, None)?);
    let hp = Hyperparams {
        eta,
        beta,
        gamma,
        alpha,
        clusters,
        neighbors,
        epsilon,
        max_iters,
        projected_dim,
        affinity: affinity_mode(affinity)?,
        learn_graph: true,
    };
    let inner = py.detach(|| model::fit(&ds, &hp, seed)).map_err(to_py)?;
    Ok(FitResult { inner })
}

#[pyfunction]
#[pyo3(signature = (s, clusters, seed=0))]
fn spectral_cluster(s: Rows, clusters: usize, seed: u64) -> PyResult<Vec<usize>> {
    let s = to_matrix(&s)?;
    clustering::spectral_cluster(&s, clusters, seed)
        .map(|a| a.labels)
        .map_err(to_py)
}

/// k-means on the columns of `x` (features × samples). Returns `(labels, inertia)`.
#[pyfunction]
#[pyo3(signature = (x, clusters, seed=0, restarts=10))]
fn kmeans(x: Rows, clusters: usize, seed: u64, restarts: usize) -> PyResult<(Vec<usize>, f64)> {
    let x = to_matrix(&x)?;
    let opts = KMeansOptions {
        seed,
        restarts,
        ..KMeansOptions::default()
    };
    clustering::kmeans(&x, clusters, &opts)
        .map(|r| (r.assignment.labels, r.inertia))
        .map_err(to_py)
}

#[pyfunction]
fn nmi(pred: Vec<usize>, truth: Vec<usize>) -> PyResult<f64> {
    metrics::nmi(&pred, &truth).map_err(to_py)
}

#[pyfunction]
fn acc(pred: Vec<usize>, truth: Vec<usize>) -> PyResult<f64> {
    metrics::acc(&pred, &truth).map_err(to_py)
}

#[pyfunction]
fn purity(pred: Vec<usize>, truth: Vec<usize>) -> PyResult<f64> {
    metrics::purity(&pred, &truth).map_err(to_py)
}

#[pyfunction]
fn project_simplex(v: Vec<f64>) -> Vec<f64> {
    numopt::project_simplex(&v)
}

/// Orthonormal-column `Q` maximizing `Tr(Qᵀ M)`.
#[pyfunction]
fn solve_procrustes(m: Rows) -> PyResult<Rows> {
    let m = to_matrix(&m)?;
    numopt::solve_procrustes(&m).map(|q| to_rows(&q)).map_err(to_py)
}

#[pymodule]
#[pyo3(name = "mvfsgl")]
fn mvfsgl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<FitResult>()?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(make_blobs, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_cluster, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(nmi, m)?)?;
    m.add_function(wrap_pyfunction!(acc, m)?)?;
    m.add_function(wrap_pyfunction!(purity, m)?)?;
    m.add_function(wrap_pyfunction!(project_simplex, m)?)?;
    m.add_function(wrap_pyfunction!(solve_procrustes, m)?)?;
    Ok(())
}
