use nalgebra::{DMatrix, DVector};

use super::laplacian::laplacian;

/// All decision variables of the penalized problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    /// Per-view feature-selection matrices, `m_v × d`.
    pub w: Vec<DMatrix<f64>>,
    /// Per-view orthonormal bases, `d × c`.
    pub b: Vec<DMatrix<f64>>,
    /// Shared cluster indicator, `n × c`, orthonormal columns.
    pub h: DMatrix<f64>,
    /// Nonnegative copy of `H`.
    pub z: DMatrix<f64>,
    /// Unified similarity graph, `n × n`, row-stochastic.
    pub s: DMatrix<f64>,
    /// View weights on the simplex.
    pub delta: Vec<f64>,
    /// Diagonals of the ℓ2,1 reweighting matrices `D_v`.
    pub d: Vec<DVector<f64>>,
}

/// Worst-case violation of each constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// `max |HᵀH − I|`
    pub h_orthogonality: f64,
    /// `max_v max |B_vᵀB_v − I|`
    pub b_orthogonality: f64,
    pub z_min: f64,
    /// `max_i |Σ_j s_ij − 1|`
    pub s_row_sum: f64,
    pub s_min: f64,
    /// `|Σ δ − 1|`
    pub delta_sum: f64,
    pub delta_min: f64,
    /// `max |L·1|`
    pub laplacian_row: f64,
    pub d_min: f64,
}

fn orthogonality(m: &DMatrix<f64>) -> f64 {
    let k = m.ncols();
    (m.transpose() * m - DMatrix::identity(k, k)).amax()
}

impl ModelState {
    pub fn n_views(&self) -> usize {
        self.w.len()
    }

    pub fn residuals(&self) -> Residuals {
        let lap = laplacian(&self.s);
        let ones = DVector::from_element(self.s.nrows(), 1.0);
        Residuals {
            h_orthogonality: orthogonality(&self.h),
            b_orthogonality: self.b.iter().map(orthogonality).fold(0.0, f64::max),
            z_min: self.z.min(),
            s_row_sum: self
                .s
                .row_iter()
                .map(|r| (r.sum() - 1.0).abs())
                .fold(0.0, f64::max),
            s_min: self.s.min(),
            delta_sum: (self.delta.iter().sum::<f64>() - 1.0).abs(),
            delta_min: self.delta.iter().copied().fold(f64::INFINITY, f64::min),
            laplacian_row: (&lap.l * ones).amax(),
            d_min: self
                .d
                .iter()
                .map(|d| d.min())
                .fold(f64::INFINITY, f64::min),
        }
    }
}
