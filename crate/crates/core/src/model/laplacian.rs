use nalgebra::{DMatrix, DVector};

/// Laplacian `L = P − S̄` of the symmetrized graph `S̄ = (S + Sᵀ)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphLaplacian {
    pub l: DMatrix<f64>,
    /// Diagonal of the degree matrix `P`.
    pub degree: DVector<f64>,
    pub s_bar: DMatrix<f64>,
}

pub fn laplacian(s: &DMatrix<f64>) -> GraphLaplacian {
    let n = s.nrows();
    let mut s_bar = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v = 0.5 * (s[(i, j)] + s[(j, i)]);
            s_bar[(i, j)] = v;
            s_bar[(j, i)] = v;
        }
    }
    let degree = DVector::from_iterator(n, s_bar.row_iter().map(|r| r.sum()));
    let mut l = -&s_bar;
    for i in 0..n {
        l[(i, i)] += degree[i];
    }
    GraphLaplacian { l, degree, s_bar }
}
