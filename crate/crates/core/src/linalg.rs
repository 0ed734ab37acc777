use nalgebra::{DMatrix, DVector};

/// Eigenpairs of a symmetric matrix, eigenvalues descending. Eigenvectors are
/// the columns of the returned matrix.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Sample covariance of the rows (divisor N−1) and the column means.
pub fn covariance(x: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = x.nrows();
    let mean = x.row_mean().transpose();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    (cov, mean)
}

/// Flips each column so that its largest-magnitude entry is positive.
pub fn fix_column_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let pivot = col.iter().copied().fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

/// Extends `basis` (orthonormal columns, possibly none) to `target` columns
/// using `candidates` first and then the standard basis, via twice-applied
/// Gram–Schmidt.
pub fn complete_orthonormal(basis: Vec<DVector<f64>>, candidates: &[DVector<f64>], dim: usize, target: usize) -> DMatrix<f64> {
    let mut cols = basis;
    let std_basis = (0..dim).map(|i| {
        let mut e = DVector::zeros(dim);
        e[i] = 1.0;
        e
    });
    for cand in candidates.iter().cloned().chain(std_basis) {
        if cols.len() >= target {
            break;
        }
        let mut v = cand;
        for _ in 0..2 {
            for c in &cols {
                let d = c.dot(&v);
                v.axpy(-d, c, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / norm);
        }
    }
    DMatrix::from_columns(&cols)
}

/// `‖AᵀA − I‖_F`
pub fn orthonormality_error(a: &DMatrix<f64>) -> f64 {
    (a.transpose() * a - DMatrix::identity(a.ncols(), a.ncols())).norm()
}
