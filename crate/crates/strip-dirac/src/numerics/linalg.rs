//! Dense symmetric / Hermitian eigenproblems on top of nalgebra.

use crate::error::{solver, Result};
use nalgebra::{ComplexField, DMatrix};

/// Eigen-decomposition of a symmetric (Hermitian) matrix, eigenvalues ascending.
pub fn eigh<T: ComplexField<RealField = f64>>(m: DMatrix<T>) -> (Vec<f64>, DMatrix<T>) {
    let n = m.nrows();
    let se = m.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let vals = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        vecs.set_column(k, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Pencil `A x = μ B x` with `A` Hermitian and `B` Hermitian positive definite.
/// Returns ascending eigenvalues and `B`-orthonormal eigenvectors.
pub fn eigh_pencil<T: ComplexField<RealField = f64>>(
    a: &DMatrix<T>,
    b: &DMatrix<T>,
) -> Result<(Vec<f64>, DMatrix<T>)> {
    let chol = match b.clone().cholesky() {
        Some(c) => c,
        None => return solver("pencil mass matrix is not positive definite"),
    };
    let l = chol.l();
    let linv_a = l
        .solve_lower_triangular(a)
        .ok_or_else(|| crate::Error::Solver("triangular solve failed".into()))?;
    let c = l
        .solve_lower_triangular(&linv_a.adjoint())
        .ok_or_else(|| crate::Error::Solver("triangular solve failed".into()))?;
    let c = (&c + c.adjoint()).scale(0.5);
    let (vals, y) = eigh(c);
    let x = l
        .adjoint()
        .solve_upper_triangular(&y)
        .ok_or_else(|| crate::Error::Solver("triangular solve failed".into()))?;
    Ok((vals, x))
}

/// Symmetrize in place (average with the adjoint).
pub fn hermitize<T: ComplexField<RealField = f64>>(m: &mut DMatrix<T>) {
    let t = m.adjoint();
    *m += t;
    m.scale_mut(0.5);
}
