//! Dense symmetric linear-algebra helpers and a matrix-free Lanczos solver.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// Eigenvalues (ascending) and matching eigenvector columns of a symmetric matrix.
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let se = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..se.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vecs = DMatrix::from_columns(
        &order.iter().map(|&i| se.eigenvectors.column(i).into_owned()).collect::<Vec<_>>(),
    );
    (vals, vecs)
}

pub fn min_eig_sym(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

/// Operator norm (largest |eigenvalue|) of a symmetric matrix.
pub fn opnorm_sym(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l.abs()))
}

/// Square root of a symmetric positive-semidefinite matrix, with eigenvalues
/// clamped at 0 below `1e-12·‖m‖` to absorb rounding on marginal cases.
pub fn sqrt_psd(m: &DMatrix<f64>, label: &str) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eigen(m);
    let scale = vals.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let clamp = -1e-12 * scale.max(1.0);
    let mut roots = DVector::zeros(vals.len());
    for (i, &v) in vals.iter().enumerate() {
        if v < clamp {
            return Err(Error::Domain(format!(
                "{label} is indefinite: eigenvalue {v:.6e} below the clamping threshold"
            )));
        }
        roots[i] = v.max(0.0).sqrt();
    }
    Ok(&vecs * DMatrix::from_diagonal(&roots) * vecs.transpose())
}

/// Lowest eigenpair of a symmetric operator given as a matvec closure, by
/// Lanczos with full reorthogonalization. Deterministic for a fixed start.
pub fn lanczos_lowest<F>(
    dim: usize,
    matvec: F,
    start: Option<DVector<f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, DVector<f64>)>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut v = start.unwrap_or_else(|| DVector::from_element(dim, 1.0));
    let n0 = v.norm();
    if n0 == 0.0 {
        return Err(Error::Validation("zero start vector".into()));
    }
    v /= n0;

    let mut basis: Vec<DVector<f64>> = vec![v.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut last_residual = f64::INFINITY;

    for it in 0..max_iter.min(dim) {
        let mut w = matvec(&basis[it]);
        let alpha = basis[it].dot(&w);
        alphas.push(alpha);
        // full reorthogonalization (twice for safety)
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w -= b * c;
            }
        }
        let beta = w.norm();

        // Rayleigh-Ritz on the tridiagonal
        let k = alphas.len();
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alphas[i];
            if i + 1 < k {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let (tvals, tvecs) = sym_eigen(&t);
        let theta = tvals[0];
        let y = tvecs.column(0);
        last_residual = (beta * y[k - 1]).abs();
        if last_residual <= tol * theta.abs().max(1.0) || beta < 1e-14 || it + 1 == dim {
            let mut x = DVector::zeros(dim);
            for (i, b) in basis.iter().enumerate() {
                x += b * y[i];
            }
            x /= x.norm();
            return Ok((theta, x));
        }
        betas.push(beta);
        basis.push(w / beta);
    }
    Err(Error::Convergence { residual: last_residual, iterations: max_iter })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn sqrt_psd_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_sym(6, &mut rng);
        let psd = &a * a.transpose() + DMatrix::identity(6, 6) * 0.1;
        let r = sqrt_psd(&psd, "test").unwrap();
        assert!((&r * &r - &psd).amax() < 1e-10);
    }

    #[test]
    fn sqrt_psd_rejects_indefinite() {
        let m = DMatrix::from_diagonal(&nalgebra::dvector![1.0, -0.5]);
        assert!(sqrt_psd(&m, "D").is_err());
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_sym(40, &mut rng);
        let dense_min = min_eig_sym(&a);
        let (theta, x) = lanczos_lowest(40, |v| &a * v, None, 1e-12, 200).unwrap();
        assert!((theta - dense_min).abs() < 1e-9);
        assert!(((&a * &x) - &x * theta).norm() < 1e-8);
    }
}
