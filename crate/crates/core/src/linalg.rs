//! Minimal dense symmetric linear algebra: Cholesky factorization and the
//! solves needed to evaluate Gaussian log-densities and cross-entropies.

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix
/// (row-major n x n). Returns `None` when a pivot is not strictly positive.
pub(crate) fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum.is_nan() || sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// ln det(A) from the Cholesky factor of A.
pub(crate) fn chol_logdet(l: &[f64], n: usize) -> f64 {
    (0..n).map(|i| l[i * n + i].ln()).sum::<f64>() * 2.0
}

/// Solves L z = b in place (forward substitution).
pub(crate) fn solve_lower(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * b[k];
        }
        b[i] = sum / l[i * n + i];
    }
}

/// Quadratic form x^T A^{-1} x from the Cholesky factor of A.
pub(crate) fn inv_quadratic_form(l: &[f64], n: usize, x: &[f64]) -> f64 {
    let mut z = x.to_vec();
    solve_lower(l, n, &mut z);
    z.iter().map(|v| v * v).sum()
}

/// tr(A^{-1} B) from the Cholesky factor of A; B symmetric row-major.
pub(crate) fn inv_trace_product(l: &[f64], n: usize, b: &[f64]) -> f64 {
    // Solve L W = B columnwise, then tr(A^{-1} B) = sum_ij W_ij^2-free form:
    // A^{-1} = L^{-T} L^{-1}, so tr(A^{-1} B) = tr(L^{-1} B L^{-T})
    //        = sum over columns c of (L^{-1} B L^{-T})_cc. Cheaper route:
    // solve L z_j = col_j(B), back-substitute L^T y_j = z_j, take y_j[j].
    let mut trace = 0.0;
    let mut col = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = b[i * n + j];
        }
        solve_lower(l, n, &mut col);
        // back substitution with L^T
        for i in (0..n).rev() {
            let mut sum = col[i];
            for k in i + 1..n {
                sum -= l[k * n + i] * col[k];
            }
            col[i] = sum / l[i * n + i];
        }
        trace += col[j];
    }
    trace
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        let a = [4.0, 2.0, 0.5, 2.0, 5.0, 1.0, 0.5, 1.0, 3.0];
        let l = cholesky(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += l[i * 3 + k] * l[j * 3 + k];
                }
                assert!((acc - a[i * 3 + j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = [1.0, 2.0, 2.0, 1.0];
        assert!(cholesky(&a, 2).is_none());
    }

    #[test]
    fn logdet_matches_direct_2x2() {
        let a = [3.0, 1.0, 1.0, 2.0];
        let l = cholesky(&a, 2).unwrap();
        assert!((chol_logdet(&l, 2) - (3.0f64 * 2.0 - 1.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn quadratic_form_matches_direct_2x2() {
        let a = [3.0, 1.0, 1.0, 2.0];
        let l = cholesky(&a, 2).unwrap();
        // A^{-1} = 1/5 [[2,-1],[-1,3]]; x = (1,2): x^T A^{-1} x = (2-2-2+12)/5 = 2
        let q = inv_quadratic_form(&l, 2, &[1.0, 2.0]);
        assert!((q - 2.0).abs() < 1e-12);
    }

    #[test]
    fn trace_product_matches_direct_2x2() {
        let a = [3.0, 1.0, 1.0, 2.0];
        let b = [1.0, 0.5, 0.5, 4.0];
        let l = cholesky(&a, 2).unwrap();
        // A^{-1} B = 1/5 [[2,-1],[-1,3]] [[1,.5],[.5,4]] = 1/5 [[1.5,-3],[0.5,11.5]]
        let want = (1.5 + 11.5) / 5.0;
        assert!((inv_trace_product(&l, 2, &b) - want).abs() < 1e-12);
    }
}
