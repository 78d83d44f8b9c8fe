use nalgebra::{DMatrix, DVector};

/// Thin SVD by one-sided Jacobi rotations on a QR-reduced core.
///
/// Returns `(U, sigma, V)` with `A = U * diag(sigma) * V^T`, singular values
/// sorted nonincreasing, `min(m, n)` columns kept. Jacobi is slower than
/// bidiagonalization but converges to high relative accuracy and, unlike the
/// QR-iteration SVD shipped with the dense backend, does not lose consistency
/// on exactly rank-deficient inputs.
pub(crate) fn jacobi_thin_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    if m < n {
        let (v, sigma, u) = jacobi_thin_svd(&a.transpose());
        return (u, sigma, v);
    }
    if n == 0 {
        return (DMatrix::zeros(m, 0), DVector::zeros(0), DMatrix::zeros(n, 0));
    }

    // Reduce the tall factor first; the rotations then act on an n x n core.
    let qr = a.clone().qr();
    let (q, r) = (qr.q(), qr.r());
    let (ur, sigma, v) = jacobi_core(r);
    (q * ur, sigma, v)
}

fn jacobi_core(mut w: DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let n = w.ncols();
    let mut v = DMatrix::<f64>::identity(n, n);
    let tol = 1e-15_f64;
    let max_sweeps = 64;

    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let wp = w.column(p);
                    let wq = w.column(q);
                    (wp.dot(&wp), wq.dot(&wq), wp.dot(&wq))
                };
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    // Column norms are the singular values; sort them nonincreasing.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());

    let mut sigma = DVector::zeros(n);
    let mut u = DMatrix::zeros(w.nrows(), n);
    let mut vs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        sigma[dst] = norms[src];
        if norms[src] > 0.0 {
            u.set_column(dst, &(w.column(src) / norms[src]));
        }
        vs.set_column(dst, &v.column(src));
    }

    complete_zero_columns(&mut u, &sigma);
    (u, sigma, vs)
}

fn rotate_columns(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    let rows = m.nrows();
    for i in 0..rows {
        let a = m[(i, p)];
        let b = m[(i, q)];
        m[(i, p)] = c * a - s * b;
        m[(i, q)] = s * a + c * b;
    }
}

/// Columns belonging to zero singular values come out as zero vectors; fill
/// them with an orthonormal completion so the factor stays column-orthonormal.
fn complete_zero_columns(u: &mut DMatrix<f64>, sigma: &DVector<f64>) {
    let (rows, cols) = u.shape();
    for j in 0..cols {
        if sigma[j] > 0.0 {
            continue;
        }
        // Greedy Gram-Schmidt over canonical candidates.
        'candidates: for e in 0..rows {
            let mut cand = DVector::zeros(rows);
            cand[e] = 1.0;
            for k in 0..cols {
                if k == j || (sigma[k] == 0.0 && k > j) {
                    continue;
                }
                let proj = u.column(k).dot(&cand);
                cand -= u.column(k) * proj;
            }
            let norm = cand.norm();
            if norm > 0.5 {
                u.set_column(j, &(cand / norm));
                break 'candidates;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_svd(a: &DMatrix<f64>, tol: f64) {
        let (u, sigma, v) = jacobi_thin_svd(a);
        let k = a.nrows().min(a.ncols());
        assert_eq!(u.ncols(), k);
        assert_eq!(v.ncols(), k);
        let recon = &u * DMatrix::from_diagonal(&sigma) * v.transpose();
        let scale = a.norm().max(1e-300);
        assert!(
            (a - recon).norm() <= tol * scale,
            "reconstruction error {:.3e}",
            (a - &u * DMatrix::from_diagonal(&sigma) * v.transpose()).norm() / scale
        );
        let iu = (u.transpose() * &u - DMatrix::<f64>::identity(k, k)).norm();
        let iv = (v.transpose() * &v - DMatrix::<f64>::identity(k, k)).norm();
        assert!(iu < 1e-13 && iv < 1e-13, "orthogonality {iu:.3e} {iv:.3e}");
        assert!(sigma.as_slice().windows(2).all(|w| w[0] >= w[1]));
        assert!(sigma.iter().all(|s| *s >= 0.0));
    }

    #[test]
    fn generic_tall_matrix() {
        let a = DMatrix::from_fn(11, 7, |i, j| ((i * i + 3 * j + 1) as f64).sin() + 0.1 * (i as f64));
        check_svd(&a, 1e-13);
    }

    #[test]
    fn exactly_rank_deficient_lattice() {
        // sin(a i + b j + c) has exact rank 2; this input defeats the dense
        // backend's bidiagonal SVD.
        let a = DMatrix::from_fn(12, 9, |i, j| ((i * 7 + j * 13 + 1) as f64).sin());
        check_svd(&a, 1e-13);
        let (_, sigma, _) = jacobi_thin_svd(&a);
        assert!(sigma[1] > 1.0 && sigma[2] < 1e-13 * sigma[0]);
    }

    #[test]
    fn wide_matrix_via_transpose() {
        let a = DMatrix::from_fn(4, 9, |i, j| ((2 * i + 5 * j) as f64).cos() * (j as f64 + 1.0));
        check_svd(&a, 1e-13);
    }

    #[test]
    fn zero_matrix() {
        let a = DMatrix::<f64>::zeros(5, 3);
        let (u, sigma, _v) = jacobi_thin_svd(&a);
        assert!(sigma.iter().all(|s| *s == 0.0));
        let iu = (u.transpose() * &u - DMatrix::<f64>::identity(3, 3)).norm();
        assert!(iu < 1e-14, "completion must stay orthonormal: {iu:.3e}");
    }

    #[test]
    fn diagonal_values_recovered() {
        let a = DMatrix::from_partial_diagonal(6, 4, &[3.0, 1.0, 4.0, 1.5]);
        let (_, sigma, _) = jacobi_thin_svd(&a);
        assert!((sigma[0] - 4.0).abs() < 1e-14);
        assert!((sigma[1] - 3.0).abs() < 1e-14);
        assert!((sigma[2] - 1.5).abs() < 1e-14);
        assert!((sigma[3] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tiny_singular_values_resolved() {
        // sigma = (1, 1e-9): relative accuracy on the small value matters for
        // tolerance truncation decisions.
        let q1 = DMatrix::from_fn(8, 2, |i, j| ((i + 9 * j + 1) as f64).sin()).qr().q();
        let q2 = DMatrix::from_fn(6, 2, |i, j| ((3 * i + j + 2) as f64).cos()).qr().q();
        let a = &q1 * DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 1e-9])) * q2.transpose();
        let (_, sigma, _) = jacobi_thin_svd(&a);
        assert!((sigma[0] - 1.0).abs() < 1e-12);
        // forming the product already perturbs sigma2 by O(eps * sigma1)
        assert!((sigma[1] - 1e-9).abs() < 1e-14, "sigma2 = {:e}", sigma[1]);
    }
}
