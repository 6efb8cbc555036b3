//! Dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

use crate::rng;

/// `c = alpha * op(a) * op(b) + beta * c`, where `op` optionally transposes.
///
/// Transposition is expressed through strides, so no copies are made.
pub fn gemm(
    alpha: f64,
    a: &DMatrix<f64>,
    trans_a: bool,
    b: &DMatrix<f64>,
    trans_b: bool,
    beta: f64,
    c: &mut DMatrix<f64>,
) {
    let (m, k) = if trans_a { (a.ncols(), a.nrows()) } else { (a.nrows(), a.ncols()) };
    let (kb, n) = if trans_b { (b.ncols(), b.nrows()) } else { (b.nrows(), b.ncols()) };
    assert_eq!(k, kb, "inner dimensions differ");
    assert_eq!((c.nrows(), c.ncols()), (m, n), "output shape mismatch");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.scale_mut(beta);
        return;
    }
    // Column-major: element (i, j) lives at i + j * nrows.
    let (rsa, csa) = if trans_a { (a.nrows() as isize, 1) } else { (1, a.nrows() as isize) };
    let (rsb, csb) = if trans_b { (b.nrows() as isize, 1) } else { (1, b.nrows() as isize) };
    let rsc = 1;
    let csc = c.nrows() as isize;
    // SAFETY: the pointers and strides describe exactly the storage of `a`, `b` and `c`,
    // whose shapes were checked above; `c` does not alias `a` or `b` (it is `&mut`).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            rsc,
            csc,
        );
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Thin SVD with singular triplets sorted by descending singular value.
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v_t: DMatrix<f64>,
}

pub fn sorted_svd(m: &DMatrix<f64>) -> SortedSvd {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let u_sorted = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let vt_sorted = DMatrix::from_fn(order.len(), v_t.ncols(), |r, c| v_t[(order[r], c)]);
    SortedSvd { u: u_sorted, singular_values: order.iter().map(|&i| s[i]).collect(), v_t: vt_sorted }
}

/// Largest singular value by power iteration on `MᵀM` (or `MMᵀ`, whichever is smaller).
///
/// Stops after `max_iter` iterations or once the Rayleigh quotient changes by less
/// than `tol` relative. The start vector is drawn from `seed`.
pub fn spectral_norm(m: &DMatrix<f64>, max_iter: usize, tol: f64, seed: u64) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.ncols() == 1 || m.nrows() == 1 {
        return m.norm();
    }
    let gram = if m.ncols() <= m.nrows() { m.transpose() * m } else { m * m.transpose() };
    largest_eigenvalue_psd(&gram, max_iter, tol, seed).max(0.0).sqrt()
}

/// Dominant eigenvalue of a symmetric positive semi-definite matrix.
pub fn largest_eigenvalue_psd(a: &DMatrix<f64>, max_iter: usize, tol: f64, seed: u64) -> f64 {
    let n = a.nrows();
    let mut rng = rng::seeded(seed);
    let mut v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let norm = v.norm();
    if norm == 0.0 {
        v[0] = 1.0;
    } else {
        v /= norm;
    }
    let mut lambda = 0.0;
    for _ in 0..max_iter.max(1) {
        let w = a * &v;
        let next = v.dot(&w);
        let wn = w.norm();
        if wn == 0.0 {
            return 0.0;
        }
        v = w / wn;
        let converged = (next - lambda).abs() <= tol * next.abs().max(f64::MIN_POSITIVE);
        lambda = next;
        if converged {
            break;
        }
    }
    // One more Rayleigh quotient with the final direction.
    lambda.max(v.dot(&(a * &v)))
}

/// Solves the symmetric positive-definite system `a x = b` by Cholesky, falling back to
/// an SVD least-squares solve when the factorisation fails.
pub fn solve_spd(a: DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    match a.clone().cholesky() {
        Some(ch) => ch.solve(b),
        None => a.svd(true, true).solve(b, 1e-14).expect("SVD solve with U and V computed"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gemm_matches_nalgebra_for_all_transpose_combinations() {
        let a = DMatrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64 * 0.3 - 1.0);
        let b = DMatrix::from_fn(4, 2, |i, j| (i as f64 - j as f64).sin());
        let mut c = DMatrix::zeros(3, 2);
        gemm(1.0, &a, false, &b, false, 0.0, &mut c);
        assert!((&c - &a * &b).norm() < 1e-12);

        let at = a.transpose();
        let bt = b.transpose();
        let mut c2 = DMatrix::from_element(3, 2, 1.0);
        gemm(2.0, &at, true, &bt, true, 0.5, &mut c2);
        let expected = (&a * &b) * 2.0 + DMatrix::from_element(3, 2, 0.5);
        assert!((&c2 - expected).norm() < 1e-12);
    }

    #[test]
    fn sorted_svd_reconstructs() {
        let m = DMatrix::from_fn(6, 3, |i, j| ((i + 1) as f64).powi(j as i32 + 1).ln_1p());
        let svd = sorted_svd(&m);
        assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let s = DMatrix::from_diagonal(&DVector::from_vec(svd.singular_values.clone()));
        let rebuilt = &svd.u * s * &svd.v_t;
        assert!((rebuilt - &m).norm() / m.norm() < 1e-12);
    }

    #[test]
    fn power_iteration_agrees_with_svd() {
        let m = DMatrix::from_fn(8, 5, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let exact = singular_values(&m)[0];
        let est = spectral_norm(&m, 500, 1e-14, 3);
        assert!((est - exact).abs() / exact < 1e-8, "{est} vs {exact}");
    }
}
