//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;

pub type CMat = DMatrix<C>;

/// Largest entry modulus.
pub fn maxabs(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Hermitian part (A + A*)/2.
pub fn herm(a: &CMat) -> CMat {
    (a + a.adjoint()) * C::new(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn herm_eig(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (vec![], CMat::zeros(0, 0));
    }
    let e = herm(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| e.eigenvalues[i].partial_cmp(&e.eigenvalues[j]).unwrap());
    let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, c| e.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Largest eigenvalue of a Hermitian matrix (0 for an empty matrix).
pub fn lambda_max(a: &CMat) -> f64 {
    herm_eig(a).0.last().copied().unwrap_or(0.0)
}

/// Smallest eigenvalue of a Hermitian matrix (0 for an empty matrix).
pub fn lambda_min(a: &CMat) -> f64 {
    herm_eig(a).0.first().copied().unwrap_or(0.0)
}

/// Singular values, descending.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

pub fn opnorm(a: &CMat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Full SVD with square U and V (pads with zeros so nalgebra returns complete factors).
pub fn full_svd(a: &CMat) -> (CMat, Vec<f64>, CMat) {
    let (r, c) = (a.nrows(), a.ncols());
    let n = r.max(c);
    let mut p = CMat::zeros(n, n);
    p.view_mut((0, 0), (r, c)).copy_from(a);
    let svd = p.svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].partial_cmp(&svd.singular_values[i]).unwrap());
    let s: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u = CMat::from_fn(r, r, |i, j| u[(i, order[j])]);
    let v = CMat::from_fn(c, c, |i, j| vt[(order[j], i)].conj());
    (u, s[..r.min(c)].to_vec(), v)
}

/// Orthonormal basis of the null space of `a`; singular values below
/// `rel_tol * max(sigma_max, abs_floor)` count as zero.
pub fn null_space(a: &CMat, rel_tol: f64, abs_floor: f64) -> CMat {
    let c = a.ncols();
    if a.nrows() == 0 {
        return CMat::identity(c, c);
    }
    let (_, s, v) = full_svd(a);
    let thresh = rel_tol * s.first().copied().unwrap_or(0.0).max(abs_floor);
    let rank = s.iter().filter(|&&x| x > thresh).count();
    v.columns(rank, c - rank).into_owned()
}

/// Orthonormal basis of the column space with relative rank tolerance.
pub fn orth(a: &CMat, rel_tol: f64) -> CMat {
    if a.ncols() == 0 || a.nrows() == 0 {
        return CMat::zeros(a.nrows(), 0);
    }
    let (u, s, _) = full_svd(a);
    let thresh = rel_tol * s.first().copied().unwrap_or(0.0);
    let rank = s.iter().filter(|&&x| x > thresh && x > 0.0).count();
    u.columns(0, rank).into_owned()
}

/// Unitary polar factor U V* of a square matrix.
pub fn polar_unitary(a: &CMat) -> CMat {
    let (u, _, v) = full_svd(a);
    &u * v.adjoint()
}

/// Moore-Penrose pseudo-inverse with relative tolerance.
pub fn pinv(a: &CMat, rel_tol: f64) -> CMat {
    let (r, c) = (a.nrows(), a.ncols());
    if r == 0 || c == 0 {
        return CMat::zeros(c, r);
    }
    let (u, s, v) = full_svd(a);
    let thresh = rel_tol * s.first().copied().unwrap_or(0.0);
    let mut out = CMat::zeros(c, r);
    for (i, &si) in s.iter().enumerate() {
        if si > thresh && si > 0.0 {
            out += v.column(i) * u.column(i).adjoint() * C::new(1.0 / si, 0.0);
        }
    }
    out
}

/// Inverse square root of a positive definite Hermitian matrix.
pub fn inv_sqrt_psd(a: &CMat) -> Option<CMat> {
    let (vals, vecs) = herm_eig(a);
    if vals.iter().any(|&x| x <= 0.0) {
        return None;
    }
    let d = CMat::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&x| C::new(1.0 / x.sqrt(), 0.0)),
    ));
    Some(&vecs * d * vecs.adjoint())
}

/// Cosines of the principal angles between the column spans of two matrices
/// with orthonormal columns, descending.
pub fn principal_cosines(a: &CMat, b: &CMat) -> Vec<f64> {
    singular_values(&(a.adjoint() * b))
}

/// Largest principal angle (radians) between two subspaces of equal dimension given by
/// orthonormal columns; pi/2 if the dimensions differ.
pub fn max_principal_angle(a: &CMat, b: &CMat) -> f64 {
    if a.ncols() != b.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let s = principal_cosines(a, b);
    let cmin = s.last().copied().unwrap_or(1.0).min(1.0);
    // sine form is accurate for tiny angles
    let p = a - b * (b.adjoint() * a);
    let sin = opnorm(&p).min(1.0);
    if cmin > 0.7 {
        sin.asin()
    } else {
        cmin.acos()
    }
}

/// Neville extrapolation of matrix samples (x_i, y_i) to x = 0. Returns the value and the
/// size of the last correction as an error estimate.
pub fn neville_zero(xs: &[f64], ys: &[CMat]) -> (CMat, f64) {
    let n = xs.len();
    let mut p: Vec<CMat> = ys.to_vec();
    let mut last = f64::INFINITY;
    for k in 1..n {
        for i in 0..n - k {
            let (xi, xk) = (xs[i], xs[i + k]);
            let num = &p[i + 1] * C::new(xi, 0.0) - &p[i] * C::new(xk, 0.0);
            let new = num * C::new(1.0 / (xi - xk), 0.0);
            if i == 0 {
                last = maxabs(&(&new - &p[0]));
            }
            p[i] = new;
        }
    }
    (p[0].clone(), last)
}

/// Scalar Neville extrapolation to x = 0.
pub fn neville_zero_scalar(xs: &[f64], ys: &[C]) -> (C, f64) {
    let m: Vec<CMat> = ys.iter().map(|&y| CMat::from_element(1, 1, y)).collect();
    let (v, e) = neville_zero(xs, &m);
    (v[(0, 0)], e)
}

/// Solves A X = B by LU; None when singular.
pub fn solve(a: &CMat, b: &CMat) -> Option<CMat> {
    a.clone().lu().solve(b)
}

/// Multiplies each column by a unit scalar so that its last entry with modulus above
/// `rel_tol * max` becomes positive real.
pub fn normalize_phases(a: &mut CMat, rel_tol: f64) {
    for mut col in a.column_iter_mut() {
        let mx = col.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if mx == 0.0 {
            continue;
        }
        if let Some(i) = (0..col.len()).rev().find(|&i| col[i].norm() > rel_tol * mx) {
            let ph = col[i].conj() / col[i].norm();
            col *= ph;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C {
        C::new(x, 0.0)
    }

    #[test]
    fn null_space_of_rank_one() {
        let a = CMat::from_row_slice(1, 3, &[c(1.0), c(1.0), c(0.0)]);
        let n = null_space(&a, 1e-12, 0.0);
        assert_eq!(n.ncols(), 2);
        assert!(maxabs(&(&a * &n)) < 1e-14);
    }

    #[test]
    fn polar_factor_is_unitary() {
        let a = CMat::from_fn(3, 3, |i, j| C::new((i + 2 * j) as f64, (i * j) as f64 - 1.0));
        let u = polar_unitary(&a);
        assert!(maxabs(&(u.adjoint() * &u - CMat::identity(3, 3))) < 1e-13);
    }

    #[test]
    fn neville_recovers_polynomial_limit() {
        let xs: Vec<f64> = (0..6).map(|i| 0.1 / 2f64.powi(i)).collect();
        let ys: Vec<C> = xs.iter().map(|&x| c(3.0 + 2.0 * x - x * x + 0.5 * x * x * x)).collect();
        let (v, _) = neville_zero_scalar(&xs, &ys);
        assert!((v - c(3.0)).norm() < 1e-13);
    }

    #[test]
    fn pinv_of_tall() {
        let a = CMat::from_fn(3, 2, |i, j| C::new((i + j) as f64, 1.0));
        let p = pinv(&a, 1e-12);
        assert!(maxabs(&(&p * &a - CMat::identity(2, 2))) < 1e-12);
    }
}
