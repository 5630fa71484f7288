//! One-variable polynomial helpers: Horner evaluation, balanced companion roots, clustering.

use nalgebra::DMatrix;
use num_complex::Complex64 as C;

/// Evaluates `sum c[i] x^i`.
pub fn horner(c: &[C], x: C) -> C {
    c.iter().rev().fold(C::new(0.0, 0.0), |acc, &a| acc * x + a)
}

/// Value and derivative of `sum c[i] x^i`.
pub fn horner_d(c: &[C], x: C) -> (C, C) {
    let mut p = C::new(0.0, 0.0);
    let mut dp = C::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + a;
    }
    (p, dp)
}

/// Index of the highest coefficient whose modulus exceeds `tol * max|c|`, or None for zero.
pub fn effective_degree(c: &[C], rel_tol: f64) -> Option<usize> {
    let mx = c.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if mx == 0.0 {
        return None;
    }
    c.iter().rposition(|a| a.norm() > rel_tol * mx)
}

/// Parlett-Reinsch balancing with radix 2, in place.
pub fn balance(a: &mut DMatrix<C>) {
    let n = a.nrows();
    let radix = 2.0f64;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].norm();
                    r += a[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            let mut cc = c;
            while cc < g {
                f *= radix;
                cc *= radix * radix;
            }
            g = r * radix;
            while cc > g {
                f /= radix;
                cc /= radix * radix;
            }
            if (cc + r) / f < 0.95 * s {
                converged = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// Eigenvalues of a general complex square matrix (diagonal of the Schur form).
pub fn eigenvalues(a: &DMatrix<C>) -> Vec<C> {
    let n = a.nrows();
    if n == 0 {
        return vec![];
    }
    if n == 1 {
        return vec![a[(0, 0)]];
    }
    let (_, t) = a.clone().schur().unpack();
    (0..n).map(|i| t[(i, i)]).collect()
}

/// All roots of `sum c[i] x^i` with multiplicity. Negligible leading coefficients
/// (relative 1e-14) are trimmed first; the zero polynomial has no roots.
pub fn roots(c: &[C]) -> Vec<C> {
    let Some(d) = effective_degree(c, 1e-14) else {
        return vec![];
    };
    let c = &c[..=d];
    let nz = c.iter().position(|a| a.norm() > 0.0).unwrap_or(0);
    let mut out = vec![C::new(0.0, 0.0); nz];
    let c = &c[nz..];
    let d = c.len() - 1;
    if d == 0 {
        return out;
    }
    if d == 1 {
        out.push(-c[0] / c[1]);
        return out;
    }
    let lead = c[d];
    let mut comp = DMatrix::<C>::zeros(d, d);
    for j in 0..d {
        comp[(0, j)] = -c[d - 1 - j] / lead;
    }
    for i in 1..d {
        comp[(i, i - 1)] = C::new(1.0, 0.0);
    }
    balance(&mut comp);
    for r in eigenvalues(&comp) {
        out.push(polish(c, r));
    }
    out
}

/// A few guarded Newton steps; a step is kept only if it lowers |p|.
pub fn polish(c: &[C], mut x: C) -> C {
    let (mut px, _) = horner_d(c, x);
    for _ in 0..4 {
        let (p, dp) = horner_d(c, x);
        if dp.norm() == 0.0 {
            break;
        }
        let y = x - p / dp;
        let py = horner(c, y);
        if py.norm() < px.norm() {
            x = y;
            px = py;
        } else {
            break;
        }
    }
    x
}

/// Groups points closer than `radius` (single linkage) into (mean, multiplicity).
pub fn cluster(points: &[C], radius: f64) -> Vec<(C, usize)> {
    let n = points.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(l: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while l[r] != r {
            r = l[r];
        }
        l[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (points[i] - points[j]).norm() <= radius {
                let a = find(&mut label, i);
                let b = find(&mut label, j);
                if a != b {
                    label[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<(usize, C, usize)> = Vec::new();
    for i in 0..n {
        let r = find(&mut label, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => {
                g.1 += points[i];
                g.2 += 1;
            }
            None => groups.push((r, points[i], 1)),
        }
    }
    groups
        .into_iter()
        .map(|(_, s, k)| (s / k as f64, k))
        .collect()
}

/// Product of polynomials given by ascending coefficients.
pub fn mul(a: &[C], b: &[C]) -> Vec<C> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![C::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Monic polynomial with the given roots, ascending coefficients.
pub fn from_roots(rs: &[C]) -> Vec<C> {
    let mut p = vec![C::new(1.0, 0.0)];
    for &r in rs {
        p = mul(&p, &[-r, C::new(1.0, 0.0)]);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_known_cubic() {
        let rs = [C::new(0.5, 0.0), C::new(-2.0, 1.0), C::new(0.0, 3.0)];
        let p = from_roots(&rs);
        let mut got = roots(&p);
        for r in rs {
            let (i, _) = got
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - r).norm().partial_cmp(&(b.1 - r).norm()).unwrap())
                .unwrap();
            assert!((got[i] - r).norm() < 1e-12);
            got.remove(i);
        }
    }

    #[test]
    fn zero_roots_are_deflated() {
        let p = [C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(-1.0, 0.0), C::new(1.0, 0.0)];
        let r = roots(&p);
        assert_eq!(r.len(), 3);
        assert_eq!(r.iter().filter(|x| x.norm() == 0.0).count(), 2);
    }

    #[test]
    fn clustering_merges_double_root() {
        let p = from_roots(&[C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(-1.0, 0.0)]);
        let cl = cluster(&roots(&p), 1e-6);
        assert_eq!(cl.len(), 2);
        assert!(cl.iter().any(|(r, k)| *k == 2 && (r - 1.0).norm() < 1e-7));
    }
}
