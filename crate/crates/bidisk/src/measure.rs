//! Inner products against densities 1/|q|^2 and 1/(sum |p_j|^2) on the torus.
//!
//! For fixed z on the circle the w-integral is done exactly: the density is 1/|a_z(w)|^2
//! with a_z stable, and the inverse of the moment matrix of such a density has a closed
//! triangular-Toeplitz form. The remaining z-integral is a trapezoid rule whose nodes are
//! placed symmetrically around the singular angles (projections of torus zeros).

use crate::bipoly::{BiPoly, DegreeBox};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::stability;
use crate::univar;
use num_complex::Complex64 as C;
use std::f64::consts::PI;

const ZERO: C = C { re: 0.0, im: 0.0 };
/// Stalled refinements whose best relative change is below this are accepted.
const NOISE_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug)]
pub enum Density {
    /// 1/|q|^2
    Szego(BiPoly),
    /// 1/(sum_j |p_j|^2)
    InverseSum(Vec<BiPoly>),
}

/// Controls for the z-quadrature.
#[derive(Clone, Copy, Debug)]
pub struct Quadrature {
    pub n0: usize,
    pub n_max: usize,
    pub rel_tol: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { n0: 64, n_max: 1 << 16, rel_tol: 1e-12 }
    }
}

#[derive(Clone, Debug)]
pub struct Measure {
    density: Density,
    singular: Vec<f64>,
    zeros: Vec<(C, C)>,
    pub quad: Quadrature,
}

/// Result of a quadrature: Gram matrix of the given columns plus a per-entry error estimate.
#[derive(Clone, Debug)]
pub struct Integral {
    pub gram: CMat,
    /// Largest entry change between the last two refinements.
    pub err: f64,
    /// Entrywise change between the last two refinements.
    pub err_entries: nalgebra::DMatrix<f64>,
    pub nodes: usize,
}

/// Moment-matrix inverse for the density 1/|a(w)|^2 on the circle, size `n >= deg a`.
/// With T[j][k] = int w^j conj(w)^k / |a|^2, returns X = T^{-1}.
pub fn toeplitz_inverse(a: &[C], n: usize) -> CMat {
    let d = a.len() - 1;
    assert!(n >= d);
    let at = |i: usize| if i < a.len() { a[i] } else { ZERO };
    // b = w^{n-d} * reflection of a at degree d
    let bt = |i: usize| if i >= n - d && i - (n - d) <= d { a[d - (i - (n - d))].conj() } else { ZERO };
    let la = CMat::from_fn(n, n, |i, j| if i >= j { at(i - j) } else { ZERO });
    let lb = CMat::from_fn(n, n, |i, j| if i >= j { bt(i - j) } else { ZERO });
    let x = &la * la.adjoint() - &lb * lb.adjoint();
    x.map(|c| c.conj())
}

impl Measure {
    /// Bernstein-Szego measure of q, with singular angles from a torus scan.
    pub fn szego(q: &BiPoly) -> Result<Self> {
        if q.is_zero(0.0) {
            return Err(Error::ZeroPolynomial);
        }
        let scan = stability::torus_zeros(q, stability::DEFAULT_GRID);
        if scan.toral {
            return Err(Error::Precondition("q has infinitely many zeros on the torus".into()));
        }
        let zs = scan.zeros.iter().map(|t| (t.z, t.w)).collect();
        Ok(Self::with_zeros(Density::Szego(q.clone()), zs))
    }

    /// Density 1/sum|p_j|^2; singular angles are the z-projections of common torus zeros.
    pub fn inverse_sum(ps: &[BiPoly]) -> Result<Self> {
        if ps.is_empty() || ps.iter().all(|p| p.is_zero(0.0)) {
            return Err(Error::ZeroPolynomial);
        }
        let zs = common_torus_zeros(ps)?;
        Ok(Self::with_zeros(Density::InverseSum(ps.to_vec()), zs))
    }

    pub fn with_singular(density: Density, mut singular: Vec<f64>) -> Self {
        singular.sort_by(|a, b| a.partial_cmp(b).unwrap());
        singular.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        Measure { density, singular, zeros: vec![], quad: Quadrature::default() }
    }

    /// Singular angles from known torus zeros; the zeros also sharpen member extraction.
    pub fn with_zeros(density: Density, zeros: Vec<(C, C)>) -> Self {
        let mut m = Self::with_singular(density, zeros.iter().map(|(z, _)| z.arg()).collect());
        m.zeros = zeros;
        m
    }

    pub fn torus_zeros(&self) -> &[(C, C)] {
        &self.zeros
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn singular_angles(&self) -> &[f64] {
        &self.singular
    }

    /// Pointwise density value.
    pub fn density_at(&self, z: C, w: C) -> f64 {
        match &self.density {
            Density::Szego(q) => 1.0 / q.eval(z, w).norm_sqr(),
            Density::InverseSum(ps) => 1.0 / ps.iter().map(|p| p.eval(z, w).norm_sqr()).sum::<f64>(),
        }
    }

    /// Stable a_z(w) with density 1/|a_z(w)|^2 on the circle |w| = 1.
    pub fn factor(&self, z: C) -> Vec<C> {
        match &self.density {
            Density::Szego(q) => {
                let s = q.slice_z(z);
                let d = univar::effective_degree(&s, 1e-15).unwrap_or(0);
                s[..=d].to_vec()
            }
            Density::InverseSum(ps) => {
                let slices: Vec<Vec<C>> = ps.iter().map(|p| p.slice_z(z)).collect();
                spectral_factor(&slices)
            }
        }
    }

    /// Hermitian form H(z) with H[i][l] = int f_i(z,w) conj(f_l(z,w)) density dsigma(w),
    /// where the columns of `cols` hold coefficients of f_i over `bx` in flat order.
    pub fn local_form(&self, z: C, bx: DegreeBox, cols: &CMat) -> CMat {
        let a = self.factor(z);
        let d = a.len() - 1;
        let n = (bx.m + 1).max(d).max(1);
        let k = cols.ncols();
        // w-coefficients of each column at this z
        let mut wc = CMat::zeros(n, k);
        for c in 0..k {
            for kk in 0..=bx.m {
                let mut acc = ZERO;
                for j in (0..=bx.n).rev() {
                    acc = acc * z + cols[(bx.idx(j, kk), c)];
                }
                wc[(kk, c)] = acc;
            }
        }
        let x = toeplitz_inverse(&a, n);
        let rhs = wc.map(|c| c.conj());
        match x.clone().cholesky() {
            Some(ch) => {
                let y = ch.l().solve_lower_triangular(&rhs).unwrap_or_else(|| CMat::zeros(n, k));
                y.adjoint() * y
            }
            None => {
                let t = linalg::solve(&x, &rhs).unwrap_or_else(|| CMat::zeros(n, k));
                wc.transpose() * t
            }
        }
    }

    /// Trapezoid nodes (angles) for level `n`, shifted so singular angles sit between nodes.
    pub fn nodes(&self, n: usize) -> Vec<f64> {
        let h = 2.0 * PI / n as f64;
        let base = self.singular.first().copied().unwrap_or(0.0);
        let offsets = [0.5, 0.375, 0.625, 0.3125, 0.4375, 0.5625, 0.6875, 0.25, 0.75];
        let mut best = (f64::NEG_INFINITY, 0.5);
        for &o in &offsets {
            let start = base + o * h;
            let worst = self
                .singular
                .iter()
                .map(|&s| {
                    let t = (s - start).rem_euclid(h);
                    t.min(h - t)
                })
                .fold(f64::INFINITY, f64::min);
            let worst = if self.singular.is_empty() { h } else { worst };
            if worst > best.0 + 1e-12 * h {
                best = (worst, o);
            }
        }
        let start = base + best.1 * h;
        (0..n).map(|i| start + i as f64 * h).collect()
    }

    pub fn trapezoid(&self, n: usize, bx: DegreeBox, cols: &CMat) -> CMat {
        let k = cols.ncols();
        let mut acc = CMat::zeros(k, k);
        // pairwise accumulation over node blocks for a fixed reduction order
        let nodes = self.nodes(n);
        let mut partial: Vec<CMat> = nodes
            .chunks(64)
            .map(|chunk| {
                let mut s = CMat::zeros(k, k);
                for &t in chunk {
                    s += self.local_form(C::from_polar(1.0, t), bx, cols);
                }
                s
            })
            .collect();
        while partial.len() > 1 {
            let mut next = Vec::with_capacity(partial.len().div_ceil(2));
            for pair in partial.chunks(2) {
                if pair.len() == 2 {
                    next.push(&pair[0] + &pair[1]);
                } else {
                    next.push(pair[0].clone());
                }
            }
            partial = next;
        }
        if let Some(p) = partial.pop() {
            acc += p;
        }
        linalg::herm(&(acc / C::new(n as f64, 0.0)))
    }

    /// Gram matrix of the given columns; fails with a divergence error when the rule does
    /// not settle (some combination of the columns is not square integrable).
    pub fn integrate(&self, bx: DegreeBox, cols: &CMat) -> Result<Integral> {
        let k = cols.ncols();
        if k == 0 {
            return Ok(Integral { gram: CMat::zeros(0, 0), err: 0.0, err_entries: nalgebra::DMatrix::zeros(0, 0), nodes: 0 });
        }
        let mut n = self.quad.n0.max(8);
        let mut prev = self.trapezoid(n, bx, cols);
        let mut prev_diff = f64::INFINITY;
        let mut growth = 0;
        // best refinement so far: (relative change, value, change, entrywise change, nodes)
        let mut best: Option<(f64, CMat, f64, nalgebra::DMatrix<f64>, usize)> = None;
        loop {
            n *= 2;
            let cur = self.trapezoid(n, bx, cols);
            let diff = linalg::maxabs(&(&cur - &prev));
            let scale = linalg::maxabs(&cur).max(1e-300);
            let err_entries = (&cur - &prev).map(|x| x.norm());
            if diff <= self.quad.rel_tol * scale || diff == 0.0 {
                return Ok(Integral { gram: cur, err: diff, err_entries, nodes: n });
            }
            if best.as_ref().is_none_or(|b| diff / scale < b.0) {
                best = Some((diff / scale, cur.clone(), diff, err_entries, n));
            }
            if diff > 0.7 * prev_diff && n >= 1024 {
                growth += 1;
            } else {
                growth = 0;
            }
            if growth >= 3 || n >= self.quad.n_max {
                // a roundoff floor near the singular angles, not divergence
                if let Some((rel, gram, err, err_entries, nodes)) = best.filter(|b| b.0 <= NOISE_FLOOR) {
                    let _ = rel;
                    return Ok(Integral { gram, err, err_entries, nodes });
                }
                return Err(Error::Divergence(format!(
                    "quadrature increments stalled at {:.3e} (relative {:.3e}) with {} nodes",
                    diff,
                    diff / scale,
                    n
                )));
            }
            prev_diff = diff;
            prev = cur;
        }
    }

    /// Orthonormal basis (Euclidean, in coefficient space of `bx`) of the polynomials over
    /// `bx` that are square integrable. Directions are removed by reading off the leading
    /// Laurent coefficient of the local form at each singular angle.
    pub fn member_space(&self, bx: DegreeBox) -> Result<MemberSpace> {
        let d = bx.dim();
        let mut v = CMat::identity(d, d);
        let mut exponents = vec![];
        let nsing = self.singular.len();
        for (si, &ts) in self.singular.iter().enumerate() {
            let gap = if nsing > 1 {
                let prev = self.singular[(si + nsing - 1) % nsing];
                let next = self.singular[(si + 1) % nsing];
                let dp = (ts - prev).rem_euclid(2.0 * PI);
                let dn = (next - ts).rem_euclid(2.0 * PI);
                dp.min(dn)
            } else {
                2.0 * PI
            };
            // spectral factors cannot separate a root pair r, 1/conj(r) closer than ~1e-7,
            // so inverse sums stop the ladder at larger angles
            let (np, rat, start) = match self.density {
                Density::Szego(_) => (12, 2.0f64, 0.01f64),
                Density::InverseSum(_) => (8, 2.0f64, 0.05f64),
            };
            let theta0 = start.min(0.25 * gap);
            for sign in [1.0, -1.0] {
                for _ in 0..=d {
                    if v.ncols() == 0 {
                        break;
                    }
                    let thetas: Vec<f64> = (0..np).map(|i| theta0 / rat.powi(i)).collect();
                    let phis: Vec<CMat> = thetas
                        .iter()
                        .map(|&t| self.local_form(C::from_polar(1.0, ts + sign * t), bx, &v))
                        .collect();
                    let l1 = linalg::lambda_max(&phis[np as usize - 2]);
                    let l2 = linalg::lambda_max(&phis[np as usize - 1]);
                    let p_est = if l1 > 0.0 && l2 > 0.0 { (l2 / l1).ln() / rat.ln() } else { 0.0 };
                    exponents.push(p_est);
                    if p_est < 0.5 {
                        break;
                    }
                    let p = p_est.round().max(1.0) as i32;
                    let scaled: Vec<CMat> = thetas
                        .iter()
                        .zip(&phis)
                        .map(|(&t, ph)| ph * C::new(t.powi(p), 0.0))
                        .collect();
                    let (lead, _) = linalg::neville_zero(&thetas, &scaled);
                    let (vals, vecs) = linalg::herm_eig(&lead);
                    let top = vals.last().copied().unwrap_or(0.0).abs();
                    let r = (0..vals.len()).filter(|&i| vals[i].abs() > 1e-7 * top).count();
                    if r == 0 {
                        break;
                    }
                    let range = CMat::from_fn(vals.len(), r, |i, c| vecs[(i, vals.len() - r + c)]);
                    let at: Vec<(C, C)> = self
                        .zeros
                        .iter()
                        .filter(|(z, _)| (z.arg() - ts).rem_euclid(2.0 * PI).min((ts - z.arg()).rem_euclid(2.0 * PI)) < 1e-9)
                        .copied()
                        .collect();
                    let range = snap_to_jets(&range, &v, bx, &at);
                    // null vectors of the Gram are conjugate coefficient combinations
                    let keep = linalg::null_space(&range.adjoint(), 1e-12, 0.0);
                    v = &v * keep.map(|x| x.conj());
                }
            }
        }
        Ok(MemberSpace { bx, basis: v, growth_exponents: exponents })
    }
}

/// Functional f -> d^a/dz^a d^b/dw^b f(z0, w0) on the monomials of a box.
fn jet(bx: DegreeBox, z0: C, w0: C, a: usize, b: usize) -> Vec<C> {
    let fall = |j: usize, a: usize, x: C| -> C {
        if j < a {
            return ZERO;
        }
        let f: f64 = ((j - a + 1)..=j).map(|t| t as f64).product();
        x.powi((j - a) as i32) * f
    };
    bx.monomials().map(|(j, k)| fall(j, a, z0) * fall(k, b, w0)).collect()
}

/// Replaces numerically extracted constraint directions by the nearest directions spanned
/// by low-order jets at the torus zeros, when they are that close.
fn snap_to_jets(range: &CMat, v: &CMat, bx: DegreeBox, zeros: &[(C, C)]) -> CMat {
    let r = range.ncols();
    if zeros.is_empty() {
        return range.clone();
    }
    for order in 0..=3usize {
        let mut cols: Vec<nalgebra::DVector<C>> = vec![];
        for &(z0, w0) in zeros {
            for a in 0..=order {
                for b in 0..=(order - a) {
                    let l = nalgebra::DVector::from_vec(jet(bx, z0, w0, a, b));
                    // functional restricted to the current basis, as a vector a_i = l(f_i)
                    let restricted = v.transpose() * l;
                    let nrm = restricted.norm();
                    if nrm > 0.0 {
                        cols.push(restricted / C::new(nrm, 0.0));
                    }
                }
            }
        }
        if cols.is_empty() {
            continue;
        }
        let c = linalg::orth(&CMat::from_columns(&cols), 1e-8);
        if c.ncols() < r {
            continue;
        }
        let proj = &c * (c.adjoint() * range);
        let resid = linalg::opnorm(&(range - &proj));
        if resid < 1e-3 {
            if c.ncols() == r {
                return c;
            }
            return linalg::orth(&proj, 1e-8);
        }
    }
    range.clone()
}

/// Euclidean-orthonormal coefficient basis of the square-integrable polynomials in a box.
#[derive(Clone, Debug)]
pub struct MemberSpace {
    pub bx: DegreeBox,
    pub basis: CMat,
    /// Local growth exponents observed at the singular angles, in order of examination.
    pub growth_exponents: Vec<f64>,
}

impl MemberSpace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// Stable spectral factor a(w) of t(w) = sum_j |s_j(w)|^2 on the circle.
pub fn spectral_factor(slices: &[Vec<C>]) -> Vec<C> {
    let m = slices.iter().map(|s| s.len()).max().unwrap_or(1) - 1;
    // Laurent coefficients tau_k, k = -m..m, stored at k + m
    let mut tau = vec![ZERO; 2 * m + 1];
    for s in slices {
        for (i, &a) in s.iter().enumerate() {
            for (l, &b) in s.iter().enumerate() {
                tau[i + m - l] += a * b.conj();
            }
        }
    }
    let scale = tau.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let top = (0..=m).rev().find(|&k| tau[k + m].norm() > 1e-14 * scale).unwrap_or(0);
    let poly = &tau[m - top..=m + top];
    let mut roots = univar::roots(poly);
    roots.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
    let outer = &roots[..top];
    let mut a = univar::from_roots(outer);
    let wstar = C::from_polar(1.0, 0.7);
    let tv: f64 = slices.iter().map(|s| univar::horner(s, wstar).norm_sqr()).sum();
    let c = tv.sqrt() / univar::horner(&a, wstar).norm();
    for x in a.iter_mut() {
        *x *= c;
    }
    a
}

/// Common zeros on the torus of a family of polynomials (isolated ones only).
pub fn common_torus_zeros(ps: &[BiPoly]) -> Result<Vec<(C, C)>> {
    let scale = ps.iter().map(|p| p.max_abs()).fold(0.0, f64::max);
    let mut cands: Vec<(C, C)> = vec![];
    let live: Vec<&BiPoly> = ps.iter().filter(|p| !p.is_zero(0.0)).collect();
    for (i, p) in live.iter().enumerate() {
        let scan = stability::torus_zeros(p, stability::DEFAULT_GRID);
        for t in &scan.zeros {
            cands.push((t.z, t.w));
        }
        for f in &scan.factors {
            // a whole circle of zeros: intersect with the other polynomials on it
            for (l, o) in live.iter().enumerate() {
                if l == i {
                    continue;
                }
                let (slice, flip) = match f.var {
                    crate::Var::Z => (o.slice_z(f.at), false),
                    crate::Var::W => (o.slice_w(f.at), true),
                };
                for r in univar::roots(&slice) {
                    if (r.norm() - 1.0).abs() < 1e-6 {
                        let r = r / r.norm();
                        cands.push(if flip { (r, f.at) } else { (f.at, r) });
                    }
                }
            }
        }
    }
    let mut out: Vec<(C, C)> = vec![];
    for (z, w) in cands {
        let ok = live.iter().all(|p| p.eval(z, w).norm() <= 1e-7 * scale.max(1.0));
        if ok && !out.iter().any(|(a, b)| (a - z).norm() < 1e-6 && (b - w).norm() < 1e-6) {
            out.push((z, w));
        }
    }
    if live.iter().all(|p| stability::torus_zeros(p, stability::DEFAULT_GRID).toral)
        && out.len() > stability::DEFAULT_GRID / 8
    {
        return Err(Error::Precondition("common zeros on the torus are not isolated".into()));
    }
    Ok(out)
}
