//! Fejer-Riesz factorization in two variables.

use crate::bipoly::{BiPoly, CPair, DegreeBox};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::measure::Measure;
use crate::opoly::{MeasureSpace, Perp};
use crate::stability;
use crate::szego::NumericPolicy;
use num_complex::Complex64 as C;
use rustfft::FftPlanner;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

const ZERO: C = C { re: 0.0, im: 0.0 };
/// Torus grid for positivity checks and verification.
pub const CHECK_GRID: usize = 512;
/// Principal-angle distance below which the two complements are taken as equal.
pub const GW_TOL: f64 = 1e-7;

/// Laurent polynomial sum t(j,k) z^j w^k with |j| <= n, |k| <= m.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly {
    n: usize,
    m: usize,
    coef: Vec<C>,
    real: bool,
}

impl TrigPoly {
    pub fn zeros(n: usize, m: usize) -> Self {
        TrigPoly { n, m, coef: vec![ZERO; (2 * n + 1) * (2 * m + 1)], real: true }
    }

    /// From a (2n+1) x (2m+1) grid, row j + n holding the coefficients of z^j.
    pub fn from_grid(grid: Vec<Vec<C>>) -> Result<Self> {
        let rows = grid.len();
        let cols = grid.first().map(|r| r.len()).unwrap_or(0);
        if rows % 2 == 0 || cols % 2 == 0 || grid.iter().any(|r| r.len() != cols) {
            return Err(Error::Invalid("trigonometric coefficient grid must be (2n+1) x (2m+1)".into()));
        }
        let mut t = TrigPoly::zeros(rows / 2, cols / 2);
        t.coef = grid.into_iter().flatten().collect();
        t.real = t.check_real(1e-12);
        Ok(t)
    }

    /// |p|^2 on the torus.
    pub fn abs_sq(p: &BiPoly) -> Self {
        Self::sum_abs_sq(std::slice::from_ref(p))
    }

    /// sum_j |p_j|^2 on the torus.
    pub fn sum_abs_sq(ps: &[BiPoly]) -> Self {
        let n = ps.iter().map(|p| p.deg_z()).max().unwrap_or(0);
        let m = ps.iter().map(|p| p.deg_w()).max().unwrap_or(0);
        let mut t = TrigPoly::zeros(n, m);
        for p in ps {
            let bx = p.deg_box();
            for (a, b) in bx.monomials() {
                for (c, d) in bx.monomials() {
                    let (j, k) = (a as i64 - c as i64, b as i64 - d as i64);
                    let v = t.get(j, k) + p.get(a, b) * p.get(c, d).conj();
                    t.set(j, k, v);
                }
            }
        }
        t.real = t.check_real(1e-12);
        t
    }

    /// Real trigonometric polynomial from (j, k, value) terms; the conjugate terms are added.
    pub fn real_from_terms(n: usize, m: usize, terms: &[(i64, i64, C)]) -> Self {
        let mut t = TrigPoly::zeros(n, m);
        for &(j, k, c) in terms {
            if j == 0 && k == 0 {
                t.set(0, 0, t.get(0, 0) + C::new(c.re, 0.0));
            } else {
                t.set(j, k, t.get(j, k) + c);
                t.set(-j, -k, t.get(-j, -k) + c.conj());
            }
        }
        t.real = t.check_real(1e-12);
        t
    }

    pub fn ndeg(&self) -> (usize, usize) {
        (self.n, self.m)
    }
    pub fn is_real(&self) -> bool {
        self.real
    }

    fn idx(&self, j: i64, k: i64) -> usize {
        ((j + self.n as i64) as usize) * (2 * self.m + 1) + (k + self.m as i64) as usize
    }

    pub fn get(&self, j: i64, k: i64) -> C {
        if j.unsigned_abs() as usize > self.n || k.unsigned_abs() as usize > self.m {
            return ZERO;
        }
        self.coef[self.idx(j, k)]
    }

    pub fn set(&mut self, j: i64, k: i64, c: C) {
        let i = self.idx(j, k);
        self.coef[i] = c;
    }

    fn check_real(&self, tol: f64) -> bool {
        let scale = self.coef.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
        let (n, m) = (self.n as i64, self.m as i64);
        (-n..=n).all(|j| (-m..=m).all(|k| (self.get(j, k) - self.get(-j, -k).conj()).norm() <= tol * scale))
    }

    /// Value at (z, w) with nonzero entries; on the torus negative powers are conjugates.
    pub fn eval(&self, z: C, w: C) -> C {
        let (n, m) = (self.n as i64, self.m as i64);
        let mut acc = ZERO;
        for j in -n..=n {
            let zj = z.powi(j as i32);
            for k in -m..=m {
                acc += self.get(j, k) * zj * w.powi(k as i32);
            }
        }
        acc
    }

    /// Values at (e^{2 pi i a/N}, e^{2 pi i b/N}), row-major in a.
    pub fn grid_values(&self, size: usize) -> Vec<C> {
        let mut g = vec![ZERO; size * size];
        let (n, m) = (self.n as i64, self.m as i64);
        for j in -n..=n {
            for k in -m..=m {
                let a = j.rem_euclid(size as i64) as usize;
                let b = k.rem_euclid(size as i64) as usize;
                g[a * size + b] += self.get(j, k);
            }
        }
        fft2(&mut g, size, true);
        g
    }
}

/// In-place 2-D DFT of a size x size array. `inverse` uses e^{+i}; no normalization.
pub fn fft2(g: &mut [C], size: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let f = if inverse { planner.plan_fft_inverse(size) } else { planner.plan_fft_forward(size) };
    for row in g.chunks_mut(size) {
        f.process(row);
    }
    let mut col = vec![ZERO; size];
    for b in 0..size {
        for a in 0..size {
            col[a] = g[a * size + b];
        }
        f.process(&mut col);
        for a in 0..size {
            g[a * size + b] = col[a];
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrigRepr {
    coef: Vec<Vec<CPair>>,
    ndeg: [usize; 2],
}

impl Serialize for TrigPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (n, m) = (self.n as i64, self.m as i64);
        let coef = (-n..=n).map(|j| (-m..=m).map(|k| self.get(j, k).into()).collect()).collect();
        TrigRepr { coef, ndeg: [self.n, self.m] }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TrigPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = TrigRepr::deserialize(d)?;
        if r.coef.len() != 2 * r.ndeg[0] + 1 || r.coef.iter().any(|row| row.len() != 2 * r.ndeg[1] + 1) {
            return Err(D::Error::custom(format!("coefficient grid does not match declared degree {:?}", r.ndeg)));
        }
        TrigPoly::from_grid(r.coef.into_iter().map(|row| row.into_iter().map(C::from).collect()).collect())
            .map_err(D::Error::custom)
    }
}

/// Smallest value of a real t on the check grid and where it occurs.
pub fn min_on_grid(t: &TrigPoly, size: usize) -> (f64, C, C) {
    let g = t.grid_values(size);
    let (i, v) = g.iter().enumerate().min_by(|a, b| a.1.re.partial_cmp(&b.1.re).unwrap()).unwrap();
    let ang = |x: usize| C::from_polar(1.0, 2.0 * std::f64::consts::PI * x as f64 / size as f64);
    (v.re, ang(i / size), ang(i % size))
}

/// Monomial Gram matrix over `bx` under t^{-1} d(sigma), from FFT moments of 1/t.
/// Returns the Gram and the change from a half-size grid.
pub fn inverse_gram(t: &TrigPoly, bx: DegreeBox) -> (CMat, f64) {
    let moments = |size: usize| -> Vec<C> {
        let mut g: Vec<C> = t.grid_values(size).iter().map(|v| C::new(1.0 / v.re, 0.0)).collect();
        fft2(&mut g, size, true);
        let s = (size * size) as f64;
        g.iter().map(|x| x / s).collect()
    };
    let build = |size: usize| -> CMat {
        let mo = moments(size);
        let at = |j: i64, k: i64| mo[(j.rem_euclid(size as i64) as usize) * size + k.rem_euclid(size as i64) as usize];
        let mons: Vec<(usize, usize)> = bx.monomials().collect();
        CMat::from_fn(mons.len(), mons.len(), |r, c| {
            let (a1, b1) = mons[r];
            let (a2, b2) = mons[c];
            at(a1 as i64 - a2 as i64, b1 as i64 - b2 as i64)
        })
    };
    let mut size = CHECK_GRID;
    let mut prev = build(size / 2);
    loop {
        let cur = build(size);
        let diff = linalg::maxabs(&(&cur - &prev));
        if diff <= 1e-13 * linalg::maxabs(&cur) || size >= 4096 {
            return (cur, diff);
        }
        prev = cur;
        size *= 2;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GwReport {
    pub holds: bool,
    pub discrepancy: f64,
}

fn check_positive(t: &TrigPoly) -> Result<()> {
    if !t.is_real() {
        return Err(Error::Precondition("trigonometric polynomial is not real valued".into()));
    }
    let (min, z, w) = min_on_grid(t, CHECK_GRID);
    let scale = t.get(0, 0).re.abs().max(1e-300);
    if min <= 1e-12 * scale {
        return Err(Error::NotStrictlyPositive { min, z: [z.re, z.im], w: [w.re, w.im] });
    }
    Ok(())
}

/// Distance between the complements ur,dn and r,dn of a measure space.
fn gw_distance(ms: &MeasureSpace) -> f64 {
    let a = linalg::orth(&ms.coefs(&ms.perp(Perp::UrDn)), 1e-10);
    let b = linalg::orth(&ms.coefs(&ms.perp(Perp::RDn)), 1e-10);
    linalg::max_principal_angle(&a, &b)
}

fn positive_space(t: &TrigPoly, bx: DegreeBox) -> MeasureSpace {
    let (g, err) = inverse_gram(t, bx);
    MeasureSpace::from_gram(bx, &g, err, CHECK_GRID)
}

/// Decides whether t^{-1} d(sigma) satisfies the condition for a stable factor of degree `bx`.
pub fn gw_condition(t: &TrigPoly, bx: DegreeBox, policy: &NumericPolicy) -> Result<GwReport> {
    policy.validate()?;
    check_positive(t)?;
    let ms = positive_space(t, bx);
    let d = gw_distance(&ms);
    Ok(GwReport { holds: d <= GW_TOL, discrepancy: d })
}

/// Unit-norm element of the complement of Ll, with p(0,0) > 0.
fn ll_factor(ms: &MeasureSpace) -> Result<BiPoly> {
    let y = ms.perp(Perp::Ll);
    if y.ncols() != 1 {
        return Err(Error::Inconsistent(format!("complement of Ll has dimension {}", y.ncols())));
    }
    let mut p = ms.onb(&y)?.entries()[0].clone();
    let c0 = p.get(0, 0);
    if c0.norm() > 0.0 {
        p = p.scale(c0.conj() / c0.norm());
    }
    Ok(p)
}

fn torus_mismatch(t: &TrigPoly, p: &BiPoly) -> f64 {
    let tv = t.grid_values(CHECK_GRID);
    let pv = TrigPoly::abs_sq(p).grid_values(CHECK_GRID);
    let scale = tv.iter().map(|v| v.re).fold(0.0, f64::max).max(1e-300);
    tv.iter().zip(&pv).map(|(a, b)| (a.re - b.re).abs()).fold(0.0, f64::max) / scale
}

/// Stable p over `bx` with |p|^2 = t on the torus, for strictly positive t.
pub fn factorize(t: &TrigPoly, bx: DegreeBox, policy: &NumericPolicy) -> Result<BiPoly> {
    policy.validate()?;
    check_positive(t)?;
    let ms = positive_space(t, bx);
    let d = gw_distance(&ms);
    if d > GW_TOL {
        return Err(Error::NoFactorization(format!("complements differ by principal angle {d:.3e}")));
    }
    let p = ll_factor(&ms)?;
    let mis = torus_mismatch(t, &p);
    if mis > 1e-7 {
        return Err(Error::Inconsistent(format!("|p|^2 differs from t by {mis:.3e} relative")));
    }
    let rep = stability::bidisk_stability(&p, stability::DEFAULT_GRID, stability::DEFAULT_TOL)?;
    if !rep.stable_closed {
        return Err(Error::Inconsistent("factor is not stable on the closed bidisk".into()));
    }
    Ok(p)
}

/// Stable q over `bx` with |q|^2 = sum |p_j|^2 on the torus.
pub fn factorize_nonneg(ps: &[BiPoly], bx: DegreeBox, policy: &NumericPolicy) -> Result<BiPoly> {
    policy.validate()?;
    if ps.is_empty() {
        return Err(Error::Precondition("no polynomials given".into()));
    }
    for p in ps {
        p.with_box(bx)?;
    }
    let m = Measure::inverse_sum(ps)
        .map_err(|e| Error::NoFactorization(format!("sum of squares has non-isolated torus zeros ({e})")))?;
    if ps.iter().all(|p| p.get(0, 0).norm() == 0.0) {
        return Err(Error::Precondition("every p_j vanishes at the origin".into()));
    }
    for i in 0..ps.len() {
        for j in (i + 1)..ps.len() {
            let g = common_factor_degree(&ps[i], &ps[j]);
            if g > 0 {
                return Err(Error::CommonFactor { degree: g });
            }
        }
    }
    let mut m = m;
    m.quad = policy.quadrature();
    let ms = MeasureSpace::new(&m, bx).map_err(|e| Error::NoFactorization(e.to_string()))?;
    let d = gw_distance(&ms);
    if d > GW_TOL {
        return Err(Error::NoFactorization(format!("complements differ by principal angle {d:.3e}")));
    }
    let q = ll_factor(&ms)?;
    let t = TrigPoly::sum_abs_sq(ps);
    let mis = torus_mismatch(&t, &q);
    if mis > 1e-6 {
        return Err(Error::NoFactorization(format!("|q|^2 differs from the sum of squares by {mis:.3e} relative")));
    }
    let rep = stability::bidisk_stability(&q, stability::DEFAULT_GRID, stability::DEFAULT_TOL)?;
    if !rep.stable_open || !rep.atoral {
        return Err(Error::Inconsistent("factor is not stable on the open bidisk or is toral".into()));
    }
    Ok(q)
}

/// Degree of a common factor of two polynomials, from generic one-variable slices.
pub fn common_factor_degree(a: &BiPoly, b: &BiPoly) -> usize {
    let pts = [C::from_polar(0.37, 0.9), C::from_polar(0.81, -2.2), C::from_polar(0.55, 2.7)];
    let gz = pts.iter().map(|&z| stability::gcd_degree(&a.slice_z(z), &b.slice_z(z))).min().unwrap_or(0);
    let gw = pts.iter().map(|&w| stability::gcd_degree(&a.slice_w(w), &b.slice_w(w))).min().unwrap_or(0);
    gz.max(gw)
}

#[derive(Clone, Debug, Serialize)]
pub struct Divisibility {
    pub divides: bool,
    pub quotient: Option<TrigPoly>,
    pub residual: f64,
    pub min_quotient: f64,
}

/// Whether t = |p|^2 s for a trigonometric polynomial s >= 0, with p a candidate factor.
pub fn toral_divides(t: &TrigPoly, p: &BiPoly) -> Result<Divisibility> {
    let pp = TrigPoly::abs_sq(p);
    let (tn, tm) = t.ndeg();
    let (pn, pm) = pp.ndeg();
    if pn > tn || pm > tm {
        return Ok(Divisibility { divides: false, quotient: None, residual: f64::INFINITY, min_quotient: f64::NAN });
    }
    let (sn, sm) = (tn - pn, tm - pm);
    let sidx: Vec<(i64, i64)> = (-(sn as i64)..=sn as i64).flat_map(|j| (-(sm as i64)..=sm as i64).map(move |k| (j, k))).collect();
    let tidx: Vec<(i64, i64)> = (-(tn as i64)..=tn as i64).flat_map(|j| (-(tm as i64)..=tm as i64).map(move |k| (j, k))).collect();
    let a = CMat::from_fn(tidx.len(), sidx.len(), |r, c| pp.get(tidx[r].0 - sidx[c].0, tidx[r].1 - sidx[c].1));
    let rhs = CMat::from_fn(tidx.len(), 1, |r, _| t.get(tidx[r].0, tidx[r].1));
    let sol = linalg::pinv(&a, 1e-12) * &rhs;
    let residual = linalg::maxabs(&(&a * &sol - &rhs)) / linalg::maxabs(&rhs).max(1e-300);
    let mut s = TrigPoly::zeros(sn, sm);
    for (i, &(j, k)) in sidx.iter().enumerate() {
        s.set(j, k, sol[(i, 0)]);
    }
    s.real = s.check_real(1e-9);
    let min_quotient = min_on_grid(&s, 128).0;
    let scale = s.get(0, 0).re.abs().max(1e-300);
    let divides = residual <= 1e-9 && s.real && min_quotient >= -1e-9 * scale;
    Ok(Divisibility { divides, quotient: Some(s), residual, min_quotient })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C {
        C::new(x, 0.0)
    }
    fn lin(a: f64, b: f64, cc: f64) -> BiPoly {
        BiPoly::from_real_terms(&[(0, 0, a), (1, 0, -b), (0, 1, -cc)])
    }
    fn same_up_to_phase(p: &BiPoly, q: &BiPoly, tol: f64) -> bool {
        let r = q.get(0, 0) / p.get(0, 0);
        (r.norm() - 1.0).abs() < tol && p.scale(r).max_diff(q) < tol * q.max_abs()
    }

    #[test]
    fn trig_poly_basics() {
        let q = lin(4.0, 1.0, 1.0);
        let t = TrigPoly::abs_sq(&q);
        assert!(t.is_real());
        assert_eq!(t.get(0, 0), c(18.0));
        assert_eq!(t.get(1, -1), c(1.0));
        let (z, w) = (C::from_polar(1.0, 0.3), C::from_polar(1.0, -1.1));
        assert!((t.eval(z, w).re - q.eval(z, w).norm_sqr()).abs() < 1e-12);
        let g = t.grid_values(8);
        assert!((g[8 + 3].re - q.eval(C::from_polar(1.0, std::f64::consts::TAU / 8.0), C::from_polar(1.0, 3.0 * std::f64::consts::TAU / 8.0)).norm_sqr()).abs() < 1e-12);
        let js = serde_json::to_string(&t).unwrap();
        let back: TrigPoly = serde_json::from_str(&js).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn gw_examples() {
        let p = NumericPolicy::default();
        let bx = DegreeBox::new(1, 1);
        assert!(gw_condition(&TrigPoly::abs_sq(&lin(4.0, 1.0, 1.0)), bx, &p).unwrap().holds);
        assert!(gw_condition(&TrigPoly::real_from_terms(0, 0, &[(0, 0, c(1.0))]), bx, &p).unwrap().holds);
        let t = TrigPoly::real_from_terms(1, 1, &[(0, 0, c(2.0)), (1, 0, c(0.5)), (0, 1, c(0.5))]);
        assert!(matches!(gw_condition(&t, bx, &p), Err(Error::NotStrictlyPositive { .. })));
    }

    #[test]
    fn factorize_examples() {
        let p = NumericPolicy::default();
        let q = lin(4.0, 1.0, 1.0);
        let f = factorize(&TrigPoly::abs_sq(&q), DegreeBox::new(1, 1), &p).unwrap();
        assert!(same_up_to_phase(&f, &q, 1e-9));
        let f = factorize(&TrigPoly::real_from_terms(0, 0, &[(0, 0, c(4.0))]), DegreeBox::new(0, 0), &p).unwrap();
        assert!(f.approx_eq(&BiPoly::constant(c(2.0)), 1e-12));
        let q2 = lin(3.0, 1.0, 1.0).mul(&lin(5.0, 2.0, 1.0));
        let f = factorize(&TrigPoly::abs_sq(&q2), DegreeBox::new(2, 2), &p).unwrap();
        assert!(same_up_to_phase(&f, &q2, 1e-8));
    }

    #[test]
    fn nonneg_examples() {
        let p = NumericPolicy::default();
        let bx = DegreeBox::new(1, 1);
        let q = lin(4.0, 1.0, 1.0);
        assert!(same_up_to_phase(&factorize_nonneg(&[q.clone()], bx, &p).unwrap(), &q, 1e-9));
        let q = lin(2.0, 1.0, 1.0);
        assert!(same_up_to_phase(&factorize_nonneg(&[q.clone()], bx, &p).unwrap(), &q, 1e-7));
        let zw = BiPoly::from_real_terms(&[(1, 0, 1.0), (0, 1, -1.0)]);
        assert!(matches!(factorize_nonneg(&[zw], bx, &p), Err(Error::NoFactorization(_))));
    }

    #[test]
    fn toral_division() {
        let zw = BiPoly::from_real_terms(&[(1, 0, 1.0), (0, 1, -1.0)]);
        let q = lin(3.0, 1.0, 1.0);
        let t = TrigPoly::abs_sq(&zw.mul(&zw).mul(&q));
        let d = toral_divides(&t, &zw).unwrap();
        assert!(d.divides, "{:?}", d);
        let t2 = TrigPoly::abs_sq(&q);
        assert!(!toral_divides(&t2, &zw).unwrap().divides);
    }
}
