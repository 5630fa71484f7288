//! Sampling-based zero location on the bidisk, its closure and the torus.

use crate::bipoly::{ser_c, BiPoly, DegreeBox, Var};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::univar;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

/// Default number of samples per circle.
pub const DEFAULT_GRID: usize = 512;
/// Default modulus tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Radii 1 - 2^-k are swept for k = 1..=RADII_K.
pub const RADII_K: i32 = 20;

/// Relative size below which a slice coefficient counts as zero.
const SLICE_ZERO: f64 = 1e-13;
/// A refined tangency is accepted as a torus zero when ||w|^2 - 1| is below this.
const TANGENCY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct TorusZero {
    #[serde(serialize_with = "ser_c")]
    pub z: C,
    #[serde(serialize_with = "ser_c")]
    pub w: C,
    /// |q(z, w)| at the reported point.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SliceProfile {
    /// Variable held on the circle.
    pub var: Var,
    pub radius: f64,
    /// Smallest root modulus of the slices; None when every slice is constant.
    pub min_modulus: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub stable_open: bool,
    pub stable_closed: bool,
    pub torus_zeros: Vec<TorusZero>,
    pub atoral: bool,
    pub min_modulus_profile: Vec<SliceProfile>,
    /// Points z0 (or w0) on the circle where a whole slice vanishes, i.e. factors z - z0.
    pub toral_factors: Vec<ToralFactor>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ToralFactor {
    pub var: Var,
    #[serde(serialize_with = "ser_c")]
    pub at: C,
}

/// Roots of w -> q(z0, w) with multiplicity.
pub fn slice_roots(q: &BiPoly, z0: C) -> Result<Vec<C>> {
    let s = q.slice_z(z0);
    if slice_is_zero(&s, q) {
        return Err(Error::DegenerateSlice { z0 });
    }
    Ok(univar::roots(&s))
}

fn slice_is_zero(s: &[C], q: &BiPoly) -> bool {
    let scale = q.max_abs().max(f64::MIN_POSITIVE);
    s.iter().all(|c| c.norm() <= SLICE_ZERO * scale)
}

/// q with z and w exchanged.
pub fn swap_vars(q: &BiPoly) -> BiPoly {
    let b = q.deg_box();
    BiPoly::from_fn(DegreeBox::new(b.m, b.n), |j, k| q.get(k, j))
}

fn sweep_radii() -> Vec<f64> {
    let mut r = vec![0.0];
    r.extend((1..=RADII_K).map(|k| 1.0 - 2f64.powi(-k)));
    r.push(1.0);
    r
}

struct Sweep {
    profile: Vec<SliceProfile>,
    factors: Vec<C>,
    /// Slices at radius below one that vanish identically.
    interior_degenerate: bool,
    /// (theta, root) pairs on the unit circle sweep with ||w| - 1| small.
    candidates: Vec<(f64, C)>,
    /// Fraction of unit-circle slices having a root within 1e-8 of the circle.
    on_circle_fraction: f64,
}

fn sweep(q: &BiPoly, var: Var, grid: usize) -> Sweep {
    let mut out = Sweep {
        profile: vec![],
        factors: vec![],
        interior_degenerate: false,
        candidates: vec![],
        on_circle_fraction: 0.0,
    };
    let radii = sweep_radii();
    for &r in &radii {
        let mut min_mod: Option<f64> = None;
        let samples = if r == 0.0 { 1 } else { grid };
        let mut near = 0usize;
        for i in 0..samples {
            let th = 2.0 * PI * i as f64 / grid as f64;
            let z0 = C::from_polar(r, th);
            let s = q.slice_z(z0);
            if slice_is_zero(&s, q) {
                if r == 1.0 {
                    out.factors.push(z0);
                } else {
                    out.interior_degenerate = true;
                    min_mod = Some(0.0);
                }
                continue;
            }
            let roots = univar::roots(&s);
            let mut hit = false;
            for &w in &roots {
                let a = w.norm();
                min_mod = Some(min_mod.map_or(a, |m: f64| m.min(a)));
                if r == 1.0 {
                    if (a - 1.0).abs() < 5e-2 {
                        out.candidates.push((th, w));
                    }
                    if (a - 1.0).abs() < 1e-8 {
                        hit = true;
                    }
                }
            }
            if hit {
                near += 1;
            }
        }
        if r == 1.0 {
            out.on_circle_fraction = near as f64 / grid as f64;
        }
        out.profile.push(SliceProfile { var, radius: r, min_modulus: min_mod });
    }
    out
}

/// Newton on the slice polynomial in w, starting from `w`.
fn track_root(q: &BiPoly, z: C, mut w: C) -> C {
    let s = q.slice_z(z);
    for _ in 0..50 {
        let (p, dp) = univar::horner_d(&s, w);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        w -= step;
        if step.norm() <= 1e-16 * w.norm().max(1.0) {
            break;
        }
    }
    w
}

/// g(theta) = |w(theta)|^2 - 1 and its derivative along the root branch through w.
fn branch(q: &BiPoly, qz: &BiPoly, qw: &BiPoly, th: f64, w: C) -> (C, f64, f64) {
    let z = C::from_polar(1.0, th);
    let w = track_root(q, z, w);
    let dw = -(C::i() * z * qz.eval(z, w)) / qw.eval(z, w);
    (w, w.norm_sqr() - 1.0, 2.0 * (w.conj() * dw).re)
}

/// Root of a scalar function on [a, b] with f(a) f(b) <= 0 (bisection with secant steps).
fn bracket_root(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..200 {
        if (b - a).abs() < 1e-16 {
            break;
        }
        let mut x = if fb != fa { b - fb * (b - a) / (fb - fa) } else { 0.5 * (a + b) };
        let lo = a.min(b);
        let hi = a.max(b);
        if !(x > lo + 0.01 * (hi - lo) && x < hi - 0.01 * (hi - lo)) {
            x = 0.5 * (a + b);
        }
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if (fx < 0.0) == (fa < 0.0) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    if fa.abs() < fb.abs() {
        a
    } else {
        b
    }
}

/// Refines a near-circle slice root into a torus zero, if there is one nearby.
fn refine_candidate(q: &BiPoly, qz: &BiPoly, qw: &BiPoly, th0: f64, w0: C, h: f64) -> Option<TorusZero> {
    let (w_c, _, _) = branch(q, qz, qw, th0, w0);
    let (_, g_l, dg_l) = branch(q, qz, qw, th0 - h, w_c);
    let (_, g_r, dg_r) = branch(q, qz, qw, th0 + h, w_c);
    let th = if g_l * g_r < 0.0 {
        // transversal crossing of the circle
        bracket_root(|t| branch(q, qz, qw, t, w_c).1, th0 - h, th0 + h)
    } else if dg_l * dg_r <= 0.0 {
        // tangency: locate the extremum of |w|, which is a simple root of g'
        bracket_root(|t| branch(q, qz, qw, t, w_c).2, th0 - h, th0 + h)
    } else {
        return None;
    };
    let (w, g, _) = branch(q, qz, qw, th, w_c);
    if !w.is_finite() || g.abs() > TANGENCY_TOL {
        return None;
    }
    let z = C::from_polar(1.0, th);
    let w = w / w.norm();
    Some(TorusZero { z, w, residual: q.eval(z, w).norm() })
}

/// Result of scanning the torus for zeros.
#[derive(Clone, Debug)]
pub struct TorusScan {
    pub zeros: Vec<TorusZero>,
    pub toral: bool,
    pub factors: Vec<ToralFactor>,
}

fn dedup(zs: Vec<TorusZero>) -> Vec<TorusZero> {
    let mut out: Vec<TorusZero> = Vec::new();
    for t in zs {
        if !out.iter().any(|o| (o.z - t.z).norm() < 1e-6 && (o.w - t.w).norm() < 1e-6) {
            out.push(t);
        }
    }
    out.sort_by(|a, b| a.z.arg().partial_cmp(&b.z.arg()).unwrap());
    out
}

fn zeros_from_sweep(q: &BiPoly, sw: &Sweep, grid: usize) -> Vec<TorusZero> {
    let qz = q.differentiate(Var::Z);
    let qw = q.differentiate(Var::W);
    let h = 2.0 * PI / grid as f64;
    let found = sw
        .candidates
        .iter()
        .filter_map(|&(th, w)| refine_candidate(q, &qz, &qw, th, w, h))
        .collect();
    dedup(found)
}

fn full_scan(q: &BiPoly, grid: usize) -> (Sweep, Sweep, TorusScan) {
    let sz = sweep(q, Var::Z, grid);
    let sq = swap_vars(q);
    let sw = sweep(&sq, Var::W, grid);
    let mut factors: Vec<ToralFactor> =
        sz.factors.iter().map(|&at| ToralFactor { var: Var::Z, at }).collect();
    factors.extend(sw.factors.iter().map(|&at| ToralFactor { var: Var::W, at }));
    let mut toral = !factors.is_empty() || sz.on_circle_fraction > 0.1 || sw.on_circle_fraction > 0.1;
    let mut zeros = zeros_from_sweep(q, &sz, grid);
    // zeros on a vertical circle z = z0 are only visible from the other sweep
    for t in zeros_from_sweep(&sq, &sw, grid) {
        zeros.push(TorusZero { z: t.w, w: t.z, residual: t.residual });
    }
    let zeros = dedup(zeros);
    if zeros.len() > grid / 8 {
        toral = true;
    }
    (sz, sw, TorusScan { zeros, toral, factors })
}

/// Zeros of q on the torus, located from unit-circle slices and refined along root branches.
pub fn torus_zeros(q: &BiPoly, grid: usize) -> TorusScan {
    full_scan(q, grid).2
}

/// Numerical (sampling) certificate of zero location; evidence, not proof.
pub fn bidisk_stability(q: &BiPoly, grid_size: usize, tol: f64) -> Result<StabilityReport> {
    if q.is_zero(0.0) {
        return Err(Error::ZeroPolynomial);
    }
    let grid = grid_size.max(8);
    let (sz, sw, scan) = full_scan(q, grid);
    let open_ok = |s: &Sweep| {
        !s.interior_degenerate
            && s.profile.iter().all(|p| p.min_modulus.map_or(true, |m| m >= 1.0 - tol))
    };
    let closed_ok = |s: &Sweep| {
        s.profile
            .iter()
            .filter(|p| p.radius == 1.0)
            .all(|p| p.min_modulus.map_or(true, |m| m > 1.0 + tol))
    };
    let stable_open = open_ok(&sz) && open_ok(&sw);
    let stable_closed = stable_open
        && closed_ok(&sz)
        && closed_ok(&sw)
        && scan.zeros.is_empty()
        && scan.factors.is_empty();
    let mut profile = sz.profile;
    profile.extend(sw.profile);
    Ok(StabilityReport {
        stable_open,
        stable_closed,
        atoral: !scan.toral,
        torus_zeros: scan.zeros,
        min_modulus_profile: profile,
        toral_factors: scan.factors,
    })
}

/// Sylvester matrix of two one-variable polynomials (ascending coefficients, trimmed).
pub fn sylvester(a: &[C], b: &[C]) -> CMat {
    let da = a.len() - 1;
    let db = b.len() - 1;
    let n = da + db;
    let mut s = CMat::zeros(n, n);
    for i in 0..db {
        for (k, &c) in a.iter().rev().enumerate() {
            s[(i, i + k)] = c;
        }
    }
    for i in 0..da {
        for (k, &c) in b.iter().rev().enumerate() {
            s[(db + i, i + k)] = c;
        }
    }
    s
}

fn trim(c: &[C]) -> Vec<C> {
    match univar::effective_degree(c, 1e-13) {
        Some(d) => c[..=d].to_vec(),
        None => vec![],
    }
}

/// Degree of the numerical gcd of two one-variable polynomials.
pub fn gcd_degree(a: &[C], b: &[C]) -> usize {
    let a = trim(a);
    let b = trim(b);
    if a.is_empty() {
        return b.len().saturating_sub(1);
    }
    if b.is_empty() {
        return a.len().saturating_sub(1);
    }
    if a.len() == 1 || b.len() == 1 {
        return 0;
    }
    let s = sylvester(&a, &b);
    let sv = linalg::singular_values(&s);
    let thr = 1e-10 * sv[0];
    sv.iter().filter(|&&x| x <= thr).count()
}

#[derive(Clone, Debug, Serialize)]
pub struct GcdCheck {
    pub common_degree: usize,
    pub witness_roots: Vec<Witness>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    #[serde(serialize_with = "ser_c")]
    pub z: C,
    #[serde(serialize_with = "ser_c")]
    pub w: C,
}

/// Generic gcd degree of q and its reflection, read off Sylvester rank deficiencies at
/// random sample points; the larger of the w- and z-direction degrees is reported.
pub fn reflection_gcd_check(q: &BiPoly, bx: DegreeBox) -> Result<GcdCheck> {
    if q.is_zero(0.0) {
        return Err(Error::ZeroPolynomial);
    }
    let r = q.reflect(bx)?;
    let q = q.with_box(bx)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut sample = || {
        let rad: f64 = rng.gen_range(0.5..2.0);
        let th: f64 = rng.gen_range(0.0..2.0 * PI);
        C::from_polar(rad, th)
    };
    let mut best_w = usize::MAX;
    let mut best_z = usize::MAX;
    let mut witnesses = vec![];
    for _ in 0..5 {
        let z0 = sample();
        let a = q.slice_z(z0);
        let b = r.slice_z(z0);
        let dw = gcd_degree(&a, &b);
        best_w = best_w.min(dw);
        if dw > 0 {
            let scale = q.max_abs();
            for w in univar::roots(&trim(&a)) {
                if univar::horner(&b, w).norm() <= 1e-7 * scale * (1.0 + w.norm()).powi(bx.m as i32) {
                    witnesses.push(Witness { z: z0, w });
                }
            }
        }
        let w0 = sample();
        best_z = best_z.min(gcd_degree(&q.slice_w(w0), &r.slice_w(w0)));
    }
    let common_degree = best_w.max(best_z);
    if common_degree == 0 {
        witnesses.clear();
    }
    Ok(GcdCheck { common_degree, witness_roots: witnesses })
}

#[derive(Clone, Debug, Serialize)]
pub struct ToralStability {
    pub stable: bool,
    pub combination: BiPoly,
    pub exceptional_points: Vec<TorusZero>,
}

/// a * reflect(dp/dz, (n-1, m)) + b * reflect(dp/dw, (n, m-1)) where (n, m) is the
/// support box of p.
pub fn derivative_combination(p: &BiPoly, a: f64, b: f64) -> Result<BiPoly> {
    let s = p.support_box(0.0);
    let p = p.trimmed();
    let mut acc = BiPoly::zeros(s);
    if s.n >= 1 {
        let dz = p.differentiate(Var::Z).reflect(DegreeBox::new(s.n - 1, s.m))?;
        acc = acc.add(&dz.scale(C::new(a, 0.0)));
    }
    if s.m >= 1 {
        let dw = p.differentiate(Var::W).reflect(DegreeBox::new(s.n, s.m - 1))?;
        acc = acc.add(&dw.scale(C::new(b, 0.0)));
    }
    Ok(acc)
}

/// Stability verdict for the derivative combination of a toral polynomial.
/// Irreducibility of p is assumed, not checked.
pub fn toral_stability_test(p: &BiPoly, a: f64, b: f64, grid: usize, tol: f64) -> Result<ToralStability> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Invalid("a and b must be positive".into()));
    }
    let comb = derivative_combination(p, a, b)?;
    if comb.is_zero(1e-14 * p.max_abs().max(1.0)) {
        return Err(Error::Degenerate("derivative combination vanishes".into()));
    }
    let rep = bidisk_stability(&comb, grid, tol)?;
    Ok(ToralStability {
        stable: rep.stable_open && rep.atoral,
        combination: comb,
        exceptional_points: rep.torus_zeros,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C {
        C::new(x, 0.0)
    }
    fn q0() -> BiPoly {
        BiPoly::from_real_terms(&[(0, 0, 2.0), (1, 0, -1.0), (0, 1, -1.0)])
    }

    #[test]
    fn slice_examples() {
        let r = slice_roots(&q0(), c(0.0)).unwrap();
        assert!((r[0] - c(2.0)).norm() < 1e-14);
        let r = slice_roots(&q0(), c(1.0)).unwrap();
        assert!((r[0] - c(1.0)).norm() < 1e-14);
        let p = BiPoly::from_real_terms(&[(3, 0, 1.0), (1, 1, -1.0), (2, 1, -1.0), (0, 2, 1.0)]);
        let mut r = slice_roots(&p, c(0.5)).unwrap();
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((r[0] - c(0.25)).norm() < 1e-14 && (r[1] - c(0.5)).norm() < 1e-14);
        let zw = BiPoly::from_real_terms(&[(1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(slice_roots(&zw, c(0.0)), Err(Error::DegenerateSlice { .. })));
    }

    #[test]
    fn stability_examples() {
        let r = bidisk_stability(&q0(), 512, 1e-9).unwrap();
        assert!(r.stable_open && !r.stable_closed && r.atoral);
        assert_eq!(r.torus_zeros.len(), 1);
        let t = &r.torus_zeros[0];
        assert!((t.z - c(1.0)).norm() < 1e-10 && (t.w - c(1.0)).norm() < 1e-10);

        let r = bidisk_stability(&BiPoly::from_real_terms(&[(0, 0, 4.0), (1, 0, -1.0), (0, 1, -1.0)]), 512, 1e-9).unwrap();
        assert!(r.stable_closed && r.torus_zeros.is_empty());

        let r = bidisk_stability(&BiPoly::from_real_terms(&[(1, 0, 1.0), (0, 1, -1.0)]), 512, 1e-9).unwrap();
        assert!(!r.stable_open && !r.atoral);
    }

    #[test]
    fn off_grid_torus_zero_is_located_accurately() {
        // 2 - a z - conj(a) w style zero at (e^{i t}, e^{-i t}) with t off the grid
        let t = 0.123456789f64;
        let u = C::from_polar(1.0, -t);
        let q = BiPoly::from_terms(&[(0, 0, c(2.0)), (1, 0, -u), (0, 1, -u.conj())]);
        let r = bidisk_stability(&q, 512, 1e-9).unwrap();
        assert_eq!(r.torus_zeros.len(), 1);
        assert!((r.torus_zeros[0].z - u.conj()).norm() < 1e-12);
        assert!((r.torus_zeros[0].w - u).norm() < 1e-12);
    }

    #[test]
    fn gcd_examples() {
        let b = DegreeBox::new(1, 1);
        assert_eq!(reflection_gcd_check(&q0(), b).unwrap().common_degree, 0);
        let zw = BiPoly::from_real_terms(&[(1, 0, 1.0), (0, 1, -1.0)]);
        assert_eq!(reflection_gcd_check(&zw, b).unwrap().common_degree, 1);
        let prod = q0().mul(&zw);
        let g = reflection_gcd_check(&prod, DegreeBox::new(2, 2)).unwrap();
        assert_eq!(g.common_degree, 1);
        assert!(!g.witness_roots.is_empty());
        assert!(g.witness_roots.iter().all(|x| (x.z - x.w).norm() < 1e-8));
    }

    #[test]
    fn toral_examples() {
        let p = BiPoly::from_real_terms(&[(0, 0, 1.0), (1, 1, -1.0)]);
        let t = toral_stability_test(&p, 1.0, 1.0, 256, 1e-9).unwrap();
        assert!(t.stable);
        assert_eq!(t.combination, BiPoly::constant(c(-2.0)));
        let t2 = toral_stability_test(&p.scale(c(-1.0)), 1.0, 1.0, 256, 1e-9).unwrap();
        assert_eq!(t.stable, t2.stable);
        let p = BiPoly::from_real_terms(&[(1, 0, 1.0), (0, 1, -1.0)]);
        let t = toral_stability_test(&p, 1.0, 1.0, 256, 1e-9).unwrap();
        assert!(!t.stable);
        assert_eq!(t.combination, BiPoly::from_real_terms(&[(0, 1, 1.0), (1, 0, -1.0)]));
    }
}
