//! Bernstein-Szego measures d(mu) = |q|^{-2} d(sigma): Taylor series of 1/q, radial means,
//! inner products and square-integrability tests.

use crate::bipoly::{BiPoly, DegreeBox};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::measure::{Density, Measure, Quadrature};
use crate::univar;
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ZERO: C = C { re: 0.0, im: 0.0 };

/// How inner products are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerMethod {
    /// Exact in w, trapezoid in z on the torus itself.
    Torus,
    /// Radial means at the policy radii extrapolated to r = 1.
    Radial,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NumericPolicy {
    pub series_order: usize,
    /// Radii r_k with sqrt(1 - r_k^2) geometric, strictly increasing toward 1.
    pub radii: Vec<f64>,
    pub fft_grid: usize,
    pub tol_pair: f64,
    pub tol_member_slope: f64,
    pub method: InnerMethod,
    pub seed: u64,
    /// Largest trapezoid size in z.
    pub max_nodes: usize,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        NumericPolicy {
            series_order: 1024,
            radii: default_radii(),
            fft_grid: 4096,
            tol_pair: 1e-8,
            tol_member_slope: -1.0,
            method: InnerMethod::Torus,
            seed: 0,
            max_nodes: 1 << 16,
        }
    }
}

/// r with sqrt(1 - r^2) = 2^-3, ..., 2^-12.
pub fn default_radii() -> Vec<f64> {
    (3..=12).map(|k| (1.0 - 4f64.powi(-k)).sqrt()).collect()
}

impl NumericPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.radii.windows(2).any(|w| w[0] >= w[1]) || self.radii.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
            return Err(Error::Invalid("radii must be strictly increasing inside (0,1)".into()));
        }
        if !self.fft_grid.is_power_of_two() {
            return Err(Error::Invalid("fft grid must be a power of two".into()));
        }
        if self.series_order < 8 {
            return Err(Error::Invalid("series order must be at least 8".into()));
        }
        Ok(())
    }

    pub fn quadrature(&self) -> Quadrature {
        Quadrature { n_max: self.max_nodes, ..Quadrature::default() }
    }
}

/// Truncated Taylor coefficients about the origin on a square box.
#[derive(Clone, Debug)]
pub struct SeriesGrid {
    pub order_z: usize,
    pub order_w: usize,
    pub coef: Vec<C>,
    pub origin_value: C,
}

impl SeriesGrid {
    pub fn get(&self, j: usize, k: usize) -> C {
        if j <= self.order_z && k <= self.order_w {
            self.coef[j * (self.order_w + 1) + k]
        } else {
            ZERO
        }
    }

    /// Shell energies e_s = sum_{j+k=s} |c_jk|^2 for s <= min(order_z, order_w).
    pub fn shell_energies(&self) -> Vec<f64> {
        let s_max = self.order_z.min(self.order_w);
        (0..=s_max)
            .map(|s| (0..=s).map(|j| self.get(j, s - j).norm_sqr()).sum())
            .collect()
    }

    /// Polynomial given by the retained coefficients.
    pub fn to_bipoly(&self) -> BiPoly {
        BiPoly::from_flat(DegreeBox::new(self.order_z, self.order_w), self.coef.clone())
    }
}

/// Taylor coefficients of 1/q up to `order` in each variable.
pub fn invert_series(q: &BiPoly, order: usize) -> Result<SeriesGrid> {
    let q00 = q.get(0, 0);
    if q00.norm() == 0.0 {
        return Err(Error::Precondition("q(0,0) = 0, so 1/q is not holomorphic at the origin".into()));
    }
    let s = order;
    let terms: Vec<(usize, usize, C)> = q
        .deg_box()
        .monomials()
        .filter(|&(a, b)| (a, b) != (0, 0))
        .map(|(a, b)| (a, b, q.get(a, b)))
        .filter(|t| t.2 != ZERO)
        .collect();
    let w = s + 1;
    let mut c = vec![ZERO; w * w];
    let inv = C::new(1.0, 0.0) / q00;
    for j in 0..=s {
        for k in 0..=s {
            let mut acc = if j == 0 && k == 0 { C::new(1.0, 0.0) } else { ZERO };
            for &(a, b, qa) in &terms {
                if a <= j && b <= k {
                    acc -= qa * c[(j - a) * w + (k - b)];
                }
            }
            c[j * w + k] = acc * inv;
        }
    }
    Ok(SeriesGrid { order_z: s, order_w: s, origin_value: c[0], coef: c })
}

/// Taylor coefficients of f/q on the same square box.
pub fn quotient_series(f: &BiPoly, q: &BiPoly, order: usize) -> Result<SeriesGrid> {
    let inv = invert_series(q, order)?;
    let w = order + 1;
    let mut c = vec![ZERO; w * w];
    for (a, b) in f.deg_box().monomials() {
        let fa = f.get(a, b);
        if fa == ZERO {
            continue;
        }
        for j in a..=order {
            for k in b..=order {
                c[j * w + k] += fa * inv.coef[(j - a) * w + (k - b)];
            }
        }
    }
    Ok(SeriesGrid { order_z: order, order_w: order, origin_value: c[0], coef: c })
}

/// q(r z, r w), i.e. coefficients scaled by r^(j+k).
pub fn dilate(p: &BiPoly, r: f64) -> BiPoly {
    BiPoly::from_fn(p.deg_box(), |j, k| p.get(j, k) * r.powi((j + k) as i32))
}

/// Fails when q has a zero in the closed bidisk of radius r (slice sweep).
pub fn check_zero_free(q: &BiPoly, r: f64, grid: usize) -> Result<()> {
    let qr = dilate(q, r);
    let scale = q.max_abs();
    for step in 0..=8 {
        let rad = step as f64 / 8.0;
        let count = if step == 0 { 1 } else { grid };
        for i in 0..count {
            let z = C::from_polar(rad, 2.0 * PI * i as f64 / grid as f64);
            let s = qr.slice_z(z);
            if s.iter().all(|c| c.norm() <= 1e-14 * scale) {
                return Err(Error::Precondition(format!("q vanishes on a slice inside radius {r}")));
            }
            if univar::roots(&s).iter().any(|w| w.norm() <= 1.0) {
                return Err(Error::Precondition(format!("q has a zero inside the closed bidisk of radius {r}")));
            }
        }
    }
    Ok(())
}

/// Trapezoid average of f conj(g) / |q|^2 over the grid x grid torus of radius r.
pub fn radial_mean(f: &BiPoly, g: &BiPoly, q: &BiPoly, r: f64, grid: usize) -> Result<C> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Invalid("radius must lie in (0,1)".into()));
    }
    check_zero_free(q, r, grid.min(512))?;
    let mut rows = Vec::with_capacity(grid);
    for i in 0..grid {
        let z = C::from_polar(r, 2.0 * PI * i as f64 / grid as f64);
        let mut row = ZERO;
        for l in 0..grid {
            let w = C::from_polar(r, 2.0 * PI * l as f64 / grid as f64);
            row += f.eval(z, w) * g.eval(z, w).conj() / q.eval(z, w).norm_sqr();
        }
        rows.push(row);
    }
    Ok(pairwise_sum(&rows) / (grid * grid) as f64)
}

/// Sum in a fixed pairwise order.
pub fn pairwise_sum(v: &[C]) -> C {
    match v.len() {
        0 => ZERO,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

fn joint_box(a: &BiPoly, b: &BiPoly) -> DegreeBox {
    let sa = a.support_box(0.0);
    let sb = b.support_box(0.0);
    DegreeBox::new(sa.n.max(sb.n), sa.m.max(sb.m))
}

fn pair_cols(f: &BiPoly, g: &BiPoly, bx: DegreeBox) -> Result<CMat> {
    let f = f.with_box(bx)?;
    let g = g.with_box(bx)?;
    Ok(CMat::from_fn(bx.dim(), 2, |i, c| if c == 0 { f.coefs()[i] } else { g.coefs()[i] }))
}

/// Radial mean with the w-integral done exactly and an adaptive trapezoid in z.
pub fn radial_mean_exact(f: &BiPoly, g: &BiPoly, q: &BiPoly, r: f64, max_nodes: usize) -> Result<C> {
    let bx = joint_box(f, g);
    let mut m = Measure::with_singular(Density::Szego(dilate(q, r)), vec![]);
    m.quad = Quadrature { n_max: max_nodes, ..Quadrature::default() };
    let cols = pair_cols(&dilate(f, r), &dilate(g, r), bx)?;
    Ok(m.integrate(bx, &cols)?.gram[(0, 1)])
}

#[derive(Clone, Debug, Serialize)]
pub struct PairValue {
    #[serde(serialize_with = "crate::bipoly::ser_c")]
    pub value: C,
    pub error_estimate: f64,
}

/// <f, g> under |q|^{-2} d(sigma). Both arguments should be square integrable.
pub fn bs_inner(f: &BiPoly, g: &BiPoly, q: &BiPoly, policy: &NumericPolicy) -> Result<PairValue> {
    match policy.method {
        InnerMethod::Torus => bs_inner_torus(f, g, q, policy),
        InnerMethod::Radial => bs_inner_radial(f, g, q, policy),
    }
}

fn bs_inner_torus(f: &BiPoly, g: &BiPoly, q: &BiPoly, policy: &NumericPolicy) -> Result<PairValue> {
    let mut m = Measure::szego(q)?;
    m.quad = policy.quadrature();
    let bx = joint_box(f, g);
    let cols = pair_cols(f, g, bx)?;
    let it = m.integrate(bx, &cols)?;
    Ok(PairValue { value: it.gram[(0, 1)], error_estimate: it.err })
}

/// Neville extrapolation in eps = sqrt(1 - r^2) of exact-in-w radial means.
pub fn bs_inner_radial(f: &BiPoly, g: &BiPoly, q: &BiPoly, policy: &NumericPolicy) -> Result<PairValue> {
    policy.validate()?;
    let eps: Vec<f64> = policy.radii.iter().map(|r| (1.0 - r * r).sqrt()).collect();
    let vals = policy
        .radii
        .iter()
        .map(|&r| radial_mean_exact(f, g, q, r, policy.max_nodes.max(1 << 18)))
        .collect::<Result<Vec<C>>>()?;
    // successive extrapolants using the first k radii
    let mut est = vec![];
    for k in 1..=eps.len() {
        est.push(linalg::neville_zero_scalar(&eps[..k], &vals[..k]).0);
    }
    let incs: Vec<f64> = est.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let value = *est.last().unwrap();
    let scale = value.norm().max(vals.iter().map(|v| v.norm()).fold(0.0, f64::max)).max(1e-300);
    let last = incs.last().copied().unwrap_or(0.0);
    if incs.len() >= 3 && last > 1e-10 * scale {
        let t = &incs[incs.len() - 3..];
        if !(t[1] < t[0] && t[2] < t[1]) {
            return Err(Error::Divergence(format!(
                "radial extrapolation increments {:.3e}, {:.3e}, {:.3e} are not decreasing",
                t[0], t[1], t[2]
            )));
        }
    }
    Ok(PairValue { value, error_estimate: last })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Member {
    Yes,
    No,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct MembershipVerdict {
    pub member: Member,
    pub shell_energies: Vec<f64>,
    pub fitted_slope: f64,
    /// Partial sum of shell energies, plus a power-law tail estimate when the slope is
    /// below -1.
    pub cumulative: f64,
}

/// Least-squares slope of log e_s against log s over s in [lo, hi], skipping zeros.
fn loglog_slope(e: &[f64], lo: usize, hi: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = (lo.max(1)..=hi)
        .filter(|&s| e[s] > 0.0)
        .map(|s| ((s as f64).ln(), e[s].ln()))
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Partial sum up to `s`, tail-corrected under the fitted power law when summable.
fn corrected_sum(e: &[f64], s: usize, slope: f64) -> f64 {
    let partial: f64 = e[..=s].iter().sum();
    if slope < -1.0 && e[s] > 0.0 {
        // integral of the power law past s, midpoint-corrected
        partial + e[s] * (s as f64) / (-slope - 1.0) - 0.5 * e[s]
    } else {
        partial
    }
}

/// Heuristic test of f/q in L^2 of the torus from the decay of Taylor shell energies.
pub fn l2_membership(f: &BiPoly, q: &BiPoly, policy: &NumericPolicy) -> Result<MembershipVerdict> {
    let s = policy.series_order;
    let series = quotient_series(f, q, s)?;
    let e = series.shell_energies();
    let top = e.iter().cloned().fold(0.0, f64::max);
    let tiny = |x: f64| x <= 1e-300 || x <= top * 1e-30;
    if tiny(e[s]) && tiny(e[s / 2]) {
        let cum: f64 = e.iter().sum();
        return Ok(MembershipVerdict { member: Member::Yes, shell_energies: e, fitted_slope: f64::NEG_INFINITY, cumulative: cum });
    }
    let slope = loglog_slope(&e, s / 2, s).unwrap_or(0.0);
    let slope_half = loglog_slope(&e, s / 4, s / 2).unwrap_or(0.0);
    let cum = corrected_sum(&e, s, slope);
    let cum_half = corrected_sum(&e, s / 2, slope_half);
    let rel = (cum - cum_half).abs() / cum.abs().max(1e-300);
    let member = if slope < policy.tol_member_slope && rel <= 1e-4 {
        Member::Yes
    } else if slope >= policy.tol_member_slope && cum > cum_half * (1.0 + 1e-4) {
        Member::No
    } else {
        Member::Inconclusive
    };
    Ok(MembershipVerdict { member, shell_energies: e, fitted_slope: slope, cumulative: cum })
}

/// Basis of the polynomials over `bx` that are square integrable against |q|^{-2}.
/// The elements are orthonormal in coefficient space.
pub fn square_integrable_basis(bx: DegreeBox, q: &BiPoly, policy: &NumericPolicy) -> Result<crate::opoly::SubspaceBasis> {
    policy.validate()?;
    let rep = crate::stability::bidisk_stability(q, crate::stability::DEFAULT_GRID, crate::stability::DEFAULT_TOL)?;
    if !rep.stable_open {
        return Err(Error::Precondition("q has zeros in the open bidisk".into()));
    }
    let mut m = Measure::szego(q)?;
    m.quad = policy.quadrature();
    let ms = m.member_space(bx)?;
    let v = crate::bipoly::VecBiPoly::from_coef_matrix(bx, &ms.basis);
    crate::opoly::SubspaceBasis::new(v.entries().to_vec(), bx, "q")
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
    fn binom(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn series_examples() {
        let s = invert_series(&q0(), 20).unwrap();
        for j in 0..=10 {
            for k in 0..=10 {
                let want = binom(j + k, j) / 2f64.powi((j + k + 1) as i32);
                assert!((s.get(j, k) - c(want)).norm() < 1e-15);
            }
        }
        let one = invert_series(&BiPoly::constant(c(1.0)), 5).unwrap();
        assert_eq!(one.get(0, 0), c(1.0));
        assert!(one.coef.iter().skip(1).all(|x| *x == ZERO));
        let z = BiPoly::from_real_terms(&[(1, 0, 1.0)]);
        assert!(invert_series(&z, 5).is_err());
    }

    #[test]
    fn radial_mean_examples() {
        let zm1 = BiPoly::from_real_terms(&[(0, 0, -1.0), (1, 0, 1.0)]);
        let one = BiPoly::constant(c(1.0));
        let r: f64 = 0.8;
        let e = (1.0 - r * r).sqrt();
        let v = radial_mean(&zm1, &zm1, &q0(), r, 256).unwrap();
        assert!((v - c((2.0 - e) / 4.0)).norm() < 1e-12);
        let v = radial_mean(&one, &one, &q0(), r, 256).unwrap();
        assert!((v - c(1.0 / (4.0 * e))).norm() < 1e-12);
        let v = radial_mean_exact(&one, &one, &q0(), 0.999, 1 << 16).unwrap();
        let e = (1.0f64 - 0.999 * 0.999).sqrt();
        assert!((v - c(1.0 / (4.0 * e))).norm() < 1e-10);
    }

    #[test]
    fn basis_examples() {
        let p = NumericPolicy::default();
        let b = square_integrable_basis(DegreeBox::new(1, 1), &q0(), &p).unwrap();
        assert_eq!(b.dim(), 3);
        let want = crate::bipoly::VecBiPoly::with_box(
            vec![
                BiPoly::from_real_terms(&[(1, 0, 1.0), (0, 0, -1.0)]),
                BiPoly::from_real_terms(&[(0, 1, 1.0), (0, 0, -1.0)]),
                BiPoly::from_real_terms(&[(1, 0, 1.0), (0, 1, 1.0), (1, 1, -2.0)]),
            ],
            DegreeBox::new(1, 1),
        )
        .unwrap();
        let ang = linalg::max_principal_angle(&linalg::orth(&b.coef_matrix(), 1e-12), &linalg::orth(&want.coef_matrix(), 1e-12));
        assert!(ang < 1e-6, "{ang}");
        assert_eq!(square_integrable_basis(DegreeBox::new(0, 0), &q0(), &p).unwrap().dim(), 0);
        let q4 = BiPoly::from_real_terms(&[(0, 0, 4.0), (1, 0, -1.0), (0, 1, -1.0)]);
        assert_eq!(square_integrable_basis(DegreeBox::new(2, 1), &q4, &p).unwrap().dim(), 6);
    }

    #[test]
    fn membership_examples() {
        let p = NumericPolicy { series_order: 512, ..NumericPolicy::default() };
        let one = BiPoly::constant(c(1.0));
        let zm1 = BiPoly::from_real_terms(&[(0, 0, -1.0), (1, 0, 1.0)]);
        let v = l2_membership(&one, &q0(), &p).unwrap();
        assert_eq!(v.member, Member::No, "{} {}", v.fitted_slope, v.cumulative);
        let v = l2_membership(&zm1, &q0(), &p).unwrap();
        assert_eq!(v.member, Member::Yes, "{} {}", v.fitted_slope, v.cumulative);
        let q4 = BiPoly::from_real_terms(&[(0, 0, 4.0), (1, 0, -1.0), (0, 1, -1.0)]);
        let v = l2_membership(&one, &q4, &p).unwrap();
        assert_eq!(v.member, Member::Yes);
    }

    #[test]
    fn inner_products_both_methods() {
        let zm1 = BiPoly::from_real_terms(&[(0, 0, -1.0), (1, 0, 1.0)]);
        let p = NumericPolicy::default();
        let v = bs_inner(&zm1, &zm1, &q0(), &p).unwrap();
        assert!((v.value - c(0.5)).norm() < 1e-10);
        let pr = NumericPolicy { method: InnerMethod::Radial, radii: default_radii()[..6].to_vec(), ..p };
        let v = bs_inner(&zm1, &zm1, &q0(), &pr).unwrap();
        assert!((v.value - c(0.5)).norm() < 1e-8, "{}", v.value);
        let one = BiPoly::constant(c(1.0));
        assert!(matches!(bs_inner(&one, &one, &q0(), &pr), Err(Error::Divergence(_))));
    }
}
