//! Distinguished varieties: the derivative sums-of-squares identity, a unitary colligation
//! realizing the inner function Phi(z), and the bounded extension operator.

use crate::bipoly::{self, ser_c, ser_cmat, BiPoly, DegreeBox, MatPoly1, Var, VecBiPoly};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::sos::{self, SosDecomposition};
use crate::stability;
use crate::szego::NumericPolicy;
use crate::univar;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

/// Slice roots with |w| <= 1 + VARIETY_TOL count as points of V in the closed bidisk.
pub const VARIETY_TOL: f64 = 1e-9;
/// Roots closer than this are reported as one point with multiplicity.
const MULT_RADIUS: f64 = 1e-6;
/// Q(z) with condition number above this is reported as near a pole.
pub const POLE_WARN_COND: f64 = 1e8;
/// Above this condition number evaluation is refused.
const POLE_COND: f64 = 1e15;

#[derive(Clone, Debug, Serialize)]
pub struct VarietyPoint {
    #[serde(serialize_with = "ser_c")]
    pub z: C,
    #[serde(serialize_with = "ser_c")]
    pub w: C,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct VarietySamples {
    pub points: Vec<VarietyPoint>,
    /// z values whose slice vanished identically.
    #[serde(serialize_with = "bipoly::ser_cvec")]
    pub skipped: Vec<C>,
}

impl VarietySamples {
    pub fn pairs(&self) -> Vec<(C, C)> {
        self.points.iter().map(|p| (p.z, p.w)).collect()
    }
}

/// Points of V(p) over `count` equally spaced z on the circle of the given radius, with
/// |w| <= 1 + tol.
pub fn variety_samples(p: &BiPoly, count: usize, radius: f64) -> Result<VarietySamples> {
    if !(0.0..=1.0).contains(&radius) {
        return Err(Error::Invalid(format!("radius {radius} outside [0, 1]")));
    }
    let m = p.support_box(0.0).m;
    let mut out = VarietySamples { points: vec![], skipped: vec![] };
    for i in 0..count {
        let z = C::from_polar(radius, 2.0 * PI * i as f64 / count as f64);
        let roots = match stability::slice_roots(p, z) {
            Ok(r) => r,
            Err(Error::DegenerateSlice { .. }) => {
                out.skipped.push(z);
                continue;
            }
            Err(e) => return Err(e),
        };
        if radius < 1.0 {
            if roots.len() < m {
                return Err(Error::NotDistinguished(format!("slice at z = {z} loses degree")));
            }
            if let Some(w) = roots.iter().find(|w| w.norm() > 1.0 + VARIETY_TOL) {
                return Err(Error::NotDistinguished(format!("point ({z}, {w}) leaves the bidisk")));
            }
        }
        let inside: Vec<C> = roots.into_iter().filter(|w| w.norm() <= 1.0 + VARIETY_TOL).collect();
        for (w, multiplicity) in univar::cluster(&inside, MULT_RADIUS) {
            out.points.push(VarietyPoint { z, w, multiplicity });
        }
    }
    Ok(out)
}

/// z^n g(1/z, w).
fn flip_z(g: &BiPoly, n: usize) -> BiPoly {
    let m = g.deg_w();
    BiPoly::from_fn(DegreeBox::new(n, m), |j, k| g.get(n - j, k))
}

#[derive(Clone, Debug, Serialize)]
pub struct DvSos {
    pub p: BiPoly,
    pub a: f64,
    pub b: f64,
    /// a refl(q_z) + b refl(q_w) with q(z,w) = z^n p(1/z, w).
    pub r: BiPoly,
    #[serde(rename = "Pvec")]
    pub pvec: VecBiPoly,
    #[serde(rename = "Qvec")]
    pub qvec: VecBiPoly,
    #[serde(skip)]
    pub qmat: MatPoly1,
    pub identity_residual: f64,
    /// Smallest singular value of Q(z) over interior samples.
    pub qmat_min_sv: f64,
    #[serde(skip)]
    pub sos: SosDecomposition,
}

fn disk_point(rng: &mut ChaCha8Rng, rmax: f64) -> C {
    let r = rmax * rng.gen::<f64>().sqrt();
    C::from_polar(r, 2.0 * PI * rng.gen::<f64>())
}

/// Sums-of-squares data (P, Q) for a distinguished variety p of degree (n, m):
/// (bm-an)|p|^2 + 2 Re[(a z p_z - b w p_w) conj p] + (1-|z|^2)|P|^2 = (1-|w|^2)|Q|^2.
pub fn dv_sos(p: &BiPoly, a: f64, b: f64, policy: &NumericPolicy) -> Result<DvSos> {
    if !(a >= 0.0 && b >= 0.0 && a + b > 0.0) {
        return Err(Error::Invalid(format!("weights must be nonnegative and not both zero, got a = {a}, b = {b}")));
    }
    if p.is_zero(0.0) {
        return Err(Error::ZeroPolynomial);
    }
    let p = p.trimmed();
    let bx = p.deg_box();
    let (n, m) = (bx.n, bx.m);
    if n == 0 || m == 0 {
        return Err(Error::NotDistinguished(format!("degree ({n},{m}) has no curve through the torus")));
    }
    variety_samples(&p, 16, 0.5)?;
    let q = flip_z(&p, n);
    let rep = stability::bidisk_stability(&q, stability::DEFAULT_GRID, stability::DEFAULT_TOL)?;
    if !rep.stable_open {
        return Err(Error::NotDistinguished("z^n p(1/z, w) vanishes in the open bidisk".into()));
    }
    let rz = q.differentiate(Var::Z).reflect(DegreeBox::new(n - 1, m))?;
    let rw = q.differentiate(Var::W).reflect(DegreeBox::new(n, m - 1))?;
    let r = rz.scale(C::new(a, 0.0)).add(&rw.scale(C::new(b, 0.0))).with_box(bx)?;
    let sos = sos::decompose(&r, bx, policy)?;
    let s = (a * n as f64 + b * m as f64).sqrt();
    let pe: Vec<BiPoly> = sos
        .e
        .entries()
        .iter()
        .map(|e| BiPoly::from_fn(DegreeBox::new(n - 1, m), |j, k| e.get(n - 1 - j, k) / s))
        .collect();
    let qe: Vec<BiPoly> = sos
        .f
        .entries()
        .iter()
        .map(|f| BiPoly::from_fn(DegreeBox::new(n, m - 1), |j, k| f.get(n - j, k) / s))
        .collect();
    let pvec = VecBiPoly::with_box(pe, DegreeBox::new(n - 1, m))?;
    let qvec = VecBiPoly::with_box(qe, DegreeBox::new(n, m - 1))?;
    let qmat = bipoly::to_matrix_form_cols(&qvec, Var::W, m)?;
    let identity_residual = dv_identity_residual(&p, a, b, &pvec, &qvec, 1000, policy.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed ^ 0x51);
    let qmat_min_sv = (0..64)
        .map(|_| {
            let z = disk_point(&mut rng, 0.99);
            linalg::singular_values(&qmat.eval(z)).last().copied().unwrap_or(0.0)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(DvSos { p, a, b, r, pvec, qvec, qmat, identity_residual, qmat_min_sv, sos })
}

/// Largest deviation of the displayed identity over random closed-bidisk points.
pub fn dv_identity_residual(
    p: &BiPoly,
    a: f64,
    b: f64,
    pvec: &VecBiPoly,
    qvec: &VecBiPoly,
    samples: usize,
    seed: u64,
) -> f64 {
    let bx = p.deg_box();
    let (n, m) = (bx.n as f64, bx.m as f64);
    let pz = p.differentiate(Var::Z);
    let pw = p.differentiate(Var::W);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let z = disk_point(&mut rng, 1.0);
        let w = disk_point(&mut rng, 1.0);
        let pv = p.eval(z, w);
        let cross = (z * pz.eval(z, w) * a - w * pw.eval(z, w) * b) * pv.conj();
        let lhs = (b * m - a * n) * pv.norm_sqr() + 2.0 * cross.re + (1.0 - z.norm_sqr()) * pvec.norm_sq(z, w);
        let rhs = (1.0 - w.norm_sqr()) * qvec.norm_sq(z, w);
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

#[derive(Clone, Debug, Serialize)]
#[allow(non_snake_case)]
pub struct Colligation {
    #[serde(serialize_with = "ser_cmat")]
    pub A: CMat,
    #[serde(serialize_with = "ser_cmat")]
    pub B: CMat,
    #[serde(serialize_with = "ser_cmat")]
    pub C: CMat,
    #[serde(serialize_with = "ser_cmat")]
    pub D: CMat,
}

#[derive(Clone, Debug, Serialize)]
pub struct RealizationChecks {
    /// Relative least-squares misfit before projecting to a unitary.
    pub isometry_residual: f64,
    pub unitarity: f64,
    pub inner_residual: f64,
    pub eigenvector_residual: f64,
    pub spectral_residual: f64,
    pub max_opnorm_disk: f64,
    pub qmat_min_sv: f64,
    /// Variety samples where Q vanishes (reported, not moved).
    pub q_zeros: Vec<VarietyPoint>,
    pub certified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DVRealization {
    pub p: BiPoly,
    pub a: f64,
    pub b: f64,
    #[serde(rename = "Pvec")]
    pub pvec: VecBiPoly,
    #[serde(rename = "Qvec")]
    pub qvec: VecBiPoly,
    #[serde(skip)]
    pub qmat: MatPoly1,
    pub colligation: Colligation,
    pub checks: RealizationChecks,
}

/// Default sample set for `realize_phi`: variety points over several interior circles.
pub fn default_samples(p: &BiPoly) -> Result<Vec<(C, C)>> {
    let mut out = vec![];
    for &r in &[0.2, 0.4, 0.6, 0.8, 0.95] {
        out.extend(variety_samples(p, 24, r)?.pairs());
    }
    Ok(out)
}

/// Solves the lurking isometry (z P, Q) -> (P, w Q) over variety samples and builds
/// Phi(z) = D + z C (I - z A)^-1 B from its unitary colligation.
pub fn realize_phi(dv: &DvSos, samples: &[(C, C)]) -> Result<DVRealization> {
    let n = dv.pvec.len();
    let m = dv.qvec.len();
    let k = n + m;
    let s = samples.len();
    let mut x = CMat::zeros(k, s);
    let mut y = CMat::zeros(k, s);
    for (c, &(z, w)) in samples.iter().enumerate() {
        for (i, v) in dv.pvec.eval(z, w).into_iter().enumerate() {
            x[(i, c)] = z * v;
            y[(i, c)] = v;
        }
        for (i, v) in dv.qvec.eval(z, w).into_iter().enumerate() {
            x[(n + i, c)] = v;
            y[(n + i, c)] = w * v;
        }
    }
    let sv = linalg::singular_values(&x);
    let rank = sv.iter().filter(|&&t| t > 1e-9 * sv.first().copied().unwrap_or(0.0)).count();
    if rank < k {
        return Err(Error::RankDeficient(format!(
            "variety samples span {rank} of {k} dimensions; add samples"
        )));
    }
    let u_ls = &y * linalg::pinv(&x, 1e-12);
    let scale = linalg::maxabs(&y).max(f64::MIN_POSITIVE);
    let isometry_residual = linalg::maxabs(&(&u_ls * &x - &y)) / scale;
    if isometry_residual > 1e-6 {
        return Err(Error::Inconsistent(format!(
            "lurking isometry misfit {isometry_residual:e} exceeds 1e-6"
        )));
    }
    let u = linalg::polar_unitary(&u_ls);
    let colligation = Colligation {
        A: u.view((0, 0), (n, n)).into_owned(),
        B: u.view((0, n), (n, m)).into_owned(),
        C: u.view((n, 0), (m, n)).into_owned(),
        D: u.view((n, n), (m, m)).into_owned(),
    };
    let mut r = DVRealization {
        p: dv.p.clone(),
        a: dv.a,
        b: dv.b,
        pvec: dv.pvec.clone(),
        qvec: dv.qvec.clone(),
        qmat: dv.qmat.clone(),
        colligation,
        checks: RealizationChecks {
            isometry_residual,
            unitarity: linalg::maxabs(&(u.adjoint() * &u - CMat::identity(k, k))),
            inner_residual: 0.0,
            eigenvector_residual: 0.0,
            spectral_residual: 0.0,
            max_opnorm_disk: 0.0,
            qmat_min_sv: dv.qmat_min_sv,
            q_zeros: vec![],
            certified: false,
        },
    };
    r.run_checks(samples)?;
    Ok(r)
}

impl DVRealization {
    pub fn n(&self) -> usize {
        self.pvec.len()
    }
    pub fn m(&self) -> usize {
        self.qvec.len()
    }

    /// Phi(z) = D + z C (I - z A)^-1 B.
    pub fn phi(&self, z: C) -> Result<CMat> {
        let g = &self.colligation;
        let n = self.n();
        let lhs = CMat::identity(n, n) - &g.A * z;
        let x = linalg::solve(&lhs, &g.B).ok_or_else(|| Error::Pole(format!("I - zA singular at z = {z}")))?;
        Ok(&g.D + &g.C * x * z)
    }

    /// Unitary [[A, B], [C, D]].
    pub fn unitary(&self) -> CMat {
        let (n, m) = (self.n(), self.m());
        let g = &self.colligation;
        let mut u = CMat::zeros(n + m, n + m);
        u.view_mut((0, 0), (n, n)).copy_from(&g.A);
        u.view_mut((0, n), (n, m)).copy_from(&g.B);
        u.view_mut((n, 0), (m, n)).copy_from(&g.C);
        u.view_mut((n, n), (m, m)).copy_from(&g.D);
        u
    }

    /// Coefficients of det(wI - Phi(z)) as a polynomial with z-degree at most `deg_z`,
    /// interpolated on |z| = 1/2, with the size of the discarded higher z-coefficients.
    pub fn det_pencil(&self, deg_z: usize) -> Result<(BiPoly, f64)> {
        let m = self.m();
        let big = 4 * (deg_z + 1);
        let rad = 0.5;
        let mut vals: Vec<Vec<C>> = Vec::with_capacity(big);
        for i in 0..big {
            let z = C::from_polar(rad, 2.0 * PI * i as f64 / big as f64);
            vals.push(univar::from_roots(&univar::eigenvalues(&self.phi(z)?)));
        }
        let mut tail: f64 = 0.0;
        let mut out = BiPoly::zeros(DegreeBox::new(deg_z, m));
        for j in 0..big {
            for k in 0..=m {
                let s: C = (0..big)
                    .map(|i| vals[i][k] * C::from_polar(1.0, -2.0 * PI * (i * j) as f64 / big as f64))
                    .sum();
                let c = s / big as f64 / rad.powi(j as i32);
                if j <= deg_z {
                    out.set(j, k, c);
                } else {
                    tail = tail.max(c.norm());
                }
            }
        }
        Ok((out, tail))
    }

    fn run_checks(&mut self, samples: &[(C, C)]) -> Result<()> {
        let m = self.m();
        let id = CMat::identity(m, m);
        let mut inner: f64 = 0.0;
        for i in 0..256 {
            let z = C::from_polar(1.0, 2.0 * PI * (i as f64 + 0.5) / 256.0);
            if let Ok(ph) = self.phi(z) {
                inner = inner.max(linalg::maxabs(&(&ph * ph.adjoint() - &id)));
            }
        }
        let mut eig: f64 = 0.0;
        let mut q_zeros = vec![];
        let qscale = self.qvec.entries().iter().map(|q| q.max_abs()).fold(0.0, f64::max);
        for &(z, w) in samples {
            let ph = self.phi(z)?;
            let qv: Vec<C> = self.qvec.eval(z, w);
            let qcol = CMat::from_column_slice(m, 1, &qv);
            eig = eig.max(linalg::maxabs(&(&ph * &qcol - &qcol * w)));
            if qv.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt() <= 1e-8 * qscale.max(1.0) {
                q_zeros.push(VarietyPoint { z, w, multiplicity: 1 });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut spectral: f64 = 0.0;
        for _ in 0..64 {
            let z = disk_point(&mut rng, 0.95);
            let ev = univar::eigenvalues(&self.phi(z)?);
            let roots: Vec<C> = stability::slice_roots(&self.p, z)?
                .into_iter()
                .filter(|w| w.norm() <= 1.0 + VARIETY_TOL)
                .collect();
            spectral = spectral.max(multiset_distance(&ev, &roots));
        }
        let mut opn: f64 = 0.0;
        for _ in 0..128 {
            let z = disk_point(&mut rng, 0.999);
            opn = opn.max(linalg::opnorm(&self.phi(z)?));
        }
        let c = &mut self.checks;
        c.inner_residual = inner;
        c.eigenvector_residual = eig;
        c.spectral_residual = spectral;
        c.max_opnorm_disk = opn;
        c.q_zeros = q_zeros;
        c.certified = c.unitarity <= 1e-9
            && inner <= 1e-8
            && eig <= 1e-8
            && spectral <= 1e-7
            && opn <= 1.0 + 1e-9
            && c.qmat_min_sv > 0.0;
        Ok(())
    }
}

/// Greedy matching distance between two multisets; infinite if the sizes differ.
fn multiset_distance(a: &[C], b: &[C]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|s, t| s.1.partial_cmp(&t.1).unwrap())
            .expect("sizes match");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExtValue {
    #[serde(serialize_with = "ser_c")]
    pub value: C,
    /// ||Q(z)^-1|| sqrt(m) ||Q(z)||.
    pub bound: f64,
    pub condition: f64,
    pub pole_warning: bool,
}

/// F(z,w) = e1^T Q(z)^-1 f(zI, Phi(z)) Q(z,w), which agrees with f on the variety.
#[derive(Clone, Debug)]
pub struct Extension {
    pub f: BiPoly,
    pub realization: DVRealization,
}

pub fn extend(f: &BiPoly, r: &DVRealization) -> Result<Extension> {
    if !r.checks.certified {
        return Err(Error::Precondition("realization is not certified".into()));
    }
    Ok(Extension { f: f.clone(), realization: r.clone() })
}

impl Extension {
    /// f(zI, Phi(z)) by Horner in powers of Phi.
    pub fn f_of_phi(&self, z: C) -> Result<CMat> {
        let ph = self.realization.phi(z)?;
        let m = ph.nrows();
        let id = CMat::identity(m, m);
        let bx = self.f.deg_box();
        let mut acc = CMat::zeros(m, m);
        for k in (0..=bx.m).rev() {
            let ck = (0..=bx.n).rev().fold(C::new(0.0, 0.0), |s, j| s * z + self.f.get(j, k));
            acc = &acc * &ph + &id * ck;
        }
        Ok(acc)
    }

    pub fn bound(&self, z: C) -> Result<(f64, f64)> {
        let q = self.realization.qmat.eval(z);
        let sv = linalg::singular_values(&q);
        let (hi, lo) = (sv[0], *sv.last().expect("m >= 1"));
        let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if cond > POLE_COND {
            return Err(Error::Pole(format!("Q(z) numerically singular at z = {z}, condition {cond:e}")));
        }
        Ok(((self.realization.m() as f64).sqrt() * cond, cond))
    }

    pub fn eval(&self, z: C, w: C) -> Result<ExtValue> {
        let (bound, condition) = self.bound(z)?;
        let q = self.realization.qmat.eval(z);
        let qv = CMat::from_column_slice(self.realization.m(), 1, &self.realization.qvec.eval(z, w));
        let v = self.f_of_phi(z)? * qv;
        let y = linalg::solve(&q, &v).ok_or_else(|| Error::Pole(format!("Q(z) singular at z = {z}")))?;
        Ok(ExtValue { value: y[(0, 0)], bound, condition, pole_warning: condition > POLE_WARN_COND })
    }
}

/// Estimate of sup |f| over V in the closed bidisk from circle samples.
pub fn variety_sup(f: &BiPoly, p: &BiPoly) -> Result<f64> {
    let mut best: f64 = 0.0;
    for &r in &[0.0, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0] {
        for pt in variety_samples(p, 512, r)?.points {
            best = best.max(f.eval(pt.z, pt.w).norm());
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtRow {
    #[serde(serialize_with = "ser_c")]
    pub z: C,
    #[serde(serialize_with = "ser_c")]
    pub w: C,
    #[serde(serialize_with = "ser_c")]
    pub value: C,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionReport {
    pub sup_f: f64,
    /// max |F - f| over interior variety samples.
    pub agreement_residual: f64,
    /// max |F| / (bound sup|f|) over random bidisk points.
    pub max_bound_ratio: f64,
    pub pole_warnings: usize,
    pub rows: Vec<ExtRow>,
}

/// Agreement on `variety` interior variety points and the growth bound at `random`
/// uniformly drawn bidisk points.
pub fn extension_report(ext: &Extension, variety: usize, random: usize, seed: u64) -> Result<ExtensionReport> {
    let p = &ext.realization.p;
    let sup_f = variety_sup(&ext.f, p)?;
    let mut agreement: f64 = 0.0;
    let radii = [0.1, 0.3, 0.5, 0.7, 0.9];
    let per = variety.div_ceil(radii.len() * ext.realization.m()).max(1);
    let mut count = 0;
    'outer: for &r in &radii {
        for pt in variety_samples(p, per, r)?.points {
            if count == variety {
                break 'outer;
            }
            count += 1;
            let v = ext.eval(pt.z, pt.w)?;
            agreement = agreement.max((v.value - ext.f.eval(pt.z, pt.w)).norm());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratio: f64 = 0.0;
    let mut warnings = 0;
    let mut rows = Vec::with_capacity(random);
    for _ in 0..random {
        let z = disk_point(&mut rng, 1.0);
        let w = disk_point(&mut rng, 1.0);
        let v = match ext.eval(z, w) {
            Ok(v) => v,
            Err(Error::Pole(_)) => {
                warnings += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        if v.pole_warning {
            warnings += 1;
        }
        if sup_f > 0.0 {
            ratio = ratio.max(v.value.norm() / (v.bound * sup_f));
        }
        rows.push(ExtRow { z, w, value: v.value, bound: v.bound });
    }
    Ok(ExtensionReport { sup_f, agreement_residual: agreement, max_bound_ratio: ratio, pole_warnings: warnings, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C {
        C::new(x, 0.0)
    }

    /// (z - w)(z^2 - w) = z^3 - zw - z^2 w + w^2.
    fn cusp() -> BiPoly {
        BiPoly::from_real_terms(&[(3, 0, 1.0), (1, 1, -1.0), (2, 1, -1.0), (0, 2, 1.0)])
    }

    #[test]
    fn samples_on_cusp() {
        let s = variety_samples(&cusp(), 1, 0.5).unwrap();
        let mut ws: Vec<f64> = s.points.iter().map(|p| p.w.re).collect();
        ws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(ws.len(), 2);
        assert!((ws[0] - 0.25).abs() < 1e-12 && (ws[1] - 0.5).abs() < 1e-12);
        let s = variety_samples(&cusp(), 1, 1.0).unwrap();
        assert_eq!(s.points.len(), 1);
        assert_eq!(s.points[0].multiplicity, 2);
        assert!((s.points[0].w - c(1.0)).norm() < 1e-6);
        let line = BiPoly::from_real_terms(&[(1, 0, 1.0), (0, 1, -1.0)]);
        for p in variety_samples(&line, 7, 0.8).unwrap().points {
            assert!((p.z - p.w).norm() < 1e-14);
        }
    }

    #[test]
    fn line_variety() {
        let line = BiPoly::from_real_terms(&[(1, 0, 1.0), (0, 1, -1.0)]);
        let dv = dv_sos(&line, 1.0, 1.0, &NumericPolicy::default()).unwrap();
        assert!(dv.identity_residual < 1e-10, "{}", dv.identity_residual);
        assert_eq!(dv.qvec.len(), 1);
        assert!(dv.qvec.entries()[0].support_box(1e-12) == DegreeBox::new(0, 0));
        let r = realize_phi(&dv, &default_samples(&line).unwrap()).unwrap();
        assert!(r.checks.certified, "{:?}", r.checks);
        let z = C::new(0.3, -0.4);
        assert!((r.phi(z).unwrap()[(0, 0)] - z).norm() < 1e-10);
    }

    #[test]
    fn cusp_realization() {
        let p = cusp();
        let dv = dv_sos(&p, 1.0, 1.0, &NumericPolicy::default()).unwrap();
        assert!(dv.identity_residual < 1e-7, "{}", dv.identity_residual);
        assert!(dv.qmat_min_sv > 0.0);
        // the hand-picked eigenvector comes from refl(q_w) alone
        let dv0 = dv_sos(&p, 0.0, 1.0, &NumericPolicy::default()).unwrap();
        assert!(dv0.identity_residual < 1e-7, "{}", dv0.identity_residual);
        let hand_picked = VecBiPoly::with_box(
            vec![
                BiPoly::from_real_terms(&[(0, 1, 2.0), (1, 0, -1.0), (2, 0, -1.0)]),
                BiPoly::from_real_terms(&[(0, 0, 1.0), (1, 0, -1.0)]),
            ],
            dv0.qvec.deg_box(),
        )
        .unwrap();
        let ours = linalg::orth(&dv0.qvec.coef_matrix(), 1e-10);
        let theirs = linalg::orth(&hand_picked.coef_matrix(), 1e-10);
        assert!(linalg::max_principal_angle(&ours, &theirs) < 1e-8);
        let r = realize_phi(&dv, &default_samples(&p).unwrap()).unwrap();
        assert!(r.checks.certified, "{:?}", r.checks);
        let (det, tail) = r.det_pencil(4).unwrap();
        assert!(tail < 1e-8);
        assert!(det.max_diff(&p) < 1e-8, "{det:?}");
        // characteristic polynomial of (1/2)[[z(1+z), z^2(1-z)], [1-z, z(1+z)]]
        let z = C::new(0.3, 0.2);
        let ph = r.phi(z).unwrap();
        let tr = ph[(0, 0)] + ph[(1, 1)];
        let dt = ph[(0, 0)] * ph[(1, 1)] - ph[(0, 1)] * ph[(1, 0)];
        let h = c(0.5);
        let (a, b, cc, d) = (h * z * (1.0 + z), h * z * z * (1.0 - z), h * (1.0 - z), h * z * (1.0 + z));
        assert!((tr - (a + d)).norm() < 1e-10);
        assert!((dt - (a * d - b * cc)).norm() < 1e-10);
    }

    #[test]
    fn cusp_extension() {
        let p = cusp();
        let dv = dv_sos(&p, 1.0, 1.0, &NumericPolicy::default()).unwrap();
        let r = realize_phi(&dv, &default_samples(&p).unwrap()).unwrap();
        let fz = BiPoly::from_real_terms(&[(1, 0, 1.0)]);
        let e = extend(&fz, &r).unwrap();
        let v = e.eval(C::new(0.2, 0.5), C::new(-0.7, 0.1)).unwrap();
        assert!((v.value - C::new(0.2, 0.5)).norm() < 1e-10);
        let fw = BiPoly::from_real_terms(&[(0, 1, 1.0)]);
        let e = extend(&fw, &r).unwrap();
        let rep = extension_report(&e, 500, 1000, 3).unwrap();
        assert!(rep.agreement_residual < 1e-8, "{}", rep.agreement_residual);
        assert!(rep.max_bound_ratio <= 1.0);
        for row in &rep.rows {
            let growth = (1.0 + 16.0 / (c(1.0) - row.z).norm_sqr()).sqrt() * rep.sup_f;
            assert!(row.value.norm() <= growth * (1.0 + 1e-9));
        }
    }
}
