//! Sums-of-squares decomposition
//! q conj(q) - q~ conj(q~) = (1 - z conj Z) <E, E> + (1 - w conj W) <F, F>
//! with invertibility certificates, alignment up to unitaries and a symmetric normal form.

use crate::bipoly::{self, BiPoly, DegreeBox, DetRoots, MatPoly1, Root, RootLocation, Var, VecBiPoly};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::measure::Measure;
use crate::opoly::{MeasureSpace, Perp, Space};
use crate::stability::{self, TorusZero};
use crate::szego::NumericPolicy;
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Circle roots must lie this close to a projection of a torus zero.
pub const ROOT_MATCH_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub det: DetRoots,
    pub pass: bool,
    pub offending_roots: Vec<Root>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SosDecomposition {
    pub q: BiPoly,
    #[serde(rename = "box")]
    pub bx: DegreeBox,
    #[serde(rename = "E")]
    pub e: VecBiPoly,
    #[serde(rename = "F")]
    pub f: VecBiPoly,
    #[serde(rename = "G")]
    pub g: VecBiPoly,
    #[serde(skip)]
    pub e_matrix: MatPoly1,
    #[serde(skip)]
    pub f_matrix: MatPoly1,
    pub e_certificate: Certificate,
    pub f_certificate: Certificate,
    pub identity_residual: f64,
    pub g_residual: f64,
    pub torus_zeros: Vec<TorusZero>,
}

/// Checks the preconditions shared by every decomposition and builds the measure space.
pub fn prepare(q: &BiPoly, bx: DegreeBox, policy: &NumericPolicy) -> Result<(Measure, MeasureSpace, Vec<TorusZero>)> {
    let q = q.with_box(bx)?;
    if q.get(0, 0).norm() == 0.0 {
        return Err(Error::Precondition("q(0,0) = 0".into()));
    }
    let rep = stability::bidisk_stability(&q, stability::DEFAULT_GRID, stability::DEFAULT_TOL)?;
    if !rep.stable_open {
        return Err(Error::Precondition("q has zeros in the open bidisk".into()));
    }
    let gcd = stability::reflection_gcd_check(&q, bx)?;
    if gcd.common_degree > 0 || !rep.atoral {
        return Err(Error::CommonFactor { degree: gcd.common_degree.max(1) });
    }
    let zs = rep.torus_zeros.iter().map(|t| (t.z, t.w)).collect();
    let mut m = Measure::with_zeros(crate::measure::Density::Szego(q.clone()), zs);
    m.quad = policy.quadrature();
    let ms = MeasureSpace::new(&m, bx)?;
    Ok((m, ms, rep.torus_zeros))
}

/// z^n conj(F(1/conj z)) for a matrix polynomial in z of degree <= n.
pub fn reflect_matpoly(f: &MatPoly1, n: usize) -> MatPoly1 {
    let coef = (0..=n)
        .map(|k| {
            if n - k < f.coef.len() {
                f.coef[n - k].map(|x| x.conj())
            } else {
                CMat::zeros(f.rows, f.cols)
            }
        })
        .collect();
    MatPoly1 { rows: f.rows, cols: f.cols, var: f.var, coef }
}

fn certificate(mp: &MatPoly1, allowed: &[C]) -> Result<Certificate> {
    if mp.rows == 0 {
        let det = DetRoots { det: vec![C::new(1.0, 0.0)], roots: vec![] };
        return Ok(Certificate { det, pass: true, offending_roots: vec![] });
    }
    let det = bipoly::matpoly_det_roots(mp, ROOT_MATCH_TOL)?;
    let offending: Vec<Root> = det
        .roots
        .iter()
        .filter(|r| match r.location {
            RootLocation::Disk => true,
            RootLocation::Circle => !allowed.iter().any(|a| (a - r.value).norm() <= ROOT_MATCH_TOL),
            RootLocation::Outside => false,
        })
        .cloned()
        .collect();
    Ok(Certificate { pass: offending.is_empty(), det, offending_roots: offending })
}

fn certificates(e: &VecBiPoly, f: &VecBiPoly, bx: DegreeBox, zeros: &[TorusZero]) -> Result<(MatPoly1, MatPoly1, Certificate, Certificate)> {
    let em = if bx.n > 0 { bipoly::to_matrix_form_cols(e, Var::Z, bx.n)? } else { empty_mat(Var::W) };
    let fm = if bx.m > 0 { bipoly::to_matrix_form_cols(f, Var::W, bx.m)? } else { empty_mat(Var::Z) };
    let pi2: Vec<C> = zeros.iter().map(|t| t.w).collect();
    let pi1: Vec<C> = zeros.iter().map(|t| t.z).collect();
    let ec = if bx.n == 0 { certificate(&empty_mat(Var::W), &pi2)? } else { certificate(&em, &pi2)? };
    let fc = if bx.m == 0 { certificate(&empty_mat(Var::Z), &pi1)? } else { certificate(&reflect_matpoly(&fm, bx.n), &pi1)? };
    Ok((em, fm, ec, fc))
}

fn empty_mat(var: Var) -> MatPoly1 {
    MatPoly1 { rows: 0, cols: 0, var, coef: vec![CMat::zeros(0, 0)] }
}

/// The decomposition of q over the box, built from orthogonal complements under |q|^{-2}.
pub fn decompose(q: &BiPoly, bx: DegreeBox, policy: &NumericPolicy) -> Result<SosDecomposition> {
    let (_, ms, zeros) = prepare(q, bx, policy)?;
    decompose_in(q, &ms, zeros, policy)
}

/// Decomposition from a prepared measure space.
pub fn decompose_in(q: &BiPoly, ms: &MeasureSpace, zeros: Vec<TorusZero>, policy: &NumericPolicy) -> Result<SosDecomposition> {
    let bx = ms.bx;
    let q = q.with_box(bx)?;
    let ey = ms.perp(Perp::RUp);
    let fy = ms.perp(Perp::ULt);
    if ey.ncols() != bx.n || fy.ncols() != bx.m {
        return Err(Error::Structural(format!(
            "complement dimensions ({}, {}) differ from the box ({}, {})",
            ey.ncols(),
            fy.ncols(),
            bx.n,
            bx.m
        )));
    }
    let e = clip(&ms.onb(&ey)?, Space::R);
    let f = clip(&ms.onb(&fy)?, Space::U);
    let g = clip(&ms.onb(&ms.space(Space::Sm))?, Space::Sm);
    let (em, fm, ec, fc) = certificates(&e, &f, bx, &zeros)?;
    let identity_residual = verify_identity(&q, bx, &e, &f, 1000, policy.seed);
    let g_residual = g_identity_residual(bx, &e, &f, &g)?;
    Ok(SosDecomposition {
        q,
        bx,
        e,
        f,
        g,
        e_matrix: em,
        f_matrix: fm,
        e_certificate: ec,
        f_certificate: fc,
        identity_residual,
        g_residual,
        torus_zeros: zeros,
    })
}

/// Zeroes coefficients outside a mask (they are at the level of the mask tolerance).
pub fn clip(v: &VecBiPoly, s: Space) -> VecBiPoly {
    let bx = v.deg_box();
    let entries = v
        .entries()
        .iter()
        .map(|p| BiPoly::from_fn(bx, |j, k| if s.contains(bx, j, k) { p.get(j, k) } else { C::new(0.0, 0.0) }))
        .collect();
    VecBiPoly::with_box(entries, bx).expect("same box")
}

/// Kernel coefficient matrix C C* of a vector polynomial over a box.
pub fn kernel_coefs(v: &VecBiPoly, bx: DegreeBox) -> Result<CMat> {
    let c = VecBiPoly::with_box(v.entries().to_vec(), bx)?.coef_matrix();
    Ok(&c * c.adjoint())
}

/// M - S M S* where S shifts the exponent of z (or w) up by one inside the box.
pub fn times_one_minus(m: &CMat, bx: DegreeBox, var: Var) -> CMat {
    let d = bx.dim();
    let mut s = CMat::zeros(d, d);
    for (j, k) in bx.monomials() {
        let (jj, kk) = match var {
            Var::Z => (j + 1, k),
            Var::W => (j, k + 1),
        };
        if bx.contains(jj, kk) {
            s[(bx.idx(jj, kk), bx.idx(j, k))] = C::new(1.0, 0.0);
        }
    }
    m - &s * m * s.adjoint()
}

fn random_disk_point(rng: &mut ChaCha8Rng) -> C {
    let r: f64 = rng.gen::<f64>().sqrt();
    C::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
}

/// Largest residual of the polarized identity, over random quadruples from the closed
/// bidisk and over all coefficients of the expanded kernels.
pub fn verify_identity(q: &BiPoly, bx: DegreeBox, e: &VecBiPoly, f: &VecBiPoly, samples: usize, seed: u64) -> f64 {
    let s = |v: &VecBiPoly| v.entries().iter().map(|p| p.support_box(0.0)).fold((0, 0), |a, b| (a.0.max(b.n), a.1.max(b.m)));
    let (en, em) = s(e);
    let (fn_, fm) = s(f);
    let big = DegreeBox::new(bx.n.max(en).max(fn_) + 1, bx.m.max(em).max(fm) + 1);
    let qt = match q.reflect(bx) {
        Ok(r) => r,
        Err(_) => return f64::INFINITY,
    };
    let qb = VecBiPoly::with_box(vec![q.clone()], big);
    let qtb = VecBiPoly::with_box(vec![qt.clone()], big);
    let (Ok(qb), Ok(qtb)) = (qb, qtb) else { return f64::INFINITY };
    let lhs = match (kernel_coefs(&qb, big), kernel_coefs(&qtb, big)) {
        (Ok(a), Ok(b)) => a - b,
        _ => return f64::INFINITY,
    };
    let rhs = match (kernel_coefs(e, big), kernel_coefs(f, big)) {
        (Ok(ke), Ok(kf)) => times_one_minus(&ke, big, Var::Z) + times_one_minus(&kf, big, Var::W),
        _ => return f64::INFINITY,
    };
    let coef_res = linalg::maxabs(&(lhs - rhs));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pt_res: f64 = 0.0;
    for _ in 0..samples {
        let (z, w, zz, ww) = (random_disk_point(&mut rng), random_disk_point(&mut rng), random_disk_point(&mut rng), random_disk_point(&mut rng));
        let l = q.eval(z, w) * q.eval(zz, ww).conj() - qt.eval(z, w) * qt.eval(zz, ww).conj();
        let r = (C::new(1.0, 0.0) - z * zz.conj()) * e.kernel(z, w, zz, ww)
            + (C::new(1.0, 0.0) - w * ww.conj()) * f.kernel(z, w, zz, ww);
        pt_res = pt_res.max((l - r).norm());
    }
    coef_res.max(pt_res)
}

fn reflect_at(v: &VecBiPoly, bx: DegreeBox) -> Result<VecBiPoly> {
    VecBiPoly::with_box(v.entries().to_vec(), bx)?.reflect(bx)
}

/// Residual of both quotient identities for G, coefficientwise.
pub fn g_identity_residual(bx: DegreeBox, e: &VecBiPoly, f: &VecBiPoly, g: &VecBiPoly) -> Result<f64> {
    let big = DegreeBox::new(bx.n + 1, bx.m + 1);
    let ke = kernel_coefs(e, big)?;
    let kf = kernel_coefs(f, big)?;
    let kg = kernel_coefs(g, big)?;
    let et = if bx.n > 0 { reflect_at(e, DegreeBox::new(bx.n - 1, bx.m))? } else { VecBiPoly::empty(big) };
    let ft = if bx.m > 0 { reflect_at(f, DegreeBox::new(bx.n, bx.m - 1))? } else { VecBiPoly::empty(big) };
    let ket = kernel_coefs(&et, big)?;
    let kft = kernel_coefs(&ft, big)?;
    let r1 = linalg::maxabs(&(times_one_minus(&kg, big, Var::W) - (&ke - &ket)));
    let r2 = linalg::maxabs(&(times_one_minus(&kg, big, Var::Z) - (&kft - &kf)));
    Ok(r1.max(r2))
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifyResult {
    pub pass: bool,
    pub offending_roots: Vec<Root>,
}

/// Recomputes both determinant certificates.
pub fn certify_invertibility(d: &SosDecomposition) -> Result<CertifyResult> {
    let (_, _, ec, fc) = certificates(&d.e, &d.f, d.bx, &d.torus_zeros)?;
    let mut off = ec.offending_roots.clone();
    off.extend(fc.offending_roots.iter().cloned());
    Ok(CertifyResult { pass: ec.pass && fc.pass, offending_roots: off })
}

#[derive(Clone, Debug)]
pub struct Alignment {
    pub u: CMat,
    pub residual: f64,
}

/// Unitary U with B = U A, when |A|^2 and |B|^2 agree as polarized kernels.
pub fn unitary_align(a: &VecBiPoly, b: &VecBiPoly) -> Result<Alignment> {
    if a.len() != b.len() {
        return Err(Error::Invalid(format!("lengths differ: {} and {}", a.len(), b.len())));
    }
    let n = a.len();
    if n == 0 {
        return Ok(Alignment { u: CMat::zeros(0, 0), residual: 0.0 });
    }
    let bx = DegreeBox::new(a.deg_box().n.max(b.deg_box().n), a.deg_box().m.max(b.deg_box().m));
    let ca = VecBiPoly::with_box(a.entries().to_vec(), bx)?.coef_matrix();
    let cb = VecBiPoly::with_box(b.entries().to_vec(), bx)?.coef_matrix();
    let ka = &ca * ca.adjoint();
    let kb = &cb * cb.adjoint();
    let scale = linalg::maxabs(&ka).max(linalg::maxabs(&kb)).max(1e-300);
    let kd = linalg::maxabs(&(&ka - &kb));
    if kd > 1e-7 * scale {
        return Err(Error::AlignmentFailed(format!("kernels differ by {kd:.3e}")));
    }
    // entries: B_i = sum_j U_ij A_j, i.e. cb = ca U^T
    let ut = linalg::pinv(&ca, 1e-10) * &cb;
    let u = linalg::polar_unitary(&ut.transpose());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut res: f64 = 0.0;
    for _ in 0..200 {
        let (z, w) = (random_disk_point(&mut rng), random_disk_point(&mut rng));
        let av = nalgebra::DVector::from_vec(a.eval(z, w));
        let bv = nalgebra::DVector::from_vec(b.eval(z, w));
        res = res.max((bv - &u * av).iter().map(|x| x.norm()).fold(0.0, f64::max));
    }
    Ok(Alignment { u, residual: res })
}

/// Unitary V with V^T V = U for a symmetric unitary U.
pub fn takagi(u: &CMat) -> Result<CMat> {
    let n = u.nrows();
    if u.ncols() != n {
        return Err(Error::Precondition("matrix is not square".into()));
    }
    if linalg::maxabs(&(u - u.transpose())) > 1e-10 {
        return Err(Error::Precondition("matrix is not symmetric".into()));
    }
    if linalg::maxabs(&(u.adjoint() * u - CMat::identity(n, n))) > 1e-10 {
        return Err(Error::Precondition("matrix is not unitary".into()));
    }
    if linalg::maxabs(&(u - CMat::identity(n, n))) <= 1e-14 {
        return Ok(CMat::identity(n, n));
    }
    let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| u[(i, j)].norm()).fold(0.0, f64::max);
    if off <= 1e-14 {
        return Ok(CMat::from_fn(n, n, |i, j| if i == j { u[(i, i)].sqrt() } else { C::new(0.0, 0.0) }));
    }
    let t = 0.7548776662466927;
    let a = DMatrix::<f64>::from_fn(n, n, |i, j| 0.5 * (u[(i, j)].re + u[(j, i)].re) + t * 0.5 * (u[(i, j)].im + u[(j, i)].im));
    let eig = a.symmetric_eigen();
    let mut o = eig.eigenvectors;
    for mut col in o.column_iter_mut() {
        let imax = (0..n).max_by(|&x, &y| col[x].abs().partial_cmp(&col[y].abs()).unwrap()).unwrap();
        if col[imax] < 0.0 {
            col *= -1.0;
        }
    }
    let oc = o.map(|x| C::new(x, 0.0));
    let d = oc.transpose() * u * &oc;
    let v = CMat::from_fn(n, n, |i, j| d[(i, i)].sqrt() / d[(i, i)].norm().sqrt() * oc[(j, i)]);
    if linalg::maxabs(&(v.transpose() * &v - u)) > 1e-9 {
        return Err(Error::Precondition("eigenvectors failed to diagonalize the matrix".into()));
    }
    Ok(v)
}

/// Symmetric representative of a unitary orbit: E = V E_0 with reflect(E) = E.
fn symmetric_vec(v: &VecBiPoly, rbox: DegreeBox, bx: DegreeBox) -> Result<VecBiPoly> {
    if v.is_empty() {
        return Ok(v.clone());
    }
    let refl = reflect_at(v, rbox)?;
    let refl = VecBiPoly::with_box(refl.entries().to_vec(), bx)?;
    let al = unitary_align(v, &refl).map_err(|e| Error::NotSymmetric(e.to_string()))?;
    if al.residual > 1e-7 {
        return Err(Error::NotSymmetric(format!("alignment residual {:.3e}", al.residual)));
    }
    let asym = linalg::maxabs(&(&al.u - al.u.transpose()));
    if asym > 1e-6 {
        return Err(Error::NotSymmetric(format!("aligning unitary is not symmetric ({asym:.3e})")));
    }
    let us = linalg::polar_unitary(&((&al.u + al.u.transpose()) * C::new(0.5, 0.0)));
    let us = (&us + us.transpose()) * C::new(0.5, 0.0);
    let vv = takagi(&us)?;
    Ok(v.apply(&vv))
}

/// Replaces E and F by unitary images fixed by reflection.
pub fn symmetrize(d: &SosDecomposition) -> Result<SosDecomposition> {
    let bx = d.bx;
    let e = if bx.n > 0 { symmetric_vec(&d.e, DegreeBox::new(bx.n - 1, bx.m), bx)? } else { d.e.clone() };
    let f = if bx.m > 0 { symmetric_vec(&d.f, DegreeBox::new(bx.n, bx.m - 1), bx)? } else { d.f.clone() };
    let (em, fm, ec, fc) = certificates(&e, &f, bx, &d.torus_zeros)?;
    let identity_residual = verify_identity(&d.q, bx, &e, &f, 1000, 0);
    let g_residual = g_identity_residual(bx, &e, &f, &d.g)?;
    Ok(SosDecomposition {
        e,
        f,
        e_matrix: em,
        f_matrix: fm,
        e_certificate: ec,
        f_certificate: fc,
        identity_residual,
        g_residual,
        ..d.clone()
    })
}

/// Largest coefficient deviation of E from its reflection (and F likewise).
pub fn reflection_residual(d: &SosDecomposition) -> Result<f64> {
    let bx = d.bx;
    let mut r: f64 = 0.0;
    if bx.n > 0 {
        let t = reflect_at(&d.e, DegreeBox::new(bx.n - 1, bx.m))?;
        for (a, b) in d.e.entries().iter().zip(t.entries()) {
            r = r.max(a.max_diff(b));
        }
    }
    if bx.m > 0 {
        let t = reflect_at(&d.f, DegreeBox::new(bx.n, bx.m - 1))?;
        for (a, b) in d.f.entries().iter().zip(t.entries()) {
            r = r.max(a.max_diff(b));
        }
    }
    Ok(r)
}

#[derive(Clone, Debug, Serialize)]
pub struct Uniqueness {
    pub unique: bool,
    pub dim_small_box: usize,
}

/// Unique decomposition iff no nonzero square-integrable polynomial fits in (n-1, m-1).
pub fn uniqueness_test(q: &BiPoly, bx: DegreeBox, policy: &NumericPolicy) -> Result<Uniqueness> {
    let q = q.with_box(bx)?;
    let rep = stability::bidisk_stability(&q, stability::DEFAULT_GRID, stability::DEFAULT_TOL)?;
    if !rep.stable_open {
        return Err(Error::Precondition("q has zeros in the open bidisk".into()));
    }
    if !rep.atoral {
        return Err(Error::Precondition("q has infinitely many zeros on the torus".into()));
    }
    if bx.n == 0 || bx.m == 0 {
        return Ok(Uniqueness { unique: true, dim_small_box: 0 });
    }
    let zs = rep.torus_zeros.iter().map(|t| (t.z, t.w)).collect();
    let mut m = Measure::with_zeros(crate::measure::Density::Szego(q), zs);
    m.quad = policy.quadrature();
    let dim = m.member_space(DegreeBox::new(bx.n - 1, bx.m - 1))?.dim();
    Ok(Uniqueness { unique: dim == 0, dim_small_box: dim })
}
