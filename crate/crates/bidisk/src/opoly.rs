//! Subspaces of polynomials over a degree box under a measure: Gram matrices, orthonormal
//! bases, orthogonal complements, reproducing kernels.

use crate::bipoly::{BiPoly, DegreeBox, VecBiPoly};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::measure::{Measure, MemberSpace};
use crate::szego::NumericPolicy;
use num_complex::Complex64 as C;
use serde::Serialize;

/// Rows of the member basis outside a mask are treated as zero below this size.
const MASK_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct SubspaceBasis {
    pub elements: Vec<BiPoly>,
    pub bx: DegreeBox,
    pub measure_tag: String,
}

impl SubspaceBasis {
    pub fn new(elements: Vec<BiPoly>, bx: DegreeBox, measure_tag: impl Into<String>) -> Result<Self> {
        let elements = elements.iter().map(|p| p.with_box(bx)).collect::<Result<Vec<_>>>()?;
        Ok(SubspaceBasis { elements, bx, measure_tag: measure_tag.into() })
    }

    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// Coefficient matrix, one column per element.
    pub fn coef_matrix(&self) -> CMat {
        VecBiPoly::with_box(self.elements.clone(), self.bx).expect("elements fit").coef_matrix()
    }

    pub fn to_vec(&self) -> VecBiPoly {
        VecBiPoly::with_box(self.elements.clone(), self.bx).expect("elements fit")
    }
}

#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub entries: CMat,
    pub error_estimates: nalgebra::DMatrix<f64>,
}

/// Gram matrix <b_i, b_l> of a basis under the measure.
pub fn gram(basis: &SubspaceBasis, measure: &Measure) -> Result<GramMatrix> {
    let cols = basis.coef_matrix();
    match measure.integrate(basis.bx, &cols) {
        Ok(it) => Ok(GramMatrix { entries: linalg::herm(&it.gram), error_estimates: it.err_entries }),
        Err(Error::Divergence(msg)) => {
            for i in 0..cols.ncols() {
                let one = cols.columns(i, 1).into_owned();
                if measure.integrate(basis.bx, &one).is_err() {
                    return Err(Error::NonMember(format!("pair ({i},{i}) diverges: {msg}")));
                }
            }
            Err(Error::NonMember(format!("some pair diverges: {msg}")))
        }
        Err(e) => Err(e),
    }
}

/// Whitening matrix C with C* G C = I, by Cholesky, or by eigen-whitening when the
/// condition number exceeds 1e10.
fn whitener(g: &CMat) -> Result<(CMat, bool)> {
    let k = g.nrows();
    if k == 0 {
        return Ok((CMat::zeros(0, 0), false));
    }
    let (vals, vecs) = linalg::herm_eig(g);
    let top = vals[k - 1];
    let trace: f64 = vals.iter().sum();
    if top <= 0.0 || vals[0] <= 1e-12 * top || vals[0] <= 1e-10 * trace * 1e-2 {
        let null: Vec<usize> = (0..k).filter(|&i| vals[i] <= 1e-10 * trace).collect();
        return Err(Error::RankDeficient(format!(
            "Gram matrix is numerically singular (eigenvalues {:?}); null directions {:?}",
            vals, null
        )));
    }
    if vals[0] < 1e-10 * top {
        let c = CMat::from_fn(k, k, |r, j| vecs[(r, j)] / vals[j].sqrt());
        return Ok((c, true));
    }
    let l = linalg::herm(g).cholesky().ok_or_else(|| Error::RankDeficient("Cholesky failed".into()))?;
    let linv = l.l().solve_lower_triangular(&CMat::identity(k, k)).expect("triangular");
    Ok((linv.adjoint(), false))
}

/// Applies the phase convention: the lexicographically highest coefficient of each
/// element (above 1e-9 relative) is made positive real.
pub fn normalize_phase(v: &VecBiPoly) -> VecBiPoly {
    let mut c = v.coef_matrix();
    linalg::normalize_phases(&mut c, 1e-9);
    VecBiPoly::from_coef_matrix(v.deg_box(), &c)
}

/// Orthonormal combination of `basis` under the Gram matrix `g`.
pub fn orthonormalize(basis: &SubspaceBasis, g: &GramMatrix) -> Result<VecBiPoly> {
    let (w, _) = whitener(&g.entries.transpose())?;
    let c = basis.coef_matrix() * w;
    Ok(normalize_phase(&VecBiPoly::from_coef_matrix(basis.bx, &c)))
}

/// outer minus inner, orthogonally under the measure.
pub fn subspace_complement(inner: &SubspaceBasis, outer: &SubspaceBasis, measure: &Measure) -> Result<SubspaceBasis> {
    let bx = DegreeBox::new(inner.bx.n.max(outer.bx.n), inner.bx.m.max(outer.bx.m));
    let inner_c = VecBiPoly::with_box(inner.elements.clone(), bx)?.coef_matrix();
    let outer_c = VecBiPoly::with_box(outer.elements.clone(), bx)?.coef_matrix();
    let qo = linalg::orth(&outer_c, 1e-10);
    let resid = &inner_c - &qo * (qo.adjoint() * &inner_c);
    let scale = linalg::maxabs(&inner_c).max(1e-300);
    if linalg::maxabs(&resid) > 1e-8 * scale {
        return Err(Error::Structural("inner subspace is not contained in the outer one".into()));
    }
    let ri = linalg::orth(&inner_c, 1e-10).ncols();
    let k = qo.ncols();
    if k == 0 {
        return SubspaceBasis::new(vec![], bx, outer.measure_tag.clone());
    }
    let qi = linalg::orth(&inner_c, 1e-10);
    let mut joint = CMat::zeros(bx.dim(), ri + k);
    joint.columns_mut(0, ri).copy_from(&qi);
    joint.columns_mut(ri, k).copy_from(&qo);
    let g = measure.integrate(bx, &joint).map_err(|e| Error::NonMember(e.to_string()))?.gram;
    let cross = g.view((0, ri), (ri, k)).map(|x| x.conj());
    let (_, _, v) = linalg::full_svd(&cross);
    let null = v.columns(ri.min(k), k - ri.min(k)).into_owned();
    let comp = &qo * null;
    let elements = VecBiPoly::from_coef_matrix(bx, &comp).entries().to_vec();
    SubspaceBasis::new(elements, bx, outer.measure_tag.clone())
}

/// Evaluates K((z,w),(Z,W)) = sum e_j(z,w) conj(e_j(Z,W)).
#[derive(Clone, Debug)]
pub struct KernelEvaluator {
    pub onb: VecBiPoly,
}

impl KernelEvaluator {
    pub fn eval(&self, z: C, w: C, zz: C, ww: C) -> C {
        self.onb.kernel(z, w, zz, ww)
    }
    pub fn diag(&self, z: C, w: C) -> f64 {
        self.onb.norm_sq(z, w)
    }
    /// Coefficient matrix M with K = sum M[a,b] x^a conj(y^b) over the box.
    pub fn coef_matrix(&self) -> CMat {
        let c = self.onb.coef_matrix();
        &c * c.adjoint()
    }
}

pub fn reproducing_kernel(onb: &VecBiPoly) -> KernelEvaluator {
    KernelEvaluator { onb: onb.clone() }
}

/// Named subspaces of the box (n, m), as index masks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    /// everything in the box
    Full,
    /// j <= n-1
    R,
    /// k <= m-1
    U,
    /// j <= n-1, k <= m-1
    Sm,
    /// vanishing at the origin
    Ll,
    /// no z^n w^m term
    Ur,
    /// w times Sm
    WSm,
    /// z times Sm
    ZSm,
    /// w times U
    WU,
    /// z times R
    ZR,
    /// zw times Sm
    ZWSm,
}

impl Space {
    pub fn contains(&self, bx: DegreeBox, j: usize, k: usize) -> bool {
        let (n, m) = (bx.n, bx.m);
        match self {
            Space::Full => true,
            Space::R => j < n,
            Space::U => k < m,
            Space::Sm => j < n && k < m,
            Space::Ll => (j, k) != (0, 0),
            Space::Ur => (j, k) != (n, m),
            Space::WSm => j < n && k >= 1,
            Space::ZSm => j >= 1 && k < m,
            Space::WU => k >= 1,
            Space::ZR => j >= 1,
            Space::ZWSm => j >= 1 && k >= 1,
        }
    }
}

/// Orthogonal complements outer minus inner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Perp {
    /// R minus Sm
    RDn,
    /// R minus w Sm
    RUp,
    /// U minus Sm
    ULt,
    /// U minus z Sm
    URt,
    /// Ur minus U
    UrDn,
    /// Ll minus w U
    LlUp,
    /// Full minus Ll
    Ll,
    /// Full minus Ur
    Ur,
    /// z R minus zw Sm
    LUp,
}

impl Perp {
    pub fn parts(&self) -> (Space, Space) {
        match self {
            Perp::RDn => (Space::R, Space::Sm),
            Perp::RUp => (Space::R, Space::WSm),
            Perp::ULt => (Space::U, Space::Sm),
            Perp::URt => (Space::U, Space::ZSm),
            Perp::UrDn => (Space::Ur, Space::U),
            Perp::LlUp => (Space::Ll, Space::WU),
            Perp::Ll => (Space::Full, Space::Ll),
            Perp::Ur => (Space::Full, Space::Ur),
            Perp::LUp => (Space::ZR, Space::ZWSm),
        }
    }

    pub fn all() -> [Perp; 9] {
        [Perp::RDn, Perp::RUp, Perp::ULt, Perp::URt, Perp::UrDn, Perp::LlUp, Perp::Ll, Perp::Ur, Perp::LUp]
    }

    pub fn parse(s: &str) -> Option<Perp> {
        Some(match s {
            "r_dn" => Perp::RDn,
            "r_up" => Perp::RUp,
            "u_lt" => Perp::ULt,
            "u_rt" => Perp::URt,
            "ur_dn" => Perp::UrDn,
            "ll_up" => Perp::LlUp,
            "ll" => Perp::Ll,
            "ur" => Perp::Ur,
            "l_up" => Perp::LUp,
            _ => return None,
        })
    }
}

impl Space {
    pub fn parse(s: &str) -> Option<Space> {
        Some(match s {
            "full" => Space::Full,
            "r" => Space::R,
            "u" => Space::U,
            "sm" => Space::Sm,
            "ll" => Space::Ll,
            "ur" => Space::Ur,
            "w_sm" => Space::WSm,
            "z_sm" => Space::ZSm,
            "w_u" => Space::WU,
            "z_r" => Space::ZR,
            "zw_sm" => Space::ZWSm,
            _ => return None,
        })
    }
}

/// The square-integrable polynomials of a box with their Gram matrix. Subspaces are
/// represented as column blocks Y in coordinates of the member basis V.
#[derive(Clone, Debug)]
pub struct MeasureSpace {
    pub bx: DegreeBox,
    pub members: MemberSpace,
    /// Metric in member coordinates: <Vx, Vy> = y* gamma x.
    pub gamma: CMat,
    pub gram_error: f64,
    pub quad_nodes: usize,
}

impl MeasureSpace {
    pub fn new(measure: &Measure, bx: DegreeBox) -> Result<Self> {
        let members = measure.member_space(bx)?;
        let it = measure.integrate(bx, &members.basis).map_err(|e| {
            Error::Inconclusive(format!("member subspace of dimension {} failed to integrate: {e}", members.dim()))
        })?;
        Ok(MeasureSpace { bx, members, gamma: linalg::herm(&it.gram).transpose(), gram_error: it.err, quad_nodes: it.nodes })
    }

    /// Space over a box where every polynomial is a member, from the monomial Gram
    /// matrix G[i][l] = <e_i, e_l>.
    pub fn from_gram(bx: DegreeBox, gram: &CMat, gram_error: f64, quad_nodes: usize) -> Self {
        let d = bx.dim();
        let members = crate::measure::MemberSpace { bx, basis: CMat::identity(d, d), growth_exponents: vec![] };
        MeasureSpace { bx, members, gamma: linalg::herm(gram).transpose(), gram_error, quad_nodes }
    }

    pub fn v(&self) -> &CMat {
        &self.members.basis
    }

    pub fn dim(&self) -> usize {
        self.members.dim()
    }

    /// Members supported in a mask.
    pub fn space(&self, s: Space) -> CMat {
        let v = self.v();
        let r = v.ncols();
        let rows: Vec<usize> = self.bx.monomials().enumerate().filter(|(_, (j, k))| !s.contains(self.bx, *j, *k)).map(|(i, _)| i).collect();
        if rows.is_empty() {
            return CMat::identity(r, r);
        }
        let sub = CMat::from_fn(rows.len(), r, |i, c| v[(rows[i], c)]);
        linalg::null_space(&sub, MASK_TOL, 1.0)
    }

    /// outer minus inner (both in member coordinates), orthogonally under the measure.
    pub fn complement(&self, outer: &CMat, inner: &CMat) -> CMat {
        let k = outer.ncols();
        if k == 0 {
            return outer.clone();
        }
        let ri = inner.ncols();
        if ri == 0 {
            return outer.clone();
        }
        let cross = inner.adjoint() * &self.gamma * outer;
        let (_, _, v) = linalg::full_svd(&cross);
        let keep = k - ri.min(k);
        outer * v.columns(k - keep, keep)
    }

    pub fn perp(&self, p: Perp) -> CMat {
        let (o, i) = p.parts();
        self.complement(&self.space(o), &self.space(i))
    }

    /// Gram of a subspace.
    pub fn gram_of(&self, y: &CMat) -> CMat {
        linalg::herm(&(y.adjoint() * &self.gamma * y))
    }

    /// Orthonormal basis (under the measure) of a subspace, phase-normalized.
    pub fn onb(&self, y: &CMat) -> Result<VecBiPoly> {
        if y.ncols() == 0 {
            return Ok(VecBiPoly::empty(self.bx));
        }
        let g = self.gram_of(y);
        let (vals, vecs) = linalg::herm_eig(&g);
        let top = vals.last().copied().unwrap_or(0.0);
        if vals[0] <= 1e-12 * top {
            return Err(Error::RankDeficient(format!("subspace Gram has eigenvalues {:?}", vals)));
        }
        let c = CMat::from_fn(vals.len(), vals.len(), |r, j| vecs[(r, j)] / vals[j].sqrt());
        let coefs = self.v() * y * c;
        Ok(normalize_phase(&VecBiPoly::from_coef_matrix(self.bx, &coefs)))
    }

    /// Coefficient vectors of a subspace basis.
    pub fn coefs(&self, y: &CMat) -> CMat {
        self.v() * y
    }

    pub fn basis(&self, y: &CMat, tag: &str) -> SubspaceBasis {
        let c = self.coefs(y);
        SubspaceBasis {
            elements: VecBiPoly::from_coef_matrix(self.bx, &c).entries().to_vec(),
            bx: self.bx,
            measure_tag: tag.to_string(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsilonReport {
    pub max_abs_on_grid: f64,
    pub dims: EpsilonDims,
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsilonDims {
    pub ur_dn: usize,
    pub r_dn: usize,
    pub ll_up: usize,
    pub l_up: usize,
}

/// 32 points of the closed disk on a polar grid.
pub fn disk_grid32() -> Vec<C> {
    (0..32)
        .map(|i| C::from_polar(((i % 4) + 1) as f64 / 4.0, 2.0 * std::f64::consts::PI * i as f64 / 32.0 + 0.1))
        .collect()
}

/// Discrepancy of the four complement kernels on the diagonal over 32 x 32 points.
pub fn epsilon_discrepancy_space(ms: &MeasureSpace) -> Result<(EpsilonReport, [KernelEvaluator; 4])> {
    let y = [ms.perp(Perp::UrDn), ms.perp(Perp::RDn), ms.perp(Perp::LlUp), ms.perp(Perp::LUp)];
    let dims = EpsilonDims { ur_dn: y[0].ncols(), r_dn: y[1].ncols(), ll_up: y[2].ncols(), l_up: y[3].ncols() };
    let k: Vec<KernelEvaluator> = y.iter().map(|yy| ms.onb(yy).map(|o| reproducing_kernel(&o))).collect::<Result<_>>()?;
    let pts = disk_grid32();
    let mut mx: f64 = 0.0;
    for &z in &pts {
        for &w in &pts {
            let e = (k[0].diag(z, w) - k[1].diag(z, w)) - (k[2].diag(z, w) - k[3].diag(z, w));
            mx = mx.max(e.abs());
        }
    }
    let k: [KernelEvaluator; 4] = k.try_into().expect("four kernels");
    Ok((EpsilonReport { max_abs_on_grid: mx, dims }, k))
}

/// Builds the measure of q, checks preconditions and evaluates the discrepancy.
pub fn epsilon_discrepancy(q: &BiPoly, bx: DegreeBox, policy: &NumericPolicy) -> Result<EpsilonReport> {
    let ms = crate::sos::prepare(q, bx, policy)?.1;
    Ok(epsilon_discrepancy_space(&ms)?.0)
}
