//! Two-variable polynomials with a declared degree box, vector polynomials,
//! and one-variable matrix polynomials.

use crate::error::{Error, Result};
use crate::univar;
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

const ZERO: C = C { re: 0.0, im: 0.0 };

/// Tolerance for support equality of coefficients.
pub const EQ_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DegreeBox {
    pub n: usize,
    pub m: usize,
}

impl DegreeBox {
    pub fn new(n: usize, m: usize) -> Self {
        DegreeBox { n, m }
    }
    /// Number of monomials z^j w^k with j <= n, k <= m.
    pub fn dim(&self) -> usize {
        (self.n + 1) * (self.m + 1)
    }
    /// Flat index of z^j w^k.
    pub fn idx(&self, j: usize, k: usize) -> usize {
        j * (self.m + 1) + k
    }
    pub fn contains(&self, j: usize, k: usize) -> bool {
        j <= self.n && k <= self.m
    }
    /// All exponent pairs, in flat index order.
    pub fn monomials(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let m = self.m;
        (0..=self.n).flat_map(move |j| (0..=m).map(move |k| (j, k)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    Z,
    W,
}

/// Dense polynomial `sum coef[j][k] z^j w^k` over a declared box.
#[derive(Clone)]
pub struct BiPoly {
    bx: DegreeBox,
    coef: Vec<C>,
}

impl BiPoly {
    pub fn zeros(bx: DegreeBox) -> Self {
        BiPoly { bx, coef: vec![ZERO; bx.dim()] }
    }

    pub fn constant(c: C) -> Self {
        BiPoly { bx: DegreeBox::new(0, 0), coef: vec![c] }
    }

    pub fn from_fn(bx: DegreeBox, mut f: impl FnMut(usize, usize) -> C) -> Self {
        let coef = bx.monomials().map(|(j, k)| f(j, k)).collect();
        BiPoly { bx, coef }
    }

    /// Builds from a row-major grid; all rows must have equal length.
    pub fn from_grid(grid: Vec<Vec<C>>) -> Result<Self> {
        if grid.is_empty() || grid[0].is_empty() {
            return Err(Error::Invalid("empty coefficient grid".into()));
        }
        let cols = grid[0].len();
        if grid.iter().any(|r| r.len() != cols) {
            return Err(Error::Invalid("ragged coefficient grid".into()));
        }
        let bx = DegreeBox::new(grid.len() - 1, cols - 1);
        Ok(BiPoly { bx, coef: grid.into_iter().flatten().collect() })
    }

    /// Builds from (j, k, c) terms; the box is the smallest one holding them.
    pub fn from_terms(terms: &[(usize, usize, C)]) -> Self {
        let n = terms.iter().map(|t| t.0).max().unwrap_or(0);
        let m = terms.iter().map(|t| t.1).max().unwrap_or(0);
        let mut p = BiPoly::zeros(DegreeBox::new(n, m));
        for &(j, k, c) in terms {
            p.coef[p.bx.idx(j, k)] += c;
        }
        p
    }

    /// Real-coefficient shorthand for `from_terms`.
    pub fn from_real_terms(terms: &[(usize, usize, f64)]) -> Self {
        let t: Vec<_> = terms.iter().map(|&(j, k, c)| (j, k, C::new(c, 0.0))).collect();
        Self::from_terms(&t)
    }

    /// Coefficients in flat box order.
    pub fn from_flat(bx: DegreeBox, coef: Vec<C>) -> Self {
        assert_eq!(coef.len(), bx.dim());
        BiPoly { bx, coef }
    }

    pub fn deg_box(&self) -> DegreeBox {
        self.bx
    }
    pub fn deg_z(&self) -> usize {
        self.bx.n
    }
    pub fn deg_w(&self) -> usize {
        self.bx.m
    }
    pub fn coefs(&self) -> &[C] {
        &self.coef
    }

    /// Coefficient of z^j w^k, zero outside the box.
    pub fn get(&self, j: usize, k: usize) -> C {
        if self.bx.contains(j, k) {
            self.coef[self.bx.idx(j, k)]
        } else {
            ZERO
        }
    }

    pub fn set(&mut self, j: usize, k: usize, c: C) {
        let i = self.bx.idx(j, k);
        self.coef[i] = c;
    }

    pub fn max_abs(&self) -> f64 {
        self.coef.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.coef.iter().all(|c| c.norm() <= tol)
    }

    /// Smallest box containing every coefficient of modulus above `tol`.
    pub fn support_box(&self, tol: f64) -> DegreeBox {
        let mut n = 0;
        let mut m = 0;
        for (j, k) in self.bx.monomials() {
            if self.coef[self.bx.idx(j, k)].norm() > tol {
                n = n.max(j);
                m = m.max(k);
            }
        }
        DegreeBox::new(n, m)
    }

    /// Re-declares the box, padding with zeros; fails if nonzero support would be cut.
    pub fn with_box(&self, bx: DegreeBox) -> Result<Self> {
        let s = self.support_box(0.0);
        if !self.is_zero(0.0) && (s.n > bx.n || s.m > bx.m) {
            return Err(Error::DegreeBox { dz: s.n, dw: s.m, n: bx.n, m: bx.m });
        }
        Ok(BiPoly::from_fn(bx, |j, k| self.get(j, k)))
    }

    /// Drops declared padding.
    pub fn trimmed(&self) -> Self {
        BiPoly::from_fn(self.support_box(0.0), |j, k| self.get(j, k))
    }

    pub fn eval(&self, z: C, w: C) -> C {
        let mut acc = ZERO;
        for j in (0..=self.bx.n).rev() {
            let row = &self.coef[self.bx.idx(j, 0)..=self.bx.idx(j, self.bx.m)];
            acc = acc * z + univar::horner(row, w);
        }
        acc
    }

    /// Coefficients of w -> p(z0, w).
    pub fn slice_z(&self, z0: C) -> Vec<C> {
        (0..=self.bx.m)
            .map(|k| {
                let mut acc = ZERO;
                for j in (0..=self.bx.n).rev() {
                    acc = acc * z0 + self.get(j, k);
                }
                acc
            })
            .collect()
    }

    /// Coefficients of z -> p(z, w0).
    pub fn slice_w(&self, w0: C) -> Vec<C> {
        (0..=self.bx.n)
            .map(|j| {
                let row = &self.coef[self.bx.idx(j, 0)..=self.bx.idx(j, self.bx.m)];
                univar::horner(row, w0)
            })
            .collect()
    }

    /// z^n w^m conj(p(1/conj z, 1/conj w)) for the given box.
    pub fn reflect(&self, bx: DegreeBox) -> Result<Self> {
        let s = self.support_box(0.0);
        if !self.is_zero(0.0) && (s.n > bx.n || s.m > bx.m) {
            return Err(Error::DegreeBox { dz: s.n, dw: s.m, n: bx.n, m: bx.m });
        }
        Ok(BiPoly::from_fn(bx, |j, k| self.get(bx.n - j, bx.m - k).conj()))
    }

    /// Reflection at the declared box.
    pub fn reflect_own(&self) -> Self {
        self.reflect(self.bx).expect("own box always fits")
    }

    pub fn add(&self, other: &BiPoly) -> BiPoly {
        let bx = DegreeBox::new(self.bx.n.max(other.bx.n), self.bx.m.max(other.bx.m));
        BiPoly::from_fn(bx, |j, k| self.get(j, k) + other.get(j, k))
    }

    pub fn sub(&self, other: &BiPoly) -> BiPoly {
        let bx = DegreeBox::new(self.bx.n.max(other.bx.n), self.bx.m.max(other.bx.m));
        BiPoly::from_fn(bx, |j, k| self.get(j, k) - other.get(j, k))
    }

    pub fn mul(&self, other: &BiPoly) -> BiPoly {
        let bx = DegreeBox::new(self.bx.n + other.bx.n, self.bx.m + other.bx.m);
        let mut out = BiPoly::zeros(bx);
        for (j, k) in self.bx.monomials() {
            let a = self.get(j, k);
            if a == ZERO {
                continue;
            }
            for (jj, kk) in other.bx.monomials() {
                let i = bx.idx(j + jj, k + kk);
                out.coef[i] += a * other.get(jj, kk);
            }
        }
        out
    }

    pub fn scale(&self, c: C) -> BiPoly {
        BiPoly { bx: self.bx, coef: self.coef.iter().map(|&a| a * c).collect() }
    }

    /// Coefficientwise complex conjugate (not the reflection).
    pub fn conj_coefs(&self) -> BiPoly {
        BiPoly { bx: self.bx, coef: self.coef.iter().map(|a| a.conj()).collect() }
    }

    /// Formal partial derivative; the box shrinks by one in `var` (floor 0).
    pub fn differentiate(&self, var: Var) -> BiPoly {
        match var {
            Var::Z => {
                let bx = DegreeBox::new(self.bx.n.saturating_sub(1), self.bx.m);
                BiPoly::from_fn(bx, |j, k| self.get(j + 1, k) * (j + 1) as f64)
            }
            Var::W => {
                let bx = DegreeBox::new(self.bx.n, self.bx.m.saturating_sub(1));
                BiPoly::from_fn(bx, |j, k| self.get(j, k + 1) * (k + 1) as f64)
            }
        }
    }

    /// p(z^a w^b, z^c w^d).
    pub fn compose_monomial(&self, a: (usize, usize), b: (usize, usize)) -> BiPoly {
        let mut terms = Vec::new();
        for (j, k) in self.bx.monomials() {
            let c = self.get(j, k);
            if c != ZERO {
                terms.push((a.0 * j + b.0 * k, a.1 * j + b.1 * k, c));
            }
        }
        if terms.is_empty() {
            return BiPoly::constant(ZERO);
        }
        BiPoly::from_terms(&terms)
    }

    /// Support equality with absolute coefficient tolerance.
    pub fn approx_eq(&self, other: &BiPoly, tol: f64) -> bool {
        let n = self.bx.n.max(other.bx.n);
        let m = self.bx.m.max(other.bx.m);
        DegreeBox::new(n, m)
            .monomials()
            .all(|(j, k)| (self.get(j, k) - other.get(j, k)).norm() <= tol)
    }

    /// Largest coefficient deviation, over the union of boxes.
    pub fn max_diff(&self, other: &BiPoly) -> f64 {
        let bx = DegreeBox::new(self.bx.n.max(other.bx.n), self.bx.m.max(other.bx.m));
        bx.monomials()
            .map(|(j, k)| (self.get(j, k) - other.get(j, k)).norm())
            .fold(0.0, f64::max)
    }

    /// Sum of squared coefficient moduli.
    pub fn coef_norm_sq(&self) -> f64 {
        self.coef.iter().map(|c| c.norm_sqr()).sum()
    }
}

impl PartialEq for BiPoly {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other, EQ_TOL)
    }
}

impl fmt::Debug for BiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BiPoly[{}x{}](", self.bx.n, self.bx.m)?;
        let mut first = true;
        for (j, k) in self.bx.monomials() {
            let c = self.get(j, k);
            if c.norm() > 0.0 {
                if !first {
                    write!(f, " + ")?;
                }
                first = false;
                write!(f, "({:.6}{:+.6}i)z^{}w^{}", c.re, c.im, j, k)?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

/// A float that serializes integral values as integers and -0 as 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let x = self.0;
        if x == 0.0 {
            s.serialize_i64(0)
        } else if x.fract() == 0.0 && x.abs() < 9.0e15 {
            s.serialize_i64(x as i64)
        } else {
            s.serialize_f64(x)
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        f64::deserialize(d).map(Num)
    }
}

/// Complex number as a `[re, im]` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CPair(pub Num, pub Num);

impl From<C> for CPair {
    fn from(c: C) -> Self {
        CPair(Num(c.re), Num(c.im))
    }
}
impl From<CPair> for C {
    fn from(p: CPair) -> Self {
        C::new(p.0 .0, p.1 .0)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BiPolyRepr {
    coef: Vec<Vec<CPair>>,
    deg: [usize; 2],
}

impl Serialize for BiPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let coef = (0..=self.bx.n)
            .map(|j| (0..=self.bx.m).map(|k| self.get(j, k).into()).collect())
            .collect();
        BiPolyRepr { coef, deg: [self.bx.n, self.bx.m] }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BiPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = BiPolyRepr::deserialize(d)?;
        if r.coef.len() != r.deg[0] + 1 || r.coef.iter().any(|row| row.len() != r.deg[1] + 1) {
            return Err(D::Error::custom(format!(
                "coefficient grid does not match declared degree {:?}",
                r.deg
            )));
        }
        let grid = r.coef.into_iter().map(|row| row.into_iter().map(C::from).collect()).collect();
        BiPoly::from_grid(grid).map_err(D::Error::custom)
    }
}

/// Vector of polynomials sharing one declared box.
#[derive(Clone, Debug, PartialEq)]
pub struct VecBiPoly {
    entries: Vec<BiPoly>,
    bx: DegreeBox,
}

impl VecBiPoly {
    /// Pads every entry to the common (largest) box.
    pub fn new(entries: Vec<BiPoly>) -> Self {
        let n = entries.iter().map(|p| p.bx.n).max().unwrap_or(0);
        let m = entries.iter().map(|p| p.bx.m).max().unwrap_or(0);
        Self::with_box(entries, DegreeBox::new(n, m)).expect("common box holds all entries")
    }

    pub fn with_box(entries: Vec<BiPoly>, bx: DegreeBox) -> Result<Self> {
        let entries = entries.iter().map(|p| p.with_box(bx)).collect::<Result<Vec<_>>>()?;
        Ok(VecBiPoly { entries, bx })
    }

    pub fn empty(bx: DegreeBox) -> Self {
        VecBiPoly { entries: vec![], bx }
    }

    pub fn entries(&self) -> &[BiPoly] {
        &self.entries
    }
    pub fn len(&self) -> usize {
        self.entries.len()
    }
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
    pub fn deg_box(&self) -> DegreeBox {
        self.bx
    }

    pub fn eval(&self, z: C, w: C) -> Vec<C> {
        self.entries.iter().map(|p| p.eval(z, w)).collect()
    }

    /// |V(z,w)|^2.
    pub fn norm_sq(&self, z: C, w: C) -> f64 {
        self.entries.iter().map(|p| p.eval(z, w).norm_sqr()).sum()
    }

    /// Sum over entries of V_i(z,w) conj(V_i(Z,W)).
    pub fn kernel(&self, z: C, w: C, zz: C, ww: C) -> C {
        self.entries.iter().map(|p| p.eval(z, w) * p.eval(zz, ww).conj()).sum()
    }

    /// Entrywise reflection at a box.
    pub fn reflect(&self, bx: DegreeBox) -> Result<Self> {
        let e = self.entries.iter().map(|p| p.reflect(bx)).collect::<Result<Vec<_>>>()?;
        Ok(VecBiPoly { entries: e, bx })
    }

    /// Applies a constant matrix: (M V)_i = sum_j M[i,j] V_j.
    pub fn apply(&self, mat: &DMatrix<C>) -> Self {
        assert_eq!(mat.ncols(), self.len());
        let d = self.bx.dim();
        let entries = (0..mat.nrows())
            .map(|i| {
                let mut c = vec![ZERO; d];
                for (j, p) in self.entries.iter().enumerate() {
                    let a = mat[(i, j)];
                    for (t, x) in c.iter_mut().enumerate() {
                        *x += a * p.coef[t];
                    }
                }
                BiPoly::from_flat(self.bx, c)
            })
            .collect();
        VecBiPoly { entries, bx: self.bx }
    }

    /// Coefficients as a D x N matrix in flat box order, one column per entry.
    pub fn coef_matrix(&self) -> DMatrix<C> {
        let d = self.bx.dim();
        DMatrix::from_fn(d, self.len(), |i, j| self.entries[j].coef[i])
    }

    pub fn from_coef_matrix(bx: DegreeBox, m: &DMatrix<C>) -> Self {
        assert_eq!(m.nrows(), bx.dim());
        let entries = (0..m.ncols())
            .map(|j| BiPoly::from_flat(bx, m.column(j).iter().copied().collect()))
            .collect();
        VecBiPoly { entries, bx }
    }
}

impl Serialize for VecBiPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries.serialize(s)
    }
}

impl<'de> Deserialize<'de> for VecBiPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let e = Vec::<BiPoly>::deserialize(d)?;
        Ok(VecBiPoly::new(e))
    }
}

/// Matrix polynomial `sum coef[d] x^d` in one variable.
#[derive(Clone, Debug)]
pub struct MatPoly1 {
    pub rows: usize,
    pub cols: usize,
    pub var: Var,
    pub coef: Vec<DMatrix<C>>,
}

impl MatPoly1 {
    pub fn degree(&self) -> usize {
        self.coef.len().saturating_sub(1)
    }

    pub fn eval(&self, x: C) -> DMatrix<C> {
        let mut acc = DMatrix::zeros(self.rows, self.cols);
        for c in self.coef.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn constant(m: DMatrix<C>, var: Var) -> Self {
        MatPoly1 { rows: m.nrows(), cols: m.ncols(), var, coef: vec![m] }
    }

    /// Entry (i, j) as a coefficient list.
    pub fn entry(&self, i: usize, j: usize) -> Vec<C> {
        self.coef.iter().map(|c| c[(i, j)]).collect()
    }
}

/// Matrix form of V. Organized by z: V(z,w) = E(w) Lambda(z) with one column per power
/// of z, so the result is a polynomial in w (and symmetrically for w).
pub fn to_matrix_form(v: &VecBiPoly, organize_by: Var) -> MatPoly1 {
    let bx = v.deg_box();
    let ncols = match organize_by {
        Var::Z => bx.n + 1,
        Var::W => bx.m + 1,
    };
    to_matrix_form_cols(v, organize_by, ncols).expect("declared box always fits")
}

/// As `to_matrix_form` with an explicit number of columns; fails if some entry has
/// degree >= `ncols` in the organizing variable.
pub fn to_matrix_form_cols(v: &VecBiPoly, organize_by: Var, ncols: usize) -> Result<MatPoly1> {
    let bx = v.deg_box();
    let rows = v.len();
    let (deg_org, deg_other, var) = match organize_by {
        Var::Z => (bx.n, bx.m, Var::W),
        Var::W => (bx.m, bx.n, Var::Z),
    };
    let mut found = 0;
    for p in v.entries() {
        let s = p.support_box(0.0);
        let d = if organize_by == Var::Z { s.n } else { s.m };
        if !p.is_zero(0.0) {
            found = found.max(d);
        }
    }
    if ncols == 0 || found >= ncols {
        return Err(Error::Degree { found, allowed: ncols.saturating_sub(1) });
    }
    let _ = deg_org;
    let coef = (0..=deg_other)
        .map(|d| {
            DMatrix::from_fn(rows, ncols, |i, c| match organize_by {
                Var::Z => v.entries()[i].get(c, d),
                Var::W => v.entries()[i].get(d, c),
            })
        })
        .collect();
    Ok(MatPoly1 { rows, cols: ncols, var, coef })
}

/// Inverse of `to_matrix_form`: multiplies by the column of powers of the organizing variable.
pub fn from_matrix_form(mp: &MatPoly1) -> VecBiPoly {
    let deg = mp.degree();
    let bx = match mp.var {
        Var::W => DegreeBox::new(mp.cols - 1, deg),
        Var::Z => DegreeBox::new(deg, mp.cols - 1),
    };
    let entries = (0..mp.rows)
        .map(|i| {
            BiPoly::from_fn(bx, |j, k| match mp.var {
                Var::W => mp.coef[k][(i, j)],
                Var::Z => mp.coef[j][(i, k)],
            })
        })
        .collect();
    VecBiPoly { entries, bx }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootLocation {
    Disk,
    Circle,
    Outside,
}

#[derive(Clone, Debug, Serialize)]
pub struct Root {
    #[serde(serialize_with = "ser_c")]
    pub value: C,
    pub multiplicity: usize,
    pub location: RootLocation,
}

#[derive(Clone, Debug, Serialize)]
pub struct DetRoots {
    /// Ascending coefficients of the determinant.
    #[serde(serialize_with = "ser_cvec")]
    pub det: Vec<C>,
    pub roots: Vec<Root>,
}

pub(crate) fn ser_c<S: Serializer>(c: &C, s: S) -> std::result::Result<S::Ok, S::Error> {
    CPair::from(*c).serialize(s)
}

pub(crate) fn ser_cvec<S: Serializer>(c: &[C], s: S) -> std::result::Result<S::Ok, S::Error> {
    c.iter().map(|&x| CPair::from(x)).collect::<Vec<_>>().serialize(s)
}

pub(crate) fn ser_cmat<S: Serializer>(a: &DMatrix<C>, s: S) -> std::result::Result<S::Ok, S::Error> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| CPair::from(a[(i, j)])).collect::<Vec<_>>())
        .collect::<Vec<_>>()
        .serialize(s)
}

/// Determinant of a square matrix polynomial by interpolation at roots of unity, with its
/// roots clustered at radius 1e-6 and classified against the unit circle with `tol`.
pub fn matpoly_det_roots(mp: &MatPoly1, tol: f64) -> Result<DetRoots> {
    if mp.rows != mp.cols {
        return Err(Error::Invalid(format!("matrix polynomial is {}x{}", mp.rows, mp.cols)));
    }
    let k = mp.degree() * mp.rows + 1;
    let samples: Vec<C> = (0..k)
        .map(|i| {
            let x = C::from_polar(1.0, 2.0 * std::f64::consts::PI * i as f64 / k as f64);
            let m = mp.eval(x);
            if m.nrows() == 0 {
                C::new(1.0, 0.0)
            } else {
                m.lu().determinant()
            }
        })
        .collect();
    let mut det: Vec<C> = (0..k)
        .map(|d| {
            let s: C = samples
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    v * C::from_polar(1.0, -2.0 * std::f64::consts::PI * (i * d) as f64 / k as f64)
                })
                .sum();
            s / k as f64
        })
        .collect();
    let mx = det.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let scale = mp.coef.iter().map(|c| c.iter().map(|x| x.norm()).fold(0.0, f64::max)).fold(0.0, f64::max);
    if mx <= 1e-13 * scale.max(1.0).powi(mp.rows as i32) {
        return Err(Error::SingularPencil);
    }
    for c in det.iter_mut() {
        if c.norm() <= 1e-12 * mx {
            *c = ZERO;
        }
    }
    while det.len() > 1 && det.last().map_or(false, |c| *c == ZERO) {
        det.pop();
    }
    let rs = univar::roots(&det);
    let roots = univar::cluster(&rs, 1e-6)
        .into_iter()
        .map(|(value, multiplicity)| {
            let r = value.norm();
            let location = if (r - 1.0).abs() <= tol {
                RootLocation::Circle
            } else if r < 1.0 {
                RootLocation::Disk
            } else {
                RootLocation::Outside
            };
            Root { value, multiplicity, location }
        })
        .collect();
    Ok(DetRoots { det, roots })
}

/// Cofactor-expansion determinant of a matrix polynomial (small sizes only).
pub fn matpoly_det_cofactor(mp: &MatPoly1) -> Vec<C> {
    fn rec(ents: &[Vec<Vec<C>>], rows: &[usize], cols: &[usize]) -> Vec<C> {
        if rows.len() == 1 {
            return ents[rows[0]][cols[0]].clone();
        }
        let mut acc: Vec<C> = vec![ZERO];
        let r = rows[0];
        for (ci, &c) in cols.iter().enumerate() {
            let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
            let minor = rec(ents, &rows[1..], &sub_cols);
            let term = univar::mul(&ents[r][c], &minor);
            let sign = if ci % 2 == 0 { 1.0 } else { -1.0 };
            if acc.len() < term.len() {
                acc.resize(term.len(), ZERO);
            }
            for (i, t) in term.into_iter().enumerate() {
                acc[i] += t * sign;
            }
        }
        acc
    }
    let ents: Vec<Vec<Vec<C>>> =
        (0..mp.rows).map(|i| (0..mp.cols).map(|j| mp.entry(i, j)).collect()).collect();
    let rows: Vec<usize> = (0..mp.rows).collect();
    let cols: Vec<usize> = (0..mp.cols).collect();
    if mp.rows == 0 {
        return vec![C::new(1.0, 0.0)];
    }
    rec(&ents, &rows, &cols)
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
    fn evaluate_examples() {
        assert_eq!(q0().eval(c(0.0), c(0.0)), c(2.0));
        assert!(q0().eval(c(1.0), c(1.0)).norm() < 1e-15);
        let p = BiPoly::from_real_terms(&[(0, 2, 1.0), (1, 1, -1.0), (2, 1, -1.0), (3, 0, 1.0)]);
        assert!(p.eval(c(0.5), c(0.25)).norm() < 1e-15);
    }

    #[test]
    fn reflect_examples() {
        let r = q0().reflect(DegreeBox::new(1, 1)).unwrap();
        let want = BiPoly::from_real_terms(&[(1, 1, 2.0), (0, 1, -1.0), (1, 0, -1.0)]);
        assert_eq!(r, want);
        let f = BiPoly::from_real_terms(&[(0, 0, 2.0), (1, 1, -1.0), (2, 1, -1.0)]);
        let r = f.reflect(DegreeBox::new(3, 2)).unwrap();
        let want = BiPoly::from_real_terms(&[(3, 2, 2.0), (2, 1, -1.0), (1, 1, -1.0)]);
        assert_eq!(r, want);
        let k = BiPoly::constant(C::new(1.0, 2.0));
        assert_eq!(k.reflect(DegreeBox::new(0, 0)).unwrap(), BiPoly::constant(C::new(1.0, -2.0)));
        assert!(matches!(q0().reflect(DegreeBox::new(0, 1)), Err(Error::DegreeBox { .. })));
    }

    #[test]
    fn padding_does_not_affect_equality() {
        let p = q0().with_box(DegreeBox::new(4, 3)).unwrap();
        assert_eq!(p, q0());
        assert_eq!(p.trimmed().deg_box(), DegreeBox::new(1, 1));
    }

    #[test]
    fn ring_examples() {
        let a = BiPoly::from_real_terms(&[(1, 0, 1.0), (0, 1, -1.0)]);
        let b = BiPoly::from_real_terms(&[(2, 0, 1.0), (0, 1, -1.0)]);
        let want = BiPoly::from_real_terms(&[(3, 0, 1.0), (1, 1, -1.0), (2, 1, -1.0), (0, 2, 1.0)]);
        assert_eq!(a.mul(&b), want);
        assert_eq!(a.add(&BiPoly::constant(c(0.0))), a);
        assert_eq!(a.scale(c(2.0)).sub(&a), a);
    }

    #[test]
    fn differentiate_examples() {
        let p = BiPoly::from_real_terms(&[(3, 0, 1.0), (1, 1, -1.0), (2, 1, -1.0), (0, 2, 1.0)]);
        let want = BiPoly::from_real_terms(&[(1, 0, -1.0), (2, 0, -1.0), (0, 1, 2.0)]);
        assert_eq!(p.differentiate(Var::W), want);
        assert!(BiPoly::constant(c(3.0)).differentiate(Var::Z).is_zero(0.0));
        let q = BiPoly::from_real_terms(&[(3, 2, 1.0), (2, 1, -1.0), (1, 1, -1.0), (0, 0, 1.0)]);
        let want = BiPoly::from_real_terms(&[(3, 1, 2.0), (2, 0, -1.0), (1, 0, -1.0)]);
        assert_eq!(q.differentiate(Var::W), want);
    }

    #[test]
    fn matrix_form_variety_example() {
        let v = VecBiPoly::new(vec![
            BiPoly::from_real_terms(&[(0, 1, 2.0), (1, 0, -1.0), (2, 0, -1.0)]),
            BiPoly::from_real_terms(&[(0, 0, 1.0), (1, 0, -1.0)]),
        ]);
        let q = to_matrix_form(&v, Var::W);
        assert_eq!(q.var, Var::Z);
        assert_eq!((q.rows, q.cols), (2, 2));
        let x = C::new(0.3, -0.7);
        let m = q.eval(x);
        assert!((m[(0, 0)] - (-x - x * x)).norm() < 1e-15);
        assert!((m[(0, 1)] - c(2.0)).norm() < 1e-15);
        assert!((m[(1, 0)] - (c(1.0) - x)).norm() < 1e-15);
        assert!(m[(1, 1)].norm() < 1e-15);
        let back = from_matrix_form(&q);
        assert_eq!(back, v);
    }

    fn second_e() -> VecBiPoly {
        let s = 2f64.sqrt();
        VecBiPoly::new(vec![
            BiPoly::from_real_terms(&[(1, 0, s), (2, 1, -s)]),
            BiPoly::from_real_terms(&[(1, 0, 1.0), (2, 0, -1.0)]),
            BiPoly::from_real_terms(&[(0, 0, 2.0), (1, 1, -1.0), (2, 1, -1.0)]),
        ])
    }

    #[test]
    fn determinant_examples() {
        let m = to_matrix_form_cols(&second_e(), Var::Z, 3).unwrap();
        let d = matpoly_det_roots(&m, 1e-9).unwrap();
        let s = 2f64.sqrt();
        assert!((d.det[0] + c(2.0 * s)).norm() < 1e-12);
        assert!((d.det[1] - c(2.0 * s)).norm() < 1e-12);
        assert_eq!(d.roots.len(), 1);
        assert!((d.roots[0].value - c(1.0)).norm() < 1e-10);
        assert_eq!(d.roots[0].location, RootLocation::Circle);

        let id = MatPoly1::constant(DMatrix::identity(3, 3), Var::W);
        let d = matpoly_det_roots(&id, 1e-9).unwrap();
        assert_eq!(d.det.len(), 1);
        assert!(d.roots.is_empty());

        let z = MatPoly1::constant(DMatrix::zeros(2, 2), Var::W);
        assert!(matches!(matpoly_det_roots(&z, 1e-9), Err(Error::SingularPencil)));
    }

    #[test]
    fn degree_error_when_too_many_powers() {
        assert!(matches!(
            to_matrix_form_cols(&second_e(), Var::Z, 2),
            Err(Error::Degree { found: 2, allowed: 1 })
        ));
    }

    #[test]
    fn json_round_trip() {
        let p = q0().add(&BiPoly::from_terms(&[(1, 1, C::new(0.5, -0.25))]));
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"coef":[[[2,0],[-1,0]],[[-1,0],[0.5,-0.25]]],"deg":[1,1]}"#);
        let back: BiPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let bad = r#"{"coef":[[[1,0]]],"deg":[1,0]}"#;
        assert!(serde_json::from_str::<BiPoly>(bad).is_err());
    }
}
