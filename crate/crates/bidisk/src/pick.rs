//! Agler kernels for rational inner interpolation data on the bidisk:
//! 1 - c_j conj(c_k) = (1 - z_j conj z_k) Gamma_jk + (1 - w_j conj w_k) Delta_jk.

use crate::bipoly::{ser_cmat, BiPoly, CPair, DegreeBox};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::sos;
use crate::szego::NumericPolicy;
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

/// Eigenvalues down to -PSD_TOL * trace count as nonnegative.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PickData {
    pub nodes: Vec<(CPair, CPair)>,
    pub values: Vec<CPair>,
}

impl PickData {
    pub fn new(nodes: &[(C, C)], values: &[C]) -> Self {
        PickData {
            nodes: nodes.iter().map(|&(z, w)| (z.into(), w.into())).collect(),
            values: values.iter().map(|&c| c.into()).collect(),
        }
    }
    pub fn node(&self, j: usize) -> (C, C) {
        (self.nodes[j].0.into(), self.nodes[j].1.into())
    }
    pub fn value(&self, j: usize) -> C {
        self.values[j].into()
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PickCertificate {
    #[serde(rename = "Gamma", serialize_with = "ser_cmat")]
    pub gamma: CMat,
    #[serde(rename = "Delta", serialize_with = "ser_cmat")]
    pub delta: CMat,
    pub identity_residual: f64,
    pub min_eigs: [f64; 2],
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PickCheck {
    pub residual: f64,
    pub psd: bool,
}

fn validate_nodes(nodes: &[(C, C)]) -> Result<()> {
    for (j, &(z, w)) in nodes.iter().enumerate() {
        if !(z.norm() < 1.0 && w.norm() < 1.0) {
            return Err(Error::Invalid(format!("node {j} = ({z}, {w}) is not in the open bidisk")));
        }
        if nodes[..j].iter().any(|&(a, b)| a == z && b == w) {
            return Err(Error::Invalid(format!("node {j} repeats an earlier node")));
        }
    }
    Ok(())
}

/// Gamma and Delta for the values c_j = p~(z_j, w_j) / p(z_j, w_j) of the rational inner
/// function p~/p, from the sums-of-squares decomposition of p.
pub fn agler_matrices(
    p: &BiPoly,
    bx: DegreeBox,
    nodes: &[(C, C)],
    policy: &NumericPolicy,
) -> Result<(PickCertificate, PickData)> {
    validate_nodes(nodes)?;
    let p = p.with_box(bx)?;
    let pt = p.reflect(bx)?;
    let scale = p.max_abs();
    let mut pv = Vec::with_capacity(nodes.len());
    for &(z, w) in nodes {
        let v = p.eval(z, w);
        if v.norm() <= 1e-14 * scale {
            return Err(Error::Pole(format!("p vanishes at node ({z}, {w})")));
        }
        pv.push(v);
    }
    let d = sos::decompose(&p, bx, policy)?;
    let k = nodes.len();
    let ev: Vec<Vec<C>> = nodes.iter().map(|&(z, w)| d.e.eval(z, w)).collect();
    let fv: Vec<Vec<C>> = nodes.iter().map(|&(z, w)| d.f.eval(z, w)).collect();
    let inner = |a: &[C], b: &[C]| -> C { a.iter().zip(b).map(|(x, y)| x * y.conj()).sum() };
    let gamma = CMat::from_fn(k, k, |i, j| inner(&ev[i], &ev[j]) / (pv[i] * pv[j].conj()));
    let delta = CMat::from_fn(k, k, |i, j| inner(&fv[i], &fv[j]) / (pv[i] * pv[j].conj()));
    let values: Vec<C> = nodes.iter().zip(&pv).map(|(&(z, w), &v)| pt.eval(z, w) / v).collect();
    let data = PickData::new(nodes, &values);
    let gamma = linalg::herm(&gamma);
    let delta = linalg::herm(&delta);
    let mut cert = PickCertificate {
        min_eigs: [linalg::lambda_min(&gamma), linalg::lambda_min(&delta)],
        gamma,
        delta,
        identity_residual: 0.0,
    };
    let check = verify_pick(&cert, &data)?;
    cert.identity_residual = check.residual;
    if !check.psd {
        return Err(Error::Structural(format!("kernel not positive semidefinite: {:?}", cert.min_eigs)));
    }
    for (j, &(z, _)) in nodes.iter().enumerate() {
        let cap = 1.0 / (1.0 - z.norm_sqr()) + 1e-8;
        if cert.gamma[(j, j)].re > cap {
            return Err(Error::Structural(format!("Gamma[{j},{j}] exceeds 1/(1-|z|^2)")));
        }
        if values[j].norm() > 1.0 + 1e-10 {
            return Err(Error::Structural(format!("|c_{j}| = {} exceeds 1", values[j].norm())));
        }
    }
    Ok((cert, data))
}

/// Entrywise residual of the Agler identity and positivity of both kernels.
pub fn verify_pick(cert: &PickCertificate, data: &PickData) -> Result<PickCheck> {
    let k = data.len();
    for (name, m) in [("Gamma", &cert.gamma), ("Delta", &cert.delta)] {
        if m.nrows() != k || m.ncols() != k {
            return Err(Error::Invalid(format!("{name} is {}x{}, expected {k}x{k}", m.nrows(), m.ncols())));
        }
    }
    if data.values.len() != k {
        return Err(Error::Invalid("values and nodes differ in length".into()));
    }
    let mut residual: f64 = 0.0;
    for i in 0..k {
        let (zi, wi) = data.node(i);
        for j in 0..k {
            let (zj, wj) = data.node(j);
            let lhs = C::new(1.0, 0.0) - data.value(i) * data.value(j).conj();
            let rhs = (1.0 - zi * zj.conj()) * cert.gamma[(i, j)] + (1.0 - wi * wj.conj()) * cert.delta[(i, j)];
            residual = residual.max((lhs - rhs).norm());
        }
    }
    let psd = [&cert.gamma, &cert.delta].iter().all(|m| {
        let tr: f64 = (0..k).map(|i| m[(i, i)].re).sum();
        linalg::lambda_min(&linalg::herm(m)) >= -PSD_TOL * tr.abs()
    });
    Ok(PickCheck { residual, psd })
}
