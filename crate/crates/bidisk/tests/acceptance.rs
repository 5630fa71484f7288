//! Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

use bidisk::bipoly::RootLocation;
use bidisk::distvar::{self, DVRealization};
use bidisk::fejer::{self, TrigPoly};
use bidisk::linalg::{self, CMat};
use bidisk::opoly::{self, MeasureSpace, Perp};
use bidisk::szego::{self, NumericPolicy};
use bidisk::{gen, pick, sos, BiPoly, Complex64 as C, DegreeBox, Error, VecBiPoly};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

type Outcome = std::result::Result<String, String>;

fn c(x: f64) -> C {
    C::new(x, 0.0)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: bidisk::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn disk_point(rng: &mut ChaCha8Rng, rmax: f64) -> C {
    C::from_polar(rmax * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..2.0 * PI))
}

fn two_minus() -> BiPoly {
    BiPoly::from_real_terms(&[(0, 0, 2.0), (1, 0, -1.0), (0, 1, -1.0)])
}

fn vecp(terms: &[&[(usize, usize, f64)]], bx: DegreeBox) -> VecBiPoly {
    VecBiPoly::with_box(terms.iter().map(|t| BiPoly::from_real_terms(t)).collect(), bx).unwrap()
}

/// max over a torus grid of |p - lambda q| with the best unimodular lambda taken at the origin.
fn torus_deviation_up_to_phase(p: &BiPoly, q: &BiPoly) -> f64 {
    let lam = p.get(0, 0) / q.get(0, 0);
    let lam = lam / lam.norm();
    let g = 64;
    let mut mx: f64 = 0.0;
    for i in 0..g {
        let z = C::from_polar(1.0, 2.0 * PI * i as f64 / g as f64);
        for l in 0..g {
            let w = C::from_polar(1.0, 2.0 * PI * (l as f64 + 0.5) / g as f64);
            mx = mx.max((p.eval(z, w) - lam * q.eval(z, w)).norm());
        }
    }
    mx
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let q = two_minus();
    let d = lib(sos::decompose(&q, DegreeBox::new(1, 1), &NumericPolicy::default()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut dev: f64 = 0.0;
    for i in 0..1000 {
        let (z, w) = if i % 10 == 0 {
            (C::from_polar(1.0, rng.gen_range(0.0..2.0 * PI)), C::from_polar(1.0, rng.gen_range(0.0..2.0 * PI)))
        } else {
            (disk_point(&mut rng, 1.0), disk_point(&mut rng, 1.0))
        };
        dev = dev.max((d.e.norm_sq(z, w) - 2.0 * (c(1.0) - w).norm_sqr()).abs());
        dev = dev.max((d.f.norm_sq(z, w) - 2.0 * (c(1.0) - z).norm_sqr()).abs());
    }
    let secs = t0.elapsed().as_secs_f64();
    ensure(dev <= 1e-8, || format!("pointwise deviation {dev:.2e}"))?;
    ensure(secs < 10.0, || format!("runtime {secs:.1} s"))?;
    Ok(format!("deviation {dev:.2e}, {secs:.2} s"))
}

fn criterion_2() -> Outcome {
    let q = BiPoly::from_real_terms(&[(0, 0, 2.0), (1, 1, -1.0), (2, 1, -1.0)]);
    let bx = DegreeBox::new(3, 2);
    let d = lib(sos::decompose(&q, bx, &NumericPolicy::default()))?;
    let res = sos::verify_identity(&q, bx, &d.e, &d.f, 1000, 0);
    ensure(res <= 1e-8, || format!("identity residual {res:.2e}"))?;
    let cert = lib(sos::certify_invertibility(&d))?;
    ensure(cert.pass, || format!("certificates fail: {:?}", cert.offending_roots))?;
    let circle: Vec<_> = d.e_certificate.det.roots.iter().filter(|r| r.location == RootLocation::Circle).collect();
    ensure(circle.len() == 1, || format!("{} circle roots of det E(w)", circle.len()))?;
    let off = (circle[0].value - c(1.0)).norm();
    ensure(off <= 1e-6, || format!("circle root {} is {off:.2e} from 1", circle[0].value))?;
    let s2 = 2f64.sqrt();
    let second = vecp(&[&[(1, 0, s2), (2, 1, -s2)], &[(1, 0, 1.0), (2, 0, -1.0)], &[(0, 0, 2.0), (1, 1, -1.0), (2, 1, -1.0)]], bx);
    let al = lib(sos::unitary_align(&d.e, &second))?;
    ensure(al.residual <= 1e-7, || format!("alignment with the second choice {:.2e}", al.residual))?;
    let first = vecp(&[&[(0, 0, s2), (2, 1, -s2)], &[(0, 1, s2), (1, 2, -s2)], &[(1, 1, s2), (2, 2, -s2)]], bx);
    ensure(sos::unitary_align(&d.e, &first).is_err(), || "alignment with the first choice succeeded".into())?;
    Ok(format!("identity {res:.2e}, root offset {off:.2e}, alignment {:.2e}", al.residual))
}

fn criterion_3() -> Outcome {
    let q = two_minus();
    let zm1 = BiPoly::from_real_terms(&[(0, 0, -1.0), (1, 0, 1.0)]);
    let one = BiPoly::constant(c(1.0));
    let mut worst: f64 = 0.0;
    for &r in &[0.5f64, 0.9, 0.99] {
        let s = (1.0 - r * r).sqrt();
        let a = lib(szego::radial_mean(&zm1, &zm1, &q, r, 4096))?;
        let b = lib(szego::radial_mean(&one, &one, &q, r, 4096))?;
        let ea = (a - c((2.0 - s) / 4.0)).norm();
        let eb = (b - c(1.0 / (4.0 * s))).norm();
        ensure(ea <= 1e-10 && eb <= 1e-10, || format!("r = {r}: errors {ea:.2e}, {eb:.2e}"))?;
        worst = worst.max(ea).max(eb);
    }
    Ok(format!("max error {worst:.2e}"))
}

fn criterion_4() -> Outcome {
    let q = two_minus();
    let pol = NumericPolicy::default();
    let b = lib(szego::square_integrable_basis(DegreeBox::new(1, 1), &q, &pol))?;
    ensure(b.dim() == 3, || format!("dimension {}", b.dim()))?;
    let target = vecp(&[&[(0, 0, -1.0), (1, 0, 1.0)], &[(0, 0, -1.0), (0, 1, 1.0)], &[(1, 0, 1.0), (0, 1, 1.0), (1, 1, -2.0)]], DegreeBox::new(1, 1));
    let ang = linalg::max_principal_angle(&linalg::orth(&b.coef_matrix(), 1e-10), &linalg::orth(&target.coef_matrix(), 1e-10));
    ensure(ang <= 1e-6, || format!("principal angle {ang:.2e}"))?;
    let b0 = lib(szego::square_integrable_basis(DegreeBox::new(0, 0), &q, &pol))?;
    ensure(b0.dim() == 0, || format!("box (0,0) has dimension {}", b0.dim()))?;
    Ok(format!("dim 3, angle {ang:.2e}"))
}

fn criterion_5() -> Outcome {
    let pol = NumericPolicy::default();
    let bx = DegreeBox::new(1, 1);
    let u2 = lib(sos::uniqueness_test(&two_minus(), bx, &pol))?;
    ensure(u2.unique, || "2 - z - w reported non-unique".into())?;
    let q4 = BiPoly::from_real_terms(&[(0, 0, 4.0), (1, 0, -1.0), (0, 1, -1.0)]);
    let u4 = lib(sos::uniqueness_test(&q4, bx, &pol))?;
    ensure(!u4.unique, || "4 - z - w reported unique".into())?;
    let d = lib(sos::decompose(&two_minus(), bx, &pol))?;
    let s = lib(sos::symmetrize(&d))?;
    let rr = lib(sos::reflection_residual(&s))?;
    ensure(rr <= 1e-8, || format!("reflection residual {rr:.2e}"))?;
    let roots = &s.e_certificate.det.roots;
    ensure(!roots.is_empty() && roots.iter().all(|r| r.location == RootLocation::Circle), || format!("det roots {roots:?}"))?;
    Ok(format!("reflection residual {rr:.2e}, dim_small_box(4-z-w) = {}", u4.dim_small_box))
}

fn criterion_6() -> Outcome {
    let pol = NumericPolicy::default();
    let bx = DegreeBox::new(1, 1);
    let q4 = BiPoly::from_real_terms(&[(0, 0, 4.0), (1, 0, -1.0), (0, 1, -1.0)]);
    let p = lib(fejer::factorize(&TrigPoly::abs_sq(&q4), bx, &pol))?;
    let dev = torus_deviation_up_to_phase(&p, &q4);
    ensure(dev <= 1e-7, || format!("torus deviation {dev:.2e}"))?;
    let h = c(0.5);
    let t = TrigPoly::real_from_terms(1, 1, &[(0, 0, c(2.0)), (1, 0, h), (0, 1, h)]);
    match fejer::gw_condition(&t, bx, &pol) {
        Ok(r) if r.holds => return Err("condition holds for 2 + Re z + Re w".into()),
        Ok(_) | Err(Error::NotStrictlyPositive { .. }) => {}
        Err(e) => return Err(format!("unexpected error {e}")),
    }
    let zw = BiPoly::from_real_terms(&[(1, 0, 1.0), (0, 1, -1.0)]);
    ensure(fejer::factorize_nonneg(&[zw], bx, &pol).is_err(), || "{z - w} was factored".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let (q, qb) = gen::closed_stable(&mut rng, 1 + i % 3);
        let p = lib(fejer::factorize(&TrigPoly::abs_sq(&q), qb, &pol)).map_err(|e| format!("product {i}: {e}"))?;
        let dev = torus_deviation_up_to_phase(&p, &q) / q.max_abs();
        ensure(dev <= 1e-7, || format!("product {i}: relative deviation {dev:.2e}"))?;
        worst = worst.max(dev);
    }
    Ok(format!("deviation {dev:.2e}, round trips worst {worst:.2e}"))
}

fn cusp() -> BiPoly {
    BiPoly::from_real_terms(&[(3, 0, 1.0), (2, 1, -1.0), (1, 1, -1.0), (0, 2, 1.0)])
}

fn criterion_7() -> Outcome {
    let p = cusp();
    let pol = NumericPolicy::default();
    let dv = lib(distvar::dv_sos(&p, 1.0, 1.0, &pol))?;
    let r: DVRealization = lib(distvar::realize_phi(&dv, &lib(distvar::default_samples(&p))?))?;
    let (det, tail) = lib(r.det_pencil(4))?;
    let dd = det.max_diff(&p).max(tail);
    ensure(dd <= 1e-8, || format!("det(wI - Phi) differs by {dd:.2e}"))?;
    let mut inner: f64 = 0.0;
    for i in 0..256 {
        let ph = lib(r.phi(C::from_polar(1.0, 2.0 * PI * (i as f64 + 0.5) / 256.0)))?;
        inner = inner.max(linalg::maxabs(&(&ph * ph.adjoint() - CMat::identity(2, 2))));
    }
    ensure(inner <= 1e-8, || format!("Phi Phi* - I = {inner:.2e} on the circle"))?;
    let mut eig: f64 = 0.0;
    let mut count = 0;
    for &rad in &[0.15, 0.35, 0.55, 0.75, 0.9] {
        for pt in lib(distvar::variety_samples(&p, 10, rad))?.points {
            let qv = CMat::from_column_slice(2, 1, &r.qvec.eval(pt.z, pt.w));
            let ph = lib(r.phi(pt.z))?;
            let res = (&ph * &qv - &qv * pt.w).norm() / qv.norm().max(1e-300);
            eig = eig.max(res);
            count += 1;
        }
    }
    ensure(count >= 100, || format!("only {count} variety samples"))?;
    ensure(eig <= 1e-8, || format!("eigenvector residual {eig:.2e}"))?;
    let fs = [
        ("w", BiPoly::from_real_terms(&[(0, 1, 1.0)])),
        ("zw", BiPoly::from_real_terms(&[(1, 1, 1.0)])),
        ("z^2+w", BiPoly::from_real_terms(&[(2, 0, 1.0), (0, 1, 1.0)])),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut ratio: f64 = 0.0;
    for (name, f) in &fs {
        let ext = lib(distvar::extend(f, &r))?;
        let sup = lib(distvar::variety_sup(f, &p))?;
        for _ in 0..1000 {
            let (z, w) = (disk_point(&mut rng, 1.0), disk_point(&mut rng, 1.0));
            let v = lib(ext.eval(z, w)).map_err(|e| format!("f = {name}: {e}"))?;
            let bound = (1.0 + 16.0 / (c(1.0) - z).norm_sqr()).sqrt() * sup;
            let rt = v.value.norm() / bound;
            ensure(rt <= 1.0 + 1e-10, || format!("f = {name}: |F| = {:.3e} exceeds {bound:.3e} at ({z}, {w})", v.value.norm()))?;
            ratio = ratio.max(rt);
        }
    }
    Ok(format!("det {dd:.2e}, inner {inner:.2e}, eigenvector {eig:.2e}, worst |F|/bound {ratio:.3}"))
}

fn check_pick(p: &BiPoly, bx: DegreeBox, nodes: &[(C, C)]) -> std::result::Result<f64, String> {
    let (cert, data) = lib(pick::agler_matrices(p, bx, nodes, &NumericPolicy::default()))?;
    let chk = lib(pick::verify_pick(&cert, &data))?;
    ensure(chk.residual <= 1e-10, || format!("identity residual {:.2e}", chk.residual))?;
    for (name, m) in [("Gamma", &cert.gamma), ("Delta", &cert.delta)] {
        let tr: f64 = (0..m.nrows()).map(|i| m[(i, i)].re).sum();
        let lo = linalg::lambda_min(&linalg::herm(m));
        ensure(lo >= -1e-10 * tr, || format!("{name} min eigenvalue {lo:.2e}, trace {tr:.2e}"))?;
    }
    for (j, &(z, _)) in nodes.iter().enumerate() {
        let g = cert.gamma[(j, j)].re;
        ensure(g <= 1.0 / (1.0 - z.norm_sqr()) + 1e-8, || format!("Gamma[{j},{j}] = {g}"))?;
    }
    Ok(chk.residual)
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut polys = vec![(two_minus(), DegreeBox::new(1, 1))];
    for k in 1..=3 {
        polys.push(gen::closed_stable(&mut rng, k));
    }
    let mut worst: f64 = 0.0;
    for (i, (p, bx)) in polys.iter().enumerate() {
        let count = rng.gen_range(1..=6);
        let nodes: Vec<(C, C)> = (0..count).map(|_| (disk_point(&mut rng, 0.95), disk_point(&mut rng, 0.95))).collect();
        worst = worst.max(check_pick(p, *bx, &nodes).map_err(|e| format!("polynomial {i}: {e}"))?);
    }
    Ok(format!("worst identity residual {worst:.2e}"))
}

/// Measure space for q whose trapezoid rule starts from a seed-dependent node count.
fn seeded_space(q: &BiPoly, bx: DegreeBox, seed: u64) -> std::result::Result<(MeasureSpace, Vec<bidisk::stability::TorusZero>), String> {
    let pol = NumericPolicy { seed, ..NumericPolicy::default() };
    let (mut m, ms, zeros) = lib(sos::prepare(q, bx, &pol))?;
    if seed == 0 {
        return Ok((ms, zeros));
    }
    m.quad.n0 = 64 + 16 * (seed as usize % 4);
    Ok((lib(MeasureSpace::new(&m, bx))?, zeros))
}

fn property_case(q: &BiPoly, bx: DegreeBox, rng: &mut ChaCha8Rng) -> std::result::Result<(), String> {
    let (ms, zeros) = seeded_space(q, bx, 0)?;
    let d = lib(sos::decompose_in(q, &ms, zeros, &NumericPolicy::default()))?;
    ensure(d.identity_residual <= 1e-7, || format!("sos residual {:.2e}", d.identity_residual))?;
    let eps = lib(opoly::epsilon_discrepancy_space(&ms))?.0;
    ensure(eps.max_abs_on_grid <= 1e-6, || format!("epsilon discrepancy {:.2e}", eps.max_abs_on_grid))?;
    let (dn, dm) = (ms.perp(Perp::RUp).ncols(), ms.perp(Perp::ULt).ncols());
    ensure((dn, dm) == (bx.n, bx.m) && d.e.len() == bx.n && d.f.len() == bx.m, || {
        format!("dimensions ({dn}, {dm}) for box ({}, {})", bx.n, bx.m)
    })?;
    for _ in 0..128 {
        let w = disk_point(rng, 0.999);
        let sv = linalg::singular_values(&d.e_matrix.eval(w));
        let lo = *sv.last().unwrap();
        ensure(lo > 1e-10 * sv[0].max(1.0), || format!("E(w) rank deficient at w = {w}: {sv:?}"))?;
    }
    let (ms1, zeros1) = seeded_space(q, bx, 1)?;
    let d1 = lib(sos::decompose_in(q, &ms1, zeros1, &NumericPolicy { seed: 1, ..NumericPolicy::default() }))?;
    for (a, b) in [(&d.e, &d1.e), (&d.f, &d1.f)] {
        if a.is_empty() {
            continue;
        }
        let al = lib(sos::unitary_align(a, b))?;
        ensure(al.residual <= 1e-7, || format!("two-seed alignment {:.2e}", al.residual))?;
    }
    Ok(())
}

fn criterion_9() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in 0..25 {
        let (q, bx) = gen::closed_stable(&mut rng, 1 + i % 3);
        property_case(&q, bx, &mut rng).map_err(|e| format!("closed case {i}: {e}"))?;
    }
    for i in 0..25 {
        let (q, bx) = gen::boundary_stable(&mut rng, 1 + i % 2);
        property_case(&q, bx, &mut rng).map_err(|e| format!("boundary case {i}: {e}"))?;
    }
    let secs = t0.elapsed().as_secs_f64();
    ensure(secs < 900.0, || format!("runtime {secs:.0} s"))?;
    Ok(format!("50 polynomials in {secs:.1} s"))
}

/// Moments mean(z^j w^k / |q|^2) for |j|, |k| <= d on an N x N torus grid.
fn torus_moments(q: &BiPoly, d: usize, n: usize) -> Vec<Vec<C>> {
    let (qn, qm) = (q.deg_z(), q.deg_w());
    let w: Vec<C> = (0..n).map(|l| C::from_polar(1.0, 2.0 * PI * l as f64 / n as f64)).collect();
    let wpow: Vec<Vec<C>> = w.iter().map(|&x| (0..=qm.max(d)).map(|k| x.powi(k as i32)).collect()).collect();
    let size = 2 * d + 1;
    let mut mom = vec![vec![C::new(0.0, 0.0); size]; size];
    for i in 0..n {
        let z = C::from_polar(1.0, 2.0 * PI * i as f64 / n as f64);
        let row: Vec<C> = (0..=qm).map(|k| (0..=qn).rev().fold(c(0.0), |acc, j| acc * z + q.get(j, k))).collect();
        let mut s = vec![c(0.0); d + 1];
        for wp in &wpow {
            let qv: C = row.iter().zip(wp).map(|(a, b)| a * b).sum();
            let dens = 1.0 / qv.norm_sqr();
            for k in 0..=d {
                s[k] += wp[k] * dens;
            }
        }
        for j in 0..size {
            let zj = z.powi(j as i32 - d as i32);
            for k in 0..=d {
                mom[j][d + k] += zj * s[k];
                if k > 0 {
                    mom[j][d - k] += zj * s[k].conj();
                }
            }
        }
    }
    let nn = (n * n) as f64;
    mom.iter().map(|r| r.iter().map(|v| v / nn).collect()).collect()
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (q, _) = gen::closed_stable(&mut rng, 3);
    let d = 3;
    let mom = torus_moments(&q, d, 4096);
    let pol = NumericPolicy::default();
    let bx = DegreeBox::new(3, 3);
    let mono: Vec<(usize, usize)> = bx.monomials().collect();
    let mut worst: f64 = 0.0;
    for &(a, b) in &mono {
        let f = BiPoly::from_real_terms(&[(a, b, 1.0)]);
        for &(cc, dd) in &mono {
            let g = BiPoly::from_real_terms(&[(cc, dd, 1.0)]);
            let v = lib(szego::bs_inner(&f, &g, &q, &pol))?.value;
            let want = mom[(a + d) - cc][(b + d) - dd];
            worst = worst.max((v - want).norm());
        }
    }
    ensure(worst <= 1e-8, || format!("max deviation {worst:.2e}"))?;
    Ok(format!("{} pairs, max deviation {worst:.2e}", mono.len() * mono.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("simple decomposition", criterion_1),
        ("composed example", criterion_2),
        ("radial means", criterion_3),
        ("square-integrable basis", criterion_4),
        ("uniqueness classification", criterion_5),
        ("Fejer-Riesz factorization", criterion_6),
        ("distinguished variety", criterion_7),
        ("Pick necessity", criterion_8),
        ("property suite", criterion_9),
        ("torus quadrature cross-check", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t0.elapsed().as_secs_f64();
        match out {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} [{secs:.1} s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
