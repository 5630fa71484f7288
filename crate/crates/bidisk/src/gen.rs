//! Seeded random stable polynomials for tests and benchmarks.

use crate::bipoly::{BiPoly, DegreeBox};
use num_complex::Complex64 as C;
use rand::Rng;
use std::f64::consts::TAU;

fn phase<R: Rng>(rng: &mut R) -> C {
    C::from_polar(1.0, rng.gen_range(0.0..TAU))
}

/// c - alpha z - beta w with |alpha| + |beta| = s * c.
pub fn linear_factor<R: Rng>(rng: &mut R, s: f64) -> BiPoly {
    let c = rng.gen_range(1.0..2.0);
    let split = rng.gen_range(0.25..0.75);
    let a = phase(rng) * (s * c * split);
    let b = phase(rng) * (s * c * (1.0 - split));
    BiPoly::from_terms(&[(0, 0, C::new(c, 0.0)), (1, 0, -a), (0, 1, -b)])
}

/// Product of `factors` linear factors, each with |alpha| + |beta| <= 0.85 c, so the
/// result has no zeros on the closed bidisk. Box (factors, factors).
pub fn closed_stable<R: Rng>(rng: &mut R, factors: usize) -> (BiPoly, DegreeBox) {
    let mut p = BiPoly::constant(C::new(1.0, 0.0));
    for _ in 0..factors {
        let s = rng.gen_range(0.3..0.85);
        p = p.mul(&linear_factor(rng, s));
    }
    (p, DegreeBox::new(factors, factors))
}

/// Q(zw, z^2 w) for a product Q of linear factors each with one torus zero.
/// Each factor maps a box (1,1) to (3,2), so the declared box is (3k, 2k).
pub fn boundary_stable<R: Rng>(rng: &mut R, factors: usize) -> (BiPoly, DegreeBox) {
    let mut p = BiPoly::constant(C::new(1.0, 0.0));
    for _ in 0..factors {
        p = p.mul(&linear_factor(rng, 1.0));
    }
    (compose(&p), DegreeBox::new(3 * factors, 2 * factors))
}

/// Q(zw, z^2 w).
pub fn compose(q: &BiPoly) -> BiPoly {
    let bx = q.deg_box();
    let out = DegreeBox::new(bx.n + 2 * bx.m, bx.n + bx.m);
    let mut r = BiPoly::zeros(out);
    for (a, b) in bx.monomials() {
        let (j, k) = (a + 2 * b, a + b);
        r.set(j, k, r.get(j, k) + q.get(a, b));
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn compose_matches_known_example() {
        let q = BiPoly::from_real_terms(&[(0, 0, 2.0), (1, 0, -1.0), (0, 1, -1.0)]);
        let f = compose(&q);
        assert_eq!(f, BiPoly::from_real_terms(&[(0, 0, 2.0), (1, 1, -1.0), (2, 1, -1.0)]));
        assert_eq!(f.reflect(DegreeBox::new(3, 2)).unwrap(), compose(&q.reflect(DegreeBox::new(1, 1)).unwrap()));
    }

    #[test]
    fn generated_polynomials_are_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 1..=2 {
            let (p, _) = closed_stable(&mut rng, k);
            let r = crate::stability::bidisk_stability(&p, 128, 1e-9).unwrap();
            assert!(r.stable_closed);
            let (p, _) = boundary_stable(&mut rng, k);
            let r = crate::stability::bidisk_stability(&p, 256, 1e-9).unwrap();
            assert!(r.stable_open && !r.stable_closed && r.atoral);
            assert_eq!(r.torus_zeros.len(), k);
        }
    }
}
