//! Finite-field elements realised on the complex unit circle.
//!
//! Field elements `βʲ` are identified with `e^{2πi·j·g/q}` where `g` is a
//! primitive root modulo the prime `q`. Only nonzero field elements are
//! ever mapped, so the identification of zero is never needed.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::seq::IndexedRandom;
use rand::Rng;

use crate::error::{arg, Result};
use crate::random::rng;

/// Evaluation points `β₁ … β_n` on the unit circle.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalPoints {
    q: u64,
    generator: u64,
    points: Vec<Complex64>,
}

impl EvalPoints {
    pub fn q(&self) -> u64 {
        self.q
    }

    /// Exponent `g` such that `β = e^{2πi g/q}`.
    pub fn generator(&self) -> u64 {
        self.generator
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// `β_j`, 0-based.
    pub fn point(&self, j: usize) -> Complex64 {
        self.points[j]
    }

    /// The first `k` points, as used to interpolate the share polynomial.
    pub fn prefix(&self, k: usize) -> EvalPoints {
        EvalPoints {
            q: self.q,
            generator: self.generator,
            points: self.points[..k.min(self.points.len())].to_vec(),
        }
    }
}

/// Unit-circle masks `η_j` and their inverses.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskSet {
    exponents: Vec<u64>,
    etas: Vec<Complex64>,
    inverses: Vec<Complex64>,
}

impl MaskSet {
    /// Builds a mask set from explicit values; inverses are the conjugates.
    pub fn from_etas(etas: Vec<Complex64>) -> Self {
        let inverses = etas.iter().map(|e| e.inv()).collect();
        Self {
            exponents: Vec::new(),
            etas,
            inverses,
        }
    }

    pub fn len(&self) -> usize {
        self.etas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.etas.is_empty()
    }

    pub fn etas(&self) -> &[Complex64] {
        &self.etas
    }

    pub fn inverses(&self) -> &[Complex64] {
        &self.inverses
    }

    /// Sampled exponents in `1..q`; empty when built from explicit values.
    pub fn exponents(&self) -> &[u64] {
        &self.exponents
    }
}

/// `e^{2πi·e/q}` with the exponent reduced mod `q` first.
pub fn circle_element(exponent: u64, q: u64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * (exponent % q) as f64 / q as f64)
}

pub fn make_eval_points(n: usize, q_hint: Option<u64>, seed: u64) -> Result<EvalPoints> {
    if n == 0 {
        return arg("need at least one evaluation point");
    }
    let q = match q_hint {
        Some(q) if q <= n as u64 => {
            return arg(format!("field size {q} must exceed the number of points {n}"));
        }
        Some(q) => q,
        None => next_prime(n as u64 + 1),
    };
    let candidates = generator_candidates(q);
    let generator = *candidates
        .choose(&mut rng(seed))
        .expect("every q >= 2 has at least one unit");
    let points = (1..=n as u64)
        .map(|j| circle_element(((j as u128 * generator as u128) % q as u128) as u64, q))
        .collect();
    Ok(EvalPoints {
        q,
        generator,
        points,
    })
}

pub fn make_mask_set(k: usize, q: u64, seed: u64) -> Result<MaskSet> {
    if k == 0 {
        return arg("mask set needs k >= 1");
    }
    if q < 2 {
        return arg(format!("field size must be at least 2, got {q}"));
    }
    let mut rng = rng(seed);
    let exponents: Vec<u64> = (0..k).map(|_| rng.random_range(1..q)).collect();
    let etas: Vec<Complex64> = exponents.iter().map(|&e| circle_element(e, q)).collect();
    let inverses = etas.iter().map(|e| e.conj()).collect();
    Ok(MaskSet {
        exponents,
        etas,
        inverses,
    })
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Smallest prime `>= n`.
pub fn next_prime(mut n: u64) -> u64 {
    while !is_prime(n) {
        n += 1;
    }
    n
}

fn pow_mod(base: u64, mut exp: u64, m: u64) -> u64 {
    let m = m as u128;
    let mut acc: u128 = 1 % m;
    let mut b = base as u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Multiplicative order of `g` modulo `q` (`g` a unit).
fn order_mod(g: u64, q: u64) -> u64 {
    let mut x = g % q;
    let mut ord = 1;
    while x != 1 % q {
        x = (x as u128 * g as u128 % q as u128) as u64;
        ord += 1;
    }
    ord
}

/// Primitive roots mod `q` when `q` is prime; otherwise the units of
/// maximal multiplicative order.
pub fn generator_candidates(q: u64) -> Vec<u64> {
    if q == 2 {
        return vec![1];
    }
    if is_prime(q) {
        let factors = prime_factors(q - 1);
        return (2..q)
            .filter(|&g| factors.iter().all(|&p| pow_mod(g, (q - 1) / p, q) != 1))
            .collect();
    }
    let units: Vec<u64> = (1..q).filter(|&g| gcd(g, q) == 1).collect();
    let best = units.iter().map(|&g| order_mod(g, q)).max().unwrap_or(1);
    units.into_iter().filter(|&g| order_mod(g, q) == best).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roots_of_unity(q: u64) -> Vec<Complex64> {
        (0..q).map(|e| Complex64::from_polar(1.0, TAU * e as f64 / q as f64)).collect()
    }

    fn assert_distinct_nontrivial_roots(pts: &EvalPoints, q: u64) {
        let roots = roots_of_unity(q);
        for (j, p) in pts.points().iter().enumerate() {
            assert!((p.norm() - 1.0).abs() < 1e-14);
            let hits: Vec<usize> = (0..q as usize).filter(|&e| (roots[e] - p).norm() < 1e-12).collect();
            assert_eq!(hits.len(), 1, "point {j} is not a {q}th root of unity");
            assert_ne!(hits[0], 0, "point {j} equals 1");
            for other in &pts.points()[..j] {
                assert!((p - other).norm() > 1e-9);
            }
        }
    }

    #[test]
    fn six_points_in_f7() {
        let pts = make_eval_points(6, None, 0).unwrap();
        assert_eq!(pts.q(), 7);
        assert_eq!(pts.len(), 6);
        assert_distinct_nontrivial_roots(&pts, 7);
        // Generator is a primitive root mod 7: 3 or 5.
        assert!([3, 5].contains(&pts.generator()));
    }

    #[test]
    fn nine_points_in_f11() {
        let pts = make_eval_points(9, None, 4).unwrap();
        assert_eq!(pts.q(), 11);
        assert_distinct_nontrivial_roots(&pts, 11);
    }

    #[test]
    fn single_point() {
        let pts = make_eval_points(1, None, 0).unwrap();
        assert_eq!(pts.q(), 2);
        assert_eq!(pts.len(), 1);
    }

    #[test]
    fn q_hint_validation() {
        assert!(make_eval_points(5, Some(5), 0).is_err());
        assert!(make_eval_points(5, Some(3), 0).is_err());
        assert!(make_eval_points(0, None, 0).is_err());
        let pts = make_eval_points(5, Some(13), 1).unwrap();
        assert_eq!(pts.q(), 13);
        assert_distinct_nontrivial_roots(&pts, 13);
        // Composite hint still yields distinct points.
        let pts = make_eval_points(5, Some(9), 1).unwrap();
        assert_distinct_nontrivial_roots(&pts, 9);
    }

    #[test]
    fn primitive_roots_of_small_primes() {
        assert_eq!(generator_candidates(7), vec![3, 5]);
        assert_eq!(generator_candidates(11), vec![2, 6, 7, 8]);
        assert_eq!(generator_candidates(13).len(), 4); // φ(12)
    }

    #[test]
    fn distinct_for_large_n() {
        let pts = make_eval_points(10_000, None, 3).unwrap();
        // Consecutive multiples of g land on distinct residues; the closest
        // pair is at least one step of the q-gon apart.
        let min_gap = 2.0 * (std::f64::consts::PI / pts.q() as f64).sin();
        let mut angles: Vec<f64> = pts.points().iter().map(|p| p.arg()).collect();
        angles.sort_by(f64::total_cmp);
        for w in angles.windows(2) {
            let chord = 2.0 * ((w[1] - w[0]) / 2.0).sin();
            assert!(chord > 1e-9 && chord >= 0.999 * min_gap);
        }
    }

    #[test]
    fn masks_are_unit_modulus_and_deterministic() {
        let m = make_mask_set(3, 7, 9).unwrap();
        for (e, inv) in m.etas().iter().zip(m.inverses()) {
            assert!((e.norm() - 1.0).abs() < 1e-14);
            assert!((e * inv - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
        assert_eq!(m, make_mask_set(3, 7, 9).unwrap());
        assert!(make_mask_set(0, 7, 1).is_err());
        assert!(make_mask_set(2, 1, 1).is_err());
    }

    #[test]
    fn masks_never_hit_the_trivial_root() {
        let m = make_mask_set(1000, 1009, 5).unwrap();
        assert!(m.exponents().iter().all(|&e| (1..1009).contains(&e)));
        for eta in m.etas() {
            assert!((eta - Complex64::new(1.0, 0.0)).norm() > 1e-6);
        }
    }
}
