//! Dense finite-dimensional checks of the splitting error identities.
//!
//! Generators are Hermitian `A`, `B` with `ℒ₁ = -iA`, `ℒ₂ = -iB` and
//! `ℒ = ℒ₁ + ℒ₂`. Every exponential is formed from a Hermitian
//! eigendecomposition, so it is exact up to rounding.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::quadrature::gauss_legendre_on;

pub type CMatrix = DMatrix<Complex64>;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Eigen-factored Hermitian matrix, ready for `e^{-iMt}`.
#[derive(Debug, Clone)]
struct Factored {
    values: Vec<f64>,
    vectors: CMatrix,
}

impl Factored {
    fn new(m: &CMatrix) -> Self {
        let eig = m.clone().symmetric_eigen();
        Self {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    /// `e^{-i M t}`.
    fn unitary(&self, t: f64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -lam * t);
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= phase);
        }
        scaled * self.vectors.adjoint()
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorPair {
    pub dim: usize,
    pub a_mat: CMatrix,
    pub b_mat: CMatrix,
    pub seed: u64,
    fa: Factored,
    fb: Factored,
    fh: Factored,
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc: f64, z| acc.max(z.norm()))
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

fn spectral_radius(m: &CMatrix) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

impl GeneratorPair {
    /// Builds a pair from explicit matrices, symmetrizing away rounding.
    pub fn new(a_mat: CMatrix, b_mat: CMatrix, seed: u64) -> Result<Self> {
        let dim = a_mat.nrows();
        if dim == 0 || !a_mat.is_square() || b_mat.shape() != (dim, dim) {
            return invalid("generators must be square matrices of equal size");
        }
        for m in [&a_mat, &b_mat] {
            let skew = max_abs(&(m - m.adjoint()));
            if skew > 1e-12 * max_abs(m).max(1.0) {
                return invalid(format!("generator is not Hermitian (|M - M*| = {skew:e})"));
            }
        }
        let a_mat = hermitize(&a_mat);
        let b_mat = hermitize(&b_mat);
        let h = &a_mat + &b_mat;
        Ok(Self {
            dim,
            fa: Factored::new(&a_mat),
            fb: Factored::new(&b_mat),
            fh: Factored::new(&h),
            a_mat,
            b_mat,
            seed,
        })
    }

    /// Two independent Gaussian Hermitian matrices, each scaled to unit
    /// spectral radius.
    pub fn random(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be positive");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || {
            let m = CMatrix::from_fn(dim, dim, |_, _| {
                Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
            });
            let h = hermitize(&m);
            let rho = spectral_radius(&h);
            h.unscale(rho)
        };
        let a = draw();
        let b = draw();
        Self::new(a, b, seed)
    }

    pub fn exp_a(&self, t: f64) -> CMatrix {
        self.fa.unitary(t)
    }

    pub fn exp_b(&self, t: f64) -> CMatrix {
        self.fb.unitary(t)
    }

    pub fn exp_h(&self, t: f64) -> CMatrix {
        self.fh.unitary(t)
    }

    fn l1(&self) -> CMatrix {
        self.a_mat.map(|z| -I * z)
    }

    fn l2(&self) -> CMatrix {
        self.b_mat.map(|z| -I * z)
    }
}

fn commutator(x: &CMatrix, y: &CMatrix) -> CMatrix {
    x * y - y * x
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}

/// `e^{-iAt/2} e^{-iBt} e^{-iAt/2} − e^{-iHt}`.
pub fn strang_error_direct(pair: &GeneratorPair, t: f64) -> CMatrix {
    let half = pair.exp_a(0.5 * t);
    &half * pair.exp_b(t) * &half - pair.exp_h(t)
}

/// `e^{-iBt} e^{-iAt} − e^{-iHt}`.
pub fn lie_error_direct(pair: &GeneratorPair, t: f64) -> CMatrix {
    pair.exp_b(t) * pair.exp_a(t) - pair.exp_h(t)
}

fn check_nodes(nodes: usize) -> Result<()> {
    if nodes < 8 {
        return invalid(format!("need at least 8 quadrature nodes, got {nodes}"));
    }
    Ok(())
}

/// The double-integral representation of the Strang local error,
/// `½∫₀ᵗds∫₀ˢdu e^{ℒ₁s/2} e^{ℒ₂(s−u)} [e^{ℒ₂u} e^{ℒ₁(s−u)/2}, [ℒ₂, ℒ₁]] e^{ℒ₁u/2} e^{ℒ(t−s)}`,
/// by tensor Gauss-Legendre on the triangle with `u = s v`.
pub fn strang_error_integral(pair: &GeneratorPair, t: f64, quad_nodes: usize) -> Result<CMatrix> {
    check_nodes(quad_nodes)?;
    let dc = commutator(&pair.l2(), &pair.l1());
    let (ss, ws) = gauss_legendre_on(quad_nodes, 0.0, t);
    let (vs, wv) = gauss_legendre_on(quad_nodes, 0.0, 1.0);
    let mut acc = CMatrix::zeros(pair.dim, pair.dim);
    for (&s, &w_s) in ss.iter().zip(&ws) {
        let left = pair.exp_a(0.5 * s);
        let right = pair.exp_h(t - s);
        let mut inner = CMatrix::zeros(pair.dim, pair.dim);
        for (&v, &w_v) in vs.iter().zip(&wv) {
            let u = s * v;
            let x = pair.exp_b(u) * pair.exp_a(0.5 * (s - u));
            let c = commutator(&x, &dc);
            let term = pair.exp_b(s - u) * c * pair.exp_a(0.5 * u);
            inner += term.scale(w_v * s);
        }
        acc += (&left * inner * &right).scale(w_s);
    }
    Ok(acc.scale(0.5))
}

/// `i∫₀ᵗ ds e^{-isB} [e^{-isA}, B] e^{-i(t−s)H}`.
pub fn lie_error_integral(pair: &GeneratorPair, t: f64, quad_nodes: usize) -> Result<CMatrix> {
    check_nodes(quad_nodes)?;
    let (ss, ws) = gauss_legendre_on(quad_nodes, 0.0, t);
    let mut acc = CMatrix::zeros(pair.dim, pair.dim);
    for (&s, &w) in ss.iter().zip(&ws) {
        let c = commutator(&pair.exp_a(s), &pair.b_mat);
        acc += (pair.exp_b(s) * c * pair.exp_h(t - s)).scale(w);
    }
    Ok(acc.map(|z| I * z))
}

/// `‖[ℒ₁, e^{sℒ₂}] − ∫₀ˢ e^{(s−τ)ℒ₂} [ℒ₁, ℒ₂] e^{τℒ₂} dτ‖_F`.
pub fn commutator_expansion_check(pair: &GeneratorPair, s: f64, quad_nodes: usize) -> Result<f64> {
    check_nodes(quad_nodes)?;
    let l1 = pair.l1();
    let lhs = commutator(&l1, &pair.exp_b(s));
    let c = commutator(&l1, &pair.l2());
    let (taus, ws) = gauss_legendre_on(quad_nodes, 0.0, s);
    let mut rhs = CMatrix::zeros(pair.dim, pair.dim);
    for (&tau, &w) in taus.iter().zip(&ws) {
        rhs += (pair.exp_b(s - tau) * &c * pair.exp_b(tau)).scale(w);
    }
    Ok(frobenius(&(lhs - rhs)))
}

fn power(m: &CMatrix, k: usize) -> CMatrix {
    let mut out = CMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// `E_{1,L}(t) = (e^{-iBt} e^{-iAt})^L − e^{-iHLt}`.
pub fn lie_long_error(pair: &GeneratorPair, t: f64, steps: usize) -> CMatrix {
    power(&(pair.exp_b(t) * pair.exp_a(t)), steps) - pair.exp_h(t * steps as f64)
}

/// `E_{2,L}(t) = (e^{-iAt/2} e^{-iBt} e^{-iAt/2})^L − e^{-iHLt}`.
pub fn strang_long_error(pair: &GeneratorPair, t: f64, steps: usize) -> CMatrix {
    let half = pair.exp_a(0.5 * t);
    power(&(&half * pair.exp_b(t) * &half), steps) - pair.exp_h(t * steps as f64)
}

/// Splits `E_{2,L+1}` into the three terms built from `E_{1,L}` and compares
/// both sides on a seeded random vector.
pub fn e1_e2_relation_check(pair: &GeneratorPair, t: f64, steps: usize) -> Result<f64> {
    if steps == 0 {
        return invalid("step count must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(pair.seed ^ 0x9e37_79b9_7f4a_7c15);
    let psi = DVector::<Complex64>::from_fn(pair.dim, |_, _| {
        Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    });
    let e2 = strang_long_error(pair, t, steps + 1);
    let e1 = lie_long_error(pair, t, steps);
    let half = pair.exp_a(0.5 * t);
    let half_back = pair.exp_a(-0.5 * t);
    let eb = pair.exp_b(t);
    let first = &e2 - &half * &e1 * &eb * &half;
    let second = &half * &e1 * (&eb * pair.exp_a(t) - pair.exp_h(t)) * &half_back;
    let third = &half * &e1 * pair.exp_h(t) * &half_back;
    let lhs = &e2 * &psi;
    let rhs = first * &psi + second * &psi + third * &psi;
    Ok((lhs - rhs).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Strang,
    Lie,
    Comm,
    Relation,
}

impl std::str::FromStr for Check {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strang" => Ok(Check::Strang),
            "lie" => Ok(Check::Lie),
            "comm" => Ok(Check::Comm),
            "relation" => Ok(Check::Relation),
            other => invalid(format!("unknown check {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub check: Check,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Runs one identity check on a seeded random pair. `steps` is only used by
/// the relation check.
pub fn run_check(check: Check, dim: usize, seed: u64, t: f64, nodes: usize, steps: usize) -> Result<CheckReport> {
    let pair = GeneratorPair::random(dim, seed)?;
    let (residual, tolerance) = match check {
        Check::Strang => (
            frobenius(&(strang_error_integral(&pair, t, nodes)? - strang_error_direct(&pair, t))),
            1e-8,
        ),
        Check::Lie => (
            frobenius(&(lie_error_integral(&pair, t, nodes)? - lie_error_direct(&pair, t))),
            1e-9,
        ),
        Check::Comm => (commutator_expansion_check(&pair, t, nodes)?, 1e-10),
        Check::Relation => (e1_e2_relation_check(&pair, t, steps)?, 1e-10),
    };
    Ok(CheckReport {
        check,
        residual,
        tolerance,
        pass: residual <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diagonal_pair(dim: usize) -> GeneratorPair {
        let a = CMatrix::from_diagonal(&DVector::from_fn(dim, |i, _| Complex64::new(i as f64 * 0.3 - 0.5, 0.0)));
        let b = CMatrix::from_diagonal(&DVector::from_fn(dim, |i, _| Complex64::new((i as f64).sin(), 0.0)));
        GeneratorPair::new(a, b, 0).unwrap()
    }

    fn zero_b(dim: usize, seed: u64) -> GeneratorPair {
        let p = GeneratorPair::random(dim, seed).unwrap();
        GeneratorPair::new(p.a_mat.clone(), CMatrix::zeros(dim, dim), seed).unwrap()
    }

    #[test]
    fn seeded_pairs_are_reproducible() {
        let a = GeneratorPair::random(5, 11).unwrap();
        let b = GeneratorPair::random(5, 11).unwrap();
        assert_eq!(a.a_mat, b.a_mat);
        assert_eq!(a.b_mat, b.b_mat);
        assert!((spectral_radius(&a.a_mat) - 1.0).abs() < 1e-12);
        assert!(max_abs(&(&a.a_mat - a.a_mat.adjoint())) < 1e-14);
    }

    #[test]
    fn unitary_exponentials() {
        let p = GeneratorPair::random(6, 2).unwrap();
        let u = p.exp_h(0.7);
        let id = CMatrix::identity(6, 6);
        assert!(max_abs(&(&u * u.adjoint() - id)) < 1e-13);
    }

    #[test]
    fn trivial_cases_vanish() {
        let z = zero_b(4, 3);
        assert!(frobenius(&strang_error_direct(&z, 0.4)) < 1e-13);
        assert!(frobenius(&strang_error_integral(&z, 0.4, 24).unwrap()) < 1e-13);
        let d = diagonal_pair(5);
        assert!(frobenius(&strang_error_direct(&d, 0.4)) < 1e-12);
        assert!(frobenius(&lie_error_integral(&d, 0.4, 24).unwrap()) < 1e-12);
        assert!(commutator_expansion_check(&d, 0.9, 16).unwrap() < 1e-13);
        assert!(commutator_expansion_check(&GeneratorPair::random(3, 1).unwrap(), 0.0, 8).unwrap() < 1e-14);
        assert!(e1_e2_relation_check(&z, 0.3, 2).unwrap() < 1e-12);
        let p = GeneratorPair::random(4, 9).unwrap();
        assert!(e1_e2_relation_check(&p, 0.0, 3).unwrap() < 1e-12);
    }

    #[test]
    fn strang_representation() {
        let p = GeneratorPair::random(4, 5).unwrap();
        let direct = strang_error_direct(&p, 0.3);
        let norm = frobenius(&direct);
        assert!(norm > 0.0 && norm <= 2.0);
        let integral = strang_error_integral(&p, 0.3, 24).unwrap();
        assert!(frobenius(&(integral - direct)) < 1e-8);
    }

    #[test]
    fn lie_representation() {
        let p = GeneratorPair::random(6, 7).unwrap();
        let diff = lie_error_integral(&p, 0.2, 32).unwrap() - lie_error_direct(&p, 0.2);
        assert!(frobenius(&diff) < 1e-9);
    }

    #[test]
    fn commutator_identity() {
        let p = GeneratorPair::random(5, 8).unwrap();
        assert!(commutator_expansion_check(&p, 0.7, 24).unwrap() < 1e-10);
    }

    #[test]
    fn relation_identity() {
        let p = GeneratorPair::random(4, 12).unwrap();
        for l in [1, 2, 5] {
            assert!(e1_e2_relation_check(&p, 0.25, l).unwrap() < 1e-10);
        }
    }

    #[test]
    fn quadrature_convergence_is_monotone() {
        let p = GeneratorPair::random(4, 21).unwrap();
        let t = 0.5;
        let lie_direct = lie_error_direct(&p, t);
        let mut prev = f64::INFINITY;
        for n in [8, 16, 24, 32, 48] {
            let e = frobenius(&(lie_error_integral(&p, t, n).unwrap() - &lie_direct));
            assert!(e <= prev.max(1e-14));
            prev = e;
        }
    }

    #[test]
    fn local_orders() {
        let p = GeneratorPair::random(5, 4).unwrap();
        let lie = |t| frobenius(&lie_error_direct(&p, t));
        let strang = |t| frobenius(&strang_error_direct(&p, t));
        for t in [0.2, 0.1] {
            let r = lie(t) / lie(t / 2.0);
            assert!((3.5..=4.5).contains(&r), "lie {r}");
            let r = strang(t) / strang(t / 2.0);
            assert!((7.0..=9.0).contains(&r), "strang {r}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        let p = GeneratorPair::random(3, 0).unwrap();
        assert!(strang_error_integral(&p, 0.1, 4).is_err());
        assert!(e1_e2_relation_check(&p, 0.1, 0).is_err());
        let bad = CMatrix::from_fn(2, 2, |i, j| Complex64::new(0.0, (i as f64) - (j as f64) + 1.0));
        assert!(GeneratorPair::new(bad.clone(), bad, 0).is_err());
    }
}
