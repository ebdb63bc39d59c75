use num_complex::Complex64;

use super::operator::SectorOperator;
use super::tridiag;
use crate::error::{invalid, Error, Result};

/// Exact unitary group `t ↦ e^{-iAt}` of a self-adjoint sector operator.
pub trait Propagator: Send + Sync {
    fn dim(&self) -> usize;

    fn propagate(&self, state: &[Complex64], t: f64) -> Result<Vec<Complex64>>;
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return invalid(format!(
            "state has length {got} but the propagator acts on dimension {expected}"
        ));
    }
    Ok(())
}

/// Full spectral factorization `A = Q diag(λ) Qᵀ` of a sector operator.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    ell: usize,
    eigenvalues: Vec<f64>,
    /// Column-major: eigenvector `k` is `vectors[k * n .. (k + 1) * n]`.
    vectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, k: usize) -> &[f64] {
        let n = self.eigenvalues.len();
        &self.vectors[k * n..(k + 1) * n]
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// Entry `(i, j)` of `Q diag(λ) Qᵀ`.
    pub fn reconstruct(&self, i: usize, j: usize) -> f64 {
        let n = self.eigenvalues.len();
        (0..n)
            .map(|k| self.vectors[k * n + i] * self.eigenvalues[k] * self.vectors[k * n + j])
            .sum()
    }

    /// Applies `Q f(Λ) Qᵀ` for a real spectral multiplier.
    pub fn apply_function(&self, v: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = self.eigenvalues.len();
        let mut out = vec![0.0; n];
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let q = self.eigenvector(k);
            let coef = f(lam) * q.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
            out.iter_mut().zip(q).for_each(|(o, qi)| *o += coef * qi);
        }
        let _ = n;
        out
    }
}

/// Dense diagonalization by implicit-shift QL.
pub fn diagonalize(op: &SectorOperator) -> Result<EigenDecomposition> {
    let n = op.dim();
    let mut d = op.diagonal().to_vec();
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    tridiag::ql_implicit(&mut d, op.off_diagonal(), Some(&mut z))
        .map_err(|_| Error::NoConvergence { ell: op.ell(), size: n })?;
    Ok(EigenDecomposition {
        ell: op.ell(),
        eigenvalues: d,
        vectors: z,
    })
}

/// Eigenvalues only (same QL iteration, no vector accumulation).
pub fn eigenvalues(op: &SectorOperator) -> Result<Vec<f64>> {
    let mut d = op.diagonal().to_vec();
    tridiag::ql_implicit(&mut d, op.off_diagonal(), None)
        .map_err(|_| Error::NoConvergence { ell: op.ell(), size: op.dim() })?;
    Ok(d)
}

impl Propagator for EigenDecomposition {
    fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn propagate(&self, state: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
        let n = self.dim();
        check_dim(n, state.len())?;
        let mut out = vec![Complex64::default(); n];
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let q = self.eigenvector(k);
            let mut re = 0.0;
            let mut im = 0.0;
            for (qi, z) in q.iter().zip(state) {
                re += qi * z.re;
                im += qi * z.im;
            }
            let coef = Complex64::new(re, im) * Complex64::from_polar(1.0, -lam * t);
            for (o, qi) in out.iter_mut().zip(q) {
                *o += coef * qi;
            }
        }
        Ok(out)
    }
}

/// Largest `R·|t|` handled by one Chebyshev expansion; longer times are split.
const MAX_ARGUMENT: f64 = 400.0;
const MAX_DEFLATED: usize = 24;

#[derive(Debug, Clone)]
struct DeflatedPair {
    value: f64,
    start: usize,
    vector: Vec<f64>,
}

impl DeflatedPair {
    fn dot(&self, v: &[Complex64]) -> Complex64 {
        let seg = &v[self.start..self.start + self.vector.len()];
        let mut acc = Complex64::default();
        for (q, z) in self.vector.iter().zip(seg) {
            acc += z * q;
        }
        acc
    }

    fn axpy(&self, coef: Complex64, v: &mut [Complex64]) {
        let seg = &mut v[self.start..self.start + self.vector.len()];
        for (q, z) in self.vector.iter().zip(seg) {
            *z += coef * q;
        }
    }
}

/// Matrix-free exact propagator: Chebyshev expansion of `e^{-iAt}` in Bessel
/// coefficients, acting on the tridiagonal operator directly.
///
/// The centrifugal term makes a handful of eigenvalues, localized on the first
/// nodes, far larger than the rest of the spectrum. Those pairs are split off
/// and propagated exactly; the expansion only has to cover the remaining
/// interval, which is what sets its cost.
#[derive(Debug, Clone)]
pub struct ChebyshevPropagator {
    op: SectorOperator,
    center: f64,
    half_width: f64,
    deflated: Vec<DeflatedPair>,
}

impl ChebyshevPropagator {
    pub fn new(op: &SectorOperator) -> Result<Self> {
        let n = op.dim();
        let d = op.diagonal();
        let off = op.off_diagonal();
        let lowest = tridiag::kth_eigenvalue(d, off, 0);
        let scale = op.max_abs_entry().max(1.0);

        // Top of the spectrum, descending.
        let top: Vec<f64> = (0..MAX_DEFLATED.min(n.saturating_sub(1)) + 1)
            .map(|m| tridiag::kth_eigenvalue(d, off, n - 1 - m))
            .collect();
        let mut best_m = 0;
        let mut best_cost = top[0] - lowest;
        for (m, &e) in top.iter().enumerate().skip(1) {
            let cost = (e - lowest) * (1.0 + 0.02 * m as f64);
            if cost < 0.9 * best_cost {
                best_cost = cost;
                best_m = m;
            }
        }

        let mut deflated: Vec<DeflatedPair> = Vec::with_capacity(best_m);
        let mut kept = 0;
        for &value in &top[..best_m] {
            if let Some(prev) = deflated.last() {
                if (prev.value - value).abs() < 1e-8 * scale {
                    break;
                }
            }
            let mut q = tridiag::inverse_iteration(d, off, value);
            for p in &deflated {
                let seg = &mut q[p.start..p.start + p.vector.len()];
                let dot: f64 = seg.iter().zip(&p.vector).map(|(a, b)| a * b).sum();
                seg.iter_mut().zip(&p.vector).for_each(|(a, b)| *a -= dot * b);
            }
            tridiag::normalize(&mut q);
            if residual(op, &q, value) > 1e-11 * scale {
                break;
            }
            let peak = q.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let cut = 1e-18 * peak;
            let first = q.iter().position(|v| v.abs() > cut).unwrap_or(0);
            let last = q.iter().rposition(|v| v.abs() > cut).unwrap_or(n - 1);
            deflated.push(DeflatedPair {
                value,
                start: first,
                vector: q[first..=last].to_vec(),
            });
            kept += 1;
        }

        let upper = top[kept];
        let margin = 1e-10 * scale;
        let lo = lowest - margin;
        let hi = upper + margin;
        Ok(Self {
            op: op.clone(),
            center: 0.5 * (lo + hi),
            half_width: 0.5 * (hi - lo),
            deflated,
        })
    }

    /// Half-width of the spectral interval covered by the expansion.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn deflated_count(&self) -> usize {
        self.deflated.len()
    }

    fn project(&self, v: &mut [Complex64]) {
        for p in &self.deflated {
            let c = p.dot(v);
            p.axpy(-c, v);
        }
    }

    fn expand(&self, v: &[Complex64], t: f64) -> Vec<Complex64> {
        let n = v.len();
        let x = self.half_width * t.abs();
        let coeffs = bessel_sequence(x);
        // e^{-i x Ã} = J_0 + 2 Σ (∓i)^k J_k T_k(Ã), sign following t.
        let rot = if t >= 0.0 {
            Complex64::new(0.0, -1.0)
        } else {
            Complex64::new(0.0, 1.0)
        };

        let inv_r = 1.0 / self.half_width;
        let shifted_apply = |src: &[Complex64], dst: &mut [Complex64]| {
            self.op.apply_into(src, dst);
            for (o, s) in dst.iter_mut().zip(src) {
                *o = (*o - s * self.center) * inv_r;
            }
            self.project(dst);
        };

        let mut out: Vec<Complex64> = v.iter().map(|z| z * coeffs[0]).collect();
        if coeffs.len() == 1 {
            return out;
        }
        let mut prev = v.to_vec();
        let mut cur = vec![Complex64::default(); n];
        shifted_apply(&prev, &mut cur);
        let mut phase = rot;
        let c1 = phase * (2.0 * coeffs[1]);
        out.iter_mut().zip(&cur).for_each(|(o, w)| *o += c1 * w);

        let mut next = vec![Complex64::default(); n];
        for &jk in &coeffs[2..] {
            shifted_apply(&cur, &mut next);
            phase *= rot;
            let ck = phase * (2.0 * jk);
            for ((nx, p), o) in next.iter_mut().zip(&prev).zip(out.iter_mut()) {
                *nx = 2.0 * *nx - p;
                *o += ck * *nx;
            }
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
        let global = Complex64::from_polar(1.0, -self.center * t);
        out.iter_mut().for_each(|z| *z *= global);
        out
    }

    fn step(&self, state: &[Complex64], t: f64) -> Vec<Complex64> {
        let mut bulk = state.to_vec();
        let mut pieces = Vec::with_capacity(self.deflated.len());
        for p in &self.deflated {
            let c = p.dot(&bulk);
            p.axpy(-c, &mut bulk);
            pieces.push(c);
        }
        let mut out = if self.half_width > 0.0 {
            self.expand(&bulk, t)
        } else {
            let g = Complex64::from_polar(1.0, -self.center * t);
            bulk.iter().map(|z| z * g).collect()
        };
        for (p, c) in self.deflated.iter().zip(pieces) {
            p.axpy(c * Complex64::from_polar(1.0, -p.value * t), &mut out);
        }
        out
    }
}

fn residual(op: &SectorOperator, q: &[f64], lam: f64) -> f64 {
    let d = op.diagonal();
    let e = op.off_diagonal();
    let n = q.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut aq = d[i] * q[i];
        if i > 0 {
            aq += e[i - 1] * q[i - 1];
        }
        if i + 1 < n {
            aq += e[i] * q[i + 1];
        }
        worst = worst.max((aq - lam * q[i]).abs());
    }
    worst
}

impl Propagator for ChebyshevPropagator {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn propagate(&self, state: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
        check_dim(self.dim(), state.len())?;
        if t == 0.0 {
            return Ok(state.to_vec());
        }
        let pieces = ((self.half_width * t.abs()) / MAX_ARGUMENT).ceil().max(1.0) as usize;
        let dt = t / pieces as f64;
        let mut cur = state.to_vec();
        for _ in 0..pieces {
            cur = self.step(&cur, dt);
        }
        Ok(cur)
    }
}

/// `J_0(x), …, J_K(x)` for `x ≥ 0`, truncated where the tail drops below
/// double precision. Miller's backward recurrence, normalized by
/// `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_sequence(x: f64) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite());
    if x == 0.0 {
        return vec![1.0];
    }
    let keep = (x + 12.0 * x.cbrt() + 25.0).ceil() as usize;
    let mut start = keep + 20 + (4.0 * x.cbrt()) as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-280;
    for k in (1..=start).rev() {
        j[k - 1] = (2.0 * k as f64 / x) * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in &mut j[k - 1..] {
                *v *= 1e-250;
            }
        }
    }
    let mut norm = j[0];
    for k in (2..=start).step_by(2) {
        norm += 2.0 * j[k];
    }
    j.truncate(keep + 1);
    j.iter_mut().for_each(|v| *v /= norm);
    let last = j.iter().rposition(|v| v.abs() > 1e-18).unwrap_or(0);
    j.truncate(last + 1);
    j
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Coulomb, OperatorKind, RadialGrid};

    fn random_state(n: usize, seed: u64) -> Vec<Complex64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let b = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                Complex64::new(a, b)
            })
            .collect()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn bessel_values() {
        // Reference values of J_k(1) and J_k(10).
        let j1 = bessel_sequence(1.0);
        assert!((j1[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j1[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((j1[5] - 2.497_577_302_112_344e-4).abs() < 1e-17);
        let j10 = bessel_sequence(10.0);
        assert!((j10[0] + 0.245_935_764_451_348_3).abs() < 1e-14);
        assert!((j10[10] - 0.207_486_106_633_358_9).abs() < 1e-14);
        let sum: f64 = j10[0] + 2.0 * j10.iter().skip(2).step_by(2).sum::<f64>();
        assert!((sum - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bessel_large_argument_is_bounded() {
        let j = bessel_sequence(350.0);
        assert!(j.iter().all(|v| v.abs() < 0.1));
        let sq: f64 = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
        assert!((sq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chebyshev_matches_spectral() {
        let g = RadialGrid::new(30.0, 300).unwrap();
        for ell in [0, 2, 4] {
            for kind in [OperatorKind::KineticOnly, OperatorKind::FullHamiltonian] {
                let op = SectorOperator::new(&g, ell, kind, Coulomb::hydrogen());
                let eig = diagonalize(&op).unwrap();
                let cheb = ChebyshevPropagator::new(&op).unwrap();
                let v = random_state(300, 7 + ell as u64);
                for t in [1e-4, 0.013, 0.5, -0.2, 3.0] {
                    let a = eig.propagate(&v, t).unwrap();
                    let b = cheb.propagate(&v, t).unwrap();
                    assert!(max_diff(&a, &b) < 1e-10, "ell={ell} t={t}: {}", max_diff(&a, &b));
                }
            }
        }
    }

    #[test]
    fn deflation_engages_for_centrifugal_spike() {
        let g = RadialGrid::new(60.0, 2000).unwrap();
        let op = SectorOperator::new(&g, 4, OperatorKind::KineticOnly, Coulomb::free());
        let cheb = ChebyshevPropagator::new(&op).unwrap();
        let (_, gersh) = tridiag::gershgorin(op.diagonal(), op.off_diagonal());
        assert!(cheb.deflated_count() > 0);
        assert!(cheb.half_width() < 0.2 * gersh);
    }

    #[test]
    fn eigenvector_phase() {
        let g = RadialGrid::new(20.0, 60).unwrap();
        let op = SectorOperator::new(&g, 1, OperatorKind::FullHamiltonian, Coulomb::hydrogen());
        let eig = diagonalize(&op).unwrap();
        let k = 3;
        let v: Vec<Complex64> = eig.eigenvector(k).iter().map(|&x| x.into()).collect();
        let t = 2.7;
        let out = eig.propagate(&v, t).unwrap();
        let phase = Complex64::from_polar(1.0, -eig.eigenvalues()[k] * t);
        for (o, x) in out.iter().zip(&v) {
            assert!((o - x * phase).norm() < 1e-12);
        }
        assert_eq!(eig.propagate(&v, 0.0).unwrap().len(), 60);
        assert!(eig.propagate(&v[..10], 1.0).is_err());
    }
}
