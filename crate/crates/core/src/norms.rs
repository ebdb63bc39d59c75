//! Discrete `L²`, `H²` and weighted `H²` norms, Hardy-type operator norms and
//! the weighted-norm propagation monitor.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::spectral::{tridiag, Coulomb, OperatorKind, Propagator, RadialGrid, SectorOperator};
use crate::states::{check_assumption, MultiSectorState, SectorState};

/// Constant of the spherical Hardy inequality.
pub const C_SH: f64 = 22.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormReport {
    pub l2: f64,
    pub h2: f64,
    pub weighted_h2: Option<f64>,
}

fn kinetic(grid: &RadialGrid, ell: usize) -> SectorOperator {
    SectorOperator::new(grid, ell, OperatorKind::KineticOnly, Coulomb::free())
}

pub fn l2_norm(state: &SectorState) -> f64 {
    state.norm()
}

/// `sqrt(‖Δ_ℓ u‖² + ‖u‖²)` for reduced samples in sector `ell`.
fn h2_of(grid: &RadialGrid, ell: usize, u: &[Complex64]) -> f64 {
    let mut lap = vec![Complex64::default(); u.len()];
    kinetic(grid, ell).apply_into(u, &mut lap);
    (grid.norm_sqr(&lap) + grid.norm_sqr(u)).sqrt()
}

/// `‖g‖_{H²} = sqrt(‖Δg‖² + ‖g‖²)` with the sector Laplacian, centrifugal
/// term included.
pub fn h2_norm(state: &SectorState) -> f64 {
    h2_of(state.grid(), state.ell(), state.u())
}

/// `‖ |x|^{-ℓ} f ‖_{H²}`. The weight is radial, so the sector is unchanged.
pub fn weighted_h2_norm(state: &SectorState, ell_weight: usize) -> f64 {
    let w = ell_weight as i32;
    let g: Vec<Complex64> = state
        .grid()
        .nodes()
        .iter()
        .zip(state.u())
        .map(|(&r, z)| z / r.powi(w))
        .collect();
    h2_of(state.grid(), state.ell(), &g)
}

pub fn norm_report(state: &SectorState, ell_weight: Option<usize>) -> NormReport {
    NormReport {
        l2: l2_norm(state),
        h2: h2_norm(state),
        weighted_h2: ell_weight.map(|l| weighted_h2_norm(state, l)),
    }
}

/// Root-sum-square of the sector `H²` norms.
pub fn h2_norm_multi(state: &MultiSectorState) -> f64 {
    state.sectors().map(|s| h2_norm(s).powi(2)).sum::<f64>().sqrt()
}

/// Largest singular value of `diag(1/r) K_ℓ^{-1/2}` over `ℓ = 0..=ell_max`.
///
/// `σ_max² = λ_max(D K⁻¹ D) = 1 / λ_min(R K R)` with `R = diag(r)`, and `R K R`
/// is again tridiagonal, so the extreme eigenvalue comes from a Sturm
/// bisection rather than a dense factorization.
pub fn hardy_norm_estimate(grid: &RadialGrid, ell_max: usize) -> Result<f64> {
    let r = grid.nodes();
    let mut best: f64 = 0.0;
    for ell in 0..=ell_max {
        let k = kinetic(grid, ell);
        let floor = tridiag::kth_eigenvalue(k.diagonal(), k.off_diagonal(), 0);
        if floor <= 1e-12 {
            return Err(Error::Numeric(format!(
                "kinetic operator for ell = {ell} has eigenvalue {floor:e} <= 1e-12"
            )));
        }
        let d: Vec<f64> = k.diagonal().iter().zip(r).map(|(v, ri)| v * ri * ri).collect();
        let off: Vec<f64> = k
            .off_diagonal()
            .iter()
            .enumerate()
            .map(|(j, v)| v * r[j] * r[j + 1])
            .collect();
        let lam = tridiag::kth_eigenvalue(&d, &off, 0);
        if lam <= 0.0 {
            return Err(Error::Numeric(format!("r K r lost positivity for ell = {ell}")));
        }
        best = best.max(lam.recip().sqrt());
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphericalHardy {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Compares `‖Δ_{S²} f / |x|²‖` with `C_SH ‖f‖_{H²}` in the state's sector.
pub fn spherical_hardy_check(state: &SectorState) -> SphericalHardy {
    let grid = state.grid();
    let l = state.ell() as f64;
    let weight = l * (l + 1.0);
    let lhs = (grid
        .nodes()
        .iter()
        .zip(state.u())
        .map(|(&r, z)| (z * (weight / (r * r))).norm_sqr())
        .sum::<f64>()
        * grid.h())
    .sqrt();
    let rhs = C_SH * h2_norm(state);
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    SphericalHardy { lhs, rhs, ratio }
}

/// `C_{ℓ,c} = sqrt(1 + C_SH² + 6(1 + c²))`.
pub fn c_ell_c(c: f64) -> f64 {
    (1.0 + C_SH * C_SH + 6.0 * (1.0 + c * c)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonitorSample {
    pub t: f64,
    pub s: f64,
    pub weighted_h2: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonitorReport {
    pub initial_weighted_h2: f64,
    pub sup_ratio: f64,
    /// The closed-form constant, for comparison only.
    pub c_ell_c: f64,
    pub trace: Vec<MonitorSample>,
}

impl MonitorReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,s,weighted_h2,ratio")?;
        for p in &self.trace {
            writeln!(w, "{},{},{:e},{:e}", p.t, p.s, p.weighted_h2, p.ratio)?;
        }
        Ok(())
    }
}

/// `n` equispaced points on `[0, end]`.
pub fn lattice(end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| end * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn default_times() -> Vec<f64> {
    lattice(10.0, 21)
}

pub fn default_free_times() -> Vec<f64> {
    lattice(2.0, 5)
}

/// Tracks `‖ |x|^{-ℓ} e^{is Δ} e^{-itH} ψ ‖_{H²}` over a `(t, s)` lattice.
///
/// Both lattices are walked incrementally, so they must be sorted ascending.
pub fn key_observation_monitor(
    state: &SectorState,
    ell_weight: usize,
    hamiltonian: &dyn Propagator,
    kinetic: &dyn Propagator,
    times: &[f64],
    free_times: &[f64],
    c: f64,
) -> Result<MonitorReport> {
    let check = check_assumption(&MultiSectorState::from(state.clone()), ell_weight, f64::INFINITY)?;
    if !check.verdict {
        return invalid(format!(
            "state in sector {} does not satisfy the condition for ell = {ell_weight}",
            state.ell()
        ));
    }
    let ascending = |v: &[f64]| v.windows(2).all(|w| w[0] <= w[1]);
    if !ascending(times) || !ascending(free_times) {
        return invalid("monitor lattices must be sorted ascending");
    }
    let initial = weighted_h2_norm(state, ell_weight);
    let mut trace = Vec::with_capacity(times.len() * free_times.len());
    let mut psi = state.u().to_vec();
    let mut t_now = 0.0;
    for &t in times {
        psi = hamiltonian.propagate(&psi, t - t_now)?;
        t_now = t;
        let mut phi = psi.clone();
        let mut s_now = 0.0;
        for &s in free_times {
            phi = kinetic.propagate(&phi, s - s_now)?;
            s_now = s;
            let w = weighted_h2_norm(&state.with_samples(phi.clone())?, ell_weight);
            trace.push(MonitorSample {
                t,
                s,
                weighted_h2: w,
                ratio: w / initial,
            });
        }
    }
    let sup_ratio = trace.iter().map(|p| p.ratio).fold(0.0, f64::max);
    Ok(MonitorReport {
        initial_weighted_h2: initial,
        sup_ratio,
        c_ell_c: c_ell_c(c),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::diagonalize;
    use crate::states::hydrogen_state;
    use std::sync::Arc;

    fn grid(r_max: f64, n: usize) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(r_max, n).unwrap())
    }

    #[test]
    fn zero_state() {
        let g = grid(10.0, 50);
        let s = SectorState::new(g, 1, 0, vec![Complex64::default(); 50]).unwrap();
        assert_eq!(h2_norm(&s), 0.0);
        assert_eq!(weighted_h2_norm(&s, 2), 0.0);
        assert_eq!(spherical_hardy_check(&s).ratio, 0.0);
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let inner: f64 = (1..n)
            .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
            .sum();
        (f(a) + f(b) + inner) * h / 3.0
    }

    #[test]
    fn ground_state_h2() {
        // u = 2r e^{-r}; -u'' = (4 - 2r) e^{-r}.
        let lap = simpson(|r| ((4.0 - 2.0 * r) * (-r).exp()).powi(2), 0.0, 40.0, 200_000);
        let want = (1.0 + lap).sqrt();
        assert!((want - 6f64.sqrt()).abs() < 1e-9);
        // The odd closure misses the cusp at the first node only, an O(h) error.
        let g = grid(40.0, 40_000);
        let s = hydrogen_state(1, 0, 0, g).unwrap();
        assert!((h2_norm(&s) - want).abs() < 2e-3, "{}", h2_norm(&s));
    }

    #[test]
    fn weighting_is_pointwise() {
        let g = grid(30.0, 600);
        let a = SectorState::from_profile(g.clone(), 2, 0, |r| r * r * (-r).exp()).unwrap();
        let b = SectorState::from_profile(g, 2, 0, |r| r * (-r).exp()).unwrap();
        assert!((weighted_h2_norm(&a, 1) - h2_norm(&b)).abs() < 1e-10 * h2_norm(&b));
    }

    #[test]
    fn hardy_coarse_grid() {
        let g = RadialGrid::new(40.0, 200).unwrap();
        let v = hardy_norm_estimate(&g, 0).unwrap();
        assert!(v > 1.2 && v < 2.0, "{v}");
        assert_eq!(v, hardy_norm_estimate(&g, 3).unwrap());
    }

    #[test]
    fn hardy_matches_dense_singular_value() {
        // Independent route: K^{-1/2} from the eigendecomposition, then the
        // top eigenvalue of (D K^{-1/2})ᵀ(D K^{-1/2}) by power iteration.
        let g = RadialGrid::new(20.0, 120).unwrap();
        let k = kinetic(&g, 0);
        let eig = diagonalize(&k).unwrap();
        let n = g.len();
        let mut v = vec![1.0; n];
        let mut sigma2 = 0.0;
        for _ in 0..3000 {
            let w = eig.apply_function(&v, |l| l.powf(-0.5));
            let w: Vec<f64> = w.iter().zip(g.nodes()).map(|(x, r)| x / (r * r)).collect();
            let w = eig.apply_function(&w, |l| l.powf(-0.5));
            sigma2 = w.iter().map(|x| x * x).sum::<f64>().sqrt()
                / v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            v = w.iter().map(|x| x / norm).collect();
        }
        let fast = hardy_norm_estimate(&g, 0).unwrap();
        assert!((fast - sigma2.sqrt()).abs() < 1e-6 * fast, "{fast} vs {}", sigma2.sqrt());
    }

    #[test]
    fn spherical_hardy_exponential() {
        let g = grid(40.0, 4000);
        let s = SectorState::from_profile(g, 1, 0, |r| r * (-r).exp()).unwrap();
        let out = spherical_hardy_check(&s);
        assert!(out.ratio < 1.0 && out.ratio > 0.0);
        // ‖2/r² · r e^{-r}‖² = ∫ 4 e^{-2r} dr = 2.
        assert!((out.lhs - 2f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn c_ell_c_value() {
        assert!((c_ell_c(0.0) - (1.0 + 484.0 + 6.0f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn monitor_identity_lattice() {
        let g = grid(100.0, 1000);
        let s = hydrogen_state(3, 2, 0, g.clone()).unwrap();
        let h = SectorOperator::new(&g, 2, OperatorKind::FullHamiltonian, Coulomb::hydrogen());
        let k = kinetic(&g, 2);
        let hp = crate::spectral::ChebyshevPropagator::new(&h).unwrap();
        let kp = crate::spectral::ChebyshevPropagator::new(&k).unwrap();
        let rep = key_observation_monitor(&s, 1, &hp, &kp, &[0.0], &[0.0], 2.0).unwrap();
        assert!((rep.sup_ratio - 1.0).abs() < 1e-14);
        let p100 = hydrogen_state(1, 0, 0, g).unwrap();
        assert!(key_observation_monitor(&p100, 1, &hp, &kp, &[0.0], &[0.0], 2.0).is_err());
    }
}
