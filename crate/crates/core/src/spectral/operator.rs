use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{check_len, RadialGrid};
use crate::error::{invalid, Result};

/// Sign of the Coulomb term `±c/r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interaction {
    Attractive,
    Repulsive,
}

impl Interaction {
    pub fn sign(self) -> f64 {
        match self {
            Interaction::Attractive => -1.0,
            Interaction::Repulsive => 1.0,
        }
    }

    pub fn from_sign(sign: i32) -> Result<Self> {
        match sign {
            -1 => Ok(Interaction::Attractive),
            1 => Ok(Interaction::Repulsive),
            other => invalid(format!("sign must be -1 or +1, got {other}")),
        }
    }
}

/// The potential `sign · c / r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coulomb {
    pub c: f64,
    pub interaction: Interaction,
}

impl Coulomb {
    pub fn new(c: f64, interaction: Interaction) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return invalid(format!("coupling c must be finite and non-negative, got {c}"));
        }
        Ok(Self { c, interaction })
    }

    /// Hydrogen in the `a₀ = 1` convention for `H = -Δ - 2/r`.
    pub fn hydrogen() -> Self {
        Self {
            c: 2.0,
            interaction: Interaction::Attractive,
        }
    }

    pub fn free() -> Self {
        Self {
            c: 0.0,
            interaction: Interaction::Attractive,
        }
    }

    pub fn at(&self, r: f64) -> f64 {
        self.interaction.sign() * self.c / r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    FullHamiltonian,
    KineticOnly,
    PotentialOnly,
}

/// One angular-momentum sector of `-Δ ± c/r` in the reduced `u = r f`
/// representation: a real symmetric tridiagonal matrix.
///
/// The kinetic part is the three-point second difference plus the centrifugal
/// diagonal `ℓ(ℓ+1)/r_j²`. Dirichlet conditions sit on the cell faces `r = 0`
/// and `r = r_max`, imposed by odd reflection (`u_{-1} = -u_0`,
/// `u_n = -u_{n-1}`), which adds `1/h²` to the two corner entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorOperator {
    ell: usize,
    kind: OperatorKind,
    coulomb: Coulomb,
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SectorOperator {
    pub fn new(grid: &RadialGrid, ell: usize, kind: OperatorKind, coulomb: Coulomb) -> Self {
        let n = grid.len();
        let h2 = grid.h() * grid.h();
        let centrifugal = (ell * (ell + 1)) as f64;

        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        if kind != OperatorKind::PotentialOnly {
            for (d, &r) in diag.iter_mut().zip(grid.nodes()) {
                *d = 2.0 / h2 + centrifugal / (r * r);
            }
            diag[0] += 1.0 / h2;
            diag[n - 1] += 1.0 / h2;
            off.iter_mut().for_each(|e| *e = -1.0 / h2);
        }
        if kind != OperatorKind::KineticOnly {
            for (d, &r) in diag.iter_mut().zip(grid.nodes()) {
                *d += coulomb.at(r);
            }
        }
        Self {
            ell,
            kind,
            coulomb,
            diag,
            off,
        }
    }

    /// Builds an operator directly from its tridiagonal entries.
    pub fn from_tridiagonal(ell: usize, diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return invalid(format!(
                "off-diagonal must have length n - 1 (n = {}, got {})",
                diag.len(),
                off.len()
            ));
        }
        Ok(Self {
            ell,
            kind: OperatorKind::FullHamiltonian,
            coulomb: Coulomb::free(),
            diag,
            off,
        })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn coulomb(&self) -> Coulomb {
        self.coulomb
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn off_diagonal(&self) -> &[f64] {
        &self.off
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.diag
            .iter()
            .chain(&self.off)
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// `out = self · v`.
    pub fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        let n = self.diag.len();
        debug_assert_eq!(v.len(), n);
        debug_assert_eq!(out.len(), n);
        if n == 1 {
            out[0] = v[0] * self.diag[0];
            return;
        }
        out[0] = v[0] * self.diag[0] + v[1] * self.off[0];
        for i in 1..n - 1 {
            out[i] = v[i - 1] * self.off[i - 1] + v[i] * self.diag[i] + v[i + 1] * self.off[i];
        }
        out[n - 1] = v[n - 2] * self.off[n - 2] + v[n - 1] * self.diag[n - 1];
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return invalid(format!(
                "vector length {} does not match operator dimension {}",
                v.len(),
                self.dim()
            ));
        }
        let mut out = vec![Complex64::default(); v.len()];
        self.apply_into(v, &mut out);
        Ok(out)
    }
}

/// Pointwise `e^{-i V(r_j) t}`: the exact potential step.
pub fn potential_phase(
    grid: &RadialGrid,
    coulomb: Coulomb,
    state: &[Complex64],
    t: f64,
) -> Result<Vec<Complex64>> {
    check_len(grid, state)?;
    let phases = potential_phases(grid, coulomb, t);
    Ok(state.iter().zip(&phases).map(|(z, p)| z * p).collect())
}

pub(crate) fn potential_phases(grid: &RadialGrid, coulomb: Coulomb, t: f64) -> Vec<Complex64> {
    grid.nodes()
        .iter()
        .map(|&r| Complex64::from_polar(1.0, -coulomb.at(r) * t))
        .collect()
}
