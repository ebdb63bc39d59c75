//! The smooth step `F` and the split `V = V_reg + V_sin` at radius `s^β`.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::quadrature::{gk15, integrate};
use crate::spectral::{Coulomb, RadialGrid};

pub const DEFAULT_BETA: f64 = 0.5;
const QUAD_TOL: f64 = 1e-12;

/// `exp(-1 / ((r - 1/2)(1 - r)))` on `(1/2, 1)`, zero elsewhere.
pub fn bump(r: f64) -> f64 {
    if r <= 0.5 || r >= 1.0 {
        return 0.0;
    }
    (-1.0 / ((r - 0.5) * (1.0 - r))).exp()
}

fn bump_derivative(r: f64) -> f64 {
    if r <= 0.5 || r >= 1.0 {
        return 0.0;
    }
    let q = (r - 0.5) * (1.0 - r);
    bump(r) * (1.5 - 2.0 * r) / (q * q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffProfile {
    pub c0_norm: f64,
    pub beta: f64,
}

impl CutoffProfile {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return invalid(format!("cutoff exponent must be positive, got {beta}"));
        }
        let mass = integrate(bump, 0.5, 1.0, QUAD_TOL * 1e-8)?;
        Ok(Self {
            c0_norm: 1.0 / mass,
            beta,
        })
    }

    /// `F(λ ≤ 1) = C₀ ∫_λ^1 bump`.
    pub fn f_leq(&self, lambda: f64) -> f64 {
        if lambda <= 0.5 {
            return 1.0;
        }
        if lambda >= 1.0 {
            return 0.0;
        }
        let tail = integrate(bump, lambda, 1.0, QUAD_TOL / self.c0_norm).unwrap_or_else(|_| {
            // Fall back to a fixed fine panel sum; never hit for this integrand.
            let k = 64;
            let w = (1.0 - lambda) / k as f64;
            (0..k).map(|i| gk15(&bump, lambda + i as f64 * w, lambda + (i + 1) as f64 * w).0).sum()
        });
        (self.c0_norm * tail).clamp(0.0, 1.0)
    }

    pub fn f_gt(&self, lambda: f64) -> f64 {
        1.0 - self.f_leq(lambda)
    }

    /// `d/dλ F(λ > 1)`.
    pub fn f_gt_prime(&self, lambda: f64) -> f64 {
        self.c0_norm * bump(lambda)
    }

    /// `d²/dλ² F(λ > 1)`.
    pub fn f_gt_second(&self, lambda: f64) -> f64 {
        self.c0_norm * bump_derivative(lambda)
    }
}

impl Default for CutoffProfile {
    fn default() -> Self {
        Self::new(DEFAULT_BETA).expect("default cutoff profile")
    }
}

/// `(V_reg, V_sin)` on the grid for step size `s`.
pub fn split_potential(
    grid: &RadialGrid,
    coulomb: Coulomb,
    s: f64,
    profile: &CutoffProfile,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(s > 0.0 && s <= 1.0) {
        return invalid(format!("step size must lie in (0, 1], got {s}"));
    }
    let radius = s.powf(profile.beta);
    let mut reg = Vec::with_capacity(grid.len());
    let mut sin = Vec::with_capacity(grid.len());
    for &r in grid.nodes() {
        let v = coulomb.at(r);
        let singular = profile.f_leq(r / radius) * v;
        sin.push(singular);
        reg.push(v - singular);
    }
    Ok((reg, sin))
}

/// `max_j |V_sin(r_j)| r_j^{ℓ+2}`.
pub fn singular_weighted_sup(grid: &RadialGrid, v_sin: &[f64], ell: usize) -> f64 {
    grid.nodes()
        .iter()
        .zip(v_sin)
        .map(|(r, v)| v.abs() * r.powi(ell as i32 + 2))
        .fold(0.0, f64::max)
}

/// Maximizes `g` on `(1/2, 1)` by sampling then golden-section refinement
/// around the best sample.
fn band_supremum(samples: usize, g: impl Fn(f64) -> f64) -> f64 {
    let h = 0.5 / (samples + 1) as f64;
    let (mut best_i, mut best) = (1, f64::NEG_INFINITY);
    for i in 1..=samples {
        let v = g(0.5 + i as f64 * h);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = 0.5 + (best_i as f64 - 1.0) * h;
    let mut b = 0.5 + (best_i as f64 + 1.0) * h;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-15 {
            break;
        }
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    best.max(gc).max(gd)
}

pub const DEFAULT_SAMPLES: usize = 100_000;

/// `C_F1 = sup λ² |F''(λ > 1)|`.
pub fn compute_cf1(profile: &CutoffProfile) -> f64 {
    compute_cf1_with(profile, DEFAULT_SAMPLES)
}

pub fn compute_cf1_with(profile: &CutoffProfile, samples: usize) -> f64 {
    band_supremum(samples, |l| l * l * profile.f_gt_second(l).abs())
}

/// `C_F2 = sup |λ F'(λ > 1) − F(λ > 1)|`; at least 1 from `λ ≥ 1`.
pub fn compute_cf2(profile: &CutoffProfile) -> f64 {
    compute_cf2_with(profile, DEFAULT_SAMPLES)
}

pub fn compute_cf2_with(profile: &CutoffProfile, samples: usize) -> f64 {
    let band = band_supremum(samples, |l| (l * profile.f_gt_prime(l) - profile.f_gt(l)).abs());
    band.max(1.0)
}

/// `8 e^{26/3}`.
pub fn cf1_bound() -> f64 {
    8.0 * (26.0f64 / 3.0).exp()
}

pub fn cf2_bound(profile: &CutoffProfile) -> f64 {
    1.0 + profile.c0_norm
}

/// Constants of the cutoff argument that exist but are never given a value.
pub const UNIMPLEMENTED_CONSTANTS: [&str; 3] = ["C~_F1", "C~_F2", "C_F,reg"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffConstants {
    pub c0: f64,
    pub c_f1: f64,
    pub c_f1_bound: f64,
    pub c_f2: f64,
    pub c_f2_bound: f64,
    pub beta: f64,
}

pub fn cutoff_constants(profile: &CutoffProfile) -> CutoffConstants {
    CutoffConstants {
        c0: profile.c0_norm,
        c_f1: compute_cf1(profile),
        c_f1_bound: cf1_bound(),
        c_f2: compute_cf2(profile),
        c_f2_bound: cf2_bound(profile),
        beta: profile.beta,
    }
}
