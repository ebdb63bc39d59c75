//! Closed-form constants, the convergence-rate table, the short-step bound
//! and the two-body reduction.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{invalid, Result};
use crate::trotter::SplittingScheme;

/// A small exact fraction, serialized as `"p/q"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    num: i64,
    den: i64,
}

impl Rational {
    pub const fn new(num: i64, den: i64) -> Self {
        assert!(den > 0);
        Self { num, den }
    }

    pub fn num(self) -> i64 {
        self.num
    }

    pub fn den(self) -> i64 {
        self.den
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Parses `p/q` or an integer.
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        match text.split_once('/') {
            Some((p, q)) => {
                let num: i64 = p.trim().parse().ok()?;
                let den: i64 = q.trim().parse().ok()?;
                (den > 0).then(|| Self::new(num, den))
            }
            None => Some(Self::new(text.parse().ok()?, 1)),
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn check_particles(n: usize, c0: f64) -> Result<()> {
    if n == 0 {
        return invalid("particle count must be at least 1");
    }
    if !(c0.is_finite() && c0 >= 0.0) {
        return invalid(format!("c0 must be finite and non-negative, got {c0}"));
    }
    Ok(())
}

/// `C_N = 2 + 6 c₀ N^{3/2} + 8 c₀² N³`.
pub fn c_n(n_particles: usize, c0: f64) -> Result<f64> {
    check_particles(n_particles, c0)?;
    let n = n_particles as f64;
    Ok(2.0 + 6.0 * c0 * n.powf(1.5) + 8.0 * c0 * c0 * n.powi(3))
}

/// `C̃_N = C c₀ ((N−1) N^{3/2} + (N−1) N^{1/2} (C_N − 1))`.
pub fn c_tilde_n(n_particles: usize, c0: f64, abs_const: f64) -> Result<f64> {
    if !(abs_const.is_finite() && abs_const > 0.0) {
        return invalid(format!("universal constant must be positive, got {abs_const}"));
    }
    let cn = c_n(n_particles, c0)?;
    let n = n_particles as f64;
    Ok(abs_const * c0 * ((n - 1.0) * n.powf(1.5) + (n - 1.0) * n.sqrt() * (cn - 1.0)))
}

/// Global convergence rate for initial data satisfying the condition with
/// index `ell` (`ell = 0`: no condition).
pub fn gamma_rate(scheme: SplittingScheme, ell: usize) -> Rational {
    match (scheme, ell) {
        (_, 0) => Rational::new(1, 4),
        (SplittingScheme::LieBa, _) => Rational::new(1, 1),
        (SplittingScheme::Strang, 1) => Rational::new(1, 1),
        (SplittingScheme::Strang, 2) => Rational::new(3, 2),
        (SplittingScheme::Strang, _) => Rational::new(2, 1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateTableEntry {
    pub scheme: SplittingScheme,
    pub ell_condition: usize,
    pub rate: Rational,
}

pub fn rate_table(ell_max: usize) -> Vec<RateTableEntry> {
    [SplittingScheme::LieBa, SplittingScheme::Strang]
        .into_iter()
        .flat_map(|scheme| {
            (0..=ell_max).map(move |ell| RateTableEntry {
                scheme,
                ell_condition: ell,
                rate: gamma_rate(scheme, ell),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBound {
    /// `C N^{4.5} T t^{1/4} ‖ψ₀‖_{H²}`.
    pub headline: f64,
    /// `(3 C̃_N t^{5/4} + (C_N/2) t + C̃_N T t^{1/4}) ‖ψ₀‖_{H²}`.
    pub three_term: f64,
    pub terms: [f64; 3],
}

/// Long-time error bound for `L = T/t` steps from `H²` data.
pub fn error_bound(
    n_particles: usize,
    c0: f64,
    abs_const: f64,
    total_time: f64,
    t: f64,
    h2_norm_psi0: f64,
) -> Result<ErrorBound> {
    if !(t > 0.0 && t <= 1.0) {
        return invalid(format!("step size must lie in (0, 1], got {t}"));
    }
    if !(total_time >= 0.0 && h2_norm_psi0 >= 0.0) {
        return invalid("total time and initial norm must be non-negative");
    }
    let cn = c_n(n_particles, c0)?;
    let ct = c_tilde_n(n_particles, c0, abs_const)?;
    let terms = [
        3.0 * ct * t.powf(1.25) * h2_norm_psi0,
        0.5 * cn * t * h2_norm_psi0,
        ct * total_time * t.powf(0.25) * h2_norm_psi0,
    ];
    Ok(ErrorBound {
        headline: abs_const * (n_particles as f64).powf(4.5) * total_time * t.powf(0.25) * h2_norm_psi0,
        three_term: terms.iter().sum(),
        terms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoBody {
    #[serde(rename = "M")]
    pub total_mass: f64,
    pub mu: f64,
    pub c_eff: f64,
    pub time_scale: f64,
}

/// Centre-of-mass separation of a two-particle Coulomb problem.
pub fn reduce_two_body(m_e: f64, m_p: f64, hbar: f64, e_sq: f64) -> Result<TwoBody> {
    if !(m_e > 0.0 && m_p > 0.0) {
        return invalid(format!("masses must be positive (m_e = {m_e}, m_p = {m_p})"));
    }
    if hbar.is_nan() || hbar <= 0.0 {
        return invalid(format!("hbar must be positive, got {hbar}"));
    }
    let total = m_e + m_p;
    let mu = m_e * m_p / total;
    Ok(TwoBody {
        total_mass: total,
        mu,
        c_eff: 2.0 * e_sq / (hbar * hbar),
        time_scale: hbar * hbar / (2.0 * mu),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_n_values() {
        assert_eq!(c_n(1, 1.0).unwrap(), 16.0);
        assert_eq!(c_n(1, 0.0).unwrap(), 2.0);
        let want = 2.0 + 6.0 * 2f64.powf(1.5) + 64.0;
        assert!((c_n(2, 1.0).unwrap() - want).abs() < 1e-12);
        assert!((want - 82.9706).abs() < 1e-4);
        assert!(c_n(0, 1.0).is_err());
        assert!(c_n(1, -1.0).is_err());
    }

    #[test]
    fn c_tilde_values() {
        assert_eq!(c_tilde_n(1, 3.0, 1.0).unwrap(), 0.0);
        let c2 = c_n(2, 1.0).unwrap();
        let want = 2f64.powf(1.5) + 2f64.sqrt() * (c2 - 1.0);
        assert!((c_tilde_n(2, 1.0, 1.0).unwrap() - want).abs() < 1e-12);
        let ratio = c_tilde_n(64, 1.0, 1.0).unwrap() / c_tilde_n(16, 1.0, 1.0).unwrap();
        assert!((ratio / 4f64.powf(4.5) - 1.0).abs() < 0.1);
    }

    #[test]
    fn rates() {
        use SplittingScheme::*;
        assert_eq!(gamma_rate(Strang, 0), Rational::new(1, 4));
        assert_eq!(gamma_rate(Strang, 2), Rational::new(3, 2));
        assert_eq!(gamma_rate(LieBa, 5), Rational::new(1, 1));
        assert_eq!(gamma_rate(Strang, 9), Rational::new(2, 1));
        for s in [LieBa, Strang] {
            for l in 0..8 {
                assert!(gamma_rate(s, l) <= gamma_rate(s, l + 1));
            }
        }
    }

    #[test]
    fn rational_text() {
        assert_eq!(Rational::parse("3/2"), Some(Rational::new(3, 2)));
        assert_eq!(Rational::parse("2"), Some(Rational::new(2, 1)));
        assert_eq!(Rational::parse("1/0"), None);
        assert_eq!(Rational::new(1, 4).to_string(), "1/4");
        assert_eq!(serde_json::to_string(&Rational::new(3, 2)).unwrap(), "\"3/2\"");
    }

    #[test]
    fn error_bound_assembly() {
        let b = error_bound(1, 1.0, 1.0, 1.0, 1e-4, 1.0).unwrap();
        // N = 1: C̃_1 = 0 and only (C_1/2) t = 8e-4 survives.
        assert!((b.three_term - 8e-4).abs() < 1e-15);
        let b2 = error_bound(2, 1.0, 1.0, 2.0, 1e-4, 1.0).unwrap();
        let b1 = error_bound(2, 1.0, 1.0, 1.0, 1e-4, 1.0).unwrap();
        assert!((b2.terms[2] - 2.0 * b1.terms[2]).abs() < 1e-12);
        assert!((b2.headline - 2.0 * b1.headline).abs() < 1e-12);
        let tiny = error_bound(2, 1.0, 1.0, 1.0, 1e-60, 1.0).unwrap();
        assert!(tiny.three_term < 1e-8);
        assert!(error_bound(1, 1.0, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(error_bound(1, 1.0, 1.0, 1.0, 1.5, 1.0).is_err());
    }

    #[test]
    fn two_body() {
        let r = reduce_two_body(2.0, 2.0, 1.0, 1.0).unwrap();
        assert_eq!((r.mu, r.total_mass, r.c_eff), (1.0, 4.0, 2.0));
        let heavy = reduce_two_body(1.0, 1e9, 1.0, 1.0).unwrap();
        assert!((heavy.mu - 1.0).abs() < 1e-9);
        let r = reduce_two_body(0.3, 1.7, 1.0, 1.0).unwrap();
        assert!((1.0 / r.mu - (1.0 / 0.3 + 1.0 / 1.7)).abs() < 1e-12);
        assert!(reduce_two_body(0.0, 1.0, 1.0, 1.0).is_err());
    }
}
