use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Smallest grid accepted by [`RadialGrid::new`].
pub const MIN_POINTS: usize = 2;

/// Cell-centred radial mesh on `(0, r_max)`.
///
/// Node `j` sits at `(j + 1/2) h` with `h = r_max / n`, so the origin is never
/// a node and `1/r` is finite everywhere on the grid. Profiles are stored in the
/// reduced form `u_j = r_j f(r_j)`, for which the `L²(r² dr)` pairing becomes
/// the plain sum `Σ conj(u_j) v_j h`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    r_max: f64,
    h: f64,
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return invalid(format!("r_max must be positive and finite, got {r_max}"));
        }
        if n < MIN_POINTS {
            return invalid(format!("grid needs at least {MIN_POINTS} points, got {n}"));
        }
        let h = r_max / n as f64;
        let nodes = (0..n).map(|j| (j as f64 + 0.5) * h).collect();
        Ok(Self { r_max, h, nodes })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Discrete `⟨u, v⟩ = Σ conj(u_j) v_j h`.
    pub fn inner(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        debug_assert_eq!(u.len(), v.len());
        u.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<Complex64>() * self.h
    }

    pub fn norm_sqr(&self, u: &[Complex64]) -> f64 {
        u.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.h
    }

    pub fn norm(&self, u: &[Complex64]) -> f64 {
        self.norm_sqr(u).sqrt()
    }

    /// Same extent, `factor` times as many cells.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.r_max, self.len() * factor)
    }

    /// Reduced samples `u_j = r_j f(r_j)` of a radial profile `f`.
    pub fn sample_reduced(&self, f: impl Fn(f64) -> f64) -> Vec<Complex64> {
        self.nodes
            .iter()
            .map(|&r| Complex64::new(r * f(r), 0.0))
            .collect()
    }
}

pub(crate) fn check_len(grid: &RadialGrid, state: &[Complex64]) -> Result<()> {
    if state.len() != grid.len() {
        return invalid(format!(
            "state has {} samples but the grid has {} nodes",
            state.len(),
            grid.len()
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_centred_nodes() {
        let g = RadialGrid::new(10.0, 5).unwrap();
        assert_eq!(g.nodes(), &[1.0, 3.0, 5.0, 7.0, 9.0]);
        assert_eq!(g.h(), 2.0);

        let g = RadialGrid::new(40.0, 4000).unwrap();
        assert_eq!(g.len(), 4000);
        assert!((g.nodes()[0] - 0.005).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RadialGrid::new(-1.0, 100).is_err());
        assert!(RadialGrid::new(0.0, 100).is_err());
        assert!(RadialGrid::new(f64::NAN, 100).is_err());
        assert!(RadialGrid::new(1.0, 1).is_err());
    }

    #[test]
    fn uniform_and_positive() {
        let g = RadialGrid::new(7.3, 313).unwrap();
        assert!(g.nodes().iter().all(|&r| r > 0.0));
        for w in g.nodes().windows(2) {
            assert!((w[1] - w[0] - g.h()).abs() < 1e-12);
        }
    }

    #[test]
    fn pairing_is_definite() {
        let g = RadialGrid::new(5.0, 16).unwrap();
        let zero = vec![Complex64::new(0.0, 0.0); 16];
        assert_eq!(g.norm_sqr(&zero), 0.0);
        let mut e = zero.clone();
        e[3] = Complex64::new(0.0, 2.0);
        assert!((g.norm_sqr(&e) - 4.0 * g.h()).abs() < 1e-15);
    }
}
