use std::sync::Arc;

use approx::relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;

use trotterlab::bounds::{gamma_rate, reduce_two_body};
use trotterlab::cutoff::CutoffProfile;
use trotterlab::ratefit::{fit_slope, ConvergenceSeries};
use trotterlab::spectral::{Coulomb, OperatorKind, RadialGrid, SectorOperator};
use trotterlab::trotter::{evolve, Backend, SectorContext, SplittingScheme};

fn grid() -> Arc<RadialGrid> {
    Arc::new(RadialGrid::new(30.0, 120).unwrap())
}

fn samples(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len)
        .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

fn backend() -> impl Strategy<Value = Backend> {
    prop_oneof![Just(Backend::Dense), Just(Backend::Chebyshev)]
}

fn scheme() -> impl Strategy<Value = SplittingScheme> {
    prop_oneof![Just(SplittingScheme::LieBa), Just(SplittingScheme::Strang)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn splitting_is_unitary(u in samples(120), ell in 0usize..4, b in backend(), s in scheme(), t in -1.0..1.0f64, steps in 1usize..20) {
        let g = grid();
        let ctx = SectorContext::new(g.clone(), ell, Coulomb::hydrogen(), b).unwrap();
        let out = evolve(s, &ctx, &u, t, steps).unwrap();
        prop_assert!(relative_eq!(g.norm(&out), g.norm(&u), max_relative = 1e-10));
    }

    #[test]
    fn exact_propagator_group_law(u in samples(120), ell in 0usize..4, b in backend(), s in -0.5..0.5f64, t in -0.5..0.5f64) {
        let g = grid();
        let ctx = SectorContext::new(g.clone(), ell, Coulomb::hydrogen(), b).unwrap();
        let h = ctx.hamiltonian();
        let two = h.propagate(&h.propagate(&u, s).unwrap(), t).unwrap();
        let one = h.propagate(&u, s + t).unwrap();
        let diff: Vec<Complex64> = two.iter().zip(&one).map(|(a, b)| a - b).collect();
        prop_assert!(g.norm(&diff) <= 1e-9 * g.norm(&u));
    }

    #[test]
    fn sector_operator_is_hermitian(u in samples(120), v in samples(120), ell in 0usize..6, attractive in any::<bool>()) {
        let g = grid();
        let c = if attractive { Coulomb::hydrogen() } else { Coulomb::free() };
        let op = SectorOperator::new(&g, ell, OperatorKind::FullHamiltonian, c);
        let lhs = g.inner(&u, &op.apply(&v).unwrap());
        let rhs = g.inner(&op.apply(&u).unwrap(), &v);
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn cutoff_partition_of_unity(beta in 0.05..0.95f64, lambda in -5.0..5.0f64) {
        let p = CutoffProfile::new(beta).unwrap();
        let (lo, hi) = (p.f_leq(lambda), p.f_gt(lambda));
        prop_assert!((lo + hi - 1.0).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&lo));
    }

    #[test]
    fn slope_is_scale_invariant(rate in 0.1..3.0f64, scale in 1e-6..1e6f64, n in 4usize..12) {
        let pts = |c: f64| (0..n).map(|k| {
            let t = 0.5f64.powi(k as i32);
            (t, c * t.powf(rate))
        }).collect::<Vec<_>>();
        let a = fit_slope(&ConvergenceSeries::new(pts(1.0)).unwrap(), 0..n).unwrap().0;
        let b = fit_slope(&ConvergenceSeries::new(pts(scale)).unwrap(), 0..n).unwrap().0;
        prop_assert!((a - rate).abs() <= 1e-10);
        prop_assert!((a - b).abs() <= 1e-10);
    }

    #[test]
    fn rate_grows_with_condition_index(s in scheme(), ell in 0usize..10) {
        prop_assert!(gamma_rate(s, ell) <= gamma_rate(s, ell + 1));
    }

    #[test]
    fn reduced_mass_identity(m_e in 1e-3..1e3f64, m_p in 1e-3..1e3f64) {
        let tb = reduce_two_body(m_e, m_p, 1.0, 1.0).unwrap();
        prop_assert!(relative_eq!(1.0 / tb.mu, 1.0 / m_e + 1.0 / m_p, max_relative = 1e-12));
        prop_assert!(relative_eq!(tb.total_mass, m_e + m_p, max_relative = 1e-14));
    }
}
