//! Lie and Strang compositions per sector and their long-time error.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectral::{
    check_len, diagonalize, potential_phases, ChebyshevPropagator, Coulomb, OperatorKind,
    Propagator, RadialGrid, SectorOperator,
};
use crate::states::MultiSectorState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplittingScheme {
    /// `e^{-iBt} e^{-iAt}`
    LieBa,
    /// `e^{-iAt/2} e^{-iBt} e^{-iAt/2}`
    Strang,
}

impl SplittingScheme {
    pub fn name(self) -> &'static str {
        match self {
            SplittingScheme::LieBa => "lie_ba",
            SplittingScheme::Strang => "strang",
        }
    }
}

impl fmt::Display for SplittingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SplittingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "lie" | "lie_ba" => Ok(SplittingScheme::LieBa),
            "strang" => Ok(SplittingScheme::Strang),
            other => invalid(format!("unknown scheme {other:?} (expected lie or strang)")),
        }
    }
}

/// Which exact propagator backs a sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Full eigendecomposition; `O(n²)` per application, `O(n³)` setup.
    Dense,
    /// Matrix-free Chebyshev expansion.
    Chebyshev,
    /// Dense up to [`DENSE_LIMIT`] nodes, Chebyshev beyond.
    #[default]
    Auto,
}

pub const DENSE_LIMIT: usize = 400;

fn build_propagator(op: &SectorOperator, backend: Backend) -> Result<Arc<dyn Propagator>> {
    let dense = match backend {
        Backend::Dense => true,
        Backend::Chebyshev => false,
        Backend::Auto => op.dim() <= DENSE_LIMIT,
    };
    Ok(if dense {
        Arc::new(diagonalize(op)?)
    } else {
        Arc::new(ChebyshevPropagator::new(op)?)
    })
}

/// Kinetic and full propagators for one angular momentum.
#[derive(Clone)]
pub struct SectorContext {
    grid: Arc<RadialGrid>,
    coulomb: Coulomb,
    ell: usize,
    kinetic: Arc<dyn Propagator>,
    hamiltonian: Arc<dyn Propagator>,
}

impl fmt::Debug for SectorContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SectorContext")
            .field("n", &self.grid.len())
            .field("r_max", &self.grid.r_max())
            .field("ell", &self.ell)
            .field("coulomb", &self.coulomb)
            .finish()
    }
}

impl SectorContext {
    pub fn new(grid: Arc<RadialGrid>, ell: usize, coulomb: Coulomb, backend: Backend) -> Result<Self> {
        let k = SectorOperator::new(&grid, ell, OperatorKind::KineticOnly, coulomb);
        let h = SectorOperator::new(&grid, ell, OperatorKind::FullHamiltonian, coulomb);
        Ok(Self {
            kinetic: build_propagator(&k, backend)?,
            hamiltonian: build_propagator(&h, backend)?,
            grid,
            coulomb,
            ell,
        })
    }

    /// Uses caller-supplied propagators, e.g. shared decompositions.
    pub fn from_parts(
        grid: Arc<RadialGrid>,
        ell: usize,
        coulomb: Coulomb,
        kinetic: Arc<dyn Propagator>,
        hamiltonian: Arc<dyn Propagator>,
    ) -> Result<Self> {
        if kinetic.dim() != grid.len() || hamiltonian.dim() != grid.len() {
            return invalid("propagator dimensions must match the grid");
        }
        Ok(Self {
            grid,
            coulomb,
            ell,
            kinetic,
            hamiltonian,
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn coulomb(&self) -> Coulomb {
        self.coulomb
    }

    pub fn kinetic(&self) -> &dyn Propagator {
        self.kinetic.as_ref()
    }

    pub fn hamiltonian(&self) -> &dyn Propagator {
        self.hamiltonian.as_ref()
    }
}

fn apply_phases(state: &mut [Complex64], phases: &[Complex64]) {
    state.iter_mut().zip(phases).for_each(|(z, p)| *z *= p);
}

/// One splitting step of length `t` (any sign).
pub fn trotter_step(
    scheme: SplittingScheme,
    kinetic: &dyn Propagator,
    grid: &RadialGrid,
    coulomb: Coulomb,
    state: &[Complex64],
    t: f64,
) -> Result<Vec<Complex64>> {
    check_len(grid, state)?;
    let phases = potential_phases(grid, coulomb, t);
    match scheme {
        SplittingScheme::LieBa => {
            let mut out = kinetic.propagate(state, t)?;
            apply_phases(&mut out, &phases);
            Ok(out)
        }
        SplittingScheme::Strang => {
            let mut out = kinetic.propagate(state, 0.5 * t)?;
            apply_phases(&mut out, &phases);
            kinetic.propagate(&out, 0.5 * t)
        }
    }
}

/// `L` steps of length `T / L`. Adjacent Strang half steps are merged.
pub fn evolve(
    scheme: SplittingScheme,
    ctx: &SectorContext,
    state: &[Complex64],
    total_time: f64,
    steps: usize,
) -> Result<Vec<Complex64>> {
    if steps == 0 {
        return invalid("step count must be at least 1");
    }
    check_len(&ctx.grid, state)?;
    let t = total_time / steps as f64;
    let phases = potential_phases(&ctx.grid, ctx.coulomb, t);
    let kin = ctx.kinetic();
    match scheme {
        SplittingScheme::LieBa => {
            let mut cur = state.to_vec();
            for _ in 0..steps {
                cur = kin.propagate(&cur, t)?;
                apply_phases(&mut cur, &phases);
            }
            Ok(cur)
        }
        SplittingScheme::Strang => {
            let mut cur = kin.propagate(state, 0.5 * t)?;
            apply_phases(&mut cur, &phases);
            for _ in 1..steps {
                cur = kin.propagate(&cur, t)?;
                apply_phases(&mut cur, &phases);
            }
            kin.propagate(&cur, 0.5 * t)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SectorError {
    pub ell: usize,
    pub m: i32,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrotterRun {
    pub scheme: SplittingScheme,
    #[serde(rename = "T")]
    pub total_time: f64,
    #[serde(rename = "L")]
    pub steps: usize,
    pub t_step: f64,
    pub error_l2: f64,
    pub per_sector_error: Vec<SectorError>,
}

/// Sector contexts keyed by `ℓ`, all on one grid.
pub type Contexts = BTreeMap<usize, SectorContext>;

pub fn build_contexts(
    grid: Arc<RadialGrid>,
    ells: &[usize],
    coulomb: Coulomb,
    backend: Backend,
) -> Result<Contexts> {
    ells.iter()
        .map(|&l| Ok((l, SectorContext::new(grid.clone(), l, coulomb, backend)?)))
        .collect()
}

fn lookup(contexts: &Contexts, ell: usize) -> Result<&SectorContext> {
    contexts
        .get(&ell)
        .ok_or_else(|| Error::InvalidArgument(format!("no propagators for sector ell = {ell}")))
}

/// `‖(S(T/L))^L ψ − e^{-iHT} ψ‖`, per sector and root-sum-square.
pub fn trotter_error(
    scheme: SplittingScheme,
    contexts: &Contexts,
    initial: &MultiSectorState,
    total_time: f64,
    steps: usize,
) -> Result<TrotterRun> {
    let mut runs = trotter_sweep(scheme, contexts, initial, total_time, &[steps])?;
    Ok(runs.remove(0))
}

/// [`trotter_error`] for several step counts, sharing the exact reference.
pub fn trotter_sweep(
    scheme: SplittingScheme,
    contexts: &Contexts,
    initial: &MultiSectorState,
    total_time: f64,
    steps: &[usize],
) -> Result<Vec<TrotterRun>> {
    let mut references = Vec::new();
    for s in initial.sectors() {
        let ctx = lookup(contexts, s.ell())?;
        if **ctx.grid() != **s.grid() {
            return invalid(format!("sector ell = {} lives on a different grid", s.ell()));
        }
        references.push((s, ctx, ctx.hamiltonian().propagate(s.u(), total_time)?));
    }
    let mut runs = Vec::with_capacity(steps.len());
    for &l in steps {
        let mut per = Vec::with_capacity(references.len());
        for (s, ctx, exact) in &references {
            let approx = evolve(scheme, ctx, s.u(), total_time, l)?;
            let diff: Vec<Complex64> = approx.iter().zip(exact).map(|(a, b)| a - b).collect();
            per.push(SectorError {
                ell: s.ell(),
                m: s.m(),
                error: ctx.grid().norm(&diff),
            });
        }
        let error_l2 = per.iter().map(|e| e.error * e.error).sum::<f64>().sqrt();
        runs.push(TrotterRun {
            scheme,
            total_time,
            steps: l,
            t_step: total_time / l as f64,
            error_l2,
            per_sector_error: per,
        });
    }
    Ok(runs)
}

/// `L = 2^lo, …, 2^hi`.
pub fn geometric_steps(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

/// Streams `scheme,ell,n_grid,r_max,T,L,t_step,error_l2` rows.
pub fn write_runs_csv<W: Write>(
    mut w: W,
    runs: &[TrotterRun],
    ell: usize,
    grid: &RadialGrid,
    header: bool,
) -> Result<()> {
    if header {
        writeln!(w, "scheme,ell,n_grid,r_max,T,L,t_step,error_l2")?;
    }
    for r in runs {
        writeln!(
            w,
            "{},{},{},{},{},{},{:e},{:e}",
            r.scheme,
            ell,
            grid.len(),
            grid.r_max(),
            r.total_time,
            r.steps,
            r.t_step,
            r.error_l2
        )?;
    }
    Ok(())
}
