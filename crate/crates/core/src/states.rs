//! Hydrogen orbitals, multi-sector states and the angular projections.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::norms;
use crate::spectral::{tridiag, RadialGrid};

/// How a sector profile can be regenerated on another grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recipe {
    Hydrogen { n: usize, ell: usize },
    Samples,
}

/// Reduced radial samples `u_j = r_j f(r_j)` in one `(ℓ, m)` sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorState {
    ell: usize,
    m: i32,
    u: Vec<Complex64>,
    grid: Arc<RadialGrid>,
    recipe: Recipe,
}

impl SectorState {
    pub fn new(grid: Arc<RadialGrid>, ell: usize, m: i32, u: Vec<Complex64>) -> Result<Self> {
        if m.unsigned_abs() as usize > ell {
            return invalid(format!("|m| must not exceed ell (ell = {ell}, m = {m})"));
        }
        if u.len() != grid.len() {
            return invalid(format!(
                "profile has {} samples but the grid has {} nodes",
                u.len(),
                grid.len()
            ));
        }
        if u.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return invalid("profile contains non-finite samples");
        }
        Ok(Self {
            ell,
            m,
            u,
            grid,
            recipe: Recipe::Samples,
        })
    }

    /// Samples `r f(r)` for a real radial profile `f`.
    pub fn from_profile(
        grid: Arc<RadialGrid>,
        ell: usize,
        m: i32,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let u = grid.sample_reduced(f);
        Self::new(grid, ell, m, u)
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn m(&self) -> i32 {
        self.m
    }

    pub fn u(&self) -> &[Complex64] {
        &self.u
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn recipe(&self) -> Recipe {
        self.recipe
    }

    pub fn norm(&self) -> f64 {
        self.grid.norm(&self.u)
    }

    /// Same sector, new samples; the result no longer carries a recipe.
    pub fn with_samples(&self, u: Vec<Complex64>) -> Result<Self> {
        Self::new(self.grid.clone(), self.ell, self.m, u)
    }

    /// Rescales to unit discrete norm.
    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm();
        if norm == 0.0 {
            return invalid("cannot normalize the zero profile");
        }
        self.u.iter_mut().for_each(|z| *z /= norm);
        Ok(self)
    }

    /// The same profile on another grid: regenerated from its recipe when it
    /// has one, otherwise through a cubic spline of `u` continued oddly
    /// through the origin.
    pub fn resample(&self, grid: Arc<RadialGrid>) -> Result<Self> {
        match self.recipe {
            Recipe::Hydrogen { n, ell } => {
                let fresh = hydrogen_state(n, ell, self.m, grid)?;
                let scale = self.norm();
                let u = fresh.u.iter().map(|z| z * scale).collect();
                Ok(Self { u, ..fresh })
            }
            Recipe::Samples => {
                let re: Vec<f64> = self.u.iter().map(|z| z.re).collect();
                let im: Vec<f64> = self.u.iter().map(|z| z.im).collect();
                let sre = OddSpline::new(&self.grid, &re);
                let sim = OddSpline::new(&self.grid, &im);
                let u = grid
                    .nodes()
                    .iter()
                    .map(|&r| Complex64::new(sre.eval(r), sim.eval(r)))
                    .collect();
                Self::new(grid, self.ell, self.m, u)
            }
        }
    }
}

/// Natural cubic spline through `(−r_j, −y_j) ∪ (r_j, y_j)`; zero past `r_max`.
struct OddSpline {
    h: f64,
    y: Vec<f64>,
    m: Vec<f64>,
    first: f64,
}

impl OddSpline {
    fn new(grid: &RadialGrid, y: &[f64]) -> Self {
        let n = y.len();
        let mut full: Vec<f64> = y.iter().rev().map(|v| -v).collect();
        full.extend_from_slice(y);
        full.push(0.0);
        let h = grid.h();
        let len = full.len();
        let mut m = vec![0.0; len];
        if len > 2 {
            let rhs: Vec<f64> = (1..len - 1)
                .map(|i| 6.0 * (full[i - 1] - 2.0 * full[i] + full[i + 1]) / (h * h))
                .collect();
            let d = vec![4.0; len - 2];
            let off = vec![1.0; len - 3];
            let inner = tridiag::solve_shifted(&d, &off, 0.0, &rhs);
            m[1..len - 1].copy_from_slice(&inner);
        }
        Self {
            h,
            y: full,
            m,
            first: -grid.nodes()[n - 1],
        }
    }

    fn eval(&self, r: f64) -> f64 {
        let x = (r - self.first) / self.h;
        if x < 0.0 || x >= (self.y.len() - 1) as f64 {
            return 0.0;
        }
        let i = x.floor() as usize;
        let a = (i + 1) as f64 - x;
        let b = x - i as f64;
        let h2 = self.h * self.h / 6.0;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h2
    }
}

/// Generalized Laguerre polynomial `L_k^{(α)}(x)` by the three-term recurrence.
pub fn laguerre(k: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for j in 1..k {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + alpha - x) * cur - (jf + alpha) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

fn ln_factorial(k: usize) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// Closed-form hydrogen radial function `R_{nℓ}(r)` with `a₀ = 1`.
pub fn hydrogen_radial(n: usize, ell: usize, r: f64) -> f64 {
    let nf = n as f64;
    let rho = 2.0 * r / nf;
    let ln_norm = 0.5
        * (3.0 * (2.0 / nf).ln() + ln_factorial(n - ell - 1)
            - (2.0 * nf).ln()
            - ln_factorial(n + ell));
    ln_norm.exp()
        * rho.powi(ell as i32)
        * (-rho / 2.0).exp()
        * laguerre(n - ell - 1, (2 * ell + 1) as f64, rho)
}

/// Bound state `Ψ_{n ℓ m}` as a reduced radial profile, renormalized on the grid.
///
/// The orbitals are eigenfunctions of `-Δ - 2/r` with eigenvalue `-1/n²`.
pub fn hydrogen_state(n: usize, ell: usize, m: i32, grid: Arc<RadialGrid>) -> Result<SectorState> {
    if n == 0 || ell >= n {
        return invalid(format!(
            "quantum numbers need n >= 1 and ell <= n - 1 (n = {n}, ell = {ell})"
        ));
    }
    if m.unsigned_abs() as usize > ell {
        return invalid(format!("|m| must not exceed ell (ell = {ell}, m = {m})"));
    }
    let u = grid.sample_reduced(|r| hydrogen_radial(n, ell, r));
    let mut state = SectorState::new(grid, ell, m, u)?.normalized()?;
    state.recipe = Recipe::Hydrogen { n, ell };
    Ok(state)
}

/// Smallest radius beyond which `|r R_{nℓ}(r)|` stays below `amplitude` times
/// its peak. Past `2n²` the profile decays monotonically.
pub fn truncation_radius(n: usize, ell: usize, amplitude: f64) -> Result<f64> {
    if n == 0 || ell >= n {
        return invalid(format!(
            "quantum numbers need n >= 1 and ell <= n - 1 (n = {n}, ell = {ell})"
        ));
    }
    if !(amplitude > 0.0 && amplitude < 1.0) {
        return invalid(format!("amplitude must lie in (0, 1), got {amplitude}"));
    }
    let u = |r: f64| (r * hydrogen_radial(n, ell, r)).abs();
    let outer = 2.0 * (n * n) as f64;
    let peak = (1..=4000).map(|i| u(outer * i as f64 / 4000.0)).fold(0.0, f64::max);
    let target = amplitude * peak;
    if u(outer) <= target {
        // Crossing sits inside the oscillatory region; scan back from `outer`.
        let mut r = outer;
        while r > 0.0 && u(r) <= target {
            r -= outer / 4000.0;
        }
        return Ok(r + outer / 4000.0);
    }
    let (mut lo, mut hi) = (outer, 2.0 * outer);
    while u(hi) > target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if u(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// A finite superposition over `(ℓ, m)` sectors sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSectorState {
    grid: Arc<RadialGrid>,
    sectors: BTreeMap<(usize, i32), SectorState>,
}

impl MultiSectorState {
    pub fn new(grid: Arc<RadialGrid>) -> Self {
        Self {
            grid,
            sectors: BTreeMap::new(),
        }
    }

    pub fn from_sectors(states: impl IntoIterator<Item = SectorState>) -> Result<Self> {
        let mut it = states.into_iter().peekable();
        let grid = match it.peek() {
            Some(s) => s.grid.clone(),
            None => return invalid("a multi-sector state needs at least one sector"),
        };
        let mut out = Self::new(grid);
        for s in it {
            out.insert(s)?;
        }
        Ok(out)
    }

    pub fn insert(&mut self, state: SectorState) -> Result<()> {
        if *state.grid != *self.grid {
            return invalid("all sectors must share one grid");
        }
        let key = (state.ell, state.m);
        if self.sectors.contains_key(&key) {
            return invalid(format!("duplicate sector (ell = {}, m = {})", key.0, key.1));
        }
        self.sectors.insert(key, state);
        Ok(())
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn sectors(&self) -> impl Iterator<Item = &SectorState> {
        self.sectors.values()
    }

    pub fn get(&self, ell: usize, m: i32) -> Option<&SectorState> {
        self.sectors.get(&(ell, m))
    }

    pub fn len(&self) -> usize {
        self.sectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sectors.is_empty()
    }

    /// Distinct angular momenta present.
    pub fn ells(&self) -> Vec<usize> {
        let mut ells: Vec<usize> = self.sectors.keys().map(|k| k.0).collect();
        ells.dedup();
        ells
    }

    pub fn norm_sqr(&self) -> f64 {
        self.sectors.values().map(|s| s.norm().powi(2)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn resample(&self, grid: Arc<RadialGrid>) -> Result<Self> {
        let mut out = Self::new(grid.clone());
        for s in self.sectors.values() {
            out.insert(s.resample(grid.clone())?)?;
        }
        Ok(out)
    }

    /// Writes `ell,m,r,re_u,im_u` rows, one per sector node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "ell,m,r,re_u,im_u")?;
        for s in self.sectors.values() {
            for (r, z) in self.grid.nodes().iter().zip(&s.u) {
                writeln!(w, "{},{},{:e},{:e},{:e}", s.ell, s.m, r, z.re, z.im)?;
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(f)
    }

    /// Reads the CSV written by [`write_csv`](Self::write_csv). The grid is
    /// recovered from the node positions and must be cell-centred.
    pub fn read_csv<R: BufRead>(reader: R, label: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: label.to_string(),
            line,
            message,
        };
        let mut rows: BTreeMap<(usize, i32), Vec<(f64, Complex64)>> = BTreeMap::new();
        let mut saw_header = false;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if !saw_header {
                let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
                if cols != ["ell", "m", "r", "re_u", "im_u"] {
                    return Err(parse_err(lineno, format!("expected header ell,m,r,re_u,im_u, got {trimmed}")));
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(parse_err(lineno, format!("expected 5 fields, got {}", fields.len())));
            }
            let ell: usize = fields[0]
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad ell {:?}", fields[0])))?;
            let m: i32 = fields[1]
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad m {:?}", fields[1])))?;
            let mut nums = [0.0; 3];
            for (slot, text) in nums.iter_mut().zip(&fields[2..]) {
                *slot = text
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad number {text:?}")))?;
            }
            rows.entry((ell, m))
                .or_default()
                .push((nums[0], Complex64::new(nums[1], nums[2])));
        }
        if !saw_header {
            return Err(parse_err(1, "missing header".into()));
        }
        let first = match rows.values().next() {
            Some(r) => r,
            None => return Err(parse_err(1, "no data rows".into())),
        };
        let n = first.len();
        let h = if n > 1 { first[1].0 - first[0].0 } else { 2.0 * first[0].0 };
        let grid = Arc::new(RadialGrid::new(h * n as f64, n)?);
        let mut out = Self::new(grid.clone());
        for ((ell, m), samples) in rows {
            if samples.len() != n {
                return Err(parse_err(0, format!("sector ({ell}, {m}) has {} rows, expected {n}", samples.len())));
            }
            for ((r, _), node) in samples.iter().zip(grid.nodes()) {
                if (r - node).abs() > 1e-9 * node.max(1.0) {
                    return Err(parse_err(0, format!("sector ({ell}, {m}): node {r} is off the cell-centred grid")));
                }
            }
            let u = samples.into_iter().map(|(_, z)| z).collect();
            out.insert(SectorState::new(grid.clone(), ell, m, u)?)?;
        }
        Ok(out)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_csv(f, &path.display().to_string())
    }
}

impl From<SectorState> for MultiSectorState {
    fn from(s: SectorState) -> Self {
        let mut out = Self::new(s.grid.clone());
        out.sectors.insert((s.ell, s.m), s);
        out
    }
}

/// `P_{≥ℓ}`: keeps the sectors of angular momentum at least `ell`.
pub fn project_min_ell(state: &MultiSectorState, ell: usize) -> MultiSectorState {
    MultiSectorState {
        grid: state.grid.clone(),
        sectors: state
            .sectors
            .iter()
            .filter(|(k, _)| k.0 >= ell)
            .map(|(k, v)| (*k, v.clone()))
            .collect(),
    }
}

/// Growth of the squared weighted norm per 2× refinement that is read as
/// divergence.
pub const DIVERGENCE_FACTOR: f64 = 4.0;

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionCheck {
    pub supported: bool,
    /// `None` when the refinement probe flags divergence.
    pub weighted_h2: Option<f64>,
    /// Weighted norms on the base, 2× and 4× grids.
    pub probe: [f64; 3],
    pub verdict: bool,
}

/// Tests whether `state` lies in sectors `≥ ell` with `|x|^{-ℓ} ψ ∈ H²`.
///
/// `threshold` bounds the admissible weighted norm itself; pass
/// `f64::INFINITY` to rely on the refinement probe alone.
pub fn check_assumption(state: &MultiSectorState, ell: usize, threshold: f64) -> Result<AssumptionCheck> {
    if ell == 0 {
        return invalid("the state condition needs ell >= 1");
    }
    let projected = project_min_ell(state, ell);
    let dropped = (state.norm_sqr() - projected.norm_sqr()).max(0.0).sqrt();
    let supported = dropped <= 1e-10 * state.norm().max(f64::MIN_POSITIVE);

    let weighted = |s: &MultiSectorState| -> f64 {
        s.sectors()
            .map(|sec| norms::weighted_h2_norm(sec, ell).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let base = weighted(state);
    let g2 = Arc::new(state.grid.refined(2)?);
    let g4 = Arc::new(state.grid.refined(4)?);
    let w2 = weighted(&state.resample(g2)?);
    let w4 = weighted(&state.resample(g4)?);
    let probe = [base, w2, w4];

    let growth = |a: f64, b: f64| if a > 0.0 { (b / a).powi(2) } else if b > 0.0 { f64::INFINITY } else { 1.0 };
    let diverges = growth(base, w2) > DIVERGENCE_FACTOR || growth(w2, w4) > DIVERGENCE_FACTOR;
    let weighted_h2 = if diverges || !w4.is_finite() { None } else { Some(w4) };
    let verdict = supported && weighted_h2.is_some_and(|w| w <= threshold);
    Ok(AssumptionCheck {
        supported,
        weighted_h2,
        probe,
        verdict,
    })
}
