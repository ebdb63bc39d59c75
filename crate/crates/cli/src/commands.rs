use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::Serialize;
use serde_json::json;
use trotterlab::bounds::{c_n, c_tilde_n, rate_table, reduce_two_body, error_bound};
use trotterlab::cutoff::{cutoff_constants, CutoffProfile, DEFAULT_BETA, DEFAULT_SAMPLES, UNIMPLEMENTED_CONSTANTS};
use trotterlab::cutoff::{compute_cf1_with, compute_cf2_with};
use trotterlab::norms::{hardy_norm_estimate, key_observation_monitor, lattice, MonitorReport};
use trotterlab::oracle::run_check;
use trotterlab::ratefit::{assess_with, ConvergenceSeries, RateReport, SeriesMeta};
use trotterlab::spectral::RadialGrid;
use trotterlab::states::{check_assumption, hydrogen_state, AssumptionCheck, MultiSectorState};
use trotterlab::trotter::{build_contexts, trotter_sweep, write_runs_csv, Backend, SectorContext, TrotterRun};

use crate::config::{ConfigError, ExperimentConfig, OracleConfig, RawConfig, StateConfig, StateSource};
use crate::plot::plot_script;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numeric(String),
    /// The command ran but its verdict is negative.
    Assessment(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Assessment(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Numeric(m) => write!(f, "numeric failure: {m}"),
            Failure::Assessment(m) => write!(f, "assessment failed: {m}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<trotterlab::Error> for Failure {
    fn from(e: trotterlab::Error) -> Self {
        use trotterlab::Error as E;
        match e {
            E::InvalidArgument(_) | E::Parse { .. } => Failure::Config(e.to_string()),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numeric(format!("i/o: {e}"))
    }
}

pub type Outcome = Result<(), Failure>;

pub struct Options {
    pub out: Option<PathBuf>,
    pub jobs: usize,
}

fn output_path(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json(path: &Path, value: &impl Serialize) -> Outcome {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Numeric(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Loads a state file once and resamples it per grid; hydrogen recipes are
/// evaluated directly on each grid.
struct StateFactory {
    source: StateSource,
    loaded: Option<MultiSectorState>,
}

impl StateFactory {
    fn new(source: &StateSource) -> Result<Self, Failure> {
        let loaded = match source {
            StateSource::File(p) => Some(MultiSectorState::load_csv(p)?),
            StateSource::Hydrogen { .. } => None,
        };
        Ok(Self {
            source: source.clone(),
            loaded,
        })
    }

    fn on(&self, grid: Arc<RadialGrid>) -> Result<MultiSectorState, Failure> {
        match (&self.source, &self.loaded) {
            (StateSource::Hydrogen { n, ell, m }, _) => Ok(MultiSectorState::from(hydrogen_state(*n, *ell, *m, grid)?)),
            (_, Some(s)) => Ok(s.resample(grid)?),
            (StateSource::File(p), None) => Err(Failure::Config(format!("state file {} was not loaded", p.display()))),
        }
    }
}

/// Runs `work` over `items` on at most `jobs` threads, keeping input order.
fn parallel_map<T: Sync, R: Send>(items: &[T], jobs: usize, work: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, items.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = work(&items[i]);
                slots.lock().expect("result slots")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots")
        .into_iter()
        .map(|r| r.expect("every item processed"))
        .collect()
}

struct GridRuns {
    grid: Arc<RadialGrid>,
    runs: Vec<TrotterRun>,
}

fn sweep_grid(cfg: &ExperimentConfig, states: &StateFactory, n: usize) -> Result<GridRuns, Failure> {
    let grid = Arc::new(RadialGrid::new(cfg.r_max, n)?);
    let state = states.on(grid.clone())?;
    let contexts = build_contexts(grid.clone(), &state.ells(), cfg.coulomb, cfg.backend)?;
    let runs = trotter_sweep(cfg.scheme, &contexts, &state, cfg.total_time, &cfg.steps)?;
    Ok(GridRuns { grid, runs })
}

pub fn rates(raw: &RawConfig, opts: &Options) -> Outcome {
    let mut cfg = ExperimentConfig::from_raw(raw)?;
    if let Some(out) = &opts.out {
        cfg.output = out.clone();
    }
    let states = StateFactory::new(&cfg.state)?;
    let results = parallel_map(&cfg.grid_n, opts.jobs, |&n| sweep_grid(&cfg, &states, n));

    let mut reports: Vec<RateReport> = Vec::new();
    let mut series_all = Vec::new();
    let mut grids = Vec::new();
    for (res, &n) in results.into_iter().zip(&cfg.grid_n) {
        let GridRuns { grid, runs } = res?;
        let series = ConvergenceSeries::new(runs.iter().map(|r| (r.t_step, r.error_l2)).collect())?.with_meta(
            SeriesMeta {
                scheme: cfg.scheme,
                state: cfg.state.label(),
                ell_condition: cfg.ell_condition,
                n,
                r_max: cfg.r_max,
                total_time: cfg.total_time,
            },
        );
        reports.push(assess_with(&series, cfg.predicted, cfg.tol, cfg.crossover)?);
        series_all.push(series);
        grids.push((grid, runs));
    }

    let runs_path = output_path(&cfg.output, "_runs.csv");
    let mut w = create(&runs_path)?;
    for (i, (grid, runs)) in grids.iter().enumerate() {
        write_runs_csv(&mut w, runs, cfg.ell_condition, grid, i == 0)?;
    }
    w.flush()?;

    let series_path = output_path(&cfg.output, "_series.csv");
    let mut w = create(&series_path)?;
    for (i, s) in series_all.iter().enumerate() {
        s.write_csv(&mut w, i == 0)?;
    }
    w.flush()?;

    let finest = reports.last().expect("grid_n is non-empty");
    let passed = finest.passed();
    write_json(
        &output_path(&cfg.output, "_report.json"),
        &json!({
            "assessed_n": cfg.grid_n.last(),
            "seed": cfg.seed,
            "verdict": finest.verdict,
            "reports": reports,
        }),
    )?;

    let plot_path = output_path(&cfg.output, "_plot.py");
    let mut w = create(&plot_path)?;
    let csv_name = series_path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    w.write_all(plot_script(&csv_name, cfg.predicted.value(), &cfg.state.label()).as_bytes())?;
    w.flush()?;

    for (r, &n) in reports.iter().zip(&cfg.grid_n) {
        println!(
            "n={n:<6} global {:+.3}  pre-crossover {:+.3}  crossover {}  predicted {}  {:?}",
            r.global_slope,
            r.pre_crossover_slope,
            r.crossover_t.map_or("none".to_string(), |t| format!("{t:.3e}")),
            r.predicted_rate,
            r.verdict
        );
    }
    if passed {
        Ok(())
    } else {
        Err(Failure::Assessment(format!(
            "slope {:.3} on n = {} is outside {} ± {}",
            finest.pre_crossover_slope,
            cfg.grid_n.last().expect("non-empty"),
            cfg.predicted,
            cfg.tol
        )))
    }
}

pub fn oracle(raw: &RawConfig, opts: &Options) -> Outcome {
    let cfg = OracleConfig::from_raw(raw)?;
    let mut reports = Vec::new();
    for &check in &cfg.checks {
        let r = run_check(check, cfg.dim, cfg.seed, cfg.t, cfg.nodes, cfg.steps)?;
        println!(
            "{:<9} residual {:.3e}  tolerance {:.0e}  {}",
            format!("{:?}", r.check).to_lowercase(),
            r.residual,
            r.tolerance,
            if r.pass { "pass" } else { "FAIL" }
        );
        reports.push(r);
    }
    if let Some(prefix) = prefix(raw, opts) {
        write_json(&output_path(&prefix, "_oracle.json"), &reports)?;
    }
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{:?}", r.check).to_lowercase())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assessment(format!("checks failed: {}", failed.join(", "))))
    }
}

fn prefix(raw: &RawConfig, opts: &Options) -> Option<PathBuf> {
    opts.out.clone().or_else(|| raw.raw("output").map(|o| raw.resolve(o)))
}

pub fn constants(raw: &RawConfig, opts: &Options) -> Outcome {
    let particles = raw.list("particles")?.unwrap_or_else(|| vec![1, 2, 4, 8, 16, 32, 64]);
    let c0: f64 = raw.get_or("c0", 1.0)?;
    let abs_const = raw.positive("abs_const", Some(1.0))?;
    let total_time = raw.positive("T", Some(1.0))?;
    let t_step = raw.positive("t_step", Some(1e-3))?;
    let h2 = raw.positive("h2_norm", Some(1.0))?;
    let ell_max: usize = raw.get_or("ell_max", 4)?;

    let mut rows = Vec::new();
    println!("{:>5} {:>14} {:>14} {:>14} {:>14}", "N", "C_N", "C~_N", "headline", "three-term");
    for &n in &particles {
        let cn = c_n(n, c0)?;
        let ct = c_tilde_n(n, c0, abs_const)?;
        let bound = error_bound(n, c0, abs_const, total_time, t_step, h2)?;
        println!("{n:>5} {cn:>14.6e} {ct:>14.6e} {:>14.6e} {:>14.6e}", bound.headline, bound.three_term);
        rows.push(json!({ "N": n, "c_n": cn, "c_tilde_n": ct, "bound": bound }));
    }
    let two_body = reduce_two_body(
        raw.get_or("m_e", 1.0)?,
        raw.get_or("m_p", 1_836.152_673_43)?,
        raw.get_or("hbar", 1.0)?,
        raw.get_or("e_sq", 1.0)?,
    )?;
    println!(
        "two-body: M = {}, mu = {:.9}, c = {}, time scale = {:.9}",
        two_body.total_mass, two_body.mu, two_body.c_eff, two_body.time_scale
    );
    if let Some(prefix) = prefix(raw, opts) {
        write_json(
            &output_path(&prefix, "_constants.json"),
            &json!({
                "c0": c0,
                "abs_const": abs_const,
                "T": total_time,
                "t_step": t_step,
                "particles": rows,
                "rate_table": rate_table(ell_max),
                "two_body": two_body,
            }),
        )?;
    }
    Ok(())
}

pub fn hardy(raw: &RawConfig, opts: &Options) -> Outcome {
    let grid_n = raw.require_list("grid_n")?;
    let r_max = raw.positive("r_max", None)?;
    let ell_max: usize = raw.get_or("ell_max", 0)?;
    let values = parallel_map(&grid_n, opts.jobs, |&n| -> Result<f64, Failure> {
        Ok(hardy_norm_estimate(&RadialGrid::new(r_max, n)?, ell_max)?)
    });
    let mut rows = Vec::new();
    for (v, &n) in values.into_iter().zip(&grid_n) {
        let v = v?;
        println!("n={n:<6} r_max={r_max}  estimate {v:.6}");
        rows.push(json!({ "n": n, "r_max": r_max, "estimate": v }));
    }
    if let Some(prefix) = prefix(raw, opts) {
        write_json(&output_path(&prefix, "_hardy.json"), &json!({ "ell_max": ell_max, "sequence": rows }))?;
    }
    Ok(())
}

pub fn cutoff(raw: &RawConfig, opts: &Options) -> Outcome {
    let beta = raw.positive("beta", Some(DEFAULT_BETA))?;
    let samples: usize = raw.get_or("samples", DEFAULT_SAMPLES)?;
    let profile = CutoffProfile::new(beta)?;
    let mut k = cutoff_constants(&profile);
    if samples != DEFAULT_SAMPLES {
        k.c_f1 = compute_cf1_with(&profile, samples);
        k.c_f2 = compute_cf2_with(&profile, samples);
    }
    let within = k.c_f1 <= k.c_f1_bound && k.c_f2 <= k.c_f2_bound;
    println!("C0   = {:.12}", k.c0);
    println!("C_F1 = {:.12} (bound {:.6e})", k.c_f1, k.c_f1_bound);
    println!("C_F2 = {:.12} (bound {:.12})", k.c_f2, k.c_f2_bound);
    println!("not computed: {}", UNIMPLEMENTED_CONSTANTS.join(", "));
    if let Some(prefix) = prefix(raw, opts) {
        write_json(
            &output_path(&prefix, "_cutoff.json"),
            &json!({
                "constants": k,
                "samples": samples,
                "within_bounds": within,
                "not_computed": UNIMPLEMENTED_CONSTANTS,
            }),
        )?;
    }
    if within {
        Ok(())
    } else {
        Err(Failure::Assessment("cutoff constants exceed their closed-form bounds".into()))
    }
}

#[derive(Serialize)]
struct MonitorRow {
    n: usize,
    ell: usize,
    m: i32,
    initial_weighted_h2: f64,
    sup_ratio: f64,
    c_ell_c: f64,
}

pub fn monitor(raw: &RawConfig, opts: &Options) -> Outcome {
    let mut cfg = StateConfig::from_raw(raw)?;
    if let Some(out) = &opts.out {
        cfg.output = out.clone();
    }
    let times = lattice(raw.positive("times_end", Some(10.0))?, raw.get_or("times_n", 21)?);
    let free = lattice(raw.positive("free_end", Some(2.0))?, raw.get_or("free_n", 5)?);
    let states = StateFactory::new(&cfg.state)?;

    type GridReports = Vec<(usize, i32, MonitorReport)>;
    let results = parallel_map(&cfg.grid_n, opts.jobs, |&n| -> Result<GridReports, Failure> {
        let grid = Arc::new(RadialGrid::new(cfg.r_max, n)?);
        let state = states.on(grid.clone())?;
        let mut out = Vec::new();
        for sector in state.sectors() {
            let ctx = SectorContext::new(grid.clone(), sector.ell(), cfg.coulomb, Backend::Auto)?;
            let report = key_observation_monitor(
                sector,
                cfg.ell_condition,
                ctx.hamiltonian(),
                ctx.kinetic(),
                &times,
                &free,
                cfg.coulomb.c,
            )?;
            out.push((sector.ell(), sector.m(), report));
        }
        Ok(out)
    });

    let mut rows = Vec::new();
    for (res, &n) in results.into_iter().zip(&cfg.grid_n) {
        for (ell, m, report) in res? {
            let mut w = create(&output_path(&cfg.output, &format!("_monitor_n{n}_l{ell}_m{m}.csv")))?;
            report.write_csv(&mut w)?;
            w.flush()?;
            println!(
                "n={n:<6} ell={ell} m={m}  initial {:.6e}  sup ratio {:.6}  (C_ell,c = {:.4})",
                report.initial_weighted_h2, report.sup_ratio, report.c_ell_c
            );
            rows.push(MonitorRow {
                n,
                ell,
                m,
                initial_weighted_h2: report.initial_weighted_h2,
                sup_ratio: report.sup_ratio,
                c_ell_c: report.c_ell_c,
            });
        }
    }
    write_json(
        &output_path(&cfg.output, "_monitor.json"),
        &json!({ "ell_condition": cfg.ell_condition, "times": times, "free_times": free, "runs": rows }),
    )?;
    Ok(())
}

pub fn check_state(raw: &RawConfig, opts: &Options) -> Outcome {
    let mut cfg = StateConfig::from_raw(raw)?;
    if let Some(out) = &opts.out {
        cfg.output = out.clone();
    }
    let threshold: f64 = raw.get_or("norm_threshold", f64::INFINITY)?;
    let states = StateFactory::new(&cfg.state)?;
    let mut rows: Vec<serde_json::Value> = Vec::new();
    for &n in &cfg.grid_n {
        let grid = Arc::new(RadialGrid::new(cfg.r_max, n)?);
        let state = states.on(grid)?;
        let check: AssumptionCheck = check_assumption(&state, cfg.ell_condition, threshold)?;
        println!(
            "n={n:<6} supported {}  weighted H2 {}  probe [{:.4e}, {:.4e}, {:.4e}]  verdict {}",
            check.supported,
            check.weighted_h2.map_or("divergent".to_string(), |v| format!("{v:.6e}")),
            check.probe[0],
            check.probe[1],
            check.probe[2],
            check.verdict
        );
        rows.push(json!({ "n": n, "check": check }));
    }
    write_json(
        &output_path(&cfg.output, "_check_state.json"),
        &json!({ "state": cfg.state.label(), "ell_condition": cfg.ell_condition, "results": rows }),
    )?;
    Ok(())
}
