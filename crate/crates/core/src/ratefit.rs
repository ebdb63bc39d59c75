//! Log-log slope fits, crossover detection and rate reports.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::bounds::Rational;
use crate::error::{invalid, Error, Result};
use crate::trotter::SplittingScheme;

pub const DEFAULT_WINDOW: usize = 4;
pub const DEFAULT_CROSSOVER_THRESHOLD: f64 = 0.35;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub scheme: SplittingScheme,
    pub state: String,
    pub ell_condition: usize,
    pub n: usize,
    pub r_max: f64,
    #[serde(rename = "T")]
    pub total_time: f64,
}

/// `(t_step, error)` samples, coarsest step first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSeries {
    pub points: Vec<(f64, f64)>,
    pub meta: Option<SeriesMeta>,
}

impl ConvergenceSeries {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.iter().any(|&(t, e)| !(t > 0.0 && t.is_finite() && e > 0.0 && e.is_finite())) {
            return invalid("step sizes and errors must be positive and finite");
        }
        if points.windows(2).any(|w| w[1].0 >= w[0].0) {
            return invalid("step sizes must be strictly decreasing");
        }
        Ok(Self { points, meta: None })
    }

    pub fn with_meta(mut self, meta: SeriesMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn t_steps(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    /// Rows `scheme,ell,n,r_max,T,L,t,error`. `L` is recovered as `T / t`.
    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> Result<()> {
        let meta = self
            .meta
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("series has no metadata to write".into()))?;
        if header {
            writeln!(w, "scheme,ell,n,r_max,T,L,t,error")?;
        }
        for &(t, e) in &self.points {
            let steps = (meta.total_time / t).round() as u64;
            writeln!(
                w,
                "{},{},{},{},{},{},{:e},{:e}",
                meta.scheme, meta.ell_condition, meta.n, meta.r_max, meta.total_time, steps, t, e
            )?;
        }
        Ok(())
    }

    /// Reads every series in a CSV, grouped by `(scheme, ell, n, r_max, T)` in
    /// order of first appearance.
    pub fn read_csv<R: BufRead>(reader: R, label: &str) -> Result<Vec<Self>> {
        let err = |line: usize, message: String| Error::Parse {
            path: label.to_string(),
            line,
            message,
        };
        let mut out: Vec<Self> = Vec::new();
        let mut lines = reader.lines().enumerate();
        match lines.next() {
            Some((_, Ok(h))) if h.trim() == "scheme,ell,n,r_max,T,L,t,error" => {}
            Some((_, Ok(h))) => return Err(err(1, format!("unexpected header {h:?}"))),
            Some((_, Err(e))) => return Err(e.into()),
            None => return Err(err(1, "empty file".into())),
        }
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 8 {
                return Err(err(lineno, format!("expected 8 fields, got {}", f.len())));
            }
            let num = |i: usize| -> Result<f64> {
                f[i].parse().map_err(|_| err(lineno, format!("bad number {:?}", f[i])))
            };
            let scheme: SplittingScheme = f[0].parse().map_err(|_| err(lineno, format!("bad scheme {:?}", f[0])))?;
            let meta = SeriesMeta {
                scheme,
                state: String::new(),
                ell_condition: num(1)? as usize,
                n: num(2)? as usize,
                r_max: num(3)?,
                total_time: num(4)?,
            };
            let point = (num(6)?, num(7)?);
            match out.iter_mut().find(|s| s.meta.as_ref() == Some(&meta)) {
                Some(s) => s.points.push(point),
                None => out.push(Self {
                    points: vec![point],
                    meta: Some(meta),
                }),
            }
        }
        for s in &mut out {
            s.points.sort_by(|a, b| b.0.total_cmp(&a.0));
            let fresh = Self::new(std::mem::take(&mut s.points)).map_err(|e| err(0, e.to_string()))?;
            s.points = fresh.points;
        }
        Ok(out)
    }
}

/// Least-squares slope and `r²` of `log(error)` against `log(t)` over
/// `points[range]`.
pub fn fit_slope(series: &ConvergenceSeries, range: std::ops::Range<usize>) -> Result<(f64, f64)> {
    if range.end > series.len() || range.len() < 4 {
        return invalid(format!(
            "fit window {range:?} needs at least 4 points inside a series of {}",
            series.len()
        ));
    }
    let pts = &series.points[range];
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-24 * mx.abs().max(1.0) {
        return invalid("degenerate fit window: all step sizes coincide");
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).min(1.0) };
    Ok((slope, r2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowSlope {
    pub t_lo: f64,
    pub t_hi: f64,
    pub slope: f64,
    pub r2: f64,
}

/// Slopes over every run of `width` consecutive points.
pub fn window_slopes(series: &ConvergenceSeries, width: usize) -> Result<Vec<WindowSlope>> {
    if series.len() < width {
        return Ok(Vec::new());
    }
    (0..=series.len() - width)
        .map(|i| {
            let (slope, r2) = fit_slope(series, i..i + width)?;
            Ok(WindowSlope {
                t_lo: series.points[i + width - 1].0,
                t_hi: series.points[i].0,
                slope,
                r2,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossoverOptions {
    pub window: usize,
    pub threshold: f64,
}

impl Default for CrossoverOptions {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            threshold: DEFAULT_CROSSOVER_THRESHOLD,
        }
    }
}

/// Index of the last point of the first window whose successor's slope
/// differs by more than the threshold.
fn crossover_index(series: &ConvergenceSeries, opts: CrossoverOptions) -> Result<Option<usize>> {
    if series.len() < 2 * opts.window {
        return Ok(None);
    }
    let w = window_slopes(series, opts.window)?;
    Ok(w
        .windows(2)
        .position(|p| (p[1].slope - p[0].slope).abs() > opts.threshold)
        .map(|i| i + opts.window - 1))
}

/// Step size at which consecutive window slopes jump; `None` for fewer than
/// eight points or a single regime.
pub fn detect_crossover(series: &ConvergenceSeries) -> Result<Option<f64>> {
    detect_crossover_with(series, CrossoverOptions::default())
}

pub fn detect_crossover_with(series: &ConvergenceSeries, opts: CrossoverOptions) -> Result<Option<f64>> {
    Ok(crossover_index(series, opts)?.map(|i| series.points[i].0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub global_slope: f64,
    pub global_r2: f64,
    pub window_slopes: Vec<WindowSlope>,
    pub crossover_t: Option<f64>,
    /// Points used for the assessed fit, coarsest first: `[start, end)`.
    pub pre_crossover_window: (usize, usize),
    pub pre_crossover_slope: f64,
    pub predicted_rate: Rational,
    pub tolerance: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<SeriesMeta>,
}

impl RateReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Compares the slope of the coarsest window, extended up to the crossover,
/// against the predicted rate.
pub fn assess(series: &ConvergenceSeries, predicted: Rational, tol: f64) -> Result<RateReport> {
    assess_with(series, predicted, tol, CrossoverOptions::default())
}

pub fn assess_with(
    series: &ConvergenceSeries,
    predicted: Rational,
    tol: f64,
    opts: CrossoverOptions,
) -> Result<RateReport> {
    let n = series.len();
    if n < opts.window {
        return invalid(format!("need at least {} points to assess, got {n}", opts.window));
    }
    let (global_slope, global_r2) = fit_slope(series, 0..n)?;
    let cross = crossover_index(series, opts)?;
    let end = cross.map_or(n, |i| (i + 1).max(opts.window));
    let (slope, _) = fit_slope(series, 0..end)?;
    let verdict = if (slope - predicted.value()).abs() <= tol {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(RateReport {
        global_slope,
        global_r2,
        window_slopes: window_slopes(series, opts.window)?,
        crossover_t: cross.map(|i| series.points[i].0),
        pre_crossover_window: (0, end),
        pre_crossover_slope: slope,
        predicted_rate: predicted,
        tolerance: tol,
        verdict,
        meta: series.meta.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn series(mut f: impl FnMut(f64) -> f64) -> ConvergenceSeries {
        let pts = (4..=14).map(|k| {
            let t = 0.5f64.powi(k);
            (t, f(t))
        });
        ConvergenceSeries::new(pts.collect()).unwrap()
    }

    fn glued() -> ConvergenceSeries {
        // Kink at t = 2^-7 ≈ 7.8e-3.
        let tk = 0.5f64.powi(7);
        series(|t| if t > tk { t.powf(0.25) } else { tk.powf(0.25) * (t / tk).powi(2) })
    }

    #[test]
    fn exact_power_laws() {
        let (s, r2) = fit_slope(&series(|t| 3.0 * t.powf(0.25)), 0..11).unwrap();
        assert!((s - 0.25).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
        let (s, _) = fit_slope(&series(|t| t * t), 2..8).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_windows() {
        let s = series(|t| t);
        assert!(fit_slope(&s, 0..3).is_err());
        assert!(fit_slope(&s, 9..13).is_err());
        assert!(ConvergenceSeries::new(vec![(0.1, 1.0), (0.1, 0.5)]).is_err());
        assert!(ConvergenceSeries::new(vec![(0.1, 0.0)]).is_err());
    }

    #[test]
    fn glued_fixture() {
        let s = glued();
        let w = window_slopes(&s, 4).unwrap();
        assert!((w[0].slope - 0.25).abs() < 1e-12);
        assert!((w.last().unwrap().slope - 2.0).abs() < 1e-12);
        let c = detect_crossover(&s).unwrap().unwrap();
        assert!((c.log2() - (-7.0)).abs() <= 1.0, "{c}");
        let rep = assess(&s, Rational::new(1, 4), 0.1).unwrap();
        assert!(rep.passed());
        assert!((rep.pre_crossover_slope - 0.25).abs() < 1e-12);
    }

    #[test]
    fn pure_law_has_no_crossover() {
        assert!(detect_crossover(&series(|t| t.sqrt())).unwrap().is_none());
        let short = ConvergenceSeries::new(vec![(1.0, 1.0), (0.5, 0.1)]).unwrap();
        assert!(detect_crossover(&short).unwrap().is_none());
    }

    #[test]
    fn assess_verdicts() {
        assert!(assess(&series(|t| t.powf(0.25)), Rational::new(1, 4), 0.1).unwrap().passed());
        assert!(!assess(&series(|t| t * t), Rational::new(1, 4), 0.1).unwrap().passed());
    }

    #[test]
    fn noise_calibration() {
        // 2% multiplicative noise on a single regime must not look like a crossover.
        let noise = Normal::new(0.0, 0.02).unwrap();
        let mut false_alarms = 0;
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = series(|t| t.powf(0.75) * (1.0 + noise.sample(&mut rng)));
            if detect_crossover(&s).unwrap().is_some() {
                false_alarms += 1;
            }
        }
        assert!(false_alarms <= 10, "{false_alarms} false alarms");
    }

    #[test]
    fn csv_round_trip() {
        let meta = SeriesMeta {
            scheme: SplittingScheme::Strang,
            state: "hydrogen:1:0:0".into(),
            ell_condition: 0,
            n: 1000,
            r_max: 60.0,
            total_time: 1.0,
        };
        let s = glued().with_meta(meta);
        let mut buf = Vec::new();
        s.write_csv(&mut buf, true).unwrap();
        let back = ConvergenceSeries::read_csv(&buf[..], "mem").unwrap();
        assert_eq!(back.len(), 1);
        for (a, b) in back[0].points.iter().zip(&s.points) {
            assert!((a.0 - b.0).abs() < 1e-15 && (a.1 / b.1 - 1.0).abs() < 1e-12);
        }
    }
}
