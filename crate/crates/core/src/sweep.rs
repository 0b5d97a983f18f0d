//! Parameter scans over `g5`, `V0` or `S` across disorder seeds, ensemble
//! statistics, and the two sweep-level analyses: locating the abrupt jump in
//! `Δx(g5)` and comparing peak-height oscillation on either side of a segment count.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::disorder::RandomPotential;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::observables::{diagnostics, Diagnostics};
use crate::propagator::{ground_state, GroundStateResult, SolverParams};
use crate::tailfit::{classify_regime, fit_tails, FitWindow, Regime, TailFit};

pub const DEFAULT_JUMP_FACTOR: f64 = 5.0;
pub const DEFAULT_RUN_BUDGET: usize = 100_000;

pub const CSV_HEADER: &str = "variable,g5,V0,S,seed,converged,steps,mean_x,peak_x,peak_height,delta_x,l_left,l_right,r2_exp_left,r2_exp_right,sigma_gauss,r2_gauss,localized,regime,status";

pub const AGG_CSV_HEADER: &str = "variable,value,runs,failed_runs,failed_fits,delta_x_median,delta_x_iqr,l_left_median,l_left_iqr,l_right_median,l_right_iqr,peak_height_median,peak_height_iqr";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SweepVariable {
    G5,
    V0,
    S,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::G5 => "g5",
            SweepVariable::V0 => "V0",
            SweepVariable::S => "S",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g5" => Ok(SweepVariable::G5),
            "V0" | "v0" => Ok(SweepVariable::V0),
            "S" | "s" => Ok(SweepVariable::S),
            other => Err(Error::config(
                "sweep",
                format!("unknown sweep variable `{other}`"),
            )),
        }
    }
}

/// Everything a single relaxation needs apart from the disorder seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub half_width: f64,
    pub dx: f64,
    pub v0: f64,
    pub segments: usize,
    pub solver: SolverParams,
    pub window: FitWindow,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            half_width: 30.0,
            dx: 0.04,
            v0: 0.0,
            segments: 300,
            solver: SolverParams::default(),
            window: FitWindow::default(),
        }
    }
}

impl Scenario {
    pub fn g5(&self) -> f64 {
        self.solver.g5
    }

    /// Copy with the swept parameter set to `value`.
    pub fn with_value(&self, variable: SweepVariable, value: f64) -> Result<Scenario> {
        let mut out = self.clone();
        match variable {
            SweepVariable::G5 => out.solver.g5 = value,
            SweepVariable::V0 => out.v0 = value,
            SweepVariable::S => out.segments = segment_count(value)?,
        }
        Ok(out)
    }
}

fn segment_count(value: f64) -> Result<usize> {
    if value.fract() != 0.0 || value < 1.0 || !value.is_finite() {
        return Err(Error::config(
            "S",
            format!("segment count must be a positive integer, got {value}"),
        ));
    }
    Ok(value as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    /// Non-swept parameters.
    pub base: Scenario,
    pub seeds: Vec<u64>,
    /// Upper bound on `values.len() * seeds.len()`.
    pub budget: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("values", "sweep needs at least one value"));
        }
        if self.values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config(
                "values",
                "sweep values must be strictly increasing",
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("ensemble", "sweep needs at least one seed"));
        }
        let runs = self.values.len() * self.seeds.len();
        if runs > self.budget {
            return Err(Error::config(
                "budget",
                format!("sweep needs {runs} runs, budget is {}", self.budget),
            ));
        }
        for &v in &self.values {
            self.base.with_value(self.variable, v)?;
        }
        Ok(())
    }

    pub fn run_count(&self) -> usize {
        self.values.len() * self.seeds.len()
    }
}

/// `count` consecutive seeds starting at `base`.
pub fn ensemble_seeds(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|k| base.wrapping_add(k)).collect()
}

/// Outcome of one `(value, seed)` run. Failures are recorded, never filled in.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub variable: SweepVariable,
    pub g5: f64,
    pub v0: f64,
    pub segments: usize,
    pub seed: u64,
    pub diagnostics: Option<Diagnostics>,
    pub tailfit: Option<TailFit>,
    pub regime: Option<Regime>,
    pub converged: bool,
    pub steps: usize,
    pub wall_time: Duration,
    /// `ok`, or a `;`-separated list of what went wrong.
    pub status: String,
}

impl SweepRow {
    /// Swept parameter value of this row.
    pub fn value(&self) -> f64 {
        match self.variable {
            SweepVariable::G5 => self.g5,
            SweepVariable::V0 => self.v0,
            SweepVariable::S => self.segments as f64,
        }
    }

    pub fn delta_x(&self) -> Option<f64> {
        self.diagnostics.map(|d| d.delta_x)
    }

    pub fn csv_line(&self) -> String {
        fn num(v: Option<f64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        let d = self.diagnostics;
        let t = self.tailfit.as_ref();
        [
            self.variable.name().to_string(),
            self.g5.to_string(),
            self.v0.to_string(),
            self.segments.to_string(),
            self.seed.to_string(),
            self.converged.to_string(),
            self.steps.to_string(),
            num(d.map(|d| d.mean_x)),
            num(d.map(|d| d.peak_x)),
            num(d.map(|d| d.peak_height)),
            num(d.map(|d| d.delta_x)),
            num(t.and_then(|t| t.l_left())),
            num(t.and_then(|t| t.l_right())),
            num(t.and_then(|t| t.r2_exp_left())),
            num(t.and_then(|t| t.r2_exp_right())),
            num(t.and_then(|t| t.sigma_gauss())),
            num(t.and_then(|t| t.r2_gauss())),
            t.map(|t| t.localized.to_string()).unwrap_or_default(),
            self.regime
                .map(|r| r.label().to_string())
                .unwrap_or_default(),
            self.status.clone(),
        ]
        .join(",")
    }
}

/// Full analysis of one relaxed state.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub ground: GroundStateResult,
    pub diagnostics: Diagnostics,
    pub tailfit: TailFit,
    pub regime: Option<Regime>,
}

/// Builds the potential for `seed`, relaxes to the ground state and analyses it.
pub fn analyse_ground_state(scenario: &Scenario, seed: u64) -> Result<Analysis> {
    let grid = Grid::new(scenario.half_width, scenario.dx)?;
    let potential =
        RandomPotential::new(scenario.v0, scenario.segments, scenario.half_width, seed)?
            .sample_on_grid(&grid)?;
    let ground = ground_state(&potential, &scenario.solver, &grid)?;
    analyse_state(ground, scenario.window)
}

pub fn analyse_state(ground: GroundStateResult, window: FitWindow) -> Result<Analysis> {
    let diagnostics = diagnostics(&ground.psi)?;
    let tailfit = fit_tails(&ground.psi, &diagnostics, window)?;
    let regime = classify_regime(&tailfit, &diagnostics).ok();
    Ok(Analysis {
        ground,
        diagnostics,
        tailfit,
        regime,
    })
}
/// `ok`, or which fits failed and why.
pub fn fit_status(fit: &TailFit) -> String {
    let mut issues = Vec::new();
    for (side, r) in [("left", &fit.left), ("right", &fit.right)] {
        if let Err(f) = r {
            issues.push(format!("{side}:{f}"));
        }
    }
    if fit.gauss.is_none() {
        issues.push("gauss:fit-failure".to_string());
    }
    if issues.is_empty() {
        "ok".to_string()
    } else {
        issues.join(";")
    }
}

/// Runs one sweep point; errors end up in the row's status.
pub fn run_point(scenario: &Scenario, variable: SweepVariable, seed: u64) -> SweepRow {
    let started = Instant::now();
    let mut row = SweepRow {
        variable,
        g5: scenario.g5(),
        v0: scenario.v0,
        segments: scenario.segments,
        seed,
        diagnostics: None,
        tailfit: None,
        regime: None,
        converged: false,
        steps: 0,
        wall_time: Duration::ZERO,
        status: String::new(),
    };
    match analyse_ground_state(scenario, seed) {
        Ok(a) => {
            row.converged = a.ground.converged;
            row.steps = a.ground.steps_taken;
            row.status = fit_status(&a.tailfit);
            row.diagnostics = Some(a.diagnostics);
            row.tailfit = Some(a.tailfit);
            row.regime = a.regime;
        }
        Err(e) => {
            if let Error::Blowup { step } = e {
                row.steps = step;
                row.status = format!("numerical-blowup@{step}");
            } else {
                row.status = format!("error:{}", e.to_string().replace([',', '\n'], ";"));
            }
        }
    }
    row.wall_time = started.elapsed();
    row
}

/// Runs every `(value, seed)` pair on up to `workers` threads. Rows come back ordered
/// by value, then by position in `spec.seeds`, whatever the schedule.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut jobs: Vec<(Scenario, u64)> = Vec::with_capacity(spec.run_count());
    for &v in &spec.values {
        let scenario = spec.base.with_value(spec.variable, v)?;
        jobs.extend(spec.seeds.iter().map(|&s| (scenario.clone(), s)));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|(scenario, seed)| run_point(scenario, spec.variable, *seed))
            .collect()
    }))
}

pub fn write_rows<W: Write>(mut out: W, preamble: &[String], rows: &[SweepRow]) -> Result<()> {
    for line in preamble {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.csv_line())?;
    }
    Ok(())
}

/// Median and interquartile range, quartiles by linear interpolation between order
/// statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Stats {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }

    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Stats {
            median: quantile(&sorted, 0.5),
            q1: quantile(&sorted, 0.25),
            q3: quantile(&sorted, 0.75),
        })
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> Option<f64> {
    Stats::of(values).map(|s| s.median)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub variable: SweepVariable,
    pub value: f64,
    pub runs: usize,
    /// Runs that produced no state at all.
    pub failed_runs: usize,
    /// Runs whose state exists but at least one tail fit failed.
    pub failed_fits: usize,
    pub delta_x: Stats,
    pub l_left: Option<Stats>,
    pub l_right: Option<Stats>,
    pub peak_height: Stats,
}

impl AggregateRow {
    pub fn csv_line(&self) -> String {
        fn pair(s: Option<Stats>) -> String {
            s.map(|s| format!("{},{}", s.median, s.iqr()))
                .unwrap_or_else(|| ",".to_string())
        }
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.variable,
            self.value,
            self.runs,
            self.failed_runs,
            self.failed_fits,
            pair(Some(self.delta_x)),
            pair(self.l_left),
            pair(self.l_right),
            pair(Some(self.peak_height)),
        )
    }
}

fn group_by_value(rows: &[SweepRow]) -> Result<Vec<(SweepVariable, f64, Vec<&SweepRow>)>> {
    let mut groups: BTreeMap<(SweepVariable, u64), (f64, Vec<&SweepRow>)> = BTreeMap::new();
    for row in rows {
        let v = row.value();
        if !v.is_finite() {
            return Err(Error::Parameter(format!("non-finite sweep value {v}")));
        }
        // map to an order-preserving integer key
        let bits = v.to_bits();
        let key = if v.is_sign_negative() {
            !bits
        } else {
            bits | (1 << 63)
        };
        groups
            .entry((row.variable, key))
            .or_insert_with(|| (v, Vec::new()))
            .1
            .push(row);
    }
    Ok(groups
        .into_iter()
        .map(|((var, _), (v, rows))| (var, v, rows))
        .collect())
}

/// Per-value ensemble statistics. Rows without a state are excluded and counted;
/// rows with a failed side fit are excluded from that side's length statistics.
pub fn aggregate(rows: &[SweepRow]) -> Result<Vec<AggregateRow>> {
    group_by_value(rows)?
        .into_iter()
        .map(|(variable, value, group)| {
            let with_state: Vec<&Diagnostics> = group
                .iter()
                .filter_map(|r| r.diagnostics.as_ref())
                .collect();
            if with_state.is_empty() {
                return Err(Error::Parameter(format!(
                    "no successful runs for {variable}={value}"
                )));
            }
            let dx: Vec<f64> = with_state.iter().map(|d| d.delta_x).collect();
            let peak: Vec<f64> = with_state.iter().map(|d| d.peak_height).collect();
            let lefts: Vec<f64> = group
                .iter()
                .filter_map(|r| r.tailfit.as_ref().and_then(|t| t.l_left()))
                .collect();
            let rights: Vec<f64> = group
                .iter()
                .filter_map(|r| r.tailfit.as_ref().and_then(|t| t.l_right()))
                .collect();
            let failed_fits = group
                .iter()
                .filter(|r| {
                    r.tailfit
                        .as_ref()
                        .is_some_and(|t| t.left.is_err() || t.right.is_err())
                })
                .count();
            Ok(AggregateRow {
                variable,
                value,
                runs: group.len(),
                failed_runs: group.len() - with_state.len(),
                failed_fits,
                delta_x: Stats::of(&dx).expect("non-empty"),
                l_left: Stats::of(&lefts),
                l_right: Stats::of(&rights),
                peak_height: Stats::of(&peak).expect("non-empty"),
            })
        })
        .collect()
}

pub fn write_aggregate<W: Write>(
    mut out: W,
    preamble: &[String],
    agg: &[AggregateRow],
) -> Result<()> {
    for line in preamble {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{AGG_CSV_HEADER}")?;
    for row in agg {
        writeln!(out, "{}", row.csv_line())?;
    }
    Ok(())
}

/// Locates an abrupt upward jump in `Δx(g5)`.
///
/// With `J_i = Δx_{i+1} - Δx_i`, returns the midpoint of the interval with the
/// largest `J_i` when it exceeds `jump_factor` times the median of `|J|`.
pub fn critical_g5(series: &[(f64, f64)], jump_factor: f64) -> Result<Option<f64>> {
    if series.len() < 4 {
        return Err(Error::Parameter(format!(
            "critical g5 needs at least 4 points, got {}",
            series.len()
        )));
    }
    if series.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Parameter(
            "g5 values must be strictly increasing".into(),
        ));
    }
    let jumps: Vec<f64> = series.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let abs: Vec<f64> = jumps.iter().map(|j| j.abs()).collect();
    let typical = median(&abs).expect("non-empty");
    let (i, &largest) = jumps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    if largest > jump_factor * typical {
        Ok(Some(0.5 * (series[i].0 + series[i + 1].0)))
    } else {
        Ok(None)
    }
}

/// `(g5, median Δx)` for every g5 in a g5 sweep.
pub fn median_delta_x_series(rows: &[SweepRow]) -> Result<Vec<(f64, f64)>> {
    Ok(aggregate(rows)?
        .into_iter()
        .map(|a| (a.value, a.delta_x.median))
        .collect())
}

/// [`critical_g5`] on the ensemble-median `Δx` of a g5 sweep.
pub fn critical_g5_from_rows(rows: &[SweepRow], jump_factor: f64) -> Result<Option<f64>> {
    if rows.iter().any(|r| r.variable != SweepVariable::G5) {
        return Err(Error::Parameter("critical g5 needs a g5 sweep".into()));
    }
    critical_g5(&median_delta_x_series(rows)?, jump_factor)
}

fn relative_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if mean == 0.0 {
        0.0
    } else {
        var.sqrt() / mean.abs()
    }
}

/// Relative standard deviation of the per-S median peak height below and at-or-above
/// `split`.
pub fn stabilization_check(rows: &[SweepRow], split: usize) -> Result<(f64, f64)> {
    let mut low = Vec::new();
    let mut high = Vec::new();
    for a in aggregate(rows)? {
        if a.variable != SweepVariable::S {
            return Err(Error::Parameter(
                "stabilization check needs an S sweep".into(),
            ));
        }
        if a.value < split as f64 {
            low.push(a.peak_height.median);
        } else {
            high.push(a.peak_height.median);
        }
    }
    if low.is_empty() || high.is_empty() {
        return Err(Error::Parameter(format!(
            "S values must lie on both sides of {split}"
        )));
    }
    Ok((relative_std(&low), relative_std(&high)))
}

/// Sweep row for an already analysed state.
pub fn row_from_analysis(
    scenario: &Scenario,
    variable: SweepVariable,
    seed: u64,
    analysis: &Analysis,
) -> SweepRow {
    SweepRow {
        variable,
        g5: scenario.g5(),
        v0: scenario.v0,
        segments: scenario.segments,
        seed,
        diagnostics: Some(analysis.diagnostics),
        tailfit: Some(analysis.tailfit.clone()),
        regime: analysis.regime,
        converged: analysis.ground.converged,
        steps: analysis.ground.steps_taken,
        wall_time: analysis.ground.wall_time,
        status: fit_status(&analysis.tailfit),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::SplitMix64;
    use proptest::prelude::*;

    fn synthetic(
        variable: SweepVariable,
        value: f64,
        seed: u64,
        delta_x: f64,
        peak: f64,
    ) -> SweepRow {
        let mut row = SweepRow {
            variable,
            g5: 0.0,
            v0: 1.0,
            segments: 300,
            seed,
            diagnostics: Some(Diagnostics {
                mean_x: 0.0,
                peak_x: 0.0,
                peak_height: peak,
                delta_x,
                norm: 1.0,
            }),
            tailfit: None,
            regime: None,
            converged: true,
            steps: 0,
            wall_time: Duration::ZERO,
            status: "ok".into(),
        };
        match variable {
            SweepVariable::G5 => row.g5 = value,
            SweepVariable::V0 => row.v0 = value,
            SweepVariable::S => row.segments = value as usize,
        }
        row
    }

    fn mesh(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 * 0.1).collect()
    }

    #[test]
    fn staircase_jump_located_at_step() {
        let series: Vec<_> = mesh(31)
            .into_iter()
            .map(|g| (g, if g < 2.0 - 1e-9 { 1.0 } else { 10.0 }))
            .collect();
        let c = critical_g5(&series, DEFAULT_JUMP_FACTOR).unwrap().unwrap();
        assert!((c - 2.0).abs() <= 0.05 + 1e-12, "{c}");
    }

    #[test]
    fn constant_series_has_no_jump() {
        let series: Vec<_> = mesh(10).into_iter().map(|g| (g, 1.3)).collect();
        assert_eq!(critical_g5(&series, DEFAULT_JUMP_FACTOR).unwrap(), None);
    }

    #[test]
    fn critical_rejects_bad_series() {
        let short = [(0.0, 1.0), (0.1, 1.0), (0.2, 1.0)];
        assert!(matches!(critical_g5(&short, 5.0), Err(Error::Parameter(_))));
        let unordered = [(0.0, 1.0), (0.2, 1.0), (0.1, 1.0), (0.3, 1.0)];
        assert!(matches!(
            critical_g5(&unordered, 5.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn aggregate_three_values() {
        let rows: Vec<_> = [1.0, 3.0, 2.0]
            .iter()
            .enumerate()
            .map(|(k, &d)| synthetic(SweepVariable::G5, 0.5, k as u64, d, 1.0))
            .collect();
        let agg = aggregate(&rows).unwrap();
        assert_eq!(agg.len(), 1);
        assert_eq!(agg[0].runs, 3);
        assert_eq!(agg[0].delta_x.median, 2.0);
        assert_eq!(agg[0].delta_x.iqr(), 1.0);
    }

    #[test]
    fn aggregate_singleton_is_the_row() {
        let rows = [synthetic(SweepVariable::V0, 5.0, 0, 0.7, 0.4)];
        let agg = aggregate(&rows).unwrap();
        assert_eq!(agg[0].delta_x.median, 0.7);
        assert_eq!(agg[0].peak_height.median, 0.4);
        assert_eq!(agg[0].delta_x.iqr(), 0.0);
    }

    #[test]
    fn aggregate_uniform_median() {
        let mut rng = SplitMix64::new(42);
        let rows: Vec<_> = (0..100)
            .map(|k| synthetic(SweepVariable::G5, 1.0, k, rng.next_f64(), 1.0))
            .collect();
        let m = aggregate(&rows).unwrap()[0].delta_x.median;
        assert!((m - 0.5).abs() < 0.1, "{m}");
    }

    #[test]
    fn aggregate_counts_failed_runs() {
        let mut bad = synthetic(SweepVariable::G5, 1.0, 1, 0.0, 0.0);
        bad.diagnostics = None;
        bad.status = "numerical-blowup@10".into();
        let rows = [synthetic(SweepVariable::G5, 1.0, 0, 2.0, 1.0), bad];
        let agg = aggregate(&rows).unwrap();
        assert_eq!(agg[0].runs, 2);
        assert_eq!(agg[0].failed_runs, 1);
        assert_eq!(agg[0].delta_x.median, 2.0);
        assert_eq!(agg[0].l_left, None);
    }

    #[test]
    fn groups_sorted_by_value() {
        let rows: Vec<_> = [3.0, -1.0, 0.5, -2.0]
            .iter()
            .map(|&v| synthetic(SweepVariable::G5, v, 0, 1.0, 1.0))
            .collect();
        let values: Vec<f64> = aggregate(&rows).unwrap().iter().map(|a| a.value).collect();
        assert_eq!(values, vec![-2.0, -1.0, 0.5, 3.0]);
    }

    #[test]
    fn stabilization_constant_heights() {
        let rows: Vec<_> = (1..=8)
            .map(|k| synthetic(SweepVariable::S, 50.0 * k as f64, 0, 1.0, 0.3))
            .collect();
        assert_eq!(stabilization_check(&rows, 200).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn stabilization_noise_ratio() {
        let mut rng = SplitMix64::new(7);
        let mut gauss = move || {
            let u1 = 1.0 - rng.next_f64();
            let u2 = rng.next_f64();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        let rows: Vec<_> = (1..=400)
            .map(|s| {
                let sigma = if s < 200 { 0.2 } else { 0.02 };
                synthetic(SweepVariable::S, s as f64, 0, 1.0, 1.0 + sigma * gauss())
            })
            .collect();
        let (low, high) = stabilization_check(&rows, 200).unwrap();
        let ratio = low / high;
        assert!((ratio - 10.0).abs() <= 3.0, "{ratio}");
    }

    #[test]
    fn stabilization_needs_both_sides() {
        let rows: Vec<_> = [250.0, 300.0]
            .iter()
            .map(|&s| synthetic(SweepVariable::S, s, 0, 1.0, 1.0))
            .collect();
        assert!(matches!(
            stabilization_check(&rows, 200),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn scenario_rejects_fractional_segments() {
        let base = Scenario::default();
        assert!(matches!(
            base.with_value(SweepVariable::S, 12.5),
            Err(Error::Config { .. })
        ));
        assert_eq!(
            base.with_value(SweepVariable::S, 50.0).unwrap().segments,
            50
        );
    }

    #[test]
    fn spec_budget_enforced() {
        let spec = SweepSpec {
            variable: SweepVariable::G5,
            values: vec![0.0, 1.0, 2.0],
            base: Scenario::default(),
            seeds: ensemble_seeds(1, 4),
            budget: 11,
        };
        assert!(matches!(spec.validate(), Err(Error::Config { .. })));
        assert_eq!(spec.run_count(), 12);
    }

    #[test]
    fn variable_names_round_trip() {
        for v in [SweepVariable::G5, SweepVariable::V0, SweepVariable::S] {
            assert_eq!(v.name().parse::<SweepVariable>().unwrap(), v);
        }
        assert!("mu".parse::<SweepVariable>().is_err());
    }

    proptest! {
        #[test]
        fn smooth_monotone_has_no_jump(a in -5.0f64..5.0, b in 0.01f64..2.0, c in 0.0f64..1.0, n in 4usize..40) {
            let series: Vec<_> = mesh(n).into_iter().map(|g| (g, a + b * g + c * g * g)).collect();
            prop_assert_eq!(critical_g5(&series, DEFAULT_JUMP_FACTOR).unwrap(), None);
        }

        #[test]
        fn aggregate_ignores_row_order(mut xs in prop::collection::vec(0.0f64..10.0, 1..30), seed in any::<u64>()) {
            let rows: Vec<_> = xs.iter().enumerate()
                .map(|(k, &d)| synthetic(SweepVariable::G5, 1.0, k as u64, d, d))
                .collect();
            let mut rng = SplitMix64::new(seed);
            for i in (1..xs.len()).rev() {
                xs.swap(i, (rng.next_u64() % (i as u64 + 1)) as usize);
            }
            let shuffled: Vec<_> = xs.iter().enumerate()
                .map(|(k, &d)| synthetic(SweepVariable::G5, 1.0, k as u64, d, d))
                .collect();
            prop_assert_eq!(aggregate(&rows).unwrap(), aggregate(&shuffled).unwrap());
        }
    }
}
