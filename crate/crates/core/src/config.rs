//! Flat `key=value` run configuration with command-line overrides.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::observables::DEFAULT_FRAGMENTATION_THRESHOLD;
use crate::propagator::{Mode, SolverParams};
use crate::sweep::{
    ensemble_seeds, Scenario, SweepSpec, SweepVariable, DEFAULT_JUMP_FACTOR, DEFAULT_RUN_BUDGET,
};
use crate::tailfit::FitWindow;

/// Every recognised key, in the order they are written to file headers.
pub const KEYS: &[&str] = &[
    "L",
    "dx",
    "dt",
    "g5",
    "V0",
    "S",
    "seed",
    "sigma0",
    "energy_tol",
    "max_steps",
    "f_hi",
    "f_lo",
    "frag_threshold",
    "jump_factor",
    "S_split",
    "t_final",
    "sweep",
    "values",
    "ensemble",
    "budget",
    "out_dir",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub half_width: f64,
    pub dx: f64,
    pub dt: f64,
    pub g5: f64,
    pub v0: f64,
    pub segments: usize,
    pub seed: u64,
    pub sigma0: f64,
    pub energy_tol: f64,
    pub max_steps: usize,
    pub f_hi: f64,
    pub f_lo: f64,
    pub frag_threshold: f64,
    pub jump_factor: f64,
    pub s_split: usize,
    pub t_final: f64,
    pub sweep: Option<SweepVariable>,
    /// `None` selects the default mesh of the swept variable.
    pub values: Option<Vec<f64>>,
    /// Number of disorder seeds per sweep value, `seed, seed+1, ...`.
    pub ensemble: usize,
    pub budget: usize,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverParams::default();
        let window = FitWindow::default();
        RunConfig {
            half_width: 30.0,
            dx: 0.04,
            dt: solver.dt,
            g5: 0.0,
            v0: 1.0,
            segments: 300,
            seed: 1,
            sigma0: solver.initial_sigma,
            energy_tol: solver.energy_tol,
            max_steps: solver.max_steps,
            f_hi: window.f_hi,
            f_lo: window.f_lo,
            frag_threshold: DEFAULT_FRAGMENTATION_THRESHOLD,
            jump_factor: DEFAULT_JUMP_FACTOR,
            s_split: 200,
            t_final: 1.0,
            sweep: None,
            values: None,
            ensemble: 1,
            budget: DEFAULT_RUN_BUDGET,
            out_dir: PathBuf::from("."),
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| Error::config(key, format!("malformed number `{value}`")))?;
    if !v.is_finite() {
        return Err(Error::config(key, format!("must be finite, got `{value}`")));
    }
    Ok(v)
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(key, format!("malformed integer `{value}`")))
}

/// `a,b,c` or the inclusive range `start:step:stop`.
pub fn parse_values(value: &str) -> Result<Vec<f64>> {
    let value = value.trim();
    if value.contains(':') {
        let parts: Vec<&str> = value.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::config("values", "range must be start:step:stop"));
        }
        let start = parse_f64("values", parts[0])?;
        let step = parse_f64("values", parts[1])?;
        let stop = parse_f64("values", parts[2])?;
        if !(step > 0.0) || stop < start {
            return Err(Error::config(
                "values",
                "range needs step > 0 and stop >= start",
            ));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // k * step rather than accumulation keeps 0.1-spaced meshes clean
        return Ok((0..count)
            .map(|k| {
                let v = start + k as f64 * step;
                (v * 1e12).round() / 1e12
            })
            .collect());
    }
    value.split(',').map(|v| parse_f64("values", v)).collect()
}

fn format_values(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Default mesh per swept variable.
pub fn default_values(variable: SweepVariable) -> Vec<f64> {
    match variable {
        SweepVariable::G5 => (0..=30).map(|k| k as f64 / 10.0).collect(),
        SweepVariable::V0 => vec![0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0],
        SweepVariable::S => (1..=8).map(|k| 50.0 * k as f64).collect(),
    }
}

impl RunConfig {
    /// Applies one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "L" => self.half_width = parse_f64(key, value)?,
            "dx" => self.dx = parse_f64(key, value)?,
            "dt" => self.dt = parse_f64(key, value)?,
            "g5" => self.g5 = parse_f64(key, value)?,
            "V0" => self.v0 = parse_f64(key, value)?,
            "S" => self.segments = parse_usize(key, value)?,
            "seed" => {
                self.seed = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::config(key, format!("malformed seed `{value}`")))?
            }
            "sigma0" => self.sigma0 = parse_f64(key, value)?,
            "energy_tol" => self.energy_tol = parse_f64(key, value)?,
            "max_steps" => self.max_steps = parse_usize(key, value)?,
            "f_hi" => self.f_hi = parse_f64(key, value)?,
            "f_lo" => self.f_lo = parse_f64(key, value)?,
            "frag_threshold" => self.frag_threshold = parse_f64(key, value)?,
            "jump_factor" => self.jump_factor = parse_f64(key, value)?,
            "S_split" => self.s_split = parse_usize(key, value)?,
            "t_final" => self.t_final = parse_f64(key, value)?,
            "sweep" => {
                let value = value.trim();
                self.sweep = if value.is_empty() || value == "none" {
                    None
                } else {
                    Some(value.parse()?)
                };
            }
            "values" => self.values = Some(parse_values(value)?),
            "ensemble" => self.ensemble = parse_usize(key, value)?,
            "budget" => self.budget = parse_usize(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value.trim()),
            other => return Err(Error::config(other, "unknown key")),
        }
        Ok(())
    }
}

impl RunConfig {
    /// Parses a configuration file body, then applies `overrides` in order.
    pub fn parse(text: Option<&str>, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(text) = text {
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                    line: lineno + 1,
                    reason: format!("expected key=value, found `{line}`"),
                })?;
                cfg.set(key.trim(), value)?;
            }
        }
        for (key, value) in overrides {
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        Grid::new(self.half_width, self.dx)?;
        if self.segments == 0 {
            return Err(Error::config("S", "segment count must be at least 1"));
        }
        if !(self.v0 >= 0.0) {
            return Err(Error::config(
                "V0",
                format!("must be >= 0, got {}", self.v0),
            ));
        }
        self.solver(Mode::ImaginaryTime).validate()?;
        FitWindow::new(self.f_hi, self.f_lo).map_err(|e| Error::config("f_lo", e.to_string()))?;
        if !(self.frag_threshold > 0.0) {
            return Err(Error::config("frag_threshold", "must be positive"));
        }
        if !(self.jump_factor > 0.0) {
            return Err(Error::config("jump_factor", "must be positive"));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::config("t_final", "must be positive"));
        }
        if self.ensemble == 0 {
            return Err(Error::config("ensemble", "must be at least 1"));
        }
        if self.values.is_some() && self.sweep.is_none() {
            return Err(Error::config("values", "given without a sweep variable"));
        }
        if self.sweep.is_some() {
            self.sweep_spec()?.validate()?;
        }
        Ok(())
    }

    pub fn solver(&self, mode: Mode) -> SolverParams {
        SolverParams {
            dt: self.dt,
            g5: self.g5,
            mode,
            max_steps: self.max_steps,
            energy_tol: self.energy_tol,
            initial_sigma: self.sigma0,
        }
    }

    pub fn window(&self) -> FitWindow {
        FitWindow {
            f_hi: self.f_hi,
            f_lo: self.f_lo,
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.half_width, self.dx)
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            half_width: self.half_width,
            dx: self.dx,
            v0: self.v0,
            segments: self.segments,
            solver: self.solver(Mode::ImaginaryTime),
            window: self.window(),
        }
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let variable = self
            .sweep
            .ok_or_else(|| Error::config("sweep", "no sweep variable configured"))?;
        Ok(SweepSpec {
            variable,
            values: self
                .values
                .clone()
                .unwrap_or_else(|| default_values(variable)),
            base: self.scenario(),
            seeds: ensemble_seeds(self.seed, self.ensemble),
            budget: self.budget,
        })
    }

    /// `key=value` lines that reproduce this configuration when parsed back.
    pub fn to_lines(&self) -> Vec<String> {
        KEYS.iter()
            .filter_map(|&key| {
                let value = match key {
                    "L" => self.half_width.to_string(),
                    "dx" => self.dx.to_string(),
                    "dt" => self.dt.to_string(),
                    "g5" => self.g5.to_string(),
                    "V0" => self.v0.to_string(),
                    "S" => self.segments.to_string(),
                    "seed" => self.seed.to_string(),
                    "sigma0" => self.sigma0.to_string(),
                    "energy_tol" => self.energy_tol.to_string(),
                    "max_steps" => self.max_steps.to_string(),
                    "f_hi" => self.f_hi.to_string(),
                    "f_lo" => self.f_lo.to_string(),
                    "frag_threshold" => self.frag_threshold.to_string(),
                    "jump_factor" => self.jump_factor.to_string(),
                    "S_split" => self.s_split.to_string(),
                    "t_final" => self.t_final.to_string(),
                    "sweep" => self.sweep.map_or("none".to_string(), |v| v.to_string()),
                    "values" => format_values(self.values.as_ref()?),
                    "ensemble" => self.ensemble.to_string(),
                    "budget" => self.budget.to_string(),
                    "out_dir" => self.out_dir.display().to_string(),
                    _ => unreachable!("key list and formatter disagree"),
                };
                Some(format!("{key}={value}"))
            })
            .collect()
    }
}
