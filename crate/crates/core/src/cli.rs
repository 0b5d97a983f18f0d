//! Command implementations behind the `qal` binary. Every command writes plain text
//! files into the configured output directory, each starting with the full run
//! configuration as `# key=value` comment lines.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::disorder::RandomPotential;
use crate::error::{Error, Result};
use crate::grid::{Grid, WaveFunction};
use crate::observables::{detect_fragmentation, diagnostics, Diagnostics};
use crate::propagator::{evolve_real, ground_state, Mode};
use crate::sweep::{
    aggregate, analyse_state, critical_g5_from_rows, fit_status, run_sweep, stabilization_check,
    write_aggregate, write_rows, SweepVariable,
};
use crate::tailfit::{classify_regime, fit_tails, TailFit};

/// Environment variable capping sweep parallelism.
pub const WORKERS_ENV: &str = "QAL_WORKERS";

pub const GROUND_CSV_HEADER: &str = "g5,V0,S,seed,energy,chemical_potential,converged,steps,mean_x,peak_x,peak_height,delta_x,fragmented,l_left,l_right,r2_exp_left,r2_exp_right,sigma_gauss,r2_gauss,localized,regime,status";

pub const FIT_CSV_HEADER: &str =
    "l_left,l_right,r2_exp_left,r2_exp_right,sigma_gauss,r2_gauss,delta_x,localized,regime";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Ground,
    Evolve { input: PathBuf },
    Potential,
    Fit { input: PathBuf },
    Sweep,
}

/// Worker count from `QAL_WORKERS`, else the number of available processors.
pub fn workers_from_env() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::config(
                WORKERS_ENV,
                format!("must be a positive integer, got `{v}`"),
            )),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn fit_fields(fit: &TailFit) -> [String; 6] {
    [
        num(fit.l_left()),
        num(fit.l_right()),
        num(fit.r2_exp_left()),
        num(fit.r2_exp_right()),
        num(fit.sigma_gauss()),
        num(fit.r2_gauss()),
    ]
}

fn regime_label(fit: &TailFit, d: &Diagnostics) -> String {
    classify_regime(fit, d)
        .map(|r| r.label().to_string())
        .unwrap_or_else(|_| "unavailable".to_string())
}

/// Single CSV row of the `fit` command.
pub fn fit_csv_line(fit: &TailFit, d: &Diagnostics) -> String {
    let mut fields: Vec<String> = fit_fields(fit).into();
    fields.push(d.delta_x.to_string());
    fields.push(fit.localized.to_string());
    fields.push(regime_label(fit, d));
    fields.join(",")
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn read_dump(path: &Path) -> Result<WaveFunction> {
    WaveFunction::read_dump(BufReader::new(File::open(path)?))
}

fn potential_samples(cfg: &RunConfig, grid: &Grid) -> Result<Vec<f64>> {
    RandomPotential::new(cfg.v0, cfg.segments, grid.half_width(), cfg.seed)?.sample_on_grid(grid)
}

/// Runs `command` and returns the lines it reports on standard output.
pub fn dispatch(command: &Command, cfg: &RunConfig) -> Result<Vec<String>> {
    let header = cfg.to_lines();
    let dir = cfg.out_dir.as_path();
    match command {
        Command::Potential => {
            let grid = cfg.grid()?;
            let v = potential_samples(cfg, &grid)?;
            let mut out = create(dir, "potential.dat")?;
            for line in &header {
                writeln!(out, "# {line}")?;
            }
            writeln!(out, "# x V")?;
            for (i, v) in v.iter().enumerate() {
                writeln!(out, "{:.16e} {:.16e}", grid.x(i), v)?;
            }
            out.flush()?;
            Ok(vec![format!(
                "wrote {}",
                dir.join("potential.dat").display()
            )])
        }
        Command::Ground => {
            let grid = cfg.grid()?;
            let v = potential_samples(cfg, &grid)?;
            let result = ground_state(&v, &cfg.solver(Mode::ImaginaryTime), &grid)?;
            let mut dump = create(dir, "ground.dat")?;
            result.psi.write_dump(&mut dump, &header)?;
            dump.flush()?;

            let (energy, mu, converged, steps) = (
                result.energy,
                result.chemical_potential,
                result.converged,
                result.steps_taken,
            );
            let analysis = analyse_state(result, cfg.window())?;
            let d = analysis.diagnostics;
            let fit = &analysis.tailfit;
            let mut fields = vec![
                cfg.g5.to_string(),
                cfg.v0.to_string(),
                cfg.segments.to_string(),
                cfg.seed.to_string(),
                energy.to_string(),
                mu.to_string(),
                converged.to_string(),
                steps.to_string(),
                d.mean_x.to_string(),
                d.peak_x.to_string(),
                d.peak_height.to_string(),
                d.delta_x.to_string(),
                detect_fragmentation(&d, cfg.frag_threshold).to_string(),
            ];
            fields.extend(fit_fields(fit));
            fields.push(fit.localized.to_string());
            fields.push(regime_label(fit, &d));
            fields.push(fit_status(fit));
            let mut csv = create(dir, "ground.csv")?;
            for line in &header {
                writeln!(csv, "# {line}")?;
            }
            writeln!(csv, "{GROUND_CSV_HEADER}")?;
            writeln!(csv, "{}", fields.join(","))?;
            csv.flush()?;
            Ok(vec![format!(
                "E={energy} mu={mu} delta_x={} converged={converged} steps={steps}",
                d.delta_x
            )])
        }
        Command::Evolve { input } => {
            let psi = read_dump(input)?;
            let v = potential_samples(cfg, psi.grid())?;
            let out_state = evolve_real(&psi, &v, &cfg.solver(Mode::RealTime), cfg.t_final)?;
            let mut dump = create(dir, "evolve.dat")?;
            out_state.write_dump(&mut dump, &header)?;
            dump.flush()?;
            let d = diagnostics(&out_state)?;
            Ok(vec![format!(
                "t={} norm={} delta_x={}",
                cfg.t_final, d.norm, d.delta_x
            )])
        }
        Command::Fit { input } => {
            let psi = read_dump(input)?;
            let d = diagnostics(&psi)?;
            let fit = fit_tails(&psi, &d, cfg.window())?;
            let line = fit_csv_line(&fit, &d);
            let mut csv = create(dir, "fit.csv")?;
            for l in &header {
                writeln!(csv, "# {l}")?;
            }
            writeln!(csv, "{FIT_CSV_HEADER}")?;
            writeln!(csv, "{line}")?;
            csv.flush()?;
            Ok(vec![FIT_CSV_HEADER.to_string(), line])
        }
        Command::Sweep => {
            let spec = cfg.sweep_spec()?;
            let rows = run_sweep(&spec, workers_from_env()?)?;
            let mut csv = create(dir, "sweep.csv")?;
            write_rows(&mut csv, &header, &rows)?;
            csv.flush()?;
            let mut report = vec![format!("{} runs", rows.len())];
            match aggregate(&rows) {
                Ok(agg) => {
                    let mut out = create(dir, "sweep-agg.csv")?;
                    write_aggregate(&mut out, &header, &agg)?;
                    out.flush()?;
                }
                Err(e) => report.push(format!("aggregate unavailable: {e}")),
            }
            if spec.seeds.len() == 1 {
                report
                    .push("single-seed mode: statistics describe one disorder realization".into());
            }
            match spec.variable {
                SweepVariable::G5 if spec.values.len() >= 4 => {
                    match critical_g5_from_rows(&rows, cfg.jump_factor)? {
                        Some(g) => report.push(format!("critical g5 = {g}")),
                        None => report.push("no abrupt transition in delta_x(g5)".into()),
                    }
                }
                SweepVariable::S => {
                    if let Ok((low, high)) = stabilization_check(&rows, cfg.s_split) {
                        report.push(format!(
                            "peak-height relative std: S<{} {low}, S>={} {high}",
                            cfg.s_split, cfg.s_split
                        ));
                    }
                }
                _ => {}
            }
            Ok(report)
        }
    }
}
