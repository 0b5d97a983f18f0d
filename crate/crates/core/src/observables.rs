//! Scalar diagnostics of a density profile.

use crate::error::{Error, Result};
use crate::grid::{Grid, WaveFunction};

/// Default `|x_p - <x>|` above which a profile counts as fragmented (ten mesh spacings
/// of the default grid).
pub const DEFAULT_FRAGMENTATION_THRESHOLD: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// `<x>`
    pub mean_x: f64,
    /// Node of the global density maximum (leftmost on ties).
    pub peak_x: f64,
    /// `max |ψ|²`
    pub peak_height: f64,
    /// RMS width `sqrt(<x²> - <x>²)`.
    pub delta_x: f64,
    /// `∫|ψ|² dx`
    pub norm: f64,
}

pub fn diagnostics(psi: &WaveFunction) -> Result<Diagnostics> {
    diagnostics_of_density(psi.grid(), &psi.density())
}

pub fn diagnostics_of_density(grid: &Grid, density: &[f64]) -> Result<Diagnostics> {
    let norm = grid.integrate(density)?;
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::DegenerateState(format!("density has norm {norm}")));
    }
    let xs = grid.positions();
    let weighted: Vec<f64> = xs.iter().zip(density).map(|(x, r)| x * r).collect();
    let mean_x = grid.integrate_unchecked(&weighted) / norm;
    let spread: Vec<f64> = xs
        .iter()
        .zip(density)
        .map(|(x, r)| (x - mean_x) * (x - mean_x) * r)
        .collect();
    let delta_x = (grid.integrate_unchecked(&spread) / norm).max(0.0).sqrt();

    let (peak_index, peak_height) =
        density
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
    Ok(Diagnostics {
        mean_x,
        peak_x: xs[peak_index],
        peak_height,
        delta_x,
        norm,
    })
}

/// True when the peak and the centre of mass disagree by more than `threshold`,
/// the signature of a multi-peak profile.
pub fn detect_fragmentation(d: &Diagnostics, threshold: f64) -> bool {
    (d.peak_x - d.mean_x).abs() > threshold
}

/// Derivative of a sampled series: centred differences inside, one-sided at the ends.
pub fn finite_difference(series: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    if series.len() < 2 {
        return Err(Error::Parameter(format!(
            "finite difference needs at least 2 points, got {}",
            series.len()
        )));
    }
    if let Some(w) = series.windows(2).find(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Parameter(format!(
            "parameters must be strictly increasing: {} then {}",
            w[0].0, w[1].0
        )));
    }
    let n = series.len();
    let slope = |a: (f64, f64), b: (f64, f64)| (b.1 - a.1) / (b.0 - a.0);
    Ok((0..n)
        .map(|i| {
            let d = if i == 0 {
                slope(series[0], series[1])
            } else if i == n - 1 {
                slope(series[n - 2], series[n - 1])
            } else {
                slope(series[i - 1], series[i + 1])
            };
            (series[i].0, d)
        })
        .collect())
}
