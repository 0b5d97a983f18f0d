//! Exponential and Gaussian fits to the tails of a density profile, and the
//! `l > Δx` localization test.
//!
//! Each side of the peak is fitted separately with `ln|ψ|² = ln N - 2|x - x_p|/l`
//! by linear least squares over the nodes whose density lies inside a window
//! `[f_lo, f_hi]` relative to the peak. The Gaussian comparison fits
//! `ln|ψ|² = c - (x - x_p)²/σ²` over the union of both windows.

use std::fmt;

use crate::error::{Error, Result, Side};
use crate::grid::WaveFunction;
use crate::observables::Diagnostics;

/// Minimum number of window nodes for a side fit.
pub const MIN_TAIL_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow {
    pub f_hi: f64,
    pub f_lo: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        FitWindow {
            f_hi: 0.5,
            f_lo: 1e-4,
        }
    }
}

impl FitWindow {
    pub fn new(f_hi: f64, f_lo: f64) -> Result<Self> {
        if !(f_lo > 0.0 && f_lo < f_hi && f_hi <= 1.0) {
            return Err(Error::Parameter(format!(
                "fit window needs 0 < f_lo < f_hi <= 1, got f_hi={f_hi}, f_lo={f_lo}"
            )));
        }
        Ok(FitWindow { f_hi, f_lo })
    }
}

/// Exponential fit of one tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideFit {
    pub length: f64,
    pub amplitude: f64,
    pub r2: f64,
    pub nodes: usize,
}

/// Why a side fit produced no localization length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SideFailure {
    InsufficientData { nodes: usize },
    GrowingTail { slope: f64 },
}

impl SideFailure {
    fn into_error(self, side: Side) -> Error {
        match self {
            SideFailure::InsufficientData { nodes } => Error::InsufficientTail {
                side,
                nodes,
                needed: MIN_TAIL_NODES,
            },
            SideFailure::GrowingTail { slope } => Error::FitFailure { side, slope },
        }
    }
}

impl fmt::Display for SideFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SideFailure::InsufficientData { .. } => f.write_str("insufficient-tail-data"),
            SideFailure::GrowingTail { .. } => f.write_str("fit-failure"),
        }
    }
}

pub type SideResult = std::result::Result<SideFit, SideFailure>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussFit {
    pub sigma: f64,
    pub amplitude: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailFit {
    pub left: SideResult,
    pub right: SideResult,
    pub gauss: Option<GaussFit>,
    /// Δx of the fitted state, used for the localization test.
    pub delta_x: f64,
    /// Smallest fitted localization length exceeds Δx.
    pub localized: bool,
}

impl TailFit {
    pub fn side(&self, side: Side) -> Result<&SideFit> {
        let r = match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        };
        r.as_ref().map_err(|f| f.into_error(side))
    }

    pub fn l_left(&self) -> Option<f64> {
        self.left.ok().map(|s| s.length)
    }

    pub fn l_right(&self) -> Option<f64> {
        self.right.ok().map(|s| s.length)
    }

    pub fn r2_exp_left(&self) -> Option<f64> {
        self.left.ok().map(|s| s.r2)
    }

    pub fn r2_exp_right(&self) -> Option<f64> {
        self.right.ok().map(|s| s.r2)
    }

    pub fn sigma_gauss(&self) -> Option<f64> {
        self.gauss.map(|g| g.sigma)
    }

    pub fn r2_gauss(&self) -> Option<f64> {
        self.gauss.map(|g| g.r2)
    }

    /// Smaller of the successfully fitted lengths.
    pub fn min_length(&self) -> Option<f64> {
        match (self.l_left(), self.l_right()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    fn successful_sides(&self) -> impl Iterator<Item = &SideFit> {
        self.left
            .as_ref()
            .ok()
            .into_iter()
            .chain(self.right.as_ref().ok())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    ExponentialLocalized,
    GaussianLocalized,
    Extended,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::ExponentialLocalized => "exponential-localized",
            Regime::GaussianLocalized => "gaussian-localized",
            Regime::Extended => "extended",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

struct LineFit {
    slope: f64,
    intercept: f64,
    r2: f64,
}

/// Ordinary least squares `y = intercept + slope * x`.
fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    LineFit {
        slope,
        intercept,
        r2,
    }
}

fn fit_side(offsets: &[f64], logs: &[f64]) -> SideResult {
    if offsets.len() < MIN_TAIL_NODES {
        return Err(SideFailure::InsufficientData {
            nodes: offsets.len(),
        });
    }
    let line = fit_line(offsets, logs);
    if !(line.slope < 0.0) {
        return Err(SideFailure::GrowingTail { slope: line.slope });
    }
    Ok(SideFit {
        length: -2.0 / line.slope,
        amplitude: line.intercept.exp(),
        r2: line.r2,
        nodes: offsets.len(),
    })
}

/// Fits both tails of `psi` around the peak recorded in `d`.
pub fn fit_tails(psi: &WaveFunction, d: &Diagnostics, window: FitWindow) -> Result<TailFit> {
    FitWindow::new(window.f_hi, window.f_lo)?;
    let grid = psi.grid();
    let density = psi.density();
    let peak = d.peak_height;
    if !(peak > 0.0) {
        return Err(Error::DegenerateState(
            "density has no positive peak".into(),
        ));
    }
    let (lo, hi) = (window.f_lo * peak, window.f_hi * peak);

    let mut left = (Vec::new(), Vec::new());
    let mut right = (Vec::new(), Vec::new());
    for (i, &rho) in density.iter().enumerate() {
        if rho <= 0.0 || rho < lo || rho > hi {
            continue;
        }
        let offset = grid.x(i) - d.peak_x;
        let bucket = if offset < 0.0 {
            &mut left
        } else if offset > 0.0 {
            &mut right
        } else {
            continue;
        };
        bucket.0.push(offset.abs());
        bucket.1.push(rho.ln());
    }

    let left_fit = fit_side(&left.0, &left.1);
    let right_fit = fit_side(&right.0, &right.1);

    let squares: Vec<f64> = left.0.iter().chain(&right.0).map(|o| o * o).collect();
    let logs: Vec<f64> = left.1.iter().chain(&right.1).copied().collect();
    let gauss = if squares.len() >= MIN_TAIL_NODES {
        let line = fit_line(&squares, &logs);
        (line.slope < 0.0).then(|| GaussFit {
            sigma: (-1.0 / line.slope).sqrt(),
            amplitude: line.intercept.exp(),
            r2: line.r2,
        })
    } else {
        None
    };

    let mut fit = TailFit {
        left: left_fit,
        right: right_fit,
        gauss,
        delta_x: d.delta_x,
        localized: false,
    };
    fit.localized = fit.min_length().is_some_and(|l| l > d.delta_x);
    Ok(fit)
}

/// Labels the tail shape of a fitted state.
pub fn classify_regime(fit: &TailFit, _d: &Diagnostics) -> Result<Regime> {
    if fit.left.is_err() && fit.right.is_err() {
        return Err(Error::ClassificationUnavailable);
    }
    if !fit.localized {
        return Ok(Regime::Extended);
    }
    let r2_gauss = fit.r2_gauss().unwrap_or(f64::NEG_INFINITY);
    if fit.successful_sides().all(|s| s.r2 >= r2_gauss) {
        Ok(Regime::ExponentialLocalized)
    } else if fit.successful_sides().all(|s| r2_gauss > s.r2) {
        Ok(Regime::GaussianLocalized)
    } else {
        Ok(Regime::Extended)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::observables::diagnostics;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn state(f: impl Fn(f64) -> f64) -> WaveFunction {
        let g = Grid::new(30.0, 0.04).unwrap();
        WaveFunction::from_fn(g, |x| Complex64::new(f(x).sqrt(), 0.0))
    }

    fn fit(psi: &WaveFunction, w: FitWindow) -> (TailFit, Diagnostics) {
        let d = diagnostics(psi).unwrap();
        (fit_tails(psi, &d, w).unwrap(), d)
    }

    #[test]
    fn exact_exponential_is_recovered() {
        let psi = state(|x| (-2.0 * x.abs() / 2.0).exp());
        let (f, d) = fit(&psi, FitWindow::default());
        assert!((f.l_left().unwrap() - 2.0).abs() < 1e-6);
        assert!((f.l_right().unwrap() - 2.0).abs() < 1e-6);
        assert!((f.r2_exp_left().unwrap() - 1.0).abs() < 1e-12);
        assert!((f.r2_exp_right().unwrap() - 1.0).abs() < 1e-12);
        assert!((f.left.unwrap().amplitude - 1.0).abs() < 1e-9);
        // Δx = l/√2 for this profile, so it is localized
        assert!(f.localized);
        assert_eq!(
            classify_regime(&f, &d).unwrap(),
            Regime::ExponentialLocalized
        );
    }

    #[test]
    fn gaussian_prefers_gaussian_model() {
        let psi = state(|x| (-x * x).exp());
        let (f, _) = fit(&psi, FitWindow::default());
        let g = f.gauss.unwrap();
        assert!((g.sigma - 1.0).abs() < 1e-3);
        assert!(g.r2 > f.r2_exp_left().unwrap());
        assert!(g.r2 > f.r2_exp_right().unwrap());
    }

    #[test]
    fn narrow_window_gaussian_is_gaussian_localized() {
        // near the core the exponential fit gives l ≈ 1.7σ > Δx = σ/√2
        let psi = state(|x| (-x * x).exp());
        let (f, d) = fit(&psi, FitWindow::new(0.95, 0.3).unwrap());
        assert!(f.localized, "{f:?} {}", d.delta_x);
        assert_eq!(classify_regime(&f, &d).unwrap(), Regime::GaussianLocalized);
    }

    #[test]
    fn wide_window_gaussian_is_extended() {
        let psi = state(|x| (-x * x).exp());
        let (f, d) = fit(&psi, FitWindow::default());
        assert!(!f.localized);
        assert_eq!(classify_regime(&f, &d).unwrap(), Regime::Extended);
    }

    #[test]
    fn uniform_density_cannot_be_classified() {
        let psi = state(|_| 1.0 / 60.0);
        let (f, d) = fit(&psi, FitWindow::default());
        assert!(matches!(
            f.left,
            Err(SideFailure::InsufficientData { nodes: 0 })
        ));
        assert!(matches!(
            f.side(Side::Right),
            Err(Error::InsufficientTail {
                side: Side::Right,
                ..
            })
        ));
        assert!(!f.localized);
        assert!(matches!(
            classify_regime(&f, &d),
            Err(Error::ClassificationUnavailable)
        ));
    }

    #[test]
    fn growing_tail_is_a_fit_failure() {
        // right of the peak the density rises with distance inside the window
        let psi = state(|x| {
            if x <= 0.0 {
                (-x.abs()).exp()
            } else {
                0.2 + 0.005 * x
            }
        });
        let d = diagnostics(&psi).unwrap();
        let f = fit_tails(&psi, &d, FitWindow::new(0.45, 0.1).unwrap()).unwrap();
        assert!(f.left.is_ok());
        assert!(
            matches!(f.right, Err(SideFailure::GrowingTail { .. })),
            "{:?}",
            f.right
        );
        assert!(matches!(
            f.side(Side::Right),
            Err(Error::FitFailure {
                side: Side::Right,
                ..
            })
        ));
    }

    #[test]
    fn bad_window_is_rejected() {
        assert!(FitWindow::new(0.5, 0.6).is_err());
        assert!(FitWindow::new(1.5, 0.1).is_err());
        assert!(FitWindow::new(0.5, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn exact_model_any_length(l0 in 0.1f64..10.0) {
            let psi = state(|x| (-2.0 * x.abs() / l0).exp());
            let (f, _) = fit(&psi, FitWindow::default());
            prop_assert!(((f.l_left().unwrap() - l0) / l0).abs() < 1e-9);
            prop_assert!(((f.l_right().unwrap() - l0) / l0).abs() < 1e-9);
        }

        #[test]
        fn amplitude_scale_and_translation(c in 0.01f64..100.0, shift in -50i64..50) {
            let g = Grid::new(30.0, 0.04).unwrap();
            let delta = shift as f64 * g.dx();
            let base = |x: f64| (-2.0 * x.abs() / 1.3).exp() * (1.0 + 0.2 * (x * 0.7).cos());
            let (f0, _) = fit(&state(base), FitWindow::default());
            let (f1, _) = fit(&state(|x| c * base(x - delta)), FitWindow::default());
            for (a, b) in [(f0.left.unwrap(), f1.left.unwrap()), (f0.right.unwrap(), f1.right.unwrap())] {
                prop_assert!((a.length - b.length).abs() < 1e-8);
                prop_assert!((a.r2 - b.r2).abs() < 1e-8);
                prop_assert!((b.amplitude / a.amplitude - c).abs() < 1e-6 * c);
            }
        }
    }
}
