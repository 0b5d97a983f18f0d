//! Split-step Crank–Nicolson integration of
//! `i ψ_t = -½ ψ_xx + V ψ + g5 |ψ|⁴ ψ` on a Dirichlet box, in real and
//! imaginary time.
//!
//! One step is Strang-split: a half step of the local term `V + g5|ψ|⁴` with the
//! density frozen, a full Crank–Nicolson step of the kinetic term, then another
//! local half step using the post-kinetic density. Imaginary-time steps are
//! followed by renormalisation.

mod thomas;

use std::ops::{Add, Mul, Sub};
use std::time::{Duration, Instant};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, WaveFunction};

pub use thomas::thomas_solve;
use thomas::TwoSided;

/// Energy is compared every this many imaginary-time steps.
pub const ENERGY_CHECK_INTERVAL: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    RealTime,
    ImaginaryTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub dt: f64,
    pub g5: f64,
    pub mode: Mode,
    pub max_steps: usize,
    /// Relative energy change below which imaginary-time relaxation stops.
    pub energy_tol: f64,
    /// Width of the Gaussian seed used by [`ground_state`].
    pub initial_sigma: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            dt: 1e-3,
            g5: 0.0,
            mode: Mode::ImaginaryTime,
            max_steps: 2_000_000,
            energy_tol: 1e-10,
            initial_sigma: 1.0,
        }
    }
}

impl SolverParams {
    pub fn imaginary(g5: f64) -> Self {
        SolverParams {
            g5,
            ..Default::default()
        }
    }

    pub fn real_time(g5: f64) -> Self {
        SolverParams {
            g5,
            mode: Mode::RealTime,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config(
                "dt",
                format!("must be positive, got {}", self.dt),
            ));
        }
        if !(self.g5.is_finite() && self.g5 >= 0.0) {
            return Err(Error::config(
                "g5",
                format!("must be finite and >= 0, got {}", self.g5),
            ));
        }
        if self.max_steps == 0 {
            return Err(Error::config("max_steps", "must be at least 1"));
        }
        if !(self.energy_tol.is_finite() && self.energy_tol > 0.0) {
            return Err(Error::config(
                "energy_tol",
                format!("must be positive, got {}", self.energy_tol),
            ));
        }
        if !(self.initial_sigma.is_finite() && self.initial_sigma > 0.0) {
            return Err(Error::config(
                "sigma0",
                format!("must be positive, got {}", self.initial_sigma),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub psi: WaveFunction,
    pub energy: f64,
    pub chemical_potential: f64,
    pub steps_taken: usize,
    pub converged: bool,
    pub wall_time: Duration,
}

/// Field amplitude type the stepping kernel runs on. Imaginary-time relaxation of a
/// real seed stays real, so it runs on `f64`; everything else uses `Complex64`.
pub(crate) trait Amp:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn real(v: f64) -> Self;
    fn norm_sqr(self) -> f64;
    fn recip(self) -> Self;
    /// `1/α` for the Crank–Nicolson system `(1/α + T) ψ' = (1/α - T) ψ`.
    fn inv_alpha(dt: f64, mode: Mode) -> Self;
    /// `exp(-i θ)` in real time, `exp(-θ)` in imaginary time.
    fn local_factor(theta: f64, mode: Mode) -> Self;
    /// [`Amp::local_factor`] for `|θ| < SMALL_ARG` only.
    fn local_factor_small(theta: f64, mode: Mode) -> Self;
}

/// Below this magnitude the quartic Taylor polynomial of `exp` is exact to f64
/// precision (remainder `a⁵/120 < 1e-17`).
const SMALL_ARG: f64 = 1e-3;

#[inline]
fn exp_neg_small(a: f64) -> f64 {
    1.0 - a * (1.0 - a * (0.5 - a * (1.0 / 6.0 - a * (1.0 / 24.0))))
}

#[inline]
fn exp_neg(a: f64) -> f64 {
    if a.abs() < SMALL_ARG {
        exp_neg_small(a)
    } else {
        (-a).exp()
    }
}

/// `exp(-i a)` for `|a| < SMALL_ARG`.
#[inline]
fn cis_neg_small(a: f64) -> Complex64 {
    let a2 = a * a;
    let cos = 1.0 - a2 * (0.5 - a2 * (1.0 / 24.0 - a2 * (1.0 / 720.0)));
    let sin = a * (1.0 - a2 * (1.0 / 6.0 - a2 * (1.0 / 120.0)));
    Complex64::new(cos, -sin)
}

#[inline]
fn cis_neg(a: f64) -> Complex64 {
    if a.abs() < SMALL_ARG {
        cis_neg_small(a)
    } else {
        Complex64::from_polar(1.0, -a)
    }
}

impl Amp for f64 {
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn real(v: f64) -> Self {
        v
    }
    #[inline]
    fn norm_sqr(self) -> f64 {
        self * self
    }
    #[inline]
    fn recip(self) -> Self {
        1.0 / self
    }
    fn inv_alpha(dt: f64, mode: Mode) -> Self {
        assert_eq!(
            mode,
            Mode::ImaginaryTime,
            "real amplitudes only support imaginary time"
        );
        2.0 / dt
    }
    #[inline]
    fn local_factor(theta: f64, _mode: Mode) -> Self {
        exp_neg(theta)
    }
    #[inline]
    fn local_factor_small(theta: f64, _mode: Mode) -> Self {
        exp_neg_small(theta)
    }
}

impl Amp for Complex64 {
    #[inline]
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    #[inline]
    fn real(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }
    #[inline]
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    #[inline]
    fn recip(self) -> Self {
        Complex64::inv(&self)
    }
    fn inv_alpha(dt: f64, mode: Mode) -> Self {
        match mode {
            Mode::RealTime => Complex64::new(0.0, -2.0 / dt),
            Mode::ImaginaryTime => Complex64::new(2.0 / dt, 0.0),
        }
    }
    #[inline]
    fn local_factor(theta: f64, mode: Mode) -> Self {
        match mode {
            Mode::RealTime => cis_neg(theta),
            Mode::ImaginaryTime => Complex64::new(exp_neg(theta), 0.0),
        }
    }
    #[inline]
    fn local_factor_small(theta: f64, mode: Mode) -> Self {
        match mode {
            Mode::RealTime => cis_neg_small(theta),
            Mode::ImaginaryTime => Complex64::new(exp_neg_small(theta), 0.0),
        }
    }
}

/// Precomputed stepping operator for one `(grid, V, dt, g5, mode)` combination.
#[derive(Debug, Clone)]
pub(crate) struct Kernel<T> {
    mode: Mode,
    half_dt: f64,
    g5: f64,
    dx: f64,
    /// Half-step propagator of the potential alone.
    potential_factor: Vec<T>,
    factor: TwoSided<T>,
    rhs_diag: T,
    rhs_off: f64,
    scratch: Vec<T>,
}

impl<T: Amp> Kernel<T> {
    pub(crate) fn new(grid: &Grid, potential: &[f64], params: &SolverParams) -> Result<Self> {
        params.validate()?;
        if potential.len() != grid.n_points() {
            return Err(Error::Contract(format!(
                "potential has {} samples, grid has {} nodes",
                potential.len(),
                grid.n_points()
            )));
        }
        if let Some(i) = potential.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!(
                "potential is not finite at node {i}"
            )));
        }
        let dx = grid.dx();
        let m = grid.n_points() - 2;
        let inv_alpha = T::inv_alpha(params.dt, params.mode);
        let kin_diag = 1.0 / (dx * dx);
        let kin_off = -0.5 / (dx * dx);
        let diag = vec![inv_alpha + T::real(kin_diag); m];
        let off = vec![kin_off; m - 1];
        let factor = TwoSided::factor(&off, &diag, &off)?;
        Ok(Kernel {
            mode: params.mode,
            half_dt: 0.5 * params.dt,
            g5: params.g5,
            dx,
            potential_factor: potential
                .iter()
                .map(|&v| T::local_factor(0.5 * params.dt * v, params.mode))
                .collect(),
            factor,
            rhs_diag: inv_alpha - T::real(kin_diag),
            rhs_off: -kin_off,
            scratch: vec![T::zero(); m],
        })
    }

    #[inline]
    fn local_half_step(&self, psi: &mut [T]) {
        if self.g5 == 0.0 {
            for (v, &f) in psi.iter_mut().zip(&self.potential_factor) {
                *v = *v * f;
            }
            return;
        }
        let coupling = self.half_dt * self.g5;
        let peak = psi.iter().fold(0.0f64, |m, v| m.max(v.norm_sqr()));
        if coupling * peak * peak < SMALL_ARG {
            // branch-free so the loop vectorises
            for (v, &f) in psi.iter_mut().zip(&self.potential_factor) {
                let rho = v.norm_sqr();
                *v = *v * (f * T::local_factor_small(coupling * rho * rho, self.mode));
            }
        } else {
            for (v, &f) in psi.iter_mut().zip(&self.potential_factor) {
                let rho = v.norm_sqr();
                *v = *v * (f * T::local_factor(coupling * rho * rho, self.mode));
            }
        }
    }

    fn kinetic_step(&mut self, psi: &mut [T]) {
        let n = psi.len();
        let rhs = &mut self.scratch;
        for (j, r) in rhs.iter_mut().enumerate() {
            let i = j + 1;
            *r = self.rhs_diag * psi[i] + (psi[i - 1] + psi[i + 1]) * self.rhs_off;
        }
        self.factor.solve_in_place(rhs);
        psi[1..n - 1].copy_from_slice(rhs);
        psi[0] = T::zero();
        psi[n - 1] = T::zero();
    }

    /// One Strang step; in imaginary time the result is renormalised. Returns the
    /// norm after the step (before renormalisation), or a blowup error.
    pub(crate) fn step(&mut self, psi: &mut [T], step_index: usize) -> Result<f64> {
        self.local_half_step(psi);
        self.kinetic_step(psi);
        self.local_half_step(psi);
        let norm = self.dx * psi.iter().map(|v| v.norm_sqr()).sum::<f64>();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(Error::Blowup { step: step_index });
        }
        if self.mode == Mode::ImaginaryTime {
            let scale = norm.sqrt().recip();
            for v in psi.iter_mut() {
                *v = *v * scale;
            }
        }
        Ok(norm)
    }
}

/// Integrals `(∫½|ψ_x|², ∫V|ψ|², ∫|ψ|⁶)` with centred differences for `ψ_x`
/// (one-sided at the two end nodes).
fn energy_terms<T: Amp>(grid: &Grid, psi: &[T], potential: &[f64]) -> (f64, f64, f64) {
    let n = psi.len();
    let dx = grid.dx();
    // trapezoid weights: half at the two end nodes
    let end_weight = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let mut kin = 0.0;
    let mut pot = 0.0;
    let mut sextic = 0.0;
    for i in 0..n {
        let grad_sq = if i == 0 {
            (psi[1] - psi[0]).norm_sqr()
        } else if i == n - 1 {
            (psi[n - 1] - psi[n - 2]).norm_sqr()
        } else {
            0.25 * (psi[i + 1] - psi[i - 1]).norm_sqr()
        };
        let rho = psi[i].norm_sqr();
        let w = end_weight(i);
        kin += w * grad_sq;
        pot += w * rho * potential[i];
        sextic += w * rho * rho * rho;
    }
    (0.5 * kin / dx, pot * dx, sextic * dx)
}

fn check_potential(grid: &Grid, potential: &[f64]) -> Result<()> {
    if potential.len() != grid.n_points() {
        return Err(Error::Contract(format!(
            "potential has {} samples, grid has {} nodes",
            potential.len(),
            grid.n_points()
        )));
    }
    Ok(())
}

/// `E[ψ] = ∫(½|ψ_x|² + V|ψ|² + (g5/3)|ψ|⁶) dx`.
pub fn energy(psi: &WaveFunction, potential: &[f64], g5: f64) -> Result<f64> {
    check_potential(psi.grid(), potential)?;
    let (k, v, s) = energy_terms(psi.grid(), psi.values(), potential);
    Ok(k + v + g5 / 3.0 * s)
}

/// `μ[ψ] = ∫(½|ψ_x|² + V|ψ|² + g5|ψ|⁶) dx`.
pub fn chemical_potential(psi: &WaveFunction, potential: &[f64], g5: f64) -> Result<f64> {
    check_potential(psi.grid(), potential)?;
    let (k, v, s) = energy_terms(psi.grid(), psi.values(), potential);
    Ok(k + v + g5 * s)
}

fn check_boundary(psi: &WaveFunction) -> Result<()> {
    let v = psi.values();
    if v[0].norm_sqr() != 0.0 || v[v.len() - 1].norm_sqr() != 0.0 {
        return Err(Error::Contract(
            "boundary nodes must be zero under Dirichlet conditions".into(),
        ));
    }
    Ok(())
}

/// Advances `psi` by one split step of size `params.dt`.
pub fn step(psi: &WaveFunction, potential: &[f64], params: &SolverParams) -> Result<WaveFunction> {
    check_boundary(psi)?;
    let mut kernel = Kernel::<Complex64>::new(psi.grid(), potential, params)?;
    let mut out = psi.clone();
    kernel.step(out.values_mut(), 1)?;
    Ok(out)
}

/// Repeated real-time stepping; `ceil(t_final / dt)` steps.
pub fn evolve_real(
    psi: &WaveFunction,
    potential: &[f64],
    params: &SolverParams,
    t_final: f64,
) -> Result<WaveFunction> {
    if params.mode != Mode::RealTime {
        return Err(Error::Parameter(
            "evolve_real requires real-time mode".into(),
        ));
    }
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(Error::Parameter(format!(
            "t_final must be positive, got {t_final}"
        )));
    }
    check_boundary(psi)?;
    let mut kernel = Kernel::<Complex64>::new(psi.grid(), potential, params)?;
    let steps = step_count(t_final, params.dt);
    let mut out = psi.clone();
    for k in 1..=steps {
        kernel.step(out.values_mut(), k)?;
    }
    Ok(out)
}

/// `ceil(t / dt)`, ignoring roundoff-sized overshoot of an exact multiple.
pub fn step_count(t_final: f64, dt: f64) -> usize {
    let ratio = t_final / dt;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Imaginary-time relaxation from a normalised Gaussian seed.
pub fn ground_state(
    potential: &[f64],
    params: &SolverParams,
    grid: &Grid,
) -> Result<GroundStateResult> {
    ground_state_observed(potential, params, grid, |_, _| {})
}

/// [`ground_state`] that reports `(step, energy)` at every convergence check.
pub fn ground_state_observed<F: FnMut(usize, f64)>(
    potential: &[f64],
    params: &SolverParams,
    grid: &Grid,
    mut observe: F,
) -> Result<GroundStateResult> {
    if params.mode != Mode::ImaginaryTime {
        return Err(Error::Parameter(
            "ground_state requires imaginary-time mode".into(),
        ));
    }
    let started = Instant::now();
    let mut kernel = Kernel::<f64>::new(grid, potential, params)?;
    let seed = WaveFunction::gaussian(*grid, params.initial_sigma).normalized()?;
    let mut psi: Vec<f64> = seed.values().iter().map(|v| v.re).collect();

    let energy_of = |psi: &[f64]| {
        let (k, v, s) = energy_terms(grid, psi, potential);
        k + v + params.g5 / 3.0 * s
    };
    let mut previous = energy_of(&psi);
    observe(0, previous);
    let mut converged = false;
    let mut steps_taken = 0;
    for k in 1..=params.max_steps {
        kernel.step(&mut psi, k)?;
        steps_taken = k;
        if k % ENERGY_CHECK_INTERVAL == 0 {
            let e = energy_of(&psi);
            if !e.is_finite() {
                return Err(Error::Blowup { step: k });
            }
            observe(k, e);
            if (e - previous).abs() <= params.energy_tol * e.abs() {
                converged = true;
                break;
            }
            previous = e;
        }
    }

    let psi = WaveFunction::from_real(*grid, &psi)?;
    let energy = energy(&psi, potential, params.g5)?;
    let chemical_potential = chemical_potential(&psi, potential, params.g5)?;
    Ok(GroundStateResult {
        psi,
        energy,
        chemical_potential,
        steps_taken,
        converged,
        wall_time: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn small_grid() -> Grid {
        Grid::with_points(5.0, 201).unwrap()
    }

    fn bump(grid: Grid) -> WaveFunction {
        let mut psi = WaveFunction::from_fn(grid, |x| {
            Complex64::new((-x * x).exp(), 0.3 * x * (-x * x).exp())
        });
        psi.clamp_boundary();
        psi.normalized().unwrap()
    }

    #[test]
    fn step_count_rounds_up() {
        assert_eq!(step_count(5.0, 1e-3), 5000);
        assert_eq!(step_count(1.0, 0.3), 4);
        assert_eq!(step_count(0.3, 0.1), 3);
    }

    #[test]
    fn params_validation_names_key() {
        let bad = [
            (
                SolverParams {
                    dt: 0.0,
                    ..Default::default()
                },
                "dt",
            ),
            (
                SolverParams {
                    g5: -1.0,
                    ..Default::default()
                },
                "g5",
            ),
            (
                SolverParams {
                    max_steps: 0,
                    ..Default::default()
                },
                "max_steps",
            ),
            (
                SolverParams {
                    energy_tol: f64::NAN,
                    ..Default::default()
                },
                "energy_tol",
            ),
        ];
        for (p, key) in bad {
            match p.validate() {
                Err(Error::Config { key: k, .. }) => assert_eq!(k, key),
                other => panic!("{key}: {other:?}"),
            }
        }
    }

    #[test]
    fn step_requires_zero_boundary() {
        let grid = small_grid();
        let psi = WaveFunction::from_fn(grid, |_| Complex64::new(0.1, 0.0));
        let v = vec![0.0; grid.n_points()];
        assert!(matches!(
            step(&psi, &v, &SolverParams::real_time(0.0)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn potential_length_checked() {
        let grid = small_grid();
        let psi = bump(grid);
        assert!(matches!(
            energy(&psi, &[0.0; 3], 0.0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn energy_of_box_mode() {
        // ψ = sin(π(x+L)/2L): kinetic energy π²/8L² for unit norm
        let grid = Grid::with_points(5.0, 2001).unwrap();
        let psi =
            WaveFunction::from_fn(grid, |x| Complex64::new((PI * (x + 5.0) / 10.0).sin(), 0.0))
                .normalized()
                .unwrap();
        let v = vec![0.0; grid.n_points()];
        let e = energy(&psi, &v, 0.0).unwrap();
        let exact = PI * PI / 200.0;
        assert!((e - exact).abs() / exact < 1e-5, "{e} vs {exact}");
    }

    #[test]
    fn energy_and_mu_differ_by_sextic_weight() {
        let grid = small_grid();
        let psi = bump(grid);
        let v: Vec<f64> = grid.positions().iter().map(|x| 0.1 * x).collect();
        let e0 = energy(&psi, &v, 0.0).unwrap();
        let e = energy(&psi, &v, 3.0).unwrap();
        let mu = chemical_potential(&psi, &v, 3.0).unwrap();
        let sextic = grid
            .integrate(&psi.density().iter().map(|r| r * r * r).collect::<Vec<_>>())
            .unwrap();
        assert!((e - e0 - sextic).abs() < 1e-12);
        assert!((mu - e0 - 3.0 * sextic).abs() < 1e-12);
    }

    #[test]
    fn real_kernel_matches_complex_kernel() {
        let grid = small_grid();
        let v: Vec<f64> = grid.positions().iter().map(|x| 0.5 * x * x).collect();
        let params = SolverParams {
            dt: 0.01,
            ..SolverParams::imaginary(2.0)
        };
        let psi0 = WaveFunction::gaussian(grid, 1.5).normalized().unwrap();
        let mut re: Vec<f64> = psi0.values().iter().map(|c| c.re).collect();
        let mut cx = psi0.values().to_vec();
        let mut kr = Kernel::<f64>::new(&grid, &v, &params).unwrap();
        let mut kc = Kernel::<Complex64>::new(&grid, &v, &params).unwrap();
        for k in 1..=50 {
            kr.step(&mut re, k).unwrap();
            kc.step(&mut cx, k).unwrap();
        }
        for (a, b) in re.iter().zip(&cx) {
            assert!((a - b.re).abs() < 1e-13 && b.im.abs() < 1e-13);
        }
    }

    #[test]
    fn imaginary_step_keeps_unit_norm() {
        let grid = small_grid();
        let v = vec![1.0; grid.n_points()];
        let out = step(&bump(grid), &v, &SolverParams::imaginary(1.0)).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn real_time_conserves_norm() {
        let grid = small_grid();
        let v: Vec<f64> = grid.positions().iter().map(|x| x.sin()).collect();
        let psi = bump(grid);
        let out = evolve_real(&psi, &v, &SolverParams::real_time(2.0), 1.0).unwrap();
        assert!((out.norm() - psi.norm()).abs() < 1e-12);
    }

    #[test]
    fn evolve_rejects_imaginary_mode() {
        let grid = small_grid();
        let v = vec![0.0; grid.n_points()];
        assert!(matches!(
            evolve_real(&bump(grid), &v, &SolverParams::imaginary(0.0), 1.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn blowup_reported_with_step() {
        let grid = small_grid();
        let mut v = vec![0.0; grid.n_points()];
        v[100] = 1e6;
        let params = SolverParams {
            dt: 1.0,
            max_steps: 100,
            ..SolverParams::imaginary(0.0)
        };
        let mut kernel = Kernel::<f64>::new(&grid, &v, &params).unwrap();
        // all weight on a node the potential factor annihilates
        let mut re = vec![0.0; grid.n_points()];
        re[100] = 1.0;
        assert!(matches!(
            kernel.step(&mut re, 7),
            Err(Error::Blowup { step: 7 })
        ));
    }

    proptest! {
        #[test]
        fn small_exp_matches_std(a in -1e-3f64..1e-3) {
            prop_assert!((exp_neg_small(a) - (-a).exp()).abs() <= 4.0 * f64::EPSILON);
        }

        #[test]
        fn small_cis_matches_std(a in -1e-3f64..1e-3) {
            let z = cis_neg_small(a);
            let r = Complex64::from_polar(1.0, -a);
            prop_assert!((z - r).norm() <= 4.0 * f64::EPSILON);
        }

        #[test]
        fn real_step_unitary(g5 in 0.0f64..5.0, amp in 0.0f64..3.0) {
            let grid = Grid::with_points(4.0, 81).unwrap();
            let v: Vec<f64> = grid.positions().iter().map(|x| amp * x.cos()).collect();
            let psi = bump(grid);
            let out = step(&psi, &v, &SolverParams { dt: 0.05, ..SolverParams::real_time(g5) }).unwrap();
            prop_assert!((out.norm() - psi.norm()).abs() < 1e-12);
        }
    }
}
