//! Uniform spatial mesh on `[-L, L]`, the complex field living on it, and the
//! quadrature every observable is built from.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Smallest mesh accepted by [`Grid`].
pub const MIN_POINTS: usize = 16;

/// Column header of the wavefunction dump format.
pub const DUMP_HEADER: &str = "# x re im density";

/// Uniform mesh over `[-L, L]`. The node count is derived from `(L, dx)`, so the
/// triple can never be inconsistent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_width: f64,
    n_points: usize,
    dx: f64,
}

impl Grid {
    /// Mesh with spacing as close as possible to `dx`; the spacing is then adjusted
    /// so that both end points are nodes.
    pub fn new(half_width: f64, dx: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::config(
                "L",
                format!("must be positive, got {half_width}"),
            ));
        }
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::config("dx", format!("must be positive, got {dx}")));
        }
        let intervals = (2.0 * half_width / dx).round();
        if intervals > (u32::MAX as f64) {
            return Err(Error::config("dx", "mesh is too fine"));
        }
        Self::with_points(half_width, intervals as usize + 1)
    }

    pub fn with_points(half_width: f64, n_points: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::config(
                "L",
                format!("must be positive, got {half_width}"),
            ));
        }
        if n_points < MIN_POINTS {
            return Err(Error::config(
                "dx",
                format!("grid needs at least {MIN_POINTS} nodes, got {n_points}"),
            ));
        }
        Ok(Grid {
            half_width,
            n_points,
            dx: 2.0 * half_width / (n_points - 1) as f64,
        })
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Position of node `i`.
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.half_width
        } else {
            -self.half_width + i as f64 * self.dx
        }
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Trapezoidal rule over the whole mesh.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.n_points {
            return Err(Error::Contract(format!(
                "{} samples supplied for a {}-node grid",
                f.len(),
                self.n_points
            )));
        }
        Ok(self.integrate_unchecked(f))
    }

    #[inline]
    pub(crate) fn integrate_unchecked(&self, f: &[f64]) -> f64 {
        let n = f.len();
        let interior: f64 = f[1..n - 1].iter().sum();
        self.dx * (interior + 0.5 * (f[0] + f[n - 1]))
    }

    /// Samples `f(x)` on every node.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.n_points).map(|i| f(self.x(i))).collect()
    }
}

/// Trapezoidal integral of real samples over `grid`.
pub fn trapezoid_integrate(grid: &Grid, f: &[f64]) -> Result<f64> {
    grid.integrate(f)
}

/// Complex amplitudes on the nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid,
    values: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::Contract(format!(
                "{} amplitudes supplied for a {}-node grid",
                values.len(),
                grid.n_points()
            )));
        }
        Ok(WaveFunction { grid, values })
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        Self::new(
            grid,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: Grid, f: F) -> Self {
        let values = (0..grid.n_points()).map(|i| f(grid.x(i))).collect();
        WaveFunction { grid, values }
    }

    /// Unnormalised Gaussian `exp(-x²/(2σ²))` with the boundary nodes pinned to zero.
    pub fn gaussian(grid: Grid, sigma: f64) -> Self {
        let mut psi = Self::from_fn(grid, |x| {
            Complex64::new((-x * x / (2.0 * sigma * sigma)).exp(), 0.0)
        });
        psi.clamp_boundary();
        psi
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// `∫|ψ|² dx`.
    pub fn norm(&self) -> f64 {
        self.grid.integrate_unchecked(&self.density())
    }

    /// Zeroes the two boundary nodes (homogeneous Dirichlet conditions).
    pub fn clamp_boundary(&mut self) {
        let n = self.values.len();
        self.values[0] = Complex64::new(0.0, 0.0);
        self.values[n - 1] = Complex64::new(0.0, 0.0);
    }

    /// Rescales to unit norm in place and returns the norm before scaling.
    pub fn normalize_in_place(&mut self) -> Result<f64> {
        let norm = self.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::DegenerateState(format!(
                "cannot normalize a state with norm {norm}"
            )));
        }
        let scale = norm.sqrt().recip();
        for v in &mut self.values {
            *v *= scale;
        }
        Ok(norm)
    }

    pub fn normalized(&self) -> Result<Self> {
        let mut out = self.clone();
        out.normalize_in_place()?;
        Ok(out)
    }

    /// Writes the four-column text dump. `preamble` lines are emitted first as
    /// `# `-prefixed comments.
    pub fn write_dump<W: Write>(&self, mut out: W, preamble: &[String]) -> Result<()> {
        for line in preamble {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "{DUMP_HEADER}")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(
                out,
                "{:.16e} {:.16e} {:.16e} {:.16e}",
                self.grid.x(i),
                v.re,
                v.im,
                v.norm_sqr()
            )?;
        }
        Ok(())
    }

    /// Parses a dump produced by [`WaveFunction::write_dump`]. The grid is rebuilt from
    /// the first and last positions and the row count; comment lines are skipped.
    pub fn read_dump<R: BufRead>(input: R) -> Result<Self> {
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    reason: format!("expected 4 columns, found {}", fields.len()),
                });
            }
            let mut parsed = [0.0; 3];
            for (slot, field) in parsed.iter_mut().zip(&fields[..3]) {
                *slot = field.parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    reason: format!("malformed number `{field}`"),
                })?;
            }
            xs.push(parsed[0]);
            values.push(Complex64::new(parsed[1], parsed[2]));
        }
        if xs.len() < MIN_POINTS {
            return Err(Error::Parse {
                line: 0,
                reason: format!("dump holds {} rows, need at least {MIN_POINTS}", xs.len()),
            });
        }
        let half_width = -xs[0];
        let grid = Grid::with_points(half_width, xs.len())?;
        let tol = 1e-9 * half_width.max(1.0);
        if let Some(i) = (0..xs.len()).find(|&i| (xs[i] - grid.x(i)).abs() > tol) {
            return Err(Error::Parse {
                line: 0,
                reason: format!("row {i}: position {} does not lie on a uniform mesh", xs[i]),
            });
        }
        WaveFunction::new(grid, values)
    }
}
