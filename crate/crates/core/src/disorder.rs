//! Piecewise-constant random-amplitude potential `V(x) = V0 * A_n` on `S`
//! equal segments of `[-L, L]`, with amplitudes drawn from a bit-exact
//! splitmix64 stream.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// splitmix64 generator. Bit-exact across implementations; not for cryptography.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut t = self.state;
        t = (t ^ (t >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        t = (t ^ (t >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        t ^ (t >> 31)
    }

    /// Uniform draw in `[0, 1)` from the top 53 bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomPotential {
    v0: f64,
    half_width: f64,
    seed: u64,
    amplitudes: Vec<f64>,
}

impl RandomPotential {
    pub fn new(v0: f64, segments: usize, half_width: f64, seed: u64) -> Result<Self> {
        if segments == 0 {
            return Err(Error::config("S", "segment count must be at least 1"));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::config(
                "L",
                format!("must be positive, got {half_width}"),
            ));
        }
        if !(v0.is_finite() && v0 >= 0.0) {
            return Err(Error::config(
                "V0",
                format!("must be finite and >= 0, got {v0}"),
            ));
        }
        let mut rng = SplitMix64::new(seed);
        let amplitudes = (0..segments).map(|_| rng.next_f64()).collect();
        Ok(RandomPotential {
            v0,
            half_width,
            seed,
            amplitudes,
        })
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn segments(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Index of the segment holding `x`: half-open segments, the last one closed at `+L`.
    /// `None` outside `[-L, L]`.
    pub fn segment_of(&self, x: f64) -> Option<usize> {
        let l = self.half_width;
        if !(-l..=l).contains(&x) {
            return None;
        }
        let s = self.amplitudes.len();
        let n = ((x + l) * s as f64 / (2.0 * l)).floor() as usize;
        Some(n.min(s - 1))
    }

    /// `V(x)`; zero outside the box.
    pub fn value(&self, x: f64) -> f64 {
        self.segment_of(x)
            .map_or(0.0, |n| self.v0 * self.amplitudes[n])
    }

    /// `V(x_i)` on every node of `grid`. Node `i` sits at `-L + i * 2L/(N-1)`, so its
    /// segment is `floor(i * S / (N-1))`, evaluated in integers to keep segment edges
    /// that fall on nodes free of roundoff.
    pub fn sample_on_grid(&self, grid: &Grid) -> Result<Vec<f64>> {
        let gl = grid.half_width();
        if (gl - self.half_width).abs() > 1e-12 * gl.max(1.0) {
            return Err(Error::config(
                "L",
                format!(
                    "potential built for L={} but grid has L={gl}",
                    self.half_width
                ),
            ));
        }
        let s = self.amplitudes.len() as u128;
        let intervals = (grid.n_points() - 1) as u128;
        Ok((0..grid.n_points())
            .map(|i| {
                let n = ((i as u128 * s) / intervals).min(s - 1) as usize;
                self.v0 * self.amplitudes[n]
            })
            .collect())
    }
}

/// Convenience constructor matching the operation name used across the crate.
pub fn make_potential(
    v0: f64,
    segments: usize,
    half_width: f64,
    seed: u64,
) -> Result<RandomPotential> {
    RandomPotential::new(v0, segments, half_width, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // seed 0 reference outputs of the published splitmix64 algorithm
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn zero_amplitude_is_flat() {
        let p = make_potential(0.0, 300, 30.0, 99).unwrap();
        let g = Grid::new(30.0, 0.04).unwrap();
        assert!(p.sample_on_grid(&g).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = make_potential(1.0, 300, 30.0, 42).unwrap();
        let b = make_potential(1.0, 300, 30.0, 42).unwrap();
        assert_eq!(a.amplitudes(), b.amplitudes());
        let c = make_potential(1.0, 300, 30.0, 1).unwrap();
        let d = make_potential(1.0, 300, 30.0, 2).unwrap();
        assert_ne!(c.amplitudes(), d.amplitudes());
    }

    #[test]
    fn amplitudes_are_unit_uniform() {
        for seed in 0..20 {
            let p = make_potential(1.0, 300, 30.0, seed).unwrap();
            assert!(p.amplitudes().iter().all(|&a| (0.0..1.0).contains(&a)));
            let mean = p.amplitudes().iter().sum::<f64>() / 300.0;
            assert!((mean - 0.5).abs() < 0.05, "seed {seed}: mean {mean}");
        }
    }

    #[test]
    fn segment_mapping() {
        let p = make_potential(2.0, 300, 30.0, 5).unwrap();
        let g = Grid::new(30.0, 0.04).unwrap();
        let v = p.sample_on_grid(&g).unwrap();
        let a = p.amplitudes();
        assert_eq!(v[0], 2.0 * a[0]);
        assert_eq!(v[1500], 2.0 * a[299]);
        // [-30, -29.8) holds nodes 0..5
        assert!(v[..5].iter().all(|&x| x == 2.0 * a[0]));
        assert_eq!(v[5], 2.0 * a[1]);
        assert!(v.iter().all(|&x| (0.0..=2.0).contains(&x)));
        assert_eq!(p.value(30.5), 0.0);
        assert_eq!(p.value(-31.0), 0.0);
    }

    #[test]
    fn plateaus_have_equal_width() {
        let p = make_potential(1.0, 300, 30.0, 11).unwrap();
        let g = Grid::new(30.0, 0.04).unwrap();
        let v = p.sample_on_grid(&g).unwrap();
        let mut counts = vec![1usize];
        for w in v.windows(2) {
            if w[1] == w[0] {
                *counts.last_mut().unwrap() += 1;
            } else {
                counts.push(1);
            }
        }
        assert_eq!(counts.len(), 300);
        assert!(counts[..299].iter().all(|&c| c == 5), "{counts:?}");
        assert_eq!(counts[299], 6);
    }

    #[test]
    fn parameter_errors() {
        assert!(
            matches!(make_potential(1.0, 0, 30.0, 1), Err(Error::Config { ref key, .. }) if key == "S")
        );
        assert!(
            matches!(make_potential(1.0, 10, 0.0, 1), Err(Error::Config { ref key, .. }) if key == "L")
        );
        assert!(
            matches!(make_potential(-1.0, 10, 3.0, 1), Err(Error::Config { ref key, .. }) if key == "V0")
        );
        let p = make_potential(1.0, 10, 30.0, 1).unwrap();
        let g = Grid::new(20.0, 0.04).unwrap();
        assert!(p.sample_on_grid(&g).is_err());
    }
}
