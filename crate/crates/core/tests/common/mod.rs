#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use qal::Grid;

/// Lowest eigenvector of `-½D² + V` on the interior nodes (Dirichlet ends),
/// returned on the full grid as a density normalised with the trapezoid rule.
pub fn dense_ground_density(grid: &Grid, v: &[f64]) -> (f64, Vec<f64>) {
    let n = grid.n_points() - 2;
    let h = grid.dx();
    let off = -0.5 / (h * h);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 1.0 / (h * h) + v[i + 1];
        if i + 1 < n {
            m[(i, i + 1)] = off;
            m[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::new(m);
    let (k, lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, l)| (k, *l))
        .unwrap();
    let col = eig.eigenvectors.column(k);
    let mut rho = vec![0.0; grid.n_points()];
    for i in 0..n {
        rho[i + 1] = col[i] * col[i];
    }
    let norm: f64 = rho.iter().sum::<f64>() * h;
    rho.iter_mut().for_each(|r| *r /= norm);
    (lambda, rho)
}

/// `<ψ|-½D² + V|ψ> / <ψ|ψ>` with the 3-point Laplacian on the interior nodes.
pub fn rayleigh_quotient(grid: &Grid, v: &[f64], psi: &[num_complex::Complex64]) -> f64 {
    let h2 = grid.dx() * grid.dx();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 1..psi.len() - 1 {
        let lap = (psi[i + 1] - 2.0 * psi[i] + psi[i - 1]) / h2;
        let h_psi = -0.5 * lap + v[i] * psi[i];
        num += (psi[i].conj() * h_psi).re;
        den += psi[i].norm_sqr();
    }
    num / den
}

/// RMS width of a density sampled on `grid`, by direct summation.
pub fn rms_width(grid: &Grid, rho: &[f64]) -> f64 {
    let h = grid.dx();
    let w = |i: usize| {
        if i == 0 || i + 1 == rho.len() {
            0.5 * h
        } else {
            h
        }
    };
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (i, &r) in rho.iter().enumerate() {
        let x = -grid.half_width() + i as f64 * h;
        m0 += w(i) * r;
        m1 += w(i) * r * x;
        m2 += w(i) * r * x * x;
    }
    let mean = m1 / m0;
    (m2 / m0 - mean * mean).sqrt()
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
