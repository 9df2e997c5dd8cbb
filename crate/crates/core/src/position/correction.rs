//! Correction velocity `v~ = grad(lap^{-1} g) / rho` on the torus.

use std::f64::consts::PI;

use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::position::PilotField;
use crate::{Exec, C64};

/// In-place multidimensional FFT on an `n^d` row-major grid (axis 0 slowest).
fn fft_nd(data: &mut [C64], n: usize, d: usize, direction: FftDirection) {
    let fft = FftPlanner::new().plan_fft(n, direction);
    let mut line = vec![C64::from(0.0); n];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let blocks = data.len() / (n * stride);
        for b in 0..blocks {
            for s in 0..stride {
                let base = b * n * stride + s;
                for k in 0..n {
                    line[k] = data[base + k * stride];
                }
                fft.process(&mut line);
                for k in 0..n {
                    data[base + k * stride] = line[k];
                }
            }
        }
    }
}

fn signed_freq(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Multi-index of flat grid index `idx`.
fn grid_index(mut idx: usize, n: usize, d: usize) -> [usize; 3] {
    let mut out = [0; 3];
    for axis in (0..d).rev() {
        out[axis] = idx % n;
        idx /= n;
    }
    out
}

/// Gradient of the zero-mean solution of `lap Phi = g` on a periodic grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PoissonSolution {
    pub points: usize,
    pub dim: usize,
    pub box_len: f64,
    /// `grad[axis][grid index]`.
    pub grad: Vec<Vec<f64>>,
    /// Fourier coefficients of each gradient component, normalised so that
    /// `grad(x) = sum_k coeff_k e^{i k.x}`; the Nyquist mode is dropped.
    pub coeffs: Vec<Vec<C64>>,
}

/// Solves `lap Phi = g` spectrally. The mean of `g` must vanish to
/// `mean_tol * max|g|`.
pub fn solve_torus_poisson(g: &[f64], points: usize, dim: usize, box_len: f64, mean_tol: f64) -> Result<PoissonSolution> {
    if points < 2 || g.len() != points.pow(dim as u32) {
        return Err(Error::DimensionMismatch { expected: points.pow(dim as u32), found: g.len() });
    }
    let total = g.len();
    let mean = g.iter().sum::<f64>() / total as f64;
    let scale = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if mean.abs() > mean_tol * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NonZeroMean(mean));
    }
    let mut hat: Vec<C64> = g.iter().map(|&v| C64::from(v)).collect();
    fft_nd(&mut hat, points, dim, FftDirection::Forward);
    let unit = 2.0 * PI / box_len;
    let mut coeffs = vec![vec![C64::from(0.0); total]; dim];
    for idx in 0..total {
        let m = grid_index(idx, points, dim);
        let nyquist = (0..dim).any(|a| points % 2 == 0 && m[a] == points / 2);
        if idx == 0 || nyquist {
            continue;
        }
        let k: Vec<f64> = (0..dim).map(|a| unit * signed_freq(m[a], points) as f64).collect();
        let k2: f64 = k.iter().map(|v| v * v).sum();
        // Phi_k = -g_k / k^2, grad Phi_k = i k Phi_k.
        let phi = -hat[idx] / k2 / total as f64;
        for a in 0..dim {
            coeffs[a][idx] = C64::new(0.0, k[a]) * phi;
        }
    }
    let mut grad = Vec::with_capacity(dim);
    for c in &coeffs {
        let mut buf = c.clone();
        fft_nd(&mut buf, points, dim, FftDirection::Inverse);
        grad.push(buf.iter().map(|z| z.re).collect());
    }
    Ok(PoissonSolution { points, dim, box_len, grad, coeffs })
}

impl PoissonSolution {
    /// Spectral interpolation of the gradient at an arbitrary point.
    pub fn grad_at(&self, x: &[f64]) -> Vec<f64> {
        let unit = 2.0 * PI / self.box_len;
        let mut out = vec![0.0; self.dim];
        for idx in 0..self.coeffs[0].len() {
            if (0..self.dim).all(|a| self.coeffs[a][idx] == C64::from(0.0)) {
                continue;
            }
            let m = grid_index(idx, self.points, self.dim);
            let arg: f64 = (0..self.dim).map(|a| unit * signed_freq(m[a], self.points) as f64 * x[a]).sum();
            let ph = C64::from_polar(1.0, arg);
            for a in 0..self.dim {
                out[a] += (self.coeffs[a][idx] * ph).re;
            }
        }
        out
    }

    /// Spectral divergence of a grid vector field `f[axis][grid index]`.
    pub fn divergence(&self, f: &[Vec<f64>]) -> Vec<f64> {
        let total = f[0].len();
        let unit = 2.0 * PI / self.box_len;
        let mut acc = vec![C64::from(0.0); total];
        for (a, comp) in f.iter().enumerate() {
            let mut hat: Vec<C64> = comp.iter().map(|&v| C64::from(v)).collect();
            fft_nd(&mut hat, self.points, self.dim, FftDirection::Forward);
            for idx in 0..total {
                let m = grid_index(idx, self.points, self.dim);
                if self.points % 2 == 0 && m[a] == self.points / 2 {
                    continue;
                }
                acc[idx] += C64::new(0.0, unit * signed_freq(m[a], self.points) as f64) * hat[idx];
            }
        }
        fft_nd(&mut acc, self.points, self.dim, FftDirection::Inverse);
        acc.iter().map(|z| z.re / total as f64).collect()
    }
}

/// Grid fields for one state: density, guidance velocity, `g` and the
/// correction velocity, plus the Poisson residual `max |div(v~ rho) - g|`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrectionField {
    pub points: usize,
    pub dim: usize,
    pub box_len: f64,
    pub rho: Vec<f64>,
    /// `velocity[axis][grid index]`; NaN at nodes.
    pub velocity: Vec<Vec<f64>>,
    pub g: Vec<f64>,
    pub correction: Vec<Vec<f64>>,
    pub residual: f64,
    pub poisson: PoissonSolution,
}

impl CorrectionField {
    /// Coordinates of grid point `idx`.
    pub fn coordinates(&self, idx: usize) -> Vec<f64> {
        let m = grid_index(idx, self.points, self.dim);
        (0..self.dim).map(|a| m[a] as f64 * self.box_len / self.points as f64).collect()
    }
}

/// Samples the single-fermion fields on an `points^d` grid and solves for the
/// correction velocity. Requires `points >= 4 K + 1` with `K` the largest
/// integer wave-vector component, so that `g` is sampled without aliasing.
pub fn correction_velocity(field: &PilotField, points: usize, exec: Exec) -> Result<CorrectionField> {
    let space = field.space();
    if space.fermion_number() != 1 {
        return Err(invalid("the correction velocity is defined for a single fermion only"));
    }
    let lat = space.basis.lattice();
    let kmax = lat.max_integer() as usize;
    if points < 4 * kmax + 1 {
        return Err(invalid(format!("grid of {points} points is too coarse; need at least {}", 4 * kmax + 1)));
    }
    let dim = lat.dim().get();
    let l = lat.box_len();
    let total = points.pow(dim as u32);
    let samples = exec.map_range(total, |idx| -> Result<(f64, Vec<f64>, f64)> {
        let m = grid_index(idx, points, dim);
        let x: Vec<f64> = (0..dim).map(|a| m[a] as f64 * l / points as f64).collect();
        let amp = field.amplitude(&x)?;
        let rho = amp.density();
        let j = super::current(&amp, &field.alphas);
        let g = field.g_term(&x)?;
        Ok((rho, j, g))
    });
    let mut rho = Vec::with_capacity(total);
    let mut velocity = vec![Vec::with_capacity(total); dim];
    let mut g = Vec::with_capacity(total);
    for s in samples {
        let (r, j, gv) = s?;
        for a in 0..dim {
            velocity[a].push(if r > field.node_floor() { j[a] / r } else { f64::NAN });
        }
        rho.push(r);
        g.push(gv);
    }
    let poisson = solve_torus_poisson(&g, points, dim, l, 1e-8)?;
    let correction: Vec<Vec<f64>> = poisson
        .grad
        .iter()
        .map(|comp| comp.iter().zip(&rho).map(|(gp, r)| if *r > field.node_floor() { gp / r } else { f64::NAN }).collect())
        .collect();
    let div = poisson.divergence(&poisson.grad);
    let residual = div.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(CorrectionField { points, dim, box_len: l, rho, velocity, g, correction, residual, poisson })
}
