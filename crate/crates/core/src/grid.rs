//! Periodic 3D computational box with spectral (FFT) differentiation.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Cubic periodic grid: `m` points per axis, box side `side`, spacing h = side/m.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid3 {
    pub m: usize,
    pub side: f64,
}

impl Grid3 {
    pub fn h(&self) -> f64 {
        self.side / self.m as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(3)
    }

    pub fn len(&self) -> usize {
        self.m * self.m * self.m
    }

    /// Centered coordinate of node i along one axis: −side/2 + i·h.
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.side + i as f64 * self.h()
    }

    /// Signed spectral frequency of index i: 2π·ĩ/side with ĩ ∈ (−m/2, m/2].
    pub fn freq(&self, i: usize) -> f64 {
        let m = self.m as i64;
        let s = if (i as i64) <= m / 2 { i as i64 } else { i as i64 - m };
        2.0 * std::f64::consts::PI * s as f64 / self.side
    }

    /// Minimum-image distance of node (ix,iy,iz) from the origin (for
    /// translation-invariant kernels sampled on the torus).
    pub fn min_image_dist(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        let d = |i: usize| {
            let m = self.m as f64;
            let mut t = i as f64;
            if t > m / 2.0 {
                t -= m;
            }
            t * self.h()
        };
        let (x, y, z) = (d(ix), d(iy), d(iz));
        (x * x + y * y + z * z).sqrt()
    }

    pub fn idx(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.m + iy) * self.m + iz
    }
}

/// Planned 3D FFT of size m³ (row-major axis order x, y, z).
pub struct Fft3 {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    pub fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 { m, fwd: planner.plan_fft_forward(m), inv: planner.plan_fft_inverse(m) }
    }

    fn apply_axes(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let m = self.m;
        assert_eq!(data.len(), m * m * m);
        // z-axis: lines are contiguous
        fft.process(data);
        // y-axis: stride m within each x-block
        let mut line = vec![Complex64::default(); m];
        for ix in 0..m {
            let block = &mut data[ix * m * m..(ix + 1) * m * m];
            for iz in 0..m {
                for iy in 0..m {
                    line[iy] = block[iy * m + iz];
                }
                fft.process(&mut line);
                for iy in 0..m {
                    block[iy * m + iz] = line[iy];
                }
            }
        }
        // x-axis: stride m²
        for r in 0..m * m {
            for ix in 0..m {
                line[ix] = data[ix * m * m + r];
            }
            fft.process(&mut line);
            for ix in 0..m {
                data[ix * m * m + r] = line[ix];
            }
        }
    }

    /// Unnormalized forward DFT: X_k = Σ_j x_j e^{−ik·j 2π/m}.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply_axes(data, &self.fwd.clone());
    }

    /// Normalized inverse DFT (forward → inverse is the identity).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply_axes(data, &self.inv.clone());
        let scale = 1.0 / (self.m * self.m * self.m) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Unnormalized inverse DFT: x_j = Σ_k X_k e^{+ik·j 2π/m}.
    pub fn inverse_raw(&self, data: &mut [Complex64]) {
        self.apply_axes(data, &self.inv.clone());
    }
}

pub fn to_complex(real: &[f64]) -> Vec<Complex64> {
    real.iter().map(|&r| Complex64::new(r, 0.0)).collect()
}

pub fn re_parts(data: &[Complex64]) -> Vec<f64> {
    data.iter().map(|c| c.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_plane_wave() {
        let m = 8;
        let grid = Grid3 { m, side: 2.0 };
        let fft = Fft3::new(m);
        // plane wave along y with one full period across the box
        let mut data = vec![Complex64::default(); grid.len()];
        for ix in 0..m {
            for iy in 0..m {
                for iz in 0..m {
                    let y = iy as f64 * grid.h();
                    data[grid.idx(ix, iy, iz)] =
                        Complex64::new(0.0, 2.0 * std::f64::consts::PI * y / grid.side).exp();
                }
            }
        }
        let orig = data.clone();
        fft.forward(&mut data);
        // all energy should sit at ky index 1
        let peak = data[grid.idx(0, 1, 0)].norm();
        assert!((peak - grid.len() as f64).abs() < 1e-8);
        let total: f64 = data.iter().map(|c| c.norm_sqr()).sum();
        assert!((total - peak * peak).abs() < 1e-6);

        fft.inverse(&mut data);
        let err: f64 = data.iter().zip(&orig).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn spectral_laplacian_of_eigenfunction() {
        let m = 16;
        let grid = Grid3 { m, side: 1.0 };
        let fft = Fft3::new(m);
        let k = 2.0 * std::f64::consts::PI * 2.0; // mode n = 2 along x
        let phi: Vec<f64> = (0..grid.len())
            .map(|idx| {
                let ix = idx / (m * m);
                (k * (ix as f64 * grid.h())).cos()
            })
            .collect();
        let mut data = to_complex(&phi);
        fft.forward(&mut data);
        for ix in 0..m {
            for iy in 0..m {
                for iz in 0..m {
                    let k2 = grid.freq(ix).powi(2) + grid.freq(iy).powi(2) + grid.freq(iz).powi(2);
                    data[grid.idx(ix, iy, iz)] *= k2;
                }
            }
        }
        fft.inverse(&mut data);
        for (i, c) in data.iter().enumerate() {
            assert!((c.re - k * k * phi[i]).abs() < 1e-8);
        }
    }
}
