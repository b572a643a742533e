//! Gross-Pitaevskii ground states on a periodic computational box:
//! imaginary-time flow with spectral Laplacian, residual certification,
//! and the spectral-gap smallness condition.

use crate::grid::{re_parts, to_complex, Fft3, Grid3};
use crate::{Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    DecayingTrap,
    PeriodicTorus,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrapKind {
    /// V_ext = c·|x|²
    Harmonic { c: f64 },
    /// V_ext = c·|x|⁴
    Quartic { c: f64 },
    /// Row-major m³ grid samples (axis order x, y, z).
    TabulatedGrid { values: Vec<f64> },
    ZeroOnTorus,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrapPotential {
    pub kind: TrapKind,
    /// Box half-width: the computational box has side 2L.
    pub l: f64,
    /// Grid points per axis; must be a power of two.
    pub m: usize,
    pub boundary: Boundary,
}

impl TrapPotential {
    pub fn harmonic(l: f64, m: usize) -> Self {
        TrapPotential { kind: TrapKind::Harmonic { c: 1.0 }, l, m, boundary: Boundary::DecayingTrap }
    }

    /// The unit torus (side 1) with V_ext ≡ 0.
    pub fn unit_torus(m: usize) -> Self {
        TrapPotential { kind: TrapKind::ZeroOnTorus, l: 0.5, m, boundary: Boundary::PeriodicTorus }
    }

    pub fn grid(&self) -> Grid3 {
        Grid3 { m: self.m, side: 2.0 * self.l }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 4 || !self.m.is_power_of_two() {
            return Err(Error::Validation("grid size M must be a power of two >= 4".into()));
        }
        if self.l <= 0.0 {
            return Err(Error::Validation("box half-width must be positive".into()));
        }
        match (&self.kind, self.boundary) {
            (TrapKind::ZeroOnTorus, Boundary::DecayingTrap) => {
                Err(Error::Validation("zero_on_torus requires periodic_torus boundary".into()))
            }
            (TrapKind::TabulatedGrid { values }, _) => {
                let grid = self.grid();
                if values.len() != grid.len() {
                    return Err(Error::Validation(format!(
                        "tabulated trap has {} samples, grid needs {}",
                        values.len(),
                        grid.len()
                    )));
                }
                if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                    return Err(Error::Validation("trap values must be finite and >= 0".into()));
                }
                Ok(())
            }
            (TrapKind::Harmonic { c } | TrapKind::Quartic { c }, _) if *c < 0.0 => {
                Err(Error::Validation("trap coefficient must be >= 0".into()))
            }
            _ => Ok(()),
        }
    }

    /// V_ext sampled on the grid (row-major x, y, z; coordinates centered).
    pub fn values(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let grid = self.grid();
        let mut out = vec![0.0; grid.len()];
        match &self.kind {
            TrapKind::ZeroOnTorus => {}
            TrapKind::TabulatedGrid { values } => out.copy_from_slice(values),
            TrapKind::Harmonic { c } | TrapKind::Quartic { c } => {
                let quartic = matches!(self.kind, TrapKind::Quartic { .. });
                for ix in 0..grid.m {
                    let x = grid.coord(ix);
                    for iy in 0..grid.m {
                        let y = grid.coord(iy);
                        for iz in 0..grid.m {
                            let z = grid.coord(iz);
                            let r2 = x * x + y * y + z * z;
                            out[grid.idx(ix, iy, iz)] = if quartic { c * r2 * r2 } else { c * r2 };
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GapReport {
    pub mu1: f64,
    pub mu2: f64,
    pub margin: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GpState {
    #[serde(skip)]
    pub phi: Vec<f64>,
    pub e_gp: f64,
    pub mu: f64,
    pub a: f64,
    pub residual: f64,
    pub gap_report: Option<GapReport>,
    pub trap: TrapPotential,
}

impl GpState {
    /// JSON header without the grid payload.
    pub fn header_json(&self) -> serde_json::Value {
        serde_json::json!({
            "e_gp": self.e_gp,
            "mu": self.mu,
            "a": self.a,
            "residual": self.residual,
            "gap_report": self.gap_report,
            "grid": { "m": self.trap.m, "l": self.trap.l, "boundary": self.trap.boundary },
        })
    }

    /// Raw grid dump: row-major (x, y, z), little-endian f64.
    pub fn write_grid_dump(&self, path: &std::path::Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(self.phi.len() * 8);
        for v in &self.phi {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn max_phi(&self) -> f64 {
        self.phi.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

/// Spectral workspace shared by the solver, residual and eigensolver.
struct Workspace {
    grid: Grid3,
    fft: Fft3,
    k2: Vec<f64>,
    v: Vec<f64>,
}

impl Workspace {
    fn new(trap: &TrapPotential) -> Result<Self> {
        let grid = trap.grid();
        let mut k2 = vec![0.0; grid.len()];
        for ix in 0..grid.m {
            for iy in 0..grid.m {
                for iz in 0..grid.m {
                    k2[grid.idx(ix, iy, iz)] =
                        grid.freq(ix).powi(2) + grid.freq(iy).powi(2) + grid.freq(iz).powi(2);
                }
            }
        }
        Ok(Workspace { grid, fft: Fft3::new(grid.m), k2, v: trap.values()? })
    }

    fn fft_of(&self, real: &[f64]) -> Vec<Complex64> {
        let mut data = to_complex(real);
        self.fft.forward(&mut data);
        data
    }

    fn minus_lap(&self, hat: &[Complex64]) -> Vec<f64> {
        let mut data: Vec<Complex64> = hat.iter().zip(&self.k2).map(|(c, &k2)| c * k2).collect();
        self.fft.inverse(&mut data);
        re_parts(&data)
    }

    /// −Δx + V_ext·x on a real grid vector.
    fn apply_one_body(&self, x: &[f64]) -> Vec<f64> {
        let hat = self.fft_of(x);
        let mut out = self.minus_lap(&hat);
        for (o, (&xv, &vv)) in out.iter_mut().zip(x.iter().zip(&self.v)) {
            *o += vv * xv;
        }
        out
    }

    fn precondition(&self, r: &[f64], sigma: f64) -> Vec<f64> {
        let mut data = to_complex(r);
        self.fft.forward(&mut data);
        for (c, &k2) in data.iter_mut().zip(&self.k2) {
            *c /= k2 + sigma;
        }
        self.fft.inverse(&mut data);
        re_parts(&data)
    }

    /// ∫|∇φ|² from the spectral coefficients (Parseval).
    fn kinetic(&self, hat: &[Complex64]) -> f64 {
        let m3 = self.grid.len() as f64;
        let s: f64 = hat.iter().zip(&self.k2).map(|(c, &k2)| k2 * c.norm_sqr()).sum();
        s * self.grid.cell_volume() / m3
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Lowest eigenpair of −Δ + V_ext orthogonal to `deflate`, by a LOBPCG-style
/// iteration (current iterate, preconditioned residual, previous direction)
/// with a 3D Rayleigh-Ritz step. Vectors are Euclidean-normalized.
fn pinvit_lowest(
    ws: &Workspace,
    deflate: &[Vec<f64>],
    tol: f64,
    max_iter: usize,
) -> Result<(f64, Vec<f64>)> {
    let n = ws.grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_2024);
    let mut u: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
    let project = |x: &mut Vec<f64>| {
        for d in deflate {
            let c = dot(x, d);
            axpy(x, -c, d);
        }
    };
    project(&mut u);
    let nu = norm(&u);
    if nu < 1e-300 {
        return Err(Error::Validation("deflation space exhausts the grid".into()));
    }
    u.iter_mut().for_each(|x| *x /= nu);
    let mut p: Option<Vec<f64>> = None;
    let mut last_res = f64::INFINITY;
    let mut prev_res;
    let mut smooth_next = false;
    // σ ≥ max V keeps the Richardson error factor (V−σ)/(k²+σ) inside (−1, 1)
    let sigma = ws.v.iter().cloned().fold(0.0f64, f64::max).max(1.0);

    for _ in 0..max_iter {
        let au = ws.apply_one_body(&u);
        let lam = dot(&u, &au);
        let mut r = au.clone();
        axpy(&mut r, -lam, &u);
        project(&mut r);
        prev_res = last_res;
        last_res = norm(&r);
        if std::env::var_os("BOSEGAS_EIG_TRACE").is_some() {
            eprintln!("pinvit lam={lam:.12e} res={last_res:.3e} smooth={smooth_next}");
        }
        if last_res <= tol * lam.abs().max(1.0) {
            return Ok((lam, u));
        }
        let mut w = ws.precondition(&r, sigma);
        project(&mut w);

        if smooth_next {
            // Rayleigh-Ritz is blind to high-frequency residual components once
            // the Ritz value has converged; a preconditioned Richardson step
            // (error damped by ≈ (V−σ)/(k²+σ)) scrubs them directly.
            smooth_next = false;
            let mut su = u.clone();
            axpy(&mut su, -1.0, &w);
            project(&mut su);
            let ns = norm(&su);
            if ns > 1e-300 {
                su.iter_mut().for_each(|x| *x /= ns);
                u = su;
                p = None;
                continue;
            }
        }
        if last_res > 0.9 * prev_res {
            smooth_next = true;
        }

        // orthonormal search basis {u, w, p}
        let mut basis: Vec<Vec<f64>> = vec![u.clone()];
        for cand in [Some(w.as_mut_slice()), p.as_deref_mut()].into_iter().flatten() {
            let mut c = cand.to_vec();
            let n0 = norm(&c);
            if n0 < 1e-300 {
                continue;
            }
            c.iter_mut().for_each(|x| *x /= n0);
            for b in &basis {
                let d = dot(&c, b);
                axpy(&mut c, -d, b);
            }
            let nc = norm(&c);
            if nc > 1e-7 {
                c.iter_mut().for_each(|x| *x /= nc);
                basis.push(c);
            }
        }
        if basis.len() == 1 {
            break; // stagnated: no new direction
        }
        let abasis: Vec<Vec<f64>> = basis.iter().map(|b| ws.apply_one_body(b)).collect();
        let k = basis.len();
        let mut small = nalgebra::DMatrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let v = dot(&basis[i], &abasis[j]);
                small[(i, j)] = v;
                small[(j, i)] = v;
            }
        }
        let (_, vecs) = crate::linalg::sym_eigen(&small);
        let y = vecs.column(0);
        let mut new_u = vec![0.0; n];
        for (i, b) in basis.iter().enumerate() {
            axpy(&mut new_u, y[i], b);
        }
        // previous-direction component (classic LOBPCG p update)
        let mut new_p = vec![0.0; n];
        for (i, b) in basis.iter().enumerate().skip(1) {
            axpy(&mut new_p, y[i], b);
        }
        let nn = norm(&new_u);
        new_u.iter_mut().for_each(|x| *x /= nn);
        project(&mut new_u);
        let nn2 = norm(&new_u);
        new_u.iter_mut().for_each(|x| *x /= nn2);
        u = new_u;
        let np = norm(&new_p);
        p = if np > 1e-12 {
            new_p.iter_mut().for_each(|x| *x /= np);
            Some(new_p)
        } else {
            None
        };
    }
    Err(Error::Convergence { residual: last_res, iterations: max_iter })
}

/// Lowest `count` eigenpairs of −Δ + V_ext, optionally orthogonal to `deflate0`.
/// Sequential deflated PINVIT; eigenvalues ascending, vectors Euclidean-orthonormal.
pub fn lowest_eigenpairs(
    trap: &TrapPotential,
    count: usize,
    deflate0: Option<&[f64]>,
    tol: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let ws = Workspace::new(trap)?;
    let mut deflate: Vec<Vec<f64>> = Vec::new();
    if let Some(d) = deflate0 {
        let nd = norm(d);
        deflate.push(d.iter().map(|&x| x / nd).collect());
    }
    let skip = deflate.len();
    let mut vals = Vec::with_capacity(count);
    for _ in 0..count {
        let (lam, vec) = pinvit_lowest(&ws, &deflate, tol, 2_000)?;
        vals.push(lam);
        deflate.push(vec);
    }
    Ok((vals, deflate.split_off(skip)))
}

const MAX_FLOW_ITER: usize = 50_000;

pub fn minimize_gp(trap: &TrapPotential, a: f64, tol: f64) -> Result<GpState> {
    if a < 0.0 {
        return Err(Error::Domain("scattering length must be >= 0".into()));
    }
    let ws = Workspace::new(trap)?;
    let grid = ws.grid;
    let h3 = grid.cell_volume();
    let g8 = 8.0 * PI * a;

    if a == 0.0 {
        // linear problem: exact reference states via the eigensolver
        let (lam, mut vecs) = lowest_eigenpairs(trap, 1, None, (tol * 1e-1).min(1e-9))?;
        let mut phi = vecs.remove(0);
        let total: f64 = phi.iter().sum();
        if total < 0.0 {
            phi.iter_mut().for_each(|x| *x = -*x);
        }
        phi.iter_mut().for_each(|x| *x = x.abs() / h3.sqrt()); // grid-measure L² normalization
        let hat = ws.fft_of(&phi);
        let residual = gp_residual_inner(&ws, &phi, &hat, 0.0, lam[0]);
        return Ok(GpState {
            phi,
            e_gp: lam[0],
            mu: lam[0],
            a,
            residual,
            gap_report: None,
            trap: trap.clone(),
        });
    }

    // initial guess: torus → exact constant; trap → normalized Gaussian
    let mut phi: Vec<f64> = match trap.boundary {
        Boundary::PeriodicTorus => vec![1.0; grid.len()],
        Boundary::DecayingTrap => {
            let mut p = vec![0.0; grid.len()];
            for ix in 0..grid.m {
                for iy in 0..grid.m {
                    for iz in 0..grid.m {
                        let r2 = grid.coord(ix).powi(2) + grid.coord(iy).powi(2) + grid.coord(iz).powi(2);
                        p[grid.idx(ix, iy, iz)] = (-0.5 * r2).exp();
                    }
                }
            }
            p
        }
    };
    let nrm = (h3 * dot(&phi, &phi)).sqrt();
    phi.iter_mut().for_each(|x| *x /= nrm);

    let energy_parts = |phi: &[f64], hat: &[Complex64]| -> (f64, f64, f64) {
        let kin = ws.kinetic(hat);
        let pot = h3 * dot(&ws.v, &phi.iter().map(|&x| x * x).collect::<Vec<_>>());
        let quart: f64 = h3 * phi.iter().map(|&x| x * x * x * x).sum::<f64>();
        (kin, pot, quart)
    };

    let mut hat = ws.fft_of(&phi);
    let (kin, pot, quart) = energy_parts(&phi, &hat);
    let mut e = kin + pot + PI * 4.0 * a * quart;
    let mut mu = e + 4.0 * PI * a * quart;
    let mut tau = 0.5;
    let mut residual = f64::INFINITY;
    let mut converged = false;

    let trace = std::env::var_os("BOSEGAS_FLOW_TRACE").is_some();
    for it in 0..MAX_FLOW_ITER {
        if trace && it % 500 == 0 {
            eprintln!("flow it={it} e={e:.15e} res={residual:.3e} tau={tau:.3e}");
        }
        // projected-gradient direction (−Δ + V + 8πaφ² − μ)φ in spectral form;
        // the shift σ ≥ max(V + 8πaφ²) keeps the explicit part of the
        // splitting contractive for any step
        let mut sigma = 0.0f64;
        let gvec: Vec<f64> = phi
            .iter()
            .zip(&ws.v)
            .map(|(&p, &v)| {
                let w = v + g8 * p * p;
                sigma = sigma.max(w);
                (w - mu) * p
            })
            .collect();
        let ghat = ws.fft_of(&gvec);

        loop {
            let mut new_hat: Vec<Complex64> = hat
                .iter()
                .zip(&ghat)
                .zip(&ws.k2)
                .map(|((&ph, &gh), &k2)| {
                    (ph * (1.0 + tau * sigma) - tau * gh) / (1.0 + tau * (k2 + sigma))
                })
                .collect();
            let mut data = new_hat.clone();
            ws.fft.inverse(&mut data);
            let mut new_phi = re_parts(&data);
            let nn = (h3 * dot(&new_phi, &new_phi)).sqrt();
            new_phi.iter_mut().for_each(|x| *x /= nn);
            for c in new_hat.iter_mut() {
                *c /= nn;
            }
            let (kin, pot, quart) = energy_parts(&new_phi, &new_hat);
            let e_new = kin + pot + 4.0 * PI * a * quart;
            let mu_new = e_new + 4.0 * PI * a * quart;
            let res_new = gp_residual_inner(&ws, &new_phi, &new_hat, a, mu_new);
            // near the minimum energy differences sit in rounding noise, so a
            // non-increasing residual also counts as progress
            if e_new <= e + 1e-12 * e.abs().max(1.0) || res_new <= residual {
                phi = new_phi;
                hat = new_hat;
                e = e_new;
                mu = mu_new;
                residual = res_new;
                tau = (tau * 1.1).min(2.0);
                break;
            }
            tau *= 0.5;
            if tau < 1e-10 {
                return Err(Error::Convergence { residual, iterations: MAX_FLOW_ITER });
            }
        }
        if residual <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence { residual, iterations: MAX_FLOW_ITER });
    }

    // sign normalization: the minimizer is unique up to a global sign
    let total: f64 = phi.iter().sum();
    if total < 0.0 {
        phi.iter_mut().for_each(|x| *x = -*x);
        hat.iter_mut().for_each(|c| *c = -*c);
    }
    let (kin, pot, quart) = energy_parts(&phi, &hat);
    let e_gp = kin + pot + 4.0 * PI * a * quart;
    let mu = e_gp + 4.0 * PI * a * quart;
    let residual = gp_residual_inner(&ws, &phi, &hat, a, mu);

    Ok(GpState { phi, e_gp, mu, a, residual, gap_report: None, trap: trap.clone() })
}

fn gp_residual_inner(ws: &Workspace, phi: &[f64], hat: &[Complex64], a: f64, mu: f64) -> f64 {
    let lap = ws.minus_lap(hat);
    let g8 = 8.0 * PI * a;
    let s: f64 = phi
        .iter()
        .zip(&lap)
        .zip(&ws.v)
        .map(|((&p, &l), &v)| {
            let r = l + (v + g8 * p * p - mu) * p;
            r * r
        })
        .sum();
    (ws.grid.cell_volume() * s).sqrt()
}

/// Independent re-evaluation of ‖(−Δ + V_ext + 8πaφ² − μ)φ‖.
pub fn gp_residual(state: &GpState, trap: &TrapPotential) -> Result<f64> {
    if state.trap.m != trap.m || state.trap.l != trap.l || state.trap.boundary != trap.boundary {
        return Err(Error::Validation("state and trap live on different grids".into()));
    }
    let ws = Workspace::new(trap)?;
    let hat = ws.fft_of(&state.phi);
    Ok(gp_residual_inner(&ws, &state.phi, &hat, state.a, state.mu))
}

/// μ₁/μ₂ of the spectral-gap condition: μ₁ = ∫(|∇φ|² + V_ext φ²) + 32πa‖φ‖∞²,
/// μ₂ = inf_{u⊥φ} ⟨u, (−Δ+V_ext)u⟩ − 8πa‖φ‖∞². Also evaluates the equivalent
/// inequality with 40πa on the left.
pub fn gap_check(state: &GpState, trap: &TrapPotential, a: f64) -> Result<GapReport> {
    let ws = Workspace::new(trap)?;
    let hat = ws.fft_of(&state.phi);
    let kin = ws.kinetic(&hat);
    let pot = ws.grid.cell_volume() * state.phi.iter().zip(&ws.v).map(|(&p, &v)| v * p * p).sum::<f64>();
    let sup2 = state.max_phi().powi(2);
    let mu1 = kin + pot + 32.0 * PI * a * sup2;

    let h3 = ws.grid.cell_volume();
    let phi_eucl: Vec<f64> = state.phi.iter().map(|&x| x * h3.sqrt()).collect();
    let (lam1, _) = pinvit_lowest(&ws, &[phi_eucl], 1e-9, 2_000)?;
    let mu2 = lam1 - 8.0 * PI * a * sup2;

    let condition_40 = kin + pot + 40.0 * PI * a * sup2 < lam1;
    let margin = mu2 - mu1;
    Ok(GapReport { mu1, mu2, margin, holds: margin > 0.0 && condition_40 })
}

/// Smallest sampled constant C with |∇V_ext|² ≤ 2V_ext³ + C on the grid.
pub fn trap_admissibility(trap: &TrapPotential) -> Result<(f64, bool)> {
    let grid = trap.grid();
    let v = trap.values()?;
    let grad2: Vec<f64> = match &trap.kind {
        TrapKind::ZeroOnTorus => vec![0.0; grid.len()],
        TrapKind::Harmonic { c } => {
            // |∇(c r²)|² = 4c²r²
            let mut g = vec![0.0; grid.len()];
            for (gi, &vi) in g.iter_mut().zip(&v) {
                *gi = 4.0 * c * vi; // 4c²r² = 4c·(c r²)
            }
            g
        }
        TrapKind::Quartic { c } => {
            // |∇(c r⁴)|² = 16c²r⁶
            let mut g = vec![0.0; grid.len()];
            for (gi, &vi) in g.iter_mut().zip(&v) {
                // r⁶ = (r⁴)^{3/2} = (v/c)^{3/2}
                *gi = if *c > 0.0 { 16.0 * c * c * (vi / c).powf(1.5) } else { 0.0 };
            }
            g
        }
        TrapKind::TabulatedGrid { .. } => {
            // spectral gradient along each axis
            let ws = Workspace::new(trap)?;
            let hat = ws.fft_of(&v);
            let mut g = vec![0.0; grid.len()];
            for axis in 0..3 {
                let mut d: Vec<Complex64> = hat.clone();
                for ix in 0..grid.m {
                    for iy in 0..grid.m {
                        for iz in 0..grid.m {
                            let k = match axis {
                                0 => grid.freq(ix),
                                1 => grid.freq(iy),
                                _ => grid.freq(iz),
                            };
                            let idx = grid.idx(ix, iy, iz);
                            d[idx] *= Complex64::new(0.0, k);
                        }
                    }
                }
                ws.fft.inverse(&mut d);
                for (gi, c) in g.iter_mut().zip(&d) {
                    *gi += c.re * c.re;
                }
            }
            g
        }
    };
    let c_fit = grad2
        .iter()
        .zip(&v)
        .map(|(&g, &vi)| g - 2.0 * vi * vi * vi)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((c_fit.max(0.0), c_fit.is_finite()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_constant_state_is_exact() {
        let trap = TrapPotential::unit_torus(16);
        let a = 0.02;
        let st = minimize_gp(&trap, a, 1e-10).unwrap();
        assert!((st.e_gp - 4.0 * PI * a).abs() < 1e-12);
        assert!((st.mu - 8.0 * PI * a).abs() < 1e-12);
        for &p in &st.phi {
            assert!((p - 1.0).abs() < 1e-12);
        }
        assert!(st.residual < 1e-12);
        assert!(gp_residual(&st, &trap).unwrap() < 1e-12);
    }

    #[test]
    fn harmonic_linear_reference() {
        let trap = TrapPotential::harmonic(8.0, 32);
        let st = minimize_gp(&trap, 0.0, 1e-8).unwrap();
        assert!((st.e_gp - 3.0).abs() < 1e-6, "e_gp = {}", st.e_gp);
        assert!(st.residual < 1e-7);
        // ground state is the Gaussian π^{-3/4} e^{-r²/2}
        let grid = trap.grid();
        let mid = grid.m / 2;
        let peak = st.phi[grid.idx(mid, mid, mid)];
        let expect = std::f64::consts::PI.powf(-0.75);
        assert!((peak - expect).abs() < 1e-4, "{peak} vs {expect}");
    }

    #[test]
    fn harmonic_small_a_perturbation_slope() {
        // e_gp(a) ≈ 3 + 4πa∫φ₀⁴ with ∫φ₀⁴ = (2π)^{-3/2}
        let trap = TrapPotential::harmonic(8.0, 32);
        let int4 = (2.0 * PI).powf(-1.5);
        let mut slopes = Vec::new();
        for &a in &[1e-3, 2e-3, 4e-3] {
            let st = minimize_gp(&trap, a, 1e-9).unwrap();
            slopes.push((st.e_gp - 3.0) / a);
        }
        for s in &slopes {
            assert!((s - 4.0 * PI * int4).abs() < 0.01 * 4.0 * PI * int4, "slope {s}");
        }
        // μ identity
        let st = minimize_gp(&trap, 4e-3, 1e-9).unwrap();
        let quart: f64 =
            trap.grid().cell_volume() * st.phi.iter().map(|&x| x.powi(4)).sum::<f64>();
        assert!((st.mu - (st.e_gp + 4.0 * PI * st.a * quart)).abs() < 1e-10);
    }

    #[test]
    fn gap_check_harmonic_small_a() {
        let trap = TrapPotential::harmonic(8.0, 32);
        let a = 1e-3;
        let st = minimize_gp(&trap, a, 1e-9).unwrap();
        let rep = gap_check(&st, &trap, a).unwrap();
        assert!(rep.holds);
        assert!((rep.mu1 - 3.0).abs() < 0.1, "mu1 = {}", rep.mu1);
        assert!((rep.mu2 - 5.0).abs() < 0.1, "mu2 = {}", rep.mu2);
        assert!(rep.margin > 1.9);
    }

    #[test]
    fn gap_fails_for_large_a() {
        let trap = TrapPotential::harmonic(8.0, 32);
        let st = minimize_gp(&trap, 1.0, 1e-8).unwrap();
        let rep = gap_check(&st, &trap, 1.0).unwrap();
        assert!(!rep.holds);
    }

    #[test]
    fn admissibility_constants() {
        let harm = TrapPotential::harmonic(8.0, 32);
        let (c_fit, ok) = trap_admissibility(&harm).unwrap();
        assert!(ok);
        // analytic max of 4t − 2t³ over t = r² ≥ 0 is (8/3)√(2/3)
        let exact = (8.0 / 3.0) * (2.0f64 / 3.0).sqrt();
        assert!(c_fit <= exact + 1e-12 && c_fit > exact - 0.1, "c_fit = {c_fit}");

        let torus = TrapPotential::unit_torus(8);
        let (c0, ok0) = trap_admissibility(&torus).unwrap();
        assert_eq!(c0, 0.0);
        assert!(ok0);

        let quartic = TrapPotential {
            kind: TrapKind::Quartic { c: 1.0 },
            l: 8.0,
            m: 32,
            boundary: Boundary::DecayingTrap,
        };
        let (_, okq) = trap_admissibility(&quartic).unwrap();
        assert!(okq);
    }

    #[test]
    fn energy_concave_nondecreasing_in_a() {
        let trap = TrapPotential::unit_torus(8);
        let es: Vec<f64> = [0.0, 0.01, 0.02, 0.03]
            .iter()
            .map(|&a| minimize_gp(&trap, a, 1e-10).unwrap().e_gp)
            .collect();
        for w in es.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
        for w in es.windows(3) {
            assert!(w[2] - w[1] <= w[1] - w[0] + 1e-10);
        }
    }
}
