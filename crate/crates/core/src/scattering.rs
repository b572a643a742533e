//! Zero-energy two-body scattering: u″(r) = ½V(r)u(r), u(0) = 0, u = r − a
//! outside the support, plus the scaled profiles f_N(x) = f(Nx), ω_N = 1 − f_N.

use crate::potential::RadialPotential;
use crate::quadrature::{simpson, sinc};
use crate::{Error, Result};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct ScatteringSolution {
    pub potential: RadialPotential,
    pub r_grid: Vec<f64>,
    /// u(r) = r·f(r), normalized so u(r) = r − a on the tail.
    pub u: Vec<f64>,
    /// u′(r) on the same grid (kept for cubic Hermite interpolation of f).
    pub du: Vec<f64>,
    pub a: f64,
    /// a from the quadrature identity 8πa = ∫Vf (set to a for the hard sphere).
    pub a_quadrature: f64,
    /// Radius beyond which u(r) = r − a is enforced (the support radius R0).
    pub match_radius: f64,
    /// Fitted C in ω(r) ≤ C/(r+1).
    pub omega_bound_c: f64,
    /// Nodes of r_grid lying in [0, R0]; the last one sits exactly at R0.
    inside_points: usize,
}

/// Potential evaluation clamped to the interior limit at the support edge, so
/// that quadrature and integration over [0, R0] see lim_{r→R0⁻} V rather than 0.
fn v_inside(pot: &RadialPotential, r: f64, edge: f64) -> f64 {
    pot.eval(r.min(edge))
}

pub fn solve_scattering(
    potential: &RadialPotential,
    r_max: f64,
    n_points: usize,
) -> Result<ScatteringSolution> {
    potential.validate()?;
    let r0 = potential.range();
    if r_max <= r0 {
        return Err(Error::Domain(format!(
            "r_max = {r_max} must exceed the support radius R0 = {r0}"
        )));
    }
    if n_points < 100 {
        return Err(Error::Validation("n_points must be at least 100".into()));
    }

    if potential.is_hard_sphere() {
        // Analytic: u = 0 inside, u = r − R0 outside; a = R0, f = 1 − R0/r.
        let h = r_max / (n_points - 1) as f64;
        let r_grid: Vec<f64> = (0..n_points).map(|i| i as f64 * h).collect();
        let u: Vec<f64> = r_grid.iter().map(|&r| (r - r0).max(0.0)).collect();
        let du: Vec<f64> = r_grid.iter().map(|&r| if r > r0 { 1.0 } else { 0.0 }).collect();
        let inside_points = r_grid.iter().filter(|&&r| r <= r0).count();
        return Ok(ScatteringSolution {
            potential: potential.clone(),
            omega_bound_c: omega_envelope(&r_grid, &u, r0, r0),
            r_grid,
            u,
            du,
            a: r0,
            a_quadrature: r0, // ∫Vf undefined for the hard core; analytic value recorded
            match_radius: r0,
            inside_points,
        });
    }

    // Interior integration on [0, R0] with the support edge exactly on a node;
    // outside the support u is exactly affine and extended analytically.
    let h_target = r_max / (n_points - 1) as f64;
    let mut m_in = (r0 / h_target).ceil() as usize;
    m_in = m_in.max(128);
    if m_in % 2 == 1 {
        m_in += 1; // Simpson needs an even interval count
    }
    let h = r0 / m_in as f64;
    let edge = r0 * (1.0 - 1e-13);

    // RK4 on (u, u′) with u″ = ½V(r)u, u(0) = 0, u′(0) = 1 (rescaled later).
    let mut u = Vec::with_capacity(m_in + 1);
    let mut du = Vec::with_capacity(m_in + 1);
    let (mut y, mut dy) = (0.0f64, 1.0f64);
    u.push(y);
    du.push(dy);
    let rhs = |r: f64, y: f64| 0.5 * v_inside(potential, r, edge) * y;
    for i in 0..m_in {
        let r = i as f64 * h;
        let (k1y, k1d) = (dy, rhs(r, y));
        let (k2y, k2d) = (dy + 0.5 * h * k1d, rhs(r + 0.5 * h, y + 0.5 * h * k1y));
        let (k3y, k3d) = (dy + 0.5 * h * k2d, rhs(r + 0.5 * h, y + 0.5 * h * k2y));
        let (k4y, k4d) = (dy + h * k3d, rhs(r + h, y + h * k3y));
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        dy += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        u.push(y);
        du.push(dy);
    }

    // Affine tail nodes out to r_max, then a least-squares affine fit of u on
    // [R0, r_max]. The extension is exact (V = 0 there), so the fit recovers the
    // slope/intercept without discretization noise.
    let n_out = n_points.saturating_sub(m_in + 1).max(8);
    let h_out = (r_max - r0) / n_out as f64;
    let mut r_grid: Vec<f64> = (0..=m_in).map(|i| i as f64 * h).collect();
    let (u_edge, s_edge) = (u[m_in], du[m_in]);
    for j in 1..=n_out {
        let r = r0 + j as f64 * h_out;
        r_grid.push(r);
        u.push(u_edge + s_edge * (r - r0));
        du.push(s_edge);
    }
    let tail: Vec<(f64, f64)> = r_grid[m_in..].iter().copied().zip(u[m_in..].iter().copied()).collect();
    let (slope, intercept) = affine_fit(&tail);
    if slope <= 0.0 {
        return Err(Error::Domain("non-positive tail slope; potential too singular".into()));
    }
    let a = -intercept / slope;

    // Normalize so that u = r − a exactly on the tail (f → 1 at infinity).
    for v in u.iter_mut() {
        *v /= slope;
    }
    for v in du.iter_mut() {
        *v /= slope;
    }

    // 8π a_quadrature = ∫ V f = 4π ∫ V(r) u(r) r dr.
    let integrand: Vec<f64> = (0..=m_in)
        .map(|i| v_inside(potential, r_grid[i], edge) * u[i] * r_grid[i])
        .collect();
    let a_quadrature = 0.5 * simpson(&integrand, h);

    let omega_bound_c = omega_envelope(&r_grid, &u, r0, a);

    Ok(ScatteringSolution {
        potential: potential.clone(),
        r_grid,
        u,
        du,
        a,
        a_quadrature,
        match_radius: r0,
        omega_bound_c,
        inside_points: m_in + 1,
    })
}

fn affine_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope, (sy - slope * sx) / n)
}

/// Fitted constant C with ω(r) = 1 − f(r) ≤ C/(r+1) on the grid.
fn omega_envelope(r_grid: &[f64], u: &[f64], r0: f64, a: f64) -> f64 {
    let mut c: f64 = 0.0;
    for (i, &r) in r_grid.iter().enumerate() {
        let omega = if r == 0.0 {
            1.0 // worst case at the origin: f(0) ≥ 0
        } else if r >= r0 {
            a / r
        } else {
            1.0 - u[i] / r
        };
        c = c.max(omega * (r + 1.0));
    }
    c
}

impl ScatteringSolution {
    /// f(r) = u(r)/r; cubic Hermite inside the support, exact 1 − a/r beyond.
    pub fn f(&self, r: f64) -> f64 {
        if r >= self.match_radius {
            return 1.0 - self.a / r;
        }
        if r <= 0.0 {
            return self.du[0];
        }
        let h = self.match_radius / (self.inside_points - 1) as f64;
        let i = ((r / h) as usize).min(self.inside_points - 2);
        let t = (r - self.r_grid[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let u = (2.0 * t3 - 3.0 * t2 + 1.0) * self.u[i]
            + (t3 - 2.0 * t2 + t) * h * self.du[i]
            + (-2.0 * t3 + 3.0 * t2) * self.u[i + 1]
            + (t3 - t2) * h * self.du[i + 1];
        u / r
    }

    pub fn omega(&self, r: f64) -> f64 {
        1.0 - self.f(r)
    }

    /// (Vf)^(q) = 4π∫V(r)f(r) sinc(qr) r² dr on the interior grid.
    pub fn vf_hat(&self, q: f64) -> Result<f64> {
        if self.potential.is_hard_sphere() {
            return Err(Error::Domain("∫Vf has no finite quadrature for the hard sphere".into()));
        }
        let m = self.inside_points;
        let edge = self.match_radius * (1.0 - 1e-13);
        let integrand: Vec<f64> = (0..m)
            .map(|i| {
                let r = self.r_grid[i];
                v_inside(&self.potential, r, edge) * self.u[i] * r * sinc(q * r)
            })
            .collect();
        let h = self.match_radius / (m - 1) as f64;
        Ok(4.0 * std::f64::consts::PI * simpson(&integrand, h))
    }

    /// ω^(q) for q > 0, with the Coulomb-type tail a/r handled analytically:
    /// ω^(q) = 4πa/q² + 4π∫₀^{R0}(ω(r) − a/r) sinc(qr) r² dr.
    pub fn omega_hat(&self, q: f64) -> Result<f64> {
        if q <= 0.0 {
            return Err(Error::Domain("omega_hat requires q > 0".into()));
        }
        let m = self.inside_points;
        let h = self.match_radius / (m - 1) as f64;
        let integrand: Vec<f64> = (0..m)
            .map(|i| {
                let r = self.r_grid[i];
                // (ω(r) − a/r)·r² = (r − u(r)) r − a·r, finite down to r = 0
                ((r - self.u[i]) * r - self.a * r) * sinc(q * r)
            })
            .collect();
        let pi4 = 4.0 * std::f64::consts::PI;
        Ok(pi4 * self.a / (q * q) + pi4 * simpson(&integrand, h))
    }

    /// 4π∫₀^{R0} V(r) f(r) ω(r) r² dr, i.e. ∫_{R³} V f (1−f).
    pub fn integral_v_f_omega(&self) -> Result<f64> {
        if self.potential.is_hard_sphere() {
            return Err(Error::Domain("∫Vfω has no finite quadrature for the hard sphere".into()));
        }
        let m = self.inside_points;
        let edge = self.match_radius * (1.0 - 1e-13);
        // V f ω r² = V·u·(r − u)
        let integrand: Vec<f64> = (0..m)
            .map(|i| {
                let r = self.r_grid[i];
                v_inside(&self.potential, r, edge) * self.u[i] * (r - self.u[i])
            })
            .collect();
        let h = self.match_radius / (m - 1) as f64;
        Ok(4.0 * std::f64::consts::PI * simpson(&integrand, h))
    }

    /// Dense table of (Vf)^ for fast repeated evaluation (lattice sums).
    pub fn vf_hat_table(&self, q_max: f64, n_samples: usize) -> Result<RadialFourierTable> {
        let n = n_samples.max(16);
        let dq = q_max / (n - 1) as f64;
        let vals = (0..n)
            .map(|i| self.vf_hat(i as f64 * dq))
            .collect::<Result<Vec<f64>>>()?;
        Ok(RadialFourierTable { q_max, dq, vals })
    }
}

/// Uniformly sampled radial Fourier profile with 4-point Lagrange interpolation.
#[derive(Clone, Debug)]
pub struct RadialFourierTable {
    pub q_max: f64,
    dq: f64,
    vals: Vec<f64>,
}

impl RadialFourierTable {
    pub fn eval(&self, q: f64) -> f64 {
        assert!(q >= 0.0 && q <= self.q_max + 1e-9, "q = {q} outside table range {}", self.q_max);
        let n = self.vals.len();
        let x = (q / self.dq).min((n - 1) as f64);
        let i = (x as usize).clamp(1, n - 3);
        let t = x - i as f64; // in [-1, 2] near edges, [0,1] typically
        let (ym1, y0, y1, y2) = (self.vals[i - 1], self.vals[i], self.vals[i + 1], self.vals[i + 2]);
        // cubic Lagrange on nodes -1, 0, 1, 2
        -ym1 * t * (t - 1.0) * (t - 2.0) / 6.0
            + y0 * (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0
            - y1 * (t + 1.0) * t * (t - 2.0) / 2.0
            + y2 * (t + 1.0) * t * (t - 1.0) / 6.0
    }
}

/// Scaled profiles f_N(x) = f(N|x|), ω_N = 1 − f_N, V_N(x) = N²V(N|x|).
#[derive(Clone, Debug)]
pub struct ScaledScattering {
    pub base: ScatteringSolution,
    pub n: u32,
}

pub fn scale(solution: &ScatteringSolution, n: u32) -> Result<ScaledScattering> {
    if n == 0 {
        return Err(Error::Domain("scaling parameter N must be >= 1".into()));
    }
    Ok(ScaledScattering { base: solution.clone(), n })
}

impl ScaledScattering {
    pub fn f_n(&self, r: f64) -> f64 {
        self.base.f(self.n as f64 * r)
    }

    pub fn omega_n(&self, r: f64) -> f64 {
        1.0 - self.f_n(r)
    }

    pub fn v_n(&self, r: f64) -> f64 {
        let n = self.n as f64;
        n * n * self.base.potential.eval(n * r)
    }

    /// ∫_{R³} V_N f_N = 8π a_quadrature / N (the quadrature value, not the fit).
    pub fn integral_v_f(&self) -> f64 {
        8.0 * std::f64::consts::PI * self.base.a_quadrature / self.n as f64
    }

    /// (V_N f_N)^(p) = N⁻¹ (Vf)^(p/N); p = 0 returns ∫V_N f_N by continuity.
    pub fn fourier_profile(&self, p: f64) -> Result<f64> {
        if p < 0.0 {
            return Err(Error::Domain("radial wavenumber must be non-negative".into()));
        }
        let n = self.n as f64;
        Ok(self.base.vf_hat(p / n)? / n)
    }

    /// ω_N^(p) = N⁻³ ω^(p/N), p > 0.
    pub fn omega_hat_n(&self, p: f64) -> Result<f64> {
        let n = self.n as f64;
        Ok(self.base.omega_hat(p / n)? / (n * n * n))
    }
}
