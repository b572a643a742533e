//! Homogeneous gas on the unit torus: the Bogoliubov momentum-lattice sum,
//! its Plancherel identification with the scattering integral, and the
//! μ-window feasibility of the resulting energy bound.

use crate::quadrature::simpson;
use crate::scattering::{ScaledScattering, ScatteringSolution};
use crate::{Error, Result};
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Read;
use std::path::{Path, PathBuf};

/// Upper limit of the radial Fourier integrals ∫vf_hat(q)²dq; the integrand
/// decays like q⁻⁴ so the truncated tail is O(Q_MAX⁻³).
const Q_MAX: f64 = 256.0 * PI;
const Q_SAMPLES: usize = 16385;

const CACHE_MAGIC: &[u8; 8] = b"R3SHELLS";
const CACHE_VERSION: u32 = 1;

/// r₃(n): number of integer lattice points with |z|² = n, for all n ≤ radius².
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShellTable {
    pub radius: u32,
    counts: Vec<u32>,
}

impl ShellTable {
    /// Direct construction: a 2D histogram of x²+y² followed by one pass over
    /// z. O(R²) + O(R³) additions; no number-theoretic shortcuts.
    pub fn build(radius: u32) -> ShellTable {
        let r = radius as i64;
        let rsq = (r * r) as usize;
        let mut r2 = vec![0u32; rsq + 1];
        for x in 0..=r {
            let mx = if x == 0 { 1 } else { 2 };
            let x2 = x * x;
            for y in 0..=r {
                let s = (x2 + y * y) as usize;
                if s <= rsq {
                    r2[s] += mx * if y == 0 { 1 } else { 2 };
                }
            }
        }
        let mut counts = vec![0u32; rsq + 1];
        for z in 0..=r {
            let z2 = (z * z) as usize;
            if z2 > rsq {
                break;
            }
            let mult = if z == 0 { 1u32 } else { 2 };
            let limit = rsq - z2;
            for (k, &c) in r2.iter().enumerate().take(limit + 1) {
                counts[k + z2] += mult * c;
            }
        }
        ShellTable { radius, counts }
    }

    fn cache_path(radius: u32, dir: &Path) -> PathBuf {
        dir.join(format!("shells_v{CACHE_VERSION}_r{radius}.bin"))
    }

    /// Load the table from `cache_dir` if a valid cache exists, else build it
    /// and write the cache.
    pub fn load_or_build(radius: u32, cache_dir: &Path) -> Result<ShellTable> {
        let path = Self::cache_path(radius, cache_dir);
        if let Some(t) = Self::try_load(&path, radius) {
            return Ok(t);
        }
        let table = Self::build(radius);
        std::fs::create_dir_all(cache_dir)?;
        table.save(&path)?;
        Ok(table)
    }

    fn try_load(path: &Path, radius: u32) -> Option<ShellTable> {
        let mut f = std::fs::File::open(path).ok()?;
        let mut head = [0u8; 24];
        f.read_exact(&mut head).ok()?;
        if &head[0..8] != CACHE_MAGIC
            || u32::from_le_bytes(head[8..12].try_into().unwrap()) != CACHE_VERSION
            || u32::from_le_bytes(head[12..16].try_into().unwrap()) != radius
        {
            return None;
        }
        let len = u64::from_le_bytes(head[16..24].try_into().unwrap()) as usize;
        if len != (radius as usize).pow(2) + 1 {
            return None;
        }
        let mut body = vec![0u8; len * 4];
        f.read_exact(&mut body).ok()?;
        let counts = body.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
        Some(ShellTable { radius, counts })
    }

    fn save(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(24 + self.counts.len() * 4);
        bytes.extend_from_slice(CACHE_MAGIC);
        bytes.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        bytes.extend_from_slice(&self.radius.to_le_bytes());
        bytes.extend_from_slice(&(self.counts.len() as u64).to_le_bytes());
        for c in &self.counts {
            bytes.extend_from_slice(&c.to_le_bytes());
        }
        std::fs::write(path, bytes)?;
        Ok(())
    }

    /// Number of lattice points with |z|² = n.
    pub fn count(&self, n: usize) -> u64 {
        self.counts.get(n).copied().unwrap_or(0) as u64
    }

    pub fn max_shell(&self) -> usize {
        self.counts.len() - 1
    }

    /// Nonzero lattice points in the closed ball |z|² ≤ n_upper.
    pub fn points_in_ball(&self, n_upper: usize) -> u64 {
        (1..=n_upper.min(self.max_shell())).map(|n| self.count(n)).sum()
    }
}

/// Brute-force count of nonzero lattice points with |z|² ≤ radius², for
/// cross-checking the histogram construction.
pub fn enumerate_ball_count(radius: u32) -> u64 {
    let r = radius as i64;
    let mut total = 0u64;
    for x in -r..=r {
        for y in -r..=r {
            for z in -r..=r {
                let s = x * x + y * y + z * z;
                if s != 0 && s <= r * r {
                    total += 1;
                }
            }
        }
    }
    total
}

/// Admissible μ window (16πa, 4π²−8πa); `None` when empty (a ≥ π/6).
pub fn mu_window(a: f64) -> Option<(f64, f64)> {
    let lo = 16.0 * PI * a;
    let hi = 4.0 * PI * PI - 8.0 * PI * a;
    // strict window with a relative guard: at a = π/6 the endpoints coincide
    if hi - lo > 1e-12 * hi.abs() {
        Some((lo, hi))
    } else {
        None
    }
}

#[derive(Clone, Debug)]
pub struct TorusSumSpec {
    pub n: u32,
    pub scattering: ScaledScattering,
    pub mu: f64,
    /// Lattice cutoff: the sum runs over 0 < |p| ≤ p_cut, p ∈ 2πZ³.
    pub p_cut: f64,
    pub shell_table: ShellTable,
}

impl TorusSumSpec {
    pub fn new(
        scattering: ScaledScattering,
        mu: f64,
        p_cut: f64,
        shell_table: ShellTable,
    ) -> Result<Self> {
        let a = scattering.base.a;
        if !(mu > 0.0 && mu < 4.0 * PI * PI - 8.0 * PI * a) {
            return Err(Error::Domain(format!(
                "mu = {mu} outside the admissible range (0, {})",
                4.0 * PI * PI - 8.0 * PI * a
            )));
        }
        let n = scattering.n;
        if p_cut < 8.0 * PI * n as f64 {
            return Err(Error::Validation(format!(
                "p_cut = {p_cut} below the minimum 8πN = {}",
                8.0 * PI * n as f64
            )));
        }
        let radius = (p_cut / (2.0 * PI)).floor() as u32;
        if shell_table.radius < radius {
            return Err(Error::Validation(format!(
                "shell table radius {} too small for p_cut (needs {radius})",
                shell_table.radius
            )));
        }
        Ok(TorusSumSpec { n, scattering, mu, p_cut, shell_table })
    }

    fn radius(&self) -> usize {
        (self.p_cut / (2.0 * PI)).floor() as usize
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LatticeSum {
    /// −(1/2)Σ_{0<|p|≤p_cut}(x_p − √(x_p² − b_p²)), x_p = |p|²−μ, b_p = N(f_NV_N)^(p).
    pub sum: f64,
    /// Continuum estimate of the part beyond p_cut.
    pub tail_estimate: f64,
}

pub fn bogoliubov_lattice_sum(spec: &TorusSumSpec) -> Result<LatticeSum> {
    let big_n = spec.n as f64;
    let n_max = spec.radius() * spec.radius();
    // b_p = N(V_Nf_N)^(p) = (Vf)^(p/N); tabulated on the q = p/N axis
    let q_hi = spec.p_cut / big_n;
    let table = spec.scattering.base.vf_hat_table(q_hi * 1.001, 4096)?;
    let mut sum = 0.0;
    for shell in 1..=n_max {
        let cnt = spec.shell_table.count(shell);
        if cnt == 0 {
            continue;
        }
        let p = 2.0 * PI * (shell as f64).sqrt();
        let x = p * p - spec.mu;
        let b = table.eval(p / big_n);
        let rad = x * x - b * b;
        if rad < 0.0 {
            return Err(Error::Domain(format!(
                "negative radicand at shell |p/2π|² = {shell}: μ = {} is outside the valid window",
                spec.mu
            )));
        }
        // x − √(x²−b²) = b²/(x + √(x²−b²)), stable for b ≪ x
        sum -= 0.5 * cnt as f64 * b * b / (x + rad.sqrt());
    }
    // beyond the cutoff the summand is b²/(4p²) to leading order; integrate
    // its radial continuum density: −(N/8π²)∫_{p_cut/N}^{∞} vf_hat(q)² dq
    let m = Q_SAMPLES;
    let h = (Q_MAX - q_hi) / (m - 1) as f64;
    let vals: Vec<f64> = (0..m)
        .map(|i| {
            let q = q_hi + i as f64 * h;
            spec.scattering.base.vf_hat(q).map(|v| v * v)
        })
        .collect::<Result<_>>()?;
    let tail_estimate = -big_n / (8.0 * PI * PI) * simpson(&vals, h);
    Ok(LatticeSum { sum, tail_estimate })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PlancherelReference {
    /// −(N²/2)∫V_N f_N(1−f_N) by radial quadrature.
    pub radial: f64,
    /// The same quantity from the Fourier side, −(N²/4)∫|(f_NV_N)^|²/|p|² dp/(2π)³.
    pub fourier: f64,
    pub rel_diff: f64,
}

pub fn plancherel_reference(spec: &TorusSumSpec) -> Result<PlancherelReference> {
    let big_n = spec.n as f64;
    let radial = -0.5 * big_n * spec.scattering.base.integral_v_f_omega()?;
    let m = Q_SAMPLES;
    let h = Q_MAX / (m - 1) as f64;
    let vals: Vec<f64> = (0..m)
        .map(|i| spec.scattering.base.vf_hat(i as f64 * h).map(|v| v * v))
        .collect::<Result<_>>()?;
    let fourier = -big_n / (8.0 * PI * PI) * simpson(&vals, h);
    let rel_diff = (radial - fourier).abs() / radial.abs().max(1e-300);
    Ok(PlancherelReference { radial, fourier, rel_diff })
}

/// Constant and 𝒩₊ coefficient of the homogeneous lower bound
/// H_N ≥ (μ−16πa)𝒩₊ + 4πaN + O(1); needs a < π/6 and μ in (16πa, 4π²−8πa).
pub fn homogeneous_energy_bound(spec: &TorusSumSpec) -> Result<(f64, f64)> {
    let a = spec.scattering.base.a;
    let Some((lo, hi)) = mu_window(a) else {
        return Err(Error::Domain(format!(
            "empty mu window: a = {a} is not below π/6 = {}",
            PI / 6.0
        )));
    };
    if !(spec.mu > lo && spec.mu < hi) {
        return Err(Error::Domain(format!(
            "mu = {} outside the window ({lo}, {hi})",
            spec.mu
        )));
    }
    let big_n = spec.n as f64;
    let lattice = bogoliubov_lattice_sum(spec)?;
    let i_w = spec.scattering.base.integral_v_f_omega()?;
    let lower_const =
        4.0 * PI * a * big_n + lattice.sum + lattice.tail_estimate + 0.5 * big_n * i_w;
    Ok((lower_const, spec.mu - 16.0 * PI * a))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepPoint {
    pub n: u32,
    pub sum: f64,
    pub reference: f64,
    pub defect: f64,
    pub tail_estimate: f64,
    pub mu: f64,
}

/// d(N) = lattice sum − reference for each N; one shell table sized for the
/// largest N is shared across the sweep (p_cut = 8πN).
pub fn torus_sweep(
    base: &ScatteringSolution,
    mu: f64,
    n_sweep: &[u32],
    cache_dir: &Path,
) -> Result<Vec<SweepPoint>> {
    let n_max = *n_sweep.iter().max().ok_or_else(|| Error::Validation("empty N sweep".into()))?;
    let table = ShellTable::load_or_build(4 * n_max, cache_dir)?;
    let mut out = Vec::with_capacity(n_sweep.len());
    for &n in n_sweep {
        let scaled = crate::scattering::scale(base, n)?;
        let spec = TorusSumSpec::new(scaled, mu, 8.0 * PI * n as f64, table.clone())?;
        let lattice = bogoliubov_lattice_sum(&spec)?;
        let reference = plancherel_reference(&spec)?;
        let sum = lattice.sum + lattice.tail_estimate;
        out.push(SweepPoint {
            n,
            sum,
            reference: reference.radial,
            defect: sum - reference.radial,
            tail_estimate: lattice.tail_estimate,
            mu,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::RadialPotential;
    use crate::scattering::{scale, solve_scattering};

    fn well_base() -> ScatteringSolution {
        let pot = RadialPotential::SquareWell { v0: 20.0, r0: 0.4 };
        solve_scattering(&pot, 0.8, 4001).unwrap()
    }

    #[test]
    fn shell_counts_match_enumeration() {
        let t = ShellTable::build(20);
        // classic small values of r₃
        for (n, expect) in [(1, 6), (2, 12), (3, 8), (4, 6), (5, 24), (6, 24), (7, 0), (8, 12)] {
            assert_eq!(t.count(n), expect, "r3({n})");
        }
        assert_eq!(t.points_in_ball(400), enumerate_ball_count(20));
    }

    #[test]
    fn shell_cache_round_trip() {
        let dir = std::env::temp_dir().join(format!("shells-test-{}", std::process::id()));
        let t1 = ShellTable::load_or_build(12, &dir).unwrap();
        let t2 = ShellTable::load_or_build(12, &dir).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(t1, ShellTable::build(12));
        // corrupt header forces a rebuild rather than bad data
        let path = ShellTable::cache_path(12, &dir);
        std::fs::write(&path, b"garbage").unwrap();
        let t3 = ShellTable::load_or_build(12, &dir).unwrap();
        assert_eq!(t1, t3);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn zero_potential_gives_zero() {
        let pot = RadialPotential::SquareWell { v0: 0.0, r0: 0.4 };
        let base = solve_scattering(&pot, 0.8, 4001).unwrap();
        let table = ShellTable::build(16);
        let spec =
            TorusSumSpec::new(scale(&base, 4).unwrap(), 1.0, 32.0 * PI, table).unwrap();
        let lattice = bogoliubov_lattice_sum(&spec).unwrap();
        assert_eq!(lattice.sum, 0.0);
        assert!(lattice.tail_estimate.abs() < 1e-30);
        let r = plancherel_reference(&spec).unwrap();
        assert!(r.radial.abs() < 1e-30 && r.fourier.abs() < 1e-30);
    }

    #[test]
    fn plancherel_forms_agree() {
        let base = well_base();
        let table = ShellTable::build(8);
        let spec =
            TorusSumSpec::new(scale(&base, 2).unwrap(), 1.0, 16.0 * PI, table).unwrap();
        let r = plancherel_reference(&spec).unwrap();
        assert!(r.rel_diff < 1e-6, "radial {} vs fourier {}", r.radial, r.fourier);
    }

    #[test]
    fn lattice_sum_matches_quadratic_expansion() {
        let base = well_base();
        for n in [50u32, 100] {
            let radius = 4 * n;
            let table = ShellTable::build(radius);
            let spec = TorusSumSpec::new(
                scale(&base, n).unwrap(),
                2.0 * PI * PI,
                8.0 * PI * n as f64,
                table,
            )
            .unwrap();
            let lattice = bogoliubov_lattice_sum(&spec).unwrap();
            // independent term-by-term evaluation of −b²/(4x) with an explicit
            // remainder envelope Σ b⁴/(8x³) for the next order
            let big_n = n as f64;
            let mut quad = 0.0;
            let mut envelope = 0.0;
            for shell in 1..=(radius as usize * radius as usize) {
                let cnt = spec.shell_table.count(shell);
                if cnt == 0 {
                    continue;
                }
                let p2 = 4.0 * PI * PI * shell as f64;
                let x = p2 - spec.mu;
                let b = base.vf_hat(2.0 * PI * (shell as f64).sqrt() / big_n).unwrap();
                quad -= cnt as f64 * b * b / (4.0 * x);
                envelope += cnt as f64 * b.powi(4) / (8.0 * x * x * x);
            }
            assert!(
                (lattice.sum - quad).abs() <= envelope,
                "N={n}: sum {} vs quadratic {quad}, envelope {envelope}",
                lattice.sum
            );
        }
    }

    #[test]
    fn cutoff_doubling_stays_within_tail_estimate() {
        let base = well_base();
        let n = 8u32;
        let t1 = ShellTable::build(4 * n);
        let t2 = ShellTable::build(8 * n);
        let mu = 2.0 * PI * PI;
        let s1 = TorusSumSpec::new(scale(&base, n).unwrap(), mu, 8.0 * PI * n as f64, t1).unwrap();
        let s2 =
            TorusSumSpec::new(scale(&base, n).unwrap(), mu, 16.0 * PI * n as f64, t2).unwrap();
        let l1 = bogoliubov_lattice_sum(&s1).unwrap();
        let l2 = bogoliubov_lattice_sum(&s2).unwrap();
        assert!((l2.sum - l1.sum).abs() <= 1.5 * l1.tail_estimate.abs());
    }

    #[test]
    fn mu_window_arithmetic() {
        let (lo, hi) = mu_window(PI / 8.0).unwrap();
        assert!((lo - 2.0 * PI * PI).abs() < 1e-12);
        assert!((hi - 3.0 * PI * PI).abs() < 1e-12);
        assert!(mu_window(PI / 4.0).is_none());
        // boundary: window closes exactly at a = π/6
        assert!(mu_window(PI / 6.0 - 1e-9).is_some());
        assert!(mu_window(PI / 6.0).is_none());
    }

    #[test]
    fn energy_bound_window_enforced() {
        let base = well_base(); // a ≈ 0.13 < π/6
        let table = ShellTable::build(16);
        let spec =
            TorusSumSpec::new(scale(&base, 4).unwrap(), 2.0 * PI * PI, 32.0 * PI, table.clone())
                .unwrap();
        let (lower_const, coeff) = homogeneous_energy_bound(&spec).unwrap();
        assert!(coeff > 0.0);
        assert!((coeff - (spec.mu - 16.0 * PI * base.a)).abs() < 1e-12);
        assert!(lower_const.is_finite());
        // μ below 16πa: bound precondition fails even though the sum is fine
        let low =
            TorusSumSpec::new(scale(&base, 4).unwrap(), 1.0, 32.0 * PI, table).unwrap();
        assert!(matches!(homogeneous_energy_bound(&low), Err(Error::Domain(_))));
    }

    #[test]
    fn radicand_guard_reports_shell() {
        let base = well_base();
        let table = ShellTable::build(16);
        // bypass the window validation to hit the per-shell guard
        let spec = TorusSumSpec {
            n: 4,
            scattering: scale(&base, 4).unwrap(),
            mu: 4.0 * PI * PI - 1e-3,
            p_cut: 32.0 * PI,
            shell_table: table,
        };
        match bogoliubov_lattice_sum(&spec) {
            Err(Error::Domain(msg)) => assert!(msg.contains("shell")),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn sweep_defect_is_stable() {
        let base = well_base();
        let dir = std::env::temp_dir().join(format!("shells-sweep-{}", std::process::id()));
        let pts = torus_sweep(&base, 2.0 * PI * PI, &[20, 40, 80], &dir).unwrap();
        std::fs::remove_dir_all(&dir).ok();
        assert_eq!(pts.len(), 3);
        for p in &pts {
            assert!(p.sum < 0.0 && p.reference < 0.0);
        }
        let spread = pts.iter().map(|p| p.defect).fold(f64::NEG_INFINITY, f64::max)
            - pts.iter().map(|p| p.defect).fold(f64::INFINITY, f64::min);
        assert!(spread < 0.5 * pts[0].reference.abs(), "defects {:?}", pts);
    }
}
