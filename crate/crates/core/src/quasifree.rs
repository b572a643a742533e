//! Quasi-free states through their one-body density matrices (γ, α):
//! admissibility, Wick-theorem energies, number-operator moments, and the
//! squeezed trial state built from the scattering kernel.

use crate::gp::{Boundary, GpState};
use crate::grid::{to_complex, Fft3, Grid3};
use crate::linalg::{is_symmetric, sym_eigen};
use crate::quadrature::linear_fit;
use crate::scattering::ScatteringSolution;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use serde::Serialize;
use std::f64::consts::PI;

/// One-body density matrices γ = ⟨a*a⟩ and α = ⟨aa⟩ in a real basis.
#[derive(Clone, Debug)]
pub struct QuasiFreePair {
    pub gamma: DMatrix<f64>,
    pub alpha: DMatrix<f64>,
    pub trace_gamma: f64,
}

impl QuasiFreePair {
    pub fn new(gamma: DMatrix<f64>, alpha: DMatrix<f64>) -> Result<Self> {
        if !gamma.is_square() || gamma.nrows() != alpha.nrows() || !alpha.is_square() {
            return Err(Error::Validation("gamma and alpha must be square, equal size".into()));
        }
        if !is_symmetric(&gamma, 1e-10) || !is_symmetric(&alpha, 1e-10) {
            return Err(Error::Validation("gamma and alpha must be symmetric".into()));
        }
        let trace_gamma = gamma.trace();
        Ok(QuasiFreePair { gamma, alpha, trace_gamma })
    }

    pub fn vacuum(dim: usize) -> Self {
        QuasiFreePair {
            gamma: DMatrix::zeros(dim, dim),
            alpha: DMatrix::zeros(dim, dim),
            trace_gamma: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "dim": self.dim(),
            "gamma": self.gamma.transpose().as_slice(),
            "alpha": self.alpha.transpose().as_slice(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Repr {
            dim: usize,
            gamma: Vec<f64>,
            alpha: Vec<f64>,
        }
        let r: Repr = serde_json::from_value(v.clone())
            .map_err(|e| Error::Validation(format!("bad quasi-free pair JSON: {e}")))?;
        if r.gamma.len() != r.dim * r.dim || r.alpha.len() != r.dim * r.dim {
            return Err(Error::Validation("matrix payload does not match dim²".into()));
        }
        Self::new(
            DMatrix::from_row_slice(r.dim, r.dim, &r.gamma),
            DMatrix::from_row_slice(r.dim, r.dim, &r.alpha),
        )
    }
}

#[derive(Clone, Debug)]
pub struct Admissibility {
    pub ok: bool,
    pub min_eig_gamma: f64,
    pub min_eig_block: f64,
    /// Eigenvector of the most negative eigenvalue when the check fails.
    pub witness: Option<DVector<f64>>,
}

/// γ ⪰ 0 and [[γ, α], [α, I+γ]] ⪰ 0, up to a relative rounding slack.
pub fn admissible(pair: &QuasiFreePair) -> Admissibility {
    let n = pair.dim();
    let (gvals, gvecs) = sym_eigen(&pair.gamma);
    let min_eig_gamma = gvals[0];

    let mut block = DMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&pair.gamma);
    block.view_mut((0, n), (n, n)).copy_from(&pair.alpha);
    block.view_mut((n, 0), (n, n)).copy_from(&pair.alpha);
    block
        .view_mut((n, n), (n, n))
        .copy_from(&(DMatrix::identity(n, n) + &pair.gamma));
    let (bvals, bvecs) = sym_eigen(&block);
    let min_eig_block = bvals[0];

    let scale = pair
        .gamma
        .amax()
        .max(pair.alpha.amax())
        .max(1.0);
    let tol = -1e-10 * scale;
    let ok = min_eig_gamma >= tol && min_eig_block >= tol;
    let witness = if ok {
        None
    } else if min_eig_gamma < tol && min_eig_gamma <= min_eig_block {
        Some(gvecs.column(0).into_owned())
    } else {
        Some(bvecs.column(0).into_owned())
    };
    Admissibility { ok, min_eig_gamma, min_eig_block, witness }
}

/// Basis representation of the pairing kernel k(x,y) = φ(x)N(1−f_N)(x−y)φ(y).
#[derive(Clone, Debug)]
pub struct TrialStateSpec {
    pub k_matrix: DMatrix<f64>,
    pub n: u32,
}

/// γ = Qk²Q, α = QkQ with Q = I − |φ⟩⟨φ|; always admissible by construction.
pub fn from_kernel(spec: &TrialStateSpec, phi: &DVector<f64>) -> Result<QuasiFreePair> {
    let k = &spec.k_matrix;
    if !k.is_square() || k.nrows() != phi.len() {
        return Err(Error::Validation("kernel and phi dimensions differ".into()));
    }
    if !is_symmetric(k, 1e-10) {
        return Err(Error::Validation("kernel matrix must be symmetric".into()));
    }
    if (phi.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::Validation("phi must be normalized".into()));
    }
    let n = k.nrows();
    let q = DMatrix::identity(n, n) - phi * phi.transpose();
    let kq = k * &q;
    let gamma = {
        let g = kq.transpose() * &kq; // Qk·kQ
        (&g + g.transpose()) * 0.5
    };
    let alpha = {
        let a = &q * k * &q;
        (&a + a.transpose()) * 0.5
    };
    QuasiFreePair::new(gamma, alpha)
}

/// 4-index matrix elements V[mnpq] = ∬(u_m u_p)(x) V(x−y) (u_n u_q)(y) dx dy:
/// indices m, p live at x and n, q at y.
#[derive(Clone, Debug)]
pub struct InteractionTensor {
    pub dim: usize,
    data: Vec<f64>,
}

impl InteractionTensor {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim * dim * dim {
            return Err(Error::Validation("tensor payload does not match dim⁴".into()));
        }
        Ok(InteractionTensor { dim, data })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * dim * dim * dim);
        for m in 0..dim {
            for n in 0..dim {
                for p in 0..dim {
                    for q in 0..dim {
                        data.push(f(m, n, p, q));
                    }
                }
            }
        }
        InteractionTensor { dim, data }
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize, p: usize, q: usize) -> f64 {
        self.data[((m * self.dim + n) * self.dim + p) * self.dim + q]
    }

    /// Bosonic symmetries of real products: m↔p, n↔q, and (x↔y) (m,p)↔(n,q).
    pub fn validate_symmetry(&self, tol: f64) -> Result<()> {
        let d = self.dim;
        let scale = self.data.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1.0);
        for m in 0..d {
            for n in 0..d {
                for p in 0..d {
                    for q in 0..d {
                        let v = self.get(m, n, p, q);
                        for (label, w) in [
                            ("m<->p", self.get(p, n, m, q)),
                            ("n<->q", self.get(m, q, p, n)),
                            ("x<->y", self.get(n, m, q, p)),
                        ] {
                            if (v - w).abs() > tol * scale {
                                return Err(Error::Validation(format!(
                                    "interaction tensor breaks the {label} symmetry at ({m},{n},{p},{q})"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct WickEnergy {
    /// N⟨φ, Tφ⟩
    pub condensate_one_body: f64,
    /// (N²/2)∬V_N φ²φ²
    pub hartree: f64,
    /// Tr(Tγ)
    pub gamma_one_body: f64,
    /// N∬V_N φφ α
    pub pairing: f64,
    /// ((1+C/N)/2)∬V_N(γγ' + γ² + α²)
    pub quartic: f64,
    pub total: f64,
}

/// Five-term Wick energy of a quasi-free state on top of the condensate φ.
/// `c_correction` is the C in the (1+C/N) prefactor (0 = pure Wick value).
pub fn wick_energy(
    pair: &QuasiFreePair,
    one_body: &DMatrix<f64>,
    interaction: &InteractionTensor,
    phi: &DVector<f64>,
    big_n: u32,
    c_correction: f64,
) -> Result<WickEnergy> {
    let d = pair.dim();
    if one_body.nrows() != d || interaction.dim != d || phi.len() != d {
        return Err(Error::Validation("basis dimensions disagree".into()));
    }
    interaction.validate_symmetry(1e-10)?;
    let nf = big_n as f64;

    let t1 = nf * (phi.transpose() * one_body * phi)[(0, 0)];
    let t3 = (one_body * &pair.gamma).trace();
    let mut t2 = 0.0;
    let mut t4 = 0.0;
    let mut t5 = 0.0;
    for m in 0..d {
        for n in 0..d {
            for p in 0..d {
                for q in 0..d {
                    let v = interaction.get(m, n, p, q);
                    if v == 0.0 {
                        continue;
                    }
                    t2 += v * phi[m] * phi[n] * phi[p] * phi[q];
                    t4 += v * phi[m] * phi[n] * pair.alpha[(p, q)];
                    t5 += v
                        * (pair.gamma[(m, p)] * pair.gamma[(n, q)]
                            + pair.gamma[(m, n)] * pair.gamma[(p, q)]
                            + pair.alpha[(m, n)] * pair.alpha[(p, q)]);
                }
            }
        }
    }
    let hartree = 0.5 * nf * nf * t2;
    let pairing = nf * t4;
    let quartic = 0.5 * (1.0 + c_correction / nf) * t5;
    let total = t1 + hartree + t3 + pairing + quartic;
    Ok(WickEnergy {
        condensate_one_body: t1,
        hartree,
        gamma_one_body: t3,
        pairing,
        quartic,
        total,
    })
}

/// ⟨𝒩^ℓ⟩ by Wick contractions, ℓ ∈ {1, 2, 3}.
pub fn number_moment(pair: &QuasiFreePair, ell: u32) -> Result<f64> {
    let g = &pair.gamma;
    let a = &pair.alpha;
    let d = pair.dim();
    let t = pair.trace_gamma;
    match ell {
        1 => Ok(t),
        2 => {
            // three pairings of a*_i a_i a*_j a_j
            let g2: f64 = g.iter().map(|x| x * x).sum();
            let a2: f64 = a.iter().map(|x| x * x).sum();
            Ok(t * t + g2 + a2 + t)
        }
        3 => {
            // fifteen pairings of a*_i a_i a*_j a_j a*_k a_k
            let del = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        let (gij, gjk, gik) = (g[(i, j)], g[(j, k)], g[(i, k)]);
                        let (aij, ajk, aik) = (a[(i, j)], a[(j, k)], a[(i, k)]);
                        let (cij, cjk, cik) =
                            (del(i, j) + gij, del(j, k) + gjk, del(i, k) + gik);
                        s += g[(i, i)] * g[(j, j)] * g[(k, k)]
                            + g[(i, i)] * ajk * ajk
                            + g[(i, i)] * gjk * cjk
                            + aij * aij * g[(k, k)]
                            + aij * cik * ajk
                            + aij * aik * cjk
                            + gij * cij * g[(k, k)]
                            + gij * cik * gjk
                            + gij * aik * ajk
                            + aik * cij * ajk
                            + aik * aij * gjk
                            + aik * aik * g[(j, j)]
                            + gik * cij * cjk
                            + gik * aij * ajk
                            + gik * cik * g[(j, j)];
                    }
                }
            }
            Ok(s)
        }
        _ => Err(Error::Validation("moment exponent must be 1, 2 or 3".into())),
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentCheck {
    pub value: f64,
    pub bound: f64,
    pub ok: bool,
}

/// ⟨𝒩^ℓ⟩ ≤ C_ℓ(1 + ⟨𝒩⟩)^ℓ with defaults C₂ = 10, C₃ = 100.
pub fn moment_bound_check(
    pair: &QuasiFreePair,
    ell: u32,
    constant: Option<f64>,
) -> Result<MomentCheck> {
    if !(ell == 2 || ell == 3) {
        return Err(Error::Validation("moment bound defined for ell in {2, 3}".into()));
    }
    let c = constant.unwrap_or(if ell == 2 { 10.0 } else { 100.0 });
    let value = number_moment(pair, ell)?;
    let bound = c * (1.0 + pair.trace_gamma).powi(ell as i32);
    Ok(MomentCheck { value, bound, ok: value <= bound })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TrialRow {
    pub n: u32,
    pub wick_energy: f64,
    pub n_e_gp: f64,
    pub defect: f64,
    /// Probability mass of the squeezed state beyond N particles.
    pub trace_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialBoundReport {
    pub rows: Vec<TrialRow>,
    pub slope: f64,
    pub slope_stderr: f64,
    /// Defect sequence has no upward trend.
    pub success: bool,
    /// Hartree term with f_N matches the Young-inequality cap 4πaN∫φ⁴.
    pub young_lhs: f64,
    pub young_rhs: f64,
    pub young_ok: bool,
}

/// Tail mass P(total occupation > n_cap) of a product of independent
/// single-mode squeezed states with pair amplitudes `k_modes`.
fn squeezed_tail_mass(k_modes: &[f64], n_cap: usize) -> f64 {
    let half = n_cap / 2; // occupations come in pairs
    let mut dist = vec![0.0f64; half + 1];
    dist[0] = 1.0;
    let mut overflow = 0.0;
    let mut probs: Vec<f64> = Vec::new();
    let mut tails: Vec<f64> = Vec::new();
    for &k in k_modes {
        let gamma = k * k;
        let t2 = gamma / (1.0 + gamma); // tanh² of the squeezing parameter
        if t2 == 0.0 {
            continue;
        }
        // single-mode distribution P(2j) = √(1−t²)·(2j)!/(4^j (j!)²)·t^{2j},
        // tabulated until it underflows
        probs.clear();
        let norm = (1.0 - t2).sqrt();
        let mut b = 1.0;
        let mut tp = 1.0;
        for j in 0..200_000usize {
            if j > 0 {
                b *= (2 * j - 1) as f64 / (2 * j) as f64;
                tp *= t2;
            }
            let p = norm * b * tp;
            probs.push(p);
            if p < 1e-320 {
                break;
            }
        }
        let len = probs.len();
        // suffix sums of the small terms directly: no cancellation, so the
        // result stays meaningful far below machine epsilon relative to 1
        tails.clear();
        tails.resize(len + 1, 0.0);
        tails[len] = probs[len - 1] * t2 / (1.0 - t2); // geometric remainder bound
        for j in (0..len).rev() {
            tails[j] = tails[j + 1] + probs[j];
        }
        // convolve, pushing everything beyond n_cap into the overflow bucket
        let mut next = vec![0.0f64; half + 1];
        let mut lost = 0.0;
        for (s, &m) in dist.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let room = half - s;
            for (j, &p) in probs.iter().take(room + 1).enumerate() {
                next[s + j] += m * p;
            }
            if room + 1 < tails.len() {
                lost += m * tails[room + 1];
            }
        }
        overflow += lost;
        dist = next;
    }
    overflow
}

/// Torus trial-state energy sweep: squeezed state with kernel −Nφω_Nφ on a
/// lattice of `points_per_unit`·N points per axis, compared with N·e_GP.
pub fn trial_upper_bound(
    gp: &GpState,
    base: &ScatteringSolution,
    points_per_unit: usize,
    n_sweep: &[u32],
) -> Result<TrialBoundReport> {
    if gp.trap.boundary != Boundary::PeriodicTorus || (gp.trap.l - 0.5).abs() > 1e-12 {
        return Err(Error::Validation("trial bound is implemented on the unit torus".into()));
    }
    let lo = gp.phi.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(lo > 0.0 && gp.max_phi() - lo < 1e-8) {
        return Err(Error::Validation("torus GP state must be the constant profile".into()));
    }
    if base.potential.is_hard_sphere() {
        return Err(Error::Domain("trial bound needs a finite potential".into()));
    }
    if points_per_unit < 4 {
        return Err(Error::Validation("need at least 4 lattice points per unit".into()));
    }
    if n_sweep.len() < 2 {
        return Err(Error::Validation("the N sweep needs at least two points".into()));
    }

    // Young step: on the torus (V_Nf_N)∗φ² = φ²∫V_Nf_N exactly, so the
    // Hartree-with-f energy is (N²/2)∫V_Nf_N∫φ⁴ = 4πa_q N∫φ⁴
    let quart = {
        let h3 = gp.trap.grid().cell_volume();
        h3 * gp.phi.iter().map(|&x| x.powi(4)).sum::<f64>()
    };

    let mut rows = Vec::with_capacity(n_sweep.len());
    let mut young_lhs = 0.0;
    let mut young_rhs = 0.0;
    for &n in n_sweep {
        let big_n = n as f64;
        let m = points_per_unit * n as usize;
        let grid = Grid3 { m, side: 1.0 };
        let fft = Fft3::new(m);
        let h3 = grid.cell_volume();
        let q_need = 3f64.sqrt() * PI * points_per_unit as f64;
        let table = base.vf_hat_table(q_need * 1.001, 8192)?;

        // Ṽ(z) = N²V(N·|z|) with minimum-image distances
        let mut vt = vec![0.0f64; grid.len()];
        for ix in 0..m {
            for iy in 0..m {
                for iz in 0..m {
                    let d = grid.min_image_dist(ix, iy, iz);
                    vt[grid.idx(ix, iy, iz)] = big_n * big_n * base.potential.eval(big_n * d);
                }
            }
        }
        let vg0: f64 = h3 * vt.iter().sum::<f64>();
        let hartree = 0.5 * big_n * big_n * vg0;

        let mut c = to_complex(&vt);
        fft.forward(&mut c); // h³·c[p].re = v_g(p)

        // k_p = −(Vf)^(p/N)/(2p²); γ_p = k_p², α_p = k_p
        let mut kp = vec![0.0f64; grid.len()];
        let mut kinetic = 0.0;
        let mut tr_gamma = 0.0;
        let mut pair_acc = 0.0;
        for ix in 0..m {
            let fx = grid.freq(ix);
            for iy in 0..m {
                let fy = grid.freq(iy);
                for iz in 0..m {
                    let fz = grid.freq(iz);
                    let p2 = fx * fx + fy * fy + fz * fz;
                    if p2 == 0.0 {
                        continue;
                    }
                    let idx = grid.idx(ix, iy, iz);
                    let k = -table.eval(p2.sqrt() / big_n) / (2.0 * p2);
                    kp[idx] = k;
                    kinetic += p2 * k * k;
                    tr_gamma += k * k;
                    pair_acc += k * c[idx].re;
                }
            }
        }
        let pairing = big_n * h3 * pair_acc;

        // quartic terms: α(x−y) and γ(x−y) kernels in position space
        for (ci, &k) in c.iter_mut().zip(&kp) {
            *ci = rustfft::num_complex::Complex64::new(k, 0.0);
        }
        fft.inverse_raw(&mut c);
        let s_a2: f64 = c.iter().zip(&vt).map(|(z, &v)| v * z.re * z.re).sum();
        for (ci, &k) in c.iter_mut().zip(&kp) {
            *ci = rustfft::num_complex::Complex64::new(k * k, 0.0);
        }
        fft.inverse_raw(&mut c);
        let s_g2: f64 = c.iter().zip(&vt).map(|(z, &v)| v * z.re * z.re).sum();
        let quartic = 0.5 * (tr_gamma * tr_gamma * vg0 + h3 * (s_a2 + s_g2));

        let wick = hartree + kinetic + pairing + quartic;
        let n_e_gp = big_n * gp.e_gp;
        let trace_defect = squeezed_tail_mass(&kp, n as usize);
        rows.push(TrialRow {
            n,
            wick_energy: wick,
            n_e_gp,
            defect: wick - n_e_gp,
            trace_defect,
        });
        // (N²/2)∫((V_Nf_N)∗φ²)φ² = (N/2)(Vf)^(0)∫φ⁴ for constant φ
        young_lhs = 0.5 * big_n * base.vf_hat(0.0)? * quart;
        young_rhs = 4.0 * PI * base.a_quadrature * big_n * quart;
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.defect).collect();
    let (slope, _, stderr) = linear_fit(&xs, &ys);
    let success = slope <= 2.0 * stderr;
    let young_ok = (young_lhs - young_rhs).abs() <= 1e-10 * young_rhs.abs().max(1e-10);
    Ok(TrialBoundReport {
        rows,
        slope,
        slope_stderr: stderr,
        success,
        young_lhs,
        young_rhs,
        young_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{minimize_gp, TrapPotential};
    use crate::potential::RadialPotential;
    use crate::scattering::solve_scattering;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn single_mode(s: f64) -> QuasiFreePair {
        QuasiFreePair::new(
            DMatrix::from_element(1, 1, s * s),
            DMatrix::from_element(1, 1, s * (1.0 + s * s).sqrt()),
        )
        .unwrap()
    }

    /// ⟨𝒩^pow⟩ of a single-mode squeezed state from its Fock expansion.
    fn squeezed_moment(s: f64, pow: i32) -> f64 {
        let t2 = s * s / (1.0 + s * s);
        let mut b = 1.0;
        let mut tp = 1.0;
        let mut sum = 0.0;
        for j in 0..=60u32 {
            if j > 0 {
                b *= (2 * j - 1) as f64 / (2 * j) as f64;
                tp *= t2;
            }
            sum += ((2 * j) as f64).powi(pow) * (1.0 - t2).sqrt() * b * tp;
        }
        sum
    }

    #[test]
    fn vacuum_is_admissible() {
        let pair = QuasiFreePair::vacuum(3);
        let adm = admissible(&pair);
        assert!(adm.ok && adm.witness.is_none());
        assert_eq!(number_moment(&pair, 2).unwrap(), 0.0);
        assert!(moment_bound_check(&pair, 3, None).unwrap().ok);
    }

    #[test]
    fn single_mode_saturates_block_positivity() {
        for &s in &[0.1, 0.7, 2.0] {
            let pair = single_mode(s);
            let adm = admissible(&pair);
            assert!(adm.ok, "s = {s}");
            // the 2×2 block has determinant exactly 0
            let det = pair.gamma[(0, 0)] * (1.0 + pair.gamma[(0, 0)])
                - pair.alpha[(0, 0)] * pair.alpha[(0, 0)];
            assert!(det.abs() < 1e-10, "det = {det}");
            assert!(adm.min_eig_block.abs() < 1e-10);
        }
    }

    #[test]
    fn pairing_without_occupation_is_rejected() {
        let pair = QuasiFreePair::new(
            DMatrix::zeros(2, 2),
            DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.1, 0.0]),
        )
        .unwrap();
        let adm = admissible(&pair);
        assert!(!adm.ok);
        let w = adm.witness.expect("failure must carry a witness");
        // the witness certifies negativity of the block form
        let n = 2;
        let mut block = DMatrix::zeros(2 * n, 2 * n);
        block.view_mut((0, n), (n, n)).copy_from(&pair.alpha);
        block.view_mut((n, 0), (n, n)).copy_from(&pair.alpha);
        block.view_mut((n, n), (n, n)).copy_from(&DMatrix::identity(n, n));
        assert!((w.transpose() * &block * &w)[(0, 0)] < 0.0);
    }

    #[test]
    fn kernel_construction_always_admissible() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..25 {
            let d = rng.gen_range(2..6);
            let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
            let k = (&g + g.transpose()) * 0.5;
            let mut phi = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
            phi /= phi.norm();
            let pair = from_kernel(&TrialStateSpec { k_matrix: k, n: 10 }, &phi).unwrap();
            assert!(admissible(&pair).ok);
        }
    }

    #[test]
    fn rank_one_kernel_orthogonal_to_phi() {
        let phi = DVector::from_row_slice(&[1.0, 0.0, 0.0]);
        let u = DVector::from_row_slice(&[0.0, 1.0, 0.0]);
        let k: DMatrix<f64> = 0.8 * &u * u.transpose();
        let pair = from_kernel(&TrialStateSpec { k_matrix: k.clone(), n: 5 }, &phi).unwrap();
        assert!((&pair.gamma - &k * &k).amax() < 1e-14);
        assert!((&pair.alpha - &k).amax() < 1e-14);
        assert!(admissible(&pair).ok);
    }

    #[test]
    fn wick_vacuum_reduces_to_hartree() {
        let d = 3;
        let t = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 2.0, 3.0]);
        let tensor = InteractionTensor::from_fn(d, |m, n, p, q| {
            // a legitimately symmetric toy tensor
            ((m + p) * (n + q)) as f64 * 0.01 + if m == p && n == q { 0.1 } else { 0.0 }
        });
        let phi = DVector::from_row_slice(&[1.0, 0.0, 0.0]);
        let w = wick_energy(&QuasiFreePair::vacuum(d), &t, &tensor, &phi, 20, 0.0).unwrap();
        assert_eq!(w.gamma_one_body, 0.0);
        assert_eq!(w.pairing, 0.0);
        assert_eq!(w.quartic, 0.0);
        let hartree = 0.5 * 400.0 * tensor.get(0, 0, 0, 0);
        assert!((w.total - (20.0 * 1.0 + hartree)).abs() < 1e-12);
    }

    #[test]
    fn wick_affine_in_alpha_pairing() {
        let d = 2;
        let t = DMatrix::identity(d, d);
        let tensor = InteractionTensor::from_fn(d, |m, n, p, q| {
            0.05 * ((1 + m * p) * (1 + n * q)) as f64
        });
        let phi = DVector::from_row_slice(&[1.0, 0.0]);
        let gamma = DMatrix::from_row_slice(2, 2, &[0.04, 0.0, 0.0, 0.01]);
        let alpha = DMatrix::from_row_slice(2, 2, &[0.0, 0.1, 0.1, 0.0]);
        let p1 = QuasiFreePair::new(gamma.clone(), alpha.clone()).unwrap();
        let p2 = QuasiFreePair::new(gamma, alpha * 2.0).unwrap();
        let w1 = wick_energy(&p1, &t, &tensor, &phi, 10, 0.0).unwrap();
        let w2 = wick_energy(&p2, &t, &tensor, &phi, 10, 0.0).unwrap();
        assert!((w2.pairing - 2.0 * w1.pairing).abs() < 1e-13);
        assert_eq!(w1.hartree, w2.hartree);
        assert_eq!(w1.gamma_one_body, w2.gamma_one_body);
    }

    #[test]
    fn wick_energy_is_basis_invariant() {
        let d = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sym = |d: usize, rng: &mut ChaCha8Rng| {
            let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
            (&g + g.transpose()) * 0.5
        };
        let t = sym(d, &mut rng);
        let gamma = {
            let s = sym(d, &mut rng);
            &s * s.transpose() * 0.1
        };
        let alpha = sym(d, &mut rng) * 0.1;
        let mut phi = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        phi /= phi.norm();
        // random tensor with the right symmetries: W[mnpq] = S[mp]S'[nq] + sym
        let s1 = sym(d, &mut rng);
        let s2 = sym(d, &mut rng);
        let tensor = InteractionTensor::from_fn(d, |m, n, p, q| {
            0.5 * (s1[(m, p)] * s2[(n, q)] + s2[(m, p)] * s1[(n, q)])
        });
        let pair = QuasiFreePair::new(gamma.clone(), alpha.clone()).unwrap();
        let w = wick_energy(&pair, &t, &tensor, &phi, 15, 0.3).unwrap();

        let o = sym(d, &mut rng).qr().q();
        let rot = |m: &DMatrix<f64>| o.transpose() * m * &o;
        let pair_r = QuasiFreePair::new(rot(&gamma), rot(&alpha)).unwrap();
        let tensor_r = InteractionTensor::from_fn(d, |m, n, p, q| {
            let mut s = 0.0;
            for a in 0..d {
                for b in 0..d {
                    for c in 0..d {
                        for e in 0..d {
                            s += tensor.get(a, b, c, e)
                                * o[(a, m)]
                                * o[(b, n)]
                                * o[(c, p)]
                                * o[(e, q)];
                        }
                    }
                }
            }
            s
        });
        let w_r = wick_energy(
            &pair_r,
            &rot(&t),
            &tensor_r,
            &(o.transpose() * &phi),
            15,
            0.3,
        )
        .unwrap();
        assert!((w.total - w_r.total).abs() < 1e-10, "{} vs {}", w.total, w_r.total);
    }

    #[test]
    fn tensor_symmetry_violation_is_reported() {
        let mut t = InteractionTensor::from_fn(2, |_, _, _, _| 1.0);
        t.data[1] += 0.5; // breaks m<->p at (0,0,0,1)
        let pair = QuasiFreePair::vacuum(2);
        let phi = DVector::from_row_slice(&[1.0, 0.0]);
        let r = wick_energy(&pair, &DMatrix::identity(2, 2), &t, &phi, 4, 0.0);
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    #[test]
    fn second_moment_matches_fock_expansion() {
        for &s in &[0.2, 0.5, 1.0] {
            let pair = single_mode(s);
            let wick = number_moment(&pair, 2).unwrap();
            let brute = squeezed_moment(s, 2);
            assert!((wick - brute).abs() < 1e-8, "s={s}: {wick} vs {brute}");
            // closed form 3s⁴ + 2s²
            assert!((wick - (3.0 * s.powi(4) + 2.0 * s * s)).abs() < 1e-12);
        }
    }

    #[test]
    fn third_moment_matches_fock_expansion() {
        for &s in &[0.2, 0.5, 0.9] {
            let pair = single_mode(s);
            let wick = number_moment(&pair, 3).unwrap();
            let brute = squeezed_moment(s, 3);
            assert!((wick - brute).abs() < 1e-7, "s={s}: {wick} vs {brute}");
        }
    }

    #[test]
    fn moment_bounds_hold_on_random_kernel_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let d = rng.gen_range(2..5);
            let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
            let k = (&g + g.transpose()) * 0.2;
            let mut phi = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
            phi /= phi.norm();
            let pair = from_kernel(&TrialStateSpec { k_matrix: k, n: 8 }, &phi).unwrap();
            assert!(moment_bound_check(&pair, 2, None).unwrap().ok);
            assert!(moment_bound_check(&pair, 3, None).unwrap().ok);
        }
    }

    #[test]
    fn pair_json_round_trip() {
        let pair = single_mode(0.6);
        let back = QuasiFreePair::from_json(&pair.to_json()).unwrap();
        assert!((&back.gamma - &pair.gamma).amax() < 1e-15);
        assert!((&back.alpha - &pair.alpha).amax() < 1e-15);
    }

    #[test]
    fn squeezed_tail_mass_single_mode_is_exact() {
        // one mode, cap 4: tail = 1 − P0 − P2 − P4
        let k = 0.8f64;
        let tail = squeezed_tail_mass(&[k], 4);
        let t2 = k * k / (1.0 + k * k);
        let norm = (1.0 - t2).sqrt();
        let expect = 1.0 - norm * (1.0 + 0.5 * t2 + 0.375 * t2 * t2);
        assert!((tail - expect).abs() < 1e-14, "{tail} vs {expect}");
    }

    #[test]
    fn trial_bound_zero_interaction_is_exact() {
        let pot = RadialPotential::SquareWell { v0: 0.0, r0: 0.4 };
        let base = solve_scattering(&pot, 0.8, 4001).unwrap();
        let gp = minimize_gp(&TrapPotential::unit_torus(8), 0.0, 1e-10).unwrap();
        let rep = trial_upper_bound(&gp, &base, 4, &[2, 4]).unwrap();
        for row in &rep.rows {
            // quadrature rounding leaves ~1e-27 dust in the scattering data
            assert!(row.defect.abs() < 1e-20);
            assert_eq!(row.trace_defect, 0.0);
        }
        assert!(rep.young_ok);
    }

    #[test]
    fn trial_bound_torus_sweep() {
        let pot = RadialPotential::SquareWell { v0: 20.0, r0: 0.4 };
        let base = solve_scattering(&pot, 0.8, 4001).unwrap();
        let gp = minimize_gp(&TrapPotential::unit_torus(8), base.a, 1e-10).unwrap();
        let rep = trial_upper_bound(&gp, &base, 8, &[4, 8]).unwrap();
        assert!(rep.young_ok, "young {} vs {}", rep.young_lhs, rep.young_rhs);
        for row in &rep.rows {
            assert!(row.wick_energy.is_finite());
            assert!(row.trace_defect >= 0.0 && row.trace_defect < 1.0);
        }
        // truncation mass must fall faster than N⁻³ across the doubling
        assert!(rep.rows[1].trace_defect < rep.rows[0].trace_defect / 8.0);
    }
}
