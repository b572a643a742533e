//! Exact diagonalization of the second-quantized N-boson Hamiltonian on
//! small one-body bases, the excitation map relative to a condensate mode,
//! and sandwich tests of energy and condensation bounds.

use crate::linalg::{lanczos_lowest, sym_eigen};
use crate::quasifree::{wick_energy, InteractionTensor, QuasiFreePair};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::PI;

const SECTOR_DIM_CAP: u128 = 200_000;
const DENSE_DIM_CAP: usize = 2000;

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut v: u128 = 1;
    for i in 0..k {
        v = v * (n - i) as u128 / (i + 1) as u128;
    }
    v
}

fn factorial(n: u8) -> f64 {
    (1..=n as u64).map(|i| i as f64).product()
}

/// Fixed-(M, N) occupation-number sector with a lexicographic bijection
/// between occupation vectors and dense indices.
pub struct FockSector {
    pub m: usize,
    pub n: usize,
    pub states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl FockSector {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Validation("need at least one mode".into()));
        }
        if n > 200 {
            return Err(Error::Validation("particle count out of range".into()));
        }
        let dim = binomial((n + m - 1) as u64, n as u64);
        if dim > SECTOR_DIM_CAP {
            return Err(Error::Resource(format!(
                "sector dimension {dim} exceeds the cap {SECTOR_DIM_CAP}"
            )));
        }
        let mut states = Vec::with_capacity(dim as usize);
        let mut occ = vec![0u8; m];
        fill(&mut states, &mut occ, 0, n as u8);
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        return Ok(FockSector { m, n, states, index });

        fn fill(out: &mut Vec<Vec<u8>>, occ: &mut Vec<u8>, mode: usize, left: u8) {
            if mode + 1 == occ.len() {
                occ[mode] = left;
                out.push(occ.clone());
                return;
            }
            for v in 0..=left {
                occ[mode] = v;
                fill(out, occ, mode + 1, left - v);
            }
            occ[mode] = 0;
        }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BasisProvenance {
    Torus1d,
    Torus3d,
    OscillatorModes,
}

/// H_N = dΓ(T) + ½ Σ V[mnpq] a*_m a*_n a_p a_q with the pair-integral tensor
/// V[mnpq] = ∬(u_m u_p)(x) V(x−y) (u_n u_q)(y).
pub struct ManyBodyProblem {
    pub one_body: DMatrix<f64>,
    pub two_body: InteractionTensor,
    pub n: u32,
    pub condensate: DVector<f64>,
    pub provenance: BasisProvenance,
}

impl ManyBodyProblem {
    pub fn new(
        one_body: DMatrix<f64>,
        two_body: InteractionTensor,
        n: u32,
        condensate: DVector<f64>,
        provenance: BasisProvenance,
    ) -> Result<Self> {
        let m = one_body.nrows();
        if !one_body.is_square() || two_body.dim != m || condensate.len() != m {
            return Err(Error::Validation("basis dimensions disagree".into()));
        }
        if n == 0 {
            return Err(Error::Validation("need at least one particle".into()));
        }
        if (one_body.transpose() - &one_body).amax() > 1e-10 {
            return Err(Error::Validation("one-body matrix must be symmetric".into()));
        }
        two_body.validate_symmetry(1e-10)?;
        if (condensate.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::Validation("condensate vector must be normalized".into()));
        }
        Ok(ManyBodyProblem { one_body, two_body, n, condensate, provenance })
    }

    /// 1D unit-torus real plane waves (1, √2cos2πkx, √2sin2πkx, …) with the
    /// smooth interaction V(x−y) = λ(1 + cos 2π(x−y)); tensors by trapezoid
    /// quadrature, exact for trigonometric polynomials at this resolution.
    pub fn torus_1d(m_modes: usize, n: u32, lambda: f64) -> Result<Self> {
        if m_modes == 0 {
            return Err(Error::Validation("need at least one mode".into()));
        }
        if lambda < 0.0 || !lambda.is_finite() {
            return Err(Error::Validation("coupling must be finite and >= 0".into()));
        }
        let k_max = m_modes / 2;
        let ng = 4 * k_max + 8;
        // table of basis values on the quadrature grid
        let mut u = DMatrix::zeros(m_modes, ng);
        let mut t = DMatrix::zeros(m_modes, m_modes);
        for mode in 0..m_modes {
            let k = (mode + 1) / 2;
            let w = 2.0 * PI * k as f64;
            t[(mode, mode)] = w * w;
            for i in 0..ng {
                let x = i as f64 / ng as f64;
                u[(mode, i)] = if mode == 0 {
                    1.0
                } else if mode % 2 == 1 {
                    2f64.sqrt() * (w * x).cos()
                } else {
                    2f64.sqrt() * (w * x).sin()
                };
            }
        }
        let mut vxy = DMatrix::zeros(ng, ng);
        for i in 0..ng {
            for j in 0..ng {
                let d = (i as f64 - j as f64) / ng as f64;
                vxy[(i, j)] = lambda * (1.0 + (2.0 * PI * d).cos());
            }
        }
        // V[mnpq] = (1/ng²) Σ_ij (u_m u_p)(x_i) V(x_i−y_j) (u_n u_q)(y_j)
        let mut prod = DMatrix::zeros(m_modes * m_modes, ng);
        for a in 0..m_modes {
            for b in 0..m_modes {
                for i in 0..ng {
                    prod[(a * m_modes + b, i)] = u[(a, i)] * u[(b, i)];
                }
            }
        }
        let w = (&prod * vxy * prod.transpose()) / (ng as f64 * ng as f64);
        let tensor = InteractionTensor::from_fn(m_modes, |m, n2, p, q| {
            w[(m * m_modes + p, n2 * m_modes + q)]
        });
        let mut phi = DVector::zeros(m_modes);
        phi[0] = 1.0;
        Self::new(t, tensor, n, phi, BasisProvenance::Torus1d)
    }

    pub fn sector(&self) -> Result<FockSector> {
        FockSector::new(self.one_body.nrows(), self.n as usize)
    }

    /// out += H v in the occupation basis of `sector`.
    pub fn apply_h(&self, sector: &FockSector, v: &DVector<f64>, out: &mut DVector<f64>) {
        let m = self.one_body.nrows();
        let mut occ2 = vec![0u8; m];
        for (col, occ) in sector.states.iter().enumerate() {
            let c = v[col];
            if c == 0.0 {
                continue;
            }
            // dΓ(T)
            for q in 0..m {
                if occ[q] == 0 {
                    continue;
                }
                let f1 = (occ[q] as f64).sqrt();
                for p in 0..m {
                    let tpq = self.one_body[(p, q)];
                    if tpq == 0.0 {
                        continue;
                    }
                    occ2.copy_from_slice(occ);
                    occ2[q] -= 1;
                    let f2 = (occ2[p] as f64 + 1.0).sqrt();
                    occ2[p] += 1;
                    let row = sector.index_of(&occ2).unwrap();
                    out[row] += c * tpq * f1 * f2;
                }
            }
            // ½ Σ V[mnpq] a*_m a*_n a_p a_q
            for q in 0..m {
                if occ[q] == 0 {
                    continue;
                }
                for p in 0..m {
                    let np = occ[p] as i32 - if p == q { 1 } else { 0 };
                    if np <= 0 {
                        continue;
                    }
                    let fa = (occ[q] as f64 * np as f64).sqrt();
                    for nn in 0..m {
                        for mm in 0..m {
                            let val = self.two_body.get(mm, nn, p, q);
                            if val == 0.0 {
                                continue;
                            }
                            occ2.copy_from_slice(occ);
                            occ2[q] -= 1;
                            occ2[p] -= 1;
                            let f3 = occ2[nn] as f64 + 1.0;
                            occ2[nn] += 1;
                            let f4 = occ2[mm] as f64 + 1.0;
                            occ2[mm] += 1;
                            let row = sector.index_of(&occ2).unwrap();
                            out[row] += 0.5 * c * val * fa * (f3 * f4).sqrt();
                        }
                    }
                }
            }
        }
    }

    pub fn dense_h(&self, sector: &FockSector) -> DMatrix<f64> {
        let dim = sector.dim();
        let mut h = DMatrix::zeros(dim, dim);
        let mut e = DVector::zeros(dim);
        let mut col = DVector::zeros(dim);
        for j in 0..dim {
            e[j] = 1.0;
            col.fill(0.0);
            self.apply_h(sector, &e, &mut col);
            h.column_mut(j).copy_from(&col);
            e[j] = 0.0;
        }
        h
    }
}

/// dΓ(A) in the occupation basis of `sector`.
pub fn dgamma_matrix(sector: &FockSector, a: &DMatrix<f64>) -> DMatrix<f64> {
    let m = sector.m;
    let dim = sector.dim();
    let mut out = DMatrix::zeros(dim, dim);
    let mut occ2 = vec![0u8; m];
    for (col, occ) in sector.states.iter().enumerate() {
        for q in 0..m {
            if occ[q] == 0 {
                continue;
            }
            let f1 = (occ[q] as f64).sqrt();
            for p in 0..m {
                if a[(p, q)] == 0.0 {
                    continue;
                }
                occ2.copy_from_slice(occ);
                occ2[q] -= 1;
                let f2 = (occ2[p] as f64 + 1.0).sqrt();
                occ2[p] += 1;
                let row = sector.index_of(&occ2).unwrap();
                out[(row, col)] += a[(p, q)] * f1 * f2;
            }
        }
    }
    out
}

pub struct GroundState {
    pub energy: f64,
    pub vector: DVector<f64>,
    /// γ^{(1)}_{mn} = ⟨a*_n a_m⟩ on the ground state; Tr = N.
    pub gamma1: DMatrix<f64>,
}

fn one_body_density(sector: &FockSector, v: &DVector<f64>) -> DMatrix<f64> {
    let m = sector.m;
    let mut g = DMatrix::zeros(m, m);
    let mut occ2 = vec![0u8; m];
    for (col, occ) in sector.states.iter().enumerate() {
        let c = v[col];
        if c == 0.0 {
            continue;
        }
        for mm in 0..m {
            if occ[mm] == 0 {
                continue;
            }
            let f1 = (occ[mm] as f64).sqrt();
            for nn in 0..m {
                occ2.copy_from_slice(occ);
                occ2[mm] -= 1;
                let f2 = (occ2[nn] as f64 + 1.0).sqrt();
                occ2[nn] += 1;
                let row = sector.index_of(&occ2).unwrap();
                g[(mm, nn)] += c * v[row] * f1 * f2;
            }
        }
    }
    (&g + g.transpose()) * 0.5
}

pub fn exact_diagonalize(problem: &ManyBodyProblem) -> Result<GroundState> {
    let sector = problem.sector()?;
    let dim = sector.dim();
    let (energy, vector) = if dim <= DENSE_DIM_CAP {
        let h = problem.dense_h(&sector);
        let (vals, vecs) = sym_eigen(&h);
        (vals[0], vecs.column(0).into_owned())
    } else {
        lanczos_lowest(
            dim,
            |v: &DVector<f64>| {
                let mut out = DVector::zeros(dim);
                problem.apply_h(&sector, v, &mut out);
                out
            },
            None,
            1e-10,
            600,
        )?
    };
    let gamma1 = one_body_density(&sector, &vector);
    Ok(GroundState { energy, vector, gamma1 })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CondensationReport {
    /// N − ⟨φ, γ^{(1)}φ⟩ ≥ 0
    pub depletion: f64,
    pub condensate_overlap: f64,
    /// depletion / (energy − E_N + 1)
    pub ratio: f64,
}

pub fn condensation_report(
    problem: &ManyBodyProblem,
    gamma1: &DMatrix<f64>,
    energy: f64,
    e_ground: f64,
) -> CondensationReport {
    let overlap = (problem.condensate.transpose() * gamma1 * &problem.condensate)[(0, 0)];
    let depletion = problem.n as f64 - overlap;
    CondensationReport {
        depletion,
        condensate_overlap: overlap,
        ratio: depletion / (energy - e_ground + 1.0),
    }
}

/// Orthonormal basis whose first column is φ (Gram–Schmidt completion).
fn basis_with_first(phi: &DVector<f64>) -> DMatrix<f64> {
    let m = phi.len();
    let mut cols: Vec<DVector<f64>> = vec![phi.clone()];
    for j in 0..m {
        if cols.len() == m {
            break;
        }
        let mut v = DVector::zeros(m);
        v[j] = 1.0;
        for c in &cols {
            let d = c.dot(&v);
            v -= c * d;
        }
        let nrm = v.norm();
        if nrm > 1e-8 {
            cols.push(v / nrm);
        }
    }
    DMatrix::from_columns(&cols)
}

/// Matrix of the sector unitary induced by the one-body basis change `b`
/// (columns = new modes in old coordinates): column ν holds |ν⟩ expanded in
/// the new-mode occupation basis.
fn sector_rotation(sector: &FockSector, b: &DMatrix<f64>) -> DMatrix<f64> {
    let m = sector.m;
    let dim = sector.dim();
    let mut r = DMatrix::zeros(dim, dim);
    for (col, occ) in sector.states.iter().enumerate() {
        // a*(u_mode) = Σ_j ⟨w_j, u_mode⟩ b*_j, expanded as a polynomial in
        // the new-mode creation operators
        let mut coeffs: HashMap<Vec<u8>, f64> = HashMap::new();
        coeffs.insert(vec![0u8; m], 1.0);
        for (mode, &cnt) in occ.iter().enumerate() {
            for _ in 0..cnt {
                let mut next: HashMap<Vec<u8>, f64> = HashMap::new();
                for (mu, &c) in &coeffs {
                    for j in 0..m {
                        let w = b[(mode, j)];
                        if w == 0.0 {
                            continue;
                        }
                        let mut mu2 = mu.clone();
                        mu2[j] += 1;
                        *next.entry(mu2).or_insert(0.0) += c * w;
                    }
                }
                coeffs = next;
            }
        }
        let norm_in: f64 = occ.iter().map(|&c| factorial(c)).product::<f64>().sqrt();
        for (mu, c) in coeffs {
            let norm_out: f64 = mu.iter().map(|&v| factorial(v)).product::<f64>().sqrt();
            let row = sector.index_of(&mu).unwrap();
            r[(row, col)] += c * norm_out / norm_in;
        }
    }
    r
}

/// Ψ = Σ_k φ^{⊗N−k} ⊗_s ξ_k with each ξ_k in the symmetric power of φ's
/// orthogonal complement, indexed by FockSector(M−1, k).
pub struct ExcitationDecomposition {
    pub layers: Vec<DVector<f64>>,
}

impl ExcitationDecomposition {
    pub fn layer_norms(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.norm()).collect()
    }
}

pub fn excitation_map(
    problem: &ManyBodyProblem,
    vector: &DVector<f64>,
) -> Result<ExcitationDecomposition> {
    let sector = problem.sector()?;
    if vector.len() != sector.dim() {
        return Err(Error::Validation("vector does not live in the N sector".into()));
    }
    if (vector.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::Validation("excitation map needs a normalized vector".into()));
    }
    let b = basis_with_first(&problem.condensate);
    let r = sector_rotation(&sector, &b);
    let w = r * vector;
    let m = sector.m;
    let n = sector.n;
    let mut layers = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let sub = FockSector::new(m.max(2) - 1, k)?;
        let mut xi = DVector::zeros(sub.dim());
        for (i, occ) in sector.states.iter().enumerate() {
            if occ[0] as usize != n - k {
                continue;
            }
            let j = sub.index_of(&occ[1..]).unwrap();
            xi[j] = w[i];
        }
        layers.push(xi);
    }
    Ok(ExcitationDecomposition { layers })
}

pub fn excitation_inverse(
    problem: &ManyBodyProblem,
    decomp: &ExcitationDecomposition,
) -> Result<DVector<f64>> {
    let sector = problem.sector()?;
    let m = sector.m;
    let n = sector.n;
    if decomp.layers.len() != n + 1 {
        return Err(Error::Validation("expected N+1 excitation layers".into()));
    }
    let mut w = DVector::zeros(sector.dim());
    for (k, xi) in decomp.layers.iter().enumerate() {
        let sub = FockSector::new(m.max(2) - 1, k)?;
        if xi.len() != sub.dim() {
            return Err(Error::Validation("layer dimension mismatch".into()));
        }
        for (i, occ) in sector.states.iter().enumerate() {
            if occ[0] as usize != n - k {
                continue;
            }
            w[i] = xi[sub.index_of(&occ[1..]).unwrap()];
        }
    }
    let b = basis_with_first(&problem.condensate);
    let r = sector_rotation(&sector, &b);
    Ok(r.transpose() * w)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SandwichReport {
    pub e_n: f64,
    /// Exact N-sector expectation of the reconstructed squeezed trial state.
    pub trial_energy: f64,
    /// Wick-theorem value of the same pair (lives on the full Fock space).
    pub trial_wick: f64,
    pub upper_ok: bool,
    /// Largest c with λ_min(H − c𝒩₊) ≥ N·g − C_cap, found by bisection.
    pub c_best: f64,
    /// C actually needed at c_best.
    pub c_big: f64,
    pub lower_ok: bool,
}

/// Reconstruct the N-sector trial vector of a quasi-free pair: per pairing
/// eigenmode (λ_j, w_j) a squeezed amplitude with tanh σ_j = λ_j/√(1+λ_j²),
/// truncated to total excitation ≤ N and padded with condensate particles.
fn reconstruct_trial(
    problem: &ManyBodyProblem,
    sector: &FockSector,
    pair: &QuasiFreePair,
) -> Result<DVector<f64>> {
    let m = sector.m;
    let n = sector.n;
    let phi = &problem.condensate;
    if (&pair.alpha * phi).norm() > 1e-8 * pair.alpha.amax().max(1.0) {
        return Err(Error::Validation(
            "trial pair must pair only within the condensate's complement".into(),
        ));
    }
    let (vals, vecs) = sym_eigen(&pair.alpha);
    // drop the eigenvector carrying the condensate direction
    let mut keep: Vec<(f64, DVector<f64>)> = Vec::new();
    let mut drop_idx = 0;
    let mut best = -1.0;
    for j in 0..m {
        let ov = vecs.column(j).dot(phi).abs();
        if ov > best {
            best = ov;
            drop_idx = j;
        }
    }
    for j in 0..m {
        if j != drop_idx {
            keep.push((vals[j], vecs.column(j).into_owned()));
        }
    }
    let mut cols = vec![phi.clone()];
    let mut taus = Vec::new();
    for (lam, v) in &keep {
        // re-orthogonalize against φ to absorb rounding
        let mut v = v.clone();
        let d = phi.dot(&v);
        v -= phi * d;
        v /= v.norm();
        cols.push(v);
        taus.push(lam / (1.0 + lam * lam).sqrt());
    }
    let b = DMatrix::from_columns(&cols);
    // amplitudes over even excitation patterns in the rotated basis
    let mut w = DVector::zeros(sector.dim());
    for (i, occ) in sector.states.iter().enumerate() {
        let ok = occ[1..].iter().all(|&c| c % 2 == 0);
        if !ok {
            continue;
        }
        let mut amp = 1.0;
        for (j, &c) in occ[1..].iter().enumerate() {
            let half = (c / 2) as u64;
            if half > 0 {
                // |⟨2j|squeezed⟩| ∝ √((2j)!)/(2^j j!) τ^j
                let mut g = 1.0;
                for i2 in 1..=half {
                    g *= taus[j] * ((2 * i2 - 1) as f64 * (2 * i2) as f64).sqrt()
                        / (2.0 * i2 as f64);
                }
                amp *= g;
            }
        }
        w[i] = amp;
    }
    let nrm = w.norm();
    if nrm == 0.0 {
        return Err(Error::Domain("trial reconstruction has no mass in the sector".into()));
    }
    w /= nrm;
    let r = sector_rotation(sector, &b);
    let _ = n;
    Ok(r.transpose() * w)
}

pub fn sandwich(
    problem: &ManyBodyProblem,
    gp_energy_analog: f64,
    trial_pair: &QuasiFreePair,
    c_max: f64,
    c_cap: f64,
) -> Result<SandwichReport> {
    let sector = problem.sector()?;
    if sector.dim() > DENSE_DIM_CAP {
        return Err(Error::Resource("sandwich needs a dense-sized sector".into()));
    }
    let ground = exact_diagonalize(problem)?;
    let trial_vec = reconstruct_trial(problem, &sector, trial_pair)?;
    let h = problem.dense_h(&sector);
    let trial_energy = (trial_vec.transpose() * &h * &trial_vec)[(0, 0)];
    let trial_wick = wick_energy(
        trial_pair,
        &problem.one_body,
        &problem.two_body,
        &problem.condensate,
        problem.n,
        0.0,
    )?
    .total;
    let upper_ok = ground.energy <= trial_energy + 1e-8;

    let m = problem.one_body.nrows();
    let q = DMatrix::identity(m, m) - &problem.condensate * problem.condensate.transpose();
    let nplus = dgamma_matrix(&sector, &q);
    let floor = problem.n as f64 * gp_energy_analog - c_cap;
    let holds = |c: f64| {
        let (vals, _) = sym_eigen(&(&h - &nplus * c));
        vals[0] >= floor
    };
    let (c_best, lower_ok) = if !holds(0.0) {
        (0.0, false)
    } else if holds(c_max) {
        (c_max, true)
    } else {
        let (mut lo, mut hi) = (0.0, c_max);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if holds(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo, true)
    };
    let (vals, _) = sym_eigen(&(&h - &nplus * c_best));
    let c_big = (problem.n as f64 * gp_energy_analog - vals[0]).max(0.0);
    Ok(SandwichReport {
        e_n: ground.energy,
        trial_energy,
        trial_wick,
        upper_ok,
        c_best,
        c_big,
        lower_ok,
    })
}
