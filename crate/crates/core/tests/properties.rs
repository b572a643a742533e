//! Randomized invariant checks across the library surface.
//!
//! Each block states an exact structural property (bounds, symmetries, basis
//! independence, round trips) and hammers it with generated inputs. Case
//! counts are kept modest so the whole file runs in a few seconds.

use bosegas::homogeneous::mu_window;
use bosegas::many_body::FockSector;
use bosegas::potential::RadialPotential;
use bosegas::quadratic::{evaluate, ground_energy_exact, random_instance};
use bosegas::quasifree::{
    admissible, from_kernel, number_moment, QuasiFreePair, TrialStateSpec,
};
use bosegas::scattering::{scale, solve_scattering};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k.min(n));
    (1..=k).fold(1u64, |acc, i| acc * (n - k + i) / i)
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-scale..scale));
    (&g + g.transpose()) * 0.5
}

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0f64));
    g.qr().q()
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0f64));
        let norm = v.norm();
        if norm > 1e-3 {
            return v / norm;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    /// The zero-energy profile obeys 0 ≤ f ≤ 1, matches the free solution
    /// r − a beyond the support, and the quadrature identity 8πa = ∫Vf
    /// reproduces the fitted scattering length.
    #[test]
    fn scattering_profile_bounds_and_tail(
        v0 in 0.5..30.0f64,
        r0 in 0.3..1.5f64,
        gaussian in proptest::bool::ANY,
    ) {
        let pot = if gaussian {
            RadialPotential::GaussianTruncated { v0, r0 }
        } else {
            RadialPotential::SquareWell { v0, r0 }
        };
        let sol = solve_scattering(&pot, 2.0 * r0, 2001).unwrap();
        prop_assert!(sol.a > 0.0 && sol.a < r0);
        prop_assert!((sol.a - sol.a_quadrature).abs() < 1e-6 * sol.a.max(1e-3));
        for (i, &r) in sol.r_grid.iter().enumerate() {
            if r > 0.0 {
                let f = sol.u[i] / r;
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f), "f({r}) = {f}");
            }
            if r >= sol.match_radius {
                prop_assert!((sol.u[i] - (r - sol.a)).abs() < 1e-12 * (1.0 + r));
            }
        }
    }

    /// Scaling: f_N(r) = f(Nr), ∫V_N f_N = 8πa/N, and the Fourier profile at
    /// p collapses to N⁻¹(Vf)^(p/N).
    #[test]
    fn scattering_scaling_identities(
        v0 in 1.0..20.0f64,
        n in 1u32..200,
        p in 0.0..50.0f64,
    ) {
        let pot = RadialPotential::SquareWell { v0, r0: 1.0 };
        let sol = solve_scattering(&pot, 2.0, 2001).unwrap();
        let scaled = scale(&sol, n).unwrap();
        let nf = n as f64;
        let r = 0.37;
        prop_assert!((scaled.f_n(r) - sol.f(nf * r)).abs() < 1e-14);
        prop_assert!(
            (scaled.integral_v_f() - 8.0 * std::f64::consts::PI * sol.a_quadrature / nf).abs()
                < 1e-14
        );
        let direct = sol.vf_hat(p / nf).unwrap() / nf;
        prop_assert!((scaled.fourier_profile(p).unwrap() - direct).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    /// Sampled quadratic Hamiltonians are admissible by construction and the
    /// exact ground energy never falls below either closed-form lower bound.
    #[test]
    fn quadratic_bounds_hold_on_random_instances(seed in 0u64..1_000_000) {
        let qh = random_instance(seed, (1, 8), (0.05, 2.0));
        prop_assert!(qh.admissible());
        let report = evaluate(&qh, 1.0 / qh.epsilon).unwrap();
        prop_assert!(report.exact <= 1e-10, "½Tr(E−H) ≤ 0, got {}", report.exact);
        prop_assert!(report.satisfied_half, "exact {} < half {}", report.exact, report.bound_half);
        prop_assert!(
            report.exact >= report.bound_quarter - 1e-10,
            "exact {} < quarter {}",
            report.exact,
            report.bound_quarter
        );
    }

    /// ½Tr(E−H) is a trace formula: conjugating H and K by the same
    /// orthogonal matrix leaves the ground energy unchanged.
    #[test]
    fn quadratic_ground_energy_is_basis_independent(seed in 0u64..1_000_000) {
        let qh = random_instance(seed, (2, 6), (0.1, 1.5));
        let e0 = ground_energy_exact(&qh).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
        let o = random_orthogonal(&mut rng, qh.dim());
        let rotated = bosegas::quadratic::QuadraticHamiltonian::new(
            o.transpose() * &qh.h * &o,
            o.transpose() * &qh.k * &o,
            qh.epsilon,
            bosegas::quadratic::Provenance::Manual,
        )
        .unwrap();
        let e1 = ground_energy_exact(&rotated).unwrap();
        prop_assert!((e0 - e1).abs() < 1e-8 * (1.0 + e0.abs()), "{e0} vs {e1}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    /// The admissible chemical-potential window is (16πa, 4π²−8πa): ordered
    /// when non-empty, empty exactly when the endpoints cross at a = π/6.
    #[test]
    fn mu_window_is_ordered_or_empty(a in 0.0..1.0f64) {
        use std::f64::consts::PI;
        match mu_window(a) {
            Some((lo, hi)) => {
                prop_assert!(lo < hi);
                prop_assert!((lo - 16.0 * PI * a).abs() < 1e-12);
                prop_assert!((hi - (4.0 * PI * PI - 8.0 * PI * a)).abs() < 1e-12);
                prop_assert!(a < PI / 6.0 + 1e-9);
            }
            None => prop_assert!(a >= PI / 6.0 - 1e-9),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    /// Pairs built from a kernel through γ = Qk²Q, α = QkQ always satisfy the
    /// quasi-free admissibility conditions, and survive a JSON round trip.
    #[test]
    fn kernel_pairs_are_admissible_and_serializable(
        seed in 0u64..1_000_000,
        n in 2usize..8,
        kscale in 0.01..5.0f64,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = random_symmetric(&mut rng, n, kscale);
        let phi = random_unit(&mut rng, n);
        let pair = from_kernel(&TrialStateSpec { k_matrix: k, n: 10 }, &phi).unwrap();
        let check = admissible(&pair);
        prop_assert!(
            check.ok,
            "γ min eig {}, block min eig {}",
            check.min_eig_gamma,
            check.min_eig_block
        );
        let round = QuasiFreePair::from_json(&pair.to_json()).unwrap();
        prop_assert_eq!(&round.gamma, &pair.gamma);
        prop_assert_eq!(&round.alpha, &pair.alpha);
    }

    /// Number-operator moments of an admissible pair are monotone in ℓ once
    /// ⟨𝒩⟩ ≥ 1, and the variance ⟨𝒩²⟩ − ⟨𝒩⟩² is non-negative.
    #[test]
    fn number_moments_are_consistent(seed in 0u64..1_000_000, n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = random_symmetric(&mut rng, n, 2.0);
        let phi = random_unit(&mut rng, n);
        let pair = from_kernel(&TrialStateSpec { k_matrix: k, n: 10 }, &phi).unwrap();
        let m1 = number_moment(&pair, 1).unwrap();
        let m2 = number_moment(&pair, 2).unwrap();
        let m3 = number_moment(&pair, 3).unwrap();
        prop_assert!(m1 >= -1e-12);
        prop_assert!(m2 >= m1 * m1 - 1e-9 * (1.0 + m2.abs()), "var < 0: {m1} {m2}");
        // Cauchy-Schwarz on the positive operator 𝒩: ⟨𝒩²⟩² ≤ ⟨𝒩⟩⟨𝒩³⟩.
        prop_assert!(m2 * m2 <= m1 * m3 + 1e-9 * (1.0 + m2 * m2));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    /// Sector enumeration is a total, order-stable bijection of size
    /// C(n+m−1, n), listed in lexicographic order.
    #[test]
    fn fock_sector_is_a_lexicographic_bijection(m in 1usize..6, n in 0usize..7) {
        let sector = FockSector::new(m, n).unwrap();
        prop_assert_eq!(sector.dim() as u64, binomial((n + m - 1) as u64, n as u64));
        for (i, occ) in sector.states.iter().enumerate() {
            prop_assert_eq!(occ.iter().map(|&o| o as usize).sum::<usize>(), n);
            prop_assert_eq!(sector.index_of(occ), Some(i));
            if i > 0 {
                prop_assert!(sector.states[i - 1] < *occ, "not lexicographic at {i}");
            }
        }
    }
}
