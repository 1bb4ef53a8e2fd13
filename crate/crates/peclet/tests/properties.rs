use std::sync::Arc;

use peclet::hypo_functional::phi_parts;
use peclet::mixing::{hminus1_norm, inviscid_state};
use peclet::partition_weights::{build_weights, EpsLedger};
use peclet::semigroup::propagate;
use peclet::stochastic::{covariance_block, CovarianceOptions, NoiseSpectrum};
use peclet::{
    assemble_mode_operator, make_profile, smooth_random_vector, Domain, Kind, ProfileSpec,
    ShearProfile, C64,
};
use proptest::prelude::*;

fn profile(name: &str, domain: Domain, n: usize) -> Arc<ShearProfile> {
    Arc::new(make_profile(&ProfileSpec::Builtin(name.into()), domain, n).unwrap())
}

fn profile_name() -> impl Strategy<Value = (&'static str, Domain)> {
    prop_oneof![
        Just(("sin", Domain::Torus)),
        Just(("sin3", Domain::Torus)),
        Just(("couette", Domain::Channel)),
        Just(("quadratic", Domain::Channel)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn phi_is_sandwiched((name, domain) in profile_name(), seed in 0u64..1000, log_nu in -4.0f64..-2.5, k in 1i64..4) {
        let p = profile(name, domain, 256);
        let nu = 10f64.powf(log_nu);
        let w = build_weights(p.clone(), nu, k, &EpsLedger::default()).unwrap();
        let f = smooth_random_vector(&p.grid, 12, seed);
        let parts = phi_parts(&f, &w).unwrap();
        let (lo, hi) = parts.sandwich();
        let phi = parts.total();
        prop_assert!(lo <= phi * (1.0 + 1e-12), "{lo} > {phi}");
        prop_assert!(phi <= hi * (1.0 + 1e-12), "{phi} > {hi}");
    }

    #[test]
    fn hminus1_is_below_l2(seed in 0u64..1000, modes in 0usize..40) {
        let p = profile("sin", Domain::Torus, 128);
        let f = smooth_random_vector(&p.grid, modes, seed);
        prop_assert!(hminus1_norm(&f) <= p.grid.norm_sqr(&f).sqrt() * (1.0 + 1e-12));
    }

    #[test]
    fn semigroup_contracts((name, domain) in profile_name(), seed in 0u64..1000, log_nu in -3.0f64..-1.0, k in -3i64..4, hypo in any::<bool>()) {
        prop_assume!(k != 0);
        let kind = if hypo { Kind::Hypoelliptic } else { Kind::Elliptic };
        let p = profile(name, domain, 128);
        let op = assemble_mode_operator(p.clone(), 10f64.powf(log_nu), k, kind).unwrap();
        let f = smooth_random_vector(&p.grid, 6, seed);
        let g = propagate(&op, &f, 2.0, 0.05).unwrap();
        prop_assert!(p.grid.norm_sqr(&g) <= p.grid.norm_sqr(&f) * (1.0 + 1e-12));
    }

    #[test]
    fn global_phase_commutes_with_semigroup(seed in 0u64..1000, theta in 0.0f64..6.3) {
        let p = profile("sin", Domain::Torus, 128);
        let op = assemble_mode_operator(p.clone(), 1e-2, 1, Kind::Elliptic).unwrap();
        let f = smooth_random_vector(&p.grid, 6, seed);
        let phase = C64::from_polar(1.0, theta);
        let rotated: Vec<C64> = f.iter().map(|v| v * phase).collect();
        let a = propagate(&op, &f, 1.0, 0.05).unwrap();
        let b = propagate(&op, &rotated, 1.0, 0.05).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x * phase - y).norm() <= 1e-12 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn inviscid_transport_is_unimodular(seed in 0u64..1000, k in 1i64..5, t in 0.0f64..200.0) {
        let p = profile("sin3", Domain::Torus, 256);
        let f = smooth_random_vector(&p.grid, 6, seed);
        let g = inviscid_state(&p, k, &f, t).unwrap();
        for (x, y) in f.iter().zip(&g) {
            prop_assert!((x.norm() - y.norm()).abs() <= 1e-12 * (1.0 + x.norm()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn covariance_block_is_positive_semidefinite(log_nu in -1.5f64..-0.5, k in 1i64..3, seed in 0u64..1000) {
        let p = profile("sin", Domain::Torus, 64);
        let noise = NoiseSpectrum::rational(2, 3, true);
        let opts = CovarianceOptions { richardson: false, ..Default::default() };
        let block = covariance_block(p.clone(), &noise, 10f64.powf(log_nu), 1.0, k, &opts).unwrap();
        let q = &block.matrix;
        prop_assert!((q - q.adjoint()).norm() <= 1e-10 * q.norm());
        let x = probe_vector(q.nrows(), seed);
        let quad: C64 = (0..q.nrows()).flat_map(|i| (0..q.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| x[i].conj() * q[(i, j)] * x[j])
            .sum();
        prop_assert!(quad.re >= -1e-12 * q.norm());
    }
}

fn probe_vector(n: usize, seed: u64) -> Vec<C64> {
    let grid = peclet::Grid::new(Domain::Torus, n).unwrap();
    smooth_random_vector(&grid, n / 2, seed)
}
