//! Bounds module against independent references.
//!
//! Reference values were produced by `tests/oracles/bounds_oracle.py`
//! (mpmath at 50 digits) and are frozen here.

#![allow(clippy::excessive_precision, clippy::approx_constant)]

use nfs_core::bounds::{
    continuity_bound, embedding_constant, epsilon_max, radial_integral, sigma, sphere_measure,
    BoundInputs, BoundsSnapshot, DEFAULT_QUAD_POINTS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SPHERE: [f64; 10] = [
    2.0,
    6.2831853071795864769,
    12.566370614359172954,
    19.739208802178717238,
    26.318945069571622984,
    31.006276680299820175,
    33.073361792319808187,
    32.469697011334145745,
    29.686580124648361824,
    25.501640398773454439,
];

// (d, radial integral, c_e)
const RADIAL: [(usize, f64, f64); 3] = [
    (5, 0.27768018363489789044, 0.038634207648831250506),
    (6, 0.39269908169872415481, 0.019894367886486916971),
    (7, 0.83304055090469367132, 0.011938718184280398867),
];

struct Case {
    rho: f64,
    m: f64,
    u0: f64,
    k1: f64,
    k2: f64,
    d: usize,
    eps_max: f64,
    sigma: f64,
    cont_half: f64,
}

const CASES: [Case; 4] = [
    Case {
        rho: 1.0,
        m: 2.0,
        u0: 1.0,
        k1: 1.0,
        k2: 1.0,
        d: 5,
        eps_max: 0.12410461174647619155,
        sigma: 4.0218901427751788743,
        cont_half: 0.16657062367257345868,
    },
    Case {
        rho: 1.0,
        m: 2.0,
        u0: 1.0,
        k1: 1.0,
        k2: 1.0,
        d: 6,
        eps_max: 0.1245314445753061521,
        sigma: 4.0094876091256041352,
        cont_half: 0.16658973374746662013,
    },
    Case {
        rho: 1.0,
        m: 2.0,
        u0: 1.0,
        k1: 1.0,
        k2: 1.0,
        d: 7,
        eps_max: 0.12468829086025539279,
        sigma: 4.0055233290111395968,
        cont_half: 0.1666046739444189187,
    },
    Case {
        rho: 0.5,
        m: 3.25,
        u0: 0.75,
        k1: 98.5,
        k2: 17.25,
        d: 5,
        eps_max: 0.0023793175312215132612,
        sigma: 115.14722897890468978,
        cont_half: 0.044566524370983269436,
    },
];

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

#[test]
fn sphere_measure_matches_reference() {
    for (i, &expected) in SPHERE.iter().enumerate() {
        assert!(
            close(sphere_measure(i + 1), expected, 1e-12),
            "d = {}",
            i + 1
        );
    }
}

#[test]
fn sphere_measure_matches_monte_carlo() {
    // |S| = d * vol(unit ball); the ball volume is estimated by rejection
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for d in [5usize, 6] {
        let trials = 1_000_000;
        let hits = (0..trials)
            .filter(|_| {
                (0..d)
                    .map(|_| rng.random_range(-1.0f64..1.0).powi(2))
                    .sum::<f64>()
                    <= 1.0
            })
            .count();
        let volume = 2f64.powi(d as i32) * hits as f64 / trials as f64;
        let estimate = d as f64 * volume;
        assert!(
            close(sphere_measure(d), estimate, 0.015),
            "d = {d}: {estimate}"
        );
    }
}

#[test]
fn radial_integral_matches_beta_closed_form() {
    for (d, radial, c_e) in RADIAL {
        assert!(close(
            radial_integral(d, DEFAULT_QUAD_POINTS).unwrap(),
            radial,
            1e-10
        ));
        assert!(close(
            embedding_constant(d, DEFAULT_QUAD_POINTS).unwrap(),
            c_e,
            1e-10
        ));
    }
}

#[test]
fn threshold_sigma_and_continuity_match_reference() {
    for c in &CASES {
        let inputs = BoundInputs {
            d: c.d,
            big_m: c.m,
            u0_h4: c.u0,
            k_l1: c.k1,
            k_l2: c.k2,
        };
        let eps = epsilon_max(c.rho, &inputs).unwrap();
        assert!(close(eps, c.eps_max, 1e-12), "eps_max d = {}", c.d);
        assert!(
            close(sigma(&inputs).unwrap(), c.sigma, 1e-12),
            "sigma d = {}",
            c.d
        );
        let snap = BoundsSnapshot::compute(c.rho, inputs).unwrap();
        let bound = continuity_bound(snap.epsilon_max / 2.0, &snap, 1.0).unwrap();
        assert!(close(bound, c.cont_half, 1e-12), "continuity d = {}", c.d);
    }
}

#[test]
fn threshold_times_sigma_below_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let inputs = BoundInputs {
            d: rng.random_range(5..=7),
            big_m: 10f64.powf(rng.random_range(-3.0..3.0)),
            u0_h4: 10f64.powf(rng.random_range(-3.0..3.0)),
            k_l1: 10f64.powf(rng.random_range(-3.0..3.0)),
            k_l2: 10f64.powf(rng.random_range(-3.0..3.0)),
        };
        let rho = rng.random_range(1e-6..=1.0);
        let eps = epsilon_max(rho, &inputs).unwrap();
        assert!(eps * sigma(&inputs).unwrap() < 1.0);
    }
}
