//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its measurements (visible with `--nocapture`).
//!
//! Run with `cargo test -p srt-core --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use num_complex::Complex64;
use srt_core::rng::CounterRng;
use srt_core::*;

fn report(name: &str, elapsed: Duration, budget: Duration, details: &str) {
    println!(
        "[{name}] PASS in {:.2}s (budget {:.0}s) — {details}",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    assert!(
        elapsed <= budget,
        "{name} exceeded its runtime budget: {:.2}s > {:.0}s",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
}

/// Criterion 1: second-order convergence of the product-trapezoidal solve,
/// per case, with data manufactured by fine Simpson quadrature.
#[test]
fn acceptance_01_convergence_order() {
    let start = Instant::now();
    let degree = 2u32;
    let mut details = String::new();
    for case in SupportCase::ALL {
        let case_start = Instant::now();
        let (r2, b): (Option<f64>, f64) = match case {
            SupportCase::Interior => (None, 0.9),
            SupportCase::Exterior => (None, 1.8),
            SupportCase::InteriorExterior => (Some(3.0), 1.8),
        };
        let r_max = if case == SupportCase::Interior {
            1.0
        } else {
            2.0
        };
        let f = |r: f64| r * r * (r_max - r) * (r_max - r);
        let mut errors = Vec::new();
        for &m in &[25usize, 50, 100] {
            let h = b / (m + 1) as f64;
            let grid: Vec<f64> = (0..=m).map(|i| h * (i + 1) as f64).collect();
            let params = VolterraCaseParams::new(case, r2, grid).unwrap();
            let g = forward_apply(&params, degree, f).unwrap();
            let rhs: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let system = assemble(&params, degree).unwrap();
            let sol = solve_tsvd(&system, &rhs, &TsvdConfig::new(1e-13, None).unwrap()).unwrap();
            let err = (h * sol
                .values
                .iter()
                .zip(&params.rho_grid)
                .map(|(v, &r)| (v.re - f(r)).powi(2))
                .sum::<f64>())
            .sqrt();
            errors.push(err);
        }
        for pair in errors.windows(2) {
            let order = (pair[0] / pair[1]).log2();
            assert!(
                (1.7..=2.5).contains(&order),
                "{case}: observed order {order} outside [1.7, 2.5] (errors {errors:?})"
            );
            details += &format!("{case} p={order:.2} ");
        }
        assert!(
            case_start.elapsed() <= Duration::from_secs(10),
            "{case} exceeded 10 s"
        );
    }
    report(
        "criterion 1: convergence order",
        start.elapsed(),
        Duration::from_secs(30),
        &details,
    );
}

/// Criterion 2: the 3-D kernels agree with the general-dimension evaluator
/// at n = 3 to 1e-12 relative on 10^4 random valid tuples.
#[test]
fn acceptance_02_kernel_consistency() {
    let start = Instant::now();
    let rng = CounterRng::new(0x5eed);
    let mut worst: f64 = 0.0;
    for i in 0..10_000u64 {
        let case = match i % 3 {
            0 => SupportCase::Interior,
            1 => SupportCase::Exterior,
            _ => SupportCase::InteriorExterior,
        };
        let l = (rng.uniform(4 * i) * 26.0) as u32;
        let (rho_hi, r2) = match case {
            SupportCase::Interior => (0.99, None),
            SupportCase::Exterior => (1.99, None),
            SupportCase::InteriorExterior => (1.99, Some(2.05 + 2.0 * rng.uniform(4 * i + 3))),
        };
        let rho = 0.01 + (rho_hi - 0.01) * rng.uniform(4 * i + 1);
        let r = rho * rng.uniform(4 * i + 2);
        let a = kernel_3d(case, l, rho, r, r2).unwrap();
        let b = general_kernel(3, case, l, rho, r, r2).unwrap();
        let rel = (a - b).abs() / b.abs().max(1e-12);
        worst = worst.max(rel);
        assert!(
            rel <= 1e-12,
            "{case} l={l} rho={rho} r={r} r2={r2:?}: kernel_3d={a}, general={b}"
        );
    }
    report(
        "criterion 2: kernel consistency",
        start.elapsed(),
        Duration::from_secs(5),
        &format!("10^4 tuples, worst relative difference {worst:.2e}"),
    );
}

/// Criterion 3: every assembled system for l <= 25, M = 49, all three cases,
/// is exactly lower triangular with strictly positive diagonal.
#[test]
fn acceptance_03_matrix_structure() {
    let start = Instant::now();
    let mut checked = 0usize;
    for case in SupportCase::ALL {
        let (r2, hi) = match case {
            SupportCase::Interior => (None, 0.999),
            SupportCase::Exterior => (None, 0.999),
            SupportCase::InteriorExterior => (Some(3.0), 1.999),
        };
        let params = VolterraCaseParams::uniform(case, r2, 0.001, hi, 50).unwrap();
        for l in 0..=25 {
            let system = assemble(&params, l).unwrap();
            assert!(system.lower_triangular);
            assert!(
                system.diag_min > 0.0,
                "{case} l={l}: diag_min = {}",
                system.diag_min
            );
            for i in 0..50 {
                for k in (i + 1)..50 {
                    assert_eq!(
                        system.matrix[(i, k)],
                        0.0,
                        "{case} l={l}: nonzero above diagonal at ({i},{k})"
                    );
                }
            }
            checked += 1;
        }
    }
    report(
        "criterion 3: matrix structure",
        start.elapsed(),
        Duration::from_secs(5),
        &format!("{checked} systems lower triangular with positive diagonals"),
    );
}

/// Criterion 4: the closed-form cap area matches Monte Carlo surface
/// integration (10^6 samples) within 3 standard errors on 50 randomized
/// configurations spanning all intersection regimes.
#[test]
fn acceptance_04_forward_model_monte_carlo() {
    let start = Instant::now();
    let rng = CounterRng::new(0xcafe);
    let mut worst_sigma: f64 = 0.0;
    for i in 0..50u64 {
        let a = 0.1 + 1.4 * rng.uniform(10 * i);
        let rho = 0.1 + 1.4 * rng.uniform(10 * i + 1);
        let u = rng.uniform(10 * i + 2);
        // Cycle through the intersection regimes, including caps beyond a
        // hemisphere (ball wider than the sphere, plane behind the center).
        let dist = match i % 5 {
            0 => rho + a + 0.2 + u,                                   // disjoint
            1 => (rho - a).abs() * 0.9 * u,                           // containment
            2 => (rho - a).abs() + ((rho + a) - (rho - a).abs()) * u, // partial
            3 => {
                // partial, plane behind the center when a > rho
                let lo = (rho - a).abs();
                let hi = (a * a - rho * rho)
                    .max(0.0)
                    .sqrt()
                    .max(lo + 0.05 * (rho + a - lo));
                lo + (hi - lo) * u
            }
            _ => rho + a - 0.05 * (rho + a) * u, // near external tangency
        };
        // Random orientation of the center offset.
        let z = 1.0 - 2.0 * rng.uniform(10 * i + 3);
        let phi = 2.0 * std::f64::consts::PI * rng.uniform(10 * i + 4);
        let s = (1.0 - z * z).max(0.0).sqrt();
        let center = [0.3, -0.2, 0.1];
        let ball = Ball::new(
            [
                center[0] + dist * s * phi.cos(),
                center[1] + dist * s * phi.sin(),
                center[2] + dist * z,
            ],
            a,
            1.0,
        )
        .unwrap();
        let exact = cap_area(center, rho, &ball);
        let (mc, se) = common::mc_cap_area(center, rho, &ball, 1_000_000, 977 + i);
        if se == 0.0 {
            assert!(
                (exact - mc).abs() <= 1e-9 * mc.max(1.0),
                "config {i}: degenerate regime mismatch exact={exact} mc={mc}"
            );
        } else {
            let sigmas = (exact - mc).abs() / se;
            worst_sigma = worst_sigma.max(sigmas);
            assert!(
                sigmas <= 3.0,
                "config {i} (a={a:.3} rho={rho:.3} dist={dist:.3}): {sigmas:.2} sigma"
            );
        }
    }
    report(
        "criterion 4: forward model vs Monte Carlo",
        start.elapsed(),
        Duration::from_secs(60),
        &format!("50 configurations, worst deviation {worst_sigma:.2} sigma"),
    );
}

/// Criterion 5: analyze/synthesize identity on band-limited fields at
/// N = 16, l_max = 8, and exact constants for the constant field.
#[test]
fn acceptance_05_harmonic_round_trip() {
    let start = Instant::now();
    let n = 16usize;
    let geometry =
        AcquisitionGeometry::with_uniform_grid(SupportCase::Interior, 1.0, None, 2, 0.001, n)
            .unwrap();
    let alphas = geometry.alphas();
    let betas = geometry.betas();

    // Constant field: g_0^0 = sqrt(4 pi) * value, everything else ~ 0.
    let value = 1.75;
    let mut constant = RadonData::zeros(geometry.clone());
    constant.values.fill(value);
    let profiles = analyze(&constant, 8).unwrap();
    let expect = (4.0 * std::f64::consts::PI).sqrt() * value;
    for c in profiles.coeff(0, 0) {
        assert!((c.re - expect).abs() <= 1e-6, "g00 = {c}");
        assert!(c.im.abs() <= 1e-8);
    }
    let mut worst_other: f64 = 0.0;
    for (l, m) in profiles.indices() {
        if l == 0 {
            continue;
        }
        for c in profiles.coeff(l, m) {
            worst_other = worst_other.max(c.norm());
        }
    }
    assert!(
        worst_other <= 1e-8,
        "spurious coefficient {worst_other:.2e}"
    );

    // Band-limited round trip in sup norm.
    let truth = |a: f64, b: f64| {
        0.4 + 1.3 * spherical_y(2, 0, a, b).unwrap().re
            + 0.9 * (spherical_y(5, 3, a, b).unwrap() * Complex64::new(0.7, 0.2)).re
            + 0.5 * (spherical_y(8, 8, a, b).unwrap() * Complex64::new(-0.3, 1.1)).re
    };
    let mut data = RadonData::zeros(geometry);
    for i in 0..2 {
        for (j, &a) in alphas.iter().enumerate() {
            for (k, &b) in betas.iter().enumerate() {
                let idx = data.idx(i, j, k);
                data.values[idx] = truth(a, b);
            }
        }
    }
    let profiles = analyze(&data, 8).unwrap();
    let points: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| betas.iter().map(move |&b| (a, b)))
        .collect();
    let field = synthesize(&profiles, &points).unwrap();
    let mut sup: f64 = 0.0;
    for (p, &(a, b)) in points.iter().enumerate() {
        sup = sup.max((field[0][p] - truth(a, b)).abs());
    }
    assert!(sup <= 1e-6, "round-trip sup error {sup:.2e}");
    report(
        "criterion 5: harmonic round trip",
        start.elapsed(),
        Duration::from_secs(5),
        &format!("sup error {sup:.2e}, g00 exact to {:.1e}", 1e-6),
    );
}

/// Criterion 6: harmonic-domain forward consistency at N = 50 — analysis of
/// the exact cap-area data matches the Volterra forward integrals applied to
/// the phantom's analytic profiles, degree by degree for l <= 10.
#[test]
fn acceptance_06_harmonic_forward_consistency() {
    let start = Instant::now();
    let geometry =
        AcquisitionGeometry::with_uniform_grid(SupportCase::Interior, 1.0, None, 50, 0.001, 50)
            .unwrap();
    let phantom = BallPhantom::new(vec![Ball::new([0.5, 0.0, 0.0], 0.3, 1.0).unwrap()]).unwrap();
    let data = forward_transform(&phantom, &geometry);
    let analyzed = analyze(&data, 10).unwrap();
    let params =
        VolterraCaseParams::new(SupportCase::Interior, None, geometry.rho_grid.clone()).unwrap();

    let mut worst_rel: f64 = 0.0;
    for l in 0..=10u32 {
        let predicted = forward_apply(&params, l, |r| {
            phantom.harmonic_profile(l, 0, 1.0 - r).unwrap().re
        })
        .unwrap();
        let numeric = analyzed.coeff(l, 0);
        let norm: f64 = predicted.iter().map(|v| v * v).sum::<f64>().sqrt();
        let diff: f64 = predicted
            .iter()
            .zip(numeric)
            .map(|(p, c)| (c - p).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let rel = diff / norm;
        worst_rel = worst_rel.max(rel);
        assert!(rel <= 1e-2, "l = {l}: relative deviation {rel:.3e}");
    }
    // The phantom is axisymmetric about the polar axis, so m != 0 content is
    // pure quadrature noise.
    let scale = analyzed.max_abs();
    for l in 0..=10u32 {
        for m in 1..=(l as i32) {
            for c in analyzed.coeff(l, m) {
                assert!(c.norm() <= 1e-10 * scale, "(l,m)=({l},{m}): {c}");
            }
        }
    }
    report(
        "criterion 6: harmonic-domain forward consistency",
        start.elapsed(),
        Duration::from_secs(120),
        &format!("degrees 0..=10, worst relative deviation {worst_rel:.2e}"),
    );
}

fn interior_config_full() -> ReconstructionConfig {
    ReconstructionConfig {
        geometry: AcquisitionGeometry::with_uniform_grid(
            SupportCase::Interior,
            1.0,
            None,
            50,
            0.001,
            50,
        )
        .unwrap(),
        l_max: 25,
        tsvd: TsvdConfig::default(),
        noise_level: 0.0,
        seed: 20170401,
        output: OutputSpec {
            plane: SlicePlane::horizontal(),
            resolution: 100,
            extent: None,
        },
    }
}

/// Criterion 7: end-to-end interior reconstruction of the off-center ball at
/// production resolution; band-limited-truth slice error below 0.15 on the
/// trusted shell, and 5% multiplicative noise degrades it by at most 2x.
#[test]
fn acceptance_07_interior_end_to_end() {
    let start = Instant::now();
    let phantom = BallPhantom::new(vec![Ball::new([0.5, 0.0, 0.0], 0.3, 1.0).unwrap()]).unwrap();
    let clean_config = interior_config_full();
    let clean = reconstruct_phantom(&phantom, &clean_config).unwrap();
    let clean_err = clean.metrics.relative_l2_bandlimited.unwrap();
    assert!(
        clean_err <= 0.15,
        "noiseless band-limited error {clean_err:.4}"
    );

    let mut noisy_config = interior_config_full();
    noisy_config.noise_level = 0.05;
    let noisy = reconstruct_phantom(&phantom, &noisy_config).unwrap();
    let noisy_err = noisy.metrics.relative_l2_bandlimited.unwrap();
    assert!(
        noisy_err <= 2.0 * clean_err,
        "5% noise degraded the error by {:.2}x (from {clean_err:.4} to {noisy_err:.4})",
        noisy_err / clean_err
    );
    report(
        "criterion 7: interior end-to-end",
        start.elapsed(),
        Duration::from_secs(600),
        &format!(
            "clean {clean_err:.4}, noisy {noisy_err:.4} ({:.2}x)",
            noisy_err / clean_err
        ),
    );
}

/// Criterion 8: the exterior two-ball scenario completes and reports
/// per-degree condition numbers, the majority above 1e4 for l <= 25; the
/// artifact level relative to the interior case is reported, not thresholded.
#[test]
fn acceptance_08_exterior_two_ball() {
    let start = Instant::now();
    let phantom = BallPhantom::new(vec![
        Ball::new([-1.5, 0.0, 0.0], 0.2, 1.0).unwrap(),
        Ball::new([1.5, 0.0, 0.0], 0.3, 1.0).unwrap(),
    ])
    .unwrap();
    let config = ReconstructionConfig {
        geometry: AcquisitionGeometry::with_uniform_grid(
            SupportCase::Exterior,
            1.0,
            None,
            50,
            0.001,
            50,
        )
        .unwrap(),
        l_max: 25,
        tsvd: TsvdConfig::default(),
        noise_level: 0.0,
        seed: 20170401,
        output: OutputSpec {
            plane: SlicePlane::horizontal(),
            resolution: 100,
            extent: None,
        },
    };
    let result = reconstruct_phantom(&phantom, &config).unwrap();
    let degrees = &result.metrics.degrees;
    assert_eq!(degrees.len(), 26);
    let above = degrees.iter().filter(|d| d.condition > 1e4).count();
    assert!(
        above * 2 > degrees.len(),
        "only {above}/26 condition numbers exceed 1e4"
    );
    let exterior_err = result.metrics.relative_l2_bandlimited.unwrap();

    // Qualitative comparison against the interior benchmark (reported only).
    let interior_phantom =
        BallPhantom::new(vec![Ball::new([0.5, 0.0, 0.0], 0.3, 1.0).unwrap()]).unwrap();
    let interior_err = reconstruct_phantom(&interior_phantom, &interior_config_full())
        .unwrap()
        .metrics
        .relative_l2_bandlimited
        .unwrap();
    report(
        "criterion 8: exterior scope behavior",
        start.elapsed(),
        Duration::from_secs(600),
        &format!(
            "{above}/26 degrees with condition > 1e4; exterior error {exterior_err:.4} vs interior {interior_err:.4} ({:.1}x artifact growth)",
            exterior_err / interior_err
        ),
    );
}

/// Criterion 9: a phantom whose support contains the origin reconstructs
/// without error and the near-origin region is flagged untrusted; no
/// accuracy threshold is asserted there.
#[test]
fn acceptance_09_origin_inclusive_interior() {
    let start = Instant::now();
    let phantom = BallPhantom::new(vec![Ball::new([0.1, 0.0, 0.0], 0.3, 1.0).unwrap()]).unwrap();
    let config = interior_config_full();
    let result = reconstruct_phantom(&phantom, &config).unwrap();
    assert!(
        result.metrics.origin_flagged,
        "support through the origin must be flagged untrusted"
    );
    assert!(result.slice.values.iter().all(|v| v.is_finite()));
    assert!(result.metrics.relative_l2.unwrap().is_finite());
    report(
        "criterion 9: origin-inclusive phantom",
        start.elapsed(),
        Duration::from_secs(600),
        &format!(
            "completed, origin flagged, untrusted below r = {}",
            result.metrics.trusted_r_min
        ),
    );
}
