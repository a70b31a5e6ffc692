//! Shared test oracles, independent of the implementation paths they check.

use srt_core::rng::CounterRng;
use srt_core::Ball;

/// Monte Carlo surface integration of the ball indicator over the sphere
/// `S(center, rho)`: an independent estimate of the cap area with its
/// standard error.
pub fn mc_cap_area(center: [f64; 3], rho: f64, ball: &Ball, samples: u64, seed: u64) -> (f64, f64) {
    let rng = CounterRng::new(seed);
    let mut hits = 0u64;
    for i in 0..samples {
        // Uniform direction: z uniform in [-1, 1], azimuth uniform.
        let z = 1.0 - 2.0 * rng.uniform(2 * i);
        let phi = 2.0 * std::f64::consts::PI * rng.uniform(2 * i + 1);
        let s = (1.0 - z * z).max(0.0).sqrt();
        let p = [
            center[0] + rho * s * phi.cos(),
            center[1] + rho * s * phi.sin(),
            center[2] + rho * z,
        ];
        if ball.contains(p) {
            hits += 1;
        }
    }
    let sphere_area = 4.0 * std::f64::consts::PI * rho * rho;
    let p_hat = hits as f64 / samples as f64;
    let estimate = sphere_area * p_hat * ball.amplitude;
    let se = sphere_area * (p_hat * (1.0 - p_hat) / samples as f64).sqrt() * ball.amplitude.abs();
    (estimate, se)
}
