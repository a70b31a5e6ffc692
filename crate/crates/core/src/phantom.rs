//! Ball phantoms, the acquisition geometry, and the exact forward model.
//!
//! Radon data for a union of disjoint balls is analytic: the integral of a
//! characteristic function over an integration sphere is the surface area of
//! a spherical cap, read off from the plane through the sphere/ball
//! intersection circle. The angular parametrization follows the polar-axis
//! convention used throughout the crate: a direction with polar angle `alpha`
//! (measured from the x-axis) and azimuth `beta` has Cartesian coordinates
//! `(cos alpha, sin alpha cos beta, sin alpha sin beta)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{SrtError, SrtResult};
use crate::rng::CounterRng;
use crate::specialfn::{legendre_p_sequence, spherical_y};
use crate::support::SupportCase;

/// Homogeneous ball with a constant density amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: [f64; 3],
    pub radius: f64,
    pub amplitude: f64,
}

impl Ball {
    pub fn new(center: [f64; 3], radius: f64, amplitude: f64) -> SrtResult<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(SrtError::Phantom(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        if !amplitude.is_finite() || center.iter().any(|c| !c.is_finite()) {
            return Err(SrtError::Phantom(
                "ball center/amplitude must be finite".into(),
            ));
        }
        Ok(Ball {
            center,
            radius,
            amplitude,
        })
    }

    /// Closed-ball membership test.
    pub fn contains(&self, point: [f64; 3]) -> bool {
        dist(self.center, point) <= self.radius
    }
}

/// Union of pairwise disjoint balls; the ground-truth image.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BallPhantom {
    balls: Vec<Ball>,
}

impl BallPhantom {
    /// Builds a phantom, rejecting any pair of balls that touch or overlap.
    pub fn new(balls: Vec<Ball>) -> SrtResult<Self> {
        for i in 0..balls.len() {
            for j in (i + 1)..balls.len() {
                let d = dist(balls[i].center, balls[j].center);
                if d <= balls[i].radius + balls[j].radius {
                    return Err(SrtError::Phantom(format!(
                        "balls {i} and {j} are not disjoint (center distance {d:.6} <= radius sum {:.6})",
                        balls[i].radius + balls[j].radius
                    )));
                }
            }
        }
        Ok(BallPhantom { balls })
    }

    pub fn empty() -> Self {
        BallPhantom { balls: Vec::new() }
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    /// Scales lengths by `1/r`: the phantom seen in units of the acquisition
    /// radius. Amplitudes are unchanged.
    pub fn rescaled(&self, r: f64) -> Self {
        BallPhantom {
            balls: self
                .balls
                .iter()
                .map(|b| Ball {
                    center: [b.center[0] / r, b.center[1] / r, b.center[2] / r],
                    radius: b.radius / r,
                    amplitude: b.amplitude,
                })
                .collect(),
        }
    }

    /// Exact spherical-harmonic radial profile `f_l^m(r)` of the phantom.
    ///
    /// Each ball is zonal about its own center direction, so its coefficients
    /// follow from `int_{t0}^{1} P_l(t) dt = (P_{l-1} - P_{l+1})(t0)/(2l+1)`
    /// and the addition theorem; balls centered at the origin contribute to
    /// `l = 0` only.
    pub fn harmonic_profile(&self, l: u32, m: i32, r: f64) -> SrtResult<Complex64> {
        if m.unsigned_abs() > l {
            return Err(SrtError::Index { l, m });
        }
        let sqrt_4pi = (4.0 * std::f64::consts::PI).sqrt();
        let mut total = Complex64::new(0.0, 0.0);
        for ball in &self.balls {
            let s = norm(ball.center);
            if r <= 0.0 {
                // The r = 0 shell degenerates to a point; profiles are only
                // sampled at r > 0 elsewhere, keep the zonal limit simple.
                if l == 0 && ball.contains([0.0, 0.0, 0.0]) {
                    total += Complex64::new(ball.amplitude * sqrt_4pi, 0.0);
                }
                continue;
            }
            if s == 0.0 {
                if l == 0 && r <= ball.radius {
                    total += Complex64::new(ball.amplitude * sqrt_4pi, 0.0);
                }
                continue;
            }
            // Shell of radius r intersects the ball where cos(angle from the
            // ball axis) >= t0.
            let t0 = (r * r + s * s - ball.radius * ball.radius) / (2.0 * r * s);
            if t0 >= 1.0 {
                continue;
            }
            if t0 <= -1.0 {
                if l == 0 {
                    total += Complex64::new(ball.amplitude * sqrt_4pi, 0.0);
                }
                continue;
            }
            let integral = if l == 0 {
                1.0 - t0
            } else {
                let p = legendre_p_sequence(l + 1, t0)?;
                (p[(l - 1) as usize] - p[(l + 1) as usize]) / (2.0 * l as f64 + 1.0)
            };
            let axis_alpha = (ball.center[0] / s).clamp(-1.0, 1.0).acos();
            let axis_beta = ball.center[2].atan2(ball.center[1]);
            let y_axis = spherical_y(l, m, axis_alpha, axis_beta)?;
            total += ball.amplitude * 2.0 * std::f64::consts::PI * integral * y_axis.conj();
        }
        Ok(total)
    }
}

/// Acquisition grid: case tag, acquisition radius, physical data radii and
/// angular resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionGeometry {
    pub case: SupportCase,
    /// Acquisition sphere radius.
    pub r: f64,
    /// Outer support radius (combined case only).
    pub r2: Option<f64>,
    /// Strictly increasing physical radii of the integration spheres.
    pub rho_grid: Vec<f64>,
    /// Angular half-resolution; the grid is `2N x 2N` with
    /// `alpha_j = pi j / (2N)`, `beta_k = pi k / N`.
    pub n: usize,
}

impl AcquisitionGeometry {
    pub fn new(
        case: SupportCase,
        r: f64,
        r2: Option<f64>,
        rho_grid: Vec<f64>,
        n: usize,
    ) -> SrtResult<Self> {
        if !(r > 0.0) {
            return Err(SrtError::Geometry(format!(
                "acquisition radius must be positive, got {r}"
            )));
        }
        if n < 2 {
            return Err(SrtError::Geometry(format!(
                "angular half-resolution N must be >= 2, got {n}"
            )));
        }
        if rho_grid.len() < 2 {
            return Err(SrtError::Geometry(
                "rho grid needs at least two radii".into(),
            ));
        }
        if rho_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SrtError::Geometry(
                "rho grid must be strictly increasing".into(),
            ));
        }
        let lo = rho_grid[0];
        let hi = *rho_grid.last().unwrap();
        match case {
            SupportCase::Interior => {
                if lo <= 0.0 || hi >= r {
                    return Err(SrtError::Geometry(format!(
                        "interior case requires 0 < rho < R = {r}, got [{lo}, {hi}]"
                    )));
                }
            }
            SupportCase::Exterior => {
                if lo <= 0.0 || hi >= 2.0 * r {
                    return Err(SrtError::Geometry(format!(
                        "exterior case requires 0 < rho < 2R = {}, got [{lo}, {hi}]",
                        2.0 * r
                    )));
                }
            }
            SupportCase::InteriorExterior => {
                let r2 = r2.ok_or_else(|| {
                    SrtError::Geometry("interior-exterior case requires an outer radius R2".into())
                })?;
                if r2 <= 2.0 * r {
                    return Err(SrtError::Geometry(format!(
                        "interior-exterior case requires R2 > 2R (R2 = {r2}, R = {r})"
                    )));
                }
                // After the change of variable rho_hat = R2 + R - rho the grid
                // must land in (0, 2R).
                if lo <= r2 - r || hi >= r2 + r {
                    return Err(SrtError::Geometry(format!(
                        "interior-exterior case requires R2 - R < rho < R2 + R, got [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(AcquisitionGeometry {
            case,
            r,
            r2,
            rho_grid,
            n,
        })
    }

    /// Uniform grid of `points` radii between the case defaults
    /// `[margin * R, (case max - margin) * R]`.
    pub fn with_uniform_grid(
        case: SupportCase,
        r: f64,
        r2: Option<f64>,
        points: usize,
        margin: f64,
        n: usize,
    ) -> SrtResult<Self> {
        if points < 2 {
            return Err(SrtError::Geometry("need at least two radial points".into()));
        }
        if !(margin > 0.0) {
            return Err(SrtError::Geometry("radial margin must be positive".into()));
        }
        let (lo, hi) = match case {
            SupportCase::Interior | SupportCase::Exterior => (margin * r, (1.0 - margin) * r),
            SupportCase::InteriorExterior => {
                let r2 = r2.ok_or_else(|| {
                    SrtError::Geometry("interior-exterior case requires an outer radius R2".into())
                })?;
                (r2 - r + margin * r, r2 + r - margin * r)
            }
        };
        Self::from_bounds(case, r, r2, lo, hi, points, n)
    }

    pub fn from_bounds(
        case: SupportCase,
        r: f64,
        r2: Option<f64>,
        lo: f64,
        hi: f64,
        points: usize,
        n: usize,
    ) -> SrtResult<Self> {
        if !(hi > lo) {
            return Err(SrtError::Geometry(format!(
                "empty radial range [{lo}, {hi}]"
            )));
        }
        let step = (hi - lo) / (points as f64 - 1.0);
        let grid = (0..points).map(|i| lo + step * i as f64).collect();
        Self::new(case, r, r2, grid, n)
    }

    pub fn alphas(&self) -> Vec<f64> {
        (0..2 * self.n)
            .map(|j| std::f64::consts::PI * j as f64 / (2.0 * self.n as f64))
            .collect()
    }

    pub fn betas(&self) -> Vec<f64> {
        (0..2 * self.n)
            .map(|k| std::f64::consts::PI * k as f64 / self.n as f64)
            .collect()
    }

    /// Unit direction of the grid node `(alpha, beta)`.
    pub fn direction(alpha: f64, beta: f64) -> [f64; 3] {
        [
            alpha.cos(),
            alpha.sin() * beta.cos(),
            alpha.sin() * beta.sin(),
        ]
    }

    /// Transducer position for the grid node.
    pub fn center(&self, alpha: f64, beta: f64) -> [f64; 3] {
        let d = Self::direction(alpha, beta);
        [self.r * d[0], self.r * d[1], self.r * d[2]]
    }

    /// Checks that the phantom support is admissible for the case; the error
    /// names the first offending ball.
    pub fn validate_phantom(&self, phantom: &BallPhantom) -> SrtResult<()> {
        for (i, ball) in phantom.balls().iter().enumerate() {
            let s = norm(ball.center);
            match self.case {
                SupportCase::Interior => {
                    if s + ball.radius >= self.r {
                        return Err(SrtError::Geometry(format!(
                            "ball {i} (center distance {s:.4}, radius {:.4}) is not strictly inside the acquisition sphere R = {}",
                            ball.radius, self.r
                        )));
                    }
                }
                SupportCase::Exterior => {
                    if s - ball.radius <= self.r {
                        return Err(SrtError::Geometry(format!(
                            "ball {i} (center distance {s:.4}, radius {:.4}) is not strictly outside the acquisition sphere R = {}",
                            ball.radius, self.r
                        )));
                    }
                    if s + ball.radius >= 3.0 * self.r {
                        return Err(SrtError::Geometry(format!(
                            "ball {i} extends beyond 3R = {} where exterior data cannot see it",
                            3.0 * self.r
                        )));
                    }
                }
                SupportCase::InteriorExterior => {
                    let r2 = self.r2.expect("validated at construction");
                    if s + ball.radius >= r2 {
                        return Err(SrtError::Geometry(format!(
                            "ball {i} extends beyond the outer support radius R2 = {r2}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Sampled Radon data `g(rho_i, alpha_j, beta_k)` on the acquisition grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadonData {
    pub geometry: AcquisitionGeometry,
    /// Row-major `[i][j][k]` with `j`, `k` running over the `2N` angles.
    pub values: Vec<f64>,
}

impl RadonData {
    pub fn zeros(geometry: AcquisitionGeometry) -> Self {
        let len = geometry.rho_grid.len() * 4 * geometry.n * geometry.n;
        RadonData {
            geometry,
            values: vec![0.0; len],
        }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        let na = 2 * self.geometry.n;
        (i * na + j) * na + k
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.idx(i, j, k)]
    }
}

/// Surface area of `S(center, rho) ∩ ball`, times the ball amplitude.
///
/// The intersection circle lies in the plane at signed distance
/// `s = (rho^2 - a^2 + Z) / (2 sqrt(Z))` from the sphere center toward the
/// ball center (`Z` = squared center distance), giving cap area
/// `2 pi rho (rho - s)`. The sign matters: for balls wider than the
/// integration sphere the cap exceeds a hemisphere and `s < 0`. Degenerate
/// configurations (disjoint, containment, concentric) are resolved before the
/// general branch so the `sqrt(Z)` division never sees zero.
pub fn cap_area(center: [f64; 3], rho: f64, ball: &Ball) -> f64 {
    assert!(rho > 0.0, "cap_area requires rho > 0");
    let full_sphere = 4.0 * std::f64::consts::PI * rho * rho * ball.amplitude;
    let d = dist(center, ball.center);
    if d == 0.0 {
        return if rho < ball.radius { full_sphere } else { 0.0 };
    }
    if d >= rho + ball.radius {
        return 0.0;
    }
    if d <= (rho - ball.radius).abs() {
        // One object contains the other: full sphere inside the ball, or the
        // ball strictly inside the integration sphere (no surface overlap).
        return if rho < ball.radius { full_sphere } else { 0.0 };
    }
    let z = d * d;
    let s = (rho * rho - ball.radius * ball.radius + z) / (2.0 * d);
    let area = 2.0 * std::f64::consts::PI * rho * (rho - s);
    ball.amplitude * area.clamp(0.0, 4.0 * std::f64::consts::PI * rho * rho)
}

/// Exact Radon data of a ball phantom on the acquisition grid.
pub fn forward_transform(phantom: &BallPhantom, geometry: &AcquisitionGeometry) -> RadonData {
    let alphas = geometry.alphas();
    let betas = geometry.betas();
    let na = 2 * geometry.n;
    let nrho = geometry.rho_grid.len();
    let mut values = vec![0.0; nrho * na * na];

    values
        .par_chunks_mut(na * na)
        .enumerate()
        .for_each(|(i, plane)| {
            let rho = geometry.rho_grid[i];
            for (j, &alpha) in alphas.iter().enumerate() {
                for (k, &beta) in betas.iter().enumerate() {
                    let c = geometry.center(alpha, beta);
                    let mut g = 0.0;
                    for ball in phantom.balls() {
                        g += cap_area(c, rho, ball);
                    }
                    plane[j * na + k] = g;
                }
            }
        });

    RadonData {
        geometry: geometry.clone(),
        values,
    }
}

/// Multiplicative Gaussian noise: `g -> g (1 + level xi)` with `xi` standard
/// normal drawn per entry from the counter-based generator. `level = 0`
/// returns the input unchanged, bit for bit.
pub fn add_noise(data: &RadonData, level: f64, seed: u64) -> RadonData {
    assert!(level >= 0.0, "noise level must be non-negative");
    if level == 0.0 {
        return data.clone();
    }
    let rng = CounterRng::new(seed);
    let values = data
        .values
        .iter()
        .enumerate()
        .map(|(idx, &v)| v * (1.0 + level * rng.normal(idx as u64)))
        .collect();
    RadonData {
        geometry: data.geometry.clone(),
        values,
    }
}

/// Ground-truth density at a point: the amplitude of the (at most one)
/// closed ball containing it.
pub fn eval_phantom(phantom: &BallPhantom, point: [f64; 3]) -> f64 {
    phantom
        .balls()
        .iter()
        .filter(|b| b.contains(point))
        .map(|b| b.amplitude)
        .sum()
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

fn norm(a: [f64; 3]) -> f64 {
    dist(a, [0.0; 3])
}
