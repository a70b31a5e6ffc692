//! Spherical-harmonic analysis and synthesis on the acquisition grid.
//!
//! Analysis uses the equiangular quadrature with polar weights
//! `a_j = (sqrt(2)/N) sin(pi j / 2N) sum_{p=0}^{N-1} sin((2p+1) pi j / 2N) / (2p+1)`
//! on the `2N x 2N` grid `alpha_j = pi j / 2N`, `beta_k = pi k / N`. These
//! weights satisfy `sum_j a_j f(alpha_j) = 2^{-1/2} int_0^pi f sin` exactly
//! for trigonometric polynomials up to degree `2N - 2`, so with the overall
//! constant `sqrt(2) pi / N` the rule returns exact orthonormal-basis
//! coefficients for band-limited data with `l_max <= N - 1`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{SrtError, SrtResult};
use crate::phantom::RadonData;
use crate::specialfn::normalized_assoc_legendre_table;

/// Per-degree/order radial profiles: complex vectors indexed by the radial
/// grid, for all `0 <= l <= l_max`, `|m| <= l`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicProfiles {
    pub l_max: u32,
    /// Radial grid the profiles are sampled on (data `rho` or solution `r`).
    pub radii: Vec<f64>,
    coeffs: Vec<Vec<Complex64>>,
}

impl HarmonicProfiles {
    pub fn zeros(l_max: u32, radii: Vec<f64>) -> Self {
        let n_lm = ((l_max + 1) * (l_max + 1)) as usize;
        let n_r = radii.len();
        HarmonicProfiles {
            l_max,
            radii,
            coeffs: vec![vec![Complex64::new(0.0, 0.0); n_r]; n_lm],
        }
    }

    #[inline]
    fn slot(&self, l: u32, m: i32) -> usize {
        debug_assert!(l <= self.l_max && m.unsigned_abs() <= l);
        (l * l) as usize + (m + l as i32) as usize
    }

    pub fn coeff(&self, l: u32, m: i32) -> &[Complex64] {
        &self.coeffs[self.slot(l, m)]
    }

    pub fn coeff_mut(&mut self, l: u32, m: i32) -> &mut Vec<Complex64> {
        let s = self.slot(l, m);
        &mut self.coeffs[s]
    }

    pub fn indices(&self) -> impl Iterator<Item = (u32, i32)> + '_ {
        (0..=self.l_max).flat_map(|l| (-(l as i32)..=(l as i32)).map(move |m| (l, m)))
    }

    /// Largest coefficient magnitude, used to scale residual checks.
    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .flat_map(|v| v.iter().map(|c| c.norm()))
            .fold(0.0, f64::max)
    }

    /// Largest deviation from `coeff(l,-m) = (-1)^m conj(coeff(l,m))`.
    pub fn hermitian_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for l in 0..=self.l_max {
            for m in 1..=(l as i32) {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                for (cp, cn) in self.coeff(l, m).iter().zip(self.coeff(l, -m)) {
                    worst = worst.max((sign * cp.conj() - cn).norm());
                }
            }
        }
        worst
    }
}

/// Polar quadrature weights `a_j`, `j = 0 .. 2N-1`.
pub fn quadrature_weights(n: usize) -> Vec<f64> {
    assert!(n >= 2, "quadrature_weights requires N >= 2");
    let nf = n as f64;
    (0..2 * n)
        .map(|j| {
            let theta = std::f64::consts::PI * j as f64 / (2.0 * nf);
            let mut inner = 0.0;
            for p in 0..n {
                let q = (2 * p + 1) as f64;
                inner += (q * theta).sin() / q;
            }
            std::f64::consts::SQRT_2 / nf * theta.sin() * inner
        })
        .collect()
}

/// Overall analysis constant; makes the discrete rule reproduce
/// `<g, Y_l^m>_{L^2(S^2)}` exactly on band-limited data.
fn analysis_constant(n: usize) -> f64 {
    std::f64::consts::SQRT_2 * std::f64::consts::PI / n as f64
}

/// Forward harmonic analysis of Radon data into per-(l, m) radial profiles.
///
/// `coeffs[l][m][i] = c_N sum_{j,k} a_j g(rho_i, alpha_j, beta_k)
/// conj(Y_l^m(alpha_j, beta_k))`. Requires `l_max <= N - 1`.
pub fn analyze(data: &RadonData, l_max: u32) -> SrtResult<HarmonicProfiles> {
    let n = data.geometry.n;
    if l_max as usize >= n {
        return Err(SrtError::Resolution { l_max, n });
    }
    let na = 2 * n;
    let nrho = data.geometry.rho_grid.len();
    let weights = quadrature_weights(n);
    let constant = analysis_constant(n);
    let alphas = data.geometry.alphas();
    let betas = data.geometry.betas();

    // Normalized associated Legendre values per polar node, packed (l, m>=0).
    let tables: Vec<Vec<f64>> = alphas
        .iter()
        .map(|a| normalized_assoc_legendre_table(l_max, a.cos()))
        .collect::<SrtResult<_>>()?;
    // exp(-i m beta_k) for m = 0..l_max.
    let phases: Vec<Vec<Complex64>> = betas
        .iter()
        .map(|b| {
            (0..=l_max as usize)
                .map(|m| Complex64::from_polar(1.0, -(m as f64) * b))
                .collect()
        })
        .collect();

    let mut out = HarmonicProfiles::zeros(l_max, data.geometry.rho_grid.clone());

    // For each radius: beta-DFT first, then the weighted polar sums. The
    // m >= 0 coefficients determine m < 0 through the conjugation identity,
    // exactly as conj(Y) would.
    let per_radius: Vec<Vec<Complex64>> = (0..nrho)
        .into_par_iter()
        .map(|i| {
            let mut fourier = vec![Complex64::new(0.0, 0.0); na * (l_max as usize + 1)];
            for j in 0..na {
                let row = &data.values[(i * na + j) * na..(i * na + j + 1) * na];
                for m in 0..=l_max as usize {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (k, &g) in row.iter().enumerate() {
                        acc += g * phases[k][m];
                    }
                    fourier[j * (l_max as usize + 1) + m] = acc;
                }
            }
            let mut coeffs = vec![Complex64::new(0.0, 0.0); ((l_max + 1) * (l_max + 1)) as usize];
            for l in 0..=l_max {
                for m in 0..=l as usize {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..na {
                        let plm = tables[j][(l * (l + 1) / 2) as usize + m];
                        acc += weights[j] * plm * fourier[j * (l_max as usize + 1) + m];
                    }
                    acc *= constant;
                    let slot_pos = (l * l) as usize + (m as i32 + l as i32) as usize;
                    coeffs[slot_pos] = acc;
                    if m > 0 {
                        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                        let slot_neg = (l * l) as usize + (l as i32 - m as i32) as usize;
                        coeffs[slot_neg] = sign * acc.conj();
                    }
                }
            }
            coeffs
        })
        .collect();

    for (i, coeffs) in per_radius.into_iter().enumerate() {
        for (slot, value) in coeffs.into_iter().enumerate() {
            out.coeffs[slot][i] = value;
        }
    }
    Ok(out)
}

/// Hermitian tolerance accepted by [`synthesize`].
const SYNTHESIS_SYMMETRY_TOL: f64 = 1e-6;

/// Evaluates the truncated harmonic sum at the given angular points for every
/// radial index. Profiles must be Hermitian-symmetric so the sum is real; the
/// imaginary residue is checked and discarded.
pub fn synthesize(
    profiles: &HarmonicProfiles,
    angular_points: &[(f64, f64)],
) -> SrtResult<Vec<Vec<f64>>> {
    let scale = profiles.max_abs();
    let residual = profiles.hermitian_residual();
    if residual > SYNTHESIS_SYMMETRY_TOL * scale.max(1.0) {
        return Err(SrtError::Symmetry {
            residual,
            tolerance: SYNTHESIS_SYMMETRY_TOL,
        });
    }
    let l_max = profiles.l_max;
    let n_r = profiles.radii.len();

    let columns: Vec<Vec<f64>> = angular_points
        .par_iter()
        .map(|&(alpha, beta)| {
            let table = normalized_assoc_legendre_table(l_max, alpha.cos())?;
            let mut column = vec![0.0; n_r];
            for l in 0..=l_max {
                // m = 0 term plus twice the real part of the m > 0 terms.
                let p0 = table[(l * (l + 1) / 2) as usize];
                let c0 = profiles.coeff(l, 0);
                for (i, v) in column.iter_mut().enumerate() {
                    *v += p0 * c0[i].re;
                }
                for m in 1..=l as i32 {
                    let plm = table[(l * (l + 1) / 2) as usize + m as usize];
                    let phase = Complex64::from_polar(1.0, m as f64 * beta);
                    let ylm = plm * phase;
                    let cm = profiles.coeff(l, m);
                    for (i, v) in column.iter_mut().enumerate() {
                        *v += 2.0 * (cm[i] * ylm).re;
                    }
                }
            }
            Ok(column)
        })
        .collect::<SrtResult<_>>()?;

    let mut field = vec![vec![0.0; angular_points.len()]; n_r];
    for (p, column) in columns.into_iter().enumerate() {
        for (i, v) in column.into_iter().enumerate() {
            field[i][p] = v;
        }
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{AcquisitionGeometry, RadonData};
    use crate::specialfn::spherical_y;
    use crate::support::SupportCase;
    use std::f64::consts::PI;

    fn geometry(n: usize, nrho: usize) -> AcquisitionGeometry {
        AcquisitionGeometry::with_uniform_grid(SupportCase::Interior, 1.0, None, nrho, 0.001, n)
            .unwrap()
    }

    fn fill(geometry: AcquisitionGeometry, f: impl Fn(usize, f64, f64) -> f64) -> RadonData {
        let alphas = geometry.alphas();
        let betas = geometry.betas();
        let mut data = RadonData::zeros(geometry);
        for i in 0..data.geometry.rho_grid.len() {
            for (j, &a) in alphas.iter().enumerate() {
                for (k, &b) in betas.iter().enumerate() {
                    let idx = data.idx(i, j, k);
                    data.values[idx] = f(i, a, b);
                }
            }
        }
        data
    }

    #[test]
    fn weights_basic_properties() {
        let n = 50;
        let w = quadrature_weights(n);
        assert_eq!(w.len(), 2 * n);
        assert_eq!(w[0], 0.0);
        // The weight sum is exactly sqrt(2); scaled by sqrt(2) it reproduces
        // the integral of sin over [0, pi].
        let sum: f64 = w.iter().sum();
        assert!((sum - std::f64::consts::SQRT_2).abs() < 1e-12, "{sum}");
        assert!((std::f64::consts::SQRT_2 * sum - 2.0).abs() < 1e-3);
    }

    #[test]
    fn weights_symmetry() {
        let n = 8;
        let w = quadrature_weights(n);
        for j in 1..2 * n {
            assert!((w[j] - w[2 * n - j]).abs() < 1e-15, "j = {j}");
        }
    }

    #[test]
    fn weights_integrate_band_limited() {
        // sum_j a_j f(alpha_j) = 2^{-1/2} int f sin for cos-polynomials.
        let n = 10;
        let w = quadrature_weights(n);
        // f = cos^2: int cos^2 sin = 2/3.
        let discrete: f64 = w
            .iter()
            .enumerate()
            .map(|(j, &a)| {
                let t = (PI * j as f64 / (2.0 * n as f64)).cos();
                a * t * t
            })
            .sum();
        assert!((std::f64::consts::SQRT_2 * discrete - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn analyze_constant_field() {
        let data = fill(geometry(16, 3), |_, _, _| 1.0);
        let profiles = analyze(&data, 8).unwrap();
        let expect = (4.0 * PI).sqrt();
        for c in profiles.coeff(0, 0) {
            assert!((c.re - expect).abs() < 1e-8, "{c}");
            assert!(c.im.abs() < 1e-10);
        }
        for (l, m) in profiles.indices() {
            if l == 0 {
                continue;
            }
            for c in profiles.coeff(l, m) {
                assert!(c.norm() <= 1e-8, "(l,m)=({l},{m}): {c}");
            }
        }
    }

    #[test]
    fn analyze_isolates_single_harmonic() {
        let data = fill(geometry(16, 2), |_, a, b| {
            spherical_y(3, 2, a, b).unwrap().re
        });
        let profiles = analyze(&data, 8).unwrap();
        // Re Y_3^2 = (Y_3^2 + conj(Y_3^2))/2 = (Y_3^2 + Y_3^{-2})/2.
        for c in profiles.coeff(3, 2) {
            assert!((c.re - 0.5).abs() < 1e-8 && c.im.abs() < 1e-8, "{c}");
        }
        for c in profiles.coeff(3, -2) {
            assert!((c.re - 0.5).abs() < 1e-8 && c.im.abs() < 1e-8, "{c}");
        }
        for (l, m) in profiles.indices() {
            if l == 3 && m.abs() == 2 {
                continue;
            }
            for c in profiles.coeff(l, m) {
                assert!(c.norm() <= 1e-8, "(l,m)=({l},{m})");
            }
        }
    }

    #[test]
    fn analyze_complex_coefficient_orientation() {
        // Asymmetric input pins the phase convention: for
        // g = Re(c Y_3^2) the coefficients are c/2 and conj(c)/2; a
        // conjugation slip in the azimuthal transform would swap them.
        let c = Complex64::new(0.3, 0.7);
        let data = fill(geometry(16, 2), |_, a, b| {
            (c * spherical_y(3, 2, a, b).unwrap()).re
        });
        let profiles = analyze(&data, 8).unwrap();
        let got = profiles.coeff(3, 2)[0];
        assert!((got - c / 2.0).norm() < 1e-8, "{got} vs {}", c / 2.0);
        let got = profiles.coeff(3, -2)[0];
        assert!((got - c.conj() / 2.0).norm() < 1e-8);
    }

    #[test]
    fn analyze_zero_data() {
        let profiles = analyze(&RadonData::zeros(geometry(8, 2)), 4).unwrap();
        assert_eq!(profiles.max_abs(), 0.0);
    }

    #[test]
    fn analyze_resolution_guard() {
        let data = RadonData::zeros(geometry(8, 2));
        assert!(matches!(
            analyze(&data, 8),
            Err(SrtError::Resolution { .. })
        ));
        assert!(analyze(&data, 7).is_ok());
    }

    #[test]
    fn analyze_hermitian_and_linear() {
        let d1 = fill(geometry(8, 2), |i, a, b| {
            (1.0 + i as f64) * (a.sin() * b.cos()).powi(2)
        });
        let d2 = fill(geometry(8, 2), |_, a, b| {
            a.cos() + 0.3 * (2.0 * b).sin() * a.sin().powi(2)
        });
        let p1 = analyze(&d1, 7).unwrap();
        let p2 = analyze(&d2, 7).unwrap();
        assert!(p1.hermitian_residual() <= 1e-10 * p1.max_abs().max(1.0));

        let mut combo = d1.clone();
        for (v, w) in combo.values.iter_mut().zip(&d2.values) {
            *v = 2.0 * *v - 0.5 * w;
        }
        let pc = analyze(&combo, 7).unwrap();
        for (l, m) in pc.indices() {
            for i in 0..pc.radii.len() {
                let expect = 2.0 * p1.coeff(l, m)[i] - 0.5 * p2.coeff(l, m)[i];
                let got = pc.coeff(l, m)[i];
                assert!(
                    (got - expect).norm() <= 1e-12 * expect.norm().max(1.0),
                    "(l,m)=({l},{m})"
                );
            }
        }
    }

    #[test]
    fn synthesize_constant_profile() {
        let mut profiles = HarmonicProfiles::zeros(2, vec![0.3, 0.6]);
        profiles.coeff_mut(0, 0)[0] = Complex64::new((4.0 * PI).sqrt(), 0.0);
        profiles.coeff_mut(0, 0)[1] = Complex64::new((4.0 * PI).sqrt(), 0.0);
        let field = synthesize(&profiles, &[(0.2, 1.0), (1.3, 4.4), (2.9, 0.1)]).unwrap();
        for row in &field {
            for v in row {
                assert!((v - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn synthesize_zero_profiles() {
        let profiles = HarmonicProfiles::zeros(3, vec![0.5]);
        let field = synthesize(&profiles, &[(1.0, 1.0)]).unwrap();
        assert_eq!(field, vec![vec![0.0]]);
    }

    #[test]
    fn synthesize_rejects_asymmetric_profiles() {
        let mut profiles = HarmonicProfiles::zeros(1, vec![0.5]);
        profiles.coeff_mut(1, 1)[0] = Complex64::new(1.0, 0.0);
        // Missing the matching (1, -1) partner.
        assert!(matches!(
            synthesize(&profiles, &[(0.3, 0.3)]),
            Err(SrtError::Symmetry { .. })
        ));
    }

    #[test]
    fn round_trip_band_limited() {
        // analyze . synthesize = identity on band-limited data, N = 16,
        // l_max = 8, checked in sup norm.
        let n = 16;
        let geometry = geometry(n, 2);
        let alphas = geometry.alphas();
        let betas = geometry.betas();
        // Hermitian bundle of harmonics up to degree 8.
        let truth = |a: f64, b: f64| {
            1.0 + 0.7 * spherical_y(3, 0, a, b).unwrap().re
                + 1.1 * (spherical_y(5, 2, a, b).unwrap() * Complex64::new(0.4, -0.8)).re
                + 0.3 * (spherical_y(8, 7, a, b).unwrap() * Complex64::new(-0.2, 0.5)).re
        };
        let data = fill(geometry.clone(), |_, a, b| truth(a, b));
        let profiles = analyze(&data, 8).unwrap();
        let points: Vec<(f64, f64)> = alphas
            .iter()
            .flat_map(|&a| betas.iter().map(move |&b| (a, b)))
            .collect();
        let field = synthesize(&profiles, &points).unwrap();
        let mut worst: f64 = 0.0;
        for (p, &(a, b)) in points.iter().enumerate() {
            worst = worst.max((field[0][p] - truth(a, b)).abs());
        }
        assert!(worst <= 1e-6, "round-trip sup error {worst}");
    }

    #[test]
    fn grid_orthonormality() {
        // The weighted grid sum reproduces <Y_l^m, Y_l'^m'> = delta for
        // degrees resolvable at this N.
        let n = 8;
        let w = quadrature_weights(n);
        let constant = analysis_constant(n);
        let geom = geometry(n, 2);
        let alphas = geom.alphas();
        let betas = geom.betas();
        for (l, m) in [(0u32, 0i32), (2, 1), (4, -3), (4, 4)] {
            for (lp, mp) in [(0u32, 0i32), (2, 1), (3, 0), (4, 4)] {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, &a) in alphas.iter().enumerate() {
                    for &b in &betas {
                        acc += w[j]
                            * spherical_y(l, m, a, b).unwrap()
                            * spherical_y(lp, mp, a, b).unwrap().conj();
                    }
                }
                acc *= constant;
                let expect = if (l, m) == (lp, mp) { 1.0 } else { 0.0 };
                assert!(
                    (acc.re - expect).abs() < 1e-6 && acc.im.abs() < 1e-6,
                    "({l},{m}) vs ({lp},{mp}): {acc}"
                );
            }
        }
    }
}
