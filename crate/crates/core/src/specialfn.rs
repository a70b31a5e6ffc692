//! Special functions: Legendre and Gegenbauer polynomials, orthonormal
//! spherical harmonics, and the general-dimension angular kernels.
//!
//! Harmonics are fully orthonormal over the unit sphere with the
//! Condon-Shortley phase, so `conj(Y_l^m) = (-1)^m Y_l^{-m}` and the analysis
//! and synthesis passes of [`crate::shtransform`] are mutually inverse without
//! extra factors. Degrees are capped at `L_MAX_SUPPORTED`, where the upward
//! recurrences on normalized functions are stable in `f64`.

use num_complex::Complex64;

use crate::error::{SrtError, SrtResult};
use crate::support::SupportCase;

/// Largest harmonic degree supported by the recurrences in this module.
pub const L_MAX_SUPPORTED: u32 = 64;

/// Tolerance band around [-1, 1] inside which arguments are clamped.
const CLAMP_EPS: f64 = 1e-12;
/// Wider band used by kernel evaluations, where the argument is a quotient of
/// grid quantities and carries more rounding.
pub(crate) const KERNEL_CLAMP_EPS: f64 = 1e-9;

/// Degree/order pair of a spherical harmonic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HarmonicIndex {
    pub l: u32,
    pub m: i32,
}

impl HarmonicIndex {
    pub fn new(l: u32, m: i32) -> SrtResult<Self> {
        if m.unsigned_abs() > l {
            return Err(SrtError::Index { l, m });
        }
        Ok(HarmonicIndex { l, m })
    }
}

fn clamp_to_unit(x: f64, eps: f64, context: &'static str) -> SrtResult<f64> {
    if x.abs() <= 1.0 {
        Ok(x)
    } else if x.abs() <= 1.0 + eps {
        Ok(x.signum())
    } else {
        Err(SrtError::Domain {
            context,
            value: x,
            bounds: "[-1, 1]",
        })
    }
}

/// Legendre polynomial `P_l(x)` by the three-term recurrence.
///
/// `P_l(1) = 1` exactly; arguments within `1e-12` of the endpoints are
/// clamped, anything further out is a domain error.
pub fn legendre_p(l: u32, x: f64) -> SrtResult<f64> {
    let x = clamp_to_unit(x, CLAMP_EPS, "legendre_p")?;
    Ok(legendre_p_unchecked(l, x))
}

fn legendre_p_unchecked(l: u32, x: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => x,
        _ => {
            let mut prev = 1.0;
            let mut cur = x;
            for k in 1..l {
                let kf = k as f64;
                let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// All Legendre polynomials `P_0(x) .. P_{l_max}(x)` in one sweep.
pub fn legendre_p_sequence(l_max: u32, x: f64) -> SrtResult<Vec<f64>> {
    let x = clamp_to_unit(x, CLAMP_EPS, "legendre_p_sequence")?;
    let mut out = Vec::with_capacity(l_max as usize + 1);
    out.push(1.0);
    if l_max == 0 {
        return Ok(out);
    }
    out.push(x);
    for k in 1..l_max {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * out[k as usize] - kf * out[k as usize - 1]) / (kf + 1.0);
        out.push(next);
    }
    Ok(out)
}

/// Gegenbauer (ultraspherical) polynomial `C_l^nu(x)` by recurrence.
///
/// `C_0 = 1`, `C_1 = 2 nu x`,
/// `l C_l = 2 x (l + nu - 1) C_{l-1} - (l + 2 nu - 2) C_{l-2}`.
/// At `nu = 1/2` this reduces to the Legendre polynomial.
pub fn gegenbauer_c(l: u32, nu: f64, x: f64) -> SrtResult<f64> {
    assert!(nu > 0.0, "gegenbauer_c requires nu > 0, got {nu}");
    let x = clamp_to_unit(x, CLAMP_EPS, "gegenbauer_c")?;
    Ok(gegenbauer_c_unchecked(l, nu, x))
}

fn gegenbauer_c_unchecked(l: u32, nu: f64, x: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => 2.0 * nu * x,
        _ => {
            let mut prev = 1.0;
            let mut cur = 2.0 * nu * x;
            for k in 2..=l {
                let kf = k as f64;
                let next = (2.0 * x * (kf + nu - 1.0) * cur - (kf + 2.0 * nu - 2.0) * prev) / kf;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `C_l^nu(1) = binom(l + 2 nu - 1, l)`, the normalizing value in the
/// Funk-Hecke factor.
pub fn gegenbauer_c_at_one(l: u32, nu: f64) -> f64 {
    // Product form of the binomial coefficient; exact for nu = 1/2 (gives 1).
    let mut value = 1.0;
    for k in 1..=l {
        let kf = k as f64;
        value *= (kf + 2.0 * nu - 1.0) / kf;
    }
    value
}

/// Table of fully normalized associated Legendre functions
/// `N_l^m(cos alpha)` for all `0 <= m <= l <= l_max`, packed at
/// `l (l + 1) / 2 + m`. The normalization includes the `sqrt((2l+1)/(4 pi)
/// (l-m)!/(l+m)!)` factor and the Condon-Shortley phase, so
/// `Y_l^m = table[idx] * exp(i m beta)` for `m >= 0`.
pub fn normalized_assoc_legendre_table(l_max: u32, cos_alpha: f64) -> SrtResult<Vec<f64>> {
    let c = clamp_to_unit(cos_alpha, CLAMP_EPS, "normalized_assoc_legendre_table")?;
    let s = (1.0 - c * c).max(0.0).sqrt();
    let size = ((l_max + 1) * (l_max + 2) / 2) as usize;
    let mut table = vec![0.0; size];
    let idx = |l: u32, m: u32| (l * (l + 1) / 2 + m) as usize;

    table[idx(0, 0)] = (4.0 * std::f64::consts::PI).sqrt().recip();
    // Diagonal (sectoral) seed, then one off-diagonal step, then the l-upward
    // recurrence; all on normalized values so nothing overflows at l <= 64.
    for m in 1..=l_max {
        let mf = m as f64;
        table[idx(m, m)] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * table[idx(m - 1, m - 1)];
    }
    for m in 0..l_max {
        let mf = m as f64;
        table[idx(m + 1, m)] = (2.0 * mf + 3.0).sqrt() * c * table[idx(m, m)];
    }
    for m in 0..=l_max {
        let mf = m as f64;
        for l in (m + 2)..=l_max {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                .sqrt();
            table[idx(l, m)] = a * (c * table[idx(l - 1, m)] - b * table[idx(l - 2, m)]);
        }
    }
    Ok(table)
}

/// Orthonormal complex spherical harmonic `Y_l^m(alpha, beta)` with the
/// Condon-Shortley phase. `alpha` is the polar angle, `beta` the azimuth.
pub fn spherical_y(l: u32, m: i32, alpha: f64, beta: f64) -> SrtResult<Complex64> {
    if m.unsigned_abs() > l {
        return Err(SrtError::Index { l, m });
    }
    let table = normalized_assoc_legendre_table(l, alpha.cos())?;
    let ma = m.unsigned_abs();
    let plm = table[(l * (l + 1) / 2 + ma) as usize];
    let phase = Complex64::from_polar(1.0, ma as f64 * beta);
    let value = plm * phase;
    if m >= 0 {
        Ok(value)
    } else {
        // Y_l^{-m} = (-1)^m conj(Y_l^m)
        let sign = if ma % 2 == 0 { 1.0 } else { -1.0 };
        Ok(sign * value.conj())
    }
}

/// Surface measure of the unit sphere `S^{d}` in `R^{d+1}`.
pub fn unit_sphere_area(d: u32) -> f64 {
    // |S^d| = 2 pi^{(d+1)/2} / Gamma((d+1)/2), evaluated by the Gamma
    // recurrence from the half-integer or integer base case.
    let half = (d as f64 + 1.0) / 2.0;
    let mut gamma = if d % 2 == 1 {
        1.0
    } else {
        std::f64::consts::PI.sqrt()
    };
    let mut arg = if d % 2 == 1 { 1.0 } else { 0.5 };
    while arg + 1e-9 < half {
        gamma *= arg;
        arg += 1.0;
    }
    2.0 * std::f64::consts::PI.powf(half) / gamma
}

/// Angular kernel of the per-degree Volterra equation in dimension `n >= 3`.
///
/// For the support case `case` and degree `l`,
/// `K_l(rho, r) = rho^{n-2} |S^{n-2}| / C_l^{n/2-1}(1) * w(r)
///               * C_l^{n/2-1}(t) * (1 - t^2)^{(n-3)/2}`
/// with the density weight `w` and Gegenbauer argument `t` of the case; for
/// the combined case the leading power is `(R2 + 1 - rho)^{n-2}`. At `n = 3`
/// this agrees with [`crate::volterra::kernel_3d`].
pub fn general_kernel(
    n: u32,
    case: SupportCase,
    l: u32,
    rho: f64,
    r: f64,
    r2: Option<f64>,
) -> SrtResult<f64> {
    assert!(n >= 3, "general_kernel requires n >= 3, got {n}");
    let nu = n as f64 / 2.0 - 1.0;
    let (lead, weight, t) = kernel_parts(case, rho, r, r2)?;
    let t = clamp_to_unit(t, KERNEL_CLAMP_EPS, "general_kernel argument")?;
    let poly = gegenbauer_c_unchecked(l, nu, t) / gegenbauer_c_at_one(l, nu);
    let sin_pow = if n == 3 {
        1.0 // exponent zero, including the t = +-1 endpoints
    } else {
        (1.0 - t * t).max(0.0).powf((n as f64 - 3.0) / 2.0)
    };
    Ok(lead.powi(n as i32 - 2) * unit_sphere_area(n - 2) * weight * poly * sin_pow)
}

/// Leading radius, density weight and polynomial argument for each case.
pub(crate) fn kernel_parts(
    case: SupportCase,
    rho: f64,
    r: f64,
    r2: Option<f64>,
) -> SrtResult<(f64, f64, f64)> {
    match case {
        SupportCase::Exterior => {
            let w = r + 1.0;
            Ok((rho, w, (r * r + 2.0 * r - rho * rho + 2.0) / (2.0 * w)))
        }
        SupportCase::Interior => {
            let w = 1.0 - r;
            if w <= 0.0 {
                return Err(SrtError::Domain {
                    context: "interior kernel",
                    value: r,
                    bounds: "[0, 1)",
                });
            }
            Ok((rho, w, (r * r - 2.0 * r - rho * rho + 2.0) / (2.0 * w)))
        }
        SupportCase::InteriorExterior => {
            let r2 = r2
                .ok_or_else(|| SrtError::Geometry("interior-exterior kernel requires R2".into()))?;
            let w = r2 - r;
            if w <= 0.0 {
                return Err(SrtError::Domain {
                    context: "interior-exterior kernel",
                    value: r,
                    bounds: "[0, R2)",
                });
            }
            let lead = r2 + 1.0 - rho;
            Ok((lead, w, (w * w + 1.0 - lead * lead) / (2.0 * w)))
        }
    }
}
