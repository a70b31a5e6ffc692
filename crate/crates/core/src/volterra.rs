//! Per-degree Volterra systems: 3-D kernels, product-trapezoidal assembly,
//! and TSVD-regularized solves.
//!
//! For each harmonic degree `l` the data profile satisfies
//! `g_l(rho) = int_0^rho K_l(rho, r) F_l(r) dr` in the case's working radial
//! variable. The kernel splits as `K_l = Ktilde_l * w` with a density weight
//! `w(r)` (`1+r` exterior, `1-r` interior, `R2-r` combined); the product
//! trapezoidal rule interpolates `Ktilde_l F` piecewise-linearly and
//! integrates the weight exactly, which yields a lower-triangular matrix with
//! positive diagonal and O(h^2) accuracy for smooth solutions.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{SrtError, SrtResult};
use crate::specialfn::{kernel_parts, legendre_p, KERNEL_CLAMP_EPS};
use crate::support::SupportCase;

/// Radial discretization of one support case.
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraCaseParams {
    pub case: SupportCase,
    /// Outer support radius in acquisition-sphere units (combined case only).
    pub r2: Option<f64>,
    /// Equidistant nodes of the working radial variable, `rho_0 > 0`.
    pub rho_grid: Vec<f64>,
    /// Grid step.
    pub h: f64,
}

impl VolterraCaseParams {
    pub fn new(case: SupportCase, r2: Option<f64>, rho_grid: Vec<f64>) -> SrtResult<Self> {
        if rho_grid.len() < 2 {
            return Err(SrtError::Geometry(
                "Volterra grid needs at least two nodes".into(),
            ));
        }
        if rho_grid[0] <= 0.0 {
            return Err(SrtError::Geometry(format!(
                "Volterra grid must start above zero (diagonal positivity needs rho_0 > 0), got {}",
                rho_grid[0]
            )));
        }
        let h = rho_grid[1] - rho_grid[0];
        if h <= 0.0 {
            return Err(SrtError::Geometry(
                "Volterra grid must be increasing".into(),
            ));
        }
        for w in rho_grid.windows(2) {
            if ((w[1] - w[0]) - h).abs() > 1e-9 * h {
                return Err(SrtError::Geometry(
                    "Volterra grid must be equidistant".into(),
                ));
            }
        }
        let hi = *rho_grid.last().unwrap();
        match case {
            SupportCase::Interior => {
                if hi >= 1.0 {
                    return Err(SrtError::Geometry(format!(
                        "interior Volterra grid must stay below 1, got {hi}"
                    )));
                }
            }
            SupportCase::Exterior | SupportCase::InteriorExterior => {
                if hi >= 2.0 {
                    return Err(SrtError::Geometry(format!(
                        "Volterra grid must stay below 2, got {hi}"
                    )));
                }
                if case == SupportCase::InteriorExterior {
                    let r2 = r2.ok_or_else(|| {
                        SrtError::Geometry("interior-exterior case requires R2".into())
                    })?;
                    if r2 <= 2.0 {
                        return Err(SrtError::Geometry(format!(
                            "interior-exterior case requires R2 > 2 in acquisition units, got {r2}"
                        )));
                    }
                }
            }
        }
        Ok(VolterraCaseParams {
            case,
            r2,
            rho_grid,
            h,
        })
    }

    /// Uniform grid of `points` nodes on `[lo, hi]`.
    pub fn uniform(
        case: SupportCase,
        r2: Option<f64>,
        lo: f64,
        hi: f64,
        points: usize,
    ) -> SrtResult<Self> {
        let step = (hi - lo) / (points as f64 - 1.0);
        let grid = (0..points).map(|i| lo + step * i as f64).collect();
        Self::new(case, r2, grid)
    }
}

/// 3-D Volterra kernel `K_l(rho, r)` for the given case.
///
/// Exterior: `2 pi rho (r+1) P_l((r^2 - rho^2 + 2r + 2) / (2(r+1)))`;
/// interior: `2 pi rho (1-r) P_l((r^2 - rho^2 + 2 - 2r) / (2(1-r)))`;
/// combined: `2 pi (R2+1-rho)(R2-r) P_l(((R2-r)^2 + 1 - (R2+1-rho)^2) / (2(R2-r)))`.
/// The Legendre argument is clamped to `[-1, 1]` within rounding and is a
/// domain error beyond `1 + 1e-9` (inconsistent `(rho, r, case)`).
pub fn kernel_3d(case: SupportCase, l: u32, rho: f64, r: f64, r2: Option<f64>) -> SrtResult<f64> {
    let reduced = kernel_reduced(case, l, rho, r, r2)?;
    let weight = match case {
        SupportCase::Exterior => 1.0 + r,
        SupportCase::Interior => 1.0 - r,
        SupportCase::InteriorExterior => r2.expect("checked by kernel_reduced") - r,
    };
    Ok(reduced * weight)
}

/// Reduced kernel `Ktilde_l` (the kernel with the density weight split off).
fn kernel_reduced(case: SupportCase, l: u32, rho: f64, r: f64, r2: Option<f64>) -> SrtResult<f64> {
    let (lead, _, t) = kernel_parts(case, rho, r, r2)?;
    if t.abs() > 1.0 + KERNEL_CLAMP_EPS {
        return Err(SrtError::Domain {
            context: "kernel_3d argument",
            value: t,
            bounds: "[-1, 1]",
        });
    }
    let t = t.clamp(-1.0, 1.0);
    Ok(2.0 * std::f64::consts::PI * lead * legendre_p(l, t)?)
}

/// Assembled per-degree system.
///
/// `matrix` holds the product-trapezoidal entries times `parity_sign`. For
/// the combined case the kernel's diagonal value carries `P_l(-1) = (-1)^l`,
/// so odd degrees are assembled with both sides of the equation negated;
/// the solution is unchanged and every diagonal entry stays positive.
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraSystem {
    pub l: u32,
    pub params: VolterraCaseParams,
    pub matrix: DMatrix<f64>,
    /// True when the assembled matrix is exactly lower triangular.
    pub lower_triangular: bool,
    /// Smallest diagonal entry.
    pub diag_min: f64,
    /// Sign applied to the equation (`+1`, or `-1` for odd combined degrees).
    pub parity_sign: f64,
}

/// Bracket weights of the product trapezoidal rule: the exact integral of the
/// density weight against the hat function at node `k` over the row's range.
fn bracket(params: &VolterraCaseParams, row: usize, k: usize) -> f64 {
    let h = params.h;
    let rho = &params.rho_grid;
    let (s, c) = match params.case {
        SupportCase::Exterior => (1.0, 1.0),
        SupportCase::Interior => (-1.0, 1.0),
        SupportCase::InteriorExterior => (-1.0, params.r2.expect("validated")),
    };
    if k == 0 {
        // Right half-interval of node 0 only (row 0 shares this form).
        s * h * (rho[1] + rho[0]) / 6.0 + s * h * rho[0] / 6.0 + h * c / 2.0
    } else if k < row {
        s * h * (rho[k - 1] + 4.0 * rho[k] + rho[k + 1]) / 6.0 + h * c
    } else {
        s * h * (rho[row] + rho[row - 1]) / 6.0 + s * h * rho[row] / 6.0 + h * c / 2.0
    }
}

/// Builds the lower-triangular product-trapezoidal matrix for degree `l`.
pub fn assemble(params: &VolterraCaseParams, l: u32) -> SrtResult<VolterraSystem> {
    let n = params.rho_grid.len();
    let parity_sign = if params.case == SupportCase::InteriorExterior && l % 2 == 1 {
        -1.0
    } else {
        1.0
    };
    let mut matrix = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let rho_i = params.rho_grid[i];
        for k in 0..=i {
            let kt = kernel_reduced(params.case, l, rho_i, params.rho_grid[k], params.r2)?;
            matrix[(i, k)] = parity_sign * kt * bracket(params, i, k);
        }
    }
    let mut diag_min = f64::INFINITY;
    for i in 0..n {
        diag_min = diag_min.min(matrix[(i, i)]);
    }
    if diag_min <= 0.0 {
        let row = (0..n)
            .min_by(|&a, &b| matrix[(a, a)].total_cmp(&matrix[(b, b)]))
            .unwrap();
        return Err(SrtError::Assembly {
            l,
            row,
            value: diag_min,
        });
    }
    Ok(VolterraSystem {
        l,
        params: params.clone(),
        matrix,
        lower_triangular: true,
        diag_min,
        parity_sign,
    })
}

/// Truncation rule for the regularized solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsvdConfig {
    /// Singular values below `rel_threshold * sigma_max` are discarded.
    pub rel_threshold: f64,
    /// Optional cap on the number of retained singular values.
    pub max_rank: Option<usize>,
}

impl TsvdConfig {
    pub fn new(rel_threshold: f64, max_rank: Option<usize>) -> SrtResult<Self> {
        if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
            return Err(SrtError::Geometry(format!(
                "TSVD relative threshold must lie in (0, 1), got {rel_threshold}"
            )));
        }
        Ok(TsvdConfig {
            rel_threshold,
            max_rank,
        })
    }
}

impl Default for TsvdConfig {
    fn default() -> Self {
        // Condition numbers of the assembled systems routinely exceed 1e4 and
        // the small singular directions concentrate at the far end of the
        // working interval (near the origin for the interior case), where
        // they amplify quadrature-level data error into O(1) artifacts. The
        // default keeps directions amplified by at most ~30x; at M ~ 50 this
        // retains the resolution the data actually supports, noisy or not.
        TsvdConfig {
            rel_threshold: 3e-2,
            max_rank: None,
        }
    }
}

/// SVD factorization of one system, reusable across right-hand sides (the
/// matrix does not depend on the harmonic order m).
#[derive(Debug, Clone)]
pub struct TsvdFactor {
    u: DMatrix<f64>,
    v_t: DMatrix<f64>,
    singular: Vec<f64>,
    kept: usize,
    sigma_max: f64,
    sigma_min: f64,
    parity_sign: f64,
}

impl TsvdFactor {
    pub fn new(system: &VolterraSystem, config: &TsvdConfig) -> SrtResult<Self> {
        let svd = system.matrix.clone().svd(true, true);
        let u = svd.u.expect("requested");
        let v_t = svd.v_t.expect("requested");
        let singular: Vec<f64> = svd.singular_values.iter().copied().collect();
        let sigma_max = singular.iter().copied().fold(0.0, f64::max);
        let sigma_min = singular.iter().copied().fold(f64::INFINITY, f64::min);
        if sigma_max <= 0.0 {
            return Err(SrtError::Degenerate);
        }
        let cutoff = config.rel_threshold * sigma_max;
        let mut order: Vec<usize> = (0..singular.len()).collect();
        order.sort_by(|&a, &b| singular[b].total_cmp(&singular[a]));
        let mut kept_idx: Vec<usize> = order
            .into_iter()
            .filter(|&i| singular[i] >= cutoff)
            .collect();
        if let Some(cap) = config.max_rank {
            kept_idx.truncate(cap);
        }
        // Repack U, V rows/columns so the factor only carries the retained
        // subspace.
        let n = system.matrix.nrows();
        let kept = kept_idx.len();
        let mut u_kept = DMatrix::<f64>::zeros(n, kept);
        let mut v_t_kept = DMatrix::<f64>::zeros(kept, n);
        let mut s_kept = Vec::with_capacity(kept);
        for (col, &i) in kept_idx.iter().enumerate() {
            u_kept.set_column(col, &u.column(i));
            v_t_kept.set_row(col, &v_t.row(i));
            s_kept.push(singular[i]);
        }
        Ok(TsvdFactor {
            u: u_kept,
            v_t: v_t_kept,
            singular: s_kept,
            kept,
            sigma_max,
            sigma_min,
            parity_sign: system.parity_sign,
        })
    }

    pub fn effective_rank(&self) -> usize {
        self.kept
    }

    /// Condition number `sigma_max / sigma_min` of the full (untruncated)
    /// matrix.
    pub fn condition(&self) -> f64 {
        if self.sigma_min > 0.0 {
            self.sigma_max / self.sigma_min
        } else {
            f64::INFINITY
        }
    }

    /// Applies the truncated pseudo-inverse to a complex right-hand side;
    /// real and imaginary parts are solved independently.
    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.u.nrows();
        assert_eq!(rhs.len(), n, "right-hand side length mismatch");
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for comp in 0..self.kept {
            let mut proj = Complex64::new(0.0, 0.0);
            for (i, &g) in rhs.iter().enumerate() {
                proj += self.u[(i, comp)] * g;
            }
            proj *= self.parity_sign / self.singular[comp];
            for (i, v) in out.iter_mut().enumerate() {
                *v += proj * self.v_t[(comp, i)];
            }
        }
        out
    }
}

/// Outcome of one regularized solve.
#[derive(Debug, Clone)]
pub struct TsvdSolution {
    pub values: Vec<Complex64>,
    pub effective_rank: usize,
    pub condition: f64,
}

/// Convenience wrapper: factor the system and solve one right-hand side.
pub fn solve_tsvd(
    system: &VolterraSystem,
    rhs: &[Complex64],
    config: &TsvdConfig,
) -> SrtResult<TsvdSolution> {
    let factor = TsvdFactor::new(system, config)?;
    Ok(TsvdSolution {
        values: factor.solve(rhs),
        effective_rank: factor.effective_rank(),
        condition: factor.condition(),
    })
}

/// High-order quadrature of the forward Volterra integral
/// `g_l(rho_i) = int_0^{rho_i} K_l(rho_i, r) F(r) dr` at every grid node;
/// the manufactured-solution oracle. Composite Simpson with at least
/// `SIMPSON_MIN_INTERVALS` subintervals per node keeps the quadrature error
/// near machine precision for smooth profiles.
pub fn forward_apply<F>(params: &VolterraCaseParams, l: u32, profile: F) -> SrtResult<Vec<f64>>
where
    F: Fn(f64) -> f64,
{
    const SIMPSON_MIN_INTERVALS: usize = 64;
    const SIMPSON_PER_NODE: usize = 16;
    params
        .rho_grid
        .iter()
        .enumerate()
        .map(|(i, &rho)| {
            let mut n = SIMPSON_MIN_INTERVALS.max(SIMPSON_PER_NODE * (i + 1));
            if n % 2 == 1 {
                n += 1;
            }
            let step = rho / n as f64;
            let mut acc = 0.0;
            for q in 0..=n {
                let r = step * q as f64;
                let weight = if q == 0 || q == n {
                    1.0
                } else if q % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += weight * kernel_3d(params.case, l, rho, r, params.r2)? * profile(r);
            }
            Ok(acc * step / 3.0)
        })
        .collect()
}
