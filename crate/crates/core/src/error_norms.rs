//! `L²` errors, energy-seminorm errors and observed convergence rates.

use crate::assembly::LoadVector;
use crate::basis::DiscreteSolution;
use crate::error::{Result, WfemError};
use crate::quadrature::line::{EndBehavior, Grading, LineRule};
use crate::quadrature::oracle::{adaptive_integral, adaptive_integral_2d};
use crate::special::frac_lap_constant;
use crate::weight::killing_from_dists;

/// `‖u_h - u*‖_{L²(Ω)}`, element by element with `n_quad` points per panel;
/// boundary elements are graded toward the boundary.
pub fn l2_error(sol: &DiscreteSolution, u_exact: &dyn Fn(f64) -> f64, n_quad: usize) -> Result<f64> {
    let space = &sol.space;
    let mesh = &space.mesh;
    let ne = mesh.n_elems();
    let g = Grading::default();
    let interior = LineRule::build(n_quad, EndBehavior::Smooth, EndBehavior::Smooth, g)?;
    let left = LineRule::build(n_quad, EndBehavior::Graded(0.0), EndBehavior::Smooth, g)?;
    let right = LineRule::build(n_quad, EndBehavior::Smooth, EndBehavior::Graded(0.0), g)?;
    let (a, b) = (mesh.a(), mesh.b());
    let mut total = 0.0;
    for k in 0..ne {
        let rule = if k == 0 {
            &left
        } else if k + 1 == ne {
            &right
        } else {
            &interior
        };
        let mut acc = 0.0;
        for (t, tc, w) in rule.iter() {
            let p = space.local_point(k, t, tc);
            let x = if p.dl <= p.dr { a + p.dl } else { b - p.dr };
            let e = sol.eval_local(k, t, tc) - u_exact(x);
            acc += w * e * e;
        }
        total += acc;
    }
    Ok((total * mesh.h()).sqrt())
}

/// Seminorm error from the energy identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyError {
    /// `sqrt(max(0, raw_squared))`.
    pub value: f64,
    /// `∫ f u* - bᵀ c` before clamping.
    pub raw_squared: f64,
    /// Set when a negative value beyond rounding was clamped to zero.
    pub clamped: bool,
}

/// `[u* - u_h]_{H^s}` from Galerkin orthogonality:
/// `[u* - u_h]² = ∫ f u* - ∫ f u_h = lin_f_ustar - bᵀ c`.
pub fn hs_error_energy(sol: &DiscreteSolution, load: &LoadVector, lin_f_ustar: f64) -> Result<EnergyError> {
    if load.len() != sol.coeffs.len() {
        return Err(WfemError::Argument(format!(
            "load of length {} for {} coefficients",
            load.len(),
            sol.coeffs.len()
        )));
    }
    let raw = lin_f_ustar - load.dot(&sol.coeffs);
    if raw < -1e-10 * lin_f_ustar.abs() {
        return Err(WfemError::Inconsistent { value: raw });
    }
    Ok(EnergyError { value: raw.max(0.0).sqrt(), raw_squared: raw, clamped: raw < -1e-12 })
}

/// `[v]_{H^s} = a(v, v)^{1/2}` for `v` supported in `[a, b]`, by adaptive
/// integration of `C/2 ∬_{Ω×Ω} (v(x)-v(y))² |x-y|^{-1-2s} + ∫_Ω v² κ`.
/// `breakpoints` are interior points where `v` is not smooth.
pub fn hs_seminorm_direct(
    v: &dyn Fn(f64) -> f64,
    (a, b): (f64, f64),
    breakpoints: &[f64],
    s: f64,
    tol: f64,
) -> Result<f64> {
    let c = frac_lap_constant(1, s)?;
    let params = crate::special::FracParams { s, d: 1, c_norm: c };
    let interaction = adaptive_integral_2d(
        |x, r| {
            // offset between the points actually sampled, exact by Sterbenz
            let y = x + r;
            let r = y - x;
            let d = v(x) - v(y);
            if d == 0.0 || r == 0.0 {
                return 0.0;
            }
            d * d * r.abs().powf(-1.0 - 2.0 * s)
        },
        (a, b),
        (a, b),
        breakpoints,
        breakpoints,
        tol / c,
    )?;
    let killing = adaptive_integral(
        |x| {
            let vx = v(x);
            if vx == 0.0 {
                return 0.0;
            }
            vx * vx * killing_from_dists(x - a, b - x, &params)
        },
        a,
        b,
        breakpoints,
        tol / 4.0,
    )?;
    Ok((0.5 * c * interaction.value + killing.value).max(0.0).sqrt())
}

/// Incremental ratios `(log e_{k+1} - log e_k) / (log h_{k+1} - log h_k)`.
pub fn observed_rates(errors: &[f64], hs: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != hs.len() || errors.len() < 2 {
        return Err(WfemError::Argument(format!(
            "need two or more matching errors and mesh sizes, got {} and {}",
            errors.len(),
            hs.len()
        )));
    }
    if let Some(e) = errors.iter().find(|&&e| !(e > 0.0)) {
        return Err(WfemError::Domain(format!("rates need positive errors, got {e}")));
    }
    if hs.windows(2).any(|w| !(w[1] < w[0] && w[1] > 0.0)) {
        return Err(WfemError::Domain("mesh sizes must be positive and strictly decreasing".into()));
    }
    Ok(errors.windows(2).zip(hs.windows(2)).map(|(e, h)| (e[1].ln() - e[0].ln()) / (h[1].ln() - h[0].ln())).collect())
}

/// One refinement level of a study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelRow {
    pub s: f64,
    pub level: u32,
    pub h: f64,
    pub n_dofs: usize,
    pub err_hs: f64,
    pub err_l2: f64,
}

/// Consecutive levels for one `s`, with their observed rates. A rate is
/// `None` when one of its two errors is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub s: f64,
    pub rows: Vec<LevelRow>,
    pub rates_hs: Vec<Option<f64>>,
    pub rates_l2: Vec<Option<f64>>,
}

fn pairwise_rates(errors: &[f64], hs: &[f64]) -> Result<Vec<Option<f64>>> {
    let mut out = Vec::with_capacity(errors.len().saturating_sub(1));
    for i in 1..errors.len() {
        out.push(if errors[i - 1] > 0.0 && errors[i] > 0.0 {
            Some(observed_rates(&errors[i - 1..=i], &hs[i - 1..=i])?[0])
        } else {
            None
        });
    }
    Ok(out)
}

impl ErrorSeries {
    pub fn from_rows(s: f64, rows: Vec<LevelRow>) -> Result<Self> {
        if rows.windows(2).any(|w| !(w[1].h < w[0].h)) {
            return Err(WfemError::Argument("levels must refine the mesh".into()));
        }
        let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let ehs: Vec<f64> = rows.iter().map(|r| r.err_hs).collect();
        let el2: Vec<f64> = rows.iter().map(|r| r.err_l2).collect();
        Ok(Self { s, rates_hs: pairwise_rates(&ehs, &hs)?, rates_l2: pairwise_rates(&el2, &hs)?, rows })
    }
}

/// Per-level solver diagnostics, not part of the CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LevelDiagnostics {
    pub s: f64,
    pub level: u32,
    pub symmetry_defect: f64,
    pub galerkin_residual: f64,
    /// Squared energy error before clamping.
    pub raw_energy: f64,
    pub quad_self_diff: f64,
    pub oracle_pairs: usize,
    /// `max_i |c_i - c_{1,s}| / c_{1,s}`, only for the constant-quotient case.
    pub max_coeff_deviation: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorReport {
    pub series: Vec<ErrorSeries>,
    pub diagnostics: Vec<LevelDiagnostics>,
    /// Human-readable acceptance breaches detected while running.
    pub failures: Vec<String>,
}

impl ErrorReport {
    pub fn rows(&self) -> impl Iterator<Item = &LevelRow> {
        self.series.iter().flat_map(|s| s.rows.iter())
    }

    pub fn series_for(&self, s: f64) -> Option<&ErrorSeries> {
        self.series.iter().find(|x| x.s == s)
    }
}
