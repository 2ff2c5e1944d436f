//! Globally adaptive dyadic integration used to cross-check the structured
//! rules. It only shares the Legendre node table with the rest of the
//! crate: no grading, no Jacobi weights, no coordinate changes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Result, WfemError};
use crate::quadrature::rules::gauss_legendre;

const PANEL_ORDER: usize = 10;
pub const MAX_PANELS: usize = 1_000_000;
/// Panel budget of each inner integral of [`adaptive_integral_2d`].
const INNER_MAX_PANELS: usize = 20_000;
/// Inner integrals that exhaust their budget are still accepted when their
/// error bound is within this factor of the inner tolerance; the bound is
/// carried into the reported error. This absorbs the rounding floor of
/// integrands evaluated in absolute coordinates.
const INNER_SLACK: f64 = 100.0;

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEstimate {
    pub value: f64,
    pub error_bound: f64,
    pub panels: usize,
}

struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_panel<F: FnMut(f64) -> Result<f64>>(f: &mut F, lo: f64, hi: f64) -> Result<f64> {
    let rule = gauss_legendre(PANEL_ORDER)?;
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let mut acc = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        acc += w * f(mid + half * x)?;
    }
    Ok(acc * half)
}

fn make_panel<F: FnMut(f64) -> Result<f64>>(f: &mut F, lo: f64, hi: f64) -> Result<Panel> {
    let whole = gauss_panel(f, lo, hi)?;
    let mid = 0.5 * (lo + hi);
    let split = gauss_panel(f, lo, mid)? + gauss_panel(f, mid, hi)?;
    let error = (whole - split).abs();
    if !error.is_finite() {
        return Err(WfemError::Convergence {
            estimate: split,
            error_bound: error,
            context: format!("non-finite integrand on [{lo}, {hi}]"),
        });
    }
    Ok(Panel { lo, hi, value: split, error })
}

/// Adaptive integral of a fallible integrand over `[a, b]`, with optional
/// interior breakpoints where the integrand is known to be non-smooth.
/// Terminates when the summed panel-refinement differences fall below `tol`.
pub fn adaptive_integral_with<F>(f: F, a: f64, b: f64, breakpoints: &[f64], tol: f64) -> Result<OracleEstimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    adaptive_integral_budget(f, a, b, breakpoints, tol, MAX_PANELS)
}

fn adaptive_integral_budget<F>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
    max_panels: usize,
) -> Result<OracleEstimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a < b) {
        return Ok(OracleEstimate { value: 0.0, error_bound: 0.0, panels: 0 });
    }
    let mut cuts: Vec<f64> = std::iter::once(a)
        .chain(breakpoints.iter().copied().filter(|&p| p > a && p < b))
        .chain(std::iter::once(b))
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut total_err = 0.0;
    for w in cuts.windows(2) {
        let p = make_panel(&mut f, w[0], w[1])?;
        total_err += p.error;
        heap.push(p);
    }
    let mut panels = heap.len();
    while total_err > tol {
        if panels >= max_panels {
            let value = heap.iter().map(|p| p.value).sum();
            return Err(WfemError::Convergence {
                estimate: value,
                error_bound: total_err,
                context: format!("adaptive oracle on [{a}, {b}] exhausted {max_panels} panels"),
            });
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) {
            // panel below f64 resolution: the singularity is not integrable here
            let value = heap.iter().map(|p| p.value).sum::<f64>() + worst.value;
            return Err(WfemError::Convergence {
                estimate: value,
                error_bound: total_err,
                context: format!("adaptive oracle on [{a}, {b}] cannot split panel at {}", worst.lo),
            });
        }
        let left = make_panel(&mut f, worst.lo, mid)?;
        let right = make_panel(&mut f, mid, worst.hi)?;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        panels += 1;
        // recompute to shed accumulated rounding in the running sum
        if panels.is_multiple_of(4096) {
            total_err = heap.iter().map(|p| p.error).sum();
        }
    }
    let value = heap.iter().map(|p| p.value).sum();
    Ok(OracleEstimate { value, error_bound: total_err, panels })
}

/// Infallible-integrand version of [`adaptive_integral_with`].
pub fn adaptive_integral(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<OracleEstimate> {
    adaptive_integral_with(|x| Ok(f(x)), a, b, breakpoints, tol)
}

/// Iterated adaptive integral over `[x0, x1] × [y0, y1]`. The integrand is
/// called as `f(x, r)` with `y = x + r`: the inner variable is the offset
/// from the diagonal, so points close to `y = x` keep full relative
/// precision in `r`. The inner integration is split at `r = 0` and at
/// `y_breaks`; the outer one at `x_breaks` and at `y0, y1, y_breaks`.
pub fn adaptive_integral_2d(
    f: impl Fn(f64, f64) -> f64,
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    x_breaks: &[f64],
    y_breaks: &[f64],
    tol: f64,
) -> Result<OracleEstimate> {
    let inner_tol = tol / (4.0 * (x1 - x0).max(1.0));
    let mut outer_breaks: Vec<f64> = x_breaks.to_vec();
    outer_breaks.extend_from_slice(y_breaks);
    outer_breaks.push(y0);
    outer_breaks.push(y1);
    let mut panels = 0usize;
    let mut inner_err: f64 = 0.0;
    let est = adaptive_integral_with(
        |x| {
            let mut breaks: Vec<f64> = y_breaks.iter().map(|&b| b - x).collect();
            breaks.push(0.0);
            let inner = adaptive_integral_budget(|r| Ok(f(x, r)), y0 - x, y1 - x, &breaks, inner_tol, INNER_MAX_PANELS);
            let (value, bound, used) = match inner {
                Ok(e) => (e.value, e.error_bound, e.panels),
                Err(WfemError::Convergence { estimate, error_bound, .. })
                    if estimate.is_finite() && error_bound <= INNER_SLACK * inner_tol =>
                {
                    (estimate, error_bound, INNER_MAX_PANELS)
                }
                Err(e) => return Err(e),
            };
            panels += used;
            inner_err = inner_err.max(bound);
            Ok(value)
        },
        x0,
        x1,
        &outer_breaks,
        tol,
    )?;
    Ok(OracleEstimate {
        value: est.value,
        error_bound: est.error_bound + inner_err * (x1 - x0),
        panels: est.panels + panels,
    })
}

/// Integrand shapes accepted by [`adaptive_oracle_integral`].
pub enum OracleIntegrand<'a> {
    Interval {
        f: &'a dyn Fn(f64) -> f64,
        range: (f64, f64),
        breakpoints: &'a [f64],
    },
    /// `f(x, r)` with `y = x + r`, see [`adaptive_integral_2d`].
    Rectangle {
        f: &'a dyn Fn(f64, f64) -> f64,
        x: (f64, f64),
        y: (f64, f64),
        breakpoints: &'a [f64],
    },
}

/// Single entry point for the oracle; rectangles use the same breakpoints
/// in both directions.
pub fn adaptive_oracle_integral(integrand: OracleIntegrand<'_>, tol: f64) -> Result<OracleEstimate> {
    match integrand {
        OracleIntegrand::Interval { f, range, breakpoints } => adaptive_integral(f, range.0, range.1, breakpoints, tol),
        OracleIntegrand::Rectangle { f, x, y, breakpoints } => {
            adaptive_integral_2d(f, x, y, breakpoints, breakpoints, tol)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_sqrt_endpoint() {
        let est = adaptive_integral(|x| x.powf(-0.5), 0.0, 1.0, &[], 1e-10).unwrap();
        assert!((est.value - 2.0).abs() < 1e-9, "{est:?}");
    }

    #[test]
    fn diagonal_singularity_closed_form() {
        // ∬_{[0,1]²} |x-y|^{-1/2} = 2 ∫_0^1 ∫_0^x (x-y)^{-1/2} dy dx = 2 ∫_0^1 2 x^{1/2} dx = 8/3
        let est = adaptive_integral_2d(|_, r| r.abs().powf(-0.5), (0.0, 1.0), (0.0, 1.0), &[], &[], 1e-10).unwrap();
        assert!((est.value - 8.0 / 3.0).abs() < 1e-9, "{est:?}");
    }

    #[test]
    fn smooth_integrand_matches_legendre() {
        let f = |x: f64| (1.3 * x).cos() * (0.7 * x).exp();
        let rule = gauss_legendre(16).unwrap();
        let reference: f64 = rule.nodes.iter().zip(&rule.weights).map(|(&x, &w)| w * f(x)).sum();
        let est = adaptive_integral(f, -1.0, 1.0, &[], 1e-13).unwrap();
        assert!((est.value - reference).abs() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_reports_estimate() {
        // x^{-0.999} is integrable but far too singular for the panel budget
        match adaptive_integral(|x| x.powf(-0.999), 0.0, 1.0, &[], 1e-6) {
            Err(WfemError::Convergence { estimate, error_bound, .. }) => {
                assert!(estimate > 1.0 && error_bound > 1e-6);
            }
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }

    #[test]
    fn non_integrable_singularity_is_reported() {
        assert!(matches!(adaptive_integral(|x| 1.0 / x, 0.0, 1.0, &[], 1e-12), Err(WfemError::Convergence { .. })));
    }
}
