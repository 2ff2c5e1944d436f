//! Composite rules on the unit interval with endpoint-adapted panels.
//!
//! Each point carries both `t` and its complement `1 - t`, the latter
//! computed without cancellation, so integrands can recover distances to
//! either endpoint exactly even on panels of width `1e-12`.

use crate::error::Result;
use crate::quadrature::rules::{gauss_jacobi, gauss_legendre};

/// Treatment of one endpoint of `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndBehavior {
    /// Integrand analytic up to the endpoint.
    Smooth,
    /// Integrand `~ dist^alpha × analytic`: one Jacobi panel.
    Power(f64),
    /// Mixed or unknown power behaviour: geometric panels toward the
    /// endpoint, innermost panel with Jacobi exponent `alpha`.
    Graded(f64),
}

/// Geometric panel layout toward a singular endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grading {
    pub ratio: f64,
    pub levels: usize,
}

impl Default for Grading {
    fn default() -> Self {
        Self { ratio: 0.25, levels: 20 }
    }
}

/// Points, complements and weights on `[0, 1]`. The weights already divide
/// out any Jacobi factor, so `Σ w_i F(t_i) ≈ ∫_0^1 F`.
#[derive(Debug, Clone, Default)]
pub struct LineRule {
    pub t: Vec<f64>,
    pub tc: Vec<f64>,
    pub w: Vec<f64>,
}

impl LineRule {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.t.iter().zip(&self.tc).zip(&self.w).map(|((&t, &tc), &w)| (t, tc, w))
    }

    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.iter().map(|(t, tc, w)| w * f(t, tc)).sum()
    }

    /// Rule on `[0, 1]` honoring the requested endpoint behaviours. When both
    /// ends need treatment the interval is split at `1/2`.
    pub fn build(n: usize, left: EndBehavior, right: EndBehavior, grading: Grading) -> Result<Self> {
        let mut rule = LineRule::default();
        match (left, right) {
            (EndBehavior::Smooth, EndBehavior::Smooth) => rule.push_plain(n, 0.0, 1.0)?,
            (l, EndBehavior::Smooth) => rule.push_special(n, l, 1.0, false, grading)?,
            (EndBehavior::Smooth, r) => rule.push_special(n, r, 1.0, true, grading)?,
            (l, r) => {
                rule.push_special(n, l, 0.5, false, grading)?;
                rule.push_special(n, r, 0.5, true, grading)?;
            }
        }
        Ok(rule)
    }

    /// Plain Legendre rule on `[lo, hi] ⊂ [0, 1]`.
    fn push_plain(&mut self, n: usize, lo: f64, hi: f64) -> Result<()> {
        let rule = gauss_legendre(n)?;
        let half = 0.5 * (hi - lo);
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let t = lo + half * (1.0 + x);
            self.t.push(t);
            self.tc.push((1.0 - hi) + half * (1.0 - x));
            self.w.push(half * w);
        }
        Ok(())
    }

    /// Panels on the segment at distance `[0, span]` from an endpoint; the
    /// endpoint is `0` unless `mirrored`, then it is `1`.
    fn push_special(&mut self, n: usize, end: EndBehavior, span: f64, mirrored: bool, grading: Grading) -> Result<()> {
        match end {
            EndBehavior::Smooth => self.push_distance_panel(n, 0.0, span, 0.0, mirrored),
            EndBehavior::Power(alpha) => self.push_distance_panel(n, 0.0, span, alpha, mirrored),
            EndBehavior::Graded(alpha) => {
                let mut outer = span;
                for _ in 0..grading.levels {
                    let inner = outer * grading.ratio;
                    self.push_distance_panel(n, inner, outer, 0.0, mirrored)?;
                    outer = inner;
                }
                self.push_distance_panel(n, 0.0, outer, alpha, mirrored)
            }
        }
    }

    /// One Gauss panel covering distances `[d0, d1]` from the chosen
    /// endpoint. A nonzero `alpha` requires `d0 = 0` and uses the Jacobi
    /// weight `dist^alpha`.
    fn push_distance_panel(&mut self, n: usize, d0: f64, d1: f64, alpha: f64, mirrored: bool) -> Result<()> {
        let len = d1 - d0;
        let (nodes, weights, scale): (Vec<f64>, Vec<f64>, f64) = if alpha == 0.0 {
            let r = gauss_legendre(n)?;
            (r.nodes.clone(), r.weights.clone(), 0.5)
        } else {
            debug_assert!(d0 == 0.0);
            let r = gauss_jacobi(n, 0.0, alpha)?;
            (r.nodes.clone(), r.weights.clone(), 2f64.powf(-alpha - 1.0))
        };
        for (&x, &w) in nodes.iter().zip(&weights) {
            let unit = 0.5 * (1.0 + x);
            let dist = d0 + len * unit;
            // reference weight for ∫_0^1 unit^alpha g(unit) d(unit)
            let w_ref = w * scale;
            let w_eff = if alpha == 0.0 { w_ref * len } else { w_ref * len / unit.powf(alpha) };
            let (t, tc) = if mirrored { (1.0 - dist, dist) } else { (dist, 1.0 - dist) };
            self.t.push(t);
            self.tc.push(tc);
            self.w.push(w_eff);
        }
        Ok(())
    }
}
