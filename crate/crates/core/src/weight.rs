//! Regularized distance functions and the exterior ("killing") potential.
//!
//! Every weight is attached to an interval `(a, b)` and evaluated from the
//! distance to the nearest endpoint, so values close to the boundary do not
//! suffer from cancellation in `R² - |x - x0|²`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WfemError};
use crate::special::FracParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// `R² - |x - x0|²`
    Poly2,
    /// `R⁴ - |x - x0|⁴`
    Poly4,
    /// `dist(x, ℝ \ Ω)`
    #[serde(alias = "dist")]
    ExactDist,
    /// `δ ≡ 1` on `Ω`. Does not vanish on the boundary; only meant for
    /// consistency checks of the weighted interpolant.
    #[doc(hidden)]
    Unit,
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            WeightKind::Poly2 => "poly2",
            WeightKind::Poly4 => "poly4",
            WeightKind::ExactDist => "dist",
            WeightKind::Unit => "unit",
        };
        f.write_str(name)
    }
}

impl FromStr for WeightKind {
    type Err = WfemError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poly2" => Ok(WeightKind::Poly2),
            "poly4" => Ok(WeightKind::Poly4),
            "dist" | "exact_dist" => Ok(WeightKind::ExactDist),
            other => Err(WfemError::Parse(format!("unknown weight '{other}'"))),
        }
    }
}

/// A regularized distance `δ` on the ball `(x0 - R, x0 + R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightFn {
    pub kind: WeightKind,
    pub radius: f64,
    pub center: f64,
    /// Smoothness order: infinite for the polynomial weights, 1 for the distance.
    pub sigma: f64,
}

impl WeightFn {
    /// Weight for the interval `(a, b)`.
    pub fn new(kind: WeightKind, a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(WfemError::Argument(format!("empty interval ({a}, {b})")));
        }
        let sigma = match kind {
            WeightKind::Poly2 | WeightKind::Poly4 | WeightKind::Unit => f64::INFINITY,
            WeightKind::ExactDist => 1.0,
        };
        Ok(Self { kind, radius: 0.5 * (b - a), center: 0.5 * (a + b), sigma })
    }

    pub fn a(&self) -> f64 {
        self.center - self.radius
    }

    pub fn b(&self) -> f64 {
        self.center + self.radius
    }

    /// Distance from `x` to the complement of the interval (zero outside).
    pub fn dist(&self, x: f64) -> f64 {
        (self.radius - (x - self.center).abs()).max(0.0)
    }

    /// `δ` as a function of the boundary distance `d ∈ [0, R]`.
    #[inline]
    pub fn from_dist(&self, d: f64) -> f64 {
        if d <= 0.0 {
            return 0.0;
        }
        let r = self.radius;
        match self.kind {
            WeightKind::Poly2 => d * (2.0 * r - d),
            WeightKind::Poly4 => {
                let q = r - d;
                d * (2.0 * r - d) * (r * r + q * q)
            }
            WeightKind::ExactDist => d,
            WeightKind::Unit => 1.0,
        }
    }

    /// `δ(x)`; exactly zero outside the open interval.
    pub fn delta(&self, x: f64) -> f64 {
        self.from_dist(self.dist(x))
    }

    /// `δ(x)^s`.
    pub fn delta_pow_s(&self, s: f64, x: f64) -> f64 {
        self.delta(x).powf(s)
    }

    /// `δ(d1) - δ(d2)` for two distances to the same endpoint, given their
    /// exact difference `dd = d1 - d2`, without cancellation.
    #[inline]
    pub fn diff_from_dists(&self, d1: f64, d2: f64, dd: f64) -> f64 {
        let r = self.radius;
        match self.kind {
            WeightKind::Poly2 => dd * (2.0 * r - d1 - d2),
            WeightKind::Poly4 => {
                let (q1, q2) = (r - d1, r - d2);
                dd * (q1 + q2) * (q1 * q1 + q2 * q2)
            }
            WeightKind::ExactDist => dd,
            WeightKind::Unit => 0.0,
        }
    }

    /// `δ / d` as a function of the boundary distance, the bounded factor of
    /// the weight. Used where `δ^{2s}` multiplies `d^{-2s}`.
    #[inline]
    pub fn ratio_from_dist(&self, d: f64) -> f64 {
        let r = self.radius;
        match self.kind {
            WeightKind::Poly2 => 2.0 * r - d,
            WeightKind::Poly4 => {
                let q = r - d;
                (2.0 * r - d) * (r * r + q * q)
            }
            WeightKind::ExactDist => 1.0,
            WeightKind::Unit => 1.0 / d,
        }
    }
}

/// Free-function spelling of [`WeightFn::delta`].
pub fn delta_eval(w: &WeightFn, x: f64) -> f64 {
    w.delta(x)
}

/// Free-function spelling of [`WeightFn::delta_pow_s`].
pub fn delta_pow_s(w: &WeightFn, s: f64, x: f64) -> f64 {
    w.delta_pow_s(s, x)
}

/// Empirical constants of the regularity assumption on `δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightDiagnostic {
    /// Smallest `c` with `d/c <= δ <= c d` on the sample grid.
    pub comparability: f64,
    /// Empirical `c_j`, `j = 1, 2`: `sup |δ^{(j)}|` when `j <= σ`,
    /// `sup |δ^{(j)}| δ^{j-σ}` otherwise.
    pub derivative_constants: [f64; 2],
    /// `true` when no quantity blows up under grid refinement.
    pub passed: bool,
    pub violations: Vec<String>,
}

/// Check comparability with the distance and the derivative growth bound
/// for `j <= 2` on boundary-refined grids of increasing resolution. A
/// quantity that keeps growing under refinement is reported as unbounded.
pub fn check_weight_assumption(w: &WeightFn, sigma: f64, n_samples: usize) -> Result<WeightDiagnostic> {
    if n_samples < 10 {
        return Err(WfemError::Argument(format!("need at least 10 samples, got {n_samples}")));
    }
    let levels = [n_samples, 4 * n_samples, 16 * n_samples];
    let stats: Vec<[f64; 3]> = levels.iter().map(|&m| weight_stats(w, sigma, m)).collect();

    let names = ["comparability", "derivative j=1", "derivative j=2"];
    let mut violations = Vec::new();
    for (q, name) in names.iter().enumerate() {
        let (coarse, mid, fine) = (stats[0][q], stats[1][q], stats[2][q]);
        let growing = fine > 1.5 * mid && mid > 1.5 * coarse;
        if !fine.is_finite() || growing {
            violations.push(format!("{name}: {coarse:.3e} -> {mid:.3e} -> {fine:.3e} under refinement"));
        }
    }
    let last = stats[2];
    Ok(WeightDiagnostic {
        comparability: last[0],
        derivative_constants: [last[1], last[2]],
        passed: violations.is_empty(),
        violations,
    })
}

fn weight_stats(w: &WeightFn, sigma: f64, m: usize) -> [f64; 3] {
    let r = w.radius;
    let step = 2.0 * r / m as f64;
    let mut xs: Vec<f64> = (1..m).map(|i| w.a() + i as f64 * step).collect();
    // geometric refinement towards both endpoints
    let mut d = step;
    let floor = 1e-7 * r;
    while d > floor {
        d *= 0.5;
        xs.push(w.a() + d);
        xs.push(w.b() - d);
    }

    let mut comp: f64 = 1.0;
    let mut deriv = [0.0f64; 2];
    for &x in &xs {
        let dist = w.dist(x);
        let delta = w.delta(x);
        if dist <= 0.0 {
            continue;
        }
        comp = comp.max(delta / dist).max(dist / delta);

        let eta = (0.25 * step).min(0.25 * dist);
        let (lo, mid, hi) = (w.delta(x - eta), delta, w.delta(x + eta));
        let d1 = (hi - lo) / (2.0 * eta);
        let d2 = (hi - 2.0 * mid + lo) / (eta * eta);
        for (j, dj) in [d1, d2].into_iter().enumerate() {
            let order = (j + 1) as f64;
            let scaled = if order <= sigma { dj.abs() } else { dj.abs() * delta.powf(order - sigma) };
            deriv[j] = deriv[j].max(scaled);
        }
    }
    [comp, deriv[0], deriv[1]]
}

/// `κ(x) = C_{1,s} ∫_{ℝ \ (a,b)} |x - y|^{-1-2s} dy`.
pub fn killing_potential(x: f64, params: &FracParams, a: f64, b: f64) -> Result<f64> {
    if !(x > a && x < b) {
        return Err(WfemError::Domain(format!("killing potential needs x in ({a}, {b}), got {x}")));
    }
    Ok(killing_from_dists(x - a, b - x, params))
}

/// Killing potential from the distances to the left and right endpoints.
#[inline]
pub fn killing_from_dists(dl: f64, dr: f64, params: &FracParams) -> f64 {
    let two_s = 2.0 * params.s;
    params.c_norm / two_s * (dl.powf(-two_s) + dr.powf(-two_s))
}
