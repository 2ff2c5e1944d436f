//! Gauss–Legendre and Gauss–Jacobi rules on `[-1, 1]`.
//!
//! Nodes are seeded by the Golub–Welsch eigenvalue problem and polished by
//! Newton iteration on the monic recurrence; weights come from the
//! Christoffel formula, which keeps small weights accurate to full relative
//! precision.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::DMatrix;

use crate::error::{Result, WfemError};
use crate::special::ln_gamma;

pub const MAX_ORDER: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleKind {
    Legendre,
    /// Weight `(1 - x)^alpha (1 + x)^beta`.
    Jacobi {
        alpha: f64,
        beta: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: RuleKind,
    pub order: usize,
}

impl QuadRule {
    /// `Σ w_i f(x_i)` on the reference interval.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Weighted measure `∫_{-1}^{1} (1-x)^α (1+x)^β dx` of the reference interval.
    pub fn total_measure(&self) -> f64 {
        match self.kind {
            RuleKind::Legendre => 2.0,
            RuleKind::Jacobi { alpha, beta } => jacobi_mu0(alpha, beta),
        }
    }
}

fn jacobi_mu0(alpha: f64, beta: f64) -> f64 {
    if alpha == 0.0 && beta == 0.0 {
        return 2.0;
    }
    let ln = (alpha + beta + 1.0) * 2f64.ln() + ln_gamma(alpha + 1.0).unwrap() + ln_gamma(beta + 1.0).unwrap()
        - ln_gamma(alpha + beta + 2.0).unwrap();
    ln.exp()
}

/// Diagonal and squared off-diagonal of the monic Jacobi recurrence.
fn recurrence(n: usize, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    let ab = alpha + beta;
    let mut diag = Vec::with_capacity(n);
    let mut off2 = vec![0.0; n];
    for k in 0..n {
        let kf = k as f64;
        let d = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        diag.push(d);
        if k >= 1 {
            off2[k] = if k == 1 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                let t = 2.0 * kf + ab;
                4.0 * kf * (kf + alpha) * (kf + beta) * (kf + ab) / (t * t * (t + 1.0) * (t - 1.0))
            };
        }
    }
    (diag, off2)
}

/// Monic `p_{n-1}(x)`, `p_n(x)` and `p_n'(x)`.
fn monic_eval(x: f64, diag: &[f64], off2: &[f64]) -> (f64, f64, f64) {
    let n = diag.len();
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut dp_prev, mut dp) = (0.0, 0.0);
    for k in 0..n {
        let b = if k == 0 { 0.0 } else { off2[k] };
        let p_next = (x - diag[k]) * p - b * p_prev;
        let dp_next = p + (x - diag[k]) * dp - b * dp_prev;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    (p_prev, p, dp)
}

fn build_rule(n: usize, alpha: f64, beta: f64) -> QuadRule {
    let (diag, off2) = recurrence(n, alpha, beta);
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        jacobi[(k, k)] = diag[k];
        if k + 1 < n {
            let b = off2[k + 1].sqrt();
            jacobi[(k, k + 1)] = b;
            jacobi[(k + 1, k)] = b;
        }
    }
    let mut nodes: Vec<f64> = jacobi.symmetric_eigen().eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mu0 = jacobi_mu0(alpha, beta);
    let norm: f64 = mu0 * off2.iter().skip(1).product::<f64>();
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..8 {
            let (_, p, dp) = monic_eval(*x, &diag, &off2);
            let step = p / dp;
            *x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1e-3) {
                break;
            }
        }
        let (p_prev, _, dp) = monic_eval(*x, &diag, &off2);
        weights.push(norm / (p_prev * dp));
    }
    let kind = if alpha == 0.0 && beta == 0.0 { RuleKind::Legendre } else { RuleKind::Jacobi { alpha, beta } };
    QuadRule { nodes, weights, kind, order: n }
}

type RuleKey = (usize, u64, u64);

fn cache() -> &'static RwLock<HashMap<RuleKey, Arc<QuadRule>>> {
    static CACHE: OnceLock<RwLock<HashMap<RuleKey, Arc<QuadRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn cached(n: usize, alpha: f64, beta: f64) -> Arc<QuadRule> {
    let key = (n, alpha.to_bits(), beta.to_bits());
    if let Some(rule) = cache().read().unwrap().get(&key) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(build_rule(n, alpha, beta));
    cache().write().unwrap().entry(key).or_insert(rule).clone()
}

/// `n`-point Gauss–Legendre rule, `1 <= n <= 64`.
pub fn gauss_legendre(n: usize) -> Result<Arc<QuadRule>> {
    if n == 0 || n > MAX_ORDER {
        return Err(WfemError::Argument(format!("Legendre order {n} outside 1..={MAX_ORDER}")));
    }
    Ok(cached(n, 0.0, 0.0))
}

/// `n`-point Gauss–Jacobi rule for the weight `(1 - x)^alpha (1 + x)^beta`.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Result<Arc<QuadRule>> {
    if n == 0 || n > 2 * MAX_ORDER {
        return Err(WfemError::Argument(format!("Jacobi order {n} outside 1..={}", 2 * MAX_ORDER)));
    }
    if !(alpha > -1.0 && beta > -1.0) || !alpha.is_finite() || !beta.is_finite() {
        return Err(WfemError::Argument(format!("Jacobi exponents must exceed -1, got ({alpha}, {beta})")));
    }
    Ok(cached(n, alpha, beta))
}
