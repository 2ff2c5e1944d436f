//! Element-pair integrals of the interaction kernel.
//!
//! For elements `K, L` the local matrix holds
//! `∬_{K×L} (φ_i(x) - φ_i(y)) (φ_j(x) - φ_j(y)) |x - y|^{-1-2s} dx dy`
//! for every dof `i, j` living on `K ∪ L`. All entries of a pair are computed
//! from the same quadrature points as outer products of the increment vector,
//! so the local matrix is symmetric bit for bit.
//!
//! * identical pairs: `t = ξ - η`, `η = (1 - t) u`; the increment vanishes
//!   like `t` and the radial weight is `t^{1-2s}`.
//! * adjacent pairs: distances `ξ, η` from the shared node, split into two
//!   Duffy triangles `η = ρ w` and `ξ = ρ w`; the Jacobian adds one power of
//!   `ρ`, so the radial weight is `ρ^{2-2s}`.
//! * disjoint pairs: tensor rules.
//!
//! Elements touching the boundary get geometrically graded panels toward
//! it, where `δ^s` loses smoothness.

use crate::basis::{weighted_basis_at_dists, WfemSpace};
use crate::error::{Result, WfemError};
use crate::mesh::{element_pair_class, PairClass};
use crate::quadrature::line::{EndBehavior, Grading, LineRule};
use crate::quadrature::oracle::adaptive_integral_2d;
use crate::quadrature::rules::MAX_ORDER;

pub const DEFAULT_ORDER: usize = 16;
/// Relative disagreement between the `n` and `2n` evaluations above which
/// the order is doubled.
pub const SELF_CONVERGENCE_TOL: f64 = 1e-7;
const ORACLE_REL_TOL: f64 = 1e-9;

/// Line rules for one quadrature order and one `s`.
#[derive(Debug, Clone)]
pub struct PairRules {
    pub order: usize,
    pub s: f64,
    pub elem_interior: LineRule,
    pub elem_left: LineRule,
    pub elem_right: LineRule,
    ident_t_interior: LineRule,
    ident_t_boundary: LineRule,
    adj_rho_plain: LineRule,
    adj_rho_graded: LineRule,
}

impl PairRules {
    pub fn new(order: usize, s: f64, grading: Grading) -> Result<Self> {
        use EndBehavior::*;
        let b = |l, r| LineRule::build(order, l, r, grading);
        Ok(Self {
            order,
            s,
            elem_interior: b(Smooth, Smooth)?,
            elem_left: b(Graded(0.0), Smooth)?,
            elem_right: b(Smooth, Graded(0.0))?,
            ident_t_interior: b(Power(1.0 - 2.0 * s), Smooth)?,
            ident_t_boundary: b(Graded(1.0 - 2.0 * s), Graded(0.0))?,
            adj_rho_plain: b(Power(2.0 - 2.0 * s), Smooth)?,
            adj_rho_graded: b(Power(2.0 - 2.0 * s), Graded(0.0))?,
        })
    }

    /// Rule on element `k` of an `n_elems` mesh, graded toward a boundary end.
    pub fn element_rule(&self, k: usize, n_elems: usize) -> &LineRule {
        if k == 0 {
            &self.elem_left
        } else if k + 1 == n_elems {
            &self.elem_right
        } else {
            &self.elem_interior
        }
    }
}

/// Rule sets for the orders `n, 2n, 4n, …` up to the largest Legendre order.
#[derive(Debug, Clone)]
pub struct PairRuleCache {
    levels: Vec<PairRules>,
}

impl PairRuleCache {
    pub fn new(base_order: usize, s: f64, grading: Grading) -> Result<Self> {
        if base_order == 0 || 2 * base_order > MAX_ORDER {
            return Err(WfemError::Argument(format!("quadrature order {base_order} outside 1..={}", MAX_ORDER / 2)));
        }
        let mut levels = Vec::new();
        let mut n = base_order;
        while n <= MAX_ORDER {
            levels.push(PairRules::new(n, s, grading)?);
            n *= 2;
        }
        Ok(Self { levels })
    }

    pub fn base(&self) -> &PairRules {
        &self.levels[0]
    }

    pub fn levels(&self) -> &[PairRules] {
        &self.levels
    }
}

/// Symmetric local matrix over up to four dofs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMatrix {
    pub dofs: [usize; 4],
    pub m: usize,
    pub vals: [[f64; 4]; 4],
}

impl LocalMatrix {
    fn zeros(dofs: &[usize]) -> Self {
        let mut d = [usize::MAX; 4];
        d[..dofs.len()].copy_from_slice(dofs);
        Self { dofs: d, m: dofs.len(), vals: [[0.0; 4]; 4] }
    }

    pub fn dofs(&self) -> &[usize] {
        &self.dofs[..self.m]
    }

    fn position(&self, i: usize) -> Option<usize> {
        self.dofs().iter().position(|&d| d == i)
    }

    /// Entry for global dofs `(i, j)`; zero when either is not local.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (self.position(i), self.position(j)) {
            (Some(a), Some(b)) => self.vals[a][b],
            _ => 0.0,
        }
    }

    #[inline]
    fn add_outer(&mut self, delta: &[f64; 4], w: f64) {
        for a in 0..self.m {
            let wa = w * delta[a];
            for b in a..self.m {
                self.vals[a][b] += wa * delta[b];
            }
        }
    }

    fn finish(mut self, scale: f64) -> Self {
        for a in 0..self.m {
            for b in a..self.m {
                let v = self.vals[a][b] * scale;
                self.vals[a][b] = v;
                self.vals[b][a] = v;
            }
        }
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |self - other| / max |other|` over the shared dof layout.
    pub fn rel_diff(&self, other: &Self) -> f64 {
        let scale = other.max_abs();
        let mut diff: f64 = 0.0;
        for a in 0..self.m {
            for b in 0..self.m {
                diff = diff.max((self.vals[a][b] - other.vals[a][b]).abs());
            }
        }
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    }
}

fn pair_dofs(k: usize, l: usize) -> Vec<usize> {
    match element_pair_class(k, l) {
        PairClass::Identical => vec![k, k + 1],
        PairClass::Adjacent => vec![k, k + 1, k + 2],
        PairClass::Disjoint => vec![k, k + 1, l, l + 1],
    }
}

fn identical(space: &WfemSpace, k: usize, rules: &PairRules) -> LocalMatrix {
    let n = space.mesh.n_elems();
    let s = space.s();
    let boundary = k == 0 || k + 1 == n;
    let t_rule = if boundary { &rules.ident_t_boundary } else { &rules.ident_t_interior };
    let u_rule = if k == 0 {
        &rules.elem_left
    } else if k + 1 == n {
        &rules.elem_right
    } else {
        &rules.elem_interior
    };
    let mut mat = LocalMatrix::zeros(&[k, k + 1]);
    let exponent = -1.0 - 2.0 * s;
    for (t, tc, wt) in t_rule.iter() {
        let radial = wt * t.powf(exponent) * tc;
        for (u, uc, wu) in u_rule.iter() {
            let (xi, xic) = (t + tc * u, tc * uc);
            let (eta, etac) = (tc * u, t + tc * uc);
            // Φ(ξ) - Φ(η) = ψ(ξ) (W(ξ) - W(η)) + W(η) (ψ(ξ) - ψ(η))
            let (wy, dw) = space.weight_increment(k, (xi, xic), (eta, etac), t);
            let delta = [xic * dw - wy * t, xi * dw + wy * t, 0.0, 0.0];
            mat.add_outer(&delta, radial * wu);
        }
    }
    // the factor 2 accounts for the mirrored half ξ < η
    mat.finish(2.0 * space.mesh.h().powf(1.0 - 2.0 * s))
}

fn adjacent(space: &WfemSpace, k: usize, rules: &PairRules) -> LocalMatrix {
    let n = space.mesh.n_elems();
    let s = space.s();
    let left_bdry = k == 0;
    let right_bdry = k + 2 == n;
    let rho_rule = if left_bdry || right_bdry { &rules.adj_rho_graded } else { &rules.adj_rho_plain };
    let w_rule = |other_bdry: bool| if other_bdry { &rules.elem_right } else { &rules.elem_interior };
    let exponent = -1.0 - 2.0 * s;
    let mut mat = LocalMatrix::zeros(&[k, k + 1, k + 2]);
    // ξ: distance of x ∈ K from the shared node, η: of y ∈ L
    let mut add = |xi: f64, xic: f64, eta: f64, etac: f64, w: f64| {
        let wx = space.weight_at(&space.local_point(k, xic, xi));
        let wy = space.weight_at(&space.local_point(k + 1, eta, etac));
        let delta = [wx * xi, wx * xic - wy * etac, -wy * eta, 0.0];
        mat.add_outer(&delta, w);
    };
    for (rho, rhoc, wr) in rho_rule.iter() {
        // triangle η ≤ ξ
        for (w, wc, ww) in w_rule(right_bdry).iter() {
            let weight = wr * ww * rho * (rho * (1.0 + w)).powf(exponent);
            add(rho, rhoc, rho * w, rhoc + rho * wc, weight);
        }
        // triangle ξ ≤ η
        for (w, wc, ww) in w_rule(left_bdry).iter() {
            let weight = wr * ww * rho * (rho * (1.0 + w)).powf(exponent);
            add(rho * w, rhoc + rho * wc, rho, rhoc, weight);
        }
    }
    mat.finish(space.mesh.h().powf(1.0 - 2.0 * s))
}

fn disjoint(space: &WfemSpace, k: usize, l: usize, rules: &PairRules) -> LocalMatrix {
    debug_assert!(k + 1 < l);
    let n = space.mesh.n_elems();
    let s = space.s();
    let gap = (l - k - 1) as f64;
    let exponent = -1.0 - 2.0 * s;
    let rule_k = rules.element_rule(k, n);
    let rule_l = rules.element_rule(l, n);
    let mut mat = LocalMatrix::zeros(&[k, k + 1, l, l + 1]);
    let ys: Vec<(f64, f64, f64, f64)> =
        rule_l.iter().map(|(z, zc, wz)| (z, zc, wz, space.weight_at(&space.local_point(l, z, zc)))).collect();
    for (t, tc, wt) in rule_k.iter() {
        let wx = space.weight_at(&space.local_point(k, t, tc));
        for &(z, zc, wz, wy) in &ys {
            let dist = gap + tc + z;
            let delta = [wx * tc, wx * t, -wy * zc, -wy * z];
            mat.add_outer(&delta, wt * wz * dist.powf(exponent));
        }
    }
    mat.finish(space.mesh.h().powf(1.0 - 2.0 * s))
}

/// Local matrix of the ordered pair `(k, l)` with a fixed rule set. The
/// value is independent of the order of `k` and `l`.
pub fn local_pair_matrix(space: &WfemSpace, k: usize, l: usize, rules: &PairRules) -> LocalMatrix {
    let (k, l) = if k <= l { (k, l) } else { (l, k) };
    match element_pair_class(k, l) {
        PairClass::Identical => identical(space, k, rules),
        PairClass::Adjacent => adjacent(space, k, rules),
        PairClass::Disjoint => disjoint(space, k, l, rules),
    }
}

/// `∬_{K×L} (φ_i(x)-φ_i(y))(φ_j(x)-φ_j(y)) |x-y|^{-1-2s}` with `n` points per
/// direction and panel, without escalation.
pub fn singular_pair_integral(space: &WfemSpace, i: usize, j: usize, k: usize, l: usize, n: usize) -> Result<f64> {
    let ne = space.mesh.n_elems();
    if k >= ne || l >= ne {
        return Err(WfemError::Argument(format!("element pair ({k}, {l}) on a mesh with {ne} elements")));
    }
    let rules = PairRules::new(n, space.s(), Grading::default())?;
    Ok(local_pair_matrix(space, k, l, &rules).get(i, j))
}

/// Local matrix after the embedded convergence check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckedPair {
    pub matrix: LocalMatrix,
    /// Order of the accepted evaluation; zero when the oracle was used.
    pub order: usize,
    /// Relative disagreement of the last embedded comparison.
    pub self_diff: f64,
    pub oracle: bool,
}

/// Escalating evaluation: compare orders `n` and `2n`, doubling while they
/// disagree by more than [`SELF_CONVERGENCE_TOL`], then hand the pair to the
/// adaptive oracle.
pub fn checked_pair_matrix(space: &WfemSpace, k: usize, l: usize, cache: &PairRuleCache) -> Result<CheckedPair> {
    let levels = cache.levels();
    let mut coarse = local_pair_matrix(space, k, l, &levels[0]);
    let mut last_diff = f64::INFINITY;
    for rules in &levels[1..] {
        let fine = local_pair_matrix(space, k, l, rules);
        last_diff = coarse.rel_diff(&fine);
        if !last_diff.is_finite() {
            return Err(WfemError::Assembly {
                k,
                l,
                reason: format!("non-finite local matrix at order {}", rules.order),
            });
        }
        if last_diff <= SELF_CONVERGENCE_TOL {
            return Ok(CheckedPair { matrix: fine, order: rules.order, self_diff: last_diff, oracle: false });
        }
        coarse = fine;
    }
    let matrix = oracle_pair_matrix(space, k, l, ORACLE_REL_TOL * coarse.max_abs().max(f64::MIN_POSITIVE))
        .map_err(|e| WfemError::Assembly { k, l, reason: e.to_string() })?;
    Ok(CheckedPair { matrix, order: 0, self_diff: last_diff, oracle: true })
}

/// Entry-wise adaptive evaluation of the local matrix in physical
/// coordinates, shared by the escalation fallback and the tests.
pub fn oracle_pair_matrix(space: &WfemSpace, k: usize, l: usize, tol: f64) -> Result<LocalMatrix> {
    let (k, l) = if k <= l { (k, l) } else { (l, k) };
    let dofs = pair_dofs(k, l);
    let mut mat = LocalMatrix::zeros(&dofs);
    let (xk0, xk1) = space.mesh.element(k);
    let (xl0, xl1) = space.mesh.element(l);
    let s = space.s();
    let (a, b) = (space.mesh.a(), space.mesh.b());
    for p in 0..dofs.len() {
        for q in p..dofs.len() {
            let (i, j) = (dofs[p], dofs[q]);
            let f = |x: f64, r: f64| {
                let (dlx, drx) = (x - a, b - x);
                let (dly, dry) = (dlx + r, drx - r);
                let di = weighted_basis_at_dists(space, i, dlx, drx) - weighted_basis_at_dists(space, i, dly, dry);
                let dj = weighted_basis_at_dists(space, j, dlx, drx) - weighted_basis_at_dists(space, j, dly, dry);
                di * dj * r.abs().powf(-1.0 - 2.0 * s)
            };
            let est = adaptive_integral_2d(f, (xk0, xk1), (xl0, xl1), &[], &[], tol)?;
            mat.vals[p][q] = est.value;
            mat.vals[q][p] = est.value;
        }
    }
    Ok(mat)
}
