//! Hat functions, the weighted basis `δ^s ψ_i`, discrete functions and the
//! two interpolants (`I_h` nodal piecewise linear, `J_h = δ^s I_h(v/δ^s)`).

use crate::error::{Result, WfemError};
use crate::mesh::Mesh1D;
use crate::special::FracParams;
use crate::weight::{WeightFn, WeightKind};

/// Discrete space `V_h = { δ^s v : v piecewise linear }`, one degree of
/// freedom per mesh node including the two boundary nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct WfemSpace {
    pub mesh: Mesh1D,
    pub weight: WeightFn,
    pub params: FracParams,
}

/// Point inside element `k` given by its local coordinate and complement,
/// with exact distances to both interval endpoints.
#[derive(Debug, Clone, Copy)]
pub struct LocalPoint {
    pub x: f64,
    pub dl: f64,
    pub dr: f64,
}

impl WfemSpace {
    pub fn new(mesh: Mesh1D, weight_kind: WeightKind, params: FracParams) -> Result<Self> {
        let weight = WeightFn::new(weight_kind, mesh.a(), mesh.b())?;
        Ok(Self { mesh, weight, params })
    }

    pub fn uniform(a: f64, b: f64, n_elems: usize, weight_kind: WeightKind, s: f64) -> Result<Self> {
        Self::new(Mesh1D::uniform(a, b, n_elems)?, weight_kind, FracParams::new(s)?)
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_nodes()
    }

    pub fn s(&self) -> f64 {
        self.params.s
    }

    /// Point with local coordinate `tau` (complement `tau_c = 1 - tau`) in element `k`.
    #[inline]
    pub fn local_point(&self, k: usize, tau: f64, tau_c: f64) -> LocalPoint {
        let h = self.mesh.h();
        let n = self.mesh.n_elems();
        let dl = h * (k as f64 + tau);
        let dr = h * ((n - k - 1) as f64 + tau_c);
        LocalPoint { x: self.mesh.a() + dl, dl, dr }
    }

    /// `δ^s` at a local point.
    #[inline]
    pub fn weight_at(&self, p: &LocalPoint) -> f64 {
        self.weight.from_dist(p.dl.min(p.dr)).powf(self.params.s)
    }

    /// `(W(q), W(p) - W(q))` with `W = δ^s`, for two points of element `k`
    /// whose local coordinates differ by `t = τ_p - τ_q > 0`. The difference
    /// keeps full relative accuracy as `t → 0`.
    #[inline]
    pub fn weight_increment(&self, k: usize, p: (f64, f64), q: (f64, f64), t: f64) -> (f64, f64) {
        let pp = self.local_point(k, p.0, p.1);
        let pq = self.local_point(k, q.0, q.1);
        let wq = self.weight_at(&pq);
        let h = self.mesh.h();
        let delta_q = self.weight.from_dist(pq.dl.min(pq.dr));
        let d_delta = if pp.dl <= pp.dr && pq.dl <= pq.dr {
            self.weight.diff_from_dists(pp.dl, pq.dl, h * t)
        } else if pp.dr < pp.dl && pq.dr < pq.dl {
            self.weight.diff_from_dists(pp.dr, pq.dr, -h * t)
        } else {
            return (wq, self.weight_at(&pp) - wq);
        };
        // without cancellation the plain difference is already accurate
        if !(d_delta.abs() <= 0.5 * delta_q) {
            return (wq, self.weight_at(&pp) - wq);
        }
        (wq, wq * (self.params.s * (d_delta / delta_q).ln_1p()).exp_m1())
    }

    /// Values of the two weighted basis functions `φ_k, φ_{k+1}` living on element `k`.
    #[inline]
    pub fn local_basis(&self, k: usize, tau: f64, tau_c: f64) -> [f64; 2] {
        let w = self.weight_at(&self.local_point(k, tau, tau_c));
        [w * tau_c, w * tau]
    }
}

/// Hat function `ψ_i` of the mesh.
pub fn hat_eval(mesh: &Mesh1D, i: usize, x: f64) -> f64 {
    let nodes = mesh.nodes();
    let xi = nodes[i];
    let h = mesh.h();
    if x < mesh.a() || x > mesh.b() {
        return 0.0;
    }
    if i > 0 && x >= nodes[i - 1] && x <= xi {
        return (x - nodes[i - 1]) / h;
    }
    if i + 1 < nodes.len() && x >= xi && x <= nodes[i + 1] {
        return (nodes[i + 1] - x) / h;
    }
    0.0
}

/// Weighted basis function `φ_i = δ^s ψ_i`.
pub fn weighted_basis_eval(space: &WfemSpace, i: usize, x: f64) -> f64 {
    let psi = hat_eval(&space.mesh, i, x);
    if psi == 0.0 {
        return 0.0;
    }
    psi * space.weight.delta_pow_s(space.s(), x)
}

/// `φ_i` at the point with distances `dl, dr` to the two endpoints. Near
/// an endpoint the distances carry more precision than the coordinate.
pub fn weighted_basis_at_dists(space: &WfemSpace, i: usize, dl: f64, dr: f64) -> f64 {
    if !(dl > 0.0 && dr > 0.0) {
        return 0.0;
    }
    let h = space.mesh.h();
    let n = space.mesh.n_elems();
    // offset from node i, measured from its nearer endpoint
    let off = if i <= n / 2 { dl - h * i as f64 } else { h * (n - i) as f64 - dr };
    let psi = 1.0 - off.abs() / h;
    if psi <= 0.0 {
        return 0.0;
    }
    psi * space.weight.from_dist(dl.min(dr)).powf(space.s())
}

/// Coefficients of `u_h / δ^s` in the hat basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    pub space: WfemSpace,
    pub coeffs: Vec<f64>,
}

impl DiscreteSolution {
    pub fn new(space: WfemSpace, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return Err(WfemError::Argument(format!(
                "{} coefficients for a space with {} dofs",
                coeffs.len(),
                space.n_dofs()
            )));
        }
        Ok(Self { space, coeffs })
    }

    /// `u_h(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        eval_solution(self, x)
    }

    /// `u_h` at the local point of element `k`.
    #[inline]
    pub fn eval_local(&self, k: usize, tau: f64, tau_c: f64) -> f64 {
        let [l, r] = self.space.local_basis(k, tau, tau_c);
        self.coeffs[k] * l + self.coeffs[k + 1] * r
    }
}

/// `δ(x)^s Σ_i c_i ψ_i(x)`; zero outside the interval.
pub fn eval_solution(sol: &DiscreteSolution, x: f64) -> f64 {
    match sol.space.mesh.locate(x) {
        None => 0.0,
        Some(k) => {
            let nodes = sol.space.mesh.nodes();
            let tau = (x - nodes[k]) / sol.space.mesh.h();
            let lin = sol.coeffs[k] * (1.0 - tau) + sol.coeffs[k + 1] * tau;
            lin * sol.space.weight.delta_pow_s(sol.space.s(), x)
        }
    }
}

fn sample_nodes(g: &dyn Fn(f64) -> f64, mesh: &Mesh1D) -> Result<Vec<f64>> {
    mesh.nodes()
        .iter()
        .map(|&x| {
            let v = g(x);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(WfemError::Input(format!("sample {v} at node {x}")))
            }
        })
        .collect()
}

/// Nodal piecewise-linear interpolant `I_h g`, as nodal values.
pub fn interp_pl(g: impl Fn(f64) -> f64, mesh: &Mesh1D) -> Result<Vec<f64>> {
    sample_nodes(&g, mesh)
}

/// Evaluate a piecewise-linear function given by nodal values.
pub fn eval_pl(values: &[f64], mesh: &Mesh1D, x: f64) -> f64 {
    match mesh.locate(x) {
        None => 0.0,
        Some(k) => {
            let tau = (x - mesh.nodes()[k]) / mesh.h();
            values[k] * (1.0 - tau) + values[k + 1] * tau
        }
    }
}

/// Weighted interpolant `J_h v = δ^s I_h(v/δ^s)` from the quotient `v/δ^s`,
/// which the caller supplies so that boundary nodes need no `0/0` limit.
pub fn interp_weighted(g_quotient: impl Fn(f64) -> f64, space: &WfemSpace) -> Result<DiscreteSolution> {
    let coeffs = sample_nodes(&g_quotient, &space.mesh)?;
    DiscreteSolution::new(space.clone(), coeffs)
}

/// `J_h v` when only `v` is available. Interior nodes use `v/δ^s` directly;
/// the removable limit at the two boundary nodes is approximated by linear
/// Richardson extrapolation from the quotient at distances `h/4` and `h/8`.
/// Exact only when the quotient is affine near the boundary.
pub fn interp_weighted_from_values(v: impl Fn(f64) -> f64, space: &WfemSpace) -> Result<DiscreteSolution> {
    let mesh = &space.mesh;
    let s = space.s();
    let quotient = |x: f64| v(x) / space.weight.delta_pow_s(s, x);
    let h = mesh.h();
    let n = mesh.n_nodes();
    let mut coeffs = Vec::with_capacity(n);
    for (i, &x) in mesh.nodes().iter().enumerate() {
        let q = if i == 0 || i + 1 == n {
            let inward = if i == 0 { 1.0 } else { -1.0 };
            let near = quotient(x + inward * h / 8.0);
            let far = quotient(x + inward * h / 4.0);
            2.0 * near - far
        } else {
            quotient(x)
        };
        if !q.is_finite() {
            return Err(WfemError::Input(format!("quotient {q} at node {x}")));
        }
        coeffs.push(q);
    }
    DiscreteSolution::new(space.clone(), coeffs)
}
