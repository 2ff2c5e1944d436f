//! Dense stiffness matrix, load vector and the Cholesky solve.
//!
//! The bilinear form is split as
//! `a(u, v) = C/2 ∬_{Ω×Ω} (u(x)-u(y))(v(x)-v(y)) |x-y|^{-1-2s} + ∫_Ω u v κ`,
//! where `κ` is the killing potential of the exterior. The double integral
//! is a sum over element pairs; the mass term uses `δ^{2s} κ`, which is
//! bounded up to the boundary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::basis::{weighted_basis_at_dists, DiscreteSolution, WfemSpace};
use crate::error::{Result, WfemError};
use crate::quadrature::line::Grading;
use crate::quadrature::oracle::{adaptive_integral, adaptive_integral_2d};
use crate::quadrature::pair::{checked_pair_matrix, PairRuleCache, PairRules, DEFAULT_ORDER, SELF_CONVERGENCE_TOL};

pub const MIN_ORDER_S: f64 = 0.05;
pub const MAX_ORDER_S: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyOptions {
    /// Base Gauss order per panel and direction.
    pub quad_order: usize,
    pub grading: Grading,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { quad_order: DEFAULT_ORDER, grading: Grading::default() }
    }
}

/// Dense symmetric stiffness matrix `A_ij = a(φ_j, φ_i)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessMatrix {
    pub n: usize,
    pub entries: Vec<f64>,
    pub space: WfemSpace,
    /// Largest relative `n` vs `2n` disagreement over all local matrices.
    pub max_self_diff: f64,
    /// Highest Gauss order that had to be used.
    pub max_order: usize,
    /// Pairs that fell through to the adaptive oracle.
    pub oracle_pairs: usize,
}

impl StiffnessMatrix {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A_ij - A_ji| / max |A_ij|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                d = d.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        let scale = self.max_abs();
        if scale > 0.0 {
            d / scale
        } else {
            d
        }
    }

    /// Row-major text dump, one row per line, 17 significant digits.
    pub fn dump(&self, path: &Path) -> Result<()> {
        let io = |e| WfemError::Io { path: path.to_path_buf(), source: e };
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        for i in 0..self.n {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", line.join(" ")).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadVector {
    pub values: Vec<f64>,
    /// Relative disagreement between the two quadrature orders.
    pub self_diff: f64,
}

impl LoadVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.values.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

fn check_order(s: f64) -> Result<()> {
    if !(MIN_ORDER_S..=MAX_ORDER_S).contains(&s) {
        return Err(WfemError::Domain(format!("assembly supports s in [{MIN_ORDER_S}, {MAX_ORDER_S}], got {s}")));
    }
    Ok(())
}

/// `∫_K φ_a φ_b κ` for the two dofs of element `k`, as `[aa, ab, bb]`.
fn killing_element(space: &WfemSpace, k: usize, rules: &PairRules) -> [f64; 3] {
    let two_s = 2.0 * space.s();
    let rule = rules.element_rule(k, space.mesh.n_elems());
    let mut acc = [0.0; 3];
    for (t, tc, w) in rule.iter() {
        let p = space.local_point(k, t, tc);
        let delta = space.weight.from_dist(p.dl.min(p.dr));
        // δ^{2s} κ without forming either singular factor
        let g = (delta / p.dl).powf(two_s) + (delta / p.dr).powf(two_s);
        let wg = w * g;
        acc[0] += wg * tc * tc;
        acc[1] += wg * tc * t;
        acc[2] += wg * t * t;
    }
    let scale = space.mesh.h() * space.params.c_norm / two_s;
    acc.map(|v| v * scale)
}

fn killing_checked(space: &WfemSpace, k: usize, cache: &PairRuleCache) -> Result<([f64; 3], f64)> {
    let levels = cache.levels();
    let mut coarse = killing_element(space, k, &levels[0]);
    let mut diff = f64::INFINITY;
    for rules in &levels[1..] {
        let fine = killing_element(space, k, rules);
        let scale = fine.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        diff = coarse.iter().zip(&fine).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
        if diff <= SELF_CONVERGENCE_TOL {
            return Ok((fine, diff));
        }
        coarse = fine;
    }
    Err(WfemError::Assembly { k, l: k, reason: format!("killing term did not converge (relative change {diff:e})") })
}

/// Stiffness matrix with default options.
pub fn assemble_stiffness(space: &WfemSpace) -> Result<StiffnessMatrix> {
    assemble_stiffness_with(space, &AssemblyOptions::default())
}

pub fn assemble_stiffness_with(space: &WfemSpace, opts: &AssemblyOptions) -> Result<StiffnessMatrix> {
    check_order(space.s())?;
    let cache = PairRuleCache::new(opts.quad_order, space.s(), opts.grading)?;
    let ne = space.mesh.n_elems();
    let n = space.n_dofs();
    let pairs: Vec<(usize, usize)> = (0..ne).flat_map(|k| (k..ne).map(move |l| (k, l))).collect();
    let locals =
        pairs.par_iter().map(|&(k, l)| checked_pair_matrix(space, k, l, &cache)).collect::<Result<Vec<_>>>()?;
    let kappa = (0..ne).into_par_iter().map(|k| killing_checked(space, k, &cache)).collect::<Result<Vec<_>>>()?;

    let mut entries = vec![0.0; n * n];
    let half_c = 0.5 * space.params.c_norm;
    let mut max_self_diff: f64 = 0.0;
    let mut max_order = 0;
    let mut oracle_pairs = 0;
    for (&(k, l), local) in pairs.iter().zip(&locals) {
        let factor = if k == l { half_c } else { 2.0 * half_c };
        let dofs = local.matrix.dofs();
        for (a, &i) in dofs.iter().enumerate() {
            for (b, &j) in dofs.iter().enumerate() {
                entries[i * n + j] += factor * local.matrix.vals[a][b];
            }
        }
        max_self_diff = max_self_diff.max(local.self_diff);
        max_order = max_order.max(local.order);
        oracle_pairs += usize::from(local.oracle);
    }
    for (k, (m, diff)) in kappa.iter().enumerate() {
        entries[k * n + k] += m[0];
        entries[k * n + k + 1] += m[1];
        entries[(k + 1) * n + k] += m[1];
        entries[(k + 1) * n + k + 1] += m[2];
        max_self_diff = max_self_diff.max(*diff);
    }
    Ok(StiffnessMatrix { n, entries, space: space.clone(), max_self_diff, max_order, oracle_pairs })
}

fn load_at_order(space: &WfemSpace, f: &(dyn Fn(f64) -> f64 + Sync), rules: &PairRules) -> Result<Vec<f64>> {
    let ne = space.mesh.n_elems();
    let (a, b) = (space.mesh.a(), space.mesh.b());
    let h = space.mesh.h();
    let mut values = vec![0.0; space.n_dofs()];
    for k in 0..ne {
        let mut acc = [0.0; 2];
        for (t, tc, w) in rules.element_rule(k, ne).iter() {
            let p = space.local_point(k, t, tc);
            let x = if p.dl <= p.dr { a + p.dl } else { b - p.dr };
            let fx = f(x);
            if !fx.is_finite() {
                return Err(WfemError::Input(format!("right-hand side {fx} at x = {x}")));
            }
            let wf = w * fx * space.weight_at(&p);
            acc[0] += wf * tc;
            acc[1] += wf * t;
        }
        values[k] += h * acc[0];
        values[k + 1] += h * acc[1];
    }
    Ok(values)
}

/// `b_i = ∫_Ω f φ_i`, evaluated at two orders; the finer one is kept.
pub fn assemble_load(space: &WfemSpace, f: &(dyn Fn(f64) -> f64 + Sync)) -> Result<LoadVector> {
    assemble_load_with(space, f, &AssemblyOptions::default())
}

pub fn assemble_load_with(
    space: &WfemSpace,
    f: &(dyn Fn(f64) -> f64 + Sync),
    opts: &AssemblyOptions,
) -> Result<LoadVector> {
    let coarse_rules = PairRules::new(opts.quad_order, space.s(), opts.grading)?;
    let fine_rules = PairRules::new(2 * opts.quad_order, space.s(), opts.grading)?;
    let coarse = load_at_order(space, f, &coarse_rules)?;
    let values = load_at_order(space, f, &fine_rules)?;
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = coarse.iter().zip(&values).fold(0.0f64, |m, (c, v)| m.max((c - v).abs()));
    let self_diff = if scale > 0.0 { diff / scale } else { diff };
    Ok(LoadVector { values, self_diff })
}

/// Lower Cholesky factor, row-major.
pub fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for p in 0..j {
            d -= l[j * n + p] * l[j * n + p];
        }
        if !(d > 0.0) {
            return Err(WfemError::Factorization { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for p in 0..j {
                v -= l[i * n + p] * l[j * n + p];
            }
            l[i * n + j] = v / djj;
        }
    }
    Ok(l)
}

/// Solve `L Lᵀ x = b`.
pub fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        for p in 0..i {
            y[i] -= l[i * n + p] * y[p];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for p in i + 1..n {
            y[i] -= l[p * n + i] * y[p];
        }
        y[i] /= l[i * n + i];
    }
    y
}

/// Dense Cholesky solve of the Galerkin system.
pub fn solve_system(a: &StiffnessMatrix, b: &LoadVector) -> Result<DiscreteSolution> {
    if a.n != b.len() {
        return Err(WfemError::Argument(format!("matrix of size {} with load of length {}", a.n, b.len())));
    }
    let l = cholesky(&a.entries, a.n)?;
    let coeffs = cholesky_solve(&l, a.n, &b.values);
    DiscreteSolution::new(a.space.clone(), coeffs)
}

/// `‖A c - b‖∞ / ‖b‖∞`, or the absolute residual when `b = 0`.
pub fn galerkin_residual(a: &StiffnessMatrix, b: &LoadVector, sol: &DiscreteSolution) -> f64 {
    let ac = a.mul_vec(&sol.coeffs);
    let r = ac.iter().zip(&b.values).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let nb = b.norm_inf();
    if nb > 0.0 {
        r / nb
    } else {
        r
    }
}

/// `a(φ_j, φ_i)` by brute-force adaptive integration over `Ω × Ω` plus the
/// killing term, independent of the element-pair rules.
pub fn oracle_stiffness_entry(space: &WfemSpace, i: usize, j: usize, tol: f64) -> Result<f64> {
    let (a, b) = (space.mesh.a(), space.mesh.b());
    let s = space.s();
    let nodes = space.mesh.nodes();
    let interaction = adaptive_integral_2d(
        |x, r| {
            let (dlx, drx) = (x - a, b - x);
            let (dly, dry) = (dlx + r, drx - r);
            let di = weighted_basis_at_dists(space, i, dlx, drx) - weighted_basis_at_dists(space, i, dly, dry);
            let dj = weighted_basis_at_dists(space, j, dlx, drx) - weighted_basis_at_dists(space, j, dly, dry);
            if di == 0.0 || dj == 0.0 {
                return 0.0;
            }
            di * dj * r.abs().powf(-1.0 - 2.0 * s)
        },
        (a, b),
        (a, b),
        nodes,
        nodes,
        tol / space.params.c_norm,
    )?;
    let killing = adaptive_integral(
        |x| {
            let (dl, dr) = (x - a, b - x);
            let pi = weighted_basis_at_dists(space, i, dl, dr);
            let pj = weighted_basis_at_dists(space, j, dl, dr);
            if pi == 0.0 || pj == 0.0 {
                return 0.0;
            }
            pi * pj * crate::weight::killing_from_dists(dl, dr, &space.params)
        },
        a,
        b,
        nodes,
        tol / 4.0,
    )?;
    Ok(0.5 * space.params.c_norm * interaction.value + killing.value)
}
