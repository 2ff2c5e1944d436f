//! End-to-end studies: the constant-quotient exactness case, convergence
//! with `f = 1`, the parabola example with a hypergeometric right-hand side,
//! and the pointwise interpolation comparison. Results go to CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{
    assemble_load_with, assemble_stiffness_with, galerkin_residual, solve_system, AssemblyOptions, MAX_ORDER_S,
    MIN_ORDER_S,
};
use crate::basis::{eval_pl, interp_pl, interp_weighted_from_values, WfemSpace};
use crate::error::{Result, WfemError};
use crate::error_norms::{hs_error_energy, l2_error, ErrorReport, ErrorSeries, LevelDiagnostics, LevelRow};
use crate::quadrature::rules::MAX_ORDER;
use crate::special::{
    ball_solution, ball_solution_constant, ball_solution_energy, bonito_energy, bonito_rhs, parabola, FracParams,
};
use crate::weight::WeightKind;

pub const CSV_HEADER: &str = "s,level,h,n_dofs,err_hs,err_l2,rate_hs,rate_l2";
pub const INTERP_HEADER: &str = "s,x,u_exact,nodal_interp,weighted_interp_poly2,weighted_interp_poly4,quotient_interp";
pub const INTERP_GRID_POINTS: usize = 2001;

pub const SYMMETRY_LIMIT: f64 = 1e-12;
pub const RESIDUAL_LIMIT: f64 = 1e-10;
pub const ENERGY_FLOOR: f64 = -1e-12;
pub const COEFF_DEVIATION_LIMIT: f64 = 1e-4;
/// Largest supported refinement level (`n_elems = 2^10`).
pub const MAX_LEVEL: u32 = 10;

const L2_QUAD_ORDER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Exact,
    ConvergenceF1,
    Bonito,
    InterpDemo,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Exact => "exact",
            ExperimentKind::ConvergenceF1 => "convergence_f1",
            ExperimentKind::Bonito => "bonito",
            ExperimentKind::InterpDemo => "interp_demo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub s_values: Vec<f64>,
    /// Refinement levels `k`, each meshed with `2^k` elements.
    pub levels: Vec<u32>,
    pub delta_kind: WeightKind,
    /// The domain is `(-1 + epsilon, 1 - epsilon)`.
    pub epsilon: f64,
    pub quad_order: usize,
    pub out_path: Option<PathBuf>,
    /// Write every assembled stiffness matrix next to this path.
    #[serde(default)]
    pub dump_matrix: Option<PathBuf>,
}

/// JSON form where everything but `experiment` may be omitted.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: ExperimentKind,
    s_values: Option<Vec<f64>>,
    levels: Option<Vec<u32>>,
    delta_kind: Option<WeightKind>,
    epsilon: Option<f64>,
    quad_order: Option<usize>,
    out_path: Option<PathBuf>,
    dump_matrix: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn defaults(experiment: ExperimentKind) -> Self {
        let table_s = vec![0.1, 0.2, 0.4, 0.6];
        let (s_values, levels, delta_kind, epsilon) = match experiment {
            ExperimentKind::Exact => (vec![0.1, 0.25, 0.5, 0.75], vec![4], WeightKind::Poly2, 0.0),
            ExperimentKind::ConvergenceF1 => (table_s, (2..=6).collect(), WeightKind::Poly4, 0.0),
            ExperimentKind::Bonito => (table_s, (2..=6).collect(), WeightKind::Poly4, 1e-10),
            ExperimentKind::InterpDemo => (vec![0.1, 0.4, 0.6], vec![4], WeightKind::Poly4, 0.0),
        };
        Self {
            experiment,
            s_values,
            levels,
            delta_kind,
            epsilon,
            quad_order: crate::quadrature::pair::DEFAULT_ORDER,
            out_path: None,
            dump_matrix: None,
        }
    }

    /// Parse a JSON document; missing fields take the defaults of its
    /// `experiment`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ConfigFile = serde_json::from_str(text).map_err(|e| WfemError::Parse(e.to_string()))?;
        let mut cfg = Self::defaults(file.experiment);
        if let Some(v) = file.s_values {
            cfg.s_values = v;
        }
        if let Some(v) = file.levels {
            cfg.levels = v;
        }
        if let Some(v) = file.delta_kind {
            cfg.delta_kind = v;
        }
        if let Some(v) = file.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = file.quad_order {
            cfg.quad_order = v;
        }
        cfg.out_path = file.out_path;
        cfg.dump_matrix = file.dump_matrix;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| WfemError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s_values.is_empty() {
            return Err(WfemError::Argument("no values of s given".into()));
        }
        if let Some(s) = self.s_values.iter().find(|s| !(MIN_ORDER_S..=MAX_ORDER_S).contains(*s)) {
            return Err(WfemError::Argument(format!("s = {s} outside [{MIN_ORDER_S}, {MAX_ORDER_S}]")));
        }
        if self.levels.is_empty() || self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(WfemError::Argument(format!("levels {:?} must be non-empty and increasing", self.levels)));
        }
        if let Some(k) = self.levels.iter().find(|&&k| k == 0 || k > MAX_LEVEL) {
            return Err(WfemError::Argument(format!("level {k} outside 1..={MAX_LEVEL}")));
        }
        if !(0.0..0.5).contains(&self.epsilon) {
            return Err(WfemError::Argument(format!("epsilon {} outside [0, 0.5)", self.epsilon)));
        }
        if self.quad_order == 0 || 2 * self.quad_order > MAX_ORDER {
            return Err(WfemError::Argument(format!(
                "quadrature order {} outside 1..={}",
                self.quad_order,
                MAX_ORDER / 2
            )));
        }
        if self.delta_kind == WeightKind::Unit {
            return Err(WfemError::Argument("the unit weight does not vanish on the boundary".into()));
        }
        if self.experiment == ExperimentKind::Exact && self.delta_kind != WeightKind::Poly2 {
            return Err(WfemError::Argument(format!(
                "the exactness case needs delta = poly2, got {}",
                self.delta_kind
            )));
        }
        Ok(())
    }

    fn domain(&self) -> (f64, f64) {
        (-1.0 + self.epsilon, 1.0 - self.epsilon)
    }

    fn options(&self) -> AssemblyOptions {
        AssemblyOptions { quad_order: self.quad_order, ..AssemblyOptions::default() }
    }
}

/// Problem data of one study: right-hand side, exact solution and `∫ f u*`.
trait Problem: Sync {
    fn rhs(&self, x: f64) -> f64;
    fn exact(&self, x: f64) -> f64;
    fn lin_f_ustar(&self) -> f64;
    /// Value of `u*/δ^s` when it is constant.
    fn constant_quotient(&self) -> Option<f64> {
        None
    }
}

/// `f = 1` on `(-R, R)` with `u* = c_{1,s} (R² - x²)^s`.
struct ConstantLoad {
    params: FracParams,
    radius: f64,
    quotient: Option<f64>,
}

impl Problem for ConstantLoad {
    fn rhs(&self, _: f64) -> f64 {
        1.0
    }

    fn exact(&self, x: f64) -> f64 {
        ball_solution(x, &self.params, self.radius, 0.0)
    }

    fn lin_f_ustar(&self) -> f64 {
        ball_solution_energy(&self.params, self.radius)
    }

    fn constant_quotient(&self) -> Option<f64> {
        self.quotient
    }
}

/// `u* = (1 - x²)₊` with its hypergeometric right-hand side.
struct Parabola {
    params: FracParams,
}

impl Problem for Parabola {
    fn rhs(&self, x: f64) -> f64 {
        bonito_rhs(x, &self.params).unwrap_or(f64::NAN)
    }

    fn exact(&self, x: f64) -> f64 {
        parabola(x)
    }

    fn lin_f_ustar(&self) -> f64 {
        bonito_energy(&self.params)
    }
}

fn dump_path(base: &Path, s: f64, level: u32, single: bool) -> PathBuf {
    if single {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|x| x.to_str()).unwrap_or("matrix");
    let name = match base.extension().and_then(|x| x.to_str()) {
        Some(ext) => format!("{stem}-s{s}-k{level}.{ext}"),
        None => format!("{stem}-s{s}-k{level}"),
    };
    base.with_file_name(name)
}

fn run_level(
    cfg: &ExperimentConfig,
    problem: &dyn Problem,
    s: f64,
    level: u32,
    failures: &mut Vec<String>,
) -> Result<(LevelRow, LevelDiagnostics)> {
    let start = Instant::now();
    let (a, b) = cfg.domain();
    let space = WfemSpace::uniform(a, b, 1 << level, cfg.delta_kind, s)?;
    let opts = cfg.options();
    let stiffness = assemble_stiffness_with(&space, &opts)?;
    if let Some(base) = &cfg.dump_matrix {
        let single = cfg.s_values.len() == 1 && cfg.levels.len() == 1;
        stiffness.dump(&dump_path(base, s, level, single))?;
    }
    let load = assemble_load_with(&space, &|x| problem.rhs(x), &opts)?;
    let sol = solve_system(&stiffness, &load)?;
    let residual = galerkin_residual(&stiffness, &load, &sol);
    let energy = hs_error_energy(&sol, &load, problem.lin_f_ustar())?;
    let err_l2 = l2_error(&sol, &|x| problem.exact(x), L2_QUAD_ORDER)?;
    let symmetry = stiffness.symmetry_defect();
    let deviation =
        problem.constant_quotient().map(|c| sol.coeffs.iter().fold(0.0f64, |m, v| m.max((v - c).abs() / c)));

    let tag = format!("{} s={s} level={level}", cfg.experiment.name());
    let mut breach = |check: &str, value: f64, limit: f64| {
        failures.push(format!("FAIL {tag} check={check} value={value:e} limit={limit:e}"));
    };
    if !(symmetry <= SYMMETRY_LIMIT) {
        breach("symmetry", symmetry, SYMMETRY_LIMIT);
    }
    if !(residual <= RESIDUAL_LIMIT) {
        breach("galerkin_residual", residual, RESIDUAL_LIMIT);
    }
    if energy.raw_squared < ENERGY_FLOOR {
        breach("raw_energy", energy.raw_squared, ENERGY_FLOOR);
    }
    if let Some(d) = deviation {
        if !(d <= COEFF_DEVIATION_LIMIT) {
            breach("coeff_deviation", d, COEFF_DEVIATION_LIMIT);
        }
    }

    let row = LevelRow { s, level, h: space.mesh.h(), n_dofs: space.n_dofs(), err_hs: energy.value, err_l2 };
    let diag = LevelDiagnostics {
        s,
        level,
        symmetry_defect: symmetry,
        galerkin_residual: residual,
        raw_energy: energy.raw_squared,
        quad_self_diff: stiffness.max_self_diff.max(load.self_diff),
        oracle_pairs: stiffness.oracle_pairs,
        max_coeff_deviation: deviation,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((row, diag))
}

fn run_study(cfg: &ExperimentConfig, problem_for: impl Fn(FracParams) -> Box<dyn Problem>) -> Result<ErrorReport> {
    cfg.validate()?;
    let mut report = ErrorReport::default();
    for &s in &cfg.s_values {
        let problem = problem_for(FracParams::new(s)?);
        let mut rows = Vec::with_capacity(cfg.levels.len());
        for &level in &cfg.levels {
            let (row, diag) = run_level(cfg, problem.as_ref(), s, level, &mut report.failures)?;
            rows.push(row);
            report.diagnostics.push(diag);
        }
        report.series.push(ErrorSeries::from_rows(s, rows)?);
    }
    Ok(report)
}

fn ball_radius(cfg: &ExperimentConfig) -> f64 {
    1.0 - cfg.epsilon
}

/// Constant-quotient case `f = 1`, `δ = R² - x²`: the discrete solution is
/// `u*` itself, so every coefficient equals `c_{1,s}`.
pub fn run_exact_case(cfg: &ExperimentConfig) -> Result<ErrorReport> {
    if cfg.experiment != ExperimentKind::Exact {
        return Err(WfemError::Argument(format!("run_exact_case called with {}", cfg.experiment.name())));
    }
    let radius = ball_radius(cfg);
    run_study(cfg, |params| {
        // u* = c (R² - x²)^s = c δ^s for δ = R² - x²
        let quotient = ball_solution_constant(1, params.s).ok();
        Box::new(ConstantLoad { params, radius, quotient })
    })
}

pub fn run_convergence_f1(cfg: &ExperimentConfig) -> Result<ErrorReport> {
    if cfg.experiment != ExperimentKind::ConvergenceF1 {
        return Err(WfemError::Argument(format!("run_convergence_f1 called with {}", cfg.experiment.name())));
    }
    let radius = ball_radius(cfg);
    run_study(cfg, |params| Box::new(ConstantLoad { params, radius, quotient: None }))
}

pub fn run_bonito(cfg: &ExperimentConfig) -> Result<ErrorReport> {
    if cfg.experiment != ExperimentKind::Bonito {
        return Err(WfemError::Argument(format!("run_bonito called with {}", cfg.experiment.name())));
    }
    if cfg.epsilon <= 0.0 {
        // the right-hand side is singular at x = ±1
        return Err(WfemError::Argument("the parabola example needs epsilon > 0".into()));
    }
    run_study(cfg, |params| Box::new(Parabola { params }))
}

/// Pointwise profiles for one `s`, sampled on a uniform grid of `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpProfile {
    pub s: f64,
    pub level: u32,
    pub x: Vec<f64>,
    pub exact: Vec<f64>,
    pub nodal: Vec<f64>,
    pub weighted_poly2: Vec<f64>,
    pub weighted_poly4: Vec<f64>,
    pub quotient: Vec<f64>,
}

impl InterpProfile {
    /// Largest deviation from `u*` of a column over the grid points that
    /// lie in the first or last element.
    pub fn boundary_sup_error(&self, column: &[f64]) -> f64 {
        let (a, b) = (self.x[0], self.x[self.x.len() - 1]);
        let h = (b - a) / f64::from(1u32 << self.level);
        self.x
            .iter()
            .zip(column.iter().zip(&self.exact))
            .filter(|(&x, _)| x <= a + h || x >= b - h)
            .fold(0.0f64, |m, (_, (v, e))| m.max((v - e).abs()))
    }
}

/// Nodal interpolant, weighted interpolants for both polynomial weights and
/// the interpolated quotient of the ball solution with `f = 1`.
pub fn run_interp_demo(cfg: &ExperimentConfig) -> Result<Vec<InterpProfile>> {
    if cfg.experiment != ExperimentKind::InterpDemo {
        return Err(WfemError::Argument(format!("run_interp_demo called with {}", cfg.experiment.name())));
    }
    cfg.validate()?;
    let (a, b) = cfg.domain();
    let radius = ball_radius(cfg);
    let last = INTERP_GRID_POINTS - 1;
    let grid: Vec<f64> = (0..=last).map(|i| if i == last { b } else { a + (b - a) * i as f64 / last as f64 }).collect();
    let mut out = Vec::new();
    for &s in &cfg.s_values {
        let params = FracParams::new(s)?;
        let u = |x: f64| ball_solution(x, &params, radius, 0.0);
        for &level in &cfg.levels {
            let n = 1usize << level;
            let poly2 = WfemSpace::uniform(a, b, n, WeightKind::Poly2, s)?;
            let poly4 = WfemSpace::uniform(a, b, n, WeightKind::Poly4, s)?;
            let nodal = interp_pl(u, &poly2.mesh)?;
            let j2 = interp_weighted_from_values(u, &poly2)?;
            let j4 = interp_weighted_from_values(u, &poly4)?;
            out.push(InterpProfile {
                s,
                level,
                x: grid.clone(),
                exact: grid.iter().map(|&x| u(x)).collect(),
                nodal: grid.iter().map(|&x| eval_pl(&nodal, &poly2.mesh, x)).collect(),
                weighted_poly2: grid.iter().map(|&x| j2.eval(x)).collect(),
                weighted_poly4: grid.iter().map(|&x| j4.eval(x)).collect(),
                quotient: grid.iter().map(|&x| eval_pl(&j4.coeffs, &poly4.mesh, x)).collect(),
            });
        }
    }
    Ok(out)
}

pub fn format_interp(profiles: &[InterpProfile]) -> String {
    let mut out = String::from(INTERP_HEADER);
    out.push('\n');
    for p in profiles {
        for i in 0..p.x.len() {
            let _ = writeln!(
                out,
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                p.s, p.x[i], p.exact[i], p.nodal[i], p.weighted_poly2[i], p.weighted_poly4[i], p.quotient[i]
            );
        }
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| WfemError::Io { path: path.to_path_buf(), source })
}

pub fn emit_interp(profiles: &[InterpProfile], path: &Path) -> Result<()> {
    write_file(path, &format_interp(profiles))
}

fn fmt_rate(rate: Option<f64>) -> String {
    rate.map(|r| format!("{r:?}")).unwrap_or_default()
}

/// CSV text of a report, one row per `(s, level)`. Numbers use the shortest
/// representation that parses back to the same `f64`.
pub fn format_report(report: &ErrorReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for series in &report.series {
        for (i, r) in series.rows.iter().enumerate() {
            let (rh, rl) = if i == 0 {
                (String::new(), String::new())
            } else {
                (fmt_rate(series.rates_hs[i - 1]), fmt_rate(series.rates_l2[i - 1]))
            };
            let _ =
                writeln!(out, "{:?},{},{:?},{},{:?},{:?},{rh},{rl}", r.s, r.level, r.h, r.n_dofs, r.err_hs, r.err_l2);
        }
    }
    out
}

pub fn emit_report(report: &ErrorReport, path: &Path) -> Result<()> {
    write_file(path, &format_report(report))
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, name: &str) -> Result<T> {
    field.parse().map_err(|_| WfemError::Parse(format!("line {line}: bad {name} '{field}'")))
}

fn parse_rate(field: &str, line: usize, name: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_field(field, line, name).map(Some)
    }
}

/// Inverse of [`format_report`]. Diagnostics and failures are not part of
/// the CSV and come back empty.
pub fn parse_report(text: &str) -> Result<ErrorReport> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        other => return Err(WfemError::Parse(format!("expected header '{CSV_HEADER}', got {:?}", other.map(|x| x.1)))),
    }
    let mut report = ErrorReport::default();
    for (idx, line) in lines {
        let n = idx + 1;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(WfemError::Parse(format!("line {n}: expected 8 fields, got {}", f.len())));
        }
        let row = LevelRow {
            s: parse_field(f[0], n, "s")?,
            level: parse_field(f[1], n, "level")?,
            h: parse_field(f[2], n, "h")?,
            n_dofs: parse_field(f[3], n, "n_dofs")?,
            err_hs: parse_field(f[4], n, "err_hs")?,
            err_l2: parse_field(f[5], n, "err_l2")?,
        };
        let (rate_hs, rate_l2) = (parse_rate(f[6], n, "rate_hs")?, parse_rate(f[7], n, "rate_l2")?);
        match report.series.last_mut() {
            Some(series) if series.s == row.s => {
                series.rows.push(row);
                series.rates_hs.push(rate_hs);
                series.rates_l2.push(rate_l2);
            }
            _ => {
                if rate_hs.is_some() || rate_l2.is_some() {
                    return Err(WfemError::Parse(format!("line {n}: rate on the first level of s = {}", row.s)));
                }
                report.series.push(ErrorSeries { s: row.s, rows: vec![row], rates_hs: vec![], rates_l2: vec![] });
            }
        }
    }
    Ok(report)
}

/// Fixed-width summary for the terminal.
pub fn summarize(report: &ErrorReport) -> String {
    let mut out = String::new();
    for series in &report.series {
        let _ = writeln!(out, "s = {}", series.s);
        let _ = writeln!(
            out,
            "  {:>5} {:>12} {:>6} {:>13} {:>13} {:>8} {:>8}",
            "level", "h", "dofs", "err_hs", "err_l2", "rate_hs", "rate_l2"
        );
        for (i, r) in series.rows.iter().enumerate() {
            let rate = |v: &[Option<f64>]| match i.checked_sub(1).and_then(|j| v[j]) {
                Some(x) => format!("{x:8.4}"),
                None => format!("{:>8}", "-"),
            };
            let _ = writeln!(
                out,
                "  {:>5} {:>12.6e} {:>6} {:>13.6e} {:>13.6e} {} {}",
                r.level,
                r.h,
                r.n_dofs,
                r.err_hs,
                r.err_l2,
                rate(&series.rates_hs),
                rate(&series.rates_l2)
            );
        }
    }
    out
}
