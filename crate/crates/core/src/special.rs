//! Gamma-type functions, the Gaussian hypergeometric function and the
//! closed-form data of the two model problems (constant load on a ball and
//! the parabola profile).

use std::f64::consts::PI;

use crate::error::{Result, WfemError};

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// Gamma function.
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(WfemError::Domain(format!("gamma of non-finite argument {x}")));
    }
    if is_nonpositive_integer(x) {
        return Err(WfemError::Domain(format!("gamma has a pole at {x}")));
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Reciprocal gamma, entire: zero at the poles of Γ.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        0.0
    } else {
        1.0 / gamma_unchecked(x)
    }
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(WfemError::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(libm::lgamma(x))
}

/// Digamma ψ(x) = Γ'(x)/Γ(x).
pub fn digamma(x: f64) -> Result<f64> {
    if is_nonpositive_integer(x) || !x.is_finite() {
        return Err(WfemError::Domain(format!("digamma has a pole at {x}")));
    }
    if x < 0.5 {
        return Ok(digamma(1.0 - x)? - PI / (PI * x).tan());
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 20.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    // Bernoulli tail B_{2k}/(2k)
    let tail =
        inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    Ok(acc + x.ln() - 0.5 / x - tail)
}

/// Order of the operator together with its normalization constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParams {
    pub s: f64,
    pub d: u32,
    pub c_norm: f64,
}

impl FracParams {
    pub fn new(s: f64) -> Result<Self> {
        Self::with_dim(1, s)
    }

    pub fn with_dim(d: u32, s: f64) -> Result<Self> {
        let c_norm = frac_lap_constant(d, s)?;
        Ok(Self { s, d, c_norm })
    }
}

fn check_order(d: u32, s: f64) -> Result<()> {
    if d == 0 {
        return Err(WfemError::Domain("dimension must be at least 1".into()));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(WfemError::Domain(format!("order s = {s} outside (0, 1)")));
    }
    Ok(())
}

/// Normalization constant `C_{d,s} = 4^s Γ(d/2+s) / (π^{d/2} |Γ(-s)|)`.
pub fn frac_lap_constant(d: u32, s: f64) -> Result<f64> {
    check_order(d, s)?;
    let half_d = 0.5 * d as f64;
    Ok(4f64.powf(s) * gamma(half_d + s)? / (PI.powf(half_d) * gamma(-s)?.abs()))
}

/// Constant `c_{d,s}` of the explicit solution for unit load on a ball.
pub fn ball_solution_constant(d: u32, s: f64) -> Result<f64> {
    check_order(d, s)?;
    let half_d = 0.5 * d as f64;
    Ok(gamma(half_d)? / (4f64.powf(s) * gamma(half_d + s)? * gamma(1.0 + s)?))
}

/// Explicit solution `c_{d,s} (R² - |x-x0|²)_+^s` for unit load on `B_R(x0)`.
pub fn ball_solution(x: f64, params: &FracParams, radius: f64, center: f64) -> f64 {
    let r = (x - center).abs();
    if r >= radius {
        return 0.0;
    }
    let c = ball_solution_constant(params.d, params.s).expect("params validated on construction");
    c * ((radius - r) * (radius + r)).powf(params.s)
}

fn pochhammer_series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..20_000 {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        if term.abs() <= 1e-17 * sum.abs() && n > 2 {
            return Ok(sum);
        }
    }
    Err(WfemError::Convergence {
        estimate: sum,
        error_bound: term.abs(),
        context: format!("2F1({a}, {b}; {c}; {z}) power series"),
    })
}

/// Direct power series, accurate for `0 <= z <= 1/2`.
pub fn hyp2f1_series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if is_nonpositive_integer(c) {
        return Err(WfemError::Domain(format!("2F1 undefined for c = {c}")));
    }
    pochhammer_series(a, b, c, z)
}

/// Evaluation through the `z -> 1 - z` connection formulas, accurate for
/// `1/2 <= z < 1`. Integer `c - a - b` uses the logarithmic forms.
pub fn hyp2f1_reflected(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if is_nonpositive_integer(c) {
        return Err(WfemError::Domain(format!("2F1 undefined for c = {c}")));
    }
    if is_nonpositive_integer(a) || is_nonpositive_integer(b) {
        // terminating series: a polynomial in z
        return pochhammer_series(a, b, c, z);
    }
    let gap = c - a - b;
    let m = gap.round();
    let dist = gap - m;
    const NEAR_INTEGER: f64 = 1e-4;
    if dist == 0.0 {
        return hyp2f1_integer_gap(a, b, c, z);
    }
    if dist.abs() < NEAR_INTEGER {
        // quadratic interpolation in c through the exact integer gap and
        // two generic evaluations far enough away to avoid cancellation
        let c0 = c - dist;
        let f0 = hyp2f1_integer_gap(a, b, c0, z)?;
        let fp = hyp2f1_generic_gap(a, b, c0 + NEAR_INTEGER, z)?;
        let fm = hyp2f1_generic_gap(a, b, c0 - NEAR_INTEGER, z)?;
        let t = dist / NEAR_INTEGER;
        return Ok(f0 + 0.5 * t * (fp - fm) + 0.5 * t * t * (fp - 2.0 * f0 + fm));
    }
    hyp2f1_generic_gap(a, b, c, z)
}

fn hyp2f1_generic_gap(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let gap = c - a - b;
    let w = 1.0 - z;
    let gc = gamma(c)?;
    let first = gc * gamma_unchecked(gap) * rgamma(c - a) * rgamma(c - b);
    let second = gc * gamma_unchecked(-gap) * rgamma(a) * rgamma(b);
    let mut value = 0.0;
    if first != 0.0 {
        value += first * pochhammer_series(a, b, 1.0 - gap, w)?;
    }
    if second != 0.0 {
        value += second * w.powf(gap) * pochhammer_series(c - a, c - b, 1.0 + gap, w)?;
    }
    Ok(value)
}

fn hyp2f1_integer_gap(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let m = (c - a - b).round();
    if m < 0.0 {
        // Euler: F(a,b;c;z) = (1-z)^{c-a-b} F(c-a, c-b; c; z), gap becomes -m
        let w = 1.0 - z;
        return Ok(w.powf(c - a - b) * hyp2f1_reflected(c - a, c - b, c, z)?);
    }
    let m = m as usize;
    let w = 1.0 - z;
    let ln_w = w.ln();
    let gc = gamma(c)?;

    let mut finite = 0.0;
    if m > 0 {
        let pref = gamma_unchecked(m as f64) * gc * rgamma(a + m as f64) * rgamma(b + m as f64);
        let mut term = 1.0;
        for n in 0..m {
            finite += term;
            let nf = n as f64;
            term *= (a + nf) * (b + nf) / ((nf + 1.0) * (1.0 - m as f64 + nf)) * w;
        }
        finite *= pref;
    }

    let mf = m as f64;
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let pref = sign * w.powi(m as i32) * gc * rgamma(a) * rgamma(b);
    let mut coef = 1.0 / gamma_unchecked(mf + 1.0);
    let mut sum = 0.0;
    for n in 0..20_000 {
        let nf = n as f64;
        let bracket =
            ln_w - digamma(nf + 1.0)? - digamma(nf + mf + 1.0)? + digamma(a + nf + mf)? + digamma(b + nf + mf)?;
        let term = coef * bracket;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() && n > 2 {
            return Ok(finite - pref * sum);
        }
        coef *= (a + mf + nf) * (b + mf + nf) / ((nf + 1.0) * (nf + mf + 1.0)) * w;
    }
    Err(WfemError::Convergence {
        estimate: finite - pref * sum,
        error_bound: f64::NAN,
        context: format!("2F1({a}, {b}; {c}; {z}) logarithmic expansion"),
    })
}

/// Gaussian hypergeometric function `₂F₁(a, b; c; z)` for `0 <= z < 1`.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&z) {
        return Err(WfemError::Domain(format!("2F1 evaluated only on [0, 1), got z = {z}")));
    }
    if z <= 0.5 {
        hyp2f1_series(a, b, c, z)
    } else {
        hyp2f1_reflected(a, b, c, z)
    }
}

/// Prefactor `4^s Γ(d/2+s) / (Γ(d/2) Γ(2-s))` of the parabola right-hand side.
pub fn bonito_prefactor(params: &FracParams) -> f64 {
    let half_d = 0.5 * params.d as f64;
    let s = params.s;
    4f64.powf(s) * gamma_unchecked(half_d + s) / (gamma_unchecked(half_d) * gamma_unchecked(2.0 - s))
}

/// Right-hand side whose solution is the parabola `(1 - |x|²)_+` on the unit ball.
pub fn bonito_rhs(x: f64, params: &FracParams) -> Result<f64> {
    if !(x.abs() < 1.0) {
        return Err(WfemError::Domain(format!("parabola right-hand side requires |x| < 1, got {x}")));
    }
    let half_d = 0.5 * params.d as f64;
    let s = params.s;
    Ok(bonito_prefactor(params) * gauss_2f1(half_d + s, s - 1.0, half_d, x * x)?)
}

/// `∫_{-1}^{1} f u dx` for the parabola problem in one dimension, i.e. its
/// squared energy seminorm, from the Euler-type integral of ₂F₁.
pub fn bonito_energy(params: &FracParams) -> f64 {
    let s = params.s;
    bonito_prefactor(params) * PI.sqrt() * gamma_unchecked(3.0 - 2.0 * s)
        / (gamma_unchecked(2.0 - s) * gamma_unchecked(3.5 - s))
}

/// `∫_{-R}^{R} c_{1,s} (R² - x²)^s dx`, the squared energy of the unit-load solution.
pub fn ball_solution_energy(params: &FracParams, radius: f64) -> f64 {
    let s = params.s;
    let c = ball_solution_constant(1, s).expect("validated");
    c * radius.powf(2.0 * s + 1.0) * PI.sqrt() * gamma_unchecked(s + 1.0) / gamma_unchecked(s + 1.5)
}

/// Parabola profile `(1 - x²)_+`.
pub fn parabola(x: f64) -> f64 {
    let r = x.abs();
    if r >= 1.0 {
        0.0
    } else {
        (1.0 - r) * (1.0 + r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_known_values() {
        assert_eq!(gamma(1.0).unwrap(), 1.0);
        assert!(rel(gamma(0.5).unwrap(), PI.sqrt()) < 1e-14);
        assert!(rel(gamma(-0.5).unwrap(), -2.0 * PI.sqrt()) < 1e-14);
        let mut fact = 1.0;
        for n in 1..20 {
            assert!(rel(gamma(n as f64).unwrap(), fact) < 1e-13, "n = {n}");
            fact *= n as f64;
        }
    }

    #[test]
    fn gamma_poles_are_errors() {
        for x in [0.0, -1.0, -7.0] {
            assert!(matches!(gamma(x), Err(WfemError::Domain(_))));
        }
        assert_eq!(rgamma(-3.0), 0.0);
    }

    #[test]
    fn ln_gamma_matches_gamma() {
        for x in [0.1, 0.7, 3.3, 17.5, 60.0] {
            let lg = ln_gamma(x).unwrap();
            assert!((lg - gamma(x).unwrap().ln()).abs() < 1e-12 * lg.abs().max(1.0), "x = {x}");
        }
    }

    #[test]
    fn digamma_reference_values() {
        let euler = 0.577_215_664_901_532_9;
        assert!((digamma(1.0).unwrap() + euler).abs() < 1e-14);
        assert!((digamma(0.5).unwrap() + euler + 2.0 * 2f64.ln()).abs() < 1e-14);
        // ψ(x+1) = ψ(x) + 1/x across the reflection branch
        for x in [-2.3, -0.4, 0.2, 0.45, 5.5] {
            let lhs = digamma(x + 1.0).unwrap();
            let rhs = digamma(x).unwrap() + 1.0 / x;
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "x = {x}");
        }
    }

    #[test]
    fn constants_in_the_half_case() {
        assert!(rel(frac_lap_constant(1, 0.5).unwrap(), 1.0 / PI) < 1e-14);
        assert!(rel(ball_solution_constant(1, 0.5).unwrap(), 1.0) < 1e-14);
        assert!(frac_lap_constant(1, 1.0).is_err());
        assert!(frac_lap_constant(1, 0.0).is_err());
        assert!(ball_solution_constant(0, 0.3).is_err());
    }

    #[test]
    fn ball_solution_profile() {
        let p = FracParams::new(0.5).unwrap();
        assert!(rel(ball_solution(0.0, &p, 1.0, 0.0), 1.0) < 1e-14);
        assert_eq!(ball_solution(1.0, &p, 1.0, 0.0), 0.0);
        assert_eq!(ball_solution(-1.0, &p, 1.0, 0.0), 0.0);
        assert_eq!(ball_solution(3.0, &p, 1.0, 0.0), 0.0);
    }

    #[test]
    fn hypergeometric_closed_forms() {
        assert_eq!(gauss_2f1(0.3, 1.7, 2.2, 0.0).unwrap(), 1.0);
        assert_eq!(gauss_2f1(0.3, 0.0, 2.2, 0.9).unwrap(), 1.0);
        let v = gauss_2f1(1.0, 1.0, 2.0, 0.5).unwrap();
        assert!(rel(v, 2.0 * 2f64.ln()) < 1e-13);
        // the log-branch with integer gap, F(1,1;2;z) = -ln(1-z)/z
        for z in [0.6, 0.9, 0.999, 1.0 - 1e-9] {
            let v = gauss_2f1(1.0, 1.0, 2.0, z).unwrap();
            assert!(rel(v, -(1.0 - z).ln() / z) < 1e-12, "z = {z}");
        }
        // F(a,b;b;z) = (1-z)^{-a}, generic gap
        for z in [0.55, 0.8, 0.99] {
            let v = gauss_2f1(0.3, 1.7, 1.7, z).unwrap();
            assert!(rel(v, (1.0 - z).powf(-0.3)) < 1e-12, "z = {z}");
        }
        assert!(gauss_2f1(1.0, 1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn bonito_rhs_at_origin() {
        let p = FracParams::new(0.5).unwrap();
        assert!(rel(bonito_rhs(0.0, &p).unwrap(), 4.0 / PI) < 1e-13);
        assert!(bonito_rhs(1.0, &p).is_err());
    }

    #[test]
    fn energies_reduce_to_classical_integrals() {
        let p = FracParams::new(0.5).unwrap();
        assert!(rel(ball_solution_energy(&p, 1.0), PI / 2.0) < 1e-14);
        // s -> 0 limit of the parabola energy is ∫(1-x²)² = 16/15
        let p = FracParams::new(1e-9).unwrap();
        assert!(rel(bonito_energy(&p), 16.0 / 15.0) < 1e-7);
    }

    #[test]
    fn parabola_energy_matches_quadrature() {
        use crate::quadrature::oracle::adaptive_integral;
        for s in [0.1, 0.3, 0.6, 0.9] {
            let p = FracParams::new(s).unwrap();
            let integrand = |x: f64| bonito_rhs(x, &p).map_or(0.0, |f| f * parabola(x));
            let est = adaptive_integral(integrand, -1.0, 1.0, &[0.0], 1e-12).unwrap();
            assert!(rel(est.value, bonito_energy(&p)) < 1e-10, "s = {s}: {} vs {}", est.value, bonito_energy(&p));
        }
    }
}
