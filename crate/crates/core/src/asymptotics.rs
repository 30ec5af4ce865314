//! Large-T asymptotics of `ln det_2 W_T(psi)`:
//! `T ln G2 + (sum alpha_j beta_j) ln(T/2) + ln E1 + ln E2 + ln E3`.

use crate::error::{invalid, Error, Result};
use crate::quad::{PanelPlan, GRADING_FLOOR};
use crate::specfun::{log_fh_constant, principal_ln, C64};
use crate::symbols::{smooth_remainder, FhSingularity, Support, SymbolSpec};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

/// Terms of the `1/omega` expansion used for algebraic tails.
const TAIL_TERMS: usize = 16;
/// Algebraic symbols are integrated numerically over this many expansion radii.
const WINDOW_FACTOR: f64 = 20.0;
/// Panels on `s in (0, 1]` for each substituted tail `u = edge +- scale (1/s - 1)`.
const TAIL_PANELS: usize = 24;
/// Phases within this distance of the branch cut raise a warning.
const CUT_MARGIN: f64 = 1e-6;
/// `L` is continuous, so the E2 integrand is integrable at graded points and
/// grading past this depth only adds pairs to the quadratic double sum.
const E2_GRADING_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `det_2`, rate `ln G2`.
    Regularized,
    /// `det`, rate `ln G1`.
    Ordinary,
}

/// Every term of the asymptotic formula.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticDecomposition {
    pub log_g2_rate: C64,
    pub exponent: C64,
    pub log_e1: C64,
    pub log_e2: C64,
    pub log_e3: C64,
    pub variant: Variant,
    /// Near-cut branch choices in `E3`.
    pub warnings: Vec<String>,
}

impl AsymptoticDecomposition {
    pub fn zero(variant: Variant) -> Self {
        let z = C64::new(0.0, 0.0);
        Self {
            log_g2_rate: z,
            exponent: z,
            log_e1: z,
            log_e2: z,
            log_e3: z,
            variant,
            warnings: Vec::new(),
        }
    }

    /// `ln E1 + ln E2 + ln E3`.
    pub fn log_constant(&self) -> C64 {
        self.log_e1 + self.log_e2 + self.log_e3
    }

    /// `T ln G + exponent ln(T/2) + ln E`.
    pub fn predict_at(&self, t: f64) -> C64 {
        self.log_g2_rate * t + self.exponent * (0.5 * t).ln() + self.log_constant()
    }
}

/// Panel layout for a frequency integral of one symbol.
fn frequency_plan(spec: &SymbolSpec) -> (PanelPlan, f64) {
    let layout = spec.layout();
    let (lo, hi, w) = match layout.support {
        Support::Compact { lo, hi } => (lo, hi, 0.0),
        Support::Algebraic { radius } => {
            let w = WINDOW_FACTOR * radius;
            (-w, w, w)
        }
    };
    (PanelPlan::new(lo, hi, &layout.graded, layout.max_width), w)
}

/// `int_{|omega| > w} sum_n c_n omega^{-n}` for `n >= 2` (odd powers cancel).
fn algebraic_tail(coeffs: &[C64], w: f64) -> C64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let n = k + 1;
            if n % 2 == 0 {
                c * (2.0 * w.powi(1 - n as i32) / (n - 1) as f64)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .sum()
}

fn check_branch(values: &[(f64, C64)], spec: &SymbolSpec) -> Result<()> {
    // the continuous log may jump only across a singular point, by less than pi
    for pair in values.windows(2) {
        let ((w0, a), (w1, b)) = (pair[0], pair[1]);
        let across = spec
            .singularities()
            .iter()
            .any(|s| s.location > w0 && s.location < w1);
        let step = (b.im - a.im).abs();
        if step > PI || (!across && step > 0.5 * PI) {
            return Err(Error::BranchDiscontinuity { omega: 0.5 * (w0 + w1) });
        }
    }
    Ok(())
}

/// `ln G2 = (1/2pi) int (ln psi - psi + 1) d omega`.
pub fn log_g2(spec: &SymbolSpec) -> Result<C64> {
    if spec.is_trivial() {
        return Ok(C64::new(0.0, 0.0));
    }
    let (plan, w) = frequency_plan(spec);
    let (nodes, weights) = plan.nodes_and_weights();
    let mut acc = C64::new(0.0, 0.0);
    let mut logs = Vec::with_capacity(nodes.len());
    for (&x, &wt) in nodes.iter().zip(&weights) {
        match spec.log_minus_linear(x) {
            Ok(v) => {
                acc += v * wt;
                logs.push((x, spec.log_eval(x)?));
            }
            Err(Error::SingularPoint { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    check_branch(&logs, spec)?;
    if w > 0.0 {
        let l = spec.inverse_power_log_coefficients(TAIL_TERMS).expect("algebraic");
        let p = spec.inverse_power_coefficients(TAIL_TERMS).expect("algebraic");
        let diff: Vec<C64> = l.iter().zip(&p).map(|(a, b)| a - b).collect();
        acc += algebraic_tail(&diff, w);
    }
    finite(acc / (2.0 * PI), "ln G2")
}

/// `(1/2pi) int (psi - 1) d omega`, the trace density `k(0)`.
pub fn trace_density(spec: &SymbolSpec) -> Result<C64> {
    integrate_with_tail(spec, "psi - 1", |x| spec.eval_minus_one(x), |s| {
        s.inverse_power_coefficients(TAIL_TERMS)
    })
}

/// `ln G1 = (1/2pi) int ln psi d omega`; requires `ln psi` to be integrable.
pub fn log_g1(spec: &SymbolSpec) -> Result<C64> {
    integrate_with_tail(spec, "ln psi", |x| spec.log_eval(x), |s| {
        s.inverse_power_log_coefficients(TAIL_TERMS)
    })
}

fn integrate_with_tail<F, C>(spec: &SymbolSpec, what: &'static str, f: F, coeffs: C) -> Result<C64>
where
    F: Fn(f64) -> Result<C64>,
    C: Fn(&SymbolSpec) -> Option<Vec<C64>>,
{
    if spec.is_trivial() {
        return Ok(C64::new(0.0, 0.0));
    }
    let (plan, w) = frequency_plan(spec);
    let mut acc = C64::new(0.0, 0.0);
    let (nodes, weights) = plan.nodes_and_weights();
    for (&x, &wt) in nodes.iter().zip(&weights) {
        match f(x) {
            Ok(v) => acc += v * wt,
            Err(Error::SingularPoint { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if w > 0.0 {
        let c = coeffs(spec).expect("algebraic");
        if c[0].norm() > 1e-14 {
            return Err(Error::SlowDecay(format!(
                "{what} decays like {}/omega and is not integrable",
                c[0]
            )));
        }
        acc += algebraic_tail(&c, w);
    }
    finite(acc / (2.0 * PI), what)
}

fn finite(v: C64, what: &'static str) -> Result<C64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what))
    }
}

/// A continuous logarithm `L = ln b` on the real line, vanishing at
/// infinity at least like `1/omega`, with its quadrature layout.
#[derive(Clone)]
pub struct LogSymbol {
    f: Arc<dyn Fn(f64) -> C64 + Send + Sync>,
    graded: Vec<f64>,
    window: (f64, f64),
    max_width: f64,
    zero: bool,
}

impl std::fmt::Debug for LogSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LogSymbol")
            .field("graded", &self.graded)
            .field("window", &self.window)
            .field("max_width", &self.max_width)
            .field("zero", &self.zero)
            .finish()
    }
}

impl LogSymbol {
    /// `f` must be continuous; panels are graded toward `graded` and no wider
    /// than `max_width` on `window`, beyond which the tails are mapped onto
    /// `(0, 1]`.
    pub fn new<F>(f: F, graded: Vec<f64>, window: (f64, f64), max_width: f64) -> Result<Self>
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        if !(window.1 > window.0 && max_width > 0.0) {
            return Err(invalid("window", "needs lo < hi and a positive panel width"));
        }
        Ok(Self {
            f: Arc::new(f),
            graded,
            window,
            max_width,
            zero: false,
        })
    }

    /// `L == 0`.
    pub fn zero() -> Self {
        Self {
            f: Arc::new(|_| C64::new(0.0, 0.0)),
            graded: Vec::new(),
            window: (-1.0, 1.0),
            max_width: 1.0,
            zero: true,
        }
    }

    /// `ln b` of the smooth part of `spec`.
    pub fn smooth_part_of(spec: &SymbolSpec) -> Result<Self> {
        if spec.is_trivial() {
            return Ok(Self::zero());
        }
        let layout = spec.layout();
        if spec.has_explicit_smooth_part() {
            let Some(bump) = spec.bump() else {
                return Ok(Self::zero());
            };
            let cut = 6.5 * bump.width;
            return Self::new(
                move |w| {
                    let r = w / bump.width;
                    C64::new((bump.amplitude * (-r * r).exp()).ln_1p(), 0.0)
                },
                Vec::new(),
                (-cut, cut),
                (0.25 * bump.width).min(0.5),
            );
        }
        let rem = smooth_remainder(spec)?;
        let window = match layout.support {
            Support::Compact { lo, hi } => (lo, hi),
            Support::Algebraic { radius } => (-radius, radius),
        };
        Self::new(move |w| rem.log_eval(w), layout.graded, window, layout.max_width)
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn eval(&self, omega: f64) -> C64 {
        (self.f)(omega)
    }

    fn tail_scale(&self) -> f64 {
        (0.5 * (self.window.1 - self.window.0)).max(1.0)
    }

    /// Nodes and weights covering the whole real line, with extra grading
    /// toward `extra`, dyadic down to `floor` relative.
    fn line_rule(&self, extra: &[f64], floor: f64) -> (Vec<f64>, Vec<f64>) {
        let mut graded = self.graded.clone();
        graded.extend_from_slice(extra);
        let (lo, hi) = self.window;
        let (mut nodes, mut weights) =
            PanelPlan::with_floor(lo, hi, &graded, self.max_width, floor).nodes_and_weights();
        let (s_nodes, s_weights) = PanelPlan::new(0.0, 1.0, &[], 1.0 / TAIL_PANELS as f64).nodes_and_weights();
        let scale = self.tail_scale();
        for (&s, &ws) in s_nodes.iter().zip(&s_weights) {
            let jac = ws * scale / (s * s);
            let d = scale * (1.0 / s - 1.0);
            nodes.push(hi + d);
            weights.push(jac);
            nodes.push(lo - d);
            weights.push(jac);
        }
        (nodes, weights)
    }
}

/// Normalized Wiener-Hopf factors `b = b_- b_+`: `b_+` analytic and nonzero
/// in the upper half-plane, `b_-` in the lower, both tending to 1.
#[derive(Debug, Clone)]
pub struct WhFactors {
    log_b: LogSymbol,
}

/// Cauchy-integral factorization of `b = exp(L)`.
pub fn wiener_hopf_factorize(log_b: &LogSymbol) -> Result<WhFactors> {
    if !log_b.is_zero() {
        let (nodes, _) = log_b.line_rule(&[], GRADING_FLOOR);
        let mut samples: Vec<(f64, C64)> = nodes.iter().map(|&x| (x, log_b.eval(x))).collect();
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in samples.windows(2) {
            let step = pair[1].1.im - pair[0].1.im;
            if step.abs() > PI {
                return Err(Error::Winding { winding: step / (2.0 * PI) });
            }
        }
        let ends = samples[0].1.im.abs().max(samples[samples.len() - 1].1.im.abs());
        if ends > 0.5 {
            return Err(Error::Winding { winding: ends / (2.0 * PI) });
        }
    }
    Ok(WhFactors { log_b: log_b.clone() })
}

impl WhFactors {
    /// Factors of `b == 1`.
    pub fn identity() -> Self {
        Self { log_b: LogSymbol::zero() }
    }

    fn cauchy(&self, z: C64) -> C64 {
        let (nodes, weights) = self.log_b.line_rule(&[z.re], GRADING_FLOOR);
        let sum: C64 = nodes
            .iter()
            .zip(&weights)
            .map(|(&u, &w)| self.log_b.eval(u) * w / (C64::new(u, 0.0) - z))
            .sum();
        sum / C64::new(0.0, 2.0 * PI)
    }

    /// `(1/2pi i) PV int L(u) / (u - x) du`, after subtracting
    /// `L(x) / (1 + (u - x)^2)` whose principal value vanishes.
    fn principal_value(&self, x: f64) -> C64 {
        let lx = self.log_b.eval(x);
        let (nodes, weights) = self.log_b.line_rule(&[x], GRADING_FLOOR);
        let sum: C64 = nodes
            .iter()
            .zip(&weights)
            .filter(|(&u, _)| u != x)
            .map(|(&u, &w)| {
                let d = u - x;
                (self.log_b.eval(u) - lx / (1.0 + d * d)) * (w / d)
            })
            .sum();
        sum / C64::new(0.0, 2.0 * PI)
    }

    /// `ln b_+(z)` for `Im z >= 0` (boundary values by the Plemelj rule).
    pub fn log_plus(&self, z: C64) -> Result<C64> {
        if self.log_b.is_zero() {
            return Ok(C64::new(0.0, 0.0));
        }
        let v = if z.im > 0.0 {
            self.cauchy(z)
        } else if z.im == 0.0 {
            self.log_b.eval(z.re) * 0.5 + self.principal_value(z.re)
        } else {
            return Err(invalid("z", "b_+ is defined for Im z >= 0"));
        };
        finite(v, "ln b_+")
    }

    /// `ln b_-(z)` for `Im z <= 0`.
    pub fn log_minus(&self, z: C64) -> Result<C64> {
        if self.log_b.is_zero() {
            return Ok(C64::new(0.0, 0.0));
        }
        let v = if z.im < 0.0 {
            -self.cauchy(z)
        } else if z.im == 0.0 {
            self.log_b.eval(z.re) * 0.5 - self.principal_value(z.re)
        } else {
            return Err(invalid("z", "b_- is defined for Im z <= 0"));
        };
        finite(v, "ln b_-")
    }

    pub fn plus(&self, z: C64) -> Result<C64> {
        Ok(self.log_plus(z)?.exp())
    }

    pub fn minus(&self, z: C64) -> Result<C64> {
        Ok(self.log_minus(z)?.exp())
    }

    /// `max |b_-(x) b_+(x) - b(x)| / |b(x)|` over `points`.
    pub fn product_defect(&self, points: &[f64]) -> Result<f64> {
        let mut worst = 0.0f64;
        for &x in points {
            let z = C64::new(x, 0.0);
            let l = self.log_b.eval(x);
            let prod = (self.log_plus(z)? + self.log_minus(z)?).exp();
            worst = worst.max((prod - l.exp()).norm() / l.exp().norm());
        }
        Ok(worst)
    }
}

/// `sum_j ln E(alpha_j, beta_j)`.
pub fn log_e1(singularities: &[FhSingularity]) -> Result<C64> {
    singularities
        .iter()
        .map(|s| log_fh_constant(s.alpha, s.beta))
        .sum()
}

/// `ln E2 = int_0^inf t s(t) s(-t) dt` with `s(t) = (1/2pi) int L e^{-i omega t}`,
/// evaluated as `(1/8 pi^2) int int ((L(x) - L(y)) / (x - y))^2 dx dy`.
pub fn log_e2(log_b: &LogSymbol) -> Result<C64> {
    if log_b.is_zero() {
        return Ok(C64::new(0.0, 0.0));
    }
    let (nodes, weights) = log_b.line_rule(&[], E2_GRADING_FLOOR);
    let values: Vec<C64> = nodes.iter().map(|&x| log_b.eval(x)).collect();
    let re: Vec<f64> = values.iter().map(|v| v.re).collect();
    let im: Vec<f64> = values.iter().map(|v| v.im).collect();
    let rows: Vec<C64> = (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            let xi = nodes[i];
            let (mut sr, mut si) = (0.0, 0.0);
            for j in 0..i {
                let dx = xi - nodes[j];
                // nodes of ulp-wide innermost panels may coincide
                let inv = if dx != 0.0 { 1.0 / dx } else { 0.0 };
                let (qr, qi) = ((re[i] - re[j]) * inv, (im[i] - im[j]) * inv);
                sr += (qr * qr - qi * qi) * weights[j];
                si += 2.0 * qr * qi * weights[j];
            }
            let mut row = C64::new(sr, si) * (2.0 * weights[i]);
            // diagonal: the difference quotient tends to L'(x_i)
            let h = 1e-6 * xi.abs().max(1e-3).min(1.0);
            let d = (log_b.eval(xi + h) - log_b.eval(xi - h)) / (2.0 * h);
            row += d * d * weights[i] * weights[i];
            row
        })
        .collect();
    let acc: C64 = rows.iter().sum();
    finite(acc / (8.0 * PI * PI), "ln E2")
}

fn power_term(base: C64, exponent: C64, what: &str, warnings: &mut Vec<String>) -> Result<C64> {
    if exponent == C64::new(0.0, 0.0) {
        return Ok(C64::new(0.0, 0.0));
    }
    if base.norm() == 0.0 {
        return Err(Error::ZeroFactor("E3 base"));
    }
    let l = principal_ln(base);
    if PI - l.im.abs() < CUT_MARGIN {
        warnings.push(format!("argument of {what} within {CUT_MARGIN} of the branch cut"));
    }
    Ok(exponent * l)
}

/// `ln E3`: pairwise interaction prefactors and the Wiener-Hopf ratios
/// `b_-(a - i)^beta b_+(a + i)^alpha / (b_-(a)^beta b_+(a)^alpha)`, all powers
/// on the principal branch. Returns the value and any near-cut warnings.
pub fn log_e3(singularities: &[FhSingularity], wh: &WhFactors) -> Result<(C64, Vec<String>)> {
    let mut warnings = Vec::new();
    let mut acc = C64::new(0.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let mut sorted = singularities.to_vec();
    sorted.sort_by(|a, b| a.location.total_cmp(&b.location));
    for (j, first) in sorted.iter().enumerate() {
        for second in &sorted[j + 1..] {
            let d = second.location - first.location;
            if d <= 0.0 {
                return Err(Error::ZeroFactor("coincident singularities"));
            }
            let d = C64::new(d, 0.0);
            // the constant pairs the phase-advancing exponent of this crate's
            // factor with b_-; in that orientation it reads with alpha and beta exchanged
            let (a1, b1, a2, b2) = (first.beta, first.alpha, second.beta, second.alpha);
            acc += power_term(1.0 - i * d, a1 * b2 * 2.0, "1 - i d", &mut warnings)?;
            acc += power_term(1.0 + i * d, a2 * b1 * 2.0, "1 + i d", &mut warnings)?;
            acc -= power_term(2.0 * i - d, a2 * b1, "2i - d", &mut warnings)?;
            acc -= power_term(-2.0 * i - d, a1 * b2, "-2i - d", &mut warnings)?;
            acc -= power_term(d, a2 * b1 + a1 * b2, "d", &mut warnings)?;
        }
    }
    for s in &sorted {
        let a = C64::new(s.location, 0.0);
        let terms = [
            (wh.minus(a - i)?, s.beta, "b_-(a - i)"),
            (wh.plus(a + i)?, s.alpha, "b_+(a + i)"),
        ];
        for (base, e, what) in terms {
            acc += power_term(base, e, what, &mut warnings)?;
        }
        let terms = [(wh.minus(a)?, s.beta, "b_-(a)"), (wh.plus(a)?, s.alpha, "b_+(a)")];
        for (base, e, what) in terms {
            acc -= power_term(base, e, what, &mut warnings)?;
        }
    }
    Ok((acc, warnings))
}

/// Evaluates every term of the asymptotic formula for `spec`.
pub fn predict(spec: &SymbolSpec, variant: Variant) -> Result<AsymptoticDecomposition> {
    if spec.is_trivial() {
        return Ok(AsymptoticDecomposition::zero(variant));
    }
    let rate = match variant {
        Variant::Regularized => log_g2(spec)?,
        Variant::Ordinary => log_g1(spec)?,
    };
    let log_b = LogSymbol::smooth_part_of(spec)?;
    let wh = wiener_hopf_factorize(&log_b)?;
    let (log_e3, warnings) = log_e3(spec.singularities(), &wh)?;
    Ok(AsymptoticDecomposition {
        log_g2_rate: rate,
        exponent: spec.exponent(),
        log_e1: log_e1(spec.singularities())?,
        log_e2: log_e2(&log_b)?,
        log_e3,
        variant,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::GaussLegendre;
    use crate::symbols::{xray_symbol, PhysicalParams};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn bump_log(eps: f64) -> LogSymbol {
        LogSymbol::new(
            move |w: f64| c((eps * (-w * w).exp()).ln_1p(), 0.0),
            Vec::new(),
            (-6.5, 6.5),
            0.25,
        )
        .unwrap()
    }

    #[test]
    fn trivial_symbol_predicts_zero() {
        let d = predict(&SymbolSpec::trivial(), Variant::Regularized).unwrap();
        assert_eq!(d, AsymptoticDecomposition::zero(Variant::Regularized));
        assert_eq!(d.predict_at(7.0), c(0.0, 0.0));
        assert_eq!(log_g1(&SymbolSpec::trivial()).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn gaussian_bump_rates() {
        let eps = 0.5;
        let spec = SymbolSpec::gaussian_bump(eps).unwrap();
        // independent rule: 60-point Gauss-Legendre per unit on [-12, 12]
        let gl = GaussLegendre::new(60);
        let (mut g2, mut g1, mut tr) = (0.0, 0.0, 0.0);
        for j in -12..12 {
            let (a, b) = (j as f64, j as f64 + 1.0);
            g2 += gl.integrate(a, b, |w| {
                let x = eps * (-w * w).exp();
                c(x.ln_1p() - x, 0.0)
            }).re;
            g1 += gl.integrate(a, b, |w| c((eps * (-w * w).exp()).ln_1p(), 0.0)).re;
            tr += gl.integrate(a, b, |w| c(eps * (-w * w).exp(), 0.0)).re;
        }
        let two_pi = 2.0 * PI;
        assert!((log_g2(&spec).unwrap() - g2 / two_pi).norm() < 1e-10);
        assert!((log_g1(&spec).unwrap() - g1 / two_pi).norm() < 1e-10);
        let diff = log_g1(&spec).unwrap() - log_g2(&spec).unwrap();
        assert!((diff - trace_density(&spec).unwrap()).norm() < 1e-9);
        assert!((tr / two_pi - eps / (2.0 * PI.sqrt())).abs() < 1e-13);
    }

    #[test]
    fn gaussian_bump_e2_matches_series() {
        // ln(1 + eps e^{-w^2}) = sum c_k e^{-k w^2}; s(t) is a sum of Gaussians
        let eps = 0.5f64;
        let coef = |k: usize| {
            let kf = k as f64;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sign * eps.powi(k as i32) / kf / (2.0 * (PI * kf).sqrt())
        };
        let mut want = 0.0;
        for k in 1..60 {
            for l in 1..60 {
                let (kf, lf) = (k as f64, l as f64);
                want += coef(k) * coef(l) * 2.0 * kf * lf / (kf + lf);
            }
        }
        let got = log_e2(&bump_log(eps)).unwrap();
        assert!((got - want).norm() < 1e-10, "{got} vs {want}");
        assert!(got.im.abs() < 1e-10);
    }

    #[test]
    fn rational_factorization() {
        // b = (w+2i)/(w+i) * (w-i)/(w-2i), b_+ = (z+2i)/(z+i), b_- = (z-i)/(z-2i)
        let i = c(0.0, 1.0);
        let lb = LogSymbol::new(
            move |w: f64| {
                let z = c(w, 0.0);
                principal_ln((z + 2.0 * i) / (z + i)) + principal_ln((z - i) / (z - 2.0 * i))
            },
            Vec::new(),
            (-8.0, 8.0),
            0.25,
        )
        .unwrap();
        let wh = wiener_hopf_factorize(&lb).unwrap();
        let grid: Vec<f64> = (0..100).map(|k| -10.0 + 20.0 * k as f64 / 99.0).collect();
        assert!(wh.product_defect(&grid).unwrap() < 1e-8);
        let checks = [
            (wh.plus(i).unwrap(), c(1.5, 0.0)),
            (wh.plus(3.0 * i).unwrap(), c(1.25, 0.0)),
            (wh.minus(-i).unwrap(), c(2.0 / 3.0, 0.0)),
            (wh.minus(-3.0 * i).unwrap(), c(0.8, 0.0)),
        ];
        for (got, want) in checks {
            assert!((got - want).norm() < 1e-8, "{got} vs {want}");
        }
        for &x in &[-3.0, 0.0, 0.7] {
            let z = c(x, 0.0);
            let plus = (z + 2.0 * i) / (z + i);
            assert!((wh.plus(z).unwrap() - plus).norm() < 1e-8);
        }
    }

    #[test]
    fn identity_factors() {
        let wh = wiener_hopf_factorize(&LogSymbol::zero()).unwrap();
        assert_eq!(wh.plus(c(0.0, 2.0)).unwrap(), c(1.0, 0.0));
        assert_eq!(wh.minus(c(1.0, 0.0)).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn winding_symbol_is_rejected() {
        // b = (w - i)/(w + i) winds once
        let lb = LogSymbol::new(
            |w: f64| principal_ln(c(w, -1.0) / c(w, 1.0)),
            Vec::new(),
            (-8.0, 8.0),
            0.25,
        )
        .unwrap();
        assert!(matches!(wiener_hopf_factorize(&lb), Err(Error::Winding { .. })));
    }

    #[test]
    fn e1_examples() {
        assert_eq!(log_e1(&[]).unwrap(), c(0.0, 0.0));
        let p = PhysicalParams {
            coupling: 2f64.sqrt(),
            ..Default::default()
        };
        let spec = xray_symbol(&p).unwrap();
        let got = log_e1(spec.singularities()).unwrap();
        assert!((got.re + 0.101_012_180_009_319_07).abs() < 1e-12, "{got}");
        let edge = FhSingularity::new(0.0, c(0.0, 0.0), c(-0.5, 0.0)).unwrap();
        assert!(log_e1(&[edge]).unwrap().norm() < 1e-14);
    }

    #[test]
    fn e3_vanishes_without_exponents() {
        let s = FhSingularity::new(0.0, c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        let t = FhSingularity::new(1.0, c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        let (v, w) = log_e3(&[s, t], &WhFactors::identity()).unwrap();
        assert_eq!(v, c(0.0, 0.0));
        assert!(w.is_empty());
    }

    #[test]
    fn e3_edge_without_alpha_reduces() {
        // alpha_1 = 0 leaves (1 - i d)^{2 b1 a2} / ((-2i - d)^{b1 a2} d^{b1 a2})
        let mut seed = 7u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let theta = 0.05 + 1.4 * next();
            let ef = 0.1 + 4.0 * next();
            let t = theta / PI;
            let s1 = FhSingularity::new(0.0, c(0.0, 0.0), c(-0.5, 0.0)).unwrap();
            let s2 = FhSingularity::new(ef, c(-t, 0.0), c(t, 0.0)).unwrap();
            let (general, _) = log_e3(&[s1, s2], &WhFactors::identity()).unwrap();
            let i = c(0.0, 1.0);
            let e = c(ef, 0.0);
            let reduced = principal_ln(1.0 - i * e) * t
                - principal_ln(-2.0 * i - e) * (t / 2.0)
                - principal_ln(e) * (t / 2.0);
            assert!((general - reduced).norm() < 1e-13);
        }
    }

    #[test]
    fn xray_prediction_fields() {
        let p = PhysicalParams {
            coupling: 2f64.sqrt(),
            ..Default::default()
        };
        let d = predict(&xray_symbol(&p).unwrap(), Variant::Regularized).unwrap();
        assert!((d.exponent - c(-0.0625, 0.0)).norm() < 1e-15);
        assert_eq!(d.exponent.im, 0.0);
        assert!(d.log_e2.re.is_finite() && d.log_e3.re.is_finite());
    }

    #[test]
    fn xray_factorization_product() {
        let spec = xray_symbol(&PhysicalParams::default()).unwrap();
        let lb = LogSymbol::smooth_part_of(&spec).unwrap();
        let wh = wiener_hopf_factorize(&lb).unwrap();
        let grid: Vec<f64> = (0..200).map(|k| -20.0 + 40.0 * k as f64 / 199.0).collect();
        assert!(wh.product_defect(&grid).unwrap() < 1e-8);
    }

    #[test]
    fn pure_fh_has_no_e2_e3() {
        let spec = SymbolSpec::pure_fh(c(0.2, 0.0), c(0.2, 0.0)).unwrap();
        let d = predict(&spec, Variant::Regularized).unwrap();
        assert_eq!(d.log_e2, c(0.0, 0.0));
        assert_eq!(d.log_e3, c(0.0, 0.0));
        assert!((d.log_e1.re - 0.041_935_020_400_841_19).abs() < 1e-12);
        // ln psi ~ i (alpha - beta) / omega
        assert!(log_g1(&spec).unwrap().re.is_finite());
        let jump = SymbolSpec::pure_fh(c(0.15, 0.0), c(-0.15, 0.0)).unwrap();
        assert!(matches!(log_g1(&jump), Err(Error::SlowDecay(_))));
    }
}
