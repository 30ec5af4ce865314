//! End-to-end studies: determinant sweeps against the asymptotic formula,
//! the X-ray core-hole ratio, the flat-band jump and the magnetic limit.

use crate::asymptotics::{predict, AsymptoticDecomposition, Variant};
use crate::error::{invalid, Error, Result};
use crate::fredholm::{discretize, log_det, refined_sweep, Rule};
use crate::kernels::KernelEvaluator;
use crate::specfun::C64;
use crate::symbols::{
    flatband_limits, jump_parameters, magnetic_jump, xray_symbol, PhysicalParams, SymbolSpec,
};
use nalgebra::{Matrix3, Vector3};
use std::f64::consts::PI;

/// Default grid density in points per unit time.
pub const DEFAULT_POINTS_PER_UNIT: usize = 24;

/// Grid size as a fixed density: `N = T * points_per_unit` at the finest level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NPolicy {
    pub points_per_unit: usize,
}

impl Default for NPolicy {
    fn default() -> Self {
        Self {
            points_per_unit: DEFAULT_POINTS_PER_UNIT,
        }
    }
}

impl NPolicy {
    /// Default density, raised for regulated models so that the regulator
    /// scale `1 / Lambda` spans several grid steps.
    pub fn for_spec(spec: &SymbolSpec) -> Self {
        let resolved = spec
            .physical_params()
            .map_or(0, |p| 4 * (1.2 * p.regulator_scale).ceil() as usize);
        Self {
            points_per_unit: DEFAULT_POINTS_PER_UNIT.max(resolved),
        }
    }

    pub fn n_for(&self, t: f64) -> usize {
        (t * self.points_per_unit as f64).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub t: f64,
    /// Finest grid parameter of the extrapolation ladder.
    pub n_used: usize,
    /// Extrapolated `ln det_2`.
    pub log_det2: C64,
    pub predicted: C64,
    pub residual: C64,
    /// Extrapolation error indicator.
    pub error: f64,
}

/// Least-squares coefficients of `ln det_2 ~ rate T + exponent ln(T/2) + constant`,
/// fitted separately on real and imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub rate: C64,
    pub exponent: C64,
    pub constant: C64,
    /// Standard errors; real and imaginary parts refer to the separate fits.
    pub stderr_rate: C64,
    pub stderr_exponent: C64,
    pub stderr_constant: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Ordered by increasing `T`.
    pub rows: Vec<SweepRow>,
    pub fit: Fit,
    pub prediction: AsymptoticDecomposition,
}

/// `G(T) / G0(T) = det(I - v g)` on `[0, T]` with `N` trapezoid subintervals.
pub fn core_hole_ratio(params: &PhysicalParams, t: f64, n: usize) -> Result<C64> {
    let spec = xray_symbol(params)?;
    if spec.is_trivial() {
        return Ok(C64::new(1.0, 0.0));
    }
    let kernel = KernelEvaluator::new(&spec)?;
    Ok(log_det(&discretize(&kernel, t, n, Rule::Trapezoid)?)?.exp())
}

/// Fits `values` over the basis `{T, ln(T/2), 1}`; needs at least 4 points.
pub fn fit_asymptotic(ts: &[f64], values: &[C64]) -> Result<Fit> {
    if ts.len() < 4 || ts.len() != values.len() {
        return Err(Error::TooFewRows { rows: ts.len().min(values.len()) });
    }
    let basis = |t: f64| Vector3::new(t, (0.5 * t).ln(), 1.0);
    let mut normal = Matrix3::zeros();
    for &t in ts {
        let x = basis(t);
        normal += x * x.transpose();
    }
    let inverse = normal
        .try_inverse()
        .ok_or_else(|| invalid("T_list", "fit basis is degenerate for these T values"))?;
    let solve = |part: &dyn Fn(C64) -> f64| {
        let mut rhs = Vector3::zeros();
        for (&t, &v) in ts.iter().zip(values) {
            rhs += basis(t) * part(v);
        }
        let coef = inverse * rhs;
        let rss: f64 = ts
            .iter()
            .zip(values)
            .map(|(&t, &v)| (part(v) - basis(t).dot(&coef)).powi(2))
            .sum();
        let s2 = rss / (ts.len() - 3) as f64;
        let se = Vector3::new(inverse[(0, 0)], inverse[(1, 1)], inverse[(2, 2)]).map(|d| (s2 * d).sqrt());
        (coef, se)
    };
    let (re, se_re) = solve(&|z| z.re);
    let (im, se_im) = solve(&|z| z.im);
    let c = |k: usize, a: &Vector3<f64>, b: &Vector3<f64>| C64::new(a[k], b[k]);
    Ok(Fit {
        rate: c(0, &re, &im),
        exponent: c(1, &re, &im),
        constant: c(2, &re, &im),
        stderr_rate: c(0, &se_re, &se_im),
        stderr_exponent: c(1, &se_re, &se_im),
        stderr_constant: c(2, &se_re, &se_im),
    })
}

/// Extrapolated `ln det_2` at each `T`, compared with the regularized
/// prediction and fitted over `{T, ln(T/2), 1}`.
///
/// Every `T` must be a multiple of `4 / points_per_unit`. The determinant
/// branch is continuous in `T`; a residual phase step above `pi` between
/// consecutive rows is reported as an unwrap failure.
pub fn convergence_sweep(spec: &SymbolSpec, ts: &[f64], policy: NPolicy) -> Result<SweepResult> {
    if ts.len() < 4 {
        return Err(Error::TooFewRows { rows: ts.len() });
    }
    if ts.windows(2).any(|w| !(w[1] > w[0])) || !(ts[0] > 0.0) {
        return Err(invalid("T_list", "must be positive and strictly increasing"));
    }
    let prediction = predict(spec, Variant::Regularized)?;
    let refined = if spec.is_trivial() {
        None
    } else {
        let kernel = KernelEvaluator::new(spec)?;
        Some(refined_sweep(&kernel, ts, policy.points_per_unit)?)
    };
    let mut rows: Vec<SweepRow> = Vec::with_capacity(ts.len());
    for (k, &t) in ts.iter().enumerate() {
        let (log_det2, error) = match &refined {
            Some(r) => (r[k].value, r[k].error),
            None => (C64::new(0.0, 0.0), 0.0),
        };
        let predicted = prediction.predict_at(t);
        let residual = log_det2 - predicted;
        if let Some(prev) = rows.last() {
            if (residual.im - prev.residual.im).abs() > PI {
                return Err(Error::Unwrap { from: prev.t, to: t });
            }
        }
        rows.push(SweepRow {
            t,
            n_used: policy.n_for(t),
            log_det2,
            predicted,
            residual,
            error,
        });
    }
    let values: Vec<C64> = rows.iter().map(|r| r.log_det2).collect();
    let fit = fit_asymptotic(ts, &values)?;
    Ok(SweepResult {
        rows,
        fit,
        prediction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagneticRow {
    pub delta: f64,
    pub c: f64,
    pub d: f64,
    pub theta: f64,
    pub exponent: f64,
}

/// Jump data of the magnetic symbol along a decreasing sequence of level widths.
pub fn magnetic_limit_study(params: &PhysicalParams, deltas: &[f64]) -> Result<Vec<MagneticRow>> {
    if deltas.windows(2).any(|w| !(w[1] < w[0])) || deltas.iter().any(|&d| !(d > 0.0)) {
        return Err(invalid("delta_list", "must be positive and strictly decreasing"));
    }
    deltas
        .iter()
        .map(|&delta| {
            let jump = magnetic_jump(&PhysicalParams { delta, ..*params })?;
            Ok(MagneticRow {
                delta,
                c: jump.c,
                d: jump.d,
                theta: jump.theta,
                exponent: jump.exponent(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatbandStudy {
    /// `alpha - beta` at the origin.
    pub jump: C64,
    /// `alpha beta` with `alpha = -beta`.
    pub exponent: C64,
    pub note: String,
}

/// Jump and exponent of the flat-band symbol. Its rate term depends on the
/// regulator; the jump and exponent do not.
pub fn flatband_study(params: &PhysicalParams) -> Result<FlatbandStudy> {
    let note = "rate term grows with the regulator scale; exponent and jump are regulator independent";
    if params.coupling == 0.0 {
        return Ok(FlatbandStudy {
            jump: C64::new(0.0, 0.0),
            exponent: C64::new(0.0, 0.0),
            note: note.into(),
        });
    }
    if 1.0 - params.coupling * params.d0 * params.a0 <= 0.0 {
        return Err(invalid("coupling", "flat-band study needs v D0 a0 < 1"));
    }
    let (plus, minus) = flatband_limits(params);
    let jump = jump_parameters(plus, minus)?;
    let half = jump / 2.0;
    Ok(FlatbandStudy {
        jump,
        exponent: -half * half,
        note: note.into(),
    })
}
