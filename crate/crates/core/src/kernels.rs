//! Convolution kernels `k(t) = (1/2pi) int (psi(omega) - 1) e^{-i omega t} d omega`.
//!
//! The frequency integral runs over Gauss-Legendre panels graded toward the
//! singular points. Symbols with algebraic tails have the leading terms
//! `sum_n e_n / (omega + i)^n` subtracted and transformed in closed form.

use crate::error::{Error, Result};
use crate::quad::PanelPlan;
use crate::specfun::C64;
use crate::symbols::{xray_symbol, FrequencyLayout, PhysicalParams, Support, SymbolSpec};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Terms of the subtracted expansion in `1/(omega + i)`.
const TAIL_TERMS: usize = 12;
/// The integration window is this multiple of the expansion radius.
const WINDOW_FACTOR: f64 = 20.0;
/// Phases are recomputed exactly every this many steps during tabulation.
const RESYNC: usize = 64;

/// Immutable evaluator for the kernel of one symbol.
#[derive(Debug, Clone)]
pub struct KernelEvaluator {
    spec: SymbolSpec,
    layout: FrequencyLayout,
    window: (f64, f64),
    /// `e_n`, n = 1.., for the subtracted `sum e_n / (omega + i)^n`.
    tail: Vec<C64>,
    refinement: u32,
}

/// Kernel values `k(m h)` for `|m| <= max_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    step: f64,
    max_index: usize,
    values: Vec<C64>,
}

impl KernelTable {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    /// `k(m h)`; panics if `|m| > max_index`.
    pub fn get(&self, m: i64) -> C64 {
        self.values[(m + self.max_index as i64) as usize]
    }
}

impl KernelEvaluator {
    pub fn new(spec: &SymbolSpec) -> Result<Self> {
        let layout = spec.layout();
        let (window, tail) = match layout.support {
            Support::Compact { lo, hi } => ((lo, hi), Vec::new()),
            Support::Algebraic { radius } => {
                let p = spec
                    .inverse_power_coefficients(TAIL_TERMS)
                    .ok_or_else(|| Error::Quadrature {
                        what: "kernel tail",
                        report: "algebraic support without expansion coefficients".into(),
                    })?;
                let w = WINDOW_FACTOR * radius;
                ((-w, w), match_inverse_shifted_powers(&p))
            }
        };
        Ok(Self {
            spec: spec.clone(),
            layout,
            window,
            tail,
            refinement: 0,
        })
    }

    /// Same evaluator with every panel split `2^levels` times.
    pub fn with_refinement(&self, levels: u32) -> Self {
        Self {
            refinement: levels,
            ..self.clone()
        }
    }

    pub fn spec(&self) -> &SymbolSpec {
        &self.spec
    }

    /// `k(0+) - k(0-)`. Only a `1/omega` tail of `psi - 1` makes the kernel
    /// jump, by `-i` times its coefficient.
    pub fn jump_at_origin(&self) -> C64 {
        self.tail.first().map_or(C64::new(0.0, 0.0), |e1| -C64::i() * e1)
    }

    fn plan(&self, t_max: f64) -> PanelPlan {
        let mut width = self.layout.max_width;
        if t_max > 0.0 {
            width = width.min(PI / (4.0 * t_max));
        }
        let mut plan = PanelPlan::new(self.window.0, self.window.1, &self.layout.graded, width);
        for _ in 0..self.refinement {
            plan = plan.refined();
        }
        plan
    }

    /// Quadrature nodes and `w_j (psi(omega_j) - 1 - tail(omega_j))`.
    fn weighted_integrand(&self, t_max: f64) -> Result<(Vec<f64>, Vec<C64>)> {
        let (nodes, weights) = self.plan(t_max).nodes_and_weights();
        let values: Result<Vec<C64>> = nodes
            .par_iter()
            .zip(weights.par_iter())
            .map(|(&w, &wt)| {
                let v = match self.spec.eval_minus_one(w) {
                    Ok(v) => v - self.tail_value(w),
                    // a node that rounds onto a singular point sits in a
                    // panel of width ~1e-15
                    Err(Error::SingularPoint { .. }) => return Ok(C64::new(0.0, 0.0)),
                    Err(e) => return Err(e),
                };
                if v.re.is_finite() && v.im.is_finite() {
                    Ok(v * wt)
                } else {
                    Err(Error::Quadrature {
                        what: "kernel integrand",
                        report: format!("non-finite symbol value at omega = {w:e}"),
                    })
                }
            })
            .collect();
        Ok((nodes, values?))
    }

    fn tail_value(&self, omega: f64) -> C64 {
        if self.tail.is_empty() {
            return C64::new(0.0, 0.0);
        }
        let u = C64::new(omega, 1.0).inv();
        // Horner in u
        let mut acc = C64::new(0.0, 0.0);
        for e in self.tail.iter().rev() {
            acc = (acc + e) * u;
        }
        acc
    }

    /// `int e^{-i omega t} sum e_n (omega + i)^{-n} d omega`, mean of the
    /// one-sided limits at `t = 0`.
    fn tail_transform(&self, t: f64) -> C64 {
        if self.tail.is_empty() || t < 0.0 {
            return C64::new(0.0, 0.0);
        }
        let minus_two_pi_i = C64::new(0.0, -2.0 * PI);
        if t == 0.0 {
            return self.tail[0] * (minus_two_pi_i * 0.5);
        }
        let decay = (-t).exp();
        // (-i t)^{n-1} / (n-1)!
        let mut term = C64::new(1.0, 0.0);
        let mut acc = C64::new(0.0, 0.0);
        for (k, e) in self.tail.iter().enumerate() {
            if k > 0 {
                term *= C64::new(0.0, -t) / k as f64;
            }
            acc += e * term;
        }
        acc * minus_two_pi_i * decay
    }

    /// `k(t)`; at `t = 0` the mean of `k(0+)` and `k(0-)`.
    pub fn kernel_value(&self, t: f64) -> Result<C64> {
        if !t.is_finite() {
            return Err(Error::NonFinite("kernel argument"));
        }
        if self.spec.is_trivial() {
            return Ok(C64::new(0.0, 0.0));
        }
        let (nodes, fw) = self.weighted_integrand(t.abs())?;
        let sum: C64 = nodes
            .iter()
            .zip(&fw)
            .map(|(&w, &f)| f * C64::cis(-w * t))
            .sum();
        finite((sum + self.tail_transform(t)) / (2.0 * PI), t)
    }

    /// `k(t)` at many points on one shared node set.
    pub fn values_at(&self, ts: &[f64]) -> Result<Vec<C64>> {
        if self.spec.is_trivial() {
            return Ok(vec![C64::new(0.0, 0.0); ts.len()]);
        }
        let t_max = ts.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        if !t_max.is_finite() {
            return Err(Error::NonFinite("kernel argument"));
        }
        let (nodes, fw) = self.weighted_integrand(t_max)?;
        ts.par_iter()
            .map(|&t| {
                let sum: C64 = nodes
                    .iter()
                    .zip(&fw)
                    .map(|(&w, &f)| f * C64::cis(-w * t))
                    .sum();
                finite((sum + self.tail_transform(t)) / (2.0 * PI), t)
            })
            .collect()
    }

    /// `k(m step)` for `|m| <= max_index`, on one node set fine enough for
    /// the largest `|t|`.
    pub fn tabulate(&self, step: f64, max_index: usize) -> Result<KernelTable> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::NonFinite("kernel table step"));
        }
        let len = 2 * max_index + 1;
        if self.spec.is_trivial() {
            return Ok(KernelTable {
                step,
                max_index,
                values: vec![C64::new(0.0, 0.0); len],
            });
        }
        let (nodes, fw) = self.weighted_integrand(step * max_index as f64)?;
        let rotation: Vec<C64> = nodes.iter().map(|&w| C64::cis(-w * step)).collect();
        let blocks: Vec<usize> = (0..len).step_by(RESYNC).collect();
        let chunks: Vec<Vec<C64>> = blocks
            .par_iter()
            .map(|&start| {
                let stop = (start + RESYNC).min(len);
                let m0 = start as f64 - max_index as f64;
                let mut phase: Vec<C64> = nodes.iter().map(|&w| C64::cis(-w * m0 * step)).collect();
                let mut out = Vec::with_capacity(stop - start);
                for _ in start..stop {
                    let mut acc = C64::new(0.0, 0.0);
                    for ((p, f), r) in phase.iter_mut().zip(&fw).zip(&rotation) {
                        acc += f * *p;
                        *p *= r;
                    }
                    out.push(acc);
                }
                out
            })
            .collect();
        let mut values = Vec::with_capacity(len);
        for (i, v) in chunks.into_iter().flatten().enumerate() {
            let t = (i as f64 - max_index as f64) * step;
            values.push(finite((v + self.tail_transform(t)) / (2.0 * PI), t)?);
        }
        Ok(KernelTable {
            step,
            max_index,
            values,
        })
    }
}

fn finite(v: C64, t: f64) -> Result<C64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::Quadrature {
            what: "kernel",
            report: format!("non-finite value at t = {t}"),
        })
    }
}

/// Converts `sum P_m omega^{-m}` into `sum e_n (omega + i)^{-n}` with the
/// same first `P.len()` coefficients.
fn match_inverse_shifted_powers(p: &[C64]) -> Vec<C64> {
    let m_max = p.len();
    // binom[m][k] = C(m, k)
    let mut binom = vec![vec![0.0f64; m_max + 1]; m_max + 1];
    for m in 0..=m_max {
        binom[m][0] = 1.0;
        for k in 1..=m {
            binom[m][k] = binom[m - 1][k - 1] + if k <= m - 1 { binom[m - 1][k] } else { 0.0 };
        }
    }
    let minus_i = C64::new(0.0, -1.0);
    let mut e: Vec<C64> = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let mut v = p[m - 1];
        for n in 1..m {
            v -= e[n - 1] * binom[m - 1][m - n] * minus_i.powi((m - n) as i32);
        }
        e.push(v);
    }
    e
}

/// `g0(t) = (1/2pi) int F(omega - eps_F) e^{-i omega t} d omega`, the X-ray
/// Green's function in time; the X-ray kernel is `-v g0`.
pub fn xray_g0(params: &PhysicalParams, t: f64) -> Result<C64> {
    let unit = PhysicalParams {
        coupling: 1.0,
        ..*params
    };
    let spec = xray_symbol(&unit)?;
    Ok(-KernelEvaluator::new(&spec)?.kernel_value(t)?)
}

/// Evaluates `k(t)` for one symbol.
pub fn kernel_value(spec: &SymbolSpec, t: f64) -> Result<C64> {
    KernelEvaluator::new(spec)?.kernel_value(t)
}
