//! The four subcommands. Each returns its data files as strings so that the
//! caller decides where they go.

use crate::config::{RunConfig, Tolerances};
use crate::error::{CliError, CliResult};
use crate::output::{self, float};
use std::f64::consts::PI;
use std::fmt::Write as _;
use whasym::asymptotics::{predict, wiener_hopf_factorize, LogSymbol, Variant};
use whasym::fredholm::{discretize, log_det, log_det2, log_det2_continuous, Rule};
use whasym::kernels::KernelEvaluator;
use whasym::models::{convergence_sweep, NPolicy, SweepResult};
use whasym::specfun::{log_barnes_g, log_gamma, principal_ln};
use whasym::symbols::{xray_symbol, PhysicalParams, SymbolSpec};
use whasym::C64;

pub fn sweep(cfg: &RunConfig) -> CliResult<SweepResult> {
    let ts = cfg
        .t_list
        .as_ref()
        .ok_or_else(|| CliError::Config("missing required key `T` in [sweep] (or --T)".into()))?;
    let spec = cfg.spec()?;
    Ok(convergence_sweep(&spec, ts, cfg.policy(&spec))?)
}

pub fn predict_json(cfg: &RunConfig) -> CliResult<String> {
    let d = predict(&cfg.spec()?, Variant::Regularized)?;
    Ok(output::render(&output::prediction_json(&d)))
}

/// Columns `t, k, adj` with `adj(t) = conj(k(-t))`; the two agree for a
/// real-valued kernel symbol pair and are kept side by side for checking.
pub fn kernel_csv(cfg: &RunConfig) -> CliResult<String> {
    let spec = cfg.spec()?;
    let g = cfg.kernel;
    let step = (g.t_max - g.t_min) / (g.samples - 1) as f64;
    let ts: Vec<f64> = (0..g.samples).map(|i| g.t_min + step * i as f64).collect();
    let neg: Vec<f64> = ts.iter().map(|t| -t).collect();
    let ev = KernelEvaluator::new(&spec)?;
    let k = ev.values_at(&ts)?;
    let kn = ev.values_at(&neg)?;
    let mut out = String::from("t,k_re,k_im,adj_re,adj_im\n");
    for ((t, k), kn) in ts.iter().zip(&k).zip(&kn) {
        let adj = kn.conj();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            float(*t),
            float(k.re),
            float(k.im),
            float(adj.re),
            float(adj.im)
        );
    }
    Ok(out)
}

/// One line of the self-test report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub error: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.error.is_finite() && self.error <= self.tolerance
    }

    pub fn line(&self) -> String {
        format!(
            "{} {} max_error={:.3e} tolerance={:.3e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.error,
            self.tolerance
        )
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Distance between two logarithms modulo `2 pi i`.
fn log_distance(a: C64, b: C64) -> f64 {
    let d = a - b;
    let k = (d.im / (2.0 * PI)).round();
    c(d.re, d.im - 2.0 * PI * k).norm()
}

fn worst<I: IntoIterator<Item = CliResult<f64>>>(errors: I) -> f64 {
    errors
        .into_iter()
        .map(|e| e.unwrap_or(f64::INFINITY))
        .fold(0.0, |m, e| if e.is_nan() || m.is_nan() { f64::NAN } else { m.max(e) })
}

fn barnes_recurrence() -> f64 {
    let points = (0..10).flat_map(|a| (0..10).map(move |b| c(0.15 + 0.45 * a as f64, -2.0 + 0.44 * b as f64)));
    worst(points.map(|z| -> CliResult<f64> {
        let lhs = log_barnes_g(z + 1.0)?;
        let rhs = log_gamma(z)? + log_barnes_g(z)?;
        // |G(z+1) - G(z) Gamma(z)| / |G(z+1)|
        Ok((C64::new(1.0, 0.0) - (rhs - lhs).exp()).norm())
    }))
}

fn barnes_anchors() -> f64 {
    let anchors = [(1.0, 1.0), (2.0, 1.0), (3.0, 1.0), (4.0, 2.0)];
    worst(anchors.iter().map(|&(z, g)| -> CliResult<f64> {
        Ok((log_barnes_g(c(z, 0.0))?.exp() - c(g, 0.0)).norm())
    }))
}

fn test_symbols() -> CliResult<Vec<SymbolSpec>> {
    Ok(vec![
        SymbolSpec::gaussian_bump(0.5)?,
        SymbolSpec::pure_fh(c(0.2, 0.0), c(0.2, 0.0))?,
        SymbolSpec::pure_fh(c(0.15, 0.0), c(-0.15, 0.0))?,
        xray_symbol(&PhysicalParams::default())?,
    ])
}

/// `ln det_2 = ln det - tr K`, for the pivoted and the continuous branch.
fn det2_identity() -> CliResult<f64> {
    let mut errors = Vec::new();
    for spec in test_symbols()? {
        let ev = KernelEvaluator::new(&spec)?;
        for rule in [Rule::Trapezoid, Rule::GaussLegendre] {
            let op = discretize(&ev, 4.0, 64, rule)?;
            let d2 = log_det2(&op)?;
            errors.push(log_distance(d2, log_det(&op)? - op.trace_k()));
            errors.push(log_distance(d2, log_det2_continuous(&op)?));
        }
    }
    Ok(worst(errors.into_iter().map(Ok)))
}

fn rational_factorization() -> CliResult<f64> {
    let i = c(0.0, 1.0);
    let lb = LogSymbol::new(
        move |w: f64| {
            let z = c(w, 0.0);
            principal_ln((z + 2.0 * i) / (z + i)) + principal_ln((z - i) / (z - 2.0 * i))
        },
        Vec::new(),
        (-8.0, 8.0),
        0.25,
    )?;
    let wh = wiener_hopf_factorize(&lb)?;
    let grid: Vec<f64> = (0..200).map(|k| -10.0 + 20.0 * k as f64 / 199.0).collect();
    let mut err = wh.product_defect(&grid)?;
    for (got, want) in [
        (wh.plus(i)?, c(1.5, 0.0)),
        (wh.plus(3.0 * i)?, c(1.25, 0.0)),
        (wh.minus(-i)?, c(2.0 / 3.0, 0.0)),
        (wh.minus(-3.0 * i)?, c(0.8, 0.0)),
    ] {
        err = err.max((got - want).norm());
    }
    Ok(err)
}

fn xray_factorization() -> CliResult<f64> {
    let spec = xray_symbol(&PhysicalParams::default())?;
    let wh = wiener_hopf_factorize(&LogSymbol::smooth_part_of(&spec)?)?;
    let grid: Vec<f64> = (0..200).map(|k| -20.0 + 40.0 * k as f64 / 199.0).collect();
    Ok(wh.product_defect(&grid)?)
}

fn trivial_zeros() -> CliResult<f64> {
    let spec = SymbolSpec::pure_fh(c(0.0, 0.0), c(0.0, 0.0))?;
    let d = predict(&spec, Variant::Regularized)?;
    let sweep = convergence_sweep(&spec, &[4.0, 8.0, 12.0, 16.0], NPolicy::default())?;
    let mut err = [d.log_g2_rate, d.exponent, d.log_e1, d.log_e2, d.log_e3]
        .iter()
        .fold(0.0f64, |m, z| m.max(z.norm()));
    for r in &sweep.rows {
        err = err.max(r.log_det2.norm()).max(r.residual.norm());
    }
    Ok(err)
}

/// The invariant suite, in a fixed order.
pub fn selftest(tol: &Tolerances) -> Vec<Check> {
    let or_inf = |r: CliResult<f64>| r.unwrap_or(f64::INFINITY);
    vec![
        Check { name: "barnes_recurrence", error: barnes_recurrence(), tolerance: tol.barnes },
        Check { name: "barnes_anchors", error: barnes_anchors(), tolerance: tol.barnes },
        Check { name: "det2_identity", error: or_inf(det2_identity()), tolerance: tol.det2 },
        Check {
            name: "factorization_rational",
            error: or_inf(rational_factorization()),
            tolerance: tol.factorization,
        },
        Check {
            name: "factorization_xray",
            error: or_inf(xray_factorization()),
            tolerance: tol.factorization,
        },
        Check { name: "trivial_zeros", error: or_inf(trivial_zeros()), tolerance: 0.0 },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes_at_default_tolerances() {
        for check in selftest(&Tolerances::default()) {
            assert!(check.passed(), "{}", check.line());
        }
    }

    #[test]
    fn log_distance_ignores_whole_turns() {
        assert!(log_distance(c(1.0, 2.0 * PI + 0.1), c(1.0, 0.1)) < 1e-15);
    }
}
