//! Nyström discretization of `W_T(psi) = I + K` on `L^2[0, T]` and its
//! ordinary and regularized log-determinants.
//!
//! `K_ij = sqrt(w_i) k(t_i - t_j) sqrt(w_j)`. Log-determinants along a
//! trapezoid sweep come from one unpivoted factorization: the leading
//! principal minors of the largest matrix give every shorter interval, and
//! summing principal logs of pivots close to 1 yields a branch continuous in `T`.

use crate::error::{invalid, Error, Result};
use crate::kernels::{KernelEvaluator, KernelTable};
use crate::quad::GaussLegendre;
use crate::specfun::C64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Smallest admissible pivot magnitude.
pub const PIVOT_FLOOR: f64 = 1e-300;
/// Nodes per Gauss-Legendre panel in [`Rule::GaussLegendre`].
pub const GL_PANEL: usize = 8;
const BLOCK: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    /// `N` equal subintervals, `N + 1` nodes.
    Trapezoid,
    /// `N / 8` equal panels of 8-point Gauss-Legendre, `N` nodes.
    GaussLegendre,
}

/// `I + K` as a dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedOperator {
    extent: f64,
    n: usize,
    rule: Rule,
    dim: usize,
    matrix: Vec<C64>,
    trace_k: C64,
}

impl DiscretizedOperator {
    /// Builds `I + K` from a two-point kernel `kernel(t_i, t_j)`.
    pub fn from_fn<F>(extent: f64, n: usize, rule: Rule, kernel: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> C64 + Sync,
    {
        let (nodes, weights) = nodes_and_weights(extent, n, rule)?;
        let dim = nodes.len();
        let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
        let mut matrix = vec![C64::new(0.0, 0.0); dim * dim];
        matrix.par_chunks_mut(dim).enumerate().for_each(|(i, row)| {
            for (j, a) in row.iter_mut().enumerate() {
                *a = kernel(nodes[i], nodes[j]) * (sqrt_w[i] * sqrt_w[j]);
            }
        });
        Self::assemble(extent, n, rule, dim, matrix)
    }

    fn assemble(extent: f64, n: usize, rule: Rule, dim: usize, mut matrix: Vec<C64>) -> Result<Self> {
        let mut trace_k = C64::new(0.0, 0.0);
        for i in 0..dim {
            let k = matrix[i * dim + i];
            trace_k += k;
            matrix[i * dim + i] = k + 1.0;
        }
        if matrix.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::NonFinite("operator matrix entry"));
        }
        Ok(Self {
            extent,
            n,
            rule,
            dim,
            matrix,
            trace_k,
        })
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    /// Grid parameter `N` (subintervals or nodes, see [`Rule`]).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry `(I + K)_ij`.
    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.matrix[i * self.dim + j]
    }

    /// `sum_i K_ii` accumulated before the identity was added.
    pub fn trace_k(&self) -> C64 {
        self.trace_k
    }
}

/// Nodes and weights of the rule on `[0, extent]`.
pub fn nodes_and_weights(extent: f64, n: usize, rule: Rule) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(invalid("T", format!("must be positive and finite, got {extent}")));
    }
    if n < 8 {
        return Err(invalid("N", format!("must be at least 8, got {n}")));
    }
    match rule {
        Rule::Trapezoid => {
            let h = extent / n as f64;
            let nodes = (0..=n).map(|i| i as f64 * h).collect();
            let mut weights = vec![h; n + 1];
            weights[0] = 0.5 * h;
            weights[n] = 0.5 * h;
            Ok((nodes, weights))
        }
        Rule::GaussLegendre => {
            if n % GL_PANEL != 0 {
                return Err(invalid("N", format!("must be a multiple of {GL_PANEL} for gauss-legendre")));
            }
            let rule = GaussLegendre::new(GL_PANEL);
            let panels = n / GL_PANEL;
            let width = extent / panels as f64;
            let (mut nodes, mut weights) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for p in 0..panels {
                let a = p as f64 * width;
                rule.push_nodes(a, a + width, &mut nodes, &mut weights);
            }
            Ok((nodes, weights))
        }
    }
}

/// Nyström discretization of `W_T(psi)` for the kernel of `kernel`.
pub fn discretize(kernel: &KernelEvaluator, extent: f64, n: usize, rule: Rule) -> Result<DiscretizedOperator> {
    let (nodes, weights) = nodes_and_weights(extent, n, rule)?;
    match rule {
        Rule::Trapezoid => {
            let table = kernel.tabulate(extent / n as f64, n)?;
            Ok(trapezoid_operator(&table, extent, n, &weights))
        }
        Rule::GaussLegendre => {
            let dim = nodes.len();
            let diffs: Vec<f64> = (0..dim)
                .flat_map(|i| nodes.iter().map(move |&t| (i, t)))
                .map(|(i, t)| nodes[i] - t)
                .collect();
            let values = kernel.values_at(&diffs)?;
            let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
            let matrix = values
                .iter()
                .enumerate()
                .map(|(idx, &k)| k * (sqrt_w[idx / dim] * sqrt_w[idx % dim]))
                .collect();
            DiscretizedOperator::assemble(extent, n, rule, dim, matrix)
        }
    }
}

fn trapezoid_operator(table: &KernelTable, extent: f64, n: usize, weights: &[f64]) -> DiscretizedOperator {
    let dim = weights.len();
    let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let mut matrix = vec![C64::new(0.0, 0.0); dim * dim];
    matrix.par_chunks_mut(dim).enumerate().for_each(|(i, row)| {
        for (j, a) in row.iter_mut().enumerate() {
            *a = table.get(i as i64 - j as i64) * (sqrt_w[i] * sqrt_w[j]);
        }
    });
    // entries are finite: the table rejects non-finite kernel values
    DiscretizedOperator::assemble(extent, n, Rule::Trapezoid, dim, matrix)
        .expect("finite kernel table")
}

fn wrap_phase(z: C64) -> C64 {
    let mut im = z.im % (2.0 * PI);
    if im > PI {
        im -= 2.0 * PI;
    } else if im <= -PI {
        im += 2.0 * PI;
    }
    C64::new(z.re, im)
}

/// `ln det(I + K)` from a partially pivoted LU; imaginary part in `(-pi, pi]`.
pub fn log_det(op: &DiscretizedOperator) -> Result<C64> {
    let n = op.dim;
    let mut a = op.matrix.clone();
    let mut acc = C64::new(0.0, 0.0);
    let mut swaps = 0usize;
    for k in 0..n {
        let (p, mag) = (k..n)
            .map(|i| (i, a[i * n + k].norm()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(mag >= PIVOT_FLOOR) {
            return Err(Error::SingularMatrix { index: k, magnitude: mag.max(0.0) });
        }
        if p != k {
            swaps += 1;
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
        }
        let pivot = a[k * n + k];
        acc += pivot.ln();
        let (head, tail) = a.split_at_mut((k + 1) * n);
        let pivot_row = &head[k * n..];
        tail.par_chunks_mut(n).for_each(|row| {
            let l = row[k] / pivot;
            if l.re != 0.0 || l.im != 0.0 {
                for j in k + 1..n {
                    row[j] -= l * pivot_row[j];
                }
            }
        });
    }
    if swaps % 2 == 1 {
        acc += C64::new(0.0, PI);
    }
    Ok(wrap_phase(acc))
}

/// `ln det(I + K) - tr K`; imaginary part in `(-pi, pi]`.
pub fn log_det2(op: &DiscretizedOperator) -> Result<C64> {
    Ok(wrap_phase(log_det(op)? - op.trace_k))
}

/// Pivots of the LU factorization without row exchanges, `p_k = D_{k+1} / D_k`
/// with `D_k` the leading principal minors. Blocked, right-looking.
pub fn unpivoted_pivots(op: &DiscretizedOperator) -> Result<Vec<C64>> {
    let mut a = op.matrix.clone();
    lu_in_place(&mut a, op.dim)
}

fn lu_in_place(a: &mut [C64], n: usize) -> Result<Vec<C64>> {
    let mut pivots = Vec::with_capacity(n);
    for kb in (0..n).step_by(BLOCK) {
        let ke = (kb + BLOCK).min(n);
        // factor the panel columns kb..ke
        for k in kb..ke {
            let pivot = a[k * n + k];
            if !(pivot.norm() >= PIVOT_FLOOR) {
                return Err(Error::SingularMatrix { index: k, magnitude: pivot.norm() });
            }
            pivots.push(pivot);
            let (head, tail) = a.split_at_mut((k + 1) * n);
            let prow = &head[k * n + k + 1..k * n + ke];
            tail.par_chunks_mut(n).for_each(|row| {
                let l = row[k] / pivot;
                row[k] = l;
                for (x, u) in row[k + 1..ke].iter_mut().zip(prow) {
                    *x -= l * u;
                }
            });
        }
        if ke == n {
            break;
        }
        // U12 = L11^{-1} A12
        for k in kb..ke {
            let (head, tail) = a.split_at_mut((k + 1) * n);
            let prow = &head[k * n + ke..k * n + n];
            for row in tail.chunks_mut(n).take(ke - k - 1) {
                let l = row[k];
                for (x, u) in row[ke..].iter_mut().zip(prow) {
                    *x -= l * u;
                }
            }
        }
        // A22 -= L21 U12
        let (head, tail) = a.split_at_mut(ke * n);
        let u12: Vec<&[C64]> = (kb..ke).map(|k| &head[k * n + ke..k * n + n]).collect();
        tail.par_chunks_mut(n).for_each(|row| {
            let (left, right) = row.split_at_mut(ke);
            schur_update(&left[kb..ke], &u12, right);
        });
    }
    Ok(pivots)
}

/// `dst -= sum_k l[k] * u[k]`, four rows of `u` per pass.
fn schur_update(l: &[C64], u: &[&[C64]], dst: &mut [C64]) {
    let mut k = 0;
    while k + 4 <= l.len() {
        let (l0, l1, l2, l3) = (l[k], l[k + 1], l[k + 2], l[k + 3]);
        let (u0, u1, u2, u3) = (u[k], u[k + 1], u[k + 2], u[k + 3]);
        for j in 0..dst.len() {
            dst[j] -= l0 * u0[j] + l1 * u1[j] + l2 * u2[j] + l3 * u3[j];
        }
        k += 4;
    }
    for (lk, uk) in l[k..].iter().zip(&u[k..]) {
        for (x, y) in dst.iter_mut().zip(uk.iter()) {
            *x -= lk * y;
        }
    }
}

/// Sum of principal logs of the unpivoted pivots: `ln det(I + K)` on the
/// branch continuous along the leading minors.
pub fn log_det_continuous(op: &DiscretizedOperator) -> Result<C64> {
    Ok(unpivoted_pivots(op)?.iter().map(|p| p.ln()).sum())
}

/// `ln det_2` on the branch continuous along the leading minors.
pub fn log_det2_continuous(op: &DiscretizedOperator) -> Result<C64> {
    Ok(log_det_continuous(op)? - op.trace_k)
}

/// `ln det_2` of the trapezoid operators with step `h` at every extent
/// `T = m h` for `m` in `steps` (each at least 8), on one continuous branch.
///
/// A kernel jump `J` at the origin puts the mean `k(0)` on the diagonal where
/// `tr K^2` needs `k(0+) k(0-)`; the resulting `-(J^2 / 8) sum w_i^2` error,
/// first order in `h`, is added back.
pub fn trapezoid_sweep(kernel: &KernelEvaluator, h: f64, steps: &[usize]) -> Result<Vec<C64>> {
    let m_max = *steps.iter().max().ok_or_else(|| invalid("T", "empty sweep"))?;
    if let Some(&m) = steps.iter().find(|&&m| m < 8) {
        return Err(invalid("N", format!("at least 8 steps per extent, got {m}")));
    }
    let table = kernel.tabulate(h, m_max)?;
    let k0 = table.get(0);
    let jump = kernel.jump_at_origin();
    let diagonal = jump * jump / 8.0;
    // nodes 0..m_max with weights h/2, h, h, ...; the last weight is
    // irrelevant since only pivots below m_max are reused unchanged
    let mut weights = vec![h; m_max + 1];
    weights[0] = 0.5 * h;
    let op = trapezoid_operator(&table, h * m_max as f64, m_max, &weights);
    let pivots = unpivoted_pivots(&op)?;
    let mut prefix = Vec::with_capacity(pivots.len() + 1);
    prefix.push(C64::new(0.0, 0.0));
    for p in &pivots {
        let last = *prefix.last().expect("nonempty");
        prefix.push(last + p.ln());
    }
    Ok(steps
        .iter()
        .map(|&m| {
            // halving the last weight turns pivot p into (1 + p) / 2
            let last = (pivots[m] + 1.0) * 0.5;
            let log_det = prefix[m] + last.ln();
            log_det - k0 * (h * m as f64) + diagonal * (h * h * (m as f64 - 0.5))
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convergence {
    /// Successive differences shrink; Richardson applied.
    Monotone,
    /// Differences did not shrink; the finest level is returned.
    NonMonotone,
}

/// Richardson-extrapolated `ln det_2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refined {
    pub value: C64,
    /// `|L(4N) - L(2N)|`.
    pub error: f64,
    /// Empirical convergence order in `h`.
    pub order: f64,
    /// Finest grid parameter used.
    pub n_finest: usize,
    pub status: Convergence,
}

/// Richardson extrapolation over three levels `h, h/2, h/4`.
///
/// The order `p` is estimated from the level differences. Near an integer
/// order the three levels eliminate `h^p` and `h^(p+1)`; otherwise a single
/// term with the estimated order is removed.
pub fn richardson(levels: [C64; 3], n_finest: usize) -> Refined {
    let d1 = levels[1] - levels[0];
    let d2 = levels[2] - levels[1];
    let error = d2.norm();
    if error == 0.0 {
        return Refined {
            value: levels[2],
            error,
            order: f64::INFINITY,
            n_finest,
            status: Convergence::Monotone,
        };
    }
    let ratio = d1.norm() / error;
    if ratio <= 1.0 || !ratio.is_finite() {
        return Refined {
            value: levels[2],
            error,
            order: 0.0,
            n_finest,
            status: Convergence::NonMonotone,
        };
    }
    let order = ratio.log2();
    let p = order.round();
    let value = if (order - p).abs() < 0.3 && (1.0..=4.0).contains(&p) {
        let (f1, f2) = (p.exp2(), (p + 1.0).exp2());
        let a1 = (levels[1] * f1 - levels[0]) / (f1 - 1.0);
        let a2 = (levels[2] * f1 - levels[1]) / (f1 - 1.0);
        (a2 * f2 - a1) / (f2 - 1.0)
    } else if order >= 0.5 {
        levels[2] + d2 / (ratio - 1.0)
    } else {
        // noise-dominated order estimates are not amplified
        levels[2]
    };
    Refined {
        value,
        error,
        order,
        n_finest,
        status: Convergence::Monotone,
    }
}

/// Richardson extrapolation of the trapezoid `ln det_2` at `T` over
/// `N0, 2 N0, 4 N0` subintervals, on the continuous branch.
pub fn refine(kernel: &KernelEvaluator, extent: f64, n0: usize) -> Result<Refined> {
    if n0 < 64 {
        return Err(invalid("N0", format!("must be at least 64, got {n0}")));
    }
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(invalid("T", format!("must be positive and finite, got {extent}")));
    }
    let mut levels = [C64::new(0.0, 0.0); 3];
    for (i, slot) in levels.iter_mut().enumerate() {
        let n = n0 << i;
        *slot = trapezoid_sweep(kernel, extent / n as f64, &[n])?[0];
    }
    Ok(richardson(levels, 4 * n0))
}

/// Richardson-extrapolated `ln det_2` at each extent in `extents`, from three
/// trapezoid sweeps with steps `h, h/2, h/4` where `h = 4 / n_per_unit`.
/// Every extent must be a multiple of `h`; phases stay on one branch.
pub fn refined_sweep(kernel: &KernelEvaluator, extents: &[f64], n_per_unit: usize) -> Result<Vec<Refined>> {
    if n_per_unit < 8 {
        return Err(invalid("N_per_unit", format!("must be at least 8, got {n_per_unit}")));
    }
    let finest = 1.0 / n_per_unit as f64;
    let mut levels: Vec<[C64; 3]> = vec![[C64::new(0.0, 0.0); 3]; extents.len()];
    for level in 0..3 {
        let h = finest * (1usize << (2 - level)) as f64;
        let steps = extents
            .iter()
            .map(|&t| {
                let m = (t / h).round();
                if m < 8.0 || ((m * h - t) / t).abs() > 1e-12 {
                    Err(invalid(
                        "T",
                        format!("T = {t} must be a multiple of {h} with at least 8 steps"),
                    ))
                } else {
                    Ok(m as usize)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        for (slot, v) in levels.iter_mut().zip(trapezoid_sweep(kernel, h, &steps)?) {
            slot[level] = v;
        }
    }
    Ok(extents
        .iter()
        .zip(levels)
        .map(|(&t, l)| richardson(l, (t * n_per_unit as f64).round() as usize))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{xray_symbol, PhysicalParams, SymbolSpec};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn zero_kernel_gives_identity() {
        let k = KernelEvaluator::new(&SymbolSpec::trivial()).unwrap();
        for rule in [Rule::Trapezoid, Rule::GaussLegendre] {
            let op = discretize(&k, 3.0, 16, rule).unwrap();
            for i in 0..op.dim() {
                for j in 0..op.dim() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert_eq!(op.entry(i, j), c(want, 0.0));
                }
            }
            assert_eq!(log_det(&op).unwrap(), c(0.0, 0.0));
            assert_eq!(log_det2(&op).unwrap(), c(0.0, 0.0));
        }
        let r = refine(&k, 5.0, 64).unwrap();
        assert_eq!((r.value, r.error), (c(0.0, 0.0), 0.0));
    }

    #[test]
    fn rank_one_constant_kernel() {
        let cst = c(0.3, -0.1);
        for rule in [Rule::Trapezoid, Rule::GaussLegendre] {
            let op = DiscretizedOperator::from_fn(2.5, 24, rule, |_, _| cst).unwrap();
            let want = (cst * 2.5 + 1.0).ln();
            assert!(close(log_det(&op).unwrap(), want, 1e-13));
            assert!(close(log_det2(&op).unwrap(), want - cst * 2.5, 1e-13));
        }
    }

    #[test]
    fn small_matrix_cases() {
        let op = DiscretizedOperator::from_fn(8.0, 8, Rule::GaussLegendre, |a, b| {
            if a == b {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
        .unwrap();
        // diagonal 1 + w_i
        let want: C64 = (0..8)
            .map(|i| (op.entry(i, i)).ln())
            .sum();
        assert!(close(log_det(&op).unwrap(), want, 1e-14));
        let want2 = want - op.trace_k();
        assert!(close(log_det2(&op).unwrap(), want2, 1e-14));
        assert!(matches!(
            DiscretizedOperator::from_fn(1.0, 4, Rule::Trapezoid, |_, _| c(0.0, 0.0)),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn singular_matrix_is_reported() {
        // I + K with K = -I on the trapezoid weights is singular when w = 1
        let op = DiscretizedOperator::from_fn(8.0, 8, Rule::Trapezoid, |a, b| {
            if a == b && a > 0.0 && a < 8.0 {
                c(-1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
        .unwrap();
        assert!(matches!(log_det(&op), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn pivoted_and_unpivoted_agree() {
        let p = PhysicalParams {
            coupling: 0.8,
            ..Default::default()
        };
        let k = KernelEvaluator::new(&xray_symbol(&p).unwrap()).unwrap();
        let op = discretize(&k, 6.0, 150, Rule::Trapezoid).unwrap();
        let a = log_det2(&op).unwrap();
        let b = wrap_phase(log_det2_continuous(&op).unwrap());
        assert!(close(a, b, 1e-11), "{a} vs {b}");
    }

    #[test]
    fn sweep_matches_direct_operators() {
        let k = KernelEvaluator::new(&SymbolSpec::pure_fh(c(0.2, 0.0), c(-0.3, 0.1)).unwrap()).unwrap();
        let h = 0.05;
        let steps = [40usize, 100, 130];
        let sweep = trapezoid_sweep(&k, h, &steps).unwrap();
        let j = k.jump_at_origin();
        assert!(j.norm() > 0.1);
        for (&m, v) in steps.iter().zip(&sweep) {
            let op = discretize(&k, h * m as f64, m, Rule::Trapezoid).unwrap();
            let diagonal = j * j / 8.0 * (h * h * (m as f64 - 0.5));
            let direct = log_det2_continuous(&op).unwrap() + diagonal;
            assert!(close(*v, direct, 1e-11), "m={m}: {v} vs {direct}");
        }
    }

    #[test]
    fn gaussian_bump_grid_convergence() {
        let k = KernelEvaluator::new(&SymbolSpec::gaussian_bump(0.5).unwrap()).unwrap();
        let at = |n| log_det2(&discretize(&k, 10.0, n, Rule::Trapezoid).unwrap()).unwrap();
        assert!((at(8) - at(16)).norm() > 1e-6);
        let (a, b) = (at(512), at(1024));
        assert!((a - b).norm() < 1e-4 * b.norm());
        let r1 = refine(&k, 10.0, 64).unwrap();
        let r2 = refine(&k, 10.0, 128).unwrap();
        assert!((r1.value - r2.value).norm() < 1e-6, "{:?} {:?}", r1, r2);
    }

    #[test]
    fn rules_agree_within_error_indicators() {
        let k = KernelEvaluator::new(&SymbolSpec::gaussian_bump(0.5).unwrap()).unwrap();
        let trap = refine(&k, 4.0, 64).unwrap();
        let gl: Vec<C64> = [64, 128, 256]
            .iter()
            .map(|&n| log_det2(&discretize(&k, 4.0, n, Rule::GaussLegendre).unwrap()).unwrap())
            .collect();
        let gl = richardson([gl[0], gl[1], gl[2]], 256);
        let tol = 3.0 * trap.error.max(gl.error).max(1e-13);
        assert!((trap.value - gl.value).norm() <= tol, "{:?} {:?}", trap, gl);
    }

    #[test]
    fn xray_log_det2_scales_linearly_in_v() {
        let at = |v: f64| {
            let p = PhysicalParams {
                coupling: v,
                ..Default::default()
            };
            let k = KernelEvaluator::new(&xray_symbol(&p).unwrap()).unwrap();
            log_det2(&discretize(&k, 4.0, 64, Rule::Trapezoid).unwrap()).unwrap()
        };
        assert_eq!(at(0.0), c(0.0, 0.0));
        let (a, b) = (at(1e-3), at(1e-2));
        // det_2 is second order in v
        let cst = b.norm() / 1e-2;
        assert!(a.norm() <= cst * 1e-3);
    }

    #[test]
    fn richardson_recovers_known_order() {
        let exact = c(1.0, -2.0);
        let level = |h: f64| exact + c(0.3, 0.1) * h * h;
        let r = richardson([level(0.1), level(0.05), level(0.025)], 0);
        assert!((r.order - 2.0).abs() < 1e-9);
        assert!(close(r.value, exact, 1e-12));
        // orders 1 and 2 together are eliminated exactly
        let mixed = |h: f64| exact + c(0.2, 0.0) * h + c(-0.7, 0.3) * h * h;
        let r = richardson([mixed(0.02), mixed(0.01), mixed(0.005)], 0);
        assert!((r.order - 1.0).abs() < 0.3);
        assert!(close(r.value, exact, 1e-12));
        let bad = richardson([c(1.0, 0.0), c(1.1, 0.0), c(1.3, 0.0)], 0);
        assert_eq!(bad.status, Convergence::NonMonotone);
    }
}
