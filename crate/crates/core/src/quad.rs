//! Gauss-Legendre panels on the real line with geometric grading toward
//! singular points.

use crate::specfun::C64;
use std::sync::OnceLock;

/// Points per panel used throughout the crate.
pub const PANEL_ORDER: usize = 10;

/// Geometric grading stops once a panel is this close to its singular end
/// (relative to the panel scale), or at a few ulps of the location.
/// Default depth of dyadic grading, relative to the graded stretch.
pub const GRADING_FLOOR: f64 = 1e-24;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..(n + 1) / 2 {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                if n == 1 {
                    p0 = 1.0;
                    p1 = x;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: FnMut(f64) -> C64>(&self, a: f64, b: f64, mut f: F) -> C64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut acc = C64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x) * *w;
        }
        acc * half
    }

    /// Appends the mapped nodes and weights of `[a, b]` to the buffers.
    pub fn push_nodes(&self, a: f64, b: f64, nodes: &mut Vec<f64>, weights: &mut Vec<f64>) {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            nodes.push(mid + half * x);
            weights.push(w * half);
        }
    }
}

/// The shared panel rule.
pub fn panel_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(PANEL_ORDER))
}

/// Panel layout of a finite interval.
#[derive(Debug, Clone, Default)]
pub struct PanelPlan {
    pub panels: Vec<(f64, f64)>,
}

impl PanelPlan {
    /// Panels covering `[lo, hi]`, graded dyadically toward every point of
    /// `graded` inside the interval, with no panel wider than `max_width`.
    pub fn new(lo: f64, hi: f64, graded: &[f64], max_width: f64) -> Self {
        Self::with_floor(lo, hi, graded, max_width, GRADING_FLOOR)
    }

    /// As [`PanelPlan::new`], stopping the grading at `floor` times the
    /// length of each graded stretch.
    pub fn with_floor(lo: f64, hi: f64, graded: &[f64], max_width: f64, floor: f64) -> Self {
        assert!(hi > lo && max_width > 0.0 && floor > 0.0);
        let mut cuts: Vec<(f64, bool)> = vec![(lo, false), (hi, false)];
        for &g in graded {
            if g > lo && g < hi {
                cuts.push((g, true));
            } else if g == lo {
                cuts[0].1 = true;
            } else if g == hi {
                cuts[1].1 = true;
            }
        }
        cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
        cuts.dedup_by(|a, b| {
            if a.0 == b.0 {
                b.1 |= a.1;
                true
            } else {
                false
            }
        });
        let mut panels = Vec::new();
        for pair in cuts.windows(2) {
            let ((l, gl), (r, gr)) = (pair[0], pair[1]);
            match (gl, gr) {
                (false, false) => uniform(l, r, max_width, &mut panels),
                (true, false) => graded_from(l, r, max_width, floor, &mut panels),
                (false, true) => graded_from(r, l, max_width, floor, &mut panels),
                (true, true) => {
                    let m = 0.5 * (l + r);
                    graded_from(l, m, max_width, floor, &mut panels);
                    graded_from(r, m, max_width, floor, &mut panels);
                }
            }
        }
        panels.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { panels }
    }

    /// Total number of quadrature nodes.
    pub fn node_count(&self) -> usize {
        self.panels.len() * PANEL_ORDER
    }

    pub fn integrate<F: FnMut(f64) -> C64>(&self, mut f: F) -> C64 {
        let rule = panel_rule();
        self.panels
            .iter()
            .map(|&(a, b)| rule.integrate(a, b, &mut f))
            .sum()
    }

    /// Flattened nodes and weights.
    pub fn nodes_and_weights(&self) -> (Vec<f64>, Vec<f64>) {
        let rule = panel_rule();
        let mut nodes = Vec::with_capacity(self.node_count());
        let mut weights = Vec::with_capacity(self.node_count());
        for &(a, b) in &self.panels {
            rule.push_nodes(a, b, &mut nodes, &mut weights);
        }
        (nodes, weights)
    }

    /// Splits every panel in two.
    pub fn refined(&self) -> Self {
        let panels = self
            .panels
            .iter()
            .flat_map(|&(a, b)| {
                let m = 0.5 * (a + b);
                [(a, m), (m, b)]
            })
            .collect();
        Self { panels }
    }
}

fn uniform(l: f64, r: f64, max_width: f64, out: &mut Vec<(f64, f64)>) {
    let n = ((r - l) / max_width).ceil().max(1.0) as usize;
    let h = (r - l) / n as f64;
    for i in 0..n {
        let a = l + h * i as f64;
        let b = if i + 1 == n { r } else { l + h * (i + 1) as f64 };
        out.push((a, b));
    }
}

/// Dyadic grading from the singular end `s` toward `e` (either side).
fn graded_from(s: f64, e: f64, max_width: f64, floor: f64, out: &mut Vec<(f64, f64)>) {
    let len = (e - s).abs();
    let dir = (e - s).signum();
    let floor = (len * floor).max(8.0 * f64::EPSILON * s.abs());
    let mut d = len;
    while d * 0.5 > floor {
        let (near, far) = (s + dir * d * 0.5, s + dir * d);
        let (a, b) = if dir > 0.0 { (near, far) } else { (far, near) };
        uniform(a, b, max_width, out);
        d *= 0.5;
    }
    let inner = s + dir * d;
    let (a, b) = if dir > 0.0 { (s, inner) } else { (inner, s) };
    out.push((a, b));
}
