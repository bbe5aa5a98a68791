//! Quadrature building blocks: Gauss–Legendre panels, tensor disk rules and an
//! adaptive vector-valued integrator.

use crate::geometry::Point;
use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64 as C64;
use std::f64::consts::TAU;
use std::num::NonZeroUsize;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap());
        let (nodes, weights) = rule.iter().map(|(x, w)| (*x, *w)).unzip();
        GaussRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (m, h) = ((a + b) / 2.0, (b - a) / 2.0);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (m + h * x, h * w))
    }
}

/// Tensor rule on a disk: Gauss–Legendre in radius, trapezoid in angle.
#[derive(Clone, Debug)]
pub struct DiskRule {
    pub points: Vec<(Point, f64)>,
}

impl DiskRule {
    pub fn new(center: Point, radius: f64, n_r: usize, n_theta: usize) -> Self {
        let g = GaussRule::new(n_r);
        let dth = TAU / n_theta as f64;
        let mut points = Vec::with_capacity(n_r * n_theta);
        for (r, w) in g.on(0.0, radius) {
            for j in 0..n_theta {
                // Half-step offset keeps nodes off the positive axis.
                let th = (j as f64 + 0.5) * dth;
                points.push((center + C64::from_polar(r, th), w * r * dth));
            }
        }
        DiskRule { points }
    }

    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.1).sum()
    }
}

/// Outcome of [`adaptive`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adaptive<const N: usize> {
    pub value: [f64; N],
    pub error: f64,
    pub converged: bool,
}

fn panel<const N: usize>(
    rule: &GaussRule,
    a: f64,
    b: f64,
    f: &mut impl FnMut(f64) -> [f64; N],
) -> [f64; N] {
    let mut acc = [0.0; N];
    for (x, w) in rule.on(a, b) {
        let v = f(x);
        for k in 0..N {
            acc[k] += w * v[k];
        }
    }
    acc
}

fn max_diff<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: f64,
    depth: u32,
}

impl<const N: usize> PartialEq for Panel<N> {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl<const N: usize> Eq for Panel<N> {}
impl<const N: usize> PartialOrd for Panel<N> {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl<const N: usize> Ord for Panel<N> {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Split `[a, b]` in two; the error estimate compares the halves with `whole`.
fn split<const N: usize>(
    rule: &GaussRule,
    a: f64,
    b: f64,
    whole: &[f64; N],
    depth: u32,
    f: &mut impl FnMut(f64) -> [f64; N],
) -> [Panel<N>; 2] {
    let m = 0.5 * (a + b);
    let left = panel(rule, a, m, f);
    let right = panel(rule, m, b, f);
    let mut both = left;
    for k in 0..N {
        both[k] += right[k];
    }
    // Each half inherits half of the parent's estimate.
    let error = max_diff(whole, &both) / 2.0;
    [
        Panel {
            a,
            b: m,
            value: left,
            error,
            depth: depth + 1,
        },
        Panel {
            a: m,
            b,
            value: right,
            error,
            depth: depth + 1,
        },
    ]
}

/// Globally adaptive bisection of Gauss panels over the given breakpoints:
/// the panel with the largest error estimate is split until the summed
/// estimate drops below `tol`. Panels at `max_depth` are not split again.
pub fn adaptive<const N: usize>(
    mut f: impl FnMut(f64) -> [f64; N],
    breaks: &[f64],
    rule: &GaussRule,
    tol: f64,
    max_depth: u32,
) -> Adaptive<N> {
    let mut heap = std::collections::BinaryHeap::new();
    let mut finished: Vec<Panel<N>> = Vec::new();
    let mut total = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let whole = panel(rule, w[0], w[1], &mut f);
            for p in split(rule, w[0], w[1], &whole, 0, &mut f) {
                total += p.error;
                heap.push(p);
            }
        }
    }
    let mut budget = 20_000usize;
    while total > tol && budget > 0 {
        let Some(p) = heap.pop() else { break };
        if p.depth >= max_depth {
            finished.push(p);
            continue;
        }
        budget -= 1;
        total -= p.error;
        for c in split(rule, p.a, p.b, &p.value, p.depth, &mut f) {
            total += c.error;
            heap.push(c);
        }
    }
    let mut value = [0.0; N];
    let mut error = 0.0;
    for p in heap.iter().chain(finished.iter()) {
        for k in 0..N {
            value[k] += p.value[k];
        }
        error += p.error;
    }
    Adaptive {
        value,
        error,
        converged: error <= tol,
    }
}
