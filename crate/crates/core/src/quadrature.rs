//! Tensor-product Gauss–Legendre quadrature with adaptive quad-tree refinement.
//!
//! Each cell of the rectangle is integrated with an `order × order` Gauss–Legendre
//! rule and then again as four children. A cell is accepted once the coarse and
//! refined estimates differ by less than its share of the absolute tolerance
//! (share proportional to cell area). Cells that are still unresolved at
//! `max_depth` are reported through [`Error::Accuracy`] with the summed residual.

use std::f64::consts::PI;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<F> {
    nodes: Vec<F>,
    weights: Vec<F>,
}

impl<F: Real> GaussLegendre<F> {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let (nodes, weights) = legendre_nodes(order);
        GaussLegendre {
            nodes: nodes.into_iter().map(F::of).collect(),
            weights: weights.into_iter().map(F::of).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[F] {
        &self.nodes
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn integrate<G>(&self, a: F, b: F, f: G) -> F
    where
        G: Fn(F) -> F,
    {
        let half = (b - a) / F::of(2.0);
        let mid = (a + b) / F::of(2.0);
        let mut acc = F::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += *w * f(mid + half * *x);
        }
        acc * half
    }

    /// Fixed (non-adaptive) tensor rule over a rectangle.
    pub fn integrate_rect<G>(&self, rect: &Rect<F>, f: &G) -> Complex<F>
    where
        G: Fn(F, F) -> Complex<F>,
    {
        let two = F::of(2.0);
        let hx = (rect.x1 - rect.x0) / two;
        let hy = (rect.y1 - rect.y0) / two;
        let mx = (rect.x0 + rect.x1) / two;
        let my = (rect.y0 + rect.y1) / two;
        let mut acc = Complex::new(F::zero(), F::zero());
        for (xi, wi) in self.nodes.iter().zip(&self.weights) {
            let x = mx + hx * *xi;
            let mut row = Complex::new(F::zero(), F::zero());
            for (yj, wj) in self.nodes.iter().zip(&self.weights) {
                row += f(x, my + hy * *yj) * *wj;
            }
            acc += row * *wi;
        }
        acc * (hx * hy)
    }
}

/// Newton iteration on the three-term Legendre recurrence.
fn legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect<F> {
    pub x0: F,
    pub x1: F,
    pub y0: F,
    pub y1: F,
}

impl<F: Real> Rect<F> {
    pub fn new(x0: F, x1: F, y0: F, y1: F) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn area(&self) -> F {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    fn split(&self) -> [Rect<F>; 4] {
        let xm = (self.x0 + self.x1) / F::of(2.0);
        let ym = (self.y0 + self.y1) / F::of(2.0);
        [
            Rect::new(self.x0, xm, self.y0, ym),
            Rect::new(xm, self.x1, self.y0, ym),
            Rect::new(self.x0, xm, ym, self.y1),
            Rect::new(xm, self.x1, ym, self.y1),
        ]
    }

    fn grid(&self, k: usize) -> Vec<Rect<F>> {
        let kf = F::from_usize(k).unwrap();
        let dx = (self.x1 - self.x0) / kf;
        let dy = (self.y1 - self.y0) / kf;
        let mut out = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                let fi = F::from_usize(i).unwrap();
                let fj = F::from_usize(j).unwrap();
                let x1 = if i + 1 == k {
                    self.x1
                } else {
                    self.x0 + dx * (fi + F::one())
                };
                let y1 = if j + 1 == k {
                    self.y1
                } else {
                    self.y0 + dy * (fj + F::one())
                };
                out.push(Rect::new(self.x0 + dx * fi, x1, self.y0 + dy * fj, y1));
            }
        }
        out
    }
}

/// Settings for [`integrate_2d`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadOptions {
    /// Absolute tolerance on the successive-level difference, summed over cells.
    pub abs_tol: f64,
    pub max_depth: usize,
    /// The rectangle is first cut into `initial_splits²` cells.
    pub initial_splits: usize,
    pub order: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-8,
            max_depth: 12,
            initial_splits: 4,
            order: 10,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_initial_splits(mut self, k: usize) -> Self {
        self.initial_splits = k;
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral<F> {
    pub value: Complex<F>,
    /// Sum of accepted successive-level differences.
    pub error_estimate: F,
    pub evaluations: usize,
}

struct Adaptive<'a, F, G> {
    rule: &'a GaussLegendre<F>,
    f: &'a G,
    max_depth: usize,
    evaluations: usize,
    error: F,
    unresolved: F,
}

impl<F: Real, G: Fn(F, F) -> Complex<F>> Adaptive<'_, F, G> {
    fn rule(&mut self, r: &Rect<F>) -> Complex<F> {
        self.evaluations += self.rule.order() * self.rule.order();
        self.rule.integrate_rect(r, self.f)
    }

    fn refine(&mut self, cell: Rect<F>, coarse: Complex<F>, tol: F, depth: usize) -> Complex<F> {
        let children = cell.split();
        let parts: [Complex<F>; 4] = [
            self.rule(&children[0]),
            self.rule(&children[1]),
            self.rule(&children[2]),
            self.rule(&children[3]),
        ];
        let fine = parts[0] + parts[1] + parts[2] + parts[3];
        let diff = (fine - coarse).norm();
        // differences at rounding level cannot be refined away; abscissae of a
        // narrow cell far from the origin carry extra relative error
        let cond = F::one()
            + cell.x0.abs().max(cell.x1.abs()) / (cell.x1 - cell.x0)
            + cell.y0.abs().max(cell.y1.abs()) / (cell.y1 - cell.y0);
        let noise = F::epsilon()
            * F::of(64.0)
            * cond
            * (parts[0].norm() + parts[1].norm() + parts[2].norm() + parts[3].norm());
        if diff <= tol.max(noise) {
            self.error += diff;
            return fine;
        }
        if depth >= self.max_depth {
            self.unresolved += diff;
            return fine;
        }
        let child_tol = tol / F::of(4.0);
        let mut acc = Complex::new(F::zero(), F::zero());
        for (child, part) in children.into_iter().zip(parts) {
            acc += self.refine(child, part, child_tol, depth + 1);
        }
        acc
    }
}

/// Adaptive integral of a complex-valued `f(x, y)` over `rect`.
pub fn integrate_2d<F, G>(rect: Rect<F>, opts: &QuadOptions, f: G) -> Result<Integral<F>>
where
    F: Real,
    G: Fn(F, F) -> Complex<F>,
{
    let rule = GaussLegendre::new(opts.order);
    integrate_2d_with(&rule, rect, opts, &f)
}

pub(crate) fn integrate_2d_with<F, G>(
    rule: &GaussLegendre<F>,
    rect: Rect<F>,
    opts: &QuadOptions,
    f: &G,
) -> Result<Integral<F>>
where
    F: Real,
    G: Fn(F, F) -> Complex<F>,
{
    let mut state = Adaptive {
        rule,
        f,
        max_depth: opts.max_depth,
        evaluations: 0,
        error: F::zero(),
        unresolved: F::zero(),
    };
    let cells = rect.grid(opts.initial_splits.max(1));
    let tol = F::of(opts.abs_tol) / F::from_usize(cells.len()).unwrap();
    let mut total = Complex::new(F::zero(), F::zero());
    for cell in cells {
        let coarse = state.rule(&cell);
        total += state.refine(cell, coarse, tol, 0);
    }
    if state.unresolved > F::zero() {
        return Err(Error::Accuracy {
            residual: state.unresolved.as_f64(),
            tolerance: opts.abs_tol,
        });
    }
    Ok(Integral {
        value: total,
        error_estimate: state.error,
        evaluations: state.evaluations,
    })
}
