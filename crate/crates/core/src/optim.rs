//! Limited-memory BFGS with a strong-Wolfe line search.
//!
//! The line search is the bracketing/zoom scheme of Nocedal and Wright with
//! cubic interpolation. A failed search clears the curvature memory and
//! retries along steepest descent once before giving up; the best point seen
//! is always returned.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub c1: f64,
    pub c2: f64,
    /// Stop when the largest gradient component falls below this.
    pub gtol: f64,
    /// Stop when an accepted step lowers `f` by less than this, relative.
    pub ftol: f64,
    pub max_iter: usize,
    pub max_line_search: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            c1: 1e-4,
            c2: 0.9,
            gtol: 1e-9,
            ftol: 1e-14,
            max_iter: 5000,
            max_line_search: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    FunctionTolerance,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    /// Objective at the start and after every accepted step.
    pub trace: Vec<f64>,
    pub termination: Termination,
}

#[derive(Clone)]
struct Point {
    alpha: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    slope: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Minimiser of the cubic through two points with known slopes, if inside
/// the safeguarded interval.
fn cubic_min(a: &Point, b: &Point) -> Option<f64> {
    let d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.slope * b.slope;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let t = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
    t.is_finite().then_some(t)
}

struct Search<'a, F> {
    f: &'a mut F,
    x0: &'a [f64],
    dir: &'a [f64],
    f0: f64,
    slope0: f64,
    opts: &'a LbfgsOptions,
    evals: usize,
    best: Option<Point>,
}

impl<F: FnMut(&[f64]) -> (f64, Vec<f64>)> Search<'_, F> {
    fn eval(&mut self, alpha: f64) -> Point {
        let x: Vec<f64> = self.x0.iter().zip(self.dir).map(|(x, d)| x + alpha * d).collect();
        let (f, g) = (self.f)(&x);
        self.evals += 1;
        let slope = dot(&g, self.dir);
        let p = Point { alpha, x, f, g, slope };
        if p.f.is_finite() && self.best.as_ref().is_none_or(|b| p.f < b.f) {
            self.best = Some(p.clone());
        }
        p
    }

    fn armijo(&self, p: &Point) -> bool {
        p.f <= self.f0 + self.opts.c1 * p.alpha * self.slope0
    }

    fn curvature(&self, p: &Point) -> bool {
        p.slope.abs() <= -self.opts.c2 * self.slope0
    }

    fn run(&mut self, alpha0: f64) -> Option<Point> {
        let origin = Point {
            alpha: 0.0,
            x: self.x0.to_vec(),
            f: self.f0,
            g: Vec::new(),
            slope: self.slope0,
        };
        let mut prev = origin;
        let mut alpha = alpha0;
        for i in 0..self.opts.max_line_search {
            let p = self.eval(alpha);
            if !p.f.is_finite() {
                alpha = 0.5 * (prev.alpha + alpha);
                continue;
            }
            if !self.armijo(&p) || (i > 0 && p.f >= prev.f) {
                return self.zoom(prev, p);
            }
            if self.curvature(&p) {
                return Some(p);
            }
            if p.slope >= 0.0 {
                return self.zoom(p, prev);
            }
            alpha = p.alpha * 2.0;
            prev = p;
        }
        None
    }

    fn zoom(&mut self, mut lo: Point, mut hi: Point) -> Option<Point> {
        while self.evals < self.opts.max_line_search {
            let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
            let width = b - a;
            if width <= f64::EPSILON * b.max(1e-300) {
                break;
            }
            let mut alpha = cubic_min(&lo, &hi).unwrap_or(0.5 * (a + b));
            let margin = 0.1 * width;
            if !(a + margin..=b - margin).contains(&alpha) {
                alpha = 0.5 * (a + b);
            }
            let p = self.eval(alpha);
            if !self.armijo(&p) || p.f >= lo.f {
                hi = p;
            } else {
                if self.curvature(&p) {
                    return Some(p);
                }
                if p.slope * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = lo;
                }
                lo = p;
            }
        }
        // accept a point with sufficient decrease even without curvature
        (lo.alpha > 0.0 && self.armijo(&lo)).then_some(lo)
    }
}

/// Minimise `f`, which returns the value and gradient at a point.
pub fn minimise<F>(mut f: F, x0: &[f64], opts: &LbfgsOptions) -> LbfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x);
    let mut evaluations = 1;
    let mut trace = vec![fx];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut iterations = 0;
    let mut retried = false;

    let termination = loop {
        if x.is_empty() || inf_norm(&g) <= opts.gtol {
            break Termination::GradientTolerance;
        }
        if iterations >= opts.max_iter {
            break Termination::MaxIterations;
        }

        // two-loop recursion
        let mut q: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(memory.len());
        for (s, y, rho) in memory.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(q, y)| *q -= a * y);
            alphas.push(a);
        }
        if let Some((s, y, _)) = memory.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(q, s)| *q += (a - b) * s);
        }
        let mut dir = q;
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 || !slope.is_finite() {
            memory.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&g, &dir);
        }
        let alpha0 = if memory.is_empty() {
            (1.0 / inf_norm(&g)).min(1.0)
        } else {
            1.0
        };

        let mut search = Search {
            f: &mut f,
            x0: &x,
            dir: &dir,
            f0: fx,
            slope0: slope,
            opts,
            evals: 0,
            best: None,
        };
        let accepted = search.run(alpha0);
        evaluations += search.evals;
        let best = search.best.take();

        let Some(p) = accepted else {
            if !retried && !memory.is_empty() {
                memory.clear();
                retried = true;
                continue;
            }
            if let Some(b) = best.filter(|b| b.f < fx) {
                x = b.x;
                fx = b.f;
                g = b.g;
                trace.push(fx);
            }
            break Termination::LineSearchFailed;
        };
        retried = false;
        iterations += 1;

        let s: Vec<f64> = p.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = p.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > f64::EPSILON * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if memory.len() == opts.memory {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        let decrease = fx - p.f;
        x = p.x;
        fx = p.f;
        g = p.g;
        trace.push(fx);
        if decrease <= opts.ftol * fx.abs().max(1.0) {
            break if inf_norm(&g) <= opts.gtol {
                Termination::GradientTolerance
            } else {
                Termination::FunctionTolerance
            };
        }
    };

    LbfgsResult {
        x,
        f: fx,
        grad: g,
        iterations,
        evaluations,
        trace,
        termination,
    }
}
