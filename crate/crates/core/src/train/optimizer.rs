//! Box-constrained first-order minimization.
//!
//! Projected gradient descent: a Barzilai–Borwein trial step, halved until
//! the projected Armijo condition holds. Accepted iterates never increase the
//! objective. Near the optimum the Armijo test can drown in rounding noise;
//! for convex objectives a step is then also accepted when the gradient at the
//! trial point still points back along the step, which by convexity implies
//! `f(x_new) ≤ f(x)`.

/// Objective with an analytic gradient.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes the gradient into `grad` and returns the value.
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;

    fn is_convex(&self) -> bool {
        false
    }
}

/// Per-coordinate box `[lower, upper]`; infinite ends are unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn unbounded(n: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    #[inline]
    pub fn clamp(&self, i: usize, v: f64) -> f64 {
        v.max(self.lower[i]).min(self.upper[i])
    }

    pub fn project(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = self.clamp(i, *v);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, &v)| v >= self.lower[i] && v <= self.upper[i])
    }
}

/// Largest first-order optimality violation: `|g|` for interior coordinates,
/// the part of `g` pushing outward for coordinates at a bound.
pub fn kkt_violation(x: &[f64], grad: &[f64], bounds: &Bounds) -> f64 {
    x.iter()
        .zip(grad)
        .enumerate()
        .map(|(i, (&v, &g))| {
            let at_lower = v <= bounds.lower[i];
            let at_upper = v >= bounds.upper[i];
            match (at_lower, at_upper) {
                (true, true) => 0.0,
                (true, false) => (-g).max(0.0),
                (false, true) => g.max(0.0),
                (false, false) => g.abs(),
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub initial_step: f64,
    pub armijo: f64,
    pub backtrack: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            tol: 1e-6,
            initial_step: 1.0,
            armijo: 1e-4,
            backtrack: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_violation: f64,
    /// Objective after every accepted step, starting with the initial point.
    pub trace: Vec<f64>,
}

pub fn minimize<O: Objective + ?Sized>(
    objective: &O,
    mut x: Vec<f64>,
    bounds: &Bounds,
    options: &StepOptions,
) -> Minimum {
    let n = objective.dim();
    assert_eq!(x.len(), n);
    bounds.project(&mut x);
    let mut grad = vec![0.0; n];
    let mut value = objective.value_grad(&x, &mut grad);
    let mut trace = vec![value];
    let mut kkt = kkt_violation(&x, &grad, bounds);
    let mut step = options.initial_step;
    let mut iterations = 0;

    let mut x_new = vec![0.0; n];
    let mut grad_new = vec![0.0; n];
    while kkt > options.tol && iterations < options.max_iters {
        iterations += 1;
        let mut t = step;
        let mut accepted = None;
        while t > 1e-30 {
            for i in 0..n {
                x_new[i] = bounds.clamp(i, x[i] - t * grad[i]);
            }
            let decrease: f64 = (0..n).map(|i| grad[i] * (x_new[i] - x[i])).sum();
            if decrease == 0.0 {
                break;
            }
            let trial = objective.value(&x_new);
            if trial <= value + options.armijo * decrease {
                accepted = Some(objective.value_grad(&x_new, &mut grad_new));
                break;
            }
            if objective.is_convex() && (trial - value).abs() <= 64.0 * f64::EPSILON * value.abs().max(1.0) {
                let v = objective.value_grad(&x_new, &mut grad_new);
                let slope: f64 = (0..n).map(|i| grad_new[i] * (x_new[i] - x[i])).sum();
                if slope <= 0.0 {
                    accepted = Some(v);
                    break;
                }
            }
            t *= options.backtrack;
        }
        let Some(new_value) = accepted else {
            break;
        };

        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..n {
            let s = x_new[i] - x[i];
            ss += s * s;
            sy += s * (grad_new[i] - grad[i]);
        }
        step = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { (2.0 * t).min(1e12) };

        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut grad, &mut grad_new);
        value = new_value;
        trace.push(value);
        kkt = kkt_violation(&x, &grad, bounds);
    }

    Minimum {
        converged: kkt <= options.tol,
        x,
        value,
        iterations,
        kkt_violation: kkt,
        trace,
    }
}
