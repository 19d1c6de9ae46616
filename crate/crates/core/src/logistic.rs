//! Binary logistic regression over sparse rows.
//!
//! Parameters are laid out as `[bias, w_0, .., w_{n-1}]`. The objective is
//!
//! ```text
//! (1/n) * ( sum_i logloss(y_i, bias + w.x_i) + penalty(w) )
//! ```
//!
//! with `penalty = lambda/2 * |w|^2` (L2) or `lambda * |w|_1` (L1). The bias
//! is never penalized. L2 problems are solved with L-BFGS under an Armijo
//! line search, L1 problems with monotone proximal gradient, so the
//! objective never increases between iterations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type SparseRow = Vec<(usize, f64)>;

pub const GRADIENT_TOLERANCE: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "lambda", rename_all = "snake_case")]
pub enum Regularization {
    L2(f64),
    L1(f64),
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization::L2(1.0)
    }
}

impl Regularization {
    pub fn lambda(&self) -> f64 {
        match *self {
            Regularization::L2(l) | Regularization::L1(l) => l,
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// A labeled training problem; labels are 0.0 or 1.0.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub rows: &'a [SparseRow],
    pub labels: &'a [f64],
    pub n_features: usize,
}

impl<'a> Problem<'a> {
    pub fn new(rows: &'a [SparseRow], labels: &'a [f64], n_features: usize) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let positives = labels.iter().filter(|&&y| y == 1.0).count();
        if positives == 0 || positives == labels.len() {
            return Err(Error::SingleClass);
        }
        for row in rows {
            for &(id, value) in row {
                if id >= n_features {
                    return Err(Error::FeatureOutOfRange {
                        id,
                        size: n_features,
                    });
                }
                if !value.is_finite() {
                    return Err(Error::NonFinite { feature: id, value });
                }
            }
        }
        Ok(Problem {
            rows,
            labels,
            n_features,
        })
    }

    pub fn n_params(&self) -> usize {
        self.n_features + 1
    }

    fn margin(params: &[f64], row: &SparseRow) -> f64 {
        params[0] + row.iter().map(|&(j, x)| params[j + 1] * x).sum::<f64>()
    }

    /// Mean log-loss, writing its gradient into `grad` when given.
    fn loss_and_gradient(&self, params: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let n = self.rows.len() as f64;
        let mut loss = 0.0;
        match grad {
            Some(grad) => {
                grad.iter_mut().for_each(|g| *g = 0.0);
                for (row, &y) in self.rows.iter().zip(self.labels) {
                    let z = Self::margin(params, row);
                    loss += softplus(z) - y * z;
                    let r = sigmoid(z) - y;
                    grad[0] += r;
                    for &(j, x) in row {
                        grad[j + 1] += r * x;
                    }
                }
                grad.iter_mut().for_each(|g| *g /= n);
            }
            None => {
                for (row, &y) in self.rows.iter().zip(self.labels) {
                    let z = Self::margin(params, row);
                    loss += softplus(z) - y * z;
                }
            }
        }
        loss / n
    }

    /// Value of the full objective under `reg`.
    pub fn objective(&self, params: &[f64], reg: Regularization) -> f64 {
        let n = self.rows.len() as f64;
        let loss = self.loss_and_gradient(params, None);
        let w = &params[1..];
        match reg {
            Regularization::L2(l) => loss + 0.5 * l * w.iter().map(|v| v * v).sum::<f64>() / n,
            Regularization::L1(l) => loss + l * w.iter().map(|v| v.abs()).sum::<f64>() / n,
        }
    }

    /// Objective value and gradient for the L2-penalized problem.
    pub fn l2_value_and_gradient(&self, params: &[f64], lambda: f64, grad: &mut [f64]) -> f64 {
        let n = self.rows.len() as f64;
        let loss = self.loss_and_gradient(params, Some(grad));
        let mut penalty = 0.0;
        for j in 1..params.len() {
            penalty += params[j] * params[j];
            grad[j] += lambda * params[j] / n;
        }
        loss + 0.5 * lambda * penalty / n
    }

    pub fn train(&self, reg: Regularization) -> Fit {
        match reg {
            Regularization::L2(l) => self.lbfgs(l),
            Regularization::L1(l) => self.proximal(l),
        }
    }

    fn lbfgs(&self, lambda: f64) -> Fit {
        const HISTORY: usize = 10;
        let dim = self.n_params();
        let mut x = vec![0.0; dim];
        let mut g = vec![0.0; dim];
        let mut f = self.l2_value_and_gradient(&x, lambda, &mut g);
        let mut trace = vec![f];
        let mut memory: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
        let mut x_new = vec![0.0; dim];
        let mut g_new = vec![0.0; dim];
        let mut iterations = 0;

        while iterations < MAX_ITERATIONS && max_abs(&g) > GRADIENT_TOLERANCE {
            // Two-loop recursion for the search direction.
            let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
            let mut alphas = Vec::with_capacity(memory.len());
            for (s, y, rho) in memory.iter().rev() {
                let a = rho * dot(s, &d);
                axpy(-a, y, &mut d);
                alphas.push(a);
            }
            if let Some((s, y, _)) = memory.last() {
                let scale = dot(s, y) / dot(y, y);
                d.iter_mut().for_each(|v| *v *= scale);
            }
            for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
                let b = rho * dot(y, &d);
                axpy(a - b, s, &mut d);
            }
            let mut slope = dot(&g, &d);
            if slope >= 0.0 {
                memory.clear();
                d = g.iter().map(|v| -v).collect();
                slope = -dot(&g, &g);
            }

            let mut step = if memory.is_empty() {
                (1.0 / max_abs(&d)).min(1.0)
            } else {
                1.0
            };
            let mut accepted = None;
            for _ in 0..60 {
                for i in 0..dim {
                    x_new[i] = x[i] + step * d[i];
                }
                let f_new = self.l2_value_and_gradient(&x_new, lambda, &mut g_new);
                if f_new <= f + 1e-4 * step * slope {
                    accepted = Some(f_new);
                    break;
                }
                step *= 0.5;
            }
            let Some(f_new) = accepted else {
                break;
            };

            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
                if memory.len() == HISTORY {
                    memory.remove(0);
                }
                memory.push((s, y, 1.0 / sy));
            }
            std::mem::swap(&mut x, &mut x_new);
            std::mem::swap(&mut g, &mut g_new);
            f = f_new;
            trace.push(f);
            iterations += 1;
        }

        Fit {
            gradient_norm: max_abs(&g),
            converged: max_abs(&g) <= GRADIENT_TOLERANCE,
            params: x,
            iterations,
            objective: f,
            trace,
        }
    }

    fn proximal(&self, lambda: f64) -> Fit {
        let dim = self.n_params();
        let n = self.rows.len() as f64;
        let threshold = lambda / n;
        let reg = Regularization::L1(lambda);
        let mut x = vec![0.0; dim];
        let mut g = vec![0.0; dim];
        let mut smooth = self.loss_and_gradient(&x, Some(&mut g));
        let mut f = self.objective(&x, reg);
        let mut trace = vec![f];
        let mut step = 1.0;
        let mut x_new = vec![0.0; dim];
        let mut g_new = vec![0.0; dim];
        let mut mapping = f64::INFINITY;
        let mut iterations = 0;

        while iterations < MAX_ITERATIONS {
            let mut accepted = false;
            for _ in 0..60 {
                x_new[0] = x[0] - step * g[0];
                for j in 1..dim {
                    x_new[j] = soft_threshold(x[j] - step * g[j], step * threshold);
                }
                let smooth_new = self.loss_and_gradient(&x_new, None);
                let mut lin = 0.0;
                let mut quad = 0.0;
                for j in 0..dim {
                    let diff = x_new[j] - x[j];
                    lin += g[j] * diff;
                    quad += diff * diff;
                }
                if smooth_new <= smooth + lin + quad / (2.0 * step) + 1e-15 {
                    accepted = true;
                    mapping = quad.sqrt() / step;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            let f_new = self.objective(&x_new, reg);
            if f_new > f {
                break;
            }
            std::mem::swap(&mut x, &mut x_new);
            smooth = self.loss_and_gradient(&x, Some(&mut g_new));
            std::mem::swap(&mut g, &mut g_new);
            f = f_new;
            trace.push(f);
            iterations += 1;
            if mapping <= GRADIENT_TOLERANCE {
                break;
            }
            step *= 2.0;
        }

        Fit {
            gradient_norm: mapping,
            converged: mapping <= GRADIENT_TOLERANCE,
            params: x,
            iterations,
            objective: f,
            trace,
        }
    }
}

/// Result of an optimization run.
#[derive(Debug, Clone)]
pub struct Fit {
    pub params: Vec<f64>,
    pub iterations: usize,
    pub objective: f64,
    /// Max-norm of the gradient (L2) or of the proximal gradient mapping (L1).
    pub gradient_norm: f64,
    pub converged: bool,
    /// Objective value after every accepted iteration, starting point first.
    pub trace: Vec<f64>,
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Vec<SparseRow>, Vec<f64>) {
        let rows = vec![
            vec![(0, 1.0), (1, 0.5)],
            vec![(0, 0.2)],
            vec![(1, 2.0)],
            vec![(0, -1.0), (1, 0.3)],
            vec![],
        ];
        let labels = vec![1.0, 1.0, 0.0, 0.0, 1.0];
        (rows, labels)
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(50.0) > 1.0 - 1e-9);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(800.0) <= 1.0);
        assert!((softplus(-800.0)).abs() < 1e-300);
        assert!((softplus(800.0) - 800.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        let rows = vec![vec![(0, 1.0)], vec![(0, 2.0)]];
        assert!(matches!(
            Problem::new(&rows, &[1.0, 1.0], 1),
            Err(Error::SingleClass)
        ));
        assert!(matches!(
            Problem::new(&rows, &[1.0, 0.0], 0),
            Err(Error::FeatureOutOfRange { .. })
        ));
        let nan = vec![vec![(0, f64::NAN)], vec![]];
        assert!(matches!(
            Problem::new(&nan, &[1.0, 0.0], 1),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn l2_converges_and_decreases() {
        let (rows, labels) = toy();
        let problem = Problem::new(&rows, &labels, 2).unwrap();
        let fit = problem.train(Regularization::L2(0.1));
        assert!(fit.converged, "{fit:?}");
        assert!(fit.trace.windows(2).all(|w| w[1] <= w[0]));
        let mut g = vec![0.0; 3];
        problem.l2_value_and_gradient(&fit.params, 0.1, &mut g);
        assert!(max_abs(&g) <= GRADIENT_TOLERANCE);
    }

    #[test]
    fn l1_produces_exact_zeros() {
        let (rows, labels) = toy();
        let problem = Problem::new(&rows, &labels, 2).unwrap();
        let fit = problem.train(Regularization::L1(5.0));
        assert!(fit.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(fit.params[1..].iter().all(|&w| w == 0.0), "{:?}", fit.params);
        let weak = problem.train(Regularization::L1(1e-3));
        assert!(weak.params[1..].iter().any(|&w| w != 0.0));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (rows, labels) = toy();
        let problem = Problem::new(&rows, &labels, 2).unwrap();
        let x = [0.3, -0.7, 1.1];
        let mut g = vec![0.0; 3];
        problem.l2_value_and_gradient(&x, 0.5, &mut g);
        for j in 0..3 {
            let h = 1e-6;
            let mut hi = x;
            let mut lo = x;
            hi[j] += h;
            lo[j] -= h;
            let fd = (problem.objective(&hi, Regularization::L2(0.5))
                - problem.objective(&lo, Regularization::L2(0.5)))
                / (2.0 * h);
            assert!((fd - g[j]).abs() <= 1e-4 * fd.abs().max(1e-8), "{j}: {fd} vs {}", g[j]);
        }
    }
}
