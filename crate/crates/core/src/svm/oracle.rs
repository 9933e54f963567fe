//! Reference solver for the C-SVM dual on small problems.
//!
//! Accelerated projected-gradient ascent over the box `0 ≤ alpha ≤ c`
//! intersected with the hyperplane `Σ alpha_i·y_i = 0`. It shares no code
//! with the SMO trainer beyond kernel evaluation, so the two can be
//! cross-checked.

use super::{bias_from_gradient, check_training_set, dual_objective, Kernel, Label, Sample, SvmModel};
use crate::error::{Error, Result};

pub const ORACLE_MAX_SAMPLES: usize = 12;

const BASE_ITERS: usize = 50_000;
const CHECK_FACTOR: usize = 10;
const SELF_CONSISTENCY_TOL: f64 = 1e-6;
const ALPHA_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    /// One entry per input sample, zeros included.
    pub alphas: Vec<f64>,
    pub objective: f64,
    pub bias: f64,
}

impl DualSolution {
    /// Packs the nonzero dual variables into a model for evaluation.
    pub fn to_model(&self, kernel: Kernel, samples: &[Sample], labels: &[Label]) -> SvmModel {
        let keep: Vec<usize> = (0..self.alphas.len()).filter(|&i| self.alphas[i] > 0.0).collect();
        SvmModel {
            kernel,
            support_samples: keep.iter().map(|&i| samples[i].clone()).collect(),
            support_labels: keep.iter().map(|&i| labels[i]).collect(),
            alphas: keep.iter().map(|&i| self.alphas[i]).collect(),
            bias: self.bias,
        }
    }
}

pub fn qp_oracle(samples: &[Sample], labels: &[Label], kernel: Kernel, c: f64) -> Result<DualSolution> {
    if samples.len() > ORACLE_MAX_SAMPLES {
        return Err(Error::SizeLimit {
            size: samples.len(),
            limit: ORACLE_MAX_SAMPLES,
        });
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidInput(format!("c must be finite and > 0, got {c}")));
    }
    kernel.validate()?;
    check_training_set(samples, labels)?;

    let m = samples.len();
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let mut q = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            q[i * m + j] = y[i] * y[j] * kernel.eval(&samples[i], &samples[j])?;
        }
    }

    let problem = Dual { q: &q, y: &y, m, c };
    let alphas = problem.solve(BASE_ITERS);
    let check = problem.solve(BASE_ITERS * CHECK_FACTOR);
    let objective = dual_objective(&kernel, samples, labels, &alphas)?;
    let check_objective = dual_objective(&kernel, samples, labels, &check)?;
    if !objective.is_finite() {
        return Err(Error::Oracle("objective is not finite".into()));
    }
    if (objective - check_objective).abs() > SELF_CONSISTENCY_TOL * objective.abs().max(1.0) {
        return Err(Error::Oracle(format!(
            "not converged: objective {objective} vs {check_objective} with {CHECK_FACTOR}x iterations"
        )));
    }

    let g: Vec<f64> = (0..m)
        .map(|i| (0..m).map(|j| alphas[j] * y[i] * q[i * m + j]).sum())
        .collect();
    let bias = bias_from_gradient(&alphas, labels, &g, c, ALPHA_EPS);
    Ok(DualSolution {
        alphas,
        objective,
        bias,
    })
}

struct Dual<'a> {
    /// Q_ij = y_i y_j k(x_i, x_j)
    q: &'a [f64],
    y: &'a [f64],
    m: usize,
    c: f64,
}

impl Dual<'_> {
    /// Gradient of the dual objective, `1 − Q·alpha`.
    fn gradient(&self, a: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|i| 1.0 - (0..self.m).map(|j| self.q[i * self.m + j] * a[j]).sum::<f64>())
            .collect()
    }

    fn lipschitz(&self) -> f64 {
        // Gershgorin bound on the largest eigenvalue of Q.
        (0..self.m)
            .map(|i| (0..self.m).map(|j| self.q[i * self.m + j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
            .max(1e-12)
    }

    /// FISTA with gradient-based restart, stopping early at a fixed point.
    fn solve(&self, max_iters: usize) -> Vec<f64> {
        let step = 1.0 / self.lipschitz();
        let mut x = vec![0.0; self.m];
        let mut z = x.clone();
        let mut t: f64 = 1.0;
        for _ in 0..max_iters {
            let grad = self.gradient(&z);
            let trial: Vec<f64> = z.iter().zip(&grad).map(|(zi, gi)| zi + step * gi).collect();
            let next = self.project(&trial);

            // Restart momentum when the step opposes the ascent direction.
            let ascent: f64 = grad
                .iter()
                .zip(next.iter().zip(&x))
                .map(|(g, (n, o))| g * (n - o))
                .sum();
            let moved = next
                .iter()
                .zip(&x)
                .map(|(n, o)| (n - o).abs())
                .fold(0.0, f64::max);
            if ascent < 0.0 {
                t = 1.0;
                z = x.clone();
                continue;
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            z = next
                .iter()
                .zip(&x)
                .map(|(n, o)| n + beta * (n - o))
                .collect();
            x = next;
            t = t_next;
            if moved <= 1e-14 * self.c.max(1.0) {
                break;
            }
        }
        x
    }

    /// Euclidean projection onto `{0 ≤ a ≤ c, Σ y_i a_i = 0}`.
    ///
    /// The projection is `clip(v − λ·y)` for the λ that zeroes the equality
    /// residual. The residual is piecewise linear and nonincreasing in λ with
    /// breakpoints where a coordinate hits a bound, so the root is found by
    /// scanning the sorted breakpoints and interpolating.
    fn project(&self, v: &[f64]) -> Vec<f64> {
        let clip = |lambda: f64| -> Vec<f64> {
            v.iter()
                .zip(self.y)
                .map(|(vi, yi)| (vi - lambda * yi).clamp(0.0, self.c))
                .collect()
        };
        let residual = |lambda: f64| -> f64 {
            v.iter()
                .zip(self.y)
                .map(|(vi, yi)| yi * (vi - lambda * yi).clamp(0.0, self.c))
                .sum()
        };
        let mut breaks: Vec<f64> = v
            .iter()
            .zip(self.y)
            .flat_map(|(vi, yi)| [yi * vi, yi * (vi - self.c)])
            .collect();
        breaks.sort_by(f64::total_cmp);

        let mut prev = (breaks[0], residual(breaks[0]));
        if prev.1 <= 0.0 {
            return clip(prev.0);
        }
        for &lambda in &breaks[1..] {
            let r = residual(lambda);
            if r <= 0.0 {
                let (l0, r0) = prev;
                let root = if r0 == r { lambda } else { l0 + (lambda - l0) * r0 / (r0 - r) };
                return clip(root);
            }
            prev = (lambda, r);
        }
        clip(prev.0)
    }
}
