use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{bias_from_gradient, check_training_set, point_violation, Kernel, Label, Sample, SvmModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Soft-margin penalty.
    pub c: f64,
    /// Convergence target for the maximum KKT violation.
    pub kkt_tol: f64,
    /// Threshold under which dual variables are considered at a bound.
    pub value_eps: f64,
    /// Budget of full sweeps over the training set.
    pub max_passes: usize,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            kkt_tol: 1e-3,
            value_eps: 1e-8,
            max_passes: 200,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn with_c(c: f64) -> Self {
        TrainConfig {
            c,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (name, v) in [
            ("c", self.c),
            ("kkt_tol", self.kkt_tol),
            ("value_eps", self.value_eps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                problems.push(format!("{name} must be finite and > 0 (got {v})"));
            }
        }
        if self.max_passes == 0 {
            problems.push("max_passes must be > 0".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// Trains a C-SVM with Platt's sequential minimal optimization.
///
/// Input is sorted lexicographically before optimization, so the result does
/// not depend on the order of `samples`. Random starting points inside the
/// heuristic loops come from a generator seeded with `config.rng_seed`.
pub fn train_smo(
    samples: &[Sample],
    labels: &[Label],
    kernel: Kernel,
    config: &TrainConfig,
) -> Result<SvmModel> {
    config.validate()?;
    kernel.validate()?;
    if samples.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    check_training_set(samples, labels)?;

    let order = canonical_order(samples, labels);
    let xs: Vec<&[f64]> = order.iter().map(|&i| samples[i].as_slice()).collect();
    let ys: Vec<Label> = order.iter().map(|&i| labels[i]).collect();

    let mut solver = Solver::new(&xs, &ys, kernel, config);
    let outcome = solver.run();

    let support: Vec<usize> = (0..xs.len()).filter(|&i| solver.alpha[i] > 0.0).collect();
    match outcome {
        Ok(()) => Ok(SvmModel {
            kernel,
            support_samples: support.iter().map(|&i| Sample(xs[i].to_vec())).collect(),
            support_labels: support.iter().map(|&i| ys[i]).collect(),
            alphas: support.iter().map(|&i| solver.alpha[i]).collect(),
            bias: solver.b,
        }),
        Err(kkt_violation) => Err(Error::Convergence {
            passes: solver.passes,
            kkt_violation,
            support_vectors: support.len(),
        }),
    }
}

fn canonical_order(samples: &[Sample], labels: &[Label]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| {
        samples[a]
            .0
            .iter()
            .zip(&samples[b].0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(labels[a].cmp(&labels[b]))
    });
    order
}

/// The pairwise optimality gap is driven this far below `kkt_tol`. With
/// large `c` a violation near `kkt_tol` still leaves visible error in the
/// decision function away from the training points.
const WORKING_TOL_FACTOR: f64 = 1e-3;

/// Smallest relative change of a dual variable that counts as progress.
const MIN_STEP: f64 = 1e-13;

/// Consecutive sweeps over free variables before forcing a full sweep.
const FREE_SWEEP_LIMIT: usize = 10_000;

struct Solver<'a> {
    y: Vec<f64>,
    labels: &'a [Label],
    k: Vec<f64>,
    m: usize,
    c: f64,
    eps: f64,
    kkt_tol: f64,
    max_passes: usize,
    alpha: Vec<f64>,
    /// g_i = Σ_j alpha_j y_j K_ji; the error cache is F_i = g_i − y_i.
    g: Vec<f64>,
    b: f64,
    /// Half-width allowed between the two bias thresholds; tightened on restart.
    tol: f64,
    passes: usize,
    rng: ChaCha8Rng,
}

impl<'a> Solver<'a> {
    fn new(xs: &[&[f64]], labels: &'a [Label], kernel: Kernel, config: &TrainConfig) -> Self {
        let m = xs.len();
        let mut k = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let v = kernel.eval_unchecked(xs[i], xs[j]);
                k[i * m + j] = v;
                k[j * m + i] = v;
            }
        }
        Solver {
            y: labels.iter().map(|l| l.sign()).collect(),
            labels,
            k,
            m,
            c: config.c,
            eps: config.value_eps,
            kkt_tol: config.kkt_tol,
            max_passes: config.max_passes,
            alpha: vec![0.0; m],
            g: vec![0.0; m],
            b: 0.0,
            tol: config.kkt_tol * WORKING_TOL_FACTOR,
            passes: 0,
            rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
        }
    }

    fn kern(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.m + j]
    }

    fn error(&self, i: usize) -> f64 {
        self.g[i] - self.y[i]
    }

    fn is_free(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    /// Points whose error bounds the (negated) bias from above: `−b ≤ F_i`.
    fn in_up(&self, i: usize) -> bool {
        if self.y[i] > 0.0 {
            self.alpha[i] < self.c
        } else {
            self.alpha[i] > 0.0
        }
    }

    /// Points whose error bounds the (negated) bias from below: `−b ≥ F_i`.
    fn in_low(&self, i: usize) -> bool {
        if self.y[i] > 0.0 {
            self.alpha[i] > 0.0
        } else {
            self.alpha[i] < self.c
        }
    }

    /// `(argmin F over up-set, argmax F over low-set)`.
    fn thresholds(&self) -> (Option<(usize, f64)>, Option<(usize, f64)>) {
        let mut up: Option<(usize, f64)> = None;
        let mut low: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let f = self.error(i);
            if self.in_up(i) && up.is_none_or(|(_, v)| f < v) {
                up = Some((i, f));
            }
            if self.in_low(i) && low.is_none_or(|(_, v)| f > v) {
                low = Some((i, f));
            }
        }
        (up, low)
    }

    /// Runs Platt's outer loop until the final bias satisfies `kkt_tol`.
    /// On failure returns the best violation seen.
    fn run(&mut self) -> std::result::Result<(), f64> {
        let mut best = f64::INFINITY;
        loop {
            let mut examine_all = true;
            let mut changed = 0usize;
            let mut free_sweeps = 0usize;
            while (changed > 0 || examine_all) && self.passes < self.max_passes {
                changed = 0;
                if examine_all {
                    for i in 0..self.m {
                        changed += self.examine(i) as usize;
                    }
                    self.passes += 1;
                    examine_all = false;
                    free_sweeps = 0;
                } else {
                    for i in 0..self.m {
                        if self.is_free(i) {
                            changed += self.examine(i) as usize;
                        }
                    }
                    free_sweeps += 1;
                    if changed == 0 || free_sweeps >= FREE_SWEEP_LIMIT {
                        examine_all = true;
                    }
                }
            }

            self.b = bias_from_gradient(&self.alpha, self.labels, &self.g, self.c, self.eps);
            let violation = self.max_violation();
            best = best.min(violation);
            if violation <= self.kkt_tol {
                return Ok(());
            }
            if self.passes >= self.max_passes || self.tol < 1e-14 {
                return Err(best);
            }
            self.tol /= 4.0;
        }
    }

    fn max_violation(&self) -> f64 {
        (0..self.m)
            .map(|i| {
                let yf = self.y[i] * (self.g[i] + self.b);
                point_violation(self.alpha[i], yf, self.c, self.eps)
            })
            .fold(0.0, f64::max)
    }

    /// Checks `i2` against the two bias thresholds and, if it violates
    /// optimality, tries to make progress on a pair containing it.
    fn examine(&mut self, i2: usize) -> bool {
        let f2 = self.error(i2);
        let (up, low) = self.thresholds();
        let mut partner: Option<(usize, f64)> = None;
        if let Some((i_low, b_low)) = low {
            if self.in_up(i2) && f2 < b_low - 2.0 * self.tol {
                partner = Some((i_low, b_low - f2));
            }
        }
        if let Some((i_up, b_up)) = up {
            if self.in_low(i2) && f2 > b_up + 2.0 * self.tol && partner.is_none_or(|(_, gap)| f2 - b_up > gap) {
                partner = Some((i_up, f2 - b_up));
            }
        }
        let Some((i1, _)) = partner else {
            return false;
        };
        if self.take_step(i1, i2) {
            return true;
        }

        // Second-choice heuristic failed; sweep free then all points from a random start.
        let start = self.rng.random_range(0..self.m);
        for off in 0..self.m {
            let i1 = (start + off) % self.m;
            if self.is_free(i1) && self.take_step(i1, i2) {
                return true;
            }
        }
        let start = self.rng.random_range(0..self.m);
        for off in 0..self.m {
            let i1 = (start + off) % self.m;
            if self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.error(i1), self.error(i2));
        let s = y1 * y2;
        let c = self.c;

        let (lo, hi) = if s < 0.0 {
            ((a2 - a1).max(0.0), (c + a2 - a1).min(c))
        } else {
            ((a2 + a1 - c).max(0.0), (a1 + a2).min(c))
        };
        if hi - lo <= self.eps {
            return false;
        }

        let k11 = self.kern(i1, i1);
        let k12 = self.kern(i1, i2);
        let k22 = self.kern(i2, i2);
        let eta = k11 + k22 - 2.0 * k12;
        if eta <= 0.0 {
            return false;
        }

        let a2_new = self.snap((a2 + y2 * (e1 - e2) / eta).clamp(lo, hi));
        if (a2_new - a2).abs() <= MIN_STEP * (a2_new + a2 + 1.0) {
            return false;
        }
        let a1_new = self.snap(a1 + s * (a2 - a2_new));
        self.alpha[i1] = a1_new;
        self.alpha[i2] = a2_new;

        let d1 = y1 * (a1_new - a1);
        let d2 = y2 * (a2_new - a2);
        let m = self.m;
        let (row1, row2) = (&self.k[i1 * m..(i1 + 1) * m], &self.k[i2 * m..(i2 + 1) * m]);
        for (gk, (k1, k2)) in self.g.iter_mut().zip(row1.iter().zip(row2)) {
            *gk += d1 * k1 + d2 * k2;
        }
        true
    }

    fn snap(&self, a: f64) -> f64 {
        if a < self.eps {
            0.0
        } else if a > self.c - self.eps {
            self.c
        } else {
            a
        }
    }
}
