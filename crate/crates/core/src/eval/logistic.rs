//! Four-parameter logistic mapping from metric scores to DMOS.

use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 5;
pub const MAX_ITERATIONS: usize = 500;
pub const REL_TOLERANCE: f64 = 1e-10;
const MAX_RESTARTS: usize = 20;
const STD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogisticParams {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub beta4: f64,
}

impl LogisticParams {
    /// `beta2 + (beta1 - beta2) / (1 + exp(-(x - beta3) / |beta4|))`
    pub fn predict(&self, x: f64) -> f64 {
        let z = -(x - self.beta3) / self.beta4.abs();
        self.beta2 + (self.beta1 - self.beta2) / (1.0 + z.exp())
    }

    fn from_array(p: [f64; 4]) -> Self {
        LogisticParams {
            beta1: p[0],
            beta2: p[1],
            beta3: p[2],
            beta4: p[3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogisticFit {
    pub params: LogisticParams,
    pub sse: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn sse(p: &[f64; 4], x: &[f64], y: &[f64]) -> f64 {
    if p[3] == 0.0 {
        return f64::INFINITY;
    }
    let lp = LogisticParams::from_array(*p);
    let s: f64 = x.iter().zip(y).map(|(&xi, &yi)| (lp.predict(xi) - yi).powi(2)).sum();
    if s.is_nan() {
        f64::INFINITY
    } else {
        s
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Least-squares fit by Nelder-Mead simplex descent from a fixed start
/// (beta1 = max dmos, beta2 = min dmos, beta3 = mean score, beta4 = std of
/// scores). Runs are restarted from the incumbent while they keep improving.
pub fn fit_logistic(scores: &[f64], dmos: &[f64]) -> Result<LogisticFit> {
    if scores.len() != dmos.len() {
        return Err(Error::Shape(format!(
            "{} scores but {} dmos values",
            scores.len(),
            dmos.len()
        )));
    }
    if scores.len() < MIN_SAMPLES {
        return Err(Error::Degenerate(format!(
            "logistic fit needs at least {MIN_SAMPLES} samples, got {}",
            scores.len()
        )));
    }
    if scores.iter().chain(dmos).any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite score or dmos".into()));
    }
    if scores.iter().all(|&s| s == scores[0]) {
        return Err(Error::Degenerate("all scores are identical".into()));
    }

    let (mean, std) = mean_std(scores);
    let hi = dmos.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = dmos.iter().cloned().fold(f64::INFINITY, f64::min);
    let start = [hi, lo, mean, std.max(STD_FLOOR)];
    let f = |p: &[f64; 4]| sse(p, scores, dmos);

    let mut best = start;
    let mut best_sse = f(&best);
    let mut total = 0;
    let mut converged = false;
    for _ in 0..=MAX_RESTARTS {
        let steps = [
            0.1 * (hi - lo).abs().max(1.0),
            0.1 * (hi - lo).abs().max(1.0),
            0.5 * std.max(STD_FLOOR),
            0.5 * best[3].abs().max(STD_FLOOR),
        ];
        let run = nelder_mead(&f, best, steps, MAX_ITERATIONS);
        total += run.iterations;
        converged = run.converged;
        let polished = polish_linear(run.point, scores, dmos);
        let (point, value) = if f(&polished) < run.value { (polished, f(&polished)) } else { (run.point, run.value) };
        let gained = best_sse - value;
        if value < best_sse {
            best = point;
            best_sse = value;
        }
        if best_sse == 0.0 || gained <= REL_TOLERANCE * best_sse {
            break;
        }
    }
    let mut params = LogisticParams::from_array(best);
    params.beta4 = params.beta4.abs();
    Ok(LogisticFit {
        params,
        sse: best_sse,
        converged,
        iterations: total,
    })
}

/// With beta3 and beta4 fixed the model is linear in beta1 and beta2; solve
/// that sub-problem exactly.
fn polish_linear(p: [f64; 4], x: &[f64], y: &[f64]) -> [f64; 4] {
    let lp = LogisticParams::from_array(p);
    let s: Vec<f64> = x.iter().map(|&xi| 1.0 / (1.0 + (-(xi - lp.beta3) / lp.beta4.abs()).exp())).collect();
    // y ~ b2 + (b1 - b2) s = b2 (1 - s) + b1 s
    let (mut a11, mut a12, mut a22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&si, &yi) in s.iter().zip(y) {
        let ti = 1.0 - si;
        a11 += si * si;
        a12 += si * ti;
        a22 += ti * ti;
        r1 += si * yi;
        r2 += ti * yi;
    }
    let det = a11 * a22 - a12 * a12;
    if det.abs() <= 1e-12 * (a11 * a22).max(f64::MIN_POSITIVE) {
        return p;
    }
    let b1 = (r1 * a22 - r2 * a12) / det;
    let b2 = (a11 * r2 - a12 * r1) / det;
    [b1, b2, p[2], p[3]]
}

struct Run {
    point: [f64; 4],
    value: f64,
    iterations: usize,
    converged: bool,
}

fn nelder_mead<F: Fn(&[f64; 4]) -> f64>(f: &F, start: [f64; 4], steps: [f64; 4], max_iter: usize) -> Run {
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;
    const SIGMA: f64 = 0.5;

    let mut simplex: Vec<([f64; 4], f64)> = Vec::with_capacity(5);
    simplex.push((start, f(&start)));
    for i in 0..4 {
        let mut p = start;
        p[i] += steps[i];
        simplex.push((p, f(&p)));
    }
    let order = |s: &mut Vec<([f64; 4], f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    order(&mut simplex);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let (fb, fw) = (simplex[0].1, simplex[4].1);
        if (fw - fb).abs() <= REL_TOLERANCE * fb.abs() + f64::MIN_POSITIVE {
            converged = true;
            break;
        }
        iterations += 1;
        let mut centroid = [0.0; 4];
        for (p, _) in &simplex[..4] {
            for k in 0..4 {
                centroid[k] += p[k] / 4.0;
            }
        }
        let along = |t: f64| {
            let mut q = [0.0; 4];
            for k in 0..4 {
                q[k] = centroid[k] + t * (simplex[4].0[k] - centroid[k]);
            }
            q
        };
        let xr = along(-ALPHA);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(-GAMMA);
            let fe = f(&xe);
            simplex[4] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[3].1 {
            simplex[4] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[4].1 {
                let xc = along(-RHO);
                (xc, f(&xc))
            } else {
                let xc = along(RHO);
                (xc, f(&xc))
            };
            if fc < simplex[4].1.min(fr) {
                simplex[4] = (xc, fc);
            } else {
                let best = simplex[0].0;
                for entry in simplex.iter_mut().skip(1) {
                    let mut q = [0.0; 4];
                    for k in 0..4 {
                        q[k] = best[k] + SIGMA * (entry.0[k] - best[k]);
                    }
                    *entry = (q, f(&q));
                }
            }
        }
        order(&mut simplex);
    }
    Run {
        point: simplex[0].0,
        value: simplex[0].1,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_generated_curve() {
        let truth = LogisticParams {
            beta1: 100.0,
            beta2: 0.0,
            beta3: 0.5,
            beta4: 0.1,
        };
        let x: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
        let y: Vec<f64> = x.iter().map(|&v| truth.predict(v)).collect();
        let fit = fit_logistic(&x, &y).unwrap();
        assert!(fit.sse < 1e-8, "sse {}", fit.sse);
    }

    #[test]
    fn constant_target() {
        let x = [0.1, 0.4, 0.2, 0.9, 0.5, 0.3];
        let y = [42.0; 6];
        let fit = fit_logistic(&x, &y).unwrap();
        assert_eq!(fit.sse, 0.0);
        assert!(x.iter().all(|&v| fit.params.predict(v) == 42.0));
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            fit_logistic(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn identical_scores() {
        assert!(matches!(fit_logistic(&[1.0; 6], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn decreasing_relation_is_fitted() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| 80.0 - 3.0 * v).collect();
        let fit = fit_logistic(&x, &y).unwrap();
        let mean = y.iter().sum::<f64>() / 20.0;
        let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        assert!(fit.sse < 1e-3 * sst);
    }
}
