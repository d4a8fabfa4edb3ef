//! Weighted, bounded Levenberg–Marquardt fit of `A·exp(−t/T1) + B`.
//!
//! Parameters are `(A, B, ln T1)`. Weights are binomial,
//! `shots / (p(1−p))`: the first pass uses the observed populations, the
//! second the first-pass model, which removes most of the bias that
//! data-derived weights introduce. The standard error of T1 comes from the
//! inverse curvature of the weighted objective at the optimum.

use super::{P1Curve, T1Fit};
use crate::{Error, Result};

const AMPLITUDE_MIN: f64 = 1e-6;
const AMPLITUDE_MAX: f64 = 1.2;
const OFFSET_MIN: f64 = -0.1;
const OFFSET_MAX: f64 = 0.5;
const MAX_ITERATIONS: usize = 500;

#[derive(Clone, Copy, Debug)]
struct Bounds {
    lower: [f64; 3],
    upper: [f64; 3],
}

impl Bounds {
    fn clamp(&self, p: [f64; 3]) -> [f64; 3] {
        let mut out = p;
        for k in 0..3 {
            out[k] = p[k].clamp(self.lower[k], self.upper[k]);
        }
        out
    }
}

struct Problem<'a> {
    t: &'a [f64],
    y: &'a [f64],
    w: Vec<f64>,
}

fn model(t: f64, p: &[f64; 3]) -> f64 {
    p[0] * (-t * (-p[2]).exp()).exp() + p[1]
}

impl Problem<'_> {
    fn objective(&self, p: &[f64; 3]) -> f64 {
        self.t
            .iter()
            .zip(self.y)
            .zip(&self.w)
            .map(|((&t, &y), &w)| {
                let r = y - model(t, p);
                w * r * r
            })
            .sum()
    }

    /// Gauss–Newton curvature `JᵀWJ` and gradient `JᵀWr`.
    fn normal_equations(&self, p: &[f64; 3]) -> ([[f64; 3]; 3], [f64; 3]) {
        let mut h = [[0.0; 3]; 3];
        let mut g = [0.0; 3];
        let rate = (-p[2]).exp();
        for ((&t, &y), &w) in self.t.iter().zip(self.y).zip(&self.w) {
            let e = (-t * rate).exp();
            let r = y - (p[0] * e + p[1]);
            let j = [e, 1.0, p[0] * e * t * rate];
            for a in 0..3 {
                g[a] += w * j[a] * r;
                for b in 0..3 {
                    h[a][b] += w * j[a] * j[b];
                }
            }
        }
        (h, g)
    }
}

fn solve3(m: [[f64; 3]; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let mut a = [[0.0; 4]; 3];
    for i in 0..3 {
        a[i][..3].copy_from_slice(&m[i]);
        a[i][3] = rhs[i];
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if !(a[pivot][col].abs() > 1e-300) {
            return None;
        }
        a.swap(col, pivot);
        for row in 0..3 {
            if row != col {
                let f = a[row][col] / a[col][col];
                let pivot_row = a[col];
                for (x, p) in a[row].iter_mut().zip(pivot_row).skip(col) {
                    *x -= f * p;
                }
            }
        }
    }
    let x = [a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]];
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn invert3(m: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut inv = [[0.0; 3]; 3];
    for col in 0..3 {
        let mut e = [0.0; 3];
        e[col] = 1.0;
        let x = solve3(m, e)?;
        for row in 0..3 {
            inv[row][col] = x[row];
        }
    }
    Some(inv)
}

struct Solution {
    params: [f64; 3],
    objective: f64,
    converged: bool,
}

fn levenberg_marquardt(problem: &Problem, bounds: &Bounds, start: [f64; 3]) -> Solution {
    let mut p = bounds.clamp(start);
    let mut obj = problem.objective(&p);
    let mut lambda = 1e-3;
    for _ in 0..MAX_ITERATIONS {
        let (h, g) = problem.normal_equations(&p);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = h;
            for k in 0..3 {
                damped[k][k] += lambda * h[k][k].max(1e-300);
            }
            let Some(step) = solve3(damped, g) else {
                lambda *= 10.0;
                continue;
            };
            let trial = bounds.clamp([p[0] + step[0], p[1] + step[1], p[2] + step[2]]);
            let trial_obj = problem.objective(&trial);
            if trial_obj <= obj {
                let moved = (0..3).map(|k| (trial[k] - p[k]).abs()).fold(0.0, f64::max);
                let decrease = obj - trial_obj;
                p = trial;
                obj = trial_obj;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if moved < 1e-13 || decrease <= 1e-15 * obj {
                    return Solution { params: p, objective: obj, converged: true };
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // No descent direction left: stationary to working precision.
            return Solution { params: p, objective: obj, converged: true };
        }
    }
    Solution {
        params: p,
        objective: obj,
        converged: false,
    }
}

fn binomial_weights(p: impl Iterator<Item = f64>, shots: &[u32]) -> Vec<f64> {
    p.zip(shots)
        .map(|(p, &n)| {
            let n = n as f64;
            let floor = 0.5 / (n + 1.0);
            let q = p.clamp(floor, 1.0 - floor);
            n / (q * (1.0 - q))
        })
        .collect()
}

/// Initial decay time from the log-slope over the first decade of delays.
fn initial_log_t1(t: &[f64], y: &[f64], amplitude: f64, offset: f64) -> Option<f64> {
    let regress = |pick: &dyn Fn(usize) -> bool| -> Option<f64> {
        let pts: Vec<(f64, f64)> = (0..t.len())
            .filter(|&i| pick(i) && y[i] - offset > 0.05 * amplitude)
            .map(|i| (t[i], ((y[i] - offset) / amplitude).ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        (slope < 0.0 && slope.is_finite()).then(|| (-1.0 / slope).ln())
    };
    let decade = 10.0 * t[0].max(f64::MIN_POSITIVE);
    regress(&|i| t[i] <= decade).or_else(|| regress(&|_| true))
}

/// Fits `A·exp(−t/T1) + B` to a measured population curve.
///
/// Rejects curves with fewer than four points. Non-decaying curves, fits
/// pinned to a T1 bound, iteration-cap hits and singular curvature all
/// return `converged = false`.
pub fn fit_exponential(curve: &P1Curve) -> Result<T1Fit> {
    curve.validate()?;
    if curve.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "exponential fit needs at least 4 points, got {}",
            curve.len()
        )));
    }
    let mut order: Vec<usize> = (0..curve.len()).collect();
    order.sort_by(|&a, &b| curve.delays_us[a].total_cmp(&curve.delays_us[b]));
    let t: Vec<f64> = order.iter().map(|&i| curve.delays_us[i]).collect();
    let y: Vec<f64> = order.iter().map(|&i| curve.p1[i]).collect();
    let shots: Vec<u32> = order.iter().map(|&i| curve.shots[i]).collect();
    let t_min = t.iter().copied().find(|&v| v > 0.0).unwrap_or(1.0);
    let t_max = t[t.len() - 1];
    if !(t_max > 0.0) {
        return Err(Error::invalid("curve.delays_us", "need a positive delay"));
    }

    let bounds = Bounds {
        lower: [AMPLITUDE_MIN, OFFSET_MIN, (t_min / 10.0).ln()],
        upper: [AMPLITUDE_MAX, OFFSET_MAX, (100.0 * t_max).ln()],
    };
    let offset0 = y[y.len() - 1].clamp(OFFSET_MIN, OFFSET_MAX);
    let amplitude0 = (y[0] - y[y.len() - 1]).clamp(0.05, AMPLITUDE_MAX);
    let log_t1 = initial_log_t1(&t, &y, amplitude0, offset0)
        .unwrap_or(0.5 * (t_min.ln() + t_max.ln()))
        .clamp(bounds.lower[2], bounds.upper[2]);

    let mut problem = Problem {
        t: &t,
        y: &y,
        w: binomial_weights(y.iter().copied(), &shots),
    };
    let starts = [log_t1, log_t1 - 1.1, log_t1 + 1.1];
    let best = |problem: &Problem, starts: &[[f64; 3]]| {
        starts
            .iter()
            .map(|&s| levenberg_marquardt(problem, &bounds, s))
            .min_by(|a, b| a.objective.total_cmp(&b.objective))
            .expect("at least one start")
    };
    let first = best(
        &problem,
        &starts.map(|u| [amplitude0, offset0, u]),
    );
    let fitted: Vec<f64> = t.iter().map(|&ti| model(ti, &first.params)).collect();
    problem.w = binomial_weights(fitted.into_iter(), &shots);
    let sol = best(&problem, &[first.params]);

    let [amplitude, offset, log_t1] = sol.params;
    let residual_rms = (t
        .iter()
        .zip(&y)
        .map(|(&ti, &yi)| (yi - model(ti, &sol.params)).powi(2))
        .sum::<f64>()
        / t.len() as f64)
        .sqrt();
    let at_bound = |v: f64, lo: f64, hi: f64| (v - lo).abs() < 1e-6 || (hi - v).abs() < 1e-6;
    let degenerate = amplitude <= AMPLITUDE_MIN * (1.0 + 1e-9) || at_bound(log_t1, bounds.lower[2], bounds.upper[2]);
    let (h, _) = problem.normal_equations(&sol.params);
    let stderr = invert3(h)
        .map(|cov| cov[2][2])
        .filter(|v| v.is_finite() && *v >= 0.0)
        .map(|v| log_t1.exp() * v.sqrt());
    let converged = sol.converged && !degenerate && stderr.is_some();
    Ok(T1Fit {
        t1_us: converged.then(|| log_t1.exp()),
        amplitude,
        offset,
        t1_stderr_us: if converged { stderr } else { None },
        converged,
        residual_rms,
    })
}
