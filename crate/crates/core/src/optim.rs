//! Unconstrained minimization: Nelder-Mead simplex search followed by a BFGS
//! polish with central finite-difference gradients.
//!
//! Objectives report infeasible points by returning [`PENALTY`] (or any
//! non-finite value, which is mapped to it). Constrained model parameters
//! reach the optimizer through smooth bijections, so the search itself is
//! always unconstrained.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PENALTY: f64 = 1e10;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

const GRAD_TOL: f64 = 1e-6;
const ARMIJO_C1: f64 = 1e-4;

/// Tuning shared by every fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptSettings {
    /// Evaluation budget per optimizer stage.
    pub max_evals: usize,
    pub tol_x: f64,
    pub tol_f: f64,
    /// Initial simplex edge, scaled by `max(1, |x_i|)`.
    pub initial_step: f64,
    /// Seed for initial-simplex jitter; `None` disables jitter.
    pub seed: Option<u64>,
    pub record_trace: bool,
}

impl Default for OptSettings {
    fn default() -> Self {
        Self {
            max_evals: 5000,
            tol_x: 1e-8,
            tol_f: 1e-10,
            initial_step: 0.1,
            seed: None,
            record_trace: false,
        }
    }
}

pub struct OptProblem<'a> {
    pub objective: &'a dyn Fn(&[f64]) -> f64,
    pub x0: Vec<f64>,
    pub settings: OptSettings,
}

impl<'a> OptProblem<'a> {
    pub fn new(objective: &'a dyn Fn(&[f64]) -> f64, x0: Vec<f64>) -> Self {
        Self {
            objective,
            x0,
            settings: OptSettings::default(),
        }
    }

    pub fn with_settings(mut self, settings: OptSettings) -> Self {
        self.settings = settings;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub eval: usize,
    pub f_best: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    pub evals: usize,
    pub converged: bool,
    /// Best-so-far value at every improvement, when tracing is enabled.
    pub trace: Vec<TracePoint>,
}

/// Counts evaluations and remembers the best point seen.
struct Evaluator<'a> {
    objective: &'a dyn Fn(&[f64]) -> f64,
    evals: usize,
    best_x: Vec<f64>,
    best_f: f64,
    record: bool,
    trace: Vec<TracePoint>,
}

impl<'a> Evaluator<'a> {
    fn new(objective: &'a dyn Fn(&[f64]) -> f64, record: bool) -> Self {
        Self {
            objective,
            evals: 0,
            best_x: Vec::new(),
            best_f: f64::INFINITY,
            record,
            trace: Vec::new(),
        }
    }

    fn eval(&mut self, x: &[f64]) -> f64 {
        let raw = (self.objective)(x);
        let f = if raw.is_finite() {
            raw.min(PENALTY)
        } else {
            PENALTY
        };
        self.evals += 1;
        if f < self.best_f {
            self.best_f = f;
            self.best_x = x.to_vec();
            if self.record {
                self.trace.push(TracePoint {
                    eval: self.evals,
                    f_best: f,
                });
            }
        }
        f
    }

    fn finish(self, converged: bool) -> OptResult {
        OptResult {
            x_best: self.best_x,
            f_best: self.best_f,
            evals: self.evals,
            converged,
            trace: self.trace,
        }
    }
}

pub fn nelder_mead(problem: &OptProblem<'_>) -> OptResult {
    let mut ev = Evaluator::new(problem.objective, problem.settings.record_trace);
    let converged = nelder_mead_inner(&mut ev, &problem.x0, &problem.settings);
    ev.finish(converged)
}

fn nelder_mead_inner(ev: &mut Evaluator<'_>, x0: &[f64], s: &OptSettings) -> bool {
    let n = x0.len();
    assert!(n >= 1, "Nelder-Mead needs at least one dimension");
    let budget = ev.evals + s.max_evals;
    let mut rng = s.seed.map(ChaCha8Rng::seed_from_u64);

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        let mut step = s.initial_step * x0[i].abs().max(1.0);
        if let Some(r) = rng.as_mut() {
            step *= 1.0 + 0.1 * r.random_range(-1.0..1.0);
        }
        v[i] += step;
        simplex.push(v);
    }
    let mut fvals: Vec<f64> = simplex.iter().map(|x| ev.eval(x)).collect();

    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fvals[a].total_cmp(&fvals[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        fvals = order.iter().map(|&i| fvals[i]).collect();

        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread = fvals[n] - fvals[0];
        if diameter < s.tol_x {
            return true;
        }
        if ev.evals >= budget {
            return false;
        }
        if spread < s.tol_f {
            // vertices on a level set can straddle a minimum; probe the
            // barycentre before accepting
            let mid: Vec<f64> = (0..n)
                .map(|j| simplex.iter().map(|v| v[j]).sum::<f64>() / (n + 1) as f64)
                .collect();
            let fm = ev.eval(&mid);
            if fm >= fvals[0] - s.tol_f {
                return true;
            }
            simplex[n] = mid;
            fvals[n] = fm;
            continue;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |coef: f64, towards: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(towards)
                .map(|(c, t)| c + coef * (t - c))
                .collect()
        };

        let reflected = along(-REFLECT, &simplex[n]);
        let fr = ev.eval(&reflected);
        if fr < fvals[0] {
            let expanded = along(EXPAND, &reflected);
            let fe = ev.eval(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                fvals[n] = fe;
            } else {
                simplex[n] = reflected;
                fvals[n] = fr;
            }
            continue;
        }
        if fr < fvals[n - 1] {
            simplex[n] = reflected;
            fvals[n] = fr;
            continue;
        }
        let accepted = if fr < fvals[n] {
            let outside = along(CONTRACT, &reflected);
            let fc = ev.eval(&outside);
            (fc <= fr).then_some((outside, fc))
        } else {
            let inside = along(CONTRACT, &simplex[n]);
            let fc = ev.eval(&inside);
            (fc < fvals[n]).then_some((inside, fc))
        };
        match accepted {
            Some((x, f)) => {
                simplex[n] = x;
                fvals[n] = f;
            }
            None => {
                for i in 1..=n {
                    let shrunk: Vec<f64> = simplex[0]
                        .iter()
                        .zip(&simplex[i])
                        .map(|(b, v)| b + SHRINK * (v - b))
                        .collect();
                    fvals[i] = ev.eval(&shrunk);
                    simplex[i] = shrunk;
                }
            }
        }
    }
}

/// Central finite-difference gradient with per-coordinate step
/// `rel_step * max(1, |x_i|)`.
pub fn finite_diff_gradient(
    f: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    rel_step: f64,
) -> Result<Vec<f64>> {
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = rel_step * x[i].abs().max(1.0);
        probe[i] = x[i] + h;
        let fp = f(&probe);
        probe[i] = x[i] - h;
        let fm = f(&probe);
        probe[i] = x[i];
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NumericalOverflow { index: i });
        }
        grad.push((fp - fm) / (2.0 * h));
    }
    Ok(grad)
}

/// Quasi-Newton refinement starting from `x_start`.
pub fn bfgs_polish(problem: &OptProblem<'_>, x_start: &[f64]) -> OptResult {
    let mut ev = Evaluator::new(problem.objective, problem.settings.record_trace);
    let converged = bfgs_inner(&mut ev, x_start, problem.settings.max_evals);
    ev.finish(converged)
}

fn fd_step() -> f64 {
    f64::EPSILON.cbrt()
}

fn gradient(ev: &mut Evaluator<'_>, x: &[f64]) -> Option<Vec<f64>> {
    let mut probe = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = fd_step() * x[i].abs().max(1.0);
        probe[i] = x[i] + h;
        let fp = ev.eval(&probe);
        probe[i] = x[i] - h;
        let fm = ev.eval(&probe);
        probe[i] = x[i];
        if fp >= PENALTY || fm >= PENALTY {
            return None;
        }
        g.push((fp - fm) / (2.0 * h));
    }
    Some(g)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn bfgs_inner(ev: &mut Evaluator<'_>, x_start: &[f64], max_evals: usize) -> bool {
    let n = x_start.len();
    let budget = ev.evals + max_evals;
    let mut x = x_start.to_vec();
    let mut fx = ev.eval(&x);
    if fx >= PENALTY {
        return false;
    }
    let Some(mut g) = gradient(ev, &x) else {
        return false;
    };
    let mut h_inv = identity(n);

    while ev.evals < budget {
        if dot(&g, &g).sqrt() < GRAD_TOL {
            return true;
        }
        let mut dir: Vec<f64> = (0..n).map(|i| -dot(&h_inv[i], &g)).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            h_inv = identity(n);
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }

        let mut t = 1.0;
        let (x_new, f_new) = loop {
            let cand: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let fc = ev.eval(&cand);
            if fc <= fx + ARMIJO_C1 * t * slope {
                break (cand, fc);
            }
            t *= 0.5;
            if t < 1e-12 || ev.evals >= budget {
                return false;
            }
        };
        let Some(g_new) = gradient(ev, &x_new) else {
            return false;
        };

        let step: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let dg: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&step, &dg);
        if sy > 1e-12 * dot(&step, &step).sqrt() * dot(&dg, &dg).sqrt() {
            // H <- (I - rho s y') H (I - rho y s') + rho s s'
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&h_inv[i], &dg)).collect();
            let yhy = dot(&dg, &hy);
            for i in 0..n {
                for j in 0..n {
                    h_inv[i][j] += -rho * (step[i] * hy[j] + hy[i] * step[j])
                        + (rho * rho * yhy + rho) * step[i] * step[j];
                }
            }
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }
    false
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Nelder-Mead from each start, then a BFGS polish of the best simplex
/// result. Evaluation counts and the trace span all stages.
pub fn minimize(
    objective: &dyn Fn(&[f64]) -> f64,
    starts: &[Vec<f64>],
    settings: &OptSettings,
) -> OptResult {
    assert!(!starts.is_empty(), "at least one start point required");
    let mut ev = Evaluator::new(objective, settings.record_trace);
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    for (i, x0) in starts.iter().enumerate() {
        let stage = OptSettings {
            seed: settings.seed.map(|s| s.wrapping_add(i as u64)),
            ..settings.clone()
        };
        let before = ev.best_f;
        let conv = nelder_mead_inner(&mut ev, x0, &stage);
        // the global best only moves when this start improved on it
        if best.is_none() || ev.best_f < before {
            best = Some((ev.best_x.clone(), ev.best_f, conv));
        }
    }
    let (x_nm, _, nm_converged) = best.expect("at least one start");
    let polished = bfgs_inner(&mut ev, &x_nm, settings.max_evals);
    ev.finish(nm_converged || polished)
}
