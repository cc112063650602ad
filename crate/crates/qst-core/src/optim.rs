//! Box-constrained limited-memory quasi-Newton minimization.
//!
//! The algorithm is the projected-gradient flavor of L-BFGS-B: variables
//! pinned at a bound with the gradient pushing outward are held fixed, the
//! two-loop recursion builds a quasi-Newton direction on the free variables,
//! and steps are clipped to the box. Steps are chosen by a strong-Wolfe line
//! search (`c1 = 1e-4`, `c2 = 0.9`); if it fails, the step falls back to
//! projected steepest descent with backtracking. Termination is on the
//! infinity norm of the projected gradient.

use std::collections::VecDeque;

/// Sufficient-decrease constant of the Wolfe conditions.
pub const WOLFE_C1: f64 = 1e-4;
/// Curvature constant of the Wolfe conditions.
pub const WOLFE_C2: f64 = 0.9;

const MAX_BRACKET: usize = 20;
const MAX_ZOOM: usize = 30;
const MAX_BACKTRACK: usize = 60;

/// Outcome of a minimization run.
#[derive(Clone, Debug)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn clamp_to_box(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (xi, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *xi = xi.clamp(lo, hi);
    }
}

/// Infinity norm of `x - clip(x - g)`: zero exactly at box-constrained
/// stationary points.
fn projected_gradient_inf(x: &[f64], g: &[f64], bounds: &[(f64, f64)]) -> f64 {
    x.iter()
        .zip(g)
        .zip(bounds)
        .map(|((&xi, &gi), &(lo, hi))| (xi - (xi - gi).clamp(lo, hi)).abs())
        .fold(0.0, f64::max)
}

fn active_mask(x: &[f64], g: &[f64], bounds: &[(f64, f64)]) -> Vec<bool> {
    x.iter()
        .zip(g)
        .zip(bounds)
        .map(|((&xi, &gi), &(lo, hi))| (xi <= lo && gi > 0.0) || (xi >= hi && gi < 0.0))
        .collect()
}

/// Two-loop recursion: returns `H g` for the implicit inverse Hessian.
fn two_loop(history: &VecDeque<Pair>, g: &[f64]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for pair in history.iter().rev() {
        let alpha = pair.rho * dot(&pair.s, &q);
        for (qi, yi) in q.iter_mut().zip(&pair.y) {
            *qi -= alpha * yi;
        }
        alphas.push(alpha);
    }
    if let Some(last) = history.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for (pair, &alpha) in history.iter().zip(alphas.iter().rev()) {
        let beta = pair.rho * dot(&pair.y, &q);
        for (qi, si) in q.iter_mut().zip(&pair.s) {
            *qi += (alpha - beta) * si;
        }
    }
    q
}

/// Largest feasible step along `d` from `x`.
fn max_step(x: &[f64], d: &[f64], bounds: &[(f64, f64)]) -> f64 {
    let mut alpha = f64::INFINITY;
    for ((&xi, &di), &(lo, hi)) in x.iter().zip(d).zip(bounds) {
        if di > 0.0 {
            alpha = alpha.min((hi - xi) / di);
        } else if di < 0.0 {
            alpha = alpha.min((lo - xi) / di);
        }
    }
    alpha.max(0.0)
}

struct Eval {
    alpha: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    dphi: f64,
}

/// Minimizer of the cubic interpolant through two (value, slope) samples;
/// falls back to bisection when the interpolant is degenerate or the
/// minimizer crowds an endpoint.
fn cubic_step(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> f64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let bisect = 0.5 * (lo + hi);
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 {
        return bisect;
    }
    let d2 = disc.sqrt() * (b - a).signum();
    let step = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    if !step.is_finite() {
        return bisect;
    }
    // keep strictly interior
    let margin = 0.1 * (hi - lo);
    if step < lo + margin || step > hi - margin {
        bisect
    } else {
        step
    }
}

/// Strong-Wolfe line search along `d` (Nocedal & Wright alg. 3.5/3.6). A
/// step capped by `alpha_max` with the slope still negative is accepted on
/// the sufficient-decrease condition alone: the true minimizer lies at or
/// beyond the box face.
fn strong_wolfe<F>(
    objective: &mut F,
    x: &[f64],
    d: &[f64],
    f0: f64,
    dphi0: f64,
    alpha_max: f64,
) -> Option<Eval>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    if dphi0 >= 0.0 || alpha_max <= 0.0 {
        return None;
    }
    let mut eval_at = |alpha: f64| -> Eval {
        let xt: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
        let (f, g) = objective(&xt);
        let dphi = dot(&g, d);
        Eval {
            alpha,
            x: xt,
            f,
            g,
            dphi,
        }
    };

    let armijo = |alpha: f64, f: f64| f <= f0 + WOLFE_C1 * alpha * dphi0;

    let mut prev: Option<Eval> = None;
    let mut alpha = 1.0f64.min(alpha_max);
    for iter in 0..MAX_BRACKET {
        let trial = eval_at(alpha);
        let prev_f = prev.as_ref().map_or(f0, |p| p.f);
        if !armijo(alpha, trial.f) || (iter > 0 && trial.f >= prev_f) {
            let lo = prev.unwrap_or(Eval {
                alpha: 0.0,
                x: x.to_vec(),
                f: f0,
                g: Vec::new(),
                dphi: dphi0,
            });
            return zoom(&mut eval_at, f0, dphi0, lo, trial);
        }
        if trial.dphi.abs() <= -WOLFE_C2 * dphi0 {
            return Some(trial);
        }
        if trial.dphi >= 0.0 {
            let hi = prev.unwrap_or(Eval {
                alpha: 0.0,
                x: x.to_vec(),
                f: f0,
                g: Vec::new(),
                dphi: dphi0,
            });
            return zoom(&mut eval_at, f0, dphi0, trial, hi);
        }
        if alpha >= alpha_max * (1.0 - 1e-12) {
            return Some(trial);
        }
        let next = (2.0 * alpha).min(alpha_max);
        prev = Some(trial);
        alpha = next;
    }
    None
}

/// Refine an interval known to bracket a Wolfe point. `lo` always carries
/// the best Armijo-satisfying value seen so far.
fn zoom<F>(eval_at: &mut F, f0: f64, dphi0: f64, mut lo: Eval, mut hi: Eval) -> Option<Eval>
where
    F: FnMut(f64) -> Eval,
{
    let armijo = |alpha: f64, f: f64| f <= f0 + WOLFE_C1 * alpha * dphi0;
    for _ in 0..MAX_ZOOM {
        if (hi.alpha - lo.alpha).abs() < 1e-14 * lo.alpha.abs().max(1.0) {
            break;
        }
        let alpha = cubic_step(lo.alpha, lo.f, lo.dphi, hi.alpha, hi.f, hi.dphi);
        let trial = eval_at(alpha);
        if !armijo(alpha, trial.f) || trial.f >= lo.f {
            hi = trial;
        } else {
            if trial.dphi.abs() <= -WOLFE_C2 * dphi0 {
                return Some(trial);
            }
            if trial.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = trial;
        }
    }
    // Interval collapsed before the curvature condition was met; keep the
    // best sufficient-decrease point rather than discarding the progress.
    if lo.alpha > 0.0 && armijo(lo.alpha, lo.f) && !lo.g.is_empty() {
        Some(lo)
    } else {
        None
    }
}

/// Minimize `objective` inside the box, starting from `x0` (clipped into
/// the box first). `objective` must return the value and gradient at any
/// in-bounds point; bounds must be finite with `lo <= hi`.
pub fn lbfgs_minimize<F>(
    mut objective: F,
    x0: &[f64],
    bounds: &[(f64, f64)],
    max_iters: usize,
    grad_tol: f64,
    memory: usize,
) -> LbfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    assert_eq!(x0.len(), bounds.len(), "one bound pair per variable");
    for &(lo, hi) in bounds {
        assert!(
            lo.is_finite() && hi.is_finite() && lo <= hi,
            "bounds must be finite with lo <= hi"
        );
    }

    let mut x = x0.to_vec();
    clamp_to_box(&mut x, bounds);
    let (mut f, mut g) = objective(&x);
    let mut history: VecDeque<Pair> = VecDeque::with_capacity(memory);
    let mut iterations = 0;
    let mut converged = projected_gradient_inf(&x, &g, bounds) <= grad_tol;

    while !converged && iterations < max_iters {
        iterations += 1;

        // quasi-Newton direction on the free variables
        let active = active_mask(&x, &g, bounds);
        let masked_g: Vec<f64> = g
            .iter()
            .zip(&active)
            .map(|(&gi, &a)| if a { 0.0 } else { gi })
            .collect();
        let mut d: Vec<f64> = two_loop(&history, &masked_g)
            .into_iter()
            .map(|v| -v)
            .collect();
        for (di, &a) in d.iter_mut().zip(&active) {
            if a {
                *di = 0.0;
            }
        }
        let mut dphi0 = dot(&d, &g);
        if dphi0 >= -1e-16 * norm(&d) * norm(&g) {
            // not a descent direction; drop the curvature history
            history.clear();
            d = masked_g.iter().map(|&v| -v).collect();
            dphi0 = dot(&d, &g);
        }
        if norm(&d) == 0.0 {
            break;
        }

        let alpha_max = max_step(&x, &d, bounds);
        let step = strong_wolfe(&mut objective, &x, &d, f, dphi0, alpha_max).or_else(|| {
            // projected steepest descent with backtracking
            let mut alpha = 1.0;
            for _ in 0..MAX_BACKTRACK {
                let mut xt: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - alpha * gi).collect();
                clamp_to_box(&mut xt, bounds);
                let movement: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
                if norm(&movement) == 0.0 {
                    return None;
                }
                let (ft, gt) = objective(&xt);
                if ft <= f + WOLFE_C1 * dot(&g, &movement) {
                    let dphi = dot(&gt, &movement);
                    return Some(Eval {
                        alpha,
                        x: xt,
                        f: ft,
                        g: gt,
                        dphi,
                    });
                }
                alpha *= 0.5;
            }
            None
        });

        let Some(step) = step else {
            // no acceptable step in any direction; report the best iterate
            return LbfgsResult {
                x,
                f,
                iterations,
                converged: false,
            };
        };

        let mut x_new = step.x;
        clamp_to_box(&mut x_new, bounds);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = step.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * norm(&s) * norm(&y) {
            if history.len() == memory {
                history.pop_front();
            }
            history.push_back(Pair {
                rho: 1.0 / sy,
                s,
                y,
            });
        }
        x = x_new;
        f = step.f;
        g = step.g;
        converged = projected_gradient_inf(&x, &g, bounds) <= grad_tol;
    }

    LbfgsResult {
        x,
        f,
        iterations,
        converged,
    }
}
