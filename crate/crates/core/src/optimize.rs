//! Box-constrained quasi-Newton minimiser (projected BFGS with an Armijo
//! backtracking line search).
//!
//! Bounds are only used to keep the search inside a numerically safe region
//! of the transformed parameter space; coordinates sitting on a bound with the
//! gradient pointing outward are frozen for the step.

#[derive(Debug, Clone)]
pub(crate) struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    fn clamp(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub rel_f_tol: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    /// Max-norm of the projected gradient at `x`.
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub at_bound: bool,
}

const ARMIJO: f64 = 1e-4;
const MAX_STEP: f64 = 5.0;
const MAX_BACKTRACK: usize = 60;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

/// Coordinates free to move: not pinned on a bound by an outward gradient.
fn free_mask(x: &[f64], g: &[f64], b: &Bounds, free: &mut [bool]) {
    for i in 0..x.len() {
        let pinned_low = x[i] <= b.lower[i] && g[i] > 0.0;
        let pinned_high = x[i] >= b.upper[i] && g[i] < 0.0;
        free[i] = !(pinned_low || pinned_high);
    }
}

fn projected_norm(g: &[f64], free: &[bool]) -> f64 {
    g.iter()
        .zip(free)
        .filter(|(_, &f)| f)
        .fold(0.0, |m, (v, _)| m.max(v.abs()))
}

/// Minimises `objective`, which writes the gradient into its second argument
/// and returns `None` where the function is undefined. Returns `None` only
/// when the (clamped) start point is itself undefined.
pub(crate) fn minimize<F>(mut objective: F, x0: &[f64], bounds: &Bounds, settings: &Settings) -> Option<Minimum>
where
    F: FnMut(&[f64], &mut [f64]) -> Option<f64>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    bounds.clamp(&mut x);
    let mut g = vec![0.0; n];
    let mut f = objective(&x, &mut g).filter(|v| v.is_finite())?;

    let mut h = identity(n);
    let mut h_is_identity = true;
    let mut free = vec![true; n];
    let mut d = vec![0.0; n];
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut hy = vec![0.0; n];
    let mut last_rel_change = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < settings.max_iter {
        free_mask(&x, &g, bounds, &mut free);
        let pg = projected_norm(&g, &free);
        if pg <= settings.grad_tol && (iterations == 0 || last_rel_change <= settings.rel_f_tol) {
            converged = true;
            break;
        }

        for i in 0..n {
            d[i] = if free[i] {
                -(0..n).filter(|&j| free[j]).map(|j| h[i * n + j] * g[j]).sum::<f64>()
            } else {
                0.0
            };
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            h = identity(n);
            h_is_identity = true;
            for i in 0..n {
                d[i] = if free[i] { -g[i] } else { 0.0 };
            }
            slope = dot(&g, &d);
            if !(slope < 0.0) {
                break;
            }
        }

        let d_max = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut alpha = if d_max > MAX_STEP { MAX_STEP / d_max } else { 1.0 };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            for i in 0..n {
                xn[i] = x[i] + alpha * d[i];
            }
            bounds.clamp(&mut xn);
            for i in 0..n {
                s[i] = xn[i] - x[i];
            }
            if s.iter().all(|v| *v == 0.0) {
                break;
            }
            match objective(&xn, &mut gn) {
                Some(fv) if fv.is_finite() && fv <= f + ARMIJO * dot(&g, &s) => {
                    accepted = Some(fv);
                    break;
                }
                Some(fv) if fv.is_finite() => {
                    // safeguarded quadratic interpolation along the ray
                    let denom = 2.0 * (fv - f - slope * alpha);
                    let trial = if denom > 0.0 { -slope * alpha * alpha / denom } else { 0.5 * alpha };
                    alpha = trial.clamp(0.1 * alpha, 0.5 * alpha);
                }
                _ => alpha *= 0.25,
            }
        }

        let Some(fn_) = accepted else {
            if h_is_identity {
                break;
            }
            h = identity(n);
            h_is_identity = true;
            iterations += 1;
            continue;
        };

        for i in 0..n {
            y[i] = gn[i] - g[i];
        }
        let sy = dot(&s, &y);
        let yy = dot(&y, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * yy.sqrt() {
            if h_is_identity {
                let scale = sy / yy;
                for v in h.iter_mut() {
                    *v *= scale;
                }
            }
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let rho = 1.0 / sy;
            for i in 0..n {
                hy[i] = (0..n).map(|j| h[i * n + j] * y[j]).sum();
            }
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
            h_is_identity = false;
        }

        last_rel_change = (f - fn_).abs() / fn_.abs().max(1.0);
        std::mem::swap(&mut x, &mut xn);
        std::mem::swap(&mut g, &mut gn);
        f = fn_;
        iterations += 1;
    }

    free_mask(&x, &g, bounds, &mut free);
    let grad_norm = projected_norm(&g, &free);
    if !converged && grad_norm <= settings.grad_tol {
        // stalled at a point that already satisfies the gradient test
        converged = true;
    }
    let at_bound = x
        .iter()
        .enumerate()
        .any(|(i, v)| *v <= bounds.lower[i] || *v >= bounds.upper[i]);
    Some(Minimum {
        x,
        f,
        grad_norm,
        iterations,
        converged,
        at_bound,
    })
}
