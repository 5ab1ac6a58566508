//! Maximum-likelihood fitting on `(logit pi, log theta)`.
//!
//! The negated log-likelihood is minimised by a quasi-Newton method from a
//! small fixed schedule of starting points; the best converged optimum wins,
//! ties going to the earliest start.

use crate::copula::{cell_jet, Rate, Theta};
use crate::error::{Error, Result};
use crate::likelihood::{group_terms, loglik, Hypothesis, ModelParams};
use crate::optimize::{self, Bounds, Minimum, Settings};
use crate::table::FrequencyTable;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Max-norm of the gradient on the transformed scale.
    pub grad_tol: f64,
    pub rel_f_tol: f64,
    /// Floor on theta; the Clayton family is open at zero.
    pub theta_min: f64,
    pub theta_max: f64,
    /// `|logit pi|` is kept below this.
    pub logit_bound: f64,
    /// Fixed theta values of starts 2.. (start 1 uses a moment estimate).
    pub theta_starts: Vec<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-6,
            rel_f_tol: 1e-10,
            theta_min: 1e-4,
            theta_max: 1e4,
            logit_bound: 25.0,
            theta_starts: vec![0.5, 2.0, 8.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params_hat: ModelParams<f64>,
    pub loglik_hat: f64,
    pub converged: bool,
    /// Projected gradient max-norm on the transformed scale.
    pub grad_norm: f64,
    /// Iterations used by the winning start.
    pub iterations: usize,
    pub n_starts_used: usize,
    /// The optimum sits on a bound (theta floor or an extreme rate).
    pub boundary_warning: bool,
    /// Theta was stopped by one of its bounds.
    pub theta_on_bound: bool,
}

impl FitResult {
    pub fn hypothesis(&self) -> Hypothesis {
        self.params_hat.hypothesis()
    }

    pub fn theta_hat(&self) -> f64 {
        self.params_hat.theta().value()
    }

    /// Estimated rate of every group (repeated under the null).
    pub fn pis_hat(&self, g: usize) -> Vec<f64> {
        self.params_hat.expanded(g).iter().map(|r| r.value()).collect()
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `(logit pi_1, ..., logit pi_k, ln theta)`; independence maps to `-inf`.
pub fn transform(params: &ModelParams<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = params.pis().iter().map(|r| logit(r.value())).collect();
    v.push(params.theta().value().ln());
    v
}

pub fn untransform(v: &[f64], hypothesis: Hypothesis) -> Result<ModelParams<f64>> {
    let Some((&log_theta, etas)) = v.split_last() else {
        return Err(Error::DimensionMismatch { expected: 2, got: 0 });
    };
    if etas.is_empty() || (hypothesis == Hypothesis::Null && etas.len() != 1) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: v.len(),
        });
    }
    let pis = etas
        .iter()
        .map(|&e| Rate::new(logistic(e)))
        .collect::<Result<Vec<_>>>()?;
    let theta = Theta::clayton(log_theta.exp())?;
    Ok(match hypothesis {
        Hypothesis::Null => ModelParams::null(pis[0], theta),
        Hypothesis::Alternative => ModelParams::alternative(pis, theta),
    })
}

/// Negated log-likelihood and gradient on the transformed scale.
struct Objective<'a> {
    counts: &'a [[f64; 3]],
    hypothesis: Hypothesis,
}

impl Objective<'_> {
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> Option<f64> {
        let k = x.len() - 1;
        let theta = x[k].exp();
        grad.iter_mut().for_each(|v| *v = 0.0);
        let mut ll = 0.0;
        let mut d_theta = 0.0;
        for (i, c) in self.counts.iter().enumerate() {
            let slot = match self.hypothesis {
                Hypothesis::Null => 0,
                Hypothesis::Alternative => i,
            };
            let pi = logistic(x[slot]);
            let (l, dp, dt) = group_terms(i, c, pi, theta).ok()?;
            ll += l;
            grad[slot] -= dp * pi * (1.0 - pi);
            d_theta += dt;
        }
        grad[k] = -d_theta * theta;
        if grad.iter().all(|v| v.is_finite()) {
            Some(-ll)
        } else {
            None
        }
    }
}

fn moment_rate(c: &[f64; 3]) -> f64 {
    let m = c[0] + c[1] + c[2];
    ((c[1] + 2.0 * c[2]) / (2.0 * m)).clamp(0.02, 0.98)
}

/// Theta matching the expected count of unaffected subjects to the observed
/// one, bisected on `ln theta` within `[0.1, 20]`.
fn moment_theta(counts: &[[f64; 3]], rates: &[f64]) -> f64 {
    let observed: f64 = counts.iter().map(|c| c[0]).sum();
    let expected = |theta: f64| -> f64 {
        counts
            .iter()
            .zip(rates)
            .map(|(c, &p)| (c[0] + c[1] + c[2]) * cell_jet(p, theta).c)
            .sum()
    };
    let (mut lo, mut hi) = (0.1f64.ln(), 20f64.ln());
    if expected(lo.exp()) >= observed {
        return lo.exp();
    }
    if expected(hi.exp()) <= observed {
        return hi.exp();
    }
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if expected(mid.exp()) < observed {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// Transformed starting points: moment rates with a moment theta, then the
/// same rates with each of `opts.theta_starts`.
pub fn start_points(table: &FrequencyTable, hypothesis: Hypothesis, opts: &FitOptions) -> Vec<Vec<f64>> {
    let counts = table.counts_f64();
    let rates: Vec<f64> = match hypothesis {
        Hypothesis::Null => {
            let [s0, s1, s2] = table.column_totals();
            vec![moment_rate(&[s0 as f64, s1 as f64, s2 as f64])]
        }
        Hypothesis::Alternative => counts.iter().map(moment_rate).collect(),
    };
    let expanded: Vec<f64> = (0..table.g())
        .map(|i| if rates.len() == 1 { rates[0] } else { rates[i] })
        .collect();
    let etas: Vec<f64> = rates.iter().map(|&p| logit(p)).collect();
    std::iter::once(moment_theta(&counts, &expanded))
        .chain(opts.theta_starts.iter().copied())
        .map(|t| {
            let mut v = etas.clone();
            v.push(t.ln());
            v
        })
        .collect()
}

fn check_identifiable(table: &FrequencyTable) -> Result<()> {
    let [s0, s1, s2] = table.column_totals();
    if s1 == 0 && s2 == 0 {
        return Err(Error::DegenerateTable("no affected eyes in any group".into()));
    }
    if s0 == 0 && s1 == 0 {
        return Err(Error::DegenerateTable("every subject has both eyes affected".into()));
    }
    Ok(())
}

/// Maximum-likelihood fit with default options.
pub fn fit(table: &FrequencyTable, hypothesis: Hypothesis) -> Result<FitResult> {
    fit_with(table, hypothesis, &FitOptions::default(), &[])
}

/// Fit from the default start schedule followed by `extra_starts`
/// (transformed coordinates).
pub fn fit_with(
    table: &FrequencyTable,
    hypothesis: Hypothesis,
    opts: &FitOptions,
    extra_starts: &[Vec<f64>],
) -> Result<FitResult> {
    check_identifiable(table)?;
    let counts = table.counts_f64();
    let objective = Objective {
        counts: &counts,
        hypothesis,
    };
    let n_rates = match hypothesis {
        Hypothesis::Null => 1,
        Hypothesis::Alternative => table.g(),
    };
    let mut lower = vec![-opts.logit_bound; n_rates];
    let mut upper = vec![opts.logit_bound; n_rates];
    lower.push(opts.theta_min.ln());
    upper.push(opts.theta_max.ln());
    let bounds = Bounds { lower, upper };
    let settings = Settings {
        max_iter: opts.max_iter,
        grad_tol: opts.grad_tol,
        rel_f_tol: opts.rel_f_tol,
    };

    let mut starts = start_points(table, hypothesis, opts);
    starts.extend(extra_starts.iter().filter(|s| s.len() == n_rates + 1).cloned());

    let mut best: Option<Minimum> = None;
    let mut best_grad = f64::INFINITY;
    for x0 in &starts {
        let Some(m) = optimize::minimize(|x, g| objective.eval(x, g), x0, &bounds, &settings) else {
            continue;
        };
        best_grad = best_grad.min(m.grad_norm);
        if !m.converged {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => m.f < b.f - 1e-12 * b.f.abs().max(1.0),
        };
        if better {
            best = Some(m);
        }
    }

    let Some(best) = best else {
        return Err(Error::NoConvergence {
            max_iter: opts.max_iter,
            best_grad_norm: best_grad,
        });
    };
    let theta_on_bound = best.x[n_rates] <= bounds.lower[n_rates] || best.x[n_rates] >= bounds.upper[n_rates];
    let params_hat = untransform(&best.x, hypothesis)?;
    let loglik_hat = loglik(&params_hat, table)?;
    Ok(FitResult {
        params_hat,
        loglik_hat,
        converged: true,
        grad_norm: best.grad_norm,
        iterations: best.iterations,
        n_starts_used: starts.len(),
        boundary_warning: best.at_bound,
        theta_on_bound,
    })
}
