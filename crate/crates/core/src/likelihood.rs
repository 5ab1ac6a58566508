//! Multinomial log-likelihood of a frequency table under the Clayton model,
//! and its analytic score.

use serde::{Deserialize, Serialize};

use crate::copula::{cell_jet, Rate, Theta};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::table::FrequencyTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    /// All groups share one rate `pi_0`.
    Null,
    /// One rate per group.
    Alternative,
}

/// Group rates and copula parameter.
///
/// Under [`Hypothesis::Null`] a single shared rate is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pis: Vec<Rate<T>>,
    theta: Theta<T>,
    hypothesis: Hypothesis,
}

impl<T: Scalar> ModelParams<T> {
    pub fn alternative(pis: Vec<Rate<T>>, theta: Theta<T>) -> Self {
        Self {
            pis,
            theta,
            hypothesis: Hypothesis::Alternative,
        }
    }

    pub fn null(pi0: Rate<T>, theta: Theta<T>) -> Self {
        Self {
            pis: vec![pi0],
            theta,
            hypothesis: Hypothesis::Null,
        }
    }

    pub fn pis(&self) -> &[Rate<T>] {
        &self.pis
    }

    pub fn theta(&self) -> Theta<T> {
        self.theta
    }

    pub fn hypothesis(&self) -> Hypothesis {
        self.hypothesis
    }

    /// Rate of group `i` (the shared rate under the null).
    pub fn rate(&self, i: usize) -> Rate<T> {
        match self.hypothesis {
            Hypothesis::Null => self.pis[0],
            Hypothesis::Alternative => self.pis[i],
        }
    }

    /// One rate per group, repeating the shared rate under the null.
    pub fn expanded(&self, g: usize) -> Vec<Rate<T>> {
        (0..g).map(|i| self.rate(i)).collect()
    }

    pub(crate) fn check(&self, table: &FrequencyTable) -> Result<()> {
        let expected = match self.hypothesis {
            Hypothesis::Null => 1,
            Hypothesis::Alternative => table.g(),
        };
        if self.pis.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.pis.len(),
            });
        }
        Ok(())
    }
}

fn prob_floor<T: Scalar>() -> T {
    T::lit(1e-300).max(T::min_positive_value())
}

fn guard<T: Scalar>(group: usize, counts: &[T; 3], probs: &[T; 3]) -> Result<()> {
    let floor = prob_floor::<T>();
    for k in 0..3 {
        if counts[k] > T::zero() && !(probs[k] >= floor) {
            return Err(Error::NonfiniteLikelihood {
                group,
                prob: probs[k].to_f64_lossy(),
            });
        }
    }
    Ok(())
}

/// Log-likelihood contribution of one group and its derivatives in `pi` and
/// `theta`. `theta == 0` evaluates the independence limit.
#[inline]
pub(crate) fn group_terms<T: Scalar>(group: usize, counts: &[T; 3], pi: T, theta: T) -> Result<(T, T, T)> {
    let jet = cell_jet(pi, theta);
    guard(group, counts, &jet.probs)?;
    let mut ll = T::zero();
    let mut d_pi = T::zero();
    let mut d_theta = T::zero();
    for k in 0..3 {
        if counts[k] > T::zero() {
            let w = counts[k] / jet.probs[k];
            ll = ll + counts[k] * jet.probs[k].ln();
            d_pi = d_pi + w * jet.d_pi[k];
            d_theta = d_theta + w * jet.d_theta[k];
        }
    }
    Ok((ll, d_pi, d_theta))
}

fn counts_of<T: Scalar>(table: &FrequencyTable, i: usize) -> [T; 3] {
    let g = table.group(i);
    [T::lit(g.m0 as f64), T::lit(g.m1 as f64), T::lit(g.m2 as f64)]
}

/// Log-likelihood `sum_i sum_l m_il ln p_l(pi_i, theta)` with `0 ln 0 = 0`.
pub fn loglik<T: Scalar>(params: &ModelParams<T>, table: &FrequencyTable) -> Result<T> {
    params.check(table)?;
    let theta = params.theta.value();
    let mut total = T::zero();
    for i in 0..table.g() {
        let counts = counts_of::<T>(table, i);
        let jet = cell_jet(params.rate(i).value(), theta);
        guard(i, &counts, &jet.probs)?;
        for k in 0..3 {
            if counts[k] > T::zero() {
                total = total + counts[k] * jet.probs[k].ln();
            }
        }
    }
    Ok(total)
}

/// `d_i = dl/dpi_i` in closed form.
///
/// With `omega = 2 / (1 - pi)^theta - 1` one has `omega^(-1/theta) = C` and
/// `omega^(1/theta + 1) (1 - pi)^(theta + 1) = (1 - pi)(2 - (1 - pi)^theta) C^-1`,
/// which is how the three terms are evaluated here. Under the null the
/// component is taken at the shared rate.
pub fn score_pi<T: Scalar>(i: usize, params: &ModelParams<T>, table: &FrequencyTable) -> Result<T> {
    params.check(table)?;
    if i >= table.g() {
        return Err(Error::DimensionMismatch {
            expected: table.g(),
            got: i + 1,
        });
    }
    let counts = counts_of::<T>(table, i);
    let pi = params.rate(i).value();
    let jet = cell_jet(pi, params.theta.value());
    guard(i, &counts, &jet.probs)?;
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    // 1 / (omega^(1/theta+1) (1-pi)^(theta+1)) scaled by C
    let k = jet.c / (jet.q * jet.h);
    let [m0, m1, m2] = counts;
    let [_, p1, p2] = jet.probs;
    let mut d = T::zero();
    if m1 > T::zero() {
        // denominator 2 pi + 2 C - 2 = -p1
        d = d + m1 * (four * k - two) / p1;
    }
    if m2 > T::zero() {
        // denominator 2 pi + C - 1 = p2
        d = d - m2 * (two * k - two) / p2;
    }
    if m0 > T::zero() {
        d = d - two * m0 / (jet.q * jet.h);
    }
    Ok(d)
}

/// `dl/dtheta` from the analytic theta-derivative of the copula value.
pub fn score_theta<T: Scalar>(params: &ModelParams<T>, table: &FrequencyTable) -> Result<T> {
    params.check(table)?;
    let theta = params.theta.value();
    let mut total = T::zero();
    for i in 0..table.g() {
        let counts = counts_of::<T>(table, i);
        let (_, _, d_theta) = group_terms(i, &counts, params.rate(i).value(), theta)?;
        total = total + d_theta;
    }
    Ok(total)
}

/// Score vector `U = (d_1, ..., d_g, dl/dtheta)`.
pub fn score_vector<T: Scalar>(params: &ModelParams<T>, table: &FrequencyTable) -> Result<Vec<T>> {
    let mut u = (0..table.g())
        .map(|i| score_pi(i, params, table))
        .collect::<Result<Vec<_>>>()?;
    u.push(score_theta(params, table)?);
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rate(p: f64) -> Rate<f64> {
        Rate::new(p).unwrap()
    }

    fn one_group(m: [u64; 3]) -> FrequencyTable {
        FrequencyTable::from_counts(&[m]).unwrap()
    }

    fn fd<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn independent_cells() {
        let t = one_group([1, 1, 1]);
        let p = ModelParams::alternative(vec![rate(0.4)], Theta::Independence);
        let expected = 0.36f64.ln() + 0.48f64.ln() + 0.16f64.ln();
        assert_relative_eq!(loglik(&p, &t).unwrap(), expected, max_relative = 1e-13);
        assert!((expected + 3.588).abs() < 1e-3);
    }

    #[test]
    fn published_example_two_log_likelihood_gap() {
        let t = FrequencyTable::from_counts(&[[11, 4, 3], [6, 2, 2]]).unwrap();
        let ha = ModelParams::alternative(vec![rate(0.276), rate(0.303)], Theta::clayton(3.051).unwrap());
        let h0 = ModelParams::null(rate(0.286), Theta::clayton(3.050).unwrap());
        let diff = loglik(&ha, &t).unwrap() - loglik(&h0, &t).unwrap();
        // rounded published estimates, so the gap is only good to ~1e-3
        assert!((2.0 * diff - 0.034).abs() < 3e-3, "2 diff = {}", 2.0 * diff);
    }

    #[test]
    fn score_pi_matches_finite_difference() {
        let t = one_group([10, 10, 10]);
        let theta = Theta::clayton(2.0).unwrap();
        let analytic = score_pi(0, &ModelParams::alternative(vec![rate(0.4)], theta), &t).unwrap();
        let numeric = fd(
            |p| loglik(&ModelParams::alternative(vec![rate(p)], theta), &t).unwrap(),
            0.4,
            1e-6,
        );
        assert_relative_eq!(analytic, numeric, max_relative = 1e-5);
    }

    #[test]
    fn score_pi_sign_for_doubly_affected_group() {
        let t = one_group([0, 0, 30]);
        let p = ModelParams::alternative(vec![rate(0.1)], Theta::clayton(2.0).unwrap());
        assert!(score_pi(0, &p, &t).unwrap() > 0.0);
    }

    #[test]
    fn score_theta_matches_finite_difference() {
        let t = one_group([10, 10, 10]);
        let analytic = score_theta(
            &ModelParams::alternative(vec![rate(0.5)], Theta::clayton(2.0).unwrap()),
            &t,
        )
        .unwrap();
        let numeric = fd(
            |th| loglik(&ModelParams::alternative(vec![rate(0.5)], Theta::clayton(th).unwrap()), &t).unwrap(),
            2.0,
            1e-6,
        );
        assert_relative_eq!(analytic, numeric, max_relative = 1e-5);
    }

    #[test]
    fn score_theta_vanishes_at_cell_proportional_weights() {
        // real-valued counts exactly proportional to the cell probabilities
        let pi = 0.35f64;
        let theta = 2.7;
        let jet = cell_jet(pi, theta);
        let counts = jet.probs.map(|p| 1000.0 * p);
        let (_, d_pi, d_theta) = group_terms(0, &counts, pi, theta).unwrap();
        assert!(d_theta.abs() < 1e-10, "{d_theta}");
        assert!(d_pi.abs() < 1e-9, "{d_pi}");
    }

    #[test]
    fn null_components_are_per_group() {
        let t = FrequencyTable::from_counts(&[[20, 5, 5], [10, 10, 10]]).unwrap();
        let theta = Theta::clayton(1.5).unwrap();
        let null = ModelParams::null(rate(0.3), theta);
        let alt = ModelParams::alternative(vec![rate(0.3), rate(0.3)], theta);
        for i in 0..2 {
            assert_eq!(score_pi(i, &null, &t).unwrap(), score_pi(i, &alt, &t).unwrap());
        }
        assert_eq!(loglik(&null, &t).unwrap(), loglik(&alt, &t).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        let t = FrequencyTable::from_counts(&[[1, 1, 1], [2, 2, 2]]).unwrap();
        let p = ModelParams::alternative(vec![rate(0.3)], Theta::Independence);
        assert!(matches!(loglik(&p, &t), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn zero_counts_are_skipped_and_tiny_cells_rejected() {
        let t = one_group([0, 0, 5]);
        let p = ModelParams::alternative(vec![rate(0.6)], Theta::clayton(3.0).unwrap());
        let l = loglik(&p, &t).unwrap();
        assert!(l.is_finite());
        // p2 ~ pi^2 underflows
        let p = ModelParams::alternative(vec![rate(1e-160)], Theta::Independence);
        assert!(matches!(loglik(&p, &t), Err(Error::NonfiniteLikelihood { .. })));
    }

    #[test]
    fn independence_score_theta_is_the_limit() {
        let t = one_group([30, 12, 8]);
        let at_zero = score_theta(&ModelParams::alternative(vec![rate(0.3)], Theta::Independence), &t).unwrap();
        let near = score_theta(&ModelParams::alternative(vec![rate(0.3)], Theta::clayton(1e-9).unwrap()), &t).unwrap();
        assert_relative_eq!(at_zero, near, max_relative = 1e-7);
    }
}
