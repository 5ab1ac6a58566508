//! Clayton copula for a pair of Bernoulli margins.
//!
//! With both eyes sharing the success rate `pi`, the joint law of a subject is
//! fixed by the single copula value `C = C_theta(1 - pi, 1 - pi)`:
//!
//! ```text
//! P(no eye affected)   = C
//! P(one eye affected)  = 2(1 - pi) - 2C
//! P(both eyes affected) = 1 - 2(1 - pi) + C
//! ```
//!
//! All evaluation goes through `log C` written in terms of `expm1`/`ln_1p`, so
//! the independence limit `theta -> 0` and large `theta` are both stable.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Values of theta above this are evaluated as if equal to it; the copula is
/// within rounding of `min(u, v)` there.
pub const THETA_EVAL_MAX: f64 = 1e6;

/// Clayton dependence parameter, or the independence limit `theta -> 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Theta<T> {
    Independence,
    Clayton(T),
}

impl<T: Scalar> Theta<T> {
    /// Strict Clayton member; `value` must be positive and finite.
    pub fn clayton(value: T) -> Result<Self> {
        if value > T::zero() && value.is_finite() {
            Ok(Theta::Clayton(value))
        } else {
            Err(Error::Domain {
                what: "theta",
                value: value.to_f64_lossy(),
                domain: "(0, inf)",
            })
        }
    }

    /// Like [`Theta::clayton`] but maps exactly zero to [`Theta::Independence`].
    pub fn from_value(value: T) -> Result<Self> {
        if value == T::zero() {
            Ok(Theta::Independence)
        } else {
            Self::clayton(value)
        }
    }

    /// Numeric value, zero for independence.
    pub fn value(self) -> T {
        match self {
            Theta::Independence => T::zero(),
            Theta::Clayton(t) => t,
        }
    }

    pub fn is_independence(self) -> bool {
        matches!(self, Theta::Independence)
    }
}

/// Per-eye event probability, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Rate<T>(T);

impl<T: Scalar> Rate<T> {
    pub fn new(value: T) -> Result<Self> {
        if value > T::zero() && value < T::one() {
            Ok(Rate(value))
        } else {
            Err(Error::Domain {
                what: "pi",
                value: value.to_f64_lossy(),
                domain: "(0, 1)",
            })
        }
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }
}

/// Collapsed cell probabilities for one subject.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellProbs<T> {
    /// Neither eye affected.
    pub p0: T,
    /// Exactly one eye affected (both discordant cells together).
    pub p1: T,
    /// Both eyes affected.
    pub p2: T,
    /// `C_theta(1 - pi, 1 - pi)`.
    pub c_value: T,
}

impl<T: Scalar> CellProbs<T> {
    pub fn as_array(&self) -> [T; 3] {
        [self.p0, self.p1, self.p2]
    }
}

/// Translation of one `(pi, theta)` point into the three classical
/// parameterisations of paired binary data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalEquivalents<T> {
    /// Rosner's constant R: `C = R pi^2 - 2 pi + 1`.
    pub rosner_r: T,
    /// Donner's common correlation: `C = (1 - rho) pi^2 + (rho - 2) pi + 1`.
    pub donner_rho: T,
    /// Dallal's conditional probability: `C = (gamma - 2) pi + 1`.
    pub dallal_gamma: T,
}

fn check_unit<T: Scalar>(what: &'static str, x: T) -> Result<()> {
    if x >= T::zero() && x <= T::one() {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: x.to_f64_lossy(),
            domain: "[0, 1]",
        })
    }
}

/// `C_theta(u, v) = (u^-theta + v^-theta - 1)^(-1/theta)`; the product `u v`
/// under independence.
pub fn clayton_cdf<T: Scalar>(u: T, v: T, theta: Theta<T>) -> Result<T> {
    check_unit("u", u)?;
    check_unit("v", v)?;
    let one = T::one();
    if u == T::zero() || v == T::zero() {
        return Ok(T::zero());
    }
    if u == one {
        return Ok(v);
    }
    if v == one {
        return Ok(u);
    }
    let t = match theta {
        Theta::Independence => return Ok(u * v),
        Theta::Clayton(t) => t.min(T::lit(THETA_EVAL_MAX)),
    };
    // ln(u^-t + v^-t - 1) with a = -t ln u, b = -t ln v, both >= 0
    let a = -t * u.ln();
    let b = -t * v.ln();
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    let log_arg = if hi <= one {
        let s = a.exp_m1() + b.exp_m1();
        if s < T::lit(1e-14) {
            return Ok(u * v);
        }
        s.ln_1p()
    } else {
        hi + ((lo - hi).exp() - (-hi).exp()).ln_1p()
    };
    Ok((-log_arg / t).exp())
}

/// Below this |theta ln(1 - pi)| the series for `psi` is used.
fn series_cutoff<T: Scalar>() -> T {
    if T::epsilon() < T::lit(1e-10) {
        T::lit(0.02)
    } else {
        T::lit(0.1)
    }
}

/// `psi(x) = -ln(2 - e^x) / x` and its derivative, `x = theta ln(1 - pi) <= 0`.
///
/// `ln(C / (1 - pi)) = ln(1 - pi) psi(x)` and
/// `d ln C / d theta = ln(1 - pi)^2 psi'(x)`.
fn psi_pair<T: Scalar>(x: T, em: T, h: T) -> (T, T) {
    if x.abs() < series_cutoff::<T>() {
        const PSI: [f64; 9] = [
            1.0,
            1.0,
            1.0,
            13.0 / 12.0,
            5.0 / 4.0,
            541.0 / 360.0,
            223.0 / 120.0,
            47293.0 / 20160.0,
            36389.0 / 12096.0,
        ];
        let mut psi = T::zero();
        let mut dpsi = T::zero();
        for k in (0..PSI.len()).rev() {
            psi = psi * x + T::lit(PSI[k]);
            if k > 0 {
                dpsi = dpsi * x + T::lit(PSI[k] * k as f64);
            }
        }
        (psi, dpsi)
    } else {
        let phi = -(-em).ln_1p();
        let dphi = (T::one() + em) / h;
        (phi / x, (x * dphi - phi) / (x * x))
    }
}

/// Cell probabilities of one group together with their first derivatives in
/// `pi` and `theta`. `theta == 0` is the independence limit.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CellJet<T> {
    pub probs: [T; 3],
    pub d_pi: [T; 3],
    pub d_theta: [T; 3],
    pub c: T,
    /// `2 - (1 - pi)^theta`
    pub h: T,
    pub q: T,
}

pub(crate) fn cell_jet<T: Scalar>(pi: T, theta: T) -> CellJet<T> {
    let one = T::one();
    let two = T::lit(2.0);
    let q = one - pi;
    let l = (-pi).ln_1p();
    let t = theta.min(T::lit(THETA_EVAL_MAX));
    let x = t * l;
    let em = x.exp_m1();
    let h = one - em;
    let (psi, dpsi) = psi_pair(x, em, h);
    let log_ratio = l * psi;
    let c = q * log_ratio.exp();
    let q_minus_c = -q * log_ratio.exp_m1();
    let dc_dpi = -two * c / (q * h);
    let dc_dtheta = c * l * l * dpsi;
    CellJet {
        probs: [c, two * q_minus_c, pi - q_minus_c],
        d_pi: [dc_dpi, -two - two * dc_dpi, two + dc_dpi],
        d_theta: [dc_dtheta, -two * dc_dtheta, dc_dtheta],
        c,
        h,
        q,
    }
}

/// Joint cell probabilities of a subject whose eyes share rate `pi`.
pub fn cell_probs<T: Scalar>(pi: Rate<T>, theta: Theta<T>) -> CellProbs<T> {
    let jet = cell_jet(pi.value(), theta.value());
    let [p0, p1, p2] = jet.probs;
    CellProbs {
        p0,
        p1,
        p2,
        c_value: jet.c,
    }
}

/// Kendall's tau of the Clayton copula, `theta / (theta + 2)`.
pub fn kendall_tau<T: Scalar>(theta: Theta<T>) -> T {
    match theta {
        Theta::Independence => T::zero(),
        Theta::Clayton(t) => t / (t + T::lit(2.0)),
    }
}

/// Inverse of [`kendall_tau`]: `theta = 2 tau / (1 - tau)`.
pub fn tau_to_theta<T: Scalar>(tau: T) -> Result<Theta<T>> {
    if !(tau > T::zero() && tau < T::one()) {
        return Err(Error::Domain {
            what: "tau",
            value: tau.to_f64_lossy(),
            domain: "(0, 1)",
        });
    }
    Theta::clayton(T::lit(2.0) * tau / (T::one() - tau))
}

/// Pearson correlation between the two binary outcomes of a subject.
pub fn pearson_rho<T: Scalar>(pi: Rate<T>, theta: Theta<T>) -> T {
    if theta.is_independence() {
        return T::zero();
    }
    let p = pi.value();
    let q = T::one() - p;
    let c = cell_probs(pi, theta).c_value;
    (c - q * q) / (p * q)
}

pub fn classical_equivalents<T: Scalar>(pi: Rate<T>, theta: Theta<T>) -> ClassicalEquivalents<T> {
    let p = pi.value();
    let c = cell_probs(pi, theta).c_value;
    let one = T::one();
    let two = T::lit(2.0);
    ClassicalEquivalents {
        rosner_r: (c + two * p - one) / (p * p),
        donner_rho: pearson_rho(pi, theta),
        dallal_gamma: (c - one) / p + two,
    }
}
