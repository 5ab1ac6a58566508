//! Log-gamma and the regularized upper incomplete gamma function.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_ITER: usize = 500;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x > 0`.
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        // reflection
        let pi = T::lit(std::f64::consts::PI);
        return (pi / (pi * x).sin()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS[0]);
    for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (x + T::lit(k as f64));
    }
    let t = x + T::lit(LANCZOS_G) + half;
    T::lit(0.5 * (2.0 * std::f64::consts::PI).ln()) + (x + half) * t.ln() - t + acc.ln()
}

/// `Q(a, x) = Gamma(a, x) / Gamma(a)`.
pub fn gamma_q<T: Scalar>(a: T, x: T) -> Result<T> {
    if !(a > T::zero()) {
        return Err(Error::Domain {
            what: "a",
            value: a.to_f64_lossy(),
            domain: "(0, inf)",
        });
    }
    if !(x >= T::zero()) {
        return Err(Error::Domain {
            what: "x",
            value: x.to_f64_lossy(),
            domain: "[0, inf)",
        });
    }
    if x == T::zero() {
        return Ok(T::one());
    }
    if x.is_infinite() {
        return Ok(T::zero());
    }
    let log_prefactor = -x + a * x.ln() - ln_gamma(a);
    if x < a + T::one() {
        Ok(T::one() - lower_series(a, x, log_prefactor))
    } else {
        Ok(upper_continued_fraction(a, x, log_prefactor))
    }
}

/// `P(a, x)` by its power series; converges fast for `x < a + 1`.
fn lower_series<T: Scalar>(a: T, x: T, log_prefactor: T) -> T {
    let mut ap = a;
    let mut term = T::one() / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap = ap + T::one();
        term = term * x / ap;
        sum = sum + term;
        if term.abs() < sum.abs() * T::epsilon() {
            break;
        }
    }
    sum * log_prefactor.exp()
}

/// `Q(a, x)` by the modified Lentz continued fraction for `x >= a + 1`.
fn upper_continued_fraction<T: Scalar>(a: T, x: T, log_prefactor: T) -> T {
    let tiny = T::min_positive_value() / T::epsilon();
    let one = T::one();
    let two = T::lit(2.0);
    let mut b = x + one - a;
    let mut c = one / tiny;
    let mut d = one / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let i = T::lit(i as f64);
        let an = -i * (i - a);
        b = b + two;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        let delta = d * c;
        h = h * delta;
        if (delta - one).abs() < T::epsilon() {
            break;
        }
    }
    log_prefactor.exp() * h
}

/// Upper tail of the chi-square distribution, `Q(df/2, x/2)`.
pub fn chisq_sf<T: Scalar>(x: T, df: u32) -> Result<T> {
    if !(x >= T::zero()) {
        return Err(Error::Domain {
            what: "x",
            value: x.to_f64_lossy(),
            domain: "[0, inf)",
        });
    }
    if df == 0 {
        return Err(Error::Domain {
            what: "df",
            value: 0.0,
            domain: "{1, 2, ...}",
        });
    }
    let half = T::lit(0.5);
    gamma_q(T::lit(df as f64) * half, x * half)
}
