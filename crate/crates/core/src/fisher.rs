//! Expected Fisher information of `(pi_1, ..., pi_g, theta)`.
//!
//! The matrix is an arrowhead: the rate block is diagonal because groups are
//! independent and each rate enters only its own group, while theta couples to
//! every group through the last row and column.

use crate::copula::cell_jet;
use crate::error::{Error, Result};
use crate::likelihood::ModelParams;
use crate::scalar::Scalar;
use crate::table::FrequencyTable;

/// Theta entries are evaluated at no less than this.
pub const THETA_INFO_MIN: f64 = 1e-6;

/// Below this theta the closed forms cancel badly in double precision and the
/// per-cell form `m sum_k dp_k dp_k / p_k` is used instead.
const CLOSED_FORM_MIN_THETA: f64 = 0.1;

/// Minimum Schur-complement magnitude accepted by [`solve_arrowhead`].
pub const SCHUR_TOL: f64 = 1e-12;

/// Symmetric `(g+1) x (g+1)` arrowhead matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoMatrix<T> {
    diag: Vec<T>,
    margin: Vec<T>,
    corner: T,
    theta_clamped: bool,
}

impl<T: Scalar> InfoMatrix<T> {
    /// `diag` holds `I_11..I_gg`, `margin` holds `I_1(g+1)..I_g(g+1)` and
    /// `corner` is `I_(g+1)(g+1)`.
    pub fn from_parts(diag: Vec<T>, margin: Vec<T>, corner: T) -> Result<Self> {
        if diag.len() != margin.len() {
            return Err(Error::DimensionMismatch {
                expected: diag.len(),
                got: margin.len(),
            });
        }
        Ok(Self {
            diag,
            margin,
            corner,
            theta_clamped: false,
        })
    }

    /// Matrix dimension `g + 1`.
    pub fn dim(&self) -> usize {
        self.diag.len() + 1
    }

    pub fn diag(&self) -> &[T] {
        &self.diag
    }

    pub fn margin(&self) -> &[T] {
        &self.margin
    }

    pub fn corner(&self) -> T {
        self.corner
    }

    /// Set when theta was raised to [`THETA_INFO_MIN`] for evaluation.
    pub fn theta_clamped(&self) -> bool {
        self.theta_clamped
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        let g = self.diag.len();
        match (row, col) {
            (r, c) if r == g && c == g => self.corner,
            (r, c) if r == g => self.margin[c],
            (r, c) if c == g => self.margin[r],
            (r, c) if r == c => self.diag[r],
            _ => T::zero(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let n = self.dim();
        (0..n).map(|r| (0..n).map(|c| self.get(r, c)).collect()).collect()
    }

    /// `v^T I^-1 v`.
    pub fn inverse_quadratic_form(&self, v: &[T]) -> Result<T> {
        let x = solve_arrowhead(self, v)?;
        Ok(v.iter().zip(&x).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
    }
}

fn singular<T: Scalar>(what: &str, value: T) -> Error {
    Error::SingularInformation(format!("{what} = {:e}", value.to_f64_lossy()))
}

fn floor<T: Scalar>() -> T {
    T::lit(1e-300).max(T::min_positive_value())
}

fn check_den<T: Scalar>(what: &str, v: T) -> Result<T> {
    if v.abs() < floor::<T>() || !v.is_finite() {
        Err(singular(what, v))
    } else {
        Ok(v)
    }
}

/// Per-group `(I_ii, I_i(g+1), contribution to I_(g+1)(g+1))` for a group of
/// `m` subjects.
struct GroupInfo<T> {
    pi_pi: T,
    pi_theta: T,
    theta_theta: T,
}

/// Closed forms `A_i / B_i`, `E_i / F_i`, `C_i / D_i`, evaluated through logs
/// of the theta-th powers.
fn closed_form<T: Scalar>(pi: T, theta: T, m: T) -> Result<GroupInfo<T>> {
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let q = one - pi;
    let x = theta * (-pi).ln_1p();
    // (1 - pi)^theta and 2 - (1 - pi)^theta
    let q_t = x.exp();
    let em = x.exp_m1();
    let ln_h = (-em).ln_1p();
    let q_2t = q_t * q_t;
    let qt_minus_2 = q_t - two;

    // (2 - (1-pi)^theta)^(1/theta) and its square
    let w1 = (ln_h / theta).exp();
    let w2 = w1 * w1;
    let a = m
        * (T::lit(4.0) + (T::lit(8.0) + two * q_2t) * w2 + (T::lit(8.0) * q_t - two * (q_2t * q + T::lit(6.0))) * w1
            - T::lit(8.0) * w2 * q_t);
    let b = (w1 - one) * qt_minus_2 * qt_minus_2 * (pi - one) * (pi - two * pi * w1 + w1 - one);

    // r = (2 - (1-pi)^theta) / (1-pi)^theta, r^(1/theta) = 1 / C
    let ln_r = ln_h - x;
    let r1 = (ln_r / theta).exp();
    let r2 = r1 * r1;
    let lt = two * ln_r + two * x - ln_r * q_t;
    let bracket = three * pi * r1 - two * r1 - three * pi * r2 + r2 + two * pi * pi * r2 + one;
    let c = -m * lt * lt * (three * pi * r1 - r1 - two * pi * pi * r1 + one);
    let th2 = theta * theta;
    let d = th2 * th2 * qt_minus_2 * qt_minus_2 * bracket;
    let e = -two * m * lt * (pi * r1 - r1 + pi * r1 * q_t - pi * pi * r1 * q_t + one);
    let f = th2 * qt_minus_2 * qt_minus_2 * (pi - one) * bracket;

    Ok(GroupInfo {
        pi_pi: a / check_den("B_i", b)?,
        pi_theta: e / check_den("F_i", f)?,
        theta_theta: c / check_den("D_i", d)?,
    })
}

/// `m sum_k (dp_k/da)(dp_k/db) / p_k`, the same expectation written cell by cell.
fn per_cell<T: Scalar>(pi: T, theta: T, m: T) -> Result<GroupInfo<T>> {
    let jet = cell_jet(pi, theta);
    let mut out = GroupInfo {
        pi_pi: T::zero(),
        pi_theta: T::zero(),
        theta_theta: T::zero(),
    };
    for k in 0..3 {
        let p = check_den("cell probability", jet.probs[k])?;
        out.pi_pi = out.pi_pi + m * jet.d_pi[k] * jet.d_pi[k] / p;
        out.pi_theta = out.pi_theta + m * jet.d_pi[k] * jet.d_theta[k] / p;
        out.theta_theta = out.theta_theta + m * jet.d_theta[k] * jet.d_theta[k] / p;
    }
    Ok(out)
}

fn group_info<T: Scalar>(pi: T, theta: T, m: T) -> Result<GroupInfo<T>> {
    if theta >= T::lit(CLOSED_FORM_MIN_THETA) {
        closed_form(pi, theta, m)
    } else {
        per_cell(pi, theta, m)
    }
}

fn clamped_theta<T: Scalar>(params: &ModelParams<T>) -> (T, bool) {
    let t = params.theta().value();
    let min = T::lit(THETA_INFO_MIN);
    if t < min {
        (min, true)
    } else {
        (t, false)
    }
}

fn group_size<T: Scalar>(table: &FrequencyTable, i: usize) -> Result<T> {
    if i >= table.g() {
        return Err(Error::DimensionMismatch {
            expected: table.g(),
            got: i + 1,
        });
    }
    Ok(T::lit(table.group(i).total() as f64))
}

/// `I_ii = E(-d^2 l / d pi_i^2) = A_i / B_i`.
pub fn info_pi_pi<T: Scalar>(i: usize, params: &ModelParams<T>, table: &FrequencyTable) -> Result<T> {
    params.check(table)?;
    let m = group_size(table, i)?;
    let pi = params.rate(i).value();
    let theta = params.theta().value();
    Ok(group_info(pi, theta, m)?.pi_pi)
}

/// `I_i(g+1) = E(-d^2 l / d pi_i d theta) = E_i / F_i`.
pub fn info_pi_theta<T: Scalar>(i: usize, params: &ModelParams<T>, table: &FrequencyTable) -> Result<T> {
    params.check(table)?;
    let m = group_size(table, i)?;
    let (theta, _) = clamped_theta(params);
    Ok(group_info(params.rate(i).value(), theta, m)?.pi_theta)
}

/// `I_(g+1)(g+1) = sum_i C_i / D_i`.
pub fn info_theta_theta<T: Scalar>(params: &ModelParams<T>, table: &FrequencyTable) -> Result<T> {
    params.check(table)?;
    let (theta, _) = clamped_theta(params);
    let mut total = T::zero();
    for i in 0..table.g() {
        total = total + group_info(params.rate(i).value(), theta, group_size(table, i)?)?.theta_theta;
    }
    Ok(total)
}

/// Full arrowhead information at `params` with the table's group sizes.
pub fn assemble_info<T: Scalar>(params: &ModelParams<T>, table: &FrequencyTable) -> Result<InfoMatrix<T>> {
    params.check(table)?;
    let (theta_c, clamped) = clamped_theta(params);
    let theta = params.theta().value();
    let g = table.g();
    let mut diag = Vec::with_capacity(g);
    let mut margin = Vec::with_capacity(g);
    let mut corner = T::zero();
    for i in 0..g {
        let pi = params.rate(i).value();
        let m = group_size(table, i)?;
        let at_clamped = group_info(pi, theta_c, m)?;
        let pi_pi = if clamped {
            group_info(pi, theta, m)?.pi_pi
        } else {
            at_clamped.pi_pi
        };
        diag.push(pi_pi);
        margin.push(at_clamped.pi_theta);
        corner = corner + at_clamped.theta_theta;
    }
    Ok(InfoMatrix {
        diag,
        margin,
        corner,
        theta_clamped: clamped,
    })
}

/// `info^-1 rhs` by eliminating the diagonal block and solving the scalar
/// Schur complement on the theta entry.
pub fn solve_arrowhead<T: Scalar>(info: &InfoMatrix<T>, rhs: &[T]) -> Result<Vec<T>> {
    let g = info.diag.len();
    if rhs.len() != g + 1 {
        return Err(Error::DimensionMismatch {
            expected: g + 1,
            got: rhs.len(),
        });
    }
    let mut schur = info.corner;
    let mut reduced = rhs[g];
    for i in 0..g {
        let d = info.diag[i];
        if d.abs() < floor::<T>() || !d.is_finite() {
            return Err(singular("diagonal entry", d));
        }
        schur = schur - info.margin[i] * info.margin[i] / d;
        reduced = reduced - info.margin[i] * rhs[i] / d;
    }
    if !(schur.abs() >= T::lit(SCHUR_TOL)) {
        return Err(singular("Schur complement", schur));
    }
    let y = reduced / schur;
    let mut x: Vec<T> = (0..g).map(|i| (rhs[i] - info.margin[i] * y) / info.diag[i]).collect();
    x.push(y);
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::{Rate, Theta};
    use approx::assert_relative_eq;

    fn params(pis: &[f64], theta: Theta<f64>) -> ModelParams<f64> {
        ModelParams::alternative(pis.iter().map(|&p| Rate::new(p).unwrap()).collect(), theta)
    }

    #[test]
    fn closed_form_agrees_with_per_cell_form() {
        for &pi in &[0.01, 0.1, 0.4, 0.75, 0.99] {
            for &theta in &[0.1, 0.5, 3.0, 25.0, 120.0] {
                let a = closed_form(pi, theta, 100.0).unwrap();
                let b = per_cell(pi, theta, 100.0).unwrap();
                assert_relative_eq!(a.pi_pi, b.pi_pi, max_relative = 1e-9);
                assert_relative_eq!(a.pi_theta, b.pi_theta, max_relative = 1e-8);
                assert_relative_eq!(a.theta_theta, b.theta_theta, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn doubling_counts_doubles_entries() {
        let t1 = FrequencyTable::from_counts(&[[50, 30, 20]]).unwrap();
        let t2 = t1.scaled(2).unwrap();
        let p = params(&[0.5], Theta::clayton(2.0).unwrap());
        assert_relative_eq!(
            info_pi_pi(0, &p, &t2).unwrap(),
            2.0 * info_pi_pi(0, &p, &t1).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn independence_limit_is_binomial_information() {
        let t = FrequencyTable::from_counts(&[[30, 15, 5]]).unwrap();
        let p = params(&[0.4], Theta::clayton(1e-8).unwrap());
        let v = info_pi_pi(0, &p, &t).unwrap();
        assert_relative_eq!(v, 2.0 * 50.0 / (0.4 * 0.6), max_relative = 1e-6);
        assert!((v - 416.67).abs() < 0.01);
    }

    #[test]
    fn identity_like_solve() {
        let m = InfoMatrix::from_parts(vec![2.0; 3], vec![0.0; 3], 2.0).unwrap();
        assert_eq!(solve_arrowhead(&m, &[1.0; 4]).unwrap(), vec![0.5; 4]);
    }

    #[test]
    fn singular_arrowhead_is_reported() {
        let m = InfoMatrix::from_parts(vec![1.0, 1.0], vec![1.0, 1.0], 2.0).unwrap();
        assert!(matches!(
            solve_arrowhead(&m, &[1.0, 2.0, 3.0]),
            Err(Error::SingularInformation(_))
        ));
    }

    #[test]
    fn independence_flag_is_clamped() {
        let t = FrequencyTable::from_counts(&[[30, 15, 5], [20, 20, 10]]).unwrap();
        let info = assemble_info(&params(&[0.3, 0.4], Theta::Independence), &t).unwrap();
        assert!(info.theta_clamped());
        assert!(info.corner() > 0.0);
        let info = assemble_info(&params(&[0.3, 0.4], Theta::clayton(1.0).unwrap()), &t).unwrap();
        assert!(!info.theta_clamped());
    }

    #[test]
    fn single_precision_entries() {
        let t = FrequencyTable::from_counts(&[[40, 20, 40]]).unwrap();
        let p32 = ModelParams::alternative(vec![Rate::new(0.5f32).unwrap()], Theta::clayton(2.0f32).unwrap());
        let p64 = params(&[0.5], Theta::clayton(2.0).unwrap());
        let a = info_pi_pi(0, &p32, &t).unwrap() as f64;
        let b = info_pi_pi(0, &p64, &t).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-4);
    }
}
