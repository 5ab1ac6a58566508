//! Likelihood-ratio, score and Wald tests of equal rates across groups.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{fit_with, transform, FitOptions, FitResult};
use crate::fisher::{assemble_info, solve_arrowhead, InfoMatrix};
use crate::likelihood::{score_vector, Hypothesis, ModelParams};
use crate::special::chisq_sf;
use crate::table::FrequencyTable;

/// Quadratic forms below this are treated as rounding noise around zero.
const PSD_TOL: f64 = -1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestMethod {
    Lr,
    Score,
    Wald,
}

impl TestMethod {
    pub const ALL: [TestMethod; 3] = [TestMethod::Lr, TestMethod::Score, TestMethod::Wald];

    pub fn name(self) -> &'static str {
        match self {
            TestMethod::Lr => "lr",
            TestMethod::Score => "score",
            TestMethod::Wald => "wald",
        }
    }
}

impl std::fmt::Display for TestMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TestMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "lr" => Ok(TestMethod::Lr),
            "score" => Ok(TestMethod::Score),
            "wald" => Ok(TestMethod::Wald),
            other => Err(format!("unknown test method '{other}' (expected lr, score or wald)")),
        }
    }
}

/// Where the Wald statistic's information matrix is evaluated.
///
/// `Restricted` uses the null fit (pooled rate and its theta) with the
/// unrestricted estimates in the contrast; `Unrestricted` uses the
/// alternative fit throughout.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaldInformation {
    #[default]
    Restricted,
    Unrestricted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub method: TestMethod,
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    pub fit_h0: FitResult,
    /// Absent for the score test.
    pub fit_ha: Option<FitResult>,
}

impl TestReport {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

fn degrees_of_freedom(table: &FrequencyTable) -> Result<u32> {
    if table.g() < 2 {
        return Err(Error::InvalidTable("a homogeneity test needs at least two groups".into()));
    }
    Ok((table.g() - 1) as u32)
}

fn nonnegative(what: &str, v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::SingularInformation(format!("{what} statistic is {v}")));
    }
    if v < PSD_TOL {
        return Err(Error::SingularInformation(format!("{what} quadratic form is negative ({v:e})")));
    }
    Ok(v.max(0.0))
}

/// Null fit, then the alternative fit with the null optimum added as a start
/// so the alternative maximum is never below the null one.
pub fn fit_pair(table: &FrequencyTable, opts: &FitOptions) -> Result<(FitResult, FitResult)> {
    let h0 = fit_with(table, Hypothesis::Null, opts, &[])?;
    let ha = fit_alternative_from(table, &h0, opts)?;
    Ok((h0, ha))
}

fn fit_alternative_from(table: &FrequencyTable, h0: &FitResult, opts: &FitOptions) -> Result<FitResult> {
    let nested = ModelParams::alternative(h0.params_hat.expanded(table.g()), h0.params_hat.theta());
    fit_with(table, Hypothesis::Alternative, opts, &[transform(&nested)])
}

/// `2 (l_a - l_0)`, clipped at zero.
pub fn lr_statistic(h0: &FitResult, ha: &FitResult) -> f64 {
    (2.0 * (ha.loglik_hat - h0.loglik_hat)).max(0.0)
}

/// `U^T I^-1 U` at the null fit.
///
/// When the null fit stopped on a theta bound the theta component of `U` is
/// the bound's multiplier rather than a free score and is set to zero, as it
/// would be at an interior optimum.
pub fn score_statistic(table: &FrequencyTable, h0: &FitResult) -> Result<f64> {
    let params = &h0.params_hat;
    let mut u = score_vector(params, table)?;
    if h0.theta_on_bound {
        let g = table.g();
        u[g] = 0.0;
    }
    let info = assemble_info(params, table)?;
    nonnegative("score", info.inverse_quadratic_form(&u)?)
}

/// `(g-1) x (g+1)` adjacent-difference contrast `pi_i - pi_(i+1)` with a zero
/// theta column.
pub fn adjacent_contrast(g: usize) -> DMatrix<f64> {
    let rows = g.saturating_sub(1);
    let mut c = DMatrix::zeros(rows, g + 1);
    for i in 0..rows {
        c[(i, i)] = 1.0;
        c[(i, i + 1)] = -1.0;
    }
    c
}

/// `(C b)^T (C I^-1 C^T)^-1 (C b)` for any full-row-rank contrast `c`.
pub fn wald_quadratic_form(beta: &[f64], info: &InfoMatrix<f64>, c: &DMatrix<f64>) -> Result<f64> {
    let n = info.dim();
    if beta.len() != n || c.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if beta.len() != n { beta.len() } else { c.ncols() },
        });
    }
    let r = c.nrows();
    // columns of I^-1 C^T
    let mut x = DMatrix::zeros(n, r);
    for k in 0..r {
        let row: Vec<f64> = c.row(k).iter().copied().collect();
        let col = solve_arrowhead(info, &row)?;
        x.set_column(k, &DVector::from_vec(col));
    }
    let mut v = c * x;
    // symmetrise away rounding before factorising
    v = (&v + v.transpose()) * 0.5;
    let cb = c * DVector::from_column_slice(beta);
    let z = match v.clone().cholesky() {
        Some(ch) => ch.solve(&cb),
        None => v
            .lu()
            .solve(&cb)
            .ok_or_else(|| Error::SingularInformation("contrast covariance is singular".into()))?,
    };
    nonnegative("wald", cb.dot(&z))
}

/// Wald statistic from the alternative estimates with information taken at
/// `info_at`.
pub fn wald_statistic_with(
    table: &FrequencyTable,
    ha: &FitResult,
    info_at: &ModelParams<f64>,
    c: &DMatrix<f64>,
) -> Result<f64> {
    let g = table.g();
    let mut beta: Vec<f64> = ha.pis_hat(g);
    beta.push(ha.theta_hat());
    let info = assemble_info(info_at, table)?;
    wald_quadratic_form(&beta, &info, c)
}

pub fn wald_statistic(table: &FrequencyTable, h0: &FitResult, ha: &FitResult, which: WaldInformation) -> Result<f64> {
    let at = match which {
        WaldInformation::Restricted => &h0.params_hat,
        WaldInformation::Unrestricted => &ha.params_hat,
    };
    wald_statistic_with(table, ha, at, &adjacent_contrast(table.g()))
}

fn report(method: TestMethod, statistic: f64, df: u32, fit_h0: FitResult, fit_ha: Option<FitResult>) -> Result<TestReport> {
    Ok(TestReport {
        method,
        statistic,
        df,
        p_value: chisq_sf(statistic, df)?,
        fit_h0,
        fit_ha,
    })
}

pub fn lr_test(table: &FrequencyTable) -> Result<TestReport> {
    lr_test_with(table, &FitOptions::default())
}

pub fn lr_test_with(table: &FrequencyTable, opts: &FitOptions) -> Result<TestReport> {
    let df = degrees_of_freedom(table)?;
    let (h0, ha) = fit_pair(table, opts)?;
    let t = lr_statistic(&h0, &ha);
    report(TestMethod::Lr, t, df, h0, Some(ha))
}

pub fn score_test(table: &FrequencyTable) -> Result<TestReport> {
    score_test_with(table, &FitOptions::default())
}

pub fn score_test_with(table: &FrequencyTable, opts: &FitOptions) -> Result<TestReport> {
    let df = degrees_of_freedom(table)?;
    let h0 = fit_with(table, Hypothesis::Null, opts, &[])?;
    let t = score_statistic(table, &h0)?;
    report(TestMethod::Score, t, df, h0, None)
}

pub fn wald_test(table: &FrequencyTable) -> Result<TestReport> {
    wald_test_with(table, &FitOptions::default(), WaldInformation::default())
}

pub fn wald_test_with(table: &FrequencyTable, opts: &FitOptions, which: WaldInformation) -> Result<TestReport> {
    let df = degrees_of_freedom(table)?;
    let (h0, ha) = fit_pair(table, opts)?;
    let t = wald_statistic(table, &h0, &ha, which)?;
    report(TestMethod::Wald, t, df, h0, Some(ha))
}

/// Runs `methods` on one table, sharing the fits between them.
pub fn run_tests(table: &FrequencyTable, methods: &[TestMethod], opts: &FitOptions) -> Result<Vec<TestReport>> {
    let df = degrees_of_freedom(table)?;
    let h0 = fit_with(table, Hypothesis::Null, opts, &[])?;
    let needs_ha = methods.iter().any(|m| *m != TestMethod::Score);
    let ha = if needs_ha {
        Some(fit_alternative_from(table, &h0, opts)?)
    } else {
        None
    };
    methods
        .iter()
        .map(|&m| match m {
            TestMethod::Lr => {
                let ha = ha.clone().expect("alternative fit");
                report(m, lr_statistic(&h0, &ha), df, h0.clone(), Some(ha))
            }
            TestMethod::Score => report(m, score_statistic(table, &h0)?, df, h0.clone(), None),
            TestMethod::Wald => {
                let ha = ha.clone().expect("alternative fit");
                let t = wald_statistic(table, &h0, &ha, WaldInformation::default())?;
                report(m, t, df, h0.clone(), Some(ha))
            }
        })
        .collect()
}

/// Statistics only, one slot per entry of `methods`. A failed fit or a
/// singular information matrix leaves `None` in the slots that need it.
pub fn statistics(table: &FrequencyTable, methods: &[TestMethod], opts: &FitOptions) -> Vec<Option<f64>> {
    let Ok(h0) = fit_with(table, Hypothesis::Null, opts, &[]) else {
        return vec![None; methods.len()];
    };
    let ha = if methods.iter().any(|m| *m != TestMethod::Score) {
        fit_alternative_from(table, &h0, opts).ok()
    } else {
        None
    };
    methods
        .iter()
        .map(|&m| match m {
            TestMethod::Score => score_statistic(table, &h0).ok(),
            TestMethod::Lr => ha.as_ref().map(|ha| lr_statistic(&h0, ha)),
            TestMethod::Wald => ha
                .as_ref()
                .and_then(|ha| wald_statistic(table, &h0, ha, WaldInformation::default()).ok()),
        })
        .collect()
}
