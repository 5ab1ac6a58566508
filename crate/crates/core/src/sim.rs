//! Seeded Monte Carlo studies of type I error and power.
//!
//! Replicate `r` of scenario `s` draws from a ChaCha8 stream keyed by
//! `(seed, s)` with stream number `r`, so every replicate is reproducible on
//! its own and results do not depend on how work is split across threads.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{cell_probs, kendall_tau, pearson_rho, tau_to_theta, Rate, Theta};
use crate::error::{Error, Result};
use crate::estimation::FitOptions;
use crate::hypothesis::{statistics, TestMethod};
use crate::special::chisq_sf;
use crate::table::{FrequencyTable, GroupCounts};

/// Share of failed replicates above which a summary is flagged.
pub const FAILURE_FLAG_FRACTION: f64 = 0.01;

/// Consecutive rejected sweep proposals before giving up.
pub const MAX_SWEEP_PROPOSALS: usize = 100_000;

fn default_reps() -> usize {
    10_000
}

fn default_alpha() -> f64 {
    0.05
}

fn default_methods() -> Vec<TestMethod> {
    TestMethod::ALL.to_vec()
}

/// Group sizes: one size for every group or one per group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sizes {
    Balanced(u64),
    PerGroup(Vec<u64>),
}

impl Sizes {
    pub fn expand(&self, g: usize) -> Vec<u64> {
        match self {
            Sizes::Balanced(m) => vec![*m; g],
            Sizes::PerGroup(v) => v.clone(),
        }
    }

    fn validate(&self, g: usize) -> Result<()> {
        let sizes = self.expand(g);
        if sizes.len() != g {
            return Err(Error::spec("m", format!("expected {g} group sizes, got {}", sizes.len())));
        }
        if let Some(i) = sizes.iter().position(|&m| m == 0) {
            return Err(Error::spec(format!("m[{i}]"), "group size must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub g: usize,
    pub m: Sizes,
    pub pis: Vec<f64>,
    /// Clayton parameter; 0 generates independent pairs.
    pub theta: f64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<TestMethod>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::spec("alpha", format!("{alpha} is outside (0, 1)")));
    }
    Ok(())
}

fn check_common(g: usize, reps: usize, alpha: f64, methods: &[TestMethod]) -> Result<()> {
    if g < 2 {
        return Err(Error::spec("g", "at least two groups are needed"));
    }
    if reps == 0 {
        return Err(Error::spec("reps", "must be at least 1"));
    }
    check_alpha(alpha)?;
    if methods.is_empty() {
        return Err(Error::spec("methods", "no test method requested"));
    }
    Ok(())
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        check_common(self.g, self.reps, self.alpha, &self.methods)?;
        self.m.validate(self.g)?;
        if self.pis.len() != self.g {
            return Err(Error::spec("pis", format!("expected {} rates, got {}", self.g, self.pis.len())));
        }
        for (i, &p) in self.pis.iter().enumerate() {
            Rate::new(p).map_err(|_| Error::spec(format!("pis[{i}]"), format!("{p} is outside (0, 1)")))?;
        }
        Theta::from_value(self.theta).map_err(|e| Error::spec("theta", e.to_string()))?;
        Ok(())
    }

    fn theta_param(&self) -> Theta<f64> {
        Theta::from_value(self.theta).expect("validated theta")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: TestMethod,
    pub rejections: u64,
    pub failures: u64,
    pub effective_reps: u64,
    /// Rejections over effective replicates; NaN when none succeeded.
    pub rejection_rate: f64,
}

impl MethodSummary {
    pub fn percent(&self) -> f64 {
        100.0 * self.rejection_rate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub spec: SimSpec,
    pub reps: u64,
    pub methods: Vec<MethodSummary>,
    /// Some method failed on more than [`FAILURE_FLAG_FRACTION`] of replicates.
    pub flagged: bool,
}

impl SimSummary {
    pub fn method(&self, method: TestMethod) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == method)
    }

    /// Rejection rate in percent, NaN if the method was not run.
    pub fn percent(&self, method: TestMethod) -> f64 {
        self.method(method).map_or(f64::NAN, MethodSummary::percent)
    }
}

/// Generator for replicate `rep` of scenario `scenario`.
pub fn replicate_rng(seed: u64, scenario: u64, rep: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&scenario.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(rep);
    rng
}

/// Draws `m_i` subjects per group from the cell probabilities of
/// `(pi_i, theta)` and tallies them.
pub fn generate_table<R: Rng + ?Sized>(pis: &[f64], theta: Theta<f64>, sizes: &[u64], rng: &mut R) -> Result<FrequencyTable> {
    if pis.len() != sizes.len() {
        return Err(Error::DimensionMismatch {
            expected: sizes.len(),
            got: pis.len(),
        });
    }
    let mut groups = Vec::with_capacity(pis.len());
    for (i, (&p, &m)) in pis.iter().zip(sizes).enumerate() {
        let cells = cell_probs(Rate::new(p)?, theta);
        let cut0 = cells.p0;
        let cut1 = cells.p0 + cells.p1;
        let mut counts = [0u64; 3];
        for _ in 0..m {
            let u: f64 = rng.random();
            let k = if u < cut0 {
                0
            } else if u < cut1 {
                1
            } else {
                2
            };
            counts[k] += 1;
        }
        groups.push(GroupCounts::new((i + 1).to_string(), counts[0], counts[1], counts[2]));
    }
    FrequencyTable::new(groups)
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::spec("threads", e.to_string()))
}

/// Statistics of every replicate, in replicate order; `None` marks a failed
/// fit or singular information. `threads == 0` uses all available cores.
pub fn simulate_statistics(spec: &SimSpec, scenario: u64, threads: usize) -> Result<Vec<Vec<Option<f64>>>> {
    spec.validate()?;
    let theta = spec.theta_param();
    let sizes = spec.m.expand(spec.g);
    let opts = FitOptions::default();
    let run = |r: usize| -> Vec<Option<f64>> {
        let mut rng = replicate_rng(spec.seed, scenario, r as u64);
        match generate_table(&spec.pis, theta, &sizes, &mut rng) {
            Ok(table) => statistics(&table, &spec.methods, &opts),
            // a group with zero subjects cannot occur after validation
            Err(_) => vec![None; spec.methods.len()],
        }
    };
    Ok(pool(threads)?.install(|| (0..spec.reps).into_par_iter().map(run).collect()))
}

fn summarise(spec: &SimSpec, stats: &[Vec<Option<f64>>]) -> Result<SimSummary> {
    let df = (spec.g - 1) as u32;
    let mut methods = Vec::with_capacity(spec.methods.len());
    for (k, &method) in spec.methods.iter().enumerate() {
        let (mut rejections, mut failures) = (0u64, 0u64);
        for row in stats {
            match row[k] {
                Some(t) => {
                    if chisq_sf(t, df)? < spec.alpha {
                        rejections += 1;
                    }
                }
                None => failures += 1,
            }
        }
        let effective_reps = stats.len() as u64 - failures;
        methods.push(MethodSummary {
            method,
            rejections,
            failures,
            effective_reps,
            rejection_rate: if effective_reps == 0 {
                f64::NAN
            } else {
                rejections as f64 / effective_reps as f64
            },
        });
    }
    let limit = FAILURE_FLAG_FRACTION * stats.len() as f64;
    Ok(SimSummary {
        spec: spec.clone(),
        reps: stats.len() as u64,
        flagged: methods.iter().any(|m| m.failures as f64 > limit),
        methods,
    })
}

fn run_scenario(spec: &SimSpec, scenario: u64, threads: usize) -> Result<SimSummary> {
    let stats = simulate_statistics(spec, scenario, threads)?;
    summarise(spec, &stats)
}

/// Type I error study; all rates must be equal.
pub fn run_tie(spec: &SimSpec, threads: usize) -> Result<SimSummary> {
    spec.validate()?;
    if spec.pis.iter().any(|&p| p != spec.pis[0]) {
        return Err(Error::H0ViolationInSpec(spec.pis.clone()));
    }
    run_scenario(spec, 0, threads)
}

/// Power study at arbitrary rates.
pub fn run_power(spec: &SimSpec, threads: usize) -> Result<SimSummary> {
    run_scenario(spec, 0, threads)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub g: usize,
    pub m: Sizes,
    #[serde(default = "default_reps")]
    pub reps: usize,
    pub n_scenarios: usize,
    /// Every cell probability must exceed this.
    pub floor: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_methods")]
    pub methods: Vec<TestMethod>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        check_common(self.g, self.reps, self.alpha, &self.methods)?;
        self.m.validate(self.g)?;
        if !(0.0..0.25).contains(&self.floor) {
            return Err(Error::spec("floor", format!("{} is outside [0, 0.25)", self.floor)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub scenario: u64,
    pub pi: f64,
    pub tau: f64,
    pub theta: f64,
    pub cells: [f64; 3],
    pub summary: SimSummary,
}

/// Proposal ranges of the sweep.
const SWEEP_PI: (f64, f64) = (0.01, 0.99);
const SWEEP_TAU: (f64, f64) = (0.01, 0.95);

/// Draws the sweep's `(pi, theta)` scenarios: `pi` and Kendall's tau
/// uniform, kept when all three cell probabilities exceed `floor`.
pub fn sweep_scenarios(n: usize, floor: f64, seed: u64) -> Result<Vec<(f64, Theta<f64>)>> {
    draw_scenarios(n, floor, seed, MAX_SWEEP_PROPOSALS)
}

fn draw_scenarios(n: usize, floor: f64, seed: u64, max_misses: usize) -> Result<Vec<(f64, Theta<f64>)>> {
    let mut rng = replicate_rng(seed, u64::MAX, 0);
    let mut out = Vec::with_capacity(n);
    let mut misses = 0usize;
    while out.len() < n {
        let pi = rng.random_range(SWEEP_PI.0..SWEEP_PI.1);
        let tau = rng.random_range(SWEEP_TAU.0..SWEEP_TAU.1);
        let theta = tau_to_theta(tau)?;
        let c = cell_probs(Rate::new(pi)?, theta);
        if c.p0.min(c.p1).min(c.p2) > floor {
            out.push((pi, theta));
            misses = 0;
        } else {
            misses += 1;
            if misses >= max_misses {
                return Err(Error::SamplingExhausted(misses));
            }
        }
    }
    Ok(out)
}

/// Type I error study at each of `n_scenarios` random null scenarios.
/// `on_record` sees each record as soon as it is finished.
pub fn run_sweep_with<F: FnMut(&SweepRecord)>(spec: &SweepSpec, threads: usize, mut on_record: F) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let scenarios = sweep_scenarios(spec.n_scenarios, spec.floor, spec.seed)?;
    let mut records = Vec::with_capacity(scenarios.len());
    for (s, (pi, theta)) in scenarios.into_iter().enumerate() {
        let sim = SimSpec {
            g: spec.g,
            m: spec.m.clone(),
            pis: vec![pi; spec.g],
            theta: theta.value(),
            reps: spec.reps,
            alpha: spec.alpha,
            seed: spec.seed,
            methods: spec.methods.clone(),
        };
        let summary = run_scenario(&sim, s as u64, threads)?;
        let cells = cell_probs(Rate::new(pi)?, theta);
        let record = SweepRecord {
            scenario: s as u64,
            pi,
            tau: kendall_tau(theta),
            theta: theta.value(),
            cells: cells.as_array(),
            summary,
        };
        on_record(&record);
        records.push(record);
    }
    Ok(records)
}

pub fn run_sweep(spec: &SweepSpec, threads: usize) -> Result<Vec<SweepRecord>> {
    run_sweep_with(spec, threads, |_| {})
}

/// The simulation tables: null grids for three and six groups and the
/// alternative grids of the rate configurations below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Tie3,
    Tie6,
    Power3,
    Power6,
}

impl std::str::FromStr for TableKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "tie3" => Ok(TableKind::Tie3),
            "tie6" => Ok(TableKind::Tie6),
            "power3" => Ok(TableKind::Power3),
            "power6" => Ok(TableKind::Power6),
            other => Err(format!("unknown table '{other}' (expected tie3, tie6, power3 or power6)")),
        }
    }
}

pub const TABLE_THETAS: [f64; 3] = [0.0, 2.0, 8.0];
pub const TABLE_SIZES: [u64; 3] = [30, 55, 100];
pub const TIE_RATES: [f64; 4] = [0.4, 0.5, 0.6, 0.7];

/// Rate configurations of the power tables, `(label, rates)`.
pub const POWER_CASES_3: [(&str, [f64; 3]); 4] = [
    ("1", [0.4, 0.4, 0.5]),
    ("2", [0.4, 0.4, 0.53]),
    ("3", [0.5, 0.5, 0.67]),
    ("4", [0.6, 0.6, 0.8]),
];

pub const POWER_CASES_6: [(&str, [f64; 6]); 4] = [
    ("A", [0.4, 0.4, 0.45, 0.45, 0.5, 0.5]),
    ("B", [0.4, 0.4, 0.45, 0.45, 0.53, 0.53]),
    ("C", [0.5, 0.5, 0.6, 0.6, 0.67, 0.67]),
    ("D", [0.6, 0.6, 0.7, 0.7, 0.8, 0.8]),
];

impl TableKind {
    pub fn name(self) -> &'static str {
        match self {
            TableKind::Tie3 => "tie3",
            TableKind::Tie6 => "tie6",
            TableKind::Power3 => "power3",
            TableKind::Power6 => "power6",
        }
    }

    pub fn is_null(self) -> bool {
        matches!(self, TableKind::Tie3 | TableKind::Tie6)
    }

    pub fn groups(self) -> usize {
        match self {
            TableKind::Tie3 | TableKind::Power3 => 3,
            TableKind::Tie6 | TableKind::Power6 => 6,
        }
    }

    /// Rows of the table, theta-major.
    pub fn rows(self) -> Vec<GridRow> {
        let g = self.groups();
        let mut rows = Vec::new();
        for &theta in &TABLE_THETAS {
            let th = Theta::from_value(theta).expect("table theta");
            if self.is_null() {
                for &pi in &TIE_RATES {
                    rows.push(GridRow {
                        theta,
                        label: format!("{pi}"),
                        pis: vec![pi; g],
                        aux: pearson_rho(Rate::new(pi).expect("table rate"), th),
                    });
                }
            } else {
                let cases: Vec<(&str, Vec<f64>)> = if g == 3 {
                    POWER_CASES_3.iter().map(|(l, p)| (*l, p.to_vec())).collect()
                } else {
                    POWER_CASES_6.iter().map(|(l, p)| (*l, p.to_vec())).collect()
                };
                for (label, pis) in cases {
                    let hi = pis.iter().copied().fold(f64::MIN, f64::max);
                    let lo = pis.iter().copied().fold(f64::MAX, f64::min);
                    rows.push(GridRow {
                        theta,
                        label: label.to_string(),
                        pis,
                        aux: hi - lo,
                    });
                }
            }
        }
        rows
    }
}

/// One row of a simulation table. `aux` is the Pearson correlation of the
/// pair for null rows and the largest rate difference for power rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub theta: f64,
    pub label: String,
    pub pis: Vec<f64>,
    pub aux: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub row: GridRow,
    /// One summary per entry of [`TABLE_SIZES`].
    pub summaries: Vec<SimSummary>,
}

/// Scenario number of `(row, size)` within a table run.
pub fn table_scenario(row: usize, size: usize) -> u64 {
    (row * TABLE_SIZES.len() + size) as u64
}

/// The simulation behind one cell of a table.
pub fn table_cell_spec(kind: TableKind, row: &GridRow, m: u64, reps: usize, alpha: f64, seed: u64) -> SimSpec {
    SimSpec {
        g: kind.groups(),
        m: Sizes::Balanced(m),
        pis: row.pis.clone(),
        theta: row.theta,
        reps,
        alpha,
        seed,
        methods: default_methods(),
    }
}

/// Runs every cell of `kind`; `on_row` sees each row when it is finished.
pub fn run_table_with<F: FnMut(&TableRow)>(
    kind: TableKind,
    reps: usize,
    alpha: f64,
    seed: u64,
    threads: usize,
    mut on_row: F,
) -> Result<Vec<TableRow>> {
    let mut out = Vec::new();
    for (i, row) in kind.rows().into_iter().enumerate() {
        let mut summaries = Vec::with_capacity(TABLE_SIZES.len());
        for (j, &m) in TABLE_SIZES.iter().enumerate() {
            let spec = table_cell_spec(kind, &row, m, reps, alpha, seed);
            summaries.push(run_scenario(&spec, table_scenario(i, j), threads)?);
        }
        let r = TableRow { row, summaries };
        on_row(&r);
        out.push(r);
    }
    Ok(out)
}

pub fn run_table(kind: TableKind, reps: usize, alpha: f64, seed: u64, threads: usize) -> Result<Vec<TableRow>> {
    run_table_with(kind, reps, alpha, seed, threads, |_| {})
}

/// Two-sided Kolmogorov-Smirnov statistic of `sample` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Asymptotic p-value of the KS statistic `d` from `n` observations.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(pis: Vec<f64>, theta: f64, reps: usize) -> SimSpec {
        SimSpec {
            g: pis.len(),
            m: Sizes::Balanced(30),
            pis,
            theta,
            reps,
            alpha: 0.05,
            seed: 11,
            methods: default_methods(),
        }
    }

    #[test]
    fn large_sample_frequencies() {
        let mut rng = replicate_rng(3, 0, 0);
        let t = generate_table(&[0.4], Theta::Independence, &[1_000_000], &mut rng).unwrap();
        let g = t.group(0);
        let m = 1e6;
        assert!((g.m0 as f64 / m - 0.36).abs() < 2e-3);
        assert!((g.m1 as f64 / m - 0.48).abs() < 2e-3);
        assert!((g.m2 as f64 / m - 0.16).abs() < 2e-3);

        let t = generate_table(&[0.5], Theta::clayton(2.0).unwrap(), &[1_000_000], &mut rng).unwrap();
        assert!((t.group(0).m0 as f64 / m - 0.377964).abs() < 2e-3);
    }

    #[test]
    fn same_stream_same_table() {
        let th = Theta::clayton(2.0).unwrap();
        let a = generate_table(&[0.3, 0.6], th, &[40, 40], &mut replicate_rng(5, 2, 9)).unwrap();
        let b = generate_table(&[0.3, 0.6], th, &[40, 40], &mut replicate_rng(5, 2, 9)).unwrap();
        assert_eq!(a, b);
        let c = generate_table(&[0.3, 0.6], th, &[40, 40], &mut replicate_rng(5, 2, 10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_replicate_rates_are_zero_or_one() {
        let s = run_tie(&spec(vec![0.5; 3], 2.0, 1), 1).unwrap();
        for m in &s.methods {
            assert!(m.rejection_rate == 0.0 || m.rejection_rate == 1.0 || m.effective_reps == 0);
        }
    }

    #[test]
    fn unequal_rates_are_not_a_null_scenario() {
        let s = spec(vec![0.4, 0.5], 2.0, 10);
        assert!(matches!(run_tie(&s, 1), Err(Error::H0ViolationInSpec(_))));
    }

    #[test]
    fn power_with_equal_rates_matches_tie() {
        let s = spec(vec![0.5; 3], 8.0, 40);
        assert_eq!(run_tie(&s, 1).unwrap(), run_power(&s, 1).unwrap());
    }

    #[test]
    fn validation_names_fields() {
        let mut s = spec(vec![0.5; 3], 2.0, 10);
        s.alpha = 1.5;
        assert!(matches!(s.validate(), Err(Error::InvalidSpec { ref field, .. }) if field == "alpha"));
        let mut s = spec(vec![0.5; 3], 2.0, 10);
        s.pis[1] = 1.2;
        assert!(matches!(s.validate(), Err(Error::InvalidSpec { ref field, .. }) if field == "pis[1]"));
        let mut s = spec(vec![0.5; 3], 2.0, 10);
        s.m = Sizes::PerGroup(vec![10, 20]);
        assert!(matches!(s.validate(), Err(Error::InvalidSpec { ref field, .. }) if field == "m"));
    }

    #[test]
    fn sizes_parse_as_number_or_list() {
        let s: SimSpec = serde_json::from_str(r#"{"g":2,"m":[10,20],"pis":[0.4,0.4],"theta":0}"#).unwrap();
        assert_eq!(s.m.expand(2), vec![10, 20]);
        assert_eq!(s.reps, 10_000);
        let s: SimSpec = serde_json::from_str(r#"{"g":2,"m":7,"pis":[0.4,0.4],"theta":1}"#).unwrap();
        assert_eq!(s.m.expand(2), vec![7, 7]);
        assert!(serde_json::from_str::<SimSpec>(r#"{"g":2,"m":7,"pis":[0.4,0.4],"theta":1,"x":1}"#).is_err());
    }

    #[test]
    fn sweep_floor() {
        // pi = 0.05 can never pass a 0.1 floor because p2 <= pi
        let c = cell_probs(Rate::new(0.05).unwrap(), Theta::clayton(50.0).unwrap());
        assert!(c.p2 <= 0.05 + 1e-15);
        for (pi, theta) in sweep_scenarios(200, 0.1, 4).unwrap() {
            let c = cell_probs(Rate::new(pi).unwrap(), theta);
            assert!(c.p0 > 0.1 && c.p1 > 0.1 && c.p2 > 0.1);
            assert!(pi > 0.1);
        }
        assert_eq!(sweep_scenarios(50, 0.0, 4).unwrap().len(), 50);
    }

    #[test]
    fn sweep_exhaustion() {
        // no cell configuration has all three probabilities above 1/3
        assert!(matches!(draw_scenarios(1, 0.34, 1, 1000), Err(Error::SamplingExhausted(1000))));
    }

    #[test]
    fn table_grids() {
        assert_eq!(TableKind::Tie3.rows().len(), 12);
        let rows = TableKind::Tie6.rows();
        assert!((rows[5].aux - 0.512).abs() < 1e-3, "{}", rows[5].aux);
        assert_eq!(rows[0].aux, 0.0);
        let rows = TableKind::Power3.rows();
        assert!((rows[1].aux - 0.13).abs() < 1e-12);
        assert_eq!(TableKind::Power6.rows()[11].pis.len(), 6);
        assert_eq!("power6".parse::<TableKind>().unwrap(), TableKind::Power6);
    }

    #[test]
    fn ks_against_uniform() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_statistic(&xs, |x| x);
        assert!((d - 0.0005).abs() < 1e-12);
        assert!(ks_p_value(d, xs.len()) > 0.99);
        let skewed: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!(ks_p_value(ks_statistic(&skewed, |x| x), 1000) < 1e-6);
        // the asymptotic 1% critical value is about 1.628 / sqrt(n)
        assert!((ks_p_value(1.6276 / (1e4f64).sqrt(), 10_000) - 0.01).abs() < 1e-3);
    }
}
