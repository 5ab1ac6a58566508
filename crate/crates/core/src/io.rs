//! Table CSV files, JSON reports and the bundled example datasets.
//!
//! A table file has the header `group,m0,m1,m2` and one row per group; lines
//! starting with `#` are comments.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::copula::{kendall_tau, pearson_rho};
use crate::error::{Error, Result};
use crate::estimation::FitResult;
use crate::hypothesis::{TestMethod, TestReport};
use crate::likelihood::Hypothesis;
use crate::table::{FrequencyTable, GroupCounts};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXAMPLE1_CSV: &str = include_str!("../../../data/example1.csv");
pub const EXAMPLE2_CSV: &str = include_str!("../../../data/example2.csv");

const HEADER: [&str; 4] = ["group", "m0", "m1", "m2"];

/// Bundled dataset by name (`example1` or `example2`, `.csv` optional).
pub fn bundled(name: &str) -> Option<&'static str> {
    match name.trim_end_matches(".csv") {
        "example1" => Some(EXAMPLE1_CSV),
        "example2" => Some(EXAMPLE2_CSV),
        _ => None,
    }
}

fn parse_err(line: u64, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

/// Parses a table file; errors carry the 1-based line number.
pub fn read_table<R: Read>(reader: R) -> Result<FrequencyTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut header_seen = false;
    let mut seen = HashSet::new();
    let mut groups = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if !header_seen {
            let got: Vec<&str> = rec.iter().collect();
            if got != HEADER {
                return Err(parse_err(line, format!("expected header `group,m0,m1,m2`, found `{}`", got.join(","))));
            }
            header_seen = true;
            continue;
        }
        let row: Vec<&str> = rec.iter().collect();
        if row.len() != 4 {
            return Err(parse_err(line, format!("expected 4 fields, found {} in `{}`", row.len(), row.join(","))));
        }
        let label = row[0];
        if label.is_empty() {
            return Err(parse_err(line, "empty group label"));
        }
        if !seen.insert(label.to_string()) {
            return Err(parse_err(line, format!("duplicate group label `{label}`")));
        }
        let mut counts = [0u64; 3];
        for (k, field) in row[1..].iter().enumerate() {
            counts[k] = field
                .parse()
                .map_err(|_| parse_err(line, format!("{} = `{field}` is not a nonnegative integer", HEADER[k + 1])))?;
        }
        if counts.iter().sum::<u64>() == 0 {
            return Err(parse_err(line, format!("group `{label}` has no subjects")));
        }
        groups.push(GroupCounts::new(label, counts[0], counts[1], counts[2]));
    }
    if !header_seen {
        return Err(parse_err(0, "missing header `group,m0,m1,m2`"));
    }
    FrequencyTable::new(groups)
}

pub fn read_table_str(text: &str) -> Result<FrequencyTable> {
    read_table(text.as_bytes())
}

pub fn write_table<W: Write>(table: &FrequencyTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(HEADER).map_err(io)?;
    for g in table.groups() {
        w.write_record([g.label.clone(), g.m0.to_string(), g.m1.to_string(), g.m2.to_string()])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Hex SHA-256 of `bytes`.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    pub source: String,
    pub sha256: String,
    pub groups: Vec<GroupCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub hypothesis: Hypothesis,
    /// One rate per group (repeated under the null).
    pub pis: Vec<f64>,
    pub theta: f64,
    pub kendall_tau: f64,
    /// Pearson correlation of the pair in each group.
    pub rho: Vec<f64>,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    pub boundary_warning: bool,
}

impl FitRecord {
    pub fn from_fit(fit: &FitResult, g: usize) -> Self {
        let params = &fit.params_hat;
        let theta = params.theta();
        let rates = params.expanded(g);
        Self {
            hypothesis: fit.hypothesis(),
            pis: rates.iter().map(|r| r.value()).collect(),
            theta: theta.value(),
            kendall_tau: kendall_tau(theta),
            rho: rates.iter().map(|&r| pearson_rho(r, theta)).collect(),
            loglik: fit.loglik_hat,
            converged: fit.converged,
            iterations: fit.iterations,
            grad_norm: fit.grad_norm,
            boundary_warning: fit.boundary_warning,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub method: TestMethod,
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
}

impl From<&TestReport> for TestRecord {
    fn from(r: &TestReport) -> Self {
        Self {
            method: r.method,
            statistic: r.statistic,
            df: r.df,
            p_value: r.p_value,
        }
    }
}

/// Machine-readable result of `fit` and `test`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub tool_version: String,
    pub input: InputInfo,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fits: Vec<FitRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tests: Vec<TestRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ReportFile {
    pub fn new(source: impl Into<String>, raw: &[u8], table: &FrequencyTable) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            input: InputInfo {
                source: source.into(),
                sha256: digest(raw),
                groups: table.groups().to_vec(),
            },
            fits: Vec::new(),
            tests: Vec::new(),
            seed: None,
        }
    }

    pub fn fit(&self, hypothesis: Hypothesis) -> Option<&FitRecord> {
        self.fits.iter().find(|f| f.hypothesis == hypothesis)
    }

    pub fn test(&self, method: TestMethod) -> Option<&TestRecord> {
        self.tests.iter().find(|t| t.method == method)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Reads a table from `path`, or a bundled dataset for `builtin:<name>`.
/// Returns the table together with the raw bytes it came from.
pub fn load_table(path: &str) -> Result<(FrequencyTable, Vec<u8>)> {
    let raw = match path.strip_prefix("builtin:") {
        Some(name) => bundled(name)
            .ok_or_else(|| Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, format!("no bundled dataset `{name}`"))))?
            .as_bytes()
            .to_vec(),
        None => std::fs::read(Path::new(path))?,
    };
    let table = read_table(raw.as_slice())?;
    Ok((table, raw))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_tables() {
        let t = read_table_str(EXAMPLE1_CSV).unwrap();
        assert_eq!(t.g(), 7);
        assert_eq!(t.total(), 2819);
        assert_eq!(t.column_totals(), [2613, 165, 41]);
        assert_eq!(t.group(6).label, "80+");
        let t = read_table_str(EXAMPLE2_CSV).unwrap();
        assert_eq!(t.sizes(), vec![18, 10]);
        assert!(bundled("example2.csv").is_some() && bundled("x").is_none());
    }

    #[test]
    fn short_row_names_its_line() {
        let err = read_table_str("group,m0,m1,m2\nA,1,2\n").unwrap_err();
        match err {
            Error::Parse { line, reason } => {
                assert_eq!(line, 2);
                assert!(reason.contains("A,1,2"), "{reason}");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(read_table_str("a,b,c,d\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read_table_str("# only a comment\n"), Err(Error::Parse { .. })));
        assert!(matches!(
            read_table_str("group,m0,m1,m2\nA,1,2,3\nA,3,2,1\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(read_table_str("group,m0,m1,m2\nA,1,-2,3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(read_table_str("group,m0,m1,m2\nA,0,0,0\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn csv_round_trip() {
        let t = read_table_str(EXAMPLE1_CSV).unwrap();
        let mut buf = Vec::new();
        write_table(&t, &mut buf).unwrap();
        assert_eq!(read_table(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn digest_is_sha256() {
        assert_eq!(digest(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
