use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bilateral_copula::estimation::{fit_with, FitOptions};
use bilateral_copula::hypothesis::{fit_pair, lr_statistic, score_statistic, wald_statistic};
use bilateral_copula::io::{load_table, FitRecord, ReportFile, TestRecord};
use bilateral_copula::sim::{self, SimSpec, SimSummary, Sizes, SweepRecord, SweepSpec, TableKind, TableRow, TABLE_SIZES};
use bilateral_copula::{chisq_sf, FrequencyTable, Hypothesis, TestMethod, WaldInformation};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "bicop", version, about = "Homogeneity tests for paired binary data under a Clayton copula")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximum-likelihood estimates under the null and/or alternative.
    Fit(FitArgs),
    /// Likelihood-ratio, score and Wald tests of equal rates.
    Test(TestArgs),
    /// Monte Carlo type I error, power, or random null sweep.
    Simulate(SimulateArgs),
    /// Reproduce a full simulation table as CSV.
    Tables(TablesArgs),
}

#[derive(Args)]
struct Output {
    /// Write machine-readable output instead of a summary.
    #[arg(long)]
    json: bool,
    /// Output file (default stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum HypothesisArg {
    Null,
    Alternative,
    Both,
}

#[derive(Args)]
struct FitArgs {
    /// Table CSV (`group,m0,m1,m2`), or builtin:example1 / builtin:example2.
    path: String,
    #[arg(long, value_enum, default_value = "both")]
    hypothesis: HypothesisArg,
    #[command(flatten)]
    out: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Lr,
    Score,
    Wald,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum WaldInfoArg {
    Restricted,
    Unrestricted,
}

#[derive(Args)]
struct TestArgs {
    /// Table CSV (`group,m0,m1,m2`), or builtin:example1 / builtin:example2.
    path: String,
    #[arg(long, value_enum, default_value = "all")]
    method: MethodArg,
    /// Fit at which the Wald statistic's information is evaluated.
    #[arg(long, value_enum, default_value = "restricted")]
    wald_info: WaldInfoArg,
    /// Level used for the reject / do-not-reject line.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimMode {
    Tie,
    Power,
    Sweep,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(value_enum)]
    mode: SimMode,
    /// JSON spec; flags given alongside override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    g: Option<usize>,
    /// Group size, or comma-separated sizes per group.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<u64>>,
    /// Rate, or comma-separated rates per group.
    #[arg(long, value_delimiter = ',')]
    pi: Option<Vec<f64>>,
    /// Clayton parameter (0 for independent pairs).
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of lr,score,wald.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<TestMethod>>,
    /// Worker threads (default: all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Number of random scenarios (sweep).
    #[arg(long)]
    scenarios: Option<usize>,
    /// Lower bound on every cell probability (sweep).
    #[arg(long)]
    floor: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableArg {
    Tie3,
    Tie6,
    Power3,
    Power6,
}

#[derive(Args)]
struct TablesArgs {
    #[arg(value_enum)]
    which: TableArg,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn format_p(p: f64) -> String {
    if p < 1e-16 {
        "< 1e-16".to_string()
    } else if p < 1e-4 {
        format!("{p:.2e}")
    } else {
        format!("{p:.4}")
    }
}

fn print_fit(w: &mut dyn Write, table: &FrequencyTable, fit: &FitRecord) -> io::Result<()> {
    let name = match fit.hypothesis {
        Hypothesis::Null => "null (common rate)",
        Hypothesis::Alternative => "alternative (one rate per group)",
    };
    writeln!(w, "{name}")?;
    if fit.hypothesis == Hypothesis::Null {
        writeln!(w, "  pi = {:.3}  rho = {:.3}", fit.pis[0], fit.rho[0])?;
    } else {
        writeln!(w, "  {:<12} {:>8} {:>8}", "group", "pi", "rho")?;
        for (i, g) in table.groups().iter().enumerate() {
            writeln!(w, "  {:<12} {:>8.3} {:>8.3}", g.label, fit.pis[i], fit.rho[i])?;
        }
    }
    writeln!(w, "  theta = {:.3}  (Kendall tau {:.3})", fit.theta, fit.kendall_tau)?;
    writeln!(w, "  log-likelihood = {:.4}", fit.loglik)?;
    if fit.boundary_warning {
        writeln!(w, "  warning: estimate on a parameter bound")?;
    }
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let (table, raw) = load_table(&args.path).with_context(|| format!("reading {}", args.path))?;
    let hyps: &[Hypothesis] = match args.hypothesis {
        HypothesisArg::Null => &[Hypothesis::Null],
        HypothesisArg::Alternative => &[Hypothesis::Alternative],
        HypothesisArg::Both => &[Hypothesis::Alternative, Hypothesis::Null],
    };
    let opts = FitOptions::default();
    let mut report = ReportFile::new(&args.path, &raw, &table);
    for &h in hyps {
        let fit = fit_with(&table, h, &opts, &[]).with_context(|| format!("fitting the {h:?} model"))?;
        report.fits.push(FitRecord::from_fit(&fit, table.g()));
    }
    let mut w = sink(&args.out.output)?;
    if args.out.json {
        writeln!(w, "{}", report.to_json()?)?;
    } else {
        for (i, f) in report.fits.iter().enumerate() {
            if i > 0 {
                writeln!(w)?;
            }
            print_fit(&mut *w, &table, f)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_test(args: &TestArgs) -> Result<()> {
    let (table, raw) = load_table(&args.path).with_context(|| format!("reading {}", args.path))?;
    if table.g() < 2 {
        bail!("{}: a homogeneity test needs at least two groups", args.path);
    }
    let methods: Vec<TestMethod> = match args.method {
        MethodArg::Lr => vec![TestMethod::Lr],
        MethodArg::Score => vec![TestMethod::Score],
        MethodArg::Wald => vec![TestMethod::Wald],
        MethodArg::All => TestMethod::ALL.to_vec(),
    };
    let wald_info = match args.wald_info {
        WaldInfoArg::Restricted => WaldInformation::Restricted,
        WaldInfoArg::Unrestricted => WaldInformation::Unrestricted,
    };
    let opts = FitOptions::default();
    let df = (table.g() - 1) as u32;
    let (h0, ha) = fit_pair(&table, &opts).context("fitting the models")?;
    let mut report = ReportFile::new(&args.path, &raw, &table);
    report.fits.push(FitRecord::from_fit(&ha, table.g()));
    report.fits.push(FitRecord::from_fit(&h0, table.g()));
    for m in methods {
        let statistic = match m {
            TestMethod::Lr => lr_statistic(&h0, &ha),
            TestMethod::Score => score_statistic(&table, &h0)?,
            TestMethod::Wald => wald_statistic(&table, &h0, &ha, wald_info)?,
        };
        report.tests.push(TestRecord {
            method: m,
            statistic,
            df,
            p_value: chisq_sf(statistic, df)?,
        });
    }

    let mut w = sink(&args.out.output)?;
    if args.out.json {
        writeln!(w, "{}", report.to_json()?)?;
    } else {
        writeln!(w, "{:<8} {:>12} {:>4} {:>10}", "test", "statistic", "df", "p-value")?;
        for t in &report.tests {
            writeln!(w, "{:<8} {:>12.3} {:>4} {:>10}", t.method.name(), t.statistic, t.df, format_p(t.p_value))?;
        }
        let rejected = report.tests.iter().filter(|t| t.p_value < args.alpha).count();
        writeln!(
            w,
            "equal rates rejected at level {} by {} of {} test(s)",
            args.alpha,
            rejected,
            report.tests.len()
        )?;
    }
    w.flush()?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn sizes_arg(m: &[u64]) -> Sizes {
    if m.len() == 1 {
        Sizes::Balanced(m[0])
    } else {
        Sizes::PerGroup(m.to_vec())
    }
}

fn sim_spec(args: &SimulateArgs) -> Result<SimSpec> {
    let mut spec = match &args.config {
        Some(p) => read_json::<SimSpec>(p)?,
        None => {
            let (Some(g), Some(m), Some(pi), Some(theta)) = (args.g, &args.m, &args.pi, args.theta) else {
                bail!("without --config, --g, --m, --pi and --theta are required");
            };
            SimSpec {
                g,
                m: sizes_arg(m),
                pis: pi.clone(),
                theta,
                reps: 10_000,
                alpha: 0.05,
                seed: 0,
                methods: TestMethod::ALL.to_vec(),
            }
        }
    };
    if let Some(g) = args.g {
        spec.g = g;
    }
    if let Some(m) = &args.m {
        spec.m = sizes_arg(m);
    }
    if let Some(pi) = &args.pi {
        spec.pis = pi.clone();
    }
    if spec.pis.len() == 1 && spec.g > 1 {
        spec.pis = vec![spec.pis[0]; spec.g];
    }
    if let Some(t) = args.theta {
        spec.theta = t;
    }
    if let Some(r) = args.reps {
        spec.reps = r;
    }
    if let Some(a) = args.alpha {
        spec.alpha = a;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(m) = &args.methods {
        spec.methods = m.clone();
    }
    spec.validate()?;
    Ok(spec)
}

fn sweep_spec(args: &SimulateArgs) -> Result<SweepSpec> {
    let mut spec = match &args.config {
        Some(p) => read_json::<SweepSpec>(p)?,
        None => {
            let (Some(g), Some(m)) = (args.g, &args.m) else {
                bail!("without --config, --g and --m are required");
            };
            SweepSpec {
                g,
                m: sizes_arg(m),
                reps: 10_000,
                n_scenarios: 1000,
                floor: 0.1,
                seed: 0,
                alpha: 0.05,
                methods: TestMethod::ALL.to_vec(),
            }
        }
    };
    if args.pi.is_some() || args.theta.is_some() {
        bail!("--pi and --theta do not apply to a sweep; scenarios are drawn at random");
    }
    if let Some(g) = args.g {
        spec.g = g;
    }
    if let Some(m) = &args.m {
        spec.m = sizes_arg(m);
    }
    if let Some(r) = args.reps {
        spec.reps = r;
    }
    if let Some(n) = args.scenarios {
        spec.n_scenarios = n;
    }
    if let Some(f) = args.floor {
        spec.floor = f;
    }
    if let Some(a) = args.alpha {
        spec.alpha = a;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(m) = &args.methods {
        spec.methods = m.clone();
    }
    spec.validate()?;
    Ok(spec)
}

fn summary_line(mode: &str, s: &SimSummary) -> serde_json::Value {
    let percent: serde_json::Map<String, serde_json::Value> =
        s.methods.iter().map(|m| (m.method.name().to_string(), json!(m.percent()))).collect();
    json!({ "record": "summary", "mode": mode, "percent": percent, "summary": s })
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sweep_aggregate(spec: &SweepSpec, records: &[SweepRecord]) -> serde_json::Value {
    let mut per_method = serde_json::Map::new();
    for &m in &spec.methods {
        let mut rates: Vec<f64> = records
            .iter()
            .filter_map(|r| r.summary.method(m))
            .map(|s| s.percent())
            .filter(|v| v.is_finite())
            .collect();
        rates.sort_by(f64::total_cmp);
        per_method.insert(
            m.name().to_string(),
            json!({
                "min": rates.first(),
                "q1": quantile(&rates, 0.25),
                "median": quantile(&rates, 0.5),
                "q3": quantile(&rates, 0.75),
                "max": rates.last(),
            }),
        );
    }
    json!({ "record": "aggregate", "mode": "sweep", "scenarios": records.len(), "percent": per_method, "spec": spec })
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let mut w = sink(&args.output)?;
    match args.mode {
        SimMode::Tie | SimMode::Power => {
            let spec = sim_spec(args)?;
            let (mode, summary) = match args.mode {
                SimMode::Tie => ("tie", sim::run_tie(&spec, args.threads)?),
                _ => ("power", sim::run_power(&spec, args.threads)?),
            };
            writeln!(w, "{}", summary_line(mode, &summary))?;
            if summary.flagged {
                eprintln!("warning: more than 1% of replicates failed for some test");
            }
        }
        SimMode::Sweep => {
            let spec = sweep_spec(args)?;
            let mut write_err = None;
            let records = sim::run_sweep_with(&spec, args.threads, |r| {
                let line = json!({ "record": "scenario", "scenario": r });
                if let Err(e) = writeln!(w, "{line}") {
                    write_err.get_or_insert(e);
                }
            })?;
            if let Some(e) = write_err {
                return Err(e.into());
            }
            writeln!(w, "{}", sweep_aggregate(&spec, &records))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn table_header(kind: TableKind) -> Vec<String> {
    let mut cols: Vec<String> = if kind.is_null() {
        vec!["theta".into(), "pi".into(), "rho".into()]
    } else {
        vec!["theta".into(), "case".into(), "max_diff".into()]
    };
    for m in TABLE_SIZES {
        for t in TestMethod::ALL {
            cols.push(format!("{}_m{m}", t.name()));
        }
    }
    cols
}

fn table_line(row: &TableRow) -> Vec<String> {
    let mut out = vec![format!("{}", row.row.theta), row.row.label.clone(), format!("{:.3}", row.row.aux)];
    for s in &row.summaries {
        for t in TestMethod::ALL {
            out.push(format!("{:.3}", s.percent(t)));
        }
    }
    out
}

fn cmd_tables(args: &TablesArgs) -> Result<()> {
    let kind = match args.which {
        TableArg::Tie3 => TableKind::Tie3,
        TableArg::Tie6 => TableKind::Tie6,
        TableArg::Power3 => TableKind::Power3,
        TableArg::Power6 => TableKind::Power6,
    };
    let mut w = sink(&args.output)?;
    writeln!(w, "{}", table_header(kind).join(","))?;
    let mut write_err = None;
    sim::run_table_with(kind, args.reps, args.alpha, args.seed, args.threads, |row| {
        if let Err(e) = writeln!(w, "{}", table_line(row).join(",")).and_then(|_| w.flush()) {
            write_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Tables(a) => cmd_tables(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
