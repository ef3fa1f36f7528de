use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flrw_wave::harness::{
    dichotomy_sweep, exponent_table, export_csv, run_linear_decay, run_semilinear_decay, verify_multipliers,
    write_report_json, Config, Report, ReportKind,
};
use flrw_wave::{Error, Result};

#[derive(Parser)]
#[command(version, about = "Decay rates and critical exponents of damped waves with decaying speed")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON configuration with sections model, grid, run, report
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for report.json and the CSV
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Print critical exponents and thresholds
    Exponents {
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        ell: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Linear decay run and comparison with the linear estimates
    LinearDecay,
    /// Semilinear run and comparison with the nonlinear estimates
    Semilinear,
    /// Growth/decay classification over run.p_list
    Sweep,
    /// Multipliers against the per-mode ODE oracle
    VerifyMultipliers,
}

fn load(global: &Global) -> Result<Config> {
    match &global.config {
        Some(path) => Config::load(path),
        None => Err(Error::Config("--config is required for this command".into())),
    }
}

fn exponents(global: &Global, n: Option<u32>, ell: Option<f64>, beta: Option<f64>) -> Result<()> {
    let model = match &global.config {
        Some(path) => Some(Config::load(path)?.model),
        None => None,
    };
    let pick = |flag: Option<f64>, from: Option<f64>, name: &str| {
        flag.or(from).ok_or_else(|| Error::Config(format!("--{name} or a config file is required")))
    };
    let n = n.or(model.map(|m| m.n)).ok_or_else(|| Error::Config("--n or a config file is required".into()))?;
    let ell = pick(ell, model.map(|m| m.ell), "ell")?;
    let beta = pick(beta, model.map(|m| m.beta), "beta")?;
    let rows = exponent_table(n, ell, beta)?;
    let mut csv = String::from("name,value\n");
    println!("n = {n}, ℓ = {ell}, β = {beta}");
    for r in &rows {
        let shown = r.value.map(|v| format!("{v:.16e}")).unwrap_or_default();
        println!("  {:<26} {}", r.name, if shown.is_empty() { "undefined" } else { &shown });
        csv.push_str(&format!("{},{shown}\n", r.name));
    }
    if let Some(dir) = &global.out {
        create_dir(dir)?;
        let path = dir.join("exponents.csv");
        fs::write(&path, csv).map_err(|source| Error::Io { path, source })?;
    }
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.into(), source })
}

fn summarize(report: &Report) {
    println!("{:?}: {}", report.kind, if report.passed { "pass" } else { "FAIL" });
    if let Some(status) = report.status {
        println!("  status {}", status.as_str());
    }
    for c in &report.comparisons {
        let variant = c.variant.map(|v| format!(" [{}]", v.as_str())).unwrap_or_default();
        println!(
            "  {:<10} {:<6}{variant} measured {:+.4} predicted {:+.4} ± {} {}",
            c.case_tag.as_str(),
            c.norm,
            c.measured,
            c.predicted,
            c.tolerance,
            if c.passed { "ok" } else { "off" }
        );
    }
    if let Some(a) = &report.slack_audit {
        println!("  {}", a.statement);
    }
    for r in &report.sweep {
        let e = r.l2_exponent.map(|e| format!("{e:+.4}")).unwrap_or_else(|| "-".into());
        println!("  p = {:<5} {:<16} L² exponent {e:<8} {}", r.p, r.status.as_str(), r.class.as_str());
    }
    if let Some(b) = &report.bracket {
        println!("  bracket [{}, {}], contains p_c: {}", b.last_growth, b.first_decay, b.contains_critical);
    }
    for n in &report.notes {
        println!("  note: {n}");
    }
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(k) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size the thread pool: {e}")))?;
    }
    let seed = cli.global.seed;
    let report = match &cli.command {
        Command::Exponents { n, ell, beta } => {
            exponents(&cli.global, *n, *ell, *beta)?;
            return Ok(true);
        }
        Command::LinearDecay => run_linear_decay(&load(&cli.global)?, seed)?,
        Command::Semilinear => run_semilinear_decay(&load(&cli.global)?, seed)?,
        Command::Sweep => dichotomy_sweep(&load(&cli.global)?, seed)?,
        Command::VerifyMultipliers => verify_multipliers(&load(&cli.global)?, seed)?,
    };
    summarize(&report);
    if let Some(dir) = &cli.global.out {
        create_dir(dir)?;
        write_report_json(&report, &dir.join("report.json"))?;
        let csv = match report.kind {
            ReportKind::LinearDecay | ReportKind::SemilinearDecay => "decay.csv",
            ReportKind::DichotomySweep => "sweep.csv",
            ReportKind::VerifyMultipliers => "multipliers.csv",
        };
        export_csv(&report, &dir.join(csv))?;
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    // Usage errors exit with 1, not clap's default 2, which is reserved for
    // runs that complete with failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
