use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use kkweyl_core::catalog::{builtin, builtin_names, parse_metric_file};
use kkweyl_core::field::Signature;
use kkweyl_core::kaluza_klein::DEFAULT_CLASS_TOL;
use kkweyl_core::report::Report;
use kkweyl_core::sampling::{parse_grid, parse_point_list, PointSpec};
use kkweyl_core::suite::{self, RunConfig, DEFAULT_POINTS, DEFAULT_RESIDUAL_TOL, DEFAULT_SEED};
use kkweyl_core::Error;

/// Environment variable naming a report directory, used when `--out` is not given.
const OUT_DIR_VAR: &str = "KKWEYL_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "kkweyl",
    version,
    about = "Verify Kaluza-Klein Weyl-tensor identities on concrete geometries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List built-in geometries.
    List {
        #[arg(long, value_enum, default_value_t = ListFormat::Text)]
        format: ListFormat,
    },
    /// Run the identity suite for a geometry.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        format: ReportFormat,
    },
    /// Tabulate Pontryagin densities and point classes.
    Scan {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = ScanFormat::Csv)]
        format: ScanFormat,
    },
    /// Parse a metric file without evaluating it.
    CheckFile {
        /// Metric file to check.
        path: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Built-in name or path to a metric file.
    geometry: String,
    /// Parameter override, `name=value`; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Number of seeded random points.
    #[arg(long, conflicts_with_all = ["grid", "at"])]
    points: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Points per axis, e.g. `10` or `10,3`.
    #[arg(long, conflicts_with = "at")]
    grid: Option<String>,
    /// Explicit points, `x1,x2,x3;y1,y2,y3`.
    #[arg(long)]
    at: Option<String>,
    /// Residual tolerance.
    #[arg(long, default_value_t = DEFAULT_RESIDUAL_TOL)]
    tol: f64,
    /// Relative tolerance of the point classification.
    #[arg(long, default_value_t = DEFAULT_CLASS_TOL)]
    class_tol: f64,
    /// Ansatz signature for kk_triple geometries.
    #[arg(long, value_enum)]
    signature: Option<SignatureArg>,
    /// Omit the timestamp so reports are byte-stable.
    #[arg(long)]
    reproducible: bool,
    /// Write the report to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ListFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignatureArg {
    Euclidean,
    Lorentzian,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

/// Usage and configuration problems exit with 2, failed evaluations with 1.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Jet(_) | Error::SingularMetric { .. } | Error::NotKilling { .. } | Error::Field(_) => 1,
        _ => 2,
    }
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, Error> {
        let points = if let Some(at) = &self.at {
            PointSpec::Explicit {
                points: parse_point_list(at)?,
            }
        } else if let Some(g) = &self.grid {
            PointSpec::Grid { counts: parse_grid(g)? }
        } else {
            PointSpec::Random {
                count: self.points.unwrap_or(DEFAULT_POINTS),
                seed: self.seed,
            }
        };
        for (name, t) in [("--tol", self.tol), ("--class-tol", self.class_tol)] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {t}")));
            }
        }
        Ok(RunConfig {
            geometry: self.geometry.clone(),
            params: self.params.clone(),
            points,
            residual_tol: self.tol,
            class_tol: self.class_tol,
            signature: self.signature.map(|s| match s {
                SignatureArg::Euclidean => Signature::Euclidean,
                SignatureArg::Lorentzian => Signature::Lorentzian,
            }),
        })
    }

    fn stamp(&self, report: &mut Report) {
        if !self.reproducible {
            report.timestamp = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
        }
    }

    /// Write to `--out`, to the default directory, or to stdout.
    fn emit(&self, command: &str, name: &str, ext: &str, body: &str) -> Result<(), Error> {
        let target = self.out.clone().or_else(|| {
            std::env::var_os(OUT_DIR_VAR).map(|d| PathBuf::from(d).join(format!("{command}_{name}.{ext}")))
        });
        match target {
            Some(path) => {
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)
                        .map_err(|e| Error::InvalidParameter(format!("cannot create {}: {e}", dir.display())))?;
                }
                std::fs::write(&path, body)
                    .map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", path.display())))?;
                eprintln!("wrote {}", path.display());
            }
            None => print!("{body}"),
        }
        Ok(())
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn list(format: ListFormat) -> Result<u8, Error> {
    let entries = builtin_names()
        .iter()
        .map(|n| builtin(n, &[]).map(|e| e.summary()))
        .collect::<Result<Vec<_>, _>>()?;
    match format {
        ListFormat::Json => print!("{}", to_json(&entries)),
        ListFormat::Text => {
            for e in &entries {
                let params: Vec<String> = e.params.iter().map(|p| format!("{}={}", p.name, p.default)).collect();
                let domain: Vec<String> = e
                    .coordinates
                    .iter()
                    .zip(&e.domain)
                    .map(|(c, d)| format!("{c} in [{:.4}, {:.4}]", d.lo, d.hi))
                    .collect();
                println!(
                    "{:<20} {:<9} {:<10} params: {:<14} {}",
                    e.name,
                    e.kind.as_str(),
                    e.signature.as_str(),
                    if params.is_empty() {
                        "-".into()
                    } else {
                        params.join(", ")
                    },
                    domain.join(", ")
                );
            }
        }
    }
    Ok(0)
}

fn verify(run: &RunArgs, format: ReportFormat) -> Result<u8, Error> {
    let cfg = run.config()?;
    let entry = cfg.entry()?;
    let mut report = suite::verify(&entry, &cfg)?;
    run.stamp(&mut report);
    let body = match format {
        ReportFormat::Json => to_json(&report),
        ReportFormat::Text => report.to_text(),
    };
    let ext = match format {
        ReportFormat::Json => "json",
        ReportFormat::Text => "txt",
    };
    run.emit("verify", &entry.name, ext, &body)?;
    if !report.all_passed() {
        for c in report
            .checks
            .iter()
            .filter(|c| c.status == kkweyl_core::report::Status::Fail)
        {
            eprintln!("FAIL {}: {}", c.id, c.note.as_deref().unwrap_or(&c.formula));
        }
    }
    Ok(if report.all_passed() { 0 } else { 1 })
}

fn scan(run: &RunArgs, format: ScanFormat) -> Result<u8, Error> {
    let cfg = run.config()?;
    let entry = cfg.entry()?;
    let mut report = suite::scan(&entry, &cfg)?;
    run.stamp(&mut report);
    let (body, ext) = match format {
        ScanFormat::Csv => (report.to_csv(), "csv"),
        ScanFormat::Json => (to_json(&report), "json"),
    };
    run.emit("scan", &entry.name, ext, &body)?;
    for c in &report.checks {
        eprintln!("FAIL {}: {}", c.id, c.note.as_deref().unwrap_or(""));
    }
    Ok(if report.all_passed() { 0 } else { 1 })
}

fn check_file(path: &PathBuf) -> Result<u8, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
    match parse_metric_file(&text) {
        Ok(e) => {
            println!(
                "ok: {} ({}, {}, coordinates {})",
                e.name,
                e.kind.as_str(),
                e.signature.as_str(),
                e.coordinates.join(", ")
            );
            Ok(0)
        }
        Err(e) => {
            eprintln!("{}:{}:{}: {}", path.display(), e.line, e.column, e.kind);
            Ok(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::List { format } => list(*format),
        Command::Verify { run, format } => verify(run, *format),
        Command::Scan { run, format } => scan(run, *format),
        Command::CheckFile { path } => check_file(path),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
