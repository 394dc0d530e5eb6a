#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use normlab::convex::{minkowski_norm, MinkowskiOptions};
use normlab::operators::catalog_build;
use normlab::opnorm::{attainment_scan_between, operator_norm, OpNormConfig};
use normlab::pseudospectrum::{classify_value, grid_scan, resolvent_norm, Region, LEVEL_BAND};
use normlab::verify::{run_suite, CheckResult, VerifyConfig};
use normlab::{Coeffs, Complex64, OperatorSpec, QSeq, SpaceSpec};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Gap(String),
    #[error("{0}")]
    Io(String),
    #[error("{failed} of {total} checks failed")]
    Verify { failed: usize, total: usize },
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Gap(_) => 2,
            CliError::Io(_) => 3,
            CliError::Verify { .. } => 4,
        }
    }
}

impl From<normlab::Error> for CliError {
    fn from(e: normlab::Error) -> Self {
        match e {
            normlab::Error::Tolerance { .. } | normlab::Error::Inconclusive(_) => {
                CliError::Gap(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "normlab", version, about = "Norms, operator norms and pseudospectra on sequence spaces", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Norm of a finitely supported vector.
    Norm {
        #[arg(long)]
        space: String,
        /// Coefficients as `[[index, re, im], ...]`.
        #[arg(long)]
        vector: String,
        /// Atom count for the renormed space, overriding the one in `--space`.
        #[arg(long)]
        trunc: Option<usize>,
        /// Relative duality gap for the renormed space.
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Operator norm of a truncated section, or a scan over increasing orders.
    Opnorm {
        #[arg(long)]
        space: String,
        #[arg(long)]
        operator: String,
        /// Codomain, defaults to `--space`.
        #[arg(long)]
        cod: Option<String>,
        /// One order, or a strictly increasing comma-separated list.
        #[arg(long, value_delimiter = ',', default_value = "20")]
        trunc: Vec<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value = "0x5eed", value_parser = parse_seed)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Pseudospectrum classification on a grid, or at a single point with `--z`.
    Pspec {
        #[arg(long)]
        space: String,
        #[arg(long)]
        operator: String,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value = "20")]
        trunc: usize,
        /// `re_min,re_max,im_min,im_max`.
        #[arg(
            long,
            value_delimiter = ',',
            num_args = 1,
            default_value = "-3,3,-3,3",
            allow_hyphen_values = true
        )]
        grid: Vec<f64>,
        /// Points per axis.
        #[arg(long, default_value = "61")]
        res: usize,
        /// `re,im`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z: Option<Vec<f64>>,
        /// Relative half-width of the level band around `1/eps`.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value = "0x5eed", value_parser = parse_seed)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Runs the acceptance checks and prints a pass/fail table.
    Verify {
        /// Comma-separated check ids.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        #[arg(long, default_value = "0x5eed", value_parser = parse_seed)]
        seed: u64,
        /// Replaces the first exponent of the q-sequence.
        #[arg(long, hide = true)]
        q1: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    r.map_err(|e| format!("bad seed {s:?}: {e}"))
}

fn parse_space(s: &str) -> CliResult<SpaceSpec> {
    let space: SpaceSpec =
        serde_json::from_str(s).map_err(|e| CliError::Usage(format!("--space: {e}")))?;
    space.validate()?;
    Ok(space)
}

/// JSON, or a bare catalog name for entries without parameters.
fn parse_operator(s: &str) -> CliResult<OperatorSpec> {
    let t = s.trim();
    if !t.starts_with('{') {
        return Ok(catalog_build(t, None, None)?);
    }
    let op: OperatorSpec =
        serde_json::from_str(t).map_err(|e| CliError::Usage(format!("--operator: {e}")))?;
    op.validate()?;
    Ok(op)
}

fn parse_vector(s: &str) -> CliResult<Coeffs> {
    serde_json::from_str(s).map_err(|e| CliError::Usage(format!("--vector: {e}")))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serialises");
    s.push('\n');
    s
}

fn wrap(command: &str, body: serde_json::Value) -> serde_json::Value {
    let mut obj = json!({ "schema_version": SCHEMA_VERSION, "command": command });
    if let (Some(o), serde_json::Value::Object(b)) = (obj.as_object_mut(), body) {
        o.extend(b);
    }
    obj
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes the data to `--out` and the summary to stdout, or the data to stdout and the
/// summary to stderr when only `--format` is given, or just the summary.
fn emit(
    out: &OutputArgs,
    summary: &str,
    csv: impl FnOnce() -> String,
    json: impl FnOnce() -> String,
) -> CliResult<()> {
    let render = |f: Format| match f {
        Format::Csv => csv(),
        Format::Json => json(),
    };
    match (&out.out, out.format) {
        (Some(path), f) => {
            let data = render(f.unwrap_or(Format::Csv));
            std::fs::write(path, data)
                .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
            println!("{summary}");
        }
        (None, Some(f)) => {
            print!("{}", render(f));
            eprintln!("{summary}");
        }
        (None, None) => println!("{summary}"),
    }
    Ok(())
}

fn cmd_norm(
    space: &str,
    vector: &str,
    trunc: Option<usize>,
    tol: Option<f64>,
    out: &OutputArgs,
) -> CliResult<()> {
    let space = parse_space(space)?;
    let u = parse_vector(vector)?;
    match &space {
        SpaceSpec::RenormedL2 { trunc: n, qseq } => {
            let mut opts = MinkowskiOptions {
                qseq: qseq.clone(),
                ..Default::default()
            };
            if let Some(t) = tol {
                opts.tol = t;
            }
            let r = minkowski_norm(&u, trunc.unwrap_or(*n), &opts)?;
            let summary = format!("{:.6}", r.value);
            emit(
                out,
                &summary,
                || {
                    format!(
                        "value,lower,gap,converged\n{:e},{:e},{:e},{}\n",
                        r.value, r.lower, r.gap, r.converged
                    )
                },
                || {
                    to_json(&wrap(
                        "norm",
                        json!({ "space": space, "vector": u, "result": r }),
                    ))
                },
            )?;
            if !r.converged {
                return Err(CliError::Gap(format!(
                    "gap {:e} above tolerance {:e} (upper {}, lower {})",
                    r.gap, opts.tol, r.value, r.lower
                )));
            }
            Ok(())
        }
        _ => {
            let v = space.norm(&u)?;
            emit(
                out,
                &format!("{v:.6}"),
                || format!("value\n{v:e}\n"),
                || {
                    to_json(&wrap(
                        "norm",
                        json!({ "space": space, "vector": u, "value": v }),
                    ))
                },
            )
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_opnorm(
    space: &str,
    operator: &str,
    cod: Option<&str>,
    trunc: &[usize],
    tol: Option<f64>,
    seed: u64,
    out: &OutputArgs,
) -> CliResult<()> {
    let dom = parse_space(space)?;
    let cod = match cod {
        Some(c) => parse_space(c)?,
        None => dom.clone(),
    };
    let t = parse_operator(operator)?;
    let mut cfg = OpNormConfig {
        seed,
        ..Default::default()
    };
    if let Some(tol) = tol {
        cfg.tol = tol;
    }
    let report = match trunc {
        [n] => operator_norm(&t, &dom, &cod, *n, &cfg)?,
        ns => attainment_scan_between(&t, &dom, &cod, ns, &cfg)?,
    };
    let method = serde_json::to_value(report.method).unwrap_or_default();
    let attain = serde_json::to_value(report.attainment).unwrap_or_default();
    let summary = format!(
        "{:.6} method={} attainment={} order={}",
        report.value,
        method.as_str().unwrap_or("?"),
        attain.as_str().unwrap_or("?"),
        report.order
    );
    emit(
        out,
        &summary,
        || {
            let mut s = String::from("order,value,centroid\n");
            for p in &report.trace {
                let _ = writeln!(s, "{},{:e},{:e}", p.order, p.value, p.centroid);
            }
            s
        },
        || {
            to_json(&wrap(
                "opnorm",
                json!({ "operator": t, "dom": dom, "cod": cod, "report": report }),
            ))
        },
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_pspec(
    space: &str,
    operator: &str,
    eps: f64,
    trunc: usize,
    grid: &[f64],
    res: usize,
    z: Option<&[f64]>,
    tol: Option<f64>,
    seed: u64,
    out: &OutputArgs,
) -> CliResult<()> {
    let space = parse_space(space)?;
    let t = parse_operator(operator)?;
    if !(eps > 0.0) {
        return Err(CliError::Usage(format!(
            "--eps must be positive, got {eps}"
        )));
    }
    let band = tol.unwrap_or(LEVEL_BAND);
    let cfg = OpNormConfig {
        seed,
        ..Default::default()
    };
    if let Some(z) = z {
        let &[re, im] = z else {
            return Err(CliError::Usage("--z takes re,im".into()));
        };
        let z = Complex64::new(re, im);
        let r = resolvent_norm(&t, &space, z, trunc, &cfg)?;
        let class = classify_value(r, eps, band);
        let summary = format!("resnorm={r:.6e} class={}", class.as_str());
        return emit(
            out,
            &summary,
            || {
                let rs = if r.is_infinite() {
                    "inf".to_string()
                } else {
                    format!("{r:e}")
                };
                format!(
                    "re,im,resnorm,class\n{re:e},{im:e},{rs},{}\n",
                    class.as_str()
                )
            },
            || {
                let rs = if r.is_infinite() {
                    json!("inf")
                } else {
                    json!(r)
                };
                to_json(&wrap(
                    "pspec",
                    json!({ "z": [re, im], "eps": eps, "order": trunc, "band": band, "resnorm": rs, "class": class }),
                ))
            },
        );
    }
    let &[re_min, re_max, im_min, im_max] = grid else {
        return Err(CliError::Usage(
            "--grid takes re_min,re_max,im_min,im_max".into(),
        ));
    };
    let region = Region {
        re_min,
        re_max,
        im_min,
        im_max,
    };
    let g = grid_scan(&t, &space, region, (res, res), eps, trunc, band, &cfg)?;
    let s = g.summary();
    let summary = format!(
        "strict={} level={} outside={} strict_radius={:.2} cell_width={:.4}",
        s.strict, s.level, s.outside, s.strict_radius, s.cell_width
    );
    emit(
        out,
        &summary,
        || g.to_csv(),
        || to_json(&wrap("pspec", json!({ "summary": s, "grid": g }))),
    )
}

fn cmd_verify(only: Vec<String>, seed: u64, q1: Option<f64>, out: &OutputArgs) -> CliResult<()> {
    let cfg = VerifyConfig {
        seed,
        qseq: q1.map(QSeq::with_q1).unwrap_or_default(),
        only,
    };
    let results: Vec<CheckResult> = run_suite(&cfg)?;
    for r in &results {
        eprintln!("{:<12} {:>8.2}s", r.id, r.seconds);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let mut table = String::new();
    for r in &results {
        let _ = writeln!(
            table,
            "{} {:<12} {}: {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.title,
            r.detail
        );
    }
    let _ = write!(table, "{}/{} passed", results.len() - failed, results.len());
    emit(
        out,
        &table,
        || {
            let mut s = String::from("id,passed,title,detail\n");
            for r in &results {
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    r.id,
                    r.passed,
                    csv_field(&r.title),
                    csv_field(&r.detail)
                );
            }
            s
        },
        || {
            to_json(&wrap(
                "verify",
                json!({ "seed": seed, "passed": results.len() - failed, "failed": failed, "checks": results }),
            ))
        },
    )?;
    if failed > 0 {
        return Err(CliError::Verify {
            failed,
            total: results.len(),
        });
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Norm {
            space,
            vector,
            trunc,
            tol,
            out,
        } => cmd_norm(&space, &vector, trunc, tol, &out),
        Command::Opnorm {
            space,
            operator,
            cod,
            trunc,
            tol,
            seed,
            out,
        } => cmd_opnorm(&space, &operator, cod.as_deref(), &trunc, tol, seed, &out),
        Command::Pspec {
            space,
            operator,
            eps,
            trunc,
            grid,
            res,
            z,
            tol,
            seed,
            out,
        } => cmd_pspec(
            &space,
            &operator,
            eps,
            trunc,
            &grid,
            res,
            z.as_deref(),
            tol,
            seed,
            &out,
        ),
        Command::Verify {
            only,
            seed,
            q1,
            out,
        } => cmd_verify(only, seed, q1, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
