//! `lasso` command-line tool. Every subcommand writes its result atomically
//! and drops a `<out>.manifest.json` next to it recording how it was made;
//! `lasso replay --manifest <file>` reruns it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use lasso_spectral::ambarzumyan::{
    ambarzumyan_verdict, extract_traces_lsq, extract_traces_sequences, rayleigh_quotient_test,
    CharacteristicFunction, TraceEstimates, RATIO_MAX_DENOMINATOR, RATIO_TOLERANCE,
};
use lasso_spectral::charfn::{
    delta, delta0, find_spectrum_with, fmt_f64, ScanOptions, Spectrum,
};
use lasso_spectral::graph_model::{classify_ratio, load_problem, LassoProblem};
use lasso_spectral::hadamard::{HadamardFactorization, RatioReconstruction, DEFAULT_T_LIST};
use lasso_spectral::oracle_fd::{assemble, eigenvalues_lowest};
use lasso_spectral::propagator::verify_asymptotics;
use lasso_spectral::LassoError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "lasso", version, about = "Spectral computations on the lasso graph")]
struct Cli {
    /// Worker threads for parallel scans.
    #[arg(long, global = true, env = "LASSO_THREADS", default_value_t = 1)]
    threads: usize,
    /// Seed for randomised data generation; recorded in the manifest.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues from the zeros of the characteristic function.
    Spectrum(SpectrumArgs),
    /// Tabulate Δ(λ) on a grid.
    Charfn(CharfnArgs),
    /// Finite-difference eigenvalues.
    Oracle(OracleArgs),
    /// Rebuild Δ from a spectrum as a Hadamard product.
    Hadamard(HadamardArgs),
    /// Recover the edge integrals of the potential.
    Traces(TracesArgs),
    /// Rayleigh quotient of the constant test function.
    Rayleigh(ConfigOut),
    /// Residuals of the large-ρ expansions of C, C', S, S'.
    VerifyAsymptotics(AsymptoticsArgs),
    /// Decide whether a spectrum forces the potential to vanish.
    ///
    /// The checks are: the spectrum matches the zero-potential spectrum,
    /// the edge integrals recovered from it vanish, and the lowest eigenvalue
    /// is zero. "q must vanish" is the uniqueness theorem applied to those
    /// verified hypotheses, not an independent numerical proof.
    Verdict(VerdictArgs),
    /// Rerun the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Debug)]
struct ConfigOut {
    /// Problem configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    io: ConfigOut,
    #[arg(long)]
    lambda_max: f64,
    /// Scan points per unit of ρ.
    #[arg(long, default_value_t = 64)]
    density: usize,
    /// Cross-check the eigenvalue count against finite differences with this
    /// many cells per edge.
    #[arg(long)]
    oracle_n: Option<usize>,
}

#[derive(Args, Debug)]
struct CharfnArgs {
    #[command(flatten)]
    io: ConfigOut,
    /// `start:stop:step`.
    #[arg(long, allow_hyphen_values = true)]
    lambda_grid: String,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    io: ConfigOut,
    /// Cells on the boundary edge.
    #[arg(long, default_value_t = 1000)]
    n1: usize,
    /// Cells on the loop.
    #[arg(long, default_value_t = 1000)]
    n2: usize,
    /// Number of eigenvalues to report.
    #[arg(long, default_value_t = 20)]
    k: usize,
}

#[derive(Args, Debug)]
struct HadamardArgs {
    /// Spectrum file (CSV or JSON).
    #[arg(long)]
    spectrum: PathBuf,
    #[arg(long)]
    l1: f64,
    #[arg(long)]
    l2: f64,
    /// Number of factors kept; defaults to the whole spectrum.
    #[arg(long)]
    terms: Option<usize>,
    /// Comma-separated evaluation points.
    #[arg(long, allow_hyphen_values = true, default_value = "-50,-10,-1,1.3,7.9,42")]
    lambdas: String,
    /// Skip the Weyl completion of the omitted factors.
    #[arg(long)]
    no_tail: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TraceMethodArg {
    Sequences,
    Lsq,
}

#[derive(Args, Debug)]
struct TracesArgs {
    /// Problem configuration; Δ is evaluated directly.
    #[arg(long, conflicts_with = "spectrum")]
    config: Option<PathBuf>,
    /// Spectrum file; Δ is rebuilt from it (requires --l1, --l2).
    #[arg(long, requires_all = ["l1", "l2"])]
    spectrum: Option<PathBuf>,
    #[arg(long)]
    l1: Option<f64>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long, value_enum, default_value = "sequences")]
    method: TraceMethodArg,
    #[arg(long, default_value_t = 200)]
    n_max: usize,
    #[arg(long, default_value_t = 50.0 * std::f64::consts::PI)]
    rho_min: f64,
    #[arg(long, default_value_t = 150.0 * std::f64::consts::PI)]
    rho_max: f64,
    #[arg(long, default_value_t = 400)]
    count: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum EdgeArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

#[derive(Args, Debug)]
struct AsymptoticsArgs {
    #[command(flatten)]
    io: ConfigOut,
    #[arg(long, value_enum, default_value = "1")]
    edge: EdgeArg,
    /// `start:stop:step` or a comma-separated list.
    #[arg(long)]
    rho: String,
}

#[derive(Args, Debug)]
struct VerdictArgs {
    #[arg(long)]
    spectrum: PathBuf,
    #[arg(long)]
    l1: f64,
    #[arg(long)]
    l2: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
}

/// Provenance record written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: String,
    pub parameters: BTreeMap<String, String>,
    pub output_paths: Vec<String>,
    pub version: String,
}

/// Run the tool on `argv` (including the program name) and return the exit
/// code: 0 on success, 1 for invalid input, 2 for numerical failure.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(cli, &argv) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &anyhow::Error) -> i32 {
    match e.chain().find_map(|c| c.downcast_ref::<LassoError>()) {
        Some(le) if le.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}

fn execute(cli: Cli, argv: &[String]) -> Result<()> {
    let mut params = BTreeMap::new();
    params.insert("argv".to_string(), serde_json::to_string(&argv[1..])?);
    params.insert("threads".to_string(), cli.threads.to_string());
    if let Some(seed) = cli.seed {
        params.insert("seed".to_string(), seed.to_string());
    }
    let threads = cli.threads.max(1);
    match cli.command {
        Command::Spectrum(a) => {
            let problem = read_problem(&a.io.config)?;
            let mut spectrum = find_spectrum_with(
                &problem,
                a.lambda_max,
                &ScanOptions {
                    points_per_unit_rho: a.density,
                    threads,
                },
            )?;
            if let Some(n) = a.oracle_n {
                let op = assemble(&problem, n, n)?;
                let fd = eigenvalues_lowest(&op, op.dim)?;
                spectrum.check_count_against(&fd);
            }
            let text = if is_json(&a.io.out) {
                spectrum.to_json()
            } else {
                spectrum.to_csv()
            };
            params.insert("lambda_max".into(), fmt_f64(a.lambda_max));
            params.insert("density".into(), a.density.to_string());
            finish("spectrum", Some(&a.io.config), params, &a.io.out, &text)
        }
        Command::Charfn(a) => {
            let problem = read_problem(&a.io.config)?;
            let grid = parse_grid(&a.lambda_grid)?;
            let mut text = String::from("lambda,delta\n");
            for lambda in grid {
                let d = delta(&problem, lambda)?;
                text.push_str(&format!("{},{}\n", fmt_f64(lambda), fmt_f64(d)));
            }
            params.insert("lambda_grid".into(), a.lambda_grid);
            finish("charfn", Some(&a.io.config), params, &a.io.out, &text)
        }
        Command::Oracle(a) => {
            let problem = read_problem(&a.io.config)?;
            let op = assemble(&problem, a.n1, a.n2)?;
            let ev = eigenvalues_lowest(&op, a.k)?;
            let last = *ev.last().expect("k >= 1");
            let spectrum = Spectrum::from_expanded(&ev, last)?;
            let text = if is_json(&a.io.out) {
                spectrum.to_json()
            } else {
                spectrum.to_csv()
            };
            params.insert("n1".into(), a.n1.to_string());
            params.insert("n2".into(), a.n2.to_string());
            params.insert("k".into(), a.k.to_string());
            finish("oracle", Some(&a.io.config), params, &a.io.out, &text)
        }
        Command::Hadamard(a) => {
            let spectrum = read_spectrum(&a.spectrum)?;
            let terms = a.terms.unwrap_or_else(|| spectrum.count());
            let fact =
                HadamardFactorization::fit(&spectrum, a.l1, a.l2, terms, &DEFAULT_T_LIST, !a.no_tail)?;
            let mut values = Vec::new();
            for lambda in parse_list(&a.lambdas)? {
                let rebuilt = fact.evaluate(lambda)?;
                values.push(serde_json::json!({
                    "lambda": lambda,
                    "reconstructed": rebuilt,
                    "delta0": delta0(a.l1, a.l2, lambda),
                }));
            }
            let out = serde_json::json!({ "factorization": fact, "values": values });
            let text = serde_json::to_string_pretty(&out)? + "\n";
            params.insert("l1".into(), fmt_f64(a.l1));
            params.insert("l2".into(), fmt_f64(a.l2));
            params.insert("terms".into(), terms.to_string());
            finish("hadamard", Some(&a.spectrum), params, &a.out, &text)
        }
        Command::Traces(a) => {
            let (source, est) = match (&a.config, &a.spectrum) {
                (Some(config), _) => {
                    let problem = read_problem(config)?;
                    (config.clone(), traces(&problem, &a)?)
                }
                (None, Some(path)) => {
                    let spectrum = read_spectrum(path)?;
                    let (l1, l2) = (a.l1.unwrap_or_default(), a.l2.unwrap_or_default());
                    let rec = RatioReconstruction::new(&spectrum, l1, l2, &DEFAULT_T_LIST)?;
                    (path.clone(), traces(&rec, &a)?)
                }
                (None, None) => bail!("either --config or --spectrum is required"),
            };
            let text = serde_json::to_string_pretty(&est)? + "\n";
            params.insert("n_max".into(), a.n_max.to_string());
            finish("traces", Some(&source), params, &a.out, &text)
        }
        Command::Rayleigh(a) => {
            let problem = read_problem(&a.config)?;
            let out = serde_json::json!({ "rayleigh_quotient": rayleigh_quotient_test(&problem) });
            let text = serde_json::to_string_pretty(&out)? + "\n";
            finish("rayleigh", Some(&a.config), params, &a.out, &text)
        }
        Command::VerifyAsymptotics(a) => {
            let problem = read_problem(&a.io.config)?;
            let rhos = if a.rho.contains(':') {
                parse_grid(&a.rho)?
            } else {
                parse_list(&a.rho)?
            };
            let q = match a.edge {
                EdgeArg::One => &problem.q1,
                EdgeArg::Two => &problem.q2,
            };
            let table = verify_asymptotics(q, &rhos)?;
            let mut text = String::from("rho,r_C,r_Cp,r_S,r_Sp\n");
            for row in table {
                let cols: Vec<String> = std::iter::once(row.rho)
                    .chain(row.as_array())
                    .map(fmt_f64)
                    .collect();
                text.push_str(&cols.join(","));
                text.push('\n');
            }
            params.insert("rho".into(), a.rho);
            finish("verify-asymptotics", Some(&a.io.config), params, &a.io.out, &text)
        }
        Command::Verdict(a) => {
            let spectrum = read_spectrum(&a.spectrum)?;
            let verdict = ambarzumyan_verdict(&spectrum, a.l1, a.l2, a.tol)?;
            let text = verdict.to_json() + "\n";
            params.insert("l1".into(), fmt_f64(a.l1));
            params.insert("l2".into(), fmt_f64(a.l2));
            params.insert("tol".into(), fmt_f64(a.tol));
            finish("verdict", Some(&a.spectrum), params, &a.out, &text)
        }
        Command::Replay(a) => {
            let text = fs::read_to_string(&a.manifest)
                .with_context(|| format!("reading {}", a.manifest.display()))?;
            let manifest: RunManifest = serde_json::from_str(&text)
                .map_err(|e| anyhow!("malformed manifest {}: {e}", a.manifest.display()))?;
            let args: Vec<String> = serde_json::from_str(
                manifest
                    .parameters
                    .get("argv")
                    .ok_or_else(|| anyhow!("manifest has no recorded argv"))?,
            )?;
            if args.first().map(String::as_str) == Some("replay") {
                bail!("refusing to replay a replay");
            }
            let mut full = vec!["lasso".to_string()];
            full.extend(args);
            let cli = Cli::try_parse_from(&full).map_err(|e| anyhow!("recorded argv is invalid: {e}"))?;
            execute(cli, &full)
        }
    }
}

fn traces<F: CharacteristicFunction>(f: &F, a: &TracesArgs) -> Result<TraceEstimates> {
    let (l1, l2) = f.lengths();
    Ok(match a.method {
        TraceMethodArg::Sequences => {
            let ratio = classify_ratio(l1, l2, RATIO_TOLERANCE, RATIO_MAX_DENOMINATOR);
            extract_traces_sequences(f, &ratio, a.n_max)?
        }
        TraceMethodArg::Lsq => extract_traces_lsq(f, a.rho_min, a.rho_max, a.count)?,
    })
}

fn read_problem(path: &Path) -> Result<LassoProblem> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    Ok(load_problem(&text)?)
}

fn read_spectrum(path: &Path) -> Result<Spectrum> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading spectrum {}", path.display()))?;
    if is_json(path) {
        let s: Spectrum = serde_json::from_str(&text)
            .map_err(|e| LassoError::Parse(format!("{}: {e}", path.display())))?;
        // Re-validate through the CSV constructor's checks.
        let mut checked = Spectrum::from_expanded(&s.expanded(), s.scan_ceiling)?;
        checked.warnings = s.warnings;
        Ok(checked)
    } else {
        Ok(Spectrum::from_csv(&text)?)
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn parse_number(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| LassoError::InvalidInput(format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(LassoError::InvalidInput(format!("not finite: {s:?}")).into());
    }
    Ok(v)
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_number).collect()
}

/// `start:stop:step`, inclusive of `stop` up to rounding.
fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(LassoError::InvalidInput(format!("grid must be start:stop:step, got {s:?}")).into());
    }
    let (a, b, h) = (parse_number(parts[0])?, parse_number(parts[1])?, parse_number(parts[2])?);
    if !(h > 0.0) || b < a {
        return Err(LassoError::InvalidInput(format!("empty or reversed grid {s:?}")).into());
    }
    let n = ((b - a) / h + 1e-9).floor() as usize;
    if n > 10_000_000 {
        return Err(LassoError::InvalidInput(format!("grid {s:?} has too many points")).into());
    }
    Ok((0..=n).map(|i| a + i as f64 * h).collect())
}

fn finish(
    command: &str,
    config: Option<&Path>,
    parameters: BTreeMap<String, String>,
    out: &Path,
    text: &str,
) -> Result<()> {
    write_atomic(out, text)?;
    let manifest = RunManifest {
        command: command.to_string(),
        config_path: config.map(|p| p.display().to_string()).unwrap_or_default(),
        parameters,
        output_paths: vec![out.display().to_string()],
        version: format!("lasso {}", env!("CARGO_PKG_VERSION")),
    };
    let path = manifest_path(out);
    write_atomic(&path, &(serde_json::to_string_pretty(&manifest)? + "\n"))
}

/// `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let file = path
        .file_name()
        .ok_or_else(|| anyhow!("output path {} has no file name", path.display()))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = dir.join(tmp_name);
    fs::write(&tmp, text).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("-10:100:0.1").unwrap().len(), 1101);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert_eq!(parse_list("-50,1.3").unwrap(), vec![-50.0, 1.3]);
        assert!(parse_list("1,x").is_err());
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(
            manifest_path(Path::new("/tmp/a/spec.csv")),
            PathBuf::from("/tmp/a/spec.csv.manifest.json")
        );
    }

    #[test]
    fn numerical_errors_map_to_exit_two() {
        let e: anyhow::Error = LassoError::NoConvergence {
            index: 0,
            iterations: 60,
        }
        .into();
        assert_eq!(exit_code(&e), EXIT_NUMERICAL);
        let e: anyhow::Error = LassoError::Parse("x".into()).into();
        assert_eq!(exit_code(&e), EXIT_VALIDATION);
        assert_eq!(exit_code(&anyhow!("io")), EXIT_VALIDATION);
    }
}
