use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use mcp_core::codebook::{Codebook, ComplexityBudget, Generator};
use mcp_core::concentration::{
    event_bounds, gaussian_dot_check, verify_chi_square, verify_events, verify_gaussian_dot, verify_sigma_max,
    DotStatistic, EventParams, TailCheckReport,
};
use mcp_core::harness::{
    emit_report, gamma_constants, run_experiment, run_lemmas, theorem1_rhs, theorem2_bound, write_tail_reports,
    BoundInputs, ExperimentConfig, ExperimentKind, ReportFormat,
};
use mcp_core::quantize::{QuantizedSignal, Resolution};
use mcp_core::sensing::SensingEnsemble;
use mcp_core::solver::{reconstruction_error, solve_noiseless, solve_noisy, CandidateSet, FeasibilityTolerance};
use mcp_core::{Error, Result};

#[derive(Parser)]
#[command(name = "mcp", version, about = "Minimum complexity pursuit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the codebook within a budget in canonical order.
    Generate {
        #[command(flatten)]
        book: BookArgs,
        /// Stop after this many entries.
        #[arg(long)]
        limit: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Measure a quantized signal and write a measurement file.
    Measure {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: Option<u32>,
        /// Ensemble seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid codes of the signal, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        codes: Vec<u64>,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        noise_seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Recover a signal from a measurement file.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        generators: Vec<Generator>,
        #[arg(long)]
        budget: u32,
        /// Minimize the residual instead of the description length.
        #[arg(long)]
        noisy: bool,
        /// Feasibility slack; defaults to 1e-9 max(1, ||y||).
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Run the tail-bound checks and write one CSV row per check.
    VerifyLemmas {
        /// LEMMAS config; without one the standard suite runs.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a sweep from a config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Defaults to the output extension.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Print the theorem and event bounds for given inputs as JSON.
    Bounds {
        #[arg(long)]
        kappa_bits: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 4.0)]
        r: f64,
        #[arg(long, default_value_t = 0.1)]
        tau: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
    },
}

#[derive(clap::Args)]
struct BookArgs {
    #[arg(long)]
    n: usize,
    /// Defaults to ceil(ln n).
    #[arg(long)]
    m: Option<u32>,
    /// For example `CONSTANT,K_SPARSE:1`.
    #[arg(long, value_delimiter = ',', required = true)]
    generators: Vec<Generator>,
    #[arg(long)]
    budget: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasurementFile {
    d: usize,
    n: usize,
    m: u32,
    ensemble_seed: u64,
    codes: Vec<u64>,
    y: Vec<f64>,
    sigma: f64,
    noise_seed: u64,
}

fn resolution(n: usize, m: Option<u32>) -> Result<Resolution> {
    m.map_or(Ok(Resolution::for_length(n)), Resolution::new)
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::Io {
            path: p.into(),
            source: e,
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn label(path: Option<&Path>) -> PathBuf {
    path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf)
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut sink = open_output(path)?;
    let json_err = |source| Error::Json {
        path: label(path),
        source,
    };
    serde_json::to_writer_pretty(&mut sink, value).map_err(json_err)?;
    writeln!(sink).and_then(|_| sink.flush()).map_err(|e| Error::Io {
        path: label(path),
        source: e,
    })
}

fn generate(book: BookArgs, limit: Option<u64>, output: Option<PathBuf>) -> Result<bool> {
    let m = resolution(book.n, book.m)?;
    let codebook = Codebook::new(book.generators, book.n, m)?;
    let budget = ComplexityBudget::new(book.budget)?;
    let label = label(output.as_deref());
    let csv_err = |source| Error::Csv {
        path: label.clone(),
        source,
    };
    let mut w = csv::Writer::from_writer(open_output(output.as_deref())?);
    w.write_record(["index", "id", "generator", "description_length", "codes"])
        .map_err(csv_err)?;
    for (i, entry) in codebook
        .enumerate(budget)
        .take(limit.unwrap_or(u64::MAX) as usize)
        .enumerate()
    {
        let codes = entry.decode()?.codes();
        let codes: Vec<String> = codes.iter().map(u64::to_string).collect();
        w.write_record([
            i.to_string(),
            entry.id(),
            entry.generator.to_string(),
            entry.description_length().to_string(),
            codes.join(" "),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Io { path: label, source: e })?;
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn measure(
    d: usize,
    n: usize,
    m: Option<u32>,
    seed: u64,
    codes: Vec<u64>,
    sigma: f64,
    noise_seed: u64,
    output: PathBuf,
) -> Result<bool> {
    let m = resolution(n, m)?;
    if codes.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: codes.len(),
        });
    }
    let x = QuantizedSignal::from_codes(&codes, m)?;
    let a = SensingEnsemble::draw(d, n, seed)?;
    let record = a.measure_noisy(x.values(), sigma, noise_seed)?;
    let file = MeasurementFile {
        d,
        n,
        m: m.bits(),
        ensemble_seed: seed,
        codes,
        y: record.y,
        sigma,
        noise_seed,
    };
    write_json(Some(&output), &file)?;
    Ok(true)
}

fn solve(input: PathBuf, generators: Vec<Generator>, budget: u32, noisy: bool, delta: Option<f64>) -> Result<bool> {
    let text = std::fs::read_to_string(&input).map_err(|e| Error::Io {
        path: input.clone(),
        source: e,
    })?;
    let file: MeasurementFile = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: input.clone(),
        source,
    })?;
    let m = Resolution::new(file.m)?;
    let a = SensingEnsemble::draw(file.d, file.n, file.ensemble_seed)?;
    let codebook = Codebook::new(generators, file.n, m)?;
    let candidates = CandidateSet::build(&codebook, ComplexityBudget::new(budget)?)?;
    let result = if noisy {
        solve_noisy(&a, &file.y, candidates.candidates())?
    } else {
        let tol = match delta {
            Some(delta) => FeasibilityTolerance::new(delta)?,
            None => FeasibilityTolerance::relative_to(&file.y),
        };
        solve_noiseless(&a, &file.y, candidates.candidates(), tol)?
    };
    let truth = QuantizedSignal::from_codes(&file.codes, m)?;
    let error = reconstruction_error(&result.x_hat, truth.values())?;
    write_json(
        None,
        &serde_json::json!({
            "id": result.entry.id(),
            "index": result.index,
            "complexity_bits": result.complexity_bits,
            "residual": result.residual,
            "candidates_scored": result.candidates_scored,
            "codes": result.x_hat.codes(),
            "error": error,
        }),
    )?;
    Ok(true)
}

/// The chi-square, Gaussian dot-product, singular-value and event checks at
/// their standard sizes.
fn standard_suite(seed: u64) -> Result<(Vec<TailCheckReport>, bool)> {
    let mut tails = Vec::new();
    for (d, tau) in [(50, 0.3), (100, 0.5), (200, 0.2)] {
        for mut r in verify_chi_square(d, tau, 100_000, seed)? {
            r.event_name = format!("{}_D{d}_TAU{tau}", r.event_name);
            tails.push(r);
        }
    }
    let mut sigma_max = verify_sigma_max(50, 200, 0.5, 10_000, seed)?;
    sigma_max.event_name = "SIGMA_MAX_D50_N200".into();
    tails.push(sigma_max);

    let codebook = Codebook::new(
        vec![Generator::Constant, Generator::KSparse { max_k: 1 }],
        32,
        Resolution::new(4)?,
    )?;
    let budget = ComplexityBudget::new(18)?;
    let params = EventParams::standard(4.0, 0.2, 64, 18.0)?;
    tails.extend(verify_events(&params, &codebook, budget, 64, 0.2, 1000, seed)?);

    let mut dots_pass = true;
    for n in [1, 2, 10, 50] {
        let r = verify_gaussian_dot(n, 100_000, seed)?;
        eprintln!(
            "gaussian dot n={n}: ks={:.5} (< {:.5}) corr={:.5} (|.| < {:.5}) {}",
            r.ks_statistic,
            r.ks_critical,
            r.independence_corr,
            r.corr_critical,
            if r.pass { "pass" } else { "FAIL" }
        );
        dots_pass &= r.pass;
    }
    let raw = gaussian_dot_check(2, 100_000, seed, DotStatistic::Raw)?;
    let rejected = raw.ks_statistic >= raw.ks_critical;
    eprintln!(
        "raw dot n=2 control: ks={:.5} (must reach {:.5}) {}",
        raw.ks_statistic,
        raw.ks_critical,
        if rejected { "pass" } else { "FAIL" }
    );
    Ok((tails, dots_pass && rejected))
}

fn verify_lemmas(
    config: Option<PathBuf>,
    seed: Option<u64>,
    trials: Option<u64>,
    output: Option<PathBuf>,
) -> Result<bool> {
    let (reports, extra_pass) = match config {
        Some(path) => {
            let mut cfg = ExperimentConfig::load(&path)?;
            if cfg.experiment_id != ExperimentKind::Lemmas {
                return Err(Error::Config("verify-lemmas needs a LEMMAS config".into()));
            }
            apply_overrides(&mut cfg, seed, trials)?;
            (run_lemmas(&cfg)?, true)
        }
        None => standard_suite(seed.unwrap_or(0))?,
    };
    write_tail_reports(open_output(output.as_deref())?, &reports, &label(output.as_deref()))?;
    Ok(extra_pass && reports.iter().all(|r| r.pass))
}

fn apply_overrides(cfg: &mut ExperimentConfig, seed: Option<u64>, trials: Option<u64>) -> Result<()> {
    if let Some(seed) = seed {
        cfg.base_seed = seed;
    }
    if let Some(trials) = trials {
        cfg.trials = trials;
    }
    cfg.validate()
}

fn experiment(
    config: PathBuf,
    output: PathBuf,
    format: Option<FormatArg>,
    seed: Option<u64>,
    trials: Option<u64>,
) -> Result<bool> {
    let mut cfg = ExperimentConfig::load(&config)?;
    apply_overrides(&mut cfg, seed, trials)?;
    if cfg.experiment_id == ExperimentKind::Lemmas {
        let reports = run_lemmas(&cfg)?;
        let file = File::create(&output).map_err(|e| Error::Io {
            path: output.clone(),
            source: e,
        })?;
        write_tail_reports(BufWriter::new(file), &reports, &output)?;
        return Ok(true);
    }
    let format = match format {
        Some(FormatArg::Csv) => ReportFormat::Csv,
        Some(FormatArg::Json) => ReportFormat::Json,
        None => ReportFormat::for_path(&output),
    };
    let out = run_experiment(&cfg)?;
    emit_report(&out.records, &cfg, format, &output)?;
    write_json(None, &out.summary)?;
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn bounds(kappa_bits: f64, n: usize, m: u32, d: usize, sigma: f64, r: f64, tau: f64, t: f64) -> Result<bool> {
    let inputs = BoundInputs {
        kappa_bits,
        m,
        n,
        d,
        sigma,
        r,
        tau,
        t,
    };
    let params = EventParams::standard(r, sigma, d, kappa_bits)?;
    let events = event_bounds(&params, d, n, kappa_bits, sigma)?;
    write_json(
        None,
        &serde_json::json!({
            "inputs": inputs,
            "theorem1": theorem1_rhs(&inputs)?,
            "theorem2": theorem2_bound(kappa_bits, sigma, d, r)?,
            "gammas": gamma_constants(params.t2, params.t3, params.t4, params.t5, params.t6)?,
            "event_params": params,
            "events": events,
            "union": events.union(),
        }),
    )?;
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate { book, limit, output } => generate(book, limit, output),
        Command::Measure {
            d,
            n,
            m,
            seed,
            codes,
            sigma,
            noise_seed,
            output,
        } => measure(d, n, m, seed, codes, sigma, noise_seed, output),
        Command::Solve {
            input,
            generators,
            budget,
            noisy,
            delta,
        } => solve(input, generators, budget, noisy, delta),
        Command::VerifyLemmas {
            config,
            seed,
            trials,
            output,
        } => verify_lemmas(config, seed, trials, output),
        Command::Experiment {
            config,
            output,
            format,
            seed,
            trials,
        } => experiment(config, output, format, seed, trials),
        Command::Bounds {
            kappa_bits,
            n,
            m,
            d,
            sigma,
            r,
            tau,
            t,
        } => bounds(kappa_bits, n, m, d, sigma, r, tau, t),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Io { .. } | Error::Json { .. } | Error::Csv { .. } => 3,
                Error::NoFeasibleCandidate { .. } => 2,
                _ => 1,
            })
        }
    }
}
