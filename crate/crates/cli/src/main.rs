//! `sumrd` command-line tool.
//!
//! Exit codes: 0 success, 1 a `--check` property failed, 2 usage or input
//! error, 3 numerical failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sumrd::blahut::{default_beta_grid, BaSweep};
use sumrd::gaussian::default_distortion_grid;
use sumrd::pipeline::{estimate_spectra, eval_summarizer_embeddings, Pairing, DEFAULT_MIN_BIN};
use sumrd::{
    ba_curve, d_max, expected_distortion, gaussian_curve, read_embeddings, simulate_block_converse,
    summarizer_rate, BaOptions, Instance, OutputFormat, RDCurve, SpectrumSet,
};

#[derive(Parser)]
#[command(
    name = "sumrd",
    version,
    about = "Rate-distortion analysis of summarizers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the Blahut-Arimoto curve of a discrete JSON instance.
    RdDiscrete {
        /// JSON instance file.
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Water-filled curve from a spectrum JSON file or an SRDE embedding file.
    RdGaussian {
        /// Spectrum JSON file.
        #[arg(
            long,
            conflicts_with = "embeddings",
            required_unless_present = "embeddings"
        )]
        spectrum: Option<PathBuf>,
        /// SRDE embedding file.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Minimum records per length bin (SRDE input only).
        #[arg(long, default_value_t = DEFAULT_MIN_BIN)]
        min_bin: usize,
        /// Rate units; defaults to the spectrum file's base, or 2 for SRDE input.
        #[arg(long)]
        log_base: Option<f64>,
        /// Comma-separated distortions. Defaults to 50 log-spaced points up
        /// to the eigenvalue mass.
        #[arg(long)]
        distortion_grid: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Operating point of a summarizer from paired SRDE files (record i of
    /// each file forms a pair).
    Eval {
        /// SRDE file of text embeddings.
        #[arg(long)]
        embeddings: PathBuf,
        /// SRDE file of summary embeddings.
        #[arg(long)]
        summaries: PathBuf,
        /// Curve file (CSV or JSON) to report the gap to.
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MIN_BIN)]
        min_bin: usize,
        /// Write the point as JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The four-text worked example: one-shot points, D_max and the curve.
    Example1 {
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Verify the curve's structural properties; exit 1 on a violation.
        #[arg(long)]
        check: bool,
        /// Seed of the block simulation run by `--check`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated negative slopes. Defaults to 40 log-spaced values
    /// from -1e-4 to -1e2.
    #[arg(long, allow_hyphen_values = true)]
    beta_grid: Option<String>,
    /// Convergence tolerance of each class solve.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    /// Largest tolerated fraction of unconverged sweep points.
    #[arg(long, default_value_t = 0.05)]
    max_unconverged: f64,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json; inferred from the `--out` extension when absent.
    #[arg(long)]
    format: Option<OutputFormat>,
}

enum Failure {
    Check(String),
    Usage(String),
    Numerical(String),
}

impl From<sumrd::Error> for Failure {
    fn from(e: sumrd::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Prefixes load errors with the offending path.
fn load<'a, T>(path: &'a Path, f: impl FnOnce(&'a Path) -> sumrd::Result<T>) -> Result<T, Failure> {
    f(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let values = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| Failure::Usage(format!("bad {what} value {s:?}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(Failure::Usage(format!("{what} is empty")));
    }
    Ok(values)
}

impl SweepArgs {
    fn options(&self) -> Result<BaOptions, Failure> {
        let beta_grid = match &self.beta_grid {
            Some(text) => parse_list(text, "beta grid")?,
            None => default_beta_grid(),
        };
        if !(0.0..=1.0).contains(&self.max_unconverged) {
            return Err(Failure::Usage(format!(
                "--max-unconverged must lie in [0, 1], got {}",
                self.max_unconverged
            )));
        }
        let opts = BaOptions {
            max_iters: self.max_iters,
            tol: self.tol,
            beta_grid,
        };
        opts.validate()?;
        Ok(opts)
    }

    fn check_convergence(&self, sweep: &BaSweep) -> Outcome {
        let bad = sweep.unconverged();
        if bad == 0 {
            return Ok(());
        }
        let fraction = bad as f64 / sweep.results.len() as f64;
        eprintln!(
            "warning: {bad} of {} sweep points did not converge",
            sweep.results.len()
        );
        if fraction > self.max_unconverged {
            return Err(Failure::Numerical(format!(
                "{bad} of {} sweep points did not converge",
                sweep.results.len()
            )));
        }
        Ok(())
    }
}

impl OutputArgs {
    fn emit(&self, curve: &RDCurve) -> Outcome {
        let format = self.format.unwrap_or_else(|| {
            self.out
                .as_deref()
                .map_or(OutputFormat::Csv, OutputFormat::from_path)
        });
        match &self.out {
            Some(path) => curve.save(path, format)?,
            None => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                curve.write(&mut lock, format)?;
                lock.flush()?;
            }
        }
        Ok(())
    }
}

fn summarize_discrete(inst: &Instance, sweep: &BaSweep) -> Result<String, Failure> {
    let dm = d_max(&inst.source, &inst.distortion)?;
    let points = sweep.curve.points();
    if points.iter().all(|p| p.rate <= 1e-12) {
        return Ok(format!("R_S ≡ 0 (D_max = {})", dm.value));
    }
    let first = points[0];
    Ok(format!(
        "D_max = {}, R_S({:.6e}) = {:.6} (estimate of R_S(0))",
        dm.value, first.distortion, first.rate
    ))
}

fn run_rd_discrete(instance: &Path, sweep_args: &SweepArgs, output: &OutputArgs) -> Outcome {
    let opts = sweep_args.options()?;
    let inst = load(instance, Instance::load)?;
    let sweep = ba_curve(&inst.source, &inst.distortion, &opts)?;
    sweep_args.check_convergence(&sweep)?;
    eprintln!("{}", summarize_discrete(&inst, &sweep)?);
    output.emit(&sweep.curve)
}

fn run_rd_gaussian(
    spectrum: Option<&Path>,
    embeddings: Option<&Path>,
    min_bin: usize,
    log_base: Option<f64>,
    distortion_grid: Option<&str>,
    output: &OutputArgs,
) -> Outcome {
    let spectra = match (spectrum, embeddings) {
        (Some(path), _) => {
            let s = load(path, SpectrumSet::load)?;
            match log_base {
                Some(base) => SpectrumSet::new(s.bins().to_vec(), s.mean_length(), base)?,
                None => s,
            }
        }
        (None, Some(path)) => {
            let set = load(path, read_embeddings)?;
            let (spectra, grid) = estimate_spectra(&set, min_bin, log_base.unwrap_or(2.0))?;
            if grid.undersized {
                eprintln!(
                    "warning: {} records is fewer than --min-bin {min_bin}; using one bin",
                    set.len()
                );
            }
            eprintln!(
                "length grid edges: {:?}, counts: {:?}",
                grid.edges, grid.counts
            );
            spectra
        }
        (None, None) => return Err(Failure::Usage("need --spectrum or --embeddings".into())),
    };
    let grid = match distortion_grid {
        Some(text) => parse_list(text, "distortion grid")?,
        None => default_distortion_grid(&spectra, 50, 1e-3),
    };
    let curve = gaussian_curve(&spectra, &grid)?;
    eprintln!(
        "{} bins, dimension {}, mean length {}, eigenvalue mass {}",
        spectra.bins().len(),
        spectra.dimension(),
        spectra.mean_length(),
        spectra.total_mass()
    );
    output.emit(&curve)
}

fn run_eval(
    embeddings: &Path,
    summaries: &Path,
    curve: Option<&Path>,
    min_bin: usize,
    out: Option<&Path>,
) -> Outcome {
    let texts = load(embeddings, read_embeddings)?;
    let sums = load(summaries, read_embeddings)?;
    let pairs: Vec<(usize, usize)> = (0..texts.len().min(sums.len())).map(|i| (i, i)).collect();
    let pairing = Pairing::from_pairs(texts.len(), &pairs)?;
    let point = eval_summarizer_embeddings(&texts, &sums, &pairing, min_bin)?;
    if point.violations > 0 {
        eprintln!(
            "warning: {} summaries are longer than their texts",
            point.violations
        );
    }
    if let Some(path) = curve {
        let c = load(path, RDCurve::load)?;
        match c.rate_at(point.distortion) {
            Some(r) => eprintln!("bound gap R - R_S(D) = {}", point.rate - r),
            None => eprintln!(
                "distortion {} lies below the curve's range",
                point.distortion
            ),
        }
    }
    let json = point.to_json()? + "\n";
    match out {
        Some(path) => std::fs::write(path, json)?,
        None => print!("{json}"),
    }
    Ok(())
}

fn run_example1(sweep_args: &SweepArgs, output: &OutputArgs, check: bool, seed: u64) -> Outcome {
    let opts = sweep_args.options()?;
    let inst = Instance::example1();
    let kernels = Instance::example1_kernels();
    let mut one_shot = Vec::new();
    for (i, k) in kernels.iter().enumerate() {
        let d = expected_distortion(&inst.source, k, &inst.distortion)?;
        let r = summarizer_rate(&inst.source, k, &inst.distortion)?;
        eprintln!("one-shot summarizer {}: D = {d}, R = {r}", i + 1);
        one_shot.push((d, r));
    }
    let dm = d_max(&inst.source, &inst.distortion)?;
    eprintln!(
        "D_max = {}, minimizing summary \"{}\"",
        dm.value, inst.summaries[dm.classes[0].summary]
    );
    let sweep = ba_curve(&inst.source, &inst.distortion, &opts)?;
    sweep_args.check_convergence(&sweep)?;
    output.emit(&sweep.curve)?;

    if check {
        let curve = &sweep.curve;
        let first = curve.points()[0];
        let mut problems = Vec::new();
        if curve.rate_at(dm.value).is_none_or(|r| r > 1e-6) {
            problems.push("rate at D_max exceeds 1e-6".to_string());
        }
        if !curve.monotonicity_violations(1e-9).is_empty() {
            problems.push("curve increases".into());
        }
        if !curve.convexity_violations(1e-9).is_empty() {
            problems.push("curve is not convex".into());
        }
        for (i, &(d, r)) in one_shot.iter().enumerate() {
            let rs = curve
                .rate_at(d.max(first.distortion))
                .unwrap_or(f64::INFINITY);
            if rs > r - 1e-6 {
                problems.push(format!("curve is not below one-shot summarizer {}", i + 1));
            }
        }
        let est = simulate_block_converse(
            &inst.source,
            &kernels[2],
            &inst.distortion,
            16,
            10_000,
            seed,
        )?;
        let bound = curve
            .rate_at(est.distortion.max(first.distortion))
            .unwrap_or(f64::INFINITY);
        if est.rate < bound - 0.02 {
            problems.push(format!(
                "block simulation rate {} falls below the curve value {bound}",
                est.rate
            ));
        }
        if !problems.is_empty() {
            return Err(Failure::Check(problems.join("; ")));
        }
        eprintln!("all checks passed");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::RdDiscrete {
            instance,
            sweep,
            output,
        } => run_rd_discrete(instance, sweep, output),
        Command::RdGaussian {
            spectrum,
            embeddings,
            min_bin,
            log_base,
            distortion_grid,
            output,
        } => run_rd_gaussian(
            spectrum.as_deref(),
            embeddings.as_deref(),
            *min_bin,
            *log_base,
            distortion_grid.as_deref(),
            output,
        ),
        Command::Eval {
            embeddings,
            summaries,
            curve,
            min_bin,
            out,
        } => run_eval(
            embeddings,
            summaries,
            curve.as_deref(),
            *min_bin,
            out.as_deref(),
        ),
        Command::Example1 {
            sweep,
            output,
            check,
            seed,
        } => run_example1(sweep, output, *check, *seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
