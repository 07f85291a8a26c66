//! hdrband: bandwidth selection and highest-density-region estimation on
//! one-dimensional samples, plus the risk-curve and selector-comparison
//! harnesses. All outputs are UTF-8 CSV or JSON.
//!
//! Exit codes: 0 success, 2 usage or data errors, 3 numeric pipeline
//! failures (the message carries the pipeline step).

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hdrband::density::Sample;
use hdrband::hdr::{extract_region, level_for_tau};
use hdrband::kernel::kernel_constants;
use hdrband::models::NormalMixture;
use hdrband::optim::log_grid;
use hdrband::risk::{
    asymptotic_risk_in_h, compare_selectors, monte_carlo_risk, write_risk_curve_csv,
    RiskCoefficients,
};
use hdrband::selector::{hdr_bandwidth, SelectorConfig};

#[derive(Parser)]
#[command(
    name = "hdrband",
    version,
    about = "Kernel HDR estimation with tailored bandwidth selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SelectorFlags {
    /// Reproduce the printed stage constants digit for digit instead of the
    /// exact kernel-derivative constants.
    #[arg(long, global = true)]
    paper_literal_constants: bool,
    /// Grid resolution for binned evaluation.
    #[arg(long, default_value_t = 1024)]
    grid: usize,
    /// Use exact O(n^2) summation instead of linear binning.
    #[arg(long)]
    exact: bool,
}

impl SelectorFlags {
    fn config(&self) -> SelectorConfig {
        SelectorConfig {
            paper_literal_constants: self.paper_literal_constants,
            binned: !self.exact,
            grid_points: self.grid,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the HDR plug-in bandwidth selector on a sample file; prints the
    /// full selector report as JSON.
    Select {
        /// Input sample: one number per line, or a single-column CSV with
        /// an optional header.
        #[arg(long)]
        input: PathBuf,
        /// Coverage parameter in (0, 1): the target region holds mass 1 - tau.
        #[arg(long)]
        tau: f64,
        #[command(flatten)]
        flags: SelectorFlags,
        /// Write output here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Estimate the HDR of a sample: prints the level and the intervals.
    Hdr {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        tau: f64,
        /// Bandwidth to use; defaults to the plug-in selector's choice.
        #[arg(long)]
        bandwidth: Option<f64>,
        #[command(flatten)]
        flags: SelectorFlags,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Tabulate the Monte Carlo risk curve and its closed-form
    /// approximation for a reference mixture.
    RiskCurve {
        /// Preset name (normal, mw1..mw10), a path to a mixture JSON file,
        /// or inline JSON.
        #[arg(long)]
        model: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        tau: f64,
        /// Monte Carlo replications per bandwidth.
        #[arg(long, default_value_t = 100)]
        mc_reps: usize,
        #[arg(long, default_value_t = 0.05)]
        h_min: f64,
        #[arg(long, default_value_t = 1.0)]
        h_max: f64,
        #[arg(long, default_value_t = 20)]
        h_count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare the HDR selector against least-squares cross-validation on
    /// simulated samples; prints per-replication errors and a summary.
    Simulate {
        #[arg(long)]
        model: String,
        #[arg(long)]
        n: usize,
        /// Comma-separated coverage parameters.
        #[arg(long, value_delimiter = ',')]
        taus: Vec<f64>,
        #[arg(long)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        flags: SelectorFlags,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Dump the exact HDR oracle and risk coefficients of a reference
    /// mixture (test aid).
    Oracle {
        #[arg(long)]
        model: String,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

enum Failure {
    /// Usage or data problem: exit 2.
    Data(String),
    /// Numeric pipeline problem: exit 3.
    Pipeline(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Data(_) => 2,
            Failure::Pipeline(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Data(m) | Failure::Pipeline(m) => m,
        }
    }
}

fn classify(err: hdrband::Error) -> Failure {
    use hdrband::Error::*;
    match &err {
        InvalidMixture(_) | InvalidSample(_) | InvalidTau(_) => Failure::Data(err.to_string()),
        SelectorStep { step: 1, .. } => Failure::Data(err.to_string()),
        _ => Failure::Pipeline(err.to_string()),
    }
}

fn read_sample(path: &PathBuf) -> Result<Sample, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let cell = line.trim().trim_end_matches(',');
        if cell.is_empty() {
            continue;
        }
        match cell.parse::<f64>() {
            Ok(v) => values.push(v),
            // a single non-numeric first line is a CSV header
            Err(_) if idx == 0 => continue,
            Err(_) => {
                return Err(Failure::Data(format!(
                    "line {}: cannot parse {cell:?} as a number",
                    idx + 1
                )))
            }
        }
    }
    if values.is_empty() {
        return Err(Failure::Data(format!(
            "{}: no numeric values found",
            path.display()
        )));
    }
    Sample::new(values).map_err(classify)
}

fn parse_model(spec: &str) -> Result<NormalMixture, Failure> {
    if let Some(m) = NormalMixture::preset(spec) {
        return Ok(m);
    }
    if spec.trim_start().starts_with('{') {
        return NormalMixture::from_json(spec).map_err(classify);
    }
    let path = PathBuf::from(spec);
    if path.exists() {
        let text = fs::read_to_string(&path)
            .map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
        return NormalMixture::from_json(&text).map_err(classify);
    }
    Err(Failure::Data(format!(
        "unknown model {spec:?}; presets are: {}",
        NormalMixture::preset_names().join(", ")
    )))
}

fn check_tau(tau: f64) -> Result<(), Failure> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Failure::Data(format!(
            "tau must lie strictly between 0 and 1, got {tau}"
        )))
    }
}

fn emit(output: &Option<PathBuf>, content: &str) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, content)
            .map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            std::io::stdout()
                .flush()
                .map_err(|e| Failure::Data(format!("stdout: {e}")))
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Select {
            input,
            tau,
            flags,
            output,
        } => {
            check_tau(tau)?;
            let sample = read_sample(&input)?;
            let report = hdr_bandwidth(&sample, tau, &flags.config()).map_err(classify)?;
            emit(&output, &format!("{}\n", report.to_json()))
        }
        Command::Hdr {
            input,
            tau,
            bandwidth,
            flags,
            output,
        } => {
            check_tau(tau)?;
            let sample = read_sample(&input)?;
            let h = match bandwidth {
                Some(h) if h > 0.0 => h,
                Some(h) => {
                    return Err(Failure::Data(format!(
                        "bandwidth must be positive, got {h}"
                    )))
                }
                None => {
                    hdr_bandwidth(&sample, tau, &flags.config())
                        .map_err(classify)?
                        .bandwidth
                }
            };
            let config = flags.config();
            let grid = hdrband::density::EvaluationGrid::spanning(&sample, h, config.grid_points)
                .map_err(classify)?;
            let (grid, binned) = if config.binned {
                (
                    hdrband::density::linear_bin(&sample, &grid).map_err(classify)?,
                    true,
                )
            } else {
                (grid, false)
            };
            let curve =
                hdrband::density::kde_on_grid(&sample, h, 0, &grid, binned).map_err(classify)?;
            let level = level_for_tau(&curve, tau).map_err(classify)?;
            let region = extract_region(&curve, level);
            let mut out = String::new();
            out.push_str(&format!("level,{level}\n"));
            out.push_str(&format!("bandwidth,{h}\n"));
            out.push_str("lo,hi\n");
            for iv in region.intervals() {
                out.push_str(&format!("{},{}\n", iv[0], iv[1]));
            }
            emit(&output, &out)
        }
        Command::RiskCurve {
            model,
            n,
            tau,
            mc_reps,
            h_min,
            h_max,
            h_count,
            seed,
            output,
        } => {
            check_tau(tau)?;
            if mc_reps == 0 {
                return Err(Failure::Data(
                    "need at least one Monte Carlo replication".into(),
                ));
            }
            if n < 2 {
                return Err(Failure::Data(format!("need n >= 2, got {n}")));
            }
            if !(h_min > 0.0 && h_max > h_min) {
                return Err(Failure::Data(format!(
                    "need 0 < h-min < h-max, got [{h_min}, {h_max}]"
                )));
            }
            if h_count < 2 {
                return Err(Failure::Data(format!(
                    "need at least 2 bandwidths, got {h_count}"
                )));
            }
            let mixture = parse_model(&model)?;
            let h_values = log_grid(h_min, h_max, h_count);
            let points =
                monte_carlo_risk(&mixture, n, tau, &h_values, mc_reps, seed).map_err(classify)?;
            let mut rows = Vec::new();
            write_risk_curve_csv(&points, &mut rows).expect("write to memory");
            let mut out = String::from_utf8(rows).expect("CSV is UTF-8");
            let (mut best_mc, mut argmin_mc) = (f64::INFINITY, f64::NAN);
            for p in &points {
                let mc = p.monte_carlo.unwrap();
                if mc.mean < best_mc {
                    best_mc = mc.mean;
                    argmin_mc = p.h;
                }
            }
            // dense argmin of the approximation over the same range
            let rc = RiskCoefficients::from_oracle(
                &mixture.hdr_oracle(tau).map_err(classify)?,
                &kernel_constants(),
            )
            .map_err(classify)?;
            let (mut best_asym, mut argmin_asym) = (f64::INFINITY, f64::NAN);
            for h in log_grid(h_min, h_max, 20_000) {
                let v = asymptotic_risk_in_h(h, n, &rc);
                if v < best_asym {
                    best_asym = v;
                    argmin_asym = h;
                }
            }
            out.push_str(&format!(
                "# argmin_mc,{argmin_mc}\n# argmin_asym,{argmin_asym}\n"
            ));
            emit(&output, &out)
        }
        Command::Simulate {
            model,
            n,
            taus,
            reps,
            seed,
            flags,
            output,
        } => {
            if taus.is_empty() {
                return Err(Failure::Data("need at least one tau".into()));
            }
            for &tau in &taus {
                check_tau(tau)?;
            }
            if reps < 2 {
                return Err(Failure::Data(format!(
                    "need at least 2 replications, got {reps}"
                )));
            }
            let mixture = parse_model(&model)?;
            let result = compare_selectors(&mixture, n, &taus, reps, seed, &flags.config())
                .map_err(classify)?;
            let mut rows = Vec::new();
            result.write_csv(&mut rows).expect("write to memory");
            emit(&output, &String::from_utf8(rows).expect("CSV is UTF-8"))
        }
        Command::Oracle { model, tau, output } => {
            check_tau(tau)?;
            let mixture = parse_model(&model)?;
            let oracle = mixture.hdr_oracle(tau).map_err(classify)?;
            let coefficients =
                RiskCoefficients::from_oracle(&oracle, &kernel_constants()).map_err(classify)?;
            let doc = serde_json::json!({
                "model": mixture,
                "oracle": oracle,
                "coefficients": coefficients,
            });
            emit(
                &output,
                &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()),
            )
        }
    }
}

fn main() -> ExitCode {
    // cap the rayon pool if asked
    if let Ok(spec) = std::env::var("HDRBAND_THREADS") {
        if let Ok(threads) = spec.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
