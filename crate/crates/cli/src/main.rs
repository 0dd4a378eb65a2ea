//! `itersurv`: survival probabilities of iterated stochastic processes.

use clap::{Args, Parser, Subcommand};
use itersurv_cli::config::parse_config_file;
use itersurv_cli::presets::{lookup_preset, preset_listing, scale_budget};
use itersurv_cli::runner::{check_gate_inputs, execute, RunSpec};
use itersurv_core::estimation::{
    estimate_survival, fit_csv, fit_exponent, survival_csv, PlanItem, SurvivalEstimate,
};
use itersurv_core::fluctuation::{
    ladder_height_tail_probe, negative_moment_estimate, normalized_barrier_check,
    small_deviation_curve,
};
use itersurv_core::generators::{gen_counterexample_values, IncrementLaw, LevySpec, ProcessSpec};
use itersurv_core::generators::{FbmSpec, IbmSpec};
use itersurv_core::grid::TimeGrid;
use itersurv_core::oracles;
use itersurv_core::rng::{derive_stream, StreamKey};
use itersurv_core::validate::run_validation;
use itersurv_core::{Error, Result, Seed};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "itersurv",
    version,
    about = "Survival exponents of iterated stochastic processes",
    after_help = "Defaults: barrier 1.0, 99% intervals, all cores \
                  (cap with ITERSURV_THREADS). Preset runs exit 0 iff the \
                  fitted slope lands within the preset tolerance."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample bare process paths; prints path,t,x CSV
    Paths(PathsArgs),
    /// One survival estimate for a preset's scenario at one horizon
    Survival(SurvivalArgs),
    /// Fit ln p against ln T from a survival CSV
    Fit(FitArgs),
    /// Fluctuation probes
    #[command(subcommand)]
    Probe(ProbeCmd),
    /// Exact small-case probabilities
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Run an experiment described by a TOML config
    Experiment(ExperimentArgs),
    /// Run a named preset experiment
    Preset(PresetArgs),
    /// Run the module invariant suite
    Validate {
        /// Cap sample budgets at 10^4
        #[arg(long)]
        quick: bool,
    },
    /// List preset names
    ListPresets,
}

#[derive(Args)]
struct PathsArgs {
    /// bm | ibm-<n> | fbm-<H> | walk | counterexample
    #[arg(long)]
    process: String,
    #[arg(long)]
    horizon: f64,
    /// Grid pitch for continuous processes
    #[arg(long, default_value_t = 0.015625)]
    step: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: u64,
}

#[derive(Args)]
struct SurvivalArgs {
    preset: String,
    #[arg(long)]
    horizon: f64,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long)]
    barrier: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0.99)]
    ci: f64,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 25)]
    k_min: u64,
}

#[derive(Subcommand)]
enum ProbeCmd {
    /// P(sup_{[0,1]} |Y| <= eps) across eps levels
    SmallDev {
        #[arg(long, default_value = "bm")]
        process: String,
        /// Comma-separated eps levels
        #[arg(long, default_value = "0.5,0.75,1.0")]
        eps: String,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// P(M_N <= N^a)·sqrt(N)/N^a against sqrt(2/(pi E[Y^2]))
    BarrierRatio {
        /// rademacher | gaussian | laplace (centered, unit parameters)
        #[arg(long, default_value = "rademacher")]
        law: String,
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        #[arg(long, default_value_t = 0.4)]
        a: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Tail of the first ascending ladder height
    LadderTail {
        #[arg(long, default_value = "rademacher")]
        law: String,
        /// Comma-separated thresholds
        #[arg(long, default_value = "0.5,1,2")]
        thresholds: String,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// E[(sup_{[0,1]} |Y|)^-eta]
    NegMoment {
        #[arg(long, default_value = "bm")]
        process: String,
        #[arg(long, default_value_t = 0.5)]
        eta: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// P(max of an N-step symmetric walk <= barrier), dynamic programming
    SrwMax {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        barrier: i64,
    },
    /// Same event for the walk-at-walk-times composition, enumeration
    SrwIter {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        barrier: i64,
    },
    /// P(sup_{[0,1]} |W| <= eps), series
    BmSmalldev {
        #[arg(long)]
        eps: f64,
    },
    /// Spike-process survival 1/(floor(t + 1/2) + 1)
    Counterexample {
        #[arg(long)]
        t: f64,
    },
    /// P(sup_{[0,T]} W <= x), reflection principle
    BmSurvival {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        x: f64,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "results/experiment")]
    out: PathBuf,
}

#[derive(Args)]
struct PresetArgs {
    name: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Multiply all sample budgets (0.01 for a smoke run, 10 for depth)
    #[arg(long)]
    budget_scale: Option<f64>,
    /// Output directory; defaults to results/<name>
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_process(token: &str) -> Result<ProcessSpec> {
    if token == "bm" {
        return Ok(ProcessSpec::Levy(LevySpec::brownian(1.0)));
    }
    if token == "walk" {
        return Ok(ProcessSpec::Walk { law: IncrementLaw::Rademacher });
    }
    if token == "counterexample" {
        return Ok(ProcessSpec::Counterexample);
    }
    if let Some(rest) = token.strip_prefix("ibm-") {
        let order = rest
            .parse()
            .map_err(|_| Error::config(format!("integrator order in '{token}' must be an integer")))?;
        return Ok(ProcessSpec::IntegratedBm(IbmSpec { order }));
    }
    if let Some(rest) = token.strip_prefix("fbm-") {
        let hurst = rest
            .parse()
            .map_err(|_| Error::config(format!("Hurst index in '{token}' must be a number")))?;
        return Ok(ProcessSpec::Fbm(FbmSpec { hurst, two_sided: false }));
    }
    Err(Error::config(format!(
        "unknown process '{token}'; expected bm, ibm-<n>, fbm-<H>, walk, counterexample"
    )))
}

fn parse_law(token: &str) -> Result<IncrementLaw> {
    match token {
        "rademacher" => Ok(IncrementLaw::Rademacher),
        "gaussian" => Ok(IncrementLaw::Gaussian { mean: 0.0, sd: 1.0 }),
        "laplace" => Ok(IncrementLaw::Laplace { mean: 0.0, scale: 1.0 }),
        _ => Err(Error::config(format!(
            "unknown step law '{token}'; expected rademacher, gaussian, laplace"
        ))),
    }
}

fn parse_f64_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("'{s}' is not a number")))
        })
        .collect()
}

fn cmd_paths(args: &PathsArgs) -> Result<()> {
    let spec = parse_process(&args.process)?;
    spec.validate()?;
    println!("path,t,x");
    for sample in 0..args.count {
        let mut stream = derive_stream(Seed(args.seed), StreamKey::new(0, 0, sample, 0));
        match &spec {
            ProcessSpec::Counterexample => {
                // Spikes at n - 1/2; zero elsewhere. Print the spike times.
                let m = args.horizon.floor().max(0.0) as usize + 1;
                let values = gen_counterexample_values(m, &mut stream);
                for (n, v) in values.iter().enumerate() {
                    let t = (n + 1) as f64 - 0.5;
                    if t <= args.horizon {
                        println!("{sample},{t},{v}");
                    }
                }
            }
            ProcessSpec::Walk { .. } => {
                let steps = args.horizon.floor() as usize;
                let grid = TimeGrid::new(1.0, steps.max(1))?;
                let path = spec.sample(grid, &mut stream)?;
                for (k, v) in path.values().iter().enumerate() {
                    println!("{sample},{k},{v}");
                }
            }
            _ => {
                let cells = (args.horizon / args.step).ceil().max(1.0) as usize;
                let grid = TimeGrid::new(args.step, cells)?;
                let path = spec.sample(grid, &mut stream)?;
                for (k, v) in path.values().iter().enumerate() {
                    println!("{sample},{},{v}", grid_time(args.step, k));
                }
            }
        }
    }
    Ok(())
}

fn grid_time(step: f64, k: usize) -> f64 {
    step * k as f64
}

fn cmd_survival(args: &SurvivalArgs) -> Result<()> {
    let preset = lookup_preset(&args.preset)?;
    let item = PlanItem {
        horizon: args.horizon,
        barrier: args.barrier.unwrap_or(preset.plan.barrier),
        n_samples: args.samples,
        ci_level: args.ci,
        seed: args.seed.map_or(preset.plan.seed, Seed),
        scenario_index: preset.plan.scenario_index,
        grid_index: 0,
        parallel: true,
    };
    let est = estimate_survival(&preset.plan.scenario, &item)?;
    print!("{}", survival_csv(std::slice::from_ref(&est)));
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", args.input.display())))?;
    let points = parse_survival_csv(&text)?;
    let fit = fit_exponent(&points, args.k_min)?;
    print!("{}", fit_csv(&fit));
    Ok(())
}

fn parse_survival_csv(text: &str) -> Result<Vec<SurvivalEstimate>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header.trim() != "T,p_hat,ci_low,ci_high,n_samples,n_survived" {
        return Err(Error::config(format!(
            "expected header T,p_hat,ci_low,ci_high,n_samples,n_survived, got '{header}'"
        )));
    }
    let mut points = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(Error::config(format!("line {}: expected 6 columns", idx + 2)));
        }
        let f = |j: usize| -> Result<f64> {
            cols[j]
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("line {}: '{}' is not a number", idx + 2, cols[j])))
        };
        points.push(SurvivalEstimate {
            horizon: f(0)?,
            barrier: 1.0,
            p_hat: f(1)?,
            ci_low: f(2)?,
            ci_high: f(3)?,
            n_samples: f(4)? as u64,
            n_survived: f(5)? as u64,
        });
    }
    Ok(points)
}

fn cmd_probe(cmd: &ProbeCmd) -> Result<()> {
    match cmd {
        ProbeCmd::SmallDev { process, eps, samples, seed } => {
            let spec = parse_process(process)?;
            let eps = parse_f64_list(eps)?;
            let pts = small_deviation_curve(&spec, &eps, *samples, Seed(*seed))?;
            let is_bm = matches!(&spec, ProcessSpec::Levy(l) if l.is_centered_diffusion());
            println!("eps,p_hat,ci_low,ci_high,exact");
            for p in pts {
                let exact = if is_bm {
                    format!("{}", oracles::bm_small_dev_exact(p.eps).value)
                } else {
                    String::new()
                };
                println!("{},{},{},{},{exact}", p.eps, p.p_hat, p.ci_low, p.ci_high);
            }
        }
        ProbeCmd::BarrierRatio { law, n, a, samples, seed } => {
            let law = parse_law(law)?;
            let check = normalized_barrier_check(&law, *n, *a, *samples, Seed(*seed))?;
            println!("ratio,ci_low,ci_high,target,barrier,n_samples,n_survived");
            println!(
                "{},{},{},{},{},{},{}",
                check.ratio,
                check.ci_low,
                check.ci_high,
                check.target,
                check.barrier,
                check.n_samples,
                check.n_survived
            );
        }
        ProbeCmd::LadderTail { law, thresholds, samples, seed } => {
            let law = parse_law(law)?;
            let th = parse_f64_list(thresholds)?;
            let probe = ladder_height_tail_probe(&law, *samples, Seed(*seed), &th)?;
            println!("threshold,tail");
            for (t, p) in probe.thresholds.iter().zip(&probe.tail) {
                println!("{t},{p}");
            }
            println!("# used {}, excluded {}", probe.n_used, probe.n_excluded);
        }
        ProbeCmd::NegMoment { process, eta, samples, seed } => {
            let spec = parse_process(process)?;
            let est = negative_moment_estimate(&spec, *eta, *samples, Seed(*seed))?;
            println!("eta,estimate,std_error,unstable,n_samples");
            println!(
                "{},{},{},{},{}",
                est.eta, est.estimate, est.std_error, est.unstable, est.n_samples
            );
        }
    }
    Ok(())
}

fn cmd_oracle(cmd: &OracleCmd) -> Result<()> {
    let p = match cmd {
        OracleCmd::SrwMax { n, barrier } => oracles::srw_max_dp(*n, *barrier),
        OracleCmd::SrwIter { n, barrier } => oracles::srw_iterated_enum(*n, *barrier)?,
        OracleCmd::BmSmalldev { eps } => oracles::bm_small_dev_exact(*eps),
        OracleCmd::Counterexample { t } => oracles::counterexample_survival_exact(*t),
        OracleCmd::BmSurvival { t, x } => oracles::bm_survival_closed_form(*t, *x),
    };
    println!("{} ({})", p.value, p.method.as_str());
    Ok(())
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<i32> {
    let parsed = parse_config_file(&args.config)?;
    check_gate_inputs(&parsed.plan, parsed.tolerance)?;
    let spec = RunSpec {
        name: format!("config:{}", args.config.display()),
        plan: parsed.plan,
        tolerance: parsed.tolerance,
        gating: parsed.tolerance.is_some(),
    };
    Ok(execute(&spec, &args.out)?.exit_code)
}

fn cmd_preset(args: &PresetArgs) -> Result<i32> {
    let mut preset = match lookup_preset(&args.name) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{e}");
            eprintln!("available presets:");
            for (name, summary) in preset_listing() {
                eprintln!("  {name:<24} {summary}");
            }
            return Ok(2);
        }
    };
    if let Some(seed) = args.seed {
        preset.plan.seed = Seed(seed);
    }
    if let Some(factor) = args.budget_scale {
        scale_budget(&mut preset.plan.budget, factor)?;
    }
    if let Some(tol) = args.tolerance {
        check_gate_inputs(&preset.plan, Some(tol))?;
        preset.tolerance = tol;
    }
    let out_dir = args.out.clone().unwrap_or_else(|| PathBuf::from("results").join(&preset.name));
    let spec = RunSpec {
        name: preset.name.clone(),
        plan: preset.plan.clone(),
        tolerance: Some(preset.tolerance),
        gating: preset.gating,
    };
    Ok(execute(&spec, &out_dir)?.exit_code)
}

fn cmd_validate(quick: bool) -> i32 {
    let report = run_validation(quick);
    for check in &report.checks {
        let tag = if check.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:<32} {}", check.name, check.detail);
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    println!(
        "{} checks, {} failed ({} mode)",
        report.checks.len(),
        failed,
        if report.quick { "quick" } else { "full" }
    );
    i32::from(failed > 0)
}

fn configure_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("ITERSURV_THREADS") {
        let n: usize = raw
            .parse()
            .map_err(|_| Error::config(format!("ITERSURV_THREADS must be an integer, got '{raw}'")))?;
        if n == 0 {
            return Err(Error::config("ITERSURV_THREADS must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    match &cli.command {
        Command::Paths(args) => cmd_paths(args).map(|_| 0),
        Command::Survival(args) => cmd_survival(args).map(|_| 0),
        Command::Fit(args) => cmd_fit(args).map(|_| 0),
        Command::Probe(cmd) => cmd_probe(cmd).map(|_| 0),
        Command::Oracle(cmd) => cmd_oracle(cmd).map(|_| 0),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Preset(args) => cmd_preset(args),
        Command::Validate { quick } => Ok(cmd_validate(*quick)),
        Command::ListPresets => {
            for (name, summary) in preset_listing() {
                println!("{name:<24} {summary}");
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("{e}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
