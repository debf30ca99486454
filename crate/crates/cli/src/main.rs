use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use chrono::{TimeZone, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};

use railtherm::data::{
    build_hankel, fuse, read_trajectories, resample, segment_filter, write_summary, write_trajectories,
    RawRecordSet, Trajectory,
};
use railtherm::harness::{
    compare, emit_report, generate_training, raw_records, run_closed_loop, CompareOptions, Comparison,
    EnergyModel, ParamFile, Profile, RunLog, RunMode, Scenario, ScenarioConfig,
};
use railtherm::predictor::{fit, read_model, write_model, FitOptions, PredictorModel, RankFallback};

#[derive(Parser)]
#[command(name = "railtherm", version, about = "Train-coach thermal simulation and data-driven predictive control")]
struct Cli {
    /// Scenario file; its parameter, schedule and model references are used
    /// wherever a command needs them.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the scenario noise seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fuse raw hvac/weather/trips CSVs into gap-free trajectories.
    Ingest(IngestArgs),
    /// Identify a predictor from trajectory files.
    Fit(FitArgs),
    /// Multistep MAE of a model on validation trajectories.
    Evaluate(EvaluateArgs),
    /// Run the scenario in closed loop.
    Simulate(SimulateArgs),
    /// Compare two run logs.
    Compare(CompareArgs),
    /// Run both modes, compare, and write CSVs and plots.
    Report(ReportArgs),
    /// Generate synthetic inputs.
    #[command(subcommand)]
    Synth(SynthCommand),
}

#[derive(Args)]
struct IngestArgs {
    /// Directory holding hvac.csv, weather.csv and trips.csv.
    #[arg(long)]
    raw: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Sampling periods in seconds; one trajectory set per period.
    #[arg(long, num_args = 1.., default_values_t = [60.0, 300.0])]
    period: Vec<f64>,
    /// Shortest kept trajectory in samples; defaults to rho + horizon.
    #[arg(long)]
    min_len: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fallback {
    Pinv,
    Ridge,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    rho: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Expected sample period of the training data, s.
    #[arg(long, default_value_t = 300.0)]
    period: f64,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "pinv")]
    fallback: Fallback,
    #[arg(long)]
    standardize: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    validation: PathBuf,
    #[arg(long)]
    report: PathBuf,
    /// Largest acceptable mean MAE at the last horizon step, K.
    #[arg(long, default_value_t = 0.5)]
    max_mae: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Activated,
    Deactivated,
    Both,
}

#[derive(Args)]
struct Thresholds {
    /// Required savings of A over B, %.
    #[arg(long, default_value_t = 5.0)]
    min_savings: f64,
    /// Largest acceptable average hourly violation of A, K.
    #[arg(long, default_value_t = 0.1)]
    max_violation: f64,
}

#[derive(Args)]
struct CompareArgs {
    /// Run log of the candidate (usually activated).
    #[arg(long)]
    a: PathBuf,
    /// Run log of the baseline.
    #[arg(long)]
    b: PathBuf,
    /// Window start, s; defaults to the scenario's steady start.
    #[arg(long)]
    steady_start: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    thresholds: Thresholds,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, default_value = "report")]
    out: PathBuf,
    #[command(flatten)]
    thresholds: Thresholds,
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Write a built-in day profile as a schedule CSV.
    Schedule {
        #[arg(long, value_parser = parse_profile)]
        profile: Profile,
        #[arg(long, default_value_t = 90_000.0)]
        duration: f64,
        #[arg(long, default_value_t = 60.0)]
        step: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulated identification trajectories.
    Training {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        days: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Raw hvac/weather/trips CSVs recorded from a baseline run.
    Raw {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 60.0)]
        period: f64,
    },
    /// Write the default parameter file.
    Params {
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    Profile::parse(s).ok_or_else(|| format!("unknown profile `{s}` (march_like, hot_day, cold_day)"))
}

struct Ctx {
    config: ScenarioConfig,
}

impl Ctx {
    fn load(path: Option<&Path>, seed: Option<u64>) -> anyhow::Result<Self> {
        let mut config = match path {
            Some(p) => ScenarioConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => ScenarioConfig {
                name: "march_like".into(),
                profile: Some(Profile::MarchLike),
                ..ScenarioConfig::default()
            },
        };
        if let Some(s) = seed {
            config.seed = s;
            config.training.seed = s;
        }
        Ok(Ctx { config })
    }

    fn params(&self) -> anyhow::Result<ParamFile> {
        Ok(match &self.config.params {
            Some(p) => ParamFile::load(p)?,
            None => ParamFile::default(),
        })
    }

    fn energy(&self) -> anyhow::Result<EnergyModel> {
        Ok(EnergyModel::new(self.config.eta_heat, self.config.cop)?)
    }
}

/// Outcome of the checks made by a command.
#[derive(Default)]
struct Checks {
    failed: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            println!("PASS  {what}");
        } else {
            println!("FAIL  {what}");
            self.failed.push(what);
        }
    }
}

fn ingest(ctx: &Ctx, args: &IngestArgs, checks: &mut Checks) -> anyhow::Result<()> {
    let params = ctx.params()?;
    let raw = RawRecordSet::read_dir(&args.raw)?;
    let streams = fuse(&raw)?;
    let min_len = args.min_len.unwrap_or(params.ddpc.rho + params.ddpc.horizon);
    let mut summary = Vec::new();
    for &period in &args.period {
        let fragments = resample(&streams, period)?;
        let (trajs, row) = segment_filter(&fragments, min_len);
        let dir = args.out.join(format!("{}s", period));
        write_trajectories(&dir, &trajs)?;
        println!(
            "{period} s: {} trajectories, {:.1} points on average -> {}",
            row.trajectories,
            row.mean_points,
            dir.display()
        );
        checks.check(!trajs.is_empty(), format!("ingest at {period} s yields trajectories"));
        summary.push(row);
    }
    write_summary(&args.out.join("summary.csv"), &summary)?;
    Ok(())
}

fn load_trajectories(dir: &Path, period: f64) -> anyhow::Result<Vec<Trajectory>> {
    let trajs = read_trajectories(dir)?;
    if trajs.is_empty() {
        bail!("no trajectories in {}", dir.display());
    }
    if let Some(t) = trajs.iter().find(|t| (t.sample_period - period).abs() > 1e-9) {
        bail!("{} has period {} s, expected {period} s", t.id, t.sample_period);
    }
    Ok(trajs)
}

fn fit_cmd(ctx: &Ctx, args: &FitArgs, checks: &mut Checks) -> anyhow::Result<()> {
    let params = ctx.params()?;
    let rho = args.rho.unwrap_or(params.ddpc.rho);
    let horizon = args.horizon.unwrap_or(params.ddpc.horizon);
    let trajs = load_trajectories(&args.train, args.period)?;
    let hankel = build_hankel(&trajs, rho, horizon)?;
    let defaults = FitOptions::default();
    let opts = FitOptions {
        fallback: match args.fallback {
            Fallback::Pinv => defaults.fallback,
            Fallback::Ridge => RankFallback::Ridge { scale: 1e-8 },
        },
        standardize: args.standardize,
        ..defaults
    };
    let model = fit(&hankel, &opts)?;
    write_model(&args.out, &model)?;
    println!(
        "fitted rho = {rho}, T = {horizon} on {} columns ({:?}) -> {}",
        model.meta.columns,
        model.meta.regularization,
        args.out.display()
    );
    checks.check(model.h.iter().all(|v| v.is_finite()), "predictor coefficients are finite");
    Ok(())
}

fn evaluate(args: &EvaluateArgs, checks: &mut Checks) -> anyhow::Result<()> {
    let model = read_model(&args.model)?;
    let trajs = read_trajectories(&args.validation)?;
    let period = trajs.first().map_or(300.0, |t| t.sample_period);
    let report = model.evaluate_mae(&trajs)?;
    std::fs::write(&args.report, PredictorModel::mae_csv(&report, period))
        .with_context(|| format!("writing {}", args.report.display()))?;
    for (j, m) in report.per_step.iter().enumerate() {
        println!("step {:2} ({:5.1} min): MAE {m:.4} K", j + 1, (j + 1) as f64 * period / 60.0);
    }
    let last = report.per_step.last().copied().unwrap_or(f64::NAN);
    checks.check(
        last <= args.max_mae,
        format!("MAE at the last step {last:.4} K <= {} K over {} windows", args.max_mae, report.windows),
    );
    Ok(())
}

fn check_run(log: &RunLog, sc: &Scenario, checks: &mut Checks) {
    if log.ddpc.is_empty() {
        return;
    }
    let cfg = &sc.params.ddpc;
    let solved = log.ddpc.iter().filter(|r| r.status == "Optimal").count();
    let warm = log.ddpc.iter().filter(|r| r.status == "WarmUp").count();
    checks.check(
        solved + warm == log.ddpc.len(),
        format!("{}: {solved} of {} solves optimal", log.label, log.ddpc.len() - warm),
    );
    let kkt = log.kkt.iter().copied().filter(|v| !v.is_nan()).fold(0.0, f64::max);
    checks.check(kkt <= 1e-6, format!("{}: KKT residuals <= 1e-6 (max {kkt:.2e})", log.label));
    let band = log.ddpc.iter().map(|r| (r.u_star - r.t_rule).abs()).fold(0.0, f64::max);
    checks.check(
        band <= cfg.setpoint_band + 1e-6,
        format!("{}: |u - t_rule| <= {} K (max {band:.4})", log.label, cfg.setpoint_band),
    );
    let rate = log
        .ddpc
        .windows(2)
        .map(|w| (w[1].u_star - w[0].u_star).abs())
        .fold(0.0, f64::max);
    checks.check(
        rate <= cfg.delta_t_max + 1e-6,
        format!("{}: |du| <= {} K (max {rate:.4})", log.label, cfg.delta_t_max),
    );
}

fn run_modes(sc: &Scenario, mode: RunMode) -> anyhow::Result<Vec<RunLog>> {
    let mut logs = Vec::new();
    if matches!(mode, RunMode::Activated | RunMode::Both) {
        logs.push(run_closed_loop(sc, true)?);
    }
    if matches!(mode, RunMode::Deactivated | RunMode::Both) {
        logs.push(run_closed_loop(sc, false)?);
    }
    for log in &logs {
        println!("{}: {:.3} kWh", log.label, log.energy_kwh);
    }
    Ok(logs)
}

fn print_comparison(c: &Comparison) {
    println!(
        "window {:.0}..{:.0} s: {} {:.3} kWh, {} {:.3} kWh, surrogate savings {:.2} %",
        c.window_start_s, c.window_end_s, c.label_a, c.energy_a_kwh, c.label_b, c.energy_b_kwh, c.savings_pct
    );
    println!(
        "average hourly violation: {} {:.4} K, {} {:.4} K",
        c.label_a, c.violation_a, c.label_b, c.violation_b
    );
}

fn check_comparison(c: &Comparison, t: &Thresholds, checks: &mut Checks) {
    checks.check(
        c.savings_pct >= t.min_savings,
        format!("savings {:.2} % >= {} %", c.savings_pct, t.min_savings),
    );
    checks.check(
        c.violation_a <= t.max_violation,
        format!("violation {:.4} K <= {} K", c.violation_a, t.max_violation),
    );
}

fn simulate(ctx: &Ctx, args: &SimulateArgs, checks: &mut Checks) -> anyhow::Result<()> {
    let mut config = ctx.config.clone();
    if let Some(m) = args.mode {
        config.mode = match m {
            ModeArg::Activated => RunMode::Activated,
            ModeArg::Deactivated => RunMode::Deactivated,
            ModeArg::Both => RunMode::Both,
        };
    }
    let sc = config.resolve()?;
    let logs = run_modes(&sc, config.mode)?;
    for log in &logs {
        check_run(log, &sc, checks);
    }
    let cmp = if let [a, b] = logs.as_slice() {
        let c = compare(a, b, &compare_options(&sc, None, ctx.energy()?))?;
        print_comparison(&c);
        Some(c)
    } else {
        None
    };
    let written = emit_report(&args.out, &logs, cmp.as_ref(), sc.params.ddpc.t_max, &ctx.energy()?)?;
    println!("wrote {} files to {}", written.len(), args.out.display());
    Ok(())
}

fn compare_options(sc: &Scenario, steady_start: Option<f64>, energy: EnergyModel) -> CompareOptions {
    CompareOptions {
        energy,
        ..CompareOptions::new(steady_start.unwrap_or(sc.steady_start()), sc.params.ddpc.t_max)
    }
}

fn compare_cmd(ctx: &Ctx, args: &CompareArgs, checks: &mut Checks) -> anyhow::Result<()> {
    let params = ctx.params()?;
    let energy = ctx.energy()?;
    let a = RunLog::read_csv(&args.a, "a", &energy)?;
    let b = RunLog::read_csv(&args.b, "b", &energy)?;
    let start = args.steady_start.unwrap_or(ctx.config.steady_start(params.ddpc.rho));
    let opts = CompareOptions {
        energy,
        ..CompareOptions::new(start, params.ddpc.t_max)
    };
    let c = compare(&a, &b, &opts)?;
    print_comparison(&c);
    if let Some(dir) = &args.out {
        emit_report(dir, &[], Some(&c), params.ddpc.t_max, &energy)?;
    }
    check_comparison(&c, &args.thresholds, checks);
    Ok(())
}

fn report(ctx: &Ctx, args: &ReportArgs, checks: &mut Checks) -> anyhow::Result<()> {
    let sc = ctx.config.resolve()?;
    let logs = run_modes(&sc, RunMode::Both)?;
    for log in &logs {
        check_run(log, &sc, checks);
    }
    let c = compare(&logs[0], &logs[1], &compare_options(&sc, None, ctx.energy()?))?;
    print_comparison(&c);
    check_comparison(&c, &args.thresholds, checks);
    let written = emit_report(&args.out, &logs, Some(&c), sc.params.ddpc.t_max, &ctx.energy()?)?;
    println!("wrote {} files to {}", written.len(), args.out.display());
    Ok(())
}

fn synth(ctx: &Ctx, cmd: &SynthCommand) -> anyhow::Result<()> {
    match cmd {
        SynthCommand::Schedule {
            profile,
            duration,
            step,
            out,
        } => {
            let s = profile.generate(*duration, *step)?;
            s.write_csv(out)?;
            println!("{} entries -> {}", s.len(), out.display());
        }
        SynthCommand::Training { out, days, noise } => {
            let mut spec = ctx.config.training.clone();
            if let Some(d) = days {
                spec.days = *d;
            }
            if let Some(n) = noise {
                spec.noise_std = *n;
            }
            let trajs = generate_training(&ctx.params()?, &spec)?;
            write_trajectories(out, &trajs)?;
            println!("{} trajectories -> {}", trajs.len(), out.display());
        }
        SynthCommand::Raw { out, period } => {
            let mut config = ctx.config.clone();
            config.mode = RunMode::Deactivated;
            let sc = config.resolve()?;
            let log = run_closed_loop(&sc, false)?;
            let start = Utc.with_ymd_and_hms(2024, 3, 1, 0, 0, 0).unwrap();
            let raw = raw_records(&log, start, *period, (47.3769, 8.5417))?;
            raw.write_dir(out)?;
            println!("{} hvac records -> {}", raw.hvac.len(), out.display());
        }
        SynthCommand::Params { out } => {
            ParamFile::default().save(out)?;
            println!("default parameters -> {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let mut checks = Checks::default();
    let result = Ctx::load(cli.config.as_deref(), cli.seed).and_then(|ctx| match &cli.command {
        Command::Ingest(a) => ingest(&ctx, a, &mut checks),
        Command::Fit(a) => fit_cmd(&ctx, a, &mut checks),
        Command::Evaluate(a) => evaluate(a, &mut checks),
        Command::Simulate(a) => simulate(&ctx, a, &mut checks),
        Command::Compare(a) => compare_cmd(&ctx, a, &mut checks),
        Command::Report(a) => report(&ctx, a, &mut checks),
        Command::Synth(c) => synth(&ctx, c),
    });
    match result {
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Ok(()) if checks.failed.is_empty() => ExitCode::SUCCESS,
        Ok(()) => {
            eprintln!("{} check(s) failed", checks.failed.len());
            ExitCode::FAILURE
        }
    }
}
