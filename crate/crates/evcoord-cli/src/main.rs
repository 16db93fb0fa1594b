//! Command-line front end: scenario generation, optimization, schedule
//! validation, and KPI reporting as reproducible runs.

use std::ops::Range;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use evcoord::fleet::OperationTimeConfig;
use evcoord::hho::{optimize, HhoParams};
use evcoord::metrics::{
    self, co2_savings_kg, energy_flexibility_pct, hypervolume_pair, nadir_point, pearson,
    preference_deviation_report, ratio_non_dominated, MetricsReport,
};
use evcoord::scenario::{
    assemble_scenario, build_scenario, gen_fleet, gen_locations, gen_time_preferences, FleetSpec,
    PreferenceStrategy, Scenario, ScenarioConfig,
};
use evcoord::schedule::{validate_schedule, ConstraintConfig, ScheduleMatrix};
use evcoord::{io, seeded_rng, streams};

#[derive(Parser)]
#[command(
    name = "evcoord",
    about = "Day-ahead EV fleet coordination for microgrid balancing",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a fleet around the given stations and bundle a scenario.
    Generate(GenerateArgs),
    /// Run the optimizer and write schedule, archive, convergence log, and metrics.
    Optimize(OptimizeArgs),
    /// Check a schedule against a scenario; exits nonzero on violations.
    Validate(ValidateArgs),
    /// Recompute the KPI report from stored artifacts.
    Metrics(MetricsArgs),
}

#[derive(Args)]
struct SharedConfig {
    /// Master seed; all randomness derives from it through named streams.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Balance deadband: slots within +/- this many kWh need no action.
    #[arg(long, default_value_t = 1.0)]
    epsilon_balance: f64,
    /// Minimum remaining battery cycles required for a discharge.
    #[arg(long, default_value_t = 10)]
    min_cycles: u32,
    /// Fallback distance limit for vehicles without their own, km.
    #[arg(long, default_value_t = 10.0)]
    max_distance_km: f64,
    /// Energy lost in the battery-to-grid conversion, fraction.
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    /// Slow-condition time penalty added to every operation, hours.
    #[arg(long, default_value_t = 0.1)]
    delta_t: f64,
    /// Efficiency of the charger-to-battery power transfer.
    #[arg(long, default_value_t = 0.95)]
    power_factor: f64,
    /// Slot duration, hours.
    #[arg(long, default_value_t = 1.0)]
    slot_hours: f64,
    /// Service window override as START..END slot indices, e.g. 7..15.
    #[arg(long, value_parser = parse_window)]
    window: Option<Range<usize>>,
}

impl SharedConfig {
    fn scenario_config(&self) -> ScenarioConfig {
        ScenarioConfig {
            constraints: ConstraintConfig {
                epsilon_balance_kwh: self.epsilon_balance,
                min_cycles: self.min_cycles,
                default_max_distance_km: self.max_distance_km,
            },
            operation: OperationTimeConfig {
                power_factor: self.power_factor,
                slow_condition_penalty_h: self.delta_t,
                conversion_loss: self.sigma,
                slot_duration_h: self.slot_hours,
            },
            window_override: self.window.clone(),
            uncertainty: None,
        }
    }
}

fn parse_window(s: &str) -> Result<Range<usize>, String> {
    let (start, end) = s
        .split_once("..")
        .ok_or_else(|| format!("expected START..END, got '{s}'"))?;
    let start: usize = start.trim().parse().map_err(|e| format!("bad start: {e}"))?;
    let end: usize = end.trim().parse().map_err(|e| format!("bad end: {e}"))?;
    if start > end {
        return Err(format!("window start {start} after end {end}"));
    }
    Ok(start..end)
}

#[derive(Args)]
struct GenerateArgs {
    /// Station list, JSON.
    #[arg(long)]
    stations: PathBuf,
    /// Generation forecast curve, CSV.
    #[arg(long)]
    generation: PathBuf,
    /// Consumption forecast curve, CSV.
    #[arg(long)]
    consumption: PathBuf,
    /// Output directory for the scenario bundle.
    #[arg(long)]
    out: PathBuf,
    /// Placement radius of vehicles around stations, km.
    #[arg(long, default_value_t = 5.0)]
    radius_km: f64,
    #[command(flatten)]
    config: SharedConfig,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Scenario bundle produced by `generate` (alternative to the four
    /// separate input files).
    #[arg(long, conflicts_with_all = ["fleet", "stations", "generation", "consumption"])]
    scenario: Option<PathBuf>,
    #[arg(long, requires_all = ["stations", "generation", "consumption"])]
    fleet: Option<PathBuf>,
    #[arg(long)]
    stations: Option<PathBuf>,
    #[arg(long)]
    generation: Option<PathBuf>,
    #[arg(long)]
    consumption: Option<PathBuf>,
    /// Output directory for schedule.csv, archive.json, convergence.csv,
    /// and metrics.json.
    #[arg(long)]
    out: PathBuf,
    /// Population size.
    #[arg(long, default_value_t = 20)]
    population: usize,
    /// Iteration budget.
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    /// Archive capacity.
    #[arg(long, default_value_t = 5)]
    archive: usize,
    /// Optional reference front (JSON list of fitness vectors) for the
    /// closeness indicators in metrics.json.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[command(flatten)]
    config: SharedConfig,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario bundle.
    #[arg(long)]
    scenario: PathBuf,
    /// Schedule CSV to check.
    #[arg(long)]
    schedule: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    /// Scenario bundle.
    #[arg(long)]
    scenario: PathBuf,
    /// Schedule CSV.
    #[arg(long)]
    schedule: PathBuf,
    /// Archive JSON written by `optimize`.
    #[arg(long)]
    archive: Option<PathBuf>,
    /// Optional reference front for the closeness indicators.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Where to write metrics.json; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct CliError {
    kind: String,
    detail: String,
}

impl CliError {
    fn new(kind: &str, detail: impl std::fmt::Display) -> Self {
        Self {
            kind: kind.into(),
            detail: detail.to_string(),
        }
    }
}

macro_rules! cli_from {
    ($ty:ty, $kind:literal) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::new($kind, e)
            }
        }
    };
}

cli_from!(evcoord::io::IoError, "io");
cli_from!(evcoord::scenario::ScenarioError, "scenario");
cli_from!(evcoord::hho::OptimizeError, "optimize");
cli_from!(evcoord::schedule::ScheduleError, "schedule");
cli_from!(evcoord::metrics::MetricsError, "metrics");

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            let msg = serde_json::json!({ "error": e.kind, "detail": e.detail });
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Generate(args) => generate(args),
        Command::Optimize(args) => run_optimize(args),
        Command::Validate(args) => validate(args),
        Command::Metrics(args) => run_metrics(args),
    }
}

fn generate(args: GenerateArgs) -> Result<ExitCode, CliError> {
    let stations = io::load_stations(&args.stations)?;
    if stations.is_empty() {
        return Err(CliError::new("scenario", "station list is empty"));
    }
    let cfg = args.config.scenario_config();
    let generation = io::load_curve(&args.generation, cfg.operation.slot_duration_h)?;
    let consumption = io::load_curve(&args.consumption, cfg.operation.slot_duration_h)?;

    let spec = FleetSpec {
        placement_radius_km: args.radius_km,
        ..Default::default()
    };
    let seed = args.config.seed;
    let mut fleet = gen_fleet(&spec, &mut seeded_rng(seed, streams::FLEET));
    gen_locations(
        &mut fleet,
        &stations,
        spec.placement_radius_km,
        &mut seeded_rng(seed, streams::LOCATIONS),
    );
    gen_time_preferences(
        &mut fleet,
        generation.len().max(1),
        &PreferenceStrategy::Uniform,
        &mut seeded_rng(seed, streams::PREFERENCES),
    );

    let scenario = assemble_scenario(fleet, stations, generation, consumption, &cfg)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::new("io", format!("{}: {e}", args.out.display())))?;
    let bundle = args.out.join("scenario.json");
    io::save_scenario_bundle(&bundle, &scenario)?;
    println!("{}", bundle.display());
    Ok(ExitCode::SUCCESS)
}

fn load_scenario_for(args: &OptimizeArgs) -> Result<Scenario, CliError> {
    if let Some(bundle) = &args.scenario {
        let mut scenario = io::load_scenario_bundle(bundle)?;
        // A bundle carries its own configuration; --window still narrows
        // the stored service window.
        if let Some(over) = &args.config.window {
            let start = scenario.window.start.max(over.start);
            let end = scenario.window.end.min(over.end);
            scenario.window = if start < end { start..end } else { 0..0 };
        }
        return Ok(scenario);
    }
    match (&args.fleet, &args.stations, &args.generation, &args.consumption) {
        (Some(f), Some(s), Some(g), Some(c)) => {
            Ok(build_scenario(f, s, g, c, &args.config.scenario_config())?)
        }
        _ => Err(CliError::new(
            "usage",
            "provide either --scenario or all of --fleet/--stations/--generation/--consumption",
        )),
    }
}

fn run_optimize(args: OptimizeArgs) -> Result<ExitCode, CliError> {
    let scenario = load_scenario_for(&args)?;
    let params = HhoParams {
        population_size: args.population,
        max_iterations: args.iterations,
        archive_capacity: args.archive,
        rng_seed: args.config.seed,
        levy_beta: 1.5,
    };
    let outcome = optimize(&scenario, &params)?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::new("io", format!("{}: {e}", args.out.display())))?;
    io::write_schedule_csv(&args.out.join("schedule.csv"), outcome.best_schedule())?;
    io::write_convergence_csv(&args.out.join("convergence.csv"), &outcome.log)?;
    let solutions = io::archive_solutions(outcome.archive.entries());
    io::write_archive_json(&args.out.join("archive.json"), &solutions)?;
    io::write_front_csv(&args.out.join("front.csv"), &solutions, &scenario.window)?;

    let reference = args
        .reference
        .as_deref()
        .map(io::read_front_json)
        .transpose()?;
    let report = build_report(
        &scenario,
        outcome.best_schedule(),
        outcome
            .archive
            .entries()
            .iter()
            .map(|h| h.fitness.clone())
            .collect(),
        Some(
            outcome
                .population
                .iter()
                .map(|h| h.fitness.clone())
                .collect(),
        ),
        Some(&outcome.fitness_ceiling),
        reference.as_deref(),
    )?;
    io::write_metrics_json(&args.out.join("metrics.json"), &report)?;
    println!(
        "best fitness sum {} over {} objectives, archive {} entries",
        outcome.best.fitness_sum(),
        scenario.window.len(),
        outcome.archive.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn validate(args: ValidateArgs) -> Result<ExitCode, CliError> {
    let scenario = io::load_scenario_bundle(&args.scenario)?;
    let schedule = io::read_schedule_csv(&args.schedule, &scenario.stations, scenario.balance.len())?;
    let violations = validate_schedule(
        &schedule,
        &scenario.fleet,
        &scenario.stations,
        &scenario.balance,
        &scenario.constraints,
        &scenario.operation,
    )?;
    println!(
        "{}",
        serde_json::to_string_pretty(&violations)
            .map_err(|e| CliError::new("json", e))?
    );
    if violations.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

fn run_metrics(args: MetricsArgs) -> Result<ExitCode, CliError> {
    let scenario = io::load_scenario_bundle(&args.scenario)?;
    let schedule = io::read_schedule_csv(&args.schedule, &scenario.stations, scenario.balance.len())?;
    let archive_fronts = args
        .archive
        .as_deref()
        .map(io::read_archive_json)
        .transpose()?
        .map(|sols| sols.into_iter().map(|s| s.fitness).collect::<Vec<_>>());
    let reference = args
        .reference
        .as_deref()
        .map(io::read_front_json)
        .transpose()?;
    let report = build_report(
        &scenario,
        &schedule,
        archive_fronts.unwrap_or_default(),
        None,
        None,
        reference.as_deref(),
    )?;
    match &args.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::new("io", format!("{}: {e}", dir.display())))?;
            io::write_metrics_json(&dir.join("metrics.json"), &report)?;
        }
        None => println!(
            "{}",
            serde_json::to_string_pretty(&report).map_err(|e| CliError::new("json", e))?
        ),
    }
    Ok(ExitCode::SUCCESS)
}

fn build_report(
    scenario: &Scenario,
    schedule: &ScheduleMatrix,
    archive_fronts: Vec<Vec<f64>>,
    population_fronts: Option<Vec<Vec<f64>>>,
    fitness_ceiling: Option<&[f64]>,
    reference: Option<&[Vec<f64>]>,
) -> Result<MetricsReport, CliError> {
    let storage = schedule.storage_values();
    let window = scenario.window.clone();
    let storage_w: Vec<f64> = window.clone().map(|t| storage[t]).collect();
    let balance_w: Vec<f64> = window.map(|t| scenario.balance.values[t]).collect();

    let total_charged: f64 = schedule
        .iter_actions()
        .map(|(_, _, a)| a.energy_kwh.max(0.0))
        .sum();
    let total_discharged: f64 = schedule
        .iter_actions()
        .map(|(_, _, a)| (-a.energy_kwh).max(0.0))
        .sum();

    let nadir = match fitness_ceiling {
        Some(c) => nadir_point(std::iter::once(c), 0.1),
        None => nadir_point(archive_fronts.iter().map(Vec::as_slice), 0.1),
    };
    let (hv_raw, hv_norm) = if archive_fronts.is_empty() || nadir.is_empty() {
        (0.0, None)
    } else {
        hypervolume_pair(&archive_fronts, &nadir)?
    };

    let gd = match (reference, archive_fronts.is_empty()) {
        (Some(r), false) => Some(metrics::generational_distance(&archive_fronts, r)?),
        _ => None,
    };
    let mpfe = match (reference, archive_fronts.is_empty()) {
        (Some(r), false) => Some(metrics::max_pareto_front_error(&archive_fronts, r)?),
        _ => None,
    };

    let peak_consumption = scenario
        .consumption
        .values
        .iter()
        .copied()
        .fold(0.0, f64::max);
    let flexibility = if peak_consumption > 0.0 {
        Some(energy_flexibility_pct(total_discharged, 0.0, peak_consumption)?)
    } else {
        None
    };

    Ok(MetricsReport {
        gd,
        mpfe,
        hypervolume_raw: hv_raw,
        hypervolume_normalized: hv_norm,
        spacing: metrics::spacing(&archive_fronts).ok(),
        rni_pct: population_fronts
            .as_deref()
            .and_then(|p| ratio_non_dominated(p).ok()),
        pearson: pearson(&storage_w, &balance_w).ok(),
        total_charged_kwh: total_charged,
        total_discharged_kwh: total_discharged,
        flexibility_pct: flexibility,
        co2_saved_kg: co2_savings_kg(total_charged, metrics::DEFAULT_GRID_MIX_G_PER_KWH),
        preference_buckets: preference_deviation_report(
            schedule,
            &scenario.fleet,
            &scenario.stations,
            &scenario.constraints,
        ),
    })
}
