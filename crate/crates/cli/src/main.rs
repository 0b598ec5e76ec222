//! Command-line front end: pricing, surfaces, sensitivities, simulation,
//! counting probabilities and calibration, driven by a JSON config.
//!
//! Exit codes: 0 success, 2 usage or malformed input files, 3 validation
//! failure, 4 numerical failure.

mod config;
mod quotes;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use carma_hawkes::{
    calibrate, counting_pmf, filter_quotes, gauss_laguerre, implied_vol, market_smile, mc_price,
    simulate_arrivals_from, simulate_terminal, CalibConfig, FourierPricer, OptionKind,
    PricingSettings, Scheme,
};

use config::{JumpConfig, RunConfig};

#[derive(Debug)]
pub struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 2,
        }
    }
}

impl From<carma_hawkes::Error> for CliError {
    fn from(err: carma_hawkes::Error) -> Self {
        let code = match err {
            carma_hawkes::Error::InvalidInput(_) | carma_hawkes::Error::Validation(_) => 3,
            carma_hawkes::Error::Numerical(_) => 4,
        };
        Self {
            message: err.to_string(),
            code,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "carma-hawkes",
    version,
    about = "European option pricing under a compound CARMA(p,q)-Hawkes jump-diffusion"
)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Writes CSV output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Writes the effective configuration (after overrides) as JSON.
    #[arg(long, global = true)]
    emit_config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prices one European call and put by the transform method.
    Price(PriceArgs),
    /// Prices a strike × maturity grid and writes a CSV.
    Surface(SurfaceArgs),
    /// Sweeps one model parameter and reports implied volatilities.
    Sensitivity(SensitivityArgs),
    /// Simulates terminal prices and writes a CSV of draws.
    Simulate(SimulateArgs),
    /// Writes the jump-count probabilities at a maturity.
    Pmf(PmfArgs),
    /// Fits the model to a market quote file by RRMSE.
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
struct PriceArgs {
    #[arg(long)]
    strike: f64,
    #[arg(long)]
    maturity: f64,
    /// Adds a Monte Carlo cross-check with its confidence interval.
    #[arg(long)]
    mc: bool,
    /// Overrides the Monte Carlo path count from the config.
    #[arg(long)]
    paths: Option<usize>,
}

#[derive(Args)]
struct SurfaceArgs {
    #[arg(long)]
    strike_from: f64,
    #[arg(long)]
    strike_to: f64,
    #[arg(long, default_value_t = 2.0)]
    strike_step: f64,
    /// Comma-separated maturities in years.
    #[arg(long, value_delimiter = ',', required = true)]
    maturities: Vec<f64>,
}

#[derive(Args)]
struct SensitivityArgs {
    /// One of mu, mu_j, sigma_j, sigma, a1..a9, b0..b9.
    #[arg(long)]
    param: String,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long)]
    step: f64,
    #[arg(long)]
    maturity: f64,
    /// At-the-money sweep (strike = spot); otherwise give a strike range.
    #[arg(long)]
    atm: bool,
    #[arg(long)]
    strike_from: Option<f64>,
    #[arg(long)]
    strike_to: Option<f64>,
    #[arg(long, default_value_t = 10.0)]
    strike_step: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    maturity: f64,
    #[arg(long)]
    paths: Option<usize>,
    /// Dumps the event times of the first path as CSV.
    #[arg(long)]
    events_out: Option<PathBuf>,
}

#[derive(Args)]
struct PmfArgs {
    #[arg(long)]
    maturity: f64,
    /// Overrides the truncation from the config.
    #[arg(long)]
    max_count: Option<usize>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Quote CSV with header
    /// strike,maturity,observable_type,observable,option_type,volume,open_interest.
    #[arg(long)]
    quotes: PathBuf,
    /// Calibration report JSON path (stdout when omitted).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Fitted-smile CSV path.
    #[arg(long)]
    smile_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config_path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::usage("--config <path> is required"))?;
    let mut config = RunConfig::load(config_path)?;
    if let Some(seed) = cli.seed {
        config.numerics.seed = seed;
    }
    if let Some(path) = cli.emit_config.as_deref() {
        let text = serde_json::to_string_pretty(&config)
            .map_err(|e| CliError::usage(format!("serializing effective config: {e}")))?;
        write_file(path, &text)?;
    }

    match cli.command {
        Command::Price(args) => cmd_price(&config, &args),
        Command::Surface(args) => cmd_surface(&config, &args, cli.out.as_deref()),
        Command::Sensitivity(args) => cmd_sensitivity(&config, &args, cli.out.as_deref()),
        Command::Simulate(args) => cmd_simulate(&config, &args, cli.out.as_deref()),
        Command::Pmf(args) => cmd_pmf(&config, &args, cli.out.as_deref()),
        Command::Calibrate(args) => cmd_calibrate(&config, &args, cli.out.as_deref()),
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn pricer_settings(config: &RunConfig) -> PricingSettings {
    PricingSettings {
        n_steps: config.numerics.ode_steps,
        scheme: Scheme::Euler,
    }
}

fn cmd_price(config: &RunConfig, args: &PriceArgs) -> Result<(), CliError> {
    let model = config.build_model()?;
    let rule = gauss_laguerre(config.numerics.quadrature_order)?;
    let pricer = FourierPricer::new(&model, &rule, pricer_settings(config))?;
    let cache = pricer.maturity_transform(args.maturity)?;
    let call = pricer.call_with(&cache, args.strike)?;
    let put = pricer.put_with(&cache, args.strike)?;
    println!("call(K={}, T={}) = {call:.4}", args.strike, args.maturity);
    println!("put(K={}, T={}) = {put:.4}", args.strike, args.maturity);
    if args.mc {
        let paths = args.paths.unwrap_or(config.numerics.mc_paths);
        let result = mc_price(
            &model,
            args.strike,
            args.maturity,
            paths,
            config.numerics.seed,
            OptionKind::Call,
            true,
            &mc_settings(config),
        )?;
        println!(
            "mc call = {:.4} (se {:.4}, 95% CI [{:.4}, {:.4}], paths {}, seed {})",
            result.estimate,
            result.std_error,
            result.ci95.0,
            result.ci95.1,
            result.n_paths,
            result.seed
        );
    }
    Ok(())
}

fn mc_settings(config: &RunConfig) -> carma_hawkes::McSettings {
    carma_hawkes::McSettings {
        ode_steps: config.numerics.ode_steps,
        ..Default::default()
    }
}

fn strike_range(from: f64, to: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0 && from > 0.0 && to >= from) {
        return Err(CliError::usage(
            "strike range needs 0 < from <= to and step > 0",
        ));
    }
    let mut strikes = Vec::new();
    let mut k = from;
    while k <= to + 1e-9 * step {
        strikes.push(k);
        k += step;
    }
    Ok(strikes)
}

fn cmd_surface(config: &RunConfig, args: &SurfaceArgs, out: Option<&Path>) -> Result<(), CliError> {
    if args.maturities.is_empty() {
        return Err(CliError::usage("at least one maturity is required"));
    }
    let strikes = strike_range(args.strike_from, args.strike_to, args.strike_step)?;
    let model = config.build_model()?;
    let rule = gauss_laguerre(config.numerics.quadrature_order)?;
    let pricer = FourierPricer::new(&model, &rule, pricer_settings(config))?;
    let surface = pricer.surface(&strikes, &args.maturities)?;

    let mut csv = String::from("strike,maturity,call,put,iv\n");
    for (ti, &maturity) in surface.maturities.iter().enumerate() {
        for (ki, &strike) in surface.strikes.iter().enumerate() {
            let call = surface.calls[ti][ki];
            let iv = implied_vol(
                call,
                model.spot,
                strike,
                model.rate,
                maturity - model.t0,
                OptionKind::Call,
            )
            .map(|v| v.to_string())
            .unwrap_or_default();
            let _ = writeln!(
                csv,
                "{strike},{maturity},{call},{put},{iv}",
                put = surface.puts[ti][ki]
            );
        }
    }
    write_output(out, &csv)
}

fn cmd_sensitivity(
    config: &RunConfig,
    args: &SensitivityArgs,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if !(args.step > 0.0 && args.to >= args.from) {
        return Err(CliError::usage(
            "parameter range needs from <= to and step > 0",
        ));
    }
    let strikes = if args.atm {
        vec![config.model.spot]
    } else {
        let from = args
            .strike_from
            .ok_or_else(|| CliError::usage("give --atm or a --strike-from/--strike-to range"))?;
        let to = args
            .strike_to
            .ok_or_else(|| CliError::usage("give --atm or a --strike-from/--strike-to range"))?;
        strike_range(from, to, args.strike_step)?
    };

    let rule = gauss_laguerre(config.numerics.quadrature_order)?;
    let mut csv = String::from("param,value,strike,call,iv\n");
    let mut value = args.from;
    while value <= args.to + 1e-9 * args.step {
        let tweaked = apply_parameter(config, &args.param, value)?;
        let model = tweaked.build_model()?;
        let pricer = FourierPricer::new(&model, &rule, pricer_settings(config))?;
        let cache = pricer.maturity_transform(args.maturity)?;
        for &strike in &strikes {
            let call = pricer.call_with(&cache, strike)?;
            let iv = implied_vol(
                call,
                model.spot,
                strike,
                model.rate,
                args.maturity - model.t0,
                OptionKind::Call,
            )
            .map(|v| v.to_string())
            .unwrap_or_default();
            let _ = writeln!(csv, "{},{value},{strike},{call},{iv}", args.param);
        }
        value += args.step;
    }
    write_output(out, &csv)
}

/// Returns a config with one model parameter replaced by `value`.
fn apply_parameter(config: &RunConfig, name: &str, value: f64) -> Result<RunConfig, CliError> {
    let mut tweaked = config.clone();
    let model = &mut tweaked.model;
    match name {
        "mu" => model.mu = value,
        "sigma" => model.sigma = value,
        "mu_j" => match &mut model.jump {
            JumpConfig::Normal { mean, .. } => *mean = value,
            _ => return Err(CliError::usage("mu_j applies to normal jump laws")),
        },
        "sigma_j" => match &mut model.jump {
            // σ_J = 0 means the jump component contributes nothing; a
            // degenerate width keeps the law well defined and prices within
            // rounding of the jump-free model.
            JumpConfig::Normal { std, .. } => *std = value.max(1e-9),
            _ => return Err(CliError::usage("sigma_j applies to normal jump laws")),
        },
        _ => {
            let (kind, idx) = name.split_at(1);
            let idx: usize = idx
                .parse()
                .map_err(|_| CliError::usage(format!("unknown parameter {name:?}")))?;
            match kind {
                "a" if idx >= 1 && idx <= model.a.len() => model.a[idx - 1] = value,
                "b" if idx < model.b.len() => model.b[idx] = value,
                _ => {
                    return Err(CliError::usage(format!(
                        "parameter {name:?} is out of range for this model"
                    )))
                }
            }
        }
    }
    Ok(tweaked)
}

fn cmd_simulate(
    config: &RunConfig,
    args: &SimulateArgs,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let model = config.build_model()?;
    let paths = args.paths.unwrap_or(config.numerics.mc_paths);
    if paths == 0 {
        return Err(CliError::usage("need at least one path"));
    }
    let seed = config.numerics.seed;
    let disc = (-model.rate * (args.maturity - model.t0)).exp();

    let mut csv = String::from("path,terminal_price,jumps,compensator\n");
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for i in 0..paths {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let sample = simulate_terminal(&model, args.maturity, &mut rng)?;
        let _ = writeln!(
            csv,
            "{i},{},{},{}",
            sample.price, sample.jumps, sample.compensator
        );
        let discounted = disc * sample.price;
        sum += discounted;
        sum_sq += discounted * discounted;
    }
    let mean = sum / paths as f64;
    let se = if paths > 1 {
        ((sum_sq / paths as f64 - mean * mean) / paths as f64).sqrt()
    } else {
        f64::NAN
    };
    write_output(out, &csv)?;
    println!(
        "discounted mean {mean:.4} (se {se:.4}) vs spot {:.4}, paths {paths}, seed {seed}",
        model.spot
    );

    if let Some(events_path) = args.events_out.as_deref() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        let record = simulate_arrivals_from(
            &model.hawkes,
            model.system(),
            Some(&model.x0),
            args.maturity - model.t0,
            &mut rng,
        )?;
        let mut events = String::from("event_index,time\n");
        for (i, t) in record.times.iter().enumerate() {
            let _ = writeln!(events, "{i},{t}");
        }
        write_file(events_path, &events)?;
    }
    Ok(())
}

fn cmd_pmf(config: &RunConfig, args: &PmfArgs, out: Option<&Path>) -> Result<(), CliError> {
    let model = config.build_model()?;
    let n_max = args.max_count.unwrap_or(config.numerics.pmf_max_count);
    let grid = config
        .numerics
        .pmf_grid
        .max(carma_hawkes::default_grid(n_max));
    let pmf = counting_pmf(
        &model.hawkes,
        model.system(),
        model.t0,
        args.maturity,
        &model.x0,
        n_max,
        grid,
        config.numerics.ode_steps,
    )?;
    let mut csv = String::from("n,probability\n");
    for (n, p) in pmf.probs.iter().enumerate() {
        let _ = writeln!(csv, "{n},{p}");
    }
    write_output(out, &csv)?;
    println!(
        "mass deficit {:.3e} at n_max {n_max}, grid {grid}",
        pmf.mass_deficit
    );
    Ok(())
}

fn cmd_calibrate(
    config: &RunConfig,
    args: &CalibrateArgs,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let model_cfg = &config.model;
    let (mu_j, sigma_j) =
        match model_cfg.jump {
            JumpConfig::Normal { mean, std } => (mean, std),
            _ => return Err(CliError::usage(
                "calibration fits the normal jump law; configure a normal jump as the start point",
            )),
        };
    let calib_cfg = config.calibration.clone().unwrap_or_default();
    let p = model_cfg.a.len();
    let q = model_cfg.b.len().saturating_sub(1);
    let (default_lower, default_upper) = CalibConfig::default_bounds(p, q);
    let lower = if calib_cfg.lower.is_empty() {
        default_lower
    } else {
        calib_cfg.lower.clone()
    };
    let upper = if calib_cfg.upper.is_empty() {
        default_upper
    } else {
        calib_cfg.upper.clone()
    };

    let mut initial = vec![model_cfg.mu];
    initial.extend_from_slice(&model_cfg.b);
    initial.extend_from_slice(&model_cfg.a);
    initial.extend_from_slice(&[mu_j, sigma_j, model_cfg.sigma]);

    let calib = CalibConfig {
        p,
        q,
        initial,
        lower,
        upper,
        spot: model_cfg.spot,
        rate: model_cfg.rate,
        t0: model_cfg.t0,
        x0: model_cfg.x0.clone(),
        quadrature_order: config.numerics.quadrature_order,
        ode_steps: config.numerics.ode_steps,
        max_evaluations: calib_cfg.max_evaluations,
        restarts: calib_cfg.restarts,
        tolerance: calib_cfg.tolerance,
        seed: config.numerics.seed,
    };

    let raw_quotes = quotes::read_quotes(&args.quotes)?;
    let quotes = filter_quotes(&raw_quotes, calib_cfg.min_activity);
    if quotes.is_empty() {
        return Err(CliError::usage(format!(
            "no quotes left after the volume/open-interest filter (< {})",
            calib_cfg.min_activity
        )));
    }
    let outcome = calibrate(&quotes, &calib)?;

    let report = serde_json::json!({
        "family": { "p": p, "q": q },
        "mu": outcome.psi[0],
        "b": outcome.psi[1..=q + 1],
        "a": outcome.psi[q + 2..q + 2 + p],
        "mu_j": outcome.psi[q + 2 + p],
        "sigma_j": outcome.psi[q + 3 + p],
        "sigma": outcome.psi[q + 4 + p],
        "objective": outcome.objective,
        "evaluations": outcome.evaluations,
        "converged": outcome.converged,
        "restarts": outcome.restarts,
        "skipped_quotes": outcome.skipped,
        "trace": outcome.trace,
    });
    let report_text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::usage(format!("serializing report: {e}")))?;
    match args.report.as_deref().or(out) {
        Some(path) => write_file(path, &report_text)?,
        None => println!("{report_text}"),
    }

    if let Some(smile_path) = args.smile_out.as_deref() {
        let fitted = carma_hawkes::model_from_psi(&outcome.psi, &calib)?;
        let rule = gauss_laguerre(calib.quadrature_order)?;
        let pricer = FourierPricer::new(&fitted, &rule, pricer_settings(config))?;
        let smile = market_smile(&quotes, calib.spot, calib.rate, calib.t0)?;
        let mut csv = String::from("strike,maturity,market_iv,model_iv\n");
        let mut maturities: Vec<f64> = smile.points.iter().map(|p| p.maturity).collect();
        maturities.sort_by(f64::total_cmp);
        maturities.dedup();
        for maturity in maturities {
            let cache = pricer.maturity_transform(maturity)?;
            for point in smile.points.iter().filter(|p| p.maturity == maturity) {
                let call = pricer.call_with(&cache, point.strike)?;
                let model_iv = implied_vol(
                    call,
                    calib.spot,
                    point.strike,
                    calib.rate,
                    point.maturity - calib.t0,
                    OptionKind::Call,
                )
                .map(|v| v.to_string())
                .unwrap_or_default();
                let _ = writeln!(
                    csv,
                    "{},{},{},{model_iv}",
                    point.strike, point.maturity, point.vol
                );
            }
        }
        write_file(smile_path, &csv)?;
    }
    Ok(())
}
