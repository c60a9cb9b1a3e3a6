use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use lpe::bias_table;
use lpe::io::{create, open, read_series, read_ticks, write_series, write_ticks};
use lpe::mc::{run_ma1_study, run_uz_study, McConfig, UzStudyConfig};
use lpe_core::block::{default_block_size, LpeResult};
use lpe_core::ma1::{ma1_lpe, BiasModel, Ma1Estimator, MeanModel};
use lpe_core::path::ParamPathSpec;
use lpe_core::sim::{
    simulate_noisy_diffusion, simulate_poisson_counts, simulate_tv_ma1, simulate_uncertainty_zones, Ma1SimSpec,
    NoisyDiffusionSpec, UzSimSpec, UZ_DEFAULT_SUBSTEPS,
};
use lpe_core::simple::{poisson_lpe, rv_lpe};
use lpe_core::uz::uz_constancy_test;

#[derive(Parser)]
#[command(name = "lpe", version, about = "Local parametric estimation of integrated parameters")]
struct Cli {
    /// Worker threads for Monte Carlo work (results do not depend on it).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a series and write it as CSV.
    #[command(subcommand)]
    Simulate(Simulate),
    /// Estimate the integrated parameter of a CSV series.
    #[command(subcommand)]
    Estimate(Estimate),
    /// Run a Monte Carlo study.
    #[command(subcommand)]
    Mc(Mc),
    /// Regenerate the MA(1) bias tabulation.
    BiasTable(BiasTableArgs),
}

#[derive(Args)]
struct Output {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Grid {
    /// Number of regular observations.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Horizon T.
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
}

#[derive(Subcommand)]
enum Simulate {
    /// Time-varying MA(1) returns with cosine paths over (mu, beta, kappa).
    Ma1 {
        #[command(flatten)]
        grid: Grid,
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1", allow_hyphen_values = true)]
        nu: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0,0,0", allow_hyphen_values = true)]
        amp: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0,0,0")]
        osc: Vec<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Log-price returns of a diffusion observed with noise.
    NoisyDiffusion {
        #[command(flatten)]
        grid: Grid,
        /// Volatility level nu.
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        amp: f64,
        #[arg(long, default_value_t = 0.0)]
        osc: f64,
        /// Noise scale v.
        #[arg(long, default_value_t = 0.0)]
        v: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Traded prices from the uncertainty-zones model.
    Uz {
        #[arg(long, default_value_t = 0.001)]
        tick: f64,
        #[arg(long, default_value_t = 0.155)]
        eta: f64,
        /// Amplitude of a cosine path for eta.
        #[arg(long = "eta-amp", default_value_t = 0.0, allow_hyphen_values = true)]
        eta_amp: f64,
        #[arg(long = "eta-osc", default_value_t = 4.0)]
        eta_osc: f64,
        /// Efficient-price volatility rate.
        #[arg(long, default_value_t = 1.025e-3)]
        sigma2: f64,
        /// Largest jump size; sizes 1..=m are equally likely.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        m: u64,
        #[arg(long, default_value_t = 100.0)]
        x0: f64,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = UZ_DEFAULT_SUBSTEPS)]
        substeps: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Poisson counts on regular intervals.
    Poisson {
        #[command(flatten)]
        grid: Grid,
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        amp: f64,
        #[arg(long, default_value_t = 0.0)]
        osc: f64,
        /// Intensity scale alpha.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct Input {
    #[arg(long = "in")]
    input: PathBuf,
    /// Block size; defaults to floor(n^0.4999).
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    h: Option<u64>,
    /// Horizon T; defaults to the sample's time span.
    #[arg(long = "T")]
    horizon: Option<f64>,
}

#[derive(Subcommand)]
enum Estimate {
    /// LPE with block MA(1) maximum likelihood.
    LpeMa1 {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        bias_correct: bool,
        /// Fix mu at 0 and estimate (beta, kappa).
        #[arg(long)]
        zero_mean: bool,
        /// Bias table CSV instead of the shipped one.
        #[arg(long)]
        bias_table: Option<PathBuf>,
    },
    /// LPE of (sigma^2, eta) on tick data, with the constancy test for eta.
    LpeUz {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        tick: f64,
    },
    /// LPE with scaled realized variance.
    Rv {
        #[command(flatten)]
        input: Input,
    },
    /// LPE with the Poisson mean.
    Poisson {
        #[command(flatten)]
        input: Input,
    },
}

#[derive(Args)]
struct McArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    paths: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Subcommand)]
enum Mc {
    /// Cosine MA(1) design with 4 oscillations.
    Table1 {
        #[command(flatten)]
        mc: McArgs,
        #[arg(long)]
        bias_table: Option<PathBuf>,
    },
    /// Cosine MA(1) design with 10 oscillations.
    Table2 {
        #[command(flatten)]
        mc: McArgs,
        #[arg(long)]
        bias_table: Option<PathBuf>,
    },
    /// Uncertainty-zones estimates and constancy-test rejection rates.
    Uz {
        #[command(flatten)]
        mc: McArgs,
        /// Amplitude of a cosine path for eta (0 for constant eta).
        #[arg(long = "eta-amp", default_value_t = 0.0, allow_hyphen_values = true)]
        eta_amp: f64,
        #[arg(long = "eta-osc", default_value_t = 4.0)]
        eta_osc: f64,
        /// Rejection rates CSV.
        #[arg(long)]
        rejections_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mean {
    Estimated,
    Zero,
}

impl From<Mean> for MeanModel {
    fn from(m: Mean) -> Self {
        match m {
            Mean::Estimated => MeanModel::Estimated,
            Mean::Zero => MeanModel::Zero,
        }
    }
}

#[derive(Args)]
struct BiasTableArgs {
    /// Replications per grid point.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(bias_table::MIN_REPS as u64..))]
    reps: u64,
    #[arg(long, value_enum, default_value_t = Mean::Estimated)]
    mean: Mean,
    #[command(flatten)]
    output: Output,
}

fn usage_error(message: String) -> ! {
    Cli::command().error(clap::error::ErrorKind::ValueValidation, message).exit()
}

fn three(name: &str, v: &[f64]) -> Vec<f64> {
    if v.len() != 3 {
        usage_error(format!("--{name} takes 3 comma-separated values (mu,beta,kappa), got {}", v.len()));
    }
    v.to_vec()
}

fn cosine(nu: Vec<f64>, amp: Vec<f64>, osc: Vec<f64>) -> anyhow::Result<ParamPathSpec> {
    Ok(ParamPathSpec::cosine(nu, amp, osc)?)
}

fn save(path: &Path, write: impl FnOnce(&mut dyn Write) -> lpe::Result<()>) -> anyhow::Result<()> {
    let mut out = create(path)?;
    write(&mut out)?;
    out.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn simulate(cmd: Simulate) -> anyhow::Result<()> {
    match cmd {
        Simulate::Ma1 {
            grid,
            nu,
            amp,
            osc,
            output,
        } => {
            let path = cosine(three("nu", &nu), three("amp", &amp), three("osc", &osc))?;
            let series = simulate_tv_ma1(&Ma1SimSpec {
                n: grid.n,
                horizon: grid.horizon,
                path,
                seed: output.seed,
            })?;
            save(&output.out, |w| write_series(w, &series))
        }
        Simulate::NoisyDiffusion {
            grid,
            sigma2,
            amp,
            osc,
            v,
            output,
        } => {
            let vol = cosine(vec![sigma2], vec![amp], vec![osc])?;
            let noise = ParamPathSpec::constant(vec![v]);
            let spec = NoisyDiffusionSpec::new(grid.n, grid.horizon, vol, noise, output.seed);
            let series = simulate_noisy_diffusion(&spec)?;
            save(&output.out, |w| write_series(w, &series))
        }
        Simulate::Uz {
            tick,
            eta,
            eta_amp,
            eta_osc,
            sigma2,
            m,
            x0,
            horizon,
            substeps,
            output,
        } => {
            let mut spec = UzSimSpec::constant(tick, eta, sigma2, horizon, output.seed);
            spec.eta_path = cosine(vec![eta], vec![eta_amp], vec![eta_osc])?;
            spec.jump_probs = vec![1.0 / m as f64; m as usize];
            spec.x0 = x0;
            spec.euler_substeps = substeps;
            let ticks = simulate_uncertainty_zones(&spec)?;
            save(&output.out, |w| write_ticks(w, &ticks))
        }
        Simulate::Poisson {
            grid,
            rate,
            amp,
            osc,
            alpha,
            output,
        } => {
            let path = cosine(vec![rate], vec![amp], vec![osc])?;
            let series = simulate_poisson_counts(&path, grid.n, grid.horizon, alpha, output.seed)?;
            save(&output.out, |w| write_series(w, &series))
        }
    }
}

fn block_size(h: Option<u64>, n: usize) -> anyhow::Result<usize> {
    let h = h.map_or_else(|| default_block_size(n), |h| h as usize);
    if h > n {
        bail!("block size {h} exceeds the {n} observations");
    }
    Ok(h)
}

fn print_estimate(name: &str, n: usize, h: usize, blocks: usize, params: &[&str], theta: &[f64], se: &[f64]) {
    println!("estimator: {name}");
    println!("observations: {n}");
    println!("h: {h}");
    println!("blocks: {blocks}");
    println!("param,estimate,se");
    for ((p, t), s) in params.iter().zip(theta).zip(se) {
        println!("{p},{t:?},{s:?}");
    }
}

fn lpe_se(result: &LpeResult, horizon: f64) -> anyhow::Result<Vec<f64>> {
    result
        .standard_errors(horizon)
        .context("block estimates carry no variance")
}

fn load_bias(path: Option<&Path>, mean: MeanModel) -> anyhow::Result<Box<dyn BiasModel + Sync>> {
    Ok(match path {
        Some(p) => Box::new(bias_table::read_table(open(p)?, mean)?),
        None => Box::new(bias_table::default_table(mean)?.clone()),
    })
}

fn estimate(cmd: Estimate) -> anyhow::Result<()> {
    match cmd {
        Estimate::LpeMa1 {
            input,
            bias_correct,
            zero_mean,
            bias_table,
        } => {
            let series = read_series(open(&input.input)?, input.horizon)?;
            let mean = if zero_mean { MeanModel::Zero } else { MeanModel::Estimated };
            let h = block_size(input.h, series.len())?;
            let bias = if bias_correct {
                Some(load_bias(bias_table.as_deref(), mean)?)
            } else {
                None
            };
            let estimator = Ma1Estimator::new(mean);
            let result = ma1_lpe(&series, h, &estimator, bias.as_deref().map(|b| b as &dyn BiasModel))?;
            let se = lpe_se(&result, series.horizon())?;
            let name = if bias_correct { "bc-lpe-ma1" } else { "lpe-ma1" };
            print_estimate(name, series.len(), h, result.locals.len(), mean.names(), &result.theta_hat, &se);
        }
        Estimate::LpeUz { input, tick } => {
            let ticks = read_ticks(open(&input.input)?, tick)?;
            if ticks.n_changes() < 4 {
                bail!("{} price changes; at least 4 are needed", ticks.n_changes());
            }
            let times = ticks.times();
            let horizon = input.horizon.unwrap_or(times[times.len() - 1] - times[0]);
            let h = block_size(input.h, ticks.n_changes())?;
            let r = uz_constancy_test(&ticks, tick, h, horizon)?;
            let lengths = r.lpe.partition.block_lengths();
            // eta: each block has sd s_h; sigma^2: dispersion of the block estimates.
            let se_eta = r.block_sd * lengths.iter().map(|d| d * d).sum::<f64>().sqrt() / horizon;
            let b = r.lpe.locals.len() as f64;
            let s2 = r.lpe.theta_hat[0];
            let disp = r
                .lpe
                .locals
                .iter()
                .zip(lengths)
                .map(|(l, d)| ((l.theta[0] - s2) * d).powi(2))
                .sum::<f64>()
                * b
                / (b - 1.0);
            let se = [disp.sqrt() / horizon, se_eta];
            print_estimate(
                "lpe-uz",
                ticks.n_changes(),
                h,
                r.lpe.locals.len(),
                &["sigma2", "eta"],
                &r.lpe.theta_hat,
                &se,
            );
            println!("global_eta: {:?}", r.global_eta);
            println!("block_sd: {:?}", r.block_sd);
            println!("chisq: {:?}", r.test.stat);
            println!("df: {}", r.test.df);
            println!("pvalue: {:?}", r.test.pvalue);
        }
        Estimate::Rv { input } => {
            let series = read_series(open(&input.input)?, input.horizon)?;
            let h = block_size(input.h, series.len())?;
            let result = rv_lpe(&series, h)?;
            let se = lpe_se(&result, series.horizon())?;
            print_estimate("rv", series.len(), h, result.locals.len(), &["sigma2"], &result.theta_hat, &se);
        }
        Estimate::Poisson { input } => {
            let series = read_series(open(&input.input)?, input.horizon)?;
            let h = block_size(input.h, series.len())?;
            let result = poisson_lpe(&series, h)?;
            let se = lpe_se(&result, series.horizon())?;
            print_estimate("poisson", series.len(), h, result.locals.len(), &["rate"], &result.theta_hat, &se);
        }
    }
    Ok(())
}

fn mc(cmd: Mc) -> anyhow::Result<()> {
    let (config, bias_path, mc) = match cmd {
        Mc::Table1 { mc, bias_table } => (McConfig::table1(mc.paths as usize, mc.output.seed), bias_table, mc),
        Mc::Table2 { mc, bias_table } => (McConfig::table2(mc.paths as usize, mc.output.seed), bias_table, mc),
        Mc::Uz {
            mc,
            eta_amp,
            eta_osc,
            rejections_out,
        } => {
            let mut config = UzStudyConfig::table3(mc.paths as usize, mc.output.seed);
            let eta = config.spec.eta_path.mean_level(config.spec.horizon)[0];
            config.spec.eta_path = cosine(vec![eta], vec![eta_amp], vec![eta_osc])?;
            let report = run_uz_study(&config)?;
            save(&mc.output.out, |w| report.report.write_csv(w))?;
            if let Some(path) = rejections_out {
                save(&path, |w| report.write_rejections_csv(w))?;
            }
            return Ok(());
        }
    };
    let bias = load_bias(bias_path.as_deref(), config.mean)?;
    let report = run_ma1_study(&config, bias.as_ref())?;
    save(&mc.output.out, |w| report.write_csv(w))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads as usize)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Simulate(cmd) => simulate(cmd),
        Command::Estimate(cmd) => estimate(cmd),
        Command::Mc(cmd) => mc(cmd),
        Command::BiasTable(args) => {
            let table = bias_table::generate(args.mean.into(), args.reps as usize, args.output.seed)?;
            save(&args.output.out, |w| bias_table::write_table(w, &table))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
