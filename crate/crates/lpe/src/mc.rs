//! Monte Carlo studies: the time-varying MA(1) design with cosine parameter
//! paths and the uncertainty-zones constancy experiment.
//!
//! Path `j` draws from stream `j` of the master seed and results are reduced
//! in path order, so reports are bit-identical for any thread count.
use std::io::Write;

use lpe_core::block::{lpe_aggregate, BlockPartition, LocalEstimate};
use lpe_core::ma1::{bias_correct, BiasModel, Ma1Estimator, Ma1Params, MeanModel};
use lpe_core::path::{integrated_parameter, ParamPathSpec};
use lpe_core::rng::stream_rng;
use lpe_core::sim::{simulate_tv_ma1_with, simulate_uncertainty_zones_with, Ma1SimSpec, TickSeries, UzSimSpec};
use lpe_core::uz::{corrected_rv, count_alt_cont, eta_hat, uz_constancy_test};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorSpec {
    /// MLE on the whole sample.
    GlobalMle,
    /// MLE on the final `k` observations.
    LastN(usize),
    Lpe(usize),
    /// LPE of bias-corrected block MLEs.
    BcLpe(usize),
}

impl EstimatorSpec {
    pub fn name(&self) -> String {
        match self {
            EstimatorSpec::GlobalMle => "global-mle".into(),
            EstimatorSpec::LastN(k) => format!("last-{k}-mle"),
            EstimatorSpec::Lpe(_) => "lpe".into(),
            EstimatorSpec::BcLpe(_) => "bc-lpe".into(),
        }
    }

    pub fn block_size(&self) -> Option<usize> {
        match self {
            EstimatorSpec::Lpe(h) | EstimatorSpec::BcLpe(h) => Some(*h),
            _ => None,
        }
    }
}

/// Block sizes reported in the MA(1) tables.
pub const TABLE_BLOCK_SIZES: [usize; 6] = [25, 100, 500, 1000, 2000, 5000];

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub n: usize,
    pub horizon: f64,
    pub n_paths: usize,
    /// Path over `(μ, β, κ)`.
    pub path: ParamPathSpec,
    pub mean: MeanModel,
    pub estimators: Vec<EstimatorSpec>,
    pub master_seed: u64,
}

impl McConfig {
    /// Zero-mean MA(1) with `β_t = ν^β + A^β cos(2πδt/T)`, likewise `κ_t`.
    pub fn cosine(amp: [f64; 2], osc: [f64; 2], n_paths: usize, master_seed: u64) -> Self {
        let path = ParamPathSpec::cosine(vec![0.0, 0.5, 1.0], vec![0.0, amp[0], amp[1]], vec![0.0, osc[0], osc[1]])
            .expect("three components each");
        let mut estimators = vec![EstimatorSpec::GlobalMle, EstimatorSpec::LastN(500)];
        for h in TABLE_BLOCK_SIZES {
            estimators.push(EstimatorSpec::Lpe(h));
            estimators.push(EstimatorSpec::BcLpe(h));
        }
        Self {
            n: 10_000,
            horizon: 1.0,
            n_paths,
            path,
            mean: MeanModel::Zero,
            estimators,
            master_seed,
        }
    }

    /// `A = (.2, .4)`, `δ = (4, 4)`.
    pub fn table1(n_paths: usize, master_seed: u64) -> Self {
        Self::cosine([0.2, 0.4], [4.0, 4.0], n_paths, master_seed)
    }

    /// `A = (.2, .4)`, `δ = (10, 10)`.
    pub fn table2(n_paths: usize, master_seed: u64) -> Self {
        Self::cosine([0.2, 0.4], [10.0, 10.0], n_paths, master_seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Config("at least one path is required".into()));
        }
        if self.path.dim() != 3 {
            return Err(Error::Config(format!(
                "the MA(1) path needs 3 components (mu, beta, kappa), got {}",
                self.path.dim()
            )));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("no estimators requested".into()));
        }
        for e in &self.estimators {
            let size = match e {
                EstimatorSpec::GlobalMle => self.n,
                EstimatorSpec::LastN(k) => *k,
                EstimatorSpec::Lpe(h) | EstimatorSpec::BcLpe(h) => *h,
            };
            if size < 2 || size > self.n {
                return Err(Error::Config(format!(
                    "{} with size {size} needs 2 <= size <= n = {}",
                    e.name(),
                    self.n
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    pub estimator: String,
    pub h: Option<usize>,
    pub param: String,
    /// Mean error over successful paths.
    pub bias: f64,
    pub sd: f64,
    /// `sd / √paths`.
    pub mc_se: f64,
    pub paths: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct McReport {
    pub rows: Vec<McRow>,
}

impl McReport {
    pub fn row(&self, estimator: &str, h: Option<usize>, param: &str) -> Option<&McRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.h == h && r.param == param)
    }

    /// `estimator,h,param,bias,sd,mc_se`; `h` is empty for whole-sample estimators.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["estimator", "h", "param", "bias", "sd", "mc_se"])?;
        for r in &self.rows {
            w.write_record([
                r.estimator.clone(),
                r.h.map(|h| h.to_string()).unwrap_or_default(),
                r.param.clone(),
                real(r.bias),
                real(r.sd),
                real(r.mc_se),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

type PathErrors = Vec<std::result::Result<Vec<f64>, String>>;

/// Sample bias, sd and standard error per estimator and parameter; aborts if
/// an estimator failed on more than 1% of the paths.
fn summarize(labels: &[(String, Option<usize>)], names: &[&str], per_path: &[PathErrors]) -> Result<McReport> {
    let n_paths = per_path.len();
    let mut rows = Vec::new();
    for (e, (estimator, h)) in labels.iter().enumerate() {
        let mut ok: Vec<&Vec<f64>> = Vec::with_capacity(n_paths);
        let mut failed = Vec::new();
        for (j, path) in per_path.iter().enumerate() {
            match &path[e] {
                Ok(err) => ok.push(err),
                Err(msg) => failed.push((j, msg.clone())),
            }
        }
        if failed.len() * 100 > n_paths || ok.is_empty() {
            let (first_path, first_error) = failed.first().cloned().unwrap_or_default();
            return Err(Error::TooManyFailures {
                estimator: match h {
                    Some(h) => format!("{estimator} (h = {h})"),
                    None => estimator.clone(),
                },
                failed: failed.len(),
                paths: n_paths,
                first_path,
                first_error,
            });
        }
        let m = ok.len() as f64;
        for (k, name) in names.iter().enumerate() {
            let mean = ok.iter().map(|v| v[k]).sum::<f64>() / m;
            let var = if ok.len() > 1 {
                ok.iter().map(|v| (v[k] - mean) * (v[k] - mean)).sum::<f64>() / (m - 1.0)
            } else {
                0.0
            };
            let sd = var.sqrt();
            rows.push(McRow {
                estimator: estimator.clone(),
                h: *h,
                param: name.to_string(),
                bias: mean,
                sd,
                mc_se: sd / m.sqrt(),
                paths: ok.len(),
            });
        }
    }
    Ok(McReport { rows })
}

/// Plain and bias-corrected LPE for one block size.
type BlockFits = lpe_core::Result<(Vec<f64>, Vec<f64>)>;

fn block_estimates(
    data: &[f64],
    h: usize,
    estimator: &Ma1Estimator,
    bias: &dyn BiasModel,
    horizon: f64,
) -> BlockFits {
    let dts = vec![horizon / data.len() as f64; data.len()];
    let partition = BlockPartition::from_dts(&dts, h)?;
    let mut plain = Vec::with_capacity(partition.n_blocks());
    let mut corrected = Vec::with_capacity(partition.n_blocks());
    for (i, range) in partition.ranges().iter().enumerate() {
        let block = &data[range.clone()];
        let fit: Ma1Params = estimator.fit(block)?.params;
        let bc = bias_correct(&fit, block.len(), bias)?;
        plain.push(LocalEstimate::new(i, estimator.mean.theta(&fit)));
        corrected.push(LocalEstimate::new(i, estimator.mean.theta(&bc)));
    }
    Ok((
        lpe_aggregate(&plain, &partition, horizon)?,
        lpe_aggregate(&corrected, &partition, horizon)?,
    ))
}

fn ma1_path(config: &McConfig, bias: &dyn BiasModel, j: usize) -> PathErrors {
    let spec = Ma1SimSpec {
        n: config.n,
        horizon: config.horizon,
        path: config.path.clone(),
        seed: config.master_seed,
    };
    let mut rng = stream_rng(config.master_seed, j as u64);
    let fail = |e: &dyn std::fmt::Display| Err(e.to_string());
    let (series, path) = match simulate_tv_ma1_with(&spec, &mut rng) {
        Ok(x) => x,
        Err(e) => return vec![fail(&e); config.estimators.len()],
    };
    let truth = match integrated_parameter(&path, config.horizon) {
        Ok(t) => {
            let p = Ma1Params {
                mu: t[0],
                beta: t[1],
                kappa: t[2],
            };
            config.mean.theta(&p)
        }
        Err(e) => return vec![fail(&e); config.estimators.len()],
    };
    let data = series.values();
    let estimator = Ma1Estimator::new(config.mean);
    let error_of = |est: Vec<f64>| -> Vec<f64> { est.iter().zip(&truth).map(|(a, b)| a - b).collect() };

    let mut blocks: Vec<(usize, BlockFits)> = Vec::new();
    config
        .estimators
        .iter()
        .map(|e| match e {
            EstimatorSpec::GlobalMle => estimator
                .fit(data)
                .map(|f| error_of(config.mean.theta(&f.params)))
                .map_err(|e| e.to_string()),
            EstimatorSpec::LastN(k) => estimator
                .fit(&data[data.len() - k..])
                .map(|f| error_of(config.mean.theta(&f.params)))
                .map_err(|e| e.to_string()),
            EstimatorSpec::Lpe(h) | EstimatorSpec::BcLpe(h) => {
                let idx = match blocks.iter().position(|(bh, _)| bh == h) {
                    Some(i) => i,
                    None => {
                        blocks.push((*h, block_estimates(data, *h, &estimator, bias, config.horizon)));
                        blocks.len() - 1
                    }
                };
                match &blocks[idx].1 {
                    Ok((plain, bc)) => Ok(error_of(if matches!(e, EstimatorSpec::Lpe(_)) {
                        plain.clone()
                    } else {
                        bc.clone()
                    })),
                    Err(err) => Err(err.to_string()),
                }
            }
        })
        .collect()
}

/// Errors of every estimator against the path's integrated parameter.
pub fn run_ma1_study(config: &McConfig, bias: &(dyn BiasModel + Sync)) -> Result<McReport> {
    config.validate()?;
    let per_path: Vec<PathErrors> = (0..config.n_paths)
        .into_par_iter()
        .map(|j| ma1_path(config, bias, j))
        .collect();
    let labels: Vec<(String, Option<usize>)> = config
        .estimators
        .iter()
        .map(|e| (e.name(), e.block_size()))
        .collect();
    summarize(&labels, config.mean.names(), &per_path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UzStudyConfig {
    pub n_paths: usize,
    /// Simulation design; its seed is ignored in favour of per-path streams.
    pub spec: UzSimSpec,
    pub block_sizes: Vec<usize>,
    /// Test level for the rejection rates.
    pub level: f64,
    pub master_seed: u64,
}

/// Expected number of unit-jump events for the design `(η, σ², α, T)`.
pub fn expected_events(eta: f64, sigma2: f64, tick: f64, horizon: f64) -> f64 {
    sigma2 * horizon / (2.0 * eta * tick * tick)
}

impl UzStudyConfig {
    /// `η = .155`, tick `.001`, `σ²` set for about 3306 price changes on
    /// `[0, 1]`, block sizes 50 to 450.
    pub fn table3(n_paths: usize, master_seed: u64) -> Self {
        let (eta, tick) = (0.155, 0.001);
        let sigma2 = 3306.0 * 2.0 * eta * tick * tick;
        let mut spec = UzSimSpec::constant(tick, eta, sigma2, 1.0, master_seed);
        spec.x0 = 20.0;
        Self {
            n_paths,
            spec,
            block_sizes: (1..=9).map(|i| 50 * i).collect(),
            level: 0.05,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Config("at least one path is required".into()));
        }
        if self.block_sizes.is_empty() || self.block_sizes.iter().any(|h| *h < 2) {
            return Err(Error::Config("block sizes must be at least 2".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("test level {} outside (0, 1)", self.level)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionRow {
    pub h: usize,
    pub paths: usize,
    pub rejections: usize,
    pub rate: f64,
    /// Binomial standard error of `rate`.
    pub mc_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UzReport {
    pub report: McReport,
    pub rejections: Vec<RejectionRow>,
}

impl UzReport {
    pub fn write_rejections_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["h", "paths", "rejections", "rate", "mc_se"])?;
        for r in &self.rejections {
            w.write_record([
                r.h.to_string(),
                r.paths.to_string(),
                r.rejections.to_string(),
                real(r.rate),
                real(r.mc_se),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

struct UzPath {
    errors: PathErrors,
    pvalues: Vec<Option<f64>>,
}

fn uz_path(config: &UzStudyConfig, truth: &[f64; 2], j: usize) -> UzPath {
    let spec = &config.spec;
    let n_est = 2 + config.block_sizes.len();
    let mut rng = stream_rng(config.master_seed, j as u64);
    let ticks: TickSeries = match simulate_uncertainty_zones_with(spec, &mut rng) {
        Ok(t) => t,
        Err(e) => {
            return UzPath {
                errors: vec![Err(e.to_string()); n_est],
                pvalues: vec![None; config.block_sizes.len()],
            }
        }
    };
    let horizon = spec.horizon;
    let plain = corrected_rv(&ticks, 0.5, spec.tick).map(|rv| vec![rv / horizon - truth[0]]);
    let global = count_alt_cont(&ticks).and_then(|c| eta_hat(&c)).and_then(|eta| {
        let rv = corrected_rv(&ticks, eta, spec.tick)?;
        Ok(vec![rv / horizon - truth[0], eta - truth[1]])
    });
    let mut errors: PathErrors = vec![plain.map_err(|e| e.to_string()), global.map_err(|e| e.to_string())];
    let mut pvalues = Vec::with_capacity(config.block_sizes.len());
    for &h in &config.block_sizes {
        match uz_constancy_test(&ticks, spec.tick, h, horizon) {
            Ok(r) => {
                errors.push(Ok(vec![r.lpe.theta_hat[0] - truth[0], r.lpe.theta_hat[1] - truth[1]]));
                pvalues.push(Some(r.test.pvalue));
            }
            Err(e) => {
                errors.push(Err(e.to_string()));
                pvalues.push(None);
            }
        }
    }
    UzPath { errors, pvalues }
}

/// Block and global estimates of `(σ², η)` and constancy-test rejection
/// rates per block size. Errors are measured against the time averages of the
/// deterministic `σ²` and `η` paths.
///
/// The report holds `plain-rv` (realized variance of the traded prices, `σ²`
/// only, padded with a zero `η` error), `global` and one `uz-lpe` row per `h`.
pub fn run_uz_study(config: &UzStudyConfig) -> Result<UzReport> {
    config.validate()?;
    let spec = &config.spec;
    let vol = spec
        .vol_path
        .deterministic_value(0.0, spec.horizon)
        .map(|_| spec.vol_path.mean_level(spec.horizon)[0]);
    let eta = spec
        .eta_path
        .deterministic_value(0.0, spec.horizon)
        .map(|_| spec.eta_path.mean_level(spec.horizon)[0]);
    let (Some(vol), Some(eta)) = (vol, eta) else {
        return Err(Error::Config("the uncertainty-zones study needs deterministic sigma^2 and eta paths".into()));
    };
    let truth = [vol, eta];
    let paths: Vec<UzPath> = (0..config.n_paths)
        .into_par_iter()
        .map(|j| uz_path(config, &truth, j))
        .collect();

    let mut labels = vec![("plain-rv".to_string(), None), ("global".to_string(), None)];
    labels.extend(config.block_sizes.iter().map(|h| ("uz-lpe".to_string(), Some(*h))));
    let per_path: Vec<PathErrors> = paths
        .iter()
        .map(|p| {
            let mut e = p.errors.clone();
            if let Ok(v) = &mut e[0] {
                v.push(0.0);
            }
            e
        })
        .collect();
    let mut report = summarize(&labels, &["sigma2", "eta"], &per_path)?;
    report.rows.retain(|r| !(r.estimator == "plain-rv" && r.param == "eta"));

    let rejections = config
        .block_sizes
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let ps: Vec<f64> = paths.iter().filter_map(|p| p.pvalues[i]).collect();
            let rejections = ps.iter().filter(|p| **p < config.level).count();
            let rate = rejections as f64 / ps.len().max(1) as f64;
            RejectionRow {
                h,
                paths: ps.len(),
                rejections,
                rate,
                mc_se: (rate * (1.0 - rate) / ps.len().max(1) as f64).sqrt(),
            }
        })
        .collect();
    Ok(UzReport { report, rejections })
}
