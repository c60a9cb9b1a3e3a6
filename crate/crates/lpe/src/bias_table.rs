//! Simulated MA(1) bias tables: generation, CSV persistence and the tables
//! shipped with the crate.
use std::io::{Read, Write};
use std::sync::OnceLock;

use lpe_core::ma1::{bias_cell, BiasEntry, BiasTable, Ma1Estimator, MeanModel, BIAS_BETA_GRID, BIAS_H_GRID};
use lpe_core::rng::stream_rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{check_header, parse_real, real};

pub const VERSION: u32 = 1;
/// Fewer replications leave the tabulated bias dominated by noise.
pub const MIN_REPS: usize = 1000;
/// Seed and replications of the shipped tables.
pub const SHIPPED_SEED: u64 = 17;
pub const SHIPPED_REPS: usize = 10_000;

const HEADER: [&str; 9] = [
    "h",
    "beta",
    "bias_beta",
    "bias_kappa_per_unit_kappa",
    "mc_se",
    "bias_mu",
    "mc_se_mu",
    "mc_se_kappa",
    "reps",
];

static ESTIMATED: &str = include_str!("../data/ma1_bias_v1_estimated.csv");
static ZERO: &str = include_str!("../data/ma1_bias_v1_zero.csv");

/// File name of the shipped table for `mean`.
pub fn file_name(mean: MeanModel) -> String {
    let tag = match mean {
        MeanModel::Estimated => "estimated",
        MeanModel::Zero => "zero",
    };
    format!("ma1_bias_v{VERSION}_{tag}.csv")
}

/// The shipped table for `mean`, parsed once.
pub fn default_table(mean: MeanModel) -> Result<&'static BiasTable> {
    static TABLES: [OnceLock<std::result::Result<BiasTable, String>>; 2] = [OnceLock::new(), OnceLock::new()];
    let (cell, text) = match mean {
        MeanModel::Estimated => (&TABLES[0], ESTIMATED),
        MeanModel::Zero => (&TABLES[1], ZERO),
    };
    cell.get_or_init(|| read_table(text.as_bytes(), mean).map_err(|e| e.to_string()))
        .as_ref()
        .map_err(|e| Error::Config(format!("shipped bias table {}: {e}", file_name(mean))))
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < MIN_REPS {
        return Err(Error::Config(format!("bias tabulation needs at least {MIN_REPS} replications, got {reps}")));
    }
    Ok(())
}

fn cells() -> impl Iterator<Item = (usize, f64)> {
    BIAS_H_GRID
        .iter()
        .flat_map(|&h| BIAS_BETA_GRID.iter().map(move |&b| (h, b)))
}

fn simulate_cell(estimator: &Ma1Estimator, h: usize, beta: f64, reps: usize, seed: u64) -> Result<BiasEntry> {
    let index = BIAS_H_GRID
        .iter()
        .position(|g| *g == h)
        .ok_or_else(|| Error::Config(format!("h = {h} is not a grid point")))?;
    let mut rng = stream_rng(seed, index as u64);
    let acc = bias_cell(estimator, beta, h, reps, &mut rng)?;
    if acc.failures * 100 > reps {
        return Err(Error::Config(format!(
            "MLE failed on {} of {reps} samples at h = {h}, beta = {beta}",
            acc.failures
        )));
    }
    Ok(acc.entry(h, beta))
}

/// Simulates `reps` fits at every `(h, β)` grid point. All points with the
/// same `h` run on stream `h_index` of `seed` (common random numbers across
/// `β`), so the table is smooth in `β` and does not depend on the thread count.
pub fn generate(mean: MeanModel, reps: usize, seed: u64) -> Result<BiasTable> {
    check_reps(reps)?;
    let estimator = Ma1Estimator::new(mean);
    let cells: Vec<(usize, f64)> = cells().collect();
    let entries = cells
        .par_iter()
        .map(|&(h, beta)| simulate_cell(&estimator, h, beta, reps, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(BiasTable::from_entries(mean, entries)?)
}

/// The single grid point `(h, β)` of [`generate`], bit-identical to the
/// corresponding table row.
pub fn generate_cell(mean: MeanModel, h: usize, beta: f64, reps: usize, seed: u64) -> Result<BiasEntry> {
    check_reps(reps)?;
    if !cells().any(|c| c == (h, beta)) {
        return Err(Error::Config(format!("(h = {h}, beta = {beta}) is not a grid point")));
    }
    simulate_cell(&Ma1Estimator::new(mean), h, beta, reps, seed)
}

pub fn write_table<W: Write>(out: W, table: &BiasTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for e in table.entries() {
        w.write_record([
            e.h.to_string(),
            real(e.beta),
            real(e.bias_beta),
            real(e.bias_kappa),
            real(e.se_beta),
            real(e.bias_mu),
            real(e.se_mu),
            real(e.se_kappa),
            e.reps.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_table<R: Read>(input: R, mean: MeanModel) -> Result<BiasTable> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = HEADER.iter().map(|s| s.to_string()).collect();
    check_header(&mut r, &header)?;
    let mut entries = Vec::new();
    for record in r.records() {
        let record = record?;
        let int = |idx: usize| -> Result<usize> {
            let x = parse_real(&record, idx, HEADER[idx])?;
            if x < 0.0 || x.fract() != 0.0 {
                return Err(Error::Parse {
                    line: record.position().map_or(0, |p| p.line()),
                    column: HEADER[idx].into(),
                    message: format!("expected a nonnegative integer, got {x}"),
                });
            }
            Ok(x as usize)
        };
        entries.push(BiasEntry {
            h: int(0)?,
            beta: parse_real(&record, 1, HEADER[1])?,
            bias_beta: parse_real(&record, 2, HEADER[2])?,
            bias_kappa: parse_real(&record, 3, HEADER[3])?,
            se_beta: parse_real(&record, 4, HEADER[4])?,
            bias_mu: parse_real(&record, 5, HEADER[5])?,
            se_mu: parse_real(&record, 6, HEADER[6])?,
            se_kappa: parse_real(&record, 7, HEADER[7])?,
            reps: int(8)?,
        });
    }
    Ok(BiasTable::from_entries(mean, entries)?)
}
