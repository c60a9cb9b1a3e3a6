//! Estimators for the uncertainty-zones model: alternation and continuation
//! counts, the friction estimator `η̂`, de-rounded realized variance, the
//! binomial approximation to the law of `η̂`, block LPE of `(σ², η)` and the
//! chi-square test of a constant `η`.
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

#[allow(unused_imports)] // inherent f64 math is only there with std
use num_traits::Float;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::block::{lpe_aggregate, BlockPartition, LocalEstimate, LpeResult};
use crate::chisq::{constancy_chisq, ChiSquareTest};
use crate::error::{Error, Result};
use crate::sim::TickSeries;

/// `(N^(a)_k, N^(c)_k)` for jump sizes `k = 1..m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AltContCounts {
    per_size: Vec<(u64, u64)>,
}

impl AltContCounts {
    /// `per_size[k − 1] = (alternations, continuations)` of size-`k` changes.
    pub fn new(per_size: Vec<(u64, u64)>) -> Self {
        Self { per_size }
    }

    pub fn max_size(&self) -> usize {
        self.per_size.len()
    }

    pub fn per_size(&self) -> &[(u64, u64)] {
        &self.per_size
    }

    pub fn alternations(&self, k: usize) -> u64 {
        self.per_size.get(k - 1).map_or(0, |c| c.0)
    }

    pub fn continuations(&self, k: usize) -> u64 {
        self.per_size.get(k - 1).map_or(0, |c| c.1)
    }

    pub fn total(&self) -> u64 {
        self.per_size.iter().map(|(a, c)| a + c).sum()
    }

    /// `λ_k`, the share of classified changes of size `k`.
    pub fn lambda(&self) -> Vec<f64> {
        let total = self.total() as f64;
        self.per_size.iter().map(|(a, c)| (a + c) as f64 / total).collect()
    }

    fn add(&mut self, k: usize, continuation: bool) {
        if self.per_size.len() < k {
            self.per_size.resize(k, (0, 0));
        }
        if continuation {
            self.per_size[k - 1].1 += 1;
        } else {
            self.per_size[k - 1].0 += 1;
        }
    }
}

/// Classifies every change after the first against its predecessor.
pub fn count_alt_cont(ticks: &TickSeries) -> Result<AltContCounts> {
    if ticks.n_changes() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            found: ticks.n_changes(),
        });
    }
    Ok(count_rows(ticks, 1..ticks.len()))
}

/// Counts over the changes into rows `rows`; a change is classified when
/// its predecessor is a change too (row ≥ 2), even if that predecessor lies
/// outside `rows`.
pub fn count_rows(ticks: &TickSeries, rows: Range<usize>) -> AltContCounts {
    let mut counts = AltContCounts::new(Vec::new());
    for i in rows.start.max(2)..rows.end {
        let k = ticks.jump_ticks(i) as usize;
        counts.add(k, ticks.direction(i) == ticks.direction(i - 1));
    }
    counts
}

fn u_weight(k: usize, alt: f64, cont: f64) -> f64 {
    if alt == 0.0 {
        return 1.0;
    }
    (0.5 * (k as f64 * (cont / alt - 1.0) + 1.0)).clamp(0.0, 1.0)
}

/// `η̂ = Σ_k λ_k u_k`.
pub fn eta_hat(counts: &AltContCounts) -> Result<f64> {
    if counts.total() == 0 {
        return Err(Error::Empty("alternation/continuation counts"));
    }
    let lambda = counts.lambda();
    let eta = counts
        .per_size
        .iter()
        .enumerate()
        .zip(&lambda)
        .filter(|(_, l)| **l > 0.0)
        .map(|((i, (a, c)), l)| l * u_weight(i + 1, *a as f64, *c as f64))
        .sum::<f64>();
    Ok(eta.clamp(0.0, 1.0))
}

fn check_eta_closed(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter { name: "eta", value: eta });
    }
    Ok(())
}

/// `X̂_i = Z_i − α(½ − η) sign(ΔZ_i)`, with the opening row left as is.
fn derounded(ticks: &TickSeries, i: usize, eta: f64) -> f64 {
    let dir = if i == 0 { 0.0 } else { ticks.direction(i) as f64 };
    (ticks.levels()[i] - ticks.levels()[0]) as f64 - (0.5 - eta) * dir
}

/// Realized variance of the de-rounded prices over rows `anchor..end`, in
/// price units.
pub fn corrected_rv_rows(ticks: &TickSeries, rows: Range<usize>, eta: f64) -> Result<f64> {
    check_eta_closed(eta)?;
    if rows.end > ticks.len() || rows.start >= rows.end {
        return Err(Error::Invalid(alloc::format!(
            "row range {}..{} outside 0..{}",
            rows.start,
            rows.end,
            ticks.len()
        )));
    }
    let mut prev = derounded(ticks, rows.start, eta);
    let mut ss = 0.0;
    for i in rows.start + 1..rows.end {
        let x = derounded(ticks, i, eta);
        ss += (x - prev) * (x - prev);
        prev = x;
    }
    Ok(ss * ticks.tick() * ticks.tick())
}

/// `Σ (ΔX̂)²` over the whole series. `tick` must equal the series' tick.
pub fn corrected_rv(ticks: &TickSeries, eta: f64, tick: f64) -> Result<f64> {
    if (tick - ticks.tick()).abs() > 1e-12 * ticks.tick() {
        return Err(Error::InvalidParameter { name: "tick", value: tick });
    }
    if ticks.n_changes() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            found: ticks.n_changes(),
        });
    }
    corrected_rv_rows(ticks, 0..ticks.len(), eta)
}

/// How the binomial expectations were obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BiasSdMethod {
    Exact,
    /// At least one size used simulation; `se` is the standard error of `bias`.
    MonteCarlo { draws: usize, se: f64 },
}

/// Approximate bias `E[η̂] − η` and standard deviation of `η̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionBiasSd {
    pub bias: f64,
    pub sd: f64,
    pub method: BiasSdMethod,
}

/// Largest per-size count evaluated by exact summation under [`Evaluation::Auto`].
pub const EXACT_LIMIT: u64 = 10_000;
pub const MC_DRAWS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    /// Exact up to [`EXACT_LIMIT`] changes per size, simulation above.
    Auto { seed: u64 },
    Exact,
    MonteCarlo { draws: usize, seed: u64 },
}

/// Continuation probability of a size-`k` change under a constant `η`.
///
/// After any change the efficient price sits `α(η − ½)` from the new traded
/// price, so the next size-`k` move continues with probability
/// `(2η + k − 1)/(2η + 2k − 1)`, which makes `u_k` consistent for `η`.
pub fn continuation_prob(eta: f64, k: usize) -> f64 {
    let k = k as f64;
    (2.0 * eta + k - 1.0) / (2.0 * eta + 2.0 * k - 1.0)
}

fn c_value(k: usize, n: u64, b: u64) -> f64 {
    u_weight(k, (n - b) as f64, b as f64)
}

/// `(E[C], Var[C])` by summing over the binomial support.
fn moments_exact(k: usize, n: u64, p: f64) -> (f64, f64) {
    let nf = n as f64;
    let base = libm::lgamma(nf + 1.0);
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let (mut m1, mut m2) = (0.0, 0.0);
    for b in 0..=n {
        let bf = b as f64;
        let lw = base - libm::lgamma(bf + 1.0) - libm::lgamma(nf - bf + 1.0) + bf * lp + (nf - bf) * lq;
        let w = lw.exp();
        let c = c_value(k, n, b);
        m1 += w * c;
        m2 += w * c * c;
    }
    (m1, (m2 - m1 * m1).max(0.0))
}

fn moments_mc<R: Rng + ?Sized>(k: usize, n: u64, p: f64, draws: usize, rng: &mut R) -> (f64, f64) {
    let dist = Binomial::new(n, p).expect("probability in (0, 1)");
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..draws {
        let c = c_value(k, n, dist.sample(rng));
        s1 += c;
        s2 += c * c;
    }
    let d = draws as f64;
    let mean = s1 / d;
    (mean, ((s2 - d * mean * mean) / (d - 1.0)).max(0.0))
}

/// Binomial approximation to the law of `η̂` given the counts' sizes.
pub fn eta_bias_sd(eta: f64, counts: &AltContCounts) -> Result<FrictionBiasSd> {
    eta_bias_sd_with(eta, counts, Evaluation::Auto { seed: 0 })
}

pub fn eta_bias_sd_with(eta: f64, counts: &AltContCounts, eval: Evaluation) -> Result<FrictionBiasSd> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter { name: "eta", value: eta });
    }
    if counts.total() == 0 {
        return Err(Error::Empty("alternation/continuation counts"));
    }
    let lambda = counts.lambda();
    let (mut mean, mut var) = (0.0, 0.0);
    let mut mc_var = 0.0;
    let mut mc_draws = None;
    for (i, ((a, c), l)) in counts.per_size.iter().zip(&lambda).enumerate() {
        let n = a + c;
        if n == 0 {
            continue;
        }
        let k = i + 1;
        let p = continuation_prob(eta, k);
        let simulate = match eval {
            Evaluation::Auto { seed } => (n > EXACT_LIMIT).then_some((MC_DRAWS, seed)),
            Evaluation::Exact => None,
            Evaluation::MonteCarlo { draws, seed } => Some((draws.max(2), seed)),
        };
        let (m, v) = match simulate {
            None => moments_exact(k, n, p),
            Some((draws, seed)) => {
                let mut rng = crate::rng::stream_rng(seed, k as u64);
                let (m, v) = moments_mc(k, n, p, draws, &mut rng);
                mc_var += l * l * v / draws as f64;
                mc_draws = Some(draws);
                (m, v)
            }
        };
        mean += l * m;
        var += l * l * v;
    }
    let method = match mc_draws {
        None => BiasSdMethod::Exact,
        Some(draws) => BiasSdMethod::MonteCarlo { draws, se: mc_var.sqrt() },
    };
    Ok(FrictionBiasSd {
        bias: mean - eta,
        sd: var.sqrt(),
        method,
    })
}

/// Splits the `N` changes into blocks of `h`; block `i` spans from the last
/// row of block `i − 1` (the opening row for the first) to its own last row.
fn change_partition(ticks: &TickSeries, h: usize) -> Result<BlockPartition> {
    let durations: Vec<f64> = ticks.times().windows(2).map(|w| w[1] - w[0]).collect();
    BlockPartition::from_dts(&durations, h)
}

/// Rows of block `b` as change rows (offset by the opening row).
fn block_rows(range: &Range<usize>) -> Range<usize> {
    range.start + 1..range.end + 1
}

/// Block estimates of `(σ², η)`: per block, `η̂` from the block's changes and
/// the de-rounded RV (with that `η̂`) divided by the block's duration.
pub fn uz_lpe(ticks: &TickSeries, tick: f64, h: usize, horizon: f64) -> Result<LpeResult> {
    if (tick - ticks.tick()).abs() > 1e-12 * ticks.tick() {
        return Err(Error::InvalidParameter { name: "tick", value: tick });
    }
    if h < 2 {
        return Err(Error::InvalidParameter {
            name: "block size",
            value: h as f64,
        });
    }
    if ticks.n_changes() < 2 * h {
        return Err(Error::InsufficientData {
            needed: 2 * h,
            found: ticks.n_changes(),
        });
    }
    let span = ticks.times()[ticks.len() - 1] - ticks.times()[0];
    if !(horizon.is_finite() && span <= horizon * (1.0 + 1e-12)) {
        return Err(Error::InvalidParameter {
            name: "horizon",
            value: horizon,
        });
    }
    let partition = change_partition(ticks, h)?;
    let mut locals = Vec::with_capacity(partition.n_blocks());
    for (b, (range, dt)) in partition.ranges().iter().zip(partition.block_lengths()).enumerate() {
        let rows = block_rows(range);
        let counts = count_rows(ticks, rows.clone());
        let eta = eta_hat(&counts)?;
        let rv = corrected_rv_rows(ticks, rows.start - 1..rows.end, eta)?;
        locals.push(LocalEstimate::new(b, vec![rv / dt, eta]));
    }
    let theta_hat = lpe_aggregate(&locals, &partition, horizon)?;
    Ok(LpeResult {
        theta_hat,
        av_hat: None,
        partition,
        locals,
    })
}

/// Chi-square test of a constant friction parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct UzConstancy {
    /// `η̂` on the whole sample.
    pub global_eta: f64,
    /// `ŝ_h`: standard deviation of a block `η̂` on `h` changes at the global `η̂`.
    pub block_sd: f64,
    pub test: ChiSquareTest,
    pub lpe: LpeResult,
}

/// Compares the block `η̂_i` (all but the last block) with the global `η̂`.
///
/// `ŝ_h` uses the binomial approximation with `h` changes spread over sizes
/// in the global proportions `λ_k`.
pub fn uz_constancy_test(ticks: &TickSeries, tick: f64, h: usize, horizon: f64) -> Result<UzConstancy> {
    let lpe = uz_lpe(ticks, tick, h, horizon)?;
    let global_counts = count_alt_cont(ticks)?;
    let global_eta = eta_hat(&global_counts)?;
    if !(global_eta > 0.0 && global_eta < 1.0) {
        return Err(Error::Invalid(alloc::format!(
            "global friction estimate {global_eta} on the boundary; block sd undefined"
        )));
    }
    let lambda = global_counts.lambda();
    let mut scaled: Vec<(u64, u64)> = lambda.iter().map(|l| ((l * h as f64).round() as u64, 0)).collect();
    if scaled.iter().all(|s| s.0 == 0) {
        scaled[0].0 = h as u64;
    }
    let block_sd = eta_bias_sd(global_eta, &AltContCounts::new(scaled))?.sd;
    let b = lpe.locals.len();
    let etas: Vec<f64> = lpe.locals[..b - 1].iter().map(|l| l.theta[1]).collect();
    let test = constancy_chisq(&etas, global_eta, block_sd)?;
    Ok(UzConstancy {
        global_eta,
        block_sd,
        test,
        lpe,
    })
}
