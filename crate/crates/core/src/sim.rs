//! Data-generating processes: time-varying MA(1), noisy diffusion,
//! uncertainty zones and Poisson counts.
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 math is only there with std
use num_traits::Float;
use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::block::ObservationSeries;
use crate::error::{Error, Result};
use crate::path::{sample_path_with, uniform_grid, ParamPath, ParamPathSpec, PathCursor};
use crate::rng::seeded_rng;

fn check_dim(spec: &ParamPathSpec, dim: usize) -> Result<()> {
    if spec.dim() != dim {
        return Err(Error::LengthMismatch {
            expected: dim,
            found: spec.dim(),
        });
    }
    Ok(())
}

fn check_size(n: usize, horizon: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
        });
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "horizon",
            value: horizon,
        });
    }
    Ok(())
}

/// Time-varying MA(1) on `n` regular returns over `[0, T]`; the path is over
/// `(μ, β, κ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ma1SimSpec {
    pub n: usize,
    pub horizon: f64,
    pub path: ParamPathSpec,
    pub seed: u64,
}

/// `R_i = μ + √κ λ_i + β √κ λ_{i−1}` with parameters frozen at `τ_{i−1}`.
pub fn simulate_tv_ma1(spec: &Ma1SimSpec) -> Result<ObservationSeries> {
    simulate_tv_ma1_with(spec, &mut seeded_rng(spec.seed)).map(|(s, _)| s)
}

/// As [`simulate_tv_ma1`] with an explicit generator; also returns the
/// parameter path sampled on the `n + 1` observation times.
pub fn simulate_tv_ma1_with<R: Rng + ?Sized>(
    spec: &Ma1SimSpec,
    rng: &mut R,
) -> Result<(ObservationSeries, ParamPath)> {
    check_size(spec.n, spec.horizon)?;
    check_dim(&spec.path, 3)?;
    let path = sample_path_with(&spec.path, &uniform_grid(spec.n, spec.horizon), spec.horizon, rng)?;
    path.check_component(1, -1.0, 1.0, false)?;
    path.check_component(2, 0.0, f64::INFINITY, false)?;
    let mut prev: f64 = rng.sample(StandardNormal);
    let values = (0..spec.n)
        .map(|i| {
            let th = path.value(i);
            let sd = th[2].sqrt();
            let cur: f64 = rng.sample(StandardNormal);
            let r = th[0] + sd * cur + th[1] * sd * prev;
            prev = cur;
            r
        })
        .collect();
    Ok((ObservationSeries::regular(values, spec.horizon)?, path))
}

/// Default number of subintervals per return for integrating `σ²`.
pub const DIFFUSION_SUBSTEPS: usize = 8;

/// `R_i = ΔX_{τ_i} + ε_{τ_i} − ε_{τ_{i−1}}` with `dX = σ_t dW` and
/// `ε_t = n^{−1/2} v_t^{1/2} γ_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyDiffusionSpec {
    pub n: usize,
    pub horizon: f64,
    pub vol_path: ParamPathSpec,
    pub noise_path: ParamPathSpec,
    /// Trapezoid subintervals per return for `∫σ²dt`.
    pub substeps: usize,
    pub seed: u64,
}

impl NoisyDiffusionSpec {
    pub fn new(n: usize, horizon: f64, vol_path: ParamPathSpec, noise_path: ParamPathSpec, seed: u64) -> Self {
        Self {
            n,
            horizon,
            vol_path,
            noise_path,
            substeps: DIFFUSION_SUBSTEPS,
            seed,
        }
    }

    /// Plain diffusion returns.
    pub fn without_noise(n: usize, horizon: f64, vol_path: ParamPathSpec, seed: u64) -> Self {
        Self::new(n, horizon, vol_path, ParamPathSpec::constant(vec![0.0]), seed)
    }
}

pub fn simulate_noisy_diffusion(spec: &NoisyDiffusionSpec) -> Result<ObservationSeries> {
    simulate_noisy_diffusion_with(spec, &mut seeded_rng(spec.seed))
}

pub fn simulate_noisy_diffusion_with<R: Rng + ?Sized>(
    spec: &NoisyDiffusionSpec,
    rng: &mut R,
) -> Result<ObservationSeries> {
    check_size(spec.n, spec.horizon)?;
    check_dim(&spec.vol_path, 1)?;
    check_dim(&spec.noise_path, 1)?;
    let sub = spec.substeps.max(1);
    let fine = uniform_grid(spec.n * sub, spec.horizon);
    let vol = sample_path_with(&spec.vol_path, &fine, spec.horizon, rng)?;
    vol.check_component(0, 0.0, f64::INFINITY, true)?;
    let noise = sample_path_with(&spec.noise_path, &fine, spec.horizon, rng)?;
    noise.check_component(0, 0.0, f64::INFINITY, true)?;

    let noise_scale = 1.0 / (spec.n as f64).sqrt();
    let mut eps_prev = noise_scale * noise.component(0, 0).sqrt() * rng.sample::<f64, _>(StandardNormal);
    let values = (0..spec.n)
        .map(|i| {
            let integral: f64 = (i * sub..(i + 1) * sub)
                .map(|j| 0.5 * (fine[j + 1] - fine[j]) * (vol.component(j, 0) + vol.component(j + 1, 0)))
                .sum();
            let dx = integral.sqrt() * rng.sample::<f64, _>(StandardNormal);
            let eps = noise_scale * noise.component((i + 1) * sub, 0).sqrt() * rng.sample::<f64, _>(StandardNormal);
            let r = dx + eps - eps_prev;
            eps_prev = eps;
            r
        })
        .collect();
    ObservationSeries::regular(values, spec.horizon)
}

/// Transaction prices on a tick grid: row 0 is the opening observation, every
/// later row is a price change. Prices are kept as integer tick counts.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries {
    tick: f64,
    times: Vec<f64>,
    levels: Vec<i64>,
}

impl TickSeries {
    pub fn new(tick: f64, times: Vec<f64>, levels: Vec<i64>) -> Result<Self> {
        if !(tick.is_finite() && tick > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tick",
                value: tick,
            });
        }
        if times.is_empty() {
            return Err(Error::Empty("tick series"));
        }
        if times.len() != levels.len() {
            return Err(Error::LengthMismatch {
                expected: times.len(),
                found: levels.len(),
            });
        }
        if !times[0].is_finite() {
            return Err(Error::InvalidParameter {
                name: "time",
                value: times[0],
            });
        }
        for (i, w) in times.windows(2).enumerate() {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::NonIncreasingGrid { index: i + 1 });
            }
        }
        if let Some(i) = levels.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::Invalid(alloc::format!(
                "row {} repeats the previous price",
                i + 1
            )));
        }
        Ok(Self { tick, times, levels })
    }

    /// Builds from raw prices, rounding to the tick grid and keeping only the
    /// first row and the rows where the price changes. Prices further than
    /// `1e-6` ticks from the grid are rejected.
    pub fn from_prices(tick: f64, times: &[f64], prices: &[f64]) -> Result<Self> {
        if times.len() != prices.len() {
            return Err(Error::LengthMismatch {
                expected: times.len(),
                found: prices.len(),
            });
        }
        if !(tick.is_finite() && tick > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tick",
                value: tick,
            });
        }
        let mut t = Vec::new();
        let mut lv = Vec::new();
        for (&time, &p) in times.iter().zip(prices) {
            let q = p / tick;
            let level = q.round();
            if !q.is_finite() || (q - level).abs() > 1e-6 || level.abs() > 9.0e15 {
                return Err(Error::InvalidParameter {
                    name: "off-grid price",
                    value: p,
                });
            }
            let level = level as i64;
            if lv.last() != Some(&level) {
                t.push(time);
                lv.push(level);
            }
        }
        Self::new(tick, t, lv)
    }

    pub fn tick(&self) -> f64 {
        self.tick
    }

    /// Rows including the opening observation.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_changes(&self) -> usize {
        self.times.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn levels(&self) -> &[i64] {
        &self.levels
    }

    pub fn price(&self, i: usize) -> f64 {
        self.levels[i] as f64 * self.tick
    }

    pub fn prices(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.price(i)).collect()
    }

    /// Sign of the change into row `i ≥ 1`.
    pub fn direction(&self, i: usize) -> i64 {
        (self.levels[i] - self.levels[i - 1]).signum()
    }

    /// Size in ticks of the change into row `i ≥ 1`.
    pub fn jump_ticks(&self, i: usize) -> u64 {
        self.levels[i].abs_diff(self.levels[i - 1])
    }

    pub fn max_jump(&self) -> u64 {
        (1..self.len()).map(|i| self.jump_ticks(i)).max().unwrap_or(0)
    }
}

/// Default Euler substeps per `(α/σ̄)²`.
pub const UZ_DEFAULT_SUBSTEPS: usize = 200;

/// Uncertainty-zones model: the efficient price `X` diffuses and the traded
/// price moves by `L` ticks when `X` leaves `Z ± α(L − ½ + η)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UzSimSpec {
    pub tick: f64,
    pub eta_path: ParamPathSpec,
    pub vol_path: ParamPathSpec,
    /// `p_k`, `k = 1..m`.
    pub jump_probs: Vec<f64>,
    pub x0: f64,
    pub horizon: f64,
    pub euler_substeps: usize,
    pub seed: u64,
}

impl UzSimSpec {
    /// Constant `η` and `σ²`, unit jumps only.
    pub fn constant(tick: f64, eta: f64, sigma2: f64, horizon: f64, seed: u64) -> Self {
        Self {
            tick,
            eta_path: ParamPathSpec::constant(vec![eta]),
            vol_path: ParamPathSpec::constant(vec![sigma2]),
            jump_probs: vec![1.0],
            x0: 0.0,
            horizon,
            euler_substeps: UZ_DEFAULT_SUBSTEPS,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tick.is_finite() && self.tick > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tick",
                value: self.tick,
            });
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidParameter {
                name: "horizon",
                value: self.horizon,
            });
        }
        if !self.x0.is_finite() {
            return Err(Error::InvalidParameter {
                name: "x0",
                value: self.x0,
            });
        }
        if self.euler_substeps == 0 {
            return Err(Error::InvalidParameter {
                name: "euler_substeps",
                value: 0.0,
            });
        }
        check_dim(&self.eta_path, 1)?;
        check_dim(&self.vol_path, 1)?;
        if self.jump_probs.is_empty() {
            return Err(Error::Empty("jump probabilities"));
        }
        if let Some(p) = self.jump_probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "jump probability",
                value: *p,
            });
        }
        let total: f64 = self.jump_probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "jump probabilities sum",
                value: total,
            });
        }
        Ok(())
    }
}

pub fn simulate_uncertainty_zones(spec: &UzSimSpec) -> Result<TickSeries> {
    simulate_uncertainty_zones_with(spec, &mut seeded_rng(spec.seed))
}

/// Euler scheme in tick units. Between grid points a crossing is detected
/// either at a grid point (time by linear interpolation) or, failing that, by
/// the Brownian-bridge crossing probability `exp(−2(b − x₀)(b − x₁)/(σ²Δ))`
/// (time at the step midpoint). The efficient price is never reset, so an
/// overshoot beyond the next barrier fires an event at once.
pub fn simulate_uncertainty_zones_with<R: Rng + ?Sized>(spec: &UzSimSpec, rng: &mut R) -> Result<TickSeries> {
    spec.validate()?;
    let sigma_bar2 = spec.vol_path.mean_level(spec.horizon)[0];
    if !(sigma_bar2.is_finite() && sigma_bar2 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "mean volatility",
            value: sigma_bar2,
        });
    }
    let alpha = spec.tick;
    let horizon = spec.horizon;
    let dt = alpha * alpha / sigma_bar2 / spec.euler_substeps as f64;
    let jumps = WeightedIndex::new(&spec.jump_probs).map_err(|_| Error::InvalidParameter {
        name: "jump probabilities",
        value: f64::NAN,
    })?;
    let mut vol = PathCursor::new(&spec.vol_path, horizon);
    let mut eta_cur = PathCursor::new(&spec.eta_path, horizon);

    let eta_at = |cur: &mut PathCursor, t: f64, rng: &mut R| -> Result<f64> {
        let e = cur.advance(t, rng)[0];
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::InvalidPath {
                component: 0,
                time: t,
                value: e,
            });
        }
        Ok(e)
    };

    let mut x = spec.x0 / alpha;
    let mut z = x.round() as i64;
    let mut times = vec![0.0];
    let mut levels = vec![z];
    let mut eta = eta_at(&mut eta_cur, 0.0, rng)?;
    let mut width = (jumps.sample(rng) + 1) as f64 - 0.5 + eta;

    let mut fire = |dir: i64, t: f64, z: &mut i64, eta: &mut f64, width: &mut f64, rng: &mut R| -> Result<()> {
        let last = *times.last().unwrap_or(&0.0);
        let t = if t > last { t } else { last.next_up() };
        let size = (*width + 0.5 - *eta).round() as i64;
        *z += dir * size;
        times.push(t);
        levels.push(*z);
        *eta = eta_at(&mut eta_cur, t, rng)?;
        *width = (jumps.sample(rng) + 1) as f64 - 0.5 + *eta;
        if !width.is_finite() {
            return Err(Error::NonFiniteBarrier { event: times.len() - 1 });
        }
        Ok(())
    };

    let n_steps = (horizon / dt).ceil() as u64;
    for k in 0..n_steps {
        let t0 = k as f64 * dt;
        if t0 >= horizon {
            break;
        }
        let t1 = if k + 1 == n_steps { horizon } else { ((k + 1) as f64 * dt).min(horizon) };
        let step = t1 - t0;

        // Overshoot from the previous event.
        loop {
            let zf = z as f64;
            if x >= zf + width {
                fire(1, t0, &mut z, &mut eta, &mut width, rng)?;
            } else if x <= zf - width {
                fire(-1, t0, &mut z, &mut eta, &mut width, rng)?;
            } else {
                break;
            }
        }

        let s2 = vol.advance(t0, rng)[0];
        if !(s2.is_finite() && s2 >= 0.0) {
            return Err(Error::InvalidPath {
                component: 0,
                time: t0,
                value: s2,
            });
        }
        let var = s2 / (alpha * alpha) * step;
        let x1 = x + var.sqrt() * rng.sample::<f64, _>(StandardNormal);
        let zf = z as f64;
        let (up, down) = (zf + width, zf - width);
        if x1 >= up {
            let w = ((up - x) / (x1 - x)).clamp(0.0, 1.0);
            fire(1, t0 + w * step, &mut z, &mut eta, &mut width, rng)?;
        } else if x1 <= down {
            let w = ((x - down) / (x - x1)).clamp(0.0, 1.0);
            fire(-1, t0 + w * step, &mut z, &mut eta, &mut width, rng)?;
        } else if var > 0.0 {
            let p_up = (-2.0 * (up - x) * (up - x1) / var).exp();
            let p_down = (-2.0 * (x - down) * (x1 - down) / var).exp();
            if p_up + p_down > 1e-16 {
                let u: f64 = rng.random();
                if u < p_up {
                    fire(1, t0 + 0.5 * step, &mut z, &mut eta, &mut width, rng)?;
                } else if u < p_up + p_down {
                    fire(-1, t0 + 0.5 * step, &mut z, &mut eta, &mut width, rng)?;
                }
            }
        }
        x = x1;
    }
    if times.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 2,
            found: times.len() - 1,
        });
    }
    TickSeries::new(alpha, times, levels)
}

/// Counts over `n` regular intervals of `[0, T]`, Poisson with mean
/// `α ∫ λ_t dt` over the interval.
pub fn simulate_poisson_counts(
    rate_path: &ParamPathSpec,
    n: usize,
    horizon: f64,
    alpha: f64,
    seed: u64,
) -> Result<ObservationSeries> {
    simulate_poisson_counts_with(rate_path, n, horizon, alpha, &mut seeded_rng(seed))
}

pub fn simulate_poisson_counts_with<R: Rng + ?Sized>(
    rate_path: &ParamPathSpec,
    n: usize,
    horizon: f64,
    alpha: f64,
    rng: &mut R,
) -> Result<ObservationSeries> {
    check_size(n, horizon)?;
    check_dim(rate_path, 1)?;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
        });
    }
    let sub = DIFFUSION_SUBSTEPS;
    let fine = uniform_grid(n * sub, horizon);
    let rate = sample_path_with(rate_path, &fine, horizon, rng)?;
    rate.check_component(0, 0.0, f64::INFINITY, false)?;
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let mean: f64 = alpha
            * (i * sub..(i + 1) * sub)
                .map(|j| 0.5 * (fine[j + 1] - fine[j]) * (rate.component(j, 0) + rate.component(j + 1, 0)))
                .sum::<f64>();
        let dist = Poisson::new(mean).map_err(|_| Error::InvalidParameter {
            name: "Poisson mean",
            value: mean,
        })?;
        values.push(dist.sample(rng));
    }
    ObservationSeries::regular(values, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::vec;

    fn mean(x: &[f64]) -> f64 {
        x.iter().sum::<f64>() / x.len() as f64
    }

    fn autocov(x: &[f64], lag: usize) -> f64 {
        let m = mean(x);
        x.windows(lag + 1).map(|w| (w[0] - m) * (w[lag] - m)).sum::<f64>() / x.len() as f64
    }

    fn ma1_const(beta: f64, kappa: f64, n: usize, seed: u64) -> Vec<f64> {
        let spec = Ma1SimSpec {
            n,
            horizon: 1.0,
            path: ParamPathSpec::constant(vec![0.0, beta, kappa]),
            seed,
        };
        simulate_tv_ma1(&spec).unwrap().values().to_vec()
    }

    #[test]
    fn ma1_white_noise_variance() {
        let x = ma1_const(0.0, 1.0, 100_000, 1);
        assert!((autocov(&x, 0) - 1.0).abs() < 0.02);
    }

    #[test]
    fn ma1_lag_one_autocovariance() {
        let n = 100_000;
        for (beta, kappa) in [(0.5, 1.0), (-0.7, 2.0), (0.2, 0.3)] {
            let x = ma1_const(beta, kappa, n, 2);
            let g0 = kappa * (1.0 + beta * beta);
            let g1 = beta * kappa;
            let se = ((g0 * g0 + 3.0 * g1 * g1) / n as f64).sqrt();
            assert!((autocov(&x, 1) - g1).abs() < 3.0 * se, "{beta}");
        }
    }

    #[test]
    fn ma1_cosine_reproducible() {
        let spec = Ma1SimSpec {
            n: 1000,
            horizon: 1.0,
            path: ParamPathSpec::cosine(vec![0.0, 0.5, 1.0], vec![0.0, 0.2, 0.4], vec![0.0, 4.0, 4.0]).unwrap(),
            seed: 42,
        };
        let a = simulate_tv_ma1(&spec).unwrap();
        let b = simulate_tv_ma1(&spec).unwrap();
        assert_eq!(a, b);
        let c = simulate_tv_ma1(&Ma1SimSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn ma1_invalid_paths() {
        for theta in [vec![0.0, 0.5, 0.0], vec![0.0, 1.0, 1.0], vec![0.0, 0.5]] {
            let spec = Ma1SimSpec {
                n: 10,
                horizon: 1.0,
                path: ParamPathSpec::constant(theta),
                seed: 0,
            };
            assert!(simulate_tv_ma1(&spec).is_err());
        }
        // A martingale β path without reflection eventually leaves (−1, 1).
        let spec = Ma1SimSpec {
            n: 1000,
            horizon: 1.0,
            path: ParamPathSpec::martingale(vec![0.0, 0.9, 1.0], vec![0.0, 5.0, 0.0]).unwrap(),
            seed: 0,
        };
        assert!(matches!(simulate_tv_ma1(&spec), Err(Error::InvalidPath { component: 1, .. })));
    }

    fn constant(v: f64) -> ParamPathSpec {
        ParamPathSpec::constant(vec![v])
    }

    #[test]
    fn diffusion_realized_variance() {
        let n = 10_000;
        let spec = NoisyDiffusionSpec::without_noise(n, 1.0, constant(1.0), 3);
        let r = simulate_noisy_diffusion(&spec).unwrap();
        let rv: f64 = r.values().iter().map(|x| x * x).sum();
        assert!((rv - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn pure_noise_autocovariance() {
        let n = 100_000;
        let c = 2.0;
        let spec = NoisyDiffusionSpec::new(n, 1.0, constant(0.0), constant(c), 4);
        let x = simulate_noisy_diffusion(&spec).unwrap().values().to_vec();
        let nf = n as f64;
        let (g0, g1) = (2.0 * c / nf, -c / nf);
        let se = ((g0 * g0 + 3.0 * g1 * g1) / nf).sqrt();
        assert!((autocov(&x, 1) - g1).abs() < 3.0 * se);
    }

    #[test]
    fn noisy_return_variance() {
        let n = 10_000;
        let nf = n as f64;
        let spec = NoisyDiffusionSpec::new(n, 1.0, constant(1.0), constant(1.0), 5);
        let x = simulate_noisy_diffusion(&spec).unwrap().values().to_vec();
        let (g0, g1) = (3.0 / nf, -1.0 / nf);
        let se = (2.0 * (g0 * g0 + 2.0 * g1 * g1) / nf).sqrt();
        assert!((autocov(&x, 0) - g0).abs() < 3.0 * se);
    }

    #[test]
    fn negative_variance_path_rejected() {
        let spec = NoisyDiffusionSpec::new(10, 1.0, constant(-1.0), constant(0.0), 0);
        assert!(matches!(simulate_noisy_diffusion(&spec), Err(Error::InvalidPath { .. })));
    }

    #[test]
    fn tick_series_accessors() {
        let t = TickSeries::from_prices(0.5, &[0.0, 1.0, 2.0, 3.0], &[10.0, 10.0, 11.0, 10.5]).unwrap();
        assert_eq!(t.levels(), &[20, 22, 21]);
        assert_eq!(t.times(), &[0.0, 2.0, 3.0]);
        assert_eq!((t.direction(1), t.jump_ticks(1)), (1, 2));
        assert_eq!((t.direction(2), t.jump_ticks(2)), (-1, 1));
        assert_eq!(t.n_changes(), 2);
        assert!(TickSeries::from_prices(0.5, &[0.0, 1.0], &[10.0, 10.2]).is_err());
        assert!(TickSeries::new(1.0, vec![0.0, 0.0], vec![0, 1]).is_err());
        assert!(TickSeries::new(1.0, vec![0.0, 1.0], vec![0, 0]).is_err());
    }

    fn alternation_share(t: &TickSeries) -> f64 {
        let n = t.n_changes();
        let cont = (2..=n).filter(|&i| t.direction(i) == t.direction(i - 1)).count();
        cont as f64 / (n - 1) as f64
    }

    #[test]
    fn uz_half_eta_balances_moves() {
        let spec = UzSimSpec::constant(0.01, 0.5, 1.0, 1.2, 6);
        let t = simulate_uncertainty_zones(&spec).unwrap();
        let n = t.n_changes();
        assert!(n >= 10_000, "{n}");
        let share = alternation_share(&t);
        assert!((share - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt(), "{share}");
    }

    #[test]
    fn uz_frictionless_limit() {
        let spec = UzSimSpec::constant(0.01, 1e-6, 1.0, 0.05, 7);
        let t = simulate_uncertainty_zones(&spec).unwrap();
        assert!(t.n_changes() > 100);
        assert_eq!(t.max_jump(), 1);
        let moves: f64 = (1..t.len()).map(|i| (t.price(i) - t.price(i - 1)).abs()).sum();
        assert!((moves / t.n_changes() as f64 - 0.01).abs() < 1e-12);
    }

    #[test]
    fn uz_event_count_calibration() {
        // Expected duration 2ηα²/σ² per event with unit jumps.
        let (eta, tick, n) = (0.155, 0.001, 3306.0);
        let sigma2 = n * 2.0 * eta * tick * tick;
        let spec = UzSimSpec::constant(tick, eta, sigma2, 1.0, 8);
        let t = simulate_uncertainty_zones(&spec).unwrap();
        let got = t.n_changes() as f64;
        assert!((got / n - 1.0).abs() < 0.15, "{got}");
    }

    #[test]
    fn uz_tick_series_invariants() {
        let spec = UzSimSpec {
            jump_probs: vec![0.6, 0.3, 0.1],
            x0: 100.004,
            ..UzSimSpec::constant(0.01, 0.2, 1.0, 0.2, 9)
        };
        let t = simulate_uncertainty_zones(&spec).unwrap();
        assert_eq!(t.levels()[0], 10_000);
        assert!(t.times().windows(2).all(|w| w[1] > w[0]));
        for i in 1..t.len() {
            assert!((1..=3).contains(&t.jump_ticks(i)));
        }
        assert_eq!(t.max_jump(), 3);
        assert_eq!(t, simulate_uncertainty_zones(&spec).unwrap());
    }

    fn mean_duration(substeps: usize, seed: u64) -> f64 {
        let spec = UzSimSpec {
            euler_substeps: substeps,
            ..UzSimSpec::constant(0.01, 0.155, 1.0, 2.0, seed)
        };
        let t = simulate_uncertainty_zones(&spec).unwrap();
        (t.times()[t.len() - 1] - t.times()[1]) / (t.n_changes() - 1) as f64
    }

    #[test]
    fn uz_euler_convergence() {
        let coarse = mean_duration(UZ_DEFAULT_SUBSTEPS, 10);
        let fine = mean_duration(2 * UZ_DEFAULT_SUBSTEPS, 11);
        assert!((coarse / fine - 1.0).abs() < 0.02, "{coarse} {fine}");
        let exact = 2.0 * 0.155 * 1e-4;
        assert!((coarse / exact - 1.0).abs() < 0.03, "{coarse} {exact}");
    }

    #[test]
    fn uz_rejects_bad_specs() {
        let base = UzSimSpec::constant(0.01, 0.2, 1.0, 1.0, 0);
        assert!(simulate_uncertainty_zones(&UzSimSpec { jump_probs: vec![0.5, 0.4], ..base.clone() }).is_err());
        assert!(simulate_uncertainty_zones(&UzSimSpec::constant(0.01, 1.2, 1.0, 1.0, 0)).is_err());
        assert!(matches!(
            simulate_uncertainty_zones(&UzSimSpec::constant(1.0, 0.2, 1e-6, 1.0, 0)),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn poisson_constant_rate() {
        let n = 100_000;
        let c = simulate_poisson_counts(&constant(3.0), n, n as f64, 1.0, 12).unwrap();
        let m = mean(c.values());
        assert!((m - 3.0).abs() < 3.0 * (3.0 / n as f64).sqrt(), "{m}");
        assert!(c.values().iter().all(|v| *v >= 0.0 && v.fract() == 0.0));
    }

    #[test]
    fn poisson_small_rate() {
        let c = simulate_poisson_counts(&constant(1e-4), 1000, 1000.0, 1.0, 13).unwrap();
        assert!(c.values().iter().filter(|v| **v == 0.0).count() > 990);
        assert!(simulate_poisson_counts(&constant(0.0), 10, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn poisson_cosine_total() {
        let spec = ParamPathSpec::cosine(vec![3.0], vec![1.0], vec![2.0]).unwrap();
        let c = simulate_poisson_counts(&spec, 1000, 1000.0, 1.0, 14).unwrap();
        let total: f64 = c.values().iter().sum();
        assert!((total - 3000.0).abs() < 3.0 * 3000f64.sqrt(), "{total}");
    }
}
