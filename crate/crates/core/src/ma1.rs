//! Gaussian MA(1): exact likelihood, simplex maximum likelihood, finite-sample
//! bias correction, asymptotic variance, and the map between MA(1) parameters
//! and (volatility, noise variance) of a noisy diffusion.
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // inherent f64 math is only there with std
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::block::{lpe, LocalEstimate, LpeResult, ObservationSeries};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::optim::NelderMead;

/// `R_t = μ + ε_t + β ε_{t−1}`, `ε ~ N(0, κ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ma1Params {
    pub mu: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Ma1Params {
    pub fn new(mu: f64, beta: f64, kappa: f64) -> Result<Self> {
        let p = Self { mu, beta, kappa };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: self.mu,
            });
        }
        if !(self.beta.abs() < 1.0) {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: self.beta,
            });
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "kappa",
                value: self.kappa,
            });
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.mu, self.beta, self.kappa]
    }

    /// Lag-0 autocovariance `κ(1 + β²)`.
    pub fn gamma0(&self) -> f64 {
        self.kappa * (1.0 + self.beta * self.beta)
    }

    /// Lag-1 autocovariance `βκ`.
    pub fn gamma1(&self) -> f64 {
        self.beta * self.kappa
    }
}

/// Whether the mean is estimated or known to be zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeanModel {
    Estimated,
    Zero,
}

impl MeanModel {
    /// Parameter names in the order used by local estimates.
    pub fn names(&self) -> &'static [&'static str] {
        match self {
            MeanModel::Estimated => &["mu", "beta", "kappa"],
            MeanModel::Zero => &["beta", "kappa"],
        }
    }

    /// Local-estimate vector for `p`.
    pub fn theta(&self, p: &Ma1Params) -> Vec<f64> {
        match self {
            MeanModel::Estimated => vec![p.mu, p.beta, p.kappa],
            MeanModel::Zero => vec![p.beta, p.kappa],
        }
    }
}

/// `ln det` of the unit-innovation MA(1) covariance of size `n`:
/// `ln Σ_{j=0}^{n} β^{2j}`.
fn ln_det_unit(beta: f64, n: usize) -> f64 {
    let b2 = beta * beta;
    if b2 < 1.0 - 1e-12 {
        (-b2.powi(n as i32 + 1)).ln_1p() - (-b2).ln_1p()
    } else {
        ((n + 1) as f64).ln()
    }
}

/// Exact Gaussian log-likelihood, innovations recursion, no validation.
fn loglik_raw(mu: f64, beta: f64, kappa: f64, data: &[f64]) -> f64 {
    let n = data.len();
    let b2 = beta * beta;
    let mut r = 1.0 + b2;
    let mut e = data[0] - mu;
    let mut ss = e * e / r;
    for &x in &data[1..] {
        let theta = beta / r;
        e = (x - mu) - theta * e;
        r = 1.0 + b2 - beta * theta;
        ss += e * e / r;
    }
    -0.5 * (n as f64 * (2.0 * PI * kappa).ln() + ln_det_unit(beta, n) + ss / kappa)
}

/// Exact Gaussian log-likelihood of `data` under `params`, O(n).
pub fn ma1_loglik(params: &Ma1Params, data: &[f64]) -> Result<f64> {
    params.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("MA(1) data"));
    }
    if let Some(x) = data.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "observation",
            value: *x,
        });
    }
    Ok(loglik_raw(params.mu, params.beta, params.kappa, data))
}

/// Largest `|atanh β|` the optimizer explores.
const ATANH_LIMIT: f64 = 7.0;
/// Moment initializer clamp for `|ρ̂₁| ≥ 1/2`.
const MOM_BETA_CAP: f64 = 0.95;

fn mom_beta(rho: f64) -> f64 {
    if rho.abs() >= 0.5 {
        MOM_BETA_CAP.copysign(rho)
    } else if rho == 0.0 {
        0.0
    } else {
        let b = (1.0 - (1.0 - 4.0 * rho * rho).sqrt()) / (2.0 * rho);
        b.clamp(-MOM_BETA_CAP, MOM_BETA_CAP)
    }
}

/// Method-of-moments starting values.
pub fn method_of_moments(data: &[f64], mean: MeanModel) -> Result<Ma1Params> {
    if data.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            found: data.len(),
        });
    }
    let n = data.len() as f64;
    let mu = match mean {
        MeanModel::Estimated => data.iter().sum::<f64>() / n,
        MeanModel::Zero => 0.0,
    };
    let g0 = data.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n;
    if !(g0 > 0.0) {
        return Err(Error::DegenerateData);
    }
    let g1 = data.windows(2).map(|w| (w[0] - mu) * (w[1] - mu)).sum::<f64>() / n;
    let beta = mom_beta(g1 / g0);
    Ma1Params::new(mu, beta, g0 / (1.0 + beta * beta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ma1Fit {
    pub params: Ma1Params,
    pub loglik: f64,
    /// Log-likelihood at the method-of-moments start.
    pub initial_loglik: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Maximum-likelihood estimator of an MA(1), searched with Nelder–Mead in
/// `(μ, atanh β, ln κ)` on standardized data.
#[derive(Debug, Clone)]
pub struct Ma1Estimator {
    pub mean: MeanModel,
    pub optimizer: NelderMead,
}

impl Default for Ma1Estimator {
    fn default() -> Self {
        Self::new(MeanModel::Estimated)
    }
}

pub const MIN_FIT_LEN: usize = 4;

impl Ma1Estimator {
    pub fn new(mean: MeanModel) -> Self {
        Self {
            mean,
            optimizer: NelderMead::default(),
        }
    }

    pub fn fit(&self, data: &[f64]) -> Result<Ma1Fit> {
        if data.len() < MIN_FIT_LEN {
            return Err(Error::InsufficientData {
                needed: MIN_FIT_LEN,
                found: data.len(),
            });
        }
        if let Some(x) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "observation",
                value: *x,
            });
        }
        let n = data.len() as f64;
        let (center, scale) = match self.mean {
            MeanModel::Estimated => {
                let m = data.iter().sum::<f64>() / n;
                let v = data.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
                (m, v.sqrt())
            }
            MeanModel::Zero => (0.0, (data.iter().map(|x| x * x).sum::<f64>() / n).sqrt()),
        };
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::DegenerateData);
        }
        let y: Vec<f64> = data.iter().map(|x| (x - center) / scale).collect();
        let init = method_of_moments(&y, self.mean)?;

        let unpack = |v: &[f64]| -> (f64, f64, f64) {
            match self.mean {
                MeanModel::Estimated => (v[0], v[1].tanh(), v[2].exp()),
                MeanModel::Zero => (0.0, v[0].tanh(), v[1].exp()),
            }
        };
        let (x0, steps, bounds) = match self.mean {
            MeanModel::Estimated => (
                vec![init.mu, init.beta.atanh(), init.kappa.ln()],
                vec![0.1, 0.1, 0.1],
                vec![
                    (f64::NEG_INFINITY, f64::INFINITY),
                    (-ATANH_LIMIT, ATANH_LIMIT),
                    (-60.0, 60.0),
                ],
            ),
            MeanModel::Zero => (
                vec![init.beta.atanh(), init.kappa.ln()],
                vec![0.1, 0.1],
                vec![(-ATANH_LIMIT, ATANH_LIMIT), (-60.0, 60.0)],
            ),
        };
        let optimizer = NelderMead {
            bounds: Some(bounds),
            ..self.optimizer.clone()
        };
        let objective = |v: &[f64]| {
            let (mu, beta, kappa) = unpack(v);
            -loglik_raw(mu, beta, kappa, &y)
        };
        let best = optimizer.minimize(objective, &x0, &steps).map_err(|e| match e {
            Error::NonConvergence {
                iterations,
                best,
                value,
            } => {
                let (mu, beta, kappa) = unpack(&best);
                Error::NonConvergence {
                    iterations,
                    best: vec![center + scale * mu, beta, scale * scale * kappa],
                    value,
                }
            }
            other => other,
        })?;
        let (mu, beta, kappa) = unpack(&best.x);
        let params = Ma1Params {
            mu: center + scale * mu,
            beta,
            kappa: scale * scale * kappa,
        };
        let start = Ma1Params {
            mu: center + scale * init.mu,
            beta: init.beta,
            kappa: scale * scale * init.kappa,
        };
        Ok(Ma1Fit {
            params,
            loglik: loglik_raw(params.mu, params.beta, params.kappa, data),
            initial_loglik: loglik_raw(start.mu, start.beta, start.kappa, data),
            iterations: best.iterations,
            evaluations: best.evaluations,
        })
    }

    /// MLE minus the first-order bias evaluated at the MLE.
    pub fn fit_bias_corrected(&self, data: &[f64], bias: &dyn BiasModel) -> Result<Ma1Params> {
        let fit = self.fit(data)?;
        bias_correct(&fit.params, data.len(), bias)
    }
}

/// Maximum-likelihood estimate with the mean estimated.
pub fn ma1_mle(data: &[f64]) -> Result<Ma1Params> {
    Ok(Ma1Estimator::default().fit(data)?.params)
}

/// Bias-corrected maximum-likelihood estimate with the mean estimated.
pub fn ma1_mle_bc(data: &[f64], bias: &dyn BiasModel) -> Result<Ma1Params> {
    Ma1Estimator::default().fit_bias_corrected(data, bias)
}

const BETA_EDGE: f64 = 1.0 - 1e-6;

/// `θ̂ − b(θ̂)` at sample size `h`, with `β` clamped inside `(−1, 1)` and a
/// nonpositive `κ` replaced by `10⁻⁶ κ̂`.
pub fn bias_correct(params: &Ma1Params, h: usize, bias: &dyn BiasModel) -> Result<Ma1Params> {
    let b = bias.bias(params, h)?;
    let kappa = params.kappa - b[2];
    Ok(Ma1Params {
        mu: params.mu - b[0],
        beta: (params.beta - b[1]).clamp(-BETA_EDGE, BETA_EDGE),
        kappa: if kappa > 0.0 { kappa } else { params.kappa * 1e-6 },
    })
}

/// First-order finite-sample bias `E[θ̂] − θ` of the block MLE.
pub trait BiasModel {
    fn bias(&self, params: &Ma1Params, h: usize) -> Result<[f64; 3]>;
}

/// Zero bias: correction is the identity.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoBias;

impl BiasModel for NoBias {
    fn bias(&self, _params: &Ma1Params, _h: usize) -> Result<[f64; 3]> {
        Ok([0.0; 3])
    }
}

pub fn ma1_bias(params: &Ma1Params, h: usize, model: &dyn BiasModel) -> Result<[f64; 3]> {
    params.validate()?;
    model.bias(params, h)
}

/// MA coefficients at which the bias is tabulated.
pub const BIAS_BETA_GRID: [f64; 21] = [
    -0.95, -0.9, -0.8, -0.7, -0.6, -0.5, -0.4, -0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6,
    0.7, 0.8, 0.9, 0.95,
];
/// Block sizes at which the bias is tabulated.
pub const BIAS_H_GRID: [usize; 6] = [25, 50, 100, 200, 500, 1000];

/// Simulated MLE bias at one `(h, β)` grid point, for `μ = 0`, `κ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasEntry {
    pub h: usize,
    pub beta: f64,
    pub bias_mu: f64,
    pub bias_beta: f64,
    /// Bias of `κ̂` divided by `κ`.
    pub bias_kappa: f64,
    pub se_mu: f64,
    pub se_beta: f64,
    pub se_kappa: f64,
    /// Successful fits behind the averages.
    pub reps: usize,
}

/// Running sums of fitted-parameter errors; merged in a fixed order so
/// parallel tabulation stays reproducible.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BiasAccumulator {
    pub fits: usize,
    pub failures: usize,
    sum: [f64; 3],
    sum_sq: [f64; 3],
}

impl BiasAccumulator {
    pub fn push(&mut self, err: [f64; 3]) {
        self.fits += 1;
        for k in 0..3 {
            self.sum[k] += err[k];
            self.sum_sq[k] += err[k] * err[k];
        }
    }

    pub fn merge(&mut self, other: &BiasAccumulator) {
        self.fits += other.fits;
        self.failures += other.failures;
        for k in 0..3 {
            self.sum[k] += other.sum[k];
            self.sum_sq[k] += other.sum_sq[k];
        }
    }

    pub fn mean(&self) -> [f64; 3] {
        let n = self.fits as f64;
        [self.sum[0] / n, self.sum[1] / n, self.sum[2] / n]
    }

    /// Monte Carlo standard error of each mean.
    pub fn standard_errors(&self) -> [f64; 3] {
        let n = self.fits as f64;
        let mean = self.mean();
        let mut se = [0.0; 3];
        for k in 0..3 {
            let var = (self.sum_sq[k] - n * mean[k] * mean[k]) / (n - 1.0);
            se[k] = (var.max(0.0) / n).sqrt();
        }
        se
    }

    pub fn entry(&self, h: usize, beta: f64) -> BiasEntry {
        let m = self.mean();
        let se = self.standard_errors();
        BiasEntry {
            h,
            beta,
            bias_mu: m[0],
            bias_beta: m[1],
            bias_kappa: m[2],
            se_mu: se[0],
            se_beta: se[1],
            se_kappa: se[2],
            reps: self.fits,
        }
    }
}

/// Draws `h` observations of a constant-parameter MA(1).
pub fn simulate_ma1<R: Rng + ?Sized>(params: &Ma1Params, h: usize, rng: &mut R) -> Vec<f64> {
    let sd = params.kappa.sqrt();
    let mut prev: f64 = rng.sample(StandardNormal);
    (0..h)
        .map(|_| {
            let cur: f64 = rng.sample(StandardNormal);
            let x = params.mu + sd * (cur + params.beta * prev);
            prev = cur;
            x
        })
        .collect()
}

/// Fits `reps` simulated samples of size `h` at `(0, β, 1)` and accumulates
/// the estimation errors.
///
/// Every sample consumes the same draws whatever `β`, and a negative `β` is
/// drawn as the sign-alternated sample at `|β|` (which is exactly an MA(1)
/// with `−|β|`). Cells run on the same stream therefore share their noise, and
/// the zero-mean estimator gives exactly mirrored errors at `±β`.
pub fn bias_cell<R: Rng + ?Sized>(
    estimator: &Ma1Estimator,
    beta: f64,
    h: usize,
    reps: usize,
    rng: &mut R,
) -> Result<BiasAccumulator> {
    let base = Ma1Params::new(0.0, beta.abs(), 1.0)?;
    let mut acc = BiasAccumulator::default();
    for _ in 0..reps {
        let mut data = simulate_ma1(&base, h, rng);
        if beta < 0.0 {
            data.iter_mut().skip(1).step_by(2).for_each(|x| *x = -*x);
        }
        match estimator.fit(&data) {
            Ok(fit) => acc.push([fit.params.mu, fit.params.beta - beta, fit.params.kappa - 1.0]),
            Err(Error::NonConvergence { .. }) | Err(Error::DegenerateData) => acc.failures += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(acc)
}

/// Simulated bias on an `(h, β)` grid, interpolated linearly in `β` and in
/// `1/h`. Beyond the largest tabulated `h` the bias is extrapolated as `1/h`;
/// `β` outside the grid is clamped to its ends.
///
/// The `μ` component is identically zero (the likelihood is symmetric in
/// `μ`), the `β` component does not depend on `(μ, κ)`, and the `κ`
/// component scales with `κ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasTable {
    mean: MeanModel,
    hs: Vec<usize>,
    betas: Vec<f64>,
    /// Row-major by `h`, then `β`.
    entries: Vec<BiasEntry>,
}

impl BiasTable {
    /// Builds a table from entries covering a full `h × β` grid (any order).
    pub fn from_entries(mean: MeanModel, mut entries: Vec<BiasEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty("bias table"));
        }
        entries.sort_by(|a, b| a.h.cmp(&b.h).then(a.beta.total_cmp(&b.beta)));
        let mut hs: Vec<usize> = entries.iter().map(|e| e.h).collect();
        hs.dedup();
        let betas: Vec<f64> = entries
            .iter()
            .filter(|e| e.h == hs[0])
            .map(|e| e.beta)
            .collect();
        if entries.len() != hs.len() * betas.len() {
            return Err(Error::Invalid(alloc::format!(
                "bias table is not a full grid: {} entries for {} block sizes x {} betas",
                entries.len(),
                hs.len(),
                betas.len()
            )));
        }
        for (i, e) in entries.iter().enumerate() {
            let (hi, bi) = (i / betas.len(), i % betas.len());
            if e.h != hs[hi] || e.beta != betas[bi] {
                return Err(Error::Invalid(alloc::format!(
                    "bias table grid mismatch at h = {}, beta = {}",
                    e.h,
                    e.beta
                )));
            }
            if !(e.bias_beta.is_finite() && e.bias_kappa.is_finite()) {
                return Err(Error::Invalid(alloc::format!(
                    "non-finite bias at h = {}, beta = {}",
                    e.h,
                    e.beta
                )));
            }
        }
        if betas.windows(2).any(|w| !(w[1] > w[0])) || hs[0] == 0 {
            return Err(Error::Invalid("bias table grid is degenerate".into()));
        }
        Ok(Self {
            mean,
            hs,
            betas,
            entries,
        })
    }

    pub fn mean_model(&self) -> MeanModel {
        self.mean
    }

    pub fn entries(&self) -> &[BiasEntry] {
        &self.entries
    }

    pub fn min_h(&self) -> usize {
        self.hs[0]
    }

    fn at(&self, hi: usize, bi: usize) -> &BiasEntry {
        &self.entries[hi * self.betas.len() + bi]
    }

    /// `(bias_beta, bias_kappa per unit κ)` at grid row `hi`, linear in `β`.
    fn row(&self, hi: usize, beta: f64) -> (f64, f64) {
        let nb = self.betas.len();
        if nb == 1 {
            let e = self.at(hi, 0);
            return (e.bias_beta, e.bias_kappa);
        }
        let b = beta.clamp(self.betas[0], self.betas[nb - 1]);
        let j = match self.betas.iter().position(|&g| g > b) {
            Some(0) => 0,
            Some(j) => j - 1,
            None => nb - 2,
        };
        let (lo, hi_e) = (self.at(hi, j), self.at(hi, j + 1));
        let w = (b - lo.beta) / (hi_e.beta - lo.beta);
        (
            lo.bias_beta + w * (hi_e.bias_beta - lo.bias_beta),
            lo.bias_kappa + w * (hi_e.bias_kappa - lo.bias_kappa),
        )
    }
}

impl BiasModel for BiasTable {
    fn bias(&self, params: &Ma1Params, h: usize) -> Result<[f64; 3]> {
        if h < self.hs[0] {
            return Err(Error::BiasRange { h, min: self.hs[0] });
        }
        let last = self.hs.len() - 1;
        let (bb, bk) = if h >= self.hs[last] {
            let (bb, bk) = self.row(last, params.beta);
            let s = self.hs[last] as f64 / h as f64;
            (bb * s, bk * s)
        } else {
            let i = self.hs.iter().position(|&g| g > h).unwrap_or(last) - 1;
            let (x, x0, x1) = (
                1.0 / h as f64,
                1.0 / self.hs[i] as f64,
                1.0 / self.hs[i + 1] as f64,
            );
            let w = (x - x1) / (x0 - x1);
            let (b0, k0) = self.row(i, params.beta);
            let (b1, k1) = self.row(i + 1, params.beta);
            (w * b0 + (1.0 - w) * b1, w * k0 + (1.0 - w) * k1)
        };
        Ok([0.0, bb, bk * params.kappa])
    }
}

/// Inverse expected Fisher information divided by `h`, i.e. the asymptotic
/// covariance of the MLE on `h` observations. Ordered as [`MeanModel::names`].
pub fn ma1_asy_variance(params: &Ma1Params, h: usize, mean: MeanModel) -> Result<Matrix> {
    params.validate()?;
    if params.beta.abs() >= 1.0 - 1e-12 {
        return Err(Error::SingularInformation { beta: params.beta });
    }
    let (b, k) = (params.beta, params.kappa);
    let hf = h as f64;
    let var_mu = k * (1.0 + b) * (1.0 + b) / hf;
    let var_beta = (1.0 - b * b) / hf;
    let var_kappa = 2.0 * k * k / hf;
    Ok(match mean {
        MeanModel::Estimated => Matrix::from_diagonal(&[var_mu, var_beta, var_kappa]),
        MeanModel::Zero => Matrix::from_diagonal(&[var_beta, var_kappa]),
    })
}

/// Block estimate with per-observation asymptotic variance attached.
pub fn ma1_local(
    data: &[f64],
    estimator: &Ma1Estimator,
    bias: Option<&dyn BiasModel>,
) -> Result<LocalEstimate> {
    let fit = estimator.fit(data)?;
    let params = match bias {
        Some(b) => bias_correct(&fit.params, data.len(), b)?,
        None => fit.params,
    };
    let h = data.len();
    let var = ma1_asy_variance(&params, h, estimator.mean)?.scaled(h as f64);
    Ok(LocalEstimate::new(0, estimator.mean.theta(&params)).with_variance(var))
}

/// LPE of a scalar series with block MA(1) fits.
pub fn ma1_lpe(
    series: &ObservationSeries,
    h: usize,
    estimator: &Ma1Estimator,
    bias: Option<&dyn BiasModel>,
) -> Result<LpeResult> {
    if series.dim() != 1 {
        return Err(Error::Invalid(alloc::format!(
            "MA(1) needs scalar returns, series has dimension {}",
            series.dim()
        )));
    }
    lpe(series, h, |block, _| ma1_local(block, estimator, bias))
}

/// Volatility rate `σ²` and noise scale `v` over `n` regular returns on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolNoisePair {
    pub sigma2: f64,
    pub v: f64,
    pub n: usize,
    pub horizon: f64,
}

/// `G(x) = −1/x − x` on `(−1, 0)`: increasing from 2 to +∞.
pub fn g_map(x: f64) -> f64 {
    -1.0 / x - x
}

/// MA(1) parameters with the same mean and autocovariances as the noisy
/// diffusion returns: `γ₀ = (σ²T + 2v)/n`, `γ₁ = −v/n`.
pub fn vol_to_ma1(pair: &VolNoisePair) -> Result<Ma1Params> {
    for (name, value) in [("sigma2", pair.sigma2), ("v", pair.v), ("horizon", pair.horizon)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidParameter { name, value });
        }
    }
    if pair.n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
        });
    }
    // Root of β² + cβ + 1 = 0 inside (−1, 0), in cancellation-free form.
    let c = pair.sigma2 * pair.horizon / pair.v + 2.0;
    let beta = -2.0 / (c + (c * c - 4.0).sqrt());
    if !(beta > -1.0 && beta < 0.0) {
        return Err(Error::RootOutsideDomain);
    }
    let kappa = -pair.v / (pair.n as f64 * beta);
    Ma1Params::new(0.0, beta, kappa)
}

/// Inverse of [`vol_to_ma1`]; defined only for `β ∈ (−1, 0)`.
pub fn ma1_to_vol(params: &Ma1Params, n: usize, horizon: f64) -> Result<VolNoisePair> {
    params.validate()?;
    if params.beta >= 0.0 {
        return Err(Error::NoNoise { beta: params.beta });
    }
    let v = -(n as f64) * params.beta * params.kappa;
    let sigma2 = (g_map(params.beta) - 2.0) * v / horizon;
    Ok(VolNoisePair {
        sigma2,
        v,
        n,
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use std::vec::Vec;

    /// Dense multivariate-normal log-density with the MA(1) Toeplitz covariance.
    fn dense_loglik(p: &Ma1Params, data: &[f64]) -> f64 {
        let n = data.len();
        let cov = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => p.gamma0(),
            1 => p.gamma1(),
            _ => 0.0,
        });
        let chol = cov.cholesky().expect("positive definite");
        let resid = DVector::from_iterator(n, data.iter().map(|x| x - p.mu));
        let z = chol.l().solve_lower_triangular(&resid).unwrap();
        let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        -0.5 * (n as f64 * (2.0 * PI).ln() + log_det + z.norm_squared())
    }

    #[test]
    fn single_observation() {
        let ll = ma1_loglik(&Ma1Params::new(0.0, 0.0, 1.0).unwrap(), &[0.0]).unwrap();
        assert!((ll + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
        let p = Ma1Params::new(0.0, 0.6, 2.5).unwrap();
        let ll = ma1_loglik(&p, &[0.0]).unwrap();
        assert!((ll + 0.5 * (2.0 * PI * 2.5 * 1.36).ln()).abs() < 1e-14);
    }

    #[test]
    fn dense_oracle_length_30() {
        let p = Ma1Params::new(0.1, -0.4, 2.0).unwrap();
        let mut rng = seeded_rng(11);
        let data: Vec<f64> = (0..30).map(|_| rng.sample::<f64, _>(StandardNormal) * 1.5).collect();
        let fast = ma1_loglik(&p, &data).unwrap();
        assert!((fast - dense_loglik(&p, &data)).abs() < 1e-8);
    }

    #[test]
    fn loglik_rejects_bad_input() {
        let p = Ma1Params {
            mu: 0.0,
            beta: 1.0,
            kappa: 1.0,
        };
        assert!(ma1_loglik(&p, &[0.0]).is_err());
        let p = Ma1Params::new(0.0, 0.2, 1.0).unwrap();
        assert!(ma1_loglik(&p, &[0.0, f64::NAN]).is_err());
        assert!(ma1_loglik(&p, &[]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn innovations_match_dense(mu in -2.0f64..2.0, beta in -0.98f64..0.98, kappa in 0.05f64..5.0,
                                   n in 1usize..=50, seed in 0u64..10_000) {
            let p = Ma1Params::new(mu, beta, kappa).unwrap();
            let mut rng = seeded_rng(seed);
            let data: Vec<f64> = (0..n).map(|_| mu + 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            let a = ma1_loglik(&p, &data).unwrap();
            let b = dense_loglik(&p, &data);
            prop_assert!((a - b).abs() < 1e-8, "{} vs {}", a, b);
        }
    }

    #[test]
    fn mle_recovers_parameters() {
        let truth = Ma1Params::new(0.0, 0.5, 1.0).unwrap();
        let data = simulate_ma1(&truth, 10_000, &mut seeded_rng(3));
        let fit = Ma1Estimator::default().fit(&data).unwrap();
        let p = fit.params;
        assert!(p.mu.abs() < 0.03, "{p:?}");
        assert!((p.beta - 0.5).abs() < 0.03, "{p:?}");
        assert!((p.kappa - 1.0).abs() < 0.05, "{p:?}");
        assert!(fit.loglik >= fit.initial_loglik);
    }

    #[test]
    fn mle_null_ma() {
        let truth = Ma1Params::new(0.0, 0.0, 1.0).unwrap();
        let data = simulate_ma1(&truth, 10_000, &mut seeded_rng(4));
        let p = ma1_mle(&data).unwrap();
        assert!(p.beta.abs() < 0.04, "{p:?}");
    }

    #[test]
    fn mle_zero_mean_model() {
        let truth = Ma1Params::new(0.0, -0.3, 2.0).unwrap();
        let data = simulate_ma1(&truth, 5_000, &mut seeded_rng(5));
        let p = Ma1Estimator::new(MeanModel::Zero).fit(&data).unwrap().params;
        assert_eq!(p.mu, 0.0);
        assert!((p.beta + 0.3).abs() < 0.05 && (p.kappa - 2.0).abs() < 0.15, "{p:?}");
    }

    #[test]
    fn mle_degenerate_and_short() {
        assert_eq!(ma1_mle(&[2.0; 20]), Err(Error::DegenerateData));
        assert!(matches!(ma1_mle(&[1.0, 2.0, 3.0]), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn mle_never_worse_than_start() {
        let mut rng = seeded_rng(8);
        for beta in [-0.9, -0.5, 0.0, 0.7, 0.95] {
            let truth = Ma1Params::new(0.3, beta, 0.5).unwrap();
            for _ in 0..20 {
                let data = simulate_ma1(&truth, 25, &mut rng);
                let fit = Ma1Estimator::default().fit(&data).unwrap();
                assert!(fit.loglik >= fit.initial_loglik - 1e-9);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn mle_equivariance(seed in 0u64..1000, shift in -50.0f64..50.0, scale in 0.01f64..100.0) {
            let truth = Ma1Params::new(0.0, 0.4, 1.0).unwrap();
            let data = simulate_ma1(&truth, 300, &mut seeded_rng(seed));
            let base = ma1_mle(&data).unwrap();
            let shifted: Vec<f64> = data.iter().map(|x| x + shift).collect();
            let s = ma1_mle(&shifted).unwrap();
            prop_assert!((s.mu - base.mu - shift).abs() < 1e-6);
            prop_assert!((s.beta - base.beta).abs() < 1e-6);
            let scaled: Vec<f64> = data.iter().map(|x| x * scale).collect();
            let c = ma1_mle(&scaled).unwrap();
            prop_assert!((c.beta - base.beta).abs() < 1e-6);
            prop_assert!((c.kappa / (scale * scale) - base.kappa).abs() < 1e-6 * base.kappa);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn zero_mean_fit_mirrors_under_alternation(seed in 0u64..1000, beta in 0.0f64..0.95, h in 25usize..300) {
            let truth = Ma1Params::new(0.0, beta, 1.0).unwrap();
            let data = simulate_ma1(&truth, h, &mut seeded_rng(seed));
            let flipped: Vec<f64> = data
                .iter()
                .enumerate()
                .map(|(t, x)| if t % 2 == 1 { -x } else { *x })
                .collect();
            let est = Ma1Estimator::new(MeanModel::Zero);
            let a = est.fit(&data).unwrap().params;
            let b = est.fit(&flipped).unwrap().params;
            prop_assert!((a.beta + b.beta).abs() < 1e-6, "{} vs {}", a.beta, b.beta);
            prop_assert!((a.kappa - b.kappa).abs() < 1e-6 * a.kappa);
        }
    }

    #[test]
    fn cells_share_noise_across_beta() {
        let est = Ma1Estimator::new(MeanModel::Zero);
        let pos = bias_cell(&est, 0.6, 50, 200, &mut seeded_rng(3)).unwrap();
        let neg = bias_cell(&est, -0.6, 50, 200, &mut seeded_rng(3)).unwrap();
        let (p, n) = (pos.mean(), neg.mean());
        assert!((p[1] + n[1]).abs() < 1e-6);
        assert!((p[2] - n[2]).abs() < 1e-6);
    }

    fn synthetic_table() -> BiasTable {
        let mut entries = Vec::new();
        for &h in &BIAS_H_GRID {
            for &b in &BIAS_BETA_GRID {
                entries.push(BiasEntry {
                    h,
                    beta: b,
                    bias_mu: 0.0,
                    bias_beta: -b * 2.0 / h as f64,
                    bias_kappa: -3.0 / h as f64,
                    se_mu: 0.0,
                    se_beta: 0.0,
                    se_kappa: 0.0,
                    reps: 1,
                });
            }
        }
        entries.reverse();
        BiasTable::from_entries(MeanModel::Estimated, entries).unwrap()
    }

    #[test]
    fn table_interpolation() {
        let t = synthetic_table();
        // Linear in β and in 1/h: exact for this synthetic surface.
        for (beta, h) in [(0.5, 100), (0.55, 100), (-0.33, 70), (0.12, 333), (0.9, 25)] {
            let p = Ma1Params::new(1.0, beta, 2.0).unwrap();
            let b = ma1_bias(&p, h, &t).unwrap();
            assert_eq!(b[0], 0.0);
            assert!((b[1] + beta * 2.0 / h as f64).abs() < 1e-14, "{beta} {h}");
            assert!((b[2] + 2.0 * 3.0 / h as f64).abs() < 1e-14);
        }
        // Beyond the largest block size: 1/h extrapolation.
        let p = Ma1Params::new(0.0, 0.5, 1.0).unwrap();
        let b = ma1_bias(&p, 5000, &t).unwrap();
        assert!((b[1] + 1.0 / 5000.0).abs() < 1e-15);
        // β beyond the grid is clamped.
        let p = Ma1Params::new(0.0, 0.99, 1.0).unwrap();
        let b = ma1_bias(&p, 100, &t).unwrap();
        assert!((b[1] + 0.95 * 2.0 / 100.0).abs() < 1e-15);
        assert_eq!(ma1_bias(&p, 10, &t), Err(Error::BiasRange { h: 10, min: 25 }));
    }

    #[test]
    fn kappa_bias_scales_with_kappa() {
        let t = synthetic_table();
        let a = ma1_bias(&Ma1Params::new(0.0, 0.3, 1.5).unwrap(), 80, &t).unwrap();
        let b = ma1_bias(&Ma1Params::new(0.0, 0.3, 3.0).unwrap(), 80, &t).unwrap();
        assert!((b[2] - 2.0 * a[2]).abs() < 1e-15);
        assert_eq!(a[1], b[1]);
    }

    #[test]
    fn incomplete_table_rejected() {
        let mut entries = synthetic_table().entries().to_vec();
        entries.pop();
        assert!(BiasTable::from_entries(MeanModel::Zero, entries).is_err());
    }

    #[test]
    fn zero_bias_is_identity() {
        let truth = Ma1Params::new(0.0, 0.5, 1.0).unwrap();
        let data = simulate_ma1(&truth, 100, &mut seeded_rng(12));
        assert_eq!(ma1_mle_bc(&data, &NoBias).unwrap(), ma1_mle(&data).unwrap());
    }

    #[test]
    fn white_noise_information() {
        let p = Ma1Params::new(0.0, 0.0, 2.0).unwrap();
        let v = ma1_asy_variance(&p, 50, MeanModel::Estimated).unwrap();
        assert!((v[(0, 0)] - 2.0 / 50.0).abs() < 1e-15);
        assert!((v[(1, 1)] - 1.0 / 50.0).abs() < 1e-15);
        assert!((v[(2, 2)] - 8.0 / 50.0).abs() < 1e-15);
        let v2 = ma1_asy_variance(&p, 100, MeanModel::Estimated).unwrap();
        assert_eq!(v2, v.scaled(0.5));
        let z = ma1_asy_variance(&p, 50, MeanModel::Zero).unwrap();
        assert_eq!(z.dim(), 2);
        let edge = Ma1Params {
            mu: 0.0,
            beta: 1.0 - 1e-14,
            kappa: 1.0,
        };
        assert!(matches!(
            ma1_asy_variance(&edge, 50, MeanModel::Estimated),
            Err(Error::SingularInformation { .. })
        ));
    }

    #[test]
    fn vol_map_closed_form() {
        let n = 10_000;
        let p = vol_to_ma1(&VolNoisePair {
            sigma2: 1.0,
            v: 1.0,
            n,
            horizon: 1.0,
        })
        .unwrap();
        let root = (-3.0 + 5.0f64.sqrt()) / 2.0;
        assert!((p.beta - root).abs() < 1e-12);
        assert!((p.kappa - 1.0 / (-root * n as f64)).abs() < 1e-12 * p.kappa);
        // Moments: γ0 = (σ²T + 2v)/n, γ1 = −v/n.
        assert!((p.gamma0() - 3.0 / n as f64).abs() < 1e-12 * p.gamma0());
        assert!((p.gamma1() + 1.0 / n as f64).abs() < 1e-12 * p.gamma1().abs());

        let back = ma1_to_vol(&p, n, 1.0).unwrap();
        assert!((back.sigma2 - 1.0).abs() < 1e-9 && (back.v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn vol_map_limits() {
        let big_noise = vol_to_ma1(&VolNoisePair {
            sigma2: 1.0,
            v: 1e8,
            n: 100,
            horizon: 1.0,
        })
        .unwrap();
        assert!(big_noise.beta < -0.999 && big_noise.beta > -1.0);
        assert!(matches!(
            ma1_to_vol(&Ma1Params::new(0.0, 0.1, 1.0).unwrap(), 10, 1.0),
            Err(Error::NoNoise { .. })
        ));
        // β → 0⁻ with βκ fixed: v fixed, σ² grows.
        let mut last = 0.0;
        for beta in [-0.5, -0.1, -0.01, -0.001] {
            let p = Ma1Params::new(0.0, beta, -1e-3 / beta).unwrap();
            let out = ma1_to_vol(&p, 1000, 1.0).unwrap();
            assert!((out.v - 1.0).abs() < 1e-12);
            assert!(out.sigma2 > last);
            last = out.sigma2;
        }
    }

    #[test]
    fn vol_map_roundtrip_grid() {
        for i in 1..=18 {
            let beta = -0.05 * i as f64;
            for kappa in [1e-6, 1e-4, 1e-2] {
                let p = Ma1Params::new(0.0, beta, kappa).unwrap();
                let pair = ma1_to_vol(&p, 2_000, 1.5).unwrap();
                let q = vol_to_ma1(&pair).unwrap();
                assert!((q.beta - beta).abs() <= 1e-10 * beta.abs(), "{beta} {kappa}");
                assert!((q.kappa - kappa).abs() <= 1e-10 * kappa);
                let again = ma1_to_vol(&q, 2_000, 1.5).unwrap();
                assert!((again.sigma2 - pair.sigma2).abs() <= 1e-10 * pair.sigma2);
                assert!((again.v - pair.v).abs() <= 1e-10 * pair.v);
            }
        }
    }
}
