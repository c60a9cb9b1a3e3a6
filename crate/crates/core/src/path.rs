//! Time-varying parameter paths `θ*_t` that drive the simulators.
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // inherent f64 math is only there with std
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::seeded_rng;

/// Default reflection floor for components that must stay positive.
pub const POSITIVE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum PathKind {
    Constant {
        theta0: Vec<f64>,
    },
    /// `ν + A cos(2π t δ / T)`.
    Cosine {
        nu: Vec<f64>,
        amp: Vec<f64>,
        osc: Vec<f64>,
    },
    /// `dθ = vol dW` with a constant diagonal volatility.
    Martingale {
        theta0: Vec<f64>,
        vol: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamPathSpec {
    kind: PathKind,
    positive: Vec<usize>,
    floor: f64,
}

impl ParamPathSpec {
    pub fn constant(theta0: Vec<f64>) -> Self {
        Self::from_kind(PathKind::Constant { theta0 })
    }

    pub fn cosine(nu: Vec<f64>, amp: Vec<f64>, osc: Vec<f64>) -> Result<Self> {
        if amp.len() != nu.len() || osc.len() != nu.len() {
            return Err(Error::LengthMismatch {
                expected: nu.len(),
                found: if amp.len() != nu.len() { amp.len() } else { osc.len() },
            });
        }
        Ok(Self::from_kind(PathKind::Cosine { nu, amp, osc }))
    }

    pub fn martingale(theta0: Vec<f64>, vol: Vec<f64>) -> Result<Self> {
        if vol.len() != theta0.len() {
            return Err(Error::LengthMismatch {
                expected: theta0.len(),
                found: vol.len(),
            });
        }
        if let Some(v) = vol.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "martingale volatility",
                value: *v,
            });
        }
        Ok(Self::from_kind(PathKind::Martingale { theta0, vol }))
    }

    fn from_kind(kind: PathKind) -> Self {
        Self {
            kind,
            positive: Vec::new(),
            floor: POSITIVE_FLOOR,
        }
    }

    /// Marks components that are reflected at the floor under the martingale kind.
    pub fn with_positive(mut self, components: &[usize]) -> Self {
        self.positive = components.to_vec();
        self
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn kind(&self) -> &PathKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            PathKind::Constant { theta0 } | PathKind::Martingale { theta0, .. } => theta0.len(),
            PathKind::Cosine { nu, .. } => nu.len(),
        }
    }

    /// Value of a deterministic path at `t`; `None` for the martingale kind.
    pub fn deterministic_value(&self, t: f64, horizon: f64) -> Option<Vec<f64>> {
        match &self.kind {
            PathKind::Constant { theta0 } => Some(theta0.clone()),
            PathKind::Cosine { nu, amp, osc } => Some(
                nu.iter()
                    .zip(amp)
                    .zip(osc)
                    .map(|((n, a), d)| n + a * (2.0 * PI * t * d / horizon).cos())
                    .collect(),
            ),
            PathKind::Martingale { .. } => None,
        }
    }

    /// Time average over `[0, T]` of the deterministic part (the start value for martingales).
    pub fn mean_level(&self, _horizon: f64) -> Vec<f64> {
        match &self.kind {
            PathKind::Constant { theta0 } | PathKind::Martingale { theta0, .. } => theta0.clone(),
            PathKind::Cosine { nu, amp, osc } => nu
                .iter()
                .zip(amp)
                .zip(osc)
                .map(|((n, a), d)| {
                    if *d == 0.0 {
                        n + a
                    } else {
                        n + a * (2.0 * PI * d).sin() / (2.0 * PI * d)
                    }
                })
                .collect(),
        }
    }
}

impl ParamPathSpec {
    /// One Euler step of length `dt`, reflecting the positive components.
    fn martingale_step<R: Rng + ?Sized>(&self, theta: &mut [f64], vol: &[f64], dt: f64, rng: &mut R) {
        let sd = dt.sqrt();
        for (th, v) in theta.iter_mut().zip(vol) {
            let z: f64 = rng.sample(StandardNormal);
            *th += v * sd * z;
        }
        for &k in &self.positive {
            if let Some(th) = theta.get_mut(k) {
                if *th < self.floor {
                    *th = self.floor + (*th - self.floor).abs();
                }
            }
        }
    }
}

/// Forward-only evaluation of a path, for simulators whose time grid is too
/// fine to store. Martingale paths are stepped on the times they are asked for.
#[derive(Debug, Clone)]
pub struct PathCursor<'a> {
    spec: &'a ParamPathSpec,
    horizon: f64,
    t: f64,
    theta: Vec<f64>,
}

impl<'a> PathCursor<'a> {
    pub fn new(spec: &'a ParamPathSpec, horizon: f64) -> Self {
        let theta = spec
            .deterministic_value(0.0, horizon)
            .unwrap_or_else(|| spec.mean_level(horizon));
        Self {
            spec,
            horizon,
            t: 0.0,
            theta,
        }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Value at `t ≥` the last requested time.
    pub fn advance<R: Rng + ?Sized>(&mut self, t: f64, rng: &mut R) -> &[f64] {
        match &self.spec.kind {
            PathKind::Constant { .. } => {}
            PathKind::Cosine { nu, amp, osc } => {
                for (((th, n), a), d) in self.theta.iter_mut().zip(nu).zip(amp).zip(osc) {
                    *th = n + a * (2.0 * PI * t * d / self.horizon).cos();
                }
            }
            PathKind::Martingale { vol, .. } => {
                if t > self.t {
                    self.spec.martingale_step(&mut self.theta, vol, t - self.t, rng);
                }
            }
        }
        if t > self.t {
            self.t = t;
        }
        &self.theta
    }
}

/// A parameter path sampled on a time grid; values row-major, `dim` per time.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPath {
    times: Vec<f64>,
    values: Vec<f64>,
    dim: usize,
}

impl ParamPath {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn value(&self, j: usize) -> &[f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    pub fn component(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.dim + k]
    }

    /// Checks `lo < θ^(k) < hi` (or `>=`/`<=` when `inclusive`) on the whole grid.
    pub(crate) fn check_component(&self, k: usize, lo: f64, hi: f64, inclusive: bool) -> Result<()> {
        for j in 0..self.len() {
            let v = self.component(j, k);
            let ok = if inclusive {
                v >= lo && v <= hi
            } else {
                v > lo && v < hi
            };
            if !(ok && v.is_finite()) {
                return Err(Error::InvalidPath {
                    component: k,
                    time: self.times[j],
                    value: v,
                });
            }
        }
        Ok(())
    }
}

fn check_grid(grid: &[f64], horizon: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Empty("time grid"));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "horizon",
            value: horizon,
        });
    }
    let slack = 1e-12 * horizon;
    if grid[0] < -slack || !grid[0].is_finite() {
        return Err(Error::PathCoverage { horizon });
    }
    for (i, w) in grid.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NonIncreasingGrid { index: i + 1 });
        }
    }
    if grid[grid.len() - 1] > horizon + slack {
        return Err(Error::PathCoverage { horizon });
    }
    Ok(())
}

/// Samples `spec` on `grid` (a strictly increasing subset of `[0, T]`).
pub fn sample_path_with<R: Rng + ?Sized>(
    spec: &ParamPathSpec,
    grid: &[f64],
    horizon: f64,
    rng: &mut R,
) -> Result<ParamPath> {
    check_grid(grid, horizon)?;
    let dim = spec.dim();
    let mut values = Vec::with_capacity(grid.len() * dim);
    match &spec.kind {
        PathKind::Constant { theta0 } => {
            for _ in grid {
                values.extend_from_slice(theta0);
            }
        }
        PathKind::Cosine { .. } => {
            for &t in grid {
                values.extend(spec.deterministic_value(t, horizon).unwrap_or_default());
            }
        }
        PathKind::Martingale { theta0, vol } => {
            let mut theta = theta0.clone();
            values.extend_from_slice(&theta);
            for w in grid.windows(2) {
                spec.martingale_step(&mut theta, vol, w[1] - w[0], rng);
                values.extend_from_slice(&theta);
            }
        }
    }
    Ok(ParamPath {
        times: grid.to_vec(),
        values,
        dim,
    })
}

/// Seeded convenience wrapper around [`sample_path_with`].
pub fn sample_path(spec: &ParamPathSpec, grid: &[f64], horizon: f64, seed: u64) -> Result<ParamPath> {
    sample_path_with(spec, grid, horizon, &mut seeded_rng(seed))
}

/// `n + 1` equally spaced points `iT/n`, `i = 0..=n`.
pub fn uniform_grid(n: usize, horizon: f64) -> Vec<f64> {
    (0..=n).map(|i| horizon * i as f64 / n as f64).collect()
}

/// `(1/T) ∫_0^T θ_t dt` by the trapezoidal rule on the path's grid.
pub fn integrated_parameter(path: &ParamPath, horizon: f64) -> Result<Vec<f64>> {
    let slack = 1e-12 * horizon;
    let covers = path.len() >= 2
        && path.times[0].abs() <= slack
        && (path.times[path.len() - 1] - horizon).abs() <= slack;
    if !covers {
        return Err(Error::PathCoverage { horizon });
    }
    let mut acc = vec![0.0; path.dim];
    for j in 1..path.len() {
        let dt = path.times[j] - path.times[j - 1];
        for (k, a) in acc.iter_mut().enumerate() {
            *a += 0.5 * dt * (path.component(j - 1, k) + path.component(j, k));
        }
    }
    acc.iter_mut().for_each(|a| *a /= horizon);
    Ok(acc)
}
