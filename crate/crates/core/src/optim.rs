//! Derivative-free simplex minimisation (Nelder–Mead) with optional box bounds.
use alloc::vec;
use alloc::vec::Vec;


use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct NelderMead {
    /// Convergence when the simplex diameter (max-norm distance of every
    /// vertex to the best one) drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Optional per-coordinate `(lower, upper)` box; trial points are projected.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 10_000,
            bounds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

impl NelderMead {
    fn project(&self, x: &mut [f64]) {
        if let Some(bounds) = &self.bounds {
            for (xi, (lo, hi)) in x.iter_mut().zip(bounds) {
                *xi = xi.clamp(*lo, *hi);
            }
        }
    }

    /// Minimises `f` from `x0`, building the initial simplex with `steps`
    /// along each axis. Non-finite function values are treated as `+inf`.
    pub fn minimize<F>(&self, mut f: F, x0: &[f64], steps: &[f64]) -> Result<Minimum>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let dim = x0.len();
        assert!(dim > 0, "empty parameter vector");
        assert_eq!(steps.len(), dim, "one step per coordinate");
        let mut evaluations = 0usize;
        let mut eval = |x: &[f64], evaluations: &mut usize| {
            *evaluations += 1;
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
        let mut start = x0.to_vec();
        self.project(&mut start);
        simplex.push(start.clone());
        for (i, step) in steps.iter().enumerate() {
            let mut v = start.clone();
            v[i] += step;
            self.project(&mut v);
            if v[i] == start[i] {
                // Stuck on a bound: step the other way.
                v[i] -= 2.0 * step;
                self.project(&mut v);
            }
            simplex.push(v);
        }
        let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evaluations)).collect();

        let mut order: Vec<usize> = (0..=dim).collect();
        let mut centroid = vec![0.0; dim];
        let mut trial = vec![0.0; dim];
        let mut trial2 = vec![0.0; dim];

        for iteration in 0..self.max_iterations {
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            let best = order[0];
            let worst = order[dim];
            let second_worst = order[dim - 1];

            let diameter = simplex
                .iter()
                .map(|v| {
                    v.iter()
                        .zip(&simplex[best])
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if diameter < self.tolerance {
                return Ok(Minimum {
                    x: simplex[best].clone(),
                    value: values[best],
                    iterations: iteration,
                    evaluations,
                });
            }

            centroid.iter_mut().for_each(|c| *c = 0.0);
            for &i in &order[..dim] {
                for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                    *c += x / dim as f64;
                }
            }

            let along = |t: &mut [f64], coef: f64, w: &[f64], c: &[f64]| {
                for ((ti, ci), wi) in t.iter_mut().zip(c).zip(w) {
                    *ti = ci + coef * (ci - wi);
                }
            };

            along(&mut trial, REFLECT, &simplex[worst], &centroid);
            self.project(&mut trial);
            let f_reflect = eval(&trial, &mut evaluations);

            if f_reflect < values[best] {
                along(&mut trial2, EXPAND, &simplex[worst], &centroid);
                self.project(&mut trial2);
                let f_expand = eval(&trial2, &mut evaluations);
                if f_expand < f_reflect {
                    simplex[worst].copy_from_slice(&trial2);
                    values[worst] = f_expand;
                } else {
                    simplex[worst].copy_from_slice(&trial);
                    values[worst] = f_reflect;
                }
                continue;
            }
            if f_reflect < values[second_worst] {
                simplex[worst].copy_from_slice(&trial);
                values[worst] = f_reflect;
                continue;
            }

            let (coef, reference) = if f_reflect < values[worst] {
                (CONTRACT, f_reflect)
            } else {
                (-CONTRACT, values[worst])
            };
            along(&mut trial2, coef, &simplex[worst], &centroid);
            self.project(&mut trial2);
            let f_contract = eval(&trial2, &mut evaluations);
            if f_contract < reference {
                simplex[worst].copy_from_slice(&trial2);
                values[worst] = f_contract;
                continue;
            }

            let anchor = simplex[best].clone();
            for &i in &order[1..] {
                for (x, a) in simplex[i].iter_mut().zip(&anchor) {
                    *x = a + SHRINK * (*x - a);
                }
                values[i] = eval(&simplex[i], &mut evaluations);
            }
        }

        let best = (0..=dim)
            .min_by(|&a, &b| values[a].total_cmp(&values[b]))
            .unwrap_or(0);
        Err(Error::NonConvergence {
            iterations: self.max_iterations,
            best: simplex[best].clone(),
            value: values[best],
        })
    }
}
