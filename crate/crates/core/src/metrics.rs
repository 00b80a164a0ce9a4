//! Dynamical distances `d_t`, rescaled distances `d*_t`, ball membership and
//! sublevel sets `M_δ`.
//!
//! The free functions work on [`Trajectory`] values; [`TrajectoryCache`]
//! stores many trajectories on a shared time grid in flattened ambient form
//! for the estimators.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{FlowSpec, Trajectory, FREEZE_SPEED};
use crate::manifold::{ChartSpec, ManifoldPoint};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricQuery {
    pub t: f64,
    pub epsilon: f64,
    pub rescaled: bool,
}

impl MetricQuery {
    pub fn new(t: f64, epsilon: f64, rescaled: bool) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) || !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need t ≥ 0 and ε > 0, got t = {t}, ε = {epsilon}"
            )));
        }
        Ok(MetricQuery { t, epsilon, rescaled })
    }
}

fn shared_samples(tx: &Trajectory, ty: &Trajectory, t: f64) -> Result<usize> {
    let available = tx.horizon().min(ty.horizon());
    if t > available + 1e-9 * (1.0 + t) {
        return Err(Error::HorizonExceeded {
            requested: t,
            available,
        });
    }
    let n = tx.samples_until(t);
    if ty.samples_until(t) != n || tx.times[..n] != ty.times[..n] {
        return Err(Error::InvalidArgument(
            "trajectories do not share time samples".into(),
        ));
    }
    Ok(n)
}

/// `d_t(x, y)`: sup of pointwise distances over the shared samples in `[0, t]`.
pub fn dt_metric(chart: &ChartSpec, tx: &Trajectory, ty: &Trajectory, t: f64) -> Result<f64> {
    let n = shared_samples(tx, ty, t)?;
    let mut sup: f64 = 0.0;
    for k in 0..n {
        sup = sup.max(chart.distance(&tx.points[k], &ty.points[k])?);
    }
    Ok(sup)
}

/// `d*_t(x, y)`: sup of `d(φ_s x, φ_s y) / ‖X(φ_s x)‖`. Only the speeds of
/// `tx` enter, so the quantity is not symmetric.
pub fn rescaled_dt_metric(chart: &ChartSpec, tx: &Trajectory, ty: &Trajectory, t: f64) -> Result<f64> {
    let n = shared_samples(tx, ty, t)?;
    let mut sup: f64 = 0.0;
    for k in 0..n {
        let speed = tx.speeds[k];
        if speed < FREEZE_SPEED {
            return Err(Error::SingularBase {
                point: tx.base,
                speed,
                time: tx.times[k],
            });
        }
        sup = sup.max(chart.distance(&tx.points[k], &ty.points[k])? / speed);
    }
    Ok(sup)
}

/// Upper bound on how far the continuous-time sup can exceed the sampled
/// sup: two orbits drift apart by at most `2·‖X‖∞` per unit time, and every
/// time is within half a sample spacing of a sample.
pub fn sampling_error_bound(sample_dt: f64, sup_speed: f64) -> f64 {
    sup_speed * sample_dt
}

/// Grid points with `‖X‖ ≥ δ`.
pub fn sublevel_sample(flow: &FlowSpec, delta: f64, resolution: usize) -> Result<Vec<ManifoldPoint>> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("δ must be positive, got {delta}")));
    }
    sublevel_filter(flow, delta, &flow.chart().sample_grid(resolution))
}

/// Points of `sample` with `‖X‖ ≥ δ`, order preserved.
pub fn sublevel_filter(flow: &FlowSpec, delta: f64, sample: &[ManifoldPoint]) -> Result<Vec<ManifoldPoint>> {
    let mut out = Vec::new();
    for p in sample {
        if flow.speed(p)? >= delta {
            out.push(*p);
        }
    }
    Ok(out)
}

/// Many trajectories on one time grid, stored as flattened ambient vectors.
#[derive(Clone, Debug)]
pub struct TrajectoryCache {
    chart: ChartSpec,
    dim: usize,
    times: Vec<f64>,
    bases: Vec<ManifoldPoint>,
    ambient: Vec<f64>,
    speeds: Vec<f64>,
}

impl TrajectoryCache {
    /// Integrate every base point up to `horizon` (in parallel, results kept
    /// in input order).
    pub fn build(
        flow: &FlowSpec,
        bases: &[ManifoldPoint],
        horizon: f64,
        step: f64,
        sample_dt: f64,
    ) -> Result<Self> {
        let chart = flow.chart();
        let trajectories: Vec<Trajectory> = bases
            .par_iter()
            .map(|p| flow.integrate_sampled(p, horizon, step, sample_dt))
            .collect::<Result<_>>()?;
        Self::from_trajectories(&chart, &trajectories)
    }

    pub fn from_trajectories(chart: &ChartSpec, trajectories: &[Trajectory]) -> Result<Self> {
        let dim = chart.ambient_dim();
        let times = trajectories.first().map(|t| t.times.clone()).unwrap_or_else(|| vec![0.0]);
        let m = times.len();
        let mut ambient = vec![0.0; trajectories.len() * m * dim];
        let mut speeds = Vec::with_capacity(trajectories.len() * m);
        for (i, tr) in trajectories.iter().enumerate() {
            if tr.times != times {
                return Err(Error::InvalidArgument(
                    "cached trajectories must share time samples".into(),
                ));
            }
            for (k, p) in tr.points.iter().enumerate() {
                let off = (i * m + k) * dim;
                chart.embed(p, &mut ambient[off..off + dim]);
            }
            speeds.extend_from_slice(&tr.speeds);
        }
        Ok(TrajectoryCache {
            chart: chart.clone(),
            dim,
            times,
            bases: trajectories.iter().map(|t| t.base).collect(),
            ambient,
            speeds,
        })
    }

    pub fn chart(&self) -> &ChartSpec {
        &self.chart
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn bases(&self) -> &[ManifoldPoint] {
        &self.bases
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    /// Number of samples in `[0, t]`, or an error past the cached horizon.
    pub fn samples_until(&self, t: f64) -> Result<usize> {
        if t > self.horizon() + 1e-9 * (1.0 + t) {
            return Err(Error::HorizonExceeded {
                requested: t,
                available: self.horizon(),
            });
        }
        let tol = 1e-9 * (1.0 + t.abs());
        Ok(self.times.partition_point(|&s| s <= t + tol))
    }

    #[inline]
    fn at(&self, i: usize, k: usize) -> &[f64] {
        let off = (i * self.times.len() + k) * self.dim;
        &self.ambient[off..off + self.dim]
    }

    #[inline]
    pub fn speed(&self, i: usize, k: usize) -> f64 {
        self.speeds[i * self.times.len() + k]
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize, k: usize) -> f64 {
        self.chart.ambient_distance(self.at(i, k), self.at(j, k))
    }

    /// Smallest speed of trajectory `i` over its first `n` samples.
    pub fn min_speed(&self, i: usize, n: usize) -> f64 {
        let m = self.times.len();
        self.speeds[i * m..i * m + n].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Whether trajectory `i` stays in `M*` over its first `n` samples.
    pub fn is_regular(&self, i: usize, n: usize) -> bool {
        self.min_speed(i, n) >= FREEZE_SPEED
    }

    pub fn dt(&self, i: usize, j: usize, n: usize) -> f64 {
        (0..n).map(|k| self.distance(i, j, k)).fold(0.0, f64::max)
    }

    /// `d*_t(x_i, x_j)` with `x_i`'s speeds in the denominator.
    pub fn rescaled(&self, i: usize, j: usize, n: usize) -> Result<f64> {
        let mut sup: f64 = 0.0;
        for k in 0..n {
            let s = self.speed(i, k);
            if s < FREEZE_SPEED {
                return Err(Error::SingularBase {
                    point: self.bases[i],
                    speed: s,
                    time: self.times[k],
                });
            }
            sup = sup.max(self.distance(i, j, k) / s);
        }
        Ok(sup)
    }

    /// Membership of `x_j` in the (rescaled) dynamical ball of radius `eps`
    /// around `x_i` over the first `n` samples, with early exit. A center
    /// that touches the singular set has an empty rescaled ball.
    #[inline]
    pub fn within(&self, center: usize, j: usize, n: usize, eps: f64, rescaled: bool) -> bool {
        for k in 0..n {
            let r = if rescaled {
                let s = self.speed(center, k);
                if s < FREEZE_SPEED {
                    return false;
                }
                eps * s
            } else {
                eps
            };
            if self.distance(center, j, k) >= r {
                return false;
            }
        }
        true
    }

    /// Whether `x_i`, `x_j` are `eps`-separated in both orders.
    pub fn separated(&self, i: usize, j: usize, n: usize, eps: f64, rescaled: bool) -> bool {
        !self.within(i, j, n, eps, rescaled) && !self.within(j, i, n, eps, rescaled)
    }
}
