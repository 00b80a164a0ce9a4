//! Positivity certificate for rescaled entropy from a family of
//! separated sets `E_n ⊂ K` at times `t_n → ∞`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{linear_fit, IntegrationConfig};
use crate::error::{Error, Result};
use crate::flows::{FlowSpec, FREEZE_SPEED};
use crate::manifold::{ChartSpec, ManifoldPoint};
use crate::metrics::TrajectoryCache;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparatingFamily {
    pub t_n: Vec<f64>,
    pub e_n: Vec<Vec<ManifoldPoint>>,
    /// Claimed values, if any. [`positivity_certificate`] ignores them and
    /// recomputes both.
    pub growth: f64,
    pub min_separation: f64,
}

impl SeparatingFamily {
    pub fn new(t_n: Vec<f64>, e_n: Vec<Vec<ManifoldPoint>>) -> Result<Self> {
        if t_n.len() != e_n.len() || t_n.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need matching t_n and E_n lists of length ≥ 2, got {} and {}",
                t_n.len(),
                e_n.len()
            )));
        }
        if !t_n.iter().all(|t| *t > 0.0 && t.is_finite()) || !t_n.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(format!("t_n must be positive and increasing: {t_n:?}")));
        }
        if e_n.iter().any(|e| e.len() < 2) {
            return Err(Error::InvalidArgument("every E_n needs at least two points".into()));
        }
        Ok(SeparatingFamily {
            t_n,
            e_n,
            growth: f64::NAN,
            min_separation: f64::NAN,
        })
    }

    /// `E_n` = `2^n` equally spaced points of the closed curve `curve(θ)`,
    /// `θ ∈ [0, 1)`, for `n = 1..=n_max`; nested in `n`.
    pub fn dyadic_curve<F>(n_max: u32, t_n: impl Fn(u32) -> f64, curve: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<ManifoldPoint>,
    {
        let mut ts = Vec::new();
        let mut es = Vec::new();
        for n in 1..=n_max {
            let m = 1usize << n;
            es.push((0..m).map(|i| curve(i as f64 / m as f64)).collect::<Result<Vec<_>>>()?);
            ts.push(t_n(n));
        }
        Self::new(ts, es)
    }

    /// The vertical circle `x = x0` of the flat torus with `t_n = n`.
    pub fn torus_circle(chart: &ChartSpec, x0: f64, n_max: u32) -> Result<Self> {
        let side = match chart {
            ChartSpec::FlatTorus2 { sides } => sides[1],
            other => {
                return Err(Error::ChartMismatch {
                    expected: crate::manifold::ChartKind::FlatTorus2,
                    found: other.kind(),
                })
            }
        };
        Self::dyadic_curve(n_max, |n| n as f64, |s| chart.point(&[x0, s * side]))
    }

    /// The parallel `z = z0` of the sphere with `t_n = n·scale`.
    pub fn sphere_parallel(z0: f64, scale: f64, n_max: u32) -> Result<Self> {
        let chart = ChartSpec::sphere();
        let r = (1.0 - z0 * z0).sqrt();
        Self::dyadic_curve(
            n_max,
            |n| n as f64 * scale,
            |s| {
                let a = std::f64::consts::TAU * s;
                chart.point(&[r * a.cos(), r * a.sin(), z0])
            },
        )
    }

    /// Union of all `E_n` without repeats, in first-seen order.
    pub fn union(&self) -> Vec<ManifoldPoint> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        for p in self.e_n.iter().flatten() {
            seen.entry(key(p)).or_insert_with(|| {
                out.push(*p);
            });
        }
        out
    }
}

fn key(p: &ManifoldPoint) -> [u64; 3] {
    p.coords.map(f64::to_bits)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateMargins {
    /// Growth must exceed this.
    pub growth: f64,
    /// The overall minimum separation must exceed this.
    pub separation: f64,
    /// The slope of `log min_sep(n)` against `t_n` must be at least `-trend`;
    /// a finite family cannot show an infimum, but it can show decay.
    pub trend: f64,
}

impl Default for CertificateMargins {
    fn default() -> Self {
        CertificateMargins {
            growth: 1e-3,
            separation: 1e-9,
            trend: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Least-squares slope of `log card(E_n)` against `t_n`.
    pub growth: f64,
    /// `max_n (1/t_n) log card(E_n)`.
    pub growth_max_ratio: f64,
    pub min_separation: f64,
    pub per_n_min_separation: Vec<f64>,
    pub separation_trend: f64,
    pub cardinalities: Vec<usize>,
    pub margins: CertificateMargins,
    pub verdict: bool,
}

/// Recompute the growth of `card(E_n)` and the minimum rescaled separation
/// `min_n min_{p≠q ∈ E_n} d*_{t_n}(p, q)` by brute force over ordered pairs.
pub fn positivity_certificate(
    flow: &FlowSpec,
    k: &[ManifoldPoint],
    family: &SeparatingFamily,
    margins: CertificateMargins,
    integration: &IntegrationConfig,
) -> Result<Certificate> {
    let family = SeparatingFamily::new(family.t_n.clone(), family.e_n.clone())?;
    let chart = flow.chart();
    let union = family.union();
    check_subset(&chart, &union, k)?;

    let index: HashMap<[u64; 3], usize> = union.iter().enumerate().map(|(i, p)| (key(p), i)).collect();
    let horizon = *family.t_n.last().unwrap();
    let cache = TrajectoryCache::build(flow, &union, horizon, integration.step, integration.sample_dt)?;
    let full = cache.samples_until(horizon)?;
    for i in 0..union.len() {
        if !cache.is_regular(i, full) {
            let m = (0..full).find(|&s| cache.speed(i, s) < FREEZE_SPEED).unwrap_or(0);
            return Err(Error::SingularBase {
                point: union[i],
                speed: cache.speed(i, m),
                time: cache.times()[m],
            });
        }
    }

    let mut per_n = Vec::with_capacity(family.t_n.len());
    let mut cards = Vec::with_capacity(family.t_n.len());
    for (t, e) in family.t_n.iter().zip(&family.e_n) {
        let mut idx: Vec<usize> = e.iter().map(|p| index[&key(p)]).collect();
        idx.sort_unstable();
        idx.dedup();
        let n = cache.samples_until(*t)?;
        per_n.push(min_pair_separation(&cache, &idx, n));
        cards.push(idx.len());
    }

    let logs: Vec<f64> = cards.iter().map(|&c| (c as f64).ln()).collect();
    let (growth, _, _) = linear_fit(&family.t_n, &logs);
    let growth_max_ratio = logs
        .iter()
        .zip(&family.t_n)
        .map(|(l, t)| l / t)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_separation = per_n.iter().copied().fold(f64::INFINITY, f64::min);
    let log_sep: Vec<f64> = per_n.iter().map(|s| s.ln()).collect();
    let separation_trend = if min_separation > 0.0 {
        linear_fit(&family.t_n, &log_sep).0
    } else {
        f64::NEG_INFINITY
    };
    let verdict = growth > margins.growth
        && min_separation > margins.separation
        && separation_trend >= -margins.trend;
    Ok(Certificate {
        growth,
        growth_max_ratio,
        min_separation,
        per_n_min_separation: per_n,
        separation_trend,
        cardinalities: cards,
        margins,
        verdict,
    })
}

fn check_subset(chart: &ChartSpec, points: &[ManifoldPoint], k: &[ManifoldPoint]) -> Result<()> {
    let exact: HashMap<[u64; 3], ()> = k.iter().map(|p| (key(p), ())).collect();
    for p in points {
        chart.check(p)?;
        if exact.contains_key(&key(p)) {
            continue;
        }
        let near = k
            .iter()
            .map(|q| chart.distance(p, q))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if near > 1e-9 {
            return Err(Error::InvalidArgument(format!("E_n point {p} is not in K")));
        }
    }
    Ok(())
}

/// Minimum of `d*` over ordered pairs of `idx`, scanning samples from the
/// latest (where separation usually peaks) and abandoning a pair once its
/// running sup reaches the best minimum so far.
fn min_pair_separation(cache: &TrajectoryCache, idx: &[usize], n: usize) -> f64 {
    let row_min = |a: usize| -> f64 {
        let i = idx[a];
        let mut best = f64::INFINITY;
        for (b, &j) in idx.iter().enumerate() {
            if a == b {
                continue;
            }
            let mut sup: f64 = 0.0;
            for k in (0..n).rev() {
                sup = sup.max(cache.distance(i, j, k) / cache.speed(i, k));
                if sup >= best {
                    break;
                }
            }
            best = best.min(sup);
        }
        best
    };
    (0..idx.len())
        .into_par_iter()
        .map(row_min)
        .reduce(|| f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integ() -> IntegrationConfig {
        IntegrationConfig {
            step: 1e-3,
            sample_dt: 0.05,
        }
    }

    #[test]
    fn constant_torus_separation_decays() {
        let f = FlowSpec::ConstantTorus {
            velocity: [1.0, 0.0],
        };
        let fam = SeparatingFamily::torus_circle(&f.chart(), 0.0, 8).unwrap();
        let k = fam.union();
        let c = positivity_certificate(&f, &k, &fam, CertificateMargins::default(), &integ()).unwrap();
        // Oracle: isometric flow, spacing 4/2^n on the circle.
        for (n, s) in c.per_n_min_separation.iter().enumerate() {
            let oracle = 4.0 / (1u64 << (n + 1)) as f64;
            assert!((s - oracle).abs() < 1e-9, "n = {}: {s} vs {oracle}", n + 1);
        }
        assert!((c.growth - 2f64.ln()).abs() < 1e-12);
        assert!(!c.verdict);
    }

    #[test]
    fn item4_circle_is_certified() {
        let f = FlowSpec::TorusItem4;
        let fam = SeparatingFamily::torus_circle(&f.chart(), -2.0, 6).unwrap();
        let k = fam.union();
        let c = positivity_certificate(&f, &k, &fam, CertificateMargins::default(), &integ()).unwrap();
        assert!((c.growth - 2f64.ln()).abs() < 1e-12);
        assert!(c.min_separation >= 1.0, "{:?}", c.per_n_min_separation);
        assert!(c.verdict);
    }

    #[test]
    fn points_outside_k_are_rejected() {
        let f = FlowSpec::TorusItem4;
        let fam = SeparatingFamily::torus_circle(&f.chart(), -2.0, 3).unwrap();
        let k = fam.e_n[0].clone();
        assert!(matches!(
            positivity_certificate(&f, &k, &fam, CertificateMargins::default(), &integ()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn singular_points_are_rejected() {
        let f = FlowSpec::TorusItem4;
        let fam = SeparatingFamily::torus_circle(&f.chart(), 0.0, 2).unwrap();
        let k = fam.union();
        assert!(matches!(
            positivity_certificate(&f, &k, &fam, CertificateMargins::default(), &integ()),
            Err(Error::SingularBase { .. })
        ));
    }
}
