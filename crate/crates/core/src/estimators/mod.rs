//! Spanning and separating counts, slope fits, the explicit grid spanning
//! set and the positivity certificate.
//!
//! Count tables are computed on a `(t, ε)` ladder from one trajectory cache.
//! Each cell starts from a greedy cover (or packing) and is then replaced by
//! the best witness set found in any cell it dominates: a cover that works
//! for a larger `t` or smaller `ε` also works here, and a packing separated
//! at a smaller `t` or larger `ε` stays separated here. The reported counts
//! are therefore monotone on the whole ladder while every count still comes
//! with a valid witness set for its own cell.

mod certificate;
mod cover;
mod entropy;
mod grid;
mod pairs;
mod slope;

pub use certificate::{positivity_certificate, Certificate, CertificateMargins, SeparatingFamily};
pub use cover::{greedy_packing, greedy_set_cover};
pub use entropy::{
    entropy_table, estimate_entropy, estimate_entropy_on, separating_estimate, EstimatorConfig,
    SampleSpec,
};
pub use grid::{grid_spanning_set, lattice_axis_count, Atlas, AtlasChart, GridCoverReport};
pub use pairs::PairProfiles;
pub use slope::{entropy_slope, linear_fit, EntropyEstimate, EstimateMode, SlopeFit};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{FlowSpec, DEFAULT_STEP};
use crate::manifold::ManifoldPoint;
use crate::metrics::{MetricQuery, TrajectoryCache};

/// Integration settings shared by all trajectory caches of one estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    pub step: f64,
    pub sample_dt: f64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            step: DEFAULT_STEP,
            sample_dt: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub count: usize,
    pub witnesses: Vec<ManifoldPoint>,
    pub query: MetricQuery,
    pub target: String,
    pub target_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackReport {
    pub count: usize,
    pub witnesses: Vec<ManifoldPoint>,
    pub query: MetricQuery,
    pub target: String,
    pub target_size: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountKind {
    Spanning,
    Separating,
}

/// One `(t, ε)` cell of a count table. `witnesses` are cache indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountCell {
    pub t: f64,
    pub epsilon: f64,
    pub count: usize,
    /// Greedy count for this cell alone, before the envelope.
    pub greedy_count: usize,
    pub target_size: usize,
    pub witnesses: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountTable {
    pub kind: CountKind,
    pub rescaled: bool,
    pub t_ladder: Vec<f64>,
    pub eps_ladder: Vec<f64>,
    /// `cells[ti][ei]`.
    pub cells: Vec<Vec<CountCell>>,
}

impl CountTable {
    pub fn cell(&self, ti: usize, ei: usize) -> &CountCell {
        &self.cells[ti][ei]
    }

    /// `(t, ε, count)` triples in ladder order.
    pub fn triples(&self) -> Vec<(f64, f64, usize)> {
        self.cells
            .iter()
            .flatten()
            .map(|c| (c.t, c.epsilon, c.count))
            .collect()
    }

    /// Spanning counts must not decrease in `t` or increase in `ε`;
    /// separating counts likewise.
    pub fn is_monotone(&self) -> bool {
        let nt = self.t_ladder.len();
        let ne = self.eps_ladder.len();
        (0..nt).all(|ti| {
            (0..ne).all(|ei| {
                let c = self.cells[ti][ei].count;
                (ti + 1 == nt || self.cells[ti + 1][ei].count >= c)
                    && (ei + 1 == ne || self.cells[ti][ei + 1].count <= c)
            })
        })
    }
}

pub fn check_ladder(name: &str, ladder: &[f64], positive: bool) -> Result<()> {
    let ok = !ladder.is_empty()
        && ladder.iter().all(|x| x.is_finite() && (*x > 0.0 || (!positive && *x >= 0.0)))
        && ladder.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} ladder must be nonempty, strictly increasing and {}: {ladder:?}",
            if positive { "positive" } else { "nonnegative" }
        )))
    }
}

/// Spanning counts on a `(t, ε)` ladder. `targets(ε)` returns the cache
/// indices to cover at that radius; `candidates` are the admissible ball
/// centers.
pub fn spanning_table<F>(
    cache: &TrajectoryCache,
    candidates: &[usize],
    mut targets: F,
    t_ladder: &[f64],
    eps_ladder: &[f64],
    rescaled: bool,
) -> Result<CountTable>
where
    F: FnMut(f64) -> Vec<usize>,
{
    check_ladder("t", t_ladder, false)?;
    check_ladder("epsilon", eps_ladder, true)?;
    let target_sets: Vec<Vec<usize>> = eps_ladder.iter().map(|&e| targets(e)).collect();
    let mut union: Vec<usize> = target_sets.iter().flatten().copied().collect();
    union.sort_unstable();
    union.dedup();
    let eps_max = *eps_ladder.last().unwrap();
    let profiles = PairProfiles::build(cache, candidates, &union, t_ladder, eps_max, rescaled)?;

    let mut position = vec![u32::MAX; cache.len()];
    let mut cells = Vec::with_capacity(t_ladder.len());
    for (ti, &t) in t_ladder.iter().enumerate() {
        let mut row = Vec::with_capacity(eps_ladder.len());
        for (ei, &eps) in eps_ladder.iter().enumerate() {
            let tset = &target_sets[ei];
            for (pos, &j) in tset.iter().enumerate() {
                position[j] = pos as u32;
            }
            let sets: Vec<Vec<u32>> = (0..candidates.len())
                .map(|c| {
                    profiles
                        .ball(c, ti, eps)
                        .filter_map(|j| (position[j] != u32::MAX).then_some(position[j]))
                        .collect()
                })
                .collect();
            for &j in tset {
                position[j] = u32::MAX;
            }
            let chosen = greedy_set_cover(&sets, tset.len()).map_err(|bad| Error::InfeasibleCover {
                index: bad,
                point: cache.bases()[tset[bad]],
            })?;
            let witnesses: Vec<usize> = chosen.iter().map(|&c| candidates[c]).collect();
            row.push(CountCell {
                t,
                epsilon: eps,
                count: witnesses.len(),
                greedy_count: witnesses.len(),
                target_size: tset.len(),
                witnesses,
            });
        }
        cells.push(row);
    }
    let mut table = CountTable {
        kind: CountKind::Spanning,
        rescaled,
        t_ladder: t_ladder.to_vec(),
        eps_ladder: eps_ladder.to_vec(),
        cells,
    };
    spanning_envelope(&mut table);
    Ok(table)
}

fn spanning_envelope(table: &mut CountTable) {
    let nt = table.t_ladder.len();
    let ne = table.eps_ladder.len();
    for ti in (0..nt).rev() {
        for ei in 0..ne {
            let mut best: Option<(usize, usize)> = None;
            let own = table.cells[ti][ei].count;
            if ti + 1 < nt && table.cells[ti + 1][ei].count < own {
                best = Some((ti + 1, ei));
            }
            if ei > 0 {
                let cur = best.map_or(own, |(a, b)| table.cells[a][b].count);
                if table.cells[ti][ei - 1].count < cur {
                    best = Some((ti, ei - 1));
                }
            }
            if let Some((a, b)) = best {
                let w = table.cells[a][b].witnesses.clone();
                let cell = &mut table.cells[ti][ei];
                cell.count = w.len();
                cell.witnesses = w;
            }
        }
    }
}

/// Separating counts of the sample `k` (cache indices, scan order) on a
/// `(t, ε)` ladder. Points are kept when they are separated from every kept
/// point in both directions.
pub fn separating_table(
    cache: &TrajectoryCache,
    k: &[usize],
    t_ladder: &[f64],
    eps_ladder: &[f64],
    rescaled: bool,
) -> Result<CountTable> {
    check_ladder("t", t_ladder, false)?;
    check_ladder("epsilon", eps_ladder, true)?;
    if rescaled {
        let n = cache.samples_until(*t_ladder.last().unwrap())?;
        for &i in k {
            if !cache.is_regular(i, n) {
                let m = (0..n).find(|&s| cache.speed(i, s) < crate::flows::FREEZE_SPEED).unwrap_or(0);
                return Err(Error::SingularBase {
                    point: cache.bases()[i],
                    speed: cache.speed(i, m),
                    time: cache.times()[m],
                });
            }
        }
    }
    let eps_max = *eps_ladder.last().unwrap();
    let profiles = PairProfiles::build(cache, k, k, t_ladder, eps_max, rescaled)?;
    let mut position = vec![u32::MAX; cache.len()];
    for (pos, &j) in k.iter().enumerate() {
        position[j] = pos as u32;
    }
    let mut cells = Vec::with_capacity(t_ladder.len());
    for (ti, &t) in t_ladder.iter().enumerate() {
        let mut row = Vec::with_capacity(eps_ladder.len());
        for &eps in eps_ladder {
            let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); k.len()];
            for p in 0..k.len() {
                for j in profiles.ball(p, ti, eps) {
                    let q = position[j] as usize;
                    if q != p {
                        adjacency[p].push(q);
                        adjacency[q].push(p);
                    }
                }
            }
            let kept = greedy_packing(k.len(), |p| adjacency[p].iter().copied());
            let witnesses: Vec<usize> = kept.iter().map(|&p| k[p]).collect();
            row.push(CountCell {
                t,
                epsilon: eps,
                count: witnesses.len(),
                greedy_count: witnesses.len(),
                target_size: k.len(),
                witnesses,
            });
        }
        cells.push(row);
    }
    let mut table = CountTable {
        kind: CountKind::Separating,
        rescaled,
        t_ladder: t_ladder.to_vec(),
        eps_ladder: eps_ladder.to_vec(),
        cells,
    };
    separating_envelope(&mut table);
    Ok(table)
}

fn separating_envelope(table: &mut CountTable) {
    let nt = table.t_ladder.len();
    let ne = table.eps_ladder.len();
    for ti in 0..nt {
        for ei in (0..ne).rev() {
            let mut best: Option<(usize, usize)> = None;
            let own = table.cells[ti][ei].count;
            if ti > 0 && table.cells[ti - 1][ei].count > own {
                best = Some((ti - 1, ei));
            }
            if ei + 1 < ne {
                let cur = best.map_or(own, |(a, b)| table.cells[a][b].count);
                if table.cells[ti][ei + 1].count > cur {
                    best = Some((ti, ei + 1));
                }
            }
            if let Some((a, b)) = best {
                let w = table.cells[a][b].witnesses.clone();
                let cell = &mut table.cells[ti][ei];
                cell.count = w.len();
                cell.witnesses = w;
            }
        }
    }
}

fn describe(points: &[ManifoldPoint]) -> String {
    format!("sample of {} points", points.len())
}

/// Greedy (rescaled) spanning set of `target` using balls centered at
/// `candidates`. With `rescaled`, candidates touching the singular set
/// before time `t` are ignored.
pub fn spanning_count(
    flow: &FlowSpec,
    target: &[ManifoldPoint],
    t: f64,
    epsilon: f64,
    rescaled: bool,
    candidates: &[ManifoldPoint],
    integration: &IntegrationConfig,
) -> Result<CoverReport> {
    let query = MetricQuery::new(t, epsilon, rescaled)?;
    if target.is_empty() {
        return Err(Error::InvalidArgument("spanning target is empty".into()));
    }
    let all: Vec<ManifoldPoint> = candidates.iter().chain(target).copied().collect();
    let cache = TrajectoryCache::build(flow, &all, t, integration.step, integration.sample_dt)?;
    let n = cache.samples_until(t)?;
    let cand: Vec<usize> = (0..candidates.len())
        .filter(|&i| !rescaled || cache.is_regular(i, n))
        .collect();
    let tgt: Vec<usize> = (candidates.len()..all.len()).collect();
    let table = spanning_table(&cache, &cand, |_| tgt.clone(), &[t], &[epsilon], rescaled)?;
    let cell = table.cell(0, 0);
    Ok(CoverReport {
        count: cell.count,
        witnesses: cell.witnesses.iter().map(|&i| all[i]).collect(),
        query,
        target: describe(target),
        target_size: target.len(),
    })
}

/// Greedy rescaled `(t, ε)`-separating subset of `k`, scanned in order.
pub fn separating_count(
    flow: &FlowSpec,
    k: &[ManifoldPoint],
    t: f64,
    epsilon: f64,
    integration: &IntegrationConfig,
) -> Result<PackReport> {
    let query = MetricQuery::new(t, epsilon, true)?;
    let cache = TrajectoryCache::build(flow, k, t, integration.step, integration.sample_dt)?;
    let idx: Vec<usize> = (0..k.len()).collect();
    let table = separating_table(&cache, &idx, &[t], &[epsilon], true)?;
    let cell = table.cell(0, 0);
    Ok(PackReport {
        count: cell.count,
        witnesses: cell.witnesses.iter().map(|&i| k[i]).collect(),
        query,
        target: describe(k),
        target_size: k.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ChartSpec;

    fn circle(n: usize) -> Vec<ManifoldPoint> {
        let chart = ChartSpec::standard_torus();
        (0..n)
            .map(|i| chart.point(&[-2.0, 4.0 * i as f64 / n as f64]).unwrap())
            .collect()
    }

    #[test]
    fn large_radius_needs_one_ball() {
        let f = FlowSpec::TorusItem4;
        let c = circle(32);
        let r = spanning_count(&f, &c, 0.0, 10.0, false, &c, &IntegrationConfig::default()).unwrap();
        assert_eq!(r.count, 1);
        let p = separating_count(&f, &c, 0.0, 10.0, &IntegrationConfig::default()).unwrap();
        assert_eq!(p.count, 1);
    }

    #[test]
    fn circle_cover_at_time_zero() {
        // Arcs of length 2ε = 1 on a circle of length 4: at least 4 are
        // needed, greedy stays within a factor 2.
        let f = FlowSpec::TorusItem4;
        let c = circle(400);
        let r = spanning_count(&f, &c, 0.0, 0.5, false, &c, &IntegrationConfig::default()).unwrap();
        assert!((4..=8).contains(&r.count), "count {}", r.count);
    }

    #[test]
    fn item4_circle_packing_doubles() {
        let f = FlowSpec::TorusItem4;
        let integ = IntegrationConfig {
            step: 1e-3,
            sample_dt: 0.05,
        };
        for n in 1..=6u32 {
            let k = circle(1 << n);
            let p = separating_count(&f, &k, n as f64, 1.0, &integ).unwrap();
            assert_eq!(p.count, 1 << n, "n = {n}");
        }
    }

    #[test]
    fn tables_are_monotone() {
        let f = FlowSpec::TorusItem4;
        let chart = f.chart();
        let pts = chart.sample_grid(12);
        let cache = TrajectoryCache::build(&f, &pts, 4.0, 1e-2, 0.1).unwrap();
        let all: Vec<usize> = (0..pts.len()).collect();
        let ts = [0.0, 1.0, 2.0, 4.0];
        let es = [0.25, 0.5, 1.0];
        let span = spanning_table(&cache, &all, |_| all.clone(), &ts, &es, false).unwrap();
        assert!(span.is_monotone());
        let regular: Vec<usize> = all.iter().copied().filter(|&i| cache.is_regular(i, cache.samples_until(4.0).unwrap())).collect();
        let pack = separating_table(&cache, &regular, &ts, &es, true).unwrap();
        assert!(pack.is_monotone());
    }

    #[test]
    fn envelope_witnesses_stay_valid() {
        let f = FlowSpec::TorusItem4;
        let pts = f.chart().sample_grid(10);
        let cache = TrajectoryCache::build(&f, &pts, 3.0, 1e-2, 0.1).unwrap();
        let all: Vec<usize> = (0..pts.len()).collect();
        let ts = [0.0, 1.5, 3.0];
        let es = [0.3, 0.6, 1.2];
        let span = spanning_table(&cache, &all, |_| all.clone(), &ts, &es, false).unwrap();
        for (ti, &t) in ts.iter().enumerate() {
            let n = cache.samples_until(t).unwrap();
            for (ei, &e) in es.iter().enumerate() {
                let cell = span.cell(ti, ei);
                for &y in &all {
                    assert!(cell.witnesses.iter().any(|&x| cache.within(x, y, n, e, false)));
                }
            }
        }
    }
}
