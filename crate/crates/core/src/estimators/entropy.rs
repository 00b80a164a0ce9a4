//! Entropy estimates from count tables on a sample of the manifold.

use serde::{Deserialize, Serialize};

use super::{
    check_ladder, entropy_slope, separating_table, spanning_table, CountTable, EntropyEstimate,
    EstimateMode, IntegrationConfig,
};
use crate::error::{Error, Result};
use crate::flows::FlowSpec;
use crate::manifold::{ChartSpec, ManifoldPoint};
use crate::metrics::TrajectoryCache;

/// Which finite sample stands in for the manifold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SampleSpec {
    /// `chart.sample_grid(resolution)`.
    Grid { resolution: usize },
    /// Product lattice with one resolution per coordinate axis.
    Product { axes: Vec<usize> },
    /// Explicit points.
    Points(Vec<ManifoldPoint>),
}

impl SampleSpec {
    pub fn points(&self, chart: &ChartSpec) -> Result<Vec<ManifoldPoint>> {
        match self {
            SampleSpec::Grid { resolution } => Ok(chart.sample_grid(*resolution)),
            SampleSpec::Product { axes } => chart.sample_product_grid(axes),
            SampleSpec::Points(p) => {
                for q in p {
                    chart.check(q)?;
                }
                Ok(p.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub sample: SampleSpec,
    pub t_ladder: Vec<f64>,
    pub eps_ladder: Vec<f64>,
    pub integration: IntegrationConfig,
    pub residual_threshold: f64,
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        check_ladder("t", &self.t_ladder, false)?;
        check_ladder("epsilon", &self.eps_ladder, true)?;
        if self.t_ladder.len() < 3 {
            return Err(Error::InsufficientData("need at least 3 t values".into()));
        }
        Ok(())
    }

    fn horizon(&self) -> f64 {
        *self.t_ladder.last().unwrap()
    }
}

/// Count table for `mode` over the configured sample. Classical mode covers
/// the whole sample; rescaled mode covers the sublevel part `M_ε` of the
/// sample with balls centered at points whose orbits avoid the singular set.
pub fn entropy_table(flow: &FlowSpec, rescaled: bool, cfg: &EstimatorConfig) -> Result<CountTable> {
    cfg.validate()?;
    let points = cfg.sample.points(&flow.chart())?;
    let cache = TrajectoryCache::build(
        flow,
        &points,
        cfg.horizon(),
        cfg.integration.step,
        cfg.integration.sample_dt,
    )?;
    let all: Vec<usize> = (0..points.len()).collect();
    if rescaled {
        let n = cache.samples_until(cfg.horizon())?;
        let regular: Vec<usize> = all.iter().copied().filter(|&i| cache.is_regular(i, n)).collect();
        let cache_ref = &cache;
        spanning_table(
            &cache,
            &regular,
            |eps| all.iter().copied().filter(|&i| cache_ref.speed(i, 0) >= eps).collect(),
            &cfg.t_ladder,
            &cfg.eps_ladder,
            true,
        )
    } else {
        spanning_table(&cache, &all, |_| all.clone(), &cfg.t_ladder, &cfg.eps_ladder, false)
    }
}

/// Classical (`R(t, ε)` on all of `M`) or rescaled (`R*(t, ε)` on `M_ε`)
/// entropy estimate.
pub fn estimate_entropy(flow: &FlowSpec, mode: EstimateMode, cfg: &EstimatorConfig) -> Result<EntropyEstimate> {
    let rescaled = match mode {
        EstimateMode::Classical => false,
        EstimateMode::Rescaled => true,
        EstimateMode::RescaledOnK => {
            return Err(Error::InvalidArgument(
                "use estimate_entropy_on for estimates restricted to K".into(),
            ))
        }
    };
    let table = entropy_table(flow, rescaled, cfg)?;
    entropy_slope(&table.triples(), mode, cfg.residual_threshold)
}

/// Rescaled spanning estimate `R*(t, ε, K)` for a fixed compact sample `K`
/// of `M*`; the sample in `cfg` is ignored.
pub fn estimate_entropy_on(flow: &FlowSpec, k: &[ManifoldPoint], cfg: &EstimatorConfig) -> Result<(EntropyEstimate, CountTable)> {
    cfg.validate()?;
    let cache = TrajectoryCache::build(flow, k, cfg.horizon(), cfg.integration.step, cfg.integration.sample_dt)?;
    let n = cache.samples_until(cfg.horizon())?;
    let idx: Vec<usize> = (0..k.len()).collect();
    if let Some(&bad) = idx.iter().find(|&&i| !cache.is_regular(i, n)) {
        return Err(Error::SingularBase {
            point: k[bad],
            speed: cache.min_speed(bad, n),
            time: 0.0,
        });
    }
    let table = spanning_table(&cache, &idx, |_| idx.clone(), &cfg.t_ladder, &cfg.eps_ladder, true)?;
    let est = entropy_slope(&table.triples(), EstimateMode::RescaledOnK, cfg.residual_threshold)?;
    Ok((est, table))
}

/// Growth of greedy rescaled separating counts `S*(t, ε, K)`.
pub fn separating_estimate(flow: &FlowSpec, k: &[ManifoldPoint], cfg: &EstimatorConfig) -> Result<(EntropyEstimate, CountTable)> {
    cfg.validate()?;
    let cache = TrajectoryCache::build(flow, k, cfg.horizon(), cfg.integration.step, cfg.integration.sample_dt)?;
    let idx: Vec<usize> = (0..k.len()).collect();
    let table = separating_table(&cache, &idx, &cfg.t_ladder, &cfg.eps_ladder, true)?;
    let est = entropy_slope(&table.triples(), EstimateMode::RescaledOnK, cfg.residual_threshold)?;
    Ok((est, table))
}
