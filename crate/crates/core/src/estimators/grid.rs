//! Explicit spanning sets built from lattices in coordinate charts.
//!
//! With charts `f_i : B(0, 2) → M*` that are `A`-Lipschitz, a speed floor
//! `ρ` on their images and a Lipschitz constant `L` of the field, the set
//! `F = ⋃ f_i(E(δ))` with `E(δ) = δZ^d ∩ (-2, 2)^d` and
//! `δ = ερ / (e^{2Lt} A B₀)`, `B₀ = √d / 2`, is a rescaled `(t, ε)`-spanning
//! set of every `K ⊂ ⋃ f_i(B(0, 1))`.

use serde::{Deserialize, Serialize};

use super::{CoverReport, IntegrationConfig};
use crate::error::{Error, Result};
use crate::flows::FlowSpec;
use crate::manifold::{ChartKind, ChartSpec, ManifoldPoint, FIBER_SCALE};
use crate::metrics::{MetricQuery, TrajectoryCache};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtlasChart {
    pub center: ManifoldPoint,
    pub scale: f64,
}

/// Finitely many bi-Lipschitz charts `f_i(u) = center_i ⊕ scale·u`
/// (translation on the tori, gnomonic projection on the sphere).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atlas {
    pub manifold: ChartSpec,
    pub charts: Vec<AtlasChart>,
}

/// Points per axis of `E(δ)`: the integers `l` with `|l|·δ < 2`. Returned
/// as `f64` since tiny `δ` overflows every integer type.
pub fn lattice_axis_count(delta: f64) -> f64 {
    2.0 * (2.0 / delta).ceil() - 1.0
}

impl Atlas {
    pub fn new(manifold: ChartSpec, charts: Vec<AtlasChart>) -> Result<Self> {
        for c in &charts {
            manifold.check(&c.center)?;
            if !(c.scale > 0.0 && c.scale.is_finite()) {
                return Err(Error::InvalidArgument(format!("chart scale {} must be positive", c.scale)));
            }
            let limit = match manifold.kind() {
                ChartKind::FlatTorus2 => f64::INFINITY,
                ChartKind::Sphere2 => 0.25,
                ChartKind::MappingTorus => 0.2,
            };
            if c.scale > limit {
                return Err(Error::InvalidArgument(format!(
                    "chart scale {} exceeds {limit} on {:?}",
                    c.scale,
                    manifold.kind()
                )));
            }
        }
        Ok(Atlas { manifold, charts })
    }

    /// Greedy atlas: scan `k` and open a new chart centered at every point
    /// not yet inside `f_i(B(0, 1))` for an existing chart.
    pub fn covering(manifold: &ChartSpec, k: &[ManifoldPoint], scale: f64) -> Result<Self> {
        let mut atlas = Atlas::new(manifold.clone(), Vec::new())?;
        for y in k {
            if atlas.locate(y).is_none() {
                atlas.charts.push(AtlasChart {
                    center: *y,
                    scale,
                });
                Atlas::new(manifold.clone(), atlas.charts.clone())?;
            }
        }
        Ok(atlas)
    }

    pub fn dimension(&self) -> usize {
        self.manifold.dimension()
    }

    /// A common Lipschitz constant of the chart maps on `B(0, 2)`.
    pub fn lipschitz(&self) -> f64 {
        let scale = self.charts.iter().map(|c| c.scale).fold(0.0, f64::max);
        match &self.manifold {
            ChartSpec::FlatTorus2 { .. } | ChartSpec::Sphere2 => scale,
            ChartSpec::MappingTorus { matrix } => {
                let frob = |m: [[i64; 2]; 2]| m.iter().flatten().map(|&x| (x * x) as f64).sum::<f64>();
                let fiber = frob(matrix.0).max(frob(matrix.inverse().0)).max(2.0);
                let c2 = FIBER_SCALE * FIBER_SCALE;
                scale * (c2 * fiber + 1.0 + c2).sqrt()
            }
        }
    }

    /// `f_i(u)`.
    pub fn map(&self, i: usize, u: &[f64]) -> ManifoldPoint {
        let c = &self.charts[i];
        match &self.manifold {
            ChartSpec::Sphere2 => {
                let basis = self.manifold.tangent_basis(&c.center);
                let p = c.center.coords;
                let mut q = [0.0; 3];
                for a in 0..3 {
                    q[a] = p[a] + c.scale * (u[0] * basis[0][a] + u[1] * basis[1][a]);
                }
                self.manifold.reduce(ManifoldPoint {
                    kind: ChartKind::Sphere2,
                    coords: q,
                })
            }
            _ => {
                let mut off = [0.0; 3];
                for (a, x) in u.iter().enumerate() {
                    off[a] = c.scale * x;
                }
                self.manifold.displace(&c.center, off)
            }
        }
    }

    /// `f_i⁻¹(y)` for the lift of `y` closest to the chart center.
    pub fn inverse(&self, i: usize, y: &ManifoldPoint) -> Option<Vec<f64>> {
        let c = &self.charts[i];
        let p = c.center.coords;
        let q = y.coords;
        match &self.manifold {
            ChartSpec::FlatTorus2 { sides } => {
                let mut d = [q[0] - p[0], q[1] - p[1]];
                for a in 0..2 {
                    d[a] -= sides[a] * (d[a] / sides[a]).round();
                }
                Some(vec![d[0] / c.scale, d[1] / c.scale])
            }
            ChartSpec::Sphere2 => {
                let dot = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
                if dot <= 0.0 {
                    return None;
                }
                let basis = self.manifold.tangent_basis(&c.center);
                let w: Vec<f64> = (0..3).map(|a| q[a] / dot - p[a]).collect();
                let proj = |e: [f64; 3]| (w[0] * e[0] + w[1] * e[1] + w[2] * e[2]) / c.scale;
                Some(vec![proj(basis[0]), proj(basis[1])])
            }
            ChartSpec::MappingTorus { matrix } => {
                let inv = matrix.inverse();
                let mut best: Option<[f64; 3]> = None;
                for g in -1i32..=1 {
                    // Lift with roof coordinate s + g: fiber coordinate A^{-g}·w.
                    let w = match g {
                        -1 => mat_apply_raw(&matrix.0, [q[0], q[1]]),
                        0 => [q[0], q[1]],
                        _ => mat_apply_raw(&inv.0, [q[0], q[1]]),
                    };
                    let mut d = [w[0] - p[0], w[1] - p[1], q[2] + g as f64 - p[2]];
                    d[0] -= d[0].round();
                    d[1] -= d[1].round();
                    let norm = |v: &[f64; 3]| v.iter().map(|x| x * x).sum::<f64>();
                    if best.is_none_or(|b| norm(&d) < norm(&b)) {
                        best = Some(d);
                    }
                }
                best.map(|d| d.iter().map(|x| x / c.scale).collect())
            }
        }
    }

    /// First chart whose unit ball contains `y`, with the preimage.
    pub fn locate(&self, y: &ManifoldPoint) -> Option<(usize, Vec<f64>)> {
        (0..self.charts.len()).find_map(|i| {
            let v = self.inverse(i, y)?;
            (v.iter().map(|x| x * x).sum::<f64>() < 1.0).then_some((i, v))
        })
    }

    /// Conservative lower bound of `‖X‖` on `⋃ f_i(B(0, 2))`: the minimum on
    /// a lattice of spacing `h` minus `L·A·h·√d/2`.
    pub fn speed_floor(&self, flow: &FlowSpec, lipschitz: f64, h: f64) -> Result<f64> {
        let d = self.dimension();
        let m = (2.0 / h).ceil() as i64;
        let mut min = f64::INFINITY;
        let mut idx = vec![-m; d];
        for i in 0..self.charts.len() {
            idx.iter_mut().for_each(|x| *x = -m);
            loop {
                let u: Vec<f64> = idx.iter().map(|&l| l as f64 * h).collect();
                if u.iter().map(|x| x * x).sum::<f64>() <= 4.0 + 1e-12 {
                    min = min.min(flow.speed(&self.map(i, &u))?);
                }
                let mut a = 0;
                loop {
                    if a == d {
                        break;
                    }
                    idx[a] += 1;
                    if idx[a] <= m {
                        break;
                    }
                    idx[a] = -m;
                    a += 1;
                }
                if a == d {
                    break;
                }
            }
        }
        Ok(min - lipschitz * self.lipschitz() * h * (d as f64).sqrt() / 2.0)
    }
}

fn mat_apply_raw(m: &[[i64; 2]; 2], w: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] as f64 * w[0] + m[0][1] as f64 * w[1],
        m[1][0] as f64 * w[0] + m[1][1] as f64 * w[1],
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCoverReport {
    /// The lattice points actually assigned to samples of `K`; itself a
    /// verified rescaled spanning set of the sample.
    pub cover: CoverReport,
    /// `card(F) = n·(2⌈2/δ⌉ - 1)^d`.
    pub grid_card: f64,
    /// `(5AB/ε)^d · n · e^{2dLt}` with `B = B₀/ρ`.
    pub bound: f64,
    pub delta: f64,
    pub charts: usize,
    pub atlas_lipschitz: f64,
    pub rho: f64,
    pub lipschitz: f64,
    /// Whether `δ ≤ 5/3`. For `δ ∈ (5/3, 2)` an axis still holds 3 > 5/δ
    /// lattice points, so the cardinality bound can fail there.
    pub bound_applies: bool,
    pub verified: bool,
}

/// Build `F` for the sample `k`, assign each sample its nearest lattice
/// point and verify `y ∈ B*(x, t, ε)` for every assignment.
#[allow(clippy::too_many_arguments)]
pub fn grid_spanning_set(
    flow: &FlowSpec,
    k: &[ManifoldPoint],
    t: f64,
    epsilon: f64,
    lipschitz: f64,
    atlas: &Atlas,
    rho: f64,
    integration: &IntegrationConfig,
) -> Result<GridCoverReport> {
    let query = MetricQuery::new(t, epsilon, true)?;
    if !(rho > 0.0) {
        return Err(Error::ConstructorInvariant(format!(
            "speed floor {rho} on the atlas images must be positive"
        )));
    }
    if atlas.charts.is_empty() || k.is_empty() {
        return Err(Error::InvalidArgument("atlas and K must be nonempty".into()));
    }
    let d = atlas.dimension();
    let a = atlas.lipschitz();
    let b0 = (d as f64).sqrt() / 2.0;
    let growth = (2.0 * lipschitz * t).exp();
    let delta = epsilon * rho / (growth * a * b0);
    let n = atlas.charts.len() as f64;
    let axis = lattice_axis_count(delta);
    let grid_card = n * axis.powi(d as i32);
    let bound = (5.0 * a * b0 / (rho * epsilon)).powi(d as i32) * n * (2.0 * d as f64 * lipschitz * t).exp();

    let mut keys: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut witnesses: Vec<ManifoldPoint> = Vec::new();
    let mut assignment = Vec::with_capacity(k.len());
    for y in k {
        let (i, v) = atlas.locate(y).ok_or_else(|| {
            Error::ConstructorInvariant(format!("sample {y} lies outside every chart's unit ball"))
        })?;
        // Lattice indices stay in f64: they exceed i64 when δ is tiny.
        let l: Vec<f64> = v.iter().map(|x| (x / delta).round() + 0.0).collect();
        let key = (i, l.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        let pos = match keys.iter().position(|kk| *kk == key) {
            Some(p) => p,
            None => {
                let u: Vec<f64> = l.iter().map(|&li| li * delta).collect();
                witnesses.push(atlas.map(i, &u));
                keys.push(key);
                keys.len() - 1
            }
        };
        assignment.push(pos);
    }

    let all: Vec<ManifoldPoint> = witnesses.iter().chain(k).copied().collect();
    let cache = TrajectoryCache::build(flow, &all, t, integration.step, integration.sample_dt)?;
    let samples = cache.samples_until(t)?;
    let violations = assignment
        .iter()
        .enumerate()
        .filter(|&(j, &w)| !cache.within(w, witnesses.len() + j, samples, epsilon, true))
        .count();
    if violations > 0 {
        return Err(Error::ConstructorInvariant(format!(
            "{violations} of {} samples are not in the rescaled ball of their lattice point \
             (L = {lipschitz}, A = {a}, ρ = {rho}); L or A is underestimated",
            k.len()
        )));
    }
    Ok(GridCoverReport {
        cover: CoverReport {
            count: witnesses.len(),
            witnesses,
            query,
            target: format!("sample of {} points", k.len()),
            target_size: k.len(),
        },
        grid_card,
        bound,
        delta,
        charts: atlas.charts.len(),
        atlas_lipschitz: a,
        rho,
        lipschitz,
        bound_applies: delta <= 5.0 / 3.0,
        verified: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_counts() {
        assert_eq!(lattice_axis_count(1.0), 3.0);
        assert_eq!(lattice_axis_count(0.5), 7.0);
        assert_eq!(lattice_axis_count(0.7), 5.0);
        assert_eq!(lattice_axis_count(1.95), 3.0);
        assert_eq!(lattice_axis_count(2.5), 1.0);
    }

    #[test]
    fn axis_count_is_below_five_over_delta_up_to_five_thirds() {
        for i in 1..=2000 {
            let delta = 5.0 / 3.0 * i as f64 / 2000.0;
            assert!(lattice_axis_count(delta) <= 5.0 / delta + 1e-12, "delta = {delta}");
        }
        assert!(lattice_axis_count(1.8) > 5.0 / 1.8);
    }

    #[test]
    fn lattice_count_matches_enumeration() {
        for delta in [0.05, 0.3, 0.66, 1.0, 1.5, 1.99] {
            let brute = (-100i64..=100).filter(|&l| (l as f64 * delta).abs() < 2.0).count() as f64;
            assert_eq!(lattice_axis_count(delta), brute, "δ = {delta}");
        }
    }

    #[test]
    fn chart_maps_invert() {
        let m = FlowSpec::cat_default().chart();
        for manifold in [ChartSpec::standard_torus(), ChartSpec::sphere(), m] {
            let center = manifold.sample_grid(3)[4];
            let atlas = Atlas::new(
                manifold.clone(),
                vec![AtlasChart {
                    center,
                    scale: 0.1,
                }],
            )
            .unwrap();
            let u: Vec<f64> = [0.7, -1.1, 0.4][..manifold.dimension()].to_vec();
            let y = atlas.map(0, &u);
            let v = atlas.inverse(0, &y).unwrap();
            for (a, b) in u.iter().zip(&v) {
                assert!((a - b).abs() < 1e-9, "{:?}: {u:?} vs {v:?}", manifold.kind());
            }
        }
    }

    #[test]
    fn chart_lipschitz_constant_holds() {
        let m = FlowSpec::cat_default().chart();
        for manifold in [ChartSpec::standard_torus(), ChartSpec::sphere(), m] {
            let d = manifold.dimension();
            for center in manifold.sample_grid(3) {
                let atlas = Atlas::new(manifold.clone(), vec![AtlasChart { center, scale: 0.15 }]).unwrap();
                let a = atlas.lipschitz();
                for i in 0..50 {
                    let u: Vec<f64> = (0..d).map(|j| ((i * 7 + j * 3) % 11) as f64 / 5.5 - 1.0).collect();
                    let v: Vec<f64> = (0..d).map(|j| ((i * 5 + j * 2) % 13) as f64 / 6.5 - 1.0).collect();
                    let dist = manifold.distance(&atlas.map(0, &u), &atlas.map(0, &v)).unwrap();
                    let norm = u.iter().zip(&v).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                    assert!(dist <= a * norm + 1e-12, "{:?}: {dist} > {}", manifold.kind(), a * norm);
                }
            }
        }
    }

    fn integ() -> IntegrationConfig {
        IntegrationConfig {
            step: 1e-2,
            sample_dt: 0.05,
        }
    }

    #[test]
    fn grid_cover_respects_the_bound_on_every_builtin() {
        for f in FlowSpec::builtins() {
            let chart = f.chart();
            let s = f.flow_summary(8).unwrap();
            let l = 1.05 * s.lipschitz;
            let r = if chart.dimension() == 3 { 3 } else { 6 };
            let k: Vec<ManifoldPoint> = chart
                .sample_grid(r)
                .into_iter()
                .filter(|p| f.speed(p).unwrap() >= 0.75 * s.sup_speed)
                .collect();
            let atlas = Atlas::covering(&chart, &k, 0.1).unwrap();
            let rho = atlas.speed_floor(&f, l, 0.1).unwrap();
            let g = grid_spanning_set(&f, &k, 1.0, 0.3, l, &atlas, rho, &integ()).unwrap();
            assert!(g.verified);
            assert!(g.cover.count as f64 <= g.grid_card, "{}", f.id());
            if g.bound_applies {
                assert!(g.grid_card <= g.bound, "{}: {} > {}", f.id(), g.grid_card, g.bound);
            }
        }
    }

    #[test]
    fn dense_samples_share_lattice_points() {
        let f = FlowSpec::ConstantTorus {
            velocity: [1.0, 0.0],
        };
        let chart = f.chart();
        let k = chart.sample_product_grid(&[32, 32]).unwrap();
        let atlas = Atlas::covering(&chart, &k, 0.5).unwrap();
        let g = grid_spanning_set(&f, &k, 1.0, 0.2, 0.0, &atlas, 1.0, &integ()).unwrap();
        assert!(g.cover.count < k.len(), "{} vs {}", g.cover.count, k.len());
        // Oracle for the cardinality formula.
        let oracle = atlas.charts.len() as f64 * (2.0 * (2.0 / g.delta).ceil() - 1.0).powi(2);
        assert_eq!(g.grid_card, oracle);
        assert!(g.bound_applies && g.grid_card <= g.bound);
    }

    #[test]
    fn underestimated_constants_are_reported() {
        let f = FlowSpec::cat_default();
        let chart = f.chart();
        let k = chart.sample_product_grid(&[12, 12, 12]).unwrap();
        let atlas = Atlas::covering(&chart, &k, 0.2).unwrap();
        let res = grid_spanning_set(&f, &k, 1.0, 0.3, 0.0, &atlas, 6.0, &integ());
        assert!(matches!(res, Err(Error::ConstructorInvariant(_))), "{res:?}");
    }
}
