//! Empirical measures and measure-theoretic spanning counts: the smallest
//! number of (rescaled) dynamical balls whose union leaves less than `δ` of
//! the mass of `K` uncovered.
//!
//! Covered mass is always summed over a coverage mask in atom order, so a
//! larger covered set never reports less mass. That makes the comparison
//! covers below exact rather than subject to rounding.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    check_ladder, entropy_slope, spanning_table, EntropyEstimate, EstimateMode, IntegrationConfig, PairProfiles,
};
use crate::flows::{FlowSpec, FREEZE_SPEED};
use crate::manifold::{ChartSpec, ManifoldPoint};
use crate::metrics::TrajectoryCache;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub chart: ChartSpec,
    pub atoms: Vec<ManifoldPoint>,
    pub weights: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(chart: ChartSpec, atoms: Vec<ManifoldPoint>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::DegenerateMeasure(format!(
                "{} atoms with {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::DegenerateMeasure("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::DegenerateMeasure(format!("total mass {total} ≠ 1")));
        }
        for p in &atoms {
            chart.check(p)?;
        }
        Ok(EmpiricalMeasure {
            chart,
            atoms,
            weights,
        })
    }

    pub fn uniform(chart: ChartSpec, atoms: Vec<ManifoldPoint>) -> Result<Self> {
        let w = 1.0 / atoms.len().max(1) as f64;
        let n = atoms.len();
        Self::new(chart, atoms, vec![w; n])
    }

    /// Drop atoms where `flow` is slower than `threshold` and renormalize.
    pub fn restrict_speed(&self, flow: &FlowSpec, threshold: f64) -> Result<Self> {
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        for (p, w) in self.atoms.iter().zip(&self.weights) {
            if flow.speed(p)? >= threshold {
                atoms.push(*p);
                weights.push(*w);
            }
        }
        let total: f64 = weights.iter().sum();
        if atoms.is_empty() {
            return Err(Error::DegenerateMeasure(format!("no atom has speed ≥ {threshold}")));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(self.chart.clone(), atoms, weights)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Total variation distance between the atom histogram and the volume
    /// measure on `bins` cells per coordinate. Tori use coordinate boxes;
    /// the sphere uses equal-area cells in `(z, longitude)`.
    pub fn discrepancy(&self, bins: usize) -> f64 {
        let d = self.chart.dimension();
        let mut hist = vec![0.0; bins.pow(d as u32)];
        for (p, w) in self.atoms.iter().zip(&self.weights) {
            let u = self.unit_coords(p);
            let mut cell = 0;
            for x in u.iter().take(d) {
                let b = ((x * bins as f64) as usize).min(bins - 1);
                cell = cell * bins + b;
            }
            hist[cell] += w;
        }
        let q = 1.0 / hist.len() as f64;
        0.5 * hist.iter().map(|h| (h - q).abs()).sum::<f64>()
    }

    fn unit_coords(&self, p: &ManifoldPoint) -> [f64; 3] {
        let c = p.coords;
        match &self.chart {
            ChartSpec::FlatTorus2 { sides } => [c[0] / sides[0] + 0.5, c[1] / sides[1], 0.0],
            ChartSpec::Sphere2 => [
                (c[2] + 1.0) / 2.0,
                c[1].atan2(c[0]).rem_euclid(std::f64::consts::TAU) / std::f64::consts::TAU,
                0.0,
            ],
            ChartSpec::MappingTorus { .. } => c,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MeasureKind {
    /// Equal weights on an `n`-point low-discrepancy set, minus atoms where
    /// the field vanishes.
    UniformGrid,
    /// Equal weights on `n` equally spaced times of one orbit segment.
    TrajectoryPush {
        base: ManifoldPoint,
        burn_in: f64,
        horizon: f64,
    },
}

/// `n` points spread evenly over the manifold: a product grid when `n` is a
/// perfect power of the dimension, a rank-1 lattice on the tori or a
/// Fibonacci sphere otherwise.
pub fn even_points(chart: &ChartSpec, n: usize) -> Vec<ManifoldPoint> {
    let d = chart.dimension();
    let r = (n as f64).powf(1.0 / d as f64).round() as usize;
    if r.pow(d as u32) == n {
        return chart.sample_grid(r);
    }
    match chart {
        ChartSpec::Sphere2 => chart.sample_fibonacci(n),
        ChartSpec::FlatTorus2 { sides } => {
            let g = ((n as f64) / 1.618_033_988_749_895).round().max(1.0);
            (0..n)
                .map(|i| {
                    let a = i as f64 / n as f64;
                    let b = (i as f64 * g / n as f64).fract();
                    chart.point(&[-sides[0] / 2.0 + a * sides[0], b * sides[1]]).unwrap()
                })
                .collect()
        }
        ChartSpec::MappingTorus { .. } => {
            // Generator from the plastic number, the 3-d analogue of φ.
            let p = 1.324_717_957_244_746_f64;
            let (g1, g2) = ((n as f64 / p).round(), (n as f64 / (p * p)).round());
            (0..n)
                .map(|i| {
                    let k = i as f64;
                    chart
                        .point(&[(k * g1 / n as f64).fract(), (k * g2 / n as f64).fract(), k / n as f64])
                        .unwrap()
                })
                .collect()
        }
    }
}

pub fn sample_measure(
    flow: &FlowSpec,
    kind: &MeasureKind,
    n: usize,
    integration: &IntegrationConfig,
) -> Result<EmpiricalMeasure> {
    if n == 0 {
        return Err(Error::InvalidArgument("measure needs n ≥ 1 atoms".into()));
    }
    let chart = flow.chart();
    let atoms = match kind {
        MeasureKind::UniformGrid => {
            let mut atoms = Vec::with_capacity(n);
            for p in even_points(&chart, n) {
                if flow.speed(&p)? >= FREEZE_SPEED {
                    atoms.push(p);
                }
            }
            atoms
        }
        MeasureKind::TrajectoryPush {
            base,
            burn_in,
            horizon,
        } => {
            if !(*horizon > 0.0) || !(*burn_in >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "need burn-in ≥ 0 and horizon > 0, got {burn_in}, {horizon}"
                )));
            }
            let start = flow.flow_point(base, *burn_in, integration.step)?;
            let tr = flow.integrate_sampled(&start, *horizon, integration.step, horizon / n as f64)?;
            tr.points
                .into_iter()
                .zip(tr.speeds)
                .take(n)
                .filter(|(_, s)| *s >= FREEZE_SPEED)
                .map(|(p, _)| p)
                .collect()
        }
    };
    if atoms.is_empty() {
        return Err(Error::DegenerateMeasure("every candidate atom is singular".into()));
    }
    EmpiricalMeasure::uniform(chart, atoms)
}

/// Which part of the measure must be covered.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MeasureTarget {
    All,
    /// Atom indices forming `K`.
    Atoms(Vec<usize>),
}

impl MeasureTarget {
    fn indices(&self, n: usize) -> Result<Vec<usize>> {
        match self {
            MeasureTarget::All => Ok((0..n).collect()),
            MeasureTarget::Atoms(v) => {
                if let Some(bad) = v.iter().find(|&&i| i >= n) {
                    return Err(Error::InvalidArgument(format!("atom index {bad} out of range")));
                }
                let mut v = v.clone();
                v.sort_unstable();
                v.dedup();
                Ok(v)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureQuery {
    pub t: f64,
    pub epsilon: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureCoverReport {
    pub count: usize,
    pub witnesses: Vec<ManifoldPoint>,
    /// `1 - μ(K \ B(F, t, ε))`.
    pub covered_mass: f64,
    pub query: MeasureQuery,
    pub rescaled: bool,
    /// Ball radius actually used (`ε`, or `ε·‖X‖∞` for classical counts
    /// compared against rescaled ones).
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureCell {
    pub t: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub count: usize,
    /// Count of the mass-greedy cover for this cell alone.
    pub greedy_count: usize,
    pub covered_mass: f64,
    /// Cache indices of the chosen centers.
    pub witnesses: Vec<usize>,
}

/// Measure spanning counts on a `(t, ε, δ)` grid; `cells[ti][ei][di]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureTable {
    pub rescaled: bool,
    /// Radii are `radius_scale·ε`.
    pub radius_scale: f64,
    pub t_ladder: Vec<f64>,
    pub eps_ladder: Vec<f64>,
    pub delta_ladder: Vec<f64>,
    pub cells: Vec<Vec<Vec<MeasureCell>>>,
}

impl MeasureTable {
    pub fn cell(&self, ti: usize, ei: usize, di: usize) -> &MeasureCell {
        &self.cells[ti][ei][di]
    }

    /// Counts do not decrease as `t` grows, `ε` shrinks or `δ` shrinks.
    pub fn is_monotone(&self) -> bool {
        let (nt, ne, nd) = (self.t_ladder.len(), self.eps_ladder.len(), self.delta_ladder.len());
        (0..nt).all(|ti| {
            (0..ne).all(|ei| {
                (0..nd).all(|di| {
                    let c = self.cells[ti][ei][di].count;
                    (ti + 1 == nt || self.cells[ti + 1][ei][di].count >= c)
                        && (ei == 0 || self.cells[ti][ei - 1][di].count >= c)
                        && (di == 0 || self.cells[ti][ei][di - 1].count >= c)
                })
            })
        })
    }

    /// `(t, ε, count)` rows for the slope fit at ladder index `di`.
    pub fn triples(&self, di: usize) -> Vec<(f64, f64, usize)> {
        self.cells
            .iter()
            .flatten()
            .map(|row| {
                let c = &row[di];
                (c.t, c.epsilon, c.count.max(1))
            })
            .collect()
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Gain(f64, usize);

impl Eq for Gain {}

impl Ord for Gain {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Gain {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct CellProblem<'a> {
    /// `sets[c]`: target positions inside candidate `c`'s ball.
    sets: Vec<Vec<u32>>,
    weights: &'a [f64],
    target_mass: f64,
    delta: f64,
}

impl CellProblem<'_> {
    fn covered(&self, mask: &[bool]) -> f64 {
        mask.iter().zip(self.weights).filter(|(m, _)| **m).map(|(_, w)| w).sum()
    }

    fn done(&self, mask: &[bool]) -> bool {
        self.target_mass - self.covered(mask) < self.delta
    }

    /// Greedy by uncovered mass, ties to the lowest candidate position.
    fn greedy(&self) -> Option<(Vec<usize>, Vec<bool>)> {
        let mut mask = vec![false; self.weights.len()];
        let mut chosen = Vec::new();
        let mut heap: BinaryHeap<Gain> = self
            .sets
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.is_empty())
            .map(|(c, s)| Gain(s.iter().map(|&j| self.weights[j as usize]).sum(), c))
            .collect();
        while !self.done(&mask) {
            let Gain(stale, c) = heap.pop()?;
            let gain: f64 = self.sets[c]
                .iter()
                .filter(|&&j| !mask[j as usize])
                .map(|&j| self.weights[j as usize])
                .sum();
            if gain <= 0.0 {
                continue;
            }
            if gain < stale {
                heap.push(Gain(gain, c));
                continue;
            }
            for &j in &self.sets[c] {
                mask[j as usize] = true;
            }
            chosen.push(c);
        }
        Some((chosen, mask))
    }

    /// Shortest prefix of `order` (candidate positions) that is a cover.
    fn prefix(&self, order: &[usize]) -> Option<(Vec<usize>, Vec<bool>)> {
        let mut mask = vec![false; self.weights.len()];
        let mut chosen = Vec::new();
        for &c in order {
            if self.done(&mask) {
                break;
            }
            for &j in &self.sets[c] {
                mask[j as usize] = true;
            }
            chosen.push(c);
        }
        self.done(&mask).then_some((chosen, mask))
    }
}

/// Inputs shared by all cells of a measure table.
pub struct MeasureTableSpec<'a> {
    pub cache: &'a TrajectoryCache,
    /// Mass of each cache index (zero for non-atoms).
    pub mass: &'a [f64],
    pub targets: &'a [usize],
    pub candidates: &'a [usize],
    pub t_ladder: &'a [f64],
    pub eps_ladder: &'a [f64],
    pub delta_ladder: &'a [f64],
    pub rescaled: bool,
    pub radius_scale: f64,
}

/// Greedy mass covers on the full grid, improved by any reference witness
/// set (cache indices) that also covers the cell and by the witnesses of
/// harder cells. `references(ti, ei, di)` supplies extra candidate covers.
pub fn measure_table<R>(spec: &MeasureTableSpec<'_>, mut references: R) -> Result<MeasureTable>
where
    R: FnMut(usize, usize, usize) -> Vec<Vec<usize>>,
{
    check_ladder("t", spec.t_ladder, false)?;
    check_ladder("epsilon", spec.eps_ladder, true)?;
    check_ladder("delta", spec.delta_ladder, true)?;
    if spec.delta_ladder.iter().any(|&d| d >= 1.0) {
        return Err(Error::InvalidArgument("δ must lie in (0, 1)".into()));
    }
    if !(spec.radius_scale > 0.0) {
        return Err(Error::InvalidArgument("radius scale must be positive".into()));
    }
    let cache = spec.cache;
    let eps_max = spec.eps_ladder.last().unwrap() * spec.radius_scale;
    let profiles = PairProfiles::build(cache, spec.candidates, spec.targets, spec.t_ladder, eps_max, spec.rescaled)?;
    let weights: Vec<f64> = spec.targets.iter().map(|&j| spec.mass[j]).collect();
    let target_mass: f64 = weights.iter().sum();
    let mut cand_pos = vec![usize::MAX; cache.len()];
    for (c, &i) in spec.candidates.iter().enumerate() {
        cand_pos[i] = c;
    }
    let mut position = vec![u32::MAX; cache.len()];
    for (p, &j) in spec.targets.iter().enumerate() {
        position[j] = p as u32;
    }
    let (nt, ne, nd) = (spec.t_ladder.len(), spec.eps_ladder.len(), spec.delta_ladder.len());
    let mut cells: Vec<Vec<Vec<Option<MeasureCell>>>> = vec![vec![vec![None; nd]; ne]; nt];
    // Hardest cells first: large t, small ε, small δ.
    for ti in (0..nt).rev() {
        for ei in 0..ne {
            let radius = spec.eps_ladder[ei] * spec.radius_scale;
            let sets: Vec<Vec<u32>> = (0..spec.candidates.len())
                .map(|c| profiles.ball(c, ti, radius).map(|j| position[j]).collect())
                .collect();
            for di in 0..nd {
                let problem = CellProblem {
                    sets: sets.clone(),
                    weights: &weights,
                    target_mass,
                    delta: spec.delta_ladder[di],
                };
                let greedy = problem.greedy();
                let greedy_count = greedy.as_ref().map_or(usize::MAX, |g| g.0.len());
                let mut best = greedy;
                let mut consider = |order: Vec<usize>| {
                    if let Some(found) = problem.prefix(&order) {
                        if best.as_ref().is_none_or(|b| found.0.len() < b.0.len()) {
                            best = Some(found);
                        }
                    }
                };
                let harder = [
                    (ti + 1 < nt).then(|| (ti + 1, ei, di)),
                    (ei > 0).then(|| (ti, ei - 1, di)),
                    (di > 0).then(|| (ti, ei, di - 1)),
                ];
                for (a, b, c) in harder.into_iter().flatten() {
                    if let Some(cell) = &cells[a][b][c] {
                        consider(cell.witnesses.iter().map(|&i| cand_pos[i]).collect());
                    }
                }
                for r in references(ti, ei, di) {
                    if r.iter().all(|&i| i < cache.len() && cand_pos[i] != usize::MAX) {
                        consider(r.iter().map(|&i| cand_pos[i]).collect());
                    }
                }
                let Some((chosen, mask)) = best else {
                    let reached = 1.0 - target_mass + problem.covered(&vec![true; weights.len()]);
                    return Err(Error::InfeasibleMeasureCover {
                        required: 1.0 - spec.delta_ladder[di],
                        reached,
                    });
                };
                let covered = 1.0 - (target_mass - problem.covered(&mask));
                cells[ti][ei][di] = Some(MeasureCell {
                    t: spec.t_ladder[ti],
                    epsilon: spec.eps_ladder[ei],
                    delta: spec.delta_ladder[di],
                    count: chosen.len(),
                    greedy_count: greedy_count.min(cache.len()),
                    covered_mass: covered,
                    witnesses: chosen.iter().map(|&c| spec.candidates[c]).collect(),
                });
            }
        }
    }
    Ok(MeasureTable {
        rescaled: spec.rescaled,
        radius_scale: spec.radius_scale,
        t_ladder: spec.t_ladder.to_vec(),
        eps_ladder: spec.eps_ladder.to_vec(),
        delta_ladder: spec.delta_ladder.to_vec(),
        cells: cells
            .into_iter()
            .map(|r| r.into_iter().map(|c| c.into_iter().map(Option::unwrap).collect()).collect())
            .collect(),
    })
}

/// Cache of the atoms of `mu` up to `horizon`, with per-index masses and the
/// atoms whose orbits stay in `M*` (the admissible rescaled centers).
pub struct MeasureSetup {
    pub cache: TrajectoryCache,
    pub mass: Vec<f64>,
    pub regular: Vec<usize>,
}

impl MeasureSetup {
    pub fn new(flow: &FlowSpec, mu: &EmpiricalMeasure, horizon: f64, integration: &IntegrationConfig) -> Result<Self> {
        if flow.chart() != mu.chart {
            return Err(Error::ChartMismatch {
                expected: flow.chart().kind(),
                found: mu.chart.kind(),
            });
        }
        let cache = TrajectoryCache::build(flow, &mu.atoms, horizon, integration.step, integration.sample_dt)?;
        let n = cache.samples_until(horizon)?;
        let regular = (0..mu.len()).filter(|&i| cache.is_regular(i, n)).collect();
        Ok(MeasureSetup {
            cache,
            mass: mu.weights.clone(),
            regular,
        })
    }

    /// Largest speed seen on any cached sample.
    pub fn max_speed(&self) -> f64 {
        let m = self.cache.times().len();
        (0..self.cache.len())
            .map(|i| (0..m).map(|k| self.cache.speed(i, k)).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

fn single_cell(
    setup: &MeasureSetup,
    mu: &EmpiricalMeasure,
    targets: &[usize],
    query: MeasureQuery,
    rescaled: bool,
    radius_scale: f64,
) -> Result<MeasureCoverReport> {
    let all: Vec<usize> = (0..mu.len()).collect();
    let candidates = if rescaled { &setup.regular } else { &all };
    let table = measure_table(
        &MeasureTableSpec {
            cache: &setup.cache,
            mass: &setup.mass,
            targets,
            candidates,
            t_ladder: &[query.t],
            eps_ladder: &[query.epsilon],
            delta_ladder: &[query.delta],
            rescaled,
            radius_scale,
        },
        |_, _, _| Vec::new(),
    )?;
    let cell = table.cell(0, 0, 0);
    Ok(MeasureCoverReport {
        count: cell.count,
        witnesses: cell.witnesses.iter().map(|&i| mu.atoms[i]).collect(),
        covered_mass: cell.covered_mass,
        query,
        rescaled,
        radius: query.epsilon * radius_scale,
    })
}

fn check_query(t: f64, epsilon: f64, delta: f64) -> Result<MeasureQuery> {
    if !(t >= 0.0 && t.is_finite()) || !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need t ≥ 0, ε > 0 and 0 < δ < 1, got t = {t}, ε = {epsilon}, δ = {delta}"
        )));
    }
    Ok(MeasureQuery { t, epsilon, delta })
}

/// `R^{μ*}(t, ε, δ, K)` by greedy mass cover with rescaled balls centered at
/// atoms whose orbits avoid the singular set.
pub fn measure_spanning_count(
    flow: &FlowSpec,
    mu: &EmpiricalMeasure,
    t: f64,
    epsilon: f64,
    delta: f64,
    target: &MeasureTarget,
    integration: &IntegrationConfig,
) -> Result<MeasureCoverReport> {
    let query = check_query(t, epsilon, delta)?;
    let setup = MeasureSetup::new(flow, mu, t, integration)?;
    single_cell(&setup, mu, &target.indices(mu.len())?, query, true, 1.0)
}

/// `R^μ(t, ε, δ)` with classical dynamical balls centered at atoms.
pub fn classical_measure_count(
    flow: &FlowSpec,
    mu: &EmpiricalMeasure,
    t: f64,
    epsilon: f64,
    delta: f64,
    integration: &IntegrationConfig,
) -> Result<MeasureCoverReport> {
    let query = check_query(t, epsilon, delta)?;
    let setup = MeasureSetup::new(flow, mu, t, integration)?;
    single_cell(&setup, mu, &(0..mu.len()).collect::<Vec<_>>(), query, false, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub t_ladder: Vec<f64>,
    pub eps_ladder: Vec<f64>,
    pub delta_ladder: Vec<f64>,
    pub integration: IntegrationConfig,
    pub residual_threshold: f64,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            t_ladder: vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0],
            eps_ladder: vec![0.05, 0.1, 0.2, 0.4],
            delta_ladder: vec![0.05, 0.1, 0.2],
            integration: IntegrationConfig::default(),
            residual_threshold: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    /// One slope fit per `δ`, in ladder order.
    pub per_delta: Vec<(f64, EntropyEstimate)>,
    /// Estimate at the smallest `δ`.
    pub extrapolated: f64,
    pub table: MeasureTable,
}

/// `e*_μ` from the rescaled measure table of all atoms.
pub fn estimate_e_star_mu(flow: &FlowSpec, mu: &EmpiricalMeasure, cfg: &MeasureConfig) -> Result<MeasureEstimate> {
    check_ladder("t", &cfg.t_ladder, false)?;
    let horizon = *cfg.t_ladder.last().unwrap();
    let setup = MeasureSetup::new(flow, mu, horizon, &cfg.integration)?;
    let all: Vec<usize> = (0..mu.len()).collect();
    let table = measure_table(
        &MeasureTableSpec {
            cache: &setup.cache,
            mass: &setup.mass,
            targets: &all,
            candidates: &setup.regular,
            t_ladder: &cfg.t_ladder,
            eps_ladder: &cfg.eps_ladder,
            delta_ladder: &cfg.delta_ladder,
            rescaled: true,
            radius_scale: 1.0,
        },
        |_, _, _| Vec::new(),
    )?;
    estimate_from_table(table, cfg.residual_threshold)
}

/// Slope fits of an existing measure table, one per `δ`.
pub fn estimate_from_table(table: MeasureTable, residual_threshold: f64) -> Result<MeasureEstimate> {
    let mut per_delta = Vec::with_capacity(table.delta_ladder.len());
    for (di, &d) in table.delta_ladder.iter().enumerate() {
        let mode = if table.rescaled {
            EstimateMode::Rescaled
        } else {
            EstimateMode::Classical
        };
        per_delta.push((d, entropy_slope(&table.triples(di), mode, residual_threshold)?));
    }
    let extrapolated = per_delta[0].1.extrapolated;
    Ok(MeasureEstimate {
        per_delta,
        extrapolated,
        table,
    })
}

/// Settings for [`inequality_chain`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub t_ladder: Vec<f64>,
    pub eps_ladder: Vec<f64>,
    pub delta_ladder: Vec<f64>,
    /// `K` is the set of atoms with `‖X‖ ≥ k_speed` whose orbits stay in `M*`.
    pub k_speed: f64,
    pub integration: IntegrationConfig,
    pub residual_threshold: f64,
}

/// One `(t, ε, δ)` cell of the chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainRow {
    pub t: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// `R^μ(t, ε‖X‖∞, δ)`.
    pub r_mu: usize,
    /// `R^{μ*}(t, ε, δ)`.
    pub r_mu_star: usize,
    /// `R^{μ*}(t, ε, δ, K)`.
    pub r_mu_star_k: usize,
    /// `R*(t, ε, K)`.
    pub r_star_k: usize,
    /// `R*(t, ε)` on the sublevel part `M_ε` of the atoms.
    pub r_star: usize,
}

impl ChainRow {
    pub fn classical_below_rescaled(&self) -> bool {
        self.r_mu <= self.r_mu_star
    }

    pub fn measure_below_spanning(&self) -> bool {
        self.r_mu_star_k <= self.r_star_k
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityChain {
    pub rows: Vec<ChainRow>,
    /// `‖X‖∞` as seen on the cached samples; classical balls use `ε` times it.
    pub sup_speed: f64,
    pub k_size: usize,
    pub atoms: usize,
    pub e_star_mu: MeasureEstimate,
    pub e_star: EntropyEstimate,
}

impl InequalityChain {
    pub fn exact_inequalities_hold(&self) -> bool {
        self.rows.iter().all(|r| r.classical_below_rescaled() && r.measure_below_spanning())
    }

    /// `e*_μ ≤ e* + margin`.
    pub fn variational_holds(&self, margin: f64) -> bool {
        self.e_star_mu.extrapolated <= self.e_star.extrapolated + margin
    }
}

/// All counts of the chain `R^μ(t, ε‖X‖∞, δ) ≤ R^{μ*}(t, ε, δ)` and
/// `R^{μ*}(t, ε, δ, K) ≤ R*(t, ε, K)` on the atoms of `mu`, from one cache.
/// Each smaller count is offered the witnesses of the larger one as a
/// candidate cover, so both inequalities hold cell by cell whenever the
/// containments between balls do.
pub fn inequality_chain(flow: &FlowSpec, mu: &EmpiricalMeasure, cfg: &ChainConfig) -> Result<InequalityChain> {
    check_ladder("t", &cfg.t_ladder, false)?;
    check_ladder("epsilon", &cfg.eps_ladder, true)?;
    let horizon = *cfg.t_ladder.last().unwrap();
    let setup = MeasureSetup::new(flow, mu, horizon, &cfg.integration)?;
    let cache = &setup.cache;
    let k: Vec<usize> = setup
        .regular
        .iter()
        .copied()
        .filter(|&i| cache.speed(i, 0) >= cfg.k_speed)
        .collect();
    if k.is_empty() {
        return Err(Error::DegenerateMeasure(format!("no atom has speed ≥ {}", cfg.k_speed)));
    }
    let all: Vec<usize> = (0..mu.len()).collect();
    let sup_speed = setup.max_speed();

    let r_star_k = spanning_table(cache, &setup.regular, |_| k.clone(), &cfg.t_ladder, &cfg.eps_ladder, true)?;
    let r_star = spanning_table(
        cache,
        &setup.regular,
        |eps| all.iter().copied().filter(|&i| cache.speed(i, 0) >= eps).collect(),
        &cfg.t_ladder,
        &cfg.eps_ladder,
        true,
    )?;
    let spec = |targets, candidates, rescaled, radius_scale| MeasureTableSpec {
        cache,
        mass: &setup.mass,
        targets,
        candidates,
        t_ladder: &cfg.t_ladder,
        eps_ladder: &cfg.eps_ladder,
        delta_ladder: &cfg.delta_ladder,
        rescaled,
        radius_scale,
    };
    let r_mu_star_k = measure_table(&spec(&k, &setup.regular, true, 1.0), |ti, ei, _| {
        vec![r_star_k.cell(ti, ei).witnesses.clone()]
    })?;
    let r_mu_star = measure_table(&spec(&all, &setup.regular, true, 1.0), |ti, ei, _| {
        vec![r_star.cell(ti, ei).witnesses.clone()]
    })?;
    let r_mu = measure_table(&spec(&all, &all, false, sup_speed), |ti, ei, di| {
        vec![r_mu_star.cell(ti, ei, di).witnesses.clone()]
    })?;

    let mut rows = Vec::new();
    for ti in 0..cfg.t_ladder.len() {
        for ei in 0..cfg.eps_ladder.len() {
            for di in 0..cfg.delta_ladder.len() {
                let c = r_mu.cell(ti, ei, di);
                rows.push(ChainRow {
                    t: c.t,
                    epsilon: c.epsilon,
                    delta: c.delta,
                    r_mu: c.count,
                    r_mu_star: r_mu_star.cell(ti, ei, di).count,
                    r_mu_star_k: r_mu_star_k.cell(ti, ei, di).count,
                    r_star_k: r_star_k.cell(ti, ei).count,
                    r_star: r_star.cell(ti, ei).count,
                });
            }
        }
    }
    // Cells with an empty sublevel set carry no information.
    let nonempty: Vec<(f64, f64, usize)> = r_star.triples().into_iter().filter(|c| c.2 > 0).collect();
    let e_star = entropy_slope(&nonempty, EstimateMode::Rescaled, cfg.residual_threshold)?;
    let e_star_mu = estimate_from_table(r_mu_star, cfg.residual_threshold)?;
    Ok(InequalityChain {
        rows,
        sup_speed,
        k_size: k.len(),
        atoms: mu.len(),
        e_star_mu,
        e_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integ() -> IntegrationConfig {
        IntegrationConfig {
            step: 1e-2,
            sample_dt: 0.1,
        }
    }

    #[test]
    fn uniform_grid_weights() {
        let f = FlowSpec::ConstantTorus {
            velocity: [1.0, 0.0],
        };
        let mu = sample_measure(&f, &MeasureKind::UniformGrid, 100, &integ()).unwrap();
        assert_eq!(mu.len(), 100);
        assert!(mu.weights.iter().all(|&w| (w - 0.01).abs() < 1e-15));
        let odd = sample_measure(&f, &MeasureKind::UniformGrid, 97, &integ()).unwrap();
        assert_eq!(odd.len(), 97);
    }

    #[test]
    fn item4_grid_drops_singular_atoms() {
        let f = FlowSpec::TorusItem4;
        let mu = sample_measure(&f, &MeasureKind::UniformGrid, 144, &integ()).unwrap();
        assert!(mu.len() < 144);
        for p in &mu.atoms {
            assert!(f.speed(p).unwrap() >= FREEZE_SPEED);
        }
    }

    #[test]
    fn degenerate_measures_are_rejected() {
        let chart = ChartSpec::standard_torus();
        let p = chart.point(&[0.0, 0.0]).unwrap();
        assert!(matches!(
            EmpiricalMeasure::new(chart.clone(), vec![p], vec![0.5]),
            Err(Error::DegenerateMeasure(_))
        ));
        let f = FlowSpec::TorusItem4;
        let mu = EmpiricalMeasure::uniform(chart, vec![p]).unwrap();
        assert!(matches!(mu.restrict_speed(&f, 1e-14), Err(Error::DegenerateMeasure(_))));
    }

    #[test]
    fn large_delta_needs_one_ball() {
        let f = FlowSpec::TorusItem4;
        let mu = sample_measure(&f, &MeasureKind::UniformGrid, 100, &integ()).unwrap();
        let r = measure_spanning_count(&f, &mu, 1.0, 0.3, 0.99, &MeasureTarget::All, &integ()).unwrap();
        assert_eq!(r.count, 1);
        assert!(r.covered_mass > 0.01);
    }

    #[test]
    fn covered_mass_exceeds_requirement() {
        let f = FlowSpec::eno_default();
        let mu = sample_measure(&f, &MeasureKind::UniformGrid, 200, &integ()).unwrap();
        for delta in [0.05, 0.2, 0.5] {
            let r = measure_spanning_count(&f, &mu, 2.0, 0.3, delta, &MeasureTarget::All, &integ()).unwrap();
            assert!(r.covered_mass > 1.0 - delta);
        }
    }

    #[test]
    fn constant_torus_classical_count_is_time_independent() {
        let f = FlowSpec::ConstantTorus {
            velocity: [1.0, 0.0],
        };
        let mu = sample_measure(&f, &MeasureKind::UniformGrid, 144, &integ()).unwrap();
        let counts: Vec<usize> = [0.0, 1.0, 5.0]
            .iter()
            .map(|&t| classical_measure_count(&f, &mu, t, 0.7, 0.1, &integ()).unwrap().count)
            .collect();
        assert!(counts.windows(2).all(|w| w[0] == w[1]), "{counts:?}");
    }

    #[test]
    fn tables_are_monotone() {
        let f = FlowSpec::TorusItem4;
        let mu = sample_measure(&f, &MeasureKind::UniformGrid, 256, &integ()).unwrap();
        let cfg = MeasureConfig {
            t_ladder: vec![1.0, 2.0, 3.0],
            eps_ladder: vec![0.2, 0.4],
            delta_ladder: vec![0.05, 0.1, 0.2],
            integration: integ(),
            residual_threshold: 0.5,
        };
        let e = estimate_e_star_mu(&f, &mu, &cfg).unwrap();
        assert!(e.table.is_monotone());
        assert_eq!(e.per_delta.len(), 3);
    }

    #[test]
    fn chain_inequalities_are_exact() {
        for f in [FlowSpec::TorusItem4, FlowSpec::eno_default()] {
            let mu = sample_measure(&f, &MeasureKind::UniformGrid, 144, &integ()).unwrap();
            let cfg = ChainConfig {
                t_ladder: vec![1.0, 2.0, 3.0],
                eps_ladder: vec![0.2, 0.4],
                delta_ladder: vec![0.1, 0.2],
                k_speed: 0.25,
                integration: integ(),
                residual_threshold: 0.5,
            };
            let c = inequality_chain(&f, &mu, &cfg).unwrap();
            assert_eq!(c.rows.len(), 12);
            assert!(c.exact_inequalities_hold(), "{:?}", c.rows);
            assert!(c.variational_holds(0.05));
            assert!(c.rows.iter().all(|r| r.r_mu >= 1 && r.r_star_k <= c.k_size));
        }
    }

    #[test]
    fn discrepancy_of_a_grid_is_zero() {
        let chart = FlowSpec::cat_default().chart();
        let mu = EmpiricalMeasure::uniform(chart.clone(), chart.sample_grid(8)).unwrap();
        assert!(mu.discrepancy(4) < 1e-12);
        let lumped = EmpiricalMeasure::uniform(chart.clone(), vec![chart.sample_grid(2)[0]; 10]).unwrap();
        assert!((lumped.discrepancy(4) - (1.0 - 1.0 / 64.0)).abs() < 1e-12);
    }
}
