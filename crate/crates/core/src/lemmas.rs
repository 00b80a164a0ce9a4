//! Monte-Carlo checks of the pointwise inequalities behind rescaled entropy.
//! Each check samples points, evaluates one inequality and reports the
//! violations with the worst margin.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{entropy_slope, spanning_table, EstimateMode, IntegrationConfig};
use crate::flows::{FlowSpec, Trajectory, FREEZE_SPEED};
use crate::manifold::{ChartSpec, ManifoldPoint};
use crate::metrics::{rescaled_dt_metric, TrajectoryCache};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LemmaId {
    /// Speed comparability at scale `r₀`.
    Wendy,
    /// `B*(x, t, ε/4) ⊂ B*(y, t, ε)`.
    Symmetry,
    /// `e^{-Ls} ≤ ‖X(φ_s z)‖ / ‖X(z)‖ ≤ e^{Ls}`.
    Cope,
    /// `e*_μ ≤ e*`.
    HalfVariational,
    /// `e = e*` for nonsingular fields.
    NonsingularEquality,
    ConjugacySmoke,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: LemmaId,
    pub samples: usize,
    pub violations: usize,
    pub parameters: BTreeMap<String, f64>,
    /// Smallest relative slack over all checked inequalities (negative when
    /// something failed).
    pub worst_margin: f64,
    /// Set when the check could only run in a degraded form.
    pub flagged: bool,
    pub note: String,
}

impl LemmaReport {
    fn new(lemma: LemmaId) -> Self {
        LemmaReport {
            lemma,
            samples: 0,
            violations: 0,
            parameters: BTreeMap::new(),
            worst_margin: f64::INFINITY,
            flagged: false,
            note: String::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.samples > 0
    }

    fn record(&mut self, margin: f64) {
        self.samples += 1;
        if margin < 0.0 || margin.is_nan() {
            self.violations += 1;
        }
        self.worst_margin = self.worst_margin.min(margin);
    }

    fn param(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.into(), value);
        self
    }
}

/// Per-trial generator: one ChaCha stream per trial index, so results do not
/// depend on how trials are scheduled.
fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniformly random coordinate offset of length at most `radius` in the
/// tangent space at `p`.
fn random_offset<R: Rng>(chart: &ChartSpec, p: &ManifoldPoint, radius: f64, rng: &mut R) -> [f64; 3] {
    let basis = chart.tangent_basis(p);
    let d = basis.len();
    let mut dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    loop {
        let n2: f64 = dir.iter().map(|x| x * x).sum();
        if n2 > 1e-12 && n2 <= 1.0 {
            let len = radius * rng.gen::<f64>().powf(1.0 / d as f64) / n2.sqrt();
            let mut v = [0.0; 3];
            for (e, c) in basis.iter().zip(&dir) {
                for a in 0..3 {
                    v[a] += len * c * e[a];
                }
            }
            return v;
        }
        dir = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    }
}

fn regular_uniform<R: Rng>(flow: &FlowSpec, chart: &ChartSpec, rng: &mut R) -> Result<(ManifoldPoint, f64)> {
    for _ in 0..10_000 {
        let p = chart.sample_uniform(rng);
        let s = flow.speed(&p)?;
        if s >= FREEZE_SPEED {
            return Ok((p, s));
        }
    }
    Err(Error::Sampling(format!("{} has no regular points to sample", flow.id())))
}

/// Ladder `1, 1/2, …, 2⁻¹⁰` searched for `r₀`.
pub const R0_LADDER_STEPS: u32 = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct R0Probe {
    pub r0: f64,
    /// Even the smallest ladder value failed.
    pub flagged: bool,
    pub report: LemmaReport,
}

/// Worst margin of `½‖X(a)‖ ≤ ‖X(b)‖ ≤ 2‖X(a)‖` over `trials` random pairs
/// with `d(a, b) ≤ r‖X(a)‖`.
fn r0_trial_margins(flow: &FlowSpec, r: f64, trials: usize, seed: u64) -> Result<Vec<f64>> {
    let chart = flow.chart();
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let (a, sa) = regular_uniform(flow, &chart, &mut rng)?;
            let limit = r * sa;
            let mut radius = limit;
            loop {
                let b = chart.displace(&a, random_offset(&chart, &a, radius, &mut rng));
                if chart.distance(&a, &b)? <= limit {
                    let sb = flow.speed(&b)?;
                    return Ok((sb - 0.5 * sa).min(2.0 * sa - sb) / sa);
                }
                radius *= 0.5;
            }
        })
        .collect()
}

/// Largest `r` on the dyadic ladder for which every sampled pair passes,
/// found by bisection over ladder indices.
pub fn probe_r0(flow: &FlowSpec, trials: usize, seed: u64) -> Result<R0Probe> {
    if trials == 0 {
        return Err(Error::InvalidArgument("probe_r0 needs at least one trial".into()));
    }
    let ladder: Vec<f64> = (0..=R0_LADDER_STEPS).map(|k| 0.5f64.powi(k as i32)).collect();
    let mut cache: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut eval = |k: usize| -> Result<bool> {
        if let std::collections::btree_map::Entry::Vacant(e) = cache.entry(k) {
            e.insert(r0_trial_margins(flow, ladder[k], trials, seed ^ k as u64)?);
        }
        Ok(cache[&k].iter().all(|m| *m >= 0.0))
    };
    let last = ladder.len() - 1;
    let (chosen, flagged) = if eval(0)? {
        (0, false)
    } else if !eval(last)? {
        (last, true)
    } else {
        // Invariant: lo fails, hi passes.
        let (mut lo, mut hi) = (0, last);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if eval(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (hi, false)
    };
    let mut report = LemmaReport::new(LemmaId::Wendy)
        .param("r0", ladder[chosen])
        .param("trials", trials as f64);
    for m in &cache[&chosen] {
        report.record(*m);
    }
    report.flagged = flagged;
    report.note = format!(
        "{} ladder levels evaluated; Monte-Carlo certificate, not a proof",
        cache.len()
    );
    Ok(R0Probe {
        r0: ladder[chosen],
        flagged,
        report,
    })
}

/// Rejection-sample `count` points of `B*(x, t, radius)`. Proposals start in
/// the time-zero ball and shrink when acceptance is poor; every accepted
/// point is verified along the whole orbit segment.
fn sample_rescaled_ball(
    flow: &FlowSpec,
    x: &ManifoldPoint,
    tx: &Trajectory,
    t: f64,
    radius: f64,
    count: usize,
    seed: u64,
    integration: &IntegrationConfig,
) -> Result<(Vec<Trajectory>, f64)> {
    let chart = flow.chart();
    let sx = tx.speeds[0];
    let mut proposal = radius * sx;
    let mut rng = trial_rng(seed, u64::MAX);
    let mut accepted = Vec::with_capacity(count);
    let mut tries = 0usize;
    let mut window_ok = 0usize;
    let mut window = 0usize;
    while accepted.len() < count {
        // Propose in batches so integration runs in parallel.
        let batch: Vec<ManifoldPoint> = (0..64)
            .map(|_| chart.displace(x, random_offset(&chart, x, proposal, &mut rng)))
            .collect();
        let trajs: Vec<Result<Trajectory>> = batch
            .par_iter()
            .map(|y| flow.integrate_sampled(y, t, integration.step, integration.sample_dt))
            .collect();
        for tr in trajs {
            let tr = tr?;
            tries += 1;
            window += 1;
            if rescaled_dt_metric(&chart, tx, &tr, t)? < radius {
                window_ok += 1;
                if accepted.len() < count {
                    accepted.push(tr);
                }
            }
        }
        if window >= 256 && window_ok * 20 < window {
            proposal *= 0.5;
            window = 0;
            window_ok = 0;
            if proposal < radius * sx * 1e-6 {
                return Err(Error::Sampling(format!(
                    "could not sample B*({x}, {t}, {radius}) after {tries} proposals"
                )));
            }
        }
    }
    Ok((accepted, proposal / (radius * sx)))
}

/// Sample pairs `y, w ∈ B*(x, t, ε/4)` and count pairs with `d*_t(y, w) ≥ ε`.
pub fn check_ball_inclusion(
    flow: &FlowSpec,
    x: &ManifoldPoint,
    t: f64,
    epsilon: f64,
    trials: usize,
    seed: u64,
    integration: &IntegrationConfig,
) -> Result<LemmaReport> {
    let chart = flow.chart();
    if flow.speed(x)? < FREEZE_SPEED {
        return Err(Error::SingularBase {
            point: *x,
            speed: flow.speed(x)?,
            time: 0.0,
        });
    }
    if trials == 0 || !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("need trials ≥ 1 and ε > 0".into()));
    }
    let tx = flow.integrate_sampled(x, t, integration.step, integration.sample_dt)?;
    let (ys, shrink) = sample_rescaled_ball(flow, x, &tx, t, epsilon / 4.0, 2 * trials, seed, integration)?;
    let mut report = LemmaReport::new(LemmaId::Symmetry)
        .param("t", t)
        .param("epsilon", epsilon)
        .param("proposal_shrink", shrink);
    let margins: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let (y, w) = (&ys[2 * i], &ys[2 * i + 1]);
            let a = rescaled_dt_metric(&chart, y, w, t)?;
            let b = rescaled_dt_metric(&chart, w, y, t)?;
            Ok((epsilon - a.max(b)) / epsilon)
        })
        .collect::<Result<_>>()?;
    for m in margins {
        report.record(m);
    }
    // The trivial pair y = w = x.
    report.record((epsilon - rescaled_dt_metric(&chart, &tx, &tx, t)?) / epsilon);
    Ok(report)
}

/// Check `e^{-Ls} ≤ ‖X(φ_s z)‖/‖X(z)‖ ≤ e^{Ls}` at every sample of random
/// orbit segments. A relative slack of `1e-12` absorbs rounding.
pub fn check_cone_bound(
    flow: &FlowSpec,
    trials: usize,
    horizon: f64,
    lipschitz: f64,
    seed: u64,
    integration: &IntegrationConfig,
) -> Result<LemmaReport> {
    let chart = flow.chart();
    let margins: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let (z, _) = regular_uniform(flow, &chart, &mut rng)?;
            cone_margins(flow, &z, horizon, lipschitz, integration)
        })
        .collect::<Result<_>>()?;
    let mut report = LemmaReport::new(LemmaId::Cope)
        .param("L", lipschitz)
        .param("horizon", horizon)
        .param("trials", trials as f64);
    for m in margins.into_iter().flatten() {
        report.record(m);
    }
    Ok(report)
}

/// Log-margins of the cone bound along the orbit of `z`.
pub fn cone_margins(
    flow: &FlowSpec,
    z: &ManifoldPoint,
    horizon: f64,
    lipschitz: f64,
    integration: &IntegrationConfig,
) -> Result<Vec<f64>> {
    let tr = flow.integrate_sampled(z, horizon, integration.step, integration.sample_dt)?;
    let s0 = tr.speeds[0];
    Ok(tr
        .times
        .iter()
        .zip(&tr.speeds)
        .map(|(s, v)| {
            let log_ratio = (v / s0).ln();
            let bound = lipschitz * s + 1e-12;
            (bound - log_ratio.abs()).min(bound + 1.0) / (1.0 + lipschitz * s)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Isometry {
    Identity,
    TorusTranslation([f64; 2]),
    /// `(x, y) ↦ (y, x)`; the field must be symmetric under the swap after
    /// exchanging its components.
    TorusAxisSwapIfSymmetric,
    SphereRotation { axis: [f64; 3], angle: f64 },
}

impl Isometry {
    pub fn apply(&self, chart: &ChartSpec, p: &ManifoldPoint) -> Result<ManifoldPoint> {
        match (self, chart) {
            (Isometry::Identity, _) => Ok(*p),
            (Isometry::TorusTranslation(v), ChartSpec::FlatTorus2 { .. }) => {
                Ok(chart.displace(p, [v[0], v[1], 0.0]))
            }
            (Isometry::TorusAxisSwapIfSymmetric, ChartSpec::FlatTorus2 { sides }) => {
                if sides[0] != sides[1] {
                    return Err(Error::Unsupported("axis swap needs a square torus".into()));
                }
                // Reduced x lives in [-s/2, s/2), y in [0, s); shift to match.
                let h = sides[0] / 2.0;
                chart.point(&[p.coords[1] - h, p.coords[0] + h])
            }
            (Isometry::SphereRotation { axis, angle }, ChartSpec::Sphere2) => {
                let n = crate::manifold::normalize3(*axis);
                let x = p.coords;
                let (s, c) = angle.sin_cos();
                let dot = n[0] * x[0] + n[1] * x[1] + n[2] * x[2];
                let cr = crate::manifold::cross3(n, x);
                let q = [0, 1, 2].map(|i| x[i] * c + cr[i] * s + n[i] * dot * (1.0 - c));
                Ok(chart.reduce(ManifoldPoint { kind: p.kind, coords: q }))
            }
            _ => Err(Error::Unsupported(format!("{self:?} does not act on {:?}", chart.kind()))),
        }
    }

    /// The pushforward `ψ_* X` as a representable flow, when it is one.
    pub fn pushforward(&self, flow: &FlowSpec) -> Result<FlowSpec> {
        let unsupported = || {
            Err(Error::Unsupported(format!(
                "pushforward of {} under {self:?} is not a built-in family",
                flow.id()
            )))
        };
        match (self, flow) {
            (Isometry::Identity, _) => Ok(flow.clone()),
            (
                Isometry::TorusTranslation(_),
                FlowSpec::ConstantTorus { .. } | FlowSpec::LinearTorus { .. },
            ) => Ok(flow.clone()),
            (Isometry::TorusTranslation(v), FlowSpec::TorusItem4) => {
                let side = crate::manifold::TORUS_SIDE;
                if (v[0] / side - (v[0] / side).round()).abs() < 1e-15 {
                    Ok(flow.clone())
                } else {
                    unsupported()
                }
            }
            (Isometry::TorusAxisSwapIfSymmetric, FlowSpec::ConstantTorus { velocity }) => Ok(FlowSpec::ConstantTorus {
                velocity: [velocity[1], velocity[0]],
            }),
            (Isometry::TorusAxisSwapIfSymmetric, FlowSpec::LinearTorus { rotation }) => Ok(FlowSpec::LinearTorus {
                rotation: [rotation[1], rotation[0]],
            }),
            (
                Isometry::SphereRotation { axis, angle },
                FlowSpec::SphereEno { .. } | FlowSpec::SphereEnoUnperturbed,
            ) => {
                let n = crate::manifold::normalize3(*axis);
                let about_z = n[0].abs() < 1e-15 && n[1].abs() < 1e-15;
                if about_z || angle.rem_euclid(std::f64::consts::TAU) == 0.0 {
                    Ok(flow.clone())
                } else {
                    unsupported()
                }
            }
            _ => unsupported(),
        }
    }
}

/// Spanning counts of `flow` on `grid` versus counts of the pushforward on
/// the mapped grid, classical and rescaled, over a small `(t, ε)` ladder.
pub fn conjugacy_smoke(
    flow: &FlowSpec,
    isometry: &Isometry,
    grid: &[ManifoldPoint],
    t_ladder: &[f64],
    eps_ladder: &[f64],
    integration: &IntegrationConfig,
) -> Result<LemmaReport> {
    let pushed = isometry.pushforward(flow)?;
    let chart = flow.chart();
    let mapped: Vec<ManifoldPoint> = grid.iter().map(|p| isometry.apply(&chart, p)).collect::<Result<_>>()?;
    let horizon = t_ladder.iter().copied().fold(0.0, f64::max);
    let mut report = LemmaReport::new(LemmaId::ConjugacySmoke);
    let mut slopes = Vec::new();
    for rescaled in [false, true] {
        let mut tables = Vec::new();
        for (f, pts) in [(flow, grid), (&pushed, &mapped[..])] {
            let cache = TrajectoryCache::build(f, pts, horizon, integration.step, integration.sample_dt)?;
            let n = cache.samples_until(horizon)?;
            let all: Vec<usize> = (0..pts.len()).collect();
            let cand: Vec<usize> = all.iter().copied().filter(|&i| !rescaled || cache.is_regular(i, n)).collect();
            let cache_ref = &cache;
            let targets = |eps: f64| -> Vec<usize> {
                all.iter()
                    .copied()
                    .filter(|&i| !rescaled || cache_ref.speed(i, 0) >= eps)
                    .collect()
            };
            tables.push(spanning_table(&cache, &cand, targets, t_ladder, eps_ladder, rescaled)?);
        }
        for (a, b) in tables[0].triples().iter().zip(tables[1].triples()) {
            report.record(if a.2 == b.2 { 1.0 } else { -1.0 });
        }
        if t_ladder.len() >= 3 {
            let mode = if rescaled {
                EstimateMode::Rescaled
            } else {
                EstimateMode::Classical
            };
            // Empty sublevel sets give zero counts and no slope information.
            let nonzero = |t: &crate::estimators::CountTable| -> Vec<(f64, f64, usize)> {
                t.triples().into_iter().filter(|c| c.2 > 0).collect()
            };
            let (ta, tb) = (nonzero(&tables[0]), nonzero(&tables[1]));
            if ta.is_empty() || tb.is_empty() {
                continue;
            }
            let ea = entropy_slope(&ta, mode, 0.25)?.extrapolated;
            let eb = entropy_slope(&tb, mode, 0.25)?.extrapolated;
            let scale = ea.abs().max(eb.abs());
            let rel = if scale < 1e-12 { 0.0 } else { (ea - eb).abs() / scale };
            report.record(0.1 - rel);
            slopes.push((ea, eb));
        }
    }
    report.note = "only isometries commuting with the field are representable".into();
    if let Some((a, b)) = slopes.last() {
        report = report.param("e_star", *a).param("e_star_pushforward", *b);
    }
    Ok(report)
}

/// Report for `estimate ≤ bound + margin` (e.g. `e*_μ ≤ e*`).
pub fn inequality_report(lemma: LemmaId, estimate: f64, bound: f64, margin: f64) -> LemmaReport {
    let mut r = LemmaReport::new(lemma)
        .param("estimate", estimate)
        .param("bound", bound)
        .param("margin", margin);
    r.record(bound + margin - estimate);
    r
}

/// Report for `|a - b| ≤ tolerance` (e.g. `e = e*` for nonsingular fields).
pub fn equality_report(lemma: LemmaId, a: f64, b: f64, tolerance: f64) -> LemmaReport {
    let mut r = LemmaReport::new(lemma)
        .param("a", a)
        .param("b", b)
        .param("tolerance", tolerance);
    r.record(tolerance - (a - b).abs());
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integ() -> IntegrationConfig {
        IntegrationConfig {
            step: 1e-2,
            sample_dt: 0.05,
        }
    }

    #[test]
    fn constant_speed_passes_the_whole_ladder() {
        let f = FlowSpec::ConstantTorus {
            velocity: [1.0, 0.0],
        };
        let p = probe_r0(&f, 200, 7).unwrap();
        assert_eq!(p.r0, 1.0);
        assert!(!p.flagged);
    }

    #[test]
    fn item4_r0_is_positive_and_at_most_one() {
        let p = probe_r0(&FlowSpec::TorusItem4, 2000, 11).unwrap();
        assert!(p.r0 > 0.0 && p.r0 <= 1.0, "{}", p.r0);
        assert!(p.report.passed());
    }

    #[test]
    fn probe_is_reproducible() {
        let a = probe_r0(&FlowSpec::eno_default(), 300, 5).unwrap();
        let b = probe_r0(&FlowSpec::eno_default(), 300, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_torus_ball_inclusion() {
        let f = FlowSpec::ConstantTorus {
            velocity: [1.0, 0.0],
        };
        let x = f.chart().point(&[0.3, 1.1]).unwrap();
        let r = check_ball_inclusion(&f, &x, 3.0, 0.4, 200, 3, &integ()).unwrap();
        assert!(r.passed(), "{r:?}");
        // d* = d for unit speed, so pairs stay within ε/2.
        assert!(r.worst_margin >= 0.5 - 1e-9, "{}", r.worst_margin);
    }

    #[test]
    fn cone_bound_for_constant_and_item4() {
        let c = FlowSpec::ConstantTorus {
            velocity: [1.0, 0.0],
        };
        assert!(check_cone_bound(&c, 20, 3.0, 0.0, 1, &integ()).unwrap().passed());
        let f = FlowSpec::TorusItem4;
        let l = f.flow_summary(64).unwrap().lipschitz * 1.05;
        let r = check_cone_bound(&f, 50, 6.0, l, 2, &integ()).unwrap();
        assert!(r.passed(), "{r:?}");
        // Below the true constant the bound must fail somewhere on C.
        let x = f.chart().point(&[-2.0, 0.0]).unwrap();
        let m = cone_margins(&f, &x, 6.0, 0.5, &integ()).unwrap();
        assert!(m.iter().any(|v| *v < 0.0));
    }

    #[test]
    fn isometries_act_correctly() {
        let chart = ChartSpec::sphere();
        let p = chart.point(&[0.6, 0.0, 0.8]).unwrap();
        let q = Isometry::SphereRotation {
            axis: [0.0, 0.0, 1.0],
            angle: std::f64::consts::FRAC_PI_2,
        }
        .apply(&chart, &p)
        .unwrap();
        assert!((q.coords[0]).abs() < 1e-15 && (q.coords[1] - 0.6).abs() < 1e-15);
        let t = ChartSpec::standard_torus();
        let a = t.point(&[-1.5, 0.25]).unwrap();
        let b = t.point(&[0.7, 3.0]).unwrap();
        let sw = Isometry::TorusAxisSwapIfSymmetric;
        let d0 = t.distance(&a, &b).unwrap();
        let d1 = t.distance(&sw.apply(&t, &a).unwrap(), &sw.apply(&t, &b).unwrap()).unwrap();
        assert!((d0 - d1).abs() < 1e-12);
    }

    #[test]
    fn unrepresentable_pushforwards_are_unsupported() {
        assert!(matches!(
            Isometry::TorusTranslation([1.0, 0.0]).pushforward(&FlowSpec::TorusItem4),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            Isometry::SphereRotation {
                axis: [1.0, 0.0, 0.0],
                angle: 0.3
            }
            .pushforward(&FlowSpec::eno_default()),
            Err(Error::Unsupported(_))
        ));
        assert!(Isometry::TorusAxisSwapIfSymmetric.pushforward(&FlowSpec::TorusItem4).is_err());
    }

    #[test]
    fn smoke_counts_match() {
        let f = FlowSpec::TorusItem4;
        let grid = f.chart().sample_grid(12);
        for iso in [Isometry::Identity, Isometry::TorusTranslation([0.0, 1.0])] {
            let r = conjugacy_smoke(&f, &iso, &grid, &[0.0, 1.0, 2.0], &[0.45, 0.95], &integ()).unwrap();
            assert!(r.passed(), "{iso:?}: {r:?}");
        }
        let e = FlowSpec::eno_default();
        let grid = e.chart().sample_grid(10);
        let iso = Isometry::SphereRotation {
            axis: [0.0, 0.0, 1.0],
            angle: 0.7,
        };
        let r = conjugacy_smoke(&e, &iso, &grid, &[0.0, 1.0, 2.0], &[0.3, 0.6], &integ()).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn inequality_reports() {
        assert!(inequality_report(LemmaId::HalfVariational, 0.9, 0.88, 0.05).passed());
        assert!(!inequality_report(LemmaId::HalfVariational, 1.0, 0.9, 0.05).passed());
        assert!(equality_report(LemmaId::NonsingularEquality, 0.9, 0.95, 0.1).passed());
    }
}
