//! Periodic orbits of the suspension of a hyperbolic toral automorphism.
//!
//! With roof one, closed orbits of period `n` correspond to `A`-orbits of
//! least period `n` on the torus, so everything reduces to counting fixed
//! points of `Aⁿ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    linear_fit, separating_table, EntropyEstimate, IntegrationConfig, SampleSpec,
};
use crate::flows::FlowSpec;
use crate::manifold::CatMatrix;
use crate::metrics::TrajectoryCache;

type M2 = [[i128; 2]; 2];

fn mat_mul(a: &M2, b: &M2) -> Result<M2> {
    let mut c = [[0i128; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = 0i128;
            for k in 0..2 {
                acc = a[i][k]
                    .checked_mul(b[k][j])
                    .and_then(|x| acc.checked_add(x))
                    .ok_or_else(|| Error::Domain("matrix power overflows i128".into()))?;
            }
            c[i][j] = acc;
        }
    }
    Ok(c)
}

fn mat_pow(a: &CatMatrix, n: u32) -> Result<M2> {
    let base = a.0.map(|r| r.map(i128::from));
    let mut out = [[1, 0], [0, 1]];
    for _ in 0..n {
        out = mat_mul(&out, &base)?;
    }
    Ok(out)
}

fn require_hyperbolic(a: &CatMatrix) -> Result<()> {
    if a.det().abs() != 1 || !a.is_hyperbolic() {
        return Err(Error::Domain(format!(
            "matrix {:?} must have |det| = 1 and |trace| > 2",
            a.0
        )));
    }
    Ok(())
}

/// `|det(Aⁿ - I)|`, the number of points of `R²/Z²` fixed by `Aⁿ`.
pub fn fixed_point_count(a: &CatMatrix, n: u32) -> Result<u64> {
    require_hyperbolic(a)?;
    if n == 0 {
        return Err(Error::InvalidArgument("period must be positive".into()));
    }
    let p = mat_pow(a, n)?;
    let det = (p[0][0] - 1) * (p[1][1] - 1) - p[0][1] * p[1][0];
    u64::try_from(det.abs()).map_err(|_| Error::Domain("fixed-point count exceeds u64".into()))
}

/// Points `(p/q, r/q)` with `q ≤ q_max` fixed by `Aⁿ`, counted once each.
/// Equals [`fixed_point_count`] once `q_max` reaches the largest
/// denominator of a fixed point.
pub fn brute_force_fixed_points(a: &CatMatrix, n: u32, q_max: u64) -> Result<u64> {
    require_hyperbolic(a)?;
    let p = mat_pow(a, n)?;
    let mut count = 0;
    for q in 1..=q_max as i128 {
        let m = p.map(|r| r.map(|x| x.rem_euclid(q)));
        for x in 0..q {
            for y in 0..q {
                // Count each point at its exact denominator only.
                if gcd(gcd(x, y), q) != 1 {
                    continue;
                }
                let ax = (m[0][0] * x + m[0][1] * y).rem_euclid(q);
                let ay = (m[1][0] * x + m[1][1] * y).rem_euclid(q);
                if ax == x && ay == y {
                    count += 1;
                }
            }
        }
    }
    Ok(count)
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn mobius(mut n: u32) -> i64 {
    let mut sign = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodRow {
    pub n: u32,
    pub fixed_points: u64,
    pub least_period_orbits: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitCensus {
    pub per_period: Vec<PeriodRow>,
    /// `(t, v(t))` at integer `t = 1..=⌊t_max⌋`.
    pub v_table: Vec<(f64, u64)>,
}

impl OrbitCensus {
    /// A flow without closed orbits.
    pub fn empty(t_max: f64) -> Self {
        let top = t_max.floor().max(0.0) as u32;
        OrbitCensus {
            per_period: Vec::new(),
            v_table: (1..=top).map(|t| (t as f64, 0)).collect(),
        }
    }

    /// Census from a table of `v(t)` at integer times (for tests and
    /// external data).
    pub fn from_v_table(v_table: Vec<(f64, u64)>) -> Self {
        OrbitCensus {
            per_period: Vec::new(),
            v_table,
        }
    }

    /// `v(t)`: closed orbits of period `≤ t`.
    pub fn v(&self, t: f64) -> u64 {
        self.per_period
            .iter()
            .filter(|r| r.n as f64 <= t)
            .map(|r| r.least_period_orbits)
            .sum()
    }

    /// `v_β(t)`: closed orbits with period in `[t - β, t + β]`.
    pub fn v_beta(&self, t: f64, beta: f64) -> u64 {
        self.per_period
            .iter()
            .filter(|r| (r.n as f64 - t).abs() <= beta)
            .map(|r| r.least_period_orbits)
            .sum()
    }

    /// Whether `fixed_points(n) = Σ_{d|n} d·orbits(d)` on every row.
    pub fn is_consistent(&self) -> bool {
        self.per_period.iter().all(|row| {
            let s: u64 = self
                .per_period
                .iter()
                .filter(|d| row.n % d.n == 0)
                .map(|d| d.n as u64 * d.least_period_orbits)
                .sum();
            s == row.fixed_points
        })
    }
}

/// Exact census up to `t_max` by Möbius inversion of fixed-point counts.
pub fn orbit_census(a: &CatMatrix, t_max: f64) -> Result<OrbitCensus> {
    require_hyperbolic(a)?;
    if !(t_max >= 1.0 && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_max must be ≥ 1, got {t_max}")));
    }
    let top = t_max.floor() as u32;
    let fix: Vec<u64> = (1..=top).map(|n| fixed_point_count(a, n)).collect::<Result<_>>()?;
    let mut per_period = Vec::with_capacity(top as usize);
    for n in 1..=top {
        let mut points: i128 = 0;
        for d in (1..=n).filter(|d| n % d == 0) {
            points += mobius(n / d) as i128 * fix[d as usize - 1] as i128;
        }
        if points < 0 || points % n as i128 != 0 {
            return Err(Error::Domain(format!("inconsistent least-period count {points} at n = {n}")));
        }
        per_period.push(PeriodRow {
            n,
            fixed_points: fix[n as usize - 1],
            least_period_orbits: (points / n as i128) as u64,
        });
    }
    let mut census = OrbitCensus {
        per_period,
        v_table: Vec::new(),
    };
    census.v_table = (1..=top).map(|t| (t as f64, census.v(t as f64))).collect();
    Ok(census)
}

/// Growth of `log v(t)` over the top half of the table, fitted as
/// `log v ≈ h·t + c₁·log t + c₀`. The `log t` term absorbs the polynomial
/// prefactor of orbit counts (`v(t) ~ e^{ht}/(h t)` for hyperbolic flows)
/// and is exactly zero for pure exponentials.
pub fn growth_rate(census: &OrbitCensus) -> Result<f64> {
    let table = &census.v_table;
    let t_max = table.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    if table.is_empty() || t_max < 8.0 {
        return Err(Error::InsufficientData(format!(
            "growth rate needs a table reaching t ≥ 8, got t_max = {t_max}"
        )));
    }
    let top: Vec<(f64, u64)> = table.iter().copied().filter(|r| r.0 >= t_max / 2.0).collect();
    if top.iter().all(|r| r.1 == 0) {
        return Ok(0.0);
    }
    let pts: Vec<(f64, f64)> = top.iter().filter(|r| r.1 > 0).map(|r| (r.0, (r.1 as f64).ln())).collect();
    if pts.len() < 4 {
        return Err(Error::InsufficientData("fewer than 4 positive counts in the top half".into()));
    }
    Ok(fit_with_log_term(&pts))
}

/// Coefficient of `t` in the least-squares fit `y ≈ h·t + c₁·log t + c₀`.
fn fit_with_log_term(pts: &[(f64, f64)]) -> f64 {
    let rows: Vec<[f64; 3]> = pts.iter().map(|p| [p.0, p.0.ln(), 1.0]).collect();
    let mut g = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for (r, p) in rows.iter().zip(pts) {
        for i in 0..3 {
            b[i] += r[i] * p.1;
            for j in 0..3 {
                g[i][j] += r[i] * r[j];
            }
        }
    }
    // Gaussian elimination with partial pivoting on the normal equations.
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&g[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs())).unwrap();
        m.swap(col, piv);
        for row in 0..3 {
            if row != col && m[col][col] != 0.0 {
                let f = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    if m[0][0] == 0.0 {
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        return linear_fit(&x, &y).0;
    }
    m[0][3] / m[0][0]
}

/// Settings for the intermediate inequality `v_{α/2}(t) ≤ S*(t, α, K)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub alphas: Vec<f64>,
    pub t_values: Vec<f64>,
    pub sample: SampleSpec,
    pub integration: IntegrationConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub alpha: f64,
    pub t: f64,
    pub v_half_alpha: u64,
    pub s_star: usize,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthBoundReport {
    pub growth: f64,
    pub e_star: f64,
    pub tolerance: f64,
    /// `growth ≤ e_star + tolerance`.
    pub bound_holds: bool,
    pub windows: Vec<WindowRow>,
    pub windows_hold: bool,
    pub holds: bool,
}

/// Check `limsup (1/t) log v(t) ≤ e*(X)` up to `tolerance`, and optionally
/// the separating-set inequality behind it on a sampled `K = M`.
pub fn check_growth_bound(
    flow: &FlowSpec,
    census: &OrbitCensus,
    e_star: &EntropyEstimate,
    tolerance: f64,
    windows: Option<&WindowConfig>,
) -> Result<GrowthBoundReport> {
    if !flow.is_nonsingular() {
        return Err(Error::Domain(format!(
            "growth bound check needs a nonsingular flow, {} is singular",
            flow.id()
        )));
    }
    let growth = growth_rate(census)?;
    let bound_holds = growth <= e_star.extrapolated + tolerance;
    let mut rows = Vec::new();
    if let Some(cfg) = windows {
        let mut alphas = cfg.alphas.clone();
        alphas.sort_by(f64::total_cmp);
        alphas.dedup();
        let mut ts = cfg.t_values.clone();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let points = cfg.sample.points(&flow.chart())?;
        let horizon = *ts.last().ok_or_else(|| Error::InvalidArgument("empty t list".into()))?;
        let cache = TrajectoryCache::build(flow, &points, horizon, cfg.integration.step, cfg.integration.sample_dt)?;
        let idx: Vec<usize> = (0..points.len()).collect();
        let table = separating_table(&cache, &idx, &ts, &alphas, true)?;
        for (ti, &t) in ts.iter().enumerate() {
            for (ai, &alpha) in alphas.iter().enumerate() {
                let v = census.v_beta(t, alpha / 2.0);
                let s = table.cell(ti, ai).count;
                rows.push(WindowRow {
                    alpha,
                    t,
                    v_half_alpha: v,
                    s_star: s,
                    holds: v <= s as u64,
                });
            }
        }
    }
    let windows_hold = rows.iter().all(|r| r.holds);
    Ok(GrowthBoundReport {
        growth,
        e_star: e_star.extrapolated,
        tolerance,
        bound_holds,
        windows: rows,
        windows_hold,
        holds: bound_holds && windows_hold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimateMode;

    const CAT: CatMatrix = CatMatrix::ARNOLD;

    #[test]
    fn fixed_points_of_the_cat_map() {
        // Oracle: trace(Aⁿ) - 2 with trace(Aⁿ) = L_{2n} (Lucas numbers).
        let lucas = |k: u32| {
            let (mut a, mut b) = (2u64, 1u64);
            for _ in 0..k {
                (a, b) = (b, a + b);
            }
            a
        };
        for n in 1..=14 {
            assert_eq!(fixed_point_count(&CAT, n).unwrap(), lucas(2 * n) - 2, "n = {n}");
        }
        assert_eq!(fixed_point_count(&CAT, 1).unwrap(), 1);
        assert_eq!(fixed_point_count(&CAT, 2).unwrap(), 5);
        assert_eq!(fixed_point_count(&CAT, 3).unwrap(), 16);
    }

    #[test]
    fn non_hyperbolic_is_a_domain_error() {
        let rot = CatMatrix([[0, -1], [1, 0]]);
        assert!(matches!(fixed_point_count(&rot, 1), Err(Error::Domain(_))));
        assert!(matches!(orbit_census(&rot, 5.0), Err(Error::Domain(_))));
    }

    #[test]
    fn brute_force_agrees_small_n() {
        for n in 1..=4 {
            assert_eq!(
                brute_force_fixed_points(&CAT, n, 30).unwrap(),
                fixed_point_count(&CAT, n).unwrap()
            );
        }
    }

    #[test]
    fn census_small_values() {
        let c = orbit_census(&CAT, 14.0).unwrap();
        assert_eq!(c.v(1.0), 1);
        assert_eq!(c.v(2.0), 3);
        assert_eq!(c.v(3.0), 8);
        assert!(c.is_consistent());
        assert!(c.v_table.windows(2).all(|w| w[0].1 <= w[1].1));
        // Only period 2 lies in [1.75, 2.25]: (5 - 1)/2 = 2 orbits.
        assert_eq!(c.v_beta(2.0, 0.25), 2);
    }

    #[test]
    fn growth_rate_examples() {
        let ones = OrbitCensus::from_v_table((1..=12).map(|t| (t as f64, 1)).collect());
        assert_eq!(growth_rate(&ones).unwrap(), 0.0);
        let doubling = OrbitCensus::from_v_table((1..=12).map(|t| (t as f64, 1u64 << t)).collect());
        assert!((growth_rate(&doubling).unwrap() - 2f64.ln()).abs() < 1e-9);
        assert_eq!(growth_rate(&OrbitCensus::empty(12.0)).unwrap(), 0.0);
        let short = OrbitCensus::from_v_table((1..=5).map(|t| (t as f64, 1)).collect());
        assert!(matches!(growth_rate(&short), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn cat_growth_is_log_lambda() {
        let c = orbit_census(&CAT, 14.0).unwrap();
        let h = CAT.spectral_radius().ln();
        let g = growth_rate(&c).unwrap();
        assert!((g / h - 1.0).abs() < 0.05, "{g} vs {h}");
    }

    #[test]
    fn singular_flows_are_rejected() {
        let est = crate::estimators::entropy_slope(
            &[(1.0, 0.1, 1), (2.0, 0.1, 1), (3.0, 0.1, 1)],
            EstimateMode::Rescaled,
            0.1,
        )
        .unwrap();
        assert!(check_growth_bound(&FlowSpec::TorusItem4, &OrbitCensus::empty(10.0), &est, 0.1, None).is_err());
        let lin = FlowSpec::LinearTorus {
            rotation: [1.0, std::f64::consts::SQRT_2],
        };
        let r = check_growth_bound(&lin, &OrbitCensus::empty(10.0), &est, 0.1, None).unwrap();
        assert!(r.holds);
    }
}
