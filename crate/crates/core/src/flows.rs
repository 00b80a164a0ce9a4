//! Built-in vector fields, fixed-step RK4 integration and field summaries.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{
    mapping_torus_ds, CatMatrix, ChartSpec, ManifoldPoint,
    MAPPING_TORUS_AMBIENT,
};
use crate::profiles::{eno_rho, item4_rho, rho0};

/// Speeds below this are treated as exact equilibria.
pub const FREEZE_SPEED: f64 = 1e-14;

/// Default RK4 step.
pub const DEFAULT_STEP: f64 = 1e-3;

/// Level of the parallel circle used with the perturbed sphere field.
pub const ENO_DEFAULT_LEVEL: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FlowSpec {
    /// Constant field on the side-4 torus.
    ConstantTorus { velocity: [f64; 2] },
    /// `X(x, y) = ρ(x)·(1, 0)` on the side-4 torus with the piecewise profile
    /// of [`item4_rho`].
    TorusItem4,
    /// `X = ρ(z)·(xz, yz, -x² - y²)` on the sphere with zeros at `b < a < 0`.
    SphereEno { a: f64, b: f64 },
    /// The same field with `ρ = ρ₀`: only the poles are singular.
    SphereEnoUnperturbed,
    /// Unit-speed suspension of a toral automorphism.
    CatMapSuspension { matrix: CatMatrix },
    /// Constant field, typically with an irrational slope.
    LinearTorus { rotation: [f64; 2] },
}

/// Field value at a point: coordinate velocity and metric speed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldValue {
    pub vector: [f64; 3],
    pub speed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub sup_speed: f64,
    pub inf_speed: f64,
    pub lipschitz: f64,
    pub singular_set: String,
    pub nonsingular: bool,
    pub resolution: usize,
}

/// A sampled orbit segment starting at `base`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub base: ManifoldPoint,
    pub times: Vec<f64>,
    pub points: Vec<ManifoldPoint>,
    pub speeds: Vec<f64>,
    /// Actual RK4 step used.
    pub step: f64,
}

impl Trajectory {
    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of samples with time `≤ t` (with a small tolerance for ladder
    /// round-off).
    pub fn samples_until(&self, t: f64) -> usize {
        let tol = 1e-9 * (1.0 + t.abs());
        self.times.partition_point(|&s| s <= t + tol)
    }

    pub fn endpoint(&self) -> ManifoldPoint {
        *self.points.last().unwrap_or(&self.base)
    }
}

impl fmt::Display for FlowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FlowSpec {
    pub fn eno_default() -> Self {
        FlowSpec::SphereEno { a: -0.3, b: -0.7 }
    }

    pub fn cat_default() -> Self {
        FlowSpec::CatMapSuspension {
            matrix: CatMatrix::ARNOLD,
        }
    }

    /// Stable list of the built-in flows with their default parameters.
    pub fn builtins() -> Vec<FlowSpec> {
        vec![
            FlowSpec::ConstantTorus {
                velocity: [1.0, 0.0],
            },
            FlowSpec::TorusItem4,
            FlowSpec::eno_default(),
            FlowSpec::SphereEnoUnperturbed,
            FlowSpec::cat_default(),
            FlowSpec::LinearTorus {
                rotation: [1.0, (5f64.sqrt() - 1.0) / 2.0],
            },
        ]
    }

    /// Built-in flow by identifier, with default parameters.
    pub fn from_id(id: &str) -> Result<FlowSpec> {
        FlowSpec::builtins()
            .into_iter()
            .find(|f| f.id() == id)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown flow '{id}'")))
    }

    pub fn id(&self) -> &'static str {
        match self {
            FlowSpec::ConstantTorus { .. } => "ConstantTorus",
            FlowSpec::TorusItem4 => "TorusItem4",
            FlowSpec::SphereEno { .. } => "SphereEno",
            FlowSpec::SphereEnoUnperturbed => "SphereEnoUnperturbed",
            FlowSpec::CatMapSuspension { .. } => "CatMapSuspension",
            FlowSpec::LinearTorus { .. } => "LinearTorus",
        }
    }

    pub fn parameters(&self) -> String {
        match self {
            FlowSpec::ConstantTorus { velocity } => format!("velocity=({}, {})", velocity[0], velocity[1]),
            FlowSpec::TorusItem4 => "side=4".into(),
            FlowSpec::SphereEno { a, b } => format!("a={a}, b={b}"),
            FlowSpec::SphereEnoUnperturbed => "rho=rho0".into(),
            FlowSpec::CatMapSuspension { matrix } => format!("A={:?}", matrix.0),
            FlowSpec::LinearTorus { rotation } => format!("rotation=({}, {})", rotation[0], rotation[1]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FlowSpec::ConstantTorus { velocity } | FlowSpec::LinearTorus { rotation: velocity } => {
                if !velocity.iter().all(|v| v.is_finite()) {
                    return Err(Error::InvalidArgument(format!("non-finite velocity {velocity:?}")));
                }
            }
            FlowSpec::SphereEno { a, b } => {
                if !(-1.0 < *b && b < a && *a < 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "sphere zeros must satisfy -1 < b < a < 0, got a = {a}, b = {b}"
                    )));
                }
            }
            FlowSpec::CatMapSuspension { matrix } => {
                CatMatrix::new(matrix.0)?;
            }
            _ => {}
        }
        Ok(())
    }

    pub fn chart(&self) -> ChartSpec {
        match self {
            FlowSpec::ConstantTorus { .. } | FlowSpec::TorusItem4 | FlowSpec::LinearTorus { .. } => {
                ChartSpec::standard_torus()
            }
            FlowSpec::SphereEno { .. } | FlowSpec::SphereEnoUnperturbed => ChartSpec::sphere(),
            FlowSpec::CatMapSuspension { matrix } => ChartSpec::MappingTorus { matrix: *matrix },
        }
    }

    /// Human-readable description of `Sing(X)`.
    pub fn singular_set(&self) -> String {
        match self {
            FlowSpec::ConstantTorus { velocity } | FlowSpec::LinearTorus { rotation: velocity } => {
                if velocity[0] == 0.0 && velocity[1] == 0.0 {
                    "T²".into()
                } else {
                    "∅".into()
                }
            }
            FlowSpec::TorusItem4 => "{0, 2/3} × [0,4]".into(),
            FlowSpec::SphereEno { a, b } => {
                format!("poles (0,0,±1) ∪ circle z = {a} ∪ circle z = {b}")
            }
            FlowSpec::SphereEnoUnperturbed => "poles (0,0,±1)".into(),
            FlowSpec::CatMapSuspension { .. } => "∅".into(),
        }
    }

    /// Whether `Sing(X)` is empty.
    pub fn is_nonsingular(&self) -> bool {
        match self {
            FlowSpec::ConstantTorus { velocity } | FlowSpec::LinearTorus { rotation: velocity } => {
                velocity[0] != 0.0 || velocity[1] != 0.0
            }
            FlowSpec::CatMapSuspension { .. } => true,
            _ => false,
        }
    }

    /// `γ = ρ'(a)(1 - a²)`, the decay rate below the parallel `z = -δ`.
    pub fn eno_gamma(&self) -> Option<f64> {
        match self {
            FlowSpec::SphereEno { a, b } => Some(eno_rho(*a, *b, *a).1 * (1.0 - a * a)),
            _ => None,
        }
    }

    /// `κ = ρ(-δ)·√(1 - δ²)`.
    pub fn eno_kappa(&self, level: f64) -> Option<f64> {
        match self {
            FlowSpec::SphereEno { a, b } => {
                Some(eno_rho(*a, *b, -level).0 * (1.0 - level * level).sqrt())
            }
            _ => None,
        }
    }

    /// Coordinate velocity at an arbitrary (possibly unreduced) state.
    fn velocity(&self, c: [f64; 3]) -> [f64; 3] {
        match self {
            FlowSpec::ConstantTorus { velocity } | FlowSpec::LinearTorus { rotation: velocity } => {
                [velocity[0], velocity[1], 0.0]
            }
            FlowSpec::TorusItem4 => [item4_rho(c[0]).0, 0.0, 0.0],
            FlowSpec::SphereEno { .. } | FlowSpec::SphereEnoUnperturbed => {
                let r = self.sphere_rho(c[2]).0;
                [r * c[0] * c[2], r * c[1] * c[2], -r * (c[0] * c[0] + c[1] * c[1])]
            }
            FlowSpec::CatMapSuspension { .. } => [0.0, 0.0, 1.0],
        }
    }

    fn sphere_rho(&self, z: f64) -> (f64, f64) {
        match self {
            FlowSpec::SphereEno { a, b } => eno_rho(*a, *b, z),
            _ => rho0(z),
        }
    }

    /// Metric speed at a reduced point.
    fn speed_at(&self, p: &ManifoldPoint) -> f64 {
        match self {
            FlowSpec::ConstantTorus { velocity } | FlowSpec::LinearTorus { rotation: velocity } => {
                velocity[0].hypot(velocity[1])
            }
            FlowSpec::TorusItem4 => item4_rho(p.coords[0]).0.abs(),
            FlowSpec::SphereEno { .. } | FlowSpec::SphereEnoUnperturbed => {
                let z = p.coords[2];
                self.sphere_rho(z).0.abs() * (1.0 - z * z).max(0.0).sqrt()
            }
            FlowSpec::CatMapSuspension { matrix } => {
                let d = mapping_torus_ds(matrix, p.coords);
                d.iter().map(|x| x * x).sum::<f64>().sqrt()
            }
        }
    }

    pub fn evaluate_field(&self, p: &ManifoldPoint) -> Result<FieldValue> {
        self.chart().check(p)?;
        Ok(FieldValue {
            vector: self.velocity(p.coords),
            speed: self.speed_at(p),
        })
    }

    pub fn speed(&self, p: &ManifoldPoint) -> Result<f64> {
        self.chart().check(p)?;
        Ok(self.speed_at(p))
    }

    fn rk4(&self, c: [f64; 3], h: f64) -> [f64; 3] {
        let add = |a: [f64; 3], k: [f64; 3], s: f64| [a[0] + s * k[0], a[1] + s * k[1], a[2] + s * k[2]];
        let k1 = self.velocity(c);
        let k2 = self.velocity(add(c, k1, h / 2.0));
        let k3 = self.velocity(add(c, k2, h / 2.0));
        let k4 = self.velocity(add(c, k3, h));
        [
            c[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            c[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            c[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
        ]
    }

    /// Integrate and record every RK4 step.
    pub fn integrate(&self, p: &ManifoldPoint, horizon: f64, step: f64) -> Result<Trajectory> {
        self.integrate_sampled(p, horizon, step, step)
    }

    /// Integrate with RK4 steps of at most `step`, recording samples at
    /// uniform spacing of at most `sample_dt`. The step is shrunk so every
    /// sample time is hit exactly; the last sample sits at `horizon`.
    pub fn integrate_sampled(
        &self,
        p: &ManifoldPoint,
        horizon: f64,
        step: f64,
        sample_dt: f64,
    ) -> Result<Trajectory> {
        let chart = self.chart();
        chart.check(p)?;
        if !(step > 0.0 && step.is_finite()) || !(sample_dt > 0.0 && sample_dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "step {step} and sample spacing {sample_dt} must be positive"
            )));
        }
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon {horizon} must be finite and ≥ 0")));
        }
        let samples = (horizon / sample_dt - 1e-9).ceil().max(0.0) as usize;
        let dt = if samples == 0 { 0.0 } else { horizon / samples as f64 };
        let sub = if samples == 0 { 1 } else { (dt / step - 1e-9).ceil().max(1.0) as usize };
        let h = if samples == 0 { step.min(horizon.max(step)) } else { dt / sub as f64 };

        let mut times = Vec::with_capacity(samples + 1);
        let mut points = Vec::with_capacity(samples + 1);
        let mut speeds = Vec::with_capacity(samples + 1);
        let mut cur = chart.reduce(*p);
        let mut speed = self.speed_at(&cur);
        let mut frozen = speed < FREEZE_SPEED;
        times.push(0.0);
        points.push(cur);
        speeds.push(speed);
        for i in 1..=samples {
            if !frozen {
                let mut c = cur.coords;
                for _ in 0..sub {
                    c = self.rk4(c, h);
                }
                if !c.iter().all(|x| x.is_finite()) {
                    return Err(Error::Integration { time: i as f64 * dt });
                }
                cur = chart.reduce(ManifoldPoint {
                    kind: cur.kind,
                    coords: c,
                });
                speed = self.speed_at(&cur);
                frozen = speed < FREEZE_SPEED;
            }
            times.push(if i == samples { horizon } else { i as f64 * dt });
            points.push(cur);
            speeds.push(speed);
        }
        Ok(Trajectory {
            base: *p,
            times,
            points,
            speeds,
            step: h,
        })
    }

    /// Endpoint `φ_t(p)` only, without recording.
    pub fn flow_point(&self, p: &ManifoldPoint, t: f64, step: f64) -> Result<ManifoldPoint> {
        let traj = self.integrate_sampled(p, t, step, t.max(step))?;
        Ok(traj.endpoint())
    }

    /// Local Lipschitz estimate `‖DX(p)‖` in the chart's metric.
    pub fn local_lipschitz(&self, p: &ManifoldPoint) -> Result<f64> {
        let chart = self.chart();
        chart.check(p)?;
        Ok(match self {
            FlowSpec::ConstantTorus { .. } | FlowSpec::LinearTorus { .. } => 0.0,
            FlowSpec::TorusItem4 => item4_rho(p.coords[0]).1.abs(),
            FlowSpec::SphereEno { .. } | FlowSpec::SphereEnoUnperturbed => {
                self.sphere_tangent_norm(p, &chart)
            }
            FlowSpec::CatMapSuspension { matrix } => mapping_torus_lipschitz(matrix, p, &chart),
        })
    }

    /// Operator norm of the ambient Jacobian of `X` restricted to `T_pS²`.
    fn sphere_tangent_norm(&self, p: &ManifoldPoint, chart: &ChartSpec) -> f64 {
        let [x, y, z] = p.coords;
        let (r, dr) = self.sphere_rho(z);
        let g = [x * z, y * z, -x * x - y * y];
        // J = ρ·Dg + g ⊗ (0, 0, ρ')
        let jac = [
            [r * z, 0.0, r * x + g[0] * dr],
            [0.0, r * z, r * y + g[1] * dr],
            [-2.0 * r * x, -2.0 * r * y, g[2] * dr],
        ];
        let basis = chart.tangent_basis(p);
        let cols: Vec<[f64; 3]> = basis
            .iter()
            .map(|e| {
                [
                    jac[0][0] * e[0] + jac[0][1] * e[1] + jac[0][2] * e[2],
                    jac[1][0] * e[0] + jac[1][1] * e[1] + jac[1][2] * e[2],
                    jac[2][0] * e[0] + jac[2][1] * e[1] + jac[2][2] * e[2],
                ]
            })
            .collect();
        let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let (g11, g12, g22) = (dot(cols[0], cols[0]), dot(cols[0], cols[1]), dot(cols[1], cols[1]));
        let tr = g11 + g22;
        let det = g11 * g22 - g12 * g12;
        ((tr + (tr * tr - 4.0 * det).max(0.0).sqrt()) / 2.0).sqrt()
    }

    /// Speed and Lipschitz extrema over the grids of resolution `1..=resolution`
    /// (so every estimate is monotone in `resolution`).
    pub fn flow_summary(&self, resolution: usize) -> Result<FlowSummary> {
        self.validate()?;
        let chart = self.chart();
        let mut sup: f64 = 0.0;
        let mut inf = f64::INFINITY;
        let mut lip: f64 = 0.0;
        for r in 1..=resolution.max(1) {
            for p in chart.sample_grid(r) {
                let s = self.speed_at(&p);
                sup = sup.max(s);
                inf = inf.min(s);
                lip = lip.max(self.local_lipschitz(&p)?);
            }
        }
        if !self.is_nonsingular() {
            inf = 0.0;
        }
        Ok(FlowSummary {
            sup_speed: sup,
            inf_speed: inf,
            lipschitz: lip,
            singular_set: self.singular_set(),
            nonsingular: self.is_nonsingular(),
            resolution,
        })
    }
}

/// `sup_v |DY·v| / |DF·v|` where `F` is the mapping-torus embedding and
/// `Y = ∂F/∂s` the ambient velocity; both Jacobians by central differences.
fn mapping_torus_lipschitz(matrix: &CatMatrix, p: &ManifoldPoint, chart: &ChartSpec) -> f64 {
    const H: f64 = 1e-5;
    let n = MAPPING_TORUS_AMBIENT;
    let mut df = [[0.0; 3]; MAPPING_TORUS_AMBIENT];
    let mut dy = [[0.0; 3]; MAPPING_TORUS_AMBIENT];
    for (j, axis) in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]].iter().enumerate() {
        let plus = chart.displace(p, axis.map(|a| a * H));
        let minus = chart.displace(p, axis.map(|a| -a * H));
        let (fp, fm) = (chart.embedded(&plus), chart.embedded(&minus));
        let (yp, ym) = (mapping_torus_ds(matrix, plus.coords), mapping_torus_ds(matrix, minus.coords));
        for i in 0..n {
            df[i][j] = (fp[i] - fm[i]) / (2.0 * H);
            dy[i][j] = (yp[i] - ym[i]) / (2.0 * H);
        }
    }
    let gram = |m: &[[f64; 3]; MAPPING_TORUS_AMBIENT]| {
        let mut g = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                g[a][b] = (0..n).map(|i| m[i][a] * m[i][b]).sum();
            }
        }
        g
    };
    generalized_max_eigen(gram(&df), gram(&dy)).max(0.0).sqrt()
}

/// Largest `λ` with `H v = λ G v` for symmetric positive definite `G`.
fn generalized_max_eigen(g: [[f64; 3]; 3], h: [[f64; 3]; 3]) -> f64 {
    // Cholesky G = L Lᵀ.
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][j] = (g[i][i] - s).max(1e-300).sqrt();
            } else {
                l[i][j] = (g[i][j] - s) / l[j][j];
            }
        }
    }
    // W = L⁻¹ H, then C = W L⁻ᵀ = L⁻¹ (L⁻¹ H)ᵀ since H is symmetric.
    let solve = |b: [f64; 3]| {
        let mut x = [0.0; 3];
        for i in 0..3 {
            let s: f64 = (0..i).map(|k| l[i][k] * x[k]).sum();
            x[i] = (b[i] - s) / l[i][i];
        }
        x
    };
    let cols: Vec<[f64; 3]> = (0..3).map(|j| solve([h[0][j], h[1][j], h[2][j]])).collect();
    let w = [
        [cols[0][0], cols[1][0], cols[2][0]],
        [cols[0][1], cols[1][1], cols[2][1]],
        [cols[0][2], cols[1][2], cols[2][2]],
    ];
    let cc: Vec<[f64; 3]> = (0..3).map(|j| solve(w[j])).collect();
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = 0.5 * (cc[j][i] + cc[i][j]);
        }
    }
    jacobi_max_eigen(c)
}

/// Largest eigenvalue of a symmetric 3×3 matrix by cyclic Jacobi rotations.
fn jacobi_max_eigen(mut a: [[f64; 3]; 3]) -> f64 {
    for _ in 0..50 {
        let off = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
        if off < 1e-30 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q].abs() < 1e-300 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let (akp, akq) = (a[k][p], a[k][q]);
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let (apk, aqk) = (a[p][k], a[q][k]);
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
        }
    }
    a[0][0].max(a[1][1]).max(a[2][2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::norm3;

    fn torus_point(x: f64, y: f64) -> ManifoldPoint {
        ChartSpec::standard_torus().point(&[x, y]).unwrap()
    }

    #[test]
    fn item4_speeds_at_documented_points() {
        let f = FlowSpec::TorusItem4;
        assert_eq!(f.speed(&torus_point(-2.0, 1.3)).unwrap(), 1.0);
        assert_eq!(f.speed(&torus_point(0.0, 2.0)).unwrap(), 0.0);
    }

    #[test]
    fn unperturbed_sphere_poles_are_singular() {
        let f = FlowSpec::SphereEnoUnperturbed;
        let s = ChartSpec::sphere();
        for z in [1.0, -1.0] {
            assert_eq!(f.speed(&s.point(&[0.0, 0.0, z]).unwrap()).unwrap(), 0.0);
        }
    }

    #[test]
    fn constant_flow_translates() {
        let f = FlowSpec::ConstantTorus {
            velocity: [1.0, 0.0],
        };
        let end = f.flow_point(&torus_point(0.0, 0.0), 1.0, DEFAULT_STEP).unwrap();
        assert!((end.coords[0] - 1.0).abs() < 1e-12);
        assert!(end.coords[1].abs() < 1e-12);
    }

    #[test]
    fn item4_linear_zone_is_exponential() {
        let f = FlowSpec::TorusItem4;
        let end = f.flow_point(&torus_point(-0.25, 0.0), 1.0, DEFAULT_STEP).unwrap();
        let oracle = -0.25 * (-1f64).exp();
        assert!((end.coords[0] - oracle).abs() < 1e-12, "{} vs {oracle}", end.coords[0]);
        assert!((oracle + 0.0920).abs() < 1e-4);
    }

    #[test]
    fn item4_speed_ratio_tends_to_inverse_e() {
        let f = FlowSpec::TorusItem4;
        let speeds: Vec<f64> = (0..=8)
            .map(|n| {
                let p = f.flow_point(&torus_point(-2.0, 1.0), n as f64, DEFAULT_STEP).unwrap();
                f.speed(&p).unwrap()
            })
            .collect();
        // Not e^{-n} literally: the orbit is still in the unit-speed zone at n = 1.
        assert!((speeds[1] - 1.0).abs() < 1e-12);
        for n in 3..8 {
            let ratio = speeds[n + 1] / speeds[n];
            assert!((ratio - (-1f64).exp()).abs() < 1e-6, "n = {n}: {ratio}");
        }
    }

    #[test]
    fn suspension_time_one_is_the_matrix() {
        let f = FlowSpec::cat_default();
        let chart = f.chart();
        let p = chart.point(&[0.2, 0.35, 0.0]).unwrap();
        let end = f.flow_point(&p, 1.0, DEFAULT_STEP).unwrap();
        let image = CatMatrix::ARNOLD.apply([0.2, 0.35]);
        assert!(chart.distance(&end, &chart.point(&[image[0], image[1], 0.0]).unwrap()).unwrap() < 1e-9);
    }

    #[test]
    fn frozen_singular_base() {
        let f = FlowSpec::TorusItem4;
        let p = torus_point(2.0 / 3.0, 1.0);
        let traj = f.integrate_sampled(&p, 3.0, 0.01, 0.1).unwrap();
        assert!(traj.points.iter().all(|q| q == &traj.points[0]));
        assert!(traj.speeds.iter().all(|&s| s < FREEZE_SPEED));
    }

    #[test]
    fn sampling_hits_the_horizon() {
        let f = FlowSpec::eno_default();
        let p = f.chart().point(&[0.6, 0.0, -0.1]).unwrap();
        let traj = f.integrate_sampled(&p, 2.05, 1e-3, 0.1).unwrap();
        assert_eq!(*traj.times.last().unwrap(), 2.05);
        assert_eq!(traj.times.len(), 22);
        assert!(traj.points.iter().all(|q| (norm3(q.coords) - 1.0).abs() < 1e-12));
    }

    #[test]
    fn summaries_of_simple_fields() {
        let c = FlowSpec::ConstantTorus {
            velocity: [1.0, 0.0],
        }
        .flow_summary(8)
        .unwrap();
        assert_eq!((c.sup_speed, c.inf_speed, c.lipschitz), (1.0, 1.0, 0.0));
        let t = FlowSpec::TorusItem4.flow_summary(16).unwrap();
        assert_eq!(t.inf_speed, 0.0);
        assert!(t.lipschitz >= 1.0);
        assert_eq!(t.sup_speed, 1.0);
    }

    #[test]
    fn eno_constants() {
        let f = FlowSpec::eno_default();
        let gamma = f.eno_gamma().unwrap();
        // ρ'(a) = ρ₀(a)(a - b)/(ab)
        let (a, b) = (-0.3f64, -0.7f64);
        let w = 1.0 - a * a;
        let oracle = w * (-1.0 / w).exp() * (a - b) / (a * b) * w;
        assert!((gamma - oracle).abs() < 1e-14);
        assert!(f.eno_kappa(ENO_DEFAULT_LEVEL).unwrap() > 0.0);
    }

    #[test]
    fn generalized_eigen_matches_diagonal_case() {
        let g = [[4.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]];
        let h = [[8.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 1.0]];
        assert!((generalized_max_eigen(g, h) - 3.0).abs() < 1e-12);
        let sym = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 1.0]];
        assert!((jacobi_max_eigen(sym) - 3.0).abs() < 1e-12);
    }
}
