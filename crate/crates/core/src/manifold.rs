//! Model closed manifolds: the flat two-torus, the round two-sphere and the
//! mapping torus of a hyperbolic toral automorphism.
//!
//! Every chart maps its points into a small Euclidean "ambient" vector so the
//! hot loops of the estimators can compare trajectory samples without
//! re-deriving coordinates:
//!
//! * flat torus: the reduced coordinates, compared by the minimum over lattice
//!   translates (coordinate-wise wrap);
//! * sphere: the unit vector in R³, compared by great-circle distance;
//! * mapping torus: a smooth embedding into R¹⁰, compared by chord length.
//!
//! The mapping-torus embedding is
//! `F(w, s) = (cos τs, sin τs, c·sin⁴(πs)·T(w), c·cos⁴(πs)·T(ŵ)) / τ` with
//! `T(u, v) = (cos τu, sin τu, cos τv, sin τv)`, `τ = 2π`, fiber scale
//! `c = FIBER_SCALE` and `ŵ = w` for `s < 1/2`, `ŵ = A·w` otherwise. It is
//! continuous across the gluing `(w, 1) ~ (A·w, 0)` and injective, so the chord length is a genuine metric
//! inducing the manifold topology. The fourth powers make `F` three times
//! continuously differentiable across both switching levels, so the
//! suspension field has a continuous ambient Jacobian.

use std::f64::consts::{PI, TAU};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side length of the square torus used by every built-in torus flow.
pub const TORUS_SIDE: f64 = 4.0;

/// Tolerance on `‖p‖ = 1` for sphere points.
pub const SPHERE_TOL: f64 = 1e-12;

/// Size of the mapping-torus fibers relative to the unit-period roof
/// circle. Over `s = 0` the metric is locally `FIBER_SCALE` times the flat
/// metric of R²/Z².
pub const FIBER_SCALE: f64 = 2.0;

/// Ambient dimension of the mapping-torus embedding.
pub(crate) const MAPPING_TORUS_AMBIENT: usize = 10;

/// Integer 2×2 matrix with determinant ±1, acting on R²/Z².
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CatMatrix(pub [[i64; 2]; 2]);

impl CatMatrix {
    /// Arnold's cat map `[[2, 1], [1, 1]]`.
    pub const ARNOLD: CatMatrix = CatMatrix([[2, 1], [1, 1]]);

    pub fn new(entries: [[i64; 2]; 2]) -> Result<Self> {
        let m = CatMatrix(entries);
        if m.det().abs() != 1 {
            return Err(Error::InvalidChart(format!(
                "mapping-torus matrix {entries:?} has determinant {}, expected ±1",
                m.det()
            )));
        }
        Ok(m)
    }

    pub fn det(&self) -> i64 {
        let [[a, b], [c, d]] = self.0;
        a * d - b * c
    }

    pub fn trace(&self) -> i64 {
        self.0[0][0] + self.0[1][1]
    }

    /// No eigenvalue on the unit circle.
    pub fn is_hyperbolic(&self) -> bool {
        let (t, d) = (self.trace(), self.det());
        if d == 1 {
            t.abs() > 2
        } else {
            t != 0
        }
    }

    /// Modulus of the expanding eigenvalue.
    pub fn spectral_radius(&self) -> f64 {
        let t = self.trace() as f64;
        let d = self.det() as f64;
        let disc = (t * t - 4.0 * d).max(0.0).sqrt();
        ((t.abs() + disc) / 2.0).max(1.0)
    }

    pub fn inverse(&self) -> CatMatrix {
        let [[a, b], [c, d]] = self.0;
        let det = self.det();
        CatMatrix([[det * d, -det * b], [-det * c, det * a]])
    }

    /// Euclidean operator norm.
    pub fn operator_norm(&self) -> f64 {
        let [[a, b], [c, d]] = self.0.map(|r| r.map(|x| x as f64));
        let s = a * a + b * b + c * c + d * d;
        let det = a * d - b * c;
        ((s + (s * s - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt()
    }

    /// `A·w mod 1`.
    pub fn apply(&self, w: [f64; 2]) -> [f64; 2] {
        let [[a, b], [c, d]] = self.0;
        [
            wrap01(a as f64 * w[0] + b as f64 * w[1]),
            wrap01(c as f64 * w[0] + d as f64 * w[1]),
        ]
    }
}

/// Reduce to `[0, 1)`.
pub(crate) fn wrap01(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Reduce to `[lo, lo + len)`.
fn wrap_interval(x: f64, lo: f64, len: f64) -> f64 {
    let r = (x - lo).rem_euclid(len);
    if r >= len {
        lo
    } else {
        lo + r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChartKind {
    FlatTorus2,
    Sphere2,
    MappingTorus,
}

/// A point on one of the model manifolds, already reduced to the chart's
/// fundamental domain. Torus points leave the third coordinate at zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldPoint {
    pub kind: ChartKind,
    pub coords: [f64; 3],
}

impl ManifoldPoint {
    pub fn xy(&self) -> [f64; 2] {
        [self.coords[0], self.coords[1]]
    }
}

impl fmt::Display for ManifoldPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.coords;
        match self.kind {
            ChartKind::FlatTorus2 => write!(f, "({a:.6}, {b:.6})"),
            _ => write!(f, "({a:.6}, {b:.6}, {c:.6})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ChartSpec {
    /// `[-sx/2, sx/2) × [0, sy)` with opposite sides identified.
    FlatTorus2 { sides: [f64; 2] },
    /// Unit sphere in R³.
    Sphere2,
    /// `(T² × [0, 1]) / ((w, 1) ~ (A·w, 0))`, roof height one.
    MappingTorus { matrix: CatMatrix },
}

impl ChartSpec {
    pub fn flat_torus(sides: [f64; 2]) -> Result<Self> {
        if !sides.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::InvalidChart(format!(
                "torus side lengths must be positive, got {sides:?}"
            )));
        }
        Ok(ChartSpec::FlatTorus2 { sides })
    }

    /// The side-4 square torus.
    pub fn standard_torus() -> Self {
        ChartSpec::FlatTorus2 {
            sides: [TORUS_SIDE, TORUS_SIDE],
        }
    }

    pub fn sphere() -> Self {
        ChartSpec::Sphere2
    }

    pub fn mapping_torus(matrix: CatMatrix) -> Result<Self> {
        Ok(ChartSpec::MappingTorus {
            matrix: CatMatrix::new(matrix.0)?,
        })
    }

    pub fn kind(&self) -> ChartKind {
        match self {
            ChartSpec::FlatTorus2 { .. } => ChartKind::FlatTorus2,
            ChartSpec::Sphere2 => ChartKind::Sphere2,
            ChartSpec::MappingTorus { .. } => ChartKind::MappingTorus,
        }
    }

    /// Manifold dimension.
    pub fn dimension(&self) -> usize {
        match self {
            ChartSpec::MappingTorus { .. } => 3,
            _ => 2,
        }
    }

    /// Length of the ambient representation written by [`ChartSpec::embed`].
    pub fn ambient_dim(&self) -> usize {
        match self {
            ChartSpec::FlatTorus2 { .. } => 2,
            ChartSpec::Sphere2 => 3,
            ChartSpec::MappingTorus { .. } => MAPPING_TORUS_AMBIENT,
        }
    }

    pub fn check(&self, p: &ManifoldPoint) -> Result<()> {
        if p.kind != self.kind() {
            return Err(Error::ChartMismatch {
                expected: self.kind(),
                found: p.kind,
            });
        }
        Ok(())
    }

    /// Build a point from raw coordinates, reducing it to the fundamental
    /// domain (or normalizing, on the sphere).
    pub fn point(&self, coords: &[f64]) -> Result<ManifoldPoint> {
        let need = match self {
            ChartSpec::FlatTorus2 { .. } => 2,
            _ => 3,
        };
        if coords.len() != need || !coords.iter().all(|c| c.is_finite()) {
            return Err(Error::Domain(format!(
                "expected {need} finite coordinates for {:?}, got {coords:?}",
                self.kind()
            )));
        }
        let mut c = [0.0; 3];
        c[..need].copy_from_slice(coords);
        if let ChartSpec::Sphere2 = self {
            let n = norm3(c);
            if n == 0.0 {
                return Err(Error::Domain("cannot project the origin onto the sphere".into()));
            }
        }
        Ok(self.reduce(ManifoldPoint {
            kind: self.kind(),
            coords: c,
        }))
    }

    /// Fundamental-domain reduction. Idempotent.
    pub fn reduce(&self, p: ManifoldPoint) -> ManifoldPoint {
        let mut c = p.coords;
        match self {
            ChartSpec::FlatTorus2 { sides } => {
                c[0] = wrap_interval(c[0], -sides[0] / 2.0, sides[0]);
                c[1] = wrap_interval(c[1], 0.0, sides[1]);
                c[2] = 0.0;
            }
            ChartSpec::Sphere2 => {
                let n = norm3(c);
                if (n - 1.0).abs() > 4.0 * f64::EPSILON {
                    c = c.map(|x| x / n);
                }
            }
            ChartSpec::MappingTorus { matrix } => {
                let k = c[2].floor();
                let mut s = c[2] - k;
                let mut w = [wrap01(c[0]), wrap01(c[1])];
                let mut k = k as i64;
                if s >= 1.0 {
                    s -= 1.0;
                    k += 1;
                }
                let inv = matrix.inverse();
                while k > 0 {
                    w = matrix.apply(w);
                    k -= 1;
                }
                while k < 0 {
                    w = inv.apply(w);
                    k += 1;
                }
                c = [w[0], w[1], s];
            }
        }
        ManifoldPoint {
            kind: p.kind,
            coords: c,
        }
    }

    /// Write the ambient representation of `p` into `out`
    /// (`out.len() == self.ambient_dim()`).
    pub fn embed(&self, p: &ManifoldPoint, out: &mut [f64]) {
        match self {
            ChartSpec::FlatTorus2 { .. } => out.copy_from_slice(&p.coords[..2]),
            ChartSpec::Sphere2 => out.copy_from_slice(&p.coords),
            ChartSpec::MappingTorus { matrix } => {
                let [u, v, s] = p.coords;
                out[0] = (TAU * s).cos() / TAU;
                out[1] = (TAU * s).sin() / TAU;
                let c1 = FIBER_SCALE * (PI * s).sin().powi(4);
                let c2 = FIBER_SCALE * (PI * s).cos().powi(4);
                let lower = torus_features([u, v]);
                let glued = if s < 0.5 {
                    lower
                } else {
                    torus_features(matrix.apply([u, v]))
                };
                for i in 0..4 {
                    out[2 + i] = c1 * lower[i] / TAU;
                    out[6 + i] = c2 * glued[i] / TAU;
                }
            }
        }
    }

    pub fn embedded(&self, p: &ManifoldPoint) -> Vec<f64> {
        let mut out = vec![0.0; self.ambient_dim()];
        self.embed(p, &mut out);
        out
    }

    /// Distance between two ambient representations.
    #[inline]
    pub fn ambient_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            ChartSpec::FlatTorus2 { sides } => {
                let mut dx = a[0] - b[0];
                let mut dy = a[1] - b[1];
                dx -= sides[0] * (dx / sides[0]).round();
                dy -= sides[1] * (dy / sides[1]).round();
                dx.hypot(dy)
            }
            ChartSpec::Sphere2 => {
                let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
                let cx = a[1] * b[2] - a[2] * b[1];
                let cy = a[2] * b[0] - a[0] * b[2];
                let cz = a[0] * b[1] - a[1] * b[0];
                (cx * cx + cy * cy + cz * cz).sqrt().atan2(dot)
            }
            ChartSpec::MappingTorus { .. } => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Riemannian (torus, sphere) or chordal (mapping torus) distance.
    pub fn distance(&self, p: &ManifoldPoint, q: &ManifoldPoint) -> Result<f64> {
        self.check(p)?;
        self.check(q)?;
        let dim = self.ambient_dim();
        let mut a = [0.0; MAPPING_TORUS_AMBIENT];
        let mut b = [0.0; MAPPING_TORUS_AMBIENT];
        self.embed(p, &mut a[..dim]);
        self.embed(q, &mut b[..dim]);
        Ok(self.ambient_distance(&a[..dim], &b[..dim]))
    }

    /// Move `p` by the coordinate offset `v`: a translation on the tori, the
    /// exponential map on the sphere (after projecting `v` to the tangent
    /// plane).
    pub fn displace(&self, p: &ManifoldPoint, v: [f64; 3]) -> ManifoldPoint {
        match self {
            ChartSpec::Sphere2 => {
                let x = p.coords;
                let dot = x[0] * v[0] + x[1] * v[1] + x[2] * v[2];
                let t = [v[0] - dot * x[0], v[1] - dot * x[1], v[2] - dot * x[2]];
                let len = norm3(t);
                if len == 0.0 {
                    return *p;
                }
                let (s, c) = len.sin_cos();
                self.reduce(ManifoldPoint {
                    kind: p.kind,
                    coords: [
                        c * x[0] + s * t[0] / len,
                        c * x[1] + s * t[1] / len,
                        c * x[2] + s * t[2] / len,
                    ],
                })
            }
            _ => self.reduce(ManifoldPoint {
                kind: p.kind,
                coords: [p.coords[0] + v[0], p.coords[1] + v[1], p.coords[2] + v[2]],
            }),
        }
    }

    /// Orthonormal coordinate directions spanning the tangent space at `p`.
    pub fn tangent_basis(&self, p: &ManifoldPoint) -> Vec<[f64; 3]> {
        match self {
            ChartSpec::FlatTorus2 { .. } => vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            ChartSpec::MappingTorus { .. } => {
                vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
            }
            ChartSpec::Sphere2 => {
                let x = p.coords;
                let seed = if x[2].abs() < 0.9 {
                    [0.0, 0.0, 1.0]
                } else {
                    [1.0, 0.0, 0.0]
                };
                let e1 = normalize3(cross3(seed, x));
                let e2 = cross3(x, e1);
                vec![e1, e2]
            }
        }
    }

    /// Deterministic lattice (tori) or Fibonacci point set (sphere).
    ///
    /// Counts: `resolution²` on the torus and the sphere, `resolution³` on the
    /// mapping torus.
    pub fn sample_grid(&self, resolution: usize) -> Vec<ManifoldPoint> {
        let r = resolution.max(1);
        match self {
            ChartSpec::Sphere2 => self.sample_fibonacci(r * r),
            ChartSpec::FlatTorus2 { .. } => self.lattice(&[r, r]),
            ChartSpec::MappingTorus { .. } => self.lattice(&[r, r, r]),
        }
    }

    /// Product lattice with one resolution per coordinate axis.
    pub fn sample_product_grid(&self, axes: &[usize]) -> Result<Vec<ManifoldPoint>> {
        match self {
            ChartSpec::Sphere2 => Err(Error::Unsupported(
                "the sphere has no product lattice; use sample_fibonacci".into(),
            )),
            _ if axes.len() != self.dimension() || axes.contains(&0) => {
                Err(Error::InvalidArgument(format!(
                    "need {} positive axis resolutions, got {axes:?}",
                    self.dimension()
                )))
            }
            _ => Ok(self.lattice(axes)),
        }
    }

    fn lattice(&self, axes: &[usize]) -> Vec<ManifoldPoint> {
        match self {
            ChartSpec::FlatTorus2 { sides } => {
                let (rx, ry) = (axes[0], axes[1]);
                let mut out = Vec::with_capacity(rx * ry);
                for i in 0..rx {
                    let x = -sides[0] / 2.0 + i as f64 * sides[0] / rx as f64;
                    for j in 0..ry {
                        let y = j as f64 * sides[1] / ry as f64;
                        out.push(ManifoldPoint {
                            kind: ChartKind::FlatTorus2,
                            coords: [x, y, 0.0],
                        });
                    }
                }
                out
            }
            ChartSpec::MappingTorus { .. } => {
                let (ru, rv, rs) = (axes[0], axes[1], axes[2]);
                let mut out = Vec::with_capacity(ru * rv * rs);
                for i in 0..ru {
                    for j in 0..rv {
                        for k in 0..rs {
                            out.push(ManifoldPoint {
                                kind: ChartKind::MappingTorus,
                                coords: [
                                    i as f64 / ru as f64,
                                    j as f64 / rv as f64,
                                    k as f64 / rs as f64,
                                ],
                            });
                        }
                    }
                }
                out
            }
            ChartSpec::Sphere2 => unreachable!("sphere lattices go through sample_fibonacci"),
        }
    }

    /// Fibonacci spiral with `count` points on the sphere. Panics on other
    /// charts.
    pub fn sample_fibonacci(&self, count: usize) -> Vec<ManifoldPoint> {
        assert_eq!(self.kind(), ChartKind::Sphere2);
        let n = count.max(1);
        let golden = PI * (3.0 - 5f64.sqrt());
        (0..n)
            .map(|k| {
                let z = 1.0 - (2 * k + 1) as f64 / n as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let phi = golden * k as f64;
                self.reduce(ManifoldPoint {
                    kind: ChartKind::Sphere2,
                    coords: [r * phi.cos(), r * phi.sin(), z],
                })
            })
            .collect()
    }

    /// A point drawn from the normalized volume measure.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> ManifoldPoint {
        match self {
            ChartSpec::FlatTorus2 { sides } => ManifoldPoint {
                kind: ChartKind::FlatTorus2,
                coords: [
                    rng.gen_range(-sides[0] / 2.0..sides[0] / 2.0),
                    rng.gen_range(0.0..sides[1]),
                    0.0,
                ],
            },
            ChartSpec::Sphere2 => {
                let z: f64 = rng.gen_range(-1.0..1.0);
                let phi: f64 = rng.gen_range(0.0..TAU);
                let r = (1.0 - z * z).sqrt();
                self.reduce(ManifoldPoint {
                    kind: ChartKind::Sphere2,
                    coords: [r * phi.cos(), r * phi.sin(), z],
                })
            }
            ChartSpec::MappingTorus { .. } => ManifoldPoint {
                kind: ChartKind::MappingTorus,
                coords: [
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.0..1.0),
                ],
            },
        }
    }

    /// True when `p` sits inside the fundamental domain with the chart's
    /// normalization.
    pub fn is_reduced(&self, p: &ManifoldPoint) -> bool {
        match self {
            ChartSpec::FlatTorus2 { sides } => {
                (-sides[0] / 2.0..sides[0] / 2.0).contains(&p.coords[0])
                    && (0.0..sides[1]).contains(&p.coords[1])
            }
            ChartSpec::Sphere2 => (norm3(p.coords) - 1.0).abs() <= SPHERE_TOL,
            ChartSpec::MappingTorus { .. } => p.coords.iter().all(|c| (0.0..1.0).contains(c)),
        }
    }
}

/// `∂F/∂s` at a reduced mapping-torus point: the ambient velocity of the
/// suspension field.
pub(crate) fn mapping_torus_ds(matrix: &CatMatrix, coords: [f64; 3]) -> [f64; MAPPING_TORUS_AMBIENT] {
    let [u, v, s] = coords;
    let (sp, cp) = (PI * s).sin_cos();
    let dc1 = FIBER_SCALE * 4.0 * PI * sp.powi(3) * cp;
    let dc2 = -FIBER_SCALE * 4.0 * PI * cp.powi(3) * sp;
    let lower = torus_features([u, v]);
    let glued = if s < 0.5 {
        lower
    } else {
        torus_features(matrix.apply([u, v]))
    };
    let mut out = [0.0; MAPPING_TORUS_AMBIENT];
    out[0] = -(TAU * s).sin();
    out[1] = (TAU * s).cos();
    for i in 0..4 {
        out[2 + i] = dc1 * lower[i] / TAU;
        out[6 + i] = dc2 * glued[i] / TAU;
    }
    out
}

fn torus_features(w: [f64; 2]) -> [f64; 4] {
    let (su, cu) = (TAU * w[0]).sin_cos();
    let (sv, cv) = (TAU * w[1]).sin_cos();
    [cu, su, cv, sv]
}

pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = norm3(v);
    v.map(|x| x / n)
}

pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
