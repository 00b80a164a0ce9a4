//! Scalar speed profiles used by the built-in flows.

/// `e^{-1/u}` for `u > 0`, zero otherwise.
fn bump(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp()
    }
}

fn bump_prime(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        bump(u) / (u * u)
    }
}

/// Smooth step `σ(u) = f(u) / (f(u) + f(1 - u))` and its derivative; `σ` is
/// flat to all orders at both ends.
pub fn smoothstep(u: f64) -> (f64, f64) {
    let u = u.clamp(0.0, 1.0);
    let (f, g) = (bump(u), bump(1.0 - u));
    let (df, dg) = (bump_prime(u), -bump_prime(1.0 - u));
    let sum = f + g;
    let sigma = f / sum;
    let dsigma = (df * g - f * dg) / (sum * sum);
    (sigma, dsigma)
}

/// Blend `left` into `right` across `[lo, lo + width]`. Each side is a pair
/// `(value, derivative)`; returns the same pair for the blend.
fn blend(x: f64, lo: f64, width: f64, left: (f64, f64), right: (f64, f64)) -> (f64, f64) {
    let (s, ds) = smoothstep((x - lo) / width);
    (
        s * right.0 + (1.0 - s) * left.0,
        ds / width * (right.0 - left.0) + s * right.1 + (1.0 - s) * left.1,
    )
}

/// Horizontal speed profile of the singular torus field, together with its
/// derivative. `x` is reduced to `[-2, 2)` first.
///
/// Fixed pieces: `1` on `[-2, -1] ∪ [1, 2]`, `-x` on `[-1/4, 1/4]` and
/// `x - 2/3` on `[7/12, 3/4]`; smooth-step blends fill the gaps.
pub fn item4_rho(x: f64) -> (f64, f64) {
    let x = if (-2.0..2.0).contains(&x) {
        x
    } else {
        (x + 2.0).rem_euclid(4.0) - 2.0
    };
    let one = (1.0, 0.0);
    let neg = (-x, -1.0);
    let shifted = (x - 2.0 / 3.0, 1.0);
    if x <= -1.0 || x >= 1.0 {
        one
    } else if x < -0.25 {
        blend(x, -1.0, 0.75, one, neg)
    } else if x <= 0.25 {
        neg
    } else if x < 7.0 / 12.0 {
        blend(x, 0.25, 1.0 / 3.0, neg, shifted)
    } else if x <= 0.75 {
        shifted
    } else {
        blend(x, 0.75, 0.25, shifted, one)
    }
}

/// `ρ₀(z) = (1 - z²) e^{-1/(1 - z²)}` on `(-1, 1)`, zero outside, with its
/// derivative.
pub fn rho0(z: f64) -> (f64, f64) {
    let w = 1.0 - z * z;
    if w <= 0.0 {
        return (0.0, 0.0);
    }
    let e = (-1.0 / w).exp();
    (w * e, -2.0 * z * e * (1.0 + 1.0 / w))
}

/// Perturbed sphere profile `ρ(z) = ρ₀(z)·(z - a)(z - b)/(ab)`: the zeros of
/// `ρ₀` plus simple zeros at `a` and `b`, positive on `(a, 1)`.
pub fn eno_rho(a: f64, b: f64, z: f64) -> (f64, f64) {
    let (r, dr) = rho0(z);
    let ab = a * b;
    let q = (z - a) * (z - b) / ab;
    let dq = (2.0 * z - a - b) / ab;
    (r * q, dr * q + r * dq)
}
