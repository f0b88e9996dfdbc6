//! Poincaré-ball gyrovector algebra.
//!
//! Points live in the open ball of radius `s` (default 1). The two basic
//! operations are Möbius addition
//!
//! ```text
//! x ⊕ y = ((1 + 2/s² ⟨x,y⟩ + 1/s² ‖y‖²) x + (1 − 1/s² ‖x‖²) y)
//!         / (1 + 2/s² ⟨x,y⟩ + 1/s⁴ ‖x‖² ‖y‖²)
//! ```
//!
//! and Möbius scalar multiplication
//!
//! ```text
//! r ⊗ x = s · tanh(r · artanh(‖x‖ / s)) · x / ‖x‖        (0 at x = 0)
//! ```
//!
//! The geodesic from `a` to `b` is `γ(t) = a ⊕ ((−a ⊕ b) ⊗ t)` for `t ∈ [0, 1]`;
//! `t = 1/2` is the midpoint and `t = m_b / (m_a + m_b)` the weighted midpoint.
//! Distances use the unit-ball Poincaré metric
//!
//! ```text
//! d(u, v) = arccosh(1 + 2 ‖u − v‖² / ((1 − ‖u‖²)(1 − ‖v‖²)))
//! ```
//!
//! Every operation is a pure function; outputs whose norm rounds to `s` or
//! beyond are pulled back to `s · (1 − boundary_eps)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radius of the ball and the numerical margin kept from its boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallParams {
    radius: f64,
    boundary_eps: f64,
}

impl Default for BallParams {
    fn default() -> Self {
        Self {
            radius: 1.0,
            boundary_eps: 1e-7,
        }
    }
}

impl BallParams {
    pub fn new(radius: f64, boundary_eps: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::param("radius", format!("must be > 0, got {radius}")));
        }
        if !(boundary_eps > 0.0 && boundary_eps <= 1e-3) {
            return Err(Error::param(
                "boundary_eps",
                format!("must lie in (0, 1e-3], got {boundary_eps}"),
            ));
        }
        Ok(Self {
            radius,
            boundary_eps,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn boundary_eps(&self) -> f64 {
        self.boundary_eps
    }

    /// Largest norm an operation is allowed to emit.
    pub fn max_norm(&self) -> f64 {
        self.radius * (1.0 - self.boundary_eps)
    }
}

/// A point strictly inside the Poincaré ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallPoint {
    coords: Vec<f64>,
}

impl BallPoint {
    /// Validates `coords` against the ball described by `params`.
    ///
    /// Norms in `[s, s·(1 + boundary_eps)]` are treated as rounding noise and
    /// clamped to `s·(1 − boundary_eps)`; anything further out is rejected.
    pub fn new(coords: Vec<f64>, params: &BallParams) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("point coordinates"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        let norm = norm(&coords);
        if norm > params.radius * (1.0 + params.boundary_eps) {
            return Err(Error::OutsideBall {
                norm,
                radius: params.radius,
            });
        }
        Ok(Self {
            coords: clamp_raw(coords, params),
        })
    }

    /// Shorthand for a point in the default unit ball.
    pub fn unit(coords: Vec<f64>) -> Result<Self> {
        Self::new(coords, &BallParams::default())
    }

    pub fn origin(dim: usize) -> Self {
        Self {
            coords: vec![0.0; dim],
        }
    }

    /// Wraps coordinates already known to satisfy the ball invariant.
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    pub fn is_origin(&self) -> bool {
        self.coords.iter().all(|&c| c == 0.0)
    }
}

/// A ball point carrying a positive mass, used by the weighted centroids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPoint {
    pub point: BallPoint,
    weight: f64,
}

impl WeightedPoint {
    pub fn new(point: BallPoint, weight: f64) -> Result<Self> {
        check_weight("weight", weight)?;
        Ok(Self { point, weight })
    }

    pub fn unit_weight(point: BallPoint) -> Self {
        Self { point, weight: 1.0 }
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

fn check_weight(name: &'static str, w: f64) -> Result<()> {
    if w.is_finite() && w > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {w}")))
    }
}

fn check_same_dim(a: &BallPoint, b: &BallPoint) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Pulls a vector whose norm reached the radius back to `s·(1 − eps)`.
pub(crate) fn clamp_raw(mut v: Vec<f64>, params: &BallParams) -> Vec<f64> {
    let n = norm(&v);
    if n >= params.radius {
        let k = params.max_norm() / n;
        v.iter_mut().for_each(|c| *c *= k);
    }
    v
}

pub(crate) fn mobius_add_raw(x: &[f64], y: &[f64], params: &BallParams) -> Vec<f64> {
    let s2 = params.radius * params.radius;
    let xy = dot(x, y);
    let x2 = norm_sq(x);
    let y2 = norm_sq(y);
    let cx = 1.0 + 2.0 / s2 * xy + y2 / s2;
    let cy = 1.0 - x2 / s2;
    let den = 1.0 + 2.0 / s2 * xy + x2 * y2 / (s2 * s2);
    let out = x
        .iter()
        .zip(y)
        .map(|(a, b)| (cx * a + cy * b) / den)
        .collect();
    clamp_raw(out, params)
}

pub(crate) fn mobius_scale_raw(r: f64, x: &[f64], params: &BallParams) -> Vec<f64> {
    if r == 1.0 {
        return x.to_vec();
    }
    let n = norm(x);
    if n == 0.0 || r == 0.0 {
        return vec![0.0; x.len()];
    }
    let s = params.radius;
    let ratio = (n / s).min(1.0 - params.boundary_eps);
    let new_norm = s * (r * ratio.atanh()).tanh();
    let k = new_norm / n;
    clamp_raw(x.iter().map(|c| c * k).collect(), params)
}

pub(crate) fn geodesic_raw(a: &[f64], b: &[f64], t: f64, params: &BallParams) -> Vec<f64> {
    if t == 0.0 || a == b {
        return a.to_vec();
    }
    if t == 1.0 {
        return b.to_vec();
    }
    let neg_a: Vec<f64> = a.iter().map(|c| -c).collect();
    let dir = mobius_add_raw(&neg_a, b, params);
    let step = mobius_scale_raw(t, &dir, params);
    mobius_add_raw(a, &step, params)
}

pub(crate) fn weighted_midpoint_raw(
    a: &[f64],
    b: &[f64],
    m_a: f64,
    m_b: f64,
    params: &BallParams,
) -> Vec<f64> {
    geodesic_raw(a, b, m_b / (m_a + m_b), params)
}

/// Unit-ball Poincaré distance on raw coordinates. Caller guarantees both
/// norms are below 1.
pub(crate) fn poincare_distance_raw(u: &[f64], v: &[f64]) -> f64 {
    let diff = sq_dist(u, v);
    if diff == 0.0 {
        return 0.0;
    }
    let den = (1.0 - norm_sq(u)) * (1.0 - norm_sq(v));
    // arccosh(1 + x) written through ln_1p; keeps precision for tiny x and
    // is the max(1, ·) clamp of the arccosh argument for x ≥ 0.
    let x = (2.0 * diff / den).max(0.0);
    (x + (x * (x + 2.0)).sqrt()).ln_1p()
}

/// Möbius addition `a ⊕ b`.
pub fn mobius_add(a: &BallPoint, b: &BallPoint, params: &BallParams) -> Result<BallPoint> {
    check_same_dim(a, b)?;
    Ok(BallPoint::from_raw(mobius_add_raw(
        &a.coords, &b.coords, params,
    )))
}

/// Gyrogroup inverse `−a` (coordinate-wise negation).
pub fn mobius_neg(a: &BallPoint) -> BallPoint {
    BallPoint::from_raw(a.coords.iter().map(|c| -c).collect())
}

/// Möbius scalar multiplication `r ⊗ x`.
pub fn mobius_scale(r: f64, x: &BallPoint, params: &BallParams) -> Result<BallPoint> {
    if !r.is_finite() {
        return Err(Error::NonFinite("scalar"));
    }
    Ok(BallPoint::from_raw(mobius_scale_raw(r, &x.coords, params)))
}

/// Point at fraction `t` of the geodesic from `a` to `b`.
pub fn geodesic_point(
    a: &BallPoint,
    b: &BallPoint,
    t: f64,
    params: &BallParams,
) -> Result<BallPoint> {
    check_same_dim(a, b)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::param("t", format!("must lie in [0, 1], got {t}")));
    }
    Ok(BallPoint::from_raw(geodesic_raw(
        &a.coords, &b.coords, t, params,
    )))
}

pub fn midpoint(a: &BallPoint, b: &BallPoint, params: &BallParams) -> Result<BallPoint> {
    geodesic_point(a, b, 0.5, params)
}

/// Geodesic point at `t = m_b / (m_a + m_b)`: the heavier endpoint pulls the
/// result towards itself.
pub fn weighted_midpoint(
    a: &BallPoint,
    b: &BallPoint,
    m_a: f64,
    m_b: f64,
    params: &BallParams,
) -> Result<BallPoint> {
    check_weight("m_a", m_a)?;
    check_weight("m_b", m_b)?;
    geodesic_point(a, b, m_b / (m_a + m_b), params)
}

/// Poincaré distance between two points of the unit ball.
///
/// Points belonging to a ball of another radius must be rescaled by `1/s`
/// first; see [`poincare_distance_scaled`].
pub fn poincare_distance(u: &BallPoint, v: &BallPoint) -> Result<f64> {
    check_same_dim(u, v)?;
    for p in [u, v] {
        let n = p.norm();
        if n >= 1.0 {
            return Err(Error::OutsideBall {
                norm: n,
                radius: 1.0,
            });
        }
    }
    Ok(poincare_distance_raw(&u.coords, &v.coords))
}

/// Poincaré distance for points of a ball of radius `s`, computed after
/// mapping both into the unit ball.
pub fn poincare_distance_scaled(u: &BallPoint, v: &BallPoint, params: &BallParams) -> Result<f64> {
    if params.radius == 1.0 {
        return poincare_distance(u, v);
    }
    let inv = 1.0 / params.radius;
    let unit = BallParams::default();
    let u = BallPoint::new(u.coords.iter().map(|c| c * inv).collect(), &unit)?;
    let v = BallPoint::new(v.coords.iter().map(|c| c * inv).collect(), &unit)?;
    poincare_distance(&u, &v)
}

/// Projects an arbitrary finite vector into the ball: vectors with norm
/// `≥ s` are rescaled to norm `s·(1 − boundary_eps)`, others pass through.
pub fn clamp_to_ball(x: Vec<f64>, params: &BallParams) -> Result<BallPoint> {
    if x.is_empty() {
        return Err(Error::Empty("point coordinates"));
    }
    if x.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("vector"));
    }
    Ok(BallPoint::from_raw(clamp_raw(x, params)))
}
