//! Document centroids: folding an ordered sequence of ball points into one.
//!
//! | name    | scheme |
//! |---------|--------|
//! | `emean` | weighted Euclidean mean `Σ mᵢ xᵢ / Σ mᵢ` |
//! | `naive` | `(x₁ ⊕ x₂ ⊕ … ⊕ xₙ) ⊗ (1/n)`, left fold, boundary overflow rescaled by `1 − ε` |
//! | `lcf`   | linear forward centroid: `LFC[(x₁,m₁)…(xₙ,mₙ)] = M(LFC[…xₙ₋₁], xₙ | m₁+…+mₙ₋₁, mₙ)` |
//! | `lcb`   | `LFC` of the reversed sequence |
//! | `lca`   | midpoint of `LFC` and `LBC` |
//! | `fnw`   | binary tree centroid, split at `⌊n/2⌋`, halves joined with their total weights |
//! | `bnw`   | binary tree centroid of the reversed sequence |
//!
//! `M(a, b | m_a, m_b)` is the weighted midpoint, the geodesic point at
//! `t = m_b / (m_a + m_b)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gyroball::{self, BallParams, BallPoint, WeightedPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompositionMethod {
    Emean,
    Naive,
    Lcf,
    Lcb,
    Lca,
    Fnw,
    Bnw,
}

impl CompositionMethod {
    pub const ALL: [CompositionMethod; 7] = [
        Self::Emean,
        Self::Naive,
        Self::Lcf,
        Self::Lcb,
        Self::Lca,
        Self::Fnw,
        Self::Bnw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Emean => "emean",
            Self::Naive => "naive",
            Self::Lcf => "lcf",
            Self::Lcb => "lcb",
            Self::Lca => "lca",
            Self::Fnw => "fnw",
            Self::Bnw => "bnw",
        }
    }

    /// Whether the method uses gyrovector operations, and so only makes
    /// sense on Poincaré-ball embeddings.
    pub fn is_hyperbolic(self) -> bool {
        self != Self::Emean
    }
}

impl fmt::Display for CompositionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CompositionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Parse(format!("unknown composition method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositionConfig {
    overflow_eps: f64,
    pub ball: BallParams,
}

impl Default for CompositionConfig {
    fn default() -> Self {
        Self {
            overflow_eps: 1e-5,
            ball: BallParams::default(),
        }
    }
}

impl CompositionConfig {
    pub fn new(overflow_eps: f64, ball: BallParams) -> Result<Self> {
        if !(overflow_eps > 0.0 && overflow_eps <= 1e-3) {
            return Err(Error::param(
                "overflow_eps",
                format!("must lie in (0, 1e-3], got {overflow_eps}"),
            ));
        }
        Ok(Self { overflow_eps, ball })
    }

    pub fn overflow_eps(&self) -> f64 {
        self.overflow_eps
    }
}

/// Non-empty, dimension-uniform sequence of weighted points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSequence {
    items: Vec<WeightedPoint>,
}

impl PointSequence {
    pub fn new(items: Vec<WeightedPoint>) -> Result<Self> {
        let first = items.first().ok_or(Error::Empty("point sequence"))?;
        let dim = first.point.dim();
        if let Some(bad) = items.iter().find(|w| w.point.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.point.dim(),
            });
        }
        Ok(Self { items })
    }

    /// Every point with weight 1.
    pub fn uniform(points: Vec<BallPoint>) -> Result<Self> {
        Self::new(points.into_iter().map(WeightedPoint::unit_weight).collect())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.items[0].point.dim()
    }

    pub fn items(&self) -> &[WeightedPoint] {
        &self.items
    }

    pub fn reversed(&self) -> Self {
        Self {
            items: self.items.iter().rev().cloned().collect(),
        }
    }
}

// Borrowed view used by the recursive schemes.
type Item<'a> = (&'a [f64], f64);

fn view(seq: &PointSequence) -> Vec<Item<'_>> {
    seq.items
        .iter()
        .map(|w| (w.point.coords(), w.weight()))
        .collect()
}

fn lfc_raw(items: &[Item<'_>], ball: &BallParams) -> Vec<f64> {
    let (first, mut mass) = items[0];
    let mut acc = first.to_vec();
    for &(x, m) in &items[1..] {
        acc = gyroball::weighted_midpoint_raw(&acc, x, mass, m, ball);
        mass += m;
    }
    acc
}

fn btc_raw(items: &[Item<'_>], ball: &BallParams) -> (Vec<f64>, f64) {
    match items {
        [(x, m)] => (x.to_vec(), *m),
        [(a, ma), (b, mb)] => (
            gyroball::weighted_midpoint_raw(a, b, *ma, *mb, ball),
            ma + mb,
        ),
        _ => {
            let (left, right) = items.split_at(items.len() / 2);
            let (l, ml) = btc_raw(left, ball);
            let (r, mr) = btc_raw(right, ball);
            (gyroball::weighted_midpoint_raw(&l, &r, ml, mr, ball), ml + mr)
        }
    }
}

/// Weighted arithmetic mean of the coordinates.
///
/// Terms are summed in a canonical (lexicographic) order so the result is
/// bit-for-bit invariant under permutations of the sequence.
pub fn compose_emean(seq: &PointSequence) -> BallPoint {
    if seq.len() == 1 {
        return seq.items[0].point.clone();
    }
    let mut order: Vec<&WeightedPoint> = seq.items.iter().collect();
    order.sort_by(|a, b| {
        a.point
            .coords()
            .iter()
            .zip(b.point.coords())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or_else(|| a.weight().total_cmp(&b.weight()))
    });
    let mut acc = vec![0.0; seq.dim()];
    let mut mass = 0.0;
    for w in order {
        for (a, x) in acc.iter_mut().zip(w.point.coords()) {
            *a += w.weight() * x;
        }
        mass += w.weight();
    }
    acc.iter_mut().for_each(|a| *a /= mass);
    BallPoint::from_raw(acc)
}

/// Result of the naive centroid together with how often the running Möbius
/// sum had to be pulled back from the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveOutcome {
    pub point: BallPoint,
    pub overflow_rescales: usize,
}

/// Möbius sum of the sequence scaled by `1/n`. Weights are ignored.
pub fn compose_naive(seq: &PointSequence, cfg: &CompositionConfig) -> BallPoint {
    compose_naive_with_report(seq, cfg).point
}

pub fn compose_naive_with_report(seq: &PointSequence, cfg: &CompositionConfig) -> NaiveOutcome {
    let ball = &cfg.ball;
    let threshold = ball.max_norm();
    let mut rescales = 0;
    let mut sum = seq.items[0].point.coords().to_vec();
    let mut guard = |v: &mut Vec<f64>| {
        if gyroball::norm(v) >= threshold {
            v.iter_mut().for_each(|c| *c *= 1.0 - cfg.overflow_eps);
            rescales += 1;
        }
    };
    guard(&mut sum);
    for w in &seq.items[1..] {
        sum = gyroball::mobius_add_raw(&sum, w.point.coords(), ball);
        guard(&mut sum);
    }
    let point = gyroball::mobius_scale_raw(1.0 / seq.len() as f64, &sum, ball);
    NaiveOutcome {
        point: BallPoint::from_raw(point),
        overflow_rescales: rescales,
    }
}

/// Linear forward centroid.
pub fn compose_lfc(seq: &PointSequence, cfg: &CompositionConfig) -> BallPoint {
    BallPoint::from_raw(lfc_raw(&view(seq), &cfg.ball))
}

/// Linear backward centroid: the forward centroid of the reversed sequence.
pub fn compose_lbc(seq: &PointSequence, cfg: &CompositionConfig) -> BallPoint {
    let mut items = view(seq);
    items.reverse();
    BallPoint::from_raw(lfc_raw(&items, &cfg.ball))
}

/// Linear average centroid: unweighted midpoint of the forward and backward
/// centroids.
pub fn compose_lac(seq: &PointSequence, cfg: &CompositionConfig) -> BallPoint {
    let f = compose_lfc(seq, cfg);
    let b = compose_lbc(seq, cfg);
    BallPoint::from_raw(gyroball::geodesic_raw(
        f.coords(),
        b.coords(),
        0.5,
        &cfg.ball,
    ))
}

/// Binary tree centroid (`fnw`). Recursion depth is `⌈log₂ n⌉`.
pub fn compose_btc(seq: &PointSequence, cfg: &CompositionConfig) -> BallPoint {
    BallPoint::from_raw(btc_raw(&view(seq), &cfg.ball).0)
}

/// Binary tree centroid of the reversed sequence (`bnw`).
pub fn compose_bnw(seq: &PointSequence, cfg: &CompositionConfig) -> BallPoint {
    let mut items = view(seq);
    items.reverse();
    BallPoint::from_raw(btc_raw(&items, &cfg.ball).0)
}

pub fn compose(method: CompositionMethod, seq: &PointSequence, cfg: &CompositionConfig) -> BallPoint {
    match method {
        CompositionMethod::Emean => compose_emean(seq),
        CompositionMethod::Naive => compose_naive(seq, cfg),
        CompositionMethod::Lcf => compose_lfc(seq, cfg),
        CompositionMethod::Lcb => compose_lbc(seq, cfg),
        CompositionMethod::Lca => compose_lac(seq, cfg),
        CompositionMethod::Fnw => compose_btc(seq, cfg),
        CompositionMethod::Bnw => compose_bnw(seq, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gyroball::{midpoint, weighted_midpoint};
    use approx::assert_abs_diff_eq;

    fn p(c: &[f64]) -> BallPoint {
        BallPoint::unit(c.to_vec()).unwrap()
    }

    fn seq(points: &[&[f64]]) -> PointSequence {
        PointSequence::uniform(points.iter().map(|c| p(c)).collect()).unwrap()
    }

    fn close(a: &BallPoint, b: &BallPoint, tol: f64) {
        for (x, y) in a.coords().iter().zip(b.coords()) {
            assert_abs_diff_eq!(*x, *y, epsilon = tol);
        }
    }

    fn cfg() -> CompositionConfig {
        CompositionConfig::default()
    }

    #[test]
    fn method_names_round_trip() {
        for m in CompositionMethod::ALL {
            assert_eq!(m.name().parse::<CompositionMethod>().unwrap(), m);
        }
        assert!("frechet".parse::<CompositionMethod>().is_err());
    }

    #[test]
    fn sequence_validation() {
        assert!(PointSequence::new(vec![]).is_err());
        assert!(PointSequence::uniform(vec![p(&[0.1]), p(&[0.1, 0.2])]).is_err());
        assert!(WeightedPoint::new(p(&[0.1]), 0.0).is_err());
        assert!(CompositionConfig::new(0.0, BallParams::default()).is_err());
    }

    #[test]
    fn emean_examples() {
        let x = p(&[0.3, -0.2]);
        assert_eq!(compose_emean(&PointSequence::uniform(vec![x.clone()]).unwrap()), x);
        assert!(compose_emean(&seq(&[&[0.4, 0.0], &[-0.4, 0.0]])).is_origin());
        let m = compose_emean(&seq(&[&[0.2, 0.0], &[0.4, 0.0], &[0.6, 0.0]]));
        close(&m, &p(&[0.4, 0.0]), 1e-15);
    }

    #[test]
    fn emean_respects_weights() {
        let s = PointSequence::new(vec![
            WeightedPoint::new(p(&[0.1]), 1.0).unwrap(),
            WeightedPoint::new(p(&[0.5]), 3.0).unwrap(),
        ])
        .unwrap();
        assert_abs_diff_eq!(compose_emean(&s).coords()[0], 0.4, epsilon = 1e-15);
    }

    #[test]
    fn naive_examples() {
        let c = cfg();
        let x = p(&[0.3, 0.1]);
        close(&compose_naive(&PointSequence::uniform(vec![x.clone()]).unwrap(), &c), &x, 1e-15);
        let z = compose_naive(&seq(&[&[0.3, 0.1], &[-0.3, -0.1]]), &c);
        close(&z, &BallPoint::origin(2), 1e-16);
        // 0.5 ⊕ 0.5 = 0.8 and tanh(artanh(0.8) / 2) = 0.5.
        let h = compose_naive(&seq(&[&[0.5, 0.0], &[0.5, 0.0]]), &c);
        close(&h, &p(&[0.5, 0.0]), 1e-15);
    }

    #[test]
    fn naive_overflow_rescale_triggers() {
        let c = cfg();
        let pts: Vec<BallPoint> = (0..50).map(|_| p(&[0.999, 0.0])).collect();
        let out = compose_naive_with_report(&PointSequence::uniform(pts).unwrap(), &c);
        assert!(out.overflow_rescales > 0);
        assert!(out.point.norm() < 1.0);
    }

    #[test]
    fn lfc_examples() {
        let c = cfg();
        let (a, b, cc) = (p(&[0.1, 0.5]), p(&[-0.4, 0.2]), p(&[0.3, -0.3]));
        let bp = BallParams::default();
        close(
            &compose_lfc(&PointSequence::uniform(vec![a.clone(), b.clone()]).unwrap(), &c),
            &midpoint(&a, &b, &bp).unwrap(),
            1e-15,
        );
        let three = PointSequence::uniform(vec![a.clone(), b.clone(), cc.clone()]).unwrap();
        let expected =
            weighted_midpoint(&midpoint(&a, &b, &bp).unwrap(), &cc, 2.0, 1.0, &bp).unwrap();
        close(&compose_lfc(&three, &c), &expected, 1e-15);
    }

    #[test]
    fn lbc_examples() {
        let c = cfg();
        let bp = BallParams::default();
        let (a, b) = (p(&[0.1, 0.5]), p(&[-0.4, 0.2]));
        let two = PointSequence::uniform(vec![a.clone(), b.clone()]).unwrap();
        close(&compose_lbc(&two, &c), &midpoint(&b, &a, &bp).unwrap(), 1e-15);
    }

    #[test]
    fn lac_examples() {
        let c = cfg();
        let bp = BallParams::default();
        let (a, b) = (p(&[0.1, 0.5]), p(&[-0.4, 0.2]));
        let two = PointSequence::uniform(vec![a.clone(), b.clone()]).unwrap();
        let mab = midpoint(&a, &b, &bp).unwrap();
        let mba = midpoint(&b, &a, &bp).unwrap();
        close(&mab, &mba, 1e-15);
        close(&compose_lac(&two, &c), &mab, 1e-15);
        let pal = PointSequence::uniform(vec![a.clone(), b.clone(), a.clone()]).unwrap();
        close(&compose_lac(&pal, &c), &compose_lfc(&pal, &c), 1e-15);
    }

    #[test]
    fn btc_examples() {
        let c = cfg();
        let bp = BallParams::default();
        let pts = [p(&[0.1, 0.5]), p(&[-0.4, 0.2]), p(&[0.3, -0.3]), p(&[0.0, 0.6])];
        let [a, b, cc, d] = pts.clone();
        let two = PointSequence::uniform(vec![a.clone(), b.clone()]).unwrap();
        close(&compose_btc(&two, &c), &midpoint(&a, &b, &bp).unwrap(), 1e-15);
        let four = PointSequence::uniform(pts.to_vec()).unwrap();
        let expected = midpoint(
            &midpoint(&a, &b, &bp).unwrap(),
            &midpoint(&cc, &d, &bp).unwrap(),
            &bp,
        )
        .unwrap();
        close(&compose_btc(&four, &c), &expected, 1e-15);
        let three = PointSequence::uniform(vec![a.clone(), b.clone(), cc.clone()]).unwrap();
        let expected = weighted_midpoint(&a, &midpoint(&b, &cc, &bp).unwrap(), 1.0, 2.0, &bp).unwrap();
        close(&compose_btc(&three, &c), &expected, 1e-15);
    }

    #[test]
    fn bnw_examples() {
        let c = cfg();
        let bp = BallParams::default();
        let (a, b, cc, d) = (p(&[0.1, 0.5]), p(&[-0.4, 0.2]), p(&[0.3, -0.3]), p(&[0.0, 0.6]));
        let three = PointSequence::uniform(vec![a.clone(), b.clone(), cc.clone()]).unwrap();
        let expected = weighted_midpoint(&cc, &midpoint(&b, &a, &bp).unwrap(), 1.0, 2.0, &bp).unwrap();
        close(&compose_bnw(&three, &c), &expected, 1e-15);
        let four = PointSequence::uniform(vec![a.clone(), b.clone(), cc.clone(), d.clone()]).unwrap();
        let rev = PointSequence::uniform(vec![d, cc, b, a]).unwrap();
        assert_eq!(compose_bnw(&four, &c), compose_btc(&rev, &c));
    }

    #[test]
    fn dispatcher() {
        let c = cfg();
        let bp = BallParams::default();
        let x = p(&[0.2, 0.2]);
        let single = PointSequence::uniform(vec![x.clone()]).unwrap();
        for m in CompositionMethod::ALL {
            assert_eq!(compose(m, &single, &c), x, "{m}");
        }
        let (a, b) = (p(&[0.1, 0.5]), p(&[-0.4, 0.2]));
        let two = PointSequence::uniform(vec![a.clone(), b.clone()]).unwrap();
        close(
            &compose(CompositionMethod::Lca, &two, &c),
            &midpoint(&a, &b, &bp).unwrap(),
            1e-15,
        );
        let s = seq(&[&[0.1, 0.2], &[0.3, -0.1], &[-0.2, 0.4], &[0.5, 0.5], &[0.0, -0.3]]);
        assert_eq!(compose(CompositionMethod::Fnw, &s, &c), compose_btc(&s, &c));
    }

    #[test]
    fn forward_and_backward_differ_generically() {
        let c = cfg();
        let s = seq(&[&[0.6, 0.1], &[-0.2, 0.7], &[0.1, -0.5], &[-0.6, -0.2], &[0.4, 0.4]]);
        let f = compose_lfc(&s, &c);
        let b = compose_lbc(&s, &c);
        assert!(gyroball::sq_dist(f.coords(), b.coords()).sqrt() > 1e-6);
    }
}
