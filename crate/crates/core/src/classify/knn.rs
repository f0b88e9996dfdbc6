use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gyroball;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Poincare,
    Euclidean,
}

impl MetricKind {
    /// Distance on raw coordinates; Poincaré inputs must be unit-ball points.
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Self::Poincare => gyroball::poincare_distance_raw(a, b),
            Self::Euclidean => gyroball::sq_dist(a, b).sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Poincare => "poincare",
            Self::Euclidean => "euclidean",
        }
    }

    fn check(self, p: &[f64]) -> Result<()> {
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("k-NN point"));
        }
        if self == Self::Poincare {
            let n = gyroball::norm(p);
            if n >= 1.0 {
                return Err(Error::OutsideBall { norm: n, radius: 1.0 });
            }
        }
        Ok(())
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "poincare" => Ok(Self::Poincare),
            "euclidean" => Ok(Self::Euclidean),
            other => Err(Error::Parse(format!("unknown metric `{other}`"))),
        }
    }
}

/// Lazy k-nearest-neighbour classifier: fitting only validates and stores.
#[derive(Debug, Clone)]
pub struct KnnModel {
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
    k: usize,
    metric: MetricKind,
    dim: usize,
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn knn_fit(
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
    k: usize,
    metric: MetricKind,
) -> Result<KnnModel> {
    if points.is_empty() {
        return Err(Error::Empty("k-NN training set"));
    }
    if points.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: points.len(),
            right: labels.len(),
        });
    }
    if k == 0 || k > points.len() {
        return Err(Error::param(
            "k",
            format!("must lie in 1..={}, got {k}", points.len()),
        ));
    }
    let dim = points[0].len();
    for p in &points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        metric.check(p)?;
    }
    Ok(KnnModel {
        points,
        labels,
        k,
        metric,
        dim,
    })
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Majority label among the `k` nearest training points.
///
/// Ties at the k-th distance go to the lower training index. Vote ties go to
/// the class with the smallest summed neighbour distance, then to the
/// smallest class id.
pub fn knn_predict(model: &KnnModel, query: &[f64]) -> Result<usize> {
    if query.len() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            found: query.len(),
        });
    }
    model.metric.check(query)?;
    let mut dist: Vec<(f64, usize)> = model
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| (model.metric.distance(p, query), i))
        .collect();
    let k = model.k;
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, by_distance_then_index);
        dist.truncate(k);
    }
    dist.sort_by(by_distance_then_index);

    let mut votes: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    for &(d, i) in &dist {
        let e = votes.entry(model.labels[i]).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += d;
    }
    // BTreeMap iterates in ascending class id, so a strict comparison keeps
    // the smallest id on a full tie.
    let mut best: Option<(usize, usize, f64)> = None;
    for (&class, &(count, sum)) in &votes {
        let better = match best {
            None => true,
            Some((_, bc, bs)) => count > bc || (count == bc && sum < bs),
        };
        if better {
            best = Some((class, count, sum));
        }
    }
    Ok(best.expect("k >= 1 guarantees a vote").0)
}

pub fn knn_predict_many<Q: AsRef<[f64]> + Sync>(model: &KnnModel, queries: &[Q]) -> Result<Vec<usize>> {
    queries
        .par_iter()
        .map(|q| knn_predict(model, q.as_ref()))
        .collect()
}
