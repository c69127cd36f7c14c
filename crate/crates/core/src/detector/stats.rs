//! Z-Score family.
//!
//! All variants return a score per input plus a `degenerate` flag raised when
//! the spread statistic is zero (or there are too few samples to define it).
//! A degenerate input marks no outliers: standard-style scores come back as
//! zeros, modified scores as `0` on the median and `±inf` elsewhere.

use std::collections::BTreeMap;
use std::hash::Hash;

/// Consistency constant that puts the MAD on the standard-deviation scale for
/// normal data.
pub const MAD_SCALE: f64 = 0.6745;

#[derive(Clone, Debug, PartialEq)]
pub struct Scores {
    pub values: Vec<f64>,
    pub degenerate: bool,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation (divides by `n`), two-pass.
pub fn std_dev(values: &[f64], mu: f64) -> f64 {
    (values.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Median; the mean of the two middle order statistics for even lengths.
/// Panics on an empty slice.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty list");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// `(x - mean) / sigma` with the population sigma.
pub fn zscore(values: &[f64]) -> Scores {
    if values.len() < 2 {
        return Scores {
            values: vec![0.0; values.len()],
            degenerate: true,
        };
    }
    // Re-centre the deviations on their own mean.
    let mu = mean(values);
    let raw: Vec<f64> = values.iter().map(|x| x - mu).collect();
    let shift = mean(&raw);
    let dev: Vec<f64> = raw.iter().map(|d| d - shift).collect();
    let sigma = std_dev(&dev, 0.0);
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Scores {
            values: vec![0.0; values.len()],
            degenerate: true,
        };
    }
    Scores {
        values: dev.iter().map(|d| d / sigma).collect(),
        degenerate: false,
    }
}

/// `0.6745 * (x - median) / MAD` with `MAD = median(|x - median|)`.
pub fn modified_zscore(values: &[f64]) -> Scores {
    if values.len() < 2 {
        return Scores {
            values: vec![0.0; values.len()],
            degenerate: true,
        };
    }
    let med = median(values);
    let deviations: Vec<f64> = values.iter().map(|x| (x - med).abs()).collect();
    let mad = median(&deviations);
    if mad > 0.0 {
        Scores {
            values: values.iter().map(|x| MAD_SCALE * (x - med) / mad).collect(),
            degenerate: false,
        }
    } else {
        let values = values
            .iter()
            .map(|&x| {
                if x == med {
                    0.0
                } else if x > med {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        Scores {
            values,
            degenerate: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalScores<K: Ord, G: Ord> {
    pub scores: BTreeMap<K, f64>,
    pub degenerate_groups: Vec<G>,
}

/// Standard Z-Score applied inside each group of `partition` on its own.
/// Keys missing from `partition` form one extra implicit group (`None`).
pub fn local_zscore<K, G>(values: &BTreeMap<K, f64>, partition: &BTreeMap<K, G>) -> LocalScores<K, Option<G>>
where
    K: Ord + Copy,
    G: Ord + Copy + Hash,
{
    let mut groups: BTreeMap<Option<G>, Vec<(K, f64)>> = BTreeMap::new();
    for (k, v) in values {
        groups.entry(partition.get(k).copied()).or_default().push((*k, *v));
    }
    let mut scores = BTreeMap::new();
    let mut degenerate_groups = Vec::new();
    for (g, members) in groups {
        let xs: Vec<f64> = members.iter().map(|(_, v)| *v).collect();
        let s = zscore(&xs);
        if s.degenerate {
            degenerate_groups.push(g);
        }
        for ((k, _), z) in members.into_iter().zip(s.values) {
            scores.insert(k, z);
        }
    }
    LocalScores {
        scores,
        degenerate_groups,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StreamScore {
    pub time: f64,
    pub score: f64,
    pub degenerate: bool,
}

/// Scores each sample of a time-ordered stream against the mean and sigma of
/// the samples whose time lies in `(t - window, t]`. Samples sharing a
/// timestamp see each other.
pub fn dynamic_zscore(stream: &[(f64, f64)], window: f64) -> Vec<StreamScore> {
    let n = stream.len();
    let mut out = Vec::with_capacity(n);
    let mut lo = 0;
    let mut hi = 0;
    // Running sums over stream[lo..hi]; recomputed exactly per distinct
    // timestamp to avoid drift.
    let mut cached: Option<(f64, f64, f64, usize)> = None;
    for i in 0..n {
        let t = stream[i].0;
        while hi < n && stream[hi].0 <= t {
            hi += 1;
        }
        while lo < hi && stream[lo].0 <= t - window {
            lo += 1;
        }
        let (ct, mu, sigma, count) = match cached {
            Some(c) if c.0 == t => c,
            _ => {
                let xs: Vec<f64> = stream[lo..hi].iter().map(|s| s.1).collect();
                let count = xs.len();
                let (mu, sigma) = if count >= 2 {
                    let mu = mean(&xs);
                    (mu, std_dev(&xs, mu))
                } else {
                    (0.0, 0.0)
                };
                (t, mu, sigma, count)
            }
        };
        cached = Some((ct, mu, sigma, count));
        if count >= 2 && sigma > 0.0 {
            out.push(StreamScore {
                time: t,
                score: (stream[i].1 - mu) / sigma,
                degenerate: false,
            });
        } else {
            out.push(StreamScore {
                time: t,
                score: 0.0,
                degenerate: true,
            });
        }
    }
    out
}
