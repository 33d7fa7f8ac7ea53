use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinAxis {
    Linear,
    #[default]
    Log10,
}

impl BinAxis {
    fn forward(self, x: f64) -> f64 {
        match self {
            BinAxis::Linear => x,
            BinAxis::Log10 => x.log10(),
        }
    }
}

/// Per-bin statistics of pooled `(x, Q_int)` points. Empty bins have
/// `None` statistics and a zero count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCurve {
    pub axis: BinAxis,
    /// Bin centers on the transformed axis.
    pub centers: Vec<f64>,
    pub mean: Vec<Option<f64>>,
    pub min: Vec<Option<f64>>,
    pub max: Vec<Option<f64>>,
    pub counts: Vec<usize>,
}

impl EnvelopeCurve {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// One record per bin, in axis order.
    pub fn bins(&self) -> Vec<EnvelopeBin> {
        (0..self.len())
            .map(|i| EnvelopeBin {
                center: self.centers[i],
                count: self.counts[i],
                mean: self.mean[i],
                min: self.min[i],
                max: self.max[i],
            })
            .collect()
    }

    /// Indices of empty bins between the first and last occupied one.
    pub fn empty_interior_bins(&self) -> Vec<usize> {
        let first = self.counts.iter().position(|&c| c > 0);
        let last = self.counts.iter().rposition(|&c| c > 0);
        match (first, last) {
            (Some(a), Some(b)) => (a..=b).filter(|&i| self.counts[i] == 0).collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeBin {
    pub center: f64,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

/// Serializes an envelope as a list of bin records, so that empty bins
/// appear without statistics rather than as placeholder numbers.
pub fn serialize_bins<S: serde::Serializer>(curve: &EnvelopeCurve, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let bins = curve.bins();
    let mut seq = s.serialize_seq(Some(bins.len()))?;
    for b in &bins {
        seq.serialize_element(b)?;
    }
    seq.end()
}

/// Bins equally spaced on the transformed axis across the pooled range;
/// the last bin includes the upper edge.
pub fn bin_envelope(curves: &[Vec<(f64, f64)>], n_bins: usize, axis: BinAxis) -> Result<EnvelopeCurve> {
    if n_bins < 2 {
        return Err(Error::invalid("envelope needs at least 2 bins"));
    }
    let points: Vec<(f64, f64)> = curves.iter().flatten().copied().collect();
    if points.is_empty() {
        return Err(Error::EmptyInput("envelope curves".into()));
    }
    if points.iter().any(|&(x, q)| !x.is_finite() || !q.is_finite()) {
        return Err(Error::NonFinite {
            what: "envelope points",
        });
    }
    if axis == BinAxis::Log10 && points.iter().any(|&(x, _)| x <= 0.0) {
        return Err(Error::invalid("log10 binning needs positive x"));
    }
    let xs: Vec<f64> = points.iter().map(|&(x, _)| axis.forward(x)).collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / n_bins as f64;

    let mut sum = vec![0.0; n_bins];
    let mut min = vec![None::<f64>; n_bins];
    let mut max = vec![None::<f64>; n_bins];
    let mut counts = vec![0usize; n_bins];
    for (&x, &(_, q)) in xs.iter().zip(&points) {
        let i = if width > 0.0 {
            (((x - lo) / width).floor() as usize).min(n_bins - 1)
        } else {
            0
        };
        sum[i] += q;
        counts[i] += 1;
        min[i] = Some(min[i].map_or(q, |m| m.min(q)));
        max[i] = Some(max[i].map_or(q, |m| m.max(q)));
    }
    let mean = sum
        .iter()
        .zip(&counts)
        .zip(min.iter().zip(&max))
        .map(|((&s, &c), (lo, hi))| {
            // clamp guards against rounding pushing the mean past an extreme
            (c > 0).then(|| (s / c as f64).clamp(lo.unwrap(), hi.unwrap()))
        })
        .collect();
    let centers = (0..n_bins).map(|i| lo + (i as f64 + 0.5) * width).collect();
    Ok(EnvelopeCurve {
        axis,
        centers,
        mean,
        min,
        max,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_curve() {
        let c = vec![(1.0, 10.0), (10.0, 20.0), (100.0, 30.0)];
        let e = bin_envelope(&[c], 4, BinAxis::Log10).unwrap();
        for i in 0..4 {
            if e.counts[i] > 0 {
                assert_eq!(e.mean[i], e.min[i]);
                assert_eq!(e.max[i], e.min[i]);
            }
        }
        assert_eq!(e.counts.iter().sum::<usize>(), 3);
        assert_eq!(e.counts, vec![1, 0, 1, 1]);
        assert_eq!(e.mean[1], None);
        assert_eq!(e.empty_interior_bins(), vec![1]);
    }

    #[test]
    fn two_constant_curves() {
        let xs: Vec<f64> = (0..20).map(|i| 10f64.powf(i as f64 / 4.0)).collect();
        let a = xs.iter().map(|&x| (x, 1000.0)).collect();
        let b = xs.iter().map(|&x| (x, 3000.0)).collect();
        let e = bin_envelope(&[a, b], 5, BinAxis::Log10).unwrap();
        for i in 0..5 {
            assert_eq!(e.mean[i], Some(2000.0));
            assert_eq!(e.min[i], Some(1000.0));
            assert_eq!(e.max[i], Some(3000.0));
        }
    }

    #[test]
    fn errors() {
        assert!(bin_envelope(&[], 5, BinAxis::Linear).is_err());
        assert!(bin_envelope(&[vec![(1.0, 1.0)]], 1, BinAxis::Linear).is_err());
        assert!(bin_envelope(&[vec![(0.0, 1.0)]], 3, BinAxis::Log10).is_err());
        assert!(bin_envelope(&[vec![(0.0, 1.0)]], 3, BinAxis::Linear).is_ok());
    }

    proptest! {
        #[test]
        fn envelope_invariants(
            pts in prop::collection::vec((1e-3..1e6f64, 100.0..1e5f64), 1..200),
            bins in 2usize..40,
        ) {
            let e = bin_envelope(std::slice::from_ref(&pts), bins, BinAxis::Log10).unwrap();
            prop_assert_eq!(e.counts.iter().sum::<usize>(), pts.len());
            for i in 0..bins {
                match (e.min[i], e.mean[i], e.max[i]) {
                    (Some(a), Some(m), Some(b)) => prop_assert!(a <= m && m <= b),
                    (None, None, None) => prop_assert_eq!(e.counts[i], 0),
                    _ => prop_assert!(false, "inconsistent bin {}", i),
                }
            }
        }
    }
}
