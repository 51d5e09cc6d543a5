//! Gaze-accumulation quality metrics and confusion matrices.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::event::seconds_to_frames;
use crate::features::gaze_accumulation;
use crate::zone::{GazeZone, ZoneVector, ZONE_COUNT};

fn paired_accumulations(truth: &[GazeZone], est: &[GazeZone]) -> Result<(ZoneVector, ZoneVector)> {
    if truth.len() != est.len() {
        return Err(Error::LengthMismatch(truth.len(), est.len()));
    }
    Ok((gaze_accumulation(truth)?, gaze_accumulation(est)?))
}

/// Estimated over true accumulation per zone; 0 where the zone is absent
/// from the truth.
pub fn accumulation_ratio(truth: &[GazeZone], est: &[GazeZone]) -> Result<ZoneVector> {
    let (a, a_hat) = paired_accumulations(truth, est)?;
    Ok(std::array::from_fn(|j| if a[j] != 0.0 { a_hat[j] / a[j] } else { 0.0 }))
}

/// Estimated accumulation in zones absent from the truth (false
/// accumulation); 0 where the zone is present.
pub fn accumulation_abs_error(truth: &[GazeZone], est: &[GazeZone]) -> Result<ZoneVector> {
    let (a, a_hat) = paired_accumulations(truth, est)?;
    Ok(std::array::from_fn(|j| if a[j] != 0.0 { 0.0 } else { a_hat[j] }))
}

/// Per-zone value lists of both metrics over many windows.
///
/// A window contributes its ratio to `ratio[j]` when zone `j` occurs in the
/// truth, and its absolute error to `abs_error[j]` otherwise.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricDistributions {
    pub ratio: [Vec<f64>; ZONE_COUNT],
    pub abs_error: [Vec<f64>; ZONE_COUNT],
    pub windows: usize,
}

impl MetricDistributions {
    pub fn push(&mut self, truth: &[GazeZone], est: &[GazeZone]) -> Result<()> {
        let (a, a_hat) = paired_accumulations(truth, est)?;
        for j in 0..ZONE_COUNT {
            if a[j] != 0.0 {
                self.ratio[j].push(a_hat[j] / a[j]);
            } else {
                self.abs_error[j].push(a_hat[j]);
            }
        }
        self.windows += 1;
        Ok(())
    }
}

/// Start-aligned windows of `window` frames every `stride` frames that fit in `len`.
pub fn split_windows(len: usize, window: usize, stride: usize) -> Vec<Range<usize>> {
    if window == 0 || stride == 0 || window > len {
        return Vec::new();
    }
    (0..=(len - window) / stride)
        .map(|k| k * stride..k * stride + window)
        .collect()
}

/// Splits each aligned (truth, estimate) pair into `window_seconds` windows
/// every `stride_seconds` and collects both metrics.
pub fn metric_distributions(
    pairs: &[(&[GazeZone], &[GazeZone])],
    fps: u32,
    window_seconds: f64,
    stride_seconds: f64,
) -> Result<MetricDistributions> {
    if pairs.is_empty() {
        return Err(Error::Protocol("metric distributions need at least one pair".into()));
    }
    let window = seconds_to_frames(window_seconds, fps);
    let stride = seconds_to_frames(stride_seconds, fps);
    if window == 0 || stride == 0 {
        return Err(Error::InvalidConfig(format!(
            "window {window_seconds} s and stride {stride_seconds} s must both cover at least one frame"
        )));
    }
    let mut out = MetricDistributions::default();
    for (truth, est) in pairs {
        if truth.len() != est.len() {
            return Err(Error::LengthMismatch(truth.len(), est.len()));
        }
        for r in split_windows(truth.len(), window, stride) {
            out.push(&truth[r.clone()], &est[r])?;
        }
    }
    Ok(out)
}

/// Counts of true class (rows) against predicted class (columns).
/// Predictions outside the class set land in `unassigned`, so a row's rates
/// can sum to less than 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
    pub unassigned: Vec<usize>,
}

impl ConfusionMatrix {
    pub fn from_indices(classes: usize, truth: &[usize], pred: &[Option<usize>]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::LengthMismatch(truth.len(), pred.len()));
        }
        if truth.is_empty() {
            return Err(Error::Protocol("confusion matrix needs at least one sample".into()));
        }
        let mut counts = vec![vec![0; classes]; classes];
        let mut unassigned = vec![0; classes];
        for (&t, &p) in truth.iter().zip(pred) {
            if t >= classes {
                return Err(Error::Protocol(format!("true class {t} is outside 0..{classes}")));
            }
            match p {
                Some(p) if p < classes => counts[t][p] += 1,
                Some(p) => {
                    return Err(Error::Protocol(format!("predicted class {p} is outside 0..{classes}")))
                }
                None => unassigned[t] += 1,
            }
        }
        Ok(ConfusionMatrix { counts, unassigned })
    }

    /// Frame-level gaze-zone confusion. Frames whose truth is `Unknown` are
    /// skipped; `Unknown` estimates are unassigned.
    pub fn from_zones(truth: &[GazeZone], est: &[GazeZone]) -> Result<Self> {
        if truth.len() != est.len() {
            return Err(Error::LengthMismatch(truth.len(), est.len()));
        }
        let (t, p): (Vec<usize>, Vec<Option<usize>>) = truth
            .iter()
            .zip(est)
            .filter_map(|(t, e)| t.index().map(|ti| (ti, e.index())))
            .unzip();
        Self::from_indices(ZONE_COUNT, &t, &p)
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn row_total(&self, class: usize) -> usize {
        self.counts[class].iter().sum::<usize>() + self.unassigned[class]
    }

    /// Row-normalized rates; rows without samples are all zero.
    pub fn rates(&self) -> Vec<Vec<f64>> {
        (0..self.classes())
            .map(|i| {
                let total = self.row_total(i);
                self.counts[i]
                    .iter()
                    .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                    .collect()
            })
            .collect()
    }

    /// Recall of each class with at least one true sample.
    pub fn recalls(&self) -> Vec<Option<f64>> {
        (0..self.classes())
            .map(|i| {
                let total = self.row_total(i);
                (total > 0).then(|| self.counts[i][i] as f64 / total as f64)
            })
            .collect()
    }
}

/// Mean per-class recall over the classes that occur in the truth.
pub fn weighted_accuracy(cm: &ConfusionMatrix) -> f64 {
    let recalls: Vec<f64> = cm.recalls().into_iter().flatten().collect();
    if recalls.is_empty() {
        0.0
    } else {
        recalls.iter().sum::<f64>() / recalls.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use GazeZone::*;

    fn runs(parts: &[(GazeZone, usize)]) -> Vec<GazeZone> {
        parts
            .iter()
            .flat_map(|&(z, k)| std::iter::repeat_n(z, k))
            .collect()
    }

    const REAR: usize = 4;

    #[test]
    fn ratio_cases() {
        let truth = runs(&[(Rearview, 30), (Front, 120)]);
        assert_eq!(accumulation_ratio(&truth, &truth).unwrap()[REAR], 1.0);

        let est = runs(&[(Rearview, 15), (Front, 135)]);
        assert_eq!(accumulation_ratio(&truth, &est).unwrap()[REAR], 0.5);

        let est = runs(&[(Rearview, 15), (Left, 15), (Front, 120)]);
        assert_eq!(accumulation_ratio(&truth, &est).unwrap()[2], 0.0);
    }

    #[test]
    fn abs_error_cases() {
        let truth = vec![Front; 150];
        let est = runs(&[(Speedometer, 15), (Front, 135)]);
        let e = accumulation_abs_error(&truth, &est).unwrap();
        assert_eq!(e[5], 0.1);
        assert_eq!(e[0], 0.0);
        assert_eq!(accumulation_abs_error(&est, &est).unwrap(), [0.0; ZONE_COUNT]);
    }

    #[test]
    fn metric_length_mismatch() {
        assert!(accumulation_ratio(&[Front], &[Front, Front]).is_err());
        assert!(accumulation_abs_error(&[Front], &[]).is_err());
    }

    #[test]
    fn window_split_counts() {
        assert_eq!(split_windows(600, 150, 30).len(), 16);
        assert_eq!(split_windows(600, 150, 30).last(), Some(&(450..600)));
        assert!(split_windows(100, 150, 30).is_empty());
    }

    #[test]
    fn identical_pairs_give_unit_ratios() {
        let truth = runs(&[(Front, 300), (Left, 100), (Front, 200)]);
        let d = metric_distributions(&[(&truth, &truth)], 30, 5.0, 1.0).unwrap();
        assert_eq!(d.windows, 16);
        assert_eq!(d.ratio[0].len(), 16);
        assert!(d.ratio.iter().flatten().all(|&r| r == 1.0));
        assert!(d.abs_error.iter().flatten().all(|&e| e == 0.0));
        assert!(metric_distributions(&[], 30, 5.0, 1.0).is_err());
    }

    #[test]
    fn confusion_and_weighted_accuracy() {
        let cm = ConfusionMatrix::from_indices(2, &[0, 0, 1, 1], &[Some(0), Some(0), Some(1), Some(1)]).unwrap();
        assert_eq!(weighted_accuracy(&cm), 1.0);

        let cm = ConfusionMatrix::from_indices(2, &[0, 0, 1, 1], &[Some(0), Some(0), Some(1), Some(0)]).unwrap();
        assert_eq!(weighted_accuracy(&cm), 0.75);
        assert_eq!(cm.rates(), vec![vec![1.0, 0.0], vec![0.5, 0.5]]);
        assert!(ConfusionMatrix::from_indices(2, &[], &[]).is_err());
    }

    #[test]
    fn unknown_predictions_leave_row_short() {
        let cm = ConfusionMatrix::from_zones(&[Front, Front, Unknown, Left], &[Front, Unknown, Left, Left]).unwrap();
        assert_eq!(cm.row_total(0), 2);
        let rates = cm.rates();
        assert_eq!(rates[0].iter().sum::<f64>(), 0.5);
        // Only Front and Left occur in the truth.
        assert_eq!(weighted_accuracy(&cm), 0.75);
    }
}
