//! Per-maneuver gaze-behavior models.
//!
//! Each model keeps the sample mean and the (n-1) sample covariance of its
//! training descriptors. Scoring uses the unnormalized Gaussian
//! `exp(-d²/2)`, where `d²` is the squared Mahalanobis distance under the
//! covariance plus a ridge `ε · (trace/d) · I` (or `ε · I` when the trace is 0).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::config::FeatureConfig;
use crate::error::{Error, Result};
use crate::event::Maneuver;
use crate::features::GlanceFeatureVector;

#[derive(Debug, Clone)]
pub struct BehaviorModel {
    label: Maneuver,
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    ridge_epsilon: f64,
    config: FeatureConfig,
    factor: Option<Cholesky<f64, Dyn>>,
}

impl BehaviorModel {
    /// Builds a model from stored statistics. The covariance must be square,
    /// match the mean, and be symmetric within `1e-9`.
    pub fn from_parts(
        label: Maneuver,
        mean: DVector<f64>,
        covariance: DMatrix<f64>,
        ridge_epsilon: f64,
        config: FeatureConfig,
    ) -> Result<Self> {
        let d = mean.len();
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: covariance.nrows(),
            });
        }
        if !(ridge_epsilon.is_finite() && ridge_epsilon >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "ridge_epsilon must be nonnegative, got {ridge_epsilon}"
            )));
        }
        for i in 0..d {
            for j in 0..i {
                if (covariance[(i, j)] - covariance[(j, i)]).abs() > 1e-9 {
                    return Err(Error::InvalidConfig(format!(
                        "{label} covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let factor = spd_factor(regularize(&covariance, ridge_epsilon));
        Ok(BehaviorModel {
            label,
            mean,
            covariance,
            ridge_epsilon,
            config,
            factor,
        })
    }

    pub fn label(&self) -> Maneuver {
        self.label
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn ridge_epsilon(&self) -> f64 {
        self.ridge_epsilon
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    /// Covariance plus the ridge actually used for scoring.
    pub fn regularized_covariance(&self) -> DMatrix<f64> {
        regularize(&self.covariance, self.ridge_epsilon)
    }

    /// Squared Mahalanobis distance of a descriptor computed under a
    /// compatible feature configuration.
    pub fn mahalanobis_sq(&self, h: &GlanceFeatureVector) -> Result<f64> {
        h.config.check_compatible(&self.config)?;
        self.mahalanobis_sq_raw(&h.values)
    }

    /// Squared Mahalanobis distance of a bare vector; only the dimension is checked.
    pub fn mahalanobis_sq_raw(&self, h: &[f64]) -> Result<f64> {
        if h.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: h.len(),
            });
        }
        let factor = self.factor.as_ref().ok_or_else(|| self.not_pd_error())?;
        let diff = DVector::from_iterator(h.len(), h.iter().zip(self.mean.iter()).map(|(a, b)| a - b));
        let solved = factor.solve(&diff);
        Ok(diff.dot(&solved).max(0.0))
    }

    pub fn fitness(&self, h: &GlanceFeatureVector) -> Result<f64> {
        self.mahalanobis_sq(h).map(fitness_from_distance)
    }

    pub fn fitness_raw(&self, h: &[f64]) -> Result<f64> {
        self.mahalanobis_sq_raw(h).map(fitness_from_distance)
    }

    fn not_pd_error(&self) -> Error {
        let eig = SymmetricEigen::new(self.regularized_covariance());
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Error::NotPositiveDefinite {
            label: self.label,
            min_eigenvalue: min,
            max_eigenvalue: max,
        }
    }
}

/// Cholesky factor, rejecting pivots that vanish relative to the diagonal.
fn spd_factor(matrix: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let d = matrix.nrows();
    let max_diag = matrix.diagonal().iter().copied().fold(0.0, f64::max);
    let tol = max_diag * d as f64 * f64::EPSILON;
    let factor = Cholesky::new(matrix)?;
    let l = factor.l_dirty();
    (0..d).all(|i| l[(i, i)] * l[(i, i)] > tol).then_some(factor)
}

fn regularize(covariance: &DMatrix<f64>, epsilon: f64) -> DMatrix<f64> {
    let d = covariance.nrows();
    let mut out = covariance.clone();
    if epsilon > 0.0 && d > 0 {
        let trace = covariance.trace();
        let scale = if trace > 0.0 { trace / d as f64 } else { 1.0 };
        for i in 0..d {
            out[(i, i)] += epsilon * scale;
        }
    }
    out
}

/// `exp(-d²/2)`, floored at the smallest positive normal `f64` so the score
/// stays in `(0, 1]` when the exponential underflows.
pub fn fitness_from_distance(mahalanobis_sq: f64) -> f64 {
    (-0.5 * mahalanobis_sq).exp().max(f64::MIN_POSITIVE)
}

/// Fits a model to descriptors that all carry `label`'s training data.
pub fn fit_behavior_model(
    samples: &[GlanceFeatureVector],
    label: Maneuver,
    ridge_epsilon: f64,
) -> Result<BehaviorModel> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            min: 2,
            got: samples.len(),
        });
    }
    let config = samples[0].config;
    if samples.iter().any(|s| s.config != config) {
        return Err(Error::MixedConfigs);
    }
    let rows: Vec<&[f64]> = samples.iter().map(|s| s.values.as_slice()).collect();
    fit_raw(&rows, label, ridge_epsilon, config)
}

/// Fits a model to bare vectors tagged with `config`.
pub fn fit_raw<V: AsRef<[f64]>>(
    samples: &[V],
    label: Maneuver,
    ridge_epsilon: f64,
    config: FeatureConfig,
) -> Result<BehaviorModel> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples { min: 2, got: n });
    }
    let d = samples[0].as_ref().len();
    if let Some(bad) = samples.iter().find(|s| s.as_ref().len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: bad.as_ref().len(),
        });
    }

    let mut mean = DVector::zeros(d);
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s.as_ref()) {
            *m += v;
        }
    }
    mean /= n as f64;

    let mut covariance = DMatrix::zeros(d, d);
    for s in samples {
        let diff = DVector::from_iterator(d, s.as_ref().iter().zip(mean.iter()).map(|(v, m)| v - m));
        covariance.ger(1.0, &diff, &diff, 1.0);
    }
    covariance /= (n - 1) as f64;
    // Exact symmetry for persistence.
    for i in 0..d {
        for j in 0..i {
            let avg = 0.5 * (covariance[(i, j)] + covariance[(j, i)]);
            covariance[(i, j)] = avg;
            covariance[(j, i)] = avg;
        }
    }

    BehaviorModel::from_parts(label, mean, covariance, ridge_epsilon, config)
}

/// Label of the best-fitting model plus every model's fitness, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub label: Maneuver,
    pub scores: Vec<(Maneuver, f64)>,
}

impl Classification {
    pub fn fitness_of(&self, label: Maneuver) -> Option<f64> {
        self.scores.iter().find(|(l, _)| *l == label).map(|(_, f)| *f)
    }
}

/// Assigns `h` to the model with the highest fitness.
///
/// Models are compared by squared Mahalanobis distance, which orders them the
/// same way as fitness without underflow. Exact ties go to the earliest label
/// in canonical order (LLC, RLC, LK).
pub fn classify(h: &GlanceFeatureVector, models: &[BehaviorModel]) -> Result<Classification> {
    for m in models {
        h.config.check_compatible(m.config())?;
    }
    classify_raw(&h.values, models)
}

pub fn classify_raw(h: &[f64], models: &[BehaviorModel]) -> Result<Classification> {
    if models.is_empty() {
        return Err(Error::NoModels);
    }
    let mut scores = Vec::with_capacity(models.len());
    let mut best: Option<(f64, Maneuver)> = None;
    for m in models {
        let d2 = m.mahalanobis_sq_raw(h)?;
        scores.push((m.label(), fitness_from_distance(d2)));
        let better = match best {
            None => true,
            Some((bd, bl)) => d2 < bd || (d2 == bd && m.label() < bl),
        };
        if better {
            best = Some((d2, m.label()));
        }
    }
    Ok(Classification {
        label: best.map(|(_, l)| l).expect("at least one model"),
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::FeatureMode;

    fn cfg(mode: FeatureMode, ridge: f64) -> FeatureConfig {
        FeatureConfig {
            ridge_epsilon: ridge,
            ..FeatureConfig::with_mode(mode)
        }
    }

    fn identity_model(label: Maneuver, mean: Vec<f64>) -> BehaviorModel {
        let d = mean.len();
        BehaviorModel::from_parts(
            label,
            DVector::from_vec(mean),
            DMatrix::identity(d, d),
            0.0,
            cfg(FeatureMode::Accumulation, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn two_point_statistics() {
        let m = fit_raw(&[vec![0.0, 0.0], vec![2.0, 2.0]], Maneuver::LaneKeeping, 0.0, FeatureConfig::default()).unwrap();
        assert_eq!(m.mean().as_slice(), &[1.0, 1.0]);
        assert_eq!(m.covariance().as_slice(), &[2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn identical_samples_score_through_ridge() {
        let s = vec![vec![0.3, 0.7, 0.0]; 5];
        let m = fit_raw(&s, Maneuver::LaneKeeping, 1e-6, FeatureConfig::default()).unwrap();
        assert!(m.covariance().iter().all(|&v| v == 0.0));
        assert_eq!(m.fitness_raw(&[0.3, 0.7, 0.0]).unwrap(), 1.0);
        let far = m.fitness_raw(&[0.4, 0.6, 0.0]).unwrap();
        assert!(far > 0.0 && far < 1.0);
    }

    #[test]
    fn too_few_samples() {
        let err = fit_raw(&[vec![1.0]], Maneuver::LaneKeeping, 0.0, FeatureConfig::default()).unwrap_err();
        assert!(matches!(err, Error::TooFewSamples { got: 1, .. }));
    }

    #[test]
    fn unit_displacement_under_identity() {
        let mut mean = vec![0.0; 9];
        let m = identity_model(Maneuver::LeftLaneChange, mean.clone());
        assert_eq!(m.mahalanobis_sq_raw(&mean).unwrap(), 0.0);
        assert_eq!(m.fitness_raw(&mean).unwrap(), 1.0);
        mean[0] = 1.0;
        assert!((m.mahalanobis_sq_raw(&mean).unwrap() - 1.0).abs() < 1e-15);
        assert!((m.fitness_raw(&mean).unwrap() - 0.606_530_659_712_633_4).abs() < 1e-12);
    }

    #[test]
    fn singular_without_ridge_reports_conditioning() {
        let m = fit_raw(&[vec![1.0, 1.0], vec![2.0, 2.0]], Maneuver::RightLaneChange, 0.0, FeatureConfig::default()).unwrap();
        let err = m.mahalanobis_sq_raw(&[0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }), "{err}");
        assert!(err.to_string().contains("eigenvalues"));
    }

    #[test]
    fn dimension_and_mode_mismatch() {
        let m = identity_model(Maneuver::LeftLaneChange, vec![0.0; 9]);
        assert!(matches!(m.mahalanobis_sq_raw(&[0.0; 18]), Err(Error::DimensionMismatch { .. })));
        let h = GlanceFeatureVector {
            values: vec![0.0; 9],
            config: cfg(FeatureMode::Duration, 0.0),
            window: 0..150,
            source: crate::scanpath::ScanpathId::new("a", "b"),
        };
        assert!(matches!(m.mahalanobis_sq(&h), Err(Error::ConfigMismatch(_))));
    }

    #[test]
    fn classify_picks_nearest_and_breaks_ties_canonically() {
        let llc = identity_model(Maneuver::LeftLaneChange, vec![1.0, 0.0]);
        let rlc = identity_model(Maneuver::RightLaneChange, vec![0.0, 1.0]);
        let lk = identity_model(Maneuver::LaneKeeping, vec![5.0, 5.0]);
        let c = classify_raw(&[1.0, 0.0], &[lk.clone(), rlc.clone(), llc.clone()]).unwrap();
        assert_eq!(c.label, Maneuver::LeftLaneChange);
        assert_eq!(c.fitness_of(Maneuver::LeftLaneChange), Some(1.0));

        let same = |l| identity_model(l, vec![0.0, 0.0]);
        let c = classify_raw(
            &[3.0, 3.0],
            &[same(Maneuver::LaneKeeping), same(Maneuver::RightLaneChange), same(Maneuver::LeftLaneChange)],
        )
        .unwrap();
        assert_eq!(c.label, Maneuver::LeftLaneChange);
        assert!(matches!(classify_raw(&[0.0], &[]), Err(Error::NoModels)));
    }

    #[test]
    fn far_points_keep_positive_fitness_and_correct_order() {
        let near = identity_model(Maneuver::LaneKeeping, vec![0.0]);
        let far = identity_model(Maneuver::LeftLaneChange, vec![-1000.0]);
        let c = classify_raw(&[100.0], &[far, near]).unwrap();
        assert_eq!(c.label, Maneuver::LaneKeeping);
        assert!(c.scores.iter().all(|&(_, f)| f > 0.0 && f <= 1.0));
    }
}
