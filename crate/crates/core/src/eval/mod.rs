//! Evaluation: accumulation quality metrics, confusion matrices and the
//! lane-change prediction protocol.

mod metrics;
mod protocol;

pub use metrics::{
    accumulation_abs_error, accumulation_ratio, metric_distributions, split_windows, weighted_accuracy,
    ConfusionMatrix, MetricDistributions,
};
pub use protocol::{
    aggregate_folds, classify_sweep, confidence_traces, drive_training_samples, event_confidence_traces,
    fit_models, lodo_cv, lodo_fold, recall_curve, test_drive, training_samples, training_window, window_sweep,
    ClassifiedSample, ConfidenceTrace, CvReport, EventRef, FoldResult, ProtocolConfig, RecallCurve, RecallPoint,
    TracePoint, TrainingSample, WindowSample,
};
