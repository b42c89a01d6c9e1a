//! Classification metrics, evaluation protocols and inter-rater agreement.

pub mod agreement;
pub mod metrics;
pub mod protocol;

pub use agreement::{
    align_intervals, align_rater_labels, icc_agreement, manifest_agreement, AgreementReport, AlignedTracks, IccResult,
};
pub use metrics::{metrics, ConfusionMatrix, Metrics};
pub use protocol::{
    holdout_split, loso_folds, make_folds, run_experiment, ExperimentSpec, Fold, FoldReport, Learner, LstmLearner,
    MetricsReport, Protocol,
};
