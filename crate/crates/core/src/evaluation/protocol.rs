//! Subject-independent evaluation: leave-one-subject-out folds and the
//! Setting A → Setting B hold-out, with pooled confusion matrices.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Architecture, LstmClassifier, NetworkConfig, TrainingConfig};
use crate::segmentation::{InputForm, Label, Provenance, Sample};
use crate::skeleton::Setting;
use crate::tensor::Matrix;

use super::metrics::{metrics, ConfusionMatrix, Metrics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Loso,
    Holdout,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Loso => "loso",
            Protocol::Holdout => "holdout",
        })
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "loso" => Ok(Protocol::Loso),
            "holdout" | "hold-out" => Ok(Protocol::Holdout),
            other => Err(Error::Validation(format!("unknown protocol '{other}'"))),
        }
    }
}

/// Indices into an item list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    /// Held-out child for LOSO, `"A->B"` for the hold-out split.
    pub name: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// One fold per child (sorted by id). A child's augmented copies share its
/// `child_id` and so stay in its test fold.
pub fn loso_folds(items: &[Provenance]) -> Result<Vec<Fold>> {
    let children: BTreeSet<&str> = items.iter().map(|p| p.child_id.as_str()).collect();
    if children.len() < 2 {
        return Err(Error::Validation(format!(
            "leave-one-subject-out needs at least 2 children, found {}",
            children.len()
        )));
    }
    Ok(children
        .into_iter()
        .map(|child| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..items.len()).partition(|&i| items[i].child_id == child);
            Fold {
                name: child.to_string(),
                train,
                test,
            }
        })
        .collect())
}

/// Train on Setting A, test on Setting B.
pub fn holdout_split(items: &[Provenance]) -> Result<Fold> {
    let (train, test): (Vec<usize>, Vec<usize>) = (0..items.len()).partition(|&i| items[i].setting == Setting::A);
    if train.is_empty() || test.is_empty() {
        return Err(Error::Validation(format!(
            "hold-out needs both settings: {} Setting A and {} Setting B items",
            train.len(),
            test.len()
        )));
    }
    Ok(Fold {
        name: "A->B".into(),
        train,
        test,
    })
}

pub fn make_folds(protocol: Protocol, items: &[Provenance]) -> Result<Vec<Fold>> {
    match protocol {
        Protocol::Loso => loso_folds(items),
        Protocol::Holdout => Ok(vec![holdout_split(items)?]),
    }
}

/// Anything that can be trained on one split and label another.
pub trait Learner: Sync {
    fn fit_predict(&self, train: &[&Sample], test: &[&Sample], fold_index: usize) -> Result<Vec<Label>>;
}

/// Bidirectional LSTM classifier; fold `i` trains with seed `seed + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LstmLearner {
    pub network: NetworkConfig,
    pub training: TrainingConfig,
}

impl LstmLearner {
    pub fn fit(&self, train: &[&Sample], fold_index: usize) -> Result<LstmClassifier> {
        let tc = TrainingConfig {
            seed: self.training.seed.wrapping_add(fold_index as u64),
            ..self.training
        };
        let xs: Vec<Matrix> = train.iter().map(|s| s.data.clone()).collect();
        let ys: Vec<Label> = train.iter().map(|s| s.label).collect();
        LstmClassifier::fit(self.network, &tc, &xs, &ys)
    }
}

impl Learner for LstmLearner {
    fn fit_predict(&self, train: &[&Sample], test: &[&Sample], fold_index: usize) -> Result<Vec<Label>> {
        let model = self.fit(train, fold_index)?;
        test.iter().map(|s| model.predict(&s.data)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub child_id: String,
    pub train_items: usize,
    pub cm: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub protocol: Protocol,
    pub architecture: Architecture,
    pub input_form: InputForm,
    pub seed: u64,
    /// Subsegment width, when evaluating windows rather than whole periods.
    pub window: Option<usize>,
    pub folds: Vec<FoldReport>,
    /// Sum of the per-fold confusion matrices.
    pub pooled: ConfusionMatrix,
    pub overall: Metrics,
    /// The configuration that produced the report, embedded verbatim.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_config: Option<serde_json::Value>,
}

impl MetricsReport {
    /// One row per fold plus a pooled row.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "protocol",
            "architecture",
            "input_form",
            "window",
            "fold",
            "tp",
            "fp",
            "fn",
            "tn",
            "accuracy",
            "f1_rt",
            "f1_nrt",
            "mcc",
        ])?;
        let window = self.window.map(|w| w.to_string()).unwrap_or_default();
        let rows = self
            .folds
            .iter()
            .map(|f| (f.child_id.as_str(), f.cm))
            .chain(std::iter::once(("pooled", self.pooled)));
        for (name, cm) in rows {
            let fmt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            let m = metrics(&cm).ok();
            out.write_record([
                self.protocol.to_string(),
                self.architecture.to_string(),
                self.input_form.to_string(),
                window.clone(),
                name.to_string(),
                cm.tp.to_string(),
                cm.fp.to_string(),
                cm.fn_.to_string(),
                cm.tn.to_string(),
                fmt(m.map(|m| m.accuracy)),
                fmt(m.map(|m| m.f1_rt)),
                fmt(m.map(|m| m.f1_nrt)),
                fmt(m.map(|m| m.mcc)),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<report csv>", e))
    }
}

/// What to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub protocol: Protocol,
    pub architecture: Architecture,
    pub input_form: InputForm,
    pub window: Option<usize>,
    pub seed: u64,
}

/// Runs every fold (concurrently, on the current rayon pool) and pools the
/// confusion matrices in fold order.
pub fn run_experiment(spec: &ExperimentSpec, samples: &[Sample], learner: &dyn Learner) -> Result<MetricsReport> {
    if samples.is_empty() {
        return Err(Error::Empty("evaluation samples".into()));
    }
    let provenance: Vec<Provenance> = samples.iter().map(|s| s.provenance.clone()).collect();
    let folds = make_folds(spec.protocol, &provenance)?;
    let reports = folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| {
            let train: Vec<&Sample> = fold.train.iter().map(|&k| &samples[k]).collect();
            let test: Vec<&Sample> = fold.test.iter().map(|&k| &samples[k]).collect();
            if train.is_empty() || test.is_empty() {
                return Err(Error::Empty(format!("fold {}", fold.name)));
            }
            let predicted = learner.fit_predict(&train, &test, i).map_err(|e| match e {
                Error::Diverged { epoch, loss } => Error::Numeric {
                    step: epoch,
                    what: format!("training diverged in fold {} (loss {loss})", fold.name),
                },
                other => other,
            })?;
            let actual: Vec<Label> = test.iter().map(|s| s.label).collect();
            Ok(FoldReport {
                child_id: fold.name.clone(),
                train_items: train.len(),
                cm: ConfusionMatrix::from_pairs(&predicted, &actual)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pooled: ConfusionMatrix = reports.iter().map(|f| f.cm).sum();
    Ok(MetricsReport {
        protocol: spec.protocol,
        architecture: spec.architecture,
        input_form: spec.input_form,
        seed: spec.seed,
        window: spec.window,
        folds: reports,
        pooled,
        overall: metrics(&pooled)?,
        run_config: None,
    })
}
