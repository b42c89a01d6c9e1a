use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmentation::Label;

/// Counts with RT as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn from_pairs(predicted: &[Label], actual: &[Label]) -> Result<Self> {
        if predicted.len() != actual.len() {
            return Err(Error::shape(format!("{} labels", predicted.len()), actual.len()));
        }
        let mut cm = ConfusionMatrix::default();
        for (p, a) in predicted.iter().zip(actual) {
            cm.record(*p, *a);
        }
        Ok(cm)
    }

    pub fn record(&mut self, predicted: Label, actual: Label) {
        match (predicted, actual) {
            (Label::Rt, Label::Rt) => self.tp += 1,
            (Label::Rt, Label::Nrt) => self.fp += 1,
            (Label::Nrt, Label::Rt) => self.fn_ += 1,
            (Label::Nrt, Label::Nrt) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// The same predictions scored with NRT as the positive class.
    pub fn swapped(&self) -> Self {
        ConfusionMatrix {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }
}

impl AddAssign for ConfusionMatrix {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.tn += o.tn;
    }
}

impl std::iter::Sum for ConfusionMatrix {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ConfusionMatrix::default(), |mut a, b| {
            a += b;
            a
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1_rt: f64,
    pub f1_nrt: f64,
    pub mcc: f64,
}

/// `2·tp / (2·tp + fp + fn)`, the harmonic mean of precision and recall;
/// 0 when there are neither predicted nor actual positives.
fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    let den = 2 * tp + fp + fn_;
    if den == 0 {
        0.0
    } else {
        (2 * tp) as f64 / den as f64
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Empty("confusion matrix".into()));
    }
    let (tp, fp, fn_, tn) = (cm.tp as f64, cm.fp as f64, cm.fn_ as f64, cm.tn as f64);
    let factors = [tp + fp, tp + fn_, tn + fp, tn + fn_];
    let mcc = if factors.contains(&0.0) {
        0.0
    } else {
        let den = factors.iter().product::<f64>().sqrt();
        ((tp * tn - fp * fn_) / den).clamp(-1.0, 1.0)
    };
    Ok(Metrics {
        accuracy: (cm.tp + cm.tn) as f64 / total as f64,
        f1_rt: f1(cm.tp, cm.fp, cm.fn_),
        f1_nrt: f1(cm.tn, cm.fn_, cm.fp),
        mcc,
    })
}
