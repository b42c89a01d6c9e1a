//! Mini-batch training loop and the standardizing classifier wrapper.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmentation::Label;
use crate::tensor::Matrix;

use super::network::{Network, NetworkConfig};
use super::optim::sgd_momentum_step;
use super::preprocess::{inject_noise, Standardizer};

/// How an epoch is split into mini-batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Batching {
    /// Fixed number of items per batch (the last batch may be smaller).
    Size(usize),
    /// Fixed number of batches per epoch, sizes differing by at most one.
    Count(usize),
}

impl Batching {
    /// Batch boundaries over `n` shuffled items.
    fn ranges(self, n: usize) -> Vec<std::ops::Range<usize>> {
        match self {
            Batching::Size(s) => (0..n).step_by(s).map(|a| a..(a + s).min(n)).collect(),
            Batching::Count(c) => {
                let c = c.min(n);
                (0..c).map(|k| k * n / c..(k + 1) * n / c).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batching: Batching,
    pub input_noise_std: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 50,
            learning_rate: 0.1,
            momentum: 0.3,
            batching: Batching::Size(30),
            input_noise_std: 0.1,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let batch_ok = matches!(self.batching, Batching::Size(n) | Batching::Count(n) if n > 0);
        if self.epochs == 0
            || self.learning_rate.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
            || !(0.0..1.0).contains(&self.momentum)
            || !(0.0..).contains(&self.input_noise_std)
            || !batch_ok
        {
            return Err(Error::Validation(format!("invalid training config {self:?}")));
        }
        Ok(())
    }
}

/// Independent generators for initialization, shuffling and noise, so that
/// toggling one does not perturb the others.
pub(crate) fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

const INIT_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

/// Mean loss and gradient of one batch. Items are differentiated in
/// parallel and summed in batch order, so the result does not depend on the
/// thread count.
fn batch_gradients(net: &Network, batch: &[(Matrix, Label)]) -> Result<(f64, Vec<f64>)> {
    let per_item: Vec<Result<(f64, Vec<f64>)>> = batch
        .par_iter()
        .map(|(x, y)| {
            let mut g = vec![0.0; net.param_count()];
            let loss = net.accumulate_gradients(x, *y, &mut g)?;
            Ok((loss, g))
        })
        .collect();
    let mut grads = vec![0.0; net.param_count()];
    let mut loss = 0.0;
    for item in per_item {
        let (l, g) = item?;
        loss += l;
        grads.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    let scale = 1.0 / batch.len() as f64;
    grads.iter_mut().for_each(|g| *g *= scale);
    Ok((loss * scale, grads))
}

/// Trains from seeded initialization on already standardized inputs.
/// Returns the network and the per-epoch mean loss.
pub fn train_network(
    config: NetworkConfig,
    tc: &TrainingConfig,
    data: &[(Matrix, Label)],
) -> Result<(Network, Vec<f64>)> {
    let mut net = Network::init(config, &mut stream(tc.seed, INIT_STREAM))?;
    let trace = train_from(&mut net, tc, data)?;
    Ok((net, trace))
}

/// Continues training `net` in place.
pub fn train_from(net: &mut Network, tc: &TrainingConfig, data: &[(Matrix, Label)]) -> Result<Vec<f64>> {
    tc.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    let mut shuffle_rng = stream(tc.seed, SHUFFLE_STREAM);
    let mut noise_rng = stream(tc.seed, NOISE_STREAM);
    let mut velocity = vec![0.0; net.param_count()];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut trace = Vec::with_capacity(tc.epochs);

    for epoch in 1..=tc.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for range in tc.batching.ranges(order.len()) {
            let batch = order[range]
                .iter()
                .map(|&i| {
                    let (x, y) = &data[i];
                    Ok((inject_noise(x, tc.input_noise_std, &mut noise_rng)?, *y))
                })
                .collect::<Result<Vec<_>>>()?;
            let (loss, grads) = batch_gradients(net, &batch).map_err(|e| match e {
                Error::Numeric { .. } => Error::Diverged { epoch, loss: f64::NAN },
                other => other,
            })?;
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch, loss });
            }
            sgd_momentum_step(&mut net.params, &grads, &mut velocity, tc.learning_rate, tc.momentum)?;
            epoch_loss += loss * batch.len() as f64;
        }
        trace.push(epoch_loss / data.len() as f64);
    }
    Ok(trace)
}

/// A network bundled with the standardizer fitted on its training inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmClassifier {
    pub network: Network,
    pub standardizer: Standardizer,
    pub training: TrainingConfig,
    pub loss_trace: Vec<f64>,
}

impl LstmClassifier {
    pub fn fit(config: NetworkConfig, tc: &TrainingConfig, inputs: &[Matrix], labels: &[Label]) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(Error::shape(format!("{} labels", inputs.len()), labels.len()));
        }
        let standardizer = Standardizer::fit(inputs)?;
        let data = inputs
            .iter()
            .zip(labels)
            .map(|(x, y)| Ok((standardizer.apply(x)?, *y)))
            .collect::<Result<Vec<_>>>()?;
        let (network, loss_trace) = train_network(config, tc, &data)?;
        Ok(LstmClassifier {
            network,
            standardizer,
            training: *tc,
            loss_trace,
        })
    }

    /// `[p(RT), p(NRT)]` of a raw (unstandardized) input; never noisy.
    pub fn predict_proba(&self, x: &Matrix) -> Result<[f64; 2]> {
        self.network.forward(&self.standardizer.apply(x)?)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Label> {
        let p = self.predict_proba(x)?;
        Ok(if p[0] >= p[1] { Label::Rt } else { Label::Nrt })
    }

    pub fn predict_all(&self, xs: &[Matrix]) -> Result<Vec<Label>> {
        xs.par_iter().map(|x| self.predict(x)).collect()
    }
}
