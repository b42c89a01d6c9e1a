//! Dimension-distributed (DD) and vanilla (V) bidirectional LSTM classifiers.
//!
//! DD: one shared bidirectional encoder with a single input channel is run
//! on every input channel separately; the per-channel readouts are
//! concatenated, passed through a rectified fully connected integration
//! layer, then a linear two-class output with softmax.
//!
//! V: two stacked bidirectional layers over all channels at once (the second
//! consumes the per-step concatenated hidden states of the first), then a
//! linear two-class output with softmax.
//!
//! Flat parameter order (each bidirectional layer is forward then backward
//! direction, each direction `W`, `U`, `b`; dense weights are row-major
//! `out × in`):
//! - DD: encoder, integration `W`, `b`, output `W`, `b`
//! - V: layer 1, layer 2, output `W`, `b`

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmentation::Label;
use crate::tensor::Matrix;

use super::lstm::{lstm_backward, lstm_forward, LstmDims, LstmTrace};

pub const CLASSES: usize = 2;

/// How a bidirectional layer is summarized into a fixed-width vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// Final forward state concatenated with the final backward state.
    #[default]
    Final,
    /// Time-averaged hidden states of each direction.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DdConfig {
    pub input_width: usize,
    pub hidden: usize,
    pub integration: usize,
    #[serde(default)]
    pub readout: Readout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VConfig {
    pub input_width: usize,
    pub hidden: [usize; 2],
    #[serde(default)]
    pub readout: Readout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "architecture", rename_all = "snake_case")]
pub enum NetworkConfig {
    Dd(DdConfig),
    V(VConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Dd,
    V,
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Architecture::Dd => "DD-LSTMNN",
            Architecture::V => "V-LSTMNN",
        })
    }
}

impl std::str::FromStr for Architecture {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dd" | "dd-lstmnn" => Ok(Architecture::Dd),
            "v" | "v-lstmnn" => Ok(Architecture::V),
            other => Err(Error::Validation(format!("unknown architecture '{other}'"))),
        }
    }
}

/// Default DD widths: shared encoder h = 2, integration width 7.
pub const DD_DEFAULT_HIDDEN: usize = 2;
pub const DD_DEFAULT_INTEGRATION: usize = 7;
/// Default V widths for both stacked layers.
pub const V_DEFAULT_HIDDEN: usize = 54;

impl NetworkConfig {
    pub fn default_for(arch: Architecture, input_width: usize) -> Self {
        match arch {
            Architecture::Dd => NetworkConfig::Dd(DdConfig {
                input_width,
                hidden: DD_DEFAULT_HIDDEN,
                integration: DD_DEFAULT_INTEGRATION,
                readout: Readout::Final,
            }),
            Architecture::V => NetworkConfig::V(VConfig {
                input_width,
                hidden: [V_DEFAULT_HIDDEN; 2],
                readout: Readout::Final,
            }),
        }
    }

    pub fn architecture(&self) -> Architecture {
        match self {
            NetworkConfig::Dd(_) => Architecture::Dd,
            NetworkConfig::V(_) => Architecture::V,
        }
    }

    pub fn input_width(&self) -> usize {
        match self {
            NetworkConfig::Dd(c) => c.input_width,
            NetworkConfig::V(c) => c.input_width,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            NetworkConfig::Dd(c) => c.input_width > 0 && c.hidden > 0 && c.integration > 0,
            NetworkConfig::V(c) => c.input_width > 0 && c.hidden.iter().all(|&h| h > 0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("all widths must be positive: {self:?}")))
        }
    }

    /// Named tensors `(name, len, fan_in, fan_out)` in flat order; biases
    /// have zero fans.
    pub fn tensor_layout(&self) -> Vec<(String, usize, usize, usize)> {
        let mut out = Vec::new();
        let mut bi = |name: &str, dims: LstmDims| {
            for dir in ["fwd", "bwd"] {
                for (t, (len, fi, fo)) in ["W", "U", "b"].iter().zip(dims.tensors()) {
                    out.push((format!("{name}.{dir}.{t}"), len, fi, fo));
                }
            }
        };
        match self {
            NetworkConfig::Dd(c) => {
                bi("encoder", LstmDims::new(1, c.hidden));
                let z = c.input_width * 2 * c.hidden;
                out.push(("integration.W".into(), c.integration * z, z, c.integration));
                out.push(("integration.b".into(), c.integration, 0, 0));
                out.push(("output.W".into(), CLASSES * c.integration, c.integration, CLASSES));
                out.push(("output.b".into(), CLASSES, 0, 0));
            }
            NetworkConfig::V(c) => {
                bi("layer1", LstmDims::new(c.input_width, c.hidden[0]));
                bi("layer2", LstmDims::new(2 * c.hidden[0], c.hidden[1]));
                let r = 2 * c.hidden[1];
                out.push(("output.W".into(), CLASSES * r, r, CLASSES));
                out.push(("output.b".into(), CLASSES, 0, 0));
            }
        }
        out
    }
}

/// Number of trainable scalars of a configuration.
pub fn count_params(config: &NetworkConfig) -> usize {
    match config {
        NetworkConfig::Dd(c) => {
            let z = c.input_width * 2 * c.hidden;
            2 * LstmDims::new(1, c.hidden).param_count() + c.integration * (z + 1) + CLASSES * (c.integration + 1)
        }
        NetworkConfig::V(c) => {
            2 * LstmDims::new(c.input_width, c.hidden[0]).param_count()
                + 2 * LstmDims::new(2 * c.hidden[0], c.hidden[1]).param_count()
                + CLASSES * (2 * c.hidden[1] + 1)
        }
    }
}

/// Forward and backward traces of one bidirectional layer.
struct BiTrace {
    fwd: LstmTrace,
    bwd: LstmTrace,
}

fn bi_forward(dims: LstmDims, params: &[f64], xs: &[f64]) -> Result<BiTrace> {
    let n = dims.param_count();
    Ok(BiTrace {
        fwd: lstm_forward(dims, &params[..n], xs, false)?,
        bwd: lstm_forward(dims, &params[n..2 * n], xs, true)?,
    })
}

fn bi_readout(tr: &BiTrace, mode: Readout, h: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * h);
    match mode {
        Readout::Final => {
            out.extend_from_slice(tr.fwd.final_hidden());
            out.extend_from_slice(tr.bwd.final_hidden());
        }
        Readout::Mean => {
            for dir in [&tr.fwd, &tr.bwd] {
                let mut m = vec![0.0; h];
                for t in 0..dir.steps {
                    for (a, v) in m.iter_mut().zip(dir.hidden_at(t)) {
                        *a += v;
                    }
                }
                out.extend(m.into_iter().map(|v| v / dir.steps as f64));
            }
        }
    }
    out
}

/// Per-time hidden-state gradients `(fwd, bwd)` implied by a readout gradient.
fn bi_readout_grad(tr: &BiTrace, mode: Readout, h: usize, g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let steps = tr.fwd.steps;
    let mut dfwd = vec![0.0; steps * h];
    let mut dbwd = vec![0.0; steps * h];
    match mode {
        Readout::Final => {
            let tf = tr.fwd.final_time();
            dfwd[tf * h..(tf + 1) * h].copy_from_slice(&g[..h]);
            let tb = tr.bwd.final_time();
            dbwd[tb * h..(tb + 1) * h].copy_from_slice(&g[h..2 * h]);
        }
        Readout::Mean => {
            let s = 1.0 / steps as f64;
            for t in 0..steps {
                for k in 0..h {
                    dfwd[t * h + k] = g[k] * s;
                    dbwd[t * h + k] = g[h + k] * s;
                }
            }
        }
    }
    (dfwd, dbwd)
}

/// `steps × 2h` per-step concatenation of forward and backward states.
fn bi_sequence(tr: &BiTrace, h: usize) -> Vec<f64> {
    let steps = tr.fwd.steps;
    let mut out = Vec::with_capacity(steps * 2 * h);
    for t in 0..steps {
        out.extend_from_slice(tr.fwd.hidden_at(t));
        out.extend_from_slice(tr.bwd.hidden_at(t));
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn bi_backward(
    dims: LstmDims,
    params: &[f64],
    xs: &[f64],
    tr: &BiTrace,
    dfwd: &[f64],
    dbwd: &[f64],
    grads: &mut [f64],
    mut dx: Option<&mut [f64]>,
) {
    let n = dims.param_count();
    let (gf, gb) = grads[..2 * n].split_at_mut(n);
    lstm_backward(dims, &params[..n], xs, &tr.fwd, dfwd, gf, dx.as_deref_mut());
    lstm_backward(dims, &params[n..2 * n], xs, &tr.bwd, dbwd, gb, dx);
}

/// Readout vector (`2h`) of a bidirectional layer over `xs` (row-major,
/// `dims.input` values per step).
pub fn bidirectional_encode(dims: LstmDims, params: &[f64], xs: &[f64], readout: Readout) -> Result<Vec<f64>> {
    if params.len() != 2 * dims.param_count() {
        return Err(Error::shape(2 * dims.param_count(), params.len()));
    }
    let tr = bi_forward(dims, params, xs)?;
    Ok(bi_readout(&tr, readout, dims.hidden))
}

/// `out = W x + b` for a row-major `W` of `out.len() × x.len()`.
fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    b.iter()
        .enumerate()
        .map(|(r, &bias)| bias + w[r * n..(r + 1) * n].iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
        .collect()
}

/// Adds `dout ⊗ x` into `gw`, `dout` into `gb`, and returns `Wᵀ dout`.
fn affine_backward(w: &[f64], x: &[f64], dout: &[f64], gw: &mut [f64], gb: &mut [f64]) -> Vec<f64> {
    let n = x.len();
    let mut dx = vec![0.0; n];
    for (r, &g) in dout.iter().enumerate() {
        gb[r] += g;
        let row = &w[r * n..(r + 1) * n];
        let grow = &mut gw[r * n..(r + 1) * n];
        for k in 0..n {
            grow[k] += g * x[k];
            dx[k] += g * row[k];
        }
    }
    dx
}

pub fn softmax(logits: &[f64; CLASSES]) -> [f64; CLASSES] {
    let m = logits[0].max(logits[1]);
    let e = [(logits[0] - m).exp(), (logits[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

/// Cross-entropy of `logits` against class `y`, via log-sum-exp.
fn cross_entropy(logits: &[f64; CLASSES], y: usize) -> f64 {
    let m = logits[0].max(logits[1]);
    m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln() - logits[y]
}

/// A network configuration together with its flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub config: NetworkConfig,
    pub params: Vec<f64>,
}

impl Network {
    /// Uniform ±√(6 / (fan_in + fan_out)) per weight tensor, zero biases
    /// except forget-gate biases of 1.
    pub fn init(config: NetworkConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        config.validate()?;
        let mut params = Vec::with_capacity(count_params(&config));
        for (name, len, fan_in, fan_out) in config.tensor_layout() {
            if fan_in + fan_out == 0 {
                let start = params.len();
                params.resize(start + len, 0.0);
                if name.contains(".b") && (name.starts_with("encoder") || name.starts_with("layer")) {
                    let h = len / 4;
                    params[start + h..start + 2 * h].iter_mut().for_each(|v| *v = 1.0);
                }
            } else {
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                params.extend((0..len).map(|_| rng.random_range(-limit..=limit)));
            }
        }
        debug_assert_eq!(params.len(), count_params(&config));
        Ok(Network { config, params })
    }

    pub fn from_params(config: NetworkConfig, params: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if params.len() != count_params(&config) {
            return Err(Error::shape(count_params(&config), params.len()));
        }
        Ok(Network { config, params })
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        let d = self.config.input_width();
        if x.cols() != d || x.rows() == 0 {
            return Err(Error::shape(
                format!("T x {d} input with T >= 1"),
                format!("{}x{}", x.rows(), x.cols()),
            ));
        }
        Ok(())
    }

    pub fn logits(&self, x: &Matrix) -> Result<[f64; CLASSES]> {
        self.check_input(x)?;
        Ok(match self.config {
            NetworkConfig::Dd(c) => self.dd_pass(&c, x, None)?.0,
            NetworkConfig::V(c) => self.v_pass(&c, x, None)?.0,
        })
    }

    /// Class probabilities `[p(RT), p(NRT)]`.
    pub fn forward(&self, x: &Matrix) -> Result<[f64; CLASSES]> {
        Ok(softmax(&self.logits(x)?))
    }

    pub fn forward_batch(&self, xs: &[Matrix]) -> Result<Vec<[f64; CLASSES]>> {
        xs.iter().map(|x| self.forward(x)).collect()
    }

    pub fn predict(&self, x: &Matrix) -> Result<Label> {
        let p = self.forward(x)?;
        Ok(if p[0] >= p[1] { Label::Rt } else { Label::Nrt })
    }

    /// Cross-entropy of one item; its parameter gradient is added to `grads`.
    pub fn accumulate_gradients(&self, x: &Matrix, label: Label, grads: &mut [f64]) -> Result<f64> {
        self.check_input(x)?;
        let y = label.class_index();
        let (logits, _) = match self.config {
            NetworkConfig::Dd(c) => self.dd_pass(&c, x, Some((y, grads)))?,
            NetworkConfig::V(c) => self.v_pass(&c, x, Some((y, grads)))?,
        };
        Ok(cross_entropy(&logits, y))
    }

    /// Shared forward (and optional backward) pass of the DD network.
    fn dd_pass(&self, c: &DdConfig, x: &Matrix, backward: Option<(usize, &mut [f64])>) -> Result<([f64; CLASSES], ())> {
        let h = c.hidden;
        let dims = LstmDims::new(1, h);
        let n_bi = 2 * dims.param_count();
        let zlen = c.input_width * 2 * h;
        let p = &self.params;
        let (w1, rest) = p[n_bi..].split_at(c.integration * zlen);
        let (b1, rest) = rest.split_at(c.integration);
        let (w2, b2) = rest.split_at(CLASSES * c.integration);

        let channels: Vec<Vec<f64>> = (0..c.input_width).map(|ch| x.column(ch)).collect();
        let mut traces = Vec::with_capacity(c.input_width);
        let mut z = Vec::with_capacity(zlen);
        for xs in &channels {
            let tr = bi_forward(dims, &p[..n_bi], xs)?;
            z.extend(bi_readout(&tr, c.readout, h));
            traces.push(tr);
        }
        let pre = affine(w1, b1, &z);
        let act: Vec<f64> = pre.iter().map(|v| v.max(0.0)).collect();
        let out = affine(w2, b2, &act);
        let logits = [out[0], out[1]];
        if !(logits[0].is_finite() && logits[1].is_finite()) {
            return Err(Error::Numeric {
                step: x.rows(),
                what: "output logits".into(),
            });
        }

        if let Some((y, grads)) = backward {
            let pr = softmax(&logits);
            let dlogits: Vec<f64> = (0..CLASSES).map(|k| pr[k] - if k == y { 1.0 } else { 0.0 }).collect();
            let (g_bi, g_rest) = grads.split_at_mut(n_bi);
            let (gw1, g_rest) = g_rest.split_at_mut(c.integration * zlen);
            let (gb1, g_rest) = g_rest.split_at_mut(c.integration);
            let (gw2, gb2) = g_rest.split_at_mut(CLASSES * c.integration);
            let dact = affine_backward(w2, &act, &dlogits, gw2, gb2);
            let dpre: Vec<f64> = dact
                .iter()
                .zip(&pre)
                .map(|(g, v)| if *v > 0.0 { *g } else { 0.0 })
                .collect();
            let dz = affine_backward(w1, &z, &dpre, gw1, gb1);
            for (ch, (tr, xs)) in traces.iter().zip(&channels).enumerate() {
                let g = &dz[ch * 2 * h..(ch + 1) * 2 * h];
                let (df, db) = bi_readout_grad(tr, c.readout, h, g);
                bi_backward(dims, &p[..n_bi], xs, tr, &df, &db, g_bi, None);
            }
        }
        Ok((logits, ()))
    }

    fn v_pass(&self, c: &VConfig, x: &Matrix, backward: Option<(usize, &mut [f64])>) -> Result<([f64; CLASSES], ())> {
        let [h1, h2] = c.hidden;
        let d1 = LstmDims::new(c.input_width, h1);
        let d2 = LstmDims::new(2 * h1, h2);
        let n1 = 2 * d1.param_count();
        let n2 = 2 * d2.param_count();
        let p = &self.params;
        let (wo, bo) = p[n1 + n2..].split_at(CLASSES * 2 * h2);

        let xs = x.as_slice();
        let tr1 = bi_forward(d1, &p[..n1], xs)?;
        let ys = bi_sequence(&tr1, h1);
        let tr2 = bi_forward(d2, &p[n1..n1 + n2], &ys)?;
        let r = bi_readout(&tr2, c.readout, h2);
        let out = affine(wo, bo, &r);
        let logits = [out[0], out[1]];
        if !(logits[0].is_finite() && logits[1].is_finite()) {
            return Err(Error::Numeric {
                step: x.rows(),
                what: "output logits".into(),
            });
        }

        if let Some((y, grads)) = backward {
            let pr = softmax(&logits);
            let dlogits: Vec<f64> = (0..CLASSES).map(|k| pr[k] - if k == y { 1.0 } else { 0.0 }).collect();
            let (g1, rest) = grads.split_at_mut(n1);
            let (g2, rest) = rest.split_at_mut(n2);
            let (gwo, gbo) = rest.split_at_mut(CLASSES * 2 * h2);
            let dr = affine_backward(wo, &r, &dlogits, gwo, gbo);
            let (df2, db2) = bi_readout_grad(&tr2, c.readout, h2, &dr);
            let mut dys = vec![0.0; ys.len()];
            bi_backward(d2, &p[n1..n1 + n2], &ys, &tr2, &df2, &db2, g2, Some(&mut dys));
            let steps = x.rows();
            let mut df1 = vec![0.0; steps * h1];
            let mut db1 = vec![0.0; steps * h1];
            for t in 0..steps {
                df1[t * h1..(t + 1) * h1].copy_from_slice(&dys[t * 2 * h1..t * 2 * h1 + h1]);
                db1[t * h1..(t + 1) * h1].copy_from_slice(&dys[t * 2 * h1 + h1..(t + 1) * 2 * h1]);
            }
            bi_backward(d1, &p[..n1], xs, &tr1, &df1, &db1, g1, None);
        }
        Ok((logits, ()))
    }
}

/// Mean cross-entropy over a batch and its gradient w.r.t. every parameter.
pub fn loss_and_gradients(net: &Network, batch: &[(&Matrix, Label)]) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Empty("gradient batch".into()));
    }
    let mut grads = vec![0.0; net.param_count()];
    let mut loss = 0.0;
    for (x, y) in batch {
        loss += net.accumulate_gradients(x, *y, &mut grads)?;
    }
    let scale = 1.0 / batch.len() as f64;
    grads.iter_mut().for_each(|g| *g *= scale);
    let loss = loss * scale;
    if !loss.is_finite() {
        return Err(Error::Numeric {
            step: 0,
            what: "batch loss".into(),
        });
    }
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_input(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut r = rng(seed);
        Matrix::from_vec(
            rows,
            cols,
            (0..rows * cols).map(|_| r.random_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn count_params_matches_layout_and_init() {
        for cfg in [
            NetworkConfig::default_for(Architecture::Dd, 29),
            NetworkConfig::default_for(Architecture::V, 29),
            NetworkConfig::default_for(Architecture::Dd, 51),
        ] {
            let n: usize = cfg.tensor_layout().iter().map(|t| t.1).sum();
            assert_eq!(n, count_params(&cfg));
            assert_eq!(Network::init(cfg, &mut rng(0)).unwrap().param_count(), n);
        }
    }

    #[test]
    fn default_sizes_near_published_counts() {
        let dd = count_params(&NetworkConfig::default_for(Architecture::Dd, 29));
        let v = count_params(&NetworkConfig::default_for(Architecture::V, 29));
        assert_eq!(dd, 899);
        assert_eq!(v, 106_922);
        assert!((dd as f64 / 924.0 - 1.0).abs() < 0.05);
        assert!((v as f64 / 105_897.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn bidirectional_cell_count_doubles() {
        let dims = LstmDims::new(1, 2);
        assert_eq!(2 * dims.param_count(), 64);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let cfg = NetworkConfig::default_for(Architecture::Dd, 29);
        let net = Network::init(cfg, &mut rng(1)).unwrap();
        let p = net.forward(&random_input(120, 29, 2)).unwrap();
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        assert!(p[0] > 0.0 && p[1] > 0.0);
    }

    #[test]
    fn zero_input_and_zero_biases_is_uniform() {
        let cfg = NetworkConfig::Dd(DdConfig {
            input_width: 4,
            hidden: 3,
            integration: 5,
            readout: Readout::Final,
        });
        let mut net = Network::init(cfg, &mut rng(3)).unwrap();
        let mut offset = 0;
        for (name, len, fi, fo) in cfg.tensor_layout() {
            if fi + fo == 0 || name.starts_with("encoder") {
                // zero recurrent weights too, so every hidden state is zero
                net.params[offset..offset + len].iter_mut().for_each(|v| *v = 0.0);
            }
            offset += len;
        }
        let p = net.forward(&Matrix::zeros(10, 4)).unwrap();
        assert_eq!(p, [0.5, 0.5]);
    }

    #[test]
    fn palindrome_gives_equal_directions() {
        let dims = LstmDims::new(2, 3);
        let mut r = rng(4);
        let half: Vec<f64> = (0..dims.param_count()).map(|_| r.random_range(-0.5..0.5)).collect();
        let params: Vec<f64> = half.iter().chain(half.iter()).copied().collect();
        let xs = [0.1, 0.2, -0.3, 0.7, 0.5, 0.5, -0.3, 0.7, 0.1, 0.2];
        let out = bidirectional_encode(dims, &params, &xs, Readout::Final).unwrap();
        for k in 0..3 {
            assert!((out[k] - out[3 + k]).abs() < 1e-15);
        }
        assert_eq!(out.len(), 6);
        let single = bidirectional_encode(dims, &params, &xs[..2], Readout::Final).unwrap();
        assert_eq!(single[..3], single[3..]);
    }

    #[test]
    fn v_forward_is_deterministic_and_order_preserving() {
        let cfg = NetworkConfig::V(VConfig {
            input_width: 51,
            hidden: [4, 3],
            readout: Readout::Final,
        });
        let net = Network::init(cfg, &mut rng(5)).unwrap();
        let xs: Vec<Matrix> = (0..3).map(|s| random_input(120, 51, 10 + s)).collect();
        let batch = net.forward_batch(&xs).unwrap();
        for (x, p) in xs.iter().zip(&batch) {
            let again = net.forward(x).unwrap();
            assert_eq!(again, *p);
            assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let net = Network::init(NetworkConfig::default_for(Architecture::Dd, 29), &mut rng(0)).unwrap();
        assert!(net.forward(&Matrix::zeros(10, 28)).is_err());
        assert!(net.forward(&Matrix::zeros(0, 29)).is_err());
    }

    #[test]
    fn loss_reference_values() {
        assert!((cross_entropy(&[0.0, 0.0], 0) - 2f64.ln()).abs() < 1e-15);
        assert!(cross_entropy(&[50.0, -50.0], 0) < 1e-40);
    }

    #[test]
    fn dd_is_equivariant_to_channel_permutation() {
        let cfg = DdConfig {
            input_width: 3,
            hidden: 2,
            integration: 4,
            readout: Readout::Final,
        };
        let net = Network::init(NetworkConfig::Dd(cfg), &mut rng(6)).unwrap();
        let x = random_input(15, 3, 7);
        let perm = [2usize, 0, 1];
        let mut xp = Matrix::zeros(15, 3);
        for t in 0..15 {
            for (new, &old) in perm.iter().enumerate() {
                xp.set(t, new, x.get(t, old));
            }
        }
        let mut permuted = net.clone();
        let n_bi = 2 * LstmDims::new(1, 2).param_count();
        let block = 2 * cfg.hidden;
        let zlen = cfg.input_width * block;
        for r in 0..cfg.integration {
            for (new, &old) in perm.iter().enumerate() {
                for k in 0..block {
                    permuted.params[n_bi + r * zlen + new * block + k] = net.params[n_bi + r * zlen + old * block + k];
                }
            }
        }
        assert_eq!(net.forward(&x).unwrap(), permuted.forward(&xp).unwrap());
    }

    fn max_rel_error(net: &Network, batch: &[(&Matrix, Label)]) -> f64 {
        let (_, analytic) = loss_and_gradients(net, batch).unwrap();
        let mut worst: f64 = 0.0;
        for (k, &g) in analytic.iter().enumerate() {
            let mut plus = net.clone();
            plus.params[k] += 1e-5;
            let mut minus = net.clone();
            minus.params[k] -= 1e-5;
            let numeric =
                (loss_and_gradients(&plus, batch).unwrap().0 - loss_and_gradients(&minus, batch).unwrap().0) / 2e-5;
            let rel = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        let configs = [
            NetworkConfig::Dd(DdConfig {
                input_width: 3,
                hidden: 2,
                integration: 3,
                readout: Readout::Final,
            }),
            NetworkConfig::V(VConfig {
                input_width: 2,
                hidden: [3, 2],
                readout: Readout::Mean,
            }),
        ];
        for (s, cfg) in configs.into_iter().enumerate() {
            let net = Network::init(cfg, &mut rng(20 + s as u64)).unwrap();
            let x1 = random_input(6, cfg.input_width(), 30 + s as u64);
            let x2 = random_input(4, cfg.input_width(), 40 + s as u64);
            let err = max_rel_error(&net, &[(&x1, Label::Rt), (&x2, Label::Nrt)]);
            assert!(err < 1e-4, "{cfg:?}: {err}");
        }
    }
}
