//! Long short-term memory cell, unrolled forward and backward through time.
//!
//! Parameters of one direction live in a flat slice:
//! `W` (4h × d, row-major), `U` (4h × h), `b` (4h), with gate rows ordered
//! input, forget, candidate, output.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmDims {
    pub input: usize,
    pub hidden: usize,
}

impl LstmDims {
    pub fn new(input: usize, hidden: usize) -> Self {
        LstmDims { input, hidden }
    }

    /// `4 · (h · (d + h) + h)`
    pub fn param_count(&self) -> usize {
        4 * (self.hidden * (self.input + self.hidden) + self.hidden)
    }

    fn w_len(&self) -> usize {
        4 * self.hidden * self.input
    }

    fn u_len(&self) -> usize {
        4 * self.hidden * self.hidden
    }

    /// Range of the forget-gate biases within the flat slice.
    pub fn forget_bias_range(&self) -> std::ops::Range<usize> {
        let b = self.w_len() + self.u_len();
        b + self.hidden..b + 2 * self.hidden
    }

    /// `(len, fan_in, fan_out)` of the W, U and b tensors.
    pub fn tensors(&self) -> [(usize, usize, usize); 3] {
        let g = 4 * self.hidden;
        [(self.w_len(), self.input, g), (self.u_len(), self.hidden, g), (g, 0, 0)]
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Hidden and cell state.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub hidden: Vec<f64>,
    pub cell: Vec<f64>,
}

impl LstmState {
    pub fn zeros(h: usize) -> Self {
        LstmState {
            hidden: vec![0.0; h],
            cell: vec![0.0; h],
        }
    }
}

/// One recurrence step; `gates` receives the four activated gate vectors.
#[allow(clippy::too_many_arguments)]
fn step_into(
    dims: LstmDims,
    params: &[f64],
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    gates: &mut [f64],
    c_out: &mut [f64],
    h_out: &mut [f64],
) {
    let (d, h) = (dims.input, dims.hidden);
    let (w, rest) = params.split_at(dims.w_len());
    let (u, b) = rest.split_at(dims.u_len());
    for r in 0..4 * h {
        let mut z = b[r];
        let wr = &w[r * d..(r + 1) * d];
        for k in 0..d {
            z += wr[k] * x[k];
        }
        let ur = &u[r * h..(r + 1) * h];
        for k in 0..h {
            z += ur[k] * h_prev[k];
        }
        gates[r] = if (2 * h..3 * h).contains(&r) {
            z.tanh()
        } else {
            sigmoid(z)
        };
    }
    for k in 0..h {
        let (i, f, g, o) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
        let c = f * c_prev[k] + i * g;
        c_out[k] = c;
        h_out[k] = o * c.tanh();
    }
}

/// A single recurrence step from `state` on input `x`.
pub fn recurrent_step(dims: LstmDims, params: &[f64], x: &[f64], state: &LstmState, step: usize) -> Result<LstmState> {
    let h = dims.hidden;
    let mut gates = vec![0.0; 4 * h];
    let mut next = LstmState::zeros(h);
    step_into(
        dims,
        params,
        x,
        &state.hidden,
        &state.cell,
        &mut gates,
        &mut next.cell,
        &mut next.hidden,
    );
    if next.hidden.iter().chain(&next.cell).any(|v| !v.is_finite()) {
        return Err(Error::Numeric {
            step,
            what: "recurrent state".into(),
        });
    }
    Ok(next)
}

/// Activations of one direction over a whole sequence, in processing order.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    pub steps: usize,
    pub reverse: bool,
    gates: Vec<f64>,
    cells: Vec<f64>,
    hiddens: Vec<f64>,
    hidden: usize,
}

impl LstmTrace {
    /// Hidden state after consuming original time index `t`.
    pub fn hidden_at(&self, t: usize) -> &[f64] {
        let s = self.step_of(t);
        &self.hiddens[s * self.hidden..(s + 1) * self.hidden]
    }

    /// Hidden state after the last processing step.
    pub fn final_hidden(&self) -> &[f64] {
        let s = self.steps - 1;
        &self.hiddens[s * self.hidden..(s + 1) * self.hidden]
    }

    /// Original time index of the final processing step.
    pub fn final_time(&self) -> usize {
        if self.reverse {
            0
        } else {
            self.steps - 1
        }
    }

    fn step_of(&self, t: usize) -> usize {
        if self.reverse {
            self.steps - 1 - t
        } else {
            t
        }
    }
}

/// Runs one direction over `xs` (`steps` rows of `dims.input` values,
/// row-major). `reverse` consumes the rows last to first.
pub fn lstm_forward(dims: LstmDims, params: &[f64], xs: &[f64], reverse: bool) -> Result<LstmTrace> {
    let (d, h) = (dims.input, dims.hidden);
    let steps = xs.len() / d;
    if steps == 0 || xs.len() != steps * d {
        return Err(Error::shape(
            format!("rows of width {d}"),
            format!("{} values", xs.len()),
        ));
    }
    let mut trace = LstmTrace {
        steps,
        reverse,
        gates: vec![0.0; steps * 4 * h],
        cells: vec![0.0; steps * h],
        hiddens: vec![0.0; steps * h],
        hidden: h,
    };
    let zeros = vec![0.0; h];
    for s in 0..steps {
        let t = if reverse { steps - 1 - s } else { s };
        let x = &xs[t * d..(t + 1) * d];
        let (prev_c, cur_c) = trace.cells.split_at_mut(s * h);
        let (prev_h, cur_h) = trace.hiddens.split_at_mut(s * h);
        let (hp, cp) = if s == 0 {
            (&zeros[..], &zeros[..])
        } else {
            (&prev_h[(s - 1) * h..], &prev_c[(s - 1) * h..])
        };
        step_into(
            dims,
            params,
            x,
            hp,
            cp,
            &mut trace.gates[s * 4 * h..(s + 1) * 4 * h],
            &mut cur_c[..h],
            &mut cur_h[..h],
        );
        if cur_h[..h].iter().chain(&cur_c[..h]).any(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                step: t,
                what: "recurrent state".into(),
            });
        }
    }
    Ok(trace)
}

/// Backpropagation through time for one direction.
///
/// `dh_ext` holds the loss gradient w.r.t. the hidden state at each original
/// time index (`steps × h`). Parameter gradients are added into `grads`;
/// input gradients, when requested, are added into `dx` (`steps × d`).
pub fn lstm_backward(
    dims: LstmDims,
    params: &[f64],
    xs: &[f64],
    trace: &LstmTrace,
    dh_ext: &[f64],
    grads: &mut [f64],
    mut dx: Option<&mut [f64]>,
) {
    let (d, h) = (dims.input, dims.hidden);
    let (w, rest) = params.split_at(dims.w_len());
    let u = &rest[..dims.u_len()];
    let (gw, grest) = grads.split_at_mut(dims.w_len());
    let (gu, gb) = grest.split_at_mut(dims.u_len());

    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut dpre = vec![0.0; 4 * h];
    let zeros = vec![0.0; h];
    for s in (0..trace.steps).rev() {
        let t = if trace.reverse { trace.steps - 1 - s } else { s };
        let gates = &trace.gates[s * 4 * h..(s + 1) * 4 * h];
        let c = &trace.cells[s * h..(s + 1) * h];
        let (c_prev, h_prev) = if s == 0 {
            (&zeros[..], &zeros[..])
        } else {
            (&trace.cells[(s - 1) * h..s * h], &trace.hiddens[(s - 1) * h..s * h])
        };
        for k in 0..h {
            let (i, f, g, o) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
            let dh = dh_ext[t * h + k] + dh_next[k];
            let tc = c[k].tanh();
            let dc = dh * o * (1.0 - tc * tc) + dc_next[k];
            dpre[k] = dc * g * i * (1.0 - i);
            dpre[h + k] = dc * c_prev[k] * f * (1.0 - f);
            dpre[2 * h + k] = dc * i * (1.0 - g * g);
            dpre[3 * h + k] = dh * tc * o * (1.0 - o);
            dc_next[k] = dc * f;
        }
        let x = &xs[t * d..(t + 1) * d];
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..4 * h {
            let g = dpre[r];
            if g == 0.0 {
                continue;
            }
            gb[r] += g;
            let gwr = &mut gw[r * d..(r + 1) * d];
            for k in 0..d {
                gwr[k] += g * x[k];
            }
            let gur = &mut gu[r * h..(r + 1) * h];
            let ur = &u[r * h..(r + 1) * h];
            for k in 0..h {
                gur[k] += g * h_prev[k];
                dh_next[k] += g * ur[k];
            }
            if let Some(dx) = dx.as_deref_mut() {
                let wr = &w[r * d..(r + 1) * d];
                let dxt = &mut dx[t * d..(t + 1) * d];
                for k in 0..d {
                    dxt[k] += g * wr[k];
                }
            }
        }
    }
}
