//! Row-major time-by-channel matrices and their flat binary container.
//!
//! Binary layout (little-endian): 8-byte magic `RTTENS01`, then three `u64`
//! dimensions `(items, rows, cols)`, then `items * rows * cols` `f64` values,
//! item-major then row-major.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 8] = b"RTTENS01";

/// `rows` time steps by `cols` channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!("{rows}x{cols}"), format!("{} values", data.len())));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::shape(
                    format!("{cols} columns"),
                    format!("{} in row {i}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Rows `start..end` as a new matrix.
    pub fn slice_rows(&self, start: usize, end: usize) -> Matrix {
        Matrix {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }
}

pub fn write_tensor_set(items: &[Matrix], mut w: impl Write) -> Result<()> {
    let (rows, cols) = items.first().map(|m| (m.rows, m.cols)).unwrap_or((0, 0));
    if let Some(bad) = items.iter().find(|m| m.rows != rows || m.cols != cols) {
        return Err(Error::shape(
            format!("{rows}x{cols}"),
            format!("{}x{}", bad.rows, bad.cols),
        ));
    }
    let io = |e| Error::io("<tensor writer>", e);
    w.write_all(TENSOR_MAGIC).map_err(io)?;
    for d in [items.len(), rows, cols] {
        w.write_all(&(d as u64).to_le_bytes()).map_err(io)?;
    }
    let mut buf = Vec::with_capacity(rows * cols * 8);
    for m in items {
        buf.clear();
        for v in &m.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf).map_err(io)?;
    }
    Ok(())
}

pub fn read_tensor_set(mut r: impl Read) -> Result<Vec<Matrix>> {
    let io = |e| Error::io("<tensor reader>", e);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != TENSOR_MAGIC {
        return Err(Error::Format("bad tensor magic".into()));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        let mut b = [0u8; 8];
        r.read_exact(&mut b).map_err(io)?;
        *d = u64::from_le_bytes(b) as usize;
    }
    let [n, rows, cols] = dims;
    let mut out = Vec::with_capacity(n);
    let mut buf = vec![0u8; rows * cols * 8];
    for _ in 0..n {
        r.read_exact(&mut buf).map_err(io)?;
        let data = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        out.push(Matrix { rows, cols, data });
    }
    Ok(out)
}
