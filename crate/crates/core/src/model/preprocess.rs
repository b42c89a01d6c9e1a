//! Per-channel standardization and training-time input noise.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Channels whose training spread is at most this are treated as constant.
const CONSTANT_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Divisor per channel: the population standard deviation, or 1 for
    /// constant channels.
    pub scale: Vec<f64>,
    pub constant: Vec<bool>,
}

impl Standardizer {
    /// Population statistics over every frame of every item.
    pub fn fit<'a>(items: impl IntoIterator<Item = &'a Matrix> + Clone) -> Result<Self> {
        let mut iter = items.clone().into_iter();
        let cols = iter
            .next()
            .map(|m| m.cols())
            .ok_or_else(|| Error::Empty("standardizer training set".into()))?;
        let mut sum = vec![0.0; cols];
        let mut n = 0usize;
        for m in items.clone() {
            if m.cols() != cols {
                return Err(Error::shape(format!("{cols} channels"), m.cols()));
            }
            for r in 0..m.rows() {
                for (s, v) in sum.iter_mut().zip(m.row(r)) {
                    *s += v;
                }
            }
            n += m.rows();
        }
        if n == 0 {
            return Err(Error::Empty("standardizer training frames".into()));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let mut sq = vec![0.0; cols];
        for m in items {
            for r in 0..m.rows() {
                for ((s, v), mu) in sq.iter_mut().zip(m.row(r)).zip(&mean) {
                    *s += (v - mu) * (v - mu);
                }
            }
        }
        let std: Vec<f64> = sq.iter().map(|s| (s / n as f64).sqrt()).collect();
        let constant: Vec<bool> = std.iter().map(|&s| s <= CONSTANT_STD).collect();
        let scale = std
            .iter()
            .zip(&constant)
            .map(|(&s, &c)| if c { 1.0 } else { s })
            .collect();
        Ok(Standardizer { mean, scale, constant })
    }

    pub fn channels(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, m: &Matrix) -> Result<Matrix> {
        if m.cols() != self.channels() {
            return Err(Error::shape(format!("{} channels", self.channels()), m.cols()));
        }
        let mut out = m.clone();
        for r in 0..out.rows() {
            for ((v, mu), s) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - mu) / s;
            }
        }
        Ok(out)
    }

    pub fn apply_all(&self, items: &[Matrix]) -> Result<Vec<Matrix>> {
        items.iter().map(|m| self.apply(m)).collect()
    }
}

/// Adds independent N(0, std²) noise to every scalar. `std == 0` returns an
/// exact copy without consuming randomness.
pub fn inject_noise(m: &Matrix, std: f64, rng: &mut impl Rng) -> Result<Matrix> {
    if std == 0.0 {
        return Ok(m.clone());
    }
    let normal = Normal::new(0.0, std).map_err(|e| Error::Validation(format!("noise std {std}: {e}")))?;
    let mut out = m.clone();
    for v in out.as_mut_slice() {
        *v += normal.sample(rng);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn items() -> Vec<Matrix> {
        vec![
            Matrix::from_rows(&[[1.0, 5.0, 3.0], [2.0, 5.0, -1.0]]).unwrap(),
            Matrix::from_rows(&[[7.0, 5.0, 0.5], [-4.0, 5.0, 9.0], [0.0, 5.0, 2.0]]).unwrap(),
        ]
    }

    #[test]
    fn training_set_becomes_standard() {
        let data = items();
        let s = Standardizer::fit(&data).unwrap();
        let out = s.apply_all(&data).unwrap();
        for c in [0, 2] {
            let vals: Vec<f64> = out.iter().flat_map(|m| m.column(c)).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
            assert!(mean.abs() < 1e-9);
            assert!((var.sqrt() - 1.0).abs() < 1e-6);
        }
        assert_eq!(s.constant, vec![false, true, false]);
        assert!(out.iter().flat_map(|m| m.column(1)).all(|v| v == 0.0));
    }

    #[test]
    fn far_test_values_stay_finite_and_unclipped() {
        let s = Standardizer::fit(&items()).unwrap();
        let far = Matrix::from_rows(&[[1e6, 5.0, -1e6]]).unwrap();
        let out = s.apply(&far).unwrap();
        assert!(out.is_finite());
        assert!(out.get(0, 0) > 1e5 && out.get(0, 2) < -1e5);
    }

    #[test]
    fn empty_fit_rejected() {
        assert!(Standardizer::fit(&Vec::<Matrix>::new()).is_err());
    }

    #[test]
    fn zero_noise_is_identity() {
        let m = items().remove(0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(inject_noise(&m, 0.0, &mut rng).unwrap(), m);
    }

    #[test]
    fn noise_variance_matches() {
        let m = Matrix::zeros(1000, 1000);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let out = inject_noise(&m, 0.1, &mut rng).unwrap();
        let n = out.as_slice().len() as f64;
        let mean = out.as_slice().iter().sum::<f64>() / n;
        let var = out.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!((var / 0.01 - 1.0).abs() < 0.01);
    }
}
