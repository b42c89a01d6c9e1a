use crate::error::{Error, Result};

/// Heavy-ball SGD: `v ← μ·v − lr·g`, then `p ← p + v`.
pub fn sgd_momentum_step(
    params: &mut [f64],
    grads: &[f64],
    velocity: &mut [f64],
    lr: f64,
    momentum: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != velocity.len() {
        return Err(Error::shape(
            format!("{} grads and velocities", params.len()),
            format!("{} and {}", grads.len(), velocity.len()),
        ));
    }
    for ((p, g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = momentum * *v - lr * g;
        *p += *v;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = vec![1.0, -2.0];
        let mut v = vec![0.0; 2];
        sgd_momentum_step(&mut p, &[0.0, 0.0], &mut v, 0.1, 0.3).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
    }

    #[test]
    fn no_momentum_is_plain_sgd() {
        let mut p = vec![1.0];
        let mut v = vec![5.0];
        sgd_momentum_step(&mut p, &[2.0], &mut v, 0.1, 0.0).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn velocity_reaches_geometric_limit() {
        let (lr, mu, g) = (0.1, 0.3, 1.7);
        let mut p = vec![0.0];
        let mut v = vec![0.0];
        for _ in 0..200 {
            sgd_momentum_step(&mut p, &[g], &mut v, lr, mu).unwrap();
        }
        assert!((v[0] + lr * g / (1.0 - mu)).abs() < 1e-12);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        assert!(sgd_momentum_step(&mut [0.0; 2], &[0.0], &mut [0.0; 2], 0.1, 0.3).is_err());
    }
}
