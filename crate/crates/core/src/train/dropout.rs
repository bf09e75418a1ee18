use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Forward-pass mode. Training carries the RNG that draws dropout masks.
pub enum Mode<'r> {
    Train(&'r mut ChaCha8Rng),
    Eval,
}

impl Mode<'_> {
    pub fn is_train(&self) -> bool {
        matches!(self, Mode::Train(_))
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidInput(format!("dropout rate must be in [0, 1), got {rate}")));
    }
    Ok(())
}

/// Inverted-dropout keep mask: each entry is 0 with probability `rate`,
/// otherwise `1 / (1 - rate)`.
fn mask<T: Scalar>(len: usize, rate: f64, rng: &mut ChaCha8Rng) -> Vec<T> {
    let keep = T::lit(1.0 / (1.0 - rate));
    (0..len)
        .map(|_| if rng.gen::<f64>() < rate { T::zero() } else { keep })
        .collect()
}

/// Dropout on plain values. Identity in eval mode or at rate 0.
pub fn apply_dropout<T: Scalar>(x: &[T], rate: f64, mode: &mut Mode<'_>) -> Result<Vec<T>> {
    check_rate(rate)?;
    match mode {
        Mode::Train(rng) if rate > 0.0 => {
            let m: Vec<T> = mask(x.len(), rate, rng);
            Ok(x.iter().zip(m).map(|(&v, m)| v * m).collect())
        }
        _ => Ok(x.to_vec()),
    }
}

/// Dropout recorded in a graph; returns `v` itself when inactive.
pub fn dropout_var<T: Scalar>(g: &mut Graph<'_, T>, v: Var, rate: f64, mode: &mut Mode<'_>) -> Result<Var> {
    check_rate(rate)?;
    match mode {
        Mode::Train(rng) if rate > 0.0 => {
            let m = mask(g.value(v).len(), rate, rng);
            g.mul_const(v, m)
        }
        _ => Ok(v),
    }
}
