use crate::error::{Error, Result};
use crate::params::ParamStore;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Steps taken so far.
    pub t: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &ParamStore<T>, lr: f64) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }
}

/// One bias-corrected Adam update. Nothing changes if any gradient entry is
/// non-finite.
pub fn adam_step<T: Scalar>(params: &mut ParamStore<T>, grads: &[Vec<T>], state: &mut AdamState<T>) -> Result<()> {
    if grads.len() != params.len() || state.m.len() != params.len() {
        return Err(Error::InvalidInput(format!(
            "{} gradients for {} parameters",
            grads.len(),
            params.len()
        )));
    }
    for ((id, p), g) in params.iter().zip(grads) {
        if g.len() != p.value.len() || state.m[id.index()].len() != g.len() {
            return Err(Error::shape("adam_step", &[g.len()], p.value.shape()));
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("gradient of {}", p.name)));
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (T::lit(state.beta1), T::lit(state.beta2));
    let one = T::one();
    let c1 = one - b1.powi(t);
    let c2 = one - b2.powi(t);
    let (lr, eps) = (T::lit(state.lr), T::lit(state.eps));
    let ids: Vec<_> = params.ids().collect();
    for id in ids {
        let i = id.index();
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for (((w, &g), m), v) in params.value_mut(id).iter_mut().zip(&grads[i]).zip(m).zip(v) {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *w -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;
    use crate::params::ParamKind;

    fn store(vals: Vec<f64>) -> ParamStore<f64> {
        let mut s = ParamStore::new();
        s.add("w", ParamKind::Weight, Tensor::vector(vals).unwrap()).unwrap();
        s
    }

    #[test]
    fn first_step_closed_form() {
        let mut p = store(vec![0.5, -1.0]);
        let mut st = AdamState::new(&p, 1e-3);
        adam_step(&mut p, &[vec![1.0, -2.0]], &mut st).unwrap();
        // m_hat = g and v_hat = g^2, so the step is lr * g / (|g| + eps).
        let d0 = 1e-3 * 1.0 / (1.0 + 1e-8);
        let d1 = 1e-3 * 2.0 / (2.0 + 1e-8);
        assert!((p.value(p.ids().next().unwrap()).data()[0] - (0.5 - d0)).abs() < 1e-15);
        assert!((p.value(p.ids().next().unwrap()).data()[1] - (-1.0 + d1)).abs() < 1e-15);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn zero_gradient_and_zero_rate() {
        let mut p = store(vec![0.5, -1.0]);
        let mut st = AdamState::new(&p, 1e-3);
        adam_step(&mut p, &[vec![0.0, 0.0]], &mut st).unwrap();
        assert_eq!(p.value(p.ids().next().unwrap()).data(), &[0.5, -1.0]);
        assert_eq!(st.t, 1);

        let mut st = AdamState::new(&p, 0.0);
        adam_step(&mut p, &[vec![3.0, -7.0]], &mut st).unwrap();
        assert_eq!(p.value(p.ids().next().unwrap()).data(), &[0.5, -1.0]);
    }

    #[test]
    fn non_finite_names_param() {
        let mut p = store(vec![0.5]);
        let mut st = AdamState::new(&p, 1e-3);
        let err = adam_step(&mut p, &[vec![f64::NAN]], &mut st).unwrap_err();
        assert!(err.to_string().contains('w'));
        assert_eq!(st.t, 0);
        assert_eq!(p.value(p.ids().next().unwrap()).data(), &[0.5]);
    }
}
