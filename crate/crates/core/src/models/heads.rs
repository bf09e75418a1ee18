use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::params::{Initializer, ParamId, ParamStore};
use crate::scalar::Scalar;

/// Two-layer classifier: `W2 ReLU(W1 x + b1) + b2`, returning logits.
#[derive(Clone, Debug)]
pub struct MlpHead {
    pub n_in: usize,
    pub n_out: usize,
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

impl MlpHead {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        init: &mut Initializer,
        prefix: &str,
        n_in: usize,
        hidden: usize,
        n_out: usize,
    ) -> Result<Self> {
        Ok(MlpHead {
            n_in,
            n_out,
            w1: init.weight(store, &format!("{prefix}.w1"), hidden, n_in)?,
            b1: init.bias(store, &format!("{prefix}.b1"), hidden, 0.0)?,
            w2: init.weight(store, &format!("{prefix}.w2"), n_out, hidden)?,
            b2: init.bias(store, &format!("{prefix}.b2"), n_out, 0.0)?,
        })
    }

    pub fn logits<T: Scalar>(&self, g: &mut Graph<'_, T>, x: Var) -> Result<Var> {
        if g.value(x).len() != self.n_in {
            return Err(Error::shape("mlp_head", g.shape(x), &[self.n_in]));
        }
        let (w1, b1, w2, b2) = (g.param(self.w1), g.param(self.b1), g.param(self.w2), g.param(self.b2));
        let a = g.matvec(w1, x)?;
        let a = g.add(a, b1)?;
        let h = g.relu(a);
        let o = g.matvec(w2, h)?;
        g.add(o, b2)
    }
}

/// `[a; b; |a - b|; a * b]`.
pub fn pair_features<T: Scalar>(g: &mut Graph<'_, T>, a: Var, b: Var) -> Result<Var> {
    let diff = g.sub(a, b)?;
    let diff = g.abs(diff);
    let prod = g.mul(a, b)?;
    g.concat(&[a, b, diff, prod])
}

/// Logits over the three inference classes from a feature vector: pair
/// features for sentence encoders, the matching vector for matching models.
pub fn nli_head<T: Scalar>(g: &mut Graph<'_, T>, feature: Var, head: &MlpHead) -> Result<Var> {
    if head.n_out != 3 {
        return Err(Error::Config(format!("inference head has {} outputs, expected 3", head.n_out)));
    }
    head.logits(g, feature)
}

/// The relevance logit `o` from pair features; `p = sigmoid(o)`.
pub fn qa_head<T: Scalar>(g: &mut Graph<'_, T>, feature: Var, head: &MlpHead) -> Result<Var> {
    if head.n_out != 1 {
        return Err(Error::Config(format!("relevance head has {} outputs, expected 1", head.n_out)));
    }
    head.logits(g, feature)
}

/// Sentiment logits over 2 or 5 classes from the root vector.
pub fn sst_head<T: Scalar>(g: &mut Graph<'_, T>, root_h: Var, head: &MlpHead, n_classes: usize) -> Result<Var> {
    if !matches!(n_classes, 2 | 5) {
        return Err(Error::Config(format!("sentiment head needs 2 or 5 classes, got {n_classes}")));
    }
    if head.n_out != n_classes {
        return Err(Error::Config(format!("head has {} outputs, expected {n_classes}", head.n_out)));
    }
    head.logits(g, root_h)
}
