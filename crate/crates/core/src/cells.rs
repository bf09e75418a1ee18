//! Node transformation functions: the leaf LSTM, the S-LSTM composition of
//! two children, and the attentive non-leaf function (ANF).

use crate::attention::{attend, ScoreMode, ScoreParams};
use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::params::{Initializer, ParamId, ParamStore};
use crate::scalar::Scalar;

/// Hidden vector and memory cell of one tree node, as plain values.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeState<T> {
    pub h: Vec<T>,
    pub c: Vec<T>,
}

/// Hidden vector and memory cell of one tree node inside a graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateVar {
    pub h: Var,
    pub c: Var,
}

impl StateVar {
    pub fn values<T: Scalar>(&self, g: &Graph<'_, T>) -> NodeState<T> {
        NodeState {
            h: g.data(self.h).to_vec(),
            c: g.data(self.c).to_vec(),
        }
    }

    pub fn zeros<T: Scalar>(g: &mut Graph<'_, T>, k: usize) -> Result<Self> {
        let z = g.zeros(k)?;
        Ok(StateVar { h: z, c: z })
    }
}

/// `Σ W_i x_i + b`.
fn affine<T: Scalar>(g: &mut Graph<'_, T>, terms: &[(ParamId, Var)], bias: ParamId) -> Result<Var> {
    let mut acc = g.param(bias);
    for &(w, x) in terms {
        let w = g.param(w);
        let wx = g.matvec(w, x)?;
        acc = g.add(acc, wx)?;
    }
    Ok(acc)
}

fn check_len<T: Scalar>(g: &Graph<'_, T>, op: &'static str, v: Var, k: usize) -> Result<()> {
    if g.shape(v) != [k] {
        return Err(Error::shape(op, g.shape(v), &[k]));
    }
    Ok(())
}

/// Standard LSTM over `[x; h_prev]` with one bias per gate.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    pub k_in: usize,
    pub k: usize,
    /// Input weights `[k, k_in]` for the input, forget, output and candidate gates.
    pub wx: [ParamId; 4],
    /// Recurrent weights `[k, k]`, same gate order.
    pub wh: [ParamId; 4],
    pub b: [ParamId; 4],
}

/// Parameters of the leaf transformation when it is an LSTM.
pub type LeafLstmParams = LstmParams;

const GATES: [&str; 4] = ["i", "f", "o", "g"];

impl LstmParams {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        init: &mut Initializer,
        prefix: &str,
        k_in: usize,
        k: usize,
    ) -> Result<Self> {
        let mut wx = Vec::new();
        let mut wh = Vec::new();
        let mut b = Vec::new();
        for gate in GATES {
            wx.push(init.weight(store, &format!("{prefix}.wx_{gate}"), k, k_in)?);
            wh.push(init.weight(store, &format!("{prefix}.wh_{gate}"), k, k)?);
            let fill = if gate == "f" { 1.0 } else { 0.0 };
            b.push(init.bias(store, &format!("{prefix}.b_{gate}"), k, fill)?);
        }
        Ok(LstmParams {
            k_in,
            k,
            wx: wx.try_into().expect("four gates"),
            wh: wh.try_into().expect("four gates"),
            b: b.try_into().expect("four gates"),
        })
    }
}

/// One LSTM step. Start sequences from [`StateVar::zeros`].
pub fn lstm_leaf_step<T: Scalar>(g: &mut Graph<'_, T>, p: &LstmParams, x: Var, prev: StateVar) -> Result<StateVar> {
    check_len(g, "lstm_leaf_step", x, p.k_in)?;
    check_len(g, "lstm_leaf_step", prev.h, p.k)?;
    check_len(g, "lstm_leaf_step", prev.c, p.k)?;
    let mut pre = [x; 4];
    for (j, slot) in pre.iter_mut().enumerate() {
        *slot = affine(g, &[(p.wx[j], x), (p.wh[j], prev.h)], p.b[j])?;
    }
    let i = g.sigmoid(pre[0]);
    let f = g.sigmoid(pre[1]);
    let o = g.sigmoid(pre[2]);
    let cand = g.tanh(pre[3]);
    let keep = g.mul(f, prev.c)?;
    let write = g.mul(i, cand)?;
    let c = g.add(keep, write)?;
    let tc = g.tanh(c);
    let h = g.mul(o, tc)?;
    Ok(StateVar { h, c })
}

/// S-LSTM weights `W1..W18` (without `W17`, which the composition never
/// uses) and the five gate biases.
#[derive(Clone, Debug, PartialEq)]
pub struct SLstmParams {
    pub k: usize,
    /// `W1..W4` on `h^l, h^r, c^l, c^r`.
    pub input: [ParamId; 4],
    /// `W5..W8`.
    pub forget_left: [ParamId; 4],
    /// `W9..W12`.
    pub forget_right: [ParamId; 4],
    /// `W13, W14` on `h^l, h^r`.
    pub candidate: [ParamId; 2],
    /// `W15, W16` on `h^l, h^r` and `W18` on the new cell.
    pub output: [ParamId; 3],
    pub b_i: ParamId,
    pub b_fl: ParamId,
    pub b_fr: ParamId,
    pub b_c: ParamId,
    pub b_o: ParamId,
}

impl SLstmParams {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, init: &mut Initializer, prefix: &str, k: usize) -> Result<Self> {
        let mut w = |n: usize| init.weight(store, &format!("{prefix}.w{n}"), k, k);
        let input = [w(1)?, w(2)?, w(3)?, w(4)?];
        let forget_left = [w(5)?, w(6)?, w(7)?, w(8)?];
        let forget_right = [w(9)?, w(10)?, w(11)?, w(12)?];
        let candidate = [w(13)?, w(14)?];
        let output = [w(15)?, w(16)?, w(18)?];
        let mut b = |name: &str, fill: f64| init.bias(store, &format!("{prefix}.b_{name}"), k, fill);
        Ok(SLstmParams {
            k,
            input,
            forget_left,
            forget_right,
            candidate,
            output,
            b_i: b("i", 0.0)?,
            b_fl: b("fl", 1.0)?,
            b_fr: b("fr", 1.0)?,
            b_c: b("c", 0.0)?,
            b_o: b("o", 0.0)?,
        })
    }
}

/// Gate activations of one S-LSTM composition, for inspection.
#[derive(Clone, Copy, Debug)]
pub struct SLstmGates {
    pub input: Var,
    pub forget_left: Var,
    pub forget_right: Var,
    pub output: Var,
    pub state: StateVar,
}

/// Composes two children into a parent state, exposing the gates.
pub fn slstm_gates<T: Scalar>(
    g: &mut Graph<'_, T>,
    p: &SLstmParams,
    left: StateVar,
    right: StateVar,
) -> Result<SLstmGates> {
    for v in [left.h, left.c, right.h, right.c] {
        check_len(g, "slstm_compose", v, p.k)?;
    }
    let children = [left.h, right.h, left.c, right.c];
    let zip4 = |ws: &[ParamId; 4]| -> Vec<(ParamId, Var)> { ws.iter().copied().zip(children).collect() };

    let i = affine(g, &zip4(&p.input), p.b_i)?;
    let i = g.sigmoid(i);
    let fl = affine(g, &zip4(&p.forget_left), p.b_fl)?;
    let fl = g.sigmoid(fl);
    let fr = affine(g, &zip4(&p.forget_right), p.b_fr)?;
    let fr = g.sigmoid(fr);

    let cand = affine(g, &[(p.candidate[0], left.h), (p.candidate[1], right.h)], p.b_c)?;
    let cand = g.tanh(cand);
    let keep_l = g.mul(fl, left.c)?;
    let keep_r = g.mul(fr, right.c)?;
    let write = g.mul(i, cand)?;
    let c = g.add_all(&[keep_l, keep_r, write])?;

    let o = affine(g, &[(p.output[0], left.h), (p.output[1], right.h), (p.output[2], c)], p.b_o)?;
    let o = g.sigmoid(o);
    let tc = g.tanh(c);
    let h = g.mul(o, tc)?;
    Ok(SLstmGates {
        input: i,
        forget_left: fl,
        forget_right: fr,
        output: o,
        state: StateVar { h, c },
    })
}

pub fn slstm_compose<T: Scalar>(g: &mut Graph<'_, T>, p: &SLstmParams, left: StateVar, right: StateVar) -> Result<StateVar> {
    Ok(slstm_gates(g, p, left, right)?.state)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnfParams {
    pub k: usize,
    pub w1: ParamId,
    pub score: ScoreParams,
}

impl AnfParams {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        init: &mut Initializer,
        prefix: &str,
        k: usize,
        mode: ScoreMode,
    ) -> Result<Self> {
        Ok(AnfParams {
            k,
            w1: init.weight(store, &format!("{prefix}.w1"), k, k)?,
            score: ScoreParams::new(store, init, prefix, k, mode)?,
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct AnfOutput {
    pub h: Var,
    /// Two-point distribution over `[left, right]`.
    pub weights: Var,
}

/// Attentive composition of two children with respect to the query `q`.
pub fn anf_compose<T: Scalar>(
    g: &mut Graph<'_, T>,
    p: &AnfParams,
    left_h: Var,
    right_h: Var,
    q: Var,
) -> Result<AnfOutput> {
    for v in [left_h, right_h, q] {
        check_len(g, "anf_compose", v, p.k)?;
    }
    let s = g.concat_columns(&[left_h, right_h])?;
    let (weights, z) = attend(g, s, q, &p.score)?;
    let w1 = g.param(p.w1);
    let pre = g.matvec(w1, z)?;
    Ok(AnfOutput {
        h: g.relu(pre),
        weights,
    })
}
