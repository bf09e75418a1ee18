use crate::attention::{global_attention, tree_attention, GlobalAttnParams, TreeAttnParams};
use crate::autodiff::{Graph, Var};
use crate::cells::{lstm_leaf_step, LstmParams, StateVar};
use crate::error::{Error, Result};
use crate::params::{Initializer, ParamId, ParamStore};
use crate::scalar::Scalar;

use super::config::{AttentionMode, ModelConfig};
use super::encoder::EncodedTree;

/// Attention over a premise tree: global or tree-local.
#[derive(Clone, Debug)]
pub enum TreeAttn {
    Global(GlobalAttnParams),
    Tree(TreeAttnParams),
}

/// Query recurrence for node-by-node attention: `q_s = tanh(Wh h_s + Wr r_{s-1})`.
#[derive(Clone, Debug)]
pub struct Carry {
    pub wh: ParamId,
    pub wr: ParamId,
}

#[derive(Clone, Debug)]
pub struct Matcher {
    pub mode: AttentionMode,
    pub attn: TreeAttn,
    pub carry: Option<Carry>,
    /// Aggregation LSTM of the tree-matching models.
    pub agg: Option<LstmParams>,
}

impl Matcher {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, init: &mut Initializer, cfg: &ModelConfig) -> Result<Self> {
        let k = cfg.k;
        let mode = cfg.attention_mode;
        if mode == AttentionMode::None {
            return Err(Error::Config("matcher needs an attention mode".into()));
        }
        let attn = if mode.uses_tree_attention() {
            TreeAttn::Tree(TreeAttnParams::new(store, init, "match.attn", k, cfg.score_mode)?)
        } else {
            TreeAttn::Global(GlobalAttnParams::new(store, init, "match.attn", k, cfg.score_mode)?)
        };
        let carry = if mode.is_node_by_node() {
            Some(Carry {
                wh: init.weight(store, "match.carry.wh", k, k)?,
                wr: init.weight(store, "match.carry.wr", k, k)?,
            })
        } else {
            None
        };
        let agg = if mode.is_node_by_node() {
            None
        } else {
            Some(LstmParams::new(store, init, "match.agg", k, k)?)
        };
        Ok(Matcher { mode, attn, carry, agg })
    }

    /// Width of the matching vector.
    pub fn output_len(&self, k: usize) -> usize {
        if self.mode == AttentionMode::FullTreeMatchGlobal {
            2 * k
        } else {
            k
        }
    }
}

/// One attention read over `target` with query `q`. Returns the output
/// vector and, for global attention, the weights over target nodes.
fn read<T: Scalar>(
    g: &mut Graph<'_, T>,
    attn: &TreeAttn,
    target: &EncodedTree,
    target_cols: Option<Var>,
    q: Var,
) -> Result<(Var, Option<Var>)> {
    match attn {
        TreeAttn::Global(p) => {
            let cols = target_cols.expect("global attention needs stacked nodes");
            let r = global_attention(g, cols, q, p)?;
            Ok((r.output, Some(r.weights)))
        }
        TreeAttn::Tree(p) => {
            let r = tree_attention(g, &target.topology, &target.node_h(), q, p)?;
            Ok((r.root, None))
        }
    }
}

fn stacked<T: Scalar>(g: &mut Graph<'_, T>, attn: &TreeAttn, tree: &EncodedTree) -> Result<Option<Var>> {
    match attn {
        TreeAttn::Global(_) => Ok(Some(g.concat_columns(&tree.node_h())?)),
        TreeAttn::Tree(_) => Ok(None),
    }
}

#[derive(Clone, Debug)]
pub struct NodeByNodeOutput {
    pub output: Var,
    /// Hypothesis node id and, for global attention, the weights over
    /// premise nodes (in node-id order) at that step.
    pub steps: Vec<(usize, Option<Var>)>,
}

/// Visits hypothesis nodes bottom-up, each reading the premise tree with a
/// query carried from the previous read.
pub fn node_by_node_attend<T: Scalar>(
    g: &mut Graph<'_, T>,
    premise: &EncodedTree,
    hypothesis: &EncodedTree,
    m: &Matcher,
) -> Result<NodeByNodeOutput> {
    let carry = m
        .carry
        .as_ref()
        .ok_or_else(|| Error::Config(format!("{} is not a node-by-node matcher", m.mode)))?;
    let cols = stacked(g, &m.attn, premise)?;
    let k = g.value(premise.root.h).len();
    let (wh, wr) = (g.param(carry.wh), g.param(carry.wr));
    let mut r = g.zeros(k)?;
    let mut steps = Vec::new();
    for id in hypothesis.topology.schedule_order() {
        let a = g.matvec(wh, hypothesis.states[id].h)?;
        let b = g.matvec(wr, r)?;
        let pre = g.add(a, b)?;
        let q = g.tanh(pre);
        let (out, weights) = read(g, &m.attn, premise, cols, q)?;
        r = out;
        steps.push((id, weights));
    }
    Ok(NodeByNodeOutput { output: r, steps })
}

fn aggregate<T: Scalar>(
    g: &mut Graph<'_, T>,
    attn: &TreeAttn,
    agg: &LstmParams,
    target: &EncodedTree,
    queries: &EncodedTree,
) -> Result<Var> {
    let cols = stacked(g, attn, target)?;
    let mut state = StateVar::zeros(g, agg.k)?;
    for id in queries.topology.schedule_order() {
        let (a, _) = read(g, attn, target, cols, queries.states[id].h)?;
        state = lstm_leaf_step(g, agg, a, state)?;
    }
    Ok(state.h)
}

/// Attention vectors of every hypothesis node over the premise, folded by
/// the aggregation LSTM; returns its last hidden state.
pub fn tree_match<T: Scalar>(
    g: &mut Graph<'_, T>,
    premise: &EncodedTree,
    hypothesis: &EncodedTree,
    m: &Matcher,
) -> Result<Var> {
    let agg = m
        .agg
        .as_ref()
        .ok_or_else(|| Error::Config(format!("{} is not a tree-matching matcher", m.mode)))?;
    aggregate(g, &m.attn, agg, premise, hypothesis)
}

/// Tree matching in both directions with shared attention and aggregation
/// parameters; the two final states are concatenated.
pub fn full_tree_match<T: Scalar>(
    g: &mut Graph<'_, T>,
    premise: &EncodedTree,
    hypothesis: &EncodedTree,
    m: &Matcher,
) -> Result<Var> {
    let forward = tree_match(g, premise, hypothesis, m)?;
    let backward = tree_match(g, hypothesis, premise, m)?;
    g.concat(&[forward, backward])
}
