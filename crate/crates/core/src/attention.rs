//! Attention scoring plus global and tree-structured attention over a tree.

use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::params::{Initializer, ParamId, ParamStore};
use crate::scalar::Scalar;
use crate::tree::TreeTopology;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ScoreMode {
    /// `m = wᵀ ReLU(W1 S + W2 (q ⊗ e))`
    #[default]
    Mlp,
    /// `m = qᵀ S`
    Bilinear,
}

impl ScoreMode {
    pub fn name(self) -> &'static str {
        match self {
            ScoreMode::Mlp => "mlp",
            ScoreMode::Bilinear => "bilinear",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(ScoreMode::Mlp),
            "bilinear" => Ok(ScoreMode::Bilinear),
            _ => Err(Error::Config(format!("unknown score mode {s}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScoreParams {
    Mlp { w1: ParamId, w2: ParamId, w: ParamId },
    Bilinear,
}

impl ScoreParams {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        init: &mut Initializer,
        prefix: &str,
        k: usize,
        mode: ScoreMode,
    ) -> Result<Self> {
        Ok(match mode {
            ScoreMode::Mlp => ScoreParams::Mlp {
                w1: init.weight(store, &format!("{prefix}.score.w1"), k, k)?,
                w2: init.weight(store, &format!("{prefix}.score.w2"), k, k)?,
                w: init.weight(store, &format!("{prefix}.score.w"), 1, k)?,
            },
            ScoreMode::Bilinear => ScoreParams::Bilinear,
        })
    }
}

/// Scores each column of `s` (`[k, d]`) against the query `q` (`[k]`).
pub fn score<T: Scalar>(g: &mut Graph<'_, T>, s: Var, q: Var, p: &ScoreParams) -> Result<Var> {
    let (ss, sq) = (g.shape(s).to_vec(), g.shape(q).to_vec());
    if ss.len() != 2 || sq.len() != 1 || ss[0] != sq[0] {
        return Err(Error::shape("score", &ss, &sq));
    }
    let d = ss[1];
    let row = match p {
        ScoreParams::Mlp { w1, w2, w } => {
            let (w1, w2, w) = (g.param(*w1), g.param(*w2), g.param(*w));
            let ws = g.matmul(w1, s)?;
            // W2 (q ⊗ e) == (W2 q) ⊗ e
            let wq = g.matvec(w2, q)?;
            let wq = g.outer_broadcast(wq, d)?;
            let pre = g.add(ws, wq)?;
            let act = g.relu(pre);
            g.matmul(w, act)?
        }
        ScoreParams::Bilinear => {
            let qt = g.transpose(q)?;
            g.matmul(qt, s)?
        }
    };
    g.reshape(row, &[d])
}

/// Attention weights, the blended vector and the transformed output.
#[derive(Clone, Copy, Debug)]
pub struct AttentionResult {
    pub weights: Var,
    pub blended: Var,
    pub output: Var,
}

/// `m = score(S, q)`, `α = softmax(m)`, `z = S αᵀ`.
pub(crate) fn attend<T: Scalar>(g: &mut Graph<'_, T>, s: Var, q: Var, p: &ScoreParams) -> Result<(Var, Var)> {
    let m = score(g, s, q, p)?;
    let alpha = g.softmax(m)?;
    let z = g.matvec(s, alpha)?;
    Ok((alpha, z))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalAttnParams {
    pub w1: ParamId,
    pub w2: ParamId,
    pub score: ScoreParams,
}

impl GlobalAttnParams {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        init: &mut Initializer,
        prefix: &str,
        k: usize,
        mode: ScoreMode,
    ) -> Result<Self> {
        Ok(GlobalAttnParams {
            w1: init.weight(store, &format!("{prefix}.w1"), k, k)?,
            w2: init.weight(store, &format!("{prefix}.w2"), k, k)?,
            score: ScoreParams::new(store, init, prefix, k, mode)?,
        })
    }
}

/// Attends over all node columns of `node_h` (`[k, 2n-1]`, ordered by node
/// id) with one softmax; output is `ReLU(W1 z + W2 q)`.
pub fn global_attention<T: Scalar>(
    g: &mut Graph<'_, T>,
    node_h: Var,
    q: Var,
    p: &GlobalAttnParams,
) -> Result<AttentionResult> {
    let (weights, blended) = attend(g, node_h, q, &p.score)?;
    let (w1, w2) = (g.param(p.w1), g.param(p.w2));
    let a = g.matvec(w1, blended)?;
    let b = g.matvec(w2, q)?;
    let pre = g.add(a, b)?;
    let output = g.relu(pre);
    Ok(AttentionResult {
        weights,
        blended,
        output,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeAttnParams {
    pub w1: ParamId,
    pub score: ScoreParams,
}

impl TreeAttnParams {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        init: &mut Initializer,
        prefix: &str,
        k: usize,
        mode: ScoreMode,
    ) -> Result<Self> {
        Ok(TreeAttnParams {
            w1: init.weight(store, &format!("{prefix}.w1"), k, k)?,
            score: ScoreParams::new(store, init, prefix, k, mode)?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct TreeAttentionResult {
    /// Per-node vectors after the update, indexed by node id.
    pub nodes: Vec<Var>,
    pub root: Var,
    /// Local weights over `[parent, left, right]` for each internal node.
    pub weights: Vec<Option<Var>>,
}

/// Bottom-up local attention: every internal node, level by level, replaces
/// its vector with `ReLU(W1 z)` where `z` blends itself and its (already
/// updated) children.
pub fn tree_attention<T: Scalar>(
    g: &mut Graph<'_, T>,
    topo: &TreeTopology,
    node_h: &[Var],
    q: Var,
    p: &TreeAttnParams,
) -> Result<TreeAttentionResult> {
    if node_h.len() != topo.n_nodes() {
        return Err(Error::InvalidInput(format!(
            "{} node vectors for a tree of {} nodes",
            node_h.len(),
            topo.n_nodes()
        )));
    }
    let mut nodes = node_h.to_vec();
    let mut weights = vec![None; nodes.len()];
    let w1 = g.param(p.w1);
    for level in topo.bottom_up_schedule().iter().skip(1) {
        for &id in level {
            let Some((l, r)) = topo.node(id)?.children else { continue };
            let s = g.concat_columns(&[nodes[id], nodes[l], nodes[r]])?;
            let (alpha, z) = attend(g, s, q, &p.score)?;
            let pre = g.matvec(w1, z)?;
            nodes[id] = g.relu(pre);
            weights[id] = Some(alpha);
        }
    }
    let root = nodes[topo.root()];
    Ok(TreeAttentionResult { nodes, root, weights })
}
