use crate::autodiff::{Graph, Var};
use crate::cells::{anf_compose, lstm_leaf_step, slstm_compose, AnfParams, LstmParams, SLstmParams, StateVar};
use crate::error::{Error, Result};
use crate::params::{Initializer, ParamId, ParamStore};
use crate::scalar::Scalar;
use crate::train::{dropout_var, Mode};
use crate::tree::TreeTopology;

use super::config::{LeafMode, ModelConfig, NonLeafMode, TreeShape};

/// Leaf transformation.
#[derive(Clone, Debug)]
pub enum LeafFn {
    /// Embedding used directly, mapped to width `k` when `k_in != k`.
    Embedding { proj: Option<ParamId> },
    Lstm(LstmParams),
}

/// Non-leaf composition.
#[derive(Clone, Debug)]
pub enum NodeFn {
    SLstm(SLstmParams),
    Anf(AnfParams),
}

#[derive(Clone, Debug)]
pub struct Encoder {
    pub k: usize,
    pub k_in: usize,
    pub leaf: LeafFn,
    pub node: NodeFn,
    pub shape: TreeShape,
    pub dropout_input: f64,
}

impl Encoder {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        init: &mut Initializer,
        prefix: &str,
        cfg: &ModelConfig,
        nonleaf: NonLeafMode,
    ) -> Result<Self> {
        let (k, k_in) = (cfg.k, cfg.k_in);
        let leaf = match cfg.leaf_mode {
            LeafMode::None => LeafFn::Embedding {
                proj: if k_in != k {
                    Some(init.weight(store, &format!("{prefix}.leaf.proj"), k, k_in)?)
                } else {
                    None
                },
            },
            LeafMode::Lstm => LeafFn::Lstm(LstmParams::new(store, init, &format!("{prefix}.leaf"), k_in, k)?),
        };
        let node = match nonleaf {
            NonLeafMode::SLstm => NodeFn::SLstm(SLstmParams::new(store, init, &format!("{prefix}.slstm"), k)?),
            NonLeafMode::Anf => NodeFn::Anf(AnfParams::new(store, init, &format!("{prefix}.anf"), k, cfg.score_mode)?),
        };
        Ok(Encoder {
            k,
            k_in,
            leaf,
            node,
            shape: cfg.tree_shape,
            dropout_input: cfg.dropout_input,
        })
    }
}

/// All node states of one encoded sentence.
#[derive(Clone, Debug)]
pub struct EncodedTree {
    pub topology: TreeTopology,
    /// Indexed by node id.
    pub states: Vec<StateVar>,
    pub root: StateVar,
    /// Final leaf-LSTM state, when the encoder has one.
    pub leaf_final: Option<StateVar>,
}

impl EncodedTree {
    pub fn node_h(&self) -> Vec<Var> {
        self.states.iter().map(|s| s.h).collect()
    }
}

/// Encodes one embedded sentence (rows of width `k_in`, no padding).
///
/// `q` is the external query for ANF composition; `init` seeds the leaf LSTM.
pub fn encode<T: Scalar>(
    g: &mut Graph<'_, T>,
    enc: &Encoder,
    tokens: &[Vec<T>],
    q: Option<Var>,
    init: Option<StateVar>,
    mode: &mut Mode<'_>,
) -> Result<EncodedTree> {
    if tokens.is_empty() {
        return Err(Error::InvalidInput("cannot encode an empty sequence".into()));
    }
    if let Some(row) = tokens.iter().find(|r| r.len() != enc.k_in) {
        return Err(Error::shape("encode", &[row.len()], &[enc.k_in]));
    }
    match (&enc.node, q) {
        (NodeFn::Anf(_), None) => return Err(Error::InvalidInput("anf composition needs a query vector".into())),
        (NodeFn::SLstm(_), Some(_)) => {
            return Err(Error::InvalidInput("s-lstm composition takes no query vector".into()))
        }
        _ => {}
    }
    let topology = match enc.shape {
        TreeShape::Balanced => TreeTopology::for_sequence(tokens.len())?,
        TreeShape::LeftBranching => TreeTopology::left_branching(tokens.len())?,
    };
    let zero = vec![T::zero(); enc.k_in];
    let mut inputs = Vec::with_capacity(topology.n_leaves());
    for p in 0..topology.n_leaves() {
        inputs.push(g.constant_vec(tokens.get(p).unwrap_or(&zero).clone())?);
    }

    let mut states: Vec<Option<StateVar>> = vec![None; topology.n_nodes()];
    let mut leaf_final = None;
    match &enc.leaf {
        LeafFn::Embedding { proj } => {
            for (p, &x) in inputs.iter().enumerate() {
                let x = dropout_var(g, x, enc.dropout_input, mode)?;
                let h = match proj {
                    Some(w) => {
                        let w = g.param(*w);
                        g.matvec(w, x)?
                    }
                    None => x,
                };
                let c = g.zeros(enc.k)?;
                states[topology.leaves()[p]] = Some(StateVar { h, c });
            }
        }
        LeafFn::Lstm(lstm) => {
            let mut state = match init {
                Some(s) => s,
                None => StateVar::zeros(g, enc.k)?,
            };
            for (p, &x) in inputs.iter().enumerate() {
                state = lstm_leaf_step(g, lstm, x, state)?;
                let h = dropout_var(g, state.h, enc.dropout_input, mode)?;
                states[topology.leaves()[p]] = Some(StateVar { h, c: state.c });
            }
            leaf_final = Some(state);
        }
    }

    let levels = topology.bottom_up_schedule().to_vec();
    for level in levels.iter().skip(1) {
        for &id in level {
            let (l, r) = topology.node(id)?.children.expect("internal node");
            let (left, right) = (states[l].expect("child first"), states[r].expect("child first"));
            let state = match &enc.node {
                NodeFn::SLstm(p) => slstm_compose(g, p, left, right)?,
                NodeFn::Anf(p) => {
                    let out = anf_compose(g, p, left.h, right.h, q.expect("checked above"))?;
                    StateVar {
                        h: out.h,
                        c: g.zeros(enc.k)?,
                    }
                }
            };
            states[id] = Some(state);
        }
    }
    let states: Vec<StateVar> = states.into_iter().map(|s| s.expect("every node scheduled")).collect();
    let root = states[topology.root()];
    Ok(EncodedTree {
        topology,
        states,
        root,
        leaf_final,
    })
}
