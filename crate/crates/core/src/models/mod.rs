//! Encoders, matching models and task heads assembled into trainable models.

mod checkpoint;
mod config;
mod encoder;
mod heads;
mod matching;

pub use config::{AttentionMode, LeafMode, ModelConfig, NonLeafMode, Task, TreeShape, Variant};
pub use encoder::{encode, EncodedTree, Encoder, LeafFn, NodeFn};
pub use heads::{nli_head, pair_features, qa_head, sst_head, MlpHead};
pub use matching::{full_tree_match, node_by_node_attend, tree_match, Carry, Matcher, NodeByNodeOutput, TreeAttn};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{softmax, Graph, Objective, Var};
use crate::data::{EmbeddingTable, LabeledSentence, QAPair, SentencePair, Vocabulary};
use crate::error::{Error, Result};
use crate::params::{Initializer, ParamStore};
use crate::scalar::Scalar;
use crate::train::{dropout_var, Mode};
use crate::tree::TreeTopology;

/// One training or evaluation instance as vocabulary ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Example {
    Sentence { tokens: Vec<usize>, label: usize },
    Pair { premise: Vec<usize>, hypothesis: Vec<usize>, label: usize },
    Qa { question: Vec<usize>, answer: Vec<usize>, relevant: bool },
}

impl Example {
    pub fn sentence(s: &LabeledSentence, vocab: &Vocabulary) -> Self {
        Example::Sentence {
            tokens: vocab.encode(&s.tokens),
            label: s.label,
        }
    }

    pub fn pair(p: &SentencePair, vocab: &Vocabulary) -> Self {
        Example::Pair {
            premise: vocab.encode(&p.premise),
            hypothesis: vocab.encode(&p.hypothesis),
            label: p.label.index(),
        }
    }

    pub fn qa(p: &QAPair, vocab: &Vocabulary) -> Self {
        Example::Qa {
            question: vocab.encode(&p.question),
            answer: vocab.encode(&p.answer),
            relevant: p.relevant,
        }
    }

    /// Gold class; relevance maps to 1/0.
    pub fn label(&self) -> usize {
        match self {
            Example::Sentence { label, .. } | Example::Pair { label, .. } => *label,
            Example::Qa { relevant, .. } => usize::from(*relevant),
        }
    }

    /// Length of the primary sequence (sentence, premise or answer).
    pub fn primary_len(&self) -> usize {
        match self {
            Example::Sentence { tokens, .. } => tokens.len(),
            Example::Pair { premise, .. } => premise.len(),
            Example::Qa { answer, .. } => answer.len(),
        }
    }
}

#[derive(Clone, Debug)]
enum Arch {
    Sentence {
        enc: Encoder,
        head: MlpHead,
    },
    Nli {
        premise: Encoder,
        /// A clone of `premise` (same parameters) when weights are tied.
        hypothesis: Encoder,
        matcher: Option<Matcher>,
        head: MlpHead,
    },
    Qa {
        answer: Encoder,
        question: Encoder,
        head: MlpHead,
    },
}

/// Result of one forward pass.
#[derive(Clone, Debug)]
pub struct Forward {
    pub logits: Var,
    /// Encoded trees: the sentence, premise then hypothesis, or answer then question.
    pub trees: Vec<EncodedTree>,
    /// Node-by-node steps, when the model has them.
    pub steps: Vec<(usize, Option<Var>)>,
}

/// Model structure without parameter values. Forward passes read
/// parameters through the graph.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    config: ModelConfig,
    arch: Arch,
}

impl ModelSpec {
    pub fn build<T: Scalar>(config: &ModelConfig, store: &mut ParamStore<T>) -> Result<Self> {
        config.validate()?;
        let cfg = config;
        let mut init = Initializer::new(ChaCha8Rng::seed_from_u64(cfg.seed));
        let init = &mut init;
        let (k, hidden) = (cfg.k, cfg.mlp_hidden);
        let arch = match cfg.task {
            Task::Sentence | Task::Sst => Arch::Sentence {
                enc: Encoder::new(store, init, "enc", cfg, NonLeafMode::SLstm)?,
                head: MlpHead::new(store, init, "head", k, hidden, cfg.n_classes)?,
            },
            Task::Nli => {
                let premise = Encoder::new(store, init, "enc", cfg, NonLeafMode::SLstm)?;
                let hypothesis = if cfg.tie_encoder_weights {
                    premise.clone()
                } else {
                    Encoder::new(store, init, "hyp_enc", cfg, NonLeafMode::SLstm)?
                };
                let matcher = match cfg.attention_mode {
                    AttentionMode::None => None,
                    _ => Some(Matcher::new(store, init, cfg)?),
                };
                let n_in = matcher.as_ref().map_or(4 * k, |m| m.output_len(k));
                Arch::Nli {
                    premise,
                    hypothesis,
                    matcher,
                    head: MlpHead::new(store, init, "head", n_in, hidden, 3)?,
                }
            }
            Task::Qa => Arch::Qa {
                answer: Encoder::new(store, init, "answer_enc", cfg, NonLeafMode::SLstm)?,
                question: Encoder::new(store, init, "question_enc", cfg, NonLeafMode::Anf)?,
                head: MlpHead::new(store, init, "head", 4 * k, hidden, 1)?,
            },
        };
        Ok(ModelSpec {
            config: cfg.clone(),
            arch,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn forward<T: Scalar>(
        &self,
        g: &mut Graph<'_, T>,
        ex: &Example,
        emb: &EmbeddingTable<T>,
        mode: &mut Mode<'_>,
    ) -> Result<Forward> {
        let rate = self.config.dropout_output;
        match (&self.arch, ex) {
            (Arch::Sentence { enc, head }, Example::Sentence { tokens, .. }) => {
                let tree = encode(g, enc, &emb.lookup(tokens), None, None, mode)?;
                let x = dropout_var(g, tree.root.h, rate, mode)?;
                let logits = match self.config.task {
                    Task::Sst => sst_head(g, x, head, self.config.n_classes)?,
                    _ => head.logits(g, x)?,
                };
                Ok(Forward {
                    logits,
                    trees: vec![tree],
                    steps: Vec::new(),
                })
            }
            (
                Arch::Nli {
                    premise,
                    hypothesis,
                    matcher,
                    head,
                },
                Example::Pair {
                    premise: p_ids,
                    hypothesis: h_ids,
                    ..
                },
            ) => {
                let p = encode(g, premise, &emb.lookup(p_ids), None, None, mode)?;
                let carry_state = match matcher {
                    Some(m) if m.mode.is_node_by_node() => p.leaf_final,
                    _ => None,
                };
                let h = encode(g, hypothesis, &emb.lookup(h_ids), None, carry_state, mode)?;
                let mut steps = Vec::new();
                let feature = match matcher {
                    None => pair_features(g, p.root.h, h.root.h)?,
                    Some(m) => match m.mode {
                        AttentionMode::NodeByNodeGlobal | AttentionMode::NodeByNodeTree => {
                            let out = node_by_node_attend(g, &p, &h, m)?;
                            steps = out.steps;
                            out.output
                        }
                        AttentionMode::FullTreeMatchGlobal => full_tree_match(g, &p, &h, m)?,
                        _ => tree_match(g, &p, &h, m)?,
                    },
                };
                let feature = dropout_var(g, feature, rate, mode)?;
                let logits = nli_head(g, feature, head)?;
                Ok(Forward {
                    logits,
                    trees: vec![p, h],
                    steps,
                })
            }
            (
                Arch::Qa { answer, question, head },
                Example::Qa {
                    question: q_ids,
                    answer: a_ids,
                    ..
                },
            ) => {
                let a = encode(g, answer, &emb.lookup(a_ids), None, None, mode)?;
                let q = encode(g, question, &emb.lookup(q_ids), Some(a.root.h), None, mode)?;
                let feature = pair_features(g, q.root.h, a.root.h)?;
                let feature = dropout_var(g, feature, rate, mode)?;
                let logits = qa_head(g, feature, head)?;
                Ok(Forward {
                    logits,
                    trees: vec![a, q],
                    steps: Vec::new(),
                })
            }
            _ => Err(Error::InvalidInput(format!(
                "example does not fit a {} model",
                self.config.task
            ))),
        }
    }

    /// Cross-entropy over classes, or binary cross-entropy on relevance.
    pub fn loss<T: Scalar>(
        &self,
        g: &mut Graph<'_, T>,
        ex: &Example,
        emb: &EmbeddingTable<T>,
        mode: &mut Mode<'_>,
    ) -> Result<Var> {
        let f = self.forward(g, ex, emb, mode)?;
        match ex {
            Example::Qa { relevant, .. } => {
                let target = if *relevant { T::one() } else { T::zero() };
                g.bce_with_logits(f.logits, target)
            }
            _ => g.cross_entropy(f.logits, ex.label()),
        }
    }

    /// The encoder used for single-sentence representations.
    fn sentence_encoder(&self) -> &Encoder {
        match &self.arch {
            Arch::Sentence { enc, .. } => enc,
            Arch::Nli { premise, .. } => premise,
            Arch::Qa { answer, .. } => answer,
        }
    }
}

/// Eval-mode loss of one example, buildable at any precision for
/// [`check_gradients_precise`](crate::autodiff::check_gradients_precise).
pub struct LossObjective<'a> {
    pub spec: &'a ModelSpec,
    pub example: &'a Example,
    pub embeddings: &'a EmbeddingTable<f64>,
}

impl Objective for LossObjective<'_> {
    fn build<T: Scalar>(&self, g: &mut Graph<'_, T>) -> Result<Var> {
        let emb = self.embeddings.cast::<T>();
        self.spec.loss(g, self.example, &emb, &mut Mode::Eval)
    }
}

/// Per-step attention of hypothesis nodes over premise nodes.
#[derive(Clone, Debug)]
pub struct AttentionMap<T> {
    pub premise: TreeTopology,
    pub hypothesis: TreeTopology,
    /// `(hypothesis node, weights over premise nodes by id)` in visiting order.
    pub rows: Vec<(usize, Vec<T>)>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl<T: Scalar> AttentionMap<T> {
    /// Comma-separated matrix: the header row holds premise node labels in
    /// bottom-up order, each further row a hypothesis node label and its weights.
    pub fn to_csv<S: AsRef<str>>(&self, premise_tokens: &[S], hypothesis_tokens: &[S]) -> Result<String> {
        let cols: Vec<usize> = self.premise.schedule_order().collect();
        let mut out = String::new();
        let mut header = vec![String::new()];
        for &c in &cols {
            header.push(csv_field(&self.premise.node_span_label(c, premise_tokens)?));
        }
        out.push_str(&header.join(","));
        out.push('\n');
        for (node, weights) in &self.rows {
            let mut line = vec![csv_field(&self.hypothesis.node_span_label(*node, hypothesis_tokens)?)];
            line.extend(cols.iter().map(|&c| weights[c].to_string()));
            out.push_str(&line.join(","));
            out.push('\n');
        }
        Ok(out)
    }
}

/// Model structure plus parameter values.
#[derive(Clone, Debug)]
pub struct Model<T> {
    spec: ModelSpec,
    params: ParamStore<T>,
}

impl<T: Scalar> Model<T> {
    /// Fresh model with parameters drawn from `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Self> {
        let mut params = ParamStore::new();
        let spec = ModelSpec::build(&config, &mut params)?;
        Ok(Model { spec, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.spec.config
    }

    /// The same model with parameters converted to `U`.
    pub fn cast<U: Scalar>(&self) -> Model<U> {
        Model {
            spec: self.spec.clone(),
            params: self.params.cast(),
        }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    /// Structure and mutable parameters at once, for gradient checks.
    pub fn parts_mut(&mut self) -> (&ModelSpec, &mut ParamStore<T>) {
        (&self.spec, &mut self.params)
    }

    /// Loss value and parameter gradients for one example.
    pub fn loss_and_grads(
        &self,
        ex: &Example,
        emb: &EmbeddingTable<T>,
        mode: &mut Mode<'_>,
    ) -> Result<(T, crate::autodiff::Gradients<T>)> {
        let mut g = Graph::new(&self.params);
        let loss = self.spec.loss(&mut g, ex, emb, mode)?;
        let grads = g.backward(loss)?;
        Ok((g.data(loss)[0], grads))
    }

    /// Eval-mode loss.
    pub fn loss(&self, ex: &Example, emb: &EmbeddingTable<T>) -> Result<T> {
        let mut g = Graph::new(&self.params);
        let loss = self.spec.loss(&mut g, ex, emb, &mut Mode::Eval)?;
        Ok(g.data(loss)[0])
    }

    /// Class distribution, or `[p(relevant)]` for answer selection.
    pub fn predict(&self, ex: &Example, emb: &EmbeddingTable<T>) -> Result<Vec<T>> {
        let mut g = Graph::new(&self.params);
        let f = self.spec.forward(&mut g, ex, emb, &mut Mode::Eval)?;
        let logits = g.data(f.logits);
        Ok(match ex {
            Example::Qa { .. } => vec![crate::autodiff::sigmoid(logits[0])],
            _ => softmax(logits),
        })
    }

    /// Root vector of the sentence encoder.
    pub fn encode_root(&self, tokens: &[usize], emb: &EmbeddingTable<T>) -> Result<Vec<T>> {
        let mut g = Graph::new(&self.params);
        let tree = encode(&mut g, self.spec.sentence_encoder(), &emb.lookup(tokens), None, None, &mut Mode::Eval)?;
        Ok(g.data(tree.root.h).to_vec())
    }

    /// Node-by-node global attention weights for one pair.
    pub fn attention_map(
        &self,
        premise: &[usize],
        hypothesis: &[usize],
        emb: &EmbeddingTable<T>,
    ) -> Result<AttentionMap<T>> {
        if self.config().attention_mode != AttentionMode::NodeByNodeGlobal {
            return Err(Error::Config(format!(
                "attention maps need a node_by_node_global model, this one is {}",
                self.config().attention_mode
            )));
        }
        let ex = Example::Pair {
            premise: premise.to_vec(),
            hypothesis: hypothesis.to_vec(),
            label: 0,
        };
        let mut g = Graph::new(&self.params);
        let f = self.spec.forward(&mut g, &ex, emb, &mut Mode::Eval)?;
        let rows = f
            .steps
            .iter()
            .map(|(node, w)| (*node, g.data(w.expect("global attention weights")).to_vec()))
            .collect();
        Ok(AttentionMap {
            premise: f.trees[0].topology.clone(),
            hypothesis: f.trees[1].topology.clone(),
            rows,
        })
    }
}
