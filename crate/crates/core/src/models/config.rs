use std::fmt;

use crate::attention::ScoreMode;
use crate::error::{Error, Result};
use crate::kv::KvRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LeafMode {
    None,
    Lstm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NonLeafMode {
    SLstm,
    Anf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AttentionMode {
    None,
    NodeByNodeGlobal,
    NodeByNodeTree,
    TreeMatchGlobal,
    TreeMatchTree,
    FullTreeMatchGlobal,
}

impl AttentionMode {
    pub fn is_node_by_node(self) -> bool {
        matches!(self, AttentionMode::NodeByNodeGlobal | AttentionMode::NodeByNodeTree)
    }

    pub fn uses_tree_attention(self) -> bool {
        matches!(self, AttentionMode::NodeByNodeTree | AttentionMode::TreeMatchTree)
    }
}

/// Tree shape built over each sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TreeShape {
    /// Full binary tree over the padded sequence.
    Balanced,
    /// Left-to-right chain, no padding.
    LeftBranching,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Task {
    /// Single-sentence classification with any number of classes.
    Sentence,
    /// Sentiment treebank, 2 or 5 classes.
    Sst,
    Nli,
    Qa,
}

macro_rules! named_enum {
    ($ty:ty, $what:literal, $($variant:path => $name:literal),+ $(,)?) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self { $($variant => $name),+ }
            }

            pub fn parse(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    _ => Err(Error::Config(format!(concat!("unknown ", $what, " '{}'"), s))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

named_enum!(LeafMode, "leaf_mode", LeafMode::None => "none", LeafMode::Lstm => "lstm");
named_enum!(NonLeafMode, "nonleaf_mode", NonLeafMode::SLstm => "slstm", NonLeafMode::Anf => "anf");
named_enum!(
    AttentionMode, "attention_mode",
    AttentionMode::None => "none",
    AttentionMode::NodeByNodeGlobal => "node_by_node_global",
    AttentionMode::NodeByNodeTree => "node_by_node_tree",
    AttentionMode::TreeMatchGlobal => "tree_match_global",
    AttentionMode::TreeMatchTree => "tree_match_tree",
    AttentionMode::FullTreeMatchGlobal => "full_tree_match_global",
);
named_enum!(TreeShape, "tree_shape", TreeShape::Balanced => "balanced", TreeShape::LeftBranching => "left_branching");
named_enum!(Task, "task", Task::Sentence => "sentence", Task::Sst => "sst", Task::Nli => "nli", Task::Qa => "qa");

/// The named model variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    NtiSlstm,
    NtiSlstmLstm,
    NtiSlstmNodeByNodeGlobal,
    NtiSlstmNodeByNodeTree,
    NtiSlstmLstmNodeByNodeGlobal,
    NtiSlstmLstmNodeByNodeTree,
    TreeMatchGlobal,
    TreeMatchTree,
    FullTreeMatchGlobal,
    /// Question encoder of the answer-selection model.
    NtiAnfLstm,
}

named_enum!(
    Variant, "variant",
    Variant::NtiSlstm => "nti-slstm",
    Variant::NtiSlstmLstm => "nti-slstm-lstm",
    Variant::NtiSlstmNodeByNodeGlobal => "nti-slstm-nbn-global",
    Variant::NtiSlstmNodeByNodeTree => "nti-slstm-nbn-tree",
    Variant::NtiSlstmLstmNodeByNodeGlobal => "nti-slstm-lstm-nbn-global",
    Variant::NtiSlstmLstmNodeByNodeTree => "nti-slstm-lstm-nbn-tree",
    Variant::TreeMatchGlobal => "tree-match-global",
    Variant::TreeMatchTree => "tree-match-tree",
    Variant::FullTreeMatchGlobal => "full-tree-match-global",
    Variant::NtiAnfLstm => "nti-anf-lstm",
);

impl Variant {
    /// The nine inference variants.
    pub const NLI: [Variant; 9] = [
        Variant::NtiSlstm,
        Variant::NtiSlstmLstm,
        Variant::NtiSlstmNodeByNodeGlobal,
        Variant::NtiSlstmNodeByNodeTree,
        Variant::NtiSlstmLstmNodeByNodeGlobal,
        Variant::NtiSlstmLstmNodeByNodeTree,
        Variant::TreeMatchGlobal,
        Variant::TreeMatchTree,
        Variant::FullTreeMatchGlobal,
    ];

    pub fn leaf_mode(self) -> LeafMode {
        match self {
            Variant::NtiSlstm | Variant::NtiSlstmNodeByNodeGlobal | Variant::NtiSlstmNodeByNodeTree => LeafMode::None,
            _ => LeafMode::Lstm,
        }
    }

    pub fn attention_mode(self) -> AttentionMode {
        match self {
            Variant::NtiSlstm | Variant::NtiSlstmLstm | Variant::NtiAnfLstm => AttentionMode::None,
            Variant::NtiSlstmNodeByNodeGlobal | Variant::NtiSlstmLstmNodeByNodeGlobal => AttentionMode::NodeByNodeGlobal,
            Variant::NtiSlstmNodeByNodeTree | Variant::NtiSlstmLstmNodeByNodeTree => AttentionMode::NodeByNodeTree,
            Variant::TreeMatchGlobal => AttentionMode::TreeMatchGlobal,
            Variant::TreeMatchTree => AttentionMode::TreeMatchTree,
            Variant::FullTreeMatchGlobal => AttentionMode::FullTreeMatchGlobal,
        }
    }

    /// Published learning rate, l2 strength, epochs and input/output dropout.
    pub fn schedule(self) -> (f64, f64, usize, f64, f64) {
        match self {
            Variant::NtiSlstm | Variant::NtiSlstmLstm => (1e-3, 3e-5, 90, 0.1, 0.2),
            Variant::NtiSlstmNodeByNodeGlobal | Variant::NtiSlstmNodeByNodeTree => (3e-4, 1e-5, 40, 0.15, 0.15),
            Variant::NtiAnfLstm => (1e-3, 0.0, 10, 0.2, 0.0),
            _ => (3e-4, 1e-5, 10, 0.1, 0.15),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub task: Task,
    /// Hidden width of every tree node.
    pub k: usize,
    /// Embedding width.
    pub k_in: usize,
    pub leaf_mode: LeafMode,
    pub nonleaf_mode: NonLeafMode,
    pub attention_mode: AttentionMode,
    pub score_mode: ScoreMode,
    pub tree_shape: TreeShape,
    pub tie_encoder_weights: bool,
    pub dropout_input: f64,
    pub dropout_output: f64,
    pub mlp_hidden: usize,
    pub n_classes: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            task: Task::Nli,
            k: 300,
            k_in: 300,
            leaf_mode: LeafMode::None,
            nonleaf_mode: NonLeafMode::SLstm,
            attention_mode: AttentionMode::None,
            score_mode: ScoreMode::Mlp,
            tree_shape: TreeShape::Balanced,
            tie_encoder_weights: true,
            dropout_input: 0.0,
            dropout_output: 0.0,
            mlp_hidden: 1024,
            n_classes: 3,
            seed: 0,
        }
    }
}

impl ModelConfig {
    /// Preset for `variant` on `task`. The answer-selection model is chosen
    /// by `Task::Qa` regardless of the variant's leaf and attention settings.
    pub fn for_variant(variant: Variant, task: Task) -> Self {
        let (_, _, _, dropout_input, dropout_output) = variant.schedule();
        let mut cfg = ModelConfig {
            task,
            leaf_mode: variant.leaf_mode(),
            attention_mode: variant.attention_mode(),
            dropout_input,
            dropout_output,
            ..ModelConfig::default()
        };
        match task {
            Task::Qa => {
                cfg.leaf_mode = LeafMode::Lstm;
                cfg.nonleaf_mode = NonLeafMode::Anf;
                cfg.attention_mode = AttentionMode::None;
                cfg.n_classes = 2;
            }
            Task::Sst => cfg.n_classes = 5,
            Task::Sentence => cfg.n_classes = 2,
            Task::Nli => {}
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.k == 0 || self.k_in == 0 || self.mlp_hidden == 0 {
            return bad("k, k_in and mlp_hidden must be positive".into());
        }
        for (name, rate) in [("dropout_input", self.dropout_input), ("dropout_output", self.dropout_output)] {
            if !(0.0..1.0).contains(&rate) {
                return bad(format!("{name} must be in [0, 1), got {rate}"));
            }
        }
        if (self.nonleaf_mode == NonLeafMode::Anf) != (self.task == Task::Qa) {
            return bad("anf composition needs an external query; it is only available for the qa task".into());
        }
        if self.attention_mode != AttentionMode::None && self.task != Task::Nli {
            return bad(format!("attention_mode {} needs the nli task", self.attention_mode));
        }
        match self.task {
            Task::Sst if !matches!(self.n_classes, 2 | 5) => {
                bad(format!("sst needs 2 or 5 classes, got {}", self.n_classes))
            }
            Task::Nli if self.n_classes != 3 => bad(format!("nli needs 3 classes, got {}", self.n_classes)),
            Task::Sentence if self.n_classes < 2 => bad("need at least 2 classes".into()),
            _ => Ok(()),
        }
    }

    pub fn to_kv(&self) -> KvRecord {
        let mut kv = KvRecord::new();
        kv.set("task", self.task);
        kv.set("k", self.k);
        kv.set("k_in", self.k_in);
        kv.set("leaf_mode", self.leaf_mode);
        kv.set("nonleaf_mode", self.nonleaf_mode);
        kv.set("attention_mode", self.attention_mode);
        kv.set("score_mode", self.score_mode.name());
        kv.set("tree_shape", self.tree_shape);
        kv.set("tie_encoder_weights", self.tie_encoder_weights);
        kv.set("dropout_input", self.dropout_input);
        kv.set("dropout_output", self.dropout_output);
        kv.set("mlp_hidden", self.mlp_hidden);
        kv.set("n_classes", self.n_classes);
        kv.set("seed", self.seed);
        kv
    }

    /// Overrides fields present in `kv`; unknown keys are ignored.
    pub fn apply_kv(&mut self, kv: &KvRecord) -> Result<()> {
        if let Some(v) = kv.get("task") {
            self.task = Task::parse(v)?;
        }
        if let Some(v) = kv.get("leaf_mode") {
            self.leaf_mode = LeafMode::parse(v)?;
        }
        if let Some(v) = kv.get("nonleaf_mode") {
            self.nonleaf_mode = NonLeafMode::parse(v)?;
        }
        if let Some(v) = kv.get("attention_mode") {
            self.attention_mode = AttentionMode::parse(v)?;
        }
        if let Some(v) = kv.get("score_mode") {
            self.score_mode = ScoreMode::parse(v)?;
        }
        if let Some(v) = kv.get("tree_shape") {
            self.tree_shape = TreeShape::parse(v)?;
        }
        macro_rules! num {
            ($($field:ident),+) => {
                $(if let Some(v) = kv.parse_value(stringify!($field))? {
                    self.$field = v;
                })+
            };
        }
        num!(k, k_in, tie_encoder_weights, dropout_input, dropout_output, mlp_hidden, n_classes, seed);
        Ok(())
    }

    pub fn from_kv(kv: &KvRecord) -> Result<Self> {
        let mut cfg = ModelConfig::default();
        cfg.apply_kv(kv)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for v in Variant::NLI {
            ModelConfig::for_variant(v, Task::Nli).validate().unwrap();
        }
        ModelConfig::for_variant(Variant::NtiAnfLstm, Task::Qa).validate().unwrap();
        ModelConfig::for_variant(Variant::NtiSlstm, Task::Sst).validate().unwrap();
        assert!(ModelConfig::for_variant(Variant::TreeMatchTree, Task::Sst).validate().is_err());
    }

    #[test]
    fn anf_needs_query() {
        let cfg = ModelConfig {
            nonleaf_mode: NonLeafMode::Anf,
            ..ModelConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn kv_round_trip() {
        let cfg = ModelConfig {
            k: 7,
            dropout_input: 0.15,
            score_mode: ScoreMode::Bilinear,
            ..ModelConfig::for_variant(Variant::FullTreeMatchGlobal, Task::Nli)
        };
        let text = cfg.to_kv().render();
        let back = ModelConfig::from_kv(&KvRecord::parse(&text, "test").unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn names_parse_back() {
        for v in Variant::NLI {
            assert_eq!(Variant::parse(v.name()).unwrap(), v);
        }
        assert!(Variant::parse("lstm").is_err());
    }
}
