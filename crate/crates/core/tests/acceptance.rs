//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Full-corpus split counts are checked only when `NTI_SNLI_DIR` /
//! `NTI_WIKIQA_DIR` point at the official files; a real treebank in
//! `NTI_SST_DIR` (`train.txt`, `dev.txt`) replaces the generated one.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nti::attention::{global_attention, score, tree_attention, GlobalAttnParams, ScoreMode, ScoreParams, TreeAttnParams};
use nti::autodiff::{check_gradients_precise, Graph, Var};
use nti::cells::{anf_compose, slstm_compose, AnfParams, SLstmParams, StateVar};
use nti::data::*;
use nti::models::*;
use nti::params::{Initializer, ParamId, ParamStore};
use nti::train::*;
use nti::tree::build_full_binary_tree;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn word_vocab(n: usize) -> Vocabulary {
    let words: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
    Vocabulary::build(words.iter().map(String::as_str), false)
}

// 1 ---------------------------------------------------------------------

fn gradient_config(variant: Variant, task: Task) -> ModelConfig {
    ModelConfig {
        k: 4,
        k_in: 3,
        mlp_hidden: 4,
        dropout_input: 0.0,
        dropout_output: 0.0,
        seed: 17,
        ..ModelConfig::for_variant(variant, task)
    }
}

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let emb = EmbeddingTable::<f64>::random(&word_vocab(10), 3, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut tokens = |n: usize| -> Vec<usize> { (0..n).map(|_| rng.gen_range(2..12)).collect() };
    let lengths = [1, 3, 4, 6];
    let mut cases: Vec<(String, ModelConfig, Example)> = Vec::new();
    for v in Variant::NLI {
        for (i, &lp) in lengths.iter().enumerate() {
            let lh = lengths[(i + 1) % lengths.len()];
            let ex = Example::Pair {
                premise: tokens(lp),
                hypothesis: tokens(lh),
                label: i % 3,
            };
            cases.push((format!("{v} {lp}/{lh}"), gradient_config(v, Task::Nli), ex));
        }
    }
    for (i, &len) in lengths.iter().enumerate() {
        let ex = Example::Qa {
            question: tokens(lengths[(i + 1) % lengths.len()]),
            answer: tokens(len),
            relevant: i % 2 == 0,
        };
        cases.push((format!("qa {len}"), gradient_config(Variant::NtiAnfLstm, Task::Qa), ex));
        let ex = Example::Sentence {
            tokens: tokens(len),
            label: i % 5,
        };
        cases.push((format!("sst {len}"), gradient_config(Variant::NtiSlstm, Task::Sst), ex));
    }
    let mut worst = (0.0f64, String::new());
    let mut draw = ChaCha8Rng::seed_from_u64(22);
    for (name, cfg, ex) in &cases {
        let mut model = Model::<f64>::new(cfg.clone()).map_err(e2s)?;
        // Zero biases over zero pad vectors put ReLU inputs exactly on the
        // kink; probe at a generic point instead.
        randomize(model.params_mut(), &mut draw);
        let obj = LossObjective {
            spec: model.spec(),
            example: ex,
            embeddings: &emb,
        };
        let err = check_gradients_precise(model.params(), 1e-7, &obj).map_err(e2s)?;
        if err > worst.0 || worst.1.is_empty() {
            worst = (err, name.clone());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let summary = format!(
        "max relative error {:.2e} ({}) over {} models, {secs:.1}s",
        worst.0,
        worst.1,
        cases.len()
    );
    ensure(worst.0 < 1e-4, || summary.clone())?;
    ensure(secs < 120.0, || format!("too slow: {summary}"))?;
    Ok(summary)
}

// 2 ---------------------------------------------------------------------

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

fn val(store: &ParamStore<f64>, id: ParamId) -> f64 {
    store.value(id).data()[0]
}

/// Scalar score parameters `(a1, a2, w)`, or `None` for the bilinear form.
fn scalar_score(store: &ParamStore<f64>, p: &ScoreParams) -> Option<(f64, f64, f64)> {
    match p {
        ScoreParams::Mlp { w1, w2, w } => Some((val(store, *w1), val(store, *w2), val(store, *w))),
        ScoreParams::Bilinear => None,
    }
}

/// Softmax blend of scalar memories `s` against query `q`.
fn scalar_attend(s: &[f64], q: f64, sp: Option<(f64, f64, f64)>) -> (Vec<f64>, f64) {
    let m: Vec<f64> = s
        .iter()
        .map(|&sj| match sp {
            Some((a1, a2, w)) => w * relu(a1 * sj + a2 * q),
            None => q * sj,
        })
        .collect();
    let top = m.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = m.iter().map(|x| (x - top).exp()).collect();
    let total: f64 = e.iter().sum();
    let alpha: Vec<f64> = e.iter().map(|x| x / total).collect();
    let z = alpha.iter().zip(s).map(|(a, x)| a * x).sum();
    (alpha, z)
}

fn randomize(store: &mut ParamStore<f64>, rng: &mut ChaCha8Rng) {
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        for v in store.value_mut(id) {
            *v = rng.gen_range(-1.5..1.5);
        }
    }
}

fn equation_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut init = Initializer::new(ChaCha8Rng::seed_from_u64(3));
    let mut worst = 0.0f64;
    let mut track = |a: f64, b: f64| worst = worst.max((a - b).abs());
    for draw in 0..100 {
        let mode = if draw % 2 == 0 { ScoreMode::Mlp } else { ScoreMode::Bilinear };
        let mut store = ParamStore::<f64>::new();
        let sl = SLstmParams::new(&mut store, &mut init, "s", 1).map_err(e2s)?;
        let anf = AnfParams::new(&mut store, &mut init, "a", 1, mode).map_err(e2s)?;
        let ga = GlobalAttnParams::new(&mut store, &mut init, "g", 1, mode).map_err(e2s)?;
        let ta = TreeAttnParams::new(&mut store, &mut init, "t", 1, mode).map_err(e2s)?;
        randomize(&mut store, &mut rng);
        let n_leaves = 1 << rng.gen_range(0..4);
        let topo = build_full_binary_tree(n_leaves).map_err(e2s)?;
        let mut r = || rng.gen_range(-2.0..2.0);
        let (hl, cl, hr, cr, q) = (r(), r(), r(), r(), r());
        let nodes: Vec<f64> = (0..topo.n_nodes()).map(|_| r()).collect();

        let mut g = Graph::new(&store);
        let c = |g: &mut Graph<'_, f64>, x: f64| g.constant_vec(vec![x]).unwrap();
        let left = StateVar { h: c(&mut g, hl), c: c(&mut g, cl) };
        let right = StateVar { h: c(&mut g, hr), c: c(&mut g, cr) };
        let qv = c(&mut g, q);
        let node_vars: Vec<Var> = nodes.iter().map(|&x| c(&mut g, x)).collect();

        // S-LSTM
        let out = slstm_compose(&mut g, &sl, left, right).map_err(e2s)?;
        let w = |id: ParamId| val(&store, id);
        let i = sigmoid(w(sl.input[0]) * hl + w(sl.input[1]) * hr + w(sl.input[2]) * cl + w(sl.input[3]) * cr + w(sl.b_i));
        let fl = sigmoid(
            w(sl.forget_left[0]) * hl + w(sl.forget_left[1]) * hr + w(sl.forget_left[2]) * cl + w(sl.forget_left[3]) * cr
                + w(sl.b_fl),
        );
        let fr = sigmoid(
            w(sl.forget_right[0]) * hl
                + w(sl.forget_right[1]) * hr
                + w(sl.forget_right[2]) * cl
                + w(sl.forget_right[3]) * cr
                + w(sl.b_fr),
        );
        let u = (w(sl.candidate[0]) * hl + w(sl.candidate[1]) * hr + w(sl.b_c)).tanh();
        let cell = fl * cl + fr * cr + i * u;
        let o = sigmoid(w(sl.output[0]) * hl + w(sl.output[1]) * hr + w(sl.output[2]) * cell + w(sl.b_o));
        track(g.data(out.c)[0], cell);
        track(g.data(out.h)[0], o * cell.tanh());

        // ANF
        let a = anf_compose(&mut g, &anf, left.h, right.h, qv).map_err(e2s)?;
        let (alpha, z) = scalar_attend(&[hl, hr], q, scalar_score(&store, &anf.score));
        track(g.data(a.h)[0], relu(w(anf.w1) * z));
        for (x, y) in g.data(a.weights).iter().zip(&alpha) {
            track(*x, *y);
        }

        // global attention, memory columns in node-id order
        let cols = g.concat_columns(&node_vars).map_err(e2s)?;
        let ga_out = global_attention(&mut g, cols, qv, &ga).map_err(e2s)?;
        let (alpha, z) = scalar_attend(&nodes, q, scalar_score(&store, &ga.score));
        track(g.data(ga_out.output)[0], relu(w(ga.w1) * z + w(ga.w2) * q));
        for (x, y) in g.data(ga_out.weights).iter().zip(&alpha) {
            track(*x, *y);
        }

        // tree attention, bottom-up over [parent, left, right]
        let ta_out = tree_attention(&mut g, &topo, &node_vars, qv, &ta).map_err(e2s)?;
        let mut cur = nodes.clone();
        for level in topo.bottom_up_schedule().iter().skip(1) {
            for &id in level {
                let (l, r) = topo.nodes()[id].children.expect("internal node");
                let (alpha, z) = scalar_attend(&[cur[id], cur[l], cur[r]], q, scalar_score(&store, &ta.score));
                cur[id] = relu(w(ta.w1) * z);
                let got = g.data(ta_out.weights[id].expect("weights at internal node"));
                for (x, y) in got.iter().zip(&alpha) {
                    track(*x, *y);
                }
            }
        }
        for (v, want) in ta_out.nodes.iter().zip(&cur) {
            track(g.data(*v)[0], *want);
        }
    }
    let summary = format!("100 draws per operator, max abs deviation {worst:.2e}");
    ensure(worst <= 1e-12, || summary.clone())?;
    Ok(summary)
}

// 3 ---------------------------------------------------------------------

fn tree_invariants() -> Outcome {
    let start = Instant::now();
    for d in 0..=10usize {
        let n = 1usize << d;
        let t = build_full_binary_tree(n).map_err(e2s)?;
        ensure(t.n_nodes() == 2 * n - 1, || format!("n={n}: {} nodes", t.n_nodes()))?;
        ensure(t.max_depth() == d, || format!("n={n}: depth {}", t.max_depth()))?;
        // every position covered by exactly one leaf, children split the parent span
        let mut cover = vec![0u32; n];
        for (id, node) in t.nodes().iter().enumerate() {
            match node.children {
                None => {
                    ensure(node.span.1 == node.span.0 + 1, || format!("n={n}: leaf {id} span {:?}", node.span))?;
                    cover[node.span.0] += 1;
                }
                Some((l, r)) => {
                    let (ls, rs) = (t.nodes()[l].span, t.nodes()[r].span);
                    ensure(ls.0 == node.span.0 && ls.1 == rs.0 && rs.1 == node.span.1, || {
                        format!("n={n}: node {id} span {:?} split into {ls:?} {rs:?}", node.span)
                    })?;
                }
            }
        }
        ensure(cover.iter().all(|&c| c == 1), || format!("n={n}: leaves do not partition the sequence"))?;
        ensure(t.nodes()[t.root()].span == (0, n), || format!("n={n}: root span"))?;
        // schedule is a permutation with children strictly before parents
        let mut level_of = vec![usize::MAX; t.n_nodes()];
        for (lvl, ids) in t.bottom_up_schedule().iter().enumerate() {
            for &id in ids {
                ensure(level_of[id] == usize::MAX, || format!("n={n}: node {id} scheduled twice"))?;
                level_of[id] = lvl;
            }
        }
        ensure(level_of.iter().all(|&l| l != usize::MAX), || format!("n={n}: schedule misses nodes"))?;
        for (id, node) in t.nodes().iter().enumerate() {
            if let Some((l, r)) = node.children {
                ensure(level_of[l] < level_of[id] && level_of[r] < level_of[id], || {
                    format!("n={n}: node {id} scheduled before its children")
                })?;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 1.0, || format!("took {secs:.2}s"))?;
    Ok(format!("n_leaves 1..1024 exhaustive in {:.0}ms", secs * 1e3))
}

// 4 ---------------------------------------------------------------------

struct DistStats {
    sum_err: f64,
    shift_err: f64,
    count: usize,
}

impl DistStats {
    /// `alpha` against softmax of `m` and of `m + c`.
    fn record(&mut self, g: &mut Graph<'_, f64>, alpha: Var, m: Var, shift: f64) -> Result<(), String> {
        let n = g.data(m).len();
        let c = g.constant_vec(vec![shift; n]).map_err(e2s)?;
        let shifted = g.add(m, c).map_err(e2s)?;
        let direct = g.softmax(m).map_err(e2s)?;
        let moved = g.softmax(shifted).map_err(e2s)?;
        let a = g.data(alpha);
        self.sum_err = self.sum_err.max((a.iter().sum::<f64>() - 1.0).abs());
        for ((x, y), z) in a.iter().zip(g.data(direct)).zip(g.data(moved)) {
            self.shift_err = self.shift_err.max((x - y).abs()).max((x - z).abs());
        }
        self.count += 1;
        Ok(())
    }
}

fn distribution_invariants() -> Outcome {
    let k = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut init = Initializer::new(ChaCha8Rng::seed_from_u64(5));
    let mut report = Vec::new();
    let mut worst = (0.0f64, 0.0f64);
    for family in ["anf", "global", "tree"] {
        let mut st = DistStats { sum_err: 0.0, shift_err: 0.0, count: 0 };
        for draw in 0..1000 {
            let mode = if draw % 2 == 0 { ScoreMode::Mlp } else { ScoreMode::Bilinear };
            let mut store = ParamStore::<f64>::new();
            let anf = AnfParams::new(&mut store, &mut init, "a", k, mode).map_err(e2s)?;
            let ga = GlobalAttnParams::new(&mut store, &mut init, "g", k, mode).map_err(e2s)?;
            let ta = TreeAttnParams::new(&mut store, &mut init, "t", k, mode).map_err(e2s)?;
            randomize(&mut store, &mut rng);
            let scale = [0.1, 1.0, 10.0][draw % 3];
            let vec = |rng: &mut ChaCha8Rng| (0..k).map(|_| scale * rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
            let topo = build_full_binary_tree(1 << rng.gen_range(1..4)).map_err(e2s)?;
            let shift = rng.gen_range(-50.0..50.0);
            let qv = vec(&mut rng);
            let node_vals: Vec<Vec<f64>> = (0..topo.n_nodes()).map(|_| vec(&mut rng)).collect();
            let mut g = Graph::new(&store);
            let q = g.constant_vec(qv).map_err(e2s)?;
            let nodes: Vec<Var> = node_vals.iter().map(|v| g.constant_vec(v.clone()).unwrap()).collect();
            match family {
                "anf" => {
                    let out = anf_compose(&mut g, &anf, nodes[0], nodes[1], q).map_err(e2s)?;
                    let s = g.concat_columns(&[nodes[0], nodes[1]]).map_err(e2s)?;
                    let m = score(&mut g, s, q, &anf.score).map_err(e2s)?;
                    st.record(&mut g, out.weights, m, shift)?;
                }
                "global" => {
                    let cols = g.concat_columns(&nodes).map_err(e2s)?;
                    let out = global_attention(&mut g, cols, q, &ga).map_err(e2s)?;
                    let m = score(&mut g, cols, q, &ga.score).map_err(e2s)?;
                    st.record(&mut g, out.weights, m, shift)?;
                }
                _ => {
                    let out = tree_attention(&mut g, &topo, &nodes, q, &ta).map_err(e2s)?;
                    // recompute the root's scores from its updated children
                    let (l, r) = topo.nodes()[topo.root()].children.expect("root has children");
                    let s = g.concat_columns(&[nodes[topo.root()], out.nodes[l], out.nodes[r]]).map_err(e2s)?;
                    let m = score(&mut g, s, q, &ta.score).map_err(e2s)?;
                    st.record(&mut g, out.weights[topo.root()].expect("root weights"), m, shift)?;
                }
            }
        }
        worst = (worst.0.max(st.sum_err), worst.1.max(st.shift_err));
        report.push(format!("{family} {}", st.count));
    }

    // classifier heads
    let emb = EmbeddingTable::<f64>::random(&word_vocab(10), 3, 6);
    for (name, variant, task) in [("nli-head", Variant::NtiSlstmNodeByNodeGlobal, Task::Nli), ("sst-head", Variant::NtiSlstm, Task::Sst)] {
        let mut model = Model::<f64>::new(gradient_config(variant, task)).map_err(e2s)?;
        let mut st = DistStats { sum_err: 0.0, shift_err: 0.0, count: 0 };
        for draw in 0..1000 {
            if draw % 100 == 0 {
                randomize(model.params_mut(), &mut rng);
            }
            let toks = |rng: &mut ChaCha8Rng| -> Vec<usize> { (0..rng.gen_range(1..7)).map(|_| rng.gen_range(2..12)).collect() };
            let ex = match task {
                Task::Nli => Example::Pair { premise: toks(&mut rng), hypothesis: toks(&mut rng), label: 0 },
                _ => Example::Sentence { tokens: toks(&mut rng), label: 0 },
            };
            let shift = rng.gen_range(-50.0..50.0);
            let probs = model.predict(&ex, &emb).map_err(e2s)?;
            let mut g = Graph::new(model.params());
            let f = model.spec().forward(&mut g, &ex, &emb, &mut Mode::Eval).map_err(e2s)?;
            let alpha = g.constant_vec(probs).map_err(e2s)?;
            st.record(&mut g, alpha, f.logits, shift)?;
        }
        worst = (worst.0.max(st.sum_err), worst.1.max(st.shift_err));
        report.push(format!("{name} {}", st.count));
    }
    let summary = format!(
        "{}; max |sum-1| {:.1e}, max shift deviation {:.1e}",
        report.join(", "),
        worst.0,
        worst.1
    );
    ensure(worst.0 <= 1e-6 && worst.1 <= 1e-9, || summary.clone())?;
    Ok(summary)
}

// 5 ---------------------------------------------------------------------

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// MAP and MRR straight from the definitions: the ranking is the one
/// permutation with non-increasing scores and ties in input order.
fn brute_map_mrr(groups: &[RankedGroup]) -> Option<(f64, f64)> {
    let (mut ap_sum, mut rr_sum, mut n) = (0.0, 0.0, 0);
    for g in groups {
        let total = g.relevant.iter().filter(|&&r| r).count();
        if total == 0 {
            continue;
        }
        let ranking = permutations(g.scores.len())
            .into_iter()
            .find(|p| {
                p.windows(2)
                    .all(|w| g.scores[w[0]] > g.scores[w[1]] || (g.scores[w[0]] == g.scores[w[1]] && w[0] < w[1]))
            })
            .expect("a sorted permutation exists");
        let mut ap = 0.0;
        for r in 1..=ranking.len() {
            if g.relevant[ranking[r - 1]] {
                let hits = ranking[..r].iter().filter(|&&i| g.relevant[i]).count();
                ap += hits as f64 / r as f64;
            }
        }
        let first = ranking.iter().position(|&i| g.relevant[i]).expect("has relevant") + 1;
        ap_sum += ap / total as f64;
        rr_sum += 1.0 / first as f64;
        n += 1;
    }
    (n > 0).then(|| (ap_sum / n as f64, rr_sum / n as f64))
}

fn metric_oracle() -> Outcome {
    let hand = map_mrr(&[RankedGroup {
        scores: vec![0.9, 0.8, 0.1],
        relevant: vec![false, true, false],
    }])
    .map_err(e2s)?;
    ensure(hand == (0.5, 0.5), || format!("hand case gave {hand:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 100 {
        let groups: Vec<RankedGroup> = (0..rng.gen_range(1..=5))
            .map(|_| {
                let n = rng.gen_range(1..=6);
                RankedGroup {
                    // few distinct values so ties are common
                    scores: (0..n).map(|_| rng.gen_range(0..4) as f64 * 0.25).collect(),
                    relevant: (0..n).map(|_| rng.gen_bool(0.35)).collect(),
                }
            })
            .collect();
        let Some(want) = brute_map_mrr(&groups) else {
            ensure(map_mrr(&groups).is_err(), || "no evaluable group should be an error".into())?;
            continue;
        };
        let got = map_mrr(&groups).map_err(e2s)?;
        worst = worst.max((got.0 - want.0).abs()).max((got.1 - want.1).abs());
        done += 1;
    }

    // through a scoring model
    let emb = EmbeddingTable::<f64>::random(&word_vocab(10), 3, 8);
    let model = Model::<f64>::new(gradient_config(Variant::NtiAnfLstm, Task::Qa)).map_err(e2s)?;
    for _ in 0..20 {
        let toks = |rng: &mut ChaCha8Rng| -> Vec<usize> { (0..rng.gen_range(1..6)).map(|_| rng.gen_range(2..12)).collect() };
        let groups: Vec<Vec<Example>> = (0..rng.gen_range(1..=5))
            .map(|_| {
                let question = toks(&mut rng);
                let n = rng.gen_range(1..=6);
                let mut g: Vec<Example> = (0..n)
                    .map(|_| Example::Qa { question: question.clone(), answer: toks(&mut rng), relevant: rng.gen_bool(0.35) })
                    .collect();
                if let Some(Example::Qa { relevant, .. }) = g.first_mut() {
                    *relevant = true;
                }
                g.shuffle(&mut rng);
                g
            })
            .collect();
        let ranked: Vec<RankedGroup> = groups
            .iter()
            .map(|g| RankedGroup {
                scores: g.iter().map(|ex| model.predict(ex, &emb).unwrap()[0]).collect(),
                relevant: g.iter().map(|ex| ex.label() == 1).collect(),
            })
            .collect();
        let want = brute_map_mrr(&ranked).expect("every group has a relevant answer");
        let got = evaluate_map_mrr(&model, &groups, &emb).map_err(e2s)?;
        worst = worst.max((got.0 - want.0).abs()).max((got.1 - want.1).abs());
    }
    let summary = format!("hand case exact, 100 random + 20 model-scored instances, max deviation {worst:.1e}");
    ensure(worst <= 1e-12, || summary.clone())?;
    Ok(summary)
}

// 6 and 7 ---------------------------------------------------------------

const SYNTH_K: usize = 16;

fn synthetic_model(variant: Variant, task: Task, seed: u64) -> Result<Model<f64>, String> {
    Model::new(ModelConfig {
        k: SYNTH_K,
        k_in: SYNTH_K,
        mlp_hidden: 64,
        dropout_input: 0.0,
        dropout_output: 0.0,
        seed,
        ..ModelConfig::for_variant(variant, task)
    })
    .map_err(e2s)
}

fn synthetic_train(seed: u64, epochs: usize) -> TrainConfig {
    TrainConfig {
        batch_size: 4,
        lr: 5e-3,
        l2: 0.0,
        epochs,
        seed,
        eval_train: true,
    }
}

/// First epoch with train accuracy 1.0, if any.
fn first_perfect(log: &MetricsLog) -> Option<usize> {
    log.records
        .iter()
        .find(|r| r.split == "train" && r.metric == "accuracy" && r.value == 1.0)
        .map(|r| r.epoch)
}

fn overfit_runs() -> Outcome {
    let seed = 7;
    let parity = SyntheticKind::Parity;
    let vocab = Vocabulary::build(parity.alphabet().iter().copied(), false);
    let emb = EmbeddingTable::random(&vocab, SYNTH_K, seed);
    let data: Vec<Example> = synthetic_task(parity, seed, 200, 16)
        .map_err(e2s)?
        .iter()
        .map(|s| Example::sentence(s, &vocab))
        .collect();
    let mut notes = Vec::new();
    let start = Instant::now();
    for variant in [Variant::NtiSlstm, Variant::NtiSlstmLstm] {
        let mut model = synthetic_model(variant, Task::Sentence, seed)?;
        let report = train_run(&mut model, &synthetic_train(seed, 50), &data, None, &emb, |_| {}).map_err(e2s)?;
        let hit = first_perfect(&report.log);
        ensure(hit.is_some(), || {
            format!("{variant} parity: final train accuracy {:?}", report.log.last("train", "accuracy"))
        })?;
        notes.push(format!("{variant} parity 100% at epoch {}", hit.unwrap()));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 300.0, || format!("parity runs took {secs:.0}s"))?;

    let pair_vocab = Vocabulary::build(SyntheticKind::ContainsPair.alphabet().iter().copied(), false);
    let pair_emb = EmbeddingTable::random(&pair_vocab, SYNTH_K, seed);
    let pairs: Vec<Example> = synthetic_pairs(seed, 200, 16)
        .map_err(e2s)?
        .iter()
        .map(|p| Example::pair(p, &pair_vocab))
        .collect();
    let variant = Variant::NtiSlstmLstmNodeByNodeGlobal;
    let mut model = synthetic_model(variant, Task::Nli, seed)?;
    let report = train_run(&mut model, &synthetic_train(seed, 50), &pairs, None, &pair_emb, |_| {}).map_err(e2s)?;
    let hit = first_perfect(&report.log);
    ensure(hit.is_some(), || {
        format!("{variant} contains_pair: final train accuracy {:?}", report.log.last("train", "accuracy"))
    })?;
    notes.push(format!("{variant} contains_pair 100% at epoch {}", hit.unwrap()));
    Ok(format!("{}; parity runs {secs:.1}s", notes.join(", ")))
}

fn pad_count(len: usize) -> usize {
    len.next_power_of_two() - len
}

fn padding_robustness() -> Outcome {
    let seed = 1;
    let parity = SyntheticKind::Parity;
    let vocab = Vocabulary::build(parity.alphabet().iter().copied(), false);
    let emb = EmbeddingTable::random(&vocab, SYNTH_K, 7);
    let train_s = synthetic_task(parity, seed, 2000, 16).map_err(e2s)?;
    let seen: HashSet<&Vec<String>> = train_s.iter().map(|s| &s.tokens).collect();
    let held: Vec<LabeledSentence> = synthetic_task(parity, 1000 + seed, 4000, 16)
        .map_err(e2s)?
        .into_iter()
        .filter(|s| !seen.contains(&s.tokens))
        .collect();
    let train: Vec<Example> = train_s.iter().map(|s| Example::sentence(s, &vocab)).collect();
    let mut model = synthetic_model(Variant::NtiSlstm, Task::Sentence, seed)?;
    let cfg = TrainConfig {
        eval_train: false,
        ..synthetic_train(seed, 30)
    };
    train_run(&mut model, &cfg, &train, None, &emb, |_| {}).map_err(e2s)?;
    let train_acc = evaluate_accuracy(&model, &train, &emb).map_err(e2s)?;
    ensure(train_acc == 1.0, || format!("model did not overfit: train accuracy {train_acc}"))?;

    let mut buckets: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for s in &held {
        let ex = Example::sentence(s, &vocab);
        let hit = predicted_label(&model, &ex, &emb).map_err(e2s)? == ex.label();
        let b = buckets.entry(pad_count(s.tokens.len())).or_default();
        b.0 += usize::from(hit);
        b.1 += 1;
    }
    let acc: Vec<f64> = buckets.values().map(|(c, n)| 100.0 * *c as f64 / *n as f64).collect();
    let spread = acc.iter().cloned().fold(f64::MIN, f64::max) - acc.iter().cloned().fold(f64::MAX, f64::min);
    let table: Vec<String> = buckets.iter().zip(&acc).map(|((p, (_, n)), a)| format!("{p}:{a:.1}%/{n}")).collect();
    let summary = format!("{} held-out, spread {spread:.2}pp [{}]", held.len(), table.join(" "));
    ensure(buckets.len() > 1 && spread <= 5.0, || summary.clone())?;
    Ok(summary)
}

// 8 ---------------------------------------------------------------------

fn sst_learnability() -> Outcome {
    let (train_s, dev_s, source) = match std::env::var_os("NTI_SST_DIR") {
        Some(dir) => {
            let dir = PathBuf::from(dir);
            (
                load_sst(&dir.join("train.txt"), SstMode::Fine).map_err(e2s)?,
                load_sst(&dir.join("dev.txt"), SstMode::Fine).map_err(e2s)?,
                "NTI_SST_DIR treebank",
            )
        }
        None => {
            // round-trip the generated treebank through the file reader
            let dir = tempfile::tempdir().map_err(e2s)?;
            let path = dir.path().join("bank.txt");
            let bank = synthetic_treebank(11, 1500, 20, 0.1).map_err(e2s)?;
            std::fs::write(&path, write_sst(&bank).map_err(e2s)?).map_err(e2s)?;
            let mut all = load_sst(&path, SstMode::Fine).map_err(e2s)?;
            let dev = all.split_off(1000);
            (all, dev, "generated treebank")
        }
    };
    let mut phrases = phrase_examples(&train_s);
    phrases.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    phrases.truncate(2000);
    let dev_s = &dev_s[..dev_s.len().min(500)];
    ensure(phrases.len() == 2000 && dev_s.len() == 500, || {
        format!("need 2000 phrases and 500 dev sentences, have {} and {}", phrases.len(), dev_s.len())
    })?;

    let mut vocab = Vocabulary::new(false);
    for s in train_s.iter().chain(dev_s) {
        for t in &s.tokens {
            vocab.insert(t);
        }
    }
    let emb = EmbeddingTable::random(&vocab, 50, 7);
    let train: Vec<Example> = phrases.iter().map(|s| Example::sentence(s, &vocab)).collect();
    let dev: Vec<Example> = dev_s.iter().map(|s| Example::sentence(s, &vocab)).collect();

    let mut counts = [0usize; 5];
    for ex in &train {
        counts[ex.label()] += 1;
    }
    let majority = argmax(&counts);
    let baseline = dev.iter().filter(|ex| ex.label() == majority).count() as f64 / dev.len() as f64;
    let mut dev_counts = [0usize; 5];
    for ex in &dev {
        dev_counts[ex.label()] += 1;
    }
    let best_constant = *dev_counts.iter().max().expect("five classes") as f64 / dev.len() as f64;

    let mut model = Model::<f64>::new(ModelConfig {
        k: 50,
        k_in: 50,
        mlp_hidden: 64,
        dropout_input: 0.0,
        dropout_output: 0.0,
        seed: 7,
        ..ModelConfig::for_variant(Variant::NtiSlstm, Task::Sst)
    })
    .map_err(e2s)?;
    let cfg = TrainConfig {
        batch_size: 32,
        lr: 1e-3,
        l2: 0.0,
        epochs: 10,
        seed: 7,
        eval_train: false,
    };
    let dev_set = EvalSet::Labeled(dev.clone());
    train_run(&mut model, &cfg, &train, Some(&dev_set), &emb, |_| {}).map_err(e2s)?;
    let acc = evaluate_accuracy(&model, &dev, &emb).map_err(e2s)?;
    let summary = format!(
        "{source}: dev {:.1}% vs majority {:.1}% (best constant {:.1}%)",
        100.0 * acc,
        100.0 * baseline,
        100.0 * best_constant
    );
    ensure(acc - baseline >= 0.05, || summary.clone())?;
    Ok(summary)
}

// 9 ---------------------------------------------------------------------

fn determinism() -> Outcome {
    let vocab = Vocabulary::build(SyntheticKind::ContainsPair.alphabet().iter().copied(), false);
    let emb = EmbeddingTable::<f64>::random(&vocab, 6, 3);
    let data: Vec<Example> = synthetic_pairs(5, 48, 8)
        .map_err(e2s)?
        .iter()
        .map(|p| Example::pair(p, &vocab))
        .collect();
    let (train, dev) = data.split_at(36);
    let dev = EvalSet::Labeled(dev.to_vec());
    let dir = tempfile::tempdir().map_err(e2s)?;
    let run = |tag: &str| -> Result<(Vec<u8>, Vec<u8>), String> {
        let mut model = Model::<f64>::new(ModelConfig {
            k: 6,
            k_in: 6,
            mlp_hidden: 8,
            dropout_input: 0.1,
            dropout_output: 0.1,
            seed: 13,
            ..ModelConfig::for_variant(Variant::FullTreeMatchGlobal, Task::Nli)
        })
        .map_err(e2s)?;
        let cfg = TrainConfig {
            batch_size: 5,
            epochs: 3,
            seed: 13,
            ..TrainConfig::default()
        };
        let report = train_run(&mut model, &cfg, train, Some(&dev), &emb, |_| {}).map_err(e2s)?;
        let log_path = dir.path().join(format!("{tag}.tsv"));
        let ckpt_path = dir.path().join(format!("{tag}.ckpt"));
        std::fs::write(&log_path, report.log.render()).map_err(e2s)?;
        model.save(&ckpt_path).map_err(e2s)?;
        Ok((std::fs::read(log_path).map_err(e2s)?, std::fs::read(ckpt_path).map_err(e2s)?))
    };
    let a = run("a")?;
    let b = run("b")?;
    ensure(a.0 == b.0, || "metric logs differ".into())?;
    ensure(a.1 == b.1, || "checkpoints differ".into())?;
    Ok(format!("metrics log {} bytes and checkpoint {} bytes identical across runs", a.0.len(), a.1.len()))
}

// 10 --------------------------------------------------------------------

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

/// Leaves of a bracketed tree: innermost `(label word)` groups, left to right.
fn bracket_leaves(line: &str) -> (Vec<String>, usize) {
    let mut leaves = Vec::new();
    let mut open = None;
    for (i, ch) in line.char_indices() {
        match ch {
            '(' => open = Some(i),
            ')' => {
                if let Some(o) = open.take() {
                    let inner: Vec<&str> = line[o + 1..i].split_whitespace().collect();
                    leaves.push(inner[1].to_string());
                }
            }
            _ => {}
        }
    }
    (leaves, line.matches('(').count())
}

fn loader_fidelity() -> Outcome {
    // SNLI: compare the binary-parse columns against the raw sentence columns
    let text = std::fs::read_to_string(fixture("snli_50.txt")).map_err(e2s)?;
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    let kept: Vec<&Vec<&str>> = rows.iter().filter(|r| r[0] != "-").collect();
    let snli = load_snli(&fixture("snli_50.txt")).map_err(e2s)?;
    ensure(rows.len() == 50 && snli.len() == kept.len(), || {
        format!("snli: {} rows, {} labeled, parsed {}", rows.len(), kept.len(), snli.len())
    })?;
    for (p, r) in snli.iter().zip(&kept) {
        ensure(p.label.name() == r[0] && p.premise == words(r[5]) && p.hypothesis == words(r[6]), || {
            format!("snli record differs: {p:?}")
        })?;
    }

    let text = std::fs::read_to_string(fixture("wikiqa_50.tsv")).map_err(e2s)?;
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    let qa = load_wikiqa(&fixture("wikiqa_50.tsv")).map_err(e2s)?;
    ensure(qa.len() == 50 && rows.len() == 50, || format!("wikiqa: parsed {} of {}", qa.len(), rows.len()))?;
    let mut ids: Vec<&str> = Vec::new();
    for (p, r) in qa.iter().zip(&rows) {
        if !ids.contains(&r[0]) {
            ids.push(r[0]);
        }
        let group = ids.iter().position(|&q| q == r[0]).expect("just added");
        ensure(
            p.question == words(r[1]) && p.answer == words(r[5]) && p.relevant == (r[6] == "1") && p.group == group,
            || format!("wikiqa record differs: {p:?}"),
        )?;
    }
    let groups = group_pairs(&qa);
    ensure(groups.len() == ids.len(), || format!("wikiqa: {} groups", groups.len()))?;

    let text = std::fs::read_to_string(fixture("sst_50.txt")).map_err(e2s)?;
    let sst = load_sst(&fixture("sst_50.txt"), SstMode::Fine).map_err(e2s)?;
    ensure(sst.len() == 50, || format!("sst: parsed {}", sst.len()))?;
    for (s, line) in sst.iter().zip(text.lines()) {
        let (leaves, brackets) = bracket_leaves(line);
        let root: usize = line[1..].split_whitespace().next().and_then(|l| l.parse().ok()).unwrap_or(99);
        ensure(s.tokens == leaves && s.phrases.len() == brackets && s.label == root, || {
            format!("sst record differs: {line}")
        })?;
    }
    let mut detail = format!(
        "fixtures: snli {}/50 labeled, wikiqa 50 in {} groups, sst 50 trees",
        snli.len(),
        groups.len()
    );

    let official: [(&str, [(&str, usize); 3]); 2] = [
        (
            "NTI_SNLI_DIR",
            [("snli_1.0_train.txt", 549_367), ("snli_1.0_dev.txt", 9_842), ("snli_1.0_test.txt", 9_824)],
        ),
        (
            "NTI_WIKIQA_DIR",
            [("WikiQA-train.tsv", 20_360), ("WikiQA-dev.tsv", 2_733), ("WikiQA-test.tsv", 6_165)],
        ),
    ];
    for (var, files) in official {
        let Some(dir) = std::env::var_os(var) else {
            detail.push_str(&format!("; {var} unset, full-split counts not checked"));
            continue;
        };
        for (file, want) in files {
            let path = Path::new(&dir).join(file);
            let got = if var == "NTI_SNLI_DIR" {
                load_snli(&path).map_err(e2s)?.len()
            } else {
                load_wikiqa(&path).map_err(e2s)?.len()
            };
            ensure(got == want, || format!("{file}: {got} records, expected {want}"))?;
        }
        detail.push_str(&format!("; {var} split counts match"));
    }
    Ok(detail)
}

// -----------------------------------------------------------------------

type Criterion = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("gradient suite", gradient_suite),
        ("equation fidelity", equation_fidelity),
        ("tree invariants", tree_invariants),
        ("distribution invariants", distribution_invariants),
        ("metric oracle", metric_oracle),
        ("overfit runs", overfit_runs),
        ("padding robustness", padding_robustness),
        ("desk-scale sst", sst_learnability),
        ("determinism", determinism),
        ("loader fidelity", loader_fidelity),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<(usize, &str, Criterion)> = criteria
        .iter()
        .enumerate()
        .filter(|(i, (name, _))| {
            filter.is_empty() || filter.iter().any(|f| name.contains(f.as_str()) || (i + 1).to_string() == *f)
        })
        .map(|(i, (name, f))| (i + 1, *name, *f))
        .collect();
    let run = |f: Criterion| std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
    let (timed, rest): (Vec<_>, Vec<_>) = selected.iter().partition(|(n, _, _)| [1, 3, 6].contains(n));
    let mut results: Vec<(usize, Outcome)> = timed.iter().map(|(n, _, f)| (*n, run(*f))).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = rest.iter().map(|(n, _, f)| (*n, s.spawn(move || run(*f)))).collect();
        for (n, h) in handles {
            results.push((n, h.join().unwrap_or_else(|_| Err("panicked".into()))));
        }
    });
    results.sort_by_key(|(n, _)| *n);
    let results = results.into_iter().map(|(_, r)| r);
    let mut failed = 0;
    for ((n, name, _), r) in selected.iter().zip(results) {
        match r {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", selected.len() - failed, selected.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
