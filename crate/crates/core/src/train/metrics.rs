use crate::data::EmbeddingTable;
use crate::error::{Error, Result};
use crate::models::{Example, Model};
use crate::scalar::Scalar;

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Fraction of `predicted[i] == gold[i]`.
pub fn accuracy(predicted: &[usize], gold: &[usize]) -> Result<f64> {
    if predicted.is_empty() || predicted.len() != gold.len() {
        return Err(Error::InvalidInput(format!(
            "accuracy over {} predictions and {} labels",
            predicted.len(),
            gold.len()
        )));
    }
    let hits = predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / gold.len() as f64)
}

/// Predicted class: argmax of the distribution, or `p > 0.5` for relevance.
pub fn predicted_label<T: Scalar>(model: &Model<T>, ex: &Example, emb: &EmbeddingTable<T>) -> Result<usize> {
    let out = model.predict(ex, emb)?;
    Ok(match ex {
        Example::Qa { .. } => usize::from(out[0] > T::lit(0.5)),
        _ => argmax(&out),
    })
}

pub fn evaluate_accuracy<T: Scalar>(model: &Model<T>, examples: &[Example], emb: &EmbeddingTable<T>) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::InvalidInput("accuracy of an empty example set".into()));
    }
    let predicted = examples
        .iter()
        .map(|ex| predicted_label(model, ex, emb))
        .collect::<Result<Vec<_>>>()?;
    let gold: Vec<usize> = examples.iter().map(Example::label).collect();
    accuracy(&predicted, &gold)
}

/// Candidate scores and relevance flags of one question, in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedGroup {
    pub scores: Vec<f64>,
    pub relevant: Vec<bool>,
}

/// MAP and MRR. Candidates are ranked by descending score with ties kept in
/// their original order; groups with no relevant candidate are skipped.
pub fn map_mrr(groups: &[RankedGroup]) -> Result<(f64, f64)> {
    let mut ap_sum = 0.0;
    let mut rr_sum = 0.0;
    let mut n = 0usize;
    for g in groups {
        if g.scores.len() != g.relevant.len() {
            return Err(Error::InvalidInput("scores and relevance flags differ in length".into()));
        }
        if !g.relevant.iter().any(|&r| r) {
            continue;
        }
        let mut order: Vec<usize> = (0..g.scores.len()).collect();
        order.sort_by(|&a, &b| g.scores[b].total_cmp(&g.scores[a]));
        let mut hits = 0usize;
        let mut precision_sum = 0.0;
        let mut first = None;
        for (rank, &i) in order.iter().enumerate() {
            if g.relevant[i] {
                hits += 1;
                precision_sum += hits as f64 / (rank + 1) as f64;
                first.get_or_insert(rank + 1);
            }
        }
        ap_sum += precision_sum / hits as f64;
        rr_sum += 1.0 / first.expect("group has a relevant candidate") as f64;
        n += 1;
    }
    if n == 0 {
        return Err(Error::InvalidInput("no group has a relevant candidate".into()));
    }
    Ok((ap_sum / n as f64, rr_sum / n as f64))
}

/// Scores every candidate with the model and computes MAP and MRR.
pub fn evaluate_map_mrr<T: Scalar>(
    model: &Model<T>,
    groups: &[Vec<Example>],
    emb: &EmbeddingTable<T>,
) -> Result<(f64, f64)> {
    let mut ranked = Vec::with_capacity(groups.len());
    for group in groups {
        let mut scores = Vec::with_capacity(group.len());
        let mut relevant = Vec::with_capacity(group.len());
        for ex in group {
            let Example::Qa { relevant: r, .. } = ex else {
                return Err(Error::InvalidInput("ranking needs question/answer examples".into()));
            };
            scores.push(model.predict(ex, emb)?[0].as_f64());
            relevant.push(*r);
        }
        ranked.push(RankedGroup { scores, relevant });
    }
    map_mrr(&ranked)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(scores: &[f64], relevant: &[bool]) -> RankedGroup {
        RankedGroup {
            scores: scores.to_vec(),
            relevant: relevant.to_vec(),
        }
    }

    #[test]
    fn hand_cases() {
        let g = group(&[0.9, 0.5, 0.1], &[false, true, false]);
        assert_eq!(map_mrr(&[g]).unwrap(), (0.5, 0.5));
        let g = group(&[0.9, 0.5, 0.1], &[true, false, false]);
        assert_eq!(map_mrr(&[g]).unwrap(), (1.0, 1.0));
        let g = group(&[0.9, 0.5, 0.1], &[true, false, true]);
        let (map, mrr) = map_mrr(&[g]).unwrap();
        assert!((map - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(mrr, 1.0);
    }

    #[test]
    fn ties_keep_file_order_and_empty_groups_skip() {
        let g = group(&[0.5, 0.5, 0.5], &[false, true, false]);
        let none = group(&[0.1], &[false]);
        assert_eq!(map_mrr(&[g, none.clone()]).unwrap(), (0.5, 0.5));
        assert!(map_mrr(&[none]).is_err());
    }

    #[test]
    fn accuracy_rules() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[1.0, 1.0, 1.0]), 0);
        assert_eq!(accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert!(accuracy(&[], &[]).is_err());
    }
}
