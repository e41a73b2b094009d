//! Greedy decoding with a hard transition budget.
//!
//! The decoder follows the model's best legal transition unless doing so
//! would leave too few transitions to finish. The fallback is a fixed
//! completion procedure that always reaches FINISH, so decoding is total.

use alloc::vec::Vec;

use super::model::SparseModel;
use super::transition::{NodeKind, Transition, TransitionKind, TransitionState};
use crate::category::Category;
use crate::graph::{Passage, Terminal};

/// Most transitions a parse of `n` tokens may take.
pub fn transition_budget(n: usize) -> usize {
    10 * n + 10
}

/// The completion procedure's next move, as a transition kind.
///
/// Shifts everything, gives the first token a parent, then attaches the
/// remaining parentless nodes to one another pairwise.
pub fn completion_step(s: &TransitionState) -> Option<TransitionKind> {
    if s.is_finished() {
        return None;
    }
    if s.is_legal(&Transition::Finish) {
        return Some(TransitionKind::Finish);
    }
    if s.is_legal(&Transition::Reduce) {
        return Some(TransitionKind::Reduce);
    }
    if !s.buffer().is_empty() {
        return Some(TransitionKind::Shift);
    }
    let (Some(s0), s1) = (s.s(0), s.s(1)) else {
        unreachable!("a parentless node always stays on the stack or in the buffer");
    };
    let Some(s1) = s1 else {
        return Some(TransitionKind::Node);
    };
    if s.primary_parent(s1).is_some() {
        return Some(TransitionKind::Swap);
    }
    let nodes = s.nodes();
    if nodes[s0].kind == NodeKind::NonTerminal && !s.reaches(s1, s0) {
        Some(TransitionKind::LeftEdge)
    } else if nodes[s1].kind == NodeKind::NonTerminal && !s.reaches(s0, s1) {
        Some(TransitionKind::RightEdge)
    } else {
        Some(TransitionKind::Node)
    }
}

/// Length of the completion procedure from `s`.
pub fn completion_cost(s: &TransitionState) -> usize {
    let mut s = s.clone();
    let mut steps = 0;
    while let Some(kind) = completion_step(&s) {
        let t = kind
            .with(kind.is_labeled().then_some(Category::A))
            .expect("label given for labeled kinds");
        s.apply(t).expect("completion steps are legal");
        steps += 1;
    }
    steps
}

/// False when the edge `next` just added breaks an error-level guideline:
/// a second primary Process or State under one unit, or a U edge to
/// anything but a punctuation token. Gold data may break these, so they
/// are enforced when decoding and not in the transition system.
fn keeps_guidelines(next: &TransitionState) -> bool {
    let Some(last) = next.history().last() else {
        return true;
    };
    if !last.kind().is_labeled() {
        return true;
    }
    let Some(e) = next.edges().last() else {
        return true;
    };
    let nodes = next.nodes();
    match e.category {
        Category::U => match nodes[e.child].kind {
            NodeKind::Terminal(pos) => next.tokens()[pos as usize - 1].punct,
            _ => false,
        },
        ref c if c.is_main_relation() && !e.remote => {
            nodes[e.parent]
                .outgoing
                .iter()
                .map(|&i| &next.edges()[i])
                .filter(|o| !o.remote && o.category.is_main_relation())
                .count()
                == 1
        }
        _ => true,
    }
}

/// Parses `tokens` and also returns the transitions taken.
pub fn parse_with_trace(
    passage_id: &str,
    tokens: &[Terminal],
    model: &SparseModel,
) -> (Passage, Vec<Transition>) {
    let budget = transition_budget(tokens.len());
    let mut s = TransitionState::new(passage_id, tokens.to_vec());
    debug_assert!(completion_cost(&s) <= budget);
    while !s.is_finished() {
        let ranked = model.ranked(&s);
        let taken = s.history().len();
        let chosen = ranked
            .iter()
            .find_map(|(t, _)| s.successor(t.clone()).ok().filter(keeps_guidelines))
            .filter(|next| taken + 1 + completion_cost(next) <= budget);
        s = match chosen {
            Some(next) => next,
            None => {
                let kind = completion_step(&s).expect("not finished");
                if kind.is_labeled() {
                    // best-scoring label of the fallback kind, else A
                    ranked
                        .iter()
                        .filter(|(t, _)| t.kind() == kind)
                        .find_map(|(t, _)| s.successor(t.clone()).ok().filter(keeps_guidelines))
                        .unwrap_or_else(|| {
                            let t = kind.with(Some(Category::A)).unwrap();
                            s.successor(t).expect("completion steps are legal")
                        })
                } else {
                    s.successor(kind.with(None).unwrap())
                        .expect("completion steps are legal")
                }
            }
        };
    }
    debug_assert!(s.history().len() <= budget);
    let passage = s.to_passage().expect("a finished state is a valid passage");
    (passage, s.history().to_vec())
}

/// Greedy parse of a token sequence.
pub fn parse(passage_id: &str, tokens: &[Terminal], model: &SparseModel) -> Passage {
    parse_with_trace(passage_id, tokens, model).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::{score_pair, EvalOptions};
    use crate::parser::{oracle, train};
    use crate::samples::{figure1, figure2};
    use crate::synth::{corpus, SynthConfig};
    use crate::validate::{same_graph, validate, Severity};
    use alloc::format;
    use alloc::vec;

    fn words(n: usize) -> Vec<Terminal> {
        (1..=n)
            .map(|i| Terminal::new(i as u32, format!("w{i}"), false))
            .collect()
    }

    #[test]
    fn completion_cost_from_the_initial_state() {
        for n in 1..20 {
            let s = TransitionState::new("c", words(n));
            assert_eq!(completion_cost(&s), 5 * n);
            assert!(completion_cost(&s) <= transition_budget(n));
        }
    }

    #[test]
    fn untrained_model_gives_valid_passages() {
        let model = SparseModel::uniform(vec![]);
        for n in 1..25 {
            let (p, trace) = parse_with_trace("u", &words(n), &model);
            assert_eq!(p.terminals().len(), n);
            assert!(trace.len() <= transition_budget(n));
            let errors: Vec<_> = validate(&p)
                .into_iter()
                .filter(|v| v.severity == Severity::Error)
                .collect();
            assert!(errors.is_empty(), "{n} tokens: {errors:?}");
        }
    }

    #[test]
    fn one_token_gives_root_and_preterminal() {
        let model = SparseModel::uniform(vec![Category::H]);
        let tokens = words(1);
        let p = parse("one", &tokens, &model);
        assert_eq!(p.units().len(), 2);
        assert_eq!(p.edges().len(), 1);
        // the only possible gold with this label set
        let r = score_pair(&p, &p, &EvalOptions::default()).unwrap();
        assert_eq!(r.primary.f1(), 1.0);
    }

    #[test]
    fn adversarial_weights_still_terminate() {
        // a model that loves SWAP and NODE would loop forever without the budget
        let mut weights = alloc::collections::BTreeMap::new();
        let labels = vec![Category::A];
        let bias = crate::parser::features::extract_features(&TransitionState::new("x", words(1)))[0];
        let mut w = vec![0.0; 10];
        w[2] = 5.0; // SWAP
        w[4] = 4.0; // NODE-A
        w[5] = 3.0; // IMPLICIT-A
        weights.insert(bias, w);
        let model = SparseModel::from_parts(labels, weights).unwrap();
        for n in 1..15 {
            let (p, trace) = parse_with_trace("adv", &words(n), &model);
            assert!(trace.len() <= transition_budget(n));
            assert_eq!(p.terminals().len(), n);
        }
    }

    #[test]
    fn oracle_sequences_fit_the_budget_on_references() {
        for g in [figure1().passage, figure2().passage] {
            let seq = oracle(&g).unwrap();
            assert!(seq.len() <= transition_budget(g.terminals().len()), "{}", seq.len());
        }
    }

    #[test]
    fn overfit_model_reproduces_training_passages() {
        let gold = vec![figure1().passage, figure2().passage];
        let (model, report) = train(&gold, 30, 1).unwrap();
        assert_eq!(report.mistakes.last(), Some(&0));
        for g in &gold {
            let (p, trace) = parse_with_trace(g.id(), g.terminals(), &model);
            assert_eq!(trace, oracle(g).unwrap());
            assert!(same_graph(&p, g));
        }
    }

    #[test]
    fn parses_of_synthetic_passages_are_valid() {
        let cfg = SynthConfig::default();
        let train_set = corpus(9, 20, &cfg);
        let (model, _) = train(&train_set, 3, 4).unwrap();
        for g in corpus(10, 30, &cfg) {
            let (p, trace) = parse_with_trace(g.id(), g.terminals(), &model);
            assert!(trace.len() <= transition_budget(g.terminals().len()));
            assert_eq!(p.terminals(), g.terminals());
            assert!(validate(&p).iter().all(|v| v.severity == Severity::Warning));
        }
    }
}
