//! Sparse linear transition classifier and its averaged-perceptron trainer.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::features::extract_features;
use super::oracle::{oracle, OracleFailure};
use super::transition::{Transition, TransitionKind, TransitionState};
use crate::category::Category;
use crate::graph::Passage;

/// Weights per feature id, one per transition class.
///
/// Classes are the four unlabeled transitions followed by every labeled
/// kind crossed with every label: class `4 + k * labels + l`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseModel {
    labels: Vec<Category>,
    weights: BTreeMap<u64, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error(transparent)]
    Oracle(#[from] OracleFailure),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("model has no labels")]
    NoLabels,
    #[error("duplicate label {0}")]
    DuplicateLabel(Category),
    #[error("feature {feature:#x} has {found} weights, expected {expected}")]
    WeightCount {
        feature: u64,
        found: usize,
        expected: usize,
    },
}

impl SparseModel {
    /// A model with no weights: every class scores zero. An empty label
    /// list stands for every scored category.
    pub fn uniform(labels: Vec<Category>) -> Self {
        let labels = if labels.is_empty() {
            Category::ALL.into_iter().filter(Category::is_scored).collect()
        } else {
            labels
        };
        SparseModel {
            labels,
            weights: BTreeMap::new(),
        }
    }

    pub fn from_parts(
        labels: Vec<Category>,
        weights: BTreeMap<u64, Vec<f64>>,
    ) -> Result<Self, ModelError> {
        if labels.is_empty() {
            return Err(ModelError::NoLabels);
        }
        let mut seen = BTreeSet::new();
        for l in &labels {
            if !seen.insert(l) {
                return Err(ModelError::DuplicateLabel(l.clone()));
            }
        }
        let expected = class_count(labels.len());
        for (&feature, w) in &weights {
            if w.len() != expected {
                return Err(ModelError::WeightCount {
                    feature,
                    found: w.len(),
                    expected,
                });
            }
        }
        Ok(SparseModel { labels, weights })
    }

    pub fn labels(&self) -> &[Category] {
        &self.labels
    }

    pub fn weights(&self) -> &BTreeMap<u64, Vec<f64>> {
        &self.weights
    }

    pub fn class_count(&self) -> usize {
        class_count(self.labels.len())
    }

    pub fn class_of(&self, t: &Transition) -> Option<usize> {
        let kind = t.kind();
        if let Some(i) = TransitionKind::UNLABELED.iter().position(|k| *k == kind) {
            return Some(i);
        }
        let k = TransitionKind::LABELED.iter().position(|x| *x == kind)?;
        let l = self.labels.iter().position(|x| Some(x) == t.category())?;
        Some(4 + k * self.labels.len() + l)
    }

    pub fn scores(&self, features: &[u64]) -> Vec<f64> {
        let mut out = vec![0.0; self.class_count()];
        for f in features {
            if let Some(w) = self.weights.get(f) {
                for (o, x) in out.iter_mut().zip(w) {
                    *o += x;
                }
            }
        }
        out
    }

    /// Legal transitions of `s` that this model can score, best first.
    /// Ties go to the lower class index.
    pub fn ranked(&self, s: &TransitionState) -> Vec<(Transition, f64)> {
        let scores = self.scores(&extract_features(s));
        let mut legal: Vec<(usize, Transition)> = s
            .legal_transitions(&self.labels)
            .into_iter()
            .filter_map(|t| self.class_of(&t).map(|c| (c, t)))
            .collect();
        legal.sort_by(|a, b| scores[b.0].total_cmp(&scores[a.0]).then(a.0.cmp(&b.0)));
        legal.into_iter().map(|(c, t)| (t, scores[c])).collect()
    }
}

fn class_count(labels: usize) -> usize {
    TransitionKind::UNLABELED.len() + TransitionKind::LABELED.len() * labels
}

/// Outcome of a training run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainReport {
    /// Wrong predictions per epoch run.
    pub mistakes: Vec<usize>,
    pub states_per_epoch: usize,
}

/// Running sums for lazy averaging: for every weight, the sum of
/// `step * delta` over its updates.
struct Averaged {
    timed: BTreeMap<u64, Vec<f64>>,
    step: f64,
}

impl Averaged {
    fn update(&mut self, model: &mut SparseModel, features: &[u64], class: usize, delta: f64) {
        let n = model.class_count();
        for &f in features {
            model.weights.entry(f).or_insert_with(|| vec![0.0; n])[class] += delta;
            self.timed.entry(f).or_insert_with(|| vec![0.0; n])[class] += self.step * delta;
        }
    }

    fn average(&self, current: BTreeMap<u64, Vec<f64>>) -> BTreeMap<u64, Vec<f64>> {
        current
            .into_iter()
            .filter_map(|(f, w)| {
                let t = &self.timed[&f];
                let avg: Vec<f64> = w.iter().zip(t).map(|(w, t)| w - t / self.step).collect();
                avg.iter().any(|x| *x != 0.0).then_some((f, avg))
            })
            .collect()
    }
}

/// Labels used anywhere in `corpus`, sorted.
pub fn corpus_labels(corpus: &[Passage]) -> Vec<Category> {
    let set: BTreeSet<&Category> = corpus
        .iter()
        .flat_map(|p| p.edges().iter().map(|e| &e.category))
        .collect();
    set.into_iter().cloned().collect()
}

/// Averaged perceptron over oracle states. The passage order is reshuffled
/// every epoch from `seed`; training stops early once an epoch makes no
/// mistakes and the averaged weights replay the corpus without error.
/// With `epochs == 0` the result is the uniform model.
pub fn train(
    corpus: &[Passage],
    epochs: usize,
    seed: u64,
) -> Result<(SparseModel, TrainReport), TrainError> {
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let labels = corpus_labels(corpus);
    let sequences = corpus
        .iter()
        .map(oracle)
        .collect::<Result<Vec<_>, _>>()?;
    let mut model = SparseModel::uniform(labels);
    let mut acc = Averaged {
        timed: BTreeMap::new(),
        step: 1.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut report = TrainReport {
        mistakes: Vec::new(),
        states_per_epoch: sequences.iter().map(Vec::len).sum(),
    };

    for _ in 0..epochs {
        order.shuffle(&mut rng);
        let mut mistakes = 0;
        for &i in &order {
            let gold = &corpus[i];
            let mut s = TransitionState::new(gold.id(), gold.terminals().to_vec());
            for t in &sequences[i] {
                let features = extract_features(&s);
                let predicted = model.ranked(&s).into_iter().next().map(|(t, _)| t);
                if predicted.as_ref() != Some(t) {
                    mistakes += 1;
                    let g = model.class_of(t).expect("oracle labels come from the corpus");
                    acc.update(&mut model, &features, g, 1.0);
                    if let Some(p) = predicted {
                        let p = model.class_of(&p).expect("ranked only returns known classes");
                        acc.update(&mut model, &features, p, -1.0);
                    }
                }
                acc.step += 1.0;
                s.apply(t.clone()).expect("oracle sequences are legal");
            }
        }
        report.mistakes.push(mistakes);
        // the averaged weights lag behind the live ones, so only stop once
        // they too replay every sequence
        if mistakes == 0 {
            let averaged = SparseModel {
                labels: model.labels.clone(),
                weights: acc.average(model.weights.clone()),
            };
            if replay_mistakes(&averaged, corpus, &sequences) == 0 {
                break;
            }
        }
    }
    let current = core::mem::take(&mut model.weights);
    model.weights = acc.average(current);
    Ok((model, report))
}

/// Oracle states on which `model`'s best transition differs from the gold
/// one, following the gold sequence throughout.
pub fn replay_mistakes(model: &SparseModel, corpus: &[Passage], sequences: &[Vec<Transition>]) -> usize {
    let mut mistakes = 0;
    for (gold, seq) in corpus.iter().zip(sequences) {
        let mut s = TransitionState::new(gold.id(), gold.terminals().to_vec());
        for t in seq {
            if model.ranked(&s).first().map(|(p, _)| p) != Some(t) {
                mistakes += 1;
            }
            s.apply(t.clone()).expect("oracle sequences are legal");
        }
    }
    mistakes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples::{figure1, figure2};
    use crate::synth::{corpus, SynthConfig};

    #[test]
    fn empty_corpus_is_an_error() {
        assert_eq!(train(&[], 3, 0).unwrap_err(), TrainError::EmptyCorpus);
    }

    #[test]
    fn zero_epochs_give_the_uniform_model() {
        let gold = [figure1().passage];
        let (model, report) = train(&gold, 0, 0).unwrap();
        assert!(model.weights().is_empty());
        assert!(report.mistakes.is_empty());
        assert_eq!(model.labels(), corpus_labels(&gold).as_slice());
    }

    #[test]
    fn same_seed_same_model() {
        let gold = corpus(3, 8, &SynthConfig::default());
        let a = train(&gold, 4, 17).unwrap();
        let b = train(&gold, 4, 17).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn classes_cover_every_transition_once() {
        let model = SparseModel::uniform(vec![Category::A, Category::P]);
        assert_eq!(model.class_count(), 16);
        let mut seen = BTreeSet::new();
        for k in TransitionKind::UNLABELED {
            assert!(seen.insert(model.class_of(&k.with(None).unwrap()).unwrap()));
        }
        for k in TransitionKind::LABELED {
            for l in model.labels().to_vec() {
                assert!(seen.insert(model.class_of(&k.with(Some(l)).unwrap()).unwrap()));
            }
        }
        assert_eq!(seen.len(), 16);
        assert_eq!(model.class_of(&Transition::Node(Category::C)), None);
    }

    #[test]
    fn trained_model_replays_its_corpus() {
        let gold = [figure1().passage, figure2().passage];
        let (model, _) = train(&gold, 30, 5).unwrap();
        let seqs: Vec<_> = gold.iter().map(|g| oracle(g).unwrap()).collect();
        assert_eq!(replay_mistakes(&model, &gold, &seqs), 0);
    }

    #[test]
    fn malformed_parts_are_rejected() {
        let mut w = BTreeMap::new();
        w.insert(1, vec![0.0; 3]);
        assert!(matches!(
            SparseModel::from_parts(vec![Category::A], w),
            Err(ModelError::WeightCount { expected: 10, .. })
        ));
        assert_eq!(
            SparseModel::from_parts(vec![], BTreeMap::new()),
            Err(ModelError::NoLabels)
        );
    }
}
