//! Random well-formed passages for property tests and smoke training.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::category::Category;
use crate::graph::{Passage, PassageBuilder, Terminal};

/// Shape of generated passages.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SynthConfig {
    pub max_tokens: usize,
    pub remote: bool,
    pub discontinuous: bool,
    pub implicit: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            max_tokens: 10,
            remote: true,
            discontinuous: true,
            implicit: true,
        }
    }
}

const LABELS: [Category; 12] = [
    Category::P,
    Category::S,
    Category::A,
    Category::D,
    Category::C,
    Category::E,
    Category::N,
    Category::R,
    Category::F,
    Category::L,
    Category::H,
    Category::G,
];

const WORDS: [&str; 12] = [
    "the", "dog", "saw", "a", "cat", "in", "park", "and", "ran", "home", "very", "quickly",
];

#[derive(Clone)]
enum Kind {
    Pre(u32),
    Unit,
    Implicit,
}

struct Draft {
    kind: Vec<Kind>,
    // (parent, child, category, remote)
    edges: Vec<(usize, usize, Category, bool)>,
}

impl Draft {
    fn add(&mut self, k: Kind) -> usize {
        self.kind.push(k);
        self.kind.len() - 1
    }

    fn reaches(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.kind.len()];
        let mut stack = vec![from];
        while let Some(u) = stack.pop() {
            if u == to {
                return true;
            }
            if !core::mem::replace(&mut seen[u], true) {
                stack.extend(self.edges.iter().filter(|e| e.0 == u).map(|e| e.1));
            }
        }
        false
    }

    fn primary_children(&self, u: usize) -> usize {
        self.edges.iter().filter(|e| e.0 == u && !e.3).count()
    }
}

fn label<R: Rng + ?Sized>(rng: &mut R) -> Category {
    LABELS.choose(rng).expect("non-empty").clone()
}

/// Builds the subtree over tokens `lo..hi` and returns its node.
fn span<R: Rng + ?Sized>(rng: &mut R, d: &mut Draft, punct: &[bool], lo: usize, hi: usize) -> usize {
    if hi - lo == 1 {
        return d.add(Kind::Pre(lo as u32 + 1));
    }
    let parts = rng.gen_range(2..=(hi - lo).min(4));
    let mut cuts: Vec<usize> = (lo + 1..hi).collect();
    cuts.shuffle(rng);
    cuts.truncate(parts - 1);
    cuts.sort_unstable();
    let u = d.add(Kind::Unit);
    let mut start = lo;
    for end in cuts.into_iter().chain(core::iter::once(hi)) {
        let c = span(rng, d, punct, start, end);
        let cat = match d.kind[c] {
            Kind::Pre(pos) if punct[pos as usize - 1] => Category::U,
            _ => label(rng),
        };
        d.edges.push((u, c, cat, false));
        start = end;
    }
    u
}

/// Generates one random passage. Every flag in `cfg` is a permission, not a
/// promise: a small passage may come out without the requested phenomenon.
pub fn passage<R: Rng + ?Sized>(rng: &mut R, id: impl Into<String>, cfg: &SynthConfig) -> Passage {
    let n = rng.gen_range(1..=cfg.max_tokens.max(1));
    let tokens: Vec<Terminal> = (0..n)
        .map(|i| {
            let pos = i as u32 + 1;
            if i + 1 == n && n > 2 && rng.gen_bool(0.5) {
                Terminal::new(pos, ".", true)
            } else {
                Terminal::new(pos, *WORDS.choose(rng).expect("non-empty"), false)
            }
        })
        .collect();
    passage_over(rng, id, &tokens, cfg)
}

/// A random structure over the given tokens, which must be numbered 1..n.
pub fn passage_over<R: Rng + ?Sized>(
    rng: &mut R,
    id: impl Into<String>,
    tokens: &[Terminal],
    cfg: &SynthConfig,
) -> Passage {
    let n = tokens.len();
    assert!(n > 0, "a passage needs at least one token");
    let punct: Vec<bool> = tokens.iter().map(|t| t.punct).collect();

    let mut d = Draft {
        kind: Vec::new(),
        edges: Vec::new(),
    };
    let mut root = span(rng, &mut d, &punct, 0, n);
    if matches!(d.kind[root], Kind::Pre(_)) {
        let wrapper = d.add(Kind::Unit);
        d.edges.push((wrapper, root, label(rng), false));
        root = wrapper;
    }
    let units: Vec<usize> = (0..d.kind.len())
        .filter(|&u| matches!(d.kind[u], Kind::Unit))
        .collect();

    if cfg.discontinuous && units.len() > 1 {
        // hand a token over to an unrelated unit
        for _ in 0..4 {
            let target = *units.choose(rng).expect("non-empty");
            let candidates: Vec<usize> = (0..d.edges.len())
                .filter(|&i| {
                    let (p, c, _, _) = d.edges[i];
                    matches!(d.kind[c], Kind::Pre(_))
                        && p != target
                        && d.primary_children(p) > 1
                        && !d.reaches(c, target)
                })
                .collect();
            if let Some(&i) = candidates.choose(rng) {
                d.edges[i].0 = target;
                break;
            }
        }
    }

    if cfg.implicit && rng.gen_bool(0.7) {
        let host = *units.choose(rng).expect("root is a unit");
        let imp = d.add(Kind::Implicit);
        d.edges.push((host, imp, Category::A, false));
    }

    if cfg.remote {
        let count = rng.gen_range(0..=2);
        for _ in 0..count {
            let parent = *units.choose(rng).expect("root is a unit");
            let child = rng.gen_range(0..d.kind.len());
            if child == root || d.reaches(child, parent) {
                continue;
            }
            d.edges.push((parent, child, label(rng), true));
        }
    }

    let mut b = PassageBuilder::new(id);
    for t in tokens {
        b.terminal(t.text.clone(), t.punct);
    }
    let ids: Vec<_> = d
        .kind
        .iter()
        .map(|k| match k {
            Kind::Pre(pos) => b.preterminal(*pos),
            Kind::Unit => b.unit(),
            Kind::Implicit => b.implicit(),
        })
        .collect();
    for (p, c, cat, remote) in d.edges {
        if remote {
            b.remote(ids[p], ids[c], cat);
        } else {
            b.edge(ids[p], ids[c], cat);
        }
    }
    b.build().expect("generator only produces valid passages")
}

/// `count` passages from a fixed seed, with ids `synth-0`, `synth-1`, ...
pub fn corpus(seed: u64, count: usize, cfg: &SynthConfig) -> Vec<Passage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| passage(&mut rng, format!("synth-{i}"), cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::{validate, Rule};

    #[test]
    fn generated_passages_are_valid() {
        let cfg = SynthConfig::default();
        for p in corpus(7, 300, &cfg) {
            assert!(validate(&p)
                .iter()
                .all(|v| !matches!(v.rule, Rule::MalformedGraph)));
        }
    }

    #[test]
    fn flags_cover_every_phenomenon() {
        let cfg = SynthConfig {
            max_tokens: 12,
            ..SynthConfig::default()
        };
        let ps = corpus(11, 200, &cfg);
        assert!(ps.iter().any(|p| !p.edge_partition().1.is_empty()));
        assert!(ps.iter().any(|p| p.units().iter().any(|u| u.implicit)));
        assert!(ps
            .iter()
            .any(|p| p.units().iter().any(|u| p.is_discontinuous(u.id).unwrap())));
    }

    #[test]
    fn disabled_flags_are_respected() {
        let cfg = SynthConfig {
            max_tokens: 12,
            remote: false,
            discontinuous: false,
            implicit: false,
        };
        for p in corpus(3, 100, &cfg) {
            assert!(p.edge_partition().1.is_empty());
            assert!(p.units().iter().all(|u| !u.implicit));
            assert!(p.units().iter().all(|u| !p.is_discontinuous(u.id).unwrap()));
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let cfg = SynthConfig::default();
        assert_eq!(corpus(5, 20, &cfg), corpus(5, 20, &cfg));
    }
}
