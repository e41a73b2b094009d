//! Static oracle: the transition sequence that rebuilds a gold passage.
//!
//! Units are created bottom-up. A unit's node is made with NODE from its
//! leftmost child once that child's own subtree is finished, followed by its
//! implicit children; the remaining children are then brought next to it
//! with SHIFT and SWAP. Whenever the two topmost nodes share a missing gold
//! edge it is added at once, and a node whose gold edges all exist is
//! reduced.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use super::transition::{Transition, TransitionState};
use crate::graph::Passage;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("oracle failed on passage {passage} after {step} transitions: {reason}")]
pub struct OracleFailure {
    pub passage: String,
    pub step: usize,
    pub reason: String,
}

struct Oracle<'g> {
    gold: &'g Passage,
    state: TransitionState,
    /// gold unit index to state node
    node_of: Vec<Option<usize>>,
    /// state node to gold unit index
    gold_of: Vec<Option<usize>>,
    done: Vec<bool>,
    /// gold edge indices touching each gold unit, ascending
    incident: Vec<Vec<usize>>,
    root: usize,
    limit: usize,
}

impl<'g> Oracle<'g> {
    fn new(gold: &'g Passage) -> Self {
        let units = gold.units();
        let mut node_of = vec![None; units.len()];
        let mut gold_of = vec![None; gold.terminals().len()];
        for (i, u) in units.iter().enumerate() {
            if let Some(pos) = u.terminal {
                node_of[i] = Some(pos as usize - 1);
                gold_of[pos as usize - 1] = Some(i);
            }
        }
        let mut incident = vec![Vec::new(); units.len()];
        for ei in 0..gold.edges().len() {
            let (p, c) = gold.edge_ends(ei);
            incident[p].push(ei);
            incident[c].push(ei);
        }
        Oracle {
            gold,
            state: TransitionState::new(gold.id(), gold.terminals().to_vec()),
            node_of,
            gold_of,
            done: vec![false; gold.edges().len()],
            incident,
            root: gold.root_index(),
            limit: 40 * (units.len() + gold.edges().len()) + 100,
        }
    }

    fn fail(&self, reason: impl Into<String>) -> OracleFailure {
        OracleFailure {
            passage: String::from(self.gold.id()),
            step: self.state.history().len(),
            reason: reason.into(),
        }
    }

    fn step(&mut self, t: Transition) -> Result<(), OracleFailure> {
        if self.state.history().len() >= self.limit {
            return Err(self.fail("transition limit exceeded"));
        }
        self.state
            .apply(t)
            .map_err(|e| self.fail(format!("{e}")))
    }

    fn step_creating(&mut self, t: Transition, gold_unit: usize) -> Result<usize, OracleFailure> {
        self.step(t)?;
        let node = self.state.nodes().len() - 1;
        self.node_of[gold_unit] = Some(node);
        self.gold_of.push(Some(gold_unit));
        Ok(node)
    }

    fn node(&self, gold_unit: usize) -> Result<usize, OracleFailure> {
        self.node_of[gold_unit].ok_or_else(|| self.fail("unit has no node yet"))
    }

    /// A missing gold edge between nodes `a` and `b`, and whether `a` is its
    /// parent.
    fn pending(&self, a: usize, b: usize) -> Option<(usize, bool)> {
        let (ga, gb) = (self.gold_of[a]?, self.gold_of[b]?);
        self.incident[ga].iter().find_map(|&ei| {
            if self.done[ei] {
                return None;
            }
            match self.gold.edge_ends(ei) {
                (p, c) if p == ga && c == gb => Some((ei, true)),
                (p, c) if p == gb && c == ga => Some((ei, false)),
                _ => None,
            }
        })
    }

    fn complete(&self, node: usize) -> bool {
        match self.gold_of[node] {
            Some(g) => self.incident[g].iter().all(|&ei| self.done[ei]),
            None => false,
        }
    }

    fn settle(&mut self) -> Result<(), OracleFailure> {
        loop {
            if let (Some(s0), Some(s1)) = (self.state.s(0), self.state.s(1)) {
                if let Some((ei, s0_is_parent)) = self.pending(s0, s1) {
                    let e = &self.gold.edges()[ei];
                    let c = e.category.clone();
                    let t = match (s0_is_parent, e.remote) {
                        (true, false) => Transition::LeftEdge(c),
                        (false, false) => Transition::RightEdge(c),
                        (true, true) => Transition::LeftRemote(c),
                        (false, true) => Transition::RightRemote(c),
                    };
                    self.step(t)?;
                    self.done[ei] = true;
                    continue;
                }
            }
            if let Some(s0) = self.state.s(0) {
                if self.gold_of[s0] != Some(self.root) && self.complete(s0) {
                    self.step(Transition::Reduce)?;
                    continue;
                }
            }
            return Ok(());
        }
    }

    fn on_stack(&self, node: usize) -> bool {
        self.state.stack().contains(&node)
    }

    fn in_buffer(&self, node: usize) -> bool {
        self.state.buffer().contains(&node)
    }

    fn bring_to_top(&mut self, x: usize) -> Result<(), OracleFailure> {
        loop {
            self.settle()?;
            if self.state.s(0) == Some(x) {
                return Ok(());
            }
            if self.in_buffer(x) {
                self.step(Transition::Shift)?;
            } else if self.on_stack(x) {
                self.step(Transition::Swap)?;
            } else {
                return Err(self.fail("node was reduced too early"));
            }
        }
    }

    fn make_adjacent(&mut self, a: usize, b: usize) -> Result<(), OracleFailure> {
        loop {
            self.settle()?;
            if self.pending(a, b).is_none() {
                return Ok(());
            }
            if self.in_buffer(a) || self.in_buffer(b) {
                self.step(Transition::Shift)?;
            } else if self.on_stack(a) && self.on_stack(b) {
                // drops the item under the top, which is never the partner
                // of the top: settle would have linked them
                self.step(Transition::Swap)?;
            } else {
                return Err(self.fail("node was reduced too early"));
            }
        }
    }

    /// Distinct primary children: explicit ones left to right, then
    /// implicit ones.
    fn children(&self, u: usize) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for &ei in self.gold.outgoing_at(u) {
            let (_, c) = self.gold.edge_ends(ei);
            if !self.gold.edges()[ei].remote && !out.contains(&c) {
                out.push(c);
            }
        }
        let units = self.gold.units();
        out.sort_by_key(|&c| {
            let first = self.gold.yield_at(c).first().copied().unwrap_or(u32::MAX);
            (units[c].implicit, first, c)
        });
        out
    }

    fn first_edge(&self, parent: usize, child: usize) -> usize {
        *self
            .gold
            .outgoing_at(parent)
            .iter()
            .find(|&&ei| !self.gold.edges()[ei].remote && self.gold.edge_ends(ei).1 == child)
            .expect("child was listed from this parent's edges")
    }

    fn process(&mut self, u: usize) -> Result<(), OracleFailure> {
        let units = self.gold.units();
        let children = self.children(u);
        let (explicit, implicit): (Vec<usize>, Vec<usize>) =
            children.into_iter().partition(|&c| !units[c].implicit);
        let first = *explicit
            .first()
            .ok_or_else(|| self.fail("unit without explicit children"))?;

        if !units[first].is_preterminal() {
            self.process(first)?;
        }
        let c1 = self.node(first)?;
        self.bring_to_top(c1)?;
        let ei = self.first_edge(u, first);
        let y = self.step_creating(
            Transition::Node(self.gold.edges()[ei].category.clone()),
            u,
        )?;
        self.done[ei] = true;
        self.settle()?;
        self.step(Transition::Shift)?;
        for &i in &implicit {
            self.bring_to_top(y)?;
            let ei = self.first_edge(u, i);
            self.step_creating(
                Transition::Implicit(self.gold.edges()[ei].category.clone()),
                i,
            )?;
            self.done[ei] = true;
            self.step(Transition::Shift)?;
        }

        for &c in &explicit[1..] {
            if !units[c].is_preterminal() {
                self.process(c)?;
            }
            let cn = self.node(c)?;
            self.make_adjacent(y, cn)?;
        }
        self.settle()
    }

    fn run(mut self) -> Result<Vec<Transition>, OracleFailure> {
        self.process(self.root)?;
        for ei in 0..self.gold.edges().len() {
            if !self.done[ei] {
                let (p, c) = self.gold.edge_ends(ei);
                let (pn, cn) = (self.node(p)?, self.node(c)?);
                self.make_adjacent(pn, cn)?;
            }
        }
        loop {
            self.settle()?;
            if !self.state.buffer().is_empty() {
                self.step(Transition::Shift)?;
            } else if self.state.stack().len() == 1 {
                self.step(Transition::Finish)?;
                break;
            } else if self.state.s(0).and_then(|n| self.gold_of[n]) == Some(self.root) {
                self.step(Transition::Swap)?;
            } else {
                return Err(self.fail("an unfinished node blocks the stack"));
            }
        }
        Ok(self.state.history().to_vec())
    }
}

/// The gold transition sequence for `gold`.
pub fn oracle(gold: &Passage) -> Result<Vec<Transition>, OracleFailure> {
    Oracle::new(gold).run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::Category;
    use crate::graph::PassageBuilder;
    use crate::samples::{figure1, figure2};
    use crate::synth::{corpus, SynthConfig};
    use crate::validate::same_graph;

    fn replay(gold: &Passage, seq: &[Transition]) -> Passage {
        let mut s = TransitionState::new(gold.id(), gold.terminals().to_vec());
        for t in seq {
            s.apply(t.clone()).unwrap();
        }
        assert!(s.is_finished());
        s.to_passage().unwrap()
    }

    fn roundtrips(gold: &Passage) -> Vec<Transition> {
        let seq = oracle(gold).unwrap();
        assert!(same_graph(&replay(gold, &seq), gold), "{}", gold.id());
        seq
    }

    #[test]
    fn single_token() {
        let mut b = PassageBuilder::new("one");
        let root = b.unit();
        let w = b.word("hi");
        b.edge(root, w, Category::H);
        let seq = roundtrips(&b.build().unwrap());
        assert_eq!(
            seq,
            vec![
                Transition::Shift,
                Transition::Node(Category::H),
                Transition::Reduce,
                Transition::Shift,
                Transition::Finish
            ]
        );
    }

    #[test]
    fn figure1_has_one_remote_transition() {
        let seq = roundtrips(&figure1().passage);
        let remotes = seq
            .iter()
            .filter(|t| matches!(t, Transition::LeftRemote(_) | Transition::RightRemote(_)))
            .count();
        assert_eq!(remotes, 1);
    }

    #[test]
    fn figure2_with_implicit_unit() {
        let seq = roundtrips(&figure2().passage);
        assert!(seq.iter().any(|t| matches!(t, Transition::Implicit(_))));
    }

    #[test]
    fn discontinuous_unit_needs_a_swap() {
        let mut b = PassageBuilder::new("disc");
        let root = b.unit();
        let x = b.unit();
        let w1 = b.word("took");
        let w2 = b.word("it");
        let w3 = b.word("off");
        b.edge(root, x, Category::P)
            .edge(x, w1, Category::C)
            .edge(x, w3, Category::E)
            .edge(root, w2, Category::A);
        let gold = b.build().unwrap();
        assert_eq!(gold.yield_of(x).unwrap(), &[1, 3]);
        let seq = roundtrips(&gold);
        assert!(seq.contains(&Transition::Swap));
    }

    #[test]
    fn every_synthetic_shape_roundtrips() {
        for remote in [false, true] {
            for discontinuous in [false, true] {
                for implicit in [false, true] {
                    let cfg = SynthConfig {
                        max_tokens: 14,
                        remote,
                        discontinuous,
                        implicit,
                    };
                    for g in corpus(42, 150, &cfg) {
                        roundtrips(&g);
                    }
                }
            }
        }
    }

    #[test]
    fn oracle_is_deterministic() {
        let g = figure2().passage;
        assert_eq!(oracle(&g), oracle(&g));
    }
}
