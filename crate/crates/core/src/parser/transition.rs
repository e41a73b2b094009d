//! The transition system: parser states, transitions and their legality.
//!
//! Terminal nodes double as pre-terminal units. The stack and buffer hold
//! node indices; nodes created by NODE and IMPLICIT enter at the buffer front.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::category::Category;
use crate::graph::{GraphError, Passage, PassageBuilder, Terminal, UnitId};
use crate::validate::normalize;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Transition {
    Shift,
    Reduce,
    /// Creates a parent for s0 and puts it at the buffer front.
    Node(Category),
    /// Creates an implicit child of s0 and puts it at the buffer front.
    Implicit(Category),
    /// Primary edge from s0 to s1.
    LeftEdge(Category),
    /// Primary edge from s1 to s0.
    RightEdge(Category),
    LeftRemote(Category),
    RightRemote(Category),
    /// Moves s1 back to the buffer front.
    Swap,
    Finish,
}

/// A transition with its category erased.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TransitionKind {
    Shift,
    Reduce,
    Swap,
    Finish,
    Node,
    Implicit,
    LeftEdge,
    RightEdge,
    LeftRemote,
    RightRemote,
}

impl TransitionKind {
    pub const UNLABELED: [TransitionKind; 4] = [
        TransitionKind::Shift,
        TransitionKind::Reduce,
        TransitionKind::Swap,
        TransitionKind::Finish,
    ];
    pub const LABELED: [TransitionKind; 6] = [
        TransitionKind::Node,
        TransitionKind::Implicit,
        TransitionKind::LeftEdge,
        TransitionKind::RightEdge,
        TransitionKind::LeftRemote,
        TransitionKind::RightRemote,
    ];

    pub fn is_labeled(self) -> bool {
        !Self::UNLABELED.contains(&self)
    }

    /// Builds the transition. Labeled kinds require a category.
    pub fn with(self, category: Option<Category>) -> Option<Transition> {
        Some(match (self, category) {
            (TransitionKind::Shift, None) => Transition::Shift,
            (TransitionKind::Reduce, None) => Transition::Reduce,
            (TransitionKind::Swap, None) => Transition::Swap,
            (TransitionKind::Finish, None) => Transition::Finish,
            (TransitionKind::Node, Some(c)) => Transition::Node(c),
            (TransitionKind::Implicit, Some(c)) => Transition::Implicit(c),
            (TransitionKind::LeftEdge, Some(c)) => Transition::LeftEdge(c),
            (TransitionKind::RightEdge, Some(c)) => Transition::RightEdge(c),
            (TransitionKind::LeftRemote, Some(c)) => Transition::LeftRemote(c),
            (TransitionKind::RightRemote, Some(c)) => Transition::RightRemote(c),
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            TransitionKind::Shift => "SHIFT",
            TransitionKind::Reduce => "REDUCE",
            TransitionKind::Swap => "SWAP",
            TransitionKind::Finish => "FINISH",
            TransitionKind::Node => "NODE",
            TransitionKind::Implicit => "IMPLICIT",
            TransitionKind::LeftEdge => "LEFT-EDGE",
            TransitionKind::RightEdge => "RIGHT-EDGE",
            TransitionKind::LeftRemote => "LEFT-REMOTE",
            TransitionKind::RightRemote => "RIGHT-REMOTE",
        }
    }
}

impl Transition {
    pub fn kind(&self) -> TransitionKind {
        match self {
            Transition::Shift => TransitionKind::Shift,
            Transition::Reduce => TransitionKind::Reduce,
            Transition::Node(_) => TransitionKind::Node,
            Transition::Implicit(_) => TransitionKind::Implicit,
            Transition::LeftEdge(_) => TransitionKind::LeftEdge,
            Transition::RightEdge(_) => TransitionKind::RightEdge,
            Transition::LeftRemote(_) => TransitionKind::LeftRemote,
            Transition::RightRemote(_) => TransitionKind::RightRemote,
            Transition::Swap => TransitionKind::Swap,
            Transition::Finish => TransitionKind::Finish,
        }
    }

    pub fn category(&self) -> Option<&Category> {
        match self {
            Transition::Node(c)
            | Transition::Implicit(c)
            | Transition::LeftEdge(c)
            | Transition::RightEdge(c)
            | Transition::LeftRemote(c)
            | Transition::RightRemote(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind().name())?;
        if let Some(c) = self.category() {
            write!(f, "-{c}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    /// The pre-terminal of the token at this position.
    Terminal(u32),
    NonTerminal,
    Implicit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateEdge {
    pub parent: usize,
    pub child: usize,
    pub category: Category,
    pub remote: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateNode {
    pub kind: NodeKind,
    /// Indices into the state's edge list.
    pub outgoing: Vec<usize>,
    pub incoming: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("illegal transition {transition}: {reason}")]
pub struct IllegalTransition {
    pub transition: Transition,
    pub reason: &'static str,
}

/// A parser configuration together with the graph built so far.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionState {
    passage_id: String,
    tokens: Vec<Terminal>,
    nodes: Vec<StateNode>,
    edges: Vec<StateEdge>,
    stack: Vec<usize>,
    buffer: VecDeque<usize>,
    history: Vec<Transition>,
    finished: bool,
}

impl TransitionState {
    /// Empty stack, every token in the buffer.
    pub fn new(passage_id: impl Into<String>, tokens: Vec<Terminal>) -> Self {
        let nodes = tokens
            .iter()
            .map(|t| StateNode {
                kind: NodeKind::Terminal(t.position),
                outgoing: Vec::new(),
                incoming: Vec::new(),
            })
            .collect();
        TransitionState {
            passage_id: passage_id.into(),
            buffer: (0..tokens.len()).collect(),
            tokens,
            nodes,
            edges: Vec::new(),
            stack: Vec::new(),
            history: Vec::new(),
            finished: false,
        }
    }

    pub fn tokens(&self) -> &[Terminal] {
        &self.tokens
    }

    pub fn nodes(&self) -> &[StateNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[StateEdge] {
        &self.edges
    }

    /// Bottom first.
    pub fn stack(&self) -> &[usize] {
        &self.stack
    }

    pub fn buffer(&self) -> &VecDeque<usize> {
        &self.buffer
    }

    pub fn history(&self) -> &[Transition] {
        &self.history
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// The `i`-th stack item from the top.
    pub fn s(&self, i: usize) -> Option<usize> {
        self.stack.len().checked_sub(i + 1).map(|k| self.stack[k])
    }

    /// The `i`-th buffer item from the front.
    pub fn b(&self, i: usize) -> Option<usize> {
        self.buffer.get(i).copied()
    }

    pub fn primary_parent(&self, node: usize) -> Option<usize> {
        self.nodes[node]
            .incoming
            .iter()
            .map(|&e| &self.edges[e])
            .find(|e| !e.remote)
            .map(|e| e.parent)
    }

    /// Whether `to` can be reached from `from` along any edges.
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut todo = vec![from];
        while let Some(n) = todo.pop() {
            if n == to {
                return true;
            }
            if !core::mem::replace(&mut seen[n], true) {
                todo.extend(self.nodes[n].outgoing.iter().map(|&e| self.edges[e].child));
            }
        }
        false
    }

    fn has_edge(&self, parent: usize, child: usize, category: &Category, remote: bool) -> bool {
        self.nodes[parent].outgoing.iter().any(|&e| {
            let e = &self.edges[e];
            e.child == child && e.remote == remote && &e.category == category
        })
    }

    fn check_edge(
        &self,
        parent: usize,
        child: usize,
        category: &Category,
        remote: bool,
    ) -> Result<(), &'static str> {
        if self.nodes[parent].kind != NodeKind::NonTerminal {
            return Err("parent must be a non-terminal");
        }
        if self.has_edge(parent, child, category, remote) {
            return Err("edge already exists");
        }
        if !remote {
            if let Some(p) = self.primary_parent(child) {
                if p != parent {
                    return Err("child already has a primary parent");
                }
            }
        }
        if self.reaches(child, parent) {
            return Err("edge would close a cycle");
        }
        Ok(())
    }

    fn check(&self, t: &Transition) -> Result<(), &'static str> {
        if self.finished {
            return Err("parsing has finished");
        }
        let s0 = self.s(0);
        let pair = || match (self.s(0), self.s(1)) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err("needs two stack items"),
        };
        match t {
            Transition::Shift => {
                if self.buffer.is_empty() {
                    return Err("buffer is empty");
                }
            }
            Transition::Reduce => {
                let s0 = s0.ok_or("stack is empty")?;
                if self.primary_parent(s0).is_none() {
                    return Err("stack top has no parent");
                }
            }
            Transition::Node(_) => {
                let s0 = s0.ok_or("stack is empty")?;
                if self.primary_parent(s0).is_some() {
                    return Err("stack top already has a parent");
                }
                if self.nodes[s0].kind == NodeKind::Implicit {
                    return Err("stack top is implicit");
                }
            }
            Transition::Implicit(_) => {
                let s0 = s0.ok_or("stack is empty")?;
                if self.nodes[s0].kind != NodeKind::NonTerminal {
                    return Err("stack top must be a non-terminal");
                }
            }
            Transition::LeftEdge(c) => {
                let (a, b) = pair()?;
                self.check_edge(a, b, c, false)?;
            }
            Transition::RightEdge(c) => {
                let (a, b) = pair()?;
                self.check_edge(b, a, c, false)?;
            }
            Transition::LeftRemote(c) => {
                let (a, b) = pair()?;
                self.check_edge(a, b, c, true)?;
            }
            Transition::RightRemote(c) => {
                let (a, b) = pair()?;
                self.check_edge(b, a, c, true)?;
            }
            Transition::Swap => {
                pair()?;
            }
            Transition::Finish => {
                if !self.buffer.is_empty() {
                    return Err("buffer is not empty");
                }
                match self.stack.as_slice() {
                    [x] if self.nodes[*x].kind == NodeKind::NonTerminal
                        && self.primary_parent(*x).is_none() => {}
                    _ => return Err("stack must hold exactly the parentless root"),
                }
            }
        }
        Ok(())
    }

    pub fn is_legal(&self, t: &Transition) -> bool {
        self.check(t).is_ok()
    }

    /// Every legal transition, labeled ones once per category in `labels`.
    pub fn legal_transitions(&self, labels: &[Category]) -> Vec<Transition> {
        let mut out = Vec::new();
        for kind in TransitionKind::UNLABELED {
            let t = kind.with(None).expect("unlabeled");
            if self.is_legal(&t) {
                out.push(t);
            }
        }
        for kind in TransitionKind::LABELED {
            for c in labels {
                let t = kind.with(Some(c.clone())).expect("labeled");
                if self.is_legal(&t) {
                    out.push(t);
                }
            }
        }
        out
    }

    fn add_node(&mut self, kind: NodeKind) -> usize {
        self.nodes.push(StateNode {
            kind,
            outgoing: Vec::new(),
            incoming: Vec::new(),
        });
        self.nodes.len() - 1
    }

    fn add_edge(&mut self, parent: usize, child: usize, category: Category, remote: bool) {
        let e = self.edges.len();
        self.edges.push(StateEdge {
            parent,
            child,
            category,
            remote,
        });
        self.nodes[parent].outgoing.push(e);
        self.nodes[child].incoming.push(e);
    }

    pub fn apply(&mut self, t: Transition) -> Result<(), IllegalTransition> {
        if let Err(reason) = self.check(&t) {
            return Err(IllegalTransition {
                transition: t,
                reason,
            });
        }
        match &t {
            Transition::Shift => {
                let n = self.buffer.pop_front().expect("checked");
                self.stack.push(n);
            }
            Transition::Reduce => {
                self.stack.pop();
            }
            Transition::Node(c) => {
                let child = self.s(0).expect("checked");
                let y = self.add_node(NodeKind::NonTerminal);
                self.add_edge(y, child, c.clone(), false);
                self.buffer.push_front(y);
            }
            Transition::Implicit(c) => {
                let parent = self.s(0).expect("checked");
                let y = self.add_node(NodeKind::Implicit);
                self.add_edge(parent, y, c.clone(), false);
                self.buffer.push_front(y);
            }
            Transition::LeftEdge(c) | Transition::LeftRemote(c) => {
                let (a, b) = (self.s(0).unwrap(), self.s(1).unwrap());
                let remote = matches!(t, Transition::LeftRemote(_));
                self.add_edge(a, b, c.clone(), remote);
            }
            Transition::RightEdge(c) | Transition::RightRemote(c) => {
                let (a, b) = (self.s(0).unwrap(), self.s(1).unwrap());
                let remote = matches!(t, Transition::RightRemote(_));
                self.add_edge(b, a, c.clone(), remote);
            }
            Transition::Swap => {
                let top = self.stack.pop().expect("checked");
                let below = self.stack.pop().expect("checked");
                self.stack.push(top);
                self.buffer.push_front(below);
            }
            Transition::Finish => {
                self.finished = true;
            }
        }
        self.history.push(t);
        Ok(())
    }

    /// The successor state, leaving `self` untouched.
    pub fn successor(&self, t: Transition) -> Result<TransitionState, IllegalTransition> {
        let mut next = self.clone();
        next.apply(t)?;
        Ok(next)
    }

    /// Tokens covered by `node` through primary edges, ascending.
    pub fn yield_of(&self, node: usize) -> Vec<u32> {
        let mut out = Vec::new();
        let mut todo = vec![node];
        while let Some(n) = todo.pop() {
            if let NodeKind::Terminal(pos) = self.nodes[n].kind {
                out.push(pos);
            }
            for &e in &self.nodes[n].outgoing {
                if !self.edges[e].remote {
                    todo.push(self.edges[e].child);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// The graph built so far as a normalized passage. Fails while the
    /// structure is incomplete; after FINISH it always succeeds.
    pub fn to_passage(&self) -> Result<Passage, GraphError> {
        let mut b = PassageBuilder::new(self.passage_id.clone());
        for t in &self.tokens {
            b.terminal(t.text.clone(), t.punct);
        }
        let ids: Vec<UnitId> = self
            .nodes
            .iter()
            .map(|n| match n.kind {
                NodeKind::Terminal(pos) => b.preterminal(pos),
                NodeKind::NonTerminal => b.unit(),
                NodeKind::Implicit => b.implicit(),
            })
            .collect();
        for e in &self.edges {
            if e.remote {
                b.remote(ids[e.parent], ids[e.child], e.category.clone());
            } else {
                b.edge(ids[e.parent], ids[e.child], e.category.clone());
            }
        }
        Ok(normalize(&b.build()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use Category::*;

    fn tokens(words: &[&str]) -> Vec<Terminal> {
        words
            .iter()
            .enumerate()
            .map(|(i, w)| Terminal::new(i as u32 + 1, *w, false))
            .collect()
    }

    #[test]
    fn initial_state_only_shifts() {
        let s = TransitionState::new("t", tokens(&["a", "b"]));
        assert_eq!(s.legal_transitions(&Category::ALL), vec![Transition::Shift]);
    }

    #[test]
    fn shift_moves_the_buffer_front() {
        let mut s = TransitionState::new("t", tokens(&["a", "b"]));
        s.apply(Transition::Shift).unwrap();
        assert_eq!(s.stack(), &[0]);
        assert_eq!(s.buffer().len(), 1);
    }

    #[test]
    fn finish_needs_an_empty_buffer() {
        let mut s = TransitionState::new("t", tokens(&["a"]));
        let err = s.apply(Transition::Finish).unwrap_err();
        assert_eq!(err.transition, Transition::Finish);
        s.apply(Transition::Shift).unwrap();
        s.apply(Transition::Node(A)).unwrap();
        s.apply(Transition::Reduce).unwrap();
        s.apply(Transition::Shift).unwrap();
        // a unary root or a late implicit child can still be added on top
        let legal = s.legal_transitions(&Category::ALL);
        assert_eq!(legal[0], Transition::Finish);
        assert!(legal[1..]
            .iter()
            .all(|t| matches!(t, Transition::Node(_) | Transition::Implicit(_))));
        s.apply(Transition::Finish).unwrap();
        let p = s.to_passage().unwrap();
        assert_eq!(p.units().len(), 2);
        assert!(s.legal_transitions(&Category::ALL).is_empty());
    }

    #[test]
    fn second_primary_parent_is_illegal_but_remote_is_fine() {
        let mut t = TransitionState::new("t", tokens(&["a", "b"]));
        t.apply(Transition::Shift).unwrap();
        t.apply(Transition::Shift).unwrap();
        t.apply(Transition::Node(A)).unwrap(); // y over b
        t.apply(Transition::Shift).unwrap(); // [a, b, y]
        t.apply(Transition::Swap).unwrap(); // [a, y], buffer [b]
        t.apply(Transition::Swap).unwrap(); // [y], buffer [a, b]
        t.apply(Transition::Shift).unwrap(); // [y, a]
        t.apply(Transition::Node(P)).unwrap(); // x over a
        t.apply(Transition::Reduce).unwrap(); // [y]
        t.apply(Transition::Reduce).unwrap_err();
        t.apply(Transition::Swap).unwrap_err();
        t.apply(Transition::Shift).unwrap(); // [y, x]
        t.apply(Transition::Shift).unwrap(); // [y, x, b]; b has parent y
        t.apply(Transition::Swap).unwrap(); // [y, b], buffer [x]
        t.apply(Transition::Swap).unwrap(); // [b], buffer [y, x]
        t.apply(Transition::Shift).unwrap(); // [b, y]
        t.apply(Transition::Shift).unwrap(); // [b, y, x]
        t.apply(Transition::Swap).unwrap(); // [b, x], buffer [y]
        assert_eq!(t.s(0), Some(3));
        assert_eq!(t.s(1), Some(1));
        let legal = t.legal_transitions(&[A]);
        // x may not become a second primary parent of b
        assert!(!legal.contains(&Transition::LeftEdge(A)));
        assert!(legal.contains(&Transition::LeftRemote(A)));
    }

    #[test]
    fn cycles_and_duplicates_are_illegal() {
        let mut s = TransitionState::new("t", tokens(&["a"]));
        s.apply(Transition::Shift).unwrap();
        s.apply(Transition::Node(A)).unwrap();
        s.apply(Transition::Shift).unwrap(); // [a, y], y -> a
        assert!(!s.is_legal(&Transition::RightEdge(A)), "a is a terminal");
        assert!(!s.is_legal(&Transition::LeftEdge(A)), "duplicate");
        assert!(s.is_legal(&Transition::LeftEdge(C)), "parallel category");
        s.apply(Transition::Swap).unwrap(); // [y], buffer [a]
        s.apply(Transition::Node(H)).unwrap(); // z over y
        s.apply(Transition::Shift).unwrap(); // [y, z]
        assert!(!s.is_legal(&Transition::RightRemote(A)), "y -> z closes a cycle");
        assert!(!s.is_legal(&Transition::RightEdge(A)), "y -> z closes a cycle");
        assert!(s.is_legal(&Transition::LeftRemote(A)));
        assert!(!s.is_legal(&Transition::Finish), "buffer still holds a");
    }

    #[test]
    fn display_names() {
        assert_eq!(Transition::LeftRemote(A).to_string(), "LEFT-REMOTE-A");
        assert_eq!(Transition::Swap.to_string(), "SWAP");
    }
}
