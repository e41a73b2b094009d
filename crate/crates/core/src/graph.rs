//! In-memory UCCA passages.
//!
//! A [`Passage`] holds the ordered tokens (layer 0) and the foundational
//! layer (layer 1) as units connected by labeled edges. Primary edges form a
//! tree rooted at the single unit without a primary parent; remote edges add
//! reentrancy on top of it. Every token hangs off exactly one pre-terminal
//! unit, and the yield of a unit is the set of token positions below it along
//! primary edges.
//!
//! Passages are validated once, in [`Passage::build`], and are immutable
//! afterwards.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::category::Category;

/// Identifier of a unit, written `<layer>.<ordinal>` (e.g. `1.12`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnitId {
    pub layer: u32,
    pub ordinal: u32,
}

impl UnitId {
    pub const fn new(layer: u32, ordinal: u32) -> Self {
        UnitId { layer, ordinal }
    }

    /// Id in the foundational layer.
    pub const fn foundational(ordinal: u32) -> Self {
        UnitId { layer: 1, ordinal }
    }
}

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.layer, self.ordinal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed unit id `{0}`, expected <layer>.<ordinal>")]
pub struct ParseUnitIdError(pub String);

impl FromStr for UnitId {
    type Err = ParseUnitIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseUnitIdError(s.to_string());
        let (layer, ordinal) = s.split_once('.').ok_or_else(err)?;
        Ok(UnitId {
            layer: layer.parse().map_err(|_| err())?,
            ordinal: ordinal.parse().map_err(|_| err())?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Terminal {
    /// 1-based position in the passage.
    pub position: u32,
    pub text: String,
    pub punct: bool,
}

impl Terminal {
    pub fn new(position: u32, text: impl Into<String>, punct: bool) -> Self {
        Terminal {
            position,
            text: text.into(),
            punct,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unit {
    pub id: UnitId,
    pub implicit: bool,
    /// Set iff the unit is the pre-terminal wrapper of this token position.
    pub terminal: Option<u32>,
}

impl Unit {
    pub fn new(id: UnitId) -> Self {
        Unit {
            id,
            implicit: false,
            terminal: None,
        }
    }

    pub fn preterminal(id: UnitId, position: u32) -> Self {
        Unit {
            id,
            implicit: false,
            terminal: Some(position),
        }
    }

    pub fn implicit(id: UnitId) -> Self {
        Unit {
            id,
            implicit: true,
            terminal: None,
        }
    }

    pub fn is_preterminal(&self) -> bool {
        self.terminal.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub parent: UnitId,
    pub child: UnitId,
    pub category: Category,
    pub remote: bool,
}

impl Edge {
    pub fn primary(parent: UnitId, child: UnitId, category: Category) -> Self {
        Edge {
            parent,
            child,
            category,
            remote: false,
        }
    }

    pub fn remote(parent: UnitId, child: UnitId, category: Category) -> Self {
        Edge {
            parent,
            child,
            category,
            remote: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("passage has no terminals")]
    EmptyPassage,
    #[error("terminal positions must run 1..n: expected {expected}, found {found}")]
    TerminalPosition { expected: u32, found: u32 },
    #[error("terminal {0} has empty text")]
    EmptyTerminalText(u32),
    #[error("unit id {0} is reserved for terminals")]
    InvalidUnitId(UnitId),
    #[error("duplicate unit {0}")]
    DuplicateUnit(UnitId),
    #[error("unit {unit} attaches to terminal {position}, which does not exist")]
    DanglingTerminal { unit: UnitId, position: u32 },
    #[error("implicit unit {0} cannot attach a terminal")]
    ImplicitWithTerminal(UnitId),
    #[error("edge {parent} -> {child} references unknown unit {missing}")]
    DanglingReference {
        parent: UnitId,
        child: UnitId,
        missing: UnitId,
    },
    #[error("implicit unit {0} has outgoing edges")]
    ImplicitWithChildren(UnitId),
    #[error("pre-terminal unit {0} has outgoing edges")]
    PreterminalWithChildren(UnitId),
    #[error("unit {unit} has primary parents {first} and {second}")]
    MultiplePrimaryParents {
        unit: UnitId,
        first: UnitId,
        second: UnitId,
    },
    #[error("cycle through unit {unit}{}", if *.through_remote { " (closed by a remote edge)" } else { "" })]
    Cycle { unit: UnitId, through_remote: bool },
    #[error("no root unit: every unit has a primary parent")]
    NoRoot,
    #[error("several units lack a primary parent: {}", display_ids(.0))]
    MultipleRoots(Vec<UnitId>),
    #[error("root {0} must be a non-terminal, non-implicit unit")]
    InvalidRoot(UnitId),
    #[error("terminal {position} is attached by both {first} and {second}")]
    DuplicateTerminalAttachment {
        position: u32,
        first: UnitId,
        second: UnitId,
    },
    #[error("terminal {0} is not reachable from the root")]
    UnreachableTerminal(u32),
    #[error("unit {0} is not implicit but covers no terminal")]
    EmptyUnit(UnitId),
    #[error("unknown unit {0}")]
    UnknownUnit(UnitId),
}

fn display_ids(ids: &[UnitId]) -> String {
    let mut out = String::new();
    for (i, id) in ids.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&id.to_string());
    }
    out
}

impl GraphError {
    /// The unit the error is about, when there is one.
    pub fn unit(&self) -> Option<UnitId> {
        use GraphError::*;
        match self {
            InvalidUnitId(u)
            | DuplicateUnit(u)
            | ImplicitWithTerminal(u)
            | ImplicitWithChildren(u)
            | PreterminalWithChildren(u)
            | InvalidRoot(u)
            | EmptyUnit(u)
            | UnknownUnit(u) => Some(*u),
            DanglingTerminal { unit, .. }
            | MultiplePrimaryParents { unit, .. }
            | Cycle { unit, .. } => Some(*unit),
            DanglingReference { missing, .. } => Some(*missing),
            DuplicateTerminalAttachment { second, .. } => Some(*second),
            MultipleRoots(ids) => ids.first().copied(),
            EmptyPassage
            | TerminalPosition { .. }
            | EmptyTerminalText(_)
            | NoRoot
            | UnreachableTerminal(_) => None,
        }
    }
}

/// A validated, immutable UCCA passage.
#[derive(Clone, Debug)]
pub struct Passage {
    id: String,
    terminals: Vec<Terminal>,
    units: Vec<Unit>,
    edges: Vec<Edge>,
    root: usize,
    index: BTreeMap<UnitId, usize>,
    edge_ends: Vec<(usize, usize)>,
    primary_parent: Vec<Option<usize>>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
    yields: Vec<Vec<u32>>,
}

impl PartialEq for Passage {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.terminals == other.terminals
            && self.units == other.units
            && self.edges == other.edges
    }
}

impl Eq for Passage {}

impl Passage {
    /// Validates the parts and assembles a passage.
    ///
    /// Terminals may come in any order; units and edges are stored sorted by
    /// id. Exact duplicate edge records collapse into one.
    pub fn build(
        id: impl Into<String>,
        terminals: Vec<Terminal>,
        units: Vec<Unit>,
        edges: Vec<Edge>,
    ) -> Result<Passage, GraphError> {
        let mut terminals = terminals;
        terminals.sort_by_key(|t| t.position);
        if terminals.is_empty() {
            return Err(GraphError::EmptyPassage);
        }
        for (i, t) in terminals.iter().enumerate() {
            let expected = i as u32 + 1;
            if t.position != expected {
                return Err(GraphError::TerminalPosition {
                    expected,
                    found: t.position,
                });
            }
            if t.text.is_empty() {
                return Err(GraphError::EmptyTerminalText(t.position));
            }
        }
        let n = terminals.len() as u32;

        let mut units = units;
        units.sort_by_key(|u| u.id);
        let mut index = BTreeMap::new();
        for (i, u) in units.iter().enumerate() {
            if u.id.layer == 0 {
                return Err(GraphError::InvalidUnitId(u.id));
            }
            if index.insert(u.id, i).is_some() {
                return Err(GraphError::DuplicateUnit(u.id));
            }
            if let Some(pos) = u.terminal {
                if u.implicit {
                    return Err(GraphError::ImplicitWithTerminal(u.id));
                }
                if pos == 0 || pos > n {
                    return Err(GraphError::DanglingTerminal {
                        unit: u.id,
                        position: pos,
                    });
                }
            }
        }

        let mut edges = edges;
        edges.sort();
        edges.dedup();
        let mut edge_ends = Vec::with_capacity(edges.len());
        for e in &edges {
            let lookup = |id: UnitId| {
                index.get(&id).copied().ok_or(GraphError::DanglingReference {
                    parent: e.parent,
                    child: e.child,
                    missing: id,
                })
            };
            let p = lookup(e.parent)?;
            let c = lookup(e.child)?;
            if p == c {
                return Err(GraphError::Cycle {
                    unit: e.parent,
                    through_remote: e.remote,
                });
            }
            if units[p].implicit {
                return Err(GraphError::ImplicitWithChildren(e.parent));
            }
            if units[p].is_preterminal() {
                return Err(GraphError::PreterminalWithChildren(e.parent));
            }
            edge_ends.push((p, c));
        }

        let count = units.len();
        let mut primary_parent: Vec<Option<usize>> = vec![None; count];
        let mut outgoing = vec![Vec::new(); count];
        let mut incoming = vec![Vec::new(); count];
        for (ei, (e, &(p, c))) in edges.iter().zip(&edge_ends).enumerate() {
            outgoing[p].push(ei);
            incoming[c].push(ei);
            if e.remote {
                continue;
            }
            match primary_parent[c] {
                Some(q) if q != p => {
                    return Err(GraphError::MultiplePrimaryParents {
                        unit: units[c].id,
                        first: units[q].id,
                        second: units[p].id,
                    })
                }
                _ => primary_parent[c] = Some(p),
            }
        }

        if let Some(unit) = find_cycle(count, &edge_ends, |_| true) {
            let primary_only = find_cycle(count, &edge_ends, |ei| !edges[ei].remote);
            return Err(GraphError::Cycle {
                unit: units[primary_only.unwrap_or(unit)].id,
                through_remote: primary_only.is_none(),
            });
        }

        let roots: Vec<usize> = (0..count).filter(|&u| primary_parent[u].is_none()).collect();
        let root = match roots.as_slice() {
            [] => return Err(GraphError::NoRoot),
            [r] => *r,
            _ => {
                return Err(GraphError::MultipleRoots(
                    roots.iter().map(|&r| units[r].id).collect(),
                ))
            }
        };
        if units[root].implicit || units[root].is_preterminal() {
            return Err(GraphError::InvalidRoot(units[root].id));
        }

        let mut attached: Vec<Option<usize>> = vec![None; n as usize];
        for (i, u) in units.iter().enumerate() {
            if let Some(pos) = u.terminal {
                let slot = &mut attached[pos as usize - 1];
                if let Some(prev) = *slot {
                    return Err(GraphError::DuplicateTerminalAttachment {
                        position: pos,
                        first: units[prev].id,
                        second: u.id,
                    });
                }
                *slot = Some(i);
            }
        }
        if let Some(pos) = attached.iter().position(Option::is_none) {
            return Err(GraphError::UnreachableTerminal(pos as u32 + 1));
        }

        // Single root, one primary parent each and no cycles: the primary
        // edges form a tree spanning every unit.
        let yields = primary_yields(root, &units, &edges, &edge_ends, &outgoing);
        if let Some(u) = (0..count).find(|&u| !units[u].implicit && yields[u].is_empty()) {
            return Err(GraphError::EmptyUnit(units[u].id));
        }

        Ok(Passage {
            id: id.into(),
            terminals,
            units,
            edges,
            root,
            index,
            edge_ends,
            primary_parent,
            outgoing,
            incoming,
            yields,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn terminals(&self) -> &[Terminal] {
        &self.terminals
    }

    pub fn terminal(&self, position: u32) -> Option<&Terminal> {
        position
            .checked_sub(1)
            .and_then(|i| self.terminals.get(i as usize))
    }

    /// Units sorted by id.
    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    /// Edges sorted by (parent, child, category, remote).
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn root(&self) -> &Unit {
        &self.units[self.root]
    }

    pub fn root_id(&self) -> UnitId {
        self.units[self.root].id
    }

    pub fn unit(&self, id: UnitId) -> Option<&Unit> {
        self.index.get(&id).map(|&i| &self.units[i])
    }

    /// Sorted terminal positions below `id` along primary edges.
    pub fn yield_of(&self, id: UnitId) -> Result<&[u32], GraphError> {
        self.unit_index(id)
            .map(|i| self.yields[i].as_slice())
            .ok_or(GraphError::UnknownUnit(id))
    }

    /// Splits the edges by the remote flag: `(primary, remote)`.
    pub fn edge_partition(&self) -> (Vec<&Edge>, Vec<&Edge>) {
        self.edges.iter().partition(|e| !e.remote)
    }

    /// Whether the yield of `id` has gaps. Empty yields count as contiguous.
    pub fn is_discontinuous(&self, id: UnitId) -> Result<bool, GraphError> {
        let y = self.yield_of(id)?;
        Ok(match (y.first(), y.last()) {
            (Some(&lo), Some(&hi)) => (hi - lo + 1) as usize != y.len(),
            _ => false,
        })
    }

    pub fn primary_parent(&self, id: UnitId) -> Option<UnitId> {
        self.unit_index(id)
            .and_then(|i| self.primary_parent[i])
            .map(|p| self.units[p].id)
    }

    /// Outgoing edges of `id`, primary and remote.
    pub fn outgoing(&self, id: UnitId) -> impl Iterator<Item = &Edge> + '_ {
        self.unit_index(id)
            .into_iter()
            .flat_map(move |i| self.outgoing[i].iter().map(move |&e| &self.edges[e]))
    }

    /// Incoming edges of `id`, primary and remote.
    pub fn incoming(&self, id: UnitId) -> impl Iterator<Item = &Edge> + '_ {
        self.unit_index(id)
            .into_iter()
            .flat_map(move |i| self.incoming[i].iter().map(move |&e| &self.edges[e]))
    }

    /// The unit wrapping the token at `position`.
    pub fn preterminal_of(&self, position: u32) -> Option<UnitId> {
        self.units
            .iter()
            .find(|u| u.terminal == Some(position))
            .map(|u| u.id)
    }

    /// Decomposes the passage into the parts accepted by [`Passage::build`].
    pub fn into_parts(self) -> (String, Vec<Terminal>, Vec<Unit>, Vec<Edge>) {
        (self.id, self.terminals, self.units, self.edges)
    }

    /// The same graph under another passage id.
    pub fn with_id(mut self, id: impl Into<String>) -> Passage {
        self.id = id.into();
        self
    }

    pub(crate) fn unit_index(&self, id: UnitId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub(crate) fn root_index(&self) -> usize {
        self.root
    }

    pub(crate) fn yield_at(&self, unit: usize) -> &[u32] {
        &self.yields[unit]
    }

    /// `(parent, child)` unit indices of edge `e`.
    pub(crate) fn edge_ends(&self, e: usize) -> (usize, usize) {
        self.edge_ends[e]
    }

    pub(crate) fn outgoing_at(&self, unit: usize) -> &[usize] {
        &self.outgoing[unit]
    }

    pub(crate) fn incoming_at(&self, unit: usize) -> &[usize] {
        &self.incoming[unit]
    }
}

/// Returns a unit on a cycle among the edges accepted by `keep`, if any.
fn find_cycle(
    count: usize,
    edge_ends: &[(usize, usize)],
    keep: impl Fn(usize) -> bool,
) -> Option<usize> {
    let mut indegree = vec![0usize; count];
    let mut out = vec![Vec::new(); count];
    for (ei, &(p, c)) in edge_ends.iter().enumerate() {
        if keep(ei) {
            indegree[c] += 1;
            out[p].push(c);
        }
    }
    let mut queue: VecDeque<usize> = (0..count).filter(|&u| indegree[u] == 0).collect();
    let mut seen = 0;
    while let Some(u) = queue.pop_front() {
        seen += 1;
        for &c in &out[u] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                queue.push_back(c);
            }
        }
    }
    if seen == count {
        None
    } else {
        (0..count).find(|&u| indegree[u] > 0)
    }
}

fn primary_yields(
    root: usize,
    units: &[Unit],
    edges: &[Edge],
    edge_ends: &[(usize, usize)],
    outgoing: &[Vec<usize>],
) -> Vec<Vec<u32>> {
    let mut order = Vec::with_capacity(units.len());
    let mut stack = vec![root];
    let mut visited = vec![false; units.len()];
    while let Some(u) = stack.pop() {
        if visited[u] {
            continue;
        }
        visited[u] = true;
        order.push(u);
        for &ei in &outgoing[u] {
            if !edges[ei].remote {
                stack.push(edge_ends[ei].1);
            }
        }
    }
    let mut yields: Vec<Vec<u32>> = vec![Vec::new(); units.len()];
    for &u in order.iter().rev() {
        let mut acc: BTreeSet<u32> = units[u].terminal.into_iter().collect();
        for &ei in &outgoing[u] {
            if !edges[ei].remote {
                acc.extend(yields[edge_ends[ei].1].iter().copied());
            }
        }
        yields[u] = acc.into_iter().collect();
    }
    yields
}

/// Incremental construction of passages with sequential layer-1 ids.
#[derive(Clone, Debug, Default)]
pub struct PassageBuilder {
    id: String,
    terminals: Vec<Terminal>,
    units: Vec<Unit>,
    edges: Vec<Edge>,
}

impl PassageBuilder {
    pub fn new(id: impl Into<String>) -> Self {
        PassageBuilder {
            id: id.into(),
            ..Default::default()
        }
    }

    fn next_id(&self) -> UnitId {
        UnitId::foundational(self.units.len() as u32 + 1)
    }

    /// Appends a token and returns its position.
    pub fn terminal(&mut self, text: impl Into<String>, punct: bool) -> u32 {
        let position = self.terminals.len() as u32 + 1;
        self.terminals.push(Terminal::new(position, text, punct));
        position
    }

    /// Appends a token together with its pre-terminal unit.
    pub fn word(&mut self, text: &str) -> UnitId {
        let punct = !text.is_empty() && text.chars().all(|c| c.is_ascii_punctuation());
        let pos = self.terminal(text, punct);
        self.preterminal(pos)
    }

    pub fn preterminal(&mut self, position: u32) -> UnitId {
        let id = self.next_id();
        self.units.push(Unit::preterminal(id, position));
        id
    }

    pub fn unit(&mut self) -> UnitId {
        let id = self.next_id();
        self.units.push(Unit::new(id));
        id
    }

    pub fn implicit(&mut self) -> UnitId {
        let id = self.next_id();
        self.units.push(Unit::implicit(id));
        id
    }

    pub fn edge(&mut self, parent: UnitId, child: UnitId, category: Category) -> &mut Self {
        self.edges.push(Edge::primary(parent, child, category));
        self
    }

    pub fn remote(&mut self, parent: UnitId, child: UnitId, category: Category) -> &mut Self {
        self.edges.push(Edge::remote(parent, child, category));
        self
    }

    pub fn build(self) -> Result<Passage, GraphError> {
        Passage::build(self.id, self.terminals, self.units, self.edges)
    }
}
