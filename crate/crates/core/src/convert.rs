//! Lossy approximations of passages and their roundtrip upper bounds.
//!
//! The constituency approximation drops remote edges. The bilexical one
//! replaces each unit by its lexical head, chosen by [`HeadRules`], and keeps
//! one labeled arc per non-head child. Converting back builds one unit per
//! token that has dependents. Scoring the roundtrip against the original
//! gives the best F1 a parser of the approximated formalism could reach.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::category::Category;
use crate::evaluate::{aggregate_pairs, EvalError, EvalOptions, EvalReport};
use crate::graph::{GraphError, Passage, PassageBuilder, Terminal, UnitId};
use crate::validate::normalize;

/// Priority order for choosing the head child of a unit.
///
/// Earlier categories win; among children of equal priority the one whose
/// lexical head comes first in the sentence wins.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeadRules {
    priority: Vec<Category>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConvertError {
    #[error("head rules do not rank category {0}")]
    IncompleteRules(Category),
    #[error("token position {0} is out of range")]
    PositionOutOfRange(u32),
    #[error("token {dependent} has primary heads {first} and {second}")]
    ConflictingHeads {
        dependent: u32,
        first: u32,
        second: u32,
    },
    #[error("root token {0} has a primary head")]
    RootHasHead(u32),
    #[error("primary arcs form a cycle through token {0}")]
    Cycle(u32),
    #[error("reconstructed passage is invalid: {0}")]
    Graph(#[from] GraphError),
}

impl Default for HeadRules {
    fn default() -> Self {
        use Category::*;
        HeadRules {
            priority: vec![C, P, S, H, A, D, E, N, R, L, G, F, U, T],
        }
    }
}

impl HeadRules {
    /// Rules from an explicit order, which must mention every known category.
    pub fn new(priority: Vec<Category>) -> Result<Self, ConvertError> {
        if let Some(missing) = Category::ALL.iter().find(|c| !priority.contains(c)) {
            return Err(ConvertError::IncompleteRules(missing.clone()));
        }
        Ok(HeadRules { priority })
    }

    pub fn priority(&self) -> &[Category] {
        &self.priority
    }

    /// Lower is stronger. Extension labels rank after everything else.
    pub fn rank(&self, c: &Category) -> usize {
        self.priority
            .iter()
            .position(|x| x == c)
            .unwrap_or(self.priority.len())
    }

    /// Category given to the head token inside units rebuilt from arcs.
    pub fn head_category(&self) -> &Category {
        &self.priority[0]
    }
}

/// A labeled dependency between two tokens.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Arc {
    pub head: u32,
    pub dependent: u32,
    pub category: Category,
    pub remote: bool,
}

/// Token-to-token approximation of a passage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BilexicalGraph {
    pub passage_id: String,
    pub tokens: Vec<Terminal>,
    pub root: u32,
    /// Label of the root token inside the top unit.
    pub root_category: Category,
    /// Sorted, without duplicates.
    pub arcs: Vec<Arc>,
}

impl BilexicalGraph {
    /// Primary heads of `token`.
    pub fn heads_of(&self, token: u32) -> impl Iterator<Item = &Arc> + '_ {
        self.arcs
            .iter()
            .filter(move |a| a.dependent == token && !a.remote)
    }

    /// Whether every token except the root has exactly one primary arc.
    pub fn is_tree(&self) -> bool {
        (1..=self.tokens.len() as u32).all(|t| {
            let n = self.heads_of(t).count();
            if t == self.root {
                n == 0
            } else {
                n == 1
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conversion {
    Constituency,
    BilexicalTree,
    BilexicalDag,
}

/// The passage with every remote edge removed.
pub fn to_constituency(p: &Passage) -> Passage {
    let (id, terminals, units, mut edges) = p.clone().into_parts();
    edges.retain(|e| !e.remote);
    Passage::build(id, terminals, units, edges).expect("dropping remote edges keeps validity")
}

/// Lexical heads of every unit (`None` for implicit units) and the chosen
/// head child of every non-terminal.
fn lexical_heads(p: &Passage, rules: &HeadRules) -> (Vec<Option<u32>>, Vec<Option<usize>>) {
    let units = p.units();
    let mut heads: Vec<Option<u32>> = vec![None; units.len()];
    let mut head_child: Vec<Option<usize>> = vec![None; units.len()];

    // post-order over the primary tree
    let mut order = Vec::with_capacity(units.len());
    let mut stack = vec![p.root_index()];
    while let Some(u) = stack.pop() {
        order.push(u);
        for &ei in p.outgoing_at(u) {
            if !p.edges()[ei].remote {
                stack.push(p.edge_ends(ei).1);
            }
        }
    }
    let mut seen = vec![false; units.len()];
    for &u in order.iter().rev() {
        if seen[u] {
            continue;
        }
        seen[u] = true;
        if let Some(pos) = units[u].terminal {
            heads[u] = Some(pos);
            continue;
        }
        let mut best: Option<(usize, u32, usize)> = None;
        for &ei in p.outgoing_at(u) {
            let e = &p.edges()[ei];
            let c = p.edge_ends(ei).1;
            if e.remote {
                continue;
            }
            if let Some(h) = heads[c] {
                let key = (rules.rank(&e.category), h, c);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
        }
        if let Some((_, h, c)) = best {
            heads[u] = Some(h);
            head_child[u] = Some(c);
        }
    }
    (heads, head_child)
}

/// Converts a passage to token-to-token arcs.
///
/// Every primary edge to a non-head child becomes an arc between the two
/// lexical heads. In `tree_mode` remote edges are dropped and a child linked
/// by several categories keeps only the strongest one; otherwise remote edges
/// become arcs flagged `remote`. Implicit units have no head and disappear.
pub fn to_bilexical(p: &Passage, rules: &HeadRules, tree_mode: bool) -> BilexicalGraph {
    let (heads, head_child) = lexical_heads(p, rules);
    let mut arcs = BTreeSet::new();
    for (u, unit) in p.units().iter().enumerate() {
        let Some(h) = heads[u] else { continue };
        if unit.is_preterminal() {
            continue;
        }
        // strongest category per primary child, for tree mode
        let mut per_child: Vec<(usize, usize, &Category)> = Vec::new();
        for &ei in p.outgoing_at(u) {
            let e = &p.edges()[ei];
            let c = p.edge_ends(ei).1;
            let Some(dh) = heads[c] else { continue };
            if e.remote {
                if !tree_mode && dh != h {
                    arcs.insert(Arc {
                        head: h,
                        dependent: dh,
                        category: e.category.clone(),
                        remote: true,
                    });
                }
                continue;
            }
            if Some(c) == head_child[u] {
                continue;
            }
            per_child.push((c, rules.rank(&e.category), &e.category));
        }
        per_child.sort_by_key(|&(c, rank, _)| (c, rank));
        let mut last = None;
        for (c, _, cat) in per_child {
            if tree_mode && last == Some(c) {
                continue;
            }
            last = Some(c);
            arcs.insert(Arc {
                head: h,
                dependent: heads[c].expect("filtered above"),
                category: cat.clone(),
                remote: false,
            });
        }
    }

    // strongest head-child label along the root's head chain
    let root = p.root_index();
    let mut root_category: Option<Category> = None;
    let mut u = root;
    while let Some(c) = head_child[u] {
        for &ei in p.outgoing_at(u) {
            let e = &p.edges()[ei];
            if !e.remote && p.edge_ends(ei).1 == c {
                let better = match &root_category {
                    None => true,
                    Some(cur) => rules.rank(&e.category) < rules.rank(cur),
                };
                if better {
                    root_category = Some(e.category.clone());
                }
            }
        }
        u = c;
    }

    BilexicalGraph {
        passage_id: String::from(p.id()),
        tokens: p.terminals().to_vec(),
        root: heads[root].expect("the root covers at least one token"),
        root_category: root_category.unwrap_or_else(|| rules.head_category().clone()),
        arcs: arcs.into_iter().collect(),
    }
}

/// Result of rebuilding a passage from arcs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reconstruction {
    pub passage: Passage,
    /// Head tokens whose unit ended up discontinuous.
    pub non_projective: Vec<u32>,
    /// Remote arcs left out because they would have closed a cycle.
    pub dropped_remote: Vec<Arc>,
}

/// Rebuilds a passage: each token with dependents becomes a unit holding its
/// own pre-terminal (labeled with the rules' head category, or the root
/// category for the root) and one child per dependent. Tokens without a head
/// attach to the root unit.
pub fn from_bilexical(b: &BilexicalGraph, rules: &HeadRules) -> Result<Reconstruction, ConvertError> {
    let n = b.tokens.len() as u32;
    let in_range = |t: u32| {
        if t == 0 || t > n {
            Err(ConvertError::PositionOutOfRange(t))
        } else {
            Ok(())
        }
    };
    in_range(b.root)?;
    let mut head: Vec<Option<u32>> = vec![None; n as usize + 1];
    for a in &b.arcs {
        in_range(a.head)?;
        in_range(a.dependent)?;
        if a.remote {
            continue;
        }
        match head[a.dependent as usize] {
            Some(h) if h != a.head => {
                return Err(ConvertError::ConflictingHeads {
                    dependent: a.dependent,
                    first: h,
                    second: a.head,
                })
            }
            _ => head[a.dependent as usize] = Some(a.head),
        }
    }
    if head[b.root as usize].is_some() {
        return Err(ConvertError::RootHasHead(b.root));
    }
    for t in 1..=n {
        let mut seen = BTreeSet::new();
        let mut cur = t;
        while let Some(h) = head[cur as usize] {
            if !seen.insert(cur) {
                return Err(ConvertError::Cycle(t));
            }
            cur = h;
        }
    }

    // a token whose only dependents are dropped remote arcs gets no unit,
    // which in turn can only remove cycles
    let mut dropped: Vec<Arc> = Vec::new();
    loop {
        let (built, unit_of, newly) = assemble(b, rules, &head, &dropped)?;
        if newly.is_empty() {
            let mut non_projective = Vec::new();
            for t in 1..=n {
                if let Some(u) = unit_of[t as usize] {
                    if built.is_discontinuous(u)? {
                        non_projective.push(t);
                    }
                }
            }
            dropped.sort();
            return Ok(Reconstruction {
                passage: normalize(&built),
                non_projective,
                dropped_remote: dropped,
            });
        }
        dropped.extend(newly);
    }
}

/// Builds the passage, skipping the remote arcs in `skip`. Returns it with
/// each token's unit and the remote arcs that would have closed a cycle.
#[allow(clippy::type_complexity)]
fn assemble(
    b: &BilexicalGraph,
    rules: &HeadRules,
    head: &[Option<u32>],
    skip: &[Arc],
) -> Result<(Passage, Vec<Option<UnitId>>, Vec<Arc>), ConvertError> {
    let n = b.tokens.len() as u32;
    let mut has_dependents = vec![false; n as usize + 1];
    for a in &b.arcs {
        if !skip.contains(a) {
            has_dependents[a.head as usize] = true;
        }
    }
    let mut builder = PassageBuilder::new(b.passage_id.clone());
    let positions: Vec<u32> = b
        .tokens
        .iter()
        .map(|t| builder.terminal(t.text.clone(), t.punct))
        .collect();
    let mut unit_of: Vec<Option<UnitId>> = vec![None; n as usize + 1];
    let mut pre: Vec<Option<UnitId>> = vec![None; n as usize + 1];
    for &t in &positions {
        pre[t as usize] = Some(builder.preterminal(t));
        if has_dependents[t as usize] || t == b.root {
            unit_of[t as usize] = Some(builder.unit());
        }
    }
    let node = |t: u32| unit_of[t as usize].or(pre[t as usize]).expect("every token has a node");
    let root_unit = unit_of[b.root as usize].expect("root always gets a unit");

    // (parent, child) pairs, for the remote cycle check
    let mut links: Vec<(UnitId, UnitId)> = Vec::new();
    for t in 1..=n {
        if let Some(u) = unit_of[t as usize] {
            let cat = if t == b.root {
                b.root_category.clone()
            } else {
                rules.head_category().clone()
            };
            builder.edge(u, pre[t as usize].unwrap(), cat);
            links.push((u, pre[t as usize].unwrap()));
        }
        if t != b.root && head[t as usize].is_none() {
            builder.edge(root_unit, node(t), rules.head_category().clone());
            links.push((root_unit, node(t)));
        }
    }
    for a in b.arcs.iter().filter(|a| !a.remote) {
        let parent = unit_of[a.head as usize].expect("heads have units");
        builder.edge(parent, node(a.dependent), a.category.clone());
        links.push((parent, node(a.dependent)));
    }
    let mut dropped = Vec::new();
    for a in b.arcs.iter().filter(|a| a.remote && !skip.contains(a)) {
        let parent = unit_of[a.head as usize].expect("heads have units");
        let child = node(a.dependent);
        if reaches(&links, child, parent) {
            dropped.push(a.clone());
            continue;
        }
        builder.remote(parent, child, a.category.clone());
        links.push((parent, child));
    }

    Ok((builder.build()?, unit_of, dropped))
}

fn reaches(links: &[(UnitId, UnitId)], from: UnitId, to: UnitId) -> bool {
    let mut seen = BTreeSet::new();
    let mut stack = vec![from];
    while let Some(u) = stack.pop() {
        if u == to {
            return true;
        }
        if seen.insert(u) {
            stack.extend(links.iter().filter(|(p, _)| *p == u).map(|&(_, c)| c));
        }
    }
    false
}

/// Converts `p` there and back.
pub fn roundtrip(
    p: &Passage,
    conversion: Conversion,
    rules: &HeadRules,
) -> Result<Passage, ConvertError> {
    Ok(match conversion {
        Conversion::Constituency => to_constituency(p),
        Conversion::BilexicalTree => from_bilexical(&to_bilexical(p, rules, true), rules)?.passage,
        Conversion::BilexicalDag => from_bilexical(&to_bilexical(p, rules, false), rules)?.passage,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UpperBoundError {
    #[error(transparent)]
    Convert(#[from] ConvertError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Micro-averaged score of every gold passage's roundtrip against itself.
pub fn upper_bound(
    gold: &[Passage],
    conversion: Conversion,
    rules: &HeadRules,
) -> Result<EvalReport, UpperBoundError> {
    let converted = gold
        .iter()
        .map(|g| roundtrip(g, conversion, rules))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate_pairs(
        converted.iter().zip(gold),
        &EvalOptions::default(),
    )?)
}
