//! Guideline checks and canonical normalization.
//!
//! | id | name                          | severity |
//! |----|-------------------------------|----------|
//! | R0 | malformed-graph               | error    |
//! | R1 | scene-missing-participant     | warning  |
//! | R2 | scene-multiple-main-relations | error    |
//! | R3 | non-scene-without-center      | warning  |
//! | R4 | implicit-with-children        | error    |
//! | R5 | remote-to-own-ancestor        | error    |
//! | R6 | punctuation-edge-to-word      | error    |
//!
//! R0, R4 and R5 describe graphs that [`Passage::build`] refuses, so they are
//! produced from a [`GraphError`] by [`violation_for_error`] rather than by
//! [`validate`].

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::category::Category;
use crate::graph::{Edge, GraphError, Passage, Unit, UnitId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    MalformedGraph,
    SceneMissingParticipant,
    SceneMultipleMainRelations,
    NonSceneWithoutCenter,
    ImplicitWithChildren,
    RemoteToOwnAncestor,
    PunctuationEdgeToWord,
}

impl Rule {
    pub const ALL: [Rule; 7] = [
        Rule::MalformedGraph,
        Rule::SceneMissingParticipant,
        Rule::SceneMultipleMainRelations,
        Rule::NonSceneWithoutCenter,
        Rule::ImplicitWithChildren,
        Rule::RemoteToOwnAncestor,
        Rule::PunctuationEdgeToWord,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Rule::MalformedGraph => "R0",
            Rule::SceneMissingParticipant => "R1",
            Rule::SceneMultipleMainRelations => "R2",
            Rule::NonSceneWithoutCenter => "R3",
            Rule::ImplicitWithChildren => "R4",
            Rule::RemoteToOwnAncestor => "R5",
            Rule::PunctuationEdgeToWord => "R6",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rule::MalformedGraph => "malformed-graph",
            Rule::SceneMissingParticipant => "scene-missing-participant",
            Rule::SceneMultipleMainRelations => "scene-multiple-main-relations",
            Rule::NonSceneWithoutCenter => "non-scene-without-center",
            Rule::ImplicitWithChildren => "implicit-with-children",
            Rule::RemoteToOwnAncestor => "remote-to-own-ancestor",
            Rule::PunctuationEdgeToWord => "punctuation-edge-to-word",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            Rule::SceneMissingParticipant | Rule::NonSceneWithoutCenter => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub rule: Rule,
    pub severity: Severity,
    pub unit: Option<UnitId>,
    pub message: String,
}

impl Violation {
    fn new(rule: Rule, unit: Option<UnitId>, message: String) -> Self {
        Violation {
            rule,
            severity: rule.severity(),
            unit,
            message,
        }
    }

    pub fn rule_id(&self) -> &'static str {
        self.rule.id()
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} [{}]", self.rule.id(), self.severity, self.rule.name())?;
        if let Some(u) = self.unit {
            write!(f, " at {}", u)?;
        }
        write!(f, ": {}", self.message)
    }
}

/// Maps a construction failure onto the rule registry.
pub fn violation_for_error(err: &GraphError) -> Violation {
    let rule = match err {
        GraphError::ImplicitWithChildren(_) => Rule::ImplicitWithChildren,
        GraphError::Cycle {
            through_remote: true,
            ..
        } => Rule::RemoteToOwnAncestor,
        _ => Rule::MalformedGraph,
    };
    Violation::new(rule, err.unit(), format!("{}", err))
}

/// Runs the rules that apply to well-formed passages.
///
/// The result is sorted by (rule, unit) and empty when the passage passes.
pub fn validate(p: &Passage) -> Vec<Violation> {
    let mut out = Vec::new();
    for u in p.units() {
        if u.implicit || u.is_preterminal() {
            continue;
        }
        let primary: Vec<&Edge> = p.outgoing(u.id).filter(|e| !e.remote).collect();
        let has = |c: Category, remote_too: bool| {
            p.outgoing(u.id)
                .any(|e| e.category == c && (remote_too || !e.remote))
        };

        let main_relations = primary
            .iter()
            .filter(|e| e.category.is_main_relation())
            .count();
        if main_relations > 0 && !has(Category::A, true) {
            out.push(Violation::new(
                Rule::SceneMissingParticipant,
                Some(u.id),
                String::from("scene has a Process or State but no Participant"),
            ));
        }
        if main_relations > 1 {
            out.push(Violation::new(
                Rule::SceneMultipleMainRelations,
                Some(u.id),
                format!("scene has {} main relations", main_relations),
            ));
        }
        let elaborated = primary
            .iter()
            .any(|e| matches!(e.category, Category::E | Category::N));
        if elaborated && !has(Category::C, false) {
            out.push(Violation::new(
                Rule::NonSceneWithoutCenter,
                Some(u.id),
                String::from("unit has Elaborators or Connectors but no Center"),
            ));
        }
    }
    for e in p.edges() {
        if e.category != Category::U {
            continue;
        }
        let words: Vec<u32> = p
            .yield_of(e.child)
            .unwrap_or(&[])
            .iter()
            .copied()
            .filter(|&pos| p.terminal(pos).is_some_and(|t| !t.punct))
            .collect();
        if let Some(first) = words.first() {
            out.push(Violation::new(
                Rule::PunctuationEdgeToWord,
                Some(e.child),
                format!(
                    "U edge from {} covers non-punctuation terminal {}",
                    e.parent, first
                ),
            ));
        }
    }
    out.sort();
    out
}

/// Canonical ordering key of a child edge: yield start, label, and for
/// implicit children (whose yield is empty) their incoming remote edges.
type ChildKey = (u32, Category, Vec<(Vec<u32>, usize, Category)>);

/// Renumbers units breadth-first and drops duplicate edges.
///
/// Siblings are visited by (first token of the child's yield, category), so
/// the result depends only on the graph, never on the incoming ids. The edge
/// multiset is untouched apart from deduplication.
pub fn normalize(p: &Passage) -> Passage {
    let units = p.units();
    let depth = primary_depths(p);
    let key_of = |edge: usize| -> ChildKey {
        let (_, c) = p.edge_ends(edge);
        let y = p.yield_at(c);
        let mut remote_in = Vec::new();
        if units[c].implicit {
            for &ei in p.incoming_at(c) {
                let (parent, _) = p.edge_ends(ei);
                if p.edges()[ei].remote {
                    remote_in.push((
                        p.yield_at(parent).to_vec(),
                        depth[parent],
                        p.edges()[ei].category.clone(),
                    ));
                }
            }
            remote_in.sort();
        }
        (
            y.first().copied().unwrap_or(u32::MAX),
            p.edges()[edge].category.clone(),
            remote_in,
        )
    };

    let mut new_id: Vec<Option<UnitId>> = vec![None; units.len()];
    let mut next = 1u32;
    let mut queue = VecDeque::new();
    queue.push_back(p.root_index());
    new_id[p.root_index()] = Some(UnitId::foundational(next));
    next += 1;
    while let Some(u) = queue.pop_front() {
        let mut children: Vec<(ChildKey, usize)> = p
            .outgoing_at(u)
            .iter()
            .filter(|&&ei| !p.edges()[ei].remote)
            .map(|&ei| (key_of(ei), p.edge_ends(ei).1))
            .collect();
        children.sort();
        for (_, c) in children {
            if new_id[c].is_none() {
                new_id[c] = Some(UnitId::foundational(next));
                next += 1;
                queue.push_back(c);
            }
        }
    }

    let map = |i: usize| new_id[i].expect("primary edges span every unit");
    let new_units: Vec<Unit> = units
        .iter()
        .enumerate()
        .map(|(i, u)| Unit {
            id: map(i),
            ..u.clone()
        })
        .collect();
    let new_edges: Vec<Edge> = p
        .edges()
        .iter()
        .enumerate()
        .map(|(ei, e)| {
            let (a, b) = p.edge_ends(ei);
            Edge {
                parent: map(a),
                child: map(b),
                ..e.clone()
            }
        })
        .collect();
    Passage::build(p.id(), p.terminals().to_vec(), new_units, new_edges)
        .expect("renumbering preserves validity")
}

/// Whether two passages are the same graph up to unit ids.
pub fn same_graph(a: &Passage, b: &Passage) -> bool {
    a.terminals() == b.terminals() && {
        let (na, nb) = (normalize(a), normalize(b));
        na.units() == nb.units() && na.edges() == nb.edges()
    }
}

fn primary_depths(p: &Passage) -> Vec<usize> {
    let mut depth = vec![0usize; p.units().len()];
    let mut queue = VecDeque::from([p.root_index()]);
    while let Some(u) = queue.pop_front() {
        for &ei in p.outgoing_at(u) {
            if !p.edges()[ei].remote {
                let c = p.edge_ends(ei).1;
                depth[c] = depth[u] + 1;
                queue.push_back(c);
            }
        }
    }
    depth
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::PassageBuilder;
    use crate::samples::{figure1, figure2};
    use Category::*;

    #[test]
    fn reference_passages_pass() {
        assert_eq!(validate(&figure1().passage), vec![]);
        assert_eq!(validate(&figure2().passage), vec![]);
    }

    #[test]
    fn dropping_the_remote_participant_trips_r1() {
        let f = figure1();
        let (id, t, u, mut e) = f.passage.into_parts();
        e.retain(|e| !e.remote);
        let p = Passage::build(id, t, u, e).unwrap();
        let v = validate(&p);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule_id(), "R1");
        assert_eq!(v[0].severity, Severity::Warning);
        assert_eq!(v[0].unit, Some(f.graduation_scene));
    }

    #[test]
    fn implicit_participant_satisfies_r1() {
        let f = figure2();
        let (id, t, u, mut e) = f.passage.into_parts();
        e.retain(|e| e.child != f.implicit);
        let u: Vec<Unit> = u.into_iter().filter(|u| u.id != f.implicit).collect();
        // without the implicit A the scene still has the "technique" and
        // "other crops" Participants
        let p = Passage::build(id, t, u, e).unwrap();
        assert_eq!(validate(&p), vec![]);
    }

    #[test]
    fn rules_r2_r3_r6() {
        let mut b = PassageBuilder::new("bad");
        let root = b.unit();
        let np = b.unit();
        let x = b.word("runs");
        let y = b.word("sleeps");
        let z = b.word("big");
        let w = b.word("dog");
        b.edge(root, x, P)
            .edge(root, y, S)
            .edge(root, np, A)
            .edge(np, z, E)
            .edge(np, w, U);
        let p = b.build().unwrap();
        let ids: Vec<&str> = validate(&p).iter().map(|v| v.rule_id()).collect();
        assert_eq!(ids, vec!["R2", "R3", "R6"]);
    }

    #[test]
    fn build_errors_map_to_rules() {
        let v = violation_for_error(&GraphError::ImplicitWithChildren(UnitId::new(1, 3)));
        assert_eq!(v.rule_id(), "R4");
        assert_eq!(v.unit, Some(UnitId::new(1, 3)));
        let v = violation_for_error(&GraphError::Cycle {
            unit: UnitId::new(1, 2),
            through_remote: true,
        });
        assert_eq!(v.rule_id(), "R5");
        let v = violation_for_error(&GraphError::Cycle {
            unit: UnitId::new(1, 2),
            through_remote: false,
        });
        assert_eq!(v.rule_id(), "R0");
        assert_eq!(v.severity, Severity::Error);
    }

    #[test]
    fn normalize_is_idempotent() {
        for p in [figure1().passage, figure2().passage] {
            let n = normalize(&p);
            assert_eq!(normalize(&n), n);
            assert_eq!(n.root_id(), UnitId::foundational(1));
        }
    }

    #[test]
    fn duplicated_edge_record_is_kept_once() {
        let mut b = PassageBuilder::new("dup");
        let root = b.unit();
        let w = b.word("x");
        b.edge(root, w, A).edge(root, w, A);
        let n = normalize(&b.build().unwrap());
        assert_eq!(n.edges().len(), 1);
    }

    #[test]
    fn normalize_ignores_original_ids() {
        let p = figure1().passage;
        let (id, t, units, edges) = p.clone().into_parts();
        // reverse the ordinals
        let max = units.len() as u32 + 1;
        let flip = |u: UnitId| UnitId::foundational(max - u.ordinal);
        let units = units
            .into_iter()
            .map(|u| Unit {
                id: flip(u.id),
                ..u
            })
            .collect();
        let edges = edges
            .into_iter()
            .map(|e| Edge {
                parent: flip(e.parent),
                child: flip(e.child),
                ..e
            })
            .collect();
        let shuffled = Passage::build(id, t, units, edges).unwrap();
        assert_ne!(shuffled, p);
        assert_eq!(normalize(&shuffled), normalize(&p));
        assert!(same_graph(&shuffled, &p));
    }
}
