//! Labeled DAG F1.
//!
//! Two edges match when their children cover the same set of tokens and they
//! carry the same label. Counting is over multisets: two identical gold
//! edges need two identical predicted edges to both match. Pre-terminal
//! attachments (`T`) and edges into implicit units never enter the primary or
//! remote counts; implicit units are scored separately by their label and
//! the yield of their parent.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::{Add, AddAssign};

use thiserror::Error;

use crate::category::Category;
use crate::graph::{Edge, Passage};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("passage {passage}: predicted and gold terminals differ at position {position}")]
    TokenMismatch { passage: String, position: u32 },
    #[error("passage {id} is missing from the {side} side")]
    MissingPassage { id: String, side: Side },
    #[error("passage {id} appears more than once on the {side} side")]
    DuplicatePassage { id: String, side: Side },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Predicted,
    Gold,
}

impl core::fmt::Display for Side {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Side::Predicted => "predicted",
            Side::Gold => "gold",
        })
    }
}

/// Counts behind one precision/recall/F1 triple.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ScoreTriple {
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl ScoreTriple {
    pub fn new(matched: usize, predicted: usize, gold: usize) -> Self {
        ScoreTriple {
            matched,
            predicted,
            gold,
        }
    }

    /// Labeled precision in [0, 1]; `None` when nothing was predicted.
    pub fn precision(&self) -> Option<f64> {
        ratio(self.matched, self.predicted)
    }

    /// Labeled recall in [0, 1]; `None` when the gold side is empty.
    pub fn recall(&self) -> Option<f64> {
        ratio(self.matched, self.gold)
    }

    /// Harmonic mean of precision and recall, 0 when either is undefined or 0.
    pub fn f1(&self) -> f64 {
        match (self.precision(), self.recall()) {
            (Some(p), Some(r)) if p + r > 0.0 => 2.0 * p * r / (p + r),
            _ => 0.0,
        }
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl Add for ScoreTriple {
    type Output = ScoreTriple;

    fn add(self, o: ScoreTriple) -> ScoreTriple {
        ScoreTriple {
            matched: self.matched + o.matched,
            predicted: self.predicted + o.predicted,
            gold: self.gold + o.gold,
        }
    }
}

impl AddAssign for ScoreTriple {
    fn add_assign(&mut self, o: ScoreTriple) {
        *self = *self + o;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalOptions {
    /// Count `U` edges in the coarse scores.
    pub include_punctuation: bool,
    /// Also score implicit units.
    pub implicit_extension: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            include_punctuation: true,
            implicit_extension: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeClass {
    Primary,
    Remote,
}

/// The three fine-grained label groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CategorySet {
    Scene,
    NonScene,
    Linkage,
}

impl CategorySet {
    pub const ALL: [CategorySet; 3] = [
        CategorySet::Scene,
        CategorySet::NonScene,
        CategorySet::Linkage,
    ];

    pub fn members(self) -> &'static [Category] {
        match self {
            CategorySet::Scene => &Category::SCENE,
            CategorySet::NonScene => &Category::NON_SCENE,
            CategorySet::Linkage => &Category::LINKAGE,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CategorySet::Scene => "scene",
            CategorySet::NonScene => "non_scene",
            CategorySet::Linkage => "linkage",
        }
    }

    pub fn contains(self, c: &Category) -> bool {
        self.members().contains(c)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvalReport {
    pub primary: ScoreTriple,
    pub remote: ScoreTriple,
    pub implicit: Option<ScoreTriple>,
    pub per_category: BTreeMap<Category, ScoreTriple>,
    pub category_sets: BTreeMap<CategorySet, ScoreTriple>,
}

impl EvalReport {
    /// Adds the counts of `other` into `self`.
    pub fn merge(&mut self, other: &EvalReport) {
        self.primary += other.primary;
        self.remote += other.remote;
        self.implicit = match (self.implicit, other.implicit) {
            (None, None) => None,
            (a, b) => Some(a.unwrap_or_default() + b.unwrap_or_default()),
        };
        for (c, t) in &other.per_category {
            *self.per_category.entry(c.clone()).or_default() += *t;
        }
        for (s, t) in &other.category_sets {
            *self.category_sets.entry(*s).or_default() += *t;
        }
    }
}

/// A scored edge: child yield plus label.
#[derive(Clone, Copy, Debug)]
struct Scored<'a> {
    edge: &'a Edge,
    span: &'a [u32],
}

impl Scored<'_> {
    fn key_cmp(&self, o: &Scored<'_>) -> Ordering {
        self.span
            .cmp(o.span)
            .then_with(|| self.edge.category.cmp(&o.edge.category))
    }

    fn full_cmp(&self, o: &Scored<'_>) -> Ordering {
        self.key_cmp(o)
            .then_with(|| self.edge.parent.cmp(&o.edge.parent))
            .then_with(|| self.edge.child.cmp(&o.edge.child))
    }
}

fn scored_edges<'a>(p: &'a Passage, class: EdgeClass, opts: &EvalOptions) -> Vec<Scored<'a>> {
    let mut out: Vec<Scored<'a>> = p
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.remote == (class == EdgeClass::Remote))
        .filter(|(_, e)| e.category.is_scored())
        .filter(|(_, e)| opts.include_punctuation || e.category != Category::U)
        .filter_map(|(ei, e)| {
            let (_, c) = p.edge_ends(ei);
            (!p.units()[c].implicit).then(|| Scored {
                edge: e,
                span: p.yield_at(c),
            })
        })
        .collect();
    out.sort_by(|a, b| a.full_cmp(b));
    out
}

/// Pairs up equal-key items of two sorted lists, in order.
fn pair_sorted<'a>(pred: &[Scored<'a>], gold: &[Scored<'a>]) -> Vec<(&'a Edge, &'a Edge)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < pred.len() && j < gold.len() {
        match pred[i].key_cmp(&gold[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push((pred[i].edge, gold[j].edge));
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn check_tokens(pred: &Passage, gold: &Passage) -> Result<(), EvalError> {
    let (a, b) = (pred.terminals(), gold.terminals());
    let mismatch = a
        .iter()
        .zip(b)
        .position(|(x, y)| x.text != y.text)
        .or_else(|| (a.len() != b.len()).then(|| a.len().min(b.len())));
    match mismatch {
        Some(i) => Err(EvalError::TokenMismatch {
            passage: gold.id().to_string(),
            position: i as u32 + 1,
        }),
        None => Ok(()),
    }
}

/// Matched `(predicted, gold)` edge pairs of one class.
///
/// Pairs are produced in order of child yield, then label; among identical
/// keys the edges pair up in order of parent and child id.
pub fn match_edges<'a>(
    pred: &'a Passage,
    gold: &'a Passage,
    class: EdgeClass,
) -> Result<Vec<(&'a Edge, &'a Edge)>, EvalError> {
    check_tokens(pred, gold)?;
    let opts = EvalOptions::default();
    Ok(pair_sorted(
        &scored_edges(pred, class, &opts),
        &scored_edges(gold, class, &opts),
    ))
}

/// Scores one predicted passage against its gold passage.
pub fn score_pair(
    pred: &Passage,
    gold: &Passage,
    opts: &EvalOptions,
) -> Result<EvalReport, EvalError> {
    check_tokens(pred, gold)?;
    let mut report = EvalReport::default();
    for class in [EdgeClass::Primary, EdgeClass::Remote] {
        let p = scored_edges(pred, class, opts);
        let g = scored_edges(gold, class, opts);
        let matched = pair_sorted(&p, &g);
        let triple = ScoreTriple::new(matched.len(), p.len(), g.len());
        match class {
            EdgeClass::Primary => report.primary = triple,
            EdgeClass::Remote => report.remote = triple,
        }
        for s in &p {
            report
                .per_category
                .entry(s.edge.category.clone())
                .or_default()
                .predicted += 1;
        }
        for s in &g {
            report
                .per_category
                .entry(s.edge.category.clone())
                .or_default()
                .gold += 1;
        }
        for (e, _) in matched {
            report
                .per_category
                .entry(e.category.clone())
                .or_default()
                .matched += 1;
        }
    }
    report.category_sets = sets_from_categories(&report.per_category);
    if opts.implicit_extension {
        report.implicit = Some(score_implicit(pred, gold)?);
    }
    Ok(report)
}

fn sets_from_categories(
    per_category: &BTreeMap<Category, ScoreTriple>,
) -> BTreeMap<CategorySet, ScoreTriple> {
    CategorySet::ALL
        .iter()
        .map(|&set| {
            let total = per_category
                .iter()
                .filter(|(c, _)| set.contains(c))
                .fold(ScoreTriple::default(), |acc, (_, t)| acc + *t);
            (set, total)
        })
        .collect()
}

/// Scene, non-scene and linkage scores. `F`, `R` and `U` belong to none.
pub fn fine_grained(
    pred: &Passage,
    gold: &Passage,
) -> Result<BTreeMap<CategorySet, ScoreTriple>, EvalError> {
    Ok(score_pair(pred, gold, &EvalOptions::default())?.category_sets)
}

/// Implicit units matched by incoming label and parent yield.
pub fn score_implicit(pred: &Passage, gold: &Passage) -> Result<ScoreTriple, EvalError> {
    check_tokens(pred, gold)?;
    fn keys(p: &Passage) -> Vec<(&[u32], &Category)> {
        let mut out = Vec::new();
        for (c, unit) in p.units().iter().enumerate() {
            if !unit.implicit {
                continue;
            }
            for &ei in p.incoming_at(c) {
                let e = &p.edges()[ei];
                if !e.remote {
                    out.push((p.yield_at(p.edge_ends(ei).0), &e.category));
                }
            }
        }
        out.sort();
        out
    }
    let (p, g) = (keys(pred), keys(gold));
    let (mut i, mut j, mut matched) = (0, 0, 0);
    while i < p.len() && j < g.len() {
        match p[i].cmp(&g[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                matched += 1;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(ScoreTriple::new(matched, p.len(), g.len()))
}

/// Micro-averaged scores over already aligned `(predicted, gold)` pairs.
pub fn aggregate_pairs<'a>(
    pairs: impl IntoIterator<Item = (&'a Passage, &'a Passage)>,
    opts: &EvalOptions,
) -> Result<EvalReport, EvalError> {
    let mut total = EvalReport {
        implicit: opts.implicit_extension.then(ScoreTriple::default),
        category_sets: CategorySet::ALL
            .iter()
            .map(|&s| (s, ScoreTriple::default()))
            .collect(),
        ..Default::default()
    };
    for (pred, gold) in pairs {
        total.merge(&score_pair(pred, gold, opts)?);
    }
    Ok(total)
}

/// Pairs predictions with gold passages by passage id and micro-averages.
pub fn aggregate_corpus(
    pred: &[Passage],
    gold: &[Passage],
    opts: &EvalOptions,
) -> Result<EvalReport, EvalError> {
    fn by_id(side: &[Passage], which: Side) -> Result<BTreeMap<&str, &Passage>, EvalError> {
        let mut map = BTreeMap::new();
        for p in side {
            if map.insert(p.id(), p).is_some() {
                return Err(EvalError::DuplicatePassage {
                    id: p.id().to_string(),
                    side: which,
                });
            }
        }
        Ok(map)
    }
    let pred = by_id(pred, Side::Predicted)?;
    let gold = by_id(gold, Side::Gold)?;
    if let Some(id) = gold.keys().find(|id| !pred.contains_key(*id)) {
        return Err(EvalError::MissingPassage {
            id: id.to_string(),
            side: Side::Predicted,
        });
    }
    if let Some(id) = pred.keys().find(|id| !gold.contains_key(*id)) {
        return Err(EvalError::MissingPassage {
            id: id.to_string(),
            side: Side::Gold,
        });
    }
    aggregate_pairs(gold.iter().map(|(id, g)| (pred[id], *g)), opts)
}
