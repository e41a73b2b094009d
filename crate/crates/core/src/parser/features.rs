//! Feature templates over parser states.
//!
//! Every template yields exactly one feature per state, so a state always
//! has [`TEMPLATES`]`.len()` features. Missing positions (an empty stack,
//! say) produce a `<none>` value rather than no feature.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::transition::{NodeKind, TransitionState};
use crate::hash::Fnv;

/// Template names, in extraction order. Changing this list changes
/// [`registry_hash`], which invalidates saved models.
pub const TEMPLATES: [&str; 35] = [
    "bias",
    "s0.w", "s1.w", "s2.w", "b0.w", "b1.w", "b2.w",
    "s0.t", "s1.t", "s2.t", "b0.t", "b1.t", "b2.t",
    "s0.e", "s1.e", "b0.e", "b1.e",
    "s0.n", "s1.n",
    "s0.yl", "s0.yr", "s1.yl", "s1.yr",
    "s0.rc", "s1.rc",
    "s0.w+s1.w", "s0.w+b0.w", "s0.t+s1.t+b0.t", "s0.e+s1.e",
    "h1", "h1+h2", "h1+h2+h3",
    "size",
    "rel(s0,s1)",
    "s0.t+s0.e+s0.n",
];

const NONE: &str = "<none>";

/// Fingerprint of the template list, stored in model files.
pub fn registry_hash() -> u64 {
    TEMPLATES
        .iter()
        .fold(Fnv::new().str("ucca-sparse-v1"), |h, t| h.str(t))
        .finish()
}

struct View<'a> {
    s: &'a TransitionState,
}

impl View<'_> {
    fn word(&self, n: Option<usize>) -> String {
        match n.map(|n| &self.s.nodes()[n].kind) {
            None => NONE.into(),
            Some(NodeKind::Terminal(pos)) => self.s.tokens()[*pos as usize - 1].text.to_lowercase(),
            Some(NodeKind::NonTerminal) => "<unit>".into(),
            Some(NodeKind::Implicit) => "<implicit>".into(),
        }
    }

    fn kind(&self, n: Option<usize>) -> &'static str {
        match n.map(|n| &self.s.nodes()[n].kind) {
            None => NONE,
            Some(NodeKind::Terminal(pos)) if self.s.tokens()[*pos as usize - 1].punct => "punct",
            Some(NodeKind::Terminal(_)) => "word",
            Some(NodeKind::NonTerminal) => "unit",
            Some(NodeKind::Implicit) => "implicit",
        }
    }

    fn incoming(&self, n: Option<usize>) -> String {
        let Some(n) = n else { return NONE.into() };
        self.s.nodes()[n]
            .incoming
            .iter()
            .map(|&e| &self.s.edges()[e])
            .find(|e| !e.remote)
            .map_or_else(|| "-".into(), |e| e.category.to_string())
    }

    fn children(&self, n: Option<usize>) -> String {
        let Some(n) = n else { return NONE.into() };
        self.s.nodes()[n].outgoing.len().min(5).to_string()
    }

    fn boundary(&self, n: Option<usize>, right: bool) -> String {
        let Some(n) = n else { return NONE.into() };
        let y = self.s.yield_of(n);
        let pos = if right { y.last() } else { y.first() };
        pos.map_or_else(
            || "-".into(),
            |&p| self.s.tokens()[p as usize - 1].text.to_lowercase(),
        )
    }

    fn last_child(&self, n: Option<usize>) -> String {
        let Some(n) = n else { return NONE.into() };
        self.s.nodes()[n]
            .outgoing
            .last()
            .map_or_else(|| "-".into(), |&e| self.s.edges()[e].category.to_string())
    }

    fn history(&self, back: usize) -> String {
        let h = self.s.history();
        h.len()
            .checked_sub(back)
            .map_or_else(|| NONE.into(), |i| h[i].to_string())
    }

    fn relation(&self) -> String {
        let (Some(a), Some(b)) = (self.s.s(0), self.s.s(1)) else {
            return NONE.into();
        };
        let mut parts: Vec<String> = self
            .s
            .edges()
            .iter()
            .filter(|e| (e.parent == a && e.child == b) || (e.parent == b && e.child == a))
            .map(|e| {
                let dir = if e.parent == a { ">" } else { "<" };
                let r = if e.remote { "*" } else { "" };
                format!("{dir}{}{r}", e.category)
            })
            .collect();
        parts.sort();
        if parts.is_empty() {
            "-".into()
        } else {
            parts.join(",")
        }
    }
}

/// Raw template values, in [`TEMPLATES`] order.
pub fn feature_values(s: &TransitionState) -> Vec<String> {
    let v = View { s };
    let (s0, s1, s2) = (s.s(0), s.s(1), s.s(2));
    let (b0, b1, b2) = (s.b(0), s.b(1), s.b(2));
    let size = format!(
        "{}|{}",
        s.stack().len().min(6),
        s.buffer().is_empty()
    );
    let mut out: Vec<String> = Vec::with_capacity(TEMPLATES.len());
    out.push(String::new());
    for n in [s0, s1, s2, b0, b1, b2] {
        out.push(v.word(n));
    }
    for n in [s0, s1, s2, b0, b1, b2] {
        out.push(v.kind(n).into());
    }
    for n in [s0, s1, b0, b1] {
        out.push(v.incoming(n));
    }
    for n in [s0, s1] {
        out.push(v.children(n));
    }
    for n in [s0, s1] {
        out.push(v.boundary(n, false));
        out.push(v.boundary(n, true));
    }
    for n in [s0, s1] {
        out.push(v.last_child(n));
    }
    out.push(format!("{}|{}", v.word(s0), v.word(s1)));
    out.push(format!("{}|{}", v.word(s0), v.word(b0)));
    out.push(format!("{}|{}|{}", v.kind(s0), v.kind(s1), v.kind(b0)));
    out.push(format!("{}|{}", v.incoming(s0), v.incoming(s1)));
    out.push(v.history(1));
    out.push(format!("{}|{}", v.history(1), v.history(2)));
    out.push(format!("{}|{}|{}", v.history(1), v.history(2), v.history(3)));
    out.push(size);
    out.push(v.relation());
    out.push(format!("{}|{}|{}", v.kind(s0), v.incoming(s0), v.children(s0)));
    debug_assert_eq!(out.len(), TEMPLATES.len());
    out
}

/// Hashed feature ids, one per template.
pub fn extract_features(s: &TransitionState) -> Vec<u64> {
    feature_values(s)
        .iter()
        .zip(TEMPLATES)
        .map(|(value, name)| Fnv::new().str(name).str(value).finish())
        .collect()
}
