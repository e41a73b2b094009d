//! Passage XML: a roxmltree-based reader and a canonical writer.
//!
//! Layer `0` holds the terminals, layer `1` the foundational units. A unit
//! attaches tokens with `Terminal` edges; a node whose only edge is a single
//! `Terminal` edge is a pre-terminal, and any other node that attaches tokens
//! gets one synthesized pre-terminal per token, linked with a `T` edge.
//! See FORMAT.md for the full layout.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use roxmltree::Node;
use thiserror::Error;
use ucca_core::{Category, Edge, GraphError, Passage, Terminal, Unit, UnitId};

#[derive(Debug, Error)]
pub enum XmlError {
    #[error("XML syntax error: {0}")]
    Syntax(#[from] roxmltree::Error),
    #[error("line {line}: {message}")]
    Schema { line: u32, message: String },
    #[error("line {line}: {source}")]
    Model {
        line: u32,
        #[source]
        source: GraphError,
    },
}

impl XmlError {
    /// True when the document has terminals but no foundational layer,
    /// as in a stripped test file.
    pub fn is_unannotated(&self) -> bool {
        matches!(
            self,
            XmlError::Model {
                source: GraphError::NoRoot,
                ..
            }
        )
    }
}

pub type Attrs = Vec<(String, String)>;

/// Unknown attributes of one element and of its `<attributes>` block.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ElementExtras {
    pub element: Attrs,
    pub block: Attrs,
}

impl ElementExtras {
    fn is_empty(&self) -> bool {
        self.element.is_empty() && self.block.is_empty()
    }
}

/// Identifies an edge element: source node, target node, type, remote flag.
pub type EdgeKey = (String, String, String, bool);

/// Attributes the model ignores, kept so that a rewrite reproduces them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Extras {
    pub root: Attrs,
    pub layers: BTreeMap<String, Attrs>,
    pub nodes: BTreeMap<String, ElementExtras>,
    pub edges: BTreeMap<EdgeKey, ElementExtras>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub passage: Passage,
    pub extras: Extras,
}

/// Terminals of a document, with or without its foundational layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tokens {
    pub passage_id: String,
    pub terminals: Vec<Terminal>,
    pub extras: Extras,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReadOptions {
    /// Keep unknown edge labels as extension labels instead of failing.
    pub extension_labels: bool,
}

const TERMINAL_EDGE: &str = "Terminal";
const LINKAGE_NODE: &str = "LKG";

fn line_of(node: Node) -> u32 {
    node.document().text_pos_at(node.range().start).row
}

fn schema(node: Node, message: impl Into<String>) -> XmlError {
    XmlError::Schema {
        line: line_of(node),
        message: message.into(),
    }
}

fn required<'a>(node: Node<'a, '_>, name: &str) -> Result<&'a str, XmlError> {
    node.attribute(name).ok_or_else(|| {
        schema(
            node,
            format!("<{}> lacks the `{name}` attribute", node.tag_name().name()),
        )
    })
}

fn flag(node: Node, value: &str) -> Result<bool, XmlError> {
    match value {
        "True" => Ok(true),
        "False" => Ok(false),
        other => Err(schema(node, format!("expected True or False, found `{other}`"))),
    }
}

fn others(node: Node, known: &[&str]) -> Attrs {
    node.attributes()
        .filter(|a| a.namespace().is_none() && !known.contains(&a.name()))
        .map(|a| (a.name().to_string(), a.value().to_string()))
        .collect()
}

fn block<'a, 'i>(node: Node<'a, 'i>) -> Option<Node<'a, 'i>> {
    node.children()
        .find(|c| c.is_element() && c.has_tag_name("attributes"))
}

fn elements<'a, 'i>(node: Node<'a, 'i>, name: &'a str) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children()
        .filter(move |c| c.is_element() && c.has_tag_name(name))
}

fn parse_id(node: Node, raw: &str, layer: u32) -> Result<UnitId, XmlError> {
    let id: UnitId = raw
        .parse()
        .map_err(|e| schema(node, format!("{e}")))?;
    if id.layer != layer {
        return Err(schema(
            node,
            format!("node {raw} does not belong in layer {layer}"),
        ));
    }
    Ok(id)
}

struct Header<'a, 'i> {
    passage_id: String,
    extras: Extras,
    layer0: Option<Node<'a, 'i>>,
    layer1: Option<Node<'a, 'i>>,
    root: Node<'a, 'i>,
}

fn header<'a, 'i>(doc: &'a roxmltree::Document<'i>) -> Result<Header<'a, 'i>, XmlError> {
    let root = doc.root_element();
    if !(root.has_tag_name("root") || root.has_tag_name("passage")) {
        return Err(schema(
            root,
            format!("unexpected document element <{}>", root.tag_name().name()),
        ));
    }
    let mut h = Header {
        passage_id: required(root, "passageID")?.to_string(),
        extras: Extras {
            root: others(root, &["passageID"]),
            ..Extras::default()
        },
        layer0: None,
        layer1: None,
        root,
    };
    for layer in elements(root, "layer") {
        let id = required(layer, "layerID")?;
        let slot = match id {
            "0" => &mut h.layer0,
            "1" => &mut h.layer1,
            other => return Err(schema(layer, format!("unknown layer `{other}`"))),
        };
        if slot.replace(layer).is_some() {
            return Err(schema(layer, format!("layer {id} appears twice")));
        }
        h.extras
            .layers
            .insert(id.to_string(), others(layer, &["layerID"]));
    }
    Ok(h)
}

fn read_terminals(layer: Node, extras: &mut Extras) -> Result<Vec<Terminal>, XmlError> {
    let mut terminals = Vec::new();
    let mut seen = BTreeSet::new();
    for node in elements(layer, "node") {
        let raw = required(node, "ID")?;
        let id = parse_id(node, raw, 0)?;
        if !seen.insert(id) {
            return Err(schema(node, format!("duplicate node {raw}")));
        }
        let punct = match required(node, "type")? {
            "Word" => false,
            "Punctuation" => true,
            other => {
                return Err(schema(
                    node,
                    format!("layer 0 holds only Word and Punctuation nodes, found `{other}`"),
                ))
            }
        };
        let attrs = block(node)
            .ok_or_else(|| schema(node, format!("terminal {raw} has no <attributes> block")))?;
        let text = required(attrs, "text")?;
        let ex = ElementExtras {
            element: others(node, &["ID", "type"]),
            block: others(attrs, &["text"]),
        };
        if !ex.is_empty() {
            extras.nodes.insert(id.to_string(), ex);
        }
        terminals.push(Terminal::new(id.ordinal, text, punct));
    }
    Ok(terminals)
}

struct RawEdge<'a, 'i> {
    node: Node<'a, 'i>,
    to: String,
    label: String,
    remote: bool,
}

struct RawNode<'a, 'i> {
    node: Node<'a, 'i>,
    id: UnitId,
    implicit: bool,
    edges: Vec<RawEdge<'a, 'i>>,
}

/// Units, edges, and the source line of each unit.
type Layer1 = (Vec<Unit>, Vec<Edge>, BTreeMap<UnitId, u32>);

fn read_units(
    layer: Node,
    terminal_count: u32,
    opts: ReadOptions,
    extras: &mut Extras,
) -> Result<Layer1, XmlError> {
    let mut raw = Vec::new();
    let mut known = BTreeSet::new();
    let mut linkage = BTreeSet::new();
    for node in elements(layer, "node") {
        let id_text = required(node, "ID")?;
        let id = parse_id(node, id_text, 1)?;
        if !known.insert(id) {
            return Err(schema(node, format!("duplicate node {id_text}")));
        }
        let kind = required(node, "type")?;
        if kind == LINKAGE_NODE {
            linkage.insert(id.to_string());
            continue;
        }
        let mut ex = ElementExtras {
            element: others(node, &["ID", "type"]),
            block: Vec::new(),
        };
        let mut implicit = false;
        if let Some(attrs) = block(node) {
            if let Some(v) = attrs.attribute("implicit") {
                implicit = flag(attrs, v)?;
            }
            ex.block = others(attrs, &["implicit"]);
        }
        if !ex.is_empty() {
            extras.nodes.insert(id.to_string(), ex);
        }
        let mut edges = Vec::new();
        for e in elements(node, "edge") {
            let to = required(e, "toID")?.to_string();
            let label = required(e, "type")?.to_string();
            let mut remote = match e.attribute("remote") {
                Some(v) => flag(e, v)?,
                None => false,
            };
            let mut ex = ElementExtras {
                element: others(e, &["toID", "type", "remote"]),
                block: Vec::new(),
            };
            if let Some(attrs) = block(e) {
                if let Some(v) = attrs.attribute("remote") {
                    remote |= flag(attrs, v)?;
                }
                ex.block = others(attrs, &["remote"]);
            }
            if !ex.is_empty() {
                extras
                    .edges
                    .insert((id.to_string(), to.clone(), label.clone(), remote), ex);
            }
            edges.push(RawEdge {
                node: e,
                to,
                label,
                remote,
            });
        }
        raw.push(RawNode {
            node,
            id,
            implicit,
            edges,
        });
    }

    let mut next = known.iter().map(|u| u.ordinal).max().unwrap_or(0);
    let mut units = Vec::new();
    let mut edges = Vec::new();
    let mut lines = BTreeMap::new();
    for r in &raw {
        lines.insert(r.id, line_of(r.node));
        let mut attached = Vec::new();
        let mut other = 0;
        for e in &r.edges {
            if linkage.contains(&e.to) {
                continue;
            }
            let target: UnitId = e
                .to
                .parse()
                .map_err(|_| schema(e.node, format!("edge points to malformed id `{}`", e.to)))?;
            if e.label == TERMINAL_EDGE {
                if target.layer != 0 || target.ordinal == 0 || target.ordinal > terminal_count {
                    return Err(schema(
                        e.node,
                        format!("Terminal edge points to {}, which is not a terminal", e.to),
                    ));
                }
                if e.remote {
                    return Err(schema(e.node, "a Terminal edge cannot be remote"));
                }
                attached.push(target.ordinal);
                continue;
            }
            if target.layer != 1 || !known.contains(&target) {
                return Err(schema(
                    e.node,
                    format!("edge points to {}, which is in no layer", e.to),
                ));
            }
            let category = if opts.extension_labels {
                Category::parse_extended(&e.label)
            } else {
                e.label
                    .parse()
                    .map_err(|err| schema(e.node, format!("{err}")))?
            };
            other += 1;
            edges.push(Edge {
                parent: r.id,
                child: target,
                category,
                remote: e.remote,
            });
        }
        if r.implicit {
            if !attached.is_empty() {
                return Err(schema(r.node, format!("implicit node {} attaches a terminal", r.id)));
            }
            units.push(Unit::implicit(r.id));
        } else if attached.len() == 1 && other == 0 {
            units.push(Unit::preterminal(r.id, attached[0]));
        } else {
            units.push(Unit::new(r.id));
            attached.sort_unstable();
            for pos in attached {
                next += 1;
                let pre = UnitId::foundational(next);
                lines.insert(pre, line_of(r.node));
                units.push(Unit::preterminal(pre, pos));
                edges.push(Edge::primary(r.id, pre, Category::T));
            }
        }
    }
    Ok((units, edges, lines))
}

/// Reads a passage together with the attributes it does not model.
pub fn read_document(text: &str, opts: ReadOptions) -> Result<Document, XmlError> {
    let doc = roxmltree::Document::parse(text)?;
    let mut h = header(&doc)?;
    let terminals = match h.layer0 {
        Some(layer) => read_terminals(layer, &mut h.extras)?,
        None => Vec::new(),
    };
    let (units, edges, lines) = match h.layer1 {
        Some(layer) => read_units(layer, terminals.len() as u32, opts, &mut h.extras)?,
        None => Default::default(),
    };
    let fallback = line_of(h.layer1.unwrap_or(h.root));
    let passage = Passage::build(h.passage_id, terminals, units, edges).map_err(|source| {
        let line = source
            .unit()
            .and_then(|u| lines.get(&u).copied())
            .unwrap_or(fallback);
        XmlError::Model { line, source }
    })?;
    Ok(Document {
        passage,
        extras: h.extras,
    })
}

pub fn read_passage(text: &str) -> Result<Passage, XmlError> {
    read_document(text, ReadOptions::default()).map(|d| d.passage)
}

/// Reads only the passage id and layer 0, so it also accepts stripped files.
pub fn read_tokens(text: &str) -> Result<Tokens, XmlError> {
    let doc = roxmltree::Document::parse(text)?;
    let mut h = header(&doc)?;
    let terminals = match h.layer0 {
        Some(layer) => read_terminals(layer, &mut h.extras)?,
        None => Vec::new(),
    };
    h.extras.layers.retain(|id, _| id == "0");
    h.extras.nodes.retain(|id, _| id.starts_with("0."));
    h.extras.edges.clear();
    let mut sorted = terminals.clone();
    sorted.sort_by_key(|t| t.position);
    for (i, t) in sorted.iter().enumerate() {
        if t.position != i as u32 + 1 {
            return Err(schema(
                h.layer0.unwrap_or(h.root),
                format!("terminal positions skip from {} to {}", i, t.position),
            ));
        }
    }
    Ok(Tokens {
        passage_id: h.passage_id,
        terminals: sorted,
        extras: h.extras,
    })
}

fn escape(out: &mut String, value: &str) {
    for c in value.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\t' | '\n' | '\r' => {
                let _ = write!(out, "&#{};", c as u32);
            }
            c => out.push(c),
        }
    }
}

fn open(out: &mut String, indent: usize, tag: &str, known: &[(&str, &str)], extra: &Attrs) {
    out.push_str(&"  ".repeat(indent));
    out.push('<');
    out.push_str(tag);
    let extra = extra.iter().map(|(k, v)| (k.as_str(), v.as_str()));
    for (k, v) in known.iter().copied().chain(extra) {
        let _ = write!(out, " {k}=\"");
        escape(out, v);
        out.push('"');
    }
}

/// Writes an element; `body` fills in its children, if any.
fn element(
    out: &mut String,
    indent: usize,
    tag: &str,
    known: &[(&str, &str)],
    extra: &Attrs,
    body: impl FnOnce(&mut String),
) {
    open(out, indent, tag, known, extra);
    let mark = out.len();
    out.push_str(">\n");
    let start = out.len();
    body(out);
    if out.len() == start {
        out.truncate(mark);
        out.push_str("/>\n");
    } else {
        let _ = writeln!(out, "{}</{tag}>", "  ".repeat(indent));
    }
}

fn attributes_block(out: &mut String, indent: usize, known: &[(&str, &str)], extra: &Attrs) {
    if !known.is_empty() || !extra.is_empty() {
        element(out, indent, "attributes", known, extra, |_| {});
    }
}

static NO_EXTRAS: ElementExtras = ElementExtras {
    element: Vec::new(),
    block: Vec::new(),
};

fn edge_element(out: &mut String, extras: &Extras, from: &str, to: &str, label: &str, remote: bool) {
    let ex = extras
        .edges
        .get(&(from.to_string(), to.to_string(), label.to_string(), remote))
        .unwrap_or(&NO_EXTRAS);
    let known: &[(&str, &str)] = if remote { &[("remote", "True")] } else { &[] };
    element(out, 3, "edge", &[("toID", to), ("type", label)], &ex.element, |out| {
        attributes_block(out, 4, known, &ex.block)
    });
}

/// Canonical serialization: fixed attribute order, nodes by id, edges by
/// (child, category, remote), two-space indentation and LF line ends.
pub fn write_document(passage: &Passage, extras: &Extras) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n");
    let empty = Vec::new();
    let layer_extras = |id: &str| extras.layers.get(id).unwrap_or(&empty);
    let node_extras = |id: &str| extras.nodes.get(id).unwrap_or(&NO_EXTRAS);

    let mut layers: BTreeMap<u32, Vec<&Unit>> = BTreeMap::new();
    for u in passage.units() {
        layers.entry(u.id.layer).or_default().push(u);
    }

    element(
        &mut out,
        0,
        "root",
        &[("passageID", passage.id())],
        &extras.root,
        |out| {
            element(out, 1, "layer", &[("layerID", "0")], layer_extras("0"), |out| {
                for t in passage.terminals() {
                    let id = UnitId::new(0, t.position).to_string();
                    let ex = node_extras(&id);
                    let kind = if t.punct { "Punctuation" } else { "Word" };
                    element(out, 2, "node", &[("ID", &id), ("type", kind)], &ex.element, |out| {
                        attributes_block(out, 3, &[("text", &t.text)], &ex.block)
                    });
                }
            });
            for (layer, units) in &layers {
                let layer_id = layer.to_string();
                element(out, 1, "layer", &[("layerID", &layer_id)], layer_extras(&layer_id), |out| {
                    for u in units {
                        let id = u.id.to_string();
                        let ex = node_extras(&id);
                        let punct = u
                            .terminal
                            .and_then(|p| passage.terminal(p))
                            .is_some_and(|t| t.punct);
                        let kind = if punct { "PNCT" } else { "FN" };
                        element(out, 2, "node", &[("ID", &id), ("type", kind)], &ex.element, |out| {
                            let flags: &[(&str, &str)] =
                                if u.implicit { &[("implicit", "True")] } else { &[] };
                            attributes_block(out, 3, flags, &ex.block);
                            if let Some(pos) = u.terminal {
                                let to = UnitId::new(0, pos).to_string();
                                edge_element(out, extras, &id, &to, TERMINAL_EDGE, false);
                            }
                            for e in passage.outgoing(u.id) {
                                let to = e.child.to_string();
                                edge_element(out, extras, &id, &to, e.category.as_str(), e.remote);
                            }
                        });
                    }
                });
            }
        },
    );
    out
}

pub fn write_passage(passage: &Passage) -> String {
    write_document(passage, &Extras::default())
}

/// Removes every `<layer layerID="1">` element, with the indentation and
/// line break around it. Everything else is kept byte for byte.
pub fn strip_annotation(text: &str) -> Result<String, XmlError> {
    let doc = roxmltree::Document::parse(text)?;
    let mut cuts = Vec::new();
    for layer in elements(doc.root_element(), "layer") {
        if layer.attribute("layerID") != Some("1") {
            continue;
        }
        let range = layer.range();
        let (mut start, mut end) = (range.start, range.end);
        let line_start = text[..start].rfind('\n').map_or(0, |i| i + 1);
        if text[line_start..start].chars().all(|c| c == ' ' || c == '\t') {
            start = line_start;
            let rest = &text[end..];
            let trailing = rest.len() - rest.trim_start_matches([' ', '\t']).len();
            if rest[trailing..].starts_with("\r\n") {
                end += trailing + 2;
            } else if rest[trailing..].starts_with('\n') {
                end += trailing + 1;
            }
        }
        cuts.push(start..end);
    }
    let mut out = String::with_capacity(text.len());
    let mut at = 0;
    for cut in cuts {
        out.push_str(&text[at..cut.start]);
        at = cut.end;
    }
    out.push_str(&text[at..]);
    Ok(out)
}
