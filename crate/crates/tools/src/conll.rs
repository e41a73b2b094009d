//! Tab-separated token tables for bilexical graphs.
//!
//! ```text
//! # passage_id = figure1
//! # punct = 3
//! 1  After       2  L  _
//! 4  John        5  A  2:A
//! ```
//!
//! Columns, separated by single tabs, are ID, FORM, HEAD, DEPREL and REMOTE. The root has HEAD 0 and
//! carries the root category as its DEPREL. A token attached by several
//! categories lists them joined with `|`. REMOTE is `_` or a comma-separated
//! list of `head:category` entries. Passages are separated by blank lines.

use std::fmt::Write as _;

use thiserror::Error;
use ucca_core::convert::{Arc, BilexicalGraph};
use ucca_core::{Category, Terminal};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct TsvError {
    pub line: usize,
    pub message: String,
}

fn labels(arcs: &[&Arc]) -> String {
    arcs.iter()
        .map(|a| a.category.as_str())
        .collect::<Vec<_>>()
        .join("|")
}

pub fn write_graph(out: &mut String, b: &BilexicalGraph) {
    let _ = writeln!(out, "# passage_id = {}", b.passage_id);
    let punct: Vec<String> = b
        .tokens
        .iter()
        .filter(|t| t.punct)
        .map(|t| t.position.to_string())
        .collect();
    if !punct.is_empty() {
        let _ = writeln!(out, "# punct = {}", punct.join(" "));
    }
    for t in &b.tokens {
        let primary: Vec<&Arc> = b.heads_of(t.position).collect();
        let (head, deprel) = if t.position == b.root {
            (0, b.root_category.as_str().to_string())
        } else if let Some(first) = primary.first() {
            (first.head, labels(&primary))
        } else {
            (0, "_".to_string())
        };
        let remote: Vec<String> = b
            .arcs
            .iter()
            .filter(|a| a.remote && a.dependent == t.position)
            .map(|a| format!("{}:{}", a.head, a.category))
            .collect();
        let remote = if remote.is_empty() {
            "_".to_string()
        } else {
            remote.join(",")
        };
        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", t.position, t.text, head, deprel, remote);
    }
    out.push('\n');
}

pub fn write_graphs<'a>(graphs: impl IntoIterator<Item = &'a BilexicalGraph>) -> String {
    let mut out = String::new();
    for b in graphs {
        write_graph(&mut out, b);
    }
    out
}

fn category(line: usize, raw: &str) -> Result<Category, TsvError> {
    raw.parse().map_err(|e| TsvError {
        line,
        message: format!("{e}"),
    })
}

fn number(line: usize, raw: &str, what: &str) -> Result<u32, TsvError> {
    raw.parse().map_err(|_| TsvError {
        line,
        message: format!("{what} `{raw}` is not a number"),
    })
}

#[derive(Default)]
struct Pending {
    id: Option<String>,
    punct: Vec<u32>,
    tokens: Vec<Terminal>,
    arcs: Vec<Arc>,
    root: Option<(u32, Category)>,
    start: usize,
}

impl Pending {
    fn finish(self, fallback_id: &str) -> Result<BilexicalGraph, TsvError> {
        let err = |message: String| TsvError {
            line: self.start,
            message,
        };
        for p in &self.punct {
            if *p == 0 || *p as usize > self.tokens.len() {
                return Err(err(format!("punctuation position {p} is out of range")));
            }
        }
        let (root, root_category) = self
            .root
            .ok_or_else(|| err("no root: no token has HEAD 0 and a label".to_string()))?;
        let mut tokens = self.tokens;
        for t in &mut tokens {
            t.punct = self.punct.contains(&t.position);
        }
        let mut arcs = self.arcs;
        arcs.sort();
        arcs.dedup();
        Ok(BilexicalGraph {
            passage_id: self.id.unwrap_or_else(|| fallback_id.to_string()),
            tokens,
            root,
            root_category,
            arcs,
        })
    }
}

/// Reads every passage in a token table. Passages without a
/// `# passage_id` line are named `fallback_id`, then `fallback_id-2`, ...
pub fn read_graphs(text: &str, fallback_id: &str) -> Result<Vec<BilexicalGraph>, TsvError> {
    let mut out = Vec::new();
    let mut cur: Option<Pending> = None;
    let flush = |cur: &mut Option<Pending>, out: &mut Vec<BilexicalGraph>| -> Result<(), TsvError> {
        if let Some(p) = cur.take() {
            let id = if out.is_empty() {
                fallback_id.to_string()
            } else {
                format!("{fallback_id}-{}", out.len() + 1)
            };
            out.push(p.finish(&id)?);
        }
        Ok(())
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            flush(&mut cur, &mut out)?;
            continue;
        }
        let p = cur.get_or_insert_with(|| Pending {
            start: line,
            ..Pending::default()
        });
        if let Some(comment) = raw.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "passage_id" => p.id = Some(value.trim().to_string()),
                    "punct" => {
                        for v in value.split_whitespace() {
                            p.punct.push(number(line, v, "punctuation position")?);
                        }
                    }
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 5 {
            return Err(TsvError {
                line,
                message: format!("expected 5 tab-separated columns, found {}", cols.len()),
            });
        }
        let id = number(line, cols[0], "ID")?;
        if id as usize != p.tokens.len() + 1 {
            return Err(TsvError {
                line,
                message: format!("expected token {}, found {id}", p.tokens.len() + 1),
            });
        }
        if cols[1].is_empty() {
            return Err(TsvError {
                line,
                message: "empty FORM".to_string(),
            });
        }
        p.tokens.push(Terminal::new(id, cols[1], false));
        let head = number(line, cols[2], "HEAD")?;
        if head == 0 {
            if cols[3] != "_" {
                if let Some((r, _)) = p.root {
                    return Err(TsvError {
                        line,
                        message: format!("second root; token {r} is already the root"),
                    });
                }
                p.root = Some((id, category(line, cols[3])?));
            }
        } else {
            for label in cols[3].split('|') {
                p.arcs.push(Arc {
                    head,
                    dependent: id,
                    category: category(line, label)?,
                    remote: false,
                });
            }
        }
        if cols[4] != "_" {
            for entry in cols[4].split(',') {
                let (h, label) = entry.split_once(':').ok_or_else(|| TsvError {
                    line,
                    message: format!("remote entry `{entry}` is not head:category"),
                })?;
                p.arcs.push(Arc {
                    head: number(line, h, "remote head")?,
                    dependent: id,
                    category: category(line, label)?,
                    remote: true,
                });
            }
        }
    }
    flush(&mut cur, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ucca_core::convert::{from_bilexical, to_bilexical, HeadRules};
    use ucca_core::samples::{figure1, figure2};
    use ucca_core::validate::same_graph;

    #[test]
    fn figure1_tree_table() {
        let b = to_bilexical(&figure1().passage, &HeadRules::default(), true);
        let text = write_graphs([&b]);
        assert!(text.starts_with("# passage_id = figure1\n# punct = 3\n"));
        // "Paris" heads "to Paris", so "to" hangs off token 7 as R
        assert!(text.contains("6\tto\t7\tR\t_\n"), "{text}");
        assert_eq!(read_graphs(&text, "x").unwrap(), vec![b]);
    }

    #[test]
    fn dag_tables_keep_remote_arcs() {
        let rules = HeadRules::default();
        for g in [figure1().passage, figure2().passage] {
            let b = to_bilexical(&g, &rules, false);
            let back = read_graphs(&write_graphs([&b]), "x").unwrap();
            assert_eq!(back, vec![b.clone()]);
            let rebuilt = from_bilexical(&back[0], &rules).unwrap().passage;
            let direct = from_bilexical(&b, &rules).unwrap().passage;
            assert!(same_graph(&rebuilt, &direct));
        }
        let text = write_graphs([&to_bilexical(&figure1().passage, &rules, false)]);
        assert_eq!(text.matches(":A").count(), 1, "{text}");
    }

    #[test]
    fn several_passages_and_missing_ids() {
        let text = "1\ta\t0\tH\t_\n\n1\tb\t2\tA\t_\n2\tc\t0\tP\t_\n";
        let gs = read_graphs(text, "f").unwrap();
        assert_eq!(gs.len(), 2);
        assert_eq!(gs[0].passage_id, "f");
        assert_eq!(gs[1].passage_id, "f-2");
        assert_eq!(gs[1].root, 2);
    }

    #[test]
    fn malformed_rows_name_their_line() {
        let err = read_graphs("1\ta\t0\tH\t_\n2\tb\tx\tA\t_\n", "f").unwrap_err();
        assert_eq!(err.line, 2);
        let err = read_graphs("1\ta\t0\tH\n", "f").unwrap_err();
        assert_eq!(err.line, 1);
        let err = read_graphs("1\ta\t0\tQQ\t_\n", "f").unwrap_err();
        assert!(err.message.contains("QQ"));
        let err = read_graphs("1\ta\t2\tA\t_\n2\tb\t1\tA\t_\n", "f").unwrap_err();
        assert!(err.message.contains("root"));
    }
}
