//! Evaluation reports: a text table, a `key=value` block and JSON.
//!
//! Text output shows percentages with one decimal and `--` for an undefined
//! precision or recall. JSON carries the unrounded percentages, with `null`
//! for undefined values.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};
use ucca_core::evaluate::CategorySet;
use ucca_core::{EvalReport, ScoreTriple};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReportOptions {
    pub per_category: bool,
}

fn percent(x: Option<f64>) -> Option<f64> {
    x.map(|v| v * 100.0)
}

/// One decimal, or `--` when undefined.
pub fn cell(x: Option<f64>) -> String {
    match percent(x) {
        Some(v) => format!("{v:.1}"),
        None => "--".to_string(),
    }
}

fn rows(report: &EvalReport, opts: ReportOptions) -> Vec<(String, ScoreTriple)> {
    let mut out = vec![
        ("primary".to_string(), report.primary),
        ("remote".to_string(), report.remote),
    ];
    for (set, t) in &report.category_sets {
        out.push((set.name().to_string(), *t));
    }
    if let Some(t) = report.implicit {
        out.push(("implicit".to_string(), t));
    }
    if opts.per_category {
        for (c, t) in &report.per_category {
            out.push((format!("category.{c}"), *t));
        }
    }
    out
}

fn triple_line(out: &mut String, name: &str, t: &ScoreTriple) {
    let _ = writeln!(
        out,
        "{name:<12}{:>7}{:>7}{:>7}{:>9}{:>11}{:>7}",
        cell(t.precision()),
        cell(t.recall()),
        format!("{:.1}", t.f1() * 100.0),
        t.matched,
        t.predicted,
        t.gold
    );
}

pub fn render_text(report: &EvalReport, passages: usize, opts: ReportOptions) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "passages: {passages}");
    out.push('\n');
    let _ = writeln!(out, "{:<21}Remote", "Primary");
    let _ = writeln!(out, "{:>6} {:>6} {:>6}  {:>6} {:>6} {:>6}", "LP", "LR", "LF", "LP", "LR", "LF");
    let (p, r) = (&report.primary, &report.remote);
    let _ = writeln!(
        out,
        "{:>6} {:>6} {:>6}  {:>6} {:>6} {:>6}",
        cell(p.precision()),
        cell(p.recall()),
        format!("{:.1}", p.f1() * 100.0),
        cell(r.precision()),
        cell(r.recall()),
        format!("{:.1}", r.f1() * 100.0),
    );
    out.push('\n');
    let _ = writeln!(
        out,
        "{:<12}{:>7}{:>7}{:>7}{:>9}{:>11}{:>7}",
        "", "LP", "LR", "LF", "matched", "predicted", "gold"
    );
    for set in CategorySet::ALL {
        if let Some(t) = report.category_sets.get(&set) {
            triple_line(&mut out, set.name(), t);
        }
    }
    if let Some(t) = &report.implicit {
        triple_line(&mut out, "implicit", t);
    }
    if opts.per_category {
        out.push('\n');
        for (c, t) in &report.per_category {
            triple_line(&mut out, c.as_str(), t);
        }
    }
    out.push('\n');
    out.push_str(&render_key_values(report, passages, opts));
    out
}

/// The machine-readable block: `name.field=value`, one per line.
pub fn render_key_values(report: &EvalReport, passages: usize, opts: ReportOptions) -> String {
    let mut out = format!("passages={passages}\n");
    for (name, t) in rows(report, opts) {
        let _ = writeln!(out, "{name}.matched={}", t.matched);
        let _ = writeln!(out, "{name}.predicted={}", t.predicted);
        let _ = writeln!(out, "{name}.gold={}", t.gold);
        let _ = writeln!(out, "{name}.lp={}", cell(t.precision()));
        let _ = writeln!(out, "{name}.lr={}", cell(t.recall()));
        let _ = writeln!(out, "{name}.lf={:.1}", t.f1() * 100.0);
    }
    out
}

pub fn triple_json(t: &ScoreTriple) -> Value {
    json!({
        "matched": t.matched,
        "predicted": t.predicted,
        "gold": t.gold,
        "lp": percent(t.precision()),
        "lr": percent(t.recall()),
        "lf": t.f1() * 100.0,
    })
}

pub fn render_json(report: &EvalReport, passages: usize, opts: ReportOptions) -> Value {
    let sets: Map<String, Value> = report
        .category_sets
        .iter()
        .map(|(s, t)| (s.name().to_string(), triple_json(t)))
        .collect();
    let mut root = json!({
        "passages": passages,
        "primary": triple_json(&report.primary),
        "remote": triple_json(&report.remote),
        "category_sets": sets,
    });
    if let Some(t) = &report.implicit {
        root["implicit"] = triple_json(t);
    }
    if opts.per_category {
        let per: Map<String, Value> = report
            .per_category
            .iter()
            .map(|(c, t)| (c.to_string(), triple_json(t)))
            .collect();
        root["per_category"] = Value::Object(per);
    }
    root
}

#[cfg(test)]
mod tests {
    use super::*;
    use ucca_core::evaluate::score_pair;
    use ucca_core::samples::figure1;
    use ucca_core::{Category, EvalOptions, Passage};

    fn without_remote(p: &Passage) -> Passage {
        let (id, t, u, mut e) = p.clone().into_parts();
        e.retain(|e| !e.remote);
        Passage::build(id, t, u, e).unwrap()
    }

    #[test]
    fn undefined_precision_prints_dashes() {
        let g = figure1().passage;
        let r = score_pair(&without_remote(&g), &g, &EvalOptions::default()).unwrap();
        let kv = render_key_values(&r, 1, ReportOptions::default());
        assert!(kv.contains("remote.lp=--\nremote.lr=0.0\nremote.lf=0.0\n"), "{kv}");
        assert!(kv.contains("primary.lf=100.0\n"));
        let j = render_json(&r, 1, ReportOptions::default());
        assert_eq!(j["remote"]["lp"], Value::Null);
        assert_eq!(j["remote"]["lf"], json!(0.0));
    }

    #[test]
    fn text_and_json_agree() {
        let g = figure1().passage;
        let f = figure1();
        let (id, t, u, mut e) = g.clone().into_parts();
        for x in &mut e {
            if x.child == f.moved_scene && x.category == Category::H {
                x.category = Category::L;
            }
        }
        let pred = Passage::build(id, t, u, e).unwrap();
        let r = score_pair(&pred, &g, &EvalOptions::default()).unwrap();
        let opts = ReportOptions { per_category: true };
        let j = render_json(&r, 1, opts);
        let kv = render_key_values(&r, 1, opts);
        for line in kv.lines().skip(1) {
            let (key, value) = line.split_once('=').unwrap();
            let (name, field) = key.rsplit_once('.').unwrap();
            let node = match name.split_once('.') {
                Some(("category", c)) => &j["per_category"][c],
                _ if j.get(name).is_some() => &j[name],
                _ => &j["category_sets"][name],
            };
            let expected = match &node[field] {
                Value::Null => "--".to_string(),
                Value::Number(n) if field.starts_with('l') => format!("{:.1}", n.as_f64().unwrap()),
                v => v.to_string(),
            };
            assert_eq!(value, expected, "{key}");
        }
        let lf = j["category_sets"]["linkage"]["lf"].as_f64().unwrap();
        assert!((lf - 200.0 / 3.0).abs() < 1e-9);
        assert!(render_text(&r, 1, opts).contains("linkage.lf=66.7\n"));
    }
}
