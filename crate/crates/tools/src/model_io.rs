//! Plain-text model files.
//!
//! ```text
//! ucca-sparse-model 1
//! templates 5f0c2d4e8a9b1c3d
//! labels A C H P
//! features 2
//! 00ab34cd00ab34cd 0 1 -1 ...
//! ```
//!
//! The `templates` line is the feature registry hash; a file written with a
//! different feature set is refused. Weights use the shortest decimal form
//! that reads back to the same `f64`, so files are byte-stable.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;
use ucca_core::parser::{registry_hash, ModelError, SparseModel};
use ucca_core::Category;

const MAGIC: &str = "ucca-sparse-model";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelFileError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unsupported model file version {0}")]
    Version(u32),
    #[error("model was trained with feature templates {found:016x}, this build uses {expected:016x}")]
    TemplateMismatch { found: u64, expected: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub fn write_model(model: &SparseModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "templates {:016x}", registry_hash());
    let labels: Vec<&str> = model.labels().iter().map(Category::as_str).collect();
    let _ = writeln!(out, "labels {}", labels.join(" "));
    let _ = writeln!(out, "features {}", model.weights().len());
    for (f, w) in model.weights() {
        let _ = write!(out, "{f:016x}");
        for x in w {
            let _ = write!(out, " {x}");
        }
        out.push('\n');
    }
    out
}

fn syntax(line: usize, message: impl Into<String>) -> ModelFileError {
    ModelFileError::Syntax {
        line,
        message: message.into(),
    }
}

fn keyed<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    key: &str,
) -> Result<(usize, &'a str), ModelFileError> {
    let (n, line) = lines
        .next()
        .ok_or_else(|| syntax(0, format!("file ends before the `{key}` line")))?;
    match line.split_once(' ') {
        Some((k, rest)) if k == key => Ok((n, rest)),
        _ if line == key => Ok((n, "")),
        _ => Err(syntax(n, format!("expected `{key} ...`"))),
    }
}

pub fn read_model(text: &str) -> Result<SparseModel, ModelFileError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (n, version) = keyed(&mut lines, MAGIC)?;
    let version: u32 = version
        .parse()
        .map_err(|_| syntax(n, "malformed version"))?;
    if version != VERSION {
        return Err(ModelFileError::Version(version));
    }
    let (n, hash) = keyed(&mut lines, "templates")?;
    let found = u64::from_str_radix(hash, 16).map_err(|_| syntax(n, "malformed template hash"))?;
    if found != registry_hash() {
        return Err(ModelFileError::TemplateMismatch {
            found,
            expected: registry_hash(),
        });
    }
    let (_, labels) = keyed(&mut lines, "labels")?;
    let labels: Vec<Category> = labels.split_whitespace().map(Category::parse_extended).collect();
    let (n, count) = keyed(&mut lines, "features")?;
    let count: usize = count.parse().map_err(|_| syntax(n, "malformed feature count"))?;
    let mut weights = BTreeMap::new();
    for (n, line) in lines.by_ref().take(count) {
        let mut fields = line.split(' ');
        let f = fields
            .next()
            .and_then(|f| u64::from_str_radix(f, 16).ok())
            .ok_or_else(|| syntax(n, "malformed feature id"))?;
        let w = fields
            .map(|x| x.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| syntax(n, "malformed weight"))?;
        if weights.insert(f, w).is_some() {
            return Err(syntax(n, format!("feature {f:016x} listed twice")));
        }
    }
    if weights.len() != count {
        return Err(syntax(0, format!("expected {count} features, found {}", weights.len())));
    }
    if let Some((n, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(syntax(n, "unexpected content after the last feature"));
    }
    Ok(SparseModel::from_parts(labels, weights)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ucca_core::parser::train;
    use ucca_core::samples::{figure1, figure2};

    #[test]
    fn write_then_read_is_identity() {
        let gold = [figure1().passage, figure2().passage];
        let (model, _) = train(&gold, 5, 3).unwrap();
        let text = write_model(&model);
        let back = read_model(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(write_model(&back), text);
    }

    #[test]
    fn uniform_model_has_no_feature_lines() {
        let text = write_model(&SparseModel::uniform(vec![Category::A, Category::H]));
        assert!(text.ends_with("labels A H\nfeatures 0\n"), "{text}");
        assert_eq!(read_model(&text).unwrap().labels(), &[Category::A, Category::H]);
    }

    #[test]
    fn other_templates_are_refused() {
        let text = write_model(&SparseModel::uniform(vec![Category::A]));
        let forged = text.replace(&format!("{:016x}", registry_hash()), "0000000000000001");
        assert!(matches!(
            read_model(&forged),
            Err(ModelFileError::TemplateMismatch { found: 1, .. })
        ));
    }

    #[test]
    fn damaged_files_are_refused() {
        let text = write_model(&SparseModel::uniform(vec![Category::A]));
        assert!(matches!(read_model(""), Err(ModelFileError::Syntax { .. })));
        assert!(matches!(
            read_model(&text.replace("model 1", "model 9")),
            Err(ModelFileError::Version(9))
        ));
        assert!(matches!(
            read_model(&text.replace("features 0", "features 1")),
            Err(ModelFileError::Syntax { .. })
        ));
        let short = format!("{text}0000000000000001 1 2\n").replace("features 0", "features 1");
        assert!(matches!(
            read_model(&short),
            Err(ModelFileError::Model(ModelError::WeightCount { .. }))
        ));
    }
}
