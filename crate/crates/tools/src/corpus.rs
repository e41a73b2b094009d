//! Finding and loading passage files, and corpus statistics.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;
use ucca_core::Terminal;

use crate::xml::{read_document, read_tokens, Document, ReadOptions, Tokens, XmlError};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    Xml {
        path: PathBuf,
        #[source]
        source: XmlError,
    },
}

impl LoadError {
    pub fn path(&self) -> &Path {
        match self {
            LoadError::Io { path, .. } | LoadError::Xml { path, .. } => path,
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> LoadError + '_ {
    move |source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Files under `paths` with one of `extensions`. A directory contributes
/// its matching entries (not recursively) in name order; a file is taken
/// as is.
pub fn list_files(paths: &[PathBuf], extensions: &[&str]) -> Result<Vec<PathBuf>, LoadError> {
    let mut out = Vec::new();
    for path in paths {
        let meta = fs::metadata(path).map_err(io_error(path))?;
        if !meta.is_dir() {
            out.push(path.clone());
            continue;
        }
        let mut found = Vec::new();
        for entry in fs::read_dir(path).map_err(io_error(path))? {
            let p = entry.map_err(io_error(path))?.path();
            let wanted = p
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| extensions.contains(&e));
            if wanted && p.is_file() {
                found.push(p);
            }
        }
        found.sort();
        out.extend(found);
    }
    Ok(out)
}

/// File name without its extension, used to pair predictions with gold files.
pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn read_text(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(io_error(path))
}

pub fn load_document(path: &Path, opts: ReadOptions) -> Result<Document, LoadError> {
    read_document(&read_text(path)?, opts).map_err(|source| LoadError::Xml {
        path: path.to_path_buf(),
        source,
    })
}

/// Tokens of an XML file (annotated or stripped) or of a plain text file
/// holding whitespace-separated tokens.
pub fn load_tokens(path: &Path) -> Result<Tokens, LoadError> {
    let text = read_text(path)?;
    if path.extension().is_some_and(|e| e == "txt") {
        return Ok(Tokens {
            passage_id: stem(path),
            terminals: tokenized(&text),
            extras: Default::default(),
        });
    }
    read_tokens(&text).map_err(|source| LoadError::Xml {
        path: path.to_path_buf(),
        source,
    })
}

/// Whitespace-separated tokens; tokens without letters or digits are
/// punctuation.
pub fn tokenized(text: &str) -> Vec<Terminal> {
    text.split_whitespace()
        .enumerate()
        .map(|(i, t)| Terminal::new(i as u32 + 1, t, !t.chars().any(char::is_alphanumeric)))
        .collect()
}

/// Maps `f` over `items` on `jobs` threads (0 picks the number of cores),
/// keeping the input order.
pub fn par_map<T, R, F>(jobs: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if jobs == 1 || items.len() < 2 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub passages: usize,
    /// One per passage: corpora are distributed split into sentences.
    pub sentences: usize,
    pub tokens: usize,
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        self.passages += o.passages;
        self.sentences += o.sentences;
        self.tokens += o.tokens;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub splits: Vec<(String, Counts)>,
    pub total: Counts,
}

/// Counts per directory; each argument is one split.
pub fn corpus_stats(splits: &[PathBuf], jobs: usize) -> Result<CorpusStats, LoadError> {
    let mut stats = CorpusStats::default();
    for split in splits {
        let files = list_files(std::slice::from_ref(split), &["xml"])?;
        let loaded = par_map(jobs, &files, |f| load_tokens(f));
        let mut counts = Counts::default();
        for tokens in loaded {
            let tokens = tokens?;
            counts += Counts {
                passages: 1,
                sentences: 1,
                tokens: tokens.terminals.len(),
            };
        }
        stats.total += counts;
        stats.splits.push((split.display().to_string(), counts));
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizing_marks_punctuation() {
        let t = tokenized(" Hi ,  there -- ok!\n");
        let flags: Vec<bool> = t.iter().map(|t| t.punct).collect();
        assert_eq!(flags, [false, true, false, true, false]);
        assert_eq!(t[4].position, 5);
    }

    #[test]
    fn directories_list_in_name_order() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["b.xml", "a.xml", "c.txt"] {
            fs::write(dir.path().join(name), "").unwrap();
        }
        let files = list_files(&[dir.path().to_path_buf()], &["xml"]).unwrap();
        let names: Vec<String> = files.iter().map(|p| stem(p)).collect();
        assert_eq!(names, ["a", "b"]);
    }

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u32> = (0..100).collect();
        assert_eq!(par_map(4, &items, |x| x * 2), par_map(1, &items, |x| x * 2));
    }
}
