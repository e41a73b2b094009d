//! The `ucca` command line.
//!
//! Exit codes: 0 on success, 1 when validation finds errors or a command
//! fails, 2 when evaluation inputs do not line up (missing, unreadable or
//! unannotated predictions, token mismatches), 64 on usage errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ucca_core::convert::{from_bilexical, roundtrip, to_bilexical, to_constituency, Conversion, HeadRules};
use ucca_core::evaluate::{aggregate_pairs, score_pair};
use ucca_core::parser::{parse, train, SparseModel};
use ucca_core::validate::{validate, violation_for_error, Rule, Severity};
use ucca_core::{EvalOptions, EvalReport, Passage, Violation};

use crate::conll::{read_graphs, write_graphs};
use crate::corpus::{self, list_files, load_document, load_tokens, par_map, stem, LoadError};
use crate::model_io::{read_model, write_model};
use crate::report::{render_json, render_text, ReportOptions};
use crate::xml::{write_document, write_passage, ReadOptions, XmlError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_MISMATCH: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "ucca", version, about = "UCCA passages: validate, score, convert, parse")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct Jobs {
    /// Worker threads; 0 uses every core
    #[arg(short, long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score predicted passages against gold passages
    Evaluate {
        pred: PathBuf,
        gold: PathBuf,
        /// Leave punctuation (U) edges out of the scores
        #[arg(long)]
        no_punct: bool,
        /// Also score implicit units
        #[arg(long)]
        implicit: bool,
        /// Add one row per category
        #[arg(long)]
        per_category: bool,
        #[arg(long)]
        json: bool,
        /// Pair files by passage id instead of file name
        #[arg(long)]
        by_id: bool,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Check passages against the annotation rules
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Count passages, sentences and tokens; each directory is one split
    Stats {
        #[arg(required = true)]
        splits: Vec<PathBuf>,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Convert passages to an approximation, or score the roundtrip
    Convert {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long, value_enum)]
        format: Format,
        /// Print the roundtrip score instead of writing files
        #[arg(long)]
        upper_bound: bool,
        /// Read bilexical tables and write passages back
        #[arg(long, conflicts_with = "upper_bound")]
        inverse: bool,
        #[arg(long, required_unless_present = "upper_bound")]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        per_category: bool,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Train a sparse transition classifier on gold passages
    Train {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Parse tokenized text or stripped passages
    Parse {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Model file; without one every transition scores zero
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        jobs: Jobs,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Constituency,
    BilexicalTree,
    BilexicalDag,
}

impl From<Format> for Conversion {
    fn from(f: Format) -> Self {
        match f {
            Format::Constituency => Conversion::Constituency,
            Format::BilexicalTree => Conversion::BilexicalTree,
            Format::BilexicalDag => Conversion::BilexicalDag,
        }
    }
}

/// A command's outcome: exit code plus what goes to stdout and stderr.
struct Outcome {
    code: i32,
    out: String,
    err: String,
}

impl Outcome {
    fn ok(out: String) -> Self {
        Outcome {
            code: EXIT_OK,
            out,
            err: String::new(),
        }
    }

    fn fail(code: i32, err: impl std::fmt::Display) -> Self {
        Outcome {
            code,
            out: String::new(),
            err: format!("error: {err}\n"),
        }
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                EXIT_USAGE
            } else {
                let _ = stdout.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    let outcome = dispatch(cli.command);
    let _ = stdout.write_all(outcome.out.as_bytes());
    let _ = stderr.write_all(outcome.err.as_bytes());
    outcome.code
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Evaluate {
            pred,
            gold,
            no_punct,
            implicit,
            per_category,
            json,
            by_id,
            jobs,
        } => {
            let opts = EvalOptions {
                include_punctuation: !no_punct,
                implicit_extension: implicit,
            };
            evaluate(&pred, &gold, opts, ReportOptions { per_category }, json, by_id, jobs.jobs)
        }
        Command::Validate { paths, jobs } => validate_files(&paths, jobs.jobs),
        Command::Stats { splits, json, jobs } => stats(&splits, json, jobs.jobs),
        Command::Convert {
            paths,
            format,
            upper_bound,
            inverse,
            out,
            json,
            per_category,
            jobs,
        } => {
            if upper_bound {
                convert_upper_bound(&paths, format.into(), json, ReportOptions { per_category }, jobs.jobs)
            } else {
                let out = out.expect("clap requires --out without --upper-bound");
                if inverse {
                    convert_inverse(&paths, format, &out)
                } else {
                    convert_files(&paths, format, &out, jobs.jobs)
                }
            }
        }
        Command::Train {
            paths,
            model,
            epochs,
            seed,
        } => train_model(&paths, &model, epochs, seed),
        Command::Parse {
            paths,
            model,
            out,
            jobs,
        } => parse_files(&paths, model.as_deref(), &out, jobs.jobs),
    }
}

fn load_passages(paths: &[PathBuf], jobs: usize) -> Result<Vec<(PathBuf, Passage)>, LoadError> {
    let files = list_files(paths, &["xml"])?;
    par_map(jobs, &files, |f| {
        load_document(f, ReadOptions::default()).map(|d| (f.clone(), d.passage))
    })
    .into_iter()
    .collect()
}

fn describe_prediction_error(e: &LoadError) -> String {
    match e {
        LoadError::Xml { source, .. } if source.is_unannotated() => {
            format!("{}: prediction has no foundational layer (unannotated input)", e.path().display())
        }
        _ => format!("prediction {e}"),
    }
}

fn evaluate(
    pred_path: &Path,
    gold_path: &Path,
    opts: EvalOptions,
    report_opts: ReportOptions,
    json: bool,
    by_id: bool,
    jobs: usize,
) -> Outcome {
    let list = |p: &Path| list_files(&[p.to_path_buf()], &["xml"]);
    let (pred_files, gold_files) = match (list(pred_path), list(gold_path)) {
        (Ok(p), Ok(g)) => (p, g),
        (Err(e), _) | (_, Err(e)) => return Outcome::fail(EXIT_MISMATCH, e),
    };
    let load = |files: &[PathBuf]| par_map(jobs, files, |f| load_document(f, ReadOptions::default()));
    let mut gold = BTreeMap::new();
    for (f, d) in gold_files.iter().zip(load(&gold_files)) {
        let d = match d {
            Ok(d) => d,
            Err(e) => return Outcome::fail(EXIT_MISMATCH, format!("gold {e}")),
        };
        let key = if by_id { d.passage.id().to_string() } else { stem(f) };
        if gold.insert(key.clone(), d.passage).is_some() {
            return Outcome::fail(EXIT_MISMATCH, format!("passage {key} appears twice in the gold files"));
        }
    }
    let mut pred = BTreeMap::new();
    for (f, d) in pred_files.iter().zip(load(&pred_files)) {
        let d = match d {
            Ok(d) => d,
            Err(e) => return Outcome::fail(EXIT_MISMATCH, describe_prediction_error(&e)),
        };
        let key = if by_id { d.passage.id().to_string() } else { stem(f) };
        if pred.insert(key.clone(), d.passage).is_some() {
            return Outcome::fail(EXIT_MISMATCH, format!("passage {key} appears twice in the predictions"));
        }
    }
    if let Some(k) = gold.keys().find(|k| !pred.contains_key(*k)) {
        return Outcome::fail(EXIT_MISMATCH, format!("no prediction for passage {k}"));
    }
    if let Some(k) = pred.keys().find(|k| !gold.contains_key(*k)) {
        return Outcome::fail(EXIT_MISMATCH, format!("prediction {k} has no gold passage"));
    }
    let pairs: Vec<(&String, &Passage, &Passage)> =
        gold.iter().map(|(k, g)| (k, &pred[k], g)).collect();
    let scored = par_map(jobs, &pairs, |(k, p, g)| {
        score_pair(p, g, &opts).map_err(|e| format!("passage {k}: {e}"))
    });
    let mut total: EvalReport =
        aggregate_pairs(std::iter::empty(), &opts).expect("nothing to compare");
    for r in scored {
        match r {
            Ok(r) => total.merge(&r),
            Err(e) => return Outcome::fail(EXIT_MISMATCH, e),
        }
    }
    Outcome::ok(render_report(&total, pairs.len(), report_opts, json))
}

fn render_report(report: &EvalReport, passages: usize, opts: ReportOptions, json: bool) -> String {
    if json {
        let mut s = serde_json::to_string_pretty(&render_json(report, passages, opts))
            .expect("reports serialize");
        s.push('\n');
        s
    } else {
        render_text(report, passages, opts)
    }
}

fn validate_files(paths: &[PathBuf], jobs: usize) -> Outcome {
    let files = match list_files(paths, &["xml"]) {
        Ok(f) => f,
        Err(e) => return Outcome::fail(EXIT_FAILURE, e),
    };
    let results = par_map(jobs, &files, |f| -> Vec<Violation> {
        match load_document(f, ReadOptions::default()) {
            Ok(d) => validate(&d.passage),
            Err(LoadError::Xml {
                source: XmlError::Model { source, line },
                ..
            }) => {
                let mut v = violation_for_error(&source);
                v.message = format!("line {line}: {}", v.message);
                vec![v]
            }
            Err(e) => vec![Violation {
                rule: Rule::MalformedGraph,
                severity: Severity::Error,
                unit: None,
                message: match e {
                    LoadError::Xml { source, .. } => source.to_string(),
                    LoadError::Io { source, .. } => source.to_string(),
                },
            }],
        }
    });
    let mut listing: Vec<(String, Violation)> = files
        .iter()
        .zip(results)
        .flat_map(|(f, vs)| vs.into_iter().map(move |v| (f.display().to_string(), v)))
        .collect();
    listing.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.rule_id().cmp(b.1.rule_id())));
    let mut out = String::new();
    for (f, v) in &listing {
        let _ = writeln!(out, "{f}: {v}");
    }
    let errors = listing.iter().filter(|(_, v)| v.severity == Severity::Error).count();
    let warnings = listing.len() - errors;
    let _ = writeln!(out, "{} passages, {errors} errors, {warnings} warnings", files.len());
    Outcome {
        code: if errors > 0 { EXIT_FAILURE } else { EXIT_OK },
        out,
        err: String::new(),
    }
}

fn stats(splits: &[PathBuf], json: bool, jobs: usize) -> Outcome {
    let s = match corpus::corpus_stats(splits, jobs) {
        Ok(s) => s,
        Err(e) => return Outcome::fail(EXIT_FAILURE, e),
    };
    if json {
        let counts = |c: &corpus::Counts| {
            serde_json::json!({"passages": c.passages, "sentences": c.sentences, "tokens": c.tokens})
        };
        let splits: Vec<_> = s
            .splits
            .iter()
            .map(|(name, c)| {
                let mut v = counts(c);
                v["split"] = name.clone().into();
                v
            })
            .collect();
        let v = serde_json::json!({"splits": splits, "total": counts(&s.total)});
        return Outcome::ok(format!("{}\n", serde_json::to_string_pretty(&v).expect("json")));
    }
    let width = s.splits.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(5);
    let mut out = format!("{:<width$}  {:>9}  {:>9}  {:>9}\n", "split", "passages", "sentences", "tokens");
    for (name, c) in s.splits.iter().map(|(n, c)| (n.as_str(), c)).chain([("total", &s.total)]) {
        let _ = writeln!(
            out,
            "{name:<width$}  {:>9}  {:>9}  {:>9}",
            c.passages, c.sentences, c.tokens
        );
    }
    Outcome::ok(out)
}

fn convert_upper_bound(
    paths: &[PathBuf],
    conversion: Conversion,
    json: bool,
    opts: ReportOptions,
    jobs: usize,
) -> Outcome {
    let gold = match load_passages(paths, jobs) {
        Ok(g) => g,
        Err(e) => return Outcome::fail(EXIT_FAILURE, e),
    };
    let rules = HeadRules::default();
    let converted = par_map(jobs, &gold, |(f, g)| {
        roundtrip(g, conversion, &rules).map_err(|e| format!("{}: {e}", f.display()))
    });
    let mut back = Vec::with_capacity(gold.len());
    for c in converted {
        match c {
            Ok(p) => back.push(p),
            Err(e) => return Outcome::fail(EXIT_FAILURE, e),
        }
    }
    let eval = EvalOptions::default();
    let reports = par_map(jobs, &back.iter().zip(&gold).collect::<Vec<_>>(), |(p, (_, g))| {
        score_pair(p, g, &eval)
    });
    let mut total = aggregate_pairs(std::iter::empty(), &eval).expect("nothing to compare");
    for r in reports {
        total.merge(&r.expect("a roundtrip keeps the tokens"));
    }
    Outcome::ok(render_report(&total, gold.len(), opts, json))
}

fn write_out(dir: &Path, name: &str, text: &str) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn convert_files(paths: &[PathBuf], format: Format, out: &Path, jobs: usize) -> Outcome {
    let gold = match load_passages(paths, jobs) {
        Ok(g) => g,
        Err(e) => return Outcome::fail(EXIT_FAILURE, e),
    };
    let rules = HeadRules::default();
    for (f, g) in &gold {
        let (name, text) = match format {
            Format::Constituency => (format!("{}.xml", stem(f)), write_passage(&to_constituency(g))),
            Format::BilexicalTree | Format::BilexicalDag => {
                let b = to_bilexical(g, &rules, format == Format::BilexicalTree);
                (format!("{}.tsv", stem(f)), write_graphs([&b]))
            }
        };
        if let Err(e) = write_out(out, &name, &text) {
            return Outcome::fail(EXIT_FAILURE, e);
        }
    }
    Outcome::ok(format!("converted {} passages into {}\n", gold.len(), out.display()))
}

fn convert_inverse(paths: &[PathBuf], format: Format, out: &Path) -> Outcome {
    if format == Format::Constituency {
        return Outcome::fail(
            EXIT_USAGE,
            "--inverse reads bilexical tables; constituency output is already XML",
        );
    }
    let files = match list_files(paths, &["tsv"]) {
        Ok(f) => f,
        Err(e) => return Outcome::fail(EXIT_FAILURE, e),
    };
    let rules = HeadRules::default();
    let mut written = 0;
    for f in &files {
        let text = match corpus::read_text(f) {
            Ok(t) => t,
            Err(e) => return Outcome::fail(EXIT_FAILURE, e),
        };
        let graphs = match read_graphs(&text, &stem(f)) {
            Ok(g) => g,
            Err(e) => return Outcome::fail(EXIT_FAILURE, format!("{}: {e}", f.display())),
        };
        for (i, b) in graphs.iter().enumerate() {
            let rebuilt = match from_bilexical(b, &rules) {
                Ok(r) => r.passage,
                Err(e) => return Outcome::fail(EXIT_FAILURE, format!("{}: {e}", f.display())),
            };
            let name = if graphs.len() == 1 {
                format!("{}.xml", stem(f))
            } else {
                format!("{}-{}.xml", stem(f), i + 1)
            };
            if let Err(e) = write_out(out, &name, &write_passage(&rebuilt)) {
                return Outcome::fail(EXIT_FAILURE, e);
            }
            written += 1;
        }
    }
    Outcome::ok(format!("rebuilt {written} passages into {}\n", out.display()))
}

fn train_model(paths: &[PathBuf], model_path: &Path, epochs: usize, seed: u64) -> Outcome {
    let gold = match load_passages(paths, 1) {
        Ok(g) => g,
        Err(e) => return Outcome::fail(EXIT_FAILURE, e),
    };
    let passages: Vec<Passage> = gold.into_iter().map(|(_, p)| p).collect();
    let (model, report) = match train(&passages, epochs, seed) {
        Ok(r) => r,
        Err(e) => return Outcome::fail(EXIT_FAILURE, e),
    };
    if let Err(e) = fs::write(model_path, write_model(&model)) {
        return Outcome::fail(EXIT_FAILURE, format!("{}: {e}", model_path.display()));
    }
    let mut out = format!(
        "trained on {} passages ({} oracle states), {} epochs\n",
        passages.len(),
        report.states_per_epoch,
        report.mistakes.len()
    );
    if let Some(last) = report.mistakes.last() {
        let _ = writeln!(out, "mistakes in the last epoch: {last}");
    }
    Outcome::ok(out)
}

fn parse_files(paths: &[PathBuf], model_path: Option<&Path>, out: &Path, jobs: usize) -> Outcome {
    let model = match model_path {
        None => SparseModel::uniform(Vec::new()),
        Some(p) => {
            let text = match corpus::read_text(p) {
                Ok(t) => t,
                Err(e) => return Outcome::fail(EXIT_FAILURE, e),
            };
            match read_model(&text) {
                Ok(m) => m,
                Err(e) => return Outcome::fail(EXIT_FAILURE, format!("{}: {e}", p.display())),
            }
        }
    };
    let files = match list_files(paths, &["xml", "txt"]) {
        Ok(f) => f,
        Err(e) => return Outcome::fail(EXIT_FAILURE, e),
    };
    let parsed = par_map(jobs, &files, |f| -> Result<String, String> {
        let tokens = load_tokens(f).map_err(|e| e.to_string())?;
        if tokens.terminals.is_empty() {
            return Err(format!("{}: no tokens to parse", f.display()));
        }
        let p = parse(&tokens.passage_id, &tokens.terminals, &model);
        Ok(write_document(&p, &tokens.extras))
    });
    for (f, text) in files.iter().zip(parsed) {
        let text = match text {
            Ok(t) => t,
            Err(e) => return Outcome::fail(EXIT_FAILURE, e),
        };
        if let Err(e) = write_out(out, &format!("{}.xml", stem(f)), &text) {
            return Outcome::fail(EXIT_FAILURE, e);
        }
    }
    Outcome::ok(format!("parsed {} passages into {}\n", files.len(), out.display()))
}
