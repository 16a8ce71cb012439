//! Plain-text sampler checkpoints.
//!
//! Layout (whitespace-separated decimal text):
//!
//! ```text
//! ldackpt 1 <model> <strategy> <topics> <vocab> <docs> <iteration> <seed>
//! alpha <k values>
//! beta <|V| values>
//! gamma_scale <value>
//! ell <value>            (sparse strategies only)
//! recount_every <value>
//! doc <id> <group count>
//! D <outcome per token>          (one line per group: D = draws,
//! C <count per outcome>           C = aggregated counts, F = fractional mass)
//! ...
//! end
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so loading
//! a checkpoint reproduces the saved state bit for bit.

use std::fs;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{AssignmentState, GroupAssignment, ModelKind, Strategy};

pub const CHECKPOINT_MAGIC: &str = "ldackpt";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to resume a sampling run exactly where it stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model_kind: ModelKind,
    pub strategy: Strategy,
    pub topic_count: usize,
    pub vocab_size: usize,
    pub doc_count: usize,
    pub iteration: u64,
    pub seed: u64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma_scale: f64,
    pub sparsity_ell: Option<f64>,
    pub recount_every: usize,
    pub assignments: AssignmentState,
}

/// Serializes a checkpoint to its text form.
pub fn checkpoint_to_string(ck: &Checkpoint) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION} {} {} {} {} {} {} {}",
        ck.model_kind.as_str(),
        ck.strategy.as_str(),
        ck.topic_count,
        ck.vocab_size,
        ck.doc_count,
        ck.iteration,
        ck.seed
    );
    let _ = write!(out, "alpha");
    for a in &ck.alpha {
        let _ = write!(out, " {a}");
    }
    out.push('\n');
    let _ = write!(out, "beta");
    for b in &ck.beta {
        let _ = write!(out, " {b}");
    }
    out.push('\n');
    let _ = writeln!(out, "gamma_scale {}", ck.gamma_scale);
    if let Some(ell) = ck.sparsity_ell {
        let _ = writeln!(out, "ell {ell}");
    }
    let _ = writeln!(out, "recount_every {}", ck.recount_every);
    for (d, groups) in ck.assignments.docs().iter().enumerate() {
        let _ = writeln!(out, "doc {d} {}", groups.len());
        for ga in groups {
            match ga {
                GroupAssignment::Drawn(v) => {
                    let _ = write!(out, "D");
                    for o in v {
                        let _ = write!(out, " {o}");
                    }
                }
                GroupAssignment::Counts(c) => {
                    let _ = write!(out, "C");
                    for x in c {
                        let _ = write!(out, " {x}");
                    }
                }
                GroupAssignment::Mass(m) => {
                    let _ = write!(out, "F");
                    for x in m {
                        let _ = write!(out, " {x}");
                    }
                }
            }
            out.push('\n');
        }
    }
    out.push_str("end\n");
    out
}

pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    fs::write(path, checkpoint_to_string(ck))?;
    Ok(())
}

struct LineReader<'a> {
    path: &'a Path,
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> LineReader<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        for (idx, line) in self.lines.by_ref() {
            if !line.trim().is_empty() {
                return Ok((idx + 1, line));
            }
        }
        Err(Error::parse(self.path, 0, "unexpected end of checkpoint"))
    }
}

fn parse_num<T: FromStr>(path: &Path, line_no: usize, token: &str, what: &str) -> Result<T> {
    token
        .parse::<T>()
        .map_err(|_| Error::parse(path, line_no, format!("invalid {what} {token:?}")))
}

fn parse_tagged_floats(
    path: &Path,
    line_no: usize,
    line: &str,
    tag: &str,
) -> Result<Vec<f64>> {
    let mut fields = line.split_whitespace();
    match fields.next() {
        Some(t) if t == tag => {}
        other => {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected {tag:?} line, found {other:?}"),
            ))
        }
    }
    fields
        .map(|f| parse_num::<f64>(path, line_no, f, tag))
        .collect()
}

/// Parses a checkpoint from its text form. Structural problems (wrong magic,
/// bad counts, truncation) are parse errors; they carry `path` for context.
pub fn checkpoint_from_str(path: &Path, text: &str) -> Result<Checkpoint> {
    let mut reader = LineReader {
        path,
        lines: text.lines().enumerate(),
    };

    let (line_no, header) = reader.next_line()?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 9 || fields[0] != CHECKPOINT_MAGIC {
        return Err(Error::parse(path, line_no, "not a checkpoint header"));
    }
    let version: u32 = parse_num(path, line_no, fields[1], "version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::parse(
            path,
            line_no,
            format!("unsupported checkpoint version {version}"),
        ));
    }
    let model_kind = ModelKind::parse(fields[2])?;
    let strategy = Strategy::parse(fields[3])?;
    let topic_count: usize = parse_num(path, line_no, fields[4], "topic count")?;
    let vocab_size: usize = parse_num(path, line_no, fields[5], "vocabulary size")?;
    let doc_count: usize = parse_num(path, line_no, fields[6], "document count")?;
    let iteration: u64 = parse_num(path, line_no, fields[7], "iteration")?;
    let seed: u64 = parse_num(path, line_no, fields[8], "seed")?;

    let (ln, line) = reader.next_line()?;
    let alpha = parse_tagged_floats(path, ln, line, "alpha")?;
    if alpha.len() != topic_count {
        return Err(Error::parse(
            path,
            ln,
            format!("expected {topic_count} alpha entries, found {}", alpha.len()),
        ));
    }
    let (ln, line) = reader.next_line()?;
    let beta = parse_tagged_floats(path, ln, line, "beta")?;
    if beta.len() != vocab_size {
        return Err(Error::parse(
            path,
            ln,
            format!("expected {vocab_size} beta entries, found {}", beta.len()),
        ));
    }
    let (ln, line) = reader.next_line()?;
    let gamma_scale = parse_tagged_floats(path, ln, line, "gamma_scale")?
        .first()
        .copied()
        .ok_or_else(|| Error::parse(path, ln, "gamma_scale line missing value"))?;

    let mut sparsity_ell = None;
    let (mut ln, mut line) = reader.next_line()?;
    if line.split_whitespace().next() == Some("ell") {
        sparsity_ell = Some(
            parse_tagged_floats(path, ln, line, "ell")?
                .first()
                .copied()
                .ok_or_else(|| Error::parse(path, ln, "ell line missing value"))?,
        );
        let next = reader.next_line()?;
        ln = next.0;
        line = next.1;
    }
    if strategy.lazy() && sparsity_ell.is_none() {
        return Err(Error::parse(path, ln, "sparse checkpoint missing ell line"));
    }
    let recount_fields: Vec<&str> = line.split_whitespace().collect();
    if recount_fields.len() != 2 || recount_fields[0] != "recount_every" {
        return Err(Error::parse(path, ln, "expected recount_every line"));
    }
    let recount_every: usize = parse_num(path, ln, recount_fields[1], "recount interval")?;

    let mut docs: Vec<Vec<GroupAssignment>> = Vec::with_capacity(doc_count);
    for d in 0..doc_count {
        let (ln, line) = reader.next_line()?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 || fields[0] != "doc" {
            return Err(Error::parse(path, ln, format!("expected doc {d} marker")));
        }
        let marker: usize = parse_num(path, ln, fields[1], "document id")?;
        if marker != d {
            return Err(Error::parse(
                path,
                ln,
                format!("document marker {marker} out of order, expected {d}"),
            ));
        }
        let group_count: usize = parse_num(path, ln, fields[2], "group count")?;
        let mut groups = Vec::with_capacity(group_count);
        for _ in 0..group_count {
            let (ln, line) = reader.next_line()?;
            let mut fields = line.split_whitespace();
            let tag = fields
                .next()
                .ok_or_else(|| Error::parse(path, ln, "empty group line"))?;
            let ga = match tag {
                "D" => GroupAssignment::Drawn(
                    fields
                        .map(|f| parse_num::<u32>(path, ln, f, "outcome"))
                        .collect::<Result<_>>()?,
                ),
                "C" => GroupAssignment::Counts(
                    fields
                        .map(|f| parse_num::<f64>(path, ln, f, "count"))
                        .collect::<Result<_>>()?,
                ),
                "F" => GroupAssignment::Mass(
                    fields
                        .map(|f| parse_num::<f64>(path, ln, f, "mass"))
                        .collect::<Result<_>>()?,
                ),
                other => {
                    return Err(Error::parse(
                        path,
                        ln,
                        format!("unknown group tag {other:?}"),
                    ))
                }
            };
            groups.push(ga);
        }
        docs.push(groups);
    }
    let (ln, line) = reader.next_line()?;
    if line.trim() != "end" {
        return Err(Error::parse(path, ln, "expected end marker"));
    }

    Ok(Checkpoint {
        model_kind,
        strategy,
        topic_count,
        vocab_size,
        doc_count,
        iteration,
        seed,
        alpha,
        beta,
        gamma_scale,
        sparsity_ell,
        recount_every,
        assignments: AssignmentState::new(model_kind, docs),
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path)?;
    checkpoint_from_str(path, &text)
}
