//! Labeled datasets as `id<TAB>label<TAB>text` TSV, and unlabeled
//! `id<TAB>text` files. A first row whose first cell is `id` is a header.

use std::collections::HashMap;
use std::path::Path;

use snasa_core::{Dataset, LabelScheme, LabeledSentence, SentimentLabel};

use super::{numbered_lines, read_text, stem, write_bytes};
use crate::{Error, Result};

fn is_header(first_line: usize, line: usize, cells: &[&str]) -> bool {
    line == first_line && cells.first() == Some(&"id")
}

/// Parses dataset text; `path` only labels errors.
pub fn parse_dataset(
    text: &str,
    path: &Path,
    scheme: LabelScheme,
    name: &str,
    language: &str,
) -> Result<Dataset> {
    let mut sentences = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let first = numbered_lines(text).next().map_or(0, |(n, _)| n);
    for (line, raw) in numbered_lines(text) {
        let cells: Vec<&str> = raw.split('\t').collect();
        if is_header(first, line, &cells) {
            continue;
        }
        let [id, label, body] = cells[..] else {
            return Err(Error::parse(
                path,
                line,
                format!("expected 3 tab-separated columns, found {}", cells.len()),
            ));
        };
        let label = match SentimentLabel::from_token(label) {
            Some(l) if scheme.contains(l) => l,
            Some(_) => {
                return Err(Error::parse(
                    path,
                    line,
                    format!("label '{label}' is not in the {scheme} scheme"),
                ))
            }
            None => return Err(Error::parse(path, line, format!("unknown label '{label}'"))),
        };
        let id = id.trim();
        if let Some(prev) = seen.insert(id.to_string(), line) {
            return Err(Error::parse(
                path,
                line,
                format!("duplicate id '{id}' (first seen at line {prev})"),
            ));
        }
        if body.trim().is_empty() {
            return Err(Error::parse(path, line, "empty text"));
        }
        sentences.push(LabeledSentence::new(id, body, label, language));
    }
    Ok(Dataset::new(name, scheme, sentences)?)
}

/// Loads a dataset named after the file stem; `language` defaults to the
/// stem too.
pub fn load_dataset(path: &Path, scheme: LabelScheme, language: Option<&str>) -> Result<Dataset> {
    let name = stem(path);
    parse_dataset(&read_text(path)?, path, scheme, &name, language.unwrap_or(&name))
}

pub fn render_dataset(d: &Dataset) -> Result<String> {
    let mut out = String::from("id\tlabel\ttext\n");
    for s in d.sentences() {
        if s.id.contains(['\t', '\n']) || s.text.contains(['\t', '\n']) {
            return Err(Error::Invalid(format!(
                "sentence '{}' contains a tab or newline and cannot be written as TSV",
                s.id
            )));
        }
        out.push_str(&format!("{}\t{}\t{}\n", s.id, s.label.token(), s.text));
    }
    Ok(out)
}

pub fn save_dataset(d: &Dataset, path: &Path) -> Result<()> {
    write_bytes(path, render_dataset(d)?.as_bytes())
}

/// Reads unlabeled `id<TAB>text` rows, such as raw tweets.
pub fn load_raw_texts(path: &Path) -> Result<Vec<(String, String)>> {
    let text = read_text(path)?;
    let first = numbered_lines(&text).next().map_or(0, |(n, _)| n);
    let mut rows = Vec::new();
    for (line, raw) in numbered_lines(&text) {
        let cells: Vec<&str> = raw.split('\t').collect();
        if is_header(first, line, &cells) {
            continue;
        }
        let [id, body] = cells[..] else {
            return Err(Error::parse(
                path,
                line,
                format!("expected 2 tab-separated columns, found {}", cells.len()),
            ));
        };
        rows.push((id.trim().to_string(), body.to_string()));
    }
    Ok(rows)
}
