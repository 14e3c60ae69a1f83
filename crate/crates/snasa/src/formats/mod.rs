//! On-disk formats. Text formats are UTF-8 with LF line endings; every
//! writer is byte-deterministic for a given input.

mod dataset;
mod emoji;
mod model;
mod pairs;
mod references;
mod reports;
mod vectors;
mod vocab;

pub use dataset::{load_dataset, load_raw_texts, parse_dataset, render_dataset, save_dataset};
pub use emoji::{load_emoji_map, parse_emoji_map};
pub use model::{decode_model, encode_model, load_model, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use pairs::{load_pairs, render_pairs, save_pairs};
pub use references::{load_references, parse_references, render_references, save_references};
pub use reports::{render_epoch_log, render_report, save_epoch_log, save_report};
pub use vectors::{load_word_vectors, parse_word_vectors};
pub use vocab::{load_vocabulary, parse_vocabulary, render_vocabulary, save_vocabulary};

use std::fs;
use std::path::Path;

use crate::{Error, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    String::from_utf8(bytes).map_err(|e| Error::format(path, format!("not valid UTF-8 ({e})")))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Non-blank lines with their 1-based line numbers.
pub(crate) fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
}

/// Name for a dataset read from `path`: the file stem.
pub(crate) fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".to_string())
}
