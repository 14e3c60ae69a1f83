//! Pair cache: TSV `poor_id<TAB>rich_id<TAB>label` with labels `1`
//! (similar) and `-1` (dissimilar).

use std::collections::HashMap;
use std::path::Path;

use snasa_core::trainer::{PairLabel, SentencePair};
use snasa_core::Dataset;

use super::{numbered_lines, read_text, write_bytes};
use crate::{Error, Result};

const HEADER: &str = "poor_id\trich_id\tlabel";

pub fn render_pairs(pairs: &[SentencePair], poor: &Dataset, rich: &Dataset) -> Result<String> {
    let mut out = format!("{HEADER}\n");
    for p in pairs {
        let (Some(a), Some(b)) = (poor.sentences().get(p.poor), rich.sentences().get(p.rich)) else {
            return Err(Error::Invalid(format!("pair ({}, {}) indexes past the datasets", p.poor, p.rich)));
        };
        let y = match p.label {
            PairLabel::Similar => "1",
            PairLabel::Dissimilar => "-1",
        };
        out.push_str(&format!("{}\t{}\t{y}\n", a.id, b.id));
    }
    Ok(out)
}

pub fn save_pairs(pairs: &[SentencePair], poor: &Dataset, rich: &Dataset, path: &Path) -> Result<()> {
    write_bytes(path, render_pairs(pairs, poor, rich)?.as_bytes())
}

fn index(d: &Dataset) -> HashMap<&str, usize> {
    d.sentences().iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect()
}

/// Reads pairs and resolves their ids against the two datasets.
pub fn load_pairs(path: &Path, poor: &Dataset, rich: &Dataset) -> Result<Vec<SentencePair>> {
    let text = read_text(path)?;
    let (pi, ri) = (index(poor), index(rich));
    let mut out = Vec::new();
    for (i, (line, raw)) in numbered_lines(&text).enumerate() {
        if i == 0 && raw == HEADER {
            continue;
        }
        let [a, b, y] = raw.split('\t').collect::<Vec<_>>()[..] else {
            return Err(Error::parse(path, line, "expected 3 tab-separated columns"));
        };
        let find = |m: &HashMap<&str, usize>, id: &str, which: &str| {
            m.get(id)
                .copied()
                .ok_or_else(|| Error::parse(path, line, format!("unknown {which} sentence id '{id}'")))
        };
        let label = match y {
            "1" | "+1" => PairLabel::Similar,
            "-1" => PairLabel::Dissimilar,
            _ => return Err(Error::parse(path, line, format!("pair label '{y}' is not 1 or -1"))),
        };
        out.push(SentencePair {
            poor: find(&pi, a, "poor-language")?,
            rich: find(&ri, b, "rich-language")?,
            label,
        });
    }
    if out.is_empty() {
        return Err(Error::format(path, "no pairs"));
    }
    Ok(out)
}
