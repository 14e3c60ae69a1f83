//! Reference sets.
//!
//! ```text
//! #snasa-refs v1 scheme=three-class n_per_class=100 seed=0 model=1a2b3c4d dim=128
//! neg<TAB>r17<TAB>0.25 0 1.5 ...
//! ```
//!
//! Rows are grouped by class in canonical order; each carries the id of
//! the rich-language sentence it embeds.

use std::fmt::Write as _;
use std::path::Path;

use snasa_core::classifier::ClassReferences;
use snasa_core::{LabelScheme, ReferenceSet, SentimentEmbedding, SentimentLabel};

use super::{numbered_lines, read_text, write_bytes};
use crate::{Error, Result};

const MAGIC: &str = "#snasa-refs";

pub fn render_references(refs: &ReferenceSet) -> String {
    let mut out = format!(
        "{MAGIC} v1 scheme={} n_per_class={} seed={} model={:08x} dim={}\n",
        refs.scheme().name(),
        refs.n_per_class(),
        refs.seed(),
        refs.model_fingerprint(),
        refs.dim()
    );
    for c in refs.classes() {
        for e in &c.embeddings {
            write!(out, "{}\t{}\t", c.label, e.source).expect("write to string");
            for (i, v) in e.values.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write!(out, "{v}").expect("write to string");
            }
            out.push('\n');
        }
    }
    out
}

pub fn save_references(refs: &ReferenceSet, path: &Path) -> Result<()> {
    write_bytes(path, render_references(refs).as_bytes())
}

struct Header {
    scheme: LabelScheme,
    n_per_class: usize,
    seed: u64,
    model: u32,
    dim: usize,
}

fn parse_header(line: &str, path: &Path) -> Result<Header> {
    let mut fields = line.split(' ');
    if fields.next() != Some(MAGIC) || fields.next() != Some("v1") {
        return Err(Error::format(path, "missing '#snasa-refs v1' header"));
    }
    let (mut scheme, mut n, mut seed, mut model, mut dim) = (None, None, None, None, None);
    for f in fields {
        let bad = || Error::parse(path, 1, format!("bad header field '{f}'"));
        match f.split_once('=').ok_or_else(bad)? {
            ("scheme", v) => scheme = Some(LabelScheme::from_name(v).ok_or_else(bad)?),
            ("n_per_class", v) => n = Some(v.parse().map_err(|_| bad())?),
            ("seed", v) => seed = Some(v.parse().map_err(|_| bad())?),
            ("model", v) => model = Some(u32::from_str_radix(v, 16).map_err(|_| bad())?),
            ("dim", v) => dim = Some(v.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        }
    }
    match (scheme, n, seed, model, dim) {
        (Some(scheme), Some(n_per_class), Some(seed), Some(model), Some(dim)) => Ok(Header {
            scheme,
            n_per_class,
            seed,
            model,
            dim,
        }),
        _ => Err(Error::parse(path, 1, "header needs scheme, n_per_class, seed, model and dim")),
    }
}

pub fn parse_references(text: &str, path: &Path) -> Result<ReferenceSet> {
    let mut lines = numbered_lines(text);
    let (_, first) = lines.next().ok_or_else(|| Error::format(path, "empty reference file"))?;
    let h = parse_header(first, path)?;
    let mut classes: Vec<ClassReferences> = h
        .scheme
        .classes()
        .iter()
        .map(|&label| ClassReferences { label, embeddings: Vec::new() })
        .collect();
    for (line, raw) in lines {
        let [label, id, values] = raw.split('\t').collect::<Vec<_>>()[..] else {
            return Err(Error::parse(path, line, "expected 3 tab-separated columns"));
        };
        let ci = SentimentLabel::from_token(label)
            .and_then(|l| h.scheme.index_of(l))
            .ok_or_else(|| {
                Error::parse(path, line, format!("label '{label}' is not in the {} scheme", h.scheme))
            })?;
        let values = values
            .split(' ')
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::parse(path, line, format!("'{t}' is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != h.dim {
            return Err(Error::parse(
                path,
                line,
                format!("embedding has {} components, expected {}", values.len(), h.dim),
            ));
        }
        classes[ci].embeddings.push(SentimentEmbedding::new(values, id));
    }
    if let Some(c) = classes.iter().find(|c| c.embeddings.is_empty()) {
        return Err(Error::format(path, format!("class {} has no references", c.label)));
    }
    Ok(ReferenceSet::new(h.scheme, classes, h.n_per_class, h.seed, h.model)?)
}

pub fn load_references(path: &Path) -> Result<ReferenceSet> {
    parse_references(&read_text(path)?, path)
}
