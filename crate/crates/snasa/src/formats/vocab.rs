//! Vocabulary file: a header line, then one trigram per line. The trigram
//! on line `k + 1` has id `k`; id 0 (OOV) has no line.
//!
//! ```text
//! #snasa-vocab v1 lowercase=1 min_count=1 lang=hi
//! ^ac
//! act
//! ```
//!
//! `lang=` is optional and omitted when the vocabulary has no language.

use std::path::Path;

use snasa_core::featurizer::Trigram;
use snasa_core::{TrigramVocabulary, VocabOptions};

use super::{read_text, write_bytes};
use crate::{Error, Result};

const MAGIC: &str = "#snasa-vocab";
const VERSION: &str = "v1";

pub fn render_vocabulary(v: &TrigramVocabulary) -> Result<String> {
    let o = v.options();
    let mut out = format!("{MAGIC} {VERSION} lowercase={} min_count={}", u8::from(o.lowercase), o.min_count);
    if !v.language().is_empty() {
        if v.language().contains(char::is_whitespace) {
            return Err(Error::Invalid(format!(
                "vocabulary language '{}' contains whitespace",
                v.language()
            )));
        }
        out.push_str(" lang=");
        out.push_str(v.language());
    }
    out.push('\n');
    for t in v.trigrams() {
        out.push_str(&t.to_string());
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_vocabulary(text: &str, path: &Path) -> Result<TrigramVocabulary> {
    let mut lines = text.split('\n');
    let header = lines.next().unwrap_or("");
    let mut fields = header.split(' ');
    if fields.next() != Some(MAGIC) {
        return Err(Error::format(path, "missing '#snasa-vocab' header"));
    }
    if fields.next() != Some(VERSION) {
        return Err(Error::format(path, "unsupported vocabulary version (expected v1)"));
    }
    let (mut lowercase, mut min_count, mut language) = (None, None, String::new());
    for field in fields {
        let bad = || Error::parse(path, 1, format!("bad header field '{field}'"));
        match field.split_once('=') {
            Some(("lowercase", "0")) => lowercase = Some(false),
            Some(("lowercase", "1")) => lowercase = Some(true),
            Some(("min_count", n)) => min_count = Some(n.parse().map_err(|_| bad())?),
            Some(("lang", l)) => language = l.to_string(),
            _ => return Err(bad()),
        }
    }
    let (Some(lowercase), Some(min_count)) = (lowercase, min_count) else {
        return Err(Error::parse(path, 1, "header needs lowercase= and min_count="));
    };
    let mut trigrams = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            // Only the final newline may leave an empty piece.
            if i + 2 == text.split('\n').count() {
                break;
            }
            return Err(Error::parse(path, i + 2, "empty line"));
        }
        let t = Trigram::parse(line)
            .ok_or_else(|| Error::parse(path, i + 2, format!("'{line}' is not a trigram")))?;
        trigrams.push(t);
    }
    TrigramVocabulary::from_trigrams(trigrams, VocabOptions { lowercase, min_count }, language)
        .map_err(|e| Error::format(path, e.to_string()))
}

pub fn save_vocabulary(v: &TrigramVocabulary, path: &Path) -> Result<()> {
    write_bytes(path, render_vocabulary(v)?.as_bytes())
}

pub fn load_vocabulary(path: &Path) -> Result<TrigramVocabulary> {
    parse_vocabulary(&read_text(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(lang: &str) -> TrigramVocabulary {
        TrigramVocabulary::build(["Happy day", "हैप्पी दिन"], VocabOptions::default(), lang).unwrap()
    }

    #[test]
    fn round_trips_exactly() {
        for lang in ["", "hi"] {
            let v = vocab(lang);
            let text = render_vocabulary(&v).unwrap();
            let back = parse_vocabulary(&text, Path::new("v.txt")).unwrap();
            assert_eq!(back, v);
            assert_eq!(render_vocabulary(&back).unwrap(), text);
        }
    }

    #[test]
    fn line_numbers_match_ids() {
        let v = vocab("");
        let text = render_vocabulary(&v).unwrap();
        assert!(text.starts_with("#snasa-vocab v1 lowercase=1 min_count=1\n^ha\n"));
        for (k, line) in text.lines().enumerate().skip(1) {
            assert_eq!(v.id(&Trigram::parse(line).unwrap()) as usize, k);
        }
    }

    #[test]
    fn rejects_bad_files() {
        let p = Path::new("v.txt");
        assert!(parse_vocabulary("", p).is_err());
        assert!(parse_vocabulary("#snasa-vocab v2 lowercase=1 min_count=1\n", p).is_err());
        assert!(parse_vocabulary("#snasa-vocab v1 lowercase=1\n", p).is_err());
        let e = parse_vocabulary("#snasa-vocab v1 lowercase=1 min_count=1\n^ab\nabcd\n", p).unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        assert!(parse_vocabulary("#snasa-vocab v1 lowercase=1 min_count=1\n^ab\n^ab\n", p).is_err());
    }
}
