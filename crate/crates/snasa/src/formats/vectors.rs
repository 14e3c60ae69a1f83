//! Pretrained word vectors: one word per line followed by its
//! space-separated components.

use std::path::Path;

use snasa_core::baseline::WordVectorTable;

use super::{numbered_lines, read_text};
use crate::{Error, Result};

pub fn parse_word_vectors(text: &str, path: &Path) -> Result<WordVectorTable> {
    let mut table: Option<WordVectorTable> = None;
    for (line, raw) in numbered_lines(text) {
        let mut parts = raw.split_whitespace();
        let word = parts.next().expect("line is not blank");
        let values = parts
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(path, line, format!("'{t}' is not a finite number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.is_empty() {
            return Err(Error::parse(path, line, format!("word '{word}' has no components")));
        }
        if table.is_none() {
            table = Some(WordVectorTable::new(values.len())?);
        }
        let t = table.as_mut().expect("set above");
        if values.len() != t.dim() {
            return Err(Error::parse(
                path,
                line,
                format!("vector for '{word}' has {} components, expected {}", values.len(), t.dim()),
            ));
        }
        t.insert(word, &values)
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
    }
    table.ok_or_else(|| Error::format(path, "no word vectors"))
}

pub fn load_word_vectors(path: &Path) -> Result<WordVectorTable> {
    parse_word_vectors(&read_text(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_reports_lines() {
        let p = Path::new("v.txt");
        let t = parse_word_vectors("good 1 0\nbad 0 1\n", p).unwrap();
        assert_eq!((t.len(), t.dim()), (2, 2));
        assert_eq!(t.get("bad"), Some(&[0.0, 1.0][..]));
        let e = parse_word_vectors("a 1 0\nb 1\n", p).unwrap_err().to_string();
        assert!(e.contains("line 2") && e.contains("expected 2"), "{e}");
        assert!(parse_word_vectors("a 1\na 2\n", p).unwrap_err().to_string().contains("line 2"));
        assert!(parse_word_vectors("a x\n", p).is_err());
        assert!(parse_word_vectors("\n", p).is_err());
    }
}
