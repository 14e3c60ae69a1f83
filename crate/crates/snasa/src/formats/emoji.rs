//! Emoji-to-class map as `emoji<TAB>label` TSV (three-class labels).

use std::path::Path;

use snasa_core::corpus::EmojiMap;
use snasa_core::{LabelScheme, SentimentLabel};

use super::{numbered_lines, read_text};
use crate::{Error, Result};

pub fn parse_emoji_map(text: &str, path: &Path) -> Result<EmojiMap> {
    let mut entries = Vec::new();
    for (i, (line, raw)) in numbered_lines(text).enumerate() {
        let cells: Vec<&str> = raw.split('\t').collect();
        if i == 0 && cells.first() == Some(&"emoji") {
            continue;
        }
        let [emoji, label] = cells[..] else {
            return Err(Error::parse(
                path,
                line,
                format!("expected 2 tab-separated columns, found {}", cells.len()),
            ));
        };
        let label = match SentimentLabel::from_token(label) {
            Some(l) if LabelScheme::ThreeClass.contains(l) => l,
            _ => {
                return Err(Error::parse(
                    path,
                    line,
                    format!("unknown label '{label}' (emoji labels are neg, neu or pos)"),
                ))
            }
        };
        let emoji = emoji.trim();
        if entries.iter().any(|(e, _): &(String, SentimentLabel)| e == emoji) {
            return Err(Error::parse(path, line, format!("emoji '{emoji}' is mapped twice")));
        }
        entries.push((emoji.to_string(), label));
    }
    if entries.is_empty() {
        return Err(Error::format(path, "emoji map has no entries"));
    }
    Ok(EmojiMap::new(entries)?)
}

pub fn load_emoji_map(path: &Path) -> Result<EmojiMap> {
    parse_emoji_map(&read_text(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let p = Path::new("m.tsv");
        let m = parse_emoji_map("emoji\tlabel\n😀\tpos\n😡\tneg\n", p).unwrap();
        assert_eq!(m.len(), 2);
        assert!(parse_emoji_map("😀\tpos\n😀\tneg\n", p).unwrap_err().to_string().contains("line 2"));
        assert!(parse_emoji_map("😀\tvpos\n", p).is_err());
        assert!(parse_emoji_map("", p).is_err());
    }
}
