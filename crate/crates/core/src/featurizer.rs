//! Character-trigram featurization.
//!
//! Text is split on whitespace. Each token `c1..cn` is padded to `^c1..cn$`
//! and every run of three consecutive codepoints becomes one trigram, so a
//! token of `n` codepoints yields exactly `n` trigrams. Trigrams never span
//! tokens.

use alloc::borrow::Cow;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::corpus::Dataset;
use crate::{Error, Result};

pub const START_MARKER: char = '^';
pub const END_MARKER: char = '$';
/// Id reserved for trigrams outside the vocabulary.
pub const OOV_ID: u32 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Trigram(pub [char; 3]);

impl Trigram {
    pub fn parse(s: &str) -> Option<Self> {
        let mut it = s.chars();
        let t = [it.next()?, it.next()?, it.next()?];
        it.next().is_none().then_some(Trigram(t))
    }
}

impl fmt::Display for Trigram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.0 {
            fmt::Write::write_char(f, c)?;
        }
        Ok(())
    }
}

/// Whitespace tokens of `text`, lowercased when asked.
pub fn tokens(text: &str, lowercase: bool) -> impl Iterator<Item = Cow<'_, str>> {
    text.split_whitespace().map(move |t| {
        if lowercase {
            Cow::Owned(t.to_lowercase())
        } else {
            Cow::Borrowed(t)
        }
    })
}

fn push_token_trigrams(token: &str, out: &mut Vec<Trigram>) {
    let mut padded = Vec::with_capacity(token.len() + 2);
    padded.push(START_MARKER);
    padded.extend(token.chars());
    padded.push(END_MARKER);
    out.extend(padded.windows(3).map(|w| Trigram([w[0], w[1], w[2]])));
}

/// Trigrams of `text` in order.
pub fn extract_trigrams(text: &str, lowercase: bool) -> Result<Vec<Trigram>> {
    let mut out = Vec::new();
    for token in tokens(text, lowercase) {
        push_token_trigrams(&token, &mut out);
    }
    if out.is_empty() {
        return Err(Error::BlankText);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VocabOptions {
    pub lowercase: bool,
    pub min_count: usize,
}

impl Default for VocabOptions {
    fn default() -> Self {
        Self {
            lowercase: true,
            min_count: 1,
        }
    }
}

/// Frozen bidirectional map between trigrams and dense ids.
///
/// Id 0 is the OOV id; known trigrams take ids `1..len()` in first-occurrence
/// order of the corpus the vocabulary was built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrigramVocabulary {
    ids: BTreeMap<Trigram, u32>,
    trigrams: Vec<Trigram>,
    options: VocabOptions,
    language: String,
}

impl TrigramVocabulary {
    /// Builds from raw texts. Texts that yield no trigrams are skipped.
    pub fn build<'a, I>(texts: I, options: VocabOptions, language: impl Into<String>) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        if options.min_count == 0 {
            return Err(Error::invalid("min_count", "must be at least 1"));
        }
        let mut counts: BTreeMap<Trigram, usize> = BTreeMap::new();
        let mut order = Vec::new();
        let mut scratch = Vec::new();
        for text in texts {
            scratch.clear();
            for token in tokens(text, options.lowercase) {
                push_token_trigrams(&token, &mut scratch);
            }
            for &t in &scratch {
                let c = counts.entry(t).or_insert(0);
                if *c == 0 {
                    order.push(t);
                }
                *c += 1;
            }
        }
        let kept = order
            .into_iter()
            .filter(|t| counts[t] >= options.min_count)
            .collect();
        Self::from_trigrams(kept, options, language)
    }

    /// Rebuilds a vocabulary whose trigram with id `k` is `trigrams[k - 1]`.
    pub fn from_trigrams(
        trigrams: Vec<Trigram>,
        options: VocabOptions,
        language: impl Into<String>,
    ) -> Result<Self> {
        let mut ids = BTreeMap::new();
        for (i, &t) in trigrams.iter().enumerate() {
            if ids.insert(t, i as u32 + 1).is_some() {
                return Err(Error::DuplicateEntry(t.to_string()));
            }
        }
        Ok(Self {
            ids,
            trigrams,
            options,
            language: language.into(),
        })
    }

    /// Number of ids, including the OOV id.
    pub fn len(&self) -> usize {
        self.trigrams.len() + 1
    }

    /// True when only the OOV id exists.
    pub fn is_empty(&self) -> bool {
        self.trigrams.is_empty()
    }

    pub fn options(&self) -> VocabOptions {
        self.options
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn id(&self, trigram: &Trigram) -> u32 {
        self.ids.get(trigram).copied().unwrap_or(OOV_ID)
    }

    pub fn trigram(&self, id: u32) -> Option<Trigram> {
        (id as usize)
            .checked_sub(1)
            .and_then(|i| self.trigrams.get(i))
            .copied()
    }

    /// Known trigrams in id order (id 1 first).
    pub fn trigrams(&self) -> &[Trigram] {
        &self.trigrams
    }

    pub fn encode(&self, text: &str) -> Result<TrigramSequence> {
        let ids = extract_trigrams(text, self.options.lowercase)?
            .iter()
            .map(|t| self.id(t))
            .collect();
        Ok(TrigramSequence {
            ids,
            source: String::new(),
        })
    }
}

/// Trigram ids of one sentence, in text order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrigramSequence {
    pub ids: Vec<u32>,
    pub source: String,
}

impl TrigramSequence {
    pub fn new(ids: Vec<u32>, source: impl Into<String>) -> Self {
        Self {
            ids,
            source: source.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }
}

pub fn build_vocabulary(train: &Dataset, lowercase: bool, min_count: usize) -> Result<TrigramVocabulary> {
    build_joint_vocabulary(&[train], VocabOptions { lowercase, min_count })
}

/// One vocabulary over several corpora, visited in the given order. The
/// encoder's embedding table is shared across languages, so a poor/rich pair
/// trains on the vocabulary of both.
pub fn build_joint_vocabulary(datasets: &[&Dataset], options: VocabOptions) -> Result<TrigramVocabulary> {
    if let Some(d) = datasets.iter().find(|d| d.is_empty()) {
        return Err(Error::EmptyDataset(d.name().to_string()));
    }
    if datasets.is_empty() {
        return Err(Error::EmptyDataset(String::new()));
    }
    let language = datasets
        .iter()
        .map(|d| d.name())
        .collect::<Vec<_>>()
        .join("+");
    let texts = datasets
        .iter()
        .flat_map(|d| d.sentences().iter().map(|s| s.text.as_str()));
    TrigramVocabulary::build(texts, options, language)
}

pub fn encode_sentence(text: &str, vocab: &TrigramVocabulary) -> Result<TrigramSequence> {
    vocab.encode(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VocabularyStats {
    pub unique_trigrams: usize,
    pub unique_words: usize,
}

pub fn vocabulary_stats(d: &Dataset, lowercase: bool) -> Result<VocabularyStats> {
    if d.is_empty() {
        return Err(Error::EmptyDataset(d.name().to_string()));
    }
    let mut words = BTreeSet::new();
    let mut trigrams = BTreeSet::new();
    let mut scratch = Vec::new();
    for s in d.sentences() {
        for token in tokens(&s.text, lowercase) {
            scratch.clear();
            push_token_trigrams(&token, &mut scratch);
            trigrams.extend(scratch.iter().copied());
            words.insert(token.into_owned());
        }
    }
    Ok(VocabularyStats {
        unique_trigrams: trigrams.len(),
        unique_words: words.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{LabelScheme, LabeledSentence, SentimentLabel};
    use alloc::vec;

    fn strs(ts: &[Trigram]) -> Vec<String> {
        ts.iter().map(|t| t.to_string()).collect()
    }

    fn corpus(texts: &[&str]) -> Dataset {
        Dataset::new(
            "c",
            LabelScheme::ThreeClass,
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| LabeledSentence::new(alloc::format!("{i}"), *t, SentimentLabel::Neutral, "x"))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn extraction_examples() {
        assert_eq!(strs(&extract_trigrams("abc", false).unwrap()), ["^ab", "abc", "bc$"]);
        assert_eq!(strs(&extract_trigrams("a", false).unwrap()), ["^a$"]);
        assert_eq!(
            strs(&extract_trigrams("hi yo", false).unwrap()),
            ["^hi", "hi$", "^yo", "yo$"]
        );
        assert_eq!(extract_trigrams(" \t\n", false), Err(Error::BlankText));
    }

    #[test]
    fn extraction_is_codepoint_based() {
        let t = extract_trigrams("अच्छा", false).unwrap();
        assert_eq!(t.len(), "अच्छा".chars().count());
        assert_eq!(t[0].0[0], START_MARKER);
    }

    #[test]
    fn lowercasing_is_optional() {
        assert_eq!(strs(&extract_trigrams("Hi", true).unwrap()), ["^hi", "hi$"]);
        assert_eq!(strs(&extract_trigrams("Hi", false).unwrap()), ["^Hi", "Hi$"]);
    }

    #[test]
    fn vocabulary_examples() {
        let v = build_vocabulary(&corpus(&["abc", "abd"]), false, 1).unwrap();
        assert_eq!(v.len(), 6);
        assert_eq!(strs(v.trigrams()), ["^ab", "abc", "bc$", "abd", "bd$"]);
        assert_eq!(v.id(&Trigram::parse("^ab").unwrap()), 1);

        let v = build_vocabulary(&corpus(&["abc", "abc"]), false, 2).unwrap();
        assert_eq!(strs(v.trigrams()), ["^ab", "abc", "bc$"]);

        let v = build_vocabulary(&corpus(&["abc", "xyz"]), false, 3).unwrap();
        assert_eq!(v.len(), 1);
        assert!(v.is_empty());

        assert!(build_vocabulary(&Dataset::empty("e", LabelScheme::ThreeClass), true, 1).is_err());
        assert!(build_vocabulary(&corpus(&["abc"]), true, 0).is_err());
    }

    #[test]
    fn encoding_examples() {
        let v = build_vocabulary(&corpus(&["abc"]), false, 1).unwrap();
        assert_eq!(encode_sentence("abc", &v).unwrap().ids, vec![1, 2, 3]);
        assert_eq!(encode_sentence("xyz", &v).unwrap().ids, vec![0, 0, 0]);
        assert_eq!(encode_sentence("  ", &v), Err(Error::BlankText));
    }

    #[test]
    fn misspelling_keeps_partial_matches() {
        // happy: ^ha hap app ppy py$ ; happpy: ^ha hap app ppp ppy py$
        let v = build_vocabulary(&corpus(&["happy"]), true, 1).unwrap();
        let seq = encode_sentence("happpy", &v).unwrap();
        let known = seq.ids.iter().filter(|&&id| id != OOV_ID).count();
        assert_eq!(seq.len(), 6);
        assert_eq!(known, 5);
        assert!(known >= 3);
    }

    #[test]
    fn stats_examples() {
        let s = vocabulary_stats(&corpus(&["abc abd"]), false).unwrap();
        assert_eq!(s, VocabularyStats { unique_trigrams: 5, unique_words: 2 });
        let s = vocabulary_stats(&corpus(&["a a a"]), false).unwrap();
        assert_eq!(s, VocabularyStats { unique_trigrams: 1, unique_words: 1 });
    }

    #[test]
    fn from_trigrams_rejects_duplicates() {
        let t = Trigram::parse("abc").unwrap();
        assert!(TrigramVocabulary::from_trigrams(vec![t, t], VocabOptions::default(), "x").is_err());
    }

    #[test]
    fn trigram_parse_requires_three_codepoints() {
        assert!(Trigram::parse("ab").is_none());
        assert!(Trigram::parse("abcd").is_none());
        assert_eq!(Trigram::parse("అమ్").map(|t| t.to_string()).as_deref(), Some("అమ్"));
    }
}
