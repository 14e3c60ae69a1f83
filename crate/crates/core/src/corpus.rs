//! Labeled sentence datasets, sentiment label schemes, emoji labeling and
//! stratified splitting.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;

use crate::{rng, Error, Result};

/// Sentiment label schemes. Each lists its classes in canonical order, which
/// is also the tie-breaking order everywhere a decision has to be made.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LabelScheme {
    ThreeClass,
    FourClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SentimentLabel {
    VeryNegative,
    Negative,
    Neutral,
    Positive,
    VeryPositive,
}

const THREE: [SentimentLabel; 3] = [
    SentimentLabel::Negative,
    SentimentLabel::Neutral,
    SentimentLabel::Positive,
];
const FOUR: [SentimentLabel; 4] = [
    SentimentLabel::VeryNegative,
    SentimentLabel::Negative,
    SentimentLabel::Positive,
    SentimentLabel::VeryPositive,
];

impl LabelScheme {
    /// Classes in canonical order.
    pub fn classes(self) -> &'static [SentimentLabel] {
        match self {
            LabelScheme::ThreeClass => &THREE,
            LabelScheme::FourClass => &FOUR,
        }
    }

    pub fn num_classes(self) -> usize {
        self.classes().len()
    }

    /// Canonical position of `label`, or `None` if it is not valid here.
    pub fn index_of(self, label: SentimentLabel) -> Option<usize> {
        self.classes().iter().position(|&c| c == label)
    }

    pub fn contains(self, label: SentimentLabel) -> bool {
        self.index_of(label).is_some()
    }

    /// Parses a label token (case-insensitive) and checks it belongs here.
    pub fn parse_label(self, token: &str) -> Option<SentimentLabel> {
        SentimentLabel::from_token(token).filter(|&l| self.contains(l))
    }

    pub fn name(self) -> &'static str {
        match self {
            LabelScheme::ThreeClass => "three-class",
            LabelScheme::FourClass => "four-class",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "three" | "three-class" | "3" => Some(LabelScheme::ThreeClass),
            "four" | "four-class" | "4" => Some(LabelScheme::FourClass),
            _ => None,
        }
    }
}

impl fmt::Display for LabelScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl SentimentLabel {
    /// Short file token: `vneg`, `neg`, `neu`, `pos`, `vpos`.
    pub fn token(self) -> &'static str {
        match self {
            SentimentLabel::VeryNegative => "vneg",
            SentimentLabel::Negative => "neg",
            SentimentLabel::Neutral => "neu",
            SentimentLabel::Positive => "pos",
            SentimentLabel::VeryPositive => "vpos",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        let t = token.trim();
        [
            SentimentLabel::VeryNegative,
            SentimentLabel::Negative,
            SentimentLabel::Neutral,
            SentimentLabel::Positive,
            SentimentLabel::VeryPositive,
        ]
        .into_iter()
        .find(|l| l.token().eq_ignore_ascii_case(t))
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSentence {
    pub id: String,
    pub text: String,
    pub label: SentimentLabel,
    pub language: String,
}

impl LabeledSentence {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        label: SentimentLabel,
        language: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            label,
            language: language.into(),
        }
    }
}

/// An ordered, validated collection of sentences sharing one label scheme.
///
/// Sentence order is the input order and is what seeded sampling indexes into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    name: String,
    scheme: LabelScheme,
    sentences: Vec<LabeledSentence>,
}

impl Dataset {
    /// Validates and builds a dataset. Texts are trimmed of surrounding
    /// whitespace; nothing else is normalized.
    pub fn new(
        name: impl Into<String>,
        scheme: LabelScheme,
        sentences: Vec<LabeledSentence>,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(sentences.len());
        for mut s in sentences {
            if !scheme.contains(s.label) {
                return Err(Error::LabelOutsideScheme {
                    label: s.label.token(),
                    scheme: scheme.name(),
                });
            }
            let trimmed = s.text.trim();
            if trimmed.is_empty() {
                return Err(Error::BlankText);
            }
            if trimmed.len() != s.text.len() {
                s.text = trimmed.to_string();
            }
            if !seen.insert(s.id.clone()) {
                return Err(Error::DuplicateId(s.id));
            }
            out.push(s);
        }
        Ok(Self {
            name: name.into(),
            scheme,
            sentences: out,
        })
    }

    pub fn empty(name: impl Into<String>, scheme: LabelScheme) -> Self {
        Self {
            name: name.into(),
            scheme,
            sentences: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn scheme(&self) -> LabelScheme {
        self.scheme
    }

    pub fn sentences(&self) -> &[LabeledSentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn into_sentences(self) -> Vec<LabeledSentence> {
        self.sentences
    }

    /// Indices of the sentences labeled `label`, in dataset order.
    pub fn indices_of(&self, label: SentimentLabel) -> Vec<usize> {
        self.sentences
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == label)
            .map(|(i, _)| i)
            .collect()
    }

    /// Per-class counts in canonical order.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.scheme.num_classes()];
        for s in &self.sentences {
            // Labels were validated against the scheme on construction.
            counts[self.scheme.index_of(s.label).unwrap_or(0)] += 1;
        }
        counts
    }

    /// Replaces the text of every sentence whose id appears in `replacement`.
    /// This is the hook for externally morpheme-split text.
    pub fn with_replaced_text<F>(&self, mut replacement: F) -> Result<Self>
    where
        F: FnMut(&str) -> Option<String>,
    {
        let sentences = self
            .sentences
            .iter()
            .map(|s| {
                let mut s = s.clone();
                if let Some(t) = replacement(&s.id) {
                    s.text = t;
                }
                s
            })
            .collect();
        Dataset::new(self.name.clone(), self.scheme, sentences)
    }
}

/// Class counts and fractions of a dataset, in canonical class order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution {
    pub scheme: LabelScheme,
    pub counts: Vec<usize>,
    pub total: usize,
}

impl ClassDistribution {
    pub fn fraction(&self, label: SentimentLabel) -> f64 {
        match self.scheme.index_of(label) {
            Some(i) => self.counts[i] as f64 / self.total as f64,
            None => 0.0,
        }
    }

    pub fn count(&self, label: SentimentLabel) -> usize {
        self.scheme.index_of(label).map_or(0, |i| self.counts[i])
    }

    pub fn fractions(&self) -> impl Iterator<Item = (SentimentLabel, f64)> + '_ {
        self.scheme
            .classes()
            .iter()
            .zip(&self.counts)
            .map(move |(&l, &c)| (l, c as f64 / self.total as f64))
    }
}

pub fn class_distribution(d: &Dataset) -> Result<ClassDistribution> {
    if d.is_empty() {
        return Err(Error::EmptyDataset(d.name.clone()));
    }
    Ok(ClassDistribution {
        scheme: d.scheme,
        counts: d.class_counts(),
        total: d.len(),
    })
}

/// Stratified split into `(train, test)`.
///
/// Every class that occurs needs at least two sentences. Each class puts
/// `round(test_fraction * n)` sentences into test, clamped to `1..=n-1`.
/// Both halves keep the input order.
pub fn split_dataset(d: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid("test_fraction", "must lie in (0, 1)"));
    }
    let mut in_test = alloc::vec![false; d.len()];
    for (ci, &class) in d.scheme.classes().iter().enumerate() {
        let mut members = d.indices_of(class);
        let n = members.len();
        if n == 0 {
            continue;
        }
        if n < 2 {
            return Err(Error::ClassTooSmall {
                class,
                count: n,
                required: 2,
            });
        }
        let wanted = libm::round(test_fraction * n as f64) as usize;
        let n_test = wanted.clamp(1, n - 1);
        let mut rng = rng::seeded(seed, ci as u64);
        members.shuffle(&mut rng);
        for &i in &members[..n_test] {
            in_test[i] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (s, t) in d.sentences.iter().zip(in_test) {
        if t {
            test.push(s.clone());
        } else {
            train.push(s.clone());
        }
    }
    let name = |suffix: &str| alloc::format!("{}.{}", d.name, suffix);
    Ok((
        Dataset {
            name: name("train"),
            scheme: d.scheme,
            sentences: train,
        },
        Dataset {
            name: name("test"),
            scheme: d.scheme,
            sentences: test,
        },
    ))
}

/// Emoji codepoint sequences mapped to three-class sentiment labels.
///
/// Variation selectors (U+FE0E, U+FE0F) are ignored on both sides, so `❤`
/// and `❤️` are the same emoji.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmojiMap {
    // Sorted longest key first so matching is greedy.
    entries: Vec<(Vec<char>, SentimentLabel)>,
}

fn is_variation_selector(c: char) -> bool {
    matches!(c, '\u{FE0E}' | '\u{FE0F}')
}

impl EmojiMap {
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, SentimentLabel)>,
        S: AsRef<str>,
    {
        let mut out: Vec<(Vec<char>, SentimentLabel)> = Vec::new();
        for (emoji, label) in entries {
            let key: Vec<char> = emoji
                .as_ref()
                .trim()
                .chars()
                .filter(|&c| !is_variation_selector(c))
                .collect();
            if key.is_empty() {
                return Err(Error::invalid("emoji", "empty emoji key"));
            }
            if !LabelScheme::ThreeClass.contains(label) {
                return Err(Error::LabelOutsideScheme {
                    label: label.token(),
                    scheme: LabelScheme::ThreeClass.name(),
                });
            }
            if out.iter().any(|(k, _)| *k == key) {
                return Err(Error::DuplicateEntry(key.into_iter().collect()));
            }
            out.push((key, label));
        }
        if out.is_empty() {
            return Err(Error::invalid("emoji map", "no entries"));
        }
        out.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        Ok(Self { entries: out })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries as `(emoji, label)`, without variation selectors.
    pub fn entries(&self) -> impl Iterator<Item = (String, SentimentLabel)> + '_ {
        self.entries
            .iter()
            .map(|(k, l)| (k.iter().collect::<String>(), *l))
    }

    /// Every mapped emoji occurrence in `text` as `(char range, label)`,
    /// where the range indexes the text with variation selectors removed.
    fn scan(&self, chars: &[char]) -> Vec<(core::ops::Range<usize>, SentimentLabel)> {
        let mut found = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let hit = self
                .entries
                .iter()
                .find(|(k, _)| chars[i..].starts_with(k));
            match hit {
                Some((k, label)) => {
                    found.push((i..i + k.len(), *label));
                    i += k.len();
                }
                None => i += 1,
            }
        }
        found
    }

    /// Labels of every mapped emoji occurrence in `text`, in order.
    pub fn labels_in(&self, text: &str) -> Vec<SentimentLabel> {
        let chars: Vec<char> = text.chars().filter(|&c| !is_variation_selector(c)).collect();
        self.scan(&chars).into_iter().map(|(_, l)| l).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EmojiOptions {
    /// Remove mapped emojis from the emitted text.
    pub strip_emojis: bool,
}

/// Counts reported by [`apply_emoji_map`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EmojiReport {
    pub kept: usize,
    pub dropped_unmapped: usize,
    pub dropped_conflicting: usize,
    /// Only nonzero when stripping leaves nothing behind.
    pub dropped_empty: usize,
}

/// Labels raw `(id, text)` sentences by the emojis they contain.
///
/// A sentence is kept when it has at least one mapped emoji and all of its
/// mapped emojis agree on one class; otherwise it is dropped and counted.
pub fn apply_emoji_map<I, S, T>(
    name: impl Into<String>,
    language: &str,
    raw: I,
    map: &EmojiMap,
    options: EmojiOptions,
) -> Result<(Dataset, EmojiReport)>
where
    I: IntoIterator<Item = (S, T)>,
    S: Into<String>,
    T: AsRef<str>,
{
    if map.is_empty() {
        return Err(Error::invalid("emoji map", "no entries"));
    }
    let mut report = EmojiReport::default();
    let mut out = Vec::new();
    for (id, text) in raw {
        let chars: Vec<char> = text
            .as_ref()
            .chars()
            .filter(|&c| !is_variation_selector(c))
            .collect();
        let hits = map.scan(&chars);
        let Some(&(_, first)) = hits.first() else {
            report.dropped_unmapped += 1;
            continue;
        };
        if hits.iter().any(|(_, l)| *l != first) {
            report.dropped_conflicting += 1;
            continue;
        }
        let text = if options.strip_emojis {
            let mut keep = alloc::vec![true; chars.len()];
            for (range, _) in &hits {
                keep[range.clone()].iter_mut().for_each(|k| *k = false);
            }
            let stripped: String = chars
                .iter()
                .zip(keep)
                .filter(|(_, k)| *k)
                .map(|(c, _)| *c)
                .collect();
            if stripped.trim().is_empty() {
                report.dropped_empty += 1;
                continue;
            }
            stripped
        } else {
            text.as_ref().to_string()
        };
        report.kept += 1;
        out.push(LabeledSentence::new(id, text, first, language));
    }
    let dataset = Dataset::new(name, LabelScheme::ThreeClass, out)?;
    Ok((dataset, report))
}
