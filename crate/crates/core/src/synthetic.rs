//! Seeded toy bilingual corpora.
//!
//! Two invented languages with disjoint vocabularies. Positive and negative
//! sentences carry a sentiment marker word (`gud`/`bad` in language A,
//! `bon`/`mal` in language B) among random filler words; neutral sentences
//! are fillers only. Useful for end-to-end checks where the right answer is
//! known by construction.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::corpus::{Dataset, LabelScheme, LabeledSentence, SentimentLabel};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyLanguage {
    A,
    B,
}

const FILLERS_A: [&str; 12] = [
    "ta", "kemi", "loru", "sin", "pafo", "nek", "rilu", "mo", "vesa", "kul", "hine", "tapo",
];
const FILLERS_B: [&str; 12] = [
    "xe", "quo", "zir", "wyx", "jov", "yth", "cez", "oqu", "ivy", "wez", "zuq", "xiw",
];

/// Shortest and longest filler count per sentence.
const MIN_FILLERS: usize = 1;
const MAX_FILLERS: usize = 3;

impl ToyLanguage {
    pub fn name(self) -> &'static str {
        match self {
            ToyLanguage::A => "toy-a",
            ToyLanguage::B => "toy-b",
        }
    }

    pub fn fillers(self) -> &'static [&'static str] {
        match self {
            ToyLanguage::A => &FILLERS_A,
            ToyLanguage::B => &FILLERS_B,
        }
    }

    /// Marker word for a class, `None` for neutral.
    pub fn marker(self, label: SentimentLabel) -> Option<&'static str> {
        match (self, label) {
            (ToyLanguage::A, SentimentLabel::Positive) => Some("gud"),
            (ToyLanguage::A, SentimentLabel::Negative) => Some("bad"),
            (ToyLanguage::B, SentimentLabel::Positive) => Some("bon"),
            (ToyLanguage::B, SentimentLabel::Negative) => Some("mal"),
            _ => None,
        }
    }

    /// Every word the language can produce.
    pub fn words(self) -> Vec<&'static str> {
        let mut w: Vec<&'static str> = self.fillers().to_vec();
        for l in LabelScheme::ThreeClass.classes() {
            w.extend(self.marker(*l));
        }
        w
    }

    fn stream(self) -> u64 {
        match self {
            ToyLanguage::A => 200,
            ToyLanguage::B => 201,
        }
    }
}

fn sentence(lang: ToyLanguage, label: SentimentLabel, rng: &mut rng::Rng) -> String {
    let n = rng.gen_range(MIN_FILLERS..=MAX_FILLERS);
    let mut words: Vec<&str> = (0..n)
        .map(|_| *lang.fillers().choose(rng).unwrap_or(&"x"))
        .collect();
    if let Some(m) = lang.marker(label) {
        let at = rng.gen_range(0..=words.len());
        words.insert(at, m);
    }
    words.join(" ")
}

/// `per_class` sentences of each three-class label, classes interleaved.
/// Ids are `{id_prefix}{n}`.
pub fn generate(lang: ToyLanguage, per_class: usize, seed: u64, id_prefix: &str) -> Result<Dataset> {
    if per_class == 0 {
        return Err(Error::invalid("per_class", "must be at least 1"));
    }
    let mut rng = rng::seeded(seed, lang.stream());
    let classes = LabelScheme::ThreeClass.classes();
    let mut rows = Vec::with_capacity(per_class * classes.len());
    for i in 0..per_class {
        for (ci, &label) in classes.iter().enumerate() {
            let id = format!("{id_prefix}{}", i * classes.len() + ci);
            rows.push(LabeledSentence::new(id, sentence(lang, label, &mut rng), label, lang.name()));
        }
    }
    Dataset::new(lang.name(), LabelScheme::ThreeClass, rows)
}
