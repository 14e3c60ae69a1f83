//! Siamese Bi-LSTM sentence encoders that place sentences of a resource-poor
//! language and a resource-rich language into one shared sentiment space.
//!
//! The pipeline is:
//!
//! 1. [`corpus`]: labeled sentence datasets, label schemes, emoji labeling,
//!    stratified splits.
//! 2. [`featurizer`]: sentences become sequences of character-trigram ids
//!    over a frozen [`featurizer::TrigramVocabulary`].
//! 3. [`encoder`]: one shared parameter record drives an embedding lookup,
//!    a forward and a backward LSTM, and a ReLU dense projection.
//! 4. [`trainer`]: cross-lingual pair sampling, the margin contrastive loss,
//!    exact backpropagation through time, and the SGD loop.
//! 5. [`classifier`]: per-class reference sets sampled from the rich language
//!    and similarity-based classification with evaluation reports.
//! 6. [`baseline`]: averaged word vectors with multinomial logistic regression.
//!
//! [`synthetic`] builds small seeded corpora with a planted cross-lingual
//! sentiment signal, used by tests and demos.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the run
//! configuration, and the command line live in the `snasa` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod baseline;
pub mod classifier;
pub mod corpus;
pub mod encoder;
mod error;
pub mod featurizer;
mod linalg;
pub(crate) mod rng;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};

pub use classifier::{ClassificationPolicy, EvalReport, ReferenceSet};
pub use corpus::{Dataset, LabelScheme, LabeledSentence, SentimentLabel};
pub use encoder::{EncoderDims, Model, SentimentEmbedding, SiameseEncoderParams};
pub use featurizer::{TrigramSequence, TrigramVocabulary, VocabOptions};
pub use trainer::{Margin, TrainConfig, TrainingLog};
