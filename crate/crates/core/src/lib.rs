//! Speculative decoding at desk scale.
//!
//! Character-level n-gram models play both the target and the drafter role.
//! Because every next-token distribution is available in closed form, the
//! draft/verify/accept loop in [`specdec`] can be checked exactly rather than
//! statistically. Around it sit the drafter training recipe ([`ngram`]:
//! pretrain then finetune), self-distillation ([`distill`]) and the
//! measurement harness ([`bench`]).

pub mod bench;
pub mod corpus;
pub mod dist;
pub mod distill;
pub mod error;
pub mod model_io;
pub mod ngram;
pub mod rng;
pub mod specdec;
pub mod stats;
pub mod synth;
pub mod vocab;

pub use corpus::{Corpus, Record};
pub use dist::{apply_temperature, argmax, sample, Distribution};
pub use error::{Error, Result};
pub use ngram::NGramModel;
pub use rng::{SamplerConfig, SessionRng};
pub use specdec::{decode_speculative, Draft, SpecConfig, VerificationOutcome};
pub use stats::DecodeStats;
pub use vocab::{TokenId, Vocabulary, BOS, EOS, UNK};
