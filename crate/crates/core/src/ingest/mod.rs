//! Building datasets: CSV tables, text corpora and seeded synthetic draws.
//!
//! Every randomized routine draws from a `ChaCha8Rng` seeded with
//! `seed_from_u64(seed)`; standard normals come from `rand_distr`'s ziggurat
//! sampler. Identical seeds give identical outputs.

mod synth;
mod table;
mod text;

pub use synth::{synth_gaussian, train_test_split, train_test_indices, weather_signal};
pub use table::{load_csv, read_csv, write_csv, CsvColumns, CsvSchema};
pub use text::{
    build_tfidf, build_tfidf_limited, derive_keyword_signal, keyword_presence, text_dataset, tokenize,
    KeywordSignal, TextCorpus, TfidfModel,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
