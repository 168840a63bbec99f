//! An in-memory RDF triple store built on compressed bit structures.
//!
//! Triples are split by predicate: each predicate's subject/object pairs
//! become one sparse binary matrix, stored as a rank-navigated k²-tree
//! ([`k2tree::K2Tree`]). A shared-prefix [`dict::Dictionary`] maps terms to
//! matrix coordinates, and two per-entity predicate indexes
//! ([`predindex::PredIndex`]) answer "which matrices could match?" so
//! predicate-unbound patterns skip most trees. On top of that,
//! [`store::TripleStore`] resolves all eight triple patterns and evaluates
//! two-pattern joins ([`joins`]) with chain, independent, and interactive
//! strategies.
//!
//! The store is immutable once built: build (or [`store::TripleStore::load`])
//! first, then query. Everything operates in place on the compressed form —
//! there is no decompression step and no per-query allocation beyond the
//! result set.
//!
//! ```
//! use k2triples::k2tree::K2Config;
//! use k2triples::store::TriplePattern;
//! use k2triples::store::TripleStore;
//!
//! let t = |s: &str, p: &str, o: &str| (s.to_string(), p.to_string(), o.to_string());
//! let store = TripleStore::from_str_triples(
//!     &[
//!         t("http://e/alice", "http://e/knows", "http://e/bob"),
//!         t("http://e/bob", "http://e/knows", "http://e/carol"),
//!         t("http://e/alice", "http://e/likes", "\"tea\""),
//!     ],
//!     K2Config::default(),
//! )
//! .unwrap();
//!
//! // Who does alice know?
//! let alice = store.dict().subject_id("http://e/alice");
//! let knows = store.dict().predicate_id("http://e/knows");
//! let rows = store.resolve(TriplePattern::new(alice, knows, None)).unwrap();
//! let names: Vec<&str> = rows
//!     .iter()
//!     .map(|&(_, _, o)| store.dict().object_term(o).unwrap())
//!     .collect();
//! assert_eq!(names, ["http://e/bob"]);
//! ```
//!
//! The accompanying book (`book/` in the source tree) walks through each
//! layer with runnable examples; its code blocks are compiled and executed
//! as part of this crate's test suite.

pub mod bitseq;
pub mod dac;
pub mod dict;
mod error;
pub mod ingest;
pub mod joins;
pub mod k2tree;
pub mod packed;
pub mod predindex;
pub mod store;
#[cfg(test)]
pub(crate) mod testdata;
mod wire;

pub use error::{Error, Result};

/// Runs every Rust code block in the book as a doctest, keeping the
/// chapters honest against the current API.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(quickstart, "../../../book/src/quickstart.md");
    chapter!(bit_sequences, "../../../book/src/bit-sequences.md");
    chapter!(dac, "../../../book/src/dac.md");
    chapter!(matrix_trees, "../../../book/src/matrix-trees.md");
    chapter!(dictionary, "../../../book/src/dictionary.md");
    chapter!(predicate_indexes, "../../../book/src/predicate-indexes.md");
    chapter!(triple_patterns, "../../../book/src/triple-patterns.md");
    chapter!(joins, "../../../book/src/joins.md");
    chapter!(store_files, "../../../book/src/store-files.md");
    chapter!(cli, "../../../book/src/cli.md");
}
