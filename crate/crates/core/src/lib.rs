//! Ontology merging against a WordNet-format lexical database.
//!
//! The pipeline resolves each input ontology against the database, merges the
//! two hierarchies from their pairwise relation matrix, places concepts the
//! database does not know by phrase hit counts, and writes enrichment
//! overlays so later runs know them.

pub mod conflict;
pub mod enrich;
pub mod eval;
pub mod merge;
pub mod owl;
pub mod pipeline;
pub mod relations;
pub mod text;
pub mod webstats;
pub mod wordnet;

pub use owl::{parse_owl, serialize_owl, validate_ontology, Ontology};
pub use relations::{classify, SemanticRelation};
pub use wordnet::{load_knowledge_base, KnowledgeBase};
