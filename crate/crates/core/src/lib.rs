//! Resolution of grammatical links into conceptual-graph chains.
//!
//! A [`KnowledgeBase`] holds a concept-type tree, a relation-type tree,
//! reference models attached to concept types, and a semantic lexicon. Given
//! two predicates and the grammatical relation between them,
//! [`resolve_link`] searches the predicates' models for a chain of
//! conceptual relations connecting their head concepts. This is how
//! metonymic phrases such as "angioplasty of the stenosis" get their
//! concept-level reading: the chain goes through the artery segment that
//! the stenosis involves.

pub mod cg;
pub mod kb;
pub mod lexicon;
pub mod ontology;
pub mod resolver;

pub use cg::{
    enumerate_paths, join_chains, render_linear, restrict, Chain, ConceptNode, ConceptualGraph,
    Direction, ReferenceModel, DEFAULT_MAX_REL,
};
pub use kb::{parse_kb, validate_kb, Diagnostic, KnowledgeBase, Severity};
pub use lexicon::{GramRelEntry, Lexicon, PredicateEntry};
pub use ontology::{Ontology, TypeHierarchy, TypeName};
pub use resolver::{
    resolve_link, resolve_sentence, Method, ResolutionResult, ResolveError, ResolveOptions, Triple,
};
