//! Two-tier semantic lexicon: predicate definitions and grammatical
//! relations with ranked relation-type preferences.

use indexmap::IndexMap;
use thiserror::Error;

use crate::cg::ConceptualGraph;
use crate::ontology::{TypeHierarchy, TypeName};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexiconError {
    #[error("word '{0}' is already defined")]
    DuplicateWord(String),
    #[error("definition of '{0}' has no head concept")]
    MissingHead(String),
    #[error("grammatical relation '{0}' is already defined")]
    DuplicateGramRel(String),
    #[error("grammatical relation '{0}' has no preferences")]
    EmptyPreferences(String),
    #[error("unknown relation type '{0}'")]
    UnknownRelationType(String),
    #[error("relation type '{pref}' is listed twice for '{gramrel}'")]
    DuplicatePreference { gramrel: String, pref: String },
    #[error("unknown word '{0}'")]
    UnknownWord(String),
    #[error("unknown grammatical relation '{0}'")]
    UnknownGramRel(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateEntry {
    pub word: String,
    pub definition: ConceptualGraph,
}

impl PredicateEntry {
    pub fn head_type(&self) -> &TypeName {
        &self
            .definition
            .head_concept()
            .expect("lexicon entries always have a head")
            .ctype
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GramRelEntry {
    pub name: String,
    /// Index 0 is the highest priority.
    pub prefs: Vec<TypeName>,
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: IndexMap<String, PredicateEntry>,
    gramrels: IndexMap<String, GramRelEntry>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_entry(
        &mut self,
        word: &str,
        definition: ConceptualGraph,
    ) -> Result<(), LexiconError> {
        if definition.head().is_none() {
            return Err(LexiconError::MissingHead(word.to_string()));
        }
        if self.entries.contains_key(word) {
            return Err(LexiconError::DuplicateWord(word.to_string()));
        }
        self.entries.insert(
            word.to_string(),
            PredicateEntry {
                word: word.to_string(),
                definition,
            },
        );
        Ok(())
    }

    pub fn add_gramrel(
        &mut self,
        name: &str,
        prefs: &[&str],
        relations: &TypeHierarchy,
    ) -> Result<(), LexiconError> {
        if self.gramrels.contains_key(name) {
            return Err(LexiconError::DuplicateGramRel(name.to_string()));
        }
        if prefs.is_empty() {
            return Err(LexiconError::EmptyPreferences(name.to_string()));
        }
        let mut out: Vec<TypeName> = Vec::with_capacity(prefs.len());
        for p in prefs {
            let t = relations
                .get(p)
                .ok_or_else(|| LexiconError::UnknownRelationType(p.to_string()))?;
            if out.contains(t) {
                return Err(LexiconError::DuplicatePreference {
                    gramrel: name.to_string(),
                    pref: p.to_string(),
                });
            }
            out.push(t.clone());
        }
        self.gramrels.insert(
            name.to_string(),
            GramRelEntry {
                name: name.to_string(),
                prefs: out,
            },
        );
        Ok(())
    }

    pub fn lookup_entry(&self, word: &str) -> Result<&PredicateEntry, LexiconError> {
        self.entries
            .get(word)
            .ok_or_else(|| LexiconError::UnknownWord(word.to_string()))
    }

    pub fn lookup_gramrel(&self, name: &str) -> Result<&GramRelEntry, LexiconError> {
        self.gramrels
            .get(name)
            .ok_or_else(|| LexiconError::UnknownGramRel(name.to_string()))
    }

    pub fn entries(&self) -> impl Iterator<Item = &PredicateEntry> {
        self.entries.values()
    }

    pub fn gramrels(&self) -> impl Iterator<Item = &GramRelEntry> {
        self.gramrels.values()
    }
}
