//! Concept and relation type trees, plus the registry of reference models
//! attached to concept types.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

use crate::cg::ReferenceModel;

/// An interned type name. Cheap to clone, compared by string content.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeName(Arc<str>);

impl TypeName {
    pub fn new(name: &str) -> Self {
        TypeName(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for TypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for TypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TypeName {
    fn from(s: &str) -> Self {
        TypeName::new(s)
    }
}

impl std::borrow::Borrow<str> for TypeName {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for TypeName {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OntologyError {
    #[error("duplicate type '{0}'")]
    DuplicateType(String),
    #[error("unknown parent type '{0}'")]
    UnknownParent(String),
    #[error("a root type already exists ('{existing}'), cannot add '{name}' as root")]
    SecondRoot { existing: String, name: String },
    #[error("unknown type '{0}'")]
    UnknownType(String),
    #[error("types '{0}' and '{1}' are not comparable")]
    Incomparable(String, String),
    #[error("model head has type '{head}' but the model is registered for '{expected}'")]
    HeadTypeMismatch { expected: String, head: String },
    #[error("type '{0}' already has a reference model")]
    DuplicateModel(String),
}

#[derive(Debug, Clone)]
struct TypeNode {
    name: TypeName,
    parent: Option<usize>,
    depth: usize,
}

/// A rooted tree of type names ordered by subsumption.
///
/// Types are kept in declaration order, which is always a topological order
/// (parents precede their children).
#[derive(Debug, Clone, Default)]
pub struct TypeHierarchy {
    nodes: Vec<TypeNode>,
    index: HashMap<TypeName, usize>,
    root: Option<usize>,
}

impl TypeHierarchy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_type(&mut self, name: &str, parent: Option<&str>) -> Result<(), OntologyError> {
        let key = TypeName::new(name);
        if self.index.contains_key(&key) {
            return Err(OntologyError::DuplicateType(name.to_string()));
        }
        let (parent_idx, depth) = match parent {
            None => {
                if let Some(r) = self.root {
                    return Err(OntologyError::SecondRoot {
                        existing: self.nodes[r].name.to_string(),
                        name: name.to_string(),
                    });
                }
                (None, 0)
            }
            Some(p) => {
                let idx = *self
                    .index
                    .get(p)
                    .ok_or_else(|| OntologyError::UnknownParent(p.to_string()))?;
                (Some(idx), self.nodes[idx].depth + 1)
            }
        };
        let idx = self.nodes.len();
        self.nodes.push(TypeNode {
            name: key.clone(),
            parent: parent_idx,
            depth,
        });
        self.index.insert(key, idx);
        if parent_idx.is_none() {
            self.root = Some(idx);
        }
        Ok(())
    }

    pub fn root(&self) -> Option<&TypeName> {
        self.root.map(|r| &self.nodes[r].name)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// Declared names in declaration order.
    pub fn names(&self) -> impl Iterator<Item = &TypeName> {
        self.nodes.iter().map(|n| &n.name)
    }

    /// The canonical interned name, if declared.
    pub fn get(&self, name: &str) -> Option<&TypeName> {
        self.index.get(name).map(|&i| &self.nodes[i].name)
    }

    pub fn parent(&self, name: &str) -> Result<Option<&TypeName>, OntologyError> {
        let i = self.idx(name)?;
        Ok(self.nodes[i].parent.map(|p| &self.nodes[p].name))
    }

    /// `name` followed by each of its ancestors up to the root.
    pub fn ancestors(&self, name: &str) -> Result<Vec<&TypeName>, OntologyError> {
        let mut cur = Some(self.idx(name)?);
        let mut out = Vec::new();
        while let Some(i) = cur {
            out.push(&self.nodes[i].name);
            cur = self.nodes[i].parent;
        }
        Ok(out)
    }

    fn idx(&self, name: &str) -> Result<usize, OntologyError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| OntologyError::UnknownType(name.to_string()))
    }

    /// `a ≤ b`: `b` lies on the parent walk from `a`, inclusive.
    pub fn is_subtype(&self, a: &str, b: &str) -> Result<bool, OntologyError> {
        let mut ia = self.idx(a)?;
        let ib = self.idx(b)?;
        let target_depth = self.nodes[ib].depth;
        if self.nodes[ia].depth < target_depth {
            return Ok(false);
        }
        while self.nodes[ia].depth > target_depth {
            // depth > 0 implies a parent
            ia = self.nodes[ia].parent.expect("non-root has a parent");
        }
        Ok(ia == ib)
    }

    pub fn comparable(&self, a: &str, b: &str) -> Result<bool, OntologyError> {
        Ok(self.is_subtype(a, b)? || self.is_subtype(b, a)?)
    }

    /// The narrower of two comparable types.
    pub fn more_specific(&self, a: &str, b: &str) -> Result<TypeName, OntologyError> {
        if self.is_subtype(a, b)? {
            Ok(self.nodes[self.idx(a)?].name.clone())
        } else if self.is_subtype(b, a)? {
            Ok(self.nodes[self.idx(b)?].name.clone())
        } else {
            Err(OntologyError::Incomparable(a.to_string(), b.to_string()))
        }
    }
}

/// At most one own reference model per concept type, in registration order.
#[derive(Debug, Clone, Default)]
pub struct ModelRegistry {
    models: IndexMap<TypeName, ReferenceModel>,
}

impl ModelRegistry {
    pub fn get(&self, t: &str) -> Option<&ReferenceModel> {
        self.models.get(t)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TypeName, &ReferenceModel)> {
        self.models.iter()
    }
}

/// Domain knowledge: the concept-type tree, the relation-type tree and the
/// reference models attached to concept types.
#[derive(Debug, Clone, Default)]
pub struct Ontology {
    pub concepts: TypeHierarchy,
    pub relations: TypeHierarchy,
    models: ModelRegistry,
}

impl Ontology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn models(&self) -> &ModelRegistry {
        &self.models
    }

    pub fn register_model(&mut self, t: &str, model: ReferenceModel) -> Result<(), OntologyError> {
        let name = self
            .concepts
            .get(t)
            .cloned()
            .ok_or_else(|| OntologyError::UnknownType(t.to_string()))?;
        let head = model.head_type();
        if head.as_str() != t {
            return Err(OntologyError::HeadTypeMismatch {
                expected: t.to_string(),
                head: head.to_string(),
            });
        }
        if self.models.models.contains_key(t) {
            return Err(OntologyError::DuplicateModel(t.to_string()));
        }
        self.models.models.insert(name, model);
        Ok(())
    }

    /// Models of `t`, then of its ancestors, nearest first; types without an
    /// own model are skipped.
    pub fn inherited_models(&self, t: &str) -> Result<Vec<&ReferenceModel>, OntologyError> {
        Ok(self
            .concepts
            .ancestors(t)?
            .into_iter()
            .filter_map(|a| self.models.get(a.as_str()))
            .collect())
    }
}
