//! Conceptual graphs: typed concept nodes joined by binary relation nodes,
//! linear chains extracted from them, and the bracket notation used to
//! print chains.

use std::fmt;

use thiserror::Error;

use crate::ontology::{Ontology, OntologyError, TypeHierarchy, TypeName};

/// Default bound on the number of relations in an enumerated path.
pub const DEFAULT_MAX_REL: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CgError {
    #[error("concept index {0} out of range")]
    InvalidIndex(usize),
    #[error("relation '{0}' would connect a concept to itself")]
    SelfLoop(String),
    #[error("variable '{0}' already names a concept")]
    DuplicateVariable(String),
    #[error("graph has no head concept")]
    MissingHead,
    #[error("unknown concept type '{0}'")]
    UnknownConceptType(String),
    #[error("unknown relation type '{0}'")]
    UnknownRelationType(String),
    #[error("cannot join chains: '{0}' and '{1}' are not comparable")]
    IncomparableJunction(String, String),
    #[error("'{to}' is not a subtype of '{from}'")]
    NotASubtype { from: String, to: String },
    #[error(transparent)]
    Ontology(#[from] OntologyError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConceptNode {
    pub ctype: TypeName,
    /// Individual marker, e.g. a proper name. Graph-local variables are kept
    /// by the owning [`ConceptualGraph`], not here.
    pub referent: Option<String>,
}

impl ConceptNode {
    pub fn new(ctype: impl Into<TypeName>) -> Self {
        ConceptNode {
            ctype: ctype.into(),
            referent: None,
        }
    }

    pub fn with_referent(ctype: impl Into<TypeName>, referent: impl Into<String>) -> Self {
        ConceptNode {
            ctype: ctype.into(),
            referent: Some(referent.into()),
        }
    }
}

impl fmt::Display for ConceptNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.referent {
            Some(r) => write!(f, "[{}:{}]", self.ctype, r),
            None => write!(f, "[{}]", self.ctype),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationNode {
    pub rtype: TypeName,
    pub source: usize,
    pub target: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConceptualGraph {
    concepts: Vec<ConceptNode>,
    variables: Vec<Option<String>>,
    relations: Vec<RelationNode>,
    head: Option<usize>,
}

impl ConceptualGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a concept, optionally naming it with a graph-local variable.
    /// A variable names at most one concept.
    pub fn add_concept(&mut self, node: ConceptNode, var: Option<&str>) -> Result<usize, CgError> {
        if let Some(v) = var {
            if self.concept_by_var(v).is_some() {
                return Err(CgError::DuplicateVariable(v.to_string()));
            }
        }
        self.concepts.push(node);
        self.variables.push(var.map(str::to_string));
        Ok(self.concepts.len() - 1)
    }

    pub fn add_relation(
        &mut self,
        rtype: impl Into<TypeName>,
        source: usize,
        target: usize,
    ) -> Result<usize, CgError> {
        let rtype = rtype.into();
        self.check(source)?;
        self.check(target)?;
        if source == target {
            return Err(CgError::SelfLoop(rtype.to_string()));
        }
        self.relations.push(RelationNode {
            rtype,
            source,
            target,
        });
        Ok(self.relations.len() - 1)
    }

    pub fn set_head(&mut self, idx: usize) -> Result<(), CgError> {
        self.check(idx)?;
        self.head = Some(idx);
        Ok(())
    }

    fn check(&self, idx: usize) -> Result<(), CgError> {
        if idx < self.concepts.len() {
            Ok(())
        } else {
            Err(CgError::InvalidIndex(idx))
        }
    }

    pub fn head(&self) -> Option<usize> {
        self.head
    }

    pub fn head_concept(&self) -> Option<&ConceptNode> {
        self.head.map(|h| &self.concepts[h])
    }

    pub fn concepts(&self) -> &[ConceptNode] {
        &self.concepts
    }

    pub fn concept(&self, idx: usize) -> Option<&ConceptNode> {
        self.concepts.get(idx)
    }

    pub fn concept_mut(&mut self, idx: usize) -> Option<&mut ConceptNode> {
        self.concepts.get_mut(idx)
    }

    pub fn relations(&self) -> &[RelationNode] {
        &self.relations
    }

    pub fn variable(&self, idx: usize) -> Option<&str> {
        self.variables.get(idx).and_then(|v| v.as_deref())
    }

    pub fn concept_by_var(&self, var: &str) -> Option<usize> {
        self.variables
            .iter()
            .position(|v| v.as_deref() == Some(var))
    }

    /// Checks every concept and relation type against the ontology.
    pub fn validate(&self, ontology: &Ontology) -> Result<(), CgError> {
        for c in &self.concepts {
            if !ontology.concepts.contains(c.ctype.as_str()) {
                return Err(CgError::UnknownConceptType(c.ctype.to_string()));
            }
        }
        for r in &self.relations {
            if !ontology.relations.contains(r.rtype.as_str()) {
                return Err(CgError::UnknownRelationType(r.rtype.to_string()));
            }
        }
        Ok(())
    }

    /// Incident arcs of every concept, ordered by relation index.
    fn adjacency(&self) -> Vec<Vec<(usize, usize, Direction)>> {
        let mut adj = vec![Vec::new(); self.concepts.len()];
        for (i, r) in self.relations.iter().enumerate() {
            adj[r.source].push((i, r.target, Direction::Forward));
            adj[r.target].push((i, r.source, Direction::Backward));
        }
        adj
    }

    /// Concepts not reachable from the head when arc direction is ignored.
    /// Empty when the graph has no head.
    pub fn unreachable_from_head(&self) -> Vec<usize> {
        let Some(head) = self.head else {
            return Vec::new();
        };
        let adj = self.adjacency();
        let mut seen = vec![false; self.concepts.len()];
        let mut stack = vec![head];
        seen[head] = true;
        while let Some(c) = stack.pop() {
            for &(_, other, _) in &adj[c] {
                if !seen[other] {
                    seen[other] = true;
                    stack.push(other);
                }
            }
        }
        (0..self.concepts.len()).filter(|&i| !seen[i]).collect()
    }
}

/// A conceptual graph with a mandatory head concept, attached to the head's
/// type in the ontology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceModel {
    graph: ConceptualGraph,
}

impl ReferenceModel {
    pub fn new(graph: ConceptualGraph) -> Result<Self, CgError> {
        if graph.head.is_none() {
            return Err(CgError::MissingHead);
        }
        Ok(ReferenceModel { graph })
    }

    pub fn graph(&self) -> &ConceptualGraph {
        &self.graph
    }

    pub fn head(&self) -> usize {
        self.graph.head.expect("model has a head")
    }

    pub fn head_type(&self) -> &TypeName {
        &self.graph.concepts[self.head()].ctype
    }

    pub fn is_connected(&self) -> bool {
        self.graph.unreachable_from_head().is_empty()
    }
}

/// How a relation arc was traversed when walking a chain left to right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// Arc points from the previous concept to the next one.
    Forward,
    /// Arc points from the next concept back to the previous one.
    Backward,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Step {
    pub rtype: TypeName,
    pub direction: Direction,
    pub concept: ConceptNode,
}

/// A linear conceptual graph: a start concept followed by
/// (relation, direction, concept) steps. A chain with no steps is the
/// "empty" chain produced when two concepts are merged.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chain {
    pub start: ConceptNode,
    pub steps: Vec<Step>,
}

impl Chain {
    pub fn single(concept: ConceptNode) -> Self {
        Chain {
            start: concept,
            steps: Vec::new(),
        }
    }

    /// Number of relations.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn first(&self) -> &ConceptNode {
        &self.start
    }

    pub fn last(&self) -> &ConceptNode {
        self.steps.last().map_or(&self.start, |s| &s.concept)
    }

    pub fn last_mut(&mut self) -> &mut ConceptNode {
        match self.steps.last_mut() {
            Some(s) => &mut s.concept,
            None => &mut self.start,
        }
    }

    pub fn concepts(&self) -> impl Iterator<Item = &ConceptNode> {
        std::iter::once(&self.start).chain(self.steps.iter().map(|s| &s.concept))
    }

    pub fn relation_types(&self) -> impl Iterator<Item = &TypeName> {
        self.steps.iter().map(|s| &s.rtype)
    }

    /// The same chain read from the other end.
    pub fn reversed(&self) -> Chain {
        let concepts: Vec<&ConceptNode> = self.concepts().collect();
        let n = self.steps.len();
        let steps = (0..n)
            .rev()
            .map(|i| Step {
                rtype: self.steps[i].rtype.clone(),
                direction: self.steps[i].direction.flip(),
                concept: concepts[i].clone(),
            })
            .collect();
        Chain {
            start: concepts[n].clone(),
            steps,
        }
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start)?;
        for s in &self.steps {
            match s.direction {
                Direction::Forward => write!(f, "-({})->{}", s.rtype, s.concept)?,
                Direction::Backward => write!(f, "<-({})-{}", s.rtype, s.concept)?,
            }
        }
        Ok(())
    }
}

/// Linear notation: `[Type]` or `[Type:referent]` concepts, `-(rel)->` for
/// arcs traversed forward and `<-(rel)-` for arcs traversed backward.
pub fn render_linear(chain: &Chain) -> String {
    chain.to_string()
}

/// A simple path inside one graph, as concept and relation indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphPath {
    pub concepts: Vec<usize>,
    pub relations: Vec<(usize, Direction)>,
}

impl GraphPath {
    /// Materializes the path as a chain. Variables stay behind in the graph.
    pub fn to_chain(&self, g: &ConceptualGraph) -> Chain {
        Chain {
            start: g.concepts[self.concepts[0]].clone(),
            steps: self
                .relations
                .iter()
                .zip(&self.concepts[1..])
                .map(|(&(r, direction), &c)| Step {
                    rtype: g.relations[r].rtype.clone(),
                    direction,
                    concept: g.concepts[c].clone(),
                })
                .collect(),
        }
    }
}

/// All simple paths from `from` to `to` with at most `max_rel` relations,
/// ignoring arc direction. Paths come out in depth-first order, trying
/// incident relations by ascending relation index.
pub fn simple_paths(
    g: &ConceptualGraph,
    from: usize,
    to: usize,
    max_rel: usize,
) -> Result<Vec<GraphPath>, CgError> {
    g.check(from)?;
    g.check(to)?;
    let adj = g.adjacency();
    let mut out = Vec::new();
    let mut on_path = vec![false; g.concepts.len()];
    let mut path = GraphPath {
        concepts: vec![from],
        relations: Vec::new(),
    };
    on_path[from] = true;
    dfs(&adj, to, max_rel, &mut on_path, &mut path, &mut out);
    Ok(out)
}

fn dfs(
    adj: &[Vec<(usize, usize, Direction)>],
    to: usize,
    max_rel: usize,
    on_path: &mut [bool],
    path: &mut GraphPath,
    out: &mut Vec<GraphPath>,
) {
    let cur = *path.concepts.last().unwrap();
    if cur == to {
        out.push(path.clone());
        return;
    }
    if path.relations.len() == max_rel {
        return;
    }
    for &(rel, next, dir) in &adj[cur] {
        if on_path[next] {
            continue;
        }
        on_path[next] = true;
        path.concepts.push(next);
        path.relations.push((rel, dir));
        dfs(adj, to, max_rel, on_path, path, out);
        path.relations.pop();
        path.concepts.pop();
        on_path[next] = false;
    }
}

pub fn enumerate_paths(
    g: &ConceptualGraph,
    from: usize,
    to: usize,
    max_rel: usize,
) -> Result<Vec<Chain>, CgError> {
    Ok(simple_paths(g, from, to, max_rel)?
        .iter()
        .map(|p| p.to_chain(g))
        .collect())
}

/// Narrows a concept's type; the referent is kept.
pub fn restrict(c: &ConceptNode, t: &str, h: &TypeHierarchy) -> Result<ConceptNode, CgError> {
    if !h.is_subtype(t, c.ctype.as_str())? {
        return Err(CgError::NotASubtype {
            from: c.ctype.to_string(),
            to: t.to_string(),
        });
    }
    Ok(ConceptNode {
        ctype: h.get(t).cloned().unwrap_or_else(|| TypeName::new(t)),
        referent: c.referent.clone(),
    })
}

/// Merges two concepts that denote the same individual: the type is the
/// more specific of the two, and a referent survives if either has one.
pub fn merge_concepts(
    a: &ConceptNode,
    b: &ConceptNode,
    h: &TypeHierarchy,
) -> Result<ConceptNode, CgError> {
    if !h.comparable(a.ctype.as_str(), b.ctype.as_str())? {
        return Err(CgError::IncomparableJunction(
            a.ctype.to_string(),
            b.ctype.to_string(),
        ));
    }
    Ok(ConceptNode {
        ctype: h.more_specific(a.ctype.as_str(), b.ctype.as_str())?,
        referent: a.referent.clone().or_else(|| b.referent.clone()),
    })
}

/// Glues `p2` after `p1`, merging the last concept of `p1` with the first
/// concept of `p2`.
pub fn join_chains(p1: &Chain, p2: &Chain, h: &TypeHierarchy) -> Result<Chain, CgError> {
    let junction = merge_concepts(p1.last(), p2.first(), h)?;
    let mut out = p1.clone();
    *out.last_mut() = junction;
    out.steps.extend(p2.steps.iter().cloned());
    Ok(out)
}
