//! Link resolution: given two predicates and the grammatical relation that
//! links them, find a chain of conceptual relations between their head
//! concepts by searching the reference models of both predicates.
//!
//! The search runs in stages. Concept fusion is tried first on the two head
//! types. Then model pairs are visited from the most specific pair outwards,
//! and for each pair concept inclusion is tried before model join. The first
//! stage that produces a chain satisfying the grammatical relation's
//! preferences closes the search; its best candidate is selected by
//! preference rank, then chain length, then a tie-break.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cg::{
    merge_concepts, render_linear, restrict, simple_paths, CgError, Chain, ConceptNode,
    ConceptualGraph, Direction, GraphPath, DEFAULT_MAX_REL,
};
use crate::kb::KnowledgeBase;
use crate::lexicon::{GramRelEntry, LexiconError, PredicateEntry};
use crate::ontology::{TypeHierarchy, TypeName};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("unknown word '{0}'")]
    UnknownWord(String),
    #[error("unknown grammatical relation '{0}'")]
    UnknownGramRel(String),
    #[error("no chain found for ({0}; {1}; {2})")]
    NoChainFound(String, String, String),
    #[error("triples do not form a tree: {0}")]
    NotATree(String),
    #[error(transparent)]
    Graph(#[from] CgError),
}

impl From<LexiconError> for ResolveError {
    fn from(e: LexiconError) -> Self {
        match e {
            LexiconError::UnknownGramRel(g) => ResolveError::UnknownGramRel(g),
            LexiconError::UnknownWord(w) => ResolveError::UnknownWord(w),
            other => ResolveError::UnknownWord(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolveOptions {
    /// Longest path, in relations, taken from a single model.
    pub max_rel: usize,
    /// When set, ties left after rank and length are broken by a seeded
    /// random pick instead of lexicographic order.
    pub seed: Option<u64>,
}

impl Default for ResolveOptions {
    fn default() -> Self {
        ResolveOptions {
            max_rel: DEFAULT_MAX_REL,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ModelSource {
    /// The predicate's own lexicon definition.
    Definition(String),
    /// A reference model attached to this concept type.
    Model(TypeName),
}

impl fmt::Display for ModelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSource::Definition(w) => write!(f, "{w}"),
            ModelSource::Model(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RankedModel<'kb> {
    pub graph: &'kb ConceptualGraph,
    pub rank: usize,
    pub source: ModelSource,
}

/// The models that carry knowledge about a predicate, most specific first:
/// its definition at rank 0, then the models inherited by its head type.
pub fn model_sequence<'kb>(
    kb: &'kb KnowledgeBase,
    entry: &'kb PredicateEntry,
) -> Vec<RankedModel<'kb>> {
    let mut out = vec![RankedModel {
        graph: &entry.definition,
        rank: 0,
        source: ModelSource::Definition(entry.word.clone()),
    }];
    let inherited = kb
        .ontology
        .inherited_models(entry.head_type().as_str())
        .expect("lexicon entries are validated against the ontology");
    out.extend(inherited.into_iter().enumerate().map(|(i, m)| RankedModel {
        graph: m.graph(),
        rank: i + 1,
        source: ModelSource::Model(m.head_type().clone()),
    }));
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelPair {
    pub left: ModelSource,
    pub left_rank: usize,
    pub right: ModelSource,
    pub right_rank: usize,
}

impl ModelPair {
    /// `(max rank, min rank)`; smaller is more specific.
    pub fn specificity_key(&self) -> (usize, usize) {
        specificity_key(self.left_rank, self.right_rank)
    }

    pub fn is_more_specific_than(&self, other: &ModelPair) -> bool {
        pair_more_specific(
            (self.left_rank, self.right_rank),
            (other.left_rank, other.right_rank),
        )
    }
}

impl fmt::Display for ModelPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}#{}, {}#{})",
            self.left, self.left_rank, self.right, self.right_rank
        )
    }
}

fn specificity_key(r1: usize, r2: usize) -> (usize, usize) {
    (r1.max(r2), r1.min(r2))
}

/// Whether a pair of model ranks is strictly more specific than another:
/// smaller maximum rank, or equal maximum and smaller minimum.
pub fn pair_more_specific(a: (usize, usize), b: (usize, usize)) -> bool {
    specificity_key(a.0, a.1) < specificity_key(b.0, b.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Fusion,
    Inclusion,
    Join,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Fusion => "fusion",
            Method::Inclusion => "inclusion",
            Method::Join => "join",
        })
    }
}

/// Which end of the produced chain the model's head occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadSide {
    /// Head first: the model belongs to the governing predicate.
    Left,
    /// Head last: the model belongs to the dependent predicate.
    Right,
}

/// Merges the two head concepts when their types are comparable.
pub fn method_fusion(h: &TypeHierarchy, t1: &str, t2: &str) -> Option<Chain> {
    let t = h.more_specific(t1, t2).ok()?;
    Some(Chain::single(ConceptNode {
        ctype: t,
        referent: None,
    }))
}

fn paths_between(g: &ConceptualGraph, from: usize, to: usize, max_rel: usize) -> Vec<GraphPath> {
    simple_paths(g, from, to, max_rel).expect("indices come from the graph itself")
}

/// Chains from the model head to every concept whose type subsumes
/// `other_type` (or back, for [`HeadSide::Right`]). The far end is narrowed
/// to `other_type`.
pub fn method_inclusion(
    model: &ConceptualGraph,
    head_side: HeadSide,
    other_type: &str,
    max_rel: usize,
    h: &TypeHierarchy,
) -> Vec<Chain> {
    let Some(head) = model.head() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (i, c) in model.concepts().iter().enumerate() {
        if !h.is_subtype(other_type, c.ctype.as_str()).unwrap_or(false) {
            continue;
        }
        let paths = match head_side {
            HeadSide::Left => paths_between(model, head, i, max_rel),
            HeadSide::Right => paths_between(model, i, head, max_rel),
        };
        for p in paths {
            let mut chain = p.to_chain(model);
            let end = match head_side {
                HeadSide::Left => chain.last_mut(),
                HeadSide::Right => &mut chain.start,
            };
            *end = restrict(end, other_type, h).expect("checked subsumption above");
            out.push(chain);
        }
    }
    out
}

/// Chains that leave the head of `m1`, reach some concept that can be
/// identified with a concept of `m2`, and continue to the head of `m2`.
pub fn method_join(
    m1: &ConceptualGraph,
    m2: &ConceptualGraph,
    max_rel: usize,
    h: &TypeHierarchy,
) -> Vec<Chain> {
    let (Some(h1), Some(h2)) = (m1.head(), m2.head()) else {
        return Vec::new();
    };
    let mut from_head: HashMap<usize, Vec<Chain>> = HashMap::new();
    let mut to_head: HashMap<usize, Vec<Chain>> = HashMap::new();
    let mut out = Vec::new();
    for (i, c1) in m1.concepts().iter().enumerate() {
        for (j, c2) in m2.concepts().iter().enumerate() {
            if !h
                .comparable(c1.ctype.as_str(), c2.ctype.as_str())
                .unwrap_or(false)
            {
                continue;
            }
            let p1s = from_head.entry(i).or_insert_with(|| {
                paths_between(m1, h1, i, max_rel)
                    .iter()
                    .map(|p| p.to_chain(m1))
                    .collect()
            });
            let p2s = to_head.entry(j).or_insert_with(|| {
                paths_between(m2, j, h2, max_rel)
                    .iter()
                    .map(|p| p.to_chain(m2))
                    .collect()
            });
            for p1 in p1s.iter() {
                for p2 in p2s.iter() {
                    out.push(
                        crate::cg::join_chains(p1, p2, h).expect("junction types are comparable"),
                    );
                }
            }
        }
    }
    out
}

/// Index of the highest-priority preference that some relation of the chain
/// satisfies (`r ≤ pref`). An empty chain only satisfies a trailing
/// catch-all preference naming the relation root.
pub fn pref_rank(chain: &Chain, gr: &GramRelEntry, relations: &TypeHierarchy) -> Option<usize> {
    if chain.is_empty() {
        let last = gr.prefs.last()?;
        return (Some(last) == relations.root()).then(|| gr.prefs.len() - 1);
    }
    gr.prefs.iter().position(|p| {
        chain.relation_types().any(|r| {
            relations
                .is_subtype(r.as_str(), p.as_str())
                .unwrap_or(false)
        })
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub chain: Chain,
    pub method: Method,
    /// Absent for fusion, which uses no model.
    pub pair: Option<ModelPair>,
    pub pref_rank: usize,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stage {
    Fusion,
    Inclusion(ModelPair),
    Join(ModelPair),
}

impl Stage {
    pub fn method(&self) -> Method {
        match self {
            Stage::Fusion => Method::Fusion,
            Stage::Inclusion(_) => Method::Inclusion,
            Stage::Join(_) => Method::Join,
        }
    }

    pub fn pair(&self) -> Option<&ModelPair> {
        match self {
            Stage::Fusion => None,
            Stage::Inclusion(p) | Stage::Join(p) => Some(p),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pair() {
            None => write!(f, "{}", self.method()),
            Some(p) => write!(f, "{} {p}", self.method()),
        }
    }
}

/// What one search stage produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageReport {
    pub stage: Stage,
    pub generated: usize,
    pub satisfying: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolutionResult {
    pub selected: Candidate,
    /// Every preference-satisfying candidate of the winning stage, best first.
    pub candidates: Vec<Candidate>,
    pub explored: usize,
    pub discarded: usize,
    pub pairs_visited: usize,
    pub trace: Vec<StageReport>,
}

struct Search<'a> {
    kb: &'a KnowledgeBase,
    gr: &'a GramRelEntry,
    t1: TypeName,
    t2: TypeName,
    explored: usize,
    discarded: usize,
    trace: Vec<StageReport>,
}

impl Search<'_> {
    /// Narrows the chain's ends to the two predicates' head types. Fails
    /// when an end cannot be identified with its predicate.
    fn fit_ends(&self, mut chain: Chain) -> Option<Chain> {
        let h = &self.kb.ontology.concepts;
        chain.start = merge_concepts(&chain.start, &ConceptNode::new(self.t1.clone()), h).ok()?;
        let last = chain.last_mut();
        *last = merge_concepts(last, &ConceptNode::new(self.t2.clone()), h).ok()?;
        Some(chain)
    }

    fn stage(&mut self, stage: Stage, chains: Vec<Chain>) -> Vec<Candidate> {
        let method = stage.method();
        let pair = stage.pair().cloned();
        let mut generated = 0;
        let mut kept = Vec::new();
        for chain in chains {
            let Some(chain) = self.fit_ends(chain) else {
                continue;
            };
            generated += 1;
            match pref_rank(&chain, self.gr, &self.kb.ontology.relations) {
                Some(rank) => kept.push(Candidate {
                    length: chain.len(),
                    chain,
                    method,
                    pair: pair.clone(),
                    pref_rank: rank,
                }),
                None => self.discarded += 1,
            }
        }
        self.explored += generated;
        self.trace.push(StageReport {
            stage,
            generated,
            satisfying: kept.len(),
        });
        kept
    }
}

/// Orders candidates best first and picks the winner.
fn select(mut cands: Vec<Candidate>, seed: Option<u64>) -> (Candidate, Vec<Candidate>) {
    let mut keyed: Vec<(usize, usize, String, Candidate)> = cands
        .drain(..)
        .map(|c| (c.pref_rank, c.length, render_linear(&c.chain), c))
        .collect();
    keyed.sort_by(|a, b| (a.0, a.1, &a.2).cmp(&(b.0, b.1, &b.2)));
    let ranked: Vec<Candidate> = keyed.into_iter().map(|k| k.3).collect();
    let best = (ranked[0].pref_rank, ranked[0].length);
    let tied = ranked
        .iter()
        .take_while(|c| (c.pref_rank, c.length) == best)
        .count();
    let pick = match seed {
        None => 0,
        Some(s) => {
            let idx: Vec<usize> = (0..tied).collect();
            *idx.choose(&mut ChaCha8Rng::seed_from_u64(s)).unwrap()
        }
    };
    (ranked[pick].clone(), ranked)
}

/// Ordered model pairs for two model sequences: by specificity key, then by
/// the left rank.
pub fn ordered_pairs(left: &[RankedModel<'_>], right: &[RankedModel<'_>]) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..left.len())
        .flat_map(|i| (0..right.len()).map(move |j| (i, j)))
        .collect();
    pairs.sort_by_key(|&(i, j)| (specificity_key(left[i].rank, right[j].rank), left[i].rank));
    pairs
}

pub fn resolve_link(
    kb: &KnowledgeBase,
    p1: &str,
    gr: &str,
    p2: &str,
    opts: &ResolveOptions,
) -> Result<ResolutionResult, ResolveError> {
    let e1 = kb.lexicon.lookup_entry(p1)?;
    let e2 = kb.lexicon.lookup_entry(p2)?;
    let g = kb.lexicon.lookup_gramrel(gr)?;
    let h = &kb.ontology.concepts;
    let mut search = Search {
        kb,
        gr: g,
        t1: e1.head_type().clone(),
        t2: e2.head_type().clone(),
        explored: 0,
        discarded: 0,
        trace: Vec::new(),
    };

    let finish = |search: Search<'_>, cands: Vec<Candidate>, pairs_visited: usize| {
        let (selected, candidates) = select(cands, opts.seed);
        ResolutionResult {
            selected,
            candidates,
            explored: search.explored,
            discarded: search.discarded,
            pairs_visited,
            trace: search.trace,
        }
    };

    let fused: Vec<Chain> = method_fusion(h, search.t1.as_str(), search.t2.as_str())
        .into_iter()
        .collect();
    let cands = search.stage(Stage::Fusion, fused);
    if !cands.is_empty() {
        return Ok(finish(search, cands, 0));
    }

    let seq1 = model_sequence(kb, e1);
    let seq2 = model_sequence(kb, e2);
    let mut pairs_visited = 0;
    for (i, j) in ordered_pairs(&seq1, &seq2) {
        pairs_visited += 1;
        let (m1, m2) = (&seq1[i], &seq2[j]);
        let pair = ModelPair {
            left: m1.source.clone(),
            left_rank: m1.rank,
            right: m2.source.clone(),
            right_rank: m2.rank,
        };

        let mut chains = method_inclusion(
            m1.graph,
            HeadSide::Left,
            search.t2.as_str(),
            opts.max_rel,
            h,
        );
        chains.extend(method_inclusion(
            m2.graph,
            HeadSide::Right,
            search.t1.as_str(),
            opts.max_rel,
            h,
        ));
        let cands = search.stage(Stage::Inclusion(pair.clone()), chains);
        if !cands.is_empty() {
            return Ok(finish(search, cands, pairs_visited));
        }

        let chains = method_join(m1.graph, m2.graph, opts.max_rel, h);
        let cands = search.stage(Stage::Join(pair), chains);
        if !cands.is_empty() {
            return Ok(finish(search, cands, pairs_visited));
        }
    }
    Err(ResolveError::NoChainFound(
        p1.to_string(),
        gr.to_string(),
        p2.to_string(),
    ))
}

/// One dependency link of a sentence: `parent --gramrel--> child`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub parent: String,
    pub gramrel: String,
    pub child: String,
}

impl Triple {
    pub fn new(parent: &str, gramrel: &str, child: &str) -> Self {
        Triple {
            parent: parent.to_string(),
            gramrel: gramrel.to_string(),
            child: child.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceResult {
    pub graph: ConceptualGraph,
    /// Link resolutions in the depth-first order they were performed.
    pub links: Vec<(Triple, ResolutionResult)>,
}

/// Children of each word in file order, after checking that the triples
/// form a single tree rooted at the first triple's parent.
fn tree_children(triples: &[Triple]) -> Result<HashMap<&str, Vec<usize>>, ResolveError> {
    let root = triples
        .first()
        .map(|t| t.parent.as_str())
        .ok_or_else(|| ResolveError::NotATree("no triples".into()))?;
    let mut parent_of: HashMap<&str, &str> = HashMap::new();
    let mut children: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, t) in triples.iter().enumerate() {
        if t.child == root {
            return Err(ResolveError::NotATree(format!(
                "head word '{root}' appears as a dependent"
            )));
        }
        if let Some(prev) = parent_of.insert(&t.child, &t.parent) {
            return Err(ResolveError::NotATree(format!(
                "'{}' depends on both '{prev}' and '{}'",
                t.child, t.parent
            )));
        }
        children.entry(&t.parent).or_default().push(i);
    }
    // Everything must hang off the root.
    let mut seen: HashSet<&str> = HashSet::from([root]);
    let mut stack = vec![root];
    while let Some(w) = stack.pop() {
        for &i in children.get(w).map(Vec::as_slice).unwrap_or(&[]) {
            if seen.insert(&triples[i].child) {
                stack.push(&triples[i].child);
            }
        }
    }
    if let Some(t) = triples.iter().find(|t| !seen.contains(t.parent.as_str())) {
        return Err(ResolveError::NotATree(format!(
            "'{}' is not connected to head word '{root}'",
            t.parent
        )));
    }
    Ok(children)
}

/// Resolves every link of a dependency tree, depth first from the head word,
/// and glues the chains together on the shared predicate concepts.
pub fn resolve_sentence(
    kb: &KnowledgeBase,
    triples: &[Triple],
    opts: &ResolveOptions,
) -> Result<SentenceResult, ResolveError> {
    let children = tree_children(triples)?;
    let h = &kb.ontology.concepts;
    let root = &triples[0].parent;
    let root_entry = kb.lexicon.lookup_entry(root)?;
    let mut graph = ConceptualGraph::new();
    let root_node =
        graph.add_concept(root_entry.definition.head_concept().unwrap().clone(), None)?;
    graph.set_head(root_node)?;

    let mut links = Vec::new();
    let mut stack: Vec<(&str, usize)> = vec![(root, root_node)];
    // Depth first, children in file order.
    while let Some((word, node)) = stack.pop() {
        let kids = children.get(word).map(Vec::as_slice).unwrap_or(&[]);
        for &i in kids {
            let t = &triples[i];
            let res = resolve_link(kb, &t.parent, &t.gramrel, &t.child, opts)?;
            let child_node = attach_chain(&mut graph, node, &res.selected.chain, h)?;
            let child_head = kb
                .lexicon
                .lookup_entry(&t.child)?
                .definition
                .head_concept()
                .unwrap();
            let merged = merge_concepts(graph.concept(child_node).unwrap(), child_head, h)?;
            *graph.concept_mut(child_node).unwrap() = merged;
            links.push((t.clone(), res));
            stack.push((&t.child, child_node));
        }
        // Keep file order when popping siblings.
        let n = kids.len();
        let len = stack.len();
        stack[len - n..].reverse();
    }
    Ok(SentenceResult { graph, links })
}

/// Adds `chain` to `graph`, identifying its first concept with `anchor`.
/// Returns the node holding the chain's last concept.
fn attach_chain(
    graph: &mut ConceptualGraph,
    anchor: usize,
    chain: &Chain,
    h: &TypeHierarchy,
) -> Result<usize, CgError> {
    let merged = merge_concepts(graph.concept(anchor).unwrap(), chain.first(), h)?;
    *graph.concept_mut(anchor).unwrap() = merged;
    let mut prev = anchor;
    for step in &chain.steps {
        let next = graph.add_concept(step.concept.clone(), None)?;
        match step.direction {
            Direction::Forward => graph.add_relation(step.rtype.clone(), prev, next)?,
            Direction::Backward => graph.add_relation(step.rtype.clone(), next, prev)?,
        };
        prev = next;
    }
    Ok(prev)
}

/// One concept per line with its outgoing relations:
/// `c0 [Angioplasty] -(purported_obj)-> c1`.
pub fn render_graph(g: &ConceptualGraph) -> String {
    let mut out = String::new();
    for (i, c) in g.concepts().iter().enumerate() {
        out.push_str(&format!("c{i} {c}"));
        for r in g.relations().iter().filter(|r| r.source == i) {
            out.push_str(&format!(" -({})-> c{}", r.rtype, r.target));
        }
        out.push('\n');
    }
    out
}
