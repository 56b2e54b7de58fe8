//! Test-only oracles and random generators.
//!
//! Everything here recomputes results from the raw data (parent links,
//! relation lists, model graphs) without going through the library's search
//! code, so that the library can be checked against it.

#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use cglink::cg::{ConceptNode, ConceptualGraph, Direction};
use cglink::kb::KnowledgeBase;
use cglink::ontology::TypeHierarchy;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Type trees

/// Ancestor set of `t` (inclusive), by walking parent links.
pub fn ancestors(h: &TypeHierarchy, t: &str) -> Vec<String> {
    let mut out = vec![t.to_string()];
    let mut cur = t.to_string();
    while let Some(p) = h.parent(&cur).unwrap() {
        out.push(p.to_string());
        cur = p.to_string();
    }
    out
}

pub fn le(h: &TypeHierarchy, a: &str, b: &str) -> bool {
    ancestors(h, a).iter().any(|x| x == b)
}

pub fn meet(h: &TypeHierarchy, a: &str, b: &str) -> Option<String> {
    if le(h, a, b) {
        Some(a.to_string())
    } else if le(h, b, a) {
        Some(b.to_string())
    } else {
        None
    }
}

/// Random tree with `n` types named `T0..`; `T0` is the root.
pub fn random_tree(rng: &mut ChaCha8Rng, n: usize, prefix: &str) -> TypeHierarchy {
    let mut h = TypeHierarchy::new();
    h.add_type(&format!("{prefix}0"), None).unwrap();
    for i in 1..n {
        let p = rng.gen_range(0..i);
        h.add_type(&format!("{prefix}{i}"), Some(&format!("{prefix}{p}")))
            .unwrap();
    }
    h
}

// ---------------------------------------------------------------------------
// Paths

/// Every simple path from `from` to `to` with at most `max_rel` relations, as
/// the sequence of (relation index, traversed forward). Breadth-first over
/// partial paths, scanning the raw relation list at each step.
pub fn brute_paths(
    g: &ConceptualGraph,
    from: usize,
    to: usize,
    max_rel: usize,
) -> BTreeSet<Vec<(usize, bool)>> {
    let mut out = BTreeSet::new();
    // (concepts visited, arcs taken)
    type Partial = (Vec<usize>, Vec<(usize, bool)>);
    let mut queue: VecDeque<Partial> = VecDeque::new();
    queue.push_back((vec![from], Vec::new()));
    while let Some((nodes, rels)) = queue.pop_front() {
        let cur = *nodes.last().unwrap();
        if cur == to {
            out.insert(rels);
            continue;
        }
        if rels.len() >= max_rel {
            continue;
        }
        for (ri, r) in g.relations().iter().enumerate() {
            let step = if r.source == cur {
                Some((r.target, true))
            } else if r.target == cur {
                Some((r.source, false))
            } else {
                None
            };
            if let Some((next, fwd)) = step {
                if nodes.contains(&next) {
                    continue;
                }
                let mut n2 = nodes.clone();
                n2.push(next);
                let mut r2 = rels.clone();
                r2.push((ri, fwd));
                queue.push_back((n2, r2));
            }
        }
    }
    out
}

pub fn path_key(p: &cglink::cg::GraphPath) -> Vec<(usize, bool)> {
    p.relations
        .iter()
        .map(|&(r, d)| (r, d == Direction::Forward))
        .collect()
}

/// Random graph on `n` concepts of types `T0..T{types-1}`, with `m`
/// relations between distinct random endpoints.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, m: usize, types: usize) -> ConceptualGraph {
    let mut g = ConceptualGraph::new();
    for _ in 0..n {
        let t = format!("T{}", rng.gen_range(0..types));
        g.add_concept(ConceptNode::new(t.as_str()), None).unwrap();
    }
    if n >= 2 {
        for _ in 0..m {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            let r = format!("r{}", rng.gen_range(0..4));
            g.add_relation(r.as_str(), a, b).unwrap();
        }
    }
    g.set_head(0).unwrap();
    g
}

// ---------------------------------------------------------------------------
// Chains

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OChain {
    pub concepts: Vec<String>,
    pub rels: Vec<(String, bool)>,
}

impl OChain {
    fn from_path(g: &ConceptualGraph, from: usize, path: &[(usize, bool)]) -> OChain {
        let mut concepts = vec![g.concepts()[from].ctype.to_string()];
        let mut rels = Vec::new();
        for &(ri, fwd) in path {
            let r = &g.relations()[ri];
            let next = if fwd { r.target } else { r.source };
            concepts.push(g.concepts()[next].ctype.to_string());
            rels.push((r.rtype.to_string(), fwd));
        }
        OChain { concepts, rels }
    }

    pub fn render(&self) -> String {
        let mut s = format!("[{}]", self.concepts[0]);
        for (i, (r, fwd)) in self.rels.iter().enumerate() {
            if *fwd {
                s.push_str(&format!("-({r})->"));
            } else {
                s.push_str(&format!("<-({r})-"));
            }
            s.push_str(&format!("[{}]", self.concepts[i + 1]));
        }
        s
    }
}

/// Parses the linear chain notation back into types and relations.
pub fn parse_linear(s: &str) -> Option<OChain> {
    fn concept(s: &str) -> Option<(String, &str)> {
        let rest = s.strip_prefix('[')?;
        let end = rest.find(']')?;
        Some((rest[..end].to_string(), &rest[end + 1..]))
    }
    let (first, mut rest) = concept(s)?;
    let mut concepts = vec![first];
    let mut rels = Vec::new();
    while !rest.is_empty() {
        let (rel, fwd, after) = if let Some(r) = rest.strip_prefix("-(") {
            let end = r.find(")->")?;
            (r[..end].to_string(), true, &r[end + 3..])
        } else {
            let r = rest.strip_prefix("<-(")?;
            let end = r.find(")-")?;
            (r[..end].to_string(), false, &r[end + 2..])
        };
        let (c, after) = concept(after)?;
        rels.push((rel, fwd));
        concepts.push(c);
        rest = after;
    }
    Some(OChain { concepts, rels })
}

// ---------------------------------------------------------------------------
// Resolution

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OMethod {
    Fusion,
    Inclusion,
    Join,
}

impl OMethod {
    pub fn name(self) -> &'static str {
        match self {
            OMethod::Fusion => "fusion",
            OMethod::Inclusion => "inclusion",
            OMethod::Join => "join",
        }
    }
}

#[derive(Debug, Clone)]
pub struct OCandidate {
    pub chain: OChain,
    pub rank: Option<usize>,
}

impl OCandidate {
    pub fn key(&self) -> Option<(usize, usize)> {
        self.rank.map(|r| (r, self.chain.rels.len()))
    }
}

#[derive(Debug, Clone)]
pub struct OStage {
    pub method: OMethod,
    /// Ranks of the two models; absent for fusion.
    pub ranks: Option<(usize, usize)>,
    pub chains: Vec<OCandidate>,
}

impl OStage {
    pub fn satisfying(&self) -> usize {
        self.chains.iter().filter(|c| c.rank.is_some()).count()
    }
}

/// Every stage the search could visit, in visiting order, with every chain
/// each one produces. Nothing is pruned.
pub fn all_stages(kb: &KnowledgeBase, p1: &str, gr: &str, p2: &str, max_rel: usize) -> Vec<OStage> {
    let h = &kb.ontology.concepts;
    let rh = &kb.ontology.relations;
    let e1 = kb.lexicon.lookup_entry(p1).unwrap();
    let e2 = kb.lexicon.lookup_entry(p2).unwrap();
    let prefs: Vec<String> = kb
        .lexicon
        .lookup_gramrel(gr)
        .unwrap()
        .prefs
        .iter()
        .map(|p| p.to_string())
        .collect();
    let head_of = |g: &ConceptualGraph| g.head().unwrap();
    let t1 = e1.definition.concepts()[head_of(&e1.definition)]
        .ctype
        .to_string();
    let t2 = e2.definition.concepts()[head_of(&e2.definition)]
        .ctype
        .to_string();

    let rank = |c: &OChain| -> Option<usize> {
        if c.rels.is_empty() {
            let root = ancestors(rh, &prefs[0]).last().unwrap().clone();
            return (prefs.last().unwrap() == &root).then(|| prefs.len() - 1);
        }
        prefs
            .iter()
            .position(|p| c.rels.iter().any(|(r, _)| le(rh, r, p)))
    };
    let fit = |mut c: OChain| -> Option<OChain> {
        c.concepts[0] = meet(h, &c.concepts[0], &t1)?;
        let n = c.concepts.len() - 1;
        c.concepts[n] = meet(h, &c.concepts[n], &t2)?;
        Some(c)
    };
    let stage = |method, ranks, chains: Vec<OChain>| OStage {
        method,
        ranks,
        chains: chains
            .into_iter()
            .filter_map(&fit)
            .map(|c| OCandidate {
                rank: rank(&c),
                chain: c,
            })
            .collect(),
    };

    let mut stages = Vec::new();
    let fused: Vec<OChain> = meet(h, &t1, &t2)
        .map(|t| OChain {
            concepts: vec![t],
            rels: vec![],
        })
        .into_iter()
        .collect();
    stages.push(stage(OMethod::Fusion, None, fused));

    let models = |head_type: &str, def: &ConceptualGraph| -> Vec<ConceptualGraph> {
        let mut out = vec![def.clone()];
        for a in ancestors(h, head_type) {
            if let Some(m) = kb.ontology.models().get(&a) {
                out.push(m.graph().clone());
            }
        }
        out
    };
    let seq1 = models(&t1, &e1.definition);
    let seq2 = models(&t2, &e2.definition);
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..seq1.len() {
        for j in 0..seq2.len() {
            pairs.push((i, j));
        }
    }
    pairs.sort_by_key(|&(i, j)| (i.max(j), i.min(j), i));

    for (i, j) in pairs {
        let (m1, m2) = (&seq1[i], &seq2[j]);
        let (h1, h2) = (head_of(m1), head_of(m2));
        let mut inc = Vec::new();
        for (c, node) in m1.concepts().iter().enumerate() {
            if le(h, &t2, node.ctype.as_str()) {
                for p in brute_paths(m1, h1, c, max_rel) {
                    let mut ch = OChain::from_path(m1, h1, &p);
                    *ch.concepts.last_mut().unwrap() = t2.clone();
                    inc.push(ch);
                }
            }
        }
        for (c, node) in m2.concepts().iter().enumerate() {
            if le(h, &t1, node.ctype.as_str()) {
                for p in brute_paths(m2, c, h2, max_rel) {
                    let mut ch = OChain::from_path(m2, c, &p);
                    ch.concepts[0] = t1.clone();
                    inc.push(ch);
                }
            }
        }
        stages.push(stage(OMethod::Inclusion, Some((i, j)), inc));

        let mut join = Vec::new();
        for (c1, n1) in m1.concepts().iter().enumerate() {
            for (c2, n2) in m2.concepts().iter().enumerate() {
                let Some(junction) = meet(h, n1.ctype.as_str(), n2.ctype.as_str()) else {
                    continue;
                };
                let left = brute_paths(m1, h1, c1, max_rel);
                let right = brute_paths(m2, c2, h2, max_rel);
                for p in &left {
                    for q in &right {
                        let a = OChain::from_path(m1, h1, p);
                        let b = OChain::from_path(m2, c2, q);
                        let mut concepts = a.concepts.clone();
                        *concepts.last_mut().unwrap() = junction.clone();
                        concepts.extend(b.concepts[1..].iter().cloned());
                        let mut rels = a.rels.clone();
                        rels.extend(b.rels.iter().cloned());
                        join.push(OChain { concepts, rels });
                    }
                }
            }
        }
        stages.push(stage(OMethod::Join, Some((i, j)), join));
    }
    stages
}

/// Index of the stage that closes the search: the first one with a
/// preference-satisfying chain. Fusion only counts when it satisfies.
pub fn winning_stage(stages: &[OStage]) -> Option<usize> {
    stages.iter().position(|s| s.satisfying() > 0)
}

/// Best (rank, length, rendering) in a stage.
pub fn best_in(stage: &OStage) -> Option<(usize, usize, String)> {
    stage
        .chains
        .iter()
        .filter_map(|c| c.key().map(|(r, l)| (r, l, c.chain.render())))
        .min()
}

// ---------------------------------------------------------------------------
// Random knowledge bases

pub struct RandomKb {
    pub kb: KnowledgeBase,
    pub words: Vec<String>,
    pub gramrel: String,
}

fn random_body(
    rng: &mut ChaCha8Rng,
    head_type: &str,
    n: usize,
    types: usize,
    rels: usize,
) -> ConceptualGraph {
    let mut g = ConceptualGraph::new();
    g.add_concept(ConceptNode::new(head_type), None).unwrap();
    for _ in 1..n {
        let t = format!("T{}", rng.gen_range(0..types));
        g.add_concept(ConceptNode::new(t.as_str()), None).unwrap();
    }
    g.set_head(0).unwrap();
    if n >= 2 {
        // A spanning tree keeps most of the model reachable; extra arcs add cycles.
        for c in 1..n {
            if rng.gen_bool(0.9) {
                let other = rng.gen_range(0..c);
                let r = format!("R{}", rng.gen_range(0..rels));
                if rng.gen_bool(0.5) {
                    g.add_relation(r.as_str(), other, c).unwrap();
                } else {
                    g.add_relation(r.as_str(), c, other).unwrap();
                }
            }
        }
        for _ in 0..rng.gen_range(0..=n / 2 + 1) {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            let r = format!("R{}", rng.gen_range(0..rels));
            g.add_relation(r.as_str(), a, b).unwrap();
        }
    }
    g
}

/// Small random KB: at most 10 concept types, models of at most 8 concepts.
pub fn random_kb(seed: u64) -> RandomKb {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ntypes = rng.gen_range(2..=10);
    let nrels = rng.gen_range(2..=5);
    let mut kb = KnowledgeBase::new();
    kb.ontology.concepts = random_tree(&mut rng, ntypes, "T");
    kb.ontology.relations = random_tree(&mut rng, nrels, "R");

    for t in 0..ntypes {
        if rng.gen_bool(0.5) {
            let n = rng.gen_range(1..=8);
            let g = random_body(&mut rng, &format!("T{t}"), n, ntypes, nrels);
            kb.add_model(&format!("T{t}"), g).unwrap();
        }
    }
    let nwords = rng.gen_range(2..=5);
    let mut words = Vec::new();
    for w in 0..nwords {
        let head = format!("T{}", rng.gen_range(0..ntypes));
        let n = rng.gen_range(1..=3);
        let g = random_body(&mut rng, &head, n, ntypes, nrels);
        let word = format!("w{w}");
        kb.add_entry(&word, g).unwrap();
        words.push(word);
    }
    let mut rels: Vec<String> = (1..nrels).map(|i| format!("R{i}")).collect();
    rels.shuffle(&mut rng);
    rels.truncate(rng.gen_range(1..=rels.len()));
    if rng.gen_bool(0.6) {
        rels.push("R0".to_string());
    }
    let prefs: Vec<&str> = rels.iter().map(String::as_str).collect();
    kb.add_gramrel("g", &prefs).unwrap();
    RandomKb {
        kb,
        words,
        gramrel: "g".to_string(),
    }
}

// ---------------------------------------------------------------------------
// Fixture

pub const FIXTURE: &str = include_str!("../../data/menelas-mini.kb");

pub fn fixture() -> KnowledgeBase {
    cglink::kb::parse_kb(FIXTURE).expect("fixture parses")
}

/// Every (p1, gramrel, p2) over distinct lexicon words.
pub fn all_triples(kb: &KnowledgeBase) -> Vec<(String, String, String)> {
    let words: Vec<String> = kb.lexicon.entries().map(|e| e.word.clone()).collect();
    let grs: Vec<String> = kb.lexicon.gramrels().map(|g| g.name.clone()).collect();
    let mut out = Vec::new();
    for a in &words {
        for b in &words {
            if a == b {
                continue;
            }
            for g in &grs {
                out.push((a.clone(), g.clone(), b.clone()));
            }
        }
    }
    out
}
