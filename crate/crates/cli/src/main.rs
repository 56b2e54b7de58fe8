use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use cglink::kb::{parse_kb, validate_kb, KnowledgeBase, Severity};
use cglink::resolver::{
    render_graph, resolve_link, resolve_sentence, Candidate, ResolutionResult, ResolveError,
    ResolveOptions, Triple,
};
use cglink::{render_linear, DEFAULT_MAX_REL};

/// Resolve grammatical links into conceptual-graph chains.
#[derive(Parser, Debug)]
#[command(name = "cglink", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Resolve one link (P1; GR; P2) and print the selected chain.
    Resolve {
        kb: PathBuf,
        p1: String,
        gramrel: String,
        p2: String,
        #[command(flatten)]
        flags: ResolveFlags,
    },
    /// Resolve every link of a dependency-triple file and print the merged graph.
    Sentence {
        kb: PathBuf,
        triples: PathBuf,
        #[command(flatten)]
        flags: ResolveFlags,
    },
    /// Check a knowledge base and print its diagnostics.
    Validate { kb: PathBuf },
    /// Print counts of types, models and lexicon entries.
    Stats { kb: PathBuf },
}

#[derive(Args, Debug)]
struct ResolveFlags {
    /// Print every candidate of the winning search stage, best first.
    #[arg(long)]
    all: bool,
    /// Append search statistics.
    #[arg(long)]
    stats: bool,
    /// Emit one JSON record instead of text.
    #[arg(long)]
    json: bool,
    /// Print what each search stage produced.
    #[arg(long)]
    trace: bool,
    /// Break remaining ties randomly with this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Longest path, in relations, taken from one model.
    #[arg(long, default_value_t = DEFAULT_MAX_REL)]
    max_path_len: usize,
}

impl ResolveFlags {
    fn options(&self) -> ResolveOptions {
        ResolveOptions {
            max_rel: self.max_path_len,
            seed: self.seed,
        }
    }
}

enum Failure {
    /// Exit 1.
    NoChain(String),
    /// Exit 2.
    Usage(String),
}

impl From<ResolveError> for Failure {
    fn from(e: ResolveError) -> Self {
        match e {
            ResolveError::NoChainFound(..) => Failure::NoChain(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::NoChain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprint!("{msg}");
            if !msg.ends_with('\n') {
                eprintln!();
            }
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<KnowledgeBase, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("error: cannot read {}: {e}", path.display())))?;
    parse_kb(&text)
        .map_err(|diags| Failure::Usage(diags.iter().map(|d| format!("{d}\n")).collect::<String>()))
}

fn run(command: Command) -> Result<String, Failure> {
    match command {
        Command::Resolve {
            kb,
            p1,
            gramrel,
            p2,
            flags,
        } => {
            let kb = load(&kb)?;
            let res = resolve_link(&kb, &p1, &gramrel, &p2, &flags.options())
                .map_err(|e| error_prefixed(e.into()))?;
            let triple = Triple::new(&p1, &gramrel, &p2);
            if flags.json {
                Ok(format!("{}\n", link_json(&triple, &res, &flags)))
            } else {
                let mut out = String::new();
                write_link(&mut out, &res, &flags, None);
                Ok(out)
            }
        }
        Command::Sentence { kb, triples, flags } => {
            let kb = load(&kb)?;
            let triples = read_triples(&triples)?;
            let sent = resolve_sentence(&kb, &triples, &flags.options())
                .map_err(|e| error_prefixed(e.into()))?;
            let graph = render_graph(&sent.graph);
            if flags.json {
                let links: Vec<Value> = sent
                    .links
                    .iter()
                    .map(|(t, r)| link_json(t, r, &flags))
                    .collect();
                let record = json!({
                    "graph": graph.lines().collect::<Vec<_>>(),
                    "links": links,
                });
                Ok(format!("{record}\n"))
            } else {
                let mut out = graph;
                if flags.stats || flags.all || flags.trace {
                    for (t, r) in &sent.links {
                        let label = format!("{} {} {}", t.parent, t.gramrel, t.child);
                        write_link(&mut out, r, &flags, Some(&label));
                    }
                }
                Ok(out)
            }
        }
        Command::Validate { kb } => {
            let text = fs::read_to_string(&kb)
                .map_err(|e| Failure::Usage(format!("error: cannot read {}: {e}", kb.display())))?;
            match parse_kb(&text) {
                Ok(kb) => Ok(validate_kb(&kb).iter().map(|d| format!("{d}\n")).collect()),
                Err(diags) => {
                    let errors = diags
                        .iter()
                        .filter(|d| d.severity == Severity::Error)
                        .map(|d| format!("{d}\n"))
                        .collect();
                    Err(Failure::Usage(errors))
                }
            }
        }
        Command::Stats { kb } => {
            let kb = load(&kb)?;
            Ok(kb_stats(&kb))
        }
    }
}

fn error_prefixed(f: Failure) -> Failure {
    match f {
        Failure::Usage(m) => Failure::Usage(format!("error: {m}")),
        other => other,
    }
}

fn read_triples(path: &Path) -> Result<Vec<Triple>, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("error: cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').map(str::trim).collect();
        match fields.as_slice() {
            [p, g, c] if !p.is_empty() && !g.is_empty() && !c.is_empty() => {
                out.push(Triple::new(p, g, c))
            }
            _ => {
                return Err(Failure::Usage(format!(
                    "error: {}:{}: expected PARENT<TAB>GRAMREL<TAB>CHILD",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}

fn stats_line(res: &ResolutionResult) -> String {
    format!(
        "explored={} discarded={} pairs={} method={}",
        res.explored, res.discarded, res.pairs_visited, res.selected.method
    )
}

fn candidate_line(c: &Candidate, selected: bool) -> String {
    let pair = c
        .pair
        .as_ref()
        .map_or_else(|| "-".to_string(), |p| p.to_string());
    format!(
        "{} pref={} len={} {} {} {}",
        if selected { '*' } else { ' ' },
        c.pref_rank,
        c.length,
        c.method,
        pair,
        render_linear(&c.chain)
    )
}

fn write_link(out: &mut String, res: &ResolutionResult, flags: &ResolveFlags, label: Option<&str>) {
    if let Some(l) = label {
        writeln!(out, "link {l}").unwrap();
    }
    if flags.trace {
        for s in &res.trace {
            writeln!(
                out,
                "stage {}: generated={} satisfying={}",
                s.stage, s.generated, s.satisfying
            )
            .unwrap();
        }
    }
    if label.is_none() || flags.all {
        if flags.all {
            for c in &res.candidates {
                writeln!(out, "{}", candidate_line(c, *c == res.selected)).unwrap();
            }
        } else {
            writeln!(out, "{}", render_linear(&res.selected.chain)).unwrap();
        }
    }
    if flags.stats {
        writeln!(out, "{}", stats_line(res)).unwrap();
    }
}

fn candidate_json(c: &Candidate) -> Value {
    json!({
        "chain": render_linear(&c.chain),
        "method": c.method.to_string(),
        "pref_rank": c.pref_rank,
        "length": c.length,
        "pair": c.pair.as_ref().map(|p| json!({
            "left": p.left.to_string(),
            "left_rank": p.left_rank,
            "right": p.right.to_string(),
            "right_rank": p.right_rank,
        })),
    })
}

fn link_json(t: &Triple, res: &ResolutionResult, flags: &ResolveFlags) -> Value {
    let mut rec = candidate_json(&res.selected);
    let obj = rec.as_object_mut().unwrap();
    obj.insert("p1".into(), json!(t.parent));
    obj.insert("gramrel".into(), json!(t.gramrel));
    obj.insert("p2".into(), json!(t.child));
    obj.insert("explored".into(), json!(res.explored));
    obj.insert("discarded".into(), json!(res.discarded));
    obj.insert("pairs".into(), json!(res.pairs_visited));
    if flags.all {
        obj.insert(
            "candidates".into(),
            res.candidates.iter().map(candidate_json).collect(),
        );
    }
    if flags.trace {
        obj.insert(
            "trace".into(),
            res.trace
                .iter()
                .map(|s| {
                    json!({
                        "stage": s.stage.to_string(),
                        "generated": s.generated,
                        "satisfying": s.satisfying,
                    })
                })
                .collect(),
        );
    }
    rec
}

fn kb_stats(kb: &KnowledgeBase) -> String {
    let o = &kb.ontology;
    let mut out = String::new();
    writeln!(out, "concept_types={}", o.concepts.len()).unwrap();
    writeln!(out, "relation_types={}", o.relations.len()).unwrap();
    writeln!(out, "models={}", o.models().len()).unwrap();
    writeln!(out, "entries={}", kb.lexicon.entries().count()).unwrap();
    writeln!(out, "gramrels={}", kb.lexicon.gramrels().count()).unwrap();
    // Largest by concept count, then relation count; first declared wins ties.
    let largest = o.models().iter().fold(None, |best, (t, m)| {
        let size = (m.graph().concepts().len(), m.graph().relations().len());
        match best {
            Some((_, s)) if s >= size => best,
            _ => Some((t, size)),
        }
    });
    if let Some((t, (c, r))) = largest {
        writeln!(out, "largest_model={t} concepts={c} relations={r}").unwrap();
    }
    out
}
