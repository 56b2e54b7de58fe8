mod support;

use cglink::cg::ConceptualGraph;
use cglink::kb::{parse_kb, validate_kb, DiagnosticKind, KnowledgeBase, Severity};
use proptest::prelude::*;

type Shape = (Vec<String>, Vec<(String, usize, usize)>, Option<usize>);

fn shape(g: &ConceptualGraph) -> Shape {
    (
        g.concepts().iter().map(|c| c.to_string()).collect(),
        g.relations()
            .iter()
            .map(|r| (r.rtype.to_string(), r.source, r.target))
            .collect(),
        g.head(),
    )
}

fn assert_same(a: &KnowledgeBase, b: &KnowledgeBase) {
    for (x, y) in [
        (&a.ontology.concepts, &b.ontology.concepts),
        (&a.ontology.relations, &b.ontology.relations),
    ] {
        let xs: Vec<_> = x
            .names()
            .map(|n| (n.to_string(), x.parent(n.as_str()).unwrap().cloned()))
            .collect();
        let ys: Vec<_> = y
            .names()
            .map(|n| (n.to_string(), y.parent(n.as_str()).unwrap().cloned()))
            .collect();
        assert_eq!(xs, ys);
    }
    let ma: Vec<_> = a
        .ontology
        .models()
        .iter()
        .map(|(t, m)| (t.to_string(), shape(m.graph())))
        .collect();
    let mb: Vec<_> = b
        .ontology
        .models()
        .iter()
        .map(|(t, m)| (t.to_string(), shape(m.graph())))
        .collect();
    assert_eq!(ma, mb);
    let ea: Vec<_> = a
        .lexicon
        .entries()
        .map(|e| (e.word.clone(), shape(&e.definition)))
        .collect();
    let eb: Vec<_> = b
        .lexicon
        .entries()
        .map(|e| (e.word.clone(), shape(&e.definition)))
        .collect();
    assert_eq!(ea, eb);
    let ga: Vec<_> = a.lexicon.gramrels().cloned().collect();
    let gb: Vec<_> = b.lexicon.gramrels().cloned().collect();
    assert_eq!(ga, gb);
}

#[test]
fn fixture_round_trips() {
    let kb = support::fixture();
    let text = kb.to_kb_text();
    let back = parse_kb(&text).unwrap();
    assert_same(&kb, &back);
    assert_eq!(back.to_kb_text(), text);
}

#[test]
fn fixture_has_no_errors() {
    let kb = support::fixture();
    assert!(validate_kb(&kb)
        .iter()
        .all(|d| d.severity == Severity::Warning));
    assert_eq!(kb.ontology.models().len(), 3);
    assert_eq!(
        kb.ontology
            .models()
            .get("Angioplasty")
            .unwrap()
            .graph()
            .concepts()
            .len(),
        12
    );
}

#[test]
fn referents_survive_serialization() {
    let text = "type T\ntype U < T\nreltype rel\nreltype r < rel\n\
        entry a { head x: U = \"Mr Smith\" ; y: T = b12 ; x -r-> y }\n\
        gramrel g prefers r, rel\n";
    let kb = parse_kb(text).unwrap();
    let back = parse_kb(&kb.to_kb_text()).unwrap();
    assert_same(&kb, &back);
    let e = back.lexicon.lookup_entry("a").unwrap();
    assert_eq!(e.definition.concepts()[0].to_string(), "[U:Mr Smith]");
    assert_eq!(e.definition.concepts()[1].to_string(), "[T:b12]");
}

#[test]
fn errors_carry_line_numbers() {
    let text = "type Top\ntype A < Top\ntype A < Top\nreltype rel\n\
        model B { head x: B }\nentry w { head x: A ; x -nope-> x }\ngramrel g prefers missing\n";
    let diags = parse_kb(text).unwrap_err();
    let lines: Vec<usize> = diags.iter().map(|d| d.line).collect();
    assert!(lines.windows(2).all(|w| w[0] <= w[1]));
    let at = |line: usize, kind: DiagnosticKind| {
        diags
            .iter()
            .any(|d| d.line == line && d.kind == kind && d.severity == Severity::Error)
    };
    assert!(at(3, DiagnosticKind::DuplicateDecl), "{diags:?}");
    assert!(at(5, DiagnosticKind::UnknownTypeRef), "{diags:?}");
    assert!(diags.iter().any(|d| d.line == 6), "{diags:?}");
    assert!(at(7, DiagnosticKind::UnknownTypeRef), "{diags:?}");
    for d in &diags {
        assert!(d.to_string().starts_with(&format!("error:{}:", d.line)));
    }
}

#[test]
fn inherited_models_go_nearest_first() {
    let kb = support::fixture();
    let o = &kb.ontology;
    // Right_Coronary_Artery has no model of its own; Artery's is the nearest.
    let heads: Vec<String> = o
        .inherited_models("Right_Coronary_Artery")
        .unwrap()
        .iter()
        .map(|m| m.head_type().to_string())
        .collect();
    assert_eq!(heads, ["Artery"]);
    for seed in 0..50 {
        let r = support::random_kb(seed);
        let o = &r.kb.ontology;
        for t in o.concepts.names() {
            let got: Vec<String> = o
                .inherited_models(t.as_str())
                .unwrap()
                .iter()
                .map(|m| m.head_type().to_string())
                .collect();
            let want: Vec<String> = support::ancestors(&o.concepts, t.as_str())
                .into_iter()
                .filter(|a| o.models().get(a).is_some())
                .collect();
            assert_eq!(got, want);
        }
    }
}

proptest! {
    #[test]
    fn random_kbs_round_trip(seed in 0u64..100_000) {
        let r = support::random_kb(seed);
        let text = r.kb.to_kb_text();
        let back = parse_kb(&text).map_err(|d| TestCaseError::fail(format!("{d:?}\n{text}")))?;
        assert_same(&r.kb, &back);
        prop_assert_eq!(back.to_kb_text(), text);
    }
}
