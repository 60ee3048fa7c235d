#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::OnceLock;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use ontomerge::conflict::resolve;
use ontomerge::merge::{build_hierarchy, merge, transitive_reduction, ClassSpec};
use ontomerge::owl::{display_label, parse_owl, serialize_owl, validate_ontology, Ontology, Violation, ROOT};
use ontomerge::pipeline::read_ontology;
use ontomerge::relations::classify;
use ontomerge::webstats::{compute_threshold, select_hypernyms, QueryResult};
use ontomerge::wordnet::{
    load_knowledge_base, parse_overlay_line, write_overlay, KnowledgeBase, OverlayEntry, SynsetId,
};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture(name: &str) -> PathBuf {
    fixtures().join(name)
}

pub fn kb() -> &'static KnowledgeBase {
    static KB: OnceLock<KnowledgeBase> = OnceLock::new();
    KB.get_or_init(|| load_knowledge_base(&fixture("wordnet"), &[]).expect("fixture kb loads"))
}

pub fn biblio() -> Ontology {
    read_ontology(&fixture("biblio.owl")).unwrap()
}

pub fn bibtex() -> Ontology {
    read_ontology(&fixture("bibtex.owl")).unwrap()
}

/// Display labels of every class in both fixture ontologies.
pub fn fixture_labels() -> Vec<String> {
    let mut out = BTreeSet::new();
    for o in [biblio(), bibtex()] {
        for c in &o.concepts {
            if c.raw() != ROOT {
                out.insert(display_label(c.raw()));
            }
        }
    }
    out.into_iter().collect()
}

/// Raw class names for random ontologies: fixture classes plus a few extra
/// kb words, including some the kb lacks.
pub fn vocabulary() -> Vec<String> {
    let mut v: BTreeSet<String> = fixture_labels().iter().map(|l| l.replace(' ', "_")).collect();
    for extra in ["Student", "Pupil", "Car", "Transport", "Phone", "Entity"] {
        v.insert(extra.to_owned());
    }
    v.into_iter().collect()
}

/// Small ontologies over the fixture vocabulary. Edges always point from a
/// later pick to an earlier one, so the result is acyclic.
pub fn arb_vocab_ontology() -> impl Strategy<Value = Ontology> {
    let vocab = vocabulary();
    let n = vocab.len();
    proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 2..=8)
        .prop_shuffle()
        .prop_flat_map(|picks| {
            let k = picks.len();
            (Just(picks), proptest::collection::vec((0..k, 0..k), 0..k * 2))
        })
        .prop_map(move |(picks, pairs)| {
            let mut o = Ontology::new("rand");
            for &p in &picks {
                o.add_concept(&vocab[p]);
            }
            for (x, y) in pairs {
                if x != y {
                    let (c, p) = (x.max(y), x.min(y));
                    o.add_edge(&vocab[picks[c]], &vocab[picks[p]]);
                }
            }
            o
        })
}

fn arb_name() -> impl Strategy<Value = String> {
    "[A-Z][a-z]{1,6}(_[A-Z][a-z]{1,5})?"
}

/// Arbitrary valid ontologies: distinct names, acyclic edges, synonyms that
/// sort after their class, instances and disjointness axioms.
pub fn arb_ontology() -> impl Strategy<Value = Ontology> {
    proptest::collection::btree_set(arb_name(), 1..12)
        .prop_flat_map(|names| {
            let names: Vec<String> = names.into_iter().filter(|n| n != ROOT).collect();
            let k = names.len().max(1);
            (
                Just(names),
                proptest::collection::vec((0..k, 0..k), 0..k * 2),
                proptest::collection::vec(any::<bool>(), k),
                proptest::collection::vec(("[a-z]{1,8}", 0..k), 0..4),
                proptest::collection::vec((0..k, 0..k), 0..3),
            )
        })
        .prop_map(|(names, pairs, syn_flags, insts, disj)| {
            let mut o = Ontology::new("rand");
            if names.is_empty() {
                return o;
            }
            // A name flagged as synonym folds into the nearest earlier class.
            let mut class_of = vec![0usize; names.len()];
            for i in 0..names.len() {
                class_of[i] = if i > 0 && syn_flags[i] { class_of[i - 1] } else { i };
                if class_of[i] == i {
                    o.add_concept(&names[i]);
                }
            }
            for i in 0..names.len() {
                if class_of[i] != i {
                    o.concept_mut(&names[class_of[i]])
                        .unwrap()
                        .synonyms
                        .insert(names[i].clone());
                }
            }
            let canon = |i: usize| names[class_of[i]].clone();
            for (x, y) in pairs {
                let (c, p) = (x.max(y), x.min(y));
                if class_of[c] != class_of[p] {
                    o.add_edge(&canon(c), &canon(p));
                }
            }
            for (inst, c) in insts {
                o.instances.insert((inst, canon(c)));
            }
            for (x, y) in disj {
                if class_of[x] != class_of[y] {
                    o.add_disjoint(&canon(x), &canon(y));
                }
            }
            o
        })
}

/// Writes the classes of `o` as RDF/XML, one element per class, in the given
/// order.
pub fn owl_text_in_order(o: &Ontology, order: &[usize]) -> String {
    let mut s = String::from(
        "<?xml version=\"1.0\"?>\n<rdf:RDF xmlns:rdf=\"http://www.w3.org/1999/02/22-rdf-syntax-ns#\" \
         xmlns:rdfs=\"http://www.w3.org/2000/01/rdf-schema#\" xmlns:owl=\"http://www.w3.org/2002/07/owl#\">\n",
    );
    for &i in order {
        let c = &o.concepts[i];
        s.push_str(&format!("<owl:Class rdf:ID=\"{}\">\n", c.raw()));
        for p in o.parents(c.raw()) {
            s.push_str(&format!("  <rdfs:subClassOf rdf:resource=\"#{p}\"/>\n"));
        }
        s.push_str("</owl:Class>\n");
    }
    s.push_str("</rdf:RDF>\n");
    s
}

fn closure(n: usize, edges: &BTreeSet<(usize, usize)>) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for &(a, b) in edges {
        r[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

/// Brute-force transitive reduction: keep (u,v) unless some w sits strictly
/// between them.
pub fn reduction_oracle(n: usize, edges: &BTreeSet<(usize, usize)>) -> BTreeSet<(usize, usize)> {
    let r = closure(n, edges);
    edges
        .iter()
        .copied()
        .filter(|&(u, v)| !(0..n).any(|w| w != u && w != v && r[u][w] && r[w][v]))
        .collect()
}

/// Random DAGs on up to ten nodes, edges from lower to higher index after a
/// random relabelling.
pub fn arb_dag() -> impl Strategy<Value = (usize, BTreeSet<(usize, usize)>)> {
    (1usize..=10)
        .prop_flat_map(|n| {
            (
                Just(n),
                Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
                proptest::collection::vec((0..n, 0..n), 0..n * n),
            )
        })
        .prop_map(|(n, perm, pairs)| {
            let edges = pairs
                .into_iter()
                .filter(|(a, b)| a != b)
                .map(|(a, b)| (perm[a.min(b)], perm[a.max(b)]))
                .collect();
            (n, edges)
        })
}

pub fn arb_counts() -> impl Strategy<Value = Vec<u64>> {
    proptest::collection::vec(0u64..1_000_000, 1..15)
}

pub fn results_of(counts: &[u64]) -> Vec<QueryResult> {
    counts
        .iter()
        .enumerate()
        .map(|(i, &c)| QueryResult {
            query: format!("X is a C{i}"),
            candidate: format!("C{i}"),
            count: c,
        })
        .collect()
}

pub fn selected_set(results: &[QueryResult]) -> BTreeSet<String> {
    let tau = compute_threshold(results).unwrap();
    select_hypernyms(results, tau).into_iter().collect()
}

pub fn arb_overlay_entries() -> impl Strategy<Value = Vec<OverlayEntry>> {
    let ids: Vec<SynsetId> = kb().synsets().iter().map(|s| s.id).collect();
    proptest::collection::vec(
        (
            "[a-z]{2,8}( [a-z]{2,6})?",
            proptest::sample::subsequence(ids, 1..4),
            "[A-Za-z0-9 ._-]{0,12}",
        ),
        0..6,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (lemma, targets, prov))| OverlayEntry {
                new_lemma: format!("zq{i} {lemma}"),
                hypernym_targets: targets,
                provenance: prov,
            })
            .collect()
    })
}

// Property bodies shared by the proptest suite and the acceptance runner.

pub fn prop_classify_dual(a: &str, b: &str) -> Result<(), TestCaseError> {
    let kb = kb();
    prop_assert_eq!(classify(a, b, kb), classify(b, a, kb).dual(), "{} / {}", a, b);
    Ok(())
}

pub fn prop_resolve_idempotent_and_self_merge_fixed(o: &Ontology) -> Result<(), TestCaseError> {
    let kb = kb();
    let once = resolve(o, kb).map_err(|e| TestCaseError::fail(e.to_string()))?.ontology;
    let twice = resolve(&once, kb)
        .map_err(|e| TestCaseError::fail(e.to_string()))?
        .ontology;
    prop_assert!(
        once.same_structure(&twice),
        "resolve not idempotent:\n{:?}\n{:?}",
        once,
        twice
    );
    let merged = merge(&once, &once, kb)
        .map_err(|e| TestCaseError::fail(e.to_string()))?
        .ontology;
    prop_assert!(
        once.same_structure(&merged),
        "self-merge moved:\n{:?}\n{:?}",
        once,
        merged
    );
    Ok(())
}

pub fn prop_reduction_matches_oracle(n: usize, edges: &BTreeSet<(usize, usize)>) -> Result<(), TestCaseError> {
    let expected = reduction_oracle(n, edges);
    prop_assert_eq!(transitive_reduction(n, edges), expected.clone());
    let classes: Vec<ClassSpec> = (0..n)
        .map(|i| ClassSpec {
            members: [format!("N{i:02}")].into_iter().collect(),
        })
        .collect();
    let (o, _) = build_hierarchy("dag", &classes, edges, &[]).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let mut want: BTreeSet<(String, String)> = expected
        .iter()
        .map(|&(a, b)| (format!("N{a:02}"), format!("N{b:02}")))
        .collect();
    for i in 0..n {
        if !expected.iter().any(|&(a, _)| a == i) {
            want.insert((format!("N{i:02}"), ROOT.to_owned()));
        }
    }
    prop_assert_eq!(o.subclass_edges, want);
    Ok(())
}

pub fn prop_threshold_invariance(counts: &[u64], perm_seed: &[usize], k: u64) -> Result<(), TestCaseError> {
    let results = results_of(counts);
    let base = selected_set(&results);
    let mut shuffled = results.clone();
    for (i, &s) in perm_seed.iter().enumerate() {
        let j = s % shuffled.len();
        let i = i % shuffled.len();
        shuffled.swap(i, j);
    }
    prop_assert_eq!(
        compute_threshold(&shuffled).unwrap(),
        compute_threshold(&results).unwrap()
    );
    prop_assert_eq!(selected_set(&shuffled), base.clone());
    let scaled: Vec<QueryResult> = results
        .iter()
        .map(|r| QueryResult {
            count: r.count * k,
            ..r.clone()
        })
        .collect();
    prop_assert_eq!(selected_set(&scaled), base);
    Ok(())
}

pub fn prop_owl_round_trip(o: &Ontology) -> Result<(), TestCaseError> {
    prop_assert!(validate_ontology(o).is_empty(), "{:?}", validate_ontology(o));
    let text = serialize_owl(o);
    let back = parse_owl("rand", &text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
    prop_assert!(o.same_structure(&back), "{}", text);
    prop_assert_eq!(serialize_owl(&back), text);
    Ok(())
}

pub fn prop_parse_order_insensitive(o: &Ontology, perm_seed: &[usize]) -> Result<(), TestCaseError> {
    let n = o.concepts.len();
    let identity: Vec<usize> = (0..n).collect();
    let mut order = identity.clone();
    for (i, &s) in perm_seed.iter().enumerate() {
        if n > 0 {
            order.swap(i % n, s % n);
        }
    }
    let plain = parse_owl("a", &owl_text_in_order(o, &identity)).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let shuffled = parse_owl("a", &owl_text_in_order(o, &order)).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(plain.same_structure(&shuffled));
    Ok(())
}

pub fn prop_overlay_round_trip(entries: &[OverlayEntry]) -> Result<(), TestCaseError> {
    for e in entries {
        let back = parse_overlay_line(&e.to_line()).map_err(TestCaseError::fail)?.unwrap();
        prop_assert_eq!(back.new_lemma, e.new_lemma.replace(' ', "_"));
        prop_assert_eq!(&back.hypernym_targets, &e.hypernym_targets);
        prop_assert_eq!(back.provenance, e.provenance.clone());
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("overlay.tsv");
    let w = write_overlay(entries, &path).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(w.is_empty());
    let loaded = load_knowledge_base(&fixture("wordnet"), &[path]).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(loaded.overlay_entries().len(), entries.len());
    for e in entries {
        let lemma = e.new_lemma.replace(' ', "_");
        let senses = loaded.senses(&lemma);
        prop_assert_eq!(senses.len(), 1, "{}", lemma);
        let s = loaded.synset(senses[0]).unwrap();
        let mut ups: Vec<SynsetId> = s
            .pointers
            .iter()
            .filter(|(k, _)| k.is_upward())
            .map(|(_, t)| *t)
            .collect();
        ups.sort();
        let mut want = e.hypernym_targets.clone();
        want.sort();
        prop_assert_eq!(ups, want);
    }
    Ok(())
}

/// Random directed graphs, cycles allowed.
pub fn arb_graph() -> impl Strategy<Value = (usize, BTreeSet<(usize, usize)>)> {
    (1usize..=8).prop_flat_map(|n| (Just(n), proptest::collection::btree_set((0..n, 0..n), 0..n * 2)))
}

pub fn prop_validate_matches_brute_force(n: usize, edges: &BTreeSet<(usize, usize)>) -> Result<(), TestCaseError> {
    let mut o = Ontology::new("g");
    for i in 0..n {
        o.add_concept(&format!("N{i}"));
    }
    for &(a, b) in edges {
        o.add_edge(&format!("N{a}"), &format!("N{b}"));
    }
    let brute_self = edges.iter().any(|(a, b)| a == b);
    let proper: BTreeSet<(usize, usize)> = edges.iter().copied().filter(|(a, b)| a != b).collect();
    let rp = closure(n, &proper);
    let brute_cycle = (0..n).any(|i| rp[i][i]);
    let v = validate_ontology(&o);
    prop_assert_eq!(v.iter().any(|x| matches!(x, Violation::SelfLoop(_))), brute_self);
    prop_assert_eq!(v.iter().any(|x| matches!(x, Violation::Cycle(_))), brute_cycle);
    Ok(())
}
