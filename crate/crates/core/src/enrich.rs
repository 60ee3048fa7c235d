//! Placement of missing concepts in the knowledge base, written as overlays.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::Ratio;

use crate::owl::{display_label, Ontology, ROOT};
use crate::relations::{preprocess_label, senses_of, LemmaKey};
use crate::text;
use crate::wordnet::{hypernym_chains, normalize_lemma, KnowledgeBase, OverlayEntry, SynsetId};

/// How a single direct super-concept was handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Via {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    /// The super-concept has a single sense.
    One,
    /// The super-concept has several senses; the most similar paths win.
    Two,
    /// Several super-concepts, each handled as case one or two.
    Three { via: Via },
}

impl Case {
    fn effective(self) -> Via {
        match self {
            Case::One | Case::Three { via: Via::One } => Via::One,
            Case::Two | Case::Three { via: Via::Two } => Via::Two,
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Case::One => f.write_str("case1"),
            Case::Two => f.write_str("case2"),
            Case::Three { via: Via::One } => f.write_str("case3/case1"),
            Case::Three { via: Via::Two } => f.write_str("case3/case2"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attachment {
    pub lemma: String,
    /// Raw id of the super-concept in the merged ontology.
    pub parent: String,
    pub target_sense: SynsetId,
    pub case_applied: Case,
    /// Present exactly when the effective case is two.
    pub similarity: Option<Ratio<u32>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Plan {
    pub attachments: Vec<Attachment>,
    pub warnings: Vec<String>,
}

fn node_keys(labels: &[String]) -> Vec<LemmaKey> {
    labels.iter().filter_map(|l| preprocess_label(l).ok()).collect()
}

fn matches(keys: &[LemmaKey], lemmas: &[String]) -> bool {
    keys.iter()
        .any(|k| lemmas.iter().any(|l| *l == k.full || text::stem_key(l) == k.stemmed))
}

/// Share of merged-path nodes (each a list of labels) that appear on the kb
/// path (each entry the lemmas of one synset). Nodes with identical keys
/// count once.
pub fn path_similarity(path_m: &[Vec<String>], path_w: &[Vec<String>]) -> Ratio<u32> {
    let mut seen = BTreeSet::new();
    let nodes: Vec<Vec<LemmaKey>> = path_m
        .iter()
        .map(|labels| node_keys(labels))
        .filter(|k| !k.is_empty() && seen.insert(k.clone()))
        .collect();
    if nodes.is_empty() {
        return Ratio::from_integer(0);
    }
    let hit = nodes
        .iter()
        .filter(|keys| path_w.iter().any(|synset| matches(keys, synset)))
        .count();
    Ratio::new(hit as u32, nodes.len() as u32)
}

fn labels_of(merged: &Ontology, raw: &str) -> Vec<String> {
    merged
        .node_of(raw)
        .map(|c| c.all_raw().map(display_label).collect())
        .unwrap_or_else(|| vec![display_label(raw)])
}

/// The super-concept `x` and all of its ancestors, root excluded.
fn merged_path(merged: &Ontology, x: &str) -> Vec<Vec<String>> {
    let mut nodes = vec![x.to_owned()];
    nodes.extend(merged.ancestors(x).into_iter().filter(|a| a != ROOT));
    nodes.iter().map(|n| labels_of(merged, n)).collect()
}

pub fn enrichment_plan(kb: &KnowledgeBase, merged: &Ontology, missing: &str) -> Plan {
    let mut plan = Plan::default();
    let Some(node) = merged.node_by_label(missing) else {
        plan.warnings.push(format!("`{missing}` is not in the merged ontology"));
        return plan;
    };
    let labels = labels_of(merged, node.raw());
    let Some(key) = node_keys(&labels).into_iter().next() else {
        plan.warnings.push(format!("`{missing}` has no usable label"));
        return plan;
    };
    if labels
        .iter()
        .filter_map(|l| preprocess_label(l).ok())
        .any(|k| !senses_of(kb, &k).is_empty())
    {
        plan.warnings
            .push(format!("`{missing}` is already in the knowledge base"));
        return plan;
    }
    let lemma = key.full;
    let parents: Vec<String> = merged
        .parents(node.raw())
        .filter(|p| *p != ROOT)
        .map(str::to_owned)
        .collect();
    if parents.is_empty() {
        return plan;
    }
    let several = parents.len() > 1;
    let mut used = 0;
    for x in &parents {
        let senses = node_keys(&labels_of(merged, x))
            .iter()
            .map(|k| senses_of(kb, k))
            .find(|s| !s.is_empty())
            .unwrap_or_default();
        if senses.is_empty() {
            plan.warnings.push(format!(
                "super-concept `{x}` of `{missing}` is not in the knowledge base; skipped"
            ));
            continue;
        }
        used += 1;
        let wrap = |via: Via| {
            if several {
                Case::Three { via }
            } else if via == Via::One {
                Case::One
            } else {
                Case::Two
            }
        };
        if senses.len() == 1 {
            plan.attachments.push(Attachment {
                lemma: lemma.clone(),
                parent: x.clone(),
                target_sense: senses[0],
                case_applied: wrap(Via::One),
                similarity: None,
            });
            continue;
        }
        let path_m = merged_path(merged, x);
        let scored: Vec<(SynsetId, Ratio<u32>)> = senses
            .iter()
            .map(|&s| {
                let best = hypernym_chains(kb, s)
                    .iter()
                    .map(|chain| {
                        let path_w: Vec<Vec<String>> = chain
                            .iter()
                            .map(|id| kb.synset(*id).map(|x| x.lemmas.clone()).unwrap_or_default())
                            .collect();
                        path_similarity(&path_m, &path_w)
                    })
                    .max()
                    .unwrap_or_else(|| Ratio::from_integer(0));
                (s, best)
            })
            .collect();
        let top = scored.iter().map(|(_, r)| *r).max().unwrap();
        if top == Ratio::from_integer(0) {
            plan.warnings.push(format!(
                "no sense of `{x}` shares its path with the merged ontology; using the first sense"
            ));
            plan.attachments.push(Attachment {
                lemma: lemma.clone(),
                parent: x.clone(),
                target_sense: senses[0],
                case_applied: wrap(Via::Two),
                similarity: Some(top),
            });
            continue;
        }
        for (s, r) in scored.into_iter().filter(|(_, r)| *r == top) {
            plan.attachments.push(Attachment {
                lemma: lemma.clone(),
                parent: x.clone(),
                target_sense: s,
                case_applied: wrap(Via::Two),
                similarity: Some(r),
            });
        }
    }
    if used == 0 {
        plan.warnings
            .push(format!("no super-concept of `{missing}` is in the knowledge base"));
    }
    let mut seen = BTreeSet::new();
    plan.attachments.retain(|a| seen.insert(a.target_sense));
    debug_assert!(plan
        .attachments
        .iter()
        .all(|a| a.similarity.is_some() == (a.case_applied.effective() == Via::Two)));
    plan
}

/// One overlay entry per missing lemma, aggregating its target senses.
/// Lemmas the kb already knows are skipped with a warning.
pub fn apply_enrichment(kb: &KnowledgeBase, plan: &[Attachment], provenance: &str) -> (Vec<OverlayEntry>, Vec<String>) {
    let mut entries: Vec<OverlayEntry> = Vec::new();
    let mut warnings = Vec::new();
    for a in plan {
        let lemma = normalize_lemma(&a.lemma);
        if !kb.senses(&lemma).is_empty() {
            if !warnings.iter().any(|w: &String| w.contains(&format!("`{lemma}`"))) {
                warnings.push(format!("`{lemma}` is already in the knowledge base; skipped"));
            }
            continue;
        }
        match entries.iter_mut().find(|e| e.new_lemma == lemma) {
            Some(e) => {
                if !e.hypernym_targets.contains(&a.target_sense) {
                    e.hypernym_targets.push(a.target_sense);
                }
            }
            None => entries.push(OverlayEntry {
                new_lemma: lemma,
                hypernym_targets: vec![a.target_sense],
                provenance: provenance.to_owned(),
            }),
        }
    }
    (entries, warnings)
}

/// Tab-separated audit lines: lemma, case, super-concept, sense, similarity.
pub fn audit_text(kb: &KnowledgeBase, plan: &[Attachment]) -> String {
    let mut out = String::new();
    for a in plan {
        let gloss_lemma = kb
            .synset(a.target_sense)
            .map(|s| s.lemmas.join(","))
            .unwrap_or_default();
        let sim = a.similarity.map(|r| r.to_string()).unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            a.lemma, a.case_applied, a.parent, a.target_sense, gloss_lemma, sim
        ));
    }
    out
}
