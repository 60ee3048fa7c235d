//! Subclass edges that contradict the knowledge base, and hierarchy repair.

use std::fmt;

use crate::merge::{unify, MergeError, MergeOptions};
use crate::owl::{display_label, Ontology};
use crate::relations::{classify, SemanticRelation};
use crate::wordnet::KnowledgeBase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Disposition {
    /// The kb orders the pair the other way round.
    Flip,
    /// The kb treats child and parent as the same concept.
    Collapse,
    /// The kb reads the pair as disjoint; reported as a warning.
    Keep,
}

impl fmt::Display for Disposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Disposition::Flip => "flip",
            Disposition::Collapse => "collapse",
            Disposition::Keep => "keep",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conflict {
    pub child: String,
    pub parent: String,
    pub asserted: SemanticRelation,
    pub kb_relation: SemanticRelation,
    pub disposition: Disposition,
}

pub fn detect_conflicts(o: &Ontology, kb: &KnowledgeBase) -> Vec<Conflict> {
    o.subclass_edges
        .iter()
        .filter(|(c, p)| c != crate::owl::ROOT && p != crate::owl::ROOT)
        .filter_map(|(c, p)| {
            let kb_relation = classify(&display_label(c), &display_label(p), kb);
            let disposition = match kb_relation {
                SemanticRelation::Generalization => Disposition::Flip,
                SemanticRelation::Equivalence => Disposition::Collapse,
                SemanticRelation::Disjointness => Disposition::Keep,
                SemanticRelation::Specialization | SemanticRelation::Unknown => return None,
            };
            Some(Conflict {
                child: c.clone(),
                parent: p.clone(),
                asserted: SemanticRelation::Specialization,
                kb_relation,
                disposition,
            })
        })
        .collect()
}

pub fn conflicts_tsv(conflicts: &[Conflict]) -> String {
    let mut out = String::new();
    for c in conflicts {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            c.child,
            c.parent,
            c.kb_relation.glyph(),
            c.disposition
        ));
    }
    out
}

#[derive(Debug, Clone)]
pub struct Resolution {
    pub ontology: Ontology,
    pub warnings: Vec<String>,
}

/// Rebuilds the hierarchy of `o` from the knowledge base; concepts the kb
/// does not know keep their asserted parents.
pub fn resolve(o: &Ontology, kb: &KnowledgeBase) -> Result<Resolution, MergeError> {
    resolve_with(o, kb, MergeOptions::default())
}

pub fn resolve_with(o: &Ontology, kb: &KnowledgeBase, opts: MergeOptions) -> Result<Resolution, MergeError> {
    let out = unify(&o.id, &[o], kb, opts)?;
    Ok(Resolution {
        ontology: out.ontology,
        warnings: out.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::owl::ROOT;
    use crate::wordnet::load_knowledge_base;
    use std::path::Path;

    fn kb() -> KnowledgeBase {
        load_knowledge_base(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/wordnet"), &[]).unwrap()
    }

    fn onto(edges: &[(&str, &str)]) -> Ontology {
        let mut o = Ontology::new("t");
        for (c, p) in edges {
            o.add_concept(c);
            o.add_concept(p);
            o.add_edge(c, p);
        }
        o
    }

    #[test]
    fn person_under_agent_is_flipped() {
        let kb = kb();
        let o = onto(&[("Person", "Agent"), ("Corporate_Body", "Agent"), ("Student", "Person")]);
        let c = detect_conflicts(&o, &kb);
        assert_eq!(c.len(), 1);
        assert_eq!((c[0].child.as_str(), c[0].parent.as_str()), ("Person", "Agent"));
        assert_eq!(c[0].kb_relation, SemanticRelation::Generalization);
        assert_eq!(c[0].disposition, Disposition::Flip);
        assert_eq!(conflicts_tsv(&c), "Person\tAgent\t>\tflip\n");

        let r = resolve(&o, &kb).unwrap().ontology;
        assert!(r.subclass_edges.contains(&("Agent".into(), "Person".into())));
        assert!(!r.subclass_edges.contains(&("Person".into(), "Agent".into())));
        assert!(r.subclass_edges.contains(&("Corporate_Body".into(), "Agent".into())));
    }

    #[test]
    fn equivalent_edge_collapses() {
        let kb = kb();
        let o = onto(&[("Pupil", "Student")]);
        let c = detect_conflicts(&o, &kb);
        assert_eq!(c[0].disposition, Disposition::Collapse);
        let r = resolve(&o, &kb).unwrap().ontology;
        assert_eq!(r.concepts.len(), 2);
        let node = r.concept("Pupil").unwrap();
        assert!(node.synonyms.contains("Student"));
    }

    #[test]
    fn agreeing_ontology_is_a_fixed_point() {
        let kb = kb();
        let o = onto(&[("Student", "Person"), ("Person", ROOT)]);
        let r = resolve(&o, &kb).unwrap().ontology;
        assert!(r.same_structure(&o));
        let rr = resolve(&r, &kb).unwrap().ontology;
        assert!(rr.same_structure(&r));
    }

    #[test]
    fn disjoint_edge_is_removed() {
        let kb = kb();
        let o = onto(&[("Book", "Phone")]);
        assert_eq!(detect_conflicts(&o, &kb)[0].disposition, Disposition::Keep);
        let r = resolve(&o, &kb).unwrap().ontology;
        assert!(r.subclass_edges.contains(&("Book".into(), ROOT.into())));
        assert!(r.subclass_edges.contains(&("Phone".into(), ROOT.into())));
    }
}
