//! Five-valued semantic relations between concept labels, decided against the
//! knowledge base.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::text;
use crate::wordnet::{KnowledgeBase, PointerKind, SynsetId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SemanticRelation {
    Equivalence,
    Specialization,
    Generalization,
    Disjointness,
    Unknown,
}

impl SemanticRelation {
    pub const ALL: [SemanticRelation; 5] = [
        SemanticRelation::Equivalence,
        SemanticRelation::Specialization,
        SemanticRelation::Generalization,
        SemanticRelation::Disjointness,
        SemanticRelation::Unknown,
    ];

    pub fn dual(self) -> Self {
        match self {
            SemanticRelation::Specialization => SemanticRelation::Generalization,
            SemanticRelation::Generalization => SemanticRelation::Specialization,
            r => r,
        }
    }

    /// ASCII glyph used in tab-separated files.
    pub fn glyph(self) -> char {
        match self {
            SemanticRelation::Equivalence => '=',
            SemanticRelation::Specialization => '<',
            SemanticRelation::Generalization => '>',
            SemanticRelation::Disjointness => '!',
            SemanticRelation::Unknown => '?',
        }
    }

    pub fn from_glyph(s: &str) -> Option<Self> {
        Some(match s {
            "=" | "≡" => SemanticRelation::Equivalence,
            "<" | "⊂" => SemanticRelation::Specialization,
            ">" | "⊃" => SemanticRelation::Generalization,
            "!" | "⊥" => SemanticRelation::Disjointness,
            "?" | "??" => SemanticRelation::Unknown,
            _ => return None,
        })
    }

    pub fn symbol(self) -> &'static str {
        match self {
            SemanticRelation::Equivalence => "≡",
            SemanticRelation::Specialization => "⊂",
            SemanticRelation::Generalization => "⊃",
            SemanticRelation::Disjointness => "⊥",
            SemanticRelation::Unknown => "??",
        }
    }
}

impl fmt::Display for SemanticRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RelationError {
    #[error("label `{0}` is empty after stop-word removal")]
    EmptyLabel(String),
}

/// Normalized lookup key of a label: the joined form, and its stemmed
/// fallback.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LemmaKey {
    pub full: String,
    pub stemmed: String,
}

pub fn preprocess_label(label: &str) -> Result<LemmaKey, RelationError> {
    let kept: Vec<String> = text::tokens(label)
        .into_iter()
        .filter(|t| !text::is_stop_word(t))
        .collect();
    if kept.is_empty() {
        return Err(RelationError::EmptyLabel(label.to_owned()));
    }
    let full = kept.join("_");
    let stemmed = text::stem_key(&full);
    Ok(LemmaKey { full, stemmed })
}

/// Senses of a key: the exact lemma first, else every lemma sharing its stem.
pub fn senses_of(kb: &KnowledgeBase, key: &LemmaKey) -> Vec<SynsetId> {
    let exact = kb.senses(&key.full);
    if !exact.is_empty() {
        return exact.to_vec();
    }
    let mut out: Vec<SynsetId> = Vec::new();
    for lemma in kb.lemmas_with_stem(&key.stemmed) {
        for s in kb.senses(lemma) {
            if !out.contains(s) {
                out.push(*s);
            }
        }
    }
    out
}

/// Whether the label preprocesses and resolves to at least one sense.
pub fn resolves(kb: &KnowledgeBase, label: &str) -> bool {
    preprocess_label(label)
        .map(|k| !senses_of(kb, &k).is_empty())
        .unwrap_or(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvidenceSet {
    pub eq: bool,
    /// Minimal number of upward pointer steps from a sense of `a` to a sense of `b`.
    pub spec: Option<u32>,
    pub gen: Option<u32>,
    pub disj: bool,
}

/// Precomputed lookup data for one label.
#[derive(Debug, Clone)]
pub struct Profile {
    key: String,
    senses: Vec<usize>,
    /// Minimal positive upward distance to every synset above some sense.
    up: HashMap<usize, u32>,
    hypernyms: Vec<HashSet<usize>>,
    antonyms: HashSet<usize>,
}

impl Profile {
    pub fn build(kb: &KnowledgeBase, label: &str) -> Option<Profile> {
        let key = preprocess_label(label).ok()?;
        let senses: Vec<usize> = senses_of(kb, &key).into_iter().filter_map(|s| kb.index_of(s)).collect();
        if senses.is_empty() {
            return None;
        }
        let mut up: HashMap<usize, u32> = HashMap::new();
        for &s in &senses {
            let mut dist = HashMap::from([(s, 0u32)]);
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                let d = dist[&x];
                for y in kb.pointer_indices(x, PointerKind::is_upward) {
                    if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(y) {
                        e.insert(d + 1);
                        queue.push_back(y);
                        let best = up.entry(y).or_insert(d + 1);
                        *best = (*best).min(d + 1);
                    }
                }
            }
        }
        let hypernyms = senses.iter().map(|&s| kb.hypernym_indices(s).collect()).collect();
        let antonyms = senses
            .iter()
            .flat_map(|&s| kb.pointer_indices(s, |k| k == PointerKind::Antonym))
            .collect();
        Some(Profile {
            key: key.full,
            senses,
            up,
            hypernyms,
            antonyms,
        })
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    fn distance_to(&self, other: &Profile) -> Option<u32> {
        other.senses.iter().filter_map(|s| self.up.get(s)).copied().min()
    }

    pub fn evidence(&self, other: &Profile) -> EvidenceSet {
        let eq = self.key == other.key || self.senses.iter().any(|s| other.senses.contains(s));
        let antonym = self.senses.iter().any(|s| other.antonyms.contains(s))
            || other.senses.iter().any(|s| self.antonyms.contains(s));
        let cohyponym = self.senses.iter().zip(&self.hypernyms).any(|(x, hx)| {
            other
                .senses
                .iter()
                .zip(&other.hypernyms)
                .any(|(y, hy)| x != y && !hx.is_disjoint(hy))
        });
        EvidenceSet {
            eq,
            spec: self.distance_to(other),
            gen: other.distance_to(self),
            disj: antonym || cohyponym,
        }
    }

    pub fn relate(&self, other: &Profile) -> SemanticRelation {
        decide(&self.evidence(other), &self.key, &other.key)
    }
}

fn decide(e: &EvidenceSet, a: &str, b: &str) -> SemanticRelation {
    use SemanticRelation::*;
    if e.eq {
        return Equivalence;
    }
    match (e.spec, e.gen) {
        (Some(s), Some(g)) if s < g => Specialization,
        (Some(s), Some(g)) if g < s => Generalization,
        (Some(_), Some(_)) => {
            if a < b {
                Specialization
            } else {
                Generalization
            }
        }
        (Some(_), None) => Specialization,
        (None, Some(_)) => Generalization,
        // With or without co-hyponym/antonym evidence, resolvable but
        // unrelated pairs read as disjoint.
        (None, None) => Disjointness,
    }
}

/// Evidence between two keys; `None` when either key is absent from the kb.
pub fn evidence(a: &LemmaKey, b: &LemmaKey, kb: &KnowledgeBase) -> Option<EvidenceSet> {
    let pa = Profile::build(kb, &a.full.replace('_', " "))?;
    let pb = Profile::build(kb, &b.full.replace('_', " "))?;
    Some(pa.evidence(&pb))
}

pub fn classify(a: &str, b: &str, kb: &KnowledgeBase) -> SemanticRelation {
    match (Profile::build(kb, a), Profile::build(kb, b)) {
        (Some(pa), Some(pb)) => pa.relate(&pb),
        _ => SemanticRelation::Unknown,
    }
}

/// Profiles for a list of labels, computed once per distinct label.
pub fn profiles(kb: &KnowledgeBase, labels: &[String]) -> HashMap<String, Option<Profile>> {
    let mut unique: Vec<&String> = labels.iter().collect();
    unique.sort();
    unique.dedup();
    unique
        .into_par_iter()
        .map(|l| (l.clone(), Profile::build(kb, l)))
        .collect()
}

pub fn relate_opt(a: Option<&Profile>, b: Option<&Profile>) -> SemanticRelation {
    match (a, b) {
        (Some(a), Some(b)) => a.relate(b),
        _ => SemanticRelation::Unknown,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    cells: Vec<SemanticRelation>,
}

impl RelationMatrix {
    /// Row-major cells; panics if the cell count does not match.
    pub fn from_cells(rows: Vec<String>, cols: Vec<String>, cells: Vec<SemanticRelation>) -> Self {
        assert_eq!(rows.len() * cols.len(), cells.len(), "cell count mismatch");
        RelationMatrix { rows, cols, cells }
    }

    pub fn get(&self, i: usize, j: usize) -> SemanticRelation {
        self.cells[i * self.cols.len() + j]
    }

    pub fn lookup(&self, row: &str, col: &str) -> Option<SemanticRelation> {
        let i = self.rows.iter().position(|r| r == row)?;
        let j = self.cols.iter().position(|c| c == col)?;
        Some(self.get(i, j))
    }

    /// Matrix of the swapped operands, every cell dualized.
    pub fn dual_transpose(&self) -> RelationMatrix {
        let mut cells = Vec::with_capacity(self.cells.len());
        for j in 0..self.cols.len() {
            for i in 0..self.rows.len() {
                cells.push(self.get(i, j).dual());
            }
        }
        RelationMatrix {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            cells,
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for c in &self.cols {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for (i, r) in self.rows.iter().enumerate() {
            out.push_str(r);
            for j in 0..self.cols.len() {
                out.push('\t');
                out.push(self.get(i, j).glyph());
            }
            out.push('\n');
        }
        out
    }
}

pub fn relation_matrix(rows: &[String], cols: &[String], kb: &KnowledgeBase) -> RelationMatrix {
    let mut all: Vec<String> = rows.to_vec();
    all.extend_from_slice(cols);
    let prof = profiles(kb, &all);
    let cells = (0..rows.len() * cols.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / cols.len(), k % cols.len());
            relate_opt(prof[&rows[i]].as_ref(), prof[&cols[j]].as_ref())
        })
        .collect();
    RelationMatrix {
        rows: rows.to_vec(),
        cols: cols.to_vec(),
        cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wordnet::load_knowledge_base;
    use std::path::Path;
    use SemanticRelation::*;

    fn kb() -> KnowledgeBase {
        load_knowledge_base(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/wordnet"), &[]).unwrap()
    }

    fn key(s: &str) -> LemmaKey {
        preprocess_label(s).unwrap()
    }

    #[test]
    fn preprocessing() {
        assert_eq!(key("Corporate Body").full, "corporate_body");
        assert_eq!(key("The Publisher").full, "publisher");
        assert_eq!(key("Universities").stemmed, "universiti");
        assert_eq!(
            preprocess_label("the of"),
            Err(RelationError::EmptyLabel("the of".into()))
        );
    }

    #[test]
    fn stem_fallback_finds_university() {
        let kb = kb();
        assert_eq!(senses_of(&kb, &key("Universities")), kb.senses("university"));
        assert_eq!(classify("Universities", "University", &kb), Equivalence);
    }

    #[test]
    fn evidence_examples() {
        let kb = kb();
        let e = evidence(&key("student"), &key("person"), &kb).unwrap();
        assert!(e.spec.is_some() && !e.eq);
        assert!(evidence(&key("student"), &key("pupil"), &kb).unwrap().eq);
        assert!(evidence(&key("journal"), &key("series"), &kb).unwrap().disj);
        let bp = evidence(&key("book"), &key("phone"), &kb).unwrap();
        assert!(!bp.eq && bp.spec.is_none() && bp.gen.is_none());
        assert!(evidence(&key("corporate body"), &key("person"), &kb).is_none());
    }

    #[test]
    fn classify_examples() {
        let kb = kb();
        assert_eq!(classify("Transport", "Car", &kb), Generalization);
        assert_eq!(classify("Agent", "Person", &kb), Specialization);
        assert_eq!(classify("Corporate Body", "Organization", &kb), Unknown);
        assert_eq!(classify("Book", "Phone", &kb), Disjointness);
        for x in ["Agent", "Concept", "Organization", "Student"] {
            assert_eq!(classify(x, x, &kb), Equivalence);
        }
        assert_eq!(classify("Corporate Body", "Corporate Body", &kb), Unknown);
    }

    #[test]
    fn enumerated_pairs() {
        let kb = kb();
        for (a, b, r) in [
            ("Agent", "Group", Specialization),
            ("Person", "Group", Specialization),
            ("Person", "Publisher", Generalization),
            ("Person", "Author", Generalization),
            ("Group", "Conference", Generalization),
            ("Group", "Organization", Generalization),
            ("Group", "University", Generalization),
            ("Conference", "Organization", Specialization),
            ("University", "Organization", Specialization),
            ("Publisher", "Organization", Specialization),
            ("Publisher", "Person", Specialization),
        ] {
            assert_eq!(classify(a, b, &kb), r, "{a} {b}");
            assert_eq!(classify(b, a, &kb), r.dual(), "{b} {a}");
        }
    }

    #[test]
    fn matrix_cells_and_dual_transpose() {
        let kb = kb();
        let a: Vec<String> = ["Person", "Conference"].map(String::from).to_vec();
        let b: Vec<String> = ["Author", "Organization"].map(String::from).to_vec();
        let m = relation_matrix(&a, &b, &kb);
        assert_eq!(m.lookup("Person", "Author"), Some(Generalization));
        assert_eq!(m.lookup("Conference", "Organization"), Some(Specialization));
        assert_eq!(relation_matrix(&b, &a, &kb), m.dual_transpose());
        let one = vec!["Person".to_string()];
        assert_eq!(relation_matrix(&one, &one, &kb).get(0, 0), Equivalence);
        assert_eq!(m.to_tsv().lines().next(), Some("\tAuthor\tOrganization"));
    }

    #[test]
    fn glyph_round_trip() {
        for r in SemanticRelation::ALL {
            assert_eq!(SemanticRelation::from_glyph(&r.glyph().to_string()), Some(r));
            assert_eq!(SemanticRelation::from_glyph(r.symbol()), Some(r));
            assert_eq!(r.dual().dual(), r);
        }
    }
}
