//! Precision and recall of produced correspondences against expert mappings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_rational::Ratio;
use thiserror::Error;

use crate::merge::Correspondence;
use crate::owl::ConceptId;
use crate::relations::{preprocess_label, SemanticRelation};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: pair ({a}, {b}) already listed on line {first}")]
    Duplicate {
        path: PathBuf,
        line: usize,
        first: usize,
        a: String,
        b: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Precision over every produced correspondence.
    Strict,
    /// Precision over produced correspondences whose pair the expert lists.
    ExpertScoped,
}

impl FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(EvalMode::Strict),
            "expert-scoped" => Ok(EvalMode::ExpertScoped),
            _ => Err(format!("unknown evaluation mode `{s}`")),
        }
    }
}

impl std::fmt::Display for EvalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EvalMode::Strict => "strict",
            EvalMode::ExpertScoped => "expert-scoped",
        })
    }
}

fn norm(label: &str) -> String {
    preprocess_label(label)
        .map(|k| k.full)
        .unwrap_or_else(|_| label.trim().to_lowercase())
}

#[derive(Debug, Clone, Default)]
pub struct ExpertMapping {
    /// Normalized pair to relation.
    pairs: BTreeMap<(String, String), SemanticRelation>,
    pub source: PathBuf,
}

impl ExpertMapping {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, a: &str, b: &str) -> Option<SemanticRelation> {
        self.pairs.get(&(norm(a), norm(b))).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, String), &SemanticRelation)> {
        self.pairs.iter()
    }
}

fn rows(text: &str) -> impl Iterator<Item = (usize, Vec<String>)> + '_ {
    text.lines().enumerate().filter_map(|(n, line)| {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            None
        } else {
            Some((n + 1, line.split('\t').map(|c| c.trim().to_owned()).collect()))
        }
    })
}

/// Parses `label_a<TAB>label_b<TAB>glyph[<TAB>note]` records.
pub fn parse_expert_mappings(path: &Path, text: &str) -> Result<ExpertMapping, EvalError> {
    let mut pairs = BTreeMap::new();
    let mut first_line: BTreeMap<(String, String), usize> = BTreeMap::new();
    for (line, cols) in rows(text) {
        let fmt_err = |message: String| EvalError::Format {
            path: path.to_owned(),
            line,
            message,
        };
        if cols.len() < 3 || cols.len() > 4 {
            return Err(fmt_err(format!("expected 3 or 4 columns, found {}", cols.len())));
        }
        if cols[0].is_empty() || cols[1].is_empty() {
            return Err(fmt_err("empty label".into()));
        }
        let r = SemanticRelation::from_glyph(&cols[2])
            .ok_or_else(|| fmt_err(format!("bad relation glyph `{}`", cols[2])))?;
        let key = (norm(&cols[0]), norm(&cols[1]));
        if let Some(first) = first_line.get(&key) {
            return Err(EvalError::Duplicate {
                path: path.to_owned(),
                line,
                first: *first,
                a: cols[0].clone(),
                b: cols[1].clone(),
            });
        }
        first_line.insert(key.clone(), line);
        pairs.insert(key, r);
    }
    Ok(ExpertMapping {
        pairs,
        source: path.to_owned(),
    })
}

pub fn load_expert_mappings(path: &Path) -> Result<ExpertMapping, EvalError> {
    let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_expert_mappings(path, &text)
}

/// Parses a correspondence file: `c_id<TAB>concept_a<TAB>concept_b<TAB>glyph`.
pub fn parse_correspondences(path: &Path, text: &str) -> Result<Vec<Correspondence>, EvalError> {
    rows(text)
        .map(|(line, cols)| {
            let fmt_err = |message: String| EvalError::Format {
                path: path.to_owned(),
                line,
                message,
            };
            if cols.len() != 4 {
                return Err(fmt_err(format!("expected 4 columns, found {}", cols.len())));
            }
            let r = SemanticRelation::from_glyph(&cols[3])
                .ok_or_else(|| fmt_err(format!("bad relation glyph `{}`", cols[3])))?;
            Ok(Correspondence {
                c_id: cols[0].clone(),
                a: ConceptId::new(cols[1].replace(' ', "_")),
                b: ConceptId::new(cols[2].replace(' ', "_")),
                r,
            })
        })
        .collect()
}

pub fn load_correspondences(path: &Path) -> Result<Vec<Correspondence>, EvalError> {
    let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_correspondences(path, &text)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Classified {
    pub correct: Vec<Correspondence>,
    pub incorrect: Vec<Correspondence>,
    pub others: Vec<Correspondence>,
}

/// Splits produced correspondences by agreement with the expert. Unknown
/// (`??`) correspondences assert nothing and are left out.
pub fn classify_results(produced: &[Correspondence], expert: &ExpertMapping) -> Classified {
    let mut out = Classified::default();
    for c in produced.iter().filter(|c| c.r != SemanticRelation::Unknown) {
        match expert.get(c.a.label(), c.b.label()) {
            Some(r) if r == c.r => out.correct.push(c.clone()),
            Some(_) => out.incorrect.push(c.clone()),
            None => out.others.push(c.clone()),
        }
    }
    out
}

fn ratio(num: usize, den: usize) -> Ratio<u64> {
    match (num, den) {
        (0, 0) => Ratio::from_integer(1),
        (_, 0) => Ratio::from_integer(0),
        (n, d) => Ratio::new(n as u64, d as u64),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalReport {
    pub correct: usize,
    pub incorrect: usize,
    pub others: usize,
    pub expert_size: usize,
    pub precision: Ratio<u64>,
    pub recall: Ratio<u64>,
    pub mode: EvalMode,
}

fn decimal(r: Ratio<u64>) -> String {
    format!("{:.3}", *r.numer() as f64 / *r.denom() as f64)
}

impl EvalReport {
    pub fn precision_f64(&self) -> f64 {
        *self.precision.numer() as f64 / *self.precision.denom() as f64
    }

    pub fn recall_f64(&self) -> f64 {
        *self.recall.numer() as f64 / *self.recall.denom() as f64
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let rows = [
            ("mode", self.mode.to_string()),
            ("expert", self.expert_size.to_string()),
            ("correct", self.correct.to_string()),
            ("incorrect", self.incorrect.to_string()),
            ("others", self.others.to_string()),
            ("precision", format!("{} ({})", decimal(self.precision), self.precision)),
            ("recall", format!("{} ({})", decimal(self.recall), self.recall)),
        ];
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<10} {v}");
        }
        let _ = writeln!(out, "P={} R={}", decimal(self.precision), decimal(self.recall));
        let _ = writeln!(
            out,
            "mode={} correct={} incorrect={} others={} expert={} precision={} recall={}",
            self.mode,
            self.correct,
            self.incorrect,
            self.others,
            self.expert_size,
            decimal(self.precision),
            decimal(self.recall)
        );
        out
    }
}

pub fn precision_recall(
    produced: &[Correspondence],
    expert: &ExpertMapping,
    mode: EvalMode,
) -> (Ratio<u64>, Ratio<u64>) {
    let r = evaluate(produced, expert, mode);
    (r.precision, r.recall)
}

pub fn evaluate(produced: &[Correspondence], expert: &ExpertMapping, mode: EvalMode) -> EvalReport {
    let c = classify_results(produced, expert);
    let (correct, incorrect, others) = (c.correct.len(), c.incorrect.len(), c.others.len());
    let precision = match mode {
        EvalMode::ExpertScoped => ratio(correct, correct + incorrect),
        EvalMode::Strict => ratio(correct, correct + incorrect + others),
    };
    EvalReport {
        correct,
        incorrect,
        others,
        expert_size: expert.len(),
        precision,
        recall: ratio(correct, expert.len()),
        mode,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use SemanticRelation::*;

    fn corr(a: &str, b: &str, r: SemanticRelation) -> Correspondence {
        Correspondence {
            c_id: "m:000001".into(),
            a: ConceptId::new(a),
            b: ConceptId::new(b),
            r,
        }
    }

    fn expert(text: &str) -> ExpertMapping {
        parse_expert_mappings(Path::new("e.tsv"), text).unwrap()
    }

    #[test]
    fn expert_lines() {
        let e = expert("# gold\nPerson\tAuthor\t>\n\nAgent\tPerson\t<\tfrom the text\n");
        assert_eq!(e.len(), 2);
        assert_eq!(e.get("Person", "Author"), Some(Generalization));
        assert_eq!(e.get("the person", "AUTHOR"), Some(Generalization));
        assert!(expert("").is_empty());
    }

    #[test]
    fn expert_errors() {
        let p = Path::new("e.tsv");
        assert!(matches!(
            parse_expert_mappings(p, "A\tB\t<\nA\tB\t>\n"),
            Err(EvalError::Duplicate { line: 2, first: 1, .. })
        ));
        assert!(matches!(
            parse_expert_mappings(p, "A\tB\tx\n"),
            Err(EvalError::Format { line: 1, .. })
        ));
        assert!(matches!(
            parse_expert_mappings(p, "A\tB\n"),
            Err(EvalError::Format { .. })
        ));
    }

    #[test]
    fn partition() {
        let e = expert("Person\tAuthor\t>\n");
        let c = classify_results(&[corr("Person", "Author", Generalization)], &e);
        assert_eq!(c.correct.len(), 1);
        let c = classify_results(&[corr("Person", "Author", Disjointness)], &e);
        assert_eq!(c.incorrect.len(), 1);
        let c = classify_results(&[corr("Person", "Editor", Generalization), corr("X", "Y", Unknown)], &e);
        assert_eq!((c.others.len(), c.correct.len(), c.incorrect.len()), (1, 0, 0));
    }

    #[test]
    fn precision_and_recall_modes() {
        let e = expert("A\tB\t<\nC\tD\t>\n");
        let produced = [corr("A", "B", Specialization), corr("E", "F", Equivalence)];
        let (p, r) = precision_recall(&produced, &e, EvalMode::ExpertScoped);
        assert_eq!((p, r), (Ratio::from_integer(1), Ratio::new(1, 2)));
        let (p, _) = precision_recall(&produced, &e, EvalMode::Strict);
        assert_eq!(p, Ratio::new(1, 2));
        let (p, r) = precision_recall(&[], &e, EvalMode::ExpertScoped);
        assert_eq!((p, r), (Ratio::from_integer(1), Ratio::from_integer(0)));
    }

    #[test]
    fn report_text() {
        let e = expert("A\tB\t<\n");
        let rep = evaluate(&[corr("A", "B", Specialization)], &e, EvalMode::ExpertScoped);
        let t = rep.to_text();
        assert!(t.contains("P=1.000 R=1.000"));
        assert!(t.contains("mode=expert-scoped correct=1 incorrect=0 others=0 expert=1"));
    }

    #[test]
    fn correspondence_file_round_trip() {
        let cs = vec![corr("Corporate_Body", "Organization", Specialization)];
        let text = crate::merge::correspondences_tsv(&cs);
        assert_eq!(text, "m:000001\tCorporate Body\tOrganization\t<\n");
        assert_eq!(parse_correspondences(Path::new("p"), &text).unwrap(), cs);
    }
}
