//! File-level orchestration of the merge pipeline: resolve, merge, acquire,
//! relocate, enrich, evaluate.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::conflict::resolve_with;
use crate::enrich::{apply_enrichment, audit_text, enrichment_plan, Attachment};
use crate::eval::{evaluate, load_correspondences, load_expert_mappings, EvalError, EvalMode, EvalReport};
use crate::merge::{correspondences_tsv, merge_with, record_relocation, MergeError, MergeOptions, MergeOutcome};
use crate::owl::{display_label, parse_owl, serialize_owl, Ontology, OwlError, ROOT};
use crate::relations::resolves;
use crate::webstats::{relocate_missing, threshold_report, HitCountProvider, ThresholdReport, WebstatsError};
use crate::wordnet::{write_overlay, KnowledgeBase, OverlayEntry, WordNetError};

pub const MERGED_OWL: &str = "merged.owl";
pub const CORRESPONDENCES: &str = "correspondences.tsv";
pub const THRESHOLDS: &str = "thresholds.txt";
pub const OVERLAY: &str = "overlay.tsv";
pub const ENRICHMENT: &str = "enrichment.txt";
pub const EVAL: &str = "eval.txt";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Owl {
        path: PathBuf,
        #[source]
        source: OwlError,
    },
    #[error(transparent)]
    WordNet(#[from] WordNetError),
    #[error(transparent)]
    Merge(#[from] MergeError),
    #[error(transparent)]
    Webstats(#[from] WebstatsError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// Process exit status: 2 for hit-count provider failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Webstats(WebstatsError::Provider { .. }) => 2,
            _ => 1,
        }
    }
}

pub fn read_ontology(path: &Path) -> Result<Ontology, PipelineError> {
    let text = fs::read_to_string(path).map_err(|source| PipelineError::Owl {
        path: path.to_owned(),
        source: OwlError::Xml {
            line: 0,
            column: 0,
            message: source.to_string(),
        },
    })?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    parse_owl(&id, &text).map_err(|source| PipelineError::Owl {
        path: path.to_owned(),
        source,
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
            path: dir.to_owned(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| PipelineError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Deterministic run identifier derived from the merged ontology text.
pub fn run_id(merged_owl: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in merged_owl.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MergeSettings {
    pub options: MergeOptions,
    /// Cap on the number of candidate hypernyms queried per missing concept.
    pub candidate_limit: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct MergeRun {
    pub outcome: MergeOutcome,
    pub reports: Vec<ThresholdReport>,
    pub warnings: Vec<String>,
}

impl MergeRun {
    pub fn thresholds_text(&self) -> String {
        self.reports
            .iter()
            .map(ThresholdReport::to_text)
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Steps one to four: resolve both inputs, merge them, and place every
/// concept the kb lacks by hit counts.
pub fn merge_step(
    o1: &Ontology,
    o2: &Ontology,
    kb: &KnowledgeBase,
    provider: &dyn HitCountProvider,
    settings: MergeSettings,
) -> Result<MergeRun, PipelineError> {
    let r1 = resolve_with(o1, kb, settings.options)?;
    let r2 = resolve_with(o2, kb, settings.options)?;
    let mut warnings = r1.warnings;
    warnings.extend(r2.warnings);
    let mut outcome = merge_with(&r1.ontology, &r2.ontology, kb, settings.options)?;
    warnings.append(&mut outcome.warnings);

    let mut candidates: Vec<String> = outcome
        .ontology
        .concepts
        .iter()
        .filter(|c| c.raw() != ROOT && !outcome.missing.iter().any(|m| m == c.raw()))
        .filter(|c| c.all_raw().any(|r| resolves(kb, &display_label(r))))
        .map(|c| display_label(c.raw()))
        .collect();
    if let Some(limit) = settings.candidate_limit {
        candidates.truncate(limit);
    }

    let mut reports = Vec::new();
    for m in outcome.missing.clone() {
        let label = display_label(&m);
        let report = threshold_report(&label, &candidates, provider)?;
        let (moved, placed, w) = relocate_missing(&outcome.ontology, &label, &report.selected);
        warnings.extend(w);
        for h in &placed {
            record_relocation(&mut outcome.correspondences, &moved, &m, h);
        }
        outcome.ontology = moved;
        reports.push(report);
    }
    outcome.warnings = warnings.clone();
    Ok(MergeRun {
        outcome,
        reports,
        warnings,
    })
}

/// Writes `merged.owl`, `correspondences.tsv` and `thresholds.txt`.
pub fn write_merge_outputs(run: &MergeRun, out: &Path) -> Result<(), PipelineError> {
    write_file(&out.join(MERGED_OWL), &serialize_owl(&run.outcome.ontology))?;
    write_file(
        &out.join(CORRESPONDENCES),
        &correspondences_tsv(&run.outcome.correspondences),
    )?;
    write_file(&out.join(THRESHOLDS), &run.thresholds_text())
}

#[derive(Debug, Clone, Default)]
pub struct EnrichRun {
    pub attachments: Vec<Attachment>,
    pub entries: Vec<OverlayEntry>,
    pub warnings: Vec<String>,
}

/// Concepts of a merged ontology none of whose labels the kb knows.
pub fn missing_concepts(merged: &Ontology, kb: &KnowledgeBase) -> Vec<String> {
    merged
        .concepts
        .iter()
        .filter(|c| c.raw() != ROOT)
        .filter(|c| !c.all_raw().any(|r| resolves(kb, &display_label(r))))
        .map(|c| c.raw().to_owned())
        .collect()
}

/// Step five: plan an attachment for every missing concept and turn the plan
/// into overlay entries.
pub fn enrich_step(kb: &KnowledgeBase, merged: &Ontology, provenance: &str) -> EnrichRun {
    let mut run = EnrichRun::default();
    for m in missing_concepts(merged, kb) {
        let plan = enrichment_plan(kb, merged, &display_label(&m));
        run.attachments.extend(plan.attachments);
        run.warnings.extend(plan.warnings);
    }
    let (entries, w) = apply_enrichment(kb, &run.attachments, provenance);
    run.entries = entries;
    run.warnings.extend(w);
    run
}

/// Reads a merged ontology file, plans enrichment, and writes `overlay.tsv`
/// and `enrichment.txt`.
pub fn enrich_file(kb: &KnowledgeBase, merged_path: &Path, out: &Path) -> Result<EnrichRun, PipelineError> {
    let text = fs::read_to_string(merged_path).map_err(|source| PipelineError::Io {
        path: merged_path.to_owned(),
        source,
    })?;
    let merged = parse_owl("merged", &text).map_err(|source| PipelineError::Owl {
        path: merged_path.to_owned(),
        source,
    })?;
    let mut run = enrich_step(kb, &merged, &run_id(&text));
    fs::create_dir_all(out).map_err(|source| PipelineError::Io {
        path: out.to_owned(),
        source,
    })?;
    run.warnings.extend(write_overlay(&run.entries, &out.join(OVERLAY))?);
    write_file(&out.join(ENRICHMENT), &audit_text(kb, &run.attachments))?;
    Ok(run)
}

pub fn eval_files(produced: &Path, expert: &Path, mode: EvalMode) -> Result<EvalReport, PipelineError> {
    let produced = load_correspondences(produced)?;
    let expert = load_expert_mappings(expert)?;
    Ok(evaluate(&produced, &expert, mode))
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub merge: MergeRun,
    pub enrich: EnrichRun,
    pub eval: Option<EvalReport>,
}

/// All five steps, every intermediate written to `out`. Later steps read the
/// files earlier steps wrote.
pub fn run_pipeline(
    o1: &Path,
    o2: &Path,
    kb: &KnowledgeBase,
    provider: &dyn HitCountProvider,
    settings: MergeSettings,
    out: &Path,
    expert: Option<(&Path, EvalMode)>,
) -> Result<PipelineRun, PipelineError> {
    let a = read_ontology(o1)?;
    let b = read_ontology(o2)?;
    let merge = merge_step(&a, &b, kb, provider, settings)?;
    write_merge_outputs(&merge, out)?;
    let enrich = enrich_file(kb, &out.join(MERGED_OWL), out)?;
    let eval = match expert {
        Some((path, mode)) => {
            let report = eval_files(&out.join(CORRESPONDENCES), path, mode)?;
            write_file(&out.join(EVAL), &report.to_text())?;
            Some(report)
        }
        None => None,
    };
    Ok(PipelineRun { merge, enrich, eval })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_id_is_stable_hex() {
        assert_eq!(run_id(""), "cbf29ce484222325");
        assert_eq!(run_id("a"), run_id("a"));
        assert_ne!(run_id("a"), run_id("b"));
    }

    #[test]
    fn provider_errors_exit_with_two() {
        let e = PipelineError::Webstats(WebstatsError::Provider {
            query: "q".into(),
            source: crate::webstats::ProviderError::MissingEntry("q".into()),
        });
        assert_eq!(e.exit_code(), 2);
        assert_eq!(PipelineError::Merge(MergeError::Cycle(vec![])).exit_code(), 1);
    }
}
