//! C ABI over the ontomerge library.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `*_free` function. Every fallible call returns an
//! [`OmStatus`]; on failure [`om_last_error`] describes the problem. Strings
//! returned through out-parameters are released with [`om_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use ontomerge::conflict::resolve;
use ontomerge::merge::{correspondences_tsv, merge};
use ontomerge::owl::{parse_owl, serialize_owl, Ontology};
use ontomerge::relations::{classify, SemanticRelation};
use ontomerge::webstats::threshold_of_counts;
use ontomerge::wordnet::{load_knowledge_base, lookup_synsets, KnowledgeBase};

/// Loaded knowledge base.
pub struct OmKb(KnowledgeBase);

/// Parsed or computed ontology.
pub struct OmOntology(Ontology);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    KnowledgeBase = 3,
    Ontology = 4,
    Merge = 5,
    Threshold = 6,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmRelation {
    Equivalent = 0,
    Specialization = 1,
    Generalization = 2,
    Disjoint = 3,
    Unknown = 4,
}

impl From<SemanticRelation> for OmRelation {
    fn from(r: SemanticRelation) -> Self {
        match r {
            SemanticRelation::Equivalence => OmRelation::Equivalent,
            SemanticRelation::Specialization => OmRelation::Specialization,
            SemanticRelation::Generalization => OmRelation::Generalization,
            SemanticRelation::Disjointness => OmRelation::Disjoint,
            SemanticRelation::Unknown => OmRelation::Unknown,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Fail(OmStatus, String);

type Res<T> = Result<T, Fail>;

fn guard(f: impl FnOnce() -> Res<()>) -> OmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            OmStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            OmStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Res<&'a str> {
    if p.is_null() {
        return Err(Fail(OmStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(OmStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Res<&'a T> {
    p.as_ref()
        .ok_or_else(|| Fail(OmStatus::NullArgument, format!("{name} is null")))
}

unsafe fn put<T>(out: *mut T, v: T, name: &str) -> Res<()> {
    if out.is_null() {
        return Err(Fail(OmStatus::NullArgument, format!("{name} is null")));
    }
    out.write(v);
    Ok(())
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn om_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a WNDB noun database from `dir`, then `n_overlays` overlay files.
///
/// # Safety
/// `dir` and each of the `n_overlays` entries of `overlays` must be valid
/// NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn om_kb_load(
    dir: *const c_char,
    overlays: *const *const c_char,
    n_overlays: usize,
    out: *mut *mut OmKb,
) -> OmStatus {
    guard(|| {
        let dir = str_arg(dir, "dir")?;
        let mut paths = Vec::with_capacity(n_overlays);
        if n_overlays > 0 {
            if overlays.is_null() {
                return Err(Fail(OmStatus::NullArgument, "overlays is null".into()));
            }
            for i in 0..n_overlays {
                paths.push(PathBuf::from(str_arg(*overlays.add(i), "overlay")?));
            }
        }
        let kb = load_knowledge_base(dir.as_ref(), &paths).map_err(|e| Fail(OmStatus::KnowledgeBase, e.to_string()))?;
        put(out, Box::into_raw(Box::new(OmKb(kb))), "out")
    })
}

/// # Safety
/// `kb` must come from [`om_kb_load`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn om_kb_free(kb: *mut OmKb) {
    if !kb.is_null() {
        drop(Box::from_raw(kb));
    }
}

/// Number of senses of `lemma` (spaces or underscores, any case).
///
/// # Safety
/// Pointers must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn om_kb_sense_count(kb: *const OmKb, lemma: *const c_char, out: *mut usize) -> OmStatus {
    guard(|| {
        let kb = ref_arg(kb, "kb")?;
        let lemma = str_arg(lemma, "lemma")?;
        put(out, lookup_synsets(&kb.0, lemma).len(), "out")
    })
}

/// Semantic relation of concept label `a` to `b`.
///
/// # Safety
/// Pointers must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn om_classify(
    kb: *const OmKb,
    a: *const c_char,
    b: *const c_char,
    out: *mut OmRelation,
) -> OmStatus {
    guard(|| {
        let kb = ref_arg(kb, "kb")?;
        let (a, b) = (str_arg(a, "a")?, str_arg(b, "b")?);
        put(out, classify(a, b, &kb.0).into(), "out")
    })
}

/// Parses RDF/XML text into an ontology named `id`.
///
/// # Safety
/// Pointers must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn om_ontology_parse(
    id: *const c_char,
    text: *const c_char,
    out: *mut *mut OmOntology,
) -> OmStatus {
    guard(|| {
        let id = str_arg(id, "id")?;
        let text = str_arg(text, "text")?;
        let o = parse_owl(id, text).map_err(|e| Fail(OmStatus::Ontology, e.to_string()))?;
        put(out, Box::into_raw(Box::new(OmOntology(o))), "out")
    })
}

/// Serializes to RDF/XML; free the result with [`om_string_free`].
///
/// # Safety
/// Pointers must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn om_ontology_serialize(o: *const OmOntology, out: *mut *mut c_char) -> OmStatus {
    guard(|| {
        let o = ref_arg(o, "ontology")?;
        put(out, c_string(serialize_owl(&o.0)), "out")
    })
}

/// Number of concepts, the synthetic root included when present.
///
/// # Safety
/// Pointers must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn om_ontology_concept_count(o: *const OmOntology, out: *mut usize) -> OmStatus {
    guard(|| {
        let o = ref_arg(o, "ontology")?;
        put(out, o.0.concepts.len(), "out")
    })
}

/// # Safety
/// `o` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn om_ontology_free(o: *mut OmOntology) {
    if !o.is_null() {
        drop(Box::from_raw(o));
    }
}

/// Rebuilds the hierarchy of `o` from the knowledge base.
///
/// # Safety
/// Pointers must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn om_resolve(kb: *const OmKb, o: *const OmOntology, out: *mut *mut OmOntology) -> OmStatus {
    guard(|| {
        let kb = ref_arg(kb, "kb")?;
        let o = ref_arg(o, "ontology")?;
        let r = resolve(&o.0, &kb.0).map_err(|e| Fail(OmStatus::Merge, e.to_string()))?;
        put(out, Box::into_raw(Box::new(OmOntology(r.ontology))), "out")
    })
}

/// Merges two resolved ontologies. Missing concepts stay where their sources
/// put them. `out_correspondences`, if not null, receives the correspondence
/// table as TSV.
///
/// # Safety
/// Pointers must be valid; `out_merged` writable.
#[no_mangle]
pub unsafe extern "C" fn om_merge(
    kb: *const OmKb,
    a: *const OmOntology,
    b: *const OmOntology,
    out_merged: *mut *mut OmOntology,
    out_correspondences: *mut *mut c_char,
) -> OmStatus {
    guard(|| {
        let kb = ref_arg(kb, "kb")?;
        let (a, b) = (ref_arg(a, "a")?, ref_arg(b, "b")?);
        if out_merged.is_null() {
            return Err(Fail(OmStatus::NullArgument, "out_merged is null".into()));
        }
        let m = merge(&a.0, &b.0, &kb.0).map_err(|e| Fail(OmStatus::Merge, e.to_string()))?;
        if !out_correspondences.is_null() {
            out_correspondences.write(c_string(correspondences_tsv(&m.correspondences)));
        }
        put(
            out_merged,
            Box::into_raw(Box::new(OmOntology(m.ontology))),
            "out_merged",
        )
    })
}

/// Cut-off over `n` hit counts: the lower side of the widest gap.
///
/// # Safety
/// `counts` must point at `n` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn om_threshold(counts: *const u64, n: usize, out: *mut u64) -> OmStatus {
    guard(|| {
        if counts.is_null() && n > 0 {
            return Err(Fail(OmStatus::NullArgument, "counts is null".into()));
        }
        let slice = if n == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(counts, n)
        };
        let tau = threshold_of_counts(slice).ok_or_else(|| Fail(OmStatus::Threshold, "no counts".into()))?;
        put(out, tau, "out")
    })
}

/// # Safety
/// `s` must be a string returned by this library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn om_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn null_arguments_are_reported_not_dereferenced() {
        let mut out = ptr::null_mut();
        let st = unsafe { om_kb_load(ptr::null(), ptr::null(), 0, &mut out) };
        assert_eq!(st, OmStatus::NullArgument);
        assert!(out.is_null());
        let msg = unsafe { CStr::from_ptr(om_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "dir is null");
    }

    #[test]
    fn threshold_of_nothing_is_an_error() {
        let mut tau = 7;
        assert_eq!(unsafe { om_threshold(ptr::null(), 0, &mut tau) }, OmStatus::Threshold);
        assert_eq!(tau, 7);
        let counts = [478u64, 0];
        assert_eq!(unsafe { om_threshold(counts.as_ptr(), 2, &mut tau) }, OmStatus::Ok);
        assert_eq!(tau, 0);
    }
}
