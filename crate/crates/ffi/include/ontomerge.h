#ifndef ONTOMERGE_H
#define ONTOMERGE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  OM_STATUS_OK = 0,
  OM_STATUS_NULL_ARGUMENT = 1,
  OM_STATUS_INVALID_UTF8 = 2,
  OM_STATUS_KNOWLEDGE_BASE = 3,
  OM_STATUS_ONTOLOGY = 4,
  OM_STATUS_MERGE = 5,
  OM_STATUS_THRESHOLD = 6,
  OM_STATUS_PANIC = 99,
} OmStatus;

typedef enum {
  OM_RELATION_EQUIVALENT = 0,
  OM_RELATION_SPECIALIZATION = 1,
  OM_RELATION_GENERALIZATION = 2,
  OM_RELATION_DISJOINT = 3,
  OM_RELATION_UNKNOWN = 4,
} OmRelation;

/**
 * Loaded knowledge base.
 */
typedef struct OmKb OmKb;

/**
 * Parsed or computed ontology.
 */
typedef struct OmOntology OmOntology;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *om_last_error(void);

/**
 * Loads a WNDB noun database from `dir`, then `n_overlays` overlay files.
 *
 * # Safety
 * `dir` and each of the `n_overlays` entries of `overlays` must be valid
 * NUL-terminated strings; `out` must be writable.
 */
OmStatus om_kb_load(const char *dir, const char *const *overlays, size_t n_overlays, OmKb **out);

/**
 * # Safety
 * `kb` must come from [`om_kb_load`] and not be used afterwards. Null is ignored.
 */
void om_kb_free(OmKb *kb);

/**
 * Number of senses of `lemma` (spaces or underscores, any case).
 *
 * # Safety
 * Pointers must be valid; `out` writable.
 */
OmStatus om_kb_sense_count(const OmKb *kb, const char *lemma, size_t *out);

/**
 * Semantic relation of concept label `a` to `b`.
 *
 * # Safety
 * Pointers must be valid; `out` writable.
 */
OmStatus om_classify(const OmKb *kb, const char *a, const char *b, OmRelation *out);

/**
 * Parses RDF/XML text into an ontology named `id`.
 *
 * # Safety
 * Pointers must be valid; `out` writable.
 */
OmStatus om_ontology_parse(const char *id, const char *text, OmOntology **out);

/**
 * Serializes to RDF/XML; free the result with [`om_string_free`].
 *
 * # Safety
 * Pointers must be valid; `out` writable.
 */
OmStatus om_ontology_serialize(const OmOntology *o, char **out);

/**
 * Number of concepts, the synthetic root included when present.
 *
 * # Safety
 * Pointers must be valid; `out` writable.
 */
OmStatus om_ontology_concept_count(const OmOntology *o, size_t *out);

/**
 * # Safety
 * `o` must come from this library and not be used afterwards. Null is ignored.
 */
void om_ontology_free(OmOntology *o);

/**
 * Rebuilds the hierarchy of `o` from the knowledge base.
 *
 * # Safety
 * Pointers must be valid; `out` writable.
 */
OmStatus om_resolve(const OmKb *kb, const OmOntology *o, OmOntology **out);

/**
 * Merges two resolved ontologies. Missing concepts stay where their sources
 * put them. `out_correspondences`, if not null, receives the correspondence
 * table as TSV.
 *
 * # Safety
 * Pointers must be valid; `out_merged` writable.
 */
OmStatus om_merge(const OmKb *kb,
                  const OmOntology *a,
                  const OmOntology *b,
                  OmOntology **out_merged,
                  char **out_correspondences);

/**
 * Cut-off over `n` hit counts: the lower side of the widest gap.
 *
 * # Safety
 * `counts` must point at `n` values; `out` writable.
 */
OmStatus om_threshold(const uint64_t *counts, size_t n, uint64_t *out);

/**
 * # Safety
 * `s` must be a string returned by this library. Null is ignored.
 */
void om_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ONTOMERGE_H */
