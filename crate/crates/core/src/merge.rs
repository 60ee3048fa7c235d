//! Hierarchy construction from relation cells, and two-ontology merging.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use thiserror::Error;

use crate::owl::{find_cycles, validate_ontology, Concept, ConceptId, Ontology, Violation, ROOT};
use crate::relations::{preprocess_label, profiles, relate_opt, Profile, RelationMatrix, SemanticRelation};
use crate::wordnet::KnowledgeBase;

#[derive(Debug, Error)]
pub enum MergeError {
    #[error("specialization cycle between {}", .0.join(", "))]
    Cycle(Vec<String>),
    #[error("merged ontology is invalid: {0:?}")]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Correspondence {
    pub c_id: String,
    pub a: ConceptId,
    pub b: ConceptId,
    pub r: SemanticRelation,
}

impl Correspondence {
    pub fn to_tsv_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.c_id,
            self.a.label(),
            self.b.label(),
            self.r.glyph()
        )
    }
}

pub fn correspondences_tsv(cs: &[Correspondence]) -> String {
    let mut out = String::new();
    for c in cs {
        out.push_str(&c.to_tsv_line());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergedNode {
    pub canonical: String,
    pub synonyms: BTreeSet<String>,
    /// Ids of the source ontologies that contributed a member.
    pub provenance: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    A,
    B,
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }

    /// Groups of element indices, each sorted, ordered by least element.
    pub fn groups(&mut self) -> Vec<Vec<usize>> {
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for x in 0..self.parent.len() {
            let r = self.find(x);
            by_root.entry(r).or_default().push(x);
        }
        let mut groups: Vec<Vec<usize>> = by_root.into_values().collect();
        groups.sort();
        groups
    }
}

/// Partition of the concepts of two ontologies into ≡-classes. `cross` is
/// rows of A by columns of B; `within_a` and `within_b` are square.
pub fn collapse_equivalents(
    cross: &RelationMatrix,
    within_a: &RelationMatrix,
    within_b: &RelationMatrix,
) -> Vec<Vec<(Side, String)>> {
    let na = within_a.rows.len();
    let nb = within_b.rows.len();
    let mut uf = UnionFind::new(na + nb);
    let eq = SemanticRelation::Equivalence;
    for i in 0..na {
        for j in 0..na {
            if within_a.get(i, j) == eq {
                uf.union(i, j);
            }
        }
    }
    for i in 0..nb {
        for j in 0..nb {
            if within_b.get(i, j) == eq {
                uf.union(na + i, na + j);
            }
        }
    }
    for (i, r) in cross.rows.iter().enumerate() {
        for (j, c) in cross.cols.iter().enumerate() {
            if cross.get(i, j) != eq {
                continue;
            }
            let ia = within_a.rows.iter().position(|x| x == r);
            let jb = within_b.rows.iter().position(|x| x == c);
            if let (Some(ia), Some(jb)) = (ia, jb) {
                uf.union(ia, na + jb);
            }
        }
    }
    uf.groups()
        .into_iter()
        .map(|g| {
            g.into_iter()
                .map(|x| {
                    if x < na {
                        (Side::A, within_a.rows[x].clone())
                    } else {
                        (Side::B, within_b.rows[x - na].clone())
                    }
                })
                .collect()
        })
        .collect()
}

/// Dense bitset rows for reachability over `n` nodes.
fn closure(n: usize, succ: &[Vec<usize>]) -> Vec<Vec<u64>> {
    let words = n.div_ceil(64).max(1);
    let mut reach = vec![vec![0u64; words]; n];
    // Iterative DFS post-order keeps deep chains off the call stack.
    let mut state = vec![0u8; n];
    for root in 0..n {
        if state[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        state[root] = 1;
        while let Some(&mut (v, ref mut k)) = stack.last_mut() {
            if *k < succ[v].len() {
                let w = succ[v][*k];
                *k += 1;
                if state[w] == 0 {
                    state[w] = 1;
                    stack.push((w, 0));
                }
            } else {
                let mut row = vec![0u64; words];
                for &w in &succ[v] {
                    row[w / 64] |= 1 << (w % 64);
                    for (r, x) in row.iter_mut().zip(&reach[w]) {
                        *r |= *x;
                    }
                }
                reach[v] = row;
                state[v] = 2;
                stack.pop();
            }
        }
    }
    reach
}

fn has(bits: &[u64], i: usize) -> bool {
    bits[i / 64] >> (i % 64) & 1 == 1
}

/// Transitive reduction of a DAG over nodes `0..n`. Edges are `(from, to)`.
pub fn transitive_reduction(n: usize, edges: &BTreeSet<(usize, usize)>) -> BTreeSet<(usize, usize)> {
    let mut succ = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a != b {
            succ[a].push(b);
        }
    }
    let reach = closure(n, &succ);
    edges
        .iter()
        .copied()
        .filter(|&(a, b)| a != b && !succ[a].iter().any(|&w| w != b && has(&reach[w], b)))
        .collect()
}

/// One node of the hierarchy to build: its member raw ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSpec {
    pub members: BTreeSet<String>,
}

impl ClassSpec {
    pub fn canonical(&self) -> &str {
        self.members.iter().next().map(String::as_str).unwrap_or_default()
    }
}

/// Builds the hierarchy: transitive reduction of the ⊂ cells between classes,
/// plus retained edges that keep the graph acyclic, with parentless classes
/// under the synthetic root. Returns the ontology and warnings.
pub fn build_hierarchy(
    id: &str,
    classes: &[ClassSpec],
    spec_cells: &BTreeSet<(usize, usize)>,
    retained: &[(usize, usize)],
) -> Result<(Ontology, Vec<String>), MergeError> {
    let name = |i: usize| classes[i].canonical().to_owned();
    let named: BTreeSet<(String, String)> = spec_cells
        .iter()
        .filter(|(a, b)| a != b)
        .map(|&(a, b)| (name(a), name(b)))
        .collect();
    if let Some(cycle) = find_cycles(&named).into_iter().next() {
        return Err(MergeError::Cycle(cycle));
    }

    let n = classes.len();
    let mut edges = transitive_reduction(n, spec_cells);
    let mut warnings = Vec::new();
    let mut order: Vec<(usize, usize)> = retained.iter().copied().filter(|(a, b)| a != b).collect();
    order.sort_by_key(|x| (name(x.0), name(x.1)));
    order.dedup();
    for (c, p) in order {
        if edges.contains(&(c, p)) {
            continue;
        }
        let mut succ = vec![Vec::new(); n];
        for &(a, b) in &edges {
            succ[a].push(b);
        }
        let reach = closure(n, &succ);
        if has(&reach[p], c) {
            warnings.push(format!(
                "retained edge {} -> {} would close a cycle; dropped",
                name(c),
                name(p)
            ));
            continue;
        }
        edges.insert((c, p));
    }

    let mut onto = Ontology::new(id);
    onto.add_concept(ROOT);
    for class in classes {
        let canon = class.canonical();
        onto.add_concept(canon);
        let c = onto.concept_mut(canon).unwrap();
        c.synonyms.extend(class.members.iter().filter(|m| *m != canon).cloned());
    }
    let mut has_parent = vec![false; n];
    for &(c, p) in &edges {
        onto.add_edge(&name(c), &name(p));
        has_parent[c] = true;
    }
    for (i, hp) in has_parent.into_iter().enumerate() {
        if !hp {
            onto.add_edge(&name(i), ROOT);
        }
    }
    Ok((onto, warnings))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MergeOptions {
    /// Emit `owl:disjointWith` for ⊥ cells between unrelated classes.
    pub emit_disjoint: bool,
}

#[derive(Debug, Clone)]
pub struct MergeOutcome {
    pub ontology: Ontology,
    pub correspondences: Vec<Correspondence>,
    pub nodes: Vec<MergedNode>,
    /// Canonical raw ids of classes none of whose labels resolve in the kb.
    pub missing: Vec<String>,
    pub warnings: Vec<String>,
}

struct Item<'a> {
    source: usize,
    concept: &'a Concept,
}

fn label_of(raw: &str) -> String {
    crate::owl::display_label(raw)
}

/// Relation between two concept nodes: `≡` if any member pair is equivalent,
/// otherwise `⊂`/`⊃` if any member pair says so, then `⊥`, then `??`.
fn node_relation(a: &[Option<&Profile>], b: &[Option<&Profile>]) -> SemanticRelation {
    use SemanticRelation::*;
    let mut best = Unknown;
    let rank = |r: SemanticRelation| match r {
        Equivalence => 0,
        Specialization | Generalization => 1,
        Disjointness => 2,
        Unknown => 3,
    };
    for x in a {
        for y in b {
            let r = relate_opt(*x, *y);
            if rank(r) < rank(best) {
                best = r;
            }
        }
    }
    best
}

/// Merges the given source ontologies (one for conflict resolution, two for
/// merging) into a single hierarchy.
pub(crate) fn unify(
    id: &str,
    sources: &[&Ontology],
    kb: &KnowledgeBase,
    opts: MergeOptions,
) -> Result<MergeOutcome, MergeError> {
    let items: Vec<Item> = sources
        .iter()
        .enumerate()
        .flat_map(|(s, o)| {
            o.concepts
                .iter()
                .filter(|c| c.raw() != ROOT)
                .map(move |c| Item { source: s, concept: c })
        })
        .collect();
    let labels: Vec<String> = items.iter().flat_map(|it| it.concept.all_raw().map(label_of)).collect();
    let prof = profiles(kb, &labels);
    let member_profiles: Vec<Vec<Option<&Profile>>> = items
        .iter()
        .map(|it| it.concept.all_raw().map(|r| prof[&label_of(r)].as_ref()).collect())
        .collect();
    let keys: Vec<BTreeSet<String>> = items
        .iter()
        .map(|it| {
            it.concept
                .all_raw()
                .filter_map(|r| preprocess_label(&label_of(r)).ok().map(|k| k.full))
                .collect()
        })
        .collect();
    let resolves: Vec<bool> = member_profiles.iter().map(|m| m.iter().any(Option::is_some)).collect();

    let n = items.len();
    let rel: Vec<SemanticRelation> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            // Shared preprocessed keys mean the same term.
            if i == j || !keys[i].is_disjoint(&keys[j]) {
                SemanticRelation::Equivalence
            } else {
                node_relation(&member_profiles[i], &member_profiles[j])
            }
        })
        .collect();
    let r = |i: usize, j: usize| rel[i * n + j];

    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if r(i, j) == SemanticRelation::Equivalence {
                uf.union(i, j);
            }
        }
    }
    let groups = uf.groups();
    let mut class_of = vec![0; n];
    let mut classes = Vec::with_capacity(groups.len());
    for (ci, g) in groups.iter().enumerate() {
        let mut members = BTreeSet::new();
        for &i in g {
            class_of[i] = ci;
            members.extend(items[i].concept.all_raw().map(str::to_owned));
        }
        classes.push(ClassSpec { members });
    }
    // Stable class order by canonical id keeps all downstream output sorted.
    let mut order: Vec<usize> = (0..classes.len()).collect();
    order.sort_by(|&a, &b| classes[a].canonical().cmp(classes[b].canonical()));
    let mut renumber = vec![0; classes.len()];
    for (new, &old) in order.iter().enumerate() {
        renumber[old] = new;
    }
    let classes: Vec<ClassSpec> = order.iter().map(|&o| classes[o].clone()).collect();
    for c in class_of.iter_mut() {
        *c = renumber[*c];
    }

    let mut spec_cells = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if class_of[i] != class_of[j] && r(i, j) == SemanticRelation::Specialization {
                spec_cells.insert((class_of[i], class_of[j]));
            }
        }
    }

    let mut item_of: HashMap<(usize, &str), usize> = HashMap::new();
    for (i, it) in items.iter().enumerate() {
        for raw in it.concept.all_raw() {
            item_of.insert((it.source, raw), i);
        }
    }
    let mut retained = Vec::new();
    for (s, o) in sources.iter().enumerate() {
        for (c, p) in &o.subclass_edges {
            if c == ROOT || p == ROOT {
                continue;
            }
            let (Some(&ic), Some(&ip)) = (item_of.get(&(s, c.as_str())), item_of.get(&(s, p.as_str()))) else {
                continue;
            };
            if !resolves[ic] || !resolves[ip] {
                retained.push((class_of[ic], class_of[ip]));
            }
        }
    }

    let (mut onto, mut warnings) = build_hierarchy(id, &classes, &spec_cells, &retained)?;

    let canon_of = |s: usize, raw: &str| -> Option<String> {
        item_of
            .get(&(s, raw))
            .map(|&i| classes[class_of[i]].canonical().to_owned())
    };
    for (s, o) in sources.iter().enumerate() {
        for (inst, c) in &o.instances {
            if let Some(cc) = canon_of(s, c) {
                onto.instances.insert((inst.clone(), cc));
            }
        }
    }
    let reach_related =
        |onto: &Ontology, a: &str, b: &str| onto.ancestors(a).contains(b) || onto.ancestors(b).contains(a);
    for (s, o) in sources.iter().enumerate() {
        for (a, b) in &o.disjoint {
            let (Some(ca), Some(cb)) = (canon_of(s, a), canon_of(s, b)) else {
                continue;
            };
            if ca == cb || reach_related(&onto, &ca, &cb) {
                warnings.push(format!(
                    "disjointness {a} / {b} contradicts the merged hierarchy; dropped"
                ));
            } else {
                onto.add_disjoint(&ca, &cb);
            }
        }
    }
    if opts.emit_disjoint {
        let mut pairs = BTreeSet::new();
        for i in 0..n {
            for j in 0..n {
                if r(i, j) == SemanticRelation::Disjointness && class_of[i] < class_of[j] {
                    pairs.insert((class_of[i], class_of[j]));
                }
            }
        }
        for (a, b) in pairs {
            let (ca, cb) = (classes[a].canonical(), classes[b].canonical());
            if !reach_related(&onto, ca, cb) {
                onto.add_disjoint(ca, cb);
            }
        }
    }

    for (i, it) in items.iter().enumerate() {
        let canon = classes[class_of[i]].canonical().to_owned();
        let target = onto.concept_mut(&canon).unwrap();
        for x in &it.concept.extras {
            if !target.extras.contains(x) {
                target.extras.push(x.clone());
            }
        }
    }
    for o in sources {
        for u in &o.unhandled {
            if !onto.unhandled.contains(u) {
                onto.unhandled.push(u.clone());
            }
        }
        for (prefix, uri) in &o.namespaces {
            // First source wins a prefix.
            if !onto.namespaces.iter().any(|(p, _)| p == prefix) {
                onto.namespaces.push((prefix.clone(), uri.clone()));
            }
        }
    }
    onto.namespaces.sort();
    onto.base = sources.first().and_then(|o| o.base.clone());

    let violations = validate_ontology(&onto);
    if !violations.is_empty() {
        return Err(MergeError::Invalid(violations));
    }

    let nodes = classes
        .iter()
        .enumerate()
        .map(|(ci, c)| MergedNode {
            canonical: c.canonical().to_owned(),
            synonyms: c.members.iter().skip(1).cloned().collect(),
            provenance: (0..n)
                .filter(|&i| class_of[i] == ci)
                .map(|i| sources[items[i].source].id.clone())
                .collect(),
        })
        .collect();
    let mut missing: Vec<String> = (0..classes.len())
        .filter(|&ci| (0..n).filter(|&i| class_of[i] == ci).all(|i| !resolves[i]))
        .map(|ci| classes[ci].canonical().to_owned())
        .collect();
    missing.sort();

    let correspondences = if sources.len() == 2 {
        correspond(sources[0], sources[1], &prof)
    } else {
        Vec::new()
    };

    Ok(MergeOutcome {
        ontology: onto,
        correspondences,
        nodes,
        missing,
        warnings,
    })
}

fn correspond(a: &Ontology, b: &Ontology, prof: &HashMap<String, Option<Profile>>) -> Vec<Correspondence> {
    let raws = |o: &Ontology| -> Vec<String> {
        let mut v: Vec<String> = o
            .concepts
            .iter()
            .filter(|c| c.raw() != ROOT)
            .flat_map(|c| c.all_raw().map(str::to_owned))
            .collect();
        v.sort();
        v
    };
    let (ra, rb) = (raws(a), raws(b));
    let key = |raw: &str| preprocess_label(&label_of(raw)).ok().map(|k| k.full);
    let mut out = Vec::with_capacity(ra.len() * rb.len());
    for x in &ra {
        for y in &rb {
            let r = match (key(x), key(y)) {
                (Some(kx), Some(ky)) if kx == ky => SemanticRelation::Equivalence,
                _ => relate_opt(prof[&label_of(x)].as_ref(), prof[&label_of(y)].as_ref()),
            };
            out.push(Correspondence {
                c_id: format!("m:{:06}", out.len() + 1),
                a: ConceptId::new(x.as_str()),
                b: ConceptId::new(y.as_str()),
                r,
            });
        }
    }
    out
}

/// Merges two conflict-resolved ontologies.
pub fn merge(o1: &Ontology, o2: &Ontology, kb: &KnowledgeBase) -> Result<MergeOutcome, MergeError> {
    merge_with(o1, o2, kb, MergeOptions::default())
}

pub fn merge_with(
    o1: &Ontology,
    o2: &Ontology,
    kb: &KnowledgeBase,
    opts: MergeOptions,
) -> Result<MergeOutcome, MergeError> {
    let id = format!("{}+{}", o1.id, o2.id);
    unify(&id, &[o1, o2], kb, opts)
}

/// After relocating `missing` under `hypernym`, pairs between their members
/// that were unknown become specializations.
pub fn record_relocation(corrs: &mut [Correspondence], merged: &Ontology, missing: &str, hypernym: &str) {
    let members = |raw: &str| -> BTreeSet<String> {
        merged
            .node_of(raw)
            .map(|c| c.all_raw().map(str::to_owned).collect())
            .unwrap_or_default()
    };
    let (m, h) = (members(missing), members(hypernym));
    for c in corrs.iter_mut() {
        if c.r != SemanticRelation::Unknown {
            continue;
        }
        if m.contains(c.a.raw()) && h.contains(c.b.raw()) {
            c.r = SemanticRelation::Specialization;
        } else if h.contains(c.a.raw()) && m.contains(c.b.raw()) {
            c.r = SemanticRelation::Generalization;
        }
    }
}
