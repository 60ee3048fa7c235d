//! In-memory ontology model and the RDF/XML OWL subset it round-trips.
//!
//! Only named classes, `rdfs:subClassOf` references, `owl:equivalentClass`
//! between named classes, `owl:disjointWith` and typed individuals are
//! interpreted. Every other top-level element, and every other child of a
//! class element, is kept verbatim and written back unchanged.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;
use thiserror::Error;

pub const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS_NS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const OWL_NS: &str = "http://www.w3.org/2002/07/owl#";

/// Label of the synthetic root that hierarchy construction attaches parentless
/// classes to.
pub const ROOT: &str = "Thing";

#[derive(Debug, Error)]
pub enum OwlError {
    #[error("malformed XML at line {line}, column {column}: {message}")]
    Xml { line: u32, column: u32, message: String },
    #[error("document root is not rdf:RDF")]
    NotRdf,
    #[error("invalid ontology: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Identifier of a concept: the raw `rdf:ID` plus its display label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConceptId {
    raw: String,
    label: String,
}

impl ConceptId {
    pub fn new(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let label = display_label(&raw);
        ConceptId { raw, label }
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

/// `Corporate_Body` -> `Corporate Body`.
pub fn display_label(raw: &str) -> String {
    raw.replace('_', " ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concept {
    pub id: ConceptId,
    /// Raw ids of classes folded into this one by `owl:equivalentClass` or by
    /// equivalence collapse.
    pub synonyms: BTreeSet<String>,
    /// Uninterpreted child elements of the class element, verbatim.
    pub extras: Vec<String>,
}

impl Concept {
    pub fn new(raw: impl Into<String>) -> Self {
        Concept {
            id: ConceptId::new(raw),
            synonyms: BTreeSet::new(),
            extras: Vec::new(),
        }
    }

    pub fn raw(&self) -> &str {
        self.id.raw()
    }

    /// Canonical raw id followed by the synonyms.
    pub fn all_raw(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.id.raw()).chain(self.synonyms.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AxiomKind {
    SubClassOf,
    DisjointWith,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Axiom {
    pub kind: AxiomKind,
    pub operands: (String, String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    EmptyId,
    DuplicateConcept(String),
    UndeclaredReference { from: String, to: String },
    SelfLoop(String),
    Cycle(Vec<String>),
    SynonymClash(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyId => write!(f, "concept with empty id"),
            Violation::DuplicateConcept(c) => write!(f, "concept `{c}` declared more than once"),
            Violation::UndeclaredReference { from, to } => {
                write!(f, "`{from}` refers to undeclared class `{to}`")
            }
            Violation::SelfLoop(c) => write!(f, "`{c}` is a subclass of itself"),
            Violation::Cycle(members) => write!(f, "subclass cycle through {}", members.join(", ")),
            Violation::SynonymClash(c) => {
                write!(f, "`{c}` is both a class and a synonym, or a synonym of two classes")
            }
        }
    }
}

/// A parsed ontology: concepts, subclass edges, instances and axioms.
#[derive(Debug, Clone, Default)]
pub struct Ontology {
    pub id: String,
    pub concepts: Vec<Concept>,
    /// `(child, parent)` raw ids.
    pub subclass_edges: BTreeSet<(String, String)>,
    /// `(instance label, concept raw id)`.
    pub instances: BTreeSet<(String, String)>,
    /// Unordered pairs stored with the smaller raw id first.
    pub disjoint: BTreeSet<(String, String)>,
    /// Top-level elements that are not interpreted, verbatim.
    pub unhandled: Vec<String>,
    /// Extra namespace declarations of the document root, `(prefix, uri)`.
    pub namespaces: Vec<(Option<String>, String)>,
    pub base: Option<String>,
}

impl Ontology {
    pub fn new(id: impl Into<String>) -> Self {
        Ontology {
            id: id.into(),
            ..Default::default()
        }
    }

    /// Adds a concept if absent; returns whether it was added.
    pub fn add_concept(&mut self, raw: &str) -> bool {
        if self.concept(raw).is_some() {
            return false;
        }
        let at = self
            .concepts
            .binary_search_by(|c| c.raw().cmp(raw))
            .unwrap_or_else(|e| e);
        self.concepts.insert(at, Concept::new(raw));
        true
    }

    pub fn add_edge(&mut self, child: &str, parent: &str) {
        self.subclass_edges.insert((child.to_owned(), parent.to_owned()));
    }

    pub fn add_disjoint(&mut self, a: &str, b: &str) {
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        self.disjoint.insert((x.to_owned(), y.to_owned()));
    }

    pub fn concept(&self, raw: &str) -> Option<&Concept> {
        self.concepts.iter().find(|c| c.raw() == raw)
    }

    pub fn concept_mut(&mut self, raw: &str) -> Option<&mut Concept> {
        self.concepts.iter_mut().find(|c| c.raw() == raw)
    }

    /// Concept whose canonical id or one of whose synonyms is `raw`.
    pub fn node_of(&self, raw: &str) -> Option<&Concept> {
        self.concepts
            .iter()
            .find(|c| c.raw() == raw || c.synonyms.contains(raw))
    }

    /// Concept whose display label (or a synonym's) equals `label`, ignoring
    /// case.
    pub fn node_by_label(&self, label: &str) -> Option<&Concept> {
        let want = label.to_lowercase();
        self.concepts.iter().find(|c| {
            c.all_raw()
                .any(|r| display_label(r).to_lowercase() == want || r.to_lowercase() == want)
        })
    }

    pub fn parents<'a>(&'a self, raw: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.subclass_edges
            .iter()
            .filter(move |(c, _)| c == raw)
            .map(|(_, p)| p.as_str())
    }

    pub fn children<'a>(&'a self, raw: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.subclass_edges
            .iter()
            .filter(move |(_, p)| p == raw)
            .map(|(c, _)| c.as_str())
    }

    /// Every class reachable upward from `raw`, excluding `raw` itself.
    pub fn ancestors(&self, raw: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![raw.to_owned()];
        while let Some(x) = stack.pop() {
            for p in self.parents(&x) {
                if seen.insert(p.to_owned()) {
                    stack.push(p.to_owned());
                }
            }
        }
        seen
    }

    pub fn descendants(&self, raw: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![raw.to_owned()];
        while let Some(x) = stack.pop() {
            for c in self.children(&x) {
                if seen.insert(c.to_owned()) {
                    stack.push(c.to_owned());
                }
            }
        }
        seen
    }

    /// Subclass and disjointness facts as axiom records.
    pub fn axioms(&self) -> Vec<Axiom> {
        let sub = self.subclass_edges.iter().map(|(c, p)| Axiom {
            kind: AxiomKind::SubClassOf,
            operands: (c.clone(), p.clone()),
        });
        let dis = self.disjoint.iter().map(|(a, b)| Axiom {
            kind: AxiomKind::DisjointWith,
            operands: (a.clone(), b.clone()),
        });
        sub.chain(dis).collect()
    }

    /// Structural equality: same concepts (with synonyms), edges, instances,
    /// axioms and preserved elements. The ontology id is not compared.
    pub fn same_structure(&self, other: &Ontology) -> bool {
        let key = |o: &Ontology| {
            let mut c: Vec<_> = o
                .concepts
                .iter()
                .map(|c| (c.raw().to_owned(), c.synonyms.clone(), c.extras.clone()))
                .collect();
            c.sort();
            c
        };
        key(self) == key(other)
            && self.subclass_edges == other.subclass_edges
            && self.instances == other.instances
            && self.disjoint == other.disjoint
            && self.unhandled == other.unhandled
    }
}

/// Lists every violated ontology invariant; empty iff the ontology is valid.
pub fn validate_ontology(o: &Ontology) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for c in &o.concepts {
        if c.raw().is_empty() {
            out.push(Violation::EmptyId);
        }
        *seen.entry(c.raw()).or_default() += 1;
    }
    for (raw, n) in &seen {
        if *n > 1 {
            out.push(Violation::DuplicateConcept((*raw).to_owned()));
        }
    }
    let mut synonym_owner: BTreeMap<&str, &str> = BTreeMap::new();
    for c in &o.concepts {
        for s in &c.synonyms {
            if seen.contains_key(s.as_str()) || synonym_owner.insert(s, c.raw()).is_some() {
                out.push(Violation::SynonymClash(s.clone()));
            }
        }
    }
    for (c, p) in &o.subclass_edges {
        for end in [c, p] {
            if !seen.contains_key(end.as_str()) {
                out.push(Violation::UndeclaredReference {
                    from: if end == c { p.clone() } else { c.clone() },
                    to: end.clone(),
                });
            }
        }
        if c == p {
            out.push(Violation::SelfLoop(c.clone()));
        }
    }
    for (i, c) in &o.instances {
        if !seen.contains_key(c.as_str()) {
            out.push(Violation::UndeclaredReference {
                from: i.clone(),
                to: c.clone(),
            });
        }
    }
    for (a, b) in &o.disjoint {
        for end in [a, b] {
            if !seen.contains_key(end.as_str()) {
                out.push(Violation::UndeclaredReference {
                    from: if end == a { b.clone() } else { a.clone() },
                    to: end.clone(),
                });
            }
        }
    }
    out.extend(find_cycles(&o.subclass_edges).into_iter().map(Violation::Cycle));
    out
}

/// Strongly connected components of size > 1 in the edge relation, each
/// sorted. Self-loops are reported separately by the caller.
pub(crate) fn find_cycles(edges: &BTreeSet<(String, String)>) -> Vec<Vec<String>> {
    let mut g: DiGraphMap<&str, ()> = DiGraphMap::new();
    for (c, p) in edges {
        g.add_edge(c.as_str(), p.as_str(), ());
    }
    let mut cycles: Vec<Vec<String>> = tarjan_scc(&g)
        .into_iter()
        .filter(|scc| scc.len() > 1)
        .map(|scc| {
            let mut v: Vec<String> = scc.into_iter().map(str::to_owned).collect();
            v.sort();
            v
        })
        .collect();
    cycles.sort();
    cycles
}

fn fragment(iri: &str) -> &str {
    match iri.rfind('#') {
        Some(i) => &iri[i + 1..],
        None => iri.rsplit('/').next().unwrap_or(iri),
    }
}

fn is_owl_thing(iri: &str) -> bool {
    iri == format!("{OWL_NS}Thing")
}

fn node_name<'a>(n: roxmltree::Node<'a, '_>) -> Option<&'a str> {
    n.attribute((RDF_NS, "ID"))
        .or_else(|| n.attribute((RDF_NS, "about")).map(fragment))
}

/// Reference carried by a property element: `rdf:resource`, or a nested
/// named class description.
fn referenced(n: roxmltree::Node) -> Option<String> {
    if let Some(r) = n.attribute((RDF_NS, "resource")) {
        return Some(r.to_owned());
    }
    let mut elems = n.children().filter(|c| c.is_element());
    let only = elems.next()?;
    if elems.next().is_some() {
        return None;
    }
    let tag = only.tag_name();
    if tag.namespace() == Some(OWL_NS) && tag.name() == "Class" && only.children().all(|c| !c.is_element()) {
        if let Some(id) = only.attribute((RDF_NS, "about")) {
            return Some(id.to_owned());
        }
    }
    None
}

fn is(n: roxmltree::Node, ns: &str, name: &str) -> bool {
    n.tag_name().namespace() == Some(ns) && n.tag_name().name() == name
}

/// Parses an RDF/XML document into an [`Ontology`].
///
/// Classes may be referenced before they are declared. References to classes
/// that are never declared, and subclass cycles, are rejected.
pub fn parse_owl(id: &str, text: &str) -> Result<Ontology, OwlError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| {
        let pos = e.pos();
        OwlError::Xml {
            line: pos.row,
            column: pos.col,
            message: e.to_string(),
        }
    })?;
    let root = doc.root_element();
    if !is(root, RDF_NS, "RDF") {
        return Err(OwlError::NotRdf);
    }

    let mut onto = Ontology::new(id);
    for ns in root.namespaces() {
        if matches!(ns.uri(), RDF_NS | RDFS_NS | OWL_NS) {
            continue;
        }
        if ns.name() == Some("xml") {
            continue;
        }
        onto.namespaces
            .push((ns.name().map(str::to_owned), ns.uri().to_owned()));
    }
    onto.namespaces.sort();
    onto.namespaces.dedup();
    onto.base = root
        .attribute(("http://www.w3.org/XML/1998/namespace", "base"))
        .map(str::to_owned);

    let mut violations = Vec::new();
    let mut declared: BTreeMap<String, usize> = BTreeMap::new();
    let mut class_elems = Vec::new();
    let mut other_elems = Vec::new();

    // Pass 1: declarations.
    for el in root.children().filter(|c| c.is_element()) {
        if is(el, OWL_NS, "Class") {
            match node_name(el) {
                Some(name) if !name.is_empty() => {
                    let count = declared.entry(name.to_owned()).or_default();
                    // Repeated rdf:about descriptions merge; repeated rdf:ID is an error.
                    if el.attribute((RDF_NS, "ID")).is_some() {
                        *count += 1;
                        if *count > 1 {
                            violations.push(Violation::DuplicateConcept(name.to_owned()));
                        }
                    }
                    class_elems.push((name.to_owned(), el));
                }
                _ => other_elems.push(el),
            }
        } else {
            other_elems.push(el);
        }
    }

    // Pass 2: class bodies.
    let mut equivalences = Vec::new();
    let mut extras: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let reference = |from: &str, iri: &str, violations: &mut Vec<Violation>| -> Option<String> {
        if is_owl_thing(iri) {
            return None;
        }
        let name = fragment(iri);
        if declared.contains_key(name) {
            Some(name.to_owned())
        } else {
            violations.push(Violation::UndeclaredReference {
                from: from.to_owned(),
                to: name.to_owned(),
            });
            None
        }
    };
    for (name, el) in &class_elems {
        for child in el.children().filter(|c| c.is_element()) {
            let target = referenced(child);
            let handled = if is(child, RDFS_NS, "subClassOf") {
                target.map(|t| {
                    if let Some(p) = reference(name, &t, &mut violations) {
                        onto.subclass_edges.insert((name.clone(), p));
                    }
                })
            } else if is(child, OWL_NS, "equivalentClass") {
                target.map(|t| {
                    if let Some(p) = reference(name, &t, &mut violations) {
                        equivalences.push((name.clone(), p));
                    }
                })
            } else if is(child, OWL_NS, "disjointWith") {
                target.map(|t| {
                    if let Some(p) = reference(name, &t, &mut violations) {
                        let (a, b) = if *name <= p {
                            (name.clone(), p)
                        } else {
                            (p, name.clone())
                        };
                        onto.disjoint.insert((a, b));
                    }
                })
            } else {
                None
            };
            if handled.is_none() {
                extras
                    .entry(name.clone())
                    .or_default()
                    .push(text[child.range()].to_owned());
            }
        }
    }

    // Individuals and preserved elements.
    for el in other_elems {
        let typed_node =
            !is(el, OWL_NS, "Thing") && !is(el, OWL_NS, "NamedIndividual") && !is(el, RDF_NS, "Description");
        let individual = node_name(el).filter(|n| !n.is_empty());
        let mut types = Vec::new();
        if let Some(ind) = individual {
            if typed_node {
                if declared.contains_key(el.tag_name().name()) && el.tag_name().namespace() != Some(OWL_NS) {
                    types.push(el.tag_name().name().to_owned());
                }
            } else {
                for t in el.children().filter(|c| is(*c, RDF_NS, "type")) {
                    if let Some(r) = t.attribute((RDF_NS, "resource")) {
                        if let Some(c) = reference(ind, r, &mut violations) {
                            types.push(c);
                        }
                    }
                }
            }
            if !types.is_empty() {
                for t in types {
                    onto.instances.insert((ind.to_owned(), t));
                }
                continue;
            }
        }
        onto.unhandled.push(text[el.range()].to_owned());
    }

    // Fold equivalent classes onto the least raw id of each group.
    let mut group: BTreeMap<String, String> = declared.keys().map(|k| (k.clone(), k.clone())).collect();
    fn find(group: &mut BTreeMap<String, String>, x: &str) -> String {
        let p = group[x].clone();
        if p == x {
            return p;
        }
        let r = find(group, &p);
        group.insert(x.to_owned(), r.clone());
        r
    }
    for (a, b) in &equivalences {
        let (ra, rb) = (find(&mut group, a), find(&mut group, b));
        if ra != rb {
            let (keep, drop) = if ra < rb { (ra, rb) } else { (rb, ra) };
            group.insert(drop, keep);
        }
    }
    let names: Vec<String> = declared.keys().cloned().collect();
    let canon: BTreeMap<String, String> = names.iter().map(|n| (n.clone(), find(&mut group, n))).collect();
    for n in &names {
        if canon[n] == *n {
            onto.add_concept(n);
        }
    }
    for n in &names {
        let c = &canon[n];
        if c != n {
            onto.concept_mut(c).unwrap().synonyms.insert(n.clone());
        }
        if let Some(x) = extras.remove(n) {
            onto.concept_mut(c).unwrap().extras.extend(x);
        }
    }
    let remap = |x: &String| canon.get(x).cloned().unwrap_or_else(|| x.clone());
    onto.subclass_edges = onto
        .subclass_edges
        .iter()
        .map(|(c, p)| (remap(c), remap(p)))
        .filter(|(c, p)| c != p)
        .collect();
    onto.instances = onto.instances.iter().map(|(i, c)| (i.clone(), remap(c))).collect();
    onto.disjoint = onto
        .disjoint
        .iter()
        .map(|(a, b)| {
            let (a, b) = (remap(a), remap(b));
            if a <= b {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect();

    violations.extend(validate_ontology(&onto));
    if violations.is_empty() {
        Ok(onto)
    } else {
        violations.sort();
        violations.dedup();
        Err(OwlError::Invalid(violations))
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Writes the ontology as RDF/XML. Output is deterministic: classes sorted by
/// raw id, then individuals sorted by label.
pub fn serialize_owl(o: &Ontology) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<rdf:RDF\n");
    let _ = write!(
        out,
        "    xmlns:rdf=\"{RDF_NS}\"\n    xmlns:rdfs=\"{RDFS_NS}\"\n    xmlns:owl=\"{OWL_NS}\""
    );
    for (prefix, uri) in &o.namespaces {
        match prefix {
            Some(p) => {
                let _ = write!(out, "\n    xmlns:{p}=\"{}\"", escape(uri));
            }
            None => {
                let _ = write!(out, "\n    xmlns=\"{}\"", escape(uri));
            }
        }
    }
    if let Some(base) = &o.base {
        let _ = write!(out, "\n    xml:base=\"{}\"", escape(base));
    }
    out.push_str(">\n");
    for el in &o.unhandled {
        let _ = writeln!(out, "  {el}");
    }

    let mut concepts: Vec<&Concept> = o.concepts.iter().collect();
    concepts.sort_by(|a, b| a.raw().cmp(b.raw()));
    let mut aliases: Vec<(&str, &str)> = Vec::new();
    for c in &concepts {
        let raw = c.raw();
        let parents: Vec<&str> = o.parents(raw).collect();
        let disjoint: Vec<&str> = o
            .disjoint
            .iter()
            .filter(|(a, _)| a == raw)
            .map(|(_, b)| b.as_str())
            .collect();
        let id = escape(raw);
        if parents.is_empty() && disjoint.is_empty() && c.extras.is_empty() {
            let _ = writeln!(out, "  <owl:Class rdf:ID=\"{id}\"/>");
        } else {
            let _ = writeln!(out, "  <owl:Class rdf:ID=\"{id}\">");
            for p in parents {
                let _ = writeln!(out, "    <rdfs:subClassOf rdf:resource=\"#{}\"/>", escape(p));
            }
            for d in disjoint {
                let _ = writeln!(out, "    <owl:disjointWith rdf:resource=\"#{}\"/>", escape(d));
            }
            for x in &c.extras {
                let _ = writeln!(out, "    {x}");
            }
            out.push_str("  </owl:Class>\n");
        }
        for s in &c.synonyms {
            aliases.push((s.as_str(), raw));
        }
    }
    aliases.sort();
    for (alias, canonical) in aliases {
        let _ = writeln!(
            out,
            "  <owl:Class rdf:ID=\"{}\">\n    <owl:equivalentClass rdf:resource=\"#{}\"/>\n  </owl:Class>",
            escape(alias),
            escape(canonical)
        );
    }
    let mut individuals: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (i, c) in &o.instances {
        individuals.entry(i).or_default().push(c);
    }
    for (i, types) in individuals {
        let _ = writeln!(out, "  <owl:Thing rdf:ID=\"{}\">", escape(i));
        for t in types {
            let _ = writeln!(out, "    <rdf:type rdf:resource=\"#{}\"/>", escape(t));
        }
        out.push_str("  </owl:Thing>\n");
    }
    out.push_str("</rdf:RDF>\n");
    out
}
