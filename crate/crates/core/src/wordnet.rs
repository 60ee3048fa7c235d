//! WNDB noun database loader, synset graph navigation and enrichment overlays.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::text;

#[derive(Debug, Error)]
pub enum WordNetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: unknown synset `{id}`")]
    UnknownSynset { path: PathBuf, line: usize, id: String },
    #[error("hypernym cycle through synset {0}")]
    Cycle(SynsetId),
}

/// Byte offset of a database synset, or the sequence number of an overlay
/// synset (`ovl:<n>`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SynsetId {
    Offset(u64),
    Overlay(u32),
}

impl fmt::Display for SynsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynsetId::Offset(o) => write!(f, "{o:08}"),
            SynsetId::Overlay(n) => write!(f, "ovl:{n}"),
        }
    }
}

impl FromStr for SynsetId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(n) = s.strip_prefix("ovl:") {
            return n
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .map(SynsetId::Overlay)
                .ok_or_else(|| format!("bad overlay id `{s}`"));
        }
        if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) {
            return s
                .parse()
                .map(SynsetId::Offset)
                .map_err(|_| format!("bad synset offset `{s}`"));
        }
        Err(format!("bad synset id `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PointerKind {
    Hypernym,
    Hyponym,
    MemberHolonym,
    SubstanceHolonym,
    PartHolonym,
    MemberMeronym,
    SubstanceMeronym,
    PartMeronym,
    Antonym,
}

impl PointerKind {
    /// Maps a WNDB pointer symbol; instance hypernymy folds into hypernymy.
    pub fn from_symbol(sym: &str) -> Option<Self> {
        Some(match sym {
            "@" | "@i" => PointerKind::Hypernym,
            "~" | "~i" => PointerKind::Hyponym,
            "#m" => PointerKind::MemberHolonym,
            "#s" => PointerKind::SubstanceHolonym,
            "#p" => PointerKind::PartHolonym,
            "%m" => PointerKind::MemberMeronym,
            "%s" => PointerKind::SubstanceMeronym,
            "%p" => PointerKind::PartMeronym,
            "!" => PointerKind::Antonym,
            _ => return None,
        })
    }

    pub fn inverse(self) -> Self {
        use PointerKind::*;
        match self {
            Hypernym => Hyponym,
            Hyponym => Hypernym,
            MemberHolonym => MemberMeronym,
            SubstanceHolonym => SubstanceMeronym,
            PartHolonym => PartMeronym,
            MemberMeronym => MemberHolonym,
            SubstanceMeronym => SubstanceHolonym,
            PartMeronym => PartHolonym,
            Antonym => Antonym,
        }
    }

    /// Pointers followed upward when deciding specialization.
    pub fn is_upward(self) -> bool {
        matches!(
            self,
            PointerKind::Hypernym
                | PointerKind::MemberHolonym
                | PointerKind::SubstanceHolonym
                | PointerKind::PartHolonym
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synset {
    pub id: SynsetId,
    pub lemmas: Vec<String>,
    pub pointers: Vec<(PointerKind, SynsetId)>,
    pub gloss: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlayEntry {
    pub new_lemma: String,
    pub hypernym_targets: Vec<SynsetId>,
    pub provenance: String,
}

impl OverlayEntry {
    pub fn to_line(&self) -> String {
        let targets: Vec<String> = self.hypernym_targets.iter().map(|t| t.to_string()).collect();
        format!(
            "{}\t{}\t{}",
            normalize_lemma(&self.new_lemma),
            targets.join(","),
            self.provenance.replace(['\t', '\n', '\r'], " ")
        )
    }

    fn same_record(&self, other: &OverlayEntry) -> bool {
        let key = |e: &OverlayEntry| {
            let mut t = e.hypernym_targets.clone();
            t.sort();
            (normalize_lemma(&e.new_lemma), t)
        };
        key(self) == key(other)
    }
}

/// Lowercases and encodes spaces as underscores.
pub fn normalize_lemma(lemma: &str) -> String {
    lemma
        .trim()
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join("_")
}

/// Parses one overlay line. Blank lines and `#` comments yield `None`.
pub fn parse_overlay_line(line: &str) -> Result<Option<OverlayEntry>, String> {
    let trimmed = line.trim_end_matches(['\r', '\n']);
    if trimmed.trim().is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let mut cols = trimmed.splitn(3, '\t');
    let lemma = cols.next().unwrap_or_default();
    let targets = cols.next().ok_or("expected lemma, targets and provenance columns")?;
    let provenance = cols.next().ok_or("missing provenance column")?;
    let new_lemma = normalize_lemma(lemma);
    if new_lemma.is_empty() {
        return Err("empty lemma".into());
    }
    let hypernym_targets = targets
        .split(',')
        .map(|t| t.trim().parse::<SynsetId>())
        .collect::<Result<Vec<_>, _>>()?;
    if hypernym_targets.is_empty() {
        return Err("no hypernym targets".into());
    }
    Ok(Some(OverlayEntry {
        new_lemma,
        hypernym_targets,
        provenance: provenance.to_owned(),
    }))
}

/// Synset graph of a noun database plus applied overlays. Immutable after load.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    synsets: Vec<Synset>,
    by_id: HashMap<SynsetId, usize>,
    lemma_index: BTreeMap<String, Vec<SynsetId>>,
    stem_index: BTreeMap<String, Vec<String>>,
    overlay_entries: Vec<OverlayEntry>,
    warnings: Vec<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WordNetError + '_ {
    move |source| WordNetError::Io {
        path: path.to_owned(),
        source,
    }
}

fn read_text(path: &Path) -> Result<String, WordNetError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    // WNDB files are Latin-1 in places; every byte maps to one char.
    Ok(match String::from_utf8(bytes) {
        Ok(s) => s,
        Err(e) => e.into_bytes().iter().map(|&b| b as char).collect(),
    })
}

fn parse_data_line(path: &Path, n: usize, line: &str) -> Result<Synset, WordNetError> {
    let bad = |message: String| WordNetError::Parse {
        path: path.to_owned(),
        line: n,
        message,
    };
    let (body, gloss) = match line.find(" | ") {
        Some(i) => (&line[..i], line[i + 3..].trim()),
        None => (line.trim_end_matches('|'), ""),
    };
    let f: Vec<&str> = body.split_whitespace().collect();
    let field = |i: usize| {
        f.get(i)
            .copied()
            .ok_or_else(|| bad(format!("truncated record (field {i})")))
    };
    let offset: u64 = field(0)?.parse().map_err(|_| bad(format!("bad offset `{}`", f[0])))?;
    let w_cnt = usize::from_str_radix(field(3)?, 16).map_err(|_| bad(format!("bad word count `{}`", f[3])))?;
    if w_cnt == 0 {
        return Err(bad("synset without lemmas".into()));
    }
    let mut lemmas = Vec::with_capacity(w_cnt);
    for i in 0..w_cnt {
        let w = field(4 + 2 * i)?;
        let w = w.split('(').next().unwrap_or(w);
        lemmas.push(w.to_lowercase());
    }
    let mut i = 4 + 2 * w_cnt;
    let p_cnt: usize = field(i)?
        .parse()
        .map_err(|_| bad(format!("bad pointer count `{}`", f[i])))?;
    i += 1;
    let mut pointers = Vec::with_capacity(p_cnt);
    for _ in 0..p_cnt {
        let sym = field(i)?;
        let target = field(i + 1)?;
        let pos = field(i + 2)?;
        field(i + 3)?;
        i += 4;
        if pos != "n" {
            continue;
        }
        if let Some(kind) = PointerKind::from_symbol(sym) {
            let t: u64 = target
                .parse()
                .map_err(|_| bad(format!("bad pointer target `{target}`")))?;
            pointers.push((kind, SynsetId::Offset(t)));
        }
    }
    Ok(Synset {
        id: SynsetId::Offset(offset),
        lemmas,
        pointers,
        gloss: gloss.to_owned(),
    })
}

/// Loads `index.noun` and `data.noun` from `dir`, then applies the overlays in
/// order.
pub fn load_knowledge_base(dir: &Path, overlays: &[PathBuf]) -> Result<KnowledgeBase, WordNetError> {
    let data_path = dir.join("data.noun");
    let index_path = dir.join("index.noun");
    let mut kb = KnowledgeBase::default();

    let data = read_text(&data_path)?;
    for (n, line) in data.lines().enumerate() {
        if line.starts_with("  ") || line.trim().is_empty() {
            continue;
        }
        let s = parse_data_line(&data_path, n + 1, line)?;
        kb.by_id.insert(s.id, kb.synsets.len());
        kb.synsets.push(s);
    }

    let index = read_text(&index_path)?;
    for (n, line) in index.lines().enumerate() {
        if line.starts_with("  ") || line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| WordNetError::Parse {
            path: index_path.clone(),
            line: n + 1,
            message,
        };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 6 {
            return Err(bad("truncated index record".into()));
        }
        let synset_cnt: usize = f[2].parse().map_err(|_| bad(format!("bad synset count `{}`", f[2])))?;
        let p_cnt: usize = f[3].parse().map_err(|_| bad(format!("bad pointer count `{}`", f[3])))?;
        let start = 4 + p_cnt + 2;
        let offsets = f.get(start..).unwrap_or_default();
        if offsets.len() != synset_cnt {
            return Err(bad(format!("expected {synset_cnt} offsets, found {}", offsets.len())));
        }
        let mut senses = Vec::with_capacity(synset_cnt);
        for o in offsets {
            let id = SynsetId::Offset(o.parse().map_err(|_| bad(format!("bad offset `{o}`")))?);
            if !kb.by_id.contains_key(&id) {
                return Err(WordNetError::UnknownSynset {
                    path: index_path.clone(),
                    line: n + 1,
                    id: o.to_string(),
                });
            }
            senses.push(id);
        }
        kb.lemma_index.insert(f[0].to_lowercase(), senses);
    }

    for s in kb.synsets.iter_mut() {
        s.pointers.retain(|(_, t)| kb.by_id.contains_key(t));
    }
    kb.complete_inverses();
    kb.check_acyclic()?;

    for path in overlays {
        let text = read_text(path)?;
        for (n, line) in text.lines().enumerate() {
            let entry = parse_overlay_line(line).map_err(|message| WordNetError::Parse {
                path: path.clone(),
                line: n + 1,
                message,
            })?;
            if let Some(entry) = entry {
                kb.apply_overlay(entry).map_err(|id| WordNetError::UnknownSynset {
                    path: path.clone(),
                    line: n + 1,
                    id: id.to_string(),
                })?;
            }
        }
    }
    kb.rebuild_stem_index();
    Ok(kb)
}

impl KnowledgeBase {
    fn complete_inverses(&mut self) {
        let mut missing: Vec<(usize, PointerKind, SynsetId)> = Vec::new();
        let present: HashSet<(SynsetId, PointerKind, SynsetId)> = self
            .synsets
            .iter()
            .flat_map(|s| s.pointers.iter().map(move |(k, t)| (s.id, *k, *t)))
            .collect();
        for s in &self.synsets {
            for (k, t) in &s.pointers {
                if *k == PointerKind::Antonym {
                    continue;
                }
                if !present.contains(&(*t, k.inverse(), s.id)) {
                    missing.push((self.by_id[t], k.inverse(), s.id));
                }
            }
        }
        missing.sort();
        missing.dedup();
        for (i, k, t) in missing {
            self.synsets[i].pointers.push((k, t));
        }
    }

    fn check_acyclic(&self) -> Result<(), WordNetError> {
        // Iterative three-colour DFS over hypernym pointers.
        let n = self.synsets.len();
        let mut state = vec![0u8; n];
        for root in 0..n {
            if state[root] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
            state[root] = 1;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                let hypers: Vec<usize> = self.hypernym_indices(v).collect();
                if *next < hypers.len() {
                    let w = hypers[*next];
                    *next += 1;
                    match state[w] {
                        0 => {
                            state[w] = 1;
                            stack.push((w, 0));
                        }
                        1 => return Err(WordNetError::Cycle(self.synsets[w].id)),
                        _ => {}
                    }
                } else {
                    state[v] = 2;
                    stack.pop();
                }
            }
        }
        Ok(())
    }

    /// Adds an overlay synset. Returns the offending id when a target is not
    /// (yet) defined.
    fn apply_overlay(&mut self, entry: OverlayEntry) -> Result<(), SynsetId> {
        for t in &entry.hypernym_targets {
            if !self.by_id.contains_key(t) {
                return Err(*t);
            }
        }
        if self.overlay_entries.iter().any(|e| e.same_record(&entry)) {
            self.warnings
                .push(format!("duplicate overlay entry for `{}` skipped", entry.new_lemma));
            return Ok(());
        }
        let id = SynsetId::Overlay(self.overlay_entries.len() as u32 + 1);
        let mut targets = entry.hypernym_targets.clone();
        targets.dedup();
        let idx = self.synsets.len();
        self.synsets.push(Synset {
            id,
            lemmas: vec![entry.new_lemma.clone()],
            pointers: targets.iter().map(|t| (PointerKind::Hypernym, *t)).collect(),
            gloss: format!("added by merge run {}", entry.provenance),
        });
        self.by_id.insert(id, idx);
        for t in &targets {
            let ti = self.by_id[t];
            self.synsets[ti].pointers.push((PointerKind::Hyponym, id));
        }
        self.lemma_index.entry(entry.new_lemma.clone()).or_default().push(id);
        self.overlay_entries.push(entry);
        Ok(())
    }

    fn rebuild_stem_index(&mut self) {
        self.stem_index.clear();
        for lemma in self.lemma_index.keys() {
            self.stem_index
                .entry(text::stem_key(lemma))
                .or_default()
                .push(lemma.clone());
        }
    }

    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }

    pub fn synsets(&self) -> &[Synset] {
        &self.synsets
    }

    pub fn synset(&self, id: SynsetId) -> Option<&Synset> {
        self.by_id.get(&id).map(|&i| &self.synsets[i])
    }

    pub(crate) fn index_of(&self, id: SynsetId) -> Option<usize> {
        self.by_id.get(&id).copied()
    }

    pub(crate) fn at(&self, i: usize) -> &Synset {
        &self.synsets[i]
    }

    pub fn overlay_entries(&self) -> &[OverlayEntry] {
        &self.overlay_entries
    }

    /// Non-fatal notes collected while loading.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.lemma_index.keys().map(String::as_str)
    }

    /// Sense ids of a normalized lemma, in database order.
    pub fn senses(&self, lemma: &str) -> &[SynsetId] {
        self.lemma_index.get(lemma).map(Vec::as_slice).unwrap_or_default()
    }

    /// Lemmas whose stemmed form equals `stem`.
    pub fn lemmas_with_stem(&self, stem: &str) -> &[String] {
        self.stem_index.get(stem).map(Vec::as_slice).unwrap_or_default()
    }

    pub(crate) fn hypernym_indices(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.pointer_indices(i, |k| k == PointerKind::Hypernym)
    }

    pub(crate) fn pointer_indices(
        &self,
        i: usize,
        pred: impl Fn(PointerKind) -> bool + 'static,
    ) -> impl Iterator<Item = usize> + '_ {
        self.synsets[i]
            .pointers
            .iter()
            .filter(move |(k, _)| pred(*k))
            .map(|(_, t)| self.by_id[t])
    }
}

/// Synsets of `lemma` in sense order; empty when the lemma is absent.
pub fn lookup_synsets<'a>(kb: &'a KnowledgeBase, lemma: &str) -> Vec<&'a Synset> {
    kb.senses(&normalize_lemma(lemma))
        .iter()
        .filter_map(|id| kb.synset(*id))
        .collect()
}

/// Every root-to-synset hypernym chain of `id`, as synset ids.
pub fn hypernym_chains(kb: &KnowledgeBase, id: SynsetId) -> Vec<Vec<SynsetId>> {
    let Some(start) = kb.index_of(id) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut stack = vec![vec![start]];
    while let Some(path) = stack.pop() {
        let last = *path.last().unwrap();
        let hypers: Vec<usize> = kb.hypernym_indices(last).collect();
        if hypers.is_empty() {
            out.push(path.iter().rev().map(|&i| kb.at(i).id).collect());
        } else {
            for h in hypers.into_iter().rev() {
                let mut p = path.clone();
                p.push(h);
                stack.push(p);
            }
        }
    }
    out
}

/// Root-to-synset hypernym paths, each as the head lemma of every synset.
pub fn hypernym_paths(kb: &KnowledgeBase, id: SynsetId) -> Vec<Vec<String>> {
    hypernym_chains(kb, id)
        .into_iter()
        .map(|chain| {
            chain
                .into_iter()
                .map(|s| kb.synset(s).unwrap().lemmas[0].clone())
                .collect()
        })
        .collect()
}

/// Pointer targets of one kind, in pointer order.
pub fn related(kb: &KnowledgeBase, id: SynsetId, kind: PointerKind) -> Vec<&Synset> {
    kb.synset(id)
        .map(|s| {
            s.pointers
                .iter()
                .filter(|(k, _)| *k == kind)
                .filter_map(|(_, t)| kb.synset(*t))
                .collect()
        })
        .unwrap_or_default()
}

/// Appends `entries` to the overlay file at `path`, creating it if needed.
/// Records already present in the file are skipped; returns a warning per
/// skipped record.
pub fn write_overlay(entries: &[OverlayEntry], path: &Path) -> Result<Vec<String>, WordNetError> {
    let mut existing: Vec<OverlayEntry> = Vec::new();
    if path.exists() {
        let text = read_text(path)?;
        for (n, line) in text.lines().enumerate() {
            let parsed = parse_overlay_line(line).map_err(|message| WordNetError::Parse {
                path: path.to_owned(),
                line: n + 1,
                message,
            })?;
            existing.extend(parsed);
        }
    }
    let mut warnings = Vec::new();
    let mut out = String::new();
    for e in entries {
        if existing.iter().any(|x| x.same_record(e)) {
            warnings.push(format!("overlay already lists `{}`; skipped", e.new_lemma));
            continue;
        }
        out.push_str(&e.to_line());
        out.push('\n');
        existing.push(e.clone());
    }
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    f.write_all(out.as_bytes()).map_err(io_err(path))?;
    Ok(warnings)
}

/// Checks the structural invariants of a loaded knowledge base; returns one
/// message per violation.
pub fn check_invariants(kb: &KnowledgeBase) -> Vec<String> {
    let mut out = Vec::new();
    if let Err(e) = kb.check_acyclic() {
        out.push(e.to_string());
    }
    for s in kb.synsets() {
        if s.lemmas.is_empty() {
            out.push(format!("{} has no lemmas", s.id));
        }
        for (k, t) in &s.pointers {
            if *k == PointerKind::Antonym {
                continue;
            }
            let back = kb
                .synset(*t)
                .map(|x| x.pointers.contains(&(k.inverse(), s.id)))
                .unwrap_or(false);
            if !back {
                out.push(format!("{} -> {} lacks its inverse pointer", s.id, t));
            }
        }
    }
    let mut seen = BTreeSet::new();
    for (lemma, ids) in &kb.lemma_index {
        for id in ids {
            match kb.synset(*id) {
                None => out.push(format!("`{lemma}` points at unknown {id}")),
                Some(s) if !s.lemmas.iter().any(|l| l == lemma) => {
                    out.push(format!("`{lemma}` is not a lemma of {id}"))
                }
                _ => {}
            }
            if !seen.insert((lemma, id)) {
                out.push(format!("`{lemma}` lists {id} twice"));
            }
        }
    }
    out
}
