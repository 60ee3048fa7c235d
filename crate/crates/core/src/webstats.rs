//! Hypernym acquisition for concepts the knowledge base lacks, from
//! "X is a(n) Y" phrase hit counts.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use rayon::prelude::*;
use thiserror::Error;

use crate::owl::Ontology;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("no cached count for query \"{0}\"")]
    MissingEntry(String),
    #[error("{path}:{line}: {message}")]
    Cache {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("request for \"{query}\" failed: {message}")]
    Http { query: String, message: String },
    #[error("environment variable {0} is not set")]
    MissingKey(String),
}

#[derive(Debug, Error)]
pub enum WebstatsError {
    #[error("query labels must be non-empty")]
    EmptyLabel,
    #[error("threshold needs at least one count")]
    NoResults,
    #[error("acquiring \"{query}\": {source}")]
    Provider {
        query: String,
        #[source]
        source: ProviderError,
    },
}

/// Source of exact-phrase hit counts.
pub trait HitCountProvider: Send + Sync {
    fn count(&self, phrase: &str) -> Result<u64, ProviderError>;

    /// Whether several queries may be in flight at once.
    fn concurrent(&self) -> bool {
        true
    }

    /// Minimum pause between consecutive queries.
    fn min_delay(&self) -> Duration {
        Duration::ZERO
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryResult {
    pub query: String,
    pub candidate: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdReport {
    pub missing: String,
    pub results: Vec<QueryResult>,
    pub tau: u64,
    pub selected: Vec<String>,
}

impl ThresholdReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "missing\t{}", self.missing);
        for r in &self.results {
            let _ = writeln!(out, "query\t{}\t{}", r.query, r.count);
        }
        let _ = writeln!(out, "tau\t{}", self.tau);
        let _ = writeln!(out, "selected\t{}", self.selected.join(", "));
        out
    }
}

/// `"<missing> is a(n) <candidate>"`, without the surrounding quotes. The
/// article follows the first letter of the candidate, not its sound.
pub fn build_query(missing: &str, candidate: &str) -> Result<String, WebstatsError> {
    let (m, c) = (missing.trim(), candidate.trim());
    if m.is_empty() || c.is_empty() {
        return Err(WebstatsError::EmptyLabel);
    }
    let vowel = c
        .chars()
        .next()
        .is_some_and(|ch| matches!(ch.to_ascii_lowercase(), 'a' | 'e' | 'i' | 'o' | 'u'));
    let article = if vowel { "an" } else { "a" };
    Ok(format!("{m} is {article} {c}"))
}

/// One query per candidate, in candidate order. Fails on the first provider
/// error; partial results are discarded.
pub fn acquire_counts(
    missing: &str,
    candidates: &[String],
    provider: &dyn HitCountProvider,
) -> Result<Vec<QueryResult>, WebstatsError> {
    let queries: Vec<(String, &String)> = candidates
        .iter()
        .map(|c| build_query(missing, c).map(|q| (q, c)))
        .collect::<Result<_, _>>()?;
    let ask = |(q, c): &(String, &String)| {
        provider
            .count(q)
            .map(|count| QueryResult {
                query: q.clone(),
                candidate: (*c).clone(),
                count,
            })
            .map_err(|source| WebstatsError::Provider {
                query: q.clone(),
                source,
            })
    };
    if provider.concurrent() {
        queries.par_iter().map(ask).collect()
    } else {
        let mut out = Vec::with_capacity(queries.len());
        for (i, q) in queries.iter().enumerate() {
            if i > 0 && !provider.min_delay().is_zero() {
                std::thread::sleep(provider.min_delay());
            }
            out.push(ask(q)?);
        }
        Ok(out)
    }
}

/// τ over raw counts: the lower value of the widest gap between adjacent
/// counts in descending order (first such gap on ties); 0 for one count.
pub fn threshold_of_counts(counts: &[u64]) -> Option<u64> {
    let mut sorted = counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    match sorted.len() {
        0 => None,
        1 => Some(0),
        _ => {
            let mut best = (0, sorted[1]);
            for (i, w) in sorted.windows(2).enumerate() {
                let d = w[0] - w[1];
                if i == 0 || d > best.0 {
                    best = (d, w[1]);
                }
            }
            Some(best.1)
        }
    }
}

pub fn compute_threshold(results: &[QueryResult]) -> Result<u64, WebstatsError> {
    let counts: Vec<u64> = results.iter().map(|r| r.count).collect();
    threshold_of_counts(&counts).ok_or(WebstatsError::NoResults)
}

/// Candidates whose count exceeds `tau`, by descending count then label.
pub fn select_hypernyms(results: &[QueryResult], tau: u64) -> Vec<String> {
    let mut picked: Vec<&QueryResult> = results.iter().filter(|r| r.count > tau).collect();
    picked.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.candidate.cmp(&b.candidate)));
    picked.into_iter().map(|r| r.candidate.clone()).collect()
}

pub fn threshold_report(
    missing: &str,
    candidates: &[String],
    provider: &dyn HitCountProvider,
) -> Result<ThresholdReport, WebstatsError> {
    let results = acquire_counts(missing, candidates, provider)?;
    let tau = if results.is_empty() {
        0
    } else {
        compute_threshold(&results)?
    };
    let selected = select_hypernyms(&results, tau);
    Ok(ThresholdReport {
        missing: missing.to_owned(),
        results,
        tau,
        selected,
    })
}

/// Replaces the parents of `missing` with the selected hypernym nodes.
/// Hypernyms below `missing`, unknown labels, and hypernyms implied by a more
/// specific selection are skipped. Returns the new ontology, the raw ids
/// actually attached, and warnings.
pub fn relocate_missing(
    merged: &Ontology,
    missing: &str,
    hypernyms: &[String],
) -> (Ontology, Vec<String>, Vec<String>) {
    let mut warnings = Vec::new();
    let Some(node) = merged.node_by_label(missing) else {
        warnings.push(format!("`{missing}` is not in the merged ontology"));
        return (merged.clone(), Vec::new(), warnings);
    };
    let m = node.raw().to_owned();
    let below = merged.descendants(&m);
    let mut targets: Vec<String> = Vec::new();
    for h in hypernyms {
        match merged.node_by_label(h) {
            None => warnings.push(format!("hypernym `{h}` is not in the merged ontology; skipped")),
            Some(t) if t.raw() == m || below.contains(t.raw()) => {
                warnings.push(format!("placing `{missing}` under `{h}` would close a cycle; skipped"))
            }
            Some(t) => {
                if !targets.iter().any(|x| x == t.raw()) {
                    targets.push(t.raw().to_owned());
                }
            }
        }
    }
    let implied: Vec<String> = targets
        .iter()
        .filter(|t| targets.iter().any(|o| o != *t && merged.ancestors(o).contains(*t)))
        .cloned()
        .collect();
    targets.retain(|t| !implied.contains(t));
    if targets.is_empty() {
        warnings.push(format!("no hypernym selected for `{missing}`; left in place"));
        return (merged.clone(), Vec::new(), warnings);
    }
    let mut out = merged.clone();
    out.subclass_edges.retain(|(c, _)| *c != m);
    for t in &targets {
        out.add_edge(&m, t);
    }
    (out, targets, warnings)
}

fn parse_cache(path: &Path, text: &str) -> Result<HashMap<String, u64>, ProviderError> {
    let mut map = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: &str| ProviderError::Cache {
            path: path.to_owned(),
            line: n + 1,
            message: message.to_owned(),
        };
        let (phrase, count) = line.rsplit_once('\t').ok_or_else(|| bad("expected phrase<TAB>count"))?;
        let count: u64 = count
            .trim()
            .parse()
            .map_err(|_| bad("count is not a non-negative integer"))?;
        map.insert(phrase.to_owned(), count);
    }
    Ok(map)
}

/// Deterministic counts from a `phrase<TAB>count` file.
#[derive(Debug, Clone, Default)]
pub struct ReplayProvider {
    counts: HashMap<String, u64>,
}

impl ReplayProvider {
    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let text = fs::read_to_string(path).map_err(|source| ProviderError::Io {
            path: path.to_owned(),
            source,
        })?;
        Ok(ReplayProvider {
            counts: parse_cache(path, &text)?,
        })
    }

    pub fn from_pairs<I: IntoIterator<Item = (String, u64)>>(pairs: I) -> Self {
        ReplayProvider {
            counts: pairs.into_iter().collect(),
        }
    }
}

impl HitCountProvider for ReplayProvider {
    fn count(&self, phrase: &str) -> Result<u64, ProviderError> {
        self.counts
            .get(phrase)
            .copied()
            .ok_or_else(|| ProviderError::MissingEntry(phrase.to_owned()))
    }
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Exact-phrase occurrence counts over every file below a directory.
/// Matching is case-insensitive on word tokens.
#[derive(Debug, Clone, Default)]
pub struct CorpusProvider {
    documents: Vec<Vec<String>>,
}

impl CorpusProvider {
    pub fn load(dir: &Path) -> Result<Self, ProviderError> {
        let mut paths = Vec::new();
        for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
            let entry = entry.map_err(|e| ProviderError::Io {
                path: e.path().unwrap_or(dir).to_owned(),
                source: e
                    .into_io_error()
                    .unwrap_or_else(|| std::io::Error::other("walk failed")),
            })?;
            if entry.file_type().is_file() {
                paths.push(entry.into_path());
            }
        }
        let documents = paths
            .iter()
            .map(|p| {
                fs::read(p)
                    .map(|b| words(&String::from_utf8_lossy(&b)))
                    .map_err(|source| ProviderError::Io {
                        path: p.clone(),
                        source,
                    })
            })
            .collect::<Result<_, _>>()?;
        Ok(CorpusProvider { documents })
    }

    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        CorpusProvider {
            documents: texts.into_iter().map(words).collect(),
        }
    }
}

impl HitCountProvider for CorpusProvider {
    fn count(&self, phrase: &str) -> Result<u64, ProviderError> {
        let needle = words(phrase);
        if needle.is_empty() {
            return Ok(0);
        }
        Ok(self
            .documents
            .iter()
            .map(|d| d.windows(needle.len()).filter(|w| *w == needle.as_slice()).count() as u64)
            .sum())
    }
}

/// Settings for a web search endpoint that reports an estimated total.
#[derive(Debug, Clone)]
pub struct LiveConfig {
    pub endpoint: String,
    /// Name of the environment variable holding the API key.
    pub key_env: String,
    /// JSON pointer to the count in the response body.
    pub count_pointer: String,
    pub delay: Duration,
    pub cache: PathBuf,
}

/// Sequential HTTP queries with write-through to a replay cache.
pub struct LiveProvider {
    config: LiveConfig,
    key: String,
    agent: ureq::Agent,
    cache: Mutex<HashMap<String, u64>>,
}

impl LiveProvider {
    pub fn new(config: LiveConfig) -> Result<Self, ProviderError> {
        let key = std::env::var(&config.key_env).map_err(|_| ProviderError::MissingKey(config.key_env.clone()))?;
        let cache = if config.cache.exists() {
            let text = fs::read_to_string(&config.cache).map_err(|source| ProviderError::Io {
                path: config.cache.clone(),
                source,
            })?;
            parse_cache(&config.cache, &text)?
        } else {
            HashMap::new()
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .into();
        Ok(LiveProvider {
            config,
            key,
            agent,
            cache: Mutex::new(cache),
        })
    }

    fn fetch(&self, phrase: &str) -> Result<u64, ProviderError> {
        let http = |message: String| ProviderError::Http {
            query: phrase.to_owned(),
            message,
        };
        let quoted = format!("\"{phrase}\"");
        let mut resp = self
            .agent
            .get(&self.config.endpoint)
            .query("q", &quoted)
            .query("key", &self.key)
            .call()
            .map_err(|e| http(e.to_string()))?;
        let body = resp.body_mut().read_to_string().map_err(|e| http(e.to_string()))?;
        let json: serde_json::Value = serde_json::from_str(&body).map_err(|e| http(format!("bad JSON: {e}")))?;
        let v = json
            .pointer(&self.config.count_pointer)
            .ok_or_else(|| http(format!("no value at {}", self.config.count_pointer)))?;
        match v {
            serde_json::Value::Number(n) => n.as_u64(),
            serde_json::Value::String(s) => s.trim().parse().ok(),
            _ => None,
        }
        .ok_or_else(|| {
            http(format!(
                "count at {} is not a non-negative integer",
                self.config.count_pointer
            ))
        })
    }
}

impl HitCountProvider for LiveProvider {
    fn count(&self, phrase: &str) -> Result<u64, ProviderError> {
        if let Some(c) = self.cache.lock().unwrap().get(phrase) {
            return Ok(*c);
        }
        let count = self.fetch(phrase)?;
        let mut cache = self.cache.lock().unwrap();
        cache.insert(phrase.to_owned(), count);
        let io = |source| ProviderError::Io {
            path: self.config.cache.clone(),
            source,
        };
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.config.cache)
            .map_err(io)?;
        writeln!(f, "{phrase}\t{count}").map_err(io)?;
        Ok(count)
    }

    fn concurrent(&self) -> bool {
        false
    }

    fn min_delay(&self) -> Duration {
        self.config.delay
    }
}

/// Wraps a provider and remembers every answered query.
pub struct Recording<'a> {
    inner: &'a dyn HitCountProvider,
    seen: Mutex<BTreeMap<String, u64>>,
}

impl<'a> Recording<'a> {
    pub fn new(inner: &'a dyn HitCountProvider) -> Self {
        Recording {
            inner,
            seen: Mutex::new(BTreeMap::new()),
        }
    }

    /// Recorded queries in replay-cache format, sorted by phrase.
    pub fn to_cache_text(&self) -> String {
        let mut out = String::new();
        for (q, c) in self.seen.lock().unwrap().iter() {
            let _ = writeln!(out, "{q}\t{c}");
        }
        out
    }
}

impl HitCountProvider for Recording<'_> {
    fn count(&self, phrase: &str) -> Result<u64, ProviderError> {
        let c = self.inner.count(phrase)?;
        self.seen.lock().unwrap().insert(phrase.to_owned(), c);
        Ok(c)
    }

    fn concurrent(&self) -> bool {
        self.inner.concurrent()
    }

    fn min_delay(&self) -> Duration {
        self.inner.min_delay()
    }
}
