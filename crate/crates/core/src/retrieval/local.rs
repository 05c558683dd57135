use std::collections::HashMap;
use std::fs;
use std::io::BufRead;
use std::path::Path;
use std::sync::Arc;

use percent_encoding::percent_decode_str;
use serde::Deserialize;

use super::{Passage, RetrievalError, Retriever, RuleSegmenter, SentenceSegmenter};

/// In-memory corpus keyed by entity name.
///
/// Lookup tries the exact name first, then a lowercase match. When two
/// entries collide case-insensitively the first one loaded wins.
pub struct LocalRetriever {
    texts: HashMap<String, String>,
    folded: HashMap<String, String>,
    segmenter: Arc<dyn SentenceSegmenter>,
}

#[derive(Deserialize)]
struct CorpusRecord {
    entity: String,
    text: String,
}

impl LocalRetriever {
    pub fn from_entries<I, K, V>(entries: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        let mut texts = HashMap::new();
        let mut folded = HashMap::new();
        for (k, v) in entries {
            let k: String = k.into();
            folded.entry(k.to_lowercase()).or_insert_with(|| k.clone());
            texts.entry(k).or_insert_with(|| v.into());
        }
        Self {
            texts,
            folded,
            segmenter: Arc::new(RuleSegmenter),
        }
    }

    pub fn with_segmenter(mut self, segmenter: Arc<dyn SentenceSegmenter>) -> Self {
        self.segmenter = segmenter;
        self
    }

    /// Loads either a directory of `<percent-encoded entity>.txt` files or a
    /// JSONL file of `{"entity", "text"}` records.
    pub fn open(path: &Path) -> Result<Self, RetrievalError> {
        if path.is_dir() {
            Self::from_dir(path)
        } else {
            let file = fs::File::open(path)
                .map_err(|e| RetrievalError::Corpus(format!("{}: {e}", path.display())))?;
            Self::from_jsonl(std::io::BufReader::new(file))
        }
    }

    pub fn from_dir(dir: &Path) -> Result<Self, RetrievalError> {
        let corpus_err = |e: std::io::Error| RetrievalError::Corpus(format!("{}: {e}", dir.display()));
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(corpus_err)?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "txt"))
            .collect();
        paths.sort();

        let mut entries = Vec::with_capacity(paths.len());
        for p in paths {
            let Some(stem) = p.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            let entity = percent_decode_str(stem)
                .decode_utf8()
                .map_err(|e| RetrievalError::Corpus(format!("{}: {e}", p.display())))?
                .into_owned();
            let text = fs::read_to_string(&p).map_err(corpus_err)?;
            entries.push((entity, text));
        }
        Ok(Self::from_entries(entries))
    }

    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Self, RetrievalError> {
        let mut entries = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| RetrievalError::Corpus(format!("line {}: {e}", idx + 1)))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let rec: CorpusRecord = serde_json::from_str(line)
                .map_err(|e| RetrievalError::Corpus(format!("line {}: {e}", idx + 1)))?;
            entries.push((rec.entity, rec.text));
        }
        Ok(Self::from_entries(entries))
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }
}

impl Retriever for LocalRetriever {
    fn retrieve(&self, query: &str) -> Result<Passage, RetrievalError> {
        let text = self.texts.get(query).or_else(|| {
            self.folded
                .get(&query.to_lowercase())
                .and_then(|k| self.texts.get(k))
        });
        match text {
            Some(text) => Passage::from_text(query, text, self.segmenter.as_ref()),
            None => Err(RetrievalError::NotFound(query.to_string())),
        }
    }
}
