//! End-to-end generation: walk → multi-passage → questions → finished
//! dialogue, run over a bounded worker pool with output kept in ordinal
//! order.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::assembler::{build_multipassage, AssembleError};
use crate::kg::{KnowledgeGraph, LoadError, DEFAULT_MAX_TOPICS};
use crate::postproc::{finalize_dialogue, write_dialogue, Dialogue, GeneratorMeta};
use crate::qgen::{
    dialogue_from_multipassage, ChatClient, ChatConfig, GeneratorKind, LlmGenerator, QuestionGenerator,
    StubGenerator, TurnError, API_KEY_ENV, DEFAULT_BASE_URL,
};
use crate::retrieval::{LocalRetriever, RetrievalError, Retriever, WikiConfig, WikiRetriever};

/// Walks sampled per dialogue before giving up on that ordinal.
pub const MAX_WALK_ATTEMPTS: usize = 10;

/// Seed of dialogue `ordinal`: the first 8 bytes (little endian) of
/// SHA-256(`seed` LE ‖ `ordinal` LE).
pub fn dialogue_seed(seed: u64, ordinal: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(ordinal.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("`n` must be at least 1")]
    NoDialogues,
    #[error("`max_topics` must be at least 2 (got {0})")]
    MaxTopics(usize),
    #[error("`concurrency` must be at least 1")]
    Concurrency,
    #[error("configure exactly one retrieval source: a local corpus or a remote base URL")]
    RetrievalSource,
    #[error("the llm generator requires a model name")]
    MissingModel,
    #[error("the llm generator requires an API key in {API_KEY_ENV}")]
    MissingApiKey,
}

#[derive(Debug, Error)]
pub enum SetupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read graph {path}: {source}")]
    GraphIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot load graph: {0}")]
    Graph(#[from] LoadError),
    #[error("cannot open corpus: {0}")]
    Corpus(RetrievalError),
    #[error("cannot create chat client: {0}")]
    Client(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub graph_path: PathBuf,
    pub corpus_path: Option<PathBuf>,
    pub remote_base_url: Option<String>,
    pub output_path: Option<PathBuf>,
    pub n_dialogues: usize,
    pub seed: u64,
    pub max_topics: usize,
    pub generator: GeneratorKind,
    pub model_name: Option<String>,
    pub api_key: Option<String>,
    pub chat_base_url: Option<String>,
    pub concurrency: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            graph_path: PathBuf::new(),
            corpus_path: None,
            remote_base_url: None,
            output_path: None,
            n_dialogues: 1,
            seed: 0,
            max_topics: DEFAULT_MAX_TOPICS,
            generator: GeneratorKind::Stub,
            model_name: None,
            api_key: None,
            chat_base_url: None,
            concurrency: 1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_dialogues == 0 {
            return Err(ConfigError::NoDialogues);
        }
        if self.max_topics < 2 {
            return Err(ConfigError::MaxTopics(self.max_topics));
        }
        if self.concurrency == 0 {
            return Err(ConfigError::Concurrency);
        }
        if self.corpus_path.is_some() == self.remote_base_url.is_some() {
            return Err(ConfigError::RetrievalSource);
        }
        if self.generator == GeneratorKind::Llm {
            if self.model_name.as_deref().is_none_or(|m| m.trim().is_empty()) {
                return Err(ConfigError::MissingModel);
            }
            if self.api_key.as_deref().is_none_or(|k| k.trim().is_empty()) {
                return Err(ConfigError::MissingApiKey);
            }
        }
        Ok(())
    }

    /// Validates the configuration and opens the graph, retriever, and generator.
    pub fn open(&self) -> Result<Inputs, SetupError> {
        self.validate()?;
        let file = File::open(&self.graph_path).map_err(|source| SetupError::GraphIo {
            path: self.graph_path.clone(),
            source,
        })?;
        let graph = KnowledgeGraph::load(BufReader::new(file))?;

        let retriever: Box<dyn Retriever> = match (&self.corpus_path, &self.remote_base_url) {
            (Some(path), _) => Box::new(LocalRetriever::open(path).map_err(SetupError::Corpus)?),
            (None, Some(url)) => Box::new(
                WikiRetriever::new(WikiConfig {
                    base_url: url.clone(),
                    ..WikiConfig::default()
                })
                .map_err(SetupError::Corpus)?,
            ),
            (None, None) => unreachable!("validated above"),
        };

        let generator: Box<dyn QuestionGenerator> = match self.generator {
            GeneratorKind::Stub => Box::new(StubGenerator),
            GeneratorKind::Llm => {
                let config = ChatConfig::new(
                    self.chat_base_url.clone().unwrap_or_else(|| DEFAULT_BASE_URL.into()),
                    self.model_name.clone().unwrap_or_default(),
                    self.api_key.clone().unwrap_or_default(),
                );
                let client = ChatClient::new(config).map_err(|e| SetupError::Client(e.to_string()))?;
                Box::new(LlmGenerator::new(client))
            }
        };

        Ok(Inputs {
            graph,
            retriever,
            generator,
        })
    }
}

pub struct Inputs {
    pub graph: KnowledgeGraph,
    pub retriever: Box<dyn Retriever>,
    pub generator: Box<dyn QuestionGenerator>,
}

impl Inputs {
    pub fn pipeline(&self, max_topics: usize) -> Pipeline<'_> {
        Pipeline {
            graph: &self.graph,
            retriever: self.retriever.as_ref(),
            generator: self.generator.as_ref(),
            max_topics,
            max_walk_attempts: MAX_WALK_ATTEMPTS,
        }
    }
}

#[derive(Debug, Error)]
pub enum DialogueError {
    #[error("every sampled walk was skipped ({0} attempts)")]
    WalksExhausted(usize),
    #[error(transparent)]
    Retrieval(RetrievalError),
    #[error(transparent)]
    Generation(#[from] TurnError),
}

/// Result of producing one dialogue.
#[derive(Debug)]
pub struct DialogueOutcome {
    pub ordinal: usize,
    pub walks_sampled: usize,
    /// Entities whose passages were missing, one per skipped walk.
    pub skipped: Vec<String>,
    pub dialogue: Result<Dialogue, DialogueError>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub requested: usize,
    pub written: usize,
    pub failed: usize,
    pub walks_sampled: usize,
    pub walks_skipped: usize,
}

impl RunSummary {
    /// More than half the sampled walks skipped, or some dialogues missing.
    pub fn degraded(&self) -> bool {
        self.walks_skipped * 2 > self.walks_sampled || self.failed > 0
    }
}

#[derive(Clone, Copy)]
pub struct Pipeline<'a> {
    pub graph: &'a KnowledgeGraph,
    pub retriever: &'a dyn Retriever,
    pub generator: &'a dyn QuestionGenerator,
    pub max_topics: usize,
    pub max_walk_attempts: usize,
}

impl Pipeline<'_> {
    /// Produces dialogue `ordinal`, resampling walks whose entities lack passages.
    pub fn generate_one(&self, seed: u64, ordinal: usize) -> DialogueOutcome {
        let dialogue_seed = dialogue_seed(seed, ordinal as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(dialogue_seed);
        let mut skipped = Vec::new();
        let mut walks_sampled = 0;

        let result = loop {
            if walks_sampled == self.max_walk_attempts.max(1) {
                break Err(DialogueError::WalksExhausted(walks_sampled));
            }
            walks_sampled += 1;
            let walk = self.graph.sample_walk(&mut rng, self.max_topics);
            match build_multipassage(&walk, self.retriever, &mut rng) {
                Ok(mp) => {
                    break dialogue_from_multipassage(&mp, self.generator)
                        .map(|raw| {
                            finalize_dialogue(
                                &raw,
                                GeneratorMeta {
                                    generator: self.generator.kind(),
                                    model: self.generator.model().map(str::to_string),
                                    seed: dialogue_seed,
                                },
                            )
                        })
                        .map_err(DialogueError::from);
                }
                Err(AssembleError::SkipWalk(entity)) => {
                    tracing::debug!(ordinal, %entity, "no passage; resampling walk");
                    skipped.push(entity);
                }
                Err(AssembleError::Retrieval(e)) => break Err(DialogueError::Retrieval(e)),
            }
        };

        DialogueOutcome {
            ordinal,
            walks_sampled,
            skipped,
            dialogue: result,
        }
    }

    /// Generates `n` dialogues with `concurrency` workers and writes them as
    /// JSONL in ordinal order. Output depends only on the inputs and `seed`.
    pub fn run<W: Write + ?Sized>(&self, n: usize, seed: u64, concurrency: usize, out: &mut W) -> std::io::Result<RunSummary> {
        let next = AtomicUsize::new(0);
        let (tx, rx) = mpsc::channel::<DialogueOutcome>();
        let mut summary = RunSummary {
            requested: n,
            ..RunSummary::default()
        };

        thread::scope(|scope| -> std::io::Result<()> {
            for _ in 0..concurrency.max(1).min(n.max(1)) {
                let tx = tx.clone();
                let next = &next;
                scope.spawn(move || loop {
                    let ordinal = next.fetch_add(1, Ordering::Relaxed);
                    if ordinal >= n {
                        break;
                    }
                    if tx.send(self.generate_one(seed, ordinal)).is_err() {
                        break;
                    }
                });
            }
            drop(tx);

            let mut pending = BTreeMap::new();
            let mut cursor = 0usize;
            for outcome in rx {
                pending.insert(outcome.ordinal, outcome);
                while let Some(outcome) = pending.remove(&cursor) {
                    cursor += 1;
                    summary.walks_sampled += outcome.walks_sampled;
                    summary.walks_skipped += outcome.skipped.len();
                    match outcome.dialogue {
                        Ok(d) => {
                            write_dialogue(&mut *out, &d)?;
                            summary.written += 1;
                        }
                        Err(e) => {
                            tracing::warn!(ordinal = outcome.ordinal, error = %e, "dialogue failed");
                            summary.failed += 1;
                        }
                    }
                    if summary.written > 0 && summary.written.is_multiple_of(100) {
                        tracing::info!(written = summary.written, "progress");
                    }
                }
            }
            Ok(())
        })?;

        out.flush()?;
        Ok(summary)
    }
}
