//! `generate` settings: command-line flags, then `key=value` file, then defaults.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use dialogwalk::pipeline::RunConfig;
use dialogwalk::qgen::GeneratorKind;

/// Keys accepted in a `--config` file; same spelling as the long flags.
pub const KEYS: [&str; 11] = [
    "graph",
    "corpus",
    "remote-base-url",
    "out",
    "n",
    "seed",
    "max-topics",
    "generator",
    "model",
    "concurrency",
    "chat-base-url",
];

/// Parses `key=value` lines. `#` starts a comment line; blank lines are ignored.
pub fn parse_file(text: &str) -> Result<HashMap<String, String>> {
    let mut out = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key=value", idx + 1))?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            bail!("config line {}: unknown key `{key}`", idx + 1);
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

pub fn load_file(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    parse_file(&text).with_context(|| format!("in {}", path.display()))
}

/// Flag values as given on the command line; `None` means "not given".
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub graph: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub remote_base_url: Option<String>,
    pub out: Option<PathBuf>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub max_topics: Option<usize>,
    pub generator: Option<GeneratorKind>,
    pub model: Option<String>,
    pub concurrency: Option<usize>,
    pub chat_base_url: Option<String>,
}

fn from_file<T: FromStr>(file: &HashMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    file.get(key)
        .map(|v| v.parse::<T>().map_err(|e| anyhow!("config key `{key}`: {e}")))
        .transpose()
}

pub fn parse_generator(s: &str) -> Result<GeneratorKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "stub" => Ok(GeneratorKind::Stub),
        "llm" => Ok(GeneratorKind::Llm),
        other => Err(format!("unknown generator `{other}` (expected stub or llm)")),
    }
}

/// Merges flags over file values over defaults. Secrets only come from `env`.
pub fn resolve(
    cli: Overrides,
    file: &HashMap<String, String>,
    env: impl Fn(&str) -> Option<String>,
) -> Result<RunConfig> {
    let defaults = RunConfig::default();
    let generator = match cli.generator {
        Some(g) => g,
        None => match file.get("generator") {
            Some(v) => parse_generator(v).map_err(|e| anyhow!("config key `generator`: {e}"))?,
            None => defaults.generator,
        },
    };

    // A retrieval source given on the command line replaces both file entries.
    let (corpus_path, remote_base_url) = if cli.corpus.is_some() || cli.remote_base_url.is_some() {
        (cli.corpus, cli.remote_base_url)
    } else {
        (from_file(file, "corpus")?, from_file(file, "remote-base-url")?)
    };

    Ok(RunConfig {
        graph_path: cli
            .graph
            .or(from_file(file, "graph")?)
            .ok_or_else(|| anyhow!("missing --graph"))?,
        corpus_path,
        remote_base_url,
        output_path: cli.out.or(from_file(file, "out")?),
        n_dialogues: cli.n.or(from_file(file, "n")?).unwrap_or(defaults.n_dialogues),
        seed: cli.seed.or(from_file(file, "seed")?).unwrap_or(defaults.seed),
        max_topics: cli.max_topics.or(from_file(file, "max-topics")?).unwrap_or(defaults.max_topics),
        generator,
        model_name: cli.model.or(from_file(file, "model")?),
        api_key: env(dialogwalk::qgen::API_KEY_ENV),
        chat_base_url: cli
            .chat_base_url
            .or(env(dialogwalk::qgen::BASE_URL_ENV))
            .or(from_file(file, "chat-base-url")?),
        concurrency: cli.concurrency.or(from_file(file, "concurrency")?).unwrap_or(defaults.concurrency),
    })
}
