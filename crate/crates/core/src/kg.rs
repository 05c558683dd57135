//! Entity knowledge graph built from factual triplets, and the walk sampler
//! that turns it into ordered topic sequences.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Walks stop growing once they hold this many entities unless configured otherwise.
pub const DEFAULT_MAX_TOPICS: usize = 4;

/// One knowledge-graph edge together with the sentence narrating it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub subject: String,
    pub relation_label: String,
    pub object: String,
    pub relation_sentence: String,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("read failed at line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: std::io::Error,
    },
    #[error("graph is empty after loading ({self_loops} self-loops and {duplicates} duplicates dropped)")]
    Empty { duplicates: usize, self_loops: usize },
}

#[derive(Deserialize)]
struct RawRecord {
    subject: Option<String>,
    relation_label: Option<String>,
    object: Option<String>,
    relation_sentence: Option<String>,
}

fn required(field: &'static str, value: Option<String>, line: usize) -> Result<String, LoadError> {
    match value.map(|v| v.trim().to_string()) {
        Some(v) if !v.is_empty() => Ok(v),
        Some(_) => Err(LoadError::Malformed {
            line,
            message: format!("field `{field}` is empty"),
        }),
        None => Err(LoadError::Malformed {
            line,
            message: format!("missing field `{field}`"),
        }),
    }
}

/// Counters for records discarded while loading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub records: usize,
    pub duplicates: usize,
    pub self_loops: usize,
}

/// Immutable triplet store indexed by subject entity.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    triplets: Vec<Triplet>,
    subject_index: HashMap<String, Vec<usize>>,
    stats: LoadStats,
}

impl KnowledgeGraph {
    /// Reads line-delimited JSON records. Blank lines and lines starting with
    /// `#` are skipped; self-loops and repeated `(subject, label, object)`
    /// keys are dropped and counted.
    pub fn load<R: BufRead>(reader: R) -> Result<Self, LoadError> {
        let mut builder = GraphBuilder::default();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|source| LoadError::Io {
                line: line_no,
                source,
            })?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let raw: RawRecord =
                serde_json::from_str(trimmed).map_err(|e| LoadError::Malformed {
                    line: line_no,
                    message: e.to_string(),
                })?;
            let triplet = Triplet {
                subject: required("subject", raw.subject, line_no)?,
                relation_label: required("relation_label", raw.relation_label, line_no)?,
                object: required("object", raw.object, line_no)?,
                relation_sentence: required("relation_sentence", raw.relation_sentence, line_no)?,
            };
            builder.push(triplet);
        }
        let graph = builder.finish()?;
        if graph.stats.duplicates > 0 || graph.stats.self_loops > 0 {
            tracing::warn!(
                duplicates = graph.stats.duplicates,
                self_loops = graph.stats.self_loops,
                "dropped triplets while loading graph"
            );
        }
        Ok(graph)
    }

    /// Builds a graph from in-memory triplets, applying the same filtering as
    /// [`KnowledgeGraph::load`].
    pub fn from_triplets<I: IntoIterator<Item = Triplet>>(triplets: I) -> Result<Self, LoadError> {
        let mut builder = GraphBuilder::default();
        for t in triplets {
            builder.push(t);
        }
        builder.finish()
    }

    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn load_stats(&self) -> LoadStats {
        self.stats
    }

    /// Triplet indices keyed by subject.
    pub fn subject_index(&self) -> &HashMap<String, Vec<usize>> {
        &self.subject_index
    }

    /// All triplets whose subject is `entity`, in load order.
    pub fn outgoing(&self, entity: &str) -> Vec<&Triplet> {
        self.subject_index
            .get(entity)
            .map(|ids| ids.iter().map(|&i| &self.triplets[i]).collect())
            .unwrap_or_default()
    }

    /// Samples a walk: a uniformly chosen start triplet, then repeated uniform
    /// extension through outgoing triplets whose object is not yet on the
    /// walk, until no candidate remains or `max_topics` entities are reached.
    ///
    /// `max_topics` below 2 is treated as 2.
    pub fn sample_walk<R: Rng + ?Sized>(&self, rng: &mut R, max_topics: usize) -> Walk {
        assert!(!self.triplets.is_empty(), "cannot sample from an empty graph");
        let max_topics = max_topics.max(2);

        let start = &self.triplets[rng.random_range(0..self.triplets.len())];
        let mut entities = vec![start.subject.clone(), start.object.clone()];
        let mut relation_sentences = vec![start.relation_sentence.clone()];
        let mut seen: HashSet<&str> = HashSet::from([start.subject.as_str(), start.object.as_str()]);

        while entities.len() < max_topics {
            let last = entities.last().expect("walk is non-empty");
            let candidates: Vec<&Triplet> = self
                .outgoing(last)
                .into_iter()
                .filter(|t| !seen.contains(t.object.as_str()))
                .collect();
            if candidates.is_empty() {
                break;
            }
            let next = candidates[rng.random_range(0..candidates.len())];
            seen.insert(next.object.as_str());
            entities.push(next.object.clone());
            relation_sentences.push(next.relation_sentence.clone());
        }

        Walk {
            entities,
            relation_sentences,
        }
    }
}

#[derive(Default)]
struct GraphBuilder {
    triplets: Vec<Triplet>,
    subject_index: HashMap<String, Vec<usize>>,
    keys: HashSet<(String, String, String)>,
    stats: LoadStats,
}

impl GraphBuilder {
    fn push(&mut self, t: Triplet) {
        self.stats.records += 1;
        if t.subject == t.object {
            self.stats.self_loops += 1;
            return;
        }
        let key = (t.subject.clone(), t.relation_label.clone(), t.object.clone());
        if !self.keys.insert(key) {
            self.stats.duplicates += 1;
            return;
        }
        self.subject_index
            .entry(t.subject.clone())
            .or_default()
            .push(self.triplets.len());
        self.triplets.push(t);
    }

    fn finish(self) -> Result<KnowledgeGraph, LoadError> {
        if self.triplets.is_empty() {
            return Err(LoadError::Empty {
                duplicates: self.stats.duplicates,
                self_loops: self.stats.self_loops,
            });
        }
        Ok(KnowledgeGraph {
            triplets: self.triplets,
            subject_index: self.subject_index,
            stats: self.stats,
        })
    }
}

/// Alternating entity / relation-sentence path through the graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Walk {
    pub entities: Vec<String>,
    pub relation_sentences: Vec<String>,
}

impl Walk {
    /// Stable short identifier derived from the walk's content.
    pub fn id(&self) -> String {
        let mut hasher = Sha256::new();
        for e in &self.entities {
            hasher.update(e.as_bytes());
            hasher.update([0x1f]);
        }
        hasher.update([0x1e]);
        for r in &self.relation_sentences {
            hasher.update(r.as_bytes());
            hasher.update([0x1f]);
        }
        format!("w-{}", &hex::encode(hasher.finalize())[..12])
    }

    /// Checks the structural invariants against `graph`: matching lengths,
    /// distinct entities, and each hop backed by a triplet with the same
    /// relation sentence.
    pub fn validate(&self, graph: &KnowledgeGraph) -> Result<(), String> {
        if self.entities.is_empty() {
            return Err("walk has no entities".into());
        }
        if self.relation_sentences.len() + 1 != self.entities.len() {
            return Err(format!(
                "{} entities but {} relation sentences",
                self.entities.len(),
                self.relation_sentences.len()
            ));
        }
        let distinct: HashSet<&String> = self.entities.iter().collect();
        if distinct.len() != self.entities.len() {
            return Err("walk revisits an entity".into());
        }
        for (i, pair) in self.entities.windows(2).enumerate() {
            let backed = graph
                .outgoing(&pair[0])
                .iter()
                .any(|t| t.object == pair[1] && t.relation_sentence == self.relation_sentences[i]);
            if !backed {
                return Err(format!("hop {} -> {} has no matching triplet", pair[0], pair[1]));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(s: &str, o: &str) -> Triplet {
        Triplet {
            subject: s.into(),
            relation_label: "knows".into(),
            object: o.into(),
            relation_sentence: format!("{s} knows {o}."),
        }
    }

    #[test]
    fn loads_single_record() {
        let src = r#"{"subject":"A","relation_label":"knows","object":"B","relation_sentence":"A knows B."}"#;
        let g = KnowledgeGraph::load(src.as_bytes()).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.subject_index().get("A"), Some(&vec![0]));
        assert_eq!(g.subject_index().len(), 1);
    }

    #[test]
    fn drops_duplicates_and_self_loops() {
        let rec = r#"{"subject":"A","relation_label":"knows","object":"B","relation_sentence":"A knows B."}"#;
        let g = KnowledgeGraph::load(format!("{rec}\n{rec}\n").as_bytes()).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.load_stats().duplicates, 1);

        let looped = r#"{"subject":"A","relation_label":"is","object":"A","relation_sentence":"A is A."}"#;
        let g = KnowledgeGraph::load(format!("{looped}\n{rec}\n").as_bytes()).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.load_stats().self_loops, 1);
    }

    #[test]
    fn skips_comments_and_blank_lines() {
        let src = "# header\n\n{\"subject\":\"A\",\"relation_label\":\"r\",\"object\":\"B\",\"relation_sentence\":\"A r B.\"}\n";
        assert_eq!(KnowledgeGraph::load(src.as_bytes()).unwrap().len(), 1);
    }

    #[test]
    fn malformed_records_report_line_numbers() {
        let src = "# c\n{\"subject\":\"A\",\"relation_label\":\"r\",\"object\":\"  \",\"relation_sentence\":\"x\"}\n";
        match KnowledgeGraph::load(src.as_bytes()) {
            Err(LoadError::Malformed { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("object"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let src = "{\"subject\":\"A\",\"object\":\"B\",\"relation_sentence\":\"x\"}\n";
        assert!(matches!(
            KnowledgeGraph::load(src.as_bytes()),
            Err(LoadError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            KnowledgeGraph::load("not json".as_bytes()),
            Err(LoadError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn empty_graph_is_an_error() {
        assert!(matches!(
            KnowledgeGraph::load("# nothing\n".as_bytes()),
            Err(LoadError::Empty { .. })
        ));
        let looped = r#"{"subject":"A","relation_label":"is","object":"A","relation_sentence":"A is A."}"#;
        assert!(matches!(
            KnowledgeGraph::load(looped.as_bytes()),
            Err(LoadError::Empty { self_loops: 1, .. })
        ));
    }

    #[test]
    fn outgoing_lookup() {
        let g = KnowledgeGraph::from_triplets([t("A", "B"), t("A", "C"), t("B", "D")]).unwrap();
        let objs: Vec<&str> = g.outgoing("A").iter().map(|t| t.object.as_str()).collect();
        assert_eq!(objs, ["B", "C"]);
        assert!(g.outgoing("D").is_empty());
        assert!(g.outgoing("unknown").is_empty());
    }

    #[test]
    fn single_triplet_walk() {
        let g = KnowledgeGraph::from_triplets([t("A", "B")]).unwrap();
        for seed in 0..20 {
            let w = g.sample_walk(&mut ChaCha8Rng::seed_from_u64(seed), 4);
            assert_eq!(w.entities, ["A", "B"]);
            assert_eq!(w.relation_sentences, ["A knows B."]);
        }
    }

    #[test]
    fn cap_stops_extension() {
        let g = KnowledgeGraph::from_triplets([t("A", "B"), t("B", "C")]).unwrap();
        for seed in 0..50 {
            let w = g.sample_walk(&mut ChaCha8Rng::seed_from_u64(seed), 2);
            assert_eq!(w.entities.len(), 2);
        }
    }

    #[test]
    fn cycle_is_cut_at_revisit() {
        // Every start yields the full rotation of the cycle minus the revisit.
        let g = KnowledgeGraph::from_triplets([t("A", "B"), t("B", "C"), t("C", "A")]).unwrap();
        let allowed: [[&str; 3]; 3] = [["A", "B", "C"], ["B", "C", "A"], ["C", "A", "B"]];
        let mut seen = HashSet::new();
        for seed in 0..200 {
            let w = g.sample_walk(&mut ChaCha8Rng::seed_from_u64(seed), 10);
            assert!(allowed.iter().any(|a| w.entities == a), "{:?}", w.entities);
            w.validate(&g).unwrap();
            seen.insert(w.entities.clone());
        }
        assert_eq!(seen.len(), 3);
    }

    #[test]
    fn deterministic_for_seed() {
        let g = KnowledgeGraph::from_triplets([t("A", "B"), t("B", "C"), t("B", "D"), t("D", "E")])
            .unwrap();
        for seed in 0..20 {
            let a = g.sample_walk(&mut ChaCha8Rng::seed_from_u64(seed), 4);
            let b = g.sample_walk(&mut ChaCha8Rng::seed_from_u64(seed), 4);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn start_triplets_are_uniform() {
        let g = KnowledgeGraph::from_triplets([
            t("A", "B"),
            t("B", "C"),
            t("C", "D"),
            t("D", "E"),
            t("E", "F"),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts: HashMap<String, usize> = HashMap::new();
        for _ in 0..10_000 {
            let w = g.sample_walk(&mut rng, 2);
            *counts.entry(w.entities[0].clone()).or_default() += 1;
        }
        assert_eq!(counts.len(), 5);
        for (start, n) in counts {
            assert!((1800..=2200).contains(&n), "{start}: {n}");
        }
    }

    #[test]
    fn walk_ids_are_stable_and_distinct() {
        let a = Walk {
            entities: vec!["A".into(), "B".into()],
            relation_sentences: vec!["A knows B.".into()],
        };
        let mut b = a.clone();
        assert_eq!(a.id(), b.id());
        b.entities[1] = "C".into();
        assert_ne!(a.id(), b.id());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn graphs() -> impl Strategy<Value = Vec<(u8, u8)>> {
            prop::collection::vec((0u8..6, 0u8..6), 1..15)
        }

        proptest! {
            #[test]
            fn sampled_walks_satisfy_invariants(edges in graphs(), seed: u64, cap in 2usize..8) {
                let triplets: Vec<Triplet> = edges
                    .iter()
                    .filter(|(s, o)| s != o)
                    .map(|(s, o)| t(&format!("E{s}"), &format!("E{o}")))
                    .collect();
                prop_assume!(!triplets.is_empty());
                let g = KnowledgeGraph::from_triplets(triplets).unwrap();
                let w = g.sample_walk(&mut ChaCha8Rng::seed_from_u64(seed), cap);
                prop_assert!(w.entities.len() >= 2 && w.entities.len() <= cap);
                prop_assert_eq!(w.validate(&g), Ok(()));
                // Only stops early when no unvisited successor remains.
                if w.entities.len() < cap {
                    let last = w.entities.last().unwrap();
                    prop_assert!(g.outgoing(last).iter().all(|t| w.entities.contains(&t.object)));
                }
            }
        }
    }
}
