use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{FilterIndex, Interner, KnowledgeGraph, Triple, Vocab};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Valid/test entities are all seen in the training facts.
    Transductive,
    /// Test queries live on a separate graph (`facts.txt`) with its own
    /// entities; only relations are shared.
    Inductive,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transductive" => Ok(Mode::Transductive),
            "inductive" => Ok(Mode::Inductive),
            other => Err(Error::Config(format!(
                "unknown mode {other:?} (expected \"transductive\" or \"inductive\")"
            ))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Transductive => "transductive",
            Mode::Inductive => "inductive",
        })
    }
}

/// A loaded benchmark split.
///
/// Both graphs carry inverse relations. Query triples use base relation ids
/// and entity ids of the graph they are answered on: `train` and `valid`
/// index `train_graph`, `test` indexes `test_graph`. In transductive mode the
/// two graphs are the same.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub mode: Mode,
    pub train_graph: KnowledgeGraph,
    pub test_graph: KnowledgeGraph,
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
}

/// One raw `head \t relation \t tail` record.
pub type RawTriple = (String, String, String);

/// Parses a three-column TSV file. Blank lines are skipped and a trailing
/// `\r` is tolerated; anything else that is not exactly three non-empty
/// tab-separated fields is a parse error carrying the 1-based line number.
pub fn read_tsv(path: &Path) -> Result<Vec<RawTriple>> {
    let text = fs::read_to_string(path)?;
    parse_tsv(path, &text)
}

pub(crate) fn parse_tsv(path: &Path, text: &str) -> Result<Vec<RawTriple>> {
    let mut out = Vec::new();
    for (i, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        if fields.len() != 3 {
            return Err(err(format!(
                "expected 3 tab-separated fields, found {}",
                fields.len()
            )));
        }
        if fields.iter().any(|f| f.is_empty()) {
            return Err(err("empty field".into()));
        }
        out.push((fields[0].to_string(), fields[1].to_string(), fields[2].to_string()));
    }
    Ok(out)
}

fn intern_all(vocab: &mut Vocab, raw: &[RawTriple]) -> Vec<Triple> {
    raw.iter()
        .map(|(h, r, t)| {
            let h = vocab.entities.intern(h.as_str());
            let r = vocab.relations.intern(r.as_str());
            let t = vocab.entities.intern(t.as_str());
            Triple::new(h, r, t)
        })
        .collect()
}

fn lookup_all(vocab: &Vocab, raw: &[RawTriple], file: &Path) -> Result<Vec<Triple>> {
    raw.iter()
        .map(|(h, r, t)| {
            let ent = |name: &str| {
                vocab.entities.id(name).ok_or_else(|| {
                    Error::Data(format!("{}: unknown entity {name:?}", file.display()))
                })
            };
            let rel = vocab.relations.id(r).ok_or_else(|| {
                Error::Data(format!("{}: unknown relation {r:?}", file.display()))
            })?;
            Ok(Triple::new(ent(h)?, rel, ent(t)?))
        })
        .collect()
}

fn dedup(triples: Vec<Triple>) -> Vec<Triple> {
    let mut seen = std::collections::HashSet::new();
    triples.into_iter().filter(|t| seen.insert(*t)).collect()
}

/// Loads `train.txt`, `valid.txt`, `test.txt` (and `facts.txt` in inductive
/// mode) from `dir`.
pub fn load_split(dir: &Path, mode: Mode) -> Result<DatasetSplit> {
    let file = |name: &str| -> PathBuf { dir.join(name) };
    let train_raw = read_tsv(&file("train.txt"))?;
    let valid_raw = read_tsv(&file("valid.txt"))?;
    let test_raw = read_tsv(&file("test.txt"))?;

    let mut vocab = Vocab::default();
    let train = dedup(intern_all(&mut vocab, &train_raw));
    let valid = dedup(lookup_all(&vocab, &valid_raw, &file("valid.txt"))?);
    let train_graph = KnowledgeGraph::new(vocab.clone(), train.iter().copied())?.add_inverse_relations()?;

    let (test_graph, test) = match mode {
        Mode::Transductive => {
            let test = dedup(lookup_all(&vocab, &test_raw, &file("test.txt"))?);
            (train_graph.clone(), test)
        }
        Mode::Inductive => {
            let facts_raw = read_tsv(&file("facts.txt"))?;
            let mut test_vocab = Vocab {
                entities: Interner::new(),
                relations: vocab.relations.clone(),
            };
            for (h, r, t) in &facts_raw {
                if test_vocab.relations.id(r).is_none() {
                    return Err(Error::Data(format!(
                        "{}: relation {r:?} does not occur in the training graph",
                        file("facts.txt").display()
                    )));
                }
                test_vocab.entities.intern(h.as_str());
                test_vocab.entities.intern(t.as_str());
            }
            let facts = dedup(lookup_all(&test_vocab, &facts_raw, &file("facts.txt"))?);
            let test = dedup(lookup_all(&test_vocab, &test_raw, &file("test.txt"))?);
            let g = KnowledgeGraph::new(test_vocab, facts)?.add_inverse_relations()?;
            (g, test)
        }
    };

    Ok(DatasetSplit {
        mode,
        train_graph,
        test_graph,
        train,
        valid,
        test,
    })
}

fn both_directions<'a>(
    graph: &KnowledgeGraph,
    triples: impl IntoIterator<Item = &'a Triple>,
) -> Vec<Triple> {
    triples
        .into_iter()
        .flat_map(|t| [*t, Triple::new(t.tail, graph.inverse_of(t.relation), t.head)])
        .collect()
}

impl DatasetSplit {
    /// Builds a split from in-memory triples over a single graph (transductive).
    pub fn from_parts(
        graph: KnowledgeGraph,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
    ) -> Result<Self> {
        let train_graph = if graph.has_inverses() {
            graph
        } else {
            graph.add_inverse_relations()?
        };
        Ok(Self {
            mode: Mode::Transductive,
            test_graph: train_graph.clone(),
            train_graph,
            train,
            valid,
            test,
        })
    }

    /// Training triples in both directions; used to keep other known answers
    /// out of the negative samples.
    pub fn train_filter(&self) -> FilterIndex {
        FilterIndex::new(&both_directions(&self.train_graph, &self.train))
    }

    /// Known triples used to filter validation rankings, in both directions.
    pub fn valid_filter(&self) -> FilterIndex {
        let g = &self.train_graph;
        FilterIndex::new(&both_directions(g, self.train.iter().chain(&self.valid)))
    }

    /// Known triples used to filter test rankings, in both directions.
    pub fn test_filter(&self) -> FilterIndex {
        match self.mode {
            Mode::Transductive => {
                let g = &self.train_graph;
                FilterIndex::new(&both_directions(
                    g,
                    self.train.iter().chain(&self.valid).chain(&self.test),
                ))
            }
            Mode::Inductive => {
                let g = &self.test_graph;
                let facts: Vec<Triple> = g
                    .triples()
                    .iter()
                    .copied()
                    .chain(both_directions(g, &self.test))
                    .collect();
                FilterIndex::new(&facts)
            }
        }
    }

    /// Entity names present in both graphs (empty for a proper inductive split).
    pub fn shared_entity_names(&self) -> Vec<String> {
        let test = &self.test_graph.vocab().entities;
        self.train_graph
            .vocab()
            .entities
            .names()
            .iter()
            .filter(|n| test.id(n).is_some())
            .cloned()
            .collect()
    }
}
