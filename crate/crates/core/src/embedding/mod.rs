//! Shared embedding space for the entities of both graphs.
//!
//! Embeddings either come from [`train_transe`] over the merged graph (seed
//! pairs fused into one node) or from an external file:
//!
//! ```text
//! dim=<d>
//! <kg_index>\t<iri>\t<v1> <v2> ... <vd>
//! ```

mod merge;
mod transe;

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use merge::{merge_graphs, IdMap, MergedGraph};
pub use transe::{margin_loss, margin_loss_grad, train_transe, train_transe_observed, MarginGrads, Norm, TransE, TransEConfig, TriplePair};

use crate::error::{Error, Result};
use crate::kg::{AlignmentSet, EntityRef, KgSide, KnowledgeGraph};

/// One vector per entity of each graph, all of length `dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl EmbeddingTable {
    /// `first` and `second` are row-major per-entity vectors of each graph.
    pub fn new(dim: usize, first: Vec<f64>, second: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("embedding dimension must be positive".into()));
        }
        if !first.len().is_multiple_of(dim) || !second.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput("embedding rows do not match the dimension".into()));
        }
        if first.iter().chain(&second).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("embeddings contain non-finite values".into()));
        }
        Ok(Self { dim, first, second })
    }

    /// Pulls vectors of a model trained on a merged graph back to the
    /// original entities; fused entities share one vector.
    pub fn from_merged(model: &TransE, id_map: &IdMap) -> Result<Self> {
        let gather = |side| {
            id_map
                .entities(side)
                .flat_map(|e| {
                    let merged = id_map.merged_id(EntityRef { side, id: e }).expect("entity in map");
                    model.entity(merged).iter().copied()
                })
                .collect::<Vec<_>>()
        };
        Self::new(model.dim, gather(KgSide::First), gather(KgSide::Second))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self, side: KgSide) -> usize {
        match side {
            KgSide::First => self.first.len() / self.dim,
            KgSide::Second => self.second.len() / self.dim,
        }
    }

    pub fn vector(&self, entity: EntityRef) -> Option<&[f64]> {
        let rows = match entity.side {
            KgSide::First => &self.first,
            KgSide::Second => &self.second,
        };
        let start = entity.id.index() * self.dim;
        rows.get(start..start + self.dim)
    }

    fn require(&self, entity: EntityRef) -> Result<&[f64]> {
        self.vector(entity)
            .ok_or_else(|| Error::UnknownEntity(format!("{entity} has no embedding")))
    }

    /// Checks that every entity of both graphs is covered.
    pub fn check_covers(&self, kg1: &KnowledgeGraph, kg2: &KnowledgeGraph) -> Result<()> {
        if self.len(KgSide::First) != kg1.num_entities() || self.len(KgSide::Second) != kg2.num_entities() {
            return Err(Error::InvalidInput(format!(
                "embedding table covers {}+{} entities, graphs have {}+{}",
                self.len(KgSide::First),
                self.len(KgSide::Second),
                kg1.num_entities(),
                kg2.num_entities()
            )));
        }
        Ok(())
    }

    pub fn write(&self, path: &Path, kg1: &KnowledgeGraph, kg2: &KnowledgeGraph) -> Result<()> {
        self.check_covers(kg1, kg2)?;
        let err = |e| Error::io(format!("cannot write {}", path.display()), e);
        let mut w = BufWriter::new(fs::File::create(path).map_err(err)?);
        writeln!(w, "dim={}", self.dim).map_err(err)?;
        let mut line = String::new();
        for (side, kg) in [(KgSide::First, kg1), (KgSide::Second, kg2)] {
            for id in kg.entity_ids() {
                line.clear();
                let iri = kg.entity_iri(id).unwrap_or_default();
                write!(line, "{}\t{}\t", side.index(), iri).unwrap();
                for (i, x) in self.vector(EntityRef { side, id }).unwrap().iter().enumerate() {
                    if i > 0 {
                        line.push(' ');
                    }
                    write!(line, "{x}").unwrap();
                }
                writeln!(w, "{line}").map_err(err)?;
            }
        }
        w.flush().map_err(err)
    }
}

/// Reads an embedding file and keys it to the entities of both graphs.
/// Every entity must be covered exactly once.
pub fn load_embeddings(path: &Path, kg1: &KnowledgeGraph, kg2: &KnowledgeGraph) -> Result<EmbeddingTable> {
    let file = fs::File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path.into())
        } else {
            Error::io(format!("cannot read {}", path.display()), e)
        }
    })?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let read_err = |e| Error::io(format!("cannot read {}", path.display()), e);

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing dim header"))?;
    let header = header.map_err(read_err)?;
    let dim: usize = header
        .trim()
        .strip_prefix("dim=")
        .and_then(|d| d.parse().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| Error::parse(path, 1, format!("expected header dim=<d>, found {header:?}")))?;

    let mut first = vec![f64::NAN; kg1.num_entities() * dim];
    let mut second = vec![f64::NAN; kg2.num_entities() * dim];
    let mut seen = [vec![false; kg1.num_entities()], vec![false; kg2.num_entities()]];
    let mut unknown = Vec::new();
    for (i, line) in lines {
        let number = i + 1;
        let line = line.map_err(read_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(3, '\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(path, number, "expected <kg_index>\\t<iri>\\t<vector>"));
        }
        let side = fields[0]
            .trim()
            .parse()
            .ok()
            .and_then(KgSide::from_index)
            .ok_or_else(|| Error::parse(path, number, format!("invalid kg index {:?}", fields[0])))?;
        let values = fields[2]
            .split_whitespace()
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::parse(path, number, "vector entries must be finite decimals"))?;
        if values.len() != dim {
            return Err(Error::parse(
                path,
                number,
                format!("expected {dim} values, found {}", values.len()),
            ));
        }
        let (kg, rows, seen) = match side {
            KgSide::First => (kg1, &mut first, &mut seen[0]),
            KgSide::Second => (kg2, &mut second, &mut seen[1]),
        };
        let Some(id) = kg.entity_id(fields[1]) else {
            unknown.push(format!("{}:{}", side.index(), fields[1]));
            continue;
        };
        if std::mem::replace(&mut seen[id.index()], true) {
            return Err(Error::parse(path, number, format!("duplicate entry for {}", fields[1])));
        }
        rows[id.index() * dim..(id.index() + 1) * dim].copy_from_slice(&values);
    }
    if !unknown.is_empty() {
        return Err(Error::UnknownEntity(format!(
            "embedding file lists entities absent from the graphs: {}",
            unknown.join(", ")
        )));
    }
    let missing: Vec<String> = [(KgSide::First, kg1), (KgSide::Second, kg2)]
        .iter()
        .flat_map(|&(side, kg)| {
            let seen = &seen[usize::from(side.index() - 1)];
            kg.entity_ids()
                .filter(|id| !seen[id.index()])
                .map(move |id| format!("{}:{}", side.index(), kg.entity_iri(id).unwrap_or_default()))
        })
        .collect();
    if !missing.is_empty() {
        return Err(Error::InvalidInput(format!("missing embeddings for: {}", missing.join(", "))));
    }
    EmbeddingTable::new(dim, first, second)
}

/// How two entity vectors are combined into pair features.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairMode {
    #[default]
    Concat,
    Diff,
    Hadamard,
}

impl PairMode {
    pub fn feature_len(self, dim: usize) -> usize {
        match self {
            PairMode::Concat => 2 * dim,
            PairMode::Diff | PairMode::Hadamard => dim,
        }
    }
}

/// Appends the pair features of `(e1, e2)` to `out`.
pub fn pair_embedding_features_into(
    table: &EmbeddingTable,
    e1: EntityRef,
    e2: EntityRef,
    mode: PairMode,
    out: &mut Vec<f64>,
) -> Result<()> {
    let a = table.require(e1)?;
    let b = table.require(e2)?;
    match mode {
        PairMode::Concat => {
            out.extend_from_slice(a);
            out.extend_from_slice(b);
        }
        PairMode::Diff => out.extend(a.iter().zip(b).map(|(x, y)| x - y)),
        PairMode::Hadamard => out.extend(a.iter().zip(b).map(|(x, y)| x * y)),
    }
    Ok(())
}

pub fn pair_embedding_features(table: &EmbeddingTable, e1: EntityRef, e2: EntityRef, mode: PairMode) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(mode.feature_len(table.dim));
    pair_embedding_features_into(table, e1, e2, mode, &mut out)?;
    Ok(out)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Fraction of aligned pairs whose second-graph entity is among the `k`
/// nearest second-graph entities of the first-graph entity (exhaustive
/// Euclidean search). Candidates at exactly the gold distance do not push
/// the gold entity down.
pub fn nn_hits(table: &EmbeddingTable, eval: &AlignmentSet, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if eval.is_empty() {
        return Err(Error::InvalidInput("evaluation set is empty".into()));
    }
    let candidates = table.len(KgSide::Second);
    let pairs: Vec<_> = eval.iter().copied().collect();
    let hits = pairs
        .par_iter()
        .map(|&(a, b)| -> Result<usize> {
            let query = table.require(EntityRef::first(a))?;
            let gold = euclidean(query, table.require(EntityRef::second(b))?);
            let closer = (0..candidates)
                .filter(|&c| {
                    let v = &table.second[c * table.dim..(c + 1) * table.dim];
                    euclidean(query, v) < gold
                })
                .count();
            Ok(usize::from(closer < k))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(hits as f64 / eval.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{AlignmentRole, EntityId};

    fn table() -> EmbeddingTable {
        EmbeddingTable::new(2, vec![1.0, 0.0, 2.0, 3.0], vec![0.0, 1.0, 4.0, 5.0]).unwrap()
    }

    #[test]
    fn pair_modes() {
        let t = table();
        let (a, b) = (EntityRef::first(EntityId(0)), EntityRef::second(EntityId(0)));
        assert_eq!(pair_embedding_features(&t, a, b, PairMode::Concat).unwrap(), vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(pair_embedding_features(&t, a, a, PairMode::Diff).unwrap(), vec![0.0, 0.0]);
        let (c, d) = (EntityRef::first(EntityId(1)), EntityRef::second(EntityId(1)));
        assert_eq!(pair_embedding_features(&t, c, d, PairMode::Hadamard).unwrap(), vec![8.0, 15.0]);
        assert!(pair_embedding_features(&t, EntityRef::first(EntityId(9)), d, PairMode::Diff).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(EmbeddingTable::new(1, vec![f64::NAN], vec![]).is_err());
    }

    #[test]
    fn hits_identical_vectors() {
        let t = EmbeddingTable::new(1, vec![0.0, 5.0, 10.0], vec![10.0, 0.0, 5.0]).unwrap();
        let eval = AlignmentSet::from_pairs(
            AlignmentRole::Test,
            [(EntityId(0), EntityId(1)), (EntityId(1), EntityId(2)), (EntityId(2), EntityId(0))],
        );
        assert_eq!(nn_hits(&t, &eval, 1).unwrap(), 1.0);
        let swapped = AlignmentSet::from_pairs(AlignmentRole::Test, [(EntityId(0), EntityId(0))]);
        assert_eq!(nn_hits(&t, &swapped, 1).unwrap(), 0.0);
        assert_eq!(nn_hits(&t, &swapped, 3).unwrap(), 1.0);
        assert!(nn_hits(&t, &AlignmentSet::new(AlignmentRole::Test), 1).is_err());
        assert!(nn_hits(&t, &swapped, 0).is_err());
    }
}
