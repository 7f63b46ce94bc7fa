//! Readers and writers for OpenEA-style dataset directories, plus the
//! conversion of tabular ER benchmarks into shallow knowledge graphs.
//!
//! Directory layout:
//!
//! ```text
//! rel_triples_1  rel_triples_2  attr_triples_1  attr_triples_2  ent_links
//! 721_5fold/{1..5}/{train_links,valid_links,test_links}
//! ```
//!
//! Every file is UTF-8 with one TAB-separated record per line. Attribute
//! values escape TAB, LF, CR and backslash as `\t`, `\n`, `\r` and `\\`.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use crate::dataset::{split_folds, Fold, FOLD_COUNT};
use crate::error::{Error, Result};
use crate::kg::{AlignmentRole, AlignmentSet, KgStats, KnowledgeGraph};

pub const REL_TRIPLES_1: &str = "rel_triples_1";
pub const REL_TRIPLES_2: &str = "rel_triples_2";
pub const ATTR_TRIPLES_1: &str = "attr_triples_1";
pub const ATTR_TRIPLES_2: &str = "attr_triples_2";
pub const ENT_LINKS: &str = "ent_links";
pub const FOLD_DIR: &str = "721_5fold";
pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TripleKind {
    Relation,
    Attribute,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RawTriple {
    pub subject: String,
    pub property: String,
    pub object: String,
}

pub fn escape_literal(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

/// Inverse of [`escape_literal`]. Unknown escape sequences are kept as is.
pub fn unescape_literal(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    let mut chars = value.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.peek() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            _ => {
                out.push('\\');
                continue;
            }
        }
        chars.next();
    }
    out
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    match fs::File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingFile(path.into())),
        Err(e) => Err(Error::io(format!("cannot read {}", path.display()), e)),
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(format!("cannot write {}", path.display()), e))
}

/// Non-empty lines with their 1-based line numbers.
fn lines<'a, R: BufRead + 'a>(reader: R, path: &'a Path) -> impl Iterator<Item = Result<(usize, String)>> + 'a {
    reader.lines().enumerate().filter_map(move |(i, line)| match line {
        Ok(line) => {
            let line = line.strip_suffix('\r').map(str::to_owned).unwrap_or(line);
            if line.trim().is_empty() {
                None
            } else {
                Some(Ok((i + 1, line)))
            }
        }
        Err(e) => Some(Err(Error::io(format!("cannot read {}", path.display()), e))),
    })
}

pub fn parse_triples(reader: impl BufRead, path: &Path, kind: TripleKind) -> Result<Vec<RawTriple>> {
    let mut out = Vec::new();
    for line in lines(reader, path) {
        let (number, line) = line?;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                path,
                number,
                format!("expected 3 TAB-separated fields, found {}", fields.len()),
            ));
        }
        let object = match kind {
            TripleKind::Relation => fields[2].to_owned(),
            TripleKind::Attribute => unescape_literal(fields[2]),
        };
        out.push(RawTriple {
            subject: fields[0].to_owned(),
            property: fields[1].to_owned(),
            object,
        });
    }
    Ok(out)
}

pub fn parse_triple_file(path: &Path, kind: TripleKind) -> Result<Vec<RawTriple>> {
    parse_triples(open(path)?, path, kind)
}

pub fn write_triple_file<'a>(
    path: &Path,
    kind: TripleKind,
    triples: impl IntoIterator<Item = (&'a str, &'a str, &'a str)>,
) -> Result<()> {
    let mut w = create(path)?;
    let err = |e| Error::io(format!("cannot write {}", path.display()), e);
    for (s, p, o) in triples {
        let o = match kind {
            TripleKind::Relation => o.to_owned(),
            TripleKind::Attribute => escape_literal(o),
        };
        writeln!(w, "{s}\t{p}\t{o}").map_err(err)?;
    }
    w.flush().map_err(err)
}

pub fn parse_link_lines(reader: impl BufRead, path: &Path) -> Result<Vec<(String, String)>> {
    let mut seen = IndexSet::new();
    for line in lines(reader, path) {
        let (number, line) = line?;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                path,
                number,
                format!("expected 2 TAB-separated fields, found {}", fields.len()),
            ));
        }
        seen.insert((fields[0].to_owned(), fields[1].to_owned()));
    }
    Ok(seen.into_iter().collect())
}

/// Reads a link file as a deduplicated list of IRI pairs in file order.
pub fn parse_links(path: &Path) -> Result<Vec<(String, String)>> {
    parse_link_lines(open(path)?, path)
}

/// Resolves IRI pairs against two graphs. Every IRI must name an entity.
pub fn resolve_links(
    links: &[(String, String)],
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    role: AlignmentRole,
) -> Result<AlignmentSet> {
    let mut set = AlignmentSet::new(role);
    for (a, b) in links {
        let a = kg1
            .entity_id(a)
            .ok_or_else(|| Error::UnknownEntity(format!("{a} (first graph)")))?;
        let b = kg2
            .entity_id(b)
            .ok_or_else(|| Error::UnknownEntity(format!("{b} (second graph)")))?;
        set.insert((a, b));
    }
    Ok(set)
}

pub fn write_links(path: &Path, links: &AlignmentSet, kg1: &KnowledgeGraph, kg2: &KnowledgeGraph) -> Result<()> {
    let mut w = create(path)?;
    let err = |e| Error::io(format!("cannot write {}", path.display()), e);
    for &(a, b) in links {
        let a = kg1.entity_iri(a).ok_or_else(|| Error::UnknownEntity(a.0.to_string()))?;
        let b = kg2.entity_iri(b).ok_or_else(|| Error::UnknownEntity(b.0.to_string()))?;
        writeln!(w, "{a}\t{b}").map_err(err)?;
    }
    w.flush().map_err(err)
}

/// Builds a graph from relation and attribute triple files.
pub fn load_graph(rel_path: &Path, attr_path: &Path) -> Result<KnowledgeGraph> {
    let mut kg = KnowledgeGraph::new();
    for t in parse_triple_file(rel_path, TripleKind::Relation)? {
        kg.add_relation_triple(&t.subject, &t.property, &t.object)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", rel_path.display())))?;
    }
    for t in parse_triple_file(attr_path, TripleKind::Attribute)? {
        kg.add_attribute_triple(&t.subject, &t.property, &t.object)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", attr_path.display())))?;
    }
    Ok(kg)
}

#[derive(Clone, Debug)]
pub struct DatasetBundle {
    pub kg1: KnowledgeGraph,
    pub kg2: KnowledgeGraph,
    pub gold: AlignmentSet,
    pub folds: Vec<Fold>,
}

/// Graph statistics recorded next to a dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub kg1: KgStats,
    pub kg2: KgStats,
    pub links: usize,
}

impl DatasetBundle {
    pub fn manifest(&self) -> Manifest {
        Manifest {
            kg1: self.kg1.stats(),
            kg2: self.kg2.stats(),
            links: self.gold.len(),
        }
    }
}

fn fold_path(dir: &Path, fold: usize) -> PathBuf {
    dir.join(FOLD_DIR).join((fold + 1).to_string())
}

/// Loads an OpenEA-style directory. Folds are read from `721_5fold/` when
/// present and must partition the gold links; otherwise they are generated
/// from `fold_seed` and written back.
pub fn load_openea_dataset(dir: &Path, fold_seed: u64) -> Result<DatasetBundle> {
    for name in [REL_TRIPLES_1, REL_TRIPLES_2, ATTR_TRIPLES_1, ATTR_TRIPLES_2, ENT_LINKS] {
        let path = dir.join(name);
        if !path.is_file() {
            return Err(Error::MissingFile(path));
        }
    }
    let kg1 = load_graph(&dir.join(REL_TRIPLES_1), &dir.join(ATTR_TRIPLES_1))?;
    let kg2 = load_graph(&dir.join(REL_TRIPLES_2), &dir.join(ATTR_TRIPLES_2))?;
    let gold = resolve_links(&parse_links(&dir.join(ENT_LINKS))?, &kg1, &kg2, AlignmentRole::Gold)?;

    let folds = if dir.join(FOLD_DIR).is_dir() {
        let folds = read_folds(dir, &kg1, &kg2)?;
        for (i, fold) in folds.iter().enumerate() {
            fold.check_partition(&gold)
                .map_err(|e| Error::InvalidInput(format!("fold {}: {e}", i + 1)))?;
        }
        folds
    } else {
        let folds = split_folds(&gold, fold_seed)?;
        write_folds(dir, &folds, &kg1, &kg2)?;
        folds
    };

    Ok(DatasetBundle { kg1, kg2, gold, folds })
}

fn read_folds(dir: &Path, kg1: &KnowledgeGraph, kg2: &KnowledgeGraph) -> Result<Vec<Fold>> {
    (0..FOLD_COUNT)
        .map(|i| {
            let base = fold_path(dir, i);
            let read = |name: &str, role| resolve_links(&parse_links(&base.join(name))?, kg1, kg2, role);
            Ok(Fold {
                train: read("train_links", AlignmentRole::Train)?,
                validation: read("valid_links", AlignmentRole::Validation)?,
                test: read("test_links", AlignmentRole::Test)?,
            })
        })
        .collect()
}

pub fn write_folds(dir: &Path, folds: &[Fold], kg1: &KnowledgeGraph, kg2: &KnowledgeGraph) -> Result<()> {
    for (i, fold) in folds.iter().enumerate() {
        let base = fold_path(dir, i);
        fs::create_dir_all(&base).map_err(|e| Error::io(format!("cannot create {}", base.display()), e))?;
        write_links(&base.join("train_links"), &fold.train, kg1, kg2)?;
        write_links(&base.join("valid_links"), &fold.validation, kg1, kg2)?;
        write_links(&base.join("test_links"), &fold.test, kg1, kg2)?;
    }
    Ok(())
}

/// Writes both graphs, the gold links and a stats manifest. Folds are
/// written only when given.
pub fn write_openea_dataset(
    dir: &Path,
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    gold: &AlignmentSet,
    folds: Option<&[Fold]>,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("cannot create {}", dir.display()), e))?;
    write_triple_file(&dir.join(REL_TRIPLES_1), TripleKind::Relation, kg1.rel_triple_strings())?;
    write_triple_file(&dir.join(REL_TRIPLES_2), TripleKind::Relation, kg2.rel_triple_strings())?;
    write_triple_file(&dir.join(ATTR_TRIPLES_1), TripleKind::Attribute, kg1.attr_triple_strings())?;
    write_triple_file(&dir.join(ATTR_TRIPLES_2), TripleKind::Attribute, kg2.attr_triple_strings())?;
    write_links(&dir.join(ENT_LINKS), gold, kg1, kg2)?;
    let manifest = Manifest {
        kg1: kg1.stats(),
        kg2: kg2.stats(),
        links: gold.len(),
    };
    let path = dir.join(MANIFEST);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .map_err(|e| Error::io(format!("cannot write {}", path.display()), e))?;
    if let Some(folds) = folds {
        write_folds(dir, folds, kg1, kg2)?;
    }
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(format!("cannot read {}", path.display()), e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Attribute added to every converted entity, holding its type label.
pub const TYPE_ATTRIBUTE: &str = "type";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationColumn {
    pub column: String,
    pub target_type: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabularSchema {
    pub id_column: String,
    #[serde(default)]
    pub attribute_columns: Vec<String>,
    #[serde(default)]
    pub relation_columns: Vec<RelationColumn>,
    pub entity_type: String,
}

impl TabularSchema {
    pub fn from_json(text: &str) -> Result<Self> {
        let schema: Self = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entity_type.trim().is_empty() {
            return Err(Error::Config("schema entity_type is empty".into()));
        }
        if self.attribute_columns.contains(&self.id_column)
            || self.relation_columns.iter().any(|r| r.column == self.id_column)
        {
            return Err(Error::Config(format!(
                "id column {:?} must not be listed as attribute or relation column",
                self.id_column
            )));
        }
        Ok(())
    }

    pub fn entity_iri(&self, id: &str) -> String {
        format!("{}/{}", self.entity_type, id.trim())
    }
}

/// A CSV table held in memory.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn from_reader(reader: impl std::io::Read) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = csv.headers()?.iter().map(str::to_owned).collect();
        let rows = csv
            .records()
            .map(|r| r.map(|r| r.iter().map(str::to_owned).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_reader(open(path)?)
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidInput(format!("missing column {name:?}")))
    }
}

/// Converts one table into a graph fragment: one entity per row, one
/// attribute triple per non-empty attribute cell, one relation triple per
/// non-empty relation cell and a type attribute.
pub fn tabular_to_kg(table: &Table, schema: &TabularSchema) -> Result<KnowledgeGraph> {
    schema.validate()?;
    let id_col = table.column(&schema.id_column)?;
    let attr_cols = schema
        .attribute_columns
        .iter()
        .map(|c| Ok((c.as_str(), table.column(c)?)))
        .collect::<Result<Vec<_>>>()?;
    let rel_cols = schema
        .relation_columns
        .iter()
        .map(|r| Ok((r, table.column(&r.column)?)))
        .collect::<Result<Vec<_>>>()?;

    let mut kg = KnowledgeGraph::new();
    let mut seen = HashSet::new();
    for (row_index, row) in table.rows.iter().enumerate() {
        let cell = |i: usize| row.get(i).map(String::as_str).unwrap_or("");
        let id = cell(id_col).trim();
        if id.is_empty() {
            return Err(Error::InvalidInput(format!(
                "row {}: empty id column {:?}",
                row_index + 1,
                schema.id_column
            )));
        }
        if !seen.insert(id.to_owned()) {
            return Err(Error::InvalidInput(format!("duplicate id {id:?} in column {:?}", schema.id_column)));
        }
        let entity = schema.entity_iri(id);
        kg.add_attribute_triple(&entity, TYPE_ATTRIBUTE, &schema.entity_type)?;
        for &(name, col) in &attr_cols {
            let value = cell(col);
            if !value.trim().is_empty() {
                kg.add_attribute_triple(&entity, name, value)?;
            }
        }
        for &(rel, col) in &rel_cols {
            let target = cell(col).trim();
            if !target.is_empty() {
                kg.add_relation_triple(&entity, &rel.column, &format!("{}/{}", rel.target_type, target))?;
            }
        }
    }
    Ok(kg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, kind: TripleKind) -> Result<Vec<RawTriple>> {
        parse_triples(text.as_bytes(), Path::new("mem"), kind)
    }

    #[test]
    fn relation_line() {
        let t = parse("e1\tdirector\te2\n", TripleKind::Relation).unwrap();
        assert_eq!(
            t,
            vec![RawTriple {
                subject: "e1".into(),
                property: "director".into(),
                object: "e2".into()
            }]
        );
    }

    #[test]
    fn attribute_line() {
        let t = parse("e1\tbirthDate\t1979-02-21", TripleKind::Attribute).unwrap();
        assert_eq!(t[0].object, "1979-02-21");
    }

    #[test]
    fn escaped_tab_in_attribute() {
        let t = parse("e1\tdesc\ta\\tb", TripleKind::Attribute).unwrap();
        assert_eq!(t[0].object, "a\tb");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse("e1\tonlytwo", TripleKind::Relation).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = parse("a\tb\tc\n\nx\ty", TripleKind::Attribute).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn links_dedup_and_errors() {
        let p = Path::new("mem");
        assert_eq!(parse_link_lines("a\tb\n".as_bytes(), p).unwrap(), vec![("a".into(), "b".into())]);
        assert_eq!(parse_link_lines("a\tb\na\tb\n".as_bytes(), p).unwrap().len(), 1);
        assert!(matches!(
            parse_link_lines("a\tb\tc".as_bytes(), p),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn unknown_escape_is_kept() {
        assert_eq!(unescape_literal("C:\\x"), "C:\\x");
        assert_eq!(unescape_literal("end\\"), "end\\");
    }

    #[test]
    fn missing_file_is_named() {
        let err = parse_triple_file(Path::new("/nonexistent/rel_triples_1"), TripleKind::Relation).unwrap_err();
        assert!(err.to_string().contains("rel_triples_1"));
    }

    fn schema() -> TabularSchema {
        TabularSchema {
            id_column: "id".into(),
            attribute_columns: vec!["title".into(), "year".into()],
            relation_columns: vec![RelationColumn {
                column: "director".into(),
                target_type: "person".into(),
            }],
            entity_type: "movie".into(),
        }
    }

    #[test]
    fn one_row_two_attributes() {
        let table = Table::from_reader("id,title,year,director\n1,Get Out,2017,\n".as_bytes()).unwrap();
        let kg = tabular_to_kg(&table, &schema()).unwrap();
        let s = kg.stats();
        assert_eq!((s.entities, s.attr_triples, s.rel_triples), (1, 3, 0));
        assert!(kg.entity_id("movie/1").is_some());
    }

    #[test]
    fn empty_table_and_empty_cells() {
        let empty = Table::from_reader("id,title,year,director\n".as_bytes()).unwrap();
        assert_eq!(tabular_to_kg(&empty, &schema()).unwrap().stats(), KgStats::default());
        let table = Table::from_reader("id,title,year,director\n1,,2017,p9\n".as_bytes()).unwrap();
        let kg = tabular_to_kg(&table, &schema()).unwrap();
        let s = kg.stats();
        assert_eq!((s.entities, s.attr_triples, s.rel_triples), (2, 2, 1));
        assert!(kg.entity_id("person/p9").is_some());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let table = Table::from_reader("id,title,year,director\n1,a,,\n1,b,,\n".as_bytes()).unwrap();
        assert!(tabular_to_kg(&table, &schema()).is_err());
    }

    #[test]
    fn missing_id_column_named() {
        let table = Table::from_reader("key,title\n1,a\n".as_bytes()).unwrap();
        let err = tabular_to_kg(&table, &schema()).unwrap_err();
        assert!(err.to_string().contains("\"id\""), "{err}");
    }

    #[test]
    fn schema_rejects_id_in_attributes() {
        let json = r#"{"id_column":"id","attribute_columns":["id"],"entity_type":"x"}"#;
        assert!(TabularSchema::from_json(json).is_err());
    }
}
