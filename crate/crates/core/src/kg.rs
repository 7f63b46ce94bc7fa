//! In-memory knowledge graphs and cross-graph alignments.
//!
//! A [`KnowledgeGraph`] interns entity, relation and attribute IRIs into
//! dense per-graph ids and keeps relation triples (entity → entity) and
//! attribute triples (entity → literal) in separate duplicate-free stores.
//! Literals are stored verbatim; only IRIs are normalized (trimmed, NFC).

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_type!(
    /// Dense identifier of an entity, local to one graph.
    EntityId
);
id_type!(RelationId);
id_type!(AttributeId);
id_type!(LiteralId);

/// Trims and NFC-normalizes an IRI, rejecting empty results.
pub fn normalize_iri(iri: &str) -> Result<String> {
    let normalized: String = iri.trim().nfc().collect();
    if normalized.is_empty() {
        return Err(Error::InvalidInput("empty IRI".into()));
    }
    Ok(normalized)
}

/// Bidirectional string ↔ dense id map.
#[derive(Clone, Debug, Default)]
pub struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    pub fn get_or_insert(&mut self, value: &str) -> u32 {
        if let Some(&id) = self.ids.get(value) {
            return id;
        }
        let id = u32::try_from(self.names.len()).expect("interner overflow");
        self.names.push(value.to_owned());
        self.ids.insert(value.to_owned(), id);
        id
    }

    pub fn get(&self, value: &str) -> Option<u32> {
        self.ids.get(value).copied()
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &str)> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, name)| (i as u32, name.as_str()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelTriple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttrTriple {
    pub entity: EntityId,
    pub attribute: AttributeId,
    pub value: LiteralId,
}

/// Cardinalities of the stores of one graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KgStats {
    pub entities: usize,
    pub relations: usize,
    pub attributes: usize,
    pub rel_triples: usize,
    pub attr_triples: usize,
}

#[derive(Clone, Debug, Default)]
pub struct KnowledgeGraph {
    entities: Interner,
    relations: Interner,
    attributes: Interner,
    literals: Interner,
    rel_triples: BTreeSet<RelTriple>,
    attr_triples: BTreeSet<AttrTriple>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns an entity IRI. Idempotent; ids are dense in insertion order.
    pub fn intern(&mut self, iri: &str) -> Result<EntityId> {
        let iri = normalize_iri(iri)?;
        Ok(EntityId(self.entities.get_or_insert(&iri)))
    }

    pub fn entity_id(&self, iri: &str) -> Option<EntityId> {
        let iri = normalize_iri(iri).ok()?;
        self.entities.get(&iri).map(EntityId)
    }

    pub fn entity_iri(&self, id: EntityId) -> Option<&str> {
        self.entities.name(id.0)
    }

    pub fn relation_iri(&self, id: RelationId) -> Option<&str> {
        self.relations.name(id.0)
    }

    pub fn attribute_iri(&self, id: AttributeId) -> Option<&str> {
        self.attributes.name(id.0)
    }

    pub fn literal(&self, id: LiteralId) -> Option<&str> {
        self.literals.name(id.0)
    }

    pub fn contains_entity(&self, id: EntityId) -> bool {
        id.index() < self.entities.len()
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn entity_ids(&self) -> impl Iterator<Item = EntityId> {
        (0..self.entities.len() as u32).map(EntityId)
    }

    pub fn entities(&self) -> &Interner {
        &self.entities
    }

    /// Adds `(head, relation, tail)`, interning all three. Returns `false`
    /// when the triple was already present.
    pub fn add_relation_triple(&mut self, head: &str, relation: &str, tail: &str) -> Result<bool> {
        let head = self.intern(head)?;
        let relation = RelationId(self.relations.get_or_insert(&normalize_iri(relation)?));
        let tail = self.intern(tail)?;
        Ok(self.rel_triples.insert(RelTriple {
            head,
            relation,
            tail,
        }))
    }

    /// Adds `(entity, attribute, value)`. The literal is kept verbatim.
    pub fn add_attribute_triple(&mut self, entity: &str, attribute: &str, value: &str) -> Result<bool> {
        let entity = self.intern(entity)?;
        let attribute = AttributeId(self.attributes.get_or_insert(&normalize_iri(attribute)?));
        let value = LiteralId(self.literals.get_or_insert(value));
        Ok(self.attr_triples.insert(AttrTriple {
            entity,
            attribute,
            value,
        }))
    }

    pub fn rel_triples(&self) -> impl Iterator<Item = &RelTriple> {
        self.rel_triples.iter()
    }

    pub fn attr_triples(&self) -> impl Iterator<Item = &AttrTriple> {
        self.attr_triples.iter()
    }

    /// `(attribute IRI, literal)` pairs of one entity.
    pub fn attributes_of(&self, entity: EntityId) -> impl Iterator<Item = (&str, &str)> {
        let lo = AttrTriple {
            entity,
            attribute: AttributeId(0),
            value: LiteralId(0),
        };
        let hi = AttrTriple {
            entity,
            attribute: AttributeId(u32::MAX),
            value: LiteralId(u32::MAX),
        };
        self.attr_triples.range(lo..=hi).map(move |t| {
            (
                self.attributes.name(t.attribute.0).unwrap_or_default(),
                self.literals.name(t.value.0).unwrap_or_default(),
            )
        })
    }

    /// Relation triples as IRI strings, in store order.
    pub fn rel_triple_strings(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.rel_triples.iter().map(move |t| {
            (
                self.entities.name(t.head.0).unwrap_or_default(),
                self.relations.name(t.relation.0).unwrap_or_default(),
                self.entities.name(t.tail.0).unwrap_or_default(),
            )
        })
    }

    pub fn attr_triple_strings(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.attr_triples.iter().map(move |t| {
            (
                self.entities.name(t.entity.0).unwrap_or_default(),
                self.attributes.name(t.attribute.0).unwrap_or_default(),
                self.literals.name(t.value.0).unwrap_or_default(),
            )
        })
    }

    pub fn stats(&self) -> KgStats {
        KgStats {
            entities: self.entities.len(),
            relations: self.relations.len(),
            attributes: self.attributes.len(),
            rel_triples: self.rel_triples.len(),
            attr_triples: self.attr_triples.len(),
        }
    }

    /// Merges another graph into this one by IRI.
    pub fn extend_from(&mut self, other: &KnowledgeGraph) -> Result<()> {
        for (_, iri) in other.entities.iter() {
            self.intern(iri)?;
        }
        for (h, r, t) in other.rel_triple_strings() {
            self.add_relation_triple(h, r, t)?;
        }
        for (e, a, v) in other.attr_triple_strings() {
            self.add_attribute_triple(e, a, v)?;
        }
        Ok(())
    }
}

/// Which of the two graphs an entity belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KgSide {
    First,
    Second,
}

impl KgSide {
    /// 1 or 2, as used in file formats.
    pub fn index(self) -> u8 {
        match self {
            KgSide::First => 1,
            KgSide::Second => 2,
        }
    }

    pub fn from_index(index: u8) -> Option<Self> {
        match index {
            1 => Some(KgSide::First),
            2 => Some(KgSide::Second),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityRef {
    pub side: KgSide,
    pub id: EntityId,
}

impl EntityRef {
    pub fn first(id: EntityId) -> Self {
        Self {
            side: KgSide::First,
            id,
        }
    }

    pub fn second(id: EntityId) -> Self {
        Self {
            side: KgSide::Second,
            id,
        }
    }
}

impl fmt::Display for EntityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kg{}:{}", self.side.index(), self.id.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignmentRole {
    Gold,
    Train,
    Validation,
    Test,
}

/// A cross-graph pair `(id in first graph, id in second graph)`.
pub type EntityPair = (EntityId, EntityId);

/// Duplicate-free, insertion-ordered set of aligned pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignmentSet {
    role: AlignmentRole,
    pairs: IndexSet<EntityPair>,
}

impl AlignmentSet {
    pub fn new(role: AlignmentRole) -> Self {
        Self {
            role,
            pairs: IndexSet::new(),
        }
    }

    pub fn from_pairs(role: AlignmentRole, pairs: impl IntoIterator<Item = EntityPair>) -> Self {
        Self {
            role,
            pairs: pairs.into_iter().collect(),
        }
    }

    pub fn role(&self) -> AlignmentRole {
        self.role
    }

    pub fn with_role(mut self, role: AlignmentRole) -> Self {
        self.role = role;
        self
    }

    pub fn insert(&mut self, pair: EntityPair) -> bool {
        self.pairs.insert(pair)
    }

    pub fn contains(&self, pair: &EntityPair) -> bool {
        self.pairs.contains(pair)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &EntityPair> + '_ {
        self.pairs.iter()
    }

    pub fn get(&self, index: usize) -> Option<&EntityPair> {
        self.pairs.get_index(index)
    }

    /// Checks that both sides of every pair exist in their graphs.
    pub fn validate(&self, kg1: &KnowledgeGraph, kg2: &KnowledgeGraph) -> Result<()> {
        for &(a, b) in &self.pairs {
            if !kg1.contains_entity(a) {
                return Err(Error::UnknownEntity(EntityRef::first(a).to_string()));
            }
            if !kg2.contains_entity(b) {
                return Err(Error::UnknownEntity(EntityRef::second(b).to_string()));
            }
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a AlignmentSet {
    type Item = &'a EntityPair;
    type IntoIter = indexmap::set::Iter<'a, EntityPair>;

    fn into_iter(self) -> Self::IntoIter {
        self.pairs.iter()
    }
}
