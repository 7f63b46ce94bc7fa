use std::collections::BTreeSet;

use crate::error::Result;
use crate::kg::{AlignmentSet, EntityId, EntityRef, KgSide, KnowledgeGraph};

/// Maps every entity of both graphs to its node in the merged graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdMap {
    first: Vec<u32>,
    second: Vec<u32>,
}

impl IdMap {
    pub fn merged_id(&self, entity: EntityRef) -> Option<u32> {
        match entity.side {
            KgSide::First => self.first.get(entity.id.index()).copied(),
            KgSide::Second => self.second.get(entity.id.index()).copied(),
        }
    }

    pub fn len(&self, side: KgSide) -> usize {
        match side {
            KgSide::First => self.first.len(),
            KgSide::Second => self.second.len(),
        }
    }

    /// Original entity ids of one side.
    pub fn entities(&self, side: KgSide) -> impl Iterator<Item = EntityId> {
        (0..self.len(side) as u32).map(EntityId)
    }
}

/// Union of two graphs in which seed-aligned entities share one node.
#[derive(Clone, Debug)]
pub struct MergedGraph {
    pub num_entities: usize,
    pub num_relations: usize,
    /// `(head, relation, tail)` over merged ids; duplicate-free, sorted.
    pub triples: Vec<(u32, u32, u32)>,
    pub id_map: IdMap,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.parent[a.max(b)] = a.min(b);
        }
    }
}

/// Builds the merged graph. Relation ids of the second graph are offset by
/// the relation count of the first so the namespaces stay disjoint.
pub fn merge_graphs(kg1: &KnowledgeGraph, kg2: &KnowledgeGraph, seed: &AlignmentSet) -> Result<MergedGraph> {
    seed.validate(kg1, kg2)?;
    let n1 = kg1.num_entities();
    let n2 = kg2.num_entities();
    let mut uf = UnionFind::new(n1 + n2);
    for &(a, b) in seed {
        uf.union(a.index(), n1 + b.index());
    }

    let mut node_of_root = vec![u32::MAX; n1 + n2];
    let mut merged = Vec::with_capacity(n1 + n2);
    let mut next = 0u32;
    for x in 0..n1 + n2 {
        let root = uf.find(x);
        if node_of_root[root] == u32::MAX {
            node_of_root[root] = next;
            next += 1;
        }
        merged.push(node_of_root[root]);
    }
    let second = merged.split_off(n1);
    let id_map = IdMap { first: merged, second };

    let r1 = kg1.num_relations() as u32;
    let mut triples = BTreeSet::new();
    for t in kg1.rel_triples() {
        triples.insert((id_map.first[t.head.index()], t.relation.0, id_map.first[t.tail.index()]));
    }
    for t in kg2.rel_triples() {
        triples.insert((id_map.second[t.head.index()], r1 + t.relation.0, id_map.second[t.tail.index()]));
    }
    Ok(MergedGraph {
        num_entities: next as usize,
        num_relations: kg1.num_relations() + kg2.num_relations(),
        triples: triples.into_iter().collect(),
        id_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::AlignmentRole;

    fn chain(prefix: &str, n: usize) -> KnowledgeGraph {
        let mut kg = KnowledgeGraph::new();
        for i in 0..n - 1 {
            kg.add_relation_triple(&format!("{prefix}{i}"), "next", &format!("{prefix}{}", i + 1))
                .unwrap();
        }
        kg
    }

    #[test]
    fn empty_seed_is_disjoint_union() {
        let (a, b) = (chain("a", 3), chain("b", 4));
        let m = merge_graphs(&a, &b, &AlignmentSet::new(AlignmentRole::Train)).unwrap();
        assert_eq!(m.num_entities, 7);
        assert_eq!(m.num_relations, 2);
        assert_eq!(m.triples.len(), 5);
    }

    #[test]
    fn one_seed_pair_fuses_one_node() {
        let (a, b) = (chain("a", 3), chain("b", 4));
        let seed = AlignmentSet::from_pairs(AlignmentRole::Train, [(EntityId(0), EntityId(0))]);
        let m = merge_graphs(&a, &b, &seed).unwrap();
        assert_eq!(m.num_entities, 6);
        assert_eq!(
            m.id_map.merged_id(EntityRef::first(EntityId(0))),
            m.id_map.merged_id(EntityRef::second(EntityId(0)))
        );
    }

    #[test]
    fn transitive_seeds_collapse_component() {
        let (a, b) = (chain("a", 3), chain("b", 3));
        // a0 ≡ b0 and a1 ≡ b0, so a0, a1 and b0 become one node.
        let seed = AlignmentSet::from_pairs(
            AlignmentRole::Train,
            [(EntityId(0), EntityId(0)), (EntityId(1), EntityId(0))],
        );
        let m = merge_graphs(&a, &b, &seed).unwrap();
        assert_eq!(m.num_entities, 4);
        let ids: BTreeSet<_> = [
            EntityRef::first(EntityId(0)),
            EntityRef::first(EntityId(1)),
            EntityRef::second(EntityId(0)),
        ]
        .iter()
        .map(|&e| m.id_map.merged_id(e).unwrap())
        .collect();
        assert_eq!(ids.len(), 1);
    }

    #[test]
    fn unknown_seed_entity_rejected() {
        let (a, b) = (chain("a", 2), chain("b", 2));
        let seed = AlignmentSet::from_pairs(AlignmentRole::Train, [(EntityId(9), EntityId(0))]);
        assert!(merge_graphs(&a, &b, &seed).is_err());
    }

    #[test]
    fn id_map_recovers_original_entity_sets() {
        let (a, b) = (chain("a", 5), chain("b", 6));
        let seed = AlignmentSet::from_pairs(AlignmentRole::Train, [(EntityId(1), EntityId(2))]);
        let m = merge_graphs(&a, &b, &seed).unwrap();
        assert_eq!(m.id_map.entities(KgSide::First).collect::<Vec<_>>(), a.entity_ids().collect::<Vec<_>>());
        assert_eq!(m.id_map.entities(KgSide::Second).collect::<Vec<_>>(), b.entity_ids().collect::<Vec<_>>());
    }
}
