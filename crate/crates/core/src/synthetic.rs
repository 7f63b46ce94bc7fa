//! Generated benchmark graphs with known alignments.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::ingest::TYPE_ATTRIBUTE;
use crate::kg::{AlignmentRole, AlignmentSet, KnowledgeGraph};

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mi", "ren", "tas", "vel", "dor", "qui", "sha", "bre", "nop", "ul", "zan", "fi", "gro", "hal",
    "jun", "wes", "pra", "cor", "ste", "mab", "ix", "tol",
];
const TYPES: [&str; 4] = ["person", "film", "place", "organisation"];
const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbedConfig {
    pub entities: usize,
    /// Chance that any one character of a copied value is replaced.
    pub typo_probability: f64,
    /// Share of relation triples missing from the second graph.
    pub drop_fraction: f64,
    pub edges_per_entity: usize,
    pub relation_types: usize,
    pub seed: u64,
}

impl Default for PerturbedConfig {
    fn default() -> Self {
        Self {
            entities: 500,
            typo_probability: 0.1,
            drop_fraction: 0.3,
            edges_per_entity: 3,
            relation_types: 6,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticPair {
    pub kg1: KnowledgeGraph,
    pub kg2: KnowledgeGraph,
    pub gold: AlignmentSet,
}

fn word(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(2..=3);
    (0..n).map(|_| *SYLLABLES.choose(rng).expect("syllables")).collect()
}

/// Replaces each character with probability `p` by a different one.
pub fn add_typos(value: &str, p: f64, rng: &mut impl Rng) -> String {
    value
        .chars()
        .map(|c| {
            if c == ' ' || !rng.gen_bool(p) {
                return c;
            }
            loop {
                let r = ALPHABET[rng.gen_range(0..ALPHABET.len())] as char;
                if r != c {
                    return r;
                }
            }
        })
        .collect()
}

/// Two graphs describing the same entities. The second copies every
/// attribute value with character typos (type labels excepted) and keeps
/// only part of the relation triples. Entity IRIs differ between graphs.
pub fn perturbed_pair(cfg: &PerturbedConfig) -> Result<SyntheticPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.entities;
    let mut second_ids: Vec<usize> = (0..n).collect();
    second_ids.shuffle(&mut rng);
    let iri1 = |i: usize| format!("kg1/e{i}");
    let iri2 = |i: usize| format!("kg2/x{}", second_ids[i]);

    let mut kg1 = KnowledgeGraph::new();
    let mut kg2 = KnowledgeGraph::new();
    for i in 0..n {
        let kind = TYPES[rng.gen_range(0..TYPES.len())];
        let name = format!("{} {}", word(&mut rng), word(&mut rng));
        let place = word(&mut rng);
        let year = rng.gen_range(1900..2021).to_string();
        for (attr, value) in [("name", name.as_str()), ("location", place.as_str()), ("year", year.as_str())] {
            kg1.add_attribute_triple(&iri1(i), attr, value)?;
            let noisy = add_typos(value, cfg.typo_probability, &mut rng);
            kg2.add_attribute_triple(&iri2(i), attr, &noisy)?;
        }
        kg1.add_attribute_triple(&iri1(i), TYPE_ATTRIBUTE, kind)?;
        kg2.add_attribute_triple(&iri2(i), TYPE_ATTRIBUTE, kind)?;
    }

    let mut triples = Vec::new();
    for h in 0..n {
        for _ in 0..cfg.edges_per_entity {
            let mut t = rng.gen_range(0..n);
            while t == h && n > 1 {
                t = rng.gen_range(0..n);
            }
            triples.push((h, rng.gen_range(0..cfg.relation_types.max(1)), t));
        }
    }
    for &(h, r, t) in &triples {
        kg1.add_relation_triple(&iri1(h), &format!("kg1/rel{r}"), &iri1(t))?;
    }
    triples.shuffle(&mut rng);
    let keep = triples.len() - (cfg.drop_fraction * triples.len() as f64).round() as usize;
    for &(h, r, t) in &triples[..keep] {
        kg2.add_relation_triple(&iri2(h), &format!("kg2/rel{r}"), &iri2(t))?;
    }

    let gold = AlignmentSet::from_pairs(
        AlignmentRole::Gold,
        (0..n).map(|i| {
            let a = kg1.entity_id(&iri1(i)).expect("interned");
            let b = kg2.entity_id(&iri2(i)).expect("interned");
            (a, b)
        }),
    );
    Ok(SyntheticPair { kg1, kg2, gold })
}

/// Two isomorphic graphs made of directed cycles. Edge `i` of every cycle
/// carries relation `i`, so positions repeat across cycles.
#[derive(Clone, Debug)]
pub struct CycleFixture {
    pub kg1: KnowledgeGraph,
    pub kg2: KnowledgeGraph,
    /// Pairs fused during training.
    pub seed: AlignmentSet,
    /// Aligned pairs kept out of training.
    pub held_out: AlignmentSet,
}

/// In cycle `c`, positions `i` with `(i + c) % hold_every == 1` are held
/// out; all other aligned pairs are seeds. The shift makes every relation
/// join two seed entities in most cycles.
pub fn cycle_fixture(cycles: usize, length: usize, hold_every: usize) -> Result<CycleFixture> {
    let mut kg1 = KnowledgeGraph::new();
    let mut kg2 = KnowledgeGraph::new();
    for c in 0..cycles {
        for i in 0..length {
            let j = (i + 1) % length;
            kg1.add_relation_triple(&format!("a/c{c}n{i}"), &format!("a/r{i}"), &format!("a/c{c}n{j}"))?;
            kg2.add_relation_triple(&format!("b/c{c}n{i}"), &format!("b/r{i}"), &format!("b/c{c}n{j}"))?;
        }
    }
    let mut seed = AlignmentSet::new(AlignmentRole::Train);
    let mut held_out = AlignmentSet::new(AlignmentRole::Test);
    for c in 0..cycles {
        for i in 0..length {
            let a = kg1.entity_id(&format!("a/c{c}n{i}")).expect("interned");
            let b = kg2.entity_id(&format!("b/c{c}n{i}")).expect("interned");
            if hold_every > 0 && (i + c) % hold_every == 1 {
                held_out.insert((a, b));
            } else {
                seed.insert((a, b));
            }
        }
    }
    Ok(CycleFixture {
        kg1,
        kg2,
        seed,
        held_out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturbed_pair_shape() {
        let cfg = PerturbedConfig {
            entities: 50,
            ..Default::default()
        };
        let p = perturbed_pair(&cfg).unwrap();
        assert_eq!(p.kg1.num_entities(), 50);
        assert_eq!(p.kg2.num_entities(), 50);
        assert_eq!(p.gold.len(), 50);
        let r1 = p.kg1.rel_triples().count();
        let r2 = p.kg2.rel_triples().count();
        assert!(r2 < r1);
        p.gold.validate(&p.kg1, &p.kg2).unwrap();
    }

    #[test]
    fn perturbed_pair_is_deterministic() {
        let cfg = PerturbedConfig {
            entities: 20,
            ..Default::default()
        };
        let a = perturbed_pair(&cfg).unwrap();
        let b = perturbed_pair(&cfg).unwrap();
        assert_eq!(a.kg2.attr_triple_strings().collect::<Vec<_>>(), b.kg2.attr_triple_strings().collect::<Vec<_>>());
    }

    #[test]
    fn typo_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let text = "a".repeat(10_000);
        let changed = add_typos(&text, 0.1, &mut rng).chars().filter(|&c| c != 'a').count();
        assert!((800..1200).contains(&changed), "{changed}");
        assert_eq!(add_typos("a b", 1.0, &mut rng).chars().nth(1), Some(' '));
    }

    #[test]
    fn cycle_fixture_split() {
        let f = cycle_fixture(3, 6, 3).unwrap();
        assert_eq!(f.kg1.num_entities(), 18);
        assert_eq!(f.held_out.len(), 6);
        assert_eq!(f.seed.len(), 12);
    }
}
