//! Ontology triplets, their mapping onto DSL constructs, and the four
//! mapping-quality metrics.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::artifact::DslArtifact;
use crate::error::{Error, Result};
use crate::literal;
use crate::semantic::canonical_category;
use crate::similarity::SimilarityProvider;

pub const DEFAULT_MAPPING_THRESHOLD: f64 = 0.7;

const BUNDLED_RELATIONS: &str = include_str!("../data/relations.txt");

#[derive(Debug, thiserror::Error)]
pub enum OntologyError {
    #[error("invalid relation dictionary: {0}")]
    Dictionary(String),
    #[error("{} rejected triplet(s): {}", .0.len(), .0.join("; "))]
    Rejected(Vec<String>),
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("mapping references unknown {side} `{name}`")]
    UnknownMember { side: &'static str, name: String },
}

/// Relation name to admissible (head types, tail types).
#[derive(Debug, Clone, PartialEq)]
pub struct RelationDictionary {
    relations: BTreeMap<String, (Vec<String>, Vec<String>)>,
}

impl Default for RelationDictionary {
    fn default() -> Self {
        RelationDictionary::parse(BUNDLED_RELATIONS).expect("bundled relation dictionary parses")
    }
}

impl RelationDictionary {
    /// Parses `{'relation': ['HeadType', 'TailType'], ...}`; a type may list
    /// alternatives separated by `/`.
    pub fn parse(text: &str) -> Result<Self, OntologyError> {
        let lit = literal::parse(text).map_err(|e| OntologyError::Dictionary(e.to_string()))?;
        let dict = lit.as_dict().ok_or_else(|| OntologyError::Dictionary("expected an object".into()))?;
        let mut relations = BTreeMap::new();
        for (k, v) in dict {
            let name = k.as_str().ok_or_else(|| OntologyError::Dictionary("non-string key".into()))?;
            let pair: Vec<&str> = v
                .as_list()
                .map(|l| l.iter().filter_map(literal::Literal::as_str).collect())
                .unwrap_or_default();
            let [head, tail] = pair[..] else {
                return Err(OntologyError::Dictionary(format!("`{name}` needs [head, tail] types")));
            };
            let split = |t: &str| t.split('/').map(canonical_category).collect::<Vec<_>>();
            relations.insert(name.to_string(), (split(head), split(tail)));
        }
        Ok(RelationDictionary { relations })
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn signature(&self, relation: &str) -> Option<(&[String], &[String])> {
        self.relations.get(relation).map(|(h, t)| (h.as_slice(), t.as_slice()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triplet {
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub head_type: String,
    pub tail_type: String,
}

impl Triplet {
    pub fn new(head: &str, relation: &str, tail: &str, head_type: &str, tail_type: &str) -> Self {
        Triplet {
            head: head.into(),
            relation: relation.into(),
            tail: tail.into(),
            head_type: head_type.into(),
            tail_type: tail_type.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Concept {
    pub name: String,
    pub ty: String,
}

impl Concept {
    pub fn id(&self) -> String {
        format!("{}:{}", self.ty, self.name)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OntologyGraph {
    pub concepts: BTreeSet<Concept>,
    pub triplets: BTreeSet<Triplet>,
}

/// Type-checks every triplet against the dictionary and deduplicates.
pub fn build_ontology(
    triplets: impl IntoIterator<Item = Triplet>,
    dict: &RelationDictionary,
) -> Result<OntologyGraph, OntologyError> {
    let mut graph = OntologyGraph::default();
    let mut rejected = Vec::new();
    for mut t in triplets {
        t.head_type = canonical_category(&t.head_type);
        t.tail_type = canonical_category(&t.tail_type);
        match dict.signature(&t.relation) {
            None => rejected.push(format!("({}, '{}', {}): unknown relation", t.head, t.relation, t.tail)),
            Some((h, tl)) if !h.contains(&t.head_type) || !tl.contains(&t.tail_type) => rejected.push(format!(
                "({}, '{}', {}): types ({}, {}) but the relation needs ({}, {})",
                t.head,
                t.relation,
                t.tail,
                t.head_type,
                t.tail_type,
                h.join("/"),
                tl.join("/")
            )),
            Some(_) => {
                graph.concepts.insert(Concept {
                    name: t.head.clone(),
                    ty: t.head_type.clone(),
                });
                graph.concepts.insert(Concept {
                    name: t.tail.clone(),
                    ty: t.tail_type.clone(),
                });
                graph.triplets.insert(t);
            }
        }
    }
    if rejected.is_empty() {
        Ok(graph)
    } else {
        Err(OntologyError::Rejected(rejected))
    }
}

/// Reads line-delimited triplet records; blank lines are skipped.
pub fn load_triplets(path: &Path) -> Result<Vec<Triplet>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_triplets(&text)?)
}

pub fn parse_triplets(text: &str) -> Result<Vec<Triplet>, OntologyError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| OntologyError::Record {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// A DSL construct as seen by the mapping: an active syntactic construct or
/// one (opcode, pattern) registry entry.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Construct {
    pub id: String,
    pub name: String,
}

pub fn constructs_of(artifact: &DslArtifact) -> Vec<Construct> {
    let mut out: Vec<Construct> = artifact
        .active_constraints
        .iter()
        .map(|k| Construct {
            id: format!("syntax:{k}"),
            name: k.name().replace('-', " "),
        })
        .collect();
    for (op, entries) in &artifact.registry.entries {
        for e in entries {
            out.push(Construct {
                id: format!("{op}[{}]", e.pattern.join(",")),
                name: op.clone(),
            });
        }
    }
    out
}

fn normalize(name: &str) -> String {
    name.split(|c: char| c.is_whitespace() || c == '-' || c == '_')
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Pairs (element id, construct id) whose normalized names are equal or
/// whose similarity reaches `threshold`.
pub fn map_elements(
    concepts: &BTreeSet<Concept>,
    constructs: &[Construct],
    sim: &dyn SimilarityProvider,
    threshold: f64,
) -> BTreeSet<(String, String)> {
    let mut m = BTreeSet::new();
    for c in concepts {
        let a = normalize(&c.name);
        for d in constructs {
            let b = normalize(&d.name);
            if a == b || sim.sentence_sim(&a, &b) >= threshold {
                m.insert((c.id(), d.id.clone()));
            }
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingReport {
    pub mapping: BTreeSet<(String, String)>,
    pub soundness: f64,
    pub lucidity: f64,
    pub completeness: f64,
    pub laconicity: f64,
    pub unmapped_elements: Vec<String>,
    pub unmapped_constructs: Vec<String>,
}

fn ratio(n: usize, d: usize, what: &str) -> f64 {
    if d == 0 {
        log::warn!("no {what}; metric defined as 0");
        0.0
    } else {
        n as f64 / d as f64
    }
}

/// Degree-based metrics: soundness and lucidity count elements of degree
/// at least 1 and exactly 1; completeness and laconicity do the same for
/// constructs.
pub fn metrics(
    mapping: &BTreeSet<(String, String)>,
    elements: &[String],
    constructs: &[String],
) -> Result<MappingReport, OntologyError> {
    let mut deg_e: BTreeMap<&str, usize> = elements.iter().map(|e| (e.as_str(), 0)).collect();
    let mut deg_d: BTreeMap<&str, usize> = constructs.iter().map(|d| (d.as_str(), 0)).collect();
    for (e, d) in mapping {
        *deg_e.get_mut(e.as_str()).ok_or_else(|| OntologyError::UnknownMember {
            side: "element",
            name: e.clone(),
        })? += 1;
        *deg_d.get_mut(d.as_str()).ok_or_else(|| OntologyError::UnknownMember {
            side: "construct",
            name: d.clone(),
        })? += 1;
    }
    let count = |m: &BTreeMap<&str, usize>, f: fn(usize) -> bool| m.values().filter(|&&n| f(n)).count();
    Ok(MappingReport {
        mapping: mapping.clone(),
        soundness: ratio(count(&deg_e, |n| n >= 1), deg_e.len(), "ontology elements"),
        lucidity: ratio(count(&deg_e, |n| n == 1), deg_e.len(), "ontology elements"),
        completeness: ratio(count(&deg_d, |n| n >= 1), deg_d.len(), "constructs"),
        laconicity: ratio(count(&deg_d, |n| n == 1), deg_d.len(), "constructs"),
        unmapped_elements: deg_e.iter().filter(|(_, &n)| n == 0).map(|(k, _)| k.to_string()).collect(),
        unmapped_constructs: deg_d.iter().filter(|(_, &n)| n == 0).map(|(k, _)| k.to_string()).collect(),
    })
}

/// Maps an ontology onto an artifact and scores the mapping.
pub fn evaluate(
    graph: &OntologyGraph,
    artifact: &DslArtifact,
    sim: &dyn SimilarityProvider,
    threshold: f64,
) -> MappingReport {
    let constructs = constructs_of(artifact);
    let m = map_elements(&graph.concepts, &constructs, sim, threshold);
    let e: Vec<String> = graph.concepts.iter().map(Concept::id).collect();
    let d: Vec<String> = constructs.into_iter().map(|c| c.id).collect();
    metrics(&m, &e, &d).expect("mapping built from the same sets")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    pub syntactic_jaccard: f64,
    pub semantic_jaccard: f64,
}

pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        1.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

pub fn overlap(a: &DslArtifact, b: &DslArtifact) -> Overlap {
    let sem = |x: &DslArtifact| -> BTreeSet<(String, Vec<String>)> {
        x.registry
            .entries
            .iter()
            .flat_map(|(op, es)| es.iter().map(move |e| (op.clone(), e.pattern.clone())))
            .collect()
    };
    Overlap {
        syntactic_jaccard: jaccard(&a.active_constraints, &b.active_constraints),
        semantic_jaccard: jaccard(&sem(a), &sem(b)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::LexicalSimilarity;

    fn ids(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn worked_example() {
        let m: BTreeSet<_> = [("e1", "d1"), ("e2", "d1"), ("e2", "d2")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let r = metrics(&m, &ids(&["e1", "e2", "e3"]), &ids(&["d1", "d2"])).unwrap();
        assert_eq!(
            (r.soundness, r.lucidity, r.completeness, r.laconicity),
            (2.0 / 3.0, 1.0 / 3.0, 1.0, 0.5)
        );
        assert_eq!(r.unmapped_elements, ["e3"]);
    }

    #[test]
    fn empty_mapping_and_sets() {
        let r = metrics(&BTreeSet::new(), &ids(&["e"]), &ids(&["d"])).unwrap();
        assert_eq!((r.soundness, r.completeness), (0.0, 0.0));
        let r = metrics(&BTreeSet::new(), &[], &[]).unwrap();
        assert_eq!(r.laconicity, 0.0);
        let bad: BTreeSet<_> = [("x".to_string(), "d".to_string())].into();
        assert!(metrics(&bad, &ids(&["e"]), &ids(&["d"])).is_err());
    }

    #[test]
    fn dictionary_type_checks() {
        let dict = RelationDictionary::default();
        assert!(dict.len() >= 30);
        let ok = build_ontology(
            [
                Triplet::new("RNaseT2", "is reagent of", "ADD", "REG", "OpCode"),
                Triplet::new("10min", "is reaction time of", "SPIN", "Time", "OpCode"),
                Triplet::new("10min", "is reaction time of", "SPIN", "Time", "OpCode"),
                Triplet::new("SPIN", "is instruction of", "cold", "OpCode", "COND"),
            ],
            &dict,
        )
        .unwrap();
        assert_eq!(ok.triplets.len(), 3);
        let err = build_ontology([Triplet::new("ADD", "is reagent of", "RNaseT2", "OpCode", "REG")], &dict).unwrap_err();
        assert!(matches!(err, OntologyError::Rejected(v) if v.len() == 1));
        assert!(build_ontology([Triplet::new("a", "is friend of", "b", "REG", "REG")], &dict).is_err());
    }

    #[test]
    fn names_map_by_equality_or_similarity() {
        let concepts: BTreeSet<_> = [("SPIN", "OpCode"), ("centrifuge", "OpCode"), ("knit", "OpCode")]
            .iter()
            .map(|(n, t)| Concept { name: n.to_string(), ty: t.to_string() })
            .collect();
        let constructs = vec![Construct {
            id: "SPIN[Force]".into(),
            name: "SPIN".into(),
        }];
        let m = map_elements(&concepts, &constructs, &LexicalSimilarity::default(), DEFAULT_MAPPING_THRESHOLD);
        let mapped: Vec<_> = m.iter().map(|(e, _)| e.as_str()).collect();
        assert_eq!(mapped, ["OpCode:SPIN", "OpCode:centrifuge"]);
    }

    #[test]
    fn jaccard_edges() {
        let e: BTreeSet<u8> = BTreeSet::new();
        assert_eq!(jaccard(&e, &e), 1.0);
        assert_eq!(jaccard(&[1u8, 2].into(), &[2u8, 3].into()), 1.0 / 3.0);
    }
}
