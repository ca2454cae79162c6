//! Undirected concept graph and edge-counting semantic distance.
//!
//! The distance between two concepts is the number of arcs on the shortest
//! path joining them. It is turned into a similarity with `1 / (1 + d)`, so
//! identical concepts score 1 (an absolute match) and every finite distance
//! above zero gives an approximate match strictly between 0 and 1.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::model::SemanticConcept;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OntologyError {
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("line {line}: {source}")]
    InvalidIri {
        line: usize,
        #[source]
        source: crate::model::InvalidIri,
    },
}

/// Shortest-path length in arcs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Distance {
    Finite(u32),
    Unreachable,
}

impl Distance {
    pub fn finite(self) -> Option<u32> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Unreachable => None,
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Unreachable => f.write_str("unreachable"),
        }
    }
}

impl std::str::FromStr for Distance {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "unreachable" {
            Ok(Distance::Unreachable)
        } else {
            s.parse().map(Distance::Finite)
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Ontology {
    concepts: Vec<SemanticConcept>,
    index: HashMap<SemanticConcept, usize>,
    adjacency: Vec<Vec<usize>>,
    edges: BTreeSet<(usize, usize)>,
}

impl Ontology {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a node and returns its index; existing concepts keep theirs.
    pub fn add_concept(&mut self, c: SemanticConcept) -> usize {
        if let Some(&i) = self.index.get(&c) {
            return i;
        }
        let i = self.concepts.len();
        self.index.insert(c.clone(), i);
        self.concepts.push(c);
        self.adjacency.push(Vec::new());
        i
    }

    /// Adds an undirected edge. Returns `false` for self-edges (rejected) and
    /// duplicates (ignored).
    pub fn add_edge(&mut self, a: SemanticConcept, b: SemanticConcept) -> bool {
        if a == b {
            return false;
        }
        let (i, j) = (self.add_concept(a), self.add_concept(b));
        let key = (i.min(j), i.max(j));
        if !self.edges.insert(key) {
            return false;
        }
        self.adjacency[i].push(j);
        self.adjacency[j].push(i);
        true
    }

    pub fn concept_count(&self) -> usize {
        self.concepts.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, c: &SemanticConcept) -> bool {
        self.index.contains_key(c)
    }

    pub fn concepts(&self) -> &[SemanticConcept] {
        &self.concepts
    }

    /// Edges as concept pairs, each pair ordered and the list sorted.
    pub fn edges(&self) -> Vec<(&SemanticConcept, &SemanticConcept)> {
        let mut out: Vec<_> = self
            .edges
            .iter()
            .map(|&(i, j)| {
                let (a, b) = (&self.concepts[i], &self.concepts[j]);
                if a <= b { (a, b) } else { (b, a) }
            })
            .collect();
        out.sort();
        out
    }

    /// Edge-counting distance. Identical iris are at distance 0 whether or
    /// not the ontology knows them.
    pub fn edge_distance(&self, a: &SemanticConcept, b: &SemanticConcept) -> Distance {
        if a == b {
            return Distance::Finite(0);
        }
        let (Some(&src), Some(&dst)) = (self.index.get(a), self.index.get(b)) else {
            return Distance::Unreachable;
        };
        let mut dist = vec![u32::MAX; self.concepts.len()];
        let mut queue = VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    if v == dst {
                        return Distance::Finite(dist[v]);
                    }
                    queue.push_back(v);
                }
            }
        }
        Distance::Unreachable
    }

    pub fn concept_match(&self, required: &SemanticConcept, provided: &SemanticConcept, tau: u32) -> ConceptMatch {
        let distance = self.edge_distance(required, provided);
        ConceptMatch {
            distance,
            similarity: similarity(distance),
            matched: distance.finite().is_some_and(|d| d <= tau),
        }
    }
}

/// `1 / (1 + d)` for finite distances, 0 when unreachable.
pub fn similarity(d: Distance) -> f64 {
    match d {
        Distance::Finite(d) => 1.0 / (1.0 + f64::from(d)),
        Distance::Unreachable => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConceptMatch {
    pub distance: Distance,
    pub similarity: f64,
    /// Distance is finite and within the relaxation threshold.
    pub matched: bool,
}

pub fn edge_distance(o: &Ontology, a: &SemanticConcept, b: &SemanticConcept) -> Distance {
    o.edge_distance(a, b)
}

pub fn concept_match(o: &Ontology, required: &SemanticConcept, provided: &SemanticConcept, tau: u32) -> ConceptMatch {
    o.concept_match(required, provided, tau)
}

/// Reads an edge list: one `<iri> -- <iri>` per line; blank lines and lines
/// starting with `#` are skipped.
pub fn load_ontology(bytes: &[u8]) -> Result<Ontology, OntologyError> {
    let text = std::str::from_utf8(bytes).map_err(|e| OntologyError::MalformedLine {
        line: 0,
        message: format!("input is not UTF-8: {e}"),
    })?;
    let mut o = Ontology::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let [a, "--", b] = tokens.as_slice() else {
            return Err(OntologyError::MalformedLine {
                line: line_no,
                message: format!("expected `<iri> -- <iri>`, found `{line}`"),
            });
        };
        let parse = |s: &str| {
            SemanticConcept::new(s).map_err(|source| OntologyError::InvalidIri { line: line_no, source })
        };
        let (a, b) = (parse(a)?, parse(b)?);
        if a == b {
            return Err(OntologyError::MalformedLine {
                line: line_no,
                message: format!("self-edge on `{a}`"),
            });
        }
        o.add_edge(a, b);
    }
    Ok(o)
}

/// Writes the edge list in sorted order.
pub fn serialize_ontology(o: &Ontology) -> String {
    let mut out = String::new();
    for (a, b) in o.edges() {
        out.push_str(a.as_str());
        out.push_str(" -- ");
        out.push_str(b.as_str());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(s: &str) -> SemanticConcept {
        SemanticConcept::new(format!("http://ex.org/o#{s}")).unwrap()
    }

    fn chain() -> Ontology {
        load_ontology(b"http://ex.org/o#A -- http://ex.org/o#B\nhttp://ex.org/o#B -- http://ex.org/o#C\n").unwrap()
    }

    #[test]
    fn load_counts_concepts_and_edges() {
        let o = chain();
        assert_eq!(o.concept_count(), 3);
        assert_eq!(o.edge_count(), 2);
    }

    #[test]
    fn duplicate_edges_collapse() {
        let o = load_ontology(
            b"# comment\nhttp://ex.org/o#A -- http://ex.org/o#B\n\nhttp://ex.org/o#B -- http://ex.org/o#A\nhttp://ex.org/o#A -- http://ex.org/o#B\n",
        )
        .unwrap();
        assert_eq!(o.edge_count(), 1);
        assert_eq!(o.concept_count(), 2);
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(
            load_ontology(b"http://ex.org/o#A\n"),
            Err(OntologyError::MalformedLine { line: 1, .. })
        ));
        assert!(matches!(
            load_ontology(b"http://ex.org/o#A - http://ex.org/o#B\n"),
            Err(OntologyError::MalformedLine { .. })
        ));
        assert!(matches!(
            load_ontology(b"http://ex.org/o#A -- http://ex.org/o#A\n"),
            Err(OntologyError::MalformedLine { .. })
        ));
        assert!(matches!(
            load_ontology(b"http://ex.org/o#A -- B\n"),
            Err(OntologyError::InvalidIri { line: 1, .. })
        ));
    }

    #[test]
    fn distances_on_chain() {
        let o = chain();
        assert_eq!(o.edge_distance(&c("A"), &c("C")), Distance::Finite(2));
        assert_eq!(o.edge_distance(&c("C"), &c("C")), Distance::Finite(0));
        assert_eq!(o.edge_distance(&c("Z"), &c("Z")), Distance::Finite(0));
        assert_eq!(o.edge_distance(&c("A"), &c("Z")), Distance::Unreachable);
    }

    #[test]
    fn similarity_values() {
        assert_eq!(similarity(Distance::Finite(0)), 1.0);
        assert_eq!(similarity(Distance::Finite(1)), 0.5);
        assert_eq!(similarity(Distance::Unreachable), 0.0);
    }

    #[test]
    fn concept_match_threshold() {
        let o = load_ontology(
            b"http://ex.org/o#A -- http://ex.org/o#B\nhttp://ex.org/o#B -- http://ex.org/o#C\nhttp://ex.org/o#C -- http://ex.org/o#D\nhttp://ex.org/o#D -- http://ex.org/o#E\n",
        )
        .unwrap();
        let m = o.concept_match(&c("A"), &c("A"), 0);
        assert!(m.matched && m.similarity == 1.0);
        let m = o.concept_match(&c("A"), &c("C"), 3);
        assert!(m.matched);
        assert_eq!(m.similarity, 1.0 / 3.0);
        let m = o.concept_match(&c("A"), &c("E"), 3);
        assert!(!m.matched);
        assert_eq!(m.similarity, 0.2);
    }

    #[test]
    fn serialized_edge_list_reloads() {
        let o = chain();
        let again = load_ontology(serialize_ontology(&o).as_bytes()).unwrap();
        assert_eq!(serialize_ontology(&again), serialize_ontology(&o));
    }

    fn graph_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (2usize..14).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n), 0..30)))
    }

    fn build(n: usize, edges: &[(usize, usize)]) -> Ontology {
        let mut o = Ontology::new();
        for i in 0..n {
            o.add_concept(c(&format!("N{i}")));
        }
        for &(a, b) in edges {
            o.add_edge(c(&format!("N{a}")), c(&format!("N{b}")));
        }
        o
    }

    proptest! {
        #[test]
        fn symmetric_and_triangle((n, edges) in graph_strategy()) {
            let o = build(n, &edges);
            let names: Vec<_> = (0..n).map(|i| c(&format!("N{i}"))).collect();
            for a in &names {
                for b in &names {
                    let ab = o.edge_distance(a, b);
                    prop_assert_eq!(ab, o.edge_distance(b, a));
                    prop_assert_eq!(ab == Distance::Finite(0), a == b);
                    for m in &names {
                        if let (Some(x), Some(y)) = (o.edge_distance(a, m).finite(), o.edge_distance(m, b).finite()) {
                            prop_assert!(ab.finite().unwrap() <= x + y);
                        }
                    }
                }
            }
        }

        #[test]
        fn adding_an_edge_never_increases_distance((n, edges) in graph_strategy(), extra in (0usize..14, 0usize..14)) {
            let before = build(n, &edges);
            let mut after = before.clone();
            after.add_edge(c(&format!("N{}", extra.0 % n)), c(&format!("N{}", extra.1 % n)));
            let names: Vec<_> = (0..n).map(|i| c(&format!("N{i}"))).collect();
            for a in &names {
                for b in &names {
                    prop_assert!(after.edge_distance(a, b) <= before.edge_distance(a, b));
                }
            }
        }

        #[test]
        fn similarity_strictly_decreasing(d in 0u32..10_000) {
            prop_assert!(similarity(Distance::Finite(d)) > similarity(Distance::Finite(d + 1)));
            prop_assert!(similarity(Distance::Finite(d + 1)) > 0.0);
            prop_assert_eq!(similarity(Distance::Finite(d)) == 1.0, d == 0);
        }
    }
}
