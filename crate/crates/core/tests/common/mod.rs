//! Shared fixtures, random generators and independent reference oracles.
#![allow(dead_code)]

use std::collections::VecDeque;
use std::path::{Path, PathBuf};

use procbind::model::{
    Activity, BehaviorNode, Binding, Direction, Parameter, ProcessDocument, ProcessKind, SemanticConcept, TypeTable,
};
use procbind::ontology::Ontology;
use procbind::policy::{normalize, Assertion, Policy};
use procbind::registry::{OperationDescription, ServiceDescription};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn silver_process() -> PathBuf {
    fixture("silver/process.xml")
}

pub fn silver_registry() -> PathBuf {
    fixture("silver/registry")
}

pub fn silver_ontology() -> PathBuf {
    fixture("silver/ontology.txt")
}

pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn cli<S: AsRef<str>>(args: &[S]) -> CliOutput {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("procbind").chain(args.iter().map(AsRef::as_ref));
    let code = procbind::cli::run(argv, &mut out, &mut err);
    CliOutput {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed)
}

pub fn concept(i: usize) -> SemanticConcept {
    SemanticConcept::new(format!("http://ex.org/r#C{i}")).unwrap()
}

// ---------------------------------------------------------------------------
// Graphs
// ---------------------------------------------------------------------------

pub struct Graph {
    pub nodes: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn random(rng: &mut ChaCha8Rng, max_nodes: usize, max_edges: usize) -> Graph {
        let nodes = rng.gen_range(1..=max_nodes);
        let wanted = rng.gen_range(0..=max_edges);
        let mut edges = Vec::new();
        for _ in 0..wanted {
            let a = rng.gen_range(0..nodes);
            let b = rng.gen_range(0..nodes);
            if a != b {
                edges.push((a, b));
            }
        }
        Graph { nodes, edges }
    }

    pub fn ontology(&self) -> Ontology {
        let mut o = Ontology::new();
        for i in 0..self.nodes {
            o.add_concept(concept(i));
        }
        for &(a, b) in &self.edges {
            o.add_edge(concept(a), concept(b));
        }
        o
    }

    fn adjacency(&self) -> Vec<Vec<bool>> {
        let mut m = vec![vec![false; self.nodes]; self.nodes];
        for &(a, b) in &self.edges {
            m[a][b] = true;
            m[b][a] = true;
        }
        m
    }

    /// All-pairs hop counts by a breadth-first search per source over an
    /// adjacency matrix.
    pub fn bfs_oracle(&self) -> Vec<Vec<Option<u32>>> {
        let adj = self.adjacency();
        (0..self.nodes)
            .map(|s| {
                let mut dist = vec![None; self.nodes];
                dist[s] = Some(0);
                let mut q = VecDeque::from([s]);
                while let Some(u) = q.pop_front() {
                    for v in 0..self.nodes {
                        if adj[u][v] && dist[v].is_none() {
                            dist[v] = Some(dist[u].unwrap() + 1);
                            q.push_back(v);
                        }
                    }
                }
                dist
            })
            .collect()
    }

    pub fn floyd_warshall(&self) -> Vec<Vec<Option<u32>>> {
        let n = self.nodes;
        let adj = self.adjacency();
        let mut d: Vec<Vec<Option<u32>>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { Some(0) } else if adj[i][j] { Some(1) } else { None }).collect())
            .collect();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                        if d[i][j].is_none_or(|c| a + b < c) {
                            d[i][j] = Some(a + b);
                        }
                    }
                }
            }
        }
        d
    }
}

// ---------------------------------------------------------------------------
// Assignment and policy oracles
// ---------------------------------------------------------------------------

/// Enumerates every function from `r` rows to `p` columns with a base-`p`
/// counter, keeps the injective ones whose pairs are all feasible, and
/// returns the largest similarity sum. Sums run in row order.
pub fn best_injection_sum(r: usize, p: usize, weight: &dyn Fn(usize, usize) -> Option<f64>, onto: bool) -> Option<f64> {
    if r == 0 {
        return (!onto || p == 0).then_some(0.0);
    }
    if p == 0 {
        return None;
    }
    let total = p.pow(r as u32);
    let mut best: Option<f64> = None;
    for code in 0..total {
        let mut digits = Vec::with_capacity(r);
        let mut c = code;
        for _ in 0..r {
            digits.push(c % p);
            c /= p;
        }
        let mut seen = vec![false; p];
        if digits.iter().any(|&d| std::mem::replace(&mut seen[d], true)) {
            continue;
        }
        if onto && seen.iter().any(|s| !s) {
            continue;
        }
        let mut sum = 0.0;
        let mut ok = true;
        for (i, &j) in digits.iter().enumerate() {
            match weight(i, j) {
                Some(s) => sum += s,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && best.is_none_or(|b| sum > b) {
            best = Some(sum);
        }
    }
    best
}

pub fn oracle_similarity(d: Option<u32>) -> f64 {
    match d {
        Some(d) => 1.0 / (1.0 + d as f64),
        None => 0.0,
    }
}

/// Index of a generated concept iri (`...#C<i>`).
pub fn concept_index(c: &SemanticConcept) -> usize {
    c.as_str().rsplit("#C").next().unwrap().parse().unwrap()
}

/// Policy outcome by exhaustive enumeration: `None` for not evaluated,
/// `Some(None)` for failed, `Some(Some(score))` otherwise.
pub fn policy_oracle(
    required: Option<&Policy>,
    provided: Option<&Policy>,
    dist: &[Vec<Option<u32>>],
    tau: u32,
) -> Option<Option<f64>> {
    let required = required?;
    let Some(provided) = provided else {
        return Some(None);
    };
    let mut best: Option<f64> = None;
    for ra in &required.alternatives {
        for pa in &provided.alternatives {
            let (r, p) = (ra.assertions.len(), pa.assertions.len());
            let w = |i: usize, j: usize| {
                let d = dist[concept_index(&ra.assertions[i].concept)][concept_index(&pa.assertions[j].concept)];
                d.filter(|d| *d <= tau).map(|d| oracle_similarity(Some(d)))
            };
            if r == 0 || p == 0 {
                continue;
            }
            if let Some(sum) = best_injection_sum(r, p, &w, false) {
                let score = (sum / r as f64) * (r as f64 / p as f64);
                if best.is_none_or(|b| score > b) {
                    best = Some(score);
                }
            }
        }
    }
    Some(best)
}

pub fn random_policy(rng: &mut ChaCha8Rng, concepts: usize, max_alts: usize, max_assertions: usize) -> Policy {
    let alts = rng.gen_range(1..=max_alts);
    let raw = (0..alts)
        .map(|_| {
            let n = rng.gen_range(1..=max_assertions);
            (0..n)
                .map(|_| {
                    let c = rng.gen_range(0..concepts);
                    Assertion::new(format!("A{}", rng.gen_range(0..3)), concept(c))
                })
                .collect()
        })
        .collect();
    normalize(&Policy::new(raw))
}

// ---------------------------------------------------------------------------
// Random matching instances
// ---------------------------------------------------------------------------

const TYPES: [&str; 2] = ["decimal", "string"];

pub fn random_params(rng: &mut ChaCha8Rng, dir: Direction, max: usize, concepts: usize, prefix: &str) -> Vec<Parameter> {
    let n = rng.gen_range(0..=max);
    (0..n)
        .map(|i| Parameter {
            name: format!("{prefix}{i}"),
            direction: dir,
            type_name: TYPES.choose(rng).unwrap().to_string(),
            concept: Some(concept(rng.gen_range(0..concepts))),
        })
        .collect()
}

pub struct Instance {
    pub graph: Graph,
    pub ontology: Ontology,
    pub process: ProcessDocument,
    pub services: Vec<ServiceDescription>,
}

/// A small connected-ish ontology, a process with one or two abstract tasks
/// and a handful of services whose annotations are drawn from the same
/// concepts.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let graph = Graph::random(rng, 12, 20);
    let ontology = graph.ontology();
    let n = graph.nodes;
    let pick = |rng: &mut ChaCha8Rng| concept(rng.gen_range(0..n));

    let mut activities = Vec::new();
    for k in 0..rng.gen_range(1..=2) {
        let mut a = Activity::task(format!("Abs{k}"), Binding::Abstract);
        a.domain = Some(pick(rng));
        a.functionality = Some(pick(rng));
        a.inputs = random_params(rng, Direction::Input, 3, n, "in");
        a.outputs = random_params(rng, Direction::Output, 3, n, "out");
        if rng.gen_bool(0.5) {
            a.policy = Some(random_policy(rng, n, 2, 2));
        }
        activities.push(a);
    }
    let behavior = BehaviorNode::Sequence(activities.iter().map(|a| BehaviorNode::invoke(a.id.clone())).collect());
    let process = ProcessDocument {
        id: "random".into(),
        name: "random".into(),
        kind: ProcessKind::Micro,
        goal: "random instance".into(),
        roles: vec!["R".into()],
        types: TypeTable::default(),
        activities,
        behavior: Some(behavior),
        child_processes: Vec::new(),
    };

    let services = (0..rng.gen_range(1..=5))
        .map(|s| ServiceDescription {
            id: format!("svc{s}"),
            endpoint: format!("urn:svc{s}"),
            wsdl_location: format!("urn:svc{s}?wsdl"),
            interface_name: format!("I{s}"),
            interface_concept: pick(rng),
            operations: (0..rng.gen_range(1..=3))
                .map(|k| OperationDescription {
                    name: format!("op{k}"),
                    functionality: pick(rng),
                    inputs: random_params(rng, Direction::Input, 3, n, "p"),
                    outputs: random_params(rng, Direction::Output, 4, n, "q"),
                })
                .collect(),
            types: TypeTable::default(),
            policy: rng.gen_bool(0.6).then(|| random_policy(rng, n, 2, 3)),
        })
        .collect();
    Instance {
        graph,
        ontology,
        process,
        services,
    }
}
