//! Non-functional policies in WS-Policy normal form: a policy is a choice
//! among alternatives, each alternative a set of semantically annotated
//! assertions. A provider satisfies a requirement when one of its
//! alternatives covers every assertion of one required alternative.

use std::fmt;

use crate::error::{DocumentError, ParseWarning};
use crate::model::{concept_attr, is_identifier, SemanticConcept};
use crate::ontology::Ontology;
use crate::xml::Element;

/// Default relaxation threshold for assertion concepts.
pub const DEFAULT_ASSERTION_TAU: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assertion {
    pub name: String,
    pub concept: SemanticConcept,
}

impl Assertion {
    pub fn new(name: impl Into<String>, concept: SemanticConcept) -> Self {
        Assertion {
            name: name.into(),
            concept,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AlternativePolicy {
    pub assertions: Vec<Assertion>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Policy {
    pub alternatives: Vec<AlternativePolicy>,
}

impl Policy {
    pub fn new(alternatives: Vec<Vec<Assertion>>) -> Self {
        Policy {
            alternatives: alternatives
                .into_iter()
                .map(|assertions| AlternativePolicy { assertions })
                .collect(),
        }
    }
}

/// Canonical form: assertions sorted by (name, concept), alternatives sorted
/// by their assertion lists, duplicates removed at both levels.
pub fn normalize(p: &Policy) -> Policy {
    let mut alternatives: Vec<AlternativePolicy> = p
        .alternatives
        .iter()
        .map(|alt| {
            let mut assertions = alt.assertions.clone();
            assertions.sort();
            assertions.dedup();
            AlternativePolicy { assertions }
        })
        .collect();
    alternatives.sort();
    alternatives.dedup();
    Policy { alternatives }
}

pub(crate) fn structural_problems(p: &Policy) -> Vec<String> {
    let mut out = Vec::new();
    if p.alternatives.is_empty() {
        out.push("policy has no alternatives".to_string());
    }
    for (i, alt) in p.alternatives.iter().enumerate() {
        if alt.assertions.is_empty() {
            out.push(format!("alternative {i} has no assertions"));
        }
        for a in &alt.assertions {
            if !is_identifier(&a.name) {
                out.push(format!("assertion name `{}` is not an identifier", a.name));
            }
        }
    }
    if normalize(p).alternatives.len() != p.alternatives.len() {
        out.push("policy has duplicate alternatives".to_string());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssertionMatch {
    pub matched: bool,
    pub similarity: f64,
}

pub fn assertion_matches(required: &Assertion, provided: &Assertion, o: &Ontology, tau: u32) -> AssertionMatch {
    let m = o.concept_match(&required.concept, &provided.concept, tau);
    AssertionMatch {
        matched: m.matched,
        similarity: m.similarity,
    }
}

/// Score of `provided` against `required`, or `None` when some required
/// assertion has no distinct matching provided assertion.
///
/// The score is the best mean similarity over injective assignments of
/// required to provided assertions, scaled by `|required| / |provided|`.
pub fn alternative_satisfies(
    required: &AlternativePolicy,
    provided: &AlternativePolicy,
    o: &Ontology,
    tau: u32,
) -> Option<f64> {
    let r = required.assertions.len();
    let p = provided.assertions.len();
    if r == 0 || p == 0 || r > p {
        return None;
    }
    let sims: Vec<Vec<Option<f64>>> = required
        .assertions
        .iter()
        .map(|ra| {
            provided
                .assertions
                .iter()
                .map(|pa| {
                    let m = assertion_matches(ra, pa, o, tau);
                    m.matched.then_some(m.similarity)
                })
                .collect()
        })
        .collect();
    let mut used = vec![false; p];
    let best = best_injection(&sims, 0, 0.0, &mut used)?;
    Some((best / r as f64) * (r as f64 / p as f64))
}

fn best_injection(sims: &[Vec<Option<f64>>], row: usize, acc: f64, used: &mut [bool]) -> Option<f64> {
    if row == sims.len() {
        return Some(acc);
    }
    let mut best: Option<f64> = None;
    for (j, s) in sims[row].iter().enumerate() {
        let Some(s) = *s else { continue };
        if used[j] {
            continue;
        }
        used[j] = true;
        if let Some(v) = best_injection(sims, row + 1, acc + s, used) {
            if best.is_none_or(|b| v > b) {
                best = Some(v);
            }
        }
        used[j] = false;
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyOutcome {
    /// The activity declares no policy (or policy evaluation is disabled).
    NotEvaluated,
    Failed,
    Satisfied(f64),
}

impl PolicyOutcome {
    /// Value entering the total score; `None` when the candidate is rejected.
    pub fn effective_score(self) -> Option<f64> {
        match self {
            PolicyOutcome::NotEvaluated => Some(1.0),
            PolicyOutcome::Failed => None,
            PolicyOutcome::Satisfied(s) => Some(s),
        }
    }
}

impl fmt::Display for PolicyOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyOutcome::NotEvaluated => f.write_str("not-evaluated"),
            PolicyOutcome::Failed => f.write_str("failed"),
            PolicyOutcome::Satisfied(s) => f.write_str(&crate::format_score(*s)),
        }
    }
}

/// Best satisfaction over every (required, provided) alternative pair.
pub fn policy_satisfaction(required: Option<&Policy>, provided: Option<&Policy>, o: &Ontology, tau: u32) -> PolicyOutcome {
    let Some(required) = required else {
        return PolicyOutcome::NotEvaluated;
    };
    let Some(provided) = provided else {
        return PolicyOutcome::Failed;
    };
    let mut best: Option<f64> = None;
    for ra in &required.alternatives {
        for pa in &provided.alternatives {
            if let Some(s) = alternative_satisfies(ra, pa, o, tau) {
                if best.is_none_or(|b| s > b) {
                    best = Some(s);
                }
            }
        }
    }
    best.map_or(PolicyOutcome::Failed, PolicyOutcome::Satisfied)
}

pub(crate) fn from_element(el: &Element, path: &str, warnings: &mut Vec<ParseWarning>) -> Result<Policy, DocumentError> {
    el.expect_attrs(&[], path)?;
    let mut alternatives = Vec::new();
    for (i, alt) in el.children.iter().enumerate() {
        if alt.name != "alternative" {
            return Err(DocumentError::malformed(path, format!("unexpected element <{}>", alt.name)));
        }
        let apath = format!("{path}/alternative[{i}]");
        alt.expect_attrs(&[], &apath)?;
        let mut assertions = Vec::new();
        for a in &alt.children {
            if a.name != "assertion" {
                return Err(DocumentError::malformed(&apath, format!("unexpected element <{}>", a.name)));
            }
            let name = a.require("name", &format!("{apath}/assertion"))?;
            let aspath = format!("{apath}/assertion[{name}]");
            a.expect_attrs(&["name", "concept", "optional"], &aspath)?;
            if a.get("optional").is_some() {
                warnings.push(ParseWarning {
                    path: aspath.clone(),
                    message: "attribute `optional` is ignored".to_string(),
                });
            }
            let concept = concept_attr(a, &aspath)?.ok_or_else(|| {
                DocumentError::missing_annotation(&aspath, "<assertion> needs a `concept` attribute")
            })?;
            assertions.push(Assertion::new(name, concept));
        }
        alternatives.push(AlternativePolicy { assertions });
    }
    Ok(normalize(&Policy { alternatives }))
}

pub(crate) fn to_element(p: &Policy) -> Element {
    let mut el = Element::new("policy");
    for alt in &p.alternatives {
        let mut ae = Element::new("alternative");
        for a in &alt.assertions {
            ae.push(Element::new("assertion").attr("name", &a.name).attr("concept", a.concept.as_str()));
        }
        el.push(ae);
    }
    el
}
