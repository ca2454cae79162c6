//! XML form of a [`DiscoveryReport`].
//!
//! Scores and similarities are written with six decimals, so a parsed report
//! holds rounded values; serializing it again reproduces the same bytes.

use crate::error::DocumentError;
use crate::format_score;
use crate::matcher::{
    ActivityReport, CandidateMatch, Comparison, DiscoveryReport, MatchTrace, ParamPair, ParameterAssignment,
    RejectReason, Rejection, Stage, StageRecord, Verdict, Weights,
};
use crate::ontology::Distance;
use crate::policy::PolicyOutcome;
use crate::xml::{self, Element};

pub fn serialize_report(r: &DiscoveryReport) -> String {
    let mut root = Element::new("matches")
        .attr("process", &r.process_id)
        .attr("tau", r.tau.to_string())
        .attr("weights", r.weights.to_string())
        .attr("policyWeight", r.policy_weight.to_string())
        .attr("assertionTau", r.assertion_tau.to_string())
        .attr("ignorePolicy", r.ignore_policy.to_string());
    for a in &r.activities {
        let mut el = Element::new("activity").attr("id", &a.activity_id);
        for (i, c) in a.ranked.iter().enumerate() {
            el.push(candidate_element(c, Some(i + 1), None));
        }
        let mut rejected = Element::new("rejected");
        for rej in &a.rejected {
            rejected.push(match &rej.candidate {
                Some(c) => candidate_element(c, None, Some(rej.reason)),
                None => Element::new("candidate")
                    .attr("service", &rej.service_id)
                    .attr("operation", &rej.operation_name)
                    .attr("reason", rej.reason.as_str()),
            });
        }
        el.push(rejected);
        root.push(el);
    }
    xml::to_string(&root)
}

fn candidate_element(c: &CandidateMatch, rank: Option<usize>, reason: Option<RejectReason>) -> Element {
    let mut el = Element::new("candidate")
        .attr("service", &c.service_id)
        .attr("operation", &c.operation_name)
        .attr_opt("reason", reason.map(RejectReason::as_str))
        .attr("interface", &c.interface_name)
        .attr("endpoint", &c.endpoint)
        .attr("wsdl", &c.wsdl_location)
        .attr("functionalScore", format_score(c.functional_score))
        .attr("policyScore", c.policy.to_string())
        .attr_opt("totalScore", c.total_score.map(format_score))
        .attr_opt("rank", rank.map(|r| r.to_string()));
    for s in &c.trace.stages {
        let mut st = Element::new("stage")
            .attr("name", s.stage.as_str())
            .attr("verdict", s.verdict.as_str())
            .attr_opt("similarity", s.similarity.map(format_score))
            .attr_opt("note", s.note.as_deref());
        for cmp in &s.comparisons {
            st.push(
                Element::new("compare")
                    .attr("required", &cmp.required)
                    .attr("provided", &cmp.provided)
                    .attr("distance", cmp.distance.to_string())
                    .attr("similarity", format_score(cmp.similarity)),
            );
        }
        el.push(st);
    }
    for (direction, a) in [("input", &c.inputs), ("output", &c.outputs)] {
        let mut pm = Element::new("paramMap")
            .attr("direction", direction)
            .attr("mean", format_score(a.mean_similarity));
        for p in &a.pairs {
            pm.push(
                Element::new("pair")
                    .attr("required", &p.required)
                    .attr("provided", &p.provided)
                    .attr("distance", p.distance.to_string())
                    .attr("similarity", format_score(p.similarity)),
            );
        }
        el.push(pm);
    }
    el
}

pub fn parse_report(bytes: &[u8]) -> Result<DiscoveryReport, DocumentError> {
    let root = xml::parse(bytes)?;
    let path = "/matches";
    if root.name != "matches" {
        return Err(DocumentError::malformed("/", format!("expected <matches>, found <{}>", root.name)));
    }
    root.expect_attrs(&["process", "tau", "weights", "policyWeight", "assertionTau", "ignorePolicy"], path)?;
    let weights: Weights = root
        .require("weights", path)?
        .parse()
        .map_err(|e| DocumentError::malformed(path, format!("weights: {e}")))?;
    let mut activities = Vec::new();
    for (i, a) in root.children.iter().enumerate() {
        let apath = format!("{path}/activity[{}]", i + 1);
        if a.name != "activity" {
            return Err(DocumentError::malformed(&apath, format!("unexpected <{}>", a.name)));
        }
        a.expect_attrs(&["id"], &apath)?;
        let mut report = ActivityReport {
            activity_id: a.require("id", &apath)?.to_string(),
            ranked: Vec::new(),
            rejected: Vec::new(),
        };
        for (j, c) in a.children.iter().enumerate() {
            let cpath = format!("{apath}/{}[{}]", c.name, j + 1);
            match c.name.as_str() {
                "candidate" if report.rejected.is_empty() => {
                    let (cand, rank, reason) = parse_candidate(c, &cpath)?;
                    if reason.is_some() || cand.total_score.is_none() {
                        return Err(DocumentError::malformed(&cpath, "ranked candidate needs totalScore and no reason"));
                    }
                    if rank != Some(report.ranked.len() + 1) {
                        return Err(DocumentError::malformed(&cpath, "ranks must count up from 1"));
                    }
                    report.ranked.push(cand);
                }
                "rejected" if j + 1 == a.children.len() => {
                    for (k, r) in c.children.iter().enumerate() {
                        let rpath = format!("{cpath}/candidate[{}]", k + 1);
                        report.rejected.push(parse_rejection(r, &rpath)?);
                    }
                }
                _ => return Err(DocumentError::malformed(&cpath, "unexpected element")),
            }
        }
        activities.push(report);
    }
    Ok(DiscoveryReport {
        process_id: root.require("process", path)?.to_string(),
        tau: number(&root, "tau", path)?,
        weights,
        policy_weight: number(&root, "policyWeight", path)?,
        assertion_tau: number(&root, "assertionTau", path)?,
        ignore_policy: number(&root, "ignorePolicy", path)?,
        activities,
    })
}

fn number<T: std::str::FromStr>(el: &Element, key: &str, path: &str) -> Result<T, DocumentError> {
    let v = el.require(key, path)?;
    v.parse()
        .map_err(|_| DocumentError::malformed(path, format!("attribute `{key}` has invalid value `{v}`")))
}

fn optional_number<T: std::str::FromStr>(el: &Element, key: &str, path: &str) -> Result<Option<T>, DocumentError> {
    el.get(key).map(|_| number(el, key, path)).transpose()
}

fn parse_policy_outcome(s: &str, path: &str) -> Result<PolicyOutcome, DocumentError> {
    match s {
        "not-evaluated" => Ok(PolicyOutcome::NotEvaluated),
        "failed" => Ok(PolicyOutcome::Failed),
        _ => s
            .parse()
            .map(PolicyOutcome::Satisfied)
            .map_err(|_| DocumentError::malformed(path, format!("invalid policyScore `{s}`"))),
    }
}

fn parse_reason(el: &Element, path: &str) -> Result<Option<RejectReason>, DocumentError> {
    el.get("reason")
        .map(|r| RejectReason::parse(r).ok_or_else(|| DocumentError::malformed(path, format!("unknown reason `{r}`"))))
        .transpose()
}

fn parse_rejection(el: &Element, path: &str) -> Result<Rejection, DocumentError> {
    if el.name != "candidate" {
        return Err(DocumentError::malformed(path, format!("unexpected <{}>", el.name)));
    }
    let reason = parse_reason(el, path)?.ok_or_else(|| DocumentError::malformed(path, "rejected candidate needs a reason"))?;
    if reason == RejectReason::Arity {
        el.expect_attrs(&["service", "operation", "reason"], path)?;
        return Ok(Rejection {
            service_id: el.require("service", path)?.to_string(),
            operation_name: el.require("operation", path)?.to_string(),
            reason,
            candidate: None,
        });
    }
    let (c, rank, _) = parse_candidate(el, path)?;
    if rank.is_some() || c.total_score.is_some() {
        return Err(DocumentError::malformed(path, "rejected candidate has no rank or totalScore"));
    }
    Ok(Rejection {
        service_id: c.service_id.clone(),
        operation_name: c.operation_name.clone(),
        reason,
        candidate: Some(c),
    })
}

fn parse_candidate(
    el: &Element,
    path: &str,
) -> Result<(CandidateMatch, Option<usize>, Option<RejectReason>), DocumentError> {
    el.expect_attrs(
        &[
            "service",
            "operation",
            "reason",
            "interface",
            "endpoint",
            "wsdl",
            "functionalScore",
            "policyScore",
            "totalScore",
            "rank",
        ],
        path,
    )?;
    let mut stages = Vec::new();
    let mut maps = Vec::new();
    for (i, ch) in el.children.iter().enumerate() {
        let p = format!("{path}/{}[{}]", ch.name, i + 1);
        match ch.name.as_str() {
            "stage" if maps.is_empty() => stages.push(parse_stage(ch, &p)?),
            "paramMap" => maps.push(parse_param_map(ch, &p)?),
            _ => return Err(DocumentError::malformed(&p, "unexpected element")),
        }
    }
    if !stages.iter().map(|s: &StageRecord| s.stage).eq(Stage::ORDER) {
        return Err(DocumentError::malformed(path, "expected the four stages in order"));
    }
    let (inputs, outputs) = match <[(String, ParameterAssignment); 2]>::try_from(maps) {
        Ok([(d1, i), (d2, o)]) if d1 == "input" && d2 == "output" => (i, o),
        _ => return Err(DocumentError::malformed(path, "expected input then output paramMap")),
    };
    let similarity_of = |stage: Stage| stages[stage as usize].similarity.unwrap_or(0.0);
    let candidate = CandidateMatch {
        service_id: el.require("service", path)?.to_string(),
        operation_name: el.require("operation", path)?.to_string(),
        interface_name: el.require("interface", path)?.to_string(),
        endpoint: el.require("endpoint", path)?.to_string(),
        wsdl_location: el.require("wsdl", path)?.to_string(),
        domain_similarity: similarity_of(Stage::Domain),
        functionality_similarity: similarity_of(Stage::Functionality),
        inputs,
        outputs,
        functional_score: number(el, "functionalScore", path)?,
        policy: parse_policy_outcome(el.require("policyScore", path)?, path)?,
        total_score: optional_number(el, "totalScore", path)?,
        trace: MatchTrace { stages },
    };
    Ok((candidate, optional_number(el, "rank", path)?, parse_reason(el, path)?))
}

fn parse_stage(el: &Element, path: &str) -> Result<StageRecord, DocumentError> {
    el.expect_attrs(&["name", "verdict", "similarity", "note"], path)?;
    let name = el.require("name", path)?;
    let verdict = el.require("verdict", path)?;
    let mut comparisons = Vec::new();
    for (i, c) in el.children.iter().enumerate() {
        let p = format!("{path}/compare[{}]", i + 1);
        if c.name != "compare" {
            return Err(DocumentError::malformed(&p, format!("unexpected <{}>", c.name)));
        }
        let (required, provided, distance, similarity) = parse_pair_attrs(c, &p)?;
        comparisons.push(Comparison {
            required,
            provided,
            distance,
            similarity,
        });
    }
    Ok(StageRecord {
        stage: Stage::parse(name).ok_or_else(|| DocumentError::malformed(path, format!("unknown stage `{name}`")))?,
        verdict: Verdict::parse(verdict)
            .ok_or_else(|| DocumentError::malformed(path, format!("unknown verdict `{verdict}`")))?,
        comparisons,
        similarity: optional_number(el, "similarity", path)?,
        note: el.get("note").map(str::to_string),
    })
}

fn parse_param_map(el: &Element, path: &str) -> Result<(String, ParameterAssignment), DocumentError> {
    el.expect_attrs(&["direction", "mean"], path)?;
    let mut pairs = Vec::new();
    for (i, c) in el.children.iter().enumerate() {
        let p = format!("{path}/pair[{}]", i + 1);
        if c.name != "pair" {
            return Err(DocumentError::malformed(&p, format!("unexpected <{}>", c.name)));
        }
        let (required, provided, distance, similarity) = parse_pair_attrs(c, &p)?;
        pairs.push(ParamPair {
            required,
            provided,
            distance,
            similarity,
        });
    }
    Ok((
        el.require("direction", path)?.to_string(),
        ParameterAssignment {
            pairs,
            mean_similarity: number(el, "mean", path)?,
        },
    ))
}

fn parse_pair_attrs(el: &Element, path: &str) -> Result<(String, String, Distance, f64), DocumentError> {
    el.expect_attrs(&["required", "provided", "distance", "similarity"], path)?;
    Ok((
        el.require("required", path)?.to_string(),
        el.require("provided", path)?.to_string(),
        number(el, "distance", path)?,
        number(el, "similarity", path)?,
    ))
}
