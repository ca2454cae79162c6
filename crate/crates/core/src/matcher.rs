//! Hierarchical matching of abstract activities against service descriptions.
//!
//! Matching compares, in this order, the activity's business domain with the
//! service interface, its functionality with each operation, then its inputs
//! and outputs with the operation's parameters. A failing stage stops the
//! comparison for that service (domain) or operation (the other stages), and
//! every decision is recorded in a [`MatchTrace`].
//!
//! Functionally matching candidates are then scored against the activity's
//! policy and ranked by total score.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::format_score;
use crate::model::{Activity, ActivityKind, Direction, Parameter, ProcessDocument, ResolvedType, TypeTable};
use crate::ontology::{Distance, Ontology};
use crate::policy::{self, PolicyOutcome};
use crate::registry::{OperationDescription, ServiceDescription};

/// Largest parameter list handled by the exhaustive assignment search.
pub const MAX_ARITY: usize = 8;
pub const DEFAULT_TAU: u32 = 3;
pub const DEFAULT_POLICY_WEIGHT: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("weights must be four comma-separated numbers, got `{0}`")]
    WeightsFormat(String),
    #[error("weights must be finite and non-negative")]
    NegativeWeight,
    #[error("weights must sum to 1 (sum is {0})")]
    WeightSum(f64),
    #[error("policy weight must lie in [0, 1], got {0}")]
    PolicyWeight(f64),
    #[error("job count must be at least 1")]
    Jobs,
}

/// Stage weights of the functional score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub domain: f64,
    pub functionality: f64,
    pub inputs: f64,
    pub outputs: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            domain: 0.2,
            functionality: 0.4,
            inputs: 0.2,
            outputs: 0.2,
        }
    }
}

impl Weights {
    pub fn new(domain: f64, functionality: f64, inputs: f64, outputs: f64) -> Result<Self, ConfigError> {
        let w = Weights {
            domain,
            functionality,
            inputs,
            outputs,
        };
        let parts = [domain, functionality, inputs, outputs];
        if parts.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(ConfigError::NegativeWeight);
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ConfigError::WeightSum(sum));
        }
        Ok(w)
    }

    /// Weighted mean of the four stage similarities, written as one minus the
    /// weighted shortfall so that four perfect stages give exactly 1.
    pub fn functional_score(&self, domain: f64, functionality: f64, inputs: f64, outputs: f64) -> f64 {
        let shortfall = self.domain * (1.0 - domain)
            + self.functionality * (1.0 - functionality)
            + self.inputs * (1.0 - inputs)
            + self.outputs * (1.0 - outputs);
        (1.0 - shortfall).clamp(0.0, 1.0)
    }
}

impl std::str::FromStr for Weights {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| ConfigError::WeightsFormat(s.to_string()))?;
        match parts.as_slice() {
            [d, f, i, o] => Weights::new(*d, *f, *i, *o),
            _ => Err(ConfigError::WeightsFormat(s.to_string())),
        }
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.domain, self.functionality, self.inputs, self.outputs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    pub tau: u32,
    pub weights: Weights,
    /// Evaluate every stage even after a failure. Used to check that
    /// short-circuiting does not change results.
    pub full_evaluation: bool,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            tau: DEFAULT_TAU,
            weights: Weights::default(),
            full_evaluation: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Domain,
    Functionality,
    Inputs,
    Outputs,
}

impl Stage {
    pub const ORDER: [Stage; 4] = [Stage::Domain, Stage::Functionality, Stage::Inputs, Stage::Outputs];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Domain => "domain",
            Stage::Functionality => "functionality",
            Stage::Inputs => "inputs",
            Stage::Outputs => "outputs",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Stage::ORDER.into_iter().find(|x| x.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Skipped => "skipped",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Verdict::Pass, Verdict::Fail, Verdict::Skipped].into_iter().find(|x| x.as_str() == s)
    }
}

/// One concept comparison inside a stage. For the domain and functionality
/// stages `required`/`provided` are concept iris; for parameter stages they
/// are parameter names.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub required: String,
    pub provided: String,
    pub distance: Distance,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub stage: Stage,
    pub verdict: Verdict,
    pub comparisons: Vec<Comparison>,
    /// Stage similarity (mean similarity for parameter stages).
    pub similarity: Option<f64>,
    pub note: Option<String>,
}

impl StageRecord {
    pub fn evaluated(&self) -> bool {
        self.verdict != Verdict::Skipped
    }

    fn skipped(stage: Stage) -> Self {
        StageRecord {
            stage,
            verdict: Verdict::Skipped,
            comparisons: Vec::new(),
            similarity: None,
            note: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchTrace {
    pub stages: Vec<StageRecord>,
}

impl MatchTrace {
    /// Stages appear once each in matching order, and nothing after a failed
    /// stage was evaluated.
    pub fn is_short_circuit_sound(&self) -> bool {
        let in_order = self.stages.iter().map(|s| s.stage).eq(Stage::ORDER);
        let mut failed = false;
        for s in &self.stages {
            if failed && s.evaluated() {
                return false;
            }
            failed |= s.verdict == Verdict::Fail;
        }
        in_order
    }

    pub fn stage(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.stage == stage)
    }

    pub fn passed(&self) -> bool {
        self.stages.len() == 4 && self.stages.iter().all(|s| s.verdict == Verdict::Pass)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamPair {
    pub required: String,
    pub provided: String,
    pub distance: Distance,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterAssignment {
    pub pairs: Vec<ParamPair>,
    pub mean_similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssignError {
    #[error("{side} parameter list has {len} entries (at most {MAX_ARITY} supported)")]
    ArityTooLarge { side: &'static str, len: usize },
    #[error("no feasible parameter assignment")]
    NoFeasibleAssignment,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("activity `{0}` is not an annotated abstract task")]
    NotAbstractTask(String),
    #[error("activity `{activity}` against {service}.{operation}: {source}")]
    Arity {
        activity: String,
        service: String,
        operation: String,
        #[source]
        source: AssignError,
    },
}

/// Whether a provided type can stand in for a required one: equal primitive
/// kinds, or records where every required field exists on the provided side
/// with a covering type. Extra provided fields are allowed.
pub fn type_covers(required: &str, provided: &str, required_types: &TypeTable, provided_types: &TypeTable) -> bool {
    covers(required, provided, required_types, provided_types, 0)
}

fn covers(required: &str, provided: &str, rt: &TypeTable, pt: &TypeTable, depth: usize) -> bool {
    // Valid tables are acyclic; the bound only protects unvalidated input.
    if depth > 64 {
        return false;
    }
    match (rt.resolve(required), pt.resolve(provided)) {
        (Some(ResolvedType::Primitive(a)), Some(ResolvedType::Primitive(b))) => a == b,
        (Some(ResolvedType::Record(rf)), Some(ResolvedType::Record(pf))) => rf.iter().all(|f| {
            pf.iter()
                .find(|g| g.name == f.name)
                .is_some_and(|g| covers(&f.type_name, &g.type_name, rt, pt, depth + 1))
        }),
        _ => false,
    }
}

/// Finds the injective required→provided assignment with the highest mean
/// concept similarity, among pairs whose concepts match within `tau` and whose
/// types cover. Inputs must additionally use every provided parameter, since
/// the process has to supply all of the service's inputs.
///
/// The search is exhaustive; ties keep the first assignment in
/// lexicographic order of provided indices.
#[allow(clippy::too_many_arguments)]
pub fn assign_parameters(
    required: &[Parameter],
    provided: &[Parameter],
    required_types: &TypeTable,
    provided_types: &TypeTable,
    o: &Ontology,
    tau: u32,
    direction: Direction,
) -> Result<ParameterAssignment, AssignError> {
    if required.len() > MAX_ARITY {
        return Err(AssignError::ArityTooLarge { side: "required", len: required.len() });
    }
    if provided.len() > MAX_ARITY {
        return Err(AssignError::ArityTooLarge { side: "provided", len: provided.len() });
    }
    let feasible_shape = match direction {
        Direction::Input => required.len() == provided.len(),
        Direction::Output => required.len() <= provided.len(),
    };
    if !feasible_shape {
        return Err(AssignError::NoFeasibleAssignment);
    }
    if required.is_empty() {
        return Ok(ParameterAssignment {
            pairs: Vec::new(),
            mean_similarity: 1.0,
        });
    }

    let table: Vec<Vec<Option<(Distance, f64)>>> = required
        .iter()
        .map(|r| {
            provided
                .iter()
                .map(|p| {
                    let (Some(rc), Some(pc)) = (&r.concept, &p.concept) else {
                        return None;
                    };
                    let m = o.concept_match(rc, pc, tau);
                    (m.matched && type_covers(&r.type_name, &p.type_name, required_types, provided_types))
                        .then_some((m.distance, m.similarity))
                })
                .collect()
        })
        .collect();

    let mut search = Search {
        table: &table,
        used: vec![false; provided.len()],
        current: Vec::with_capacity(required.len()),
        best: None,
    };
    search.run(0, 0.0);
    let (sum, chosen) = search.best.ok_or(AssignError::NoFeasibleAssignment)?;
    let pairs = chosen
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let (distance, similarity) = table[i][j].expect("chosen pair is feasible");
            ParamPair {
                required: required[i].name.clone(),
                provided: provided[j].name.clone(),
                distance,
                similarity,
            }
        })
        .collect();
    Ok(ParameterAssignment {
        pairs,
        mean_similarity: sum / required.len() as f64,
    })
}

struct Search<'a> {
    table: &'a [Vec<Option<(Distance, f64)>>],
    used: Vec<bool>,
    current: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl Search<'_> {
    fn run(&mut self, row: usize, acc: f64) {
        if row == self.table.len() {
            if self.best.as_ref().is_none_or(|(b, _)| acc > *b) {
                self.best = Some((acc, self.current.clone()));
            }
            return;
        }
        for j in 0..self.used.len() {
            let Some((_, s)) = self.table[row][j] else { continue };
            if self.used[j] {
                continue;
            }
            self.used[j] = true;
            self.current.push(j);
            self.run(row + 1, acc + s);
            self.current.pop();
            self.used[j] = false;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateMatch {
    pub service_id: String,
    pub operation_name: String,
    pub interface_name: String,
    pub endpoint: String,
    pub wsdl_location: String,
    pub domain_similarity: f64,
    pub functionality_similarity: f64,
    pub inputs: ParameterAssignment,
    pub outputs: ParameterAssignment,
    pub functional_score: f64,
    pub policy: PolicyOutcome,
    /// Set once the candidate is ranked; rejected candidates have none.
    pub total_score: Option<f64>,
    pub trace: MatchTrace,
}

/// A (service, operation) pair that did not pass functional matching.
/// `operation` is `None` when the whole service failed the domain stage.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalFailure {
    pub service_id: String,
    pub operation: Option<String>,
    pub trace: MatchTrace,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActivityMatch {
    pub candidates: Vec<CandidateMatch>,
    pub failures: Vec<FunctionalFailure>,
}

fn concept_stage(
    stage: Stage,
    required: &crate::model::SemanticConcept,
    provided: &crate::model::SemanticConcept,
    o: &Ontology,
    tau: u32,
) -> (StageRecord, f64) {
    let m = o.concept_match(required, provided, tau);
    let record = StageRecord {
        stage,
        verdict: if m.matched { Verdict::Pass } else { Verdict::Fail },
        comparisons: vec![Comparison {
            required: required.to_string(),
            provided: provided.to_string(),
            distance: m.distance,
            similarity: m.similarity,
        }],
        similarity: Some(m.similarity),
        note: None,
    };
    (record, m.similarity)
}

fn param_stage(stage: Stage, result: &Result<ParameterAssignment, AssignError>) -> StageRecord {
    match result {
        Ok(a) => StageRecord {
            stage,
            verdict: Verdict::Pass,
            comparisons: a
                .pairs
                .iter()
                .map(|p| Comparison {
                    required: p.required.clone(),
                    provided: p.provided.clone(),
                    distance: p.distance,
                    similarity: p.similarity,
                })
                .collect(),
            similarity: Some(a.mean_similarity),
            note: None,
        },
        Err(e) => StageRecord {
            stage,
            verdict: Verdict::Fail,
            comparisons: Vec::new(),
            similarity: None,
            note: Some(e.to_string()),
        },
    }
}

/// Matches one abstract task against every operation of one service.
pub fn match_activity(
    activity: &Activity,
    activity_types: &TypeTable,
    service: &ServiceDescription,
    o: &Ontology,
    config: &MatchConfig,
) -> Result<ActivityMatch, MatchError> {
    let (Some(domain), Some(_)) = (&activity.domain, &activity.functionality) else {
        return Err(MatchError::NotAbstractTask(activity.id.clone()));
    };
    if !activity.is_abstract() || activity.kind != ActivityKind::Task {
        return Err(MatchError::NotAbstractTask(activity.id.clone()));
    }
    let tau = config.tau;
    let mut result = ActivityMatch::default();

    let (domain_record, domain_sim) = concept_stage(Stage::Domain, domain, &service.interface_concept, o, tau);
    if domain_record.verdict == Verdict::Fail && !config.full_evaluation {
        result.failures.push(FunctionalFailure {
            service_id: service.id.clone(),
            operation: None,
            trace: MatchTrace {
                stages: vec![
                    domain_record,
                    StageRecord::skipped(Stage::Functionality),
                    StageRecord::skipped(Stage::Inputs),
                    StageRecord::skipped(Stage::Outputs),
                ],
            },
        });
        return Ok(result);
    }

    for op in &service.operations {
        match match_operation(activity, activity_types, service, op, o, config, &domain_record, domain_sim)? {
            Ok(c) => result.candidates.push(c),
            Err(trace) => result.failures.push(FunctionalFailure {
                service_id: service.id.clone(),
                operation: Some(op.name.clone()),
                trace,
            }),
        }
    }
    Ok(result)
}

#[allow(clippy::too_many_arguments)]
fn match_operation(
    activity: &Activity,
    activity_types: &TypeTable,
    service: &ServiceDescription,
    op: &OperationDescription,
    o: &Ontology,
    config: &MatchConfig,
    domain_record: &StageRecord,
    domain_sim: f64,
) -> Result<Result<CandidateMatch, MatchTrace>, MatchError> {
    let full = config.full_evaluation;
    let functionality = activity.functionality.as_ref().expect("checked by caller");
    let mut stages = vec![domain_record.clone()];

    let (fun_record, fun_sim) = concept_stage(Stage::Functionality, functionality, &op.functionality, o, config.tau);
    let mut failed = domain_record.verdict == Verdict::Fail || fun_record.verdict == Verdict::Fail;
    stages.push(fun_record);

    let arity = |source| MatchError::Arity {
        activity: activity.id.clone(),
        service: service.id.clone(),
        operation: op.name.clone(),
        source,
    };
    let mut assignments = Vec::with_capacity(2);
    for (stage, req, prov, dir) in [
        (Stage::Inputs, &activity.inputs, &op.inputs, Direction::Input),
        (Stage::Outputs, &activity.outputs, &op.outputs, Direction::Output),
    ] {
        if failed && !full {
            stages.push(StageRecord::skipped(stage));
            continue;
        }
        let r = assign_parameters(req, prov, activity_types, &service.types, o, config.tau, dir);
        if let Err(e @ AssignError::ArityTooLarge { .. }) = r {
            return Err(arity(e));
        }
        let record = param_stage(stage, &r);
        failed |= record.verdict == Verdict::Fail;
        stages.push(record);
        assignments.push(r);
    }

    let trace = MatchTrace { stages };
    if failed {
        return Ok(Err(trace));
    }
    let mut it = assignments.into_iter().map(|r| r.expect("passing stage"));
    let (inputs, outputs) = (it.next().expect("inputs"), it.next().expect("outputs"));
    let functional_score = config.weights.functional_score(
        domain_sim,
        fun_sim,
        inputs.mean_similarity,
        outputs.mean_similarity,
    );
    Ok(Ok(CandidateMatch {
        service_id: service.id.clone(),
        operation_name: op.name.clone(),
        interface_name: service.interface_name.clone(),
        endpoint: service.endpoint.clone(),
        wsdl_location: service.wsdl_location.clone(),
        domain_similarity: domain_sim,
        functionality_similarity: fun_sim,
        inputs,
        outputs,
        functional_score,
        policy: PolicyOutcome::NotEvaluated,
        total_score: None,
        trace,
    }))
}

// ---------------------------------------------------------------------------
// Discovery
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscoveryConfig {
    pub matching: MatchConfig,
    pub policy_weight: f64,
    pub assertion_tau: u32,
    pub ignore_policy: bool,
    /// Worker threads for matching; results do not depend on it.
    pub jobs: usize,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            matching: MatchConfig::default(),
            policy_weight: DEFAULT_POLICY_WEIGHT,
            assertion_tau: policy::DEFAULT_ASSERTION_TAU,
            ignore_policy: false,
            jobs: 1,
        }
    }
}

impl DiscoveryConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let w = self.matching.weights;
        Weights::new(w.domain, w.functionality, w.inputs, w.outputs)?;
        if !(0.0..=1.0).contains(&self.policy_weight) {
            return Err(ConfigError::PolicyWeight(self.policy_weight));
        }
        if self.jobs == 0 {
            return Err(ConfigError::Jobs);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    /// The service's policy does not satisfy the activity's policy.
    Policy,
    /// A parameter list exceeds [`MAX_ARITY`].
    Arity,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::Policy => "policy",
            RejectReason::Arity => "arity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "policy" => Some(RejectReason::Policy),
            "arity" => Some(RejectReason::Arity),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub service_id: String,
    pub operation_name: String,
    pub reason: RejectReason,
    /// Functional match details; absent for arity rejections.
    pub candidate: Option<CandidateMatch>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityReport {
    pub activity_id: String,
    pub ranked: Vec<CandidateMatch>,
    pub rejected: Vec<Rejection>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryReport {
    pub process_id: String,
    pub tau: u32,
    pub weights: Weights,
    pub policy_weight: f64,
    pub assertion_tau: u32,
    pub ignore_policy: bool,
    pub activities: Vec<ActivityReport>,
}

impl DiscoveryReport {
    pub fn activity(&self, id: &str) -> Option<&ActivityReport> {
        self.activities.iter().find(|a| a.activity_id == id)
    }

    /// Ids of activities left without any ranked candidate.
    pub fn unmatched(&self) -> Vec<&str> {
        self.activities
            .iter()
            .filter(|a| a.ranked.is_empty())
            .map(|a| a.activity_id.as_str())
            .collect()
    }
}

/// `(1 - w) * functional + w * policy`, with a not-evaluated policy
/// counting as 1. Written in shortfall form like the functional score.
pub fn total_score(functional: f64, policy: PolicyOutcome, policy_weight: f64) -> Option<f64> {
    let p = policy.effective_score()?;
    let shortfall = (1.0 - policy_weight) * (1.0 - functional) + policy_weight * (1.0 - p);
    Some((1.0 - shortfall).clamp(0.0, 1.0))
}

/// Orders by printed total score (descending), then service id, then
/// operation name.
pub fn rank_order(a: &CandidateMatch, b: &CandidateMatch) -> Ordering {
    let key = |c: &CandidateMatch| format_score(c.total_score.unwrap_or(0.0));
    key(b)
        .cmp(&key(a))
        .then_with(|| a.service_id.cmp(&b.service_id))
        .then_with(|| a.operation_name.cmp(&b.operation_name))
}

/// Runs extraction, matching and selection for every abstract activity of
/// `doc` against `registry`.
pub fn discover(
    doc: &ProcessDocument,
    registry: &[ServiceDescription],
    o: &Ontology,
    config: &DiscoveryConfig,
) -> DiscoveryReport {
    let scoped = doc.scoped_abstract_activities();
    let pairs: Vec<(usize, usize)> = (0..scoped.len())
        .flat_map(|a| (0..registry.len()).map(move |s| (a, s)))
        .collect();
    let run = |&(a, s): &(usize, usize)| {
        let sa = scoped[a];
        match_activity(sa.activity, &sa.process.types, &registry[s], o, &config.matching)
    };
    let results: Vec<Result<ActivityMatch, MatchError>> = if config.jobs > 1 {
        match rayon::ThreadPoolBuilder::new().num_threads(config.jobs).build() {
            Ok(pool) => pool.install(|| pairs.par_iter().map(run).collect()),
            Err(_) => pairs.iter().map(run).collect(),
        }
    } else {
        pairs.iter().map(run).collect()
    };

    let mut activities: Vec<ActivityReport> = scoped
        .iter()
        .map(|sa| ActivityReport {
            activity_id: sa.activity.id.clone(),
            ranked: Vec::new(),
            rejected: Vec::new(),
        })
        .collect();
    for (&(a, s), result) in pairs.iter().zip(results) {
        let report = &mut activities[a];
        let activity = scoped[a].activity;
        match result {
            Ok(m) => {
                for mut c in m.candidates {
                    c.policy = if config.ignore_policy {
                        PolicyOutcome::NotEvaluated
                    } else {
                        policy::policy_satisfaction(
                            activity.policy.as_ref(),
                            registry[s].policy.as_ref(),
                            o,
                            config.assertion_tau,
                        )
                    };
                    c.total_score = total_score(c.functional_score, c.policy, config.policy_weight);
                    if c.total_score.is_some() {
                        report.ranked.push(c);
                    } else {
                        report.rejected.push(Rejection {
                            service_id: c.service_id.clone(),
                            operation_name: c.operation_name.clone(),
                            reason: RejectReason::Policy,
                            candidate: Some(c),
                        });
                    }
                }
            }
            Err(MatchError::Arity { service, operation, .. }) => report.rejected.push(Rejection {
                service_id: service,
                operation_name: operation,
                reason: RejectReason::Arity,
                candidate: None,
            }),
            Err(MatchError::NotAbstractTask(_)) => {
                // validated documents only contain annotated abstract tasks
            }
        }
    }
    for r in &mut activities {
        r.ranked.sort_by(rank_order);
        r.rejected.sort_by(|a, b| {
            (&a.service_id, &a.operation_name).cmp(&(&b.service_id, &b.operation_name))
        });
    }
    DiscoveryReport {
        process_id: doc.id.clone(),
        tau: config.matching.tau,
        weights: config.matching.weights,
        policy_weight: config.policy_weight,
        assertion_tau: config.assertion_tau,
        ignore_policy: config.ignore_policy,
        activities,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DataType, Field, PrimitiveKind, SemanticConcept, TypeKind};
    use crate::ontology::load_ontology;

    fn iri(s: &str) -> SemanticConcept {
        SemanticConcept::new(format!("http://ex.org/o#{s}")).unwrap()
    }

    fn param(name: &str, dir: Direction, ty: &str, concept: &str) -> Parameter {
        Parameter {
            name: name.into(),
            direction: dir,
            type_name: ty.into(),
            concept: Some(iri(concept)),
        }
    }

    fn record(name: &str, fields: &[(&str, &str)]) -> DataType {
        DataType {
            name: name.into(),
            kind: TypeKind::Record(
                fields
                    .iter()
                    .map(|(n, t)| Field { name: n.to_string(), type_name: t.to_string() })
                    .collect(),
            ),
        }
    }

    fn onto() -> Ontology {
        load_ontology(
            b"http://ex.org/o#Fin -- http://ex.org/o#Quote\n\
http://ex.org/o#Quote -- http://ex.org/o#QuoteLike\n\
http://ex.org/o#Price -- http://ex.org/o#Amount\n",
        )
        .unwrap()
    }

    #[test]
    fn primitive_coverage() {
        let t = TypeTable::default();
        assert!(type_covers("decimal", "decimal", &t, &t));
        assert!(!type_covers("decimal", "string", &t, &t));
        let alias = TypeTable::new(vec![DataType { name: "Money".into(), kind: TypeKind::Primitive(PrimitiveKind::Decimal) }]);
        assert!(type_covers("decimal", "Money", &t, &alias));
    }

    #[test]
    fn record_coverage() {
        let req = TypeTable::new(vec![
            record("Need", &[("price", "decimal")]),
            record("NeedMore", &[("price", "decimal"), ("currency", "string")]),
        ]);
        let prov = TypeTable::new(vec![
            record("Have", &[("price", "decimal"), ("timestamp", "string")]),
            record("HaveLess", &[("price", "decimal")]),
        ]);
        assert!(type_covers("Need", "Have", &req, &prov));
        assert!(!type_covers("NeedMore", "HaveLess", &req, &prov));
        assert!(!type_covers("Need", "decimal", &req, &prov));
        assert!(!type_covers("Need", "Unknown", &req, &prov));
    }

    #[test]
    fn nested_record_coverage() {
        let req = TypeTable::new(vec![
            record("Inner", &[("v", "decimal")]),
            record("Outer", &[("inner", "Inner")]),
        ]);
        let prov = TypeTable::new(vec![
            record("In2", &[("v", "decimal"), ("w", "date")]),
            record("Out2", &[("inner", "In2"), ("x", "string")]),
            record("Bad", &[("inner", "decimal")]),
        ]);
        assert!(type_covers("Outer", "Out2", &req, &prov));
        assert!(!type_covers("Outer", "Bad", &req, &prov));
    }

    #[test]
    fn empty_assignment_is_perfect() {
        let t = TypeTable::default();
        for dir in [Direction::Input, Direction::Output] {
            let a = assign_parameters(&[], &[], &t, &t, &onto(), 3, dir).unwrap();
            assert_eq!(a.mean_similarity, 1.0);
            assert!(a.pairs.is_empty());
        }
    }

    #[test]
    fn exact_single_pair() {
        let t = TypeTable::default();
        let r = [param("price", Direction::Output, "decimal", "Price")];
        let p = [param("value", Direction::Output, "decimal", "Price")];
        let a = assign_parameters(&r, &p, &t, &t, &onto(), 3, Direction::Output).unwrap();
        assert_eq!(a.pairs.len(), 1);
        assert_eq!((a.pairs[0].required.as_str(), a.pairs[0].provided.as_str()), ("price", "value"));
        assert_eq!(a.pairs[0].similarity, 1.0);
        assert_eq!(a.mean_similarity, 1.0);
    }

    #[test]
    fn inputs_must_cover_provided_side() {
        let t = TypeTable::default();
        let r = [param("a", Direction::Input, "decimal", "Price")];
        let p = [
            param("a", Direction::Input, "decimal", "Price"),
            param("b", Direction::Input, "decimal", "Amount"),
        ];
        assert_eq!(
            assign_parameters(&r, &p, &t, &t, &onto(), 3, Direction::Input),
            Err(AssignError::NoFeasibleAssignment)
        );
        // the same lists are fine as outputs: extras are permitted
        let a = assign_parameters(&r, &p, &t, &t, &onto(), 3, Direction::Output).unwrap();
        assert_eq!(a.mean_similarity, 1.0);
        // nothing required but something to supply
        assert_eq!(
            assign_parameters(&[], &p, &t, &t, &onto(), 3, Direction::Input),
            Err(AssignError::NoFeasibleAssignment)
        );
    }

    #[test]
    fn assignment_prefers_higher_similarity() {
        let t = TypeTable::default();
        let r = [
            param("x", Direction::Output, "decimal", "Price"),
            param("y", Direction::Output, "decimal", "Amount"),
        ];
        let p = [
            param("p0", Direction::Output, "decimal", "Amount"),
            param("p1", Direction::Output, "decimal", "Price"),
        ];
        let a = assign_parameters(&r, &p, &t, &t, &onto(), 3, Direction::Output).unwrap();
        assert_eq!(a.mean_similarity, 1.0);
        assert_eq!(a.pairs[0].provided, "p1");
        assert_eq!(a.pairs[1].provided, "p0");
    }

    #[test]
    fn type_mismatch_blocks_pair() {
        let t = TypeTable::default();
        let r = [param("x", Direction::Output, "decimal", "Price")];
        let p = [param("p", Direction::Output, "string", "Price")];
        assert!(assign_parameters(&r, &p, &t, &t, &onto(), 3, Direction::Output).is_err());
    }

    #[test]
    fn arity_cap() {
        let t = TypeTable::default();
        let many: Vec<Parameter> = (0..9).map(|i| param(&format!("p{i}"), Direction::Output, "decimal", "Price")).collect();
        assert_eq!(
            assign_parameters(&many, &many, &t, &t, &onto(), 3, Direction::Output),
            Err(AssignError::ArityTooLarge { side: "required", len: 9 })
        );
        assert!(matches!(
            assign_parameters(&many[..1], &many, &t, &t, &onto(), 3, Direction::Output),
            Err(AssignError::ArityTooLarge { side: "provided", .. })
        ));
    }

    #[test]
    fn score_formula() {
        let w = Weights::default();
        assert!((w.functional_score(1.0, 0.5, 1.0, 1.0) - 0.8).abs() < 1e-12);
        assert!((w.functional_score(1.0, 0.5, 1.0, 1.0) - (0.2 + 0.4 * 0.5 + 0.2 + 0.2)).abs() < 1e-12);
        assert_eq!(w.functional_score(1.0, 1.0, 1.0, 1.0), 1.0);
        assert!(w.functional_score(1.0, 1.0, 1.0, 0.999_999) < 1.0);
        assert_eq!(total_score(1.0, PolicyOutcome::NotEvaluated, 0.3), Some(1.0));
        assert_eq!(total_score(1.0, PolicyOutcome::Failed, 0.3), None);
        assert!((total_score(0.8, PolicyOutcome::Satisfied(0.5), 0.3).unwrap() - (0.7 * 0.8 + 0.3 * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn weights_parse_and_check() {
        let w: Weights = "0.2,0.4,0.2,0.2".parse().unwrap();
        assert_eq!(w, Weights::default());
        assert_eq!(w.to_string(), "0.2,0.4,0.2,0.2");
        assert!(matches!("0.5,0.5,0.5,0.5".parse::<Weights>(), Err(ConfigError::WeightSum(_))));
        assert!(matches!("1,0,0".parse::<Weights>(), Err(ConfigError::WeightsFormat(_))));
        assert!(matches!("1.5,-0.5,0,0".parse::<Weights>(), Err(ConfigError::NegativeWeight)));
        assert!(matches!("a,b,c,d".parse::<Weights>(), Err(ConfigError::WeightsFormat(_))));
    }

    fn quote_activity() -> Activity {
        let mut a = Activity::task("GetQuote", crate::model::Binding::Abstract);
        a.domain = Some(iri("Fin"));
        a.functionality = Some(iri("Quote"));
        a.outputs.push(param("price", Direction::Output, "decimal", "Price"));
        a
    }

    fn service(domain: &str, ops: Vec<OperationDescription>) -> ServiceDescription {
        ServiceDescription {
            id: "svc".into(),
            endpoint: "urn:svc".into(),
            wsdl_location: "urn:svc?wsdl".into(),
            interface_name: "I".into(),
            interface_concept: iri(domain),
            operations: ops,
            types: TypeTable::default(),
            policy: None,
        }
    }

    fn op(name: &str, fun: &str) -> OperationDescription {
        OperationDescription {
            name: name.into(),
            functionality: iri(fun),
            inputs: vec![],
            outputs: vec![param("value", Direction::Output, "decimal", "Price")],
        }
    }

    #[test]
    fn approximate_functionality_scores_point_eight() {
        let s = service("Fin", vec![op("q", "QuoteLike")]);
        let m = match_activity(&quote_activity(), &TypeTable::default(), &s, &onto(), &MatchConfig::default()).unwrap();
        assert_eq!(m.candidates.len(), 1);
        let c = &m.candidates[0];
        assert_eq!(c.domain_similarity, 1.0);
        assert_eq!(c.functionality_similarity, 0.5);
        assert!((c.functional_score - 0.8).abs() < 1e-12);
        assert!(c.trace.passed() && c.trace.is_short_circuit_sound());
    }

    #[test]
    fn domain_failure_skips_everything() {
        let s = service("Elsewhere", vec![op("q", "Quote")]);
        let m = match_activity(&quote_activity(), &TypeTable::default(), &s, &onto(), &MatchConfig::default()).unwrap();
        assert!(m.candidates.is_empty());
        assert_eq!(m.failures.len(), 1);
        let t = &m.failures[0].trace;
        assert_eq!(m.failures[0].operation, None);
        assert_eq!(t.stages[0].verdict, Verdict::Fail);
        assert!(t.stages[1..].iter().all(|s| !s.evaluated()));
        assert!(t.is_short_circuit_sound());
    }

    #[test]
    fn functionality_failure_skips_parameters() {
        let s = service("Fin", vec![op("q", "Price"), op("ok", "Quote")]);
        let cfg = MatchConfig { tau: 1, ..MatchConfig::default() };
        let m = match_activity(&quote_activity(), &TypeTable::default(), &s, &onto(), &cfg).unwrap();
        assert_eq!(m.candidates.len(), 1);
        assert_eq!(m.candidates[0].operation_name, "ok");
        let t = &m.failures[0].trace;
        assert_eq!(t.stages[1].verdict, Verdict::Fail);
        assert_eq!(t.stages[1].comparisons[0].distance, Distance::Unreachable);
        assert!(!t.stages[2].evaluated() && !t.stages[3].evaluated());
    }

    #[test]
    fn full_evaluation_records_every_stage() {
        let s = service("Elsewhere", vec![op("q", "Quote")]);
        let cfg = MatchConfig { full_evaluation: true, ..MatchConfig::default() };
        let m = match_activity(&quote_activity(), &TypeTable::default(), &s, &onto(), &cfg).unwrap();
        assert!(m.candidates.is_empty());
        assert!(m.failures[0].trace.stages.iter().all(StageRecord::evaluated));
    }

    #[test]
    fn non_abstract_activity_is_an_error() {
        let mut a = quote_activity();
        a.binding = crate::model::Binding::Internal;
        let s = service("Fin", vec![]);
        assert!(matches!(
            match_activity(&a, &TypeTable::default(), &s, &onto(), &MatchConfig::default()),
            Err(MatchError::NotAbstractTask(_))
        ));
    }
}
