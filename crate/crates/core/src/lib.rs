//! Semantic discovery of Web services for abstract business processes.
//!
//! A process document marks some of its tasks as abstract and annotates them
//! with ontology concepts. [`matcher::discover`] finds and ranks registered
//! services for each such task, and [`binder`] turns the process into a
//! BPEL-shaped document whose invokes are bound to the selected services.

pub mod binder;
pub mod cli;
pub mod error;
pub mod matcher;
pub mod model;
pub mod ontology;
pub mod policy;
pub mod registry;
pub mod report;
pub mod xml;

pub use binder::{bind, emit_abstract_bpel, parse_bpel, select_top, serialize_bpel, BpelDocument};
pub use error::{DocumentError, ParseWarning};
pub use matcher::{
    assign_parameters, discover, match_activity, type_covers, CandidateMatch, DiscoveryConfig, DiscoveryReport,
    MatchConfig, MatchTrace, Weights,
};
pub use model::{abstract_activities, parse_process, serialize_process, validate_process, ProcessDocument};
pub use ontology::{concept_match, edge_distance, load_ontology, similarity, Distance, Ontology};
pub use report::{parse_report, serialize_report};
pub use policy::{alternative_satisfies, assertion_matches, normalize, policy_satisfaction, Policy, PolicyOutcome};
pub use registry::{load_registry, parse_service, ServiceDescription};

/// Fixed six-decimal rendering used for every score in reports and output.
pub fn format_score(x: f64) -> String {
    // avoid printing "-0.000000"
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.6}")
}
