//! Business-process domain model: processes decomposed into macro, elementary
//! and micro levels, composite activities annotated with semantic concepts,
//! a behaviour tree, and local data types.
//!
//! Documents are parsed from the textual process format and validated before
//! they are handed out, so every [`ProcessDocument`] returned by
//! [`parse_process`] satisfies [`validate_process`].

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::error::{DocumentError, ParseWarning};
use crate::policy::{self, Policy};
use crate::xml::{self, Element};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid concept iri `{iri}`: {reason}")]
pub struct InvalidIri {
    pub iri: String,
    pub reason: &'static str,
}

/// Absolute identifier of an ontology concept (`scheme://...`).
/// Equality is exact byte equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SemanticConcept(String);

impl SemanticConcept {
    pub fn new(iri: impl Into<String>) -> Result<Self, InvalidIri> {
        let iri = iri.into();
        let reason = if iri.is_empty() {
            Some("empty")
        } else if iri.chars().any(char::is_whitespace) {
            Some("contains whitespace")
        } else {
            match iri.find("://") {
                None => Some("missing `://`"),
                Some(0) => Some("missing scheme"),
                Some(i) => {
                    let scheme = &iri[..i];
                    let ok = scheme.starts_with(|c: char| c.is_ascii_alphabetic())
                        && scheme
                            .chars()
                            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
                    (!ok).then_some("invalid scheme")
                }
            }
        };
        match reason {
            Some(reason) => Err(InvalidIri { iri, reason }),
            None => Ok(SemanticConcept(iri)),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SemanticConcept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for SemanticConcept {
    type Err = InvalidIri;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SemanticConcept::new(s)
    }
}

/// Names used for ids, roles, parameters and types.
pub(crate) fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

macro_rules! keyword_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }

            pub fn parse(s: &str) -> Option<Self> {
                match s { $($text => Some($name::$variant),)+ _ => None }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

keyword_enum!(PrimitiveKind {
    String => "string",
    Decimal => "decimal",
    Integer => "integer",
    Boolean => "boolean",
    Date => "date",
});

keyword_enum!(Direction { Input => "input", Output => "output" });

keyword_enum!(TriggerKind { Start => "start", Interrupt => "interrupt", Terminate => "terminate" });

keyword_enum!(ActivityKind { Task => "task", Subprocess => "subprocess" });

keyword_enum!(
    /// How an activity is realised: by the enterprise itself, by a known
    /// partner, or by a service still to be discovered.
    Binding { Internal => "internal", External => "external", Abstract => "abstract" }
);

keyword_enum!(ProcessKind { Macro => "macro", Elementary => "elementary", Micro => "micro" });

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    pub name: String,
    pub type_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeKind {
    Primitive(PrimitiveKind),
    Record(Vec<Field>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataType {
    pub name: String,
    pub kind: TypeKind,
}

/// A type name resolved against a [`TypeTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolvedType<'a> {
    Primitive(PrimitiveKind),
    Record(&'a [Field]),
}

/// Declared types of one document. The primitive kind names always resolve.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TypeTable {
    pub types: Vec<DataType>,
}

impl TypeTable {
    pub fn new(types: Vec<DataType>) -> Self {
        TypeTable { types }
    }

    pub fn declared(&self, name: &str) -> Option<&DataType> {
        self.types.iter().find(|t| t.name == name)
    }

    pub fn resolve(&self, name: &str) -> Option<ResolvedType<'_>> {
        if let Some(kind) = PrimitiveKind::parse(name) {
            return Some(ResolvedType::Primitive(kind));
        }
        self.declared(name).map(|t| match &t.kind {
            TypeKind::Primitive(k) => ResolvedType::Primitive(*k),
            TypeKind::Record(fields) => ResolvedType::Record(fields),
        })
    }

    pub(crate) fn validate(&self, path: &str, out: &mut Vec<Violation>) {
        let mut seen = HashSet::new();
        for t in &self.types {
            let tpath = format!("{path}/types/type[{}]", t.name);
            if !is_identifier(&t.name) {
                out.push(Violation::invariant(&tpath, "type name is not an identifier"));
            }
            if PrimitiveKind::parse(&t.name).is_some() {
                out.push(Violation::invariant(&tpath, "type name shadows a primitive kind"));
            }
            if !seen.insert(t.name.as_str()) {
                out.push(Violation::invariant(&tpath, "duplicate type name"));
            }
            if let TypeKind::Record(fields) = &t.kind {
                let mut names = HashSet::new();
                for f in fields {
                    let fpath = format!("{tpath}/field[{}]", f.name);
                    if !names.insert(f.name.as_str()) {
                        out.push(Violation::invariant(&fpath, "duplicate field name"));
                    }
                    if self.resolve(&f.type_name).is_none() {
                        out.push(Violation::unresolved(
                            &fpath,
                            format!("unknown type `{}`", f.type_name),
                        ));
                    }
                }
            }
        }
        // Record types must form a DAG.
        let mut state: HashMap<&str, u8> = HashMap::new();
        for t in &self.types {
            if self.has_cycle(&t.name, &mut state) {
                out.push(Violation::invariant(
                    format!("{path}/types/type[{}]", t.name),
                    "recursive type definition",
                ));
            }
        }
    }

    fn has_cycle<'a>(&'a self, name: &'a str, state: &mut HashMap<&'a str, u8>) -> bool {
        match state.get(name) {
            Some(1) => return true,
            Some(_) => return false,
            None => {}
        }
        let Some(t) = self.declared(name) else {
            return false;
        };
        state.insert(name, 1);
        let mut cyclic = false;
        if let TypeKind::Record(fields) = &t.kind {
            for f in fields {
                if self.has_cycle(&f.type_name, state) {
                    cyclic = true;
                }
            }
        }
        // A node on a cycle is reported once; revisits see state 2.
        state.insert(name, 2);
        cyclic
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parameter {
    pub name: String,
    pub direction: Direction,
    pub type_name: String,
    pub concept: Option<SemanticConcept>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub name: String,
    pub trigger: TriggerKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resource {
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Activity {
    pub id: String,
    pub kind: ActivityKind,
    pub binding: Binding,
    /// Pool (role) performing the activity. Falls back to the enclosing
    /// activity's role, then to the process's only role.
    pub role: Option<String>,
    pub domain: Option<SemanticConcept>,
    pub functionality: Option<SemanticConcept>,
    pub inputs: Vec<Parameter>,
    pub outputs: Vec<Parameter>,
    pub resources: Vec<Resource>,
    pub events: Vec<Event>,
    pub policy: Option<Policy>,
    pub children: Vec<Activity>,
    pub child_behavior: Option<BehaviorNode>,
}

impl Activity {
    /// A bare task with no annotations.
    pub fn task(id: impl Into<String>, binding: Binding) -> Self {
        Activity {
            id: id.into(),
            kind: ActivityKind::Task,
            binding,
            role: None,
            domain: None,
            functionality: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            resources: Vec::new(),
            events: Vec::new(),
            policy: None,
            children: Vec::new(),
            child_behavior: None,
        }
    }

    pub fn is_abstract(&self) -> bool {
        self.binding == Binding::Abstract
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    /// Opaque guard expression, copied verbatim into BPEL conditions.
    pub condition: String,
    pub body: BehaviorNode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BehaviorNode {
    Invoke { activity: String },
    Sequence(Vec<BehaviorNode>),
    Parallel(Vec<BehaviorNode>),
    Exclusive {
        branches: Vec<Branch>,
        otherwise: Option<Box<BehaviorNode>>,
    },
}

impl BehaviorNode {
    pub fn invoke(id: impl Into<String>) -> Self {
        BehaviorNode::Invoke { activity: id.into() }
    }

    fn tag(&self) -> &'static str {
        match self {
            BehaviorNode::Invoke { .. } => "invoke",
            BehaviorNode::Sequence(_) => "sequence",
            BehaviorNode::Parallel(_) => "parallel",
            BehaviorNode::Exclusive { .. } => "exclusive",
        }
    }

    /// Invoked activity ids in depth-first order.
    pub fn invoked_ids(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_ids(&mut out);
        out
    }

    fn collect_ids<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            BehaviorNode::Invoke { activity } => out.push(activity),
            BehaviorNode::Sequence(c) | BehaviorNode::Parallel(c) => {
                c.iter().for_each(|n| n.collect_ids(out))
            }
            BehaviorNode::Exclusive { branches, otherwise } => {
                branches.iter().for_each(|b| b.body.collect_ids(out));
                if let Some(e) = otherwise {
                    e.collect_ids(out);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessDocument {
    pub id: String,
    pub name: String,
    pub kind: ProcessKind,
    pub goal: String,
    pub roles: Vec<String>,
    pub types: TypeTable,
    pub activities: Vec<Activity>,
    pub behavior: Option<BehaviorNode>,
    pub child_processes: Vec<ProcessDocument>,
}

/// An activity together with the process that declares it (and so owns the
/// type table its parameters resolve against).
#[derive(Debug, Clone, Copy)]
pub struct ScopedActivity<'a> {
    pub process: &'a ProcessDocument,
    pub activity: &'a Activity,
}

impl ProcessDocument {
    /// Depth-first, document-order traversal of every activity in the tree.
    pub fn all_activities(&self) -> Vec<ScopedActivity<'_>> {
        let mut out = Vec::new();
        self.walk(&mut out);
        out
    }

    fn walk<'a>(&'a self, out: &mut Vec<ScopedActivity<'a>>) {
        fn rec<'a>(p: &'a ProcessDocument, a: &'a Activity, out: &mut Vec<ScopedActivity<'a>>) {
            out.push(ScopedActivity { process: p, activity: a });
            for c in &a.children {
                rec(p, c, out);
            }
        }
        for a in &self.activities {
            rec(self, a, out);
        }
        for c in &self.child_processes {
            c.walk(out);
        }
    }

    pub fn find_activity(&self, id: &str) -> Option<ScopedActivity<'_>> {
        self.all_activities().into_iter().find(|s| s.activity.id == id)
    }

    pub fn scoped_abstract_activities(&self) -> Vec<ScopedActivity<'_>> {
        self.all_activities()
            .into_iter()
            .filter(|s| s.activity.is_abstract())
            .collect()
    }
}

/// All abstract activities, recursively, in document order.
pub fn abstract_activities(doc: &ProcessDocument) -> Vec<&Activity> {
    doc.scoped_abstract_activities()
        .into_iter()
        .map(|s| s.activity)
        .collect()
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    UnresolvedReference,
    Invariant,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub path: String,
    pub message: String,
    pub kind: ViolationKind,
}

impl Violation {
    pub(crate) fn invariant(path: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            path: path.into(),
            message: message.into(),
            kind: ViolationKind::Invariant,
        }
    }

    pub(crate) fn unresolved(path: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            path: path.into(),
            message: message.into(),
            kind: ViolationKind::UnresolvedReference,
        }
    }

    pub fn into_error(self) -> DocumentError {
        match self.kind {
            ViolationKind::UnresolvedReference => DocumentError::UnresolvedReference {
                path: self.path,
                message: self.message,
            },
            ViolationKind::Invariant => DocumentError::InvariantViolation {
                path: self.path,
                message: self.message,
            },
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Every invariant violation in `doc`, ordered by location path.
pub fn validate_process(doc: &ProcessDocument) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    let mut process_ids = HashSet::new();
    validate_tree(doc, &format!("/process[{}]", doc.id), &mut ids, &mut process_ids, &mut out);
    check_abstract_order(doc, &mut out);
    out.sort();
    out.dedup();
    out
}

fn validate_tree<'a>(
    p: &'a ProcessDocument,
    path: &str,
    ids: &mut HashSet<&'a str>,
    process_ids: &mut HashSet<&'a str>,
    out: &mut Vec<Violation>,
) {
    if !is_identifier(&p.id) {
        out.push(Violation::invariant(path, "process id is not an identifier"));
    }
    if !process_ids.insert(&p.id) {
        out.push(Violation::invariant(path, "duplicate process id"));
    }
    if p.goal.trim().is_empty() {
        out.push(Violation::invariant(format!("{path}/goal"), "goal must not be empty"));
    }
    let mut roles = HashSet::new();
    for r in &p.roles {
        if !is_identifier(r) {
            out.push(Violation::invariant(format!("{path}/role[{r}]"), "role name is not an identifier"));
        }
        if !roles.insert(r.as_str()) {
            out.push(Violation::invariant(format!("{path}/role[{r}]"), "duplicate role"));
        }
    }
    if p.kind == ProcessKind::Micro && p.roles.len() != 1 {
        out.push(Violation::invariant(
            path,
            format!("micro-process must have exactly one role, found {}", p.roles.len()),
        ));
    }
    let expected_child = match p.kind {
        ProcessKind::Macro => Some(ProcessKind::Elementary),
        ProcessKind::Elementary => Some(ProcessKind::Micro),
        ProcessKind::Micro => None,
    };
    for c in &p.child_processes {
        if Some(c.kind) != expected_child {
            out.push(Violation::invariant(
                format!("{path}/process[{}]", c.id),
                format!("a {} process cannot contain a {} process", p.kind, c.kind),
            ));
        }
    }
    p.types.validate(path, out);

    let sole_role = (p.roles.len() == 1).then(|| p.roles[0].as_str());
    for a in &p.activities {
        validate_activity(p, a, &format!("{path}/activity[{}]", a.id), sole_role, ids, out);
    }

    match &p.behavior {
        None if !p.activities.is_empty() => {
            out.push(Violation::invariant(path, "process declares activities but no behavior"))
        }
        None => {}
        Some(b) => {
            let scope: HashMap<&str, &Activity> =
                p.activities.iter().map(|a| (a.id.as_str(), a)).collect();
            validate_behavior(b, &format!("{path}/behavior"), &scope, p, out);
        }
    }
    check_reachability(p, path, out);

    for c in &p.child_processes {
        validate_tree(c, &format!("{path}/process[{}]", c.id), ids, process_ids, out);
    }
}

fn validate_activity<'a>(
    p: &ProcessDocument,
    a: &'a Activity,
    path: &str,
    inherited_role: Option<&str>,
    ids: &mut HashSet<&'a str>,
    out: &mut Vec<Violation>,
) {
    if !is_identifier(&a.id) {
        out.push(Violation::invariant(path, "activity id is not an identifier"));
    }
    if !ids.insert(&a.id) {
        out.push(Violation::invariant(path, "duplicate activity id"));
    }
    match a.kind {
        ActivityKind::Task => {
            if !a.children.is_empty() {
                out.push(Violation::invariant(path, "task must not have child activities"));
            }
            if a.child_behavior.is_some() {
                out.push(Violation::invariant(format!("{path}/behavior"), "task must not have a behavior"));
            }
        }
        ActivityKind::Subprocess => {
            if a.children.is_empty() {
                out.push(Violation::invariant(path, "subprocess must have child activities"));
            }
            if a.binding == Binding::Abstract {
                out.push(Violation::invariant(path, "only tasks can be abstract"));
            }
        }
    }
    if let Some(r) = &a.role {
        if !p.roles.iter().any(|x| x == r) {
            out.push(Violation::unresolved(format!("{path}/@role"), format!("unknown role `{r}`")));
        }
    }
    let role = a.role.as_deref().or(inherited_role);
    if a.binding != Binding::Abstract && role.is_none() {
        out.push(Violation::invariant(path, "cannot determine the role performing this activity"));
    }
    if a.binding == Binding::Abstract {
        if a.domain.is_none() {
            out.push(Violation::invariant(path, "abstract activity needs a domain concept"));
        }
        if a.functionality.is_none() {
            out.push(Violation::invariant(path, "abstract activity needs a functionality concept"));
        }
    }
    for (list, dir) in [(&a.inputs, Direction::Input), (&a.outputs, Direction::Output)] {
        let mut names = HashSet::new();
        for prm in list {
            let ppath = format!("{path}/{dir}[{}]", prm.name);
            if !is_identifier(&prm.name) {
                out.push(Violation::invariant(&ppath, "parameter name is not an identifier"));
            }
            if !names.insert(prm.name.as_str()) {
                out.push(Violation::invariant(&ppath, "duplicate parameter name"));
            }
            if prm.direction != dir {
                out.push(Violation::invariant(&ppath, "parameter direction does not match its list"));
            }
            if p.types.resolve(&prm.type_name).is_none() {
                out.push(Violation::unresolved(&ppath, format!("unknown type `{}`", prm.type_name)));
            }
            if a.binding == Binding::Abstract && prm.concept.is_none() {
                out.push(Violation::invariant(&ppath, "parameter of an abstract activity needs a concept"));
            }
        }
    }
    let mut res = HashSet::new();
    for r in &a.resources {
        if !res.insert(r.name.as_str()) {
            out.push(Violation::invariant(format!("{path}/resource[{}]", r.name), "duplicate resource name"));
        }
    }
    if let Some(pol) = &a.policy {
        for msg in policy::structural_problems(pol) {
            out.push(Violation::invariant(format!("{path}/policy"), msg));
        }
    }
    for c in &a.children {
        validate_activity(p, c, &format!("{path}/activity[{}]", c.id), role, ids, out);
    }
    if let Some(b) = &a.child_behavior {
        let scope: HashMap<&str, &Activity> = a.children.iter().map(|c| (c.id.as_str(), c)).collect();
        validate_behavior(b, &format!("{path}/behavior"), &scope, p, out);
    }
}

fn validate_behavior(
    root: &BehaviorNode,
    path: &str,
    scope: &HashMap<&str, &Activity>,
    p: &ProcessDocument,
    out: &mut Vec<Violation>,
) {
    let mut seen = HashSet::new();
    check_node(root, &format!("{path}/{}", root.tag()), scope, p, &mut seen, out);
}

fn check_node<'a>(
    n: &'a BehaviorNode,
    path: &str,
    scope: &HashMap<&str, &Activity>,
    p: &ProcessDocument,
    seen: &mut HashSet<&'a str>,
    out: &mut Vec<Violation>,
) {
    let child_path = |i: usize, c: &BehaviorNode| format!("{path}/{}[{i}]", c.tag());
    match n {
        BehaviorNode::Invoke { activity } => {
            if !scope.contains_key(activity.as_str()) {
                let msg = if p.find_activity(activity).is_some() {
                    format!("activity `{activity}` is not in scope here")
                } else {
                    format!("unknown activity `{activity}`")
                };
                out.push(Violation::unresolved(path, msg));
            } else if !seen.insert(activity) {
                out.push(Violation::invariant(path, format!("activity `{activity}` is invoked more than once")));
            }
        }
        BehaviorNode::Sequence(children) | BehaviorNode::Parallel(children) => {
            if children.is_empty() {
                out.push(Violation::invariant(path, format!("empty {}", n.tag())));
            }
            for (i, c) in children.iter().enumerate() {
                check_node(c, &child_path(i, c), scope, p, seen, out);
            }
        }
        BehaviorNode::Exclusive { branches, otherwise } => {
            if branches.is_empty() {
                out.push(Violation::invariant(path, "exclusive gateway needs at least one branch"));
            }
            for (i, b) in branches.iter().enumerate() {
                if b.condition.trim().is_empty() {
                    out.push(Violation::invariant(format!("{path}/branch[{i}]"), "empty branch condition"));
                }
                let bp = format!("{path}/branch[{i}]/{}", b.body.tag());
                check_node(&b.body, &bp, scope, p, seen, out);
            }
            if let Some(e) = otherwise {
                check_node(e, &format!("{path}/else/{}", e.tag()), scope, p, seen, out);
            }
        }
    }
}

/// Activity ids in the order the BPEL emitter visits them: root behaviour
/// depth-first, with an invoked subprocess replaced by its own behaviour.
pub(crate) fn execution_order(p: &ProcessDocument) -> Vec<&Activity> {
    fn expand<'a>(
        n: &BehaviorNode,
        scope: &HashMap<&str, &'a Activity>,
        out: &mut Vec<&'a Activity>,
    ) {
        for id in n.invoked_ids() {
            if let Some(a) = scope.get(id) {
                out.push(a);
                if let Some(cb) = &a.child_behavior {
                    let inner: HashMap<&str, &Activity> =
                        a.children.iter().map(|c| (c.id.as_str(), c)).collect();
                    expand(cb, &inner, out);
                }
            }
        }
    }
    let mut out = Vec::new();
    if let Some(b) = &p.behavior {
        let scope: HashMap<&str, &Activity> = p.activities.iter().map(|a| (a.id.as_str(), a)).collect();
        expand(b, &scope, &mut out);
    }
    out
}

fn check_reachability(p: &ProcessDocument, path: &str, out: &mut Vec<Violation>) {
    let reached: HashSet<&str> = execution_order(p).iter().map(|a| a.id.as_str()).collect();
    fn rec(a: &Activity, path: &str, reached: &HashSet<&str>, out: &mut Vec<Violation>) {
        if a.is_abstract() && !reached.contains(a.id.as_str()) {
            out.push(Violation::invariant(path, "abstract activity is never invoked by the behavior"));
        }
        for c in &a.children {
            rec(c, &format!("{path}/activity[{}]", c.id), reached, out);
        }
    }
    for a in &p.activities {
        rec(a, &format!("{path}/activity[{}]", a.id), &reached, out);
    }
}

fn check_abstract_order(doc: &ProcessDocument, out: &mut Vec<Violation>) {
    fn emitted<'a>(p: &'a ProcessDocument, acc: &mut Vec<&'a str>) {
        acc.extend(
            execution_order(p)
                .into_iter()
                .filter(|a| a.is_abstract())
                .map(|a| a.id.as_str()),
        );
        for c in &p.child_processes {
            emitted(c, acc);
        }
    }
    let declared: Vec<&str> = abstract_activities(doc).iter().map(|a| a.id.as_str()).collect();
    let mut invoked = Vec::new();
    emitted(doc, &mut invoked);
    let declared_set: BTreeSet<&str> = declared.iter().copied().collect();
    let invoked_set: BTreeSet<&str> = invoked.iter().copied().collect();
    // Unreachable abstract activities are reported elsewhere.
    if declared_set == invoked_set && declared != invoked {
        out.push(Violation::invariant(
            format!("/process[{}]/behavior", doc.id),
            "abstract activities must be invoked in declaration order",
        ));
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Parses and validates a process document.
pub fn parse_process(bytes: &[u8]) -> Result<ProcessDocument, DocumentError> {
    parse_process_with_warnings(bytes).map(|(d, _)| d)
}

pub fn parse_process_with_warnings(
    bytes: &[u8],
) -> Result<(ProcessDocument, Vec<ParseWarning>), DocumentError> {
    let (doc, warnings) = parse_process_unchecked(bytes)?;
    if let Some(v) = validate_process(&doc).into_iter().next() {
        return Err(v.into_error());
    }
    Ok((doc, warnings))
}

/// Reads the document structure without checking cross-references or
/// invariants; pair with [`validate_process`] to list every violation.
pub fn parse_process_unchecked(
    bytes: &[u8],
) -> Result<(ProcessDocument, Vec<ParseWarning>), DocumentError> {
    let root = xml::parse(bytes)?;
    if root.name != "process" {
        return Err(DocumentError::malformed("/", format!("expected <process>, found <{}>", root.name)));
    }
    let mut warnings = Vec::new();
    let doc = process_from_element(&root, "", &mut warnings)?;
    Ok((doc, warnings))
}

pub(crate) fn concept_attr(el: &Element, path: &str) -> Result<Option<SemanticConcept>, DocumentError> {
    el.get("concept")
        .map(|c| SemanticConcept::new(c).map_err(|e| DocumentError::malformed(path, e.to_string())))
        .transpose()
}

fn keyword<T>(el: &Element, key: &str, path: &str, parse: fn(&str) -> Option<T>) -> Result<T, DocumentError> {
    let raw = el.require(key, path)?;
    parse(raw).ok_or_else(|| DocumentError::malformed(path, format!("invalid value `{raw}` for `{key}`")))
}

fn unexpected(el: &Element, parent_path: &str) -> DocumentError {
    DocumentError::malformed(parent_path, format!("unexpected element <{}>", el.name))
}

fn process_from_element(
    el: &Element,
    parent: &str,
    warnings: &mut Vec<ParseWarning>,
) -> Result<ProcessDocument, DocumentError> {
    let id = el.require("id", &format!("{parent}/process"))?.to_string();
    let path = format!("{parent}/process[{id}]");
    el.expect_attrs(&["id", "name", "kind"], &path)?;
    let mut doc = ProcessDocument {
        name: el.get("name").unwrap_or(&id).to_string(),
        kind: keyword(el, "kind", &path, ProcessKind::parse)?,
        id,
        goal: String::new(),
        roles: Vec::new(),
        types: TypeTable::default(),
        activities: Vec::new(),
        behavior: None,
        child_processes: Vec::new(),
    };
    let mut saw_goal = false;
    for c in &el.children {
        match c.name.as_str() {
            "goal" => {
                if saw_goal {
                    return Err(DocumentError::malformed(&path, "more than one <goal>"));
                }
                saw_goal = true;
                doc.goal = c.text.clone().unwrap_or_default();
            }
            "role" => {
                let rp = format!("{path}/role");
                c.expect_attrs(&["name"], &rp)?;
                doc.roles.push(c.require("name", &rp)?.to_string());
            }
            "types" => doc.types.types.extend(types_from_element(c, &path)?),
            "activity" => doc.activities.push(activity_from_element(c, &path, warnings)?),
            "behavior" => {
                if doc.behavior.is_some() {
                    return Err(DocumentError::malformed(&path, "more than one <behavior>"));
                }
                doc.behavior = Some(behavior_from_container(c, &format!("{path}/behavior"))?);
            }
            "process" => doc.child_processes.push(process_from_element(c, &path, warnings)?),
            _ => return Err(unexpected(c, &path)),
        }
    }
    if !saw_goal {
        return Err(DocumentError::malformed(&path, "missing <goal>"));
    }
    Ok(doc)
}

pub(crate) fn types_from_element(el: &Element, parent: &str) -> Result<Vec<DataType>, DocumentError> {
    let path = format!("{parent}/types");
    let mut out = Vec::new();
    for t in &el.children {
        if t.name != "type" {
            return Err(unexpected(t, &path));
        }
        let name = t.require("name", &format!("{path}/type"))?.to_string();
        let tpath = format!("{path}/type[{name}]");
        t.expect_attrs(&["name", "kind"], &tpath)?;
        let kind_raw = t.require("kind", &tpath)?;
        let kind = if kind_raw == "record" {
            let mut fields = Vec::new();
            for f in &t.children {
                if f.name != "field" {
                    return Err(unexpected(f, &tpath));
                }
                let fp = format!("{tpath}/field");
                f.expect_attrs(&["name", "type"], &fp)?;
                fields.push(Field {
                    name: f.require("name", &fp)?.to_string(),
                    type_name: f.require("type", &fp)?.to_string(),
                });
            }
            TypeKind::Record(fields)
        } else {
            let k = PrimitiveKind::parse(kind_raw)
                .ok_or_else(|| DocumentError::malformed(&tpath, format!("invalid type kind `{kind_raw}`")))?;
            if let Some(f) = t.children.first() {
                return Err(unexpected(f, &tpath));
            }
            TypeKind::Primitive(k)
        };
        out.push(DataType { name, kind });
    }
    Ok(out)
}

pub(crate) fn parameter_from_element(
    el: &Element,
    direction: Direction,
    parent: &str,
) -> Result<Parameter, DocumentError> {
    let name = el.require("name", &format!("{parent}/{direction}"))?.to_string();
    let path = format!("{parent}/{direction}[{name}]");
    el.expect_attrs(&["name", "type", "concept"], &path)?;
    if let Some(c) = el.children.first() {
        return Err(unexpected(c, &path));
    }
    Ok(Parameter {
        type_name: el.require("type", &path)?.to_string(),
        concept: concept_attr(el, &path)?,
        name,
        direction,
    })
}

fn required_concept(el: &Element, path: &str) -> Result<SemanticConcept, DocumentError> {
    el.expect_attrs(&["concept"], path)?;
    concept_attr(el, path)?.ok_or_else(|| {
        DocumentError::missing_annotation(path, format!("<{}> needs a `concept` attribute", el.name))
    })
}

fn activity_from_element(
    el: &Element,
    parent: &str,
    warnings: &mut Vec<ParseWarning>,
) -> Result<Activity, DocumentError> {
    let id = el.require("id", &format!("{parent}/activity"))?.to_string();
    let path = format!("{parent}/activity[{id}]");
    el.expect_attrs(&["id", "kind", "binding", "role"], &path)?;
    let mut a = Activity::task(id, keyword(el, "binding", &path, Binding::parse)?);
    a.kind = keyword(el, "kind", &path, ActivityKind::parse)?;
    a.role = el.get("role").map(str::to_string);
    for c in &el.children {
        match c.name.as_str() {
            "domain" => a.domain = Some(required_concept(c, &format!("{path}/domain"))?),
            "functionality" => {
                a.functionality = Some(required_concept(c, &format!("{path}/functionality"))?)
            }
            "input" => a.inputs.push(parameter_from_element(c, Direction::Input, &path)?),
            "output" => a.outputs.push(parameter_from_element(c, Direction::Output, &path)?),
            "resource" => {
                let rp = format!("{path}/resource");
                c.expect_attrs(&["name"], &rp)?;
                a.resources.push(Resource {
                    name: c.require("name", &rp)?.to_string(),
                    description: c.text.clone().unwrap_or_default(),
                });
            }
            "event" => {
                let ep = format!("{path}/event");
                c.expect_attrs(&["name", "trigger"], &ep)?;
                a.events.push(Event {
                    name: c.require("name", &ep)?.to_string(),
                    trigger: keyword(c, "trigger", &ep, TriggerKind::parse)?,
                });
            }
            "policy" => {
                if a.policy.is_some() {
                    return Err(DocumentError::malformed(&path, "more than one <policy>"));
                }
                a.policy = Some(policy::from_element(c, &format!("{path}/policy"), warnings)?);
            }
            "activity" => a.children.push(activity_from_element(c, &path, warnings)?),
            "behavior" => {
                if a.child_behavior.is_some() {
                    return Err(DocumentError::malformed(&path, "more than one <behavior>"));
                }
                a.child_behavior = Some(behavior_from_container(c, &format!("{path}/behavior"))?);
            }
            _ => return Err(unexpected(c, &path)),
        }
    }
    Ok(a)
}

/// `<behavior>`, `<branch>` and `<else>` wrap exactly one node.
fn behavior_from_container(el: &Element, path: &str) -> Result<BehaviorNode, DocumentError> {
    match el.children.as_slice() {
        [only] => behavior_from_element(only, path),
        _ => Err(DocumentError::malformed(
            path,
            format!("<{}> must contain exactly one behavior node", el.name),
        )),
    }
}

fn behavior_from_element(el: &Element, parent: &str) -> Result<BehaviorNode, DocumentError> {
    let path = format!("{parent}/{}", el.name);
    match el.name.as_str() {
        "invoke" => {
            el.expect_attrs(&["activity"], &path)?;
            if let Some(c) = el.children.first() {
                return Err(unexpected(c, &path));
            }
            Ok(BehaviorNode::invoke(el.require("activity", &path)?))
        }
        "sequence" | "parallel" => {
            el.expect_attrs(&[], &path)?;
            let children = el
                .children
                .iter()
                .map(|c| behavior_from_element(c, &path))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(if el.name == "sequence" {
                BehaviorNode::Sequence(children)
            } else {
                BehaviorNode::Parallel(children)
            })
        }
        "exclusive" => {
            el.expect_attrs(&[], &path)?;
            let mut branches = Vec::new();
            let mut otherwise = None;
            for c in &el.children {
                match c.name.as_str() {
                    "branch" if otherwise.is_none() => {
                        let bp = format!("{path}/branch");
                        c.expect_attrs(&["condition"], &bp)?;
                        branches.push(Branch {
                            condition: c.require("condition", &bp)?.to_string(),
                            body: behavior_from_container(c, &bp)?,
                        });
                    }
                    "else" if otherwise.is_none() => {
                        let ep = format!("{path}/else");
                        c.expect_attrs(&[], &ep)?;
                        otherwise = Some(Box::new(behavior_from_container(c, &ep)?));
                    }
                    _ => return Err(unexpected(c, &path)),
                }
            }
            Ok(BehaviorNode::Exclusive { branches, otherwise })
        }
        _ => Err(unexpected(el, parent)),
    }
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

pub fn serialize_process(doc: &ProcessDocument) -> String {
    xml::to_string(&process_to_element(doc))
}

fn process_to_element(p: &ProcessDocument) -> Element {
    let mut el = Element::new("process")
        .attr("id", &p.id)
        .attr("name", &p.name)
        .attr("kind", p.kind.as_str())
        .child(Element::new("goal").with_text(&p.goal));
    for r in &p.roles {
        el.push(Element::new("role").attr("name", r));
    }
    if !p.types.types.is_empty() {
        el.push(types_to_element(&p.types));
    }
    for a in &p.activities {
        el.push(activity_to_element(a));
    }
    if let Some(b) = &p.behavior {
        el.push(Element::new("behavior").child(behavior_to_element(b)));
    }
    for c in &p.child_processes {
        el.push(process_to_element(c));
    }
    el
}

pub(crate) fn types_to_element(t: &TypeTable) -> Element {
    let mut el = Element::new("types");
    for dt in &t.types {
        let mut te = Element::new("type").attr("name", &dt.name);
        match &dt.kind {
            TypeKind::Primitive(k) => te = te.attr("kind", k.as_str()),
            TypeKind::Record(fields) => {
                te = te.attr("kind", "record");
                for f in fields {
                    te.push(Element::new("field").attr("name", &f.name).attr("type", &f.type_name));
                }
            }
        }
        el.push(te);
    }
    el
}

pub(crate) fn parameter_to_element(prm: &Parameter) -> Element {
    Element::new(prm.direction.as_str())
        .attr("name", &prm.name)
        .attr("type", &prm.type_name)
        .attr_opt("concept", prm.concept.as_ref().map(|c| c.as_str()))
}

fn activity_to_element(a: &Activity) -> Element {
    let mut el = Element::new("activity")
        .attr("id", &a.id)
        .attr("kind", a.kind.as_str())
        .attr("binding", a.binding.as_str())
        .attr_opt("role", a.role.as_deref());
    if let Some(d) = &a.domain {
        el.push(Element::new("domain").attr("concept", d.as_str()));
    }
    if let Some(f) = &a.functionality {
        el.push(Element::new("functionality").attr("concept", f.as_str()));
    }
    for prm in a.inputs.iter().chain(&a.outputs) {
        el.push(parameter_to_element(prm));
    }
    for r in &a.resources {
        let mut re = Element::new("resource").attr("name", &r.name);
        if !r.description.is_empty() {
            re = re.with_text(&r.description);
        }
        el.push(re);
    }
    for e in &a.events {
        el.push(Element::new("event").attr("name", &e.name).attr("trigger", e.trigger.as_str()));
    }
    if let Some(p) = &a.policy {
        el.push(policy::to_element(p));
    }
    for c in &a.children {
        el.push(activity_to_element(c));
    }
    if let Some(b) = &a.child_behavior {
        el.push(Element::new("behavior").child(behavior_to_element(b)));
    }
    el
}

fn behavior_to_element(n: &BehaviorNode) -> Element {
    match n {
        BehaviorNode::Invoke { activity } => Element::new("invoke").attr("activity", activity),
        BehaviorNode::Sequence(c) | BehaviorNode::Parallel(c) => {
            let mut el = Element::new(n.tag());
            for x in c {
                el.push(behavior_to_element(x));
            }
            el
        }
        BehaviorNode::Exclusive { branches, otherwise } => {
            let mut el = Element::new("exclusive");
            for b in branches {
                el.push(
                    Element::new("branch")
                        .attr("condition", &b.condition)
                        .child(behavior_to_element(&b.body)),
                );
            }
            if let Some(e) = otherwise {
                el.push(Element::new("else").child(behavior_to_element(e)));
            }
            el
        }
    }
}

/// Groups activities by role name; used for reporting.
pub fn activities_by_role(doc: &ProcessDocument) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    fn rec(a: &Activity, inherited: Option<&str>, out: &mut BTreeMap<String, Vec<String>>) {
        let role = a.role.as_deref().or(inherited);
        if let Some(r) = role {
            out.entry(r.to_string()).or_default().push(a.id.clone());
        }
        for c in &a.children {
            rec(c, role, out);
        }
    }
    let sole = (doc.roles.len() == 1).then(|| doc.roles[0].as_str());
    for a in &doc.activities {
        rec(a, sole, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"<process id="p" kind="micro">
  <goal>Do one thing</goal>
  <role name="Clerk"/>
  <activity id="A" kind="task" binding="internal"/>
  <behavior><invoke activity="A"/></behavior>
</process>"#;

    fn minimal() -> ProcessDocument {
        parse_process(MINIMAL.as_bytes()).unwrap()
    }

    fn concept(s: &str) -> SemanticConcept {
        SemanticConcept::new(s).unwrap()
    }

    #[test]
    fn concept_iri_rules() {
        assert!(SemanticConcept::new("http://x.org/o#A").is_ok());
        assert!(SemanticConcept::new("urn://a").is_ok());
        assert!(SemanticConcept::new("").is_err());
        assert!(SemanticConcept::new("http://x.org/a b").is_err());
        assert!(SemanticConcept::new("x.org#A").is_err());
        assert!(SemanticConcept::new("://x").is_err());
        assert!(SemanticConcept::new("1http://x").is_err());
    }

    #[test]
    fn minimal_document_parses() {
        let doc = minimal();
        assert_eq!(doc.activities.len(), 1);
        assert_eq!(doc.behavior, Some(BehaviorNode::invoke("A")));
        assert_eq!(doc.name, "p");
        assert!(validate_process(&doc).is_empty());
    }

    #[test]
    fn missing_invoke_target_is_unresolved() {
        let src = MINIMAL.replace(r#"<invoke activity="A"/>"#, r#"<invoke activity="B"/>"#);
        let err = parse_process(src.as_bytes()).unwrap_err();
        assert!(matches!(err, DocumentError::UnresolvedReference { .. }), "{err}");
        assert!(err.path().contains("behavior/invoke"));
    }

    #[test]
    fn micro_with_two_roles_is_rejected() {
        let src = MINIMAL.replace(r#"<role name="Clerk"/>"#, r#"<role name="Clerk"/><role name="Boss"/>"#);
        let err = parse_process(src.as_bytes()).unwrap_err();
        assert!(matches!(err, DocumentError::InvariantViolation { .. }), "{err}");
    }

    #[test]
    fn syntax_errors_are_malformed() {
        for src in [
            "<process",
            r#"<process id="p" kind="nano"><goal>g</goal></process>"#,
            r#"<process id="p" kind="micro"><goal>g</goal><role name="R"/><lane/></process>"#,
            r#"<process id="p" kind="micro"><role name="R"/></process>"#,
            r#"<flow/>"#,
        ] {
            let err = parse_process(src.as_bytes()).unwrap_err();
            assert!(matches!(err, DocumentError::Malformed { .. }), "{src}: {err}");
        }
    }

    #[test]
    fn task_with_children_is_one_violation() {
        let mut doc = minimal();
        doc.activities[0].children.push(Activity::task("B", Binding::Internal));
        let v = validate_process(&doc);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].message.contains("task must not have child"));
    }

    #[test]
    fn abstract_without_functionality_is_one_violation() {
        let mut doc = minimal();
        let a = &mut doc.activities[0];
        a.binding = Binding::Abstract;
        a.domain = Some(concept("http://ex.org/fin#Finance"));
        let v = validate_process(&doc);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].message.contains("functionality"));
    }

    #[test]
    fn abstract_parameter_needs_concept() {
        let mut doc = minimal();
        let a = &mut doc.activities[0];
        a.binding = Binding::Abstract;
        a.domain = Some(concept("http://ex.org/fin#Finance"));
        a.functionality = Some(concept("http://ex.org/fin#Quote"));
        a.outputs.push(Parameter {
            name: "price".into(),
            direction: Direction::Output,
            type_name: "decimal".into(),
            concept: None,
        });
        let v = validate_process(&doc);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "/process[p]/activity[A]/output[price]");
    }

    #[test]
    fn abstract_subprocess_is_rejected() {
        let mut doc = minimal();
        let a = &mut doc.activities[0];
        a.kind = ActivityKind::Subprocess;
        a.binding = Binding::Abstract;
        a.domain = Some(concept("http://ex.org/fin#Finance"));
        a.functionality = Some(concept("http://ex.org/fin#Quote"));
        a.children.push(Activity::task("B", Binding::Internal));
        let v = validate_process(&doc);
        assert!(v.iter().any(|x| x.message == "only tasks can be abstract"), "{v:?}");
    }

    #[test]
    fn type_rules() {
        let mut doc = minimal();
        doc.types.types = vec![
            DataType {
                name: "A".into(),
                kind: TypeKind::Record(vec![
                    Field { name: "x".into(), type_name: "B".into() },
                    Field { name: "x".into(), type_name: "decimal".into() },
                ]),
            },
            DataType {
                name: "B".into(),
                kind: TypeKind::Record(vec![Field { name: "y".into(), type_name: "A".into() }]),
            },
            DataType { name: "C".into(), kind: TypeKind::Record(vec![Field { name: "z".into(), type_name: "Nope".into() }]) },
        ];
        let v = validate_process(&doc);
        let msgs: Vec<&str> = v.iter().map(|x| x.message.as_str()).collect();
        assert!(msgs.contains(&"duplicate field name"));
        assert!(msgs.contains(&"recursive type definition"));
        assert!(msgs.contains(&"unknown type `Nope`"));
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn double_invoke_is_rejected() {
        let mut doc = minimal();
        doc.behavior = Some(BehaviorNode::Parallel(vec![BehaviorNode::invoke("A"), BehaviorNode::invoke("A")]));
        let v = validate_process(&doc);
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("more than once"));
    }

    #[test]
    fn process_level_nesting_rules() {
        let mut doc = minimal();
        doc.kind = ProcessKind::Macro;
        let mut child = minimal();
        child.id = "q".into();
        child.activities[0].id = "A2".into();
        child.behavior = Some(BehaviorNode::invoke("A2"));
        doc.child_processes.push(child);
        let v = validate_process(&doc);
        assert!(v.iter().any(|x| x.message.contains("a macro process cannot contain a micro process")), "{v:?}");
    }

    const NESTED: &str = r#"<process id="n" name="Nested" kind="micro">
  <goal>Nested abstract work</goal>
  <role name="Ops"/>
  <activity id="Prepare" kind="task" binding="internal"/>
  <activity id="Fulfil" kind="subprocess" binding="internal">
    <activity id="Pick" kind="task" binding="internal"/>
    <activity id="Quote" kind="task" binding="abstract">
      <domain concept="http://ex.org/fin#Finance"/>
      <functionality concept="http://ex.org/fin#Quote"/>
      <output name="price" type="decimal" concept="http://ex.org/fin#Price"/>
    </activity>
    <behavior>
      <sequence>
        <invoke activity="Pick"/>
        <invoke activity="Quote"/>
      </sequence>
    </behavior>
  </activity>
  <behavior>
    <sequence>
      <invoke activity="Prepare"/>
      <invoke activity="Fulfil"/>
    </sequence>
  </behavior>
</process>
"#;

    #[test]
    fn nested_abstract_activity_is_listed() {
        let doc = parse_process(NESTED.as_bytes()).unwrap();
        let ids: Vec<&str> = abstract_activities(&doc).iter().map(|a| a.id.as_str()).collect();
        assert_eq!(ids, ["Quote"]);
        assert!(abstract_activities(&minimal()).is_empty());
    }

    #[test]
    fn nested_document_round_trips_byte_exact() {
        let doc = parse_process(NESTED.as_bytes()).unwrap();
        let text = serialize_process(&doc);
        assert_eq!(text.strip_prefix("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n").unwrap(), NESTED);
        assert_eq!(parse_process(text.as_bytes()).unwrap(), doc);
    }

    #[test]
    fn unreachable_abstract_activity_is_rejected() {
        let src = NESTED.replace("<invoke activity=\"Quote\"/>", "");
        let err = parse_process(src.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("never invoked"), "{err}");
    }

    #[test]
    fn out_of_scope_invoke_is_unresolved() {
        let src = NESTED.replace("<invoke activity=\"Prepare\"/>", "<invoke activity=\"Prepare\"/><invoke activity=\"Pick\"/>");
        let err = parse_process(src.as_bytes()).unwrap_err();
        assert!(matches!(err, DocumentError::UnresolvedReference { .. }));
        assert!(err.to_string().contains("not in scope"));
    }

    #[test]
    fn policy_optional_attribute_is_a_warning() {
        let src = NESTED.replace(
            "<output name=\"price\"",
            "<policy><alternative><assertion name=\"EncryptedParts\" concept=\"http://ex.org/sec#Enc\" optional=\"true\"/></alternative></policy>\n<output name=\"price\"",
        );
        // policy must follow the parameters when serialized, but parsing accepts any order
        let (doc, warnings) = parse_process_with_warnings(src.as_bytes()).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].path.ends_with("policy/alternative[0]/assertion[EncryptedParts]"));
        assert!(abstract_activities(&doc)[0].policy.is_some());
    }
}
