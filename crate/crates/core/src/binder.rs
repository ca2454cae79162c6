//! BPEL-shaped process documents: emission from a process's behavior, and
//! binding of abstract invokes to discovered services.
//!
//! The control tree maps one to one from the behavior tree: sequence to
//! `sequence`, parallel to `flow`, exclusive to `if`/`elseif`/`else`. Invokes
//! of abstract activities carry the `##abstract` partner link until [`bind`]
//! replaces them with concrete ones.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::error::DocumentError;
use crate::matcher::DiscoveryReport;
use crate::model::{Activity, ActivityKind, BehaviorNode, Parameter, ProcessDocument};
use crate::xml::{self, Element};

pub const ABSTRACT_PARTNER_LINK: &str = "##abstract";
pub const ABSTRACT_NAMESPACE: &str = "http://docs.oasis-open.org/wsbpel/2.0/process/abstract";
pub const EXECUTABLE_NAMESPACE: &str = "http://docs.oasis-open.org/wsbpel/2.0/process/executable";
const WSDL_IMPORT_TYPE: &str = "http://schemas.xmlsoap.org/wsdl/";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Import {
    pub namespace: String,
    pub location: String,
}

/// Role links have neither service nor endpoint; bound service links have both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartnerLink {
    pub name: String,
    pub service_id: Option<String>,
    pub endpoint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    /// Space-separated `part:type` pairs, possibly empty.
    pub type_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invoke {
    pub name: String,
    pub partner_link: String,
    pub operation: String,
    pub interface: Option<String>,
    pub input_variable: String,
    pub output_variable: String,
    pub is_abstract: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IfBranch {
    pub condition: String,
    pub body: BpelNode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BpelNode {
    Sequence(Vec<BpelNode>),
    Flow(Vec<BpelNode>),
    If {
        branches: Vec<IfBranch>,
        otherwise: Option<Box<BpelNode>>,
    },
    Invoke(Invoke),
}

impl BpelNode {
    pub fn kind(&self) -> &'static str {
        match self {
            BpelNode::Sequence(_) => "sequence",
            BpelNode::Flow(_) => "flow",
            BpelNode::If { .. } => "if",
            BpelNode::Invoke(_) => "invoke",
        }
    }

    /// Node kinds in pre-order; two trees with equal sequences have the
    /// same shape.
    pub fn kind_sequence(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        self.visit(&mut |n| out.push(n.kind()));
        out
    }

    pub fn invokes(&self) -> Vec<&Invoke> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            if let BpelNode::Invoke(i) = n {
                out.push(i);
            }
        });
        out
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a BpelNode)) {
        f(self);
        match self {
            BpelNode::Sequence(c) | BpelNode::Flow(c) => c.iter().for_each(|n| n.visit(f)),
            BpelNode::If { branches, otherwise } => {
                branches.iter().for_each(|b| b.body.visit(f));
                if let Some(e) = otherwise {
                    e.visit(f);
                }
            }
            BpelNode::Invoke(_) => {}
        }
    }

    fn invokes_mut(&mut self, f: &mut impl FnMut(&mut Invoke) -> Result<(), BindError>) -> Result<(), BindError> {
        match self {
            BpelNode::Sequence(c) | BpelNode::Flow(c) => c.iter_mut().try_for_each(|n| n.invokes_mut(f)),
            BpelNode::If { branches, otherwise } => {
                branches.iter_mut().try_for_each(|b| b.body.invokes_mut(f))?;
                match otherwise {
                    Some(e) => e.invokes_mut(f),
                    None => Ok(()),
                }
            }
            BpelNode::Invoke(i) => f(i),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpelDocument {
    pub process_name: String,
    pub imports: Vec<Import>,
    pub partner_links: Vec<PartnerLink>,
    pub variables: Vec<Variable>,
    pub body: BpelNode,
}

impl BpelDocument {
    pub fn invokes(&self) -> Vec<&Invoke> {
        self.body.invokes()
    }

    pub fn abstract_invokes(&self) -> Vec<&Invoke> {
        self.invokes().into_iter().filter(|i| i.is_abstract).collect()
    }

    pub fn is_abstract(&self) -> bool {
        !self.abstract_invokes().is_empty()
    }

    /// Structural invariants: known partner links, unique variable names and
    /// the sentinel link used exactly by abstract invokes.
    pub fn check(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for v in &self.variables {
            if !seen.insert(v.name.as_str()) {
                problems.push(format!("duplicate variable `{}`", v.name));
            }
        }
        for i in self.invokes() {
            if i.is_abstract != (i.partner_link == ABSTRACT_PARTNER_LINK) {
                problems.push(format!("invoke `{}`: abstract flag disagrees with partner link", i.name));
            }
            if !i.is_abstract && !self.partner_links.iter().any(|p| p.name == i.partner_link) {
                problems.push(format!("invoke `{}`: unknown partner link `{}`", i.name, i.partner_link));
            }
            for var in [&i.input_variable, &i.output_variable] {
                if !seen.contains(var.as_str()) {
                    problems.push(format!("invoke `{}`: undeclared variable `{var}`", i.name));
                }
            }
        }
        problems
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("behavior of `{process}` invokes unknown activity `{activity}`")]
    UnsupportedBehavior { process: String, activity: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BindError {
    #[error("document has no abstract invokes left to bind")]
    AlreadyBound,
    #[error("selection names `{0}`, which is not an abstract invoke of the document")]
    UnknownActivity(String),
    #[error("abstract activity `{0}` has no selected service")]
    UnboundActivity(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectError {
    #[error("rank must be at least 1")]
    InvalidRank,
    #[error("activity `{activity}` has {available} candidate(s), rank {rank} requested")]
    NoCandidate {
        activity: String,
        rank: usize,
        available: usize,
    },
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

struct Emitter {
    partner_links: Vec<PartnerLink>,
    variables: Vec<Variable>,
}

impl Emitter {
    fn node(
        &mut self,
        n: &BehaviorNode,
        scope: &HashMap<&str, &Activity>,
        role: Option<&str>,
        process: &str,
    ) -> Result<BpelNode, EmitError> {
        Ok(match n {
            BehaviorNode::Sequence(c) => BpelNode::Sequence(self.nodes(c, scope, role, process)?),
            BehaviorNode::Parallel(c) => BpelNode::Flow(self.nodes(c, scope, role, process)?),
            BehaviorNode::Exclusive { branches, otherwise } => BpelNode::If {
                branches: branches
                    .iter()
                    .map(|b| {
                        Ok(IfBranch {
                            condition: b.condition.clone(),
                            body: self.node(&b.body, scope, role, process)?,
                        })
                    })
                    .collect::<Result<_, EmitError>>()?,
                otherwise: otherwise
                    .as_ref()
                    .map(|e| self.node(e, scope, role, process).map(Box::new))
                    .transpose()?,
            },
            BehaviorNode::Invoke { activity } => {
                let a = scope.get(activity.as_str()).ok_or_else(|| EmitError::UnsupportedBehavior {
                    process: process.to_string(),
                    activity: activity.clone(),
                })?;
                let role = a.role.as_deref().or(role);
                match (&a.kind, &a.child_behavior) {
                    (ActivityKind::Subprocess, Some(cb)) => {
                        let inner = a.children.iter().map(|c| (c.id.as_str(), c)).collect();
                        self.node(cb, &inner, role, process)?
                    }
                    _ => self.invoke(a, role),
                }
            }
        })
    }

    fn nodes(
        &mut self,
        c: &[BehaviorNode],
        scope: &HashMap<&str, &Activity>,
        role: Option<&str>,
        process: &str,
    ) -> Result<Vec<BpelNode>, EmitError> {
        c.iter().map(|n| self.node(n, scope, role, process)).collect()
    }

    fn invoke(&mut self, a: &Activity, role: Option<&str>) -> BpelNode {
        let partner_link = if a.is_abstract() {
            ABSTRACT_PARTNER_LINK.to_string()
        } else {
            let name = format!("pl_{}", role.unwrap_or("unassigned"));
            if !self.partner_links.iter().any(|p| p.name == name) {
                self.partner_links.push(PartnerLink {
                    name: name.clone(),
                    service_id: None,
                    endpoint: None,
                });
            }
            name
        };
        let input_variable = format!("{}In", a.id);
        let output_variable = format!("{}Out", a.id);
        for (name, params) in [(&input_variable, &a.inputs), (&output_variable, &a.outputs)] {
            self.variables.push(Variable {
                name: name.clone(),
                type_name: message_type(params),
            });
        }
        BpelNode::Invoke(Invoke {
            name: a.id.clone(),
            partner_link,
            operation: a.id.clone(),
            interface: None,
            input_variable,
            output_variable,
            is_abstract: a.is_abstract(),
        })
    }

    fn process(&mut self, p: &ProcessDocument) -> Result<BpelNode, EmitError> {
        let role = (p.roles.len() == 1).then(|| p.roles[0].as_str());
        let scope: HashMap<&str, &Activity> = p.activities.iter().map(|a| (a.id.as_str(), a)).collect();
        let own = match &p.behavior {
            Some(b) => self.node(b, &scope, role, &p.id)?,
            None => BpelNode::Sequence(Vec::new()),
        };
        if p.child_processes.is_empty() {
            return Ok(own);
        }
        let mut seq = vec![own];
        for c in &p.child_processes {
            seq.push(self.process(c)?);
        }
        Ok(BpelNode::Sequence(seq))
    }
}

fn message_type(params: &[Parameter]) -> String {
    params
        .iter()
        .map(|p| format!("{}:{}", p.name, p.type_name))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Maps a valid process document to an abstract BPEL document.
pub fn emit_abstract_bpel(doc: &ProcessDocument) -> Result<BpelDocument, EmitError> {
    let mut e = Emitter {
        partner_links: Vec::new(),
        variables: Vec::new(),
    };
    let body = e.process(doc)?;
    Ok(BpelDocument {
        process_name: doc.id.clone(),
        imports: Vec::new(),
        partner_links: e.partner_links,
        variables: e.variables,
        body,
    })
}

// ---------------------------------------------------------------------------
// Selection and binding
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectedService {
    pub service_id: String,
    pub operation: String,
    pub interface: Option<String>,
    pub endpoint: String,
    pub wsdl_location: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BindingSelection {
    pub entries: BTreeMap<String, SelectedService>,
}

/// Picks the `rank`-th ranked candidate (1 = best) of every activity.
pub fn select_top(report: &DiscoveryReport, rank: usize) -> Result<BindingSelection, SelectError> {
    if rank == 0 {
        return Err(SelectError::InvalidRank);
    }
    let mut entries = BTreeMap::new();
    for a in &report.activities {
        let c = a.ranked.get(rank - 1).ok_or_else(|| SelectError::NoCandidate {
            activity: a.activity_id.clone(),
            rank,
            available: a.ranked.len(),
        })?;
        entries.insert(
            a.activity_id.clone(),
            SelectedService {
                service_id: c.service_id.clone(),
                operation: c.operation_name.clone(),
                interface: Some(c.interface_name.clone()),
                endpoint: c.endpoint.clone(),
                wsdl_location: c.wsdl_location.clone(),
            },
        );
    }
    Ok(BindingSelection { entries })
}

pub fn service_namespace(service_id: &str) -> String {
    format!("urn:service:{service_id}")
}

/// Replaces every abstract invoke with a concrete invocation of its selected
/// service. Nothing but invoke attributes, partner links and imports changes.
pub fn bind(b: &BpelDocument, sel: &BindingSelection) -> Result<BpelDocument, BindError> {
    let abstract_ids: Vec<&str> = b.abstract_invokes().iter().map(|i| i.name.as_str()).collect();
    if abstract_ids.is_empty() {
        return Err(BindError::AlreadyBound);
    }
    if let Some(k) = sel.entries.keys().find(|k| !abstract_ids.contains(&k.as_str())) {
        return Err(BindError::UnknownActivity(k.clone()));
    }
    let mut out = b.clone();
    let mut services: Vec<&SelectedService> = Vec::new();
    out.body.invokes_mut(&mut |i| {
        if !i.is_abstract {
            return Ok(());
        }
        let s = sel
            .entries
            .get(&i.name)
            .ok_or_else(|| BindError::UnboundActivity(i.name.clone()))?;
        i.partner_link = format!("pl_{}", s.service_id);
        i.operation = s.operation.clone();
        i.interface = s.interface.clone();
        i.is_abstract = false;
        if !services.iter().any(|x| x.service_id == s.service_id) {
            services.push(s);
        }
        Ok(())
    })?;
    for s in services {
        let name = format!("pl_{}", s.service_id);
        if !out.partner_links.iter().any(|p| p.name == name) {
            out.partner_links.push(PartnerLink {
                name,
                service_id: Some(s.service_id.clone()),
                endpoint: Some(s.endpoint.clone()),
            });
        }
        let import = Import {
            namespace: service_namespace(&s.service_id),
            location: s.wsdl_location.clone(),
        };
        if !out.imports.contains(&import) {
            out.imports.push(import);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

pub fn serialize_bpel(b: &BpelDocument) -> String {
    let ns = if b.is_abstract() { ABSTRACT_NAMESPACE } else { EXECUTABLE_NAMESPACE };
    let mut root = Element::new("process").attr("name", &b.process_name).attr("xmlns", ns);
    for i in &b.imports {
        root.push(
            Element::new("import")
                .attr("namespace", &i.namespace)
                .attr("location", &i.location)
                .attr("importType", WSDL_IMPORT_TYPE),
        );
    }
    let mut links = Element::new("partnerLinks");
    for p in &b.partner_links {
        links.push(
            Element::new("partnerLink")
                .attr("name", &p.name)
                .attr_opt("service", p.service_id.as_deref())
                .attr_opt("endpoint", p.endpoint.as_deref()),
        );
    }
    root.push(links);
    let mut vars = Element::new("variables");
    for v in &b.variables {
        vars.push(Element::new("variable").attr("name", &v.name).attr("type", &v.type_name));
    }
    root.push(vars);
    root.push(node_to_element(&b.body));
    xml::to_string(&root)
}

fn node_to_element(n: &BpelNode) -> Element {
    match n {
        BpelNode::Sequence(c) => c.iter().fold(Element::new("sequence"), |e, n| e.child(node_to_element(n))),
        BpelNode::Flow(c) => c.iter().fold(Element::new("flow"), |e, n| e.child(node_to_element(n))),
        BpelNode::If { branches, otherwise } => {
            let mut el = Element::new("if");
            for (k, b) in branches.iter().enumerate() {
                let cond = Element::new("condition").with_text(&b.condition);
                if k == 0 {
                    el.push(cond);
                    el.push(node_to_element(&b.body));
                } else {
                    el.push(Element::new("elseif").child(cond).child(node_to_element(&b.body)));
                }
            }
            if let Some(e) = otherwise {
                el.push(Element::new("else").child(node_to_element(e)));
            }
            el
        }
        BpelNode::Invoke(i) => Element::new("invoke")
            .attr("name", &i.name)
            .attr("partnerLink", &i.partner_link)
            .attr("operation", &i.operation)
            .attr_opt("interface", i.interface.as_deref())
            .attr("inputVariable", &i.input_variable)
            .attr("outputVariable", &i.output_variable)
            .attr("abstract", i.is_abstract.to_string()),
    }
}

pub fn parse_bpel(bytes: &[u8]) -> Result<BpelDocument, DocumentError> {
    let root = xml::parse(bytes)?;
    if root.name != "process" {
        return Err(DocumentError::malformed("/", format!("expected <process>, found <{}>", root.name)));
    }
    let path = "/process";
    root.expect_attrs(&["name"], path)?;
    let mut doc = BpelDocument {
        process_name: root.require("name", path)?.to_string(),
        imports: Vec::new(),
        partner_links: Vec::new(),
        variables: Vec::new(),
        body: BpelNode::Sequence(Vec::new()),
    };
    let mut body = None;
    for (i, c) in root.children.iter().enumerate() {
        let p = format!("{path}/{}[{}]", c.name, i + 1);
        match c.name.as_str() {
            "import" => {
                c.expect_attrs(&["namespace", "location", "importType"], &p)?;
                doc.imports.push(Import {
                    namespace: c.require("namespace", &p)?.to_string(),
                    location: c.require("location", &p)?.to_string(),
                });
            }
            "partnerLinks" => {
                for (k, l) in c.children.iter().enumerate() {
                    let lp = format!("{p}/partnerLink[{}]", k + 1);
                    expect_name(l, "partnerLink", &lp)?;
                    l.expect_attrs(&["name", "service", "endpoint"], &lp)?;
                    doc.partner_links.push(PartnerLink {
                        name: l.require("name", &lp)?.to_string(),
                        service_id: l.get("service").map(str::to_string),
                        endpoint: l.get("endpoint").map(str::to_string),
                    });
                }
            }
            "variables" => {
                for (k, v) in c.children.iter().enumerate() {
                    let vp = format!("{p}/variable[{}]", k + 1);
                    expect_name(v, "variable", &vp)?;
                    v.expect_attrs(&["name", "type"], &vp)?;
                    doc.variables.push(Variable {
                        name: v.require("name", &vp)?.to_string(),
                        type_name: v.get("type").unwrap_or_default().to_string(),
                    });
                }
            }
            _ if body.is_none() => body = Some(node_from_element(c, &p)?),
            _ => return Err(DocumentError::malformed(&p, "process has more than one activity")),
        }
    }
    doc.body = body.ok_or_else(|| DocumentError::malformed(path, "process has no activity"))?;
    if let Some(problem) = doc.check().into_iter().next() {
        return Err(DocumentError::InvariantViolation {
            path: path.to_string(),
            message: problem,
        });
    }
    Ok(doc)
}

fn expect_name(el: &Element, name: &str, path: &str) -> Result<(), DocumentError> {
    if el.name == name {
        Ok(())
    } else {
        Err(DocumentError::malformed(path, format!("expected <{name}>, found <{}>", el.name)))
    }
}

fn condition_text(el: &Element, path: &str) -> Result<String, DocumentError> {
    expect_name(el, "condition", path)?;
    el.text
        .clone()
        .filter(|t| !t.is_empty())
        .ok_or_else(|| DocumentError::malformed(path, "empty condition"))
}

fn node_from_element(el: &Element, path: &str) -> Result<BpelNode, DocumentError> {
    let kids = |el: &Element| {
        el.children
            .iter()
            .enumerate()
            .map(|(i, c)| node_from_element(c, &format!("{path}/{}[{}]", c.name, i + 1)))
            .collect::<Result<Vec<_>, _>>()
    };
    match el.name.as_str() {
        "sequence" => Ok(BpelNode::Sequence(kids(el)?)),
        "flow" => Ok(BpelNode::Flow(kids(el)?)),
        "invoke" => {
            el.expect_attrs(
                &["name", "partnerLink", "operation", "interface", "inputVariable", "outputVariable", "abstract"],
                path,
            )?;
            let is_abstract = match el.require("abstract", path)? {
                "true" => true,
                "false" => false,
                other => return Err(DocumentError::malformed(path, format!("abstract must be true or false, got `{other}`"))),
            };
            Ok(BpelNode::Invoke(Invoke {
                name: el.require("name", path)?.to_string(),
                partner_link: el.require("partnerLink", path)?.to_string(),
                operation: el.require("operation", path)?.to_string(),
                interface: el.get("interface").map(str::to_string),
                input_variable: el.require("inputVariable", path)?.to_string(),
                output_variable: el.require("outputVariable", path)?.to_string(),
                is_abstract,
            }))
        }
        "if" => {
            el.expect_attrs(&[], path)?;
            let c = &el.children;
            if c.len() < 2 {
                return Err(DocumentError::malformed(path, "if needs a condition and an activity"));
            }
            let mut branches = vec![IfBranch {
                condition: condition_text(&c[0], &format!("{path}/condition"))?,
                body: node_from_element(&c[1], &format!("{path}/{}[2]", c[1].name))?,
            }];
            let mut otherwise = None;
            for (i, ch) in c.iter().enumerate().skip(2) {
                let p = format!("{path}/{}[{}]", ch.name, i + 1);
                match (ch.name.as_str(), ch.children.as_slice()) {
                    ("elseif", [cond, body]) if otherwise.is_none() => branches.push(IfBranch {
                        condition: condition_text(cond, &format!("{p}/condition"))?,
                        body: node_from_element(body, &format!("{p}/{}", body.name))?,
                    }),
                    ("else", [body]) if otherwise.is_none() => {
                        otherwise = Some(Box::new(node_from_element(body, &format!("{p}/{}", body.name))?))
                    }
                    _ => return Err(DocumentError::malformed(&p, "unexpected element in if")),
                }
            }
            Ok(BpelNode::If { branches, otherwise })
        }
        other => Err(DocumentError::malformed(path, format!("unsupported activity <{other}>"))),
    }
}

pub fn serialize_selection(sel: &BindingSelection) -> String {
    let mut root = Element::new("binding");
    for (activity, s) in &sel.entries {
        root.push(
            Element::new("bind")
                .attr("activity", activity)
                .attr("service", &s.service_id)
                .attr("operation", &s.operation)
                .attr_opt("interface", s.interface.as_deref())
                .attr("endpoint", &s.endpoint)
                .attr("wsdl", &s.wsdl_location),
        );
    }
    xml::to_string(&root)
}

pub fn parse_selection(bytes: &[u8]) -> Result<BindingSelection, DocumentError> {
    let root = xml::parse(bytes)?;
    expect_name(&root, "binding", "/")?;
    root.expect_attrs(&[], "/binding")?;
    let mut sel = BindingSelection::default();
    for (i, b) in root.children.iter().enumerate() {
        let p = format!("/binding/bind[{}]", i + 1);
        expect_name(b, "bind", &p)?;
        b.expect_attrs(&["activity", "service", "operation", "interface", "endpoint", "wsdl"], &p)?;
        let activity = b.require("activity", &p)?.to_string();
        let entry = SelectedService {
            service_id: b.require("service", &p)?.to_string(),
            operation: b.require("operation", &p)?.to_string(),
            interface: b.get("interface").map(str::to_string),
            endpoint: b.require("endpoint", &p)?.to_string(),
            wsdl_location: b.require("wsdl", &p)?.to_string(),
        };
        if sel.entries.insert(activity.clone(), entry).is_some() {
            return Err(DocumentError::InvariantViolation {
                path: p,
                message: format!("activity `{activity}` selected twice"),
            });
        }
    }
    Ok(sel)
}
