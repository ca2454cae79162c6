//! Extraction of functional, non-functional and semantic properties from
//! annotated service descriptions.
//!
//! A service exposes one interface annotated with a business-domain concept;
//! each operation carries a functionality concept and annotated inputs and
//! outputs. A policy may be attached at service scope.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::error::{DocumentError, ParseWarning};
use crate::model::{
    concept_attr, is_identifier, parameter_from_element, parameter_to_element, types_from_element,
    types_to_element, Direction, Parameter, SemanticConcept, TypeTable, Violation,
};
use crate::policy::{self, Policy};
use crate::xml::{self, Element};

pub const SERVICE_FILE_SUFFIX: &str = ".service.xml";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperationDescription {
    pub name: String,
    pub functionality: SemanticConcept,
    pub inputs: Vec<Parameter>,
    pub outputs: Vec<Parameter>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceDescription {
    pub id: String,
    pub endpoint: String,
    pub wsdl_location: String,
    pub interface_name: String,
    pub interface_concept: SemanticConcept,
    pub operations: Vec<OperationDescription>,
    pub types: TypeTable,
    pub policy: Option<Policy>,
}

impl ServiceDescription {
    pub fn operation(&self, name: &str) -> Option<&OperationDescription> {
        self.operations.iter().find(|o| o.name == name)
    }
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", file.display())]
    Parse {
        file: PathBuf,
        #[source]
        source: DocumentError,
    },
    #[error("duplicate service id `{id}` in {} and {}", first.display(), second.display())]
    DuplicateServiceId { id: String, first: PathBuf, second: PathBuf },
}

pub fn parse_service(bytes: &[u8]) -> Result<ServiceDescription, DocumentError> {
    parse_service_with_warnings(bytes).map(|(s, _)| s)
}

pub fn parse_service_with_warnings(bytes: &[u8]) -> Result<(ServiceDescription, Vec<ParseWarning>), DocumentError> {
    let root = xml::parse(bytes)?;
    if root.name != "service" {
        return Err(DocumentError::malformed("/", format!("expected <service>, found <{}>", root.name)));
    }
    let mut warnings = Vec::new();
    let svc = service_from_element(&root, &mut warnings)?;
    if let Some(v) = validate_service(&svc).into_iter().next() {
        return Err(v.into_error());
    }
    Ok((svc, warnings))
}

fn service_from_element(el: &Element, warnings: &mut Vec<ParseWarning>) -> Result<ServiceDescription, DocumentError> {
    let id = el.require("id", "/service")?.to_string();
    let path = format!("/service[{id}]");
    el.expect_attrs(&["id", "endpoint", "wsdl"], &path)?;
    let endpoint = el.require("endpoint", &path)?.to_string();
    let wsdl_location = el.require("wsdl", &path)?.to_string();

    let mut interface = None;
    let mut types = TypeTable::default();
    let mut policy = None;
    for c in &el.children {
        match c.name.as_str() {
            "interface" if interface.is_none() => interface = Some(c),
            "types" => types.types.extend(types_from_element(c, &path)?),
            "policy" if policy.is_none() => {
                policy = Some(policy::from_element(c, &format!("{path}/policy"), warnings)?)
            }
            _ => return Err(DocumentError::malformed(&path, format!("unexpected element <{}>", c.name))),
        }
    }
    let iface = interface.ok_or_else(|| DocumentError::malformed(&path, "missing <interface>"))?;
    let interface_name = iface.require("name", &format!("{path}/interface"))?.to_string();
    let ipath = format!("{path}/interface[{interface_name}]");
    iface.expect_attrs(&["name", "concept"], &ipath)?;
    let interface_concept = concept_attr(iface, &ipath)?
        .ok_or_else(|| DocumentError::missing_annotation(&ipath, "<interface> needs a `concept` attribute"))?;

    let mut operations = Vec::new();
    for op in &iface.children {
        if op.name != "operation" {
            return Err(DocumentError::malformed(&ipath, format!("unexpected element <{}>", op.name)));
        }
        let name = op.require("name", &format!("{ipath}/operation"))?.to_string();
        let opath = format!("{ipath}/operation[{name}]");
        op.expect_attrs(&["name", "concept"], &opath)?;
        let functionality = concept_attr(op, &opath)?
            .ok_or_else(|| DocumentError::missing_annotation(&opath, "<operation> needs a `concept` attribute"))?;
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        for p in &op.children {
            let (dir, list) = match p.name.as_str() {
                "input" => (Direction::Input, &mut inputs),
                "output" => (Direction::Output, &mut outputs),
                _ => return Err(DocumentError::malformed(&opath, format!("unexpected element <{}>", p.name))),
            };
            let prm = parameter_from_element(p, dir, &opath)?;
            if prm.concept.is_none() {
                return Err(DocumentError::missing_annotation(
                    format!("{opath}/{dir}[{}]", prm.name),
                    format!("<{dir}> needs a `concept` attribute"),
                ));
            }
            list.push(prm);
        }
        operations.push(OperationDescription {
            name,
            functionality,
            inputs,
            outputs,
        });
    }
    Ok(ServiceDescription {
        id,
        endpoint,
        wsdl_location,
        interface_name,
        interface_concept,
        operations,
        types,
        policy,
    })
}

/// Invariant violations of a service description, ordered by path.
pub fn validate_service(s: &ServiceDescription) -> Vec<Violation> {
    let path = format!("/service[{}]", s.id);
    let mut out = Vec::new();
    if !is_identifier(&s.id) {
        out.push(Violation::invariant(&path, "service id is not an identifier"));
    }
    if !is_identifier(&s.interface_name) {
        out.push(Violation::invariant(format!("{path}/interface"), "interface name is not an identifier"));
    }
    s.types.validate(&path, &mut out);
    let mut names = HashSet::new();
    for op in &s.operations {
        let opath = format!("{path}/interface[{}]/operation[{}]", s.interface_name, op.name);
        if !is_identifier(&op.name) {
            out.push(Violation::invariant(&opath, "operation name is not an identifier"));
        }
        if !names.insert(op.name.as_str()) {
            out.push(Violation::invariant(&opath, "duplicate operation name"));
        }
        for (list, dir) in [(&op.inputs, Direction::Input), (&op.outputs, Direction::Output)] {
            let mut pnames = HashSet::new();
            for prm in list {
                let ppath = format!("{opath}/{dir}[{}]", prm.name);
                if !pnames.insert(prm.name.as_str()) {
                    out.push(Violation::invariant(&ppath, "duplicate parameter name"));
                }
                if prm.direction != dir {
                    out.push(Violation::invariant(&ppath, "parameter direction does not match its list"));
                }
                if prm.concept.is_none() {
                    out.push(Violation::invariant(&ppath, "service parameter needs a concept"));
                }
                if s.types.resolve(&prm.type_name).is_none() {
                    out.push(Violation::unresolved(&ppath, format!("unknown type `{}`", prm.type_name)));
                }
            }
        }
    }
    if let Some(p) = &s.policy {
        for msg in policy::structural_problems(p) {
            out.push(Violation::invariant(format!("{path}/policy"), msg));
        }
    }
    out.sort();
    out.dedup();
    out
}

pub fn serialize_service(s: &ServiceDescription) -> String {
    xml::to_string(&service_to_element(s))
}

fn service_to_element(s: &ServiceDescription) -> Element {
    let mut iface = Element::new("interface")
        .attr("name", &s.interface_name)
        .attr("concept", s.interface_concept.as_str());
    for op in &s.operations {
        let mut oe = Element::new("operation").attr("name", &op.name).attr("concept", op.functionality.as_str());
        for p in op.inputs.iter().chain(&op.outputs) {
            oe.push(parameter_to_element(p));
        }
        iface.push(oe);
    }
    let mut el = Element::new("service")
        .attr("id", &s.id)
        .attr("endpoint", &s.endpoint)
        .attr("wsdl", &s.wsdl_location)
        .child(iface);
    if !s.types.types.is_empty() {
        el.push(types_to_element(&s.types));
    }
    if let Some(p) = &s.policy {
        el.push(policy::to_element(p));
    }
    el
}

/// Parses every `*.service.xml` in `dir` (non-recursive). The result is
/// sorted by service id; errors are reported for the first failing file in
/// file-name order.
pub fn load_registry(dir: &Path) -> Result<Vec<ServiceDescription>, RegistryError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RegistryError::Io { path, source }
    };
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let path = entry.path();
        let is_service = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.ends_with(SERVICE_FILE_SUFFIX));
        if is_service && path.is_file() {
            files.push(path);
        }
    }
    files.sort();

    let mut loaded: Vec<(ServiceDescription, PathBuf)> = Vec::with_capacity(files.len());
    for file in files {
        let bytes = std::fs::read(&file).map_err(io_err(&file))?;
        let svc = parse_service(&bytes).map_err(|source| RegistryError::Parse {
            file: file.clone(),
            source,
        })?;
        loaded.push((svc, file));
    }
    loaded.sort_by(|a, b| a.0.id.cmp(&b.0.id).then_with(|| a.1.cmp(&b.1)));
    for w in loaded.windows(2) {
        if w[0].0.id == w[1].0.id {
            return Err(RegistryError::DuplicateServiceId {
                id: w[0].0.id.clone(),
                first: w[0].1.clone(),
                second: w[1].1.clone(),
            });
        }
    }
    Ok(loaded.into_iter().map(|(s, _)| s).collect())
}
