//! Minimal owned element tree shared by every document format in the crate.
//!
//! Parsing goes through `roxmltree`; writing is done here so that every
//! serialized document has the same byte layout: an XML declaration, LF line
//! endings, two-space indentation and attributes in insertion order.

use std::fmt::Write as _;

use crate::error::DocumentError;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Element {
    pub name: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<Element>,
    /// Trimmed character data. Only meaningful on leaf elements.
    pub text: Option<String>,
}

impl Element {
    pub fn new(name: impl Into<String>) -> Self {
        Element {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn attr(mut self, key: &str, value: impl Into<String>) -> Self {
        self.attrs.push((key.to_string(), value.into()));
        self
    }

    pub fn attr_opt(self, key: &str, value: Option<impl Into<String>>) -> Self {
        match value {
            Some(v) => self.attr(key, v),
            None => self,
        }
    }

    pub fn child(mut self, child: Element) -> Self {
        self.children.push(child);
        self
    }

    pub fn push(&mut self, child: Element) {
        self.children.push(child);
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = Some(text.into());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Required attribute lookup; `path` locates the element in error messages.
    pub fn require(&self, key: &str, path: &str) -> Result<&str, DocumentError> {
        self.get(key).ok_or_else(|| {
            DocumentError::malformed(path, format!("<{}> is missing attribute `{key}`", self.name))
        })
    }

    /// Rejects attributes outside `allowed`.
    pub fn expect_attrs(&self, allowed: &[&str], path: &str) -> Result<(), DocumentError> {
        for (k, _) in &self.attrs {
            if !allowed.contains(&k.as_str()) {
                return Err(DocumentError::malformed(
                    path,
                    format!("<{}> has unexpected attribute `{k}`", self.name),
                ));
            }
        }
        Ok(())
    }

    pub fn children_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Element> + 'a {
        self.children.iter().filter(move |c| c.name == name)
    }

    pub fn first_named(&self, name: &str) -> Option<&Element> {
        self.children.iter().find(|c| c.name == name)
    }
}

/// Parses UTF-8 markup into an [`Element`] tree. Namespace declarations are
/// dropped and element names are reduced to their local part.
pub fn parse(bytes: &[u8]) -> Result<Element, DocumentError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| DocumentError::malformed("/", format!("input is not UTF-8: {e}")))?;
    let doc = roxmltree::Document::parse(text)
        .map_err(|e| DocumentError::malformed("/", e.to_string()))?;
    Ok(convert(doc.root_element()))
}

fn convert(node: roxmltree::Node<'_, '_>) -> Element {
    let mut el = Element::new(node.tag_name().name());
    for a in node.attributes() {
        el.attrs.push((a.name().to_string(), a.value().to_string()));
    }
    let mut text = String::new();
    for child in node.children() {
        if child.is_element() {
            el.children.push(convert(child));
        } else if child.is_text() {
            text.push_str(child.text().unwrap_or_default());
        }
    }
    let trimmed = text.trim();
    if !trimmed.is_empty() {
        el.text = Some(trimmed.to_string());
    }
    el
}

/// Serializes `root` as a standalone document.
pub fn to_string(root: &Element) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    write_element(&mut out, root, 0);
    out
}

fn write_element(out: &mut String, el: &Element, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    out.push('<');
    out.push_str(&el.name);
    for (k, v) in &el.attrs {
        let _ = write!(out, " {k}=\"{}\"", escape_attr(v));
    }
    match (&el.text, el.children.is_empty()) {
        (None, true) => out.push_str("/>\n"),
        (Some(t), true) => {
            let _ = writeln!(out, ">{}</{}>", escape_text(t), el.name);
        }
        (text, false) => {
            out.push_str(">\n");
            if let Some(t) = text {
                for _ in 0..=depth {
                    out.push_str("  ");
                }
                out.push_str(&escape_text(t));
                out.push('\n');
            }
            for c in &el.children {
                write_element(out, c, depth + 1);
            }
            for _ in 0..depth {
                out.push_str("  ");
            }
            let _ = writeln!(out, "</{}>", el.name);
        }
    }
}

fn escape_attr(v: &str) -> String {
    let mut s = String::with_capacity(v.len());
    for ch in v.chars() {
        match ch {
            '&' => s.push_str("&amp;"),
            '<' => s.push_str("&lt;"),
            '>' => s.push_str("&gt;"),
            '"' => s.push_str("&quot;"),
            '\n' => s.push_str("&#10;"),
            '\r' => s.push_str("&#13;"),
            '\t' => s.push_str("&#9;"),
            c => s.push(c),
        }
    }
    s
}

fn escape_text(v: &str) -> String {
    let mut s = String::with_capacity(v.len());
    for ch in v.chars() {
        match ch {
            '&' => s.push_str("&amp;"),
            '<' => s.push_str("&lt;"),
            '>' => s.push_str("&gt;"),
            '\r' => s.push_str("&#13;"),
            c => s.push(c),
        }
    }
    s
}
