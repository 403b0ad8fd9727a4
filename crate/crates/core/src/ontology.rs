//! Static commonsense store: a single-inheritance class tree with property
//! assertions, queried per entity with nearest-class-wins inheritance.
//!
//! File format (one statement per line, `#` comment lines and blank lines ignored):
//!
//! ```text
//! class <Name> : <ParentName | ROOT:DomainThing | ROOT:DomainPartition | ROOT:DomainTask>
//! attr <ClassName> <attrName> <intrinsic|extrinsic> <str|num|bool|ref> <value>
//! entity <SurfaceForm> -> <ClassName>
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::graph::{EavTuple, PropertyKind, Value};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OntologyError {
    #[error("CYCLE: class `{0}` is its own ancestor")]
    Cycle(String),
    #[error("DUPLICATE: {0}")]
    Duplicate(String),
    #[error("UNRESOLVED: `{0}`")]
    Unresolved(String),
    #[error("ontology line {line}: {message}")]
    Syntax { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RootKind {
    DomainThing,
    DomainPartition,
    DomainTask,
}

impl RootKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RootKind::DomainThing => "DomainThing",
            RootKind::DomainPartition => "DomainPartition",
            RootKind::DomainTask => "DomainTask",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "DomainThing" => Some(RootKind::DomainThing),
            "DomainPartition" => Some(RootKind::DomainPartition),
            "DomainTask" => Some(RootKind::DomainTask),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Parent {
    Root(RootKind),
    Class(String),
}

impl fmt::Display for Parent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parent::Root(kind) => write!(f, "ROOT:{}", kind.as_str()),
            Parent::Class(name) => f.write_str(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyClass {
    pub name: String,
    pub parent: Parent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyAssertion {
    pub class_name: String,
    pub attribute: String,
    pub kind: PropertyKind,
    pub value: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryDiagnostic {
    UnknownEntity,
}

impl fmt::Display for QueryDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("UNKNOWN_ENTITY")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    /// Class the entity resolved to, if any.
    pub class: Option<String>,
    /// Inherited E-A-V tuples, sorted by attribute name.
    pub tuples: Vec<EavTuple>,
    pub diagnostic: Option<QueryDiagnostic>,
}

/// Anything that can answer per-entity E-A-V queries.
pub trait KnowledgeSource {
    fn query(&self, entity: &str) -> QueryResult;
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OntologyStore {
    classes: BTreeMap<String, OntologyClass>,
    /// Per class, keyed by attribute name.
    assertions: BTreeMap<String, BTreeMap<String, PropertyAssertion>>,
    entity_index: BTreeMap<String, String>,
}

fn syntax(line: usize, message: impl Into<String>) -> OntologyError {
    OntologyError::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_value(line: usize, ty: &str, raw: &str) -> Result<Value, OntologyError> {
    match ty {
        "str" => Ok(Value::Str(raw.to_string())),
        "num" => raw
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Value::Num)
            .ok_or_else(|| syntax(line, format!("`{raw}` is not a finite number"))),
        "bool" => match raw {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(syntax(line, format!("`{raw}` is not a boolean"))),
        },
        "ref" => {
            if raw.split_whitespace().count() != 1 {
                return Err(syntax(line, "class reference must be a single name"));
            }
            Ok(Value::Ref(raw.to_string()))
        }
        other => Err(syntax(line, format!("unknown value type `{other}`"))),
    }
}

fn value_type(v: &Value) -> &'static str {
    match v {
        Value::Str(_) => "str",
        Value::Num(_) => "num",
        Value::Bool(_) => "bool",
        Value::Ref(_) => "ref",
    }
}

/// Splits off the first whitespace-delimited word.
fn next_word(s: &str) -> Option<(&str, &str)> {
    let s = s.trim_start();
    if s.is_empty() {
        return None;
    }
    match s.split_once(char::is_whitespace) {
        Some((w, rest)) => Some((w, rest.trim_start())),
        None => Some((s, "")),
    }
}

impl OntologyStore {
    /// Parses and validates an ontology file.
    pub fn load(text: &str) -> Result<Self, OntologyError> {
        let mut store = Self::default();
        let mut attr_lines = Vec::new();
        let mut entity_lines = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let (keyword, rest) = next_word(content).expect("non-empty line");
            match keyword {
                "class" => {
                    let (name, parent) = rest
                        .split_once(':')
                        .map(|(n, p)| (n.trim(), p.trim()))
                        .filter(|(n, p)| {
                            !n.is_empty() && !p.is_empty() && !n.contains(char::is_whitespace)
                        })
                        .ok_or_else(|| syntax(line, "expected `class <Name> : <Parent>`"))?;
                    let parent = match parent.strip_prefix("ROOT:") {
                        Some(kind) => Parent::Root(RootKind::parse(kind.trim()).ok_or_else(|| {
                            syntax(line, format!("unknown root kind `{kind}`"))
                        })?),
                        None => Parent::Class(parent.to_string()),
                    };
                    if store.classes.contains_key(name) {
                        return Err(OntologyError::Duplicate(format!("class `{name}`")));
                    }
                    store.classes.insert(
                        name.to_string(),
                        OntologyClass {
                            name: name.to_string(),
                            parent,
                        },
                    );
                }
                "attr" => {
                    let mut rest = rest;
                    let mut words = [""; 4];
                    for w in &mut words {
                        let (word, tail) = next_word(rest).ok_or_else(|| {
                            syntax(line, "expected `attr <Class> <attr> <kind> <type> <value>`")
                        })?;
                        *w = word;
                        rest = tail;
                    }
                    let [class, attribute, kind, ty] = words;
                    let kind = PropertyKind::parse(kind)
                        .ok_or_else(|| syntax(line, format!("unknown property kind `{kind}`")))?;
                    let raw_value = rest.trim();
                    if raw_value.is_empty() {
                        return Err(syntax(line, "missing attribute value"));
                    }
                    let value = parse_value(line, ty, raw_value)?;
                    attr_lines.push(PropertyAssertion {
                        class_name: class.to_string(),
                        attribute: attribute.to_string(),
                        kind,
                        value,
                    });
                }
                "entity" => {
                    let (surface, class) = rest
                        .split_once("->")
                        .map(|(s, c)| (s.split_whitespace().collect::<Vec<_>>().join(" "), c.trim()))
                        .filter(|(s, c)| !s.is_empty() && !c.is_empty())
                        .ok_or_else(|| syntax(line, "expected `entity <SurfaceForm> -> <Class>`"))?;
                    entity_lines.push((surface, class.to_string()));
                }
                other => return Err(syntax(line, format!("unknown keyword `{other}`"))),
            }
        }

        for class in store.classes.values() {
            if let Parent::Class(p) = &class.parent {
                if !store.classes.contains_key(p) {
                    return Err(OntologyError::Unresolved(p.clone()));
                }
            }
        }
        store.check_acyclic()?;

        for a in attr_lines {
            if !store.classes.contains_key(&a.class_name) {
                return Err(OntologyError::Unresolved(a.class_name));
            }
            if let Value::Ref(target) = &a.value {
                if !store.classes.contains_key(target) {
                    return Err(OntologyError::Unresolved(target.clone()));
                }
            }
            let per_class = store.assertions.entry(a.class_name.clone()).or_default();
            if per_class.contains_key(&a.attribute) {
                return Err(OntologyError::Duplicate(format!(
                    "attribute `{}` on class `{}`",
                    a.attribute, a.class_name
                )));
            }
            per_class.insert(a.attribute.clone(), a);
        }

        for (surface, class) in entity_lines {
            if !store.classes.contains_key(&class) {
                return Err(OntologyError::Unresolved(class));
            }
            if store.entity_index.insert(surface.clone(), class).is_some() {
                return Err(OntologyError::Duplicate(format!("entity `{surface}`")));
            }
        }
        Ok(store)
    }

    fn check_acyclic(&self) -> Result<(), OntologyError> {
        for start in self.classes.keys() {
            let mut seen = BTreeSet::new();
            let mut current = start.as_str();
            loop {
                if !seen.insert(current) {
                    return Err(OntologyError::Cycle(current.to_string()));
                }
                match &self.classes[current].parent {
                    Parent::Root(_) => break,
                    Parent::Class(p) => current = p,
                }
            }
        }
        Ok(())
    }

    /// Canonical text form: classes, then assertions, then entities, each sorted.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for class in self.classes.values() {
            out.push_str(&format!("class {} : {}\n", class.name, class.parent));
        }
        for per_class in self.assertions.values() {
            for a in per_class.values() {
                out.push_str(&format!(
                    "attr {} {} {} {} {}\n",
                    a.class_name,
                    a.attribute,
                    a.kind.as_str(),
                    value_type(&a.value),
                    a.value
                ));
            }
        }
        for (surface, class) in &self.entity_index {
            out.push_str(&format!("entity {surface} -> {class}\n"));
        }
        out
    }

    pub fn classes(&self) -> impl Iterator<Item = &OntologyClass> {
        self.classes.values()
    }

    pub fn class(&self, name: &str) -> Option<&OntologyClass> {
        self.classes.get(name)
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn entity_index(&self) -> &BTreeMap<String, String> {
        &self.entity_index
    }

    /// Assertions made directly on `class` (not inherited).
    pub fn assertions_on(&self, class: &str) -> impl Iterator<Item = &PropertyAssertion> {
        self.assertions.get(class).into_iter().flat_map(|m| m.values())
    }

    /// `class` followed by its ancestors up to the root.
    pub fn ancestors(&self, class: &str) -> Result<Vec<&str>, OntologyError> {
        let mut current = self
            .classes
            .get(class)
            .ok_or_else(|| OntologyError::Unresolved(class.to_string()))?;
        let mut chain = vec![current.name.as_str()];
        while let Parent::Class(p) = &current.parent {
            current = &self.classes[p];
            chain.push(current.name.as_str());
        }
        Ok(chain)
    }

    /// Reflexive: every class is a subclass of itself.
    pub fn is_subclass(&self, child: &str, ancestor: &str) -> Result<bool, OntologyError> {
        if !self.classes.contains_key(ancestor) {
            return Err(OntologyError::Unresolved(ancestor.to_string()));
        }
        Ok(self.ancestors(child)?.contains(&ancestor))
    }

    /// Entity index first, then an exact class-name match.
    pub fn resolve(&self, entity: &str) -> Option<&str> {
        self.entity_index
            .get(entity)
            .map(String::as_str)
            .or_else(|| self.classes.get(entity).map(|c| c.name.as_str()))
    }

    /// Inherited assertions for `entity`, nearest class winning on attribute collisions.
    pub fn query(&self, entity: &str) -> QueryResult {
        let Some(class) = self.resolve(entity) else {
            return QueryResult {
                class: None,
                tuples: Vec::new(),
                diagnostic: Some(QueryDiagnostic::UnknownEntity),
            };
        };
        let mut merged: BTreeMap<&str, &PropertyAssertion> = BTreeMap::new();
        for c in self.ancestors(class).expect("resolved classes exist") {
            for a in self.assertions_on(c) {
                merged.entry(a.attribute.as_str()).or_insert(a);
            }
        }
        let tuples = merged
            .into_values()
            .map(|a| EavTuple {
                entity: entity.to_string(),
                attribute: a.attribute.clone(),
                kind: a.kind,
                value: a.value.clone(),
            })
            .collect();
        QueryResult {
            class: Some(class.to_string()),
            tuples,
            diagnostic: None,
        }
    }
}

impl KnowledgeSource for OntologyStore {
    fn query(&self, entity: &str) -> QueryResult {
        OntologyStore::query(self, entity)
    }
}
