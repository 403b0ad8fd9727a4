//! Dynamic knowledge graph: entity nodes, relation edges and attribute decorations.

mod dot;
mod json;

pub use json::{eav_tuples_to_json, ere_tuples_to_json, value_to_json};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    /// An E-A-V tuple names an entity that has no node yet.
    #[error("DANGLING_EAV: entity `{0}` is not a node of the graph")]
    DanglingEav(String),
    #[error("malformed graph JSON at byte {offset}: {message}")]
    Json { offset: usize, message: String },
    #[error("invalid graph: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationKind {
    Static,
    Action,
}

impl RelationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Static => "static",
            RelationKind::Action => "action",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "static" => Some(RelationKind::Static),
            "action" => Some(RelationKind::Action),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PropertyKind {
    Intrinsic,
    Extrinsic,
}

impl PropertyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PropertyKind::Intrinsic => "intrinsic",
            PropertyKind::Extrinsic => "extrinsic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "intrinsic" => Some(PropertyKind::Intrinsic),
            "extrinsic" => Some(PropertyKind::Extrinsic),
            _ => None,
        }
    }
}

/// Typed literal or a reference to an ontology class.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Str(String),
    Num(f64),
    Bool(bool),
    Ref(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => f.write_str(s),
            Value::Num(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Ref(c) => write!(f, "{c}"),
        }
    }
}

/// Entity–relation–entity tuple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EreTuple {
    pub subject: String,
    pub relation: String,
    pub kind: RelationKind,
    pub object: String,
}

impl EreTuple {
    pub fn new(
        subject: impl Into<String>,
        relation: impl Into<String>,
        kind: RelationKind,
        object: impl Into<String>,
    ) -> Result<Self, GraphError> {
        let t = Self {
            subject: subject.into(),
            relation: relation.into(),
            kind,
            object: object.into(),
        };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<(), GraphError> {
        if self.subject.is_empty() || self.relation.is_empty() || self.object.is_empty() {
            return Err(GraphError::Invalid("E-R-E tuple has an empty field".into()));
        }
        if self.subject == self.relation || self.object == self.relation {
            return Err(GraphError::Invalid(format!(
                "relation `{}` coincides with an entity",
                self.relation
            )));
        }
        Ok(())
    }
}

/// Entity–attribute–value tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct EavTuple {
    pub entity: String,
    pub attribute: String,
    pub kind: PropertyKind,
    pub value: Value,
}

impl EavTuple {
    pub fn new(
        entity: impl Into<String>,
        attribute: impl Into<String>,
        kind: PropertyKind,
        value: Value,
    ) -> Result<Self, GraphError> {
        let t = Self {
            entity: entity.into(),
            attribute: attribute.into(),
            kind,
            value,
        };
        if t.entity.is_empty() || t.attribute.is_empty() {
            return Err(GraphError::Invalid("E-A-V tuple has an empty entity or attribute".into()));
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    pub kind: PropertyKind,
    pub value: Value,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Node {
    pub class: Option<String>,
    pub attributes: BTreeMap<String, Attribute>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub subject: String,
    pub relation: String,
    pub kind: RelationKind,
    pub object: String,
}

impl From<&EreTuple> for Edge {
    fn from(t: &EreTuple) -> Self {
        Self {
            subject: t.subject.clone(),
            relation: t.relation.clone(),
            kind: t.kind,
            object: t.object.clone(),
        }
    }
}

/// Record of an attribute value being overwritten by a later merge.
#[derive(Debug, Clone, PartialEq)]
pub struct ProvenanceRecord {
    pub entity: String,
    pub attribute: String,
    pub previous: Attribute,
    pub current: Attribute,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    pub clip_id: String,
    nodes: BTreeMap<String, Node>,
    edges: BTreeSet<Edge>,
    provenance: Vec<ProvenanceRecord>,
}

impl KnowledgeGraph {
    pub fn new(clip_id: impl Into<String>) -> Self {
        Self {
            clip_id: clip_id.into(),
            nodes: BTreeMap::new(),
            edges: BTreeSet::new(),
            provenance: Vec::new(),
        }
    }

    pub fn nodes(&self) -> &BTreeMap<String, Node> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn provenance(&self) -> &[ProvenanceRecord] {
        &self.provenance
    }

    pub fn node(&self, entity: &str) -> Option<&Node> {
        self.nodes.get(entity)
    }

    /// Adds subject/object nodes as needed and inserts one edge per distinct tuple.
    pub fn merge_ere(&mut self, tuples: &[EreTuple]) {
        for t in tuples {
            self.nodes.entry(t.subject.clone()).or_default();
            self.nodes.entry(t.object.clone()).or_default();
            self.edges.insert(Edge::from(t));
        }
    }

    /// Attaches attributes to existing nodes. Fails without modifying the graph
    /// if any tuple names an entity that is not a node.
    pub fn merge_eav(&mut self, tuples: &[EavTuple]) -> Result<(), GraphError> {
        if let Some(t) = tuples.iter().find(|t| !self.nodes.contains_key(&t.entity)) {
            return Err(GraphError::DanglingEav(t.entity.clone()));
        }
        for t in tuples {
            let node = self.nodes.get_mut(&t.entity).expect("checked above");
            let incoming = Attribute {
                kind: t.kind,
                value: t.value.clone(),
            };
            match node.attributes.get(&t.attribute) {
                Some(existing) if *existing == incoming => {}
                Some(existing) => {
                    self.provenance.push(ProvenanceRecord {
                        entity: t.entity.clone(),
                        attribute: t.attribute.clone(),
                        previous: existing.clone(),
                        current: incoming.clone(),
                    });
                    node.attributes.insert(t.attribute.clone(), incoming);
                }
                None => {
                    node.attributes.insert(t.attribute.clone(), incoming);
                }
            }
        }
        Ok(())
    }

    /// Records the ontology class an entity node resolved to.
    pub fn set_class(&mut self, entity: &str, class: impl Into<String>) -> Result<(), GraphError> {
        let node = self
            .nodes
            .get_mut(entity)
            .ok_or_else(|| GraphError::DanglingEav(entity.to_string()))?;
        node.class = Some(class.into());
        Ok(())
    }

    /// Checks that every edge endpoint is a node and no field is empty.
    pub fn validate(&self) -> Result<(), GraphError> {
        for e in &self.edges {
            for end in [&e.subject, &e.object] {
                if !self.nodes.contains_key(end) {
                    return Err(GraphError::Invalid(format!("edge endpoint `{end}` is not a node")));
                }
            }
            if e.relation.is_empty() {
                return Err(GraphError::Invalid("edge with empty relation".into()));
            }
        }
        for (name, node) in &self.nodes {
            if name.is_empty() {
                return Err(GraphError::Invalid("node with empty name".into()));
            }
            if node.attributes.keys().any(String::is_empty) {
                return Err(GraphError::Invalid(format!("node `{name}` has an empty attribute name")));
            }
        }
        Ok(())
    }
}
