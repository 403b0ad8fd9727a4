//! Canonical JSON form of a [`KnowledgeGraph`].
//!
//! ```json
//! {
//!   "clip_id": "stream_0",
//!   "edges": [{"kind": "action", "o": "ColdWater", "r": "pour", "s": "RobotArm"}],
//!   "nodes": {
//!     "ColdWater": {"attributes": {"hasTemperature": {"kind": "extrinsic", "value": {"ref": "Cold"}}},
//!                   "class": "Water"}
//!   },
//!   "provenance": []
//! }
//! ```
//!
//! Object keys are sorted, edges are sorted by `(s, r, kind, o)`, and attribute
//! values are JSON strings, numbers, booleans, or `{"ref": <class>}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    Attribute, EavTuple, Edge, EreTuple, GraphError, KnowledgeGraph, Node, PropertyKind,
    ProvenanceRecord, RelationKind, Value,
};

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum JsonValue {
    Ref {
        #[serde(rename = "ref")]
        class: String,
    },
    Bool(bool),
    Num(f64),
    Str(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonAttribute {
    kind: String,
    value: JsonValue,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonNode {
    attributes: BTreeMap<String, JsonAttribute>,
    class: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonEdge {
    kind: String,
    o: String,
    r: String,
    s: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonProvenance {
    attribute: String,
    current: JsonAttribute,
    entity: String,
    previous: JsonAttribute,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonGraph {
    clip_id: String,
    edges: Vec<JsonEdge>,
    nodes: BTreeMap<String, JsonNode>,
    provenance: Vec<JsonProvenance>,
}

fn value_out(v: &Value) -> JsonValue {
    match v {
        Value::Str(s) => JsonValue::Str(s.clone()),
        Value::Num(n) => JsonValue::Num(*n),
        Value::Bool(b) => JsonValue::Bool(*b),
        Value::Ref(c) => JsonValue::Ref { class: c.clone() },
    }
}

fn value_in(v: JsonValue) -> Value {
    match v {
        JsonValue::Str(s) => Value::Str(s),
        JsonValue::Num(n) => Value::Num(n),
        JsonValue::Bool(b) => Value::Bool(b),
        JsonValue::Ref { class } => Value::Ref(class),
    }
}

fn attribute_out(a: &Attribute) -> JsonAttribute {
    JsonAttribute {
        kind: a.kind.as_str().to_string(),
        value: value_out(&a.value),
    }
}

fn attribute_in(a: JsonAttribute) -> Result<Attribute, GraphError> {
    let kind = PropertyKind::parse(&a.kind)
        .ok_or_else(|| GraphError::Invalid(format!("unknown property kind `{}`", a.kind)))?;
    Ok(Attribute {
        kind,
        value: value_in(a.value),
    })
}

/// JSON value for one attribute value, in the same encoding the graph file uses.
pub fn value_to_json(v: &Value) -> serde_json::Value {
    serde_json::to_value(value_out(v)).expect("attribute values always serialize")
}

pub fn ere_tuples_to_json(tuples: &[EreTuple]) -> serde_json::Value {
    serde_json::Value::Array(
        tuples
            .iter()
            .map(|t| {
                serde_json::json!({
                    "s": t.subject, "r": t.relation, "kind": t.kind.as_str(), "o": t.object
                })
            })
            .collect(),
    )
}

pub fn eav_tuples_to_json(tuples: &[EavTuple]) -> serde_json::Value {
    serde_json::Value::Array(
        tuples
            .iter()
            .map(|t| {
                serde_json::json!({
                    "e": t.entity,
                    "a": t.attribute,
                    "kind": t.kind.as_str(),
                    "v": value_to_json(&t.value),
                })
            })
            .collect(),
    )
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

impl KnowledgeGraph {
    /// Canonical pretty-printed JSON, newline-terminated. Byte-stable for equal graphs.
    pub fn to_json(&self) -> String {
        let doc = JsonGraph {
            clip_id: self.clip_id.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| JsonEdge {
                    kind: e.kind.as_str().to_string(),
                    o: e.object.clone(),
                    r: e.relation.clone(),
                    s: e.subject.clone(),
                })
                .collect(),
            nodes: self
                .nodes
                .iter()
                .map(|(name, n)| {
                    let node = JsonNode {
                        attributes: n
                            .attributes
                            .iter()
                            .map(|(k, a)| (k.clone(), attribute_out(a)))
                            .collect(),
                        class: n.class.clone(),
                    };
                    (name.clone(), node)
                })
                .collect(),
            provenance: self
                .provenance
                .iter()
                .map(|p| JsonProvenance {
                    attribute: p.attribute.clone(),
                    current: attribute_out(&p.current),
                    entity: p.entity.clone(),
                    previous: attribute_out(&p.previous),
                })
                .collect(),
        };
        // Going through `serde_json::Value` sorts every object's keys.
        let value = serde_json::to_value(doc).expect("graph always serializes");
        let mut out = serde_json::to_string_pretty(&value).expect("graph always serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let doc: JsonGraph = serde_json::from_str(text).map_err(|e| GraphError::Json {
            offset: byte_offset(text, e.line(), e.column()),
            message: e.to_string(),
        })?;

        let mut graph = KnowledgeGraph::new(doc.clip_id);
        for (name, n) in doc.nodes {
            let attributes = n
                .attributes
                .into_iter()
                .map(|(k, a)| Ok((k, attribute_in(a)?)))
                .collect::<Result<_, GraphError>>()?;
            graph.nodes.insert(
                name,
                Node {
                    class: n.class,
                    attributes,
                },
            );
        }
        for e in doc.edges {
            let kind = RelationKind::parse(&e.kind)
                .ok_or_else(|| GraphError::Invalid(format!("unknown relation kind `{}`", e.kind)))?;
            let edge = Edge {
                subject: e.s,
                relation: e.r,
                kind,
                object: e.o,
            };
            if !graph.edges.insert(edge) {
                return Err(GraphError::Invalid("duplicate edge".into()));
            }
        }
        for p in doc.provenance {
            graph.provenance.push(ProvenanceRecord {
                entity: p.entity,
                attribute: p.attribute,
                previous: attribute_in(p.previous)?,
                current: attribute_in(p.current)?,
            });
        }
        graph.validate()?;
        Ok(graph)
    }
}
