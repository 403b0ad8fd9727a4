//! Independent reference implementations used as test oracles. Each one is a
//! direct, unoptimized transcription kept separate from the library code.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use dynkg::captioner::{FeatureSequence, LstmParameters};
use dynkg::graph::{PropertyKind, RelationKind, Value};
use dynkg::ontology::{OntologyStore, Parent, QueryResult};
use dynkg::parser::{parse_sentence, Lexicon, Tag};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn kitchen_ontology() -> OntologyStore {
    OntologyStore::load(&std::fs::read_to_string(fixture("kitchen.onto")).unwrap()).unwrap()
}

pub fn kitchen_lexicon() -> Lexicon {
    Lexicon::parse(&std::fs::read_to_string(fixture("kitchen.lex")).unwrap()).unwrap()
}

pub fn random_features(clip_id: &str, frames: usize, dim: usize, seed: u64) -> FeatureSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..frames)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    FeatureSequence::new(clip_id, data).unwrap()
}

fn scalar_sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Element-by-element LSTM cell: gates in order i, f, g, o.
pub fn scalar_lstm(p: &LstmParameters, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let hidden = h.len();
    let mut h_next = vec![0.0; hidden];
    let mut c_next = vec![0.0; hidden];
    for j in 0..hidden {
        let mut pre = [0.0f64; 4];
        for (gate, z) in pre.iter_mut().enumerate() {
            let mut sum = p.input_bias[gate][j] + p.recurrent_bias[gate][j];
            for (k, xk) in x.iter().enumerate() {
                sum += p.input_weights[gate].get(j, k) * xk;
            }
            for (k, hk) in h.iter().enumerate() {
                sum += p.recurrent_weights[gate].get(j, k) * hk;
            }
            *z = sum;
        }
        let i = scalar_sigmoid(pre[0]);
        let f = scalar_sigmoid(pre[1]);
        let g = pre[2].tanh();
        let o = scalar_sigmoid(pre[3]);
        c_next[j] = f * c[j] + i * g;
        h_next[j] = o * c_next[j].tanh();
    }
    (h_next, c_next)
}

/// Every `ENTITY RELATION ENTITY` window of the tag string with `OTHER` removed.
pub fn window_parse(tags: &[Tag]) -> Vec<(usize, usize, usize)> {
    let kept: Vec<usize> = (0..tags.len()).filter(|&i| tags[i] != Tag::Other).collect();
    let mut out = Vec::new();
    if kept.len() < 3 {
        return out;
    }
    for w in 0..kept.len() - 2 {
        let (a, b, c) = (kept[w], kept[w + 1], kept[w + 2]);
        if tags[a] == Tag::Entity && matches!(tags[b], Tag::Relation(_)) && tags[c] == Tag::Entity {
            out.push((a, b, c));
        }
    }
    out
}

/// Parent-pointer walk from `class` up to its root, inclusive on both ends.
pub fn chain(onto: &OntologyStore, class: &str) -> Vec<String> {
    let mut out = vec![class.to_string()];
    let mut current = class.to_string();
    loop {
        match &onto.class(&current).unwrap().parent {
            Parent::Root(_) => return out,
            Parent::Class(p) => {
                out.push(p.clone());
                current = p.clone();
            }
        }
    }
}

/// Attribute map from walking the chain nearest-first; the first hit for an attribute wins.
pub fn inherited(onto: &OntologyStore, class: &str) -> BTreeMap<String, (PropertyKind, Value)> {
    let mut out = BTreeMap::new();
    for c in chain(onto, class) {
        for a in onto.assertions_on(&c) {
            out.entry(a.attribute.clone()).or_insert((a.kind, a.value.clone()));
        }
    }
    out
}

fn grams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i + n <= tokens.len() {
        out.push(tokens[i..i + n].to_vec());
        i += 1;
    }
    out
}

fn occurrences(list: &[Vec<String>], g: &[String]) -> usize {
    list.iter().filter(|x| x.as_slice() == g).count()
}

/// Corpus BLEU by linear scans; orders with no hypothesis n-grams are left out.
pub fn brute_bleu(pairs: &[(Vec<String>, Vec<Vec<String>>)], max_n: usize) -> f64 {
    let mut hyp_len = 0.0;
    let mut ref_len = 0.0;
    let mut precisions = Vec::new();
    for (hyp, refs) in pairs {
        hyp_len += hyp.len() as f64;
        let mut best = refs[0].len();
        for r in refs {
            let d = (r.len() as i64 - hyp.len() as i64).abs();
            let bd = (best as i64 - hyp.len() as i64).abs();
            if d < bd || (d == bd && r.len() < best) {
                best = r.len();
            }
        }
        ref_len += best as f64;
    }
    for n in 1..=max_n {
        let mut clipped = 0usize;
        let mut total = 0usize;
        for (hyp, refs) in pairs {
            let hg = grams(hyp, n);
            let mut done: Vec<Vec<String>> = Vec::new();
            for g in &hg {
                if done.contains(g) {
                    continue;
                }
                done.push(g.clone());
                let c = occurrences(&hg, g);
                let mut m = 0;
                for r in refs {
                    m = m.max(occurrences(&grams(r, n), g));
                }
                clipped += c.min(m);
                total += c;
            }
        }
        if total > 0 {
            precisions.push(clipped as f64 / total as f64);
        }
    }
    if hyp_len == 0.0 || precisions.contains(&0.0) {
        return 0.0;
    }
    let geo = precisions.iter().map(|p| p.ln()).sum::<f64>() / precisions.len() as f64;
    let bp = if hyp_len < ref_len { (1.0 - ref_len / hyp_len).exp() } else { 1.0 };
    bp * geo.exp()
}

/// LCS by the full dynamic-programming table.
pub fn dp_lcs(a: &[String], b: &[String]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    t[a.len()][b.len()]
}

pub fn brute_rouge_l(pairs: &[(Vec<String>, Vec<Vec<String>>)]) -> f64 {
    let beta2 = 1.2f64 * 1.2;
    let mut sum = 0.0;
    for (hyp, refs) in pairs {
        let ps: Vec<f64> = refs.iter().map(|r| dp_lcs(hyp, r) as f64 / hyp.len() as f64).collect();
        let rs: Vec<f64> = refs.iter().map(|r| dp_lcs(hyp, r) as f64 / r.len() as f64).collect();
        let p = ps.iter().cloned().fold(0.0, f64::max);
        let r = rs.iter().cloned().fold(0.0, f64::max);
        if p > 0.0 && r > 0.0 {
            sum += (1.0 + beta2) * p * r / (r + beta2 * p);
        }
    }
    sum / pairs.len() as f64
}

pub fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

/// Straight-line graph completion for one caption, serialized by hand to the
/// canonical JSON layout.
pub fn transcribed_completion(
    clip_id: &str,
    caption: &str,
    lexicon: &Lexicon,
    query: impl Fn(&str) -> QueryResult,
) -> String {
    // G <- empty graph
    type Attrs = BTreeMap<String, (String, serde_json::Value)>;
    let mut nodes: BTreeMap<String, (Option<String>, Attrs)> = BTreeMap::new();
    let mut edges: Vec<(String, String, String, String)> = Vec::new();

    // T_ere <- PARSE(CAPTION(clip))
    let tuples = parse_sentence(caption, lexicon).tuples;

    // for (e1, r, e2) in T_ere: add nodes e1, e2 and edge e1 -r-> e2
    let mut order: Vec<String> = Vec::new();
    for t in &tuples {
        for e in [&t.subject, &t.object] {
            nodes.entry(e.clone()).or_insert((None, BTreeMap::new()));
            if !order.contains(e) {
                order.push(e.clone());
            }
        }
        let kind = match t.kind {
            RelationKind::Static => "static",
            RelationKind::Action => "action",
        };
        let edge = (t.subject.clone(), t.relation.clone(), kind.to_string(), t.object.clone());
        if !edges.contains(&edge) {
            edges.push(edge);
        }
    }

    // for e in entities(G): for (e, a, v) in KB(e): G[e].a <- v
    for e in &order {
        let r = query(e);
        let node = nodes.get_mut(e).unwrap();
        if let Some(c) = r.class {
            node.0 = Some(c);
        }
        for t in r.tuples {
            let kind = match t.kind {
                PropertyKind::Intrinsic => "intrinsic",
                PropertyKind::Extrinsic => "extrinsic",
            };
            let v = match t.value {
                Value::Str(s) => serde_json::json!(s),
                Value::Num(n) => serde_json::json!(n),
                Value::Bool(b) => serde_json::json!(b),
                Value::Ref(c) => serde_json::json!({ "ref": c }),
            };
            node.1.insert(t.attribute, (kind.to_string(), v));
        }
    }

    edges.sort_by(|a, b| (&a.0, &a.1, a.2 == "action", &a.3).cmp(&(&b.0, &b.1, b.2 == "action", &b.3)));
    let mut json_nodes = serde_json::Map::new();
    for (name, (class, attrs)) in nodes {
        let mut json_attrs = serde_json::Map::new();
        for (a, (kind, v)) in attrs {
            json_attrs.insert(a, serde_json::json!({ "kind": kind, "value": v }));
        }
        json_nodes.insert(name, serde_json::json!({ "attributes": json_attrs, "class": class }));
    }
    let doc = serde_json::json!({
        "clip_id": clip_id,
        "edges": edges.iter().map(|(s, r, k, o)| serde_json::json!({"kind": k, "o": o, "r": r, "s": s})).collect::<Vec<_>>(),
        "nodes": json_nodes,
        "provenance": [],
    });
    let mut out = serde_json::to_string_pretty(&doc).unwrap();
    out.push('\n');
    out
}
