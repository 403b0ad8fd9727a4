mod common;

use std::collections::BTreeSet;

use common::*;
use dynkg::captioner::*;
use dynkg::graph::{EavTuple, EreTuple, KnowledgeGraph, PropertyKind, RelationKind, Value};
use dynkg::metrics::{bleu, rouge_l, EvalPair};
use dynkg::pipeline::segment;
use proptest::prelude::*;

fn entity() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["RobotArm", "CentricMug", "Desk", "ColdWater"]).prop_map(String::from)
}

fn ere() -> impl Strategy<Value = EreTuple> {
    (entity(), prop::sample::select(vec!["hold", "on", "pour"]), any::<bool>(), entity()).prop_map(
        |(s, r, action, o)| {
            let kind = if action { RelationKind::Action } else { RelationKind::Static };
            EreTuple::new(s, r, kind, o).unwrap()
        },
    )
}

fn value() -> impl Strategy<Value = Value> {
    prop_oneof![
        "[a-z \"\\\\]{0,8}".prop_map(Value::Str),
        (-1e6f64..1e6).prop_map(Value::Num),
        any::<bool>().prop_map(Value::Bool),
        "[A-Z][a-z]{1,6}".prop_map(Value::Ref),
    ]
}

fn word() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "c", "d"]).prop_map(String::from)
}

fn pair() -> impl Strategy<Value = (Vec<String>, Vec<Vec<String>>)> {
    (
        prop::collection::vec(word(), 1..7),
        prop::collection::vec(prop::collection::vec(word(), 1..7), 1..3),
    )
}

proptest! {
    #[test]
    fn merge_ere_is_set_union(a in prop::collection::vec(ere(), 0..8), b in prop::collection::vec(ere(), 0..8)) {
        let mut g = KnowledgeGraph::new("c");
        g.merge_ere(&a);
        g.merge_ere(&b);
        g.merge_ere(&a);
        let edges: BTreeSet<_> = g.edges().iter().map(|e| (e.subject.clone(), e.relation.clone(), e.kind, e.object.clone())).collect();
        let want: BTreeSet<_> = a.iter().chain(&b).map(|t| (t.subject.clone(), t.relation.clone(), t.kind, t.object.clone())).collect();
        prop_assert_eq!(edges, want);
        let nodes: BTreeSet<_> = g.nodes().keys().cloned().collect();
        let want_nodes: BTreeSet<_> = a.iter().chain(&b).flat_map(|t| [t.subject.clone(), t.object.clone()]).collect();
        prop_assert_eq!(nodes, want_nodes);
    }

    #[test]
    fn merge_order_does_not_change_json(a in prop::collection::vec(ere(), 0..8)) {
        let mut fwd = KnowledgeGraph::new("c");
        fwd.merge_ere(&a);
        let mut rev = KnowledgeGraph::new("c");
        let reversed: Vec<_> = a.iter().rev().cloned().collect();
        rev.merge_ere(&reversed);
        prop_assert_eq!(fwd.to_json(), rev.to_json());
    }

    #[test]
    fn json_round_trip(edges in prop::collection::vec(ere(), 1..6), attrs in prop::collection::vec(("[a-z]{1,5}", any::<bool>(), value()), 0..6)) {
        let mut g = KnowledgeGraph::new("clip \"x\"");
        g.merge_ere(&edges);
        let target = edges[0].subject.clone();
        g.set_class(&target, "Thing").unwrap();
        let eav: Vec<EavTuple> = attrs
            .into_iter()
            .map(|(a, intrinsic, v)| {
                let kind = if intrinsic { PropertyKind::Intrinsic } else { PropertyKind::Extrinsic };
                EavTuple::new(target.as_str(), a.as_str(), kind, v).unwrap()
            })
            .collect();
        g.merge_eav(&eav).unwrap();
        let text = g.to_json();
        let back = KnowledgeGraph::from_json(&text).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn merge_eav_is_idempotent(v in value()) {
        let mut g = KnowledgeGraph::new("c");
        g.merge_ere(&[EreTuple::new("RobotArm", "hold", RelationKind::Static, "Desk").unwrap()]);
        let t = [EavTuple::new("Desk", "color", PropertyKind::Intrinsic, v).unwrap()];
        g.merge_eav(&t).unwrap();
        let once = g.to_json();
        g.merge_eav(&t).unwrap();
        prop_assert_eq!(g.to_json(), once);
        prop_assert!(g.provenance().is_empty());
    }

    #[test]
    fn segment_matches_enumeration(n in 1usize..40, w in 1usize..12, s in 1usize..12) {
        let stream = FeatureSequence::new("s", (0..n).map(|i| vec![i as f64]).collect()).unwrap();
        match segment(&stream, w, s) {
            Err(_) => prop_assert!(w > n),
            Ok(clips) => {
                let mut starts = Vec::new();
                let mut t = 0;
                while t + w <= n {
                    starts.push(t);
                    t += s;
                }
                prop_assert_eq!(clips.len(), starts.len());
                for (clip, start) in clips.iter().zip(starts) {
                    prop_assert_eq!(clip.clip_id(), format!("s_{start}"));
                    let frames: Vec<f64> = clip.frames().iter().map(|f| f[0]).collect();
                    let want: Vec<f64> = (start..start + w).map(|i| i as f64).collect();
                    prop_assert_eq!(frames, want);
                }
            }
        }
    }

    #[test]
    fn metrics_match_brute_force(raw in prop::collection::vec(pair(), 1..5), n in 1usize..=4) {
        let pairs: Vec<EvalPair> = raw.iter().map(|(h, r)| EvalPair::new(h.clone(), r.clone()).unwrap()).collect();
        let b = bleu(&pairs, n).unwrap();
        prop_assert!((b - brute_bleu(&raw, n)).abs() <= 1e-9);
        prop_assert!((0.0..=1.0).contains(&b));
        let r = rouge_l(&pairs).unwrap();
        prop_assert!((r - brute_rouge_l(&raw)).abs() <= 1e-9);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&r));
    }

    #[test]
    fn lcs_matches_table(a in prop::collection::vec(word(), 0..10), b in prop::collection::vec(word(), 0..10)) {
        prop_assert_eq!(dynkg::metrics::lcs_len(&a, &b), dp_lcs(&a, &b));
    }

    #[test]
    fn sentence_log_prob_is_sum_of_steps(seed in 0u64..500, ids in prop::collection::vec(4usize..7, 0..5)) {
        let dims = ModelDims { vocab_size: 7, embed_size: 3, hidden_size: 4, feature_size: 2, max_len: 15 };
        let model = CaptionModel::with_init_scale(dims, seed, 0.7).unwrap();
        let v = encode(&model, &random_features("c", 3, 2, seed)).unwrap();
        let mut target = ids.clone();
        target.push(EOC);
        let total = sentence_log_prob(&model, &v, &TokenSequence::new(target.clone()).unwrap()).unwrap();

        let mut state = v.to_state();
        let mut prev = SOS;
        let mut want = 0.0;
        for &t in &target {
            let (probs, next) = decode_step(&model, prev, &state).unwrap();
            want += probs[t].ln();
            state = next;
            prev = t;
        }
        prop_assert!((total - want).abs() <= 1e-10);
    }
}

#[test]
fn encoding_depends_on_frame_order() {
    let dims = ModelDims { vocab_size: 5, embed_size: 2, hidden_size: 3, feature_size: 2, max_len: 5 };
    let model = CaptionModel::with_init_scale(dims, 1, 0.5).unwrap();
    let clip = FeatureSequence::new("c", vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let swapped = FeatureSequence::new("c", vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    assert_ne!(encode(&model, &clip).unwrap(), encode(&model, &swapped).unwrap());
}

#[test]
fn encode_matches_scalar_recurrence() {
    let dims = ModelDims { vocab_size: 5, embed_size: 2, hidden_size: 3, feature_size: 4, max_len: 5 };
    let model = CaptionModel::with_init_scale(dims, 9, 0.6).unwrap();
    let clip = random_features("c", 6, 4, 3);
    let (mut h, mut c) = (vec![0.0; 3], vec![0.0; 3]);
    for x in clip.frames() {
        (h, c) = scalar_lstm(&model.params.encoder, x, &h, &c);
    }
    let v = encode(&model, &clip).unwrap();
    for (a, b) in v.h_final.iter().zip(&h).chain(v.c_final.iter().zip(&c)) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn greedy_decode_is_stepwise_argmax() {
    let dims = ModelDims { vocab_size: 8, embed_size: 3, hidden_size: 4, feature_size: 2, max_len: 6 };
    for seed in 0..50 {
        let model = CaptionModel::with_init_scale(dims, seed, 1.5).unwrap();
        let v = encode(&model, &random_features("c", 3, 2, seed)).unwrap();
        let got = decode_greedy(&model, &v).unwrap();
        let mut state = v.to_state();
        let mut prev = SOS;
        let mut want = Vec::new();
        while want.len() < dims.max_len {
            let (probs, next) = decode_step(&model, prev, &state).unwrap();
            let best = (0..probs.len()).fold(0, |b, i| if probs[i] > probs[b] { i } else { b });
            want.push(best);
            if best == EOC {
                break;
            }
            state = next;
            prev = best;
        }
        assert_eq!(got.ids(), want.as_slice());
        assert!(got.len() <= dims.max_len);
    }
}
