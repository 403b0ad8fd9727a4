//! Clip segmentation and per-clip graph completion, plus the file-level `run`.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use crate::captioner::{
    decode_greedy, encode, read_checkpoint, CaptionError, CaptionModel, FeatureSequence,
    Vocabulary,
};
use crate::graph::{EreTuple, KnowledgeGraph};
use crate::ontology::{KnowledgeSource, OntologyStore, QueryDiagnostic};
use crate::parser::{parse_sentence, Lexicon, ParseDiagnostic};
use crate::Error;

pub const DEFAULT_WINDOW: usize = 30;
pub const DEFAULT_STRIDE: usize = 15;

/// Produces one sentence per clip.
pub trait Captioner: Send + Sync {
    fn caption(&self, clip: &FeatureSequence) -> Result<String, CaptionError>;
}

/// The trained encoder–decoder with its vocabulary.
#[derive(Debug, Clone)]
pub struct Seq2SeqCaptioner {
    pub model: CaptionModel,
    pub vocab: Vocabulary,
}

impl Seq2SeqCaptioner {
    pub fn new(model: CaptionModel, vocab: Vocabulary) -> Result<Self, CaptionError> {
        if model.dims.vocab_size != vocab.len() {
            return Err(CaptionError::Shape {
                operand: "vocabulary".into(),
                expected: model.dims.vocab_size,
                found: vocab.len(),
            });
        }
        Ok(Self { model, vocab })
    }
}

impl Captioner for Seq2SeqCaptioner {
    fn caption(&self, clip: &FeatureSequence) -> Result<String, CaptionError> {
        let v = encode(&self.model, clip)?;
        let tokens = decode_greedy(&self.model, &v)?;
        Ok(self.vocab.decode(&tokens))
    }
}

/// Always returns the same sentence.
#[derive(Debug, Clone)]
pub struct FixedCaptioner(pub String);

impl Captioner for FixedCaptioner {
    fn caption(&self, _clip: &FeatureSequence) -> Result<String, CaptionError> {
        Ok(self.0.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    NoTuple,
    UnknownEntity(String),
}

impl Diagnostic {
    pub fn code(&self) -> &'static str {
        match self {
            Diagnostic::NoTuple => "NO_TUPLE",
            Diagnostic::UnknownEntity(_) => "UNKNOWN_ENTITY",
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Diagnostic::NoTuple => json!({ "code": self.code() }),
            Diagnostic::UnknownEntity(e) => json!({ "code": self.code(), "entity": e }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipResult {
    pub clip_id: String,
    pub caption: String,
    pub tuples: Vec<EreTuple>,
    pub diagnostics: Vec<Diagnostic>,
    pub graph: KnowledgeGraph,
}

/// Sliding windows `[0, W)`, `[S, S + W)`, ...; a trailing partial window is dropped.
/// Clip ids are `<stream id>_<start frame>`.
pub fn segment(
    stream: &FeatureSequence,
    window: usize,
    stride: usize,
) -> Result<Vec<FeatureSequence>, Error> {
    if window == 0 || stride == 0 {
        return Err(Error::InvalidInput("window and stride must be at least 1".into()));
    }
    if window > stream.len() {
        return Err(Error::InvalidInput(format!(
            "window of {window} frames exceeds stream length {}",
            stream.len()
        )));
    }
    Ok((0..=stream.len() - window)
        .step_by(stride)
        .map(|start| stream.window(start, window, format!("{}_{start}", stream.clip_id())))
        .collect())
}

/// Caption → parse → merge E-R-E → query each entity once → merge E-A-V.
pub fn complete_graph<C, K>(
    clip: &FeatureSequence,
    captioner: &C,
    lexicon: &Lexicon,
    onto: &K,
) -> Result<ClipResult, Error>
where
    C: Captioner + ?Sized,
    K: KnowledgeSource + ?Sized,
{
    let clip_id = clip.clip_id().to_string();
    let in_clip = |e: Error| Error::Clip {
        clip_id: clip_id.clone(),
        source: Box::new(e),
    };

    let mut graph = KnowledgeGraph::new(clip_id.clone());
    let mut diagnostics = Vec::new();

    let caption = captioner.caption(clip).map_err(|e| in_clip(e.into()))?;
    let parsed = parse_sentence(&caption, lexicon);
    if parsed.diagnostic == Some(ParseDiagnostic::NoTuple) {
        diagnostics.push(Diagnostic::NoTuple);
    }
    graph.merge_ere(&parsed.tuples);

    let mut seen = HashSet::new();
    let entities = parsed
        .tuples
        .iter()
        .flat_map(|t| [t.subject.as_str(), t.object.as_str()])
        .filter(|e| seen.insert(*e));
    for entity in entities {
        let result = onto.query(entity);
        if result.diagnostic == Some(QueryDiagnostic::UnknownEntity) {
            diagnostics.push(Diagnostic::UnknownEntity(entity.to_string()));
        }
        if let Some(class) = result.class {
            graph.set_class(entity, class).map_err(|e| in_clip(e.into()))?;
        }
        graph.merge_eav(&result.tuples).map_err(|e| in_clip(e.into()))?;
    }

    Ok(ClipResult {
        clip_id,
        caption,
        tuples: parsed.tuples,
        diagnostics,
        graph,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub checkpoint: PathBuf,
    pub vocab: PathBuf,
    pub lexicon: PathBuf,
    pub ontology: PathBuf,
    pub window: usize,
    pub stride: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
}

/// Everything `run` needs, loaded once and shared read-only across clips.
#[derive(Debug, Clone)]
pub struct Resources {
    pub captioner: Seq2SeqCaptioner,
    pub lexicon: Lexicon,
    pub ontology: OntologyStore,
}

pub(crate) fn read_text(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// File stem used as the stream's clip id.
pub fn stream_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "stream".to_string())
}

pub fn load_features(path: &Path) -> Result<FeatureSequence, Error> {
    Ok(FeatureSequence::parse_csv(stream_id(path), &read_text(path)?)?)
}

impl Resources {
    pub fn load(config: &PipelineConfig) -> Result<Self, Error> {
        let bytes = fs::read(&config.checkpoint).map_err(|source| Error::Io {
            path: config.checkpoint.clone(),
            source,
        })?;
        let model = read_checkpoint(bytes.as_slice())?;
        let vocab = Vocabulary::parse(&read_text(&config.vocab)?)?;
        let captioner = Seq2SeqCaptioner::new(model, vocab)?;
        let lexicon = Lexicon::parse(&read_text(&config.lexicon)?)?;
        let ontology = OntologyStore::load(&read_text(&config.ontology)?)?;
        Ok(Self {
            captioner,
            lexicon,
            ontology,
        })
    }
}

fn file_safe(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

#[derive(Debug)]
pub struct RunOutput {
    pub results: Vec<ClipResult>,
    pub manifest: PathBuf,
}

/// Segments the stream, completes every clip and writes `<clip>.json`,
/// `<clip>.dot` and `manifest.json` into the output directory. A stream
/// shorter than one window yields zero clips and an empty manifest.
pub fn run(config: &PipelineConfig, stream_path: &Path) -> Result<RunOutput, Error> {
    if config.window == 0 || config.stride == 0 {
        return Err(Error::InvalidInput("window and stride must be at least 1".into()));
    }
    let resources = Resources::load(config)?;
    let stream = load_features(stream_path)?;
    let model_dim = resources.captioner.model.dims.feature_size;
    if stream.dim() != model_dim {
        return Err(CaptionError::Shape {
            operand: "stream features".into(),
            expected: model_dim,
            found: stream.dim(),
        }
        .into());
    }
    fs::create_dir_all(&config.output_dir).map_err(|source| Error::Io {
        path: config.output_dir.clone(),
        source,
    })?;

    let clips = if stream.len() < config.window {
        Vec::new()
    } else {
        segment(&stream, config.window, config.stride)?
    };
    run_clips(config, &resources, &clips)
}

fn run_clips(
    config: &PipelineConfig,
    resources: &Resources,
    clips: &[FeatureSequence],
) -> Result<RunOutput, Error> {
    let results = clips
        .par_iter()
        .map(|clip| {
            let result = complete_graph(clip, &resources.captioner, &resources.lexicon, &resources.ontology)?;
            let stem = file_safe(&result.clip_id);
            write_file(&config.output_dir.join(format!("{stem}.json")), &result.graph.to_json())?;
            write_file(&config.output_dir.join(format!("{stem}.dot")), &result.graph.to_dot())?;
            Ok(result)
        })
        .collect::<Result<Vec<_>, Error>>()?;

    let manifest = json!({
        "seed": config.seed,
        "window": config.window,
        "stride": config.stride,
        "clips": results.iter().map(|r| {
            let stem = file_safe(&r.clip_id);
            json!({
                "clip_id": r.clip_id,
                "caption": r.caption,
                "tuples": r.tuples.len(),
                "diagnostics": r.diagnostics.iter().map(Diagnostic::to_json).collect::<Vec<_>>(),
                "graph": format!("{stem}.json"),
                "dot": format!("{stem}.dot"),
            })
        }).collect::<Vec<_>>(),
    });
    let manifest_path = config.output_dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_file(&manifest_path, &text)?;

    Ok(RunOutput {
        results,
        manifest: manifest_path,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::RelationKind;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn stream(n: usize) -> FeatureSequence {
        FeatureSequence::new("s", (0..n).map(|i| vec![i as f64]).collect()).unwrap()
    }

    #[test]
    fn segment_examples() {
        let clips = segment(&stream(10), 4, 2).unwrap();
        let starts: Vec<f64> = clips.iter().map(|c| c.frames()[0][0]).collect();
        assert_eq!(starts, vec![0.0, 2.0, 4.0, 6.0]);
        assert_eq!(clips[3].clip_id(), "s_6");
        assert!(clips.iter().all(|c| c.len() == 4));
        assert_eq!(segment(&stream(10), 10, 3).unwrap().len(), 1);
        assert!(matches!(segment(&stream(3), 4, 1), Err(Error::InvalidInput(_))));
        assert!(segment(&stream(3), 0, 1).is_err());
        assert!(segment(&stream(3), 1, 0).is_err());
    }

    fn lexicon() -> Lexicon {
        Lexicon::parse(
            "entity RobotArm\nentity ColdWater\nentity CentricMug\nentity Desk\n\
             relation action pour\nrelation static hold\nrelation static on\n",
        )
        .unwrap()
    }

    fn onto() -> OntologyStore {
        OntologyStore::load(
            "class DomainThing : ROOT:DomainThing\nclass Manipulator : DomainThing\n\
             class Water : DomainThing\nclass Mug : DomainThing\n\
             attr Manipulator hasGripper intrinsic bool true\n\
             attr Water isLiquid intrinsic bool true\n\
             entity RobotArm -> Manipulator\nentity ColdWater -> Water\nentity CentricMug -> Mug\n",
        )
        .unwrap()
    }

    struct Counting<'a> {
        inner: &'a OntologyStore,
        calls: AtomicUsize,
    }

    impl KnowledgeSource for Counting<'_> {
        fn query(&self, entity: &str) -> crate::ontology::QueryResult {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.inner.query(entity)
        }
    }

    #[test]
    fn completes_pour_clip() {
        let r = complete_graph(
            &stream(2),
            &FixedCaptioner("RobotArm pour ColdWater".into()),
            &lexicon(),
            &onto(),
        )
        .unwrap();
        assert_eq!(r.graph.nodes().len(), 2);
        assert_eq!(r.graph.edges().len(), 1);
        assert_eq!(r.graph.edges().iter().next().unwrap().kind, RelationKind::Action);
        assert_eq!(r.graph.node("RobotArm").unwrap().class.as_deref(), Some("Manipulator"));
        assert_eq!(r.graph.node("ColdWater").unwrap().attributes.len(), 1);
        assert!(r.diagnostics.is_empty());
    }

    #[test]
    fn empty_caption_gives_no_tuple() {
        let r = complete_graph(&stream(2), &FixedCaptioner(String::new()), &lexicon(), &onto()).unwrap();
        assert!(r.graph.nodes().is_empty());
        assert_eq!(r.diagnostics, vec![Diagnostic::NoTuple]);
    }

    #[test]
    fn each_entity_queried_once() {
        let store = onto();
        let probe = Counting {
            inner: &store,
            calls: AtomicUsize::new(0),
        };
        let r = complete_graph(
            &stream(2),
            &FixedCaptioner("RobotArm hold CentricMug on Desk".into()),
            &lexicon(),
            &probe,
        )
        .unwrap();
        // RobotArm, CentricMug, Desk
        assert_eq!(probe.calls.load(Ordering::SeqCst), 3);
        assert_eq!(r.diagnostics, vec![Diagnostic::UnknownEntity("Desk".into())]);
        assert_eq!(r.graph.node("Desk").unwrap().class, None);
    }

    #[test]
    fn caption_errors_carry_clip_id() {
        struct Failing;
        impl Captioner for Failing {
            fn caption(&self, _: &FeatureSequence) -> Result<String, CaptionError> {
                Err(CaptionError::InvalidInput("boom".into()))
            }
        }
        let err = complete_graph(&stream(2), &Failing, &lexicon(), &onto()).unwrap_err();
        assert!(matches!(err, Error::Clip { ref clip_id, .. } if clip_id == "s"));
        assert_eq!(err.category(), "invalid-input");
    }

    #[test]
    fn file_names_are_sanitized() {
        assert_eq!(file_safe("clip 1/a"), "clip_1_a");
        assert_eq!(file_safe("s_30"), "s_30");
    }
}
