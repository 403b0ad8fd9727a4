use std::fmt::Write as _;

use super::CaptionError;

/// Ordered frame feature vectors for one clip (or a whole stream before segmentation).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    clip_id: String,
    frames: Vec<Vec<f64>>,
}

impl FeatureSequence {
    pub fn new(clip_id: impl Into<String>, frames: Vec<Vec<f64>>) -> Result<Self, CaptionError> {
        let Some(first) = frames.first() else {
            return Err(CaptionError::InvalidInput("feature sequence has no frames".into()));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(CaptionError::InvalidInput("feature dimension must be at least 1".into()));
        }
        for (t, frame) in frames.iter().enumerate() {
            if frame.len() != dim {
                return Err(CaptionError::Shape {
                    operand: format!("frame {t}"),
                    expected: dim,
                    found: frame.len(),
                });
            }
            if frame.iter().any(|v| !v.is_finite()) {
                return Err(CaptionError::InvalidInput(format!("frame {t} has a non-finite component")));
            }
        }
        Ok(Self {
            clip_id: clip_id.into(),
            frames,
        })
    }

    pub fn clip_id(&self) -> &str {
        &self.clip_id
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    pub fn dim(&self) -> usize {
        self.frames[0].len()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Parses the CSV feature format: a `D=<int>` header, then one frame per line.
    pub fn parse_csv(clip_id: impl Into<String>, text: &str) -> Result<Self, CaptionError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let (_, header) = lines.next().ok_or_else(|| CaptionError::Parse {
            line: 1,
            message: "missing `D=<int>` header".into(),
        })?;
        let dim: usize = header
            .strip_prefix("D=")
            .and_then(|d| d.trim().parse().ok())
            .ok_or_else(|| CaptionError::Parse {
                line: 1,
                message: format!("expected `D=<int>` header, found `{header}`"),
            })?;

        let mut frames = Vec::new();
        for (line, content) in lines {
            let frame = content
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CaptionError::Parse {
                    line,
                    message: e.to_string(),
                })?;
            if frame.len() != dim {
                return Err(CaptionError::Parse {
                    line,
                    message: format!("expected {dim} values, found {}", frame.len()),
                });
            }
            frames.push(frame);
        }
        Self::new(clip_id, frames)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("D={}\n", self.dim());
        for frame in &self.frames {
            let row: Vec<String> = frame.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    /// Contiguous sub-range of frames as a new clip.
    pub fn window(&self, start: usize, len: usize, clip_id: impl Into<String>) -> Self {
        Self {
            clip_id: clip_id.into(),
            frames: self.frames[start..start + len].to_vec(),
        }
    }
}
