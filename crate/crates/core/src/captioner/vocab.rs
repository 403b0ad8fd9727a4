use std::collections::HashMap;

use super::CaptionError;

pub const PAD: usize = 0;
pub const SOS: usize = 1;
pub const EOC: usize = 2;
pub const UNK: usize = 3;

pub const PAD_TOKEN: &str = "<pad>";
pub const SOS_TOKEN: &str = "<sos>";
pub const EOC_TOKEN: &str = "eoc";
pub const UNK_TOKEN: &str = "<unk>";

const RESERVED: [&str; 4] = [PAD_TOKEN, SOS_TOKEN, EOC_TOKEN, UNK_TOKEN];

/// Bijective token ↔ id mapping. Ids 0..4 are reserved for `<pad>`, `<sos>`, `eoc`, `<unk>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, CaptionError> {
        for (id, reserved) in RESERVED.iter().enumerate() {
            if tokens.get(id).map(String::as_str) != Some(*reserved) {
                return Err(CaptionError::InvalidInput(format!(
                    "vocabulary id {id} must be `{reserved}`"
                )));
            }
        }
        let mut ids = HashMap::with_capacity(tokens.len());
        for (id, tok) in tokens.iter().enumerate() {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(CaptionError::InvalidInput(format!(
                    "vocabulary token at id {id} is empty or contains whitespace"
                )));
            }
            if ids.insert(tok.clone(), id).is_some() {
                return Err(CaptionError::InvalidInput(format!("duplicate vocabulary token `{tok}`")));
            }
        }
        Ok(Self { tokens, ids })
    }

    /// Reserved tokens followed by the distinct whitespace-separated words of
    /// `sentences` in first-appearance order.
    pub fn from_sentences<'a>(sentences: impl IntoIterator<Item = &'a str>) -> Self {
        let mut tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        let mut ids: HashMap<String, usize> =
            tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        for sentence in sentences {
            for word in sentence.split_whitespace() {
                if !ids.contains_key(word) {
                    ids.insert(word.to_string(), tokens.len());
                    tokens.push(word.to_string());
                }
            }
        }
        Self { tokens, ids }
    }

    /// One token per line; the 0-based line number is the id.
    pub fn parse(text: &str) -> Result<Self, CaptionError> {
        Self::from_tokens(text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect())
    }

    pub fn to_text(&self) -> String {
        let mut out = self.tokens.join("\n");
        out.push('\n');
        out
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Whitespace-tokenizes `sentence` and appends `eoc`. Every word must be in the vocabulary.
    pub fn encode_sentence(&self, sentence: &str) -> Result<TokenSequence, CaptionError> {
        let mut ids = sentence
            .split_whitespace()
            .map(|w| self.id(w).ok_or_else(|| CaptionError::UnknownToken(w.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        if ids.iter().any(|&id| id < 4) {
            return Err(CaptionError::InvalidInput(
                "training sentences may not contain reserved tokens".into(),
            ));
        }
        ids.push(EOC);
        TokenSequence::new(ids)
    }

    /// Space-joins the tokens of `seq`, leaving out the terminal `eoc`.
    pub fn decode(&self, seq: &TokenSequence) -> String {
        seq.ids()
            .iter()
            .filter(|&&id| id != EOC)
            .map(|&id| self.token(id).unwrap_or(UNK_TOKEN))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Vocabulary ids of one sentence. `eoc` may only appear as the last element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    ids: Vec<usize>,
}

impl TokenSequence {
    pub fn new(ids: Vec<usize>) -> Result<Self, CaptionError> {
        if let Some(pos) = ids.iter().position(|&id| id == EOC) {
            if pos + 1 != ids.len() {
                return Err(CaptionError::InvalidInput("`eoc` may only be the final token".into()));
            }
        }
        Ok(Self { ids })
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Whether the sequence ended by emitting `eoc`.
    pub fn terminated(&self) -> bool {
        self.ids.last() == Some(&EOC)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_layout() {
        let v = Vocabulary::from_sentences(["RobotArm hold CentricMug"]);
        assert_eq!(v.id("<pad>"), Some(PAD));
        assert_eq!(v.id("<sos>"), Some(SOS));
        assert_eq!(v.id("eoc"), Some(EOC));
        assert_eq!(v.id("<unk>"), Some(UNK));
        assert_eq!(v.id("RobotArm"), Some(4));
        assert_eq!(v.len(), 7);
        assert_eq!(Vocabulary::parse(&v.to_text()).unwrap(), v);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(Vocabulary::parse("<pad>\n<sos>\n<unk>\neoc\n").is_err());
        assert!(Vocabulary::parse("<pad>\n<sos>\neoc\n<unk>\nhold\nhold\n").is_err());
        assert!(Vocabulary::parse("<pad>\n<sos>\neoc\n<unk>\n\n").is_err());
    }

    #[test]
    fn encode_and_decode() {
        let v = Vocabulary::from_sentences(["RobotArm pour ColdWater"]);
        let seq = v.encode_sentence("RobotArm pour ColdWater").unwrap();
        assert_eq!(seq.ids(), &[4, 5, 6, EOC]);
        assert!(seq.terminated());
        assert_eq!(v.decode(&seq), "RobotArm pour ColdWater");
        assert!(matches!(
            v.encode_sentence("RobotArm spill ColdWater"),
            Err(CaptionError::UnknownToken(t)) if t == "spill"
        ));
    }

    #[test]
    fn eoc_only_terminal() {
        assert!(TokenSequence::new(vec![4, EOC, 5]).is_err());
        assert!(!TokenSequence::new(vec![4, 5]).unwrap().terminated());
    }
}
