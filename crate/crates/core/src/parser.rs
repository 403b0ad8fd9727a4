//! Lexicon-driven tagging of generated sentences and E-R-E tuple extraction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::graph::{EreTuple, RelationKind};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexiconError {
    #[error("lexicon line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("term `{0}` is declared both as entity and as relation")]
    Overlap(String),
    #[error("empty lexicon term")]
    EmptyTerm,
}

/// Closed set of entity and relation surface forms. Terms may span several words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entities: BTreeSet<String>,
    relations: BTreeMap<String, RelationKind>,
    /// Longest term length in words.
    max_words: usize,
}

fn normalize_term(term: &str) -> String {
    term.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_entity(&mut self, term: &str) -> Result<(), LexiconError> {
        let term = normalize_term(term);
        if term.is_empty() {
            return Err(LexiconError::EmptyTerm);
        }
        if self.relations.contains_key(&term) {
            return Err(LexiconError::Overlap(term));
        }
        self.max_words = self.max_words.max(term.split(' ').count());
        self.entities.insert(term);
        Ok(())
    }

    pub fn add_relation(&mut self, term: &str, kind: RelationKind) -> Result<(), LexiconError> {
        let term = normalize_term(term);
        if term.is_empty() {
            return Err(LexiconError::EmptyTerm);
        }
        if self.entities.contains(&term) {
            return Err(LexiconError::Overlap(term));
        }
        self.max_words = self.max_words.max(term.split(' ').count());
        self.relations.insert(term, kind);
        Ok(())
    }

    /// Parses `entity <term>` / `relation <static|action> <term>` lines. Lines
    /// starting with `#` are comments.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut lex = Self::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let syntax = |message: String| LexiconError::Syntax { line, message };
            let (keyword, rest) = content
                .split_once(char::is_whitespace)
                .ok_or_else(|| syntax(format!("expected a term after `{content}`")))?;
            match keyword {
                "entity" => lex.add_entity(rest)?,
                "relation" => {
                    let (kind, term) = rest
                        .trim()
                        .split_once(char::is_whitespace)
                        .ok_or_else(|| syntax("expected `relation <static|action> <term>`".into()))?;
                    let kind = RelationKind::parse(kind)
                        .ok_or_else(|| syntax(format!("unknown relation kind `{kind}`")))?;
                    lex.add_relation(term, kind)?;
                }
                other => return Err(syntax(format!("unknown keyword `{other}`"))),
            }
        }
        Ok(lex)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entities {
            out.push_str(&format!("entity {e}\n"));
        }
        for (r, kind) in &self.relations {
            out.push_str(&format!("relation {} {r}\n", kind.as_str()));
        }
        out
    }

    pub fn is_entity(&self, term: &str) -> bool {
        self.entities.contains(term)
    }

    pub fn relation_kind(&self, term: &str) -> Option<RelationKind> {
        self.relations.get(term).copied()
    }

    pub fn entities(&self) -> impl Iterator<Item = &str> {
        self.entities.iter().map(String::as_str)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, RelationKind)> {
        self.relations.iter().map(|(t, k)| (t.as_str(), *k))
    }

    fn lookup(&self, term: &str) -> Option<Tag> {
        if self.entities.contains(term) {
            Some(Tag::Entity)
        } else {
            self.relations.get(term).map(|k| Tag::Relation(*k))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Entity,
    Relation(RelationKind),
    Other,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tag::Entity => "ENTITY",
            Tag::Relation(_) => "RELATION",
            Tag::Other => "OTHER",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedToken {
    pub surface: String,
    pub tag: Tag,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaggedSentence {
    pub tokens: Vec<TaggedToken>,
}

impl TaggedSentence {
    /// Space-joined surfaces; equals the space-joined output of [`tokenize`].
    pub fn text(&self) -> String {
        self.tokens
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Diagnostic emitted when a sentence yields no tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseDiagnostic {
    NoTuple,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("NO_TUPLE")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseOutcome {
    pub tuples: Vec<EreTuple>,
    pub diagnostic: Option<ParseDiagnostic>,
}

/// PascalCase words (capital first letter plus some lowercase) are entity
/// names and keep their case; everything else is lowercased.
fn is_entity_cased(word: &str) -> bool {
    let mut chars = word.chars();
    chars.next().is_some_and(char::is_uppercase) && chars.any(char::is_lowercase)
}

/// Splits on whitespace, strips trailing punctuation and lowercases non-entity words.
pub fn tokenize(sentence: &str) -> Vec<String> {
    sentence
        .split_whitespace()
        .filter_map(|w| {
            let w = w.trim_end_matches(['.', ',', ';', ':', '!', '?']);
            if w.is_empty() {
                None
            } else if is_entity_cased(w) {
                Some(w.to_string())
            } else {
                Some(w.to_lowercase())
            }
        })
        .collect()
}

/// Greedy longest-match tagging against the lexicon.
pub fn tag(tokens: &[String], lex: &Lexicon) -> TaggedSentence {
    let mut out = Vec::with_capacity(tokens.len());
    let mut pos = 0;
    while pos < tokens.len() {
        let longest = lex.max_words.min(tokens.len() - pos);
        let found = (1..=longest).rev().find_map(|n| {
            let term = tokens[pos..pos + n].join(" ");
            lex.lookup(&term).map(|tag| (n, term, tag))
        });
        match found {
            Some((n, surface, tag)) => {
                out.push(TaggedToken { surface, tag });
                pos += n;
            }
            None => {
                out.push(TaggedToken {
                    surface: tokens[pos].clone(),
                    tag: Tag::Other,
                });
                pos += 1;
            }
        }
    }
    TaggedSentence { tokens: out }
}

/// Extracts every entity–relation–entity run, ignoring `OTHER` tokens.
///
/// Chains share their middle entity: `E1 R1 E2 R2 E3` gives `(E1, R1, E2)`
/// and `(E2, R2, E3)`. A relation not directly preceded and followed by an
/// entity (after dropping `OTHER`) contributes nothing.
pub fn parse_ere(tagged: &TaggedSentence) -> ParseOutcome {
    let mut tuples = Vec::new();
    let mut subject: Option<&str> = None;
    let mut relation: Option<(&str, RelationKind)> = None;

    for tok in &tagged.tokens {
        match tok.tag {
            Tag::Other => {}
            Tag::Entity => {
                if let (Some(s), Some((r, kind))) = (subject, relation) {
                    if let Ok(t) = EreTuple::new(s, r, kind, tok.surface.as_str()) {
                        tuples.push(t);
                    }
                }
                subject = Some(&tok.surface);
                relation = None;
            }
            Tag::Relation(kind) => {
                if subject.is_some() && relation.is_none() {
                    relation = Some((&tok.surface, kind));
                } else {
                    subject = None;
                    relation = None;
                }
            }
        }
    }

    let diagnostic = tuples.is_empty().then_some(ParseDiagnostic::NoTuple);
    ParseOutcome { tuples, diagnostic }
}

/// `tokenize`, `tag` and `parse_ere` in sequence.
pub fn parse_sentence(sentence: &str, lex: &Lexicon) -> ParseOutcome {
    parse_ere(&tag(&tokenize(sentence), lex))
}
