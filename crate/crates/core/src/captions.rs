//! Caption text for synthetic and pass-through records, and the fixed
//! zero-shot query strings.
//!
//! Positive grammar (single template, invertible):
//!
//! ```text
//! there is <extent> <noun> in <location> wall. This image is from <level> level.
//! ```
//!
//! Negative form:
//!
//! ```text
//! there is no hyperenhancement in the myocardium. This image is from <level> level.
//! ```

use serde::{Deserialize, Serialize};

use crate::anatomy::{Extent, SliceLevel, WallLocation};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::rng::UniformSource;
use crate::synth::ScarSpec;

pub const POSITIVE_QUERY: &str = "there is hyperenhancement in the myocardium";
pub const NEGATIVE_QUERY: &str = "there is no hyperenhancement in the myocardium";

/// Interchangeable names for the enhancement, drawn uniformly.
pub const ENHANCEMENT_NOUNS: [&str; 5] = [
    "delayed enhancement",
    "delayed hyperenhancement",
    "late enhancement",
    "scar",
    "infarct",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caption {
    pub text: String,
    pub label: Label,
    pub level: SliceLevel,
    pub spec: Option<ScarSpec>,
}

/// The sentence that places a slice along the long axis.
pub fn slice_suffix(level: SliceLevel) -> String {
    format!("This image is from {level} level.")
}

/// `text` followed by the slice sentence, e.g. for encoding a query.
pub fn with_slice_suffix(text: &str, level: SliceLevel) -> String {
    format!("{text}. {}", slice_suffix(level))
}

pub fn inference_queries() -> (&'static str, &'static str) {
    (POSITIVE_QUERY, NEGATIVE_QUERY)
}

/// Both queries with the slice sentence appended.
pub fn suffixed_inference_queries(level: SliceLevel) -> (String, String) {
    (
        with_slice_suffix(POSITIVE_QUERY, level),
        with_slice_suffix(NEGATIVE_QUERY, level),
    )
}

pub fn render_positive(spec: &ScarSpec, noun: &str) -> String {
    format!(
        "there is {} {} in {} wall. {}",
        spec.extent,
        noun,
        spec.location,
        slice_suffix(spec.level)
    )
}

/// Fill the positive template; one draw picks the enhancement noun.
pub fn generate_positive_caption<R: UniformSource + ?Sized>(spec: &ScarSpec, rng: &mut R) -> Caption {
    let noun = ENHANCEMENT_NOUNS[rng.index(ENHANCEMENT_NOUNS.len())];
    Caption {
        text: render_positive(spec, noun),
        label: Label::Positive,
        level: spec.level,
        spec: Some(*spec),
    }
}

/// The negative statement never consumes a draw; the generator argument
/// keeps both caption paths interchangeable.
pub fn generate_negative_caption<R: UniformSource + ?Sized>(level: SliceLevel, _rng: &mut R) -> Caption {
    negative_caption(level)
}

pub fn negative_caption(level: SliceLevel) -> Caption {
    Caption {
        text: with_slice_suffix(NEGATIVE_QUERY, level),
        label: Label::Negative,
        level,
        spec: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParsedCaption {
    Positive(ScarSpec),
    Negative(SliceLevel),
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::CaptionParse {
            position: self.pos,
            message: message.into(),
        })
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn literal(&mut self, lit: &str) -> Result<()> {
        if self.rest().starts_with(lit) {
            self.pos += lit.len();
            Ok(())
        } else {
            self.fail(format!("expected {lit:?}"))
        }
    }

    /// Longest candidate that prefixes the remaining text.
    fn one_of<T: Copy>(&mut self, what: &str, options: &[(&str, T)]) -> Result<T> {
        let hit = options
            .iter()
            .filter(|(s, _)| self.rest().starts_with(s))
            .max_by_key(|(s, _)| s.len());
        match hit {
            Some((s, v)) => {
                self.pos += s.len();
                Ok(*v)
            }
            None => self.fail(format!("expected {what}")),
        }
    }
}

/// Invert the caption grammar.
pub fn parse_caption(text: &str) -> Result<ParsedCaption> {
    let mut cur = Cursor { text, pos: 0 };
    cur.literal("there is ")?;

    let levels: Vec<(&str, SliceLevel)> = SliceLevel::ALL.iter().map(|l| (l.as_str(), *l)).collect();
    let parse_suffix = |cur: &mut Cursor| -> Result<SliceLevel> {
        cur.literal(". This image is from ")?;
        let level = cur.one_of("a slice level", &levels)?;
        cur.literal(" level.")?;
        if !cur.rest().is_empty() {
            return cur.fail("trailing text after the slice sentence");
        }
        Ok(level)
    };

    if cur.rest().starts_with("no ") {
        cur.literal("no hyperenhancement in the myocardium")?;
        return Ok(ParsedCaption::Negative(parse_suffix(&mut cur)?));
    }

    let extents: Vec<(&str, Extent)> = Extent::ALL.iter().map(|e| (e.as_str(), *e)).collect();
    let extent = cur.one_of("a scar extent", &extents)?;
    cur.literal(" ")?;
    let nouns: Vec<(&str, ())> = ENHANCEMENT_NOUNS.iter().map(|n| (*n, ())).collect();
    cur.one_of("an enhancement noun", &nouns)?;
    cur.literal(" in ")?;
    let tokens: Vec<(String, WallLocation)> = WallLocation::all().into_iter().map(|l| (l.token(), l)).collect();
    let options: Vec<(&str, WallLocation)> = tokens.iter().map(|(t, l)| (t.as_str(), *l)).collect();
    let location = cur.one_of("a wall location", &options)?;
    cur.literal(" wall")?;
    let level = parse_suffix(&mut cur)?;
    Ok(ParsedCaption::Positive(ScarSpec {
        location,
        extent,
        level,
    }))
}
