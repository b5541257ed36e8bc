//! Verbal probability scales.
//!
//! Absolute scales map a probability to an adjective ("very unlikely") or a
//! frequency adverb ("very commonly"). Relative scales map the absolute
//! difference between two probabilities to a comparative ("much more likely
//! than"). Both are banded by upper bounds; a band covers
//! `[previous upper, upper)` and the final band ends at 1 inclusive.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_ABSOLUTE: &str = "qiq-default";
pub const DEFAULT_RELATIVE: &str = "qiq-relative";

const DEFAULT_ABSOLUTE_JSON: &str = include_str!("../assets/qiq-default.json");
const DEFAULT_RELATIVE_JSON: &str = include_str!("../assets/qiq-relative.json");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhraseError {
    #[error("scale document: {0}")]
    Syntax(String),
    #[error("scale `{0}` has no bands")]
    Empty(String),
    #[error("scale `{scale}`: band {index} bound {upper} is not above the previous bound")]
    NonMonotone {
        scale: String,
        index: usize,
        upper: f64,
    },
    #[error("scale `{scale}`: bands end at {last}, they must cover up to 1")]
    Coverage { scale: String, last: f64 },
    #[error("scale `{scale}`: band {index} has an empty phrase")]
    EmptyPhrase { scale: String, index: usize },
    #[error("unknown scale `{0}`")]
    UnknownScale(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhraseStyle {
    /// Belief adjectives, used for marginal probabilities.
    Adjective,
    /// Frequency adverbs, used for causal strengths.
    Adverb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsoluteBand {
    pub upper: f64,
    pub adjective: String,
    pub adverb: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointPhrase {
    pub adjective: String,
    pub adverb: String,
}

/// Phrases reserved for probabilities of exactly 0 or exactly 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoints {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero: Option<EndpointPhrase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one: Option<EndpointPhrase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsoluteScale {
    pub name: String,
    pub bands: Vec<AbsoluteBand>,
    #[serde(default)]
    pub exact: Endpoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelativeBand {
    pub upper: f64,
    /// "much" reads as "much more likely than"; the lowest band's phrase
    /// reads symmetrically, "about as" -> "about as likely as".
    pub comparative: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelativeScale {
    pub name: String,
    pub bands: Vec<RelativeBand>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scale {
    Absolute(AbsoluteScale),
    Relative(RelativeScale),
}

impl Scale {
    pub fn name(&self) -> &str {
        match self {
            Scale::Absolute(s) => &s.name,
            Scale::Relative(s) => &s.name,
        }
    }
}

/// Index of the band containing `x` given ascending upper bounds.
fn band_index(uppers: impl Iterator<Item = f64>, x: f64) -> usize {
    let mut last = 0;
    for (i, upper) in uppers.enumerate() {
        if x < upper {
            return i;
        }
        last = i;
    }
    last
}

fn check_bounds(name: &str, uppers: &[f64]) -> Result<(), PhraseError> {
    if uppers.is_empty() {
        return Err(PhraseError::Empty(name.to_string()));
    }
    let mut prev = 0.0;
    for (index, &upper) in uppers.iter().enumerate() {
        if !(upper > prev) || upper > 1.0 {
            return Err(PhraseError::NonMonotone {
                scale: name.to_string(),
                index,
                upper,
            });
        }
        prev = upper;
    }
    if prev != 1.0 {
        return Err(PhraseError::Coverage {
            scale: name.to_string(),
            last: prev,
        });
    }
    Ok(())
}

impl AbsoluteScale {
    pub fn validate(&self) -> Result<(), PhraseError> {
        let uppers: Vec<f64> = self.bands.iter().map(|b| b.upper).collect();
        check_bounds(&self.name, &uppers)?;
        for (index, b) in self.bands.iter().enumerate() {
            if b.adjective.trim().is_empty() || b.adverb.trim().is_empty() {
                return Err(PhraseError::EmptyPhrase {
                    scale: self.name.clone(),
                    index,
                });
            }
        }
        Ok(())
    }

    /// Phrase for `p` in the requested style. Total over [0, 1]; values
    /// outside are clamped.
    pub fn phrase(&self, p: f64, style: PhraseStyle) -> &str {
        fn pick(e: &EndpointPhrase, style: PhraseStyle) -> &str {
            match style {
                PhraseStyle::Adjective => &e.adjective,
                PhraseStyle::Adverb => &e.adverb,
            }
        }
        let p = p.clamp(0.0, 1.0);
        if p == 0.0 {
            if let Some(e) = &self.exact.zero {
                return pick(e, style);
            }
        }
        if p == 1.0 {
            if let Some(e) = &self.exact.one {
                return pick(e, style);
            }
        }
        let band = &self.bands[self.band(p)];
        match style {
            PhraseStyle::Adjective => &band.adjective,
            PhraseStyle::Adverb => &band.adverb,
        }
    }

    /// Band index of `p`, ignoring the endpoint phrases.
    pub fn band(&self, p: f64) -> usize {
        band_index(self.bands.iter().map(|b| b.upper), p)
    }
}

impl RelativeScale {
    pub fn validate(&self) -> Result<(), PhraseError> {
        let uppers: Vec<f64> = self.bands.iter().map(|b| b.upper).collect();
        check_bounds(&self.name, &uppers)?;
        for (index, b) in self.bands.iter().enumerate() {
            if b.comparative.trim().is_empty() {
                return Err(PhraseError::EmptyPhrase {
                    scale: self.name.clone(),
                    index,
                });
            }
        }
        Ok(())
    }

    /// Band index of the difference `|p1 - p2|`.
    pub fn band(&self, p1: f64, p2: f64) -> usize {
        band_index(self.bands.iter().map(|b| b.upper), (p1 - p2).abs())
    }

    /// "about as likely as", "much more likely than", "slightly less likely than"...
    pub fn phrase(&self, p1: f64, p2: f64) -> String {
        let band = self.band(p1, p2);
        let comparative = &self.bands[band].comparative;
        if band == 0 {
            format!("{comparative} likely as")
        } else if p1 > p2 {
            format!("{comparative} more likely than")
        } else {
            format!("{comparative} less likely than")
        }
    }
}

/// Parses and validates a scale document.
pub fn load_scale(text: &str) -> Result<Scale, PhraseError> {
    let scale: Scale =
        serde_json::from_str(text).map_err(|e| PhraseError::Syntax(e.to_string()))?;
    match &scale {
        Scale::Absolute(s) => s.validate()?,
        Scale::Relative(s) => s.validate()?,
    }
    Ok(scale)
}

pub fn default_absolute() -> AbsoluteScale {
    match load_scale(DEFAULT_ABSOLUTE_JSON) {
        Ok(Scale::Absolute(s)) => s,
        _ => unreachable!("bundled absolute scale is valid"),
    }
}

pub fn default_relative() -> RelativeScale {
    match load_scale(DEFAULT_RELATIVE_JSON) {
        Ok(Scale::Relative(s)) => s,
        _ => unreachable!("bundled relative scale is valid"),
    }
}

/// Named scales. Populated at load time and read-only afterwards.
#[derive(Debug, Clone)]
pub struct ScaleRegistry {
    absolute: BTreeMap<String, AbsoluteScale>,
    relative: BTreeMap<String, RelativeScale>,
}

impl Default for ScaleRegistry {
    fn default() -> Self {
        let mut reg = ScaleRegistry {
            absolute: BTreeMap::new(),
            relative: BTreeMap::new(),
        };
        reg.register(Scale::Absolute(default_absolute()));
        reg.register(Scale::Relative(default_relative()));
        reg
    }
}

impl ScaleRegistry {
    pub fn register(&mut self, scale: Scale) {
        match scale {
            Scale::Absolute(s) => {
                self.absolute.insert(s.name.clone(), s);
            }
            Scale::Relative(s) => {
                self.relative.insert(s.name.clone(), s);
            }
        }
    }

    pub fn load(&mut self, text: &str) -> Result<String, PhraseError> {
        let scale = load_scale(text)?;
        let name = scale.name().to_string();
        self.register(scale);
        Ok(name)
    }

    pub fn absolute(&self, name: &str) -> Result<&AbsoluteScale, PhraseError> {
        self.absolute
            .get(name)
            .ok_or_else(|| PhraseError::UnknownScale(name.to_string()))
    }

    pub fn relative(&self, name: &str) -> Result<&RelativeScale, PhraseError> {
        self.relative
            .get(name)
            .ok_or_else(|| PhraseError::UnknownScale(name.to_string()))
    }

    pub fn has(&self, name: &str) -> bool {
        self.absolute.contains_key(name) || self.relative.contains_key(name)
    }

    pub fn scales(&self) -> Vec<Scale> {
        self.absolute
            .values()
            .cloned()
            .map(Scale::Absolute)
            .chain(self.relative.values().cloned().map(Scale::Relative))
            .collect()
    }
}

/// Which scales to use and whether numbers accompany phrases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseOptions {
    pub scale: String,
    pub relative_scale: String,
    /// Absolute scale per variable name, overriding `scale`.
    #[serde(default)]
    pub overrides: BTreeMap<String, String>,
    pub show_numbers: bool,
}

impl Default for PhraseOptions {
    fn default() -> Self {
        PhraseOptions {
            scale: DEFAULT_ABSOLUTE.to_string(),
            relative_scale: DEFAULT_RELATIVE.to_string(),
            overrides: BTreeMap::new(),
            show_numbers: true,
        }
    }
}

impl PhraseOptions {
    /// The absolute scale in force for `variable`.
    pub fn absolute_for<'r>(
        &self,
        registry: &'r ScaleRegistry,
        variable: &str,
    ) -> Result<&'r AbsoluteScale, PhraseError> {
        let name = self.overrides.get(variable).unwrap_or(&self.scale);
        registry.absolute(name)
    }

    pub fn relative<'r>(&self, registry: &'r ScaleRegistry) -> Result<&'r RelativeScale, PhraseError> {
        registry.relative(&self.relative_scale)
    }

    /// Fails if any referenced scale is missing.
    pub fn validate(&self, registry: &ScaleRegistry) -> Result<(), PhraseError> {
        registry.absolute(&self.scale)?;
        registry.relative(&self.relative_scale)?;
        for name in self.overrides.values() {
            registry.absolute(name)?;
        }
        Ok(())
    }
}
