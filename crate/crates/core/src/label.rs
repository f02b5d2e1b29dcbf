//! The three-way annotation scale, its lenient two-way collapse, and the four
//! evaluation tracks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A class set that can be scored by the metrics module.
pub trait ClassLabel: Copy + Eq + fmt::Debug + 'static {
    /// Every class, in canonical column order.
    const ALL: &'static [Self];

    fn name(&self) -> &'static str;

    fn index(&self) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Yes,
    ToSomeExtent,
    No,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Yes, Label::ToSomeExtent, Label::No];

    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Yes => "Yes",
            Label::ToSomeExtent => "To some extent",
            Label::No => "No",
        }
    }

    pub fn index(&self) -> usize {
        match self {
            Label::Yes => 0,
            Label::ToSomeExtent => 1,
            Label::No => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Label::ALL.get(i).copied()
    }

    pub fn to_lenient(self) -> LenientLabel {
        match self {
            Label::Yes | Label::ToSomeExtent => LenientLabel::Positive,
            Label::No => LenientLabel::No,
        }
    }
}

impl ClassLabel for Label {
    const ALL: &'static [Label] = &Label::ALL;

    fn name(&self) -> &'static str {
        self.as_str()
    }

    fn index(&self) -> usize {
        Label::index(self)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Case-sensitive: only the canonical strings are accepted.
impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Yes" => Ok(Label::Yes),
            "To some extent" => Ok(Label::ToSomeExtent),
            "No" => Ok(Label::No),
            other => Err(Error::LabelParse(other.to_string())),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Yes and To some extent merged into a single positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LenientLabel {
    Positive,
    No,
}

impl ClassLabel for LenientLabel {
    const ALL: &'static [LenientLabel] = &[LenientLabel::Positive, LenientLabel::No];

    fn name(&self) -> &'static str {
        match self {
            LenientLabel::Positive => "Positive",
            LenientLabel::No => "No",
        }
    }

    fn index(&self) -> usize {
        match self {
            LenientLabel::Positive => 0,
            LenientLabel::No => 1,
        }
    }
}

impl From<Label> for LenientLabel {
    fn from(label: Label) -> Self {
        label.to_lenient()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Track {
    MistakeIdentification,
    MistakeLocation,
    ProvidingGuidance,
    Actionability,
}

impl Track {
    pub const ALL: [Track; 4] = [
        Track::MistakeIdentification,
        Track::MistakeLocation,
        Track::ProvidingGuidance,
        Track::Actionability,
    ];

    /// Key used in the raw corpus `annotations` object.
    pub fn annotation_key(&self) -> &'static str {
        match self {
            Track::MistakeIdentification => "Mistake_Identification",
            Track::MistakeLocation => "Mistake_Location",
            Track::ProvidingGuidance => "Providing_Guidance",
            Track::Actionability => "Actionability",
        }
    }

    /// Name accepted on the command line and used in TSV files.
    pub fn cli_name(&self) -> &'static str {
        match self {
            Track::MistakeIdentification => "mistake_identification",
            Track::MistakeLocation => "mistake_location",
            Track::ProvidingGuidance => "providing_guidance",
            Track::Actionability => "actionability",
        }
    }

    pub fn display_name(&self) -> &'static str {
        match self {
            Track::MistakeIdentification => "Mistake Identification",
            Track::MistakeLocation => "Mistake Location",
            Track::ProvidingGuidance => "Providing Guidance",
            Track::Actionability => "Actionability",
        }
    }

    pub fn from_annotation_key(key: &str) -> Option<Track> {
        Track::ALL.into_iter().find(|t| t.annotation_key() == key)
    }
}

impl fmt::Display for Track {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

/// Accepts the snake_case CLI name or the raw annotation key.
impl FromStr for Track {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Track::ALL
            .into_iter()
            .find(|t| t.cli_name() == s || t.annotation_key() == s)
            .ok_or_else(|| Error::TrackParse(s.to_string()))
    }
}
