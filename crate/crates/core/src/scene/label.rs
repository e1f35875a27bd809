use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Closed vocabulary of spatial relations, expressed in the camera frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationLabel {
    Left,
    Right,
    Front,
    #[serde(alias = "behind")]
    Back,
    Near,
    #[serde(alias = "top")]
    On,
    Beneath,
    In,
    OutOf,
    Between,
}

impl RelationLabel {
    pub const ALL: [RelationLabel; 10] = [
        RelationLabel::Left,
        RelationLabel::Right,
        RelationLabel::Front,
        RelationLabel::Back,
        RelationLabel::Near,
        RelationLabel::On,
        RelationLabel::Beneath,
        RelationLabel::In,
        RelationLabel::OutOf,
        RelationLabel::Between,
    ];

    /// The label seen from the anchor's side of the pair.
    pub fn inverse(self) -> Self {
        use RelationLabel::*;
        match self {
            Left => Right,
            Right => Left,
            Front => Back,
            Back => Front,
            On => Beneath,
            Beneath => On,
            In => OutOf,
            OutOf => In,
            Near => Near,
            Between => Between,
        }
    }

    pub fn as_str(self) -> &'static str {
        use RelationLabel::*;
        match self {
            Left => "left",
            Right => "right",
            Front => "front",
            Back => "back",
            Near => "near",
            On => "on",
            Beneath => "beneath",
            In => "in",
            OutOf => "out_of",
            Between => "between",
        }
    }

    /// `on` and `in` carry the subject's weight on the anchor.
    pub fn is_support(self) -> bool {
        matches!(self, RelationLabel::On | RelationLabel::In)
    }

    /// `beneath` and `out_of` are support relations read from the supporter.
    pub fn is_inverse_support(self) -> bool {
        matches!(self, RelationLabel::Beneath | RelationLabel::OutOf)
    }

    pub fn is_horizontal(self) -> bool {
        use RelationLabel::*;
        matches!(self, Left | Right | Front | Back)
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown relation {0:?}")]
pub struct UnknownRelation(pub String);

impl FromStr for RelationLabel {
    type Err = UnknownRelation;

    /// Case-insensitive; accepts the `top` and `behind` spellings.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use RelationLabel::*;
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        Ok(match norm.as_str() {
            "left" => Left,
            "right" => Right,
            "front" => Front,
            "back" | "behind" => Back,
            "near" => Near,
            "on" | "top" | "on_top" => On,
            "beneath" | "below" | "under" => Beneath,
            "in" | "inside" => In,
            "out_of" | "outof" => OutOf,
            "between" => Between,
            _ => return Err(UnknownRelation(s.to_string())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_is_an_involution() {
        for r in RelationLabel::ALL {
            assert_eq!(r.inverse().inverse(), r);
        }
        assert_eq!(RelationLabel::Near.inverse(), RelationLabel::Near);
        assert_eq!(RelationLabel::Between.inverse(), RelationLabel::Between);
    }

    #[test]
    fn aliases_canonicalize() {
        assert_eq!("top".parse::<RelationLabel>().unwrap(), RelationLabel::On);
        assert_eq!("Behind".parse::<RelationLabel>().unwrap(), RelationLabel::Back);
        assert_eq!("out of".parse::<RelationLabel>().unwrap(), RelationLabel::OutOf);
        assert!("sideways".parse::<RelationLabel>().is_err());
        for r in RelationLabel::ALL {
            assert_eq!(r.as_str().parse::<RelationLabel>().unwrap(), r);
        }
    }

    #[test]
    fn serde_accepts_aliases() {
        let r: RelationLabel = serde_json::from_str("\"top\"").unwrap();
        assert_eq!(r, RelationLabel::On);
        assert_eq!(serde_json::to_string(&RelationLabel::OutOf).unwrap(), "\"out_of\"");
    }
}
