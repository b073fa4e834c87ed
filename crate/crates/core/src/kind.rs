use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// What the wizard sends for a trial: the correct label or one of four error types.
///
/// Variant order is significant: it is the fixed tie-break order used when
/// recommending and apportioning error kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionKind {
    Correct,
    /// The input was mis-segmented, so the model labelled the wrong region.
    Segmentation,
    /// A wrong label that is plausibly related to the correct one.
    Similarity,
    /// A wrong label with no apparent relation to the correct one.
    Wild,
    /// The model produced no prediction at all.
    NoRecognition,
}

impl PredictionKind {
    pub const ALL: [PredictionKind; 5] = [
        PredictionKind::Correct,
        PredictionKind::Segmentation,
        PredictionKind::Similarity,
        PredictionKind::Wild,
        PredictionKind::NoRecognition,
    ];

    pub const ERRORS: [PredictionKind; 4] = [
        PredictionKind::Segmentation,
        PredictionKind::Similarity,
        PredictionKind::Wild,
        PredictionKind::NoRecognition,
    ];

    pub fn is_error(self) -> bool {
        self != PredictionKind::Correct
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PredictionKind::Correct => "correct",
            PredictionKind::Segmentation => "segmentation",
            PredictionKind::Similarity => "similarity",
            PredictionKind::Wild => "wild",
            PredictionKind::NoRecognition => "no_recognition",
        }
    }

    /// Position within [`PredictionKind::ERRORS`], `None` for `Correct`.
    pub fn error_index(self) -> Option<usize> {
        match self {
            PredictionKind::Correct => None,
            PredictionKind::Segmentation => Some(0),
            PredictionKind::Similarity => Some(1),
            PredictionKind::Wild => Some(2),
            PredictionKind::NoRecognition => Some(3),
        }
    }
}

impl fmt::Display for PredictionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown prediction kind `{0}`")]
pub struct UnknownKind(pub String);

impl FromStr for PredictionKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PredictionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownKind(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_variants_four_errors() {
        assert_eq!(PredictionKind::ALL.len(), 5);
        assert_eq!(PredictionKind::ERRORS.iter().filter(|k| k.is_error()).count(), 4);
        assert!(!PredictionKind::Correct.is_error());
    }

    #[test]
    fn string_round_trip() {
        for k in PredictionKind::ALL {
            assert_eq!(k.as_str().parse::<PredictionKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.as_str()));
        }
        assert!("ping".parse::<PredictionKind>().is_err());
    }

    #[test]
    fn ordering_is_tie_break_order() {
        let mut v = vec![
            PredictionKind::NoRecognition,
            PredictionKind::Wild,
            PredictionKind::Correct,
            PredictionKind::Similarity,
            PredictionKind::Segmentation,
        ];
        v.sort();
        assert_eq!(v, PredictionKind::ALL);
    }
}
