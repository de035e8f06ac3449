use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// High-level driving intent emitted by the advisor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MetaAction {
    Slow,
    Fast,
    Left,
    Right,
    Idle,
}

impl MetaAction {
    pub const COUNT: usize = 5;
    /// Canonical index order.
    pub const ALL: [MetaAction; 5] = [
        MetaAction::Slow,
        MetaAction::Fast,
        MetaAction::Left,
        MetaAction::Right,
        MetaAction::Idle,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MetaAction::Slow => "SLOW",
            MetaAction::Fast => "FAST",
            MetaAction::Left => "LEFT",
            MetaAction::Right => "RIGHT",
            MetaAction::Idle => "IDLE",
        }
    }

    pub fn one_hot(self) -> [f64; Self::COUNT] {
        let mut v = [0.0; Self::COUNT];
        v[self.index()] = 1.0;
        v
    }

    /// Inverse of [`MetaAction::one_hot`]; rejects anything that is not exactly one-hot.
    pub fn from_one_hot(v: &[f64]) -> Option<Self> {
        if v.len() != Self::COUNT {
            return None;
        }
        let mut hot = None;
        for (i, &x) in v.iter().enumerate() {
            if x == 1.0 {
                if hot.is_some() {
                    return None;
                }
                hot = Some(i);
            } else if x != 0.0 {
                return None;
            }
        }
        hot.and_then(Self::from_index)
    }

    pub fn embedding(self) -> SemanticEmbedding {
        SemanticEmbedding(EMBEDDINGS[self.index()])
    }
}

impl fmt::Display for MetaAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetaAction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == upper)
            .ok_or_else(|| format!("unknown meta-action `{s}`"))
    }
}

/// Fixed embeddings in normalized action coordinates (longitudinal, lateral),
/// indexed like [`MetaAction::ALL`]. Negative lateral means steering left.
pub const EMBEDDINGS: [[f64; 2]; MetaAction::COUNT] = [
    [-1.0, 0.0],
    [1.0, 0.0],
    [0.0, -1.0],
    [0.0, 1.0],
    [0.0, 0.0],
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemanticEmbedding(pub [f64; 2]);

impl SemanticEmbedding {
    pub fn dot(&self, action: [f64; 2]) -> f64 {
        self.0[0] * action[0] + self.0[1] * action[1]
    }
}
