//! Free-text plan → meta-action parser.

use serde::{Deserialize, Serialize};

use super::meta::{MetaAction, SemanticEmbedding};

/// Keyword table. Multi-word entries match consecutive tokens.
pub const SYNONYMS: &[(MetaAction, &[&str])] = &[
    (
        MetaAction::Slow,
        &["slow", "brake", "decelerate", "yield", "stop", "reduce", "ease off", "hold back", "wait"],
    ),
    (MetaAction::Fast, &["fast", "accelerate", "speed up", "increase speed", "quick", "pick up"]),
    (MetaAction::Left, &["left", "turn left"]),
    (MetaAction::Right, &["right", "turn right"]),
    (MetaAction::Idle, &["keep", "maintain", "idle", "continue", "stay", "straight"]),
];

/// Tie-break order when several meta-actions are mentioned.
pub const PRIORITY: [MetaAction; 5] = [
    MetaAction::Slow,
    MetaAction::Left,
    MetaAction::Right,
    MetaAction::Fast,
    MetaAction::Idle,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conversion {
    pub meta: MetaAction,
    pub embedding: SemanticEmbedding,
    /// No keyword matched; `meta` is the IDLE fallback.
    pub unparsed: bool,
}

/// Light suffix stripping so inflections ("braking", "slower", "yielding") hit their keyword.
fn stem(word: &str) -> String {
    const SUFFIXES: [&str; 5] = ["ing", "ed", "er", "ly", "s"];
    let mut w = word.to_string();
    loop {
        let Some(suffix) = SUFFIXES.iter().find(|s| w.ends_with(**s) && w.len() - s.len() >= 3) else {
            break;
        };
        w.truncate(w.len() - suffix.len());
    }
    if w.len() > 3 && w.ends_with('e') {
        w.pop();
    }
    w
}

fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(stem)
        .collect()
}

fn mentions(tokens: &[String], phrase: &str) -> bool {
    let needle: Vec<String> = phrase.split(' ').map(stem).collect();
    tokens.windows(needle.len()).any(|w| w == needle.as_slice())
}

/// Parses a natural-language plan. Total: unmatched text yields IDLE with `unparsed` set.
pub fn convert(plan_text: &str) -> Conversion {
    let toks = tokens(plan_text);
    let matched = |meta: MetaAction| {
        SYNONYMS
            .iter()
            .filter(|(m, _)| *m == meta)
            .flat_map(|(_, words)| words.iter())
            .any(|w| mentions(&toks, w))
    };
    match PRIORITY.into_iter().find(|&m| matched(m)) {
        Some(meta) => Conversion {
            meta,
            embedding: meta.embedding(),
            unparsed: false,
        },
        None => Conversion {
            meta: MetaAction::Idle,
            embedding: MetaAction::Idle.embedding(),
            unparsed: true,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_keyword() {
        let c = convert("slow down and yield to the pedestrian");
        assert_eq!(c.meta, MetaAction::Slow);
        assert_eq!(c.embedding.0, [-1.0, 0.0]);
        assert!(!c.unparsed);
    }

    #[test]
    fn priority_left_over_fast() {
        let c = convert("accelerate, then turn left");
        assert_eq!(c.meta, MetaAction::Left);
        assert_eq!(c.embedding.0, [0.0, -1.0]);
    }

    #[test]
    fn unmatched_falls_back_to_idle() {
        let c = convert("proceed normally");
        assert_eq!(c.meta, MetaAction::Idle);
        assert!(c.unparsed);
        assert!(convert("").unparsed);
        assert!(!convert("continue in lane").unparsed);
    }

    #[test]
    fn inflections() {
        assert_eq!(convert("Braking now").meta, MetaAction::Slow);
        assert_eq!(convert("go slower").meta, MetaAction::Slow);
        assert_eq!(convert("SPEEDING UP").meta, MetaAction::Fast);
        assert_eq!(convert("drive faster").meta, MetaAction::Fast);
        assert_eq!(convert("keeping the lane").meta, MetaAction::Idle);
    }

    #[test]
    fn no_partial_word_matches() {
        // "breakfast" and "leftover" are not keywords.
        assert!(convert("breakfast leftovers").unparsed);
    }

    #[test]
    fn deterministic_ties() {
        assert_eq!(convert("turn right or left").meta, MetaAction::Left);
        assert_eq!(convert("accelerate then brake").meta, MetaAction::Slow);
        assert_eq!(convert("keep right").meta, MetaAction::Right);
        assert_eq!(convert("maintain speed, go fast").meta, MetaAction::Fast);
    }
}
