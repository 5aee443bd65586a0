//! Prompt-to-texture scoring and selection.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::Image;

/// One library texture with its curated tags.
#[derive(Clone, Debug, PartialEq)]
pub struct TextureEntry {
    /// Stable identifier; ties in score are broken by ascending id.
    pub id: String,
    pub image: Image,
    /// Lowercase tokens.
    pub tags: Vec<String>,
    pub embedding: Option<Vec<f64>>,
}

impl TextureEntry {
    pub fn validate(&self) -> Result<()> {
        let has_tags = self.tags.iter().any(|t| !t.trim().is_empty());
        if !has_tags && self.embedding.is_none() {
            return Err(Error::InvalidArgument(format!("texture `{}` has neither tags nor an embedding", self.id)));
        }
        Ok(())
    }
}

/// Lowercase alphanumeric tokens of `text`, deduplicated.
pub fn tokenize(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Similarity between a prompt and a library entry.
pub trait TextureScorer {
    fn score(&self, prompt: &str, entry: &TextureEntry) -> f64;
}

/// `|P ∩ T| / sqrt(|P| |T|)` over prompt tokens `P` and entry tags `T`;
/// zero when either set is empty.
#[derive(Clone, Copy, Debug, Default)]
pub struct TokenOverlap;

impl TextureScorer for TokenOverlap {
    fn score(&self, prompt: &str, entry: &TextureEntry) -> f64 {
        let p = tokenize(prompt);
        let t: BTreeSet<String> = entry.tags.iter().flat_map(|tag| tokenize(tag)).collect();
        if p.is_empty() || t.is_empty() {
            return 0.0;
        }
        let shared = p.intersection(&t).count();
        shared as f64 / ((p.len() * t.len()) as f64).sqrt()
    }
}

/// Cosine similarity between an encoded prompt and the entry's precomputed
/// embedding. Entries without an embedding, or prompts the encoder rejects,
/// fall back to [`TokenOverlap`].
pub struct EmbeddingScorer<F: Fn(&str) -> Option<Vec<f64>>> {
    pub encode: F,
}

impl<F: Fn(&str) -> Option<Vec<f64>>> TextureScorer for EmbeddingScorer<F> {
    fn score(&self, prompt: &str, entry: &TextureEntry) -> f64 {
        if tokenize(prompt).is_empty() {
            return 0.0;
        }
        let (Some(e), Some(q)) = (&entry.embedding, (self.encode)(prompt)) else {
            return TokenOverlap.score(prompt, entry);
        };
        let dot: f64 = e.iter().zip(&q).map(|(a, b)| a * b).sum();
        let n = e.iter().map(|a| a * a).sum::<f64>().sqrt() * q.iter().map(|b| b * b).sum::<f64>().sqrt();
        if e.len() != q.len() || n == 0.0 {
            0.0
        } else {
            dot / n
        }
    }
}

pub fn score_texture(prompt: &str, entry: &TextureEntry, scorer: &dyn TextureScorer) -> f64 {
    scorer.score(prompt, entry)
}

/// Library indices with their scores, best first; equal scores keep
/// ascending id order.
pub fn rank_library(prompt: &str, library: &[TextureEntry], scorer: &dyn TextureScorer) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = library.iter().enumerate().map(|(i, e)| (i, scorer.score(prompt, e))).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| library[a.0].id.cmp(&library[b.0].id)));
    ranked
}

/// The best entry when `k = 1`; otherwise a seeded uniform choice among the
/// `k` best. Returns the library index.
pub fn select_texture(
    prompt: &str,
    library: &[TextureEntry],
    k: usize,
    seed: u64,
    scorer: &dyn TextureScorer,
) -> Result<usize> {
    if library.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let ranked = rank_library(prompt, library, scorer);
    let top = k.min(ranked.len());
    let pick = if top == 1 {
        0
    } else {
        ChaCha8Rng::seed_from_u64(seed).random_range(0..top)
    };
    Ok(ranked[pick].0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, tags: &[&str]) -> TextureEntry {
        TextureEntry {
            id: id.into(),
            image: Image::new(1, 1, 3),
            tags: tags.iter().map(|t| t.to_string()).collect(),
            embedding: None,
        }
    }

    #[test]
    fn overlap_examples() {
        let e = entry("a", &["cartoon", "boy", "smile"]);
        let s = TokenOverlap.score("cartoon boy", &e);
        assert!((s - 2.0 / 6f64.sqrt()).abs() < 1e-15);
        assert_eq!(TokenOverlap.score("smile boy cartoon", &e), 1.0);
        assert_eq!(TokenOverlap.score("oil painting", &e), 0.0);
        assert_eq!(TokenOverlap.score("", &e), 0.0);
        assert_eq!(TokenOverlap.score("Boy, CARTOON!", &e), s);
    }

    #[test]
    fn ties_break_on_id() {
        let lib = vec![entry("b", &["x"]), entry("a", &["x"]), entry("c", &["y"])];
        assert_eq!(select_texture("x", &lib, 1, 0, &TokenOverlap).unwrap(), 1);
        assert!(matches!(select_texture("x", &[], 1, 0, &TokenOverlap), Err(Error::EmptyLibrary)));
    }

    #[test]
    fn embedding_scorer_uses_cosine_and_falls_back() {
        let mut e = entry("a", &["cartoon"]);
        let scorer = EmbeddingScorer {
            encode: |p: &str| (p == "cartoon").then(|| vec![1.0, 1.0]),
        };
        assert_eq!(scorer.score("cartoon", &e), 1.0);
        e.embedding = Some(vec![1.0, 0.0]);
        assert!((scorer.score("cartoon", &e) - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(scorer.score("other", &e), 0.0);
    }

    #[test]
    fn entry_needs_tags_or_embedding() {
        assert!(entry("a", &[]).validate().is_err());
        assert!(entry("a", &["x"]).validate().is_ok());
    }
}
