//! Token encoders: the word-character graph attention encoder and its two
//! character-only baselines.

mod gat;
mod lstm;

pub use gat::{attention_weights, gat_layer, semantic_scores, structural_scores, HeadWeights, LayerWeights, StructuralWeights};
pub use lstm::bilstm_layer;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, Relation};
use crate::tensor::{Graph, ParamStore, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    /// Word-character graph attention over the lexicon lattice.
    Gat,
    /// The same attention stack over characters only, without the
    /// structural channel.
    Transformer,
    /// Multi-layer bidirectional LSTM over characters.
    Bilstm,
}

impl std::str::FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gat" => Ok(EncoderKind::Gat),
            "transformer" => Ok(EncoderKind::Transformer),
            "bilstm" => Ok(EncoderKind::Bilstm),
            other => Err(Error::Config(format!("unknown encoder `{other}`"))),
        }
    }
}

/// Squashing function applied to contextualised relation embeddings.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationActivation {
    #[default]
    Sigmoid,
    Tanh,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    pub layers: usize,
    pub heads: usize,
    pub hidden: usize,
    pub dropout: f64,
    /// Whether attention scores include the relation-aware structural term.
    #[serde(default = "default_true")]
    pub structural: bool,
    #[serde(default)]
    pub relation_activation: RelationActivation,
    /// Longest sentence (in characters) the position table covers.
    #[serde(default = "default_max_len")]
    pub max_len: usize,
}

fn default_true() -> bool {
    true
}

fn default_max_len() -> usize {
    512
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            kind: EncoderKind::Gat,
            layers: 3,
            heads: 4,
            hidden: 400,
            dropout: 0.2,
            structural: true,
            relation_activation: RelationActivation::Sigmoid,
            max_len: default_max_len(),
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.hidden == 0 {
            return Err(Error::Config("encoder needs at least one layer and a nonzero hidden size".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        match self.kind {
            EncoderKind::Gat | EncoderKind::Transformer => {
                if self.heads == 0 || !self.hidden.is_multiple_of(self.heads) {
                    return Err(Error::Config(format!(
                        "hidden size {} is not divisible by {} heads",
                        self.hidden, self.heads
                    )));
                }
            }
            EncoderKind::Bilstm => {
                if !self.hidden.is_multiple_of(2) {
                    return Err(Error::Config(format!(
                        "bilstm hidden size {} must be even",
                        self.hidden
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.hidden / self.heads.max(1)
    }

    /// Whether this encoder consumes lexicon words.
    pub fn uses_lexicon(&self) -> bool {
        self.kind == EncoderKind::Gat
    }

    fn uses_structural(&self) -> bool {
        self.kind == EncoderKind::Gat && self.structural
    }
}

/// Character vocabulary; id 0 is reserved for unknown characters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct CharVocab {
    chars: Vec<char>,
    index: HashMap<char, usize>,
}

impl CharVocab {
    pub const UNK: usize = 0;

    pub fn new<I: IntoIterator<Item = char>>(chars: I) -> Self {
        let mut vocab = CharVocab::default();
        for c in chars {
            if !vocab.index.contains_key(&c) {
                vocab.index.insert(c, vocab.chars.len() + 1);
                vocab.chars.push(c);
            }
        }
        vocab
    }

    pub fn id(&self, c: char) -> usize {
        self.index.get(&c).copied().unwrap_or(Self::UNK)
    }

    /// Number of embedding rows, including the unknown row.
    pub fn size(&self) -> usize {
        self.chars.len() + 1
    }
}

impl From<Vec<String>> for CharVocab {
    fn from(v: Vec<String>) -> Self {
        CharVocab::new(v.iter().filter_map(|s| s.chars().next()))
    }
}

impl From<CharVocab> for Vec<String> {
    fn from(v: CharVocab) -> Self {
        v.chars.iter().map(|c| c.to_string()).collect()
    }
}

pub const CHAR_EMBEDDING: &str = "embed.char";
pub const RELATION_EMBEDDING: &str = "embed.relation";

/// Registers every encoder parameter. Values depend only on the seed and
/// the parameter name.
pub fn register_params(
    store: &mut ParamStore,
    config: &EncoderConfig,
    vocab_size: usize,
    seed: u64,
) -> Result<()> {
    config.validate()?;
    let d = config.hidden;
    store.add_normal(CHAR_EMBEDDING, &[vocab_size, d], 1.0, seed)?;
    match config.kind {
        EncoderKind::Gat | EncoderKind::Transformer => {
            if config.uses_structural() {
                store.add_normal(RELATION_EMBEDDING, &[Relation::COUNT, config.head_dim()], 1.0, seed)?;
            }
            for l in 0..config.layers {
                gat::register_layer(store, config, l, seed)?;
            }
        }
        EncoderKind::Bilstm => {
            let h = d / 2;
            for l in 0..config.layers {
                lstm::register_layer(store, l, d, h, seed)?;
            }
        }
    }
    Ok(())
}

/// Static sinusoidal position embedding for 1-based position `pos`.
pub fn position_embedding(pos: usize, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|k| {
            let rate = 10000f64.powf((2 * (k / 2)) as f64 / dim as f64);
            let angle = pos as f64 / rate;
            if k % 2 == 0 {
                angle.sin()
            } else {
                angle.cos()
            }
        })
        .collect()
}

/// Input vectors for every lattice token: characters get their embedding
/// plus the position embedding of their index, words get the mean of their
/// characters' embeddings plus the position embedding of their first
/// character.
pub fn embed_input(
    g: &mut Graph,
    store: &ParamStore,
    config: &EncoderConfig,
    vocab: &CharVocab,
    lattice: &Lattice,
) -> Result<Var> {
    let n = lattice.n_chars();
    if n > config.max_len {
        return Err(Error::InputTooLong {
            len: n,
            max: config.max_len,
        });
    }
    let table = g.param_named(store, CHAR_EMBEDDING)?;
    let ids: Vec<usize> = lattice.chars().iter().map(|c| vocab.id(*c)).collect();
    let chars = g.gather_rows(table, &ids)?;

    let d = config.hidden;
    let mut positions: Vec<f64> = (1..=n).flat_map(|p| position_embedding(p, d)).collect();
    let mut rows = vec![chars];
    if lattice.n_words() > 0 {
        let groups: Vec<Vec<usize>> = lattice
            .words()
            .iter()
            .map(|w| w.char_indices().map(|i| ids[i]).collect())
            .collect();
        rows.push(g.average_rows(table, &groups)?);
        for w in lattice.words() {
            positions.extend(position_embedding(w.begin, d));
        }
    }
    let tokens = g.concat(&rows, 0)?;
    let pos = g.constant(Tensor::new(vec![lattice.n_tokens(), d], positions)?);
    g.add(tokens, pos)
}

/// Final-layer representations of the characters of `lattice`, `n x hidden`.
pub fn encode(
    g: &mut Graph,
    store: &ParamStore,
    config: &EncoderConfig,
    vocab: &CharVocab,
    lattice: &Lattice,
) -> Result<Var> {
    let n = lattice.n_chars();
    match config.kind {
        EncoderKind::Gat | EncoderKind::Transformer => {
            let chars_only;
            let lattice = if config.kind == EncoderKind::Transformer {
                chars_only = lattice.chars_only();
                &chars_only
            } else {
                lattice
            };
            let x = embed_input(g, store, config, vocab, lattice)?;
            let mut x = g.dropout(x, config.dropout)?;
            let relations = lattice.relation_indices();
            for l in 0..config.layers {
                let weights = LayerWeights::load(g, store, config, l)?;
                x = gat_layer(g, &weights, config, x, &relations)?;
            }
            if lattice.n_words() == 0 {
                Ok(x)
            } else {
                g.slice(x, 0, 0, n)
            }
        }
        EncoderKind::Bilstm => {
            if n > config.max_len {
                return Err(Error::InputTooLong {
                    len: n,
                    max: config.max_len,
                });
            }
            let table = g.param_named(store, CHAR_EMBEDDING)?;
            let ids: Vec<usize> = lattice.chars().iter().map(|c| vocab.id(*c)).collect();
            let mut x = g.gather_rows(table, &ids)?;
            for l in 0..config.layers {
                x = g.dropout(x, config.dropout)?;
                x = bilstm_layer(g, store, l, x)?;
            }
            Ok(x)
        }
    }
}
