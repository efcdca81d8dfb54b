//! The end-to-end parser: encoder, tagging head and arc scorer.

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusSentence;
use crate::decoder::{self, ParseOutput};
use crate::encoder::{self, CharVocab, EncoderConfig};
use crate::error::{Error, Result};
use crate::heads::{self, TagSet};
use crate::lattice::{Lattice, Lexicon};
use crate::tensor::{Graph, ParamStore, Tensor, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    /// Output size of the tagging, head and dependent MLPs.
    #[serde(default = "default_mlp")]
    pub mlp: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_mlp() -> usize {
    400
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            encoder: EncoderConfig::default(),
            mlp: default_mlp(),
            seed: 0,
        }
    }
}

/// Graph handles for the two score matrices of one sentence.
#[derive(Clone, Copy, Debug)]
pub struct Scores {
    /// `n x |tags|` joint tag logits.
    pub tags: Var,
    /// `(n+1) x n` masked arc logits; row 0 is the root.
    pub arcs: Var,
}

#[derive(Clone, Debug)]
pub struct Model {
    pub config: ModelConfig,
    pub vocab: CharVocab,
    pub tags: TagSet,
    pub params: ParamStore,
}

impl Model {
    pub fn new(config: ModelConfig, vocab: CharVocab, tags: TagSet) -> Result<Self> {
        if tags.is_empty() {
            return Err(Error::Config("empty tag inventory".into()));
        }
        if config.mlp == 0 {
            return Err(Error::Config("mlp size must be positive".into()));
        }
        let mut params = ParamStore::new();
        encoder::register_params(&mut params, &config.encoder, vocab.size(), config.seed)?;
        heads::register_params(&mut params, config.encoder.hidden, config.mlp, tags.len(), config.seed)?;
        Ok(Model {
            config,
            vocab,
            tags,
            params,
        })
    }

    /// A freshly initialised model whose vocabulary and tag inventory come
    /// from `train`.
    pub fn for_corpus(config: ModelConfig, train: &[CorpusSentence]) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Config("empty training corpus".into()));
        }
        let vocab = CharVocab::new(train.iter().flat_map(|s| s.chars.iter().copied()));
        let tags = TagSet::from_pos(train.iter().flat_map(|s| s.pos.iter()));
        Model::new(config, vocab, tags)
    }

    /// The lattice this model's encoder consumes: lexicon words are added
    /// only for the graph attention encoder.
    pub fn lattice(&self, chars: &[char], lexicon: &Lexicon) -> Result<Lattice> {
        if self.config.encoder.uses_lexicon() {
            Lattice::build(chars, lexicon)
        } else {
            Lattice::from_parts(chars.to_vec(), Vec::new())
        }
    }

    pub fn forward(&self, g: &mut Graph, lattice: &Lattice) -> Result<Scores> {
        let enc = &self.config.encoder;
        let h = encoder::encode(g, &self.params, enc, &self.vocab, lattice)?;
        let h = g.dropout(h, enc.dropout)?;
        let tags = heads::tag_logits(g, &self.params, h)?;
        let arcs = heads::arc_logits(g, &self.params, h)?;
        Ok(Scores { tags, arcs })
    }

    /// Gold tag indices and character heads for a training sentence.
    pub fn gold(&self, sentence: &CorpusSentence) -> Result<(Vec<usize>, Vec<usize>)> {
        let tags = sentence
            .char_tags()
            .iter()
            .map(|t| {
                self.tags
                    .index(t)
                    .ok_or_else(|| Error::data("gold tags", format!("tag {t} is outside the inventory")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((tags, sentence.char_heads()))
    }

    pub fn loss(&self, g: &mut Graph, lattice: &Lattice, gold_tags: &[usize], gold_heads: &[usize]) -> Result<Var> {
        let scores = self.forward(g, lattice)?;
        heads::joint_loss(g, scores.tags, scores.arcs, gold_tags, gold_heads)
    }

    /// Tag and arc probability matrices in evaluation mode.
    pub fn probabilities(&self, lattice: &Lattice) -> Result<(Tensor, Tensor)> {
        let mut g = Graph::eval();
        let scores = self.forward(&mut g, lattice)?;
        let tags = g.value(scores.tags).softmax(1)?;
        let arcs = g.value(scores.arcs).softmax(0)?;
        Ok((tags, arcs))
    }

    pub fn predict(&self, lattice: &Lattice) -> Result<ParseOutput> {
        let (tags, arcs) = self.probabilities(lattice)?;
        decoder::decode(&tags, &arcs, &self.tags, lattice.chars())
    }

    pub fn parse(&self, chars: &[char], lexicon: &Lexicon) -> Result<ParseOutput> {
        let lattice = self.lattice(chars, lexicon)?;
        self.predict(&lattice)
    }
}
