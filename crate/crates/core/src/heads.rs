//! Joint segmentation/POS tagging head and biaffine arc scorer.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Graph, ParamStore, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Boundary {
    B,
    M,
    E,
    S,
}

impl Boundary {
    pub const ALL: [Boundary; 4] = [Boundary::B, Boundary::M, Boundary::E, Boundary::S];

    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::B => "B",
            Boundary::M => "M",
            Boundary::E => "E",
            Boundary::S => "S",
        }
    }

    /// Whether a word may start at this tag.
    pub fn starts_word(self) -> bool {
        matches!(self, Boundary::B | Boundary::S)
    }

    /// Whether a word may end at this tag.
    pub fn ends_word(self) -> bool {
        matches!(self, Boundary::E | Boundary::S)
    }

    /// Whether `next` may follow `self`.
    pub fn allows(self, next: Boundary) -> bool {
        if self.ends_word() {
            next.starts_word()
        } else {
            !next.starts_word()
        }
    }

    /// BMES tags of a word with `len` characters.
    pub fn for_word(len: usize) -> Vec<Boundary> {
        match len {
            0 => vec![],
            1 => vec![Boundary::S],
            _ => {
                let mut v = vec![Boundary::B];
                v.extend(std::iter::repeat_n(Boundary::M, len - 2));
                v.push(Boundary::E);
                v
            }
        }
    }
}

/// A boundary tag fused with a POS label, written `B_NN`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointTag {
    pub boundary: Boundary,
    pub pos: String,
}

impl fmt::Display for JointTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.boundary.as_str(), self.pos)
    }
}

impl std::str::FromStr for JointTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (b, pos) = s
            .split_once('_')
            .ok_or_else(|| Error::data("tag", format!("`{s}` is not a joint tag")))?;
        let boundary = match b {
            "B" => Boundary::B,
            "M" => Boundary::M,
            "E" => Boundary::E,
            "S" => Boundary::S,
            _ => return Err(Error::data("tag", format!("bad boundary in `{s}`"))),
        };
        Ok(JointTag {
            boundary,
            pos: pos.to_string(),
        })
    }
}

/// The closed joint tag inventory: every boundary crossed with every POS
/// label seen in training.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TagSet {
    tags: Vec<JointTag>,
    index: HashMap<JointTag, usize>,
}

impl TagSet {
    pub fn from_pos<I, S>(pos_labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let labels: BTreeSet<String> = pos_labels.into_iter().map(|s| s.as_ref().to_string()).collect();
        let tags = labels
            .iter()
            .flat_map(|p| {
                Boundary::ALL.iter().map(move |b| JointTag {
                    boundary: *b,
                    pos: p.clone(),
                })
            })
            .collect();
        TagSet::from_tags(tags)
    }

    fn from_tags(tags: Vec<JointTag>) -> Self {
        let index = tags.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        TagSet { tags, index }
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// Index of a tag, or `None` for tags outside the training inventory.
    pub fn index(&self, tag: &JointTag) -> Option<usize> {
        self.index.get(tag).copied()
    }

    pub fn tag(&self, idx: usize) -> &JointTag {
        &self.tags[idx]
    }

    pub fn tags(&self) -> &[JointTag] {
        &self.tags
    }
}

impl Serialize for TagSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let names: Vec<String> = self.tags.iter().map(ToString::to_string).collect();
        names.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TagSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let names = Vec::<String>::deserialize(d)?;
        let tags = names
            .iter()
            .map(|n| n.parse::<JointTag>())
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        Ok(TagSet::from_tags(tags))
    }
}

pub fn register_params(
    store: &mut ParamStore,
    input: usize,
    mlp: usize,
    n_tags: usize,
    seed: u64,
) -> Result<()> {
    store.add_glorot("tag.mlp.W", input, mlp, seed)?;
    store.add_constant("tag.mlp.b", &[mlp], 0.0)?;
    store.add_glorot("tag.W_t", mlp, n_tags, seed)?;
    store.add_normal("arc.root", &[1, input], 0.02, seed)?;
    store.add_glorot("arc.mlp_h.W", input, mlp, seed)?;
    store.add_constant("arc.mlp_h.b", &[mlp], 0.0)?;
    store.add_glorot("arc.mlp_d.W", input, mlp, seed)?;
    store.add_constant("arc.mlp_d.b", &[mlp], 0.0)?;
    store.add_glorot("arc.A", mlp, mlp, seed)?;
    store.add_glorot("arc.b1", mlp, 1, seed)?;
    store.add_glorot("arc.b2", mlp, 1, seed)?;
    Ok(())
}

fn mlp(g: &mut Graph, store: &ParamStore, prefix: &str, x: Var) -> Result<Var> {
    let w = g.param_named(store, &format!("{prefix}.W"))?;
    let b = g.param_named(store, &format!("{prefix}.b"))?;
    let y = g.matmul(x, w)?;
    let y = g.add(y, b)?;
    Ok(g.tanh(y))
}

/// Unnormalised joint-tag scores, `n x |tags|`.
pub fn tag_logits(g: &mut Graph, store: &ParamStore, chars: Var) -> Result<Var> {
    let t = mlp(g, store, "tag.mlp", chars)?;
    let w = g.param_named(store, "tag.W_t")?;
    g.matmul(t, w)
}

/// Biaffine form `S[j][i] = h_j^T A d_i + b1^T h_j + b2^T d_i` for
/// candidate heads `heads` (`m x p`) and dependents `deps` (`n x p`).
/// `b1` and `b2` are `p x 1` columns.
pub fn biaffine(g: &mut Graph, heads: Var, deps: Var, a: Var, b1: Var, b2: Var) -> Result<Var> {
    let ha = g.matmul(heads, a)?;
    let dt = g.transpose(deps)?;
    let bilinear = g.matmul(ha, dt)?;
    let head_bias = g.matmul(heads, b1)?;
    let dep_bias = g.matmul(deps, b2)?;
    let dep_bias = g.transpose(dep_bias)?;
    let s = g.add(bilinear, head_bias)?;
    g.add(s, dep_bias)
}

/// `(n+1) x n` matrix that is `-inf` where a character would head itself.
pub fn self_arc_mask(n: usize) -> Tensor {
    let mut m = Tensor::zeros(&[n + 1, n]);
    for i in 0..n {
        m.data_mut()[(i + 1) * n + i] = f64::NEG_INFINITY;
    }
    m
}

/// Masked arc scores, `(n+1) x n`: entry `[j][i]` scores character `j`
/// (or the root when `j == 0`) as head of character `i + 1`.
pub fn arc_logits(g: &mut Graph, store: &ParamStore, chars: Var) -> Result<Var> {
    let n = g.value(chars).rows();
    let root = g.param_named(store, "arc.root")?;
    let with_root = g.concat(&[root, chars], 0)?;
    let heads = mlp(g, store, "arc.mlp_h", with_root)?;
    let deps = mlp(g, store, "arc.mlp_d", chars)?;
    let a = g.param_named(store, "arc.A")?;
    let b1 = g.param_named(store, "arc.b1")?;
    let b2 = g.param_named(store, "arc.b2")?;
    let scores = biaffine(g, heads, deps, a, b1, b2)?;
    let mask = g.constant(self_arc_mask(n));
    g.add(scores, mask)
}

/// Negative log-likelihood of gold joint tags and gold character heads.
///
/// `gold_heads[i]` is the head of character `i + 1` (0 = root).
pub fn joint_loss(
    g: &mut Graph,
    tag_logits: Var,
    arc_logits: Var,
    gold_tags: &[usize],
    gold_heads: &[usize],
) -> Result<Var> {
    let n = g.value(arc_logits).cols();
    let n_tags = g.value(tag_logits).cols();
    if gold_tags.len() != n || gold_heads.len() != n {
        return Err(Error::data(
            "loss",
            format!(
                "{} characters but {} gold tags and {} gold heads",
                n,
                gold_tags.len(),
                gold_heads.len()
            ),
        ));
    }
    for (i, &h) in gold_heads.iter().enumerate() {
        if h > n || h == i + 1 {
            return Err(Error::data("loss", format!("gold head {h} invalid for character {}", i + 1)));
        }
    }
    if let Some(t) = gold_tags.iter().find(|&&t| t >= n_tags) {
        return Err(Error::data("loss", format!("gold tag index {t} outside inventory of {n_tags}")));
    }
    let log_dep = g.log_softmax(arc_logits, 0)?;
    let log_tag = g.log_softmax(tag_logits, 1)?;
    let dep_idx: Vec<usize> = gold_heads.iter().enumerate().map(|(i, &h)| h * n + i).collect();
    let tag_idx: Vec<usize> = gold_tags.iter().enumerate().map(|(i, &t)| i * n_tags + t).collect();
    let dep = g.pick(log_dep, &dep_idx)?;
    let tag = g.pick(log_tag, &tag_idx)?;
    let dep = g.sum(dep);
    let tag = g.sum(tag);
    let total = g.add(dep, tag)?;
    Ok(g.scale(total, -1.0))
}
