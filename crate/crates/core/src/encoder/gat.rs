use super::{EncoderConfig, RelationActivation, RELATION_EMBEDDING};
use crate::error::Result;
use crate::tensor::{Graph, ParamStore, Var};

const LN_EPS: f64 = 1e-6;
const FF_MULT: usize = 4;

pub(super) fn register_layer(
    store: &mut ParamStore,
    config: &EncoderConfig,
    layer: usize,
    seed: u64,
) -> Result<()> {
    let d = config.hidden;
    let dh = config.head_dim();
    for m in 0..config.heads {
        let p = format!("layer{layer}.head{m}");
        // Scores are unscaled dot products; shrinking the key and query
        // projections at init keeps early attention from saturating.
        for name in [format!("{p}.W_K"), format!("{p}.W_Q")] {
            let id = store.add_glorot(name, d, dh, seed)?;
            let gain = (dh as f64).powf(-0.25);
            store.get_mut(id).value.data_mut().iter_mut().for_each(|v| *v *= gain);
        }
        store.add_glorot(format!("{p}.W_V"), d, dh, seed)?;
        if config.uses_structural() {
            store.add_glorot(format!("{p}.W_E"), dh, dh, seed)?;
            store.add_glorot(format!("{p}.W_S"), d, dh, seed)?;
            store.add_glorot(format!("{p}.W_T"), d, dh, seed)?;
            store.add_normal(format!("{p}.w"), &[dh, 1], 1.0, seed)?;
        }
    }
    let p = format!("layer{layer}");
    store.add_glorot(format!("{p}.W_O"), d, d, seed)?;
    store.add_constant(format!("{p}.b_O"), &[d], 0.0)?;
    store.add_constant(format!("{p}.ln1.gain"), &[d], 1.0)?;
    store.add_constant(format!("{p}.ln1.bias"), &[d], 0.0)?;
    store.add_glorot(format!("{p}.ff.W1"), d, FF_MULT * d, seed)?;
    store.add_constant(format!("{p}.ff.b1"), &[FF_MULT * d], 0.0)?;
    store.add_glorot(format!("{p}.ff.W2"), FF_MULT * d, d, seed)?;
    store.add_constant(format!("{p}.ff.b2"), &[d], 0.0)?;
    store.add_constant(format!("{p}.ln2.gain"), &[d], 1.0)?;
    store.add_constant(format!("{p}.ln2.bias"), &[d], 0.0)?;
    Ok(())
}

/// Structural-channel weights of one head.
#[derive(Clone, Copy, Debug)]
pub struct StructuralWeights {
    /// Relation embedding table, `9 x d_r`, shared by all heads and layers.
    pub relations: Var,
    pub w_e: Var,
    pub w_s: Var,
    pub w_t: Var,
    /// Scoring vector as a `d_h x 1` column.
    pub w: Var,
    pub activation: RelationActivation,
}

#[derive(Clone, Copy, Debug)]
pub struct HeadWeights {
    pub key: Var,
    pub query: Var,
    pub value: Var,
    pub structural: Option<StructuralWeights>,
}

/// Graph handles for one encoder layer.
#[derive(Clone, Debug)]
pub struct LayerWeights {
    pub heads: Vec<HeadWeights>,
    pub out_w: Var,
    pub out_b: Var,
    pub ln1: (Var, Var),
    pub ff1: (Var, Var),
    pub ff2: (Var, Var),
    pub ln2: (Var, Var),
}

impl LayerWeights {
    pub fn load(g: &mut Graph, store: &ParamStore, config: &EncoderConfig, layer: usize) -> Result<Self> {
        let mut param = |name: String| g.param_named(store, &name);
        let mut heads = Vec::with_capacity(config.heads);
        for m in 0..config.heads {
            let p = format!("layer{layer}.head{m}");
            let structural = if config.uses_structural() {
                Some(StructuralWeights {
                    relations: param(RELATION_EMBEDDING.to_string())?,
                    w_e: param(format!("{p}.W_E"))?,
                    w_s: param(format!("{p}.W_S"))?,
                    w_t: param(format!("{p}.W_T"))?,
                    w: param(format!("{p}.w"))?,
                    activation: config.relation_activation,
                })
            } else {
                None
            };
            heads.push(HeadWeights {
                key: param(format!("{p}.W_K"))?,
                query: param(format!("{p}.W_Q"))?,
                value: param(format!("{p}.W_V"))?,
                structural,
            });
        }
        let p = format!("layer{layer}");
        Ok(LayerWeights {
            heads,
            out_w: param(format!("{p}.W_O"))?,
            out_b: param(format!("{p}.b_O"))?,
            ln1: (param(format!("{p}.ln1.gain"))?, param(format!("{p}.ln1.bias"))?),
            ff1: (param(format!("{p}.ff.W1"))?, param(format!("{p}.ff.b1"))?),
            ff2: (param(format!("{p}.ff.W2"))?, param(format!("{p}.ff.b2"))?),
            ln2: (param(format!("{p}.ln2.gain"))?, param(format!("{p}.ln2.bias"))?),
        })
    }
}

/// Semantic scores `S[i][j] = (x_i W_K) . (x_j W_Q)` for all token pairs;
/// row `i` is the receiving token.
pub fn semantic_scores(g: &mut Graph, x: Var, head: &HeadWeights) -> Result<Var> {
    let keys = g.matmul(x, head.key)?;
    let queries = g.matmul(x, head.query)?;
    let qt = g.transpose(queries)?;
    g.matmul(keys, qt)
}

/// Structural scores `S[i][j] = w . act(e_ji W_E + x_i W_S + x_j W_T)` where
/// `e_ji` is the embedding of the relation carrying information from token
/// `j` to token `i`. `relations[i * N + j]` holds that relation's row index.
pub fn structural_scores(
    g: &mut Graph,
    x: Var,
    weights: &StructuralWeights,
    relations: &[usize],
) -> Result<Var> {
    let n = g.value(x).rows();
    let rel = g.matmul(weights.relations, weights.w_e)?;
    let recv = g.matmul(x, weights.w_s)?;
    let send = g.matmul(x, weights.w_t)?;

    let receivers: Vec<usize> = (0..n * n).map(|k| k / n).collect();
    let senders: Vec<usize> = (0..n * n).map(|k| k % n).collect();
    let rel_rows = g.gather_rows(rel, relations)?;
    let recv_rows = g.gather_rows(recv, &receivers)?;
    let send_rows = g.gather_rows(send, &senders)?;
    let pre = g.add(rel_rows, recv_rows)?;
    let pre = g.add(pre, send_rows)?;
    let ctx = match weights.activation {
        RelationActivation::Sigmoid => g.sigmoid(pre),
        RelationActivation::Tanh => g.tanh(pre),
    };
    let scores = g.matmul(ctx, weights.w)?;
    g.reshape(scores, &[n, n])
}

/// Attention weights of one head, `N x N`, each row a distribution over
/// source tokens.
pub fn attention_weights(g: &mut Graph, x: Var, head: &HeadWeights, relations: &[usize]) -> Result<Var> {
    let mut scores = semantic_scores(g, x, head)?;
    if let Some(s) = &head.structural {
        let structural = structural_scores(g, x, s, relations)?;
        scores = g.add(scores, structural)?;
    }
    g.softmax(scores, 1)
}

/// One encoder layer: multi-head two-channel attention followed by a
/// position-wise feed-forward sublayer, each wrapped in a residual
/// connection and layer normalisation.
pub fn gat_layer(
    g: &mut Graph,
    weights: &LayerWeights,
    config: &EncoderConfig,
    x: Var,
    relations: &[usize],
) -> Result<Var> {
    let mut outputs = Vec::with_capacity(weights.heads.len());
    for head in &weights.heads {
        let attn = attention_weights(g, x, head, relations)?;
        let values = g.matmul(x, head.value)?;
        outputs.push(g.matmul(attn, values)?);
    }
    let joined = g.concat(&outputs, 1)?;
    let proj = g.matmul(joined, weights.out_w)?;
    let proj = g.add(proj, weights.out_b)?;
    let proj = g.dropout(proj, config.dropout)?;
    let res = g.add(x, proj)?;
    let h = norm(g, res, weights.ln1)?;

    let inner = g.matmul(h, weights.ff1.0)?;
    let inner = g.add(inner, weights.ff1.1)?;
    let inner = g.relu(inner);
    let ff = g.matmul(inner, weights.ff2.0)?;
    let ff = g.add(ff, weights.ff2.1)?;
    let ff = g.dropout(ff, config.dropout)?;
    let res = g.add(h, ff)?;
    norm(g, res, weights.ln2)
}

fn norm(g: &mut Graph, x: Var, (gain, bias): (Var, Var)) -> Result<Var> {
    let y = g.layer_norm(x, LN_EPS)?;
    let y = g.mul(y, gain)?;
    g.add(y, bias)
}
