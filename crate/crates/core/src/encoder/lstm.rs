use crate::error::Result;
use crate::tensor::{Graph, ParamStore, Tensor, Var};

const DIRECTIONS: [&str; 2] = ["fwd", "bwd"];

pub(super) fn register_layer(
    store: &mut ParamStore,
    layer: usize,
    input: usize,
    hidden: usize,
    seed: u64,
) -> Result<()> {
    for dir in DIRECTIONS {
        let p = format!("lstm{layer}.{dir}");
        store.add_glorot(format!("{p}.W"), input + hidden, 4 * hidden, seed)?;
        // gate order: input, forget, cell, output; forget bias starts at 1
        let mut bias = vec![0.0; 4 * hidden];
        bias[hidden..2 * hidden].fill(1.0);
        store.add(format!("{p}.b"), Tensor::vector(bias))?;
    }
    Ok(())
}

fn run_direction(
    g: &mut Graph,
    store: &ParamStore,
    prefix: &str,
    x: Var,
    reverse: bool,
) -> Result<Var> {
    let w = g.param_named(store, &format!("{prefix}.W"))?;
    let b = g.param_named(store, &format!("{prefix}.b"))?;
    let hidden = g.value(b).len() / 4;
    let n = g.value(x).rows();

    let mut h = g.constant(Tensor::zeros(&[1, hidden]));
    let mut c = g.constant(Tensor::zeros(&[1, hidden]));
    let mut states = vec![h; n];
    let order: Vec<usize> = if reverse { (0..n).rev().collect() } else { (0..n).collect() };
    for t in order {
        let xt = g.slice(x, 0, t, t + 1)?;
        let input = g.concat(&[xt, h], 1)?;
        let gates = g.matmul(input, w)?;
        let gates = g.add(gates, b)?;
        let i = g.slice(gates, 1, 0, hidden)?;
        let i = g.sigmoid(i);
        let f = g.slice(gates, 1, hidden, 2 * hidden)?;
        let f = g.sigmoid(f);
        let cand = g.slice(gates, 1, 2 * hidden, 3 * hidden)?;
        let cand = g.tanh(cand);
        let o = g.slice(gates, 1, 3 * hidden, 4 * hidden)?;
        let o = g.sigmoid(o);
        let keep = g.mul(f, c)?;
        let write = g.mul(i, cand)?;
        c = g.add(keep, write)?;
        let squashed = g.tanh(c);
        h = g.mul(o, squashed)?;
        states[t] = h;
    }
    g.concat(&states, 0)
}

/// One bidirectional LSTM layer over an `n x d` sequence. Each output row is
/// the right-to-left state followed by the left-to-right state.
pub fn bilstm_layer(g: &mut Graph, store: &ParamStore, layer: usize, x: Var) -> Result<Var> {
    let fwd = run_direction(g, store, &format!("lstm{layer}.fwd"), x, false)?;
    let bwd = run_direction(g, store, &format!("lstm{layer}.bwd"), x, true)?;
    g.concat(&[bwd, fwd], 1)
}
