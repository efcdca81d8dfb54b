//! From per-character distributions to a segmented, tagged word-level tree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heads::{Boundary, TagSet};
use crate::tensor::Tensor;

/// Smallest probability considered when moving to log space.
const PROB_FLOOR: f64 = 1e-300;

/// A decoded sentence. Word spans are 1-based and inclusive; heads index
/// words (0 = root) and `char_heads` index characters (0 = root).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseOutput {
    pub chars: Vec<char>,
    pub words: Vec<(usize, usize)>,
    pub pos: Vec<String>,
    pub heads: Vec<usize>,
    pub char_heads: Vec<usize>,
}

impl ParseOutput {
    pub fn word_form(&self, w: usize) -> String {
        let (b, e) = self.words[w];
        self.chars[b - 1..e].iter().collect()
    }

    /// Checks partition, single-rooted acyclic word tree and right-branching
    /// character chains.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::data("parse output", m));
        let k = self.words.len();
        if self.pos.len() != k || self.heads.len() != k {
            return bad(format!("{k} words, {} POS tags, {} heads", self.pos.len(), self.heads.len()));
        }
        if self.char_heads.len() != self.chars.len() {
            return bad("character head count differs from character count".into());
        }
        let mut next = 1;
        for &(b, e) in &self.words {
            if b != next || e < b {
                return bad(format!("span ({b}, {e}) breaks the partition"));
            }
            next = e + 1;
        }
        if next != self.chars.len() + 1 {
            return bad("spans do not cover the sentence".into());
        }
        check_tree(&self.heads).or_else(bad)?;
        for (w, &(b, e)) in self.words.iter().enumerate() {
            let expected = match self.heads[w] {
                0 => 0,
                h => self.words[h - 1].0,
            };
            if self.char_heads[b - 1] != expected {
                return bad(format!("word {} attaches through the wrong character", w + 1));
            }
            for c in b + 1..=e {
                if self.char_heads[c - 1] != c - 1 {
                    return bad(format!("word {} is not a right-branching chain", w + 1));
                }
            }
        }
        Ok(())
    }
}

/// Checks that `heads` (1-based nodes, 0 = root) is a tree with exactly one
/// root child.
pub fn check_tree(heads: &[usize]) -> std::result::Result<(), String> {
    let n = heads.len();
    if n == 0 {
        return Err("empty tree".into());
    }
    if heads.iter().filter(|&&h| h == 0).count() != 1 {
        return Err("tree must have exactly one root attachment".into());
    }
    for (i, &h) in heads.iter().enumerate() {
        if h > n || h == i + 1 {
            return Err(format!("invalid head {h} for node {}", i + 1));
        }
    }
    for start in 1..=n {
        let mut node = start;
        let mut steps = 0;
        while node != 0 {
            node = heads[node - 1];
            steps += 1;
            if steps > n {
                return Err(format!("cycle through node {start}"));
            }
        }
    }
    Ok(())
}

/// Word spans with the POS tag of each word.
pub type Segmentation = (Vec<(usize, usize)>, Vec<String>);

/// Highest-scoring valid BMES sequence under the per-character joint tag
/// distribution `probs` (`n x |tags|`). Returns word spans and the POS of
/// each word's first character.
pub fn decode_tags(probs: &Tensor, tags: &TagSet) -> Result<Segmentation> {
    let n = probs.rows();
    if probs.rank() != 2 || probs.cols() != tags.len() || n == 0 {
        return Err(Error::shape("decode_tags", probs.shape(), &[tags.len()]));
    }
    // best (log prob, tag index) per character and boundary
    let mut best = vec![[(f64::NEG_INFINITY, usize::MAX); 4]; n];
    for (i, slot) in best.iter_mut().enumerate() {
        for (t, tag) in tags.tags().iter().enumerate() {
            let lp = probs.at(i, t).max(PROB_FLOOR).ln();
            let b = tag.boundary as usize;
            if lp > slot[b].0 {
                slot[b] = (lp, t);
            }
        }
    }

    let mut score = vec![[f64::NEG_INFINITY; 4]; n];
    let mut back = vec![[0usize; 4]; n];
    for b in Boundary::ALL {
        if b.starts_word() {
            score[0][b as usize] = best[0][b as usize].0;
        }
    }
    for i in 1..n {
        for cur in Boundary::ALL {
            for prev in Boundary::ALL {
                if !prev.allows(cur) {
                    continue;
                }
                let s = score[i - 1][prev as usize] + best[i][cur as usize].0;
                if s > score[i][cur as usize] {
                    score[i][cur as usize] = s;
                    back[i][cur as usize] = prev as usize;
                }
            }
        }
    }
    let mut last = Boundary::ALL
        .iter()
        .filter(|b| b.ends_word())
        .max_by(|a, b| score[n - 1][**a as usize].total_cmp(&score[n - 1][**b as usize]))
        .map(|b| *b as usize)
        .expect("two final boundaries");
    if score[n - 1][last] == f64::NEG_INFINITY {
        return Err(Error::Contract("tag inventory admits no valid segmentation".into()));
    }
    let mut path = vec![0usize; n];
    for i in (0..n).rev() {
        path[i] = last;
        last = back[i][last];
    }

    let mut spans = Vec::new();
    let mut pos = Vec::new();
    let mut begin = 0;
    for (i, &b) in path.iter().enumerate() {
        let boundary = Boundary::ALL[b];
        if boundary.starts_word() {
            begin = i;
            pos.push(tags.tag(best[i][b].1).pos.clone());
        }
        if boundary.ends_word() {
            spans.push((begin + 1, i + 1));
        }
    }
    Ok((spans, pos))
}

/// Maximum spanning arborescence rooted at node 0.
///
/// `scores` is `(n+1) x n`: `scores[j][i]` is the score of node `j` heading
/// node `i + 1`. Entries where a node would head itself are ignored. With
/// `single_root`, exactly one node attaches to the root. Returns the head of
/// each node `1..=n`.
pub fn mst(scores: &Tensor, single_root: bool) -> Result<Vec<usize>> {
    let n = scores.cols();
    if scores.rank() != 2 || scores.rows() != n + 1 || n == 0 {
        return Err(Error::shape("mst", scores.shape(), &[]));
    }
    // square (n+1) x (n+1) weights; column 0 (into root) and self loops absent
    let mut w = vec![vec![f64::NEG_INFINITY; n + 1]; n + 1];
    for (j, row) in w.iter_mut().enumerate() {
        for i in 0..n {
            if j != i + 1 {
                row[i + 1] = scores.at(j, i);
            }
        }
    }
    let heads = chu_liu_edmonds(&w);
    let root_children = heads[1..].iter().filter(|&&h| h == 0).count();
    if !single_root || root_children <= 1 {
        return Ok(heads[1..].to_vec());
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    for child in 1..=n {
        let mut constrained = w.clone();
        for (v, cell) in constrained[0].iter_mut().enumerate() {
            if v != child {
                *cell = f64::NEG_INFINITY;
            }
        }
        let heads = chu_liu_edmonds(&constrained);
        let total = tree_score(&w, &heads);
        if best.as_ref().is_none_or(|(s, _)| total > *s) {
            best = Some((total, heads));
        }
    }
    Ok(best.expect("at least one candidate").1[1..].to_vec())
}

/// Sum of `scores[head][i]` over all dependents.
pub fn total_score(scores: &Tensor, heads: &[usize]) -> f64 {
    heads.iter().enumerate().map(|(i, &h)| scores.at(h, i)).sum()
}

fn tree_score(w: &[Vec<f64>], heads: &[usize]) -> f64 {
    heads.iter().enumerate().skip(1).map(|(v, &h)| w[h][v]).sum()
}

fn sub(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        a
    } else {
        a - b
    }
}

/// Chu-Liu-Edmonds on a dense square weight matrix `w[head][dep]` rooted
/// at node 0. Returns a parent vector (entry 0 unused).
fn chu_liu_edmonds(w: &[Vec<f64>]) -> Vec<usize> {
    let m = w.len();
    let mut parent = vec![0usize; m];
    for v in 1..m {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for (u, row) in w.iter().enumerate() {
            if u != v && row[v] > best {
                best = row[v];
                arg = u;
            }
        }
        parent[v] = arg;
    }

    let Some(cycle) = find_cycle(&parent) else {
        return parent;
    };
    let in_cycle: Vec<bool> = (0..m).map(|v| cycle.contains(&v)).collect();

    // contracted graph: old non-cycle nodes keep relative order, cycle -> c
    let mut new_id = vec![usize::MAX; m];
    let mut old_of = Vec::new();
    for v in 0..m {
        if !in_cycle[v] {
            new_id[v] = old_of.len();
            old_of.push(v);
        }
    }
    let c = old_of.len();
    let size = c + 1;
    let mut cw = vec![vec![f64::NEG_INFINITY; size]; size];
    // enter[u] = cycle node entered from u; leave[v] = cycle node leaving to v
    let mut enter = vec![usize::MAX; m];
    let mut leave = vec![usize::MAX; m];
    for u in 0..m {
        for v in 0..m {
            if u == v || w[u][v] == f64::NEG_INFINITY {
                continue;
            }
            match (in_cycle[u], in_cycle[v]) {
                (false, false) => cw[new_id[u]][new_id[v]] = w[u][v],
                (false, true) => {
                    let s = sub(w[u][v], w[parent[v]][v]);
                    if s > cw[new_id[u]][c] || enter[u] == usize::MAX {
                        cw[new_id[u]][c] = s;
                        enter[u] = v;
                    }
                }
                (true, false) => {
                    if w[u][v] > cw[c][new_id[v]] || leave[v] == usize::MAX {
                        cw[c][new_id[v]] = w[u][v];
                        leave[v] = u;
                    }
                }
                (true, true) => {}
            }
        }
    }

    let sub_parent = chu_liu_edmonds(&cw);
    let mut result = parent.clone();
    for (nv, &np) in sub_parent.iter().enumerate().skip(1) {
        if nv == c {
            let u = old_of[np];
            result[enter[u]] = u;
        } else {
            let v = old_of[nv];
            result[v] = if np == c { leave[v] } else { old_of[np] };
        }
    }
    result
}

fn find_cycle(parent: &[usize]) -> Option<Vec<usize>> {
    let m = parent.len();
    // 0 = unvisited, 1 = on current path, 2 = done
    let mut state = vec![0u8; m];
    state[0] = 2;
    for start in 1..m {
        let mut path = Vec::new();
        let mut v = start;
        while state[v] == 0 {
            state[v] = 1;
            path.push(v);
            v = parent[v];
        }
        if state[v] == 1 {
            let pos = path.iter().position(|&x| x == v).expect("on path");
            return Some(path[pos..].to_vec());
        }
        for p in path {
            state[p] = 2;
        }
    }
    None
}

/// Word-level decoding over character arc probabilities.
///
/// `dep` is `(n+1) x n` with `dep[j][i]` the probability that character `j`
/// (0 = root) heads character `i + 1`. Each word attaches through its first
/// character; words are linked by a single-rooted maximum spanning tree over
/// the log probabilities between first characters, and characters inside a
/// word form the chain `c_b -> c_{b+1} -> ... -> c_e`.
pub fn hierarchical_decode(
    dep: &Tensor,
    chars: &[char],
    spans: &[(usize, usize)],
    pos: Vec<String>,
) -> Result<ParseOutput> {
    let n = chars.len();
    if dep.rank() != 2 || dep.cols() != n || dep.rows() != n + 1 {
        return Err(Error::shape("hierarchical_decode", dep.shape(), &[n + 1, n]));
    }
    let k = spans.len();
    let roots: Vec<usize> = spans.iter().map(|&(b, _)| b).collect();
    let mut word_scores = Tensor::zeros(&[k + 1, k]);
    for (w, &r) in roots.iter().enumerate() {
        let col = r - 1;
        word_scores.data_mut()[w] = dep.at(0, col).max(PROB_FLOOR).ln();
        for (v, &hr) in roots.iter().enumerate() {
            if v != w {
                word_scores.data_mut()[(v + 1) * k + w] = dep.at(hr, col).max(PROB_FLOOR).ln();
            }
        }
    }
    let heads = mst(&word_scores, true)?;

    let mut char_heads = vec![0; n];
    for (w, &(b, e)) in spans.iter().enumerate() {
        char_heads[b - 1] = match heads[w] {
            0 => 0,
            h => roots[h - 1],
        };
        for c in b + 1..=e {
            char_heads[c - 1] = c - 1;
        }
    }
    let out = ParseOutput {
        chars: chars.to_vec(),
        words: spans.to_vec(),
        pos,
        heads,
        char_heads,
    };
    out.validate()?;
    Ok(out)
}

/// Full decoding from tag and arc probabilities.
pub fn decode(tag_probs: &Tensor, dep_probs: &Tensor, tags: &TagSet, chars: &[char]) -> Result<ParseOutput> {
    let (spans, pos) = decode_tags(tag_probs, tags)?;
    hierarchical_decode(dep_probs, chars, &spans, pos)
}
