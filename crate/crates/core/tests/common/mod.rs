//! Helpers shared by the integration tests: a central finite-difference
//! gradient checker and small fixtures.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use num_rational::Ratio;
use wcparse::corpus::CorpusSentence;
use wcparse::decoder::ParseOutput;
use wcparse::encoder::{CharVocab, EncoderConfig, EncoderKind};
use wcparse::heads::TagSet;
use wcparse::lattice::{Lattice, Lexicon};
use wcparse::model::{Model, ModelConfig};
use wcparse::tensor::{Graph, ParamStore, Tensor, Var};
use wcparse::Result;

pub const FD_EPS: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-4;
/// Denominator floor for the relative error, so gradients near zero are
/// compared at an absolute scale of `FD_TOL * REL_FLOOR`.
pub const REL_FLOOR: f64 = 1e-4;

pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

#[derive(Debug, Default)]
pub struct GradReport {
    pub checked: usize,
    pub groups: usize,
    pub worst: f64,
    pub failures: Vec<String>,
}

impl GradReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checked > 0
    }

    pub fn assert_ok(&self) {
        assert!(self.passed(), "gradient check failed: {:#?}", self.failures);
    }
}

fn eval_loss<F>(store: &ParamStore, f: &F, graph: &dyn Fn() -> Graph) -> f64
where
    F: Fn(&mut Graph, &ParamStore) -> Result<Var>,
{
    let mut g = graph();
    let loss = f(&mut g, store).expect("forward");
    g.value(loss).item().expect("scalar loss")
}

/// Compares analytic parameter gradients of the scalar `f` with central
/// finite differences on up to `per_group` coordinates of every parameter.
pub fn check_params<F>(store: &mut ParamStore, f: F, per_group: usize, seed: u64) -> GradReport
where
    F: Fn(&mut Graph, &ParamStore) -> Result<Var>,
{
    check_params_in(store, f, per_group, seed, &Graph::eval)
}

/// As [`check_params`], with every evaluation on a graph from `graph`; a
/// seeded training graph replays the same dropout masks each time.
pub fn check_params_in<F>(
    store: &mut ParamStore,
    f: F,
    per_group: usize,
    seed: u64,
    graph: &dyn Fn() -> Graph,
) -> GradReport
where
    F: Fn(&mut Graph, &ParamStore) -> Result<Var>,
{
    store.zero_grad();
    let mut g = graph();
    let loss = f(&mut g, store).expect("forward");
    g.backward(loss).expect("backward").accumulate_into(store);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradReport::default();
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        let n = store.get(id).value.len();
        let coords: Vec<usize> = if n <= per_group {
            (0..n).collect()
        } else {
            sample(&mut rng, n, per_group).into_vec()
        };
        report.groups += 1;
        for k in coords {
            let original = store.get(id).value.data()[k];
            store.get_mut(id).value.data_mut()[k] = original + FD_EPS;
            let plus = eval_loss(store, &f, graph);
            store.get_mut(id).value.data_mut()[k] = original - FD_EPS;
            let minus = eval_loss(store, &f, graph);
            store.get_mut(id).value.data_mut()[k] = original;
            let numeric = (plus - minus) / (2.0 * FD_EPS);
            let analytic = store.get(id).grad.data()[k];
            let err = rel_error(analytic, numeric);
            report.checked += 1;
            report.worst = report.worst.max(err);
            if err.is_nan() || err >= FD_TOL {
                report.failures.push(format!(
                    "{}[{k}]: analytic {analytic:e} numeric {numeric:e} rel {err:e}",
                    store.get(id).name
                ));
            }
        }
    }
    report
}

/// Gradient check for a single op: `inputs` become parameters and the loss
/// is `sum(op(inputs) * R)` for a fixed random `R`, so every output element
/// contributes with a distinct weight.
pub fn check_op<F>(inputs: Vec<Tensor>, op: F, seed: u64) -> GradReport
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    check_op_in(inputs, op, seed, &Graph::eval)
}

pub fn check_op_in<F>(inputs: Vec<Tensor>, op: F, seed: u64, graph: &dyn Fn() -> Graph) -> GradReport
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let mut store = ParamStore::new();
    for (i, t) in inputs.into_iter().enumerate() {
        store.add(format!("x{i}"), t).unwrap();
    }
    let probe = {
        let mut g = graph();
        let vars: Vec<Var> = store.ids().map(|id| g.param(&store, id)).collect();
        let out = op(&mut g, &vars).expect("op");
        g.value(out).shape().to_vec()
    };
    let weights = random_tensor(&probe, seed ^ 0x5eed);
    let loss = move |g: &mut Graph, s: &ParamStore| {
        let vars: Vec<Var> = s.ids().map(|id| g.param(s, id)).collect();
        let out = op(g, &vars)?;
        let w = g.constant(weights.clone());
        let prod = g.mul(out, w)?;
        Ok(g.sum(prod))
    };
    check_params_in(&mut store, loss, usize::MAX, seed, graph)
}

type OpFn = Box<dyn Fn(&mut Graph, &[Var]) -> Result<Var>>;

fn case(
    name: &'static str,
    shapes: &[&[usize]],
    op: impl Fn(&mut Graph, &[Var]) -> Result<Var> + 'static,
) -> (&'static str, Vec<Tensor>, OpFn) {
    let inputs = shapes
        .iter()
        .enumerate()
        .map(|(i, s)| random_tensor(s, 100 + i as u64))
        .collect();
    (name, inputs, Box::new(op))
}

/// Finite-difference checks of every differentiable graph op on small
/// random inputs.
pub fn op_gradient_checks() -> Vec<(&'static str, GradReport)> {
    let cases = vec![
        case("matmul", &[&[3, 4], &[4, 2]], |g, x| g.matmul(x[0], x[1])),
        case("add", &[&[3, 4], &[3, 4]], |g, x| g.add(x[0], x[1])),
        case("add_row_broadcast", &[&[3, 4], &[4]], |g, x| g.add(x[0], x[1])),
        case("add_column_broadcast", &[&[3, 4], &[3, 1]], |g, x| g.add(x[0], x[1])),
        case("mul", &[&[3, 4], &[3, 4]], |g, x| g.mul(x[0], x[1])),
        case("mul_row_broadcast", &[&[3, 4], &[4]], |g, x| g.mul(x[0], x[1])),
        case("mul_column_broadcast", &[&[3, 4], &[1, 4]], |g, x| g.mul(x[0], x[1])),
        case("scale", &[&[2, 3]], |g, x| Ok(g.scale(x[0], -1.7))),
        case("tanh", &[&[2, 3]], |g, x| Ok(g.tanh(x[0]))),
        case("sigmoid", &[&[2, 3]], |g, x| Ok(g.sigmoid(x[0]))),
        case("relu", &[&[2, 3]], |g, x| Ok(g.relu(x[0]))),
        case("softmax_rows", &[&[3, 4]], |g, x| g.softmax(x[0], 1)),
        case("softmax_columns", &[&[3, 4]], |g, x| g.softmax(x[0], 0)),
        case("log_softmax_rows", &[&[3, 4]], |g, x| g.log_softmax(x[0], 1)),
        case("log_softmax_columns", &[&[3, 4]], |g, x| g.log_softmax(x[0], 0)),
        case("concat_rows", &[&[2, 3], &[1, 3]], |g, x| g.concat(&[x[0], x[1]], 0)),
        case("concat_columns", &[&[2, 3], &[2, 2]], |g, x| g.concat(&[x[0], x[1]], 1)),
        case("slice_rows", &[&[4, 3]], |g, x| g.slice(x[0], 0, 1, 3)),
        case("slice_columns", &[&[3, 4]], |g, x| g.slice(x[0], 1, 2, 4)),
        case("gather_rows", &[&[4, 3]], |g, x| g.gather_rows(x[0], &[2, 0, 2, 3])),
        case("average_rows", &[&[4, 3]], |g, x| g.average_rows(x[0], &[vec![0, 1], vec![1, 2, 3], vec![3]])),
        case("transpose", &[&[2, 3]], |g, x| g.transpose(x[0])),
        case("reshape", &[&[2, 3]], |g, x| g.reshape(x[0], &[3, 2])),
        case("layer_norm", &[&[3, 5]], |g, x| g.layer_norm(x[0], 1e-6)),
        case("sum", &[&[2, 3]], |g, x| Ok(g.sum(x[0]))),
        case("pick", &[&[3, 4]], |g, x| g.pick(x[0], &[0, 5, 5, 11])),
    ];
    let mut out: Vec<(&'static str, GradReport)> = cases
        .into_iter()
        .enumerate()
        .map(|(i, (name, inputs, op))| (name, check_op(inputs, op, i as u64)))
        .collect();
    let dropout = check_op_in(
        vec![random_tensor(&[4, 5], 7)],
        |g, x| g.dropout(x[0], 0.3),
        99,
        &|| Graph::train(11),
    );
    out.push(("dropout", dropout));
    out
}

pub fn random_tensor(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| normal.sample(&mut rng)).collect()).unwrap()
}

/// Random string over `alphabet`.
pub fn random_chars(rng: &mut impl Rng, alphabet: &[char], len: usize) -> Vec<char> {
    (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect()
}

pub fn chars(s: &str) -> Vec<char> {
    s.chars().collect()
}

pub fn encoder_config(kind: EncoderKind, layers: usize, heads: usize, hidden: usize) -> EncoderConfig {
    EncoderConfig {
        kind,
        layers,
        heads,
        hidden,
        dropout: 0.0,
        ..EncoderConfig::default()
    }
}

/// Freshly initialised model over `alphabet` with a two-label POS set.
pub fn tiny_model(encoder: EncoderConfig, mlp: usize, alphabet: &str, seed: u64) -> Model {
    let config = ModelConfig { encoder, mlp, seed };
    Model::new(config, CharVocab::new(alphabet.chars()), TagSet::from_pos(["NN", "VV"])).unwrap()
}

/// Finite-difference check of the joint loss of a full graph attention model
/// (2 layers, 2 heads, hidden 16) on a 6-character sentence that has two
/// lexicon matches.
pub fn full_model_gradient_check(per_group: usize) -> GradReport {
    let enc = encoder_config(EncoderKind::Gat, 2, 2, 16);
    let mut model = tiny_model(enc, 12, "访华成果表示", 5);
    let lattice = model
        .lattice(&chars("访华成果表示"), &Lexicon::new(["访华", "成果"]))
        .unwrap();
    assert_eq!(lattice.n_words(), 2);
    let tags = vec![0, 2, 0, 2, 0, 2];
    let heads = vec![3, 1, 0, 3, 6, 3];
    let mut m = model.clone();
    m.params = ParamStore::new();
    check_params(
        &mut model.params,
        |g, store| {
            let mut m = m.clone();
            m.params = store.clone();
            m.loss(g, &lattice, &tags, &heads)
        },
        per_group,
        17,
    )
}

fn bits(t: &Tensor) -> Vec<u64> {
    t.data().iter().map(|v| v.to_bits()).collect()
}

/// Number of sentences, out of `count` random ones, on which a graph
/// attention model with no lexicon and no structural contribution differs
/// in any bit from the character-level transformer with the same seed.
/// Both the disabled channel and a channel with zeroed scoring vectors are
/// compared, in evaluation and in training mode.
pub fn reduction_mismatches(count: usize, seed: u64) -> usize {
    let alphabet: Vec<char> = "甲乙丙丁戊己庚辛壬癸".chars().collect();
    let text: String = alphabet.iter().collect();
    let transformer = tiny_model(
        EncoderConfig { dropout: 0.2, ..encoder_config(EncoderKind::Transformer, 2, 2, 16) },
        12,
        &text,
        seed,
    );
    let disabled = tiny_model(
        EncoderConfig { dropout: 0.2, structural: false, ..encoder_config(EncoderKind::Gat, 2, 2, 16) },
        12,
        &text,
        seed,
    );
    let mut zeroed = tiny_model(
        EncoderConfig { dropout: 0.2, ..encoder_config(EncoderKind::Gat, 2, 2, 16) },
        12,
        &text,
        seed,
    );
    for p in zeroed.params.iter_mut() {
        if p.name.ends_with(".w") {
            p.value.data_mut().fill(0.0);
        }
    }
    let empty = Lexicon::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outputs = |m: &Model, lattice: &Lattice, graph: Graph| {
        let mut g = graph;
        let s = m.forward(&mut g, lattice).unwrap();
        (bits(g.value(s.tags)), bits(g.value(s.arcs)))
    };
    let mut mismatches = 0;
    for k in 0..count {
        let len = rng.gen_range(1..=12);
        let sentence = random_chars(&mut rng, &alphabet, len);
        let base = transformer.lattice(&sentence, &empty).unwrap();
        let mut same = true;
        for m in [&disabled, &zeroed] {
            let lattice = m.lattice(&sentence, &empty).unwrap();
            same &= outputs(&transformer, &base, Graph::eval()) == outputs(m, &lattice, Graph::eval());
            let s = seed ^ k as u64;
            same &= outputs(&transformer, &base, Graph::train(s)) == outputs(m, &lattice, Graph::train(s));
        }
        mismatches += usize::from(!same);
    }
    mismatches
}

/// Every single-rooted dependency tree over nodes `1..=n`, as head vectors.
pub fn all_trees(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut heads = vec![0; n];
    loop {
        if is_single_rooted_tree(&heads) {
            out.push(heads.clone());
        }
        // odometer over heads[i] in 0..=n
        let mut k = 0;
        loop {
            if k == n {
                return out;
            }
            heads[k] += 1;
            if heads[k] <= n {
                break;
            }
            heads[k] = 0;
            k += 1;
        }
    }
}

pub fn is_single_rooted_tree(heads: &[usize]) -> bool {
    let n = heads.len();
    if heads.iter().filter(|&&h| h == 0).count() != 1 {
        return false;
    }
    if heads.iter().enumerate().any(|(i, &h)| h == i + 1 || h > n) {
        return false;
    }
    (1..=n).all(|start| {
        let mut node = start;
        for _ in 0..=n {
            if node == 0 {
                return true;
            }
            node = heads[node - 1];
        }
        false
    })
}

#[derive(Debug, Default)]
pub struct MstReport {
    pub matrices: usize,
    pub score_mismatches: usize,
    pub structure_mismatches: usize,
    pub unique_optima: usize,
}

/// Compares the decoder's maximum spanning tree with exhaustive search on
/// `count` random `(n+1) x n` score matrices, `n` in `1..=5`.
pub fn mst_against_brute_force(count: usize, seed: u64) -> MstReport {
    let trees: Vec<Vec<Vec<usize>>> = (0..=5).map(all_trees).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut report = MstReport::default();
    for _ in 0..count {
        let n = rng.gen_range(1..=5);
        let data = (0..(n + 1) * n).map(|_| normal.sample(&mut rng)).collect();
        let scores = Tensor::new(vec![n + 1, n], data).unwrap();
        let score = |h: &[usize]| h.iter().enumerate().map(|(i, &j)| scores.at(j, i)).sum::<f64>();
        let mut ranked: Vec<(f64, &Vec<usize>)> = trees[n].iter().map(|t| (score(t), t)).collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
        let got = wcparse::decoder::mst(&scores, true).unwrap();
        report.matrices += 1;
        if !is_single_rooted_tree(&got) || (score(&got) - ranked[0].0).abs() > 1e-9 {
            report.score_mismatches += 1;
        }
        let unique = ranked.len() == 1 || ranked[0].0 - ranked[1].0 > 1e-9;
        if unique {
            report.unique_optima += 1;
            if &got != ranked[0].1 {
                report.structure_mismatches += 1;
            }
        }
    }
    report
}

/// Independent check of a decoded parse: spans partition the sentence, the
/// word tree has one root and no cycles, and every word is a right-branching
/// chain attached through its first character.
pub fn parse_violations(p: &ParseOutput) -> Vec<String> {
    let mut out = Vec::new();
    let n = p.chars.len();
    let mut covered = vec![0; n + 1];
    for &(b, e) in &p.words {
        if b == 0 || e < b || e > n {
            out.push(format!("bad span ({b}, {e})"));
            continue;
        }
        for c in b..=e {
            covered[c] += 1;
        }
    }
    if covered[1..].iter().any(|&c| c != 1) {
        out.push("spans do not partition the characters".into());
    }
    if !is_single_rooted_tree(&p.heads) {
        out.push("word heads are not a single-rooted tree".into());
    }
    if !is_single_rooted_tree(&p.char_heads) {
        out.push("character heads are not a single-rooted tree".into());
    }
    for (w, &(b, e)) in p.words.iter().enumerate() {
        for c in b + 1..=e.min(n) {
            if p.char_heads[c - 1] != c - 1 {
                out.push(format!("word {} is not right-branching", w + 1));
            }
        }
        let outside = p.char_heads.get(b.wrapping_sub(1)).copied().unwrap_or(usize::MAX);
        let expected = match p.heads.get(w) {
            Some(0) => 0,
            Some(&h) if h <= p.words.len() => p.words[h - 1].0,
            _ => usize::MAX - 1,
        };
        if outside != expected {
            out.push(format!("word {} attaches through the wrong character", w + 1));
        }
    }
    out
}

/// Random column-stochastic `(n+1) x n` arc distribution with self
/// attachment excluded.
pub fn random_arc_probs(rng: &mut impl Rng, n: usize) -> Tensor {
    let mut t = Tensor::zeros(&[n + 1, n]);
    for i in 0..n {
        let col: Vec<f64> = (0..=n).map(|j| if j == i + 1 { 0.0 } else { rng.gen::<f64>() }).collect();
        let z: f64 = col.iter().sum();
        for (j, v) in col.into_iter().enumerate() {
            t.data_mut()[j * n + i] = v / z;
        }
    }
    t
}

/// Random row-stochastic `n x tags` distribution.
pub fn random_tag_probs(rng: &mut impl Rng, n: usize, tags: usize) -> Tensor {
    let mut data = Vec::with_capacity(n * tags);
    for _ in 0..n {
        let row: Vec<f64> = (0..tags).map(|_| rng.gen::<f64>().powi(3)).collect();
        let z: f64 = row.iter().sum();
        data.extend(row.into_iter().map(|v| v / z));
    }
    Tensor::new(vec![n, tags], data).unwrap()
}

/// Number of invariant violations across `count` decodings of random tag and
/// arc distributions, sentence lengths `1..=max_len`.
pub fn decoding_violations(count: usize, max_len: usize, seed: u64) -> usize {
    let tags = TagSet::from_pos(["NN", "VV", "AD"]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet: Vec<char> = "甲乙丙丁".chars().collect();
    let mut bad = 0;
    for _ in 0..count {
        let n = rng.gen_range(1..=max_len);
        let text = random_chars(&mut rng, &alphabet, n);
        let tag_probs = random_tag_probs(&mut rng, n, tags.len());
        let arc_probs = random_arc_probs(&mut rng, n);
        match wcparse::decoder::decode(&tag_probs, &arc_probs, &tags, &text) {
            Ok(p) if parse_violations(&p).is_empty() => {}
            _ => bad += 1,
        }
    }
    bad
}

pub fn parse(forms: &[&str], pos: &[&str], heads: &[usize]) -> ParseOutput {
    CorpusSentence::from_words(forms, pos.iter().map(|p| p.to_string()).collect(), heads.to_vec())
        .unwrap()
        .to_parse_output()
}

/// `(correct, predicted, gold)` word counts for segmentation, POS and
/// dependencies.
pub type Expected = [(u64, u64, u64); 3];

/// Constructed prediction/gold pairs with hand-counted matches.
pub fn metric_cases() -> Vec<(&'static str, ParseOutput, ParseOutput, Expected)> {
    vec![
        (
            "over-split word",
            parse(&["甲", "乙", "丙"], &["NN", "NN", "VV"], &[3, 3, 0]),
            parse(&["甲乙", "丙"], &["NN", "VV"], &[2, 0]),
            [(1, 3, 2), (1, 3, 2), (1, 3, 2)],
        ),
        (
            "identical",
            parse(&["甲乙", "丙", "丁"], &["NN", "VV", "NN"], &[2, 0, 2]),
            parse(&["甲乙", "丙", "丁"], &["NN", "VV", "NN"], &[2, 0, 2]),
            [(3, 3, 3), (3, 3, 3), (3, 3, 3)],
        ),
        (
            "one POS and one head wrong",
            parse(&["甲乙", "丙", "丁"], &["VV", "VV", "NN"], &[2, 0, 1]),
            parse(&["甲乙", "丙", "丁"], &["NN", "VV", "NN"], &[2, 0, 2]),
            [(3, 3, 3), (2, 3, 3), (2, 3, 3)],
        ),
        (
            "head span differs",
            parse(&["甲", "乙", "丙"], &["NN", "VV", "NN"], &[2, 0, 2]),
            parse(&["甲", "乙丙"], &["NN", "VV"], &[2, 0]),
            [(1, 3, 2), (1, 3, 2), (0, 3, 2)],
        ),
        (
            "nothing matches",
            parse(&["甲", "乙"], &["NN", "NN"], &[0, 1]),
            parse(&["甲乙"], &["NN"], &[0]),
            [(0, 2, 1), (0, 2, 1), (0, 2, 1)],
        ),
    ]
}

fn ratio_prf((c, p, g): (u64, u64, u64)) -> [Ratio<u64>; 3] {
    let precision = Ratio::new(c, p);
    let recall = Ratio::new(c, g);
    let f1 = if c == 0 { Ratio::from_integer(0) } else { Ratio::new(2 * c, p + g) };
    [precision, recall, f1]
}

/// Compares metric output with exact rational values: the integer counts
/// must be equal and each reported score must be the correctly rounded
/// double of its rational value.
pub fn metric_mismatches(
    name: &str,
    report: &wcparse::metrics::EvalReport,
    expected: &Expected,
) -> Vec<String> {
    let mut out = Vec::new();
    let c = &report.counts;
    let groups = [("seg", &report.seg, &c.seg), ("pos", &report.pos, &c.pos), ("dep", &report.dep, &c.dep)];
    for ((label, prf, counts), &exp) in groups.iter().zip(expected) {
        let got = (counts.correct, counts.predicted, counts.gold);
        if got != exp {
            out.push(format!("{name} {label}: counts {got:?}, expected {exp:?}"));
        }
        let want = ratio_prf(exp);
        for (value, r) in [prf.precision, prf.recall, prf.f1].iter().zip(&want) {
            let nearest = *r.numer() as f64 / *r.denom() as f64;
            if *value != nearest {
                out.push(format!("{name} {label}: {value} is not {r}"));
            }
        }
    }
    out
}

/// Saves `model` to a temporary file, loads it back and lists every
/// difference in parameters, dev-set metrics or dev-set parses.
pub fn checkpoint_differences(
    model: &Model,
    dev: &[CorpusSentence],
    lexicon: &Lexicon,
) -> Vec<String> {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    wcparse::checkpoint::save(model, &path).unwrap();
    let loaded = wcparse::checkpoint::load(&path).unwrap();
    let mut out = Vec::new();
    if loaded.config != model.config || loaded.vocab != model.vocab || loaded.tags != model.tags {
        out.push("configuration, vocabulary or tag set changed".into());
    }
    for p in model.params.iter() {
        match loaded.params.by_name(&p.name) {
            Ok(q) if bits(&q.value) == bits(&p.value) && q.value.shape() == p.value.shape() => {}
            _ => out.push(format!("parameter {} changed", p.name)),
        }
    }
    let parses = |m: &Model| -> Vec<ParseOutput> {
        dev.iter().map(|s| m.parse(&s.chars, lexicon).unwrap()).collect()
    };
    let (before, after) = (parses(model), parses(&loaded));
    let changed = before.iter().zip(&after).filter(|(a, b)| a != b).count();
    if changed > 0 {
        out.push(format!("{changed} parses changed"));
    }
    let gold: Vec<ParseOutput> = dev.iter().map(CorpusSentence::to_parse_output).collect();
    let report = |p: &[ParseOutput]| {
        let r = wcparse::metrics::evaluate(p, &gold, None).unwrap();
        [r.seg, r.pos, r.dep]
            .iter()
            .flat_map(|x| [x.precision, x.recall, x.f1])
            .map(f64::to_bits)
            .collect::<Vec<u64>>()
    };
    if report(&before) != report(&after) {
        out.push("metrics changed".into());
    }
    out
}
