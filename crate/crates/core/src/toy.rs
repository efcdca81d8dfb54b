//! A small synthetic treebank for tests and tutorials.
//!
//! Sentences come from a tiny grammar over a 30-character alphabet:
//!
//! ```text
//! S   -> NP VP                     (the verb is the root)
//! NP  -> [这/DT] [[很/AD] JJ 的/DEG] NN
//! VP  -> [在/P NN] VV NP [了/AS]
//! ```
//!
//! Every content character also occurs as a single-character word,
//! so word boundaries are ambiguous from characters alone. The lexicon lists
//! all 20 multi-character words. Sentences in which a lexicon word straddles
//! a word boundary are rejected, so every lexicon match is a gold word. Four
//! lexicon words never occur in the training split and are frequent in the
//! dev split.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{parse_corpus, write_conll, CorpusSentence};
use crate::lattice::{match_words, Lexicon};

pub const TRAIN_SIZE: usize = 50;
pub const DEV_SIZE: usize = 20;
pub const SEED: u64 = 20_201_017;

const NOUNS: [&str; 12] = [
    "学生", "生活", "活动", "作家", "家人", "人民", "文化", "化学", "问题", "大学", "动作", "大家",
];
const VERBS: [&str; 6] = ["发展", "展开", "开发", "研究", "学习", "喜欢"];
const ADJECTIVES: [&str; 2] = ["重要", "美好"];
const SINGLE_NOUNS: [&str; 17] = [
    "学", "生", "活", "动", "作", "家", "人", "民", "文", "化", "问", "题", "大", "重", "要", "美", "好",
];
const SINGLE_VERBS: [&str; 9] = ["发", "展", "开", "研", "究", "学", "习", "喜", "欢"];

/// Lexicon words withheld from the training split.
pub const HELD_OUT: [&str; 4] = ["化学", "动作", "大家", "开发"];

const TRAIN_TEXT: &str = include_str!("../data/toy_train.conll");
const DEV_TEXT: &str = include_str!("../data/toy_dev.conll");
const LEXICON_TEXT: &str = include_str!("../data/toy_lexicon.txt");

pub fn lexicon_words() -> Vec<&'static str> {
    NOUNS.iter().chain(&VERBS).chain(&ADJECTIVES).copied().collect()
}

struct Builder {
    forms: Vec<&'static str>,
    pos: Vec<String>,
    heads: Vec<usize>,
}

impl Builder {
    fn push(&mut self, form: &'static str, pos: &str) -> usize {
        self.forms.push(form);
        self.pos.push(pos.to_string());
        self.heads.push(0);
        self.forms.len()
    }

    fn attach(&mut self, dep: usize, head: usize) {
        self.heads[dep - 1] = head;
    }
}

fn pick(rng: &mut ChaCha8Rng, words: &[&'static str], singles: &[&'static str], dev: bool) -> &'static str {
    if rng.gen_bool(0.4) {
        return singles.choose(rng).copied().expect("nonempty");
    }
    let (held, kept): (Vec<&'static str>, Vec<&'static str>) = words.iter().partition(|w| HELD_OUT.contains(w));
    if dev && !held.is_empty() && rng.gen_bool(0.5) {
        held.choose(rng).copied().expect("nonempty")
    } else {
        kept.choose(rng).copied().expect("nonempty")
    }
}

/// Returns the head word index of the noun phrase.
fn noun_phrase(b: &mut Builder, rng: &mut ChaCha8Rng, dev: bool) -> usize {
    let det = rng.gen_bool(0.3).then(|| b.push("这", "DT"));
    let modifier = if rng.gen_bool(0.4) {
        let adv = rng.gen_bool(0.3).then(|| b.push("很", "AD"));
        let adj = b.push(ADJECTIVES.choose(rng).expect("nonempty"), "JJ");
        let de = b.push("的", "DEG");
        if let Some(a) = adv {
            b.attach(a, adj);
        }
        b.attach(de, adj);
        Some(adj)
    } else {
        None
    };
    let noun = b.push(pick(rng, &NOUNS, &SINGLE_NOUNS, dev), "NN");
    if let Some(d) = det {
        b.attach(d, noun);
    }
    if let Some(m) = modifier {
        b.attach(m, noun);
    }
    noun
}

fn sentence(rng: &mut ChaCha8Rng, dev: bool) -> CorpusSentence {
    let mut b = Builder {
        forms: Vec::new(),
        pos: Vec::new(),
        heads: Vec::new(),
    };
    let subject = noun_phrase(&mut b, rng, dev);
    let pp = if rng.gen_bool(0.3) {
        let p = b.push("在", "P");
        let n = b.push(pick(rng, &NOUNS, &SINGLE_NOUNS, dev), "NN");
        b.attach(n, p);
        Some(p)
    } else {
        None
    };
    let verb = b.push(pick(rng, &VERBS, &SINGLE_VERBS, dev), "VV");
    b.attach(subject, verb);
    if let Some(p) = pp {
        b.attach(p, verb);
    }
    let object = noun_phrase(&mut b, rng, dev);
    b.attach(object, verb);
    if rng.gen_bool(0.3) {
        let asp = b.push("了", "AS");
        b.attach(asp, verb);
    }
    CorpusSentence::from_words(&b.forms, b.pos, b.heads).expect("grammar builds valid trees")
}

/// Whether every lexicon match in `s` is one of its words.
fn matches_are_gold(s: &CorpusSentence, lexicon: &Lexicon) -> bool {
    match_words(&s.chars, lexicon)
        .iter()
        .all(|m| s.words.contains(&(m.begin, m.end)))
}

pub struct ToyCorpus {
    pub train: Vec<CorpusSentence>,
    pub dev: Vec<CorpusSentence>,
    pub lexicon: Vec<&'static str>,
}

/// Generates distinct training and dev sentences from `seed`.
pub fn generate(seed: u64) -> ToyCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lexicon = Lexicon::new(lexicon_words());
    let mut seen = std::collections::HashSet::new();
    let mut draw = |dev: bool, count: usize, rng: &mut ChaCha8Rng| {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let s = sentence(rng, dev);
            if matches_are_gold(&s, &lexicon) && seen.insert(s.text()) {
                out.push(s);
            }
        }
        out
    };
    let train = draw(false, TRAIN_SIZE, &mut rng);
    let dev = draw(true, DEV_SIZE, &mut rng);
    ToyCorpus {
        train,
        dev,
        lexicon: lexicon_words(),
    }
}

/// File contents for the generated corpus: (train, dev, lexicon).
pub fn render(corpus: &ToyCorpus) -> (String, String, String) {
    let conll = |s: &[CorpusSentence]| write_conll(&s.iter().map(CorpusSentence::to_parse_output).collect::<Vec<_>>());
    let mut lex = String::from("# toy lexicon: one word per line\n");
    for w in &corpus.lexicon {
        lex.push_str(w);
        lex.push('\n');
    }
    (conll(&corpus.train), conll(&corpus.dev), lex)
}

pub fn bundled_train() -> Vec<CorpusSentence> {
    parse_corpus(TRAIN_TEXT, "toy_train.conll", false).expect("bundled corpus is valid")
}

pub fn bundled_dev() -> Vec<CorpusSentence> {
    parse_corpus(DEV_TEXT, "toy_dev.conll", false).expect("bundled corpus is valid")
}

pub fn bundled_lexicon() -> Lexicon {
    Lexicon::parse(LEXICON_TEXT)
}
