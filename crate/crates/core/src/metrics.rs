//! Word-level precision, recall and F1 for segmentation, POS tagging and
//! unlabeled dependencies.
//!
//! All scores are micro-averaged from summed counts. A dependency is correct
//! only when the dependent word and its head word (or the root) are both
//! segmented exactly as in the gold tree.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::decoder::ParseOutput;
use crate::error::{Error, Result};

pub const DEFAULT_BIN_WIDTH: usize = 15;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub correct: u64,
    pub predicted: u64,
    pub gold: u64,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.correct, self.predicted)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.correct, self.gold)
    }

    /// Harmonic mean of precision and recall, computed as `2c / (p + g)`
    /// so the result is the correctly rounded rational.
    pub fn f1(&self) -> f64 {
        ratio(2 * self.correct, self.predicted + self.gold)
    }

    pub fn prf(&self) -> Prf {
        Prf {
            precision: self.precision(),
            recall: self.recall(),
            f1: self.f1(),
        }
    }

    fn merge(&mut self, other: Counts) {
        self.correct += other.correct;
        self.predicted += other.predicted;
        self.gold += other.gold;
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Recall numerator and denominator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecallCounts {
    pub correct: u64,
    pub total: u64,
}

impl RecallCounts {
    pub fn recall(&self) -> f64 {
        ratio(self.correct, self.total)
    }

    fn merge(&mut self, other: RecallCounts) {
        self.correct += other.correct;
        self.total += other.total;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub seg: Counts,
    pub pos: Counts,
    pub dep: Counts,
    /// Correct dependencies among correctly segmented dependents.
    pub dep_given_seg: RecallCounts,
    pub oov_seg: RecallCounts,
    pub oov_pos: RecallCounts,
    pub oov_dep: RecallCounts,
}

impl EvalCounts {
    fn merge(&mut self, o: &EvalCounts) {
        self.seg.merge(o.seg);
        self.pos.merge(o.pos);
        self.dep.merge(o.dep);
        self.dep_given_seg.merge(o.dep_given_seg);
        self.oov_seg.merge(o.oov_seg);
        self.oov_pos.merge(o.oov_pos);
        self.oov_dep.merge(o.oov_dep);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OovRecall {
    pub words: u64,
    pub seg: f64,
    pub pos: f64,
    pub dep: f64,
}

/// Scores for sentences whose length lies in `[lower, upper)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthBin {
    pub lower: usize,
    pub upper: usize,
    pub sentences: usize,
    pub seg: Prf,
    pub pos: Prf,
    pub dep: Prf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub sentences: usize,
    pub seg: Prf,
    pub pos: Prf,
    pub dep: Prf,
    pub dep_given_seg: f64,
    pub oov: Option<OovRecall>,
    pub by_length: Vec<LengthBin>,
    pub counts: EvalCounts,
}

type Span = (usize, usize);

/// Counts for a single aligned sentence pair.
pub fn sentence_counts(
    pred: &ParseOutput,
    gold: &ParseOutput,
    train_vocab: Option<&HashSet<String>>,
) -> EvalCounts {
    let gold_words: HashMap<Span, (usize, &str, Option<Span>)> = gold
        .words
        .iter()
        .enumerate()
        .map(|(w, &s)| (s, (w, gold.pos[w].as_str(), head_span(gold, w))))
        .collect();

    let mut c = EvalCounts::default();
    c.seg.predicted = pred.words.len() as u64;
    c.seg.gold = gold.words.len() as u64;
    c.pos.predicted = c.seg.predicted;
    c.pos.gold = c.seg.gold;
    c.dep.predicted = c.seg.predicted;
    c.dep.gold = c.seg.gold;

    // gold word index -> (pos correct, dep correct) for matched spans
    let mut matched: HashMap<usize, (bool, bool)> = HashMap::new();
    for (w, span) in pred.words.iter().enumerate() {
        let Some(&(gw, gpos, ghead)) = gold_words.get(span) else {
            continue;
        };
        let pos_ok = pred.pos[w] == gpos;
        let dep_ok = head_span(pred, w) == ghead;
        c.seg.correct += 1;
        c.pos.correct += u64::from(pos_ok);
        c.dep.correct += u64::from(dep_ok);
        matched.insert(gw, (pos_ok, dep_ok));
    }
    c.dep_given_seg = RecallCounts {
        correct: c.dep.correct,
        total: c.seg.correct,
    };

    if let Some(vocab) = train_vocab {
        for w in 0..gold.words.len() {
            if vocab.contains(&gold.word_form(w)) {
                continue;
            }
            let hit = matched.get(&w);
            c.oov_seg.total += 1;
            c.oov_pos.total += 1;
            c.oov_dep.total += 1;
            if let Some(&(pos_ok, dep_ok)) = hit {
                c.oov_seg.correct += 1;
                c.oov_pos.correct += u64::from(pos_ok);
                c.oov_dep.correct += u64::from(dep_ok);
            }
        }
    }
    c
}

fn head_span(p: &ParseOutput, w: usize) -> Option<Span> {
    match p.heads[w] {
        0 => None,
        h => Some(p.words[h - 1]),
    }
}

fn check_alignment(pred: &[ParseOutput], gold: &[ParseOutput]) -> Result<()> {
    if pred.len() != gold.len() {
        return Err(Error::data(
            "evaluate",
            format!("{} predicted sentences but {} gold sentences", pred.len(), gold.len()),
        ));
    }
    for (i, (p, g)) in pred.iter().zip(gold).enumerate() {
        if p.chars != g.chars {
            return Err(Error::Alignment { sentence: i + 1 });
        }
    }
    Ok(())
}

/// Summed counts over an aligned corpus.
pub fn corpus_counts(
    pred: &[ParseOutput],
    gold: &[ParseOutput],
    train_vocab: Option<&HashSet<String>>,
) -> Result<EvalCounts> {
    check_alignment(pred, gold)?;
    let mut total = EvalCounts::default();
    for (p, g) in pred.iter().zip(gold) {
        total.merge(&sentence_counts(p, g, train_vocab));
    }
    Ok(total)
}

pub fn evaluate(
    pred: &[ParseOutput],
    gold: &[ParseOutput],
    train_vocab: Option<&HashSet<String>>,
) -> Result<EvalReport> {
    let counts = corpus_counts(pred, gold, train_vocab)?;
    let oov = train_vocab.map(|_| OovRecall {
        words: counts.oov_seg.total,
        seg: counts.oov_seg.recall(),
        pos: counts.oov_pos.recall(),
        dep: counts.oov_dep.recall(),
    });
    let by_length = if pred.is_empty() {
        Vec::new()
    } else {
        length_binned_f1(pred, gold, DEFAULT_BIN_WIDTH)?
    };
    Ok(EvalReport {
        sentences: pred.len(),
        seg: counts.seg.prf(),
        pos: counts.pos.prf(),
        dep: counts.dep.prf(),
        dep_given_seg: counts.dep_given_seg.recall(),
        oov,
        by_length,
        counts,
    })
}

/// Scores per sentence-length bin `[l, l + width)`; empty bins are omitted.
pub fn length_binned_f1(pred: &[ParseOutput], gold: &[ParseOutput], width: usize) -> Result<Vec<LengthBin>> {
    check_alignment(pred, gold)?;
    if pred.is_empty() {
        return Err(Error::data("length bins", "empty test set"));
    }
    if width == 0 {
        return Err(Error::Config("bin width must be positive".into()));
    }
    let mut bins: Vec<(usize, EvalCounts)> = Vec::new();
    for (p, g) in pred.iter().zip(gold) {
        let bin = g.chars.len() / width;
        if bins.len() <= bin {
            bins.resize(bin + 1, (0, EvalCounts::default()));
        }
        bins[bin].0 += 1;
        bins[bin].1.merge(&sentence_counts(p, g, None));
    }
    Ok(bins
        .into_iter()
        .enumerate()
        .filter(|(_, (n, _))| *n > 0)
        .map(|(b, (n, c))| LengthBin {
            lower: b * width,
            upper: (b + 1) * width,
            sentences: n,
            seg: c.seg.prf(),
            pos: c.pos.prf(),
            dep: c.dep.prf(),
        })
        .collect())
}

/// CSV rows `lower,upper,sentences,seg_f1,pos_f1,dep_f1` for plotting.
pub fn length_bins_csv(bins: &[LengthBin]) -> String {
    let mut out = String::from("lower,upper,sentences,seg_f1,pos_f1,dep_f1\n");
    for b in bins {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            b.lower, b.upper, b.sentences, b.seg.f1, b.pos.f1, b.dep.f1
        ));
    }
    out
}
