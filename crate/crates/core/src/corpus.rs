//! CoNLL-like corpus reading and writing.
//!
//! One word per line with tab-separated columns `index form POS head`;
//! sentences are separated by blank lines and `#` starts a comment line.
//! Extra columns are ignored. Characters are Unicode scalar values taken
//! as-is, without normalisation.

use std::collections::HashSet;
use std::path::Path;

use crate::decoder::{check_tree, ParseOutput};
use crate::error::{Error, Result};
use crate::heads::{Boundary, JointTag};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusSentence {
    pub chars: Vec<char>,
    /// 1-based inclusive character spans, one per word.
    pub words: Vec<(usize, usize)>,
    pub pos: Vec<String>,
    /// Word-level heads, 0 = root.
    pub heads: Vec<usize>,
}

impl CorpusSentence {
    /// Builds and validates a sentence from word forms, tags and heads.
    pub fn from_words<S: AsRef<str>>(forms: &[S], pos: Vec<String>, heads: Vec<usize>) -> Result<Self> {
        let mut chars = Vec::new();
        let mut words = Vec::new();
        for f in forms {
            let start = chars.len() + 1;
            chars.extend(f.as_ref().chars());
            if chars.len() + 1 == start {
                return Err(Error::data("sentence", "empty word form"));
            }
            words.push((start, chars.len()));
        }
        let s = CorpusSentence {
            chars,
            words,
            pos,
            heads,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.words.is_empty() {
            return Err(Error::data("sentence", "no words"));
        }
        if self.pos.len() != self.words.len() || self.heads.len() != self.words.len() {
            return Err(Error::data("sentence", "word, POS and head counts differ"));
        }
        let mut next = 1;
        for &(b, e) in &self.words {
            if b != next || e < b {
                return Err(Error::data("sentence", "word spans do not partition the characters"));
            }
            next = e + 1;
        }
        if next != self.chars.len() + 1 {
            return Err(Error::data("sentence", "word spans do not cover the characters"));
        }
        check_tree(&self.heads).map_err(|m| Error::data("sentence", m))
    }

    pub fn word_form(&self, w: usize) -> String {
        let (b, e) = self.words[w];
        self.chars[b - 1..e].iter().collect()
    }

    pub fn text(&self) -> String {
        self.chars.iter().collect()
    }

    /// Per-character joint tags.
    pub fn char_tags(&self) -> Vec<JointTag> {
        self.words
            .iter()
            .zip(&self.pos)
            .flat_map(|(&(b, e), p)| {
                Boundary::for_word(e + 1 - b).into_iter().map(move |boundary| JointTag {
                    boundary,
                    pos: p.clone(),
                })
            })
            .collect()
    }

    /// Character-level heads: each word is a right-branching chain attached
    /// through its first character.
    pub fn char_heads(&self) -> Vec<usize> {
        let mut out = vec![0; self.chars.len()];
        for (w, &(b, e)) in self.words.iter().enumerate() {
            out[b - 1] = match self.heads[w] {
                0 => 0,
                h => self.words[h - 1].0,
            };
            for c in b + 1..=e {
                out[c - 1] = c - 1;
            }
        }
        out
    }

    pub fn to_parse_output(&self) -> ParseOutput {
        ParseOutput {
            chars: self.chars.clone(),
            words: self.words.clone(),
            pos: self.pos.clone(),
            heads: self.heads.clone(),
            char_heads: self.char_heads(),
        }
    }
}

impl From<&ParseOutput> for CorpusSentence {
    fn from(p: &ParseOutput) -> Self {
        CorpusSentence {
            chars: p.chars.clone(),
            words: p.words.clone(),
            pos: p.pos.clone(),
            heads: p.heads.clone(),
        }
    }
}

struct Row {
    line: usize,
    form: String,
    pos: String,
    head: usize,
}

fn parse_row(line_no: usize, line: &str) -> std::result::Result<(usize, Row), String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() < 4 {
        return Err(format!("expected 4 tab-separated columns, found {}", cols.len()));
    }
    let index = cols[0]
        .trim()
        .parse::<usize>()
        .map_err(|_| format!("bad index `{}`", cols[0]))?;
    let head = cols[3]
        .trim()
        .parse::<usize>()
        .map_err(|_| format!("bad head `{}`", cols[3]))?;
    let form = cols[1].trim();
    if form.is_empty() {
        return Err("empty form".into());
    }
    Ok((
        index,
        Row {
            line: line_no,
            form: form.to_string(),
            pos: cols[2].trim().to_string(),
            head,
        },
    ))
}

fn build_sentence(rows: &[(usize, Row)]) -> std::result::Result<CorpusSentence, String> {
    for (k, (idx, row)) in rows.iter().enumerate() {
        if *idx != k + 1 {
            return Err(format!("line {}: index {} out of sequence", row.line, idx));
        }
    }
    let forms: Vec<&str> = rows.iter().map(|(_, r)| r.form.as_str()).collect();
    let pos = rows.iter().map(|(_, r)| r.pos.clone()).collect();
    let heads = rows.iter().map(|(_, r)| r.head).collect();
    CorpusSentence::from_words(&forms, pos, heads).map_err(|e| e.to_string())
}

/// Parses a corpus. Malformed sentences are an error naming the sentence and
/// line, or with `lenient` are skipped with a warning.
pub fn parse_corpus(text: &str, source: &str, lenient: bool) -> Result<Vec<CorpusSentence>> {
    let mut out = Vec::new();
    let mut rows: Vec<(usize, Row)> = Vec::new();
    let mut pending_err: Option<String> = None;
    let mut start_line = 1;
    let mut sentence_no = 0;

    let mut flush = |rows: &mut Vec<(usize, Row)>, err: &mut Option<String>, start: usize| -> Result<()> {
        if rows.is_empty() && err.is_none() {
            return Ok(());
        }
        sentence_no += 1;
        let result = match err.take() {
            Some(e) => Err(e),
            None => build_sentence(rows),
        };
        rows.clear();
        match result {
            Ok(s) => out.push(s),
            Err(msg) => {
                let context = format!("{source}, sentence {sentence_no} (line {start})");
                if lenient {
                    log::warn!("skipping {context}: {msg}");
                } else {
                    return Err(Error::data(context, msg));
                }
            }
        }
        Ok(())
    };

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.starts_with('#') {
            continue;
        }
        if trimmed.is_empty() {
            flush(&mut rows, &mut pending_err, start_line)?;
            continue;
        }
        if rows.is_empty() && pending_err.is_none() {
            start_line = line_no;
        }
        match parse_row(line_no, line) {
            Ok(r) => rows.push(r),
            Err(e) => {
                pending_err.get_or_insert(format!("line {line_no}: {e}"));
            }
        }
    }
    flush(&mut rows, &mut pending_err, start_line)?;
    Ok(out)
}

pub fn load_corpus(path: impl AsRef<Path>, lenient: bool) -> Result<Vec<CorpusSentence>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, &path.display().to_string(), lenient)
}

/// Serialises parses in the corpus format, one blank line after each sentence.
pub fn write_conll(outputs: &[ParseOutput]) -> String {
    let mut s = String::new();
    for p in outputs {
        s.push_str(&sentence_conll(p));
        s.push('\n');
    }
    s
}

pub fn sentence_conll(p: &ParseOutput) -> String {
    let mut s = String::new();
    for w in 0..p.words.len() {
        s.push_str(&format!("{}\t{}\t{}\t{}\n", w + 1, p.word_form(w), p.pos[w], p.heads[w]));
    }
    s
}

/// Surface forms of all words in `sentences`.
pub fn word_vocab(sentences: &[CorpusSentence]) -> HashSet<String> {
    sentences
        .iter()
        .flat_map(|s| (0..s.words.len()).map(move |w| s.word_form(w)))
        .collect()
}

/// One word per line; blank lines and `#` comments are ignored.
pub fn load_word_list(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}
