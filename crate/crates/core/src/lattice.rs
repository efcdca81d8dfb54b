//! Lexicon matching and the word-character lattice.
//!
//! A lattice holds the characters of a sentence followed by every lexicon
//! word found in it. Each ordered token pair carries a [`Relation`]
//! describing how information flows from the source token to the target.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Default, Clone)]
struct TrieNode {
    children: HashMap<char, TrieNode>,
    terminal: bool,
}

/// A dictionary of multi-character words with a prefix index.
#[derive(Debug, Default, Clone)]
pub struct Lexicon {
    words: BTreeSet<String>,
    root: TrieNode,
    max_word_len: usize,
}

impl Lexicon {
    /// Builds a lexicon, ignoring entries shorter than two characters.
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut lex = Lexicon::default();
        for w in words {
            lex.insert(w.as_ref());
        }
        lex
    }

    fn insert(&mut self, word: &str) {
        let len = word.chars().count();
        if len < 2 || !self.words.insert(word.to_string()) {
            return;
        }
        let mut node = &mut self.root;
        for c in word.chars() {
            node = node.children.entry(c).or_default();
        }
        node.terminal = true;
        self.max_word_len = self.max_word_len.max(len);
    }

    /// One word per line; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        Lexicon::new(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty()),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Lexicon::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn max_word_len(&self) -> usize {
        self.max_word_len
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    /// Exclusive end offsets of all entries that start at `start`.
    fn ends_from(&self, chars: &[char], start: usize) -> Vec<usize> {
        let mut ends = Vec::new();
        let mut node = &self.root;
        for (off, c) in chars[start..].iter().enumerate() {
            match node.children.get(c) {
                Some(next) => node = next,
                None => break,
            }
            if node.terminal {
                ends.push(start + off + 1);
            }
        }
        ends
    }
}

/// A matched word covering characters `begin..=end` (1-based, inclusive).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WordSpan {
    pub begin: usize,
    pub end: usize,
    pub surface: String,
}

impl WordSpan {
    pub fn len(&self) -> usize {
        self.end + 1 - self.begin
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Zero-based character indices covered by the word.
    pub fn char_indices(&self) -> std::ops::Range<usize> {
        self.begin - 1..self.end
    }
}

/// Every lexicon word occurring in `chars`, sorted by (begin, end).
pub fn match_words(chars: &[char], lexicon: &Lexicon) -> Vec<WordSpan> {
    let mut out = Vec::new();
    for start in 0..chars.len() {
        for end in lexicon.ends_from(chars, start) {
            out.push(WordSpan {
                begin: start + 1,
                end,
                surface: chars[start..end].iter().collect(),
            });
        }
    }
    out
}

/// Edge types between lattice tokens, read "source → target".
///
/// `A -> B` means information flows from A on the left to B on the right;
/// `A <- B` means it flows from B on the right to A on the left.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    /// A word to a character on its right.
    WordToChar,
    /// A word to a character on its left.
    CharFromWord,
    /// A character to a character on its right.
    CharToChar,
    /// A character to a character on its left.
    CharFromChar,
    SelfChar,
    /// A character to a word on its right.
    CharToWord,
    /// A character to a word on its left.
    WordFromChar,
    SelfWord,
    Others,
}

impl Relation {
    pub const COUNT: usize = 9;

    pub const ALL: [Relation; Relation::COUNT] = [
        Relation::WordToChar,
        Relation::CharFromWord,
        Relation::CharToChar,
        Relation::CharFromChar,
        Relation::SelfChar,
        Relation::CharToWord,
        Relation::WordFromChar,
        Relation::SelfWord,
        Relation::Others,
    ];

    /// Row of this relation in the relation embedding table.
    pub fn index(self) -> usize {
        self as usize
    }

    /// 1-based row number in the relation table; `None` for [`Relation::Others`].
    pub fn table_number(self) -> Option<usize> {
        match self {
            Relation::Others => None,
            r => Some(r.index() + 1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Relation::WordToChar => "word->char",
            Relation::CharFromWord => "char<-word",
            Relation::CharToChar => "char->char",
            Relation::CharFromChar => "char<-char",
            Relation::SelfChar => "self-char",
            Relation::CharToWord => "char->word",
            Relation::WordFromChar => "word<-char",
            Relation::SelfWord => "self-word",
            Relation::Others => "others",
        }
    }

    /// The relation obtained by swapping source and target.
    pub fn reversed(self) -> Relation {
        match self {
            Relation::WordToChar => Relation::WordFromChar,
            Relation::WordFromChar => Relation::WordToChar,
            Relation::CharFromWord => Relation::CharToWord,
            Relation::CharToWord => Relation::CharFromWord,
            Relation::CharToChar => Relation::CharFromChar,
            Relation::CharFromChar => Relation::CharToChar,
            r => r,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Char(usize),
    Word(usize, usize),
}

fn kind_of(token: usize, n_chars: usize, words: &[WordSpan]) -> Kind {
    if token < n_chars {
        Kind::Char(token + 1)
    } else {
        let w = &words[token - n_chars];
        Kind::Word(w.begin, w.end)
    }
}

/// Relation governing information flow from token `source` to token
/// `target` (0-based token indices: characters first, then words).
///
/// Left/right is decided by begin position with ties broken by end
/// position. A word source whose span covers the target character, and any
/// pair of distinct words, fall back to [`Relation::Others`].
pub fn assign_relation(target: usize, source: usize, n_chars: usize, words: &[WordSpan]) -> Relation {
    let t = kind_of(target, n_chars, words);
    let s = kind_of(source, n_chars, words);
    if target == source {
        return match t {
            Kind::Char(_) => Relation::SelfChar,
            Kind::Word(..) => Relation::SelfWord,
        };
    }
    match (t, s) {
        (Kind::Char(p), Kind::Char(q)) => {
            if q < p {
                Relation::CharToChar
            } else {
                Relation::CharFromChar
            }
        }
        (Kind::Char(p), Kind::Word(b, e)) => {
            if e < p {
                Relation::WordToChar
            } else if b > p {
                Relation::CharFromWord
            } else {
                Relation::Others
            }
        }
        // Ordered by begin position, ties by end: a character sharing the
        // word's first position is left of it.
        (Kind::Word(b, _), Kind::Char(q)) => {
            if q <= b {
                Relation::CharToWord
            } else {
                Relation::WordFromChar
            }
        }
        (Kind::Word(..), Kind::Word(..)) => Relation::Others,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    chars: Vec<char>,
    words: Vec<WordSpan>,
    // relations[target * n_tokens + source]
    relations: Vec<Relation>,
}

impl Lattice {
    pub fn build(chars: &[char], lexicon: &Lexicon) -> Result<Self> {
        let words = match_words(chars, lexicon);
        Lattice::from_parts(chars.to_vec(), words)
    }

    /// Builds a lattice over an explicit word list. The words are kept in
    /// the given order; spans must be in range and match the characters.
    pub fn from_parts(chars: Vec<char>, words: Vec<WordSpan>) -> Result<Self> {
        if chars.is_empty() {
            return Err(Error::Contract("lattice over an empty sentence".into()));
        }
        let n = chars.len();
        for w in &words {
            if w.begin == 0 || w.begin > w.end || w.end > n {
                return Err(Error::data(
                    "lattice",
                    format!("word span ({}, {}) outside 1..={n}", w.begin, w.end),
                ));
            }
            let surface: String = chars[w.char_indices()].iter().collect();
            if surface != w.surface {
                return Err(Error::data(
                    "lattice",
                    format!("word `{}` does not match characters `{surface}`", w.surface),
                ));
            }
        }
        let total = n + words.len();
        let mut relations = Vec::with_capacity(total * total);
        for target in 0..total {
            for source in 0..total {
                relations.push(assign_relation(target, source, n, &words));
            }
        }
        Ok(Lattice {
            chars,
            words,
            relations,
        })
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn words(&self) -> &[WordSpan] {
        &self.words
    }

    pub fn n_chars(&self) -> usize {
        self.chars.len()
    }

    pub fn n_words(&self) -> usize {
        self.words.len()
    }

    pub fn n_tokens(&self) -> usize {
        self.chars.len() + self.words.len()
    }

    pub fn relation(&self, target: usize, source: usize) -> Relation {
        self.relations[target * self.n_tokens() + source]
    }

    /// Relation-table rows for every (target, source) pair, row-major.
    pub fn relation_indices(&self) -> Vec<usize> {
        self.relations.iter().map(|r| r.index()).collect()
    }

    /// A copy with the word tokens removed.
    pub fn chars_only(&self) -> Lattice {
        Lattice::from_parts(self.chars.clone(), Vec::new()).expect("characters already validated")
    }

    pub fn dump(&self) -> LatticeDump {
        let total = self.n_tokens();
        LatticeDump {
            chars: self.chars.iter().map(|c| c.to_string()).collect(),
            words: self.words.clone(),
            relations: (0..total)
                .map(|t| (0..total).map(|s| self.relation(t, s).name().to_string()).collect())
                .collect(),
        }
    }
}

/// JSON view of a lattice: `relations[target][source]` holds relation names.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LatticeDump {
    pub chars: Vec<String>,
    pub words: Vec<WordSpan>,
    pub relations: Vec<Vec<String>>,
}
