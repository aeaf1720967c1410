//! Reduced words in the free group `F_k`.
//!
//! Generators are numbered from 1. In the string form the generator `i`
//! is written as the `i`-th lowercase letter and its inverse as the
//! corresponding uppercase letter, so `"abAB"` is the commutator of the
//! first two generators. Ranks above 26 use the signed-integer form
//! `"1 -2 1"`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("invalid character {found:?} at position {position}")]
    Parse { position: usize, found: char },
    #[error("invalid generator token {token:?}")]
    Token { token: String },
    #[error("prefix length {index} out of range for word of length {len}")]
    Range { index: usize, len: usize },
    #[error("word needs {needed} group elements, tuple has {given}")]
    Arity { needed: usize, given: usize },
}

/// A generator or its formal inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter {
    generator: usize,
    inverted: bool,
}

impl Letter {
    /// Panics if `generator` is zero; generators are 1-based.
    pub fn new(generator: usize, inverted: bool) -> Self {
        assert!(generator >= 1, "generator indices start at 1");
        Letter { generator, inverted }
    }

    pub fn gen(generator: usize) -> Self {
        Letter::new(generator, false)
    }

    pub fn gen_inv(generator: usize) -> Self {
        Letter::new(generator, true)
    }

    pub fn generator(self) -> usize {
        self.generator
    }

    pub fn is_inverse(self) -> bool {
        self.inverted
    }

    /// +1 for a generator, -1 for an inverse.
    pub fn sign(self) -> i8 {
        if self.inverted {
            -1
        } else {
            1
        }
    }

    pub fn inverse(self) -> Self {
        Letter {
            generator: self.generator,
            inverted: !self.inverted,
        }
    }

    /// Signed integer form: `i` or `-i`.
    pub fn to_signed(self) -> i64 {
        let g = self.generator as i64;
        if self.inverted {
            -g
        } else {
            g
        }
    }

    pub fn from_signed(value: i64) -> Option<Self> {
        if value == 0 {
            return None;
        }
        Some(Letter::new(value.unsigned_abs() as usize, value < 0))
    }

    pub fn to_char(self) -> Option<char> {
        if self.generator > 26 {
            return None;
        }
        let base = if self.inverted { b'A' } else { b'a' };
        Some((base + (self.generator - 1) as u8) as char)
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'a'..='z' => Some(Letter::gen(c as usize - 'a' as usize + 1)),
            'A'..='Z' => Some(Letter::gen_inv(c as usize - 'A' as usize + 1)),
            _ => None,
        }
    }
}

// a < A < b < B < ...
impl Ord for Letter {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.generator, self.inverted).cmp(&(other.generator, other.inverted))
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A freely reduced word in `F_rank`. Immutable; every operation returns a
/// new word.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    letters: Vec<Letter>,
    rank: usize,
}

impl Word {
    pub fn empty(rank: usize) -> Self {
        Word {
            letters: Vec::new(),
            rank: rank.max(1),
        }
    }

    /// Freely reduces `letters`. The rank is the largest generator index
    /// mentioned, and at least 1.
    pub fn reduce<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut stack: Vec<Letter> = Vec::new();
        let mut rank = 1;
        for letter in letters {
            rank = rank.max(letter.generator);
            if stack.last() == Some(&letter.inverse()) {
                stack.pop();
            } else {
                stack.push(letter);
            }
        }
        Word {
            letters: stack,
            rank,
        }
    }

    /// Parses the letter form; the empty string is the identity word.
    pub fn parse(text: &str) -> Result<Self, WordError> {
        let mut letters = Vec::with_capacity(text.len());
        for (i, c) in text.chars().enumerate() {
            match Letter::from_char(c) {
                Some(l) => letters.push(l),
                None => {
                    return Err(WordError::Parse {
                        position: i + 1,
                        found: c,
                    })
                }
            }
        }
        Ok(Word::reduce(letters))
    }

    /// Parses the signed-integer form, e.g. `"1 -2 1"` or `"1,-2,1"`.
    pub fn parse_signed(text: &str) -> Result<Self, WordError> {
        let mut letters = Vec::new();
        for token in text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
        {
            let letter = token
                .parse::<i64>()
                .ok()
                .and_then(Letter::from_signed)
                .ok_or_else(|| WordError::Token {
                    token: token.to_string(),
                })?;
            letters.push(letter);
        }
        Ok(Word::reduce(letters))
    }

    /// Accepts either form: anything containing a digit is read as the
    /// signed-integer form.
    pub fn parse_any(text: &str) -> Result<Self, WordError> {
        if text.chars().any(|c| c.is_ascii_digit()) {
            Word::parse_signed(text)
        } else {
            Word::parse(text.trim())
        }
    }

    /// Same word viewed in `F_rank`. The rank never drops below the
    /// largest generator used.
    pub fn with_rank(mut self, rank: usize) -> Self {
        self.rank = self.rank.max(rank);
        self
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn concat(&self, other: &Word) -> Word {
        let rank = self.rank.max(other.rank);
        Word::reduce(self.letters.iter().chain(other.letters.iter()).copied()).with_rank(rank)
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
            rank: self.rank,
        }
    }

    /// The beginning segment `v_1 ... v_j`.
    pub fn prefix(&self, j: usize) -> Result<Word, WordError> {
        if j > self.letters.len() {
            return Err(WordError::Range {
                index: j,
                len: self.letters.len(),
            });
        }
        Ok(Word {
            letters: self.letters[..j].to_vec(),
            rank: self.rank,
        })
    }

    pub fn to_signed_string(&self) -> String {
        self.letters
            .iter()
            .map(|l| l.to_signed().to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Evaluates the word on `tuple`, multiplying left to right so that
    /// under a right action `x^(w(g))` applies the first letter first.
    pub fn evaluate<T, M, I>(&self, tuple: &[T], identity: T, mul: M, inv: I) -> Result<T, WordError>
    where
        T: Clone,
        M: Fn(&T, &T) -> T,
        I: Fn(&T) -> T,
    {
        let needed = self
            .letters
            .iter()
            .map(|l| l.generator)
            .max()
            .unwrap_or(0);
        if tuple.len() < needed {
            return Err(WordError::Arity {
                needed,
                given: tuple.len(),
            });
        }
        // Invert each generator at most once.
        let mut inverses: Vec<Option<T>> = vec![None; needed];
        let mut acc = identity;
        for letter in &self.letters {
            let i = letter.generator - 1;
            if letter.inverted {
                let g = inverses[i].get_or_insert_with(|| inv(&tuple[i]));
                acc = mul(&acc, g);
            } else {
                acc = mul(&acc, &tuple[i]);
            }
        }
        Ok(acc)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.iter().all(|l| l.generator <= 26) {
            for l in &self.letters {
                write!(f, "{}", l.to_char().unwrap())?;
            }
            Ok(())
        } else {
            f.write_str(&self.to_signed_string())
        }
    }
}

// Length first, then letter by letter.
impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| self.letters.cmp(&other.letters))
            .then_with(|| self.rank.cmp(&other.rank))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Word::parse_any(&text).map_err(serde::de::Error::custom)
    }
}

/// The `2k` letters of `F_k` in the order `a, A, b, B, ...`.
pub fn alphabet(k: usize) -> Vec<Letter> {
    (1..=k)
        .flat_map(|g| [Letter::gen(g), Letter::gen_inv(g)])
        .collect()
}

/// Number of reduced words of length exactly `len` in `F_k`.
pub fn count_reduced(k: usize, len: usize) -> u128 {
    if len == 0 {
        return 1;
    }
    let k = k as u128;
    2 * k * (2 * k - 1).pow(len as u32 - 1)
}

/// All reduced words of length `1..=max_len` in `F_k`, ordered by length
/// and then lexicographically.
pub fn enumerate_reduced(k: usize, max_len: usize) -> Vec<Word> {
    assert!(k >= 1, "rank must be positive");
    let letters = alphabet(k);
    let mut out = Vec::new();
    let mut layer: Vec<Vec<Letter>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * (2 * k));
        for w in &layer {
            for &l in &letters {
                if w.last() == Some(&l.inverse()) {
                    continue;
                }
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        out.extend(next.iter().map(|letters| Word {
            letters: letters.clone(),
            rank: k,
        }));
        layer = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn parse_examples() {
        let c = w("abAB");
        assert_eq!(c.len(), 4);
        assert_eq!(c.rank(), 2);
        let e = w("aA");
        assert!(e.is_empty());
        assert_eq!(e.rank(), 1);
        assert_eq!(
            Word::parse("ab7"),
            Err(WordError::Parse {
                position: 3,
                found: '7'
            })
        );
        assert!(w("").is_empty());
    }

    #[test]
    fn signed_form() {
        assert_eq!(Word::parse_signed("1 -2 1").unwrap(), w("aBa"));
        assert_eq!(Word::parse_any("1,2,-1,-2").unwrap(), w("abAB"));
        let big = Word::parse_signed("27 -3").unwrap();
        assert_eq!(big.rank(), 27);
        assert_eq!(big.to_string(), "27 -3");
        assert!(Word::parse_signed("1 0").is_err());
    }

    #[test]
    fn reduce_examples() {
        let (a, b) = (Letter::gen(1), Letter::gen(2));
        assert_eq!(Word::reduce([a, b, b.inverse()]).letters(), &[a]);
        assert!(Word::reduce([a, a.inverse(), b, b.inverse()]).is_empty());
        assert_eq!(Word::reduce([a, b, a.inverse(), b.inverse()]).len(), 4);
        // cancellation that only appears after an inner cancellation
        assert!(Word::reduce([a, b, b.inverse(), a.inverse()]).is_empty());
    }

    #[test]
    fn concat_inverse_prefix() {
        assert!(w("ab").concat(&w("BA")).is_empty());
        assert_eq!(w("a").concat(&Word::empty(1)), w("a"));
        assert_eq!(w("ab").concat(&w("b")).to_string(), "abb");
        assert_eq!(w("abAB").inverse().to_string(), "baBA");
        assert!(Word::empty(3).inverse().is_empty());
        assert_eq!(w("a").inverse().to_string(), "A");
        let c = w("abAB");
        assert_eq!(c.prefix(2).unwrap().to_string(), "ab");
        assert!(c.prefix(0).unwrap().is_empty());
        assert_eq!(c.prefix(4).unwrap(), c);
        assert_eq!(c.prefix(5), Err(WordError::Range { index: 5, len: 4 }));
    }

    #[test]
    fn enumeration_examples() {
        let names = |ws: Vec<Word>| ws.iter().map(|w| w.to_string()).collect::<Vec<_>>();
        assert_eq!(names(enumerate_reduced(2, 1)), ["a", "A", "b", "B"]);
        assert_eq!(enumerate_reduced(2, 2).len(), 16);
        assert_eq!(
            names(enumerate_reduced(1, 3)),
            ["a", "A", "aa", "AA", "aaa", "AAA"]
        );
        assert_eq!(enumerate_reduced(2, 3).len(), 52);
        assert_eq!(enumerate_reduced(2, 5).len(), 484);
        assert_eq!(count_reduced(2, 5), 324);
    }

    #[test]
    fn evaluate_identity_and_arity() {
        let mul = |x: &i64, y: &i64| x + y;
        let neg = |x: &i64| -x;
        assert_eq!(Word::empty(2).evaluate(&[3, 5], 0, mul, neg).unwrap(), 0);
        assert_eq!(w("aA").evaluate(&[3], 0, mul, neg).unwrap(), 0);
        assert_eq!(w("abB").evaluate(&[3, 5], 0, mul, neg).unwrap(), 3);
        assert_eq!(
            w("ab").evaluate(&[3], 0, mul, neg),
            Err(WordError::Arity { needed: 2, given: 1 })
        );
    }

    #[test]
    fn display_roundtrip() {
        for word in enumerate_reduced(3, 3) {
            assert_eq!(Word::parse(&word.to_string()).unwrap().letters(), word.letters());
        }
    }
}
