//! The five-letter word calculus.
//!
//! Letters stand for the 1-forms
//!
//! ```text
//! a = dt/t   b = dt/(1-t^2)   c = -dt/(1+t^2)   B = t dt/(1-t^2)   G = -t dt/(1+t^2)
//! ```
//!
//! and a word `L_1 ... L_k` for the iterated integral `int_0^t L_1 ... L_k`
//! (rightmost letter innermost). Two independent routes lead from a word to a
//! residue: [`series_coeff`] expands the integral as a power series truncated at
//! `t^p`, and [`word_to_value`] translates the word into a signed alternating
//! MMV whose value is then computed by the evaluator.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{self, add_mod, mul_mod, neg_mod, sub_mod, Prime, Residue};
use crate::index::{AmmvIndex, AmmvPart, Sign, ValueRef};
use crate::relations::{int, LinearCombination, Provenance, Relation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("word `{0}` ends in `a` and has no value")]
    TrailingA(String),
    #[error("empty word")]
    Empty,
    #[error("unknown letter `{0}` (expected a, b, c, B or G)")]
    BadLetter(char),
    #[error("weight {weight} needs p > {floor}, got p = {p}")]
    PrimeTooSmall { p: u64, weight: usize, floor: u64 },
    #[error("internal: division by p outside the tracked head slot")]
    StrayDivision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    A,
    B,
    C,
    Beta,
    Gamma,
}

impl Letter {
    pub const ALL: [Letter; 5] = [Letter::A, Letter::B, Letter::C, Letter::Beta, Letter::Gamma];
    pub const NON_A: [Letter; 4] = [Letter::B, Letter::C, Letter::Beta, Letter::Gamma];

    pub fn to_char(self) -> char {
        match self {
            Letter::A => 'a',
            Letter::B => 'b',
            Letter::C => 'c',
            Letter::Beta => 'B',
            Letter::Gamma => 'G',
        }
    }

    pub fn from_char(ch: char) -> Result<Letter, WordError> {
        Ok(match ch {
            'a' => Letter::A,
            'b' => Letter::B,
            'c' => Letter::C,
            'B' => Letter::Beta,
            'G' => Letter::Gamma,
            other => return Err(WordError::BadLetter(other)),
        })
    }

    /// `(sigma, eps)` of the form `w_sigma^eps`; `None` for `a`.
    fn signs(self) -> Option<(Sign, Sign)> {
        match self {
            Letter::A => None,
            Letter::B => Some((Sign::Plus, Sign::Minus)),
            Letter::C => Some((Sign::Minus, Sign::Minus)),
            Letter::Beta => Some((Sign::Plus, Sign::Plus)),
            Letter::Gamma => Some((Sign::Minus, Sign::Plus)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new(letters: Vec<Letter>) -> Result<Self, WordError> {
        if letters.is_empty() {
            return Err(WordError::Empty);
        }
        Ok(Word(letters))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn weight(&self) -> usize {
        self.0.len()
    }

    pub fn is_translatable(&self) -> bool {
        self.0.last() != Some(&Letter::A)
    }

    /// Number of leading `a` letters plus one: the power of p in front of `[t^p]`.
    pub fn head_valuation(&self) -> u32 {
        self.0.iter().take_while(|&&l| l == Letter::A).count() as u32 + 1
    }

    /// Number of `b` and `c` letters.
    pub fn odd_letter_count(&self) -> usize {
        self.0
            .iter()
            .filter(|l| matches!(l, Letter::B | Letter::C))
            .count()
    }

    /// All words of the given weight over the five letters.
    pub fn all_of_weight(weight: usize) -> Vec<Word> {
        let mut out = vec![Vec::new()];
        for _ in 0..weight {
            out = out
                .into_iter()
                .flat_map(|w: Vec<Letter>| {
                    Letter::ALL.iter().map(move |&l| {
                        let mut n = w.clone();
                        n.push(l);
                        n
                    })
                })
                .collect();
        }
        out.into_iter()
            .filter(|w| !w.is_empty())
            .map(Word)
            .collect()
    }

    /// Words of the given weight that do not end in `a`.
    pub fn translatable_of_weight(weight: usize) -> Vec<Word> {
        Self::all_of_weight(weight)
            .into_iter()
            .filter(Word::is_translatable)
            .collect()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = WordError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Word::new(
            s.trim()
                .chars()
                .map(Letter::from_char)
                .collect::<Result<_, _>>()?,
        )
    }
}

/// Formal integer combination of words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordSum(BTreeMap<Word, i64>);

impl WordSum {
    pub fn terms(&self) -> &BTreeMap<Word, i64> {
        &self.0
    }

    pub fn add(&mut self, w: Word, k: i64) {
        let slot = self.0.entry(w.clone()).or_insert(0);
        *slot += k;
        if *slot == 0 {
            self.0.remove(&w);
        }
    }

    /// Sum of the multiplicities.
    pub fn total(&self) -> i64 {
        self.0.values().sum()
    }
}

impl fmt::Display for WordSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(w, k)| {
                if *k == 1 {
                    w.to_string()
                } else {
                    format!("{k}*{w}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// All interleavings of `u` and `v` preserving internal order, with multiplicity.
pub fn shuffle(u: &Word, v: &Word) -> WordSum {
    fn rec(u: &[Letter], v: &[Letter], prefix: &mut Vec<Letter>, out: &mut WordSum) {
        if u.is_empty() || v.is_empty() {
            let mut w = prefix.clone();
            w.extend_from_slice(u);
            w.extend_from_slice(v);
            out.add(Word(w), 1);
            return;
        }
        prefix.push(u[0]);
        rec(&u[1..], v, prefix, out);
        prefix.pop();
        prefix.push(v[0]);
        rec(u, &v[1..], prefix, out);
        prefix.pop();
    }
    let mut out = WordSum::default();
    rec(&u.0, &v.0, &mut Vec::new(), &mut out);
    out
}

/// `p^k [t^p] int_0^t w mod p`, where `k` is the word's head valuation
/// (one plus the number of leading `a`s), so the result is the cofactor of the
/// outermost summation variable sitting at `n_1 = p`. For words not starting
/// with `a` this is `p [t^p] int_0^t w`.
pub fn series_coeff(w: &Word, p: Prime) -> Result<Residue, WordError> {
    let pv = p.get();
    // The translated value has weight at most weight(w) - 1, and the evaluator
    // needs p > that + 2.
    let floor = w.weight() as u64 + 1;
    if pv <= floor {
        return Err(WordError::PrimeTooSmall {
            p: pv,
            weight: w.weight(),
            floor,
        });
    }
    if !w.is_translatable() {
        return Err(WordError::TrailingA(w.to_string()));
    }
    let n = pv as usize;
    let tables = arith::tables(p);
    let inv = &tables.inverses;
    // Coefficients of t^0 .. t^{p-1}; `head` holds the t^p coefficient as
    // numerator / p^valuation.
    let mut g = vec![0u64; n];
    g[0] = 1;
    let mut head: Option<(u64, u32)> = None;
    let mut h = vec![0u64; n];
    for &letter in w.0.iter().rev() {
        if letter == Letter::A {
            if g[0] != 0 {
                return Err(WordError::StrayDivision);
            }
            for m in 1..n {
                g[m] = mul_mod(g[m], inv[m], pv);
            }
            head = head.map(|(num, v)| (num, v + 1));
            continue;
        }
        // h = density * g on degrees 0..p-1, via two-term recurrences.
        let (shift, alternate) = match letter {
            Letter::B => (0, false),
            Letter::C => (0, true),
            Letter::Beta => (1, false),
            Letter::Gamma => (1, true),
            Letter::A => unreachable!(),
        };
        for m in 0..n {
            let base = if m >= shift { g[m - shift] } else { 0 };
            let prev = if m >= 2 { h[m - 2] } else { 0 };
            h[m] = if alternate {
                sub_mod(base, prev, pv)
            } else {
                add_mod(base, prev, pv)
            };
        }
        let negate = alternate;
        // Integrate: t^m -> t^{m+1} / (m+1).
        let top = if negate {
            neg_mod(h[n - 1], pv)
        } else {
            h[n - 1]
        };
        head = Some((top, 1));
        g[0] = 0;
        for m in 1..n {
            let c = mul_mod(h[m - 1], inv[m], pv);
            g[m] = if negate { neg_mod(c, pv) } else { c };
        }
    }
    let (num, valuation) = head.unwrap_or((0, 1));
    debug_assert_eq!(valuation, w.head_valuation());
    Ok(Residue::from_u64(num, p))
}

/// A value with a sign and an optional chi factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedValueRef {
    pub value: ValueRef,
    pub scalar: i64,
    pub chi: bool,
}

/// The translation of a word: its head valuation and its value (none when the
/// head variable would have to be even, so the coefficient of `t^p` vanishes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordValue {
    pub head_valuation: u32,
    pub term: Option<SignedValueRef>,
}

/// Translate `a^{s_1-1} L_1 ... a^{s_r-1} L_r` into `scalar * chi^k * M(s_2..s_r; eps~; sigma~)`.
///
/// With `L_j = w_{sigma_j}^{eps_j}`, the integral expands with parities
/// `eps~_j = eps_j ... eps_r`, alternations `sigma~_1 = sigma_1`,
/// `sigma~_j = sigma_{j-1} sigma_j`, and an overall sign `(-1)^N` where `N`
/// counts `j < r` with `sigma_j = -1`, `eps~_j = +1`, `eps~_{j+1} = -1`. The
/// head variable is pinned to the odd prime p, so the term vanishes unless
/// `eps~_1 = -1`; its alternating factor `sigma_1^{(p+1)/2}` contributes `-chi`
/// when `sigma_1 = -1`. A one-letter word leaves the empty value 1.
pub fn word_to_value(w: &Word) -> Result<WordValue, WordError> {
    if !w.is_translatable() {
        return Err(WordError::TrailingA(w.to_string()));
    }
    let mut blocks: Vec<(u32, Sign, Sign)> = Vec::new();
    let mut run = 1u32;
    for &l in &w.0 {
        match l.signs() {
            None => run += 1,
            Some((sigma, eps)) => {
                blocks.push((run, sigma, eps));
                run = 1;
            }
        }
    }
    let r = blocks.len();
    let mut eps_t = vec![Sign::Plus; r + 1];
    for j in (0..r).rev() {
        eps_t[j] = eps_t[j + 1].times(blocks[j].2);
    }
    let head_valuation = blocks[0].0;
    if eps_t[0] == Sign::Plus {
        return Ok(WordValue {
            head_valuation,
            term: None,
        });
    }
    let sigma_t: Vec<Sign> = (0..r)
        .map(|j| {
            if j == 0 {
                blocks[0].1
            } else {
                blocks[j - 1].1.times(blocks[j].1)
            }
        })
        .collect();
    let flips = (0..r.saturating_sub(1))
        .filter(|&j| {
            blocks[j].1 == Sign::Minus && eps_t[j] == Sign::Plus && eps_t[j + 1] == Sign::Minus
        })
        .count();
    let mut scalar = if flips % 2 == 0 { 1 } else { -1 };
    let chi = blocks[0].1 == Sign::Minus;
    if chi {
        scalar = -scalar;
    }
    let tail = AmmvIndex::new(
        (1..r)
            .map(|j| AmmvPart::new(blocks[j].0, eps_t[j], sigma_t[j]))
            .collect(),
    );
    Ok(WordValue {
        head_valuation,
        term: Some(SignedValueRef {
            value: ValueRef::plain(tail),
            scalar,
            chi,
        }),
    })
}

/// The relation from `x ⧢ v` (x a single non-`a` letter).
///
/// `p [t^p]` of the product `int x * int v` only involves denominators below p,
/// so the words of maximal head valuation in the shuffle satisfy
/// `sum series_coeff = 0 mod p`. Returns `None` if every such word vanishes.
pub fn shuffle_relation(x: Letter, v: &Word) -> Option<Relation> {
    let product = shuffle(&Word(vec![x]), v);
    let top = product.terms().keys().map(Word::head_valuation).max()?;
    let mut lc = LinearCombination::new();
    for (w, k) in product.terms() {
        if w.head_valuation() != top {
            continue;
        }
        let translated = word_to_value(w).expect("shuffles of translatable words are translatable");
        if let Some(t) = translated.term {
            lc.add_value(t.value, t.chi, int(k * t.scalar));
        }
    }
    let label = format!("{}⧢{}", x.to_char(), v);
    Some(Relation::new(
        lc.without_common_chi(),
        Provenance::LinearShuffle,
        label,
    ))
    .filter(|r| !r.lhs.is_zero())
}

/// Every relation `x ⧢ v` with `x` in {b, c, B, G} and `v` translatable of weight `wt - 1`.
/// The resulting values have weight `wt - k`, where `k` is the top head valuation.
pub fn linear_shuffle_relations(wt: usize) -> Vec<Relation> {
    assert!(wt >= 2, "linear shuffle relations start at weight 2");
    let words = Word::translatable_of_weight(wt - 1);
    let pairs: Vec<(Letter, &Word)> = Letter::NON_A
        .iter()
        .flat_map(|&x| words.iter().map(move |v| (x, v)))
        .collect();
    pairs
        .par_iter()
        .filter_map(|&(x, v)| shuffle_relation(x, v))
        .collect()
}

/// Outcome of checking the observation that a linear shuffle relation is
/// nontrivial exactly when the number of `b` and `c` letters is one or three.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OddLetterCheck {
    pub products: usize,
    pub nontrivial: usize,
    pub violations: Vec<String>,
}

pub fn odd_letter_check(wt: usize) -> OddLetterCheck {
    let words = Word::translatable_of_weight(wt - 1);
    let mut check = OddLetterCheck {
        products: 0,
        nontrivial: 0,
        violations: Vec::new(),
    };
    for &x in &Letter::NON_A {
        for v in &words {
            check.products += 1;
            let count = v.odd_letter_count() + usize::from(matches!(x, Letter::B | Letter::C));
            let predicted = count == 1 || count == 3;
            let actual = shuffle_relation(x, v).is_some();
            if actual {
                check.nontrivial += 1;
            }
            if predicted != actual {
                check.violations.push(format!(
                    "{}⧢{}: {} odd letters, relation {}",
                    x.to_char(),
                    v,
                    count,
                    if actual { "nontrivial" } else { "trivial" }
                ));
            }
        }
    }
    check
}

/// Evaluate a translated word at p (scalar and chi applied).
pub fn translated_residue(t: &SignedValueRef, p: Prime) -> Result<Residue, crate::eval::EvalError> {
    let mut v = crate::eval::eval_mod(&t.value, p)?;
    if t.scalar < 0 {
        v = -v;
    }
    if t.chi {
        v = v * arith::chi_mod(p);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::sieve_window;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn pr(p: u64) -> Prime {
        Prime::new(p).unwrap()
    }

    #[test]
    fn shuffle_examples() {
        let s = shuffle(&w("b"), &w("bb"));
        assert_eq!(s.terms().len(), 1);
        assert_eq!(s.terms()[&w("bbb")], 3);
        let s = shuffle(&w("b"), &w("BG"));
        assert_eq!(s.to_string(), "bBG + BbG + BGb");
        let s = shuffle(&w("a"), &w("b"));
        assert_eq!(s.to_string(), "ab + ba");
    }

    #[test]
    fn shuffle_counts_and_commutes() {
        for (u, v) in [("ab", "cBG"), ("bb", "bb"), ("aGc", "B")] {
            let (u, v) = (w(u), w(v));
            let uv = shuffle(&u, &v);
            assert_eq!(uv, shuffle(&v, &u));
            let n = u.weight() + v.weight();
            let k = u.weight();
            let binom = (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64);
            assert_eq!(uv.total(), binom);
        }
    }

    #[test]
    fn shuffle_is_associative() {
        let (x, y, z) = (w("b"), w("aG"), w("cB"));
        let mut left = WordSum::default();
        for (m, k) in shuffle(&x, &y).terms() {
            for (n, j) in shuffle(m, &z).terms() {
                left.add(n.clone(), k * j);
            }
        }
        let mut right = WordSum::default();
        for (m, k) in shuffle(&y, &z).terms() {
            for (n, j) in shuffle(&x, m).terms() {
                right.add(n.clone(), k * j);
            }
        }
        assert_eq!(left, right);
    }

    #[test]
    fn series_examples() {
        assert_eq!(series_coeff(&w("b"), pr(5)).unwrap().value(), 1);
        assert_eq!(series_coeff(&w("c"), pr(5)).unwrap().value(), 4);
        assert_eq!(series_coeff(&w("bBG"), pr(5)).unwrap().value(), 3);
        assert!(matches!(
            series_coeff(&w("ba"), pr(7)),
            Err(WordError::TrailingA(_))
        ));
        assert!(series_coeff(&w("bBG"), pr(5)).is_ok());
        assert!(series_coeff(&w("bBGb"), pr(5)).is_err());
    }

    #[test]
    fn translation_examples() {
        let t = word_to_value(&w("bBG")).unwrap().term.unwrap();
        assert_eq!(t.value.to_string(), "z2:1,1~");
        assert_eq!((t.scalar, t.chi), (1, false));
        // Two odd letters force an even head variable: the word vanishes.
        assert_eq!(word_to_value(&w("bb")).unwrap().term, None);
        let b = word_to_value(&w("b")).unwrap().term.unwrap();
        assert_eq!(b.value.depth(), 0);
        assert_eq!((b.scalar, b.chi), (1, false));
        let c = word_to_value(&w("c")).unwrap().term.unwrap();
        assert_eq!((c.scalar, c.chi), (-1, true));
        assert_eq!(word_to_value(&w("aab")).unwrap().head_valuation, 3);
    }

    #[test]
    fn translation_matches_series_on_short_words() {
        for wt in 1..=3 {
            for word in Word::translatable_of_weight(wt) {
                let tv = word_to_value(&word).unwrap();
                for &p in sieve_window(7, 60).unwrap().primes() {
                    let series = series_coeff(&word, p).unwrap();
                    let value = match &tv.term {
                        None => Residue::from_u64(0, p),
                        Some(t) => translated_residue(t, p).unwrap(),
                    };
                    assert_eq!(series, value, "{word} at {p}");
                }
            }
        }
    }

    #[test]
    fn linear_shuffle_examples() {
        let rel = shuffle_relation(Letter::B, &w("bb")).unwrap();
        assert_eq!(rel.lhs.to_string(), "3*T:1,1");
        let rel = shuffle_relation(Letter::B, &w("BG")).unwrap();
        assert_eq!(rel.lhs.values().len(), 3);
        assert!(shuffle_relation(Letter::B, &w("b")).is_none());
    }

    #[test]
    fn product_series_vanishes() {
        for wt in 2..=3 {
            for v in Word::translatable_of_weight(wt - 1) {
                for &x in &Letter::NON_A {
                    let prod = shuffle(&Word(vec![x]), &v);
                    let top = prod.terms().keys().map(Word::head_valuation).max().unwrap();
                    for &p in sieve_window(7, 40).unwrap().primes() {
                        let mut acc = Residue::from_u64(0, p);
                        for (word, k) in prod.terms() {
                            if word.head_valuation() == top {
                                acc = acc + Residue::new(*k, p) * series_coeff(word, p).unwrap();
                            }
                        }
                        assert_eq!(acc.value(), 0, "{}⧢{v} at {p}", x.to_char());
                    }
                }
            }
        }
    }
}
