//! Index combinatorics: signed compositions, the O-plus semigroup, family
//! specializations, reversal, and enumeration of index sets.
//!
//! Every mixed value is stored in one canonical form, [`AmmvIndex`]: a list of
//! parts `(s, eps, sigma)` read from the outermost summation variable inwards.
//! `eps = +` restricts that variable to even integers and `eps = -` to odd ones;
//! `sigma = -` attaches the alternating weight `(-1)^ceil(n/2)`. Plain MMVs are
//! the `sigma = +` slice, and t/T/S/z2 values are MMVs with a fixed parity
//! pattern. Euler sums have their own index type because their weights are
//! `eps^n` rather than parity indicators.
//!
//! Text grammar (see the README for the full description):
//!
//! ```text
//! label  := [prefix ":"] parts ["*"]
//! prefix := "t" | "T" | "S" | "z2" | "es" | "M" | "am"
//! parts  := part ("," part)*
//! ```
//!
//! Without a prefix (or with `M`/`am`) a part is `[-]s[~]`: a leading `-` makes
//! the variable odd, a trailing `~` sets `sigma = -`. Under `t`, `T`, `S`, `z2`
//! the parity comes from the family and a part is `s[~]`. Under `es` a part is
//! `s[~]` with `~` marking the sign `eps = -1`. A trailing `*` selects the star
//! (weak inequality) variant.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("index parts must be non-zero")]
    ZeroPart,
    #[error("{family} indices take positive parts, got {value}")]
    NonPositive { family: &'static str, value: i64 },
    #[error("depth {depth} is out of range for weight {weight}")]
    BadDepth { weight: u32, depth: usize },
    #[error("slot {slot} is out of range for depth {depth}")]
    SlotOutOfRange { slot: usize, depth: usize },
    #[error("two-slot constraint needs j < i, got i = {i}, j = {j}")]
    SlotOrder { i: usize, j: usize },
    #[error("cannot parse index `{text}`: {reason}")]
    Parse { text: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_i64(v: i64) -> Sign {
        if v < 0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn times(self, other: Sign) -> Sign {
        if self == other {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// An element of the signed-number alphabet: a magnitude with an optional bar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignedNumber {
    pub magnitude: u32,
    pub sign: Sign,
}

impl SignedNumber {
    pub fn new(magnitude: u32, sign: Sign) -> Self {
        assert!(magnitude > 0, "signed numbers have positive magnitude");
        SignedNumber { magnitude, sign }
    }

    pub fn plain(magnitude: u32) -> Self {
        Self::new(magnitude, Sign::Plus)
    }

    pub fn bar(magnitude: u32) -> Self {
        Self::new(magnitude, Sign::Minus)
    }
}

impl fmt::Display for SignedNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Sign::Plus => write!(f, "{}", self.magnitude),
            Sign::Minus => write!(f, "{}~", self.magnitude),
        }
    }
}

/// Magnitudes add; the result is barred iff exactly one input is.
pub fn oplus(a: SignedNumber, b: SignedNumber) -> SignedNumber {
    SignedNumber {
        magnitude: a.magnitude + b.magnitude,
        sign: a.sign.times(b.sign),
    }
}

/// An MMV index in Z_*^d: positive parts select even variables, negative parts odd ones.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignedComposition(Vec<i32>);

impl SignedComposition {
    pub fn new(parts: Vec<i32>) -> Result<Self, IndexError> {
        if parts.iter().any(|&s| s == 0) {
            return Err(IndexError::ZeroPart);
        }
        Ok(SignedComposition(parts))
    }

    pub fn parts(&self) -> &[i32] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn weight(&self) -> u32 {
        self.0.iter().map(|s| s.unsigned_abs()).sum()
    }

    pub fn negated(&self) -> SignedComposition {
        SignedComposition(self.0.iter().map(|s| -s).collect())
    }

    pub fn to_ammv(&self) -> AmmvIndex {
        AmmvIndex(
            self.0
                .iter()
                .map(|&s| AmmvPart::new(s.unsigned_abs(), Sign::from_i64(s as i64), Sign::Plus))
                .collect(),
        )
    }
}

impl fmt::Display for SignedComposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// An Euler-sum index: magnitudes with signs `eps_j`, weights `eps_j^n / n^s`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EulerIndex(Vec<SignedNumber>);

impl EulerIndex {
    pub fn new(parts: Vec<SignedNumber>) -> Self {
        EulerIndex(parts)
    }

    pub fn empty() -> Self {
        EulerIndex(Vec::new())
    }

    pub fn parts(&self) -> &[SignedNumber] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn weight(&self) -> u32 {
        self.0.iter().map(|s| s.magnitude).sum()
    }
}

impl fmt::Display for EulerIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AmmvPart {
    pub s: u32,
    /// `Plus`: even variable, `Minus`: odd variable.
    pub eps: Sign,
    /// `Minus` attaches `(-1)^ceil(n/2)`.
    pub sigma: Sign,
}

impl AmmvPart {
    pub fn new(s: u32, eps: Sign, sigma: Sign) -> Self {
        assert!(s > 0, "parts have positive magnitude");
        AmmvPart { s, eps, sigma }
    }
}

/// An alternating MMV index; depth zero is the empty product with value 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AmmvIndex(Vec<AmmvPart>);

impl AmmvIndex {
    pub fn new(parts: Vec<AmmvPart>) -> Self {
        AmmvIndex(parts)
    }

    pub fn empty() -> Self {
        AmmvIndex(Vec::new())
    }

    /// From parallel `s`, `eps`, `sigma` vectors given as +-1 integers.
    pub fn from_vectors(s: &[u32], eps: &[i64], sigma: &[i64]) -> Result<Self, IndexError> {
        if s.len() != eps.len() || s.len() != sigma.len() {
            return Err(IndexError::Parse {
                text: format!("{s:?};{eps:?};{sigma:?}"),
                reason: "s, eps and sigma must have equal length".into(),
            });
        }
        if s.iter().any(|&x| x == 0) {
            return Err(IndexError::ZeroPart);
        }
        Ok(AmmvIndex(
            s.iter()
                .zip(eps)
                .zip(sigma)
                .map(|((&s, &e), &g)| AmmvPart::new(s, Sign::from_i64(e), Sign::from_i64(g)))
                .collect(),
        ))
    }

    pub fn parts(&self) -> &[AmmvPart] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn weight(&self) -> u32 {
        self.0.iter().map(|p| p.s).sum()
    }

    pub fn has_alternation(&self) -> bool {
        self.0.iter().any(|p| p.sigma == Sign::Minus)
    }

    /// The plain MMV index, if no part carries alternation.
    pub fn as_signed_composition(&self) -> Option<SignedComposition> {
        if self.has_alternation() {
            return None;
        }
        Some(SignedComposition(
            self.0
                .iter()
                .map(|p| p.s as i32 * p.eps.value() as i32)
                .collect(),
        ))
    }

    /// The named family whose parity pattern this index follows.
    pub fn family(&self) -> Family {
        let d = self.0.len();
        if d == 0 {
            return Family::Ammv;
        }
        let matches = |f: Family| (1..=d).all(|j| self.0[j - 1].eps == family_parity(f, d, j));
        for f in [Family::Zeta2, Family::SmallT, Family::BigT, Family::S] {
            if matches(f) {
                return f;
            }
        }
        if self.has_alternation() {
            Family::Ammv
        } else {
            Family::Mmv
        }
    }

    fn write_parts(&self, f: &mut fmt::Formatter<'_>, with_parity: bool) -> fmt::Result {
        for (k, part) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            if with_parity && part.eps == Sign::Minus {
                write!(f, "-")?;
            }
            write!(f, "{}", part.s)?;
            if part.sigma == Sign::Minus {
                write!(f, "~")?;
            }
        }
        Ok(())
    }

    /// Index text without the family prefix, in the notation of `family()`.
    pub fn body(&self) -> String {
        struct Body<'a>(&'a AmmvIndex, bool);
        impl fmt::Display for Body<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.write_parts(f, self.1)
            }
        }
        let named = matches!(
            self.family(),
            Family::Zeta2 | Family::SmallT | Family::BigT | Family::S
        );
        Body(self, !named).to_string()
    }
}

impl fmt::Display for AmmvIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family() {
            fam @ (Family::Zeta2 | Family::SmallT | Family::BigT | Family::S) => {
                write!(f, "{}:", fam.tag())?;
                self.write_parts(f, false)
            }
            fam => {
                write!(f, "{}:", fam.tag())?;
                self.write_parts(f, true)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    EulerSum,
    Mmv,
    Ammv,
    SmallT,
    BigT,
    S,
    Zeta2,
}

impl Family {
    pub fn tag(self) -> &'static str {
        match self {
            Family::EulerSum => "es",
            Family::Mmv => "M",
            Family::Ammv => "am",
            Family::SmallT => "t",
            Family::BigT => "T",
            Family::S => "S",
            Family::Zeta2 => "z2",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Family> {
        Some(match tag {
            "es" => Family::EulerSum,
            "M" => Family::Mmv,
            "am" => Family::Ammv,
            "t" => Family::SmallT,
            "T" => Family::BigT,
            "S" => Family::S,
            "z2" => Family::Zeta2,
            _ => return None,
        })
    }

    /// Families whose parity pattern is fixed by the depth.
    pub fn is_specialization(self) -> bool {
        matches!(
            self,
            Family::SmallT | Family::BigT | Family::S | Family::Zeta2
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Family {
    type Err = IndexError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::from_tag(s).ok_or_else(|| IndexError::Parse {
            text: s.to_string(),
            reason: "unknown family (expected one of es, M, am, t, T, S, z2)".into(),
        })
    }
}

/// Parity of slot `j` (1-based) for a specialization family at depth `d`.
pub fn family_parity(f: Family, d: usize, j: usize) -> Sign {
    match f {
        Family::SmallT => Sign::Minus,
        Family::Zeta2 => Sign::Plus,
        // T: (-1)^{d-j+1}; the innermost variable is odd.
        Family::BigT => {
            if (d - j + 1) % 2 == 1 {
                Sign::Minus
            } else {
                Sign::Plus
            }
        }
        // S: (-1)^{d-j}; the innermost variable is even.
        Family::S => {
            if (d - j) % 2 == 1 {
                Sign::Minus
            } else {
                Sign::Plus
            }
        }
        _ => unreachable!("family_parity on a non-specialization family"),
    }
}

/// Map a positive composition to the signed composition of a family.
pub fn specialize(f: Family, s: &[i64]) -> Result<SignedComposition, IndexError> {
    if let Some(&bad) = s.iter().find(|&&x| x <= 0) {
        return Err(IndexError::NonPositive {
            family: f.tag(),
            value: bad,
        });
    }
    let d = s.len();
    let parts = s
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let sign = match f {
                Family::Mmv | Family::Ammv | Family::EulerSum => Sign::Plus,
                _ => family_parity(f, d, k + 1),
            };
            x as i32 * sign.value() as i32
        })
        .collect();
    SignedComposition::new(parts)
}

/// Like [`specialize`] but the parts may carry bars (alternation).
pub fn specialize_barred(f: Family, parts: &[(u32, Sign)]) -> AmmvIndex {
    let d = parts.len();
    AmmvIndex(
        parts
            .iter()
            .enumerate()
            .map(|(k, &(s, sigma))| AmmvPart::new(s, family_parity(f, d, k + 1), sigma))
            .collect(),
    )
}

/// `(idx', sign)` with `M(s) = sign * M(idx')`: `idx'` is `s` reversed and negated,
/// and `sign = (-1)^{|s|}`. Applying it to `s` read backwards gives the reversal law
/// `M(reverse(s)) = (-1)^{|s|} M(-s)`.
pub fn reversal_pair(s: &SignedComposition) -> (SignedComposition, i64) {
    let rev = SignedComposition(s.0.iter().rev().map(|x| -x).collect());
    let sign = if s.weight() % 2 == 0 { 1 } else { -1 };
    (rev, sign)
}

/// The same change of variables for any index. Returns `(idx', sign, chi_power)` with
/// `value(idx) = sign * chi^chi_power * value(idx')`; only alternating parts pick up chi.
pub fn reversal(index: &Index) -> (Index, i64, u32) {
    match index {
        Index::Euler(e) => {
            let mut sign = if e.weight() % 2 == 0 { 1 } else { -1 };
            for part in &e.0 {
                sign *= part.sign.value();
            }
            (
                Index::Euler(EulerIndex(e.0.iter().rev().copied().collect())),
                sign,
                0,
            )
        }
        Index::Mixed(m) => {
            let mut sign = if m.weight() % 2 == 0 { 1 } else { -1 };
            let mut chi = 0;
            for part in &m.0 {
                if part.sigma == Sign::Minus {
                    // sigma^{ceil((p-n)/2)} = sigma^{p'+1} sigma^{ceil(n/2)} = -chi * ...
                    sign = -sign;
                    chi ^= 1;
                }
            }
            let parts =
                m.0.iter()
                    .rev()
                    .map(|p| AmmvPart::new(p.s, p.eps.flip(), p.sigma))
                    .collect();
            (Index::Mixed(AmmvIndex(parts)), sign, chi)
        }
    }
}

/// A constraint on the magnitudes of an enumerated index (slots are 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SlotConstraint {
    #[default]
    None,
    /// `|s_i| >= 2`
    OneSlot(usize),
    /// `|s_i| >= 3`
    Diagonal(usize),
    /// `|s_i| >= 2` and `|s_j| >= 2`, `j < i`
    TwoSlot(usize, usize),
}

impl SlotConstraint {
    fn check(&self, d: usize) -> Result<(), IndexError> {
        let in_range = |slot: usize| {
            if slot == 0 || slot > d {
                Err(IndexError::SlotOutOfRange { slot, depth: d })
            } else {
                Ok(())
            }
        };
        match *self {
            SlotConstraint::None => Ok(()),
            SlotConstraint::OneSlot(i) | SlotConstraint::Diagonal(i) => in_range(i),
            SlotConstraint::TwoSlot(i, j) => {
                in_range(i)?;
                in_range(j)?;
                if j >= i {
                    return Err(IndexError::SlotOrder { i, j });
                }
                Ok(())
            }
        }
    }

    fn admits(&self, s: &[u32]) -> bool {
        match *self {
            SlotConstraint::None => true,
            SlotConstraint::OneSlot(i) => s[i - 1] >= 2,
            SlotConstraint::Diagonal(i) => s[i - 1] >= 3,
            SlotConstraint::TwoSlot(i, j) => s[i - 1] >= 2 && s[j - 1] >= 2,
        }
    }
}

/// Positive compositions of `w` into `d` parts, lexicographically descending.
pub fn compositions(w: u32, d: usize) -> Vec<Vec<u32>> {
    fn rec(w: u32, d: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if d == 1 {
            prefix.push(w);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        let max_first = w - (d as u32 - 1);
        for first in (1..=max_first).rev() {
            prefix.push(first);
            rec(w - first, d - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if d == 0 || (d as u32) > w {
        return out;
    }
    rec(w, d, &mut Vec::with_capacity(d), &mut out);
    out
}

/// All `d`-tuples of signs, lexicographic with `Plus` before `Minus`.
fn sign_patterns(d: usize) -> impl Iterator<Item = Vec<Sign>> {
    (0u32..(1u32 << d)).map(move |mask| {
        (0..d)
            .map(|k| {
                if mask >> (d - 1 - k) & 1 == 1 {
                    Sign::Minus
                } else {
                    Sign::Plus
                }
            })
            .collect()
    })
}

/// A value index of either kind.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Index {
    Euler(EulerIndex),
    Mixed(AmmvIndex),
}

impl Index {
    pub fn weight(&self) -> u32 {
        match self {
            Index::Euler(e) => e.weight(),
            Index::Mixed(m) => m.weight(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Index::Euler(e) => e.depth(),
            Index::Mixed(m) => m.depth(),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Index::Euler(_) => Family::EulerSum,
            Index::Mixed(m) => m.family(),
        }
    }

    /// Magnitudes of the parts.
    pub fn magnitudes(&self) -> Vec<u32> {
        match self {
            Index::Euler(e) => e.0.iter().map(|p| p.magnitude).collect(),
            Index::Mixed(m) => m.0.iter().map(|p| p.s).collect(),
        }
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Euler(e) => write!(f, "es:{e}"),
            Index::Mixed(m) => write!(f, "{m}"),
        }
    }
}

impl From<SignedComposition> for Index {
    fn from(s: SignedComposition) -> Self {
        Index::Mixed(s.to_ammv())
    }
}

impl From<AmmvIndex> for Index {
    fn from(m: AmmvIndex) -> Self {
        Index::Mixed(m)
    }
}

impl From<EulerIndex> for Index {
    fn from(e: EulerIndex) -> Self {
        Index::Euler(e)
    }
}

/// Enumerate an index set of weight `w`. `depth = None` runs over all depths
/// `1..=w` in ascending order. MMV and Euler families range over every sign
/// pattern, AMMV over every (parity, alternation) pattern, and the t/T/S/z2
/// families over positive compositions only.
pub fn enumerate_indices(
    family: Family,
    w: u32,
    depth: Option<usize>,
    constraint: SlotConstraint,
) -> Result<Vec<Index>, IndexError> {
    let depths: Vec<usize> = match depth {
        Some(d) => {
            if d == 0 || d as u32 > w {
                return Err(IndexError::BadDepth {
                    weight: w,
                    depth: d,
                });
            }
            constraint.check(d)?;
            vec![d]
        }
        // Depths too shallow for the constraint's slots are skipped.
        None => (1..=w as usize).collect(),
    };
    let mut out = Vec::new();
    for d in depths {
        if constraint.check(d).is_err() {
            continue;
        }
        for s in compositions(w, d)
            .into_iter()
            .filter(|s| constraint.admits(s))
        {
            match family {
                Family::EulerSum => {
                    for signs in sign_patterns(d) {
                        let parts = s
                            .iter()
                            .zip(signs)
                            .map(|(&m, g)| SignedNumber::new(m, g))
                            .collect();
                        out.push(Index::Euler(EulerIndex(parts)));
                    }
                }
                Family::Mmv => {
                    for signs in sign_patterns(d) {
                        let parts = s
                            .iter()
                            .zip(signs)
                            .map(|(&m, g)| AmmvPart::new(m, g, Sign::Plus))
                            .collect();
                        out.push(Index::Mixed(AmmvIndex(parts)));
                    }
                }
                Family::Ammv => {
                    for eps in sign_patterns(d) {
                        for sigma in sign_patterns(d) {
                            let parts = (0..d)
                                .map(|k| AmmvPart::new(s[k], eps[k], sigma[k]))
                                .collect();
                            out.push(Index::Mixed(AmmvIndex(parts)));
                        }
                    }
                }
                f => {
                    let plain: Vec<(u32, Sign)> = s.iter().map(|&m| (m, Sign::Plus)).collect();
                    out.push(Index::Mixed(specialize_barred(f, &plain)));
                }
            }
        }
    }
    Ok(out)
}

/// A reference to one value: an index plus the strict/star choice.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ValueRef {
    pub index: Index,
    pub star: bool,
}

impl ValueRef {
    pub fn new(index: impl Into<Index>, star: bool) -> Self {
        ValueRef {
            index: index.into(),
            star,
        }
    }

    pub fn plain(index: impl Into<Index>) -> Self {
        Self::new(index, false)
    }

    pub fn weight(&self) -> u32 {
        self.index.weight()
    }

    pub fn depth(&self) -> usize {
        self.index.depth()
    }

    pub fn family(&self) -> Family {
        self.index.family()
    }

    /// The index text without prefix or star marker.
    pub fn index_body(&self) -> String {
        match &self.index {
            Index::Euler(e) => e.to_string(),
            Index::Mixed(m) => m.body(),
        }
    }

    /// Parse `family` and `body` separately, as they appear in relation files.
    pub fn from_parts(family: Family, body: &str, star: bool) -> Result<ValueRef, IndexError> {
        let index = parse_body(family, body)?;
        Ok(ValueRef { index, star })
    }
}

impl fmt::Display for ValueRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index)?;
        if self.star {
            write!(f, "*")?;
        }
        Ok(())
    }
}

fn parse_error(text: &str, reason: impl Into<String>) -> IndexError {
    IndexError::Parse {
        text: text.to_string(),
        reason: reason.into(),
    }
}

fn parse_magnitude(text: &str, token: &str) -> Result<u32, IndexError> {
    let m: u32 = token
        .parse()
        .map_err(|_| parse_error(text, format!("`{token}` is not a positive integer")))?;
    if m == 0 {
        return Err(IndexError::ZeroPart);
    }
    Ok(m)
}

fn parse_body(family: Family, body: &str) -> Result<Index, IndexError> {
    let body = body.trim();
    if body.is_empty() {
        return Err(parse_error(body, "empty index"));
    }
    let tokens: Vec<&str> = body.split(',').map(str::trim).collect();
    match family {
        Family::EulerSum => {
            let mut parts = Vec::new();
            for tok in tokens {
                let (mag, sign) = match tok.strip_suffix('~') {
                    Some(m) => (m, Sign::Minus),
                    None => (tok, Sign::Plus),
                };
                if mag.starts_with('-') {
                    return Err(parse_error(
                        body,
                        "Euler sums mark bars with a trailing `~`",
                    ));
                }
                parts.push(SignedNumber::new(parse_magnitude(body, mag)?, sign));
            }
            Ok(Index::Euler(EulerIndex(parts)))
        }
        Family::Mmv | Family::Ammv => {
            let mut parts = Vec::new();
            for tok in tokens {
                let (tok, sigma) = match tok.strip_suffix('~') {
                    Some(m) => (m, Sign::Minus),
                    None => (tok, Sign::Plus),
                };
                let (mag, eps) = match tok.strip_prefix('-') {
                    Some(m) => (m, Sign::Minus),
                    None => (tok, Sign::Plus),
                };
                parts.push(AmmvPart::new(parse_magnitude(body, mag)?, eps, sigma));
            }
            Ok(Index::Mixed(AmmvIndex(parts)))
        }
        f => {
            let mut parts = Vec::new();
            for tok in tokens {
                let (mag, sigma) = match tok.strip_suffix('~') {
                    Some(m) => (m, Sign::Minus),
                    None => (tok, Sign::Plus),
                };
                if mag.starts_with('-') {
                    return Err(IndexError::NonPositive {
                        family: f.tag(),
                        value: mag.parse().unwrap_or(0),
                    });
                }
                parts.push((parse_magnitude(body, mag)?, sigma));
            }
            Ok(Index::Mixed(specialize_barred(f, &parts)))
        }
    }
}

impl FromStr for ValueRef {
    type Err = IndexError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let trimmed = text.trim();
        let (rest, star) = match trimmed.strip_suffix('*') {
            Some(r) => (r, true),
            None => (trimmed, false),
        };
        let (family, body) = match rest.split_once(':') {
            Some((prefix, body)) => (prefix.trim().parse::<Family>()?, body),
            None => (Family::Mmv, rest),
        };
        ValueRef::from_parts(family, body, star)
    }
}

impl FromStr for SignedComposition {
    type Err = IndexError;
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let parts: Result<Vec<i32>, _> = text.split(',').map(|t| t.trim().parse::<i32>()).collect();
        let parts =
            parts.map_err(|_| parse_error(text, "expected comma-separated non-zero integers"))?;
        SignedComposition::new(parts)
    }
}
