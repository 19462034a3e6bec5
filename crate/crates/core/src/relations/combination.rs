use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{self, const_sample, AdeleSample, ConstantMonomial, Prime, PrimeWindow, Skip};
use crate::eval::{window_eval_many, ResidueStore};
use crate::index::ValueRef;

use super::RelationError;

/// A value, optionally multiplied by the character chi = (-1)^{(p-1)/2}.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ValueTerm {
    pub value: ValueRef,
    pub chi: bool,
}

impl fmt::Display for ValueTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.chi {
            write!(f, "chi*")?;
        }
        write!(f, "{}", self.value)
    }
}

/// A rational combination of values and constant monomials.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinearCombination {
    values: BTreeMap<ValueTerm, BigRational>,
    constants: BTreeMap<ConstantMonomial, BigRational>,
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl LinearCombination {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(v: ValueRef) -> Self {
        let mut lc = Self::new();
        lc.add_value(v, false, BigRational::one());
        lc
    }

    pub fn constant(c: ConstantMonomial, coeff: BigRational) -> Self {
        let mut lc = Self::new();
        lc.add_constant(c, coeff);
        lc
    }

    pub fn add_value(&mut self, v: ValueRef, chi: bool, coeff: BigRational) -> &mut Self {
        let key = ValueTerm { value: v, chi };
        let slot = self
            .values
            .entry(key.clone())
            .or_insert_with(BigRational::zero);
        *slot += coeff;
        if slot.is_zero() {
            self.values.remove(&key);
        }
        self
    }

    pub fn add_constant(&mut self, c: ConstantMonomial, coeff: BigRational) -> &mut Self {
        let slot = self
            .constants
            .entry(c.clone())
            .or_insert_with(BigRational::zero);
        *slot += coeff;
        if slot.is_zero() {
            self.constants.remove(&c);
        }
        self
    }

    pub fn with_value(mut self, v: ValueRef, coeff: BigRational) -> Self {
        self.add_value(v, false, coeff);
        self
    }

    pub fn with_chi_value(mut self, v: ValueRef, coeff: BigRational) -> Self {
        self.add_value(v, true, coeff);
        self
    }

    pub fn with_constant(mut self, c: ConstantMonomial, coeff: BigRational) -> Self {
        self.add_constant(c, coeff);
        self
    }

    pub fn values(&self) -> &BTreeMap<ValueTerm, BigRational> {
        &self.values
    }

    pub fn constants(&self) -> &BTreeMap<ConstantMonomial, BigRational> {
        &self.constants
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty() && self.constants.is_empty()
    }

    pub fn scaled(&self, k: &BigRational) -> Self {
        if k.is_zero() {
            return Self::new();
        }
        LinearCombination {
            values: self
                .values
                .iter()
                .map(|(t, c)| (t.clone(), c * k))
                .collect(),
            constants: self
                .constants
                .iter()
                .map(|(m, c)| (m.clone(), c * k))
                .collect(),
        }
    }

    pub fn add(&mut self, other: &LinearCombination) {
        for (t, c) in &other.values {
            self.add_value(t.value.clone(), t.chi, c.clone());
        }
        for (m, c) in &other.constants {
            self.add_constant(m.clone(), c.clone());
        }
    }

    pub fn sub(&mut self, other: &LinearCombination) {
        self.add(&other.scaled(&-BigRational::one()));
    }

    /// Product of two purely constant combinations.
    pub fn constant_product(&self, other: &LinearCombination) -> Option<LinearCombination> {
        if !self.values.is_empty() || !other.values.is_empty() {
            return None;
        }
        let mut out = LinearCombination::new();
        for (a, ca) in &self.constants {
            for (b, cb) in &other.constants {
                out.add_constant(a.mul(b), ca * cb);
            }
        }
        Some(out)
    }

    /// If every term carries chi (and there are no constants), drop it: chi^2 = 1,
    /// so `chi * X = 0` and `X = 0` are the same relation.
    pub fn without_common_chi(&self) -> Self {
        if self.values.is_empty()
            || !self.constants.is_empty()
            || !self.values.keys().all(|t| t.chi)
        {
            return self.clone();
        }
        let mut out = LinearCombination::new();
        for (t, c) in &self.values {
            out.add_value(t.value.clone(), false, c.clone());
        }
        out
    }

    /// Largest value weight or constant weight appearing.
    pub fn weight(&self) -> u32 {
        let v = self
            .values
            .keys()
            .map(|t| t.value.weight())
            .max()
            .unwrap_or(0);
        let c = self.constants.keys().map(|m| m.weight()).max().unwrap_or(0);
        v.max(c)
    }

    /// Divide by the gcd of numerators after clearing denominators, sign fixed so
    /// that the first coefficient is positive.
    pub fn normalized(&self) -> LinearCombination {
        let coeffs: Vec<&BigRational> = self
            .values
            .values()
            .chain(self.constants.values())
            .collect();
        let Some(first) = coeffs.first() else {
            return self.clone();
        };
        let lcm = coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let gcd = coeffs.iter().fold(BigInt::zero(), |acc, c| {
            acc.gcd(&(c.numer() * (&lcm / c.denom())))
        });
        let mut k = BigRational::new(lcm, gcd);
        if first.is_negative() {
            k = -k;
        }
        self.scaled(&k)
    }

    /// True when the two combinations agree up to a non-zero rational factor.
    pub fn proportional_to(&self, other: &LinearCombination) -> bool {
        self.normalized() == other.normalized()
    }

    pub fn value_refs(&self) -> BTreeSet<ValueRef> {
        self.values.keys().map(|t| t.value.clone()).collect()
    }

    /// Denominators that must be invertible at a prime.
    fn denominators(&self) -> impl Iterator<Item = &BigInt> {
        self.values
            .values()
            .chain(self.constants.values())
            .map(|c| c.denom())
    }
}

impl fmt::Display for LinearCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        let mut write_term =
            |f: &mut fmt::Formatter<'_>, coeff: &BigRational, what: String| -> fmt::Result {
                let neg = coeff.is_negative();
                let mag = coeff.abs();
                if first {
                    if neg {
                        write!(f, "-")?;
                    }
                } else {
                    write!(f, " {} ", if neg { "-" } else { "+" })?;
                }
                first = false;
                if mag.is_one() {
                    write!(f, "{what}")
                } else {
                    write!(f, "{mag}*{what}")
                }
            };
        for (t, c) in &self.values {
            write_term(f, c, t.to_string())?;
        }
        for (m, c) in &self.constants {
            write_term(f, c, m.to_string())?;
        }
        Ok(())
    }
}

fn parse_term(
    text: &str,
    term: &str,
) -> Result<(Option<ValueRef>, bool, ConstantMonomial, BigRational), RelationError> {
    let err = |reason: String| RelationError::Parse {
        text: text.to_string(),
        reason,
    };
    // A trailing `*` is the star marker of a value, not a product sign.
    let (body, star) = match term.strip_suffix('*') {
        Some(b) => (b, true),
        None => (term, false),
    };
    let mut coeff = BigRational::one();
    let mut chi = false;
    let mut value = None;
    let mut monomial: Vec<&str> = Vec::new();
    for factor in body.split('*') {
        if factor.is_empty() {
            return Err(err(format!("empty factor in `{term}`")));
        }
        if factor.contains(':') {
            if value.is_some() {
                return Err(err(format!("`{term}` multiplies two values")));
            }
            let v = format!("{factor}{}", if star { "*" } else { "" });
            value = Some(v.parse::<ValueRef>().map_err(|e| err(e.to_string()))?);
        } else if factor == "chi" {
            chi = !chi;
        } else if factor.starts_with(|c: char| c.is_ascii_digit()) && factor != "1"
            || factor.contains('/')
        {
            let r: BigRational = factor
                .parse()
                .map_err(|_| err(format!("bad coefficient `{factor}`")))?;
            coeff *= r;
        } else {
            monomial.push(factor);
        }
    }
    if star && value.is_none() {
        return Err(err(format!("`{term}` has a star marker but no value")));
    }
    let mut m = if monomial.is_empty() {
        ConstantMonomial::one()
    } else {
        monomial
            .join("*")
            .parse::<ConstantMonomial>()
            .map_err(|e| err(e.to_string()))?
    };
    if value.is_some() {
        if !m.is_one() {
            return Err(err(format!("`{term}` multiplies a value by a constant")));
        }
    } else if chi {
        m = m.with_chi();
        chi = false;
    }
    Ok((value, chi, m, coeff))
}

impl FromStr for LinearCombination {
    type Err = RelationError;

    /// Parses the display form, e.g. `2*T:1,1 - 1/2*chi*t:1~ + q2^2`. Values
    /// must carry a family prefix; terms are separated by ` + ` and ` - `.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut lc = LinearCombination::new();
        let trimmed = text.trim();
        if trimmed == "0" {
            return Ok(lc);
        }
        let mut sign = BigRational::one();
        let mut expect_term = true;
        for (k, tok) in trimmed.split_whitespace().enumerate() {
            if expect_term {
                let (neg, term) = match tok.strip_prefix('-') {
                    Some(t) if k == 0 && !t.is_empty() => (true, t),
                    _ => (false, tok),
                };
                let (value, chi, m, coeff) = parse_term(text, term)?;
                let mut c = coeff * &sign;
                if neg {
                    c = -c;
                }
                match value {
                    Some(v) => {
                        lc.add_value(v, chi, c);
                    }
                    None => {
                        lc.add_constant(m, c);
                    }
                }
                expect_term = false;
            } else {
                sign = match tok {
                    "+" => BigRational::one(),
                    "-" => -BigRational::one(),
                    _ => {
                        return Err(RelationError::Parse {
                            text: text.to_string(),
                            reason: format!("expected `+` or `-`, found `{tok}`"),
                        })
                    }
                };
                expect_term = true;
            }
        }
        if expect_term {
            return Err(RelationError::Parse {
                text: text.to_string(),
                reason: "dangling operator".into(),
            });
        }
        Ok(lc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Stuffle,
    Reversal,
    LinearShuffle,
    SumFormula,
    ClosedForm,
    Discovered,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Stuffle => "stuffle",
            Provenance::Reversal => "reversal",
            Provenance::LinearShuffle => "linear-shuffle",
            Provenance::SumFormula => "sum-formula",
            Provenance::ClosedForm => "closed-form",
            Provenance::Discovered => "discovered",
        }
    }

    pub fn parse(s: &str) -> Option<Provenance> {
        Some(match s {
            "stuffle" => Provenance::Stuffle,
            "reversal" => Provenance::Reversal,
            "linear-shuffle" => Provenance::LinearShuffle,
            "sum-formula" => Provenance::SumFormula,
            "closed-form" => Provenance::ClosedForm,
            "discovered" => Provenance::Discovered,
            _ => return None,
        })
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The statement `lhs = 0`, with the primes at which it has been checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub lhs: LinearCombination,
    pub provenance: Provenance,
    pub label: String,
    pub verified_primes: Vec<u64>,
}

impl Relation {
    pub fn new(lhs: LinearCombination, provenance: Provenance, label: impl Into<String>) -> Self {
        Relation {
            lhs,
            provenance,
            label: label.into(),
            verified_primes: Vec::new(),
        }
    }

    /// `lhs - rhs = 0`.
    pub fn equation(
        lhs: LinearCombination,
        rhs: LinearCombination,
        provenance: Provenance,
        label: impl Into<String>,
    ) -> Self {
        let mut l = lhs;
        l.sub(&rhs);
        Relation::new(l, provenance, label)
    }

    pub fn weight(&self) -> u32 {
        self.lhs.weight()
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = 0", self.lhs)
    }
}

/// Reduce a rational modulo p, or `None` if the denominator vanishes there.
pub fn rational_mod(c: &BigRational, p: u64) -> Option<u64> {
    let pb = BigInt::from(p);
    let num = c.numer().mod_floor(&pb).to_u64()?;
    let den = c.denom().mod_floor(&pb).to_u64()?;
    let inv = arith::inv_mod(den, p).ok()?;
    Some(arith::mul_mod(num, inv, p))
}

/// Per-prime outcome of checking a relation over a window.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: Vec<u64>,
    pub failed: Vec<u64>,
    pub skipped: Vec<Skip>,
}

impl VerifyReport {
    /// No failing prime. A combination that is identically zero passes vacuously.
    pub fn ok(&self) -> bool {
        self.failed.is_empty()
    }

    /// Passed at least one prime and failed none.
    pub fn confirmed(&self) -> bool {
        self.failed.is_empty() && !self.passed.is_empty()
    }
}

/// Residues of the values and constants of a combination over a window.
pub struct Samples {
    pub values: BTreeMap<ValueRef, AdeleSample>,
    pub constants: BTreeMap<ConstantMonomial, AdeleSample>,
}

impl Samples {
    pub fn collect<'a>(
        combos: impl IntoIterator<Item = &'a LinearCombination>,
        window: &PrimeWindow,
        store: Option<&dyn ResidueStore>,
    ) -> Samples {
        let mut refs = BTreeSet::new();
        let mut consts = BTreeSet::new();
        for lc in combos {
            refs.extend(lc.value_refs());
            consts.extend(lc.constants.keys().cloned());
        }
        let refs: Vec<ValueRef> = refs.into_iter().collect();
        let samples = window_eval_many(&refs, window, store);
        Samples {
            values: refs.into_iter().zip(samples).collect(),
            constants: consts
                .into_iter()
                .map(|c| {
                    let s = const_sample(&c, window);
                    (c, s)
                })
                .collect(),
        }
    }

    /// Residue of `lc` at p, or the reason it cannot be evaluated there.
    pub fn eval(&self, lc: &LinearCombination, p: Prime) -> Result<u64, String> {
        let pv = p.get();
        if let Some(d) = lc.denominators().find(|d| (*d % pv).is_zero()) {
            return Err(format!("coefficient denominator {d} vanishes mod {pv}"));
        }
        let chi = arith::chi_mod(p).value();
        let mut acc = 0u64;
        for (t, c) in &lc.values {
            let v = self
                .values
                .get(&t.value)
                .and_then(|s| s.get(pv))
                .ok_or_else(|| format!("{} is not evaluable at p = {pv}", t.value))?;
            let mut term = arith::mul_mod(rational_mod(c, pv).expect("denominator checked"), v, pv);
            if t.chi {
                term = arith::mul_mod(term, chi, pv);
            }
            acc = arith::add_mod(acc, term, pv);
        }
        for (m, c) in &lc.constants {
            let v = self
                .constants
                .get(m)
                .and_then(|s| s.get(pv))
                .ok_or_else(|| format!("{m} is not defined at p = {pv}"))?;
            let term = arith::mul_mod(rational_mod(c, pv).expect("denominator checked"), v, pv);
            acc = arith::add_mod(acc, term, pv);
        }
        Ok(acc)
    }

    pub fn check(&self, lc: &LinearCombination, window: &PrimeWindow) -> VerifyReport {
        let mut report = VerifyReport::default();
        for &p in window.primes() {
            match self.eval(lc, p) {
                Ok(0) => report.passed.push(p.get()),
                Ok(_) => report.failed.push(p.get()),
                Err(reason) => report.skipped.push(Skip {
                    prime: p.get(),
                    reason,
                }),
            }
        }
        report
    }
}

/// Evaluate a relation at every prime of the window.
pub fn verify(
    r: &Relation,
    window: &PrimeWindow,
    store: Option<&dyn ResidueStore>,
) -> VerifyReport {
    let samples = Samples::collect([&r.lhs], window, store);
    samples.check(&r.lhs, window)
}

/// Verify many relations with one shared round of evaluation, recording the
/// passing primes on each relation.
pub fn verify_all(
    relations: &mut [Relation],
    window: &PrimeWindow,
    store: Option<&dyn ResidueStore>,
) -> Vec<VerifyReport> {
    let samples = Samples::collect(relations.iter().map(|r| &r.lhs), window, store);
    relations
        .iter_mut()
        .map(|r| {
            let report = samples.check(&r.lhs, window);
            if report.ok() {
                r.verified_primes = report.passed.clone();
            }
            report
        })
        .collect()
}
