//! Sum formulas over index sets of fixed weight and depth.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::discover::{crt_lift, rational_reconstruct};
use super::forms::binomial;
use super::{int, rat, LinearCombination, Provenance, Relation, RelationError, Samples};
use crate::arith::{self, ConstantMonomial, Prime, PrimeWindow};
use crate::eval::ResidueStore;
use crate::index::{enumerate_indices, Family, SlotConstraint, ValueRef};

/// Which index set the sum runs over (slots are 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SumKind {
    /// All indices of weight w and depth d.
    Full,
    /// `|s_i| >= 2`.
    OneSlot(usize),
    /// `|s_i| >= 3`.
    Diagonal(usize),
    /// `|s_i| >= 2` and `|s_j| >= 2`, `j < i`.
    TwoSlot(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SumFamily {
    /// MMVs over every sign pattern of the magnitudes.
    Mmv,
    MmvStar,
    /// T or S values over positive compositions.
    T,
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SumFormulaSpec {
    pub kind: SumKind,
    pub w: u32,
    pub d: usize,
    pub family: SumFamily,
}

impl SumFormulaSpec {
    pub fn new(kind: SumKind, w: u32, d: usize, family: SumFamily) -> Self {
        SumFormulaSpec { kind, w, d, family }
    }

    fn constraint(&self) -> SlotConstraint {
        match self.kind {
            SumKind::Full => SlotConstraint::None,
            SumKind::OneSlot(i) => SlotConstraint::OneSlot(i),
            SumKind::Diagonal(i) => SlotConstraint::Diagonal(i),
            SumKind::TwoSlot(i, j) => SlotConstraint::TwoSlot(i, j),
        }
    }

    fn check(&self) -> Result<(), RelationError> {
        let bad = |why: String| Err(RelationError::BadSumFormula(why));
        if self.d == 0 || self.d as u32 > self.w {
            return bad(format!(
                "need 1 <= d <= w, got w = {}, d = {}",
                self.w, self.d
            ));
        }
        match self.kind {
            SumKind::Full => {}
            SumKind::OneSlot(i) | SumKind::Diagonal(i) if (1..=self.d).contains(&i) => {}
            SumKind::TwoSlot(i, j) if 1 <= j && j < i && i <= self.d => {}
            k => return bad(format!("slots of {k:?} out of range for depth {}", self.d)),
        }
        if matches!(self.family, SumFamily::T | SumFamily::S) {
            if self.kind != SumKind::Full {
                return bad("T and S sums are only known over full index sets".into());
            }
            if self.w % 2 == 0 || self.d % 2 == 1 {
                return bad(format!(
                    "T and S sums vanish for odd weight and even depth, got w = {}, d = {}",
                    self.w, self.d
                ));
            }
        }
        Ok(())
    }

    /// The sum of the values over the index set.
    pub fn index_sum(&self) -> Result<LinearCombination, RelationError> {
        self.check()?;
        self.sum_of(self.family)
    }

    fn sum_of(&self, family: SumFamily) -> Result<LinearCombination, RelationError> {
        let (fam, star) = match family {
            SumFamily::Mmv => (Family::Mmv, false),
            SumFamily::MmvStar => (Family::Mmv, true),
            SumFamily::T => (Family::BigT, false),
            SumFamily::S => (Family::S, false),
        };
        let mut lc = LinearCombination::new();
        for idx in enumerate_indices(fam, self.w, Some(self.d), self.constraint())? {
            lc.add_value(ValueRef::new(idx, star), false, int(1));
        }
        Ok(lc)
    }

    pub fn label(&self) -> String {
        let fam = match self.family {
            SumFamily::Mmv => "M",
            SumFamily::MmvStar => "M*",
            SumFamily::T => "T",
            SumFamily::S => "S",
        };
        let set = match self.kind {
            SumKind::Full => format!("I({},{})", self.w, self.d),
            SumKind::OneSlot(i) => format!("I({},{},{i})", self.w, self.d),
            SumKind::Diagonal(i) => format!("I({},{},{i},{i})", self.w, self.d),
            SumKind::TwoSlot(i, j) => format!("I({},{},{i},{j})", self.w, self.d),
        };
        format!("sum of {fam} over {set}")
    }
}

fn sign(k: usize) -> i64 {
    if k % 2 == 0 {
        1
    } else {
        -1
    }
}

/// A sum formula: the sum itself, its closed form when known, and for the
/// two-slot sets the link `sum M = (-1)^d sum M*`.
#[derive(Debug, Clone)]
pub struct SumFormula {
    pub spec: SumFormulaSpec,
    pub sum: LinearCombination,
    /// `sum - closed form = 0` for full and one-slot sets.
    pub closed: Option<Relation>,
    /// `sum M - (-1)^d sum M* = 0` for two-slot sets.
    pub link: Option<Relation>,
}

/// Build the formula for a spec. Full sums vanish; one-slot sums are
/// `(-1)^{i-1}(C(w-1,i-1) + (-1)^d C(w-1,d-i)) beta_w` for M and
/// `(-1)^{i-1}((-1)^d C(w-1,i-1) + C(w-1,d-i)) beta_w` for M*. Two-slot and
/// diagonal sums are multiples of beta_w with a constant that has to be
/// extracted numerically (see [`extract_sum_constant`]).
pub fn sum_formula(spec: &SumFormulaSpec) -> Result<SumFormula, RelationError> {
    let sum = spec.index_sum()?;
    let (w, d) = (spec.w, spec.d);
    let mut closed = None;
    let mut link = None;
    match spec.kind {
        SumKind::Full => {
            closed = Some(Relation::new(
                sum.clone(),
                Provenance::SumFormula,
                format!("{} = 0", spec.label()),
            ));
        }
        SumKind::OneSlot(i) => {
            let a = BigRational::from_integer(binomial(w - 1, i as u32 - 1));
            let b = BigRational::from_integer(binomial(w - 1, (d - i) as u32));
            let sd = int(sign(d));
            let c = int(sign(i - 1))
                * match spec.family {
                    SumFamily::Mmv => a + sd * b,
                    _ => sd * a + b,
                };
            let form = if c.is_zero() || w < 2 {
                LinearCombination::new()
            } else {
                LinearCombination::constant(ConstantMonomial::beta(w), c)
            };
            let label = format!("{} = {}", spec.label(), form);
            closed = Some(Relation::equation(
                sum.clone(),
                form,
                Provenance::SumFormula,
                label,
            ));
        }
        SumKind::TwoSlot(..) => {
            let plain = spec.sum_of(SumFamily::Mmv)?;
            let star = spec.sum_of(SumFamily::MmvStar)?;
            let label = format!(
                "{} = {}{}",
                SumFormulaSpec {
                    family: SumFamily::Mmv,
                    ..*spec
                }
                .label(),
                if d % 2 == 0 { "" } else { "-" },
                SumFormulaSpec {
                    family: SumFamily::MmvStar,
                    ..*spec
                }
                .label()
            );
            link = Some(Relation::equation(
                plain,
                star.scaled(&int(sign(d))),
                Provenance::SumFormula,
                label,
            ));
        }
        SumKind::Diagonal(_) => {}
    }
    Ok(SumFormula {
        spec: *spec,
        sum,
        closed,
        link,
    })
}

/// The zero sums of T and S values: odd weight, even depth.
pub fn zero_sum_specs() -> Vec<SumFormulaSpec> {
    let mut out = Vec::new();
    for (w, d) in [(3, 2), (5, 2), (5, 4), (7, 2)] {
        for family in [SumFamily::T, SumFamily::S] {
            out.push(SumFormulaSpec::new(SumKind::Full, w, d, family));
        }
    }
    out
}

/// Full and one-slot sums of M and M* for odd `w <= max_w`, `d <= max_d`.
pub fn restricted_sum_specs(max_w: u32, max_d: usize) -> Vec<SumFormulaSpec> {
    let mut out = Vec::new();
    for w in (1..=max_w).step_by(2) {
        for d in 1..=max_d.min(w as usize) {
            for family in [SumFamily::Mmv, SumFamily::MmvStar] {
                out.push(SumFormulaSpec::new(SumKind::Full, w, d, family));
                for i in 1..=d {
                    out.push(SumFormulaSpec::new(SumKind::OneSlot(i), w, d, family));
                }
            }
        }
    }
    out
}

/// The constant `N` in `sum = N/2 * beta_w`, determined prime by prime.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SumConstant {
    /// `N` as reconstructed from all extraction primes.
    pub n: String,
    pub is_integer: bool,
    /// `(p, N mod p)` at every prime used for extraction.
    pub per_prime: Vec<(u64, u64)>,
    /// Primes with `beta_w = 0`, where only the vanishing of the sum was checked.
    pub beta_vanishing: Vec<u64>,
}

/// Extract `N` with `sum = N/2 * beta_w` for a two-slot or diagonal spec, and
/// check that the same rational works at every prime of the window. Primes
/// where `beta_w` vanishes are not used for extraction; the sum is required to
/// vanish there as well.
pub fn extract_sum_constant(
    spec: &SumFormulaSpec,
    window: &PrimeWindow,
    store: Option<&dyn ResidueStore>,
) -> Result<SumConstant, RelationError> {
    let formula = sum_formula(spec)?;
    let beta = LinearCombination::constant(ConstantMonomial::beta(spec.w), int(1));
    let window = window.above(spec.w as u64 + 2);
    let samples = Samples::collect([&formula.sum, &beta], &window, store);
    let mut per_prime = Vec::new();
    let mut beta_vanishing = Vec::new();
    for &p in window.primes() {
        let (Ok(s), Ok(b)) = (samples.eval(&formula.sum, p), samples.eval(&beta, p)) else {
            continue;
        };
        let pv = p.get();
        if b == 0 {
            if s != 0 {
                return Err(RelationError::InconsistentConstant(format!(
                    "beta_{} vanishes at p = {pv} but the sum does not",
                    spec.w
                )));
            }
            beta_vanishing.push(pv);
            continue;
        }
        let inv_b = arith::inv_mod(b, pv)?;
        per_prime.push((pv, arith::mul_mod(arith::mul_mod(2, s, pv), inv_b, pv)));
    }
    if per_prime.len() < 2 {
        return Err(RelationError::Unevaluable(formula.spec.label()));
    }
    let primes: Vec<Prime> = per_prime
        .iter()
        .map(|&(p, _)| Prime::new(p).expect("window prime"))
        .collect();
    let residues: Vec<u64> = per_prime.iter().map(|&(_, r)| r).collect();
    let (lifted, modulus) = crt_lift(&residues, &primes);
    let bound = (modulus.clone() >> 1usize).sqrt();
    let n = rational_reconstruct(&lifted, &modulus, &bound).ok_or_else(|| {
        RelationError::InconsistentConstant(format!(
            "no small rational fits {}",
            formula.spec.label()
        ))
    })?;
    // Reconstruction uses every prime; agreement is re-checked one by one.
    for &(p, r) in &per_prime {
        if super::rational_mod(&n, p) != Some(r) {
            return Err(RelationError::InconsistentConstant(format!(
                "N = {n} fails at p = {p}"
            )));
        }
    }
    Ok(SumConstant {
        is_integer: n.is_integer(),
        n: n.to_string(),
        per_prime,
        beta_vanishing,
    })
}

impl SumConstant {
    /// `N` as an integer, when it is one.
    pub fn as_integer(&self) -> Option<i64> {
        let r: BigRational = self.n.parse().ok()?;
        r.is_integer()
            .then(|| r.to_integer())
            .and_then(|n: BigInt| n.to_i64())
    }
}

/// `sum = N/2 * beta_w` as a relation, once `N` is known.
pub fn resolved_sum_relation(formula: &SumFormula, constant: &SumConstant) -> Relation {
    let n: BigRational = constant.n.parse().expect("stored as a rational");
    let form = LinearCombination::constant(ConstantMonomial::beta(formula.spec.w), n * rat(1, 2));
    let label = format!("{} = {}", formula.spec.label(), form);
    Relation::equation(formula.sum.clone(), form, Provenance::SumFormula, label)
}
