//! Evaluation of partial sums modulo p.
//!
//! Every value family reduces to a chain sum `sum_{p > n_1 > ... > n_d > 0}
//! prod_j w_j(n_j)` (weak inequalities for star values) where each `w_j` is a
//! parity indicator times a sign times `n^{-s_j}`. One sweep over `n = 1..p-1`
//! with `d` accumulators computes it in O(p d). The nested-loop oracle in
//! [`naive_eval`] shares no code with the sweep.

use std::collections::HashMap;
use std::sync::RwLock;

use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{
    self, add_mod, mul_mod, neg_mod, pow_mod, AdeleSample, Prime, PrimeWindow, Residue, Skip,
};
use crate::index::{AmmvIndex, EulerIndex, Index, SignedComposition, ValueRef};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("weight {weight} needs p > {floor}, got p = {p}")]
    PrimeTooSmall { p: u64, weight: u32, floor: u64 },
    #[error(
        "the nested-loop oracle is limited to p <= 200 and depth <= 4 (got p = {p}, depth {depth})"
    )]
    CostGuard { p: u64, depth: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Any,
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignRule {
    One,
    /// `(-1)^n`
    Alternating,
    /// `(-1)^ceil(n/2)`
    CeilHalf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Factor {
    pub parity: Parity,
    pub sign: SignRule,
    pub exponent: u32,
}

/// Per-position weight functions, outermost position first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalPlan {
    pub factors: Vec<Factor>,
    pub star: bool,
}

impl EvalPlan {
    pub fn euler(idx: &EulerIndex, star: bool) -> Self {
        let factors = idx
            .parts()
            .iter()
            .map(|part| Factor {
                parity: Parity::Any,
                sign: match part.sign {
                    crate::index::Sign::Plus => SignRule::One,
                    crate::index::Sign::Minus => SignRule::Alternating,
                },
                exponent: part.magnitude,
            })
            .collect();
        EvalPlan { factors, star }
    }

    pub fn ammv(idx: &AmmvIndex, star: bool) -> Self {
        use crate::index::Sign;
        let factors = idx
            .parts()
            .iter()
            .map(|part| Factor {
                parity: match part.eps {
                    Sign::Plus => Parity::Even,
                    Sign::Minus => Parity::Odd,
                },
                sign: match part.sigma {
                    Sign::Plus => SignRule::One,
                    Sign::Minus => SignRule::CeilHalf,
                },
                exponent: part.s,
            })
            .collect();
        EvalPlan { factors, star }
    }

    pub fn for_ref(r: &ValueRef) -> Self {
        match &r.index {
            Index::Euler(e) => Self::euler(e, r.star),
            Index::Mixed(m) => Self::ammv(m, r.star),
        }
    }

    pub fn weight(&self) -> u32 {
        self.factors.iter().map(|f| f.exponent).sum()
    }

    /// Run the sweep at `p`; `inverses[n]` must hold `n^{-1} mod p`.
    pub fn run(&self, p: u64, inverses: &[u64]) -> u64 {
        let d = self.factors.len();
        let mut acc = vec![0u64; d + 1];
        acc[0] = 1 % p;
        let mut w = vec![0u64; d];
        for n in 1..p {
            let inv = inverses[n as usize];
            for (j, f) in self.factors.iter().enumerate() {
                let survives = match f.parity {
                    Parity::Any => true,
                    Parity::Even => n % 2 == 0,
                    Parity::Odd => n % 2 == 1,
                };
                w[j] = if survives {
                    let v = pow_mod(inv, f.exponent as u64, p);
                    let negate = match f.sign {
                        SignRule::One => false,
                        SignRule::Alternating => n % 2 == 1,
                        SignRule::CeilHalf => ((n + 1) / 2) % 2 == 1,
                    };
                    if negate {
                        neg_mod(v, p)
                    } else {
                        v
                    }
                } else {
                    0
                };
            }
            // acc[k] sums chains over the innermost k positions; position d-k
            // is the outermost one of such a chain.
            if self.star {
                for k in 1..=d {
                    let wk = w[d - k];
                    if wk != 0 {
                        acc[k] = add_mod(acc[k], mul_mod(wk, acc[k - 1], p), p);
                    }
                }
            } else {
                for k in (1..=d).rev() {
                    let wk = w[d - k];
                    if wk != 0 {
                        acc[k] = add_mod(acc[k], mul_mod(wk, acc[k - 1], p), p);
                    }
                }
            }
        }
        acc[d]
    }
}

fn check_floor(weight: u32, p: Prime) -> Result<(), EvalError> {
    let floor = weight as u64 + 2;
    if p.get() <= floor {
        return Err(EvalError::PrimeTooSmall {
            p: p.get(),
            weight,
            floor,
        });
    }
    Ok(())
}

fn run_checked(plan: &EvalPlan, p: Prime) -> Result<Residue, EvalError> {
    check_floor(plan.weight(), p)?;
    let tables = arith::tables(p);
    Ok(Residue::from_u64(plan.run(p.get(), &tables.inverses), p))
}

pub fn euler_sum_mod(idx: &EulerIndex, p: Prime, star: bool) -> Result<Residue, EvalError> {
    run_checked(&EvalPlan::euler(idx, star), p)
}

pub fn mmv_mod(s: &SignedComposition, p: Prime, star: bool) -> Result<Residue, EvalError> {
    run_checked(&EvalPlan::ammv(&s.to_ammv(), star), p)
}

pub fn ammv_mod(idx: &AmmvIndex, p: Prime, star: bool) -> Result<Residue, EvalError> {
    run_checked(&EvalPlan::ammv(idx, star), p)
}

pub fn eval_mod(r: &ValueRef, p: Prime) -> Result<Residue, EvalError> {
    run_checked(&EvalPlan::for_ref(r), p)
}

/// Direct nested-loop summation straight from the defining series.
///
/// Parity is applied through the literal factor `(1 + eps (-1)^n) / 2` and the
/// alternating sign through the exponent `(2n + 1 - eps) / 4`.
pub fn naive_eval(r: &ValueRef, p: Prime) -> Result<Residue, EvalError> {
    let pv = p.get();
    let depth = r.depth();
    if pv > 200 || depth > 4 {
        return Err(EvalError::CostGuard { p: pv, depth });
    }
    check_floor(r.weight(), p)?;
    // (exponent, kind) where kind encodes the per-variable numerator.
    enum Term {
        Euler { eps: i64 },
        Mixed { eps: i64, sigma: i64 },
    }
    let terms: Vec<(u32, Term)> = match &r.index {
        Index::Euler(e) => e
            .parts()
            .iter()
            .map(|x| {
                (
                    x.magnitude,
                    Term::Euler {
                        eps: x.sign.value(),
                    },
                )
            })
            .collect(),
        Index::Mixed(m) => m
            .parts()
            .iter()
            .map(|x| {
                (
                    x.s,
                    Term::Mixed {
                        eps: x.eps.value(),
                        sigma: x.sigma.value(),
                    },
                )
            })
            .collect(),
    };
    let p_i = pv as i64;
    let inv2 = pow_mod(2, pv - 2, pv);
    let numerator = |term: &Term, n: u64| -> u64 {
        let minus_one_n: i64 = if n % 2 == 0 { 1 } else { -1 };
        match *term {
            Term::Euler { eps } => {
                if eps == 1 || n % 2 == 0 {
                    1
                } else {
                    pv - 1
                }
            }
            Term::Mixed { eps, sigma } => {
                let indicator = mul_mod(((1 + eps * minus_one_n).rem_euclid(p_i)) as u64, inv2, pv);
                if indicator == 0 {
                    return 0;
                }
                let e = (2 * n as i64 + 1 - eps) / 4;
                let sgn = if sigma == -1 && e % 2 == 1 { pv - 1 } else { 1 };
                mul_mod(indicator, sgn, pv)
            }
        }
    };
    fn rec(
        terms: &[(u32, Term)],
        upper: u64,
        star: bool,
        p: u64,
        numerator: &dyn Fn(&Term, u64) -> u64,
    ) -> u64 {
        let Some(((s, term), rest)) = terms.split_first() else {
            return 1;
        };
        let mut total = 0;
        for n in 1..upper {
            let num = numerator(term, n);
            if num == 0 {
                continue;
            }
            let denom = pow_mod(n, *s as u64, p);
            let inv = pow_mod(denom, p - 2, p);
            let next = if star { n + 1 } else { n };
            let inner = rec(rest, next, star, p, numerator);
            total = (total + mul_mod(mul_mod(num, inv, p), inner, p)) % p;
        }
        total
    }
    let v = rec(&terms, pv, r.star, pv, &numerator);
    Ok(Residue::from_u64(v, p))
}

/// Write-once residue storage keyed by `(canonical label, prime)`.
pub trait ResidueStore: Sync {
    fn get(&self, label: &str, p: u64) -> Option<u64>;
    fn put(&self, label: &str, p: u64, residue: u64);
}

#[derive(Debug, Default)]
pub struct MemoryStore {
    map: RwLock<HashMap<(String, u64), u64>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl ResidueStore for MemoryStore {
    fn get(&self, label: &str, p: u64) -> Option<u64> {
        self.map
            .read()
            .expect("store lock")
            .get(&(label.to_string(), p))
            .copied()
    }

    fn put(&self, label: &str, p: u64, residue: u64) {
        let mut map = self.map.write().expect("store lock");
        let prev = map.insert((label.to_string(), p), residue);
        assert!(
            prev.is_none_or(|v| v == residue),
            "residue store received conflicting values for {label} at p = {p}"
        );
    }
}

/// Evaluate at every window prime; primes below the weight floor are recorded as skips.
pub fn window_eval(
    r: &ValueRef,
    window: &PrimeWindow,
    store: Option<&dyn ResidueStore>,
) -> AdeleSample {
    let label = r.to_string();
    let plan = EvalPlan::for_ref(r);
    let results: Vec<(u64, Result<u64, String>)> = window
        .primes()
        .par_iter()
        .map(|&p| {
            if let Some(v) = store.and_then(|s| s.get(&label, p.get())) {
                return (p.get(), Ok(v));
            }
            match run_checked(&plan, p) {
                Ok(v) => {
                    if let Some(s) = store {
                        s.put(&label, p.get(), v.value());
                    }
                    (p.get(), Ok(v.value()))
                }
                Err(e) => (p.get(), Err(e.to_string())),
            }
        })
        .collect();
    let mut sample = AdeleSample::default();
    if window.is_empty() {
        sample.warnings.push(format!("empty prime window {window}"));
    }
    for (p, res) in results {
        match res {
            Ok(v) => {
                sample.entries.insert(p, v);
            }
            Err(reason) => sample.skipped.push(Skip { prime: p, reason }),
        }
    }
    sample
}

/// [`window_eval`] over many values, parallel across values.
pub fn window_eval_many(
    refs: &[ValueRef],
    window: &PrimeWindow,
    store: Option<&dyn ResidueStore>,
) -> Vec<AdeleSample> {
    refs.par_iter()
        .map(|r| window_eval(r, window, store))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{sieve_window, ConstantMonomial};
    use crate::index::{enumerate_indices, Family, SignedNumber, SlotConstraint};

    fn pr(p: u64) -> Prime {
        Prime::new(p).unwrap()
    }

    fn v(label: &str) -> ValueRef {
        label.parse().unwrap()
    }

    #[test]
    fn euler_sum_examples() {
        let bar1 = EulerIndex::new(vec![SignedNumber::bar(1)]);
        assert_eq!(euler_sum_mod(&bar1, pr(5), false).unwrap().value(), 4);
        let one_one = EulerIndex::new(vec![SignedNumber::plain(1), SignedNumber::plain(1)]);
        assert_eq!(euler_sum_mod(&one_one, pr(5), false).unwrap().value(), 0);
        assert_eq!(
            euler_sum_mod(&EulerIndex::empty(), pr(5), false)
                .unwrap()
                .value(),
            1
        );
    }

    #[test]
    fn mmv_examples() {
        let s = |x: &[i32]| SignedComposition::new(x.to_vec()).unwrap();
        assert_eq!(mmv_mod(&s(&[-1]), pr(5), false).unwrap().value(), 3);
        assert_eq!(mmv_mod(&s(&[1]), pr(5), false).unwrap().value(), 2);
        assert_eq!(mmv_mod(&s(&[-1, -1]), pr(5), true).unwrap().value(), 2);
    }

    #[test]
    fn ammv_examples() {
        let t_bar1 = AmmvIndex::from_vectors(&[1], &[-1], &[-1]).unwrap();
        assert_eq!(ammv_mod(&t_bar1, pr(5), false).unwrap().value(), 1);
        let t_bar2 = AmmvIndex::from_vectors(&[2], &[-1], &[-1]).unwrap();
        assert_eq!(ammv_mod(&t_bar2, pr(7), false).unwrap().value(), 1);
        let plain = AmmvIndex::from_vectors(&[2, 1], &[1, -1], &[1, 1]).unwrap();
        let s = SignedComposition::new(vec![2, -1]).unwrap();
        for p in [7, 11, 13] {
            assert_eq!(
                ammv_mod(&plain, pr(p), false).unwrap(),
                mmv_mod(&s, pr(p), false).unwrap()
            );
        }
    }

    #[test]
    fn floor_is_enforced() {
        let err = eval_mod(&v("t:1,1,1"), pr(5)).unwrap_err();
        assert_eq!(
            err,
            EvalError::PrimeTooSmall {
                p: 5,
                weight: 3,
                floor: 5
            }
        );
        assert!(naive_eval(&v("t:1"), pr(211)).is_err());
        assert!(naive_eval(&v("t:1,1,1,1,1"), pr(11)).is_err());
    }

    #[test]
    fn naive_oracle_examples() {
        assert_eq!(naive_eval(&v("es:1,1"), pr(5)).unwrap().value(), 0);
        assert_eq!(naive_eval(&v("t:1"), pr(5)).unwrap().value(), 3);
        assert_eq!(naive_eval(&v("T:2~"), pr(7)).unwrap().value(), 1);
    }

    #[test]
    fn window_examples() {
        let w = sieve_window(5, 30).unwrap();
        let t1 = window_eval(&v("t:1"), &w, None);
        let q2 = arith::const_sample(&ConstantMonomial::q2(1), &w);
        assert_eq!(t1.entries, q2.entries);
        assert_eq!(t1.get(5), Some(3));
        assert_eq!(t1.get(7), Some(2));
        let big = window_eval(&v("T:1,1"), &sieve_window(5, 100).unwrap(), None);
        assert!(big.is_zero() && !big.is_empty());
        let empty = window_eval(&v("t:1"), &sieve_window(24, 28).unwrap(), None);
        assert!(empty.is_empty() && !empty.warnings.is_empty());
    }

    #[test]
    fn store_is_consulted_and_filled() {
        let store = MemoryStore::new();
        let w = sieve_window(7, 60).unwrap();
        let r = v("S:2~,1");
        let first = window_eval(&r, &w, Some(&store));
        assert_eq!(store.len(), w.len());
        let second = window_eval(&r, &w, Some(&store));
        assert_eq!(first, second);
        assert_eq!(first, window_eval(&r, &w, None));
    }

    #[test]
    fn dp_matches_oracle_on_small_cases() {
        for family in [Family::EulerSum, Family::Ammv] {
            for w in 1..=3 {
                for idx in enumerate_indices(family, w, None, SlotConstraint::None).unwrap() {
                    for star in [false, true] {
                        let r = ValueRef::new(idx.clone(), star);
                        for p in [7u64, 11, 13] {
                            assert_eq!(eval_mod(&r, pr(p)), naive_eval(&r, pr(p)), "{r} at {p}");
                        }
                    }
                }
            }
        }
    }
}
