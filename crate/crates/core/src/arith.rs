//! Exact arithmetic modulo primes.
//!
//! Residues live in machine words and every product goes through a `u128`
//! intermediate, so nothing here is approximate. Besides the basic field
//! operations this module knows how to sieve prime windows, produce batched
//! inverse tables, Bernoulli and Euler numbers mod p, and the named constants
//! (Fermat quotient q2, the finite zeta analogues beta_w, the finite Catalan
//! constant and the character chi(p) = (-1)^((p-1)/2)) sampled over a window.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("invalid prime window: hi = {hi} < lo = {lo}")]
    InvertedWindow { lo: u64, hi: u64 },
    #[error("invalid prime window: lo = {0} must be at least 2")]
    WindowFloor(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("division by zero modulo {0}")]
    DivisionByZero(u64),
    #[error("B_{n} mod {p} requested, but the recurrence only reaches n <= p - 2")]
    BernoulliOutOfRange { n: u64, p: u64 },
    #[error("E_{n} mod {p} requested, need 0 <= n < p")]
    EulerOutOfRange { n: i64, p: u64 },
    #[error("batched inverses need p >= 3, got {0}")]
    PrimeTooSmall(u64),
    #[error("cannot parse constant monomial `{0}`")]
    BadMonomial(String),
}

/// A prime number certified by trial division or by the sieve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Prime(u64);

impl Prime {
    pub fn new(value: u64) -> Result<Self, ArithError> {
        if is_prime(value) {
            Ok(Prime(value))
        } else {
            Err(ArithError::NotPrime(value))
        }
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }
}

impl TryFrom<u64> for Prime {
    type Error = ArithError;
    fn try_from(v: u64) -> Result<Self, Self::Error> {
        Prime::new(v)
    }
}

impl From<Prime> for u64 {
    fn from(p: Prime) -> u64 {
        p.0
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// An element of Z/pZ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Residue {
    value: u64,
    modulus: Prime,
}

impl Residue {
    pub fn new(value: i64, modulus: Prime) -> Self {
        let p = modulus.get() as i64;
        Residue {
            value: value.rem_euclid(p) as u64,
            modulus,
        }
    }

    pub fn from_u64(value: u64, modulus: Prime) -> Self {
        Residue {
            value: value % modulus.get(),
            modulus,
        }
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.value
    }

    #[inline]
    pub fn modulus(self) -> Prime {
        self.modulus
    }

    pub fn inv(self) -> Result<Self, ArithError> {
        mod_inv(self)
    }

    pub fn pow(self, e: u64) -> Self {
        Residue {
            value: pow_mod(self.value, e, self.modulus.get()),
            modulus: self.modulus,
        }
    }

    /// The representative in (-p/2, p/2].
    pub fn symmetric(self) -> i64 {
        let p = self.modulus.get();
        if self.value > p / 2 {
            self.value as i64 - p as i64
        } else {
            self.value as i64
        }
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}

impl Add for Residue {
    type Output = Residue;
    fn add(self, rhs: Residue) -> Residue {
        debug_assert_eq!(self.modulus, rhs.modulus);
        Residue {
            value: add_mod(self.value, rhs.value, self.modulus.get()),
            modulus: self.modulus,
        }
    }
}

impl Sub for Residue {
    type Output = Residue;
    fn sub(self, rhs: Residue) -> Residue {
        debug_assert_eq!(self.modulus, rhs.modulus);
        Residue {
            value: sub_mod(self.value, rhs.value, self.modulus.get()),
            modulus: self.modulus,
        }
    }
}

impl Mul for Residue {
    type Output = Residue;
    fn mul(self, rhs: Residue) -> Residue {
        debug_assert_eq!(self.modulus, rhs.modulus);
        Residue {
            value: mul_mod(self.value, rhs.value, self.modulus.get()),
            modulus: self.modulus,
        }
    }
}

impl Neg for Residue {
    type Output = Residue;
    fn neg(self) -> Residue {
        Residue {
            value: neg_mod(self.value, self.modulus.get()),
            modulus: self.modulus,
        }
    }
}

#[inline(always)]
pub fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    let s = a + b;
    if s >= m {
        s - m
    } else {
        s
    }
}

#[inline(always)]
pub fn sub_mod(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + m - b
    }
}

#[inline(always)]
pub fn neg_mod(a: u64, m: u64) -> u64 {
    if a == 0 {
        0
    } else {
        m - a
    }
}

#[inline(always)]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        e >>= 1;
    }
    acc
}

/// Reduce a signed integer into [0, m).
#[inline]
pub fn reduce_i64(a: i64, m: u64) -> u64 {
    a.rem_euclid(m as i64) as u64
}

/// Inverse of `a` modulo the prime `p` by the extended Euclidean algorithm.
pub fn inv_mod(a: u64, p: u64) -> Result<u64, ArithError> {
    let a = a % p;
    if a == 0 {
        return Err(ArithError::DivisionByZero(p));
    }
    let (mut r0, mut r1) = (p as i128, a as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    debug_assert_eq!(r0, 1);
    Ok(t0.rem_euclid(p as i128) as u64)
}

pub fn mod_inv(a: Residue) -> Result<Residue, ArithError> {
    let p = a.modulus.get();
    Ok(Residue {
        value: inv_mod(a.value, p)?,
        modulus: a.modulus,
    })
}

/// Inverse table indexed by k, with `table[0] = 0` as a placeholder.
pub(crate) fn inverse_table(p: u64) -> Vec<u64> {
    let mut inv = vec![0u64; p as usize];
    if p > 1 {
        inv[1] = 1;
    }
    for k in 2..p {
        // k * (p / k) + p % k = p, so k^{-1} = -(p / k) * (p % k)^{-1}.
        let r = inv[(p % k) as usize];
        inv[k as usize] = neg_mod(mul_mod(p / k, r, p), p);
    }
    inv
}

/// `[1^{-1}, 2^{-1}, ..., (p-1)^{-1}] mod p` using O(p) multiplications.
pub fn batch_inverses(p: Prime) -> Result<Vec<Residue>, ArithError> {
    if p.get() < 3 {
        return Err(ArithError::PrimeTooSmall(p.get()));
    }
    Ok(inverse_table(p.get())
        .into_iter()
        .skip(1)
        .map(|v| Residue {
            value: v,
            modulus: p,
        })
        .collect())
}

/// All primes in `[lo, hi]`, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeWindow {
    pub lo: u64,
    pub hi: u64,
    primes: Vec<Prime>,
}

impl PrimeWindow {
    pub fn primes(&self) -> &[Prime] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    /// An empty window is legal but callers should surface it.
    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// The sub-window of primes strictly greater than `floor`.
    pub fn above(&self, floor: u64) -> PrimeWindow {
        PrimeWindow {
            lo: self.lo.max(floor + 1),
            hi: self.hi,
            primes: self
                .primes
                .iter()
                .copied()
                .filter(|p| p.get() > floor)
                .collect(),
        }
    }

    /// Build a window from an explicit list of primes (sorted and deduplicated).
    pub fn from_primes(mut primes: Vec<Prime>) -> PrimeWindow {
        primes.sort();
        primes.dedup();
        let lo = primes.first().map_or(2, |p| p.get());
        let hi = primes.last().map_or(2, |p| p.get());
        PrimeWindow { lo, hi, primes }
    }
}

impl fmt::Display for PrimeWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}] ({} primes)",
            self.lo,
            self.hi,
            self.primes.len()
        )
    }
}

pub fn sieve_window(lo: u64, hi: u64) -> Result<PrimeWindow, ArithError> {
    if lo < 2 {
        return Err(ArithError::WindowFloor(lo));
    }
    if hi < lo {
        return Err(ArithError::InvertedWindow { lo, hi });
    }
    let n = hi as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        if i as u64 >= lo {
            primes.push(Prime(i as u64));
        }
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    Ok(PrimeWindow { lo, hi, primes })
}

/// Factorials and inverse factorials up to `p - 1`.
fn factorials(p: u64) -> (Vec<u64>, Vec<u64>) {
    let n = p as usize;
    let mut fact = vec![1u64; n];
    for i in 1..n {
        fact[i] = mul_mod(fact[i - 1], i as u64, p);
    }
    let mut inv_fact = vec![1u64; n];
    if n > 1 {
        inv_fact[n - 1] = inv_mod(fact[n - 1], p).expect("(p-1)! is a unit");
        for i in (1..n).rev() {
            inv_fact[i - 1] = mul_mod(inv_fact[i], i as u64, p);
        }
    }
    (fact, inv_fact)
}

/// B_0, ..., B_{p-2} modulo p via sum_{j=0}^{m} C(m+1, j) B_j = 0.
fn bernoulli_table(p: u64) -> Vec<u64> {
    if p < 3 {
        return vec![1];
    }
    let (fact, inv_fact) = factorials(p);
    let binom = |n: usize, k: usize| mul_mod(fact[n], mul_mod(inv_fact[k], inv_fact[n - k], p), p);
    let top = (p - 2) as usize;
    let mut b = vec![0u64; top + 1];
    b[0] = 1;
    for m in 1..=top {
        let mut s = 0u64;
        for (j, &bj) in b.iter().enumerate().take(m) {
            if bj != 0 {
                s = add_mod(s, mul_mod(binom(m + 1, j), bj, p), p);
            }
        }
        // (m + 1) * B_m = -s, and m + 1 <= p - 1 is a unit.
        let inv = mul_mod(inv_fact[m + 1], fact[m], p);
        b[m] = neg_mod(mul_mod(s, inv, p), p);
    }
    b
}

/// E_0, ..., E_{p-1} modulo p via sum_{k=0}^{n/2} C(n, 2k) E_{2k} = 0 for even n >= 2.
fn euler_table(p: u64) -> Vec<u64> {
    let n_max = (p - 1) as usize;
    let (fact, inv_fact) = factorials(p);
    let binom = |n: usize, k: usize| mul_mod(fact[n], mul_mod(inv_fact[k], inv_fact[n - k], p), p);
    let mut e = vec![0u64; n_max + 1];
    e[0] = 1 % p;
    let mut n = 2;
    while n <= n_max {
        let mut s = 0u64;
        for k in 0..n / 2 {
            s = add_mod(s, mul_mod(binom(n, 2 * k), e[2 * k], p), p);
        }
        e[n] = neg_mod(s, p);
        n += 2;
    }
    e
}

/// Per-prime tables that are expensive enough to memoize.
#[derive(Debug)]
pub struct PrimeTables {
    pub p: u64,
    pub inverses: Vec<u64>,
    bernoulli: OnceLock<Vec<u64>>,
    euler: OnceLock<Vec<u64>>,
}

impl PrimeTables {
    fn new(p: u64) -> Self {
        PrimeTables {
            p,
            inverses: inverse_table(p),
            bernoulli: OnceLock::new(),
            euler: OnceLock::new(),
        }
    }

    pub fn bernoulli(&self) -> &[u64] {
        self.bernoulli.get_or_init(|| bernoulli_table(self.p))
    }

    pub fn euler(&self) -> &[u64] {
        self.euler.get_or_init(|| euler_table(self.p))
    }
}

/// Shared, lazily filled tables for `p`.
pub fn tables(p: Prime) -> Arc<PrimeTables> {
    static MEMO: OnceLock<RwLock<HashMap<u64, Arc<PrimeTables>>>> = OnceLock::new();
    let memo = MEMO.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(t) = memo.read().expect("prime table lock").get(&p.get()) {
        return t.clone();
    }
    let fresh = Arc::new(PrimeTables::new(p.get()));
    memo.write()
        .expect("prime table lock")
        .entry(p.get())
        .or_insert(fresh)
        .clone()
}

pub fn bernoulli_mod(n: u64, p: Prime) -> Result<Residue, ArithError> {
    if p.get() < 3 || n + 2 > p.get() {
        return Err(ArithError::BernoulliOutOfRange { n, p: p.get() });
    }
    Ok(Residue::from_u64(tables(p).bernoulli()[n as usize], p))
}

pub fn euler_number_mod(n: i64, p: Prime) -> Result<Residue, ArithError> {
    if n < 0 || n as u64 >= p.get() {
        return Err(ArithError::EulerOutOfRange { n, p: p.get() });
    }
    if n % 2 == 1 {
        return Ok(Residue::from_u64(0, p));
    }
    Ok(Residue::from_u64(tables(p).euler()[n as usize], p))
}

/// (2^{p-1} - 1)/p mod p, computed from 2^{p-1} mod p^2.
pub fn fermat_quotient_2(p: Prime) -> Residue {
    let p = p.get();
    let p2 = p as u128 * p as u128;
    let mut acc: u128 = 1;
    let mut base: u128 = 2 % p2;
    let mut e = p - 1;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p2;
        }
        base = base * base % p2;
        e >>= 1;
    }
    let lifted = (acc + p2 - 1) % p2;
    debug_assert_eq!(lifted % p as u128, 0);
    Residue::from_u64((lifted / p as u128) as u64, Prime(p))
}

/// B_{p-w} / w mod p, the finite analogue of zeta(w). Needs p > w + 2.
pub fn beta_mod(w: u32, p: Prime) -> Result<Residue, ArithError> {
    let b = bernoulli_mod(p.get() - w as u64, p)?;
    Ok(b * mod_inv(Residue::from_u64(w as u64, p))?)
}

/// E_{p-3} / 2 mod p, the finite Catalan constant.
pub fn catalan_mod(p: Prime) -> Result<Residue, ArithError> {
    let e = euler_number_mod(p.get() as i64 - 3, p)?;
    Ok(e * mod_inv(Residue::from_u64(2, p))?)
}

/// (-1)^{(p-1)/2} mod p.
pub fn chi_mod(p: Prime) -> Residue {
    if ((p.get() - 1) / 2) % 2 == 0 {
        Residue::from_u64(1, p)
    } else {
        Residue::from_u64(p.get() - 1, p)
    }
}

/// A monomial in the named constants: q2^a * beta_{w1} * ... * G^c * chi^e.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstantMonomial {
    q2_power: u32,
    beta_factors: Vec<u32>,
    catalan_power: u32,
    chi_power: u8,
}

impl ConstantMonomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn new(
        q2_power: u32,
        mut beta_factors: Vec<u32>,
        catalan_power: u32,
        chi_power: u32,
    ) -> Self {
        beta_factors.sort_unstable();
        ConstantMonomial {
            q2_power,
            beta_factors,
            catalan_power,
            chi_power: (chi_power % 2) as u8,
        }
    }

    pub fn q2(power: u32) -> Self {
        Self::new(power, vec![], 0, 0)
    }

    pub fn beta(w: u32) -> Self {
        Self::new(0, vec![w], 0, 0)
    }

    pub fn catalan() -> Self {
        Self::new(0, vec![], 1, 0)
    }

    pub fn chi() -> Self {
        Self::new(0, vec![], 0, 1)
    }

    pub fn with_chi(mut self) -> Self {
        self.chi_power ^= 1;
        self
    }

    pub fn q2_power(&self) -> u32 {
        self.q2_power
    }

    pub fn beta_factors(&self) -> &[u32] {
        &self.beta_factors
    }

    pub fn catalan_power(&self) -> u32 {
        self.catalan_power
    }

    pub fn chi_power(&self) -> u32 {
        self.chi_power as u32
    }

    pub fn is_one(&self) -> bool {
        *self == Self::one()
    }

    /// q2 has weight 1, beta_w weight w, the Catalan constant weight 2, chi weight 0.
    pub fn weight(&self) -> u32 {
        self.q2_power + self.beta_factors.iter().sum::<u32>() + 2 * self.catalan_power
    }

    pub fn mul(&self, other: &ConstantMonomial) -> ConstantMonomial {
        let mut betas = self.beta_factors.clone();
        betas.extend_from_slice(&other.beta_factors);
        ConstantMonomial::new(
            self.q2_power + other.q2_power,
            betas,
            self.catalan_power + other.catalan_power,
            (self.chi_power + other.chi_power) as u32,
        )
    }

    /// Smallest prime floor for which every factor is defined.
    pub fn min_prime_exclusive(&self) -> u64 {
        let mut floor = 2;
        if let Some(&w) = self.beta_factors.iter().max() {
            floor = floor.max(w as u64 + 2);
        }
        if self.catalan_power > 0 {
            floor = floor.max(3);
        }
        floor
    }

    /// Value at one prime, or the reason it is undefined there.
    pub fn eval(&self, p: Prime) -> Result<u64, String> {
        if p.get() <= self.min_prime_exclusive() {
            return Err(format!(
                "{} needs p > {}, skipped p = {}",
                self,
                self.min_prime_exclusive(),
                p
            ));
        }
        let mut acc = Residue::from_u64(1, p);
        if self.q2_power > 0 {
            acc = acc * fermat_quotient_2(p).pow(self.q2_power as u64);
        }
        for &w in &self.beta_factors {
            acc = acc * beta_mod(w, p).map_err(|e| e.to_string())?;
        }
        if self.catalan_power > 0 {
            acc = acc
                * catalan_mod(p)
                    .map_err(|e| e.to_string())?
                    .pow(self.catalan_power as u64);
        }
        if self.chi_power == 1 {
            acc = acc * chi_mod(p);
        }
        Ok(acc.value())
    }
}

impl fmt::Display for ConstantMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if self.chi_power == 1 {
            parts.push("chi".into());
        }
        match self.q2_power {
            0 => {}
            1 => parts.push("q2".into()),
            k => parts.push(format!("q2^{k}")),
        }
        let mut i = 0;
        while i < self.beta_factors.len() {
            let w = self.beta_factors[i];
            let mut k = 1;
            while i + k < self.beta_factors.len() && self.beta_factors[i + k] == w {
                k += 1;
            }
            if k == 1 {
                parts.push(format!("beta{w}"));
            } else {
                parts.push(format!("beta{w}^{k}"));
            }
            i += k;
        }
        match self.catalan_power {
            0 => {}
            1 => parts.push("G".into()),
            k => parts.push(format!("G^{k}")),
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

impl FromStr for ConstantMonomial {
    type Err = ArithError;

    /// Factors joined by `*`: `q2`, `q2^k`, `betaW`, `betaW^k`, `G`, `G^k`, `chi`, or `1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ArithError::BadMonomial(s.to_string());
        let mut m = ConstantMonomial::one();
        let s = s.trim();
        if s == "1" {
            return Ok(m);
        }
        for factor in s.split('*') {
            let factor = factor.trim();
            let (base, exp) = match factor.split_once('^') {
                Some((b, e)) => (b, e.parse::<u32>().map_err(|_| bad())?),
                None => (factor, 1),
            };
            if base == "q2" {
                m.q2_power += exp;
            } else if base == "G" {
                m.catalan_power += exp;
            } else if base == "chi" {
                m.chi_power = ((m.chi_power as u32 + exp) % 2) as u8;
            } else if let Some(w) = base.strip_prefix("beta") {
                let w: u32 = w.parse().map_err(|_| bad())?;
                if w < 2 {
                    return Err(bad());
                }
                m.beta_factors
                    .extend(std::iter::repeat(w).take(exp as usize));
            } else {
                return Err(bad());
            }
        }
        m.beta_factors.sort_unstable();
        Ok(m)
    }
}

/// A prime that was left out of a sample, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skip {
    pub prime: u64,
    pub reason: String,
}

/// Finitely many coordinates of an element of prod Z/pZ / (+) Z/pZ.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdeleSample {
    pub entries: BTreeMap<u64, u64>,
    pub skipped: Vec<Skip>,
    /// Sample-level notes, e.g. that the window held no primes at all.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl AdeleSample {
    pub fn get(&self, p: u64) -> Option<u64> {
        self.entries.get(&p).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.keys().copied()
    }

    /// Equality on the common primes; `None` when there are none.
    pub fn agrees_with(&self, other: &AdeleSample) -> Option<bool> {
        let mut common = 0;
        for (p, v) in &self.entries {
            if let Some(w) = other.entries.get(p) {
                common += 1;
                if v != w {
                    return Some(false);
                }
            }
        }
        (common > 0).then_some(true)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.values().all(|&v| v == 0)
    }
}

pub fn const_sample(c: &ConstantMonomial, window: &PrimeWindow) -> AdeleSample {
    let mut sample = AdeleSample::default();
    if window.is_empty() {
        sample.warnings.push(format!("empty prime window {window}"));
    }
    for &p in window.primes() {
        match c.eval(p) {
            Ok(v) => {
                sample.entries.insert(p.get(), v);
            }
            Err(reason) => sample.skipped.push(Skip {
                prime: p.get(),
                reason,
            }),
        }
    }
    sample
}
