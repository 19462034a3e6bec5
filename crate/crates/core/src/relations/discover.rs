//! Discovery of rational linear relations among sampled values.
//!
//! Every column (a value or a constant monomial) is sampled at a set of
//! discovery primes and CRT-lifted to one residue `V_j` modulo their product
//! `P`. Integer relations `sum c_j V_j = 0 (mod P)` with small `c_j` are the
//! short vectors of the lattice spanned by the rows `[e_j | K V_j]` and
//! `[0 | K P]`; exact LLL reduction finds them. Candidates are accepted only if
//! their height is at most the bound and they vanish at every holdout prime.
//! Accepted relations are row-reduced over Q, pivoting on the latest column, so
//! the surviving basis is lexicographically earliest.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{LinearCombination, Provenance, Relation, RelationError, Samples};
use crate::arith::{self, ConstantMonomial, Prime, PrimeWindow, Skip};
use crate::eval::ResidueStore;
use crate::index::ValueRef;
use crate::lattice::{self, lll_reduce};

/// Combine residues `r_k mod p_k` into `(x, P)` with `0 <= x < P = prod p_k`.
pub fn crt_lift(residues: &[u64], primes: &[Prime]) -> (BigInt, BigInt) {
    assert_eq!(residues.len(), primes.len());
    let mut x = BigInt::zero();
    let mut m = BigInt::one();
    for (&r, &p) in residues.iter().zip(primes) {
        let pv = p.get();
        // x' = x + m * ((r - x) * m^{-1} mod p)
        let xm = (&x % pv).to_u64().expect("reduced");
        let mm = (&m % pv).to_u64().expect("reduced");
        let t = arith::mul_mod(
            arith::sub_mod(r % pv, xm, pv),
            arith::inv_mod(mm, pv).expect("distinct primes"),
            pv,
        );
        x += &m * t;
        m *= pv;
    }
    (x, m)
}

/// The rational `r/s` with `|r| <= bound`, `0 < s <= bound` and `r = a s (mod m)`,
/// if there is one. Unique when `2 bound^2 < m`.
pub fn rational_reconstruct(a: &BigInt, m: &BigInt, bound: &BigInt) -> Option<BigRational> {
    // Half-extended Euclid on (m, a), tracking the cofactor of a.
    let (mut r0, mut r1) = (m.clone(), a.mod_floor(m));
    let (mut s0, mut s1) = (BigInt::zero(), BigInt::one());
    while &r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let s2 = &s0 - &q * &s1;
        r0 = std::mem::replace(&mut r1, r2);
        s0 = std::mem::replace(&mut s1, s2);
    }
    if s1.is_zero() || s1.abs() > *bound {
        return None;
    }
    let q = BigRational::new(r1, s1);
    // The cofactor must be invertible mod m for the residue to be represented.
    if !q.denom().gcd(m).is_one() {
        return None;
    }
    Some(q)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscoveryConfig {
    /// Largest absolute integer coefficient accepted in a lattice relation.
    pub height_bound: u64,
    /// Fraction of the window kept back for holdout checks, as `(num, den)`.
    pub holdout_fraction: (u64, u64),
    pub min_holdout: usize,
    /// Number of new columns added per lattice reduction.
    pub chunk: usize,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            height_bound: 64,
            holdout_fraction: (1, 3),
            min_holdout: 8,
            chunk: 16,
        }
    }
}

impl DiscoveryConfig {
    pub fn with_height(height_bound: u64) -> Self {
        DiscoveryConfig {
            height_bound,
            ..Self::default()
        }
    }

    fn holdout_count(&self, n: usize) -> usize {
        let (a, b) = self.holdout_fraction;
        let frac = (n as u64 * a).div_ceil(b) as usize;
        frac.max(self.min_holdout)
    }

    /// `(discovery, holdout)`: the largest primes are held out.
    pub fn split(&self, primes: &[Prime]) -> (Vec<Prime>, Vec<Prime>) {
        let h = self.holdout_count(primes.len()).min(primes.len());
        let (d, h) = primes.split_at(primes.len() - h);
        (d.to_vec(), h.to_vec())
    }

    /// The lattice search over `n` columns is only trusted when the product
    /// of the discovery primes exceeds `(2H + 1)^n`, the number of integer
    /// vectors of height at most H.
    pub fn required_modulus(&self, n: usize) -> BigInt {
        num_traits::pow(BigInt::from(2 * self.height_bound + 1), n)
    }
}

/// Sampled columns: `columns[j][k]` is column j at `primes[k]`.
#[derive(Debug, Clone)]
pub struct ColumnData {
    pub primes: Vec<Prime>,
    pub columns: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub lattice_reductions: usize,
    /// Short lattice vectors whose height exceeded the bound.
    pub reconstruction_failures: usize,
    /// Vectors within the height bound that failed a holdout prime.
    pub holdout_rejections: usize,
    pub skipped_primes: Vec<Skip>,
}

/// Outcome of a discovery run over anonymous columns.
#[derive(Debug, Clone)]
pub struct ColumnRelations {
    /// Row-reduced relations; row `k` has pivot `pivots[k]` with coefficient 1.
    pub rows: Vec<Vec<BigRational>>,
    pub pivots: Vec<usize>,
    /// Columns that are not pivots, in order.
    pub basis: Vec<usize>,
    /// Size of the largest prefix of `basis` certified to carry no relation of
    /// height at most the bound modulo the discovery modulus.
    pub rank_lower: usize,
    pub discovery_primes: Vec<u64>,
    pub holdout_primes: Vec<u64>,
    pub diagnostics: Diagnostics,
}

struct Search<'a> {
    cfg: &'a DiscoveryConfig,
    lifted: Vec<BigInt>,
    modulus: BigInt,
    /// Holdout residues per column.
    holdout: Vec<Vec<u64>>,
    holdout_primes: Vec<Prime>,
    diagnostics: Diagnostics,
}

fn bits(x: &BigInt) -> u64 {
    x.bits()
}

impl Search<'_> {
    fn scale(&self, n: usize) -> BigInt {
        // K^2 >= 4 alpha^n n H^2, so vectors with a non-zero last coordinate
        // never compete with relations, and certificates have room.
        let (an, ad) = lattice::alpha();
        let alpha_bits = (an as f64 / ad as f64).log2() * n as f64;
        let need =
            alpha_bits + ((n.max(1) as f64) * (self.cfg.height_bound as f64).powi(2)).log2() + 2.0;
        BigInt::one() << ((need / 2.0).ceil() as u64 + 8)
    }

    fn check_modulus(&self, n: usize, primes_sorted: &[u64]) -> Result<(), RelationError> {
        let need = self.cfg.required_modulus(n);
        if self.modulus > need {
            return Ok(());
        }
        let mut prod = BigInt::one();
        let mut count = 0usize;
        let largest = *primes_sorted.last().unwrap_or(&5);
        let mut it = primes_sorted.iter();
        while prod <= need {
            prod *= it.next().copied().unwrap_or(largest);
            count += 1;
        }
        let holdout = self.cfg.holdout_count(count * 3 / 2);
        Err(RelationError::InsufficientPrimes {
            needed: count,
            have: primes_sorted.len(),
            bits: bits(&need),
            window_needed: count + holdout,
        })
    }

    /// Reduce the lattice for `cols` and return the accepted integer relations
    /// (indexed like `cols`).
    fn relations_among(&mut self, cols: &[usize]) -> Vec<Vec<BigInt>> {
        let n = cols.len();
        if n == 0 {
            return Vec::new();
        }
        let k = self.scale(n);
        let mut rows: Vec<Vec<BigInt>> = cols
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mut r = vec![BigInt::zero(); n + 1];
                r[i] = BigInt::one();
                r[n] = &k * &self.lifted[c];
                r
            })
            .collect();
        let mut last = vec![BigInt::zero(); n + 1];
        last[n] = &k * &self.modulus;
        rows.push(last);
        lll_reduce(&mut rows);
        self.diagnostics.lattice_reductions += 1;
        let h = BigInt::from(self.cfg.height_bound);
        let mut out = Vec::new();
        for r in rows {
            if !r[n].is_zero() || r[..n].iter().all(Zero::is_zero) {
                continue;
            }
            if r[..n].iter().any(|x| x.abs() > h) {
                self.diagnostics.reconstruction_failures += 1;
                continue;
            }
            if !self.passes_holdout(cols, &r[..n]) {
                self.diagnostics.holdout_rejections += 1;
                continue;
            }
            out.push(r[..n].to_vec());
        }
        out
    }

    fn passes_holdout(&self, cols: &[usize], coeffs: &[BigInt]) -> bool {
        self.holdout_primes.iter().enumerate().all(|(k, &p)| {
            let pv = p.get();
            let mut acc = 0u64;
            for (&c, x) in cols.iter().zip(coeffs) {
                let cm = x.mod_floor(&BigInt::from(pv)).to_u64().expect("reduced");
                acc = arith::add_mod(acc, arith::mul_mod(cm, self.holdout[c][k], pv), pv);
            }
            acc == 0
        })
    }

    fn certified(&mut self, cols: &[usize]) -> bool {
        let n = cols.len();
        if n == 0 {
            return true;
        }
        let k = self.scale(n);
        let mut rows: Vec<Vec<BigInt>> = cols
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mut r = vec![BigInt::zero(); n + 1];
                r[i] = BigInt::one();
                r[n] = &k * &self.lifted[c];
                r
            })
            .collect();
        let mut last = vec![BigInt::zero(); n + 1];
        last[n] = &k * &self.modulus;
        rows.push(last);
        lll_reduce(&mut rows);
        self.diagnostics.lattice_reductions += 1;
        let h = BigInt::from(self.cfg.height_bound);
        let bound_sq = &h * &h * BigInt::from(n);
        lattice::certifies_no_vector_below(&rows[0], n + 1, &bound_sq)
    }
}

/// Row-reduce integer relations over Q, choosing pivots from the latest column
/// backwards. Returns `(rows, pivots)`.
pub fn rref_latest(relations: &[Vec<BigInt>], ncols: usize) -> (Vec<Vec<BigRational>>, Vec<usize>) {
    let mut rows: Vec<Vec<BigRational>> = relations
        .iter()
        .map(|r| {
            r.iter()
                .map(|x| BigRational::from_integer(x.clone()))
                .collect()
        })
        .collect();
    let mut pivots = Vec::new();
    let mut done = 0;
    for col in (0..ncols).rev() {
        let Some(found) = (done..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(done, found);
        let inv = rows[done][col].recip();
        for x in rows[done].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = rows[done].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == done || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                *x -= &f * y;
            }
        }
        pivots.push(col);
        done += 1;
    }
    rows.truncate(done);
    (rows, pivots)
}

/// Run discovery over sampled columns. Columns are processed in order, so put
/// constants first and candidates in their enumeration order.
pub fn discover_columns(
    data: &ColumnData,
    cfg: &DiscoveryConfig,
) -> Result<ColumnRelations, RelationError> {
    let ncols = data.columns.len();
    let (disc, hold) = cfg.split(&data.primes);
    let positions = |set: &[Prime]| -> Vec<usize> {
        set.iter()
            .map(|p| {
                data.primes
                    .iter()
                    .position(|q| q == p)
                    .expect("split of the same primes")
            })
            .collect()
    };
    let (dpos, hpos) = (positions(&disc), positions(&hold));
    let mut lifted = Vec::with_capacity(ncols);
    let mut modulus = BigInt::one();
    for col in &data.columns {
        let residues: Vec<u64> = dpos.iter().map(|&k| col[k]).collect();
        let (x, m) = crt_lift(&residues, &disc);
        lifted.push(x);
        modulus = m;
    }
    let holdout = data
        .columns
        .iter()
        .map(|col| hpos.iter().map(|&k| col[k]).collect())
        .collect();
    let mut search = Search {
        cfg,
        lifted,
        modulus,
        holdout,
        holdout_primes: hold.clone(),
        diagnostics: Diagnostics::default(),
    };
    let disc_sorted: Vec<u64> = disc.iter().map(|p| p.get()).collect();

    let mut basis: Vec<usize> = Vec::new();
    let mut found: Vec<Vec<BigInt>> = Vec::new();
    let mut absorb = |search: &mut Search,
                      basis: &mut Vec<usize>,
                      active: Vec<usize>|
     -> Result<bool, RelationError> {
        search.check_modulus(active.len(), &disc_sorted)?;
        let rels = search.relations_among(&active);
        if rels.is_empty() {
            *basis = active;
            return Ok(false);
        }
        let (_, local_pivots) = rref_latest(&rels, active.len());
        let pivot_cols: BTreeSet<usize> = local_pivots.iter().map(|&i| active[i]).collect();
        for r in rels {
            let mut full = vec![BigInt::zero(); ncols];
            for (&c, x) in active.iter().zip(r) {
                full[c] = x;
            }
            found.push(full);
        }
        *basis = active
            .into_iter()
            .filter(|c| !pivot_cols.contains(c))
            .collect();
        Ok(true)
    };

    let order: Vec<usize> = (0..ncols).collect();
    for chunk in order.chunks(cfg.chunk.max(1)) {
        let active: Vec<usize> = basis.iter().copied().chain(chunk.iter().copied()).collect();
        absorb(&mut search, &mut basis, active)?;
    }
    // Relations within the final basis that earlier chunks could not see.
    loop {
        let active = basis.clone();
        if !absorb(&mut search, &mut basis, active)? {
            break;
        }
    }

    let (rows, pivots) = rref_latest(&found, ncols);
    let pivot_set: BTreeSet<usize> = pivots.iter().copied().collect();
    let basis: Vec<usize> = (0..ncols).filter(|c| !pivot_set.contains(c)).collect();
    let mut rank_lower = basis.len();
    while rank_lower > 0 && !search.certified(&basis[..rank_lower]) {
        rank_lower -= 1;
    }
    Ok(ColumnRelations {
        rows,
        pivots,
        basis,
        rank_lower,
        discovery_primes: disc.iter().map(|p| p.get()).collect(),
        holdout_primes: hold.iter().map(|p| p.get()).collect(),
        diagnostics: search.diagnostics,
    })
}

/// A column of a discovery problem.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Column {
    Constant(ConstantMonomial),
    Value(ValueRef),
}

impl Column {
    fn as_combination(&self) -> LinearCombination {
        match self {
            Column::Constant(m) => LinearCombination::constant(m.clone(), BigRational::one()),
            Column::Value(v) => LinearCombination::value(v.clone()),
        }
    }
}

/// Relations found among values and constants.
#[derive(Debug, Clone)]
pub struct Discovery {
    pub columns: Vec<Column>,
    /// One relation per pivot, expressing the pivot through earlier columns.
    pub relations: Vec<Relation>,
    pub pivots: Vec<Column>,
    pub basis: Vec<Column>,
    pub rank_lower: usize,
    pub discovery_primes: Vec<u64>,
    pub holdout_primes: Vec<u64>,
    pub diagnostics: Diagnostics,
}

/// Sample the columns and keep the primes at which every column is defined.
pub fn sample_columns(
    columns: &[Column],
    window: &PrimeWindow,
    store: Option<&dyn ResidueStore>,
) -> (ColumnData, Vec<Skip>, Samples) {
    let combos: Vec<LinearCombination> = columns.iter().map(Column::as_combination).collect();
    let samples = Samples::collect(combos.iter(), window, store);
    let mut primes = Vec::new();
    let mut cols: Vec<Vec<u64>> = vec![Vec::new(); columns.len()];
    let mut skipped = Vec::new();
    'primes: for &p in window.primes() {
        let mut row = Vec::with_capacity(columns.len());
        for lc in &combos {
            match samples.eval(lc, p) {
                Ok(r) => row.push(r),
                Err(reason) => {
                    skipped.push(Skip {
                        prime: p.get(),
                        reason,
                    });
                    continue 'primes;
                }
            }
        }
        primes.push(p);
        for (c, r) in cols.iter_mut().zip(row) {
            c.push(r);
        }
    }
    (
        ColumnData {
            primes,
            columns: cols,
        },
        skipped,
        samples,
    )
}

fn combination_of(columns: &[Column], row: &[BigRational]) -> LinearCombination {
    let mut lc = LinearCombination::new();
    for (c, x) in columns.iter().zip(row) {
        if x.is_zero() {
            continue;
        }
        match c {
            Column::Constant(m) => {
                lc.add_constant(m.clone(), x.clone());
            }
            Column::Value(v) => {
                lc.add_value(v.clone(), false, x.clone());
            }
        }
    }
    lc
}

/// Find the rational relations among `constants` followed by `candidates`
/// over a window. See the module documentation for the method.
pub fn discover(
    candidates: &[ValueRef],
    constants: &[ConstantMonomial],
    window: &PrimeWindow,
    cfg: &DiscoveryConfig,
    store: Option<&dyn ResidueStore>,
) -> Result<Discovery, RelationError> {
    let columns: Vec<Column> = constants
        .iter()
        .cloned()
        .map(Column::Constant)
        .chain(candidates.iter().cloned().map(Column::Value))
        .collect();
    let floor = candidates
        .iter()
        .map(|v| v.weight() as u64 + 2)
        .max()
        .unwrap_or(3);
    let window = window.above(floor);
    let (data, skipped, samples) = sample_columns(&columns, &window, store);
    if data.primes.len() <= cfg.min_holdout {
        return Err(RelationError::InsufficientPrimes {
            needed: cfg.min_holdout + 1,
            have: data.primes.len(),
            bits: 0,
            window_needed: cfg.min_holdout + 1,
        });
    }
    let mut found = discover_columns(&data, cfg)?;
    found.diagnostics.skipped_primes = skipped;
    let used = PrimeWindow::from_primes(data.primes.clone());
    let relations = found
        .rows
        .iter()
        .zip(&found.pivots)
        .map(|(row, &pivot)| {
            let lc = combination_of(&columns, row);
            let label = match &columns[pivot] {
                Column::Value(v) => format!("relation for {v}"),
                Column::Constant(m) => format!("relation for {m}"),
            };
            let mut r = Relation::new(lc, Provenance::Discovered, label);
            let report = samples.check(&r.lhs, &used);
            debug_assert!(
                report.ok(),
                "row-reduced relation fails: {:?}",
                report.failed
            );
            r.verified_primes = report.passed;
            r
        })
        .collect();
    Ok(Discovery {
        pivots: found.pivots.iter().map(|&c| columns[c].clone()).collect(),
        basis: found.basis.iter().map(|&c| columns[c].clone()).collect(),
        columns,
        relations,
        rank_lower: found.rank_lower,
        discovery_primes: found.discovery_primes,
        holdout_primes: found.holdout_primes,
        diagnostics: found.diagnostics,
    })
}

/// Write `v` as a rational combination of the constants, if the window
/// supports one of small height. The result contains constants only.
pub fn express_in_constants(
    v: &ValueRef,
    constants: &[ConstantMonomial],
    window: &PrimeWindow,
    cfg: &DiscoveryConfig,
    store: Option<&dyn ResidueStore>,
) -> Result<LinearCombination, RelationError> {
    let found = discover(std::slice::from_ref(v), constants, window, cfg, store)?;
    let target = Column::Value(v.clone());
    let k = found
        .pivots
        .iter()
        .position(|c| *c == target)
        .ok_or_else(|| RelationError::NotInSpan(v.to_string()))?;
    // The row reads v + sum c_j K_j = 0.
    let mut expr = found.relations[k].lhs.clone();
    expr.add_value(v.clone(), false, -BigRational::one());
    Ok(expr.scaled(&-BigRational::one()))
}
