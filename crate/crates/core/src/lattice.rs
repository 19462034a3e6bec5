//! Exact integral LLL reduction.
//!
//! All Gram–Schmidt data are kept as integers (the sub-determinants `d_i` and
//! the scaled coefficients `lambda_{k,j} = d_j mu_{k,j}`), so there is no
//! floating point anywhere. The reduction parameter is `delta = 99/100`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// `delta = DELTA_NUM / DELTA_DEN` in the Lovász condition.
pub const DELTA_NUM: i64 = 99;
pub const DELTA_DEN: i64 = 100;

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Nearest integer to `n / d` for `d > 0`, ties rounded up.
fn round_div(n: &BigInt, d: &BigInt) -> BigInt {
    let two = BigInt::from(2);
    (n * &two + d).div_floor(&(d * &two))
}

/// LLL-reduce the rows of `basis` in place. The rows must be linearly independent.
pub fn lll_reduce(basis: &mut [Vec<BigInt>]) {
    let n = basis.len();
    if n <= 1 {
        return;
    }
    // 1-based bookkeeping: d[0] = 1, d[i] for rows 1..=n; lam[k][j] for j < k.
    let mut d = vec![BigInt::zero(); n + 1];
    let mut lam = vec![vec![BigInt::zero(); n + 1]; n + 1];
    d[0] = BigInt::one();
    d[1] = dot(&basis[0], &basis[0]);
    assert!(!d[1].is_zero(), "zero vector in lattice basis");
    let mut k = 2;
    let mut kmax = 1;
    let dn = BigInt::from(DELTA_NUM);
    let dd = BigInt::from(DELTA_DEN);

    while k <= n {
        if k > kmax {
            kmax = k;
            for j in 1..=k {
                let mut u = dot(&basis[k - 1], &basis[j - 1]);
                for i in 1..j {
                    u = (&d[i] * &u - &lam[k][i] * &lam[j][i]) / &d[i - 1];
                }
                if j < k {
                    lam[k][j] = u;
                } else {
                    assert!(!u.is_zero(), "lattice basis rows are linearly dependent");
                    d[k] = u;
                }
            }
        }
        reduce(basis, &mut lam, &d, k, k - 1);
        // Lovász: delta d_{k-1}^2 <= d_k d_{k-2} + lambda_{k,k-1}^2, scaled by DELTA_DEN.
        let lhs = &dd * (&d[k] * &d[k - 2]);
        let rhs = &dn * (&d[k - 1] * &d[k - 1]) - &dd * (&lam[k][k - 1] * &lam[k][k - 1]);
        if lhs < rhs {
            swap(basis, &mut lam, &mut d, k, kmax);
            k = (k - 1).max(2);
        } else {
            for l in (1..k - 1).rev() {
                reduce(basis, &mut lam, &d, k, l);
            }
            k += 1;
        }
    }
}

fn reduce(basis: &mut [Vec<BigInt>], lam: &mut [Vec<BigInt>], d: &[BigInt], k: usize, l: usize) {
    if (&lam[k][l] * BigInt::from(2)).abs() <= d[l] {
        return;
    }
    let q = round_div(&lam[k][l], &d[l]);
    let (lo, hi) = basis.split_at_mut(k - 1);
    for (x, y) in hi[0].iter_mut().zip(&lo[l - 1]) {
        *x -= &q * y;
    }
    lam[k][l] -= &q * &d[l];
    for i in 1..l {
        let t = &q * &lam[l][i];
        lam[k][i] -= t;
    }
}

fn swap(
    basis: &mut [Vec<BigInt>],
    lam: &mut [Vec<BigInt>],
    d: &mut [BigInt],
    k: usize,
    kmax: usize,
) {
    basis.swap(k - 1, k - 2);
    for j in 1..k - 1 {
        let t = std::mem::take(&mut lam[k][j]);
        lam[k][j] = std::mem::replace(&mut lam[k - 1][j], t);
    }
    let l = lam[k][k - 1].clone();
    let b = (&d[k - 2] * &d[k] + &l * &l) / &d[k - 1];
    for i in k + 1..=kmax {
        let t = lam[i][k].clone();
        lam[i][k] = (&d[k] * &lam[i][k - 1] - &l * &t) / &d[k - 1];
        lam[i][k - 1] = (&b * &t + &l * &lam[i][k]) / &d[k];
    }
    d[k - 1] = b;
}

/// `1 / (delta - 1/4)` as a fraction `(num, den)`: the factor in
/// `|b_1|^2 <= alpha^{n-1} |x|^2` for every non-zero lattice vector `x`.
pub fn alpha() -> (i64, i64) {
    (4 * DELTA_DEN, 4 * DELTA_NUM - DELTA_DEN)
}

/// True if the reduced first vector proves that every non-zero lattice vector
/// has squared norm greater than `bound_sq`: `|b_1|^2 > alpha^{n-1} bound_sq`.
pub fn certifies_no_vector_below(first: &[BigInt], n: usize, bound_sq: &BigInt) -> bool {
    let (an, ad) = alpha();
    let e = (n.max(1) - 1) as u32;
    let lhs = dot(first, first) * num_traits::pow(BigInt::from(ad), e as usize);
    let rhs = bound_sq * num_traits::pow(BigInt::from(an), e as usize);
    lhs > rhs
}
