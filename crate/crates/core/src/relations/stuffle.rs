//! Quasi-shuffle (stuffle) products of nested sums.

use num_rational::BigRational;

use super::{LinearCombination, RelationError};
use crate::index::{oplus, AmmvIndex, AmmvPart, EulerIndex, Family, Index, ValueRef};

/// Generic quasi-shuffle of two part lists read outermost first. `merge` returns
/// the merged part or `None` when the two parts may not collide.
fn quasi_shuffle<P: Copy>(
    x: &[P],
    y: &[P],
    star: bool,
    merge: &impl Fn(P, P) -> Option<P>,
) -> Vec<(Vec<P>, i64)> {
    if x.is_empty() {
        return vec![(y.to_vec(), 1)];
    }
    if y.is_empty() {
        return vec![(x.to_vec(), 1)];
    }
    let prepend = |head: P, tails: Vec<(Vec<P>, i64)>, sign: i64| {
        tails.into_iter().map(move |(t, c)| {
            let mut v = Vec::with_capacity(t.len() + 1);
            v.push(head);
            v.extend(t);
            (v, c * sign)
        })
    };
    let mut out: Vec<(Vec<P>, i64)> = Vec::new();
    out.extend(prepend(x[0], quasi_shuffle(&x[1..], y, star, merge), 1));
    out.extend(prepend(y[0], quasi_shuffle(x, &y[1..], star, merge), 1));
    if let Some(m) = merge(x[0], y[0]) {
        // For weak inequalities the diagonal is counted twice by the two
        // interleavings and has to be removed once.
        let sign = if star { -1 } else { 1 };
        out.extend(prepend(
            m,
            quasi_shuffle(&x[1..], &y[1..], star, merge),
            sign,
        ));
    }
    out
}

fn merge_mixed(a: AmmvPart, b: AmmvPart) -> Option<AmmvPart> {
    // Two variables can only coincide if they have the same parity; the
    // alternating weights multiply.
    (a.eps == b.eps).then(|| AmmvPart::new(a.s + b.s, a.eps, a.sigma.times(b.sigma)))
}

/// The stuffle product of two values of a quasi-shuffle-closed family.
///
/// Euler sums merge with the O-plus rule; mixed values merge only when the
/// parities agree. A product of two T values (or two S values) is refused:
/// their span is not known to be closed under products. Use
/// [`stuffle_expand_ambient`] to expand such products inside the full MMV
/// algebra.
pub fn stuffle_expand(x: &ValueRef, y: &ValueRef) -> Result<LinearCombination, RelationError> {
    let (fx, fy) = (x.family(), y.family());
    if fx == fy && matches!(fx, Family::BigT | Family::S) {
        return Err(RelationError::NotStuffleClosed(fx.tag().to_string()));
    }
    stuffle_expand_ambient(x, y)
}

/// Stuffle product computed in the ambient (alternating) MMV algebra, which
/// accepts T and S values as well.
pub fn stuffle_expand_ambient(
    x: &ValueRef,
    y: &ValueRef,
) -> Result<LinearCombination, RelationError> {
    if x.star != y.star {
        return Err(RelationError::StuffleMismatch(x.to_string(), y.to_string()));
    }
    let star = x.star;
    let mut lc = LinearCombination::new();
    match (&x.index, &y.index) {
        (Index::Euler(a), Index::Euler(b)) => {
            let merge = |p, q| Some(oplus(p, q));
            for (parts, c) in quasi_shuffle(a.parts(), b.parts(), star, &merge) {
                lc.add_value(
                    ValueRef::new(EulerIndex::new(parts), star),
                    false,
                    BigRational::from_integer(c.into()),
                );
            }
        }
        (Index::Mixed(a), Index::Mixed(b)) => {
            for (parts, c) in quasi_shuffle(a.parts(), b.parts(), star, &merge_mixed) {
                lc.add_value(
                    ValueRef::new(AmmvIndex::new(parts), star),
                    false,
                    BigRational::from_integer(c.into()),
                );
            }
        }
        _ => return Err(RelationError::StuffleMismatch(x.to_string(), y.to_string())),
    }
    Ok(lc)
}

/// One product in the subalgebra experiment for T or S values.
#[derive(Debug, Clone)]
pub struct ProductClosure {
    pub x: ValueRef,
    pub y: ValueRef,
    pub expansion: LinearCombination,
    /// Terms of the expansion that are not values of the family itself.
    pub external_terms: Vec<ValueRef>,
}

/// Expand every product `x * y` of two values of `family` (T or S, strict,
/// no bars) with `weight(x) + weight(y) = w` inside the MMV algebra, and list
/// which terms fall outside the family.
pub fn product_closure(family: Family, w: u32) -> Result<Vec<ProductClosure>, RelationError> {
    use crate::index::{enumerate_indices, SlotConstraint};
    let mut out = Vec::new();
    for a in 1..=w / 2 {
        let xs = enumerate_indices(family, a, None, SlotConstraint::None)?;
        let ys = enumerate_indices(family, w - a, None, SlotConstraint::None)?;
        for (i, xi) in xs.iter().enumerate() {
            for (j, yj) in ys.iter().enumerate() {
                if 2 * a == w && j < i {
                    continue;
                }
                let x = ValueRef::plain(xi.clone());
                let y = ValueRef::plain(yj.clone());
                let expansion = stuffle_expand_ambient(&x, &y)?;
                let external_terms = expansion
                    .values()
                    .keys()
                    .map(|t| t.value.clone())
                    .filter(|v| !in_family(v, family))
                    .collect();
                out.push(ProductClosure {
                    x,
                    y,
                    expansion,
                    external_terms,
                });
            }
        }
    }
    Ok(out)
}

fn in_family(v: &ValueRef, family: Family) -> bool {
    let Index::Mixed(m) = &v.index else {
        return false;
    };
    let d = m.depth();
    (1..=d).all(|j| m.parts()[j - 1].eps == crate::index::family_parity(family, d, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{sieve_window, Prime};
    use crate::eval::eval_mod;
    use crate::relations::{int, Samples};
    use proptest::prelude::*;

    fn v(s: &str) -> ValueRef {
        s.parse().unwrap()
    }

    fn lc(terms: &[(&str, i64)]) -> LinearCombination {
        let mut out = LinearCombination::new();
        for &(t, c) in terms {
            out.add_value(v(t), false, int(c));
        }
        out
    }

    #[test]
    fn euler_depth_one_product() {
        let got = stuffle_expand(&v("es:2"), &v("es:1~")).unwrap();
        assert_eq!(got, lc(&[("es:2,1~", 1), ("es:1~,2", 1), ("es:3~", 1)]));
    }

    #[test]
    fn mmv_merges_only_equal_parities() {
        // M(a,b) M(c) with a, c even and b odd: only a and c merge.
        let got = stuffle_expand(&v("2,-1"), &v("2")).unwrap();
        assert_eq!(got, lc(&[("2,-1,2", 1), ("2,2,-1", 2), ("4,-1", 1)]));
    }

    #[test]
    fn t_square() {
        let got = stuffle_expand(&v("t:1"), &v("t:1")).unwrap();
        assert_eq!(got, lc(&[("t:1,1", 2), ("t:2", 1)]));
        assert_eq!(got, stuffle_expand(&v("-1"), &v("-1")).unwrap());
    }

    #[test]
    fn star_merges_carry_a_sign() {
        let got = stuffle_expand(&v("es:1*"), &v("es:1*")).unwrap();
        assert_eq!(got.values().len(), 2);
        assert_eq!(
            got.values()
                .values()
                .map(|c| c.to_string())
                .collect::<Vec<_>>(),
            ["2", "-1"]
        );
    }

    #[test]
    fn refuses_t_and_s_and_mismatches() {
        assert!(matches!(
            stuffle_expand(&v("T:2,1"), &v("T:1,1")),
            Err(RelationError::NotStuffleClosed(_))
        ));
        assert!(matches!(
            stuffle_expand(&v("S:1,1"), &v("S:2,1")),
            Err(RelationError::NotStuffleClosed(_))
        ));
        assert!(stuffle_expand_ambient(&v("T:2,1"), &v("T:1,1")).is_ok());
        // A T value times a depth-one value is an ordinary MMV product.
        assert!(stuffle_expand(&v("T:2,1"), &v("t:1")).is_ok());
        assert!(matches!(
            stuffle_expand(&v("es:1"), &v("t:1")),
            Err(RelationError::StuffleMismatch(..))
        ));
        assert!(matches!(
            stuffle_expand(&v("es:1*"), &v("es:1")),
            Err(RelationError::StuffleMismatch(..))
        ));
    }

    #[test]
    fn t_products_leave_the_family() {
        let closure = product_closure(Family::BigT, 3).unwrap();
        assert!(!closure.is_empty());
        assert!(closure.iter().any(|c| !c.external_terms.is_empty()));
    }

    fn direct_product(x: &ValueRef, y: &ValueRef, p: u64) -> u64 {
        let p = Prime::new(p).unwrap();
        (eval_mod(x, p).unwrap() * eval_mod(y, p).unwrap()).value()
    }

    fn arb_value(max_w: u32) -> impl Strategy<Value = ValueRef> {
        let part = (1u32..=3, any::<bool>(), any::<bool>(), any::<bool>());
        (
            proptest::collection::vec(part, 1..=3),
            any::<bool>(),
            any::<bool>(),
        )
            .prop_filter_map("weight bound", move |(parts, euler, star)| {
                let w: u32 = parts.iter().map(|p| p.0).sum();
                if w > max_w {
                    return None;
                }
                let s = |b: bool| if b { "~" } else { "" };
                let body: Vec<String> = parts
                    .iter()
                    .map(|&(m, odd, alt, _)| {
                        if euler {
                            format!("{m}{}", s(alt))
                        } else {
                            format!("{}{m}{}", if odd { "-" } else { "" }, s(alt))
                        }
                    })
                    .collect();
                let text = format!(
                    "{}{}{}",
                    if euler { "es:" } else { "am:" },
                    body.join(","),
                    if star { "*" } else { "" }
                );
                text.parse().ok()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn products_match_evaluation(x in arb_value(3), y in arb_value(3)) {
            let same_kind = matches!((&x.index, &y.index), (Index::Euler(_), Index::Euler(_)) | (Index::Mixed(_), Index::Mixed(_)));
            prop_assume!(same_kind && x.star == y.star && x.weight() + y.weight() <= 5);
            let expansion = stuffle_expand_ambient(&x, &y).unwrap();
            let window = sieve_window(11, 200).unwrap();
            let samples = Samples::collect([&expansion], &window, None);
            for &p in window.primes() {
                prop_assert_eq!(samples.eval(&expansion, p).unwrap(), direct_product(&x, &y, p.get()));
            }
        }
    }
}
