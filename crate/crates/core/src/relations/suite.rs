//! The collected relations of one weight from every known source.

use std::collections::BTreeSet;

use super::{
    closed_form, closed_form_relation, int, restricted_sum_specs, stuffle_expand_ambient,
    sum_formula, zero_sum_specs, LinearCombination, Provenance, Relation, SumFamily,
    SumFormulaSpec, SumKind,
};
use crate::index::{
    compositions, enumerate_indices, reversal, specialize_barred, EulerIndex, Family, Index, Sign,
    SignedNumber, SlotConstraint, ValueRef,
};
use crate::words::linear_shuffle_relations;

fn bar_patterns(d: usize) -> impl Iterator<Item = Vec<Sign>> {
    (0..1u32 << d).map(move |mask| {
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

/// Values of weight `w` that may have a closed form: Euler sums of depth at
/// most two and t/T/S/z2 values (with bars) of depth at most three, strict and
/// star where the star variant differs.
pub fn closed_form_candidates(w: u32) -> Vec<ValueRef> {
    let mut out = BTreeSet::new();
    for d in 1..=2.min(w as usize) {
        for s in compositions(w, d) {
            for signs in bar_patterns(d) {
                let parts = s
                    .iter()
                    .zip(&signs)
                    .map(|(&m, &g)| SignedNumber::new(m, g))
                    .collect();
                let idx = EulerIndex::new(parts);
                out.insert(ValueRef::new(idx.clone(), false));
                if d > 1 {
                    out.insert(ValueRef::new(idx, true));
                }
            }
        }
    }
    for d in 1..=3.min(w as usize) {
        for s in compositions(w, d) {
            for bars in bar_patterns(d) {
                let parts: Vec<(u32, Sign)> = s.iter().copied().zip(bars).collect();
                for f in [Family::SmallT, Family::BigT, Family::S, Family::Zeta2] {
                    let idx = specialize_barred(f, &parts);
                    out.insert(ValueRef::new(idx.clone(), false));
                    if d == 2 {
                        out.insert(ValueRef::new(idx, true));
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}

/// True when every constant of a closed form carries a beta of even weight;
/// those constants vanish at every prime above their weight.
fn vanishes(form: &LinearCombination) -> bool {
    form.values().is_empty()
        && form
            .constants()
            .keys()
            .all(|m| m.beta_factors().iter().any(|w| w % 2 == 0))
}

fn same_kind(x: &ValueRef, y: &ValueRef) -> bool {
    x.star == y.star
        && matches!(
            (&x.index, &y.index),
            (Index::Euler(_), Index::Euler(_)) | (Index::Mixed(_), Index::Mixed(_))
        )
}

/// Euler sums and (non-alternating) MMVs of weight `w`, strict and star.
fn nested_sums(w: u32) -> Vec<ValueRef> {
    let mut out = Vec::new();
    for family in [Family::EulerSum, Family::Mmv] {
        let indices =
            enumerate_indices(family, w, None, SlotConstraint::None).expect("valid weight");
        for star in [false, true] {
            out.extend(indices.iter().cloned().map(|i| ValueRef::new(i, star)));
        }
    }
    out
}

fn closed_forms(w: u32, out: &mut Vec<Relation>) {
    for v in closed_form_candidates(w) {
        if let Some(form) = closed_form(&v) {
            let label = format!("{v} = {form}");
            out.push(closed_form_relation(&v, &form, label));
        }
    }
}

fn stuffles(w: u32, out: &mut Vec<Relation>) {
    // x has a closed form; y either has one too (the product of the forms is
    // known) or x vanishes, and then y can be any nested sum.
    for wx in 1..w {
        let wy = w - wx;
        let xs: Vec<(ValueRef, LinearCombination)> = closed_form_candidates(wx)
            .into_iter()
            .filter_map(|v| closed_form(&v).map(|f| (v, f)))
            .collect();
        let ys_closed: Vec<(ValueRef, LinearCombination)> = closed_form_candidates(wy)
            .into_iter()
            .filter_map(|v| closed_form(&v).map(|f| (v, f)))
            .collect();
        for (x, fx) in &xs {
            if x.depth() != 1 {
                continue;
            }
            for (y, fy) in &ys_closed {
                // Unordered pairs of depth-one factors are listed once.
                if !same_kind(x, y)
                    || (y.depth() == 1 && wx > wy)
                    || (y.depth() == 1 && wx == wy && y < x)
                {
                    continue;
                }
                let Some(product) = fx.constant_product(fy) else {
                    continue;
                };
                let Ok(expansion) = stuffle_expand_ambient(x, y) else {
                    continue;
                };
                let label = format!("{x} * {y} = {product}");
                out.push(Relation::equation(
                    expansion,
                    product,
                    Provenance::Stuffle,
                    label,
                ));
            }
            if vanishes(fx) {
                for y in nested_sums(wy) {
                    if !same_kind(x, &y) {
                        continue;
                    }
                    let Ok(expansion) = stuffle_expand_ambient(x, &y) else {
                        continue;
                    };
                    out.push(Relation::new(
                        expansion,
                        Provenance::Stuffle,
                        format!("{x} * {y} = 0"),
                    ));
                }
            }
        }
    }
}

fn reversals(w: u32, out: &mut Vec<Relation>) {
    for v in nested_sums(w) {
        let (idx, sign, chi) = reversal(&v.index);
        let image = ValueRef::new(idx, v.star);
        let mut lc = LinearCombination::value(v.clone());
        lc.add_value(image.clone(), chi == 1, int(-sign));
        if lc.is_zero() {
            continue;
        }
        let label = format!("{v} = {}{image}", if sign < 0 { "-" } else { "" });
        out.push(Relation::new(lc, Provenance::Reversal, label));
    }
}

fn sums(w: u32, out: &mut Vec<Relation>) {
    if w % 2 == 0 {
        return;
    }
    for spec in zero_sum_specs().into_iter().filter(|s| s.w == w) {
        out.extend(sum_formula(&spec).expect("zero-sum spec").closed);
    }
    for d in (2..=w as usize).step_by(2) {
        if zero_sum_specs().iter().any(|s| s.w == w && s.d == d) {
            continue;
        }
        for family in [SumFamily::T, SumFamily::S] {
            let spec = SumFormulaSpec::new(SumKind::Full, w, d, family);
            out.extend(sum_formula(&spec).expect("zero-sum spec").closed);
        }
    }
    for spec in restricted_sum_specs(w, w as usize)
        .into_iter()
        .filter(|s| s.w == w)
    {
        out.extend(sum_formula(&spec).expect("restricted-sum spec").closed);
    }
    for d in 2..=w as usize {
        for i in 2..=d {
            for j in 1..i {
                let spec = SumFormulaSpec::new(SumKind::TwoSlot(i, j), w, d, SumFamily::Mmv);
                if let Ok(f) = sum_formula(&spec) {
                    out.extend(f.link);
                }
            }
        }
    }
}

/// Every relation of weight `w` this library knows how to write down: closed
/// forms, stuffle products, reversals, linear shuffle relations, and the sum
/// formulas. The list is deterministic; relations that coincide up to scaling
/// are kept once, and trivial ones are dropped.
pub fn relation_suite(w: u32) -> Vec<Relation> {
    assert!(w >= 1, "weights start at 1");
    let mut all = Vec::new();
    closed_forms(w, &mut all);
    stuffles(w, &mut all);
    reversals(w, &mut all);
    all.extend(
        linear_shuffle_relations(w as usize + 1)
            .into_iter()
            .filter(|r| r.weight() == w),
    );
    sums(w, &mut all);

    let mut seen = BTreeSet::new();
    all.into_iter()
        .filter(|r| !r.lhs.is_zero() && seen.insert(r.lhs.normalized().to_string()))
        .collect()
}
