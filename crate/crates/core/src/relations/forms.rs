//! Closed forms of low-depth values in terms of the constants q2, beta_w, G
//! and chi, and the catalogue of published identities.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{int, rat, LinearCombination, Provenance, Relation};
use crate::arith::ConstantMonomial;
use crate::index::{EulerIndex, Index, Sign, SignedNumber, ValueRef};

/// `2^e` as a rational, `e` of either sign.
pub fn pow2(e: i32) -> BigRational {
    let p = BigRational::from_integer(BigInt::one() << e.unsigned_abs());
    if e >= 0 {
        p
    } else {
        p.recip()
    }
}

pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    (0..k).fold(BigInt::one(), |acc, i| {
        acc * BigInt::from(n - i) / BigInt::from(i + 1)
    })
}

fn beta(w: u32, c: BigRational) -> LinearCombination {
    LinearCombination::constant(ConstantMonomial::beta(w), c)
}

fn q2(power: u32, c: BigRational) -> LinearCombination {
    LinearCombination::constant(ConstantMonomial::q2(power), c)
}

fn parse(text: &str) -> LinearCombination {
    text.parse()
        .unwrap_or_else(|e| panic!("built-in combination `{text}`: {e}"))
}

fn value(text: &str) -> ValueRef {
    text.parse()
        .unwrap_or_else(|e| panic!("built-in value `{text}`: {e}"))
}

/// `z2(s) = S(s) = -t(s) = -T(s) = zeta(s bar)/2`: `-q2` for s = 1 and
/// `(2^{1-s} - 1) beta_s` otherwise.
pub fn even_depth_one(s: u32) -> LinearCombination {
    if s == 1 {
        q2(1, int(-1))
    } else {
        beta(s, pow2(1 - s as i32) - int(1))
    }
}

/// Closed form of a depth-one value, when one is known.
pub fn depth_one_form(v: &ValueRef) -> Option<LinearCombination> {
    if v.depth() != 1 {
        return None;
    }
    match &v.index {
        Index::Euler(e) => {
            let part = e.parts()[0];
            Some(match part.sign {
                Sign::Plus => LinearCombination::new(),
                Sign::Minus => even_depth_one(part.magnitude).scaled(&int(2)),
            })
        }
        Index::Mixed(m) => {
            let part = m.parts()[0];
            let odd = part.eps == Sign::Minus;
            match (part.sigma, part.s) {
                (Sign::Plus, s) => {
                    let f = even_depth_one(s);
                    Some(if odd { f.scaled(&int(-1)) } else { f })
                }
                (Sign::Minus, 1) => Some(if odd {
                    parse("-1/2*chi*q2")
                } else {
                    parse("-1/2*q2")
                }),
                (Sign::Minus, 2) => Some(if odd { parse("-G") } else { parse("chi*G") }),
                _ => None,
            }
        }
    }
}

/// Depth-two closed forms at odd weight `w = a + b`.
///
/// For the all-even values these are the forms that hold numerically:
/// `z2(a,b) = [1 - 2^{1-w} + (-1)^a 2^{-w} C(w,a)] beta_w / 2` and
/// `z2*(a,b) = [2^{1-w} - 1 + (-1)^a 2^{-w} C(w,a)] beta_w / 2`.
pub fn depth_two_form(v: &ValueRef) -> Option<LinearCombination> {
    if v.depth() != 2 || v.weight() % 2 == 0 {
        return None;
    }
    let mags = v.index.magnitudes();
    let (a, w) = (mags[0], v.weight());
    let c = BigRational::from_integer(binomial(w, a));
    let sg = if a % 2 == 0 { int(1) } else { int(-1) };
    let k = pow2(1 - w as i32);
    let h = pow2(-(w as i32));
    let half = rat(1, 2);
    let coeff = match &v.index {
        Index::Euler(e) => {
            let signs = (e.parts()[0].sign, e.parts()[1].sign);
            match signs {
                (Sign::Plus, Sign::Plus) => &sg * &c,
                (Sign::Minus, Sign::Minus) => &sg * &c * (&k - int(1)),
                _ if v.star => &k - int(1),
                _ => int(1) - &k,
            }
        }
        Index::Mixed(m) => {
            if m.has_alternation() {
                return None;
            }
            let (e1, e2) = (m.parts()[0].eps, m.parts()[1].eps);
            let binom_term = &sg * &h * &c;
            match (e1, e2, v.star) {
                (Sign::Plus, Sign::Plus, false) => &half * (int(1) - &k + &binom_term),
                (Sign::Plus, Sign::Plus, true) => &half * (&k - int(1) + &binom_term),
                (Sign::Minus, Sign::Minus, false) => -&half * (int(1) - &k - &binom_term),
                (Sign::Minus, Sign::Minus, true) => -&half * (&k - int(1) - &binom_term),
                // Variables of different parity never coincide, so S* = S and T* = T.
                _ => &half * &sg * (int(1) - &h) * &c,
            }
        }
    };
    Some(beta(w, coeff))
}

/// `t(s,...,s)` (depth 2 or 3) as it holds numerically.
/// `t(s,s) = z2(s,s)`, `t(s,s,s) = -z2(s,s,s)`.
pub fn homogeneous_t_form(s: u32, d: usize) -> Option<LinearCombination> {
    let lead = |d: u32| -> LinearCombination {
        // t(s)^d / d! with t(s) = q2 (s = 1) or (1 - 2^{1-s}) beta_s.
        let fact = (1..=d as i64).product::<i64>();
        if s == 1 {
            q2(d, rat(1, fact))
        } else {
            let base = int(1) - pow2(1 - s as i32);
            let mut c = BigRational::one();
            for _ in 0..d {
                c *= &base;
            }
            LinearCombination::constant(
                ConstantMonomial::new(0, vec![s; d as usize], 0, 0),
                c / int(fact),
            )
        }
    };
    match d {
        2 => Some(lead(2)),
        3 => {
            let mut lc = lead(3);
            lc.add(&beta(3 * s, (int(1) - pow2(1 - 3 * s as i32)) / int(3)));
            Some(lc)
        }
        _ => None,
    }
}

/// The weight-two alternating values in the basis q2^2, G, chi q2^2, chi G.
pub const WEIGHT_TWO_TABLE: [(&str, &str); 20] = [
    ("z2:2", "-1/2*beta2"),
    ("t:2", "1/2*beta2"),
    ("t:2~", "-G"),
    ("z2:2~", "chi*G"),
    ("z2:1,1", "1/2*q2^2"),
    ("t:1,1", "1/2*q2^2"),
    ("S:1,1", "-q2^2"),
    ("T:1,1", "0"),
    ("T:1~,1", "-1/2*chi*G"),
    ("S:1~,1", "1/2*chi*q2^2 - 1/2*G"),
    ("t:1~,1", "-3/8*chi*q2^2 + 1/2*G"),
    ("z2:1~,1", "1/8*q2^2 - 1/2*chi*G"),
    ("T:1,1~", "1/2*G"),
    ("S:1,1~", "-1/2*q2^2 + 1/2*chi*G"),
    ("t:1,1~", "-1/8*chi*q2^2 + 1/2*G"),
    ("z2:1,1~", "3/8*q2^2 - 1/2*chi*G"),
    ("T:1~,1~", "G"),
    ("S:1~,1~", "1/4*chi*q2^2 - G"),
    ("t:1~,1~", "1/8*q2^2"),
    ("z2:1~,1~", "1/8*q2^2"),
];

fn weight_two_form(v: &ValueRef) -> Option<LinearCombination> {
    if v.weight() != 2 || v.star {
        return None;
    }
    WEIGHT_TWO_TABLE
        .iter()
        .find(|(name, _)| value(name) == *v)
        .map(|(_, form)| parse(form))
}

/// The known closed form of a value in terms of constants, if any.
pub fn closed_form(v: &ValueRef) -> Option<LinearCombination> {
    if let Some(f) = depth_one_form(v)
        .or_else(|| weight_two_form(v))
        .or_else(|| depth_two_form(v))
    {
        return Some(f);
    }
    let Index::Mixed(m) = &v.index else {
        return None;
    };
    let parts = m.parts();
    let first = parts.first()?;
    let homogeneous = !v.star
        && (2..=3).contains(&parts.len())
        && parts
            .iter()
            .all(|p| p.s == first.s && p.sigma == Sign::Plus && p.eps == first.eps);
    if !homogeneous {
        return None;
    }
    let t = homogeneous_t_form(first.s, parts.len())?;
    // z2({s}^d) = (-1)^{sd} t({s}^d) by reversal; only odd s, d can be non-zero.
    let sign = if first.eps == Sign::Minus || (first.s * parts.len() as u32) % 2 == 0 {
        int(1)
    } else {
        int(-1)
    };
    Some(t.scaled(&sign))
}

/// `value = form` as a relation.
pub fn closed_form_relation(
    v: &ValueRef,
    form: &LinearCombination,
    label: impl Into<String>,
) -> Relation {
    Relation::equation(
        LinearCombination::value(v.clone()),
        form.clone(),
        Provenance::ClosedForm,
        label,
    )
}

/// A published identity, with the corrected statement when the printed one
/// does not hold.
#[derive(Debug, Clone)]
pub struct PaperIdentity {
    pub group: &'static str,
    pub relation: Relation,
    /// The statement that holds numerically, when the printed one is a misprint.
    pub correction: Option<Relation>,
}

impl PaperIdentity {
    fn new(group: &'static str, relation: Relation) -> Self {
        PaperIdentity {
            group,
            relation,
            correction: None,
        }
    }

    fn corrected(group: &'static str, relation: Relation, correction: Relation) -> Self {
        PaperIdentity {
            group,
            relation,
            correction: Some(correction),
        }
    }
}

fn eq(lhs: &str, rhs: &str, provenance: Provenance, label: String) -> Relation {
    Relation::equation(parse(lhs), parse(rhs), provenance, label)
}

fn depth_one_identities(out: &mut Vec<PaperIdentity>) {
    for s in 1..=9u32 {
        let f = even_depth_one(s);
        let minus_f = f.scaled(&int(-1));
        for (name, form) in [
            (format!("z2:{s}"), &f),
            (format!("S:{s}"), &f),
            (format!("t:{s}"), &minus_f),
            (format!("T:{s}"), &minus_f),
        ] {
            let label = format!("{name} = {form}");
            out.push(PaperIdentity::new(
                "depth one",
                closed_form_relation(&value(&name), form, label),
            ));
        }
        let bar = format!("es:{s}~");
        let twice = f.scaled(&int(2));
        out.push(PaperIdentity::new(
            "depth one",
            closed_form_relation(&value(&bar), &twice, format!("{bar} = {twice}")),
        ));
        out.push(PaperIdentity::new(
            "depth one",
            closed_form_relation(
                &value(&format!("es:{s}")),
                &LinearCombination::new(),
                format!("es:{s} = 0"),
            ),
        ));
    }
}

fn weight_one_identities(out: &mut Vec<PaperIdentity>) {
    for (lhs, rhs) in [
        ("S:1", "-q2"),
        ("z2:1", "-q2"),
        ("z2:1~", "-1/2*q2"),
        ("S:1~", "-1/2*q2"),
        ("t:1", "q2"),
        ("T:1", "q2"),
        ("t:1~", "-1/2*chi*q2"),
        ("T:1~", "-1/2*chi*q2"),
    ] {
        out.push(PaperIdentity::new(
            "weight one",
            eq(lhs, rhs, Provenance::ClosedForm, format!("{lhs} = {rhs}")),
        ));
    }
}

fn depth_two_identities(out: &mut Vec<PaperIdentity>) {
    for w in (3..=9u32).step_by(2) {
        for a in 1..w {
            let b = w - a;
            let c = BigRational::from_integer(binomial(w, a));
            let sg = if a % 2 == 0 { int(1) } else { int(-1) };
            let k = pow2(1 - w as i32);
            let h = pow2(-(w as i32));
            let half = rat(1, 2);
            // As printed, z2 and -t share one formula in each of the strict and star cases.
            let printed_star = &half * (&k - int(1) - &sg * &h * &c);
            let printed = &half * (int(1) - &k - &sg * &h * &c);
            let st = &half * &sg * (int(1) - &h) * &c;
            for (name, coeff) in [
                (format!("z2:{a},{b}*"), printed_star.clone()),
                (format!("t:{a},{b}*"), -printed_star.clone()),
                (format!("z2:{a},{b}"), printed.clone()),
                (format!("t:{a},{b}"), -printed.clone()),
                (format!("S:{a},{b}"), st.clone()),
                (format!("T:{a},{b}"), st.clone()),
            ] {
                let v = value(&name);
                let form = beta(w, coeff);
                let rel = closed_form_relation(&v, &form, format!("{name} = {form}"));
                let holds = depth_two_form(&v).expect("depth-two form exists");
                if holds == form {
                    out.push(PaperIdentity::new("depth two", rel));
                } else {
                    let fixed = closed_form_relation(&v, &holds, format!("{name} = {holds}"));
                    out.push(PaperIdentity::corrected("depth two", rel, fixed));
                }
            }
            let euler = [
                ((Sign::Plus, Sign::Plus), false),
                ((Sign::Plus, Sign::Plus), true),
                ((Sign::Minus, Sign::Minus), false),
                ((Sign::Minus, Sign::Minus), true),
                ((Sign::Minus, Sign::Plus), false),
                ((Sign::Plus, Sign::Minus), false),
                ((Sign::Minus, Sign::Plus), true),
                ((Sign::Plus, Sign::Minus), true),
            ];
            for ((s1, s2), star) in euler {
                let v = ValueRef::new(
                    EulerIndex::new(vec![SignedNumber::new(a, s1), SignedNumber::new(b, s2)]),
                    star,
                );
                let form = depth_two_form(&v).expect("depth-two Euler form");
                out.push(PaperIdentity::new(
                    "depth two",
                    closed_form_relation(&v, &form, format!("{v} = {form}")),
                ));
            }
        }
    }
}

fn weight_two_identities(out: &mut Vec<PaperIdentity>) {
    let printed = [
        ("S:2", "0"),
        ("T:2", "0"),
        ("T:1,1", "0"),
        ("S:1,1", "-q2^2"),
        ("t:1,1", "1/2*q2^2"),
        ("z2:1,1", "1/2*q2^2"),
        ("T:1~,1~", "2*T:1,1~"),
        ("S:1~,1~", "-2*t:1,1~"),
        ("t:1~,1~", "1/8*q2^2"),
        ("z2:1~,1~", "1/8*q2^2"),
        ("T:2~", "-G"),
        ("T:1~,1", "-1/2*chi*G"),
        ("S:1~,1", "1/2*chi*q2^2 - 1/2*G"),
        ("S:2~", "chi*G"),
        ("T:1,1~", "1/2*G"),
        ("S:1,1~", "-1/2*q2^2 + 1/2*chi*G"),
        ("t:1~,1", "-3/8*chi*q2^2 + 1/2*G"),
        ("z2:1~,1", "1/8*q2^2 - 1/2*chi*G"),
        ("t:1,1~", "-1/8*chi*q2^2 + 1/2*G"),
        ("z2:1,1~", "3/8*q2^2 - 1/2*chi*G"),
    ];
    for (lhs, rhs) in printed {
        out.push(PaperIdentity::new(
            "weight two",
            eq(lhs, rhs, Provenance::ClosedForm, format!("{lhs} = {rhs}")),
        ));
    }
}

/// The printed linear shuffle relations, keyed by the shuffle that produces them.
pub const PRINTED_LINEAR_SHUFFLES: [(&str, &str); 6] = [
    ("b⧢BG", "z2:1,1~ + S:1,1~ + t:1~,1~"),
    ("b⧢bb", "3*T:1,1"),
    ("b⧢bc", "2*T:1,1~ - T:1~,1~"),
    ("G⧢bG", "chi*S:1~,1~ - 2*z2:1~,1"),
    ("G⧢Gb", "2*t:1,1~ + S:1~,1~"),
    ("b⧢GB", "z2:1~,1~ - chi*S:1~,1 - chi*t:1~,1"),
];

fn linear_shuffle_identities(out: &mut Vec<PaperIdentity>) {
    for (shuffle, lc) in PRINTED_LINEAR_SHUFFLES {
        out.push(PaperIdentity::new(
            "linear shuffle",
            Relation::new(
                parse(lc),
                Provenance::LinearShuffle,
                format!("{shuffle}: {lc} = 0"),
            ),
        ));
    }
}

fn homogeneous_identities(out: &mut Vec<PaperIdentity>) {
    for s in 1..=3u32 {
        let dbl = homogeneous_t_form(s, 2).expect("depth two");
        for name in [format!("t:{s},{s}"), format!("z2:{s},{s}")] {
            let label = format!("{name} = {dbl}");
            out.push(PaperIdentity::new(
                "homogeneous t",
                closed_form_relation(&value(&name), &dbl, label),
            ));
        }
        // As printed: the beta_{3s} coefficient is 1/8 for every s.
        let mut printed = if s == 1 {
            q2(3, rat(1, 6))
        } else {
            let base = int(1) - pow2(1 - s as i32);
            LinearCombination::constant(
                ConstantMonomial::new(0, vec![s; 3], 0, 0),
                &base * &base * &base / int(6),
            )
        };
        printed.add(&beta(3 * s, rat(1, 8)));
        let holds = homogeneous_t_form(s, 3).expect("depth three");
        for (name, sign) in [
            (format!("t:{s},{s},{s}"), 1),
            (format!("z2:{s},{s},{s}"), -1),
        ] {
            let p = printed.scaled(&int(sign));
            let h = holds.scaled(&int(sign));
            let v = value(&name);
            let rel = closed_form_relation(&v, &p, format!("{name} = {p}"));
            if s % 2 == 0 {
                // Every beta factor has even weight here, so both forms vanish.
                out.push(PaperIdentity::new("homogeneous t", rel));
            } else {
                let fixed = closed_form_relation(&v, &h, format!("{name} = {h}"));
                out.push(PaperIdentity::corrected("homogeneous t", rel, fixed));
            }
        }
    }
}

/// Every identity printed for the finite values, grouped by topic: depth one,
/// weight one, depth two, finite Catalan, weight two, linear shuffle,
/// homogeneous t-values, zero sums and restricted sums.
pub fn paper_identities() -> Vec<PaperIdentity> {
    let mut out = Vec::new();
    depth_one_identities(&mut out);
    weight_one_identities(&mut out);
    depth_two_identities(&mut out);
    out.push(PaperIdentity::new(
        "finite Catalan",
        eq("T:2~", "-G", Provenance::ClosedForm, "T:2~ = -G".into()),
    ));
    weight_two_identities(&mut out);
    linear_shuffle_identities(&mut out);
    homogeneous_identities(&mut out);
    for spec in super::zero_sum_specs() {
        let r = super::sum_formula(&spec).expect("zero-sum spec");
        out.push(PaperIdentity::new(
            "zero sums",
            r.closed.expect("zero sums are closed"),
        ));
    }
    for spec in super::restricted_sum_specs(7, 3) {
        let r = super::sum_formula(&spec).expect("restricted-sum spec");
        out.push(PaperIdentity::new(
            "restricted sums",
            r.closed.expect("full and one-slot sums are closed"),
        ));
    }
    out
}
