//! Dimension estimates for the spaces spanned by families of values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{discover, Column, Diagnostics, DiscoveryConfig, Relation, RelationError};
use crate::arith::PrimeWindow;
use crate::eval::{window_eval, ResidueStore};
use crate::index::{enumerate_indices, Family, Index, Sign, SlotConstraint, ValueRef};

/// A space of finite values, generated by the values of one kind at each weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Space {
    /// Euler sums with every sign pattern.
    Fes,
    /// Euler sums without bars.
    Fmzv,
    /// MMVs over all signed compositions.
    Fmmv,
    /// MMVs whose innermost part is positive (even variable).
    FmmvEven,
    /// MMVs whose innermost part is negative (odd variable).
    FmmvOdd,
    Fmtv,
    FmTv,
    Fmsv,
    Fmzv2,
    /// Alternating MMVs.
    Fammv,
}

impl Space {
    pub const ALL: [Space; 10] = [
        Space::Fes,
        Space::Fmzv,
        Space::Fmmv,
        Space::FmmvEven,
        Space::FmmvOdd,
        Space::Fmtv,
        Space::FmTv,
        Space::Fmsv,
        Space::Fmzv2,
        Space::Fammv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Space::Fes => "FES",
            Space::Fmzv => "FMZV",
            Space::Fmmv => "FMMV",
            Space::FmmvEven => "FMMV-even",
            Space::FmmvOdd => "FMMV-odd",
            Space::Fmtv => "FMtV",
            Space::FmTv => "FMTV",
            Space::Fmsv => "FMSV",
            Space::Fmzv2 => "FMZV2",
            Space::Fammv => "FAMMV",
        }
    }

    /// The generating values at weight `w`, in enumeration order.
    pub fn candidates(self, w: u32) -> Vec<ValueRef> {
        let all = |family| {
            enumerate_indices(family, w, None, SlotConstraint::None)
                .expect("weight at least one")
                .into_iter()
                .map(ValueRef::plain)
        };
        let last_parity = |v: &ValueRef| match &v.index {
            Index::Mixed(m) => m.parts().last().map(|p| p.eps),
            Index::Euler(_) => None,
        };
        let unbarred = |v: &ValueRef| match &v.index {
            Index::Euler(e) => e.parts().iter().all(|p| p.sign == Sign::Plus),
            Index::Mixed(_) => true,
        };
        match self {
            Space::Fes => all(Family::EulerSum).collect(),
            Space::Fmzv => all(Family::EulerSum).filter(unbarred).collect(),
            Space::Fmmv => all(Family::Mmv).collect(),
            Space::FmmvEven => all(Family::Mmv)
                .filter(|v| last_parity(v) == Some(Sign::Plus))
                .collect(),
            Space::FmmvOdd => all(Family::Mmv)
                .filter(|v| last_parity(v) == Some(Sign::Minus))
                .collect(),
            Space::Fmtv => all(Family::SmallT).collect(),
            Space::FmTv => all(Family::BigT).collect(),
            Space::Fmsv => all(Family::S).collect(),
            Space::Fmzv2 => all(Family::Zeta2).collect(),
            Space::Fammv => all(Family::Ammv).collect(),
        }
    }

    /// The published conjectural dimension at weight `w` (1-based, up to 13),
    /// with `tentative` set where the entry is marked as uncertain. `None` when
    /// no value is listed.
    pub fn table_one(self, w: u32) -> Option<TableEntry> {
        const FMZV: [u64; 13] = [0, 0, 1, 0, 1, 1, 1, 2, 2, 3, 4, 5, 7];
        const FIB: [u64; 13] = [1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233];
        const FMTV: [u64; 13] = [1, 0, 1, 2, 3, 3, 6, 9, 15, 17, 32, 44, 76];
        const FMSV: [u64; 12] = [1, 1, 1, 2, 4, 5, 7, 12, 19, 28, 39, 66];
        let k = (w as usize).checked_sub(1)?;
        let firm = |row: &[u64]| {
            row.get(k).map(|&value| TableEntry {
                value,
                tentative: false,
            })
        };
        match self {
            Space::Fmzv => firm(&FMZV),
            Space::Fes | Space::Fmtv | Space::Fmzv2 => firm(&FIB),
            Space::FmTv => firm(&FMTV),
            Space::Fmsv => firm(&FMSV),
            Space::Fmmv | Space::FmmvEven | Space::FmmvOdd => FIB.get(k).map(|&value| TableEntry {
                value,
                tentative: w >= 11,
            }),
            Space::Fammv => None,
        }
    }

    /// The value spanning the line that the conjectural dimension counts
    /// separately, for the spaces that contain it.
    pub fn line_value(self, w: u32) -> Option<ValueRef> {
        let ones = vec!["1"; w as usize].join(",");
        let text = match self {
            Space::Fmzv2 | Space::FmmvEven | Space::Fmmv => format!("z2:{ones}"),
            Space::Fes => format!("es:{}", vec!["1~"; w as usize].join(",")),
            Space::FmmvOdd | Space::Fmtv => format!("t:{ones}"),
            _ => return None,
        };
        Some(text.parse().expect("built-in index"))
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Space {
    type Err = RelationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(&sp) = Space::ALL.iter().find(|sp| sp.name() == s) {
            return Ok(sp);
        }
        // FMtV and FMTV differ only in case, so case-insensitive matches must be unique.
        let alias = match s {
            "FMMV-even-tail" => Some(Space::FmmvEven),
            "FMMV-odd-tail" => Some(Space::FmmvOdd),
            _ => None,
        };
        let loose: Vec<Space> = Space::ALL
            .iter()
            .copied()
            .filter(|sp| sp.name().eq_ignore_ascii_case(s))
            .collect();
        alias
            .or(match loose.as_slice() {
                [one] => Some(*one),
                _ => None,
            })
            .ok_or_else(|| RelationError::Parse {
                text: s.to_string(),
                reason: format!(
                    "unknown space (expected one of {})",
                    Space::ALL.map(Space::name).join(", ")
                ),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub value: u64,
    pub tentative: bool,
}

/// `F_w` with `F_1 = F_2 = 1`.
pub fn fibonacci(w: u32) -> u64 {
    let (mut a, mut b) = (0u64, 1u64);
    for _ in 0..w {
        (a, b) = (b, a + b);
    }
    a
}

#[derive(Debug, Clone)]
pub struct DimensionReport {
    pub space: Space,
    pub weight: u32,
    pub window: String,
    pub height_bound: u64,
    pub candidates: Vec<ValueRef>,
    /// Independent relations, each solving for its lexicographically latest value.
    pub relations: Vec<Relation>,
    pub basis: Vec<ValueRef>,
    /// Values in a prefix of the basis certified to satisfy no relation of
    /// height at most the bound modulo the discovery modulus.
    pub rank_lower: usize,
    pub dim_estimate: usize,
    pub fibonacci_expected: u64,
    pub table: Option<TableEntry>,
    pub line_value: Option<ValueRef>,
    /// Whether the line value is non-zero at some window prime.
    pub line_nonzero: Option<bool>,
    /// `dim_estimate - 1` when the line is non-zero.
    pub dim_mod_line: Option<usize>,
    pub discovery_primes: Vec<u64>,
    pub holdout_primes: Vec<u64>,
    pub diagnostics: Diagnostics,
}

impl DimensionReport {
    pub fn matches_table(&self) -> Option<bool> {
        self.table.map(|t| t.value == self.dim_estimate as u64)
    }
}

/// Estimate the dimension of `space` at weight `w` by discovering all
/// relations of bounded height among its generators.
pub fn dimension_report(
    space: Space,
    w: u32,
    window: &PrimeWindow,
    cfg: &DiscoveryConfig,
    store: Option<&dyn ResidueStore>,
) -> Result<DimensionReport, RelationError> {
    let candidates = space.candidates(w);
    let found = discover(&candidates, &[], window, cfg, store)?;
    let basis = found
        .basis
        .iter()
        .filter_map(|c| match c {
            Column::Value(v) => Some(v.clone()),
            Column::Constant(_) => None,
        })
        .collect();
    let dim_estimate = candidates.len() - found.relations.len();
    let line_value = space.line_value(w);
    let line_nonzero = line_value.as_ref().map(|v| {
        let sample = window_eval(v, &window.above(w as u64 + 2), store);
        !sample.is_zero()
    });
    let dim_mod_line = line_nonzero.map(|nz| {
        if nz {
            dim_estimate.saturating_sub(1)
        } else {
            dim_estimate
        }
    });
    Ok(DimensionReport {
        space,
        weight: w,
        window: window.to_string(),
        height_bound: cfg.height_bound,
        candidates,
        relations: found.relations,
        basis,
        rank_lower: found.rank_lower,
        dim_estimate,
        fibonacci_expected: fibonacci(w),
        table: space.table_one(w),
        line_value,
        line_nonzero,
        dim_mod_line,
        discovery_primes: found.discovery_primes,
        holdout_primes: found.holdout_primes,
        diagnostics: found.diagnostics,
    })
}
