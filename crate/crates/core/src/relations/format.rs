//! File formats: relations as JSON lines, dimension reports as JSON and CSV.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::{DimensionReport, LinearCombination, Provenance, Relation, RelationError};
use crate::arith::ConstantMonomial;
use crate::index::{Family, ValueRef};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRecord {
    pub family: String,
    pub index: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub star: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub chi: bool,
    pub coeff: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantRecord {
    pub monomial: String,
    pub coeff: String,
}

/// One line of a relation file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationRecord {
    pub schema: u32,
    pub terms: Vec<TermRecord>,
    pub constants: Vec<ConstantRecord>,
    pub provenance: String,
    #[serde(default)]
    pub label: String,
    pub verified_primes: Vec<u64>,
}

/// Coefficients are always written as `n/d`.
fn coeff_text(c: &BigRational) -> String {
    format!("{}/{}", c.numer(), c.denom())
}

fn parse_coeff(text: &str) -> Result<BigRational, RelationError> {
    text.parse().map_err(|_| RelationError::Parse {
        text: text.to_string(),
        reason: "coefficient is not a rational n/d".into(),
    })
}

impl From<&Relation> for RelationRecord {
    fn from(r: &Relation) -> Self {
        RelationRecord {
            schema: SCHEMA,
            terms: r
                .lhs
                .values()
                .iter()
                .map(|(t, c)| TermRecord {
                    family: t.value.family().tag().to_string(),
                    index: t.value.index_body(),
                    star: t.value.star,
                    chi: t.chi,
                    coeff: coeff_text(c),
                })
                .collect(),
            constants: r
                .lhs
                .constants()
                .iter()
                .map(|(m, c)| ConstantRecord {
                    monomial: m.to_string(),
                    coeff: coeff_text(c),
                })
                .collect(),
            provenance: r.provenance.as_str().to_string(),
            label: r.label.clone(),
            verified_primes: r.verified_primes.clone(),
        }
    }
}

impl RelationRecord {
    pub fn to_relation(&self) -> Result<Relation, RelationError> {
        if self.schema != SCHEMA {
            return Err(RelationError::Parse {
                text: format!("schema {}", self.schema),
                reason: format!("only schema {SCHEMA} is understood"),
            });
        }
        let mut lhs = LinearCombination::new();
        for t in &self.terms {
            let family: Family = t.family.parse()?;
            let v = ValueRef::from_parts(family, &t.index, t.star)?;
            lhs.add_value(v, t.chi, parse_coeff(&t.coeff)?);
        }
        for c in &self.constants {
            let m: ConstantMonomial = c.monomial.parse()?;
            lhs.add_constant(m, parse_coeff(&c.coeff)?);
        }
        let provenance =
            Provenance::parse(&self.provenance).ok_or_else(|| RelationError::Parse {
                text: self.provenance.clone(),
                reason: "unknown provenance".into(),
            })?;
        let mut r = Relation::new(lhs, provenance, self.label.clone());
        r.verified_primes = self.verified_primes.clone();
        Ok(r)
    }
}

/// One JSON object per relation, one per line.
pub fn relations_to_jsonl(relations: &[Relation]) -> String {
    let mut out = String::new();
    for r in relations {
        out.push_str(&serde_json::to_string(&RelationRecord::from(r)).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn relations_from_jsonl(text: &str) -> Result<Vec<Relation>, RelationError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let rec: RelationRecord =
                serde_json::from_str(line).map_err(|e| RelationError::Parse {
                    text: line.to_string(),
                    reason: e.to_string(),
                })?;
            rec.to_relation()
        })
        .collect()
}

/// Dimension report in its JSON form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimensionRecord {
    pub schema: u32,
    pub space: String,
    pub weight: u32,
    pub window: String,
    pub height_bound: u64,
    pub candidates: usize,
    pub relations: usize,
    pub dim_estimate: usize,
    pub rank_lower: usize,
    pub fibonacci_expected: u64,
    pub table_value: Option<u64>,
    pub table_tentative: bool,
    pub matches_table: Option<bool>,
    pub line_value: Option<String>,
    pub line_nonzero: Option<bool>,
    pub dim_mod_line: Option<usize>,
    pub basis: Vec<String>,
    pub discovery_primes: usize,
    pub holdout_primes: usize,
    pub lattice_reductions: usize,
    pub reconstruction_failures: usize,
    pub holdout_rejections: usize,
}

impl From<&DimensionReport> for DimensionRecord {
    fn from(r: &DimensionReport) -> Self {
        DimensionRecord {
            schema: SCHEMA,
            space: r.space.name().to_string(),
            weight: r.weight,
            window: r.window.clone(),
            height_bound: r.height_bound,
            candidates: r.candidates.len(),
            relations: r.relations.len(),
            dim_estimate: r.dim_estimate,
            rank_lower: r.rank_lower,
            fibonacci_expected: r.fibonacci_expected,
            table_value: r.table.map(|t| t.value),
            table_tentative: r.table.is_some_and(|t| t.tentative),
            matches_table: r.matches_table(),
            line_value: r.line_value.as_ref().map(ToString::to_string),
            line_nonzero: r.line_nonzero,
            dim_mod_line: r.dim_mod_line,
            basis: r.basis.iter().map(ToString::to_string).collect(),
            discovery_primes: r.discovery_primes.len(),
            holdout_primes: r.holdout_primes.len(),
            lattice_reductions: r.diagnostics.lattice_reductions,
            reconstruction_failures: r.diagnostics.reconstruction_failures,
            holdout_rejections: r.diagnostics.holdout_rejections,
        }
    }
}

pub const DIMS_CSV_HEADER: &str =
    "space,weight,candidates,relations,dim_estimate,rank_lower,fibonacci,table,tentative,dim_mod_line";

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl DimensionRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.space,
            self.weight,
            self.candidates,
            self.relations,
            self.dim_estimate,
            self.rank_lower,
            self.fibonacci_expected,
            opt(self.table_value),
            self.table_tentative,
            opt(self.dim_mod_line)
        )
    }
}

/// Reports laid out like the published table: one row per space, one column
/// per weight (`w1`, `w2`, ...), holding the estimated dimension.
pub fn dims_table_csv(records: &[DimensionRecord]) -> String {
    let max_w = records.iter().map(|r| r.weight).max().unwrap_or(0);
    let mut out = String::from("space");
    for w in 1..=max_w {
        out.push_str(&format!(",w{w}"));
    }
    out.push('\n');
    let mut spaces: Vec<&str> = Vec::new();
    for r in records {
        if !spaces.contains(&r.space.as_str()) {
            spaces.push(&r.space);
        }
    }
    for sp in spaces {
        out.push_str(sp);
        for w in 1..=max_w {
            let cell = records
                .iter()
                .find(|r| r.space == sp && r.weight == w)
                .map(|r| r.dim_estimate.to_string())
                .unwrap_or_default();
            out.push(',');
            out.push_str(&cell);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relations::int;

    #[test]
    fn relation_lines_round_trip() {
        let lc: LinearCombination = "3*T:1,1 - 1/2*q2^2 + chi*t:1~,1* + es:2~,1"
            .parse()
            .unwrap();
        let mut r = Relation::new(lc, Provenance::LinearShuffle, "b⧢bb");
        r.verified_primes = vec![5, 7, 11];
        let text = relations_to_jsonl(std::slice::from_ref(&r));
        assert!(text.contains(r#""coeff":"3/1""#));
        assert!(text.contains(r#""schema":1"#));
        assert!(text.contains(r#""provenance":"linear-shuffle""#));
        assert_eq!(relations_from_jsonl(&text).unwrap(), vec![r]);
    }

    #[test]
    fn spec_shaped_line_parses() {
        let line = r#"{"schema":1,"terms":[{"family":"T","index":"1,1","coeff":"3/1"}],"constants":[{"monomial":"q2^2","coeff":"-1/2"}],"provenance":"linear-shuffle","verified_primes":[5,7]}"#;
        let r = relations_from_jsonl(line).unwrap().remove(0);
        assert_eq!(r.lhs.values().values().next(), Some(&int(3)));
        assert_eq!(r.verified_primes, vec![5, 7]);
    }

    #[test]
    fn bad_lines_are_errors() {
        assert!(relations_from_jsonl("{}").is_err());
        let wrong_schema =
            r#"{"schema":2,"terms":[],"constants":[],"provenance":"stuffle","verified_primes":[]}"#;
        assert!(relations_from_jsonl(wrong_schema).is_err());
        let bad_family = r#"{"schema":1,"terms":[{"family":"X","index":"1","coeff":"1/1"}],"constants":[],"provenance":"stuffle","verified_primes":[]}"#;
        assert!(relations_from_jsonl(bad_family).is_err());
    }
}
