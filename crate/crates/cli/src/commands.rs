use std::io::Write;
use std::path::Path;

use anyhow::{Context as _, Result};
use fmmv::arith::{sieve_window, ConstantMonomial, Prime, PrimeWindow};
use fmmv::eval::{window_eval, ResidueStore};
use fmmv::index::{Family, ValueRef};
use fmmv::relations::{
    dimension_report, dims_table_csv, express_in_constants, extract_sum_constant, int,
    paper_identities, relation_suite, relations_to_jsonl, sum_formula, verify, verify_all,
    DimensionRecord, DiscoveryConfig, LinearCombination, Relation, RelationError, RelationRecord,
    Space, SumFamily, SumFormulaSpec, SumKind, VerifyReport, DIMS_CSV_HEADER,
};
use fmmv::words::{self, linear_shuffle_relations, Word};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::cache::{self, CsvStore};
use crate::config::{parse_range, Config, Output};
use crate::{usage, CacheAction, ValueArgs};

pub struct Context<'a> {
    pub cfg: &'a Config,
    pub store: Option<&'a CsvStore>,
}

impl Context<'_> {
    fn store(&self) -> Option<&dyn ResidueStore> {
        self.store.map(|s| s as &dyn ResidueStore)
    }

    fn window(&self) -> Result<PrimeWindow> {
        sieve_window(self.cfg.prime_lo, self.cfg.prime_hi).map_err(usage)
    }

    fn discovery(&self) -> DiscoveryConfig {
        DiscoveryConfig {
            height_bound: self.cfg.height_bound,
            holdout_fraction: self.cfg.holdout_fraction,
            ..DiscoveryConfig::default()
        }
    }
}

fn value_ref(v: &ValueArgs) -> Result<ValueRef> {
    match &v.family {
        Some(f) => {
            let family: Family = f.parse().map_err(usage)?;
            ValueRef::from_parts(family, &v.index, v.star).map_err(usage)
        }
        None => {
            let mut r: ValueRef = v.index.parse().map_err(usage)?;
            r.star |= v.star;
            Ok(r)
        }
    }
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn csv_out() -> csv::Writer<std::io::Stdout> {
    csv::Writer::from_writer(std::io::stdout())
}

pub fn eval(ctx: &Context, args: &ValueArgs) -> Result<u8> {
    let v = value_ref(args)?;
    let window = ctx.window()?;
    let sample = window_eval(&v, &window, ctx.store());
    match ctx.cfg.output {
        Output::Text => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{v} over {window}")?;
            for (p, r) in &sample.entries {
                writeln!(out, "{p}: {r}")?;
            }
            for s in &sample.skipped {
                writeln!(out, "skipped p = {}: {}", s.prime, s.reason)?;
            }
        }
        Output::Json => print_json(&json!({
            "schema": 1,
            "value": v.to_string(),
            "window": window.to_string(),
            "residues": sample.entries,
            "skipped": sample.skipped,
        }))?,
        Output::Csv => {
            let mut w = csv_out();
            w.write_record(["value", "prime", "residue"])?;
            for (p, r) in &sample.entries {
                w.write_record([v.to_string(), p.to_string(), r.to_string()])?;
            }
            w.flush()?;
        }
    }
    Ok(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
enum Status {
    Pass,
    Misprint,
    Fail,
    Skip,
}

#[derive(Debug, Serialize)]
struct Outcome {
    group: String,
    label: String,
    status: Status,
    passed: usize,
    failed: Vec<u64>,
    skipped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

fn check(r: &Relation, window: &PrimeWindow, store: Option<&dyn ResidueStore>) -> VerifyReport {
    verify(r, &window.above(r.weight() as u64 + 2), store)
}

fn outcome(
    group: &str,
    label: &str,
    report: &VerifyReport,
    status: Status,
    note: Option<String>,
) -> Outcome {
    Outcome {
        group: group.to_string(),
        label: label.to_string(),
        status,
        passed: report.passed.len(),
        failed: report.failed.clone(),
        skipped: report.skipped.len(),
        note,
    }
}

fn two_slot_outcomes(window: &PrimeWindow, store: Option<&dyn ResidueStore>) -> Vec<Outcome> {
    let mut specs = vec![SumFormulaSpec::new(
        SumKind::TwoSlot(2, 1),
        5,
        2,
        SumFamily::Mmv,
    )];
    for (i, j) in [(2, 1), (3, 1), (3, 2)] {
        specs.push(SumFormulaSpec::new(
            SumKind::TwoSlot(i, j),
            7,
            3,
            SumFamily::Mmv,
        ));
    }
    let mut out = Vec::new();
    for spec in specs {
        let formula = sum_formula(&spec).expect("well-formed two-slot spec");
        let link = formula.link.as_ref().expect("two-slot sums carry a link");
        let report = check(link, window, store);
        let status = if report.confirmed() {
            Status::Pass
        } else if report.failed.is_empty() {
            Status::Skip
        } else {
            Status::Fail
        };
        out.push(outcome(
            "restricted sums",
            &link.label,
            &report,
            status,
            None,
        ));
        let label = format!(
            "{} = N/2*beta{} with N the same at every prime",
            spec.label(),
            spec.w
        );
        let empty = VerifyReport::default();
        out.push(match extract_sum_constant(&spec, window, store) {
            Ok(c) if c.per_prime.len() >= 10 => Outcome {
                passed: c.per_prime.len(),
                ..outcome(
                    "restricted sums",
                    &label,
                    &empty,
                    Status::Pass,
                    Some(format!("N = {}", c.n)),
                )
            },
            Ok(c) => outcome(
                "restricted sums",
                &label,
                &empty,
                Status::Skip,
                Some(format!(
                    "only {} primes with beta{} non-zero",
                    c.per_prime.len(),
                    spec.w
                )),
            ),
            Err(e @ RelationError::InconsistentConstant(_)) => outcome(
                "restricted sums",
                &label,
                &empty,
                Status::Fail,
                Some(e.to_string()),
            ),
            Err(e) => outcome(
                "restricted sums",
                &label,
                &empty,
                Status::Skip,
                Some(e.to_string()),
            ),
        });
    }
    out
}

pub fn verify_paper(ctx: &Context) -> Result<u8> {
    let window = ctx.window()?;
    let store = ctx.store();
    let generated = linear_shuffle_relations(3);
    let ids = paper_identities();
    let mut outcomes: Vec<Outcome> = ids
        .par_iter()
        .map(|id| {
            let report = check(&id.relation, &window, store);
            let mut note = None;
            let mut status = if report.confirmed() {
                Status::Pass
            } else if report.failed.is_empty() {
                Status::Skip
            } else {
                Status::Fail
            };
            if status == Status::Fail {
                if let Some(c) = &id.correction {
                    let fixed = check(c, &window, store);
                    if fixed.confirmed() {
                        status = Status::Misprint;
                        note = Some(format!("holds instead: {}", c.label));
                    }
                }
            }
            if id.group == "linear shuffle" {
                match generated
                    .iter()
                    .find(|g| g.lhs.proportional_to(&id.relation.lhs))
                {
                    Some(g) => note = Some(format!("generated by {}", g.label)),
                    None => {
                        status = Status::Fail;
                        note = Some("not produced by the shuffle generator".into());
                    }
                }
            }
            outcome(id.group, &id.relation.label, &report, status, note)
        })
        .collect();
    outcomes.extend(two_slot_outcomes(&window, store));

    let count = |s: Status| outcomes.iter().filter(|o| o.status == s).count();
    let failures = count(Status::Fail);
    match ctx.cfg.output {
        Output::Text => {
            let mut out = std::io::stdout().lock();
            for o in &outcomes {
                let status = serde_json::to_value(o.status)?;
                writeln!(
                    out,
                    "{:<8} {}: {}",
                    status.as_str().unwrap_or(""),
                    o.group,
                    o.label
                )?;
                if !o.failed.is_empty() {
                    writeln!(out, "         failing primes: {:?}", o.failed)?;
                }
                if let Some(n) = &o.note {
                    writeln!(out, "         {n}")?;
                }
            }
            writeln!(
                out,
                "{} identities over {window}: {} pass, {} misprint, {} fail, {} skipped",
                outcomes.len(),
                count(Status::Pass),
                count(Status::Misprint),
                failures,
                count(Status::Skip)
            )?;
        }
        Output::Json => print_json(&json!({
            "schema": 1,
            "window": window.to_string(),
            "identities": outcomes,
        }))?,
        Output::Csv => {
            let mut w = csv_out();
            w.write_record(["group", "label", "status", "passed", "failed", "note"])?;
            for o in &outcomes {
                let status = serde_json::to_value(o.status)?;
                let failed: Vec<String> = o.failed.iter().map(u64::to_string).collect();
                w.write_record([
                    o.group.as_str(),
                    o.label.as_str(),
                    status.as_str().unwrap_or(""),
                    &o.passed.to_string(),
                    &failed.join(" "),
                    o.note.as_deref().unwrap_or(""),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(if failures > 0 { 1 } else { 0 })
}

pub fn relations(
    ctx: &Context,
    weight: u32,
    space: Option<&str>,
    out: Option<&Path>,
) -> Result<u8> {
    if weight == 0 {
        return Err(usage("weights start at 1"));
    }
    let window = ctx.window()?.above(weight as u64 + 2);
    let mut rels = match space {
        None => relation_suite(weight),
        Some(s) => {
            let space: Space = s.parse().map_err(usage)?;
            dimension_report(space, weight, &window, &ctx.discovery(), ctx.store())?.relations
        }
    };
    let reports = verify_all(&mut rels, &window, ctx.store());
    let failed: Vec<(&Relation, &VerifyReport)> =
        rels.iter().zip(&reports).filter(|(_, r)| !r.ok()).collect();
    for (r, rep) in &failed {
        eprintln!("FAIL {}: {} at p = {:?}", r.label, r, rep.failed);
    }
    let jsonl = relations_to_jsonl(&rels);
    if let Some(path) = out {
        std::fs::write(path, &jsonl).with_context(|| format!("writing {}", path.display()))?;
    }
    match ctx.cfg.output {
        Output::Json => print!("{jsonl}"),
        Output::Text => {
            let mut o = std::io::stdout().lock();
            for r in &rels {
                writeln!(o, "{:<15} {}", r.provenance.as_str(), r)?;
            }
            writeln!(
                o,
                "{} relations of weight {weight}, {} failing over {window}",
                rels.len(),
                failed.len()
            )?;
        }
        Output::Csv => {
            let mut w = csv_out();
            w.write_record(["provenance", "relation", "label", "verified_primes"])?;
            for r in &rels {
                let rec = RelationRecord::from(r);
                w.write_record([
                    rec.provenance.as_str(),
                    &r.to_string(),
                    &rec.label,
                    &rec.verified_primes.len().to_string(),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(if failed.is_empty() { 0 } else { 1 })
}

fn parse_weights(text: &str) -> Result<Vec<u32>> {
    let (lo, hi) = if text.contains("..") {
        parse_range(text).map_err(usage)?
    } else {
        let w: u64 = text
            .trim()
            .parse()
            .map_err(|_| usage(format!("bad weight `{text}`")))?;
        (w, w)
    };
    if lo == 0 {
        return Err(usage("weights start at 1"));
    }
    Ok((lo as u32..=hi as u32).collect())
}

pub fn dims(ctx: &Context, spaces: &str, weights: &str, table: bool) -> Result<u8> {
    let spaces: Vec<Space> = spaces
        .split(',')
        .map(|s| s.parse::<Space>().map_err(usage))
        .collect::<Result<_>>()?;
    let weights = parse_weights(weights)?;
    let window = ctx.window()?;
    let cfg = ctx.discovery();
    let mut records = Vec::new();
    let mut text = Vec::new();
    for &space in &spaces {
        for &w in &weights {
            let r = dimension_report(space, w, &window, &cfg, ctx.store())?;
            let table_text = match r.table {
                Some(t) => format!("{}{}", t.value, if t.tentative { "?" } else { "" }),
                None => "-".into(),
            };
            let verdict = match r.matches_table() {
                Some(true) => "matches",
                Some(false) => "differs",
                None => "",
            };
            text.push(format!(
                "{space:<10} w={w:<2} dim {:<4} rank>= {:<4} candidates {:<5} relations {:<5} F_w {:<4} table {table_text:<4} {verdict}",
                r.dim_estimate,
                r.rank_lower,
                r.candidates.len(),
                r.relations.len(),
                r.fibonacci_expected,
            ));
            if let Some(d) = r.dim_mod_line {
                text.push(format!(
                    "           dim modulo the line of {}: {d}",
                    r.line_value.as_ref().expect("line value")
                ));
            }
            let basis: Vec<String> = r.basis.iter().map(ToString::to_string).collect();
            text.push(format!("           basis: {}", basis.join(" ")));
            records.push(DimensionRecord::from(&r));
        }
    }
    match ctx.cfg.output {
        Output::Text => {
            println!("window {window}, height bound {}", cfg.height_bound);
            for line in text {
                println!("{line}");
            }
        }
        Output::Json => print_json(&records)?,
        Output::Csv if table => print!("{}", dims_table_csv(&records)),
        Output::Csv => {
            println!("{DIMS_CSV_HEADER}");
            for r in &records {
                println!("{}", r.csv_row());
            }
        }
    }
    Ok(0)
}

pub fn express(ctx: &Context, args: &ValueArgs, constants: &str) -> Result<u8> {
    let v = value_ref(args)?;
    let consts: Vec<ConstantMonomial> = constants
        .split(',')
        .map(|c| c.trim().parse::<ConstantMonomial>().map_err(usage))
        .collect::<Result<_>>()?;
    let window = ctx.window()?;
    let expr = express_in_constants(&v, &consts, &window, &ctx.discovery(), ctx.store())?;
    match ctx.cfg.output {
        Output::Json => print_json(&json!({
            "schema": 1,
            "value": v.to_string(),
            "constants": consts.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "window": window.to_string(),
            "expression": expr.to_string(),
        }))?,
        Output::Text | Output::Csv => println!("{v} = {expr}"),
    }
    Ok(0)
}

pub fn words(
    ctx: &Context,
    shuffle: Option<&[String]>,
    coeff: Option<&str>,
    prime: Option<u64>,
    translate: Option<&str>,
) -> Result<u8> {
    if shuffle.is_none() && coeff.is_none() && translate.is_none() {
        return Err(usage(
            "words needs --shuffle U V, --coeff W --prime P or --translate W",
        ));
    }
    let mut report = serde_json::Map::new();
    report.insert("schema".into(), json!(1));
    let mut lines = Vec::new();
    if let Some([u, v]) = shuffle {
        let (u, v): (Word, Word) = (u.parse().map_err(usage)?, v.parse().map_err(usage)?);
        let s = words::shuffle(&u, &v);
        lines.push(format!("{u} ⧢ {v} = {s}"));
        report.insert("shuffle".into(), json!(s.to_string()));
    }
    if let Some(w) = coeff {
        let w: Word = w.parse().map_err(usage)?;
        let p = Prime::new(prime.expect("clap requires --prime")).map_err(usage)?;
        let r = words::series_coeff(&w, p)?;
        lines.push(format!("{w} at p = {p}: {r}"));
        report.insert(
            "coeff".into(),
            json!({"word": w.to_string(), "prime": p.get(), "residue": r.value()}),
        );
    }
    if let Some(w) = translate {
        let w: Word = w.parse().map_err(usage)?;
        let t = words::word_to_value(&w)?;
        let value = match &t.term {
            Some(term) => {
                let mut lc = LinearCombination::new();
                lc.add_value(term.value.clone(), term.chi, int(term.scalar));
                lc.to_string()
            }
            None => "0".into(),
        };
        lines.push(format!(
            "{w} -> {value} (head valuation {})",
            t.head_valuation
        ));
        report.insert(
            "translate".into(),
            json!({"word": w.to_string(), "value": value, "head_valuation": t.head_valuation}),
        );
    }
    match ctx.cfg.output {
        Output::Json => print_json(&report)?,
        _ => lines.iter().for_each(|l| println!("{l}")),
    }
    Ok(0)
}

pub fn cache(cfg: &Config, action: CacheAction) -> Result<u8> {
    let Some(dir) = &cfg.cache_dir else {
        return Err(usage("the residue cache is disabled"));
    };
    match action {
        CacheAction::Stats => {
            let s = cache::stats(dir)?;
            match cfg.output {
                Output::Json => print_json(&s)?,
                _ => {
                    println!("cache {}: {} entries in {} rows", s.dir, s.entries, s.rows);
                    for (family, (rows, entries)) in &s.families {
                        println!("  {family}: {entries} entries, {rows} rows");
                    }
                }
            }
        }
        CacheAction::Clear => println!(
            "removed {} cache files from {}",
            cache::clear(dir)?,
            dir.display()
        ),
        CacheAction::Compact => println!(
            "dropped {} duplicate rows in {}",
            cache::compact(dir)?,
            dir.display()
        ),
    }
    Ok(0)
}
