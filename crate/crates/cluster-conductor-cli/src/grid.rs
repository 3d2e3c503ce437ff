//! Parameter grids and the per-place rows computed over them.

use cluster_conductor::conductor::ConductorBreakdown;
use cluster_conductor::families::{
    bad_odd_places, closed_form_conductor, engine_conductor, Base, CheckOutcome, Family, FamilyParams,
    FamilyVerifier, PlaceCase, VerificationReport,
};
use cluster_conductor::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::{GridArgs, GridFamily};

/// All parameter sets of a grid, in a fixed order.
pub fn instances(g: &GridArgs) -> Result<Vec<FamilyParams>> {
    let mut out = Vec::new();
    for &r in &g.rs {
        match g.family {
            GridFamily::Cr => {
                // Rejects a bad r even when the grid is empty.
                FamilyParams::cr(r, BigInt::from(1), BigInt::from(2))?;
                for a in -g.bound..=g.bound {
                    for b in -g.bound..=g.bound {
                        if a == 0 || b == 0 || a.gcd(&b) != 1 {
                            continue;
                        }
                        if let Ok(p) = FamilyParams::cr(r, BigInt::from(a), BigInt::from(b)) {
                            out.push(p);
                        }
                    }
                }
            }
            fam => {
                let families: &[Family] = match fam {
                    GridFamily::Crminus => &[Family::CrMinus],
                    GridFamily::Crplus => &[Family::CrPlus],
                    _ => &[Family::CrMinus, Family::CrPlus],
                };
                for &c in &g.cs {
                    if c.abs() < 2 {
                        return Err(Error::InvalidParams(format!("grid needs |c| ≥ 2, got {c}")));
                    }
                    let cr = BigInt::from(c).pow(r);
                    let mut big_a = BigInt::from(1);
                    let top = match g.a_max {
                        Some(m) => BigInt::from(m).min(&cr - 1),
                        None => &cr - 1,
                    };
                    while big_a <= top {
                        let big_b = &cr - &big_a;
                        if big_a.gcd(&big_b) == BigInt::from(1) {
                            for &f in families {
                                let p = if f == Family::CrMinus {
                                    FamilyParams::cr_minus(r, big_a.clone(), big_b.clone(), BigInt::from(c))?
                                } else {
                                    FamilyParams::cr_plus(r, big_a.clone(), big_b.clone(), BigInt::from(c))?
                                };
                                out.push(p);
                            }
                        }
                        big_a += 1;
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub enum RowKind {
    Checked(Box<VerificationReport>),
    Tabulated { theorem: u64, engine: ConductorBreakdown, twist: Option<(u64, ConductorBreakdown)> },
    /// Parameters too small for the closed-form depths.
    Rejected(String),
    /// Cofactor with no prime factor below the trial-division bound.
    Unfactored(String),
    Failed(String),
}

#[derive(Clone, Debug)]
pub struct Row {
    pub params: FamilyParams,
    pub base: Base,
    pub place: Option<PlaceCase>,
    pub kind: RowKind,
}

impl Row {
    pub fn is_failure(&self) -> bool {
        match &self.kind {
            RowKind::Checked(rep) => !rep.passed(),
            RowKind::Tabulated { theorem, engine, twist } => {
                engine.total != *theorem || twist.as_ref().is_some_and(|(t, e)| e.total != *t)
            }
            RowKind::Failed(_) => true,
            RowKind::Rejected(_) | RowKind::Unfactored(_) => false,
        }
    }

    pub fn failure_json(&self) -> Value {
        let mut v = json!({
            "params": self.params.to_json(),
            "base": self.base,
        });
        if let Some(pc) = &self.place {
            v["q"] = json!(pc.q());
            v["case"] = json!(pc.tag);
        }
        match &self.kind {
            RowKind::Checked(rep) => v["counterexample"] = rep.counterexample.clone().unwrap_or(Value::Null),
            RowKind::Tabulated { theorem, engine, twist } => {
                v["theorem"] = json!(theorem);
                v["engine"] = json!(engine);
                if let Some((t, e)) = twist {
                    v["twist"] = json!({"theorem": t, "engine": e});
                }
            }
            RowKind::Failed(msg) | RowKind::Rejected(msg) | RowKind::Unfactored(msg) => v["error"] = json!(msg),
        }
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Verify,
    Table,
}

fn place_row(params: &FamilyParams, pc: PlaceCase, mode: Mode, ver: Option<&FamilyVerifier>) -> Row {
    let kind = match mode {
        Mode::Verify => match ver.expect("verifier").verify(&pc) {
            Ok(rep) => RowKind::Checked(Box::new(rep)),
            Err(e) => err_kind(e),
        },
        Mode::Table => tabulate(params, &pc).unwrap_or_else(err_kind),
    };
    Row { params: params.clone(), base: pc.base, place: Some(pc), kind }
}

fn err_kind(e: Error) -> RowKind {
    match e {
        Error::DepthGuard(_) => RowKind::Rejected(e.to_string()),
        _ => RowKind::Failed(e.to_string()),
    }
}

fn tabulate(params: &FamilyParams, pc: &PlaceCase) -> Result<RowKind> {
    let theorem = closed_form_conductor(params, pc, false)?;
    let engine = engine_conductor(params, pc, false)?;
    let twist = if pc.base == Base::Kplus && pc.tag.twist_defined() {
        Some((closed_form_conductor(params, pc, true)?, engine_conductor(params, pc, true)?))
    } else {
        None
    };
    Ok(RowKind::Tabulated { theorem, engine, twist })
}

/// Rows of one curve over the requested bases, in place order.
pub fn instance_rows(params: &FamilyParams, bases: &[Base], mode: Mode) -> Vec<Row> {
    let ver = match mode {
        Mode::Verify => match FamilyVerifier::new(params) {
            Ok(v) => Some(v),
            Err(e) => {
                return vec![Row { params: params.clone(), base: bases[0], place: None, kind: err_kind(e) }];
            }
        },
        Mode::Table => None,
    };
    let mut rows = Vec::new();
    for &base in bases {
        match bad_odd_places(params, base) {
            Ok(bad) => {
                for pc in bad.places {
                    rows.push(place_row(params, pc, mode, ver.as_ref()));
                }
                if let Some(rest) = bad.unfactored {
                    rows.push(Row {
                        params: params.clone(),
                        base,
                        place: None,
                        kind: RowKind::Unfactored(format!("cofactor {rest} left unfactored")),
                    });
                }
            }
            Err(e) => rows.push(Row { params: params.clone(), base, place: None, kind: err_kind(e) }),
        }
    }
    rows
}

/// Runs every instance, in parallel, and concatenates the rows in
/// instance order so the output does not depend on scheduling.
pub fn run_grid(instances: &[FamilyParams], bases: &[Base], mode: Mode) -> Vec<Row> {
    instances.par_iter().map(|p| instance_rows(p, bases, mode)).collect::<Vec<_>>().into_iter().flatten().collect()
}

pub const CSV_HEADER: [&str; 21] = [
    "family",
    "r",
    "a",
    "b",
    "A",
    "B",
    "c",
    "q",
    "base",
    "case",
    "tame",
    "wild",
    "total",
    "theorem",
    "match",
    "twist_total",
    "twist_theorem",
    "multiset",
    "discriminant",
    "pairwise",
    "note",
];

fn outcome(c: CheckOutcome) -> String {
    match c {
        CheckOutcome::Pass => "PASS",
        CheckOutcome::Fail => "FAIL",
        CheckOutcome::NotApplicable => "NOT_APPLICABLE",
    }
    .to_string()
}

/// The fixed-order CSV record of a row.
pub fn csv_record(row: &Row) -> Vec<String> {
    let p = &row.params;
    let mut rec = vec![p.family().to_string(), p.r().to_string()];
    let fields = p.fields();
    let get = |k: &str| fields.iter().find(|(n, _)| *n == k).map(|(_, v)| v.clone()).unwrap_or_default();
    for k in ["a", "b", "A", "B", "c"] {
        rec.push(get(k));
    }
    match &row.place {
        Some(pc) => {
            rec.push(pc.q().to_string());
            rec.push(pc.base.to_string());
            rec.push(pc.tag.to_string());
        }
        None => {
            rec.push(String::new());
            rec.push(row.base.to_string());
            rec.push(String::new());
        }
    }
    let mut tail = vec![String::new(); 11];
    match &row.kind {
        RowKind::Checked(rep) => {
            let e = &rep.engine;
            tail[0] = e.tame.to_string();
            tail[1] = e.wild.to_string();
            tail[2] = e.total.to_string();
            tail[3] = rep.theorem.to_string();
            tail[4] = (e.total == rep.theorem).to_string();
            if let Some(t) = &rep.twist {
                tail[5] = t.engine.total.to_string();
                tail[6] = t.theorem.to_string();
            }
            tail[7] = outcome(rep.multiset_check);
            tail[8] = outcome(rep.discriminant_check);
            tail[9] = outcome(rep.pairwise_check);
        }
        RowKind::Tabulated { theorem, engine, twist } => {
            tail[0] = engine.tame.to_string();
            tail[1] = engine.wild.to_string();
            tail[2] = engine.total.to_string();
            tail[3] = theorem.to_string();
            tail[4] = (engine.total == *theorem).to_string();
            if let Some((t, e)) = twist {
                tail[5] = e.total.to_string();
                tail[6] = t.to_string();
            }
        }
        RowKind::Rejected(msg) | RowKind::Unfactored(msg) | RowKind::Failed(msg) => tail[10] = msg.clone(),
    }
    rec.extend(tail);
    rec
}

pub fn write_csv<W: std::io::Write>(rows: &[Row], w: W) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for row in rows {
        out.write_record(csv_record(row))?;
    }
    out.flush()
}
