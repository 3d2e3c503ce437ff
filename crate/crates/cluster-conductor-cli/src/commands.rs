use std::fs;
use std::path::Path;

use cluster_conductor::cluster::{attach_inertia, ClusterPicture, InertiaAction};
use cluster_conductor::conductor::{
    conductor, conductor_semistable, is_semistable, tame_conductor_general, WildOrbitData,
};
use cluster_conductor::families::{
    bad_odd_places, case_at, closed_form_conductor, closed_form_picture, Base, FamilyParams, PlaceCase,
};
use cluster_conductor::{Error, ExtRat};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::args::{ConductorArgs, Format, GenericArgs, GridArgs, InstanceArgs, TableArgs, VerifyArgs};
use crate::grid::{self, Mode, Row, RowKind};
use crate::{CliError, Outcome};

/// True when the locale advertises UTF-8.
pub fn unicode_terminal() -> bool {
    for var in ["LC_ALL", "LC_CTYPE", "LANG"] {
        if let Ok(v) = std::env::var(var) {
            if !v.is_empty() {
                let v = v.to_ascii_lowercase();
                return v.contains("utf-8") || v.contains("utf8");
            }
        }
    }
    false
}

/// The picture with γ labels, or the stored g labels.
pub fn display_picture(pic: &ClusterPicture, unicode: bool) -> String {
    if !unicode {
        return pic.canonical_string();
    }
    pic.render(&|i| {
        let l = &pic.labels()[i];
        match l.strip_prefix('g') {
            Some(rest) if rest.bytes().all(|b| b.is_ascii_digit()) && !rest.is_empty() => format!("γ{rest}"),
            _ => l.clone(),
        }
    })
}

fn places(params: &FamilyParams, base: Base, q: Option<u64>) -> Result<Vec<(u64, Option<PlaceCase>)>, Error> {
    match q {
        Some(q) => Ok(vec![(q, case_at(params, q, base)?)]),
        None => Ok(bad_odd_places(params, base)?.places.into_iter().map(|pc| (pc.q(), Some(pc))).collect()),
    }
}

fn json_out(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub fn run_picture(args: &InstanceArgs) -> Result<Outcome, CliError> {
    let params = args.params()?;
    let unicode = !args.ascii_labels && unicode_terminal();
    let mut items = Vec::new();
    let mut text = String::new();
    for (q, pc) in places(&params, args.base, args.q)? {
        match pc {
            None => {
                items.push(json!({"q": q, "base": args.base, "status": "good_reduction"}));
                text.push_str(&format!("good reduction at q={q}\n"));
            }
            Some(pc) => {
                let model = closed_form_picture(&params, &pc)?;
                let dec = model.decorate()?;
                items.push(json!({
                    "q": q,
                    "base": pc.base,
                    "case": pc.tag,
                    "picture": model.picture.canonical_string(),
                    "cluster_picture": model.picture.to_json(),
                    "inertia_generators": model.inertia.generators,
                    "inertia_order": dec.group_order(),
                    "ram_index": model.ram_index,
                    "wild_orbits": model.wild_orbits,
                }));
                let shown = display_picture(&model.picture, unicode);
                if args.q.is_some() {
                    text.push_str(&format!("{shown}\n"));
                } else {
                    text.push_str(&format!("q={q} {} {shown}\n", pc.tag));
                }
            }
        }
    }
    let stdout = match args.format {
        Format::Json => json_out(&json!({"params": params.to_json(), "places": items})),
        Format::Ascii | Format::Csv => text,
    };
    Ok(Outcome::ok(stdout))
}

struct ConductorRow {
    pc: PlaceCase,
    twisted: bool,
    tame: u64,
    wild: u64,
    total: u64,
    method: String,
    theorem: u64,
}

pub fn run_conductor(args: &ConductorArgs) -> Result<Outcome, CliError> {
    let inst = &args.instance;
    let params = inst.params()?;
    let mut rows = Vec::new();
    let mut good = Vec::new();
    for (q, pc) in places(&params, inst.base, inst.q)? {
        let Some(pc) = pc else {
            good.push(q);
            continue;
        };
        let twisted = args.twist && (inst.q.is_some() || (pc.base == Base::Kplus && pc.tag.twist_defined()));
        let theorem = closed_form_conductor(&params, &pc, twisted)?;
        let model = closed_form_picture(&params, &pc)?;
        let model = if twisted { model.twisted() } else { model };
        let b = model.engine_conductor()?;
        rows.push(ConductorRow {
            pc,
            twisted,
            tame: b.tame,
            wild: b.wild,
            total: b.total,
            method: b.method.to_string(),
            theorem,
        });
    }
    let mismatches = rows.iter().filter(|r| r.total != r.theorem).count();
    let stdout = match inst.format {
        Format::Json => {
            let items: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "q": r.pc.q(), "base": r.pc.base, "case": r.pc.tag, "twisted": r.twisted,
                        "tame": r.tame, "wild": r.wild, "total": r.total, "method": r.method,
                        "theorem": r.theorem, "match": r.total == r.theorem,
                    })
                })
                .collect();
            json_out(&json!({"params": params.to_json(), "rows": items, "good_reduction": good}))
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["family", "r"];
            let fields = params.fields();
            header.extend(fields.iter().map(|(k, _)| *k));
            header.extend(["q", "base", "case", "twisted", "tame", "wild", "total", "theorem", "match"]);
            w.write_record(&header).map_err(io_err)?;
            for r in &rows {
                let mut rec = vec![params.family().to_string(), params.r().to_string()];
                rec.extend(fields.iter().map(|(_, v)| v.clone()));
                rec.extend([
                    r.pc.q().to_string(),
                    r.pc.base.to_string(),
                    r.pc.tag.to_string(),
                    r.twisted.to_string(),
                    r.tame.to_string(),
                    r.wild.to_string(),
                    r.total.to_string(),
                    r.theorem.to_string(),
                    (r.total == r.theorem).to_string(),
                ]);
                w.write_record(&rec).map_err(io_err)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| io_err(e.into_error()))?).expect("utf-8 csv")
        }
        Format::Ascii => {
            let mut s = format!("{params} over {}\n", inst.base);
            s.push_str(&format!(
                "{:<8} {:<18} {:>5} {:>5} {:>6} {:>8} {:<11} {}\n",
                "q", "case", "tame", "wild", "total", "theorem", "method", "match"
            ));
            for r in &rows {
                let case = if r.twisted { format!("{} (twist)", r.pc.tag) } else { r.pc.tag.to_string() };
                s.push_str(&format!(
                    "{:<8} {:<18} {:>5} {:>5} {:>6} {:>8} {:<11} {}\n",
                    r.pc.q(),
                    case,
                    r.tame,
                    r.wild,
                    r.total,
                    r.theorem,
                    r.method,
                    r.total == r.theorem
                ));
            }
            for q in &good {
                s.push_str(&format!("good reduction at q={q}\n"));
            }
            s
        }
    };
    if mismatches > 0 {
        return Ok(Outcome::mismatch(stdout, json!({"error": "verification_mismatch", "mismatches": mismatches})));
    }
    Ok(Outcome::ok(stdout))
}

fn io_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::new(2, "io", e.to_string())
}

fn grid_rows(g: &GridArgs, mode: Mode) -> Result<(usize, Vec<Row>), CliError> {
    let instances = grid::instances(g)?;
    let rows = grid::run_grid(&instances, &g.base.bases(), mode);
    Ok((instances.len(), rows))
}

fn summary(instances: usize, rows: &[Row]) -> Value {
    let count = |f: &dyn Fn(&Row) -> bool| rows.iter().filter(|r| f(r)).count();
    json!({
        "instances": instances,
        "rows": rows.len(),
        "failures": count(&|r| r.is_failure()),
        "depth_guard_rejections": count(&|r| matches!(r.kind, RowKind::Rejected(_))),
        "unfactored": count(&|r| matches!(r.kind, RowKind::Unfactored(_))),
    })
}

pub fn run_verify(args: &VerifyArgs) -> Result<Outcome, CliError> {
    let (n, rows) = grid_rows(&args.grid, Mode::Verify)?;
    write_rows_csv(&rows, &args.csv)?;
    let failures: Vec<Value> = rows.iter().filter(|r| r.is_failure()).map(Row::failure_json).collect();
    fs::write(&args.failures, json_out(&Value::Array(failures.clone()))).map_err(io_err)?;
    let mut s = summary(n, &rows);
    s["csv"] = json!(args.csv.display().to_string());
    s["failures_file"] = json!(args.failures.display().to_string());
    let stdout = json_out(&s);
    if failures.is_empty() {
        Ok(Outcome::ok(stdout))
    } else {
        Ok(Outcome::mismatch(
            stdout,
            json!({"error": "verification_mismatch", "failures": failures.len(), "failures_file": s["failures_file"]}),
        ))
    }
}

fn write_rows_csv(rows: &[Row], path: &Path) -> Result<(), CliError> {
    let f = fs::File::create(path).map_err(io_err)?;
    grid::write_csv(rows, f).map_err(io_err)
}

pub fn run_table(args: &TableArgs) -> Result<Outcome, CliError> {
    let (n, rows) = grid_rows(&args.grid, Mode::Table)?;
    let stdout = match args.format {
        Format::Json => {
            let items: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let rec = grid::csv_record(r);
                    let obj: serde_json::Map<String, Value> = grid::CSV_HEADER
                        .iter()
                        .zip(rec)
                        .filter(|(_, v)| !v.is_empty())
                        .map(|(k, v)| (k.to_string(), json!(v)))
                        .collect();
                    Value::Object(obj)
                })
                .collect();
            json_out(&json!({"summary": summary(n, &rows), "rows": items}))
        }
        Format::Csv | Format::Ascii => {
            let mut buf = Vec::new();
            grid::write_csv(&rows, &mut buf).map_err(io_err)?;
            String::from_utf8(buf).expect("utf-8 csv")
        }
    };
    let failures = rows.iter().filter(|r| r.is_failure()).count();
    if failures > 0 {
        return Ok(Outcome::mismatch(stdout, json!({"error": "verification_mismatch", "failures": failures})));
    }
    Ok(Outcome::ok(stdout))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenericInput {
    matrix: Vec<Vec<Value>>,
    #[serde(default)]
    leading_val: Option<Value>,
    #[serde(default)]
    labels: Option<Vec<String>>,
    #[serde(default)]
    inertia: Vec<Vec<usize>>,
    #[serde(default = "default_true")]
    tame: bool,
    #[serde(default)]
    wild_orbits: Vec<WildOrbitData>,
    #[serde(default)]
    ram_index: Option<u64>,
    #[serde(default)]
    wild_scale: Option<u64>,
}

fn default_true() -> bool {
    true
}

fn ext_rat(v: &Value, at: &str) -> Result<ExtRat, CliError> {
    let parsed = match v {
        Value::Null => Ok(ExtRat::Infinity),
        Value::String(s) if s == "∞" || s == "infinity" => Ok(ExtRat::Infinity),
        Value::String(s) => s.parse(),
        Value::Number(n) => n.to_string().parse(),
        _ => return Err(CliError::new(2, "parse", format!("{at}: expected a rational, got {v}"))),
    };
    parsed.map_err(|e| CliError::new(2, e.kind(), format!("{at}: {e}")))
}

pub fn run_generic(args: &GenericArgs) -> Result<Outcome, CliError> {
    let text = fs::read_to_string(&args.input).map_err(io_err)?;
    let input: GenericInput =
        serde_json::from_str(&text).map_err(|e| CliError::new(2, "parse", format!("input JSON: {e}")))?;
    let mut matrix = Vec::with_capacity(input.matrix.len());
    for (i, row) in input.matrix.iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (j, v) in row.iter().enumerate() {
            out.push(ext_rat(v, &format!("matrix[{i}][{j}]"))?);
        }
        matrix.push(out);
    }
    let lead = match &input.leading_val {
        Some(v) => ext_rat(v, "leading_val")?,
        None => ExtRat::zero(),
    };
    let pic = ClusterPicture::build(&matrix, lead, input.labels.clone())?;
    let action = InertiaAction::new(input.inertia.clone(), input.tame);
    let dec = attach_inertia(&pic, &action)?;
    let e = input.ram_index.unwrap_or(dec.group_order() as u64);
    let verdict = is_semistable(&dec, e);
    let breakdown = conductor(&dec, e, &input.wild_orbits, input.wild_scale.unwrap_or(1))?;
    let semistable_formula = if verdict.holds() { Some(conductor_semistable(&dec, e)?) } else { None };
    let general_tame = tame_conductor_general(&dec).ok();
    let unicode = !args.ascii_labels && unicode_terminal();
    let stdout = match args.format {
        Format::Json => json_out(&json!({
            "picture": pic.canonical_string(),
            "cluster_picture": pic.to_json(),
            "genus": pic.genus(),
            "inertia_order": dec.group_order(),
            "ram_index": e,
            "semistable": verdict.holds(),
            "unstable_reasons": verdict.reasons.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            "conductor": breakdown,
            "semistable_formula": semistable_formula,
            "general_tame": general_tame,
        })),
        Format::Ascii | Format::Csv => {
            let mut s = format!("{}\n", display_picture(&pic, unicode));
            s.push_str(&format!(
                "tame {} wild {} total {} ({})\n",
                breakdown.tame, breakdown.wild, breakdown.total, breakdown.method
            ));
            s
        }
    };
    Ok(Outcome::ok(stdout))
}
