use std::fmt::Display;
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::spec::{self, Resolved, Task};
use crate::entropy::{
    amenable_measure_trace, amenable_topological_trace, check_amenable_agreement, check_variational,
    entropy_pair_scan, partition_count_bound, sofic_measure_trace, sofic_topological_trace,
    stage_microstates, EntropyTrace, SoficParams,
};
use crate::error::{Error, Result};
use crate::group::FiniteSubset;
use crate::microstates::{count_cover, CertMode, MeasureFilter};
use crate::sofic::defect_table;
use crate::tiling::{amenable_exact_tile, sofic_quasi_tile, verify_tiling, TileParams};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Rows and a JSON document for one task, plus anything that went wrong.
#[derive(Debug, Default)]
pub struct Outcome {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub json: Value,
    /// Hard assertions that failed.
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
    /// Extra header lines.
    pub notes: Vec<String>,
}

#[derive(Debug)]
pub struct Written {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

fn cell<T: Display>(x: &Option<T>) -> String {
    x.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

fn to_json<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

/// One evaluated experiment, ready to be rendered.
#[derive(Debug)]
pub struct Report {
    pub task: Task,
    pub spec_sha256: String,
    pub budget: Option<u64>,
    raw: Value,
    pub outcome: Outcome,
}

/// Parses, validates and runs an experiment document.
pub fn evaluate(text: &str, budget: Option<u64>) -> Result<Report> {
    let mut spec = spec::parse(text)?;
    if budget.is_some() {
        spec.params.budget = budget;
    }
    let raw: Value = serde_json::from_str(text).map_err(|e| Error::schema(".", e.to_string()))?;
    let r = spec::resolve(spec)?;
    let outcome = execute(&r)?;
    Ok(Report {
        task: r.spec.task,
        spec_sha256: hex::encode(Sha256::digest(text.as_bytes())),
        budget,
        raw,
        outcome,
    })
}

impl Report {
    fn params(&self) -> Value {
        self.raw.get("params").cloned().unwrap_or(json!({}))
    }

    /// `#` header lines followed by the table.
    pub fn csv(&self) -> Result<String> {
        let mut header = vec![
            format!("# soflab {VERSION}"),
            format!("# spec-sha256: {}", self.spec_sha256),
            format!("# task: {}", self.task.name()),
            format!("# system: {}", self.raw["system"]),
            format!("# params: {}", self.params()),
        ];
        if let Some(b) = self.budget {
            header.push(format!("# budget-nodes: {b}"));
        }
        header.extend(self.outcome.notes.iter().map(|n| format!("# {n}")));
        let mut out = header.join("\n");
        out.push('\n');
        let io = |e: csv::Error| Error::Io(e.to_string());
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.outcome.columns).map_err(io)?;
        for row in &self.outcome.rows {
            w.write_record(row).map_err(io)?;
        }
        let body = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        out.push_str(std::str::from_utf8(&body).expect("csv is utf-8"));
        Ok(out)
    }

    pub fn json(&self) -> Value {
        json!({
            "soflab": VERSION,
            "spec_sha256": self.spec_sha256,
            "task": self.task.name(),
            "system": self.raw["system"],
            "params": self.params(),
            "result": self.outcome.json,
            "failures": self.outcome.failures,
            "warnings": self.outcome.warnings,
        })
    }
}

/// Runs one experiment file and writes `<stem>.csv` and `<stem>.json`.
pub fn run_file(path: &Path, out_dir: &Path, budget: Option<u64>) -> Result<Written> {
    let text = std::fs::read_to_string(path)?;
    let report = evaluate(&text, budget)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment");
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let json_path = out_dir.join(format!("{stem}.json"));
    std::fs::write(&csv_path, report.csv()?)?;
    let mut s = serde_json::to_string_pretty(&report.json()).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    std::fs::write(&json_path, s)?;
    Ok(Written {
        csv: csv_path,
        json: json_path,
        failures: report.outcome.failures,
        warnings: report.outcome.warnings,
    })
}

/// Schema and cross-reference checks only.
pub fn validate_file(path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    spec::resolve(spec::parse(&text)?).map(|_| ())
}

pub fn execute(r: &Resolved) -> Result<Outcome> {
    match r.spec.task {
        Task::Language => language(r),
        Task::Defects => defects(r),
        Task::Microstates => microstates(r),
        Task::EntropySofic => entropy_sofic(r),
        Task::EntropyAmenable => entropy_amenable(r),
        Task::Compare => compare(r),
        Task::Variational => variational(r),
        Task::Tile => tile(r),
        Task::Pairs => pairs(r),
        Task::PartitionBound => partition_bound(r),
    }
}

fn language(r: &Resolved) -> Result<Outcome> {
    let mut o = Outcome {
        columns: vec!["window", "size"],
        ..Default::default()
    };
    let mut docs = Vec::new();
    for w in r.windows()? {
        let n = r.sys.language_size(&w, r.budget())?;
        o.rows.push(vec![w.to_string(), n.to_string()]);
        docs.push(json!({"window": w, "size": n.to_string()}));
    }
    o.json = Value::Array(docs);
    Ok(o)
}

fn defects(r: &Resolved) -> Result<Outcome> {
    let rows = defect_table(&r.sofic()?, &r.pairs()?)?;
    Ok(Outcome {
        columns: vec!["stage", "d", "s", "t", "mult_defect", "freeness_defect"],
        rows: rows
            .iter()
            .map(|x| {
                vec![
                    x.stage.to_string(),
                    x.d.to_string(),
                    x.s.clone(),
                    x.t.clone(),
                    x.mult_defect.to_string(),
                    cell(&x.freeness_defect),
                ]
            })
            .collect(),
        json: to_json(&rows),
        ..Default::default()
    })
}

fn mode_name(m: CertMode) -> &'static str {
    match m {
        CertMode::CertifiedInner => "certified-inner",
        CertMode::CertifiedOuter => "certified-outer",
    }
}

fn microstates(r: &Resolved) -> Result<Outcome> {
    let (seq, u, window) = (r.sofic()?, r.cover()?, r.window()?);
    let modes = match r.mode() {
        Some(m) => vec![m],
        None => vec![CertMode::CertifiedInner, CertMode::CertifiedOuter],
    };
    let measures = r.measures()?;
    let functions = r.functions()?;
    let mut o = Outcome {
        columns: vec!["f", "delta", "mode", "filtered", "i", "d", "tuples", "cover_count"],
        ..Default::default()
    };
    let mut docs = Vec::new();
    for f in r.f_grid()? {
        for delta in r.deltas()? {
            let p = SoficParams {
                cover: &u,
                f: &f,
                delta,
                window: &window,
                budget: r.budget(),
            };
            let filter = measures.first().map(|mu| MeasureFilter {
                measure: mu.clone(),
                functions: functions.clone(),
                delta,
            });
            for &mode in &modes {
                for (i, sigma) in seq.iter().enumerate() {
                    let unfiltered = stage_microstates(&r.sys, &p, sigma, mode, None)?;
                    let n_unf = count_cover(&unfiltered, &u, r.budget())?.count;
                    let mut entries = vec![(false, unfiltered.len(), n_unf)];
                    if let Some(filter) = &filter {
                        let m = stage_microstates(&r.sys, &p, sigma, mode, Some(filter))?;
                        let n = count_cover(&m, &u, r.budget())?.count;
                        if n > n_unf || m.len() > unfiltered.len() {
                            o.failures.push(format!("stage {}: filtered count exceeds unfiltered", i + 1));
                        }
                        entries.push((true, m.len(), n));
                    }
                    for (filtered, tuples, n) in entries {
                        o.rows.push(vec![
                            f.to_string(),
                            delta.to_string(),
                            mode_name(mode).into(),
                            filtered.to_string(),
                            (i + 1).to_string(),
                            sigma.d().to_string(),
                            tuples.to_string(),
                            n.to_string(),
                        ]);
                        docs.push(json!({
                            "f": f, "delta": delta, "mode": mode, "filtered": filtered,
                            "i": i + 1, "d": sigma.d(), "tuples": tuples, "cover_count": n,
                        }));
                    }
                }
            }
        }
    }
    o.json = Value::Array(docs);
    Ok(o)
}

const TRACE_COLUMNS: [&str; 13] = [
    "kind",
    "measure",
    "f",
    "delta",
    "i",
    "d",
    "count_inner",
    "count_outer",
    "value_inner",
    "value_outer",
    "max_inner",
    "max_outer",
    "complete",
];

fn trace_rows(o: &mut Outcome, t: &EntropyTrace, kind: &str, measure: Option<usize>) {
    for row in &t.rows {
        o.rows.push(vec![
            kind.into(),
            cell(&measure),
            t.params.f.to_string(),
            t.params.delta.to_string(),
            row.i.to_string(),
            row.d.to_string(),
            cell(&row.count_inner),
            cell(&row.count_outer),
            cell(&row.value_inner),
            cell(&row.value_outer),
            cell(&row.max_inner),
            cell(&row.max_outer),
            row.complete.to_string(),
        ]);
        if !row.complete {
            o.warnings.push(format!(
                "{kind} stage {}: {}",
                row.i,
                row.note.as_deref().unwrap_or("incomplete")
            ));
        }
    }
}

/// Inner ≤ outer and `count ≤ N(U,X)^d`, on every complete row.
fn check_trace(o: &mut Outcome, t: &EntropyTrace, n_cover: usize, kind: &str) {
    for row in t.rows.iter().filter(|r| r.complete) {
        if row.value_inner > row.value_outer {
            o.failures.push(format!("{kind} stage {}: inner exceeds outer", row.i));
        }
        let cap = BigUint::from(n_cover).pow(row.d as u32);
        if row.count_outer.is_some_and(|c| BigUint::from(c) > cap) {
            o.failures.push(format!("{kind} stage {}: value exceeds log N(U,X)", row.i));
        }
    }
}

fn entropy_sofic(r: &Resolved) -> Result<Outcome> {
    let (seq, u, window) = (r.sofic()?, r.cover()?, r.window()?);
    let measures = r.measures()?;
    let functions = r.functions()?;
    let n_cover = u.cover_number(r.budget())?.count;
    let mut o = Outcome {
        columns: TRACE_COLUMNS.to_vec(),
        notes: vec![format!("log-N(U,X): {}", (n_cover as f64).ln())],
        ..Default::default()
    };
    let mut docs = Vec::new();
    for f in r.f_grid()? {
        for delta in r.deltas()? {
            let p = SoficParams {
                cover: &u,
                f: &f,
                delta,
                window: &window,
                budget: r.budget(),
            };
            let top = sofic_topological_trace(&r.sys, &p, &seq)?;
            trace_rows(&mut o, &top, "topological", None);
            check_trace(&mut o, &top, n_cover, "topological");
            for (k, mu) in measures.iter().enumerate() {
                let t = sofic_measure_trace(&r.sys, &p, mu, &functions, &seq)?;
                trace_rows(&mut o, &t, "measure", Some(k));
                check_trace(&mut o, &t, n_cover, "measure");
                for (a, b) in t.rows.iter().zip(&top.rows) {
                    if a.complete && b.complete && a.count_outer > b.count_outer {
                        o.failures.push(format!("measure {k} stage {}: filtered exceeds unfiltered", a.i));
                    }
                }
                docs.push(json!({"kind": "measure", "measure": k, "trace": t}));
            }
            docs.push(json!({"kind": "topological", "trace": top}));
        }
    }
    o.json = Value::Array(docs);
    Ok(o)
}

fn entropy_amenable(r: &Resolved) -> Result<Outcome> {
    let (u, folner) = (r.cover()?, r.folner()?);
    let k = FiniteSubset::from_unique(r.group().generators());
    let mut o = Outcome {
        columns: vec!["kind", "measure", "n", "size", "count", "entropy", "value", "invariance_defect"],
        ..Default::default()
    };
    let mut traces = vec![(None, amenable_topological_trace(&r.sys, &u, &folner, &k, r.budget())?)];
    for (i, mu) in r.measures()?.iter().enumerate() {
        traces.push((Some(i), amenable_measure_trace(&r.sys, &u, mu, &folner, &k, r.budget())?));
    }
    for (m, t) in &traces {
        for row in &t.rows {
            o.rows.push(vec![
                if m.is_some() { "measure" } else { "topological" }.into(),
                cell(m),
                row.n.to_string(),
                row.size.to_string(),
                cell(&row.count),
                cell(&row.entropy),
                row.value.to_string(),
                row.invariance_defect.to_string(),
            ]);
        }
    }
    o.json = to_json(&traces.iter().map(|(m, t)| json!({"measure": m, "trace": t})).collect::<Vec<_>>());
    Ok(o)
}

fn compare(r: &Resolved) -> Result<Outcome> {
    let (u, folner, seq) = (r.cover()?, r.folner()?, r.sofic()?);
    let (f, window) = (r.f()?, r.window()?);
    let measures = r.measures()?;
    let functions = r.functions()?;
    let measure = measures.first().map(|mu| (mu, functions.as_slice()));
    let rep = check_amenable_agreement(
        &r.sys,
        &u,
        measure,
        &folner,
        &seq,
        &r.deltas()?,
        &f,
        &window,
        r.slack(),
        r.budget(),
    )?;
    let mut o = Outcome {
        columns: vec![
            "kind",
            "i",
            "d",
            "folner_size",
            "delta",
            "sofic_inner",
            "sofic_outer",
            "amenable",
            "gap",
            "holds",
        ],
        notes: vec![format!("slack: {}", rep.slack), rep.note.to_string()],
        ..Default::default()
    };
    for row in &rep.rows {
        o.rows.push(vec![
            row.kind.into(),
            row.i.to_string(),
            row.d.to_string(),
            row.folner_size.to_string(),
            row.delta.to_string(),
            cell(&row.sofic_inner),
            cell(&row.sofic_outer),
            row.amenable.to_string(),
            cell(&row.gap),
            row.holds.to_string(),
        ]);
        if !row.holds {
            o.failures.push(format!("{} stage {} δ={}: sofic exceeds amenable + slack", row.kind, row.i, row.delta));
        }
    }
    o.json = to_json(&rep);
    Ok(o)
}

fn variational(r: &Resolved) -> Result<Outcome> {
    let (u, seq, window) = (r.cover()?, r.sofic()?, r.window()?);
    let mut grid = Vec::new();
    for f in r.f_grid()? {
        for delta in r.deltas()? {
            grid.push((f.clone(), delta));
        }
    }
    let rep = check_variational(&r.sys, &u, &r.measures()?, &r.functions()?, &grid, &window, &seq, r.budget())?;
    let mut o = Outcome {
        columns: vec![
            "f",
            "delta",
            "i",
            "d",
            "top_inner",
            "top_outer",
            "best_measure",
            "best_inner",
            "best_outer",
            "gap_outer",
            "holds",
        ],
        notes: vec![rep.note.to_string()],
        ..Default::default()
    };
    for row in &rep.rows {
        o.rows.push(vec![
            grid[row.grid].0.to_string(),
            row.delta.to_string(),
            row.i.to_string(),
            row.d.to_string(),
            cell(&row.top_inner),
            cell(&row.top_outer),
            cell(&row.best_measure),
            cell(&row.best_inner),
            cell(&row.best_outer),
            cell(&row.gap_outer),
            row.holds.to_string(),
        ]);
        if !row.holds {
            o.failures.push(format!("grid {} stage {}: measure trace exceeds topological", row.grid, row.i));
        }
    }
    o.json = to_json(&rep);
    Ok(o)
}

fn tile(r: &Resolved) -> Result<Outcome> {
    let seq = r.sofic()?;
    let shapes = r.shapes()?;
    let p = TileParams {
        eta: r.eta()?,
        tau: r.tau()?,
        good_tolerance: r.good_tolerance(),
    };
    let mut o = Outcome {
        columns: vec!["i", "d", "k", "shape_size", "centers", "covered", "coverage", "guarantee_missed", "conditions"],
        ..Default::default()
    };
    let mut docs = Vec::new();
    for (i, sigma) in seq.iter().enumerate() {
        let t = if r.exact() {
            amenable_exact_tile(sigma, &shapes, &p)?
        } else {
            sofic_quasi_tile(sigma, r.centers(), &shapes, &p)?
        };
        let again = verify_tiling(&t, sigma)?;
        if again != t.record {
            o.failures.push(format!("stage {}: recomputed record differs from stored", i + 1));
        }
        let mut structural = again.clone();
        structural.covers = true;
        if !structural.all_hold(t.exact) {
            o.failures.push(format!("stage {}: tiling conditions fail", i + 1));
        }
        if t.guarantee_missed {
            o.warnings.push(format!(
                "stage {}: coverage {} below 1−τ−η (guarantee_missed)",
                i + 1,
                t.record.coverage
            ));
        }
        for (k, (shape, cs)) in t.shapes.iter().zip(&t.centers).enumerate() {
            let list: Vec<String> = cs.iter().map(|c| c.to_string()).collect();
            o.rows.push(vec![
                (i + 1).to_string(),
                t.d.to_string(),
                (k + 1).to_string(),
                shape.len().to_string(),
                list.join(" "),
                t.record.covered.to_string(),
                t.record.coverage.to_string(),
                t.guarantee_missed.to_string(),
                t.record.all_hold(t.exact).to_string(),
            ]);
        }
        docs.push(json!({"i": i + 1, "tiling": t}));
    }
    o.json = Value::Array(docs);
    Ok(o)
}

fn pairs(r: &Resolved) -> Result<Outcome> {
    let rep = entropy_pair_scan(&r.sys, &r.cylinder_pairs()?, r.threshold(), &r.folner()?, r.budget())?;
    let mut o = Outcome {
        columns: vec!["first", "second", "value", "entropy_pair"],
        notes: vec![format!("threshold: {}", rep.threshold), rep.note.to_string()],
        ..Default::default()
    };
    for row in &rep.rows {
        o.rows.push(vec![
            row.first.clone(),
            row.second.clone(),
            row.value.to_string(),
            row.entropy_pair.to_string(),
        ]);
    }
    o.json = to_json(&rep);
    Ok(o)
}

fn partition_bound(r: &Resolved) -> Result<Outcome> {
    let (p, eta, eps) = (r.p()?, r.eta()?, r.eps()?);
    let mut o = Outcome {
        columns: vec!["lambda", "count", "log_count", "log_bound", "holds"],
        ..Default::default()
    };
    let mut docs = Vec::new();
    for &lambda in r.lambda()? {
        let c = partition_count_bound(lambda, p, eta, eps)?;
        o.rows.push(vec![
            lambda.to_string(),
            c.count.to_string(),
            c.log_count.to_string(),
            c.log_bound.to_string(),
            c.holds.to_string(),
        ]);
        if !c.holds {
            o.warnings.push(format!("|Λ| = {lambda}: count exceeds exp(|Λ|(H(p)+2ε))"));
        }
        docs.push(json!({"lambda": lambda, "result": c}));
    }
    o.json = Value::Array(docs);
    Ok(o)
}
