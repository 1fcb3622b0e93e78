//! Executes `check` commands and renders their reports.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use folwerk_core::cotangent_derham::{cotangent_lci, de_rham, de_rham_cohomology, koszul_check};
use folwerk_core::foliation::{final_comparison, relative_comparison, FoliationPresentation};
use folwerk_core::mate_calculus::{
    check_bc_unit, check_equal, check_paste_associative, check_roundtrip, paste_squares, DEFAULT_BUDGET,
};
use folwerk_core::pushforward::{check_functor_of_points, tangent_at_point, test_algebras};
use folwerk_core::{Error, Result as CoreResult, Window};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult, EXIT_FAIL, EXIT_PASS};
use crate::workspace::{Declaration, FoliationOrigin, Item, MateBlock, MateCommand, MateOp, Workspace};

/// One executed `check`.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub index: usize,
    pub check: String,
    pub kind: String,
    pub inputs: Vec<String>,
    pub window: Window,
    pub passed: bool,
    pub result: Value,
    pub provenance: Vec<String>,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub trace: bool,
    pub parallel: bool,
}

/// Reports plus per-check wall time, kept apart so report bytes stay stable.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub reports: Vec<Report>,
    pub timings: Vec<Duration>,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.reports.iter().all(|r| r.passed) {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }
}

struct Outcome {
    passed: bool,
    inputs: Vec<String>,
    result: Value,
    provenance: Vec<String>,
}

fn value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("reports serialize")
}

/// Runs every `check` in order (or concurrently with `parallel`; output order is unchanged).
pub fn run(ws: &Workspace, opts: &RunOptions) -> CliResult<RunOutput> {
    let one = |i: usize| -> CliResult<(Report, Duration)> {
        let cmd = &ws.checks[i];
        let decl = ws.get(&cmd.name).expect("checks refer to declarations");
        let start = Instant::now();
        let out = check(ws, decl, opts).map_err(|source| CliError::Check { index: i, name: cmd.name.clone(), source })?;
        let report = Report {
            index: i,
            check: cmd.name.clone(),
            kind: decl.item.kind().to_string(),
            inputs: out.inputs,
            window: ws.window,
            passed: out.passed,
            result: out.result,
            provenance: out.provenance,
        };
        Ok((report, start.elapsed()))
    };
    let results: Vec<CliResult<(Report, Duration)>> = if opts.parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..ws.checks.len()).map(|i| s.spawn(move || one(i))).collect();
            handles.into_iter().map(|h| h.join().expect("check thread panicked")).collect()
        })
    } else {
        let mut v = Vec::new();
        for i in 0..ws.checks.len() {
            let r = one(i);
            let stop = r.is_err();
            v.push(r);
            if stop {
                break;
            }
        }
        v
    };
    let mut out = RunOutput { reports: Vec::new(), timings: Vec::new() };
    for r in results {
        let (report, t) = r?;
        out.reports.push(report);
        out.timings.push(t);
    }
    Ok(out)
}

fn check(ws: &Workspace, decl: &Declaration, opts: &RunOptions) -> CoreResult<Outcome> {
    let w = ws.window;
    let budget = ws.budget.unwrap_or(DEFAULT_BUDGET);
    let name = decl.name.clone();
    match &decl.item {
        Item::Algebra(a) => {
            let mut result = json!({
                "generators": a.own_indices().map(|i| a.ring().vars[i].name.clone()).collect::<Vec<_>>(),
                "relations": a.own_relations().iter().map(|r| a.fmt(r)).collect::<Vec<_>>(),
                "smooth": a.smooth,
                "lci": a.lci,
            });
            let mut passed = true;
            if a.has_relations() && !a.own_relations().is_empty() {
                let bound = if a.is_finite_dimensional() { None } else { Some(w.poly_degree) };
                let k = koszul_check(a, bound)?;
                passed &= k.passed;
                result["koszul"] = value(&k);
            }
            if let Some(f) = ws.finite.get(&name) {
                let (ok, v) = finite_report(f)?;
                passed &= ok;
                result["basis"] = v;
            }
            Ok(Outcome { passed, inputs: vec![], result, provenance: vec![] })
        }
        Item::Map(m) => {
            let images: BTreeMap<String, String> = m
                .source
                .own_indices()
                .map(|i| (m.source.ring().vars[i].name.clone(), m.target.fmt(&m.images[i])))
                .collect();
            let mut result = json!({ "images": images });
            let mut passed = true;
            if let Some(f) = ws.finite.get(&name) {
                let (ok, v) = finite_report(f)?;
                passed &= ok;
                result["basis"] = v;
            }
            let inputs = vec![m.source.name.clone(), m.target.name.clone()];
            Ok(Outcome { passed, inputs, result, provenance: vec![] })
        }
        Item::Mixed(gm) => {
            let mixed = gm.verify_mixed(Some(&w))?;
            let qf = gm.quasi_free(w.weight);
            let result = json!({
                "mixed": value(&mixed),
                "first_failure": mixed.first_failure().map(value),
                "quasi_free": value(&qf),
                "dsl": gm.to_dsl(),
            });
            Ok(Outcome { passed: mixed.passed, inputs: vec![gm.owner.name.clone()], result, provenance: gm.provenance.clone() })
        }
        Item::Cotangent(model) => {
            let b = &model.owner;
            let c = &model.complex;
            let r = b.own_relations().len();
            let n = b.own_indices().len();
            let mut expected: BTreeMap<i32, usize> = [(0, n)].into();
            if r > 0 {
                expected.insert(-1, r);
            }
            let ranks: BTreeMap<i32, usize> = c.ranks().into_iter().filter(|&(_, k)| k > 0).collect();
            let mut passed = ranks == expected;
            let differentials: BTreeMap<i32, Vec<Vec<String>>> =
                c.degrees().into_iter().filter(|&k| c.rank(k + 1) > 0 && c.rank(k) > 0).map(|k| (k, c.diff(k).render(b))).collect();
            let classes: BTreeMap<String, Vec<String>> =
                model.classes.iter().map(|(g, col)| (g.clone(), col.iter().map(|p| b.fmt(p)).collect())).collect();
            let mut result = json!({
                "ranks": value(&ranks),
                "expected_ranks": value(&expected),
                "differentials": value(&differentials),
                "classes": value(&classes),
            });
            if b.is_finite_dimensional() {
                let h: BTreeMap<i32, usize> = c.homology_all(None)?.into_iter().map(|(k, h)| (k, h.dimension)).collect();
                result["homology"] = value(&h);
            }
            if r == 0 {
                let lci = cotangent_lci(b, None)?;
                let agrees = lci.complex.same_as(c) && c.degrees().into_iter().all(|k| lci.complex.diff(k) == c.diff(k));
                passed &= agrees;
                result["agrees_with_lci"] = json!(agrees);
            }
            let provenance = if r > 0 { vec!["two-term conormal complex".to_string()] } else { vec![] };
            Ok(Outcome { passed, inputs: vec![b.name.clone()], result, provenance })
        }
        Item::Foliation { foliation, .. } => verify_foliation(foliation, &w, vec![foliation.owner.name.clone()]),
        Item::DeRham { algebra, weight, degree } => {
            let window = Window {
                weight: weight.unwrap_or(w.weight),
                poly_degree: degree.unwrap_or(w.poly_degree),
                ..w
            };
            let dr = de_rham(algebra, window.weight)?;
            let mixed = dr.gm.verify_mixed(Some(&window))?;
            let coh = de_rham_cohomology(&dr, Some(&window))?;
            let mut passed = mixed.passed;
            let mut result = json!({
                "mixed": value(&mixed),
                "first_failure": mixed.first_failure().map(value),
                "cohomology": value(&coh.dims),
                "window": value(&window),
            });
            if algebra.base.is_none() && !algebra.has_relations() {
                let expected: BTreeMap<i32, usize> = [(0, 1)].into();
                let nonzero: BTreeMap<i32, usize> = coh.dims.iter().filter(|(_, &d)| d > 0).map(|(&k, &d)| (k, d)).collect();
                let ok = nonzero == expected;
                passed &= ok;
                result["poincare"] = json!({ "expected": value(&expected), "matches": ok });
            }
            Ok(Outcome { passed, inputs: vec![algebra.name.clone()], result, provenance: coh.provenance })
        }
        Item::Pullback { map, source, origin, foliation } => {
            let Some(Item::Map(f)) = ws.get(map).map(|d| &d.item) else {
                unreachable!("pullbacks refer to maps")
            };
            let inputs = vec![map.clone(), source.clone()];
            let mut provenance = foliation.provenance.clone();
            let mut out = verify_foliation(foliation, &w, inputs)?;
            match origin {
                FoliationOrigin::Final => {
                    let cmp = final_comparison(foliation, f)?;
                    let mut weights = BTreeMap::new();
                    for n in 0..=w.weight.min(2) {
                        weights.insert(n, cmp.weight_chain_map(n)?.is_quasi_isomorphism(Some(w.poly_degree))?);
                    }
                    let ok = weights.values().all(|&b| b);
                    out.passed &= ok;
                    out.result["final_comparison"] = json!({ "quasi_isomorphic": value(&weights), "passed": ok });
                    provenance.push(format!("compared with DR({})", f.target.name));
                }
                FoliationOrigin::Zero => {
                    let cmp = relative_comparison(foliation, f)?;
                    let ok = cmp.is_quasi_isomorphism(Some(w.poly_degree))?;
                    out.passed &= ok;
                    out.result["relative_comparison"] =
                        json!({ "quasi_isomorphic": ok, "target_ranks": value(&cmp.target.ranks()) });
                    provenance.push(format!("compared with the relative cotangent of {} over {}", f.target.name, f.source.name));
                }
                FoliationOrigin::Mixed => {}
            }
            out.provenance = provenance;
            Ok(out)
        }
        Item::Weil { algebra, map, weil } => {
            let mut points = Vec::new();
            let mut passed = true;
            for t in test_algebras() {
                let r = check_functor_of_points(weil, &t)?;
                passed &= r.passed;
                points.push(value(&r));
            }
            let result = json!({ "restriction": value(&weil.report()), "points": points });
            Ok(Outcome { passed, inputs: vec![algebra.clone(), map.clone()], result, provenance: vec![] })
        }
        Item::PushedFoliation { map, source, pushed } => {
            let mut out = verify_foliation(&pushed.foliation, &w, vec![map.clone(), source.clone()])?;
            out.result["restriction"] = value(&pushed.weil.report());
            Ok(out)
        }
        Item::MappingScheme { map, source, mapping } => {
            let mut out = verify_foliation(&mapping.foliation, &w, vec![map.clone(), source.clone()])?;
            out.result["restriction"] = value(&mapping.weil.report());
            Ok(out)
        }
        Item::Tangent { scheme, points } => {
            let Some(Item::MappingScheme { mapping, .. }) = ws.get(scheme).map(|d| &d.item) else {
                unreachable!("tangents refer to mapping schemes")
            };
            let mut rows = Vec::new();
            let mut passed = true;
            for p in points {
                let t = tangent_at_point(mapping, p)?;
                passed &= t.passed;
                rows.push(value(&t));
            }
            let provenance = mapping.foliation.provenance.clone();
            Ok(Outcome { passed, inputs: vec![scheme.clone()], result: json!({ "points": rows }), provenance })
        }
        Item::FPlus { map, shape, complex } => {
            let fm = &ws.finite[map].map;
            let pushed = fm.f_plus(complex)?;
            let n = fm.rank();
            let expected: BTreeMap<i32, usize> = complex.ranks().into_iter().map(|(k, r)| (k, r * n)).collect();
            let ranks = pushed.ranks();
            let homology: BTreeMap<i32, usize> = if fm.source.is_finite_dimensional() {
                pushed.homology_all(None)?.into_iter().map(|(k, h)| (k, h.dimension)).collect()
            } else {
                pushed.homology_all(Some(w.poly_degree))?.into_iter().map(|(k, h)| (k, h.dimension)).collect()
            };
            let differentials: BTreeMap<i32, Vec<Vec<String>>> = pushed
                .degrees()
                .into_iter()
                .filter(|&k| pushed.rank(k + 1) > 0)
                .map(|k| (k, pushed.diff(k).render(pushed.owner())))
                .collect();
            let passed = ranks == expected;
            let result = json!({
                "argument": shape,
                "fibre_rank": n,
                "ranks": value(&ranks),
                "expected_ranks": value(&expected),
                "homology": value(&homology),
                "differentials": value(&differentials),
            });
            Ok(Outcome { passed, inputs: vec![map.clone()], result, provenance: vec!["f₊ = dual ∘ restriction ∘ dual".into()] })
        }
        Item::Mates(block) => {
            let mut passed = true;
            let mut rows = Vec::new();
            for cmd in &block.commands {
                let (ok, v) = mate_command(block, cmd, budget, opts.trace)?;
                passed &= ok;
                rows.push(json!({ "check": cmd.name, "passed": ok, "result": v }));
            }
            Ok(Outcome { passed, inputs: vec![], result: json!({ "checks": rows }), provenance: vec![] })
        }
        Item::MateCheck { block, index } => {
            let Some(Item::Mates(b)) = ws.get(block).map(|d| &d.item) else {
                unreachable!("mate checks refer to their block")
            };
            let (passed, result) = mate_command(b, &b.commands[*index], budget, opts.trace)?;
            Ok(Outcome { passed, inputs: vec![block.clone()], result, provenance: vec![] })
        }
    }
}

fn verify_foliation(f: &FoliationPresentation, w: &Window, inputs: Vec<String>) -> CoreResult<Outcome> {
    let r = f.verify(w)?;
    let result = json!({
        "report": value(&r),
        "first_failure": r.mixed.first_failure().map(value),
        "cotangent_ranks": value(&f.cotangent.ranks()),
    });
    Ok(Outcome { passed: r.passed, inputs, result, provenance: f.provenance.clone() })
}

fn finite_report(f: &crate::workspace::Finite) -> CoreResult<(bool, Value)> {
    let report = f.map.report();
    let mut passed = report.passed;
    let t = &f.map.target;
    let mut asserted = Vec::new();
    for (lhs, rhs) in &f.asserted {
        let (l, r) = (t.reduce(&t.parse(lhs)?), t.reduce(&t.parse(rhs)?));
        let ok = l == r;
        passed &= ok;
        asserted.push(json!({ "lhs": lhs, "rhs": rhs, "normal_form": t.fmt(&l), "holds": ok }));
    }
    Ok((passed, json!({ "report": value(&report), "asserted": asserted })))
}

fn mate_command(b: &MateBlock, cmd: &MateCommand, budget: usize, trace: bool) -> CoreResult<(bool, Value)> {
    let sq = |s: &String| b.squares.get(s).ok_or_else(|| Error::InvalidPresentation(format!("unknown square `{s}`")));
    Ok(match &cmd.op {
        MateOp::Roundtrip(s) => {
            let r = check_roundtrip(&b.ctx, sq(s)?, budget, trace)?;
            (r.passed, value(&r))
        }
        MateOp::BcUnit { square, psi } => {
            let r = check_bc_unit(&b.ctx, sq(square)?, psi, budget, trace)?;
            (r.passed, value(&r))
        }
        MateOp::Paste { top, bottom } => {
            let p = paste_squares(&b.ctx, sq(top)?, sq(bottom)?, budget, trace)?;
            let v = json!({ "exterior_phi": p.square.phi.to_string(), "psi": p.psi.to_string(), "check": value(&p.check) });
            (p.check.passed, v)
        }
        MateOp::Assoc(x, y, z) => {
            let r = check_paste_associative(&b.ctx, sq(x)?, sq(y)?, sq(z)?, budget)?;
            (r.passed, value(&r))
        }
        MateOp::Equal(l, r) => {
            let r = check_equal(&b.ctx, &cmd.name, l, r, budget, trace)?;
            (r.passed, value(&r))
        }
    })
}

/// Report file name for check `index`.
pub fn report_file_name(r: &Report) -> String {
    let safe: String =
        r.check.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect();
    format!("{:03}_{safe}.json", r.index)
}

pub fn render(r: &Report) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("reports serialize");
    s.push('\n');
    s
}

fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let tmp = path.with_extension("json.tmp");
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)?;
    f.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

/// Writes one file per report and a `run.json` sidecar with the input name and timings.
pub fn write_reports(dir: &Path, input: &str, out: &RunOutput) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    for r in &out.reports {
        write_atomic(&dir.join(report_file_name(r)), &render(r))?;
    }
    let meta = json!({
        "input": input,
        "version": env!("CARGO_PKG_VERSION"),
        "checks": out.reports.iter().zip(&out.timings).map(|(r, t)| json!({
            "file": report_file_name(r),
            "passed": r.passed,
            "millis": t.as_secs_f64() * 1e3,
        })).collect::<Vec<_>>(),
    });
    let mut s = serde_json::to_string_pretty(&meta).expect("sidecar serializes");
    s.push('\n');
    write_atomic(&dir.join("run.json"), &s)
}
