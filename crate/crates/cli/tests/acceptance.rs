use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use folwerk_cli::{parse, run, write_reports, RunOptions};
use folwerk_core::cotangent_derham::{de_rham, de_rham_cohomology};
use folwerk_core::exact_core::{q, qf, AlgebraMap, AlgebraPresentation, PerfectComplex, PolyMatrix, Poly};
use folwerk_core::foliation::{final_comparison, pullback_foliation, relative_comparison, FoliationPresentation};
use folwerk_core::graded_mixed::{pushforward_gm, GmMap};
use folwerk_core::mate_calculus::{
    check_bc_unit, check_roundtrip, free_square, free_tower, mate_left, paste_squares, MateTerm, DEFAULT_BUDGET,
};
use folwerk_core::pushforward::{
    check_functor_of_points, mapping_foliation, tangent_at_point, test_algebras, weil_restrict, FiniteFreeMap,
    PointCount,
};
use folwerk_core::Window;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

const VARS: [&str; 3] = ["x", "y", "z"];

fn poly(name: &str, n: usize) -> Arc<AlgebraPresentation> {
    AlgebraPresentation::polynomial(name, &VARS[..n]).unwrap()
}

fn inclusion(from: &Arc<AlgebraPresentation>, to: &Arc<AlgebraPresentation>) -> AlgebraMap {
    let pairs: Vec<(&str, &str)> = from.own_indices().map(|i| (VARS[i], VARS[i])).collect();
    AlgebraMap::from_assignments(from.clone(), to.clone(), &pairs).unwrap()
}

fn finite(name: &str, var: &str, rel: &str, n: usize) -> FiniteFreeMap {
    let b = AlgebraPresentation::quotient(name, &[var], &[rel]).unwrap();
    let basis: Vec<Poly> = (0..n).map(|k| b.parse(&format!("{var}^{k}")).unwrap()).collect();
    FiniteFreeMap::new(b, &basis).unwrap()
}

fn acyclic(c: &PerfectComplex, bound: Option<u32>) -> Result<bool, String> {
    Ok(c.homology_all(bound).map_err(e)?.values().all(|h| h.dimension == 0))
}

fn mixed_identities() -> Outcome {
    let window = Window::new(3, 4);
    let algebras = [
        poly("Q[x]", 1),
        poly("Q[x,y]", 2),
        poly("Q[x,y,z]", 3),
        AlgebraPresentation::quotient("Q[x]/(x^2)", &["x"], &["x^2"]).unwrap(),
    ];
    let mut checked = 0;
    for b in &algebras {
        let dr = de_rham(b, window.weight).map_err(e)?;
        let r = dr.gm.verify_mixed(Some(&window)).map_err(e)?;
        ensure(r.passed, format!("{}: {:?}", b.name, r.first_failure()))?;
        checked += r.monomials;
    }
    Ok(format!("4 algebras, {checked} monomials"))
}

fn poincare_lemma() -> Outcome {
    for n in 1..=3 {
        let b = poly("B", n);
        let dr = de_rham(&b, 3).map_err(e)?;
        for v in &VARS[..n] {
            let dv = dr.gm.var(&format!("d{v}")).map_err(e)?;
            for k in 1..=4i64 {
                let lhs = dr.gm.eps(&dr.gm.parse(&format!("{v}^{k}")).map_err(e)?);
                let rhs = dr.gm.mul(&dr.gm.parse(&format!("{k}*{v}^{}", k - 1)).map_err(e)?, &dv);
                ensure(lhs == rhs, format!("ε({v}^{k}) = {}", dr.gm.fmt(&lhs)))?;
            }
        }
        let coh = de_rham_cohomology(&dr, Some(&Window::new(3, 4))).map_err(e)?;
        let nonzero: BTreeMap<i32, usize> = coh.dims.iter().filter(|(_, &d)| d > 0).map(|(&k, &d)| (k, d)).collect();
        ensure(nonzero == BTreeMap::from([(0, 1)]), format!("n = {n}: {nonzero:?}"))?;
    }
    Ok("n = 1, 2, 3".into())
}

fn pullback_formula() -> Outcome {
    let (b1, b2, b3) = (poly("B1", 1), poly("B2", 2), poly("B3", 3));
    let maps = [inclusion(&b1, &b2), inclusion(&b2, &b3), inclusion(&b1, &b3)];
    for f in &maps {
        let fin = pullback_foliation(&FoliationPresentation::final_foliation(&f.source).map_err(e)?, f).map_err(e)?;
        let cmp = final_comparison(&fin, f).map_err(e)?;
        for w in 0..=2 {
            let cone = cmp.weight_chain_map(w).map_err(e)?.cone().map_err(e)?;
            ensure(acyclic(&cone, Some(4))?, format!("final along {} → {}, weight {w}", f.source.name, f.target.name))?;
        }
        let zero = pullback_foliation(&FoliationPresentation::zero_foliation(&f.source).map_err(e)?, f).map_err(e)?;
        let cone = relative_comparison(&zero, f).map_err(e)?.cone().map_err(e)?;
        ensure(acyclic(&cone, Some(4))?, format!("zero along {} → {}", f.source.name, f.target.name))?;
    }
    Ok("3 inclusions, weights 0..=2".into())
}

fn functor_of_points() -> Outcome {
    let f = finite("D", "t", "t^2", 2);
    let over = |gens: &[&str], rels: &[&str]| {
        let mut b = AlgebraPresentation::builder("C").base(f.target.clone()).generators(gens);
        for r in rels {
            b = b.relation(r);
        }
        Arc::new(b.build().unwrap())
    };
    let cases = [
        ("affine line", over(&["z"], &[]), None),
        ("z^2 - t", over(&["z"], &["z^2 - t"]), Some(0)),
        ("Z = X", over(&[], &[]), Some(1)),
    ];
    let mut n = 0;
    for (what, c, count) in cases {
        let w = weil_restrict(&c, &f).map_err(e)?;
        for t in test_algebras() {
            let r = check_functor_of_points(&w, &t).map_err(e)?;
            ensure(r.test_dim <= 4, format!("{} has dimension {}", t.name, r.test_dim))?;
            ensure(r.passed && r.restricted_points == r.original_points, format!("{what} over {}: {r:?}", t.name))?;
            if let Some(k) = count {
                ensure(r.restricted_points == PointCount::Finite { count: k }, format!("{what} over {}", t.name))?;
            }
            n += 1;
        }
    }
    Ok(format!("{n} restriction/test-algebra pairs"))
}

fn tangent_formula() -> Outcome {
    let y = poly("Y", 1);
    let fin = FoliationPresentation::final_foliation(&y).map_err(e)?;
    let zero = FoliationPresentation::zero_foliation(&y).map_err(e)?;
    let points = [[q(0), q(0)], [q(1), q(2)], [qf(-1, 2), q(3)]];
    // rank of multiplication by 2t on ℚ[t]/(t²) is 1; the split algebra is étale
    let cases = [
        (finite("D", "t", "t^2", 2), &fin, BTreeMap::from([(0, 3), (1, 1)])),
        (finite("D", "t", "t^2", 2), &zero, BTreeMap::from([(0, 1), (1, 1)])),
        (finite("E", "e", "e^2 - e", 2), &fin, BTreeMap::from([(0, 2)])),
        (finite("E", "e", "e^2 - e", 2), &zero, BTreeMap::new()),
    ];
    for (x, fol, oracle) in cases {
        let m = mapping_foliation(&x, fol).map_err(e)?;
        for p in &points {
            let r = tangent_at_point(&m, p).map_err(e)?;
            ensure(r.passed && r.lhs == r.rhs && r.rhs == oracle, format!("{} with {}: {r:?}", x.target.name, fol.name))?;
        }
    }
    Ok("2 bases × 2 foliations × 3 points".into())
}

fn f_plus_law() -> Outcome {
    for n in 1..=4 {
        let f = finite(&format!("T{n}"), "t", &format!("t^{n}"), n);
        for r in 1..=4 {
            let labels = (0..r).map(|i| format!("e{i}")).collect();
            let out = f.f_plus(&PerfectComplex::free(f.target.clone(), 0, labels).map_err(e)?).map_err(e)?;
            ensure(out.ranks() == BTreeMap::from([(0, r * n)]), format!("r = {r}, n = {n}: {:?}", out.ranks()))?;
        }
    }
    let f = finite("D", "t", "t^2", 2);
    let b = f.target.clone();
    let e2 = PerfectComplex::new(
        b.clone(),
        vec![(-1, vec!["u".into()]), (0, vec!["v".into()])],
        vec![(-1, PolyMatrix::parse(&b, &[&["t"]]).map_err(e)?)],
    )
    .map_err(e)?;
    let out = f.f_plus(&e2).map_err(e)?;
    // t on {1, t} is [[0, 0], [1, 0]]: rank 1, so both homology groups have dimension 2 - 1
    let h: BTreeMap<i32, usize> = out.homology_all(None).map_err(e)?.into_iter().map(|(k, h)| (k, h.dimension)).collect();
    ensure(h == BTreeMap::from([(-1, 1), (0, 1)]), format!("two-term example: {h:?}"))?;
    Ok("16 rank pairs, 2×2 example".into())
}

fn mate_calculus() -> Outcome {
    let (mut ctx, sq) = free_square().map_err(e)?;
    ensure(check_roundtrip(&ctx, &sq, DEFAULT_BUDGET, false).map_err(e)?.passed, "round trip on S")?;
    ctx.define("psi", mate_left(&ctx, &sq, &sq.phi).map_err(e)?).map_err(e)?;
    let r = check_bc_unit(&ctx, &sq, &MateTerm::named("psi"), DEFAULT_BUDGET, true).map_err(e)?;
    ensure(r.passed, "bc_unit")?;
    let rules: Vec<&str> = r.counit.lhs_trace.iter().chain(&r.unit.lhs_trace).map(|s| s.rule.as_str()).collect();
    let triangles = rules.iter().filter(|s| **s == "triangle-identity").count();
    let interchanges = rules.iter().filter(|s| **s == "interchange").count();
    ensure(triangles == 2 && interchanges >= 2, format!("trace rules {rules:?}"))?;
    let (tctx, squares) = free_tower(3).map_err(e)?;
    for s in &squares {
        ensure(check_roundtrip(&tctx, s, DEFAULT_BUDGET, false).map_err(e)?.passed, format!("round trip on {}", s.name))?;
    }
    let p = paste_squares(&tctx, &squares[0], &squares[1], DEFAULT_BUDGET, false).map_err(e)?;
    ensure(p.check.passed, "mate of Φ against Ψ")?;
    Ok(format!("{triangles} triangle identities, {interchanges} interchanges"))
}

/// `DR(f) : DR(B) → DR(B')`, `x ↦ f(x)`, `dx ↦ ε(f(x))`.
fn dr_map(f: &AlgebraMap) -> Result<GmMap, String> {
    let src = de_rham(&f.source, 3).map_err(e)?.gm;
    let tgt = de_rham(&f.target, 3).map_err(e)?.gm;
    let n = tgt.nvars();
    let base: Vec<Poly> = f.images.iter().map(|p| p.padded(n)).collect();
    let mut images = base.clone();
    for x in f.source.own_indices() {
        images.push(tgt.eps(&base[x]));
    }
    GmMap::new(src, tgt, images).map_err(e)
}

fn quasi_free_preservation() -> Outcome {
    let (b1, b2) = (poly("B1", 1), poly("B2", 2));
    let g = dr_map(&inclusion(&b1, &b2))?;
    let mut rows = 0;
    for fol in [
        FoliationPresentation::final_foliation(&b2).map_err(e)?,
        FoliationPresentation::zero_foliation(&b2).map_err(e)?,
    ] {
        ensure(fol.gm.quasi_free(3).passed, format!("{} is not quasi-free", fol.name))?;
        let pushed = pushforward_gm(&fol.gm, &g).map_err(e)?;
        let qf = pushed.quasi_free(3);
        ensure(qf.passed && qf.rows.iter().all(|r| r.rank == r.sym_rank), format!("{}: {qf:?}", fol.name))?;
        rows += qf.rows.len();
    }
    Ok(format!("{rows} weight rows"))
}

fn determinism() -> Outcome {
    let suites = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../suites");
    let mut names: Vec<_> = fs::read_dir(&suites)
        .map_err(e)?
        .map(|d| d.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "fol"))
        .collect();
    names.sort();
    let dirs = [tempfile::tempdir().map_err(e)?, tempfile::tempdir().map_err(e)?];
    let mut files = 0;
    for path in &names {
        let src = fs::read_to_string(path).map_err(e)?;
        let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
        for d in &dirs {
            let ws = parse(&src).map_err(e)?;
            let out = run(&ws, &RunOptions { trace: true, parallel: false }).map_err(e)?;
            write_reports(&d.path().join(&stem), &path.display().to_string(), &out).map_err(e)?;
        }
        let read = |d: &Path| -> Result<BTreeMap<String, Vec<u8>>, String> {
            let mut m = BTreeMap::new();
            for f in fs::read_dir(d.join(&stem)).map_err(e)? {
                let p = f.map_err(e)?.path();
                if p.file_name().unwrap() != "run.json" {
                    m.insert(p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).map_err(e)?);
                }
            }
            Ok(m)
        };
        let (a, b) = (read(dirs[0].path())?, read(dirs[1].path())?);
        ensure(a == b, format!("{stem}: reports differ"))?;
        files += a.len();
    }
    Ok(format!("{} suites, {files} reports byte-identical", names.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Option<u64>); 9] = [
        ("mixed-structure identities", mixed_identities, Some(10)),
        ("algebraic Poincaré lemma", poincare_lemma, Some(10)),
        ("foliation pull-back formula", pullback_formula, Some(10)),
        ("Weil restriction functor of points", functor_of_points, Some(30)),
        ("tangent formula", tangent_formula, Some(10)),
        ("f₊ dimension law", f_plus_law, Some(5)),
        ("mate calculus", mate_calculus, Some(5)),
        ("quasi-free preservation", quasi_free_preservation, Some(5)),
        ("determinism", determinism, None),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let over = limit.is_some_and(|s| took > Duration::from_secs(s));
        let budget = limit.map_or(String::new(), |s| format!(", limit {s} s"));
        let line = match (&outcome, over) {
            (Ok(detail), false) => format!("PASS  criterion {} {name}: {detail} [{:.3} s{budget}]", i + 1, took.as_secs_f64()),
            (Ok(detail), true) => format!("FAIL  criterion {} {name}: {detail}, over time [{:.3} s{budget}]", i + 1, took.as_secs_f64()),
            (Err(why), _) => format!("FAIL  criterion {} {name}: {why} [{:.3} s{budget}]", i + 1, took.as_secs_f64()),
        };
        if outcome.is_err() || over {
            failed += 1;
        }
        println!("{line}");
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
