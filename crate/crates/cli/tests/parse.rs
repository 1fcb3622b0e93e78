use folwerk_cli::workspace::Item;
use folwerk_cli::{parse, parse_window_spec, CliError, EXIT_INPUT};
use folwerk_core::Window;

fn suite(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../suites/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn err(src: &str) -> CliError {
    match parse(src) {
        Ok(_) => panic!("`{src}` parsed"),
        Err(e) => e,
    }
}

#[test]
fn empty_file_is_an_empty_workspace() {
    for src in ["", "# only a comment\n\n"] {
        let ws = parse(src).unwrap();
        assert!(ws.declarations().is_empty());
        assert!(ws.checks.is_empty());
    }
}

#[test]
fn dual_numbers_example_has_six_declarations() {
    let ws = parse(&suite("dual_numbers.fol")).unwrap();
    let names: Vec<&str> = ws.declarations().iter().map(|d| d.name.as_str()).collect();
    assert_eq!(names, ["T", "Z", "W", "Y", "F", "M"]);
    assert!(ws.finite.contains_key("T"));
    assert_eq!(ws.checks.len(), 3);
}

#[test]
fn every_suite_parses() {
    for s in ["derham.fol", "pullback.fol", "weil.fol", "tangent.fol", "fplus.fol", "mates.fol", "broken/corrupted_eps.fol"] {
        parse(&suite(s)).unwrap_or_else(|e| panic!("{s}: {e}"));
    }
}

#[test]
fn duplicate_names_report_both_lines() {
    let e = err("algebra B = Q[x]\n\nalgebra B = Q[y]\n");
    assert!(matches!(&e, CliError::Duplicate { name, first: 1, second: 3 } if name == "B"), "{e}");
    let msg = e.to_string();
    assert!(msg.starts_with("error[duplicate]") && msg.contains("line 1") && msg.contains("line 3"));
    assert_eq!(e.exit_code(), EXIT_INPUT);
}

#[test]
fn errors_carry_positions_and_classes() {
    let cases: [(&str, &str, (usize, usize)); 4] = [
        ("algebra B = Q[x\n", "error[syntax]", (1, 16)),
        ("\ncheck Nope\n", "error[unknown-name]", (2, 7)),
        ("frobnicate X = 1\n", "error[syntax]", (1, 1)),
        (
            "algebra B = Q[x]\nalgebra C = Q[y]\nmap f : B -> C { x -> y }\nfoliation F = final(C)\npullback G = f^* F\n",
            "error[type]",
            (5, 14),
        ),
    ];
    for (src, prefix, (line, col)) in cases {
        let e = err(src);
        let msg = e.to_string();
        assert!(msg.starts_with(&format!("{prefix} {line}:{col}:")), "{msg}");
        assert_eq!(e.exit_code(), EXIT_INPUT);
    }
}

#[test]
fn unknown_references_inside_declarations() {
    let e = err("algebra B = Q[x]\nderham D = DR(C/Q)\n");
    assert!(matches!(e, CliError::UnknownName { line: 2, .. }), "{e}");
}

#[test]
fn window_overrides() {
    let w = parse_window_spec("w=2, d=3", Window::default()).unwrap();
    assert_eq!((w.weight, w.poly_degree), (2, 3));
    let w = parse_window_spec("weight=1", w).unwrap();
    assert_eq!((w.weight, w.poly_degree), (1, 3));
    assert!(parse_window_spec("w=two", Window::default()).is_err());
    assert!(parse_window_spec("q=1", Window::default()).is_err());
    let ws = parse("window w=2, d=5\n").unwrap();
    assert_eq!((ws.window.weight, ws.window.poly_degree), (2, 5));
}

#[test]
fn mixed_blocks_round_trip_through_their_text() {
    let src = "algebra B = Q[x, y]\nmixed G over B {\n  gen u : -1, 1\n  gen v : -2, 1\n  d v -> x*u\n  eps x -> u\n  eps y -> x*u\n}\n";
    let ws = parse(src).unwrap();
    let Some(Item::Mixed(g)) = ws.get("G").map(|d| &d.item) else { panic!("G is not a mixed block") };
    let again = parse(&format!("algebra B = Q[x, y]\n{}", g.to_dsl())).unwrap();
    let Some(Item::Mixed(h)) = again.get("G").map(|d| &d.item) else { panic!("no round trip") };
    assert_eq!(g.to_dsl(), h.to_dsl());
    assert_eq!(g.d_images(), h.d_images());
    assert_eq!(g.eps_images(), h.eps_images());
}

#[test]
fn cotangent_and_tangent_declarations() {
    let ws = parse(&suite("derham.fol")).unwrap();
    assert_eq!(ws.get("LD").unwrap().item.kind(), "cotangent");
    let ws = parse(&suite("tangent.fol")).unwrap();
    let Some(Item::Tangent { points, .. }) = ws.get("TDfin").map(|d| &d.item) else { panic!() };
    assert_eq!(points.len(), 3);
    assert!(parse("algebra Y = Q[y]\nalgebra T = Q[t]/(t^2)\nbasis T = {1, t}\nfoliation F = final(Y/Q)\nmapsch M = Map(T, F)\ntangentat P = M at (1)\n").is_err());
}
