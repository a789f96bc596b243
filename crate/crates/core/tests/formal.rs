use std::collections::BTreeSet;

use n2f_core::formal::*;
use n2f_core::sample::{build_corpus, LiteralRanges};
use n2f_core::scheme::enumerate_schemes;
use proptest::prelude::*;

fn pid(i: u8) -> PrimitiveId {
    PrimitiveId::new(i).unwrap()
}

/// Signature table restated by hand: name, parameter kinds, output.
fn table6() -> Vec<(&'static str, Vec<ParamKind>, OutputType)> {
    use OutputType::*;
    use ParamKind::*;
    vec![
        ("filter_gt", vec![Var(View), AttrLiteral, NumberLiteral], View),
        ("top_k", vec![Var(View), AttrLiteral, KLiteral], View),
        ("filter_gt_c", vec![Var(View), AttrLiteral, ColumnSlot], View),
        ("kth_max", vec![Var(View), AttrLiteral, KLiteral], Value),
        ("sum", vec![Var(View), AttrLiteral], Value),
        ("count", vec![Var(View)], Value),
        ("kth_argmax", vec![Var(View), AttrLiteral, KLiteral], Row),
        ("hop", vec![Var(Row), AttrLiteral], Value),
        ("add", vec![NumberLiteral, NumberLiteral], Value),
        ("add_c", vec![AttrLiteral, NumberLiteral], Column),
    ]
}

#[test]
fn registry_matches_signature_table() {
    let reg = primitive_registry();
    assert_eq!(reg.len(), 10);
    for (i, (spec, (name, params, out))) in reg.iter().zip(table6()).enumerate() {
        assert_eq!(spec.id, pid(i as u8));
        assert_eq!(spec.intuitive_name, name);
        assert_eq!(spec.params, params, "{name}");
        assert_eq!(spec.arity(), params.len());
        assert_eq!(spec.output, out, "{name}");
    }
}

#[test]
fn registry_examples() {
    let reg = primitive_registry();
    assert_eq!(reg[1].id.to_string(), "f1");
    assert_eq!(reg[1].intuitive_name, "top_k");
    assert_eq!(
        reg[1].params,
        vec![ParamKind::Var(OutputType::View), ParamKind::AttrLiteral, ParamKind::KLiteral]
    );
    assert_eq!(reg[1].output, OutputType::View);
    assert!(reg[8].swappable);
    let swappable: Vec<usize> = (0..10).filter(|&i| reg[i].swappable).collect();
    assert_eq!(swappable, vec![8]);
}

#[test]
fn categories() {
    let of = |c: Category| -> Vec<usize> {
        primitive_registry()
            .iter()
            .filter(|s| s.category == c)
            .map(|s| s.id.index())
            .collect()
    };
    assert_eq!(of(Category::Filter), vec![0, 2]);
    assert_eq!(of(Category::MathOp), vec![8, 9]);
    assert_eq!(of(Category::Count), vec![5]);
}

#[test]
fn only_view_slots_take_all() {
    for spec in primitive_registry() {
        for k in &spec.params {
            let takes_all = *k == ParamKind::Var(OutputType::View);
            assert_eq!(takes_all, k.has_default() && k.edge_type() == Some(OutputType::View));
        }
    }
}

#[test]
fn render_examples() {
    let p = Program::new(vec![Expression::new("result", "f5", vec![Arg::All])]);
    assert_eq!(render_program(&p, &NamingScheme::opaque()).unwrap(), "result := f5 (all);");

    let p = Program::new(vec![Expression::new("view_1", "f1", vec![Arg::All, Arg::Attr(7), Arg::Int(3)])]);
    let cross = NamingScheme::cross_mapping();
    assert_eq!(cross.surface(pid(1)), "kth_max");
    assert_eq!(render_program(&p, &cross).unwrap(), "view_1 := kth_max (all, attr_7, 3);");

    let bad = Program::new(vec![Expression::new("result", "f12", vec![Arg::All])]);
    assert!(render_program(&bad, &NamingScheme::opaque()).is_err());
}

#[test]
fn parse_examples() {
    let p = parse_program("view_1 := f0 (all, attr_641, 684);").unwrap();
    assert_eq!(p.program.len(), 1);
    assert_eq!(p.program.expressions[0].lhs, "view_1");
    assert_eq!(
        p.program.expressions[0].args,
        vec![Arg::All, Arg::Attr(641), Arg::Int(684)]
    );
    assert!(p.skipped.is_empty());

    let p = parse_program("Here is the answer:\nresult := f5 (all);").unwrap();
    assert_eq!(p.program.len(), 1);
    assert_eq!(p.skipped.len(), 1);
    assert_eq!(p.skipped[0].text, "Here is the answer:");

    assert!(matches!(parse_program(""), Err(n2f_core::Error::NoProgram { .. })));
    assert!(matches!(parse_program("no code here"), Err(n2f_core::Error::NoProgram { skipped: 1 })));
}

#[test]
fn parse_tolerates_fences_whitespace_and_missing_semicolon() {
    let text = "```\nview_1:=f0(all,attr_1,2);\n  result  :=  f5 ( view_1 )\n```";
    let p = parse_program(text).unwrap();
    assert_eq!(p.program.to_string(), "view_1 := f0 (all, attr_1, 2);\nresult := f5 (view_1);");
    assert_eq!(p.missing_semicolon, vec![1]);
    assert_eq!(p.skipped.len(), 2);
}

#[test]
fn naming_tables_satisfy_their_kind() {
    let intuitive: BTreeSet<&str> = primitive_registry().iter().map(|s| s.intuitive_name).collect();
    let cross = NamingScheme::cross_mapping();
    let anomalous = NamingScheme::anomalous();
    for p in PrimitiveId::all() {
        assert_eq!(NamingScheme::opaque().surface(p), p.to_string());
        assert_ne!(cross.surface(p), p.spec().intuitive_name);
        assert!(intuitive.contains(cross.surface(p)));
        assert!(!intuitive.contains(anomalous.surface(p)));
    }
    assert_eq!(anomalous.surface(pid(1)), "bottom_k");
    for n in [&cross, &anomalous] {
        let distinct: BTreeSet<&String> = n.names().iter().collect();
        assert_eq!(distinct.len(), 10);
    }
}

#[test]
fn naming_validation_rejects_bad_tables() {
    // f0 keeps its own intuitive name.
    let mut names: Vec<String> = DEFAULT_CROSS.map(String::from).to_vec();
    let own = names.iter().position(|n| n == "filter_gt").unwrap();
    names.swap(0, own);
    assert!(NamingScheme::from_names(NamingKind::CrossMapping, names).is_err());

    let mut names: Vec<String> = DEFAULT_ANOMALOUS.map(String::from).to_vec();
    names[2] = "sum".into();
    assert!(NamingScheme::from_names(NamingKind::Anomalous, names).is_err());

    let mut names: Vec<String> = DEFAULT_ANOMALOUS.map(String::from).to_vec();
    names[2] = names[3].clone();
    assert!(NamingScheme::from_names(NamingKind::Anomalous, names).is_err());
}

#[test]
fn apply_naming_examples() {
    let p = Program::new(vec![Expression::new("view_1", "f1", vec![Arg::All, Arg::Attr(5), Arg::Int(3)])]);
    let opaque = NamingScheme::opaque();
    let an = apply_naming(&p, &opaque, &NamingScheme::anomalous()).unwrap();
    assert_eq!(an.expressions[0].callee, "bottom_k");
    assert_eq!(apply_naming(&p, &opaque, &opaque).unwrap(), p);
    let bad = Program::new(vec![Expression::new("x", "nope", vec![Arg::All])]);
    assert!(matches!(
        apply_naming(&bad, &opaque, &opaque),
        Err(n2f_core::Error::UnresolvableName(_))
    ));
}

#[test]
fn cross_mapping_inverse_round_trip() {
    // Opaque -> cross -> (intuitive names read back as ids) recovers the input.
    let cross = NamingScheme::cross_mapping();
    let inverse = cross.inverse_cross().unwrap();
    for p in PrimitiveId::all() {
        // inverse maps the primitive whose intuitive name cross assigned to p
        // back to p's intuitive name.
        let target = primitive_registry()
            .into_iter()
            .find(|s| s.intuitive_name == cross.surface(p))
            .unwrap();
        assert_eq!(inverse.surface(target.id), p.spec().intuitive_name);
    }
    let corpus = build_corpus(&enumerate_schemes(), 0, &LiteralRanges::default()).unwrap();
    let opaque = NamingScheme::opaque();
    for s in corpus.iter().take(50) {
        let there = apply_naming(&s.gold, &opaque, &cross).unwrap();
        let back = apply_naming(&there, &cross, &opaque).unwrap();
        assert_eq!(back, s.gold);
    }
}

#[test]
fn every_gold_program_round_trips() {
    let corpus = build_corpus(&enumerate_schemes(), 0, &LiteralRanges::default()).unwrap();
    for naming in [NamingScheme::opaque(), NamingScheme::anomalous(), NamingScheme::cross_mapping()] {
        for s in &corpus {
            let text = render_program(&s.gold, &naming).unwrap();
            let parsed = parse_program(&text).unwrap();
            assert!(parsed.skipped.is_empty());
            let back = apply_naming(&parsed.program, &naming, &NamingScheme::opaque()).unwrap();
            assert_eq!(back, s.gold, "{}", s.sample_id);
        }
    }
}

fn arb_arg() -> impl Strategy<Value = Arg> {
    prop_oneof![
        Just(Arg::All),
        (1u32..2000).prop_map(Arg::Attr),
        (0u64..100_000).prop_map(Arg::Int),
        ("(view|value|row|col)_[1-9]", Just(())).prop_map(|(v, _)| Arg::Var(v)),
    ]
}

fn arb_program() -> impl Strategy<Value = Program> {
    prop::collection::vec(
        ("[a-z][a-z0-9_]{0,6}", 0u8..10, prop::collection::vec(arb_arg(), 1..5)),
        1..6,
    )
    .prop_map(|v| {
        Program::new(
            v.into_iter()
                .map(|(lhs, p, args)| Expression::new(lhs, format!("f{p}"), args))
                .collect(),
        )
    })
}

proptest! {
    #[test]
    fn render_parse_round_trip(p in arb_program()) {
        let text = render_program(&p, &NamingScheme::opaque()).unwrap();
        prop_assert_eq!(parse_program(&text).unwrap().program, p);
    }

    #[test]
    fn naming_changes_only_callees(p in arb_program(), to in 0usize..3) {
        let to = [NamingScheme::opaque(), NamingScheme::anomalous(), NamingScheme::cross_mapping()][to].clone();
        let q = apply_naming(&p, &NamingScheme::opaque(), &to).unwrap();
        prop_assert_eq!(q.len(), p.len());
        for (a, b) in p.expressions.iter().zip(&q.expressions) {
            prop_assert_eq!(&a.lhs, &b.lhs);
            prop_assert_eq!(&a.args, &b.args);
            let id = PrimitiveId::parse(&a.callee).unwrap();
            prop_assert_eq!(b.callee.as_str(), to.surface(id));
        }
    }

    #[test]
    fn parser_never_panics(s in "\\PC{0,200}") {
        let _ = parse_program(&s);
    }
}
