use std::collections::BTreeMap;

use n2f_core::metrics::*;
use n2f_core::Error;
use proptest::prelude::*;

const TOTAL: u64 = 323;

/// Hundredths of `100 * c / t`, half-up, by integer arithmetic.
fn oracle_hundredths(c: u64, t: u64) -> i64 {
    ((20_000 * c + t) / (2 * t)) as i64
}

/// `"+1.86"`, `"-0.62"`, `"0"` to hundredths.
fn parse_hundredths(s: &str) -> i64 {
    let neg = s.starts_with('-');
    let body = s.trim_start_matches(['+', '-']);
    let (int, frac) = body.split_once('.').unwrap_or((body, "0"));
    let frac = format!("{frac:0<2}");
    let h = int.parse::<i64>().unwrap() * 100 + frac[..2].parse::<i64>().unwrap();
    if neg {
        -h
    } else {
        h
    }
}

/// The unique count out of 323 that prints as `value`.
fn invert(value: &str) -> u64 {
    let h = parse_hundredths(value);
    let hits: Vec<u64> = (0..=TOTAL).filter(|&c| oracle_hundredths(c, TOTAL) == h).collect();
    assert_eq!(hits.len(), 1, "{value} has counts {hits:?}");
    hits[0]
}

fn run(mode: Mode, setting: &str, correct: u64) -> RunSummary {
    RunSummary::new(format!("{}-{setting}", mode.as_str()), mode, setting, correct, TOTAL)
}

/// Base rows: model, P_dc, P_c, D_c, D_d.
const BASE: [(&str, &str, &str, &str, &str); 5] = [
    ("GPT-4o", "81.42", "94.74", "5.26", "13.31"),
    ("Claude-3.5", "91.02", "98.76", "1.24", "7.74"),
    ("DeepSeek-2.5", "68.73", "86.69", "13.31", "17.96"),
    ("Mistral-large", "76.78", "95.98", "4.02", "19.20"),
    ("Llama-3.1", "74.92", "90.71", "9.29", "15.79"),
];

/// Setting rows in base-row model order: Ps_dc, Ps_c, delta_c, delta_d.
const SETTINGS: [(&str, [(&str, &str, &str, &str); 5]); 4] = [
    (
        "gap0",
        [
            ("86.69", "96.59", "+1.86", "+3.41"),
            ("94.43", "99.38", "+0.62", "+2.79"),
            ("76.16", "93.19", "+6.50", "+0.93"),
            ("83.28", "98.45", "+2.48", "+4.02"),
            ("83.59", "94.74", "+4.02", "+4.64"),
        ],
    ),
    (
        "gap100",
        [
            ("79.26", "93.19", "-1.55", "-0.62"),
            ("89.78", "98.14", "-0.62", "-0.62"),
            ("63.47", "84.52", "-2.17", "-3.10"),
            ("76.47", "95.98", "0", "-0.31"),
            ("71.83", "87.62", "-3.10", "0"),
        ],
    ),
    (
        "anomalous",
        [
            ("52.94", "87.00", "-7.74", "-20.74"),
            ("57.28", "95.36", "-3.41", "-30.34"),
            ("41.80", "80.50", "-6.19", "-20.74"),
            ("13.93", "68.11", "-27.86", "-34.98"),
            ("45.82", "90.09", "-0.62", "-28.48"),
        ],
    ),
    (
        "cross",
        [
            ("44.27", "84.52", "-10.22", "-26.93"),
            ("53.56", "92.57", "-6.19", "-31.27"),
            ("33.13", "72.45", "-14.24", "-21.36"),
            ("26.63", "73.99", "-21.98", "-28.17"),
            ("35.29", "75.54", "-15.17", "-24.46"),
        ],
    ),
];

#[test]
fn accuracy_examples() {
    assert_eq!(accuracy(&run(Mode::Dc, "base", 263)).unwrap().to_string(), "81.42");
    assert_eq!(accuracy(&run(Mode::C, "base", 306)).unwrap().to_string(), "94.74");
    assert_eq!(accuracy(&run(Mode::C, "base", 323)).unwrap().to_string(), "100.00");
    assert!(matches!(
        accuracy(&RunSummary::new("x", Mode::C, "base", 0, 0)),
        Err(Error::UndefinedMetric(_))
    ));
}

#[test]
fn base_rows_reproduce_from_counts() {
    for (model, p_dc, p_c, d_c, d_d) in BASE {
        let (dc, c) = (invert(p_dc), invert(p_c));
        let (got_dc, got_dd) = decouple(&run(Mode::C, "base", c), &run(Mode::Dc, "base", dc)).unwrap();
        assert_eq!(got_dc.to_string(), d_c, "{model} D_c");
        assert_eq!(got_dd.to_string(), d_d, "{model} D_d");
    }
}

#[test]
fn rounded_operands_would_differ() {
    // 94.74 - 81.42 on printed values is 13.32; on counts it is 13.31.
    let (_, dd) = decouple(&run(Mode::C, "base", 306), &run(Mode::Dc, "base", 263)).unwrap();
    assert_eq!(parse_hundredths("94.74") - parse_hundredths("81.42"), 1332);
    assert_eq!(dd.hundredths(), 1331);
}

#[test]
fn setting_rows_reproduce_from_counts() {
    let mut mismatches = Vec::new();
    for (setting, rows) in SETTINGS {
        for (i, (ps_dc, ps_c, d_c, d_d)) in rows.into_iter().enumerate() {
            let (model, p_dc, p_c, _, _) = BASE[i];
            let (gc, gd) = setting_delta(
                &run(Mode::C, "base", invert(p_c)),
                &run(Mode::Dc, "base", invert(p_dc)),
                &run(Mode::C, setting, invert(ps_c)),
                &run(Mode::Dc, setting, invert(ps_dc)),
            )
            .unwrap();
            if gc.hundredths() != parse_hundredths(d_c) || gd.hundredths() != parse_hundredths(d_d) {
                mismatches.push(format!("{setting} {model}: {} {} vs {d_c} {d_d}", gc.signed(), gd.signed()));
            }
        }
    }
    assert!(mismatches.is_empty(), "{mismatches:#?}");
}

#[test]
fn gpt_gap_deltas() {
    let base_c = run(Mode::C, "base", 306);
    let base_dc = run(Mode::Dc, "base", 263);
    let (c, d) = setting_delta(&base_c, &base_dc, &run(Mode::C, "gap0", 312), &run(Mode::Dc, "gap0", 280)).unwrap();
    assert_eq!((c.signed().as_str(), d.signed().as_str()), ("+1.86", "+3.41"));
    let (c, d) = setting_delta(&base_c, &base_dc, &base_c, &base_dc).unwrap();
    assert_eq!((c.signed().as_str(), d.signed().as_str()), ("0.00", "0.00"));
}

#[test]
fn mismatched_runs_are_rejected() {
    let c = run(Mode::C, "base", 10);
    let short = RunSummary::new("dc", Mode::Dc, "base", 10, 300);
    assert!(matches!(decouple(&c, &short), Err(Error::IncompatibleRuns(_))));
    assert!(matches!(decouple(&short, &c), Err(Error::IncompatibleRuns(_))));
    let dup = [run(Mode::C, "base", 1), run(Mode::C, "base", 2)];
    assert!(build_report(&dup, BTreeMap::new()).is_err());
}

#[test]
fn report_shapes() {
    let empty = build_report(&[], BTreeMap::new()).unwrap();
    assert!(empty.base.is_none() && empty.settings.is_empty());
    let text = render_text(&empty);
    assert!(text.contains("P_dc") && text.contains("Ps_dc"));

    let runs = [
        run(Mode::C, "base", 306),
        run(Mode::Dc, "base", 263),
        run(Mode::C, "gap0", 312),
        run(Mode::Dc, "gap0", 280),
    ];
    let r = build_report(&runs, BTreeMap::from([("seed".to_string(), "0".to_string())])).unwrap();
    let b = r.base.as_ref().unwrap();
    assert_eq!((b.p_dc.as_str(), b.p_c.as_str(), b.d_c.as_str(), b.d_d.as_str()), ("81.42", "94.74", "5.26", "13.31"));
    assert_eq!((b.correct_dc, b.correct_c, b.total), (263, 306, 323));
    assert_eq!(r.settings.len(), 1);
    assert_eq!(r.settings[0].delta_c, "+1.86");
    assert_eq!(r.settings[0].delta_d, "+3.41");
    let text = render_text(&r);
    assert!(text.contains("13.31") && text.contains("+3.41") && text.contains("# seed: 0"));
    let json = serde_json::to_string(&r).unwrap();
    assert_eq!(serde_json::from_str::<Report>(&json).unwrap(), r);
}

proptest! {
    #[test]
    fn identities_hold_on_counts(t in 1u64..2000, a in 0u64..2000, b in 0u64..2000, c in 0u64..2000, d in 0u64..2000) {
        let (bc, bdc, sc, sdc) = (a % (t + 1), b % (t + 1), c % (t + 1), d % (t + 1));
        let mk = |m, s: &str, k| RunSummary::new("r", m, s, k, t);
        let (d_c, d_d) = decouple(&mk(Mode::C, "base", bc), &mk(Mode::Dc, "base", bdc)).unwrap();
        let p_c = accuracy(&mk(Mode::C, "base", bc)).unwrap();
        // D_c + P_c = 100 exactly.
        prop_assert_eq!(d_c.num + p_c.num, t as i64);
        prop_assert_eq!(d_d.num, bc as i64 - bdc as i64);
        let (dsc, dsd) = setting_delta(
            &mk(Mode::C, "base", bc), &mk(Mode::Dc, "base", bdc),
            &mk(Mode::C, "s", sc), &mk(Mode::Dc, "s", sdc),
        ).unwrap();
        prop_assert_eq!(dsc.num + dsd.num, sdc as i64 - bdc as i64);
    }

    #[test]
    fn accuracy_is_monotone(t in 1u64..5000, c in 0u64..5000) {
        let c = c % t;
        let lo = accuracy(&RunSummary::new("r", Mode::C, "base", c, t)).unwrap();
        let hi = accuracy(&RunSummary::new("r", Mode::C, "base", c + 1, t)).unwrap();
        prop_assert!(hi.hundredths() >= lo.hundredths());
        prop_assert_eq!(lo.hundredths(), oracle_hundredths(c, t));
    }

    #[test]
    fn rounding_is_symmetric(n in -100_000i64..100_000, den in 1u64..10_000) {
        let p = Pct::new(n, den).unwrap();
        let q = Pct::new(-n, den).unwrap();
        prop_assert_eq!(p.hundredths(), -q.hundredths());
    }
}
