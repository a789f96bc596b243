use std::collections::BTreeSet;
use std::sync::OnceLock;

use n2f_core::config::{RunConfig, TaskConfig};
use n2f_core::formal::{render_program, NamingScheme, PrimitiveId};
use n2f_core::metrics::Mode;
use n2f_core::sample::{build_corpus, keyed_rng, Sample};
use n2f_core::scheme::{enumerate_schemes, Scheme};
use n2f_core::task::*;
use n2f_core::Error;
use regex::Regex;

struct Fixture {
    schemes: Vec<Scheme>,
    corpus: Vec<Sample>,
    config: RunConfig,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let schemes = enumerate_schemes();
        let config = RunConfig::default();
        let corpus = build_corpus(&schemes, config.seed, &config.ranges).unwrap();
        Fixture { schemes, corpus, config }
    })
}

fn ctx() -> TaskContext<'static> {
    let f = fixture();
    TaskContext {
        corpus: &f.corpus,
        schemes: &f.schemes,
        config: &f.config,
    }
}

fn runs() -> &'static [(Setting, Vec<Task>)] {
    static R: OnceLock<Vec<(Setting, Vec<Task>)>> = OnceLock::new();
    R.get_or_init(|| {
        Setting::ALL
            .iter()
            .map(|&s| (s, ctx().build_run(Mode::Dc, s).unwrap()))
            .collect()
    })
}

fn run(s: Setting) -> &'static [Task] {
    &runs().iter().find(|r| r.0 == s).unwrap().1
}

fn by_label(label: &str) -> Vec<&'static Sample> {
    fixture()
        .corpus
        .iter()
        .filter(|s| s.typed_label.to_string() == label)
        .collect()
}

#[test]
fn has_gap_examples() {
    let same = by_label("0-AAA");
    let other = by_label("0-AAB");
    let test = same[0];
    let trio = [same[1], same[2], same[3]];
    for def in [GapDefinition::Unseen, GapDefinition::AnyDiffers] {
        assert!(!has_gap(test, &trio, def));
    }
    // One demo differs in one letter.
    let mixed = [same[1], same[2], other[0]];
    assert!(has_gap(test, &mixed, GapDefinition::AnyDiffers));
    assert!(!has_gap(test, &mixed, GapDefinition::Unseen));
    let all_other = [other[0], other[1], other[2]];
    assert!(has_gap(test, &all_other, GapDefinition::Unseen));
}

#[test]
fn one_task_per_sample() {
    for (s, tasks) in runs() {
        assert_eq!(tasks.len(), fixture().corpus.len(), "{s:?}");
        let ids: BTreeSet<&str> = tasks.iter().map(|t| t.task_id.as_str()).collect();
        assert_eq!(ids.len(), tasks.len());
    }
}

#[test]
fn coverage_holds_for_every_task() {
    let f = fixture();
    for (setting, tasks) in runs() {
        for t in tasks {
            let test = f.corpus.iter().find(|s| s.sample_id == t.test_sample_id).unwrap();
            assert_eq!(t.demo_sample_ids.len(), DEMOS);
            assert!(!t.demo_sample_ids.contains(&t.test_sample_id));
            let demos: Vec<Sample> = ctx().demos_for(test, setting.gap()).unwrap();
            let ids: Vec<String> = demos.iter().map(|d| d.sample_id.clone()).collect();
            assert_eq!(ids, t.demo_sample_ids);
            let mut union = BTreeSet::new();
            for d in &demos {
                assert!(!d.primitive_set.is_disjoint(&test.primitive_set), "{}", t.task_id);
                union.extend(d.primitive_set.iter().copied());
            }
            assert!(union.is_superset(&test.primitive_set), "{}", t.task_id);
        }
    }
}

#[test]
fn gap_settings_are_sound() {
    assert!(run(Setting::Gap0).iter().all(|t| !t.has_gap));
    assert!(run(Setting::Gap100).iter().all(|t| t.has_gap));
    assert_eq!(gap_fraction(run(Setting::Gap0)), 0.0);
    assert_eq!(gap_fraction(run(Setting::Gap100)), 1.0);
    let base = gap_fraction(run(Setting::Base));
    assert!((0.60..=0.80).contains(&base), "{base}");
}

#[test]
fn label_checks_on_demo_triples() {
    let f = fixture();
    let idx = index(&f.corpus);
    for t in run(Setting::Gap100) {
        let test = idx[t.test_sample_id.as_str()];
        for d in &t.demo_sample_ids {
            assert_ne!(idx[d.as_str()].typed_label, test.typed_label);
        }
    }
    for t in run(Setting::Gap0) {
        let test = idx[t.test_sample_id.as_str()];
        let demos = ctx().demos_for(test, GapSetting::ZeroGap).unwrap();
        assert!(demos.iter().any(|d| d.typed_label == test.typed_label));
    }
}

#[test]
fn strict_label_reading_is_available() {
    let f = fixture();
    let config = RunConfig {
        tasks: TaskConfig {
            gap_definition: GapDefinition::AnyDiffers,
            ..TaskConfig::default()
        },
        ..RunConfig::default()
    };
    let c = TaskContext {
        corpus: &f.corpus,
        schemes: &f.schemes,
        config: &config,
    };
    for test in f.corpus.iter().step_by(9) {
        let demos = c.demos_for(test, GapSetting::ZeroGap).unwrap();
        assert!(demos.iter().all(|d| d.typed_label == test.typed_label), "{}", test.sample_id);
        let t = c.build_task(test, Mode::Dc, Setting::Gap0).unwrap();
        assert!(!t.has_gap);
    }
}

#[test]
fn naming_settings_reuse_base_demos() {
    for s in [Setting::Anomalous, Setting::Cross] {
        for (a, b) in run(Setting::Base).iter().zip(run(s)) {
            assert_eq!(a.demo_sample_ids, b.demo_sample_ids);
            assert_eq!(a.has_gap, b.has_gap);
        }
    }
}

#[test]
fn gap_settings_keep_qualifying_base_draws() {
    for (a, b) in run(Setting::Base).iter().zip(run(Setting::Gap100)) {
        if a.has_gap {
            assert_eq!(a.demo_sample_ids, b.demo_sample_ids);
        }
    }
}

#[test]
fn prompt_structure_and_monotonicity() {
    let f = fixture();
    let t = &f.config.prompt;
    for test in f.corpus.iter().step_by(11) {
        let dc = ctx().build_task(test, Mode::Dc, Setting::Base).unwrap();
        let c = ctx().build_task(test, Mode::C, Setting::Base).unwrap();
        assert_eq!(dc.demo_sample_ids, c.demo_sample_ids);
        assert!(dc.primitive_demos.is_empty());
        assert_eq!(c.primitive_demos.len(), test.primitive_set.len());
        let label = format!("{} ", t.question_label);
        assert_eq!(dc.prompt.matches(&label).count(), DEMOS + 1);
        assert_eq!(c.prompt.matches(&label).count(), DEMOS + 1 + test.primitive_set.len());
        assert!(dc.prompt.ends_with(&format!("{} {}\n{}\n", t.question_label, test.question, t.program_label)));

        let section = primitive_section(t, &c.primitive_demos, &NamingScheme::opaque()).unwrap();
        assert_eq!(c.prompt.replacen(&format!("{section}\n\n"), "", 1), dc.prompt);
        assert_eq!(ctx().build_task(test, Mode::C, Setting::Base).unwrap(), c);
    }
}

#[test]
fn renamed_prompts_hide_opaque_ids() {
    let callee = Regex::new(r":= f\d \(").unwrap();
    for s in [Setting::Anomalous, Setting::Cross] {
        for t in run(s) {
            assert!(!callee.is_match(&t.prompt), "{}", t.task_id);
        }
    }
    let f = fixture();
    for test in f.corpus.iter().step_by(13) {
        let t = ctx().build_task(test, Mode::C, Setting::Cross).unwrap();
        assert!(!callee.is_match(&t.prompt));
        let naming = NamingScheme::cross_mapping();
        for d in &t.primitive_demos {
            assert!(t.prompt.contains(&render_program(&d.program, &naming).unwrap()));
        }
    }
    assert!(run(Setting::Base).iter().all(|t| callee.is_match(&t.prompt)));
}

fn demo_for(p: u8) -> PrimitiveDemo {
    let f = fixture();
    let p = PrimitiveId::new(p).unwrap();
    let test = f.corpus.iter().find(|s| s.primitive_set.contains(&p)).unwrap();
    build_primitive_demos(test, &f.config.ranges, f.config.seed)
        .unwrap()
        .into_iter()
        .find(|d| d.primitive == p)
        .unwrap()
}

#[test]
fn primitive_demo_shapes() {
    let d = demo_for(5);
    assert_eq!(d.program.to_string(), "result := f5 (all);");
    assert_eq!(d.question, "Among all items, what is the number?");

    let d = demo_for(8);
    assert_eq!(d.program.len(), 1);
    let re = Regex::new(r"^result := f8 \((\d+), (\d+)\);$").unwrap();
    let text = d.program.to_string();
    let caps = re.captures(&text).unwrap();
    assert_eq!(d.question, format!("Among all items, what is {} plus {}?", &caps[1], &caps[2]));

    let d = demo_for(9);
    assert_eq!(d.program.len(), 2);
    assert_eq!(d.program.expressions[0].callee, "f9");
    assert_eq!(d.program.expressions[1].callee, "f2");
    assert_eq!(d.program.expressions[1].args[2].to_string(), d.program.expressions[0].lhs);

    let d = demo_for(7);
    let callees: Vec<&str> = d.program.expressions.iter().map(|e| e.callee.as_str()).collect();
    assert_eq!(callees, ["f6", "f7"]);

    for p in [0u8, 1, 2, 3, 4, 6] {
        let d = demo_for(p);
        assert_eq!(d.program.len(), 1, "f{p}");
        assert!(d.question.starts_with("Among all items, ") && d.question.ends_with('?'));
    }
}

#[test]
fn every_primitive_demo_judges_against_itself() {
    use n2f_core::checker::{judge, Status};
    for p in 0..10 {
        let d = demo_for(p);
        let text = d.program.to_string();
        assert_eq!(judge(&d.program, &text, &NamingScheme::opaque()).status, Status::Correct);
    }
}

#[test]
fn infeasible_selection_names_the_constraint() {
    let f = fixture();
    let test = &f.corpus[0];
    let pool: Vec<&Sample> = f.corpus.iter().filter(|s| s.primitive_set.is_disjoint(&test.primitive_set)).collect();
    let c = Constraints::from_config(GapSetting::Base, &TaskConfig::default());
    let err = select_demos(test, &pool, c, 10, &mut keyed_rng("x")).unwrap_err();
    match err {
        Error::Infeasible { sample_id, constraint } => {
            assert_eq!(sample_id, test.sample_id);
            assert!(constraint.contains("coverage"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn selection_is_seeded() {
    let f = fixture();
    let pool: Vec<&Sample> = f.corpus.iter().collect();
    let test = &f.corpus[40];
    let c = Constraints::from_config(GapSetting::Base, &TaskConfig::default());
    let pick = |key: &str| -> Vec<String> {
        select_demos(test, &pool, c, 10_000, &mut keyed_rng(key))
            .unwrap()
            .iter()
            .map(|d| d.sample_id.clone())
            .collect()
    };
    assert_eq!(pick("a"), pick("a"));
    let distinct: BTreeSet<Vec<String>> = (0..20).map(|i| pick(&format!("k{i}"))).collect();
    assert!(distinct.len() > 10);
    for ids in &distinct {
        let demos: Vec<&Sample> = ids.iter().map(|i| pool.iter().find(|s| &s.sample_id == i).copied().unwrap()).collect();
        assert!(satisfies(test, &demos, c));
    }
}

#[test]
fn setting_names_round_trip() {
    for s in Setting::ALL {
        assert_eq!(Setting::parse(s.as_str()), Some(s));
    }
    assert_eq!(Setting::parse("nope"), None);
}
