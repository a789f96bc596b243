//! Evaluation tasks: demonstration selection under coverage and gap
//! constraints, per-primitive demonstrations, naming and prompt assembly.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{hash_bytes, FullGapMode, PromptTemplate, RunConfig};
use crate::error::{Error, Result};
use crate::formal::{
    apply_naming, render_program, Arg, Expression, NamingKind, NamingScheme, OutputType,
    PrimitiveId, Program,
};
use crate::metrics::Mode;
use crate::question::{standalone_question, NodeClass};
use crate::sample::{draw_node_params, instantiate, keyed_rng, LiteralRanges, NodeParams, Sample};
use crate::scheme::Scheme;

pub const DEMOS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GapSetting {
    Base,
    ZeroGap,
    FullGap,
}

/// When demonstrations count as leaving a compositional gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapDefinition {
    /// The test's typed label appears on no demonstration.
    Unseen,
    /// At least one demonstration's typed label differs from the test's.
    AnyDiffers,
}

/// The five evaluation settings: base, two gap settings, two namings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    Base,
    Gap0,
    Gap100,
    Anomalous,
    Cross,
}

impl Setting {
    pub const ALL: [Setting; 5] = [
        Setting::Base,
        Setting::Gap0,
        Setting::Gap100,
        Setting::Anomalous,
        Setting::Cross,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Setting::Base => "base",
            Setting::Gap0 => "gap0",
            Setting::Gap100 => "gap100",
            Setting::Anomalous => "anomalous",
            Setting::Cross => "cross",
        }
    }

    pub fn parse(s: &str) -> Option<Setting> {
        Setting::ALL.into_iter().find(|x| x.as_str() == s)
    }

    pub fn gap(self) -> GapSetting {
        match self {
            Setting::Gap0 => GapSetting::ZeroGap,
            Setting::Gap100 => GapSetting::FullGap,
            _ => GapSetting::Base,
        }
    }

    pub fn naming(self) -> NamingKind {
        match self {
            Setting::Anomalous => NamingKind::Anomalous,
            Setting::Cross => NamingKind::CrossMapping,
            _ => NamingKind::Opaque,
        }
    }
}

/// Whether the demonstrations leave a compositional gap for `test`.
pub fn has_gap(test: &Sample, demos: &[&Sample], def: GapDefinition) -> bool {
    match def {
        GapDefinition::Unseen => demos.iter().all(|d| d.typed_label != test.typed_label),
        GapDefinition::AnyDiffers => demos.iter().any(|d| d.typed_label != test.typed_label),
    }
}

/// Label requirement on each demonstration, and on the triple as a whole.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LabelRule {
    Free,
    AllSame,
    AllDiffer,
    SomeSame,
    SomeDiffer,
}

fn label_rule(gap: GapSetting, def: GapDefinition, full: FullGapMode) -> LabelRule {
    match (gap, def, full) {
        (GapSetting::Base, _, _) => LabelRule::Free,
        (GapSetting::ZeroGap, GapDefinition::Unseen, _) => LabelRule::SomeSame,
        (GapSetting::ZeroGap, GapDefinition::AnyDiffers, _) => LabelRule::AllSame,
        (GapSetting::FullGap, GapDefinition::Unseen, _) => LabelRule::AllDiffer,
        (GapSetting::FullGap, GapDefinition::AnyDiffers, FullGapMode::StrictAll) => LabelRule::AllDiffer,
        (GapSetting::FullGap, GapDefinition::AnyDiffers, FullGapMode::Any) => LabelRule::SomeDiffer,
    }
}

/// Constraint set for one selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Constraints {
    pub gap: GapSetting,
    pub definition: GapDefinition,
    pub full_gap: FullGapMode,
}

impl Constraints {
    pub fn from_config(gap: GapSetting, c: &crate::config::TaskConfig) -> Constraints {
        Constraints {
            gap,
            definition: c.gap_definition,
            full_gap: c.full_gap,
        }
    }

    fn rule(&self) -> LabelRule {
        label_rule(self.gap, self.definition, self.full_gap)
    }

    fn name(&self) -> &'static str {
        match self.gap {
            GapSetting::Base => "coverage",
            GapSetting::ZeroGap => "coverage with zero gap",
            GapSetting::FullGap => "coverage with full gap",
        }
    }
}

fn mask(s: &Sample) -> u16 {
    s.primitive_set.iter().fold(0, |m, p| m | 1 << p.index())
}

fn demo_ok(test: &Sample, d: &Sample, rule: LabelRule) -> bool {
    if d.sample_id == test.sample_id || mask(d) & mask(test) == 0 {
        return false;
    }
    let same = d.typed_label == test.typed_label;
    match rule {
        LabelRule::AllSame => same,
        LabelRule::AllDiffer => !same,
        _ => true,
    }
}

/// Triple-level checks on precomputed (mask, same-label) pairs.
fn triple_ok(need: u16, t: [(u16, bool); 3], rule: LabelRule) -> bool {
    if (t[0].0 | t[1].0 | t[2].0) & need != need {
        return false;
    }
    match rule {
        LabelRule::SomeSame => t.iter().any(|x| x.1),
        LabelRule::SomeDiffer => t.iter().any(|x| !x.1),
        _ => true,
    }
}

/// Whether `demos` satisfy every constraint for `test`.
pub fn satisfies(test: &Sample, demos: &[&Sample], c: Constraints) -> bool {
    let rule = c.rule();
    if demos.len() != DEMOS
        || !demos.iter().all(|d| demo_ok(test, d, rule))
        || demos.iter().map(|d| &d.sample_id).collect::<BTreeSet<_>>().len() != DEMOS
    {
        return false;
    }
    let key = |d: &Sample| (mask(d), d.typed_label == test.typed_label);
    triple_ok(mask(test), [key(demos[0]), key(demos[1]), key(demos[2])], rule)
}

/// Three demonstrations drawn uniformly from the triples that satisfy the
/// coverage and gap constraints. Rejection sampling first, then an exhaustive
/// scan, so rare feasible triples are still found.
pub fn select_demos<'a>(
    test: &Sample,
    pool: &[&'a Sample],
    c: Constraints,
    max_rejections: u32,
    rng: &mut impl Rng,
) -> Result<Vec<&'a Sample>> {
    let rule = c.rule();
    let eligible: Vec<&Sample> = pool.iter().copied().filter(|d| demo_ok(test, d, rule)).collect();
    let keys: Vec<(u16, bool)> = eligible
        .iter()
        .map(|d| (mask(d), d.typed_label == test.typed_label))
        .collect();
    let need = mask(test);
    let infeasible = |detail: &str| Error::Infeasible {
        sample_id: test.sample_id.clone(),
        constraint: format!("{}: {detail}", c.name()),
    };
    let n = eligible.len();
    if n < DEMOS {
        return Err(infeasible(&format!("{n} eligible demonstrations")));
    }
    let idx: Vec<usize> = (0..n).collect();
    for _ in 0..max_rejections {
        let t: Vec<usize> = idx.choose_multiple(rng, DEMOS).copied().collect();
        if triple_ok(need, [keys[t[0]], keys[t[1]], keys[t[2]]], rule) {
            return Ok(t.into_iter().map(|i| eligible[i]).collect());
        }
    }
    let scan = |mut visit: Box<dyn FnMut(usize, usize, usize) -> bool + '_>| {
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    if triple_ok(need, [keys[i], keys[j], keys[k]], rule) && visit(i, j, k) {
                        return;
                    }
                }
            }
        }
    };
    let mut feasible = 0u64;
    scan(Box::new(|_, _, _| {
        feasible += 1;
        false
    }));
    if feasible == 0 {
        return Err(infeasible("no triple covers the test primitives"));
    }
    let mut target = rng.gen_range(0..feasible);
    let mut picked = None;
    scan(Box::new(|i, j, k| {
        if target == 0 {
            picked = Some([i, j, k]);
            return true;
        }
        target -= 1;
        false
    }));
    let mut t = picked.expect("feasible triple count is consistent").to_vec();
    t.shuffle(rng);
    Ok(t.into_iter().map(|i| eligible[i]).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimitiveDemo {
    pub primitive: PrimitiveId,
    pub question: String,
    pub program: Program,
}

fn has_question(p: PrimitiveId) -> bool {
    p.index() <= 8
}

fn has_leaf_value(p: PrimitiveId) -> bool {
    matches!(p.index(), 3 | 4 | 5 | 6 | 9)
}

/// A primitive that can be called on literals and `all` alone.
fn self_contained(p: PrimitiveId) -> bool {
    p.spec().params.iter().all(|k| k.has_default())
}

fn edge_slot(consumer: PrimitiveId, t: OutputType) -> Option<usize> {
    consumer.spec().params.iter().position(|k| k.edge_type() == Some(t))
}

/// Smallest demonstration containing `p`: one node if it is self-contained
/// and phrasable, otherwise two nodes, with the partner found by a search
/// over signatures preferring the lowest primitive id.
fn demo_shape(p: PrimitiveId) -> Option<Vec<(PrimitiveId, Option<usize>)>> {
    if self_contained(p) && has_question(p) {
        return Some(vec![(p, None)]);
    }
    // A producer feeding p, when p needs an input.
    if has_question(p) {
        for q in PrimitiveId::all() {
            if self_contained(q) && has_leaf_value(q) {
                if let Some(slot) = edge_slot(p, q.spec().output) {
                    let mut rest = p.spec().params.clone();
                    rest.remove(slot);
                    if rest.iter().all(|k| k.has_default()) {
                        return Some(vec![(q, None), (p, Some(slot))]);
                    }
                }
            }
        }
    }
    // A consumer reading p, when p cannot be phrased as a question.
    if self_contained(p) && has_leaf_value(p) {
        for c in PrimitiveId::all() {
            if c == p || !has_question(c) {
                continue;
            }
            if let Some(slot) = edge_slot(c, p.spec().output) {
                let mut rest = c.spec().params.clone();
                rest.remove(slot);
                if rest.iter().all(|k| k.has_default()) {
                    return Some(vec![(p, None), (c, Some(slot))]);
                }
            }
        }
    }
    None
}

/// One minimal demonstration per primitive of the test sample.
pub fn build_primitive_demos(test: &Sample, ranges: &LiteralRanges, seed: u64) -> Result<Vec<PrimitiveDemo>> {
    test.primitive_set
        .iter()
        .map(|&p| {
            let shape = demo_shape(p).ok_or_else(|| Error::Data(format!("no demonstration shape for {p}")))?;
            let mut rng = keyed_rng(&format!("primitive-demo|{seed}|{}|{p}", test.sample_id));
            let mut used = BTreeSet::new();
            let params: Vec<NodeParams> = shape
                .iter()
                .map(|&(q, slot)| {
                    let filled: Vec<usize> = slot.into_iter().collect();
                    draw_node_params(q, &filled, ranges, &mut rng, &mut used)
                })
                .collect();
            let (program, question) = match shape.as_slice() {
                [(q, None)] => {
                    let args = literal_args(*q, &params[0], None, "")?;
                    let program = Program::new(vec![Expression::new("result", q.to_string(), args)]);
                    (program, standalone_question(*q, &params[0])?)
                }
                [(first, None), (second, Some(slot))] => {
                    let lhs = format!("{}_1", first.spec().output.prefix());
                    let a0 = literal_args(*first, &params[0], None, "")?;
                    let a1 = literal_args(*second, &params[1], Some(*slot), &lhs)?;
                    let program = Program::new(vec![
                        Expression::new(lhs.clone(), first.to_string(), a0),
                        Expression::new("result", second.to_string(), a1),
                    ]);
                    let inner = NodeClass::new(*first, &params[0]).leaf_value()?;
                    let q = NodeClass::new(*second, &params[1]).question(Some(&inner), None)?;
                    (program, format!("Among all items, {q}?"))
                }
                _ => unreachable!("demo shapes have one or two nodes"),
            };
            Ok(PrimitiveDemo {
                primitive: p,
                question,
                program,
            })
        })
        .collect()
}

fn literal_args(p: PrimitiveId, params: &NodeParams, edge: Option<usize>, var: &str) -> Result<Vec<Arg>> {
    (0..p.spec().arity())
        .map(|slot| {
            if edge == Some(slot) {
                return Ok(Arg::var(var));
            }
            crate::sample::slot_field(p, slot)
                .and_then(|f| params.literal(f))
                .ok_or_else(|| Error::Data(format!("{p} slot {slot} has no literal")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: String,
    pub test_sample_id: String,
    pub mode: Mode,
    pub setting: Setting,
    pub demo_sample_ids: Vec<String>,
    pub primitive_demos: Vec<PrimitiveDemo>,
    pub naming: NamingKind,
    pub gap_setting: GapSetting,
    pub has_gap: bool,
    pub prompt: String,
    pub prompt_hash: String,
}

fn block(t: &PromptTemplate, question: &str, program: &str) -> String {
    format!(
        "{} {question}\n{}\n{program}",
        t.question_label, t.program_label
    )
}

/// The primitive-demonstration section, as inserted in mode C prompts.
pub fn primitive_section(t: &PromptTemplate, demos: &[PrimitiveDemo], naming: &NamingScheme) -> Result<String> {
    let mut parts = vec![t.primitive_section.clone()];
    for d in demos {
        parts.push(block(t, &d.question, &render_program(&d.program, naming)?));
    }
    Ok(parts.join("\n\n"))
}

/// Prompt text: header, the primitive section in mode C, the three
/// demonstrations, then the test question with an empty program slot.
pub fn assemble_prompt(
    t: &PromptTemplate,
    mode: Mode,
    primitive_demos: &[PrimitiveDemo],
    demos: &[&Sample],
    test: &Sample,
    naming: &NamingScheme,
) -> Result<String> {
    let mut sections = vec![t.header.clone()];
    if mode == Mode::C {
        sections.push(primitive_section(t, primitive_demos, naming)?);
    }
    let mut demo_parts = vec![t.demo_section.clone()];
    for d in demos {
        demo_parts.push(block(t, &d.question, &render_program(&d.gold, naming)?));
    }
    sections.push(demo_parts.join("\n\n"));
    sections.push(format!(
        "{}\n{} {}\n{}\n",
        t.test_section, t.question_label, test.question, t.program_label
    ));
    Ok(sections.join("\n\n"))
}

/// Corpus plus everything needed to pick demonstrations.
pub struct TaskContext<'a> {
    pub corpus: &'a [Sample],
    pub schemes: &'a [Scheme],
    pub config: &'a RunConfig,
}

impl TaskContext<'_> {
    fn pool(&self) -> Vec<&Sample> {
        self.corpus.iter().collect()
    }

    /// Demonstrations for the base setting of `test`.
    fn base_demos(&self, test: &Sample) -> Result<Vec<&Sample>> {
        let mut rng = keyed_rng(&format!("demos|{}|{}", self.config.seed, test.sample_id));
        select_demos(
            test,
            &self.pool(),
            Constraints::from_config(GapSetting::Base, &self.config.tasks),
            self.config.tasks.max_rejections,
            &mut rng,
        )
    }

    /// Extra instantiations of every scheme sharing the test's label.
    fn augmented(&self, test: &Sample) -> Result<Vec<Sample>> {
        let seed = self.config.seed;
        let mut out = Vec::new();
        for s in self.schemes.iter().filter(|s| s.typed_label == test.typed_label) {
            for i in 1..=u64::from(self.config.tasks.augment_instances) {
                out.push(instantiate(s, seed.wrapping_add(i), &self.config.ranges)?);
            }
        }
        Ok(out)
    }

    /// Demonstrations for `test` under `gap`, owned so augmented samples can
    /// be returned. Gap settings keep the base draw when it already
    /// qualifies.
    pub fn demos_for(&self, test: &Sample, gap: GapSetting) -> Result<Vec<Sample>> {
        let base = self.base_demos(test)?;
        let c = Constraints::from_config(gap, &self.config.tasks);
        if gap == GapSetting::Base || satisfies(test, &base, c) {
            return Ok(base.into_iter().cloned().collect());
        }
        let key = format!("demos|{}|{}|{gap:?}", self.config.seed, test.sample_id);
        let max = self.config.tasks.max_rejections;
        let first = select_demos(test, &self.pool(), c, max, &mut keyed_rng(&key));
        match first {
            Ok(d) => Ok(d.into_iter().cloned().collect()),
            Err(e) if gap == GapSetting::ZeroGap => {
                let extra = self.augmented(test)?;
                let mut pool = self.pool();
                pool.extend(extra.iter());
                let mut rng = keyed_rng(&format!("{key}|augmented"));
                let d = select_demos(test, &pool, c, max, &mut rng).map_err(|_| e)?;
                Ok(d.into_iter().cloned().collect())
            }
            Err(e) => Err(e),
        }
    }

    pub fn build_task(&self, test: &Sample, mode: Mode, setting: Setting) -> Result<Task> {
        let naming = self.config.naming.scheme(setting.naming())?;
        let demos = self.demos_for(test, setting.gap())?;
        let demo_refs: Vec<&Sample> = demos.iter().collect();
        let primitive_demos = match mode {
            Mode::C => build_primitive_demos(test, &self.config.ranges, self.config.seed)?,
            Mode::Dc => Vec::new(),
        };
        let prompt = assemble_prompt(&self.config.prompt, mode, &primitive_demos, &demo_refs, test, &naming)?;
        Ok(Task {
            task_id: format!("{}-{}-{}", mode.as_str(), setting.as_str(), test.sample_id),
            test_sample_id: test.sample_id.clone(),
            mode,
            setting,
            demo_sample_ids: demos.iter().map(|d| d.sample_id.clone()).collect(),
            primitive_demos,
            naming: setting.naming(),
            gap_setting: setting.gap(),
            has_gap: has_gap(test, &demo_refs, self.config.tasks.gap_definition),
            prompt_hash: hash_bytes(prompt.as_bytes()),
            prompt,
        })
    }

    /// One task per corpus sample.
    pub fn build_run(&self, mode: Mode, setting: Setting) -> Result<Vec<Task>> {
        self.corpus
            .iter()
            .map(|s| self.build_task(s, mode, setting))
            .collect()
    }
}

/// Fraction of tasks whose demonstrations leave a compositional gap.
pub fn gap_fraction(tasks: &[Task]) -> f64 {
    if tasks.is_empty() {
        return 0.0;
    }
    tasks.iter().filter(|t| t.has_gap).count() as f64 / tasks.len() as f64
}

/// Gold program of a sample under a naming, for oracle answers.
pub fn renamed_gold(s: &Sample, naming: &NamingScheme) -> Result<Program> {
    apply_naming(&s.gold, &NamingScheme::opaque(), naming)
}

/// Index from sample id to sample.
pub fn index(corpus: &[Sample]) -> BTreeMap<&str, &Sample> {
    corpus.iter().map(|s| (s.sample_id.as_str(), s)).collect()
}
