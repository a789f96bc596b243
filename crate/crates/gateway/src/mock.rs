//! Offline models with known behavior, for pipeline tests and dry runs.

use n2f_core::classify::signature_violation;
use n2f_core::formal::{render_program, Arg, Expression, OutputType, PrimitiveId, Program};

use crate::{Completion, CompletionModel, GatewayError, Query, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MockKind {
    /// Answers with the gold program under the task's naming.
    GoldOracle,
    /// Swaps one callee, preferring a primitive with the same parameters.
    Confuser,
    /// Leaves out one intermediate expression.
    Omitter,
    /// Answers with prose and no program.
    Babbler,
}

impl MockKind {
    pub const ALL: [MockKind; 4] = [MockKind::GoldOracle, MockKind::Confuser, MockKind::Omitter, MockKind::Babbler];

    pub fn as_str(self) -> &'static str {
        match self {
            MockKind::GoldOracle => "gold_oracle",
            MockKind::Confuser => "confuser",
            MockKind::Omitter => "omitter",
            MockKind::Babbler => "babbler",
        }
    }

    pub fn parse(s: &str) -> Option<MockKind> {
        MockKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

struct Mock {
    kind: MockKind,
    id: String,
}

pub fn mock_model(kind: MockKind) -> Box<dyn CompletionModel> {
    Box::new(Mock {
        kind,
        id: format!("mock-{}", kind.as_str()),
    })
}

pub const BABBLE: &str = "I would look at the table and work out the answer step by step.";

/// The gold program with one callee replaced. Candidates are tried from the
/// most to the least plausible: an identical parameter list; then same
/// arity, a well-typed call and the same output type; then same arity and
/// well typed; then same arity; then any other primitive. Within a tier the
/// earliest expression and lowest id win.
pub fn confuse(gold: &Program) -> Option<Program> {
    let ids = gold.primitive_ids()?;
    let tiers: [&dyn Fn(PrimitiveId, PrimitiveId, &Expression) -> bool; 5] = [
        &|p, q, _| p.spec().params == q.spec().params,
        &|p, q, e| same_arity(p, q) && well_typed(e, q) && p.spec().output == q.spec().output,
        &|p, q, e| same_arity(p, q) && well_typed(e, q),
        &|p, q, _| same_arity(p, q),
        &|_, _, _| true,
    ];
    for tier in tiers {
        for (i, (e, &p)) in gold.expressions.iter().zip(&ids).enumerate() {
            if let Some(q) = PrimitiveId::all().find(|&q| q != p && tier(p, q, e)) {
                let mut out = gold.clone();
                out.expressions[i].callee = q.to_string();
                return Some(out);
            }
        }
    }
    None
}

fn same_arity(p: PrimitiveId, q: PrimitiveId) -> bool {
    p.spec().arity() == q.spec().arity()
}

fn well_typed(e: &Expression, q: PrimitiveId) -> bool {
    let swapped = Expression::new(e.lhs.clone(), q.to_string(), e.args.clone());
    signature_violation(&swapped).is_none()
}

/// The gold program without its first intermediate view, or failing that its
/// first intermediate expression. References to the dropped variable read
/// the whole table instead.
pub fn omit(gold: &Program) -> Option<Program> {
    let last = gold.len().checked_sub(1)?;
    let pick = (0..last)
        .find(|&i| OutputType::of_variable(&gold.expressions[i].lhs) == Some(OutputType::View))
        .or((last > 0).then_some(0))?;
    let dropped = gold.expressions[pick].lhs.clone();
    let expressions = gold
        .expressions
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != pick)
        .map(|(_, e)| {
            let args = e
                .args
                .iter()
                .map(|a| match a {
                    Arg::Var(v) if *v == dropped => Arg::All,
                    other => other.clone(),
                })
                .collect();
            Expression::new(e.lhs.clone(), e.callee.clone(), args)
        })
        .collect();
    Some(Program::new(expressions))
}

impl CompletionModel for Mock {
    fn model_id(&self) -> &str {
        &self.id
    }

    fn complete(&self, q: &Query<'_>) -> Result<Completion> {
        let program = match self.kind {
            MockKind::Babbler => return Ok(Completion::immediate(BABBLE.to_string())),
            MockKind::GoldOracle => Some(q.gold.clone()),
            MockKind::Confuser => confuse(q.gold),
            MockKind::Omitter => omit(q.gold),
        };
        let program = program.ok_or_else(|| GatewayError::Response(format!("{}: no variant for {}", self.id, q.task_id)))?;
        let text = render_program(&program, q.naming).map_err(|e| GatewayError::Response(e.to_string()))?;
        Ok(Completion::immediate(text))
    }
}
