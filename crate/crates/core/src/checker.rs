//! Answer checking by in-order variable substitution into a single final
//! expression, with both argument orders tried for swappable primitives.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::formal::{call_text, parse_program, Arg, Expression, NamingScheme, PrimitiveId, Program};

/// Above this many swappable calls only the first ones branch; the rest keep
/// their written order.
pub const MAX_SWAP_BRANCHING: usize = 16;

pub const RESULT: &str = "result";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Correct,
    Incorrect,
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    /// Canonical expansions of the predicted `result`, empty when malformed.
    pub canonical_predicted: Vec<String>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Canonical {
    /// Distinct expansions of `result`; empty when `result` is never defined.
    pub finals: BTreeSet<String>,
    /// Variables referenced before any definition, in first-use order.
    pub unresolved: Vec<String>,
    pub truncated_branching: bool,
}

impl Canonical {
    pub fn has_result(&self) -> bool {
        !self.finals.is_empty()
    }

    pub fn diagnostics(&self) -> Vec<String> {
        let mut d: Vec<String> = self
            .unresolved
            .iter()
            .map(|v| format!("unresolved variable {v}"))
            .collect();
        if !self.has_result() {
            d.push("no result definition".to_string());
        }
        if self.truncated_branching {
            d.push(format!("argument-swap branching capped at {MAX_SWAP_BRANCHING} calls"));
        }
        d
    }
}

fn is_swappable(e: &Expression) -> bool {
    e.args.len() == 2 && PrimitiveId::parse(&e.callee).is_some_and(|p| p.spec().swappable)
}

/// Expansion of `result` under one choice of argument order per swappable
/// call. `swap` holds one flag per swappable expression, in program order.
fn substitute(p: &Program, swap: &[bool], unresolved: &mut Vec<String>) -> Option<String> {
    let mut store: BTreeMap<&str, String> = BTreeMap::new();
    let mut next_swap = 0;
    for e in &p.expressions {
        let mut args: Vec<Arg> = e
            .args
            .iter()
            .map(|a| match a {
                Arg::Var(v) => match store.get(v.as_str()) {
                    Some(expanded) => Arg::Var(expanded.clone()),
                    None => {
                        if !unresolved.contains(v) {
                            unresolved.push(v.clone());
                        }
                        a.clone()
                    }
                },
                _ => a.clone(),
            })
            .collect();
        if is_swappable(e) {
            if swap.get(next_swap).copied().unwrap_or(false) {
                args.swap(0, 1);
            }
            next_swap += 1;
        }
        store.insert(&e.lhs, call_text(&e.callee, &args));
    }
    store.remove(RESULT)
}

/// All distinct final expressions of `p`, one per argument-swap branch.
/// Callees are compared as written, so normalize names first.
pub fn canonical_final(p: &Program) -> Canonical {
    let k = p.expressions.iter().filter(|e| is_swappable(e)).count();
    let branching = k.min(MAX_SWAP_BRANCHING);
    let mut out = Canonical {
        truncated_branching: k > branching,
        ..Canonical::default()
    };
    for mask in 0u64..(1u64 << branching) {
        let swap: Vec<bool> = (0..branching).map(|i| mask >> i & 1 == 1).collect();
        if let Some(f) = substitute(p, &swap, &mut out.unresolved) {
            out.finals.insert(f);
        }
    }
    out
}

/// Maps callees that resolve under `naming` back to primitive ids; unknown
/// names are left as written.
pub fn normalize_names(p: &Program, naming: &NamingScheme) -> Program {
    Program::new(
        p.expressions
            .iter()
            .map(|e| Expression {
                lhs: e.lhs.clone(),
                callee: naming
                    .resolve(&e.callee)
                    .map(|id| id.to_string())
                    .unwrap_or_else(|| e.callee.clone()),
                args: e.args.clone(),
            })
            .collect(),
    )
}

/// Judges an already parsed, name-normalized prediction.
pub fn judge_program(gold: &Program, predicted: &Program) -> Verdict {
    let pred = canonical_final(predicted);
    let mut diagnostics = pred.diagnostics();
    if !pred.has_result() {
        return Verdict {
            status: Status::Malformed,
            canonical_predicted: Vec::new(),
            diagnostics,
        };
    }
    let gold_c = canonical_final(gold);
    let status = if gold_c.finals.intersection(&pred.finals).next().is_some() {
        Status::Correct
    } else {
        Status::Incorrect
    };
    if status == Status::Incorrect && pred.unresolved.is_empty() {
        diagnostics.push("final expression differs from gold".to_string());
    }
    Verdict {
        status,
        canonical_predicted: pred.finals.into_iter().collect(),
        diagnostics,
    }
}

/// Judges raw model output against a gold program with opaque callees.
pub fn judge(gold: &Program, output_text: &str, naming: &NamingScheme) -> Verdict {
    match parse_program(output_text) {
        Ok(parsed) => {
            let mut v = judge_program(gold, &normalize_names(&parsed.program, naming));
            if !parsed.missing_semicolon.is_empty() {
                v.diagnostics
                    .push(format!("{} statements without semicolon", parsed.missing_semicolon.len()));
            }
            v
        }
        Err(e) => Verdict {
            status: Status::Malformed,
            canonical_predicted: Vec::new(),
            diagnostics: vec![e.to_string()],
        },
    }
}
