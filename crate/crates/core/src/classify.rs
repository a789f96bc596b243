//! Heuristic error labels for incorrect outputs. This approximates a manual
//! error analysis; scores never depend on it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::checker::{canonical_final, RESULT};
use crate::formal::{Arg, Expression, OutputType, ParamKind, PrimitiveId, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ErrorKind {
    PrimitiveConfusion,
    PrimitiveFiction,
    VariableMisuse,
    Redundancy,
    Omission,
    IncorrectMeaning,
    Unparseable,
}

impl ErrorKind {
    /// Column heading in error tables.
    pub fn short(self) -> &'static str {
        match self {
            ErrorKind::PrimitiveConfusion => "Pc",
            ErrorKind::PrimitiveFiction => "Pf",
            ErrorKind::VariableMisuse => "Vm",
            ErrorKind::Redundancy => "R",
            ErrorKind::Omission => "O",
            ErrorKind::IncorrectMeaning => "Im",
            ErrorKind::Unparseable => "Malformed",
        }
    }

    pub const TABLE: [ErrorKind; 7] = [
        ErrorKind::PrimitiveConfusion,
        ErrorKind::PrimitiveFiction,
        ErrorKind::VariableMisuse,
        ErrorKind::Redundancy,
        ErrorKind::Omission,
        ErrorKind::IncorrectMeaning,
        ErrorKind::Unparseable,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorLabel {
    pub kind: ErrorKind,
    pub evidence: String,
}

impl ErrorLabel {
    fn new(kind: ErrorKind, evidence: impl Into<String>) -> ErrorLabel {
        ErrorLabel {
            kind,
            evidence: evidence.into(),
        }
    }

    pub fn unparseable(evidence: impl Into<String>) -> ErrorLabel {
        ErrorLabel::new(ErrorKind::Unparseable, evidence)
    }
}

/// Why a call does not fit the signature of the primitive it names, if so.
/// Literals are accepted in any literal slot; typed variables must match.
pub fn signature_violation(e: &Expression) -> Option<String> {
    let prim = PrimitiveId::parse(&e.callee)?;
    let spec = prim.spec();
    if e.args.len() != spec.arity() {
        return Some(format!(
            "{} called with {} arguments, takes {}",
            e.callee,
            e.args.len(),
            spec.arity()
        ));
    }
    for (i, (a, k)) in e.args.iter().zip(&spec.params).enumerate() {
        let ok = match a {
            Arg::All => *k == ParamKind::Var(OutputType::View),
            Arg::Var(v) => match OutputType::of_variable(v) {
                Some(t) => k.edge_type() == Some(t),
                None => true,
            },
            Arg::Attr(_) | Arg::Int(_) => !matches!(k, ParamKind::Var(_)),
        };
        if !ok {
            return Some(format!("{} argument {} ({a}) does not fit {k:?}", e.callee, i + 1));
        }
    }
    None
}

fn literal_key(e: &Expression) -> Vec<String> {
    let mut k: Vec<String> = e
        .args
        .iter()
        .filter(|a| matches!(a, Arg::Attr(_) | Arg::Int(_)))
        .map(Arg::to_string)
        .collect();
    k.sort();
    k
}

/// Greedy alignment of gold to predicted expressions by equal literal
/// multisets, in program order. Returns gold index -> predicted index.
fn align(gold: &Program, pred: &Program) -> BTreeMap<usize, usize> {
    let gk: Vec<_> = gold.expressions.iter().map(literal_key).collect();
    let pk: Vec<_> = pred.expressions.iter().map(literal_key).collect();
    let mut taken = BTreeSet::new();
    let mut out = BTreeMap::new();
    // Expressions with literals first: they identify nodes unambiguously.
    let mut order: Vec<usize> = (0..gk.len()).collect();
    order.sort_by_key(|&i| gk[i].is_empty());
    for gi in order {
        let hit = (0..pk.len()).find(|pj| !taken.contains(pj) && pk[*pj] == gk[gi]);
        if let Some(pj) = hit {
            taken.insert(pj);
            out.insert(gi, pj);
        }
    }
    out
}

/// Index of the latest definition of `name` before position `at`.
fn definer(p: &Program, name: &str, at: usize) -> Option<usize> {
    (0..at).rev().find(|&i| p.expressions[i].lhs == name)
}

/// Variables the final `result` depends on, as expression indices.
fn live_set(p: &Program) -> BTreeSet<usize> {
    let mut live = BTreeSet::new();
    let Some(root) = p.expressions.iter().rposition(|e| e.lhs == RESULT) else {
        return live;
    };
    let mut stack = vec![root];
    while let Some(i) = stack.pop() {
        if !live.insert(i) {
            continue;
        }
        for a in &p.expressions[i].args {
            if let Arg::Var(v) = a {
                if let Some(d) = definer(p, v, i) {
                    stack.push(d);
                }
            }
        }
    }
    live
}

/// Labels for an incorrect, parsable prediction whose callees are already
/// mapped back to primitive ids. Detectors run in a fixed priority order and
/// every one that fires contributes; the first is the primary label.
pub fn classify(gold: &Program, predicted: &Program) -> Vec<ErrorLabel> {
    let mut out = Vec::new();

    // Variable misuse.
    let canon = canonical_final(predicted);
    for v in &canon.unresolved {
        out.push(ErrorLabel::new(ErrorKind::VariableMisuse, format!("undefined variable {v}")));
    }
    let live = live_set(predicted);
    if !live.is_empty() {
        for (i, e) in predicted.expressions.iter().enumerate() {
            if !live.contains(&i) && e.lhs != RESULT {
                out.push(ErrorLabel::new(
                    ErrorKind::VariableMisuse,
                    format!("{} is defined but never reaches result", e.lhs),
                ));
            }
        }
    }

    // Primitive fiction.
    for e in &predicted.expressions {
        if let Some(why) = signature_violation(e) {
            out.push(ErrorLabel::new(ErrorKind::PrimitiveFiction, why));
        }
    }

    // Primitive confusion.
    let aligned = align(gold, predicted);
    for (&gi, &pj) in &aligned {
        let g = &gold.expressions[gi];
        let p = &predicted.expressions[pj];
        let same_shape = g.args.len() == p.args.len()
            && g.args.iter().zip(&p.args).all(|(a, b)| match (a, b) {
                (Arg::Var(_), Arg::Var(_)) => true,
                _ => a == b,
            });
        if same_shape && g.callee != p.callee {
            out.push(ErrorLabel::new(
                ErrorKind::PrimitiveConfusion,
                format!("{} used where {} was expected", p.callee, g.callee),
            ));
        }
    }

    // Omission.
    if predicted.len() < gold.len() {
        for (gi, g) in gold.expressions.iter().enumerate() {
            if !aligned.contains_key(&gi) {
                out.push(ErrorLabel::new(
                    ErrorKind::Omission,
                    format!("no counterpart for {} := {}", g.lhs, g.call_text()),
                ));
            }
        }
    }

    // Redundancy.
    if predicted.len() > gold.len() {
        out.push(ErrorLabel::new(
            ErrorKind::Redundancy,
            format!("{} expressions where {} suffice", predicted.len(), gold.len()),
        ));
    }

    // Incorrect meaning: an aligned node reads from the wrong antecedent.
    let mut divergent = Vec::new();
    for (&gi, &pj) in &aligned {
        let g = &gold.expressions[gi];
        let p = &predicted.expressions[pj];
        for (a, b) in g.args.iter().zip(&p.args) {
            let g_src = match a {
                Arg::Var(v) => definer(gold, v, gi),
                _ => None,
            };
            // Antecedents lost to an omission are already explained.
            if g_src.is_some_and(|s| !aligned.contains_key(&s)) {
                continue;
            }
            let p_src = match b {
                Arg::Var(v) => definer(predicted, v, pj),
                _ => None,
            };
            let consistent = match (g_src, p_src) {
                (Some(s), Some(t)) => aligned.get(&s) == Some(&t),
                (None, None) => matches!(a, Arg::Var(_)) == matches!(b, Arg::Var(_)),
                _ => false,
            };
            if !consistent {
                divergent.push(format!("{} reads {b} where {a} was expected", p.lhs));
            }
        }
    }
    if out.is_empty() && divergent.is_empty() {
        out.push(ErrorLabel::new(
            ErrorKind::IncorrectMeaning,
            "final expression differs from gold",
        ));
    }
    for d in divergent {
        out.push(ErrorLabel::new(ErrorKind::IncorrectMeaning, d));
    }
    out
}

/// First label, the one shown in single-label tables.
pub fn primary(labels: &[ErrorLabel]) -> Option<ErrorKind> {
    labels.first().map(|l| l.kind)
}
