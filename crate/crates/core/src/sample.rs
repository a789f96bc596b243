//! Scheme instantiation: random literals, the gold program and the question.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::formal::{parse_program, Arg, Expression, OutputType, ParamKind, PrimitiveId, Program};
use crate::question::generate_question;
use crate::scheme::{Scheme, TypedGraphLabel, FINAL_NODE, NODES};

/// Inclusive ranges the random literals are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiteralRanges {
    pub attr: (u32, u32),
    pub number: (u64, u64),
    pub k: (u64, u64),
}

impl Default for LiteralRanges {
    fn default() -> LiteralRanges {
        LiteralRanges {
            attr: (1, 999),
            number: (1, 999),
            k: (2, 9),
        }
    }
}

/// Most attribute literals a four-node sample can need (f2 takes two).
const MAX_ATTRS: u64 = 2 * NODES as u64;

impl LiteralRanges {
    pub fn validate(&self) -> Result<()> {
        let (a0, a1) = self.attr;
        if a0 > a1 || u64::from(a1 - a0) + 1 < MAX_ATTRS {
            return Err(Error::Config(format!("attr range must hold {MAX_ATTRS} distinct values")));
        }
        if self.number.0 == 0 || self.number.0 > self.number.1 {
            return Err(Error::Config("number range must be positive and ordered".into()));
        }
        if self.k.0 == 0 || self.k.0 > self.k.1 {
            return Err(Error::Config("k range must be positive and ordered".into()));
        }
        Ok(())
    }
}

/// Literals of one node. Only fields for slots with no incoming edge are set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub col: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val2: Option<u64>,
}

/// Which parameter field fills an unmatched slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Field {
    All,
    H,
    Val,
    Val2,
    K,
    Col,
}

/// Field for slot `slot` of `prim`, or `None` when the slot needs an edge.
pub(crate) fn slot_field(prim: PrimitiveId, slot: usize) -> Option<Field> {
    let params = &prim.spec().params;
    match params[slot] {
        ParamKind::Var(OutputType::View) => Some(Field::All),
        ParamKind::Var(_) => None,
        ParamKind::AttrLiteral => Some(Field::H),
        ParamKind::ColumnSlot => Some(Field::Col),
        ParamKind::KLiteral => Some(Field::K),
        ParamKind::NumberLiteral => {
            let first = params.iter().position(|k| *k == ParamKind::NumberLiteral);
            Some(if first == Some(slot) { Field::Val } else { Field::Val2 })
        }
    }
}

impl NodeParams {
    pub(crate) fn literal(&self, field: Field) -> Option<Arg> {
        match field {
            Field::All => Some(Arg::All),
            Field::H => self.h.map(Arg::Attr),
            Field::Col => self.col.map(Arg::Attr),
            Field::Val => self.val.map(Arg::Int),
            Field::Val2 => self.val2.map(Arg::Int),
            Field::K => self.k.map(Arg::Int),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub sample_id: String,
    pub scheme_id: String,
    pub typed_label: TypedGraphLabel,
    pub seed: u64,
    pub params: Vec<NodeParams>,
    pub gold: Program,
    pub question: String,
    pub primitive_set: BTreeSet<PrimitiveId>,
}

/// Line record for corpus files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: String,
    pub scheme_id: String,
    pub typed_label: TypedGraphLabel,
    pub seed: u64,
    pub params: Vec<NodeParams>,
    pub question: String,
    pub gold_program_text: String,
}

impl Sample {
    pub fn id_for(scheme_id: &str, seed: u64) -> String {
        format!("{scheme_id}@{seed}")
    }

    pub fn to_record(&self) -> SampleRecord {
        SampleRecord {
            sample_id: self.sample_id.clone(),
            scheme_id: self.scheme_id.clone(),
            typed_label: self.typed_label.clone(),
            seed: self.seed,
            params: self.params.clone(),
            question: self.question.clone(),
            gold_program_text: self.gold.to_string(),
        }
    }

    pub fn from_record(r: SampleRecord) -> Result<Sample> {
        let gold = parse_program(&r.gold_program_text)
            .map_err(|e| Error::Data(format!("{}: {e}", r.sample_id)))?
            .program;
        let primitive_set = gold
            .primitive_ids()
            .ok_or_else(|| Error::Data(format!("{}: gold uses non-opaque callees", r.sample_id)))?
            .into_iter()
            .collect();
        Ok(Sample {
            sample_id: r.sample_id,
            scheme_id: r.scheme_id,
            typed_label: r.typed_label,
            seed: r.seed,
            params: r.params,
            gold,
            question: r.question,
            primitive_set,
        })
    }
}

/// Generator keyed by a string, so streams for different keys are unrelated.
pub fn keyed_rng(key: &str) -> ChaCha8Rng {
    let digest = Sha256::digest(key.as_bytes());
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

/// Draws literals for every slot of every node that has no incoming edge.
/// Attribute literals are distinct within the sample.
pub fn draw_params(s: &Scheme, ranges: &LiteralRanges, rng: &mut impl Rng) -> Vec<NodeParams> {
    let mut used_attrs = BTreeSet::new();
    (0..NODES)
        .map(|node| {
            let filled: Vec<usize> = s
                .slot_matching
                .iter()
                .filter(|u| u.to == node)
                .map(|u| u.slot)
                .collect();
            draw_node_params(s.assignment[node], &filled, ranges, rng, &mut used_attrs)
        })
        .collect()
}

/// Literals for one node whose slots in `filled` come from edges.
pub fn draw_node_params(
    prim: PrimitiveId,
    filled: &[usize],
    ranges: &LiteralRanges,
    rng: &mut impl Rng,
    used_attrs: &mut BTreeSet<u32>,
) -> NodeParams {
    let mut fresh_attr = |rng: &mut dyn rand::RngCore| loop {
        let a = rng.gen_range(ranges.attr.0..=ranges.attr.1);
        if used_attrs.insert(a) {
            break a;
        }
    };
    let mut p = NodeParams::default();
    for slot in 0..prim.spec().arity() {
        if filled.contains(&slot) {
            continue;
        }
        match slot_field(prim, slot) {
            Some(Field::H) => p.h = Some(fresh_attr(rng)),
            Some(Field::Col) => p.col = Some(fresh_attr(rng)),
            Some(Field::Val) => p.val = Some(rng.gen_range(ranges.number.0..=ranges.number.1)),
            Some(Field::Val2) => p.val2 = Some(rng.gen_range(ranges.number.0..=ranges.number.1)),
            Some(Field::K) => p.k = Some(rng.gen_range(ranges.k.0..=ranges.k.1)),
            Some(Field::All) | None => {}
        }
    }
    p
}

/// Gold program: one expression per node in label order, typed counters for
/// intermediate names and `result` for the final node.
pub fn emit_program(s: &Scheme, params: &[NodeParams]) -> Result<Program> {
    let mut counters = [0usize; 4];
    let mut names: Vec<String> = Vec::with_capacity(NODES);
    let mut expressions = Vec::with_capacity(NODES);
    for node in 0..NODES {
        let prim = s.assignment[node];
        let spec = prim.spec();
        let mut args = Vec::with_capacity(spec.arity());
        for slot in 0..spec.arity() {
            let from_edge = s.slot_matching.iter().find(|u| u.to == node && u.slot == slot);
            let arg = match from_edge {
                Some(u) => Arg::Var(names[u.from].clone()),
                None => slot_field(prim, slot)
                    .and_then(|f| params[node].literal(f))
                    .ok_or_else(|| {
                        Error::Data(format!("{}: node {node} slot {slot} unfilled", s.scheme_id))
                    })?,
            };
            args.push(arg);
        }
        let lhs = if node == FINAL_NODE {
            "result".to_string()
        } else {
            let t = spec.output as usize;
            counters[t] += 1;
            format!("{}_{}", spec.output.prefix(), counters[t])
        };
        names.push(lhs.clone());
        expressions.push(Expression::new(lhs, prim.to_string(), args));
    }
    Ok(Program::new(expressions))
}

pub fn instantiate(s: &Scheme, seed: u64, ranges: &LiteralRanges) -> Result<Sample> {
    let mut rng = keyed_rng(&format!("sample|{}|{seed}", s.scheme_id));
    let params = draw_params(s, ranges, &mut rng);
    let gold = emit_program(s, &params)?;
    let question = generate_question(s, &params)?;
    Ok(Sample {
        sample_id: Sample::id_for(&s.scheme_id, seed),
        scheme_id: s.scheme_id.clone(),
        typed_label: s.typed_label.clone(),
        seed,
        params,
        gold,
        question,
        primitive_set: s.primitive_set(),
    })
}

/// One sample per scheme.
pub fn build_corpus(schemes: &[Scheme], seed: u64, ranges: &LiteralRanges) -> Result<Vec<Sample>> {
    ranges.validate()?;
    schemes.iter().map(|s| instantiate(s, seed, ranges)).collect()
}
