//! Run configuration shared by every pipeline stage.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::formal::{NamingKind, NamingScheme, DEFAULT_ANOMALOUS, DEFAULT_CROSS};
use crate::sample::LiteralRanges;
use crate::scheme::Rules;
use crate::task::GapDefinition;

/// How strictly the full-gap setting is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FullGapMode {
    /// Every demonstration's label differs from the test's.
    StrictAll,
    /// At least one demonstration's label differs.
    Any,
}

/// Prompt wording. Hashed into every task so scores trace to exact text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptTemplate {
    pub version: String,
    pub header: String,
    pub primitive_section: String,
    pub demo_section: String,
    pub test_section: String,
    pub question_label: String,
    pub program_label: String,
}

impl Default for PromptTemplate {
    fn default() -> PromptTemplate {
        PromptTemplate {
            version: "1".into(),
            header: "Convert the question into expressions of the formal language shown in the \
                     examples. Each expression has the form `variable := name (arguments);`. \
                     The final expression must assign to `result`. Answer with the expressions only."
                .into(),
            primitive_section: "Examples of single primitives:".into(),
            demo_section: "Examples:".into(),
            test_section: "Now convert this question:".into(),
            question_label: "Question:".into(),
            program_label: "Expressions:".into(),
        }
    }
}

impl PromptTemplate {
    pub fn hash(&self) -> String {
        hash_json(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NamingTables {
    pub anomalous: BTreeMap<String, String>,
    pub cross: BTreeMap<String, String>,
}

impl Default for NamingTables {
    fn default() -> NamingTables {
        let table = |names: [&str; 10]| {
            names
                .iter()
                .enumerate()
                .map(|(i, n)| (format!("f{i}"), n.to_string()))
                .collect()
        };
        NamingTables {
            anomalous: table(DEFAULT_ANOMALOUS),
            cross: table(DEFAULT_CROSS),
        }
    }
}

impl NamingTables {
    pub fn scheme(&self, kind: NamingKind) -> Result<NamingScheme> {
        match kind {
            NamingKind::Opaque => Ok(NamingScheme::opaque()),
            NamingKind::Anomalous => NamingScheme::from_table(kind, &self.anomalous),
            NamingKind::CrossMapping => NamingScheme::from_table(kind, &self.cross),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskConfig {
    pub gap_definition: GapDefinition,
    /// Only consulted under the any-differs gap definition.
    pub full_gap: FullGapMode,
    /// Rejected draws before falling back to exhaustive search.
    pub max_rejections: u32,
    /// Extra instantiations per scheme made available when the corpus alone
    /// cannot satisfy the zero-gap setting.
    pub augment_instances: u32,
}

impl Default for TaskConfig {
    fn default() -> TaskConfig {
        TaskConfig {
            gap_definition: GapDefinition::Unseen,
            full_gap: FullGapMode::StrictAll,
            max_rejections: 10_000,
            augment_instances: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub ranges: LiteralRanges,
    pub rules: Rules,
    pub naming: NamingTables,
    pub tasks: TaskConfig,
    pub prompt: PromptTemplate,
    /// Path of an endpoint config file, when evaluating against a live model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.ranges.validate()?;
        self.naming.scheme(NamingKind::Anomalous)?;
        self.naming.scheme(NamingKind::CrossMapping)?;
        if self.tasks.max_rejections == 0 {
            return Err(Error::Config("max_rejections must be positive".into()));
        }
        Ok(())
    }

    /// Hash of everything that shapes outputs. The endpoint reference is left
    /// out: it names where answers come from, and the model id is recorded
    /// separately with each result.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.endpoint = None;
        hash_json(&c)
    }
}

pub fn hash_json<T: Serialize>(v: &T) -> String {
    let bytes = serde_json::to_vec(v).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

pub fn hash_bytes(b: &[u8]) -> String {
    hex::encode(Sha256::digest(b))
}
