//! The four pipeline stages. Each reads its inputs from files, writes its
//! outputs to files and returns a summary for printing.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use n2f_core::checker::{judge_program, normalize_names, Status};
use n2f_core::classify::{classify, primary, ErrorKind, ErrorLabel};
use n2f_core::config::RunConfig;
use n2f_core::formal::{parse_program, NamingKind, NamingScheme, Program};
use n2f_core::metrics::{build_report, render_text, Mode, Report, RunSummary};
use n2f_core::sample::{build_corpus, Sample, SampleRecord};
use n2f_core::scheme::{base_graphs, enumerate_with, Scheme};
use n2f_core::task::{gap_fraction, GapSetting, Setting, TaskContext};
use n2f_gateway::{complete_all, CompletionModel, Query};
use serde::{Deserialize, Serialize};

use crate::files::{lines_hash, read_records, record_lines, write_lines, write_records, Header};
use crate::Failure;

/// Scheme count the enumeration is expected to reproduce under --strict.
pub const EXPECTED_SCHEMES: usize = 323;
pub const EXPECTED_LABELS: usize = 18;

pub const SCHEMES_FILE: &str = "schemes.jsonl";
pub const CORPUS_FILE: &str = "corpus.jsonl";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerateSummary {
    pub schemes: usize,
    pub labels: usize,
    pub samples: usize,
    pub corpus_hash: String,
}

impl std::fmt::Display for GenerateSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} schemes, {} typed labels, {} samples",
            self.schemes, self.labels, self.samples
        )
    }
}

pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig, Failure> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::io(p, e))?;
            toml::from_str(&text).map_err(|e| Failure::validation(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Enumerates schemes, instantiates one sample per scheme and writes both
/// to `out_dir`. With `strict`, count mismatches fail before anything is
/// written.
pub fn generate(cfg: &RunConfig, out_dir: &Path, strict: bool) -> Result<GenerateSummary, Failure> {
    cfg.validate()?;
    let schemes = enumerate_with(&base_graphs(), &cfg.rules);
    let labels: BTreeSet<String> = schemes.iter().map(|s| s.typed_label.to_string()).collect();
    if strict {
        if schemes.len() != EXPECTED_SCHEMES {
            return Err(Failure::validation(format!(
                "enumeration oracle failed: {} schemes, expected {EXPECTED_SCHEMES}",
                schemes.len()
            )));
        }
        if labels.len() != EXPECTED_LABELS {
            return Err(Failure::validation(format!(
                "typed-label oracle failed: {} labels, expected {EXPECTED_LABELS}",
                labels.len()
            )));
        }
    }
    let corpus = build_corpus(&schemes, cfg.seed, &cfg.ranges)?;
    let records: Vec<SampleRecord> = corpus.iter().map(Sample::to_record).collect();
    let lines = record_lines(&records)?;
    let corpus_hash = lines_hash(&lines);
    write_records(&out_dir.join(SCHEMES_FILE), &Header::new("schemes", cfg, &corpus_hash), &schemes)?;
    write_lines(&out_dir.join(CORPUS_FILE), &Header::new("corpus", cfg, &corpus_hash), &lines)?;
    Ok(GenerateSummary {
        schemes: schemes.len(),
        labels: labels.len(),
        samples: corpus.len(),
        corpus_hash,
    })
}

/// A corpus file with its lineage, verified against its own records.
pub struct Corpus {
    pub header: Header,
    pub samples: Vec<Sample>,
}

pub fn read_corpus(path: &Path) -> Result<Corpus, Failure> {
    let (header, records, raw) = read_records::<SampleRecord>(path, "corpus")?;
    if lines_hash(&raw) != header.corpus_hash {
        return Err(Failure::validation(format!(
            "{}: records do not match the corpus hash in the header",
            path.display()
        )));
    }
    if header.config.hash() != header.config_hash {
        return Err(Failure::validation(format!("{}: config does not match its hash", path.display())));
    }
    let samples = records
        .into_iter()
        .map(Sample::from_record)
        .collect::<n2f_core::Result<Vec<_>>>()?;
    Ok(Corpus { header, samples })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task_id: String,
    pub test_sample_id: String,
    pub mode: Mode,
    pub setting: Setting,
    pub gap_setting: GapSetting,
    pub naming_kind: NamingKind,
    pub demo_ids: Vec<String>,
    pub has_gap: bool,
    pub prompt_hash: String,
    pub prompt: String,
    pub gold_program_text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TasksSummary {
    pub tasks: usize,
    pub gap_fraction: f64,
}

impl std::fmt::Display for TasksSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} tasks, gap fraction {:.2}", self.tasks, self.gap_fraction)
    }
}

pub fn tasks_file_name(mode: Mode, setting: Setting) -> String {
    format!("tasks-{}-{}.jsonl", mode.as_str(), setting.as_str())
}

pub fn build_tasks(corpus_path: &Path, mode: Mode, setting: Setting, out: &Path) -> Result<TasksSummary, Failure> {
    let corpus = read_corpus(corpus_path)?;
    let cfg = &corpus.header.config;
    let schemes: Vec<Scheme> = enumerate_with(&base_graphs(), &cfg.rules);
    let ctx = TaskContext {
        corpus: &corpus.samples,
        schemes: &schemes,
        config: cfg,
    };
    let tasks = ctx.build_run(mode, setting)?;
    let gold: BTreeMap<&str, String> = corpus
        .samples
        .iter()
        .map(|s| (s.sample_id.as_str(), s.gold.to_string()))
        .collect();
    let records: Vec<TaskRecord> = tasks
        .iter()
        .map(|t| TaskRecord {
            task_id: t.task_id.clone(),
            test_sample_id: t.test_sample_id.clone(),
            mode: t.mode,
            setting: t.setting,
            gap_setting: t.gap_setting,
            naming_kind: t.naming,
            demo_ids: t.demo_sample_ids.clone(),
            has_gap: t.has_gap,
            prompt_hash: t.prompt_hash.clone(),
            prompt: t.prompt.clone(),
            gold_program_text: gold[t.test_sample_id.as_str()].clone(),
        })
        .collect();
    let mut header = Header::new("tasks", cfg, &corpus.header.corpus_hash);
    header.mode = Some(mode);
    header.setting = Some(setting);
    write_records(out, &header, &records)?;
    Ok(TasksSummary {
        tasks: records.len(),
        gap_fraction: gap_fraction(&tasks),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub task_id: String,
    pub test_sample_id: String,
    pub model: String,
    pub raw_output: Option<String>,
    /// Statements recovered from the output, as written.
    pub extracted_program: Option<String>,
    /// None when no response was obtained.
    pub status: Option<Status>,
    pub canonical_predicted: Vec<String>,
    pub diagnostics: Vec<String>,
    pub error_labels: Vec<ErrorLabel>,
    pub primary_error: Option<ErrorKind>,
    pub transport_error: Option<String>,
}

impl ResultRecord {
    fn empty() -> ResultRecord {
        ResultRecord {
            task_id: String::new(),
            test_sample_id: String::new(),
            model: String::new(),
            raw_output: None,
            extracted_program: None,
            status: None,
            canonical_predicted: Vec::new(),
            diagnostics: Vec::new(),
            error_labels: Vec::new(),
            primary_error: None,
            transport_error: None,
        }
    }
}

/// Per-task timing, kept apart from results so replays stay byte-identical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub task_id: String,
    pub latency_ms: u64,
    pub attempts: u32,
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalSummary {
    pub total: usize,
    pub correct: usize,
    pub incorrect: usize,
    pub malformed: usize,
    pub failed: usize,
}

impl std::fmt::Display for EvalSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} tasks: {} correct, {} incorrect, {} malformed, {} without response",
            self.total, self.correct, self.incorrect, self.malformed, self.failed
        )
    }
}

pub fn results_file_name(model: &str, mode: Mode, setting: Setting) -> String {
    format!("results-{model}-{}-{}.jsonl", mode.as_str(), setting.as_str())
}

pub fn timing_path(results: &Path) -> PathBuf {
    results.with_extension("timing.jsonl")
}

/// Judges one raw output and labels it when wrong.
pub fn score_output(gold: &Program, raw: &str, naming: &NamingScheme) -> ResultRecord {
    let mut r = ResultRecord {
        raw_output: Some(raw.to_string()),
        ..ResultRecord::empty()
    };
    match parse_program(raw) {
        Ok(parsed) => {
            let predicted = normalize_names(&parsed.program, naming);
            let v = judge_program(gold, &predicted);
            r.extracted_program = Some(parsed.program.to_string());
            r.status = Some(v.status);
            r.canonical_predicted = v.canonical_predicted;
            r.diagnostics = v.diagnostics;
            if !parsed.missing_semicolon.is_empty() {
                r.diagnostics
                    .push(format!("{} statements without semicolon", parsed.missing_semicolon.len()));
            }
            r.error_labels = match v.status {
                Status::Correct => Vec::new(),
                Status::Incorrect => classify(gold, &predicted),
                Status::Malformed => vec![ErrorLabel::unparseable(r.diagnostics.join("; "))],
            };
        }
        Err(e) => {
            r.status = Some(Status::Malformed);
            r.diagnostics = vec![e.to_string()];
            r.error_labels = vec![ErrorLabel::unparseable(e.to_string())];
        }
    }
    r.primary_error = primary(&r.error_labels);
    r
}

/// Runs every task through `model` and writes results plus a timing
/// sidecar. Tasks without a response are recorded and reported as a
/// transport failure after the files are written.
pub fn eval(tasks_path: &Path, model: &dyn CompletionModel, parallelism: usize, out: &Path) -> Result<EvalSummary, Failure> {
    let (header, tasks, _) = read_records::<TaskRecord>(tasks_path, "tasks")?;
    let cfg = &header.config;
    let golds = tasks
        .iter()
        .map(|t| {
            parse_program(&t.gold_program_text)
                .map(|p| p.program)
                .map_err(|e| Failure::validation(format!("{}: bad gold: {e}", t.task_id)))
        })
        .collect::<Result<Vec<Program>, Failure>>()?;
    let mut namings = HashMap::new();
    for t in &tasks {
        if !namings.contains_key(&t.naming_kind) {
            namings.insert(t.naming_kind, cfg.naming.scheme(t.naming_kind)?);
        }
    }
    let queries: Vec<Query> = tasks
        .iter()
        .zip(&golds)
        .map(|(t, g)| Query {
            task_id: &t.task_id,
            prompt: &t.prompt,
            gold: g,
            naming: &namings[&t.naming_kind],
        })
        .collect();
    let answers = complete_all(model, &queries, parallelism);

    let mut results = Vec::with_capacity(tasks.len());
    let mut timing = Vec::with_capacity(tasks.len());
    let mut summary = EvalSummary {
        total: tasks.len(),
        correct: 0,
        incorrect: 0,
        malformed: 0,
        failed: 0,
    };
    for ((t, q), answer) in tasks.iter().zip(&queries).zip(answers) {
        let mut r = match &answer {
            Ok(c) => score_output(q.gold, &c.text, q.naming),
            Err(e) => ResultRecord {
                transport_error: Some(e.to_string()),
                ..ResultRecord::empty()
            },
        };
        r.task_id = t.task_id.clone();
        r.test_sample_id = t.test_sample_id.clone();
        r.model = model.model_id().to_string();
        match r.status {
            Some(Status::Correct) => summary.correct += 1,
            Some(Status::Incorrect) => summary.incorrect += 1,
            Some(Status::Malformed) => summary.malformed += 1,
            None => summary.failed += 1,
        }
        let (latency_ms, attempts, cached) = match &answer {
            Ok(c) => (c.latency_ms, c.attempts, c.cached),
            Err(n2f_gateway::GatewayError::Transport { attempts, .. }) => (0, *attempts, false),
            Err(_) => (0, 0, false),
        };
        timing.push(TimingRecord {
            task_id: t.task_id.clone(),
            latency_ms,
            attempts,
            cached,
        });
        results.push(r);
    }
    let mut out_header = Header::new("results", cfg, &header.corpus_hash);
    out_header.mode = header.mode;
    out_header.setting = header.setting;
    out_header.model = Some(model.model_id().to_string());
    write_records(out, &out_header, &results)?;
    let mut timing_header = out_header.clone();
    timing_header.kind = "timing".into();
    write_records(&timing_path(out), &timing_header, &timing)?;
    if summary.failed > 0 {
        return Err(Failure::transport(format!(
            "{} of {} tasks got no response; results written to {}",
            summary.failed,
            summary.total,
            out.display()
        )));
    }
    Ok(summary)
}

/// Reads result files, refusing mixed lineages, and writes the report as
/// JSON and plain text to `out_dir`.
pub fn score(result_paths: &[PathBuf], out_dir: &Path) -> Result<Report, Failure> {
    if result_paths.is_empty() {
        return Err(Failure::validation("no result files given"));
    }
    let mut runs = Vec::new();
    let mut lineage: Option<(String, String)> = None;
    let mut models = BTreeSet::new();
    for p in result_paths {
        let (h, records, _) = read_records::<ResultRecord>(p, "results")?;
        let this = (h.config_hash.clone(), h.corpus_hash.clone());
        match &lineage {
            None => lineage = Some(this),
            Some(l) if *l != this => {
                return Err(Failure::validation(format!(
                    "{} comes from config {} / corpus {}, expected config {} / corpus {}",
                    p.display(),
                    short(&this.0),
                    short(&this.1),
                    short(&l.0),
                    short(&l.1)
                )))
            }
            Some(_) => {}
        }
        let (mode, setting) = match (h.mode, h.setting) {
            (Some(m), Some(s)) => (m, s),
            _ => return Err(Failure::validation(format!("{}: header lacks mode or setting", p.display()))),
        };
        let model = h.model.clone().unwrap_or_default();
        models.insert(model.clone());
        let correct = records.iter().filter(|r| r.status == Some(Status::Correct)).count() as u64;
        let mut run = RunSummary::new(
            format!("{model}/{}/{}", mode.as_str(), setting.as_str()),
            mode,
            setting.as_str(),
            correct,
            records.len() as u64,
        );
        for r in &records {
            if let Some(k) = r.primary_error {
                *run.errors.entry(k).or_insert(0) += 1;
            }
        }
        runs.push(run);
    }
    let (config_hash, corpus_hash) = lineage.expect("at least one file");
    let mut meta = BTreeMap::new();
    meta.insert("config_hash".to_string(), config_hash);
    meta.insert("corpus_hash".to_string(), corpus_hash);
    meta.insert("models".to_string(), models.into_iter().collect::<Vec<_>>().join(","));
    let report = build_report(&runs, meta)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Failure::io(out_dir, e))?;
    let json = serde_json::to_string_pretty(&report)? + "\n";
    let p = out_dir.join("report.json");
    std::fs::write(&p, json).map_err(|e| Failure::io(&p, e))?;
    let p = out_dir.join("report.txt");
    std::fs::write(&p, render_text(&report)).map_err(|e| Failure::io(&p, e))?;
    Ok(report)
}

fn short(h: &str) -> &str {
    &h[..h.len().min(12)]
}
