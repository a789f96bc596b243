use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use n2f_cli::pipeline::{self, CORPUS_FILE};
use n2f_cli::Failure;
use n2f_core::metrics::{render_text, Mode};
use n2f_core::task::Setting;
use n2f_gateway::{mock_model, CompletionModel, EndpointConfig, HttpModel, MockKind, ResponseCache, UreqTransport};

#[derive(Parser)]
#[command(name = "n2f", version, about = "Decomposition and composition benchmark for natural-to-formal conversion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate schemes and write the sample corpus.
    Generate {
        /// Run config in TOML; defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Fail unless the expected scheme and label counts are reproduced.
        #[arg(long)]
        strict: bool,
    },
    /// Build one task per sample for a mode and setting.
    Tasks {
        #[arg(long, default_value_t = format!("out/{CORPUS_FILE}"))]
        corpus: String,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, value_enum)]
        setting: SettingArg,
        /// Task file; defaults to tasks-<mode>-<setting>.jsonl next to the corpus.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Query a model for every task and judge the answers.
    Eval {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long, value_enum, conflicts_with = "endpoint", required_unless_present = "endpoint")]
        mock: Option<MockArg>,
        /// Endpoint config in TOML.
        #[arg(long)]
        endpoint: Option<PathBuf>,
        /// Response cache directory for endpoint runs.
        #[arg(long, requires = "endpoint")]
        cache_dir: Option<PathBuf>,
        /// Concurrent requests; endpoint runs default to the endpoint config.
        #[arg(long)]
        parallelism: Option<usize>,
        /// Results file; defaults to results-<model>-<mode>-<setting>.jsonl next to the tasks.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute metrics over result files.
    Score {
        #[arg(required = true)]
        results: Vec<PathBuf>,
        /// Directory for report.json and report.txt.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Dc,
    C,
}

#[derive(Clone, Copy, ValueEnum)]
enum SettingArg {
    Base,
    Gap0,
    Gap100,
    Anomalous,
    Cross,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum MockArg {
    GoldOracle,
    Confuser,
    Omitter,
    Babbler,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Dc => Mode::Dc,
            ModeArg::C => Mode::C,
        }
    }
}

impl From<SettingArg> for Setting {
    fn from(s: SettingArg) -> Setting {
        match s {
            SettingArg::Base => Setting::Base,
            SettingArg::Gap0 => Setting::Gap0,
            SettingArg::Gap100 => Setting::Gap100,
            SettingArg::Anomalous => Setting::Anomalous,
            SettingArg::Cross => Setting::Cross,
        }
    }
}

impl From<MockArg> for MockKind {
    fn from(m: MockArg) -> MockKind {
        match m {
            MockArg::GoldOracle => MockKind::GoldOracle,
            MockArg::Confuser => MockKind::Confuser,
            MockArg::Omitter => MockKind::Omitter,
            MockArg::Babbler => MockKind::Babbler,
        }
    }
}

fn sibling(of: &std::path::Path, name: &str) -> PathBuf {
    of.parent().unwrap_or_else(|| std::path::Path::new(".")).join(name)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate {
            config,
            seed,
            out,
            strict,
        } => {
            let cfg = pipeline::load_config(config.as_deref(), seed)?;
            let s = pipeline::generate(&cfg, &out, strict)?;
            println!("{s}");
        }
        Command::Tasks {
            corpus,
            mode,
            setting,
            out,
        } => {
            let corpus = PathBuf::from(corpus);
            let (mode, setting) = (Mode::from(mode), Setting::from(setting));
            let out = out.unwrap_or_else(|| sibling(&corpus, &pipeline::tasks_file_name(mode, setting)));
            let s = pipeline::build_tasks(&corpus, mode, setting, &out)?;
            println!("{s}");
        }
        Command::Eval {
            tasks,
            mock,
            endpoint,
            cache_dir,
            parallelism,
            out,
        } => {
            let (model, default_parallelism): (Box<dyn CompletionModel>, usize) = match (mock, endpoint) {
                (Some(m), _) => (mock_model(m.into()), 4),
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| Failure::io(&path, e))?;
                    let cfg: EndpointConfig =
                        toml::from_str(&text).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
                    let cache = cache_dir.map(ResponseCache::open).transpose()?;
                    let p = cfg.parallelism;
                    (Box::new(HttpModel::new(cfg, Box::new(UreqTransport), cache)?), p)
                }
                (None, None) => return Err(Failure::validation("one of --mock or --endpoint is required")),
            };
            let out = match out {
                Some(o) => o,
                None => {
                    let (h, _, _) = n2f_cli::files::read_records::<pipeline::TaskRecord>(&tasks, "tasks")?;
                    let (mode, setting) = h
                        .mode
                        .zip(h.setting)
                        .ok_or_else(|| Failure::validation("task file header lacks mode or setting"))?;
                    let name = pipeline::results_file_name(model.model_id(), mode, setting);
                    sibling(&tasks, &name)
                }
            };
            let s = pipeline::eval(&tasks, model.as_ref(), parallelism.unwrap_or(default_parallelism), &out)?;
            println!("{s}");
        }
        Command::Score { results, out } => {
            let r = pipeline::score(&results, &out)?;
            print!("{}", render_text(&r));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // Usage errors exit with the validation code; 2 is reserved for
    // infeasible demonstration selection.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(n2f_cli::EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
