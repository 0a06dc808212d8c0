use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use asg_core::harness::{pipeline, ExperimentConfig};
use asg_core::{SkillTask, TaskKind};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "asg", version, about = "Adverb-grounded skill refinement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML); missing fields take the task's defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Task to use when no config file is given.
    #[arg(long, value_parser = parse_task)]
    task: Option<TaskKind>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled grounding dataset (JSON Lines).
    GenData {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "dataset.jsonl")]
        out: PathBuf,
    },
    /// Pre-train the Puck-Slide skill and write it as JSON.
    PretrainSkill {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "skill.json")]
        out: PathBuf,
    },
    /// Train a grounding model. For Puck-Slide without a skill file the
    /// pre-trained skill is written next to the model as `skill.json`.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "model.json")]
        out: PathBuf,
    },
    /// Run the seeded grounded-vs-reward search comparison.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Output directory; defaults to the config's `out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the trial count.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Score a model on a fresh held-out dataset.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Model to score; defaults to the config's `model`, else trains one.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value = "eval.json")]
        out: PathBuf,
    },
    /// Print the effective config as TOML.
    ShowConfig {
        #[command(flatten)]
        common: Common,
    },
    /// Serve coaching sessions over HTTP.
    Serve {
        #[arg(long, default_value_t = 8750)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Directory of model files (and Puck-Slide skill files).
        #[arg(long, default_value = "models")]
        model_dir: PathBuf,
        /// Where session logs are kept; in-memory only when absent.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Origin allowed to call the API from a browser (`*` for any).
        #[arg(long)]
        cors_origin: Option<String>,
        #[arg(long, default_value_t = 64)]
        max_sessions: usize,
    },
}

fn parse_task(s: &str) -> Result<TaskKind, String> {
    s.parse()
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match (&c.config, c.task) {
        (Some(path), _) => {
            let cfg = ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
            if c.task.is_some_and(|t| t != cfg.task) {
                bail!("--task {} conflicts with the config's task {}", c.task.unwrap(), cfg.task);
            }
            cfg
        }
        (None, Some(task)) => ExperimentConfig::defaults_for(task),
        (None, None) => ExperimentConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn produced(paths: &[PathBuf]) -> Result<()> {
    for p in paths {
        if !p.is_file() {
            bail!("expected output {} was not written", p.display());
        }
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn task_for(cfg: &ExperimentConfig) -> Result<Box<dyn SkillTask>> {
    Ok(pipeline::build_task(cfg)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData { common, out } => {
            let cfg = load_config(&common)?;
            let task = task_for(&cfg)?;
            let mut c = cfg.clone();
            c.dataset = None;
            let data = pipeline::dataset(&c, task.as_ref())?;
            ensure_parent(&out)?;
            data.save(&out)?;
            println!("{} samples ({} labelled)", data.samples.len(), data.header.labelled);
            produced(&[out])
        }
        Command::PretrainSkill { common, out } => {
            let cfg = load_config(&common)?;
            let report = pipeline::pretrain(&cfg)?;
            ensure_parent(&out)?;
            report.skill.save(&out)?;
            let report_path = out.with_extension("report.json");
            let summary = serde_json::json!({
                "solved": report.solved(),
                "attempted": report.goals.len(),
                "excluded": report.excluded,
                "degenerate": report.degenerate,
                "goals": report.goals,
            });
            std::fs::write(&report_path, serde_json::to_string_pretty(&summary)?)?;
            println!("solved {} of {} goals ({} off-table)", report.solved(), report.goals.len(), report.excluded.len());
            if report.degenerate {
                println!("warning: fewer exemplars than neighbours; the skill cannot interpolate");
            }
            produced(&[out, report_path])
        }
        Command::Train { common, out } => {
            let cfg = load_config(&common)?;
            ensure_parent(&out)?;
            let mut outputs = vec![out.clone()];
            let task: Box<dyn SkillTask> = if cfg.task == TaskKind::PuckSlide && cfg.skill.is_none() {
                // The model is only usable with the skill it was trained on.
                let puck = pipeline::puck_task(&cfg)?;
                let skill_path = out.with_file_name("skill.json");
                puck.skill.save(&skill_path)?;
                outputs.push(skill_path);
                Box::new(puck)
            } else {
                task_for(&cfg)?
            };
            let data = pipeline::dataset(&cfg, task.as_ref())?;
            let (model, report) = pipeline::train_model(&cfg, task.as_ref(), &data)?;
            model.save(&out)?;
            match (report.epoch_losses.first(), report.epoch_losses.last()) {
                (Some(a), Some(b)) => println!("{} regressor, loss {a:.4} -> {b:.4}", model.kind()),
                _ => println!("{} regressor", model.kind()),
            }
            produced(&outputs)
        }
        Command::Compare { common, out, trials } => {
            let mut cfg = load_config(&common)?;
            if let Some(t) = trials {
                cfg.trials = t;
                cfg.seeds.clear();
            }
            cfg.validate()?;
            let out = out.unwrap_or_else(|| cfg.out_dir.clone());
            let task = task_for(&cfg)?;
            let model = pipeline::model(&cfg, task.as_ref())?;
            let result = pipeline::run_comparison(&cfg, task.as_ref(), &model)?;
            std::fs::create_dir_all(&out)?;
            let files = pipeline::write_comparison(&out, &cfg, &result)?;
            print!("{}", result.summary.table());
            for p in &files {
                if !p.is_file() {
                    bail!("expected output {} was not written", p.display());
                }
            }
            println!("wrote {} files under {}", files.len(), out.display());
            Ok(())
        }
        Command::Eval { common, model, out } => {
            let mut cfg = load_config(&common)?;
            if model.is_some() {
                cfg.model = model;
            }
            let task = task_for(&cfg)?;
            let m = pipeline::model(&cfg, task.as_ref())?;
            let data = pipeline::holdout_dataset(&cfg, task.as_ref())?;
            let report = pipeline::evaluate(&m, task.as_ref(), &data)?;
            let text = serde_json::to_string_pretty(&report)?;
            ensure_parent(&out)?;
            std::fs::write(&out, &text)?;
            println!("{text}");
            produced(&[out])
        }
        Command::ShowConfig { common } => {
            print!("{}", load_config(&common)?.to_toml());
            Ok(())
        }
        Command::Serve { port, host, model_dir, data_dir, cors_origin, max_sessions } => {
            let opts = asg_service::ServeOptions {
                addr: SocketAddr::new(host, port),
                model_dir,
                data_dir,
                config: asg_service::ServiceConfig { max_sessions, cors_origin, ..Default::default() },
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(asg_service::serve(opts))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
