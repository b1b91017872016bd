use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use paragraph_core::dataset::{
    build_dataset, exclude_apps, read_jsonl, split_dataset, write_jsonl, ExecutorConfig, LabelSource, SyntheticLabeler,
};
use paragraph_core::eval::{evaluate, run_ablation};
use paragraph_core::frontend::{ast_to_json, parse_source, NodeKind};
use paragraph_core::gnn::{checkpoint_load, checkpoint_save, train, TrainConfig};
use paragraph_core::par::{self, Execution};
use paragraph_core::paragraph::{build_paragraph, paragraph_from_json, paragraph_to_json, Mode, ParamBindings};
use paragraph_core::pipeline::{self, PipelineConfig};
use paragraph_core::variantgen::{builtin_kernels, enumerate_dataset_points, read_manifest, write_variants, KernelSpec};

#[derive(Parser)]
#[command(name = "paragraph", version, about = "Weighted program graphs and runtime prediction for OpenMP kernels")]
struct Cli {
    /// Print a JSON result on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for data-parallel stages.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Overrides every seed of the invoked stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "warn", value_name = "LEVEL")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a C file and report or emit its AST.
    Parse {
        file: PathBuf,
        #[arg(long, value_name = "OUT")]
        emit_ast: Option<PathBuf>,
    },
    /// Build the graph of a C file.
    Graph(GraphArgs),
    /// Generate the OpenMP variants of kernels.
    Variants(VariantsArgs),
    /// Dataset operations.
    Dataset {
        #[command(subcommand)]
        command: DatasetCommand,
    },
    /// Train a model on a dataset.
    Train {
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
        /// Per-epoch RMSE curve.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on a dataset.
    Eval {
        checkpoint: PathBuf,
        data: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Train one model per graph mode and compare them.
    Ablate {
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
    },
    /// Predict the runtime of a graph.
    Predict {
        checkpoint: PathBuf,
        graph: PathBuf,
        #[arg(long)]
        teams: Option<u32>,
        #[arg(long)]
        threads: Option<u32>,
    },
    /// Run every stage from one config file.
    Pipeline { config: PathBuf },
}

#[derive(Args)]
struct GraphArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 1)]
    threads: u32,
    #[arg(long, default_value_t = 1)]
    teams: u32,
    /// Comma-separated NAME=VALUE bindings for loop bounds.
    #[arg(long, default_value = "")]
    bind: String,
    #[arg(long, default_value_t = 10)]
    default_trip: u64,
    #[arg(long, default_value = "para")]
    mode: Mode,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VariantsArgs {
    /// Kernel spec file; omit with --builtin.
    kernel: Option<PathBuf>,
    /// Use the built-in kernel corpus.
    #[arg(long, conflicts_with = "kernel")]
    builtin: bool,
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<i64>,
    #[arg(long, value_delimiter = ',', required = true)]
    teams: Vec<u32>,
    #[arg(long, value_delimiter = ',', required = true)]
    threads: Vec<u32>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Label every variant of a manifest and write JSON Lines.
    Build {
        #[arg(long)]
        variants: PathBuf,
        #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
        executor: Option<PathBuf>,
        /// Label with the synthetic cost model using this noise seed.
        #[arg(long)]
        synthetic: Option<u64>,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 10)]
        default_trip: u64,
        /// Applications to leave out.
        #[arg(long, value_delimiter = ',')]
        exclude: Vec<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

enum Failure {
    Input(String),
    Stage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Stage(_) => 3,
        }
    }
}

fn input(e: impl Display) -> Failure {
    Failure::Input(e.to_string())
}

fn stage(e: impl Display) -> Failure {
    Failure::Stage(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| stage(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| stage(format!("{}: {e}", path.display())))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("values serialize") + "\n"
}

fn train_config(path: Option<&Path>, seed: Option<u64>) -> Result<TrainConfig, Failure> {
    let mut cfg = match path {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| input(format!("{}: {e}", p.display())))?,
        None => TrainConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

struct Ctx {
    json: bool,
    seed: Option<u64>,
    exec: Execution,
}

impl Ctx {
    /// Prints `human` normally or `value` under `--json`.
    fn report(&self, value: Value, human: impl FnOnce() -> String) {
        if self.json {
            println!("{}", serde_json::to_string(&value).expect("values serialize"));
        } else {
            println!("{}", human());
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let ctx = Ctx {
        json: cli.json,
        seed: cli.seed,
        exec: if cli.jobs == Some(1) { Execution::Sequential } else { Execution::Parallel },
    };
    match cli.command {
        Command::Parse { file, emit_ast } => {
            let ast = parse_source(&read(&file)?).map_err(|e| input(format!("{}: {e}", file.display())))?;
            let doc = ast_to_json(&ast);
            if let Some(out) = &emit_ast {
                write(out, &pretty(&doc))?;
            }
            let functions: Vec<_> =
                ast.nodes().iter().filter(|n| n.kind == NodeKind::FunctionDecl).filter_map(|n| n.label.clone()).collect();
            let loops = ast.ids_of_kind(NodeKind::ForStmt).count();
            let value = if emit_ast.is_some() {
                json!({ "nodes": ast.len(), "functions": functions, "for_loops": loops })
            } else {
                doc
            };
            ctx.report(value, || format!("{}: {} nodes, functions {:?}, {loops} for loops", file.display(), ast.len(), functions));
        }
        Command::Graph(a) => {
            let mut bindings = ParamBindings::parse_list(&a.bind).map_err(input)?;
            bindings.default_trip = a.default_trip;
            let ast = parse_source(&read(&a.file)?).map_err(|e| input(format!("{}: {e}", a.file.display())))?;
            let g = build_paragraph(&ast, a.mode, &bindings, a.teams, a.threads).map_err(input)?;
            let doc = paragraph_to_json(&g);
            match &a.output {
                Some(out) => {
                    write(out, &pretty(&doc))?;
                    ctx.report(json!({ "nodes": g.num_nodes(), "edges": g.edges.len(), "output": out }), || {
                        format!("wrote {} ({} nodes, {} edges)", out.display(), g.num_nodes(), g.edges.len())
                    });
                }
                None => print!("{}", pretty(&doc)),
            }
        }
        Command::Variants(a) => {
            let specs = match (&a.kernel, a.builtin) {
                (Some(p), _) => vec![KernelSpec::from_json(&read(p)?).map_err(input)?],
                (None, true) => builtin_kernels(),
                (None, false) => return Err(input("give a kernel spec file or --builtin")),
            };
            let mut kernels = Vec::new();
            for s in specs {
                let vs = enumerate_dataset_points(&s, &a.sizes, &a.teams, &a.threads).map_err(input)?;
                kernels.push((s, vs));
            }
            let manifest = write_variants(&a.output, &kernels).map_err(stage)?;
            let n = manifest.entries.len();
            ctx.report(json!({ "variants": n, "output": a.output }), || format!("wrote {n} variants to {}", a.output.display()));
        }
        Command::Dataset { command: DatasetCommand::Build { variants, executor, synthetic, sigma, default_trip, exclude, output } } => {
            let entries = read_manifest(&variants).map_err(input)?;
            let source = match (executor, synthetic) {
                (Some(p), _) => {
                    let config: ExecutorConfig =
                        serde_json::from_str(&read(&p)?).map_err(|e| input(format!("{}: {e}", p.display())))?;
                    LabelSource::Measured { config, variants_dir: variants.clone(), work_dir: variants.join("build") }
                }
                (None, Some(seed)) => LabelSource::Synthetic {
                    labeler: SyntheticLabeler::default().with_sigma(sigma),
                    seed: ctx.seed.unwrap_or(seed),
                },
                (None, None) => return Err(input("give --executor or --synthetic")),
            };
            let built = build_dataset(&entries, &source, default_trip, ctx.exec).map_err(stage)?;
            for f in &built.failures {
                log::error!("{f}");
            }
            let points = exclude_apps(built.points, &exclude);
            if points.is_empty() {
                return Err(stage(format!("no data point could be labelled ({} failures)", built.failures.len())));
            }
            write_jsonl(&output, &points).map_err(stage)?;
            let failures = built.failures.len();
            ctx.report(json!({ "points": points.len(), "failures": failures, "output": output }), || {
                format!("wrote {} points to {} ({failures} failures)", points.len(), output.display())
            });
        }
        Command::Train { data, config, output, split_seed, curve } => {
            let cfg = train_config(config.as_deref(), ctx.seed)?;
            let points = read_jsonl(&data).map_err(input)?;
            let split = split_dataset(points.len(), ctx.seed.unwrap_or(split_seed)).map_err(input)?;
            let out = train(&points, &split, &cfg, ctx.exec).map_err(stage)?;
            checkpoint_save(&out.best, &output).map_err(stage)?;
            if let Some(c) = &curve {
                write(c, &pretty(&serde_json::to_value(&out.curve).expect("curves serialize")))?;
            }
            let best = &out.curve[out.best_epoch.saturating_sub(1).min(out.curve.len().saturating_sub(1))];
            ctx.report(
                json!({ "best_epoch": out.best_epoch, "val_rmse_ms": best.val_rmse_ms, "val_norm_rmse": best.val_norm_rmse, "output": output }),
                || format!("best epoch {} with validation RMSE {:.4} ms; wrote {}", out.best_epoch, best.val_rmse_ms, output.display()),
            );
        }
        Command::Eval { checkpoint, data, output, csv } => {
            let model = checkpoint_load(&checkpoint).map_err(input)?;
            let points = read_jsonl(&data).map_err(input)?;
            let (report, _) = evaluate(&model, &points, ctx.exec).map_err(stage)?;
            write(&output, &pretty(&serde_json::to_value(&report).expect("reports serialize")))?;
            if let Some(c) = &csv {
                write(c, &report.bins_csv())?;
            }
            ctx.report(serde_json::to_value(&report).expect("reports serialize"), || {
                format!("RMSE {:.4} ms over {} points; wrote {}", report.rmse_ms, report.n, output.display())
            });
        }
        Command::Ablate { data, config, output, split_seed } => {
            let cfg = train_config(config.as_deref(), ctx.seed)?;
            let points = read_jsonl(&data).map_err(input)?;
            let split = split_dataset(points.len(), ctx.seed.unwrap_or(split_seed)).map_err(input)?;
            let table = run_ablation(&points, &split, &cfg, ctx.exec).map_err(stage)?;
            let value = serde_json::to_value(&table).expect("reports serialize");
            write(&output, &pretty(&value))?;
            let summary: Vec<_> =
                table.rows.iter().map(|r| json!({ "mode": r.mode, "final_val_rmse_ms": r.final_val_rmse_ms })).collect();
            ctx.report(json!({ "rows": summary, "output": output }), || {
                table.rows.iter().map(|r| format!("{:<5} final {:.4} ms, best {:.4} ms", r.mode.as_str(), r.final_val_rmse_ms, r.best_val_rmse_ms)).collect::<Vec<_>>().join("\n")
            });
        }
        Command::Predict { checkpoint, graph, teams, threads } => {
            let model = checkpoint_load(&checkpoint).map_err(input)?;
            let text = read(&graph)?;
            let value: Value = serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", graph.display())))?;
            let mut g = paragraph_from_json(&value).map_err(|e| input(format!("{}: {e}", graph.display())))?;
            if let Some(t) = teams {
                g.features.teams = t;
            }
            if let Some(t) = threads {
                g.features.threads = t;
            }
            if g.features.teams == 0 || g.features.threads == 0 {
                return Err(input("teams and threads must be at least 1"));
            }
            let us = model.predict_us(&g).map_err(stage)?;
            ctx.report(json!({ "predicted_ms": us / 1000.0, "predicted_us": us }), || format!("{:.6} ms", us / 1000.0));
        }
        Command::Pipeline { config } => {
            let mut cfg = PipelineConfig::from_json(&read(&config)?).map_err(input)?;
            cfg.resolve_relative_to(config.parent().unwrap_or(Path::new(".")));
            if let Some(s) = ctx.seed {
                cfg.train.seed = s;
                cfg.split_seed = s;
                if let pipeline::Labels::Synthetic { seed, .. } = &mut cfg.labels {
                    *seed = s;
                }
            }
            cfg.validate().map_err(input)?;
            let summary = pipeline::run(&cfg, ctx.exec).map_err(stage)?;
            ctx.report(serde_json::to_value(&summary).expect("summaries serialize"), || {
                format!(
                    "{} points, best epoch {}, validation RMSE {:.4} ms; artifacts in {}",
                    summary.points,
                    summary.best_epoch,
                    summary.report.rmse_ms,
                    cfg.output_dir.display()
                )
            });
        }
    }
    Ok(())
}

fn error_line(code: u8, kind: &str, message: &str) -> String {
    json!({ "error": { "code": code, "kind": kind, "message": message } }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let first = e.to_string().lines().next().unwrap_or("usage error").trim_start_matches("error: ").to_string();
            eprintln!("{}", error_line(1, "usage", &first));
            return ExitCode::from(1);
        }
    };
    env_logger::Builder::new().filter_level(cli.log_level).format_timestamp(None).init();
    if let Some(j) = cli.jobs {
        par::configure_threads(j);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (kind, msg) = match &f {
                Failure::Input(m) => ("input", m),
                Failure::Stage(m) => ("stage", m),
            };
            eprintln!("error: {msg}");
            eprintln!("{}", error_line(f.code(), kind, msg));
            ExitCode::from(f.code())
        }
    }
}
