//! File-based CLI over the library: caption parsing, prompt construction,
//! pseudo-label generation, query selection, matching, recall evaluation,
//! the three mechanism experiments, and the gradient suite.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on I/O errors.

use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ndarray::Array2;
use serde::Serialize;

use sgg_mech::evaluation::{
    evaluate_dataset, group_by_image, read_ground_truth, read_predictions, write_report_csv,
    SplitSpec, REPORT_KS,
};
use sgg_mech::grounding::{combine_pairs, write_pseudo_labels, MockGrounder};
use sgg_mech::harness::config::VocabularyConfig;
use sgg_mech::harness::experiments::ReportRow;
use sgg_mech::harness::rng;
use sgg_mech::harness::{
    emit_report, gen_scene, run_distill_experiment, run_infusion_experiment,
    run_selection_experiment, ExperimentConfig, HarnessError, ReportFormat,
};
use sgg_mech::losses::run_gradient_suite;
use sgg_mech::matching::hungarian;
use sgg_mech::selection::{select_queries, TokenMatrix, TokenRole};
use sgg_mech::text::{
    build_bidirectional_prompt, parse_caption, read_triplet_jsonl, write_triplet_jsonl,
    CounterActionBackend, LlmClient, TextError, TripletRecord, VerbLexicon,
};

#[derive(Parser)]
#[command(name = "sgg-mech", version, about = "Interaction-centric scene-graph mechanism toolkit")]
struct Cli {
    /// Experiment configuration JSON (library defaults when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for generated files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Rules,
    Llm,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentKind {
    Selection,
    Distill,
    Infusion,
}

#[derive(Subcommand)]
enum Command {
    /// Extract triplets from a caption file (one caption per line).
    Parse {
        #[arg(long)]
        captions: PathBuf,
    },
    /// Build bidirectional interaction prompts from triplet JSONL.
    Prompt {
        #[arg(long)]
        triplets: PathBuf,
        #[arg(long, value_enum, default_value = "rules")]
        backend: BackendArg,
    },
    /// Generate seeded scenes, ground prompts, and combine detections
    /// into pseudo-label JSONL.
    Ground,
    /// Select query indices from token-matrix files.
    Select {
        #[arg(long)]
        visual: PathBuf,
        #[arg(long)]
        objects: PathBuf,
        #[arg(long)]
        relations: PathBuf,
        /// Interaction token matrix; omitted = combined-relevance fallback.
        #[arg(long)]
        interactions: Option<PathBuf>,
        #[arg(long, default_value_t = 900)]
        k: usize,
        #[arg(long, default_value_t = 200)]
        l: usize,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
    },
    /// Solve the assignment problem for a cost-matrix file.
    Match {
        #[arg(long)]
        cost: PathBuf,
    },
    /// Score prediction JSONL against ground-truth JSONL per split.
    Eval {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        ground_truth: PathBuf,
        /// Vocabulary JSON with objects/predicates and base splits.
        #[arg(long)]
        vocab: PathBuf,
        /// Comma-separated split names; all five when omitted.
        #[arg(long, value_delimiter = ',')]
        splits: Vec<String>,
    },
    /// Run one of the mechanism experiments and emit CSV + SVG reports.
    Experiment {
        #[arg(value_enum)]
        which: ExperimentKind,
    },
    /// Check analytic gradients against central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

/// Failure classes carrying the process exit code.
enum AppError {
    Config(String),
    Io(String),
    Other(String),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Io(_) => 3,
            AppError::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Config(m) | AppError::Io(m) | AppError::Other(m) => m,
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e.to_string())
    }
}

impl From<HarnessError> for AppError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Io(io) => AppError::Io(io.to_string()),
            other => AppError::Config(other.to_string()),
        }
    }
}

impl From<TextError> for AppError {
    fn from(e: TextError) -> Self {
        match e {
            TextError::Io(io) => AppError::Io(io.to_string()),
            TextError::MalformedRecord { .. } => AppError::Io(e.to_string()),
            other => AppError::Config(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, AppError> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    Ok(config)
}

fn out_path(cli: &Cli, name: &str) -> Result<PathBuf, AppError> {
    std::fs::create_dir_all(&cli.out)?;
    Ok(cli.out.join(name))
}

fn run(cli: Cli) -> Result<(), AppError> {
    match &cli.command {
        Command::Parse { captions } => cmd_parse(&cli, captions),
        Command::Prompt { triplets, backend } => cmd_prompt(&cli, triplets, *backend),
        Command::Ground => cmd_ground(&cli),
        Command::Select {
            visual,
            objects,
            relations,
            interactions,
            k,
            l,
            gamma,
        } => cmd_select(&cli, visual, objects, relations, interactions.as_deref(), *k, *l, *gamma),
        Command::Match { cost } => cmd_match(&cli, cost),
        Command::Eval {
            predictions,
            ground_truth,
            vocab,
            splits,
        } => cmd_eval(&cli, predictions, ground_truth, vocab, splits),
        Command::Experiment { which } => cmd_experiment(&cli, *which),
        Command::Gradcheck { points, tolerance } => cmd_gradcheck(&cli, *points, *tolerance),
    }
}

fn cmd_parse(cli: &Cli, captions: &Path) -> Result<(), AppError> {
    let file = std::fs::File::open(captions)?;
    let lexicon = VerbLexicon::builtin();
    let mut records = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let caption = line?;
        for t in parse_caption(&caption, lexicon) {
            records.push(TripletRecord {
                subject: t.subject,
                predicate: t.predicate,
                object: t.object,
                caption_id: (i + 1) as u64,
            });
        }
    }
    let path = out_path(cli, "triplets.jsonl")?;
    write_triplet_jsonl(&path, &records)?;
    println!("wrote {} triplets to {}", records.len(), path.display());
    Ok(())
}

#[derive(Serialize)]
struct PromptRecord {
    subject: String,
    predicate: String,
    object: String,
    forward: String,
    backward: String,
    combined: String,
}

fn cmd_prompt(cli: &Cli, triplets: &Path, backend: BackendArg) -> Result<(), AppError> {
    let config = load_config(cli)?;
    let backend = match backend {
        BackendArg::Rules => CounterActionBackend::Rules,
        BackendArg::Llm => {
            let llm = config
                .llm
                .clone()
                .ok_or_else(|| AppError::Config("llm backend requires an llm config".into()))?;
            CounterActionBackend::Llm(LlmClient::new(llm))
        }
    };
    let records = read_triplet_jsonl(triplets)?;
    let path = out_path(cli, "prompts.jsonl")?;
    let mut file = std::fs::File::create(&path)?;
    for record in &records {
        let triplet = record.triplet();
        let prompt = build_bidirectional_prompt(&triplet, &backend)?;
        let row = PromptRecord {
            subject: triplet.subject,
            predicate: triplet.predicate,
            object: triplet.object,
            forward: prompt.forward,
            backward: prompt.backward,
            combined: prompt.combined,
        };
        serde_json::to_writer(&mut file, &row).map_err(|e| AppError::Other(e.to_string()))?;
        use std::io::Write;
        file.write_all(b"\n")?;
    }
    println!("wrote {} prompts to {}", records.len(), path.display());
    Ok(())
}

fn cmd_ground(cli: &Cli) -> Result<(), AppError> {
    let config = load_config(cli)?;
    config.validate()?;
    let vocab = config
        .vocabulary
        .build()
        .map_err(|e| AppError::Config(e.to_string()))?;
    let grounder = MockGrounder {
        base_score_min: config.grounding.base_score_min,
        base_score_max: config.grounding.base_score_max,
        interaction_bonus: config.grounding.interaction_bonus,
        seed: config.master_seed,
    };
    let mut labels = Vec::new();
    for index in 0..config.scene.count {
        let scene_seed = rng::substream_seed(config.master_seed, index as u64);
        let scene = gen_scene(&config, &vocab, scene_seed)?;
        for gt in &scene.gt_triplets {
            let prompt = build_bidirectional_prompt(gt, &CounterActionBackend::Rules)?.combined;
            let detections = grounder.ground(&scene, &prompt, &vocab);
            let subjects: Vec<_> = detections
                .iter()
                .filter(|d| d.phrase == gt.subject)
                .cloned()
                .collect();
            let objects: Vec<_> = detections
                .iter()
                .filter(|d| d.phrase == gt.object)
                .cloned()
                .collect();
            labels.extend(combine_pairs(
                &subjects,
                &objects,
                config.grounding.confidence_threshold,
                config.grounding.iou_threshold,
                &gt.predicate,
            ));
        }
    }
    let path = out_path(cli, "pseudo_labels.jsonl")?;
    write_pseudo_labels(&path, &labels).map_err(|e| AppError::Io(e.to_string()))?;
    println!("wrote {} pseudo-labels to {}", labels.len(), path.display());
    Ok(())
}

fn read_matrix(path: &Path, role: TokenRole) -> Result<TokenMatrix, AppError> {
    TokenMatrix::read_file(path, role).map_err(|e| match e {
        sgg_mech::selection::SelectionError::Io(io) => AppError::Io(io.to_string()),
        other => AppError::Io(other.to_string()),
    })
}

#[derive(Serialize)]
struct SelectionOutput {
    indices: Vec<usize>,
    interaction_count: usize,
}

#[allow(clippy::too_many_arguments)]
fn cmd_select(
    cli: &Cli,
    visual: &Path,
    objects: &Path,
    relations: &Path,
    interactions: Option<&Path>,
    k: usize,
    l: usize,
    gamma: f64,
) -> Result<(), AppError> {
    let visual = read_matrix(visual, TokenRole::Visual)?;
    let objects = read_matrix(objects, TokenRole::ObjectClass)?;
    let relations = read_matrix(relations, TokenRole::RelationClass)?;
    let interactions = match interactions {
        Some(path) => read_matrix(path, TokenRole::Interaction)?,
        None => TokenMatrix::empty(visual.dim(), TokenRole::Interaction),
    };
    // honor the full-scale defaults while staying valid on small inputs
    let k = k.min(visual.rows());
    let l = l.min(k);
    let set = select_queries(&visual, &interactions, &objects, k, l, gamma, &relations)
        .map_err(|e| AppError::Config(e.to_string()))?;
    let path = out_path(cli, "query_indices.json")?;
    let output = SelectionOutput {
        indices: set.indices,
        interaction_count: set.interaction_count,
    };
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&output).map_err(|e| AppError::Other(e.to_string()))? + "\n",
    )?;
    println!(
        "selected {} queries ({} interaction-ranked) into {}",
        output.indices.len(),
        output.interaction_count,
        path.display()
    );
    Ok(())
}

fn read_cost_matrix(path: &Path) -> Result<Array2<f64>, AppError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| AppError::Io("empty cost matrix file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| AppError::Io("bad cost header".into())))
        .collect::<Result<_, _>>()?;
    if dims.len() != 2 {
        return Err(AppError::Io("cost header must be 'rows cols'".into()));
    }
    let mut data = Vec::with_capacity(dims[0] * dims[1]);
    for line in lines {
        for field in line.split_whitespace() {
            data.push(
                field
                    .parse::<f64>()
                    .map_err(|_| AppError::Io(format!("bad cost value '{field}'")))?,
            );
        }
    }
    if data.len() != dims[0] * dims[1] {
        return Err(AppError::Io(format!(
            "expected {} values, found {}",
            dims[0] * dims[1],
            data.len()
        )));
    }
    Array2::from_shape_vec((dims[0], dims[1]), data)
        .map_err(|e| AppError::Io(e.to_string()))
}

#[derive(Serialize)]
struct MatchOutput {
    pairs: Vec<(usize, usize)>,
    total_cost: f64,
}

fn cmd_match(cli: &Cli, cost: &Path) -> Result<(), AppError> {
    let cost = read_cost_matrix(cost)?;
    let assignment = hungarian(&cost).map_err(|e| AppError::Config(e.to_string()))?;
    let path = out_path(cli, "assignment.json")?;
    let output = MatchOutput {
        pairs: assignment.pairs,
        total_cost: assignment.total_cost,
    };
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&output).map_err(|e| AppError::Other(e.to_string()))? + "\n",
    )?;
    println!(
        "matched {} pairs at total cost {} into {}",
        output.pairs.len(),
        output.total_cost,
        path.display()
    );
    Ok(())
}

fn cmd_eval(
    cli: &Cli,
    predictions: &Path,
    ground_truth: &Path,
    vocab: &Path,
    splits: &[String],
) -> Result<(), AppError> {
    let vocab_text = std::fs::read_to_string(vocab)?;
    let vocab_config: VocabularyConfig =
        serde_json::from_str(&vocab_text).map_err(|e| AppError::Config(e.to_string()))?;
    let vocab = vocab_config
        .build()
        .map_err(|e| AppError::Config(e.to_string()))?;
    let splits: Vec<SplitSpec> = if splits.is_empty() {
        SplitSpec::ALL.to_vec()
    } else {
        splits
            .iter()
            .map(|s| s.parse().map_err(|e: sgg_mech::evaluation::EvalError| AppError::Config(e.to_string())))
            .collect::<Result<_, _>>()?
    };
    let preds = read_predictions(predictions).map_err(|e| AppError::Io(e.to_string()))?;
    let gts = read_ground_truth(ground_truth).map_err(|e| AppError::Io(e.to_string()))?;
    let images = group_by_image(preds, gts);
    let report = evaluate_dataset(&images, &vocab, &splits, &REPORT_KS);
    let path = out_path(cli, "recall_report.csv")?;
    let mut file = std::fs::File::create(&path)?;
    write_report_csv(&report, &mut file).map_err(|e| AppError::Io(e.to_string()))?;
    println!("wrote recall report for {} images to {}", images.len(), path.display());
    Ok(())
}

fn cmd_experiment(cli: &Cli, which: ExperimentKind) -> Result<(), AppError> {
    let config = load_config(cli)?;
    let (name, rows): (&str, Vec<ReportRow>) = match which {
        ExperimentKind::Selection => {
            let report = run_selection_experiment(&config)?;
            println!(
                "selection: object-only {:.4}, interaction-guided {:.4} (diff {:.4} ± {:.4})",
                report.object_only_mean,
                report.interaction_guided_mean,
                report.paired_diff_mean,
                report.paired_diff_ci95
            );
            ("selection", report.rows())
        }
        ExperimentKind::Distill => {
            let report = run_distill_experiment(&config)?;
            println!(
                "distill: rotated (vrd {:.4}, rrd {:.3e}), descent {:.4} -> {:.4}",
                report.rotated.0, report.rotated.1, report.descent_initial, report.descent_final
            );
            ("distill", report.rows())
        }
        ExperimentKind::Infusion => {
            let report = run_infusion_experiment(&config)?;
            println!(
                "infusion: object-only {:.4}, bidirectional {:.4} over {} triplets",
                report.object_only_fraction, report.bidirectional_fraction, report.triplet_count
            );
            ("infusion", report.rows())
        }
    };
    let csv = out_path(cli, &format!("{name}_report.csv"))?;
    emit_report(&rows, ReportFormat::Csv, &csv)?;
    let svg = out_path(cli, &format!("{name}_report.svg"))?;
    emit_report(&rows, ReportFormat::Svg, &svg)?;
    println!("wrote {} and {}", csv.display(), svg.display());
    Ok(())
}

fn cmd_gradcheck(cli: &Cli, points: usize, tolerance: f64) -> Result<(), AppError> {
    let config = load_config(cli)?;
    let reports = run_gradient_suite(config.master_seed, points, tolerance);
    let path = out_path(cli, "gradcheck.csv")?;
    let mut csv = String::from("loss,points,max_rel_error,tolerance,passed\n");
    let mut all_passed = true;
    for r in &reports {
        println!(
            "{:<22} max rel error {:.3e} (tolerance {:.1e}) {}",
            r.name,
            r.max_rel_error,
            r.tolerance,
            if r.passed { "PASS" } else { "FAIL" }
        );
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.name, r.points, r.max_rel_error, r.tolerance, r.passed
        ));
        all_passed &= r.passed;
    }
    std::fs::write(&path, csv)?;
    println!("wrote {}", path.display());
    if all_passed {
        Ok(())
    } else {
        Err(AppError::Other("gradient checks failed".into()))
    }
}
