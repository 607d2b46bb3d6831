use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::baselines::{
    episodes_from_log, estimate_bd, estimate_ji, estimate_pc, ic_em_fit, lt_predict,
    EdgeProbabilities, EstimatorKind, IcEmConfig, LtConfig, PartialCreditFlavor,
};
use crate::eval::{
    compare_models, evaluate_model, stratified_kfold, BaselinePredictor, DnnPredictor,
    EvalContext, EvaluationReport, IcEmPredictor, ModelEvaluation, Predictor, ThresholdRule,
};
use crate::neural::{
    build_training_set, fit, predict_proba, read_model, write_model, ModelFileMeta,
    NegativeRule, TrainConfig,
};
use crate::social::{
    active_friends, filter_dataset, load_actions, load_graph, write_actions, write_graph,
    ActionLog, SocialGraph,
};
use crate::synth::{
    generate_dependent_episodes, generate_ic_episodes, write_world_manifest, PlantedWorld,
};

use super::args::{
    Cli, Command, EvalArgs, FitArgs, IngestArgs, ModelChoice, PredictArgs, RuleChoice,
    SynthArgs, SynthKind,
};
use super::manifest::RunManifest;

/// Errors with a stable exit-code contract: usage and input problems exit
/// 2, model and computation failures exit 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }

    fn usage(e: impl Display) -> Self {
        CliError::Usage(e.to_string())
    }

    fn compute(e: impl Display) -> Self {
        CliError::Compute(e.to_string())
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

fn open_input(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn create_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::compute(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(dir: &Path, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let file = File::create(&path)
        .map_err(|e| CliError::compute(format!("cannot write {}: {e}", path.display())))?;
    let mut writer = BufWriter::new(file);
    body(&mut writer).map_err(|e| CliError::compute(format!("write {name}: {e}")))?;
    writer.flush().map_err(|e| CliError::compute(format!("write {name}: {e}")))?;
    Ok(path)
}

struct Dataset {
    graph: SocialGraph,
    log: ActionLog,
    graph_path: PathBuf,
    actions_path: PathBuf,
}

fn load_dataset(dir: &Path) -> Result<Dataset, CliError> {
    let graph_path = dir.join("graph.tsv");
    let actions_path = dir.join("actions.tsv");
    let (graph, _) = load_graph(open_input(&graph_path)?).map_err(CliError::usage)?;
    let (log, _) = load_actions(open_input(&actions_path)?, &graph).map_err(CliError::usage)?;
    Ok(Dataset { graph, log, graph_path, actions_path })
}

fn cmd_ingest(args: IngestArgs) -> Result<(), CliError> {
    let (graph, graph_stats) = load_graph(open_input(&args.graph)?).map_err(CliError::usage)?;
    let (log, action_stats) =
        load_actions(open_input(&args.actions)?, &graph).map_err(CliError::usage)?;
    let (graph, log, report) =
        filter_dataset(&graph, &log, args.min_actions).map_err(CliError::usage)?;

    create_out_dir(&args.out)?;
    write_file(&args.out, "graph.tsv", |w| write_graph(w, &graph))?;
    write_file(&args.out, "actions.tsv", |w| write_actions(w, &graph, &log))?;

    let mut summary = String::new();
    summary.push_str("dataset summary\n");
    summary.push_str(&format!("min_actions\t{}\n", args.min_actions));
    summary.push_str(&format!("self loops dropped\t{}\n", graph_stats.self_loops_dropped));
    summary.push_str(&format!(
        "duplicate edges collapsed\t{}\n",
        graph_stats.duplicate_edges_collapsed
    ));
    summary.push_str(&format!(
        "unknown-subject records skipped\t{}\n",
        action_stats.unknown_subject_records
    ));
    summary.push_str(&format!(
        "duplicate records merged\t{}\n",
        action_stats.duplicate_records_merged
    ));
    summary.push_str(&report.render());
    summary.push_str(&format!("actions kept\t{}\n", log.n_actions()));
    write_file(&args.out, "summary.txt", |w| w.write_all(summary.as_bytes()))?;
    print!("{summary}");

    let mut manifest = RunManifest::new("ingest");
    manifest.config("min_actions", args.min_actions);
    manifest.input(&args.graph).map_err(CliError::compute)?;
    manifest.input(&args.actions).map_err(CliError::compute)?;
    manifest.output("graph.tsv").output("actions.tsv").output("summary.txt");
    manifest.write_to(&args.out.join("manifest.txt")).map_err(CliError::compute)?;
    Ok(())
}

fn train_config(args: &super::args::TrainOverrides, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: args.epochs,
        dropout_rate: args.dropout,
        learning_rate: args.learning_rate,
        rmsprop_decay: args.rmsprop_decay,
        rmsprop_epsilon: args.rmsprop_epsilon,
        batch_size: args.batch_size,
        seed,
    }
}

fn em_config(args: &super::args::EmOverrides) -> IcEmConfig {
    IcEmConfig {
        max_iters: args.em_max_iters,
        ll_tolerance: args.em_tolerance,
        init_p: args.em_init_p,
    }
}

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    let dataset = load_dataset(&args.data)?;
    let scan_options = crate::social::ScanOptions {
        timestamp_free: args.timestamp_free,
        window: args.window,
    };
    create_out_dir(&args.out)?;

    let mut manifest = RunManifest::new("fit");
    manifest.config("model", args.model.display_name());
    manifest.config("seed", args.seed);
    manifest.config("timestamp_free", args.timestamp_free);
    if let Some(w) = args.window {
        manifest.config("window", w);
    }

    match args.model {
        ModelChoice::Bd | ModelChoice::Ji | ModelChoice::Pcb | ModelChoice::Pcj => {
            let stats = crate::social::scan_propagation(&dataset.graph, &dataset.log, scan_options)
                .map_err(CliError::usage)?;
            let probs = match args.model {
                ModelChoice::Bd => estimate_bd(&stats),
                ModelChoice::Ji => estimate_ji(&stats),
                ModelChoice::Pcb => estimate_pc(&stats, PartialCreditFlavor::Bernoulli),
                ModelChoice::Pcj => estimate_pc(&stats, PartialCreditFlavor::Jaccard),
                _ => unreachable!(),
            };
            let name = format!("edges-{}.tsv", args.model.display_name());
            write_file(&args.out, &name, |w| probs.write_tsv(w, &dataset.graph))?;
            manifest.output(&name);
        }
        ModelChoice::Icem => {
            if args.timestamp_free {
                return Err(CliError::Usage(
                    "cascade fitting needs activation order; it cannot run in timestamp-free \
                     mode"
                        .into(),
                ));
            }
            let episodes = episodes_from_log(&dataset.log).map_err(CliError::usage)?;
            let (probs, trace) = ic_em_fit(&episodes, &dataset.graph, &em_config(&args.em))
                .map_err(CliError::compute)?;
            write_file(&args.out, "edges-IC.tsv", |w| probs.write_tsv(w, &dataset.graph))?;
            write_file(&args.out, "ll_trace.txt", |w| {
                for v in &trace {
                    writeln!(w, "{v}")?;
                }
                Ok(())
            })?;
            manifest.config("em_max_iters", args.em.em_max_iters);
            manifest.config("em_tolerance", args.em.em_tolerance);
            manifest.config("em_init_p", args.em.em_init_p);
            manifest.output("edges-IC.tsv").output("ll_trace.txt");
        }
        ModelChoice::Dnn => {
            let (examples, _) = build_training_set(
                &dataset.graph,
                &dataset.log,
                NegativeRule::MatchPositives,
                args.timestamp_free,
                args.seed,
            );
            let mut sizes = vec![2 * dataset.graph.n_subjects()];
            sizes.extend_from_slice(&args.train.layers);
            sizes.push(1);
            let cfg = train_config(&args.train, args.seed);
            let (model, trace) = fit(&examples, &sizes, &cfg).map_err(map_mlp_error)?;
            let meta = ModelFileMeta {
                n_subjects: dataset.graph.n_subjects(),
                subjects_digest: dataset.graph.subjects().digest(),
            };
            write_file(&args.out, "model-dnn.txt", |w| write_model(w, &model, &meta))?;
            write_file(&args.out, "loss_trace.txt", |w| {
                for v in &trace {
                    writeln!(w, "{v}")?;
                }
                Ok(())
            })?;
            for (key, value) in [
                ("epochs", cfg.epochs.to_string()),
                ("dropout", cfg.dropout_rate.to_string()),
                ("learning_rate", cfg.learning_rate.to_string()),
                ("rmsprop_decay", cfg.rmsprop_decay.to_string()),
                ("rmsprop_epsilon", cfg.rmsprop_epsilon.to_string()),
                ("batch_size", cfg.batch_size.to_string()),
                ("layer_sizes", sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")),
            ] {
                manifest.config(key, value);
            }
            manifest.output("model-dnn.txt").output("loss_trace.txt");
        }
    }

    manifest.input(&dataset.graph_path).map_err(CliError::compute)?;
    manifest.input(&dataset.actions_path).map_err(CliError::compute)?;
    manifest.write_to(&args.out.join("manifest.txt")).map_err(CliError::compute)?;
    println!("fitted {} on {} subjects", args.model.display_name(), dataset.graph.n_subjects());
    Ok(())
}

fn map_mlp_error(e: crate::neural::MlpError) -> CliError {
    use crate::neural::MlpError;
    match e {
        MlpError::InvalidConfig { .. }
        | MlpError::NoExamples
        | MlpError::TooFewLayers
        | MlpError::ZeroWidthLayer { .. }
        | MlpError::OutputNotScalar => CliError::usage(e),
        other => CliError::compute(other),
    }
}

/// Everything `eval` needs besides the dataset itself.
#[derive(Clone, Debug)]
pub struct EvalSettings {
    pub models: Vec<ModelChoice>,
    pub k: usize,
    pub seed: u64,
    pub timestamp_free: bool,
    pub window: Option<i64>,
    pub baseline_rule: ThresholdRule,
    pub dnn_rule: ThresholdRule,
    pub train: TrainConfig,
    pub hidden: Vec<usize>,
    pub em: IcEmConfig,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            models: vec![
                ModelChoice::Dnn,
                ModelChoice::Bd,
                ModelChoice::Ji,
                ModelChoice::Pcb,
                ModelChoice::Pcj,
                ModelChoice::Icem,
            ],
            k: 10,
            seed: 42,
            timestamp_free: false,
            window: None,
            baseline_rule: ThresholdRule::Youden,
            dnn_rule: ThresholdRule::Fixed(0.5),
            train: TrainConfig::default(),
            hidden: vec![128, 64, 32],
            em: IcEmConfig::default(),
        }
    }
}

fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The full comparison protocol: build the balanced example set, split it
/// into stratified folds, evaluate every selected model, and merge the
/// sections into one report. A model's failure annotates its row; the run
/// continues.
pub fn run_evaluation(
    graph: &SocialGraph,
    log: &ActionLog,
    settings: &EvalSettings,
) -> Result<EvaluationReport, CliError> {
    let (examples, _) = build_training_set(
        graph,
        log,
        NegativeRule::MatchPositives,
        settings.timestamp_free,
        mix(settings.seed, 1),
    );
    if examples.is_empty() {
        return Err(CliError::Usage("no examples: the action log is empty".into()));
    }
    let split =
        stratified_kfold(&examples, settings.k, mix(settings.seed, 2)).map_err(CliError::usage)?;
    let ctx = EvalContext {
        graph,
        log,
        examples: &examples,
        timestamp_free: settings.timestamp_free,
        window: settings.window,
    };

    let mut sections: Vec<ModelEvaluation> = Vec::new();
    for &choice in &settings.models {
        let rule = match choice {
            ModelChoice::Dnn => settings.dnn_rule,
            _ => settings.baseline_rule,
        };
        let mut predictor: Box<dyn Predictor> = match choice {
            ModelChoice::Bd => Box::new(BaselinePredictor::new(EstimatorKind::Bernoulli)),
            ModelChoice::Ji => Box::new(BaselinePredictor::new(EstimatorKind::Jaccard)),
            ModelChoice::Pcb => {
                Box::new(BaselinePredictor::new(EstimatorKind::PartialCreditBernoulli))
            }
            ModelChoice::Pcj => {
                Box::new(BaselinePredictor::new(EstimatorKind::PartialCreditJaccard))
            }
            ModelChoice::Icem => Box::new(IcEmPredictor::new(settings.em)),
            ModelChoice::Dnn => {
                let cfg = TrainConfig { seed: mix(settings.seed, 3), ..settings.train };
                Box::new(DnnPredictor::new(cfg, settings.hidden.clone()))
            }
        };
        sections.push(evaluate_model(predictor.as_mut(), &ctx, &split, rule));
    }

    let expected: Vec<String> =
        settings.models.iter().map(|m| m.display_name().to_string()).collect();
    Ok(compare_models(sections, settings.k, &expected))
}

fn parse_models(spec: &str) -> Result<Vec<ModelChoice>, CliError> {
    if spec.trim() == "all" {
        return Ok(EvalSettings::default().models);
    }
    spec.split(',')
        .map(|name| match name.trim() {
            "bd" => Ok(ModelChoice::Bd),
            "ji" => Ok(ModelChoice::Ji),
            "pcb" => Ok(ModelChoice::Pcb),
            "pcj" => Ok(ModelChoice::Pcj),
            "icem" => Ok(ModelChoice::Icem),
            "dnn" => Ok(ModelChoice::Dnn),
            other => Err(CliError::Usage(format!(
                "unknown model {other:?} (expected bd, ji, pcb, pcj, icem, dnn, or all)"
            ))),
        })
        .collect()
}

fn threshold_rule(choice: RuleChoice, fixed: f64) -> ThresholdRule {
    match choice {
        RuleChoice::Youden => ThresholdRule::Youden,
        RuleChoice::Closest01 => ThresholdRule::Closest01,
        RuleChoice::Fixed => ThresholdRule::Fixed(fixed),
    }
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let dataset = load_dataset(&args.data)?;
    let settings = EvalSettings {
        models: parse_models(&args.models)?,
        k: args.k,
        seed: args.seed,
        timestamp_free: args.timestamp_free,
        window: args.window,
        baseline_rule: threshold_rule(args.threshold_rule, args.fixed_threshold),
        dnn_rule: threshold_rule(args.dnn_threshold_rule, args.fixed_threshold),
        train: train_config(&args.train, args.seed),
        hidden: args.train.layers.clone(),
        em: em_config(&args.em),
    };
    let report = run_evaluation(&dataset.graph, &dataset.log, &settings)?;

    create_out_dir(&args.out)?;
    let text = report.render_text();
    write_file(&args.out, "report.txt", |w| w.write_all(text.as_bytes()))?;
    write_file(&args.out, "report.tsv", |w| {
        w.write_all(report.render_machine().as_bytes())
    })?;
    print!("{text}");

    let mut manifest = RunManifest::new("eval");
    manifest.config("models", &args.models);
    manifest.config("k", args.k);
    manifest.config("seed", args.seed);
    manifest.config("timestamp_free", args.timestamp_free);
    manifest.config("threshold_rule", format!("{}", settings.baseline_rule));
    manifest.config("dnn_threshold_rule", format!("{}", settings.dnn_rule));
    manifest.input(&dataset.graph_path).map_err(CliError::compute)?;
    manifest.input(&dataset.actions_path).map_err(CliError::compute)?;
    manifest.output("report.txt").output("report.tsv");
    manifest.write_to(&args.out.join("manifest.txt")).map_err(CliError::compute)?;
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<(), CliError> {
    let dataset = load_dataset(&args.data)?;
    let graph = &dataset.graph;
    let subject = graph
        .subject_id(&args.subject)
        .ok_or_else(|| CliError::Usage(format!("unknown subject {:?}", args.subject)))?;
    let action = dataset
        .log
        .action_id(&args.action)
        .ok_or_else(|| CliError::Usage(format!("unknown action {:?}", args.action)))?;
    if !(0.0..=1.0).contains(&args.theta) {
        return Err(CliError::Usage(format!("theta {} outside [0, 1]", args.theta)));
    }

    // Friends active for this case: strictly before the subject's own
    // activation when we have its timestamp, otherwise every performer.
    let cutoff = if args.timestamp_free {
        None
    } else {
        dataset.log.timestamp_of(subject, action).flatten()
    };
    let friends = active_friends(graph, &dataset.log, subject, action, cutoff);

    let mut head = String::new();
    File::open(&args.model)
        .and_then(|mut f| f.read_to_string(&mut head).map(|_| ()))
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", args.model.display())))?;
    let first_line = head.lines().next().unwrap_or_default();

    let dataset_digest = graph.subjects().digest();
    let (model_name, score) = if first_line == "soclearn-mlp v1" {
        let (model, meta) = read_model(head.as_bytes()).map_err(CliError::usage)?;
        if meta.subjects_digest != dataset_digest {
            return Err(CliError::Usage(format!(
                "model/dataset mismatch: {} was fitted on a graph with digest {} \
                 but {} has digest {}",
                args.model.display(),
                meta.subjects_digest,
                args.data.display(),
                dataset_digest,
            )));
        }
        let score =
            predict_proba(&model, graph, subject, &friends).map_err(CliError::compute)?;
        ("DNN".to_string(), score)
    } else {
        let (probs, meta) =
            EdgeProbabilities::read_tsv(head.as_bytes(), graph).map_err(CliError::usage)?;
        if let Some(digest) = &meta.subjects_digest {
            if digest != &dataset_digest {
                return Err(CliError::Usage(format!(
                    "model/dataset mismatch: {} carries digest {} but {} has digest {}",
                    args.model.display(),
                    digest,
                    args.data.display(),
                    dataset_digest,
                )));
            }
        }
        let outcome = lt_predict(&probs, graph, &friends, subject, &LtConfig::new(args.theta))
            .map_err(CliError::compute)?;
        (probs.estimator().tag().to_string(), outcome.score)
    };

    let decision = if score >= args.theta { "active" } else { "inactive" };
    let friend_names: Vec<&str> = friends.iter().map(|&f| graph.subject_name(f)).collect();
    let mut out = String::new();
    out.push_str(&format!("model\t{model_name}\n"));
    out.push_str(&format!("subject\t{}\n", args.subject));
    out.push_str(&format!("action\t{}\n", args.action));
    out.push_str(&format!(
        "active_friends\t{}\n",
        if friend_names.is_empty() { "-".to_string() } else { friend_names.join(",") }
    ));
    out.push_str(&format!("score\t{score}\n"));
    out.push_str(&format!("threshold\t{}\n", args.theta));
    out.push_str(&format!("decision\t{decision}\n"));
    print!("{out}");

    if let Some(dir) = &args.out {
        create_out_dir(dir)?;
        write_file(dir, "prediction.txt", |w| w.write_all(out.as_bytes()))?;
        let mut manifest = RunManifest::new("predict");
        manifest.config("subject", &args.subject);
        manifest.config("action", &args.action);
        manifest.config("theta", args.theta);
        manifest.input(&args.model).map_err(CliError::compute)?;
        manifest.input(&dataset.graph_path).map_err(CliError::compute)?;
        manifest.input(&dataset.actions_path).map_err(CliError::compute)?;
        manifest.output("prediction.txt");
        manifest.write_to(&dir.join("manifest.txt")).map_err(CliError::compute)?;
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let (world, log) = match args.kind {
        SynthKind::Independent => {
            let world = PlantedWorld::independent(
                args.subjects,
                args.avg_in_degree,
                args.prob_low,
                args.prob_high,
                args.seed,
            )
            .map_err(CliError::usage)?;
            let log = generate_ic_episodes(&world, args.actions, args.seed_fraction, mix(args.seed, 10))
                .map_err(CliError::usage)?;
            (world, log)
        }
        SynthKind::Dependent => {
            let world = PlantedWorld::dependent_and(
                args.subjects,
                args.avg_in_degree,
                args.prob_low,
                args.prob_high,
                args.pairs,
                args.seed,
            )
            .map_err(CliError::usage)?;
            let pairs = world.pairs.clone();
            let log = generate_dependent_episodes(
                &world,
                &pairs,
                args.actions,
                args.seed_fraction,
                mix(args.seed, 10),
            )
            .map_err(CliError::usage)?;
            (world, log)
        }
    };

    create_out_dir(&args.out)?;
    write_file(&args.out, "graph.tsv", |w| write_graph(w, &world.graph))?;
    write_file(&args.out, "actions.tsv", |w| write_actions(w, &world.graph, &log))?;
    let params = [
        ("avg_in_degree", args.avg_in_degree.to_string()),
        ("n_actions", args.actions.to_string()),
        ("seed_fraction", args.seed_fraction.to_string()),
        ("prob_low", args.prob_low.to_string()),
        ("prob_high", args.prob_high.to_string()),
        ("n_pairs", world.pairs.len().to_string()),
    ];
    let params_ref: Vec<(&str, String)> =
        params.iter().map(|(k, v)| (*k, v.clone())).collect();
    write_file(&args.out, "world.txt", |w| write_world_manifest(w, &world, &params_ref))?;
    println!(
        "synthesized {} world: {} subjects, {} edges, {} records",
        match args.kind {
            SynthKind::Independent => "independent",
            SynthKind::Dependent => "dependent-and",
        },
        world.graph.n_subjects(),
        world.graph.n_edges(),
        log.n_records()
    );
    Ok(())
}
