mod args;
mod report;
mod workload;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use l2s::batch::{decode_batch, Parallelism};
use l2s::cslearn::{load_model, save_model, Learner, LinearCSModel};
use l2s::metrics::Averaging;
use l2s::search::{Counters, Decoded, TrainerConfig};
use l2s::synth::{markov_corpus, MarkovConfig};
use l2s::trainer::train;
use l2s::L2sError;
use sha2::{Digest, Sha256};

use args::{BenchCmd, Cli, Command, GenCmd, ReportOpts, ScoreCmd, TaskOpts, TestCmd, TrainCmd};
use report::RunReport;
use workload::{load, read_predictions, CliTask};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Model(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Model(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Model(m) => write!(f, "model error: {m}"),
        }
    }
}

impl From<L2sError> for CliError {
    fn from(e: L2sError) -> Self {
        match e {
            L2sError::Config(m) => CliError::Usage(m),
            L2sError::Model(m) => CliError::Model(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

fn echo_config(r: &mut RunReport, task: &TaskOpts, cfg: &TrainerConfig, eta: f64) {
    r.push("task", format!("{:?}", task.task).to_lowercase());
    r.push("algorithm", cfg.algorithm);
    r.push("rollin", cfg.rollin);
    r.push("rollout", cfg.rollout);
    r.push("interpolation", cfg.beta);
    r.push("rollout_mix_prob", cfg.rollout_mix_prob);
    r.push("collapse", cfg.collapse_h.map_or("off".to_string(), |h| h.to_string()));
    r.push("cache", cfg.cache_enabled);
    r.push("update_per_example", cfg.update_per_example);
    r.push("passes", cfg.passes);
    r.push("subsample", cfg.subsample);
    r.push("bits", task.bits);
    r.push("learning_rate", eta);
    r.push("markov_order", task.markov_order);
    r.push("seed", cfg.seed);
}

fn timing(r: &mut RunReport, out: &ReportOpts, key: &str, seconds: f64) {
    if !out.no_timing {
        r.push(key, format!("{seconds:.3}"));
    }
}

fn train_model<T: CliTask>(
    task: &T,
    inputs: &[T::Input],
    model: &mut LinearCSModel,
    cfg: &TrainerConfig,
) -> Result<Counters, CliError> {
    let counters = train(task, inputs, model, cfg, |pass, c| {
        log::info!("pass {pass}: cs_examples={} policy_calls={}", c.cs_examples, c.policy_calls);
    })?;
    Ok(counters)
}

fn decode<T>(task: &T, inputs: &[T::Input], model: &LinearCSModel, concurrent: bool) -> Result<Vec<Decoded<T::Output>>, CliError>
where
    T: CliTask,
    T::Input: Sync,
    T::Output: Send,
{
    let mode = if concurrent {
        Parallelism::Concurrent
    } else {
        Parallelism::Sequential
    };
    Ok(decode_batch(task, inputs, model, mode)?)
}

fn cmd_train(cmd: TrainCmd) -> Result<(), CliError> {
    let start = Instant::now();
    let loaded = load(&cmd.task, std::slice::from_ref(&cmd.data), None)?;
    let cfg = cmd.train.trainer_config();
    let mut model = LinearCSModel::new(cmd.task.bits, loaded.num_actions.max(1), cmd.train.learning_rate)?
        .with_labels(loaded.labels.clone());
    let (examples, counters) = with_workload!(&loaded.workload, |task, inputs| (
        inputs.len(),
        train_model(task, inputs, &mut model, &cfg)?
    ));
    save_model(&model, &cmd.model).map_err(|e| CliError::Model(e.to_string()))?;

    let mut r = RunReport::default();
    r.push("command", "train");
    echo_config(&mut r, &cmd.task, &cfg, cmd.train.learning_rate);
    r.push("examples", examples);
    r.push("updates", model.update_count());
    r.push("model_sha256", sha256_file(&cmd.model)?);
    if cmd.out.counters {
        r.counters(&counters);
    }
    timing(&mut r, &cmd.out, "wall_time_s", start.elapsed().as_secs_f64());
    r.emit(cmd.out.report.as_deref())?;
    Ok(())
}

fn test_workload<T>(
    task: &T,
    inputs: &[T::Input],
    model: &LinearCSModel,
    cmd: &TestCmd,
) -> Result<RunReport, CliError>
where
    T: CliTask,
    T::Input: Sync,
    T::Output: Send,
{
    let start = Instant::now();
    let decoded = decode(task, inputs, model, cmd.concurrent)?;
    let seconds = start.elapsed().as_secs_f64();
    let tokens: usize = inputs.iter().map(T::tokens).sum();
    let mut counters = Counters::default();
    let mut loss = 0.0;
    let mut outputs = Vec::with_capacity(decoded.len());
    for d in decoded {
        counters += d.counters;
        loss += d.loss;
        outputs.push(d.output);
    }

    if let Some(path) = &cmd.predictions {
        let mut out = BufWriter::new(File::create(path)?);
        task.write_predictions(inputs, &outputs, &mut out)?;
    }
    let mut r = RunReport::default();
    r.push("command", "test");
    r.push("task", format!("{:?}", cmd.task.task).to_lowercase());
    r.push("examples", inputs.len());
    r.push("tokens", tokens);
    r.metric("mean_loss", loss / inputs.len().max(1) as f64);
    r.extend(task.scored(inputs, &outputs).report(Averaging::from(cmd.metric))?);
    if cmd.out.counters {
        r.counters(&counters);
    }
    timing(&mut r, &cmd.out, "wall_time_s", seconds);
    timing(&mut r, &cmd.out, "tokens_per_sec", tokens as f64 / seconds.max(1e-9));
    Ok(r)
}

fn cmd_test(cmd: TestCmd) -> Result<(), CliError> {
    let model = load_model(&cmd.model).map_err(|e| {
        let msg = match e {
            L2sError::Model(m) => m,
            other => other.to_string(),
        };
        CliError::Model(format!("{}: {msg}", cmd.model.display()))
    })?;
    if model.bits() != cmd.task.bits {
        return Err(CliError::Model(format!(
            "model hashes into {} bits but --bits is {}",
            model.bits(),
            cmd.task.bits
        )));
    }
    let loaded = load(&cmd.task, std::slice::from_ref(&cmd.data), Some(model.labels()))?;
    if loaded.num_actions > model.num_actions() {
        return Err(CliError::Model(format!(
            "task needs {} actions but the model has {}",
            loaded.num_actions,
            model.num_actions()
        )));
    }
    let r = with_workload!(&loaded.workload, |task, inputs| test_workload(task, inputs, &model, &cmd)?);
    r.emit(cmd.out.report.as_deref())?;
    Ok(())
}

const BENCH_ROWS: [(&str, bool, Option<usize>); 4] = [
    ("no_opts", false, None),
    ("memo", true, None),
    ("collapse4", true, Some(4)),
    ("collapse2", true, Some(2)),
];

fn bench_workload<T>(
    task: &T,
    train_inputs: &[T::Input],
    test_inputs: &[T::Input],
    num_actions: usize,
    cmd: &BenchCmd,
) -> Result<RunReport, CliError>
where
    T: CliTask,
    T::Input: Sync,
    T::Output: Send,
{
    let mut r = RunReport::default();
    for (name, cache, collapse) in BENCH_ROWS {
        let cfg = TrainerConfig {
            cache_enabled: cache,
            collapse_h: collapse,
            ..cmd.train.trainer_config()
        };
        let start = Instant::now();
        let mut model = LinearCSModel::new(cmd.task.bits, num_actions.max(1), cmd.train.learning_rate)?;
        let counters = train_model(task, train_inputs, &mut model, &cfg)?;
        let seconds = start.elapsed().as_secs_f64();
        let outputs: Vec<T::Output> = decode(task, test_inputs, &model, false)?
            .into_iter()
            .map(|d| d.output)
            .collect();
        let mut row = RunReport::default();
        row.extend(task.scored(test_inputs, &outputs).report(Averaging::from(cmd.metric))?);
        row.counters(&counters);
        timing(&mut row, &cmd.out, "train_time_s", seconds);
        for line in row.to_string().lines() {
            let (k, v) = line.split_once('=').expect("report lines are key=value");
            r.push(format!("{name}.{k}"), v);
        }
    }
    Ok(r)
}

fn cmd_bench(cmd: BenchCmd) -> Result<(), CliError> {
    let mut paths = vec![cmd.data.clone()];
    paths.extend(cmd.test_data.clone());
    let loaded = load(&cmd.task, &paths, None)?;
    let mut r = RunReport::default();
    r.push("command", "bench");
    echo_config(&mut r, &cmd.task, &cmd.train.trainer_config(), cmd.train.learning_rate);
    let split = loaded.split;
    let body = with_workload!(&loaded.workload, |task, inputs| {
        let (train_inputs, test_inputs) = if cmd.test_data.is_some() {
            inputs.split_at(split)
        } else {
            (&inputs[..], &inputs[..])
        };
        bench_workload(task, train_inputs, test_inputs, loaded.num_actions, &cmd)?
    });
    r.extend(body);
    r.emit(cmd.out.report.as_deref())?;
    Ok(())
}

fn cmd_gen(cmd: GenCmd) -> Result<(), CliError> {
    let cfg = MarkovConfig {
        num_labels: cmd.labels,
        length: cmd.length,
        num_sentences: cmd.sentences,
        noise: cmd.noise,
        stickiness: cmd.stickiness,
        seed: cmd.seed,
    };
    let (corpus, _) = markov_corpus(&cfg)?;
    let out = BufWriter::new(File::create(&cmd.out)?);
    l2s::dataio::write_conll(out, &corpus)?;
    Ok(())
}

fn cmd_score(cmd: ScoreCmd) -> Result<(), CliError> {
    let scored = read_predictions(cmd.task, &cmd.predictions)?;
    let r = scored.report(Averaging::from(cmd.metric))?;
    r.emit(cmd.report.as_deref())?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(c) => cmd_train(c),
        Command::Test(c) => cmd_test(c),
        Command::Bench(c) => cmd_bench(c),
        Command::Gen(c) => cmd_gen(c),
        Command::Score(c) => cmd_score(c),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("l2s: {e}");
            ExitCode::from(e.code())
        }
    }
}

