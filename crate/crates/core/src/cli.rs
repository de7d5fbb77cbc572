//! Command-line front end: `preprocess`, `train`, `generate`, `metrics` and
//! `serve`.
//!
//! Every option can also come from a JSON file passed with `--config`, with
//! one object per subcommand and snake_case keys, e.g.
//! `{"train": {"epochs": 10, "beta": 0.001}}`. Flags win over the file, the
//! file wins over built-in defaults. Log verbosity follows `EMBOGEN_LOG`.

use std::ffi::OsString;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Deserialize;

use crate::anim::{corpus_files, load_keyframe_animation, load_posture, standinit, JointTable};
use crate::cvae::{load_checkpoint, save_checkpoint, train_with, CvaeConfig, CvaeModel};
use crate::metrics::{radius_monotonicity, valence_effect, MetricsReport};
use crate::nn::RngStream;
use crate::preprocess::{
    build_dataset, corpus_hash, read_dataset, write_dataset, DatasetOptions, HandleMode,
};
use crate::sampler::{
    generate_library, read_library, write_library, Axis, GenerationSpec, GridKind,
};
use crate::service::{bind, router, serve, AppState};

pub const LOG_ENV: &str = "EMBOGEN_LOG";

#[derive(Debug, Parser)]
#[command(name = "embogen", version, about = "Affective robot animation generator")]
struct Cli {
    /// JSON file with defaults for any subcommand's options.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the normalized training dataset from a keyframe corpus.
    Preprocess(PreprocessArgs),
    /// Train a model on a preprocessed dataset.
    Train(TrainArgs),
    /// Decode a library of animations from torus trajectories.
    Generate(GenerateArgs),
    /// Measure amplitude and variance per radius and the valence effect.
    Metrics(MetricsArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
struct PreprocessArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Joint-limit table (defaults to the shipped Pepper table).
    #[arg(long)]
    limits: Option<PathBuf>,
    /// Neutral posture file (defaults to the shipped StandInit).
    #[arg(long)]
    standinit: Option<PathBuf>,
    /// Normalize by the corpus' observed joint range instead of the limits.
    #[arg(long)]
    #[serde(default)]
    per_corpus_minmax: bool,
    /// Swap the eye LED blocks when mirroring.
    #[arg(long)]
    #[serde(default)]
    mirror_eye_leds: bool,
    /// Straight-line interpolation between keyframes instead of smooth handles.
    #[arg(long)]
    #[serde(default)]
    linear: bool,
    /// Frames of StandInit lead-in and lead-out added where missing.
    #[arg(long)]
    lead_frames: Option<u32>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    /// Training log path (defaults to the checkpoint path with `.log.csv`).
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateArgs {
    #[arg(long)]
    ckpt: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    steps: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    valences: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    axes: Option<Vec<u8>>,
    #[arg(long)]
    longitudes: Option<usize>,
    /// `torus` or `sphere`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    limits: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricsArgs {
    #[arg(long)]
    library: Option<PathBuf>,
    #[arg(long)]
    ckpt: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Prior draws for the valence effect.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip decoding the other grid type for comparison.
    #[arg(long)]
    #[serde(default)]
    no_compare: bool,
    #[arg(long)]
    limits: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
struct ServeArgs {
    #[arg(long)]
    ckpt: Option<PathBuf>,
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    host: Option<IpAddr>,
    #[arg(long)]
    library: Option<PathBuf>,
    /// Allowed browser origin; any origin when omitted.
    #[arg(long)]
    cors_origin: Option<String>,
    #[arg(long)]
    limits: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    preprocess: PreprocessArgs,
    #[serde(default)]
    train: TrainArgs,
    #[serde(default)]
    generate: GenerateArgs,
    #[serde(default)]
    metrics: MetricsArgs,
    #[serde(default)]
    serve: ServeArgs,
}

enum Failure {
    Usage(String),
    Run(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Run(e)
    }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::Run(e.into())
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn required<T>(value: Option<T>, flag: &str) -> Outcome<T> {
    value.ok_or_else(|| Failure::Usage(format!("the argument '--{flag}' is required")))
}

fn table(limits: Option<&Path>) -> Outcome<JointTable> {
    Ok(match limits {
        Some(p) => JointTable::load(p)?,
        None => JointTable::pepper(),
    })
}

/// Runs the CLI on `args` (program name first) and returns the exit code:
/// 0 on success, 1 on a failed command, 2 on a usage error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn"))
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let err = Cli::command().error(clap::error::ErrorKind::ValueValidation, msg);
            let _ = err.print();
            2
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Outcome {
    let config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str::<ConfigFile>(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Preprocess(a) => preprocess(a, config.preprocess),
        Command::Train(a) => train(a, config.train),
        Command::Generate(a) => generate(a, config.generate),
        Command::Metrics(a) => metrics(a, config.metrics),
        Command::Serve(a) => serve_cmd(a, config.serve),
    }
}

fn preprocess(a: PreprocessArgs, c: PreprocessArgs) -> Outcome {
    let corpus_dir = required(a.corpus.or(c.corpus), "corpus")?;
    let out = required(a.out.or(c.out), "out")?;
    let seed = a.seed.or(c.seed).unwrap_or(0);
    let table = table(a.limits.or(c.limits).as_deref())?;
    let rest = match a.standinit.or(c.standinit) {
        Some(p) => load_posture(&p)?,
        None => standinit(),
    };
    let options = DatasetOptions {
        table,
        standinit: rest,
        lead_frames: a
            .lead_frames
            .or(c.lead_frames)
            .unwrap_or(crate::preprocess::STANDINIT_LEAD_FRAMES),
        handles: if a.linear || c.linear {
            HandleMode::Linear
        } else {
            HandleMode::Smooth
        },
        per_corpus_minmax: a.per_corpus_minmax || c.per_corpus_minmax,
        mirror_eye_leds: a.mirror_eye_leds || c.mirror_eye_leds,
    };

    let mut corpus = Vec::new();
    for path in corpus_files(&corpus_dir)? {
        let anim = load_keyframe_animation(&path, &options.table)
            .and_then(|anim| anim.validate(&options.table).map(|_| anim))
            .with_context(|| format!("invalid corpus file {}", path.display()))?;
        corpus.push(anim);
    }
    let (dataset, norm, summary) = build_dataset(&corpus, seed, &options)
        .with_context(|| format!("corpus {}", corpus_dir.display()))?;
    write_dataset(&out, &dataset, &norm, &corpus_hash(&corpus))?;
    println!("{summary}");
    println!("wrote {}", out.display());
    Ok(())
}

fn train(a: TrainArgs, c: TrainArgs) -> Outcome {
    let data = required(a.data.or(c.data), "data")?;
    let out = required(a.out.or(c.out), "out")?;
    let defaults = CvaeConfig::default();
    let config = CvaeConfig {
        seed: a.seed.or(c.seed).unwrap_or(defaults.seed),
        epochs: a.epochs.or(c.epochs).unwrap_or(defaults.epochs),
        beta: a.beta.or(c.beta).unwrap_or(defaults.beta),
        lr: a.lr.or(c.lr).unwrap_or(defaults.lr),
        batch_size: a.batch.or(c.batch).unwrap_or(defaults.batch_size),
        dropout_p: a.dropout.or(c.dropout).unwrap_or(defaults.dropout_p),
        ..defaults
    };
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let log_path = a
        .log
        .or(c.log)
        .unwrap_or_else(|| out.with_extension("log.csv"));

    let (dataset, manifest) = read_dataset(&data)?;
    let model = CvaeModel::from_seed(config.clone(), manifest.normalization_table)?;
    log::info!(
        "training {} parameters on {} examples",
        model.parameter_count(),
        dataset.n_train
    );
    let (model, report) = train_with(model, &dataset, |e| {
        log::info!(
            "epoch {}: recon {:.6} kl {:.4} total {:.6} val {:.6}",
            e.epoch,
            e.recon,
            e.kl,
            e.total,
            e.val
        );
    })?;
    save_checkpoint(&model, Some(&report), &out)?;
    let header = format!(
        "# beta={} lr={} epochs={} batch={} dropout={} seed={}\n",
        config.beta, config.lr, config.epochs, config.batch_size, config.dropout_p, config.seed
    );
    std::fs::write(&log_path, header + &report.to_csv())
        .with_context(|| format!("writing {}", log_path.display()))?;
    if let (Some(first), Some(last)) = (report.first(), report.last()) {
        println!(
            "{} epochs: validation mse {:.6} -> {:.6}, final kl {:.4}",
            report.epochs.len(),
            first.val,
            last.val,
            report.final_kl
        );
    }
    println!("wrote {} and {}", out.display(), log_path.display());
    Ok(())
}

fn generation_spec(a: &GenerateArgs, c: &GenerateArgs) -> Outcome<GenerationSpec> {
    let defaults = GenerationSpec::default();
    let radii = a.radii.clone().or(c.radii.clone());
    let steps = a.steps.clone().or(c.steps.clone());
    let (radii, steps) = match (radii, steps) {
        (None, None) => (defaults.radii.clone(), defaults.steps.clone()),
        (Some(r), Some(s)) => (r, s),
        (Some(r), None) => {
            // default step counts follow the radius rule
            let s = r.iter().map(|x| crate::service::default_steps(*x)).collect();
            (r, s)
        }
        (None, Some(s)) => (defaults.radii.clone(), s),
    };
    if steps.len() != radii.len() {
        return Err(Failure::Usage(format!(
            "--steps has {} values but --radii has {}",
            steps.len(),
            radii.len()
        )));
    }
    let axes = match a.axes.clone().or(c.axes.clone()) {
        None => defaults.axes.clone(),
        Some(v) => v
            .into_iter()
            .map(Axis::try_from)
            .collect::<crate::Result<_>>()
            .map_err(|e| Failure::Usage(e.to_string()))?,
    };
    let grid = match a.grid.as_deref().or(c.grid.as_deref()) {
        None | Some("torus") => GridKind::Torus,
        Some("sphere") => GridKind::Sphere,
        Some(other) => {
            return Err(Failure::Usage(format!(
                "--grid must be torus or sphere, got {other:?}"
            )))
        }
    };
    let spec = GenerationSpec {
        radii,
        steps,
        valences: a
            .valences
            .clone()
            .or(c.valences.clone())
            .unwrap_or(defaults.valences.clone()),
        axes,
        n_longitudes: a.longitudes.or(c.longitudes).unwrap_or(defaults.n_longitudes),
        n_points: defaults.n_points,
        grid,
    };
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(spec)
}

fn generate(a: GenerateArgs, c: GenerateArgs) -> Outcome {
    let spec = generation_spec(&a, &c)?;
    let ckpt = required(a.ckpt.or(c.ckpt), "ckpt")?;
    let out = required(a.out.or(c.out), "out")?;
    let table = table(a.limits.or(c.limits).as_deref())?;
    let (model, _) = load_checkpoint(&ckpt)?;
    let library = generate_library(&model, &spec, &table)?;
    let manifest = write_library(&out, &spec, &library)?;
    println!(
        "{} animations from {} trajectories; wrote {}",
        manifest.count,
        spec.trajectory_count(),
        out.display()
    );
    Ok(())
}

fn metrics(a: MetricsArgs, c: MetricsArgs) -> Outcome {
    let library_dir = required(a.library.or(c.library), "library")?;
    let ckpt = required(a.ckpt.or(c.ckpt), "ckpt")?;
    let out = required(a.out.or(c.out), "out")?;
    let samples = a.samples.or(c.samples).unwrap_or(100);
    let seed = a.seed.or(c.seed).unwrap_or(0);
    let table = table(a.limits.or(c.limits).as_deref())?;

    let (manifest, anims) = read_library(&library_dir, &table)?;
    let (model, _) = load_checkpoint(&ckpt)?;
    let own = radius_monotonicity(
        manifest
            .animations
            .iter()
            .zip(&anims)
            .map(|(e, anim)| (e.radius, anim)),
    )?;
    let other = if a.no_compare || c.no_compare {
        None
    } else {
        let grid = match manifest.spec.grid {
            GridKind::Torus => GridKind::Sphere,
            GridKind::Sphere => GridKind::Torus,
        };
        let spec = GenerationSpec {
            grid,
            ..manifest.spec.clone()
        };
        let lib = generate_library(&model, &spec, &table)?;
        Some(radius_monotonicity(lib.iter().map(|g| (g.radius, &g.animation)))?)
    };
    let (torus, sphere) = match manifest.spec.grid {
        GridKind::Torus => (Some(own), other),
        GridKind::Sphere => (other, Some(own)),
    };

    let effect = valence_effect(&model, samples, &mut RngStream::new(seed))?;
    let mut ablated = model.clone();
    ablated.ablate_label();
    let effect_ablated = valence_effect(&ablated, samples, &mut RngStream::new(seed))?;
    let report = MetricsReport {
        torus,
        sphere,
        valence_effect: effect,
        valence_effect_ablated: effect_ablated,
        valence_samples: samples,
        seed,
    };
    let text = serde_json::to_string_pretty(&report).expect("serializable");
    std::fs::write(&out, text).with_context(|| format!("writing {}", out.display()))?;

    for (name, r) in [("torus", &report.torus), ("sphere", &report.sphere)] {
        if let Some(r) = r {
            println!("{name} grid");
            println!("{r}");
        }
    }
    println!(
        "valence effect: {:.6} (label-ablated {:.6}) over {samples} prior draws",
        report.valence_effect, report.valence_effect_ablated
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn serve_cmd(a: ServeArgs, c: ServeArgs) -> Outcome {
    let ckpt = required(a.ckpt.or(c.ckpt), "ckpt")?;
    let port = a.port.or(c.port).unwrap_or(8080);
    let host = a
        .host
        .or(c.host)
        .unwrap_or(IpAddr::from([127, 0, 0, 1]));
    let table = table(a.limits.or(c.limits).as_deref())?;
    let (_, checkpoint) = load_checkpoint(&ckpt)?;
    let mut state = AppState::new(Some(checkpoint), table)?;
    if let Some(dir) = a.library.or(c.library) {
        state = state.with_library(&dir)?;
    }
    let app = router(state, a.cors_origin.or(c.cors_origin).as_deref())?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| anyhow!("starting runtime: {e}"))?;
    runtime.block_on(async {
        let listener = bind(SocketAddr::new(host, port)).await?;
        println!("listening on http://{}", listener.local_addr().map_err(|e| anyhow!(e))?);
        serve(listener, app).await?;
        Ok::<_, Failure>(())
    })
}
