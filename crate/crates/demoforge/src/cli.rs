//! The `demoforge` command line. [`run`] returns the process exit code:
//! 0 on success, 1 on a runtime error, 2 on a usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use demoforge_core::env::{ExpertPolicy, FrameSink, FrameSnapshot, Policy, TaskConfig};
use demoforge_core::il::{
    bc_train, dagger_train, discretize_task, evaluate_success, gail_train, maxent_irl,
    value_iteration, woc_aggregate, ExpertDataset, LossKind, SourceKind,
};
use demoforge_core::md::{build_system_at, tube_geometry, Simulation, TaskId, Thermostat, F_MAX};
use demoforge_core::nn::{GaussianPolicy, PolicyMode, StochasticPolicy};
use demoforge_core::rng;
use serde_json::json;

use crate::config::Config;
use crate::csv_export::{export_csv, CsvStyle};
use crate::demos::{
    dataset_from_recordings, dataset_trajectories, record_episode, recording_paths, FRAME_MS,
};
use crate::files::{dataset_from_tensors, dataset_to_tensors, Checkpoint, TensorFile};
use crate::plot::{trajectory_svg, Series};
use crate::recording::{Header, Player, Recorder, Recording, ReplayItem};
use crate::server::Server;

#[derive(Debug, Parser)]
#[command(
    name = "demoforge",
    version,
    about = "Interactive molecular dynamics demonstrations and imitation learning"
)]
pub struct Cli {
    /// TOML config file; defaults to $DEMOFORGE_CONFIG. Flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the simulator headless and print an energy summary.
    Simulate(SimulateArgs),
    /// Start the WebSocket session service.
    Serve(ServeArgs),
    /// Roll out a policy once and save the episode as a recording.
    Record(RecordArgs),
    /// Print a recording's merged frame/event stream as JSON lines.
    Replay(ReplayArgs),
    /// Export a recording as CSV.
    ExportCsv(ExportArgs),
    /// Plot per-attempt atom paths through the tube as SVG.
    PlotTrajectory(PlotArgs),
    /// Record scripted-expert demonstrations.
    ExpertDemos(ExpertDemosArgs),
    /// Train a policy (or, for irl, a reward).
    #[command(subcommand)]
    Train(TrainCommand),
    /// Success rate of a policy over a seed range.
    Eval(EvalArgs),
    /// Wisdom-of-the-crowd aggregation of atom paths from several recordings.
    AggregateWoc(WocArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Nanotube,
    Alanine17,
}

impl From<TaskArg> for TaskId {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Nanotube => TaskId::Nanotube,
            TaskArg::Alanine17 => TaskId::Alanine17,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Mean,
    Sample,
}

impl From<ModeArg> for PolicyMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Mean => PolicyMode::Mean,
            ModeArg::Sample => PolicyMode::Sample,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "nanotube")]
    pub task: TaskArg,
    #[arg(long, default_value_t = 1000)]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// ps
    #[arg(long)]
    pub dt: Option<f64>,
    /// Plain velocity Verlet instead of the Langevin thermostat.
    #[arg(long)]
    pub nve: bool,
    /// Also write the run as a recording.
    #[arg(long)]
    pub record: Option<PathBuf>,
    /// Record every k-th step.
    #[arg(long, default_value_t = 10)]
    pub frame_every: u64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub host: Option<String>,
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long, value_enum)]
    pub task: Option<TaskArg>,
    #[arg(long)]
    pub tick_hz: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Where actions come from: `expert`, `random`, or a checkpoint path.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySource {
    Expert,
    Random,
    Checkpoint(PathBuf),
}

impl std::str::FromStr for PolicySource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "expert" => PolicySource::Expert,
            "random" => PolicySource::Random,
            path => PolicySource::Checkpoint(PathBuf::from(path)),
        })
    }
}

#[derive(Debug, Args)]
pub struct RecordArgs {
    #[arg(long, value_enum, default_value = "nanotube")]
    pub task: TaskArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `expert`, `random` or a checkpoint file.
    #[arg(long, default_value = "expert")]
    pub policy: PolicySource,
    #[arg(long, value_enum, default_value = "mean")]
    pub mode: ModeArg,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub recording: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
    /// Start at the first frame with at least this step.
    #[arg(long)]
    pub from_step: Option<u64>,
    /// Sleep between items to reproduce the recorded pacing.
    #[arg(long)]
    pub realtime: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub recording: PathBuf,
    #[arg(long, value_enum, default_value = "table1")]
    pub style: CsvStyle,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// One recording per attempt (directories are expanded).
    #[arg(required = true)]
    pub recordings: Vec<PathBuf>,
    #[arg(long, default_value = "C61")]
    pub atom: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExpertDemosArgs {
    #[arg(long, default_value_t = 200)]
    pub count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed_start: u64,
    /// Directory for one `.mdil` per episode plus `demos.mdts`.
    #[arg(long)]
    pub out: PathBuf,
    /// Start-position jitter half-width (nm).
    #[arg(long)]
    pub jitter: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainCommon {
    /// `.mdts` tensor file, `.mdil` recording, or a directory of recordings.
    #[arg(long)]
    pub demos: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Run manifest; defaults to `<out>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Mse,
    Nll,
}

#[derive(Debug, Subcommand)]
pub enum TrainCommand {
    Bc {
        #[command(flatten)]
        common: TrainCommon,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, value_enum)]
        loss: Option<LossArg>,
    },
    Gail {
        #[command(flatten)]
        common: TrainCommon,
        #[arg(long)]
        iterations: Option<usize>,
        /// Entropy coefficient.
        #[arg(long)]
        lambda: Option<f64>,
    },
    Irl {
        #[command(flatten)]
        common: TrainCommon,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
    },
    Dagger {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        episodes_per_round: Option<usize>,
        /// Start-position jitter half-width (nm).
        #[arg(long)]
        jitter: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// `expert`, `random` or a checkpoint file.
    #[arg(long)]
    pub policy: PolicySource,
    /// Inclusive range `a..b`, or a comma-separated list.
    #[arg(long, default_value = "0..99")]
    pub seeds: SeedList,
    #[arg(long, value_enum, default_value = "mean")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "nanotube")]
    pub task: TaskArg,
    #[arg(long)]
    pub jitter: Option<f64>,
    /// Seed of the random policy and of sampling noise.
    #[arg(long, default_value_t = 0)]
    pub policy_seed: u64,
    /// Write the report here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WocArgs {
    #[arg(required = true)]
    pub recordings: Vec<PathBuf>,
    #[arg(long, default_value = "C61")]
    pub atom: String,
    /// Also plot the inputs and the aggregate.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedList(pub Vec<u64>);

impl std::str::FromStr for SeedList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("bad seed list `{s}`; use a..b (inclusive) or a,b,c");
        if let Some((a, b)) = s.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b
                .trim()
                .trim_start_matches('=')
                .parse()
                .map_err(|_| bad())?;
            if b < a {
                return Err(bad());
            }
            return Ok(SeedList((a..=b).collect()));
        }
        s.split(',')
            .map(|x| x.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()
            .map(SeedList)
    }
}

/// Architecture of freshly created policies: `obs -> 64 -> 64 -> act`.
pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];

/// Untrained policy of the default architecture with unit normalized std, sampled.
pub fn random_policy(task: TaskId, seed: u64) -> GaussianPolicy {
    let obs = match task {
        TaskId::Nanotube => demoforge_core::env::NANOTUBE_OBS_DIM,
        TaskId::Alanine17 => demoforge_core::env::ALANINE_OBS_DIM,
    };
    GaussianPolicy::new(
        &[obs, DEFAULT_HIDDEN[0], DEFAULT_HIDDEN[1], 3],
        0.0,
        F_MAX,
        rng::mix(seed, 0x7A4D),
    )
    .expect("valid architecture")
}

fn load_demos(path: &Path) -> anyhow::Result<ExpertDataset> {
    let data = if path.extension().is_some_and(|x| x == "mdts") {
        dataset_from_tensors(&TensorFile::read_file(path)?)?
    } else {
        dataset_from_recordings(&recording_paths(path)?)?
    };
    if data.is_empty() {
        bail!("no demonstration samples in {}", path.display());
    }
    Ok(data)
}

fn demos_task(path: &Path) -> TaskId {
    if path.extension().is_some_and(|x| x == "mdts") {
        return TensorFile::read_file(path)
            .ok()
            .and_then(|t| serde_json::from_value(t.meta["task"].clone()).ok())
            .unwrap_or(TaskId::Nanotube);
    }
    recording_paths(path)
        .ok()
        .and_then(|p| p.first().cloned())
        .and_then(|p| Recording::read_file(p).ok())
        .map(|r| r.header.task)
        .unwrap_or(TaskId::Nanotube)
}

fn manifest_path(out: &Path, explicit: Option<&PathBuf>) -> PathBuf {
    explicit.cloned().unwrap_or_else(|| {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    })
}

fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn expand(paths: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = vec![];
    for p in paths {
        out.extend(recording_paths(p)?);
    }
    Ok(out)
}

fn task_config(cfg: &Config, jitter: Option<f64>) -> TaskConfig {
    let mut t = cfg.task;
    if let Some(j) = jitter {
        t.start_jitter = j;
    }
    t
}

/// Owns whatever policy a [`PolicySource`] names.
enum LoadedPolicy {
    Expert(ExpertPolicy),
    Gaussian(GaussianPolicy, TaskId),
}

fn load_policy(
    src: &PolicySource,
    cfg: &Config,
    task: TaskId,
    seed: u64,
) -> anyhow::Result<LoadedPolicy> {
    Ok(match src {
        PolicySource::Expert => LoadedPolicy::Expert(ExpertPolicy {
            config: cfg.expert.to_config(),
        }),
        PolicySource::Random => LoadedPolicy::Gaussian(random_policy(task, seed), task),
        PolicySource::Checkpoint(p) => {
            let ck = Checkpoint::read_file(p)
                .with_context(|| format!("reading checkpoint {}", p.display()))?;
            LoadedPolicy::Gaussian(ck.policy, ck.header.task)
        }
    })
}

fn with_policy<T>(
    loaded: &LoadedPolicy,
    mode: PolicyMode,
    noise_seed: u64,
    f: impl FnOnce(&mut dyn Policy) -> anyhow::Result<T>,
) -> anyhow::Result<T> {
    match loaded {
        LoadedPolicy::Expert(e) => f(&mut e.clone()),
        LoadedPolicy::Gaussian(p, _) => f(&mut StochasticPolicy::new(p, mode, noise_seed)),
    }
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate(a) => simulate(&cfg, a, out),
        Command::Serve(a) => serve(&cfg, a, out),
        Command::Record(a) => record(&cfg, a, out),
        Command::Replay(a) => replay(a, out),
        Command::ExportCsv(a) => {
            let rec = Recording::read_file(&a.recording)?;
            let text = export_csv(&rec, a.style)?;
            match a.out {
                Some(p) => {
                    std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?
                }
                None => out.write_all(text.as_bytes())?,
            }
            Ok(())
        }
        Command::PlotTrajectory(a) => {
            let mut series = vec![];
            for p in expand(&a.recordings)? {
                let rec = Recording::read_file(&p)?;
                let points = rec
                    .atom_trajectory(&a.atom)?
                    .into_iter()
                    .map(|(_, x)| x)
                    .collect();
                let label = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                series.push(Series { label, points });
            }
            let svg = trajectory_svg(&series, &tube_geometry(), &format!("{} trajectory", a.atom));
            std::fs::write(&a.out, svg).with_context(|| format!("writing {}", a.out.display()))?;
            writeln!(out, "{}", json!({ "svg": a.out, "attempts": series.len() }))?;
            Ok(())
        }
        Command::ExpertDemos(a) => expert_demos(&cfg, a, out),
        Command::Train(t) => train(&cfg, t, out),
        Command::Eval(a) => eval(&cfg, a, out),
        Command::AggregateWoc(a) => {
            let mut paths = vec![];
            for p in expand(&a.recordings)? {
                let rec = Recording::read_file(&p)?;
                paths.push(
                    rec.atom_trajectory(&a.atom)?
                        .into_iter()
                        .map(|(_, x)| x)
                        .collect::<Vec<_>>(),
                );
            }
            let tube = tube_geometry();
            let axis = [
                tube.point_to_lab([0.0, 0.0, -10.0]),
                tube.point_to_lab([0.0, 0.0, 10.0]),
            ];
            let report = woc_aggregate(&paths, &axis)?;
            if let Some(svg_path) = &a.svg {
                let mut series: Vec<Series> = paths
                    .iter()
                    .enumerate()
                    .map(|(k, p)| Series {
                        label: format!("attempt {k}"),
                        points: p.clone(),
                    })
                    .collect();
                series.push(Series {
                    label: "aggregate".into(),
                    points: report.aggregate.clone(),
                });
                std::fs::write(
                    svg_path,
                    trajectory_svg(&series, &tube, "wisdom of the crowd"),
                )?;
            }
            writeln!(
                out,
                "{}",
                json!({
                    "inputs": paths.len(),
                    "aggregate_error": report.aggregate_error,
                    "median_individual_error": report.median_individual_error,
                    "ratio": report.ratio,
                    "individual_errors": report.individual_errors,
                })
            )?;
            Ok(())
        }
    }
}

fn simulate(cfg: &Config, a: SimulateArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let task = TaskId::from(a.task);
    let dt = a.dt.unwrap_or(cfg.task.dt);
    let (topology, state) = build_system_at(task, a.seed, cfg.task.temperature)?;
    let mut sim = Simulation::new(topology.clone(), state)?;
    let thermostat = if a.nve {
        Thermostat::None
    } else {
        Thermostat::Langevin {
            gamma: cfg.task.gamma,
            temperature: cfg.task.temperature,
            seed: a.seed,
        }
    };
    let mut header = Header::new(task, topology, dt, a.seed);
    header.frame_interval = a.frame_every.max(1);
    let mut recorder = Recorder::new(header, FRAME_MS);
    let e0 = sim.potential() + sim.kinetic();
    let mut max_dev: f64 = 0.0;
    for k in 0..=a.steps {
        if k > 0 {
            sim.step(dt, thermostat)?;
        }
        max_dev = max_dev.max((sim.potential() + sim.kinetic() - e0).abs());
        if a.record.is_some() {
            recorder.frame(FrameSnapshot {
                step: sim.state().step,
                sim_time: sim.state().time,
                positions: sim.state().positions.clone(),
                user_forces: sim.user_forces().to_vec(),
                potential: sim.potential(),
                kinetic: sim.kinetic(),
            });
        }
    }
    if let Some(p) = &a.record {
        let rec = recorder.finish()?;
        rec.write_file(p)?;
    }
    let e1 = sim.potential() + sim.kinetic();
    writeln!(
        out,
        "{}",
        json!({
            "task": task,
            "steps": a.steps,
            "dt": dt,
            "thermostat": if a.nve { "none" } else { "langevin" },
            "initial_energy": e0,
            "final_energy": e1,
            "potential": sim.potential(),
            "kinetic": sim.kinetic(),
            "max_relative_energy_deviation": max_dev / e0.abs().max(f64::MIN_POSITIVE),
        })
    )?;
    Ok(())
}

fn serve(cfg: &Config, a: ServeArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut server_cfg = cfg.server.clone();
    if let Some(h) = a.host {
        server_cfg.host = h;
    }
    if let Some(p) = a.port {
        server_cfg.port = p;
    }
    if let Some(t) = a.task {
        server_cfg.task = t.into();
    }
    if let Some(t) = a.tick_hz {
        server_cfg.tick_hz = t;
    }
    if let Some(s) = a.seed {
        server_cfg.seed = s;
    }
    let task_cfg = cfg.task;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let server = Server::bind(server_cfg, task_cfg).await?;
        writeln!(out, "listening on ws://{}/session/{{id}}", server.addr)?;
        out.flush()?;
        server.run().await?;
        anyhow::Ok(())
    })
}

fn record(cfg: &Config, a: RecordArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let task = TaskId::from(a.task);
    let loaded = load_policy(&a.policy, cfg, task, a.seed)?;
    let task_cfg = cfg.task;
    let max_steps = a.max_steps.unwrap_or(task_cfg.step_budget);
    let kind = SourceKind::Scripted;
    let (traj, mut rec) = with_policy(&loaded, a.mode.into(), a.seed, |p| {
        Ok(record_episode(p, task, a.seed, max_steps, task_cfg, kind)?)
    })?;
    rec.header.created_unix_ms = unix_ms();
    let bytes = rec.write_file(&a.out)?;
    writeln!(
        out,
        "{}",
        json!({ "out": a.out, "frames": rec.frames().len(), "events": rec.events().len(), "bytes": bytes,
                "steps": traj.len(), "success": traj.success })
    )?;
    Ok(())
}

fn unix_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn replay(a: ReplayArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    if !(a.speed > 0.0 && a.speed.is_finite()) {
        bail!("--speed must be positive");
    }
    let rec = Recording::read_file(&a.recording)?;
    let mut player = Player::new(std::sync::Arc::new(rec), a.speed);
    if let Some(s) = a.from_step {
        player.seek(s)?;
    }
    player.play();
    loop {
        if a.realtime {
            if let Some(d) = player.delay_to_next() {
                std::thread::sleep(std::time::Duration::from_secs_f64(d / 1000.0));
            }
        }
        let Some(item) = player.advance() else { break };
        let line = match item {
            ReplayItem::Frame(f) => {
                json!({ "kind": "frame", "wall_time_ms": f.wall_time_ms, "frame": f })
            }
            ReplayItem::Event(e) => {
                json!({ "kind": "event", "wall_time_ms": e.wall_time_ms, "event": e })
            }
        };
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn expert_demos(cfg: &Config, a: ExpertDemosArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let task_cfg = task_config(cfg, a.jitter);
    let mut expert = ExpertPolicy {
        config: cfg.expert.to_config(),
    };
    let mut data = ExpertDataset::default();
    let mut successes = 0;
    for seed in a.seed_start..a.seed_start + a.count {
        let (traj, mut rec) = record_episode(
            &mut expert,
            TaskId::Nanotube,
            seed,
            task_cfg.step_budget,
            task_cfg,
            SourceKind::Scripted,
        )?;
        rec.header.created_unix_ms = unix_ms();
        rec.write_file(a.out.join(format!("episode_{seed:06}.mdil")))?;
        data.push_trajectory(&traj, SourceKind::Scripted);
        successes += traj.success as u64;
    }
    let tensors = a.out.join("demos.mdts");
    dataset_to_tensors(&data, TaskId::Nanotube).write_file(&tensors)?;
    writeln!(
        out,
        "{}",
        json!({ "episodes": a.count, "successes": successes, "samples": data.len(), "tensors": tensors, "dir": a.out })
    )?;
    Ok(())
}

fn save_policy(
    policy: GaussianPolicy,
    task: TaskId,
    algorithm: &str,
    seed: u64,
    out_path: &Path,
) -> anyhow::Result<()> {
    Checkpoint::new(policy, task, algorithm, seed)
        .write_file(out_path)
        .with_context(|| format!("writing {}", out_path.display()))
}

fn train(cfg: &Config, cmd: TrainCommand, out: &mut dyn Write) -> anyhow::Result<()> {
    match cmd {
        TrainCommand::Bc {
            common,
            epochs,
            loss,
        } => {
            let data = load_demos(&common.demos)?;
            let task = demos_task(&common.demos);
            let (obs_dim, act_dim) = data.dims()?;
            let mut bc = cfg.bc;
            bc.seed = common.seed;
            if let Some(e) = epochs {
                bc.epochs = e;
            }
            if let Some(l) = loss {
                bc.loss = match l {
                    LossArg::Mse => LossKind::Mse,
                    LossArg::Nll => LossKind::Nll,
                };
            }
            let mut sizes = vec![obs_dim];
            sizes.extend_from_slice(&cfg.dagger.policy_hidden);
            sizes.push(act_dim);
            let init = GaussianPolicy::new(
                &sizes,
                cfg.dagger.init_log_std,
                F_MAX,
                rng::mix(common.seed, 1),
            )?;
            let r = bc_train(&data, init, &bc)?;
            save_policy(r.policy, task, "bc", common.seed, &common.out)?;
            let manifest = json!({
                "algorithm": "bc",
                "seed": common.seed,
                "demos": common.demos,
                "samples": data.len(),
                "config": bc,
                "checkpoint": common.out,
                "metrics": { "initial_train_loss": r.initial_train_loss, "train_loss": r.train_loss, "val_loss": r.val_loss },
            });
            write_json(
                &manifest_path(&common.out, common.manifest.as_ref()),
                &manifest,
            )?;
            writeln!(
                out,
                "{}",
                json!({ "checkpoint": common.out, "final_train_loss": r.train_loss.last(), "final_val_loss": r.val_loss.last() })
            )?;
        }
        TrainCommand::Gail {
            common,
            iterations,
            lambda,
        } => {
            let data = load_demos(&common.demos)?;
            let task = demos_task(&common.demos);
            let mut gail = cfg.gail.clone();
            gail.task = cfg.task;
            if let Some(i) = iterations {
                gail.iterations = i;
            }
            if let Some(l) = lambda {
                gail.pg.lambda = l;
            }
            let r = gail_train(task, &data, &gail, common.seed)?;
            save_policy(r.policy, task, "gail", common.seed, &common.out)?;
            let manifest = json!({
                "algorithm": "gail",
                "seed": common.seed,
                "demos": common.demos,
                "samples": data.len(),
                "config": gail,
                "checkpoint": common.out,
                "metrics": { "iterations": r.iterations, "final_disc_accuracy": r.final_disc_accuracy },
            });
            write_json(
                &manifest_path(&common.out, common.manifest.as_ref()),
                &manifest,
            )?;
            let last = r.iterations.last();
            writeln!(
                out,
                "{}",
                json!({ "checkpoint": common.out, "final_disc_accuracy": r.final_disc_accuracy,
                        "last_success_rate": last.map(|i| i.success_rate) })
            )?;
        }
        TrainCommand::Irl {
            common,
            iterations,
            lr,
        } => {
            let data = load_demos(&common.demos)?;
            let task = demos_task(&common.demos);
            if task != TaskId::Nanotube {
                bail!("IRL runs on the discretized nanotube task only");
            }
            let mut irl = cfg.irl;
            if let Some(i) = iterations {
                irl.iterations = i;
            }
            if let Some(l) = lr {
                irl.lr = l;
            }
            let trajs = dataset_trajectories(&data, task);
            let (mdp, discrete) = discretize_task(&trajs, &cfg.discretizer)?;
            let r = maxent_irl(&mdp, &discrete, &irl)?;
            let vi = value_iteration(&mdp.clone().with_reward(r.reward.theta.clone())?)?;
            let result = json!({
                "algorithm": "maxent_irl",
                "seed": common.seed,
                "demos": common.demos,
                "discretizer": cfg.discretizer,
                "config": irl,
                "theta": r.reward.theta,
                "greedy_policy": vi.policy,
                "gap_trace": r.gap_trace,
            });
            write_json(&common.out, &result)?;
            let manifest = json!({ "algorithm": "maxent_irl", "seed": common.seed, "output": common.out,
                                   "final_gap": r.gap_trace.last() });
            write_json(
                &manifest_path(&common.out, common.manifest.as_ref()),
                &manifest,
            )?;
            writeln!(
                out,
                "{}",
                json!({ "reward": common.out, "final_gap": r.gap_trace.last() })
            )?;
        }
        TrainCommand::Dagger {
            seed,
            out: out_path,
            manifest,
            rounds,
            episodes_per_round,
            jitter,
        } => {
            let mut dagger = cfg.dagger.clone();
            dagger.task = task_config(cfg, jitter);
            if let Some(r) = rounds {
                dagger.rounds = r;
            }
            if let Some(e) = episodes_per_round {
                dagger.episodes_per_round = e;
            }
            let mut expert = ExpertPolicy {
                config: cfg.expert.to_config(),
            };
            let r = dagger_train(TaskId::Nanotube, &mut expert, &dagger, seed)?;
            save_policy(r.policy, TaskId::Nanotube, "dagger", seed, &out_path)?;
            let m = json!({
                "algorithm": "dagger",
                "seed": seed,
                "config": dagger,
                "checkpoint": out_path,
                "metrics": { "dataset_sizes": r.dataset_sizes, "rollout_success": r.rollout_success },
            });
            write_json(&manifest_path(&out_path, manifest.as_ref()), &m)?;
            writeln!(
                out,
                "{}",
                json!({ "checkpoint": out_path, "dataset_sizes": r.dataset_sizes })
            )?;
        }
    }
    Ok(())
}

fn eval(cfg: &Config, a: EvalArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let seeds = a.seeds.0;
    if seeds.is_empty() {
        bail!("no seeds to evaluate");
    }
    let loaded = load_policy(&a.policy, cfg, a.task.into(), a.policy_seed)?;
    let task = match &loaded {
        LoadedPolicy::Gaussian(_, t) => *t,
        LoadedPolicy::Expert(_) => a.task.into(),
    };
    let task_cfg = task_config(cfg, a.jitter);
    let mode = if a.policy == PolicySource::Random {
        PolicyMode::Sample
    } else {
        a.mode.into()
    };
    let outcomes = with_policy(&loaded, mode, a.policy_seed, |p| {
        Ok(evaluate_success(p, task, &seeds, task_cfg)?)
    })?;
    let successes = outcomes.iter().filter(|s| **s).count();
    let policy_name = match &a.policy {
        PolicySource::Expert => "expert".to_string(),
        PolicySource::Random => "random".to_string(),
        PolicySource::Checkpoint(p) => p.display().to_string(),
    };
    let report = json!({
        "policy": policy_name,
        "task": task,
        "mode": if mode == PolicyMode::Sample { "sample" } else { "mean" },
        "start_jitter": task_cfg.start_jitter,
        "episodes": seeds.len(),
        "successes": successes,
        "success_rate": successes as f64 / seeds.len() as f64,
        "seeds": seeds,
        "outcomes": outcomes,
    });
    if let Some(p) = &a.out {
        write_json(p, &report)?;
    }
    writeln!(out, "{report}")?;
    Ok(())
}
