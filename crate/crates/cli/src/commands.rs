use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hin_core::diversity::{diversity_mosaic, MosaicSource};
use hin_core::evaluation::{
    run_alpha_grid, run_randomization_study, write_results_csv, write_study_csv, GridConfig,
    StudyConfig,
};
use hin_core::ingest::{self, DatasetManifest};
use hin_core::randomizer::{replicate_records, write_replicate_manifest};
use hin_core::recommender::{
    ipp_recommend, ubcf_recommend, Exclusion, RecommendationSet, TwoPath, UbcfConfig,
};
use hin_core::{snapshot, synth, walk, Hin};

use crate::manifest::{fingerprint, strip_jobs, RunManifest};
use crate::plot::{self, PlotKind};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "hinlab",
    version,
    about = "Meta-path diversity and recommendation experiments on heterogeneous information networks"
)]
struct Cli {
    /// Worker threads for parallel stages (outputs do not depend on it).
    #[arg(long, short = 'j', global = true, env = "HINLAB_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a dataset into a binary network snapshot.
    Ingest(IngestArgs),
    /// Write a synthetic dataset in MovieLens or relation-table layout.
    Synth(SynthArgs),
    /// Dump a meta-path walk distribution.
    Walk(WalkArgs),
    /// Mean individual diversity mosaic of R_S^-1 R_X R_T paths.
    Mosaic(MosaicArgs),
    /// Produce one recommendation set.
    Recommend(RecommendArgs),
    /// F1 and diversities over an alpha by list-size grid.
    Grid(GridArgs),
    /// Grid on the original network against shuffled replicates.
    ShuffleStudy(StudyArgs),
    /// Emit a Python plot script for one of the CSV outputs.
    Plot(PlotArgs),
    /// Re-run the command recorded in a run manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args, Serialize)]
struct IngestArgs {
    /// MovieLens 100K directory (u.data, u.item, u.user).
    #[arg(
        long,
        conflicts_with = "manifest",
        required_unless_present = "manifest"
    )]
    movielens: Option<PathBuf>,
    /// TOML relation-table manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Likes threshold for MovieLens.
    #[arg(long, default_value_t = ingest::LIKES_THRESHOLD)]
    threshold: i32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SynthKind {
    Movielens,
    Douban,
}

#[derive(Debug, Args, Serialize)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "movielens")]
    kind: SynthKind,
    #[arg(long, default_value_t = 240)]
    users: usize,
    #[arg(long, default_value_t = 320)]
    movies: usize,
    #[arg(long, default_value_t = 40)]
    locations: usize,
    #[arg(long, default_value_t = 2021)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct WalkArgs {
    #[arg(long)]
    hin: PathBuf,
    /// Meta-path, e.g. "R_likes R_Ty" (invert a step with ^-1).
    #[arg(long)]
    path: String,
    /// Start node label; uniform over the source group when absent.
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct MosaicArgs {
    #[arg(long)]
    hin: PathBuf,
    /// User-content relations for the rows.
    #[arg(long, value_delimiter = ',', default_value = "Oc,Ag,Ge,Lo")]
    sources: Vec<String>,
    /// Skip the row that starts at the user group itself.
    #[arg(long)]
    no_identity: bool,
    /// Item-content relations for the columns.
    #[arg(long, value_delimiter = ',', default_value = "Ty,Ye")]
    targets: Vec<String>,
    /// Baselines whose recommendations are added as middle relations.
    #[arg(long, value_delimiter = ',', default_value = "ubcf,ipp")]
    baselines: Vec<Baseline>,
    #[arg(long, default_value = "R_likes")]
    likes: String,
    #[arg(long, default_value = "R_rates")]
    rates: String,
    /// Baseline list size.
    #[arg(long, default_value_t = 5)]
    list_size: usize,
    /// UBCF neighbourhood size.
    #[arg(long, default_value_t = 50)]
    neighbors: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Baseline {
    Ubcf,
    Ipp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Method {
    TwoPath,
    Ubcf,
    Ipp,
}

#[derive(Debug, Args, Serialize)]
struct RecommendArgs {
    #[arg(long)]
    hin: PathBuf,
    #[arg(long, value_enum, default_value = "two-path")]
    method: Method,
    /// User-content relation (two-path).
    #[arg(long, default_value = "Lo")]
    x: String,
    /// Item-content relation (two-path).
    #[arg(long, default_value = "Ty")]
    y: String,
    #[arg(long, default_value_t = 0.4)]
    alpha: f64,
    #[arg(long, short = 'n', default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 50)]
    neighbors: usize,
    #[arg(long, default_value = "R_likes")]
    likes: String,
    #[arg(long, default_value = "R_rates")]
    rates: String,
    /// Exclude rated rather than liked items (two-path).
    #[arg(long)]
    exclude_rated: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct GridArgs {
    #[arg(long)]
    hin: PathBuf,
    #[arg(long, default_value = "Lo")]
    x: String,
    #[arg(long, default_value = "Ty")]
    y: String,
    #[arg(long, value_delimiter = ',', default_value = "1,0.8,0.6,0.4,0.2,0")]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of likes hidden for testing.
    #[arg(long, default_value_t = 0.1)]
    holdout: f64,
    #[arg(long, default_value = "R_likes")]
    likes: String,
    #[arg(long, default_value = "R_rates")]
    rates: String,
    /// Item-content relation for recommended diversity.
    #[arg(long, default_value = "R_Ty")]
    diversity: String,
    #[arg(long)]
    exclude_rated: bool,
    /// Dataset name recorded in the results.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct StudyArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Relation to shuffle.
    #[arg(long, default_value = "Lo")]
    shuffle: String,
    #[arg(long, default_value_t = 10)]
    replicates: usize,
    /// Attempted swaps per edge.
    #[arg(long, default_value_t = hin_core::randomizer::DEFAULT_SWAP_FACTOR)]
    swap_factor: f64,
    /// Also write per-replicate results here.
    #[arg(long)]
    results_out: Option<PathBuf>,
    /// Also write the replicate manifest (seed, Jaccard to original) here.
    #[arg(long)]
    replicates_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct PlotArgs {
    #[arg(long, value_enum)]
    kind: PlotKind,
    /// CSV the script reads.
    #[arg(long)]
    input: PathBuf,
    /// Image the script writes.
    #[arg(long, default_value = "plot.png")]
    image: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ReplayArgs {
    manifest: PathBuf,
}

/// Parses `argv` (program name first), runs the command and maps the
/// outcome to an exit code.
pub fn dispatch(argv: Vec<OsString>) -> u8 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    let args: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match run_with_jobs(cli, &strip_jobs(&args)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<hin_core::Error>() {
            return if err.is_data_error() {
                EXIT_DATA
            } else {
                EXIT_USAGE
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some()
            || cause.downcast_ref::<serde_json::Error>().is_some()
        {
            return EXIT_DATA;
        }
    }
    EXIT_USAGE
}

fn run_with_jobs(cli: Cli, args: &[String]) -> Result<()> {
    match cli.jobs {
        #[cfg(feature = "parallel")]
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .context("building thread pool")?;
            pool.install(|| run(cli.command, args))
        }
        _ => run(cli.command, args),
    }
}

fn run(command: Command, args: &[String]) -> Result<()> {
    match command {
        Command::Ingest(a) => ingest_cmd(&a, args),
        Command::Synth(a) => synth_cmd(&a, args),
        Command::Walk(a) => walk_cmd(&a, args),
        Command::Mosaic(a) => mosaic_cmd(&a, args),
        Command::Recommend(a) => recommend_cmd(&a, args),
        Command::Grid(a) => grid_cmd(&a, args),
        Command::ShuffleStudy(a) => study_cmd(&a, args),
        Command::Plot(a) => plot_cmd(&a, args),
        Command::Replay(a) => replay_cmd(&a),
    }
}

fn config_of<T: Serialize>(a: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(a)?)
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn load_hin(path: &Path) -> Result<(Hin, String)> {
    let hin = snapshot::load(path).with_context(|| format!("loading {}", path.display()))?;
    Ok((hin, fingerprint(&[path.to_path_buf()])?))
}

fn ingest_cmd(a: &IngestArgs, args: &[String]) -> Result<()> {
    let (hin, inputs) = match (&a.movielens, &a.manifest) {
        (Some(dir), None) => {
            let hin = ingest::parse_movielens_100k(dir)?;
            let hin = ingest::derive_likes(&hin, "R_rates", a.threshold)?;
            let mut files: Vec<PathBuf> = ["u.data", "u.item", "u.user"]
                .iter()
                .map(|f| dir.join(f))
                .collect();
            if dir.join("u.genre").exists() {
                files.push(dir.join("u.genre"));
            }
            (hin, files)
        }
        (None, Some(path)) => {
            let manifest = DatasetManifest::from_path(path)?;
            let hin = manifest.load()?;
            let mut files = vec![path.clone()];
            files.extend(manifest.tables.iter().map(|t| t.path.clone()));
            (hin, files)
        }
        _ => bail!("exactly one of --movielens or --manifest is required"),
    };
    let mut buf = Vec::new();
    snapshot::write_snapshot(&hin, &mut buf)?;
    write_output(&a.out, &buf)?;
    let mut m = RunManifest::new("ingest", args, config_of(a)?, None, fingerprint(&inputs)?);
    for g in hin.groups() {
        m.notes.push(format!("group {} {}", g.name(), g.len()));
    }
    for r in hin.relations() {
        m.notes.push(format!(
            "relation {} {}->{} {}",
            r.name(),
            r.source(),
            r.target(),
            r.len()
        ));
    }
    m.write_for(&a.out)?;
    for note in &m.notes {
        println!("{note}");
    }
    Ok(())
}

fn synth_cmd(a: &SynthArgs, args: &[String]) -> Result<()> {
    let config = synth::SynthConfig {
        users: a.users,
        movies: a.movies,
        locations: a.locations,
        seed: a.seed,
        ..synth::SynthConfig::default()
    };
    let files: Vec<PathBuf> = match a.kind {
        SynthKind::Movielens => {
            synth::write_movielens_like(&a.out, &config)?;
            ["u.data", "u.item", "u.user", "u.genre"]
                .iter()
                .map(|f| a.out.join(f))
                .collect()
        }
        SynthKind::Douban => vec![synth::write_douban_like(&a.out, &config)?],
    };
    let m = RunManifest::new(
        "synth",
        args,
        config_of(a)?,
        Some(a.seed),
        fingerprint(&files)?,
    );
    m.write_for(&a.out.join("synth"))?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn walk_cmd(a: &WalkArgs, args: &[String]) -> Result<()> {
    let (hin, fp) = load_hin(&a.hin)?;
    let path = hin.meta_path(&a.path)?;
    let pmf = match &a.source {
        Some(label) => {
            let s = hin.group(path.source())?.require(label)?;
            walk::source_distribution(&hin, &path, s)?
        }
        None => walk::collective_distribution(&hin, &path)?,
    };
    let mut buf = Vec::new();
    pmf.write_csv(&hin, &mut buf)?;
    write_output(&a.out, &buf)?;
    let mut m = RunManifest::new("walk", args, config_of(a)?, None, fp);
    m.notes.push(format!("lost_mass {}", pmf.lost_mass));
    m.write_for(&a.out)?;
    Ok(())
}

fn relation_name(hin: &Hin, short: &str) -> Result<String> {
    Ok(hin.resolve_relation_name(short)?)
}

fn rated_relation(hin: &Hin, rates: &str) -> Option<String> {
    hin.has_relation(rates).then(|| rates.to_string())
}

fn mosaic_cmd(a: &MosaicArgs, args: &[String]) -> Result<()> {
    let (mut hin, fp) = load_hin(&a.hin)?;
    let rated = rated_relation(&hin, &a.rates);
    let mut middles = vec![relation_name(&hin, &a.likes)?];
    for b in &a.baselines {
        let (name, set) = match b {
            Baseline::Ubcf => {
                let mut cfg = UbcfConfig::new(&a.likes, rated.as_deref(), a.list_size);
                cfg.neighbors = a.neighbors;
                ("R_rec_UBCF", ubcf_recommend(&hin, &cfg)?)
            }
            Baseline::Ipp => (
                "R_rec_IPP",
                ipp_recommend(&hin, &a.likes, rated.as_deref(), a.list_size)?,
            ),
        };
        hin = hin.with_link_group(set.to_link_group(name))?;
        middles.push(name.to_string());
    }
    let mut sources = Vec::new();
    if !a.no_identity {
        sources.push(MosaicSource::Identity);
    }
    for s in &a.sources {
        sources.push(MosaicSource::Relation(relation_name(&hin, s)?));
    }
    let targets = a
        .targets
        .iter()
        .map(|t| relation_name(&hin, t))
        .collect::<Result<Vec<_>>>()?;
    let mosaic = diversity_mosaic(&hin, &sources, &middles, &targets)?;
    let mut buf = Vec::new();
    mosaic.write_csv(&mut buf)?;
    write_output(&a.out, &buf)?;
    let mut m = RunManifest::new("mosaic", args, config_of(a)?, None, fp);
    m.notes
        .extend(mosaic.warnings.iter().map(|w| format!("skipped: {w}")));
    m.write_for(&a.out)?;
    Ok(())
}

fn recommend_cmd(a: &RecommendArgs, args: &[String]) -> Result<()> {
    let (hin, fp) = load_hin(&a.hin)?;
    let rated = rated_relation(&hin, &a.rates);
    let set: RecommendationSet = match a.method {
        Method::TwoPath => {
            let tp = TwoPath::new(&hin, &a.likes, &a.x, &a.y)?;
            let excl = match (&rated, a.exclude_rated) {
                (Some(r), true) => Exclusion::Rated(r.clone()),
                _ => Exclusion::Liked(a.likes.clone()),
            };
            tp.recommend(&hin, a.alpha, a.n, &excl)?
        }
        Method::Ubcf => {
            let mut cfg = UbcfConfig::new(&a.likes, rated.as_deref(), a.n);
            cfg.neighbors = a.neighbors;
            ubcf_recommend(&hin, &cfg)?
        }
        Method::Ipp => ipp_recommend(&hin, &a.likes, rated.as_deref(), a.n)?,
    };
    let mut buf = Vec::new();
    set.write_csv(&hin, &mut buf)?;
    write_output(&a.out, &buf)?;
    let mut m = RunManifest::new("recommend", args, config_of(a)?, None, fp);
    m.notes.push(format!("provenance {}", set.provenance));
    m.write_for(&a.out)?;
    Ok(())
}

fn grid_config(a: &GridArgs, hin: &Hin) -> Result<GridConfig> {
    let x = relation_name(hin, &a.x)?;
    let y = relation_name(hin, &a.y)?;
    let mut cfg = GridConfig::new(
        a.dataset
            .as_deref()
            .unwrap_or_else(|| a.hin.file_stem().and_then(|s| s.to_str()).unwrap_or("hin")),
        &x,
        &y,
        a.seed,
    );
    cfg.alphas = a.alphas.clone();
    cfg.list_sizes = a.sizes.clone();
    cfg.split.fraction = a.holdout;
    cfg.split.likes = a.likes.clone();
    cfg.split.rates = Some(a.rates.clone());
    cfg.diversity_relation = a.diversity.clone();
    cfg.exclude_rated = a.exclude_rated;
    Ok(cfg)
}

const AVERAGING_NOTE: &str =
    "precision, recall and f1 are macro-averaged over users with at least one test edge";

fn grid_cmd(a: &GridArgs, args: &[String]) -> Result<()> {
    let (hin, fp) = load_hin(&a.hin)?;
    let cfg = grid_config(a, &hin)?;
    let results = run_alpha_grid(&hin, &cfg)?;
    let mut buf = Vec::new();
    write_results_csv(&results, &mut buf)?;
    write_output(&a.out, &buf)?;
    let mut m = RunManifest::new("grid", args, config_of(a)?, Some(a.seed), fp);
    m.notes.push(AVERAGING_NOTE.into());
    m.notes
        .push("one likes split shared by every grid cell".into());
    m.write_for(&a.out)?;
    Ok(())
}

fn study_cmd(a: &StudyArgs, args: &[String]) -> Result<()> {
    let (hin, fp) = load_hin(&a.grid.hin)?;
    let grid = grid_config(&a.grid, &hin)?;
    let shuffled = relation_name(&hin, &a.shuffle)?;
    let mut cfg = StudyConfig::new(grid, &shuffled, a.replicates);
    cfg.swap_factor = a.swap_factor;
    let outcome = run_randomization_study(&hin, &cfg)?;

    let mut buf = Vec::new();
    write_study_csv(&outcome.rows, &mut buf)?;
    write_output(&a.grid.out, &buf)?;
    let mut m = RunManifest::new("shuffle-study", args, config_of(a)?, Some(a.grid.seed), fp);
    m.notes.push(AVERAGING_NOTE.into());
    m.notes
        .push("original and replicates share one likes split".into());
    m.write_for(&a.grid.out)?;

    if let Some(path) = &a.results_out {
        let mut all = outcome.original.clone();
        all.extend(outcome.replicates.iter().cloned());
        let mut buf = Vec::new();
        write_results_csv(&all, &mut buf)?;
        write_output(path, &buf)?;
        m.write_for(path)?;
    }
    if let Some(path) = &a.replicates_out {
        // replicate seeds are derived from the split seed; regenerate for the manifest
        let split = hin_core::evaluation::split_likes(&hin, &cfg.grid.split)?;
        let variants = hin_core::randomizer::replicate_stream(
            &split.train,
            &shuffled,
            cfg.master_seed,
            cfg.replicates,
            cfg.swap_factor,
        )?;
        let records = replicate_records(&split.train, &variants, &shuffled, cfg.master_seed)?;
        let mut buf = Vec::new();
        write_replicate_manifest(&records, &mut buf)?;
        write_output(path, &buf)?;
        m.write_for(path)?;
    }
    Ok(())
}

fn plot_cmd(a: &PlotArgs, args: &[String]) -> Result<()> {
    let input = a
        .input
        .to_str()
        .ok_or_else(|| anyhow!("input path is not valid UTF-8"))?;
    let text = plot::script(a.kind, input, &a.image);
    write_output(&a.out, text.as_bytes())?;
    let fp = if a.input.exists() {
        fingerprint(std::slice::from_ref(&a.input))?
    } else {
        String::new()
    };
    RunManifest::new("plot", args, config_of(a)?, None, fp).write_for(&a.out)?;
    Ok(())
}

fn replay_cmd(a: &ReplayArgs) -> Result<()> {
    let m = RunManifest::read(&a.manifest)?;
    if m.command == "replay" {
        bail!("refusing to replay a replay manifest");
    }
    let mut argv: Vec<OsString> = vec!["hinlab".into()];
    argv.extend(m.args.iter().map(OsString::from));
    let cli =
        Cli::try_parse_from(&argv).map_err(|e| anyhow!("manifest arguments do not parse: {e}"))?;
    if std::mem::discriminant(&cli.command)
        == std::mem::discriminant(&Command::Replay(ReplayArgs {
            manifest: PathBuf::new(),
        }))
    {
        bail!("refusing to replay a replay manifest");
    }
    run(cli.command, &m.args)
}
