//! `geofod` command-line front end.
//!
//! Every command writes a `*.manifest.json` next to its main output that
//! records the resolved arguments, so runs can be reproduced. Exit status is
//! 0 on success, 1 for invalid input or arguments and 2 for runtime or
//! numerical failures; errors are also reported as JSON on stderr.

mod plot;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use geofod::bench::{run_benchmark, BenchmarkConfig, Pipeline};
use geofod::dgp::{generate, DgpConfig, DgpName};
use geofod::dist::{pairwise, DistanceMatrix, MetricSpec};
use geofod::embed::{classical_mds, isomap, Embedding};
use geofod::functional::{load_csv, FunctionalDataset, LABEL_COLUMN};
use geofod::score::{lof_from_distances, lof_on_coords, LofConfig};

const SCHEMA: &str = include_str!("../schema/benchmark-config.schema.json");

#[derive(Debug, Parser)]
#[command(name = "geofod", version, about = "Geometric outlier detection for functional data")]
struct Cli {
    /// Seed for data generation; overrides the benchmark base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Main output file (a directory for `benchmark`).
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads for `benchmark`.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Do not print written paths.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a labeled dataset from a synthetic DGP.
    Generate(GenerateArgs),
    /// Embed a dataset with classical MDS or ISOMAP.
    Embed(EmbedArgs),
    /// LOF scores from an embedding or a distance matrix.
    Score(ScoreArgs),
    /// Run a replicated AUC benchmark from a JSON config.
    Benchmark(BenchmarkArgs),
    /// Goodness of fit of classical MDS for every dimension.
    Gof(GofArgs),
    /// SVG scatterplot matrix of an embedding.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    dgp: DgpName,
    #[arg(long)]
    n: usize,
    /// Outlier ratio in [0, 0.1].
    #[arg(long)]
    r: f64,
    /// Grid size; defaults per DGP.
    #[arg(long)]
    m: Option<usize>,
    /// DGP parameter as key=value, repeatable.
    #[arg(long = "param", value_parser = parse_key_value)]
    params: Vec<(String, f64)>,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Dataset CSV: one curve per row, header of grid points.
    #[arg(long, short)]
    input: PathBuf,
    /// The input has no header row.
    #[arg(long)]
    no_header: bool,
    /// Name of the 0/1 label column, if any.
    #[arg(long, default_value = LABEL_COLUMN)]
    label_column: String,
    #[arg(long, default_value = "lp:2")]
    metric: MetricSpec,
    /// Use first derivatives of the curves.
    #[arg(long)]
    deriv: bool,
}

#[derive(Debug, Args)]
struct EmbedArgs {
    #[command(flatten)]
    input: InputArgs,
    /// `mds` or `isomap:<k>` (`isomap:full` for k = n - 1).
    #[arg(long, default_value = "mds")]
    method: Pipeline,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    dim: u64,
    /// Also write the pairwise distance matrix here.
    #[arg(long)]
    save_distances: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
struct ScoreSource {
    /// Embedding CSV (`dim1,...,dimd[,label]`).
    #[arg(long)]
    embedding: Option<PathBuf>,
    /// Headerless square distance matrix CSV.
    #[arg(long)]
    distances: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[command(flatten)]
    source: ScoreSource,
    /// LOF neighbourhood size; defaults to round(0.75 n).
    #[arg(long)]
    minpts: Option<usize>,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    /// JSON benchmark config.
    #[arg(long, short, required_unless_present = "print_schema")]
    config: Option<PathBuf>,
    /// Override the number of replications.
    #[arg(long)]
    replications: Option<usize>,
    /// Override the outlier ratios (comma separated).
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<f64>>,
    /// Override the default embedding dimension.
    #[arg(long)]
    embed_dim: Option<usize>,
    /// Print the config JSON schema and exit.
    #[arg(long)]
    print_schema: bool,
}

#[derive(Debug, Args)]
struct GofArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Rows in the table; defaults to n.
    #[arg(long)]
    max_dim: Option<usize>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Embedding CSV.
    #[arg(long)]
    embedding: PathBuf,
    /// Score CSV used for shading.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Plot only the first this many dimensions.
    #[arg(long)]
    dims: Option<usize>,
}

fn parse_key_value(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("value of {k} is not a number"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    fn to_json(&self) -> Value {
        let (kind, msg) = match self {
            CliError::Validation(m) => ("validation", m),
            CliError::Runtime(m) => ("runtime", m),
        };
        json!({ "error": { "kind": kind, "message": msg } })
    }
}

impl From<geofod::Error> for CliError {
    fn from(e: geofod::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn context(what: impl std::fmt::Display) -> impl FnOnce(geofod::Error) -> CliError {
    move |e| match CliError::from(e) {
        CliError::Validation(m) => CliError::Validation(format!("{what}: {m}")),
        CliError::Runtime(m) => CliError::Runtime(format!("{what}: {m}")),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

/// `dir/name.csv` with `suffix` becomes `dir/name.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> geofod::Result<()>) -> CliResult<()> {
    let mut w = create(path)?;
    f(&mut w).map_err(context(path.display()))?;
    w.flush().map_err(io_err(path))
}

fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    writeln!(w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

struct Run<'a> {
    cli: &'a Cli,
    written: Vec<PathBuf>,
}

impl Run<'_> {
    fn wrote(&mut self, path: &Path) {
        self.written.push(path.to_path_buf());
    }

    /// Writes the manifest for this run to `path`.
    fn manifest(&mut self, path: PathBuf, command: &str, config: Value, seed: Option<u64>, inputs: &[&Path]) -> CliResult<()> {
        let manifest = json!({
            "command": command,
            "argv": std::env::args().collect::<Vec<_>>(),
            "config": config,
            "seed": seed,
            "inputs": inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "outputs": self.written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "version": env!("CARGO_PKG_VERSION"),
            "timestamp": chrono::Utc::now().to_rfc3339(),
        });
        write_json(&path, &manifest)?;
        self.wrote(&path);
        Ok(())
    }

    fn report(&self) {
        if !self.cli.quiet {
            for p in &self.written {
                println!("wrote {}", p.display());
            }
        }
    }

    fn output_or(&self, default: &str) -> PathBuf {
        self.cli.output.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

fn load_input(args: &InputArgs) -> CliResult<FunctionalDataset> {
    let label = has_column(&args.input, &args.label_column, !args.no_header)?;
    let ds = load_csv(&args.input, !args.no_header, label.then_some(args.label_column.as_str()))
        .map_err(context(args.input.display()))?;
    if args.deriv {
        ds.to_derivative().map_err(context("derivative"))
    } else {
        Ok(ds)
    }
}

/// Whether the header row of `path` contains `column`.
fn has_column(path: &Path, column: &str, has_header: bool) -> CliResult<bool> {
    if !has_header {
        return Ok(false);
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let header = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    Ok(header.split(',').any(|c| c.trim().trim_matches('"') == column))
}

fn input_config(args: &InputArgs) -> Value {
    json!({
        "input": args.input.display().to_string(),
        "header": !args.no_header,
        "label_column": args.label_column,
        "metric": args.metric.to_string(),
        "deriv": args.deriv,
    })
}

fn cmd_generate(run: &mut Run, args: &GenerateArgs) -> CliResult<()> {
    let mut cfg = DgpConfig::new(args.dgp, args.n, args.r, run.cli.seed.unwrap_or(0));
    if let Some(m) = args.m {
        cfg = cfg.with_m(m);
    }
    for (k, v) in &args.params {
        cfg = cfg.with_param(k, *v);
    }
    cfg.validate()?;
    let ds = generate(&cfg)?;
    let out = run.output_or(&format!("{}.csv", args.dgp));
    write_with(&out, |w| ds.write_csv(w))?;
    run.wrote(&out);
    let meta = sibling(&out, "meta.json");
    write_json(&meta, &Value::Object(ds.meta.clone()))?;
    run.wrote(&meta);
    let config = serde_json::to_value(&cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    run.manifest(sibling(&out, "manifest.json"), "generate", config, Some(cfg.seed), &[])
}

fn embed_with(d: &DistanceMatrix, method: Pipeline, dim: usize) -> CliResult<Embedding> {
    let emb = match method {
        Pipeline::Mds { .. } => classical_mds(d, dim)?,
        Pipeline::Isomap { k, .. } => {
            let k = match k {
                geofod::bench::Neighbours::Fixed(k) => k,
                geofod::bench::Neighbours::All => d.n().saturating_sub(1),
            };
            isomap(d, k, dim)?
        }
        Pipeline::Raw => {
            return Err(CliError::Validation(
                "method must be `mds` or `isomap:<k>`".into(),
            ))
        }
    };
    Ok(emb)
}

fn write_gof_table<W: Write>(eigenvalues: &[f64], max_dim: usize, mut w: W) -> geofod::Result<()> {
    let io = |e| geofod::Error::Io { path: "<gof table>".into(), source: e };
    writeln!(w, "dim,gof").map_err(io)?;
    for d in 1..=max_dim {
        let g = geofod::embed::gof_of(eigenvalues, d)?;
        writeln!(w, "{d},{}", geofod::functional::format_f64(g)).map_err(io)?;
    }
    Ok(())
}

fn cmd_embed(run: &mut Run, args: &EmbedArgs) -> CliResult<()> {
    let ds = load_input(&args.input)?;
    let d = pairwise(&ds, args.input.metric)?;
    let dim = args.dim as usize;
    let emb = embed_with(&d, args.method, dim)?;
    let out = run.output_or("embedding.csv");
    write_with(&out, |w| emb.write_csv(w, ds.labels()))?;
    run.wrote(&out);

    let eig = sibling(&out, "eigenvalues.csv");
    write_with(&eig, |w| {
        let io = |e| geofod::Error::Io { path: "<eigenvalues>".into(), source: e };
        writeln!(w, "index,eigenvalue").map_err(io)?;
        for (i, l) in emb.eigenvalues.iter().enumerate() {
            writeln!(w, "{},{}", i + 1, geofod::functional::format_f64(*l)).map_err(io)?;
        }
        Ok(())
    })?;
    run.wrote(&eig);
    let gof = sibling(&out, "gof.csv");
    write_with(&gof, |w| write_gof_table(&emb.eigenvalues, emb.eigenvalues.len(), w))?;
    run.wrote(&gof);
    if let Some(path) = &args.save_distances {
        write_with(path, |w| d.write_csv(w))?;
        run.wrote(path);
    }

    let mut config = input_config(&args.input);
    config["method"] = json!(args.method.to_string());
    config["dim"] = json!(dim);
    config["gof"] = json!(emb.gof);
    run.manifest(sibling(&out, "manifest.json"), "embed", config, None, &[&args.input.input])
}

fn read_embedding(path: &Path) -> CliResult<FunctionalDataset> {
    let label = has_column(path, LABEL_COLUMN, true)?;
    load_csv(path, true, label.then_some(LABEL_COLUMN)).map_err(context(path.display()))
}

fn coords_of(ds: &FunctionalDataset) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(ds.n(), ds.m(), |i, j| ds.row(i)[j])
}

fn cmd_score(run: &mut Run, args: &ScoreArgs) -> CliResult<()> {
    let (scores, labels, input, n) = if let Some(path) = &args.source.embedding {
        let ds = read_embedding(path)?;
        let cfg = lof_config(args.minpts, ds.n())?;
        let s = lof_on_coords(&coords_of(&ds), cfg)?;
        (s, ds.labels().cloned(), path, ds.n())
    } else {
        let path = args.source.distances.as_ref().expect("clap enforces one source");
        let d = DistanceMatrix::load_csv(path).map_err(context(path.display()))?;
        let cfg = lof_config(args.minpts, d.n())?;
        (lof_from_distances(&d, cfg)?, None, path, d.n())
    };
    let min_pts = lof_config(args.minpts, n)?.min_pts;
    let out = run.output_or("scores.csv");
    write_with(&out, |w| scores.write_csv(w, labels.as_ref()))?;
    run.wrote(&out);
    let config = json!({
        "source": if args.source.embedding.is_some() { "embedding" } else { "distances" },
        "input": input.display().to_string(),
        "n": n,
        "min_pts": min_pts,
        "min_pts_default": args.minpts.is_none(),
        "method_tag": scores.method_tag,
    });
    run.manifest(sibling(&out, "manifest.json"), "score", config, None, &[input])
}

fn lof_config(min_pts: Option<usize>, n: usize) -> CliResult<LofConfig> {
    let cfg = match min_pts {
        Some(k) => LofConfig::new(k),
        None => LofConfig::default_for(n)?,
    };
    if !(2..n).contains(&cfg.min_pts) {
        return Err(CliError::Validation(format!(
            "minPts must be in [2, {}], got {}",
            n.saturating_sub(1),
            cfg.min_pts
        )));
    }
    Ok(cfg)
}

fn cmd_benchmark(run: &mut Run, args: &BenchmarkArgs) -> CliResult<()> {
    if args.print_schema {
        print!("{SCHEMA}");
        return Ok(());
    }
    let path = args.config.as_ref().expect("clap requires --config");
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut cfg: BenchmarkConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    if let Some(b) = args.replications {
        cfg.replications = b;
    }
    if let Some(r) = &args.r {
        cfg.r_values = r.clone();
    }
    if let Some(d) = args.embed_dim {
        cfg.embed_dim = d;
    }
    if let Some(s) = run.cli.seed {
        cfg.base_seed = s;
    }
    cfg.validate().map_err(context(path.display()))?;
    let res = run_benchmark(&cfg, run.cli.jobs)?;

    let dir = run.output_or("benchmark");
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let records = dir.join("records.csv");
    write_with(&records, |w| res.write_records_csv(w))?;
    run.wrote(&records);
    let timings = dir.join("timings.csv");
    write_with(&timings, |w| res.write_timings_csv(w))?;
    run.wrote(&timings);
    let summary = dir.join("summary.json");
    let config = serde_json::to_value(&cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_json(&summary, &json!({ "config": config, "summary": res.summary }))?;
    run.wrote(&summary);
    if !run.cli.quiet {
        for row in &res.summary {
            let med = row.median.map_or("-".to_string(), |m| format!("{m:.4}"));
            println!("{} {} r={} median AUC {med} ({} errors)", row.dgp, row.method, row.r, row.errors);
        }
    }
    let seed = cfg.base_seed;
    run.manifest(dir.join("manifest.json"), "benchmark", json!({ "benchmark": config, "jobs": run.cli.jobs }), Some(seed), &[path])
}

fn cmd_gof(run: &mut Run, args: &GofArgs) -> CliResult<()> {
    let ds = load_input(&args.input)?;
    let d = pairwise(&ds, args.input.metric)?;
    let emb = classical_mds(&d, 1)?;
    let max_dim = args.max_dim.unwrap_or(emb.eigenvalues.len());
    if max_dim == 0 || max_dim > emb.eigenvalues.len() {
        return Err(CliError::Validation(format!(
            "max-dim must be in [1, {}], got {max_dim}",
            emb.eigenvalues.len()
        )));
    }
    let out = run.output_or("gof.csv");
    write_with(&out, |w| write_gof_table(&emb.eigenvalues, max_dim, w))?;
    run.wrote(&out);
    let mut config = input_config(&args.input);
    config["max_dim"] = json!(max_dim);
    run.manifest(sibling(&out, "manifest.json"), "gof", config, None, &[&args.input.input])
}

fn cmd_plot(run: &mut Run, args: &PlotArgs) -> CliResult<()> {
    let emb = read_embedding(&args.embedding)?;
    let scores = match &args.scores {
        Some(path) => {
            let s = load_csv(path, true, None).map_err(context(path.display()))?;
            if s.m() < 2 {
                return Err(CliError::Validation(format!(
                    "{}: expected columns index,score",
                    path.display()
                )));
            }
            Some(s.values().iter().map(|r| r[1]).collect::<Vec<f64>>())
        }
        None => None,
    };
    let dims = args.dims.unwrap_or(emb.m()).min(emb.m());
    if dims == 0 {
        return Err(CliError::Validation("dims must be at least 1".into()));
    }
    let svg = plot::scatterplot_matrix(
        &coords_of(&emb),
        dims,
        scores.as_deref(),
        emb.labels().map(|l| l.flags()),
    )
    .map_err(CliError::Validation)?;
    let out = run.output_or("embedding.svg");
    let mut w = create(&out)?;
    w.write_all(svg.as_bytes()).map_err(io_err(&out))?;
    w.flush().map_err(io_err(&out))?;
    run.wrote(&out);
    let mut inputs: Vec<&Path> = vec![&args.embedding];
    if let Some(s) = &args.scores {
        inputs.push(s);
    }
    let config = json!({
        "embedding": args.embedding.display().to_string(),
        "scores": args.scores.as_ref().map(|p| p.display().to_string()),
        "dims": dims,
    });
    run.manifest(sibling(&out, "manifest.json"), "plot", config, None, &inputs)
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let mut run = Run { cli, written: Vec::new() };
    match &cli.command {
        Command::Generate(a) => cmd_generate(&mut run, a)?,
        Command::Embed(a) => cmd_embed(&mut run, a)?,
        Command::Score(a) => cmd_score(&mut run, a)?,
        Command::Benchmark(a) => cmd_benchmark(&mut run, a)?,
        Command::Gof(a) => cmd_gof(&mut run, a)?,
        Command::Plot(a) => cmd_plot(&mut run, a)?,
    }
    run.report();
    Ok(())
}

fn fail(err: CliError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(err.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return fail(CliError::Validation(e.render().to_string().trim_end().to_string()));
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
