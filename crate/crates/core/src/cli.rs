//! Batch front end: `ingest`, `indices`, `scaling`, `simulate`, `validate`
//! and `report`.
//!
//! Every subcommand accepts `--config FILE`, a flat `key = value` file whose
//! keys are the long flag names (dashes or underscores). Flags given on the
//! command line win over the file, which wins over built-in defaults. Each
//! run writes `<subcommand>_manifest.txt` with the effective parameters and,
//! separately, `<subcommand>_manifest_time.txt` with the wall-clock start
//! time.
//!
//! Exit status: 0 success, 1 I/O or data error, 2 usage error, 3 validation
//! tolerance exceeded.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::corpus::{
    build_citation_index, parse_corpus, write_rejections, Category, CitationIndex, Corpus,
    CorpusError, ParseOutcome, PaperRecord,
};
use crate::metrics::{
    author_profiles_matching, collaboration_profiles_matching, write_profiles, EntityProfile,
    WeightExponent,
};
use crate::scaling::plot::{curve_svg, histogram_svg};
use crate::scaling::{
    analyze_profiles, binned_lognormal, decompose_exponents, fit_of, read_curve, read_fit,
    sigma_spread, write_curve, write_fit, Estimator, IndexScaling, ScalingError, ScalingIndex,
    ScalingOptions,
};
use crate::synthcollab::{
    citation_points, collaboration_profiles, generate, theoretical_exponents, write_sidecar,
    write_synthetic_corpus, CitationMode, SynthConfig, SynthCollaboration,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Data(String),
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } | CliError::Data(_) => EXIT_FAILURE,
            CliError::Validation(_) => EXIT_VALIDATION,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Parser, Debug)]
#[command(name = "collabmetrics", version, about = "Collaboration-aware bibliometric indices and scaling fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a corpus file and write the rejection report.
    Ingest(IngestArgs),
    /// Write author and collaboration profile CSVs.
    Indices(IndicesArgs),
    /// Bin indices against N_aut and fit power laws, overall and per category.
    Scaling(ScalingArgs),
    /// Write a synthetic corpus from the sub-collaboration model.
    Simulate(SimulateArgs),
    /// Simulate, profile and fit in one go; compare exponents with theory.
    Validate(ValidateArgs),
    /// Render curve/fit CSVs as SVG log-log plots.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct CorpusArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Precomputed `paper_id,n_cit,n_ref_of_citers_harmonic` counts.
    #[arg(long)]
    sidecar: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    /// experiment, theory, astro-cosmo or other.
    #[arg(long)]
    category: Option<String>,
    #[arg(long)]
    year_min: Option<i32>,
    #[arg(long)]
    year_max: Option<i32>,
}

#[derive(Args, Debug)]
struct IndicesArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    corpus: CorpusArgs,
}

#[derive(Args, Debug, Clone)]
struct BinningArgs {
    #[arg(long)]
    bins_per_decade: Option<u32>,
    #[arg(long)]
    min_bin_count: Option<usize>,
    /// mean or median.
    #[arg(long)]
    estimator: Option<String>,
}

#[derive(Args, Debug)]
struct ScalingArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    binning: BinningArgs,
    /// Lower end of the fitted N_aut range.
    #[arg(long)]
    naut_min: Option<f64>,
    #[arg(long)]
    naut_max: Option<f64>,
    /// collaborations, authors or both.
    #[arg(long)]
    entities: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct GeneratorArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    n_collabs: Option<usize>,
    #[arg(long)]
    naut_min: Option<u32>,
    #[arg(long)]
    naut_max: Option<u32>,
    #[arg(long)]
    papers_per_topic: Option<f64>,
    #[arg(long)]
    sigma_log: Option<f64>,
    #[arg(long)]
    base_median_cit: Option<f64>,
    #[arg(long)]
    citer_refs: Option<u32>,
    /// Round expected paper counts instead of sampling them.
    #[arg(long)]
    deterministic_papers: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    generator: GeneratorArgs,
    /// sidecar or stubs.
    #[arg(long)]
    citations: Option<String>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    generator: GeneratorArgs,
    #[command(flatten)]
    binning: BinningArgs,
    /// Allowed |Δp| for p_pap, p_cit, p_fcit and p_icit.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Allowed |Δp| for p_totcit and for the decomposition residual.
    #[arg(long)]
    totcit_tolerance: Option<f64>,
    /// Allowed max-min spread of per-bin log-normal widths.
    #[arg(long)]
    sigma_tolerance: Option<f64>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory holding `*_curve.csv` and `*_fit.csv` files.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Corpus for the collaboration-size histogram.
    #[arg(long)]
    corpus: Option<PathBuf>,
}

/// Flat `key = value` settings file.
#[derive(Debug, Default)]
struct ConfigFile {
    values: BTreeMap<String, String>,
}

fn normalize_key(k: &str) -> String {
    k.trim().trim_start_matches("--").replace('-', "_")
}

impl ConfigFile {
    fn load(path: Option<&Path>, allowed: &[&str]) -> Result<ConfigFile, CliError> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("{}:{}: expected key = value", path.display(), i + 1))
            })?;
            let key = normalize_key(k);
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "{}:{}: unknown key {key:?}",
                    path.display(),
                    i + 1
                )));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config key {key}: cannot parse {v:?}"))),
        }
    }
}

/// Effective parameters, in the order they are resolved.
#[derive(Debug, Default)]
struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    fn new(subcommand: &str) -> Manifest {
        let mut m = Manifest::default();
        m.record("subcommand", subcommand);
        m
    }

    fn record(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    fn write(&self, dir: &Path) -> Result<(), CliError> {
        let mut text = String::new();
        for (k, v) in &self.entries {
            text.push_str(&format!("{k} = {v}\n"));
        }
        let sub = &self.entries[0].1;
        write_file(&dir.join(format!("{sub}_manifest.txt")), text.as_bytes())?;
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        write_file(
            &dir.join(format!("{sub}_manifest_time.txt")),
            format!("started_unix = {now}\n").as_bytes(),
        )
    }
}

/// Resolves one parameter: flag, then config file, then default.
struct Resolver<'a> {
    file: &'a ConfigFile,
    manifest: &'a mut Manifest,
}

impl Resolver<'_> {
    fn value<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr + ToString + Clone,
    {
        let v = match flag {
            Some(v) => v,
            None => self.file.get(key)?.unwrap_or(default),
        };
        self.manifest.record(key, v.to_string());
        Ok(v)
    }

    fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + ToString + Clone,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => self.file.get(key)?,
        };
        self.manifest
            .record(key, v.as_ref().map(|x| x.to_string()).unwrap_or_else(|| "none".into()));
        Ok(v)
    }

    fn required<T>(&mut self, key: &str, flag: Option<T>) -> Result<T, CliError>
    where
        T: FromStr + ToString + Clone,
    {
        let v = match flag {
            Some(v) => v,
            None => self
                .file
                .get(key)?
                .ok_or_else(|| CliError::Usage(format!("--{} is required", key.replace('_', "-"))))?,
        };
        self.manifest.record(key, v.to_string());
        Ok(v)
    }

    fn path(&mut self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
        self.required::<String>(key, flag.map(|p| p.to_string_lossy().into_owned()))
            .map(PathBuf::from)
    }

    fn optional_path(&mut self, key: &str, flag: Option<PathBuf>) -> Result<Option<PathBuf>, CliError> {
        Ok(self
            .optional::<String>(key, flag.map(|p| p.to_string_lossy().into_owned()))?
            .map(PathBuf::from))
    }

    fn flag(&mut self, key: &str, flag: bool) -> Result<bool, CliError> {
        let v = flag || self.file.get::<bool>(key)?.unwrap_or(false);
        self.manifest.record(key, v);
        Ok(v)
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit status.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Indices(a) => indices(a),
        Command::Scaling(a) => scaling(a),
        Command::Simulate(a) => simulate(a),
        Command::Validate(a) => validate(a),
        Command::Report(a) => report(a),
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn create_file(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<(), CliError> {
    w.flush().map_err(io_err(path))
}

fn read_corpus(path: &Path) -> Result<ParseOutcome, CliError> {
    let file = File::open(path).map_err(io_err(path))?;
    parse_corpus(BufReader::new(file)).map_err(|e| match e {
        CorpusError::Io(source) => CliError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => CliError::Data(format!("{}: {other}", path.display())),
    })
}

fn write_rejection_report(dir: &Path, outcome: &ParseOutcome) -> Result<(), CliError> {
    let path = dir.join("rejections.tsv");
    let mut w = create_file(&path)?;
    write_rejections(&mut w, &outcome.rejections).map_err(io_err(&path))?;
    finish(&path, w)
}

const INGEST_KEYS: &[&str] = &["input", "out"];

fn ingest(a: IngestArgs) -> Result<(), CliError> {
    let file = ConfigFile::load(a.config.as_deref(), INGEST_KEYS)?;
    let mut manifest = Manifest::new("ingest");
    let mut r = Resolver {
        file: &file,
        manifest: &mut manifest,
    };
    let input = r.path("input", a.input)?;
    let out = r.path("out", a.out)?;

    create_dir(&out)?;
    let outcome = read_corpus(&input)?;
    write_rejection_report(&out, &outcome)?;

    let wpath = out.join("warnings.tsv");
    let mut w = create_file(&wpath)?;
    for warning in &outcome.warnings {
        writeln!(w, "{}\t{}", warning.line, warning.message).map_err(io_err(&wpath))?;
    }
    finish(&wpath, w)?;

    let summary = format!(
        "lines,accepted,rejected,warnings\n{},{},{},{}\n",
        outcome.lines_read,
        outcome.corpus.len(),
        outcome.rejections.len(),
        outcome.warnings.len()
    );
    write_file(&out.join("ingest_summary.csv"), summary.as_bytes())?;
    manifest.write(&out)?;
    println!(
        "{} lines: {} accepted, {} rejected, {} warnings",
        outcome.lines_read,
        outcome.corpus.len(),
        outcome.rejections.len(),
        outcome.warnings.len()
    );
    Ok(())
}

/// Corpus, citation index and profile settings shared by `indices` and
/// `scaling`.
struct LoadedCorpus {
    outcome: ParseOutcome,
    corpus: Corpus,
    index: CitationIndex,
    alpha: WeightExponent,
    category: Option<Category>,
}

fn load_corpus(a: CorpusArgs, r: &mut Resolver) -> Result<LoadedCorpus, CliError> {
    let input = r.path("input", a.input)?;
    let sidecar = r.optional_path("sidecar", a.sidecar)?;
    let alpha = r.value("alpha", a.alpha, WeightExponent::FRACTIONAL.value())?;
    let alpha = WeightExponent::new(alpha).map_err(|e| CliError::Usage(e.to_string()))?;
    let category = r
        .optional::<String>("category", a.category)?
        .map(|c| Category::parse(&c).ok_or_else(|| CliError::Usage(format!("unknown category {c:?}"))))
        .transpose()?;
    let year_min = r.optional("year_min", a.year_min)?;
    let year_max = r.optional("year_max", a.year_max)?;

    let outcome = read_corpus(&input)?;
    let corpus = if year_min.is_some() || year_max.is_some() {
        outcome.corpus.filter(|p| {
            year_min.is_none_or(|y| p.year >= y) && year_max.is_none_or(|y| p.year <= y)
        })
    } else {
        outcome.corpus.clone()
    };
    let index = match sidecar {
        Some(path) => {
            let f = File::open(&path).map_err(io_err(&path))?;
            CitationIndex::from_sidecar(&corpus, BufReader::new(f))
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        }
        None => build_citation_index(&corpus),
    };
    Ok(LoadedCorpus {
        outcome,
        corpus,
        index,
        alpha,
        category,
    })
}

fn in_category(category: Option<Category>) -> impl Fn(&PaperRecord) -> bool {
    move |p| category.is_none_or(|c| p.category() == c)
}

const CORPUS_KEYS: &[&str] = &["input", "sidecar", "alpha", "category", "year_min", "year_max"];

fn keys(groups: &[&[&'static str]]) -> Vec<&'static str> {
    groups.iter().flat_map(|g| g.iter().copied()).collect()
}

fn indices(a: IndicesArgs) -> Result<(), CliError> {
    let allowed = keys(&[CORPUS_KEYS, &["out"]]);
    let file = ConfigFile::load(a.config.as_deref(), &allowed)?;
    let mut manifest = Manifest::new("indices");
    let mut r = Resolver {
        file: &file,
        manifest: &mut manifest,
    };
    let out = r.path("out", a.out)?;
    let loaded = load_corpus(a.corpus, &mut r)?;
    create_dir(&out)?;

    let keep = in_category(loaded.category);
    let authors = author_profiles_matching(&loaded.corpus, &loaded.index, loaded.alpha, &keep)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let collabs = collaboration_profiles_matching(&loaded.corpus, &loaded.index, loaded.alpha, &keep)
        .map_err(|e| CliError::Data(e.to_string()))?;
    write_profile_file(&out.join("author_profiles.csv"), &authors)?;
    write_profile_file(&out.join("collaboration_profiles.csv"), &collabs)?;
    write_rejection_report(&out, &loaded.outcome)?;
    manifest.write(&out)?;
    println!("{} authors, {} collaborations", authors.len(), collabs.len());
    Ok(())
}

fn write_profile_file(path: &Path, profiles: &[EntityProfile]) -> Result<(), CliError> {
    let mut w = create_file(path)?;
    write_profiles(&mut w, profiles).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    finish(path, w)
}

const BINNING_KEYS: &[&str] = &["bins_per_decade", "min_bin_count", "estimator"];

fn resolve_binning(b: BinningArgs, r: &mut Resolver) -> Result<(u32, usize, Estimator), CliError> {
    let defaults = ScalingOptions::default();
    let bpd = r.value("bins_per_decade", b.bins_per_decade, defaults.bins_per_decade)?;
    let min = r.value("min_bin_count", b.min_bin_count, defaults.min_bin_count)?;
    let est: String = r.value("estimator", b.estimator, defaults.estimator.to_string())?;
    let est = Estimator::parse(&est).ok_or_else(|| CliError::Usage(format!("unknown estimator {est:?}")))?;
    if bpd == 0 || min == 0 {
        return Err(CliError::Usage("bins-per-decade and min-bin-count must be at least 1".into()));
    }
    Ok((bpd, min, est))
}

fn as_data(path: &Path) -> impl FnOnce(ScalingError) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

fn write_scaling_files(dir: &Path, stem: &str, result: &IndexScaling) -> Result<(), CliError> {
    let cpath = dir.join(format!("{stem}_{}_curve.csv", result.index.name()));
    let mut w = create_file(&cpath)?;
    write_curve(&mut w, &result.curve).map_err(as_data(&cpath))?;
    finish(&cpath, w)?;
    if let Ok(fit) = &result.fit {
        let fpath = dir.join(format!("{stem}_{}_fit.csv", result.index.name()));
        let mut w = create_file(&fpath)?;
        write_fit(&mut w, fit).map_err(as_data(&fpath))?;
        finish(&fpath, w)?;
    }
    Ok(())
}

fn summary_row(entities: &str, split: &str, result: &IndexScaling) -> String {
    match &result.fit {
        Ok(f) => format!(
            "{entities},{split},{},{},{},{},{},{},{},ok\n",
            result.index.name(),
            f.exponent,
            f.exponent_stderr,
            f.amplitude,
            f.r_squared,
            f.n_bins_used,
            f.estimator
        ),
        Err(e) => format!(
            "{entities},{split},{},,,,,,,\"{}\"\n",
            result.index.name(),
            e.to_string().replace('"', "'")
        ),
    }
}

const SUMMARY_HEADER: &str = "entities,category,index,exponent,stderr,amplitude,r2,n_bins,estimator,status\n";
const DECOMPOSITION_HEADER: &str = "entities,category,p_pap,p_cit,p_totcit,residual\n";

fn scaling(a: ScalingArgs) -> Result<(), CliError> {
    let allowed = keys(&[CORPUS_KEYS, BINNING_KEYS, &["out", "naut_min", "naut_max", "entities"]]);
    let file = ConfigFile::load(a.config.as_deref(), &allowed)?;
    let mut manifest = Manifest::new("scaling");
    let mut r = Resolver {
        file: &file,
        manifest: &mut manifest,
    };
    let out = r.path("out", a.out)?;
    let loaded = load_corpus(a.corpus, &mut r)?;
    let (bins_per_decade, min_bin_count, estimator) = resolve_binning(a.binning, &mut r)?;
    let naut_min = r.optional("naut_min", a.naut_min)?;
    let naut_max = r.optional("naut_max", a.naut_max)?;
    let entities: String = r.value("entities", a.entities, "both".into())?;
    let kinds: &[&str] = match entities.as_str() {
        "both" => &["collaborations", "authors"],
        "collaborations" => &["collaborations"],
        "authors" => &["authors"],
        other => return Err(CliError::Usage(format!("unknown entities {other:?}"))),
    };
    let opts = ScalingOptions {
        bins_per_decade,
        min_bin_count,
        estimator,
        naut_min,
        naut_max,
    };

    let mut splits: Vec<(String, Option<Category>)> = Vec::new();
    match loaded.category {
        Some(c) => splits.push((c.as_str().to_string(), Some(c))),
        None => {
            splits.push(("all".into(), None));
            for c in [Category::Experiment, Category::Theory, Category::AstroCosmo] {
                splits.push((c.as_str().to_string(), Some(c)));
            }
        }
    }

    create_dir(&out)?;
    let mut summary = String::from(SUMMARY_HEADER);
    let mut decomposition = String::from(DECOMPOSITION_HEADER);
    let mut primary_ok = false;
    let mut primary_errors = Vec::new();

    for &kind in kinds {
        for (i, (split, category)) in splits.iter().enumerate() {
            let keep = in_category(*category);
            let profiles = if kind == "authors" {
                author_profiles_matching(&loaded.corpus, &loaded.index, loaded.alpha, &keep)
            } else {
                collaboration_profiles_matching(&loaded.corpus, &loaded.index, loaded.alpha, &keep)
            }
            .map_err(|e| CliError::Data(e.to_string()))?;

            let results = if profiles.is_empty() {
                Err(ScalingError::InsufficientData(format!("no {kind}")))
            } else {
                analyze_profiles(&profiles, &opts)
            };
            let results = match results {
                Ok(r) => r,
                Err(e) => {
                    summary.push_str(&format!("{kind},{split},,,,,,,,\"{}\"\n", e.to_string().replace('"', "'")));
                    if i == 0 {
                        primary_errors.push(format!("{kind}: {e}"));
                    }
                    continue;
                }
            };
            let stem = format!("{kind}_{split}");
            for res in &results {
                write_scaling_files(&out, &stem, res)?;
                summary.push_str(&summary_row(kind, split, res));
            }
            let fits_ok = results.iter().any(|r| r.fit.is_ok());
            if i == 0 {
                if fits_ok {
                    primary_ok = true;
                } else if let Some(Err(e)) = results.first().map(|r| &r.fit) {
                    primary_errors.push(format!("{kind}: {e}"));
                }
            }
            if let (Some(p), Some(c), Some(t)) = (
                fit_of(&results, ScalingIndex::Papers),
                fit_of(&results, ScalingIndex::MeanCitations),
                fit_of(&results, ScalingIndex::TotalCitations),
            ) {
                if let Ok(d) = decompose_exponents(p, c, t, f64::INFINITY) {
                    decomposition.push_str(&format!(
                        "{kind},{split},{},{},{},{}\n",
                        d.p_pap, d.p_cit, d.p_totcit, d.residual
                    ));
                }
            }
        }
    }

    write_file(&out.join("fits_summary.csv"), summary.as_bytes())?;
    write_file(&out.join("decomposition.csv"), decomposition.as_bytes())?;
    write_rejection_report(&out, &loaded.outcome)?;
    manifest.write(&out)?;
    if !primary_ok {
        return Err(CliError::Data(format!(
            "insufficient data: no power law could be fitted ({})",
            primary_errors.join("; ")
        )));
    }
    print!("{summary}");
    Ok(())
}

const GENERATOR_KEYS: &[&str] = &[
    "seed",
    "s",
    "n_collabs",
    "naut_min",
    "naut_max",
    "papers_per_topic",
    "sigma_log",
    "base_median_cit",
    "citer_refs",
    "deterministic_papers",
];

fn resolve_generator(g: GeneratorArgs, r: &mut Resolver) -> Result<SynthConfig, CliError> {
    let d = SynthConfig::default();
    let seed = r
        .required("seed", g.seed)
        .map_err(|_| CliError::Usage("--seed is required: every random draw derives from it".into()))?;
    let cfg = SynthConfig {
        seed,
        s: r.value("s", g.s, d.s)?,
        n_collabs: r.value("n_collabs", g.n_collabs, d.n_collabs)?,
        naut_min: r.value("naut_min", g.naut_min, d.naut_min)?,
        naut_max: r.value("naut_max", g.naut_max, d.naut_max)?,
        papers_per_topic: r.value("papers_per_topic", g.papers_per_topic, d.papers_per_topic)?,
        sigma_log: r.value("sigma_log", g.sigma_log, d.sigma_log)?,
        base_median_cit: r.value("base_median_cit", g.base_median_cit, d.base_median_cit)?,
        citer_refs: r.value("citer_refs", g.citer_refs, d.citer_refs)?,
        deterministic_papers: r.flag("deterministic_papers", g.deterministic_papers)?,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn generate_collabs(cfg: &SynthConfig) -> Result<Vec<SynthCollaboration>, CliError> {
    generate(cfg).map_err(|e| CliError::Usage(e.to_string()))
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let allowed = keys(&[GENERATOR_KEYS, &["out", "citations"]]);
    let file = ConfigFile::load(a.config.as_deref(), &allowed)?;
    let mut manifest = Manifest::new("simulate");
    let mut r = Resolver {
        file: &file,
        manifest: &mut manifest,
    };
    let out = r.path("out", a.out)?;
    let cfg = resolve_generator(a.generator, &mut r)?;
    let mode: String = r.value("citations", a.citations, CitationMode::default().as_str().into())?;
    let mode = CitationMode::parse(&mode).ok_or_else(|| CliError::Usage(format!("unknown citation mode {mode:?}")))?;

    let collabs = generate_collabs(&cfg)?;
    create_dir(&out)?;

    let cpath = out.join("corpus.jsonl");
    let mut w = create_file(&cpath)?;
    write_synthetic_corpus(&mut w, &collabs, &cfg, mode).map_err(io_err(&cpath))?;
    finish(&cpath, w)?;

    if mode == CitationMode::Sidecar {
        let spath = out.join("citations.csv");
        let mut w = create_file(&spath)?;
        write_sidecar(&mut w, &collabs, &cfg).map_err(|e| CliError::Data(format!("{}: {e}", spath.display())))?;
        finish(&spath, w)?;
    }

    let mut table = String::from("collaboration,n_aut,n_sub,n_pap,n_totcit\n");
    for c in &collabs {
        table.push_str(&format!(
            "{},{},{},{},{}\n",
            c.name(),
            c.n_aut,
            c.n_sub,
            c.n_pap(),
            c.citations.iter().sum::<u64>()
        ));
    }
    write_file(&out.join("collaborations.csv"), table.as_bytes())?;
    manifest.write(&out)?;
    println!(
        "{} collaborations, {} papers",
        collabs.len(),
        collabs.iter().map(|c| c.n_pap()).sum::<usize>()
    );
    Ok(())
}

/// One line of the validation delta table.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRow {
    pub quantity: String,
    pub theoretical: f64,
    pub fitted: f64,
    pub tolerance: f64,
}

impl DeltaRow {
    pub fn delta(&self) -> f64 {
        self.fitted - self.theoretical
    }

    pub fn passed(&self) -> bool {
        self.delta().abs() <= self.tolerance
    }
}

/// Tolerances for [`validation_table`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub exponent: f64,
    pub totcit: f64,
    pub sigma_spread: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exponent: 0.05,
            totcit: 0.07,
            sigma_spread: 0.1,
        }
    }
}

/// Everything `validate` computes, before it is written out.
pub struct Validation {
    pub collabs: Vec<SynthCollaboration>,
    pub scaling: Vec<IndexScaling>,
    pub lognormal: Vec<crate::scaling::LogNormalBin>,
    pub rows: Vec<DeltaRow>,
}

/// Simulates, profiles at α = 1 and fits; compares against the model's
/// exponents.
pub fn validation_table(cfg: &SynthConfig, opts: &ScalingOptions, tol: Tolerances) -> Result<Validation, CliError> {
    let theory = theoretical_exponents(cfg.s).map_err(|e| CliError::Usage(e.to_string()))?;
    let collabs = generate_collabs(cfg)?;
    let profiles =
        collaboration_profiles(&collabs, cfg, WeightExponent::FRACTIONAL).map_err(|e| CliError::Data(e.to_string()))?;
    let scaling = analyze_profiles(&profiles, opts).map_err(|e| CliError::Data(e.to_string()))?;
    let fit = |index: ScalingIndex| {
        fit_of(&scaling, index)
            .ok_or_else(|| CliError::Data(format!("no fit for {}", index.name())))
    };
    let (pap, cit, tot) = (
        fit(ScalingIndex::Papers)?,
        fit(ScalingIndex::MeanCitations)?,
        fit(ScalingIndex::TotalCitations)?,
    );
    let fcit = fit(ScalingIndex::FractionalCitations)?;
    let icit = fit(ScalingIndex::IndividualCitations)?;
    let decomposition =
        decompose_exponents(pap, cit, tot, tol.totcit).map_err(|e| CliError::Data(e.to_string()))?;

    let lognormal = binned_lognormal(&citation_points(&collabs), opts.bins_per_decade, opts.min_bin_count)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let spread = sigma_spread(&lognormal).ok_or_else(|| CliError::Data("no log-normal bins".into()))?;

    let row = |q: &str, th: f64, fit: f64, tol: f64| DeltaRow {
        quantity: q.into(),
        theoretical: th,
        fitted: fit,
        tolerance: tol,
    };
    let rows = vec![
        row("p_pap", theory.p_pap, pap.exponent, tol.exponent),
        row("p_cit", theory.p_cit, cit.exponent, tol.exponent),
        row("p_totcit", theory.p_totcit, tot.exponent, tol.totcit),
        row("p_fcit", theory.p_fcit, fcit.exponent, tol.exponent),
        row("p_icit", theory.p_fcit, icit.exponent, tol.exponent),
        row("decomposition_residual", 0.0, decomposition.residual, tol.totcit),
        row("sigma_log_spread", 0.0, spread, tol.sigma_spread),
    ];
    Ok(Validation {
        collabs,
        scaling,
        lognormal,
        rows,
    })
}

pub fn delta_table_csv(rows: &[DeltaRow]) -> String {
    let mut s = String::from("quantity,theoretical,fitted,delta,tolerance,pass\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.quantity,
            r.theoretical,
            r.fitted,
            r.delta(),
            r.tolerance,
            r.passed()
        ));
    }
    s
}

fn validate(a: ValidateArgs) -> Result<(), CliError> {
    let allowed = keys(&[
        GENERATOR_KEYS,
        BINNING_KEYS,
        &["out", "tolerance", "totcit_tolerance", "sigma_tolerance"],
    ]);
    let file = ConfigFile::load(a.config.as_deref(), &allowed)?;
    let mut manifest = Manifest::new("validate");
    let mut r = Resolver {
        file: &file,
        manifest: &mut manifest,
    };
    let out = r.path("out", a.out)?;
    let cfg = resolve_generator(a.generator, &mut r)?;
    let (bins_per_decade, min_bin_count, estimator) = resolve_binning(a.binning, &mut r)?;
    let d = Tolerances::default();
    let tol = Tolerances {
        exponent: r.value("tolerance", a.tolerance, d.exponent)?,
        totcit: r.value("totcit_tolerance", a.totcit_tolerance, d.totcit)?,
        sigma_spread: r.value("sigma_tolerance", a.sigma_tolerance, d.sigma_spread)?,
    };
    manifest.record("alpha", WeightExponent::FRACTIONAL.value());
    let opts = ScalingOptions {
        bins_per_decade,
        min_bin_count,
        estimator,
        naut_min: None,
        naut_max: None,
    };

    let v = validation_table(&cfg, &opts, tol)?;
    create_dir(&out)?;
    for res in &v.scaling {
        write_scaling_files(&out, "synthetic", res)?;
    }
    let mut ln = String::from("bin_center,count,mu_log,sigma_log,zero_fraction\n");
    for b in &v.lognormal {
        ln.push_str(&format!(
            "{},{},{},{},{}\n",
            b.center, b.count, b.fit.mu_log, b.fit.sigma_log, b.fit.zero_fraction
        ));
    }
    write_file(&out.join("lognormal_bins.csv"), ln.as_bytes())?;
    let table = delta_table_csv(&v.rows);
    write_file(&out.join("deltas.csv"), table.as_bytes())?;
    manifest.write(&out)?;
    print!("{table}");

    let failed: Vec<String> = v
        .rows
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("{} off by {:.4} (tolerance {})", r.quantity, r.delta(), r.tolerance))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failed.join("; ")))
    }
}

fn report(a: ReportArgs) -> Result<(), CliError> {
    let file = ConfigFile::load(a.config.as_deref(), &["input", "out", "corpus"])?;
    let mut manifest = Manifest::new("report");
    let mut r = Resolver {
        file: &file,
        manifest: &mut manifest,
    };
    let input = r.path("input", a.input)?;
    let default_out = input.to_string_lossy().into_owned();
    let out = PathBuf::from(r.value::<String>("out", a.out.map(|p| p.to_string_lossy().into_owned()), default_out)?);
    let corpus = r.optional_path("corpus", a.corpus)?;
    create_dir(&out)?;

    let mut curves: Vec<PathBuf> = fs::read_dir(&input)
        .map_err(io_err(&input))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with("_curve.csv")))
        .collect();
    curves.sort();

    let mut written = 0;
    for cpath in &curves {
        let name = cpath.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let stem = name.trim_end_matches("_curve.csv");
        let curve = read_curve(File::open(cpath).map_err(io_err(cpath))?)
            .map_err(|e| CliError::Data(format!("{}: {e}", cpath.display())))?;
        let fpath = input.join(format!("{stem}_fit.csv"));
        let fit = if fpath.exists() {
            Some(
                read_fit(File::open(&fpath).map_err(io_err(&fpath))?)
                    .map_err(|e| CliError::Data(format!("{}: {e}", fpath.display())))?,
            )
        } else {
            None
        };
        let ylabel = ScalingIndex::ALL
            .iter()
            .find(|i| stem.ends_with(&format!("_{}", i.name())))
            .map(|i| i.name())
            .unwrap_or("value");
        let svg = curve_svg(stem, ylabel, &curve, fit.as_ref());
        write_file(&out.join(format!("{stem}.svg")), svg.as_bytes())?;
        written += 1;
    }

    if let Some(cpath) = corpus {
        let outcome = read_corpus(&cpath)?;
        let rows = collaboration_size_histogram(&outcome.corpus);
        let mut csv = String::from("n_aut,collaborations\n");
        for (n, c) in &rows {
            csv.push_str(&format!("{n},{c}\n"));
        }
        write_file(&out.join("collab_size_histogram.csv"), csv.as_bytes())?;
        write_file(
            &out.join("collab_size_histogram.svg"),
            histogram_svg("collaborations by size", &rows).as_bytes(),
        )?;
        written += 1;
    }
    manifest.write(&out)?;
    println!("{written} plots written to {}", out.display());
    Ok(())
}

/// Number of official collaborations per (rounded) mean author count.
pub fn collaboration_size_histogram(corpus: &Corpus) -> Vec<(u64, u64)> {
    let mut sizes: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for p in corpus.papers() {
        if let Some(tag) = &p.collaboration {
            let e = sizes.entry(tag.clone()).or_default();
            e.0 += p.n_aut() as u64;
            e.1 += 1;
        }
    }
    let mut hist: BTreeMap<u64, u64> = BTreeMap::new();
    for (total, papers) in sizes.values() {
        let mean = (*total as f64 / *papers as f64).round() as u64;
        *hist.entry(mean).or_default() += 1;
    }
    hist.into_iter().collect()
}
