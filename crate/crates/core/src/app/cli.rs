//! `multiwiki` command-line interface.

use std::fs;
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use super::export::{export_timeline, ExportFormat};
use super::run::{analyze_pair, ingest_pair, IngestRequest};
use super::server::{serve, ServiceConfig};
use super::AppError;
use crate::annotate::{Clients, RemoteAnnotator, RemoteGeoLocator, RemoteTranslator, StubTables};
use crate::http::{HttpTransport, ReqwestTransport, RetryPolicy, Throttled};
use crate::ingest::{ContentSource, FixtureSource, MediaWikiSource, WIKIPEDIA_API};
use crate::model::{rfc3339, validate_config, ArticleRef, SimilarityConfig, Timestamp, ValidatedConfig};
use crate::store::{PairId, Store};

#[derive(Debug, Parser)]
#[command(name = "multiwiki", version, about = "Similarity timelines for interlingual Wikipedia article pairs")]
pub struct Cli {
    /// Data directory of the document store.
    #[arg(long, env = "MULTIWIKI_DATA", default_value = "multiwiki-data", global = true)]
    pub data: PathBuf,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fetch, annotate and store the snapshots of one article pair.
    Ingest(IngestArgs),
    /// Score every stored snapshot pair and write the timeline.
    Analyze(AnalyzeArgs),
    /// Serve the read-only JSON API.
    Serve(ServeArgs),
    /// Write a stored timeline as JSON or CSV.
    Export(ExportArgs),
}

fn parse_article(s: &str) -> Result<ArticleRef, String> {
    ArticleRef::parse(s).map_err(|e| e.to_string())
}

fn parse_time(s: &str) -> Result<Timestamp, String> {
    rfc3339::parse(s).map_err(|e| format!("{s:?} is not an RFC 3339 time: {e}"))
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// The two articles, each as `lang:Title`.
    #[arg(long, num_args = 2, value_names = ["LANG:TITLE", "LANG:TITLE"], required = true, value_parser = parse_article)]
    pub pair: Vec<ArticleRef>,
    /// Fixture directory, `live`, or a MediaWiki API URL template containing `{lang}`.
    #[arg(long, default_value = "live")]
    pub source: String,
    /// Number of evenly spaced snapshot times (at least 2).
    #[arg(long, value_parser = clap::value_parser!(u16).range(2..))]
    pub snapshots: Option<u16>,
    /// Similarity configuration file (TOML or JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// End of the analysis window (RFC 3339).
    #[arg(long, value_parser = parse_time)]
    pub end_time: Option<Timestamp>,
    /// Directory overriding the bundled offline stub tables.
    #[arg(long)]
    pub stubs: Option<PathBuf>,
    /// Remote translation endpoint.
    #[arg(long)]
    pub translator_url: Option<String>,
    /// Remote entity annotation endpoint.
    #[arg(long)]
    pub annotator_url: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    pub annotator_confidence: f64,
    /// Remote IP geolocation endpoint.
    #[arg(long)]
    pub geo_url: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub pair_id: String,
    /// Overrides the configuration stored at ingest time.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "MULTIWIKI_PORT", default_value_t = 8080, value_parser = clap::value_parser!(u16).range(1..))]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: IpAddr,
    /// Directory of built web UI assets.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
    /// Allowed CORS origin; repeatable. Any origin when omitted.
    #[arg(long = "cors-origin")]
    pub cors_origins: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub pair_id: String,
    /// `json` or `csv`.
    #[arg(long, default_value = "json")]
    pub format: String,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Reads a [`SimilarityConfig`] from TOML (by extension) or JSON.
pub fn load_config(path: &Path) -> Result<ValidatedConfig, AppError> {
    let text = fs::read_to_string(path).map_err(|e| AppError::user("ConfigUnreadable", format!("{}: {e}", path.display())))?;
    let bad = |e: String| AppError::user("InvalidConfig", format!("{}: {e}", path.display()));
    let config: SimilarityConfig = if path.extension().is_some_and(|x| x.eq_ignore_ascii_case("toml")) {
        toml::from_str(&text).map_err(|e| bad(e.to_string()))?
    } else {
        serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?
    };
    validate_config(config).map_err(|violations| {
        bad(violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))
    })
}

fn live_transport() -> Result<Arc<dyn HttpTransport>, AppError> {
    let inner = ReqwestTransport::new().map_err(|e| AppError::environment("SourceUnavailable", e.to_string()))?;
    Ok(Arc::new(Throttled::new(inner, RetryPolicy::default())))
}

/// Lazily created shared transport, so offline runs never build a client.
struct Network(Option<Arc<dyn HttpTransport>>);

impl Network {
    fn get(&mut self) -> Result<Arc<dyn HttpTransport>, AppError> {
        if self.0.is_none() {
            self.0 = Some(live_transport()?);
        }
        Ok(self.0.clone().expect("set above"))
    }
}

fn open_source(spec: &str, net: &mut Network) -> Result<Box<dyn ContentSource>, AppError> {
    if spec == "live" {
        return Ok(Box::new(MediaWikiSource::new(WIKIPEDIA_API, net.get()?)));
    }
    if spec.starts_with("http://") || spec.starts_with("https://") {
        return Ok(Box::new(MediaWikiSource::new(spec, net.get()?)));
    }
    let dir = Path::new(spec);
    if !dir.is_dir() {
        return Err(AppError::user("SourceNotFound", format!("fixture directory {spec} does not exist")));
    }
    Ok(Box::new(FixtureSource::open(dir)?))
}

fn build_clients(args: &IngestArgs, net: &mut Network) -> Result<Clients, AppError> {
    let tables = match &args.stubs {
        Some(dir) => StubTables::load_dir(dir).map_err(|e| AppError::user(e.code(), e.to_string()))?,
        None => StubTables::bundled(),
    };
    let mut clients = Clients::stubs(&tables).map_err(|e| AppError::user(e.code(), e.to_string()))?;
    if let Some(url) = &args.translator_url {
        clients.translator = Arc::new(RemoteTranslator::new(url, net.get()?, tables.stopwords.clone()));
    }
    if let Some(url) = &args.annotator_url {
        clients.annotator = Arc::new(RemoteAnnotator::new(url, args.annotator_confidence, net.get()?));
    }
    if let Some(url) = &args.geo_url {
        clients.geo = Arc::new(RemoteGeoLocator::new(url, net.get()?));
    }
    Ok(clients)
}

fn parse_pair_id(s: &str) -> Result<PairId, AppError> {
    Ok(PairId::parse(s)?)
}

fn write_output(output: Option<&Path>, text: &str) -> Result<(), AppError> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| AppError::environment("Io", format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Ingest(args) => {
            let mut net = Network(None);
            let source = open_source(&args.source, &mut net)?;
            let clients = build_clients(&args, &mut net)?;
            let config = match &args.config {
                Some(path) => load_config(path)?,
                None => ValidatedConfig::default(),
            };
            let store = Store::open(&cli.data)?;
            let req = IngestRequest {
                article1: args.pair[0].clone(),
                article2: args.pair[1].clone(),
                config,
                snapshot_count: args.snapshots.map(usize::from),
                end_time: args.end_time,
            };
            let outcome = ingest_pair(&store, source.as_ref(), &clients, &req)?;
            println!("{}", outcome.pair_id);
            log::info!(
                "{} snapshot pairs, {} snapshots ({} from cache), {} unresolved editor locations",
                outcome.plan.targets.len(),
                outcome.snapshots,
                outcome.cached_wikitext,
                outcome.unresolved_editors
            );
            Ok(())
        }
        Command::Analyze(args) => {
            let store = Store::open_existing(&cli.data)?;
            let pair = parse_pair_id(&args.pair_id)?;
            let config = args.config.as_deref().map(load_config).transpose()?;
            let series = analyze_pair(&store, &pair, config.as_deref())?;
            println!("{}", store.timeline_path(&pair).display());
            log::info!("{} timeline points", series.points.len());
            Ok(())
        }
        Command::Serve(args) => {
            let mut config = ServiceConfig::new(&cli.data, args.port)?;
            config.address = args.bind;
            config.static_dir = args.static_dir;
            config.cors_allowlist = args.cors_origins;
            serve(&config)
        }
        Command::Export(args) => {
            let format: ExportFormat = args.format.parse()?;
            let store = Store::open_existing(&cli.data)?;
            let pair = parse_pair_id(&args.pair_id)?;
            write_output(args.output.as_deref(), &export_timeline(&store, &pair, format)?)
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_exit_code() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.class.code()
        }
    }
}
