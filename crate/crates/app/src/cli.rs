use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufReader;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use synergy_core::empirical::{
    ingest_match_log, sequence_table, sequence_value_function, sequence_win_rates, EmpiricalError, Ingested, Rejection,
    WinRateEstimate,
    WinRateValueFunction,
};
use synergy_core::recommend::Weights;
use synergy_core::search::{
    count_sets, top_k_synergy_parallel, CandidateSpace, OutlierMethod, SearchError, SearchStrategy, SetFilter,
    TopKResult,
};
use synergy_core::tcg::{load_cards, COPY_CAP, rebalance_iterate, scan_new_set, CardEdit, CardPool, ScanArgs, ScanReport};
use synergy_core::{BaselineKind, ElementId};

use crate::api::{self, DraftRequest};
use crate::config::RunConfig;
use crate::error::{AppError, Result};
use crate::report::{counter_matrix_csv, emit, pair_matrix_csv, to_json, Report};
use crate::server;
use crate::snapshot::{build_time, sha256_hex, AnalysisSnapshot, SnapshotStore};

pub const PORT_ENV: &str = "SYNERGY_PORT";

#[derive(Parser)]
#[command(name = "synergy", version, about = "Synergy analysis for game elements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct ConfigArgs {
    /// Seed for every random draw.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// sum, mean, independent or pooled.
    #[arg(long)]
    baseline: Option<BaselineKind>,
    /// Sample size below which estimates are flagged.
    #[arg(long, default_value_t = 30)]
    min_games: u64,
    /// Normal quantile for win-rate intervals.
    #[arg(long, default_value_t = 1.96)]
    z: f64,
    /// madz or iqr.
    #[arg(long, default_value = "madz")]
    outlier: OutlierMethod,
    /// Outlier threshold; defaults to 3.5 for madz and 1.5 for iqr.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// exhaustive or sample:<n>.
    #[arg(long, default_value = "exhaustive")]
    strategy: String,
    #[arg(long, default_value_t = 1.0)]
    ally_weight: f64,
    #[arg(long, default_value_t = 0.5)]
    counter_weight: f64,
    /// Copies of one element allowed in a set; 1 for match data, 4 for cards.
    #[arg(long)]
    copy_cap: Option<u32>,
    /// Worker threads for searches. Results do not depend on this.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl ConfigArgs {
    fn config(&self, default_baseline: BaselineKind, default_copy_cap: u32) -> Result<RunConfig> {
        let strategy = SearchStrategy::parse(&self.strategy, self.seed).map_err(|e| AppError::Usage(e.to_string()))?;
        let cfg = RunConfig {
            baseline: self.baseline.unwrap_or(default_baseline),
            min_games: self.min_games,
            z: self.z,
            outlier: self.outlier,
            threshold: self.threshold.unwrap_or_else(|| self.outlier.default_threshold()),
            seed: self.seed,
            strategy,
            k: self.k,
            weights: Weights {
                ally_weight: self.ally_weight,
                counter_weight: self.counter_weight,
            },
            copy_cap: self.copy_cap.unwrap_or(default_copy_cap),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Clone, Debug)]
struct DraftArgs {
    #[arg(long)]
    snap: PathBuf,
    #[arg(long, value_delimiter = ',')]
    allies: Vec<ElementId>,
    #[arg(long, value_delimiter = ',')]
    enemies: Vec<ElementId>,
    #[arg(long, value_delimiter = ',')]
    unavailable: Vec<ElementId>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, requires = "counter_weight")]
    ally_weight: Option<f64>,
    #[arg(long, requires = "ally_weight")]
    counter_weight: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl DraftArgs {
    fn request(&self, candidate: Option<ElementId>) -> DraftRequest {
        DraftRequest {
            allies: self.allies.clone(),
            enemies: self.enemies.clone(),
            unavailable: self.unavailable.clone(),
            k: self.k,
            candidate,
            weights: self.ally_weight.zip(self.counter_weight).map(|(a, c)| Weights {
                ally_weight: a,
                counter_weight: c,
            }),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Read a JSONL match log and write an analysis snapshot.
    Ingest {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Pair synergy matrix from a snapshot's match log.
    Matrix {
        #[arg(long)]
        snap: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Counter scores for every pair that met as opponents.
    Counters {
        #[arg(long)]
        snap: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Top-K synergy sets under the snapshot's win rates.
    Topk {
        #[arg(long)]
        snap: PathBuf,
        #[arg(long, default_value_t = 2)]
        min_size: u32,
        #[arg(long, default_value_t = 3)]
        max_size: u32,
        /// must-contain:<id> or must-contain-any:<id>,<id>...
        #[arg(long)]
        filter: Option<SetFilter>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Rank picks for a draft.
    Recommend {
        #[command(flatten)]
        draft: DraftArgs,
    },
    /// Score breakdown for one candidate pick.
    Whatif {
        #[command(flatten)]
        draft: DraftArgs,
        #[arg(long)]
        candidate: ElementId,
    },
    /// Scan every combo including a new card and flag synergy outliers.
    TcgScan {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        new: PathBuf,
        #[arg(long, default_value_t = 2)]
        min_size: u32,
        #[arg(long, default_value_t = 3)]
        max_size: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Apply card edits and rescan.
    TcgRebalance {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        new: PathBuf,
        /// JSON list of {"card", "field", "value"} edits.
        #[arg(long)]
        edits: PathBuf,
        #[arg(long, default_value_t = 2)]
        min_size: u32,
        #[arg(long, default_value_t = 3)]
        max_size: u32,
        /// Where to write the edited pool.
        #[arg(long)]
        pool_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Win rates of piece-usage bigrams in games with move logs.
    ChessSeq {
        #[arg(long)]
        log: PathBuf,
        /// Moves per side to drop before forming bigrams.
        #[arg(long, default_value_t = 0)]
        skip_first: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Size of a candidate space, computed exactly.
    Count {
        #[arg(long, conflicts_with = "pool")]
        pool_size: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        pool: Vec<ElementId>,
        #[arg(long, default_value_t = 2)]
        min_size: u32,
        #[arg(long, default_value_t = 3)]
        max_size: u32,
        #[arg(long, default_value_t = 4)]
        copy_cap: u32,
    },
    /// Serve a snapshot over HTTP.
    Serve {
        #[arg(long)]
        snap: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Reload and republish the snapshot when the file changes.
        #[arg(long)]
        watch: bool,
    },
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| AppError::input(path.display(), e))
}

fn search_err(context: &str, e: SearchError) -> AppError {
    match e {
        SearchError::Workers(msg) => AppError::Internal(msg),
        e => AppError::input(context, e),
    }
}

fn write_report<T: Serialize>(command: &'static str, config: &RunConfig, version: Option<u64>, result: T, out: Option<&Path>) -> Result<()> {
    let report = Report {
        command,
        config,
        snapshot_version: version,
        result,
    };
    emit(&to_json(&report)?, out)
}

fn load_pool(pool: &Path, new: &Path) -> Result<CardPool> {
    let existing = load_cards(BufReader::new(File::open(pool).map_err(|e| AppError::input(pool.display(), e))?))
        .map_err(|e| AppError::input(pool.display(), e))?;
    let fresh = load_cards(BufReader::new(File::open(new).map_err(|e| AppError::input(new.display(), e))?))
        .map_err(|e| AppError::input(new.display(), e))?;
    CardPool::new(existing, fresh).map_err(|e| AppError::input("card pool", e))
}

fn scan_args(cfg: &RunConfig, min_size: u32, max_size: u32, workers: usize) -> ScanArgs {
    ScanArgs {
        size_min: min_size,
        size_max: max_size,
        copy_cap: cfg.copy_cap,
        strategy: cfg.strategy.clone(),
        method: cfg.outlier,
        threshold: Some(cfg.threshold),
        baseline: cfg.baseline,
        state: Default::default(),
        workers,
    }
}

#[derive(Serialize)]
struct RebalanceResult {
    pool_version: u32,
    edits: Vec<CardEdit>,
    scan: ScanReport,
}

#[derive(Serialize)]
struct SequenceResult {
    skip_first: usize,
    sequenced_games: usize,
    bigrams: BTreeMap<ElementId, WinRateEstimate>,
    /// Best pairs of bigrams by synergy; absent with fewer than two bigrams.
    top_pairs: Option<TopKResult>,
}

#[derive(Serialize)]
struct CountResult {
    count: String,
    digits: usize,
    pool_size: usize,
    size_min: u32,
    size_max: u32,
    copy_cap: u32,
}

/// Ingests a match log, echoing each rejected line to stderr.
fn ingest_reporting(path: &Path, bytes: &[u8]) -> Result<Ingested> {
    let show = |rejects: &[Rejection]| {
        for r in rejects {
            eprintln!("{}:{}: {}", path.display(), r.line, r.reason);
        }
    };
    match ingest_match_log(bytes) {
        Ok(ingested) => {
            show(&ingested.rejects);
            Ok(ingested)
        }
        Err(e) => {
            if let EmpiricalError::TooManyRejects { rejects, .. } = &e {
                show(rejects);
            }
            Err(AppError::input(path.display(), e))
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Ingest { log, out, cfg } => {
            let config = cfg.config(BaselineKind::Mean, 1)?;
            let bytes = read(&log)?;
            let ingested = ingest_reporting(&log, &bytes)?;
            let version = match AnalysisSnapshot::load(&out) {
                Ok(prev) => prev.version + 1,
                Err(_) => 1,
            };
            let records = ingested.log.len();
            let rejected = ingested.rejects.len();
            let snap = AnalysisSnapshot::build(ingested.log, rejected, sha256_hex(&bytes), config, version, build_time()?)
                .map_err(|e| match e {
                    AppError::Input(msg) => AppError::Input(format!("{}: {msg}", log.display())),
                    e => e,
                })?;
            snap.save(&out)?;
            println!(
                "ingested {records} records ({rejected} rejected) from {}; snapshot version {version} written to {}",
                log.display(),
                out.display()
            );
            Ok(())
        }
        Command::Matrix { snap, out, csv, cfg } => {
            let config = cfg.config(BaselineKind::Mean, 1)?;
            let s = AnalysisSnapshot::load(&snap)?;
            let m = synergy_core::empirical::pair_synergy_matrix_z(&s.log, config.baseline, config.min_games, config.z)
                .map_err(|e| AppError::input(snap.display(), e))?;
            if let Some(path) = csv {
                emit(&pair_matrix_csv(&m)?, Some(&path))?;
            }
            write_report("matrix", &config, Some(s.version), m, out.as_deref())
        }
        Command::Counters { snap, out, csv, cfg } => {
            let config = cfg.config(BaselineKind::Mean, 1)?;
            let s = AnalysisSnapshot::load(&snap)?;
            let m = synergy_core::empirical::counter_matrix_z(&s.log, config.min_games, config.z)
                .map_err(|e| AppError::input(snap.display(), e))?;
            if let Some(path) = csv {
                emit(&counter_matrix_csv(&m)?, Some(&path))?;
            }
            write_report("counters", &config, Some(s.version), m, out.as_deref())
        }
        Command::Topk {
            snap,
            min_size,
            max_size,
            filter,
            out,
            cfg,
        } => {
            let config = cfg.config(BaselineKind::Mean, 1)?;
            let s = AnalysisSnapshot::load(&snap)?;
            let vf = WinRateValueFunction::over(s.log.sides(), config.min_games, config.z)
                .map_err(|e| AppError::input(snap.display(), e))?;
            let mut space = CandidateSpace::new(s.pool.iter().cloned(), min_size, max_size, config.copy_cap)
                .map_err(|e| AppError::Usage(e.to_string()))?;
            if let Some(f) = filter {
                space = space.with_filter(f).map_err(|e| AppError::Usage(e.to_string()))?;
            }
            let result = top_k_synergy_parallel(&space, &vf, config.baseline, config.k, config.strategy.clone(), cfg.workers)
                .map_err(|e| search_err("topk", e))?;
            write_report("topk", &config, Some(s.version), result, out.as_deref())
        }
        Command::Recommend { draft } => {
            let s = AnalysisSnapshot::load(&draft.snap)?;
            let req = draft.request(None);
            let r = api::recommend(&s, &req).map_err(|e| AppError::input("recommend", e))?;
            write_report("recommend", &s.config, Some(s.version), r, draft.out.as_deref())
        }
        Command::Whatif { draft, candidate } => {
            let s = AnalysisSnapshot::load(&draft.snap)?;
            let req = draft.request(Some(candidate.clone()));
            let r = api::what_if(&s, &req, &candidate).map_err(|e| AppError::input("whatif", e))?;
            write_report("whatif", &s.config, Some(s.version), r, draft.out.as_deref())
        }
        Command::TcgScan {
            pool,
            new,
            min_size,
            max_size,
            out,
            cfg,
        } => {
            let config = cfg.config(BaselineKind::PooledRatio, COPY_CAP)?;
            let cards = load_pool(&pool, &new)?;
            let report = scan_new_set(&cards, &scan_args(&config, min_size, max_size, cfg.workers))
                .map_err(|e| AppError::input("tcg-scan", e))?;
            write_report("tcg-scan", &config, None, report, out.as_deref())
        }
        Command::TcgRebalance {
            pool,
            new,
            edits,
            min_size,
            max_size,
            pool_out,
            out,
            cfg,
        } => {
            let config = cfg.config(BaselineKind::PooledRatio, COPY_CAP)?;
            let cards = load_pool(&pool, &new)?;
            let edit_list: Vec<CardEdit> = serde_json::from_slice(&read(&edits)?)
                .map_err(|e| AppError::input(edits.display(), e))?;
            let (next, scan) = rebalance_iterate(&cards, &edit_list, &scan_args(&config, min_size, max_size, cfg.workers))
                .map_err(|e| AppError::input("tcg-rebalance", e))?;
            if let Some(path) = pool_out {
                emit(&to_json(&next)?, Some(&path))?;
            }
            let result = RebalanceResult {
                pool_version: next.version(),
                edits: edit_list,
                scan,
            };
            write_report("tcg-rebalance", &config, None, result, out.as_deref())
        }
        Command::ChessSeq {
            log,
            skip_first,
            out,
            cfg,
        } => {
            let config = cfg.config(BaselineKind::Mean, 1)?;
            let bytes = read(&log)?;
            let ingested = ingest_reporting(&log, &bytes)?;
            let bigrams = sequence_win_rates(&ingested.log, skip_first).map_err(|e| AppError::input(log.display(), e))?;
            let table = sequence_table(&ingested.log, skip_first).map_err(|e| AppError::input(log.display(), e))?;
            let vf = sequence_value_function(&table, config.min_games).map_err(|e| AppError::input(log.display(), e))?;
            let top_pairs = if bigrams.len() >= 2 {
                let space = CandidateSpace::new(bigrams.keys().cloned(), 2, 2, 1).map_err(|e| AppError::Internal(e.to_string()))?;
                match top_k_synergy_parallel(&space, &vf, config.baseline, config.k, config.strategy.clone(), cfg.workers) {
                    Ok(r) => Some(r),
                    Err(SearchError::EmptySpace) => None,
                    Err(e) => return Err(search_err("chess-seq", e)),
                }
            } else {
                None
            };
            let result = SequenceResult {
                skip_first,
                sequenced_games: ingested.log.records().iter().filter(|r| r.moves.is_some()).count(),
                bigrams,
                top_pairs,
            };
            write_report("chess-seq", &config, None, result, out.as_deref())
        }
        Command::Count {
            pool_size,
            pool,
            min_size,
            max_size,
            copy_cap,
        } => {
            let ids: Vec<ElementId> = match pool_size {
                Some(n) => (0..n)
                    .map(|i| ElementId::new(format!("e{i}")).expect("non-empty"))
                    .collect(),
                None => pool,
            };
            let space = CandidateSpace::new(ids.iter().cloned(), min_size, max_size, copy_cap)
                .map_err(|e| AppError::Usage(e.to_string()))?;
            let count = count_sets(&space).to_string();
            let result = CountResult {
                digits: count.len(),
                count,
                pool_size: ids.len(),
                size_min: min_size,
                size_max: max_size,
                copy_cap,
            };
            emit(&to_json(&result)?, None)
        }
        Command::Serve {
            snap,
            port,
            host,
            watch,
        } => {
            let port = match std::env::var(PORT_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| AppError::Usage(format!("{PORT_ENV} is not a valid port: {v:?}")))?,
                Err(_) => port,
            };
            let s = AnalysisSnapshot::load(&snap)?;
            let store = Arc::new(SnapshotStore::new(s));
            let rt = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(|e| AppError::Internal(e.to_string()))?;
            rt.block_on(server::serve(store, SocketAddr::new(host, port), watch.then_some(snap)))
        }
    }
}
