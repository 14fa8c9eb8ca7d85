//! End-to-end windowed analysis and report emission.
//!
//! Windows are analyzed in batches on a dedicated worker pool; per-window
//! results are put back in window order before any cross-window reduction,
//! so reports do not depend on the worker count.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::generator::{generate_synthetic, GeneratorSpec, SpecError};
use crate::hypersparse::{AggregateSummary, TrafficMatrix};
use crate::ingest::{
    read_packet_files, summarize, FormatSpec, IngestError, IngestSummary, PacketRecord,
    PacketWindow, Windower,
};
use crate::netstats::{
    pool_histogram, pooled_to_csv, quantity_histogram, window_mean_std, PooledDistribution,
    QuantityKind,
};
use crate::topology::{
    topology_breakdown_with, topology_to_csv, CoreRule, TopologyBreakdown, TopologyOptions,
};
use crate::zm::{infer_parameters_parallel, AlphaGrid, ZmFit};

pub const DEFAULT_WINDOW_SIZES: [usize; 7] = [
    100_000,
    300_000,
    1_000_000,
    3_000_000,
    10_000_000,
    30_000_000,
    100_000_000,
];

/// Name of the file holding run timings; it is the only emitted file that
/// varies between otherwise identical runs.
pub const TIMINGS_FILE: &str = "timings.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("output directory {0} is not empty (use --force to overwrite)")]
    OutputExists(PathBuf),
    #[error("no complete window for any window size ({} valid packets read)", .0.total_valid)]
    EmptyRun(IngestSummary),
}

impl PipelineError {
    /// 1 for configuration problems, 2 for input and output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Spec(_) | PipelineError::EmptyRun(_) => 1,
            PipelineError::Ingest(IngestError::InvalidWindowSize(_)) => 1,
            PipelineError::Ingest(_)
            | PipelineError::Io { .. }
            | PipelineError::OutputExists(_) => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSource {
    Files { paths: Vec<PathBuf>, header: bool },
    Synthetic { spec: GeneratorSpec, packets: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub input: InputSource,
    /// Explicit window sizes; `None` uses [`DEFAULT_WINDOW_SIZES`] limited to
    /// sizes with at least two complete windows.
    pub window_sizes: Option<Vec<usize>>,
    pub quantities: Vec<QuantityKind>,
    pub alpha_grid: AlphaGrid,
    pub topology: TopologyOptions,
    #[serde(skip)]
    pub workers: usize,
}

impl RunConfig {
    pub fn new(input: InputSource) -> Self {
        RunConfig {
            input,
            window_sizes: None,
            quantities: QuantityKind::ALL.to_vec(),
            alpha_grid: AlphaGrid::default(),
            topology: TopologyOptions::default(),
            workers: 1,
        }
    }

    pub fn with_core_rule(mut self, rule: CoreRule) -> Self {
        self.topology.core_rule = rule;
        self
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if self.workers < 1 {
            return Err(PipelineError::Config(
                "worker count must be at least 1".into(),
            ));
        }
        if self.quantities.is_empty() {
            return Err(PipelineError::Config(
                "at least one quantity is required".into(),
            ));
        }
        match &self.window_sizes {
            Some(s) if s.is_empty() => Err(PipelineError::Config(
                "at least one window size is required".into(),
            )),
            Some(s) if s.contains(&0) => Err(PipelineError::Config(
                "window sizes must be at least 1".into(),
            )),
            _ => Ok(()),
        }
    }

    fn records(
        &self,
    ) -> Result<Box<dyn Iterator<Item = Result<PacketRecord, IngestError>> + Send>, PipelineError>
    {
        match &self.input {
            InputSource::Files { paths, header } => {
                if paths.is_empty() {
                    return Err(PipelineError::Config("no input files".into()));
                }
                let format = FormatSpec::default().with_header(*header);
                Ok(Box::new(read_packet_files(paths, &format)))
            }
            InputSource::Synthetic { spec, packets } => {
                let (stream, _) = generate_synthetic(spec, *packets)?;
                Ok(Box::new(stream.map(Ok)))
            }
        }
    }
}

/// Everything computed for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowAnalysis {
    pub index: u64,
    pub aggregates: AggregateSummary,
    pub pools: Vec<PooledDistribution>,
    pub topology: TopologyBreakdown,
}

/// All quantities and the topology of one window.
pub fn analyze_window(
    window: &PacketWindow,
    quantities: &[QuantityKind],
    topology: &TopologyOptions,
) -> WindowAnalysis {
    let m = TrafficMatrix::from_window(window);
    let pools = quantities
        .iter()
        .map(|&k| {
            pool_histogram(&quantity_histogram(&m, k)).expect("a window holds at least one packet")
        })
        .collect();
    WindowAnalysis {
        index: window.index(),
        aggregates: m.aggregates(),
        pools,
        topology: topology_breakdown_with(&m, topology),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantityResult {
    pub kind: QuantityKind,
    pub pooled: PooledDistribution,
    pub fit: Result<ZmFit, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSizeResult {
    pub n_v: usize,
    pub windows: Vec<WindowAnalysis>,
    pub quantities: Vec<QuantityResult>,
}

/// In-memory results plus the rendered files.
#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub ingest: IngestSummary,
    pub results: Vec<WindowSizeResult>,
    /// File name to contents, excluding [`TIMINGS_FILE`].
    pub files: BTreeMap<String, String>,
    pub timings: String,
}

fn choose_window_sizes(cfg: &RunConfig, total_valid: u64) -> Vec<usize> {
    match &cfg.window_sizes {
        Some(sizes) => sizes
            .iter()
            .copied()
            .filter(|&n| total_valid >= n as u64)
            .collect(),
        None => DEFAULT_WINDOW_SIZES
            .iter()
            .copied()
            .filter(|&n| total_valid >= 2 * n as u64)
            .collect(),
    }
}

/// Runs the full analysis without touching the output directory.
pub fn run_analyze(cfg: &RunConfig) -> Result<ReportBundle, PipelineError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| PipelineError::Config(format!("cannot start worker pool: {e}")))?;

    let started = Instant::now();
    let ingest = summarize(cfg.records()?)?;
    let mut timings = vec![("count_pass".to_owned(), started.elapsed().as_secs_f64())];

    let sizes = choose_window_sizes(cfg, ingest.total_valid);
    if sizes.is_empty() {
        return Err(PipelineError::EmptyRun(ingest));
    }

    let mut results = Vec::new();
    for &n_v in &sizes {
        let t0 = Instant::now();
        let mut windower = Windower::new(cfg.records()?, n_v)?;
        let mut windows: Vec<WindowAnalysis> = Vec::new();
        loop {
            let mut batch = Vec::with_capacity(cfg.workers);
            while batch.len() < cfg.workers {
                match windower.next_window()? {
                    Some(w) => batch.push(w),
                    None => break,
                }
            }
            if batch.is_empty() {
                break;
            }
            let done = batch.len() < cfg.workers;
            let analyzed: Vec<WindowAnalysis> = pool.install(|| {
                batch
                    .par_iter()
                    .map(|w| analyze_window(w, &cfg.quantities, &cfg.topology))
                    .collect()
            });
            windows.extend(analyzed);
            if done {
                break;
            }
        }

        let mut quantities = Vec::new();
        for (q, &kind) in cfg.quantities.iter().enumerate() {
            let pools: Vec<PooledDistribution> =
                windows.iter().map(|w| w.pools[q].clone()).collect();
            let pooled = window_mean_std(&pools).expect("at least one window of one kind");
            let fit = pool
                .install(|| infer_parameters_parallel(&pooled, &cfg.alpha_grid))
                .map_err(|e| e.to_string());
            quantities.push(QuantityResult { kind, pooled, fit });
        }
        timings.push((format!("nv_{n_v}"), t0.elapsed().as_secs_f64()));
        results.push(WindowSizeResult {
            n_v,
            windows,
            quantities,
        });
    }

    let files = render(cfg, &ingest, &results);
    let timings_json = json!({
        "workers": cfg.workers,
        "seconds": timings.into_iter().collect::<BTreeMap<_, _>>(),
    });
    Ok(ReportBundle {
        ingest,
        results,
        files,
        timings: pretty(&timings_json),
    })
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report values serialize");
    s.push('\n');
    s
}

fn fit_json(q: &QuantityResult, grid: &AlphaGrid) -> String {
    let grid = json!({ "start": grid.start, "stop": grid.stop, "step": grid.step });
    let v = match &q.fit {
        Ok(f) => json!({
            "kind": q.kind,
            "alpha": f.params.alpha,
            "delta": f.params.delta,
            "loss": f.loss,
            "leaf": f.leaf,
            "d_max": f.params.d_max,
            "bins_used": f.bins_used,
            "n_windows": q.pooled.n_windows,
            "grid": grid,
        }),
        Err(e) => json!({
            "kind": q.kind,
            "alpha": null,
            "delta": null,
            "loss": null,
            "leaf": null,
            "d_max": q.pooled.d_max,
            "bins_used": null,
            "n_windows": q.pooled.n_windows,
            "grid": grid,
            "error": e,
        }),
    };
    pretty(&v)
}

fn render(
    cfg: &RunConfig,
    ingest: &IngestSummary,
    results: &[WindowSizeResult],
) -> BTreeMap<String, String> {
    let mut files = BTreeMap::new();
    for r in results {
        for q in &r.quantities {
            files.insert(
                format!("pooled_{}_nv{}.csv", q.kind, r.n_v),
                pooled_to_csv(&q.pooled),
            );
            files.insert(
                format!("fit_{}_nv{}.json", q.kind, r.n_v),
                fit_json(q, &cfg.alpha_grid),
            );
        }
        for w in &r.windows {
            files.insert(
                format!("topology_nv{}_w{}.csv", r.n_v, w.index),
                topology_to_csv(&w.topology),
            );
        }
    }

    let listed: Vec<_> = files
        .iter()
        .map(|(name, body)| {
            let rows = if name.ends_with(".csv") {
                body.lines().count().saturating_sub(1)
            } else {
                1
            };
            json!({ "name": name, "rows": rows })
        })
        .collect();
    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "ingest": ingest,
        "window_sizes": results
            .iter()
            .map(|r| json!({ "n_v": r.n_v, "windows": r.windows.len() }))
            .collect::<Vec<_>>(),
        "files": listed,
        "timings": TIMINGS_FILE,
    });
    files.insert(MANIFEST_FILE.to_owned(), pretty(&manifest));
    files
}

/// Writes the bundle into `dir`, refusing a non-empty directory unless
/// `force` is set.
pub fn emit_report(bundle: &ReportBundle, dir: &Path, force: bool) -> Result<(), PipelineError> {
    let io = |path: &Path| {
        let path = path.to_owned();
        move |source| PipelineError::Io { path, source }
    };
    if dir.exists() {
        let mut entries = fs::read_dir(dir).map_err(io(dir))?;
        if entries.next().is_some() && !force {
            return Err(PipelineError::OutputExists(dir.to_owned()));
        }
    } else {
        fs::create_dir_all(dir).map_err(io(dir))?;
    }
    for (name, body) in &bundle.files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io(&path))?;
    }
    let path = dir.join(TIMINGS_FILE);
    fs::write(&path, &bundle.timings).map_err(io(&path))?;
    Ok(())
}
