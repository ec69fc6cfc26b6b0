//! Budget sweeps over a corpus: per-image metrics, corpus means, and the
//! normalized tradeoff curve with its recommended `gamma0`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::Error;
use crate::image_io::{read_pgm, read_probability_map, write_pgm, write_probability_map, GrayImage, ProbabilityMap};
use crate::metrics::{normalize_curve, write_csv, CsvRow, MetricsRecord, Psnr, SweepPoint, TradeoffCurve};
use crate::pipeline::{CompressionParams, PipelineError, PipelineResultOf, PreparedImage, Stage};
use crate::roi::RoiMask;
use crate::synth::generate_synthetic_angiogram;

pub const PROBABILITY_SUFFIX: &str = ".prob.pgm";
pub const GROUND_TRUTH_SUFFIX: &str = ".gt.pgm";

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItem {
    pub id: String,
    pub image: GrayImage,
    pub probability: ProbabilityMap,
    /// Distortion is measured here; without it the predicted ROI is used.
    pub ground_truth: Option<RoiMask>,
}

/// Synthetic corpus with ids `synth_<seed>`.
pub fn synthetic_corpus(seeds: impl IntoIterator<Item = u64>, size: usize) -> crate::error::Result<Vec<CorpusItem>> {
    seeds
        .into_iter()
        .map(|seed| {
            let s = generate_synthetic_angiogram(seed, size, size)?;
            Ok(CorpusItem {
                id: format!("synth_{seed:03}"),
                image: s.image,
                probability: s.probability,
                ground_truth: Some(s.ground_truth),
            })
        })
        .collect()
}

/// Writes `<id>.pgm`, `<id>.prob.pgm` and, when present, `<id>.gt.pgm`.
pub fn write_corpus(dir: &Path, items: &[CorpusItem]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for item in items {
        fs::write(dir.join(format!("{}.pgm", item.id)), write_pgm(&item.image))?;
        fs::write(
            dir.join(format!("{}{PROBABILITY_SUFFIX}", item.id)),
            write_probability_map(&item.probability),
        )?;
        if let Some(gt) = &item.ground_truth {
            fs::write(dir.join(format!("{}{GROUND_TRUTH_SUFFIX}", item.id)), gt.to_pgm())?;
        }
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: Error },
    #[error("{0}: no probability map next to the image")]
    MissingProbability(PathBuf),
}

fn read_file(path: &Path) -> Result<Vec<u8>, CorpusError> {
    fs::read(path).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })
}

fn format_err(path: &Path) -> impl FnOnce(crate::image_io::PgmError) -> CorpusError + '_ {
    move |e| CorpusError::Format {
        path: path.to_owned(),
        source: e.into(),
    }
}

/// Loads every `<id>.pgm` in `dir` (sorted by id) with its `<id>.prob.pgm`.
/// Ground truth is read from `gt_dir` (or `dir`) as `<id>.gt.pgm`, falling
/// back to `<id>.pgm` inside a separate `gt_dir`.
pub fn load_corpus(dir: &Path, gt_dir: Option<&Path>) -> Result<Vec<CorpusItem>, CorpusError> {
    let entries = fs::read_dir(dir).map_err(|source| CorpusError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let mut ids = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| CorpusError::Io {
            path: dir.to_owned(),
            source,
        })?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(PROBABILITY_SUFFIX) || name.ends_with(GROUND_TRUTH_SUFFIX) {
            continue;
        }
        if let Some(id) = name.strip_suffix(".pgm") {
            ids.push(id.to_owned());
        }
    }
    ids.sort();

    let mut items = Vec::with_capacity(ids.len());
    for id in ids {
        let image_path = dir.join(format!("{id}.pgm"));
        let image = read_pgm(&read_file(&image_path)?).map_err(format_err(&image_path))?;
        let prob_path = dir.join(format!("{id}{PROBABILITY_SUFFIX}"));
        if !prob_path.exists() {
            return Err(CorpusError::MissingProbability(image_path));
        }
        let probability = read_probability_map(&read_file(&prob_path)?).map_err(format_err(&prob_path))?;

        let gt_root = gt_dir.unwrap_or(dir);
        let mut candidates = vec![gt_root.join(format!("{id}{GROUND_TRUTH_SUFFIX}"))];
        if gt_dir.is_some() {
            candidates.push(gt_root.join(format!("{id}.pgm")));
        }
        let ground_truth = match candidates.into_iter().find(|p| p.exists()) {
            Some(path) => Some(RoiMask::from_pgm(&read_file(&path)?).map_err(format_err(&path))?),
            None => None,
        };
        items.push(CorpusItem {
            id,
            image,
            probability,
            ground_truth,
        });
    }
    Ok(items)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub gamma0_values: Vec<usize>,
    /// One curve per entry; each entry overrides `params.use_edges`.
    pub edge_modes: Vec<bool>,
    pub params: CompressionParams,
    /// Size of the worker pool; the output does not depend on it.
    pub workers: usize,
}

impl SweepConfig {
    pub fn new(gamma0_values: Vec<usize>, params: CompressionParams) -> Self {
        Self {
            gamma0_values,
            edge_modes: vec![params.use_edges],
            params,
            workers: 1,
        }
    }
}

/// Corpus-averaged metrics of one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusMean {
    pub gamma0: usize,
    pub edges_enabled: bool,
    pub n_o: usize,
    pub n_b: usize,
    pub cr: f64,
    pub mse: Option<f64>,
    pub psnr: Option<Psnr<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<CsvRow>,
    pub means: Vec<CorpusMean>,
    /// Per edge mode; `None` when fewer than two configurations have a finite PSNR.
    pub curves: Vec<(bool, Option<TradeoffCurve<f64>>)>,
}

impl SweepOutcome {
    pub fn curve(&self, edges_enabled: bool) -> Option<&TradeoffCurve<f64>> {
        self.curves
            .iter()
            .find(|(e, _)| *e == edges_enabled)
            .and_then(|(_, c)| c.as_ref())
    }

    /// `gamma0` maximizing the combined objective.
    pub fn recommended_gamma0(&self, edges_enabled: bool) -> Option<usize> {
        self.curve(edges_enabled).map(|c| c.best().gamma0)
    }

    pub fn mean(&self, gamma0: usize, edges_enabled: bool) -> Option<&CorpusMean> {
        self.means
            .iter()
            .find(|m| m.gamma0 == gamma0 && m.edges_enabled == edges_enabled)
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> io::Result<()> {
        write_csv(&self.rows, out)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Corpus mean of per-image PSNR; lossless images are left out of the
/// average, and the mean is lossless only if every image is.
fn mean_psnr(records: &[&MetricsRecord<f64>]) -> Option<Psnr<f64>> {
    let with_gt: Vec<Psnr<f64>> = records.iter().filter_map(|r| r.psnr).collect();
    if with_gt.is_empty() {
        return None;
    }
    Some(match mean(with_gt.iter().filter_map(|p| p.finite())) {
        Some(v) => Psnr::Finite(v),
        None => Psnr::Lossless,
    })
}

/// Runs every `(gamma0, edge mode)` configuration on every image.
///
/// Rows are ordered by edge mode, then `gamma0`, then corpus order, with a
/// `mean` row closing each configuration; only mean rows carry normalized
/// values. `n_o` and `n_b` of a mean row are corpus totals.
pub fn sweep(corpus: &[CorpusItem], config: &SweepConfig) -> PipelineResultOf<SweepOutcome> {
    let fail = |source: Error| PipelineError {
        stage: Stage::Validate,
        source,
    };
    if corpus.is_empty() {
        return Err(fail(Error::EmptyCorpus));
    }
    if config.gamma0_values.len() < 2 {
        return Err(fail(Error::InsufficientPoints {
            needed: 2,
            got: config.gamma0_values.len(),
        }));
    }
    if config.edge_modes.is_empty() {
        return Err(fail(Error::invalid("edge_modes", "at least one mode is required")));
    }
    if config.workers == 0 {
        return Err(fail(Error::invalid("workers", "must be at least 1")));
    }
    for &gamma0 in &config.gamma0_values {
        CompressionParams {
            gamma0,
            ..config.params
        }
        .validate()
        .map_err(fail)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| fail(Error::invalid("workers", e.to_string())))?;

    pool.install(|| run_sweep(corpus, config))
}

fn run_sweep(corpus: &[CorpusItem], config: &SweepConfig) -> PipelineResultOf<SweepOutcome> {
    let prepared: Vec<PreparedImage> = corpus
        .par_iter()
        .map(|item| PreparedImage::new::<f64>(&item.image, &item.probability, &config.params))
        .collect::<PipelineResultOf<_>>()?;

    let mut jobs = Vec::new();
    for &edges in &config.edge_modes {
        for &gamma0 in &config.gamma0_values {
            for idx in 0..corpus.len() {
                jobs.push((edges, gamma0, idx));
            }
        }
    }
    let records: Vec<MetricsRecord<f64>> = jobs
        .par_iter()
        .map(|&(edges, gamma0, idx)| {
            let params = CompressionParams {
                gamma0,
                use_edges: edges,
                ..config.params
            };
            let prep = &prepared[idx];
            let result = prep.compress::<f64>(&params)?;
            let gt = corpus[idx].ground_truth.as_ref().unwrap_or(prep.mask());
            MetricsRecord::evaluate(prep.image(), &result.processed, gt, prep.n_o(), result.metrics.n_b).map_err(
                |source| PipelineError {
                    stage: Stage::Metrics,
                    source,
                },
            )
        })
        .collect::<PipelineResultOf<_>>()?;

    let mut rows = Vec::new();
    let mut means = Vec::new();
    let mut curves = Vec::new();
    let n = corpus.len();
    for (mode_idx, &edges) in config.edge_modes.iter().enumerate() {
        let mut points = Vec::new();
        let mut mode_rows = Vec::new();
        for (g_idx, &gamma0) in config.gamma0_values.iter().enumerate() {
            let start = (mode_idx * config.gamma0_values.len() + g_idx) * n;
            let group: Vec<&MetricsRecord<f64>> = records[start..start + n].iter().collect();
            for (item, r) in corpus.iter().zip(&group) {
                mode_rows.push(CsvRow {
                    image_id: item.id.clone(),
                    gamma0,
                    sigma: config.params.sigma,
                    edges_enabled: edges,
                    n_o: r.n_o,
                    n_b: r.n_b,
                    cr: r.cr,
                    mse: r.mse,
                    psnr: r.psnr,
                    cr_norm: None,
                    psnr_norm: None,
                    combined: None,
                });
            }
            let m = CorpusMean {
                gamma0,
                edges_enabled: edges,
                n_o: group.iter().map(|r| r.n_o).sum(),
                n_b: group.iter().map(|r| r.n_b).sum(),
                cr: mean(group.iter().map(|r| r.cr)).expect("non-empty corpus"),
                mse: mean(group.iter().filter_map(|r| r.mse)),
                psnr: mean_psnr(&group),
            };
            points.push(SweepPoint {
                gamma0,
                cr: m.cr,
                psnr: m.psnr.unwrap_or(Psnr::Lossless),
            });
            mode_rows.push(CsvRow {
                image_id: "mean".into(),
                gamma0,
                sigma: config.params.sigma,
                edges_enabled: edges,
                n_o: m.n_o,
                n_b: m.n_b,
                cr: m.cr,
                mse: m.mse,
                psnr: m.psnr,
                cr_norm: None,
                psnr_norm: None,
                combined: None,
            });
            means.push(m);
        }
        let curve = normalize_curve(&points).ok();
        if let Some(curve) = &curve {
            for row in mode_rows.iter_mut().filter(|r| r.image_id == "mean") {
                if let Some(p) = curve.point_for(row.gamma0) {
                    row.cr_norm = Some(p.cr_norm);
                    row.psnr_norm = Some(p.psnr_norm);
                    row.combined = Some(p.combined);
                }
            }
        }
        rows.extend(mode_rows);
        curves.push((edges, curve));
    }
    Ok(SweepOutcome { rows, means, curves })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::probability_from_mask;

    fn small_corpus() -> Vec<CorpusItem> {
        let mut items = synthetic_corpus(0..3, 96).unwrap();
        for item in &mut items {
            let gt = item.ground_truth.as_ref().unwrap();
            item.probability = probability_from_mask(&gt.eroded(), 1.0).unwrap();
        }
        items
    }

    #[test]
    fn preconditions() {
        let corpus = small_corpus();
        let single = SweepConfig::new(vec![64], CompressionParams::default());
        assert!(sweep(&corpus, &single).is_err());
        let two = SweepConfig::new(vec![1, 64], CompressionParams::default());
        assert_eq!(sweep(&[], &two).unwrap_err().source, Error::EmptyCorpus);
        let bad = SweepConfig::new(vec![0, 64], CompressionParams::default());
        assert!(sweep(&corpus, &bad).is_err());
    }

    #[test]
    fn low_budget_compresses_more() {
        let corpus = small_corpus();
        let out = sweep(&corpus, &SweepConfig::new(vec![1, 64], CompressionParams::default())).unwrap();
        assert!(out.mean(1, true).unwrap().cr >= out.mean(64, true).unwrap().cr);
        assert!(out.recommended_gamma0(true).is_some());
    }

    #[test]
    fn edge_modes_form_row_groups() {
        let corpus = small_corpus();
        let mut config = SweepConfig::new(vec![8, 16], CompressionParams::default());
        config.edge_modes = vec![true, false];
        let out = sweep(&corpus, &config).unwrap();
        assert_eq!(out.rows.len(), 2 * 2 * (corpus.len() + 1));
        assert!(out.rows[..out.rows.len() / 2].iter().all(|r| r.edges_enabled));
        assert!(out.rows[out.rows.len() / 2..].iter().all(|r| !r.edges_enabled));
        let means: Vec<_> = out.rows.iter().filter(|r| r.image_id == "mean").collect();
        assert_eq!(means.len(), 4);
        assert!(means.iter().all(|r| r.combined.is_some()));
    }

    #[test]
    fn csv_identical_across_worker_counts() {
        let corpus = small_corpus();
        let mut config = SweepConfig::new(vec![1, 16, 64], CompressionParams::default());
        let mut csv = |workers| {
            config.workers = workers;
            let mut out = Vec::new();
            sweep(&corpus, &config).unwrap().write_csv(&mut out).unwrap();
            out
        };
        assert_eq!(csv(1), csv(4));
    }

    #[test]
    fn corpus_round_trips_through_files() {
        let dir = std::env::temp_dir().join(format!("roicodec-corpus-{}", std::process::id()));
        let corpus = synthetic_corpus(5..7, 64).unwrap();
        write_corpus(&dir, &corpus).unwrap();
        let loaded = load_corpus(&dir, None).unwrap();
        fs::remove_dir_all(&dir).unwrap();
        assert_eq!(loaded, corpus);
    }

    #[test]
    fn prediction_as_ground_truth_is_lossless() {
        let mut corpus = synthetic_corpus(0..2, 64).unwrap();
        for item in &mut corpus {
            item.ground_truth = None;
        }
        let out = sweep(&corpus, &SweepConfig::new(vec![1, 64], CompressionParams::default())).unwrap();
        assert!(out.means.iter().all(|m| m.psnr == Some(Psnr::Lossless)));
        assert!(out.recommended_gamma0(true).is_none());
        let mut bytes = Vec::new();
        out.write_csv(&mut bytes).unwrap();
        assert!(String::from_utf8(bytes).unwrap().contains(",lossless,"));
    }
}
