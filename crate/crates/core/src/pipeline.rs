//! End-to-end compression: segmentation, edge detection, block partition,
//! NROI coefficient truncation, smoothing, ROI restoration and JPEG-LS coding.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::dct::{compute_gamma, BlockReducer, BudgetRule};
use crate::edges::{canny, CannyParams, EdgeMap};
use crate::error::{Error, Result};
use crate::image_io::{GrayImage, ProbabilityMap};
use crate::jpegls::{self, JpeglsParams};
use crate::metrics::MetricsRecord;
use crate::partition::{partition, BlockClass, PartitionPlan, PartitionSummary, BLOCK, SUB_BLOCK};
use crate::roi::{segment, RoiMask};
use crate::scalar::Real;
use crate::smoothing::smooth;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Validate,
    Segment,
    Edges,
    Partition,
    Reduce,
    Smooth,
    Restore,
    Encode,
    Decode,
    Metrics,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Validate => "validate",
            Stage::Segment => "segment",
            Stage::Edges => "edges",
            Stage::Partition => "partition",
            Stage::Reduce => "reduce",
            Stage::Smooth => "smooth",
            Stage::Restore => "restore",
            Stage::Encode => "encode",
            Stage::Decode => "decode",
            Stage::Metrics => "metrics",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{stage}: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, PipelineError>;
}

impl<T, E: Into<Error>> AtStage<T> for std::result::Result<T, E> {
    fn at(self, stage: Stage) -> std::result::Result<T, PipelineError> {
        self.map_err(|e| PipelineError {
            stage,
            source: e.into(),
        })
    }
}

pub type PipelineResultOf<T> = std::result::Result<T, PipelineError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionParams {
    /// Base number of zigzag coefficients kept per NROI block, in `1..=64`.
    pub gamma0: usize,
    /// Standard deviation of the post-tiling Gaussian.
    pub sigma: f64,
    /// When false the smoothing stage is skipped.
    pub smoothing: bool,
    pub canny_high: f64,
    pub canny_low_ratio: f64,
    /// Standard deviation of Canny's own pre-smoothing.
    pub canny_sigma: f64,
    pub prob_threshold: f64,
    /// Add each block's edge-pixel count to its budget.
    pub use_edges: bool,
    /// Also truncate 4x4 NROI sub-blocks (otherwise copied unchanged).
    pub truncate_4x4: bool,
    pub eq1: BudgetRule,
    pub jpegls: JpeglsParams,
}

impl Default for CompressionParams {
    fn default() -> Self {
        Self {
            gamma0: 16,
            sigma: 1.0,
            smoothing: true,
            canny_high: CannyParams::DEFAULT_HIGH,
            canny_low_ratio: CannyParams::DEFAULT_LOW_RATIO,
            canny_sigma: CannyParams::DEFAULT_SIGMA,
            prob_threshold: 0.5,
            use_edges: true,
            truncate_4x4: false,
            eq1: BudgetRule::Min,
            jpegls: JpeglsParams::default(),
        }
    }
}

impl CompressionParams {
    pub fn canny(&self) -> CannyParams {
        CannyParams::with_ratio(self.canny_high, self.canny_low_ratio, self.canny_sigma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=64).contains(&self.gamma0) {
            return Err(Error::invalid("gamma0", format!("{} is outside 1..=64", self.gamma0)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("{} must be positive", self.sigma)));
        }
        if !(0.0..=1.0).contains(&self.prob_threshold) {
            return Err(Error::invalid(
                "prob_threshold",
                format!("{} is outside [0, 1]", self.prob_threshold),
            ));
        }
        self.canny().validate()?;
        self.jpegls.validate()?;
        Ok(())
    }
}

/// Everything that depends only on the input and the analysis parameters
/// (threshold, Canny and coder settings), so it can be shared across budget settings.
#[derive(Debug, Clone)]
pub struct PreparedImage {
    image: GrayImage,
    mask: RoiMask,
    edges: EdgeMap,
    plan: PartitionPlan,
    n_o: usize,
    analysis: AnalysisKey,
}

type AnalysisKey = (u64, u64, u64, u64, JpeglsParams);

fn analysis_key(p: &CompressionParams) -> AnalysisKey {
    (
        p.prob_threshold.to_bits(),
        p.canny_high.to_bits(),
        p.canny_low_ratio.to_bits(),
        p.canny_sigma.to_bits(),
        p.jpegls,
    )
}

impl PreparedImage {
    pub fn new<T: Real>(
        image: &GrayImage,
        prob_map: &ProbabilityMap,
        params: &CompressionParams,
    ) -> PipelineResultOf<Self> {
        params.validate().at(Stage::Validate)?;
        if image.dimensions() != prob_map.dimensions() {
            return Err(Error::DimensionMismatch {
                expected: image.dimensions(),
                actual: prob_map.dimensions(),
            })
            .at(Stage::Validate);
        }
        let mask = segment(prob_map, params.prob_threshold).at(Stage::Segment)?;
        let edges = canny::<T>(image, &params.canny()).at(Stage::Edges)?;
        let plan = partition(image.width(), image.height(), &mask)
            .and_then(|p| p.with_edge_counts(&edges))
            .at(Stage::Partition)?;
        let n_o = jpegls::encode(image, &params.jpegls).at(Stage::Encode)?.len();
        Ok(Self {
            image: image.clone(),
            mask,
            edges,
            plan,
            n_o,
            analysis: analysis_key(params),
        })
    }

    pub fn image(&self) -> &GrayImage {
        &self.image
    }

    pub fn mask(&self) -> &RoiMask {
        &self.mask
    }

    pub fn edges(&self) -> &EdgeMap {
        &self.edges
    }

    pub fn plan(&self) -> &PartitionPlan {
        &self.plan
    }

    /// Coded size of the unmodified input.
    pub fn n_o(&self) -> usize {
        self.n_o
    }

    /// Runs the budget-dependent stages.
    pub fn compress<T: Real>(&self, params: &CompressionParams) -> PipelineResultOf<PipelineResult> {
        params.validate().at(Stage::Validate)?;
        if analysis_key(params) != self.analysis {
            return Err(Error::invalid(
                "params",
                "threshold, Canny or coder settings differ from those used to prepare the image",
            ))
            .at(Stage::Validate);
        }
        let tiled = reduce_nroi::<T>(&self.image, &self.plan, params).at(Stage::Reduce)?;
        let filtered = if params.smoothing {
            smooth::<T>(&tiled, T::of(params.sigma)).at(Stage::Smooth)?
        } else {
            tiled
        };
        let processed = crate::smoothing::restore_roi(&filtered, &self.image, &self.mask).at(Stage::Restore)?;
        let stream = jpegls::encode(&processed, &params.jpegls).at(Stage::Encode)?;
        let metrics =
            MetricsRecord::evaluate(&self.image, &processed, &self.mask, self.n_o, stream.len()).at(Stage::Metrics)?;
        Ok(PipelineResult {
            stream,
            processed,
            metrics,
            summary: self.plan.summary(),
        })
    }
}

/// Truncates the DCT of every eligible NROI leaf and tiles the results back.
/// Leaves are independent, so they are transformed in parallel and written
/// back in plan order.
fn reduce_nroi<T: Real>(image: &GrayImage, plan: &PartitionPlan, params: &CompressionParams) -> Result<GrayImage> {
    let reducer8 = BlockReducer::<T>::new(BLOCK)?;
    let reducer4 = BlockReducer::<T>::new(SUB_BLOCK)?;
    let reduced: Vec<(usize, Vec<u8>)> = plan
        .leaves()
        .par_iter()
        .enumerate()
        .filter(|(_, leaf)| leaf.class == BlockClass::Nroi && (leaf.size == BLOCK || params.truncate_4x4))
        .map(|(i, leaf)| {
            let n_edge = if params.use_edges { leaf.edge_count } else { 0 };
            let gamma = compute_gamma(params.gamma0, n_edge, leaf.size, params.eq1)?;
            let reducer = if leaf.size == BLOCK { &reducer8 } else { &reducer4 };
            let block = image.block(leaf.x, leaf.y, leaf.size);
            Ok((i, reducer.reduce(&block, gamma)?))
        })
        .collect::<Result<_>>()?;
    let mut out = image.clone();
    for (i, block) in reduced {
        let leaf = &plan.leaves()[i];
        out.put_block(leaf.x, leaf.y, leaf.size, &block);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub stream: Vec<u8>,
    /// The image that was coded; decoding `stream` reproduces it exactly.
    pub processed: GrayImage,
    /// Sizes, with distortion measured over the predicted ROI.
    pub metrics: MetricsRecord<f64>,
    pub summary: PartitionSummary,
}

/// Full pipeline with `T` as the working precision of the real-valued stages.
pub fn compress_as<T: Real>(
    image: &GrayImage,
    prob_map: &ProbabilityMap,
    params: &CompressionParams,
) -> PipelineResultOf<(PreparedImage, PipelineResult)> {
    let prepared = PreparedImage::new::<T>(image, prob_map, params)?;
    let result = prepared.compress::<T>(params)?;
    Ok((prepared, result))
}

/// [`compress_as`] in double precision, returning only the result.
pub fn compress(
    image: &GrayImage,
    prob_map: &ProbabilityMap,
    params: &CompressionParams,
) -> PipelineResultOf<PipelineResult> {
    compress_as::<f64>(image, prob_map, params).map(|(_, r)| r)
}

/// Runs `f` on a dedicated pool of `workers` threads. Results never depend
/// on the worker count.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    if workers == 0 {
        return Err(Error::invalid("workers", "must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    Ok(pool.install(f))
}

pub fn decompress(stream: &[u8]) -> PipelineResultOf<GrayImage> {
    jpegls::decode(stream).at(Stage::Decode)
}
