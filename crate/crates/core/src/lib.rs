//! Region-of-interest aware grayscale compression.
//!
//! Pixels inside a segmented region of interest are kept bit-exact while the
//! background is simplified (block DCT truncation, Gaussian smoothing) before
//! lossless JPEG-LS coding.
//!
//! The real-valued stages are generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the precision for common use.

pub mod border;
pub mod dct;
pub mod edges;
pub mod error;
pub mod image_io;
pub mod jpegls;
pub mod metrics;
pub mod partition;
pub mod pipeline;
pub mod roi;
pub mod scalar;
pub mod smoothing;
pub mod sweep;
pub mod synth;

pub use dct::BudgetRule;
pub use edges::{CannyParams, EdgeMap};
pub use error::{Error, Result};
pub use image_io::{GrayImage, ProbabilityMap};
pub use jpegls::{JpeglsError, JpeglsParams};
pub use pipeline::{compress, decompress, CompressionParams, PipelineError, PipelineResult};
pub use roi::RoiMask;
pub use scalar::Real;

pub type CoefficientBlockF64 = dct::CoefficientBlock<f64>;
pub type CoefficientBlockF32 = dct::CoefficientBlock<f32>;
pub type DctPlanF64 = dct::DctPlan<f64>;
pub type DctPlanF32 = dct::DctPlan<f32>;
pub type BlockReducerF64 = dct::BlockReducer<f64>;
pub type BlockReducerF32 = dct::BlockReducer<f32>;
pub type GaussianKernelF64 = smoothing::GaussianKernel<f64>;
pub type GaussianKernelF32 = smoothing::GaussianKernel<f32>;
pub type PsnrF64 = metrics::Psnr<f64>;
pub type MetricsRecordF64 = metrics::MetricsRecord<f64>;
pub type TradeoffCurveF64 = metrics::TradeoffCurve<f64>;
