//! Lossless JPEG-LS (ITU-T T.87 baseline) for 8-bit single-component images.
//!
//! Regular mode, run mode with interruption coding, bias cancellation and
//! marker stuffing are implemented; near-lossless coding, multiple components
//! and sample precisions other than 8 bits are rejected.

mod bitio;
mod context;
mod decoder;
mod encoder;
mod markers;

use thiserror::Error;

use crate::image_io::GrayImage;

pub use context::predict_med;

pub(crate) const MAXVAL: i32 = 255;
pub(crate) const RANGE: i32 = 256;

/// Largest accepted frame, in samples, when decoding.
pub const MAX_DECODED_SAMPLES: u64 = 1 << 28;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JpeglsError {
    #[error("bad marker sequence: {0}")]
    BadMarker(String),
    #[error("corrupt entropy-coded data: {0}")]
    CorruptData(String),
    #[error("frame dimensions {width}x{height} are out of range")]
    DimensionOverflow { width: u64, height: u64 },
    #[error("unsupported sample precision {0} (only 8-bit)")]
    UnsupportedBitDepth(u8),
    #[error("unsupported stream feature: {0}")]
    Unsupported(String),
    #[error("invalid coding parameters: {0}")]
    InvalidParameters(String),
}

/// Coding parameters. Only lossless 8-bit coding is supported, so `near`
/// must be 0 and `maxval` 255.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct JpeglsParams {
    pub near: u16,
    pub maxval: u16,
    pub t1: u16,
    pub t2: u16,
    pub t3: u16,
    pub reset: u16,
}

impl Default for JpeglsParams {
    fn default() -> Self {
        Self {
            near: 0,
            maxval: 255,
            t1: 3,
            t2: 7,
            t3: 21,
            reset: 64,
        }
    }
}

impl JpeglsParams {
    pub fn validate(&self) -> Result<(), JpeglsError> {
        let bad = |msg: String| Err(JpeglsError::InvalidParameters(msg));
        if self.near != 0 {
            return bad(format!("near = {} (only lossless coding is supported)", self.near));
        }
        if self.maxval != 255 {
            return bad(format!("maxval = {} (only 8-bit samples are supported)", self.maxval));
        }
        if !(1 <= self.t1 && self.t1 <= self.t2 && self.t2 <= self.t3 && self.t3 <= self.maxval) {
            return bad(format!(
                "thresholds must satisfy 1 <= T1 <= T2 <= T3 <= 255, got {}, {}, {}",
                self.t1, self.t2, self.t3
            ));
        }
        if !(3..=255).contains(&self.reset) {
            return bad(format!("reset = {} (expected 3..=255)", self.reset));
        }
        Ok(())
    }

    pub(crate) fn is_default(&self) -> bool {
        *self == Self::default()
    }
}

/// Quantizes a local gradient with the default thresholds (3, 7, 21).
pub fn quantize_gradient(d: i32) -> i32 {
    context::quantize_gradient_with(d, 3, 7, 21)
}

/// Encodes `image` as a complete interchange stream.
pub fn encode(image: &GrayImage, params: &JpeglsParams) -> Result<Vec<u8>, JpeglsError> {
    params.validate()?;
    let (w, h) = image.dimensions();
    if w > usize::from(u16::MAX) || h > usize::from(u16::MAX) {
        return Err(JpeglsError::DimensionOverflow {
            width: w as u64,
            height: h as u64,
        });
    }
    let mut out = markers::write_header(w as u16, h as u16, params);
    out.extend(encoder::encode_scan(image, params));
    markers::write_trailer(&mut out);
    Ok(out)
}

/// Decodes a complete interchange stream.
pub fn decode(stream: &[u8]) -> Result<GrayImage, JpeglsError> {
    let header = markers::parse_header(stream)?;
    let (samples, consumed) = decoder::decode_scan(
        &stream[header.scan_offset..],
        header.width,
        header.height,
        &header.params,
    )?;
    markers::expect_trailer(&stream[header.scan_offset + consumed..])?;
    GrayImage::new(header.width, header.height, samples)
        .map_err(|e| JpeglsError::CorruptData(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn image(w: usize, h: usize, f: impl FnMut(usize, usize) -> u8) -> GrayImage {
        GrayImage::from_fn(w, h, f).unwrap()
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_gradient(0), 0);
        assert_eq!(quantize_gradient(5), 2);
        assert_eq!(quantize_gradient(-25), -4);
        assert_eq!(quantize_gradient(2), 1);
        assert_eq!(quantize_gradient(3), 2);
        assert_eq!(quantize_gradient(7), 3);
        assert_eq!(quantize_gradient(21), 4);
    }

    #[test]
    fn quantize_odd_symmetry() {
        for d in -255..=255 {
            assert_eq!(quantize_gradient(-d), -quantize_gradient(d));
        }
    }

    #[test]
    fn one_by_one_round_trip() {
        let img = image(1, 1, |_, _| 42);
        let bytes = encode(&img, &JpeglsParams::default()).unwrap();
        assert_eq!(&bytes[..2], &[0xFF, 0xD8]);
        assert_eq!(&bytes[bytes.len() - 2..], &[0xFF, 0xD9]);
        assert_eq!(decode(&bytes).unwrap(), img);
    }

    #[test]
    fn zeros_4x4_scan_data() {
        let img = image(4, 4, |_, _| 0);
        let bytes = encode(&img, &JpeglsParams::default()).unwrap();
        assert_eq!(&bytes[bytes.len() - 4..], &[0xFF, 0x40, 0xFF, 0xD9]);
    }

    #[test]
    fn constant_image_far_smaller_than_noise() {
        let flat = image(256, 256, |_, _| 77);
        let mut state = 0x2545F491u32;
        let noise = image(256, 256, |_, _| {
            state ^= state << 13;
            state ^= state >> 17;
            state ^= state << 5;
            (state >> 24) as u8
        });
        let p = JpeglsParams::default();
        let a = encode(&flat, &p).unwrap().len();
        let b = encode(&noise, &p).unwrap().len();
        assert!(a * 50 < b, "flat {a} bytes vs noise {b} bytes");
    }

    #[test]
    fn custom_parameters_emit_lse_and_round_trip() {
        let img = image(33, 17, |x, y| ((x * 31 + y * 17) % 251) as u8);
        let p = JpeglsParams {
            t1: 2,
            t2: 5,
            t3: 40,
            reset: 32,
            ..JpeglsParams::default()
        };
        let bytes = encode(&img, &p).unwrap();
        assert!(bytes.windows(2).any(|w| w == [0xFF, 0xF8]));
        assert_eq!(decode(&bytes).unwrap(), img);
        let plain = encode(&img, &JpeglsParams::default()).unwrap();
        assert!(!plain.windows(2).any(|w| w == [0xFF, 0xF8]));
    }

    #[test]
    fn rejects_lossy_and_bad_params() {
        let img = image(2, 2, |_, _| 0);
        let near = JpeglsParams {
            near: 1,
            ..JpeglsParams::default()
        };
        assert!(matches!(encode(&img, &near), Err(JpeglsError::InvalidParameters(_))));
        let thresholds = JpeglsParams {
            t1: 9,
            t2: 5,
            ..JpeglsParams::default()
        };
        assert!(encode(&img, &thresholds).is_err());
    }

    #[test]
    fn mangled_soi_is_marker_error() {
        let img = image(8, 8, |x, y| (x * y) as u8);
        let mut bytes = encode(&img, &JpeglsParams::default()).unwrap();
        bytes[1] = 0xD9;
        assert!(matches!(decode(&bytes), Err(JpeglsError::BadMarker(_))));
    }

    #[test]
    fn truncated_data_is_corruption_error() {
        let img = image(32, 32, |x, y| ((x * 7) ^ (y * 13)) as u8);
        let bytes = encode(&img, &JpeglsParams::default()).unwrap();
        let cut = &bytes[..bytes.len() - 40];
        assert!(matches!(decode(cut), Err(JpeglsError::CorruptData(_))));
    }

    #[test]
    fn huge_frame_is_dimension_error() {
        let img = image(4, 4, |_, _| 1);
        let mut bytes = encode(&img, &JpeglsParams::default()).unwrap();
        // SOF55 height and width fields.
        bytes[7..11].copy_from_slice(&[0xFF; 4]);
        assert!(matches!(decode(&bytes), Err(JpeglsError::DimensionOverflow { .. })));
    }

    #[test]
    fn zero_height_is_rejected() {
        let img = image(4, 4, |_, _| 1);
        let mut bytes = encode(&img, &JpeglsParams::default()).unwrap();
        bytes[7] = 0;
        bytes[8] = 0;
        assert!(decode(&bytes).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn round_trip_random(w in 1usize..48, h in 1usize..48, seed in any::<u64>(), levels in 1u32..=256) {
            let mut s = seed | 1;
            let img = image(w, h, |_, _| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                ((s >> 32) as u32 % levels) as u8
            });
            let bytes = encode(&img, &JpeglsParams::default()).unwrap();
            prop_assert_eq!(decode(&bytes).unwrap(), img.clone());
            prop_assert_eq!(encode(&img, &JpeglsParams::default()).unwrap(), bytes);
        }
    }
}
