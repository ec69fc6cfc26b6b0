//! Binary PGM (P5) rasters: 8-bit grayscale images and probability maps.

use thiserror::Error;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PgmError {
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("truncated PGM payload: expected {expected} bytes, found {actual}")]
    TruncatedPayload { expected: usize, actual: usize },
    #[error("unsupported PGM maxval {0} (at most 255)")]
    UnsupportedMaxval(u64),
}

/// Row-major 8-bit grayscale raster.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("dimensions", format!("{width}x{height} is empty")));
        }
        if width.checked_mul(height) != Some(samples.len()) {
            return Err(Error::invalid(
                "samples",
                format!("{} samples for a {width}x{height} raster", samples.len()),
            ));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width.saturating_mul(height)])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut samples = Vec::with_capacity(width.saturating_mul(height));
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self::new(width, height, samples)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    #[inline]
    pub fn samples_mut(&mut self) -> &mut [u8] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.samples[y * self.width + x] = value;
    }

    /// Copies the `size`x`size` footprint at (`x`, `y`) into a row-major vector.
    pub fn block(&self, x: usize, y: usize, size: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(size * size);
        for row in y..y + size {
            let start = row * self.width + x;
            out.extend_from_slice(&self.samples[start..start + size]);
        }
        out
    }

    pub fn put_block(&mut self, x: usize, y: usize, size: usize, block: &[u8]) {
        debug_assert_eq!(block.len(), size * size);
        for (r, chunk) in block.chunks_exact(size).enumerate() {
            let start = (y + r) * self.width + x;
            self.samples[start..start + size].copy_from_slice(chunk);
        }
    }
}

/// Per-pixel ROI probability, stored as 8-bit values `v` meaning `v / 255`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbabilityMap {
    width: usize,
    height: usize,
    values: Vec<u8>,
}

impl ProbabilityMap {
    pub fn new(width: usize, height: usize, values: Vec<u8>) -> Result<Self> {
        let image = GrayImage::new(width, height, values)?;
        Ok(Self::from(image))
    }

    /// Quantizes real probabilities to the 8-bit scale (clamped to [0, 1]).
    pub fn from_probabilities(width: usize, height: usize, probabilities: &[f64]) -> Result<Self> {
        let values = probabilities
            .iter()
            .map(|p| (p.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        Self::new(width, height, values)
    }

    pub fn uniform(width: usize, height: usize, probability: f64) -> Result<Self> {
        Self::from_probabilities(width, height, &vec![probability; width.saturating_mul(height)])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn values(&self) -> &[u8] {
        &self.values
    }

    #[inline]
    pub fn probability(&self, x: usize, y: usize) -> f64 {
        f64::from(self.values[y * self.width + x]) / 255.0
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|&v| f64::from(v) / 255.0)
    }
}

impl From<GrayImage> for ProbabilityMap {
    fn from(image: GrayImage) -> Self {
        Self {
            width: image.width,
            height: image.height,
            values: image.samples,
        }
    }
}

impl From<ProbabilityMap> for GrayImage {
    fn from(map: ProbabilityMap) -> Self {
        Self {
            width: map.width,
            height: map.height,
            samples: map.values,
        }
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    /// Skips the whitespace and `#` comments separating two header fields.
    fn skip_separator(&mut self, field: &str) -> Result<(), PgmError> {
        let start = self.pos;
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') => {
                    while let Some(&b) = self.bytes.get(self.pos) {
                        self.pos += 1;
                        if b == b'\n' || b == b'\r' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        if self.pos == start {
            return Err(PgmError::MalformedHeader(format!("expected whitespace before {field}")));
        }
        Ok(())
    }

    fn number(&mut self, field: &str) -> Result<u64, PgmError> {
        self.skip_separator(field)?;
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PgmError::MalformedHeader(format!("missing {field}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| PgmError::MalformedHeader(format!("{field} out of range")))
    }
}

/// Parses a binary PGM. Samples are returned as stored; maxval must not exceed 255.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage, PgmError> {
    if !bytes.starts_with(b"P5") {
        return Err(PgmError::MalformedHeader("missing P5 magic".into()));
    }
    let mut cursor = HeaderCursor { bytes, pos: 2 };
    let width = cursor.number("width")?;
    let height = cursor.number("height")?;
    let maxval = cursor.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(PgmError::MalformedHeader(format!("empty raster {width}x{height}")));
    }
    if maxval == 0 {
        return Err(PgmError::MalformedHeader("maxval is zero".into()));
    }
    if maxval > 255 {
        return Err(PgmError::UnsupportedMaxval(maxval));
    }
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        _ => {
            return Err(PgmError::MalformedHeader(
                "expected a single whitespace byte after maxval".into(),
            ))
        }
    }
    let count = usize::try_from(width)
        .ok()
        .zip(usize::try_from(height).ok())
        .and_then(|(w, h)| w.checked_mul(h))
        .ok_or_else(|| PgmError::MalformedHeader("raster size overflows".into()))?;
    let payload = &bytes[cursor.pos..];
    if payload.len() < count {
        return Err(PgmError::TruncatedPayload {
            expected: count,
            actual: payload.len(),
        });
    }
    Ok(GrayImage {
        width: width as usize,
        height: height as usize,
        samples: payload[..count].to_vec(),
    })
}

/// Canonical serialization: `P5\n<w> <h>\n255\n` followed by the raw samples.
pub fn write_pgm(image: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", image.width, image.height);
    let mut out = Vec::with_capacity(header.len() + image.samples.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&image.samples);
    out
}

pub fn read_probability_map(bytes: &[u8]) -> Result<ProbabilityMap, PgmError> {
    read_pgm(bytes).map(ProbabilityMap::from)
}

pub fn write_probability_map(map: &ProbabilityMap) -> Vec<u8> {
    write_pgm(&GrayImage::from(map.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_two_by_two() {
        let mut bytes = b"P5 2 2 255 ".to_vec();
        bytes.extend_from_slice(&[0, 255, 128, 7]);
        let img = read_pgm(&bytes).unwrap();
        assert_eq!(img.dimensions(), (2, 2));
        assert_eq!(img.samples(), &[0, 255, 128, 7]);
    }

    #[test]
    fn reads_single_pixel() {
        let img = read_pgm(b"P5 1 1 255\n\x2a").unwrap();
        assert_eq!(img.dimensions(), (1, 1));
        assert_eq!(img.get(0, 0), 42);
    }

    #[test]
    fn comments_between_fields() {
        let img = read_pgm(b"P5\n# made by hand\n3 # width\n1\n255\n\x01\x02\x03").unwrap();
        assert_eq!(img.samples(), &[1, 2, 3]);
    }

    #[test]
    fn truncated_payload() {
        assert_eq!(
            read_pgm(b"P5 2 2 255\n\x00\x01\x02"),
            Err(PgmError::TruncatedPayload {
                expected: 4,
                actual: 3
            })
        );
    }

    #[test]
    fn maxval_above_255_rejected() {
        assert_eq!(
            read_pgm(b"P5 1 1 65535\n\x00\x00"),
            Err(PgmError::UnsupportedMaxval(65535))
        );
    }

    #[test]
    fn malformed_headers() {
        for bad in [
            &b"P2 1 1 255\n\x00"[..],
            b"P5",
            b"P51 1 255\n\x00",
            b"P5 1 255\n\x00",
            b"P5 0 1 255\n",
            b"P5 1 1 0\n\x00",
            b"P5 1 1 255",
            b"P5 x 1 255\n\x00",
            b"P5 99999999999999999999999 1 255\n",
        ] {
            assert!(
                matches!(read_pgm(bad), Err(PgmError::MalformedHeader(_))),
                "{:?}",
                String::from_utf8_lossy(bad)
            );
        }
    }

    #[test]
    fn canonical_single_pixel() {
        let img = GrayImage::new(1, 1, vec![0]).unwrap();
        assert_eq!(write_pgm(&img), b"P5\n1 1\n255\n\x00".to_vec());
    }

    #[test]
    fn payload_size_512() {
        let img = GrayImage::filled(512, 512, 9).unwrap();
        let bytes = write_pgm(&img);
        let header = b"P5\n512 512\n255\n".len();
        assert_eq!(bytes.len() - header, 262_144);
    }

    #[test]
    fn probability_scale() {
        let map = read_probability_map(b"P5 3 1 255\n\xff\x00\x80").unwrap();
        assert_eq!(map.probability(0, 0), 1.0);
        assert_eq!(map.probability(1, 0), 0.0);
        assert!((map.probability(2, 0) - 128.0 / 255.0).abs() < 1e-15);
        assert!((map.probability(2, 0) - 0.502).abs() < 1e-3);
    }

    #[test]
    fn image_invariants() {
        assert!(GrayImage::new(0, 3, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(w in 1usize..40, h in 1usize..40, seed in any::<u64>()) {
            let img = GrayImage::from_fn(w, h, |x, y| {
                (seed.wrapping_mul(6364136223846793005).wrapping_add(((y * w + x) as u64).wrapping_mul(1442695040888963407)) >> 56) as u8
            }).unwrap();
            let bytes = write_pgm(&img);
            prop_assert_eq!(&write_pgm(&img), &bytes);
            prop_assert_eq!(read_pgm(&bytes).unwrap(), img);
        }
    }
}
