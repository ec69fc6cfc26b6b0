//! Canny edge detection and per-block edge counts.

use crate::border::Plane;
use crate::error::{Error, Result};
use crate::image_io::GrayImage;
use crate::roi::neighbours8;
use crate::scalar::Real;
use crate::smoothing::GaussianKernel;

/// Row-major binary raster of edge pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl EdgeMap {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || width.checked_mul(height) != Some(bits.len()) {
            return Err(Error::invalid(
                "bits",
                format!("{} bits for a {width}x{height} edge map", bits.len()),
            ));
        }
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![false; width.saturating_mul(height)])
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
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_subset_of(&self, other: &EdgeMap) -> bool {
        self.dimensions() == other.dimensions()
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// 255 for edge pixels, 0 elsewhere.
    pub fn to_image(&self) -> GrayImage {
        let samples = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        GrayImage::new(self.width, self.height, samples).expect("edge map dimensions are valid")
    }
}

/// Canny thresholds and pre-smoothing scale. `high` and `low` are fractions
/// of the largest gradient magnitude in the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CannyParams {
    pub high: f64,
    pub low: f64,
    pub sigma: f64,
}

impl CannyParams {
    pub const DEFAULT_HIGH: f64 = 0.15;
    pub const DEFAULT_LOW_RATIO: f64 = 0.4;
    pub const DEFAULT_SIGMA: f64 = 1.4;

    /// `low = low_ratio * high`.
    pub fn with_ratio(high: f64, low_ratio: f64, sigma: f64) -> Self {
        Self {
            high,
            low: high * low_ratio,
            sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.high > 0.0 && self.high <= 1.0) {
            return Err(Error::invalid("high", format!("{} is outside (0, 1]", self.high)));
        }
        if !(self.low > 0.0 && self.low <= self.high) {
            return Err(Error::invalid(
                "low",
                format!("{} is outside (0, high = {}]", self.low, self.high),
            ));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma_pre", format!("{} must be positive", self.sigma)));
        }
        Ok(())
    }
}

impl Default for CannyParams {
    fn default() -> Self {
        Self::with_ratio(Self::DEFAULT_HIGH, Self::DEFAULT_LOW_RATIO, Self::DEFAULT_SIGMA)
    }
}

#[derive(Clone, Copy)]
enum Direction {
    Horizontal,
    Vertical,
    Diagonal,
    AntiDiagonal,
}

impl Direction {
    // tan(22.5 degrees)
    const TAN_22_5: f64 = 0.414_213_562_373_095_1;

    fn of<T: Real>(gx: T, gy: T) -> Self {
        let (ax, ay) = (gx.abs(), gy.abs());
        let t = T::of(Self::TAN_22_5);
        if ay <= t * ax {
            Direction::Horizontal
        } else if ax < t * ay {
            Direction::Vertical
        } else if (gx > T::zero()) == (gy > T::zero()) {
            Direction::Diagonal
        } else {
            Direction::AntiDiagonal
        }
    }

    /// Neighbour offsets across the edge: the first lies on the left/upper side.
    fn neighbours(self) -> [(isize, isize); 2] {
        match self {
            Direction::Horizontal => [(-1, 0), (1, 0)],
            Direction::Vertical => [(0, -1), (0, 1)],
            Direction::Diagonal => [(-1, -1), (1, 1)],
            Direction::AntiDiagonal => [(1, -1), (-1, 1)],
        }
    }
}

/// Canny detector: Gaussian pre-smoothing, 3x3 Sobel gradients, four-direction
/// non-maximum suppression and hysteresis, all with mirrored borders.
///
/// Plateaus of equal magnitude across the edge resolve to the left/upper pixel,
/// so a step edge yields a one-pixel-wide line.
pub fn canny<T: Real>(image: &GrayImage, params: &CannyParams) -> Result<EdgeMap> {
    params.validate()?;
    let (w, h) = image.dimensions();
    let kernel = GaussianKernel::new(T::of(params.sigma))?;
    let smoothed = kernel.apply(&Plane::<T>::from_u8(w, h, image.samples()));

    let two = T::of(2.0);
    let mut gx = vec![T::zero(); w * h];
    let mut gy = vec![T::zero(); w * h];
    let mut magnitude = vec![T::zero(); w * h];
    let mut max_mag = T::zero();
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p = |dx: isize, dy: isize| smoothed.at_mirrored(x + dx, y + dy);
            let sx = (p(1, -1) + two * p(1, 0) + p(1, 1)) - (p(-1, -1) + two * p(-1, 0) + p(-1, 1));
            let sy = (p(-1, 1) + two * p(0, 1) + p(1, 1)) - (p(-1, -1) + two * p(0, -1) + p(1, -1));
            let i = y as usize * w + x as usize;
            gx[i] = sx;
            gy[i] = sy;
            magnitude[i] = sx.hypot(sy);
            if magnitude[i] > max_mag {
                max_mag = magnitude[i];
            }
        }
    }
    if max_mag <= T::zero() {
        return EdgeMap::empty(w, h);
    }

    let mag = Plane {
        width: w,
        height: h,
        data: magnitude,
    };
    let high_t = T::of(params.high) * max_mag;
    let low_t = T::of(params.low) * max_mag;
    // Magnitudes closer than this are treated as equal during suppression.
    let tie = max_mag * T::epsilon().sqrt();

    // 0 = suppressed, 1 = weak candidate, 2 = strong
    let mut class = vec![0u8; w * h];
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag.data[i];
            if m < low_t || m <= T::zero() {
                continue;
            }
            let [(bx, by), (ax, ay)] = Direction::of(gx[i], gy[i]).neighbours();
            let before = mag.at_mirrored(x as isize + bx, y as isize + by);
            let after = mag.at_mirrored(x as isize + ax, y as isize + ay);
            if m > before + tie && m + tie >= after {
                if m >= high_t {
                    class[i] = 2;
                    stack.push(i);
                } else {
                    class[i] = 1;
                }
            }
        }
    }

    while let Some(i) = stack.pop() {
        for (nx, ny) in neighbours8(i % w, i / w, w, h) {
            let j = ny * w + nx;
            if class[j] == 1 {
                class[j] = 2;
                stack.push(j);
            }
        }
    }

    EdgeMap::new(w, h, class.into_iter().map(|c| c == 2).collect())
}

/// Number of edge pixels in the `size`x`size` footprint whose top-left corner is (`x`, `y`).
pub fn count_edges_in_block(edges: &EdgeMap, x: usize, y: usize, size: usize) -> Result<usize> {
    let (w, h) = edges.dimensions();
    if size == 0 || x + size > w || y + size > h {
        return Err(Error::OutOfBounds {
            x,
            y,
            size,
            width: w,
            height: h,
        });
    }
    Ok((y..y + size)
        .map(|row| edges.bits[row * w + x..row * w + x + size].iter().filter(|&&b| b).count())
        .sum())
}
