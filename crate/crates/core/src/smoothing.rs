//! Gaussian deblocking filter and restoration of the original ROI pixels.

use crate::border::Plane;
use crate::error::{Error, Result};
use crate::image_io::GrayImage;
use crate::roi::RoiMask;
use crate::scalar::{quantize_sample, Real};

/// Sampled, unit-sum Gaussian with support radius `ceil(3 * sigma)`, held in
/// separable form: the 2-D weight at (dx, dy) is `taps[dx] * taps[dy]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel<T> {
    sigma: T,
    radius: usize,
    taps: Vec<T>,
}

impl<T: Real> GaussianKernel<T> {
    pub fn new(sigma: T) -> Result<Self> {
        if !sigma.is_finite() || sigma <= T::zero() {
            return Err(Error::invalid("sigma", format!("{sigma} must be positive")));
        }
        let radius = (T::of(3.0) * sigma)
            .ceil()
            .to_usize()
            .ok_or_else(|| Error::invalid("sigma", "kernel radius overflows"))?;
        let two_var = T::of(2.0) * sigma * sigma;
        let raw: Vec<T> = (0..=2 * radius)
            .map(|i| {
                let d = T::of_usize(i) - T::of_usize(radius);
                (-(d * d) / two_var).exp()
            })
            .collect();
        let total: T = raw.iter().copied().sum();
        Ok(Self {
            sigma,
            radius,
            taps: raw.into_iter().map(|v| v / total).collect(),
        })
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Side length of the square support.
    pub fn support(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn taps(&self) -> &[T] {
        &self.taps
    }

    /// Weight at offset (`dx`, `dy`) from the centre.
    pub fn weight(&self, dx: isize, dy: isize) -> T {
        let r = self.radius as isize;
        if dx.abs() > r || dy.abs() > r {
            return T::zero();
        }
        self.taps[(dx + r) as usize] * self.taps[(dy + r) as usize]
    }

    /// Full row-major (2r+1)x(2r+1) weight table.
    pub fn weights(&self) -> Vec<T> {
        self.taps
            .iter()
            .flat_map(|&wy| self.taps.iter().map(move |&wx| wx * wy))
            .collect()
    }

    /// Real-valued filtering of a plane with mirrored borders.
    pub fn apply(&self, plane: &Plane<T>) -> Plane<T> {
        plane.convolve_separable(&self.taps)
    }
}

pub fn gaussian_kernel<T: Real>(sigma: T) -> Result<GaussianKernel<T>> {
    GaussianKernel::new(sigma)
}

/// Gaussian filtering with mirrored borders, rounded and clamped back to 8 bits.
pub fn smooth<T: Real>(image: &GrayImage, sigma: T) -> Result<GrayImage> {
    let kernel = GaussianKernel::new(sigma)?;
    Ok(smooth_with(image, &kernel))
}

pub fn smooth_with<T: Real>(image: &GrayImage, kernel: &GaussianKernel<T>) -> GrayImage {
    let plane = Plane::<T>::from_u8(image.width(), image.height(), image.samples());
    let filtered = kernel.apply(&plane);
    let samples = filtered.data.into_iter().map(quantize_sample).collect();
    GrayImage::new(image.width(), image.height(), samples).expect("dimensions preserved")
}

/// Takes `original` where the mask is set and `filtered` elsewhere.
pub fn restore_roi(filtered: &GrayImage, original: &GrayImage, mask: &RoiMask) -> Result<GrayImage> {
    for dims in [original.dimensions(), mask.dimensions()] {
        if dims != filtered.dimensions() {
            return Err(Error::DimensionMismatch {
                expected: filtered.dimensions(),
                actual: dims,
            });
        }
    }
    let samples = filtered
        .samples()
        .iter()
        .zip(original.samples())
        .zip(mask.bits())
        .map(|((&f, &o), &roi)| if roi { o } else { f })
        .collect();
    GrayImage::new(filtered.width(), filtered.height(), samples)
}
