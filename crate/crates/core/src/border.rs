//! Mirror border extension and separable convolution over real-valued planes.

use crate::scalar::Real;

/// Maps any integer coordinate into `0..len` by mirroring about the edge
/// samples without repeating them (`-1 -> 1`, `len -> len - 2`).
#[inline]
pub fn mirror_index(i: isize, len: usize) -> usize {
    debug_assert!(len > 0);
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = i.rem_euclid(period);
    if m < len as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Row-major plane of real samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Real> Plane<T> {
    pub fn from_u8(width: usize, height: usize, samples: &[u8]) -> Self {
        Self {
            width,
            height,
            data: samples.iter().map(|&v| T::of(f64::from(v))).collect(),
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    /// Sample lookup with mirrored coordinates.
    #[inline]
    pub fn at_mirrored(&self, x: isize, y: isize) -> T {
        self.at(mirror_index(x, self.width), mirror_index(y, self.height))
    }

    /// Convolves rows then columns with the same symmetric odd-length kernel.
    pub fn convolve_separable(&self, taps: &[T]) -> Plane<T> {
        debug_assert!(taps.len() % 2 == 1);
        let radius = (taps.len() / 2) as isize;
        let (w, h) = (self.width, self.height);

        let mut horizontal = vec![T::zero(); w * h];
        for y in 0..h {
            let row = &self.data[y * w..(y + 1) * w];
            for x in 0..w {
                let mut acc = T::zero();
                for (k, &tap) in taps.iter().enumerate() {
                    let sx = mirror_index(x as isize + k as isize - radius, w);
                    acc += tap * row[sx];
                }
                horizontal[y * w + x] = acc;
            }
        }

        let mut out = vec![T::zero(); w * h];
        for y in 0..h {
            for (k, &tap) in taps.iter().enumerate() {
                let sy = mirror_index(y as isize + k as isize - radius, h);
                let src = &horizontal[sy * w..(sy + 1) * w];
                let dst = &mut out[y * w..(y + 1) * w];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += tap * s;
                }
            }
        }
        Plane {
            width: w,
            height: h,
            data: out,
        }
    }
}
