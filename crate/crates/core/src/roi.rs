//! Probability map to binary ROI mask: thresholding and largest 8-connected component.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::image_io::{read_pgm, write_pgm, GrayImage, PgmError, ProbabilityMap};

/// Row-major binary raster, `true` marking an ROI pixel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RoiMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl RoiMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || width.checked_mul(height) != Some(bits.len()) {
            return Err(Error::invalid(
                "bits",
                format!("{} bits for a {width}x{height} mask", bits.len()),
            ));
        }
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![false; width.saturating_mul(height)])
    }

    pub fn full(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![true; width.saturating_mul(height)])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut bits = Vec::with_capacity(width.saturating_mul(height));
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::new(width, height, bits)
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

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &RoiMask) -> bool {
        self.dimensions() == other.dimensions()
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Morphological erosion with a 3x3 structuring element; pixels outside the raster count as unset.
    pub fn eroded(&self) -> RoiMask {
        let (w, h) = self.dimensions();
        let bits = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .map(|(x, y)| {
                self.get(x, y)
                    && neighbours8(x, y, w, h).count() == 8
                    && neighbours8(x, y, w, h).all(|(nx, ny)| self.get(nx, ny))
            })
            .collect();
        RoiMask {
            width: w,
            height: h,
            bits,
        }
    }

    /// Serializes as PGM with 0 for unset and 255 for set pixels.
    pub fn to_pgm(&self) -> Vec<u8> {
        write_pgm(&self.to_image())
    }

    pub fn to_image(&self) -> GrayImage {
        let samples = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        GrayImage::new(self.width, self.height, samples).expect("mask dimensions are valid")
    }

    /// Any nonzero sample is read as set.
    pub fn from_image(image: &GrayImage) -> Self {
        RoiMask {
            width: image.width(),
            height: image.height(),
            bits: image.samples().iter().map(|&v| v != 0).collect(),
        }
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self, PgmError> {
        read_pgm(bytes).map(|img| Self::from_image(&img))
    }
}

pub(crate) fn neighbours8(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> {
    const OFFSETS: [(isize, isize); 8] = [
        (-1, -1),
        (0, -1),
        (1, -1),
        (-1, 0),
        (1, 0),
        (-1, 1),
        (0, 1),
        (1, 1),
    ];
    OFFSETS.iter().filter_map(move |&(dx, dy)| {
        let nx = x.checked_add_signed(dx)?;
        let ny = y.checked_add_signed(dy)?;
        (nx < w && ny < h).then_some((nx, ny))
    })
}

/// `bit = probability >= threshold`, with no connectivity processing.
pub fn threshold_map(map: &ProbabilityMap, threshold: f64) -> Result<RoiMask> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(
            "threshold",
            format!("{threshold} is outside [0, 1]"),
        ));
    }
    let bits = map.probabilities().map(|p| p >= threshold).collect();
    RoiMask::new(map.width(), map.height(), bits)
}

/// Keeps only the largest 8-connected component. Ties go to the component
/// containing the smallest row-major pixel index.
pub fn largest_component(mask: &RoiMask) -> RoiMask {
    let (w, h) = mask.dimensions();
    let mut label = vec![0u32; w * h];
    let mut best: Option<(u32, usize)> = None;
    let mut next = 0u32;
    let mut queue = VecDeque::new();

    for start in 0..w * h {
        if !mask.bits[start] || label[start] != 0 {
            continue;
        }
        next += 1;
        label[start] = next;
        queue.push_back(start);
        let mut size = 0usize;
        while let Some(i) = queue.pop_front() {
            size += 1;
            for (nx, ny) in neighbours8(i % w, i / w, w, h) {
                let j = ny * w + nx;
                if mask.bits[j] && label[j] == 0 {
                    label[j] = next;
                    queue.push_back(j);
                }
            }
        }
        // Components are discovered in order of their first row-major pixel,
        // so a strict comparison keeps the earliest on ties.
        if best.is_none_or(|(_, best_size)| size > best_size) {
            best = Some((next, size));
        }
    }

    let keep = best.map_or(0, |(id, _)| id);
    RoiMask {
        width: w,
        height: h,
        bits: label.iter().map(|&l| keep != 0 && l == keep).collect(),
    }
}

pub fn segment(map: &ProbabilityMap, threshold: f64) -> Result<RoiMask> {
    threshold_map(map, threshold).map(|m| largest_component(&m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: components by repeated recursive-style flood fill
    /// from every seed, returning each as a sorted pixel list.
    fn components_oracle(mask: &RoiMask) -> Vec<Vec<usize>> {
        let (w, h) = mask.dimensions();
        let mut seen = vec![false; w * h];
        let mut out = Vec::new();
        for seed in 0..w * h {
            if !mask.bits()[seed] || seen[seed] {
                continue;
            }
            let mut stack = vec![seed];
            let mut comp = Vec::new();
            seen[seed] = true;
            while let Some(i) = stack.pop() {
                comp.push(i);
                let (x, y) = ((i % w) as i64, (i / w) as i64);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let j = (ny * w as i64 + nx) as usize;
                        if mask.bits()[j] && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    fn mask_from_rows(rows: &[&str]) -> RoiMask {
        let w = rows[0].len();
        RoiMask::from_fn(w, rows.len(), |x, y| rows[y].as_bytes()[x] == b'#').unwrap()
    }

    #[test]
    fn threshold_endpoints() {
        let zeros = ProbabilityMap::uniform(4, 3, 0.0).unwrap();
        assert!(threshold_map(&zeros, 0.5).unwrap().is_empty());
        let ones = ProbabilityMap::new(4, 3, vec![255; 12]).unwrap();
        assert_eq!(threshold_map(&ones, 0.5).unwrap().count(), 12);
    }

    #[test]
    fn threshold_boundary_is_inclusive() {
        let map = ProbabilityMap::from_probabilities(3, 1, &[0.2, 0.5, 0.8]).unwrap();
        assert_eq!(threshold_map(&map, 0.5).unwrap().bits(), &[false, true, true]);
        // Exactly representable boundary.
        let map = ProbabilityMap::new(1, 1, vec![51]).unwrap();
        assert!(threshold_map(&map, 0.2).unwrap().get(0, 0));
    }

    #[test]
    fn threshold_out_of_range() {
        let map = ProbabilityMap::uniform(2, 2, 0.3).unwrap();
        assert!(threshold_map(&map, -0.01).is_err());
        assert!(threshold_map(&map, 1.5).is_err());
        assert!(threshold_map(&map, f64::NAN).is_err());
    }

    #[test]
    fn largest_component_empty_and_full() {
        let empty = RoiMask::empty(5, 4).unwrap();
        assert_eq!(largest_component(&empty), empty);
        let full = RoiMask::full(5, 4).unwrap();
        assert_eq!(largest_component(&full), full);
    }

    #[test]
    fn keeps_five_pixel_component_over_three() {
        let mask = mask_from_rows(&[
            "##....", //
            ".#....",
            "..#...",
            ".#....",
            "......",
            "...###",
        ]);
        let comps = components_oracle(&mask);
        let sizes: Vec<usize> = comps.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![5, 3]);
        let kept = largest_component(&mask);
        assert_eq!(kept.count(), 5);
        for &i in &comps[0] {
            assert!(kept.bits()[i]);
        }
    }

    #[test]
    fn diagonal_pixels_are_connected() {
        let mask = mask_from_rows(&["#..", ".#.", "..#"]);
        assert_eq!(largest_component(&mask), mask);
    }

    #[test]
    fn tie_keeps_earliest_component() {
        let mask = mask_from_rows(&["....##", "......", "##...."]);
        let kept = largest_component(&mask);
        assert_eq!(kept.bits(), mask_from_rows(&["....##", "......", "......"]).bits());
    }

    #[test]
    fn segment_composition() {
        let high = ProbabilityMap::uniform(6, 6, 0.9).unwrap();
        assert_eq!(segment(&high, 0.5).unwrap().count(), 36);
        let low = ProbabilityMap::uniform(6, 6, 0.1).unwrap();
        assert!(segment(&low, 0.5).unwrap().is_empty());

        // Components of 10 and 2 pixels.
        let mut p = vec![0.1; 8 * 6];
        for x in 0..5 {
            p[x] = 0.9;
            p[8 + x] = 0.9;
        }
        p[5 * 8 + 6] = 0.9;
        p[5 * 8 + 7] = 0.9;
        let map = ProbabilityMap::from_probabilities(8, 6, &p).unwrap();
        let thresholded = threshold_map(&map, 0.5).unwrap();
        let oracle = components_oracle(&thresholded);
        let biggest = oracle.iter().max_by_key(|c| c.len()).unwrap();
        assert_eq!(biggest.len(), 10);
        let seg = segment(&map, 0.5).unwrap();
        assert_eq!(seg.count(), 10);
        assert!(biggest.iter().all(|&i| seg.bits()[i]));
    }

    #[test]
    fn erosion_removes_thin_structures() {
        let mask = mask_from_rows(&[
            "........", //
            ".#####..",
            ".#####..",
            ".#####.#",
            "......#.",
        ]);
        let eroded = mask.eroded();
        assert_eq!(eroded.count(), 3);
        assert!(eroded.get(2, 2) && eroded.get(3, 2) && eroded.get(4, 2));
        assert!(eroded.is_subset_of(&mask));
    }

    #[test]
    fn pgm_round_trip() {
        let mask = mask_from_rows(&["#.#", "..#"]);
        let bytes = mask.to_pgm();
        assert_eq!(&bytes[bytes.len() - 6..], &[255, 0, 255, 0, 0, 255]);
        assert_eq!(RoiMask::from_pgm(&bytes).unwrap(), mask);
    }

    fn arb_mask() -> impl Strategy<Value = RoiMask> {
        (1usize..14, 1usize..14).prop_flat_map(|(w, h)| {
            proptest::collection::vec(proptest::bool::weighted(0.45), w * h)
                .prop_map(move |bits| RoiMask::new(w, h, bits).unwrap())
        })
    }

    proptest! {
        #[test]
        fn threshold_monotone(values in proptest::collection::vec(any::<u8>(), 30), t1 in 0.0f64..=1.0, t2 in 0.0f64..=1.0) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let map = ProbabilityMap::new(6, 5, values).unwrap();
            let a = threshold_map(&map, lo).unwrap();
            let b = threshold_map(&map, hi).unwrap();
            prop_assert!(b.is_subset_of(&a));
        }

        #[test]
        fn largest_component_properties(mask in arb_mask()) {
            let kept = largest_component(&mask);
            prop_assert!(kept.is_subset_of(&mask));
            let comps = components_oracle(&kept);
            prop_assert!(comps.len() <= 1);
            let oracle_max = components_oracle(&mask).iter().map(Vec::len).max().unwrap_or(0);
            prop_assert_eq!(kept.count(), oracle_max);
            prop_assert_eq!(largest_component(&kept), kept);
        }
    }
}
