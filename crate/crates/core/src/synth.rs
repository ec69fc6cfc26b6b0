//! Seeded synthetic angiogram-like test images: a smooth background with
//! mild noise and a dark branching vessel tree.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::border::Plane;
use crate::error::{Error, Result};
use crate::image_io::{GrayImage, ProbabilityMap};
use crate::roi::{largest_component, RoiMask};
use crate::smoothing::GaussianKernel;

pub const MIN_SIZE: usize = 64;

/// Output of [`generate_synthetic_angiogram`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticAngiogram {
    pub image: GrayImage,
    pub probability: ProbabilityMap,
    pub ground_truth: RoiMask,
}

struct Segment {
    x: f64,
    y: f64,
    heading: f64,
    radius: f64,
    length: usize,
    depth: u32,
}

/// Blurs a binary mask and rescales it so its maximum is 1. Structures at
/// least three pixels wide stay at or above 0.5 after blurring.
pub fn probability_from_mask(mask: &RoiMask, sigma: f64) -> Result<ProbabilityMap> {
    let (w, h) = mask.dimensions();
    let binary: Vec<u8> = mask.bits().iter().map(|&b| u8::from(b)).collect();
    let kernel = GaussianKernel::<f64>::new(sigma)?;
    let blurred = kernel.apply(&Plane::<f64>::from_u8(w, h, &binary));
    let peak = blurred.data.iter().copied().fold(0.0, f64::max);
    let probs: Vec<f64> = if peak > 0.0 {
        blurred.data.iter().map(|&v| (v / peak).clamp(0.0, 1.0)).collect()
    } else {
        vec![0.0; w * h]
    };
    ProbabilityMap::from_probabilities(w, h, &probs)
}

fn stamp(opacity: &mut [f64], w: usize, h: usize, cx: f64, cy: f64, r: f64) {
    let x0 = (cx - r).floor().max(0.0) as usize;
    let y0 = (cy - r).floor().max(0.0) as usize;
    let x1 = ((cx + r).ceil() as usize).min(w - 1);
    let y1 = ((cy + r).ceil() as usize).min(h - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
            if d2 <= r * r {
                let v = 0.65 + 0.35 * (1.0 - d2 / (r * r));
                let o = &mut opacity[y * w + x];
                *o = o.max(v);
            }
        }
    }
}

/// Deterministic for a given `(seed, width, height)`.
pub fn generate_synthetic_angiogram(seed: u64, width: usize, height: usize) -> Result<SyntheticAngiogram> {
    if width < MIN_SIZE || height < MIN_SIZE {
        return Err(Error::invalid(
            "dimensions",
            format!("{width}x{height} is smaller than {MIN_SIZE}x{MIN_SIZE}"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width, height);
    let (wf, hf) = (w as f64, h as f64);
    let scale = wf.min(hf);

    // Low-frequency background: a few broad cosine waves plus a vignette.
    let base = rng.random_range(135.0..175.0);
    let waves: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            let angle = rng.random_range(0.0..PI);
            let freq = rng.random_range(0.5..2.0) * 2.0 * PI / scale;
            (angle, freq, rng.random_range(0.0..2.0 * PI), rng.random_range(4.0..12.0))
        })
        .collect();
    let vignette = rng.random_range(10.0..25.0);

    let mut opacity = vec![0.0f64; w * h];
    let margin = 4.0;
    let target = (w * h) as f64 * rng.random_range(0.06..0.10);
    let mut stack = vec![Segment {
        x: rng.random_range(0.3..0.7) * wf,
        y: margin + 1.0,
        heading: PI / 2.0 + rng.random_range(-0.3..0.3),
        radius: rng.random_range(3.5..4.5) * (scale / 512.0).clamp(0.5, 2.0),
        length: (scale * rng.random_range(0.7..1.1)) as usize,
        depth: 0,
    }];
    let turn = Normal::new(0.0, 0.035).expect("valid normal");
    let mut drawn = 0.0;
    while let Some(mut seg) = stack.pop() {
        for step in 0..seg.length {
            stamp(&mut opacity, w, h, seg.x, seg.y, seg.radius);
            // Roughly the area one unit step of a tube adds.
            drawn += 2.0 * seg.radius;
            seg.heading += turn.sample(&mut rng);
            let nx = seg.x + seg.heading.cos();
            let ny = seg.y + seg.heading.sin();
            // Turn back toward the interior near the frame border.
            if nx < margin || nx > wf - 1.0 - margin {
                seg.heading = PI - seg.heading;
            }
            if ny < margin || ny > hf - 1.0 - margin {
                seg.heading = -seg.heading;
            }
            seg.x = (seg.x + seg.heading.cos()).clamp(margin, wf - 1.0 - margin);
            seg.y = (seg.y + seg.heading.sin()).clamp(margin, hf - 1.0 - margin);
            seg.radius = (seg.radius * 0.9985).max(1.1);

            let can_branch = seg.depth < 5 && step > 10 && drawn < target;
            if can_branch && rng.random_bool(0.02) {
                let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                stack.push(Segment {
                    x: seg.x,
                    y: seg.y,
                    heading: seg.heading + side * rng.random_range(0.4..1.0),
                    radius: (seg.radius * rng.random_range(0.6..0.85)).max(1.1),
                    length: (seg.length.saturating_sub(step) as f64 * rng.random_range(0.5..0.9)) as usize + 8,
                    depth: seg.depth + 1,
                });
            }
        }
    }

    let raw_mask = RoiMask::new(w, h, opacity.iter().map(|&o| o > 0.0).collect())?;
    let ground_truth = largest_component(&raw_mask);

    let noise = Normal::new(0.0, 1.5).expect("valid normal");
    let contrast = rng.random_range(55.0..80.0);
    let mut samples = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (xf, yf) = (x as f64, y as f64);
            let mut v = base;
            for &(angle, freq, phase, amp) in &waves {
                v += amp * ((xf * angle.cos() + yf * angle.sin()) * freq + phase).cos();
            }
            let dx = xf / wf - 0.5;
            let dy = yf / hf - 0.5;
            v -= vignette * (dx * dx + dy * dy) * 2.0;
            if ground_truth.get(x, y) {
                v -= contrast * opacity[y * w + x];
            }
            v += noise.sample(&mut rng);
            samples.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    let image = GrayImage::new(w, h, samples)?;
    let probability = probability_from_mask(&ground_truth, 1.0)?;
    Ok(SyntheticAngiogram {
        image,
        probability,
        ground_truth,
    })
}
