//! Compression ratio, ground-truth ROI distortion, and the normalized
//! rate/quality tradeoff used to pick a coefficient budget.

use std::fmt;
use std::io;

use crate::error::{Error, Result};
use crate::image_io::GrayImage;
use crate::roi::RoiMask;
use crate::scalar::Real;

/// `n_o / n_b`.
pub fn compression_ratio<T: Real>(n_o: usize, n_b: usize) -> Result<T> {
    if n_b == 0 {
        return Err(Error::invalid("n_b", "coded size must be positive"));
    }
    Ok(T::of_usize(n_o) / T::of_usize(n_b))
}

fn check_dims(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Mean squared error over the pixels of `roi_gt`.
pub fn roi_mse<T: Real>(original: &GrayImage, processed: &GrayImage, roi_gt: &RoiMask) -> Result<T> {
    check_dims(original.dimensions(), processed.dimensions())?;
    check_dims(original.dimensions(), roi_gt.dimensions())?;
    let mut sum = 0u64;
    let mut count = 0usize;
    for ((&a, &b), &inside) in original.samples().iter().zip(processed.samples()).zip(roi_gt.bits()) {
        if inside {
            let d = i64::from(a) - i64::from(b);
            sum += (d * d) as u64;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    Ok(T::from_u64(sum).expect("sum representable") / T::of_usize(count))
}

/// Peak signal-to-noise ratio, or `Lossless` when there is no error at all.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Psnr<T> {
    Finite(T),
    Lossless,
}

impl<T: Real> Psnr<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Psnr::Finite(v) => Some(v),
            Psnr::Lossless => None,
        }
    }

    pub fn is_lossless(self) -> bool {
        matches!(self, Psnr::Lossless)
    }
}

impl<T: Real> fmt::Display for Psnr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Finite(v) => write!(f, "{v}"),
            Psnr::Lossless => f.write_str("lossless"),
        }
    }
}

/// `10 log10(max_orig^2 / mse)`.
pub fn roi_psnr<T: Real>(mse: T, max_orig: T) -> Result<Psnr<T>> {
    if mse.is_nan() || mse < T::zero() {
        return Err(Error::invalid("mse", format!("{mse} is negative")));
    }
    if max_orig.is_nan() || max_orig <= T::zero() {
        return Err(Error::invalid("max_orig", format!("{max_orig} must be positive")));
    }
    if mse == T::zero() {
        return Ok(Psnr::Lossless);
    }
    Ok(Psnr::Finite(T::of(10.0) * (max_orig * max_orig / mse).log10()))
}

/// Sizes and distortion of one coded image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRecord<T> {
    pub n_o: usize,
    pub n_b: usize,
    pub cr: T,
    /// `None` when the ground truth is empty.
    pub mse: Option<T>,
    pub psnr: Option<Psnr<T>>,
    pub n_g: usize,
}

impl<T: Real> MetricsRecord<T> {
    /// PSNR uses 255 as the peak, the nominal maximum of 8-bit data.
    pub fn evaluate(
        original: &GrayImage,
        processed: &GrayImage,
        roi_gt: &RoiMask,
        n_o: usize,
        n_b: usize,
    ) -> Result<Self> {
        let cr = compression_ratio(n_o, n_b)?;
        let n_g = roi_gt.count();
        let (mse, psnr) = if n_g == 0 {
            check_dims(original.dimensions(), processed.dimensions())?;
            check_dims(original.dimensions(), roi_gt.dimensions())?;
            (None, None)
        } else {
            let mse = roi_mse(original, processed, roi_gt)?;
            (Some(mse), Some(roi_psnr(mse, T::of(255.0))?))
        };
        Ok(Self {
            n_o,
            n_b,
            cr,
            mse,
            psnr,
            n_g,
        })
    }
}

/// Min-max normalization; a constant series maps to all zeros.
pub fn min_max_normalize<T: Real>(values: &[T]) -> Vec<T> {
    let lo = values.iter().copied().fold(T::infinity(), T::min);
    let hi = values.iter().copied().fold(T::neg_infinity(), T::max);
    let span = hi - lo;
    values
        .iter()
        .map(|&v| if span > T::zero() { (v - lo) / span } else { T::zero() })
        .collect()
}

/// One configuration of a sweep before normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint<T> {
    pub gamma0: usize,
    pub cr: T,
    pub psnr: Psnr<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint<T> {
    pub gamma0: usize,
    pub cr: T,
    pub psnr: T,
    pub cr_norm: T,
    pub psnr_norm: T,
    pub combined: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffCurve<T> {
    points: Vec<CurvePoint<T>>,
}

impl<T: Real> TradeoffCurve<T> {
    pub fn points(&self) -> &[CurvePoint<T>] {
        &self.points
    }

    /// Point with the largest combined objective; the first one wins ties.
    pub fn best(&self) -> &CurvePoint<T> {
        let mut best = &self.points[0];
        for p in &self.points[1..] {
            if p.combined > best.combined {
                best = p;
            }
        }
        best
    }

    pub fn point_for(&self, gamma0: usize) -> Option<&CurvePoint<T>> {
        self.points.iter().find(|p| p.gamma0 == gamma0)
    }
}

/// Normalizes both axes over the sweep and sums them. Points with a lossless
/// PSNR are dropped first.
pub fn normalize_curve<T: Real>(points: &[SweepPoint<T>]) -> Result<TradeoffCurve<T>> {
    let finite: Vec<(usize, T, T)> = points
        .iter()
        .filter_map(|p| p.psnr.finite().map(|psnr| (p.gamma0, p.cr, psnr)))
        .collect();
    if finite.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: finite.len(),
        });
    }
    let crs: Vec<T> = finite.iter().map(|p| p.1).collect();
    let psnrs: Vec<T> = finite.iter().map(|p| p.2).collect();
    let cr_norm = min_max_normalize(&crs);
    let psnr_norm = min_max_normalize(&psnrs);
    let points = finite
        .iter()
        .enumerate()
        .map(|(i, &(gamma0, cr, psnr))| CurvePoint {
            gamma0,
            cr,
            psnr,
            cr_norm: cr_norm[i],
            psnr_norm: psnr_norm[i],
            combined: cr_norm[i] + psnr_norm[i],
        })
        .collect();
    Ok(TradeoffCurve { points })
}

/// 1-based ranks; tied values share the average of their ranks.
pub fn average_ranks<T: Real>(values: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![T::zero(); values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = T::of_usize(i + j + 2) / T::of(2.0);
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of the average ranks.
/// Returns `None` when either series is constant.
pub fn spearman_rho<T: Real>(x: &[T], y: &[T]) -> Result<Option<T>> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: (x.len(), 1),
            actual: (y.len(), 1),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("series", "values must be finite"));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = T::of_usize(x.len());
    let mx = rx.iter().copied().sum::<T>() / n;
    let my = ry.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == T::zero() || syy == T::zero() {
        return Ok(None);
    }
    Ok(Some(sxy / (sxx * syy).sqrt()))
}

pub const CSV_HEADER: [&str; 12] = [
    "image_id",
    "gamma0",
    "sigma",
    "edges_enabled",
    "n_o",
    "n_b",
    "cr",
    "mse",
    "psnr",
    "cr_norm",
    "psnr_norm",
    "combined",
];

/// One row of the results table. Optional fields are written as empty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub image_id: String,
    pub gamma0: usize,
    pub sigma: f64,
    pub edges_enabled: bool,
    pub n_o: usize,
    pub n_b: usize,
    pub cr: f64,
    pub mse: Option<f64>,
    pub psnr: Option<Psnr<f64>>,
    pub cr_norm: Option<f64>,
    pub psnr_norm: Option<f64>,
    pub combined: Option<f64>,
}

impl CsvRow {
    fn fields(&self) -> [String; 12] {
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        [
            self.image_id.clone(),
            self.gamma0.to_string(),
            self.sigma.to_string(),
            self.edges_enabled.to_string(),
            self.n_o.to_string(),
            self.n_b.to_string(),
            self.cr.to_string(),
            opt(self.mse),
            self.psnr.map(|p| p.to_string()).unwrap_or_default(),
            opt(self.cr_norm),
            opt(self.psnr_norm),
            opt(self.combined),
        ]
    }
}

pub fn write_csv<W: io::Write>(rows: &[CsvRow], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn img(w: usize, h: usize, v: &[u8]) -> GrayImage {
        GrayImage::new(w, h, v.to_vec()).unwrap()
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(compression_ratio::<f64>(1000, 500).unwrap(), 2.0);
        assert_eq!(compression_ratio::<f64>(777, 777).unwrap(), 1.0);
        assert_eq!(compression_ratio::<f64>(500, 1000).unwrap(), 0.5);
        assert!(compression_ratio::<f64>(5, 0).is_err());
    }

    #[test]
    fn mse_examples() {
        let a = img(3, 1, &[10, 20, 30]);
        let gt = RoiMask::new(3, 1, vec![true, true, false]).unwrap();
        assert_eq!(roi_mse::<f64>(&a, &a, &gt).unwrap(), 0.0);
        let plus_one = img(3, 1, &[11, 21, 200]);
        assert_eq!(roi_mse::<f64>(&a, &plus_one, &gt).unwrap(), 1.0);
        let errs = img(3, 1, &[13, 16, 0]);
        assert_eq!(roi_mse::<f64>(&a, &errs, &gt).unwrap(), 12.5);
        assert_eq!(roi_mse::<f32>(&a, &errs, &gt).unwrap(), 12.5);
        let empty = RoiMask::empty(3, 1).unwrap();
        assert_eq!(roi_mse::<f64>(&a, &a, &empty), Err(Error::EmptyGroundTruth));
        let small = img(1, 1, &[0]);
        assert!(matches!(roi_mse::<f64>(&a, &small, &gt), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn psnr_examples() {
        assert_eq!(roi_psnr(0.0, 255.0).unwrap(), Psnr::Lossless);
        let one = roi_psnr(1.0, 255.0).unwrap().finite().unwrap();
        assert!((one - 20.0 * 255f64.log10()).abs() < 1e-12);
        assert!((one - 48.1308).abs() < 1e-4);
        let zero = roi_psnr(255.0_f64 * 255.0, 255.0).unwrap().finite().unwrap();
        assert!(zero.abs() < 1e-12);
        assert!(roi_psnr(-1.0, 255.0).is_err());
        assert_eq!(Psnr::<f64>::Lossless.to_string(), "lossless");
    }

    #[test]
    fn record_evaluation() {
        let a = img(2, 1, &[10, 20]);
        let b = img(2, 1, &[10, 22]);
        let gt = RoiMask::full(2, 1).unwrap();
        let r = MetricsRecord::<f64>::evaluate(&a, &b, &gt, 300, 200).unwrap();
        assert_eq!(r.cr, 1.5);
        assert_eq!(r.mse, Some(2.0));
        assert_eq!(r.n_g, 2);
        let r = MetricsRecord::<f64>::evaluate(&a, &b, &RoiMask::empty(2, 1).unwrap(), 1, 1).unwrap();
        assert_eq!((r.mse, r.psnr), (None, None));
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(min_max_normalize(&[1.0, 2.0, 3.0]), vec![0.0, 0.5, 1.0]);
        assert_eq!(min_max_normalize(&[4.0, 4.0]), vec![0.0, 0.0]);
        let pts = [
            SweepPoint { gamma0: 1, cr: 3.0_f64, psnr: Psnr::Finite(30.0) },
            SweepPoint { gamma0: 8, cr: 2.0, psnr: Psnr::Finite(36.0) },
            SweepPoint { gamma0: 64, cr: 1.0, psnr: Psnr::Finite(40.0) },
            SweepPoint { gamma0: 65, cr: 0.5, psnr: Psnr::Lossless },
        ];
        let curve = normalize_curve(&pts).unwrap();
        assert_eq!(curve.points().len(), 3);
        let mid = curve.point_for(8).unwrap();
        assert!((mid.cr_norm - 0.5).abs() < 1e-12);
        assert!((mid.psnr_norm - 0.6).abs() < 1e-12);
        assert!((mid.combined - 1.1).abs() < 1e-12);
        assert_eq!(curve.point_for(1).unwrap().combined, 1.0);
        assert_eq!(curve.best().gamma0, 8);
        assert!(normalize_curve(&pts[..1]).is_err());
        assert!(normalize_curve(&pts[3..]).is_err());
    }

    #[test]
    fn combined_is_sum() {
        let pts = [
            SweepPoint { gamma0: 1, cr: 1.0_f64, psnr: Psnr::Finite(30.0) },
            SweepPoint { gamma0: 2, cr: 2.0, psnr: Psnr::Finite(33.0) },
            SweepPoint { gamma0: 3, cr: 3.0, psnr: Psnr::Finite(35.0) },
        ];
        let p = *normalize_curve(&pts).unwrap().point_for(3).unwrap();
        assert_eq!(p.cr_norm, 1.0);
        assert_eq!(p.psnr_norm, 1.0);
        let p = *normalize_curve(&pts).unwrap().point_for(2).unwrap();
        assert!((p.psnr_norm - 0.6).abs() < 1e-12);
        assert!((p.combined - 1.1).abs() < 1e-12);
    }

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman_rho(&x, &[10.0, 20.0, 30.0, 40.0]).unwrap(), Some(1.0));
        assert_eq!(spearman_rho(&x, &[9.0, 5.0, 2.0, 1.0]).unwrap(), Some(-1.0));
        assert_eq!(spearman_rho(&x, &[3.0, 3.0, 3.0, 3.0]).unwrap(), None);
        assert_eq!(average_ranks(&[5.0, 1.0, 5.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        // Oracle: Pearson on hand-computed ranks [1,2,3,4] vs [1,2.5,2.5,4].
        let rho = spearman_rho(&x, &[1.0, 2.0, 2.0, 3.0]).unwrap().unwrap();
        let expected = 4.5 / (5.0f64 * 4.5).sqrt();
        assert!((rho - expected).abs() < 1e-12);
        assert!(spearman_rho(&x, &x[..3]).is_err());
    }

    #[test]
    fn csv_layout() {
        let rows = [CsvRow {
            image_id: "a".into(),
            gamma0: 16,
            sigma: 1.0,
            edges_enabled: true,
            n_o: 10,
            n_b: 4,
            cr: 2.5,
            mse: Some(0.0),
            psnr: Some(Psnr::Lossless),
            cr_norm: None,
            psnr_norm: None,
            combined: None,
        }];
        let mut out = Vec::new();
        write_csv(&rows, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "image_id,gamma0,sigma,edges_enabled,n_o,n_b,cr,mse,psnr,cr_norm,psnr_norm,combined\n\
             a,16,1,true,10,4,2.5,0,lossless,,,\n"
        );
    }

    proptest! {
        #[test]
        fn mse_ignores_pixels_outside_ground_truth(
            orig in proptest::collection::vec(any::<u8>(), 64),
            proc_ in proptest::collection::vec(any::<u8>(), 64),
            gt in proptest::collection::vec(any::<bool>(), 64),
            noise in proptest::collection::vec(any::<u8>(), 64),
        ) {
            prop_assume!(gt.iter().any(|&b| b));
            let o = img(8, 8, &orig);
            let p = img(8, 8, &proc_);
            let mask = RoiMask::new(8, 8, gt.clone()).unwrap();
            let perturbed: Vec<u8> = proc_.iter().zip(&noise).zip(&gt)
                .map(|((&v, &n), &inside)| if inside { v } else { n })
                .collect();
            let q = img(8, 8, &perturbed);
            prop_assert_eq!(roi_mse::<f64>(&o, &p, &mask).unwrap(), roi_mse::<f64>(&o, &q, &mask).unwrap());
        }

        #[test]
        fn psnr_strictly_decreasing(a in 1e-6f64..1e5, b in 1e-6f64..1e5) {
            prop_assume!(a < b);
            let pa = roi_psnr(a, 255.0).unwrap().finite().unwrap();
            let pb = roi_psnr(b, 255.0).unwrap().finite().unwrap();
            prop_assert!(pa > pb);
        }

        #[test]
        fn argmax_invariant_under_affine_rescaling(
            crs in proptest::collection::vec(0.5f64..5.0, 3..10),
            psnrs in proptest::collection::vec(20.0f64..60.0, 10),
            scale in 0.1f64..100.0,
            shift in -50.0f64..50.0,
        ) {
            let pts: Vec<SweepPoint<f64>> = crs.iter().enumerate()
                .map(|(i, &cr)| SweepPoint { gamma0: i + 1, cr, psnr: Psnr::Finite(psnrs[i]) })
                .collect();
            let scaled: Vec<SweepPoint<f64>> = pts.iter()
                .map(|p| SweepPoint { cr: p.cr * scale + shift, ..*p })
                .collect();
            let a = normalize_curve(&pts).unwrap();
            let b = normalize_curve(&scaled).unwrap();
            for (p, q) in a.points().iter().zip(b.points()) {
                prop_assert!((p.combined - q.combined).abs() < 1e-9);
            }
            let best_a = a.best();
            let best_b = b.best();
            prop_assert!(best_a.gamma0 == best_b.gamma0 || (best_a.combined - best_b.combined).abs() < 1e-9);
        }
    }
}
