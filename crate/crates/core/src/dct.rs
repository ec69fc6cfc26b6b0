//! Orthonormal 2-D DCT-II on 4x4 and 8x8 blocks, zigzag scan, coefficient
//! budgets and truncation.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::{quantize_sample, Real};

fn check_size(size: usize) -> Result<()> {
    match size {
        4 | 8 => Ok(()),
        other => Err(Error::UnsupportedBlockSize(other)),
    }
}

/// Row-major `size`x`size` transform coefficients; index `(u, v)` is row `u`
/// (vertical frequency), column `v` (horizontal frequency).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientBlock<T> {
    size: usize,
    coefficients: Vec<T>,
}

impl<T: Real> CoefficientBlock<T> {
    pub fn new(size: usize, coefficients: Vec<T>) -> Result<Self> {
        check_size(size)?;
        if coefficients.len() != size * size {
            return Err(Error::invalid(
                "coefficients",
                format!("{} values for a {size}x{size} block", coefficients.len()),
            ));
        }
        Ok(Self { size, coefficients })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.coefficients[row * self.size + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.coefficients[row * self.size + col] = value;
    }

    pub fn energy(&self) -> T {
        self.coefficients.iter().map(|&c| c * c).sum()
    }
}

/// Precomputed orthonormal DCT-II basis for one block size.
#[derive(Debug, Clone)]
pub struct DctPlan<T> {
    size: usize,
    // basis[k * size + n] = alpha(k) * cos(pi * (2n + 1) * k / (2 * size))
    basis: Vec<T>,
}

impl<T: Real> DctPlan<T> {
    pub fn new(size: usize) -> Result<Self> {
        check_size(size)?;
        let n = size as f64;
        let mut basis = Vec::with_capacity(size * size);
        for k in 0..size {
            let alpha = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            for i in 0..size {
                basis.push(T::of(alpha * (PI * (2 * i + 1) as f64 * k as f64 / (2.0 * n)).cos()));
            }
        }
        Ok(Self { size, basis })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `C X C^T` for a row-major block of real samples.
    pub fn forward(&self, samples: &[T]) -> Result<CoefficientBlock<T>> {
        let n = self.size;
        if samples.len() != n * n {
            return Err(Error::invalid(
                "block",
                format!("{} samples for a {n}x{n} block", samples.len()),
            ));
        }
        // tmp = X C^T, i.e. transform each row.
        let mut tmp = vec![T::zero(); n * n];
        for r in 0..n {
            for v in 0..n {
                tmp[r * n + v] = (0..n).map(|c| samples[r * n + c] * self.basis[v * n + c]).sum();
            }
        }
        let mut out = vec![T::zero(); n * n];
        for u in 0..n {
            for v in 0..n {
                out[u * n + v] = (0..n).map(|r| self.basis[u * n + r] * tmp[r * n + v]).sum();
            }
        }
        Ok(CoefficientBlock {
            size: n,
            coefficients: out,
        })
    }

    /// `C^T Y C` without rounding.
    pub fn inverse_real(&self, coeffs: &CoefficientBlock<T>) -> Result<Vec<T>> {
        let n = self.size;
        if coeffs.size != n {
            return Err(Error::UnsupportedBlockSize(coeffs.size));
        }
        let y = &coeffs.coefficients;
        let mut tmp = vec![T::zero(); n * n];
        for u in 0..n {
            for c in 0..n {
                tmp[u * n + c] = (0..n).map(|v| y[u * n + v] * self.basis[v * n + c]).sum();
            }
        }
        let mut out = vec![T::zero(); n * n];
        for r in 0..n {
            for c in 0..n {
                out[r * n + c] = (0..n).map(|u| self.basis[u * n + r] * tmp[u * n + c]).sum();
            }
        }
        Ok(out)
    }

    /// Inverse transform rounded half away from zero and clamped to [0, 255].
    pub fn inverse(&self, coeffs: &CoefficientBlock<T>) -> Result<Vec<u8>> {
        Ok(self.inverse_real(coeffs)?.into_iter().map(quantize_sample).collect())
    }
}

pub fn forward_dct<T: Real>(samples: &[T], size: usize) -> Result<CoefficientBlock<T>> {
    DctPlan::new(size)?.forward(samples)
}

pub fn inverse_dct_real<T: Real>(coeffs: &CoefficientBlock<T>) -> Result<Vec<T>> {
    DctPlan::new(coeffs.size)?.inverse_real(coeffs)
}

pub fn inverse_dct<T: Real>(coeffs: &CoefficientBlock<T>) -> Result<Vec<u8>> {
    DctPlan::new(coeffs.size)?.inverse(coeffs)
}

/// JPEG zigzag scan: anti-diagonals from DC, alternating direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZigzagOrder {
    size: usize,
    positions: Vec<(usize, usize)>,
}

impl ZigzagOrder {
    pub fn size(&self) -> usize {
        self.size
    }

    /// `(row, col)` pairs in scan order.
    pub fn positions(&self) -> &[(usize, usize)] {
        &self.positions
    }

    /// Row-major indices in scan order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.positions.iter().map(|&(r, c)| r * self.size + c)
    }
}

/// Scan order for any positive side length (the transforms themselves only take 4 and 8).
pub fn zigzag_order(size: usize) -> Result<ZigzagOrder> {
    if size == 0 {
        return Err(Error::UnsupportedBlockSize(0));
    }
    let mut positions = Vec::with_capacity(size * size);
    for diagonal in 0..2 * size - 1 {
        let lo = diagonal.saturating_sub(size - 1);
        let hi = diagonal.min(size - 1);
        if diagonal % 2 == 0 {
            positions.extend((lo..=hi).rev().map(|r| (r, diagonal - r)));
        } else {
            positions.extend((lo..=hi).map(|r| (r, diagonal - r)));
        }
    }
    Ok(ZigzagOrder { size, positions })
}

/// How the kept-coefficient budget combines `gamma0 + n_edge` with the block area.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum BudgetRule {
    /// `min(size^2, gamma0 + n_edge)`: the area acts as a cap.
    #[default]
    Min,
    /// `max(size^2, gamma0 + n_edge)`, which always keeps every coefficient.
    Max,
}

impl fmt::Display for BudgetRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BudgetRule::Min => "min",
            BudgetRule::Max => "max",
        })
    }
}

impl FromStr for BudgetRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "min" => Ok(BudgetRule::Min),
            "max" => Ok(BudgetRule::Max),
            other => Err(Error::invalid("eq1", format!("`{other}` is neither min nor max"))),
        }
    }
}

/// Number of leading zigzag coefficients to keep, always within `1..=size^2`.
pub fn compute_gamma(gamma0: usize, n_edge: usize, size: usize, rule: BudgetRule) -> Result<usize> {
    check_size(size)?;
    if gamma0 < 1 {
        return Err(Error::invalid("gamma0", "must be at least 1"));
    }
    let area = size * size;
    Ok(match rule {
        BudgetRule::Min => gamma0.saturating_add(n_edge).min(area),
        // The literal reading exceeds the block area; truncation then keeps all.
        BudgetRule::Max => area,
    })
}

/// Zeroes every coefficient after the first `gamma` zigzag positions.
pub fn truncate_coefficients<T: Real>(
    coeffs: &CoefficientBlock<T>,
    gamma: usize,
    order: &ZigzagOrder,
) -> Result<CoefficientBlock<T>> {
    if order.size != coeffs.size {
        return Err(Error::invalid(
            "order",
            format!("zigzag for {} applied to a {} block", order.size, coeffs.size),
        ));
    }
    let area = coeffs.size * coeffs.size;
    if !(1..=area).contains(&gamma) {
        return Err(Error::invalid("gamma", format!("{gamma} is outside 1..={area}")));
    }
    let mut out = coeffs.clone();
    for idx in order.indices().skip(gamma) {
        out.coefficients[idx] = T::zero();
    }
    Ok(out)
}

/// Forward transform, truncation and inverse with cached tables for one block size.
#[derive(Debug, Clone)]
pub struct BlockReducer<T> {
    plan: DctPlan<T>,
    order: ZigzagOrder,
}

impl<T: Real> BlockReducer<T> {
    pub fn new(size: usize) -> Result<Self> {
        Ok(Self {
            plan: DctPlan::new(size)?,
            order: zigzag_order(size)?,
        })
    }

    pub fn size(&self) -> usize {
        self.plan.size
    }

    pub fn reduce(&self, block: &[u8], gamma: usize) -> Result<Vec<u8>> {
        let samples: Vec<T> = block.iter().map(|&v| T::of(f64::from(v))).collect();
        let coeffs = self.plan.forward(&samples)?;
        let kept = truncate_coefficients(&coeffs, gamma, &self.order)?;
        self.plan.inverse(&kept)
    }

    /// Pre-rounding reconstruction, for error analysis.
    pub fn reduce_real(&self, block: &[u8], gamma: usize) -> Result<Vec<T>> {
        let samples: Vec<T> = block.iter().map(|&v| T::of(f64::from(v))).collect();
        let coeffs = self.plan.forward(&samples)?;
        let kept = truncate_coefficients(&coeffs, gamma, &self.order)?;
        self.plan.inverse_real(&kept)
    }
}

/// `inverse_dct(truncate_coefficients(forward_dct(block), gamma, zigzag_order(size)))`.
pub fn reduce_block<T: Real>(block: &[u8], size: usize, gamma: usize) -> Result<Vec<u8>> {
    BlockReducer::<T>::new(size)?.reduce(block, gamma)
}
