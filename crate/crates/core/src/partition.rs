//! Two-level 8x8 / 4x4 block partition with ROI / NROI classification.

use std::fmt;

use crate::edges::{count_edges_in_block, EdgeMap};
use crate::error::{Error, Result};
use crate::roi::RoiMask;

pub const BLOCK: usize = 8;
pub const SUB_BLOCK: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockClass {
    Roi,
    Nroi,
}

impl fmt::Display for BlockClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockClass::Roi => "ROI",
            BlockClass::Nroi => "NROI",
        })
    }
}

/// One leaf of the partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockDescriptor {
    pub x: usize,
    pub y: usize,
    pub size: usize,
    pub class: BlockClass,
    pub edge_count: usize,
}

impl BlockDescriptor {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x..self.x + self.size).contains(&x) && (self.y..self.y + self.size).contains(&y)
    }
}

/// Leaf counts by size and class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PartitionSummary {
    pub nroi_8x8: usize,
    pub roi_8x8_split: usize,
    pub nroi_4x4: usize,
    pub roi_4x4: usize,
    pub margin_pixels: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPlan {
    width: usize,
    height: usize,
    leaves: Vec<BlockDescriptor>,
}

impl PartitionPlan {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn leaves(&self) -> &[BlockDescriptor] {
        &self.leaves
    }

    /// Width and height of the region covered by full 8x8 blocks; pixels
    /// beyond it form the untouched margin.
    pub fn covered_extent(&self) -> (usize, usize) {
        (self.width / BLOCK * BLOCK, self.height / BLOCK * BLOCK)
    }

    pub fn margin_pixels(&self) -> usize {
        let (cw, ch) = self.covered_extent();
        self.width * self.height - cw * ch
    }

    /// Fills each leaf's `edge_count` from a whole-image edge map.
    pub fn with_edge_counts(mut self, edges: &EdgeMap) -> Result<Self> {
        if edges.dimensions() != (self.width, self.height) {
            return Err(Error::DimensionMismatch {
                expected: (self.width, self.height),
                actual: edges.dimensions(),
            });
        }
        for leaf in &mut self.leaves {
            leaf.edge_count = count_edges_in_block(edges, leaf.x, leaf.y, leaf.size)?;
        }
        Ok(self)
    }

    pub fn summary(&self) -> PartitionSummary {
        let mut s = PartitionSummary {
            margin_pixels: self.margin_pixels(),
            ..Default::default()
        };
        for leaf in &self.leaves {
            match (leaf.size, leaf.class) {
                (BLOCK, _) => s.nroi_8x8 += 1,
                (_, BlockClass::Nroi) => s.nroi_4x4 += 1,
                (_, BlockClass::Roi) => s.roi_4x4 += 1,
            }
        }
        s.roi_8x8_split = (s.nroi_4x4 + s.roi_4x4) / 4;
        s
    }

    /// Total pixel area of NROI leaves.
    pub fn nroi_area(&self) -> usize {
        self.leaves
            .iter()
            .filter(|l| l.class == BlockClass::Nroi)
            .map(|l| l.size * l.size)
            .sum()
    }

    /// CSV dump with header `x,y,size,class,edge_count`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "size", "class", "edge_count"])?;
        for leaf in &self.leaves {
            w.write_record([
                leaf.x.to_string(),
                leaf.y.to_string(),
                leaf.size.to_string(),
                leaf.class.to_string(),
                leaf.edge_count.to_string(),
            ])?;
        }
        w.flush()
    }
}

/// ROI if any mask bit inside the footprint is set.
pub fn classify_footprint(mask: &RoiMask, x: usize, y: usize, size: usize) -> Result<BlockClass> {
    let (w, h) = mask.dimensions();
    if size == 0 || x + size > w || y + size > h {
        return Err(Error::OutOfBounds {
            x,
            y,
            size,
            width: w,
            height: h,
        });
    }
    let any = (y..y + size).any(|row| mask.bits()[row * w + x..row * w + x + size].iter().any(|&b| b));
    Ok(if any { BlockClass::Roi } else { BlockClass::Nroi })
}

/// NROI 8x8 blocks are leaves; ROI 8x8 blocks are split into four 4x4 leaves
/// classified independently. Partial blocks on the right and bottom are left out.
pub fn partition(width: usize, height: usize, mask: &RoiMask) -> Result<PartitionPlan> {
    if mask.dimensions() != (width, height) {
        return Err(Error::DimensionMismatch {
            expected: (width, height),
            actual: mask.dimensions(),
        });
    }
    let mut leaves = Vec::new();
    for by in (0..height / BLOCK).map(|i| i * BLOCK) {
        for bx in (0..width / BLOCK).map(|i| i * BLOCK) {
            match classify_footprint(mask, bx, by, BLOCK)? {
                BlockClass::Nroi => leaves.push(BlockDescriptor {
                    x: bx,
                    y: by,
                    size: BLOCK,
                    class: BlockClass::Nroi,
                    edge_count: 0,
                }),
                BlockClass::Roi => {
                    for (dx, dy) in [(0, 0), (SUB_BLOCK, 0), (0, SUB_BLOCK), (SUB_BLOCK, SUB_BLOCK)] {
                        let (x, y) = (bx + dx, by + dy);
                        leaves.push(BlockDescriptor {
                            x,
                            y,
                            size: SUB_BLOCK,
                            class: classify_footprint(mask, x, y, SUB_BLOCK)?,
                            edge_count: 0,
                        });
                    }
                }
            }
        }
    }
    Ok(PartitionPlan {
        width,
        height,
        leaves,
    })
}
