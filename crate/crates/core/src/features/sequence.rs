use ndarray::{s, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

pub const BLOCK_RGB: &str = "rgb";
pub const BLOCK_HSV: &str = "hsv";
pub const BLOCK_RED_RATIO: &str = "red_ratio";
pub const BLOCK_SEMANTIC: &str = "semantic";

/// Blocks that hold color histograms and take part in normalization.
pub const COLOR_BLOCKS: [&str; 3] = [BLOCK_RGB, BLOCK_HSV, BLOCK_RED_RATIO];

/// A named, contiguous range of feature columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub name: String,
    pub offset: usize,
    pub width: usize,
}

impl Block {
    pub fn new(name: &str, offset: usize, width: usize) -> Self {
        Block {
            name: name.to_string(),
            offset,
            width,
        }
    }

    pub fn end(&self) -> usize {
        self.offset + self.width
    }
}

/// Color block layout for a histogram with `bins` bins per channel.
pub fn color_layout(bins: usize) -> Vec<Block> {
    vec![
        Block::new(BLOCK_RGB, 0, 3 * bins),
        Block::new(BLOCK_HSV, 3 * bins, 3 * bins),
        Block::new(BLOCK_RED_RATIO, 6 * bins, 2 * bins),
    ]
}

/// The `T x D` per-frame feature matrix of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    video_id: String,
    data: Array2<f64>,
    blocks: Vec<Block>,
}

impl FeatureSequence {
    /// Validates that `T >= 1`, every entry is finite, and the blocks tile
    /// `[0, D)` in order without gaps or overlap.
    pub fn new(video_id: impl Into<String>, data: Array2<f64>, blocks: Vec<Block>) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(Error::invalid("feature sequence needs at least one frame"));
        }
        if let Some((idx, _)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite feature at {idx:?}")));
        }
        check_layout(&blocks, data.ncols())?;
        Ok(FeatureSequence {
            video_id: video_id.into(),
            data,
            blocks,
        })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn set_video_id(&mut self, id: impl Into<String>) {
        self.video_id = id.into();
    }

    /// Number of frames `T`.
    pub fn frames(&self) -> usize {
        self.data.nrows()
    }

    /// Feature dimension `D`.
    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn row(&self, t: usize) -> ArrayView1<'_, f64> {
        self.data.row(t)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Columns of one block, or `None` if the block is absent.
    pub fn block_view(&self, name: &str) -> Option<ArrayView2<'_, f64>> {
        self.block(name).map(|b| self.data.slice(s![.., b.offset..b.end()]))
    }

    pub fn has_color(&self) -> bool {
        COLOR_BLOCKS.iter().any(|n| self.block(n).is_some_and(|b| b.width > 0))
    }
}

fn check_layout(blocks: &[Block], dim: usize) -> Result<()> {
    let mut cursor = 0;
    for b in blocks {
        if b.offset != cursor {
            return Err(Error::invalid(format!(
                "block {:?} starts at {} but previous block ends at {cursor}",
                b.name, b.offset
            )));
        }
        cursor = b.end();
    }
    if cursor != dim {
        return Err(Error::invalid(format!(
            "blocks cover {cursor} columns, sequence has {dim}"
        )));
    }
    for (i, b) in blocks.iter().enumerate() {
        if blocks[..i].iter().any(|o| o.name == b.name) {
            return Err(Error::invalid(format!("duplicate block {:?}", b.name)));
        }
    }
    Ok(())
}

/// Concatenates per-frame color vectors with optional per-frame semantic
/// vectors. The layout always lists a `semantic` block; it has width 0 in
/// color-only mode.
pub fn assemble(
    video_id: &str,
    color: &[Vec<f64>],
    semantic: Option<&[Vec<f64>]>,
    bins: usize,
) -> Result<FeatureSequence> {
    let t = color.len();
    let color_dim = 8 * bins;
    if let Some(i) = color.iter().position(|r| r.len() != color_dim) {
        return Err(Error::invalid(format!(
            "frame {i}: color vector has {} entries, expected {color_dim}",
            color[i].len()
        )));
    }
    let semantic_dim = match semantic {
        Some(rows) => {
            if rows.len() != t {
                return Err(Error::invalid(format!(
                    "{t} color frames but {} semantic frames",
                    rows.len()
                )));
            }
            let d = rows.first().map_or(0, Vec::len);
            if let Some(i) = rows.iter().position(|r| r.len() != d) {
                return Err(Error::invalid(format!("semantic frame {i} has inconsistent width")));
            }
            d
        }
        None => 0,
    };

    let dim = color_dim + semantic_dim;
    let mut data = Array2::zeros((t, dim));
    for (i, mut row) in data.axis_iter_mut(Axis(0)).enumerate() {
        for (dst, &v) in row.iter_mut().zip(&color[i]) {
            *dst = v;
        }
        if let Some(sem) = semantic {
            for (dst, &v) in row.iter_mut().skip(color_dim).zip(&sem[i]) {
                *dst = v;
            }
        }
    }
    let mut blocks = color_layout(bins);
    blocks.push(Block::new(BLOCK_SEMANTIC, color_dim, semantic_dim));
    FeatureSequence::new(video_id, data, blocks)
}

/// Number of leading frames used as the normalization reference:
/// `max(1, floor(0.3 T))`.
pub fn normalization_window(frames: usize) -> usize {
    crate::model::section_floor(0.3, frames).max(1)
}

/// Subtracts, column by column, the mean of the first-30% window from every
/// frame's color features. Other blocks are copied through unchanged.
pub fn normalize_sequence(raw: &FeatureSequence) -> Result<FeatureSequence> {
    let window = normalization_window(raw.frames());
    let mut data = raw.data.clone();
    for block in raw.blocks.iter().filter(|b| COLOR_BLOCKS.contains(&b.name.as_str())) {
        for col in block.offset..block.end() {
            let mut column = data.column_mut(col);
            let mean = column.slice(s![..window]).sum() / window as f64;
            column.mapv_inplace(|v| v - mean);
        }
    }
    FeatureSequence::new(raw.video_id.clone(), data, raw.blocks.clone())
}
