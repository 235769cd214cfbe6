//! Per-frame feature extraction and the `T x D` feature sequence consumed by
//! the model.

mod color;
mod format;
mod frames;
mod sequence;

pub use color::{color_histogram, rgb_to_hsv, ColorConfig, FrameRaster};
pub use format::{read_features, write_features, FEATURE_MAGIC, FEATURE_VERSION};
pub use frames::{load_frame_dir, write_frame};
pub use sequence::{
    assemble, color_layout, normalization_window, normalize_sequence, Block, FeatureSequence, BLOCK_HSV,
    BLOCK_RED_RATIO, BLOCK_RGB, BLOCK_SEMANTIC, COLOR_BLOCKS,
};

use rayon::prelude::*;

use crate::error::Result;

/// Histograms every frame in parallel, assembles them with optional semantic
/// rows and applies the first-30% normalization to the color blocks.
pub fn extract_video(
    video_id: &str,
    frames: &[FrameRaster],
    semantic: Option<&[Vec<f64>]>,
    cfg: &ColorConfig,
) -> Result<FeatureSequence> {
    let color = frames
        .par_iter()
        .map(|f| color_histogram(f, cfg))
        .collect::<Result<Vec<_>>>()?;
    let raw = assemble(video_id, &color, semantic, cfg.bins_per_channel)?;
    normalize_sequence(&raw)
}
