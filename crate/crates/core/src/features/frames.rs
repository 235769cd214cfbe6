//! Frame directories: one raster per frame, named by zero-padded index
//! (`00000.ppm`, `00001.png`, ...).

use std::fs;
use std::path::{Path, PathBuf};

use image::RgbImage;

use super::color::FrameRaster;
use crate::error::{Error, Result};

fn frame_index(path: &Path) -> Option<u64> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    if ext != "png" && ext != "ppm" {
        return None;
    }
    path.file_stem()?.to_str()?.parse().ok()
}

/// Loads every PNG/PPM frame in `dir`, ordered by numeric index.
pub fn load_frame_dir(dir: impl AsRef<Path>) -> Result<Vec<FrameRaster>> {
    let dir = dir.as_ref();
    let mut indexed: Vec<(u64, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if let Some(i) = frame_index(&path) {
            indexed.push((i, path));
        }
    }
    if indexed.is_empty() {
        return Err(Error::invalid(format!("no frames in {}", dir.display())));
    }
    indexed.sort();
    if let Some(w) = indexed.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::invalid(format!("duplicate frame index {}", w[0].0)));
    }
    indexed
        .into_iter()
        .map(|(_, path)| {
            let img = image::open(&path)?.to_rgb8();
            let (w, h) = img.dimensions();
            FrameRaster::new(w, h, img.into_raw())
        })
        .collect()
}

/// Writes a frame as binary PPM.
pub fn write_frame(frame: &FrameRaster, path: impl AsRef<Path>) -> Result<()> {
    let img = RgbImage::from_raw(frame.width(), frame.height(), frame.as_bytes().to_vec())
        .ok_or_else(|| Error::invalid("raster size mismatch"))?;
    img.save_with_format(path, image::ImageFormat::Pnm)?;
    Ok(())
}
