use crate::error::{Error, Result};

/// An 8-bit RGB frame, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameRaster {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl FrameRaster {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(Error::invalid(format!(
                "pixel buffer holds {} bytes, {}x{} RGB needs {expected}",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(FrameRaster { width, height, pixels })
    }

    /// A frame filled with one color.
    pub fn uniform(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let n = width as usize * height as usize;
        let pixels = rgb.iter().copied().cycle().take(n * 3).collect();
        FrameRaster { width, height, pixels }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.pixels.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColorConfig {
    pub bins_per_channel: usize,
    /// Floor applied to the G and B denominators of the red ratios.
    pub red_ratio_epsilon: f64,
    /// Upper end of the red-ratio histogram range; larger ratios land in the
    /// top bin.
    pub red_ratio_clip: f64,
}

impl Default for ColorConfig {
    fn default() -> Self {
        ColorConfig {
            bins_per_channel: 16,
            red_ratio_epsilon: 1e-3,
            red_ratio_clip: 8.0,
        }
    }
}

impl ColorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bins_per_channel < 2 {
            return Err(Error::invalid("bins_per_channel must be >= 2"));
        }
        if [self.red_ratio_epsilon, self.red_ratio_clip]
            .iter()
            .any(|v| v.is_nan() || *v <= 0.0)
        {
            return Err(Error::invalid("red-ratio epsilon and clip must be positive"));
        }
        Ok(())
    }

    /// Width of the full color vector: eight histograms.
    pub fn color_dim(&self) -> usize {
        8 * self.bins_per_channel
    }
}

/// Hexcone RGB to HSV; all three components in [0, 1], hue in [0, 1).
pub fn rgb_to_hsv(rgb: [u8; 3]) -> [f64; 3] {
    let r = rgb[0] as f64 / 255.0;
    let g = rgb[1] as f64 / 255.0;
    let b = rgb[2] as f64 / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;

    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0) / 6.0
    } else if max == g {
        ((b - r) / delta + 2.0) / 6.0
    } else {
        ((r - g) / delta + 4.0) / 6.0
    };
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    let h = if h >= 1.0 { 0.0 } else { h };
    [h, s, max]
}

#[inline]
fn unit_bin(v: f64, bins: usize) -> usize {
    ((v * bins as f64) as usize).min(bins - 1)
}

/// Concatenated normalized histograms of one frame, in the order
/// R, G, B, H, S, V, R/G, R/B. Every histogram sums to 1.
pub fn color_histogram(frame: &FrameRaster, cfg: &ColorConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = frame.pixel_count();
    if n == 0 {
        return Err(Error::invalid("zero-area frame"));
    }
    let bins = cfg.bins_per_channel;
    let mut counts = vec![0u32; 8 * bins];
    let ratio_bin = |num: f64, den: f64| {
        let ratio = (num / den.max(cfg.red_ratio_epsilon)).clamp(0.0, cfg.red_ratio_clip);
        unit_bin(ratio / cfg.red_ratio_clip, bins)
    };

    for px in frame.pixels() {
        for (ch, &v) in px.iter().enumerate() {
            counts[ch * bins + v as usize * bins / 256] += 1;
        }
        let hsv = rgb_to_hsv(px);
        for (ch, &v) in hsv.iter().enumerate() {
            counts[(3 + ch) * bins + unit_bin(v, bins)] += 1;
        }
        let r = px[0] as f64 / 255.0;
        let g = px[1] as f64 / 255.0;
        let b = px[2] as f64 / 255.0;
        counts[6 * bins + ratio_bin(r, g)] += 1;
        counts[7 * bins + ratio_bin(r, b)] += 1;
    }

    let total = n as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const B: usize = 16;

    fn hist(frame: &FrameRaster) -> Vec<f64> {
        color_histogram(frame, &ColorConfig::default()).unwrap()
    }

    fn block(h: &[f64], k: usize) -> &[f64] {
        &h[k * B..(k + 1) * B]
    }

    #[test]
    fn pure_red_frame() {
        let h = hist(&FrameRaster::uniform(4, 3, [255, 0, 0]));
        assert_eq!(h.len(), 128);
        assert_eq!(block(&h, 0)[B - 1], 1.0); // R top
        assert_eq!(block(&h, 1)[0], 1.0); // G bottom
        assert_eq!(block(&h, 4)[B - 1], 1.0); // S top
        assert_eq!(block(&h, 6)[B - 1], 1.0); // R/G clipped
        assert_eq!(block(&h, 7)[B - 1], 1.0); // R/B clipped
    }

    #[test]
    fn gray_frame_ratio_is_one() {
        let h = hist(&FrameRaster::uniform(5, 5, [128, 128, 128]));
        // [0, 8] in 16 bins: 1.0 falls in bin 2 = [1.0, 1.5)
        assert_eq!(block(&h, 6)[2], 1.0);
        assert_eq!(block(&h, 7)[2], 1.0);
        assert_eq!(block(&h, 4)[0], 1.0); // no saturation
    }

    #[test]
    fn half_red_half_green() {
        let mut pixels = Vec::new();
        for i in 0..10 {
            pixels.extend_from_slice(if i < 5 { &[255, 0, 0] } else { &[0, 255, 0] });
        }
        let h = hist(&FrameRaster::new(10, 1, pixels).unwrap());
        let r = block(&h, 0);
        assert_eq!(r[B - 1], 0.5);
        assert_eq!(r[0], 0.5);
        // green hue is 1/3 -> bin 5
        assert_eq!(block(&h, 3)[0], 0.5);
        assert_eq!(block(&h, 3)[5], 0.5);
    }

    #[test]
    fn black_pixels_are_well_defined() {
        let h = hist(&FrameRaster::uniform(2, 2, [0, 0, 0]));
        assert!(h.iter().all(|v| v.is_finite()));
        assert_eq!(block(&h, 6)[0], 1.0);
    }

    #[test]
    fn every_histogram_sums_to_one() {
        let pixels: Vec<u8> = (0..(17 * 9 * 3)).map(|i| ((i * 37 + 11) % 256) as u8).collect();
        let h = hist(&FrameRaster::new(17, 9, pixels).unwrap());
        for k in 0..8 {
            assert!((block(&h, k).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_area_and_bad_buffers() {
        assert!(color_histogram(&FrameRaster::uniform(0, 4, [1, 2, 3]), &ColorConfig::default()).is_err());
        assert!(FrameRaster::new(2, 2, vec![0; 11]).is_err());
        let cfg = ColorConfig {
            bins_per_channel: 1,
            ..ColorConfig::default()
        };
        assert!(color_histogram(&FrameRaster::uniform(1, 1, [0, 0, 0]), &cfg).is_err());
    }

    #[test]
    fn hsv_conversions() {
        assert_eq!(rgb_to_hsv([255, 0, 0]), [0.0, 1.0, 1.0]);
        assert_eq!(rgb_to_hsv([0, 0, 0]), [0.0, 0.0, 0.0]);
        let [h, s, v] = rgb_to_hsv([0, 0, 255]);
        assert!((h - 2.0 / 3.0).abs() < 1e-12 && s == 1.0 && v == 1.0);
        let [h, ..] = rgb_to_hsv([255, 0, 1]);
        assert!(h > 0.99 && h < 1.0);
    }
}
