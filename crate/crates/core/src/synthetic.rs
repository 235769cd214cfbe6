//! Synthetic oracle corpus.
//!
//! Each case has a latent bleed level `b_t` that starts near zero and only
//! grows. Frames blend a tissue color toward a blood color in proportion to
//! `b_t`, plus pixel noise. The clearness label is linear in the mean bleed:
//! `y = 5 - 4 * clamp(mean(b) / b_ref, 0, 1)`. Every rater reports `y` for
//! the clearness metric; the two overall metrics get a noisy copy of it.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};
use rayon::prelude::*;

use crate::annotations::{AnnotationRow, RatingMatrix, Seniority};
use crate::error::{Error, Result};
use crate::features::{write_frame, FrameRaster};
use crate::{METRIC_COF, METRIC_OPS, METRIC_OTS};

pub const ANNOTATIONS_FILE: &str = "annotations.csv";
pub const FRAMES_DIR: &str = "frames";

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub cases: usize,
    /// Inclusive range of frame counts.
    pub frames_min: usize,
    pub frames_max: usize,
    pub width: u32,
    pub height: u32,
    pub base_color: [u8; 3],
    pub bleed_color: [u8; 3],
    /// Each case draws a severity uniformly from this range; its expected
    /// final bleed level equals the severity.
    pub severity_min: f64,
    pub severity_max: f64,
    /// Bleed level at which a frame is fully blood-colored and the label
    /// bottoms out.
    pub bleed_ref: f64,
    /// Half-width of the uniform per-pixel noise, in 8-bit levels.
    pub noise: f64,
    /// Standard deviation of the noise added to the overall-skill labels.
    pub overall_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            cases: 60,
            frames_min: 20,
            frames_max: 40,
            width: 64,
            height: 64,
            base_color: [170, 110, 100],
            bleed_color: [225, 25, 20],
            severity_min: 0.05,
            severity_max: 2.0,
            bleed_ref: 1.0,
            noise: 8.0,
            overall_sigma: 0.4,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.cases == 0 {
            return Err(Error::invalid("case count must be positive"));
        }
        if self.frames_min == 0 || self.frames_max < self.frames_min {
            return Err(Error::invalid("frame range must be positive and ordered"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("raster size must be positive"));
        }
        if !(self.severity_min >= 0.0 && self.severity_max >= self.severity_min) {
            return Err(Error::invalid("severity range must be nonnegative and ordered"));
        }
        if self.bleed_ref.is_nan()
            || self.bleed_ref <= 0.0
            || [self.noise, self.overall_sigma].iter().any(|v| v.is_nan() || *v < 0.0)
        {
            return Err(Error::invalid("bleed_ref must be positive, noise terms nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCase {
    pub id: String,
    pub bleed: Vec<f64>,
    pub frames: Vec<FrameRaster>,
    pub label: f64,
    pub ots: f64,
    pub ops: f64,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub cases: Vec<SyntheticCase>,
    pub annotations: RatingMatrix,
}

/// `5 - 4 * clamp(mean(b) / b_ref, 0, 1)`
pub fn label_from_bleed(bleed: &[f64], bleed_ref: f64) -> f64 {
    let mean = bleed.iter().sum::<f64>() / bleed.len().max(1) as f64;
    5.0 - 4.0 * (mean / bleed_ref).clamp(0.0, 1.0)
}

/// One frame for bleed level `b`; `rng` drives the pixel noise.
pub fn render_frame(spec: &SyntheticSpec, b: f64, rng: &mut impl Rng) -> FrameRaster {
    let alpha = (b / spec.bleed_ref).clamp(0.0, 1.0);
    let mean: [f64; 3] =
        std::array::from_fn(|c| spec.base_color[c] as f64 * (1.0 - alpha) + spec.bleed_color[c] as f64 * alpha);
    let n = spec.width as usize * spec.height as usize;
    let mut pixels = Vec::with_capacity(n * 3);
    for _ in 0..n {
        for m in mean {
            let jitter = if spec.noise > 0.0 {
                rng.random_range(-spec.noise..=spec.noise)
            } else {
                0.0
            };
            pixels.push((m + jitter).round().clamp(0.0, 255.0) as u8);
        }
    }
    FrameRaster::new(spec.width, spec.height, pixels).expect("buffer sized from spec")
}

fn generate_case(spec: &SyntheticSpec, index: usize) -> SyntheticCase {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64 + 1);

    let frames = rng.random_range(spec.frames_min..=spec.frames_max);
    let severity = if spec.severity_max > spec.severity_min {
        rng.random_range(spec.severity_min..spec.severity_max)
    } else {
        spec.severity_min
    };
    let step = severity / frames as f64;
    let mut level = 0.0;
    let bleed: Vec<f64> = (0..frames)
        .map(|_| {
            let inc: f64 = Exp1.sample(&mut rng);
            level += step * inc;
            level
        })
        .collect();
    let label = label_from_bleed(&bleed, spec.bleed_ref);

    let overall = |rng: &mut ChaCha8Rng| {
        let noise = if spec.overall_sigma > 0.0 {
            Normal::new(0.0, spec.overall_sigma).unwrap().sample(rng)
        } else {
            0.0
        };
        (label + noise).clamp(1.0, 5.0)
    };
    let ots = overall(&mut rng);
    let ops = overall(&mut rng);
    let rendered = bleed.iter().map(|&b| render_frame(spec, b, &mut rng)).collect();

    SyntheticCase {
        id: format!("case_{index:03}"),
        bleed,
        frames: rendered,
        label,
        ots,
        ops,
    }
}

const RATERS: [(&str, Seniority); 6] = [
    ("s1", Seniority::Senior),
    ("s2", Seniority::Senior),
    ("s3", Seniority::Senior),
    ("j1", Seniority::Junior),
    ("j2", Seniority::Junior),
    ("j3", Seniority::Junior),
];

/// Builds the corpus in memory. Cases are independent and generated in
/// parallel, each from its own RNG stream.
pub fn generate(spec: &SyntheticSpec) -> Result<Corpus> {
    spec.validate()?;
    let cases: Vec<SyntheticCase> = (0..spec.cases)
        .into_par_iter()
        .map(|i| generate_case(spec, i))
        .collect();

    let mut rows = Vec::with_capacity(cases.len() * RATERS.len() * 3);
    for case in &cases {
        for (rater, seniority) in RATERS {
            for (metric, score) in [(METRIC_OTS, case.ots), (METRIC_OPS, case.ops), (METRIC_COF, case.label)] {
                rows.push(AnnotationRow {
                    case_id: case.id.clone(),
                    rater_id: rater.to_string(),
                    seniority,
                    metric_id: metric,
                    score,
                });
            }
        }
    }
    let annotations = RatingMatrix::from_rows(rows)?;
    Ok(Corpus { cases, annotations })
}

impl Corpus {
    /// Writes `annotations.csv` and `frames/<case_id>/<index>.ppm` under
    /// `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir.join(FRAMES_DIR))?;
        self.annotations.write_csv(dir.join(ANNOTATIONS_FILE))?;
        self.cases.par_iter().try_for_each(|case| {
            let case_dir = dir.join(FRAMES_DIR).join(&case.id);
            fs::create_dir_all(&case_dir)?;
            for (t, frame) in case.frames.iter().enumerate() {
                write_frame(frame, case_dir.join(format!("{t:05}.ppm")))?;
            }
            Ok(())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            cases: 6,
            frames_min: 6,
            frames_max: 12,
            width: 8,
            height: 8,
            seed: 3,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn no_bleed_gives_constant_video_and_top_label() {
        let spec = SyntheticSpec {
            severity_min: 0.0,
            severity_max: 0.0,
            noise: 0.0,
            ..small()
        };
        let corpus = generate(&spec).unwrap();
        for case in &corpus.cases {
            assert_eq!(case.label, 5.0);
            assert!(case
                .frames
                .iter()
                .all(|f| *f == FrameRaster::uniform(8, 8, spec.base_color)));
        }
    }

    #[test]
    fn saturated_bleed_gives_bottom_label() {
        assert_eq!(label_from_bleed(&[1.0, 1.5, 3.0], 1.0), 1.0);
        assert_eq!(label_from_bleed(&[0.0, 0.0], 1.0), 5.0);
        assert!((label_from_bleed(&[0.25, 0.75], 1.0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn bleed_is_nondecreasing() {
        let corpus = generate(&SyntheticSpec { cases: 20, ..small() }).unwrap();
        for case in &corpus.cases {
            assert!(case.bleed.windows(2).all(|w| w[1] >= w[0]));
            assert!((6..=12).contains(&case.frames.len()));
        }
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        for (x, y) in a.cases.iter().zip(&b.cases) {
            assert_eq!(x.frames, y.frames);
            assert_eq!(x.label.to_bits(), y.label.to_bits());
        }
        let c = generate(&SyntheticSpec { seed: 4, ..small() }).unwrap();
        assert_ne!(a.cases[0].frames, c.cases[0].frames);
    }

    #[test]
    fn annotations_agree_with_labels() {
        let corpus = generate(&small()).unwrap();
        let gt = corpus.annotations.ground_truth(METRIC_COF).unwrap();
        let labels: Vec<f64> = corpus.cases.iter().map(|c| c.label).collect();
        assert_eq!(gt.values, labels);
        assert_eq!(corpus.annotations.seniors().len(), 3);
        assert_eq!(corpus.annotations.juniors().len(), 3);
        for c in &corpus.cases {
            assert!((1.0..=5.0).contains(&c.ots) && (1.0..=5.0).contains(&c.ops));
        }
    }

    #[test]
    fn writes_frame_dirs_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = generate(&SyntheticSpec { cases: 2, ..small() }).unwrap();
        corpus.write(dir.path()).unwrap();
        let back = RatingMatrix::read_csv(dir.path().join(ANNOTATIONS_FILE)).unwrap();
        assert_eq!(back.rows(), corpus.annotations.rows());
        let frames = crate::features::load_frame_dir(dir.path().join(FRAMES_DIR).join("case_001")).unwrap();
        assert_eq!(frames, corpus.cases[1].frames);
    }
}
