//! Repeated k-fold cross-validation with PLCC / SROCC reporting.
//!
//! Each repeat draws a seeded permutation of the videos and cuts it into
//! near-equal folds; every fold is the test set of exactly one run. Runs are
//! independent and execute in parallel; the report lists them in run order.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corr;
use crate::error::{Error, Result};
use crate::features::{rgb_to_hsv, FeatureSequence, FrameRaster};
use crate::training::{predict, train, TrainConfig, VideoSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvProtocol {
    pub folds: usize,
    pub repeats: usize,
    pub base_seed: u64,
}

impl Default for CvProtocol {
    fn default() -> Self {
        CvProtocol {
            folds: 3,
            repeats: 15,
            base_seed: 0,
        }
    }
}

impl CvProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 || self.repeats < 1 {
            return Err(Error::invalid("protocol needs folds >= 2 and repeats >= 1"));
        }
        Ok(())
    }

    pub fn runs(&self) -> usize {
        self.folds * self.repeats
    }
}

/// One train/test partition. Indices refer to the video list the splits
/// were made from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub run: usize,
    pub repeat: usize,
    pub fold: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// All `folds x repeats` partitions of `n` videos. Repeat `r` permutes with
/// seed `base_seed + r`; the first `n % folds` folds get one extra video.
pub fn make_splits(n: usize, proto: &CvProtocol) -> Result<Vec<Split>> {
    proto.validate()?;
    if n < proto.folds {
        return Err(Error::invalid(format!("{n} videos cannot fill {} folds", proto.folds)));
    }
    let mut splits = Vec::with_capacity(proto.runs());
    for repeat in 0..proto.repeats {
        let mut rng = ChaCha8Rng::seed_from_u64(proto.base_seed.wrapping_add(repeat as u64));
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);

        let (base, extra) = (n / proto.folds, n % proto.folds);
        let mut start = 0;
        for fold in 0..proto.folds {
            let len = base + usize::from(fold < extra);
            let test = perm[start..start + len].to_vec();
            let train = perm[..start].iter().chain(&perm[start + len..]).copied().collect();
            splits.push(Split {
                run: repeat * proto.folds + fold,
                repeat,
                fold,
                train,
                test,
            });
            start += len;
        }
    }
    Ok(splits)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub plcc: f64,
    pub srocc: f64,
}

/// Settings echoed into a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub method: String,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub train_target: Option<u32>,
    pub eval_target: u32,
    pub shuffle_labels: bool,
    pub train: Option<TrainConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ReportConfig,
    pub runs: Vec<RunRecord>,
    pub mean_plcc: f64,
    pub mean_srocc: f64,
}

/// Test-set predictions for every split, correlated against each target's
/// ground truth. `truth` maps target metric to one value per video.
pub fn cross_validate<F>(
    ids: &[String],
    truth: &BTreeMap<u32, Vec<f64>>,
    proto: &CvProtocol,
    config: impl Fn(u32) -> ReportConfig,
    predict_split: F,
) -> Result<Vec<EvalReport>>
where
    F: Fn(&Split) -> Result<Vec<f64>> + Sync,
{
    for (metric, values) in truth {
        if values.len() != ids.len() {
            return Err(Error::invalid(format!(
                "ground truth for metric {metric} has {} values for {} videos",
                values.len(),
                ids.len()
            )));
        }
    }
    let splits = make_splits(ids.len(), proto)?;
    let predictions = splits
        .par_iter()
        .map(|s| {
            let p = predict_split(s)?;
            if p.len() != s.test.len() {
                return Err(Error::invalid("predictor returned the wrong number of scores"));
            }
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;

    truth
        .iter()
        .map(|(&metric, values)| {
            let runs = splits
                .iter()
                .zip(&predictions)
                .map(|(split, pred)| {
                    let gt: Vec<f64> = split.test.iter().map(|&i| values[i]).collect();
                    Ok(RunRecord {
                        run: split.run,
                        train_ids: split.train.iter().map(|&i| ids[i].clone()).collect(),
                        test_ids: split.test.iter().map(|&i| ids[i].clone()).collect(),
                        plcc: corr::plcc(pred, &gt)?.value,
                        srocc: corr::srocc(pred, &gt)?.value,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let n = runs.len() as f64;
            Ok(EvalReport {
                config: config(metric),
                mean_plcc: runs.iter().map(|r| r.plcc).sum::<f64>() / n,
                mean_srocc: runs.iter().map(|r| r.srocc).sum::<f64>() / n,
                runs,
            })
        })
        .collect()
}

fn ground_truth(samples: &[VideoSample], metrics: &[u32]) -> Result<BTreeMap<u32, Vec<f64>>> {
    metrics
        .iter()
        .map(|&m| Ok((m, samples.iter().map(|s| s.label(m)).collect::<Result<Vec<_>>>()?)))
        .collect()
}

/// Trains on each split's training videos with `train_target` as the label
/// and scores the test videos. With `shuffle_labels`, the training labels of
/// every run are permuted (a null control).
///
/// With-proxy evaluation is `train_target = 14` scored against the overall
/// metrics; no-proxy evaluation trains on the overall metric itself.
pub fn run_experiment(
    samples: &[VideoSample],
    train_target: u32,
    eval_targets: &[u32],
    proto: &CvProtocol,
    cfg: &TrainConfig,
    shuffle_labels: bool,
) -> Result<Vec<EvalReport>> {
    cfg.validate()?;
    let ids: Vec<String> = samples.iter().map(|s| s.id().to_string()).collect();
    let truth = ground_truth(samples, eval_targets)?;
    ground_truth(samples, &[train_target])?;

    let cfg = TrainConfig {
        target_metric: train_target,
        ..cfg.clone()
    };
    let report_config = |eval_target| ReportConfig {
        method: "model".into(),
        folds: proto.folds,
        repeats: proto.repeats,
        seed: proto.base_seed,
        train_target: Some(train_target),
        eval_target,
        shuffle_labels,
        train: Some(cfg.clone()),
    };

    cross_validate(&ids, &truth, proto, report_config, |split| {
        let mut train_set: Vec<VideoSample> = split.train.iter().map(|&i| samples[i].clone()).collect();
        if shuffle_labels {
            let mut labels: Vec<f64> = train_set.iter().map(|s| s.label(train_target)).collect::<Result<_>>()?;
            let mut rng = ChaCha8Rng::seed_from_u64(proto.base_seed);
            rng.set_stream(split.run as u64 + 1);
            labels.shuffle(&mut rng);
            for (s, y) in train_set.iter_mut().zip(labels) {
                s.labels.insert(train_target, y);
            }
        }
        let run_cfg = TrainConfig {
            seed: cfg.seed.wrapping_add(split.run as u64),
            ..cfg.clone()
        };
        let model = train(&train_set, &run_cfg)?;
        let test_set: Vec<VideoSample> = split.test.iter().map(|&i| samples[i].clone()).collect();
        predict(&model.params, &test_set)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    MeanRed,
    MeanSaturation,
    Duration,
}

impl BaselineKind {
    pub fn needs_color(self) -> bool {
        !matches!(self, BaselineKind::Duration)
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::MeanRed => "mean_red",
            BaselineKind::MeanSaturation => "mean_saturation",
            BaselineKind::Duration => "duration",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean_red" => Ok(BaselineKind::MeanRed),
            "mean_saturation" => Ok(BaselineKind::MeanSaturation),
            "duration" => Ok(BaselineKind::Duration),
            other => Err(Error::invalid(format!("unknown baseline {other:?}"))),
        }
    }
}

/// Whole-video statistics used by the training-free baselines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VideoStats {
    pub frames: usize,
    /// Mean red channel, 0..=255.
    pub mean_red: Option<f64>,
    /// Mean HSV saturation, 0..=1.
    pub mean_saturation: Option<f64>,
}

impl VideoStats {
    /// Pixel means over all frames.
    pub fn from_frames(frames: &[FrameRaster]) -> Result<Self> {
        let pixels: usize = frames.iter().map(FrameRaster::pixel_count).sum();
        if pixels == 0 {
            return Err(Error::invalid("video has no pixels"));
        }
        let mut red: u64 = 0;
        let mut saturation = 0.0;
        for px in frames.iter().flat_map(FrameRaster::pixels) {
            red += px[0] as u64;
            saturation += rgb_to_hsv(px)[1];
        }
        Ok(VideoStats {
            frames: frames.len(),
            mean_red: Some(red as f64 / pixels as f64),
            mean_saturation: Some(saturation / pixels as f64),
        })
    }

    /// Duration only; color baselines are unavailable.
    pub fn from_features(seq: &FeatureSequence) -> Self {
        VideoStats {
            frames: seq.frames(),
            mean_red: None,
            mean_saturation: None,
        }
    }
}

/// The baseline statistic itself, used directly as the prediction.
pub fn baseline_predict(kind: BaselineKind, stats: &VideoStats) -> Result<f64> {
    let missing = || Error::invalid(format!("baseline {kind} needs color frames"));
    match kind {
        BaselineKind::MeanRed => stats.mean_red.ok_or_else(missing),
        BaselineKind::MeanSaturation => stats.mean_saturation.ok_or_else(missing),
        BaselineKind::Duration => Ok(stats.frames as f64),
    }
}

/// Cross-validated baseline: no training, the statistic of each test video
/// is its prediction.
pub fn run_baseline(
    ids: &[String],
    stats: &[VideoStats],
    truth: &BTreeMap<u32, Vec<f64>>,
    kind: BaselineKind,
    proto: &CvProtocol,
) -> Result<Vec<EvalReport>> {
    if stats.len() != ids.len() {
        return Err(Error::invalid("one statistics entry per video required"));
    }
    let report_config = |eval_target| ReportConfig {
        method: format!("baseline:{kind}"),
        folds: proto.folds,
        repeats: proto.repeats,
        seed: proto.base_seed,
        train_target: None,
        eval_target,
        shuffle_labels: false,
        train: None,
    };
    cross_validate(ids, truth, proto, report_config, |split| {
        split.test.iter().map(|&i| baseline_predict(kind, &stats[i])).collect()
    })
}
