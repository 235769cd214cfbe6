use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use cof_core::annotations::{RatingMatrix, Seniority};
use cof_core::evaluation::{run_baseline, run_experiment, BaselineKind, CvProtocol, EvalReport, VideoStats};
use cof_core::features::{extract_video, load_frame_dir, read_features, write_features, ColorConfig, BLOCK_SEMANTIC};
use cof_core::feedback;
use cof_core::model::{read_checkpoint, write_checkpoint, LossConfig};
use cof_core::synthetic::{generate, SyntheticSpec};
use cof_core::training::{train, EpochStats, TrainConfig, VideoSample};
use cof_core::{METRIC_COF, METRIC_OPS, METRIC_OTS};

use crate::error::{at, CliError};
use crate::{AnalyzeArgs, Cli, Command, EvalArgs, ExtractArgs, FeedbackArgs, ModelArgs, SynthArgs, TrainArgs};

type Result<T> = std::result::Result<T, CliError>;

const FEATURE_EXT: &str = "cofx";

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| CliError::usage(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Synth(a) => synth(a, cli.seed),
        Command::Extract(a) => extract(a),
        Command::Train(a) => train_cmd(a, cli.seed),
        Command::Eval(a) => eval(a, cli.seed),
        Command::Analyze(a) => analyze(a),
        Command::Feedback(a) => feedback_cmd(a),
    }
}

fn io_at<T>(path: &Path, r: std::io::Result<T>) -> Result<T> {
    r.map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => io_at(p, fs::create_dir_all(p)),
        _ => Ok(()),
    }
}

/// Writes to `path`, or stdout when absent.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            create_parent(p)?;
            io_at(p, fs::write(p, text))
        }
        None => io_at(Path::new("<stdout>"), std::io::stdout().write_all(text.as_bytes())),
    }
}

fn feature_path(dir: &Path, case: &str) -> PathBuf {
    dir.join(format!("{case}.{FEATURE_EXT}"))
}

/// Subdirectories of `dir`, sorted by name.
fn video_dirs(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in io_at(dir, fs::read_dir(dir))? {
        let path = io_at(dir, entry)?.path();
        if path.is_dir() {
            let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
            out.push((name, path));
        }
    }
    if out.is_empty() {
        return Err(CliError::data(format!("{}: no video directories", dir.display())));
    }
    out.sort();
    Ok(out)
}

fn synth(a: SynthArgs, seed: u64) -> Result<()> {
    let spec = SyntheticSpec {
        cases: a.cases as usize,
        frames_min: a.frames_min,
        frames_max: a.frames_max,
        width: a.size,
        height: a.size,
        seed,
        ..SyntheticSpec::default()
    };
    spec.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let corpus = generate(&spec)?;
    at(a.out.display(), corpus.write(&a.out))?;
    println!("wrote {} cases to {}", corpus.cases.len(), a.out.display());
    Ok(())
}

fn semantic_rows(dir: &Path, case: &str, frames: usize) -> Result<Vec<Vec<f64>>> {
    let path = feature_path(dir, case);
    let seq = at(path.display(), read_features(&path))?;
    let view = seq
        .block_view(BLOCK_SEMANTIC)
        .ok_or_else(|| CliError::data(format!("{}: no `{BLOCK_SEMANTIC}` block", path.display())))?;
    if seq.frames() != frames {
        return Err(CliError::data(format!(
            "{}: {} semantic rows for {frames} frames",
            path.display(),
            seq.frames()
        )));
    }
    Ok(view.rows().into_iter().map(|r| r.to_vec()).collect())
}

fn extract(a: ExtractArgs) -> Result<()> {
    let cfg = ColorConfig {
        bins_per_channel: a.bins as usize,
        ..ColorConfig::default()
    };
    let videos = video_dirs(&a.frames_dir)?;
    io_at(&a.out, fs::create_dir_all(&a.out))?;
    for (case, dir) in &videos {
        let frames = at(dir.display(), load_frame_dir(dir))?;
        let semantic = match &a.semantic_dir {
            Some(sd) => Some(semantic_rows(sd, case, frames.len())?),
            None => None,
        };
        let seq = at(case, extract_video(case, &frames, semantic.as_deref(), &cfg))?;
        let out = feature_path(&a.out, case);
        at(out.display(), write_features(&seq, &out))?;
    }
    println!("wrote {} feature files to {}", videos.len(), a.out.display());
    Ok(())
}

/// Every annotated case paired with its feature file and per-metric ground
/// truth.
fn load_samples(features_dir: &Path, annotations: &Path) -> Result<(RatingMatrix, Vec<VideoSample>)> {
    let rm = at(annotations.display(), RatingMatrix::read_csv(annotations))?;
    let truth: BTreeMap<u32, Vec<f64>> = rm
        .metrics()
        .map(|m| Ok((m, rm.ground_truth(m)?.values)))
        .collect::<cof_core::Result<_>>()?;
    let samples = rm
        .cases()
        .iter()
        .enumerate()
        .map(|(i, case)| {
            let path = feature_path(features_dir, case);
            let features = at(path.display(), read_features(&path))?;
            let labels = truth.iter().map(|(&m, v)| (m, v[i])).collect();
            Ok(VideoSample { features, labels })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rm, samples))
}

fn require_metric(rm: &RatingMatrix, metric: u32, what: &str) -> Result<()> {
    if rm.has_metric(metric) {
        Ok(())
    } else {
        Err(CliError::data(format!(
            "annotations have no scores for {what} metric {metric}"
        )))
    }
}

fn train_config(m: &ModelArgs, target: u32, seed: u64) -> TrainConfig {
    TrainConfig {
        target_metric: target,
        epochs: m.epochs as usize,
        learning_rate: m.lr,
        seed,
        hidden: m.hidden.0.clone(),
        loss: LossConfig {
            lambda_rank: m.lambda_rank,
            ..LossConfig::default()
        },
        ..TrainConfig::default()
    }
}

fn trace_csv(trace: &[EpochStats]) -> String {
    let mut s = String::from("epoch,mean_loss,mean_reg,mean_rank\n");
    for e in trace {
        s.push_str(&format!("{},{},{},{}\n", e.epoch, e.mean_loss, e.mean_reg, e.mean_rank));
    }
    s
}

fn train_cmd(a: TrainArgs, seed: u64) -> Result<()> {
    let (rm, samples) = load_samples(&a.features_dir, &a.annotations)?;
    require_metric(&rm, a.target_metric, "target")?;
    let cfg = train_config(&a.model, a.target_metric, seed);
    let outcome = train(&samples, &cfg)?;
    create_parent(&a.out)?;
    at(a.out.display(), write_checkpoint(&outcome.params, &a.out))?;
    emit(a.trace.as_deref(), &trace_csv(&outcome.trace))
}

fn eval(a: EvalArgs, seed: u64) -> Result<()> {
    let proto = CvProtocol {
        folds: a.protocol.folds,
        repeats: a.protocol.repeats,
        base_seed: seed,
    };
    let targets = if a.eval_targets.is_empty() {
        vec![a.train_target]
    } else {
        a.eval_targets.clone()
    };
    let reports = match &a.baseline {
        Some(kind) => eval_baseline(&a, kind.parse()?, &targets, &proto)?,
        None => {
            let features_dir = a.features_dir.as_deref().expect("required unless baseline");
            let (rm, samples) = load_samples(features_dir, &a.annotations)?;
            require_metric(&rm, a.train_target, "train")?;
            for &t in &targets {
                require_metric(&rm, t, "eval")?;
            }
            let cfg = train_config(&a.model, a.train_target, seed);
            run_experiment(&samples, a.train_target, &targets, &proto, &cfg, a.shuffle_labels)?
        }
    };
    let json = match reports.as_slice() {
        [single] => serde_json::to_string_pretty(single),
        many => serde_json::to_string_pretty(many),
    }
    .map_err(|e| CliError::data(e.to_string()))?;
    emit(a.report.as_deref(), &(json + "\n"))?;
    if a.report.is_some() {
        for r in &reports {
            println!(
                "target {}: mean_plcc {:.4} mean_srocc {:.4} over {} runs",
                r.config.eval_target,
                r.mean_plcc,
                r.mean_srocc,
                r.runs.len()
            );
        }
    }
    Ok(())
}

fn eval_baseline(a: &EvalArgs, kind: BaselineKind, targets: &[u32], proto: &CvProtocol) -> Result<Vec<EvalReport>> {
    let rm = at(a.annotations.display(), RatingMatrix::read_csv(&a.annotations))?;
    let mut truth = BTreeMap::new();
    for &t in targets {
        require_metric(&rm, t, "eval")?;
        truth.insert(t, rm.ground_truth(t)?.values);
    }
    let stats = rm
        .cases()
        .iter()
        .map(|case| match (&a.frames_dir, &a.features_dir) {
            (Some(frames), _) => {
                let dir = frames.join(case);
                let raw = at(dir.display(), load_frame_dir(&dir))?;
                Ok(at(dir.display(), VideoStats::from_frames(&raw))?)
            }
            (None, Some(features)) => {
                let path = feature_path(features, case);
                Ok(VideoStats::from_features(&at(path.display(), read_features(&path))?))
            }
            (None, None) => Err(CliError::usage(
                "the duration baseline needs --frames-dir or --features-dir",
            )),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(run_baseline(rm.cases(), &stats, &truth, kind, proto)?)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let rm = at(a.annotations.display(), RatingMatrix::read_csv(&a.annotations))?;
    let mut s = String::from("metric_id,corr_overall,isc,sjc\n");
    for r in rm.analyze()? {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.metric_id,
            fmt_opt(r.corr_overall),
            r.isc,
            r.sjc
        ));
    }
    emit(Some(&a.out), &s)?;

    if let Some(path) = &a.human_out {
        let mut h = String::from("group,pred_metric,gt_metric,plcc,srocc,degenerate\n");
        for group in [Seniority::Senior, Seniority::Junior] {
            let members = match group {
                Seniority::Senior => rm.seniors(),
                Seniority::Junior => rm.juniors(),
            };
            if members.is_empty() {
                continue;
            }
            for gt in [METRIC_COF, METRIC_OTS, METRIC_OPS] {
                let mut preds = vec![METRIC_COF, gt];
                preds.dedup();
                for pred in preds {
                    if !rm.has_metric(pred) || !rm.has_metric(gt) {
                        continue;
                    }
                    let p = rm.human_performance(pred, gt, group)?;
                    h.push_str(&format!(
                        "{group},{pred},{gt},{},{},{}\n",
                        p.plcc, p.srocc, p.degenerate
                    ));
                }
            }
        }
        emit(Some(path), &h)?;
    }
    Ok(())
}

fn feedback_cmd(a: FeedbackArgs) -> Result<()> {
    let params = at(a.checkpoint.display(), read_checkpoint(&a.checkpoint))?;
    let features = at(a.features.display(), read_features(&a.features))?;
    let trace = at(a.features.display(), feedback::trace(&params, &features))?;
    create_parent(&a.out)?;
    at(a.out.display(), trace.write_csv(&a.out))
}
