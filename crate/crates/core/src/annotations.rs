//! Likert rating matrices and the rater-consistency statistics computed over
//! them: correlation with overall skill, inter-senior consistency,
//! senior-junior consistency and individual-rater ("human") performance.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corr::{self, Correlation};
use crate::error::{Error, Result};
use crate::{METRIC_OPS, METRIC_OTS};

pub const LIKERT_MIN: f64 = 1.0;
pub const LIKERT_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Seniority {
    Senior,
    Junior,
}

impl fmt::Display for Seniority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Seniority::Senior => "senior",
            Seniority::Junior => "junior",
        })
    }
}

impl FromStr for Seniority {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "senior" => Ok(Seniority::Senior),
            "junior" => Ok(Seniority::Junior),
            other => Err(Error::Annotation(format!("unknown seniority {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rater {
    pub id: String,
    pub seniority: Seniority,
}

/// One line of the annotation CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRow {
    pub case_id: String,
    pub rater_id: String,
    pub seniority: Seniority,
    pub metric_id: u32,
    pub score: f64,
}

/// Scores indexed by metric, rater and case.
///
/// Cases and raters keep the order in which they first appear in the input.
/// Every (case, rater, metric) cell must be present exactly once.
#[derive(Debug, Clone)]
pub struct RatingMatrix {
    cases: Vec<String>,
    raters: Vec<Rater>,
    // metric -> [rater][case]
    scores: BTreeMap<u32, Vec<Vec<f64>>>,
}

/// Per-case ground truth for one metric: the mean over senior raters.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub metric: u32,
    pub values: Vec<f64>,
}

/// Mean correlation of individual raters against the ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HumanPerformance {
    pub plcc: f64,
    pub srocc: f64,
    /// Number of raters whose vector was constant (contributing 0).
    pub degenerate: usize,
}

/// One row of the `analyze` report.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub metric_id: u32,
    /// Absent for the two overall metrics themselves.
    pub corr_overall: Option<f64>,
    pub isc: f64,
    pub sjc: f64,
}

impl RatingMatrix {
    pub fn from_rows<I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = AnnotationRow>,
    {
        let mut cases: Vec<String> = Vec::new();
        let mut case_index: HashMap<String, usize> = HashMap::new();
        let mut raters: Vec<Rater> = Vec::new();
        let mut rater_index: HashMap<String, usize> = HashMap::new();
        let mut cells: HashMap<(u32, usize, usize), f64> = HashMap::new();
        let mut metric_ids: Vec<u32> = Vec::new();

        for (line, row) in rows.into_iter().enumerate() {
            if !(LIKERT_MIN..=LIKERT_MAX).contains(&row.score) {
                return Err(Error::Annotation(format!(
                    "row {}: score {} outside [1, 5]",
                    line + 1,
                    row.score
                )));
            }
            let c = *case_index.entry(row.case_id.clone()).or_insert_with(|| {
                cases.push(row.case_id.clone());
                cases.len() - 1
            });
            let r = match rater_index.get(&row.rater_id) {
                Some(&r) => {
                    if raters[r].seniority != row.seniority {
                        return Err(Error::Annotation(format!(
                            "row {}: rater {} listed as both senior and junior",
                            line + 1,
                            row.rater_id
                        )));
                    }
                    r
                }
                None => {
                    raters.push(Rater {
                        id: row.rater_id.clone(),
                        seniority: row.seniority,
                    });
                    rater_index.insert(row.rater_id.clone(), raters.len() - 1);
                    raters.len() - 1
                }
            };
            if !metric_ids.contains(&row.metric_id) {
                metric_ids.push(row.metric_id);
            }
            if cells.insert((row.metric_id, r, c), row.score).is_some() {
                return Err(Error::Annotation(format!(
                    "row {}: duplicate score for case {}, rater {}, metric {}",
                    line + 1,
                    row.case_id,
                    row.rater_id,
                    row.metric_id
                )));
            }
        }

        if cases.is_empty() {
            return Err(Error::Annotation("no annotation rows".into()));
        }

        let mut scores = BTreeMap::new();
        for &m in &metric_ids {
            let mut per_rater = Vec::with_capacity(raters.len());
            for (r, rater) in raters.iter().enumerate() {
                let mut per_case = Vec::with_capacity(cases.len());
                for (c, case) in cases.iter().enumerate() {
                    match cells.get(&(m, r, c)) {
                        Some(&s) => per_case.push(s),
                        None => {
                            return Err(Error::Annotation(format!(
                                "missing score for case {case}, rater {}, metric {m}",
                                rater.id
                            )))
                        }
                    }
                }
                per_rater.push(per_case);
            }
            scores.insert(m, per_rater);
        }

        Ok(RatingMatrix { cases, raters, scores })
    }

    /// Parses the annotation CSV
    /// (`case_id,rater_id,seniority,metric_id,score`).
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path.as_ref())?;
        let rows = reader
            .deserialize::<AnnotationRow>()
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::from_rows(rows)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut writer = csv::Writer::from_path(path.as_ref())?;
        for row in self.rows() {
            writer.serialize(row)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// All cells as rows, ordered case-major, then rater, then metric.
    pub fn rows(&self) -> Vec<AnnotationRow> {
        let mut out = Vec::new();
        for (c, case) in self.cases.iter().enumerate() {
            for (r, rater) in self.raters.iter().enumerate() {
                for (&m, per_rater) in &self.scores {
                    out.push(AnnotationRow {
                        case_id: case.clone(),
                        rater_id: rater.id.clone(),
                        seniority: rater.seniority,
                        metric_id: m,
                        score: per_rater[r][c],
                    });
                }
            }
        }
        out
    }

    pub fn cases(&self) -> &[String] {
        &self.cases
    }

    pub fn raters(&self) -> &[Rater] {
        &self.raters
    }

    pub fn metrics(&self) -> impl Iterator<Item = u32> + '_ {
        self.scores.keys().copied()
    }

    pub fn has_metric(&self, metric: u32) -> bool {
        self.scores.contains_key(&metric)
    }

    fn metric(&self, metric: u32) -> Result<&Vec<Vec<f64>>> {
        self.scores
            .get(&metric)
            .ok_or_else(|| Error::invalid(format!("unknown metric {metric}")))
    }

    /// The score vector (one entry per case) of a rater on a metric.
    pub fn scores(&self, rater: usize, metric: u32) -> Result<&[f64]> {
        let per_rater = self.metric(metric)?;
        per_rater
            .get(rater)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::invalid(format!("rater index {rater} out of range")))
    }

    fn group(&self, seniority: Seniority) -> Vec<usize> {
        self.raters
            .iter()
            .enumerate()
            .filter(|(_, r)| r.seniority == seniority)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn seniors(&self) -> Vec<usize> {
        self.group(Seniority::Senior)
    }

    pub fn juniors(&self) -> Vec<usize> {
        self.group(Seniority::Junior)
    }

    fn group_mean(&self, metric: u32, group: &[usize]) -> Result<Vec<f64>> {
        let per_rater = self.metric(metric)?;
        let n = group.len() as f64;
        Ok((0..self.cases.len())
            .map(|c| {
                let first = per_rater[group[0]][c];
                // unanimous cells stay bit-exact instead of picking up rounding
                if group.iter().all(|&r| per_rater[r][c] == first) {
                    first
                } else {
                    group.iter().map(|&r| per_rater[r][c]).sum::<f64>() / n
                }
            })
            .collect())
    }

    /// Per-case mean over the senior raters.
    pub fn ground_truth(&self, metric: u32) -> Result<GroundTruth> {
        self.metric(metric)?;
        let seniors = self.seniors();
        if seniors.is_empty() {
            return Err(Error::invalid("ground truth needs at least one senior"));
        }
        Ok(GroundTruth {
            metric,
            values: self.group_mean(metric, &seniors)?,
        })
    }

    /// Average SROCC, over seniors and the two overall metrics, between a
    /// non-overall metric and each senior's OTS / OPS scores.
    pub fn corr_with_overall(&self, metric: u32) -> Result<f64> {
        if metric == METRIC_OTS || metric == METRIC_OPS {
            return Err(Error::invalid(format!("metric {metric} is itself an overall metric")));
        }
        self.metric(metric)?;
        self.metric(METRIC_OTS)?;
        self.metric(METRIC_OPS)?;
        let seniors = self.seniors();
        if seniors.is_empty() {
            return Err(Error::invalid("no senior raters"));
        }
        let mut total = 0.0;
        for &i in &seniors {
            let own = self.scores(i, metric)?;
            for overall in [METRIC_OTS, METRIC_OPS] {
                total += corr::srocc(own, self.scores(i, overall)?)?.value;
            }
        }
        Ok(total / (2.0 * seniors.len() as f64))
    }

    /// Mean SROCC over ordered pairs of distinct seniors.
    pub fn inter_senior_consistency(&self, metric: u32) -> Result<f64> {
        self.metric(metric)?;
        let seniors = self.seniors();
        if seniors.len() < 2 {
            return Err(Error::invalid("inter-senior consistency needs >= 2 seniors"));
        }
        let mut total = 0.0;
        for &i in &seniors {
            for &j in &seniors {
                if i != j {
                    total += corr::srocc(self.scores(i, metric)?, self.scores(j, metric)?)?.value;
                }
            }
        }
        let s = seniors.len() as f64;
        Ok(total / (s * (s - 1.0)))
    }

    /// SROCC between the senior mean and the junior mean.
    pub fn senior_junior_consistency(&self, metric: u32) -> Result<f64> {
        self.metric(metric)?;
        let seniors = self.seniors();
        let juniors = self.juniors();
        if seniors.is_empty() || juniors.is_empty() {
            return Err(Error::invalid(
                "senior-junior consistency needs both seniors and juniors",
            ));
        }
        let s = self.group_mean(metric, &seniors)?;
        let j = self.group_mean(metric, &juniors)?;
        Ok(corr::srocc(&s, &j)?.value)
    }

    /// Treats each rater of `group` as a predictor: their `pred_metric`
    /// scores are correlated against the ground truth of `gt_metric`, and
    /// the coefficients are averaged over the group.
    ///
    /// Seniors are compared against a ground truth that includes their own
    /// scores.
    pub fn human_performance(&self, pred_metric: u32, gt_metric: u32, group: Seniority) -> Result<HumanPerformance> {
        let members = self.group(group);
        if members.is_empty() {
            return Err(Error::invalid(format!("no {group} raters")));
        }
        let gt = self.ground_truth(gt_metric)?;
        let mut plcc = 0.0;
        let mut srocc = 0.0;
        let mut degenerate = 0;
        for &r in &members {
            let pred = self.scores(r, pred_metric)?;
            let p: Correlation = corr::plcc(pred, &gt.values)?;
            let s = corr::srocc(pred, &gt.values)?;
            if p.degenerate || s.degenerate {
                degenerate += 1;
            }
            plcc += p.value;
            srocc += s.value;
        }
        let n = members.len() as f64;
        Ok(HumanPerformance {
            plcc: plcc / n,
            srocc: srocc / n,
            degenerate,
        })
    }

    /// The three consistency statistics for every metric in the matrix.
    pub fn analyze(&self) -> Result<Vec<MetricReport>> {
        let have_overall = self.has_metric(METRIC_OTS) && self.has_metric(METRIC_OPS);
        self.metrics()
            .map(|m| {
                let corr_overall = if have_overall && m != METRIC_OTS && m != METRIC_OPS {
                    Some(self.corr_with_overall(m)?)
                } else {
                    None
                };
                Ok(MetricReport {
                    metric_id: m,
                    corr_overall,
                    isc: self.inter_senior_consistency(m)?,
                    sjc: self.senior_junior_consistency(m)?,
                })
            })
            .collect()
    }
}
