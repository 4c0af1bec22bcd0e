//! Benchmark analysis over a long-format results table.
//!
//! Per light level and metric: a Friedman test across conditions and every
//! pairwise Wilcoxon test with Bonferroni adjustment. Per condition and
//! metric: Mann-Whitney U between light levels. Per light level, metric and
//! device: Theil–Sen regression of the device's scores on the baseline
//! condition's. Per condition and light level: covariance ellipses for each
//! configured metric pair.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{
    bonferroni, covariance_ellipse, friedman, mann_whitney_u, median, robust_regression,
    significance_stars, wilcoxon_signed_rank, EllipseGeometry, LineFit, RepeatedMeasures,
    TestReport,
};
use crate::{Error, Result, ARTIFACT_VERSION};

pub const REPORT_FORMAT_VERSION: u32 = 1;

pub const METRIC_LOGMAR: &str = "logMAR";
pub const METRIC_LOGCS: &str = "logCS";
pub const METRIC_TES: &str = "TES";

/// One cell of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub participant: String,
    pub condition: String,
    pub light_level: String,
    pub metric: String,
    pub value: f64,
}

/// Reads a results table with header `participant,condition,light_level,metric,value`.
pub fn read_results_csv<R: Read>(reader: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for row in rdr.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

pub fn write_results_csv<W: Write>(writer: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<results csv>", e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    /// Condition whose scores are the regression predictor.
    pub baseline_condition: String,
    /// Bonferroni family size; defaults to the number of condition pairs.
    pub bonferroni_family: Option<usize>,
    pub alpha: f64,
    pub ellipse_k_sigma: f64,
    pub metric_pairs: Vec<(String, String)>,
    /// Explicit display order; unlisted labels follow alphabetically.
    pub condition_order: Vec<String>,
    pub light_order: Vec<String>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            baseline_condition: "naked-eyes".into(),
            bonferroni_family: None,
            alpha: 0.05,
            ellipse_k_sigma: 1.0,
            metric_pairs: vec![
                (METRIC_LOGMAR.into(), METRIC_LOGCS.into()),
                (METRIC_LOGMAR.into(), METRIC_TES.into()),
            ],
            condition_order: Vec::new(),
            light_order: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanRow {
    pub light_level: String,
    pub metric: String,
    pub subjects: usize,
    pub chi_square: Option<f64>,
    pub df: Option<f64>,
    pub p_value: Option<f64>,
    pub kendall_w: Option<f64>,
    pub significant: bool,
    pub test: Option<TestReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRow {
    pub light_level: String,
    pub metric: String,
    pub condition_a: String,
    pub condition_b: String,
    pub pairs: usize,
    /// min(W+, W−).
    pub statistic: Option<f64>,
    pub z: Option<f64>,
    pub p_raw: Option<f64>,
    pub p_adjusted: Option<f64>,
    pub stars: String,
    pub significant: bool,
    pub test: Option<TestReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightEffectRow {
    pub metric: String,
    pub condition: String,
    pub light_a: String,
    pub light_b: String,
    pub n_a: usize,
    pub n_b: usize,
    pub u: Option<f64>,
    pub p_value: Option<f64>,
    pub stars: String,
    pub significant: bool,
    pub test: Option<TestReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    pub light_level: String,
    pub metric: String,
    pub condition: String,
    pub points: usize,
    pub fit: Option<LineFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipseRow {
    pub condition: String,
    pub light_level: String,
    pub x_metric: String,
    pub y_metric: String,
    pub points: usize,
    pub ellipse: Option<EllipseGeometry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub format_version: u32,
    pub artifact_version: String,
    pub config: AnalysisConfig,
    pub conditions: Vec<String>,
    pub light_levels: Vec<String>,
    pub metrics: Vec<String>,
    pub bonferroni_family: usize,
    pub friedman: Vec<FriedmanRow>,
    pub pairwise: Vec<PairwiseRow>,
    pub light_effects: Vec<LightEffectRow>,
    pub regressions: Vec<RegressionRow>,
    pub ellipses: Vec<EllipseRow>,
    pub warnings: Vec<String>,
}

impl BenchmarkReport {
    pub fn pairwise_for<'a>(&'a self, light: &'a str, metric: &'a str) -> impl Iterator<Item = &'a PairwiseRow> + 'a {
        self.pairwise
            .iter()
            .filter(move |r| r.light_level == light && r.metric == metric)
    }

    /// Friedman table rendered as text, one block per light level.
    pub fn friedman_table(&self) -> String {
        let mut out = String::from("light level | metric | chi2 | df | p-value | W\n");
        for r in &self.friedman {
            let fmt = |v: Option<f64>, d: usize| v.map_or("-".to_string(), |v| format!("{v:.d$}"));
            out += &format!(
                "{} | {} | {} | {} | {} | {}\n",
                r.light_level,
                r.metric,
                fmt(r.chi_square, 1),
                fmt(r.df, 0),
                r.p_value.map_or("-".into(), format_p),
                fmt(r.kendall_w, 3)
            );
        }
        out
    }
}

fn format_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".into()
    } else {
        format!("{p:.3}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolinSeries {
    pub light_level: String,
    pub metric: String,
    pub condition: String,
    /// Sorted values.
    pub values: Vec<f64>,
    /// min, first quartile, median, third quartile, max.
    pub quantiles: [f64; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSeries {
    pub light_level: String,
    pub metric: String,
    pub condition: String,
    pub points: Vec<[f64; 2]>,
    /// Fitted line endpoints over the observed x range.
    pub line: [[f64; 2]; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipseSeries {
    pub condition: String,
    pub light_level: String,
    pub x_metric: String,
    pub y_metric: String,
    pub points: Vec<[f64; 2]>,
    pub outline: Vec<[f64; 2]>,
}

/// Plot-ready data; rendering is left to the consumer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    pub format_version: u32,
    pub violins: Vec<ViolinSeries>,
    pub regressions: Vec<RegressionSeries>,
    pub ellipses: Vec<EllipseSeries>,
}

/// (light, metric, condition) → participant → value
type Cells = BTreeMap<(String, String, String), BTreeMap<String, f64>>;

fn ordered(labels: BTreeSet<String>, preferred: &[String]) -> Vec<String> {
    let mut out: Vec<String> = preferred.iter().filter(|l| labels.contains(*l)).cloned().collect();
    out.extend(labels.into_iter().filter(|l| !preferred.contains(l)));
    out
}

fn metric_order(labels: BTreeSet<String>) -> Vec<String> {
    let canonical = [METRIC_LOGMAR, METRIC_LOGCS, METRIC_TES].map(String::from);
    ordered(labels, &canonical)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Runs the whole pipeline. Results do not depend on row order.
pub fn analyze_benchmark(rows: &[ResultRow], config: &AnalysisConfig) -> Result<(BenchmarkReport, PlotSeries)> {
    if rows.is_empty() {
        return Err(Error::Domain("results table is empty".into()));
    }
    let mut warnings = Vec::new();
    let mut cells: Cells = BTreeMap::new();
    for r in rows {
        if !r.value.is_finite() {
            warnings.push(format!(
                "non-finite {} for {} / {} / {} dropped",
                r.metric, r.participant, r.condition, r.light_level
            ));
            continue;
        }
        let slot = cells
            .entry((r.light_level.clone(), r.metric.clone(), r.condition.clone()))
            .or_default();
        if slot.insert(r.participant.clone(), r.value).is_some() {
            warnings.push(format!(
                "duplicate {} for {} / {} / {}; last value kept",
                r.metric, r.participant, r.condition, r.light_level
            ));
        }
    }
    let conditions = ordered(rows.iter().map(|r| r.condition.clone()).collect(), &config.condition_order);
    let lights = ordered(rows.iter().map(|r| r.light_level.clone()).collect(), &config.light_order);
    let metrics = metric_order(rows.iter().map(|r| r.metric.clone()).collect());
    let k = conditions.len();
    let family = config.bonferroni_family.unwrap_or((k * k.saturating_sub(1) / 2).max(1));
    let empty = BTreeMap::new();
    let cell = |l: &str, m: &str, c: &str| cells.get(&(l.to_string(), m.to_string(), c.to_string())).unwrap_or(&empty);

    let mut friedman_rows = Vec::new();
    let mut pairwise_rows = Vec::new();
    let mut regression_rows = Vec::new();
    let mut violins = Vec::new();
    let mut regression_series = Vec::new();

    for light in &lights {
        for metric in &metrics {
            // Friedman over participants with every condition present.
            let participants: BTreeSet<&String> = conditions.iter().flat_map(|c| cell(light, metric, c).keys()).collect();
            let complete: Vec<&String> = participants
                .iter()
                .copied()
                .filter(|p| conditions.iter().all(|c| cell(light, metric, c).contains_key(*p)))
                .collect();
            let dropped = participants.len() - complete.len();
            if dropped > 0 {
                warnings.push(format!(
                    "friedman {light}/{metric}: {dropped} participant(s) excluded for missing conditions"
                ));
            }
            let rows: Vec<Vec<f64>> = complete
                .iter()
                .map(|p| conditions.iter().map(|c| cell(light, metric, c)[*p]).collect())
                .collect();
            let test = if k < 2 {
                warnings.push(format!("friedman {light}/{metric}: fewer than two conditions"));
                None
            } else {
                match RepeatedMeasures::new(rows, conditions.clone()).and_then(|d| friedman(&d)) {
                    Ok(t) => Some(t),
                    Err(e) => {
                        warnings.push(format!("friedman {light}/{metric}: {e}"));
                        None
                    }
                }
            };
            friedman_rows.push(FriedmanRow {
                light_level: light.clone(),
                metric: metric.clone(),
                subjects: complete.len(),
                chi_square: test.as_ref().map(|t| t.statistic),
                df: test.as_ref().and_then(|t| t.df),
                p_value: test.as_ref().map(|t| t.p_value),
                kendall_w: test.as_ref().and_then(|t| t.effect_size),
                significant: test.as_ref().is_some_and(|t| t.p_value < config.alpha),
                test,
            });

            // Pairwise Wilcoxon.
            for i in 0..k {
                for j in i + 1..k {
                    let (a, b) = (&conditions[i], &conditions[j]);
                    let (ca, cb) = (cell(light, metric, a), cell(light, metric, b));
                    let pairs: Vec<(f64, f64)> = ca.iter().filter_map(|(p, va)| cb.get(p).map(|vb| (*va, *vb))).collect();
                    let test = match wilcoxon_signed_rank(&pairs) {
                        Ok(t) => Some(t),
                        Err(e) => {
                            warnings.push(format!("wilcoxon {light}/{metric} {a} vs {b}: {e}"));
                            None
                        }
                    };
                    let p_adjusted = test
                        .as_ref()
                        .map(|t| bonferroni(&[t.p_value], family).map(|v| v[0]))
                        .transpose()?;
                    pairwise_rows.push(PairwiseRow {
                        light_level: light.clone(),
                        metric: metric.clone(),
                        condition_a: a.clone(),
                        condition_b: b.clone(),
                        pairs: pairs.len(),
                        statistic: test.as_ref().map(|t| t.statistic),
                        z: test.as_ref().and_then(|t| t.z),
                        p_raw: test.as_ref().map(|t| t.p_value),
                        p_adjusted,
                        stars: p_adjusted.map_or("", significance_stars).to_string(),
                        significant: p_adjusted.is_some_and(|p| p < config.alpha),
                        test,
                    });
                }
            }

            // Regression of each device on the baseline.
            let baseline = cell(light, metric, &config.baseline_condition);
            for c in conditions.iter().filter(|c| **c != config.baseline_condition) {
                if baseline.is_empty() {
                    break;
                }
                let points: Vec<[f64; 2]> = baseline
                    .iter()
                    .filter_map(|(p, x)| cell(light, metric, c).get(p).map(|y| [*x, *y]))
                    .collect();
                let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
                let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
                let fit = match robust_regression(&xs, &ys) {
                    Ok(f) => Some(f),
                    Err(e) => {
                        warnings.push(format!("regression {light}/{metric} {c}: {e}"));
                        None
                    }
                };
                if let Some(f) = fit {
                    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    regression_series.push(RegressionSeries {
                        light_level: light.clone(),
                        metric: metric.clone(),
                        condition: c.clone(),
                        points: points.clone(),
                        line: [[lo, f.predict(lo)], [hi, f.predict(hi)]],
                    });
                }
                regression_rows.push(RegressionRow {
                    light_level: light.clone(),
                    metric: metric.clone(),
                    condition: c.clone(),
                    points: points.len(),
                    fit,
                });
            }

            for c in &conditions {
                let mut values: Vec<f64> = cell(light, metric, c).values().copied().collect();
                if values.is_empty() {
                    continue;
                }
                values.sort_by(f64::total_cmp);
                let quantiles = [
                    values[0],
                    quantile(&values, 0.25),
                    median(&values),
                    quantile(&values, 0.75),
                    values[values.len() - 1],
                ];
                violins.push(ViolinSeries {
                    light_level: light.clone(),
                    metric: metric.clone(),
                    condition: c.clone(),
                    values,
                    quantiles,
                });
            }
        }
    }
    if !conditions.contains(&config.baseline_condition) {
        warnings.push(format!(
            "baseline condition {:?} not present; regressions skipped",
            config.baseline_condition
        ));
    }

    // Light-level effect per condition.
    let mut light_rows = Vec::new();
    for metric in &metrics {
        for c in &conditions {
            for i in 0..lights.len() {
                for j in i + 1..lights.len() {
                    let a: Vec<f64> = cell(&lights[i], metric, c).values().copied().collect();
                    let b: Vec<f64> = cell(&lights[j], metric, c).values().copied().collect();
                    let test = match mann_whitney_u(&a, &b) {
                        Ok(t) => Some(t),
                        Err(e) => {
                            warnings.push(format!("mann-whitney {metric} {c} {} vs {}: {e}", lights[i], lights[j]));
                            None
                        }
                    };
                    let p = test.as_ref().map(|t| t.p_value);
                    light_rows.push(LightEffectRow {
                        metric: metric.clone(),
                        condition: c.clone(),
                        light_a: lights[i].clone(),
                        light_b: lights[j].clone(),
                        n_a: a.len(),
                        n_b: b.len(),
                        u: test.as_ref().map(|t| t.statistic),
                        p_value: p,
                        stars: p.map_or("", significance_stars).to_string(),
                        significant: p.is_some_and(|p| p < config.alpha),
                        test,
                    });
                }
            }
        }
    }

    // Covariance ellipses.
    let mut ellipse_rows = Vec::new();
    let mut ellipse_series = Vec::new();
    for c in &conditions {
        for light in &lights {
            for (xm, ym) in &config.metric_pairs {
                let (cx, cy) = (cell(light, xm, c), cell(light, ym, c));
                if cx.is_empty() && cy.is_empty() {
                    continue;
                }
                let points: Vec<[f64; 2]> = cx.iter().filter_map(|(p, x)| cy.get(p).map(|y| [*x, *y])).collect();
                let ellipse = match covariance_ellipse(&points, config.ellipse_k_sigma) {
                    Ok(e) => Some(e),
                    Err(e) => {
                        warnings.push(format!("ellipse {c}/{light} {xm} vs {ym}: {e}"));
                        None
                    }
                };
                if let Some(e) = &ellipse {
                    ellipse_series.push(EllipseSeries {
                        condition: c.clone(),
                        light_level: light.clone(),
                        x_metric: xm.clone(),
                        y_metric: ym.clone(),
                        points: points.clone(),
                        outline: e.outline(64),
                    });
                }
                ellipse_rows.push(EllipseRow {
                    condition: c.clone(),
                    light_level: light.clone(),
                    x_metric: xm.clone(),
                    y_metric: ym.clone(),
                    points: points.len(),
                    ellipse,
                });
            }
        }
    }

    let report = BenchmarkReport {
        format_version: REPORT_FORMAT_VERSION,
        artifact_version: ARTIFACT_VERSION.to_string(),
        config: config.clone(),
        conditions,
        light_levels: lights,
        metrics,
        bonferroni_family: family,
        friedman: friedman_rows,
        pairwise: pairwise_rows,
        light_effects: light_rows,
        regressions: regression_rows,
        ellipses: ellipse_rows,
        warnings,
    };
    let series = PlotSeries {
        format_version: REPORT_FORMAT_VERSION,
        violins,
        regressions: regression_series,
        ellipses: ellipse_series,
    };
    Ok((report, series))
}
