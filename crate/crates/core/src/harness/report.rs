use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{FoldMetrics, MetricsReport, Scores};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

pub const CSV_HEADER: &str =
    "model,fold,accuracy,precision_cn,precision_ad,recall_cn,recall_ad,f1_cn,f1_ad,zero_division";

const MD_TITLES: [&str; 7] = [
    "Acc",
    "Precision CN",
    "Precision AD",
    "Recall CN",
    "Recall AD",
    "F1 CN",
    "F1 AD",
];

fn rows(report: &MetricsReport) -> Vec<(String, Scores, String)> {
    let mut out: Vec<(String, Scores, String)> = report
        .folds
        .iter()
        .enumerate()
        .map(|(i, f)| (i.to_string(), f.scores, f.zero_division.join(";")))
        .collect();
    out.push(("mean".into(), report.mean, String::new()));
    out.push(("sd".into(), report.sd, String::new()));
    out
}

/// One row per fold, then `mean` and `sd` rows, for each model in order.
/// Numbers are printed with six decimals.
pub fn render_report(reports: &[MetricsReport], format: ReportFormat) -> Vec<u8> {
    let mut s = String::new();
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(Vec::new());
            w.write_record(CSV_HEADER.split(','))
                .expect("in-memory write");
            for r in reports {
                for (fold, scores, flags) in rows(r) {
                    let mut rec = vec![r.model.clone(), fold];
                    rec.extend(scores.to_array().iter().map(|v| format!("{v:.6}")));
                    rec.push(flags);
                    w.write_record(&rec).expect("in-memory write");
                }
            }
            return w.into_inner().expect("in-memory flush");
        }
        ReportFormat::Markdown => {
            s.push_str(
                "Per-fold scores; `sd` is the population standard deviation across folds.\n\n",
            );
            let _ = writeln!(
                s,
                "| Model | Fold | {} | Zero division |",
                MD_TITLES.join(" | ")
            );
            let _ = writeln!(s, "|---|---|{}---|", "---:|".repeat(7));
            for r in reports {
                for (fold, scores, flags) in rows(r) {
                    let vals: Vec<String> = scores
                        .to_array()
                        .iter()
                        .map(|v| format!("{v:.6}"))
                        .collect();
                    let _ = writeln!(
                        s,
                        "| {} | {} | {} | {} |",
                        r.model,
                        fold,
                        vals.join(" | "),
                        flags
                    );
                }
            }
        }
    }
    s.into_bytes()
}

/// Parses CSV written by [`render_report`].
pub fn parse_report_csv(bytes: &[u8]) -> Result<Vec<MetricsReport>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes);
    let header = rdr
        .headers()
        .map_err(|e| Error::parse("report", "line 1", e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != CSV_HEADER {
        return Err(invalid!(
            "report header is {header:?}, expected {CSV_HEADER:?}"
        ));
    }
    let mut reports: Vec<MetricsReport> = Vec::new();
    let mut pending: Option<(String, Vec<FoldMetrics>, Option<Scores>)> = None;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse("report", format!("line {line}"), e.to_string()))?;
        if rec.len() != 10 {
            return Err(Error::parse(
                "report",
                format!("line {line}"),
                "expected 10 columns",
            ));
        }
        let mut vals = [0.0; 7];
        for (j, v) in vals.iter_mut().enumerate() {
            *v = rec[j + 2].parse().map_err(|_| {
                Error::parse(
                    "report",
                    format!("line {line}"),
                    format!("bad number {:?}", &rec[j + 2]),
                )
            })?;
        }
        let scores = Scores::from_array(vals);
        let model = rec[0].to_string();
        let (cur_model, folds, mean) =
            pending.get_or_insert_with(|| (model.clone(), Vec::new(), None));
        if *cur_model != model {
            return Err(invalid!(
                "line {line}: model {model} starts before {cur_model} has mean/sd rows"
            ));
        }
        match &rec[1] {
            "mean" => *mean = Some(scores),
            "sd" => {
                let mean = mean.ok_or_else(|| invalid!("line {line}: sd row without mean row"))?;
                let folds = std::mem::take(folds);
                reports.push(MetricsReport {
                    model,
                    folds,
                    mean,
                    sd: scores,
                });
                pending = None;
            }
            idx => {
                if idx.parse::<usize>().ok() != Some(folds.len()) {
                    return Err(invalid!("line {line}: fold {idx:?} out of sequence"));
                }
                let zero_division = if rec[9].is_empty() {
                    Vec::new()
                } else {
                    rec[9].split(';').map(str::to_string).collect()
                };
                folds.push(FoldMetrics {
                    scores,
                    zero_division,
                });
            }
        }
    }
    if let Some((model, ..)) = pending {
        return Err(invalid!("report for {model} is missing its mean/sd rows"));
    }
    Ok(reports)
}
