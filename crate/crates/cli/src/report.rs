//! Benchmark report: one CSV row per case, then an `#aggregate` footer line.
//!
//! ```text
//! case_id,S,M,success,wtp_s2c,wtp_c2s,e,diff,elapsed_ms
//! ds-vm-000-m01,4,1,true,1,1,0.02,0,153
//! #aggregate,experiments=1,SR=1,MTTS_ms=153,wtp_s2c=1,wtp_c2s=1,e=0.02,diffmax=0,diffrate=0
//! ```

use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use s0l::metrics::{BatchReport, ComparisonResult};
use serde::{Deserialize, Serialize};

pub const COLUMNS: [&str; 9] = [
    "case_id",
    "S",
    "M",
    "success",
    "wtp_s2c",
    "wtp_c2s",
    "e",
    "diff",
    "elapsed_ms",
];

const FOOTER_TAG: &str = "#aggregate";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub case_id: String,
    #[serde(rename = "S")]
    pub successors: usize,
    #[serde(rename = "M")]
    pub sequences: usize,
    pub success: bool,
    pub wtp_s2c: f64,
    pub wtp_c2s: f64,
    pub e: f64,
    pub diff: usize,
    pub elapsed_ms: u128,
}

impl ReportRow {
    pub fn new(case_id: String, successors: usize, sequences: usize, r: &ComparisonResult<f64>, elapsed: Duration) -> Self {
        ReportRow {
            case_id,
            successors,
            sequences,
            success: r.success,
            wtp_s2c: r.wtp_s2c,
            wtp_c2s: r.wtp_c2s,
            e: r.prob_error,
            diff: r.successor_diff,
            elapsed_ms: elapsed.as_millis(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Footer {
    pub experiments: usize,
    pub success_rate: f64,
    pub mtts_ms: u128,
    pub wtp_s2c: f64,
    pub wtp_c2s: f64,
    pub e: f64,
    pub diff_max: usize,
    pub diff_rate: f64,
}

impl From<&BatchReport<f64>> for Footer {
    fn from(b: &BatchReport<f64>) -> Self {
        Footer {
            experiments: b.experiments,
            success_rate: b.success_rate,
            mtts_ms: b.mtts.as_millis(),
            wtp_s2c: b.mean_wtp_s2c,
            wtp_c2s: b.mean_wtp_c2s,
            e: b.mean_prob_error,
            diff_max: b.diff_max,
            diff_rate: b.diff_rate,
        }
    }
}

pub fn render(rows: &[ReportRow], footer: &Footer) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("in-memory write");
    }
    if rows.is_empty() {
        w.write_record(COLUMNS).expect("in-memory write");
    }
    let mut text = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 report");
    text.push_str(&format!(
        "{FOOTER_TAG},experiments={},SR={},MTTS_ms={},wtp_s2c={},wtp_c2s={},e={},diffmax={},diffrate={}\n",
        footer.experiments,
        footer.success_rate,
        footer.mtts_ms,
        footer.wtp_s2c,
        footer.wtp_c2s,
        footer.e,
        footer.diff_max,
        footer.diff_rate
    ));
    text
}

fn parse_footer(line: &str) -> anyhow::Result<Footer> {
    let mut fields = std::collections::HashMap::new();
    for part in line.trim_end().split(',').skip(1) {
        let (k, v) = part.split_once('=').ok_or_else(|| anyhow!("footer field {part:?} lacks '='"))?;
        fields.insert(k, v);
    }
    fn get<T: std::str::FromStr>(f: &std::collections::HashMap<&str, &str>, key: &str) -> anyhow::Result<T> {
        f.get(key)
            .ok_or_else(|| anyhow!("footer lacks {key}"))?
            .parse()
            .map_err(|_| anyhow!("footer field {key} is malformed"))
    }
    Ok(Footer {
        experiments: get(&fields, "experiments")?,
        success_rate: get(&fields, "SR")?,
        mtts_ms: get(&fields, "MTTS_ms")?,
        wtp_s2c: get(&fields, "wtp_s2c")?,
        wtp_c2s: get(&fields, "wtp_c2s")?,
        e: get(&fields, "e")?,
        diff_max: get(&fields, "diffmax")?,
        diff_rate: get(&fields, "diffrate")?,
    })
}

/// Parses and type-checks a report.
pub fn parse(text: &str) -> anyhow::Result<(Vec<ReportRow>, Footer)> {
    let mut footer = None;
    let mut body = String::new();
    for line in text.lines() {
        if line.starts_with(FOOTER_TAG) {
            footer = Some(parse_footer(line)?);
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != COLUMNS {
        bail!("unexpected columns {header:?}");
    }
    let rows = reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.with_context(|| format!("row {}", i + 1)))
        .collect::<anyhow::Result<Vec<ReportRow>>>()?;
    let footer = footer.ok_or_else(|| anyhow!("report has no {FOOTER_TAG} line"))?;
    if footer.experiments != rows.len() {
        bail!("footer counts {} experiments, report has {}", footer.experiments, rows.len());
    }
    Ok((rows, footer))
}
