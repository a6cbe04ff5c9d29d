//! CSV and Markdown report writers with a provenance header.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use super::{ReportRow, ScreenConfig, ScreenError, ScreeningReport};
use crate::fingerprint::FingerprintConfig;
use crate::pharmacophore::ClassRow;
use crate::simcluster::Linkage;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Md,
}

impl ReportFormat {
    /// `.md` selects Markdown, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("md") => ReportFormat::Md,
            _ => ReportFormat::Csv,
        }
    }
}

/// Everything needed to regenerate a report from the same inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportHeader {
    pub version: String,
    pub seed: u64,
    pub threshold: f64,
    pub clusters: usize,
    pub picks: usize,
    pub linkage: Linkage,
    pub fingerprint: FingerprintConfig,
    /// `(label, sha256 of the model document)` in input order.
    pub models: Vec<(String, String)>,
    pub hypothesis: Option<String>,
    /// `file name sha256=…` of the library, when known.
    pub input: Option<String>,
    pub library: usize,
    pub scored: usize,
    pub skipped: usize,
    pub actives: usize,
    pub clusters_formed: usize,
    pub picks_made: usize,
}

impl ReportHeader {
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("screenforge.version".to_string(), self.version.clone()),
            ("seed".into(), self.seed.to_string()),
            ("threshold".into(), self.threshold.to_string()),
            ("clusters".into(), self.clusters.to_string()),
            ("picks".into(), self.picks.to_string()),
            ("linkage".into(), self.linkage.to_string()),
            ("fingerprint".into(), self.fingerprint.to_string()),
        ];
        for (label, hash) in &self.models {
            out.push((format!("model.{label}"), format!("sha256={hash}")));
        }
        if let Some(h) = &self.hypothesis {
            out.push(("hypothesis".into(), format!("sha256={h}")));
        }
        if let Some(i) = &self.input {
            out.push(("input".into(), i.clone()));
        }
        out.extend([
            ("stage.library".to_string(), self.library.to_string()),
            ("stage.scored".into(), self.scored.to_string()),
            ("stage.skipped".into(), self.skipped.to_string()),
            ("stage.actives".into(), self.actives.to_string()),
            ("stage.clusters".into(), self.clusters_formed.to_string()),
            ("stage.picks".into(), self.picks_made.to_string()),
        ]);
        out
    }

    pub fn config(&self) -> ScreenConfig {
        ScreenConfig {
            clusters: self.clusters,
            picks: self.picks,
            threshold: self.threshold,
            linkage: self.linkage,
            fingerprint: self.fingerprint,
            seed: self.seed,
        }
    }

    /// Screening configuration recorded in a parsed header.
    pub fn config_from_entries(
        map: &BTreeMap<String, String>,
    ) -> Result<ScreenConfig, ScreenError> {
        fn get<'a>(map: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str, ScreenError> {
            map.get(key)
                .map(String::as_str)
                .ok_or_else(|| ScreenError::Input(format!("report header lacks `{key}`")))
        }
        fn num<T: std::str::FromStr>(
            map: &BTreeMap<String, String>,
            key: &str,
        ) -> Result<T, ScreenError> {
            get(map, key)?
                .parse()
                .map_err(|_| ScreenError::Input(format!("report header `{key}` is malformed")))
        }
        Ok(ScreenConfig {
            clusters: num(map, "clusters")?,
            picks: num(map, "picks")?,
            threshold: num(map, "threshold")?,
            linkage: get(map, "linkage")?.parse().map_err(ScreenError::Input)?,
            fingerprint: get(map, "fingerprint")?.parse().map_err(
                |e: crate::fingerprint::FingerprintError| ScreenError::Input(e.to_string()),
            )?,
            seed: num(map, "seed")?,
        })
    }
}

/// Header entries of a CSV (`# key = value`) or Markdown
/// (`<!-- key = value -->`) report.
pub fn parse_header(text: &str) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for line in text.lines() {
        let body = if let Some(rest) = line.strip_prefix("# ") {
            rest
        } else if let Some(rest) = line
            .strip_prefix("<!-- ")
            .and_then(|r| r.strip_suffix(" -->"))
        {
            rest
        } else {
            break;
        };
        if let Some((k, v)) = body.split_once(" = ") {
            out.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    out
}

fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

fn opt2(v: Option<f64>) -> String {
    v.map(fmt2).unwrap_or_default()
}

fn write_table<W: Write>(
    mut out: W,
    format: ReportFormat,
    preamble: &[(String, String)],
    headers: &[String],
    rows: &[Vec<String>],
) -> Result<(), ScreenError> {
    let io = |e: std::io::Error| ScreenError::Input(format!("write failed: {e}"));
    match format {
        ReportFormat::Csv => {
            for (k, v) in preamble {
                writeln!(out, "# {k} = {v}").map_err(io)?;
            }
            let mut w = csv::Writer::from_writer(out);
            let csv_err = |e: csv::Error| ScreenError::Input(format!("write failed: {e}"));
            w.write_record(headers).map_err(csv_err)?;
            for r in rows {
                w.write_record(r).map_err(csv_err)?;
            }
            w.flush().map_err(io)?;
        }
        ReportFormat::Md => {
            for (k, v) in preamble {
                writeln!(out, "<!-- {k} = {v} -->").map_err(io)?;
            }
            if !preamble.is_empty() {
                writeln!(out).map_err(io)?;
            }
            let cell = |s: &str| s.replace('|', "\\|");
            let line = |cells: &[String]| {
                format!(
                    "| {} |",
                    cells
                        .iter()
                        .map(|c| cell(c))
                        .collect::<Vec<_>>()
                        .join(" | ")
                )
            };
            writeln!(out, "{}", line(headers)).map_err(io)?;
            writeln!(out, "|{}", "---|".repeat(headers.len())).map_err(io)?;
            for r in rows {
                writeln!(out, "{}", line(r)).map_err(io)?;
            }
        }
    }
    Ok(())
}

fn report_columns(report: &ScreeningReport) -> Vec<String> {
    let mut cols: Vec<String> = ["id", "name", "canonical_smiles", "formula", "mw"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend(
        report
            .header
            .models
            .iter()
            .map(|(l, _)| format!("pic50_{l}")),
    );
    cols.extend(
        [
            "fit",
            "fit_pic50",
            "active",
            "cluster_id",
            "representative",
            "gi_absorption",
            "bbb_permeant",
            "pgp_substrate_approx",
            "bioavailability_score",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    cols
}

fn report_cells(report: &ScreeningReport, r: &ReportRow) -> Vec<String> {
    let mut cells = vec![
        r.id.clone(),
        r.name.clone().unwrap_or_default(),
        r.canonical_smiles.clone(),
        r.formula.clone(),
        fmt2(r.mw),
    ];
    cells.extend(
        report
            .header
            .models
            .iter()
            .map(|(l, _)| opt2(r.pic50_per_target.get(l).copied())),
    );
    cells.extend([
        opt2(r.fit),
        opt2(r.fit_pic50),
        r.active.to_string(),
        r.cluster_id.map(|c| c.to_string()).unwrap_or_default(),
        r.representative.to_string(),
        r.admet.gi_absorption.to_string(),
        r.admet.bbb_permeant.to_string(),
        r.admet.pgp_substrate_approx.to_string(),
        r.admet.bioavailability_score.to_string(),
    ]);
    cells
}

/// Full report with its provenance header. MW, pIC50 and fit carry two
/// decimals.
pub fn write_report<W: Write>(
    report: &ScreeningReport,
    format: ReportFormat,
    out: W,
) -> Result<(), ScreenError> {
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| report_cells(report, r))
        .collect();
    write_table(
        out,
        format,
        &report.header.entries(),
        &report_columns(report),
        &rows,
    )
}

pub fn emit_report(report: &ScreeningReport, path: &Path) -> Result<(), ScreenError> {
    let mut buf = Vec::new();
    write_report(report, ReportFormat::from_path(path), &mut buf)?;
    std::fs::write(path, buf).map_err(|e| ScreenError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Compound ID, Name, Formula, MW.
pub fn write_table1<W: Write>(
    rows: &[ReportRow],
    format: ReportFormat,
    out: W,
) -> Result<(), ScreenError> {
    let headers: Vec<String> = ["Compound ID", "Name", "Formula", "MW"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.id.clone(),
                r.name.clone().unwrap_or_default(),
                r.formula.clone(),
                fmt2(r.mw),
            ]
        })
        .collect();
    write_table(out, format, &[], &headers, &cells)
}

/// Compound ID and one `<target> pIC50` column per model.
pub fn write_table3<W: Write>(
    report: &ScreeningReport,
    format: ReportFormat,
    out: W,
) -> Result<(), ScreenError> {
    let mut headers = vec!["Compound ID".to_string()];
    headers.extend(
        report
            .header
            .models
            .iter()
            .map(|(l, _)| format!("{l} pIC50")),
    );
    let cells: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            std::iter::once(r.id.clone())
                .chain(
                    report
                        .header
                        .models
                        .iter()
                        .map(|(l, _)| opt2(r.pic50_per_target.get(l).copied())),
                )
                .collect()
        })
        .collect();
    write_table(out, format, &[], &headers, &cells)
}

/// Classify, Type of compound, Representative compounds, Quantity, Degree of fit.
pub fn write_class_summary<W: Write>(
    rows: &[ClassRow],
    format: ReportFormat,
    out: W,
) -> Result<(), ScreenError> {
    let headers: Vec<String> = [
        "Classify",
        "Type of compound",
        "Representative compounds",
        "Quantity",
        "Degree of fit",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.classify.clone(),
                r.class_type.clone(),
                r.representative.clone(),
                r.quantity.to_string(),
                fmt2(r.degree_of_fit),
            ]
        })
        .collect();
    write_table(out, format, &[], &headers, &cells)
}
