//! Compound libraries from `.smi` and CSV files.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ScreenError;
use crate::chem::{canonical_smiles, parse_smiles, Molecule};
use crate::pdenet::{DatasetRecord, Target};

/// Column roles understood by the CSV reader.
pub const COLUMN_ROLES: [&str; 7] = [
    "id", "name", "smiles", "ic50_nm", "pic50", "class", "target",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LibraryFormat {
    Smi,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LibrarySource {
    pub path: PathBuf,
    pub format: LibraryFormat,
    /// Role → column header, matched case-insensitively.
    pub column_map: BTreeMap<String, String>,
}

impl LibrarySource {
    /// Format from the extension (`.csv` or anything else as SMILES lines)
    /// and the identity column map.
    pub fn from_path(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        let format = match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => LibraryFormat::Csv,
            _ => LibraryFormat::Smi,
        };
        LibrarySource {
            path,
            format,
            column_map: default_column_map(),
        }
    }
}

pub fn default_column_map() -> BTreeMap<String, String> {
    COLUMN_ROLES
        .iter()
        .map(|r| (r.to_string(), r.to_string()))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub read: usize,
    pub parsed: usize,
    pub parse_errors: usize,
    pub duplicates_removed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line in the source file.
    pub line: usize,
    pub msg: String,
}

/// Parsed records with their molecules (largest fragment), in input order.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub records: Vec<DatasetRecord>,
    pub molecules: Vec<Molecule>,
    pub stats: IngestStats,
    pub errors: Vec<RowError>,
}

impl Ingested {
    pub fn named_molecules(&self) -> Vec<(String, Molecule)> {
        self.records
            .iter()
            .zip(&self.molecules)
            .map(|(r, m)| (r.id.clone(), m.clone()))
            .collect()
    }
}

struct RawRow {
    line: usize,
    id: String,
    name: Option<String>,
    smiles: String,
    ic50_nm: Option<String>,
    pic50: Option<String>,
    class: Option<String>,
    target: Option<String>,
    /// Set when the row itself could not be read.
    error: Option<String>,
}

pub fn ingest(source: &LibrarySource, default_target: &Target) -> Result<Ingested, ScreenError> {
    let text = std::fs::read_to_string(&source.path).map_err(|e| ScreenError::Io {
        path: source.path.clone(),
        source: e,
    })?;
    ingest_text(&text, source.format, &source.column_map, default_target)
        .map_err(|e| e.with_path(&source.path))
}

/// Rows that fail to parse are collected in `errors`; later rows with the
/// same desalted canonical SMILES and target as an earlier one are dropped.
pub fn ingest_text(
    text: &str,
    format: LibraryFormat,
    column_map: &BTreeMap<String, String>,
    default_target: &Target,
) -> Result<Ingested, ScreenError> {
    let rows = match format {
        LibraryFormat::Smi => smi_rows(text),
        LibraryFormat::Csv => csv_rows(text, column_map)?,
    };
    let mut out = Ingested {
        records: Vec::new(),
        molecules: Vec::new(),
        stats: IngestStats::default(),
        errors: Vec::new(),
    };
    let mut seen: HashSet<(String, Target)> = HashSet::new();
    for row in rows {
        out.stats.read += 1;
        let line = row.line;
        match build_record(row, default_target) {
            Ok((rec, mol)) => {
                out.stats.parsed += 1;
                if seen.insert((rec.canonical_smiles.clone(), rec.target.clone())) {
                    out.records.push(rec);
                    out.molecules.push(mol);
                } else {
                    log::info!("line {line}: duplicate of an earlier structure, dropped");
                    out.stats.duplicates_removed += 1;
                }
            }
            Err(msg) => {
                log::warn!("line {line}: {msg}");
                out.stats.parse_errors += 1;
                out.errors.push(RowError { line, msg });
            }
        }
    }
    Ok(out)
}

fn build_record(row: RawRow, default_target: &Target) -> Result<(DatasetRecord, Molecule), String> {
    if let Some(e) = row.error {
        return Err(e);
    }
    let mol = parse_smiles(&row.smiles).map_err(|e| format!("{}: {e}", row.smiles))?;
    let mol = mol.largest_fragment();
    let number = |field: &str, v: Option<String>| -> Result<Option<f64>, String> {
        v.map(|s| {
            s.parse::<f64>()
                .map_err(|_| format!("{field} `{s}` is not a number"))
        })
        .transpose()
    };
    let target = match row.target {
        Some(t) => t.parse().map_err(|e: String| format!("target: {e}"))?,
        None => default_target.clone(),
    };
    let rec = DatasetRecord {
        id: row.id,
        name: row.name,
        smiles: row.smiles,
        canonical_smiles: canonical_smiles(&mol),
        ic50_nm: number("ic50_nm", row.ic50_nm)?,
        pic50: number("pic50", row.pic50)?,
        target,
        active: None,
        class: row.class,
    }
    .normalized()
    .map_err(|e| e.to_string())?;
    Ok((rec, mol))
}

/// `SMILES [id [name…]]` per line; blank lines and `#` comments are skipped.
fn smi_rows(text: &str) -> Vec<RawRow> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let smiles = parts.next().expect("non-empty line").to_string();
        let id = parts
            .next()
            .map_or_else(|| format!("L{}", n + 1), str::to_string);
        let rest: Vec<&str> = parts.collect();
        out.push(RawRow {
            line: n + 1,
            id,
            name: (!rest.is_empty()).then(|| rest.join(" ")),
            smiles,
            ic50_nm: None,
            pic50: None,
            class: None,
            target: None,
            error: None,
        });
    }
    out
}

fn csv_rows(text: &str, column_map: &BTreeMap<String, String>) -> Result<Vec<RawRow>, ScreenError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| ScreenError::Input(format!("csv header: {e}")))?
        .clone();
    for role in column_map.keys() {
        if !COLUMN_ROLES.contains(&role.as_str()) {
            return Err(ScreenError::Config(format!("unknown column role `{role}`")));
        }
    }
    let column = |role: &str| -> Option<usize> {
        let name = column_map.get(role)?;
        headers.iter().position(|h| h.eq_ignore_ascii_case(name))
    };
    let smiles_col =
        column("smiles").ok_or_else(|| ScreenError::Input("csv has no smiles column".into()))?;
    let cols: BTreeMap<&str, Option<usize>> =
        COLUMN_ROLES.iter().map(|&r| (r, column(r))).collect();
    let mut out = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let line = rec
            .as_ref()
            .ok()
            .and_then(|r| r.position())
            .map_or(n + 2, |p| p.line() as usize);
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                out.push(RawRow {
                    line,
                    id: format!("row{}", n + 1),
                    name: None,
                    smiles: String::new(),
                    ic50_nm: None,
                    pic50: None,
                    class: None,
                    target: None,
                    error: Some(format!("unreadable row: {e}")),
                });
                continue;
            }
        };
        let field = |role: &str| -> Option<String> {
            cols[role]
                .and_then(|c| rec.get(c))
                .filter(|s| !s.is_empty())
                .map(str::to_string)
        };
        out.push(RawRow {
            line,
            id: field("id").unwrap_or_else(|| format!("row{}", n + 1)),
            name: field("name"),
            smiles: rec.get(smiles_col).unwrap_or("").to_string(),
            ic50_nm: field("ic50_nm"),
            pic50: field("pic50"),
            class: field("class"),
            target: field("target"),
            error: None,
        });
    }
    Ok(out)
}

impl ScreenError {
    fn with_path(self, path: &Path) -> Self {
        match self {
            ScreenError::Input(m) => ScreenError::Input(format!("{}: {m}", path.display())),
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smi(text: &str) -> Ingested {
        ingest_text(text, LibraryFormat::Smi, &default_column_map(), &Target::Xo).unwrap()
    }

    #[test]
    fn malformed_line_is_isolated() {
        let got = smi("CCO ethanol\nC1CC bad\nc1ccccc1 benzene Benzene ring\n");
        assert_eq!(got.records.len(), 2);
        assert_eq!(got.stats.parse_errors, 1);
        assert_eq!(got.errors[0].line, 2);
        assert_eq!(got.records[1].name.as_deref(), Some("Benzene ring"));
    }

    #[test]
    fn duplicates_by_canonical_form() {
        let got = smi("OCC a\nCCO b\nC(O)C c\n[Na+].[O-]CC d\n");
        assert_eq!(got.stats.read, 4);
        assert_eq!(got.stats.duplicates_removed, 2);
        assert_eq!(got.records.len(), 2);
        assert_eq!(got.records[0].id, "a");
    }

    #[test]
    fn csv_pic50_from_ic50() {
        let text = "id,smiles,ic50_nm,target\nx1,CCO,0.59,PDE4\nx2,CCN,,\nx3,CCC,-1,PDE4\n";
        let got =
            ingest_text(text, LibraryFormat::Csv, &default_column_map(), &Target::Xo).unwrap();
        assert_eq!(got.stats.parsed, 2);
        assert_eq!(got.stats.parse_errors, 1);
        assert!((got.records[0].pic50.unwrap() - 9.229).abs() < 1e-3);
        assert_eq!(got.records[0].target, Target::Pde4);
        assert_eq!(got.records[1].target, Target::Xo);
        assert_eq!(got.records[1].pic50, None);
        let missing = ingest_text(
            "id,name\n1,x\n",
            LibraryFormat::Csv,
            &default_column_map(),
            &Target::Xo,
        );
        assert!(matches!(missing, Err(ScreenError::Input(_))));
    }
}
