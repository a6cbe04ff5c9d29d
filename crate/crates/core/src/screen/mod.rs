//! Screening pipeline: ingest, score with models and a hypothesis, gate,
//! cluster the actives, pick representatives and report.

mod ingest;
mod report;

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use ingest::{
    default_column_map, ingest, ingest_text, IngestStats, Ingested, LibraryFormat, LibrarySource,
    RowError, COLUMN_ROLES,
};
pub use report::{
    emit_report, parse_header, write_class_summary, write_report, write_table1, write_table3,
    ReportFormat, ReportHeader,
};

use crate::chem::Molecule;
use crate::descriptors::{admet_flags, compute_descriptors, AdmetFlags, Constants};
use crate::fingerprint::{circular_fingerprint, FingerprintConfig};
use crate::pdenet::{passes_gate, DatasetRecord, SCREEN_GATE_PIC50};
use crate::pharmacophore::Hypothesis;
use crate::simcluster::{
    cross_similarity, distance_matrix, hier_cluster, pick_representatives, string_similarity,
    Linkage, SimilarityError,
};
use crate::PdeNet;

/// Similarity at or above which two compounds count as the same hit.
pub const ROUTE_OVERLAP_CUTOFF: f64 = 0.85;

#[derive(Debug, Error)]
pub enum ScreenError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("input error: {0}")]
    Input(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no compound passed the activity gate")]
    EmptyActiveSet(Box<ScreeningReport>),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenConfig {
    pub clusters: usize,
    pub picks: usize,
    /// Predicted pIC50 must exceed this.
    pub threshold: f64,
    pub linkage: Linkage,
    /// Fingerprint used to cluster the actives.
    pub fingerprint: FingerprintConfig,
    pub seed: u64,
}

impl ScreenConfig {
    pub fn new(clusters: usize, picks: usize) -> Self {
        ScreenConfig {
            clusters,
            picks,
            threshold: SCREEN_GATE_PIC50,
            linkage: Linkage::default(),
            fingerprint: FingerprintConfig::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ScreenError> {
        if self.clusters == 0 {
            return Err(ScreenError::Config("clusters must be at least 1".into()));
        }
        if self.picks > self.clusters {
            return Err(ScreenError::Config(format!(
                "picks ({}) cannot exceed clusters ({})",
                self.picks, self.clusters
            )));
        }
        if !self.threshold.is_finite() {
            return Err(ScreenError::Config("threshold must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub id: String,
    pub name: Option<String>,
    pub canonical_smiles: String,
    pub mw: f64,
    pub formula: String,
    pub fit: Option<f64>,
    /// pIC50 implied by the hypothesis regression.
    pub fit_pic50: Option<f64>,
    pub pic50_per_target: BTreeMap<String, f64>,
    pub cluster_id: Option<usize>,
    pub representative: bool,
    pub admet: AdmetFlags,
    pub active: bool,
}

impl ReportRow {
    /// Highest pIC50 over every supplied predictor.
    pub fn score(&self) -> f64 {
        self.pic50_per_target
            .values()
            .copied()
            .chain(self.fit_pic50)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningReport {
    pub header: ReportHeader,
    /// Sorted by score descending, then id.
    pub rows: Vec<ReportRow>,
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Score, gate, cluster and pick.
///
/// A compound is active when its best pIC50 over all models and the
/// hypothesis regression exceeds `cfg.threshold`. The actives are clustered
/// on `cfg.fingerprint` into `min(clusters, actives)` groups and the medoids
/// of the `min(picks, groups)` largest groups are flagged as
/// representatives. Compounds whose descriptors cannot be computed are
/// logged and left out.
pub fn run_screen(
    records: &[DatasetRecord],
    molecules: &[Molecule],
    models: &[PdeNet],
    hypothesis: Option<&Hypothesis>,
    cfg: &ScreenConfig,
    constants: &Constants,
) -> Result<ScreeningReport, ScreenError> {
    cfg.validate()?;
    if models.is_empty() && hypothesis.is_none() {
        return Err(ScreenError::Config(
            "supply at least one model or a hypothesis".into(),
        ));
    }
    if records.len() != molecules.len() {
        return Err(ScreenError::Input(
            "records and molecules differ in length".into(),
        ));
    }
    let mut labels: Vec<String> = Vec::new();
    for (i, m) in models.iter().enumerate() {
        let label = m
            .target
            .as_ref()
            .map_or_else(|| format!("model{}", i + 1), |t| t.to_string());
        if labels.contains(&label) {
            return Err(ScreenError::Config(format!(
                "two models predict target {label}"
            )));
        }
        labels.push(label);
    }

    let scored: Vec<Option<ReportRow>> = records
        .par_iter()
        .zip(molecules)
        .map(|(rec, mol)| score_row(rec, mol, models, &labels, hypothesis, cfg, constants))
        .collect();
    let skipped = scored.iter().filter(|r| r.is_none()).count();
    // (source index, row) so fingerprints come from the right molecule
    let mut indexed: Vec<(usize, ReportRow)> = scored
        .into_iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|r| (i, r)))
        .collect();
    indexed.sort_by(|(_, a), (_, b)| {
        b.score()
            .total_cmp(&a.score())
            .then_with(|| a.id.cmp(&b.id))
    });
    let (source, mut rows): (Vec<usize>, Vec<ReportRow>) = indexed.into_iter().unzip();

    let active: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].active).collect();
    let k = cfg.clusters.min(active.len());
    let p = cfg.picks.min(k);
    if k < cfg.clusters && !active.is_empty() {
        log::warn!(
            "{} actives, fewer than the {} requested clusters",
            active.len(),
            cfg.clusters
        );
    }
    let mut header = ReportHeader {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        threshold: cfg.threshold,
        clusters: cfg.clusters,
        picks: cfg.picks,
        linkage: cfg.linkage,
        fingerprint: cfg.fingerprint,
        models: labels
            .iter()
            .zip(models)
            .map(|(l, m)| (l.clone(), sha256_hex(&m.to_json())))
            .collect(),
        hypothesis: hypothesis.map(|h| sha256_hex(&h.to_json())),
        input: None,
        library: records.len(),
        scored: rows.len(),
        skipped,
        actives: active.len(),
        clusters_formed: k,
        picks_made: p,
    };
    if active.is_empty() {
        header.clusters_formed = 0;
        header.picks_made = 0;
        return Err(ScreenError::EmptyActiveSet(Box::new(ScreeningReport {
            header,
            rows: Vec::new(),
        })));
    }

    let fps: Vec<_> = active
        .iter()
        .map(|&i| circular_fingerprint(&molecules[source[i]], &cfg.fingerprint))
        .collect();
    let (cluster_labels, picks) = if active.len() == 1 {
        (vec![0], if p == 1 { vec![0] } else { Vec::new() })
    } else {
        let (_, dist) = distance_matrix(&fps)?;
        let assignment = hier_cluster(&dist, cfg.linkage, k)?;
        let picks = pick_representatives(&assignment, p)?;
        (assignment.labels, picks)
    };
    for (slot, &i) in active.iter().enumerate() {
        rows[i].cluster_id = Some(cluster_labels[slot]);
    }
    for slot in picks {
        rows[active[slot]].representative = true;
    }
    Ok(ScreeningReport { header, rows })
}

fn score_row(
    rec: &DatasetRecord,
    mol: &Molecule,
    models: &[PdeNet],
    labels: &[String],
    hypothesis: Option<&Hypothesis>,
    cfg: &ScreenConfig,
    constants: &Constants,
) -> Option<ReportRow> {
    let desc = match compute_descriptors(mol, constants) {
        Ok(d) => d,
        Err(e) => {
            log::warn!("{}: skipped, {e}", rec.id);
            return None;
        }
    };
    let mut pic50_per_target = BTreeMap::new();
    for (label, model) in labels.iter().zip(models) {
        match model.predict_molecule(mol, constants) {
            Ok(p) => {
                pic50_per_target.insert(label.clone(), p);
            }
            Err(e) => {
                log::warn!("{}: skipped, {e}", rec.id);
                return None;
            }
        }
    }
    let fit = hypothesis.map(|h| h.fit_value(mol, constants));
    let fit_pic50 = hypothesis
        .zip(fit)
        .map(|(h, f)| h.fit_regression.predict(f));
    let mut row = ReportRow {
        id: rec.id.clone(),
        name: rec.name.clone(),
        canonical_smiles: rec.canonical_smiles.clone(),
        mw: desc.mw,
        formula: mol.molecular_formula(),
        fit,
        fit_pic50,
        pic50_per_target,
        cluster_id: None,
        representative: false,
        admet: admet_flags(&desc, constants),
        active: false,
    };
    row.active = passes_gate(row.score(), cfg.threshold);
    Some(row)
}

/// Per-compound summary of one set against the other.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteRow {
    pub id: String,
    pub max_tanimoto: f64,
    pub mean_tanimoto: f64,
    /// Compound of the other set with the highest Tanimoto, first on ties.
    pub best_match: String,
    pub max_string: f64,
    pub mean_string: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteComparison {
    /// `tanimoto[i][j]` between `a[i]` and `b[j]`.
    pub tanimoto: Vec<Vec<f64>>,
    /// One row per compound of `a`.
    pub rows: Vec<RouteRow>,
    pub cutoff: f64,
    /// Compounds of `a` whose best Tanimoto reaches the cutoff.
    pub overlap: usize,
}

/// Compare the hits of two screening routes by fingerprint Tanimoto and by
/// canonical-SMILES string similarity.
pub fn compare_routes(
    a: &[(String, Molecule)],
    b: &[(String, Molecule)],
    fingerprint: &FingerprintConfig,
    cutoff: f64,
) -> Result<RouteComparison, ScreenError> {
    if a.is_empty() || b.is_empty() {
        return Err(ScreenError::Input(
            "both compound sets must be non-empty".into(),
        ));
    }
    let fa: Vec<_> = a
        .iter()
        .map(|(_, m)| circular_fingerprint(m, fingerprint))
        .collect();
    let fb: Vec<_> = b
        .iter()
        .map(|(_, m)| circular_fingerprint(m, fingerprint))
        .collect();
    let tanimoto = cross_similarity(&fa, &fb)?;
    let sa: Vec<String> = a.iter().map(|(_, m)| crate::canonical_smiles(m)).collect();
    let sb: Vec<String> = b.iter().map(|(_, m)| crate::canonical_smiles(m)).collect();
    let n = b.len() as f64;
    let rows: Vec<RouteRow> = a
        .iter()
        .enumerate()
        .map(|(i, (id, _))| {
            let t = &tanimoto[i];
            let mut best = 0;
            for j in 1..t.len() {
                if t[j] > t[best] {
                    best = j;
                }
            }
            let s: Vec<f64> = sb.iter().map(|x| string_similarity(&sa[i], x)).collect();
            RouteRow {
                id: id.clone(),
                max_tanimoto: t[best],
                mean_tanimoto: t.iter().sum::<f64>() / n,
                best_match: b[best].0.clone(),
                max_string: s.iter().copied().fold(0.0, f64::max),
                mean_string: s.iter().sum::<f64>() / n,
            }
        })
        .collect();
    let overlap = rows.iter().filter(|r| r.max_tanimoto >= cutoff).count();
    Ok(RouteComparison {
        tanimoto,
        rows,
        cutoff,
        overlap,
    })
}
