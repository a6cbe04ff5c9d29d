use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use screenforge::descriptors::{admet_flags, compute_descriptors, Constants};
use screenforge::fingerprint::{circular_fingerprint, FingerprintConfig};
use screenforge::pdenet::{
    fit_pdenet, predict_and_gate, FeatureConfig, PdeNetError, Target, TrainConfig,
    SCREEN_GATE_PIC50,
};
use screenforge::pharmacophore::{
    class_summary, screen_by_fit, train_hypothesis, Hypothesis, HypothesisParams, PharmError,
    TrainingCompound,
};
use screenforge::screen::{
    compare_routes, emit_report, ingest, run_screen, write_class_summary, IngestStats, Ingested,
    LibrarySource, ReportFormat, ScreenConfig, ScreenError, ROUTE_OVERLAP_CUTOFF,
};
use screenforge::simcluster::{distance_matrix, hier_cluster, string_similarity, Linkage};
use screenforge::PdeNet;

const EXIT_EMPTY_ACTIVES: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_CONFIG: u8 = 4;

#[derive(Parser)]
#[command(name = "screenforge", version, about = "Virtual-screening toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Tanimoto,
    String,
}

#[derive(Subcommand)]
enum Command {
    /// Canonical SMILES, formula and MW per record.
    Parse { file: PathBuf },
    /// Descriptors and ADME flags per record.
    Descriptors {
        file: PathBuf,
        #[arg(long)]
        admet_constants: Option<PathBuf>,
    },
    /// Circular fingerprints in hex form.
    Fingerprint {
        file: PathBuf,
        #[arg(long, default_value_t = 2)]
        radius: u32,
        #[arg(long, default_value_t = 2048)]
        nbits: usize,
        #[arg(long, env = "SCREENFORGE_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Similarity matrix between two libraries.
    Similarity {
        file_a: PathBuf,
        file_b: PathBuf,
        #[arg(long, value_enum, default_value_t = Metric::Tanimoto)]
        metric: Metric,
    },
    /// Hierarchical clustering of one library.
    Cluster {
        file: PathBuf,
        #[arg(long)]
        clusters: usize,
        #[arg(long, default_value = "average")]
        linkage: Linkage,
    },
    /// Train a pIC50 network for one target.
    Train {
        csv: PathBuf,
        #[arg(long)]
        target: Target,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 32)]
        batch: usize,
        #[arg(long, value_delimiter = ',', default_value = "256,64")]
        hidden: Vec<usize>,
        #[arg(long, env = "SCREENFORGE_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict pIC50 and gate.
    Predict {
        file: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = SCREEN_GATE_PIC50)]
        threshold: f64,
    },
    /// Pharmacophore hypotheses.
    Pharm {
        #[command(subcommand)]
        command: PharmCommand,
    },
    /// Full screening funnel.
    Screen {
        file: PathBuf,
        #[arg(long)]
        model: Vec<PathBuf>,
        #[arg(long)]
        hypothesis: Option<PathBuf>,
        #[arg(long)]
        clusters: usize,
        #[arg(long)]
        picks: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = SCREEN_GATE_PIC50)]
        threshold: f64,
        #[arg(long, default_value = "average")]
        linkage: Linkage,
        #[arg(long, env = "SCREENFORGE_SEED", default_value_t = 0, hide = true)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum PharmCommand {
    /// Generate, score and select a hypothesis.
    Train {
        csv: PathBuf,
        #[arg(long, default_value_t = 255)]
        max_candidates: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank a library by fit.
    Screen {
        file: PathBuf,
        #[arg(long)]
        hypothesis: PathBuf,
        /// Class summary destination, written when records carry a class.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn input_err(e: impl Display) -> Failure {
    Failure {
        code: EXIT_INPUT,
        err: anyhow!("{e}"),
    }
}

fn config_err(e: impl Display) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        err: anyhow!("{e}"),
    }
}

impl From<ScreenError> for Failure {
    fn from(e: ScreenError) -> Self {
        match e {
            ScreenError::Config(_) => config_err(e),
            ScreenError::EmptyActiveSet(_) => Failure {
                code: EXIT_EMPTY_ACTIVES,
                err: anyhow!("{e}"),
            },
            _ => input_err(e),
        }
    }
}

impl From<PdeNetError> for Failure {
    fn from(e: PdeNetError) -> Self {
        match e {
            PdeNetError::InvalidConfig(_) => config_err(e),
            _ => input_err(e),
        }
    }
}

impl From<PharmError> for Failure {
    fn from(e: PharmError) -> Self {
        match e {
            PharmError::InvalidParams(_) => config_err(e),
            _ => input_err(e),
        }
    }
}

type CliResult = Result<(), Failure>;

fn load_library(path: &Path, target: &Target) -> Result<Ingested, Failure> {
    let lib = ingest(&LibrarySource::from_path(path), target)?;
    report_stats(path, &lib.stats);
    Ok(lib)
}

fn report_stats(path: &Path, s: &IngestStats) {
    eprintln!(
        "{}: read {}, parsed {}, parse errors {}, duplicates removed {}",
        path.display(),
        s.read,
        s.parsed,
        s.parse_errors,
        s.duplicates_removed
    );
}

fn default_target() -> Target {
    Target::Xo
}

fn csv_out() -> csv::Writer<std::io::StdoutLock<'static>> {
    csv::Writer::from_writer(std::io::stdout().lock())
}

fn put<W: Write>(w: &mut csv::Writer<W>, rec: &[String]) -> CliResult {
    w.write_record(rec).map_err(input_err)
}

fn cmd_parse(file: &Path) -> CliResult {
    let lib = load_library(file, &default_target())?;
    let mut w = csv_out();
    put(
        &mut w,
        &[
            "id".into(),
            "canonical_smiles".into(),
            "formula".into(),
            "mw".into(),
        ],
    )?;
    for (r, m) in lib.records.iter().zip(&lib.molecules) {
        put(
            &mut w,
            &[
                r.id.clone(),
                r.canonical_smiles.clone(),
                m.molecular_formula(),
                format!("{:.2}", m.average_mass()),
            ],
        )?;
    }
    w.flush().map_err(input_err)
}

fn cmd_descriptors(file: &Path, constants_path: Option<&Path>) -> CliResult {
    let constants = match constants_path {
        Some(p) => Constants::with_override(p).map_err(config_err)?,
        None => Constants::default(),
    };
    let lib = load_library(file, &default_target())?;
    let mut w = csv_out();
    let head = [
        "id",
        "mw",
        "tpsa",
        "wlogp",
        "hbd",
        "hba",
        "rotatable_bonds",
        "heavy_atoms",
        "gi_absorption",
        "bbb_permeant",
        "pgp_substrate_approx",
        "bioavailability_score",
    ];
    put(&mut w, &head.map(String::from))?;
    for (r, m) in lib.records.iter().zip(&lib.molecules) {
        let d = match compute_descriptors(m, &constants) {
            Ok(d) => d,
            Err(e) => {
                log::warn!("{}: skipped, {e}", r.id);
                continue;
            }
        };
        let a = admet_flags(&d, &constants);
        put(
            &mut w,
            &[
                r.id.clone(),
                format!("{:.2}", d.mw),
                format!("{:.2}", d.tpsa),
                format!("{:.2}", d.wlogp),
                d.hbd.to_string(),
                d.hba.to_string(),
                d.rotatable_bonds.to_string(),
                d.heavy_atoms.to_string(),
                a.gi_absorption.to_string(),
                a.bbb_permeant.to_string(),
                a.pgp_substrate_approx.to_string(),
                a.bioavailability_score.to_string(),
            ],
        )?;
    }
    w.flush().map_err(input_err)
}

fn cmd_fingerprint(file: &Path, radius: u32, nbits: usize, seed: u64) -> CliResult {
    let cfg = FingerprintConfig::new(radius, nbits, seed).map_err(config_err)?;
    let lib = load_library(file, &default_target())?;
    let mut w = csv_out();
    put(&mut w, &["id".into(), "fingerprint".into()])?;
    for (r, m) in lib.records.iter().zip(&lib.molecules) {
        put(
            &mut w,
            &[r.id.clone(), circular_fingerprint(m, &cfg).to_hex()],
        )?;
    }
    w.flush().map_err(input_err)
}

fn cmd_similarity(a: &Path, b: &Path, metric: Metric) -> CliResult {
    let la = load_library(a, &default_target())?;
    let lb = load_library(b, &default_target())?;
    let (na, nb) = (la.named_molecules(), lb.named_molecules());
    let cfg = FingerprintConfig::default();
    let matrix: Vec<Vec<f64>> = match metric {
        Metric::Tanimoto => {
            let cmp = compare_routes(&na, &nb, &cfg, ROUTE_OVERLAP_CUTOFF)?;
            eprintln!(
                "overlap at Tanimoto >= {}: {} of {}",
                cmp.cutoff,
                cmp.overlap,
                cmp.rows.len()
            );
            cmp.tanimoto
        }
        Metric::String => la
            .records
            .iter()
            .map(|x| {
                lb.records
                    .iter()
                    .map(|y| string_similarity(&x.canonical_smiles, &y.canonical_smiles))
                    .collect()
            })
            .collect(),
    };
    let mut w = csv_out();
    let mut head = vec!["id".to_string()];
    head.extend(lb.records.iter().map(|r| r.id.clone()));
    put(&mut w, &head)?;
    for (r, row) in la.records.iter().zip(&matrix) {
        let mut rec = vec![r.id.clone()];
        rec.extend(row.iter().map(|v| format!("{v:.4}")));
        put(&mut w, &rec)?;
    }
    w.flush().map_err(input_err)
}

fn cmd_cluster(file: &Path, clusters: usize, linkage: Linkage) -> CliResult {
    let lib = load_library(file, &default_target())?;
    let cfg = FingerprintConfig::default();
    let fps: Vec<_> = lib
        .molecules
        .iter()
        .map(|m| circular_fingerprint(m, &cfg))
        .collect();
    let (labels, reps) = if fps.len() == 1 && clusters == 1 {
        (vec![0], vec![0])
    } else {
        let (_, dist) = distance_matrix(&fps).map_err(input_err)?;
        let a = hier_cluster(&dist, linkage, clusters).map_err(config_err)?;
        (a.labels, a.representatives)
    };
    let mut w = csv_out();
    put(&mut w, &["id".into(), "cluster_id".into(), "medoid".into()])?;
    for (i, r) in lib.records.iter().enumerate() {
        put(
            &mut w,
            &[
                r.id.clone(),
                labels[i].to_string(),
                reps.contains(&i).to_string(),
            ],
        )?;
    }
    w.flush().map_err(input_err)
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    csv: &Path,
    target: Target,
    epochs: usize,
    lr: f64,
    batch: usize,
    hidden: Vec<usize>,
    seed: u64,
    out: &Path,
) -> CliResult {
    let cfg = TrainConfig {
        learning_rate: lr,
        batch_size: batch,
        epochs,
        hidden_layers: hidden,
        seed,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    let lib = load_library(csv, &target)?;
    let outcome = fit_pdenet::<f64>(
        &lib.records,
        &target,
        &cfg,
        &FeatureConfig::default(),
        &Constants::default(),
    )?;
    outcome.model.save(out).map_err(input_err)?;
    let [tr, te, ho] = outcome.split_sizes;
    eprintln!(
        "split train {tr}, test {te}, holdout {ho}; skipped {}",
        outcome.skipped.len()
    );
    if let (Some(first), Some(last)) = (
        outcome.curve.train_mse.first(),
        outcome.curve.train_mse.last(),
    ) {
        eprintln!("train MSE {first:.4} -> {last:.4}");
    }
    eprintln!(
        "test MSE {:.4}, R2 {:.4}",
        outcome.test.mse, outcome.test.r2
    );
    Ok(())
}

fn cmd_predict(file: &Path, model: &Path, threshold: f64) -> CliResult {
    if !threshold.is_finite() {
        return Err(config_err("threshold must be finite"));
    }
    let model = PdeNet::load(model).map_err(config_err)?;
    let lib = load_library(file, &default_target())?;
    let preds = predict_and_gate(
        &model,
        &lib.named_molecules(),
        threshold,
        &Constants::default(),
    );
    let mut w = csv_out();
    put(&mut w, &["id".into(), "pic50".into(), "active".into()])?;
    for p in preds {
        put(
            &mut w,
            &[p.id, format!("{:.2}", p.pic50), p.active.to_string()],
        )?;
    }
    w.flush().map_err(input_err)
}

fn cmd_pharm_train(csv: &Path, max_candidates: usize, out: &Path) -> CliResult {
    let lib = load_library(csv, &default_target())?;
    let compounds: Vec<TrainingCompound> = lib
        .records
        .iter()
        .zip(&lib.molecules)
        .filter_map(|(r, m)| {
            r.pic50.map(|p| TrainingCompound {
                id: r.id.clone(),
                mol: m.clone(),
                pic50: p,
            })
        })
        .collect();
    let params = HypothesisParams {
        max_candidates,
        ..HypothesisParams::default()
    };
    let h = train_hypothesis(&compounds, &params, &Constants::default())?;
    h.save(out).map_err(input_err)?;
    let kinds: Vec<String> = h.features.iter().map(|f| f.kind.to_string()).collect();
    eprintln!(
        "seed {}; features {}; null cost {:.3}, total cost {:.3}, delta {:.3}",
        h.seed_id,
        kinds.join(","),
        h.costs.null_cost,
        h.costs.total_cost,
        h.costs.delta()
    );
    Ok(())
}

fn cmd_pharm_screen(file: &Path, hypothesis: &Path, summary: Option<&Path>) -> CliResult {
    let h = Hypothesis::load(hypothesis).map_err(config_err)?;
    let lib = load_library(file, &default_target())?;
    let rows = screen_by_fit(&h, &lib.named_molecules(), &Constants::default());
    let mut w = csv_out();
    put(
        &mut w,
        &["id".into(), "fit".into(), "predicted_pic50".into()],
    )?;
    for r in &rows {
        put(
            &mut w,
            &[
                r.id.clone(),
                format!("{:.2}", r.fit),
                format!("{:.2}", r.predicted_pic50),
            ],
        )?;
    }
    w.flush().map_err(input_err)?;
    if let Some(path) = summary {
        let classes: BTreeMap<String, String> = lib
            .records
            .iter()
            .filter_map(|r| r.class.clone().map(|c| (r.id.clone(), c)))
            .collect();
        let mut buf = Vec::new();
        write_class_summary(
            &class_summary(&rows, &classes),
            ReportFormat::from_path(path),
            &mut buf,
        )?;
        std::fs::write(path, buf).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_screen(
    file: &Path,
    models: &[PathBuf],
    hypothesis: Option<&Path>,
    clusters: usize,
    picks: usize,
    out: &Path,
    threshold: f64,
    linkage: Linkage,
    seed: u64,
) -> CliResult {
    let cfg = ScreenConfig {
        clusters,
        picks,
        threshold,
        linkage,
        fingerprint: FingerprintConfig::new(2, 2048, seed).map_err(config_err)?,
        seed,
    };
    cfg.validate()?;
    if models.is_empty() && hypothesis.is_none() {
        return Err(config_err("supply at least one --model or a --hypothesis"));
    }
    let models: Vec<PdeNet> = models
        .iter()
        .map(|p| PdeNet::load(p).map_err(|e| config_err(format!("{}: {e}", p.display()))))
        .collect::<Result<_, _>>()?;
    let hypothesis = hypothesis
        .map(|p| Hypothesis::load(p).map_err(|e| config_err(format!("{}: {e}", p.display()))))
        .transpose()?;
    let bytes = std::fs::read(file).map_err(|e| input_err(format!("{}: {e}", file.display())))?;
    let lib = load_library(file, &default_target())?;
    let input = format!(
        "{} sha256={}",
        file.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        hex::encode(Sha256::digest(&bytes))
    );
    let result = run_screen(
        &lib.records,
        &lib.molecules,
        &models,
        hypothesis.as_ref(),
        &cfg,
        &Constants::default(),
    );
    match result {
        Ok(mut report) => {
            report.header.input = Some(input);
            emit_report(&report, out)?;
            let h = &report.header;
            eprintln!(
                "library {} -> scored {} -> actives {} -> clusters {} -> picks {}",
                h.library, h.scored, h.actives, h.clusters_formed, h.picks_made
            );
            Ok(())
        }
        Err(ScreenError::EmptyActiveSet(mut report)) => {
            report.header.input = Some(input);
            emit_report(&report, out)?;
            Err(ScreenError::EmptyActiveSet(report).into())
        }
        Err(e) => Err(e.into()),
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Parse { file } => cmd_parse(&file),
        Command::Descriptors {
            file,
            admet_constants,
        } => cmd_descriptors(&file, admet_constants.as_deref()),
        Command::Fingerprint {
            file,
            radius,
            nbits,
            seed,
        } => cmd_fingerprint(&file, radius, nbits, seed),
        Command::Similarity {
            file_a,
            file_b,
            metric,
        } => cmd_similarity(&file_a, &file_b, metric),
        Command::Cluster {
            file,
            clusters,
            linkage,
        } => cmd_cluster(&file, clusters, linkage),
        Command::Train {
            csv,
            target,
            epochs,
            lr,
            batch,
            hidden,
            seed,
            out,
        } => cmd_train(&csv, target, epochs, lr, batch, hidden, seed, &out),
        Command::Predict {
            file,
            model,
            threshold,
        } => cmd_predict(&file, &model, threshold),
        Command::Pharm { command } => match command {
            PharmCommand::Train {
                csv,
                max_candidates,
                out,
            } => cmd_pharm_train(&csv, max_candidates, &out),
            PharmCommand::Screen {
                file,
                hypothesis,
                summary,
            } => cmd_pharm_screen(&file, &hypothesis, summary.as_deref()),
        },
        Command::Screen {
            file,
            model,
            hypothesis,
            clusters,
            picks,
            out,
            threshold,
            linkage,
            seed,
        } => cmd_screen(
            &file,
            &model,
            hypothesis.as_deref(),
            clusters,
            picks,
            &out,
            threshold,
            linkage,
            seed,
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(EXIT_CONFIG),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
