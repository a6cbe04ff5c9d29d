//! Acceptance suite. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero when any criterion fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::process::Command;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use screenforge::chem::Molecule;
use screenforge::descriptors::{molecular_weight, Constants};
use screenforge::fingerprint::{FingerprintConfig, FingerprintVector, MIN_BITS};
use screenforge::pdenet::{
    ic50_to_pic50, init_model, passes_gate, split_dataset, split_indices, Activation, MlpModel,
    Target, TrainConfig, SCREEN_GATE_PIC50,
};
use screenforge::pharmacophore::{
    score_costs, select_best, FeatureKind, FeatureMap, FitRegression, GenParams, Hypothesis,
    HypothesisCosts, HypothesisFeature, HypothesisParams, PairConstraint, PharmFeature,
    TrainingCompound, TrainingSet,
};
use screenforge::screen::{default_column_map, ingest_text, LibraryFormat};
use screenforge::screen::{run_screen, ScreenConfig};
use screenforge::simcluster::{hier_cluster, pick_representatives, tanimoto, Linkage};
use screenforge::{canonical_smiles, parse_smiles, DistMatrix};

const TANIMOTO_ABS: f64 = 1e-12;
const MW_ABS: f64 = 0.05;
const FD_STEP: f64 = 1e-5;
const GRAD_REL: f64 = 1e-5;
/// Denominator floor for the relative gradient error.
const GRAD_FLOOR: f64 = 1e-8;
const OVERFIT_MSE: f64 = 1e-4;
const OVERFIT_EPOCHS: usize = 2000;
const PIC50_ABS: f64 = 1e-3;
const BLOB_WITHIN_MAX: f64 = 0.1;
const BLOB_BETWEEN_MIN: f64 = 0.9;
const FIT_ABS: f64 = 1e-12;
const COST_ABS: f64 = 1e-9;
const ISO_MAX_HEAVY: usize = 12;
const PERMUTATIONS: usize = 100;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
type Rows = Vec<(Vec<f64>, f64)>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !($cond) {
            return Err(format!($($fmt)+));
        }
    };
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("tanimoto exactness", c01_tanimoto),
        ("molecular weight oracle", c02_mw),
        ("split contract", c03_split),
        ("gradient check", c04_gradients),
        ("optimizer sanity", c05_optimizer),
        ("gate semantics", c06_gate),
        ("pIC50 conversion", c07_pic50),
        ("clustering recovery", c08_clustering),
        ("pharmacophore oracle", c09_pharmacophore),
        ("SMILES round trip", c10_round_trip),
        ("funnel reproduction", c11_funnel),
        ("end-to-end determinism", c12_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn c01_tanimoto() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = FingerprintConfig::new(2, 256, 0).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let density_a = rng.gen_range(0.01..0.6);
        let density_b = rng.gen_range(0.01..0.6);
        let a: BTreeSet<usize> = (0..256).filter(|_| rng.gen_bool(density_a)).collect();
        let b: BTreeSet<usize> = (0..256).filter(|_| rng.gen_bool(density_b)).collect();
        let union = a.union(&b).count();
        let oracle = if union == 0 {
            1.0
        } else {
            a.intersection(&b).count() as f64 / union as f64
        };
        let got = tanimoto(
            &FingerprintVector::from_bits(cfg, a.iter().copied()),
            &FingerprintVector::from_bits(cfg, b.iter().copied()),
        )
        .map_err(|e| e.to_string())?;
        worst = worst.max((got - oracle).abs());
    }
    ensure!(worst <= TANIMOTO_ABS, "max deviation {worst:e}");
    let small = FingerprintConfig::new(0, MIN_BITS, 0).unwrap();
    let a = FingerprintVector::from_bits(small, [0, 1]);
    let b = FingerprintVector::from_bits(small, [0, 2]);
    let t = tanimoto(&a, &b).map_err(|e| e.to_string())?;
    ensure!(
        (t - 1.0 / 3.0).abs() <= TANIMOTO_ABS,
        "(1,1,0)·(1,0,1) gave {t}"
    );
    Ok(format!(
        "1000 pairs, max deviation {worst:e}; (1,1,0)/(1,0,1) = {t:.6}"
    ))
}

/// Name, MW column, formula column of the molecule table.
const TABLE1: [(&str, f64, &str); 15] = [
    ("Anisatin", 346.38, "C15H20O8"),
    ("Bavachinin", 324.37, "C20H20O4"),
    ("Luteolin", 286.24, "C15H10O6"),
    ("Plumbagin", 188.19, "C11H8O3"),
    ("Hydroxyalizarin", 240.19, "C14H8O4"),
    ("Emodin", 270.24, "C15H10O5"),
    ("Aloe-emodin", 270.24, "C15H10O5"),
    ("Rhein", 284.22, "C15H8O6"),
    ("Sennoside A", 862.64, "C42H38O20"),
    ("Quercetin", 302.24, "C15H10O7"),
    ("Kaempferol", 286.24, "C15H10O6"),
    ("Rutin", 610.52, "C27H30O16"),
    ("Apigenin", 270.24, "C15H10O5"),
    ("Fisetin", 286.24, "C15H10O6"),
    ("Baicalein", 270.24, "C15H10O5"),
];

fn c02_mw() -> Outcome {
    let mut misses = Vec::new();
    for (name, mw, formula) in TABLE1 {
        let got = molecular_weight(formula).map_err(|e| e.to_string())?;
        if (got - mw).abs() > MW_ABS {
            misses.push(format!("{name} {formula} computes {got:.2}, table {mw:.2}"));
        }
    }
    ensure!(
        misses.is_empty(),
        "{} of {} rows outside ±{MW_ABS}: {}",
        misses.len(),
        TABLE1.len(),
        misses.join("; ")
    );
    Ok(format!("{} rows within ±{MW_ABS}", TABLE1.len()))
}

fn c03_split() -> Outcome {
    let cfg = TrainConfig {
        seed: 11,
        ..TrainConfig::default()
    };
    for (n, want) in [(100usize, [78usize, 12, 10]), (1261, [983, 151, 127])] {
        let parts = split_indices(n, &cfg).map_err(|e| e.to_string())?;
        let sizes = parts.each_ref().map(Vec::len);
        ensure!(sizes == want, "n={n}: sizes {sizes:?}, expected {want:?}");
        let mut all: Vec<usize> = parts.concat();
        all.sort_unstable();
        ensure!(all == (0..n).collect::<Vec<_>>(), "n={n}: not a partition");
        let again = split_indices(n, &cfg).map_err(|e| e.to_string())?;
        ensure!(again == parts, "n={n}: not deterministic");
        let records: Vec<usize> = (0..n).collect();
        let (tr, te, ho) = split_dataset(&records, &cfg).map_err(|e| e.to_string())?;
        ensure!(
            [tr, te, ho] == parts,
            "n={n}: split_dataset disagrees with split_indices"
        );
    }
    Ok("100 → 78/12/10, 1261 → 983/151/127".into())
}

fn param_count(m: &MlpModel<f64>) -> usize {
    m.params.iter().count()
}

fn perturbed(m: &MlpModel<f64>, k: usize, delta: f64) -> MlpModel<f64> {
    let mut out = m.clone();
    *out.params.iter_mut().nth(k).unwrap() += delta;
    out
}

fn gradient_error(activation: Activation, seed: u64) -> Result<f64, String> {
    let model: MlpModel<f64> =
        init_model(&[10, 8, 4, 1], activation, seed).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let xs: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let ys: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let (_, grads) = model
        .loss_and_gradients(&refs, &ys)
        .map_err(|e| e.to_string())?;
    let analytic: Vec<f64> = grads.iter().copied().collect();
    let mut worst = 0.0f64;
    for (k, &g) in analytic.iter().enumerate().take(param_count(&model)) {
        let up = perturbed(&model, k, FD_STEP)
            .loss_and_gradients(&refs, &ys)
            .unwrap()
            .0;
        let down = perturbed(&model, k, -FD_STEP)
            .loss_and_gradients(&refs, &ys)
            .unwrap()
            .0;
        let numeric = (up - down) / (2.0 * FD_STEP);
        let rel = (g - numeric).abs() / (g.abs() + numeric.abs()).max(GRAD_FLOOR);
        worst = worst.max(rel);
    }
    Ok(worst)
}

fn c04_gradients() -> Outcome {
    let tanh = gradient_error(Activation::Tanh, 4)?;
    let relu = gradient_error(Activation::Relu, 4)?;
    ensure!(
        tanh < GRAD_REL && relu < GRAD_REL,
        "max relative error tanh {tanh:e}, relu {relu:e}"
    );
    Ok(format!(
        "10×8×4×1, max relative error tanh {tanh:.2e}, relu {relu:.2e}"
    ))
}

fn regression_rows(n: usize, f: impl Fn(f64) -> f64) -> Rows {
    (0..n)
        .map(|i| {
            let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
            (vec![x], f(x))
        })
        .collect()
}

fn c05_optimizer() -> Outcome {
    let mut model: MlpModel<f64> = init_model(&[3, 5, 1], Activation::Relu, 2).unwrap();
    let before = model.params.clone();
    let zero = screenforge::pdenet::Params::<f64>::zeros(&model.layer_sizes);
    for _ in 0..5 {
        model.adam_step(&zero, 0.1).map_err(|e| e.to_string())?;
    }
    ensure!(model.params == before, "zero gradient moved the parameters");

    let rows = regression_rows(20, |x| 0.5 * x * x - 0.3 * x + 0.1);
    let cfg = TrainConfig {
        learning_rate: 1e-2,
        batch_size: 20,
        epochs: OVERFIT_EPOCHS,
        hidden_layers: vec![16, 16],
        activation: Activation::Tanh,
        seed: 5,
        ..TrainConfig::default()
    };
    let mut model: MlpModel<f64> = init_model(&[1, 16, 16, 1], Activation::Tanh, 5).unwrap();
    let curve = model.train(&rows, &rows, &cfg).map_err(|e| e.to_string())?;
    let hit = curve.train_mse.iter().position(|&m| m < OVERFIT_MSE);
    ensure!(
        hit.is_some(),
        "train MSE never fell below {OVERFIT_MSE:e}; best {:e}",
        curve
            .train_mse
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    );

    let fixtures: [(&str, Rows); 3] = [
        ("linear", regression_rows(20, |x| 2.0 * x + 1.0)),
        ("quadratic", regression_rows(20, |x| x * x)),
        ("sine", regression_rows(20, |x| (3.0 * x).sin())),
    ];
    for (name, rows) in fixtures {
        for activation in [Activation::Relu, Activation::Tanh] {
            let mut m: MlpModel<f64> = init_model(&[1, 8, 1], activation, 9).unwrap();
            let initial = m.dataset_mse(&rows).unwrap();
            let cfg = TrainConfig {
                learning_rate: 1e-2,
                batch_size: 5,
                epochs: 200,
                hidden_layers: vec![8],
                activation,
                seed: 9,
                ..TrainConfig::default()
            };
            let curve = m.train(&rows, &rows, &cfg).map_err(|e| e.to_string())?;
            let last = *curve.train_mse.last().unwrap();
            ensure!(
                last < initial,
                "{name}/{activation:?}: final {last:e} not below initial {initial:e}"
            );
        }
    }
    Ok(format!(
        "zero gradient fixed; 20-point overfit below {OVERFIT_MSE:e} at epoch {}",
        hit.unwrap() + 1
    ))
}

fn c06_gate() -> Outcome {
    let values = [5.69, 5.70, 5.71];
    let active: Vec<f64> = values
        .iter()
        .copied()
        .filter(|&v| passes_gate(v, SCREEN_GATE_PIC50))
        .collect();
    ensure!(active == [5.71], "active set {active:?}");
    Ok("{5.69, 5.70, 5.71} → {5.71}".into())
}

fn c07_pic50() -> Outcome {
    let a = ic50_to_pic50(0.59).map_err(|e| e.to_string())?;
    let b = ic50_to_pic50(1.0).map_err(|e| e.to_string())?;
    ensure!((a - 9.229).abs() <= PIC50_ABS, "0.59 nM → {a}");
    ensure!((b - 9.0).abs() <= 1e-12, "1 nM → {b}");
    Ok(format!("0.59 nM → {a:.4}, 1 nM → {b}"))
}

/// Two groups of ten fingerprints: each member is a 100-bit core plus one
/// private bit; the groups use disjoint bit ranges.
fn two_blobs() -> Vec<FingerprintVector> {
    let cfg = FingerprintConfig::new(2, 1024, 0).unwrap();
    let mut out = Vec::new();
    for blob in 0..2usize {
        let base = blob * 512;
        for member in 0..10usize {
            let bits = (base..base + 100).chain([base + 200 + member]);
            out.push(FingerprintVector::from_bits(cfg, bits));
        }
    }
    // interleave so recovery does not depend on input order
    let (a, b) = out.split_at(10);
    a.iter().interleave(b.iter()).cloned().collect()
}

fn c08_clustering() -> Outcome {
    let fps = two_blobs();
    let n = fps.len();
    let truth: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let dist = DistMatrix::from_fn(n, |i, j| 1.0 - tanimoto(&fps[i], &fps[j]).unwrap())
        .map_err(|e| e.to_string())?;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = dist.get(i, j);
            if truth[i] == truth[j] {
                ensure!(d < BLOB_WITHIN_MAX, "within-blob distance {d}");
            } else {
                ensure!(d > BLOB_BETWEEN_MIN, "between-blob distance {d}");
            }
        }
    }
    for linkage in [Linkage::Single, Linkage::Complete, Linkage::Average] {
        let a = hier_cluster(&dist, linkage, 2).map_err(|e| e.to_string())?;
        ensure!(a.labels == truth, "{linkage:?}: labels {:?}", a.labels);
        let all = hier_cluster(&dist, linkage, n).map_err(|e| e.to_string())?;
        ensure!(
            all.labels == (0..n).collect::<Vec<_>>() && all.representatives == all.labels,
            "{linkage:?}: k=n labels {:?}",
            all.labels
        );
        let one = hier_cluster(&dist, linkage, 1).map_err(|e| e.to_string())?;
        ensure!(
            one.labels == vec![0; n],
            "{linkage:?}: k=1 labels {:?}",
            one.labels
        );
        let picks = pick_representatives(&one, 1).map_err(|e| e.to_string())?;
        ensure!(picks.len() == 1, "{linkage:?}: k=1 picks {picks:?}");
    }
    Ok("two blobs recovered at k=2 under all linkages; k=n and k=1 exact".into())
}

const KINDS: [FeatureKind; 6] = [
    FeatureKind::Hbd,
    FeatureKind::Hba,
    FeatureKind::Hydrophobe,
    FeatureKind::AromaticRing,
    FeatureKind::NegIonizable,
    FeatureKind::PosIonizable,
];

fn hypothesis(
    features: Vec<HypothesisFeature>,
    pair_constraints: Vec<PairConstraint>,
) -> Hypothesis {
    Hypothesis {
        features,
        pair_constraints,
        fit_regression: FitRegression::default(),
        costs: HypothesisCosts::default(),
        gen_params: GenParams::default(),
        params: HypothesisParams::default(),
        enumeration_index: 0,
        seed_id: String::new(),
    }
}

fn random_map(rng: &mut ChaCha8Rng, kinds: usize) -> FeatureMap {
    let m = rng.gen_range(1..=8);
    let features: Vec<PharmFeature> = (0..m)
        .map(|i| PharmFeature {
            kind: KINDS[rng.gen_range(0..kinds)],
            anchor: vec![i],
        })
        .collect();
    let mut distances = vec![vec![Some(0); m]; m];
    for (a, b) in (0..m).tuple_combinations() {
        let d = (!rng.gen_bool(0.1)).then(|| rng.gen_range(1..10));
        distances[a][b] = d;
        distances[b][a] = d;
    }
    FeatureMap {
        features,
        distances,
    }
}

fn random_hypothesis(rng: &mut ChaCha8Rng, kinds: usize) -> Hypothesis {
    let n = rng.gen_range(3..=4);
    let features = (0..n)
        .map(|_| HypothesisFeature {
            kind: KINDS[rng.gen_range(0..kinds)],
            weight: rng.gen_range(0.5..2.0),
        })
        .collect();
    let pairs = (0..n)
        .tuple_combinations()
        .map(|(i, j)| PairConstraint {
            i,
            j,
            distance: rng.gen_range(1..10),
            tolerance: rng.gen_range(0..3),
        })
        .collect();
    hypothesis(features, pairs)
}

/// Maximum of `assignment_score` over every injective kind-respecting
/// assignment; 0 when there is none.
fn brute_force_fit(h: &Hypothesis, map: &FeatureMap) -> f64 {
    (0..map.len())
        .permutations(h.features.len())
        .filter(|p| {
            p.iter()
                .zip(&h.features)
                .all(|(&m, f)| map.features[m].kind == f.kind)
        })
        .map(|p| h.assignment_score(map, &p))
        .fold(0.0, f64::max)
}

fn feature(kind: FeatureKind) -> HypothesisFeature {
    HypothesisFeature { kind, weight: 1.0 }
}

fn exact_pairs(d: [u32; 3]) -> Vec<PairConstraint> {
    [(0, 1), (0, 2), (1, 2)]
        .iter()
        .zip(d)
        .map(|(&(i, j), distance)| PairConstraint {
            i,
            j,
            distance,
            tolerance: 0,
        })
        .collect()
}

/// Map with one Hbd, Hba, Hydrophobe and AromaticRing feature, in that
/// order, and the given upper-triangle distances.
fn four_feature_map(d: [u32; 6]) -> FeatureMap {
    let kinds = [
        FeatureKind::Hbd,
        FeatureKind::Hba,
        FeatureKind::Hydrophobe,
        FeatureKind::AromaticRing,
    ];
    let mut distances = vec![vec![Some(0); 4]; 4];
    for (k, (a, b)) in (0..4).tuple_combinations().enumerate() {
        distances[a][b] = Some(d[k]);
        distances[b][a] = Some(d[k]);
    }
    FeatureMap {
        features: kinds
            .iter()
            .enumerate()
            .map(|(i, &kind)| PharmFeature {
                kind,
                anchor: vec![i],
            })
            .collect(),
        distances,
    }
}

fn c09_pharmacophore() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    for round in 0..2000 {
        let kinds = if round % 2 == 0 { 2 } else { 4 };
        let h = random_hypothesis(&mut rng, kinds);
        let map = random_map(&mut rng, kinds);
        let got = h.fit_map(&map);
        let want = brute_force_fit(&h, &map);
        ensure!(
            (got - want).abs() <= FIT_ABS,
            "round {round}: branch and bound {got}, enumeration {want}"
        );
        checked += 1;
    }

    let constants = Constants::default();
    let text = std::fs::read_to_string(common::data_path("xo_training.csv")).unwrap();
    let ingested = ingest_text(
        &text,
        LibraryFormat::Csv,
        &default_column_map(),
        &Target::Xo,
    )
    .map_err(|e| e.to_string())?;
    let compounds: Vec<TrainingCompound> = ingested
        .records
        .iter()
        .zip(&ingested.molecules)
        .map(|(r, m)| TrainingCompound {
            id: r.id.clone(),
            mol: m.clone(),
            pic50: r.pic50.unwrap(),
        })
        .collect();
    let training = TrainingSet::new(&compounds, &constants).map_err(|e| e.to_string())?;
    let seed = training.seed_index();
    let candidates =
        screenforge::pharmacophore::generate_hypotheses(&training, &HypothesisParams::default())
            .map_err(|e| e.to_string())?;
    for h in &candidates {
        let seed_fit = h.fit_map(&training.maps[seed]);
        ensure!(
            (seed_fit - h.max_fit()).abs() <= FIT_ABS,
            "candidate {}: seed fit {seed_fit} below maximum {}",
            h.enumeration_index,
            h.max_fit()
        );
        for (i, map) in training.maps.iter().enumerate() {
            ensure!(
                h.fit_map(map) <= seed_fit + FIT_ABS,
                "candidate {}: {} outranks the seed",
                h.enumeration_index,
                training.ids[i]
            );
        }
    }

    // hand-computed training set: H1 fits 3,2,1,0 and H2 fits 3,2,0,1
    let hand = TrainingSet {
        ids: ["c1", "c2", "c3", "c4"].map(String::from).to_vec(),
        maps: vec![
            four_feature_map([2, 3, 5, 4, 5, 1]),
            four_feature_map([2, 3, 9, 9, 5, 1]),
            four_feature_map([9, 3, 9, 9, 9, 1]),
            four_feature_map([9, 9, 5, 9, 9, 1]),
        ],
        pic50: vec![8.0, 7.0, 6.0, 5.0],
    };
    use FeatureKind::*;
    let mut h1 = hypothesis(
        vec![feature(Hbd), feature(Hba), feature(Hydrophobe)],
        exact_pairs([2, 3, 4]),
    );
    let mut h2 = hypothesis(
        vec![feature(Hbd), feature(Hba), feature(AromaticRing)],
        exact_pairs([2, 5, 5]),
    );
    h2.enumeration_index = 1;
    let expected = [
        // slope, intercept, null, total
        (1.0, 5.0, 5.0, 0.3),
        (0.8, 5.3, 5.0, 2.1),
    ];
    for (h, (slope, intercept, null, total)) in [&mut h1, &mut h2].into_iter().zip(expected) {
        let (reg, costs) = score_costs(h, &hand);
        ensure!(
            (reg.slope - slope).abs() <= COST_ABS
                && (reg.intercept - intercept).abs() <= COST_ABS
                && (costs.null_cost - null).abs() <= COST_ABS
                && (costs.total_cost - total).abs() <= COST_ABS,
            "candidate {}: regression {reg:?}, costs {costs:?}",
            h.enumeration_index
        );
        h.fit_regression = reg;
        h.costs = costs;
    }
    let pool = [h2.clone(), h1.clone()];
    let best = select_best(&pool).map_err(|e| e.to_string())?;
    ensure!(best == &h1, "selected candidate {}", best.enumeration_index);
    Ok(format!(
        "{checked} random fixtures match enumeration; seed tops {} candidates; hand set selects Δ = {:.1}",
        candidates.len(),
        best.costs.delta()
    ))
}

fn c10_round_trip() -> Outcome {
    let corpus = common::corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut brute = 0;
    for (id, mol) in &corpus {
        let canon = canonical_smiles(mol);
        let back = parse_smiles(&canon).map_err(|e| format!("{id}: {canon}: {e}"))?;
        ensure!(
            canonical_smiles(&back) == canon,
            "{id}: canonical form is not a fixed point"
        );
        ensure!(
            back.molecular_formula() == mol.molecular_formula(),
            "{id}: formula changed"
        );
        if mol.heavy_atom_count() <= ISO_MAX_HEAVY {
            ensure!(
                common::isomorphic(mol, &back),
                "{id}: {canon} not isomorphic"
            );
            brute += 1;
        }
        for _ in 0..PERMUTATIONS {
            let mut perm: Vec<usize> = (0..mol.atom_count()).collect();
            rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
            let shuffled: Molecule = mol.permuted(&perm).map_err(|e| e.to_string())?;
            let c = canonical_smiles(&shuffled);
            ensure!(c == canon, "{id}: permutation gave {c}, expected {canon}");
        }
    }
    Ok(format!(
        "{} molecules ({brute} checked by exhaustive isomorphism), {PERMUTATIONS} permutations each",
        corpus.len()
    ))
}

fn c11_funnel() -> Outcome {
    let library: String = common::synthetic_library()
        .iter()
        .take(179)
        .enumerate()
        .map(|(i, s)| format!("{s} S{:03}\n", i + 1))
        .collect();
    let ingested = ingest_text(
        &library,
        LibraryFormat::Smi,
        &default_column_map(),
        &Target::Xo,
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        ingested.records.len() == 179,
        "{} unique records",
        ingested.records.len()
    );
    // a flat regression at 7.0 makes every compound active
    let mut h = hypothesis(
        vec![
            feature(FeatureKind::Hydrophobe),
            feature(FeatureKind::Hydrophobe),
            feature(FeatureKind::Hydrophobe),
        ],
        exact_pairs([1, 1, 1]),
    );
    h.fit_regression = FitRegression {
        slope: 0.0,
        intercept: 7.0,
        degenerate: true,
    };
    let cfg = ScreenConfig::new(34, 16);
    let report = run_screen(
        &ingested.records,
        &ingested.molecules,
        &[],
        Some(&h),
        &cfg,
        &Constants::default(),
    )
    .map_err(|e| e.to_string())?;
    let hdr = &report.header;
    let actives = report.rows.iter().filter(|r| r.active).count();
    let clusters: BTreeSet<usize> = report.rows.iter().filter_map(|r| r.cluster_id).collect();
    let picks = report.rows.iter().filter(|r| r.representative).count();
    ensure!(
        (hdr.actives, hdr.clusters_formed, hdr.picks_made) == (179, 34, 16),
        "header {} → {} → {}",
        hdr.actives,
        hdr.clusters_formed,
        hdr.picks_made
    );
    ensure!(
        (actives, clusters.len(), picks) == (179, 34, 16),
        "rows {actives} → {} → {picks}",
        clusters.len()
    );
    Ok("179 actives → 34 clusters → 16 picks".into())
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_screenforge"))
        .args(args)
        .env_remove("SCREENFORGE_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        out.status.success(),
        "{args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(())
}

fn c12_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let mut train = String::from("id,smiles,pic50\n");
    for (i, s) in common::synthetic_library().iter().enumerate() {
        let mol = parse_smiles(s).unwrap();
        let pic50 = 4.5 + 0.15 * mol.heavy_atom_count() as f64 + 0.3 * (i % 3) as f64;
        train.push_str(&format!("T{i:03},{s},{pic50:.3}\n"));
    }
    std::fs::write(p("train.csv"), train).map_err(|e| e.to_string())?;
    let training = common::data_path("xo_training.csv");
    let library = common::data_path("fixture30.csv");
    run_cli(&[
        "train",
        &p("train.csv"),
        "--target",
        "PDE4",
        "--epochs",
        "30",
        "--hidden",
        "16,8",
        "--seed",
        "3",
        "--out",
        &p("model.json"),
    ])?;
    run_cli(&[
        "pharm",
        "train",
        training.to_str().unwrap(),
        "--out",
        &p("hyp.json"),
    ])?;
    let mut reports: BTreeMap<&str, Vec<u8>> = BTreeMap::new();
    for (run, ext) in [("a", "csv"), ("b", "csv"), ("a", "md"), ("b", "md")] {
        let out = p(&format!("report_{run}.{ext}"));
        run_cli(&[
            "screen",
            library.to_str().unwrap(),
            "--model",
            &p("model.json"),
            "--hypothesis",
            &p("hyp.json"),
            "--clusters",
            "5",
            "--picks",
            "3",
            "--seed",
            "3",
            "--out",
            &out,
        ])?;
        let bytes = std::fs::read(&out).map_err(|e| e.to_string())?;
        ensure!(!bytes.is_empty(), "empty report {out}");
        if let Some(prev) = reports.insert(ext, bytes.clone()) {
            ensure!(prev == bytes, "{ext} reports differ between invocations");
        }
    }
    Ok(format!(
        "csv report {} bytes and md report {} bytes identical across runs",
        reports["csv"].len(),
        reports["md"].len()
    ))
}
