//! Topological pharmacophore hypotheses: generation from the most active
//! training compound, fit scoring, cost-based selection and fit-ranked
//! screening.

mod features;

use std::collections::BTreeMap;
use std::path::Path;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{detect_features, FeatureKind, FeatureMap, PharmFeature};

use crate::chem::Molecule;
use crate::descriptors::Constants;

pub const HYPOTHESIS_FORMAT_VERSION: u32 = 1;
pub const MIN_TRAINING_RECORDS: usize = 4;
pub const MIN_HYPOTHESIS_FEATURES: usize = 3;
pub const MAX_HYPOTHESIS_FEATURES: usize = 6;

#[derive(Debug, Error)]
pub enum PharmError {
    #[error("need at least {MIN_TRAINING_RECORDS} training records with pIC50, got {0}")]
    InsufficientTraining(usize),
    #[error("seed compound `{id}` has {found} features, fewer than the {needed} required")]
    TooFewSeedFeatures {
        id: String,
        found: usize,
        needed: usize,
    },
    #[error("no candidate hypotheses to select from")]
    NoCandidates,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("hypothesis file: {0}")]
    Format(String),
}

/// Conformer-search settings recorded with each hypothesis. Distances are
/// topological, so these values do not affect any computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub energy_threshold_kcal_per_mol: f64,
    pub max_conformations: u32,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            energy_threshold_kcal_per_mol: 10.0,
            max_conformations: 255,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisParams {
    pub max_candidates: usize,
    pub min_features: usize,
    pub max_features: usize,
    /// Allowed bond-path deviation per feature pair.
    pub tolerance: u32,
    /// Cost added per hypothesis feature.
    pub lambda: f64,
}

impl Default for HypothesisParams {
    fn default() -> Self {
        HypothesisParams {
            max_candidates: 255,
            min_features: 3,
            max_features: 5,
            tolerance: 1,
            lambda: 0.1,
        }
    }
}

impl HypothesisParams {
    pub fn validate(&self) -> Result<(), PharmError> {
        let bad = |m: String| Err(PharmError::InvalidParams(m));
        if self.min_features < MIN_HYPOTHESIS_FEATURES
            || self.max_features > MAX_HYPOTHESIS_FEATURES
            || self.min_features > self.max_features
        {
            return bad(format!(
                "feature range {}..={} must lie within {MIN_HYPOTHESIS_FEATURES}..={MAX_HYPOTHESIS_FEATURES}",
                self.min_features, self.max_features
            ));
        }
        if self.max_candidates == 0 {
            return bad("max_candidates must be at least 1".into());
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad(format!(
                "lambda {} must be finite and non-negative",
                self.lambda
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisFeature {
    pub kind: FeatureKind,
    pub weight: f64,
}

/// Target bond-path distance between hypothesis features `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairConstraint {
    pub i: usize,
    pub j: usize,
    pub distance: u32,
    pub tolerance: u32,
}

/// `predicted pIC50 = slope * fit + intercept`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitRegression {
    pub slope: f64,
    pub intercept: f64,
    /// All training fits were equal; the line collapsed to the mean.
    pub degenerate: bool,
}

impl FitRegression {
    pub fn predict(&self, fit: f64) -> f64 {
        self.slope * fit + self.intercept
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HypothesisCosts {
    pub null_cost: f64,
    pub total_cost: f64,
}

impl HypothesisCosts {
    pub fn delta(&self) -> f64 {
        self.null_cost - self.total_cost
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub features: Vec<HypothesisFeature>,
    /// One entry per feature pair, ordered by `(i, j)`.
    pub pair_constraints: Vec<PairConstraint>,
    pub fit_regression: FitRegression,
    pub costs: HypothesisCosts,
    pub gen_params: GenParams,
    pub params: HypothesisParams,
    /// Position in the generation order.
    pub enumeration_index: usize,
    pub seed_id: String,
}

/// A training compound with measured activity.
#[derive(Debug, Clone)]
pub struct TrainingCompound {
    pub id: String,
    pub mol: Molecule,
    pub pic50: f64,
}

/// Training compounds with their feature maps computed once.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub ids: Vec<String>,
    pub maps: Vec<FeatureMap>,
    pub pic50: Vec<f64>,
}

impl TrainingSet {
    pub fn new(compounds: &[TrainingCompound], constants: &Constants) -> Result<Self, PharmError> {
        if compounds.len() < MIN_TRAINING_RECORDS {
            return Err(PharmError::InsufficientTraining(compounds.len()));
        }
        if let Some(c) = compounds.iter().find(|c| !c.pic50.is_finite()) {
            return Err(PharmError::InvalidParams(format!(
                "{}: pIC50 {} is not finite",
                c.id, c.pic50
            )));
        }
        let maps = compounds
            .par_iter()
            .map(|c| FeatureMap::new(&c.mol.largest_fragment(), constants))
            .collect();
        Ok(TrainingSet {
            ids: compounds.iter().map(|c| c.id.clone()).collect(),
            maps,
            pic50: compounds.iter().map(|c| c.pic50).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Most active compound, lowest index on ties.
    pub fn seed_index(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.pic50.iter().enumerate() {
            if p > self.pic50[best] {
                best = i;
            }
        }
        best
    }
}

/// Candidate hypotheses from the seed compound's features: every subset of
/// `min_features..=max_features` features, by size and then
/// lexicographically by feature index, truncated to `max_candidates`.
/// Costs and regression are left at zero until [`score_candidates`].
pub fn generate_hypotheses(
    training: &TrainingSet,
    params: &HypothesisParams,
) -> Result<Vec<Hypothesis>, PharmError> {
    params.validate()?;
    if training.len() < MIN_TRAINING_RECORDS {
        return Err(PharmError::InsufficientTraining(training.len()));
    }
    let seed = training.seed_index();
    let pool = &training.maps[seed];
    if pool.len() < params.min_features {
        return Err(PharmError::TooFewSeedFeatures {
            id: training.ids[seed].clone(),
            found: pool.len(),
            needed: params.min_features,
        });
    }
    let subsets = (params.min_features..=params.max_features.min(pool.len()))
        .flat_map(|k| (0..pool.len()).combinations(k))
        .take(params.max_candidates);
    Ok(subsets
        .enumerate()
        .map(|(index, subset)| {
            let features = subset
                .iter()
                .map(|&f| HypothesisFeature {
                    kind: pool.features[f].kind,
                    weight: 1.0,
                })
                .collect();
            let pair_constraints = (0..subset.len())
                .tuple_combinations()
                .map(|(i, j)| PairConstraint {
                    i,
                    j,
                    distance: pool.distances[subset[i]][subset[j]]
                        .expect("largest fragment is connected"),
                    tolerance: params.tolerance,
                })
                .collect();
            Hypothesis {
                features,
                pair_constraints,
                fit_regression: FitRegression::default(),
                costs: HypothesisCosts::default(),
                gen_params: GenParams::default(),
                params: params.clone(),
                enumeration_index: index,
                seed_id: training.ids[seed].clone(),
            }
        })
        .collect())
}

impl Hypothesis {
    /// Weight of the pair `(i, j)`: each feature's weight is shared evenly
    /// over the pairs it takes part in, so pair weights sum to the feature
    /// weights.
    pub fn pair_weight(&self, c: &PairConstraint) -> f64 {
        (self.features[c.i].weight + self.features[c.j].weight) / (self.features.len() - 1) as f64
    }

    /// Maximum attainable fit, the sum of feature weights.
    pub fn max_fit(&self) -> f64 {
        self.features.iter().map(|f| f.weight).sum()
    }

    fn pair_term(&self, c: &PairConstraint, d: Option<u32>) -> f64 {
        match d {
            None => 0.0,
            Some(d) => {
                let dev = d.abs_diff(c.distance) as f64;
                self.pair_weight(c) * (1.0 - dev / (c.tolerance as f64 + 1.0)).max(0.0)
            }
        }
    }

    /// Score of a specific assignment `mapping[h] = molecule feature index`.
    pub fn assignment_score(&self, map: &FeatureMap, mapping: &[usize]) -> f64 {
        self.pair_constraints
            .iter()
            .map(|c| self.pair_term(c, map.distances[mapping[c.i]][mapping[c.j]]))
            .sum()
    }

    /// Best injective kind-respecting assignment of hypothesis features onto
    /// `map`, found by exact branch and bound. 0 when no assignment exists.
    pub fn fit_map(&self, map: &FeatureMap) -> f64 {
        let n = self.features.len();
        let candidates: Vec<Vec<usize>> = self
            .features
            .iter()
            .map(|hf| {
                (0..map.len())
                    .filter(|&m| map.features[m].kind == hf.kind)
                    .collect()
            })
            .collect();
        if candidates.iter().any(Vec::is_empty) {
            return 0.0;
        }
        // pairs[j] lists constraints (i, j) with i < j, scored once j is placed
        let mut pairs: Vec<Vec<&PairConstraint>> = vec![Vec::new(); n];
        for c in &self.pair_constraints {
            pairs[c.j].push(c);
        }
        let remaining: Vec<f64> = (0..=n)
            .map(|k| {
                pairs[k.min(n)..]
                    .iter()
                    .flatten()
                    .map(|c| self.pair_weight(c))
                    .sum()
            })
            .collect();
        let mut search = Search {
            h: self,
            map,
            candidates: &candidates,
            pairs: &pairs,
            remaining: &remaining,
            mapping: Vec::with_capacity(n),
            used: vec![false; map.len()],
            best: None,
        };
        search.descend(0.0);
        search.best.unwrap_or(0.0).max(0.0)
    }

    /// Fit of a molecule's largest fragment.
    pub fn fit_value(&self, mol: &Molecule, constants: &Constants) -> f64 {
        self.fit_map(&FeatureMap::new(&mol.largest_fragment(), constants))
    }

    pub fn validate(&self) -> Result<(), PharmError> {
        let bad = |m: String| Err(PharmError::Format(m));
        let n = self.features.len();
        if !(MIN_HYPOTHESIS_FEATURES..=MAX_HYPOTHESIS_FEATURES).contains(&n) {
            return bad(format!(
                "{n} features, expected {MIN_HYPOTHESIS_FEATURES} to {MAX_HYPOTHESIS_FEATURES}"
            ));
        }
        if self
            .features
            .iter()
            .any(|f| !(f.weight.is_finite() && f.weight > 0.0))
        {
            return bad("feature weights must be positive".into());
        }
        let expected: Vec<(usize, usize)> = (0..n).tuple_combinations().collect();
        let found: Vec<(usize, usize)> = self.pair_constraints.iter().map(|c| (c.i, c.j)).collect();
        if expected != found {
            return bad(
                "pair constraints must list every feature pair once, ordered by (i, j)".into(),
            );
        }
        let r = &self.fit_regression;
        if !(r.slope.is_finite() && r.intercept.is_finite()) {
            return bad("regression coefficients must be finite".into());
        }
        let c = &self.costs;
        if !(c.null_cost.is_finite()
            && c.null_cost >= 0.0
            && c.total_cost.is_finite()
            && c.total_cost >= 0.0)
        {
            return bad("costs must be finite and non-negative".into());
        }
        self.params
            .validate()
            .map_err(|e| PharmError::Format(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let doc = HypothesisDoc {
            format_version: HYPOTHESIS_FORMAT_VERSION,
            hypothesis: self.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("hypothesis serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PharmError> {
        let doc: HypothesisDoc =
            serde_json::from_str(text).map_err(|e| PharmError::Format(e.to_string()))?;
        if doc.format_version != HYPOTHESIS_FORMAT_VERSION {
            return Err(PharmError::Format(format!(
                "format_version {} is not supported (expected {HYPOTHESIS_FORMAT_VERSION})",
                doc.format_version
            )));
        }
        doc.hypothesis.validate()?;
        Ok(doc.hypothesis)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json() + "\n")
    }

    pub fn load(path: &Path) -> Result<Self, PharmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PharmError::Format(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct HypothesisDoc {
    format_version: u32,
    #[serde(flatten)]
    hypothesis: Hypothesis,
}

struct Search<'a> {
    h: &'a Hypothesis,
    map: &'a FeatureMap,
    candidates: &'a [Vec<usize>],
    pairs: &'a [Vec<&'a PairConstraint>],
    /// `remaining[k]`: weight of all pairs closed at depth `k` or later.
    remaining: &'a [f64],
    mapping: Vec<usize>,
    used: Vec<bool>,
    best: Option<f64>,
}

impl Search<'_> {
    fn descend(&mut self, score: f64) {
        let depth = self.mapping.len();
        if depth == self.candidates.len() {
            if self.best.is_none_or(|b| score > b) {
                self.best = Some(score);
            }
            return;
        }
        if self
            .best
            .is_some_and(|b| score + self.remaining[depth] <= b)
        {
            return;
        }
        for &m in &self.candidates[depth] {
            if self.used[m] {
                continue;
            }
            let gain: f64 = self.pairs[depth]
                .iter()
                .map(|c| {
                    self.h
                        .pair_term(c, self.map.distances[self.mapping[c.i]][m])
                })
                .sum();
            self.used[m] = true;
            self.mapping.push(m);
            self.descend(score + gain);
            self.mapping.pop();
            self.used[m] = false;
        }
    }
}

/// Least-squares line of `y` on `x` and the resulting costs.
///
/// `total_cost = Σ(predicted − y)² + λ·features`, `null_cost = Σ(ȳ − y)²`.
/// When every `x` is equal the slope is 0 and the intercept is ȳ.
pub fn regression_costs(
    x: &[f64],
    y: &[f64],
    features: usize,
    lambda: f64,
) -> (FitRegression, HypothesisCosts) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let degenerate = sxx <= f64::EPSILON * n * mx.abs().max(1.0).powi(2);
    let reg = if degenerate {
        log::debug!("constant fits across training; regression collapses to the mean");
        FitRegression {
            slope: 0.0,
            intercept: my,
            degenerate: true,
        }
    } else {
        let slope = sxy / sxx;
        FitRegression {
            slope,
            intercept: my - slope * mx,
            degenerate: false,
        }
    };
    let residual: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| (reg.predict(a) - b).powi(2))
        .sum();
    let null_cost: f64 = y.iter().map(|b| (my - b).powi(2)).sum();
    let costs = HypothesisCosts {
        null_cost,
        total_cost: residual + lambda * features as f64,
    };
    (reg, costs)
}

/// Fit `h` over the training set, regress pIC50 on fit and compute costs.
pub fn score_costs(h: &Hypothesis, training: &TrainingSet) -> (FitRegression, HypothesisCosts) {
    let fits: Vec<f64> = training.maps.iter().map(|m| h.fit_map(m)).collect();
    regression_costs(&fits, &training.pic50, h.features.len(), h.params.lambda)
}

/// Fill regression and costs of every candidate.
pub fn score_candidates(candidates: &mut [Hypothesis], training: &TrainingSet) {
    candidates.par_iter_mut().for_each(|h| {
        let (reg, costs) = score_costs(h, training);
        h.fit_regression = reg;
        h.costs = costs;
    });
}

/// Largest cost difference; ties go to fewer features, then the lower
/// enumeration index.
pub fn select_best(candidates: &[Hypothesis]) -> Result<&Hypothesis, PharmError> {
    candidates
        .iter()
        .min_by(|a, b| {
            b.costs
                .delta()
                .total_cmp(&a.costs.delta())
                .then_with(|| a.features.len().cmp(&b.features.len()))
                .then_with(|| a.enumeration_index.cmp(&b.enumeration_index))
        })
        .ok_or(PharmError::NoCandidates)
}

/// Generate, score and select in one step.
pub fn train_hypothesis(
    compounds: &[TrainingCompound],
    params: &HypothesisParams,
    constants: &Constants,
) -> Result<Hypothesis, PharmError> {
    params.validate()?;
    let training = TrainingSet::new(compounds, constants)?;
    let mut candidates = generate_hypotheses(&training, params)?;
    score_candidates(&mut candidates, &training);
    select_best(&candidates).cloned()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub id: String,
    pub fit: f64,
    pub predicted_pic50: f64,
}

/// Fit and predicted pIC50 per compound, by fit descending and id ascending.
pub fn screen_by_fit(
    h: &Hypothesis,
    library: &[(String, Molecule)],
    constants: &Constants,
) -> Vec<FitRow> {
    let mut rows: Vec<FitRow> = library
        .par_iter()
        .map(|(id, mol)| {
            let fit = h.fit_value(mol, constants);
            FitRow {
                id: id.clone(),
                fit,
                predicted_pic50: h.fit_regression.predict(fit),
            }
        })
        .collect();
    rows.sort_by(|a, b| b.fit.total_cmp(&a.fit).then_with(|| a.id.cmp(&b.id)));
    rows
}

/// One row of the structural-class summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassRow {
    /// Letter code, `A`, `B`, …
    pub classify: String,
    pub class_type: String,
    /// Best-fitting member.
    pub representative: String,
    pub quantity: usize,
    /// Fit of the representative.
    pub degree_of_fit: f64,
}

fn class_letter(mut i: usize) -> String {
    let mut s = Vec::new();
    loop {
        s.push(b'A' + (i % 26) as u8);
        if i < 26 {
            break;
        }
        i = i / 26 - 1;
    }
    s.reverse();
    String::from_utf8(s).expect("ascii")
}

/// Group fit-ranked rows by class label. Classes are ordered by member count
/// descending, then by label; rows without a label are left out.
pub fn class_summary(rows: &[FitRow], classes: &BTreeMap<String, String>) -> Vec<ClassRow> {
    let mut groups: BTreeMap<&str, (usize, &FitRow)> = BTreeMap::new();
    for r in rows {
        let Some(class) = classes.get(&r.id) else {
            continue;
        };
        let e = groups.entry(class.as_str()).or_insert((0, r));
        e.0 += 1;
        if r.fit > e.1.fit || (r.fit == e.1.fit && r.id < e.1.id) {
            e.1 = r;
        }
    }
    let mut ordered: Vec<_> = groups.into_iter().collect();
    ordered.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then_with(|| a.0.cmp(b.0)));
    ordered
        .into_iter()
        .enumerate()
        .map(|(i, (class, (count, rep)))| ClassRow {
            classify: class_letter(i),
            class_type: class.to_string(),
            representative: rep.id.clone(),
            quantity: count,
            degree_of_fit: rep.fit,
        })
        .collect()
}
