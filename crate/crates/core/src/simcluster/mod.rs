//! Tanimoto and string similarity, similarity/distance matrices,
//! agglomerative clustering and medoid selection.

mod cluster;

use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::fingerprint::{FingerprintError, FingerprintVector};
use crate::Scalar;

pub use cluster::{
    hier_cluster, medoid_representatives, pick_representatives, ClusterAssignment, Linkage,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimilarityError {
    #[error(transparent)]
    Fingerprint(#[from] FingerprintError),
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} items, got {got}")]
    TooFewItems { needed: usize, got: usize },
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("cluster count {k} outside 1..={n}")]
    InvalidK { k: usize, n: usize },
    #[error("picks {picks} exceed cluster count {k}")]
    TooManyPicks { picks: usize, k: usize },
}

/// Tanimoto similarity of two binary fingerprints, `|A∩B| / |A∪B|`.
///
/// Two all-zero vectors are defined to have similarity 1.0; that case is
/// logged at debug level.
pub fn tanimoto(a: &FingerprintVector, b: &FingerprintVector) -> Result<f64, SimilarityError> {
    let both = a.intersection_count(b)?;
    let union = a.popcount() + b.popcount() - both;
    if union == 0 {
        log::debug!("tanimoto of two empty fingerprints taken as 1.0");
        return Ok(1.0);
    }
    Ok(both as f64 / union as f64)
}

/// `A·B / (|A|² + |B|² − A·B)` for real-valued vectors; 1 when both vectors
/// are zero.
pub fn tanimoto_continuous<T: Scalar>(a: &[T], b: &[T]) -> Result<T, SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::LengthMismatch(a.len(), b.len()));
    }
    let mut ab = T::zero();
    let mut aa = T::zero();
    let mut bb = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    let denom = aa + bb - ab;
    if denom == T::zero() {
        log::debug!("continuous tanimoto of two zero vectors taken as 1.0");
        return Ok(T::one());
    }
    Ok(ab / denom)
}

fn lcs_len(a: &[char], b: &[char]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &x in a {
        for (j, &y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Character-sequence similarity `2·LCS / (|a| + |b|)`, compared per Unicode
/// scalar. Two empty strings score 1.
pub fn string_similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    2.0 * lcs_len(&a, &b) as f64 / (a.len() + b.len()) as f64
}

fn check_square<T: Scalar>(n: usize, values: &[T]) -> Result<(), SimilarityError> {
    if values.len() != n * n {
        return Err(SimilarityError::InvalidMatrix(format!(
            "{} values for a {n}x{n} matrix",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(SimilarityError::InvalidMatrix(format!(
            "non-finite entry {v}"
        )));
    }
    let tol = T::of(1e-12);
    for i in 0..n {
        for j in i + 1..n {
            if (values[i * n + j] - values[j * n + i]).abs() > tol {
                return Err(SimilarityError::InvalidMatrix(format!(
                    "asymmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Symmetric matrix of similarities in `[0, 1]` with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix<T> {
    n: usize,
    values: Vec<T>,
}

impl<T: Scalar> SimilarityMatrix<T> {
    pub fn new(n: usize, values: Vec<T>) -> Result<Self, SimilarityError> {
        check_square(n, &values)?;
        if (0..n).any(|i| values[i * n + i] != T::one()) {
            return Err(SimilarityError::InvalidMatrix("diagonal must be 1".into()));
        }
        if values.iter().any(|&v| v < T::zero() || v > T::one()) {
            return Err(SimilarityError::InvalidMatrix(
                "entries must lie in [0, 1]".into(),
            ));
        }
        Ok(SimilarityMatrix { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// `1 − similarity` entry-wise.
    pub fn to_distance(&self) -> DistanceMatrix<T> {
        DistanceMatrix {
            n: self.n,
            values: self.values.iter().map(|&v| T::one() - v).collect(),
        }
    }

    /// CSV with a header row `id,<ids…>` and one row per item.
    pub fn write_csv<W: Write>(&self, ids: &[String], out: W) -> Result<(), csv::Error> {
        write_matrix_csv(self.n, &self.values, ids, out)
    }
}

/// Symmetric, non-negative dissimilarities with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<T> {
    n: usize,
    values: Vec<T>,
}

impl<T: Scalar> DistanceMatrix<T> {
    pub fn new(n: usize, values: Vec<T>) -> Result<Self, SimilarityError> {
        check_square(n, &values)?;
        if (0..n).any(|i| values[i * n + i] != T::zero()) {
            return Err(SimilarityError::InvalidMatrix("diagonal must be 0".into()));
        }
        if values.iter().any(|&v| v < T::zero()) {
            return Err(SimilarityError::InvalidMatrix(
                "distances must be non-negative".into(),
            ));
        }
        Ok(DistanceMatrix { n, values })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> T) -> Result<Self, SimilarityError> {
        let mut values = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = f(i, j);
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        Self::new(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.n + j]
    }

    pub fn write_csv<W: Write>(&self, ids: &[String], out: W) -> Result<(), csv::Error> {
        write_matrix_csv(self.n, &self.values, ids, out)
    }
}

fn write_matrix_csv<T: Scalar, W: Write>(
    n: usize,
    values: &[T],
    ids: &[String],
    out: W,
) -> Result<(), csv::Error> {
    assert_eq!(ids.len(), n, "one id per matrix row");
    let mut w = csv::Writer::from_writer(out);
    w.write_record(std::iter::once("id").chain(ids.iter().map(String::as_str)))?;
    for (i, id) in ids.iter().enumerate() {
        let row = values[i * n..(i + 1) * n].iter().map(|v| format!("{v}"));
        w.write_record(std::iter::once(id.clone()).chain(row))?;
    }
    w.flush()?;
    Ok(())
}

/// Pairwise Tanimoto similarities; pairs are evaluated in parallel.
pub fn similarity_matrix(
    items: &[FingerprintVector],
) -> Result<SimilarityMatrix<f64>, SimilarityError> {
    let n = items.len();
    if n < 2 {
        return Err(SimilarityError::TooFewItems { needed: 2, got: n });
    }
    for it in &items[1..] {
        items[0].check_config(it)?;
    }
    let upper: Vec<(usize, usize, f64)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (i + 1..n).map(move |j| {
                (
                    i,
                    j,
                    tanimoto(&items[i], &items[j]).expect("configs checked"),
                )
            })
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
    }
    for (i, j, t) in upper {
        values[i * n + j] = t;
        values[j * n + i] = t;
    }
    SimilarityMatrix::new(n, values)
}

/// Similarity matrix and its `1 − T` distance form.
pub fn distance_matrix(
    items: &[FingerprintVector],
) -> Result<(SimilarityMatrix<f64>, DistanceMatrix<f64>), SimilarityError> {
    let sim = similarity_matrix(items)?;
    let dist = sim.to_distance();
    Ok((sim, dist))
}

/// Rectangular similarity block between two sets, `rows[i][j] = T(a_i, b_j)`.
pub fn cross_similarity(
    a: &[FingerprintVector],
    b: &[FingerprintVector],
) -> Result<Vec<Vec<f64>>, SimilarityError> {
    a.par_iter()
        .map(|x| {
            b.iter()
                .map(|y| tanimoto(x, y))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingerprint::FingerprintConfig;

    fn cfg() -> FingerprintConfig {
        FingerprintConfig::new(0, 64, 0).unwrap()
    }

    fn v(bits: &[usize]) -> FingerprintVector {
        FingerprintVector::from_bits(cfg(), bits.iter().copied())
    }

    #[test]
    fn binary_tanimoto_examples() {
        assert_eq!(tanimoto(&v(&[0, 1]), &v(&[0, 1])).unwrap(), 1.0);
        assert_eq!(tanimoto(&v(&[0, 1]), &v(&[2, 3])).unwrap(), 0.0);
        assert_eq!(tanimoto(&v(&[0, 1]), &v(&[0, 2])).unwrap(), 1.0 / 3.0);
        assert_eq!(tanimoto(&v(&[]), &v(&[])).unwrap(), 1.0);
        let other = FingerprintVector::zeros(FingerprintConfig::new(1, 64, 0).unwrap());
        assert!(tanimoto(&v(&[1]), &other).is_err());
    }

    #[test]
    fn continuous_tanimoto() {
        assert_eq!(
            tanimoto_continuous(&[1.0, 1.0, 0.0], &[1.0, 0.0, 1.0]).unwrap(),
            1.0 / 3.0
        );
        assert_eq!(
            tanimoto_continuous::<f32>(&[0.0, 0.0], &[0.0, 0.0]).unwrap(),
            1.0
        );
        let t = tanimoto_continuous(&[0.5f64, 2.0], &[1.0, 1.0]).unwrap();
        assert!((t - 2.5 / (4.25 + 2.0 - 2.5)).abs() < 1e-15);
        assert!(tanimoto_continuous(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn string_similarity_examples() {
        assert_eq!(string_similarity("CCO", "CCO"), 1.0);
        assert_eq!(string_similarity("A", "B"), 0.0);
        assert!((string_similarity("CCO", "CCC") - 2.0 / 3.0).abs() < 1e-15);
        assert!((string_similarity("ABCBDAB", "BDCABA") - 8.0 / 13.0).abs() < 1e-15);
    }

    #[test]
    fn matrix_shape_and_csv() {
        let items = vec![v(&[0, 1]), v(&[0, 1]), v(&[5])];
        let (sim, dist) = distance_matrix(&items).unwrap();
        assert_eq!(sim.n(), 3);
        assert_eq!(sim.get(0, 1), 1.0);
        assert_eq!(dist.get(0, 2), 1.0);
        let mut buf = Vec::new();
        let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        sim.write_csv(&ids, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("id,a,b,c"));
        assert_eq!(text.lines().nth(1), Some("a,1,1,0"));
        assert!(similarity_matrix(&items[..1]).is_err());
    }

    #[test]
    fn matrix_validation() {
        assert!(SimilarityMatrix::new(2, vec![1.0, 0.5, 0.4, 1.0]).is_err());
        assert!(SimilarityMatrix::new(2, vec![1.0, 1.5, 1.5, 1.0]).is_err());
        assert!(DistanceMatrix::new(2, vec![0.1, 0.5, 0.5, 0.0]).is_err());
        assert!(DistanceMatrix::new(2, vec![0.0, f64::NAN, f64::NAN, 0.0]).is_err());
        assert!(DistanceMatrix::<f32>::new(2, vec![0.0, 0.5, 0.5, 0.0]).is_ok());
    }
}
