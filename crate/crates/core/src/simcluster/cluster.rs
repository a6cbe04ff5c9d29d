//! Agglomerative clustering with Lance-Williams updates.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DistanceMatrix, SimilarityError};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Complete,
    #[default]
    Average,
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        })
    }
}

impl FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            other => Err(format!(
                "unknown linkage `{other}` (single, complete, average)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// Cluster id per item, dense in `0..k` and numbered by first appearance.
    pub labels: Vec<usize>,
    pub k: usize,
    pub linkage: Linkage,
    /// Medoid item of each cluster, indexed by cluster id.
    pub representatives: Vec<usize>,
}

impl ClusterAssignment {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == cluster)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

fn cmp_scalar<T: Scalar>(a: T, b: T) -> Ordering {
    a.partial_cmp(&b).expect("distances are finite")
}

/// Merge clusters until `k` remain.
///
/// Each cluster lives in the slot of its smallest member. Every step merges
/// the closest pair of slots `(i, j)`, `i < j`; equal distances go to the
/// smallest `(i, j)` in lexicographic order. The merged cluster keeps slot
/// `i`.
pub fn hier_cluster<T: Scalar>(
    dist: &DistanceMatrix<T>,
    linkage: Linkage,
    k: usize,
) -> Result<ClusterAssignment, SimilarityError> {
    let n = dist.n();
    if k == 0 || k > n {
        return Err(SimilarityError::InvalidK { k, n });
    }
    let mut d: Vec<T> = (0..n * n).map(|x| dist.get(x / n, x % n)).collect();
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut slot_of: Vec<usize> = (0..n).collect();
    let nearest_above = |d: &[T], active: &[bool], i: usize| -> Option<(T, usize)> {
        let mut out: Option<(T, usize)> = None;
        for j in i + 1..n {
            if active[j] && out.is_none_or(|(bd, _)| cmp_scalar(d[i * n + j], bd) == Ordering::Less)
            {
                out = Some((d[i * n + j], j));
            }
        }
        out
    };
    // best[i] = closest active slot j > i
    let mut best: Vec<Option<(T, usize)>> = (0..n).map(|i| nearest_above(&d, &active, i)).collect();

    let mut clusters = n;
    while clusters > k {
        let mut pick: Option<(T, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            if let Some((bd, j)) = best[i] {
                if pick.is_none_or(|(pd, _, _)| cmp_scalar(bd, pd) == Ordering::Less) {
                    pick = Some((bd, i, j));
                }
            }
        }
        let (_, i, j) = pick.expect("more than k clusters remain");

        let (ni, nj) = (T::of(size[i] as f64), T::of(size[j] as f64));
        for m in 0..n {
            if !active[m] || m == i || m == j {
                continue;
            }
            let (dim, djm) = (d[i * n + m], d[j * n + m]);
            let merged = match linkage {
                Linkage::Single => dim.min(djm),
                Linkage::Complete => dim.max(djm),
                Linkage::Average => (ni * dim + nj * djm) / (ni + nj),
            };
            d[i * n + m] = merged;
            d[m * n + i] = merged;
        }
        active[j] = false;
        size[i] += size[j];
        for s in slot_of.iter_mut() {
            if *s == j {
                *s = i;
            }
        }
        clusters -= 1;

        best[j] = None;
        for m in 0..n {
            if !active[m] {
                continue;
            }
            let stale = m == i || matches!(best[m], Some((_, b)) if b == i || b == j);
            if stale {
                best[m] = nearest_above(&d, &active, m);
            } else if m < i {
                let cand = d[m * n + i];
                let better = match best[m] {
                    None => true,
                    Some((bd, b)) => match cmp_scalar(cand, bd) {
                        Ordering::Less => true,
                        Ordering::Equal => i < b,
                        Ordering::Greater => false,
                    },
                };
                if better {
                    best[m] = Some((cand, i));
                }
            }
        }
    }

    let mut label_of_slot = vec![usize::MAX; n];
    let mut labels = Vec::with_capacity(n);
    let mut next = 0;
    for &s in &slot_of {
        if label_of_slot[s] == usize::MAX {
            label_of_slot[s] = next;
            next += 1;
        }
        labels.push(label_of_slot[s]);
    }
    let representatives = medoid_representatives(&labels, k, dist);
    Ok(ClusterAssignment {
        labels,
        k,
        linkage,
        representatives,
    })
}

/// Per cluster, the member with the smallest summed distance to its
/// co-members; ties go to the lowest item index.
pub fn medoid_representatives<T: Scalar>(
    labels: &[usize],
    k: usize,
    dist: &DistanceMatrix<T>,
) -> Vec<usize> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    members
        .iter()
        .map(|ms| {
            let mut best: Option<(T, usize)> = None;
            for &x in ms {
                let total: T = ms.iter().map(|&y| dist.get(x, y)).sum();
                if best.is_none_or(|(bt, _)| cmp_scalar(total, bt) == Ordering::Less) {
                    best = Some((total, x));
                }
            }
            best.expect("clusters are non-empty").1
        })
        .collect()
}

/// Representatives of the `picks` largest clusters (ties by cluster id),
/// returned in ascending item order.
pub fn pick_representatives(
    a: &ClusterAssignment,
    picks: usize,
) -> Result<Vec<usize>, SimilarityError> {
    if picks > a.k {
        return Err(SimilarityError::TooManyPicks { picks, k: a.k });
    }
    let sizes = a.sizes();
    let mut order: Vec<usize> = (0..a.k).collect();
    order.sort_by(|&x, &y| sizes[y].cmp(&sizes[x]).then(x.cmp(&y)));
    let mut chosen: Vec<usize> = order[..picks]
        .iter()
        .map(|&c| a.representatives[c])
        .collect();
    chosen.sort_unstable();
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> DistanceMatrix<f64> {
        DistanceMatrix::from_fn(points.len(), |i, j| (points[i] - points[j]).abs()).unwrap()
    }

    #[test]
    fn degenerate_k() {
        let d = line(&[0.0, 1.0, 3.0, 7.0]);
        for linkage in [Linkage::Single, Linkage::Complete, Linkage::Average] {
            let all = hier_cluster(&d, linkage, 4).unwrap();
            assert_eq!(all.labels, vec![0, 1, 2, 3]);
            assert_eq!(all.representatives, vec![0, 1, 2, 3]);
            let one = hier_cluster(&d, linkage, 1).unwrap();
            assert_eq!(one.labels, vec![0; 4]);
        }
        assert!(matches!(
            hier_cluster(&d, Linkage::Average, 0),
            Err(SimilarityError::InvalidK { .. })
        ));
        assert!(hier_cluster(&d, Linkage::Average, 5).is_err());
    }

    #[test]
    fn linkages_differ_on_a_chain() {
        // 0 - 1 - 2 evenly spaced, 3 far off: single chains 0..2 first.
        let d = line(&[0.0, 1.0, 2.0, 2.9, 10.0]);
        let s = hier_cluster(&d, Linkage::Single, 2).unwrap();
        assert_eq!(s.labels, vec![0, 0, 0, 0, 1]);
        let c = hier_cluster(&d, Linkage::Complete, 3).unwrap();
        assert_eq!(c.labels, vec![0, 0, 1, 1, 2]);
    }

    #[test]
    fn ties_merge_smallest_pair_first() {
        let d = DistanceMatrix::from_fn(4, |_, _| 1.0).unwrap();
        let a = hier_cluster(&d, Linkage::Single, 3).unwrap();
        assert_eq!(a.labels, vec![0, 0, 1, 2]);
        let b = hier_cluster(&d, Linkage::Single, 2).unwrap();
        assert_eq!(b.labels, vec![0, 0, 0, 1]);
    }

    #[test]
    fn medoids() {
        let d = line(&[0.0, 1.0, 2.0]);
        assert_eq!(medoid_representatives(&[0, 0, 0], 1, &d), vec![1]);
        assert_eq!(medoid_representatives(&[0, 0, 1], 2, &d), vec![0, 2]);
        assert_eq!(medoid_representatives(&[0, 1, 2], 3, &d), vec![0, 1, 2]);
    }

    #[test]
    fn picks_follow_cluster_size() {
        let d = line(&[0.0, 0.1, 0.2, 5.0, 5.1, 9.0]);
        let a = hier_cluster(&d, Linkage::Average, 3).unwrap();
        assert_eq!(a.sizes(), vec![3, 2, 1]);
        assert_eq!(pick_representatives(&a, 2).unwrap(), vec![1, 3]);
        assert!(pick_representatives(&a, 4).is_err());
    }

    #[test]
    fn f32_matrices_cluster() {
        let d =
            DistanceMatrix::<f32>::from_fn(4, |i, j| if (i < 2) == (j < 2) { 0.05 } else { 0.95 })
                .unwrap();
        assert_eq!(
            hier_cluster(&d, Linkage::Average, 2).unwrap().labels,
            vec![0, 0, 1, 1]
        );
    }
}
