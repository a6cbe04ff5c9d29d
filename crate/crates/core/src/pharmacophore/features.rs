//! Rule-based pharmacophore feature perception.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chem::{BondOrder, Element, Molecule};
use crate::descriptors::{is_amide_nitrogen, Constants};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureKind {
    #[serde(rename = "HBD")]
    Hbd,
    #[serde(rename = "HBA")]
    Hba,
    Hydrophobe,
    AromaticRing,
    NegIonizable,
    PosIonizable,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Hbd => "HBD",
            FeatureKind::Hba => "HBA",
            FeatureKind::Hydrophobe => "Hydrophobe",
            FeatureKind::AromaticRing => "AromaticRing",
            FeatureKind::NegIonizable => "NegIonizable",
            FeatureKind::PosIonizable => "PosIonizable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PharmFeature {
    pub kind: FeatureKind,
    /// Sorted atom indices the feature sits on.
    pub anchor: Vec<usize>,
}

fn components(
    n: usize,
    member: impl Fn(usize) -> bool,
    linked: impl Fn(usize, usize) -> bool,
    mol: &Molecule,
) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] || !member(start) {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for (v, _) in mol.neighbors(u) {
                if !seen[v] && member(v) && linked(u, v) {
                    seen[v] = true;
                    comp.push(v);
                    stack.push(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Acid groups: C, S or P carrying `=O` and at least one `-OH` or `-O⁻`.
/// Returns the central atom with its acidic and carbonyl oxygens.
fn acid_groups(mol: &Molecule) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for i in 0..mol.atom_count() {
        if !matches!(mol.atom(i).element, Element::C | Element::S | Element::P) {
            continue;
        }
        let mut oxo = Vec::new();
        let mut acidic = Vec::new();
        for (j, b) in mol.neighbors(i) {
            let o = mol.atom(j);
            if o.element != Element::O || mol.heavy_degree(j) != 1 {
                continue;
            }
            match b.order {
                BondOrder::Double => oxo.push(j),
                BondOrder::Single if o.formal_charge < 0 || mol.total_hydrogens(j) > 0 => {
                    acidic.push(j)
                }
                _ => {}
            }
        }
        if !oxo.is_empty() && !acidic.is_empty() {
            let mut g = vec![i];
            g.extend(oxo);
            g.extend(acidic);
            g.sort_unstable();
            out.push(g);
        }
    }
    out
}

/// Neutral sp3 amine nitrogen not attached to aromatic atoms, multiple bonds
/// or carbonyl-type carbons.
fn is_basic_amine(mol: &Molecule, i: usize) -> bool {
    let a = mol.atom(i);
    a.element == Element::N
        && !a.aromatic
        && a.formal_charge == 0
        && !is_amide_nitrogen(mol, i)
        && mol.neighbors(i).all(|(j, b)| {
            b.order == BondOrder::Single
                && !mol.atom(j).aromatic
                && !mol
                    .neighbors(j)
                    .any(|(_, b2)| b2.order != BondOrder::Single)
        })
}

/// Features of `mol`, ordered by kind and then by smallest anchor atom.
///
/// * HBD: N or O with at least one hydrogen.
/// * HBA: N or O counted as an acceptor by the descriptor rules.
/// * Hydrophobe: connected non-aromatic carbon regions of at least 3 atoms.
/// * AromaticRing: aromatic atoms joined by ring bonds, one per fused system.
/// * NegIonizable: acid groups, and any other negatively charged atom.
/// * PosIonizable: positively charged atoms without a negative neighbour,
///   and basic aliphatic amines.
pub fn detect_features(mol: &Molecule, constants: &Constants) -> Vec<PharmFeature> {
    let n = mol.atom_count();
    let exclude_amide = constants
        .get("admet", "hba.exclude_amide_n")
        .is_some_and(|v| v != 0.0);
    let mut out = Vec::new();
    let single = |kind, i| PharmFeature {
        kind,
        anchor: vec![i],
    };
    for i in 0..n {
        let e = mol.atom(i).element;
        if matches!(e, Element::N | Element::O) && mol.total_hydrogens(i) > 0 {
            out.push(single(FeatureKind::Hbd, i));
        }
    }
    for i in 0..n {
        let e = mol.atom(i).element;
        if matches!(e, Element::N | Element::O) && !(exclude_amide && is_amide_nitrogen(mol, i)) {
            out.push(single(FeatureKind::Hba, i));
        }
    }
    let carbon = |i: usize| mol.atom(i).element == Element::C && !mol.atom(i).aromatic;
    for comp in components(n, carbon, |_, _| true, mol) {
        if comp.len() >= 3 {
            out.push(PharmFeature {
                kind: FeatureKind::Hydrophobe,
                anchor: comp,
            });
        }
    }
    let aromatic = |i: usize| mol.atom(i).aromatic;
    let ring_link = |u: usize, v: usize| {
        mol.adjacent(u)
            .iter()
            .any(|&(w, k)| w == v && mol.is_ring_bond(k))
    };
    for comp in components(n, aromatic, ring_link, mol) {
        out.push(PharmFeature {
            kind: FeatureKind::AromaticRing,
            anchor: comp,
        });
    }
    let acids = acid_groups(mol);
    let in_acid = |i: usize| acids.iter().any(|g| g.contains(&i));
    let mut neg: Vec<Vec<usize>> = acids.clone();
    for i in 0..n {
        let a = mol.atom(i);
        let next_to_cation = mol.neighbors(i).any(|(j, _)| mol.atom(j).formal_charge > 0);
        if a.formal_charge < 0 && !in_acid(i) && !next_to_cation {
            neg.push(vec![i]);
        }
    }
    neg.sort();
    out.extend(neg.into_iter().map(|anchor| PharmFeature {
        kind: FeatureKind::NegIonizable,
        anchor,
    }));
    for i in 0..n {
        let a = mol.atom(i);
        let zwitter = mol.neighbors(i).any(|(j, _)| mol.atom(j).formal_charge < 0);
        if (a.formal_charge > 0 && !zwitter) || is_basic_amine(mol, i) {
            out.push(single(FeatureKind::PosIonizable, i));
        }
    }
    out.sort_by(|a, b| a.kind.cmp(&b.kind).then_with(|| a.anchor.cmp(&b.anchor)));
    out
}

/// Features of a molecule with their pairwise bond-path distances, the
/// minimum over anchor atoms; `None` across fragments.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub features: Vec<PharmFeature>,
    pub distances: Vec<Vec<Option<u32>>>,
}

impl FeatureMap {
    pub fn new(mol: &Molecule, constants: &Constants) -> Self {
        let features = detect_features(mol, constants);
        let atom_dist: Vec<Vec<Option<u32>>> = (0..mol.atom_count())
            .map(|i| mol.path_distances(i))
            .collect();
        let m = features.len();
        let mut distances = vec![vec![Some(0); m]; m];
        for a in 0..m {
            for b in a + 1..m {
                let d = features[a]
                    .anchor
                    .iter()
                    .flat_map(|&x| features[b].anchor.iter().map(move |&y| (x, y)))
                    .filter_map(|(x, y)| atom_dist[x][y])
                    .min();
                distances[a][b] = d;
                distances[b][a] = d;
            }
        }
        FeatureMap {
            features,
            distances,
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn kinds(s: &str) -> Vec<FeatureKind> {
        detect_features(&parse_smiles(s).unwrap(), &Constants::default())
            .into_iter()
            .map(|f| f.kind)
            .collect()
    }

    #[test]
    fn reference_molecules() {
        use FeatureKind::*;
        assert_eq!(kinds("c1ccccc1"), vec![AromaticRing]);
        assert_eq!(kinds("Oc1ccccc1"), vec![Hbd, Hba, AromaticRing]);
        assert_eq!(kinds("CCC"), vec![Hydrophobe]);
        assert_eq!(kinds("CC"), Vec::<FeatureKind>::new());
        assert_eq!(kinds("c1ccc2ccccc2c1"), vec![AromaticRing]);
        assert_eq!(kinds("c1ccccc1-c1ccccc1"), vec![AromaticRing, AromaticRing]);
        assert_eq!(kinds("CC(=O)O"), vec![Hbd, Hba, Hba, NegIonizable]);
        assert_eq!(kinds("CCN"), vec![Hbd, Hba, PosIonizable]);
        assert_eq!(kinds("CC(=O)N"), vec![Hbd, Hba, Hba]);
        assert_eq!(
            kinds("O=[N+]([O-])c1ccccc1"),
            vec![Hba, Hba, Hba, AromaticRing]
        );
        assert_eq!(kinds("C[N+](C)(C)C"), vec![Hba, PosIonizable]);
    }

    #[test]
    fn distances_use_nearest_anchor_atoms() {
        let m = parse_smiles("Oc1ccccc1CCCN").unwrap();
        let fm = FeatureMap::new(&m, &Constants::default());
        let ring = fm
            .features
            .iter()
            .position(|f| f.kind == FeatureKind::AromaticRing)
            .unwrap();
        let hyd = fm
            .features
            .iter()
            .position(|f| f.kind == FeatureKind::Hydrophobe)
            .unwrap();
        assert_eq!(fm.distances[ring][hyd], Some(1));
        assert_eq!(fm.distances[0][0], Some(0));
        let split = FeatureMap::new(&parse_smiles("O.CCC").unwrap(), &Constants::default());
        assert_eq!(split.distances[0][2], None);
    }
}
