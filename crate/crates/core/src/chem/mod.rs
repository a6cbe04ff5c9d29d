//! Molecular graphs parsed from SMILES.
//!
//! A [`Molecule`] is immutable once built: hydrogen counts, ring bonds, rings
//! and fragments are derived in the constructor and every later operation
//! returns a new value.

mod canon;
mod element;
pub mod graph;
mod parse;
pub mod smi;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canon::{canonical_ranks, canonical_smiles};
pub use element::Element;
pub use parse::parse_smiles;

/// Formal charges outside this range are rejected.
pub const MAX_ABS_CHARGE: i8 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChemError {
    #[error("empty SMILES")]
    Empty,
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("ring closure {digit} is never closed")]
    UnclosedRing { digit: u32 },
    #[error("unbalanced parenthesis at {pos}")]
    UnbalancedParenthesis { pos: usize },
    #[error("unknown or unsupported element '{0}'")]
    UnknownElement(String),
    #[error("valence violation on atom {atom} ({element}): bond order sum {bond_sum}")]
    ValenceViolation {
        atom: usize,
        element: Element,
        bond_sum: u32,
    },
    #[error("unsupported SMILES feature at {pos}: {feature}")]
    UnsupportedFeature { pos: usize, feature: String },
    #[error("invalid bond {a}-{b}: {reason}")]
    InvalidBond { a: usize, b: usize, reason: String },
    #[error("invalid atom {atom}: {reason}")]
    InvalidAtom { atom: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Chirality {
    /// `@`
    Anticlockwise,
    /// `@@`
    Clockwise,
}

impl Chirality {
    pub fn symbol(self) -> &'static str {
        match self {
            Chirality::Anticlockwise => "@",
            Chirality::Clockwise => "@@",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    pub formal_charge: i8,
    pub isotope: Option<u16>,
    pub aromatic: bool,
    /// Hydrogen count written inside brackets. `None` for bare atoms, whose
    /// hydrogens follow the default valence rules.
    pub explicit_h: Option<u8>,
    /// Recorded, never interpreted.
    pub chirality: Option<Chirality>,
}

impl Atom {
    pub fn bare(element: Element, aromatic: bool) -> Self {
        Atom {
            element,
            formal_charge: 0,
            isotope: None,
            aromatic,
            explicit_h: None,
            chirality: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to the valence sum used for implicit hydrogens.
    pub fn valence(self) -> u32 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

/// Directional single-bond marker (`/` or `\`), kept as an annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BondStereo {
    Up,
    Down,
}

impl BondStereo {
    pub fn symbol(self) -> char {
        match self {
            BondStereo::Up => '/',
            BondStereo::Down => '\\',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub stereo: Option<BondStereo>,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Self {
        Bond {
            a,
            b,
            order,
            stereo: None,
        }
    }

    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// Hydrogens implied on a bare (unbracketed) atom.
///
/// Aromatic carbon reserves one valence for its pi bond unless it already
/// carries an explicit double or triple bond. Aromatic heteroatoms never get
/// implicit hydrogens; pyrrole-type nitrogen must be written `[nH]`.
/// Returns the offending bond-order sum when no allowed valence fits.
pub(crate) fn bare_hydrogens(
    element: Element,
    aromatic: bool,
    orders: impl IntoIterator<Item = BondOrder>,
) -> Result<u8, u32> {
    let mut sum = 0u32;
    let mut has_multiple = false;
    for order in orders {
        sum += order.valence();
        has_multiple |= matches!(order, BondOrder::Double | BondOrder::Triple);
    }
    let valences = element.default_valences();
    let max = *valences.last().ok_or(sum)? as u32;
    if aromatic {
        if element == Element::C {
            let used = sum + u32::from(!has_multiple);
            return 4u32.checked_sub(used).map(|h| h as u8).ok_or(sum);
        }
        return if sum <= max { Ok(0) } else { Err(sum) };
    }
    valences
        .iter()
        .map(|&v| v as u32)
        .find(|&v| v >= sum)
        .map(|v| (v - sum) as u8)
        .ok_or(sum)
}

/// Validated, immutable molecular graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<(usize, usize)>>,
    hydrogens: Vec<u8>,
    ring_bond: Vec<bool>,
    rings: Vec<Vec<usize>>,
    fragment_count: usize,
}

impl Molecule {
    /// Build a molecule, checking every structural invariant.
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, ChemError> {
        if atoms.is_empty() {
            return Err(ChemError::Empty);
        }
        let n = atoms.len();
        for (i, atom) in atoms.iter().enumerate() {
            if atom.formal_charge.abs() > MAX_ABS_CHARGE {
                return Err(ChemError::InvalidAtom {
                    atom: i,
                    reason: format!("formal charge {} out of range", atom.formal_charge),
                });
            }
            if atom.aromatic && !atom.element.can_be_aromatic() {
                return Err(ChemError::InvalidAtom {
                    atom: i,
                    reason: format!("{} cannot be aromatic", atom.element),
                });
            }
            if atom.explicit_h.is_none() && !atom.element.is_organic_subset() {
                return Err(ChemError::InvalidAtom {
                    atom: i,
                    reason: format!("{} must be bracketed", atom.element),
                });
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for (k, bond) in bonds.iter().enumerate() {
            let (a, b) = (bond.a, bond.b);
            let invalid = |reason: &str| ChemError::InvalidBond {
                a,
                b,
                reason: reason.to_string(),
            };
            if a >= n || b >= n {
                return Err(invalid("endpoint out of range"));
            }
            if a == b {
                return Err(invalid("endpoints coincide"));
            }
            if adjacency[a].iter().any(|&(j, _)| j == b) {
                return Err(invalid("duplicate bond"));
            }
            if bond.order == BondOrder::Aromatic && !(atoms[a].aromatic && atoms[b].aromatic) {
                return Err(invalid("aromatic bond between non-aromatic atoms"));
            }
            adjacency[a].push((b, k));
            adjacency[b].push((a, k));
        }

        let mut hydrogens = Vec::with_capacity(n);
        for (i, atom) in atoms.iter().enumerate() {
            let h = match atom.explicit_h {
                Some(h) => h,
                None => {
                    let orders = adjacency[i].iter().map(|&(_, k)| bonds[k].order);
                    bare_hydrogens(atom.element, atom.aromatic, orders).map_err(|bond_sum| {
                        ChemError::ValenceViolation {
                            atom: i,
                            element: atom.element,
                            bond_sum,
                        }
                    })?
                }
            };
            hydrogens.push(h);
        }

        let ring_bond = graph::ring_bonds(n, &bonds, &adjacency);
        let rings = graph::smallest_rings(n, &bonds, &adjacency);
        let fragment_count = graph::components(&adjacency).len();
        Ok(Molecule {
            atoms,
            bonds,
            adjacency,
            hydrogens,
            ring_bond,
            rings,
            fragment_count,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Neighbors of atom `i` as `(neighbor, bond)` pairs.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, &Bond)> + '_ {
        self.adjacency[i]
            .iter()
            .map(move |&(j, k)| (j, &self.bonds[k]))
    }

    /// Raw adjacency of atom `i` as `(neighbor, bond index)` pairs.
    pub fn adjacent(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    /// Shortest bond-path distance from `source` to every atom; `None` for
    /// atoms in other fragments.
    pub fn path_distances(&self, source: usize) -> Vec<Option<u32>> {
        graph::bfs_distances(&self.adjacency, source)
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// Neighbors that are not hydrogen atoms.
    pub fn heavy_degree(&self, i: usize) -> usize {
        self.neighbors(i)
            .filter(|(j, _)| self.atoms[*j].element != Element::H)
            .count()
    }

    /// Implicit or bracket hydrogens on atom `i` (excludes `[H]` neighbors).
    pub fn implicit_hydrogens(&self, i: usize) -> u8 {
        self.hydrogens[i]
    }

    /// All hydrogens attached to atom `i`, including explicit `[H]` atoms.
    pub fn total_hydrogens(&self, i: usize) -> u32 {
        let explicit = self
            .neighbors(i)
            .filter(|(j, _)| self.atoms[*j].element == Element::H)
            .count() as u32;
        self.hydrogens[i] as u32 + explicit
    }

    pub fn is_heavy(&self, i: usize) -> bool {
        self.atoms[i].element != Element::H
    }

    pub fn heavy_atom_count(&self) -> usize {
        (0..self.atoms.len()).filter(|&i| self.is_heavy(i)).count()
    }

    pub fn is_ring_bond(&self, bond: usize) -> bool {
        self.ring_bond[bond]
    }

    pub fn is_ring_atom(&self, i: usize) -> bool {
        self.adjacency[i].iter().any(|&(_, k)| self.ring_bond[k])
    }

    /// Smallest set of smallest rings, each as a cycle of atom indices.
    pub fn rings(&self) -> &[Vec<usize>] {
        &self.rings
    }

    pub fn fragment_count(&self) -> usize {
        self.fragment_count
    }

    /// Connected components, each sorted by atom index, ordered by first atom.
    pub fn fragments(&self) -> Vec<Vec<usize>> {
        graph::components(&self.adjacency)
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.neighbors(a)
            .find(|(j, _)| *j == b)
            .map(|(_, bond)| bond)
    }

    /// Sum of standard atomic weights, hydrogens included.
    pub fn average_mass(&self) -> f64 {
        self.element_counts()
            .iter()
            .map(|(e, &c)| e.atomic_weight() * c as f64)
            .sum()
    }

    /// Atom counts per element with implicit hydrogens folded into `H`.
    pub fn element_counts(&self) -> BTreeMap<Element, u32> {
        let mut counts = BTreeMap::new();
        for (i, atom) in self.atoms.iter().enumerate() {
            *counts.entry(atom.element).or_insert(0) += 1;
            let h = self.hydrogens[i] as u32;
            if h > 0 {
                *counts.entry(Element::H).or_insert(0) += h;
            }
        }
        counts
    }

    /// Hill-order formula: C, then H, then the rest alphabetically. Without
    /// carbon every element, H included, is alphabetical.
    pub fn molecular_formula(&self) -> String {
        hill_formula(&self.element_counts())
    }

    /// Induced subgraph over `keep`, atoms renumbered in ascending order.
    pub fn subgraph(&self, keep: &[usize]) -> Molecule {
        let mut sorted = keep.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut map = vec![usize::MAX; self.atoms.len()];
        for (new, &old) in sorted.iter().enumerate() {
            map[old] = new;
        }
        let atoms = sorted.iter().map(|&i| self.atoms[i].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .filter(|b| map[b.a] != usize::MAX && map[b.b] != usize::MAX)
            .map(|b| Bond {
                a: map[b.a],
                b: map[b.b],
                ..*b
            })
            .collect();
        Molecule::new(atoms, bonds).expect("induced subgraph of a valid molecule")
    }

    /// The connected component with the most heavy atoms. Ties go to the
    /// heavier component by total mass, then to the one holding the lowest
    /// original atom index.
    pub fn largest_fragment(&self) -> Molecule {
        if self.fragment_count == 1 {
            return self.clone();
        }
        let frags = self.fragments();
        let best = frags
            .iter()
            .map(|f| {
                let heavy = f.iter().filter(|&&i| self.is_heavy(i)).count();
                let mass: f64 = f
                    .iter()
                    .map(|&i| {
                        self.atoms[i].element.atomic_weight()
                            + self.hydrogens[i] as f64 * Element::H.atomic_weight()
                    })
                    .sum();
                (f, heavy, mass)
            })
            .max_by(|x, y| {
                x.1.cmp(&y.1)
                    .then(x.2.total_cmp(&y.2))
                    .then(y.0[0].cmp(&x.0[0]))
            })
            .map(|(f, _, _)| f.clone())
            .expect("at least one fragment");
        self.subgraph(&best)
    }

    /// Same graph with atom `i` moved to position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Molecule, ChemError> {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(ChemError::InvalidAtom {
                atom: 0,
                reason: "not a permutation".into(),
            });
        }
        let mut atoms = vec![self.atoms[0].clone(); n];
        for (i, atom) in self.atoms.iter().enumerate() {
            atoms[perm[i]] = atom.clone();
        }
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond {
                a: perm[b.a],
                b: perm[b.b],
                ..*b
            })
            .collect();
        Molecule::new(atoms, bonds)
    }
}

impl fmt::Display for Molecule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&canonical_smiles(self))
    }
}

pub(crate) fn hill_formula(counts: &BTreeMap<Element, u32>) -> String {
    let mut order: Vec<(Element, u32)> = counts
        .iter()
        .filter(|(_, &c)| c > 0)
        .map(|(&e, &c)| (e, c))
        .collect();
    let has_carbon = counts.get(&Element::C).copied().unwrap_or(0) > 0;
    order.sort_by_key(|&(e, _)| {
        let rank = match (has_carbon, e) {
            (true, Element::C) => 0,
            (true, Element::H) => 1,
            _ => 2,
        };
        (rank, e.symbol())
    });
    let mut out = String::new();
    for (e, c) in order {
        out.push_str(e.symbol());
        if c > 1 {
            out.push_str(&c.to_string());
        }
    }
    out
}
