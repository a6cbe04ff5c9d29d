//! Additive logP over a reduced Wildman-Crippen atom-type table.

use serde::{Deserialize, Serialize};

use crate::chem::{BondOrder, Element, Molecule};

use super::{Constants, DescriptorError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogPEstimate {
    pub value: f64,
    /// Atoms that matched no table row and contributed the fallback value.
    pub untyped: Vec<usize>,
}

impl LogPEstimate {
    /// The value, or `UntypedAtom` when any atom fell through the table.
    pub fn strict(self) -> Result<f64, DescriptorError> {
        if self.untyped.is_empty() {
            Ok(self.value)
        } else {
            Err(DescriptorError::UntypedAtom {
                atoms: self.untyped,
            })
        }
    }
}

fn is_hetero(e: Element) -> bool {
    !matches!(e, Element::C | Element::H)
}

fn is_halogen(e: Element) -> bool {
    matches!(e, Element::F | Element::Cl | Element::Br | Element::I)
}

/// Table row for heavy atom `i`, or `None` when no row applies.
pub fn logp_atom_type(mol: &Molecule, i: usize) -> Option<&'static str> {
    let atom = mol.atom(i);
    let heavy: Vec<(usize, BondOrder)> = mol
        .neighbors(i)
        .filter(|&(j, _)| mol.is_heavy(j))
        .map(|(j, b)| (j, b.order))
        .collect();
    let el = |j: usize| mol.atom(j).element;
    let has_order = |o: BondOrder| heavy.iter().any(|&(_, b)| b == o);
    let h = mol.total_hydrogens(i);
    let ty = match atom.element {
        Element::C if atom.aromatic => {
            if heavy
                .iter()
                .any(|&(j, b)| b == BondOrder::Double && is_hetero(el(j)))
            {
                "c.exo_double"
            } else if h >= 1 {
                "c.h"
            } else {
                match heavy.iter().find(|&&(_, b)| b != BondOrder::Aromatic) {
                    None => "c.fused",
                    Some(&(j, _)) => match el(j) {
                        Element::C if mol.atom(j).aromatic => "c.aryl",
                        Element::C => "c.carbon",
                        Element::N => "c.nitrogen",
                        Element::O => "c.oxygen",
                        Element::S => "c.sulfur",
                        e if is_halogen(e) => "c.halogen",
                        _ => return None,
                    },
                }
            }
        }
        Element::C => {
            if has_order(BondOrder::Triple) {
                "C.alkyne"
            } else if heavy
                .iter()
                .any(|&(j, b)| b == BondOrder::Double && is_hetero(el(j)))
            {
                "C.carbonyl"
            } else if has_order(BondOrder::Double) {
                "C.alkene"
            } else if heavy.iter().any(|&(j, _)| is_hetero(el(j))) {
                "C.sp3.hetero"
            } else if heavy.iter().any(|&(j, _)| mol.atom(j).aromatic) {
                "C.sp3.aryl"
            } else if h >= 2 {
                "C.sp3"
            } else {
                "C.sp3.branched"
            }
        }
        Element::N => {
            if atom.formal_charge != 0 {
                "N.charged"
            } else if atom.aromatic {
                "n.aromatic"
            } else if has_order(BondOrder::Triple) {
                "N.nitrile"
            } else if has_order(BondOrder::Double) {
                "N.imine"
            } else if heavy.iter().any(|&(j, _)| mol.atom(j).aromatic) {
                "N.aniline"
            } else {
                match h {
                    0 => "N.amine.tertiary",
                    1 => "N.amine.secondary",
                    _ => "N.amine.primary",
                }
            }
        }
        Element::O => {
            if atom.aromatic {
                "o.aromatic"
            } else if atom.formal_charge < 0 {
                "O.anion"
            } else if let Some(&(j, _)) = heavy.iter().find(|&&(_, b)| b == BondOrder::Double) {
                if el(j) != Element::C {
                    "O.oxide"
                } else {
                    let conjugated = mol.atom(j).aromatic
                        || mol.neighbors(j).any(|(k, b)| {
                            k != i
                                && (mol.atom(k).aromatic
                                    || (b.order == BondOrder::Double
                                        && mol.atom(k).element == Element::C))
                        });
                    if conjugated {
                        "O.carbonyl.conjugated"
                    } else {
                        "O.carbonyl"
                    }
                }
            } else if h >= 1 {
                "O.hydroxyl"
            } else if heavy.iter().any(|&(j, _)| mol.atom(j).aromatic) {
                "O.ether.aryl"
            } else {
                "O.ether"
            }
        }
        Element::S if atom.aromatic => "s.aromatic",
        Element::S => {
            if heavy
                .iter()
                .any(|&(j, b)| b == BondOrder::Double && el(j) == Element::O)
            {
                "S.oxidized"
            } else {
                "S.thioether"
            }
        }
        Element::P => "P.any",
        Element::F => "F.any",
        Element::Cl => "Cl.any",
        Element::Br => "Br.any",
        Element::I => "I.any",
        _ => return None,
    };
    Some(ty)
}

fn hydrogen_type(e: Element) -> &'static str {
    match e {
        Element::C => "H.carbon",
        Element::N => "H.nitrogen",
        Element::O => "H.oxygen",
        _ => "H.other",
    }
}

/// Sum of heavy-atom and hydrogen contributions from the `[logp]` table.
///
/// Explicit `[H]` atoms count through the heavy atom they are bonded to.
/// Hydrogen atoms with no heavy neighbour, and heavy atoms without a row,
/// add `fallback` and are listed in `untyped`.
pub fn wlogp(mol: &Molecule, constants: &Constants) -> LogPEstimate {
    let row = |key: &str| constants.get("logp", key);
    let fallback = row("fallback").unwrap_or(0.0);
    let mut value = 0.0;
    let mut untyped = Vec::new();
    for i in 0..mol.atom_count() {
        let atom = mol.atom(i);
        if atom.element == Element::H {
            if mol.heavy_degree(i) == 0 {
                value += fallback;
                untyped.push(i);
            }
            continue;
        }
        match logp_atom_type(mol, i).and_then(row) {
            Some(v) => value += v,
            None => {
                value += fallback;
                untyped.push(i);
            }
        }
        let h = mol.total_hydrogens(i);
        if h > 0 {
            value += h as f64 * row(hydrogen_type(atom.element)).unwrap_or(fallback);
        }
    }
    LogPEstimate { value, untyped }
}
