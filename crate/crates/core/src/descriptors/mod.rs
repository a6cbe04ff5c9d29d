//! Physicochemical descriptors and rule-based ADME flags.
//!
//! Whole-molecule quantities (`molecular_weight`, `tpsa`, `wlogp`, `hbd_hba`)
//! work on whatever graph they are given; [`compute_descriptors`] strips the
//! input to its largest fragment first.

mod admet;
pub mod constants;
mod logp;
mod tpsa;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem::{BondOrder, Element, Molecule};

pub use admet::{admet_flags, AdmetFlags, Bioavailability, GiAbsorption};
pub use constants::Constants;
pub use logp::{logp_atom_type, wlogp, LogPEstimate};
pub use tpsa::{tpsa, tpsa_environment};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DescriptorError {
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("malformed formula `{0}`")]
    MalformedFormula(String),
    #[error("atoms {atoms:?} match no logP atom type")]
    UntypedAtom { atoms: Vec<usize> },
    #[error("invalid descriptor {field} = {value}")]
    InvalidDescriptor { field: &'static str, value: f64 },
    #[error("{source_name}:{line}: {msg}")]
    Constants {
        source_name: String,
        line: usize,
        msg: String,
    },
}

/// Anything with a defined average molecular weight.
pub trait MolecularWeight {
    fn molecular_weight(&self) -> Result<f64, DescriptorError>;
}

impl MolecularWeight for Molecule {
    fn molecular_weight(&self) -> Result<f64, DescriptorError> {
        Ok(self.average_mass())
    }
}

/// Formula strings such as `C15H10O6`: element symbols each followed by an
/// optional count. Order does not matter and repeated symbols add up.
impl MolecularWeight for str {
    fn molecular_weight(&self) -> Result<f64, DescriptorError> {
        let malformed = || DescriptorError::MalformedFormula(self.to_string());
        let bytes = self.as_bytes();
        if bytes.is_empty() {
            return Err(malformed());
        }
        let mut total = 0.0;
        let mut i = 0;
        while i < bytes.len() {
            if !bytes[i].is_ascii_uppercase() {
                return Err(malformed());
            }
            let start = i;
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_lowercase() {
                i += 1;
            }
            let symbol = &self[start..i];
            let element: Element = symbol
                .parse()
                .map_err(|_| DescriptorError::UnknownElement(symbol.to_string()))?;
            let digits_start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let count: u32 = if digits_start == i {
                1
            } else {
                self[digits_start..i].parse().map_err(|_| malformed())?
            };
            if count == 0 {
                return Err(malformed());
            }
            total += element.atomic_weight() * count as f64;
        }
        Ok(total)
    }
}

impl MolecularWeight for String {
    fn molecular_weight(&self) -> Result<f64, DescriptorError> {
        self.as_str().molecular_weight()
    }
}

/// Average molecular weight in g/mol, implicit hydrogens included.
pub fn molecular_weight<W: MolecularWeight + ?Sized>(input: &W) -> Result<f64, DescriptorError> {
    input.molecular_weight()
}

fn is_n_or_o(e: Element) -> bool {
    matches!(e, Element::N | Element::O)
}

/// Nitrogen single-bonded to a carbon that carries `=O` or `=S`.
pub(crate) fn is_amide_nitrogen(mol: &Molecule, i: usize) -> bool {
    let atom = mol.atom(i);
    if atom.element != Element::N || atom.aromatic {
        return false;
    }
    mol.neighbors(i).any(|(j, b)| {
        b.order == BondOrder::Single
            && mol.atom(j).element == Element::C
            && mol.neighbors(j).any(|(k, b2)| {
                b2.order == BondOrder::Double
                    && matches!(mol.atom(k).element, Element::O | Element::S)
            })
    })
}

/// Hydrogen-bond donors (hydrogens on N or O) and acceptors (N and O atoms).
pub fn hbd_hba(mol: &Molecule, constants: &Constants) -> (u32, u32) {
    let exclude_amide = constants.admet_flag("hba.exclude_amide_n");
    let mut hbd = 0;
    let mut hba = 0;
    for i in 0..mol.atom_count() {
        if !is_n_or_o(mol.atom(i).element) {
            continue;
        }
        hbd += mol.total_hydrogens(i);
        if !(exclude_amide && is_amide_nitrogen(mol, i)) {
            hba += 1;
        }
    }
    (hbd, hba)
}

/// Acyclic single bonds between two non-terminal heavy atoms, excluding
/// bonds next to a triple bond.
pub fn rotatable_bonds(mol: &Molecule) -> u32 {
    let has_triple = |i: usize| mol.neighbors(i).any(|(_, b)| b.order == BondOrder::Triple);
    mol.bonds()
        .iter()
        .enumerate()
        .filter(|&(k, b)| {
            b.order == BondOrder::Single
                && !mol.is_ring_bond(k)
                && mol.is_heavy(b.a)
                && mol.is_heavy(b.b)
                && mol.heavy_degree(b.a) >= 2
                && mol.heavy_degree(b.b) >= 2
                && !has_triple(b.a)
                && !has_triple(b.b)
        })
        .count() as u32
}

/// Carries a negative charge or an acidic OH on C(=O), S(=O) or P(=O).
pub fn is_anionic(mol: &Molecule) -> bool {
    (0..mol.atom_count()).any(|i| {
        let atom = mol.atom(i);
        if atom.formal_charge < 0 {
            return true;
        }
        if atom.element != Element::O || mol.total_hydrogens(i) != 1 || mol.heavy_degree(i) != 1 {
            return false;
        }
        mol.neighbors(i).any(|(j, _)| {
            matches!(mol.atom(j).element, Element::C | Element::S | Element::P)
                && mol.neighbors(j).any(|(k, b)| {
                    k != i && b.order == BondOrder::Double && mol.atom(k).element == Element::O
                })
        })
    })
}

/// Descriptor values for one compound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[non_exhaustive]
pub struct DescriptorSet {
    pub mw: f64,
    pub tpsa: f64,
    pub wlogp: f64,
    pub hbd: u32,
    pub hba: u32,
    pub rotatable_bonds: u32,
    pub heavy_atoms: u32,
    /// Acidic or negatively charged; selects the anion branch of the
    /// bioavailability buckets.
    pub anionic: bool,
}

impl DescriptorSet {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mw: f64,
        tpsa: f64,
        wlogp: f64,
        hbd: u32,
        hba: u32,
        rotatable_bonds: u32,
        heavy_atoms: u32,
        anionic: bool,
    ) -> Result<Self, DescriptorError> {
        if !(mw.is_finite() && mw > 0.0) {
            return Err(DescriptorError::InvalidDescriptor {
                field: "mw",
                value: mw,
            });
        }
        if !(tpsa.is_finite() && tpsa >= 0.0) {
            return Err(DescriptorError::InvalidDescriptor {
                field: "tpsa",
                value: tpsa,
            });
        }
        if !wlogp.is_finite() {
            return Err(DescriptorError::InvalidDescriptor {
                field: "wlogp",
                value: wlogp,
            });
        }
        Ok(DescriptorSet {
            mw,
            tpsa,
            wlogp,
            hbd,
            hba,
            rotatable_bonds,
            heavy_atoms,
            anionic,
        })
    }

    /// Field order used when descriptors become network inputs.
    pub const FEATURE_NAMES: [&'static str; 7] = [
        "mw",
        "tpsa",
        "wlogp",
        "hbd",
        "hba",
        "rotatable_bonds",
        "heavy_atoms",
    ];

    pub fn as_features(&self) -> [f64; 7] {
        [
            self.mw,
            self.tpsa,
            self.wlogp,
            self.hbd as f64,
            self.hba as f64,
            self.rotatable_bonds as f64,
            self.heavy_atoms as f64,
        ]
    }
}

/// Descriptor set of the largest fragment. Untyped logP atoms are logged and
/// contribute the fallback value.
pub fn compute_descriptors(
    mol: &Molecule,
    constants: &Constants,
) -> Result<DescriptorSet, DescriptorError> {
    let frag = mol.largest_fragment();
    let logp = wlogp(&frag, constants);
    if !logp.untyped.is_empty() {
        log::warn!(
            "{frag}: atoms {:?} have no logP type, fallback used",
            logp.untyped
        );
    }
    let (hbd, hba) = hbd_hba(&frag, constants);
    DescriptorSet::new(
        molecular_weight(&frag)?,
        tpsa(&frag, constants),
        logp.value,
        hbd,
        hba,
        rotatable_bonds(&frag),
        frag.heavy_atom_count() as u32,
        is_anionic(&frag),
    )
}
