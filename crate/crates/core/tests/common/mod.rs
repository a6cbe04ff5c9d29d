#![allow(dead_code)]

use std::path::PathBuf;

use screenforge::chem::{BondOrder, Molecule};
use screenforge::parse_smiles;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

/// `(id, smiles)` pairs of a `.smi` file.
pub fn read_smi(name: &str) -> Vec<(String, String)> {
    let text = std::fs::read_to_string(data_path(name)).expect("bundled data file");
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let mut parts = l.split_whitespace();
            let smiles = parts.next().unwrap().to_string();
            let id = parts.next().unwrap_or("").to_string();
            (id, smiles)
        })
        .collect()
}

/// Every bundled structure: the reference corpus plus the screening fixture.
pub fn corpus() -> Vec<(String, Molecule)> {
    let mut out: Vec<(String, Molecule)> = read_smi("corpus.smi")
        .into_iter()
        .map(|(id, s)| (id, parse_smiles(&s).expect("corpus parses")))
        .collect();
    let text = std::fs::read_to_string(data_path("fixture30.csv")).unwrap();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        out.push((cols[0].to_string(), parse_smiles(cols[2]).unwrap()));
    }
    out
}

type AtomKey = (u8, i8, Option<u16>, bool, u32);

fn atom_keys(m: &Molecule) -> Vec<AtomKey> {
    (0..m.atom_count())
        .map(|i| {
            let a = m.atom(i);
            (
                a.element.atomic_number(),
                a.formal_charge,
                a.isotope,
                a.aromatic,
                m.total_hydrogens(i),
            )
        })
        .collect()
}

fn bond_table(m: &Molecule) -> Vec<Vec<Option<BondOrder>>> {
    let n = m.atom_count();
    let mut t = vec![vec![None; n]; n];
    for b in m.bonds() {
        t[b.a][b.b] = Some(b.order);
        t[b.b][b.a] = Some(b.order);
    }
    t
}

/// Exhaustive search for an atom bijection preserving element, charge,
/// isotope, aromaticity, hydrogen count and bond orders. Stereo marks are
/// ignored.
pub fn isomorphic(a: &Molecule, b: &Molecule) -> bool {
    let n = a.atom_count();
    if n != b.atom_count() || a.bonds().len() != b.bonds().len() {
        return false;
    }
    let (ka, kb) = (atom_keys(a), atom_keys(b));
    let mut sa = ka.clone();
    let mut sb = kb.clone();
    sa.sort();
    sb.sort();
    if sa != sb {
        return false;
    }
    let (ta, tb) = (bond_table(a), bond_table(b));
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    extend(0, &ka, &kb, &ta, &tb, &mut map, &mut used)
}

fn extend(
    i: usize,
    ka: &[AtomKey],
    kb: &[AtomKey],
    ta: &[Vec<Option<BondOrder>>],
    tb: &[Vec<Option<BondOrder>>],
    map: &mut [usize],
    used: &mut [bool],
) -> bool {
    let n = ka.len();
    if i == n {
        return true;
    }
    for j in 0..n {
        if used[j] || ka[i] != kb[j] {
            continue;
        }
        if (0..i).any(|p| ta[i][p] != tb[j][map[p]]) {
            continue;
        }
        map[i] = j;
        used[j] = true;
        if extend(i + 1, ka, kb, ta, tb, map, used) {
            return true;
        }
        used[j] = false;
    }
    map[i] = usize::MAX;
    false
}

const RINGS: [&str; 4] = ["c1ccccc1", "c1ccncc1", "c1ccsc1", "C1CCCCC1"];
const TAILS: [&str; 10] = [
    "O", "N", "Cl", "F", "C(=O)O", "C#N", "S", "Br", "C(=O)N", "OC",
];

/// Distinct drug-like SMILES: a ring, a linker chain of 1..=6 carbons and a
/// terminal group. 240 structures in a fixed order.
pub fn synthetic_library() -> Vec<String> {
    let mut out = Vec::new();
    for ring in RINGS {
        for len in 1..=6 {
            for tail in TAILS {
                out.push(format!("{ring}{}{tail}", "C".repeat(len)));
            }
        }
    }
    out
}
