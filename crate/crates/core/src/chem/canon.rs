//! Canonical atom ranking and SMILES output.
//!
//! Ranks start from a per-atom invariant and are refined by the sorted ranks
//! of bonded neighbours until the partition stops splitting. Remaining ties
//! are broken by promoting the lowest-indexed atom of the smallest tied class,
//! followed by another round of refinement.

use super::{bare_hydrogens, Bond, BondOrder, Molecule};

type Invariant = (u8, u16, i8, bool, u8, usize, u8);

fn atom_invariant(mol: &Molecule, i: usize) -> Invariant {
    let atom = mol.atom(i);
    (
        atom.element.atomic_number(),
        atom.isotope.unwrap_or(0),
        atom.formal_charge,
        atom.aromatic,
        mol.implicit_hydrogens(i),
        mol.degree(i),
        atom.chirality.map_or(0, |c| c as u8 + 1),
    )
}

fn bond_code(bond: &Bond) -> u8 {
    bond.order.code() * 4 + bond.stereo.map_or(0, |s| s as u8 + 1)
}

/// Dense ranks: equal keys share a rank, ranks follow key order.
fn dense_ranks<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).expect("key present"))
        .collect()
}

fn class_count(ranks: &[usize]) -> usize {
    ranks.iter().copied().max().map_or(0, |m| m + 1)
}

fn refine(mol: &Molecule, mut ranks: Vec<usize>) -> Vec<usize> {
    loop {
        let keys: Vec<(usize, Vec<(usize, u8)>)> = (0..mol.atom_count())
            .map(|i| {
                let mut nbrs: Vec<(usize, u8)> = mol
                    .neighbors(i)
                    .map(|(j, b)| (ranks[j], bond_code(b)))
                    .collect();
                nbrs.sort_unstable();
                (ranks[i], nbrs)
            })
            .collect();
        let next = dense_ranks(&keys);
        if class_count(&next) == class_count(&ranks) {
            return next;
        }
        ranks = next;
    }
}

/// Canonical rank of every atom; a permutation of `0..atom_count`.
pub fn canonical_ranks(mol: &Molecule) -> Vec<usize> {
    let n = mol.atom_count();
    let initial: Vec<Invariant> = (0..n).map(|i| atom_invariant(mol, i)).collect();
    let mut ranks = refine(mol, dense_ranks(&initial));
    while class_count(&ranks) < n {
        let mut counts = vec![0usize; n];
        for &r in &ranks {
            counts[r] += 1;
        }
        let tied = (0..n)
            .find(|&r| counts[r] > 1)
            .expect("a tied class exists");
        let chosen = (0..n)
            .find(|&i| ranks[i] == tied)
            .expect("class is non-empty");
        let split: Vec<(usize, bool)> = (0..n).map(|i| (ranks[i], i != chosen)).collect();
        ranks = refine(mol, dense_ranks(&split));
    }
    ranks
}

struct Writer<'a> {
    mol: &'a Molecule,
    ranks: Vec<usize>,
    visited: Vec<bool>,
    closure_seen: Vec<bool>,
    closures: Vec<Vec<usize>>,
    children: Vec<Vec<(usize, usize)>>,
    digits: Vec<Option<u32>>,
    in_use: Vec<bool>,
    out: String,
}

impl Writer<'_> {
    fn sorted_neighbors(&self, u: usize) -> Vec<(usize, usize)> {
        let mut nbrs = self.mol.adjacent(u).to_vec();
        nbrs.sort_by_key(|&(v, _)| self.ranks[v]);
        nbrs
    }

    /// Classify edges into tree edges and ring closures.
    fn explore(&mut self, u: usize, via: Option<usize>) {
        self.visited[u] = true;
        for (v, k) in self.sorted_neighbors(u) {
            if Some(k) == via {
                continue;
            }
            if self.visited[v] {
                if !self.closure_seen[k] {
                    self.closure_seen[k] = true;
                    self.closures[u].push(k);
                    self.closures[v].push(k);
                }
            } else {
                self.children[u].push((v, k));
                self.explore(v, Some(k));
            }
        }
    }

    fn bond_symbol(&self, k: usize) -> &'static str {
        let bond = &self.mol.bonds()[k];
        if let Some(s) = bond.stereo {
            return if s.symbol() == '/' { "/" } else { "\\" };
        }
        let aromatic_pair = self.mol.atom(bond.a).aromatic && self.mol.atom(bond.b).aromatic;
        match bond.order {
            BondOrder::Single if aromatic_pair => "-",
            BondOrder::Single => "",
            BondOrder::Double => "=",
            BondOrder::Triple => "#",
            BondOrder::Aromatic if aromatic_pair => "",
            BondOrder::Aromatic => ":",
        }
    }

    fn atom_token(&self, i: usize) -> String {
        let atom = self.mol.atom(i);
        let h = self.mol.implicit_hydrogens(i);
        let symbol = if atom.aromatic {
            atom.element.symbol().to_lowercase()
        } else {
            atom.element.symbol().to_string()
        };
        let bare_ok = atom.element.is_organic_subset()
            && atom.formal_charge == 0
            && atom.isotope.is_none()
            && atom.chirality.is_none()
            && bare_hydrogens(
                atom.element,
                atom.aromatic,
                self.mol.neighbors(i).map(|(_, b)| b.order),
            ) == Ok(h);
        if bare_ok {
            return symbol;
        }
        let mut s = String::from("[");
        if let Some(iso) = atom.isotope {
            s.push_str(&iso.to_string());
        }
        s.push_str(&symbol);
        if let Some(c) = atom.chirality {
            s.push_str(c.symbol());
        }
        match h {
            0 => {}
            1 => s.push('H'),
            _ => s.push_str(&format!("H{h}")),
        }
        match atom.formal_charge {
            0 => {}
            1 => s.push('+'),
            -1 => s.push('-'),
            q if q > 0 => s.push_str(&format!("+{q}")),
            q => s.push_str(&format!("-{}", -q)),
        }
        s.push(']');
        s
    }

    fn write_digit(&mut self, d: u32) {
        if d < 10 {
            self.out.push(char::from_digit(d, 10).unwrap());
        } else {
            self.out.push_str(&format!("%{d:02}"));
        }
    }

    fn emit(&mut self, u: usize) {
        let token = self.atom_token(u);
        self.out.push_str(&token);
        let mut released = Vec::new();
        for k in self.closures[u].clone() {
            match self.digits[k] {
                Some(d) => {
                    self.write_digit(d);
                    released.push(d);
                }
                None => {
                    let d = (1..100)
                        .find(|&d| !self.in_use[d as usize])
                        .expect("fewer than 100 open rings");
                    self.in_use[d as usize] = true;
                    self.digits[k] = Some(d);
                    let sym = self.bond_symbol(k);
                    self.out.push_str(sym);
                    self.write_digit(d);
                }
            }
        }
        for d in released {
            self.in_use[d as usize] = false;
        }
        let children = self.children[u].clone();
        let last = children.len().saturating_sub(1);
        for (idx, (v, k)) in children.into_iter().enumerate() {
            let branch = idx != last;
            if branch {
                self.out.push('(');
            }
            let sym = self.bond_symbol(k);
            self.out.push_str(sym);
            self.emit(v);
            if branch {
                self.out.push(')');
            }
        }
    }
}

/// Deterministic SMILES for a molecule: identical graphs give identical
/// strings regardless of input atom order.
pub fn canonical_smiles(mol: &Molecule) -> String {
    let n = mol.atom_count();
    let ranks = canonical_ranks(mol);
    let mut frags = mol.fragments();
    frags.sort_by_key(|f| f.iter().map(|&i| ranks[i]).min());
    let mut w = Writer {
        mol,
        ranks,
        visited: vec![false; n],
        closure_seen: vec![false; mol.bonds().len()],
        closures: vec![Vec::new(); n],
        children: vec![Vec::new(); n],
        digits: vec![None; mol.bonds().len()],
        in_use: vec![false; 100],
        out: String::new(),
    };
    for (idx, frag) in frags.iter().enumerate() {
        let start = *frag.iter().min_by_key(|&&i| w.ranks[i]).unwrap();
        w.explore(start, None);
        if idx > 0 {
            w.out.push('.');
        }
        w.emit(start);
    }
    w.out
}
