//! Fragment-additive topological polar surface area.

use crate::chem::{BondOrder, Element, Molecule};

use super::Constants;

fn bond_letter(order: BondOrder) -> (u8, char) {
    match order {
        BondOrder::Single => (0, 's'),
        BondOrder::Double => (1, 'd'),
        BondOrder::Triple => (2, 't'),
        BondOrder::Aromatic => (3, 'a'),
    }
}

/// Lookup key describing the polar environment of atom `i`, or `None` for
/// atoms that are never polar (anything other than N, O, S, P).
///
/// See `data/tpsa.kv` for the key grammar.
pub fn tpsa_environment(mol: &Molecule, i: usize) -> Option<String> {
    let atom = mol.atom(i);
    if !matches!(
        atom.element,
        Element::N | Element::O | Element::S | Element::P
    ) {
        return None;
    }
    let symbol = if atom.aromatic {
        atom.element.symbol().to_lowercase()
    } else {
        atom.element.symbol().to_string()
    };
    let mut letters: Vec<(u8, char)> = mol
        .neighbors(i)
        .filter(|&(j, _)| mol.is_heavy(j))
        .map(|(_, b)| bond_letter(b.order))
        .collect();
    letters.sort_unstable();
    let bonds: String = letters.into_iter().map(|(_, c)| c).collect();
    let in_three_ring = mol.rings().iter().any(|r| r.len() == 3 && r.contains(&i));
    Some(format!(
        "{symbol}:h{}:q{}:{bonds}{}",
        mol.total_hydrogens(i),
        atom.formal_charge,
        if in_three_ring { ":r3" } else { "" }
    ))
}

/// Sum of tabulated contributions; unmatched polar environments add 0.
pub fn tpsa(mol: &Molecule, constants: &Constants) -> f64 {
    let include_s_p = constants.admet_flag("tpsa.include_s_p");
    let Some(table) = constants.table("tpsa") else {
        return 0.0;
    };
    (0..mol.atom_count())
        .filter(|&i| include_s_p || matches!(mol.atom(i).element, Element::N | Element::O))
        .filter_map(|i| tpsa_environment(mol, i))
        .filter_map(|key| table.get(&key).copied())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;
    use approx::assert_abs_diff_eq;

    fn tp(s: &str) -> f64 {
        tpsa(&parse_smiles(s).unwrap(), &Constants::default())
    }

    #[test]
    fn reference_values() {
        assert_eq!(tp("c1ccccc1"), 0.0);
        assert_abs_diff_eq!(tp("Oc1ccccc1"), 20.23, epsilon = 1e-9);
        assert_abs_diff_eq!(tp("CCOCC"), 9.23, epsilon = 1e-9);
        assert_abs_diff_eq!(tp("CC(=O)O"), 17.07 + 20.23, epsilon = 1e-9);
        assert_abs_diff_eq!(tp("c1ccncc1"), 12.89, epsilon = 1e-9);
        assert_abs_diff_eq!(tp("c1cc[nH]c1"), 15.79, epsilon = 1e-9);
        assert_abs_diff_eq!(tp("Nc1ccccc1"), 26.02, epsilon = 1e-9);
        assert_abs_diff_eq!(tp("C1CO1"), 12.53, epsilon = 1e-9);
        assert_abs_diff_eq!(
            tp("O=[N+]([O-])c1ccccc1"),
            17.07 + 23.06 + 3.01,
            epsilon = 1e-9
        );
        // caffeine: two carbonyl O, three n(-C), one pyridine-type n
        assert_abs_diff_eq!(
            tp("Cn1cnc2c1c(=O)n(C)c(=O)n2C"),
            2.0 * 17.07 + 3.0 * 4.93 + 12.89,
            epsilon = 1e-9
        );
    }

    #[test]
    fn explicit_hydrogens_count_as_hydrogens() {
        assert_eq!(tp("[H]Oc1ccccc1"), tp("Oc1ccccc1"));
    }

    #[test]
    fn sulfur_switch() {
        let m = parse_smiles("CSC").unwrap();
        let mut c = Constants::default();
        assert_abs_diff_eq!(tpsa(&m, &c), 25.30, epsilon = 1e-9);
        c.merge_text("t", "version = 1\n[admet]\ntpsa.include_s_p = 0\n")
            .unwrap();
        assert_eq!(tpsa(&m, &c), 0.0);
    }
}
