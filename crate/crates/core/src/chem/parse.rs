use std::collections::BTreeMap;

use super::{Atom, Bond, BondOrder, BondStereo, ChemError, Chirality, Element, Molecule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondSymbol {
    Single,
    Double,
    Triple,
    Aromatic,
    Up,
    Down,
}

impl BondSymbol {
    fn from_char(c: char) -> Option<Self> {
        Some(match c {
            '-' => BondSymbol::Single,
            '=' => BondSymbol::Double,
            '#' => BondSymbol::Triple,
            ':' => BondSymbol::Aromatic,
            '/' => BondSymbol::Up,
            '\\' => BondSymbol::Down,
            _ => return None,
        })
    }

    fn order(self) -> BondOrder {
        match self {
            BondSymbol::Single | BondSymbol::Up | BondSymbol::Down => BondOrder::Single,
            BondSymbol::Double => BondOrder::Double,
            BondSymbol::Triple => BondOrder::Triple,
            BondSymbol::Aromatic => BondOrder::Aromatic,
        }
    }

    fn stereo(self) -> Option<BondStereo> {
        match self {
            BondSymbol::Up => Some(BondStereo::Up),
            BondSymbol::Down => Some(BondStereo::Down),
            _ => None,
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<(usize, usize, Option<BondSymbol>)>,
    open_rings: BTreeMap<u32, (usize, Option<BondSymbol>, usize)>,
    branches: Vec<(usize, usize)>,
    prev: Option<usize>,
    pending: Option<(BondSymbol, usize)>,
}

/// Parse a SMILES string into a validated [`Molecule`].
///
/// Supported: organic-subset atoms, bracket atoms with isotope, `@`/`@@`,
/// hydrogen count and charge, bonds `- = # : / \`, branches, ring closures
/// (`0-9`, `%nn`) and `.`-separated fragments. Atom classes, `*`, `$` and
/// extended chirality classes are rejected.
pub fn parse_smiles(text: &str) -> Result<Molecule, ChemError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(ChemError::Empty);
    }
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        open_rings: BTreeMap::new(),
        branches: Vec::new(),
        prev: None,
        pending: None,
    };
    p.run()?;
    p.finish()
}

impl Parser<'_> {
    fn syntax(&self, pos: usize, msg: impl Into<String>) -> ChemError {
        ChemError::Syntax {
            pos,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), ChemError> {
        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'(' => {
                    let Some(prev) = self.prev else {
                        return Err(self.syntax(start, "branch without a preceding atom"));
                    };
                    if self.pending.is_some() {
                        return Err(self.syntax(start, "bond symbol before '('"));
                    }
                    self.branches.push((prev, start));
                    self.pos += 1;
                }
                b')' => {
                    let Some((atom, _)) = self.branches.pop() else {
                        return Err(ChemError::UnbalancedParenthesis { pos: start });
                    };
                    if self.pending.is_some() {
                        return Err(self.syntax(start, "dangling bond before ')'"));
                    }
                    if self.src.get(start.wrapping_sub(1)) == Some(&b'(') {
                        return Err(self.syntax(start, "empty branch"));
                    }
                    self.prev = Some(atom);
                    self.pos += 1;
                }
                b'.' => {
                    if self.pending.is_some() {
                        return Err(self.syntax(start, "bond symbol before '.'"));
                    }
                    if self.prev.is_none() {
                        return Err(self.syntax(start, "'.' without a preceding atom"));
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.pending.is_some() {
                        return Err(self.syntax(start, "two consecutive bond symbols"));
                    }
                    if self.prev.is_none() {
                        return Err(self.syntax(start, "bond without a preceding atom"));
                    }
                    self.pending = Some((BondSymbol::from_char(c as char).unwrap(), start));
                    self.pos += 1;
                }
                b'$' => {
                    return Err(ChemError::UnsupportedFeature {
                        pos: start,
                        feature: "quadruple bond".into(),
                    })
                }
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom);
                }
                b'*' => return Err(ChemError::UnknownElement("*".into())),
                _ => {
                    let atom = self.organic_atom()?;
                    self.add_atom(atom);
                }
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<Molecule, ChemError> {
        if let Some(&(_, pos)) = self.branches.last() {
            return Err(ChemError::UnbalancedParenthesis { pos });
        }
        if let Some((&digit, _)) = self.open_rings.iter().next() {
            return Err(ChemError::UnclosedRing { digit });
        }
        if let Some((_, pos)) = self.pending {
            return Err(self.syntax(pos, "dangling bond at end of input"));
        }
        if self.atoms.is_empty() {
            return Err(ChemError::Empty);
        }
        let mut bonds = Vec::with_capacity(self.bonds.len());
        for &(a, b, sym) in &self.bonds {
            let order = match sym {
                Some(s) => s.order(),
                None if self.atoms[a].aromatic && self.atoms[b].aromatic => BondOrder::Aromatic,
                None => BondOrder::Single,
            };
            bonds.push(Bond {
                a,
                b,
                order,
                stereo: sym.and_then(BondSymbol::stereo),
            });
        }
        Molecule::new(self.atoms, bonds)
    }

    fn add_atom(&mut self, atom: Atom) {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        if let Some(prev) = self.prev {
            let sym = self.pending.take().map(|(s, _)| s);
            self.bonds.push((prev, idx, sym));
        }
        self.prev = Some(idx);
    }

    fn ring_closure(&mut self) -> Result<(), ChemError> {
        let start = self.pos;
        let Some(atom) = self.prev else {
            return Err(self.syntax(start, "ring closure without a preceding atom"));
        };
        let digit = if self.src[start] == b'%' {
            let digits = self.src.get(start + 1..start + 3);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 3;
                    ((d[0] - b'0') * 10 + (d[1] - b'0')) as u32
                }
                _ => return Err(self.syntax(start, "'%' must be followed by two digits")),
            }
        } else {
            self.pos += 1;
            (self.src[start] - b'0') as u32
        };
        let sym = self.pending.take().map(|(s, _)| s);
        match self.open_rings.remove(&digit) {
            None => {
                self.open_rings.insert(digit, (atom, sym, start));
            }
            Some((other, other_sym, _)) => {
                if other == atom {
                    return Err(self.syntax(
                        start,
                        format!("ring closure {digit} bonds an atom to itself"),
                    ));
                }
                let sym = match (other_sym, sym) {
                    (Some(x), Some(y)) if x.order() != y.order() => {
                        return Err(self.syntax(
                            start,
                            format!("conflicting bond orders on ring closure {digit}"),
                        ))
                    }
                    (Some(x), _) => Some(x),
                    (None, y) => y,
                };
                if self
                    .bonds
                    .iter()
                    .any(|&(a, b, _)| (a == other && b == atom) || (a == atom && b == other))
                {
                    return Err(ChemError::InvalidBond {
                        a: other,
                        b: atom,
                        reason: "duplicate bond".into(),
                    });
                }
                self.bonds.push((other, atom, sym));
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom, ChemError> {
        let start = self.pos;
        let rest = &self.src[start..];
        let (element, aromatic, len) = match rest {
            [b'C', b'l', ..] => (Element::Cl, false, 2),
            [b'B', b'r', ..] => (Element::Br, false, 2),
            [b'B', ..] => (Element::B, false, 1),
            [b'C', ..] => (Element::C, false, 1),
            [b'N', ..] => (Element::N, false, 1),
            [b'O', ..] => (Element::O, false, 1),
            [b'P', ..] => (Element::P, false, 1),
            [b'S', ..] => (Element::S, false, 1),
            [b'F', ..] => (Element::F, false, 1),
            [b'I', ..] => (Element::I, false, 1),
            [b'b', ..] => (Element::B, true, 1),
            [b'c', ..] => (Element::C, true, 1),
            [b'n', ..] => (Element::N, true, 1),
            [b'o', ..] => (Element::O, true, 1),
            [b'p', ..] => (Element::P, true, 1),
            [b's', ..] => (Element::S, true, 1),
            [c, ..] if c.is_ascii_alphabetic() => {
                return Err(ChemError::UnknownElement((*c as char).to_string()))
            }
            _ => {
                let shown = String::from_utf8_lossy(&rest[..rest.len().min(1)]).into_owned();
                return Err(self.syntax(start, format!("unexpected character {shown:?}")));
            }
        };
        self.pos += len;
        Ok(Atom::bare(element, aromatic))
    }

    fn read_number(&mut self, max_digits: usize) -> Option<u32> {
        let start = self.pos;
        let mut value: u32 = 0;
        while self.pos - start < max_digits {
            match self.peek() {
                Some(d @ b'0'..=b'9') => {
                    value = value * 10 + (d - b'0') as u32;
                    self.pos += 1;
                }
                _ => break,
            }
        }
        (self.pos > start).then_some(value)
    }

    fn bracket_atom(&mut self) -> Result<Atom, ChemError> {
        let open = self.pos;
        self.pos += 1;
        let isotope = match self.read_number(4) {
            Some(n) if n > 0 => Some(n as u16),
            Some(_) => return Err(self.syntax(open, "isotope must be positive")),
            None => None,
        };

        let (element, aromatic) = self.bracket_symbol()?;

        let chirality = if self.peek() == Some(b'@') {
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
                Some(Chirality::Clockwise)
            } else {
                Some(Chirality::Anticlockwise)
            }
        } else {
            None
        };
        if chirality.is_some()
            && self
                .peek()
                .is_some_and(|c| c.is_ascii_uppercase() && c != b'H')
        {
            return Err(ChemError::UnsupportedFeature {
                pos: self.pos,
                feature: "extended chirality class".into(),
            });
        }

        let mut hydrogens = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hydrogens = self.read_number(1).unwrap_or(1) as u8;
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(n) = self.read_number(2) {
                charge = unit * n as i32;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += unit;
                }
            }
        }
        if charge.abs() > super::MAX_ABS_CHARGE as i32 {
            return Err(self.syntax(open, format!("charge {charge} outside [-4, 4]")));
        }

        match self.peek() {
            Some(b']') => self.pos += 1,
            Some(b':') => {
                return Err(ChemError::UnsupportedFeature {
                    pos: self.pos,
                    feature: "atom class".into(),
                })
            }
            Some(_) => return Err(self.syntax(self.pos, "malformed bracket atom")),
            None => return Err(self.syntax(open, "unterminated bracket atom")),
        }

        Ok(Atom {
            element,
            formal_charge: charge as i8,
            isotope,
            aromatic,
            explicit_h: Some(hydrogens),
            chirality,
        })
    }

    fn bracket_symbol(&mut self) -> Result<(Element, bool), ChemError> {
        let start = self.pos;
        let first = self
            .peek()
            .ok_or_else(|| self.syntax(start, "unterminated bracket atom"))?;
        if first.is_ascii_lowercase() {
            // aromatic symbols; two-letter aromatic forms (se, as) are not supported
            let element = match first {
                b'b' => Element::B,
                b'c' => Element::C,
                b'n' => Element::N,
                b'o' => Element::O,
                b'p' => Element::P,
                b's' => Element::S,
                _ => return Err(ChemError::UnknownElement((first as char).to_string())),
            };
            if self.src.get(start + 1).is_some_and(u8::is_ascii_lowercase) {
                let sym = String::from_utf8_lossy(&self.src[start..start + 2]).into_owned();
                return Err(ChemError::UnknownElement(sym));
            }
            self.pos += 1;
            return Ok((element, true));
        }
        if !first.is_ascii_uppercase() {
            return Err(self.syntax(start, "expected element symbol"));
        }
        let two = self
            .src
            .get(start + 1)
            .filter(|c| c.is_ascii_lowercase())
            .map(|&c| String::from_utf8_lossy(&[first, c]).into_owned());
        if let Some(sym) = two {
            if let Ok(e) = sym.parse::<Element>() {
                self.pos += 2;
                return Ok((e, false));
            }
            return Err(ChemError::UnknownElement(sym));
        }
        let sym = (first as char).to_string();
        let element = sym.parse::<Element>().map_err(ChemError::UnknownElement)?;
        self.pos += 1;
        Ok((element, false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn methane() {
        let m = parse_smiles("C").unwrap();
        assert_eq!(m.heavy_atom_count(), 1);
        assert_eq!(m.implicit_hydrogens(0), 4);
    }

    #[test]
    fn benzene_is_six_aromatic_ch() {
        let m = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(m.atom_count(), 6);
        let mut ring = m.rings()[0].clone();
        ring.sort_unstable();
        assert_eq!(ring, [0, 1, 2, 3, 4, 5]);
        for i in 0..6 {
            assert!(m.atom(i).aromatic);
            assert_eq!(m.implicit_hydrogens(i), 1);
        }
        assert!(m.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
    }

    #[test]
    fn error_kinds() {
        assert!(matches!(
            parse_smiles("C1CC"),
            Err(ChemError::UnclosedRing { digit: 1 })
        ));
        assert!(matches!(
            parse_smiles("C(C"),
            Err(ChemError::UnbalancedParenthesis { .. })
        ));
        assert!(matches!(
            parse_smiles("CC)"),
            Err(ChemError::UnbalancedParenthesis { .. })
        ));
        assert!(matches!(
            parse_smiles("[Xx]"),
            Err(ChemError::UnknownElement(_))
        ));
        assert!(matches!(
            parse_smiles("CXC"),
            Err(ChemError::UnknownElement(_))
        ));
        assert!(matches!(
            parse_smiles("C(C)(C)(C)(C)C"),
            Err(ChemError::ValenceViolation { .. })
        ));
        assert!(matches!(
            parse_smiles("[CH3:1]C"),
            Err(ChemError::UnsupportedFeature { .. })
        ));
        assert!(matches!(
            parse_smiles("C$C"),
            Err(ChemError::UnsupportedFeature { .. })
        ));
        assert!(matches!(parse_smiles(""), Err(ChemError::Empty)));
        assert!(matches!(
            parse_smiles("C=1CC-1"),
            Err(ChemError::Syntax { .. })
        ));
        assert!(matches!(parse_smiles("C11"), Err(ChemError::Syntax { .. })));
        assert!(matches!(
            parse_smiles("C12CC12"),
            Err(ChemError::InvalidBond { .. })
        ));
        assert!(matches!(
            parse_smiles("C:C"),
            Err(ChemError::InvalidBond { .. })
        ));
        assert!(matches!(
            parse_smiles("[C+5]"),
            Err(ChemError::Syntax { .. })
        ));
        assert!(matches!(parse_smiles("C="), Err(ChemError::Syntax { .. })));
        assert!(matches!(
            parse_smiles("C()C"),
            Err(ChemError::Syntax { .. })
        ));
    }

    #[test]
    fn bracket_atoms() {
        let m = parse_smiles("[13CH3][NH3+]").unwrap();
        assert_eq!(m.atom(0).isotope, Some(13));
        assert_eq!(m.implicit_hydrogens(0), 3);
        assert_eq!(m.atom(1).formal_charge, 1);
        let m = parse_smiles("[O-2].[Zn++]").unwrap();
        assert_eq!(m.atom(0).formal_charge, -2);
        assert_eq!(m.atom(1).formal_charge, 2);
        let m = parse_smiles("c1cc[nH]c1").unwrap();
        assert_eq!(m.implicit_hydrogens(3), 1);
    }

    #[test]
    fn stereo_markers_are_recorded() {
        let m = parse_smiles("F/C=C/F").unwrap();
        assert_eq!(m.bonds()[0].stereo, Some(BondStereo::Up));
        assert_eq!(m.bonds()[0].order, BondOrder::Single);
        let m = parse_smiles("N[C@@H](C)C(=O)O").unwrap();
        assert_eq!(m.atom(1).chirality, Some(Chirality::Clockwise));
    }

    #[test]
    fn ring_closures() {
        let m = parse_smiles("C%10CC%10").unwrap();
        assert_eq!(m.rings().len(), 1);
        let m = parse_smiles("C1CC=1").unwrap();
        assert_eq!(m.bond_between(0, 2).unwrap().order, BondOrder::Double);
        // a digit may be reused once closed
        let m = parse_smiles("C1CC1C1CC1").unwrap();
        assert_eq!(m.rings().len(), 2);
    }

    #[test]
    fn biphenyl_link_is_single() {
        let m = parse_smiles("c1ccccc1-c1ccccc1").unwrap();
        assert_eq!(m.bond_between(5, 6).unwrap().order, BondOrder::Single);
        let m = parse_smiles("c1ccccc1c1ccccc1").unwrap();
        // an unmarked bond between aromatic atoms is aromatic even across rings
        assert_eq!(m.bond_between(5, 6).unwrap().order, BondOrder::Aromatic);
    }
}
