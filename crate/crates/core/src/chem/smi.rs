//! `.smi` line format: `<SMILES><whitespace><optional name>`.
//!
//! Lines starting with `#` and blank lines are skipped. LF and CRLF endings
//! are both accepted.

use super::{parse_smiles, ChemError, Molecule};

#[derive(Debug, Clone, PartialEq)]
pub struct SmiLine<'a> {
    /// 1-based line number in the source text.
    pub line: usize,
    pub smiles: &'a str,
    pub name: Option<&'a str>,
}

/// Split `.smi` text into records without parsing the SMILES.
pub fn smi_lines(text: &str) -> impl Iterator<Item = SmiLine<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() || line.starts_with('#') {
            return None;
        }
        let (smiles, rest) = match line.find(char::is_whitespace) {
            Some(at) => (&line[..at], line[at..].trim()),
            None => (line, ""),
        };
        Some(SmiLine {
            line: i + 1,
            smiles,
            name: (!rest.is_empty()).then_some(rest),
        })
    })
}

/// Parse every record, keeping per-line errors instead of aborting.
pub fn read_smi(text: &str) -> Vec<(SmiLine<'_>, Result<Molecule, ChemError>)> {
    smi_lines(text)
        .map(|rec| {
            let parsed = parse_smiles(rec.smiles);
            (rec, parsed)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_names_and_skips_comments() {
        let text = "# header\r\nCCO ethanol\r\n\r\nc1ccccc1\tbenzene ring\nC1CC  broken\n";
        let recs = read_smi(text);
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].0.name, Some("ethanol"));
        assert_eq!(recs[0].0.line, 2);
        assert_eq!(recs[1].0.name, Some("benzene ring"));
        assert!(recs[2].1.is_err());
        assert_eq!(recs[2].0.name, Some("broken"));
    }
}
