//! Rectangular-threshold ADME flags and bioavailability buckets.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Constants, DescriptorSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GiAbsorption {
    High,
    Low,
}

impl fmt::Display for GiAbsorption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GiAbsorption::High => "High",
            GiAbsorption::Low => "Low",
        })
    }
}

/// Abbott-style oral bioavailability score; only these four values exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bioavailability {
    #[serde(rename = "0.11")]
    P11,
    #[serde(rename = "0.17")]
    P17,
    #[serde(rename = "0.55")]
    P55,
    #[serde(rename = "0.85")]
    P85,
}

impl Bioavailability {
    pub const ALL: [Bioavailability; 4] = [Self::P11, Self::P17, Self::P55, Self::P85];

    pub fn value(self) -> f64 {
        match self {
            Self::P11 => 0.11,
            Self::P17 => 0.17,
            Self::P55 => 0.55,
            Self::P85 => 0.85,
        }
    }
}

impl fmt::Display for Bioavailability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}", self.value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AdmetFlags {
    pub gi_absorption: GiAbsorption,
    pub bbb_permeant: bool,
    /// Two-rule heuristic; always labelled approximate in reports.
    pub pgp_substrate_approx: bool,
    pub bioavailability_score: Bioavailability,
}

/// Number of Lipinski rule-of-five violations.
pub fn ro5_violations(d: &DescriptorSet, c: &Constants) -> u32 {
    [
        d.mw > c.admet("ro5.mw_max"),
        d.wlogp > c.admet("ro5.logp_max"),
        d.hbd as f64 > c.admet("ro5.hbd_max"),
        d.hba as f64 > c.admet("ro5.hba_max"),
    ]
    .into_iter()
    .filter(|&v| v)
    .count() as u32
}

/// Flags for one descriptor set; every threshold comes from the `[admet]`
/// table.
///
/// Bioavailability: anions score 0.85 below the upper TPSA bound, 0.11 at or
/// beyond the lower bound and 0.55 in between; other compounds score 0.55 when
/// they pass the rule of five and 0.17 otherwise.
pub fn admet_flags(d: &DescriptorSet, c: &Constants) -> AdmetFlags {
    let gi_high = d.tpsa <= c.admet("gi.tpsa_max") && d.wlogp <= c.admet("gi.wlogp_max");
    let bbb = d.tpsa <= c.admet("bbb.tpsa_max")
        && d.wlogp >= c.admet("bbb.wlogp_min")
        && d.wlogp <= c.admet("bbb.wlogp_max");
    let pgp = d.mw > c.admet("pgp.mw_above") && d.tpsa > c.admet("pgp.tpsa_above");
    let score = if d.anionic {
        if d.tpsa < c.admet("abbott.anion_tpsa_high") {
            Bioavailability::P85
        } else if d.tpsa >= c.admet("abbott.anion_tpsa_low") {
            Bioavailability::P11
        } else {
            Bioavailability::P55
        }
    } else if ro5_violations(d, c) as f64 <= c.admet("ro5.max_violations") {
        Bioavailability::P55
    } else {
        Bioavailability::P17
    };
    AdmetFlags {
        gi_absorption: if gi_high {
            GiAbsorption::High
        } else {
            GiAbsorption::Low
        },
        bbb_permeant: bbb,
        pgp_substrate_approx: pgp,
        bioavailability_score: score,
    }
}
