//! Support-region cases of the inversion problem.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Location of the density support relative to the acquisition sphere.
///
/// The case selects the Volterra kernel, the radial change of variables and
/// the shell on which the reconstruction is trusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SupportCase {
    /// Support strictly inside the acquisition sphere.
    Interior,
    /// Support strictly outside the acquisition sphere.
    Exterior,
    /// Support on both sides, contained in a ball of radius `R2 > 2R`.
    InteriorExterior,
}

impl SupportCase {
    /// Stable token used in file headers and config files.
    pub fn token(&self) -> &'static str {
        match self {
            SupportCase::Interior => "interior",
            SupportCase::Exterior => "exterior",
            SupportCase::InteriorExterior => "interior-exterior",
        }
    }

    pub const ALL: [SupportCase; 3] = [
        SupportCase::Interior,
        SupportCase::Exterior,
        SupportCase::InteriorExterior,
    ];
}

impl fmt::Display for SupportCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for SupportCase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "interior" | "int" => Ok(SupportCase::Interior),
            "exterior" | "ext" => Ok(SupportCase::Exterior),
            "interior-exterior" | "interior_exterior" | "intext" | "int-ext" => {
                Ok(SupportCase::InteriorExterior)
            }
            other => Err(format!(
                "unknown case `{other}` (expected interior, exterior or interior-exterior)"
            )),
        }
    }
}
