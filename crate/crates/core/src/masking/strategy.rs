use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Probabilities of the three corruption actions for a selected candidate.
/// Whatever remains up to 1 leaves the token unchanged *without* a label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionSplit {
    pub mask: f64,
    pub random: f64,
    pub same: f64,
}

impl ActionSplit {
    pub const fn new(mask: f64, random: f64, same: f64) -> Self {
        Self { mask, random, same }
    }

    pub const NONE: ActionSplit = ActionSplit::new(0.0, 0.0, 0.0);
    /// The conventional 80-10-10 split.
    pub const MLM: ActionSplit = ActionSplit::new(0.8, 0.1, 0.1);

    pub fn labeled(&self) -> f64 {
        self.mask + self.random + self.same
    }
}

/// Candidate selection probability plus what happens to a selected item.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateRule {
    pub p: f64,
    pub split: ActionSplit,
}

impl CandidateRule {
    pub const OFF: CandidateRule = CandidateRule {
        p: 0.0,
        split: ActionSplit::NONE,
    };
    pub const MLM: CandidateRule = CandidateRule {
        p: 0.15,
        split: ActionSplit::MLM,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "mlm")]
    Mlm,
    #[serde(rename = "wep")]
    Wep,
    #[serde(rename = "pep_mrs")]
    PepMrs,
    #[serde(rename = "pep_ms")]
    PepMs,
    #[serde(rename = "pep_m")]
    PepM,
    #[serde(rename = "wep+mlm")]
    WepMlm,
    #[serde(rename = "pep_mrs+mlm")]
    PepMrsMlm,
    #[serde(rename = "pep_ms+mlm")]
    PepMsMlm,
    #[serde(rename = "pep_m+mlm")]
    PepMMlm,
}

impl Strategy {
    pub const ALL: [Strategy; 9] = [
        Strategy::Mlm,
        Strategy::Wep,
        Strategy::PepMrs,
        Strategy::PepMs,
        Strategy::PepM,
        Strategy::WepMlm,
        Strategy::PepMrsMlm,
        Strategy::PepMsMlm,
        Strategy::PepMMlm,
    ];

    /// Entity decisions are taken once per entity and applied to all of its
    /// subwords.
    pub fn is_whole_entity(self) -> bool {
        matches!(self, Strategy::Wep | Strategy::WepMlm)
    }

    /// Masks entity subwords only; nothing outside entities is touched.
    pub fn is_entity_only(self) -> bool {
        matches!(
            self,
            Strategy::Wep | Strategy::PepMrs | Strategy::PepMs | Strategy::PepM
        )
    }

    pub fn with_mlm(self) -> bool {
        matches!(
            self,
            Strategy::WepMlm | Strategy::PepMrsMlm | Strategy::PepMsMlm | Strategy::PepMMlm
        )
    }

    /// Entity split of the entity-prediction part, ignoring MLM.
    fn entity_split(self) -> ActionSplit {
        match self {
            Strategy::Mlm => ActionSplit::MLM,
            Strategy::Wep | Strategy::WepMlm => ActionSplit::new(0.8, 0.0, 0.2),
            Strategy::PepMrs | Strategy::PepMrsMlm => ActionSplit::new(0.8, 0.1, 0.1),
            Strategy::PepMs | Strategy::PepMsMlm => ActionSplit::new(0.8, 0.0, 0.1),
            Strategy::PepM | Strategy::PepMMlm => ActionSplit::new(0.8, 0.0, 0.0),
        }
    }

    /// Default `(entity, non-entity)` rules.
    pub fn default_rules(self) -> (CandidateRule, CandidateRule) {
        let split = self.entity_split();
        match self {
            Strategy::Mlm => (CandidateRule::MLM, CandidateRule::MLM),
            s if s.with_mlm() => (CandidateRule { p: 0.5, split }, CandidateRule::MLM),
            _ => (CandidateRule { p: 1.0, split }, CandidateRule::OFF),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Mlm => "mlm",
            Strategy::Wep => "wep",
            Strategy::PepMrs => "pep_mrs",
            Strategy::PepMs => "pep_ms",
            Strategy::PepM => "pep_m",
            Strategy::WepMlm => "wep+mlm",
            Strategy::PepMrsMlm => "pep_mrs+mlm",
            Strategy::PepMsMlm => "pep_ms+mlm",
            Strategy::PepMMlm => "pep_m+mlm",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    /// Case-insensitive; `+mlm`, `_mlm` and `-mlm` suffixes are equivalent.
    fn from_str(s: &str) -> Result<Self, String> {
        let lower = s.trim().to_ascii_lowercase().replace('-', "_");
        let norm = lower.replace("_mlm", "+mlm");
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == norm)
            .ok_or_else(|| format!("unknown masking strategy {s:?}"))
    }
}
