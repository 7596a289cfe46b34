use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UaScheme {
    /// Per-TU dueling double Q-learning.
    D3qn,
    /// Dual coordinate descent with stage-one power control.
    Dcd,
    /// Strongest channel.
    Sc,
    /// One uniformly random BS per TU, drawn once and held.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BfScheme {
    Cup,
    /// PPO on a penalised reward.
    Ppo,
    Wmmse,
    /// One uniformly random action per BS, drawn once and held.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    /// Parameters frozen, greedy TU actions, mean BS actions.
    Eval,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub ua: UaScheme,
    pub bf: BfScheme,
}

impl SchemeSpec {
    pub fn new(ua: UaScheme, bf: BfScheme) -> Self {
        Self { ua, bf }
    }

    pub fn learns_ua(&self) -> bool {
        self.ua == UaScheme::D3qn
    }

    pub fn learns_bf(&self) -> bool {
        matches!(self.bf, BfScheme::Cup | BfScheme::Ppo)
    }

    pub fn has_agents(&self) -> bool {
        self.learns_ua() || self.learns_bf()
    }

    /// Whether BSs exchange the compact learned-scheme messages rather than
    /// full channel state.
    pub fn uses_learning_exchange(&self) -> bool {
        self.bf != BfScheme::Wmmse
    }
}

impl fmt::Display for UaScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UaScheme::D3qn => "d3qn",
            UaScheme::Dcd => "dcd",
            UaScheme::Sc => "sc",
            UaScheme::Random => "random",
        })
    }
}

impl fmt::Display for BfScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BfScheme::Cup => "cup",
            BfScheme::Ppo => "ppo",
            BfScheme::Wmmse => "wmmse",
            BfScheme::Random => "random",
        })
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.ua, self.bf)
    }
}

impl FromStr for SchemeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidArgument(format!("scheme must be <ua>-<bf> with ua in d3qn|dcd|sc|random and bf in cup|ppo|wmmse|random, got '{s}'"));
        let (ua, bf) = s.split_once('-').ok_or_else(bad)?;
        let ua = match ua.to_ascii_lowercase().as_str() {
            "d3qn" => UaScheme::D3qn,
            "dcd" => UaScheme::Dcd,
            "sc" => UaScheme::Sc,
            "random" => UaScheme::Random,
            _ => return Err(bad()),
        };
        let bf = match bf.to_ascii_lowercase().as_str() {
            "cup" => BfScheme::Cup,
            "ppo" => BfScheme::Ppo,
            "wmmse" => BfScheme::Wmmse,
            "random" => BfScheme::Random,
            _ => return Err(bad()),
        };
        Ok(Self { ua, bf })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_schemes_parse_and_print() {
        for s in ["d3qn-cup", "dcd-cup", "sc-cup", "d3qn-ppo", "d3qn-wmmse", "dcd-wmmse"] {
            let spec: SchemeSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
    }

    #[test]
    fn rejects_malformed() {
        for s in ["d3qn", "foo-cup", "d3qn-bar", ""] {
            assert!(s.parse::<SchemeSpec>().is_err());
        }
    }

    #[test]
    fn exchange_kind() {
        assert!("d3qn-cup".parse::<SchemeSpec>().unwrap().uses_learning_exchange());
        assert!(!"dcd-wmmse".parse::<SchemeSpec>().unwrap().uses_learning_exchange());
    }
}
