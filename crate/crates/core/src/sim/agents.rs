//! Agent state carried across slots, and its checkpoint container.

use std::io::{Read, Write};
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use super::scheme::{BfScheme, SchemeSpec};
use crate::encoding::{action_dim, bs_observation_dim, tu_observation_dim};
use crate::error::{Error, Result};
use crate::learn::{ActorCritic, D3qnAgent, TrajectoryBuffer};
use crate::rng::{stream, Domain};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuAgentState {
    pub agent: D3qnAgent,
    pub rng: ChaCha8Rng,
    pub prev_obs: Option<Vec<f64>>,
    pub prev_action: usize,
    pub prev_reward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsAgentState {
    pub ac: ActorCritic,
    pub buffer: TrajectoryBuffer,
    pub rng: ChaCha8Rng,
    pub prev_obs: Option<Vec<f64>>,
    /// Unclipped sample, as scored by the policy's log-probability.
    pub prev_action: Vec<f64>,
    /// Reward as stored for learning (penalised for PPO).
    pub prev_reward: f64,
    pub prev_cost: Vec<f64>,
    pub updates: usize,
}

/// Everything a checkpoint holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentBundle {
    pub format: u32,
    pub scheme: SchemeSpec,
    pub seed: u64,
    /// Slots simulated when the bundle was taken.
    pub slot: usize,
    pub scenario: Scenario,
    pub tu: Vec<TuAgentState>,
    pub bs: Vec<BsAgentState>,
}

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CATNCKPT";
pub const CHECKPOINT_FORMAT: u32 = 1;

impl AgentBundle {
    /// Freshly initialised agents for the learning parts of `scheme`.
    pub fn init(scenario: &Scenario, scheme: SchemeSpec, seed: u64) -> Self {
        let (n_bs, n_tu, n_au) = (scenario.num_bs(), scenario.num_tu(), scenario.num_au());
        let tu = if scheme.learns_ua() {
            (0..n_tu)
                .map(|k| {
                    let mut rng = stream(seed, Domain::TuAgent, k as u64, 0);
                    let agent = D3qnAgent::new(tu_observation_dim(n_bs), &scenario.tu_agent.hidden, n_bs, &scenario.d3qn, &mut rng);
                    TuAgentState { agent, rng, prev_obs: None, prev_action: 0, prev_reward: 0.0 }
                })
                .collect()
        } else {
            Vec::new()
        };
        let bs = if scheme.learns_bf() {
            let enc = scenario.encoding_params();
            let obs_dim = bs_observation_dim(&enc, n_tu, n_au);
            let costs = if scheme.bf == BfScheme::Cup { n_au } else { 0 };
            (0..n_bs)
                .map(|n| {
                    let mut rng = stream(seed, Domain::BsAgent, n as u64, 0);
                    let ac = ActorCritic::new(obs_dim, action_dim(n_tu, n_au), costs, &scenario.bs_agent.hidden, &scenario.cup, &mut rng);
                    BsAgentState {
                        ac,
                        buffer: TrajectoryBuffer::new(scenario.cup.buffer_len),
                        rng,
                        prev_obs: None,
                        prev_action: Vec::new(),
                        prev_reward: 0.0,
                        prev_cost: Vec::new(),
                        updates: 0,
                    }
                })
                .collect()
        } else {
            Vec::new()
        };
        Self { format: CHECKPOINT_FORMAT, scheme, seed, slot: 0, scenario: scenario.clone(), tu, bs }
    }

    /// Checks that the networks fit `scenario` under `scheme`.
    pub fn check_compatible(&self, scenario: &Scenario, scheme: SchemeSpec) -> Result<()> {
        let fresh = Self::init(scenario, scheme, 0);
        let bad = |what: &str| Err(Error::Checkpoint(format!("{what} does not match the scenario/scheme")));
        if self.tu.len() != fresh.tu.len() || self.bs.len() != fresh.bs.len() {
            return bad("agent count");
        }
        for (a, b) in self.tu.iter().zip(&fresh.tu) {
            if a.agent.online.net.sizes() != b.agent.online.net.sizes() {
                return bad("TU network shape");
            }
        }
        for (a, b) in self.bs.iter().zip(&fresh.bs) {
            if a.ac.policy.net.sizes() != b.ac.policy.net.sizes() || a.ac.nu.len() != b.ac.nu.len() {
                return bad("BS network shape");
            }
        }
        Ok(())
    }

    /// Magic, little-endian format number, then a CBOR body.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&self.format.to_le_bytes())?;
        ciborium::into_writer(self, &mut w).map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| Error::Checkpoint("truncated header".into()))?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file".into()));
        }
        let mut ver = [0u8; 4];
        r.read_exact(&mut ver).map_err(|_| Error::Checkpoint("truncated header".into()))?;
        let ver = u32::from_le_bytes(ver);
        if ver != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unsupported format {ver}")));
        }
        ciborium::from_reader(r).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Scenario {
        let mut s = Scenario::default();
        s.geometry.num_bs = 2;
        s.geometry.num_tu = 3;
        s.geometry.num_au = 1;
        s.radio.mh = 2;
        s.radio.mv = 1;
        s.bs_agent.hidden = vec![8, 4];
        s.tu_agent.hidden = vec![4];
        s
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let s = small();
        let b = AgentBundle::init(&s, "d3qn-cup".parse().unwrap(), 3);
        let mut bytes = Vec::new();
        b.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..8], CHECKPOINT_MAGIC);
        let back = AgentBundle::read_from(&bytes[..]).unwrap();
        assert_eq!(back, b);
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn rejects_garbage_and_shape_mismatch() {
        assert!(AgentBundle::read_from(&b"NOTACKPT...."[..]).is_err());
        let s = small();
        let b = AgentBundle::init(&s, "d3qn-cup".parse().unwrap(), 3);
        let mut other = s.clone();
        other.geometry.num_tu = 4;
        assert!(b.check_compatible(&other, "d3qn-cup".parse().unwrap()).is_err());
        assert!(b.check_compatible(&s, "d3qn-cup".parse().unwrap()).is_ok());
    }

    #[test]
    fn optimizer_schemes_have_no_agents() {
        let b = AgentBundle::init(&small(), "dcd-wmmse".parse().unwrap(), 1);
        assert!(b.tu.is_empty() && b.bs.is_empty());
    }
}
