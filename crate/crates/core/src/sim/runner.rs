//! The per-slot loop: TU decisions, information exchange, BS decisions,
//! transmission, rewards and costs.

use std::time::Instant;

use rand::Rng;

use super::agents::AgentBundle;
use super::metrics::{SlotRecord, SlotTiming};
use super::scenario::Scenario;
use super::scheme::{BfScheme, Mode, SchemeSpec, UaScheme};
use crate::channel::{ChannelModel, ChannelSet};
use crate::encoding::{
    beam_leakage, bs_cost, bs_observation, bs_reward, decode_bs_action, penalty_reward, random_action, select_interferer_sets, tu_observation,
    tu_reward, BsCurrent, Codebook, CompressedChannel, EncodingParams, SlotInfo,
};
use crate::error::{Error, Result};
use crate::learn::{argmax, clip_action, cup_update, ppo_update, target_sync_due, Experience, Transition};
use crate::linalg::CVec;
use crate::optim::{sc_associate, stage1_ua_power, wmmse_cbf, Stage1Config, WmmseConfig, WmmseProblem};
use crate::phy::{snapshot, AssociationMap, BeamformerSet};
use crate::rng::{stream, Domain};

/// Phases of one slot, in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Measure,
    TuStore,
    TuUpdate,
    TuAct,
    BsExchange,
    BsStore,
    BsUpdate,
    BsAct,
    Transmit,
    Reward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Event {
    pub slot: usize,
    pub phase: Phase,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub scheme: SchemeSpec,
    pub mode: Mode,
    pub seed: u64,
    /// Record the phase sequence (tests and diagnostics).
    pub record_events: bool,
}

pub struct Simulation {
    scenario: Scenario,
    cfg: RunConfig,
    channel: ChannelModel,
    codebook: Codebook,
    enc: EncodingParams,
    sigma2: Vec<f64>,
    agents: AgentBundle,
    /// Random baselines draw one association and one action per BS at
    /// construction and hold them for the whole run.
    fixed_assoc: Vec<usize>,
    fixed_actions: Vec<Vec<f64>>,
    prev: Option<SlotInfo>,
    prev_bf: Option<BeamformerSet>,
    slot: usize,
    events: Vec<Event>,
    stage1: Stage1Config,
    wmmse: WmmseConfig,
}

/// Output of one slot beyond its metrics row.
pub struct SlotOutput {
    pub record: SlotRecord,
    pub timing: SlotTiming,
}

impl Simulation {
    /// `agents` overrides the fresh initialisation (e.g. from a checkpoint).
    pub fn new(scenario: Scenario, cfg: RunConfig, agents: Option<AgentBundle>) -> Result<Self> {
        scenario.validate()?;
        let agents = match agents {
            Some(mut b) => {
                b.check_compatible(&scenario, cfg.scheme)?;
                b.scheme = cfg.scheme;
                b
            }
            None => AgentBundle::init(&scenario, cfg.scheme, cfg.seed),
        };
        let channel = ChannelModel::new(scenario.channel_config(), cfg.seed)?;
        let enc = scenario.encoding_params();
        Ok(Self {
            codebook: Codebook::new(scenario.num_antennas(), enc.codebook_size, enc.nc),
            sigma2: scenario.sigma2(),
            fixed_assoc: {
                let mut rng = stream(cfg.seed, Domain::Baseline, 0, 0);
                (0..scenario.num_tu()).map(|_| rng.random_range(0..scenario.num_bs())).collect()
            },
            fixed_actions: (0..scenario.num_bs())
                .map(|n| random_action(scenario.num_tu(), scenario.num_au(), &mut stream(cfg.seed, Domain::Baseline, 1, n as u64)))
                .collect(),
            enc,
            channel,
            agents,
            prev: None,
            prev_bf: None,
            slot: 0,
            events: Vec::new(),
            stage1: Stage1Config::default(),
            wmmse: WmmseConfig::default(),
            scenario,
            cfg,
        })
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn agents(&self) -> &AgentBundle {
        &self.agents
    }

    /// Snapshot of the agents for a checkpoint.
    pub fn bundle(&self) -> AgentBundle {
        let mut b = self.agents.clone();
        b.slot = self.slot;
        b.seed = self.cfg.seed;
        b
    }

    fn event(&mut self, phase: Phase) {
        if self.cfg.record_events {
            self.events.push(Event { slot: self.slot, phase });
        }
    }

    fn training(&self) -> bool {
        self.cfg.mode == Mode::Train
    }

    /// Runs one slot and advances the channel.
    pub fn step(&mut self) -> Result<SlotOutput> {
        let t = self.slot;
        let cs = self.channel.channels()?;
        let strengths = cs.strengths();
        self.event(Phase::Measure);

        let t0 = Instant::now();
        let assoc = self.associate(&cs, &strengths)?;
        let handover = match &self.prev {
            Some(p) => assoc.handovers(&p.assoc),
            None => vec![false; assoc.num_tu()],
        };
        let t1 = Instant::now();

        self.event(Phase::BsExchange);
        let compressed: Vec<Vec<CompressedChannel>> = cs.tu.iter().map(|row| row.iter().map(|h| self.codebook.compress(h)).collect()).collect();
        let bf = self.beamform(&cs, &assoc, &compressed)?;
        let t2 = Instant::now();

        let phy = snapshot(&assoc, &bf, &cs.tu, &cs.au, &cs.au_los, &self.sigma2)?;
        let p_max = self.scenario.radio.p_max_w;
        for (n, p) in bf.bs_power(&assoc).iter().enumerate() {
            if !(p.is_finite() && *p <= p_max * (1.0 + 1e-9)) {
                return Err(Error::Inconsistent {
                    slot: t,
                    detail: format!("BS {n} transmits {p} W > P_max {p_max} W; association {:?}; powers {:?}", assoc.as_slice(), bf.powers()),
                });
            }
        }
        self.event(Phase::Transmit);

        let au_gain: Vec<Vec<f64>> = cs.au_stats.iter().map(|row| row.iter().map(|s| s.gain).collect()).collect();
        let sets = select_interferer_sets(&phy, &assoc, &strengths, &au_gain, &self.enc.sets);
        let i_max = self.scenario.radio.i_max_w;
        let cost = bs_cost(&phy.rho, i_max)?;
        let rewards: Vec<f64> = (0..assoc.num_bs()).map(|n| bs_reward(&phy, &assoc, n, &sets.u_out[n], &self.sigma2)).collect();
        let zeta = self.scenario.bs_agent.penalty_zeta;
        let ppo = self.cfg.scheme.bf == BfScheme::Ppo;
        for (n, bs) in self.agents.bs.iter_mut().enumerate() {
            bs.prev_reward = if ppo { penalty_reward(rewards[n], &cost, zeta) } else { rewards[n] };
            bs.prev_cost = cost.clone();
        }
        if !self.agents.tu.is_empty() {
            let leak = beam_leakage(&assoc, &bf, &cs.tu);
            let zeta_r = self.scenario.radio.zeta_r;
            for (k, tu) in self.agents.tu.iter_mut().enumerate() {
                let u_out = &sets.u_out[assoc.serving(k)];
                tu.prev_reward = tu_reward(&phy, k, handover[k], zeta_r, u_out, &leak, &self.sigma2);
            }
        }
        self.event(Phase::Reward);
        let t3 = Instant::now();

        let zeta_r = self.scenario.radio.zeta_r;
        let record = SlotRecord {
            slot: t,
            sum_rate: phy.rate.iter().sum(),
            eff_sum_rate: phy.rate.iter().zip(&handover).map(|(r, &h)| if h { zeta_r * r } else { *r }).sum(),
            serving: assoc.as_slice().to_vec(),
            handover,
            rate: phy.rate.clone(),
            rho: phy.rho.clone(),
            rho_ratio: phy.rho.iter().map(|r| r / i_max).collect(),
            bs_reward: rewards,
            cost,
        };
        let timing = SlotTiming {
            slot: t,
            ua_us: (t1 - t0).as_micros() as u64,
            bs_us: (t2 - t1).as_micros() as u64,
            transmit_us: (t3 - t2).as_micros() as u64,
        };

        self.prev = Some(SlotInfo {
            slot: t,
            power: bf.powers(),
            assoc,
            phy,
            compressed,
            au_stats: cs.au_stats.clone(),
            strengths,
            sets,
        });
        self.prev_bf = Some(bf);
        self.channel.advance();
        self.slot += 1;
        self.agents.slot = self.slot;
        Ok(SlotOutput { record, timing })
    }

    fn associate(&mut self, cs: &ChannelSet, strengths: &[Vec<f64>]) -> Result<AssociationMap> {
        let t = self.slot;
        let num_bs = cs.num_bs();
        let num_tu = cs.num_tu();
        match self.cfg.scheme.ua {
            UaScheme::Sc => Ok(sc_associate(strengths, num_bs)),
            UaScheme::Dcd => {
                let m = cs.num_antennas();
                Ok(stage1_ua_power(strengths, &self.sigma2, m, self.scenario.radio.p_max_w, &self.stage1)?.assoc)
            }
            UaScheme::Random => AssociationMap::new(self.fixed_assoc.clone(), num_bs),
            UaScheme::D3qn => {
                let train = self.training();
                let hyper = self.scenario.d3qn.clone();
                let scale = self.enc.scale;
                let obs: Vec<Vec<f64>> = (0..num_tu).map(|k| tu_observation(k, &strengths[k], self.prev.as_ref(), &scale)).collect();
                if train {
                    for (tu, o) in self.agents.tu.iter_mut().zip(&obs) {
                        if let Some(po) = tu.prev_obs.take() {
                            tu.agent.memory.push(Experience { obs: po, action: tu.prev_action, reward: tu.prev_reward, next_obs: o.clone() });
                        }
                    }
                    self.event(Phase::TuStore);
                }
                let warm = t >= 1 && t - 1 >= hyper.batch;
                if train && warm {
                    for tu in self.agents.tu.iter_mut() {
                        tu.agent.learn(&hyper, &mut tu.rng);
                        if target_sync_due(t as u64, hyper.target_period) {
                            tu.agent.sync_target();
                        }
                    }
                    self.event(Phase::TuUpdate);
                }
                let mut varrho = Vec::with_capacity(num_tu);
                for (tu, o) in self.agents.tu.iter_mut().zip(obs) {
                    let a = if t == 0 || (train && !warm) {
                        tu.rng.random_range(0..num_bs)
                    } else if train {
                        tu.agent.act(&o, &mut tu.rng)
                    } else {
                        argmax(&tu.agent.online.q_one(&o))
                    };
                    tu.prev_obs = Some(o);
                    tu.prev_action = a;
                    varrho.push(a);
                }
                self.event(Phase::TuAct);
                AssociationMap::new(varrho, num_bs)
            }
        }
    }

    fn beamform(&mut self, cs: &ChannelSet, assoc: &AssociationMap, compressed: &[Vec<CompressedChannel>]) -> Result<BeamformerSet> {
        let t = self.slot;
        let (num_bs, num_tu, num_au, m) = (cs.num_bs(), cs.num_tu(), cs.num_au(), cs.num_antennas());
        let p_max = self.scenario.radio.p_max_w;
        let scales = self.scenario.action;
        let mut w: Vec<CVec> = vec![CVec::zeros(m); num_tu];
        let place = |n: usize, raw: &[f64], w: &mut Vec<CVec>| -> Result<()> {
            for (k, beam) in decode_bs_action(raw, n, assoc, &cs.tu[n], &cs.au[n], p_max, &scales)? {
                w[k] = beam;
            }
            Ok(())
        };
        match self.cfg.scheme.bf {
            BfScheme::Wmmse => {
                let problem = WmmseProblem { assoc, tu: &cs.tu, au: &cs.au, sigma2: &self.sigma2, p_max, i_max: self.scenario.radio.i_max_w };
                return Ok(wmmse_cbf(&problem, self.prev_bf.as_ref(), &self.wmmse)?.bf);
            }
            BfScheme::Random => {
                for n in 0..num_bs {
                    place(n, &self.fixed_actions[n], &mut w)?;
                }
            }
            BfScheme::Cup | BfScheme::Ppo => {
                let train = self.training();
                let cup = self.cfg.scheme.bf == BfScheme::Cup;
                let hyper = self.scenario.cup.clone();
                let obs: Vec<Vec<f64>> = (0..num_bs)
                    .map(|n| {
                        let cur = BsCurrent { assoc, compressed: &compressed[n], au_stats: &cs.au_stats[n] };
                        bs_observation(&self.enc, n, &cur, self.prev.as_ref())
                    })
                    .collect();
                if train {
                    for (bs, o) in self.agents.bs.iter_mut().zip(&obs) {
                        if let Some(po) = bs.prev_obs.take() {
                            bs.buffer.push(Transition {
                                obs: po,
                                action: std::mem::take(&mut bs.prev_action),
                                reward: bs.prev_reward,
                                next_obs: o.clone(),
                                cost: bs.prev_cost.clone(),
                            });
                        }
                    }
                    self.event(Phase::BsStore);
                    if self.agents.bs.iter().all(|b| b.buffer.is_full()) {
                        for bs in self.agents.bs.iter_mut() {
                            let stats = if cup {
                                cup_update(&mut bs.ac, bs.buffer.items(), &hyper, &mut bs.rng)
                            } else {
                                ppo_update(&mut bs.ac, bs.buffer.items(), &hyper, &mut bs.rng)
                            };
                            log::debug!("slot {t}: BS update {stats:?}");
                            bs.buffer.clear();
                            bs.updates += 1;
                        }
                        self.event(Phase::BsUpdate);
                    }
                }
                let mut raws = Vec::with_capacity(num_bs);
                for (bs, o) in self.agents.bs.iter_mut().zip(obs) {
                    let raw = if t == 0 {
                        random_action(num_tu, num_au, &mut bs.rng)
                    } else if train {
                        bs.ac.policy.sample(&o, &mut bs.rng)
                    } else {
                        bs.ac.policy.mean_one(&o)
                    };
                    bs.prev_obs = Some(o);
                    bs.prev_action = raw.clone();
                    raws.push(raw);
                }
                self.event(Phase::BsAct);
                for (n, raw) in raws.iter().enumerate() {
                    place(n, &clip_action(raw), &mut w)?;
                }
            }
        }
        Ok(BeamformerSet::new(w))
    }
}
