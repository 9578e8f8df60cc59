use std::collections::{BTreeMap, BTreeSet};

use super::action::{apply_action, Action};
use super::reward::{reward, RewardConfig, RewardContext};
use super::state::{build_observation, Normalization};
use super::N_ACTIONS;
use crate::error::{Error, Result};
use crate::sacd::Observation;
use crate::sim::{Aircraft, Event, EventKind, RawObservation, Scenario, SimConfig, Surveillance, WorldState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    /// Stop at the scenario duration, leaving flights airborne.
    Duration,
    /// Run past the duration until every flight has landed, up to `max_s`.
    Drain { max_s: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvConfig {
    pub sim: SimConfig,
    pub surveillance: Surveillance,
    pub reward: RewardConfig,
    pub normalization: Normalization,
    pub horizon: Horizon,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            surveillance: Surveillance::Perfect,
            reward: RewardConfig::default(),
            normalization: Normalization::default(),
            horizon: Horizon::Duration,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeStats {
    pub decision_steps: u64,
    pub agent_steps: u64,
    pub departures: u64,
    pub arrivals: u64,
    pub cancelled: u64,
    pub nmacs: u64,
    pub flight_time_s: f64,
    pub total_reward: f64,
    pub action_counts: [u64; N_ACTIONS],
}

impl EpisodeStats {
    pub fn merge(&mut self, other: &EpisodeStats) {
        self.decision_steps += other.decision_steps;
        self.agent_steps += other.agent_steps;
        self.departures += other.departures;
        self.arrivals += other.arrivals;
        self.cancelled += other.cancelled;
        self.nmacs += other.nmacs;
        self.flight_time_s += other.flight_time_s;
        self.total_reward += other.total_reward;
        for (a, b) in self.action_counts.iter_mut().zip(other.action_counts) {
            *a += b;
        }
    }
}

/// One agent's experience for one decision step.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentTransition {
    pub id: u32,
    pub state: Observation,
    pub action: u8,
    pub reward: f64,
    pub next_state: Observation,
    pub done: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepOutcome {
    pub transitions: Vec<AgentTransition>,
    pub events: Vec<Event>,
}

/// Multi-agent decision-step environment: every equipped aircraft en route
/// is an agent; unequipped aircraft fly their plan unchanged.
#[derive(Clone, Debug)]
pub struct CorridorEnv {
    world: WorldState,
    config: EnvConfig,
    duration_s: f64,
    current: BTreeMap<u32, Observation>,
    stats: EpisodeStats,
}

impl CorridorEnv {
    pub fn new(scenario: &Scenario, config: EnvConfig, seed: u64) -> Result<Self> {
        config.reward.validate()?;
        let world = WorldState::new(scenario, config.sim.clone(), seed)?;
        Ok(Self {
            world,
            config,
            duration_s: scenario.duration_s,
            current: BTreeMap::new(),
            stats: EpisodeStats::default(),
        })
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn stats(&self) -> &EpisodeStats {
        &self.stats
    }

    /// Agents awaiting an action and their current observations.
    pub fn agents(&self) -> &BTreeMap<u32, Observation> {
        &self.current
    }

    pub fn is_done(&self) -> bool {
        let t = self.world.clock();
        match self.config.horizon {
            Horizon::Duration => t >= self.duration_s,
            Horizon::Drain { max_s } => (t >= self.duration_s && self.world.is_drained()) || t >= max_s,
        }
    }

    fn time_fraction(&self) -> f64 {
        (self.world.clock() / self.duration_s).min(1.0)
    }

    fn observation_of(&self, raw: &RawObservation) -> Observation {
        build_observation(raw, self.time_fraction(), &self.config.normalization)
    }

    /// Applies one action per listed agent and advances one decision interval.
    pub fn step(&mut self, actions: &[(u32, usize)]) -> Result<StepOutcome> {
        for &(id, a) in actions {
            if !self.current.contains_key(&id) {
                return Err(Error::UnknownAircraft(id));
            }
            Action::from_index(a)?;
        }
        for &(id, a) in actions {
            let cmd = apply_action(self.world.get(id)?, self.world.lanes_ft(), a)?;
            let ac = self.world.get_mut(id)?;
            ac.command = cmd;
            ac.prev_action = a as u8;
            self.stats.action_counts[a] += 1;
        }

        let mut in_nmac = BTreeSet::new();
        let mut landed: BTreeMap<u32, Aircraft> = BTreeMap::new();
        let mut events = Vec::new();
        let dt = self.config.sim.dt_s;
        for _ in 0..self.config.sim.decision_ticks {
            let tick_events = self.world.tick(dt)?;
            for &(a, b) in self.world.active_violations() {
                in_nmac.insert(a);
                in_nmac.insert(b);
            }
            for a in self.world.landed_last_tick() {
                landed.insert(a.id, a.clone());
            }
            for e in &tick_events {
                match &e.kind {
                    EventKind::Departure { .. } => self.stats.departures += 1,
                    EventKind::Arrival { flight_s, .. } => {
                        self.stats.arrivals += 1;
                        self.stats.flight_time_s += flight_s;
                    }
                    EventKind::Cancel { .. } => self.stats.cancelled += 1,
                    EventKind::Nmac(_) => self.stats.nmacs += 1,
                }
            }
            events.extend(tick_events);
        }
        self.stats.decision_steps += 1;

        let surveillance = self.config.surveillance;
        let mut next: BTreeMap<u32, Observation> = BTreeMap::new();
        let mut transitions = Vec::with_capacity(actions.len());
        for &(id, a) in actions {
            let state = self.current.remove(&id).expect("checked above");
            let (next_state, closest, done) = if self.world.aircraft().contains_key(&id) {
                let raw = self.world.observe(id, surveillance)?;
                let obs = self.observation_of(&raw);
                next.insert(id, obs.clone());
                (obs, self.world.closest_traffic(id)?, false)
            } else if let Some(a) = landed.get(&id) {
                let raw = RawObservation {
                    ownship: a.kinematics(),
                    intruders: Vec::new(),
                };
                (self.observation_of(&raw), None, true)
            } else {
                // cancelled: truncation, bootstrap from the last observation
                (state.clone(), None, false)
            };
            let ctx = RewardContext {
                closest,
                nmac_in_interval: in_nmac.contains(&id),
            };
            let r = reward(&ctx, Action::from_index(a)?, &self.config.reward);
            self.stats.total_reward += r;
            self.stats.agent_steps += 1;
            transitions.push(AgentTransition {
                id,
                state,
                action: a as u8,
                reward: r,
                next_state,
                done,
            });
        }

        let equipped: Vec<u32> = self
            .world
            .aircraft()
            .values()
            .filter(|a| a.equipped)
            .map(|a| a.id)
            .collect();
        self.current.clear();
        for id in equipped {
            let obs = match next.remove(&id) {
                Some(o) => o,
                None => {
                    let raw = self.world.observe(id, surveillance)?;
                    self.observation_of(&raw)
                }
            };
            self.current.insert(id, obs);
        }
        Ok(StepOutcome { transitions, events })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{INTRUDER_DIM, OWNSHIP_DIM};
    use crate::sim::{generate_network, generate_scenario, NetworkConfig, ScenarioConfig};

    fn env(seed: u64) -> CorridorEnv {
        let net = generate_network(&NetworkConfig::default(), 0).unwrap();
        let sc = generate_scenario(
            &net,
            &ScenarioConfig {
                duration_s: 600.0,
                ..Default::default()
            },
            seed,
        )
        .unwrap();
        CorridorEnv::new(&sc, EnvConfig::default(), seed).unwrap()
    }

    #[test]
    fn one_transition_per_agent_per_step() {
        let mut e = env(1);
        let mut total = 0;
        while !e.is_done() {
            let actions: Vec<(u32, usize)> = e.agents().keys().map(|&id| (id, 1)).collect();
            let out = e.step(&actions).unwrap();
            assert_eq!(out.transitions.len(), actions.len());
            for t in &out.transitions {
                assert_eq!(t.state.ownship.len(), OWNSHIP_DIM);
                assert!(t.next_state.intruders.iter().all(|h| h.len() == INTRUDER_DIM));
                assert!(t.reward <= -0.001 + 1e-12);
            }
            total += out.transitions.len();
        }
        assert!(total > 0);
        assert_eq!(e.stats().agent_steps as usize, total);
        assert_eq!(e.world().clock(), 600.0);
    }

    #[test]
    fn acting_for_an_unknown_agent_fails() {
        let mut e = env(2);
        assert!(e.step(&[(999, 1)]).is_err());
    }

    #[test]
    fn same_seed_same_rollout() {
        let run = |seed| {
            let mut e = env(seed);
            let mut rewards = Vec::new();
            while !e.is_done() {
                let actions: Vec<(u32, usize)> = e.agents().keys().map(|&id| (id, (id as usize) % 6)).collect();
                rewards.extend(e.step(&actions).unwrap().transitions.into_iter().map(|t| t.reward));
            }
            (rewards, crate::sim::write_event_log(e.world().log()))
        };
        assert_eq!(run(3), run(3));
    }
}
