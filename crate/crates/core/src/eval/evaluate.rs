use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::derive_seed;
use crate::mdp::{CorridorEnv, EnvConfig, EpisodeStats, Horizon, N_ACTIONS};
use crate::policy::Policy;
use crate::sim::{generate_network, generate_scenario, NetworkConfig, Scenario, ScenarioConfig};

/// P(NMAC) with the logic over P(NMAC) without it; `None` when the baseline
/// had no NMACs.
pub fn risk_ratio(p_logic: f64, p_baseline: f64) -> Option<f64> {
    (p_baseline > 0.0).then(|| p_logic / p_baseline)
}

/// Empirical action frequencies, or `None` when no action was logged.
pub fn action_distribution(counts: &[u64; N_ACTIONS]) -> Option<[f64; N_ACTIONS]> {
    let total: u64 = counts.iter().sum();
    (total > 0).then(|| {
        let mut p = [0.0; N_ACTIONS];
        for (pi, &c) in p.iter_mut().zip(counts) {
            *pi = c as f64 / total as f64;
        }
        p
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub network: NetworkConfig,
    pub scenario: ScenarioConfig,
    pub env: EnvConfig,
    pub episodes: usize,
    pub seed: u64,
    /// Extra simulated time allowed for airborne flights to land.
    pub drain_s: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            network: NetworkConfig::default(),
            scenario: ScenarioConfig::default(),
            env: EnvConfig::default(),
            episodes: 20,
            seed: 0,
            drain_s: 1800.0,
        }
    }
}

impl EvalConfig {
    pub fn descriptor(&self) -> String {
        format!(
            "{} vertiports={} fleet={} p_comm={} p_equip={} surveillance={} episodes={} duration_s={}",
            self.network.topology.as_str(),
            self.network.vertiports,
            self.scenario.fleet_size,
            self.scenario.p_comm,
            self.scenario.p_equip,
            self.env.surveillance.as_str(),
            self.episodes,
            self.scenario.duration_s
        )
    }

    /// The evaluation scenarios, one per episode, fixed by the seed.
    pub fn scenarios(&self) -> Result<Vec<Scenario>> {
        let network = generate_network(&self.network, derive_seed(self.seed, &[0xE7A1]))?;
        (0..self.episodes as u64)
            .map(|i| generate_scenario(&network, &self.scenario, derive_seed(self.seed, &[0x5CE7, i])))
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ArmResult {
    pub episodes: usize,
    pub flights: u64,
    pub nmacs: u64,
    pub cancelled: u64,
    pub agent_steps: u64,
    pub flight_time_s: f64,
    pub action_counts: [u64; N_ACTIONS],
}

impl ArmResult {
    fn add(&mut self, s: &EpisodeStats) {
        self.episodes += 1;
        self.flights += s.arrivals;
        self.nmacs += s.nmacs;
        self.cancelled += s.cancelled;
        self.agent_steps += s.agent_steps;
        self.flight_time_s += s.flight_time_s;
        for (a, b) in self.action_counts.iter_mut().zip(s.action_counts) {
            *a += b;
        }
    }

    /// NMAC events per completed flight.
    pub fn p_nmac(&self) -> f64 {
        if self.flights == 0 {
            0.0
        } else {
            self.nmacs as f64 / self.flights as f64
        }
    }

    pub fn mean_flight_s(&self) -> f64 {
        if self.flights == 0 {
            0.0
        } else {
            self.flight_time_s / self.flights as f64
        }
    }

    pub fn action_distribution(&self) -> Option<[f64; N_ACTIONS]> {
        action_distribution(&self.action_counts)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub descriptor: String,
    pub policy: String,
    pub logic: ArmResult,
    pub baseline: ArmResult,
    pub risk_ratio: Option<f64>,
    pub wall_clock_s: f64,
    pub transitions_per_s: f64,
}

impl EvalReport {
    pub fn action_distribution(&self) -> Option<[f64; N_ACTIONS]> {
        self.logic.action_distribution()
    }
}

/// Runs one episode to completion. Equipped aircraft act with `policy`;
/// with no policy every agent keeps its current speed and altitude.
pub fn run_episode(
    scenario: &Scenario,
    env: &EnvConfig,
    env_seed: u64,
    policy: &dyn Policy,
    rng: &mut ChaCha8Rng,
) -> Result<EpisodeStats> {
    let mut env = CorridorEnv::new(scenario, env.clone(), env_seed)?;
    while !env.is_done() {
        let ids: Vec<u32> = env.agents().keys().copied().collect();
        let obs: Vec<_> = env.agents().values().collect();
        let actions = policy.act_batch(&obs, rng)?;
        let pairs: Vec<(u32, usize)> = ids.into_iter().zip(actions).collect();
        env.step(&pairs)?;
    }
    Ok(env.stats().clone())
}

/// Paired evaluation over explicit scenarios: each is flown once with the
/// policy and once with every aircraft unequipped, using the same seeds.
pub fn evaluate_scenarios(
    policy: &dyn Policy,
    scenarios: &[Scenario],
    config: &EvalConfig,
    descriptor: String,
) -> Result<EvalReport> {
    let start = Instant::now();
    let mut env = config.env.clone();
    let horizon_s = scenarios.iter().map(|s| s.duration_s).fold(0.0, f64::max) + config.drain_s;
    env.horizon = Horizon::Drain { max_s: horizon_s };
    let results: Vec<Result<(EpisodeStats, EpisodeStats)>> = scenarios
        .par_iter()
        .enumerate()
        .map(|(i, sc)| {
            let env_seed = derive_seed(config.seed, &[0xE5, i as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[0xAC7, i as u64]));
            let logic = run_episode(sc, &env, env_seed, policy, &mut rng)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[0xAC7, i as u64]));
            let baseline = run_episode(&sc.unequipped(), &env, env_seed, policy, &mut rng)?;
            Ok((logic, baseline))
        })
        .collect();
    let mut logic = ArmResult::default();
    let mut baseline = ArmResult::default();
    for r in results {
        let (l, b) = r?;
        logic.add(&l);
        baseline.add(&b);
    }
    if logic.flights == 0 || baseline.flights == 0 {
        return Err(Error::Evaluation("no flights completed".into()));
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok(EvalReport {
        descriptor,
        policy: policy.name(),
        risk_ratio: risk_ratio(logic.p_nmac(), baseline.p_nmac()),
        transitions_per_s: (logic.agent_steps + baseline.agent_steps) as f64 / elapsed.max(1e-9),
        wall_clock_s: elapsed,
        logic,
        baseline,
    })
}

pub fn evaluate(policy: &dyn Policy, config: &EvalConfig) -> Result<EvalReport> {
    let scenarios = config.scenarios()?;
    evaluate_scenarios(policy, &scenarios, config, config.descriptor())
}
