//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::EvalConfig;
use crate::harness::{TrainConfig, TrainMode};
use crate::mdp::Horizon;
use crate::sim::{Surveillance, Topology};

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub train: TrainConfig,
    pub eval_episodes: usize,
    pub eval_drain_s: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            eval_episodes: 20,
            eval_drain_s: 1800.0,
        }
    }
}

fn parse<V: std::str::FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value '{value}' for {key}")))
}

fn parse_list<V: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<V>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn join<V: ToString>(v: &[V]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Training seeds of the desk-scale end-to-end check.
pub const DESK_SEEDS: [u64; 3] = [1, 2, 3];

impl Config {
    /// Small-network settings for single-machine training on the crossing
    /// network with 10 aircraft.
    pub fn desk() -> Self {
        let mut c = Config::default();
        let t = &mut c.train;
        t.network.topology = Topology::Crossing;
        t.network.vertiports = 4;
        t.scenario.fleet_size = 10;
        t.scenario.p_comm = 1.0;
        t.scenario.p_equip = 1.0;
        t.agent.hidden = vec![64, 64];
        t.agent.actor_lr = 3e-4;
        t.agent.critic_lr = 3e-4;
        t.agent.alpha_lr = 3e-4;
        t.agent.initial_alpha = 0.05;
        t.agent.gamma = 0.95;
        t.batch_size = 128;
        t.warmup = 2000;
        t.mode = TrainMode::Lockstep;
        t.learn_per_iteration = 16;
        t.workers = 4;
        t.iterations = 2000;
        c.eval_episodes = 50;
        c
    }

    /// Evaluation seed paired with a desk training seed; disjoint from the
    /// training scenario stream.
    pub fn desk_eval_seed(train_seed: u64) -> u64 {
        train_seed.wrapping_add(1000)
    }

    pub fn eval_config(&self, seed: u64) -> EvalConfig {
        let mut env = self.train.env.clone();
        env.horizon = Horizon::Duration;
        EvalConfig {
            network: self.train.network.clone(),
            scenario: self.train.scenario.clone(),
            env,
            episodes: self.eval_episodes,
            seed,
            drain_s: self.eval_drain_s,
        }
    }

    /// Sets one key. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.train;
        let a = &mut t.agent;
        let r = &mut t.env.reward;
        match key {
            "seed" => t.seed = parse(key, value)?,
            "sacd.gamma" => a.gamma = parse(key, value)?,
            "sacd.tau" => a.tau = parse(key, value)?,
            "sacd.lr" => {
                let lr = parse(key, value)?;
                a.actor_lr = lr;
                a.critic_lr = lr;
                a.alpha_lr = lr;
            }
            "sacd.actor_lr" => a.actor_lr = parse(key, value)?,
            "sacd.critic_lr" => a.critic_lr = parse(key, value)?,
            "sacd.alpha_lr" => a.alpha_lr = parse(key, value)?,
            "sacd.alpha0" => a.initial_alpha = parse(key, value)?,
            "sacd.learn_alpha" => a.learn_alpha = parse(key, value)?,
            "sacd.hidden" => a.hidden = parse_list(key, value)?,
            "sacd.batch_size" => t.batch_size = parse(key, value)?,
            "annealer.std_threshold" => a.annealer.std_threshold = parse(key, value)?,
            "annealer.window" => a.annealer.window = parse(key, value)?,
            "annealer.interval" => a.annealer.interval = parse(key, value)?,
            "annealer.start" => a.annealer.start = parse(key, value)?,
            "annealer.decay" => a.annealer.decay = parse(key, value)?,
            "annealer.floor" => a.annealer.floor = parse(key, value)?,
            "reward.chi" => r.chi = parse(key, value)?,
            "reward.delta" => r.delta = parse(key, value)?,
            "reward.epsilon" => r.epsilon = parse(key, value)?,
            "reward.lambda" => r.lambda = parse(key, value)?,
            "reward.omega" => r.omega = parse(key, value)?,
            "reward.d_x_nmac_ft" => r.nmac_horizontal_ft = parse(key, value)?,
            "reward.d_z_nmac_ft" => r.nmac_vertical_ft = parse(key, value)?,
            "reward.d_max_m" => r.d_max_m = parse(key, value)?,
            "replay.capacity" => t.buffer_capacity = parse(key, value)?,
            "harness.workers" => t.workers = parse(key, value)?,
            "harness.warmup" => t.warmup = parse(key, value)?,
            "harness.publish_every" => t.publish_every = parse(key, value)?,
            "harness.iterations" => t.iterations = parse(key, value)?,
            "harness.max_learner_steps" => {
                t.max_learner_steps = match value {
                    "none" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "harness.mode" => {
                t.mode = TrainMode::parse(value).ok_or_else(|| Error::Config(format!("unknown mode '{value}'")))?
            }
            "harness.learn_per_iteration" => t.learn_per_iteration = parse(key, value)?,
            "harness.ratio_cap" => {
                t.ratio_cap = match value {
                    "none" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "harness.metrics_every" => t.metrics_every = parse(key, value)?,
            "network.vertiports" => t.network.vertiports = parse(key, value)?,
            "network.extent_m" => t.network.extent_m = parse(key, value)?,
            "network.topology" => {
                t.network.topology =
                    Topology::parse(value).ok_or_else(|| Error::Config(format!("unknown topology '{value}'")))?
            }
            "network.parking_spots" => t.network.parking_spots = parse(key, value)?,
            "network.lanes_ft" => t.network.lanes_ft = parse_list(key, value)?,
            "network.jitter_m" => t.network.jitter_m = parse(key, value)?,
            "scenario.fleet_size" => t.scenario.fleet_size = parse(key, value)?,
            "scenario.duration_s" => t.scenario.duration_s = parse(key, value)?,
            "scenario.p_comm" => t.scenario.p_comm = parse(key, value)?,
            "scenario.p_equip" => t.scenario.p_equip = parse(key, value)?,
            "scenario.cruise_kt_min" => t.scenario.cruise_kt.0 = parse(key, value)?,
            "scenario.cruise_kt_max" => t.scenario.cruise_kt.1 = parse(key, value)?,
            "scenario.surrogate_fraction" => t.scenario.surrogate_fraction = parse(key, value)?,
            "scenario.departure_spacing_s" => {
                let v = parse(key, value)?;
                t.scenario.departure_spacing_s = v;
                t.env.sim.departure_spacing_s = v;
            }
            "scenario.demand_scale" => t.scenario.demand_scale = parse(key, value)?,
            "sim.dt_s" => t.env.sim.dt_s = parse(key, value)?,
            "sim.decision_ticks" => t.env.sim.decision_ticks = parse(key, value)?,
            "sim.cancel_factor" => t.env.sim.cancel_factor = parse(key, value)?,
            "sim.surveillance" => {
                t.env.surveillance = Surveillance::parse(value)
                    .ok_or_else(|| Error::Config(format!("unknown surveillance '{value}'")))?
            }
            "eval.episodes" => self.eval_episodes = parse(key, value)?,
            "eval.drain_s" => self.eval_drain_s = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected 'key = value', got '{line}'"),
            })?;
            self.set(k.trim(), v.trim()).map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Config::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// Loads a file on top of the defaults. A first line of `preset = desk`
    /// starts from the desk settings instead.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = match text
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty() && !l.starts_with('#'))
        {
            Some(l) if l.replace(' ', "") == "preset=desk" => Config::desk(),
            _ => Config::default(),
        };
        let body: String = text
            .lines()
            .filter(|l| l.replace(' ', "") != "preset=desk")
            .collect::<Vec<_>>()
            .join("\n");
        c.apply_text(&body)?;
        Ok(c)
    }

    /// Every key with its current value, in a form `from_text` accepts.
    pub fn to_text(&self) -> String {
        let t = &self.train;
        let a = &t.agent;
        let r = &t.env.reward;
        let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
        let entries: Vec<(&str, String)> = vec![
            ("seed", t.seed.to_string()),
            ("sacd.gamma", a.gamma.to_string()),
            ("sacd.tau", a.tau.to_string()),
            ("sacd.actor_lr", a.actor_lr.to_string()),
            ("sacd.critic_lr", a.critic_lr.to_string()),
            ("sacd.alpha_lr", a.alpha_lr.to_string()),
            ("sacd.alpha0", a.initial_alpha.to_string()),
            ("sacd.learn_alpha", a.learn_alpha.to_string()),
            ("sacd.hidden", join(&a.hidden)),
            ("sacd.batch_size", t.batch_size.to_string()),
            ("annealer.std_threshold", a.annealer.std_threshold.to_string()),
            ("annealer.window", a.annealer.window.to_string()),
            ("annealer.interval", a.annealer.interval.to_string()),
            ("annealer.start", a.annealer.start.to_string()),
            ("annealer.decay", a.annealer.decay.to_string()),
            ("annealer.floor", a.annealer.floor.to_string()),
            ("reward.chi", r.chi.to_string()),
            ("reward.delta", r.delta.to_string()),
            ("reward.epsilon", r.epsilon.to_string()),
            ("reward.lambda", r.lambda.to_string()),
            ("reward.omega", r.omega.to_string()),
            ("reward.d_x_nmac_ft", r.nmac_horizontal_ft.to_string()),
            ("reward.d_z_nmac_ft", r.nmac_vertical_ft.to_string()),
            ("reward.d_max_m", r.d_max_m.to_string()),
            ("replay.capacity", t.buffer_capacity.to_string()),
            ("harness.workers", t.workers.to_string()),
            ("harness.warmup", t.warmup.to_string()),
            ("harness.publish_every", t.publish_every.to_string()),
            ("harness.iterations", t.iterations.to_string()),
            (
                "harness.max_learner_steps",
                opt(t.max_learner_steps.map(|v| v.to_string())),
            ),
            ("harness.mode", t.mode.as_str().to_string()),
            ("harness.learn_per_iteration", t.learn_per_iteration.to_string()),
            ("harness.ratio_cap", opt(t.ratio_cap.map(|v| v.to_string()))),
            ("harness.metrics_every", t.metrics_every.to_string()),
            ("network.vertiports", t.network.vertiports.to_string()),
            ("network.extent_m", t.network.extent_m.to_string()),
            ("network.topology", t.network.topology.as_str().to_string()),
            ("network.parking_spots", t.network.parking_spots.to_string()),
            ("network.lanes_ft", join(&t.network.lanes_ft)),
            ("network.jitter_m", t.network.jitter_m.to_string()),
            ("scenario.fleet_size", t.scenario.fleet_size.to_string()),
            ("scenario.duration_s", t.scenario.duration_s.to_string()),
            ("scenario.p_comm", t.scenario.p_comm.to_string()),
            ("scenario.p_equip", t.scenario.p_equip.to_string()),
            ("scenario.cruise_kt_min", t.scenario.cruise_kt.0.to_string()),
            ("scenario.cruise_kt_max", t.scenario.cruise_kt.1.to_string()),
            ("scenario.surrogate_fraction", t.scenario.surrogate_fraction.to_string()),
            (
                "scenario.departure_spacing_s",
                t.scenario.departure_spacing_s.to_string(),
            ),
            ("scenario.demand_scale", t.scenario.demand_scale.to_string()),
            ("sim.dt_s", t.env.sim.dt_s.to_string()),
            ("sim.decision_ticks", t.env.sim.decision_ticks.to_string()),
            ("sim.cancel_factor", t.env.sim.cancel_factor.to_string()),
            ("sim.surveillance", t.env.surveillance.as_str().to_string()),
            ("eval.episodes", self.eval_episodes.to_string()),
            ("eval.drain_s", self.eval_drain_s.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        for c in [Config::default(), Config::desk()] {
            assert_eq!(Config::from_text(&c.to_text()).unwrap(), c);
        }
    }

    #[test]
    fn symbol_keys_set_reward_constants() {
        let c = Config::from_text("reward.chi = 0.2\n# comment\nreward.lambda = 0.02 # trailing\n").unwrap();
        assert_eq!(c.train.env.reward.chi, 0.2);
        assert_eq!(c.train.env.reward.lambda, 0.02);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = Config::from_text("seed = 1\nbogus = 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn desk_preset_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("desk.cfg");
        std::fs::write(&path, "preset = desk\nseed = 7\n").unwrap();
        let c = Config::load(&path).unwrap();
        assert_eq!(c.train.seed, 7);
        assert_eq!(c.train.agent.hidden, vec![64, 64]);
    }
}
