use std::path::Path;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::checkpoint::Manifest;
use crate::sacd::SacdAgent;

/// Everything besides the agent needed to resume training.
#[derive(Clone, Debug, PartialEq)]
pub struct HarnessState {
    pub env_steps: u64,
    pub learner_steps: u64,
    pub episodes: u64,
    pub snapshot_version: u64,
    pub buffer_len: usize,
    pub buffer_capacity: usize,
    pub buffer_pushed: u64,
    pub rng: ChaCha8Rng,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn unhex(s: &str) -> Result<[u8; 32]> {
    if s.len() != 64 {
        return Err(Error::Checkpoint(format!("bad rng seed length {}", s.len())));
    }
    let mut out = [0u8; 32];
    for (i, byte) in out.iter_mut().enumerate() {
        *byte =
            u8::from_str_radix(&s[2 * i..2 * i + 2], 16).map_err(|_| Error::Checkpoint("bad rng seed digit".into()))?;
    }
    Ok(out)
}

impl HarnessState {
    pub fn iterations(&self) -> u64 {
        self.env_steps / super::STEPS_PER_ITERATION
    }

    fn to_manifest(&self) -> Manifest {
        let mut m = Manifest::new();
        m.set("harness.env_steps", self.env_steps);
        m.set("harness.learner_steps", self.learner_steps);
        m.set("harness.episodes", self.episodes);
        m.set("harness.snapshot_version", self.snapshot_version);
        m.set("harness.buffer_len", self.buffer_len);
        m.set("harness.buffer_capacity", self.buffer_capacity);
        m.set("harness.buffer_pushed", self.buffer_pushed);
        m.set("harness.rng.seed", hex(&self.rng.get_seed()));
        m.set("harness.rng.stream", self.rng.get_stream());
        m.set("harness.rng.word_pos", self.rng.get_word_pos());
        m
    }

    fn from_manifest(m: &Manifest) -> Result<Self> {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::from_seed(unhex(m.require("harness.rng.seed")?)?);
        rng.set_stream(m.parse_value("harness.rng.stream")?);
        rng.set_word_pos(m.parse_value("harness.rng.word_pos")?);
        Ok(Self {
            env_steps: m.parse_value("harness.env_steps")?,
            learner_steps: m.parse_value("harness.learner_steps")?,
            episodes: m.parse_value("harness.episodes")?,
            snapshot_version: m.parse_value("harness.snapshot_version")?,
            buffer_len: m.parse_value("harness.buffer_len")?,
            buffer_capacity: m.parse_value("harness.buffer_capacity")?,
            buffer_pushed: m.parse_value("harness.buffer_pushed")?,
            rng,
        })
    }
}

/// Writes the agent, counters and learner RNG position into `dir`.
pub fn save_checkpoint(dir: &Path, agent: &SacdAgent<f32>, state: &HarnessState) -> Result<()> {
    agent.save(dir, &state.to_manifest())
}

pub fn restore_checkpoint(dir: &Path) -> Result<(SacdAgent<f32>, HarnessState)> {
    let (agent, manifest) = SacdAgent::<f32>::load(dir)?;
    let state = HarnessState::from_manifest(&manifest)?;
    Ok((agent, state))
}
