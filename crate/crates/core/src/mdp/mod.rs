//! Bridge between the simulator and the learner: state vectors, action
//! semantics, reward, and a multi-agent environment wrapper.

mod action;
mod env;
mod reward;
mod state;

pub use action::{apply_action, current_lane, Action};
pub use env::{CorridorEnv, EnvConfig, EpisodeStats, Horizon, StepOutcome};
pub use reward::{reward, RewardConfig, RewardContext};
pub use state::{build_intruder_states, build_observation, build_ownship_state, Normalization};

/// Number of upcoming flight-plan waypoints in each state vector.
pub const N_WPT: usize = 5;
pub const N_ACTIONS: usize = 6;
/// 9 kinematic features, one-hot previous action, waypoint offsets.
pub const OWNSHIP_DIM: usize = 9 + N_ACTIONS + 2 * N_WPT;
/// 10 relative features, one-hot previous action, waypoint offsets.
pub const INTRUDER_DIM: usize = 10 + N_ACTIONS + 2 * N_WPT;
