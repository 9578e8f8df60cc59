//! Helpers shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::sync::Arc;

use corridor_rl::config::Config;
use corridor_rl::eval::{evaluate, EvalReport};
use corridor_rl::harness::train;
use corridor_rl::mdp::{INTRUDER_DIM, N_ACTIONS, OWNSHIP_DIM};
use corridor_rl::nn::max_relative_error;
use corridor_rl::nn::numeric_gradient_stable;
use corridor_rl::policy::ActorPolicy;
use corridor_rl::sacd::{
    actor_loss, critic_loss, critic_loss_grad, ActionMode, Observation, SacdAgent, SacdConfig, Transition,
    TransitionBatch,
};
use corridor_rl::sim::{Aircraft, AircraftType, FlightDemand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Central-difference step ladder for the full-network checks.
pub const FD_STEPS: [f64; 4] = [1e-6, 1e-5, 1e-4, 1e-3];

pub fn demand(id: u32) -> FlightDemand {
    FlightDemand {
        id,
        departure_s: 0.0,
        origin: 0,
        destination: 1,
        aircraft_type: AircraftType::Rotorcraft,
        comm: true,
        equipped: true,
        altitude_offset_ft: 0.0,
        lane: 0,
        cruise_kt: 40.0,
    }
}

/// Aircraft at `(x, y, z_ft)` flying east along a long straight route.
pub fn aircraft_at(id: u32, x: f64, y: f64, z_ft: f64) -> Aircraft {
    let route = Arc::new(vec![(x, y), (x + 50_000.0, y)]);
    let mut a = Aircraft::spawn(&demand(id), route, &[400.0, 700.0, 1000.0, 1300.0, 1600.0], 0.0);
    a.z_ft = z_ft;
    a
}

pub fn random_observation<R: Rng>(rng: &mut R, max_intruders: usize) -> Observation {
    let count = rng.random_range(0..=max_intruders);
    let mut v = |n: usize| (0..n).map(|_| rng.random_range(-1.0f32..1.0)).collect::<Vec<_>>();
    let own = v(OWNSHIP_DIM);
    let intruders = (0..count).map(|_| v(INTRUDER_DIM)).collect();
    Observation::new(own, intruders)
}

pub fn random_batch<R: Rng>(rng: &mut R, n: usize) -> TransitionBatch {
    TransitionBatch::from_transitions((0..n).map(|i| Transition {
        state: random_observation(rng, 4),
        action: rng.random_range(0..N_ACTIONS as u8),
        reward: rng.random_range(-1.0f32..0.0),
        next_state: random_observation(rng, 4),
        done: rng.random_bool(0.2),
        worker: 0,
        seq: i as u64,
    }))
}

pub fn small_agent_config(hidden: Vec<usize>) -> SacdConfig {
    SacdConfig {
        hidden,
        ..SacdConfig::default()
    }
}

/// Maximum relative error of the actor and both critic gradients against
/// central differences, for one random f64 agent and batch.
pub fn full_gradient_errors(seed: u64) -> [f64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agent = SacdAgent::<f64>::new(small_agent_config(vec![12, 10]), &mut rng).unwrap();
    agent.set_log_alpha(rng.random_range(-2.0f64..0.5));
    let batch = random_batch(&mut rng, 4);

    let (_, _, analytic) = agent.actor_loss_grad(&batch).unwrap();
    let min_q = agent.min_q(&batch).unwrap();
    let mut probe = agent.actor.clone();
    let numeric = numeric_gradient_stable(&agent.actor.flatten(), &FD_STEPS, |p| {
        probe.load_flat(p).unwrap();
        actor_loss(&probe, &batch, &min_q, agent.alpha(), N_ACTIONS).unwrap()
    });
    let actor = max_relative_error(&analytic, &numeric);

    let targets = agent.q_targets(&batch).unwrap();
    let critic = |net: &corridor_rl::sacd::EncodedNet<f64>| {
        let (_, analytic) = critic_loss_grad(net, &batch, &targets, N_ACTIONS).unwrap();
        let mut probe = net.clone();
        let numeric = numeric_gradient_stable(&net.flatten(), &FD_STEPS, |p| {
            probe.load_flat(p).unwrap();
            critic_loss(&probe, &batch, &targets, N_ACTIONS).unwrap()
        });
        max_relative_error(&analytic, &numeric)
    };
    [actor, critic(&agent.critic1), critic(&agent.critic2)]
}

/// Single-state two-action bandit with rewards (1, 0) and fixed α. Returns
/// the learner steps taken and the final policy; stops once the policy is
/// within `tolerance` total variation of softmax(r / α) or after `max_steps`.
pub fn bandit(alpha: f64, max_steps: usize, tolerance: f64, seed: u64) -> (usize, [f64; 2]) {
    let config = SacdConfig {
        own_dim: 1,
        intruder_dim: 1,
        k_dim: 1,
        hidden: vec![16, 16],
        n_actions: 2,
        actor_lr: 1e-3,
        critic_lr: 1e-3,
        initial_alpha: alpha,
        learn_alpha: false,
        ..SacdConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agent = SacdAgent::<f64>::new(config, &mut rng).unwrap();
    let s = Observation::new(vec![1.0], Vec::new());
    let pool: Vec<Transition> = (0..2u8)
        .map(|a| Transition {
            state: s.clone(),
            action: a,
            reward: if a == 0 { 1.0 } else { 0.0 },
            next_state: s.clone(),
            done: true,
            worker: 0,
            seq: a as u64,
        })
        .collect();
    let expected = boltzmann2(1.0 / alpha);
    let mut p = [0.5, 0.5];
    for step in 1..=max_steps {
        let batch = TransitionBatch::from_transitions((0..32).map(|_| pool[rng.random_range(0..2)].clone()));
        agent.learn_step(&batch).unwrap();
        let pi = agent.policy(&[&s]).unwrap();
        p = [pi[0], pi[1]];
        if step % 100 == 0 && total_variation(&p, &expected) < tolerance {
            return (step, p);
        }
    }
    (max_steps, p)
}

/// `softmax([z, 0])`.
pub fn boltzmann2(z: f64) -> [f64; 2] {
    let p = 1.0 / (1.0 + (-z).exp());
    [p, 1.0 - p]
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub struct DeskOutcome {
    pub seed: u64,
    pub report: EvalReport,
    pub train_s: f64,
}

/// Trains the desk preset with `seed` and evaluates the greedy policy.
pub fn desk_run(seed: u64) -> DeskOutcome {
    let mut config = Config::desk();
    config.train.seed = seed;
    let (agent, report) = train(&config.train, None).unwrap();
    let policy = ActorPolicy::new(agent.actor, ActionMode::Greedy);
    let eval = evaluate(&policy, &config.eval_config(Config::desk_eval_seed(seed))).unwrap();
    DeskOutcome {
        seed,
        report: eval,
        train_s: report.elapsed_s,
    }
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
