//! Central-difference check of the actor and critic gradients of a small
//! double-precision agent.

use corridor_rl::mdp::{INTRUDER_DIM, N_ACTIONS, OWNSHIP_DIM};
use corridor_rl::nn::{max_relative_error, numeric_gradient_stable};
use corridor_rl::sacd::{
    actor_loss, critic_loss, critic_loss_grad, Observation, SacdAgent, SacdConfig, Transition, TransitionBatch,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn observation(rng: &mut ChaCha8Rng) -> Observation {
    let n = rng.random_range(0..4);
    let mut v = |d: usize| (0..d).map(|_| rng.random_range(-1.0f32..1.0)).collect::<Vec<_>>();
    let own = v(OWNSHIP_DIM);
    Observation::new(own, (0..n).map(|_| v(INTRUDER_DIM)).collect())
}

fn main() -> corridor_rl::Result<()> {
    let steps = [1e-6, 1e-5, 1e-4, 1e-3];
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let config = SacdConfig {
            hidden: vec![12, 10],
            ..SacdConfig::default()
        };
        let agent = SacdAgent::<f64>::new(config, &mut rng)?;
        let batch = TransitionBatch::from_transitions((0..4).map(|i| Transition {
            state: observation(&mut rng),
            action: rng.random_range(0..N_ACTIONS as u8),
            reward: -0.05,
            next_state: observation(&mut rng),
            done: false,
            worker: 0,
            seq: i,
        }));

        let (_, _, analytic) = agent.actor_loss_grad(&batch)?;
        let min_q = agent.min_q(&batch)?;
        let mut probe = agent.actor.clone();
        let numeric = numeric_gradient_stable(&agent.actor.flatten(), &steps, |p| {
            probe.load_flat(p).unwrap();
            actor_loss(&probe, &batch, &min_q, agent.alpha(), N_ACTIONS).unwrap()
        });
        let actor = max_relative_error(&analytic, &numeric);

        let targets = agent.q_targets(&batch)?;
        let (_, analytic) = critic_loss_grad(&agent.critic1, &batch, &targets, N_ACTIONS)?;
        let mut probe = agent.critic1.clone();
        let numeric = numeric_gradient_stable(&agent.critic1.flatten(), &steps, |p| {
            probe.load_flat(p).unwrap();
            critic_loss(&probe, &batch, &targets, N_ACTIONS).unwrap()
        });
        let critic = max_relative_error(&analytic, &numeric);
        println!(
            "seed {seed}: {} params, actor {actor:.2e}, critic {critic:.2e}",
            agent.actor.param_count()
        );
    }
    Ok(())
}
