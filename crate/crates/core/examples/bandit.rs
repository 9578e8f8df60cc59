//! Two-armed bandit with rewards (1, 0): the learned policy approaches
//! softmax(r / alpha) for each fixed temperature.

use corridor_rl::sacd::{Observation, SacdAgent, SacdConfig, Transition, TransitionBatch};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> corridor_rl::Result<()> {
    for alpha in [2.0, 1.0, 0.5, 0.25] {
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
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut agent = SacdAgent::<f64>::new(config, &mut rng)?;
        let s = Observation::new(vec![1.0], Vec::new());
        let arm = |a: u8| Transition {
            state: s.clone(),
            action: a,
            reward: if a == 0 { 1.0 } else { 0.0 },
            next_state: s.clone(),
            done: true,
            worker: 0,
            seq: 0,
        };
        for _ in 0..5000 {
            let batch = TransitionBatch::from_transitions((0..32).map(|_| arm(rng.random_range(0..2))));
            agent.learn_step(&batch)?;
        }
        let p = agent.policy(&[&s])?;
        let expected = 1.0 / (1.0 + (-1.0 / alpha).exp());
        println!("alpha {alpha:<4}  pi(arm 0) {:.4}  softmax {:.4}", p[0], expected);
    }
    Ok(())
}
