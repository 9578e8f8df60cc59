//! Desk-scale training with a paired greedy evaluation every `every`
//! iterations. Extra `key=value` arguments override the desk settings;
//! `every=N` sets the evaluation period.

use std::sync::Arc;

use corridor_rl::config::Config;
use corridor_rl::eval::evaluate;
use corridor_rl::harness::{derive_seed, LockstepTrainer, ScenarioSource};
use corridor_rl::policy::ActorPolicy;
use corridor_rl::sacd::{ActionMode, SacdAgent};
use corridor_rl::sim::generate_network;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> corridor_rl::Result<()> {
    let mut config = Config::desk();
    config.eval_episodes = 20;
    let mut every = 250u64;
    for arg in std::env::args().skip(1) {
        let (k, v) = arg
            .split_once('=')
            .ok_or_else(|| corridor_rl::Error::Config(format!("expected key=value, got '{arg}'")))?;
        match k {
            "every" => {
                every = v
                    .parse()
                    .map_err(|_| corridor_rl::Error::Config(format!("bad every '{v}'")))?
            }
            _ => config.set(k, v)?,
        }
    }
    let t = &config.train;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(t.seed, &[u64::MAX - 2]));
    let agent = SacdAgent::<f32>::new(t.agent.clone(), &mut rng)?;
    let network = generate_network(&t.network, derive_seed(t.seed, &[u64::MAX - 3]))?;
    let source = ScenarioSource {
        network: Arc::new(network),
        config: t.scenario.clone(),
        seed: t.seed,
    };
    let mut trainer = LockstepTrainer::new(t, agent, source)?;
    let eval = config.eval_config(Config::desk_eval_seed(t.seed));
    println!("iteration learner_steps alpha entropy risk_ratio p_maintain distribution");
    for i in 1..=t.iterations {
        trainer.collect_iteration()?;
        let mut last = None;
        if trainer.buffer.len() >= t.warmup.max(t.batch_size) {
            last = trainer
                .learn(t.learn_per_iteration, t.batch_size, t.publish_every)?
                .pop();
        }
        if i % every == 0 {
            let policy = ActorPolicy::new(trainer.agent.actor.clone(), ActionMode::Greedy);
            let r = evaluate(&policy, &eval)?;
            let p = r.action_distribution().unwrap_or([0.0; 6]);
            let s = last.unwrap_or_default();
            println!(
                "{i} {} {:.4} {:.3} {} {:.3} {:?}",
                trainer.learner_steps,
                s.alpha,
                s.entropy,
                r.risk_ratio.map_or("n/a".into(), |v| format!("{v:.3}")),
                p[1] + p[4],
                p.map(|v| (v * 1000.0).round() / 1000.0)
            );
        }
    }
    Ok(())
}
