//! Desk-scale training on the crossing network followed by a paired greedy
//! evaluation. Extra `key=value` arguments override the desk settings.

use corridor_rl::config::Config;
use corridor_rl::eval::evaluate;
use corridor_rl::harness::train;
use corridor_rl::policy::ActorPolicy;
use corridor_rl::sacd::ActionMode;

fn main() -> corridor_rl::Result<()> {
    let mut config = Config::desk();
    config.train.iterations = 600;
    config.eval_episodes = 20;
    for arg in std::env::args().skip(1) {
        let (k, v) = arg
            .split_once('=')
            .ok_or_else(|| corridor_rl::Error::Config(format!("expected key=value, got '{arg}'")))?;
        config.set(k, v)?;
    }
    let (agent, report) = train(&config.train, None)?;
    println!(
        "trained: {} iterations, {} learner steps, {} episodes, {:.1} s",
        report.iterations(),
        report.learner_steps,
        report.episodes,
        report.elapsed_s
    );
    if let Some(s) = &report.last {
        println!(
            "last step: critic {:.4}/{:.4} actor {:.4} alpha {:.4} entropy {:.3} target {:.3}",
            s.critic1_loss, s.critic2_loss, s.actor_loss, s.alpha, s.entropy, s.target_entropy
        );
    }
    let policy = ActorPolicy::new(agent.actor.clone(), ActionMode::Greedy);
    let r = evaluate(&policy, &config.eval_config(Config::desk_eval_seed(config.train.seed)))?;
    println!(
        "greedy: nmacs {}/{} flights {}/{} risk ratio {:?}",
        r.logic.nmacs, r.baseline.nmacs, r.logic.flights, r.baseline.flights, r.risk_ratio
    );
    if let Some(p) = r.action_distribution() {
        println!("action distribution {:?}", p.map(|v| (v * 1000.0).round() / 1000.0));
    }
    Ok(())
}
