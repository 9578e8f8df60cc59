//! Paired evaluation of simple reference policies on the crossing network.

use corridor_rl::eval::{evaluate, EvalConfig};
use corridor_rl::mdp::Action;
use corridor_rl::policy::{ConstantPolicy, Policy, RandomPolicy, VerticalAvoidancePolicy};

fn main() -> corridor_rl::Result<()> {
    let config = EvalConfig {
        episodes: 20,
        seed: 1,
        ..Default::default()
    };
    println!("{}", config.descriptor());
    let policies: Vec<Box<dyn Policy>> = vec![
        Box::new(ConstantPolicy(Action::MaintainSpeed)),
        Box::new(RandomPolicy),
        Box::new(VerticalAvoidancePolicy::default()),
    ];
    for p in &policies {
        let r = evaluate(p.as_ref(), &config)?;
        println!(
            "{:<20} flights {:>4}/{:<4} nmacs {:>4}/{:<4} risk ratio {:?} ({:.1} s)",
            r.policy,
            r.logic.flights,
            r.baseline.flights,
            r.logic.nmacs,
            r.baseline.nmacs,
            r.risk_ratio,
            r.wall_clock_s
        );
    }
    Ok(())
}
