//! Actor throughput against worker count, and the learner rate while one
//! actor is stalled.

use std::time::Duration;

use corridor_rl::config::Config;
use corridor_rl::harness::{actor_throughput, stall_probe, TrainMode};

fn main() -> corridor_rl::Result<()> {
    let mut config = Config::desk().train;
    config.mode = TrainMode::Async;
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    println!("{cores} core(s) available");
    for workers in [1, 2, 4] {
        let rate = actor_throughput(&config, workers, Duration::from_secs(3))?;
        println!("{workers} worker(s): {rate:.0} transitions/s");
    }
    let r = stall_probe(&config, 0, Duration::from_secs(5))?;
    println!(
        "learner {:.1} steps/s before, {:.1} during the stall ({:+.1}% change, warm-up {:.1} s)",
        r.before,
        r.during,
        -100.0 * r.degradation(),
        r.warmup_s
    );
    Ok(())
}
