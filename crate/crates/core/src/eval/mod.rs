//! Evaluation protocol: paired logic/baseline runs, risk ratio, sweeps,
//! action distributions and the results table.

mod evaluate;
mod sweep;
mod table;

pub use evaluate::{
    action_distribution, evaluate, evaluate_scenarios, risk_ratio, run_episode, ArmResult, EvalConfig, EvalReport,
};
pub use sweep::{sweep, SweepAxis};
pub use table::{read_results, render_results, write_results, ResultRow};
