//! Communication-probability sweep of the rule-based policy, written as a
//! results table to `sweep_results.csv`.

use corridor_rl::config::Config;
use corridor_rl::eval::{render_results, sweep, write_results, ResultRow, SweepAxis};
use corridor_rl::policy::VerticalAvoidancePolicy;

fn main() -> corridor_rl::Result<()> {
    let config = Config::desk();
    let mut base = config.eval_config(1);
    base.episodes = 20;
    let values: Vec<String> = ["1.0", "0.75", "0.5", "0.25", "0.0"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let reports = sweep(&VerticalAvoidancePolicy::default(), SweepAxis::PComm, &values, &base)?;
    let rows: Vec<ResultRow> = reports
        .iter()
        .flat_map(|(v, r)| ResultRow::pair("p_comm", v, r))
        .collect();
    print!("{}", render_results(&rows));
    write_results(std::path::Path::new("sweep_results.csv"), &rows)?;
    Ok(())
}
