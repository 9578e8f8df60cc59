//! Generates each topology, prints its size and the longest route, then
//! draws one demand scenario on it.

use corridor_rl::sim::{generate_network, generate_scenario, NetworkConfig, ScenarioConfig, Topology};

fn main() -> corridor_rl::Result<()> {
    for topology in [Topology::Grid, Topology::RingRadial, Topology::Crossing] {
        let config = NetworkConfig {
            topology,
            vertiports: if topology == Topology::Crossing { 4 } else { 6 },
            ..NetworkConfig::default()
        };
        let net = generate_network(&config, 1)?;
        let routes = net.route_table()?;
        let longest = routes
            .iter()
            .map(|(k, r)| {
                (
                    k,
                    r.windows(2)
                        .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
                        .sum::<f64>(),
                )
            })
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let scenario = generate_scenario(&net, &ScenarioConfig::default(), 1)?;
        println!(
            "{:?}: {} nodes, {} segments, {} routes, {} parking spots, {} flights",
            topology,
            net.nodes.len(),
            net.segments.len(),
            routes.len(),
            net.total_parking(),
            scenario.demands.len()
        );
        if let Some(((o, d), len)) = longest {
            println!("  longest route {o} -> {d}: {len:.0} m");
        }
    }
    let net = generate_network(&NetworkConfig::default(), 1)?;
    print!("{}", net.to_text());
    Ok(())
}
