use std::collections::HashMap;
use std::fmt::Write as _;

use petgraph::algo::astar;
use petgraph::graph::{NodeIndex, UnGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_LANES_FT: [f64; 5] = [400.0, 700.0, 1000.0, 1300.0, 1600.0];
pub const DEFAULT_PARKING_SPOTS: u32 = 4;
const NETWORK_HEADER: &str = "corridor-network v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    /// Vertiports on a jittered grid joined to their row/column neighbours.
    Grid,
    /// Vertiports on a ring, joined to ring neighbours and to a central hub.
    RingRadial,
    /// Four vertiports on two straight corridors crossing at a central fix.
    Crossing,
}

impl Topology {
    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Grid => "grid",
            Topology::RingRadial => "ring-radial",
            Topology::Crossing => "crossing",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "grid" => Some(Topology::Grid),
            "ring-radial" | "ring_radial" => Some(Topology::RingRadial),
            "crossing" => Some(Topology::Crossing),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkConfig {
    pub vertiports: usize,
    /// Side length (grid) or diameter (ring, crossing) of the area, meters.
    pub extent_m: f64,
    pub topology: Topology,
    pub parking_spots: u32,
    pub lanes_ft: Vec<f64>,
    /// Maximum random displacement of each vertiport, meters.
    pub jitter_m: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            vertiports: 4,
            extent_m: 6000.0,
            topology: Topology::Crossing,
            parking_spots: DEFAULT_PARKING_SPOTS,
            lanes_ft: DEFAULT_LANES_FT.to_vec(),
            jitter_m: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    /// Parking spots; `Some` marks the node as a vertiport.
    pub parking: Option<u32>,
}

impl Node {
    pub fn is_vertiport(&self) -> bool {
        self.parking.is_some()
    }
}

/// Corridor graph: vertiports and fixes joined by bidirectional segments,
/// each segment carrying the same stack of altitude lanes.
#[derive(Clone, Debug, PartialEq)]
pub struct CorridorNetwork {
    pub nodes: Vec<Node>,
    pub segments: Vec<(usize, usize)>,
    pub lanes_ft: Vec<f64>,
}

pub type Route = Vec<(f64, f64)>;

impl CorridorNetwork {
    pub fn new(nodes: Vec<Node>, segments: Vec<(usize, usize)>, lanes_ft: Vec<f64>) -> Result<Self> {
        let net = Self {
            nodes,
            segments,
            lanes_ft,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lanes_ft.is_empty() || self.lanes_ft.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "lane altitudes must be non-empty and strictly increasing".into(),
            ));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return Err(Error::Config(format!("node {} stored at index {i}", n.id)));
            }
            if n.parking == Some(0) {
                return Err(Error::Config(format!("vertiport {i} has no parking spots")));
            }
        }
        if self.vertiport_ids().len() < 2 {
            return Err(Error::Config("a network needs at least two vertiports".into()));
        }
        for &(a, b) in &self.segments {
            if a >= self.nodes.len() || b >= self.nodes.len() || a == b {
                return Err(Error::Config(format!("bad segment {a}-{b}")));
            }
        }
        Ok(())
    }

    pub fn vertiport_ids(&self) -> Vec<usize> {
        self.nodes.iter().filter(|n| n.is_vertiport()).map(|n| n.id).collect()
    }

    pub fn total_parking(&self) -> u32 {
        self.nodes.iter().filter_map(|n| n.parking).sum()
    }

    fn graph(&self) -> (UnGraph<usize, f64>, Vec<NodeIndex>) {
        let mut g = UnGraph::new_undirected();
        let idx: Vec<NodeIndex> = self.nodes.iter().map(|n| g.add_node(n.id)).collect();
        for &(a, b) in &self.segments {
            let (na, nb) = (&self.nodes[a], &self.nodes[b]);
            g.add_edge(idx[a], idx[b], (na.x - nb.x).hypot(na.y - nb.y));
        }
        (g, idx)
    }

    /// Shortest path between two nodes as a polyline of node positions.
    pub fn route(&self, from: usize, to: usize) -> Option<Route> {
        let (g, idx) = self.graph();
        let (ex, ey) = (self.nodes.get(to)?.x, self.nodes[to].y);
        let target = *idx.get(to)?;
        let (_, path) = astar(
            &g,
            *idx.get(from)?,
            |n| n == target,
            |e| *e.weight(),
            |n| {
                let node = &self.nodes[g[n]];
                (node.x - ex).hypot(node.y - ey)
            },
        )?;
        Some(
            path.into_iter()
                .map(|n| {
                    let node = &self.nodes[g[n]];
                    (node.x, node.y)
                })
                .collect(),
        )
    }

    /// Routes between every ordered pair of distinct vertiports.
    pub fn route_table(&self) -> Result<HashMap<(usize, usize), Route>> {
        let ids = self.vertiport_ids();
        let mut table = HashMap::new();
        for &a in &ids {
            for &b in &ids {
                if a == b {
                    continue;
                }
                let r = self
                    .route(a, b)
                    .ok_or_else(|| Error::Config(format!("vertiport {b} unreachable from {a}")))?;
                table.insert((a, b), r);
            }
        }
        Ok(table)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(NETWORK_HEADER);
        out.push('\n');
        self.write_body(&mut out);
        out
    }

    pub(crate) fn write_body(&self, out: &mut String) {
        let lanes: Vec<String> = self.lanes_ft.iter().map(|l| l.to_string()).collect();
        let _ = writeln!(out, "lanes {}", lanes.join(" "));
        for n in &self.nodes {
            match n.parking {
                Some(p) => {
                    let _ = writeln!(out, "node {} vertiport {} {} {}", n.id, n.x, n.y, p);
                }
                None => {
                    let _ = writeln!(out, "node {} fix {} {}", n.id, n.x, n.y);
                }
            }
        }
        for (a, b) in &self.segments {
            let _ = writeln!(out, "segment {a} {b}");
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == NETWORK_HEADER => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("expected header '{NETWORK_HEADER}'"),
                })
            }
        }
        let mut builder = NetworkBuilder::default();
        for (i, line) in lines {
            builder.feed(i + 1, line)?;
        }
        builder.finish()
    }
}

/// Incremental parser for network records, shared with the scenario format.
#[derive(Default)]
pub(crate) struct NetworkBuilder {
    lanes: Vec<f64>,
    nodes: Vec<Node>,
    segments: Vec<(usize, usize)>,
}

pub(crate) fn parse_field<V: std::str::FromStr>(line: usize, tok: Option<&str>, what: &str) -> Result<V> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad {what} '{tok}'"),
    })
}

impl NetworkBuilder {
    pub(crate) fn feed(&mut self, line_no: usize, line: &str) -> Result<()> {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            return Ok(());
        }
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("lanes") => {
                self.lanes = toks
                    .map(|t| parse_field(line_no, Some(t), "lane altitude"))
                    .collect::<Result<_>>()?;
            }
            Some("node") => {
                let id: usize = parse_field(line_no, toks.next(), "node id")?;
                let kind = toks.next();
                let x = parse_field(line_no, toks.next(), "x")?;
                let y = parse_field(line_no, toks.next(), "y")?;
                let parking = match kind {
                    Some("vertiport") => Some(parse_field(line_no, toks.next(), "parking spots")?),
                    Some("fix") => None,
                    other => {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: format!("unknown node kind {other:?}"),
                        })
                    }
                };
                self.nodes.push(Node { id, x, y, parking });
            }
            Some("segment") => {
                let a = parse_field(line_no, toks.next(), "segment start")?;
                let b = parse_field(line_no, toks.next(), "segment end")?;
                self.segments.push((a, b));
            }
            Some(other) => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("unknown network record '{other}'"),
                })
            }
            None => {}
        }
        Ok(())
    }

    pub(crate) fn finish(self) -> Result<CorridorNetwork> {
        CorridorNetwork::new(self.nodes, self.segments, self.lanes)
    }
}

/// Builds a synthetic corridor network. Deterministic for a given seed.
pub fn generate_network(config: &NetworkConfig, seed: u64) -> Result<CorridorNetwork> {
    let n = config.vertiports;
    if n < 2 {
        return Err(Error::Config(format!("need at least 2 vertiports, got {n}")));
    }
    if config.parking_spots == 0 {
        return Err(Error::Config("parking spots must be at least 1".into()));
    }
    if !(config.extent_m > 0.0) {
        return Err(Error::Config("network extent must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = |rng: &mut ChaCha8Rng| {
        if config.jitter_m > 0.0 {
            (
                rng.random_range(-config.jitter_m..=config.jitter_m),
                rng.random_range(-config.jitter_m..=config.jitter_m),
            )
        } else {
            (0.0, 0.0)
        }
    };
    let spots = Some(config.parking_spots);
    let mut nodes = Vec::new();
    let mut segments = Vec::new();
    let half = config.extent_m / 2.0;

    if n == 2 {
        for (i, x) in [-half, half].into_iter().enumerate() {
            let (dx, dy) = jitter(&mut rng);
            nodes.push(Node {
                id: i,
                x: x + dx,
                y: dy,
                parking: spots,
            });
        }
        segments.push((0, 1));
    } else {
        match config.topology {
            Topology::Crossing => {
                if n != 4 {
                    return Err(Error::Config(format!(
                        "crossing topology needs exactly 4 vertiports, got {n}"
                    )));
                }
                for (i, (x, y)) in [(-half, 0.0), (half, 0.0), (0.0, -half), (0.0, half)]
                    .into_iter()
                    .enumerate()
                {
                    let (dx, dy) = jitter(&mut rng);
                    nodes.push(Node {
                        id: i,
                        x: x + dx,
                        y: y + dy,
                        parking: spots,
                    });
                }
                nodes.push(Node {
                    id: 4,
                    x: 0.0,
                    y: 0.0,
                    parking: None,
                });
                segments.extend((0..4).map(|i| (i, 4)));
            }
            Topology::RingRadial => {
                for i in 0..n {
                    let theta = std::f64::consts::TAU * i as f64 / n as f64;
                    let (dx, dy) = jitter(&mut rng);
                    nodes.push(Node {
                        id: i,
                        x: half * theta.cos() + dx,
                        y: half * theta.sin() + dy,
                        parking: spots,
                    });
                }
                nodes.push(Node {
                    id: n,
                    x: 0.0,
                    y: 0.0,
                    parking: None,
                });
                for i in 0..n {
                    segments.push((i, (i + 1) % n));
                    segments.push((i, n));
                }
            }
            Topology::Grid => {
                let cols = (n as f64).sqrt().ceil() as usize;
                let rows = n.div_ceil(cols);
                let spacing_x = if cols > 1 {
                    config.extent_m / (cols - 1) as f64
                } else {
                    0.0
                };
                let spacing_y = if rows > 1 {
                    config.extent_m / (rows - 1) as f64
                } else {
                    0.0
                };
                for i in 0..n {
                    let (r, c) = (i / cols, i % cols);
                    let (dx, dy) = jitter(&mut rng);
                    nodes.push(Node {
                        id: i,
                        x: -half + c as f64 * spacing_x + dx,
                        y: -half + r as f64 * spacing_y + dy,
                        parking: spots,
                    });
                }
                for i in 0..n {
                    if i % cols + 1 < cols && i + 1 < n {
                        segments.push((i, i + 1));
                    }
                    if i + cols < n {
                        segments.push((i, i + cols));
                    }
                }
            }
        }
    }
    CorridorNetwork::new(nodes, segments, config.lanes_ft.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    /// Plain BFS over the segment list, independent of the petgraph routing.
    fn reachable_from(net: &CorridorNetwork, start: usize) -> Vec<bool> {
        let mut seen = vec![false; net.nodes.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            for &(a, b) in &net.segments {
                let v = if a == u {
                    b
                } else if b == u {
                    a
                } else {
                    continue;
                };
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    #[test]
    fn two_vertiports_single_corridor() {
        let cfg = NetworkConfig {
            vertiports: 2,
            topology: Topology::Grid,
            ..Default::default()
        };
        let net = generate_network(&cfg, 1).unwrap();
        assert_eq!(net.segments, vec![(0, 1)]);
        assert_eq!(net.lanes_ft, DEFAULT_LANES_FT.to_vec());
        assert_eq!(net.route(0, 1).unwrap().len(), 2);
        assert_eq!(net.route(1, 0).unwrap().len(), 2);
    }

    #[test]
    fn same_seed_gives_identical_file() {
        let cfg = NetworkConfig {
            vertiports: 7,
            topology: Topology::RingRadial,
            jitter_m: 300.0,
            ..Default::default()
        };
        let a = generate_network(&cfg, 9).unwrap().to_text();
        let b = generate_network(&cfg, 9).unwrap().to_text();
        assert_eq!(a, b);
        let c = generate_network(&cfg, 10).unwrap().to_text();
        assert_ne!(a, c);
    }

    #[test]
    fn ring_radial_is_connected() {
        let cfg = NetworkConfig {
            vertiports: 8,
            topology: Topology::RingRadial,
            jitter_m: 250.0,
            ..Default::default()
        };
        let net = generate_network(&cfg, 42).unwrap();
        let seen = reachable_from(&net, 0);
        assert!(net.vertiport_ids().iter().all(|&v| seen[v]));
        assert_eq!(net.route_table().unwrap().len(), 8 * 7);
    }

    #[test]
    fn grid_is_connected_for_ragged_counts() {
        for n in 3..12 {
            let cfg = NetworkConfig {
                vertiports: n,
                topology: Topology::Grid,
                ..Default::default()
            };
            let net = generate_network(&cfg, n as u64).unwrap();
            let seen = reachable_from(&net, 0);
            assert!(seen.iter().all(|&s| s), "grid with {n} vertiports disconnected");
        }
    }

    #[test]
    fn crossing_routes_pass_through_centre() {
        let net = generate_network(&NetworkConfig::default(), 0).unwrap();
        let r = net.route(0, 1).unwrap();
        assert_eq!(r, vec![(-3000.0, 0.0), (0.0, 0.0), (3000.0, 0.0)]);
        let r = net.route(0, 3).unwrap();
        assert_eq!(r[1], (0.0, 0.0));
    }

    #[test]
    fn infeasible_configs_are_rejected() {
        let one = NetworkConfig {
            vertiports: 1,
            ..Default::default()
        };
        assert!(generate_network(&one, 0).is_err());
        let crossing5 = NetworkConfig {
            vertiports: 5,
            ..Default::default()
        };
        assert!(generate_network(&crossing5, 0).is_err());
        let lanes = NetworkConfig {
            lanes_ft: vec![400.0, 400.0],
            ..Default::default()
        };
        assert!(generate_network(&lanes, 0).is_err());
        let parking = NetworkConfig {
            parking_spots: 0,
            ..Default::default()
        };
        assert!(generate_network(&parking, 0).is_err());
    }

    #[test]
    fn text_round_trip() {
        let cfg = NetworkConfig {
            vertiports: 5,
            topology: Topology::Grid,
            jitter_m: 123.4,
            ..Default::default()
        };
        let net = generate_network(&cfg, 3).unwrap();
        let back = CorridorNetwork::from_text(&net.to_text()).unwrap();
        assert_eq!(back, net);
        assert!(CorridorNetwork::from_text("nonsense").is_err());
    }
}
