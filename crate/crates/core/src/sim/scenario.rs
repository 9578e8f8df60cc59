use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::network::{parse_field, CorridorNetwork, NetworkBuilder};
use super::units::KT_TO_M_PER_S;
use crate::error::{Error, Result};

const SCENARIO_HEADER: &str = "corridor-scenario v1";

/// Vehicle performance preset. Both share the speed/altitude envelope and
/// differ in acceleration and vertical-rate limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AircraftType {
    Rotorcraft,
    AamSurrogate,
}

impl AircraftType {
    pub fn max_accel_kt_s(self) -> f64 {
        match self {
            AircraftType::Rotorcraft => 2.0,
            AircraftType::AamSurrogate => 3.0,
        }
    }

    pub fn max_vertical_fpm(self) -> f64 {
        match self {
            AircraftType::Rotorcraft => 500.0,
            AircraftType::AamSurrogate => 800.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AircraftType::Rotorcraft => "rotorcraft",
            AircraftType::AamSurrogate => "aam",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rotorcraft" => Some(AircraftType::Rotorcraft),
            "aam" => Some(AircraftType::AamSurrogate),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub fleet_size: usize,
    pub duration_s: f64,
    pub p_comm: f64,
    pub p_equip: f64,
    /// Nominal cruise speed range drawn per flight, knots.
    pub cruise_kt: (f64, f64),
    /// Probability that a flight uses the AAM surrogate preset.
    pub surrogate_fraction: f64,
    /// Minimum time between departures from one vertiport.
    pub departure_spacing_s: f64,
    /// Multiplier on the fleet-derived demand rate.
    pub demand_scale: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            fleet_size: 10,
            duration_s: 900.0,
            p_comm: 1.0,
            p_equip: 1.0,
            cruise_kt: (30.0, 60.0),
            surrogate_fraction: 0.5,
            departure_spacing_s: 30.0,
            demand_scale: 1.0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fleet_size == 0 {
            return Err(Error::Config("fleet size must be at least 1".into()));
        }
        for (name, p) in [
            ("p_comm", self.p_comm),
            ("p_equip", self.p_equip),
            ("surrogate_fraction", self.surrogate_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::Config("scenario duration must be positive".into()));
        }
        let (lo, hi) = self.cruise_kt;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::Config(format!("bad cruise speed range {lo}..{hi}")));
        }
        if !(self.demand_scale > 0.0) {
            return Err(Error::Config("demand scale must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlightDemand {
    pub id: u32,
    pub departure_s: f64,
    pub origin: usize,
    pub destination: usize,
    pub aircraft_type: AircraftType,
    pub comm: bool,
    pub equipped: bool,
    /// Uniform(−100, 100) ft offset applied to the initial lane altitude.
    pub altitude_offset_ft: f64,
    pub lane: usize,
    pub cruise_kt: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub network: CorridorNetwork,
    pub seed: u64,
    pub fleet_size: usize,
    pub duration_s: f64,
    pub p_comm: f64,
    pub p_equip: f64,
    pub demands: Vec<FlightDemand>,
}

impl Scenario {
    /// Most aircraft that may be airborne at once: the fleet, bounded by the
    /// total number of parking spots.
    pub fn capacity(&self) -> usize {
        self.fleet_size.min(self.network.total_parking() as usize)
    }

    /// Same demand with every aircraft unequipped, for the paired baseline.
    pub fn unequipped(&self) -> Scenario {
        let mut s = self.clone();
        for d in &mut s.demands {
            d.equipped = false;
        }
        s.p_equip = 0.0;
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{SCENARIO_HEADER}");
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "fleet_size {}", self.fleet_size);
        let _ = writeln!(out, "duration_s {}", self.duration_s);
        let _ = writeln!(out, "p_comm {}", self.p_comm);
        let _ = writeln!(out, "p_equip {}", self.p_equip);
        out.push_str("[network]\n");
        self.network.write_body(&mut out);
        out.push_str("[demand]\n");
        out.push_str(
            "# flight id departure_s origin destination type comm equipped altitude_offset_ft lane cruise_kt\n",
        );
        for d in &self.demands {
            let _ = writeln!(
                out,
                "flight {} {} {} {} {} {} {} {} {} {}",
                d.id,
                d.departure_s,
                d.origin,
                d.destination,
                d.aircraft_type.as_str(),
                d.comm as u8,
                d.equipped as u8,
                d.altitude_offset_ft,
                d.lane,
                d.cruise_kt
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == SCENARIO_HEADER => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("expected header '{SCENARIO_HEADER}'"),
                })
            }
        }
        #[derive(PartialEq)]
        enum Section {
            Header,
            Network,
            Demand,
        }
        let mut section = Section::Header;
        let mut network = NetworkBuilder::default();
        let (mut seed, mut fleet, mut duration, mut p_comm, mut p_equip) = (None, None, None, None, None);
        let mut demands = Vec::new();
        for (i, raw) in lines {
            let ln = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line {
                "[network]" => {
                    section = Section::Network;
                    continue;
                }
                "[demand]" => {
                    section = Section::Demand;
                    continue;
                }
                _ => {}
            }
            let mut t = line.split_whitespace();
            match section {
                Section::Header => {
                    let key = t.next().unwrap_or_default();
                    match key {
                        "seed" => seed = Some(parse_field(ln, t.next(), "seed")?),
                        "fleet_size" => fleet = Some(parse_field(ln, t.next(), "fleet size")?),
                        "duration_s" => duration = Some(parse_field(ln, t.next(), "duration")?),
                        "p_comm" => p_comm = Some(parse_field(ln, t.next(), "p_comm")?),
                        "p_equip" => p_equip = Some(parse_field(ln, t.next(), "p_equip")?),
                        other => {
                            return Err(Error::Parse {
                                line: ln,
                                msg: format!("unknown scenario key '{other}'"),
                            })
                        }
                    }
                }
                Section::Network => network.feed(ln, line)?,
                Section::Demand => {
                    if t.next() != Some("flight") {
                        return Err(Error::Parse {
                            line: ln,
                            msg: "expected 'flight' record".into(),
                        });
                    }
                    let id = parse_field(ln, t.next(), "flight id")?;
                    let departure_s = parse_field(ln, t.next(), "departure time")?;
                    let origin = parse_field(ln, t.next(), "origin")?;
                    let destination = parse_field(ln, t.next(), "destination")?;
                    let ty: String = parse_field(ln, t.next(), "aircraft type")?;
                    let aircraft_type = AircraftType::parse(&ty).ok_or_else(|| Error::Parse {
                        line: ln,
                        msg: format!("unknown aircraft type '{ty}'"),
                    })?;
                    let comm: u8 = parse_field(ln, t.next(), "comm flag")?;
                    let equipped: u8 = parse_field(ln, t.next(), "equip flag")?;
                    demands.push(FlightDemand {
                        id,
                        departure_s,
                        origin,
                        destination,
                        aircraft_type,
                        comm: comm != 0,
                        equipped: equipped != 0,
                        altitude_offset_ft: parse_field(ln, t.next(), "altitude offset")?,
                        lane: parse_field(ln, t.next(), "lane")?,
                        cruise_kt: parse_field(ln, t.next(), "cruise speed")?,
                    });
                }
            }
        }
        let missing = |what: &str| Error::Parse {
            line: 0,
            msg: format!("missing {what}"),
        };
        let scenario = Scenario {
            network: network.finish()?,
            seed: seed.ok_or_else(|| missing("seed"))?,
            fleet_size: fleet.ok_or_else(|| missing("fleet_size"))?,
            duration_s: duration.ok_or_else(|| missing("duration_s"))?,
            p_comm: p_comm.ok_or_else(|| missing("p_comm"))?,
            p_equip: p_equip.ok_or_else(|| missing("p_equip"))?,
            demands,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        let ports = self.network.vertiport_ids();
        for d in &self.demands {
            if !ports.contains(&d.origin) || !ports.contains(&d.destination) || d.origin == d.destination {
                return Err(Error::Config(format!(
                    "flight {} has an invalid origin/destination",
                    d.id
                )));
            }
            if d.lane >= self.network.lanes_ft.len() {
                return Err(Error::Config(format!("flight {} uses missing lane {}", d.id, d.lane)));
            }
        }
        Ok(())
    }
}

/// Poisson demand between random distinct vertiport pairs, scheduled so the
/// estimated number of simultaneous flights never exceeds the fleet/parking
/// capacity. Deterministic for a given seed.
pub fn generate_scenario(network: &CorridorNetwork, config: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    config.validate()?;
    network.validate()?;
    let routes = network.route_table()?;
    let ports = network.vertiport_ids();
    let route_len = |o: usize, d: usize| -> f64 {
        routes[&(o, d)]
            .windows(2)
            .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
            .sum()
    };
    let mean_len = routes.keys().map(|&(o, d)| route_len(o, d)).sum::<f64>() / routes.len() as f64;
    let mean_cruise = 0.5 * (config.cruise_kt.0 + config.cruise_kt.1);
    let mean_flight_s = mean_len / (mean_cruise * KT_TO_M_PER_S);

    let capacity = config.fleet_size.min(network.total_parking() as usize);
    let rate = config.demand_scale * capacity as f64 / mean_flight_s;
    let inter_arrival = Exp::new(rate).map_err(|e| Error::Config(format!("demand rate: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // (estimated arrival time, destination) of flights already scheduled
    let mut active: Vec<(f64, usize)> = Vec::new();
    let mut last_departure = vec![f64::NEG_INFINITY; network.nodes.len()];
    let mut demands = Vec::new();
    let mut t = 0.0;
    loop {
        t += inter_arrival.sample(&mut rng);
        if t >= config.duration_s {
            break;
        }
        let origin = ports[rng.random_range(0..ports.len())];
        let mut destination = origin;
        while destination == origin {
            destination = ports[rng.random_range(0..ports.len())];
        }
        let aircraft_type = if rng.random_bool(config.surrogate_fraction) {
            AircraftType::AamSurrogate
        } else {
            AircraftType::Rotorcraft
        };
        let comm = rng.random_bool(config.p_comm);
        let equipped = rng.random_bool(config.p_equip);
        let altitude_offset_ft = rng.random_range(-100.0..=100.0);
        let lane = rng.random_range(0..network.lanes_ft.len());
        let cruise_kt = rng.random_range(config.cruise_kt.0..=config.cruise_kt.1);
        let duration = route_len(origin, destination) / (cruise_kt * KT_TO_M_PER_S);
        let spots = network.nodes[destination].parking.unwrap_or(0) as usize;

        let mut dep = t.max(last_departure[origin] + config.departure_spacing_s);
        loop {
            active.retain(|&(end, _)| end > dep);
            let inbound = active.iter().filter(|&&(_, d)| d == destination).count();
            if active.len() < capacity && inbound < spots {
                break;
            }
            // wait for the next scheduled arrival
            dep = active.iter().map(|&(end, _)| end).fold(f64::INFINITY, f64::min);
        }
        if dep >= config.duration_s {
            continue;
        }
        last_departure[origin] = dep;
        active.push((dep + duration, destination));
        demands.push(FlightDemand {
            id: 0,
            departure_s: dep,
            origin,
            destination,
            aircraft_type,
            comm,
            equipped,
            altitude_offset_ft,
            lane,
            cruise_kt,
        });
    }
    demands.sort_by(|a, b| a.departure_s.total_cmp(&b.departure_s));
    for (i, d) in demands.iter_mut().enumerate() {
        d.id = i as u32;
    }
    Ok(Scenario {
        network: network.clone(),
        seed,
        fleet_size: config.fleet_size,
        duration_s: config.duration_s,
        p_comm: config.p_comm,
        p_equip: config.p_equip,
        demands,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::network::{generate_network, NetworkConfig, Topology};

    fn crossing() -> CorridorNetwork {
        generate_network(&NetworkConfig::default(), 0).unwrap()
    }

    #[test]
    fn zero_equipage_gives_baseline_scenario() {
        let cfg = ScenarioConfig {
            p_equip: 0.0,
            ..Default::default()
        };
        let s = generate_scenario(&crossing(), &cfg, 5).unwrap();
        assert!(!s.demands.is_empty());
        assert!(s.demands.iter().all(|d| !d.equipped));
    }

    #[test]
    fn fixed_seed_fixed_demand() {
        let cfg = ScenarioConfig::default();
        let a = generate_scenario(&crossing(), &cfg, 77).unwrap();
        let b = generate_scenario(&crossing(), &cfg, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_text(), b.to_text());
        assert_ne!(a, generate_scenario(&crossing(), &cfg, 78).unwrap());
    }

    #[test]
    fn demand_fields_are_within_bounds() {
        let cfg = ScenarioConfig {
            duration_s: 3600.0,
            ..Default::default()
        };
        let s = generate_scenario(&crossing(), &cfg, 8).unwrap();
        for d in &s.demands {
            assert_ne!(d.origin, d.destination);
            assert!((-100.0..=100.0).contains(&d.altitude_offset_ft));
            assert!((30.0..=60.0).contains(&d.cruise_kt));
            assert!(d.departure_s < cfg.duration_s);
        }
        assert!(s.demands.windows(2).all(|w| w[0].departure_s <= w[1].departure_s));
    }

    #[test]
    fn comm_and_equip_follow_their_probabilities() {
        let cfg = ScenarioConfig {
            duration_s: 40_000.0,
            p_comm: 0.3,
            p_equip: 0.8,
            ..Default::default()
        };
        let s = generate_scenario(&crossing(), &cfg, 9).unwrap();
        let n = s.demands.len() as f64;
        let comm = s.demands.iter().filter(|d| d.comm).count() as f64 / n;
        let equip = s.demands.iter().filter(|d| d.equipped).count() as f64 / n;
        assert!(n > 1000.0);
        assert!((comm - 0.3).abs() < 0.05, "comm rate {comm}");
        assert!((equip - 0.8).abs() < 0.05, "equip rate {equip}");
    }

    #[test]
    fn oversized_fleet_is_capped_by_parking() {
        let net = generate_network(
            &NetworkConfig {
                vertiports: 3,
                topology: Topology::RingRadial,
                ..Default::default()
            },
            1,
        )
        .unwrap();
        let cfg = ScenarioConfig {
            fleet_size: 100,
            duration_s: 3600.0,
            ..Default::default()
        };
        let s = generate_scenario(&net, &cfg, 2).unwrap();
        assert_eq!(s.capacity(), 12);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let net = crossing();
        let bad = ScenarioConfig {
            fleet_size: 0,
            ..Default::default()
        };
        assert!(generate_scenario(&net, &bad, 0).is_err());
        let bad = ScenarioConfig {
            p_comm: 1.5,
            ..Default::default()
        };
        assert!(generate_scenario(&net, &bad, 0).is_err());
    }

    #[test]
    fn text_round_trip() {
        let s = generate_scenario(&crossing(), &ScenarioConfig::default(), 3).unwrap();
        let back = Scenario::from_text(&s.to_text()).unwrap();
        assert_eq!(back, s);
    }
}
