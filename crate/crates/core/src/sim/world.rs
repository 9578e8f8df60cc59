use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::events::{Event, EventKind, NmacEvent};
use super::network::Route;
use super::scenario::{AircraftType, FlightDemand, Scenario};
use super::units::{ft_to_m, heading_of, m_to_ft, ADSB_ALTITUDE_SIGMA_FT, ADSB_HORIZONTAL_SIGMA_M, KT_TO_M_PER_S};
use crate::error::{Error, Result};

pub const NMAC_HORIZONTAL_FT: f64 = 500.0;
pub const NMAC_VERTICAL_FT: f64 = 100.0;
/// Surveillance range d^MAX (3280 ft).
pub const SENSING_RANGE_M: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Envelope {
    pub min_speed_kt: f64,
    pub max_speed_kt: f64,
    pub min_alt_ft: f64,
    pub max_alt_ft: f64,
    pub max_accel_kt_s: f64,
    pub max_vertical_fpm: f64,
}

impl Envelope {
    pub fn for_type(kind: AircraftType) -> Self {
        Self {
            min_speed_kt: 5.0,
            max_speed_kt: 65.0,
            min_alt_ft: 400.0,
            max_alt_ft: 1600.0,
            max_accel_kt_s: kind.max_accel_kt_s(),
            max_vertical_fpm: kind.max_vertical_fpm(),
        }
    }
}

/// Commanded longitudinal acceleration and vertical rate. A target altitude
/// stops the vertical motion once reached.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Command {
    pub accel_kt_s: f64,
    pub vertical_fpm: f64,
    pub target_alt_ft: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Surveillance {
    Perfect,
    Adsb,
}

impl Surveillance {
    pub fn as_str(self) -> &'static str {
        match self {
            Surveillance::Perfect => "perfect",
            Surveillance::Adsb => "adsb",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "perfect" => Some(Surveillance::Perfect),
            "adsb" | "ads-b" => Some(Surveillance::Adsb),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aircraft {
    pub id: u32,
    pub kind: AircraftType,
    pub origin: usize,
    pub destination: usize,
    pub route: Arc<Route>,
    /// Index into `route` of the waypoint being flown to.
    pub next_wpt: usize,
    pub x: f64,
    pub y: f64,
    pub z_ft: f64,
    /// Radians clockwise from north.
    pub heading: f64,
    pub speed_kt: f64,
    pub command: Command,
    pub prev_action: u8,
    pub equipped: bool,
    pub comm: bool,
    pub envelope: Envelope,
    pub departed_s: f64,
    pub nominal_flight_s: f64,
}

impl Aircraft {
    pub fn spawn(demand: &FlightDemand, route: Arc<Route>, lanes_ft: &[f64], clock: f64) -> Self {
        let envelope = Envelope::for_type(demand.aircraft_type);
        let (x, y) = route[0];
        let next = route.get(1).copied().unwrap_or(route[0]);
        let length: f64 = route.windows(2).map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1)).sum();
        let speed_kt = demand.cruise_kt.clamp(envelope.min_speed_kt, envelope.max_speed_kt);
        Aircraft {
            id: demand.id,
            kind: demand.aircraft_type,
            origin: demand.origin,
            destination: demand.destination,
            next_wpt: 1.min(route.len() - 1),
            x,
            y,
            z_ft: (lanes_ft[demand.lane] + demand.altitude_offset_ft).clamp(envelope.min_alt_ft, envelope.max_alt_ft),
            heading: heading_of(next.0 - x, next.1 - y),
            speed_kt,
            command: Command::default(),
            prev_action: 1,
            equipped: demand.equipped,
            comm: demand.comm,
            envelope,
            departed_s: clock,
            nominal_flight_s: length / (speed_kt * KT_TO_M_PER_S),
            route,
        }
    }

    pub fn remaining_waypoints(&self) -> &[(f64, f64)] {
        &self.route[self.next_wpt..]
    }

    /// Ground-speed components (east, north), knots.
    pub fn ground_speed(&self) -> (f64, f64) {
        (self.speed_kt * self.heading.sin(), self.speed_kt * self.heading.cos())
    }

    pub fn kinematics(&self) -> Kinematics {
        Kinematics {
            id: self.id,
            x: self.x,
            y: self.y,
            z_ft: self.z_ft,
            heading: self.heading,
            speed_kt: self.speed_kt,
            accel_kt_s: self.command.accel_kt_s,
            vertical_fpm: self.command.vertical_fpm,
            prev_action: self.prev_action,
            max_accel_kt_s: self.envelope.max_accel_kt_s,
            waypoints: self.remaining_waypoints().to_vec(),
        }
    }

    /// Advances the aircraft by `dt` seconds. Returns true on arrival at the
    /// final waypoint.
    pub fn integrate(&mut self, dt: f64) -> bool {
        let env = self.envelope;
        self.speed_kt = (self.speed_kt + self.command.accel_kt_s * dt).clamp(env.min_speed_kt, env.max_speed_kt);

        let vs = self.command.vertical_fpm;
        if vs != 0.0 {
            let mut z = self.z_ft + vs * dt / 60.0;
            if let Some(target) = self.command.target_alt_ft {
                if (vs > 0.0 && z >= target) || (vs < 0.0 && z <= target) {
                    z = target;
                    self.command.vertical_fpm = 0.0;
                    self.command.target_alt_ft = None;
                }
            }
            if z >= env.max_alt_ft || z <= env.min_alt_ft {
                z = z.clamp(env.min_alt_ft, env.max_alt_ft);
                self.command.vertical_fpm = 0.0;
                self.command.target_alt_ft = None;
            }
            self.z_ft = z;
        }

        let mut travel = self.speed_kt * KT_TO_M_PER_S * dt;
        loop {
            let (wx, wy) = self.route[self.next_wpt];
            let (dx, dy) = (wx - self.x, wy - self.y);
            let remaining = dx.hypot(dy);
            if travel < remaining {
                self.x += dx * travel / remaining;
                self.y += dy * travel / remaining;
                return false;
            }
            self.x = wx;
            self.y = wy;
            travel -= remaining;
            if self.next_wpt + 1 >= self.route.len() {
                return true;
            }
            self.next_wpt += 1;
            let (nx, ny) = self.route[self.next_wpt];
            self.heading = heading_of(nx - wx, ny - wy);
        }
    }
}

/// Kinematic snapshot of one aircraft as seen by an observer.
#[derive(Clone, Debug, PartialEq)]
pub struct Kinematics {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub z_ft: f64,
    pub heading: f64,
    pub speed_kt: f64,
    pub accel_kt_s: f64,
    pub vertical_fpm: f64,
    pub prev_action: u8,
    pub max_accel_kt_s: f64,
    /// Remaining flight-plan waypoints, next one first.
    pub waypoints: Vec<(f64, f64)>,
}

impl Kinematics {
    pub fn ground_speed(&self) -> (f64, f64) {
        (self.speed_kt * self.heading.sin(), self.speed_kt * self.heading.cos())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawObservation {
    pub ownship: Kinematics,
    pub intruders: Vec<Kinematics>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub dt_s: f64,
    /// Physics ticks per decision step.
    pub decision_ticks: u32,
    /// Minimum time between departures from one vertiport.
    pub departure_spacing_s: f64,
    /// Flights still airborne after this multiple of their nominal duration
    /// (plus a minute) are cancelled.
    pub cancel_factor: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt_s: 1.0,
            decision_ticks: 4,
            departure_spacing_s: 30.0,
            cancel_factor: 4.0,
        }
    }
}

/// Violating pair (a < b) with horizontal distance and vertical separation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Violation {
    pub a: u32,
    pub b: u32,
    pub horizontal_m: f64,
    pub vertical_ft: f64,
}

fn violation(p: &Aircraft, q: &Aircraft) -> Option<Violation> {
    let h = (p.x - q.x).hypot(p.y - q.y);
    let v = (p.z_ft - q.z_ft).abs();
    (h < ft_to_m(NMAC_HORIZONTAL_FT) && v < NMAC_VERTICAL_FT).then(|| Violation {
        a: p.id.min(q.id),
        b: p.id.max(q.id),
        horizontal_m: h,
        vertical_ft: v,
    })
}

/// All pairs violating both NMAC thresholds, by exhaustive comparison.
pub fn nmac_pairs_brute_force(aircraft: &[&Aircraft]) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, p) in aircraft.iter().enumerate() {
        for q in &aircraft[i + 1..] {
            out.extend(violation(p, q));
        }
    }
    out.sort_by_key(|v| (v.a, v.b));
    out
}

/// All pairs violating both NMAC thresholds, using a uniform grid whose cell
/// is the horizontal threshold so only neighbouring cells need checking.
pub fn nmac_pairs(aircraft: &[&Aircraft]) -> Vec<Violation> {
    let cell = ft_to_m(NMAC_HORIZONTAL_FT);
    let key = |a: &Aircraft| ((a.x / cell).floor() as i64, (a.y / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, a) in aircraft.iter().enumerate() {
        grid.entry(key(a)).or_default().push(i);
    }
    let mut out = Vec::new();
    for (i, p) in aircraft.iter().enumerate() {
        let (cx, cy) = key(p);
        for gx in cx - 1..=cx + 1 {
            for gy in cy - 1..=cy + 1 {
                if let Some(bucket) = grid.get(&(gx, gy)) {
                    for &j in bucket {
                        if j > i {
                            out.extend(violation(p, aircraft[j]));
                        }
                    }
                }
            }
        }
    }
    out.sort_by_key(|v| (v.a, v.b));
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FlightCounters {
    pub departures: u64,
    pub arrivals: u64,
    pub cancelled: u64,
    pub nmacs: u64,
}

/// Complete simulator state for one episode.
#[derive(Clone, Debug)]
pub struct WorldState {
    config: SimConfig,
    clock: f64,
    aircraft: BTreeMap<u32, Aircraft>,
    pending: Vec<FlightDemand>,
    log: Vec<Event>,
    rng: ChaCha8Rng,
    routes: HashMap<(usize, usize), Arc<Route>>,
    lanes_ft: Vec<f64>,
    parking: Vec<u32>,
    inbound: Vec<u32>,
    last_departure: Vec<f64>,
    capacity: usize,
    active_nmac: BTreeSet<(u32, u32)>,
    counters: FlightCounters,
    landed: Vec<Aircraft>,
    removed: Vec<u32>,
}

impl WorldState {
    pub fn new(scenario: &Scenario, config: SimConfig, seed: u64) -> Result<Self> {
        if !(config.dt_s > 0.0) || config.decision_ticks == 0 {
            return Err(Error::Config("physics tick and decision ticks must be positive".into()));
        }
        scenario.validate()?;
        let routes = scenario
            .network
            .route_table()?
            .into_iter()
            .map(|(k, r)| (k, Arc::new(r)))
            .collect();
        let mut pending = scenario.demands.clone();
        pending.sort_by(|a, b| a.departure_s.total_cmp(&b.departure_s).then(a.id.cmp(&b.id)));
        let n = scenario.network.nodes.len();
        Ok(Self {
            config,
            clock: 0.0,
            aircraft: BTreeMap::new(),
            pending,
            log: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            routes,
            lanes_ft: scenario.network.lanes_ft.clone(),
            parking: scenario.network.nodes.iter().map(|n| n.parking.unwrap_or(0)).collect(),
            inbound: vec![0; n],
            last_departure: vec![f64::NEG_INFINITY; n],
            capacity: scenario.capacity(),
            active_nmac: BTreeSet::new(),
            counters: FlightCounters::default(),
            landed: Vec::new(),
            removed: Vec::new(),
        })
    }

    /// Empty world for hand-placed traffic.
    pub fn empty(lanes_ft: Vec<f64>, seed: u64) -> Self {
        Self {
            config: SimConfig::default(),
            clock: 0.0,
            aircraft: BTreeMap::new(),
            pending: Vec::new(),
            log: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            routes: HashMap::new(),
            lanes_ft,
            parking: Vec::new(),
            inbound: Vec::new(),
            last_departure: Vec::new(),
            capacity: usize::MAX,
            active_nmac: BTreeSet::new(),
            counters: FlightCounters::default(),
            landed: Vec::new(),
            removed: Vec::new(),
        }
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn lanes_ft(&self) -> &[f64] {
        &self.lanes_ft
    }

    pub fn aircraft(&self) -> &BTreeMap<u32, Aircraft> {
        &self.aircraft
    }

    pub fn get(&self, id: u32) -> Result<&Aircraft> {
        self.aircraft.get(&id).ok_or(Error::UnknownAircraft(id))
    }

    pub fn get_mut(&mut self, id: u32) -> Result<&mut Aircraft> {
        self.aircraft.get_mut(&id).ok_or(Error::UnknownAircraft(id))
    }

    /// Places an aircraft directly, bypassing departure scheduling.
    pub fn insert(&mut self, aircraft: Aircraft) {
        self.aircraft.insert(aircraft.id, aircraft);
    }

    pub fn pending(&self) -> &[FlightDemand] {
        &self.pending
    }

    pub fn log(&self) -> &[Event] {
        &self.log
    }

    pub fn counters(&self) -> FlightCounters {
        self.counters
    }

    /// Reserved parking at each node for aircraft currently inbound.
    pub fn inbound_reservations(&self) -> &[u32] {
        &self.inbound
    }

    pub fn parking_capacity(&self) -> &[u32] {
        &self.parking
    }

    /// Pairs currently in NMAC violation.
    pub fn active_violations(&self) -> &BTreeSet<(u32, u32)> {
        &self.active_nmac
    }

    /// Final states of aircraft that arrived during the last tick.
    pub fn landed_last_tick(&self) -> &[Aircraft] {
        &self.landed
    }

    /// Aircraft that arrived or were cancelled during the last tick.
    pub fn removed_last_tick(&self) -> &[u32] {
        &self.removed
    }

    pub fn set_command(&mut self, id: u32, command: Command) -> Result<()> {
        self.get_mut(id)?.command = command;
        Ok(())
    }

    /// True once every demand has departed and no aircraft is airborne.
    pub fn is_drained(&self) -> bool {
        self.pending.is_empty() && self.aircraft.is_empty()
    }

    /// Applies `commands`, then advances one physics tick of `dt` seconds.
    pub fn step(&mut self, commands: &[(u32, Command)], dt: f64) -> Result<Vec<Event>> {
        for &(id, _) in commands {
            self.get(id)?;
        }
        for &(id, cmd) in commands {
            self.get_mut(id)?.command = cmd;
        }
        self.tick(dt)
    }

    /// Advances one physics tick with the current commands.
    pub fn tick(&mut self, dt: f64) -> Result<Vec<Event>> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("tick length must be positive, got {dt}")));
        }
        self.landed.clear();
        self.removed.clear();
        let mut events = Vec::new();
        let next_clock = self.clock + dt;

        let mut arrived = Vec::new();
        for a in self.aircraft.values_mut() {
            if a.integrate(dt) {
                arrived.push(a.id);
            }
        }
        self.clock = next_clock;
        for id in arrived {
            let a = self.aircraft.remove(&id).expect("arrived aircraft present");
            if let Some(n) = self.inbound.get_mut(a.destination) {
                *n = n.saturating_sub(1);
            }
            self.counters.arrivals += 1;
            events.push(Event {
                time_s: self.clock,
                kind: EventKind::Arrival {
                    id,
                    flight_s: self.clock - a.departed_s,
                },
            });
            self.removed.push(id);
            self.landed.push(a);
        }

        let factor = self.config.cancel_factor;
        let overdue: Vec<u32> = self
            .aircraft
            .values()
            .filter(|a| self.clock - a.departed_s > factor * a.nominal_flight_s + 60.0)
            .map(|a| a.id)
            .collect();
        for id in overdue {
            let a = self.aircraft.remove(&id).expect("overdue aircraft present");
            if let Some(n) = self.inbound.get_mut(a.destination) {
                *n = n.saturating_sub(1);
            }
            self.counters.cancelled += 1;
            self.removed.push(id);
            events.push(Event {
                time_s: self.clock,
                kind: EventKind::Cancel { id },
            });
        }

        self.release_departures(&mut events);
        for e in self.detect_nmac() {
            events.push(Event {
                time_s: e.time_s,
                kind: EventKind::Nmac(e),
            });
        }
        self.log.extend(events.iter().cloned());
        Ok(events)
    }

    fn release_departures(&mut self, events: &mut Vec<Event>) {
        let mut i = 0;
        while i < self.pending.len() {
            let d = &self.pending[i];
            if d.departure_s > self.clock {
                break;
            }
            let spacing_ok = self.clock - self.last_departure[d.origin] >= self.config.departure_spacing_s;
            let parking_ok = self.inbound[d.destination] < self.parking[d.destination];
            if self.aircraft.len() < self.capacity && spacing_ok && parking_ok {
                let d = self.pending.remove(i);
                let route = self.routes[&(d.origin, d.destination)].clone();
                let a = Aircraft::spawn(&d, route, &self.lanes_ft, self.clock);
                self.inbound[d.destination] += 1;
                self.last_departure[d.origin] = self.clock;
                self.counters.departures += 1;
                events.push(Event {
                    time_s: self.clock,
                    kind: EventKind::Departure {
                        id: d.id,
                        origin: d.origin,
                        destination: d.destination,
                    },
                });
                self.aircraft.insert(a.id, a);
            } else {
                i += 1;
            }
        }
    }

    /// Detects pairs in NMAC and returns an event for each pair that entered
    /// violation since the previous call.
    pub fn detect_nmac(&mut self) -> Vec<NmacEvent> {
        let refs: Vec<&Aircraft> = self.aircraft.values().collect();
        let pairs = nmac_pairs(&refs);
        let mut current = BTreeSet::new();
        let mut events = Vec::new();
        for v in pairs {
            current.insert((v.a, v.b));
            if !self.active_nmac.contains(&(v.a, v.b)) {
                events.push(NmacEvent {
                    ownship: v.a,
                    intruder: v.b,
                    time_s: self.clock,
                    horizontal_ft: m_to_ft(v.horizontal_m),
                    vertical_ft: v.vertical_ft,
                });
            }
        }
        self.counters.nmacs += events.len() as u64;
        self.active_nmac = current;
        events
    }

    /// What `id` perceives: exact own state plus the intruders within
    /// sensing range, optionally perturbed by ADS-B noise. Aircraft without
    /// communication see no intruders.
    pub fn observe(&mut self, id: u32, surveillance: Surveillance) -> Result<RawObservation> {
        let own = self.get(id)?;
        let ownship = own.kinematics();
        if !own.comm {
            return Ok(RawObservation {
                ownship,
                intruders: Vec::new(),
            });
        }
        let horizontal = Normal::new(0.0, ADSB_HORIZONTAL_SIGMA_M).expect("valid sigma");
        let vertical = Normal::new(0.0, ADSB_ALTITUDE_SIGMA_FT).expect("valid sigma");
        let mut intruders = Vec::new();
        for other in self.aircraft.values() {
            if other.id == id {
                continue;
            }
            let mut k = other.kinematics();
            if surveillance == Surveillance::Adsb {
                k.x += horizontal.sample(&mut self.rng);
                k.y += horizontal.sample(&mut self.rng);
                k.z_ft += vertical.sample(&mut self.rng);
            }
            if (k.x - ownship.x).hypot(k.y - ownship.y) <= SENSING_RANGE_M {
                intruders.push(k);
            }
        }
        Ok(RawObservation { ownship, intruders })
    }

    /// Horizontal distance (m) and vertical separation (m) to the
    /// horizontally closest other aircraft, from true positions.
    pub fn closest_traffic(&self, id: u32) -> Result<Option<(f64, f64)>> {
        let own = self.get(id)?;
        Ok(self
            .aircraft
            .values()
            .filter(|a| a.id != id)
            .map(|a| ((a.x - own.x).hypot(a.y - own.y), ft_to_m((a.z_ft - own.z_ft).abs())))
            .min_by(|p, q| p.0.total_cmp(&q.0)))
    }

    /// Draws one ADS-B error sample (east m, north m, altitude ft) from the
    /// world's noise stream.
    pub fn sample_adsb_error(&mut self) -> (f64, f64, f64) {
        let horizontal = Normal::new(0.0, ADSB_HORIZONTAL_SIGMA_M).expect("valid sigma");
        let vertical = Normal::new(0.0, ADSB_ALTITUDE_SIGMA_FT).expect("valid sigma");
        (
            horizontal.sample(&mut self.rng),
            horizontal.sample(&mut self.rng),
            vertical.sample(&mut self.rng),
        )
    }
}
