//! Multi-aircraft corridor simulator: network and scenario generation,
//! point-mass dynamics, NMAC detection and surveillance.

pub mod events;
pub mod network;
pub mod scenario;
pub mod units;
pub mod world;

pub use events::{parse_event_log, write_event_log, Event, EventKind, NmacEvent};
pub use network::{generate_network, CorridorNetwork, NetworkConfig, Node, Route, Topology};
pub use scenario::{generate_scenario, AircraftType, FlightDemand, Scenario, ScenarioConfig};
pub use world::{
    nmac_pairs, nmac_pairs_brute_force, Aircraft, Command, Envelope, FlightCounters, Kinematics, RawObservation,
    SimConfig, Surveillance, Violation, WorldState, NMAC_HORIZONTAL_FT, NMAC_VERTICAL_FT, SENSING_RANGE_M,
};
