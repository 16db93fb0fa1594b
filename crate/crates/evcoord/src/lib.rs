//! Day-ahead coordination of an electric-vehicle fleet that provides
//! balancing services to a microgrid.
//!
//! The engine schedules charging and discharging actions of EVs at
//! grid-connected stations so that the fleet's aggregate storage profile
//! tracks the forecast energy surplus or deficit of the local grid. The
//! search is a multi-objective Harris Hawks optimizer over station x slot
//! energy matrices, with one objective per time slot of the service window
//! and a bounded archive of mutually non-dominated schedules.
//!
//! Module map:
//!
//! * [`fleet`] - stations, vehicles, batteries, driver preferences, and the
//!   physical formulas tying them together.
//! * [`profile`] - energy profiles, balance forecasting, and the
//!   value-at-risk uncertainty haircut.
//! * [`schedule`] - the schedule matrix, the feasibility constraint suite,
//!   and the repair operator.
//! * [`scenario`] - synthetic fleet generation and scenario assembly from
//!   input files.
//! * [`hho`] - the multi-objective Harris Hawks optimizer and its Pareto
//!   archive.
//! * [`metrics`] - Pareto-front quality indicators and domain KPIs.
//! * [`io`] - file formats (JSON fleets and stations, CSV curves and
//!   schedules, scenario bundles, reports).

pub mod fleet;
pub mod hho;
pub mod io;
pub mod metrics;
pub mod profile;
pub mod scenario;
pub mod schedule;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named RNG sub-streams derived from the single run seed, so each
/// component can be regenerated independently without disturbing the
/// draws of the others.
pub mod streams {
    pub const FLEET: u64 = 1;
    pub const LOCATIONS: u64 = 2;
    pub const PREFERENCES: u64 = 3;
    pub const OPTIMIZER: u64 = 4;
}

/// Builds the deterministic RNG for one named component stream.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
