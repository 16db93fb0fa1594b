//! Synthetic fleet generation and scenario assembly.
//!
//! Fleets are drawn from a model mix with Beta-distributed state of charge
//! and Weibull-distributed remaining battery cycles; vehicles are placed
//! uniformly on discs around the stations and receive time preferences per
//! slot. A scenario bundles fleet, stations, forecast curves, the derived
//! balance profile, and the service window into one reproducible unit.

use std::ops::Range;
use std::path::Path;

use rand::Rng;
use rand_distr::{Beta, Distribution, Weibull};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fleet::{
    destination_point, ChargingStation, ElectricVehicle, EvId, GeoPoint, OperationTimeConfig,
    PreferenceSet, Priority, TimePreference,
};
use crate::io;
use crate::profile::{balance_profile, classify_slot, EnergyProfile, SlotClass, UncertaintyModel};
use crate::schedule::ConstraintConfig;

/// Rated cycle budget assigned to generated batteries; the used-cycle
/// counter is back-computed so the remaining cycles equal the Weibull draw.
pub const NOMINAL_CYCLES_MAX: u32 = 2000;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Io(#[from] io::IoError),
    #[error(transparent)]
    Profile(#[from] crate::profile::ProfileError),
    #[error("window override {start}..{end} lies outside the {slots}-slot profile")]
    WindowOutOfRange {
        start: usize,
        end: usize,
        slots: usize,
    },
}

/// One row of the fleet model mix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMixRow {
    pub model: String,
    pub capacity_kwh: f64,
    pub count: usize,
}

/// Recipe for a synthetic fleet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetSpec {
    pub model_mix: Vec<ModelMixRow>,
    pub soc_beta_alpha: f64,
    pub soc_beta_beta: f64,
    pub soc_low_pct: f64,
    pub soc_high_pct: f64,
    pub cycles_weibull_shape: f64,
    pub cycles_weibull_scale: f64,
    pub placement_radius_km: f64,
}

impl Default for FleetSpec {
    fn default() -> Self {
        Self {
            model_mix: vec![
                ModelMixRow {
                    model: "Renault ZOE".into(),
                    capacity_kwh: 22.0,
                    count: 35,
                },
                ModelMixRow {
                    model: "Renault ZOE".into(),
                    capacity_kwh: 41.0,
                    count: 45,
                },
                ModelMixRow {
                    model: "Nissan LEAF".into(),
                    capacity_kwh: 24.0,
                    count: 20,
                },
            ],
            soc_beta_alpha: 2.0,
            soc_beta_beta: 5.0,
            soc_low_pct: 20.0,
            soc_high_pct: 80.0,
            cycles_weibull_shape: 2.0,
            cycles_weibull_scale: 1000.0,
            placement_radius_km: 5.0,
        }
    }
}

/// How generated time preferences are distributed over the slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PreferenceStrategy {
    /// Every slot equally likely.
    Uniform,
    /// A fraction of the drivers is reassigned to the given off-peak slots.
    OffPeakBias {
        fraction: f64,
        offpeak_slots: Vec<usize>,
    },
}

/// Draws the fleet of a spec: state of charge from a rescaled Beta
/// distribution bounded to `[soc_low, soc_high]`, remaining cycles from a
/// Weibull draw. Locations and preferences start empty; fill them with
/// [`gen_locations`] and [`gen_time_preferences`].
pub fn gen_fleet(spec: &FleetSpec, rng: &mut impl Rng) -> Vec<ElectricVehicle> {
    let beta = Beta::new(spec.soc_beta_alpha, spec.soc_beta_beta).expect("valid beta shapes");
    let weibull = Weibull::new(spec.cycles_weibull_scale, spec.cycles_weibull_shape)
        .expect("valid weibull parameters");
    let mut fleet = Vec::new();
    let mut serial = 0usize;
    for row in &spec.model_mix {
        for _ in 0..row.count {
            let unit: f64 = beta.sample(rng);
            let soc = spec.soc_low_pct + (spec.soc_high_pct - spec.soc_low_pct) * unit;
            let remaining = weibull.sample(rng).round().max(0.0) as u32;
            let (cycles_max, cycles_used) = if remaining <= NOMINAL_CYCLES_MAX {
                (NOMINAL_CYCLES_MAX, NOMINAL_CYCLES_MAX - remaining)
            } else {
                (remaining, 0)
            };
            fleet.push(ElectricVehicle {
                id: EvId(format!("ev-{serial:04}")),
                model: row.model.clone(),
                capacity_kwh: row.capacity_kwh,
                soc_pct: soc,
                cycles_max,
                cycles_used,
                cycle_margin: 0,
                location: GeoPoint {
                    lat_deg: 0.0,
                    lon_deg: 0.0,
                },
                preferences: PreferenceSet::default(),
            });
            serial += 1;
        }
    }
    fleet
}

/// Places every vehicle uniformly on the disc of `radius_km` around a
/// uniformly chosen station. A draw that coincides with an already placed
/// vehicle (within 1e-6 degrees on both axes) is redrawn up to 100 times
/// and then nudged deterministically.
pub fn gen_locations(
    fleet: &mut [ElectricVehicle],
    stations: &[ChargingStation],
    radius_km: f64,
    rng: &mut impl Rng,
) {
    assert!(!stations.is_empty(), "at least one station required");
    let mut taken: Vec<GeoPoint> = Vec::with_capacity(fleet.len());
    let collides = |taken: &[GeoPoint], p: GeoPoint| {
        taken.iter().any(|q| {
            (q.lat_deg - p.lat_deg).abs() <= 1e-6 && (q.lon_deg - p.lon_deg).abs() <= 1e-6
        })
    };
    for ev in fleet.iter_mut() {
        let mut point = GeoPoint {
            lat_deg: 0.0,
            lon_deg: 0.0,
        };
        let mut placed = false;
        for _ in 0..100 {
            let station = &stations[rng.random_range(0..stations.len())];
            // sqrt keeps the density uniform over the disc area
            let dist = radius_km * rng.random::<f64>().sqrt();
            let bearing = rng.random::<f64>() * std::f64::consts::TAU;
            point = destination_point(station.location, bearing, dist);
            if !collides(&taken, point) {
                placed = true;
                break;
            }
        }
        if !placed {
            while collides(&taken, point) {
                point.lat_deg += 2e-6;
            }
        }
        ev.location = point;
        taken.push(point);
    }
}

/// Gives every vehicle one preferred slot, drawn uniformly and then
/// re-weighted by the strategy; priorities land on high/medium/low with
/// probabilities 0.5/0.3/0.2.
pub fn gen_time_preferences(
    fleet: &mut [ElectricVehicle],
    slot_count: usize,
    strategy: &PreferenceStrategy,
    rng: &mut impl Rng,
) {
    assert!(slot_count >= 1, "at least one slot required");
    for ev in fleet.iter_mut() {
        let mut slot = rng.random_range(0..slot_count);
        if let PreferenceStrategy::OffPeakBias {
            fraction,
            offpeak_slots,
        } = strategy
        {
            if !offpeak_slots.is_empty() && rng.random::<f64>() < *fraction {
                slot = offpeak_slots[rng.random_range(0..offpeak_slots.len())];
            }
        }
        let p: f64 = rng.random();
        let priority = if p < 0.5 {
            Priority::High
        } else if p < 0.8 {
            Priority::Medium
        } else {
            Priority::Low
        };
        ev.preferences.time_prefs = vec![TimePreference { slot, priority }];
    }
}

/// A complete, self-contained optimization scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub fleet: Vec<ElectricVehicle>,
    pub stations: Vec<ChargingStation>,
    pub generation: EnergyProfile,
    pub consumption: EnergyProfile,
    pub balance: EnergyProfile,
    /// Service window: the slots the optimizer plans for.
    pub window: Range<usize>,
    pub constraints: ConstraintConfig,
    pub operation: OperationTimeConfig,
}

/// Knobs of scenario assembly.
#[derive(Debug, Clone, Default)]
pub struct ScenarioConfig {
    pub constraints: ConstraintConfig,
    pub operation: OperationTimeConfig,
    /// Restricts the derived service window; defaults to the whole day.
    pub window_override: Option<Range<usize>>,
    pub uncertainty: Option<UncertaintyModel>,
}

/// The service window of a balance profile: the longest contiguous run of
/// non-balanced slots (ties to the earliest), intersected with the
/// optional override.
pub fn derive_window(
    balance: &EnergyProfile,
    cfg: &ConstraintConfig,
    window_override: Option<&Range<usize>>,
) -> Range<usize> {
    let mut best: Range<usize> = 0..0;
    let mut run_start = None;
    for (t, &v) in balance.values.iter().enumerate() {
        if classify_slot(v, cfg) != SlotClass::Balanced {
            run_start.get_or_insert(t);
        } else if let Some(start) = run_start.take() {
            if t - start > best.len() {
                best = start..t;
            }
        }
    }
    if let Some(start) = run_start {
        if balance.len() - start > best.len() {
            best = start..balance.len();
        }
    }
    if let Some(over) = window_override {
        let start = best.start.max(over.start);
        let end = best.end.min(over.end);
        if start < end {
            start..end
        } else {
            0..0
        }
    } else {
        best
    }
}

/// Assembles a scenario from its four input files.
pub fn build_scenario(
    fleet_path: &Path,
    stations_path: &Path,
    generation_path: &Path,
    consumption_path: &Path,
    cfg: &ScenarioConfig,
) -> Result<Scenario, ScenarioError> {
    let fleet = io::load_fleet(fleet_path)?;
    let stations = io::load_stations(stations_path)?;
    let generation = io::load_curve(generation_path, cfg.operation.slot_duration_h)?;
    let consumption = io::load_curve(consumption_path, cfg.operation.slot_duration_h)?;
    assemble_scenario(fleet, stations, generation, consumption, cfg)
}

/// Same as [`build_scenario`] but from already loaded pieces.
pub fn assemble_scenario(
    fleet: Vec<ElectricVehicle>,
    stations: Vec<ChargingStation>,
    generation: EnergyProfile,
    consumption: EnergyProfile,
    cfg: &ScenarioConfig,
) -> Result<Scenario, ScenarioError> {
    if let Some(over) = &cfg.window_override {
        if over.end > generation.len() || over.start > over.end {
            return Err(ScenarioError::WindowOutOfRange {
                start: over.start,
                end: over.end,
                slots: generation.len(),
            });
        }
    }
    let balance = balance_profile(&generation, &consumption, cfg.uncertainty.as_ref())?;
    let window = derive_window(&balance, &cfg.constraints, cfg.window_override.as_ref());
    Ok(Scenario {
        fleet,
        stations,
        generation,
        consumption,
        balance,
        window,
        constraints: cfg.constraints,
        operation: cfg.operation,
    })
}
