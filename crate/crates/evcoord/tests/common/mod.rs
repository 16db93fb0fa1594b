//! Shared scenario builders for the integration suites.
#![allow(dead_code)] // each test target uses its own subset

use rand::Rng;

use evcoord::fleet::{
    ChargingStation, ElectricVehicle, EvId, GeoPoint, OperationTimeConfig, PreferenceSet,
    Priority, StationId, StationType, TimePreference,
};
use evcoord::profile::EnergyProfile;
use evcoord::scenario::{
    gen_fleet, gen_locations, gen_time_preferences, FleetSpec, PreferenceStrategy, Scenario,
};
use evcoord::schedule::ConstraintConfig;
use evcoord::{seeded_rng, streams};

pub const GRID_CENTER: GeoPoint = GeoPoint {
    lat_deg: 42.56,
    lon_deg: 12.64,
};

pub fn station(id: &str, location: GeoPoint) -> ChargingStation {
    ChargingStation {
        id: StationId(id.to_owned()),
        voltage_v: 400.0,
        current_a: 32.0,
        phases: 3,
        rated_power_kw: 22.0,
        station_type: StationType::Level3Dc,
        location,
    }
}

pub fn stations_around(n: usize, center: GeoPoint) -> Vec<ChargingStation> {
    (0..n)
        .map(|i| {
            station(
                &format!("cs-{i}"),
                GeoPoint {
                    lat_deg: center.lat_deg + 0.008 * i as f64,
                    lon_deg: center.lon_deg + 0.004 * (i % 3) as f64,
                },
            )
        })
        .collect()
}

/// A small random instance: `station_count` stations, `slot_count` slots,
/// `ev_count` vehicles, balance values drawn in +/- (5, 35) kWh with some
/// balanced slots mixed in. The window spans the whole horizon.
pub fn toy_scenario(seed: u64, station_count: usize, slot_count: usize, ev_count: usize) -> Scenario {
    let mut rng = seeded_rng(seed, 90);
    let stations = stations_around(station_count, GRID_CENTER);
    let capacities = [22.0, 41.0, 24.0, 30.0];
    let fleet: Vec<ElectricVehicle> = (0..ev_count)
        .map(|i| ElectricVehicle {
            id: EvId(format!("ev-{i:02}")),
            model: "toy".into(),
            capacity_kwh: capacities[i % capacities.len()],
            soc_pct: rng.random_range(30.0..70.0),
            cycles_max: 2000,
            cycles_used: rng.random_range(0..500),
            cycle_margin: 0,
            location: GeoPoint {
                lat_deg: GRID_CENTER.lat_deg + rng.random_range(-0.01..0.01),
                lon_deg: GRID_CENTER.lon_deg + rng.random_range(-0.01..0.01),
            },
            preferences: PreferenceSet {
                time_prefs: vec![TimePreference {
                    slot: rng.random_range(0..slot_count),
                    priority: [Priority::Low, Priority::Medium, Priority::High]
                        [rng.random_range(0..3)],
                }],
                max_distance_km: 10.0,
            },
        })
        .collect();
    let balance_values: Vec<f64> = (0..slot_count)
        .map(|_| {
            if rng.random::<f64>() < 0.2 {
                0.0
            } else {
                let magnitude = rng.random_range(5.0..35.0);
                if rng.random::<f64>() < 0.5 {
                    magnitude
                } else {
                    -magnitude
                }
            }
        })
        .collect();
    let balance = EnergyProfile::hourly(balance_values.clone());
    Scenario {
        fleet,
        stations,
        generation: EnergyProfile::hourly(balance_values.iter().map(|v| v.max(0.0)).collect()),
        consumption: EnergyProfile::hourly(balance_values.iter().map(|v| (-v).max(0.0)).collect()),
        balance,
        window: 0..slot_count,
        constraints: ConstraintConfig::default(),
        operation: OperationTimeConfig::default(),
    }
}

/// The midday-surplus reference case: an hourly day with a photovoltaic
/// surplus between 7:00 and 15:00 and a balanced grid everywhere else.
pub fn surplus_curves(surplus: &[f64; 8]) -> (EnergyProfile, EnergyProfile) {
    let mut generation = vec![0.0; 24];
    let mut consumption = vec![0.0; 24];
    for t in 0..24 {
        // A flat household base keeps both curves realistic; outside the
        // window the grid is balanced.
        let base = 25.0;
        generation[t] = base;
        consumption[t] = base;
        if (7..15).contains(&t) {
            generation[t] += 40.0 + surplus[t - 7];
            consumption[t] += 40.0;
        }
    }
    (
        EnergyProfile::hourly(generation),
        EnergyProfile::hourly(consumption),
    )
}

/// A harder instance for convergence studies: a contiguous window of four
/// surplus then four deficit slots, a tight fleet, and enough stations
/// that vehicle choice matters. The deficit half can only be served by
/// what the surplus half stored or by vehicles that arrived charged.
pub fn mixed_scenario(seed: u64) -> Scenario {
    mixed_scenario_sized(seed, 6, 8, &[40.0, 120.0, 70.0, 55.0], &[35.0, 55.0, 60.0, 40.0])
}

/// Mixed-window instance with adjustable size: `per_model` vehicles per
/// model row, `surplus` slots starting at 8:00 followed directly by the
/// `deficit` slots.
pub fn mixed_scenario_sized(
    seed: u64,
    station_count: usize,
    per_model: usize,
    surplus: &[f64],
    deficit: &[f64],
) -> Scenario {
    let stations = stations_around(station_count, GRID_CENTER);
    let spec = FleetSpec {
        model_mix: vec![
            evcoord::scenario::ModelMixRow {
                model: "Renault ZOE".into(),
                capacity_kwh: 22.0,
                count: per_model,
            },
            evcoord::scenario::ModelMixRow {
                model: "Renault ZOE".into(),
                capacity_kwh: 41.0,
                count: per_model,
            },
            evcoord::scenario::ModelMixRow {
                model: "Nissan LEAF".into(),
                capacity_kwh: 24.0,
                count: per_model,
            },
        ],
        ..Default::default()
    };
    let mut fleet = gen_fleet(&spec, &mut seeded_rng(seed, streams::FLEET));
    gen_locations(
        &mut fleet,
        &stations,
        5.0,
        &mut seeded_rng(seed, streams::LOCATIONS),
    );
    gen_time_preferences(
        &mut fleet,
        24,
        &PreferenceStrategy::Uniform,
        &mut seeded_rng(seed, streams::PREFERENCES),
    );
    let mut generation = vec![30.0; 24];
    let mut consumption = vec![30.0; 24];
    for (i, s) in surplus.iter().enumerate() {
        generation[8 + i] += s;
    }
    for (i, d) in deficit.iter().enumerate() {
        consumption[8 + surplus.len() + i] += d;
    }
    let generation = EnergyProfile::hourly(generation);
    let consumption = EnergyProfile::hourly(consumption);
    let balance =
        evcoord::profile::balance_profile(&generation, &consumption, None).expect("same length");
    let constraints = ConstraintConfig::default();
    let window = evcoord::scenario::derive_window(&balance, &constraints, None);
    assert_eq!(window, 8..8 + surplus.len() + deficit.len());
    Scenario {
        fleet,
        stations,
        generation,
        consumption,
        balance,
        window,
        constraints,
        operation: OperationTimeConfig::default(),
    }
}

/// Scaled desk scenario: `station_count` stations, a synthesized fleet of
/// `ev_count` vehicles, and the 8-slot midday surplus window.
pub fn desk_scenario(seed: u64, station_count: usize, ev_count: usize) -> Scenario {
    let stations = stations_around(station_count, GRID_CENTER);
    let spec = if ev_count == 100 {
        FleetSpec::default()
    } else {
        FleetSpec {
            model_mix: vec![evcoord::scenario::ModelMixRow {
                model: "Renault ZOE".into(),
                capacity_kwh: 41.0,
                count: ev_count,
            }],
            ..Default::default()
        }
    };
    let mut fleet = gen_fleet(&spec, &mut seeded_rng(seed, streams::FLEET));
    gen_locations(
        &mut fleet,
        &stations,
        5.0,
        &mut seeded_rng(seed, streams::LOCATIONS),
    );
    gen_time_preferences(
        &mut fleet,
        24,
        &PreferenceStrategy::Uniform,
        &mut seeded_rng(seed, streams::PREFERENCES),
    );
    let (generation, consumption) = surplus_curves(&[20.0, 35.0, 48.0, 55.0, 52.0, 42.0, 30.0, 18.0]);
    let balance =
        evcoord::profile::balance_profile(&generation, &consumption, None).expect("same length");
    let constraints = ConstraintConfig::default();
    let window = evcoord::scenario::derive_window(&balance, &constraints, None);
    assert_eq!(window, 7..15, "fixture must give the 8-slot midday window");
    Scenario {
        fleet,
        stations,
        generation,
        consumption,
        balance,
        window,
        constraints,
        operation: OperationTimeConfig::default(),
    }
}
