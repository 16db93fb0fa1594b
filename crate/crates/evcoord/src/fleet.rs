//! Domain types and physical formulas for charging stations, electric
//! vehicles, batteries, operation times, and driver preferences.
//!
//! All functions here are pure; they can be called concurrently without
//! restriction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Below this state of charge (percent) charging slows down to protect the
/// battery; the decoder prefers targets inside the band.
pub const SOC_BAND_LOW_PCT: f64 = 20.0;
/// Upper edge of the preferred operating band, percent.
pub const SOC_BAND_HIGH_PCT: f64 = 80.0;

#[derive(Debug, Error, PartialEq)]
pub enum FleetError {
    #[error("target SoC {target}% is below current SoC {current}%; charging only raises SoC")]
    TargetBelowCurrent { target: f64, current: f64 },
    #[error("target SoC {target}% is above current SoC {current}%; discharging only lowers SoC")]
    TargetAboveCurrent { target: f64, current: f64 },
    #[error("station {station} has zero power; operation time is undefined")]
    ZeroPower { station: StationId },
}

/// Station identifier, unique within a scenario.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationId(pub String);

/// Vehicle identifier, unique within a fleet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EvId(pub String);

impl std::fmt::Display for StationId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::fmt::Display for EvId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StationId {
    fn from(s: &str) -> Self {
        StationId(s.to_owned())
    }
}

impl From<&str> for EvId {
    fn from(s: &str) -> Self {
        EvId(s.to_owned())
    }
}

/// A latitude/longitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    #[serde(rename = "lat")]
    pub lat_deg: f64,
    #[serde(rename = "lon")]
    pub lon_deg: f64,
}

/// Great-circle distance between two points, in kilometers.
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    const EARTH_RADIUS_KM: f64 = 6371.0;
    let lat1 = a.lat_deg.to_radians();
    let lat2 = b.lat_deg.to_radians();
    let dlat = (b.lat_deg - a.lat_deg).to_radians();
    let dlon = (b.lon_deg - a.lon_deg).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().asin()
}

/// Point at `distance_km` from `origin` along the given bearing (radians,
/// clockwise from north). Inverse of [`haversine_km`] on the same sphere.
pub fn destination_point(origin: GeoPoint, bearing_rad: f64, distance_km: f64) -> GeoPoint {
    const EARTH_RADIUS_KM: f64 = 6371.0;
    let ang = distance_km / EARTH_RADIUS_KM;
    let lat1 = origin.lat_deg.to_radians();
    let lon1 = origin.lon_deg.to_radians();
    let lat2 = (lat1.sin() * ang.cos() + lat1.cos() * ang.sin() * bearing_rad.cos()).asin();
    let lon2 = lon1
        + (bearing_rad.sin() * ang.sin() * lat1.cos()).atan2(ang.cos() - lat1.sin() * lat2.sin());
    GeoPoint {
        lat_deg: lat2.to_degrees(),
        lon_deg: lon2.to_degrees(),
    }
}

/// Connector class of a charging station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StationType {
    /// DC fast charging.
    #[serde(rename = "Level3DC")]
    Level3Dc,
    /// AC charging.
    #[serde(rename = "Level2AC")]
    Level2Ac,
}

/// A grid-connected bidirectional (V2G) charging station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargingStation {
    pub id: StationId,
    pub voltage_v: f64,
    pub current_a: f64,
    /// 1 or 3.
    pub phases: u8,
    pub rated_power_kw: f64,
    #[serde(rename = "type")]
    pub station_type: StationType,
    #[serde(flatten)]
    pub location: GeoPoint,
}

/// One driver preference for a time slot of the planning day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimePreference {
    pub slot: usize,
    pub priority: Priority,
}

/// Importance of a time preference; `High` outranks `Medium` outranks `Low`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Priority {
    Low,
    Medium,
    High,
}

/// Driver constraints on when and where their vehicle may be scheduled.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PreferenceSet {
    #[serde(default)]
    pub time_prefs: Vec<TimePreference>,
    /// Maximum distance the driver accepts between vehicle and station.
    /// Zero means unset; the scenario default applies then.
    #[serde(default)]
    pub max_distance_km: f64,
}

/// One electric vehicle of the coordinated fleet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectricVehicle {
    pub id: EvId,
    pub model: String,
    pub capacity_kwh: f64,
    /// State of charge, percent of `capacity_kwh`, in [0, 100].
    pub soc_pct: f64,
    /// Charge/discharge cycles the manufacturer rates the battery for.
    pub cycles_max: u32,
    /// Cycles performed so far.
    #[serde(default)]
    pub cycles_used: u32,
    /// Reserve subtracted from the rated cycles to account for partial
    /// charge/discharge wear.
    #[serde(default)]
    pub cycle_margin: u32,
    #[serde(flatten)]
    pub location: GeoPoint,
    #[serde(flatten)]
    pub preferences: PreferenceSet,
}

/// Parameters of the charge/discharge process shared by all operations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperationTimeConfig {
    /// Efficiency of the power transfer from charger to battery, in (0, 1].
    pub power_factor: f64,
    /// Extra operation time under unfavorable conditions, hours.
    pub slow_condition_penalty_h: f64,
    /// Fraction of energy lost in the battery-to-grid conversion, in [0, 1).
    pub conversion_loss: f64,
    /// Length of one scheduling slot, hours.
    pub slot_duration_h: f64,
}

impl Default for OperationTimeConfig {
    fn default() -> Self {
        Self {
            power_factor: 0.95,
            slow_condition_penalty_h: 0.1,
            conversion_loss: 0.05,
            slot_duration_h: 1.0,
        }
    }
}

/// Deliverable power of a station in kW.
///
/// Three-phase stations get a sqrt(3) factor on top of `V * I`; the result
/// is capped at the rated power, which is authoritative when the electrical
/// product exceeds it.
pub fn station_power_kw(station: &ChargingStation) -> f64 {
    let phase_factor = if station.phases == 3 {
        3.0_f64.sqrt()
    } else {
        1.0
    };
    let electrical_kw = station.voltage_v * station.current_a * phase_factor / 1000.0;
    electrical_kw.min(station.rated_power_kw)
}

/// Upper bound on the energy one schedule cell at this station can move
/// within a slot, kWh.
pub fn station_energy_per_slot_kwh(station: &ChargingStation, cfg: &OperationTimeConfig) -> f64 {
    station_power_kw(station) * cfg.slot_duration_h
}

/// Energy needed to raise the vehicle's SoC to `soc_target_pct`, kWh.
pub fn charge_energy_kwh(ev: &ElectricVehicle, soc_target_pct: f64) -> Result<f64, FleetError> {
    if soc_target_pct < ev.soc_pct {
        return Err(FleetError::TargetBelowCurrent {
            target: soc_target_pct,
            current: ev.soc_pct,
        });
    }
    Ok((soc_target_pct - ev.soc_pct) / 100.0 * ev.capacity_kwh)
}

/// Energy delivered to the grid when the vehicle's SoC drops to
/// `soc_target_pct`, net of the conversion loss, kWh.
pub fn discharge_energy_kwh(
    ev: &ElectricVehicle,
    soc_target_pct: f64,
    cfg: &OperationTimeConfig,
) -> Result<f64, FleetError> {
    if soc_target_pct > ev.soc_pct {
        return Err(FleetError::TargetAboveCurrent {
            target: soc_target_pct,
            current: ev.soc_pct,
        });
    }
    let drop_kwh = (ev.soc_pct - soc_target_pct) / 100.0 * ev.capacity_kwh;
    Ok((1.0 - cfg.conversion_loss) * drop_kwh)
}

/// Charge/discharge cycles still available on the battery.
///
/// Bounded both by the cycles already performed and by the wear margin, so
/// the result always lies in `[0, cycles_max - cycle_margin]`.
pub fn remaining_cycles(ev: &ElectricVehicle) -> u32 {
    let by_use = ev.cycles_max.saturating_sub(ev.cycles_used);
    let by_margin = ev.cycles_max.saturating_sub(ev.cycle_margin);
    by_use.min(by_margin)
}

/// Minimum and maximum operation time (hours) to move the vehicle from its
/// current SoC to `soc_target_pct` at the given station.
///
/// The minimum is the transfer time under normal conditions; the maximum
/// adds the slow-condition penalty. A slot can host the operation only when
/// the maximum fits in the slot duration.
pub fn operation_time_bounds_h(
    ev: &ElectricVehicle,
    station: &ChargingStation,
    soc_target_pct: f64,
    cfg: &OperationTimeConfig,
) -> Result<(f64, f64), FleetError> {
    let power_kw = station_power_kw(station);
    if power_kw <= 0.0 {
        return Err(FleetError::ZeroPower {
            station: station.id.clone(),
        });
    }
    let t_min =
        ev.capacity_kwh / (power_kw * cfg.power_factor) * (soc_target_pct - ev.soc_pct).abs()
            / 100.0;
    Ok((t_min, t_min + cfg.slow_condition_penalty_h))
}

/// Slots of a preference set ordered by decreasing importance.
///
/// High priority sorts before medium before low; ties break toward the
/// earlier slot, so the ordering is total and independent of input order.
pub fn preference_rank(prefs: &PreferenceSet) -> Vec<usize> {
    let mut entries: Vec<&TimePreference> = prefs.time_prefs.iter().collect();
    entries.sort_by(|a, b| b.priority.cmp(&a.priority).then(a.slot.cmp(&b.slot)));
    entries.into_iter().map(|p| p.slot).collect()
}
