//! The stations x slots schedule matrix, the feasibility constraint suite,
//! and the repair operator that projects arbitrary schedules onto the
//! feasible set.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fleet::{
    haversine_km, remaining_cycles, station_energy_per_slot_kwh, station_power_kw,
    ChargingStation, ElectricVehicle, EvId, OperationTimeConfig, StationId,
};
use crate::profile::EnergyProfile;

/// Magnitudes at or below this are treated as "no action", kWh.
pub(crate) const ENERGY_EPS: f64 = 1e-9;
/// Slack for floating-point comparisons in the validator, kWh / percent.
const CHECK_EPS: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("schedule references unknown station {0}")]
    UnknownStation(StationId),
    #[error("schedule references unknown vehicle {0}")]
    UnknownEv(EvId),
    #[error("schedule has {schedule_slots} slots but the balance profile has {balance_slots}")]
    LengthMismatch {
        schedule_slots: usize,
        balance_slots: usize,
    },
}

/// Thresholds of the feasibility constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintConfig {
    /// Deadband around zero balance within which no action is requested, kWh.
    pub epsilon_balance_kwh: f64,
    /// Minimum remaining battery cycles required to schedule a discharge.
    pub min_cycles: u32,
    /// Distance threshold applied to vehicles that carry no own limit, km.
    pub default_max_distance_km: f64,
}

impl Default for ConstraintConfig {
    fn default() -> Self {
        Self {
            epsilon_balance_kwh: 1.0,
            min_cycles: 10,
            default_max_distance_km: 10.0,
        }
    }
}

/// Distance limit that applies to a vehicle: its own when set, otherwise
/// the scenario default.
pub fn effective_max_distance_km(ev: &ElectricVehicle, cfg: &ConstraintConfig) -> f64 {
    if ev.preferences.max_distance_km > 0.0 {
        ev.preferences.max_distance_km
    } else {
        cfg.default_max_distance_km
    }
}

/// One scheduled action: the vehicle and the signed energy it moves.
/// Positive energy charges the vehicle (grid to EV), negative discharges
/// it into the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAction {
    pub ev: EvId,
    pub energy_kwh: f64,
}

/// Stations x slots grid of optional charge/discharge actions.
///
/// A feasible schedule holds at most one action per cell; the container
/// still accepts several so that ingested or hand-built schedules can be
/// validated and repaired rather than rejected at parse time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMatrix {
    station_ids: Vec<StationId>,
    slot_count: usize,
    cells: Vec<Vec<CellAction>>,
}

impl ScheduleMatrix {
    pub fn new(station_ids: Vec<StationId>, slot_count: usize) -> Self {
        let cells = vec![Vec::new(); station_ids.len() * slot_count];
        Self {
            station_ids,
            slot_count,
            cells,
        }
    }

    pub fn rows(&self) -> usize {
        self.station_ids.len()
    }

    pub fn slots(&self) -> usize {
        self.slot_count
    }

    pub fn station_ids(&self) -> &[StationId] {
        &self.station_ids
    }

    pub fn row_of(&self, id: &StationId) -> Option<usize> {
        self.station_ids.iter().position(|s| s == id)
    }

    fn idx(&self, row: usize, slot: usize) -> usize {
        debug_assert!(row < self.rows() && slot < self.slot_count);
        row * self.slot_count + slot
    }

    /// First action of a cell, if any.
    pub fn action(&self, row: usize, slot: usize) -> Option<&CellAction> {
        self.cells[self.idx(row, slot)].first()
    }

    /// All actions recorded in a cell (more than one is a violation).
    pub fn actions(&self, row: usize, slot: usize) -> &[CellAction] {
        &self.cells[self.idx(row, slot)]
    }

    /// Replaces the cell content with a single action.
    pub fn set_action(&mut self, row: usize, slot: usize, action: CellAction) {
        let i = self.idx(row, slot);
        self.cells[i].clear();
        self.cells[i].push(action);
    }

    /// Appends an action to a cell without replacing what is there.
    pub fn push_action(&mut self, row: usize, slot: usize, action: CellAction) {
        let i = self.idx(row, slot);
        self.cells[i].push(action);
    }

    pub fn clear_cell(&mut self, row: usize, slot: usize) {
        let i = self.idx(row, slot);
        self.cells[i].clear();
    }

    /// Actions in deterministic (row, slot) order.
    pub fn iter_actions(&self) -> impl Iterator<Item = (usize, usize, &CellAction)> {
        (0..self.rows()).flat_map(move |row| {
            (0..self.slot_count).flat_map(move |slot| {
                self.cells[row * self.slot_count + slot]
                    .iter()
                    .map(move |a| (row, slot, a))
            })
        })
    }

    pub fn action_count(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }

    /// Net energy moved by the fleet per slot: the column sums of the
    /// matrix, kWh.
    pub fn storage_values(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.slot_count];
        for row in 0..self.rows() {
            for slot in 0..self.slot_count {
                for a in &self.cells[row * self.slot_count + slot] {
                    totals[slot] += a.energy_kwh;
                }
            }
        }
        totals
    }

    /// The distributed storage profile of this schedule. Values are the
    /// column sums; the timebase is hourly, matching the scheduling slots.
    pub fn storage_profile(&self) -> EnergyProfile {
        EnergyProfile::hourly(self.storage_values())
    }
}

/// Kinds of feasibility violations the validator reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    /// More than one action in a single station/slot cell.
    CellConflict,
    /// One vehicle scheduled at two stations in the same slot.
    EvDoubleBooked,
    /// One vehicle both charging and discharging in the same slot.
    ChargeDischargeSameSlot,
    /// Discharge scheduled on a battery below the cycle floor.
    CycleExhausted,
    /// Vehicle farther from the station than its distance limit.
    DistanceExceeded,
    /// Cell energy above what the station can move in one slot.
    EnergyOverCellBound,
    /// Operation time (including the slow-condition penalty) exceeds the slot.
    TimeOverSlot,
    /// Column total disagrees in sign with the balance or exceeds it by
    /// more than one station-slot energy quantum.
    StorageOvershoot,
    /// Action would push the vehicle's state of charge outside [0, 100].
    SocOutOfRange,
}

/// One feasibility violation with its location and context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub station_id: Option<StationId>,
    pub slot: Option<usize>,
    pub ev_id: Option<EvId>,
    pub detail: String,
}

struct ResolvedSchedule<'a> {
    stations: Vec<&'a ChargingStation>,
    ev_index: HashMap<&'a EvId, usize>,
}

fn resolve<'a>(
    schedule: &ScheduleMatrix,
    fleet: &'a [ElectricVehicle],
    stations: &'a [ChargingStation],
) -> Result<ResolvedSchedule<'a>, ScheduleError> {
    let by_id: HashMap<&StationId, &ChargingStation> =
        stations.iter().map(|s| (&s.id, s)).collect();
    let mut resolved = Vec::with_capacity(schedule.rows());
    for id in schedule.station_ids() {
        match by_id.get(id) {
            Some(s) => resolved.push(*s),
            None => return Err(ScheduleError::UnknownStation(id.clone())),
        }
    }
    let ev_index: HashMap<&EvId, usize> = fleet.iter().enumerate().map(|(i, e)| (&e.id, i)).collect();
    for (_, _, a) in schedule.iter_actions() {
        if !ev_index.contains_key(&a.ev) {
            return Err(ScheduleError::UnknownEv(a.ev.clone()));
        }
    }
    Ok(ResolvedSchedule {
        stations: resolved,
        ev_index,
    })
}

/// Checks every feasibility constraint and returns all violations found.
/// An empty list means the schedule is feasible.
pub fn validate_schedule(
    schedule: &ScheduleMatrix,
    fleet: &[ElectricVehicle],
    stations: &[ChargingStation],
    balance: &EnergyProfile,
    cfg: &ConstraintConfig,
    op: &OperationTimeConfig,
) -> Result<Vec<Violation>, ScheduleError> {
    if schedule.slots() != balance.len() {
        return Err(ScheduleError::LengthMismatch {
            schedule_slots: schedule.slots(),
            balance_slots: balance.len(),
        });
    }
    let resolved = resolve(schedule, fleet, stations)?;
    let mut violations = Vec::new();

    // Cell conflicts.
    for row in 0..schedule.rows() {
        for slot in 0..schedule.slots() {
            let actions = schedule.actions(row, slot);
            if actions.len() > 1 {
                let evs: Vec<String> = actions.iter().map(|a| a.ev.to_string()).collect();
                violations.push(Violation {
                    kind: ViolationKind::CellConflict,
                    station_id: Some(schedule.station_ids()[row].clone()),
                    slot: Some(slot),
                    ev_id: None,
                    detail: format!("{} actions in one cell: {}", actions.len(), evs.join(", ")),
                });
            }
        }
    }

    // Per-vehicle mutual exclusion within a slot.
    let mut bookings: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    for (_, slot, a) in schedule.iter_actions() {
        bookings
            .entry((resolved.ev_index[&a.ev], slot))
            .or_default()
            .push(a.energy_kwh);
    }
    let mut booked: Vec<_> = bookings.into_iter().collect();
    booked.sort_by_key(|((ev, slot), _)| (*ev, *slot));
    for ((ev_idx, slot), energies) in booked {
        if energies.len() < 2 {
            continue;
        }
        let mixed = energies.iter().any(|&e| e > 0.0) && energies.iter().any(|&e| e < 0.0);
        violations.push(Violation {
            kind: if mixed {
                ViolationKind::ChargeDischargeSameSlot
            } else {
                ViolationKind::EvDoubleBooked
            },
            station_id: None,
            slot: Some(slot),
            ev_id: Some(fleet[ev_idx].id.clone()),
            detail: format!("{} actions for one vehicle in one slot", energies.len()),
        });
    }

    // Per-cell bounds.
    for (row, slot, a) in schedule.iter_actions() {
        let station = resolved.stations[row];
        let ev = &fleet[resolved.ev_index[&a.ev]];
        let ub = station_energy_per_slot_kwh(station, op);
        if a.energy_kwh.abs() > ub + CHECK_EPS {
            violations.push(Violation {
                kind: ViolationKind::EnergyOverCellBound,
                station_id: Some(station.id.clone()),
                slot: Some(slot),
                ev_id: Some(a.ev.clone()),
                detail: format!("|{}| kWh exceeds cell bound {} kWh", a.energy_kwh, ub),
            });
        }
        let p_pf = station_power_kw(station) * op.power_factor;
        if p_pf > 0.0 {
            let t_max = a.energy_kwh.abs() / p_pf + op.slow_condition_penalty_h;
            if t_max > op.slot_duration_h + CHECK_EPS {
                violations.push(Violation {
                    kind: ViolationKind::TimeOverSlot,
                    station_id: Some(station.id.clone()),
                    slot: Some(slot),
                    ev_id: Some(a.ev.clone()),
                    detail: format!(
                        "operation needs {t_max:.4} h but the slot lasts {} h",
                        op.slot_duration_h
                    ),
                });
            }
        }
        let dist = haversine_km(ev.location, station.location);
        let max_d = effective_max_distance_km(ev, cfg);
        if dist > max_d + CHECK_EPS {
            violations.push(Violation {
                kind: ViolationKind::DistanceExceeded,
                station_id: Some(station.id.clone()),
                slot: Some(slot),
                ev_id: Some(a.ev.clone()),
                detail: format!("{dist:.3} km from station, limit {max_d} km"),
            });
        }
        if a.energy_kwh < 0.0 && remaining_cycles(ev) < cfg.min_cycles {
            violations.push(Violation {
                kind: ViolationKind::CycleExhausted,
                station_id: Some(station.id.clone()),
                slot: Some(slot),
                ev_id: Some(a.ev.clone()),
                detail: format!(
                    "{} cycles remaining, floor is {}",
                    remaining_cycles(ev),
                    cfg.min_cycles
                ),
            });
        }
    }

    // State-of-charge trajectory per vehicle, chronological.
    let mut per_ev: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); fleet.len()];
    for (row, slot, a) in schedule.iter_actions() {
        per_ev[resolved.ev_index[&a.ev]].push((slot, row, a.energy_kwh));
    }
    for (ev_idx, mut actions) in per_ev.into_iter().enumerate() {
        if actions.is_empty() {
            continue;
        }
        actions.sort_by_key(|&(slot, row, _)| (slot, row));
        let ev = &fleet[ev_idx];
        let mut soc = ev.soc_pct;
        for (slot, row, energy) in actions {
            if energy > 0.0 {
                soc += energy / ev.capacity_kwh * 100.0;
            } else {
                soc -= energy.abs() / (1.0 - op.conversion_loss) / ev.capacity_kwh * 100.0;
            }
            if soc > 100.0 + CHECK_EPS || soc < -CHECK_EPS {
                violations.push(Violation {
                    kind: ViolationKind::SocOutOfRange,
                    station_id: Some(schedule.station_ids()[row].clone()),
                    slot: Some(slot),
                    ev_id: Some(ev.id.clone()),
                    detail: format!("state of charge reaches {soc:.3}%"),
                });
            }
        }
    }

    // Column totals against the balance.
    let quantum = resolved
        .stations
        .iter()
        .map(|s| station_energy_per_slot_kwh(s, op))
        .fold(0.0, f64::max);
    let storage = schedule.storage_values();
    for (slot, (&total, &bal)) in storage.iter().zip(&balance.values).enumerate() {
        if total * bal < 0.0 {
            violations.push(Violation {
                kind: ViolationKind::StorageOvershoot,
                station_id: None,
                slot: Some(slot),
                ev_id: None,
                detail: format!("storage {total:.3} kWh opposes balance {bal:.3} kWh"),
            });
        } else if total.abs() > bal.abs() + quantum + CHECK_EPS {
            violations.push(Violation {
                kind: ViolationKind::StorageOvershoot,
                station_id: None,
                slot: Some(slot),
                ev_id: None,
                detail: format!(
                    "storage {total:.3} kWh exceeds balance {bal:.3} kWh by more than {quantum:.3} kWh"
                ),
            });
        }
    }

    Ok(violations)
}

/// Projects a schedule onto the feasible set by removing or shrinking
/// actions; it never grows one.
///
/// The procedure is deterministic: cell conflicts keep the action with the
/// larger magnitude (ties to the lexicographically smaller vehicle id),
/// double bookings keep the cell with the larger magnitude (ties to the
/// lower station row), per-cell bounds clip, and column totals are trimmed
/// largest-action-first until they agree in sign with the balance and stay
/// within one station-slot quantum of it. Actions referencing unknown
/// vehicles or stations are dropped. The output always passes
/// [`validate_schedule`] with zero violations, and repairing a feasible
/// schedule returns it unchanged.
pub fn repair_schedule(
    schedule: &ScheduleMatrix,
    fleet: &[ElectricVehicle],
    stations: &[ChargingStation],
    balance: &EnergyProfile,
    cfg: &ConstraintConfig,
    op: &OperationTimeConfig,
) -> ScheduleMatrix {
    let station_by_id: HashMap<&StationId, &ChargingStation> =
        stations.iter().map(|s| (&s.id, s)).collect();
    let ev_index: HashMap<&EvId, usize> = fleet.iter().enumerate().map(|(i, e)| (&e.id, i)).collect();

    let rows = schedule.rows();
    let slots = schedule.slots();
    let row_station: Vec<Option<&ChargingStation>> = schedule
        .station_ids()
        .iter()
        .map(|id| station_by_id.get(id).copied())
        .collect();
    let row_ub: Vec<f64> = row_station
        .iter()
        .map(|s| s.map_or(0.0, |s| station_energy_per_slot_kwh(s, op)))
        .collect();
    // Largest energy one slot can host while the operation still fits the
    // slot duration including the penalty.
    let row_time_cap: Vec<f64> = row_station
        .iter()
        .map(|s| {
            s.map_or(0.0, |s| {
                (op.slot_duration_h - op.slow_condition_penalty_h).max(0.0)
                    * station_power_kw(s)
                    * op.power_factor
            })
        })
        .collect();
    let quantum = row_ub.iter().copied().fold(0.0, f64::max);

    #[derive(Clone)]
    struct Kept {
        row: usize,
        ev_idx: usize,
        energy: f64,
    }

    let mut out = ScheduleMatrix::new(schedule.station_ids().to_vec(), slots);
    let mut soc: Vec<f64> = fleet.iter().map(|e| e.soc_pct).collect();

    let apply_soc = |soc: &mut [f64], ev_idx: usize, energy: f64, sign: f64| {
        let cap = fleet[ev_idx].capacity_kwh;
        if energy > 0.0 {
            soc[ev_idx] += sign * energy / cap * 100.0;
        } else {
            soc[ev_idx] -= sign * energy.abs() / (1.0 - op.conversion_loss) / cap * 100.0;
        }
    };

    for slot in 0..slots {
        // One candidate per cell: largest magnitude, ties to the smaller
        // vehicle id.
        let mut candidates: Vec<Kept> = Vec::new();
        for row in 0..rows {
            if row_station[row].is_none() {
                continue;
            }
            let best = schedule
                .actions(row, slot)
                .iter()
                .filter(|a| a.energy_kwh.abs() > ENERGY_EPS)
                .filter(|a| ev_index.contains_key(&a.ev))
                .max_by(|a, b| {
                    a.energy_kwh
                        .abs()
                        .total_cmp(&b.energy_kwh.abs())
                        .then_with(|| b.ev.cmp(&a.ev))
                });
            if let Some(a) = best {
                candidates.push(Kept {
                    row,
                    ev_idx: ev_index[&a.ev],
                    energy: a.energy_kwh,
                });
            }
        }

        // One cell per vehicle per slot: largest magnitude wins, ties to
        // the lower station row.
        let mut best_by_ev: HashMap<usize, usize> = HashMap::new();
        for (i, c) in candidates.iter().enumerate() {
            match best_by_ev.get(&c.ev_idx) {
                Some(&j) if candidates[j].energy.abs() >= c.energy.abs() => {}
                _ => {
                    best_by_ev.insert(c.ev_idx, i);
                }
            }
        }
        let mut column: Vec<Kept> = candidates
            .iter()
            .enumerate()
            .filter(|(i, c)| best_by_ev.get(&c.ev_idx) == Some(i))
            .map(|(_, c)| c.clone())
            .collect();

        // Clip each action to the station, time, distance, cycle, and
        // state-of-charge limits, tracking the SoC as the day progresses.
        // Clipping tolerates a sliver of excess so that re-running the
        // repair on its own output reproduces it bit for bit.
        let clip = |magnitude: f64, cap: f64| {
            if magnitude > cap + ENERGY_EPS {
                cap.max(0.0)
            } else {
                magnitude
            }
        };
        column.retain_mut(|c| {
            let station = row_station[c.row].unwrap();
            let ev = &fleet[c.ev_idx];
            if haversine_km(ev.location, station.location)
                > effective_max_distance_km(ev, cfg) + ENERGY_EPS
            {
                return false;
            }
            let mut magnitude = clip(clip(c.energy.abs(), row_ub[c.row]), row_time_cap[c.row]);
            if c.energy < 0.0 {
                if remaining_cycles(ev) < cfg.min_cycles {
                    return false;
                }
                let stock = (soc[c.ev_idx] / 100.0 * ev.capacity_kwh).max(0.0)
                    * (1.0 - op.conversion_loss);
                magnitude = clip(magnitude, stock);
            } else {
                let headroom = ((100.0 - soc[c.ev_idx]) / 100.0 * ev.capacity_kwh).max(0.0);
                magnitude = clip(magnitude, headroom);
            }
            if magnitude <= ENERGY_EPS {
                return false;
            }
            c.energy = c.energy.signum() * magnitude;
            apply_soc(&mut soc, c.ev_idx, c.energy, 1.0);
            true
        });

        let bal = balance.values.get(slot).copied().unwrap_or(0.0);

        // The column total must not oppose the balance sign: drop the
        // largest opposing action until it agrees.
        loop {
            let total: f64 = column.iter().map(|c| c.energy).sum();
            if total * bal >= 0.0 {
                break;
            }
            let opposing = column
                .iter()
                .enumerate()
                .filter(|(_, c)| c.energy * bal < 0.0)
                .max_by(|(_, a), (_, b)| a.energy.abs().total_cmp(&b.energy.abs()))
                .map(|(i, _)| i);
            match opposing {
                Some(i) => {
                    let removed = column.remove(i);
                    apply_soc(&mut soc, removed.ev_idx, removed.energy, -1.0);
                }
                None => break,
            }
        }

        // Bounded overshoot: shrink the largest same-sign action until the
        // total stays within one quantum of the balance.
        loop {
            let total: f64 = column.iter().map(|c| c.energy).sum();
            let excess = total.abs() - (bal.abs() + quantum);
            if excess <= ENERGY_EPS {
                break;
            }
            let target = column
                .iter()
                .enumerate()
                .filter(|(_, c)| c.energy * total > 0.0)
                .max_by(|(_, a), (_, b)| a.energy.abs().total_cmp(&b.energy.abs()))
                .map(|(i, _)| i);
            let Some(i) = target else { break };
            let shrink = excess.min(column[i].energy.abs());
            let delta = column[i].energy.signum() * shrink;
            apply_soc(&mut soc, column[i].ev_idx, delta, -1.0);
            column[i].energy -= delta;
            if column[i].energy.abs() <= ENERGY_EPS {
                let removed = column.remove(i);
                if removed.energy.abs() > 0.0 {
                    apply_soc(&mut soc, removed.ev_idx, removed.energy, -1.0);
                }
            }
        }

        for c in &column {
            out.set_action(
                c.row,
                slot,
                CellAction {
                    ev: fleet[c.ev_idx].id.clone(),
                    energy_kwh: c.energy,
                },
            );
        }
    }

    out
}

/// Hours a vehicle would wait at a station before a given slot: the summed
/// operation times of the vehicles occupying the station in the directly
/// preceding, gapless run of slots.
pub fn waiting_time_h(
    schedule: &ScheduleMatrix,
    station: &ChargingStation,
    slot: usize,
    cfg: &OperationTimeConfig,
) -> f64 {
    let Some(row) = schedule.row_of(&station.id) else {
        return 0.0;
    };
    let p_pf = station_power_kw(station) * cfg.power_factor;
    if p_pf <= 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut s = slot.min(schedule.slots());
    while s > 0 {
        s -= 1;
        match schedule.action(row, s) {
            Some(a) => total += a.energy_kwh.abs() / p_pf,
            None => break,
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fleet::{GeoPoint, PreferenceSet, StationType};
    use approx::assert_relative_eq;

    fn station(id: &str) -> ChargingStation {
        ChargingStation {
            id: StationId::from(id),
            voltage_v: 400.0,
            current_a: 32.0,
            phases: 3,
            rated_power_kw: 22.0,
            station_type: StationType::Level3Dc,
            location: GeoPoint {
                lat_deg: 42.56,
                lon_deg: 12.64,
            },
        }
    }

    fn ev(id: &str, capacity: f64, soc: f64) -> ElectricVehicle {
        ElectricVehicle {
            id: EvId::from(id),
            model: "test".into(),
            capacity_kwh: capacity,
            soc_pct: soc,
            cycles_max: 2000,
            cycles_used: 0,
            cycle_margin: 0,
            location: GeoPoint {
                lat_deg: 42.56,
                lon_deg: 12.64,
            },
            preferences: PreferenceSet::default(),
        }
    }

    fn fixture() -> (
        Vec<ElectricVehicle>,
        Vec<ChargingStation>,
        EnergyProfile,
        ConstraintConfig,
        OperationTimeConfig,
    ) {
        let fleet = vec![ev("ev-1", 41.0, 50.0), ev("ev-2", 22.0, 50.0)];
        let stations = vec![station("cs-1"), station("cs-2")];
        let balance = EnergyProfile::hourly(vec![30.0, -30.0, 0.0]);
        (
            fleet,
            stations,
            balance,
            ConstraintConfig::default(),
            OperationTimeConfig::default(),
        )
    }

    fn matrix(stations: &[ChargingStation], slots: usize) -> ScheduleMatrix {
        ScheduleMatrix::new(stations.iter().map(|s| s.id.clone()).collect(), slots)
    }

    #[test]
    fn empty_schedule_is_feasible() {
        let (fleet, stations, balance, cfg, op) = fixture();
        let s = matrix(&stations, 3);
        let v = validate_schedule(&s, &fleet, &stations, &balance, &cfg, &op).unwrap();
        assert!(v.is_empty());
    }

    #[test]
    fn storage_profile_sums_columns() {
        let (fleet, stations, ..) = fixture();
        let mut s = matrix(&stations, 3);
        assert!(s.storage_values().iter().all(|&v| v == 0.0));
        s.set_action(
            0,
            0,
            CellAction {
                ev: fleet[0].id.clone(),
                energy_kwh: 10.0,
            },
        );
        s.set_action(
            1,
            0,
            CellAction {
                ev: fleet[1].id.clone(),
                energy_kwh: -4.0,
            },
        );
        assert_relative_eq!(s.storage_values()[0], 6.0);

        let mut charge_only = matrix(&stations, 1);
        charge_only.set_action(
            0,
            0,
            CellAction {
                ev: fleet[0].id.clone(),
                energy_kwh: 5.0,
            },
        );
        charge_only.push_action(
            1,
            0,
            CellAction {
                ev: fleet[1].id.clone(),
                energy_kwh: 5.0,
            },
        );
        charge_only.push_action(
            1,
            0,
            CellAction {
                ev: fleet[0].id.clone(),
                energy_kwh: 5.0,
            },
        );
        assert_relative_eq!(charge_only.storage_values()[0], 15.0);
    }

    #[test]
    fn two_evs_in_one_cell_is_a_conflict() {
        let (fleet, stations, balance, cfg, op) = fixture();
        let mut s = matrix(&stations, 3);
        s.push_action(
            0,
            0,
            CellAction {
                ev: fleet[0].id.clone(),
                energy_kwh: 5.0,
            },
        );
        s.push_action(
            0,
            0,
            CellAction {
                ev: fleet[1].id.clone(),
                energy_kwh: 5.0,
            },
        );
        let v = validate_schedule(&s, &fleet, &stations, &balance, &cfg, &op).unwrap();
        assert!(v.iter().any(|v| v.kind == ViolationKind::CellConflict));
    }

    #[test]
    fn exhausted_battery_cannot_discharge() {
        let (mut fleet, stations, balance, cfg, op) = fixture();
        fleet[0].cycles_used = 2000;
        let mut s = matrix(&stations, 3);
        s.set_action(
            0,
            1,
            CellAction {
                ev: fleet[0].id.clone(),
                energy_kwh: -5.0,
            },
        );
        let v = validate_schedule(&s, &fleet, &stations, &balance, &cfg, &op).unwrap();
        assert!(v.iter().any(|v| v.kind == ViolationKind::CycleExhausted));
    }

    #[test]
    fn double_booking_and_mixed_signs_are_distinguished() {
        let (fleet, stations, balance, cfg, op) = fixture();
        let mut s = matrix(&stations, 3);
        s.set_action(
            0,
            0,
            CellAction {
                ev: fleet[0].id.clone(),
                energy_kwh: 5.0,
            },
        );
        s.set_action(
            1,
            0,
            CellAction {
                ev: fleet[0].id.clone(),
                energy_kwh: 5.0,
            },
        );
        let v = validate_schedule(&s, &fleet, &stations, &balance, &cfg, &op).unwrap();
        assert!(v.iter().any(|v| v.kind == ViolationKind::EvDoubleBooked));

        let mut mixed = matrix(&stations, 3);
        mixed.set_action(
            0,
            0,
            CellAction {
                ev: fleet[0].id.clone(),
                energy_kwh: 5.0,
            },
        );
        mixed.set_action(
            1,
            0,
            CellAction {
                ev: fleet[0].id.clone(),
                energy_kwh: -5.0,
            },
        );
        let v = validate_schedule(&mixed, &fleet, &stations, &balance, &cfg, &op).unwrap();
        assert!(v
            .iter()
            .any(|v| v.kind == ViolationKind::ChargeDischargeSameSlot));
    }

    #[test]
    fn oversized_cell_and_soc_breach_are_reported() {
        let (fleet, stations, balance, cfg, op) = fixture();
        let mut s = matrix(&stations, 3);
        s.set_action(
            0,
            0,
            CellAction {
                ev: fleet[1].id.clone(),
                energy_kwh: 30.0,
            },
        );
        let v = validate_schedule(&s, &fleet, &stations, &balance, &cfg, &op).unwrap();
        assert!(v
            .iter()
            .any(|v| v.kind == ViolationKind::EnergyOverCellBound));
        // 30 kWh into a 22 kWh pack at 50% also breaks the SoC ceiling.
        assert!(v.iter().any(|v| v.kind == ViolationKind::SocOutOfRange));
    }

    #[test]
    fn far_away_vehicle_is_flagged() {
        let (mut fleet, stations, balance, cfg, op) = fixture();
        fleet[0].location.lat_deg += 1.0; // about 111 km north
        let mut s = matrix(&stations, 3);
        s.set_action(
            0,
            0,
            CellAction {
                ev: fleet[0].id.clone(),
                energy_kwh: 5.0,
            },
        );
        let v = validate_schedule(&s, &fleet, &stations, &balance, &cfg, &op).unwrap();
        assert!(v.iter().any(|v| v.kind == ViolationKind::DistanceExceeded));
    }

    #[test]
    fn unknown_ids_are_errors() {
        let (fleet, stations, balance, cfg, op) = fixture();
        let mut s = matrix(&stations, 3);
        s.set_action(
            0,
            0,
            CellAction {
                ev: EvId::from("ghost"),
                energy_kwh: 5.0,
            },
        );
        assert_eq!(
            validate_schedule(&s, &fleet, &stations, &balance, &cfg, &op).unwrap_err(),
            ScheduleError::UnknownEv(EvId::from("ghost"))
        );
    }

    #[test]
    fn repair_clips_oversized_cells() {
        let (fleet, stations, balance, cfg, op) = fixture();
        let mut s = matrix(&stations, 3);
        s.set_action(
            0,
            0,
            CellAction {
                ev: fleet[0].id.clone(),
                energy_kwh: 30.0,
            },
        );
        let repaired = repair_schedule(&s, &fleet, &stations, &balance, &cfg, &op);
        let a = repaired.action(0, 0).unwrap();
        // Clipped to the tightest of the cell bound (22) and the slot-time
        // cap (0.9 h * 22 kW * 0.95).
        let time_cap: f64 = 0.9 * 22.0 * 0.95;
        assert_relative_eq!(a.energy_kwh, time_cap.min(22.0), epsilon = 1e-9);
        let v = validate_schedule(&repaired, &fleet, &stations, &balance, &cfg, &op).unwrap();
        assert!(v.is_empty());
    }

    #[test]
    fn repair_clips_to_the_cell_bound_when_time_does_not_bind() {
        // With an ideal transfer (PF 1, no penalty) the station's per-slot
        // energy is the only cap: 30 kWh at a 22 kWh-per-slot station
        // comes back as exactly 22.
        let (mut fleet, stations, balance, cfg, mut op) = fixture();
        op.power_factor = 1.0;
        op.slow_condition_penalty_h = 0.0;
        fleet[0].capacity_kwh = 60.0;
        fleet[0].soc_pct = 10.0;
        let mut s = matrix(&stations, 3);
        s.set_action(
            0,
            0,
            CellAction {
                ev: fleet[0].id.clone(),
                energy_kwh: 30.0,
            },
        );
        let repaired = repair_schedule(&s, &fleet, &stations, &balance, &cfg, &op);
        assert_relative_eq!(repaired.action(0, 0).unwrap().energy_kwh, 22.0);
    }

    #[test]
    fn repair_keeps_feasible_schedules_unchanged() {
        let (fleet, stations, balance, cfg, op) = fixture();
        let mut s = matrix(&stations, 3);
        s.set_action(
            0,
            0,
            CellAction {
                ev: fleet[0].id.clone(),
                energy_kwh: 10.0,
            },
        );
        s.set_action(
            1,
            1,
            CellAction {
                ev: fleet[1].id.clone(),
                energy_kwh: -4.0,
            },
        );
        let repaired = repair_schedule(&s, &fleet, &stations, &balance, &cfg, &op);
        assert_eq!(repaired, s);
    }

    #[test]
    fn repair_resolves_double_booking_by_magnitude_then_row() {
        let (fleet, stations, balance, cfg, op) = fixture();
        let mut s = matrix(&stations, 3);
        s.set_action(
            0,
            0,
            CellAction {
                ev: fleet[0].id.clone(),
                energy_kwh: 5.0,
            },
        );
        s.set_action(
            1,
            0,
            CellAction {
                ev: fleet[0].id.clone(),
                energy_kwh: 9.0,
            },
        );
        let repaired = repair_schedule(&s, &fleet, &stations, &balance, &cfg, &op);
        assert!(repaired.action(0, 0).is_none());
        assert_relative_eq!(repaired.action(1, 0).unwrap().energy_kwh, 9.0);

        // Equal magnitudes: the lower station row survives.
        let mut tie = matrix(&stations, 3);
        tie.set_action(
            0,
            0,
            CellAction {
                ev: fleet[0].id.clone(),
                energy_kwh: 7.0,
            },
        );
        tie.set_action(
            1,
            0,
            CellAction {
                ev: fleet[0].id.clone(),
                energy_kwh: 7.0,
            },
        );
        let repaired = repair_schedule(&tie, &fleet, &stations, &balance, &cfg, &op);
        assert!(repaired.action(0, 0).is_some());
        assert!(repaired.action(1, 0).is_none());
    }

    #[test]
    fn repair_enforces_sign_agreement() {
        let (fleet, stations, balance, cfg, op) = fixture();
        // Slot 1 has a deficit; a lone charge there opposes it.
        let mut s = matrix(&stations, 3);
        s.set_action(
            0,
            1,
            CellAction {
                ev: fleet[0].id.clone(),
                energy_kwh: 8.0,
            },
        );
        let repaired = repair_schedule(&s, &fleet, &stations, &balance, &cfg, &op);
        assert!(repaired.action(0, 1).is_none());
        let v = validate_schedule(&repaired, &fleet, &stations, &balance, &cfg, &op).unwrap();
        assert!(v.is_empty());
    }

    #[test]
    fn waiting_time_sums_the_gapless_run() {
        let (fleet, stations, _, _, op) = fixture();
        let mut s = matrix(&stations, 6);
        // Two earlier vehicles, 0.5 h each at 22 kW * 0.95 PF.
        let half_hour_kwh = 22.0 * 0.95 * 0.5;
        s.set_action(
            0,
            2,
            CellAction {
                ev: fleet[0].id.clone(),
                energy_kwh: half_hour_kwh,
            },
        );
        s.set_action(
            0,
            3,
            CellAction {
                ev: fleet[1].id.clone(),
                energy_kwh: half_hour_kwh,
            },
        );
        assert_relative_eq!(waiting_time_h(&s, &stations[0], 4, &op), 1.0);
        // A gap right before the slot resets the queue.
        assert_relative_eq!(waiting_time_h(&s, &stations[0], 5, &op), 0.0);
        // Occupancy in later slots is not a queue.
        assert_relative_eq!(waiting_time_h(&s, &stations[0], 2, &op), 0.0);
        assert_relative_eq!(waiting_time_h(&s, &stations[0], 0, &op), 0.0);
    }
}
