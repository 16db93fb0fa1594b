//! Decoding of continuous positions into feasible schedules, and the
//! per-slot fitness vector.

use std::ops::Range;

use crate::fleet::{
    haversine_km, remaining_cycles, station_energy_per_slot_kwh, station_power_kw,
    SOC_BAND_HIGH_PCT, SOC_BAND_LOW_PCT,
};
use crate::profile::{classify_slot, EnergyProfile, SlotClass};
use crate::scenario::Scenario;
use crate::schedule::{
    effective_max_distance_km, repair_schedule, validate_schedule, CellAction, ScheduleMatrix,
    ENERGY_EPS,
};

use super::position::{Position, PositionBounds};

/// Absolute per-slot tracking error between the balance and the storage
/// profile of a schedule, one objective per service-window slot.
pub fn fitness_vector(
    schedule: &ScheduleMatrix,
    balance: &EnergyProfile,
    window: &Range<usize>,
) -> Vec<f64> {
    let storage = schedule.storage_values();
    window
        .clone()
        .map(|t| (balance.values[t] - storage[t]).abs())
        .collect()
}

/// Precomputed scenario tables used to turn positions into feasible
/// schedules. Building one is linear in fleet x stations; decoding reuses
/// it for every evaluation.
pub struct DecodeContext<'a> {
    pub scenario: &'a Scenario,
    classes: Vec<SlotClass>,
    row_ub: Vec<f64>,
    /// Largest energy whose operation time still fits in a slot, per row.
    row_time_cap: Vec<f64>,
    /// Haversine distance vehicle -> station, vehicle-major.
    dist_km: Vec<f64>,
    /// Preference rank of every slot per vehicle: 0 high, 1 medium, 2 low,
    /// 3 unlisted.
    pref_rank: Vec<Vec<u8>>,
    max_dist_km: Vec<f64>,
    cycles_left: Vec<u32>,
}

impl<'a> DecodeContext<'a> {
    pub fn new(scenario: &'a Scenario) -> Self {
        let op = &scenario.operation;
        let cfg = &scenario.constraints;
        let stations = &scenario.stations;
        let fleet = &scenario.fleet;
        let slots = scenario.balance.len();

        let classes = scenario
            .balance
            .values
            .iter()
            .map(|&v| classify_slot(v, cfg))
            .collect();
        let row_ub = stations
            .iter()
            .map(|s| station_energy_per_slot_kwh(s, op))
            .collect();
        let row_time_cap = stations
            .iter()
            .map(|s| {
                (op.slot_duration_h - op.slow_condition_penalty_h).max(0.0)
                    * station_power_kw(s)
                    * op.power_factor
            })
            .collect();
        let mut dist_km = Vec::with_capacity(fleet.len() * stations.len());
        for ev in fleet {
            for s in stations {
                dist_km.push(haversine_km(ev.location, s.location));
            }
        }
        let pref_rank = fleet
            .iter()
            .map(|ev| {
                let mut ranks = vec![3u8; slots];
                for p in &ev.preferences.time_prefs {
                    if p.slot < slots {
                        ranks[p.slot] = match p.priority {
                            crate::fleet::Priority::High => 0,
                            crate::fleet::Priority::Medium => 1,
                            crate::fleet::Priority::Low => 2,
                        };
                    }
                }
                ranks
            })
            .collect();
        let max_dist_km = fleet
            .iter()
            .map(|ev| effective_max_distance_km(ev, cfg))
            .collect();
        let cycles_left = fleet.iter().map(remaining_cycles).collect();

        Self {
            scenario,
            classes,
            row_ub,
            row_time_cap,
            dist_km,
            pref_rank,
            max_dist_km,
            cycles_left,
        }
    }

    pub fn rows(&self) -> usize {
        self.scenario.stations.len()
    }

    pub fn slots(&self) -> usize {
        self.scenario.balance.len()
    }

    pub fn slot_class(&self, slot: usize) -> SlotClass {
        self.classes[slot]
    }

    pub fn row_upper_bound(&self, row: usize) -> f64 {
        self.row_ub[row]
    }

    /// Search-space bounds: symmetric energy bands per station row, with
    /// balanced slots and slots outside the service window pinned to zero.
    pub fn bounds(&self) -> PositionBounds {
        let zero_cols = (0..self.slots())
            .map(|t| self.classes[t] == SlotClass::Balanced || !self.scenario.window.contains(&t))
            .collect();
        PositionBounds::symmetric(self.row_ub.clone(), zero_cols)
    }

    /// Largest feasible magnitude for a vehicle acting in a cell, given
    /// its running state of charge. Charging prefers to stop at the upper
    /// edge of the battery's healthy band and discharging at its lower
    /// edge, so decoded targets stay inside it.
    fn grant(&self, ev_idx: usize, row: usize, soc_pct: f64, want: f64, charging: bool) -> f64 {
        let ev = &self.scenario.fleet[ev_idx];
        let op = &self.scenario.operation;
        let cap = want.min(self.row_ub[row]).min(self.row_time_cap[row]);
        if charging {
            let headroom = ((SOC_BAND_HIGH_PCT - soc_pct) / 100.0 * ev.capacity_kwh).max(0.0);
            cap.min(headroom)
        } else {
            let stock = ((soc_pct - SOC_BAND_LOW_PCT) / 100.0 * ev.capacity_kwh).max(0.0)
                * (1.0 - op.conversion_loss);
            cap.min(stock)
        }
    }

    /// Maps a continuous position to a feasible schedule.
    ///
    /// Cells are visited by decreasing magnitude; cells whose sign opposes
    /// the slot class are skipped, and each column stops granting once the
    /// scheduled energy reaches the balance magnitude, so a decoded slot
    /// tracks the balance from below instead of overshooting it. Each
    /// remaining cell is assigned the admissible vehicle with the best
    /// score for that slot: preference rank first, then distance, then
    /// the smaller vehicle id. Admissible means within driving distance,
    /// enough cycles for a discharge, free in that slot, and nonzero
    /// state-of-charge headroom or stock. The cell energy is clipped to
    /// what the vehicle can take or give; cells with no admissible
    /// vehicle decode to no action. The result then goes through schedule
    /// repair, so decoded schedules always validate clean.
    pub fn decode(&self, position: &Position) -> ScheduleMatrix {
        let fleet = &self.scenario.fleet;
        let stations = &self.scenario.stations;
        let cfg = &self.scenario.constraints;
        let slots = self.slots();

        let mut order: Vec<(usize, usize)> = Vec::new();
        for row in 0..self.rows() {
            for col in self.scenario.window.clone() {
                let v = position.get(row, col);
                let class_sign = match self.classes[col] {
                    SlotClass::Balanced => continue,
                    SlotClass::Surplus => 1.0,
                    SlotClass::Deficit => -1.0,
                };
                if v.abs() > ENERGY_EPS && v * class_sign > 0.0 {
                    order.push((row, col));
                }
            }
        }
        order.sort_by(|&(r1, c1), &(r2, c2)| {
            position
                .get(r2, c2)
                .abs()
                .total_cmp(&position.get(r1, c1).abs())
                .then((r1, c1).cmp(&(r2, c2)))
        });

        let mut soc: Vec<f64> = fleet.iter().map(|e| e.soc_pct).collect();
        let mut busy = vec![false; fleet.len() * slots];
        let mut budget: Vec<f64> = self.scenario.balance.values.iter().map(|v| v.abs()).collect();
        let mut out = ScheduleMatrix::new(stations.iter().map(|s| s.id.clone()).collect(), slots);

        for (row, col) in order {
            if budget[col] <= ENERGY_EPS {
                continue;
            }
            let want = position.get(row, col).clamp(-budget[col], budget[col]);
            let charging = want > 0.0;
            // Vehicles whose headroom or stock covers the whole request
            // outrank partial ones; within a tier the preference score
            // decides. This keeps the vehicle choice responsive to the
            // requested magnitude.
            let mut best_full: Option<(u8, f64, usize, f64)> = None; // rank, dist, ev, grant
            let mut best_partial: Option<(u8, f64, usize, f64)> = None;
            for ev_idx in 0..fleet.len() {
                if busy[ev_idx * slots + col] {
                    continue;
                }
                let dist = self.dist_km[ev_idx * stations.len() + row];
                if dist > self.max_dist_km[ev_idx] {
                    continue;
                }
                if !charging && self.cycles_left[ev_idx] < cfg.min_cycles {
                    continue;
                }
                let grant = self.grant(ev_idx, row, soc[ev_idx], want.abs(), charging);
                if grant <= ENERGY_EPS {
                    continue;
                }
                let slot = if grant >= want.abs() - ENERGY_EPS {
                    &mut best_full
                } else {
                    &mut best_partial
                };
                let rank = self.pref_rank[ev_idx][col];
                let better = match slot {
                    None => true,
                    Some((r, d, e, _)) => (rank, dist, &fleet[ev_idx].id) < (*r, *d, &fleet[*e].id),
                };
                if better {
                    *slot = Some((rank, dist, ev_idx, grant));
                }
            }
            if let Some((_, _, ev_idx, grant)) = best_full.or(best_partial) {
                let energy = if charging { grant } else { -grant };
                out.set_action(
                    row,
                    col,
                    CellAction {
                        ev: fleet[ev_idx].id.clone(),
                        energy_kwh: energy,
                    },
                );
                budget[col] -= grant;
                busy[ev_idx * slots + col] = true;
                let ev = &fleet[ev_idx];
                if charging {
                    soc[ev_idx] += grant / ev.capacity_kwh * 100.0;
                } else {
                    soc[ev_idx] -= grant
                        / (1.0 - self.scenario.operation.conversion_loss)
                        / ev.capacity_kwh
                        * 100.0;
                }
            }
        }

        repair_schedule(
            &out,
            fleet,
            stations,
            &self.scenario.balance,
            cfg,
            &self.scenario.operation,
        )
    }

    /// Decode plus fitness in one step.
    pub fn evaluate(&self, position: &Position) -> (ScheduleMatrix, Vec<f64>) {
        let schedule = self.decode(position);
        debug_assert!(
            validate_schedule(
                &schedule,
                &self.scenario.fleet,
                &self.scenario.stations,
                &self.scenario.balance,
                &self.scenario.constraints,
                &self.scenario.operation,
            )
            .map(|v| v.is_empty())
            .unwrap_or(false),
            "decoded schedule must be feasible"
        );
        let fitness = fitness_vector(&schedule, &self.scenario.balance, &self.scenario.window);
        (schedule, fitness)
    }

    /// Scalarized fitness used by the greedy dive acceptance.
    pub fn evaluate_sum(&self, position: &Position) -> f64 {
        self.evaluate(position).1.iter().sum()
    }
}
