//! File formats: JSON fleet and station lists, CSV energy curves, CSV
//! schedules and convergence logs, JSON archives, violation reports, and
//! scenario bundles.
//!
//! Every writer lands atomically (temp file plus rename), so a failing run
//! never leaves a partial artifact behind.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fleet::{ChargingStation, ElectricVehicle, EvId, StationId};
use crate::hho::{Hawk, IterationRecord};
use crate::profile::EnergyProfile;
use crate::schedule::{CellAction, ScheduleMatrix, Violation};
use crate::scenario::Scenario;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}:{line}: {detail}")]
    Parse {
        path: String,
        line: usize,
        detail: String,
    },
    #[error("{path}: slot {expected} missing; curve slots must be contiguous from 0")]
    Gap { path: String, expected: usize },
    #[error("{path}: slot {slot} appears twice")]
    DuplicateSlot { path: String, slot: usize },
    #[error("{path}: unknown station {station}")]
    UnknownStation { path: String, station: StationId },
    #[error("{path}: slot {slot} outside the {slots}-slot scenario")]
    SlotOutOfRange {
        path: String,
        slot: usize,
        slots: usize,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn json_err(path: &Path, source: serde_json::Error) -> IoError {
    IoError::Json {
        path: path.display().to_string(),
        source,
    }
}

/// Writes bytes through a temp file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d),
        None => tempfile::NamedTempFile::new(),
    }
    .map_err(|e| io_err(path, e))?;
    std::io::Write::write_all(&mut tmp, bytes).map_err(|e| io_err(path, e))?;
    tmp.persist(path)
        .map_err(|e| io_err(path, e.error))?;
    Ok(())
}

pub fn load_fleet(path: &Path) -> Result<Vec<ElectricVehicle>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| json_err(path, e))
}

pub fn save_fleet(path: &Path, fleet: &[ElectricVehicle]) -> Result<(), IoError> {
    let bytes = serde_json::to_vec_pretty(fleet).map_err(|e| json_err(path, e))?;
    write_atomic(path, &bytes)
}

pub fn load_stations(path: &Path) -> Result<Vec<ChargingStation>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| json_err(path, e))
}

pub fn save_stations(path: &Path, stations: &[ChargingStation]) -> Result<(), IoError> {
    let bytes = serde_json::to_vec_pretty(stations).map_err(|e| json_err(path, e))?;
    write_atomic(path, &bytes)
}

/// Reads a curve CSV (`slot,kwh` header, slots contiguous from 0) into a
/// profile with the given slot duration.
pub fn load_curve(path: &Path, slot_duration_h: f64) -> Result<EnergyProfile, IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut values: Vec<Option<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 {
            if line != "slot,kwh" {
                return Err(IoError::Parse {
                    path: path.display().to_string(),
                    line: 1,
                    detail: format!("expected header 'slot,kwh', found '{line}'"),
                });
            }
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(IoError::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                detail: format!("expected 2 columns, found {}", parts.len()),
            });
        }
        let slot: usize = parts[0].parse().map_err(|e| IoError::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            detail: format!("bad slot: {e}"),
        })?;
        let kwh: f64 = parts[1].parse().map_err(|e| IoError::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            detail: format!("bad kwh: {e}"),
        })?;
        if slot >= values.len() {
            values.resize(slot + 1, None);
        }
        if values[slot].is_some() {
            return Err(IoError::DuplicateSlot {
                path: path.display().to_string(),
                slot,
            });
        }
        values[slot] = Some(kwh);
    }
    let mut out = Vec::with_capacity(values.len());
    for (slot, v) in values.into_iter().enumerate() {
        match v {
            Some(v) => out.push(v),
            None => {
                return Err(IoError::Gap {
                    path: path.display().to_string(),
                    expected: slot,
                })
            }
        }
    }
    Ok(EnergyProfile::new(out, slot_duration_h, 0.0))
}

pub fn save_curve(path: &Path, profile: &EnergyProfile) -> Result<(), IoError> {
    let mut text = String::from("slot,kwh\n");
    for (slot, v) in profile.values.iter().enumerate() {
        text.push_str(&format!("{slot},{v}\n"));
    }
    write_atomic(path, text.as_bytes())
}

/// One schedule action in its flat interchange form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRow {
    pub station_id: StationId,
    pub slot: usize,
    pub ev_id: EvId,
    pub energy_kwh: f64,
}

/// Flattens a matrix into rows ordered by station then slot.
pub fn schedule_rows(schedule: &ScheduleMatrix) -> Vec<ScheduleRow> {
    schedule
        .iter_actions()
        .map(|(row, slot, a)| ScheduleRow {
            station_id: schedule.station_ids()[row].clone(),
            slot,
            ev_id: a.ev.clone(),
            energy_kwh: a.energy_kwh,
        })
        .collect()
}

pub fn write_schedule_csv(path: &Path, schedule: &ScheduleMatrix) -> Result<(), IoError> {
    let mut text = String::from("station_id,slot,ev_id,energy_kwh\n");
    for r in schedule_rows(schedule) {
        text.push_str(&format!(
            "{},{},{},{}\n",
            r.station_id, r.slot, r.ev_id, r.energy_kwh
        ));
    }
    write_atomic(path, text.as_bytes())
}

/// Reads a schedule CSV back onto the station grid of a scenario. Rows
/// keep piling into their cells, so conflicting files survive the read and
/// fail validation instead.
pub fn read_schedule_csv(
    path: &Path,
    stations: &[ChargingStation],
    slot_count: usize,
) -> Result<ScheduleMatrix, IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut schedule =
        ScheduleMatrix::new(stations.iter().map(|s| s.id.clone()).collect(), slot_count);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || lineno == 0 {
            if lineno == 0 && line != "station_id,slot,ev_id,energy_kwh" {
                return Err(IoError::Parse {
                    path: path.display().to_string(),
                    line: 1,
                    detail: format!(
                        "expected header 'station_id,slot,ev_id,energy_kwh', found '{line}'"
                    ),
                });
            }
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(IoError::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                detail: format!("expected 4 columns, found {}", parts.len()),
            });
        }
        let station = StationId(parts[0].to_owned());
        let row = schedule
            .row_of(&station)
            .ok_or_else(|| IoError::UnknownStation {
                path: path.display().to_string(),
                station: station.clone(),
            })?;
        let slot: usize = parts[1].parse().map_err(|e| IoError::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            detail: format!("bad slot: {e}"),
        })?;
        if slot >= slot_count {
            return Err(IoError::SlotOutOfRange {
                path: path.display().to_string(),
                slot,
                slots: slot_count,
            });
        }
        let energy: f64 = parts[3].parse().map_err(|e| IoError::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            detail: format!("bad energy: {e}"),
        })?;
        schedule.push_action(
            row,
            slot,
            CellAction {
                ev: EvId(parts[2].to_owned()),
                energy_kwh: energy,
            },
        );
    }
    Ok(schedule)
}

pub fn write_convergence_csv(path: &Path, log: &[IterationRecord]) -> Result<(), IoError> {
    let mut text = String::from("iteration,best_fitness_sum,archive_size,mean_fitness_sum\n");
    for r in log {
        text.push_str(&format!(
            "{},{},{},{}\n",
            r.iteration, r.best_fitness_sum, r.archive_size, r.mean_fitness_sum
        ));
    }
    write_atomic(path, text.as_bytes())
}

/// One archived non-dominated solution in its interchange form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveSolution {
    pub fitness: Vec<f64>,
    pub schedule: Vec<ScheduleRow>,
}

pub fn archive_solutions(entries: &[Hawk]) -> Vec<ArchiveSolution> {
    entries
        .iter()
        .map(|h| ArchiveSolution {
            fitness: h.fitness.clone(),
            schedule: schedule_rows(&h.schedule),
        })
        .collect()
}

pub fn write_archive_json(path: &Path, solutions: &[ArchiveSolution]) -> Result<(), IoError> {
    let bytes = serde_json::to_vec_pretty(solutions).map_err(|e| json_err(path, e))?;
    write_atomic(path, &bytes)
}

/// Writes the archive front as a solutions x objectives matrix, one row
/// per solution and one column per service-window slot; the raw material
/// for parallel-coordinate or heatmap views of the front.
pub fn write_front_csv(
    path: &Path,
    solutions: &[ArchiveSolution],
    window: &std::ops::Range<usize>,
) -> Result<(), IoError> {
    let mut text = String::from("solution");
    for slot in window.clone() {
        text.push_str(&format!(",objective_slot_{slot}"));
    }
    text.push('\n');
    for (i, s) in solutions.iter().enumerate() {
        text.push_str(&i.to_string());
        for v in &s.fitness {
            text.push_str(&format!(",{v}"));
        }
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

pub fn read_archive_json(path: &Path) -> Result<Vec<ArchiveSolution>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| json_err(path, e))
}

/// Reads a reference front: a JSON list of fitness vectors.
pub fn read_front_json(path: &Path) -> Result<Vec<Vec<f64>>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| json_err(path, e))
}

pub fn write_violations_json(path: &Path, violations: &[Violation]) -> Result<(), IoError> {
    let bytes = serde_json::to_vec_pretty(violations).map_err(|e| json_err(path, e))?;
    write_atomic(path, &bytes)
}

pub fn write_metrics_json(
    path: &Path,
    report: &crate::metrics::MetricsReport,
) -> Result<(), IoError> {
    let bytes = serde_json::to_vec_pretty(report).map_err(|e| json_err(path, e))?;
    write_atomic(path, &bytes)
}

pub fn save_scenario_bundle(path: &Path, scenario: &Scenario) -> Result<(), IoError> {
    let bytes = serde_json::to_vec_pretty(scenario).map_err(|e| json_err(path, e))?;
    write_atomic(path, &bytes)
}

/// Loads a scenario bundle and checks its internal consistency: the three
/// profiles must agree in length and the service window must fit.
pub fn load_scenario_bundle(path: &Path) -> Result<Scenario, IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let scenario: Scenario = serde_json::from_str(&text).map_err(|e| json_err(path, e))?;
    let slots = scenario.balance.len();
    if scenario.generation.len() != slots || scenario.consumption.len() != slots {
        return Err(IoError::Parse {
            path: path.display().to_string(),
            line: 0,
            detail: format!(
                "profile lengths disagree: generation {}, consumption {}, balance {}",
                scenario.generation.len(),
                scenario.consumption.len(),
                slots
            ),
        });
    }
    if scenario.window.end > slots || scenario.window.start > scenario.window.end {
        return Err(IoError::Parse {
            path: path.display().to_string(),
            line: 0,
            detail: format!(
                "service window {:?} does not fit the {slots}-slot profiles",
                scenario.window
            ),
        });
    }
    Ok(scenario)
}
