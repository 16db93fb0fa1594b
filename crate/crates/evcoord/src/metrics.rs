//! Pareto-front quality indicators and domain KPIs: generational distance,
//! maximum front error, hypervolume, spacing, ratio of non-dominated
//! individuals, Pearson tracking, energy flexibility, CO2 savings, and the
//! preference-deviation tally.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fleet::{haversine_km, ChargingStation, ElectricVehicle};
use crate::hho::archive::dominates_unchecked;
use crate::schedule::{effective_max_distance_km, ConstraintConfig, ScheduleMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("empty front")]
    EmptyFront,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("at least two points required, got {0}")]
    TooFewPoints(usize),
    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("correlation of a constant series is undefined")]
    ConstantInput,
    #[error("peak energy must be positive")]
    ZeroPeak,
}

fn check_dims(points: &[Vec<f64>], dims: usize) -> Result<(), MetricsError> {
    for p in points {
        if p.len() != dims {
            return Err(MetricsError::DimensionMismatch {
                left: p.len(),
                right: dims,
            });
        }
    }
    Ok(())
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn nearest_reference_distances(
    front: &[Vec<f64>],
    reference: &[Vec<f64>],
) -> Result<Vec<f64>, MetricsError> {
    if front.is_empty() || reference.is_empty() {
        return Err(MetricsError::EmptyFront);
    }
    let dims = front[0].len();
    check_dims(front, dims)?;
    check_dims(reference, dims)?;
    Ok(front
        .iter()
        .map(|p| {
            reference
                .iter()
                .map(|r| euclid(p, r))
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

/// Mean distance from each front point to its nearest reference point.
pub fn generational_distance(
    front: &[Vec<f64>],
    reference: &[Vec<f64>],
) -> Result<f64, MetricsError> {
    let d = nearest_reference_distances(front, reference)?;
    Ok(d.iter().sum::<f64>() / d.len() as f64)
}

/// Worst-case distance from the front to the reference.
pub fn max_pareto_front_error(
    front: &[Vec<f64>],
    reference: &[Vec<f64>],
) -> Result<f64, MetricsError> {
    let d = nearest_reference_distances(front, reference)?;
    Ok(d.into_iter().fold(0.0, f64::max))
}

/// Exact hypervolume dominated by the front with respect to the nadir
/// point (minimization: the union of the boxes spanned between each point
/// and the nadir). Points that do not dominate the nadir contribute
/// nothing.
pub fn hypervolume(front: &[Vec<f64>], nadir: &[f64]) -> Result<f64, MetricsError> {
    check_dims(front, nadir.len())?;
    let contributing: Vec<Vec<f64>> = front
        .iter()
        .filter(|p| p.iter().zip(nadir).all(|(x, n)| x <= n))
        .filter(|p| p.iter().zip(nadir).any(|(x, n)| x < n))
        .cloned()
        .collect();
    Ok(union_box_volume(contributing, nadir))
}

/// Volume of the union of the boxes `[p, nadir]`, by the disjoint
/// sweep decomposition: each box contributes its volume minus the part
/// already covered by the boxes after it.
fn union_box_volume(mut points: Vec<Vec<f64>>, nadir: &[f64]) -> f64 {
    // Boxes fully inside another add nothing; dropping them keeps the
    // recursion shallow.
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    points.sort_by(|a, b| a[0].total_cmp(&b[0]));
    for p in points {
        let covered = kept
            .iter()
            .any(|q| q.iter().zip(&p).all(|(qi, pi)| qi <= pi));
        if !covered {
            kept.push(p);
        }
    }
    match kept.len() {
        0 => 0.0,
        1 => box_volume(&kept[0], nadir),
        _ => {
            let mut total = 0.0;
            for i in 0..kept.len() {
                let own = box_volume(&kept[i], nadir);
                let overlaps: Vec<Vec<f64>> = kept[i + 1..]
                    .iter()
                    .map(|q| {
                        q.iter()
                            .zip(&kept[i])
                            .map(|(a, b)| a.max(*b))
                            .collect::<Vec<f64>>()
                    })
                    .collect();
                total += own - union_box_volume(overlaps, nadir);
            }
            total
        }
    }
}

fn box_volume(point: &[f64], nadir: &[f64]) -> f64 {
    point
        .iter()
        .zip(nadir)
        .map(|(p, n)| (n - p).max(0.0))
        .product()
}

/// Componentwise worst corner of a point set, inflated by `margin`
/// (for example 0.1 for ten percent).
pub fn nadir_point<'a>(points: impl IntoIterator<Item = &'a [f64]>, margin: f64) -> Vec<f64> {
    let mut nadir: Vec<f64> = Vec::new();
    for p in points {
        if nadir.is_empty() {
            nadir = p.to_vec();
        } else {
            for (n, v) in nadir.iter_mut().zip(p) {
                *n = n.max(*v);
            }
        }
    }
    for n in nadir.iter_mut() {
        *n *= 1.0 + margin;
    }
    nadir
}

/// Spread statistic of a front: the population standard deviation of each
/// point's nearest-neighbor distance. Zero means perfectly even spacing.
pub fn spacing(front: &[Vec<f64>]) -> Result<f64, MetricsError> {
    if front.len() < 2 {
        return Err(MetricsError::TooFewPoints(front.len()));
    }
    check_dims(front, front[0].len())?;
    let nn: Vec<f64> = front
        .iter()
        .enumerate()
        .map(|(i, p)| {
            front
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| euclid(p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mean = nn.iter().sum::<f64>() / nn.len() as f64;
    let var = nn.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / nn.len() as f64;
    Ok(var.sqrt())
}

/// Percentage of vectors not dominated by any other vector of the set.
pub fn ratio_non_dominated(population: &[Vec<f64>]) -> Result<f64, MetricsError> {
    if population.is_empty() {
        return Err(MetricsError::EmptyFront);
    }
    check_dims(population, population[0].len())?;
    let non_dominated = population
        .iter()
        .filter(|p| {
            !population
                .iter()
                .any(|q| dominates_unchecked(q.as_slice(), p.as_slice()))
        })
        .count();
    Ok(100.0 * non_dominated as f64 / population.len() as f64)
}

/// Sample Pearson correlation of two equally long, non-constant series.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(MetricsError::TooFewPoints(a.len()));
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(MetricsError::ConstantInput);
    }
    Ok(cov / (var_a.sqrt() * var_b.sqrt()))
}

/// Share of the peak that the fleet's energy adds on top of the baseline,
/// percent.
pub fn energy_flexibility_pct(
    energy_ev_kwh: f64,
    baseline_kwh: f64,
    peak_kwh: f64,
) -> Result<f64, MetricsError> {
    if peak_kwh <= 0.0 {
        return Err(MetricsError::ZeroPeak);
    }
    Ok(100.0 * (energy_ev_kwh - baseline_kwh) / peak_kwh)
}

/// Avoided emissions of locally stored energy under the given grid mix,
/// kilograms of CO2.
pub fn co2_savings_kg(energy_kwh: f64, mix_g_per_kwh: f64) -> f64 {
    energy_kwh * mix_g_per_kwh / 1000.0
}

/// How well a schedule honors driver preferences, tallied per vehicle.
/// Both the time buckets and the distance buckets sum to the number of
/// scheduled vehicles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PreferenceBuckets {
    pub time_fully_met: usize,
    pub time_dev_1h: usize,
    pub time_dev_2h: usize,
    pub time_dev_over_2h: usize,
    pub dist_fully_met: usize,
    pub dist_relaxed: usize,
}

impl PreferenceBuckets {
    pub fn scheduled_evs(&self) -> usize {
        self.time_fully_met + self.time_dev_1h + self.time_dev_2h + self.time_dev_over_2h
    }
}

/// Buckets every scheduled vehicle by how far its assignment deviates from
/// its preferred slots (closest assignment to closest preference, in
/// hours) and whether the distance limit held. Vehicles without time
/// preferences count as fully met.
pub fn preference_deviation_report(
    schedule: &ScheduleMatrix,
    fleet: &[ElectricVehicle],
    stations: &[ChargingStation],
    cfg: &ConstraintConfig,
) -> PreferenceBuckets {
    let mut buckets = PreferenceBuckets::default();
    for ev in fleet {
        let assignments: Vec<(usize, usize)> = schedule
            .iter_actions()
            .filter(|(_, _, a)| a.ev == ev.id)
            .map(|(row, slot, _)| (row, slot))
            .collect();
        if assignments.is_empty() {
            continue;
        }
        let deviation = if ev.preferences.time_prefs.is_empty() {
            0
        } else {
            assignments
                .iter()
                .map(|&(_, slot)| {
                    ev.preferences
                        .time_prefs
                        .iter()
                        .map(|p| slot.abs_diff(p.slot))
                        .min()
                        .unwrap()
                })
                .min()
                .unwrap()
        };
        match deviation {
            0 => buckets.time_fully_met += 1,
            1 => buckets.time_dev_1h += 1,
            2 => buckets.time_dev_2h += 1,
            _ => buckets.time_dev_over_2h += 1,
        }
        let limit = effective_max_distance_km(ev, cfg);
        let within = assignments.iter().all(|&(row, _)| {
            stations
                .iter()
                .find(|s| s.id == schedule.station_ids()[row])
                .map(|s| haversine_km(ev.location, s.location) <= limit + 1e-9)
                .unwrap_or(false)
        });
        if within {
            buckets.dist_fully_met += 1;
        } else {
            buckets.dist_relaxed += 1;
        }
    }
    buckets
}

/// The consolidated report written next to the optimizer artifacts.
/// Indicators that need an external reference front, several points, or a
/// non-constant series stay unset when they do not apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub gd: Option<f64>,
    pub mpfe: Option<f64>,
    pub hypervolume_raw: f64,
    pub hypervolume_normalized: Option<f64>,
    pub spacing: Option<f64>,
    pub rni_pct: Option<f64>,
    pub pearson: Option<f64>,
    pub total_charged_kwh: f64,
    pub total_discharged_kwh: f64,
    pub flexibility_pct: Option<f64>,
    pub co2_saved_kg: f64,
    pub preference_buckets: PreferenceBuckets,
}

/// Grid carbon intensity used for the CO2 KPI, grams per kWh.
pub const DEFAULT_GRID_MIX_G_PER_KWH: f64 = 363.0;

/// Raw hypervolume plus the share of the ideal-to-nadir box it covers.
pub fn hypervolume_pair(
    front: &[Vec<f64>],
    nadir: &[f64],
) -> Result<(f64, Option<f64>), MetricsError> {
    let raw = hypervolume(front, nadir)?;
    if front.is_empty() {
        return Ok((raw, None));
    }
    let mut ideal = front[0].clone();
    for p in front {
        for (i, v) in ideal.iter_mut().zip(p) {
            *i = i.min(*v);
        }
    }
    let full = box_volume(&ideal, nadir);
    let normalized = if full > 0.0 { Some(raw / full) } else { None };
    Ok((raw, normalized))
}
