//! The optimizer main loop: seeded population, per-iteration prey
//! selection, exploration/exploitation branching, and archive maintenance.

use rand::Rng;
use thiserror::Error;

use crate::scenario::Scenario;
use crate::schedule::ScheduleMatrix;
use crate::{seeded_rng, streams};

use super::archive::{ArchiveError, ParetoArchive};
use super::decode::DecodeContext;
use super::position::{mean_position, Position, PositionError};
use super::updates::{
    escape_energy, exploration_update, hard_besiege, hard_besiege_dives, soft_besiege,
    soft_besiege_dives,
};
use super::{Hawk, HhoParams};

#[derive(Debug, Error, PartialEq)]
pub enum OptimizeError {
    #[error("scenario has no vehicles")]
    EmptyFleet,
    #[error("scenario has no stations")]
    EmptyStations,
    #[error(transparent)]
    Archive(#[from] ArchiveError),
    #[error(transparent)]
    Position(#[from] PositionError),
}

/// One line of the convergence log.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Smallest fitness-component sum in the archive.
    pub best_fitness_sum: f64,
    pub archive_size: usize,
    /// Mean fitness-component sum over the population.
    pub mean_fitness_sum: f64,
}

/// Everything a finished run produces.
pub struct OptimizeOutcome {
    /// Archive entry with the smallest fitness-component sum.
    pub best: Hawk,
    pub archive: ParetoArchive,
    pub log: Vec<IterationRecord>,
    /// Final population, used for population-level indicators.
    pub population: Vec<Hawk>,
    /// Componentwise maximum over every fitness vector evaluated during
    /// the run; the nadir for hypervolume reporting derives from it.
    pub fitness_ceiling: Vec<f64>,
}

impl OptimizeOutcome {
    pub fn best_schedule(&self) -> &ScheduleMatrix {
        &self.best.schedule
    }
}

/// Draws the initial population: every cell uniform in its row band, the
/// sign filtered to match the slot class (surplus keeps charges, deficit
/// keeps discharges, balanced and out-of-window slots stay empty).
pub fn initialize_population(
    ctx: &DecodeContext<'_>,
    params: &HhoParams,
    rng: &mut impl Rng,
) -> Result<Vec<Hawk>, OptimizeError> {
    if ctx.scenario.fleet.is_empty() {
        return Err(OptimizeError::EmptyFleet);
    }
    if ctx.scenario.stations.is_empty() {
        return Err(OptimizeError::EmptyStations);
    }
    let bounds = ctx.bounds();
    let mut population = Vec::with_capacity(params.population_size);
    for _ in 0..params.population_size {
        let mut position = Position::from_fn(ctx.rows(), ctx.slots(), |row, _| {
            let ub = bounds.upper(row);
            rng.random_range(-ub..=ub)
        });
        for row in 0..ctx.rows() {
            for col in 0..ctx.slots() {
                let v = position.get(row, col);
                let filtered = match ctx.slot_class(col) {
                    crate::profile::SlotClass::Surplus => v.abs(),
                    crate::profile::SlotClass::Deficit => -v.abs(),
                    crate::profile::SlotClass::Balanced => 0.0,
                };
                position.set(row, col, filtered);
            }
        }
        bounds.clamp(&mut position);
        let (schedule, fitness) = ctx.evaluate(&position);
        population.push(Hawk {
            position,
            schedule,
            fitness,
        });
    }
    Ok(population)
}

/// Runs the full multi-objective Harris Hawks search over a scenario.
///
/// The loop follows the classic structure: per iteration one prey is drawn
/// from the archive by crowding-weighted roulette, then every hawk draws a
/// fresh initial energy and escape chance and moves by exploration when
/// `|E| >= 1`, otherwise by one of the four besiege strategies selected on
/// the `(r, |E|)` half-planes at 0.5. Every move is decoded, repaired,
/// evaluated, and offered to the archive. Sequential and fully
/// reproducible from the seed.
pub fn optimize(scenario: &Scenario, params: &HhoParams) -> Result<OptimizeOutcome, OptimizeError> {
    let ctx = DecodeContext::new(scenario);
    let bounds = ctx.bounds();
    let mut rng = seeded_rng(params.rng_seed, streams::OPTIMIZER);

    let mut population = initialize_population(&ctx, params, &mut rng)?;
    let objectives = scenario.window.len();
    let mut fitness_ceiling = vec![0.0_f64; objectives];
    let raise_ceiling = |ceiling: &mut Vec<f64>, fitness: &[f64]| {
        for (c, f) in ceiling.iter_mut().zip(fitness) {
            *c = c.max(*f);
        }
    };

    let mut archive = ParetoArchive::new(params.archive_capacity);
    for hawk in &population {
        raise_ceiling(&mut fitness_ceiling, &hawk.fitness);
        archive.insert(hawk.clone(), &mut rng);
    }

    let record = |iteration: usize, archive: &ParetoArchive, population: &[Hawk]| {
        let best = archive
            .best_by_fitness_sum()
            .map(|h| h.fitness_sum())
            .unwrap_or(f64::NAN);
        let mean = population.iter().map(Hawk::fitness_sum).sum::<f64>()
            / population.len().max(1) as f64;
        IterationRecord {
            iteration,
            best_fitness_sum: best,
            archive_size: archive.len(),
            mean_fitness_sum: mean,
        }
    };

    let mut log = Vec::with_capacity(params.max_iterations + 1);
    log.push(record(0, &archive, &population));

    for iteration in 0..params.max_iterations {
        let prey = archive.select_prey(&mut rng)?.clone();
        let snapshot: Vec<Position> = population.iter().map(|h| h.position.clone()).collect();
        let refs: Vec<&Position> = snapshot.iter().collect();
        let mean = mean_position(&refs)?;

        for idx in 0..population.len() {
            let e0 = rng.random_range(-1.0..1.0);
            let energy = escape_energy(e0, iteration, params.max_iterations);
            let r: f64 = rng.random();
            let current = &snapshot[idx];
            let current_score = population[idx].fitness_sum();

            // Exploration moves are taken as drawn; the exploitation
            // branches keep the current position unless the move improves
            // the scalarized fitness, with the archive handling the
            // multi-objective side.
            let (next, greedy) = if energy.abs() >= 1.0 {
                let partner = &snapshot[rng.random_range(0..snapshot.len())];
                (
                    exploration_update(current, partner, &prey.position, &mean, &bounds, &mut rng)?,
                    false,
                )
            } else if r >= 0.5 && energy.abs() >= 0.5 {
                (
                    soft_besiege(current, &prey.position, energy, &bounds, &mut rng),
                    true,
                )
            } else if r >= 0.5 {
                (hard_besiege(current, &prey.position, energy, &bounds), true)
            } else {
                // Dive candidates are full evaluations; even the rejected
                // ones are solutions found and go to the archive below.
                let mut probed: Vec<Hawk> = Vec::with_capacity(2);
                let mut eval = |p: &Position| {
                    let (schedule, fitness) = ctx.evaluate(p);
                    let sum = fitness.iter().sum();
                    probed.push(Hawk {
                        position: p.clone(),
                        schedule,
                        fitness,
                    });
                    sum
                };
                let next = if energy.abs() >= 0.5 {
                    soft_besiege_dives(
                        current,
                        &prey.position,
                        energy,
                        &bounds,
                        params.levy_beta,
                        &mut rng,
                        &mut eval,
                        current_score,
                    )
                } else {
                    hard_besiege_dives(
                        current,
                        &prey.position,
                        &mean,
                        energy,
                        &bounds,
                        params.levy_beta,
                        &mut rng,
                        &mut eval,
                        current_score,
                    )
                };
                for hawk in probed {
                    raise_ceiling(&mut fitness_ceiling, &hawk.fitness);
                    archive.insert(hawk, &mut rng);
                }
                (next, false) // the dive already applied its acceptance rule
            };

            let mut next = next;
            bounds.clamp(&mut next);
            if next != population[idx].position {
                let (schedule, fitness) = ctx.evaluate(&next);
                raise_ceiling(&mut fitness_ceiling, &fitness);
                let sum: f64 = fitness.iter().sum();
                let candidate = Hawk {
                    position: next,
                    schedule,
                    fitness,
                };
                archive.insert(candidate.clone(), &mut rng);
                if !greedy || sum <= current_score {
                    population[idx] = candidate;
                }
            }
        }

        log.push(record(iteration + 1, &archive, &population));
    }

    let best = archive
        .best_by_fitness_sum()
        .cloned()
        .expect("archive holds at least the initial population front");
    Ok(OptimizeOutcome {
        best,
        archive,
        log,
        population,
        fitness_ceiling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fleet::{
        ChargingStation, ElectricVehicle, EvId, GeoPoint, OperationTimeConfig, PreferenceSet,
        StationId, StationType,
    };
    use crate::profile::EnergyProfile;
    use crate::schedule::{validate_schedule, ConstraintConfig};

    fn scenario(balance: Vec<f64>, window: std::ops::Range<usize>) -> Scenario {
        let here = GeoPoint {
            lat_deg: 42.56,
            lon_deg: 12.64,
        };
        let station = |id: &str| ChargingStation {
            id: StationId::from(id),
            voltage_v: 400.0,
            current_a: 32.0,
            phases: 3,
            rated_power_kw: 22.0,
            station_type: StationType::Level3Dc,
            location: here,
        };
        let ev = |id: &str, cap: f64, soc: f64| ElectricVehicle {
            id: EvId::from(id),
            model: "toy".into(),
            capacity_kwh: cap,
            soc_pct: soc,
            cycles_max: 2000,
            cycles_used: 0,
            cycle_margin: 0,
            location: here,
            preferences: PreferenceSet::default(),
        };
        let n = balance.len();
        Scenario {
            fleet: vec![
                ev("ev-0", 41.0, 50.0),
                ev("ev-1", 22.0, 40.0),
                ev("ev-2", 24.0, 60.0),
                ev("ev-3", 41.0, 35.0),
            ],
            stations: vec![station("cs-0"), station("cs-1")],
            generation: EnergyProfile::hourly(balance.clone()),
            consumption: EnergyProfile::hourly(vec![0.0; n]),
            balance: EnergyProfile::hourly(balance),
            window,
            constraints: ConstraintConfig::default(),
            operation: OperationTimeConfig::default(),
        }
    }

    fn params(seed: u64) -> HhoParams {
        HhoParams {
            population_size: 8,
            max_iterations: 12,
            archive_capacity: 5,
            rng_seed: seed,
            levy_beta: 1.5,
        }
    }

    #[test]
    fn balanced_profile_yields_empty_best_schedule() {
        let sc = scenario(vec![0.0, 0.0, 0.0, 0.0], 0..4);
        let out = optimize(&sc, &params(1)).unwrap();
        assert_eq!(out.best.fitness_sum(), 0.0);
        assert_eq!(out.best_schedule().action_count(), 0);
    }

    #[test]
    fn population_size_is_respected_and_seed_reproduces() {
        let sc = scenario(vec![25.0, -18.0, 12.0, 0.0], 0..4);
        let ctx = DecodeContext::new(&sc);
        let mut rng = seeded_rng(9, streams::OPTIMIZER);
        let p = HhoParams {
            population_size: 20,
            ..params(9)
        };
        let pop = initialize_population(&ctx, &p, &mut rng).unwrap();
        assert_eq!(pop.len(), 20);

        let mut rng2 = seeded_rng(9, streams::OPTIMIZER);
        let pop2 = initialize_population(&ctx, &p, &mut rng2).unwrap();
        for (a, b) in pop.iter().zip(&pop2) {
            assert_eq!(a.position, b.position);
            assert_eq!(a.fitness, b.fitness);
        }
    }

    #[test]
    fn initial_positions_follow_slot_signs() {
        let sc = scenario(vec![25.0, -18.0, 0.0, 12.0], 0..4);
        let ctx = DecodeContext::new(&sc);
        let mut rng = seeded_rng(5, streams::OPTIMIZER);
        let pop = initialize_population(&ctx, &params(5), &mut rng).unwrap();
        for hawk in &pop {
            for row in 0..2 {
                assert!(hawk.position.get(row, 0) >= 0.0);
                assert!(hawk.position.get(row, 1) <= 0.0);
                assert_eq!(hawk.position.get(row, 2), 0.0);
            }
        }
    }

    #[test]
    fn best_sum_log_is_monotone_non_increasing() {
        let sc = scenario(vec![30.0, -25.0, 15.0, -10.0], 0..4);
        let out = optimize(&sc, &params(21)).unwrap();
        let mut last = f64::INFINITY;
        for rec in &out.log {
            assert!(
                rec.best_fitness_sum <= last + 1e-9,
                "iteration {}: {} after {}",
                rec.iteration,
                rec.best_fitness_sum,
                last
            );
            last = rec.best_fitness_sum;
        }
        assert_eq!(out.log.len(), 13);
    }

    #[test]
    fn emitted_schedules_are_feasible() {
        let sc = scenario(vec![30.0, -25.0, 15.0, -10.0], 0..4);
        let out = optimize(&sc, &params(33)).unwrap();
        let mut all: Vec<&Hawk> = out.archive.entries().iter().collect();
        all.push(&out.best);
        for hawk in all {
            let violations = validate_schedule(
                &hawk.schedule,
                &sc.fleet,
                &sc.stations,
                &sc.balance,
                &sc.constraints,
                &sc.operation,
            )
            .unwrap();
            assert!(violations.is_empty(), "{violations:?}");
        }
    }

    #[test]
    fn identical_seeds_give_identical_runs() {
        let sc = scenario(vec![30.0, -25.0, 15.0, -10.0], 0..4);
        let a = optimize(&sc, &params(77)).unwrap();
        let b = optimize(&sc, &params(77)).unwrap();
        assert_eq!(a.best.schedule, b.best.schedule);
        assert_eq!(a.best.fitness, b.best.fitness);
        assert_eq!(a.log, b.log);
        assert_eq!(a.archive.len(), b.archive.len());
        for (x, y) in a.archive.entries().iter().zip(b.archive.entries()) {
            assert_eq!(x.fitness, y.fitness);
            assert_eq!(x.schedule, y.schedule);
        }
    }

    #[test]
    fn empty_fleet_is_rejected() {
        let mut sc = scenario(vec![10.0], 0..1);
        sc.fleet.clear();
        assert_eq!(
            optimize(&sc, &params(1)).err(),
            Some(OptimizeError::EmptyFleet)
        );
    }
}
