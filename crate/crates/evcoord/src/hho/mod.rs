//! Multi-objective Harris Hawks optimization over schedule matrices.
//!
//! Candidate schedules live in a continuous space of stations x slots
//! energy grids (the hawk positions). Each position decodes to a feasible
//! schedule, whose per-slot tracking error against the balance profile is
//! the fitness vector: one minimization objective per service-window slot.
//! A bounded archive keeps the non-dominated schedules found so far and
//! supplies the prey through crowding-weighted roulette selection.

pub mod archive;
pub mod decode;
pub mod optimize;
pub mod position;
pub mod updates;

pub use archive::{crowding_distances, dominates, ArchiveError, ParetoArchive};
pub use decode::{fitness_vector, DecodeContext};
pub use optimize::{
    initialize_population, optimize, IterationRecord, OptimizeError, OptimizeOutcome,
};
pub use position::{mean_position, Position, PositionBounds, PositionError};
pub use updates::{
    escape_energy, exploration_step, exploration_update, hard_besiege, hard_besiege_dives,
    soft_besiege, soft_besiege_dives,
};

use crate::schedule::ScheduleMatrix;

/// One member of the population: a continuous position, its decoded
/// feasible schedule, and the fitness vector of that schedule.
#[derive(Debug, Clone)]
pub struct Hawk {
    pub position: Position,
    pub schedule: ScheduleMatrix,
    pub fitness: Vec<f64>,
}

impl Hawk {
    /// Scalarized fitness: the sum of all objective components.
    pub fn fitness_sum(&self) -> f64 {
        self.fitness.iter().sum()
    }
}

/// Tunables of one optimizer run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HhoParams {
    pub population_size: usize,
    pub max_iterations: usize,
    pub archive_capacity: usize,
    pub rng_seed: u64,
    /// Exponent of the Levy-flight dive perturbation.
    pub levy_beta: f64,
}

impl Default for HhoParams {
    fn default() -> Self {
        Self {
            population_size: 20,
            max_iterations: 100,
            archive_capacity: 5,
            rng_seed: 42,
            levy_beta: 1.5,
        }
    }
}
