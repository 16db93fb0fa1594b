//! Pareto dominance, the bounded non-dominance archive, crowding
//! distances, and roulette-wheel prey selection.

use rand::Rng;
use thiserror::Error;

use super::Hawk;

#[derive(Debug, Error, PartialEq)]
pub enum ArchiveError {
    #[error("fitness vectors have different lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty archive")]
    EmptyArchive,
}

/// Pareto dominance for minimization: `a` dominates `b` when it is no
/// worse in every objective and strictly better in at least one.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool, ArchiveError> {
    if a.len() != b.len() {
        return Err(ArchiveError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(dominates_unchecked(a, b))
}

pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strictly_better = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly_better = true;
        }
    }
    strictly_better
}

/// Crowding distance of every entry of a front.
///
/// Per objective the entries are sorted, the two boundary entries receive
/// an infinite distance, and each interior entry accumulates the span of
/// its neighbors normalized by the objective range. An objective whose
/// range is zero contributes nothing. Fronts of one or two entries are all
/// boundary.
pub fn crowding_distances(front: &[&[f64]]) -> Vec<f64> {
    let n = front.len();
    if n == 0 {
        return Vec::new();
    }
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let objectives = front[0].len();
    let mut distance = vec![0.0_f64; n];
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..objectives {
        order.sort_by(|&a, &b| front[a][k].total_cmp(&front[b][k]).then(a.cmp(&b)));
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        let span = front[order[n - 1]][k] - front[order[0]][k];
        if span <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let i = order[w];
            if distance[i].is_finite() {
                distance[i] += (front[order[w + 1]][k] - front[order[w - 1]][k]) / span;
            }
        }
    }
    distance
}

/// Bounded set of mutually non-dominated schedules.
#[derive(Debug, Clone)]
pub struct ParetoArchive {
    entries: Vec<Hawk>,
    capacity: usize,
}

impl ParetoArchive {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "archive capacity must be at least 1");
        Self {
            entries: Vec::new(),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Hawk] {
        &self.entries
    }

    pub fn fitness_vectors(&self) -> Vec<&[f64]> {
        self.entries.iter().map(|h| h.fitness.as_slice()).collect()
    }

    /// Crowding distances of the current entries.
    pub fn crowding_distances(&self) -> Vec<f64> {
        crowding_distances(&self.fitness_vectors())
    }

    /// Entry with the smallest total fitness, ties to the earliest entry.
    pub fn best_by_fitness_sum(&self) -> Option<&Hawk> {
        self.entries
            .iter()
            .min_by(|a, b| a.fitness_sum().total_cmp(&b.fitness_sum()))
    }

    /// Offers a candidate to the archive.
    ///
    /// A candidate dominated by any entry, or carrying a fitness vector
    /// already present, is rejected; otherwise it replaces everything it
    /// dominates. On overflow the entry with the
    /// lowest crowding distance is evicted, chosen uniformly among ties,
    /// except that the current best-by-sum entry is never evicted, which
    /// keeps the best total fitness monotone over a run.
    pub fn insert(&mut self, candidate: Hawk, rng: &mut impl Rng) -> bool {
        if self
            .entries
            .iter()
            .any(|e| e.fitness == candidate.fitness || dominates_unchecked(&e.fitness, &candidate.fitness))
        {
            return false;
        }
        self.entries
            .retain(|e| !dominates_unchecked(&candidate.fitness, &e.fitness));
        self.entries.push(candidate);
        if self.entries.len() > self.capacity {
            self.evict_one(rng);
        }
        true
    }

    fn evict_one(&mut self, rng: &mut impl Rng) {
        let distances = self.crowding_distances();
        let protected = self
            .entries
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.fitness_sum().total_cmp(&b.fitness_sum()))
            .map(|(i, _)| i);
        let mut lowest = f64::INFINITY;
        for (i, &d) in distances.iter().enumerate() {
            if Some(i) != protected && d < lowest {
                lowest = d;
            }
        }
        let ties: Vec<usize> = distances
            .iter()
            .enumerate()
            .filter(|&(i, &d)| Some(i) != protected && (d == lowest || lowest.is_infinite()))
            .map(|(i, _)| i)
            .collect();
        debug_assert!(!ties.is_empty());
        let victim = ties[rng.random_range(0..ties.len())];
        self.entries.remove(victim);
    }

    /// Roulette-wheel prey selection weighted by crowding distance, so
    /// entries in sparse regions of the front are picked more often.
    /// Infinite distances weigh twice the largest finite one; when no
    /// finite distance exists the draw is uniform.
    pub fn select_prey<'a>(&'a self, rng: &mut impl Rng) -> Result<&'a Hawk, ArchiveError> {
        if self.entries.is_empty() {
            return Err(ArchiveError::EmptyArchive);
        }
        let distances = self.crowding_distances();
        let max_finite = distances
            .iter()
            .copied()
            .filter(|d| d.is_finite())
            .fold(0.0_f64, f64::max);
        let weights: Vec<f64> = distances
            .iter()
            .map(|&d| if d.is_finite() { d } else { 2.0 * max_finite })
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Ok(&self.entries[rng.random_range(0..self.entries.len())]);
        }
        let mut spin = rng.random::<f64>() * total;
        for (entry, w) in self.entries.iter().zip(&weights) {
            spin -= w;
            if spin <= 0.0 {
                return Ok(entry);
            }
        }
        Ok(self.entries.last().expect("archive checked non-empty"))
    }
}
