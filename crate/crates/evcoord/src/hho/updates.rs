//! Position update operators of the Harris Hawks search: exploration,
//! the escape-energy transition, and the four besiege strategies.

use rand::Rng;

use super::position::{Position, PositionBounds, PositionError};

/// Escape energy of the prey at iteration `i` of `theta`.
///
/// Decays linearly from `2 * e0` to exactly zero at the final iteration.
/// `|E| >= 1` keeps the search in exploration, anything smaller switches
/// to exploitation.
pub fn escape_energy(e0: f64, iteration: usize, max_iterations: usize) -> f64 {
    2.0 * e0 * (1.0 - iteration as f64 / max_iterations as f64)
}

/// Jump strength drawn fresh for one besiege move.
pub fn jump_strength(rng: &mut impl Rng) -> f64 {
    2.0 * (1.0 - rng.random::<f64>())
}

/// Exploration step at pinned random draws; see [`exploration_update`].
#[allow(clippy::too_many_arguments)]
pub fn exploration_step(
    current: &Position,
    random_hawk: &Position,
    prey: &Position,
    mean: &Position,
    bounds: &PositionBounds,
    q: f64,
    r: [f64; 4],
) -> Position {
    if q >= 0.5 {
        Position::from_fn(current.rows(), current.cols(), |row, col| {
            let xr = random_hawk.get(row, col);
            xr - r[0] * (xr - 2.0 * r[1] * current.get(row, col)).abs()
        })
    } else {
        Position::from_fn(current.rows(), current.cols(), |row, col| {
            let band = bounds.lower(row) + r[3] * (bounds.upper(row) - bounds.lower(row));
            (prey.get(row, col) - mean.get(row, col)) - r[2] * band
        })
    }
}

/// Exploration move: either perturb a randomly chosen flock member or
/// step off the prey-to-mean gap toward a random point of the band. The
/// five uniform draws are shared across cells.
pub fn exploration_update(
    current: &Position,
    random_hawk: &Position,
    prey: &Position,
    mean: &Position,
    bounds: &PositionBounds,
    rng: &mut impl Rng,
) -> Result<Position, PositionError> {
    current.shape_check(random_hawk)?;
    current.shape_check(prey)?;
    current.shape_check(mean)?;
    let q: f64 = rng.random();
    let draws = [rng.random(), rng.random(), rng.random(), rng.random()];
    let mut next = exploration_step(current, random_hawk, prey, mean, bounds, q, draws);
    bounds.clamp(&mut next);
    Ok(next)
}

/// Soft besiege step at jump strength `j`:
/// `(prey - x) - e * |j * prey - x|` per cell.
pub fn soft_besiege_step(current: &Position, prey: &Position, e: f64, j: f64) -> Position {
    Position::from_fn(current.rows(), current.cols(), |row, col| {
        let xp = prey.get(row, col);
        let x = current.get(row, col);
        (xp - x) - e * (j * xp - x).abs()
    })
}

/// Soft besiege: the prey still has energy, the hawks circle and strike.
pub fn soft_besiege(
    current: &Position,
    prey: &Position,
    e: f64,
    bounds: &PositionBounds,
    rng: &mut impl Rng,
) -> Position {
    let mut next = soft_besiege_step(current, prey, e, jump_strength(rng));
    bounds.clamp(&mut next);
    next
}

/// Hard besiege step: `prey - e * |prey - x|` per cell.
pub fn hard_besiege_step(current: &Position, prey: &Position, e: f64) -> Position {
    Position::from_fn(current.rows(), current.cols(), |row, col| {
        let xp = prey.get(row, col);
        xp - e * (xp - current.get(row, col)).abs()
    })
}

/// Hard besiege: the prey is exhausted, the hawks close straight in.
pub fn hard_besiege(
    current: &Position,
    prey: &Position,
    e: f64,
    bounds: &PositionBounds,
) -> Position {
    let mut next = hard_besiege_step(current, prey, e);
    bounds.clamp(&mut next);
    next
}

/// Mantegna scale factor of the Levy-flight step for exponent `beta`.
fn levy_sigma(beta: f64) -> f64 {
    let num = libm::tgamma(1.0 + beta) * (std::f64::consts::PI * beta / 2.0).sin();
    let den = libm::tgamma((1.0 + beta) / 2.0) * beta * 2.0_f64.powf((beta - 1.0) / 2.0);
    (num / den).powf(1.0 / beta)
}

/// One heavy-tailed Levy step, unit scale.
pub fn levy_sample(rng: &mut impl Rng, beta: f64) -> f64 {
    use rand_distr::{Distribution, StandardNormal};
    let u: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
    let v: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
    u * levy_sigma(beta) / v.abs().powf(1.0 / beta)
}

fn dive<F>(
    first_stage: Position,
    current: &Position,
    bounds: &PositionBounds,
    levy_beta: f64,
    rng: &mut impl Rng,
    evaluate: &mut F,
    current_score: f64,
) -> Position
where
    F: FnMut(&Position) -> f64,
{
    let mut y = first_stage;
    bounds.clamp(&mut y);
    // Matching the current score is enough to take the first dive; the
    // sideways drift keeps hawks moving across the plateaus the decoder
    // creates.
    if evaluate(&y) <= current_score {
        return y;
    }
    // The first dive did not pay off: add a Levy-flight random walk scaled
    // to a hundredth of the row band.
    let mut z = Position::from_fn(y.rows(), y.cols(), |row, col| {
        y.get(row, col) + 0.01 * bounds.upper(row) * levy_sample(rng, levy_beta)
    });
    bounds.clamp(&mut z);
    if evaluate(&z) < current_score {
        return z;
    }
    current.clone()
}

/// Soft besiege with progressive rapid dives. The candidate replaces the
/// current position only when it improves the scalarized fitness; a Levy
/// random walk is tried before giving up.
#[allow(clippy::too_many_arguments)]
pub fn soft_besiege_dives<F>(
    current: &Position,
    prey: &Position,
    e: f64,
    bounds: &PositionBounds,
    levy_beta: f64,
    rng: &mut impl Rng,
    evaluate: &mut F,
    current_score: f64,
) -> Position
where
    F: FnMut(&Position) -> f64,
{
    let j = jump_strength(rng);
    let y = Position::from_fn(current.rows(), current.cols(), |row, col| {
        let xp = prey.get(row, col);
        xp - e * (j * xp - current.get(row, col)).abs()
    });
    dive(y, current, bounds, levy_beta, rng, evaluate, current_score)
}

/// Hard besiege with progressive rapid dives: the first stage measures the
/// gap to the flock mean instead of to the hawk itself.
#[allow(clippy::too_many_arguments)]
pub fn hard_besiege_dives<F>(
    current: &Position,
    prey: &Position,
    mean: &Position,
    e: f64,
    bounds: &PositionBounds,
    levy_beta: f64,
    rng: &mut impl Rng,
    evaluate: &mut F,
    current_score: f64,
) -> Position
where
    F: FnMut(&Position) -> f64,
{
    let j = jump_strength(rng);
    let y = Position::from_fn(current.rows(), current.cols(), |row, col| {
        let xp = prey.get(row, col);
        xp - e * (j * xp - mean.get(row, col)).abs()
    });
    dive(y, current, bounds, levy_beta, rng, evaluate, current_score)
}
