//! Standard initial data used by tests, scenarios and the acceptance suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pwc::PiecewiseConstant;

/// Burgers shock 1 → 0 at x = 0.
pub fn shock() -> PiecewiseConstant {
    PiecewiseConstant::step(0.0, 1.0, 0.0)
}

/// Rarefaction 0 → 1 at x = 0.
pub fn rarefaction() -> PiecewiseConstant {
    PiecewiseConstant::step(0.0, 0.0, 1.0)
}

/// `n` pieces on [0, 1] with values drawn uniformly from [0, 1], zero outside.
pub fn random_pieces(seed: u64, n: usize) -> PiecewiseConstant {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut breaks: Vec<f64> = (0..n - 1).map(|_| rng.gen::<f64>()).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.insert(0, 0.0);
    breaks.push(1.0);
    let mut values = vec![0.0];
    values.extend((0..n).map(|_| rng.gen::<f64>()));
    values.push(0.0);
    PiecewiseConstant::new(breaks, values).expect("sorted random breakpoints")
}

/// `teeth` periods on [0, 1], each 1 on its first half and 0 on the second.
pub fn sawtooth(teeth: usize) -> PiecewiseConstant {
    let p = 1.0 / teeth as f64;
    let mut breaks = Vec::with_capacity(2 * teeth);
    let mut values = vec![0.0];
    for k in 0..teeth {
        breaks.push(k as f64 * p);
        values.push(1.0);
        breaks.push((k as f64 + 0.5) * p);
        values.push(0.0);
    }
    PiecewiseConstant::new(breaks, values).expect("increasing teeth")
}
