//! One-sided Lipschitz diagnostics on front-tracked solutions.

use crate::error::{Error, Result};
use crate::flux::Flux;
use crate::front::{FrontKind, FrontTrackingSolution};

/// A fan centred at (0, x0) whose surviving step fronts are replaced by the exact
/// self-similar profile (f′)⁻¹((x − x0)/t) on [xa, xb].
#[derive(Clone, Copy, Debug)]
struct Fan {
    x0: f64,
    xa: f64,
    xb: f64,
    a: f64,
    b: f64,
}

/// u(t, ·) with the centred fans born at t = 0 rebuilt from the ray formula.
pub struct Reconstruction<'a> {
    sol: &'a FrontTrackingSolution,
    t: f64,
    fans: Vec<Fan>,
}

fn inverse_speed(flux: &Flux, s: f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let inc = flux.df(hi) >= flux.df(lo);
    if (flux.df(lo) - s) * (flux.df(hi) - s) > 0.0 {
        return if (flux.df(lo) > s) == inc { lo } else { hi };
    }
    for _ in 0..100 {
        let m = 0.5 * (lo + hi);
        if (flux.df(m) < s) == inc {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

impl<'a> Reconstruction<'a> {
    pub fn new(sol: &'a FrontTrackingSolution, t: f64) -> Reconstruction<'a> {
        let ids = sol.alive_sorted(t);
        let centred = |i: usize| {
            let f = &sol.fronts[i];
            f.kind == FrontKind::RarefactionFront && f.tb == 0.0
        };
        let mut fans = Vec::new();
        let mut k = 0;
        while k < ids.len() {
            if !centred(ids[k]) {
                k += 1;
                continue;
            }
            let birth = sol.fronts[ids[k]].birth;
            let mut e = k;
            while e + 1 < ids.len() && centred(ids[e + 1]) && sol.fronts[ids[e + 1]].birth == birth {
                e += 1;
            }
            let (first, last) = (&sol.fronts[ids[k]], &sol.fronts[ids[e]]);
            let (a, b) = (first.ul, last.ur);
            let x0 = first.xb;
            let mut xa = x0 + sol.flux.df(a) * t;
            let mut xb = x0 + sol.flux.df(b) * t;
            if k > 0 {
                xa = xa.max(sol.fronts[ids[k - 1]].x_at(t));
            }
            if e + 1 < ids.len() {
                xb = xb.min(sol.fronts[ids[e + 1]].x_at(t));
            }
            fans.push(Fan { x0, xa, xb, a, b });
            k = e + 1;
        }
        Reconstruction { sol, t, fans }
    }

    pub fn value(&self, x: f64) -> f64 {
        for f in &self.fans {
            if x >= f.xa && x < f.xb {
                let s = (x - f.x0) / self.t;
                return inverse_speed(&self.sol.flux, s, f.a, f.b);
            }
        }
        self.sol.value_at(self.t, x)
    }
}

/// max over consecutive probe pairs of (u(t, y) − u(t, x))/(y − x).
pub fn oleinik_check(sol: &FrontTrackingSolution, t: f64, probes: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Time(format!("probe time must be positive, got {t}")));
    }
    let rec = Reconstruction::new(sol, t);
    let snap = sol.snapshot(t);
    let vals: Vec<f64> = probes
        .iter()
        .map(|&x| if rec.fans.is_empty() { snap.eval(x) } else { rec.value(x) })
        .collect();
    let mut worst = f64::NEG_INFINITY;
    for k in 1..probes.len() {
        let h = probes[k] - probes[k - 1];
        if h > 0.0 {
            worst = worst.max((vals[k] - vals[k - 1]) / h);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::front::{front_track, FrontTrackParams};
    use crate::pwc::PiecewiseConstant;

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
    }

    #[test]
    fn fan_slope_is_one_over_t() {
        let sol = front_track(&PiecewiseConstant::step(0.0, 0.0, 1.0), &Flux::burgers(), 1.0, FrontTrackParams::default()).unwrap();
        let q = oleinik_check(&sol, 0.5, &grid(-0.5, 1.0, 3000)).unwrap();
        assert!((q - 2.0).abs() < 1e-9, "{q}");
    }

    #[test]
    fn shock_has_no_positive_quotient() {
        let sol = front_track(&PiecewiseConstant::step(0.0, 1.0, 0.0), &Flux::burgers(), 1.0, FrontTrackParams::default()).unwrap();
        let q = oleinik_check(&sol, 0.5, &grid(-1.0, 1.0, 1000)).unwrap();
        assert!(q <= 0.0);
        assert!(matches!(oleinik_check(&sol, 0.0, &[0.0, 1.0]), Err(Error::Time(_))));
    }
}
