//! Self-similar entropy solution of the scalar Riemann problem for a smooth flux.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::{Flux, FluxKind};
use crate::pl::{PlFlux, PlWaveKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ScalarWave {
    Shock { ul: f64, ur: f64, speed: f64 },
    /// centred fan; the state at x/t = s solves f′(u) = s
    Rarefaction { ul: f64, ur: f64, speed_lo: f64, speed_hi: f64 },
}

impl ScalarWave {
    pub fn speeds(&self) -> (f64, f64) {
        match *self {
            ScalarWave::Shock { speed, .. } => (speed, speed),
            ScalarWave::Rarefaction { speed_lo, speed_hi, .. } => (speed_lo, speed_hi),
        }
    }

    pub fn states(&self) -> (f64, f64) {
        match *self {
            ScalarWave::Shock { ul, ur, .. } | ScalarWave::Rarefaction { ul, ur, .. } => (ul, ur),
        }
    }
}

const SAMPLES: usize = 4096;

/// Waves ordered left to right with nondecreasing speeds. Built from the convex (uL < uR)
/// or concave (uL > uR) envelope of f between the two states.
pub fn solve_riemann_scalar(flux: &Flux, ul: f64, ur: f64) -> Result<Vec<ScalarWave>> {
    for u in [ul, ur] {
        if !flux.contains(u) {
            return Err(Error::Domain(format!("state {u} outside flux domain [{}, {}]", flux.lo, flux.hi)));
        }
    }
    if ul == ur {
        return Ok(Vec::new());
    }
    if let FluxKind::Burgers = flux.kind {
        return Ok(vec![if ul > ur {
            ScalarWave::Shock { ul, ur, speed: 0.5 * (ul + ur) }
        } else {
            ScalarWave::Rarefaction { ul, ur, speed_lo: ul, speed_hi: ur }
        }]);
    }
    let (a, b) = (ul.min(ur), ul.max(ur));
    let n = if flux.is_piecewise_linear() { 0 } else { SAMPLES };
    let mut pts: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n.max(1) as f64).collect();
    pts.extend(flux.kinks().into_iter().filter(|&k| k > a && k < b));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let fs = pts.iter().map(|&v| flux.f(v)).collect();
    let pl = PlFlux::from_points(pts, fs)?;
    let raw = pl.riemann(ul, ur)?;

    let mut waves: Vec<ScalarWave> = Vec::new();
    for w in raw {
        let piece = match w.kind {
            PlWaveKind::Shock => ScalarWave::Shock { ul: w.ul, ur: w.ur, speed: w.speed },
            PlWaveKind::Chord if flux.is_piecewise_linear() => ScalarWave::Shock { ul: w.ul, ur: w.ur, speed: w.speed },
            PlWaveKind::Chord => ScalarWave::Rarefaction {
                ul: w.ul,
                ur: w.ur,
                speed_lo: flux.df(w.ul),
                speed_hi: flux.df(w.ur),
            },
        };
        match (waves.last_mut(), piece) {
            (Some(ScalarWave::Rarefaction { ur, speed_hi, .. }), ScalarWave::Rarefaction { ur: r, speed_hi: s, .. }) => {
                *ur = r;
                *speed_hi = s;
            }
            _ => waves.push(piece),
        }
    }
    if !flux.is_piecewise_linear() {
        refine_tangencies(flux, &mut waves, (b - a) / n as f64);
    }
    Ok(waves)
}

/// Move shock endpoints shared with a fan onto the exact tangency f′(s) = chord slope.
fn refine_tangencies(flux: &Flux, waves: &mut [ScalarWave], h: f64) {
    for k in 0..waves.len() {
        let ScalarWave::Shock { ul, ur, .. } = waves[k] else { continue };
        let fan_right = matches!(waves.get(k + 1), Some(ScalarWave::Rarefaction { .. }));
        let fan_left = k > 0 && matches!(waves[k - 1], ScalarWave::Rarefaction { .. });
        let (mut l, mut r) = (ul, ur);
        for _ in 0..4 {
            if fan_right {
                r = tangency(flux, l, r, h);
            }
            if fan_left {
                l = tangency(flux, r, l, h);
            }
        }
        let speed = (flux.f(r) - flux.f(l)) / (r - l);
        waves[k] = ScalarWave::Shock { ul: l, ur: r, speed };
        if fan_right {
            if let ScalarWave::Rarefaction { ul, speed_lo, .. } = &mut waves[k + 1] {
                *ul = r;
                *speed_lo = flux.df(r);
            }
        }
        if fan_left {
            if let ScalarWave::Rarefaction { ur, speed_hi, .. } = &mut waves[k - 1] {
                *ur = l;
                *speed_hi = flux.df(l);
            }
        }
    }
}

/// Root of f′(s)(s − p) − (f(s) − f(p)) near `guess`.
fn tangency(flux: &Flux, p: f64, guess: f64, h: f64) -> f64 {
    let g = |s: f64| flux.df(s) * (s - p) - (flux.f(s) - flux.f(p));
    let (mut a, mut b) = ((guess - 2.0 * h).max(flux.lo), (guess + 2.0 * h).min(flux.hi));
    // keep the bracket on the far side of p
    if p < guess {
        a = a.max(p + 0.5 * (guess - p));
    } else {
        b = b.min(p - 0.5 * (p - guess));
    }
    let (mut ga, gb) = (g(a), g(b));
    if ga * gb > 0.0 {
        return guess;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let gm = g(m);
        if gm == 0.0 || (b - a) < 1e-15 * (1.0 + m.abs()) {
            return m;
        }
        if (gm > 0.0) == (ga > 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burgers_cases() {
        let s = solve_riemann_scalar(&Flux::burgers(), 1.0, 0.0).unwrap();
        assert_eq!(s, vec![ScalarWave::Shock { ul: 1.0, ur: 0.0, speed: 0.5 }]);
        let r = solve_riemann_scalar(&Flux::burgers(), 0.0, 1.0).unwrap();
        assert_eq!(r[0].speeds(), (0.0, 1.0));
        assert!(solve_riemann_scalar(&Flux::burgers(), 0.4, 0.4).unwrap().is_empty());
    }

    #[test]
    fn inflection_shock_then_fan() {
        // lower envelope of v³ − 1.5v² on [0, 1]: chord from 0 tangent at 3/4
        let f = Flux::by_name("inflection").unwrap();
        let w = solve_riemann_scalar(&f, 0.0, 1.0).unwrap();
        assert_eq!(w.len(), 2);
        let ScalarWave::Shock { ur, speed, .. } = w[0] else { panic!("{w:?}") };
        assert!((ur - 0.75).abs() < 1e-12);
        assert!((speed + 0.5625).abs() < 1e-12);
        let (lo, hi) = w[1].speeds();
        assert!((lo + 0.5625).abs() < 1e-12 && hi.abs() < 1e-12);
    }

    #[test]
    fn cubic_down_jump_is_a_shock_when_convex() {
        let f = Flux::by_name("cubic").unwrap();
        let w = solve_riemann_scalar(&f, 1.0, 0.0).unwrap();
        assert_eq!(w, vec![ScalarWave::Shock { ul: 1.0, ur: 0.0, speed: 1.0 }]);
    }
}
