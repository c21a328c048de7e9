//! Piecewise-linear interpolant f_δ of a flux and its exact Riemann solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::{pl_cell, Flux};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlWaveKind {
    /// chord strictly separated from the graph of f_δ
    Shock,
    /// chord lying on the graph: a single linear piece
    Chord,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlWave {
    pub ul: f64,
    pub ur: f64,
    pub speed: f64,
    pub kind: PlWaveKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlFlux {
    pub v: Vec<f64>,
    pub f: Vec<f64>,
}

impl PlFlux {
    pub fn from_points(v: Vec<f64>, f: Vec<f64>) -> Result<PlFlux> {
        if v.len() < 2 || v.len() != f.len() {
            return Err(Error::Invalid("piecewise-linear flux needs matching breakpoints".into()));
        }
        if v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("breakpoints must be strictly increasing".into()));
        }
        Ok(PlFlux { v, f })
    }

    /// Interpolate `flux` on the grid lo + kδv together with the `extra` states.
    /// Piecewise-linear input fluxes keep their own breakpoints instead of the grid.
    pub fn build(flux: &Flux, dv: f64, extra: &[f64]) -> Result<PlFlux> {
        if !(dv > 0.0) {
            return Err(Error::Invalid(format!("δv must be positive, got {dv}")));
        }
        let (lo, hi) = (flux.lo, flux.hi);
        let len = hi - lo;
        let mut pts: Vec<f64> = if flux.is_piecewise_linear() {
            flux.kinks()
        } else {
            let n = ((len / dv) - 1e-9).ceil().max(1.0) as usize;
            let mut g: Vec<f64> = (0..n).map(|k| lo + k as f64 * dv).collect();
            g.push(hi);
            g
        };
        for &e in extra {
            if e < lo - 1e-12 * len || e > hi + 1e-12 * len {
                return Err(Error::Domain(format!("state {e} outside flux domain [{lo}, {hi}]")));
            }
            pts.push(e.clamp(lo, hi));
        }
        pts.sort_by(f64::total_cmp);
        let snap = 1e-12 * len.max(1e-300);
        let mut v: Vec<f64> = Vec::with_capacity(pts.len());
        for p in pts {
            match v.last() {
                Some(&q) if p - q <= snap => {}
                _ => v.push(p),
            }
        }
        let f = v.iter().map(|&x| flux.f(x)).collect();
        PlFlux::from_points(v, f)
    }

    pub fn lo(&self) -> f64 {
        self.v[0]
    }

    pub fn hi(&self) -> f64 {
        *self.v.last().unwrap()
    }

    pub fn cell(&self, u: f64) -> usize {
        pl_cell(&self.v, u)
    }

    pub fn slope(&self, k: usize) -> f64 {
        (self.f[k + 1] - self.f[k]) / (self.v[k + 1] - self.v[k])
    }

    pub fn eval(&self, u: f64) -> f64 {
        let k = self.cell(u);
        self.f[k] + self.slope(k) * (u - self.v[k])
    }

    /// Characteristic speed f_δ′ on the left-closed cell containing `u`.
    pub fn speed(&self, u: f64) -> f64 {
        self.slope(self.cell(u))
    }

    /// Nearest breakpoint, used to place data values exactly on the grid.
    pub fn snap(&self, u: f64) -> f64 {
        let k = self.v.partition_point(|&x| x < u);
        let mut best = u;
        let mut d = f64::INFINITY;
        for i in [k.saturating_sub(1), k.min(self.v.len() - 1)] {
            let e = (self.v[i] - u).abs();
            if e < d {
                d = e;
                best = self.v[i];
            }
        }
        best
    }

    pub fn index(&self, u: f64) -> Option<usize> {
        self.v.binary_search_by(|p| p.total_cmp(&u)).ok()
    }

    /// g(ṽ) = −f_δ(lo + hi − ṽ), the flux of the reflected state ũ = lo + hi − u.
    pub fn mirrored(&self) -> PlFlux {
        let (lo, hi) = (self.lo(), self.hi());
        let n = self.v.len();
        let v = (0..n).map(|k| lo + hi - self.v[n - 1 - k]).collect();
        let f = (0..n).map(|k| -self.f[n - 1 - k]).collect();
        PlFlux { v, f }
    }

    /// Exact entropy solution of the Riemann problem for f_δ; both states must be breakpoints.
    pub fn riemann(&self, ul: f64, ur: f64) -> Result<Vec<PlWave>> {
        if ul == ur {
            return Ok(Vec::new());
        }
        let i = self.index(ul).ok_or_else(|| Error::Invalid(format!("state {ul} is not a breakpoint")))?;
        let j = self.index(ur).ok_or_else(|| Error::Invalid(format!("state {ur} is not a breakpoint")))?;
        let cross = |o: usize, a: usize, b: usize| {
            (self.v[a] - self.v[o]) * (self.f[b] - self.f[o]) - (self.f[a] - self.f[o]) * (self.v[b] - self.v[o])
        };
        let (a, b, lower) = if i < j { (i, j, true) } else { (j, i, false) };
        let mut hull: Vec<usize> = Vec::with_capacity(b - a + 1);
        for k in a..=b {
            while hull.len() >= 2 {
                let c = cross(hull[hull.len() - 2], hull[hull.len() - 1], k);
                if (lower && c <= 0.0) || (!lower && c >= 0.0) {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(k);
        }
        let edge = |p: usize, q: usize| {
            let speed = (self.f[q] - self.f[p]) / (self.v[q] - self.v[p]);
            let scale = 1e-13 * (1.0 + self.f[p].abs().max(self.f[q].abs()));
            let on_chord = (p + 1..q).all(|k| (self.f[p] + speed * (self.v[k] - self.v[p]) - self.f[k]).abs() <= scale);
            (speed, if on_chord { PlWaveKind::Chord } else { PlWaveKind::Shock })
        };
        let mut waves = Vec::with_capacity(hull.len() - 1);
        if lower {
            for w in hull.windows(2) {
                let (speed, kind) = edge(w[0], w[1]);
                waves.push(PlWave { ul: self.v[w[0]], ur: self.v[w[1]], speed, kind });
            }
        } else {
            for w in hull.windows(2).rev() {
                let (speed, kind) = edge(w[0], w[1]);
                waves.push(PlWave { ul: self.v[w[1]], ur: self.v[w[0]], speed, kind });
            }
        }
        Ok(waves)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burgers_grid_shock_and_fan() {
        let pl = PlFlux::build(&Flux::burgers(), 0.25, &[]).unwrap();
        assert_eq!(pl.v, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let s = pl.riemann(1.0, 0.0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].kind, PlWaveKind::Shock);
        assert!((s[0].speed - 0.5).abs() < 1e-15);
        let r = pl.riemann(0.0, 1.0).unwrap();
        assert_eq!(r.len(), 4);
        for (k, w) in r.iter().enumerate() {
            assert_eq!(w.kind, PlWaveKind::Chord);
            assert!((w.speed - (k as f64 + 0.5) * 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn speeds_increase_left_to_right() {
        let pl = PlFlux::build(&Flux::cubic([0.0, 0.0, -1.5, 1.0], 0.0, 1.0), 1.0 / 64.0, &[]).unwrap();
        for (a, b) in [(0.0, 1.0), (1.0, 0.0), (0.25, 0.875), (0.875, 0.125)] {
            let w = pl.riemann(a, b).unwrap();
            assert_eq!(w[0].ul, a);
            assert_eq!(w.last().unwrap().ur, b);
            for p in w.windows(2) {
                assert!(p[1].speed > p[0].speed);
                assert_eq!(p[0].ur, p[1].ul);
            }
        }
    }

    #[test]
    fn mirror_is_an_involution() {
        let pl = PlFlux::build(&Flux::burgers(), 0.1, &[0.33]).unwrap();
        let back = pl.mirrored().mirrored();
        for (x, y) in pl.v.iter().zip(back.v.iter()) {
            assert!((x - y).abs() < 1e-15);
        }
        let m = pl.mirrored();
        // same shock speed for the reflected pair
        let s0 = pl.riemann(1.0, 0.0).unwrap()[0].speed;
        let s1 = m.riemann(0.0, 1.0).unwrap()[0].speed;
        assert!((s0 - s1).abs() < 1e-15);
    }
}
