//! Transport-collapse stepper on an (x, v) grid of kinetic cell averages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::Flux;
use crate::pwc::PiecewiseConstant;

/// Cell averages of χ = 1{v ≤ u} on nx × nv cells, stored column by column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KineticDensity {
    pub x0: f64,
    pub dx: f64,
    pub nx: usize,
    pub lo: f64,
    pub dv: f64,
    pub nv: usize,
    pub chi: Vec<f64>,
}

impl KineticDensity {
    pub fn from_profile(u: &PiecewiseConstant, x0: f64, x1: f64, nx: usize, lo: f64, hi: f64, nv: usize) -> KineticDensity {
        let dx = (x1 - x0) / nx as f64;
        let dv = (hi - lo) / nv as f64;
        let mut chi = vec![0.0; nx * nv];
        for i in 0..nx {
            let (xa, xb) = (x0 + i as f64 * dx, x0 + (i + 1) as f64 * dx);
            for j in 0..nv {
                let va = lo + j as f64 * dv;
                chi[i * nv + j] = u.integrate(xa, xb, |w| ((w - va) / dv).clamp(0.0, 1.0)) / (xb - xa);
            }
        }
        KineticDensity { x0, dx, nx, lo, dv, nv, chi }
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.chi[i * self.nv..(i + 1) * self.nv]
    }

    /// lo + ∫χ dv in every column.
    pub fn profile_values(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.lo + self.column(i).iter().sum::<f64>() * self.dv).collect()
    }

    pub fn profile(&self) -> PiecewiseConstant {
        let vals = self.profile_values();
        let breaks: Vec<f64> = (0..=self.nx).map(|i| self.x0 + i as f64 * self.dx).collect();
        let mut values = vec![vals[0]];
        values.extend(vals.iter().copied());
        values.push(*vals.last().unwrap());
        PiecewiseConstant::new(breaks, values).expect("grid is increasing")
    }

    /// ∫∫|χ − 1{v ≤ w(x)}| dx dv for a collapsed density (each column an indicator).
    pub fn l1_to(&self, w: &PiecewiseConstant) -> f64 {
        let vals = self.profile_values();
        (0..self.nx)
            .map(|i| {
                let xa = self.x0 + i as f64 * self.dx;
                w.integrate(xa, xa + self.dx, |u| (u - vals[i]).abs())
            })
            .sum()
    }
}

/// Free streaming of every v-slab by f′(v_j)·dt with exact shift and conservative remap,
/// then collapse of each column to the indicator of [lo, lo + ∫χ dv].
pub fn transport_collapse_step(d: &KineticDensity, flux: &Flux, dt: f64) -> Result<KineticDensity> {
    if !(dt > 0.0) {
        return Err(Error::Time(format!("time step must be positive, got {dt}")));
    }
    let (nx, nv) = (d.nx, d.nv);
    let speeds: Vec<f64> = (0..nv).map(|j| flux.df(d.lo + (j as f64 + 0.5) * d.dv)).collect();
    let amax = speeds.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    if dt * amax > d.dx * (1.0 + 1e-12) {
        return Err(Error::Cfl(format!(
            "dt·max|f′| = {} exceeds one cell {}",
            dt * amax,
            d.dx
        )));
    }
    let mut out = d.clone();
    for j in 0..nv {
        let s = speeds[j] * dt / d.dx;
        let at = |i: isize| d.chi[(i.clamp(0, nx as isize - 1) as usize) * nv + j];
        for i in 0..nx as isize {
            let c = at(i);
            out.chi[i as usize * nv + j] = if s >= 0.0 { c - s * (c - at(i - 1)) } else { c - s * (at(i + 1) - c) };
        }
    }
    for i in 0..nx {
        let col = &mut out.chi[i * nv..(i + 1) * nv];
        let mass: f64 = col.iter().sum();
        for (j, c) in col.iter_mut().enumerate() {
            *c = (mass - j as f64).clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_state_is_fixed() {
        let d = KineticDensity::from_profile(&PiecewiseConstant::constant(0.375), 0.0, 1.0, 50, 0.0, 1.0, 16);
        let e = transport_collapse_step(&d, &Flux::burgers(), 0.01).unwrap();
        assert_eq!(d, e);
    }

    #[test]
    fn cfl_violation() {
        let d = KineticDensity::from_profile(&PiecewiseConstant::constant(0.5), 0.0, 1.0, 100, 0.0, 1.0, 16);
        assert!(matches!(transport_collapse_step(&d, &Flux::burgers(), 0.02), Err(Error::Cfl(_))));
    }

    #[test]
    fn mass_changes_only_by_boundary_flux() {
        let u = PiecewiseConstant::new(vec![0.3, 0.6], vec![0.2, 0.9, 0.1]).unwrap();
        let d = KineticDensity::from_profile(&u, 0.0, 1.0, 40, 0.0, 1.0, 20);
        let dt = 1e-2;
        let e = transport_collapse_step(&d, &Flux::burgers(), dt).unwrap();
        let mass = |k: &KineticDensity| k.profile_values().iter().map(|v| v - k.lo).sum::<f64>() * k.dx;
        let inflow: f64 = (0..d.nv)
            .map(|j| (d.lo + (j as f64 + 0.5) * d.dv) * d.dv * dt * (d.column(0)[j] - d.column(d.nx - 1)[j]))
            .sum();
        assert!((mass(&e) - mass(&d) - inflow).abs() < 1e-14);
        for i in 0..e.nx {
            assert!(e.column(i).windows(2).all(|w| w[1] <= w[0]));
        }
    }
}
