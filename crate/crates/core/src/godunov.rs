//! First-order Godunov finite-volume scheme, used as an independent reference.

use crate::error::{Error, Result};
use crate::flux::{EntropyPair, Flux, FluxKind};
use crate::pwc::PiecewiseConstant;

/// Godunov numerical flux: min of f over [ul, ur] if ul ≤ ur, max over [ur, ul] otherwise.
pub fn godunov_flux(flux: &Flux, ul: f64, ur: f64) -> f64 {
    let (a, b) = (ul.min(ur), ul.max(ur));
    let mut cands = vec![a, b];
    match &flux.kind {
        FluxKind::Burgers => cands.push(0.0),
        FluxKind::Cubic(c) => {
            // roots of c1 + 2c2 v + 3c3 v²
            let (qa, qb, qc) = (3.0 * c[3], 2.0 * c[2], c[1]);
            if qa != 0.0 {
                let d = qb * qb - 4.0 * qa * qc;
                if d >= 0.0 {
                    cands.push((-qb + d.sqrt()) / (2.0 * qa));
                    cands.push((-qb - d.sqrt()) / (2.0 * qa));
                }
            } else if qb != 0.0 {
                cands.push(-qc / qb);
            }
        }
        _ => {
            cands.extend(flux.kinks());
            let n = 64;
            cands.extend((1..n).map(|i| a + (b - a) * i as f64 / n as f64));
        }
    }
    let vals = cands.into_iter().filter(|&v| v >= a && v <= b).map(|v| flux.f(v));
    if ul <= ur {
        vals.fold(f64::INFINITY, f64::min)
    } else {
        vals.fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct GodunovRun {
    pub x0: f64,
    pub dx: f64,
    pub u0: Vec<f64>,
    pub u: Vec<f64>,
    pub t: f64,
    pub left: f64,
    pub right: f64,
}

impl GodunovRun {
    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.u.len()).map(move |i| self.x0 + (i as f64 + 0.5) * self.dx)
    }

    pub fn profile(&self) -> PiecewiseConstant {
        let n = self.u.len();
        let breaks: Vec<f64> = (0..=n).map(|i| self.x0 + i as f64 * self.dx).collect();
        let mut values = vec![self.left];
        values.extend(self.u.iter().copied());
        values.push(self.right);
        PiecewiseConstant::new(breaks, values).expect("grid is increasing")
    }

    /// Entropy production rate: d/dt ∫η + q(right) − q(left), averaged over [0, t].
    pub fn dissipation_rate(&self, pair: &EntropyPair) -> f64 {
        let e0: f64 = self.u0.iter().map(|&u| pair.eta(u)).sum::<f64>() * self.dx;
        let e1: f64 = self.u.iter().map(|&u| pair.eta(u)).sum::<f64>() * self.dx;
        (e1 - e0) / self.t + pair.q(self.right) - pair.q(self.left)
    }
}

/// Evolve cell averages of `initial` on [a, b] with `n` cells up to time `t`.
pub fn godunov(initial: &PiecewiseConstant, flux: &Flux, a: f64, b: f64, n: usize, t: f64, cfl: f64) -> Result<GodunovRun> {
    if !(b > a) || n == 0 {
        return Err(Error::Invalid("empty Godunov grid".into()));
    }
    if !(t > 0.0) {
        return Err(Error::Time(format!("final time must be positive, got {t}")));
    }
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::Cfl(format!("CFL number {cfl} outside (0, 1]")));
    }
    let dx = (b - a) / n as f64;
    let u0: Vec<f64> = (0..n)
        .map(|i| {
            let xa = a + i as f64 * dx;
            initial.integrate(xa, xa + dx, |u| u) / dx
        })
        .collect();
    let (left, right) = (initial.left_value(), initial.right_value());
    let smax = flux.max_abs_df().max(1e-12);
    let steps = (t * smax / (cfl * dx)).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let mut u = u0.clone();
    let mut fl = vec![0.0; n + 1];
    for _ in 0..steps {
        for i in 0..=n {
            let ul = if i == 0 { left } else { u[i - 1] };
            let ur = if i == n { right } else { u[i] };
            fl[i] = godunov_flux(flux, ul, ur);
        }
        for i in 0..n {
            u[i] -= dt / dx * (fl[i + 1] - fl[i]);
        }
    }
    Ok(GodunovRun { x0: a, dx, u0, u, t, left, right })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flux_cases() {
        let f = Flux::burgers();
        assert_eq!(godunov_flux(&f, 1.0, 0.0), 0.5);
        assert_eq!(godunov_flux(&f, 0.0, 1.0), 0.0);
        assert!((godunov_flux(&f, 0.2, 0.6) - 0.02).abs() < 1e-16);
    }

    #[test]
    fn conserves_mass() {
        let data = PiecewiseConstant::new(vec![0.0, 0.5], vec![0.0, 1.0, 0.0]).unwrap();
        let run = godunov(&data, &Flux::burgers(), -1.0, 2.0, 300, 1.0, 0.9).unwrap();
        let m: f64 = run.u.iter().sum::<f64>() * run.dx;
        assert!((m - 0.5).abs() < 1e-12);
    }
}
