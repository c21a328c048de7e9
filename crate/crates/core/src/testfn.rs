//! Seeded dictionaries of smooth bump test functions φ(t, x)·ρ(v).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// (1 − s²)² on |s| < 1.
pub fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - s * s;
        q * q
    }
}

pub fn bump_prime(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        -4.0 * s * (1.0 - s * s)
    }
}

pub fn bump_second(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        -4.0 * (1.0 - 3.0 * s * s)
    }
}

/// ∫_{-1}^{s} bump.
pub fn bump_integral(s: f64) -> f64 {
    let s = s.clamp(-1.0, 1.0);
    let p = |s: f64| s - 2.0 * s.powi(3) / 3.0 + s.powi(5) / 5.0;
    p(s) - p(-1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub tc: f64,
    pub rt: f64,
    pub xc: f64,
    pub rx: f64,
    pub vc: f64,
    pub rv: f64,
}

impl TestFunction {
    pub fn phi(&self, t: f64, x: f64) -> f64 {
        bump((t - self.tc) / self.rt) * bump((x - self.xc) / self.rx)
    }

    pub fn phi_t(&self, t: f64, x: f64) -> f64 {
        bump_prime((t - self.tc) / self.rt) / self.rt * bump((x - self.xc) / self.rx)
    }

    pub fn phi_x(&self, t: f64, x: f64) -> f64 {
        bump((t - self.tc) / self.rt) * bump_prime((x - self.xc) / self.rx) / self.rx
    }

    pub fn rho(&self, v: f64) -> f64 {
        bump((v - self.vc) / self.rv)
    }

    pub fn rho_prime(&self, v: f64) -> f64 {
        bump_prime((v - self.vc) / self.rv) / self.rv
    }

    pub fn rho_second(&self, v: f64) -> f64 {
        bump_second((v - self.vc) / self.rv) / (self.rv * self.rv)
    }

    /// ∫_{−∞}^{u} ρ.
    pub fn rho_integral(&self, u: f64) -> f64 {
        self.rv * bump_integral((u - self.vc) / self.rv)
    }

    pub fn t_support(&self) -> (f64, f64) {
        (self.tc - self.rt, self.tc + self.rt)
    }

    pub fn x_support(&self) -> (f64, f64) {
        (self.xc - self.rx, self.xc + self.rx)
    }

    pub fn v_support(&self) -> (f64, f64) {
        (self.vc - self.rv, self.vc + self.rv)
    }
}

/// `n` bumps with supports strictly inside (0, T) × (xa, xb) × (lo, hi).
pub fn dictionary(seed: u64, n: usize, t_final: f64, x: (f64, f64), v: (f64, f64)) -> Vec<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (xw, vw) = (x.1 - x.0, v.1 - v.0);
    (0..n)
        .map(|_| {
            let tc = t_final * rng.gen_range(0.3..0.7);
            let rt = tc.min(t_final - tc) * rng.gen_range(0.5..0.95);
            let xc = x.0 + xw * rng.gen_range(0.3..0.7);
            let rx = (xc - x.0).min(x.1 - xc) * rng.gen_range(0.5..0.95);
            let vc = v.0 + vw * rng.gen_range(0.3..0.7);
            let rv = (vc - v.0).min(v.1 - vc) * rng.gen_range(0.5..0.95);
            TestFunction { tc, rt, xc, rx, vc, rv }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_matches_quadrature() {
        let f = TestFunction { tc: 0.5, rt: 0.2, xc: 0.0, rx: 1.0, vc: 0.4, rv: 0.3 };
        let q = crate::quad::gl8_panels(|v| f.rho(v), 0.1, 0.55, 8);
        assert!((f.rho_integral(0.55) - q).abs() < 1e-14);
        assert!((bump_integral(1.0) - 16.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn supports_inside_box() {
        for f in dictionary(7, 50, 2.0, (-1.0, 3.0), (0.0, 1.0)) {
            assert!(f.t_support().0 > 0.0 && f.t_support().1 < 2.0);
            assert!(f.x_support().0 > -1.0 && f.x_support().1 < 3.0);
            assert!(f.v_support().0 > 0.0 && f.v_support().1 < 1.0);
        }
    }
}
