//! Gauss-Legendre rules and a small adaptive integrator.

const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// 8-point Gauss-Legendre on [a, b]; exact for polynomials of degree 15.
pub fn gl8<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for i in 0..4 {
        s += GL8_W[i] * (f(c - h * GL8_X[i]) + f(c + h * GL8_X[i]));
    }
    s * h
}

/// Composite 8-point rule on `n` equal panels.
pub fn gl8_panels<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n.max(1);
    let h = (b - a) / n as f64;
    (0..n)
        .map(|k| gl8(&f, a + k as f64 * h, a + (k + 1) as f64 * h))
        .sum()
}

/// Adaptive bisection on top of `gl8` until the two-panel estimate agrees to `tol`.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let l = gl8(f, a, m);
        let r = gl8(f, m, b);
        if depth == 0 || (l + r - whole).abs() <= tol {
            return l + r;
        }
        rec(f, a, m, l, 0.5 * tol, depth - 1) + rec(f, m, b, r, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let whole = gl8(&f, a, b);
    rec(&f, a, b, whole, tol.max(1e-16), 40)
}

/// Quadrature split at the given interior points (kinks of the integrand).
pub fn adaptive_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, kinks: &[f64], tol: f64) -> f64 {
    let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut pts: Vec<f64> = kinks.iter().copied().filter(|&k| k > lo && k < hi).collect();
    pts.sort_by(f64::total_cmp);
    let mut s = 0.0;
    let mut prev = lo;
    for p in pts.into_iter().chain(std::iter::once(hi)) {
        if p > prev {
            s += adaptive(&f, prev, p, tol);
        }
        prev = p;
    }
    sign * s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl8_integrates_degree_15_exactly() {
        let v = gl8(|x| x.powi(15) + x.powi(14), 0.0, 1.0);
        assert!((v - (1.0 / 16.0 + 1.0 / 15.0)).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_kinks() {
        let v = adaptive_split(|x: f64| x.abs(), -1.0, 2.0, &[0.0], 1e-14);
        assert!((v - 2.5).abs() < 1e-14);
        let s = adaptive(|x: f64| x.sqrt(), 0.0, 1.0, 1e-13);
        assert!((s - 2.0 / 3.0).abs() < 1e-10);
    }
}
