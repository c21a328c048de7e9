//! a/b fronts from the two curve families, the Oleinik-type gap, and B^{α,p}_∞ seminorms
//! of piecewise constant profiles with their time integrals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::log_log_slope;
use crate::error::{Error, Result};
use crate::front::FrontTrackingSolution;
use crate::lagrangian::WeightedCurveFamily;
use crate::measure::AtomicMeasure3;
use crate::pwc::PiecewiseConstant;

pub const DEFAULT_NX: usize = 1024;
pub const DEFAULT_NH: usize = 20;

/// a^Δt and b^Δt on `nx` cells of `window`: per cell the sup (resp. inf) of γᵛ(t) over
/// curves alive on [t − Δt, t] whose γˣ(t) lies in the cell or within one curve spacing.
/// Cells no curve reaches take the bottom (resp. top) of the range.
pub fn ab_fronts(
    hyp: &WeightedCurveFamily,
    epi: &WeightedCurveFamily,
    t: f64,
    dt: f64,
    window: (f64, f64),
    nx: usize,
) -> Result<(PiecewiseConstant, PiecewiseConstant)> {
    if !(dt < t) {
        return Err(Error::Slab(format!("slab width {dt} must be below t = {t}")));
    }
    let (xa, xb) = window;
    let nx = nx.max(1);
    let cw = (xb - xa) / nx as f64;
    let cells = |fam: &WeightedCurveFamily, init: f64, better: fn(f64, f64) -> f64| {
        let spacing = if fam.n_v > 0 { 1.0 / (2.0 * fam.n_v as f64) } else { 0.0 };
        let reach = (spacing / cw).ceil() as i64;
        let mut out = vec![init; nx];
        for c in &fam.curves {
            if c.t0 > t - dt || c.t1 < t {
                continue;
            }
            let x = c.x_at(t);
            let k = ((x - xa) / cw).floor() as i64;
            let v = c.value_at(t);
            for j in (k - reach).max(0)..=(k + reach).min(nx as i64 - 1) {
                out[j as usize] = better(out[j as usize], v);
            }
        }
        out
    };
    let a = cells(hyp, hyp.lo, f64::max);
    let b = cells(epi, epi.hi, f64::min);
    let to_pwc = |vals: Vec<f64>, outside: f64| {
        let mut breaks = Vec::with_capacity(nx + 1);
        let mut values = Vec::with_capacity(nx + 2);
        values.push(outside);
        for (k, v) in vals.into_iter().enumerate() {
            breaks.push(xa + k as f64 * cw);
            values.push(v);
        }
        breaks.push(xb);
        values.push(outside);
        PiecewiseConstant::new(breaks, values)
    };
    Ok((to_pwc(a, hyp.lo)?, to_pwc(b, epi.hi)?))
}

/// |μ₀| of the slab (t − Δt, t) × (window ± Δt) × ℝ.
pub fn slab_mass(mu0: &AtomicMeasure3, t: f64, dt: f64, window: (f64, f64)) -> f64 {
    mu0.restrict((t - dt, t), (window.0 - dt, window.1 + dt), (f64::NEG_INFINITY, f64::INFINITY)).total_variation()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OleinikGap {
    /// ∫_window |a(x + h) − b(x)| dx
    pub lhs: f64,
    /// h/Δt + |μ₀|(slab)
    pub rhs: f64,
    pub ratio: f64,
}

pub fn oleinik_gap(a: &PiecewiseConstant, b: &PiecewiseConstant, h: f64, dt: f64, window: (f64, f64), slab: f64) -> OleinikGap {
    let lhs = shifted_difference(a, h, b, window, 1.0);
    let rhs = h / dt + slab;
    OleinikGap { lhs, rhs, ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 } }
}

/// max over probed x < y of a(y) − b(x) − (y − x)/Δt.
pub fn ab_excess(a: &PiecewiseConstant, b: &PiecewiseConstant, dt: f64, window: (f64, f64), probes: usize) -> f64 {
    let n = probes.max(2);
    let xs: Vec<f64> = (0..n).map(|i| window.0 + (window.1 - window.0) * (i as f64 + 0.5) / n as f64).collect();
    let av: Vec<f64> = xs.iter().map(|&x| a.eval(x)).collect();
    let bv: Vec<f64> = xs.iter().map(|&x| b.eval(x)).collect();
    (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).map(|j| av[j] - bv[i] - (xs[j] - xs[i]) / dt).fold(f64::NEG_INFINITY, f64::max))
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// ∫_K |u(x + h) − w(x)|^p dx, exact for piecewise constant u and w.
pub fn shifted_difference(u: &PiecewiseConstant, h: f64, w: &PiecewiseConstant, k: (f64, f64), p: f64) -> f64 {
    let mut pts: Vec<f64> = u.breaks.iter().map(|&x| x - h).chain(w.breaks.iter().copied()).filter(|&x| x > k.0 && x < k.1).collect();
    pts.push(k.0);
    pts.push(k.1);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.windows(2)
        .map(|s| {
            let m = 0.5 * (s[0] + s[1]);
            (u.eval(m + h) - w.eval(m)).abs().powf(p) * (s[1] - s[0])
        })
        .sum()
}

/// Geometric grid of `n` steps from |K|/N_x to |K|/2.
pub fn h_grid(k: (f64, f64), nx: usize, n: usize) -> Vec<f64> {
    let len = k.1 - k.0;
    let (a, b) = (len / nx as f64, len / 2.0);
    if n < 2 {
        return vec![b];
    }
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Per-h integrals ∫_K |u(x+h) − u(x)|^p / h^{αp}.
pub fn besov_profile(u: &PiecewiseConstant, alpha: f64, p: f64, k: (f64, f64), hs: &[f64]) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Invalid(format!("Besov index α = {alpha} outside (0, 1)")));
    }
    if p < 1.0 {
        return Err(Error::Invalid(format!("Besov exponent p = {p} below 1")));
    }
    Ok(hs.iter().map(|&h| shifted_difference(u, h, u, k, p) / h.powf(alpha * p)).collect())
}

/// sup over the h-grid of ∫_K |u(x+h) − u(x)|^p / h^{αp}.
pub fn besov_seminorm(u: &PiecewiseConstant, alpha: f64, p: f64, k: (f64, f64), hs: &[f64]) -> Result<f64> {
    Ok(besov_profile(u, alpha, p, k, hs)?.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovRow {
    pub delta: f64,
    pub integral: f64,
    /// integral·min{δ, 1}
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovReport {
    pub alpha: f64,
    pub p: f64,
    pub window: (f64, f64),
    pub h_grid: Vec<f64>,
    pub times: Vec<f64>,
    /// per t, per h
    pub integrals: Vec<Vec<f64>>,
    pub seminorms: Vec<f64>,
    pub rows: Vec<BesovRow>,
    /// slope of log integral against log δ
    pub exponent: f64,
    /// max/min of the ratios
    pub spread: f64,
}

impl BesovReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("delta,integral,ratio\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{}\n", r.delta, r.integral, r.ratio));
        }
        s
    }
}

/// Time samples: `per_segment` Gauss–Legendre nodes in each geometric sub-panel of the
/// segments between consecutive deltas and T.
fn time_nodes(deltas: &[f64], t_final: f64, per_segment: usize) -> Vec<(f64, f64)> {
    const X: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const W: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let mut cuts: Vec<f64> = deltas.iter().copied().filter(|&d| d < t_final).collect();
    cuts.push(t_final);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut nodes = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let m = per_segment.max(1);
        for i in 0..m {
            let pa = a * (b / a).powf(i as f64 / m as f64);
            let pb = a * (b / a).powf((i + 1) as f64 / m as f64);
            for q in 0..4 {
                nodes.push((0.5 * (pa + pb) + 0.5 * (pb - pa) * X[q], 0.5 * (pb - pa) * W[q]));
            }
        }
    }
    nodes
}

/// ∫_δ^T ‖u(t)‖_{B^{α,p}_∞(K)} dt for every δ, and the fitted δ-exponent.
pub fn besov_time_scaling(
    sol: &FrontTrackingSolution,
    deltas: &[f64],
    t_final: f64,
    k: (f64, f64),
    alpha: f64,
    p: f64,
    panels: usize,
) -> Result<BesovReport> {
    besov_time_scaling_of(|t| sol.snapshot(t), deltas, t_final, k, alpha, p, panels)
}

/// `besov_time_scaling` for any family of piecewise constant profiles t ↦ u(t).
pub fn besov_time_scaling_of<F: Fn(f64) -> PiecewiseConstant + Sync>(
    snapshot: F,
    deltas: &[f64],
    t_final: f64,
    k: (f64, f64),
    alpha: f64,
    p: f64,
    panels: usize,
) -> Result<BesovReport> {
    if deltas.iter().any(|&d| !(d > 0.0 && d < t_final)) {
        return Err(Error::Invalid(format!("deltas must lie in (0, {t_final})")));
    }
    let hs = h_grid(k, DEFAULT_NX, DEFAULT_NH);
    let nodes = time_nodes(deltas, t_final, panels);
    let integrals: Vec<Vec<f64>> = nodes
        .par_iter()
        .map(|&(t, _)| besov_profile(&snapshot(t), alpha, p, k, &hs))
        .collect::<Result<_>>()?;
    let seminorms: Vec<f64> = integrals.iter().map(|row| row.iter().copied().fold(0.0, f64::max).powf(1.0 / p)).collect();
    let rows: Vec<BesovRow> = deltas
        .iter()
        .map(|&d| {
            let integral: f64 = nodes.iter().zip(&seminorms).filter(|((t, _), _)| *t > d).map(|((_, w), s)| w * s).sum();
            BesovRow { delta: d, integral, ratio: integral * d.min(1.0) }
        })
        .collect();
    let ds: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let is: Vec<f64> = rows.iter().map(|r| r.integral).collect();
    let exponent = log_log_slope(&ds, &is);
    let (rmin, rmax) = rows.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(r.ratio), b.max(r.ratio)));
    let spread = if rmin > 0.0 { rmax / rmin } else if rmax == 0.0 { 1.0 } else { f64::INFINITY };
    Ok(BesovReport {
        alpha,
        p,
        window: k,
        h_grid: hs,
        times: nodes.iter().map(|n| n.0).collect(),
        integrals,
        seminorms,
        rows,
        exponent,
        spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::flux::Flux;
    use crate::front::{front_track, FrontTrackParams};
    use crate::lagrangian::{build_epigraph_rep, build_hypograph_rep};

    #[test]
    fn seminorm_closed_forms() {
        let step = PiecewiseConstant::step(0.5, 0.0, 1.0);
        let k = (0.0, 1.0);
        let hs = h_grid(k, 1024, 20);
        let s = besov_seminorm(&step, 0.5, 1.0, k, &hs).unwrap();
        assert!((s - 0.5f64.sqrt()).abs() < 1e-12);
        // staircase of slope 2 with steps of width 1/64 over [−1, 2]
        let n = 192;
        let breaks: Vec<f64> = (1..n).map(|i| -1.0 + i as f64 / 64.0).collect();
        let values: Vec<f64> = (0..n).map(|i| 2.0 * i as f64 / 64.0).collect();
        let ramp = PiecewiseConstant::new(breaks, values).unwrap();
        for m in [1, 4, 32] {
            let h = m as f64 / 64.0;
            let v = besov_profile(&ramp, 0.5, 1.0, k, &[h]).unwrap()[0];
            assert!((v - 2.0 * h.sqrt()).abs() < 1e-12, "{v}");
        }
        // square wave: ∫|u(x+h) − u(x)| = (2N − 1)h for h ≤ half a period, the first rise sits on ∂K
        let saw = fixtures::sawtooth(100);
        for h in [0.001, 0.003, 0.005] {
            let v = shifted_difference(&saw, h, &saw, (0.0, 1.0), 1.0);
            assert!((v - 199.0 * h).abs() < 1e-12, "{v}");
        }
        assert!(besov_seminorm(&step, 1.0, 1.0, k, &hs).is_err());
        assert_eq!(besov_seminorm(&PiecewiseConstant::constant(0.3), 0.5, 1.0, k, &hs).unwrap(), 0.0);
    }

    #[test]
    fn ab_match_entropy_solution() {
        let sol = front_track(&fixtures::shock(), &Flux::burgers(), 1.0, FrontTrackParams::default()).unwrap();
        let hyp = build_hypograph_rep(&sol, 512).unwrap();
        let epi = build_epigraph_rep(&sol, 512).unwrap();
        // curves start one domain of dependence left of the hull, so stay right of −0.4
        let w = (-0.3, 1.0);
        let (a, b) = ab_fronts(&hyp, &epi, 0.6, 0.1, w, 1024).unwrap();
        let u = sol.snapshot(0.6);
        let cell = 1.3 / 1024.0;
        assert!(a.l1_distance(&u, w.0, w.1) <= 1.3 / 512.0 + 2.0 * cell);
        assert!(b.l1_distance(&u, w.0, w.1) <= 1.3 / 512.0 + 2.0 * cell);
        let gap = oleinik_gap(&a, &b, 0.01, 0.1, w, 0.0);
        assert!(gap.ratio <= 4.0, "{gap:?}");
        assert!(ab_excess(&a, &b, 0.1, w, 300) <= 2.0 / 512.0);
        assert!(ab_fronts(&hyp, &epi, 0.1, 0.1, w, 64).is_err());

        let c = front_track(&PiecewiseConstant::constant(0.4), &Flux::burgers(), 1.0, FrontTrackParams::default()).unwrap();
        let (a, b) = ab_fronts(&build_hypograph_rep(&c, 256).unwrap(), &build_epigraph_rep(&c, 256).unwrap(), 0.5, 0.2, (0.0, 1.0), 256).unwrap();
        assert!((a.eval(0.5) - 0.4).abs() <= 1.0 / 256.0 && (b.eval(0.5) - 0.4).abs() <= 1.0 / 256.0);
        assert_eq!(oleinik_gap(&c.snapshot(0.5), &c.snapshot(0.5), 0.1, 0.2, (0.0, 1.0), 0.0).lhs, 0.0);
    }

    #[test]
    fn rarefaction_gap_is_linear_in_h() {
        let sol = front_track(&fixtures::rarefaction(), &Flux::burgers(), 1.0, FrontTrackParams { dv: 1.0 / 512.0, max_fronts: 10_000 }).unwrap();
        let u = sol.snapshot(0.8);
        let w = (0.1, 0.6);
        for h in [0.01, 0.05] {
            let gap = oleinik_gap(&u, &u, h, 0.4, w, 0.0);
            assert!((gap.lhs - h * 0.5 / 0.8).abs() < 3e-3, "{gap:?}");
            assert!(gap.lhs <= gap.rhs);
        }
    }

    #[test]
    fn single_shock_integral_is_flat() {
        let sol = front_track(&fixtures::shock(), &Flux::burgers(), 1.0, FrontTrackParams::default()).unwrap();
        let rep = besov_time_scaling(&sol, &[0.05, 0.1, 0.2, 0.4], 1.0, (-2.0, 2.0), 0.5, 1.0, 2).unwrap();
        for (s, t) in rep.seminorms.iter().zip(&rep.times) {
            assert!((s - 2f64.sqrt()).abs() < 1e-9, "{t} {s}");
        }
        for r in &rep.rows {
            assert!((r.integral - 2f64.sqrt() * (1.0 - r.delta)).abs() < 1e-9);
        }
        let flat = front_track(&PiecewiseConstant::constant(0.2), &Flux::burgers(), 1.0, FrontTrackParams::default()).unwrap();
        let rep = besov_time_scaling(&flat, &[0.1, 0.2], 1.0, (0.0, 1.0), 0.5, 1.0, 1).unwrap();
        assert!(rep.rows.iter().all(|r| r.integral == 0.0));
        assert!(rep.to_csv().starts_with("delta,integral,ratio\n"));
    }
}
