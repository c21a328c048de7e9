//! Structure of the kinetic measures: marginals, density ratios, mean oscillation,
//! traces and the jump identity, concentration, envelopes, the three alternatives and
//! the form of interior sources.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flux::{nondegeneracy_h, EntropyPair, Flux, Side};
use crate::front::FrontTrackingSolution;
use crate::lagrangian::{Curve, WeightedCurveFamily};
use crate::measure::{AtomicMeasure3, PlaneMeasure};
use crate::quad::adaptive;

/// (t, x) marginals of |μ₀| and |μ₁|.
pub fn project_marginals(mu0: &AtomicMeasure3, mu1: &AtomicMeasure3) -> (PlaneMeasure, PlaneMeasure) {
    (mu0.marginal_tx(), mu1.marginal_tx())
}

/// r_k = (diameter/8)·2^{−k}, k = 0..6, largest first.
pub fn probe_radii(diameter: f64) -> Vec<f64> {
    (0..7).map(|k| diameter / 8.0 * 0.5f64.powi(k)).collect()
}

/// Diagonal of [0, T] × (front hull).
pub fn diameter(sol: &FrontTrackingSolution) -> f64 {
    let (a, b) = sol.front_hull();
    sol.t_final.hypot(b - a)
}

pub fn density_ratio(nu: &PlaneMeasure, p: (f64, f64), radii: &[f64]) -> Vec<f64> {
    radii.iter().map(|&r| nu.ball_mass(p.0, p.1, r) / r).collect()
}

/// Half-plane cut through the disk centre along x = xc + speed·(t − tc).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Half {
    Whole,
    Left(f64),
    Right(f64),
}

/// (∫ g(u), area) over the part of B_r(tc, xc) inside [0, T] and the chosen half.
pub fn disk_integral<G: Fn(f64) -> f64 + Sync>(sol: &FrontTrackingSolution, c: (f64, f64), r: f64, half: Half, g: G) -> (f64, f64) {
    let (tc, xc) = c;
    let (ta, tb) = ((tc - r).max(0.0), (tc + r).min(sol.t_final));
    if !(tb > ta) {
        return (0.0, 0.0);
    }
    let chord = |t: f64| {
        let w = (r * r - (t - tc) * (t - tc)).max(0.0).sqrt();
        let (mut a, mut b) = (xc - w, xc + w);
        match half {
            Half::Whole => {}
            Half::Left(s) => b = b.min(xc + s * (t - tc)),
            Half::Right(s) => a = a.max(xc + s * (t - tc)),
        }
        (a, b)
    };
    let tol = 1e-10 * r * r;
    let area = adaptive(|t| {
        let (a, b) = chord(t);
        (b - a).max(0.0)
    }, ta, tb, tol);
    let mut kinks = sol.event_times(ta, tb);
    kinks.insert(0, ta);
    kinks.push(tb);
    let val: f64 = kinks
        .par_windows(2)
        .map(|w| {
            adaptive(
                |t| {
                    let (a, b) = chord(t);
                    if b > a {
                        sol.snapshot(t).integrate(a, b, &g)
                    } else {
                        0.0
                    }
                },
                w[0],
                w[1],
                tol,
            )
        })
        .sum();
    (val, area)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VmoReport {
    pub radii: Vec<f64>,
    /// r^{−2} ∫_{B_r} |u − ū_r|
    pub oscillation: Vec<f64>,
    /// slope of log oscillation against log r
    pub slope: f64,
    pub vanishing: bool,
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// Least-squares slope of log y against log x over the positive pairs.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).unzip();
    fit_slope(&lx, &ly)
}

pub fn vmo_test(sol: &FrontTrackingSolution, p: (f64, f64), radii: &[f64]) -> VmoReport {
    let oscillation: Vec<f64> = radii
        .iter()
        .map(|&r| {
            let (m, area) = disk_integral(sol, p, r, Half::Whole, |u| u);
            if area <= 0.0 {
                return 0.0;
            }
            let mean = m / area;
            disk_integral(sol, p, r, Half::Whole, |u| (u - mean).abs()).0 / (r * r)
        })
        .collect();
    let slope = log_log_slope(radii, &oscillation);
    let n = oscillation.len();
    let small = oscillation[n.saturating_sub(2)..].iter().all(|&o| o <= 1e-12);
    VmoReport { radii: radii.to_vec(), slope, vanishing: small || slope > 0.5, oscillation }
}

/// Fronts binned by time for distance queries.
pub struct FrontIndex<'a> {
    sol: &'a FrontTrackingSolution,
    bins: Vec<Vec<usize>>,
    width: f64,
}

impl<'a> FrontIndex<'a> {
    pub fn new(sol: &'a FrontTrackingSolution) -> FrontIndex<'a> {
        Self::subset(sol, 0..sol.fronts.len())
    }

    /// Index over the listed fronts only.
    pub fn subset(sol: &'a FrontTrackingSolution, ids: impl IntoIterator<Item = usize>) -> FrontIndex<'a> {
        let ids: Vec<usize> = ids.into_iter().collect();
        let nb = (ids.len() / 8).clamp(1, 4096);
        let width = sol.t_final.max(1e-300) / nb as f64;
        let mut bins = vec![Vec::new(); nb];
        for f in ids {
            let fr = &sol.fronts[f];
            let a = ((fr.tb / width) as usize).min(nb - 1);
            let b = ((fr.td / width) as usize).min(nb - 1);
            for bin in &mut bins[a..=b] {
                bin.push(f);
            }
        }
        FrontIndex { sol, bins, width }
    }

    /// Euclidean distance in (t, x) to the nearest front segment, if within `cap`.
    pub fn distance(&self, t: f64, x: f64, cap: f64) -> f64 {
        let nb = self.bins.len();
        let a = (((t - cap) / self.width).floor().max(0.0) as usize).min(nb - 1);
        let b = (((t + cap) / self.width).floor().max(0.0) as usize).min(nb - 1);
        let mut best = f64::INFINITY;
        for bin in &self.bins[a..=b] {
            for &f in bin {
                let fr = &self.sol.fronts[f];
                // project onto the segment from (tb, xb) with direction (1, speed)
                let (dt, dx) = (fr.td - fr.tb, fr.speed * (fr.td - fr.tb));
                let len2 = dt * dt + dx * dx;
                let s = if len2 > 0.0 { (((t - fr.tb) * dt + (x - fr.xb) * dx) / len2).clamp(0.0, 1.0) } else { 0.0 };
                let d = (t - fr.tb - s * dt).hypot(x - fr.xb - s * dx);
                best = best.min(d);
            }
        }
        best
    }
}

/// Fraction of ν's mass within distance r of the front set; 1 for the zero measure.
pub fn concentration_report(nu: &PlaneMeasure, sol: &FrontTrackingSolution, r: f64) -> f64 {
    concentration_profile(nu, sol, &[r])[0]
}

/// `concentration_report` for several radii sharing one distance pass.
pub fn concentration_profile(nu: &PlaneMeasure, sol: &FrontTrackingSolution, radii: &[f64]) -> Vec<f64> {
    let total = nu.mass();
    if total <= 0.0 {
        return vec![1.0; radii.len()];
    }
    let idx = FrontIndex::new(sol);
    let cap = radii.iter().fold(0.0f64, |m, &r| m.max(r));
    let mut items: Vec<(f64, f64)> = nu.atoms.par_iter().map(|a| (idx.distance(a.0, a.1, cap), a.2)).collect();
    items.par_extend(nu.lines.par_iter().map(|l| {
        let tm = 0.5 * (l.t0 + l.t1);
        let d = [l.t0, tm, l.t1].iter().map(|&t| idx.distance(t, l.x_at(t), cap)).fold(0.0, f64::max);
        (d, l.density * (l.t1 - l.t0))
    }));
    radii.iter().map(|&r| items.iter().filter(|p| p.0 <= r).map(|p| p.1).sum::<f64>() / total).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpRow {
    pub front: usize,
    /// −∫η″ dμ₁ from the curve jumps on the front, per unit time
    pub aggregated: f64,
    /// (q(u⁺) − q(u⁻)) − σ(η(u⁺) − η(u⁻))
    pub trace: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpIdentityReport {
    pub rows: Vec<JumpRow>,
    pub max_defect: f64,
}

/// Compares the entropy production carried by the curve jumps on each front lasting at
/// least `min_duration` with the trace formula.
pub fn jump_identity_check(sol: &FrontTrackingSolution, fam: &WeightedCurveFamily, pair: &EntropyPair, min_duration: f64) -> JumpIdentityReport {
    let mut per_front = vec![0.0; sol.fronts.len()];
    let eta2 = |a: f64, b: f64| pair.entropy.deta(b) - pair.entropy.deta(a);
    for (c, w) in fam.weighted() {
        for (_, _, from, to, f) in c.jumps() {
            if f < per_front.len() && from != to {
                // μ₁ segment on [to, from] with density +w (downward) or −w (upward)
                per_front[f] -= w * eta2(to, from);
            }
        }
    }
    let rows: Vec<JumpRow> = sol
        .fronts
        .iter()
        .enumerate()
        .filter(|(_, fr)| fr.td - fr.tb >= min_duration && fr.ul != fr.ur)
        .map(|(f, fr)| {
            let (um, up) = (fr.ul, fr.ur);
            JumpRow {
                front: f,
                aggregated: per_front[f] / (fr.td - fr.tb),
                trace: (pair.q(up) - pair.q(um)) - fr.speed * (pair.eta(up) - pair.eta(um)),
            }
        })
        .collect();
    let max_defect = rows.iter().map(|r| (r.aggregated - r.trace).abs()).fold(0.0, f64::max);
    JumpIdentityReport { rows, max_defect }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointClass {
    Jump,
    Vmo,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub t: f64,
    pub x: f64,
    pub class: PointClass,
    pub ratios: Vec<f64>,
    /// half-ball averages (u⁻, u⁺) at the two smallest radii, jump points only
    pub traces: Option<[(f64, f64); 2]>,
    pub speed: Option<f64>,
    /// traces agree with the nearest front's states within 2δv
    pub traces_match: Option<bool>,
}

impl PointRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("plain record")
    }
}

/// Classify probe points by the density of ν₁ at the two smallest radii; traces of jump
/// points come from half-ball averages on either side of the nearest front.
pub fn classify_points(sol: &FrontTrackingSolution, nu1: &PlaneMeasure, points: &[(f64, f64)], radii: &[f64], dv: f64) -> Vec<PointRecord> {
    let diam = diameter(sol);
    let floor = 1e-6 * nu1.mass() / diam;
    let n = radii.len();
    points
        .par_iter()
        .map(|&(t, x)| {
            let ratios = density_ratio(nu1, (t, x), radii);
            let hits = ratios[n.saturating_sub(2)..].iter().filter(|&&q| q >= floor && q > 0.0).count();
            let class = match hits {
                2 => PointClass::Jump,
                0 => PointClass::Vmo,
                _ => PointClass::Undecided,
            };
            let mut rec = PointRecord { t, x, class, ratios, traces: None, speed: None, traces_match: None };
            if class == PointClass::Jump {
                let near = nearest_front(sol, t, x, radii[n - 1]);
                if let Some(f) = near {
                    let fr = &sol.fronts[f];
                    let s = fr.speed;
                    let avg = |r: f64, h: Half| {
                        let (m, a) = disk_integral(sol, (t, x), r, h, |u| u);
                        if a > 0.0 {
                            m / a
                        } else {
                            f64::NAN
                        }
                    };
                    let tr = [n - 2, n - 1].map(|k| (avg(radii[k], Half::Left(s)), avg(radii[k], Half::Right(s))));
                    rec.traces_match = Some((tr[1].0 - fr.ul).abs() <= 2.0 * dv && (tr[1].1 - fr.ur).abs() <= 2.0 * dv);
                    rec.traces = Some(tr);
                    rec.speed = Some(s);
                }
            }
            rec
        })
        .collect()
}

fn nearest_front(sol: &FrontTrackingSolution, t: f64, x: f64, cap: f64) -> Option<usize> {
    sol.fronts
        .iter()
        .enumerate()
        .filter(|(_, fr)| fr.tb <= t + cap && fr.td >= t - cap)
        .map(|(f, fr)| (f, (fr.x_at(t.clamp(fr.tb, fr.td)) - x).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|p| p.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub lipschitz: f64,
    /// no curve of the restricted class: the straight envelope x̄ + L(t − t̄)
    pub degenerate: bool,
    /// weight of hypograph curves of the class strictly above the envelope
    pub hyp_violation: f64,
    /// weight of epigraph curves of the mirrored class strictly below it
    pub epi_violation: f64,
}

/// First time ≥ t̄ at which the curve's level leaves (a, b), or its end.
fn exit_time(c: &Curve, tbar: f64, a: (f64, f64)) -> f64 {
    let inside = |v: f64| v > a.0 && v < a.1;
    for k in 0..c.levels.len() {
        let (ts, te) = (c.knots[k].0, c.knots[k + 1].0);
        if te < tbar {
            continue;
        }
        if !inside(c.levels[k]) {
            return ts.max(tbar);
        }
    }
    c.t1
}

/// Upper Lipschitz envelope of the hypograph curves that sit left of x̄ at t̄ with levels in
/// A_l, and the barrier test against both families.
pub fn envelope_curve(
    hyp: &WeightedCurveFamily,
    epi: &WeightedCurveFamily,
    flux: &Flux,
    p: (f64, f64),
    a_l: (f64, f64),
    samples: usize,
) -> Envelope {
    let (tbar, xbar) = p;
    let t_end = hyp.t_final;
    let n = samples.max(2);
    let times: Vec<f64> = (0..n).map(|i| tbar + (t_end - tbar) * i as f64 / (n - 1) as f64).collect();
    let lip = flux.max_abs_df();
    let inside = |v: f64| v > a_l.0 && v < a_l.1;
    let alive = |c: &Curve| c.t0 <= tbar && c.t1 > tbar;
    let hyp_class: Vec<(Curve, f64, f64)> = hyp
        .weighted()
        .filter(|(c, _)| alive(c) && c.x_at(tbar) <= xbar && inside(c.value_at(tbar)))
        .map(|(c, w)| {
            let e = exit_time(&c, tbar, a_l);
            (c, w, e)
        })
        .collect();
    let mut raw = vec![f64::NEG_INFINITY; n];
    raw[0] = xbar;
    for (c, _, e) in &hyp_class {
        for (i, &t) in times.iter().enumerate() {
            if t <= *e && t <= c.t1 {
                raw[i] = raw[i].max(c.x_at(t));
            }
        }
    }
    let degenerate = hyp_class.is_empty();
    // smallest L-Lipschitz majorant by a forward and a backward sweep
    let mut values = raw.clone();
    for i in 1..n {
        let step = lip * (times[i] - times[i - 1]);
        values[i] = values[i].max(values[i - 1] - step);
    }
    for i in (0..n - 1).rev() {
        let step = lip * (times[i + 1] - times[i]);
        values[i] = values[i].max(values[i + 1] - step);
    }
    if degenerate {
        values = times.iter().map(|&t| xbar + lip * (t - tbar)).collect();
    }
    let tol = 1e-9 * (1.0 + xbar.abs());
    let env = |i: usize| values[i];
    let hyp_violation = hyp_class
        .iter()
        .filter(|(c, _, e)| times.iter().enumerate().any(|(i, &t)| t <= *e && t <= c.t1 && c.x_at(t) > env(i) + tol))
        .map(|(_, w, _)| w)
        .sum();
    let epi_violation = epi
        .weighted()
        .filter(|(c, _)| alive(c) && c.x_at(tbar) >= xbar && inside(c.value_at(tbar)))
        .filter(|(c, _)| {
            let e = exit_time(c, tbar, a_l);
            times.iter().enumerate().any(|(i, &t)| t <= e && t <= c.t1 && c.x_at(t) < env(i) - tol)
        })
        .map(|(_, w)| w)
        .sum();
    Envelope { times, values, lipschitz: lip, degenerate, hyp_violation, epi_violation }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeAlternative {
    pub h: f64,
    pub radius: f64,
    /// |{u > v̄ − δ} ∩ B_r| / r²
    pub area_ratio: f64,
    pub nu0_ratio: f64,
    pub nu1_ratio: f64,
    /// attained constants: area/𝔥, ν₀/𝔥², ν₁/𝔥³
    pub constants: [f64; 3],
    pub holds: [bool; 3],
}

/// The three quantities of the alternative at (t̄, γˣ(t̄)) on scale r, each compared with
/// `c` times its power of 𝔥⁻(γᵛ(t̄), δ).
#[allow(clippy::too_many_arguments)]
pub fn three_alternative(
    curve: &Curve,
    tbar: f64,
    delta: f64,
    nu0: &PlaneMeasure,
    nu1: &PlaneMeasure,
    sol: &FrontTrackingSolution,
    r: f64,
    c: f64,
) -> Result<ThreeAlternative> {
    let vbar = curve.value_at(tbar);
    let h = nondegeneracy_h(&sol.flux, vbar, delta, Side::Minus)?;
    let p = (tbar, curve.x_at(tbar));
    let area = disk_integral(sol, p, r, Half::Whole, |u| if u > vbar - delta { 1.0 } else { 0.0 }).0;
    let area_ratio = area / (r * r);
    let nu0_ratio = nu0.ball_mass(p.0, p.1, r) / r;
    let nu1_ratio = nu1.ball_mass(p.0, p.1, r) / r;
    let constants = [area_ratio / h, nu0_ratio / (h * h), nu1_ratio / (h * h * h)];
    Ok(ThreeAlternative { h, radius: r, area_ratio, nu0_ratio, nu1_ratio, constants, holds: constants.map(|k| k >= c) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceViolation {
    pub t: f64,
    pub x: f64,
    pub atoms: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceStructure {
    /// columns of interior μ₀ away from the fronts
    pub columns: usize,
    pub violations: Vec<SourceViolation>,
    pub pass: bool,
}

/// Off the front set, every (t, x) column of μ₀ must be one signed atom sitting at the
/// solution value.
pub fn source_structure_check(mu0: &AtomicMeasure3, sol: &FrontTrackingSolution, r: f64, v_tol: f64) -> SourceStructure {
    source_structure_off(mu0, sol, 0..sol.fronts.len(), r, v_tol)
}

/// `source_structure_check` with only the listed fronts counted as the jump set.
pub fn source_structure_off(
    mu0: &AtomicMeasure3,
    sol: &FrontTrackingSolution,
    jump_set: impl IntoIterator<Item = usize>,
    r: f64,
    v_tol: f64,
) -> SourceStructure {
    let idx = FrontIndex::subset(sol, jump_set);
    let mut cols: BTreeMap<(u64, u64), Vec<(f64, f64)>> = BTreeMap::new();
    for a in &mu0.atoms {
        if a.w == 0.0 || idx.distance(a.t, a.x, r) <= r {
            continue;
        }
        cols.entry((a.t.to_bits(), a.x.to_bits())).or_default().push((a.v, a.w));
    }
    let mut violations = Vec::new();
    for (&(tb, xb), col) in &cols {
        let (t, x) = (f64::from_bits(tb), f64::from_bits(xb));
        let mut levels: Vec<(f64, f64)> = Vec::new();
        for &(v, w) in col {
            match levels.iter_mut().find(|l| (l.0 - v).abs() <= v_tol) {
                Some(l) => l.1 += w,
                None => levels.push((v, w)),
            }
        }
        levels.retain(|l| l.1 != 0.0);
        let u = sol.value_at(t, x);
        let reason = if levels.len() > 1 {
            Some(format!("{} atoms in the column", levels.len()))
        } else if let Some(&(v, _)) = levels.first() {
            ((v - u).abs() > v_tol).then(|| format!("atom at v = {v} but u = {u}"))
        } else {
            None
        };
        if let Some(reason) = reason {
            violations.push(SourceViolation { t, x, atoms: col.len(), reason });
        }
    }
    SourceStructure { columns: cols.len(), pass: violations.is_empty(), violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::flux::{entropy_flux, Entropy};
    use crate::front::{front_track, FrontTrackParams};
    use crate::lagrangian::{aggregate_measures, build_epigraph_rep, build_hypograph_rep, exact_mu1};
    use crate::measure::Atom;
    use crate::pwc::PiecewiseConstant;

    fn shock() -> FrontTrackingSolution {
        front_track(&fixtures::shock(), &Flux::burgers(), 1.0, FrontTrackParams::default()).unwrap()
    }

    #[test]
    fn shock_line_density_ratio() {
        let sol = shock();
        let (_, nu1) = project_marginals(&AtomicMeasure3::default(), &exact_mu1(&sol));
        assert!((nu1.mass() - 1.0 / 12.0).abs() < 1e-4);
        // ball of radius r meets the line x = t/2 over a t-length 2r·cos θ
        let theta = 0.5f64.atan();
        let q = density_ratio(&nu1, (0.5, 0.25), &[0.01])[0];
        let expect = 2.0 * nu1.mass() * theta.cos();
        assert!((q - expect).abs() < 1e-9, "{q} {expect}");
        assert_eq!(density_ratio(&nu1, (0.5, 0.9), &[0.01])[0], 0.0);
    }

    #[test]
    fn oscillation_cases() {
        let sol = shock();
        let radii = [0.08, 0.04, 0.02];
        let flat = vmo_test(&sol, (0.5, -0.5), &radii);
        assert!(flat.oscillation.iter().all(|&o| o < 1e-12) && flat.vanishing);
        let jump = vmo_test(&sol, (0.5, 0.25), &radii);
        // traces 1 and 0 on two half disks: ∫|u − ½| = π r²/2
        for o in &jump.oscillation {
            assert!((o - std::f64::consts::FRAC_PI_2).abs() < 1e-6, "{o}");
        }
        assert!(!jump.vanishing);
        let fan = front_track(&fixtures::rarefaction(), &Flux::burgers(), 1.0, FrontTrackParams { dv: 1.0 / 1024.0, max_fronts: 10_000 }).unwrap();
        let rep = vmo_test(&fan, (0.5, 0.25), &radii);
        assert!(rep.vanishing && rep.slope > 0.8, "{rep:?}");
    }

    #[test]
    fn jump_identity_on_the_shock() {
        let sol = shock();
        let fam = build_hypograph_rep(&sol, 256).unwrap();
        let pair = entropy_flux(&Flux::burgers(), &Entropy::quadratic()).unwrap();
        let rep = jump_identity_check(&sol, &fam, &pair, 0.0);
        assert_eq!(rep.rows.len(), 1);
        assert!((rep.rows[0].trace + 1.0 / 12.0).abs() < 1e-12);
        assert!(rep.max_defect < 2.0 / 256.0);
        let ident = entropy_flux(&Flux::burgers(), &Entropy::identity()).unwrap();
        let rep = jump_identity_check(&sol, &fam, &ident, 0.0);
        assert!(rep.max_defect < 1e-12 && rep.rows[0].trace.abs() < 1e-12);
    }

    #[test]
    fn concentration_cases() {
        let sol = shock();
        let (_, mu1) = aggregate_measures(&build_hypograph_rep(&sol, 64).unwrap());
        assert_eq!(concentration_report(&mu1.marginal_tx(), &sol, 1e-9), 1.0);
        assert_eq!(concentration_report(&PlaneMeasure::default(), &sol, 1e-9), 1.0);
        let off = PlaneMeasure { atoms: vec![(0.5, 0.25, 1.0), (0.5, 0.75, 1.0)], lines: vec![] };
        assert_eq!(concentration_profile(&off, &sol, &[1e-3, 1.0]), vec![0.5, 1.0]);
    }

    #[test]
    fn classification_splits_shock_and_smooth_points() {
        let sol = shock();
        let (_, nu1) = project_marginals(&AtomicMeasure3::default(), &exact_mu1(&sol));
        let radii = probe_radii(diameter(&sol));
        let recs = classify_points(&sol, &nu1, &[(0.5, 0.25), (0.5, -0.3)], &radii, 1.0 / 256.0);
        assert_eq!(recs[0].class, PointClass::Jump);
        assert_eq!(recs[0].traces_match, Some(true));
        assert_eq!(recs[1].class, PointClass::Vmo);
    }

    #[test]
    fn envelopes() {
        let c = PiecewiseConstant::constant(0.6);
        let sol = front_track(&c, &Flux::burgers(), 1.0, FrontTrackParams::default()).unwrap();
        let hyp = build_hypograph_rep(&sol, 64).unwrap();
        let epi = build_epigraph_rep(&sol, 64).unwrap();
        let env = envelope_curve(&hyp, &epi, &Flux::burgers(), (0.2, 0.3), (0.0, 1.0), 50);
        assert!(!env.degenerate && env.hyp_violation == 0.0);
        // fastest level below 0.6 is the top band's midpoint
        let slope = (env.values[49] - env.values[0]) / 0.8;
        assert!((slope - 0.6).abs() < 1.0 / 64.0, "{slope}");
        let none = envelope_curve(&hyp, &epi, &Flux::burgers(), (0.2, 0.3), (0.7, 1.0), 10);
        assert!(none.degenerate && (none.values[9] - 1.1).abs() < 1e-12);

        let sol = shock();
        let hyp = build_hypograph_rep(&sol, 128).unwrap();
        let epi = build_epigraph_rep(&sol, 128).unwrap();
        let env = envelope_curve(&hyp, &epi, &Flux::burgers(), (0.2, 0.1), (0.0, 1.0), 40);
        assert_eq!((env.hyp_violation, env.epi_violation), (0.0, 0.0));
        for (t, x) in env.times.iter().zip(&env.values) {
            assert!((x - 0.5 * t).abs() < 0.02, "{t} {x}");
        }
    }

    #[test]
    fn alternatives_and_sources() {
        let sol = shock();
        let hyp = build_hypograph_rep(&sol, 64).unwrap();
        let (mu0, mu1) = aggregate_measures(&hyp);
        let (nu0, nu1) = project_marginals(&crate::lagrangian::interior(&mu0, 1.0), &mu1);
        let c = hyp.curves.iter().find(|c| c.levels[0] > 0.7 && c.knots[0].1 < -0.2).unwrap();
        let alt = three_alternative(c, 0.1, 0.1, &nu0, &nu1, &sol, 0.02, 1e-2).unwrap();
        assert!(alt.holds[0] && (alt.h - 0.1 / 3.0).abs() < 1e-10);

        let rep = source_structure_check(&crate::lagrangian::interior(&mu0, 1.0), &sol, 1e-9, 1e-9);
        assert!(rep.pass && rep.columns == 0);
        let bad = AtomicMeasure3 {
            atoms: vec![Atom { t: 0.5, x: -0.4, v: 0.2, w: 1.0 }, Atom { t: 0.5, x: -0.4, v: 0.9, w: -1.0 }],
            ..Default::default()
        };
        let rep = source_structure_check(&bad, &sol, 1e-9, 1e-9);
        assert!(!rep.pass && rep.violations[0].atoms == 2);
        let good = AtomicMeasure3 { atoms: vec![Atom { t: 0.5, x: -0.4, v: 1.0, w: -0.3 }], ..Default::default() };
        assert!(source_structure_check(&good, &sol, 1e-9, 1e-9).pass);
    }
}
