//! Lagrangian representation of the hypograph and epigraph of a front-tracking solution:
//! weighted families of characteristic curves, their kinetic measures, and the checks
//! that tie them back to the solution.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::front::{FrontTrackingSolution, NONE};
use crate::measure::{Atom, AtomicMeasure3, Segment, Sheet};
use crate::quad::gl8_panels;
use crate::testfn::TestFunction;

const TIME_TOL: f64 = 1e-12;
const MAX_STEPS: usize = 1_000_000;
const VERTEX_ITERS: usize = 8;

fn par_tol(s: f64) -> f64 {
    1e-12 * (1.0 + s.abs())
}

fn pos_tol(x: f64) -> f64 {
    1e-10 * (1.0 + x.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphSide {
    Hypograph,
    Epigraph,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveEnd {
    /// reached the final time
    Final,
    /// no reflected level exists at this front
    Absorbed(usize),
    /// unresolved vertex or step cap
    Defect,
}

/// γ = (γˣ, γᵛ) on [t0, t1]: straight pieces of slope f_δ′(level) joined at jumps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub t0: f64,
    pub t1: f64,
    /// (t, x) at the start, at each jump, and at the end
    pub knots: Vec<(f64, f64)>,
    /// levels[k] holds between knots[k] and knots[k + 1]
    pub levels: Vec<f64>,
    /// front responsible for the jump at knots[k + 1]
    pub jump_fronts: Vec<usize>,
    /// front the curve was emitted from; NONE for curves starting at t = 0
    pub born_on: usize,
    pub end: CurveEnd,
}

impl Curve {
    fn piece(&self, t: f64) -> usize {
        let k = self.knots.partition_point(|p| p.0 <= t);
        k.clamp(1, self.levels.len()) - 1
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.levels[self.piece(t)]
    }

    pub fn x_at(&self, t: f64) -> f64 {
        let k = self.piece(t);
        let (ta, xa) = self.knots[k];
        let (tb, xb) = self.knots[k + 1];
        if tb > ta {
            xa + (xb - xa) * (t - ta) / (tb - ta)
        } else {
            xa
        }
    }

    pub fn total_variation(&self) -> f64 {
        self.levels.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    /// (t, x, from, to, front) for every jump.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64, f64, f64, usize)> + '_ {
        (0..self.jump_fronts.len()).map(move |k| {
            let (t, x) = self.knots[k + 1];
            (t, x, self.levels[k], self.levels[k + 1], self.jump_fronts[k])
        })
    }

    /// One JSON record: interval, x-knots, v-plateaus and weight.
    pub fn to_json_line(&self, weight: f64) -> String {
        let plateaus: Vec<(f64, f64)> = self.levels.iter().enumerate().map(|(k, &v)| (self.knots[k].0, v)).collect();
        serde_json::json!({
            "interval": [self.t0, self.t1],
            "x_knots": self.knots,
            "v_plateaus": plateaus,
            "weight": weight,
        })
        .to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedCurveFamily {
    pub side: GraphSide,
    /// discrete curves with their weights
    pub curves: Vec<Curve>,
    pub weights: Vec<f64>,
    pub tubes: Vec<Tube>,
    pub n_v: usize,
    pub lo: f64,
    pub hi: f64,
    pub t_final: f64,
}

impl WeightedCurveFamily {
    pub fn empty(side: GraphSide, lo: f64, hi: f64, t_final: f64) -> Self {
        WeightedCurveFamily { side, curves: Vec::new(), weights: Vec::new(), tubes: Vec::new(), n_v: 0, lo, hi, t_final }
    }

    /// Discrete curves, then tube midlines, each with its ω-mass.
    pub fn weighted(&self) -> impl Iterator<Item = (Curve, f64)> + '_ {
        self.curves
            .iter()
            .cloned()
            .zip(self.weights.iter().copied())
            .chain(self.tubes.iter().map(|t| (t.representative(), t.mass)))
    }

    pub fn len(&self) -> usize {
        self.curves.len() + self.tubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.tubes.iter().map(|t| t.mass).sum::<f64>()
    }

    pub fn defects(&self) -> usize {
        self.curves.iter().chain(self.tubes.iter().map(|t| &t.a)).filter(|c| c.end == CurveEnd::Defect).count()
    }

    /// Σ weight·TotVar(γᵛ).
    pub fn variation_budget(&self) -> f64 {
        self.curves.iter().zip(&self.weights).map(|(c, w)| w * c.total_variation()).sum::<f64>()
            + self.tubes.iter().map(|t| t.mass * t.a.total_variation()).sum::<f64>()
    }

    /// Number of curves (tubes counted once) with an endpoint strictly inside (0, T).
    pub fn interior_endpoints(&self) -> usize {
        let inside = |t: f64| t > TIME_TOL && t < self.t_final - TIME_TOL;
        self.curves
            .iter()
            .chain(self.tubes.iter().map(|t| &t.a))
            .map(|c| inside(c.t0) as usize + inside(c.t1) as usize)
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepOptions {
    pub n_v: usize,
    /// allow births and absorptions where the front's kinetic source demands them;
    /// otherwise an absorbed curve is a "reflection" error
    pub allow_sources: bool,
    /// group initial curves into exact tubes; otherwise one discrete curve per x-cell
    pub tubes: bool,
}

impl RepOptions {
    pub fn new(n_v: usize) -> Self {
        RepOptions { n_v, allow_sources: false, tubes: false }
    }
}

/// Exact kinetic μ₁ density Φ on a front: Φ(v) = ±(h(v) − h(u_low)) with h = f_δ − σv,
/// + for increasing fronts, − for decreasing ones. Nodes are the f_δ breakpoints.
pub fn front_density(sol: &FrontTrackingSolution, f: usize) -> (Vec<f64>, Vec<f64>) {
    let fr = &sol.fronts[f];
    let (a, b) = (fr.ul.min(fr.ur), fr.ul.max(fr.ur));
    let sgn = if fr.ul < fr.ur { 1.0 } else { -1.0 };
    let pl = &sol.pl;
    let mut vs = vec![a];
    let i = pl.v.partition_point(|&p| p <= a);
    let j = pl.v.partition_point(|&p| p < b);
    vs.extend_from_slice(&pl.v[i..j.max(i)]);
    vs.push(b);
    let h = |v: f64| pl.eval(v) - fr.speed * v;
    let base = h(a);
    let ps = vs.iter().map(|&v| sgn * (h(v) - base)).collect();
    (vs, ps)
}

pub fn front_sheet(sol: &FrontTrackingSolution, f: usize) -> Sheet {
    let fr = &sol.fronts[f];
    let (v, d) = front_density(sol, f);
    Sheet { t0: fr.tb, t1: fr.td, x0: fr.xb, speed: fr.speed, v, d }
}

/// Exact μ₁ of the front-tracking solution, one sheet per front.
pub fn exact_mu1(sol: &FrontTrackingSolution) -> AtomicMeasure3 {
    AtomicMeasure3 {
        sheets: (0..sol.fronts.len())
            .filter(|&f| sol.fronts[f].td > sol.fronts[f].tb)
            .map(|f| front_sheet(sol, f))
            .filter(|s| s.d.iter().any(|&d| d != 0.0))
            .collect(),
        ..Default::default()
    }
}

fn interp(vs: &[f64], ps: &[f64], v: f64) -> f64 {
    let k = vs.partition_point(|&p| p <= v).clamp(1, vs.len() - 1) - 1;
    let (a, b) = (vs[k], vs[k + 1]);
    if b > a {
        ps[k] + (ps[k + 1] - ps[k]) * (v - a) / (b - a)
    } else {
        ps[k]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reflection {
    Level(f64),
    /// Φ never comes back to Φ(v) below v
    Absorbed,
    /// Φ does not decrease into v from below: v sits on a local maximum
    Degenerate,
}

/// Highest level below `v` where Φ comes back down to Φ(v).
pub fn reflect_on(vs: &[f64], ps: &[f64], v: f64) -> Reflection {
    let target = interp(vs, ps, v);
    let mut k = vs.partition_point(|&p| p < v);
    let (mut pv, mut pp) = (v, target);
    let mut first = true;
    while k > 0 {
        k -= 1;
        if ps[k] <= target {
            if first || pp <= ps[k] {
                return Reflection::Degenerate;
            }
            return Reflection::Level(pv - (pv - vs[k]) * (pp - target) / (pp - ps[k]));
        }
        first = false;
        pv = vs[k];
        pp = ps[k];
    }
    Reflection::Absorbed
}

pub fn reflected_level(vs: &[f64], ps: &[f64], v: f64) -> Option<f64> {
    match reflect_on(vs, ps, v) {
        Reflection::Level(s) => Some(s),
        _ => None,
    }
}

struct Tracer<'a> {
    sol: &'a FrontTrackingSolution,
}

/// Combinatorial record of one step: (kind, front or event, level bits).
type Sig = (u8, usize, u64);

enum Step {
    Cross(usize, bool),
    Death(usize),
    End,
}

impl<'a> Tracer<'a> {
    fn speed(&self, v: f64) -> f64 {
        self.sol.pl.speed(v)
    }

    fn reflect(&self, g: usize, v: f64) -> Reflection {
        let (vs, ps) = front_density(self.sol, g);
        reflect_on(&vs, &ps, v)
    }

    fn incoming(&self, g: usize, v: f64, a: f64) -> bool {
        let f = &self.sol.fronts[g];
        let (lo, hi) = (f.ul.min(f.ur), f.ul.max(f.ur));
        let sgn = if f.ul < f.ur { 1.0 } else { -1.0 };
        v >= lo && v < hi && sgn * (a - f.speed) < -par_tol(f.speed)
    }

    fn trace(&self, t0: f64, x0: f64, v0: f64, l0: usize, r0: usize, born_on: usize) -> (Curve, Vec<Sig>) {
        let mut sig = Vec::new();
        let c = self.trace_into(t0, x0, v0, l0, r0, born_on, &mut sig);
        (c, sig)
    }

    #[allow(clippy::too_many_arguments)]
    fn trace_into(&self, t0: f64, x0: f64, v0: f64, l0: usize, r0: usize, born_on: usize, sig: &mut Vec<Sig>) -> Curve {
        let sol = self.sol;
        let fr = &sol.fronts;
        let topo = &sol.topo;
        let t_final = sol.t_final;
        let mut c = Curve {
            t0,
            t1: t_final,
            knots: vec![(t0, x0)],
            levels: vec![v0],
            jump_fronts: Vec::new(),
            born_on,
            end: CurveEnd::Final,
        };
        let (mut t, mut x, mut v, mut l, mut r) = (t0, x0, v0, l0, r0);
        let mut a = self.speed(v);
        let jump = |c: &mut Curve, t: f64, x: f64, to: f64, g: usize| {
            c.knots.push((t, x));
            c.levels.push(to);
            c.jump_fronts.push(g);
        };
        for _ in 0..MAX_STEPS {
            let mut te = t_final;
            let mut step = Step::End;
            let mut deaths = [f64::INFINITY; 2];
            for (k, &g) in [l, r].iter().enumerate() {
                if g != NONE && fr[g].death != NONE {
                    deaths[k] = fr[g].td;
                }
            }
            if r != NONE && a > fr[r].speed + par_tol(fr[r].speed) {
                let tc = (t + (fr[r].x_at(t) - x) / (a - fr[r].speed)).max(t);
                if tc < te {
                    te = tc;
                    step = Step::Cross(r, true);
                }
            }
            if l != NONE && a < fr[l].speed - par_tol(fr[l].speed) {
                let tc = (t + (x - fr[l].x_at(t)) / (fr[l].speed - a)).max(t);
                if tc < te {
                    te = tc;
                    step = Step::Cross(l, false);
                }
            }
            let dmin = deaths[0].min(deaths[1]);
            if dmin <= te + TIME_TOL && dmin < t_final {
                te = dmin;
                step = Step::Death(if deaths[0] <= deaths[1] { l } else { r });
            }
            match step {
                Step::End => {
                    c.knots.push((t_final, x + a * (t_final - t)));
                    return c;
                }
                Step::Death(g) => {
                    let e = fr[g].death;
                    let ev = &sol.events[e];
                    let xc = x + a * (te - t);
                    t = te;
                    if (xc - ev.x).abs() > pos_tol(ev.x) {
                        sig.push((0, e, 0));
                        x = xc;
                        if g == r {
                            r = ev.outgoing.first().copied().unwrap_or(topo.ev_right[e]);
                        } else {
                            l = ev.outgoing.last().copied().unwrap_or(topo.ev_left[e]);
                        }
                        continue;
                    }
                    // vertex: the curve passes through the collision point
                    x = ev.x;
                    let out = &ev.outgoing;
                    let ul_e = ev.incoming.first().map(|&i| fr[i].ul).unwrap_or(fr[out[0]].ul);
                    let mut resolved = false;
                    for _ in 0..VERTEX_ITERS {
                        let mut k = 0;
                        while k < out.len() {
                            let s = fr[out[k]].speed;
                            let tie = (s - a).abs() <= par_tol(s);
                            if (!tie && s < a) || (tie && fr[out[k]].ur > v) {
                                k += 1;
                            } else {
                                break;
                            }
                        }
                        let region = if k == 0 { ul_e } else { fr[out[k - 1]].ur };
                        if v < region {
                            sig.push((1, e, v.to_bits()));
                            l = if k == 0 { topo.ev_left[e] } else { out[k - 1] };
                            r = if k == out.len() { topo.ev_right[e] } else { out[k] };
                            resolved = true;
                            break;
                        }
                        let cands = [out.get(k).copied(), k.checked_sub(1).map(|i| out[i])];
                        let Some(g) = cands.into_iter().flatten().find(|&g| self.incoming(g, v, a)) else {
                            break;
                        };
                        let Reflection::Level(s) = self.reflect(g, v) else { break };
                        sig.push((3, g, s.to_bits()));
                        jump(&mut c, t, x, s, g);
                        v = s;
                        a = self.speed(v);
                    }
                    if !resolved {
                        sig.push((5, e, 0));
                        c.t1 = t;
                        c.knots.push((t, x));
                        c.end = CurveEnd::Defect;
                        return c;
                    }
                }
                Step::Cross(g, from_left) => {
                    t = te;
                    x = fr[g].x_at(t);
                    let other = if from_left { fr[g].ur } else { fr[g].ul };
                    let pass = |l: &mut usize, r: &mut usize| {
                        if from_left {
                            *l = g;
                            *r = topo.right_at(g, t);
                        } else {
                            *r = g;
                            *l = topo.left_at(g, t);
                        }
                    };
                    if v < other {
                        sig.push((2, g, 0));
                        pass(&mut l, &mut r);
                        continue;
                    }
                    let s = if self.incoming(g, v, a) { self.reflect(g, v) } else { Reflection::Degenerate };
                    let s = match s {
                        Reflection::Level(s) => s,
                        other => {
                            sig.push((4, g, 0));
                            c.t1 = t;
                            c.knots.push((t, x));
                            c.end = if other == Reflection::Absorbed { CurveEnd::Absorbed(g) } else { CurveEnd::Defect };
                            return c;
                        }
                    };
                    sig.push((3, g, s.to_bits()));
                    jump(&mut c, t, x, s, g);
                    v = s;
                    a = self.speed(v);
                    let sg = fr[g].speed;
                    let crosses = if (a - sg).abs() <= par_tol(sg) {
                        other > v
                    } else {
                        (a > sg) == from_left
                    };
                    if crosses {
                        pass(&mut l, &mut r);
                    }
                }
            }
        }
        sig.push((5, NONE, 0));
        c.t1 = t;
        c.knots.push((t, x));
        c.end = CurveEnd::Defect;
        c
    }
}

/// Unmatched rising parts of Φ on front `f`, emitted as curves at the band rate.
fn births(sol: &FrontTrackingSolution, f: usize, n_v: usize, w0: f64) -> Vec<(f64, f64)> {
    let fr = &sol.fronts[f];
    if !(fr.td > fr.tb) {
        return Vec::new();
    }
    let (vs, ps) = front_density(sol, f);
    let scale = 1e-13 * (1.0 + ps.iter().fold(0.0f64, |m, p| m.max(p.abs())));
    let band = (sol.hi() - sol.lo()) / n_v as f64;
    let mut out = Vec::new();
    let mut m = *ps.last().unwrap();
    for k in (0..vs.len() - 1).rev() {
        let (p0, p1) = (ps[k], ps[k + 1]);
        if p1 > p0 + scale && m > p0 + scale {
            let top = if p1 <= m { vs[k + 1] } else { vs[k] + (vs[k + 1] - vs[k]) * (m - p0) / (p1 - p0) };
            let slope = (p1 - p0) / (vs[k + 1] - vs[k]);
            let mut lo = vs[k];
            while lo < top {
                let j = ((lo - sol.lo()) / band).floor() + 1.0;
                let hi = (sol.lo() + j * band).min(top).max(lo + 1e-15);
                let rate = slope * (hi - lo);
                let level = 0.5 * (lo + hi);
                let dt = w0 / rate;
                let mut i = 0.0;
                while fr.tb + (i + 0.5) * dt < fr.td {
                    out.push((fr.tb + (i + 0.5) * dt, level));
                    i += 1.0;
                }
                lo = hi;
            }
        }
        m = m.min(p0);
    }
    out
}

/// Continuum of curves between two edge curves with identical step sequences; every
/// curve in between is the affine blend of the edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    pub a: Curve,
    pub b: Curve,
    pub mass: f64,
}

impl Tube {
    /// The curve at blend parameter λ ∈ [0, 1].
    pub fn at(&self, lam: f64) -> Curve {
        let mut c = self.a.clone();
        for (k, (p, q)) in self.a.knots.iter().zip(&self.b.knots).enumerate() {
            c.knots[k] = (p.0 + lam * (q.0 - p.0), p.1 + lam * (q.1 - p.1));
        }
        c.t0 = c.knots[0].0;
        c.t1 = c.knots.last().unwrap().0;
        c
    }

    pub fn representative(&self) -> Curve {
        self.at(0.5)
    }
}

#[derive(Default)]
struct Batch {
    curves: Vec<Curve>,
    weights: Vec<f64>,
    tubes: Vec<Tube>,
}

impl Batch {
    fn append(&mut self, o: Batch) {
        self.curves.extend(o.curves);
        self.weights.extend(o.weights);
        self.tubes.extend(o.tubes);
    }
}

const BISECT_DEPTH: usize = 12;

impl<'a> Tracer<'a> {
    /// Curves starting at t = 0 at level v for x0 ∈ [p, q], `density` weight per unit x.
    #[allow(clippy::too_many_arguments)]
    fn sweep(&self, p: f64, q: f64, n: usize, v: f64, l: usize, r: usize, density: f64, out: &mut Batch) {
        let xs: Vec<f64> = (0..=n).map(|k| if k == n { q } else { p + (q - p) * k as f64 / n as f64 }).collect();
        let tr: Vec<(Curve, Vec<Sig>)> = xs.iter().map(|&x| self.trace(0.0, x, v, l, r, NONE)).collect();
        let mut i = 0;
        while i < n {
            if tr[i].1 == tr[i + 1].1 {
                let mut k = i + 1;
                while k < n && tr[k + 1].1 == tr[i].1 {
                    k += 1;
                }
                out.tubes.push(Tube { a: tr[i].0.clone(), b: tr[k].0.clone(), mass: density * (xs[k] - xs[i]) });
                i = k;
            } else {
                self.bisect(xs[i], xs[i + 1], &tr[i], &tr[i + 1], v, l, r, density, BISECT_DEPTH, out);
                i += 1;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn bisect(
        &self,
        p: f64,
        q: f64,
        a: &(Curve, Vec<Sig>),
        b: &(Curve, Vec<Sig>),
        v: f64,
        l: usize,
        r: usize,
        density: f64,
        depth: usize,
        out: &mut Batch,
    ) {
        let m = 0.5 * (p + q);
        let mid = self.trace(0.0, m, v, l, r, NONE);
        if depth == 0 {
            out.curves.push(mid.0);
            out.weights.push(density * (q - p));
            return;
        }
        for (x0, x1, e0, e1) in [(p, m, a, &mid), (m, q, &mid, b)] {
            if e0.1 == e1.1 {
                out.tubes.push(Tube { a: e0.0.clone(), b: e1.0.clone(), mass: density * (x1 - x0) });
            } else {
                self.bisect(x0, x1, e0, e1, v, l, r, density, depth - 1, out);
            }
        }
    }
}

fn trace_family(sol: &FrontTrackingSolution, opts: RepOptions) -> Result<Batch> {
    let n_v = opts.n_v;
    if n_v < 2 {
        return Err(Error::Invalid(format!("need at least two levels, got {n_v}")));
    }
    let (lo, hi) = (sol.lo(), sol.hi());
    let t_final = sol.t_final;
    let dv = (hi - lo) / n_v as f64;
    let dx = 1.0 / (2.0 * n_v as f64);
    let w0 = dx * dv;
    let (ha, hb) = sol.front_hull();
    let pad = sol.speed_bound() * t_final;
    let (xa, xb) = (ha - pad, hb + pad);
    let init = &sol.topo.initial;
    let fr = &sol.fronts;

    let mut cuts = vec![xa];
    cuts.extend(sol.initial.breaks.iter().copied().filter(|&b| b > xa && b < xb));
    cuts.push(xb);
    cuts.dedup();
    // (p, q, samples, u0, L, R) for each piece of the initial data
    let pieces: Vec<(f64, f64, usize, f64, usize, usize)> = cuts
        .windows(2)
        .map(|w| {
            let m = 0.5 * (w[0] + w[1]);
            let k = init.partition_point(|&f| fr[f].xb <= m);
            let l = if k == 0 { NONE } else { init[k - 1] };
            let r = init.get(k).copied().unwrap_or(NONE);
            let n = ((w[1] - w[0]) / dx).ceil().max(1.0) as usize;
            (w[0], w[1], n, sol.initial.eval(m), l, r)
        })
        .collect();
    let tracer = Tracer { sol };
    let use_tubes = opts.tubes;
    let mut batch = (0..n_v)
        .into_par_iter()
        .map(|j| {
            let base = lo + j as f64 * dv;
            let mut out = Batch::default();
            for &(p, q, n, u0, l, r) in &pieces {
                if base >= u0 {
                    continue;
                }
                // the top band is cut at u0
                let top = (base + dv).min(u0);
                let (v, band) = (0.5 * (base + top), top - base);
                if use_tubes {
                    tracer.sweep(p, q, n, v, l, r, band, &mut out);
                } else {
                    let h = (q - p) / n as f64;
                    for i in 0..n {
                        out.curves.push(tracer.trace(0.0, p + (i as f64 + 0.5) * h, v, l, r, NONE).0);
                        out.weights.push(band * h);
                    }
                }
            }
            out
        })
        .reduce(Batch::default, |mut a, b| {
            a.append(b);
            a
        });
    if opts.allow_sources {
        let born: Vec<(f64, f64, f64, usize, usize, usize)> = (0..fr.len())
            .flat_map(|f| {
                births(sol, f, n_v, w0).into_iter().map(move |(t, v)| {
                    let x = fr[f].x_at(t);
                    let right = sol.pl.speed(v) > fr[f].speed;
                    let (l, r) = if right { (f, sol.topo.right_at(f, t)) } else { (sol.topo.left_at(f, t), f) };
                    (t, x, v, l, r, f)
                })
            })
            .collect();
        let curves: Vec<Curve> = born.par_iter().map(|&(t, x, v, l, r, b)| tracer.trace(t, x, v, l, r, b).0).collect();
        batch.weights.extend(std::iter::repeat(w0).take(curves.len()));
        batch.curves.extend(curves);
    } else {
        let ends = batch.curves.iter().chain(batch.tubes.iter().map(|t| &t.a));
        if let Some(c) = ends.into_iter().find(|c| matches!(c.end, CurveEnd::Absorbed(_))) {
            let CurveEnd::Absorbed(g) = c.end else { unreachable!() };
            let f = &fr[g];
            return Err(Error::Reflection(format!(
                "no reflected level for v = {} at front {g} ({} → {}, σ = {}) at t = {}",
                c.levels.last().unwrap(),
                f.ul,
                f.ur,
                f.speed,
                c.t1
            )));
        }
    }
    Ok(batch)
}

pub fn build_hypograph_rep_with(sol: &FrontTrackingSolution, opts: RepOptions) -> Result<WeightedCurveFamily> {
    let batch = trace_family(sol, opts)?;
    Ok(WeightedCurveFamily {
        side: GraphSide::Hypograph,
        curves: batch.curves,
        weights: batch.weights,
        tubes: batch.tubes,
        n_v: opts.n_v,
        lo: sol.lo(),
        hi: sol.hi(),
        t_final: sol.t_final,
    })
}

/// Hypograph curves of an entropy solution; an absorbed curve is a "reflection" error.
pub fn build_hypograph_rep(sol: &FrontTrackingSolution, n_v: usize) -> Result<WeightedCurveFamily> {
    build_hypograph_rep_with(sol, RepOptions::new(n_v))
}

/// Hypograph curves of the reflected solution lo + hi − u, mapped back by v ↦ lo + hi − v.
pub fn build_epigraph_rep_with(sol: &FrontTrackingSolution, opts: RepOptions) -> Result<WeightedCurveFamily> {
    let m = sol.mirrored();
    let mut fam = build_hypograph_rep_with(&m, opts)?;
    let (lo, hi) = (sol.lo(), sol.hi());
    let flip = |c: &mut Curve| c.levels.iter_mut().for_each(|v| *v = lo + hi - *v);
    fam.curves.iter_mut().for_each(flip);
    for t in &mut fam.tubes {
        flip(&mut t.a);
        flip(&mut t.b);
    }
    fam.side = GraphSide::Epigraph;
    Ok(fam)
}

pub fn build_epigraph_rep(sol: &FrontTrackingSolution, n_v: usize) -> Result<WeightedCurveFamily> {
    build_epigraph_rep_with(sol, RepOptions::new(n_v))
}

/// (μ₀^γ, μ₁^γ) scaled by `weight`.
pub fn curve_measures(c: &Curve, weight: f64) -> (AtomicMeasure3, AtomicMeasure3) {
    let (ts, xs) = c.knots[0];
    let (te, xe) = *c.knots.last().unwrap();
    let mu0 = AtomicMeasure3 {
        atoms: vec![
            Atom { t: ts, x: xs, v: c.levels[0], w: weight },
            Atom { t: te, x: xe, v: *c.levels.last().unwrap(), w: -weight },
        ],
        ..Default::default()
    };
    let segments = c
        .jumps()
        .filter(|j| j.2 != j.3)
        .map(|(t, x, from, to, _)| Segment {
            t,
            x,
            va: from.min(to),
            vb: from.max(to),
            density: if to < from { weight } else { -weight },
        })
        .collect();
    (mu0, AtomicMeasure3 { segments, ..Default::default() })
}

/// Endpoint atoms at the midpoint, or spread over eight points when the tube ends
/// inside (0, T).
fn tube_endpoint(p: (f64, f64), q: (f64, f64), v: f64, w: f64, t_final: f64, out: &mut Vec<Atom>) {
    let inside = |t: f64| t > TIME_TOL && t < t_final - TIME_TOL;
    if !(inside(p.0) || inside(q.0)) {
        out.push(Atom { t: 0.5 * (p.0 + q.0), x: 0.5 * (p.1 + q.1), v, w });
        return;
    }
    for i in 0..8 {
        let s = (i as f64 + 0.5) / 8.0;
        out.push(Atom { t: p.0 + s * (q.0 - p.0), x: p.1 + s * (q.1 - p.1), v, w: w / 8.0 });
    }
}

/// (μ₀, μ₁) of a tube: each jump is spread uniformly in time along the front it happens on.
pub fn tube_measures(tube: &Tube, t_final: f64) -> (AtomicMeasure3, AtomicMeasure3) {
    let (a, b, m) = (&tube.a, &tube.b, tube.mass);
    let mut atoms = Vec::with_capacity(2);
    tube_endpoint(a.knots[0], b.knots[0], a.levels[0], m, t_final, &mut atoms);
    tube_endpoint(*a.knots.last().unwrap(), *b.knots.last().unwrap(), *a.levels.last().unwrap(), -m, t_final, &mut atoms);
    let mut mu1 = AtomicMeasure3::default();
    for k in 0..a.jump_fronts.len() {
        let (from, to) = (a.levels[k], a.levels[k + 1]);
        if from == to {
            continue;
        }
        let (va, vb) = (from.min(to), from.max(to));
        let sign = if to < from { 1.0 } else { -1.0 };
        let (p, q) = (a.knots[k + 1], b.knots[k + 1]);
        let (p, q) = if p.0 <= q.0 { (p, q) } else { (q, p) };
        if q.0 - p.0 <= 1e-14 * (1.0 + q.0.abs()) {
            let (t, x) = (0.5 * (p.0 + q.0), 0.5 * (p.1 + q.1));
            mu1.segments.push(Segment { t, x, va, vb, density: sign * m });
        } else {
            let d = sign * m / (q.0 - p.0);
            mu1.sheets.push(Sheet {
                t0: p.0,
                t1: q.0,
                x0: p.1,
                speed: (q.1 - p.1) / (q.0 - p.0),
                v: vec![va, vb],
                d: vec![d, d],
            });
        }
    }
    (AtomicMeasure3 { atoms, ..Default::default() }, mu1)
}

fn raw_measures(fam: &WeightedCurveFamily) -> (AtomicMeasure3, AtomicMeasure3) {
    let discrete = fam.curves.par_iter().zip(fam.weights.par_iter()).map(|(c, &w)| curve_measures(c, w));
    let tubes = fam.tubes.par_iter().map(|t| tube_measures(t, fam.t_final));
    discrete
        .chain(tubes)
        .reduce(
            || (AtomicMeasure3::default(), AtomicMeasure3::default()),
            |mut a, b| {
                a.0.extend(b.0);
                a.1.extend(b.1);
                a
            },
        )
}

/// (μ₀, μ₁) = Σ weight·(μ₀^γ, μ₁^γ), consolidated.
pub fn aggregate_measures(fam: &WeightedCurveFamily) -> (AtomicMeasure3, AtomicMeasure3) {
    let (m0, m1) = raw_measures(fam);
    (m0.consolidate(), m1.consolidate())
}

/// Part of μ₀ strictly inside (0, T).
pub fn interior(mu0: &AtomicMeasure3, t_final: f64) -> AtomicMeasure3 {
    AtomicMeasure3 {
        atoms: mu0
            .atoms
            .iter()
            .copied()
            .filter(|a| a.t > TIME_TOL && a.t < t_final - TIME_TOL)
            .collect(),
        segments: mu0.segments.clone(),
        sheets: mu0.sheets.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max: f64,
    pub per_function: Vec<f64>,
}

/// ∫χ(ψ_t + f′ψ_x) − ∫ψ_v dμ₁ + ∫ψ dμ₀ for each ψ = φ(t,x)ρ(v) of the dictionary,
/// with χ = 1_{v<u} integrated exactly front by front.
pub fn kinetic_residual(
    sol: &FrontTrackingSolution,
    mu0: &AtomicMeasure3,
    mu1: &AtomicMeasure3,
    dict: &[TestFunction],
) -> ResidualReport {
    let lo = sol.lo();
    let per_function: Vec<f64> = dict
        .par_iter()
        .map(|tf| {
            let (va, vb) = tf.v_support();
            let mut cache: HashMap<u64, (f64, f64)> = HashMap::new();
            let mut moments = |u: f64| {
                *cache.entry(u.to_bits()).or_insert_with(|| {
                    let r0 = tf.rho_integral(u) - tf.rho_integral(lo);
                    let (a, b) = (va.max(lo), vb.min(u));
                    let r1 = if b > a { gl8_panels(|v| sol.flux.df(v) * tf.rho(v), a, b, 4) } else { 0.0 };
                    (r0, r1)
                })
            };
            let (ta, tb) = tf.t_support();
            let (xa, xb) = tf.x_support();
            let mut chi = 0.0;
            for f in &sol.fronts {
                let (s, e) = (f.tb.max(ta), f.td.min(tb));
                if !(e > s) {
                    continue;
                }
                let (x1, x2) = (f.x_at(s), f.x_at(e));
                if x1.max(x2) <= xa || x1.min(x2) >= xb {
                    continue;
                }
                let (l0, l1) = moments(f.ul);
                let (r0, r1) = moments(f.ur);
                let cf = (l1 - r1) - f.speed * (l0 - r0);
                if cf != 0.0 {
                    chi += cf * gl8_panels(|t| tf.phi(t, f.x_at(t)), s, e, 4);
                }
            }
            let phi = |t: f64, x: f64| tf.phi(t, x);
            let kinks = [va, tf.vc, vb];
            let m1 = mu1.integrate_split(phi, |v| tf.rho_prime(v), |v| tf.rho(v), &kinks);
            let m0 = mu0.integrate_split(phi, |v| tf.rho(v), |v| tf.rho_integral(v), &kinks);
            (chi - m1 + m0).abs()
        })
        .collect();
    ResidualReport { max: per_function.iter().fold(0.0, |m, &r| m.max(r)), per_function }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub measure: String,
    pub t: f64,
    pub x: f64,
    pub curves: (usize, usize),
    pub side: GraphSide,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodnessReport {
    /// Σ|μ^γ| − |Σμ^γ| for μ₁ and interior μ₀, both families
    pub mu1_cancellation: f64,
    pub mu0_cancellation: f64,
    /// Σ over fronts of |μ₁ᴴ(front) + μ₁ᴱ(front)|, relative to the μ₁ᴴ mass
    pub simultaneity_gap: f64,
    pub interior_mu0_gap: f64,
    pub violations: Vec<Violation>,
    pub pass: bool,
}

fn key(t: f64, x: f64) -> (u64, u64) {
    (t.to_bits(), x.to_bits())
}

fn cancellations(fam: &WeightedCurveFamily, out: &mut Vec<Violation>) -> (f64, f64) {
    let mut segs: HashMap<(u64, u64), Vec<(usize, f64, f64, f64)>> = HashMap::new();
    let mut atoms: HashMap<(u64, u64, u64), Vec<(usize, f64)>> = HashMap::new();
    let t_final = fam.t_final;
    for (i, (c, &w)) in fam.curves.iter().zip(&fam.weights).enumerate() {
        let (m0, m1) = curve_measures(c, w);
        for s in m1.segments {
            segs.entry(key(s.t, s.x)).or_default().push((i, s.va, s.vb, s.density));
        }
        for a in interior(&m0, t_final).atoms {
            atoms.entry((a.t.to_bits(), a.x.to_bits(), a.v.to_bits())).or_default().push((i, a.w));
        }
    }
    let mut c1 = 0.0;
    // tube jumps: opposite signs overlapping in time and level on the same front
    let mut by_front: HashMap<usize, Vec<(usize, f64, f64, f64, f64, f64, f64)>> = HashMap::new();
    for (i, tb) in fam.tubes.iter().enumerate() {
        for k in 0..tb.a.jump_fronts.len() {
            let (from, to) = (tb.a.levels[k], tb.a.levels[k + 1]);
            let (p, q) = (tb.a.knots[k + 1].0, tb.b.knots[k + 1].0);
            let sign = if to < from { 1.0 } else { -1.0 };
            by_front.entry(tb.a.jump_fronts[k]).or_default().push((
                fam.curves.len() + i,
                p.min(q),
                p.max(q),
                from.min(to),
                from.max(to),
                sign * tb.mass,
                0.5 * (tb.a.knots[k + 1].1 + tb.b.knots[k + 1].1),
            ));
        }
    }
    let mut fkeys: Vec<usize> = by_front.keys().copied().collect();
    fkeys.sort_unstable();
    for f in fkeys {
        let g = &by_front[&f];
        if g.iter().all(|e| e.5 > 0.0) || g.iter().all(|e| e.5 < 0.0) {
            continue;
        }
        for p in 0..g.len() {
            for q in p + 1..g.len() {
                let (a, b) = (g[p], g[q]);
                let tover = a.2.min(b.2) - a.1.max(b.1);
                let vover = a.4.min(b.4) - a.3.max(b.3);
                let point = a.1 == a.2 && b.1 == b.2 && a.1 == b.1;
                if a.5 * b.5 < 0.0 && vover > 0.0 && (tover > 0.0 || point) {
                    c1 += 2.0 * vover * a.5.abs().min(b.5.abs());
                    out.push(Violation { measure: "mu1".into(), t: a.1.max(b.1), x: a.6, curves: (a.0, b.0), side: fam.side });
                }
            }
        }
    }
    let mut keys: Vec<_> = segs.keys().copied().collect();
    keys.sort_unstable();
    for k in keys {
        let g = &segs[&k];
        for p in 0..g.len() {
            for q in p + 1..g.len() {
                let (a, b) = (g[p], g[q]);
                let overlap = (a.2.min(b.2) - a.1.max(b.1)).max(0.0);
                if overlap > 0.0 && a.3 * b.3 < 0.0 {
                    c1 += 2.0 * overlap * a.3.abs().min(b.3.abs());
                    out.push(Violation {
                        measure: "mu1".into(),
                        t: f64::from_bits(k.0),
                        x: f64::from_bits(k.1),
                        curves: (a.0, b.0),
                        side: fam.side,
                    });
                }
            }
        }
    }
    let mut akeys: Vec<_> = atoms.keys().copied().collect();
    akeys.sort_unstable();
    let mut c0 = 0.0;
    for k in akeys {
        let g = &atoms[&k];
        let pos: f64 = g.iter().filter(|a| a.1 > 0.0).map(|a| a.1).sum();
        let neg: f64 = -g.iter().filter(|a| a.1 < 0.0).map(|a| a.1).sum::<f64>();
        if pos > 0.0 && neg > 0.0 {
            c0 += 2.0 * pos.min(neg);
            let i = g.iter().find(|a| a.1 > 0.0).unwrap().0;
            let j = g.iter().find(|a| a.1 < 0.0).unwrap().0;
            out.push(Violation {
                measure: "mu0".into(),
                t: f64::from_bits(k.0),
                x: f64::from_bits(k.1),
                curves: (i, j),
                side: fam.side,
            });
        }
    }
    (c1, c0)
}

fn per_front_mu1(fam: &WeightedCurveFamily) -> HashMap<usize, f64> {
    let mut m: HashMap<usize, f64> = HashMap::new();
    let pairs = fam.curves.iter().zip(fam.weights.iter().copied());
    for (c, w) in pairs.chain(fam.tubes.iter().map(|t| (&t.a, t.mass))) {
        for (_, _, from, to, g) in c.jumps() {
            *m.entry(g).or_default() += w * (from - to);
        }
    }
    m
}

/// No cancellations inside either family, and the hypograph measures equal minus the
/// epigraph ones front by front (relative tolerance 2/N_v).
pub fn goodness_check(hyp: &WeightedCurveFamily, epi: &WeightedCurveFamily) -> GoodnessReport {
    let mut violations = Vec::new();
    let (h1, h0) = cancellations(hyp, &mut violations);
    let (e1, e0) = cancellations(epi, &mut violations);
    let mh = per_front_mu1(hyp);
    let me = per_front_mu1(epi);
    let mut fronts: Vec<usize> = mh.keys().chain(me.keys()).copied().collect();
    fronts.sort_unstable();
    fronts.dedup();
    let total: f64 = mh.values().map(|m| m.abs()).sum();
    let gap: f64 = fronts
        .iter()
        .map(|f| (mh.get(f).copied().unwrap_or(0.0) + me.get(f).copied().unwrap_or(0.0)).abs())
        .sum();
    let simultaneity_gap = if total > 0.0 { gap / total } else { gap };
    let i0 = |fam: &WeightedCurveFamily| -> f64 {
        let (m0, _) = raw_measures(fam);
        interior(&m0, fam.t_final).atoms.iter().map(|a| a.w).sum()
    };
    let interior_mu0_gap = (i0(hyp) + i0(epi)).abs();
    let n_v = hyp.n_v.max(epi.n_v).max(1) as f64;
    let pass = violations.is_empty() && simultaneity_gap <= 2.0 / n_v + 1e-12 && interior_mu0_gap <= 1e-12;
    GoodnessReport {
        mu1_cancellation: h1 + e1,
        mu0_cancellation: h0 + e0,
        simultaneity_gap,
        interior_mu0_gap,
        violations,
        pass,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproductionReport {
    pub boxes: usize,
    /// largest |curve occupation − ∫_B χ|
    pub max_error: f64,
    /// largest error divided by its allowance 2·vol/N_v + 2δv·Δt·Δx
    pub max_ratio: f64,
}

/// Occupation time of the curves in B = [t0,t1]×[x0,x1]×[v0,v1], weighted.
pub fn occupation(fam: &WeightedCurveFamily, t: (f64, f64), x: (f64, f64), v: (f64, f64)) -> f64 {
    let discrete: f64 = fam
        .curves
        .par_iter()
        .zip(fam.weights.par_iter())
        .map(|(c, &w)| w * curve_occupation(c, t, x, v))
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    let tubes: f64 = fam
        .tubes
        .par_iter()
        .map(|tb| tb.mass * gl8_panels(|s| curve_occupation(&tb.at(s), t, x, v), 0.0, 1.0, 4))
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    discrete + tubes
}

/// Time the curve spends in the box.
pub fn curve_occupation(c: &Curve, t: (f64, f64), x: (f64, f64), v: (f64, f64)) -> f64 {
    let mut s = 0.0;
    for k in 0..c.levels.len() {
        let lv = c.levels[k];
        if lv < v.0 || lv >= v.1 {
            continue;
        }
        let ((ta, xa), (tb, xb)) = (c.knots[k], c.knots[k + 1]);
        let (mut p, mut q) = (ta.max(t.0), tb.min(t.1));
        if !(q > p) {
            continue;
        }
        let slope = (xb - xa) / (tb - ta);
        if slope != 0.0 {
            let (e1, e2) = (ta + (x.0 - xa) / slope, ta + (x.1 - xa) / slope);
            p = p.max(e1.min(e2));
            q = q.min(e1.max(e2));
        } else if xa < x.0 || xa > x.1 {
            continue;
        }
        s += (q - p).max(0.0);
    }
    s
}

/// ∫_B χ with χ = 1_{v<u}.
pub fn chi_volume(sol: &FrontTrackingSolution, t: (f64, f64), x: (f64, f64), v: (f64, f64)) -> f64 {
    gl8_panels(|s| sol.snapshot(s).integrate(x.0, x.1, |u| u.clamp(v.0, v.1) - v.0), t.0, t.1, 32)
}

/// Compare curve occupation with ∫_B χ on `n` random boxes inside (0,T) × window × (lo,hi).
pub fn reproduction_check(
    sol: &FrontTrackingSolution,
    fam: &WeightedCurveFamily,
    window: (f64, f64),
    n: usize,
    seed: u64,
    dv: f64,
) -> ReproductionReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |a: f64, b: f64| {
        let (p, q) = (rng.gen_range(a..b), rng.gen_range(a..b));
        (p.min(q), p.max(q))
    };
    let boxes: Vec<_> = (0..n)
        .map(|_| (draw(0.0, sol.t_final), draw(window.0, window.1), draw(sol.lo(), sol.hi())))
        .collect();
    let mut max_error = 0.0f64;
    let mut max_ratio = 0.0f64;
    for (t, x, v) in boxes {
        let mut occ = occupation(fam, t, x, v);
        let mut exact = chi_volume(sol, t, x, v);
        if fam.side == GraphSide::Epigraph {
            occ -= (t.1 - t.0) * (x.1 - x.0) * (v.1 - v.0);
            exact = -exact;
        }
        let err = (occ - exact).abs();
        let vol = (t.1 - t.0) * (x.1 - x.0) * (v.1 - v.0);
        let allow = 2.0 * vol / fam.n_v as f64 + 2.0 * dv * (t.1 - t.0) * (x.1 - x.0);
        max_error = max_error.max(err);
        max_ratio = max_ratio.max(err / allow);
    }
    ReproductionReport { boxes: n, max_error, max_ratio }
}

/// Sampled points where a curve leaves its graph region: γᵛ ≥ u for hypograph curves,
/// γᵛ ≤ u for epigraph curves. Every `stride`-th curve is checked at five times.
pub fn good_curve_violations(sol: &FrontTrackingSolution, fam: &WeightedCurveFamily, stride: usize) -> usize {
    let sample: Vec<Curve> = fam.weighted().step_by(stride.max(1)).map(|p| p.0).collect();
    sample
        .par_iter()
        .map(|c| {
            (1..=5)
                .filter(|&k| {
                    let t = c.t0 + (c.t1 - c.t0) * (k as f64 - 0.5) / 5.0;
                    let u = sol.value_at(t, c.x_at(t));
                    let v = c.value_at(t);
                    match fam.side {
                        GraphSide::Hypograph => v >= u,
                        GraphSide::Epigraph => v <= u,
                    }
                })
                .count()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::flux::Flux;
    use crate::front::{front_track, FrontTrackParams};
    use crate::pwc::PiecewiseConstant;

    fn shock_sol(n: usize) -> FrontTrackingSolution {
        let p = FrontTrackParams { dv: 1.0 / n as f64, ..Default::default() };
        front_track(&fixtures::shock(), &Flux::burgers(), 1.0, p).unwrap()
    }

    #[test]
    fn reflection_on_burgers_shock() {
        let sol = shock_sol(256);
        let (vs, ps) = front_density(&sol, 0);
        let v = 0.75 - 0.5 / 256.0;
        let s = reflected_level(&vs, &ps, v).unwrap();
        assert!((s - (1.0 - v)).abs() < 1e-12);
    }

    #[test]
    fn constant_solution_has_straight_curves() {
        let sol = front_track(&PiecewiseConstant::constant(0.5), &Flux::burgers(), 1.0, FrontTrackParams::default()).unwrap();
        let fam = build_hypograph_rep(&sol, 16).unwrap();
        assert!(!fam.curves.is_empty());
        assert!(fam.curves.iter().all(|c| c.levels.len() == 1 && c.t0 == 0.0 && c.t1 == 1.0));
        let (m0, m1) = aggregate_measures(&fam);
        assert!(m1.is_empty());
        assert!(interior(&m0, 1.0).atoms.is_empty());
    }

    #[test]
    fn shock_total_mass_is_one_twelfth() {
        let sol = shock_sol(64);
        let fam = build_hypograph_rep(&sol, 64).unwrap();
        let (_, m1) = aggregate_measures(&fam);
        assert!((m1.total() - 1.0 / 12.0).abs() < 2.0 / 64.0);
        assert!(m1.segments.iter().all(|s| s.density > 0.0));
        assert_eq!(fam.defects(), 0);
    }
}

