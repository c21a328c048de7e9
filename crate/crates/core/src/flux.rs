//! Scalar fluxes, entropy pairs and the nonlinearity functionals.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Natural cubic spline through sampled flux values.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Spline {
    pub v: Vec<f64>,
    pub f: Vec<f64>,
    /// second derivatives at the nodes
    pub m: Vec<f64>,
}

impl Spline {
    pub fn natural(v: Vec<f64>, f: Vec<f64>) -> Result<Spline> {
        let n = v.len();
        if n < 3 || f.len() != n {
            return Err(Error::Invalid("spline needs at least 3 matching samples".into()));
        }
        if v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("spline nodes must be strictly increasing".into()));
        }
        // tridiagonal system for interior second derivatives (Thomas algorithm)
        let mut m = vec![0.0; n];
        let k = n - 2;
        let mut diag = vec![0.0; k];
        let mut upper = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for i in 1..n - 1 {
            let h0 = v[i] - v[i - 1];
            let h1 = v[i + 1] - v[i];
            diag[i - 1] = 2.0 * (h0 + h1);
            upper[i - 1] = h1;
            rhs[i - 1] = 6.0 * ((f[i + 1] - f[i]) / h1 - (f[i] - f[i - 1]) / h0);
        }
        for i in 1..k {
            let lower = v[i + 1] - v[i];
            let w = lower / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        for i in (0..k).rev() {
            let next = if i + 1 < k { m[i + 2] } else { 0.0 };
            m[i + 1] = (rhs[i] - upper[i] * next) / diag[i];
        }
        Ok(Spline { v, f, m })
    }

    fn locate(&self, x: f64) -> usize {
        let n = self.v.len();
        match self.v.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    fn eval(&self, x: f64, order: u8) -> f64 {
        let i = self.locate(x);
        let (x0, x1) = (self.v[i], self.v[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (y0, y1) = (self.f[i], self.f[i + 1]);
        match order {
            0 => a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0,
            1 => (y1 - y0) / h + (-(3.0 * a * a - 1.0) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0,
            _ => a * m0 + b * m1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub enum FluxKind {
    /// f(v) = v²/2
    Burgers,
    /// f(v) = c0 + c1 v + c2 v² + c3 v³
    Cubic([f64; 4]),
    /// breakpoint table (v_k, f_k), strictly increasing v_k
    PiecewiseLinear { v: Vec<f64>, f: Vec<f64> },
    Sampled(Spline),
    /// g(v) = −f(lo + hi − v), the flux seen by the reflected state
    Reflected(Box<Flux>),
}

/// A scalar flux on a closed state interval `[lo, hi]`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Flux {
    pub kind: FluxKind,
    pub lo: f64,
    pub hi: f64,
}

impl Flux {
    pub fn burgers() -> Flux {
        Flux { kind: FluxKind::Burgers, lo: 0.0, hi: 1.0 }
    }

    pub fn burgers_on(lo: f64, hi: f64) -> Flux {
        Flux { kind: FluxKind::Burgers, lo, hi }
    }

    pub fn cubic(c: [f64; 4], lo: f64, hi: f64) -> Flux {
        Flux { kind: FluxKind::Cubic(c), lo, hi }
    }

    pub fn affine(c: f64) -> Flux {
        Flux::cubic([0.0, c, 0.0, 0.0], 0.0, 1.0)
    }

    pub fn piecewise_linear(points: &[(f64, f64)]) -> Result<Flux> {
        if points.len() < 2 {
            return Err(Error::Invalid("piecewise-linear flux needs two breakpoints".into()));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Invalid("breakpoints must be strictly increasing".into()));
        }
        let v: Vec<f64> = points.iter().map(|p| p.0).collect();
        let f: Vec<f64> = points.iter().map(|p| p.1).collect();
        let (lo, hi) = (v[0], v[v.len() - 1]);
        Ok(Flux { kind: FluxKind::PiecewiseLinear { v, f }, lo, hi })
    }

    pub fn sampled(v: Vec<f64>, f: Vec<f64>) -> Result<Flux> {
        let s = Spline::natural(v, f)?;
        let (lo, hi) = (s.v[0], s.v[s.v.len() - 1]);
        Ok(Flux { kind: FluxKind::Sampled(s), lo, hi })
    }

    /// Look a flux up by name, as used on the command line and in scenario files.
    pub fn by_name(name: &str) -> Result<Flux> {
        match name {
            "burgers" => Ok(Flux::burgers()),
            "cubic" => Ok(Flux::cubic([0.0, 0.0, 0.0, 1.0], 0.0, 1.0)),
            "inflection" => Ok(Flux::cubic([0.0, 0.0, -1.5, 1.0], 0.0, 1.0)),
            _ => Err(Error::Invalid(format!("unknown flux `{name}`"))),
        }
    }

    pub fn reflected(&self) -> Flux {
        Flux { kind: FluxKind::Reflected(Box::new(self.clone())), lo: self.lo, hi: self.hi }
    }

    pub fn is_piecewise_linear(&self) -> bool {
        matches!(self.kind, FluxKind::PiecewiseLinear { .. })
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo - 1e-12 && v <= self.hi + 1e-12
    }

    pub fn f(&self, v: f64) -> f64 {
        match &self.kind {
            FluxKind::Burgers => 0.5 * v * v,
            FluxKind::Cubic(c) => c[0] + v * (c[1] + v * (c[2] + v * c[3])),
            FluxKind::PiecewiseLinear { v: b, f } => {
                let k = pl_cell(b, v);
                f[k] + (f[k + 1] - f[k]) / (b[k + 1] - b[k]) * (v - b[k])
            }
            FluxKind::Sampled(s) => s.eval(v, 0),
            FluxKind::Reflected(g) => -g.f(g.lo + g.hi - v),
        }
    }

    /// f′; for piecewise-linear fluxes the right-continuous slope.
    pub fn df(&self, v: f64) -> f64 {
        match &self.kind {
            FluxKind::Burgers => v,
            FluxKind::Cubic(c) => c[1] + v * (2.0 * c[2] + 3.0 * c[3] * v),
            FluxKind::PiecewiseLinear { v: b, f } => {
                let k = pl_cell(b, v);
                (f[k + 1] - f[k]) / (b[k + 1] - b[k])
            }
            FluxKind::Sampled(s) => s.eval(v, 1),
            FluxKind::Reflected(g) => g.df(g.lo + g.hi - v),
        }
    }

    pub fn d2f(&self, v: f64) -> f64 {
        match &self.kind {
            FluxKind::Burgers => 1.0,
            FluxKind::Cubic(c) => 2.0 * c[2] + 6.0 * c[3] * v,
            FluxKind::PiecewiseLinear { .. } => 0.0,
            FluxKind::Sampled(s) => s.eval(v, 2),
            FluxKind::Reflected(g) => -g.d2f(g.lo + g.hi - v),
        }
    }

    /// Kinks of f′ inside the domain (breakpoints of piecewise-linear fluxes).
    pub fn kinks(&self) -> Vec<f64> {
        match &self.kind {
            FluxKind::PiecewiseLinear { v, .. } => v.clone(),
            FluxKind::Reflected(g) => g.kinks().iter().rev().map(|k| g.lo + g.hi - k).collect(),
            _ => Vec::new(),
        }
    }

    pub fn max_abs_df(&self) -> f64 {
        self.sample_max(|v| self.df(v).abs())
    }

    pub fn max_abs_d2f(&self) -> f64 {
        self.sample_max(|v| self.d2f(v).abs())
    }

    fn sample_max<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        let n = 4096;
        let mut m: f64 = 0.0;
        for i in 0..=n {
            m = m.max(g(self.lo + (self.hi - self.lo) * i as f64 / n as f64));
        }
        for k in self.kinks() {
            m = m.max(g(k));
        }
        m
    }

    /// The same law written for s = (u − lo)/(hi − lo) ∈ [0, 1]: f̃(s) = f(lo + Ls)/L.
    pub fn to_unit_domain(&self) -> Flux {
        let (lo, len) = (self.lo, self.hi - self.lo);
        match &self.kind {
            FluxKind::PiecewiseLinear { v, f } => Flux {
                kind: FluxKind::PiecewiseLinear {
                    v: v.iter().map(|x| (x - lo) / len).collect(),
                    f: f.iter().map(|y| y / len).collect(),
                },
                lo: 0.0,
                hi: 1.0,
            },
            _ => {
                let n = 1025;
                let s: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
                let fs: Vec<f64> = s.iter().map(|&x| self.f(lo + len * x) / len).collect();
                Flux::sampled(s, fs).expect("unit grid is valid")
            }
        }
    }
}

pub(crate) fn pl_cell(b: &[f64], v: f64) -> usize {
    let n = b.len();
    match b.binary_search_by(|p| p.total_cmp(&v)) {
        Ok(i) => i.min(n - 2),
        Err(i) => i.saturating_sub(1).min(n - 2),
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A C² entropy with its first two derivatives.
#[derive(Clone)]
pub struct Entropy {
    pub name: String,
    eta: ScalarFn,
    deta: ScalarFn,
    d2eta: ScalarFn,
    /// interval on which the formulas are valid, if restricted
    pub domain: Option<(f64, f64)>,
}

impl fmt::Debug for Entropy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Entropy").field("name", &self.name).field("domain", &self.domain).finish()
    }
}

impl Entropy {
    pub fn custom(
        name: &str,
        eta: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deta: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2eta: impl Fn(f64) -> f64 + Send + Sync + 'static,
        domain: Option<(f64, f64)>,
    ) -> Entropy {
        Entropy { name: name.into(), eta: Arc::new(eta), deta: Arc::new(deta), d2eta: Arc::new(d2eta), domain }
    }

    /// η₀(v) = v
    pub fn identity() -> Entropy {
        Entropy::custom("identity", |v| v, |_| 1.0, |_| 0.0, None)
    }

    /// v²/2
    pub fn quadratic() -> Entropy {
        Entropy::custom("quadratic", |v| 0.5 * v * v, |v| v, |_| 1.0, None)
    }

    /// v^k for integer k ≥ 2
    pub fn power(k: i32) -> Entropy {
        let kf = k as f64;
        Entropy::custom(
            &format!("power{k}"),
            move |v| v.powi(k),
            move |v| kf * v.powi(k - 1),
            move |v| kf * (kf - 1.0) * v.powi(k - 2),
            None,
        )
    }

    pub fn exp() -> Entropy {
        Entropy::custom("exp", f64::exp, f64::exp, f64::exp, None)
    }

    pub fn eta(&self, v: f64) -> f64 {
        (self.eta)(v)
    }
    pub fn deta(&self, v: f64) -> f64 {
        (self.deta)(v)
    }
    pub fn d2eta(&self, v: f64) -> f64 {
        (self.d2eta)(v)
    }
}

/// (η, q) with q′ = f′η′ and q(lo) = 0.
#[derive(Clone, Debug)]
pub struct EntropyPair {
    pub flux: Flux,
    pub entropy: Entropy,
}

impl EntropyPair {
    pub fn eta(&self, v: f64) -> f64 {
        self.entropy.eta(v)
    }

    pub fn q(&self, v: f64) -> f64 {
        let fl = &self.flux;
        quad::adaptive_split(|s| fl.df(s) * self.entropy.deta(s), fl.lo, v, &fl.kinks(), 1e-14)
    }

    pub fn dq(&self, v: f64) -> f64 {
        self.flux.df(v) * self.entropy.deta(v)
    }
}

pub fn entropy_flux(flux: &Flux, entropy: &Entropy) -> Result<EntropyPair> {
    if let Some((a, b)) = entropy.domain {
        if flux.lo < a || flux.hi > b {
            return Err(Error::Domain(format!(
                "entropy `{}` defined on [{a}, {b}] but flux domain is [{}, {}]",
                entropy.name, flux.lo, flux.hi
            )));
        }
    }
    Ok(EntropyPair { flux: flux.clone(), entropy: entropy.clone() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Minus,
    Plus,
}

/// 𝓛¹ of {v ∈ (a, b) : |f′(v̄) − f′(v)| ≥ 2h}.
fn far_set_measure(flux: &Flux, vbar: f64, a: f64, b: f64, h: f64) -> f64 {
    let c = flux.df(vbar);
    match &flux.kind {
        FluxKind::Burgers | FluxKind::Cubic(_) => {
            let (p1, p2) = match &flux.kind {
                FluxKind::Burgers => (1.0, 0.0),
                FluxKind::Cubic(k) => (2.0 * k[2], 3.0 * k[3]),
                _ => unreachable!(),
            };
            let p0 = match &flux.kind {
                FluxKind::Cubic(k) => k[1],
                _ => 0.0,
            };
            // f′(v) − c = p2 v² + p1 v + (p0 − c); collect the roots of f′ − c = ±2h
            let mut cuts = vec![a, b];
            for target in [2.0 * h, -2.0 * h] {
                for r in quadratic_roots(p2, p1, p0 - c - target) {
                    if r > a && r < b {
                        cuts.push(r);
                    }
                }
            }
            cuts.sort_by(f64::total_cmp);
            let mut m = 0.0;
            for w in cuts.windows(2) {
                if w[1] > w[0] {
                    let mid = 0.5 * (w[0] + w[1]);
                    if (c - flux.df(mid)).abs() >= 2.0 * h {
                        m += w[1] - w[0];
                    }
                }
            }
            m
        }
        FluxKind::PiecewiseLinear { v, .. } => {
            let mut cuts: Vec<f64> = v.iter().copied().filter(|&x| x > a && x < b).collect();
            cuts.push(a);
            cuts.push(b);
            cuts.sort_by(f64::total_cmp);
            cuts.windows(2)
                .filter(|w| w[1] > w[0] && (c - flux.df(0.5 * (w[0] + w[1]))).abs() >= 2.0 * h)
                .map(|w| w[1] - w[0])
                .sum()
        }
        FluxKind::Sampled(_) | FluxKind::Reflected(_) => {
            let n = 10_000;
            let dv = (b - a) / n as f64;
            (0..n)
                .filter(|&i| (c - flux.df(a + (i as f64 + 0.5) * dv)).abs() >= 2.0 * h)
                .count() as f64
                * dv
        }
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // stable form
    let q = -0.5 * (b + b.signum() * sq);
    let q = if q == 0.0 { -0.5 * b } else { q };
    let mut r = vec![q / a];
    if q != 0.0 {
        r.push(c / q);
    }
    r
}

/// 𝔥^±(v̄, δ): the largest h with 𝓛¹((v̄−δ, v̄) ∩ {|f′(v̄) − f′(v)| ≥ 2h}) ≥ h.
pub fn nondegeneracy_h(flux: &Flux, vbar: f64, delta: f64, side: Side) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Width(format!("δ must be positive, got {delta}")));
    }
    let (a, b) = match side {
        Side::Minus => (vbar - delta, vbar),
        Side::Plus => (vbar, vbar + delta),
    };
    if a < flux.lo - 1e-12 || b > flux.hi + 1e-12 {
        return Err(Error::Domain(format!("({a}, {b}) leaves the flux domain")));
    }
    let holds = |h: f64| far_set_measure(flux, vbar, a, b, h) >= h;
    if holds(delta) {
        return Ok(delta);
    }
    let (mut lo, mut hi) = (0.0_f64, delta);
    while hi - lo > 1e-14 * delta {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[derive(Clone, Debug, Serialize)]
pub struct WgnReport {
    pub pass: bool,
    pub worst_measure: f64,
    pub worst_direction: (f64, f64),
}

fn direction_for_level(c: f64) -> (f64, f64) {
    let n = (1.0 + c * c).sqrt();
    (-1.0 / n, c / n)
}

/// Weak genuine nonlinearity: every level set {τ + ξ f′ = 0} must be Lebesgue-null.
pub fn wgn_test(flux: &Flux, direction_samples: usize) -> WgnReport {
    let len = flux.hi - flux.lo;
    let n = 20_000;
    let cell = len / n as f64;
    let mut worst = (0.0_f64, (1.0, 0.0));
    let mut consider = |m: f64, d: (f64, f64)| {
        if m > worst.0 {
            worst = (m, d);
        }
    };
    match &flux.kind {
        FluxKind::Burgers => {}
        FluxKind::Cubic(c) => {
            if c[2] == 0.0 && c[3] == 0.0 {
                consider(len, direction_for_level(c[1]));
            }
        }
        FluxKind::PiecewiseLinear { v, f } => {
            // group maximal runs of equal slope; the run length is the level-set measure
            let slopes: Vec<f64> = (0..v.len() - 1).map(|k| (f[k + 1] - f[k]) / (v[k + 1] - v[k])).collect();
            let mut levels: Vec<(f64, f64)> = Vec::new();
            for (k, &s) in slopes.iter().enumerate() {
                let l = v[k + 1] - v[k];
                match levels.iter_mut().find(|(c, _)| (c - s).abs() <= 1e-12 * (1.0 + s.abs())) {
                    Some(e) => e.1 += l,
                    None => levels.push((s, l)),
                }
            }
            for (s, l) in levels {
                consider(l, direction_for_level(s));
            }
        }
        FluxKind::Sampled(_) | FluxKind::Reflected(_) => {
            let scale = 1e-9 * (1.0 + flux.max_abs_df());
            let mut runs: Vec<(f64, f64)> = Vec::new();
            let mut cur: Option<(f64, f64)> = None;
            for i in 0..n {
                let a = flux.lo + i as f64 * cell;
                let (d0, d1, dm) = (flux.df(a), flux.df(a + cell), flux.df(a + 0.5 * cell));
                let flat = (d0 - d1).abs() <= scale && (d0 - dm).abs() <= scale;
                cur = match (flat, cur) {
                    (true, Some((c, l))) if (c - d0).abs() <= scale => Some((c, l + cell)),
                    (true, prev) => {
                        if let Some(p) = prev {
                            runs.push(p);
                        }
                        Some((d0, cell))
                    }
                    (false, prev) => {
                        if let Some(p) = prev {
                            runs.push(p);
                        }
                        None
                    }
                };
            }
            if let Some(p) = cur {
                runs.push(p);
            }
            for (c, l) in runs {
                consider(l, direction_for_level(c));
            }
        }
    }
    // sampled directions: generic levels are hit on a null set for all kinds above
    let samples = direction_samples.max(8);
    for k in 0..samples {
        let th = std::f64::consts::PI * k as f64 / samples as f64;
        let (xi, tau) = (th.cos(), th.sin());
        if xi.abs() < 1e-12 {
            continue;
        }
        let level = -tau / xi;
        let tol = 1e-9 * (1.0 + level.abs());
        let m = (0..n)
            .filter(|&i| {
                let a = flux.lo + i as f64 * cell;
                [a, a + 0.5 * cell, a + cell].iter().all(|&x| (flux.df(x) - level).abs() <= tol)
            })
            .count() as f64
            * cell;
        consider(m, (xi, tau));
    }
    WgnReport { pass: worst.0 <= 2.0 * cell, worst_measure: worst.0, worst_direction: worst.1 }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convexity {
    Convex,
    Concave,
}

/// Maximal open intervals where f″ keeps a strict sign, and the closed residual set.
#[derive(Clone, Debug, Serialize)]
pub struct ConvexityDecomposition {
    pub intervals: Vec<(f64, f64, Convexity)>,
    pub residual: Vec<(f64, f64)>,
}

impl ConvexityDecomposition {
    pub fn interval_containing(&self, v: f64) -> Option<usize> {
        self.intervals.iter().position(|&(a, b, _)| v > a && v < b)
    }
}

/// Default tolerance is 1e−9·max|f″|.
pub fn convexity_intervals(flux: &Flux, tol: Option<f64>) -> ConvexityDecomposition {
    let tol = tol.unwrap_or_else(|| 1e-9 * flux.max_abs_d2f());
    let sign = |v: f64| {
        let d = flux.d2f(v);
        if d > tol {
            1
        } else if d < -tol {
            -1
        } else {
            0
        }
    };
    let n = 10_000;
    let (lo, hi) = (flux.lo, flux.hi);
    let node = |i: usize| lo + (hi - lo) * i as f64 / n as f64;
    let signs: Vec<i32> = (0..=n).map(|i| sign(node(i))).collect();
    // boundary between node i (sign s) and node i+1 (different sign), located by bisection
    // last point carrying sign s between node i and node i+1
    let refine = |i: usize, s: i32| {
        let (mut a, mut b) = (node(i), node(i + 1));
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if sign(m) == s {
                a = m;
            } else {
                b = m;
            }
        }
        (a, b)
    };
    let mut intervals = Vec::new();
    let mut i = 0;
    while i <= n {
        let s = signs[i];
        if s == 0 {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && signs[i + 1] == s {
            i += 1;
        }
        let a = if start == 0 {
            lo
        } else {
            // first point (from the left) that carries sign s
            let (mut l, mut r) = (node(start - 1), node(start));
            for _ in 0..80 {
                let m = 0.5 * (l + r);
                if sign(m) == s {
                    r = m;
                } else {
                    l = m;
                }
            }
            l
        };
        let b = if i == n { hi } else { refine(i, s).1 };
        let kind = if s > 0 { Convexity::Convex } else { Convexity::Concave };
        intervals.push((a, b, kind));
        i += 1;
    }
    let mut residual = Vec::new();
    let mut cursor = lo;
    for &(a, b, _) in &intervals {
        if a > cursor {
            residual.push((cursor, a));
        } else if a == cursor && cursor > lo {
            residual.push((a, a));
        }
        cursor = b;
    }
    if cursor < hi {
        residual.push((cursor, hi));
    }
    ConvexityDecomposition { intervals, residual }
}
