//! Event-driven front tracking and the scalar front-tracking solution.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::Flux;
use crate::pl::{PlFlux, PlWaveKind};
use crate::pwc::PiecewiseConstant;

pub const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrontKind {
    Shock,
    RarefactionFront,
    Contact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Front<S> {
    pub tb: f64,
    pub xb: f64,
    /// death time, or the final time for fronts alive at the end
    pub td: f64,
    pub speed: f64,
    pub ul: S,
    pub ur: S,
    pub kind: FrontKind,
    /// wave family for systems, 0 for scalar laws
    pub family: u8,
    pub birth: usize,
    /// index of the event that killed the front, NONE if alive at the final time
    pub death: usize,
}

impl<S> Front<S> {
    pub fn x_at(&self, t: f64) -> f64 {
        self.xb + self.speed * (t - self.tb)
    }

    pub fn alive_at(&self, t: f64) -> bool {
        self.tb <= t && (t < self.td || (self.death == NONE && t <= self.td))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wave<S> {
    pub ul: S,
    pub ur: S,
    pub speed: f64,
    pub kind: FrontKind,
    pub family: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub x: f64,
    /// incoming fronts, left to right; empty for the Riemann problems at t = 0
    pub incoming: Vec<usize>,
    pub outgoing: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Tracked<S> {
    pub fronts: Vec<Front<S>>,
    pub events: Vec<Event>,
    pub t_final: f64,
    pub far_left: S,
    pub far_right: S,
}

#[derive(Clone, Copy, Debug)]
struct Collision {
    t: f64,
    x: f64,
    a: usize,
    b: usize,
}

impl PartialEq for Collision {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Collision {}
impl PartialOrd for Collision {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Collision {
    // min-heap on (t, x)
    fn cmp(&self, o: &Self) -> Ordering {
        o.t.total_cmp(&self.t)
            .then(o.x.total_cmp(&self.x))
            .then(o.a.cmp(&self.a))
            .then(o.b.cmp(&self.b))
    }
}

const TIME_TOL: f64 = 1e-12;

fn pos_tol(x: f64) -> f64 {
    1e-11 * (1.0 + x.abs())
}

/// Run the front tracker. `values[k]` holds between `breaks[k-1]` and `breaks[k]`.
pub fn track<S, R>(breaks: &[f64], values: &[S], t_final: f64, max_fronts: usize, mut riemann: R) -> Result<Tracked<S>>
where
    S: Copy + PartialEq,
    R: FnMut(S, S) -> Result<Vec<Wave<S>>>,
{
    if values.len() != breaks.len() + 1 {
        return Err(Error::Invalid("initial data needs one more value than breakpoints".into()));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::Time(format!("final time must be nonnegative, got {t_final}")));
    }
    let mut fronts: Vec<Front<S>> = Vec::new();
    let mut events: Vec<Event> = Vec::new();
    let mut left: Vec<usize> = Vec::new();
    let mut right: Vec<usize> = Vec::new();
    let mut alive: Vec<bool> = Vec::new();
    let mut n_alive = 0usize;

    let spawn = |fronts: &mut Vec<Front<S>>,
                     left: &mut Vec<usize>,
                     right: &mut Vec<usize>,
                     alive: &mut Vec<bool>,
                     w: &Wave<S>,
                     t: f64,
                     x: f64,
                     ev: usize| {
        fronts.push(Front {
            tb: t,
            xb: x,
            td: t_final,
            speed: w.speed,
            ul: w.ul,
            ur: w.ur,
            kind: w.kind,
            family: w.family,
            birth: ev,
            death: NONE,
        });
        left.push(NONE);
        right.push(NONE);
        alive.push(true);
        fronts.len() - 1
    };

    let mut prev = NONE;
    for (k, &x) in breaks.iter().enumerate() {
        let ev = events.len();
        let waves = riemann(values[k], values[k + 1])?;
        let mut out = Vec::with_capacity(waves.len());
        for w in &waves {
            let id = spawn(&mut fronts, &mut left, &mut right, &mut alive, w, 0.0, x, ev);
            if prev != NONE {
                right[prev] = id;
            }
            left[id] = prev;
            prev = id;
            out.push(id);
        }
        n_alive += out.len();
        events.push(Event { t: 0.0, x, incoming: Vec::new(), outgoing: out });
    }
    if n_alive > max_fronts {
        return Err(Error::Budget(format!("{n_alive} initial fronts exceed the limit {max_fronts}")));
    }

    let mut heap = BinaryHeap::new();
    let collide = |fronts: &[Front<S>], a: usize, b: usize| -> Option<Collision> {
        if a == NONE || b == NONE {
            return None;
        }
        let (fa, fb) = (&fronts[a], &fronts[b]);
        if !(fa.speed > fb.speed) {
            return None;
        }
        let t = (fb.xb - fa.xb + fa.speed * fa.tb - fb.speed * fb.tb) / (fa.speed - fb.speed);
        let t = t.max(fa.tb.max(fb.tb));
        if t < t_final {
            Some(Collision { t, x: fa.x_at(t), a, b })
        } else {
            None
        }
    };
    for a in 0..fronts.len() {
        if let Some(c) = collide(&fronts, a, right[a]) {
            heap.push(c);
        }
    }

    let valid = |c: &Collision, alive: &[bool], right: &[usize]| alive[c.a] && alive[c.b] && right[c.a] == c.b;
    while let Some(first) = heap.pop() {
        if !valid(&first, &alive, &right) {
            continue;
        }
        // among collisions within the time tolerance take the leftmost
        let mut group = vec![first];
        while let Some(c) = heap.peek() {
            if c.t <= first.t + TIME_TOL {
                let c = heap.pop().unwrap();
                if valid(&c, &alive, &right) {
                    group.push(c);
                }
            } else {
                break;
            }
        }
        let pick = (0..group.len()).min_by(|&i, &j| group[i].x.total_cmp(&group[j].x)).unwrap();
        let c = group.swap_remove(pick);
        for g in group {
            heap.push(g);
        }

        let (t, x) = (c.t, c.x);
        let tol = pos_tol(x);
        let mut start = c.a;
        while left[start] != NONE && (fronts[left[start]].x_at(t) - x).abs() <= tol {
            start = left[start];
        }
        let mut end = c.b;
        while right[end] != NONE && (fronts[right[end]].x_at(t) - x).abs() <= tol {
            end = right[end];
        }
        let ev = events.len();
        let mut incoming = Vec::new();
        let mut f = start;
        loop {
            incoming.push(f);
            if f == end {
                break;
            }
            f = right[f];
        }
        let ul = fronts[start].ul;
        let ur = fronts[end].ur;
        let (pl, pr) = (left[start], right[end]);
        for &i in &incoming {
            alive[i] = false;
            fronts[i].td = t;
            fronts[i].death = ev;
        }
        n_alive -= incoming.len();
        let waves = if ul == ur { Vec::new() } else { riemann(ul, ur)? };
        let mut out = Vec::with_capacity(waves.len());
        let mut last = pl;
        for w in &waves {
            let id = spawn(&mut fronts, &mut left, &mut right, &mut alive, w, t, x, ev);
            left[id] = last;
            if last != NONE {
                right[last] = id;
            }
            last = id;
            out.push(id);
        }
        if last != NONE {
            right[last] = pr;
        }
        if pr != NONE {
            left[pr] = last;
        }
        n_alive += out.len();
        if n_alive > max_fronts {
            return Err(Error::Budget(format!(
                "{n_alive} live fronts at t = {t} exceed the limit {max_fronts}"
            )));
        }
        events.push(Event { t, x, incoming, outgoing: out.clone() });
        let first_new = out.first().copied().unwrap_or(pr);
        if let Some(c) = collide(&fronts, pl, first_new) {
            heap.push(c);
        }
        if let Some(&ln) = out.last() {
            if let Some(c) = collide(&fronts, ln, pr) {
                heap.push(c);
            }
        }
    }
    Ok(Tracked {
        fronts,
        events,
        t_final,
        far_left: values[0],
        far_right: *values.last().unwrap(),
    })
}

/// Neighbour timelines of a set of fronts, rebuilt by replaying the events.
#[derive(Clone, Debug, Default)]
pub struct Topology {
    /// per front: (time from which it holds, left neighbour)
    pub left: Vec<Vec<(f64, usize)>>,
    pub right: Vec<Vec<(f64, usize)>>,
    /// per event: neighbours of the outgoing fan just after the event
    pub ev_left: Vec<usize>,
    pub ev_right: Vec<usize>,
    /// fronts born at t = 0, left to right
    pub initial: Vec<usize>,
}

fn lookup(tl: &[(f64, usize)], t: f64) -> usize {
    let k = tl.partition_point(|e| e.0 <= t);
    if k == 0 {
        tl.first().map(|e| e.1).unwrap_or(NONE)
    } else {
        tl[k - 1].1
    }
}

impl Topology {
    pub fn left_at(&self, f: usize, t: f64) -> usize {
        lookup(&self.left[f], t)
    }

    pub fn right_at(&self, f: usize, t: f64) -> usize {
        lookup(&self.right[f], t)
    }
}

/// Replay `events` over `fronts`. The fronts may be a filtered subset of a tracked run:
/// events whose incoming fronts were all dropped are located by position.
pub fn assemble<S>(fronts: &[Front<S>], events: &[Event]) -> Topology {
    let n = fronts.len();
    let mut topo = Topology {
        left: vec![Vec::new(); n],
        right: vec![Vec::new(); n],
        ev_left: vec![NONE; events.len()],
        ev_right: vec![NONE; events.len()],
        initial: Vec::new(),
    };
    let mut lk = vec![NONE; n];
    let mut rk = vec![NONE; n];
    let mut head = NONE;
    for (e, ev) in events.iter().enumerate() {
        let t = ev.t;
        let (pl, pr) = if let (Some(&a), Some(&b)) = (ev.incoming.first(), ev.incoming.last()) {
            (lk[a], rk[b])
        } else {
            // first live front strictly right of the event
            let mut prev = NONE;
            let mut f = head;
            while f != NONE && fronts[f].x_at(t) <= ev.x {
                prev = f;
                f = rk[f];
            }
            (prev, f)
        };
        let mut last = pl;
        for &o in &ev.outgoing {
            lk[o] = last;
            topo.left[o].push((t, last));
            if last != NONE {
                rk[last] = o;
                topo.right[last].push((t, o));
            } else {
                head = o;
            }
            last = o;
        }
        if last != NONE {
            rk[last] = pr;
            topo.right[last].push((t, pr));
        } else {
            head = pr;
        }
        if pr != NONE {
            lk[pr] = last;
            topo.left[pr].push((t, last));
        }
        if last == pl && pl != NONE {
            // no outgoing fronts: pl's right neighbour was already updated above
        }
        topo.ev_left[e] = pl;
        topo.ev_right[e] = pr;
    }
    let mut f = NONE;
    // fronts born at t = 0 in order, read off the initial events
    for ev in events.iter().filter(|e| e.t == 0.0 && e.incoming.is_empty()) {
        for &o in &ev.outgoing {
            topo.initial.push(o);
            f = o;
        }
    }
    let _ = f;
    topo.initial.sort_by(|&a, &b| fronts[a].xb.total_cmp(&fronts[b].xb).then(fronts[a].speed.total_cmp(&fronts[b].speed)));
    topo
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontTrackParams {
    /// rarefaction step δv
    pub dv: f64,
    pub max_fronts: usize,
}

impl Default for FrontTrackParams {
    fn default() -> Self {
        FrontTrackParams { dv: 1.0 / 256.0, max_fronts: 200_000 }
    }
}

/// Exact entropy solution of the δv-piecewise-linearized problem.
#[derive(Clone, Debug)]
pub struct FrontTrackingSolution {
    pub flux: Flux,
    pub pl: PlFlux,
    pub initial: PiecewiseConstant,
    pub fronts: Vec<Front<f64>>,
    pub events: Vec<Event>,
    pub t_final: f64,
    pub far_left: f64,
    pub far_right: f64,
    pub topo: Topology,
}

pub fn front_track(initial: &PiecewiseConstant, flux: &Flux, t_final: f64, params: FrontTrackParams) -> Result<FrontTrackingSolution> {
    if !(params.dv > 0.0) {
        return Err(Error::Invalid(format!("δv must be positive, got {}", params.dv)));
    }
    for &v in &initial.values {
        if !flux.contains(v) {
            return Err(Error::Domain(format!(
                "initial value {v} outside flux domain [{}, {}]",
                flux.lo, flux.hi
            )));
        }
    }
    let pl = PlFlux::build(flux, params.dv, &initial.values)?;
    let values: Vec<f64> = initial.values.iter().map(|&v| pl.snap(v)).collect();
    let snapped = PiecewiseConstant::new(initial.breaks.clone(), values.clone())?;
    let pl_input = flux.is_piecewise_linear();
    let tracked = track(&snapped.breaks, &snapped.values, t_final, params.max_fronts, |a, b| {
        let waves = pl.riemann(a, b)?;
        Ok(waves
            .into_iter()
            .map(|w| Wave {
                ul: w.ul,
                ur: w.ur,
                speed: w.speed,
                kind: classify(flux, &pl, pl_input, w.ul, w.ur, w.kind),
                family: 0,
            })
            .collect())
    })?;
    Ok(FrontTrackingSolution::from_parts(flux.clone(), pl, snapped, tracked))
}

fn classify(flux: &Flux, pl: &PlFlux, pl_input: bool, ul: f64, ur: f64, kind: PlWaveKind) -> FrontKind {
    match kind {
        PlWaveKind::Shock => FrontKind::Shock,
        PlWaveKind::Chord => {
            let (i, j) = (pl.index(ul).unwrap_or(0), pl.index(ur).unwrap_or(0));
            if pl_input || i.abs_diff(j) > 1 {
                return FrontKind::Contact;
            }
            let c = flux.d2f(0.5 * (ul + ur));
            if (ul < ur && c > 0.0) || (ul > ur && c < 0.0) {
                FrontKind::RarefactionFront
            } else if c == 0.0 {
                FrontKind::Contact
            } else {
                FrontKind::Shock
            }
        }
    }
}

impl FrontTrackingSolution {
    pub fn from_parts(flux: Flux, pl: PlFlux, initial: PiecewiseConstant, tracked: Tracked<f64>) -> Self {
        let topo = assemble(&tracked.fronts, &tracked.events);
        FrontTrackingSolution {
            flux,
            pl,
            initial,
            fronts: tracked.fronts,
            events: tracked.events,
            t_final: tracked.t_final,
            far_left: tracked.far_left,
            far_right: tracked.far_right,
            topo,
        }
    }

    /// The same fronts carrying the reflected states lo + hi − u and the flux −f(lo + hi − ·).
    pub fn mirrored(&self) -> FrontTrackingSolution {
        let (lo, hi) = (self.pl.lo(), self.pl.hi());
        let m = |u: f64| lo + hi - u;
        let mut out = self.clone();
        out.pl = self.pl.mirrored();
        for f in &mut out.fronts {
            f.ul = m(f.ul);
            f.ur = m(f.ur);
        }
        out.far_left = m(self.far_left);
        out.far_right = m(self.far_right);
        out.initial = PiecewiseConstant {
            breaks: self.initial.breaks.clone(),
            values: self.initial.values.iter().map(|&u| m(u)).collect(),
        };
        out.flux = self.flux.reflected();
        out
    }

    pub fn lo(&self) -> f64 {
        self.pl.lo()
    }

    pub fn hi(&self) -> f64 {
        self.pl.hi()
    }

    /// Fronts alive at `t`, sorted by position.
    pub fn alive_sorted(&self, t: f64) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.fronts.len()).filter(|&i| self.fronts[i].alive_at(t)).collect();
        ids.sort_by(|&a, &b| {
            let (fa, fb) = (&self.fronts[a], &self.fronts[b]);
            fa.x_at(t).total_cmp(&fb.x_at(t)).then(fa.speed.total_cmp(&fb.speed))
        });
        ids
    }

    /// u(t, ·) as a right-continuous piecewise-constant function.
    pub fn snapshot(&self, t: f64) -> PiecewiseConstant {
        let ids = self.alive_sorted(t);
        let mut breaks: Vec<f64> = Vec::with_capacity(ids.len());
        let mut values = vec![self.far_left];
        for &i in &ids {
            let f = &self.fronts[i];
            let x = f.x_at(t);
            match breaks.last() {
                Some(&b) if x <= b => {
                    *values.last_mut().unwrap() = f.ur;
                }
                _ => {
                    breaks.push(x);
                    values.push(f.ur);
                }
            }
        }
        PiecewiseConstant::new(breaks, values).expect("snapshot is well formed")
    }

    pub fn value_at(&self, t: f64, x: f64) -> f64 {
        let mut best: Option<(f64, f64, f64)> = None;
        for f in self.fronts.iter().filter(|f| f.alive_at(t)) {
            let xf = f.x_at(t);
            if xf <= x {
                match best {
                    Some((bx, bs, _)) if xf < bx || (xf == bx && f.speed < bs) => {}
                    _ => best = Some((xf, f.speed, f.ur)),
                }
            }
        }
        best.map(|b| b.2).unwrap_or(self.far_left)
    }

    pub fn max_speed(&self) -> f64 {
        self.fronts.iter().map(|f| f.speed.abs()).fold(self.pl_max_speed(), f64::max)
    }

    fn pl_max_speed(&self) -> f64 {
        (0..self.pl.v.len() - 1).map(|k| self.pl.slope(k).abs()).fold(0.0, f64::max)
    }

    /// Characteristic speed bound used for windows and padding.
    pub fn speed_bound(&self) -> f64 {
        self.pl_max_speed().max(self.flux.max_abs_df())
    }

    /// Smallest x-interval containing every front on [0, T].
    pub fn front_hull(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for f in &self.fronts {
            for x in [f.xb, f.x_at(f.td)] {
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        for &b in &self.initial.breaks {
            lo = lo.min(b);
            hi = hi.max(b);
        }
        if lo > hi {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    /// ∫_a^b (u(t,x) − c) dx over a window that contains the fronts.
    pub fn mass(&self, t: f64, a: f64, b: f64) -> f64 {
        self.snapshot(t).integrate(a, b, |u| u)
    }

    pub fn total_variation(&self, t: f64) -> f64 {
        self.snapshot(t).total_variation()
    }

    /// Distinct event times in (a, b), sorted.
    pub fn event_times(&self, a: f64, b: f64) -> Vec<f64> {
        let mut ts: Vec<f64> = self.events.iter().map(|e| e.t).filter(|&t| t > a && t < b).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }

    /// Times in (a, b) where some front crosses the vertical line x = x0.
    pub fn crossing_times(&self, x0: f64, a: f64, b: f64) -> Vec<f64> {
        let mut ts = Vec::new();
        for f in &self.fronts {
            if f.speed != 0.0 {
                let t = f.tb + (x0 - f.xb) / f.speed;
                if t > a && t < b && t >= f.tb && t <= f.td {
                    ts.push(t);
                }
            } else if f.xb == x0 {
                ts.push(f.tb.max(a).min(b));
                ts.push(f.td.max(a).min(b));
            }
        }
        for e in &self.events {
            if e.t > a && e.t < b && (e.x - x0).abs() <= pos_tol(x0) {
                ts.push(e.t);
            }
        }
        ts.retain(|&t| t > a && t < b);
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_shock() {
        let sol = front_track(&PiecewiseConstant::step(0.0, 1.0, 0.0), &Flux::burgers(), 1.0, FrontTrackParams::default()).unwrap();
        assert_eq!(sol.fronts.len(), 1);
        let f = &sol.fronts[0];
        assert_eq!(f.kind, FrontKind::Shock);
        assert_eq!(f.speed, 0.5);
        assert_eq!(f.x_at(1.0), 0.5);
        assert_eq!(sol.value_at(0.5, 0.2), 1.0);
        assert_eq!(sol.value_at(0.5, 0.3), 0.0);
    }

    #[test]
    fn constant_data_has_no_fronts() {
        let sol = front_track(&PiecewiseConstant::constant(0.3), &Flux::burgers(), 1.0, FrontTrackParams::default()).unwrap();
        assert!(sol.fronts.is_empty());
        assert_eq!(sol.value_at(0.7, 3.0), 0.3);
    }

    #[test]
    fn fan_overtaken_by_shock_conserves_mass() {
        let data = PiecewiseConstant::new(vec![0.0, 1.0], vec![0.0, 1.0, 0.0]).unwrap();
        let sol = front_track(&data, &Flux::burgers(), 4.0, FrontTrackParams { dv: 1.0 / 64.0, max_fronts: 10_000 }).unwrap();
        for t in [0.0, 0.5, 1.0, 2.0, 4.0] {
            assert!((sol.mass(t, -1.0, 10.0) - 1.0).abs() < 1e-12);
        }
        let mut tv = f64::INFINITY;
        for k in 0..=40 {
            let v = sol.total_variation(0.1 * k as f64);
            assert!(v <= tv + 1e-12);
            tv = v;
        }
    }

    #[test]
    fn budget_error() {
        let data = PiecewiseConstant::step(0.0, 0.0, 1.0);
        let r = front_track(&data, &Flux::burgers(), 1.0, FrontTrackParams { dv: 1.0 / 256.0, max_fronts: 10 });
        assert!(matches!(r, Err(Error::Budget(_))));
    }

    #[test]
    fn timelines_track_neighbours() {
        let data = PiecewiseConstant::new(vec![0.0, 1.0], vec![1.0, 0.5, 0.0]).unwrap();
        let sol = front_track(&data, &Flux::burgers(), 3.0, FrontTrackParams::default()).unwrap();
        // the two shocks merge at t = 2
        assert_eq!(sol.events.len(), 3);
        let e = &sol.events[2];
        assert!((e.t - 2.0).abs() < 1e-12);
        assert_eq!(sol.topo.right_at(0, 1.0), 1);
        assert_eq!(sol.topo.right_at(0, 0.0), 1);
        let merged = e.outgoing[0];
        assert_eq!(sol.topo.left_at(merged, 2.5), NONE);
    }
}
