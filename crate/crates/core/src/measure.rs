//! Signed measures on (t, x, v) built from atoms, vertical segments and front sheets,
//! and their (t, x) marginals.

use serde::{Deserialize, Serialize};

use crate::quad::{gl8, gl8_panels};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub w: f64,
}

/// Uniform density on {t} × {x} × [va, vb].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t: f64,
    pub x: f64,
    pub va: f64,
    pub vb: f64,
    pub density: f64,
}

impl Segment {
    pub fn mass(&self) -> f64 {
        self.density * (self.vb - self.va)
    }
}

/// Density Φ(v) per unit time on the line x = x0 + speed·(t − t0), t ∈ [t0, t1];
/// Φ is piecewise linear through the nodes (v, d) and zero outside them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sheet {
    pub t0: f64,
    pub t1: f64,
    pub x0: f64,
    pub speed: f64,
    pub v: Vec<f64>,
    pub d: Vec<f64>,
}

impl Sheet {
    pub fn x_at(&self, t: f64) -> f64 {
        self.x0 + self.speed * (t - self.t0)
    }

    pub fn density(&self, v: f64) -> f64 {
        let n = self.v.len();
        if n < 2 || v < self.v[0] || v > self.v[n - 1] {
            return 0.0;
        }
        let k = self.v.partition_point(|&p| p <= v).clamp(1, n - 1) - 1;
        let (a, b) = (self.v[k], self.v[k + 1]);
        self.d[k] + (self.d[k + 1] - self.d[k]) * (v - a) / (b - a)
    }

    /// ∫ g(v) Φ(v) dv, piece by piece.
    pub fn v_integral<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        self.v_integral_split(g, &[])
    }

    /// As `v_integral`, also splitting the pieces at the kinks of g.
    pub fn v_integral_split<G: Fn(f64) -> f64>(&self, g: G, kinks: &[f64]) -> f64 {
        let mut total = 0.0;
        for k in 0..self.v.len().saturating_sub(1) {
            let (a, b) = (self.v[k], self.v[k + 1]);
            let (da, db) = (self.d[k], self.d[k + 1]);
            let lin = |v: f64| da + (db - da) * (v - a) / (b - a);
            let mut lo = a;
            for &c in kinks.iter().filter(|&&c| c > a && c < b) {
                total += gl8(|v| g(v) * lin(v), lo, c);
                lo = c;
            }
            total += gl8(|v| g(v) * lin(v), lo, b);
        }
        total
    }

    /// ∫|Φ| dv, exact for the piecewise-linear density.
    pub fn v_abs_mass(&self) -> f64 {
        (0..self.v.len().saturating_sub(1))
            .map(|k| {
                let (h, a, b) = (self.v[k + 1] - self.v[k], self.d[k], self.d[k + 1]);
                if a * b >= 0.0 {
                    0.5 * h * (a.abs() + b.abs())
                } else {
                    0.5 * h * (a * a + b * b) / (a.abs() + b.abs())
                }
            })
            .sum()
    }

    pub fn v_mass(&self) -> f64 {
        (0..self.v.len().saturating_sub(1))
            .map(|k| 0.5 * (self.v[k + 1] - self.v[k]) * (self.d[k] + self.d[k + 1]))
            .sum()
    }

    fn split(&self, positive: bool) -> Sheet {
        let keep = |d: f64| if positive { d.max(0.0) } else { d.min(0.0) };
        let mut v = Vec::with_capacity(self.v.len());
        let mut d = Vec::with_capacity(self.v.len());
        for k in 0..self.v.len() {
            if k > 0 {
                let (a, b) = (self.d[k - 1], self.d[k]);
                if a * b < 0.0 {
                    let z = self.v[k - 1] + (self.v[k] - self.v[k - 1]) * a / (a - b);
                    v.push(z);
                    d.push(0.0);
                }
            }
            v.push(self.v[k]);
            d.push(keep(self.d[k]));
        }
        Sheet { v, d, ..self.clone() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure3 {
    pub atoms: Vec<Atom>,
    pub segments: Vec<Segment>,
    pub sheets: Vec<Sheet>,
}

impl AtomicMeasure3 {
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.segments.is_empty() && self.sheets.is_empty()
    }

    pub fn extend(&mut self, other: AtomicMeasure3) {
        self.atoms.extend(other.atoms);
        self.segments.extend(other.segments);
        self.sheets.extend(other.sheets);
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.w).sum::<f64>()
            + self.segments.iter().map(|s| s.mass()).sum::<f64>()
            + self.sheets.iter().map(|s| s.v_mass() * (s.t1 - s.t0)).sum::<f64>()
    }

    /// Sum of |weights| plus segment lengths × |densities| plus sheet masses.
    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.w.abs()).sum::<f64>()
            + self.segments.iter().map(|s| s.mass().abs()).sum::<f64>()
            + self.sheets.iter().map(|s| s.v_abs_mass() * (s.t1 - s.t0)).sum::<f64>()
    }

    fn signed_part(&self, positive: bool) -> AtomicMeasure3 {
        let keep = |w: f64| if positive { w > 0.0 } else { w < 0.0 };
        AtomicMeasure3 {
            atoms: self.atoms.iter().copied().filter(|a| keep(a.w)).collect(),
            segments: self.segments.iter().copied().filter(|s| keep(s.density)).collect(),
            sheets: self.sheets.iter().map(|s| s.split(positive)).collect(),
        }
    }

    pub fn positive_part(&self) -> AtomicMeasure3 {
        self.signed_part(true)
    }

    pub fn negative_part(&self) -> AtomicMeasure3 {
        self.signed_part(false)
    }

    pub fn negated(&self) -> AtomicMeasure3 {
        AtomicMeasure3 {
            atoms: self.atoms.iter().map(|a| Atom { w: -a.w, ..*a }).collect(),
            segments: self.segments.iter().map(|s| Segment { density: -s.density, ..*s }).collect(),
            sheets: self
                .sheets
                .iter()
                .map(|s| Sheet { d: s.d.iter().map(|d| -d).collect(), ..s.clone() })
                .collect(),
        }
    }

    /// Restriction to the box [t0, t1] × [x0, x1] × [v0, v1].
    pub fn restrict(&self, t: (f64, f64), x: (f64, f64), v: (f64, f64)) -> AtomicMeasure3 {
        let inside = |a: f64, r: (f64, f64)| a >= r.0 && a <= r.1;
        let atoms = self
            .atoms
            .iter()
            .copied()
            .filter(|a| inside(a.t, t) && inside(a.x, x) && inside(a.v, v))
            .collect();
        let segments = self
            .segments
            .iter()
            .filter(|s| inside(s.t, t) && inside(s.x, x))
            .filter_map(|s| {
                let (a, b) = (s.va.max(v.0), s.vb.min(v.1));
                (b > a).then_some(Segment { va: a, vb: b, ..*s })
            })
            .collect();
        let sheets = self
            .sheets
            .iter()
            .filter_map(|s| {
                let (mut ta, mut tb) = (s.t0.max(t.0), s.t1.min(t.1));
                if s.speed != 0.0 {
                    let (p, q) = ((x.0 - s.x0) / s.speed + s.t0, (x.1 - s.x0) / s.speed + s.t0);
                    ta = ta.max(p.min(q));
                    tb = tb.min(p.max(q));
                } else if !inside(s.x0, x) {
                    return None;
                }
                if !(tb > ta) {
                    return None;
                }
                let mut nv = vec![];
                let mut nd = vec![];
                let mut push = |p: f64| {
                    if p >= v.0 && p <= v.1 && nv.last().map_or(true, |&l| p > l) {
                        nv.push(p);
                        nd.push(s.density(p));
                    }
                };
                push(v.0.max(s.v[0]));
                for &p in &s.v {
                    push(p);
                }
                push(v.1.min(*s.v.last().unwrap()));
                if nv.len() < 2 {
                    return None;
                }
                Some(Sheet { t0: ta, t1: tb, x0: s.x_at(ta), speed: s.speed, v: nv, d: nd })
            })
            .collect();
        AtomicMeasure3 { atoms, segments, sheets }
    }

    /// Image under (t, x, v) ↦ (t, x, a·v + b); masses are preserved.
    pub fn map_v(&self, a: f64, b: f64) -> AtomicMeasure3 {
        let m = |v: f64| a * v + b;
        AtomicMeasure3 {
            atoms: self.atoms.iter().map(|p| Atom { v: m(p.v), ..*p }).collect(),
            segments: self
                .segments
                .iter()
                .map(|s| {
                    let (p, q) = (m(s.va), m(s.vb));
                    Segment { va: p.min(q), vb: p.max(q), density: s.density / a.abs(), ..*s }
                })
                .collect(),
            sheets: self
                .sheets
                .iter()
                .map(|s| {
                    let mut pts: Vec<(f64, f64)> = s.v.iter().zip(&s.d).map(|(&v, &d)| (m(v), d / a.abs())).collect();
                    pts.sort_by(|p, q| p.0.total_cmp(&q.0));
                    Sheet { v: pts.iter().map(|p| p.0).collect(), d: pts.iter().map(|p| p.1).collect(), ..s.clone() }
                })
                .collect(),
        }
    }

    /// Image of the atoms and segments under an arbitrary map of the (t, x) base point.
    pub fn pushforward_tx<F: Fn(f64, f64) -> (f64, f64)>(&self, f: F) -> AtomicMeasure3 {
        AtomicMeasure3 {
            atoms: self
                .atoms
                .iter()
                .map(|a| {
                    let (t, x) = f(a.t, a.x);
                    Atom { t, x, ..*a }
                })
                .collect(),
            segments: self
                .segments
                .iter()
                .map(|s| {
                    let (t, x) = f(s.t, s.x);
                    Segment { t, x, ..*s }
                })
                .collect(),
            sheets: self
                .sheets
                .iter()
                .map(|s| {
                    let (ta, xa) = f(s.t0, s.x0);
                    let (tb, xb) = f(s.t1, s.x_at(s.t1));
                    let speed = if tb != ta { (xb - xa) / (tb - ta) } else { 0.0 };
                    Sheet { t0: ta, t1: tb, x0: xa, speed, ..s.clone() }
                })
                .collect(),
        }
    }

    /// ∫ φ(t, x) g(v) dμ; `big_g` is an antiderivative of g, used on segments.
    pub fn integrate<P, G, H>(&self, phi: P, g: G, big_g: H) -> f64
    where
        P: Fn(f64, f64) -> f64,
        G: Fn(f64) -> f64,
        H: Fn(f64) -> f64,
    {
        self.integrate_split(phi, g, big_g, &[])
    }

    /// As `integrate`, with sheet quadrature split at the (sorted) kinks of g.
    pub fn integrate_split<P, G, H>(&self, phi: P, g: G, big_g: H, kinks: &[f64]) -> f64
    where
        P: Fn(f64, f64) -> f64,
        G: Fn(f64) -> f64,
        H: Fn(f64) -> f64,
    {
        let a: f64 = self.atoms.iter().map(|p| p.w * phi(p.t, p.x) * g(p.v)).sum();
        let s: f64 = self
            .segments
            .iter()
            .map(|s| s.density * phi(s.t, s.x) * (big_g(s.vb) - big_g(s.va)))
            .sum();
        let h: f64 = self
            .sheets
            .iter()
            .map(|s| {
                let vi = s.v_integral_split(&g, kinks);
                if vi == 0.0 {
                    0.0
                } else {
                    vi * gl8_panels(|t| phi(t, s.x_at(t)), s.t0, s.t1, 8)
                }
            })
            .sum();
        a + s + h
    }

    /// Merge segments sharing a base point into disjoint pieces with summed densities,
    /// and atoms sharing a location into one.
    pub fn consolidate(&self) -> AtomicMeasure3 {
        let mut atoms = self.atoms.clone();
        atoms.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.x.total_cmp(&b.x)).then(a.v.total_cmp(&b.v)));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(l) if l.t == a.t && l.x == a.x && l.v == a.v => l.w += a.w,
                _ => merged.push(a),
            }
        }
        merged.retain(|a| a.w != 0.0);

        let mut segs = self.segments.clone();
        segs.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.x.total_cmp(&b.x)));
        let mut out = Vec::with_capacity(segs.len());
        let mut i = 0;
        while i < segs.len() {
            let mut j = i + 1;
            while j < segs.len() && segs[j].t == segs[i].t && segs[j].x == segs[i].x {
                j += 1;
            }
            out.extend(merge_column(&segs[i..j]));
            i = j;
        }
        AtomicMeasure3 { atoms: merged, segments: out, sheets: self.sheets.clone() }
    }

    /// (t, x) marginal of the total variation.
    pub fn marginal_tx(&self) -> PlaneMeasure {
        PlaneMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| (a.t, a.x, a.w.abs()))
                .chain(self.segments.iter().map(|s| (s.t, s.x, s.mass().abs())))
                .collect(),
            lines: self
                .sheets
                .iter()
                .map(|s| Line { t0: s.t0, t1: s.t1, x0: s.x0, speed: s.speed, density: s.v_abs_mass() })
                .collect(),
        }
    }
}

fn merge_column(col: &[Segment]) -> Vec<Segment> {
    if col.len() == 1 {
        return col.to_vec();
    }
    let mut cuts: Vec<f64> = col.iter().flat_map(|s| [s.va, s.vb]).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out: Vec<Segment> = Vec::new();
    for w in cuts.windows(2) {
        let m = 0.5 * (w[0] + w[1]);
        let d: f64 = col.iter().filter(|s| s.va <= m && m < s.vb).map(|s| s.density).sum();
        if d == 0.0 {
            continue;
        }
        match out.last_mut() {
            Some(l) if l.vb == w[0] && l.density == d => l.vb = w[1],
            _ => out.push(Segment { t: col[0].t, x: col[0].x, va: w[0], vb: w[1], density: d }),
        }
    }
    out
}

/// Line x = x0 + speed·(t − t0) on [t0, t1] with `density` per unit t.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub t0: f64,
    pub t1: f64,
    pub x0: f64,
    pub speed: f64,
    pub density: f64,
}

impl Line {
    pub fn x_at(&self, t: f64) -> f64 {
        self.x0 + self.speed * (t - self.t0)
    }

    /// Length of the t-interval on which the line lies in the closed disk.
    pub fn t_extent_in_disk(&self, tc: f64, xc: f64, r: f64) -> f64 {
        let s = self.speed;
        let e = self.x_at(tc) - xc;
        let (a, b, c) = (1.0 + s * s, 2.0 * e * s, e * e - r * r);
        let disc = b * b - 4.0 * a * c;
        if disc <= 0.0 {
            return 0.0;
        }
        let q = disc.sqrt();
        let (lo, hi) = ((-b - q) / (2.0 * a) + tc, (-b + q) / (2.0 * a) + tc);
        (hi.min(self.t1) - lo.max(self.t0)).max(0.0)
    }
}

/// Nonnegative measure on (t, x): point masses and line densities.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlaneMeasure {
    pub atoms: Vec<(f64, f64, f64)>,
    pub lines: Vec<Line>,
}

impl PlaneMeasure {
    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.2).sum::<f64>() + self.lines.iter().map(|l| l.density * (l.t1 - l.t0)).sum::<f64>()
    }

    pub fn ball_mass(&self, tc: f64, xc: f64, r: f64) -> f64 {
        let a: f64 = self
            .atoms
            .iter()
            .filter(|p| (p.0 - tc).powi(2) + (p.1 - xc).powi(2) <= r * r)
            .map(|p| p.2)
            .sum();
        a + self.lines.iter().map(|l| l.density * l.t_extent_in_disk(tc, xc, r)).sum::<f64>()
    }

    pub fn extend(&mut self, other: PlaneMeasure) {
        self.atoms.extend(other.atoms);
        self.lines.extend(other.lines);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tent() -> Sheet {
        Sheet { t0: 0.0, t1: 1.0, x0: 0.0, speed: 0.5, v: vec![0.0, 0.5, 1.0], d: vec![0.0, 0.25, 0.0] }
    }

    #[test]
    fn sheet_masses() {
        let s = tent();
        assert!((s.v_mass() - 0.125).abs() < 1e-15);
        assert!((s.v_integral(|_| 1.0) - 0.125).abs() < 1e-15);
        let m = AtomicMeasure3 { sheets: vec![s], ..Default::default() };
        assert!((m.total_variation() - 0.125).abs() < 1e-15);
        let half = m.restrict((0.0, 0.5), (-1.0, 1.0), (0.0, 1.0));
        assert!((half.total() - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn signed_split_of_sheet() {
        let s = Sheet { t0: 0.0, t1: 1.0, x0: 0.0, speed: 0.0, v: vec![0.0, 1.0], d: vec![-1.0, 1.0] };
        let m = AtomicMeasure3 { sheets: vec![s], ..Default::default() };
        assert!((m.positive_part().total() - 0.25).abs() < 1e-15);
        assert!((m.negative_part().total() + 0.25).abs() < 1e-15);
        assert!((m.total_variation() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn consolidation_cancels_overlaps() {
        let a = Segment { t: 0.5, x: 0.0, va: 0.25, vb: 0.75, density: 1.0 };
        let b = Segment { t: 0.5, x: 0.0, va: 0.5, vb: 1.0, density: -1.0 };
        let m = AtomicMeasure3 { segments: vec![a, b], ..Default::default() }.consolidate();
        assert_eq!(m.segments.len(), 2);
        assert!((m.total_variation() - 0.5).abs() < 1e-15);
        assert!((m.total()).abs() < 1e-15);
    }

    #[test]
    fn line_in_disk() {
        let l = Line { t0: -10.0, t1: 10.0, x0: -10.0, speed: 1.0, density: 1.0 };
        let e = l.t_extent_in_disk(0.0, 0.0, 1.0);
        // chord of length 2 at 45 degrees
        assert!((e - 2.0 / 2f64.sqrt()).abs() < 1e-14, "{e}");
    }
}
