//! The 1-current T = (χ, χ f′, −μ₁) on a (t, x, v) box grid and its decomposition into
//! weighted monotone paths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::front::{FrontTrackingSolution, NONE};
use crate::lagrangian::{Curve, CurveEnd};
use crate::measure::{Atom, AtomicMeasure3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurrentGrid {
    pub nt: usize,
    pub nx: usize,
    pub nv: usize,
    pub t: (f64, f64),
    pub x: (f64, f64),
    pub v: (f64, f64),
}

impl CurrentGrid {
    /// 64 × 64 × 32 cells over [0, T] × (padded front hull) × [lo, hi].
    pub fn around(sol: &FrontTrackingSolution) -> CurrentGrid {
        CurrentGrid::around_with(sol, 64, 64, 32)
    }

    pub fn around_with(sol: &FrontTrackingSolution, nt: usize, nx: usize, nv: usize) -> CurrentGrid {
        let (a, b) = sol.front_hull();
        let pad = 0.25 * (b - a).max(0.5);
        CurrentGrid { nt, nx, nv, t: (0.0, sol.t_final), x: (a - pad, b + pad), v: (sol.lo(), sol.hi()) }
    }

    pub fn dt(&self) -> f64 {
        (self.t.1 - self.t.0) / self.nt as f64
    }

    pub fn dx(&self) -> f64 {
        (self.x.1 - self.x.0) / self.nx as f64
    }

    pub fn dv(&self) -> f64 {
        (self.v.1 - self.v.0) / self.nv as f64
    }

    pub fn cells(&self) -> usize {
        self.nt * self.nx * self.nv
    }

    pub fn cell(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.nx + j) * self.nv + k
    }

    pub fn cell_index(&self, c: usize) -> (usize, usize, usize) {
        (c / (self.nx * self.nv), (c / self.nv) % self.nx, c % self.nv)
    }

    pub fn cell_center(&self, c: usize) -> [f64; 3] {
        let (i, j, k) = self.cell_index(c);
        [
            self.t.0 + (i as f64 + 0.5) * self.dt(),
            self.x.0 + (j as f64 + 0.5) * self.dx(),
            self.v.0 + (k as f64 + 0.5) * self.dv(),
        ]
    }

    fn n_tfaces(&self) -> usize {
        (self.nt + 1) * self.nx * self.nv
    }

    fn n_xfaces(&self) -> usize {
        self.nt * (self.nx + 1) * self.nv
    }

    pub fn faces(&self) -> usize {
        self.n_tfaces() + self.n_xfaces() + self.nt * self.nx * (self.nv + 1)
    }

    /// Face normal to t at t_i over cell (j, k).
    pub fn tface(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.nx + j) * self.nv + k
    }

    pub fn xface(&self, i: usize, j: usize, k: usize) -> usize {
        self.n_tfaces() + (i * (self.nx + 1) + j) * self.nv + k
    }

    pub fn vface(&self, i: usize, j: usize, k: usize) -> usize {
        self.n_tfaces() + self.n_xfaces() + (i * self.nx + j) * (self.nv + 1) + k
    }

    /// (axis, i, j, k) of a face; axis 0 = t, 1 = x, 2 = v.
    pub fn face_index(&self, f: usize) -> (usize, usize, usize, usize) {
        let (nt_f, nx_f) = (self.n_tfaces(), self.n_xfaces());
        if f < nt_f {
            (0, f / (self.nx * self.nv), (f / self.nv) % self.nx, f % self.nv)
        } else if f < nt_f + nx_f {
            let g = f - nt_f;
            (1, g / ((self.nx + 1) * self.nv), (g / self.nv) % (self.nx + 1), g % self.nv)
        } else {
            let g = f - nt_f - nx_f;
            (2, g / (self.nx * (self.nv + 1)), (g / (self.nv + 1)) % self.nx, g % (self.nv + 1))
        }
    }

    pub fn face_center(&self, f: usize) -> [f64; 3] {
        let (axis, i, j, k) = self.face_index(f);
        let (dt, dx, dv) = (self.dt(), self.dx(), self.dv());
        let mut p = [
            self.t.0 + (i as f64 + 0.5) * dt,
            self.x.0 + (j as f64 + 0.5) * dx,
            self.v.0 + (k as f64 + 0.5) * dv,
        ];
        p[axis] -= 0.5 * [dt, dx, dv][axis];
        p
    }

    /// Cell length across the face.
    pub fn face_step(&self, f: usize) -> f64 {
        [self.dt(), self.dx(), self.dv()][self.face_index(f).0]
    }

    /// Cells below and above the face along its axis, NONE outside the box.
    pub fn face_cells(&self, f: usize) -> (usize, usize) {
        let (axis, i, j, k) = self.face_index(f);
        let n = [self.nt, self.nx, self.nv][axis];
        let s = [i, j, k][axis];
        let at = |s: usize| {
            let mut ijk = [i, j, k];
            ijk[axis] = s;
            self.cell(ijk[0], ijk[1], ijk[2])
        };
        let lo = if s == 0 { NONE } else { at(s - 1) };
        let hi = if s == n { NONE } else { at(s) };
        (lo, hi)
    }

    /// The six faces of a cell as (lower, upper) per axis.
    pub fn cell_faces(&self, c: usize) -> [(usize, usize); 3] {
        let (i, j, k) = self.cell_index(c);
        [
            (self.tface(i, j, k), self.tface(i + 1, j, k)),
            (self.xface(i, j, k), self.xface(i, j + 1, k)),
            (self.vface(i, j, k), self.vface(i, j, k + 1)),
        ]
    }

    fn is_outer(&self, f: usize) -> bool {
        let (lo, hi) = self.face_cells(f);
        lo == NONE || hi == NONE
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCurrent {
    pub grid: CurrentGrid,
    /// integrated flux through every face, positive along the axis
    pub flux: Vec<f64>,
    /// per cell: outflow minus inflow over all six faces
    pub divergence: Vec<f64>,
    /// ∂T: +outflow / −inflow atoms on the outer faces, −divergence atoms in the cells
    pub boundary: AtomicMeasure3,
}

impl DiscreteCurrent {
    pub fn from_fluxes(grid: CurrentGrid, flux: Vec<f64>) -> Result<DiscreteCurrent> {
        if flux.len() != grid.faces() {
            return Err(Error::Invalid(format!("expected {} face fluxes, got {}", grid.faces(), flux.len())));
        }
        let divergence: Vec<f64> = (0..grid.cells())
            .into_par_iter()
            .map(|c| grid.cell_faces(c).iter().map(|&(a, b)| flux[b] - flux[a]).sum())
            .collect();
        let mut atoms = Vec::new();
        for f in 0..flux.len() {
            if flux[f] == 0.0 || !grid.is_outer(f) {
                continue;
            }
            let (lo, _) = grid.face_cells(f);
            // flux along the axis leaves through the upper shell and enters through the lower one
            let w = if lo == NONE { -flux[f] } else { flux[f] };
            let [t, x, v] = grid.face_center(f);
            atoms.push(Atom { t, x, v, w });
        }
        for (c, &d) in divergence.iter().enumerate() {
            if d != 0.0 {
                let [t, x, v] = grid.cell_center(c);
                atoms.push(Atom { t, x, v, w: -d });
            }
        }
        Ok(DiscreteCurrent { grid, flux, divergence, boundary: AtomicMeasure3 { atoms, ..Default::default() } })
    }

    /// Σ |flux|·(cell length across the face).
    pub fn mass(&self) -> f64 {
        self.flux.iter().enumerate().map(|(f, w)| w.abs() * self.grid.face_step(f)).sum()
    }

    /// Largest |divergence| over cells that touch no outer face.
    pub fn interior_divergence(&self) -> f64 {
        let g = &self.grid;
        (0..g.cells())
            .filter(|&c| {
                let (i, j, k) = g.cell_index(c);
                i > 0 && j > 0 && k > 0 && i + 1 < g.nt && j + 1 < g.nx && k + 1 < g.nv
            })
            .map(|c| self.divergence[c].abs())
            .fold(0.0, f64::max)
    }

    /// The three face tables as CSV: axis,i,j,k,flux.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("axis,i,j,k,flux\n");
        for (f, w) in self.flux.iter().enumerate() {
            let (a, i, j, k) = self.grid.face_index(f);
            s.push_str(&format!("{},{i},{j},{k},{w:e}\n", ["t", "x", "v"][a]));
        }
        s
    }
}

fn in_range(p: f64, r: (f64, f64)) -> bool {
    let tol = 1e-12 * (1.0 + r.0.abs().max(r.1.abs()));
    p >= r.0 - tol && p <= r.1 + tol
}

/// t- and x-faces from the exact solution, v-faces from −μ₁ (the v-density of μ₁ on the face).
pub fn build_current(sol: &FrontTrackingSolution, mu1: &AtomicMeasure3, grid: CurrentGrid) -> Result<DiscreteCurrent> {
    if grid.nt == 0 || grid.nx == 0 || grid.nv == 0 || !(grid.t.1 > grid.t.0) || !(grid.x.1 > grid.x.0) || !(grid.v.1 > grid.v.0) {
        return Err(Error::Invalid("degenerate current grid".into()));
    }
    if let Some(a) = mu1.atoms.first() {
        return Err(Error::Invalid(format!("μ₁ atom at (t, x, v) = ({}, {}, {}) has no v-density", a.t, a.x, a.v)));
    }
    for s in &mu1.segments {
        if !(in_range(s.t, grid.t) && in_range(s.x, grid.x) && in_range(s.va, grid.v) && in_range(s.vb, grid.v)) {
            return Err(Error::Support(format!("segment at (t, x) = ({}, {}) leaves the grid box", s.t, s.x)));
        }
    }
    for s in &mu1.sheets {
        let ok = in_range(s.t0, grid.t)
            && in_range(s.t1, grid.t)
            && in_range(s.x_at(s.t0), grid.x)
            && in_range(s.x_at(s.t1), grid.x)
            && s.v.iter().all(|&v| in_range(v, grid.v));
        if !ok {
            return Err(Error::Support(format!("front sheet from t = {} at x = {} leaves the grid box", s.t0, s.x0)));
        }
    }
    let (dt, dx, dv) = (grid.dt(), grid.dx(), grid.dv());
    let tt = |i: usize| grid.t.0 + i as f64 * dt;
    let xx = |j: usize| grid.x.0 + j as f64 * dx;
    let vv = |k: usize| grid.v.0 + k as f64 * dv;
    let mut flux = vec![0.0; grid.faces()];

    // t-faces: ∫∫ χ(t_i) over the x–v face
    let tf: Vec<Vec<f64>> = (0..=grid.nt)
        .into_par_iter()
        .map(|i| {
            let snap = sol.snapshot(tt(i).min(sol.t_final));
            let mut row = Vec::with_capacity(grid.nx * grid.nv);
            for j in 0..grid.nx {
                for k in 0..grid.nv {
                    row.push(snap.integrate(xx(j), xx(j + 1), |u| (u - vv(k)).clamp(0.0, dv)));
                }
            }
            row
        })
        .collect();
    // x-faces: ∫∫ χ f_δ′ over the t–v face
    let xf: Vec<Vec<f64>> = (0..grid.nt)
        .into_par_iter()
        .map(|i| {
            let (ta, tb) = (tt(i), tt(i + 1));
            let mut row = Vec::with_capacity((grid.nx + 1) * grid.nv);
            for j in 0..=grid.nx {
                let x = xx(j);
                let mut cuts = vec![ta];
                cuts.extend(sol.crossing_times(x, ta, tb));
                cuts.push(tb);
                let pieces: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[1] - w[0], sol.value_at(0.5 * (w[0] + w[1]), x))).collect();
                for k in 0..grid.nv {
                    let (va, vb) = (vv(k), vv(k + 1));
                    let fa = sol.pl.eval(va);
                    row.push(pieces.iter().map(|&(len, u)| if u > va { len * (sol.pl.eval(u.min(vb)) - fa) } else { 0.0 }).sum());
                }
            }
            row
        })
        .collect();
    for (i, row) in tf.into_iter().enumerate() {
        for (n, w) in row.into_iter().enumerate() {
            flux[grid.tface(i, n / grid.nv, n % grid.nv)] = w;
        }
    }
    for (i, row) in xf.into_iter().enumerate() {
        for (n, w) in row.into_iter().enumerate() {
            flux[grid.xface(i, n / grid.nv, n % grid.nv)] = w;
        }
    }
    // v-faces: −(v-density of μ₁ at v_k) integrated over the t–x cell
    let cell_of = |p: f64, a: f64, h: f64, n: usize| (((p - a) / h).floor().max(0.0) as usize).min(n - 1);
    for s in &mu1.segments {
        let (i, j) = (cell_of(s.t, grid.t.0, dt, grid.nt), cell_of(s.x, grid.x.0, dx, grid.nx));
        for k in 0..=grid.nv {
            let v = vv(k);
            if v >= s.va && v < s.vb {
                flux[grid.vface(i, j, k)] -= s.density;
            }
        }
    }
    for s in &mu1.sheets {
        let ks: Vec<(usize, f64)> = (0..=grid.nv).map(|k| (k, s.density(vv(k)))).filter(|p| p.1 != 0.0).collect();
        if ks.is_empty() || !(s.t1 > s.t0) {
            continue;
        }
        let i0 = cell_of(s.t0, grid.t.0, dt, grid.nt);
        let i1 = cell_of(s.t1, grid.t.0, dt, grid.nt);
        for i in i0..=i1 {
            let (ta, tb) = (tt(i).max(s.t0), tt(i + 1).min(s.t1));
            if !(tb > ta) {
                continue;
            }
            // t-lengths of the line inside each x-cell of the slab
            let mut spans: Vec<(usize, f64)> = Vec::new();
            if s.speed == 0.0 {
                spans.push((cell_of(s.x0, grid.x.0, dx, grid.nx), tb - ta));
            } else {
                let (xa, xb) = (s.x_at(ta), s.x_at(tb));
                let (lo, hi) = (xa.min(xb), xa.max(xb));
                for j in cell_of(lo, grid.x.0, dx, grid.nx)..=cell_of(hi, grid.x.0, dx, grid.nx) {
                    let (ca, cb) = (xx(j).max(lo), xx(j + 1).min(hi));
                    if cb > ca {
                        spans.push((j, (cb - ca) / s.speed.abs()));
                    }
                }
            }
            for (j, len) in spans {
                for &(k, d) in &ks {
                    flux[grid.vface(i, j, k)] -= d * len;
                }
            }
        }
    }
    DiscreteCurrent::from_fluxes(grid, flux)
}

/// Where a path starts or ends: an outer face or a cell carrying divergence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Terminal {
    Face(u32),
    Cell(u32),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub start: Terminal,
    pub end: Terminal,
    /// visited cells in order
    pub cells: Vec<u32>,
    pub weight: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PathFamily {
    pub paths: Vec<Path>,
    /// flux removed as closed loops
    pub cycle_residual: f64,
    /// flux left on faces after extraction, weighted like the current mass
    pub leftover: f64,
}

fn face_between(g: &CurrentGrid, a: usize, b: usize) -> (usize, f64) {
    for &(lo, hi) in g.cell_faces(a).iter() {
        if g.face_cells(hi).1 == b {
            return (hi, 1.0);
        }
        if g.face_cells(lo).0 == b {
            return (lo, -1.0);
        }
    }
    panic!("cells {a} and {b} are not adjacent")
}

impl Path {
    /// (face, direction) for every face crossed, boundary faces included.
    pub fn faces(&self, g: &CurrentGrid) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(self.cells.len() + 1);
        if let Terminal::Face(f) = self.start {
            let f = f as usize;
            out.push((f, if g.face_cells(f).0 == NONE { 1.0 } else { -1.0 }));
        }
        for w in self.cells.windows(2) {
            out.push(face_between(g, w[0] as usize, w[1] as usize));
        }
        if let Terminal::Face(f) = self.end {
            let f = f as usize;
            out.push((f, if g.face_cells(f).1 == NONE { 1.0 } else { -1.0 }));
        }
        out
    }

    pub fn length(&self, g: &CurrentGrid) -> f64 {
        self.faces(g).iter().map(|&(f, _)| g.face_step(f)).sum()
    }

    /// Polygon through the start face centre, the cell centres and the end face centre.
    pub fn points(&self, g: &CurrentGrid) -> Vec<[f64; 3]> {
        let mut p = Vec::with_capacity(self.cells.len() + 2);
        if let Terminal::Face(f) = self.start {
            p.push(g.face_center(f as usize));
        }
        p.extend(self.cells.iter().map(|&c| g.cell_center(c as usize)));
        if let Terminal::Face(f) = self.end {
            p.push(g.face_center(f as usize));
        }
        p
    }

    pub fn to_json_line(&self, g: &CurrentGrid) -> String {
        serde_json::json!({ "weight": self.weight, "points": self.points(g) }).to_string()
    }
}

struct Peeler<'a> {
    g: &'a CurrentGrid,
    rem: Vec<f64>,
    sink: Vec<f64>,
    eps: f64,
}

enum Exit {
    Face(usize, usize),
    Sink,
}

impl Peeler<'_> {
    /// Admissible exits in potential order: forward in t, then x, then v downward before
    /// upward, then backward in t, then the cell's own sink.
    fn exit(&self, c: usize) -> Option<Exit> {
        let [(t0, t1), (x0, x1), (v0, v1)] = self.g.cell_faces(c);
        let out = |f: usize, up: bool| {
            let r = self.rem[f];
            if (up && r > self.eps) || (!up && r < -self.eps) {
                let (lo, hi) = self.g.face_cells(f);
                Some(Exit::Face(f, if up { hi } else { lo }))
            } else {
                None
            }
        };
        out(t1, true)
            .or_else(|| out(x1, true))
            .or_else(|| out(x0, false))
            .or_else(|| out(v0, false))
            .or_else(|| out(v1, true))
            .or_else(|| out(t0, false))
            .or_else(|| (self.sink[c] > self.eps).then_some(Exit::Sink))
    }
}

/// Greedy extraction of source-to-sink paths with bottleneck weights; loops met on the
/// way are cancelled and booked as cycle residual.
pub fn smirnov_decompose(cur: &DiscreteCurrent) -> Result<PathFamily> {
    let g = &cur.grid;
    let scale = cur.flux.iter().fold(0.0f64, |m, w| m.max(w.abs())).max(cur.divergence.iter().fold(0.0f64, |m, w| m.max(w.abs())));
    let eps = 1e-15 * scale;
    let mut pe = Peeler { g, rem: cur.flux.clone(), sink: cur.divergence.iter().map(|&d| (-d).max(0.0)).collect(), eps };
    // sources: inflow faces of the shell, then cells with net outflow
    let mut sources: Vec<(Terminal, usize, f64)> = Vec::new();
    for f in 0..cur.flux.len() {
        let w = cur.flux[f];
        let (lo, hi) = g.face_cells(f);
        if lo == NONE && w > 0.0 {
            sources.push((Terminal::Face(f as u32), hi, w));
        } else if hi == NONE && w < 0.0 {
            sources.push((Terminal::Face(f as u32), lo, -w));
        }
    }
    for (c, &d) in cur.divergence.iter().enumerate() {
        if d > 0.0 {
            sources.push((Terminal::Cell(c as u32), c, d));
        }
    }
    let mut fam = PathFamily::default();
    let mut stamp = vec![u32::MAX; g.cells()];
    let mut pos = vec![0u32; g.cells()];
    let mut walk = 0u32;
    for (start, first, mut supply) in sources {
        while supply > eps {
            walk = walk.wrapping_add(1);
            let mut cells = vec![first];
            let mut faces: Vec<usize> = Vec::new();
            stamp[first] = walk;
            pos[first] = 0;
            let end = loop {
                let c = *cells.last().unwrap();
                match pe.exit(c) {
                    None => {
                        let w = faces.iter().map(|&f| pe.rem[f].abs()).fold(supply, f64::min);
                        if w <= 1e-12 * scale {
                            // rounding dust: drop what is left on this walk
                            for &f in &faces {
                                pe.rem[f] = 0.0;
                            }
                            supply = 0.0;
                            break None;
                        }
                        return Err(Error::Nonconservative(format!(
                            "stuck in cell {:?} carrying {w:e}",
                            g.cell_index(c)
                        )));
                    }
                    Some(Exit::Sink) => break Some(Terminal::Cell(c as u32)),
                    Some(Exit::Face(f, next)) => {
                        faces.push(f);
                        if next == NONE {
                            break Some(Terminal::Face(f as u32));
                        }
                        if stamp[next] == walk {
                            // close the loop and cancel it
                            let at = pos[next] as usize;
                            let lp = &faces[at..];
                            let w = lp.iter().map(|&f| pe.rem[f].abs()).fold(f64::INFINITY, f64::min);
                            for &f in lp {
                                pe.rem[f] -= w * pe.rem[f].signum();
                                fam.cycle_residual += w * g.face_step(f);
                            }
                            for &c in &cells[at + 1..] {
                                stamp[c] = u32::MAX;
                            }
                            cells.truncate(at + 1);
                            faces.truncate(at);
                            continue;
                        }
                        stamp[next] = walk;
                        pos[next] = cells.len() as u32;
                        cells.push(next);
                    }
                }
            };
            for &c in &cells {
                stamp[c] = u32::MAX;
            }
            let Some(end) = end else { continue };
            let mut w = faces.iter().map(|&f| pe.rem[f].abs()).fold(supply, f64::min);
            if let Terminal::Cell(c) = end {
                w = w.min(pe.sink[c as usize]);
                pe.sink[c as usize] -= w;
            }
            for &f in &faces {
                pe.rem[f] -= w * pe.rem[f].signum();
            }
            supply -= w;
            if let Terminal::Face(f) = start {
                pe.rem[f as usize] -= w * pe.rem[f as usize].signum();
            }
            fam.paths.push(Path { start, end, cells: cells.iter().map(|&c| c as u32).collect(), weight: w });
        }
    }
    fam.leftover = pe.rem.iter().enumerate().map(|(f, w)| w.abs() * g.face_step(f)).sum();
    Ok(fam)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurrentReport {
    pub mass: f64,
    pub boundary_mass: f64,
    pub cycle_residual: f64,
    pub acyclic: bool,
}

pub fn check_normal_acyclic(cur: &DiscreteCurrent) -> Result<CurrentReport> {
    let mass = cur.mass();
    let fam = smirnov_decompose(cur)?;
    Ok(CurrentReport {
        mass,
        boundary_mass: cur.boundary.total_variation(),
        cycle_residual: fam.cycle_residual + fam.leftover,
        acyclic: fam.cycle_residual + fam.leftover <= 1e-9 * mass,
    })
}

impl PathFamily {
    pub fn total_mass(&self, g: &CurrentGrid) -> f64 {
        self.paths.par_iter().map(|p| p.weight * p.length(g)).collect::<Vec<f64>>().iter().sum()
    }

    /// Largest |path endpoint weight − ∂T atom| over boundary atoms, both signs.
    pub fn boundary_mismatch(&self, cur: &DiscreteCurrent) -> f64 {
        use std::collections::BTreeMap;
        let g = &cur.grid;
        let mut want: BTreeMap<Terminal, f64> = BTreeMap::new();
        for f in 0..cur.flux.len() {
            let w = cur.flux[f];
            if w != 0.0 && g.is_outer(f) {
                let (lo, _) = g.face_cells(f);
                *want.entry(Terminal::Face(f as u32)).or_default() += if lo == NONE { -w } else { w };
            }
        }
        for (c, &d) in cur.divergence.iter().enumerate() {
            if d != 0.0 {
                *want.entry(Terminal::Cell(c as u32)).or_default() -= d;
            }
        }
        let mut got: BTreeMap<Terminal, f64> = BTreeMap::new();
        for p in &self.paths {
            *got.entry(p.start).or_default() -= p.weight;
            *got.entry(p.end).or_default() += p.weight;
        }
        let keys: std::collections::BTreeSet<Terminal> = want.keys().chain(got.keys()).copied().collect();
        keys.into_iter()
            .map(|k| (want.get(&k).copied().unwrap_or(0.0) - got.get(&k).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max)
    }

    /// Steps that cross a face against (or without) its original flux.
    pub fn cone_violations(&self, cur: &DiscreteCurrent) -> usize {
        self.paths
            .par_iter()
            .map(|p| p.faces(&cur.grid).iter().filter(|&&(f, dir)| !(cur.flux[f] * dir > 0.0)).count())
            .sum()
    }
}

/// Curve through the path stations ordered by t. Moves made at a fixed t become
/// instantaneous: v-moves are γᵛ jumps. Paths spanning a single t-slab are discarded.
pub fn reparametrize(path: &Path, g: &CurrentGrid) -> Option<Curve> {
    let pts = path.points(g);
    // stations: t, entry (x, v), exit (x, v)
    let mut st: Vec<(f64, (f64, f64), (f64, f64))> = Vec::new();
    for p in &pts {
        match st.last_mut() {
            Some(s) if (p[0] - s.0).abs() <= 1e-12 * (1.0 + s.0.abs()) => s.2 = (p[1], p[2]),
            _ => st.push((p[0], (p[1], p[2]), (p[1], p[2]))),
        }
    }
    if st.len() < 2 || st.last().unwrap().0 - st[0].0 < g.dt() * (1.0 - 1e-9) {
        return None;
    }
    let mut knots = Vec::new();
    let mut levels = Vec::new();
    for (n, s) in st.iter().enumerate() {
        if n > 0 {
            levels.push(st[n - 1].2 .1);
        }
        knots.push((s.0, s.1 .0));
        if s.2 != s.1 {
            levels.push(s.1 .1);
            knots.push((s.0, s.2 .0));
        }
    }
    Some(Curve {
        t0: st[0].0,
        t1: st.last().unwrap().0,
        jump_fronts: vec![NONE; levels.len() - 1],
        knots,
        levels,
        born_on: NONE,
        end: CurveEnd::Final,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::flux::Flux;
    use crate::front::{front_track, FrontTrackParams};
    use crate::lagrangian::exact_mu1;
    use crate::pwc::PiecewiseConstant;

    fn shock_current(nt: usize, nx: usize, nv: usize) -> DiscreteCurrent {
        let sol = front_track(&fixtures::shock(), &Flux::burgers(), 1.0, FrontTrackParams::default()).unwrap();
        build_current(&sol, &exact_mu1(&sol), CurrentGrid::around_with(&sol, nt, nx, nv)).unwrap()
    }

    #[test]
    fn constant_state_current() {
        let sol = front_track(&PiecewiseConstant::constant(0.5), &Flux::burgers(), 1.0, FrontTrackParams::default()).unwrap();
        let g = CurrentGrid { nt: 4, nx: 4, nv: 4, t: (0.0, 1.0), x: (0.0, 1.0), v: (0.0, 1.0) };
        let cur = build_current(&sol, &AtomicMeasure3::default(), g).unwrap();
        assert!((cur.flux[g.tface(2, 1, 0)] - 0.25 * 0.25).abs() < 1e-15);
        assert_eq!(cur.flux[g.tface(2, 1, 3)], 0.0);
        // f′ = v on [0, 1/4]: ∫ v dv = 1/32 over a quarter in t
        assert!((cur.flux[g.xface(1, 2, 0)] - 0.25 / 32.0).abs() < 1e-15);
        assert!(cur.divergence.iter().all(|d| d.abs() < 1e-15));
        let fam = smirnov_decompose(&cur).unwrap();
        assert!(fam.paths.iter().all(|p| p.cells.iter().all(|&c| g.cell_index(c as usize).2 < 2)));
        assert_eq!(fam.cycle_residual, 0.0);
    }

    #[test]
    fn shock_interior_divergence_vanishes() {
        let cur = shock_current(20, 20, 10);
        assert!(cur.interior_divergence() < 1e-10, "{}", cur.interior_divergence());
        assert!(cur.divergence.iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn spurious_v_flux_shows_in_the_boundary() {
        let mut cur = shock_current(8, 8, 8);
        let g = cur.grid;
        cur.flux[g.vface(3, 3, 4)] += 0.01;
        let cur = DiscreteCurrent::from_fluxes(g, cur.flux).unwrap();
        assert!((cur.divergence[g.cell(3, 3, 4)] + 0.01).abs() < 1e-12);
        assert!((cur.divergence[g.cell(3, 3, 3)] - 0.01).abs() < 1e-12);
    }

    #[test]
    fn shock_decomposition_is_additive() {
        let cur = shock_current(20, 20, 10);
        let fam = smirnov_decompose(&cur).unwrap();
        let m = cur.mass();
        assert!((fam.total_mass(&cur.grid) - m).abs() <= 1e-9 * m);
        assert!(fam.boundary_mismatch(&cur) <= 1e-9 * cur.boundary.total_variation());
        assert_eq!(fam.cone_violations(&cur), 0);
        let rep = check_normal_acyclic(&cur).unwrap();
        assert!(rep.acyclic, "{rep:?} {} {}", fam.cycle_residual, fam.leftover);
    }

    #[test]
    fn circulation_is_all_cycle() {
        let g = CurrentGrid { nt: 1, nx: 2, nv: 2, t: (0.0, 1.0), x: (0.0, 1.0), v: (0.0, 1.0) };
        let mut flux = vec![0.0; g.faces()];
        flux[g.xface(0, 1, 0)] = 1.0;
        flux[g.vface(0, 1, 1)] = 1.0;
        flux[g.xface(0, 1, 1)] = -1.0;
        flux[g.vface(0, 0, 1)] = -1.0;
        let cur = DiscreteCurrent::from_fluxes(g, flux).unwrap();
        assert!(cur.boundary.is_empty());
        // no sources: nothing is peeled, the whole mass is left circulating
        let fam = smirnov_decompose(&cur).unwrap();
        assert!(fam.paths.is_empty());
        assert!((fam.leftover - cur.mass()).abs() < 1e-15);
        let rep = check_normal_acyclic(&cur).unwrap();
        assert!((rep.cycle_residual - rep.mass).abs() < 1e-15 && !rep.acyclic);
    }

    #[test]
    fn zero_current() {
        let g = CurrentGrid { nt: 2, nx: 2, nv: 2, t: (0.0, 1.0), x: (0.0, 1.0), v: (0.0, 1.0) };
        let cur = DiscreteCurrent::from_fluxes(g, vec![0.0; g.faces()]).unwrap();
        let rep = check_normal_acyclic(&cur).unwrap();
        assert_eq!((rep.mass, rep.acyclic), (0.0, true));
        assert!(smirnov_decompose(&cur).unwrap().paths.is_empty());
    }

    #[test]
    fn reparametrize_cases() {
        let g = CurrentGrid { nt: 4, nx: 4, nv: 4, t: (0.0, 1.0), x: (0.0, 1.0), v: (0.0, 1.0) };
        let straight = Path {
            start: Terminal::Face(g.tface(0, 1, 2) as u32),
            end: Terminal::Face(g.tface(4, 1, 2) as u32),
            cells: (0..4).map(|i| g.cell(i, 1, 2) as u32).collect(),
            weight: 1.0,
        };
        let c = reparametrize(&straight, &g).unwrap();
        assert!(c.levels.iter().all(|&v| v == 0.625));
        let down = Path { cells: vec![g.cell(0, 1, 2) as u32, g.cell(1, 1, 2) as u32, g.cell(1, 1, 1) as u32, g.cell(2, 1, 1) as u32], ..straight.clone() };
        let c = reparametrize(&Path { end: Terminal::Cell(g.cell(2, 1, 1) as u32), ..down }, &g).unwrap();
        assert_eq!(c.jumps().filter(|j| j.2 != j.3).count(), 1);
        let vertical = Path {
            start: Terminal::Cell(g.cell(1, 1, 3) as u32),
            end: Terminal::Cell(g.cell(1, 1, 1) as u32),
            cells: vec![g.cell(1, 1, 3) as u32, g.cell(1, 1, 2) as u32, g.cell(1, 1, 1) as u32],
            weight: 1.0,
        };
        assert!(reparametrize(&vertical, &g).is_none());
    }
}
