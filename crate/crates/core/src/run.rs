//! Run orchestration: one scenario in, one deterministic bundle of files out.
//!
//! Every file of a bundle except `timings.json` is a function of the scenario alone.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::besov::{besov_time_scaling, BesovReport};
use crate::current::{build_current, smirnov_decompose, CurrentGrid};
use crate::diagnostics::{classify_points, concentration_profile, diameter, jump_identity_check, probe_radii};
use crate::error::{Error, Result};
use crate::euler::{
    front_track_euler, kinetic_g_balance, quasi_entropy_check, shock_classify, signed_decomposition_check, view_source_structure, EulerSolution,
    EulerState, Invariant, KSet,
};
use crate::flux::{entropy_flux, Entropy, Flux, FluxKind};
use crate::front::{front_track, FrontKind, FrontTrackParams, FrontTrackingSolution};
use crate::lagrangian::{aggregate_measures, build_hypograph_rep, exact_mu1};
use crate::measure::{Line, PlaneMeasure};
use crate::oleinik::oleinik_check;
use crate::report::{fronts_csv, json_lines, measure_csv, pretty_json, to_csv};
use crate::scenario::{InitialData, Scenario};
use crate::testfn::dictionary;

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub scenario: Scenario,
    pub outputs: Vec<String>,
    /// diagnostics that were not run, with the reason
    pub skipped: BTreeMap<String, String>,
    pub constants: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bundle {
    pub manifest: Manifest,
    /// file name → contents, manifest excluded
    pub files: BTreeMap<String, String>,
    /// stage → wall seconds
    pub timings: BTreeMap<String, f64>,
}

impl Bundle {
    fn new(scenario: &Scenario) -> Bundle {
        Bundle {
            manifest: Manifest {
                tool: TOOL.into(),
                version: VERSION.into(),
                scenario: scenario.clone(),
                outputs: Vec::new(),
                skipped: BTreeMap::new(),
                constants: BTreeMap::new(),
            },
            files: BTreeMap::new(),
            timings: BTreeMap::new(),
        }
    }

    fn put(&mut self, name: &str, text: String) {
        self.files.insert(name.to_string(), text);
    }

    fn skip(&mut self, name: &str, why: &str) {
        self.manifest.skipped.insert(name.to_string(), why.to_string());
    }

    fn constant(&mut self, name: &str, v: f64) {
        self.manifest.constants.insert(name.to_string(), v);
    }

    fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.timings.insert(stage.to_string(), t0.elapsed().as_secs_f64());
        out
    }

    pub fn manifest_json(&self) -> String {
        let mut m = self.manifest.clone();
        m.outputs = self.files.keys().cloned().collect();
        pretty_json(&m)
    }

    /// Every file of the bundle, manifest included, timings excluded.
    pub fn deterministic_files(&self) -> BTreeMap<String, String> {
        let mut all = self.files.clone();
        all.insert("manifest.json".into(), self.manifest_json());
        all
    }

    /// Writes the bundle through one writer: files in name order, then the timings.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))?;
        for (name, text) in self.deterministic_files() {
            let p = dir.join(&name);
            std::fs::write(&p, text).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))?;
        }
        std::fs::write(dir.join("timings.json"), pretty_json(&self.timings))?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct SnapRow {
    t: f64,
    x_from: f64,
    x_to: f64,
    value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct EulerSnapRow {
    t: f64,
    x_from: f64,
    x_to: f64,
    rho: f64,
    m: f64,
    w: f64,
    z: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct EulerFrontRow {
    id: usize,
    tb: f64,
    xb: f64,
    td: f64,
    speed: f64,
    rho_l: f64,
    m_l: f64,
    rho_r: f64,
    m_r: f64,
    kind: FrontKind,
    family: u8,
}

fn snapshot_times(t_final: f64) -> [f64; 4] {
    [0.0, 0.25 * t_final, 0.5 * t_final, t_final]
}

fn intervals(breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut edges = vec![f64::NEG_INFINITY];
    edges.extend_from_slice(breaks);
    edges.push(f64::INFINITY);
    edges.windows(2).map(|w| (w[0], w[1])).collect()
}

pub fn run(scenario: &Scenario) -> Result<Bundle> {
    match &scenario.initial {
        InitialData::Scalar { .. } => run_scalar(scenario),
        InitialData::Euler { breaks, states, kset } => run_euler(scenario, breaks, states, kset),
    }
}

/// Front tracking of a scalar scenario with its discretization.
pub fn solve_scalar(scenario: &Scenario) -> Result<FrontTrackingSolution> {
    let flux = scenario.flux()?;
    let data = match &scenario.initial {
        InitialData::Scalar { data, .. } => data,
        InitialData::Euler { .. } => return Err(Error::Config("expected a scalar scenario".into())),
    };
    let d = scenario.discretization;
    front_track(data, &flux, scenario.t_final, FrontTrackParams { dv: d.dv, max_fronts: d.max_fronts })
}

fn run_scalar(sc: &Scenario) -> Result<Bundle> {
    let mut b = Bundle::new(sc);
    let dg = &sc.diagnostics;
    let d = sc.discretization;
    let flux = sc.flux()?;
    let sol = b.timed("front_track", || solve_scalar(sc))?;
    b.constant("fronts", sol.fronts.len() as f64);
    b.constant("events", sol.events.len() as f64);
    b.put("fronts.csv", fronts_csv(&sol.fronts)?);
    let mut snaps = Vec::new();
    for t in snapshot_times(sc.t_final) {
        let s = sol.snapshot(t);
        for (k, (a, c)) in intervals(&s.breaks).into_iter().enumerate() {
            snaps.push(SnapRow { t, x_from: a, x_to: c, value: s.values[k] });
        }
    }
    b.put("snapshots.csv", to_csv(&snaps, "t,x_from,x_to,value")?);
    let (hull_a, hull_b) = sol.front_hull();

    let measures = if dg.lagrangian {
        let fam = b.timed("lagrangian", || build_hypograph_rep(&sol, d.n_v))?;
        let (mu0, mu1) = b.timed("aggregate", || aggregate_measures(&fam));
        b.constant("curves", fam.len() as f64);
        b.constant("curve_defects", fam.defects() as f64);
        b.constant("mu1_total", mu1.total());
        b.constant("mu1_exact_total", exact_mu1(&sol).total());
        b.constant("mu0_interior_mass", crate::lagrangian::interior(&mu0, sc.t_final).total_variation());
        b.put("mu0.csv", measure_csv(&mu0)?);
        b.put("mu1.csv", measure_csv(&mu1)?);
        if let Ok(pair) = entropy_flux(&flux, &Entropy::quadratic()) {
            let ji = jump_identity_check(&sol, &fam, &pair, 0.05 * sc.t_final);
            b.constant("jump_identity_max_defect", ji.max_defect);
            b.put("jump_identity.json", pretty_json(&ji));
        }
        if dg.curves {
            b.put("curves.jsonl", json_lines(fam.weighted().map(|(c, w)| c.to_json_line(w))));
        } else {
            b.skip("curves.jsonl", "diagnostics.curves = false");
        }
        Some((mu0, mu1))
    } else {
        b.skip("mu0.csv", "diagnostics.lagrangian = false");
        b.skip("mu1.csv", "diagnostics.lagrangian = false");
        None
    };

    for (on, name) in [(dg.residual, "residual.json"), (dg.concentration, "concentration.json"), (dg.classify, "points.jsonl")] {
        if !on {
            b.skip(name, "toggled off");
        } else if measures.is_none() {
            b.skip(name, "needs the Lagrangian measures");
        }
    }
    if let Some((mu0, mu1)) = &measures {
        if dg.residual {
            let dict = dictionary(sc.seed, 20, sc.t_final, (hull_a - 0.25, hull_b + 0.25), (flux.lo, flux.hi));
            let rep = b.timed("residual", || crate::lagrangian::kinetic_residual(&sol, mu0, mu1, &dict));
            b.constant("kinetic_residual", rep.max);
            b.put("residual.json", pretty_json(&rep));
        }
        let nu1 = mu1.marginal_tx();
        if dg.concentration {
            let radii: Vec<f64> = (0..6).map(|k| d.dv * 2f64.powi(k)).collect();
            let prof = b.timed("concentration", || concentration_profile(&nu1, &sol, &radii));
            let fraction = prof[2];
            b.constant("concentration_fraction", fraction);
            b.put("concentration.json", pretty_json(&serde_json::json!({ "radius": radii[2], "fraction": fraction, "radii": radii, "profile": prof })));
        }
        if dg.classify {
            let radii = probe_radii(diameter(&sol));
            let recs = b.timed("classify", || classify_points(&sol, &nu1, &sc.probes, &radii, d.dv));
            b.put("points.jsonl", json_lines(recs.iter().map(|r| r.to_json_line())));
        }
    }

    if dg.oleinik {
        if matches!(flux.kind, FluxKind::Burgers) {
            let probes: Vec<f64> = (0..=2000).map(|i| hull_a - 0.25 + (hull_b - hull_a + 0.5) * i as f64 / 2000.0).collect();
            let mut rows = Vec::new();
            for frac in [0.25, 0.5, 1.0] {
                let t = frac * sc.t_final;
                let q = oleinik_check(&sol, t, &probes)?;
                rows.push(serde_json::json!({ "t": t, "max_quotient": q, "bound": 1.0 / t }));
                b.constant(&format!("oleinik_excess_t{frac}"), q - 1.0 / t);
            }
            b.put("oleinik.json", pretty_json(&rows));
        } else {
            b.skip("oleinik.json", "the one-sided bound 1/t is specific to the Burgers flux");
        }
    } else {
        b.skip("oleinik.json", "toggled off");
    }

    if dg.current {
        current_files(&mut b, sc, &sol)?;
    } else {
        b.skip("current.csv", "toggled off");
    }

    if dg.besov {
        let rep = b.timed("besov", || besov_scalar(sc, &sol, &flux))?;
        b.constant("besov_exponent", rep.exponent);
        b.constant("besov_spread", rep.spread);
        b.put("besov.csv", crate::report::besov_csv(&rep.rows)?);
    } else {
        b.skip("besov.csv", "toggled off");
    }
    Ok(b)
}

fn besov_scalar(sc: &Scenario, sol: &FrontTrackingSolution, flux: &Flux) -> Result<BesovReport> {
    let k = sc.diagnostics.besov_window.unwrap_or_else(|| {
        let br = &sol.initial.breaks;
        let reach = sc.t_final * flux.max_abs_df();
        match (br.first(), br.last()) {
            (Some(&a), Some(&c)) => (a - reach, c + reach),
            _ => (-1.0, 1.0),
        }
    });
    besov_time_scaling(sol, &sc.diagnostics.besov_deltas, sc.t_final, k, 0.5, 1.0, 4)
}

/// The discrete current of μ₁ and its path decomposition.
pub fn current_files(b: &mut Bundle, sc: &Scenario, sol: &FrontTrackingSolution) -> Result<()> {
    let [nt, nx, nv] = sc.discretization.grid;
    let grid = CurrentGrid::around_with(sol, nt, nx, nv);
    let cur = b.timed("current", || build_current(sol, &exact_mu1(sol), grid))?;
    let fam = b.timed("smirnov", || smirnov_decompose(&cur))?;
    let mass = cur.mass();
    let additivity = if mass > 0.0 { (fam.total_mass(&grid) - mass).abs() / mass } else { 0.0 };
    let bnd = cur.boundary.total_variation();
    let matching = if bnd > 0.0 { fam.boundary_mismatch(&cur) / bnd } else { 0.0 };
    b.constant("current_mass", mass);
    b.constant("current_additivity", additivity);
    b.constant("current_boundary_mismatch", matching);
    b.constant("current_cone_violations", fam.cone_violations(&cur) as f64);
    b.constant("current_cycle_residual", fam.cycle_residual + fam.leftover);
    b.constant("current_paths", fam.paths.len() as f64);
    b.put("current.csv", cur.to_csv());
    b.put("paths.jsonl", json_lines(fam.paths.iter().map(|p| p.to_json_line(&grid))));
    Ok(())
}

/// Only the current part of a scalar scenario.
pub fn decompose_current(sc: &Scenario) -> Result<Bundle> {
    let sol = solve_scalar(sc)?;
    let mut b = Bundle::new(sc);
    current_files(&mut b, sc, &sol)?;
    Ok(b)
}

fn euler_fronts_csv(sol: &EulerSolution) -> Result<String> {
    let rows: Vec<EulerFrontRow> = sol
        .fronts
        .iter()
        .enumerate()
        .map(|(id, f)| EulerFrontRow {
            id,
            tb: f.tb,
            xb: f.xb,
            td: f.td,
            speed: f.speed,
            rho_l: f.ul.rho,
            m_l: f.ul.m,
            rho_r: f.ur.rho,
            m_r: f.ur.m,
            kind: f.kind,
            family: f.family,
        })
        .collect();
    to_csv(&rows, "id,tb,xb,td,speed,rho_l,m_l,rho_r,m_r,kind,family")
}

/// x-hull of all fronts of a system solution.
pub fn euler_hull(sol: &EulerSolution) -> (f64, f64) {
    let mut lo = sol.breaks.first().copied().unwrap_or(0.0);
    let mut hi = sol.breaks.last().copied().unwrap_or(0.0);
    for f in &sol.fronts {
        for x in [f.xb, f.x_at(f.td)] {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    (lo, hi)
}

/// Share of the (t, x)-marginal of m carried within `r` of the view's fronts.
pub fn m_marginal_on_fronts(sol: &EulerSolution, lines: &[crate::euler::MLine], r: f64) -> Result<f64> {
    let view = sol.view(Invariant::W)?;
    let plane = PlaneMeasure {
        atoms: Vec::new(),
        lines: lines.iter().map(|l| Line { t0: l.t0, t1: l.t1, x0: l.x0, speed: l.speed, density: l.abs_mass() }).collect(),
    };
    Ok(concentration_profile(&plane, &view, &[r])[0])
}

fn run_euler(sc: &Scenario, breaks: &[f64], states: &[EulerState], kset: &KSet) -> Result<Bundle> {
    let mut b = Bundle::new(sc);
    let dg = &sc.diagnostics;
    let d = sc.discretization;
    let sol = b.timed("front_track", || front_track_euler(breaks, states, sc.t_final, d.dv, d.max_fronts, kset))?;
    b.constant("fronts", sol.fronts.len() as f64);
    b.constant("events", sol.events.len() as f64);
    b.put("fronts.csv", euler_fronts_csv(&sol)?);
    let mut snaps = Vec::new();
    for t in snapshot_times(sc.t_final) {
        let (br, st) = sol.snapshot(t);
        for (k, (a, c)) in intervals(&br).into_iter().enumerate() {
            let s = st[k];
            snaps.push(EulerSnapRow { t, x_from: a, x_to: c, rho: s.rho, m: s.m, w: s.w(), z: s.z() });
        }
    }
    b.put("snapshots.csv", to_csv(&snaps, "t,x_from,x_to,rho,m,w,z")?);
    let (ha, hb) = euler_hull(&sol);
    let (a, c) = (ha - 1.0, hb + 1.0);
    let (r0, m0) = sol.conserved(0.0, a, c);
    let (r1, m1) = sol.conserved(sc.t_final, a, c);
    let (fl, fr) = (sol.far_left.flux(), sol.far_right.flux());
    b.constant("conservation_defect_rho", (r1 - r0 + sc.t_final * (fr[0] - fl[0])).abs());
    b.constant("conservation_defect_m", (m1 - m0 + sc.t_final * (fr[1] - fl[1])).abs());

    let mut classes = Vec::new();
    let mut max_de: f64 = f64::NEG_INFINITY;
    for (id, f) in sol.shocks() {
        let c = shock_classify(f.ul, f.ur, f.speed, kset)?;
        max_de = max_de.max(crate::euler::energy_dissipation(&f.ul, &f.ur, f.speed));
        classes.push(serde_json::json!({ "front": id, "class": c }).to_string());
    }
    if max_de.is_finite() {
        b.constant("max_shock_d_E", max_de);
    }
    b.put("shocks.jsonl", json_lines(classes));

    if dg.g_balance {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in states {
            lo = lo.min(s.w());
            hi = hi.max(s.z());
        }
        let pad = 0.1 * (hi - lo);
        let tests = dictionary(sc.seed, 20, sc.t_final, (a, c), (lo - pad, hi + pad));
        let bal = b.timed("g_balance", || kinetic_g_balance(&sol, &tests));
        b.constant("g_balance_max_m", bal.max_m);
        b.constant("g_balance_nonpositive", bal.nonpositive as u8 as f64);
        b.constant("g_balance_residual", bal.max_residual);
        b.constant("m_mass", bal.m_mass);
        let frac = m_marginal_on_fronts(&sol, &bal.lines, d.dv)?;
        b.constant("m_marginal_on_fronts", frac);
        b.put("g_balance.json", pretty_json(&bal));
    } else {
        b.skip("g_balance.json", "toggled off");
    }
    if dg.signed {
        let rep = signed_decomposition_check(&sol);
        b.constant("signed_max_constant", rep.max_constant);
        b.put("signed.json", pretty_json(&rep));
    } else {
        b.skip("signed.json", "toggled off");
    }
    if dg.quasi_entropy {
        let ents = [Entropy::power(2), Entropy::power(3), Entropy::power(4), Entropy::exp()];
        let mut out = BTreeMap::new();
        for (name, inv) in [("w", Invariant::W), ("z", Invariant::Z)] {
            let view = sol.view(inv)?;
            let rows = quasi_entropy_check(&view, &ents, (a, c))?;
            let worst = rows.iter().map(|r| r.constant).fold(0.0, f64::max);
            b.constant(&format!("quasi_entropy_constant_{name}"), worst);
            out.insert(name, rows);
        }
        b.put("quasi_entropy.json", pretty_json(&out));
    } else {
        b.skip("quasi_entropy.json", "toggled off");
    }
    if dg.sources {
        let vs = view_source_structure(&sol, 4)?;
        b.constant("view_source_violations", (vs.w.violations.len() + vs.z.violations.len()) as f64);
        b.put("view_sources.json", pretty_json(&vs));
    } else {
        b.skip("view_sources.json", "toggled off");
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shock_bundle_has_full_concentration() {
        let sc = Scenario::parse("problem = \"scalar\"\nt_final = 1.0\n[initial]\nfixture = \"shock\"\n[discretization]\nn_v = 64\ndv = 0.015625\n").unwrap();
        let b = run(&sc).unwrap();
        assert_eq!(b.manifest.constants["concentration_fraction"], 1.0);
        assert!(b.files["mu1.csv"].starts_with("t,x,v_lo,v_hi,weight,sign,kind\n"));
        assert!(b.manifest.skipped.contains_key("besov.csv") && !b.files.contains_key("besov.csv"));
        assert_eq!(run(&sc).unwrap().deterministic_files(), b.deterministic_files());
    }

    #[test]
    fn euler_bundle() {
        let sc = Scenario::parse("problem = \"euler3\"\nt_final = 0.5\n[euler]\nleft = [1.0, 1.0]\nrows = [[0.0, 1.3, 0.4]]\n[discretization]\ndv = 0.015625\n").unwrap();
        let b = run(&sc).unwrap();
        assert!(b.manifest.constants["conservation_defect_rho"] < 1e-10);
        assert_eq!(b.manifest.constants["g_balance_nonpositive"], 1.0);
        assert!(b.files.contains_key("quasi_entropy.json"));
        assert_eq!(run(&sc).unwrap().deterministic_files(), b.deterministic_files());
    }
}
