//! Scenario files: a TOML key-value tree describing one run.
//!
//! ```toml
//! problem = "scalar"          # or "euler3"
//! t_final = 1.0
//! seed = 7
//!
//! [flux]
//! name = "burgers"            # or points = [[v, f], ...] / samples = { v = [...], f = [...] }
//!
//! [initial]
//! fixture = "shock"           # shock | rarefaction | random | sawtooth
//! # or: left = 1.0, rows = [[x, value_to_the_right], ...]
//!
//! [euler]
//! left = [1.0, 1.0]           # (ρ, m) left of the first breakpoint
//! rows = [[0.0, 1.2, 0.9]]    # (breakpoint, ρ, m) to the right of it
//!
//! [discretization]
//! n_v = 256
//! dv = 0.00390625
//!
//! [diagnostics]
//! besov = true
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::{EulerState, KSet};
use crate::fixtures;
use crate::flux::Flux;
use crate::pwc::PiecewiseConstant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Scalar,
    Euler3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Samples {
    pub v: Vec<f64>,
    pub f: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSpec {
    pub name: Option<String>,
    pub points: Option<Vec<(f64, f64)>>,
    pub samples: Option<Samples>,
}

impl FluxSpec {
    pub fn build(&self) -> Result<Flux> {
        match (&self.name, &self.points, &self.samples) {
            (Some(n), None, None) => Flux::by_name(n).map_err(|e| Error::Config(format!("flux.name: {e}"))),
            (None, Some(p), None) => Flux::piecewise_linear(p).map_err(|e| Error::Config(format!("flux.points: {e}"))),
            (None, None, Some(s)) => Flux::sampled(s.v.clone(), s.f.clone()).map_err(|e| Error::Config(format!("flux.samples: {e}"))),
            (None, None, None) => Ok(Flux::burgers()),
            _ => Err(Error::Config("flux: give exactly one of name, points, samples".into())),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub fixture: Option<String>,
    /// pieces of the random fixture
    pub pieces: Option<usize>,
    /// teeth of the sawtooth fixture
    pub teeth: Option<usize>,
    pub left: Option<f64>,
    pub rows: Option<Vec<(f64, f64)>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EulerSpec {
    pub left: Option<(f64, f64)>,
    pub rows: Vec<(f64, f64, f64)>,
    pub c: Option<f64>,
    pub m_max: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationSpec {
    pub n_v: Option<usize>,
    pub dv: Option<f64>,
    /// (t, x, v) cells of the discrete current
    pub grid: Option<[usize; 3]>,
    pub besov_nx: Option<usize>,
    pub max_fronts: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSpec {
    pub residual: Option<bool>,
    pub lagrangian: Option<bool>,
    pub curves: Option<bool>,
    pub concentration: Option<bool>,
    pub classify: Option<bool>,
    pub oleinik: Option<bool>,
    pub current: Option<bool>,
    pub besov: Option<bool>,
    pub besov_window: Option<(f64, f64)>,
    pub besov_deltas: Option<Vec<f64>>,
    pub g_balance: Option<bool>,
    pub signed: Option<bool>,
    pub quasi_entropy: Option<bool>,
    pub sources: Option<bool>,
}

/// The file as written; everything optional is filled in by `Scenario::resolve`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub problem: Problem,
    pub t_final: f64,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub flux: FluxSpec,
    pub initial: Option<InitialSpec>,
    pub euler: Option<EulerSpec>,
    #[serde(default)]
    pub discretization: DiscretizationSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    #[serde(default)]
    pub probes: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub n_v: usize,
    pub dv: f64,
    pub grid: [usize; 3],
    pub besov_nx: usize,
    pub max_fronts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub residual: bool,
    pub lagrangian: bool,
    pub curves: bool,
    pub concentration: bool,
    pub classify: bool,
    pub oleinik: bool,
    pub current: bool,
    pub besov: bool,
    pub besov_window: Option<(f64, f64)>,
    pub besov_deltas: Vec<f64>,
    pub g_balance: bool,
    pub signed: bool,
    pub quasi_entropy: bool,
    pub sources: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitialData {
    Scalar { flux: FluxSpec, data: PiecewiseConstant },
    Euler { breaks: Vec<f64>, states: Vec<EulerState>, kset: KSet },
}

/// A validated scenario with every default applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub problem: Problem,
    pub t_final: f64,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub initial: InitialData,
    pub discretization: Discretization,
    pub diagnostics: Diagnostics,
    pub probes: Vec<(f64, f64)>,
}

pub const DEFAULT_N_V: usize = 256;
pub const DEFAULT_GRID: [usize; 3] = [64, 64, 32];
pub const DEFAULT_MAX_FRONTS: usize = 200_000;
/// environment override of the output directory
pub const OUT_ENV: &str = "KINLAB_OUT";

fn range(key: &str, ok: bool, what: String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("{key}: {what}")))
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Scenario::resolve(file)
    }

    pub fn resolve(f: ScenarioFile) -> Result<Scenario> {
        range("t_final", f.t_final.is_finite() && f.t_final > 0.0, format!("must be positive and finite, got {}", f.t_final))?;
        let d = &f.discretization;
        let n_v = d.n_v.unwrap_or(DEFAULT_N_V);
        range("discretization.n_v", (2..=1 << 16).contains(&n_v), format!("must lie in [2, 65536], got {n_v}"))?;
        let dv = d.dv.unwrap_or(1.0 / DEFAULT_N_V as f64);
        range("discretization.dv", dv > 0.0 && dv <= 1.0, format!("must lie in (0, 1], got {dv}"))?;
        let grid = d.grid.unwrap_or(DEFAULT_GRID);
        range("discretization.grid", grid.iter().all(|&n| (2..=512).contains(&n)), format!("cells per axis must lie in [2, 512], got {grid:?}"))?;
        let besov_nx = d.besov_nx.unwrap_or(crate::besov::DEFAULT_NX);
        range("discretization.besov_nx", (8..=1 << 20).contains(&besov_nx), format!("must lie in [8, 2^20], got {besov_nx}"))?;
        let max_fronts = d.max_fronts.unwrap_or(DEFAULT_MAX_FRONTS);
        range("discretization.max_fronts", max_fronts >= 1, "must be at least 1".into())?;
        for (i, p) in f.probes.iter().enumerate() {
            range(&format!("probes[{i}]"), p.0 > 0.0 && p.0 < f.t_final && p.1.is_finite(), format!("time must lie in (0, t_final), got {:?}", p))?;
        }
        let g = &f.diagnostics;
        let scalar = f.problem == Problem::Scalar;
        let besov_deltas = g.besov_deltas.clone().unwrap_or_else(|| vec![0.05, 0.1, 0.2, 0.4]);
        for (i, &dl) in besov_deltas.iter().enumerate() {
            range(&format!("diagnostics.besov_deltas[{i}]"), dl > 0.0 && dl < f.t_final, format!("must lie in (0, t_final), got {dl}"))?;
        }
        if let Some(w) = g.besov_window {
            range("diagnostics.besov_window", w.1 > w.0, format!("empty window {w:?}"))?;
        }
        let diagnostics = Diagnostics {
            residual: g.residual.unwrap_or(scalar),
            lagrangian: g.lagrangian.unwrap_or(scalar),
            curves: g.curves.unwrap_or(false),
            concentration: g.concentration.unwrap_or(scalar),
            classify: g.classify.unwrap_or(scalar && !f.probes.is_empty()),
            oleinik: g.oleinik.unwrap_or(scalar),
            current: g.current.unwrap_or(false),
            besov: g.besov.unwrap_or(false),
            besov_window: g.besov_window,
            besov_deltas,
            g_balance: g.g_balance.unwrap_or(!scalar),
            signed: g.signed.unwrap_or(!scalar),
            quasi_entropy: g.quasi_entropy.unwrap_or(!scalar),
            sources: g.sources.unwrap_or(!scalar),
        };
        let initial = match f.problem {
            Problem::Scalar => {
                if f.euler.is_some() {
                    return Err(Error::Config("euler: not allowed for a scalar problem".into()));
                }
                let flux = f.flux.build()?;
                let spec = f.initial.clone().ok_or_else(|| Error::Config("initial: missing for a scalar problem".into()))?;
                let data = scalar_data(&spec, f.seed.unwrap_or(0))?;
                for (i, &v) in data.values.iter().enumerate() {
                    range(&format!("initial value {i}"), flux.contains(v), format!("{v} outside the flux domain [{}, {}]", flux.lo, flux.hi))?;
                }
                InitialData::Scalar { flux: f.flux.clone(), data }
            }
            Problem::Euler3 => {
                if f.initial.is_some() {
                    return Err(Error::Config("initial: not allowed for an euler3 problem, use [euler]".into()));
                }
                let e = f.euler.clone().ok_or_else(|| Error::Config("euler: missing for an euler3 problem".into()))?;
                let def = KSet::default();
                let kset = KSet { c: e.c.unwrap_or(def.c), m_max: e.m_max.unwrap_or(def.m_max) };
                range("euler.c", kset.c > 0.0, format!("must be positive, got {}", kset.c))?;
                range("euler.m_max", kset.m_max > kset.c, format!("must exceed c, got {}", kset.m_max))?;
                range("euler.rows", !e.rows.is_empty(), "need at least one row".into())?;
                let first = (e.rows[0].1, e.rows[0].2);
                let left = e.left.unwrap_or(first);
                let mut states = vec![EulerState::new(left.0, left.1)];
                let mut breaks = Vec::new();
                for (i, r) in e.rows.iter().enumerate() {
                    if let Some(&b) = breaks.last() {
                        range(&format!("euler.rows[{i}]"), r.0 > b, format!("breakpoint {} not increasing", r.0))?;
                    }
                    breaks.push(r.0);
                    states.push(EulerState::new(r.1, r.2));
                }
                for (i, s) in states.iter().enumerate() {
                    let key = if i == 0 { "euler.left".to_string() } else { format!("euler.rows[{}]", i - 1) };
                    if !(s.rho >= kset.c) {
                        return Err(Error::Vacuum(format!("{key}: ρ = {} below c = {}", s.rho, kset.c)));
                    }
                    s.check(&kset).map_err(|e| Error::Config(format!("{key}: {e}")))?;
                }
                InitialData::Euler { breaks, states, kset }
            }
        };
        Ok(Scenario {
            problem: f.problem,
            t_final: f.t_final,
            seed: f.seed.unwrap_or(0),
            output: f.output,
            initial,
            discretization: Discretization { n_v, dv, grid, besov_nx, max_fronts },
            diagnostics,
            probes: f.probes,
        })
    }

    pub fn flux(&self) -> Result<Flux> {
        match &self.initial {
            InitialData::Scalar { flux, .. } => flux.build(),
            InitialData::Euler { .. } => Err(Error::Config("an euler3 scenario has no scalar flux".into())),
        }
    }

    /// Output directory: explicit override, then the environment, then the file, then `out`.
    pub fn output_dir(&self, cli: Option<&Path>) -> PathBuf {
        if let Some(p) = cli {
            return p.to_path_buf();
        }
        if let Some(p) = std::env::var_os(OUT_ENV) {
            return PathBuf::from(p);
        }
        self.output.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn scalar_data(spec: &InitialSpec, seed: u64) -> Result<PiecewiseConstant> {
    match (&spec.fixture, &spec.rows) {
        (Some(name), None) => {
            if spec.left.is_some() {
                return Err(Error::Config("initial.left: only used together with initial.rows".into()));
            }
            match name.as_str() {
                "shock" => Ok(fixtures::shock()),
                "rarefaction" => Ok(fixtures::rarefaction()),
                "random" => {
                    let n = spec.pieces.unwrap_or(50);
                    range("initial.pieces", (1..=100_000).contains(&n), format!("must lie in [1, 100000], got {n}"))?;
                    Ok(fixtures::random_pieces(seed, n))
                }
                "sawtooth" => {
                    let n = spec.teeth.unwrap_or(100);
                    range("initial.teeth", (1..=100_000).contains(&n), format!("must lie in [1, 100000], got {n}"))?;
                    Ok(fixtures::sawtooth(n))
                }
                other => Err(Error::Config(format!("initial.fixture: unknown fixture `{other}`"))),
            }
        }
        (None, Some(rows)) => {
            for (i, w) in rows.windows(2).enumerate() {
                range(&format!("initial.rows[{}]", i + 1), w[1].0 > w[0].0, format!("breakpoint {} not increasing", w[1].0))?;
            }
            let left = spec.left.ok_or_else(|| Error::Config("initial.left: required with initial.rows".into()))?;
            PiecewiseConstant::from_rows(left, rows).map_err(|e| Error::Config(format!("initial.rows: {e}")))
        }
        _ => Err(Error::Config("initial: give exactly one of fixture, rows".into())),
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Scenario::parse(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        Error::Vacuum(m) => Error::Vacuum(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let s = Scenario::parse("problem = \"scalar\"\nt_final = 1.0\n[initial]\nfixture = \"shock\"\n").unwrap();
        assert_eq!(s.discretization.n_v, 256);
        assert_eq!(s.discretization.dv, 1.0 / 256.0);
        assert_eq!(s.discretization.grid, [64, 64, 32]);
        assert!(s.diagnostics.residual && !s.diagnostics.besov && !s.diagnostics.g_balance);
        assert_eq!(s.flux().unwrap(), Flux::burgers());
    }

    #[test]
    fn rejections_name_the_key() {
        let e = Scenario::parse("problem = \"scalar\"\nt_final = 1.0\nbogus = 3\n[initial]\nfixture = \"shock\"\n").unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        let e = Scenario::parse("problem = \"scalar\"\nt_final = 1.0\n[initial]\nfixture = \"shock\"\n[discretization]\nn_v = 1\n").unwrap_err();
        assert!(e.to_string().contains("discretization.n_v"), "{e}");
        let e = Scenario::parse("problem = \"scalar\"\nt_final = 1.0\n[initial]\nfixture = \"shock\"\n[discretization]\nnv = 4\n").unwrap_err();
        assert!(e.to_string().contains("nv"), "{e}");
        let e = Scenario::parse("problem = \"scalar\"\nt_final = \n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = Scenario::parse("problem = \"scalar\"\nt_final = 1.0\n[initial]\nleft = 2.0\nrows = [[0.0, 0.0]]\n").unwrap_err();
        assert!(e.to_string().contains("initial value 0"), "{e}");
    }

    #[test]
    fn vacuum_guard_names_the_row() {
        let text = "problem = \"euler3\"\nt_final = 1.0\n[euler]\nleft = [1.0, 0.0]\nrows = [[0.0, 1.0, 0.5], [1.0, 0.1, 0.0]]\n";
        let e = Scenario::parse(text).unwrap_err();
        assert!(matches!(e, Error::Vacuum(_)));
        assert!(e.to_string().contains("vacuum guard") && e.to_string().contains("euler.rows[1]"), "{e}");
        let ok = Scenario::parse("problem = \"euler3\"\nt_final = 1.0\n[euler]\nrows = [[0.0, 1.0, 0.5]]\n").unwrap();
        match ok.initial {
            InitialData::Euler { breaks, states, kset } => {
                assert_eq!(breaks, vec![0.0]);
                assert_eq!(states.len(), 2);
                assert_eq!(kset, KSet::default());
            }
            _ => panic!("expected euler data"),
        }
    }
}
