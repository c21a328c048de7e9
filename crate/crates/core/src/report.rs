//! Table and record formats of a run bundle, with readers for every table.
//!
//! | file             | columns / record                                        |
//! |------------------|---------------------------------------------------------|
//! | `mu0.csv`, `mu1.csv` | t, x, v_lo, v_hi, weight, sign, kind                |
//! | `besov.csv`      | delta, integral, ratio                                  |
//! | `sweep.csv`      | strength, z_jump, sigma_offset, d_E                     |
//! | `fronts.csv`     | id, tb, xb, td, speed, ul, ur, kind, family             |
//! | `curves.jsonl`   | one curve per line: interval, x_knots, v_plateaus, weight |
//! | `paths.jsonl`    | one current path per line: weight, points               |
//!
//! In the measure tables `kind` is `atom` (weight = mass) or `segment`
//! (weight = density per unit v on [v_lo, v_hi]); `sign` is ±1 and `weight` ≥ 0.

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::besov::BesovRow;
use crate::error::{Error, Result};
use crate::euler::SweepRow;
use crate::front::{Front, FrontKind};
use crate::measure::{Atom, AtomicMeasure3, Segment};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureRow {
    pub t: f64,
    pub x: f64,
    pub v_lo: f64,
    pub v_hi: f64,
    pub weight: f64,
    pub sign: i8,
    pub kind: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCsvRow {
    pub strength: f64,
    pub z_jump: f64,
    pub sigma_offset: f64,
    #[serde(rename = "d_E")]
    pub d_e: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontRow {
    pub id: usize,
    pub tb: f64,
    pub xb: f64,
    pub td: f64,
    pub speed: f64,
    pub ul: f64,
    pub ur: f64,
    pub kind: FrontKind,
    pub family: u8,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Invalid(format!("csv: {e}"))
}

pub fn to_csv<T: Serialize>(rows: &[T], header_if_empty: &str) -> Result<String> {
    if rows.is_empty() {
        return Ok(format!("{header_if_empty}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Invalid(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Invalid(format!("csv: {e}")))
}

pub fn from_csv<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().map(|r| r.map_err(csv_err)).collect()
}

fn sign(w: f64) -> i8 {
    if w < 0.0 {
        -1
    } else {
        1
    }
}

pub fn measure_rows(m: &AtomicMeasure3) -> Result<Vec<MeasureRow>> {
    if !m.sheets.is_empty() {
        return Err(Error::Invalid("front sheets have no row form; export them as JSON".into()));
    }
    let atoms = m.atoms.iter().map(|a| MeasureRow { t: a.t, x: a.x, v_lo: a.v, v_hi: a.v, weight: a.w.abs(), sign: sign(a.w), kind: "atom".into() });
    let segs = m.segments.iter().map(|s| MeasureRow { t: s.t, x: s.x, v_lo: s.va, v_hi: s.vb, weight: s.density.abs(), sign: sign(s.density), kind: "segment".into() });
    Ok(atoms.chain(segs).collect())
}

pub const MEASURE_HEADER: &str = "t,x,v_lo,v_hi,weight,sign,kind";

pub fn measure_csv(m: &AtomicMeasure3) -> Result<String> {
    to_csv(&measure_rows(m)?, MEASURE_HEADER)
}

pub fn read_measure_csv(text: &str) -> Result<AtomicMeasure3> {
    let mut m = AtomicMeasure3::default();
    for r in from_csv::<MeasureRow>(text)? {
        let w = r.weight * r.sign as f64;
        match r.kind.as_str() {
            "atom" => m.atoms.push(Atom { t: r.t, x: r.x, v: r.v_lo, w }),
            "segment" => m.segments.push(Segment { t: r.t, x: r.x, va: r.v_lo, vb: r.v_hi, density: w }),
            other => return Err(Error::Invalid(format!("unknown measure kind `{other}`"))),
        }
    }
    Ok(m)
}

pub fn besov_csv(rows: &[BesovRow]) -> Result<String> {
    to_csv(rows, "delta,integral,ratio")
}

pub fn sweep_rows(rows: &[SweepRow]) -> Vec<SweepCsvRow> {
    rows.iter().map(|r| SweepCsvRow { strength: r.strength, z_jump: r.contact_jump, sigma_offset: r.sigma_offset, d_e: r.d_e }).collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    to_csv(&sweep_rows(rows), "strength,z_jump,sigma_offset,d_E")
}

pub fn front_rows(fronts: &[Front<f64>]) -> Vec<FrontRow> {
    fronts
        .iter()
        .enumerate()
        .map(|(id, f)| FrontRow { id, tb: f.tb, xb: f.xb, td: f.td, speed: f.speed, ul: f.ul, ur: f.ur, kind: f.kind, family: f.family })
        .collect()
}

pub fn fronts_csv(fronts: &[Front<f64>]) -> Result<String> {
    to_csv(&front_rows(fronts), "id,tb,xb,td,speed,ul,ur,kind,family")
}

/// One JSON record per line.
pub fn json_lines<I: IntoIterator<Item = String>>(records: I) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

pub fn read_json_lines<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| serde_json::from_str(l).map_err(|e| Error::Invalid(format!("json: {e}")))).collect()
}

pub fn pretty_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headers_are_stable() {
        assert!(measure_csv(&AtomicMeasure3::default()).unwrap().starts_with("t,x,v_lo,v_hi,weight,sign,kind\n"));
        let m = AtomicMeasure3 {
            atoms: vec![Atom { t: 0.1, x: 0.2, v: 0.3, w: -0.5 }],
            segments: vec![Segment { t: 0.5, x: 0.25, va: 0.0, vb: 1.0, density: 0.125 }],
            ..Default::default()
        };
        let text = measure_csv(&m).unwrap();
        assert!(text.starts_with("t,x,v_lo,v_hi,weight,sign,kind\n"), "{text}");
        assert_eq!(read_measure_csv(&text).unwrap(), m);
        let b = besov_csv(&[BesovRow { delta: 0.1, integral: 2.0, ratio: 0.2 }]).unwrap();
        assert!(b.starts_with("delta,integral,ratio\n"));
        let s = sweep_csv(&[SweepRow { strength: 0.1, contact_jump: 1e-4, sigma_offset: 1e-3, d_e: -1e-4, rh_residual: 0.0 }]).unwrap();
        assert!(s.starts_with("strength,z_jump,sigma_offset,d_E\n"), "{s}");
        assert_eq!(from_csv::<SweepCsvRow>(&s).unwrap()[0].d_e, -1e-4);
    }

    #[test]
    fn sheets_are_refused() {
        let m = AtomicMeasure3 { sheets: vec![crate::measure::Sheet { t0: 0.0, t1: 1.0, x0: 0.0, speed: 0.0, v: vec![0.0, 1.0], d: vec![1.0, 1.0] }], ..Default::default() };
        assert!(measure_csv(&m).is_err());
    }
}
