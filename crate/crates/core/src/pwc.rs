//! Piecewise-constant functions of x.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `values[k]` holds on (breaks[k-1], breaks[k]); values[0] is the left extension and the
/// last value the right extension. Evaluation is right-continuous.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstant {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseConstant {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::Invalid(format!(
                "{} breakpoints need {} values, got {}",
                breaks.len(),
                breaks.len() + 1,
                values.len()
            )));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("breakpoints must be strictly increasing".into()));
        }
        if breaks.iter().chain(values.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Invalid("non-finite entry in piecewise-constant data".into()));
        }
        let mut p = PiecewiseConstant { breaks, values };
        p.merge();
        Ok(p)
    }

    pub fn constant(c: f64) -> Self {
        PiecewiseConstant { breaks: Vec::new(), values: vec![c] }
    }

    /// Riemann data: `left` for x < x0, `right` for x ≥ x0.
    pub fn step(x0: f64, left: f64, right: f64) -> Self {
        PiecewiseConstant::new(vec![x0], vec![left, right]).expect("valid step")
    }

    /// Build from (breakpoint, value-to-the-right) rows with a left extension.
    pub fn from_rows(left: f64, rows: &[(f64, f64)]) -> Result<Self> {
        let breaks = rows.iter().map(|r| r.0).collect();
        let mut values = vec![left];
        values.extend(rows.iter().map(|r| r.1));
        PiecewiseConstant::new(breaks, values)
    }

    fn merge(&mut self) {
        let mut b = Vec::with_capacity(self.breaks.len());
        let mut v = vec![self.values[0]];
        for (k, &x) in self.breaks.iter().enumerate() {
            let next = self.values[k + 1];
            if next != *v.last().unwrap() {
                b.push(x);
                v.push(next);
            }
        }
        self.breaks = b;
        self.values = v;
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.breaks.partition_point(|&b| b <= x);
        self.values[k]
    }

    pub fn left_value(&self) -> f64 {
        self.values[0]
    }

    pub fn right_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn total_variation(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    /// ∫_a^b g(u(x)) dx, exact.
    pub fn integrate<G: Fn(f64) -> f64>(&self, a: f64, b: f64, g: G) -> f64 {
        if !(b > a) {
            return 0.0;
        }
        let mut s = 0.0;
        let mut x = a;
        let mut k = self.breaks.partition_point(|&p| p <= a);
        while x < b {
            let end = if k < self.breaks.len() { self.breaks[k].min(b) } else { b };
            s += g(self.values[k]) * (end - x);
            x = end;
            k += 1;
        }
        s
    }

    /// ∫_a^b |u(x) − w(x)| dx, exact.
    pub fn l1_distance(&self, other: &PiecewiseConstant, a: f64, b: f64) -> f64 {
        let mut pts: Vec<f64> = self
            .breaks
            .iter()
            .chain(other.breaks.iter())
            .copied()
            .filter(|&x| x > a && x < b)
            .collect();
        pts.push(a);
        pts.push(b);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts.windows(2)
            .map(|w| {
                let m = 0.5 * (w[0] + w[1]);
                (self.eval(m) - other.eval(m)).abs() * (w[1] - w[0])
            })
            .sum()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_and_eval() {
        let p = PiecewiseConstant::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.5, 0.0]).unwrap();
        assert_eq!(p.breaks, vec![0.0, 2.0]);
        assert_eq!(p.eval(-1.0), 1.0);
        assert_eq!(p.eval(0.0), 0.5);
        assert_eq!(p.eval(5.0), 0.0);
        assert!((p.integrate(-1.0, 3.0, |u| u) - 2.0).abs() < 1e-15);
        assert_eq!(p.total_variation(), 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PiecewiseConstant::new(vec![1.0, 0.0], vec![0.0, 1.0, 2.0]).is_err());
        assert!(PiecewiseConstant::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn l1_of_shifted_steps() {
        let a = PiecewiseConstant::step(0.0, 1.0, 0.0);
        let b = PiecewiseConstant::step(0.25, 1.0, 0.0);
        assert!((a.l1_distance(&b, -1.0, 1.0) - 0.25).abs() < 1e-15);
    }
}
