//! C² monotone profiles built by integrating a shape-preserving cubic.
//!
//! The derivative `h′` is the Fritsch–Carlson monotone cubic Hermite interpolant
//! of nonnegative slope values, so it stays nonnegative and is C¹; `h = ∫h′` is
//! then C² and nondecreasing. The derivative of `h′` is forced to zero at the
//! last knot, which makes the linear extension past it C² as well.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SplineRepr", into = "SplineRepr")]
pub struct MonotoneSpline {
    knots: Vec<f64>,
    slopes: Vec<f64>,
    value0: f64,
    // derivative of h′ at each knot
    curv: Vec<f64>,
    // h at each knot
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SplineRepr {
    knots: Vec<f64>,
    slopes: Vec<f64>,
    #[serde(default)]
    value0: f64,
}

impl TryFrom<SplineRepr> for MonotoneSpline {
    type Error = Error;
    fn try_from(r: SplineRepr) -> Result<Self> {
        MonotoneSpline::new(r.knots, r.slopes, r.value0)
    }
}

impl From<MonotoneSpline> for SplineRepr {
    fn from(s: MonotoneSpline) -> Self {
        SplineRepr {
            knots: s.knots,
            slopes: s.slopes,
            value0: s.value0,
        }
    }
}

impl MonotoneSpline {
    /// `h` with `h(knots[0]) = value0` and `h′(knots[i]) = slopes[i]`.
    pub fn new(knots: Vec<f64>, slopes: Vec<f64>, value0: f64) -> Result<Self> {
        if knots.len() < 2 || knots.len() != slopes.len() {
            return Err(Error::arg("spline needs at least two knots and one slope per knot"));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) || knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::arg("spline knots must be finite and strictly increasing"));
        }
        if slopes.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::arg("spline slopes must be finite and nonnegative"));
        }
        if !value0.is_finite() {
            return Err(Error::arg("spline value0 must be finite"));
        }
        let curv = pchip_derivatives(&knots, &slopes);
        let mut cumulative = vec![value0];
        for i in 0..knots.len() - 1 {
            let h = knots[i + 1] - knots[i];
            let seg = h * (0.5 * (slopes[i] + slopes[i + 1]) + h * (curv[i] - curv[i + 1]) / 12.0);
            cumulative.push(cumulative[i] + seg);
        }
        Ok(MonotoneSpline {
            knots,
            slopes,
            value0,
            curv,
            cumulative,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn value0(&self) -> f64 {
        self.value0
    }

    fn locate(&self, r: f64) -> Option<(usize, f64, f64)> {
        let last = self.knots.len() - 1;
        if r < self.knots[0] || r >= self.knots[last] {
            return None;
        }
        let i = self.knots.partition_point(|k| *k <= r) - 1;
        let h = self.knots[i + 1] - self.knots[i];
        Some((i, h, (r - self.knots[i]) / h))
    }

    /// `(h(r), h′(r), h″(r))`, extended linearly outside the knot range.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let last = self.knots.len() - 1;
        match self.locate(r) {
            Some((i, h, t)) => {
                let (y0, y1, d0, d1) = (self.slopes[i], self.slopes[i + 1], self.curv[i], self.curv[i + 1]);
                let (t2, t3, t4) = (t * t, t * t * t, t * t * t * t);
                let slope = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
                    + (t3 - 2.0 * t2 + t) * h * d0
                    + (-2.0 * t3 + 3.0 * t2) * y1
                    + (t3 - t2) * h * d1;
                let curv = ((6.0 * t2 - 6.0 * t) * y0
                    + (3.0 * t2 - 4.0 * t + 1.0) * h * d0
                    + (-6.0 * t2 + 6.0 * t) * y1
                    + (3.0 * t2 - 2.0 * t) * h * d1)
                    / h;
                let integral = h
                    * ((0.5 * t4 - t3 + t) * y0
                        + (0.25 * t4 - 2.0 * t3 / 3.0 + 0.5 * t2) * h * d0
                        + (-0.5 * t4 + t3) * y1
                        + (0.25 * t4 - t3 / 3.0) * h * d1);
                (self.cumulative[i] + integral, slope, curv)
            }
            None if r >= self.knots[last] => (
                self.cumulative[last] + self.slopes[last] * (r - self.knots[last]),
                self.slopes[last],
                0.0,
            ),
            None => (self.value0 + self.slopes[0] * (r - self.knots[0]), self.slopes[0], 0.0),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    pub fn slope(&self, r: f64) -> f64 {
        self.eval(r).1
    }

    /// `max h′` over `[lo, hi]`. Exact: `h′` is monotone between consecutive knots.
    pub fn max_slope(&self, lo: f64, hi: f64) -> f64 {
        let mut m = self.slope(lo).max(self.slope(hi));
        for (k, s) in self.knots.iter().zip(&self.slopes) {
            if *k > lo && *k < hi {
                m = m.max(*s);
            }
        }
        m
    }
}

/// Fritsch–Carlson derivatives with the three-point shape-preserving rule at the
/// left end and a zero derivative at the right end.
fn pchip_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = if n == 2 {
        delta[0]
    } else {
        let e = ((2.0 * h[0] + h[1]) * delta[0] - h[0] * delta[1]) / (h[0] + h[1]);
        if e.signum() != delta[0].signum() || delta[0] == 0.0 {
            0.0
        } else if delta[0].signum() != delta[1].signum() && e.abs() > 3.0 * delta[0].abs() {
            3.0 * delta[0]
        } else {
            e
        }
    };
    d[n - 1] = 0.0;
    d
}
