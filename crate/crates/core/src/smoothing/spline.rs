//! Natural cubic splines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cubic piece on `[t_i, t_{i+1}]`:
/// `a + b*(t - t_i) + c*(t - t_i)^2 + d*(t - t_i)^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Piecewise cubic interpolant with zero second derivative at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spline {
    knots: Vec<(f64, f64)>,
    segments: Vec<Segment>,
}

impl Spline {
    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn t_min(&self) -> f64 {
        self.knots[0].0
    }

    pub fn t_max(&self) -> f64 {
        self.knots[self.knots.len() - 1].0
    }

    /// Constant function over `[t0, t1]`.
    pub fn constant(t0: f64, t1: f64, v: f64) -> Self {
        fit_natural_cubic_spline(&[(t0, v), (t1.max(t0 + 1.0), v)]).expect("two distinct knots")
    }

    fn locate(&self, t: f64) -> usize {
        // index of the segment whose left knot is the last one <= t
        let i = self.knots.partition_point(|k| k.0 <= t);
        i.saturating_sub(1).min(self.segments.len() - 1)
    }

    /// Value at `t`; endpoint values are held outside the knot range.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.t_min() {
            return self.knots[0].1;
        }
        if t >= self.t_max() {
            return self.knots[self.knots.len() - 1].1;
        }
        let i = self.locate(t);
        let s = &self.segments[i];
        let x = t - self.knots[i].0;
        s.a + x * (s.b + x * (s.c + x * s.d))
    }

    /// First derivative at `t`; zero outside the knot range.
    pub fn deriv(&self, t: f64) -> f64 {
        if t < self.t_min() || t > self.t_max() {
            return 0.0;
        }
        let i = self.locate(t);
        let s = &self.segments[i];
        let x = t - self.knots[i].0;
        s.b + x * (2.0 * s.c + 3.0 * x * s.d)
    }
}

/// Interpolate `points` (strictly increasing `t`, at least two) with a
/// natural cubic spline.
pub fn fit_natural_cubic_spline(points: &[(f64, f64)]) -> Result<Spline> {
    let n = points.len();
    if n < 2 {
        return Err(Error::TooFew { needed: 2, got: n });
    }
    if points.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
        return Err(Error::invalid("non-finite spline point"));
    }
    for w in points.windows(2) {
        if w[1].0 == w[0].0 {
            return Err(Error::DuplicateKnot(w[0].0));
        }
        if w[1].0 < w[0].0 {
            return Err(Error::invalid("spline knots must be increasing"));
        }
    }

    let h: Vec<f64> = points.windows(2).map(|w| w[1].0 - w[0].0).collect();
    let slope: Vec<f64> = points.windows(2).zip(&h).map(|(w, h)| (w[1].1 - w[0].1) / h).collect();

    // second derivatives m[0..n], m[0] = m[n-1] = 0; tridiagonal system for
    // the interior ones, solved with the Thomas algorithm
    let mut m = vec![0.0; n];
    let k = n - 2;
    if k > 0 {
        let mut diag: Vec<f64> = (0..k).map(|i| 2.0 * (h[i] + h[i + 1])).collect();
        let mut rhs: Vec<f64> = (0..k).map(|i| 6.0 * (slope[i + 1] - slope[i])).collect();
        for i in 1..k {
            let w = h[i] / diag[i - 1];
            diag[i] -= w * h[i];
            rhs[i] -= w * rhs[i - 1];
        }
        m[k] = rhs[k - 1] / diag[k - 1];
        for i in (0..k - 1).rev() {
            m[i + 1] = (rhs[i] - h[i + 1] * m[i + 2]) / diag[i];
        }
    }

    let segments = (0..n - 1)
        .map(|i| Segment {
            a: points[i].1,
            b: slope[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0,
            c: m[i] / 2.0,
            d: (m[i + 1] - m[i]) / (6.0 * h[i]),
        })
        .collect();
    Ok(Spline { knots: points.to_vec(), segments })
}
