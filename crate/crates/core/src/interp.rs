//! Interpolation on sampled data: local cubic Lagrange on uniform grids and a
//! natural cubic spline on arbitrary increasing nodes.

use crate::error::{Error, Result};

/// Four-point Lagrange interpolation on a uniform grid starting at `x0` with
/// spacing `h`. The stencil is shifted inward near the ends.
pub fn lagrange4_uniform(x0: f64, h: f64, f: &[f64], x: f64) -> Result<f64> {
    let n = f.len();
    let hi = x0 + h * (n - 1) as f64;
    let tol = 1e-9 * h;
    if n < 4 || x < x0 - tol || x > hi + tol {
        return Err(Error::InterpolationRangeExceeded { arg: x, lo: x0, hi });
    }
    let s = (x - x0) / h;
    let mut i0 = s.floor() as isize - 1;
    i0 = i0.clamp(0, n as isize - 4);
    let i0 = i0 as usize;
    let t = s - i0 as f64;
    // nodes at t = 0, 1, 2, 3
    let l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    let l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
    let l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    let l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    Ok(l0 * f[i0] + l1 * f[i0 + 1] + l2 * f[i0 + 2] + l3 * f[i0 + 3])
}

/// Natural cubic spline through `(x_i, y_i)`.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 3 || y.len() != n {
            return Err(Error::InvalidGrid(format!(
                "spline needs at least 3 matching samples, got {} and {}",
                n,
                y.len()
            )));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("spline nodes must increase strictly".into()));
        }
        // tridiagonal system for the second derivatives, natural ends
        let mut m = vec![0.0; n];
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let a = h0 / 6.0;
            let b = (h0 + h1) / 3.0;
            let c = h1 / 6.0;
            let d = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
            let denom = b - a * c_prime[i - 1];
            c_prime[i] = c / denom;
            d_prime[i] = (d - a * d_prime[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d_prime[i] - c_prime[i] * m[i + 1];
        }
        Ok(CubicSpline { x, y, m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn locate(&self, x: f64) -> Result<usize> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return Err(Error::InterpolationRangeExceeded { arg: x, lo, hi });
        }
        let k = self.x.partition_point(|&v| v <= x);
        Ok(k.clamp(1, self.x.len() - 1) - 1)
    }

    /// Value and first derivative at `x`.
    pub fn eval_with_derivative(&self, x: f64) -> Result<(f64, f64)> {
        let i = self.locate(x)?;
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - x) / h;
        let b = (x - self.x[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let v = a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let dv = (self.y[i + 1] - self.y[i]) / h
            + (-(3.0 * a * a - 1.0) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        Ok((v, dv))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.eval_with_derivative(x).map(|(v, _)| v)
    }
}
