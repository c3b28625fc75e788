//! Finite-difference stencils on uniform grids.
//!
//! Interior points use fourth-order central stencils. The two points next to
//! each end fall back to second-order stencils (central at the second point,
//! one-sided at the endpoint); those samples are flagged untrusted.

/// Number of samples at each end that only see the low-order stencils.
pub const BOUNDARY_MARGIN: usize = 2;

/// Minimum number of samples for the stencils below.
pub const MIN_POINTS: usize = 5;

/// Finite-difference weights: `f^{(k)}(x_i) ≈ Σ w·f[i + offset] / (denom·h^k)`.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub offsets: &'static [isize],
    pub weights: &'static [f64],
    pub denom: f64,
}

impl Stencil {
    #[inline]
    pub fn apply(&self, f: &[f64], i: usize, hk: f64) -> f64 {
        let mut s = 0.0;
        for (o, w) in self.offsets.iter().zip(self.weights) {
            s += w * f[(i as isize + o) as usize];
        }
        s / (self.denom * hk)
    }

    /// Applies the stencil to differences `g(k) = f[i+k] − f[i]`, which the
    /// caller may compute more accurately than the raw samples allow.
    #[inline]
    pub fn apply_diff(&self, hk: f64, mut g: impl FnMut(isize) -> f64) -> f64 {
        let mut s = 0.0;
        for (o, w) in self.offsets.iter().zip(self.weights) {
            if *o != 0 {
                s += w * g(*o);
            }
        }
        s / (self.denom * hk)
    }
}

const D1_CENTRAL4: Stencil = Stencil { offsets: &[-2, -1, 1, 2], weights: &[1.0, -8.0, 8.0, -1.0], denom: 12.0 };
const D1_CENTRAL2: Stencil = Stencil { offsets: &[-1, 1], weights: &[-1.0, 1.0], denom: 2.0 };
const D1_LEFT_END: Stencil = Stencil { offsets: &[0, 1, 2], weights: &[-3.0, 4.0, -1.0], denom: 2.0 };
const D1_RIGHT_END: Stencil = Stencil { offsets: &[0, -1, -2], weights: &[3.0, -4.0, 1.0], denom: 2.0 };

const D2_CENTRAL4: Stencil =
    Stencil { offsets: &[-2, -1, 0, 1, 2], weights: &[-1.0, 16.0, -30.0, 16.0, -1.0], denom: 12.0 };
const D2_CENTRAL2: Stencil = Stencil { offsets: &[-1, 0, 1], weights: &[1.0, -2.0, 1.0], denom: 1.0 };
const D2_LEFT_END: Stencil = Stencil { offsets: &[0, 1, 2, 3], weights: &[2.0, -5.0, 4.0, -1.0], denom: 1.0 };
const D2_RIGHT_END: Stencil = Stencil { offsets: &[0, -1, -2, -3], weights: &[2.0, -5.0, 4.0, -1.0], denom: 1.0 };

/// First-derivative stencil at sample `i` of an `n`-point grid.
#[inline]
pub fn d1_stencil(n: usize, i: usize) -> Stencil {
    if i >= 2 && i + 2 < n {
        D1_CENTRAL4
    } else if i == 0 {
        D1_LEFT_END
    } else if i == n - 1 {
        D1_RIGHT_END
    } else {
        D1_CENTRAL2
    }
}

/// Second-derivative stencil at sample `i` of an `n`-point grid.
#[inline]
pub fn d2_stencil(n: usize, i: usize) -> Stencil {
    if i >= 2 && i + 2 < n {
        D2_CENTRAL4
    } else if i == 0 {
        D2_LEFT_END
    } else if i == n - 1 {
        D2_RIGHT_END
    } else {
        D2_CENTRAL2
    }
}

/// First derivative at sample `i`.
pub fn d1_at(f: &[f64], h: f64, i: usize) -> f64 {
    debug_assert!(f.len() >= MIN_POINTS);
    d1_stencil(f.len(), i).apply(f, i, h)
}

/// Second derivative at sample `i`.
pub fn d2_at(f: &[f64], h: f64, i: usize) -> f64 {
    debug_assert!(f.len() >= MIN_POINTS);
    d2_stencil(f.len(), i).apply(f, i, h * h)
}

pub fn d1(f: &[f64], h: f64) -> Vec<f64> {
    (0..f.len()).map(|i| d1_at(f, h, i)).collect()
}

pub fn d2(f: &[f64], h: f64) -> Vec<f64> {
    (0..f.len()).map(|i| d2_at(f, h, i)).collect()
}

/// Whether sample `i` of an `n`-point grid is computed with fourth-order stencils.
pub fn is_trusted(n: usize, i: usize) -> bool {
    i >= BOUNDARY_MARGIN && i + BOUNDARY_MARGIN < n
}

pub fn trust_flags(n: usize) -> Vec<bool> {
    (0..n).map(|i| is_trusted(n, i)).collect()
}

/// Composite Simpson rule on uniformly spaced samples; falls back to a
/// trapezoid on the last interval when the interval count is odd.
pub fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (f[0] + f[1]),
        _ => {
            let intervals = n - 1;
            let even = intervals - intervals % 2;
            let mut s = f[0] + f[even];
            for (k, v) in f[1..even].iter().enumerate() {
                s += if k % 2 == 0 { 4.0 * v } else { 2.0 * v };
            }
            let mut total = s * h / 3.0;
            if even < intervals {
                // last interval from the cubic through the final four samples
                let m = n - 1;
                total += h * (9.0 * f[m] + 19.0 * f[m - 1] - 5.0 * f[m - 2] + f[m - 3]) / 24.0;
            }
            total
        }
    }
}
