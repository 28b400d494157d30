//! Scalar benchmark problem and the statistics used to report it.
//!
//! The objective is a cubic `f(x) = c3 x³ + c2 x² + c1 x + c0`, the
//! constraint is `g(x) = −f(x) + f_min ≤ 0`.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Cubic objective with a lower acceptable level `f_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicBenchmark {
    /// `(c3, c2, c1, c0)`.
    pub coefficients: [f64; 4],
    pub f_min: f64,
}

impl CubicBenchmark {
    pub const DEFAULT: CubicBenchmark = CubicBenchmark {
        coefficients: [0.01, -0.2, 0.2, 0.0],
        f_min: -5.168,
    };

    pub fn f(&self, x: f64) -> f64 {
        let [c3, c2, c1, c0] = self.coefficients;
        ((c3 * x + c2) * x + c1) * x + c0
    }

    pub fn g(&self, x: f64) -> f64 {
        -self.f(x) + self.f_min
    }

    /// Global maximum of `f` on `[lo, hi]`: `(argmax, max)`.
    pub fn maximize(&self, lo: f64, hi: f64) -> (f64, f64) {
        maximize_1d(|x| self.f(x), lo, hi)
    }

    /// Length of `{x ∈ [lo, hi] : g(x) ≤ 0}`.
    pub fn safe_measure(&self, lo: f64, hi: f64) -> f64 {
        sublevel_measure(|x| self.g(x), lo, hi, 4096)
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal function.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Coarse scan followed by golden-section refinement around the best
/// sample; the endpoints are candidates too.
pub fn maximize_1d<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> (f64, f64) {
    const N: usize = 2000;
    let h = (hi - lo) / N as f64;
    let mut best = (lo, f(lo));
    for i in 1..=N {
        let x = if i == N { hi } else { lo + h * i as f64 };
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let a = (best.0 - h).max(lo);
    let b = (best.0 + h).min(hi);
    let x = golden_section_max(&f, a, b, 1e-12);
    let v = f(x);
    if v > best.1 {
        (x, v)
    } else {
        best
    }
}

/// Root of `f` in `[a, b]` by bisection; `f(a)` and `f(b)` must differ in
/// sign.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidParameter {
            name: "bracket",
            value: fa * fb,
        });
    }
    while (b - a).abs() > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Length of `{x ∈ [lo, hi] : g(x) ≤ 0}`, locating every sign change on
/// a scan of `n` cells and refining it by bisection.
pub fn sublevel_measure<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut total = 0.0;
    let mut x0 = lo;
    let mut g0 = g(x0);
    for i in 1..=n {
        let x1 = if i == n { hi } else { lo + h * i as f64 };
        let g1 = g(x1);
        match (g0 <= 0.0, g1 <= 0.0) {
            (true, true) => total += x1 - x0,
            (false, false) => {}
            (inside0, _) => {
                let root = bisect(&g, x0, x1, 1e-13).unwrap_or(0.5 * (x0 + x1));
                total += if inside0 { root - x0 } else { x1 - root };
            }
        }
        x0 = x1;
        g0 = g1;
    }
    total
}

/// Prefix sums of `f_opt − f(x_t)`.
pub fn cumulative_regret(f_opt: f64, f_values: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    f_values
        .iter()
        .map(|v| {
            acc += f_opt - v;
            acc
        })
        .collect()
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Empirical percentile with linear interpolation between order
/// statistics (position `(n − 1) p` in the sorted sample).
pub fn percentile(xs: &[f64], p: f64) -> Option<f64> {
    if xs.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = libm::floor(pos) as usize;
    let hi = libm::ceil(pos) as usize;
    let frac = pos - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// `100 (value − reference) / reference`.
pub fn relative_increase(value: f64, reference: f64) -> f64 {
    100.0 * (value - reference) / reference
}
