//! Adaptive Gauss–Kronrod quadrature (7-point Gauss, 15-point Kronrod) with
//! global subdivision, explicit breakpoints, and an exponential change of
//! variables on semi-infinite pieces.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss weights for the odd-indexed Kronrod nodes (and the centre).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { rel_tol: 1e-12, abs_tol: 0.0, max_subdivisions: 20_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Estimated absolute error (sum of per-piece |Kronrod − Gauss|).
    pub error: f64,
    pub evaluations: usize,
    pub pieces: usize,
}

impl Quadrature {
    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            if self.error == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            self.error / self.value.abs()
        }
    }
}

/// One 15-point rule on [a, b]: (Kronrod estimate, |Kronrod − Gauss|).
fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

#[derive(Debug)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrate a finite-valued `f` over the finite intervals between
/// consecutive `points`, refining the piece with the largest error estimate
/// until the total error meets the tolerance.
fn adaptive(mut f: impl FnMut(f64) -> f64, points: &[f64], opts: &QuadOptions) -> Result<Quadrature> {
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    let (mut value, mut error) = (0.0, 0.0);
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (v, e) = gk15(&mut f, a, b);
        evaluations += 15;
        value += v;
        error += e;
        heap.push(Piece { a, b, value: v, error: e });
    }
    if !value.is_finite() {
        return Err(Error::Numeric(format!("integrand is not finite on [{}, {}]", points[0], points[points.len() - 1])));
    }
    while error > opts.abs_tol.max(opts.rel_tol * value.abs()) {
        if heap.len() >= opts.max_subdivisions {
            return Err(Error::Numeric(format!(
                "quadrature did not converge: value {value:e}, error {error:e}, {} pieces, {evaluations} evaluations",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("at least one piece");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // piece cannot be split further in floating point; accept it
            return Err(Error::Numeric(format!(
                "quadrature stalled on [{}, {}] with error {:e} (total {error:e})",
                worst.a, worst.b, worst.error
            )));
        }
        let (v1, e1) = gk15(&mut f, worst.a, m);
        let (v2, e2) = gk15(&mut f, m, worst.b);
        evaluations += 30;
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: m, value: v1, error: e1 });
        heap.push(Piece { a: m, b: worst.b, value: v2, error: e2 });
    }
    // recompute sums to shed accumulated cancellation
    let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    Ok(Quadrature { value, error: error.max(0.0), evaluations, pieces: heap.len() })
}

/// ∫ f over `[a, b]`, either end possibly infinite.
///
/// `breakpoints` inside the interval (kinks of `f`) become piece
/// boundaries. An infinite end is mapped to (0, 1] by `x = p ∓ scale·ln u`
/// from the outermost finite point `p`, which turns exponential decay at
/// rate ≥ 1/scale into a bounded integrand.
pub fn integrate(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    scale: f64,
    opts: &QuadOptions,
) -> Result<Quadrature> {
    if a.is_nan() || b.is_nan() || a >= b {
        return Err(Error::param(format!("bad integration limits [{a}, {b}]")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::param(format!("tail scale must be positive, got {scale}")));
    }
    let mut pts: Vec<f64> = breakpoints.iter().copied().filter(|&p| p > a && p < b && p.is_finite()).collect();
    if a.is_finite() {
        pts.push(a);
    }
    if b.is_finite() {
        pts.push(b);
    }
    if pts.is_empty() {
        pts.push(0.0);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let (lo, hi) = (pts[0], pts[pts.len() - 1]);

    let mut total = if pts.len() > 1 { adaptive(&mut f, &pts, opts)? } else {
        Quadrature { value: 0.0, error: 0.0, evaluations: 0, pieces: 0 }
    };
    let mut add = |q: Quadrature| {
        total.value += q.value;
        total.error += q.error;
        total.evaluations += q.evaluations;
        total.pieces += q.pieces;
    };
    if a == f64::NEG_INFINITY {
        add(adaptive(|u| f(lo + scale * u.ln()) * scale / u, &[0.0, 1.0], opts)?);
    }
    if b == f64::INFINITY {
        add(adaptive(|u| f(hi - scale * u.ln()) * scale / u, &[0.0, 1.0], opts)?);
    }
    if total.error > opts.abs_tol.max(opts.rel_tol * total.value.abs()) * 4.0 {
        return Err(Error::Numeric(format!(
            "quadrature error {:e} exceeds tolerance for value {:e}",
            total.error, total.value
        )));
    }
    Ok(total)
}
