//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Infinite limits are mapped onto finite intervals before integration:
//! `[a, ∞)` through `x = a + u/(1−u)`, `(−∞, b]` through `x = b − u/(1−u)`
//! and the whole line through `x = c + s·u/(1−u²)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 1 << 16,
        }
    }
}

impl QuadConfig {
    pub fn with_abs_tol(mut self, tol: f64) -> Self {
        self.abs_tol = tol;
        self
    }

    pub fn with_rel_tol(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

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

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    if !kronrod.is_finite() {
        return Err(Error::Integration {
            estimate: kronrod * half,
            error: f64::INFINITY,
        });
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let abs_sum = abs_sum * half.abs();
    let asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_sum);
    }
    Ok(Segment { a, b, value, error })
}

fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult> {
    let first = kronrod15(&mut f, a, b)?;
    let mut evaluations = 15;
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut subdivisions = 1;
    while error > cfg.target(value) {
        if subdivisions >= cfg.max_subdivisions {
            return Err(Error::Integration { estimate: value, error });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if !(worst.a < mid && mid < worst.b) {
            return Err(Error::Integration { estimate: value, error });
        }
        let left = kronrod15(&mut f, worst.a, mid)?;
        let right = kronrod15(&mut f, mid, worst.b)?;
        evaluations += 30;
        subdivisions += 1;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // Re-sum periodically so the running totals do not drift.
        if subdivisions % 64 == 0 {
            value = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
        }
    }
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.error).sum();
    // A divergent integrand can meet a relative tolerance once the running
    // total is large enough. Mass left on a segment at floating-point
    // resolution is the tell.
    let unresolved = |s: &Segment| {
        let resolution = (64.0 * f64::EPSILON * s.a.abs().max(s.b.abs())).max(f64::MIN_POSITIVE);
        s.b - s.a <= resolution && s.value.abs() > cfg.target(value)
    };
    if heap.iter().any(unresolved)
    {
        return Err(Error::Integration { estimate: value, error });
    }
    Ok(QuadResult {
        value,
        error,
        evaluations,
    })
}

/// `∫_lo^hi f(x) dx`; either limit may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, cfg: &QuadConfig) -> Result<QuadResult> {
    if lo.is_nan() || hi.is_nan() {
        return Err(Error::domain("integration limit is NaN"));
    }
    if lo == hi {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    if lo > hi {
        let r = integrate(f, hi, lo, cfg)?;
        return Ok(QuadResult {
            value: -r.value,
            ..r
        });
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => adaptive(&f, lo, hi, cfg),
        (true, false) => adaptive(
            |u: f64| {
                let w = 1.0 - u;
                guarded(&f, lo + u / w, 1.0 / (w * w))
            },
            0.0,
            1.0,
            cfg,
        ),
        (false, true) => adaptive(
            |u: f64| {
                let w = 1.0 - u;
                guarded(&f, hi - u / w, 1.0 / (w * w))
            },
            0.0,
            1.0,
            cfg,
        ),
        (false, false) => integrate_line(f, 0.0, 1.0, cfg),
    }
}

/// `∫_ℝ f(x) dx` with the map `x = center + scale·u/(1−u²)`; the bulk of the
/// integrand should sit within a few `scale` of `center`.
pub fn integrate_line<F: Fn(f64) -> f64>(
    f: F,
    center: f64,
    scale: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    if !(scale > 0.0) {
        return Err(Error::domain("line integration scale must be positive"));
    }
    adaptive(
        |u: f64| {
            let w = 1.0 - u * u;
            guarded(&f, center + scale * u / w, scale * (1.0 + u * u) / (w * w))
        },
        -1.0,
        1.0,
        cfg,
    )
}

fn guarded<F: Fn(f64) -> f64>(f: &F, x: f64, jacobian: f64) -> f64 {
    if !x.is_finite() || !jacobian.is_finite() {
        return 0.0;
    }
    let v = f(x);
    if v == 0.0 {
        0.0
    } else {
        v * jacobian
    }
}

/// Points per scan line used to find where a region indicator switches.
const SCAN_POINTS: usize = 257;
/// Horizontal lines scanned for vertical region boundaries.
const SCAN_LINES: usize = 33;

/// Locates the switch of `inside` between `a` (value `va`) and `b` by
/// bisection, to within a few ulps.
fn locate_switch(inside: impl Fn(f64) -> bool, mut a: f64, mut b: f64, va: bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if !(a < mid && mid < b) && !(b < mid && mid < a) {
            break;
        }
        if inside(mid) == va {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Maximal sub-intervals of `[lo, hi]` on which `inside` holds, found on a
/// uniform scan of [`SCAN_POINTS`] samples refined by bisection. Pieces
/// narrower than the scan spacing can be missed.
pub fn indicator_pieces(inside: impl Fn(f64) -> bool, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let at = |k: usize| if k + 1 == SCAN_POINTS { hi } else { lo + k as f64 * step };
    let mut pieces = Vec::new();
    let mut prev = inside(lo);
    let mut start = if prev { Some(lo) } else { None };
    for k in 1..SCAN_POINTS {
        let x = at(k);
        let cur = inside(x);
        if cur != prev {
            let edge = locate_switch(&inside, at(k - 1), x, prev);
            match start.take() {
                Some(s) => pieces.push((s, edge)),
                None => start = Some(edge),
            }
            prev = cur;
        }
    }
    if let Some(s) = start {
        pieces.push((s, hi));
    }
    pieces.retain(|(a, b)| b > a);
    pieces
}

/// `∫∫ f(x, y) dy dx` over `{(x, y) ∈ box : inside(x, y)}` as an iterated
/// integral.
///
/// Boundaries of the indicator are located explicitly rather than left to the
/// error estimate, which cannot see a jump that falls between nodes: the
/// inner integral splits each vertical line at its indicator switches, and
/// the outer integral is split at every switch found on [`SCAN_LINES`]
/// horizontal lines. Between splits `f` is integrated adaptively; the inner
/// integrals run at a tenth of the outer tolerances.
pub fn integrate_masked(
    f: impl Fn(f64, f64) -> f64,
    inside: impl Fn(f64, f64) -> bool,
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    if !(x0 < x1 && y0 < y1) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
        return Err(Error::domain("integration box must be finite and non-empty"));
    }
    let mut breaks = vec![x0, x1];
    for k in 0..SCAN_LINES {
        let y = y0 + (k as f64 + 0.5) * (y1 - y0) / SCAN_LINES as f64;
        for (a, b) in indicator_pieces(|x| inside(x, y), x0, x1) {
            breaks.push(a);
            breaks.push(b);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (x1 - x0));

    let inner_cfg = QuadConfig {
        abs_tol: cfg.abs_tol / (10.0 * (x1 - x0).max(1.0)),
        rel_tol: cfg.rel_tol / 10.0,
        max_subdivisions: cfg.max_subdivisions,
    };
    let failure = std::cell::RefCell::new(None);
    let evaluations = std::cell::Cell::new(0usize);
    let inner = |x: f64| -> f64 {
        let mut total = 0.0;
        for (a, b) in indicator_pieces(|y| inside(x, y), y0, y1) {
            match integrate(|y| f(x, y), a, b, &inner_cfg) {
                Ok(r) => {
                    evaluations.set(evaluations.get() + r.evaluations);
                    total += r.value;
                }
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                }
            }
        }
        total
    };
    let mut value = 0.0;
    let mut error = 0.0;
    let mut outer_evals = 0;
    let span = x1 - x0;
    for w in breaks.windows(2) {
        let piece_cfg = QuadConfig {
            abs_tol: cfg.abs_tol * (w[1] - w[0]) / span,
            ..*cfg
        };
        let r = integrate(inner, w[0], w[1], &piece_cfg)?;
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        value += r.value;
        error += r.error;
        outer_evals += r.evaluations;
    }
    Ok(QuadResult {
        value,
        error,
        evaluations: evaluations.get() + outer_evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, &QuadConfig::default()).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let cfg = QuadConfig::default();
        let a = integrate(f64::sin, 0.0, 1.0, &cfg).unwrap().value;
        let b = integrate(f64::sin, 1.0, 0.0, &cfg).unwrap().value;
        assert_eq!(a, -b);
        assert_eq!(integrate(f64::sin, 1.0, 1.0, &cfg).unwrap().value, 0.0);
    }

    #[test]
    fn semi_infinite_exponential() {
        let cfg = QuadConfig::default();
        let r = integrate(|x| (-x).exp(), 0.0, f64::INFINITY, &cfg).unwrap();
        assert!((r.value - 1.0).abs() < 1e-13);
        let r = integrate(|x| x.exp(), f64::NEG_INFINITY, 0.0, &cfg).unwrap();
        assert!((r.value - 1.0).abs() < 1e-13);
    }

    #[test]
    fn gaussian_on_the_line() {
        let cfg = QuadConfig::default();
        let r = integrate(|x| (-x * x).exp(), f64::NEG_INFINITY, f64::INFINITY, &cfg).unwrap();
        assert!((r.value - PI.sqrt()).abs() < 1e-12);
        let r = integrate_line(|x| (-(x - 50.0) * (x - 50.0)).exp(), 50.0, 1.0, &cfg).unwrap();
        assert!((r.value - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        let r = integrate(|x| x.sqrt().recip(), 0.0, 1.0, &QuadConfig::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn jump_discontinuity() {
        let step = |x: f64| if x < 1.0 / 3.0 { 1.0 } else { 0.0 };
        let r = integrate(step, 0.0, 1.0, &QuadConfig::default()).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn non_integrable_singularity_fails() {
        let cfg = QuadConfig {
            max_subdivisions: 2000,
            ..QuadConfig::default()
        };
        let r = integrate(|x| 1.0 / x, 0.0, 1.0, &cfg);
        assert!(matches!(r, Err(Error::Integration { .. })));
        let r = integrate(|_| 1.0, 0.0, f64::INFINITY, &cfg);
        assert!(matches!(r, Err(Error::Integration { .. })));
    }

    #[test]
    fn jump_between_nodes_is_found_by_scanning() {
        // The switch at 0.99875 lies beyond the outermost Kronrod node on
        // [0, 1], so plain adaptive integration would accept 1.
        let c = 0.99875;
        let pieces = indicator_pieces(|y| y < c, 0.0, 1.0);
        assert_eq!(pieces.len(), 1);
        assert!((pieces[0].1 - c).abs() < 1e-14);
    }

    #[test]
    fn quarter_disc_area() {
        let r = integrate_masked(
            |_, _| 1.0,
            |x, y| x * x + y * y <= 1.0,
            (0.0, 1.0),
            (0.0, 1.0),
            &QuadConfig::default(),
        )
        .unwrap();
        assert!((r.value - PI / 4.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn rectangle_with_vertical_edges() {
        let r = integrate_masked(
            |x, y| x + y,
            |x, _| (0.3..=0.7).contains(&x),
            (0.0, 1.0),
            (0.0, 2.0),
            &QuadConfig::default(),
        )
        .unwrap();
        // ∫_{0.3}^{0.7} (2x + 2) dx
        assert!((r.value - (0.49 - 0.09 + 0.8)).abs() < 1e-10, "{}", r.value);
    }
}
