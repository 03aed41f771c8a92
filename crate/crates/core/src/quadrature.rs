//! Adaptive Gauss–Kronrod (7/15) quadrature for extended-valued integrands.
//!
//! A sample equal to +∞ (or NaN, which the models use for "undefined")
//! makes the whole integral +∞.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_intervals: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

impl QuadResult {
    fn infinite() -> Self {
        QuadResult {
            value: f64::INFINITY,
            error: 0.0,
            intervals: 0,
        }
    }
}

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

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut err = err.abs();
    if resasc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / resasc).powf(1.5);
        err = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * resabs;
        if min_err > err {
            err = min_err;
        }
    }
    err
}

/// One 15-point Kronrod rule on [a,b]. `None` if a sample is +∞ or NaN.
fn qk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Option<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if fc.is_nan() || fc == f64::INFINITY {
        return None;
    }
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = (res_k).abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        if f1.is_nan() || f2.is_nan() || f1 == f64::INFINITY || f2 == f64::INFINITY {
            return None;
        }
        fv1[j] = f1;
        fv2[j] = f2;
        let sum = f1 + f2;
        res_k += WGK[j] * sum;
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * sum;
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * half;
    let err = (res_k - res_g) * half;
    let h = half.abs();
    Some((result, rescale_error(err, res_abs * h, res_asc * h)))
}

/// Integrate `f` over `[a, b]`.
///
/// Returns +∞ as soon as any sample is +∞ or NaN. A zero-length interval
/// integrates to zero without sampling.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, cfg: &QuadConfig) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        };
    }
    let Some((v0, e0)) = qk15(&mut f, a, b) else {
        return QuadResult::infinite();
    };
    let mut heap = BinaryHeap::new();
    heap.push(Piece {
        a,
        b,
        value: v0,
        error: e0,
    });
    let mut total = v0;
    let mut total_err = e0;
    let mut count = 1;
    while total_err > cfg.abs_tol.max(cfg.rel_tol * total.abs()) && count < cfg.max_intervals {
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // cannot split further in floating point
            heap.push(worst);
            break;
        }
        let Some((vl, el)) = qk15(&mut f, worst.a, mid) else {
            return QuadResult::infinite();
        };
        let Some((vr, er)) = qk15(&mut f, mid, worst.b) else {
            return QuadResult::infinite();
        };
        total += vl + vr - worst.value;
        total_err += el + er - worst.error;
        heap.push(Piece {
            a: worst.a,
            b: mid,
            value: vl,
            error: el,
        });
        heap.push(Piece {
            a: mid,
            b: worst.b,
            value: vr,
            error: er,
        });
        count += 1;
    }
    // re-sum to shed drift from the incremental updates
    let mut value = 0.0;
    let mut error = 0.0;
    for p in heap.iter() {
        value += p.value;
        error += p.error;
    }
    QuadResult {
        value,
        error,
        intervals: count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, &QuadConfig::default());
        assert_relative_eq!(r.value, 4.0 - 4.0 + 2.0, epsilon = 1e-13);
    }

    #[test]
    fn smooth_transcendental() {
        let r = integrate(f64::exp, 0.0, 1.0, &QuadConfig::default());
        assert_relative_eq!(r.value, std::f64::consts::E - 1.0, epsilon = 1e-12);
    }

    #[test]
    fn jump_is_resolved() {
        let r = integrate(|x| if x > 0.3 { 2.0 } else { 1.0 }, 0.0, 1.0, &QuadConfig::default());
        assert!((r.value - 1.7).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn infinite_sample_poisons() {
        let r = integrate(
            |x| if x > 0.5 { f64::INFINITY } else { 1.0 },
            0.0,
            1.0,
            &QuadConfig::default(),
        );
        assert_eq!(r.value, f64::INFINITY);
    }

    #[test]
    fn degenerate_interval() {
        let r = integrate(|_| f64::INFINITY, 1.0, 1.0, &QuadConfig::default());
        assert_eq!(r.value, 0.0);
    }
}
