//! Globally adaptive 21-point Gauss-Kronrod quadrature on a finite interval.
//!
//! The interval is first cut into a caller-chosen number of equal panels
//! (evaluated in parallel), then the panel with the largest error estimate is
//! bisected until the summed error meets the relative tolerance. Oscillatory
//! integrands need the initial panels to resolve the oscillation; see
//! [`panels_for_oscillation`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::QuadratureError;
use crate::summation::NeumaierSum;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Estimated absolute error.
    pub abs_error: f64,
    pub panels: usize,
}

impl Integral {
    pub fn rel_error(&self) -> f64 {
        if self.value == 0.0 {
            if self.abs_error == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.abs_error / self.value.abs()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub rel_tol: f64,
    /// Absolute error below which no refinement is attempted.
    pub abs_tol: f64,
    pub initial_panels: usize,
    /// Maximum number of bisections after the initial split.
    pub max_bisections: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 0.0,
            initial_panels: 16,
            max_bisections: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    // Largest error first; ties broken by position so the order is total.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// One 21-point Gauss-Kronrod panel: (Kronrod value, error estimate).
pub fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let abs_half = half.abs();
    let fc = f(center);
    let mut res_g = 0.0;
    let mut res_k = fc * WGK[10];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..5 {
        let jtw = 2 * j + 1;
        let x = half * XGK[jtw];
        let (f1, f2) = (f(center - x), f(center + x));
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += WG[j] * (f1 + f2);
        res_k += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let x = half * XGK[jtwm1];
        let (f1, f2) = (f(center - x), f(center + x));
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let err = rescale_error((res_k - res_g) * half, res_abs * abs_half, res_asc * abs_half);
    (value, err)
}

/// Number of equal initial panels on `[0, upper]` so that each panel is at
/// most half the oscillation period `2π / frequency` of the integrand, with a
/// floor of `min_panels`.
pub fn panels_for_oscillation(upper: f64, frequency: f64, min_panels: usize) -> usize {
    if frequency <= 0.0 || !frequency.is_finite() {
        return min_panels;
    }
    let half_period = std::f64::consts::PI / frequency;
    let n = (upper / half_period).ceil();
    (n as usize).max(min_panels)
}

/// Adaptive integral of `f` over `[a, b]`.
///
/// Returns `NotConverged` when the bisection budget is exhausted and the
/// error estimate is still above ten times the requested tolerance; between
/// one and ten times the tolerance the result is returned with its honest
/// error estimate.
pub fn integrate<F>(f: F, a: f64, b: f64, opts: &AdaptiveOptions) -> Result<Integral, QuadratureError>
where
    F: Fn(f64) -> f64 + Sync,
{
    let n0 = opts.initial_panels.max(1);
    let h = (b - a) / n0 as f64;
    let initial: Vec<Panel> = (0..n0)
        .into_par_iter()
        .map(|i| {
            let pa = a + h * i as f64;
            let pb = if i + 1 == n0 { b } else { a + h * (i + 1) as f64 };
            let (value, error) = gk21(&f, pa, pb);
            Panel {
                a: pa,
                b: pb,
                value,
                error,
            }
        })
        .collect();

    let mut total: f64 = initial.iter().map(|p| p.value).sum();
    let mut err_total: f64 = initial.iter().map(|p| p.error).sum();
    let mut heap: BinaryHeap<Panel> = initial.into_iter().collect();
    let tolerance = |total: f64| (opts.rel_tol * total.abs()).max(opts.abs_tol);

    let mut bisections = 0;
    while err_total > tolerance(total) && bisections < opts.max_bisections {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval can no longer be split in floating point
            heap.push(Panel {
                error: 0.0,
                ..worst
            });
            err_total -= worst.error;
            continue;
        }
        let (v1, e1) = gk21(&f, worst.a, mid);
        let (v2, e2) = gk21(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err_total += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        bisections += 1;
    }

    // Final reduction in interval order for a deterministic, compensated sum.
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = panels.iter().map(|p| p.value).collect::<NeumaierSum>().value();
    let abs_error = panels.iter().map(|p| p.error).collect::<NeumaierSum>().value();
    let result = Integral {
        value,
        abs_error,
        panels: panels.len(),
    };
    if abs_error > 10.0 * tolerance(value) {
        return Err(QuadratureError::NotConverged {
            value,
            error: abs_error,
        });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(7) - 3.0 * x * x, 0.0, 2.0, &AdaptiveOptions::default()).unwrap();
        let want = 2f64.powi(8) / 8.0 - 8.0;
        assert!((r.value - want).abs() < 1e-13);
    }

    #[test]
    fn gaussian_moment() {
        // ∫_0^8 u^4 exp(-u^2) du = 3√π/8 up to a ~e^-64 tail
        let r = integrate(|u| u.powi(4) * (-u * u).exp(), 0.0, 8.0, &AdaptiveOptions::default()).unwrap();
        let want = 3.0 * PI.sqrt() / 8.0;
        assert!((r.value / want - 1.0).abs() < 1e-14);
    }

    #[test]
    fn oscillatory_sinc_squared() {
        // ∫_0^∞ sin²(a u)/(a u)² du = π/(2a); truncate where the integrand's
        // tail is handled analytically: ∫_U^∞ ≈ 1/(2 a² U).
        let a = 500.0;
        let upper = 40.0;
        let opts = AdaptiveOptions {
            rel_tol: 1e-12,
            initial_panels: panels_for_oscillation(upper, 2.0 * a, 16),
            ..Default::default()
        };
        let f = |u: f64| {
            let s = crate::special::sinc(a * u);
            s * s
        };
        let r = integrate(f, 0.0, upper, &opts).unwrap();
        let tail = 1.0 / (2.0 * a * a * upper);
        let want = PI / (2.0 * a);
        assert!(((r.value + tail) / want - 1.0).abs() < 1e-7, "{} vs {}", r.value + tail, want);
    }

    #[test]
    fn budget_exhaustion_reports_not_converged() {
        let opts = AdaptiveOptions {
            rel_tol: 1e-14,
            initial_panels: 1,
            max_bisections: 3,
            ..Default::default()
        };
        let r = integrate(|x: f64| (1.0 / x.max(1e-300)).sqrt().sin(), 1e-9, 1.0, &opts);
        assert!(matches!(r, Err(QuadratureError::NotConverged { .. })));
    }

    #[test]
    fn result_is_independent_of_thread_count() {
        let f = |u: f64| (-u * u).exp() * (37.0 * u).sin().powi(2);
        let opts = AdaptiveOptions {
            initial_panels: 300,
            ..Default::default()
        };
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = pool1.install(|| integrate(f, 0.0, 8.0, &opts).unwrap());
        let b = pool4.install(|| integrate(f, 0.0, 8.0, &opts).unwrap());
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
