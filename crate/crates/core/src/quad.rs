//! Fixed-order Gauss–Legendre rule applied per sample interval.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

/// Nodes per interval. With sample intervals of a tenth of a year and the
/// smooth yield curves used here, four nodes are at rounding level.
const NODES: usize = 4;

fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let degree = NODES.try_into().expect("nonzero degree");
        GaussLegendre::new(degree)
            .iter()
            .map(|(node, weight)| (*node, *weight))
            .collect()
    })
}

/// Integral of `f` over `[lo, hi]` using one Gauss–Legendre panel.
pub(crate) fn panel<F: Fn(f64) -> f64>(lo: f64, hi: f64, f: F) -> f64 {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    half * rule()
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
}

/// Integral over `[lo, hi]` of an `f` behaving like `(t − lo)^power` near
/// `lo`. The substitution `t = lo + (hi − lo)·u^n` makes the integrand a
/// high enough power of `u` for the Gauss rule to be accurate again.
pub(crate) fn panel_power<F: Fn(f64) -> f64>(lo: f64, hi: f64, power: f64, f: F) -> f64 {
    let n = (8.0 / (power + 1.0)).ceil().clamp(1.0, 16.0) as i32;
    let width = hi - lo;
    let nf = f64::from(n);
    let g = |u: f64| f(lo + width * u.powi(n)) * width * nf * u.powi(n - 1);
    // High powers of u are steep near 1, hence the many sub-panels.
    let pieces = 32;
    let du = 1.0 / f64::from(pieces);
    (0..pieces)
        .map(|i| panel(du * f64::from(i), du * f64::from(i + 1), g))
        .sum()
}

/// One panel, switching to [`panel_power`] when it starts at `origin`.
pub(crate) fn panel_at<F: Fn(f64) -> f64>(lo: f64, hi: f64, origin: Option<(f64, f64)>, f: F) -> f64 {
    match origin {
        Some((at, power)) if lo == at => panel_power(lo, hi, power, f),
        _ => panel(lo, hi, f),
    }
}

/// Composite rule: `[lo, hi]` split into panels no wider than `max_width`.
/// `origin` is an optional `(age, power)` of an algebraic endpoint behaviour.
pub(crate) fn composite<F: Fn(f64) -> f64>(
    lo: f64,
    hi: f64,
    max_width: f64,
    origin: Option<(f64, f64)>,
    f: F,
) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let n = ((hi - lo) / max_width).ceil().max(1.0) as usize;
    let width = (hi - lo) / n as f64;
    (0..n)
        .map(|i| {
            let a = lo + width * i as f64;
            let b = if i + 1 == n { hi } else { a + width };
            panel_at(a, b, origin, &f)
        })
        .sum()
}
