//! Small numerical quadrature helpers.

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    refine(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn refine(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integral over `[a, b]` split at the given interior breakpoints.
pub fn integrate_piecewise(f: &impl Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut points = vec![a];
    points.extend(breaks.iter().copied().filter(|x| *x > a && *x < b));
    points.push(b);
    let pieces = (points.len() - 1) as f64;
    points.windows(2).map(|w| adaptive_simpson(f, w[0], w[1], tol / pieces)).sum()
}

/// Roots of a continuous function on `[a, b]`, located by sign changes on a grid and bisection.
pub fn bracketed_roots(f: &impl Fn(f64) -> f64, a: f64, b: f64, grid: usize) -> Vec<f64> {
    let step = (b - a) / grid as f64;
    let mut roots = Vec::new();
    let mut x0 = a;
    let mut f0 = f(a);
    for i in 1..=grid {
        let x1 = a + i as f64 * step;
        let f1 = f(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0 * f1 < 0.0 {
            let (mut lo, mut hi, mut flo) = (x0, x1, f0);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}
