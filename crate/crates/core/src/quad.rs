//! Adaptive Simpson quadrature on a closed interval.

/// Recursion cap for [`adaptive_simpson`]; intervals are split at most this
/// many times along any path.
const MAX_DEPTH: u32 = 50;

/// Integrate `f` over `[a, b]` to absolute tolerance `tol` using adaptive
/// Simpson's rule with Richardson correction.
///
/// The interval is first cut into `initial_panels` equal panels so that narrow
/// features (a tanh plateau edge, a sharply peaked Lorentzian) cannot be
/// stepped over by the first coarse estimate. The tolerance is shared out in
/// proportion to panel width.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64, initial_panels: usize) -> f64
where F: Fn(f64) -> f64
{
    if a == b {
        return 0.0;
    }
    let panels = initial_panels.max(1);
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + width * k as f64;
            let hi = if k + 1 == panels { b } else { lo + width };
            let flo = f(lo);
            let fhi = f(hi);
            let mid = 0.5 * (lo + hi);
            let fmid = f(mid);
            let whole = simpson(lo, hi, flo, fmid, fhi);
            refine(&f, lo, hi, flo, fmid, fhi, whole, tol / panels as f64, MAX_DEPTH)
        })
        .sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64
where F: Fn(f64) -> f64
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}
