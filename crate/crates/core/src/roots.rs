//! Bracketed scalar root finding.

/// Brent's method on a bracket `[a, b]` with `f(a)` and `f(b)` of opposite sign.
///
/// Iterates until the bracket shrinks to a few ulps (or `max_iter` is hit), so
/// the returned abscissa is as accurate as the function evaluation allows.
/// Returns the endpoint when it is already an exact root.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, max_iter: usize) -> f64 {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    debug_assert!(fa.signum() != fb.signum(), "brent: root not bracketed");
    let mut c = b;
    let mut fc = fb;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if (fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 1e-300;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol || fb == 0.0 {
            return b;
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol {
            b += d;
        } else {
            b += tol.copysign(xm);
        }
        fb = f(b);
    }
    b
}

/// Widens `[lo, hi]` geometrically until `f(lo) > 0 > f(hi)` for a decreasing `f`.
///
/// Returns `None` when the sign pattern never appears within `max_doublings`.
pub fn bracket_decreasing<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    max_doublings: usize,
) -> Option<(f64, f64)> {
    let mut width = (hi - lo).max(1e-12);
    for _ in 0..max_doublings {
        let flo = f(lo);
        let fhi = f(hi);
        if flo >= 0.0 && fhi <= 0.0 {
            return Some((lo, hi));
        }
        if flo < 0.0 {
            lo -= width;
        }
        if fhi > 0.0 {
            hi += width;
        }
        width *= 2.0;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_simple_roots() {
        let r = brent(|x| x * x - 2.0, 0.0, 2.0, 200);
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        let r = brent(|x| x.cos() - x, 0.0, 1.0, 200);
        assert!((r.cos() - r).abs() < 1e-15);
        let r = brent(|x| (x - 3.0).powi(3), -10.0, 10.0, 500);
        assert!((r - 3.0).abs() < 1e-5);
    }

    #[test]
    fn brackets_grow_outwards() {
        let (lo, hi) = bracket_decreasing(|x| 100.0 - x, -1.0, 1.0, 60).unwrap();
        assert!(lo <= 100.0 && hi >= 100.0);
        assert!(bracket_decreasing(|_| 1.0, -1.0, 1.0, 10).is_none());
    }
}
