//! Scalar root finding and bounded minimisation.

/// Outcome of an iterative scalar solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solution {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Bisection on a bracket `[lo, hi]` with `f(lo)` and `f(hi)` of opposite sign
/// (or zero). Stops when the bracket is narrower than `x_tol`.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    max_iter: usize,
) -> Solution {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Solution {
            x: lo,
            fx: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    if fhi == 0.0 {
        return Solution {
            x: hi,
            fx: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let mut iterations = 0;
    while iterations < max_iter {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= x_tol || mid == lo || mid == hi {
            let fx = f(mid);
            return Solution {
                x: mid,
                fx,
                iterations,
                converged: true,
            };
        }
        let fm = f(mid);
        iterations += 1;
        if fm == 0.0 {
            return Solution {
                x: mid,
                fx: 0.0,
                iterations,
                converged: true,
            };
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    Solution {
        x,
        fx: f(x),
        iterations,
        converged: false,
    }
}

/// Brent's root finder (inverse quadratic interpolation with bisection
/// safeguard). Requires a sign change over `[a, b]`; returns `None` otherwise.
pub fn brent_root<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    x_tol: f64,
    max_iter: usize,
) -> Option<Solution> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(Solution {
            x: a,
            fx: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    if fb == 0.0 {
        return Some(Solution {
            x: b,
            fx: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    if (fa < 0.0) == (fb < 0.0) || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for iter in 1..=max_iter {
        if (fb > 0.0) == (fc > 0.0) {
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
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * x_tol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Some(Solution {
                x: b,
                fx: fb,
                iterations: iter,
                converged: true,
            });
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Some(Solution {
        x: b,
        fx: fb,
        iterations: max_iter,
        converged: false,
    })
}

/// Brent's derivative-free minimiser on `[lo, hi]` (golden section with
/// parabolic steps). Converges when the bracket around the minimum is within
/// `x_tol`.
pub fn brent_minimize<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    x_tol: f64,
    max_iter: usize,
) -> Solution {
    const GOLDEN: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut x = a + GOLDEN * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = f(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for iter in 1..=max_iter {
        let mid = 0.5 * (a + b);
        let tol1 = 1e-12 * x.abs() + x_tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - mid).abs() <= tol2 - 0.5 * (b - a) {
            return Solution {
                x,
                fx,
                iterations: iter,
                converged: true,
            };
        }
        let mut golden_step = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(mid - x);
                }
                golden_step = false;
            }
        }
        if golden_step {
            e = if x >= mid { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Solution {
        x,
        fx,
        iterations: max_iter,
        converged: false,
    }
}

/// One-dimensional Broyden iteration (the secant method) from two starting
/// points. Returns the last iterate, flagged unconverged if it never met
/// `f_tol` or produced a non-finite step.
pub fn secant<F: FnMut(f64) -> f64>(
    mut f: F,
    x0: f64,
    x1: f64,
    f_tol: f64,
    max_iter: usize,
) -> Solution {
    let (mut xa, mut xb) = (x0, x1);
    let mut fa = f(xa);
    let mut fb = f(xb);
    for iter in 1..=max_iter {
        if fb.abs() <= f_tol {
            return Solution {
                x: xb,
                fx: fb,
                iterations: iter,
                converged: true,
            };
        }
        let denom = fb - fa;
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let next = xb - fb * (xb - xa) / denom;
        if !next.is_finite() {
            break;
        }
        xa = xb;
        fa = fb;
        xb = next;
        fb = f(xb);
        if !fb.is_finite() {
            break;
        }
    }
    Solution {
        x: xb,
        fx: fb,
        iterations: max_iter,
        converged: fb.abs() <= f_tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let s = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12, 200);
        assert!(s.converged);
        assert!((s.x - 2f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn brent_root_cubic() {
        let s = brent_root(|x| x * x * x - x - 2.0, 1.0, 2.0, 1e-14, 100).unwrap();
        assert!(s.converged);
        assert!(s.fx.abs() < 1e-12);
        assert!(s.iterations < 20);
    }

    #[test]
    fn brent_root_requires_bracket() {
        assert!(brent_root(|x| x * x + 1.0, -1.0, 1.0, 1e-10, 50).is_none());
    }

    #[test]
    fn brent_minimize_parabola_and_boundary() {
        let s = brent_minimize(|x| (x - 1.3).powi(2), -5.0, 5.0, 1e-10, 200);
        assert!(s.converged);
        assert!((s.x - 1.3).abs() < 1e-8);
        // Minimum at the edge of the interval.
        let s = brent_minimize(|x| x, -2.0, 3.0, 1e-9, 200);
        assert!(s.x < -2.0 + 1e-6);
    }

    #[test]
    fn secant_converges_on_smooth_root() {
        let s = secant(|x| x.exp() - 3.0, 0.0, 0.1, 1e-13, 100);
        assert!(s.converged);
        assert!((s.x - 3f64.ln()).abs() < 1e-12);
    }
}
