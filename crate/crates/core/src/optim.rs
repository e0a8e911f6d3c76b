//! Scalar searches and a limited-memory quasi-Newton minimiser.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximiser of a unimodal function on `[lo, hi]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    golden_min(|x| -f(x), lo, hi, tol)
}

/// Minimiser of a unimodal function on `[lo, hi]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while (hi - lo) > tol * (1.0 + lo.abs().max(hi.abs())) && iters < 400 {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
        iters += 1;
    }
    let mid = 0.5 * (lo + hi);
    // Return the best of the probed points.
    let fm = f(mid);
    if fm <= fc && fm <= fd {
        mid
    } else if fc <= fd {
        c
    } else {
        d
    }
}

/// Root of a decreasing function on `(lo, ∞)`: grows the bracket upwards
/// from `hi` and bisects to a relative tolerance.
pub fn bisect_decreasing<F: Fn(f64) -> f64>(g: F, lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut lo = lo;
    let mut width = (hi - lo).max(1e-3);
    let mut guard = 0;
    while g(hi) > 0.0 && guard < 2000 {
        lo = hi;
        width *= 2.0;
        hi += width;
        guard += 1;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Minimiser of a convex function on the real line: expands a bracket
/// around `0` by doubling, then golden section.
pub fn convex_line_min<F: Fn(f64) -> f64>(f: F, step: f64, tol: f64) -> (f64, f64) {
    let f0 = f(0.0);
    let mut lo = -step;
    let mut hi = step;
    let (mut flo, mut fhi) = (f(lo), f(hi));
    let mut guard = 0;
    while flo < f0 && guard < 60 {
        lo *= 2.0;
        flo = f(lo);
        guard += 1;
    }
    guard = 0;
    while fhi < f0 && guard < 60 {
        hi *= 2.0;
        fhi = f(hi);
        guard += 1;
    }
    let t = golden_min(&f, lo, hi, tol);
    let ft = f(t);
    if ft <= f0 {
        (t, ft)
    } else {
        (0.0, f0)
    }
}

/// `min_c f(x0 + Σ c_i d_i)` for convex `f`, by cyclic exact line searches.
/// Returns the minimiser and the value.
pub fn min_affine_slice<F: Fn(&[f64]) -> f64>(
    x0: &[f64],
    dirs: &[Vec<f64>],
    f: F,
    step: f64,
    tol: f64,
) -> (Vec<f64>, f64) {
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    if dirs.is_empty() {
        return (x, fx);
    }
    let sweeps = if dirs.len() == 1 { 1 } else { 200 };
    for _ in 0..sweeps {
        let before = fx;
        for d in dirs {
            let (t, ft) = convex_line_min(
                |t| {
                    let y: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + t * b).collect();
                    f(&y)
                },
                step,
                tol,
            );
            if ft < fx {
                for (a, b) in x.iter_mut().zip(d) {
                    *a += t * b;
                }
                fx = ft;
            }
        }
        if before - fx <= tol * (1.0 + fx.abs()) {
            break;
        }
    }
    (x, fx)
}

/// Compass search with coordinate and diagonal directions, halving the step
/// until it drops below `tol`.
pub fn pattern_search<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], step: f64, tol: f64) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for j in 0..n {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; n];
            d[j] = s;
            dirs.push(d);
        }
    }
    if n == 2 {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for (a, b) in [(r, r), (r, -r), (-r, r), (-r, -r)] {
            dirs.push(vec![a, b]);
        }
    }
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut h = step;
    let mut guard = 0;
    while h > tol && guard < 100_000 {
        guard += 1;
        let mut moved = false;
        for d in &dirs {
            let y: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + h * b).collect();
            let fy = f(&y);
            if fy < fx {
                x = y;
                fx = fy;
                moved = true;
                break;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    (x, fx)
}

pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub converged: bool,
}

/// L-BFGS with Armijo backtracking.  `fg` returns the value and fills the
/// gradient.
pub fn lbfgs<F>(mut x: Vec<f64>, fg: F, max_iter: usize, grad_tol: f64) -> LbfgsOutcome
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    let n = x.len();
    let memory = 8;
    let mut g = vec![0.0; n];
    let mut f = fg(&x, &mut g);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    for _ in 0..max_iter {
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm <= grad_tol {
            return LbfgsOutcome {
                x,
                converged: true,
            };
        }
        // Two-loop recursion.
        let mut q = g.clone();
        let m = s_hist.len();
        let mut alpha = vec![0.0; m];
        for i in (0..m).rev() {
            let rho = 1.0 / dotv(&y_hist[i], &s_hist[i]);
            alpha[i] = rho * dotv(&s_hist[i], &q);
            for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
                *qj -= alpha[i] * yj;
            }
        }
        if m > 0 {
            let gamma = dotv(&s_hist[m - 1], &y_hist[m - 1]) / dotv(&y_hist[m - 1], &y_hist[m - 1]);
            q.iter_mut().for_each(|v| *v *= gamma);
        } else {
            let scale = 1.0 / gnorm.max(1e-300);
            q.iter_mut().for_each(|v| *v *= scale);
        }
        for i in 0..m {
            let rho = 1.0 / dotv(&y_hist[i], &s_hist[i]);
            let beta = rho * dotv(&y_hist[i], &q);
            for (qj, sj) in q.iter_mut().zip(&s_hist[i]) {
                *qj += (alpha[i] - beta) * sj;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dotv(&dir, &g);
        if slope >= 0.0 {
            dir = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
            s_hist.clear();
            y_hist.clear();
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for j in 0..n {
                xn[j] = x[j] + step * dir[j];
            }
            let fnew = fg(&xn, &mut gn);
            if fnew.is_finite() && fnew <= f + 1e-4 * step * slope {
                let s: Vec<f64> = (0..n).map(|j| xn[j] - x[j]).collect();
                let y: Vec<f64> = (0..n).map(|j| gn[j] - g[j]).collect();
                if dotv(&s, &y) > 1e-14 * dotv(&y, &y).sqrt() * dotv(&s, &s).sqrt() {
                    s_hist.push(s);
                    y_hist.push(y);
                    if s_hist.len() > memory {
                        s_hist.remove(0);
                        y_hist.remove(0);
                    }
                }
                let rel = (f - fnew).abs();
                x.copy_from_slice(&xn);
                g.copy_from_slice(&gn);
                f = fnew;
                accepted = true;
                if rel <= 1e-16 * f.abs().max(1.0) && step < 1e-10 {
                    accepted = false;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return LbfgsOutcome {
                x,
                converged: false,
            };
        }
    }
    LbfgsOutcome {
        x,
        converged: false,
    }
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_vertex() {
        let x = golden_min(|x| (x - 0.3) * (x - 0.3), -2.0, 5.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-9);
    }

    #[test]
    fn bisection_grows_bracket() {
        let r = bisect_decreasing(|x| 100.0 - x, 0.0, 1.0, 1e-14);
        assert!((r - 100.0).abs() < 1e-9);
    }

    #[test]
    fn lbfgs_rosenbrock() {
        let out = lbfgs(
            vec![-1.2, 1.0],
            |x, g| {
                let (a, b) = (x[0], x[1]);
                g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
                g[1] = 200.0 * (b - a * a);
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
            },
            500,
            1e-10,
        );
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6);
    }
}
