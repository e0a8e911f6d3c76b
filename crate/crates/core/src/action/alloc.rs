//! Optimal time allocation along a graph path.
//!
//! A path that covers length `Λ_c` on edges of rest cost `V_c` (one entry per
//! distinct potential) and may pause where the rest cost is `m` has action
//!
//! ```text
//! min  Σ_c κ Λ_c² / (2 τ_c) + V_c τ_c + m τ_rest   s.t.  Σ τ = T, τ ≥ 0.
//! ```
//!
//! Stationarity gives `τ_c = Λ_c √κ / √(2 (V_c + λ))` for the multiplier
//! `λ ≥ −m`, found by bisection on the decreasing total duration.

use crate::optim::bisect_decreasing;

/// Length travelled at a given rest cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub length: f64,
    pub rest_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub action: f64,
    /// Durations per segment, in input order.
    pub durations: Vec<f64>,
    pub rest: f64,
    pub multiplier: f64,
}

/// Minimises the action of a path with the given segments over horizon `t`.
/// `kinetic` is the factor `κ` in front of `½ v²` (1 for the plain speed law).
pub fn allocate(segments: &[Segment], rest_cost: f64, t: f64, kinetic: f64) -> Allocation {
    let active: Vec<Segment> = segments.iter().copied().filter(|s| s.length > 0.0).collect();
    if active.is_empty() {
        return Allocation {
            action: rest_cost * t,
            durations: vec![0.0; segments.len()],
            rest: t,
            multiplier: -rest_cost,
        };
    }
    let vmin = active.iter().map(|s| s.rest_cost).fold(f64::INFINITY, f64::min);
    let m = rest_cost.min(vmin);
    if active.len() == 1 && m >= vmin {
        let s = active[0];
        let tau = t;
        let durations = segments
            .iter()
            .map(|x| if x.length > 0.0 { tau } else { 0.0 })
            .collect();
        return Allocation {
            action: kinetic * s.length * s.length / (2.0 * t) + s.rest_cost * t,
            durations,
            rest: 0.0,
            multiplier: kinetic * s.length * s.length / (2.0 * t * t) - s.rest_cost,
        };
    }
    let duration = |lam: f64| -> f64 {
        active
            .iter()
            .map(|s| s.length * (kinetic / (2.0 * (s.rest_cost + lam))).sqrt())
            .sum()
    };
    let lam = if m < vmin && duration(-m) <= t {
        -m
    } else {
        let lo = -m;
        // Smallest λ with all denominators positive.
        let start = lo + (1e-9f64).max(1e-9 * lo.abs());
        bisect_decreasing(|l| duration(l) - t, lo, start.max(lo + 1e-300), 1e-14)
    };
    let mut action = 0.0;
    let mut used = 0.0;
    let durations: Vec<f64> = segments
        .iter()
        .map(|s| {
            if s.length > 0.0 {
                let tau = s.length * (kinetic / (2.0 * (s.rest_cost + lam))).sqrt();
                action += kinetic * s.length * s.length / (2.0 * tau) + s.rest_cost * tau;
                used += tau;
                tau
            } else {
                0.0
            }
        })
        .collect();
    let rest = if lam == -m { (t - used).max(0.0) } else { 0.0 };
    action += m * rest;
    Allocation {
        action,
        durations,
        rest,
        multiplier: lam,
    }
}

/// Merges segments with equal rest cost.
pub fn merge(segments: &[Segment]) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    for s in segments {
        match out.iter_mut().find(|o| o.rest_cost == s.rest_cost) {
            Some(o) => o.length += s.length,
            None => out.push(*s),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn seg(length: f64, rest_cost: f64) -> Segment {
        Segment { length, rest_cost }
    }

    #[test]
    fn single_class_closed_form() {
        // Two turns of a loop of length 2 in unit time with V = 0.5.
        let a = allocate(&[seg(4.0, 0.5)], 0.5, 1.0, 1.0);
        assert_abs_diff_eq!(a.action, 8.5, epsilon = 1e-12);
    }

    #[test]
    fn matches_discretised_oracle() {
        // Two classes plus a cheap resting edge; brute force over τ₁ on a fine
        // grid, τ₂ = T − τ₁ − rest with the rest chosen optimally.
        let segs = [seg(1.0, 0.3), seg(2.0, 1.0)];
        let t = 3.0;
        let a = allocate(&segs, -0.2, t, 1.0);
        let mut best = f64::INFINITY;
        let n = 1500;
        for i in 1..n {
            for j in 1..(n - i) {
                let t1 = t * i as f64 / n as f64;
                let t2 = t * j as f64 / n as f64;
                let r = t - t1 - t2;
                let c = 0.5 / t1 + 0.3 * t1 + 2.0 / t2 + t2 - 0.2 * r;
                best = best.min(c);
            }
        }
        assert!(a.action <= best + 1e-12);
        assert!(best - a.action < 1e-3);
        assert!(a.rest > 0.0);
    }

    #[test]
    fn no_rest_when_rest_is_expensive() {
        let a = allocate(&[seg(1.0, 0.0), seg(1.0, 2.0)], 0.0, 10.0, 1.0);
        assert_eq!(a.rest, 0.0);
        assert_abs_diff_eq!(a.durations.iter().sum::<f64>(), 10.0, epsilon = 1e-9);
    }

    #[test]
    fn empty_path_rests() {
        let a = allocate(&[], 0.7, 2.0, 1.0);
        assert_abs_diff_eq!(a.action, 1.4);
    }

    #[test]
    fn kinetic_scaling_is_a_time_change() {
        let segs = [seg(1.5, 0.2), seg(0.5, -0.1)];
        let eps: f64 = 0.125;
        let t = 0.75;
        let slow = allocate(&segs, -0.3, t / eps, 1.0).action * eps;
        let fast = allocate(&segs, -0.3, t, eps * eps).action;
        assert_abs_diff_eq!(slow, fast, epsilon = 1e-11);
    }
}
