//! The Hopf-Lax formula `u(h, t) = min_q f(q) + t β((h − q)/t)`.

use serde::{Deserialize, Serialize};

use super::datum::InitialDatum;
use crate::error::{Error, Result};
use crate::mather::Evaluator;
use crate::optim::pattern_search;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfLaxOutcome {
    pub value: f64,
    pub minimizer: Vec<f64>,
    /// Euclidean radius of the certified search ball around `h`.
    pub radius: f64,
}

fn sphere(k: usize, r: f64) -> Vec<Vec<f64>> {
    match k {
        1 => vec![vec![r], vec![-r]],
        _ => (0..256)
            .map(|i| {
                let th = i as f64 * std::f64::consts::TAU / 256.0;
                vec![r * th.cos(), r * th.sin()]
            })
            .collect(),
    }
}

/// Minimises over a ball whose radius follows from convexity of `β` along
/// rays (`β(z) ≥ β(0) + s|z|` beyond a sphere where the slope `s` exceeds the
/// decay rate of `f`), by a grid search followed by compass refinement.
pub fn hopf_lax(
    beta: &dyn Evaluator,
    datum: &InitialDatum,
    h: &[f64],
    t: f64,
) -> Result<HopfLaxOutcome> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::arg(format!("time t = {t} must be positive")));
    }
    let k = beta.dim();
    if h.len() != k || !(1..=2).contains(&k) {
        return Err(Error::arg(format!("point {h:?} does not match β of dimension {k}")));
    }
    datum.validate(k)?;
    let objective = |q: &[f64]| {
        let z: Vec<f64> = h.iter().zip(q).map(|(a, b)| (a - b) / t).collect();
        datum.eval(q) + t * beta.eval(&z)
    };
    let upper = objective(h);
    let b0 = beta.eval(&vec![0.0; k]);

    // Certified radius in q-space.
    let mut r0 = 1.0;
    let mut radius = f64::NAN;
    for _ in 0..60 {
        let m = sphere(k, r0)
            .iter()
            .map(|z| beta.eval(z))
            .fold(f64::INFINITY, f64::min);
        let slope = (m - b0) / r0;
        // value(r) ≥ lower_f(r) + t β(0) + slope · r for r ≥ r0 t.
        let bound = |r: f64| datum.lower_bound_ball(h, r) + t * b0 + slope * r;
        let mut r = r0 * t;
        let mut found = false;
        for _ in 0..80 {
            if bound(r) > upper && bound(2.0 * r) > bound(r) {
                found = true;
                break;
            }
            r *= 2.0;
        }
        if found {
            radius = r;
            break;
        }
        r0 *= 2.0;
    }
    if !radius.is_finite() {
        return Err(Error::Solver("no certified Hopf-Lax search radius".into()));
    }

    let (best, _) = match k {
        1 => {
            let n = 4000;
            (0..=n)
                .map(|i| vec![h[0] - radius + 2.0 * radius * i as f64 / n as f64])
                .map(|q| {
                    let v = objective(&q);
                    (q, v)
                })
                .fold((vec![h[0]], upper), |a, b| if b.1 < a.1 { b } else { a })
        }
        _ => {
            let n = 200;
            let mut acc = (h.to_vec(), upper);
            for i in 0..=n {
                for j in 0..=n {
                    let q = vec![
                        h[0] - radius + 2.0 * radius * i as f64 / n as f64,
                        h[1] - radius + 2.0 * radius * j as f64 / n as f64,
                    ];
                    let v = objective(&q);
                    if v < acc.1 {
                        acc = (q, v);
                    }
                }
            }
            acc
        }
    };
    let spacing = 2.0 * radius / if k == 1 { 4000.0 } else { 200.0 };
    let (q, v) = pattern_search(objective, &best, spacing, 1e-13 * (1.0 + radius));
    Ok(HopfLaxOutcome {
        value: v,
        minimizer: q,
        radius,
    })
}
