//! Integer linear algebra for subcover maps: Smith diagonalisation, kernel
//! lattices and their covering radii.

use super::Norm;

pub type IntMatrix = Vec<Vec<i64>>;

pub fn identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect()
}

pub fn mat_vec(m: &IntMatrix, v: &[i64]) -> Vec<i64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn mat_vec_f(m: &IntMatrix, v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| *a as f64 * b).sum())
        .collect()
}

/// `vᵀ m` for a real row vector, i.e. the adjoint map.
pub fn vec_mat_f(v: &[f64], m: &IntMatrix) -> Vec<f64> {
    let cols = m.first().map_or(0, Vec::len);
    (0..cols)
        .map(|j| m.iter().zip(v).map(|(row, vi)| row[j] as f64 * vi).sum())
        .collect()
}

/// Diagonalisation `U·A·V = D` with unimodular `U`, `V`.
#[derive(Debug, Clone)]
pub struct Smith {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
}

impl Smith {
    pub fn diagonal(&self) -> Vec<i64> {
        let r = self.d.len().min(self.d.first().map_or(0, Vec::len));
        (0..r).map(|i| self.d[i][i]).collect()
    }
}

pub fn smith(a: &IntMatrix) -> Smith {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut d = a.clone();
    let mut u = identity(rows);
    let mut v = identity(cols);
    for t in 0..rows.min(cols) {
        loop {
            // Smallest non-zero pivot in the trailing block.
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if d[i][j] != 0
                        && best.is_none_or(|(bi, bj)| d[i][j].abs() < d[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                return Smith { u, d, v };
            };
            d.swap(t, pi);
            u.swap(t, pi);
            for row in d.iter_mut() {
                row.swap(t, pj);
            }
            for row in v.iter_mut() {
                row.swap(t, pj);
            }
            let p = d[t][t];
            let mut clean = true;
            for i in (t + 1)..rows {
                let q = d[i][t] / p;
                if q != 0 {
                    for j in 0..cols {
                        d[i][j] -= q * d[t][j];
                    }
                    for j in 0..rows {
                        u[i][j] -= q * u[t][j];
                    }
                }
                clean &= d[i][t] == 0;
            }
            for j in (t + 1)..cols {
                let q = d[t][j] / p;
                if q != 0 {
                    for row in d.iter_mut() {
                        row[j] -= q * row[t];
                    }
                    for row in v.iter_mut() {
                        row[j] -= q * row[t];
                    }
                }
                clean &= d[t][j] == 0;
            }
            if clean {
                break;
            }
        }
    }
    Smith { u, d, v }
}

/// Covering radius of the lattice spanned by `basis` (vectors in `Z^k`)
/// inside its real span.  Exact for rank one; for higher rank the deep hole
/// is located on a grid over the fundamental cell.
pub fn covering_radius(basis: &[Vec<i64>], norm: Norm) -> f64 {
    match basis.len() {
        0 => 0.0,
        1 => {
            let b: Vec<f64> = basis[0].iter().map(|&x| x as f64).collect();
            0.5 * norm.norm(&b)
        }
        r => {
            let k = basis[0].len();
            let res = 24usize;
            let offsets: Vec<Vec<i64>> = cartesian(r, -1, 2);
            let mut worst: f64 = 0.0;
            for cell in cartesian(r, 0, res as i64 - 1) {
                let c: Vec<f64> = cell.iter().map(|&i| i as f64 / res as f64).collect();
                let mut best = f64::INFINITY;
                for off in &offsets {
                    let mut p = vec![0.0; k];
                    for (i, b) in basis.iter().enumerate() {
                        let coef = c[i] - off[i] as f64;
                        for (pj, bj) in p.iter_mut().zip(b) {
                            *pj += coef * *bj as f64;
                        }
                    }
                    best = best.min(norm.norm(&p));
                }
                worst = worst.max(best);
            }
            worst
        }
    }
}

/// All integer vectors of length `r` with entries in `lo..=hi`.
pub fn cartesian(r: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..r {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (lo..=hi).map(move |x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
        let n = b.first().map_or(0, Vec::len);
        a.iter()
            .map(|row| {
                (0..n)
                    .map(|j| row.iter().zip(b).map(|(x, brow)| x * brow[j]).sum())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn smith_reconstructs_diagonal() {
        let a = vec![vec![2, 4, 4], vec![-6, 6, 12]];
        let s = smith(&a);
        assert_eq!(mul(&mul(&s.u, &a), &s.v), s.d);
        for i in 0..2 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(s.d[i][j], 0);
                }
            }
        }
    }

    #[test]
    fn row_sum_map_is_unimodular() {
        let s = smith(&vec![vec![1, 1]]);
        assert_eq!(s.diagonal().iter().map(|d| d.abs()).collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn covering_radius_of_antidiagonal_line() {
        let r = covering_radius(&[vec![1, -1]], Norm::L1);
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn covering_radius_of_square_lattice() {
        // Deep hole of Z² at (½, ½): ℓ∞ distance ½.
        let r = covering_radius(&[vec![1, 0], vec![0, 1]], Norm::LInf);
        assert!((r - 0.5).abs() < 1e-12);
    }
}
