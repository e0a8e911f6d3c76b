//! Dense helpers for the 1x1 and 2x2 blocks that appear on tori of dimension
//! one and two.

use std::ops::{Add, Mul, Sub};

pub const MAX_DIM: usize = 2;

pub type Vec2 = [f64; MAX_DIM];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub n: usize,
    pub a: [[f64; MAX_DIM]; MAX_DIM],
}

impl Mat2 {
    pub fn zeros(n: usize) -> Self {
        Mat2 { n, a: [[0.0; 2]; 2] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i][i] = 1.0;
        }
        m
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        Self::identity(n).scale(s)
    }

    pub fn scale(mut self, s: f64) -> Self {
        for row in self.a.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        self
    }

    pub fn transpose(&self) -> Self {
        let mut t = *self;
        t.a[0][1] = self.a[1][0];
        t.a[1][0] = self.a[0][1];
        t
    }

    pub fn det(&self) -> f64 {
        match self.n {
            1 => self.a[0][0],
            _ => self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0],
        }
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let mut inv = Self::zeros(self.n);
        match self.n {
            1 => inv.a[0][0] = 1.0 / d,
            _ => {
                inv.a[0][0] = self.a[1][1] / d;
                inv.a[1][1] = self.a[0][0] / d;
                inv.a[0][1] = -self.a[0][1] / d;
                inv.a[1][0] = -self.a[1][0] / d;
            }
        }
        Some(inv)
    }

    pub fn mul_vec(&self, v: &Vec2) -> Vec2 {
        let mut out = [0.0; 2];
        for i in 0..self.n {
            for j in 0..self.n {
                out[i] += self.a[i][j] * v[j];
            }
        }
        out
    }

    pub fn quad(&self, v: &Vec2) -> f64 {
        dot(self.n, v, &self.mul_vec(v))
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn sym_eigenvalues(&self) -> Vec2 {
        match self.n {
            1 => [self.a[0][0], self.a[0][0]],
            _ => {
                let a = self.a[0][0];
                let d = self.a[1][1];
                let b = 0.5 * (self.a[0][1] + self.a[1][0]);
                let mean = 0.5 * (a + d);
                let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
                [mean - r, mean + r]
            }
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.sym_eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.sym_eigenvalues()[1]
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(mut self, rhs: Mat2) -> Mat2 {
        for i in 0..2 {
            for j in 0..2 {
                self.a[i][j] += rhs.a[i][j];
            }
        }
        self
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(mut self, rhs: Mat2) -> Mat2 {
        for i in 0..2 {
            for j in 0..2 {
                self.a[i][j] -= rhs.a[i][j];
            }
        }
        self
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let mut out = Mat2::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..self.n {
                    out.a[i][j] += self.a[i][k] * rhs.a[k][j];
                }
            }
        }
        out
    }
}

pub fn dot(n: usize, a: &Vec2, b: &Vec2) -> f64 {
    (0..n).map(|i| a[i] * b[i]).sum()
}

pub fn to_vec2(v: &[f64]) -> Vec2 {
    let mut out = [0.0; 2];
    for (o, x) in out.iter_mut().zip(v) {
        *o = *x;
    }
    out
}
