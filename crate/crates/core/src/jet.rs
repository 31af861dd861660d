//! Truncated Taylor series in one variable, used to differentiate radial
//! profiles exactly (to rounding) up to a fixed order.
//!
//! `Jet<N>` stores `f(x0 + h) = Σ_{j<N} c_j h^j`; `c_j = f^{(j)}(x0)/j!`.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<const N: usize> {
    pub c: [f64; N],
}

impl<const N: usize> Jet<N> {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        Jet { c }
    }

    /// The identity function expanded at `x0`.
    pub fn variable(x0: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = x0;
        if N > 1 {
            c[1] = 1.0;
        }
        Jet { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `j`-th derivative at the expansion point.
    pub fn derivative_value(&self, j: usize) -> f64 {
        self.c[j] * (1..=j).map(|i| i as f64).product::<f64>()
    }

    /// Series of `f'`; the top coefficient becomes zero (unknown).
    pub fn differentiate(&self) -> Self {
        let mut c = [0.0; N];
        for j in 0..N - 1 {
            c[j] = (j + 1) as f64 * self.c[j + 1];
        }
        Jet { c }
    }

    pub fn scale(&self, s: f64) -> Self {
        Jet { c: self.c.map(|v| v * s) }
    }

    pub fn recip(&self) -> Self {
        Self::constant(1.0) / *self
    }

    /// `f^α` for `f(x0) > 0`.
    pub fn powf(&self, alpha: f64) -> Self {
        let f = &self.c;
        let mut g = [0.0; N];
        g[0] = f[0].powf(alpha);
        for m in 1..N {
            let s: f64 = (1..=m).map(|j| ((alpha + 1.0) * j as f64 - m as f64) * f[j] * g[m - j]).sum();
            g[m] = s / (m as f64 * f[0]);
        }
        Jet { c: g }
    }

    pub fn powi(&self, e: u32) -> Self {
        (0..e).fold(Self::constant(1.0), |acc, _| acc * *self)
    }

    pub fn exp(&self) -> Self {
        let f = &self.c;
        let mut g = [0.0; N];
        g[0] = f[0].exp();
        for m in 1..N {
            let s: f64 = (1..=m).map(|j| j as f64 * f[j] * g[m - j]).sum();
            g[m] = s / m as f64;
        }
        Jet { c: g }
    }

    pub fn ln(&self) -> Self {
        let f = &self.c;
        let mut g = [0.0; N];
        g[0] = f[0].ln();
        for m in 1..N {
            let s: f64 = (1..m).map(|j| j as f64 * g[j] * f[m - j]).sum();
            g[m] = (f[m] - s / m as f64) / f[0];
        }
        Jet { c: g }
    }

    pub fn sin_cos(&self) -> (Self, Self) {
        let f = &self.c;
        let mut s = [0.0; N];
        let mut c = [0.0; N];
        s[0] = f[0].sin();
        c[0] = f[0].cos();
        for m in 1..N {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for j in 1..=m {
                ss += j as f64 * f[j] * c[m - j];
                cc += j as f64 * f[j] * s[m - j];
            }
            s[m] = ss / m as f64;
            c[m] = -cc / m as f64;
        }
        (Jet { c: s }, Jet { c })
    }

    pub fn tan(&self) -> Self {
        let (s, c) = self.sin_cos();
        s / c
    }

    pub fn atan(&self) -> Self {
        // atan' = f'/(1+f²), integrated term by term
        let d = self.differentiate() / (Self::constant(1.0) + *self * *self);
        let mut g = [0.0; N];
        g[0] = self.c[0].atan();
        for m in 1..N {
            g[m] = d.c[m - 1] / m as f64;
        }
        Jet { c: g }
    }

    /// `Σ_j coef[j] f^j` by Horner.
    pub fn polynomial(&self, coef: &[f64]) -> Self {
        coef.iter().rev().fold(Self::constant(0.0), |acc, &a| acc * *self + Self::constant(a))
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(o.c) {
            *a += b;
        }
        Jet { c }
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        Jet { c: self.c.map(|v| -v) }
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut c = [0.0; N];
        for i in 0..N {
            for j in 0..N - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet { c }
    }
}

impl<const N: usize> Div for Jet<N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let mut q = [0.0; N];
        for m in 0..N {
            let s: f64 = (1..=m).map(|j| o.c[j] * q[m - j]).sum();
            q[m] = (self.c[m] - s) / o.c[0];
        }
        Jet { c: q }
    }
}

impl<const N: usize> Add<f64> for Jet<N> {
    type Output = Self;
    fn add(mut self, v: f64) -> Self {
        self.c[0] += v;
        self
    }
}

impl<const N: usize> Mul<f64> for Jet<N> {
    type Output = Self;
    fn mul(self, v: f64) -> Self {
        self.scale(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type J = Jet<7>;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn exp_of_log_is_identity() {
        let x = J::variable(1.7);
        let y = x.ln().exp();
        for j in 0..7 {
            assert!(close(y.c[j], x.c[j]), "{j}");
        }
    }

    #[test]
    fn power_derivatives() {
        // d^j/dx^j x^{-5/2} at x = 2
        let x = J::variable(2.0);
        let y = x.powf(-2.5);
        let mut falling = 1.0;
        for j in 0..7 {
            let want = falling * 2f64.powf(-2.5 - j as f64);
            assert!(close(y.derivative_value(j), want), "{j}");
            falling *= -2.5 - j as f64;
        }
    }

    #[test]
    fn trig_identities() {
        let x = J::variable(0.4) * 1.3;
        let (s, c) = x.sin_cos();
        let one = s * s + c * c;
        assert!(close(one.c[0], 1.0));
        for j in 1..7 {
            assert!(one.c[j].abs() < 1e-13);
        }
        let back = x.tan().atan();
        for j in 0..7 {
            assert!(close(back.c[j], x.c[j]), "{j}");
        }
    }

    #[test]
    fn quotient_and_polynomial() {
        let x = J::variable(0.3);
        let p = x.polynomial(&[1.0, -2.0, 0.5]);
        let q = p / p;
        assert!(close(q.c[0], 1.0));
        assert!(q.c[1..].iter().all(|v| v.abs() < 1e-14));
        assert!(close(p.derivative_value(2), 1.0));
        assert!(close(x.powi(3).derivative_value(3), 6.0));
    }
}
