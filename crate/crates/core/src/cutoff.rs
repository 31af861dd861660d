//! Polynomial smooth cutoff: `χ ≡ 1` on `[0, 1]`, `χ ≡ 0` on `[2, ∞)`, and a
//! Bernstein-form step in between that joins with `m` continuous derivatives.

use crate::jet::Jet;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cutoff {
    smoothness: u32,
    binom: [f64; 64],
}

impl Cutoff {
    /// `χ ∈ C^m`. Panics for `m > 30`.
    pub fn new(m: u32) -> Self {
        assert!(m <= 30, "cutoff smoothness {m} too large");
        let deg = 2 * m + 1;
        let mut binom = [0.0; 64];
        binom[0] = 1.0;
        for j in 1..=deg as usize {
            binom[j] = binom[j - 1] * (deg as usize + 1 - j) as f64 / j as f64;
        }
        Cutoff { smoothness: m, binom }
    }

    pub fn smoothness(&self) -> u32 {
        self.smoothness
    }

    /// `Σ_{j<=m} C(2m+1, j) x^j (1-x)^{2m+1-j}` on `x = s - 1 ∈ (0, 1)`.
    pub fn eval_jet<const N: usize>(&self, s: Jet<N>) -> Jet<N> {
        let v = s.value();
        if v <= 1.0 {
            return Jet::constant(1.0);
        }
        if v >= 2.0 {
            return Jet::constant(0.0);
        }
        let m = self.smoothness as usize;
        let deg = 2 * m + 1;
        let x = s + -1.0;
        let y = -x + 1.0;
        // sum whichever half of the Bernstein partition of unity is small, so
        // derivatives near either join carry no cancellation
        let (x, y, flip) = if x.value() < 0.5 { (y, x, true) } else { (x, y, false) };
        let mut xp = vec![Jet::constant(1.0); m + 1];
        for j in 1..=m {
            xp[j] = xp[j - 1] * x;
        }
        let mut yp = y.powi((deg - m) as u32);
        let mut out = Jet::constant(0.0);
        for j in (0..=m).rev() {
            out = out + xp[j] * yp * self.binom[j];
            yp = yp * y;
        }
        if flip {
            -out + 1.0
        } else {
            out
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.eval_jet(Jet::<1>::constant(s)).value()
    }
}
