//! Weighted least squares used by the slope, extrapolation and exponent fits.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug)]
pub struct LeastSquares {
    pub coef: Vec<f64>,
    /// `(Aᵀ W A)^{-1}`; multiply by a variance estimate for a covariance.
    pub unscaled_cov: Vec<Vec<f64>>,
    /// Weighted residual sum of squares.
    pub rss: f64,
    pub dof: usize,
    pub r_squared: f64,
}

impl LeastSquares {
    /// Standard error of coefficient `i` from the residual scatter.
    pub fn std_error(&self, i: usize) -> f64 {
        let s2 = if self.dof > 0 { self.rss / self.dof as f64 } else { 0.0 };
        (s2 * self.unscaled_cov[i][i]).sqrt()
    }

    /// Standard error of coefficient `i` when the weights are exact inverse variances.
    pub fn weighted_error(&self, i: usize) -> f64 {
        self.unscaled_cov[i][i].sqrt()
    }
}

/// Minimize `Σ w_i (y_i - Σ_j a_ij c_j)²`. Rows of `a` are observations.
pub fn least_squares(a: &[Vec<f64>], y: &[f64], w: Option<&[f64]>) -> LeastSquares {
    let m = a.len();
    let p = a.first().map_or(0, |r| r.len());
    assert!(m >= p && p > 0, "need at least as many observations as parameters");
    let sw: Vec<f64> = (0..m).map(|i| w.map_or(1.0, |w| w[i].sqrt())).collect();
    let aw = DMatrix::from_fn(m, p, |i, j| a[i][j] * sw[i]);
    let bw = DVector::from_fn(m, |i, _| y[i] * sw[i]);
    let qr = aw.clone().qr();
    let r = qr.r();
    let qtb = qr.q().transpose() * &bw;
    let coef = r.solve_upper_triangular(&qtb).unwrap_or_else(|| DVector::from_element(p, f64::NAN));
    let rinv = r.try_inverse().unwrap_or_else(|| DMatrix::from_element(p, p, f64::NAN));
    let cov = &rinv * rinv.transpose();
    let rss = (&bw - &aw * &coef).norm_squared();
    let wsum: f64 = sw.iter().map(|s| s * s).sum();
    let mean = (0..m).map(|i| sw[i] * sw[i] * y[i]).sum::<f64>() / wsum;
    let tss: f64 = (0..m).map(|i| sw[i] * sw[i] * (y[i] - mean).powi(2)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    LeastSquares {
        coef: coef.iter().copied().collect(),
        unscaled_cov: (0..p).map(|i| (0..p).map(|j| cov[(i, j)]).collect()).collect(),
        rss,
        dof: m - p,
        r_squared,
    }
}

/// Ordinary straight-line fit `y ≈ c0 + c1 x`.
pub fn line_fit(x: &[f64], y: &[f64]) -> LeastSquares {
    let a: Vec<Vec<f64>> = x.iter().map(|&x| vec![1.0, x]).collect();
    least_squares(&a, y, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_quadratic() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|x| 1.5 - 2.0 * x + 0.25 * x * x).collect();
        let a: Vec<Vec<f64>> = x.iter().map(|&x| vec![1.0, x, x * x]).collect();
        let f = least_squares(&a, &y, None);
        assert!((f.coef[0] - 1.5).abs() < 1e-12);
        assert!((f.coef[1] + 2.0).abs() < 1e-12);
        assert!((f.coef[2] - 0.25).abs() < 1e-12);
        assert!(f.rss < 1e-20);
    }

    #[test]
    fn line_covariance_matches_closed_form() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [0.1, 0.9, 2.1, 2.9];
        let f = line_fit(&x, &y);
        // Var(slope) = σ²/Σ(x-x̄)²
        let sxx = 5.0;
        assert!((f.unscaled_cov[1][1] - 1.0 / sxx).abs() < 1e-14);
    }
}
