//! Direct minimization of
//! `J_α(u) = (∫(Δ_g^{k/2}u)² + (α^{2k} + B)∫u²) / (∫|u|^{2⋆})^{2/2⋆}`
//! over radial splines supported in a geodesic ball. Any value returned is
//! the quotient of an admissible function, hence an upper bound for `λ_α`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;

use crate::constants::{self, DimensionPair};
use crate::error::{Error, Result};
use crate::fit;
use crate::geometry::{self, ModelManifold, RadialMetricProfile};
use crate::jet::Jet;
use crate::quad::{self, QuadOptions};
use crate::quotient::TestFunctionFamily;

const ORDER: usize = 8;
type J = Jet<ORDER>;

/// Splines of degree `k+1` in `s = r²` on `[0, R]`, with the last `k` basis
/// functions removed so that `u` and its first `k-1` derivatives vanish at `R`.
#[derive(Clone, Debug, Serialize)]
pub struct RadialSpline {
    /// Knot vector in `s`, clamped at both ends.
    knots: Vec<f64>,
    degree: usize,
    dim: usize,
    radius: f64,
}

impl RadialSpline {
    /// `intervals` spans with breakpoints `r_j = R (j/intervals)^grading`.
    pub fn graded(radius: f64, intervals: usize, degree: usize, drop_end: usize, grading: f64) -> Self {
        let mut knots = vec![0.0; degree + 1];
        for j in 1..intervals {
            let r = radius * (j as f64 / intervals as f64).powf(grading);
            knots.push(r * r);
        }
        knots.extend(std::iter::repeat_n(radius * radius, degree + 1));
        let full = knots.len() - degree - 1;
        RadialSpline { knots, degree, dim: full - drop_end, radius }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Breakpoints in `r`.
    pub fn breaks(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.knots.iter().map(|s| s.sqrt()).collect();
        b.dedup();
        b
    }

    /// Index of the first nonzero basis function and the `degree+1` values.
    fn basis(&self, r: J) -> (usize, Vec<J>) {
        let s = r * r;
        let sv = s.value();
        let p = self.degree;
        let last = self.knots.len() - p - 2;
        let mut span = p;
        while span < last && sv >= self.knots[span + 1] {
            span += 1;
        }
        let t = &self.knots;
        let mut n = vec![J::constant(0.0); p + 1];
        let mut left = vec![J::constant(0.0); p + 1];
        let mut right = vec![J::constant(0.0); p + 1];
        n[0] = J::constant(1.0);
        for j in 1..=p {
            left[j] = s + (-t[span + 1 - j]);
            right[j] = -s + t[span + j];
            let mut saved = J::constant(0.0);
            for r in 0..j {
                let denom = t[span + r + 1] - t[span + 1 + r - j];
                let temp = n[r].scale(1.0 / denom);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        (span - p, n)
    }

    pub fn eval_jet(&self, coef: &[f64], r: f64) -> J {
        let (first, vals) = self.basis(J::variable(r));
        let mut out = J::constant(0.0);
        for (i, v) in vals.into_iter().enumerate() {
            if let Some(c) = coef.get(first + i) {
                out = out + v.scale(*c);
            }
        }
        out
    }

    pub fn eval(&self, coef: &[f64], r: f64) -> f64 {
        if r >= self.radius {
            return 0.0;
        }
        self.eval_jet(coef, r).value()
    }
}

/// `Δ^{k/2} f` or `∂_r Δ^{(k-1)/2} f`, the quantity whose square is the energy density.
fn half_power(profile: &RadialMetricProfile, k: u32, r: f64, f: J) -> f64 {
    let rj = J::variable(r);
    let mut f = f;
    for _ in 0..k / 2 {
        f = profile.laplacian(rj, f);
    }
    if k % 2 == 1 {
        f.c[1]
    } else {
        f.c[0]
    }
}

struct Assembly {
    energy: Vec<Vec<f64>>,
    l2: Vec<Vec<f64>>,
    /// Quadrature nodes: weight·volume density and basis values.
    nodes: Vec<(f64, usize, Vec<f64>)>,
}

fn assemble(space: &RadialSpline, profile: &RadialMetricProfile, k: u32) -> Assembly {
    let dim = space.dim;
    let mut energy = vec![vec![0.0; dim]; dim];
    let mut l2 = vec![vec![0.0; dim]; dim];
    let mut nodes = Vec::new();
    let (gx, gw) = quad::gauss_legendre(16);
    for w in space.breaks().windows(2) {
        let (a, b) = (w[0], w[1]);
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        for (x, wt) in gx.iter().zip(&gw) {
            let r = mid + half * x;
            let weight = wt * half * profile.volume_density(r);
            let (first, vals) = space.basis(J::variable(r));
            let idx: Vec<usize> = (0..vals.len()).filter(|i| first + i < dim).collect();
            let dens: Vec<f64> = idx.iter().map(|&i| half_power(profile, k, r, vals[i])).collect();
            let v: Vec<f64> = idx.iter().map(|&i| vals[i].value()).collect();
            for (a_i, &i) in idx.iter().enumerate() {
                for (a_j, &j) in idx.iter().enumerate() {
                    energy[first + i][first + j] += weight * dens[a_i] * dens[a_j];
                    l2[first + i][first + j] += weight * v[a_i] * v[a_j];
                }
            }
            nodes.push((weight, first, v));
        }
    }
    Assembly { energy, l2, nodes }
}

fn quad_form(m: &[Vec<f64>], c: &[f64]) -> f64 {
    m.iter().zip(c).map(|(row, ci)| ci * row.iter().zip(c).map(|(a, b)| a * b).sum::<f64>()).sum()
}

fn mat_vec(m: &[Vec<f64>], c: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(c).map(|(a, b)| a * b).sum()).collect()
}

/// `∫|u|^{2⋆}` and its gradient in the coefficients.
fn critical_mass(asm: &Assembly, c: &[f64], crit: f64) -> (f64, Vec<f64>) {
    let mut total = 0.0;
    let mut grad = vec![0.0; c.len()];
    for (w, first, v) in &asm.nodes {
        let u: f64 = v.iter().enumerate().map(|(i, b)| b * c[first + i]).sum();
        total += w * u.abs().powf(crit);
        let d = w * crit * u.abs().powf(crit - 2.0) * u;
        for (i, b) in v.iter().enumerate() {
            grad[first + i] += d * b;
        }
    }
    (total, grad)
}

/// Quotient evaluator for a fixed space and operator.
pub struct RayleighProblem {
    space: RadialSpline,
    profile: RadialMetricProfile,
    pair: DimensionPair,
    zeroth: f64,
    crit: f64,
    hessian: Vec<Vec<f64>>,
    factor: Cholesky<f64, Dyn>,
    asm: Assembly,
}

impl RayleighProblem {
    pub fn new(m: &ModelManifold, d: DimensionPair, alpha: f64, b: f64, space: RadialSpline) -> Result<Self> {
        m.validate()?;
        if m.dim() != d.n() {
            return Err(Error::Input(format!("manifold has dimension {}, pair is {d}", m.dim())));
        }
        if alpha <= 0.0 || b < 0.0 {
            return Err(Error::Input(format!("need α > 0 and B >= 0, got α={alpha}, B={b}")));
        }
        let profile = geometry::radial_profile(m);
        if space.radius > profile.validity_radius {
            return Err(Error::Input("spline support exceeds the validity radius".into()));
        }
        let zeroth = alpha.powi(2 * d.k() as i32) + b;
        let asm = assemble(&space, &profile, d.k());
        let hessian: Vec<Vec<f64>> = asm
            .energy
            .iter()
            .zip(&asm.l2)
            .map(|(e, l)| e.iter().zip(l).map(|(a, b)| a + zeroth * b).collect())
            .collect();
        let dim = hessian.len();
        let factor = DMatrix::from_fn(dim, dim, |i, j| hessian[i][j])
            .cholesky()
            .ok_or_else(|| Error::Input("energy matrix is not positive definite".into()))?;
        let crit = 2.0 * d.n() as f64 / d.gap() as f64;
        Ok(RayleighProblem { space, profile, pair: d, zeroth, crit, hessian, factor, asm })
    }

    pub fn space(&self) -> &RadialSpline {
        &self.space
    }

    pub fn quotient(&self, c: &[f64]) -> f64 {
        let (p, _) = critical_mass(&self.asm, c, self.crit);
        quad_form(&self.hessian, c) / p.powf(2.0 / self.crit)
    }

    /// Coefficients interpolating `f` at the Greville-type points `r_i`.
    pub fn project(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let dim = self.space.dim;
        // oversampled least squares on the quadrature nodes
        let rows: Vec<Vec<f64>> = self
            .asm
            .nodes
            .iter()
            .map(|(_, first, v)| {
                let mut row = vec![0.0; dim];
                for (i, b) in v.iter().enumerate() {
                    row[first + i] = *b;
                }
                row
            })
            .collect();
        let rs = self.node_radii();
        let ys: Vec<f64> = rs.iter().map(|&r| f(r)).collect();
        let ws: Vec<f64> = self.asm.nodes.iter().map(|(w, _, _)| *w).collect();
        fit::least_squares(&rows, &ys, Some(&ws)).coef
    }

    fn node_radii(&self) -> Vec<f64> {
        let (gx, _) = quad::gauss_legendre(16);
        let mut out = Vec::new();
        for w in self.space.breaks().windows(2) {
            let (mid, half) = ((w[0] + w[1]) / 2.0, (w[1] - w[0]) / 2.0);
            out.extend(gx.iter().map(|x| mid + half * x));
        }
        out
    }

    /// Independent adaptive re-evaluation of `J` from the spline jets.
    pub fn certify(&self, c: &[f64]) -> (f64, f64) {
        let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-12, max_intervals: 2000 };
        let breaks = self.space.breaks();
        let k = self.pair.k();
        let pr = &self.profile;
        let e = quad::integrate_with_breaks(
            |r| {
                let h = half_power(pr, k, r, self.space.eval_jet(c, r));
                h * h * pr.volume_density(r)
            },
            0.0,
            self.space.radius,
            &breaks,
            opts,
        );
        let l = quad::integrate_with_breaks(
            |r| self.space.eval(c, r).powi(2) * pr.volume_density(r),
            0.0,
            self.space.radius,
            &breaks,
            opts,
        );
        let p = quad::integrate_with_breaks(
            |r| self.space.eval(c, r).abs().powf(self.crit) * pr.volume_density(r),
            0.0,
            self.space.radius,
            &breaks,
            opts,
        );
        let num = e.value + self.zeroth * l.value;
        let q = num / p.value.powf(2.0 / self.crit);
        let rel = (e.error + self.zeroth * l.error) / num + 2.0 / self.crit * p.error / p.value;
        (q, q * rel)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimizeResult {
    /// Certified quotient of the final iterate, an upper bound for `λ_α`.
    pub lambda_est: f64,
    pub lambda_err: f64,
    pub initial: f64,
    pub sharp_level: f64,
    pub iterations: usize,
    pub converged: bool,
    pub coefficients: Vec<f64>,
    /// `(r, u(r))` samples of the normalized minimizer.
    pub profile: Vec<(f64, f64)>,
}

/// Sobolev-gradient descent on `{∫|u|^{2⋆} = 1}`: the gradient of `J` is
/// preconditioned by the quadratic form, a backtracking (Armijo) step is
/// taken, and the iterate is rescaled back onto the constraint.
pub fn minimize_quotient(problem: &RayleighProblem, start: &[f64], max_iter: usize) -> Result<MinimizeResult> {
    let crit = problem.crit;
    let normalize = |c: &[f64]| -> Vec<f64> {
        let (p, _) = critical_mass(&problem.asm, c, crit);
        let s = p.powf(-1.0 / crit);
        c.iter().map(|v| v * s).collect()
    };
    let mut c = normalize(start);
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("starting profile has zero critical mass".into()));
    }
    let initial = problem.quotient(&c);
    let mut j = initial;
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let (p, dp) = critical_mass(&problem.asm, &c, crit);
        let hc = mat_vec(&problem.hessian, &c);
        let e = quad_form(&problem.hessian, &c);
        let scale = p.powf(-2.0 / crit);
        let grad: Vec<f64> = hc
            .iter()
            .zip(&dp)
            .map(|(h, d)| 2.0 * h * scale - (2.0 / crit) * e * scale / p * d)
            .collect();
        let dir: Vec<f64> = problem.factor.solve(&DVector::from_vec(grad.clone())).iter().copied().collect();
        let slope: f64 = grad.iter().zip(&dir).map(|(a, b)| a * b).sum();
        if slope <= 1e-14 * j * j {
            converged = true;
            break;
        }
        let mut t = 0.5 * e / slope;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = c.iter().zip(&dir).map(|(a, b)| a - t * b).collect();
            let jt = problem.quotient(&trial);
            if jt.is_finite() && jt <= j - 1e-4 * t * slope {
                c = normalize(&trial);
                let improvement = j - jt;
                j = jt;
                accepted = true;
                if improvement <= 1e-13 * j {
                    converged = true;
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted || converged {
            converged = true;
            break;
        }
    }
    let (lambda_est, lambda_err) = problem.certify(&c);
    let r_max = problem.space.radius;
    let profile = (0..=200)
        .map(|i| {
            let r = r_max * i as f64 / 200.0;
            (r, problem.space.eval(&c, r))
        })
        .collect();
    Ok(MinimizeResult {
        lambda_est,
        lambda_err,
        initial,
        sharp_level: 1.0 / constants::sharp_constant(problem.pair).value,
        iterations,
        converged,
        coefficients: c,
        profile,
    })
}

/// Spline space of the given dimension on the validity ball, graded toward
/// the center.
pub fn default_space(m: &ModelManifold, d: DimensionPair, dim: usize) -> RadialSpline {
    let radius = geometry::radial_profile(m).validity_radius;
    let degree = d.k() as usize + 1;
    let drop_end = d.k() as usize;
    let intervals = (dim + drop_end).saturating_sub(degree).max(1);
    RadialSpline::graded(radius, intervals, degree, drop_end, 3.0)
}

/// Start from the projection of the `ε`-test function onto the space.
pub fn start_from_test_function(problem: &RayleighProblem, fam: &TestFunctionFamily, eps: f64) -> Vec<f64> {
    problem.project(|r| fam.value(eps, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pair(n: i64, k: i64) -> DimensionPair {
        DimensionPair::new(n, k).unwrap()
    }

    #[test]
    fn spline_partition_of_unity_and_boundary() {
        let sp = RadialSpline::graded(2.0, 10, 3, 0, 2.0);
        let ones = vec![1.0; sp.dim()];
        for r in [0.0, 0.05, 0.7, 1.3, 1.99] {
            assert!((sp.eval(&ones, r) - 1.0).abs() < 1e-13, "r={r}");
        }
        let clamped = RadialSpline::graded(2.0, 10, 3, 2, 2.0);
        let ones = vec![1.0; clamped.dim()];
        let j = clamped.eval_jet(&ones, 2.0 - 1e-9);
        assert!(j.value().abs() < 1e-12 && j.c[1].abs() < 1e-6);
    }

    #[test]
    fn scaling_invariance() {
        let m = ModelManifold::sphere(6, 1.0);
        let d = pair(6, 2);
        let prob = RayleighProblem::new(&m, d, 1.0, 0.0, default_space(&m, d, 30)).unwrap();
        let c: Vec<f64> = (0..prob.space().dim()).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let c3: Vec<f64> = c.iter().map(|v| 3.0 * v).collect();
        let (a, b) = (prob.quotient(&c), prob.quotient(&c3));
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn assembled_quotient_matches_adaptive() {
        let m = ModelManifold::torus(6, 2.0 * PI);
        let d = pair(6, 2);
        let prob = RayleighProblem::new(&m, d, 1.0, 0.5, default_space(&m, d, 25)).unwrap();
        let c: Vec<f64> = (0..prob.space().dim()).map(|i| (-(i as f64) / 5.0).exp()).collect();
        let (q, err) = prob.certify(&c);
        assert!((prob.quotient(&c) - q).abs() < 1e-9 * q, "{} vs {q} ± {err}", prob.quotient(&c));
    }
}

#[cfg(test)]
mod descent_tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_descends_below_sharp_level() {
        let m = ModelManifold::sphere(6, 1.0);
        let d = DimensionPair::new(6, 2).unwrap();
        let fam = TestFunctionFamily::new(&m, d).unwrap();
        let prob = RayleighProblem::new(&m, d, 1.0, 0.0, default_space(&m, d, 40)).unwrap();
        let start = start_from_test_function(&prob, &fam, 0.1);
        let res = minimize_quotient(&prob, &start, 300).unwrap();
        eprintln!("{} -> {} ± {} ({} its, conv {}) sharp {}", res.initial, res.lambda_est, res.lambda_err, res.iterations, res.converged, res.sharp_level);
        assert!(res.lambda_est < res.sharp_level);
        assert!(res.lambda_est <= res.initial * (1.0 + 1e-9));
    }

    #[test]
    fn flat_torus_stays_above_sharp_level() {
        let m = ModelManifold::torus(6, 2.0 * PI);
        let d = DimensionPair::new(6, 2).unwrap();
        let fam = TestFunctionFamily::new(&m, d).unwrap();
        let prob = RayleighProblem::new(&m, d, 1.0, 0.0, default_space(&m, d, 40)).unwrap();
        for eps in [0.05, 0.02] {
            let start = start_from_test_function(&prob, &fam, eps);
            let res = minimize_quotient(&prob, &start, 300).unwrap();
            eprintln!("{} -> {} ± {} ({} its) sharp {}", res.initial, res.lambda_est, res.lambda_err, res.iterations, res.sharp_level);
            assert!(res.lambda_est >= res.sharp_level - 1e-3);
        }
    }
}
