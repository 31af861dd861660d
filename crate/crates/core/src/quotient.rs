//! Sobolev quotient of the truncated, conformally dressed bubble family on
//! model manifolds, with the `θ_ε` slope fit and the non-validity probe.

use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{self, DimensionPair};
use crate::cutoff::Cutoff;
use crate::error::{Error, Result};
use crate::fit;
use crate::geometry::{self, ConformalGauge, ModelManifold, RadialMetricProfile};
use crate::jet::Jet;
use crate::quad::{self, QuadOptions};
use crate::radial;

/// Jet length: enough for `Δ^{k/2}` or `∂_r Δ^{(k-1)/2}` up to `k = 7`.
const ORDER: usize = 8;
type J = Jet<ORDER>;

pub const QUOTIENT_CUTOFF_SMOOTHNESS: u32 = 6;

/// Geometric grid of `count` points from `start` down to `stop`.
pub fn geometric_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    (0..count)
        .map(|i| start * (stop / start).powf(i as f64 / (count - 1) as f64))
        .collect()
}

/// Eight geometric points over one decade starting at 0.1, or lower when the
/// cutoff radius forces `ε < δ/10`.
pub fn default_eps_grid(delta: f64) -> Vec<f64> {
    let start = (0.099 * delta).min(0.1);
    geometric_grid(start, start / 10.0, 8)
}

/// `u_ε = φ · χ(|y|/δ) · (ε/(ε² + a|y|²))^{(n-2k)/2}` around a point, with `|y|`
/// the flat chart radius of the conformal gauge.
#[derive(Clone, Debug)]
pub struct TestFunctionFamily {
    manifold: ModelManifold,
    pair: DimensionPair,
    center: Vec<f64>,
    delta: f64,
    cutoff: Cutoff,
    gauge: ConformalGauge,
    profile: RadialMetricProfile,
    bubble_scale: f64,
    sharp: f64,
}

impl TestFunctionFamily {
    pub fn new(manifold: &ModelManifold, pair: DimensionPair) -> Result<Self> {
        manifold.validate()?;
        if manifold.dim() != pair.n() {
            return Err(Error::Input(format!("manifold has dimension {}, pair is {pair}", manifold.dim())));
        }
        if pair.k() as usize >= ORDER {
            return Err(Error::Input(format!("k = {} exceeds the supported order", pair.k())));
        }
        let profile = geometry::radial_profile(manifold);
        let gauge = geometry::conformal_dress(manifold, pair);
        // δ is measured in the chart; keep 2δ inside the validity ball
        let delta = chart_of(&gauge, profile.validity_radius) / 4.0;
        Ok(TestFunctionFamily {
            manifold: manifold.clone(),
            pair,
            center: manifold.default_point(),
            delta,
            cutoff: Cutoff::new(QUOTIENT_CUTOFF_SMOOTHNESS),
            gauge,
            profile,
            bubble_scale: constants::bubble_scale(pair).to_f64(),
            sharp: constants::sharp_constant(pair).value,
        })
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    /// Concentration point, in the ambient coordinates of
    /// [`ModelManifold::check_point`].
    pub fn with_center(mut self, center: Vec<f64>) -> Result<Self> {
        self.manifold.check_point(&center)?;
        self.center = center;
        Ok(self)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn with_cutoff(mut self, cutoff: Cutoff) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn manifold(&self) -> &ModelManifold {
        &self.manifold
    }

    pub fn pair(&self) -> DimensionPair {
        self.pair
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `1/K(n,k)`.
    pub fn sharp_level(&self) -> f64 {
        1.0 / self.sharp
    }

    /// Geodesic radius outside which every member vanishes.
    pub fn support_radius(&self) -> f64 {
        self.gauge.geodesic_radius(2.0 * self.delta)
    }

    pub fn jet(&self, eps: f64, r: f64) -> J {
        let y = self.gauge.chart_radius(J::variable(r));
        let phi = self.gauge.factor(y);
        let chi = self.cutoff.eval_jet(y.scale(1.0 / self.delta));
        let half_gap = self.pair.gap() as f64 / 2.0;
        let bubble = ((y * y).scale(self.bubble_scale) + eps * eps).powf(-half_gap).scale(eps.powf(half_gap));
        phi * chi * bubble
    }

    pub fn value(&self, eps: f64, r: f64) -> f64 {
        self.jet(eps, r).value()
    }

    /// `u_ε` at a point of the manifold.
    pub fn value_at(&self, eps: f64, x: &[f64]) -> f64 {
        let r = self.manifold.distance(&self.center, x);
        if r >= self.support_radius() {
            return 0.0;
        }
        self.value(eps, r)
    }

    /// `(Δ_g^{k/2} u)²` for even `k`, `(∂_r Δ_g^{(k-1)/2} u)²` for odd `k`.
    fn energy_density(&self, eps: f64, r: f64) -> f64 {
        let k = self.pair.k();
        let rj = J::variable(r);
        let mut f = self.jet(eps, r);
        for _ in 0..k / 2 {
            f = self.profile.laplacian(rj, f);
        }
        let v = if k % 2 == 1 { f.c[1] } else { f.c[0] };
        v * v
    }

    fn breaks(&self, eps: f64) -> Vec<f64> {
        let mut ys = Vec::new();
        let mut y = eps / 8.0;
        while y < self.delta {
            ys.push(y);
            y *= 2.0;
        }
        ys.extend((0..=8).map(|i| self.delta * (1.0 + i as f64 / 8.0)));
        let mut rs: Vec<f64> = ys.into_iter().map(|y| self.gauge.geodesic_radius(y)).collect();
        rs.insert(0, 0.0);
        rs
    }

    /// `∫ f(r) dv_g` over the support, piece by piece; a failing piece is named.
    fn integrate_radial(&self, eps: f64, what: &str, f: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
        let b = self.breaks(eps);
        let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-13, max_intervals: 400 };
        let mut total: f64 = 0.0;
        let mut err = 0.0;
        for w in b.windows(2) {
            let res = quad::integrate(|r| f(r) * self.profile.volume_density(r), w[0], w[1], opts);
            if !res.converged && res.error > 1e-11 * res.value.abs().max(total.abs()) {
                return Err(Error::Quadrature(format!(
                    "{what} at ε={eps}: annulus [{:.6e}, {:.6e}] error {:e}",
                    w[0], w[1], res.error
                )));
            }
            total += res.value;
            err += res.error;
        }
        Ok((total, err))
    }
}

fn chart_of(gauge: &ConformalGauge, r: f64) -> f64 {
    gauge.chart_radius(Jet::<1>::constant(r)).value()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct QuotientSample {
    pub eps: f64,
    pub q: f64,
    pub err: f64,
    /// `∫ u Δ^k u`.
    pub energy: f64,
    /// `∫ u²`.
    pub l2: f64,
    /// `∫ |u|^{2⋆}`.
    pub critical_mass: f64,
}

/// `Q(ε) = ∫ u(Δ_g^k u + B u) / (∫|u|^{2⋆})^{2/2⋆}`.
pub fn quotient_eval(fam: &TestFunctionFamily, eps: f64, b: f64) -> Result<QuotientSample> {
    if b < 0.0 {
        return Err(Error::Input(format!("B must be nonnegative, got {b}")));
    }
    if !(eps > 0.0 && eps < fam.delta / 10.0) {
        return Err(Error::Input(format!("ε = {eps} must lie in (0, δ/10) with δ = {}", fam.delta)));
    }
    let crit = num_traits::ToPrimitive::to_f64(&constants::critical_exponent(fam.pair)).unwrap();
    let (energy, e_err) = fam.integrate_radial(eps, "energy", |r| fam.energy_density(eps, r))?;
    let (l2, l_err) = fam.integrate_radial(eps, "L² mass", |r| fam.value(eps, r).powi(2))?;
    let (mass, m_err) = fam.integrate_radial(eps, "critical mass", |r| fam.value(eps, r).abs().powf(crit))?;
    let num = energy + b * l2;
    let den = mass.powf(2.0 / crit);
    let q = num / den;
    let rel = (e_err + b * l_err) / num + 2.0 / crit * m_err / mass;
    Ok(QuotientSample { eps, q, err: q * rel + q * f64::EPSILON * 16.0, energy, l2, critical_mass: mass })
}

/// Which expansion of `Q(ε)` applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SlopeRegime {
    /// `n > 2k + 2`, `θ_ε = ε²`.
    Quadratic,
    /// `n = 2k + 2`, `θ_ε = ε² ln(1/ε)`.
    Logarithmic,
    /// `n = 2k + 1`: no curvature term at leading order.
    Odd,
}

pub fn slope_regime(d: DimensionPair) -> SlopeRegime {
    match d.gap() {
        1 => SlopeRegime::Odd,
        2 => SlopeRegime::Logarithmic,
        _ => SlopeRegime::Quadratic,
    }
}

pub fn theta_eps(d: DimensionPair, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Input(format!("ε must lie in (0, 1), got {eps}")));
    }
    match slope_regime(d) {
        SlopeRegime::Quadratic => Ok(eps * eps),
        SlopeRegime::Logarithmic => Ok(eps * eps * (1.0 / eps).ln()),
        SlopeRegime::Odd => Err(Error::Input(format!("θ_ε is not defined for n = 2k+1, got {d}"))),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuotientCurve {
    pub pair: DimensionPair,
    pub b: f64,
    pub samples: Vec<QuotientSample>,
}

/// Evaluate `Q` on a grid concurrently; samples come back sorted by decreasing ε.
pub fn quotient_curve(fam: &TestFunctionFamily, eps_grid: &[f64], b: f64) -> Result<QuotientCurve> {
    let mut samples: Vec<QuotientSample> =
        eps_grid.par_iter().map(|&e| quotient_eval(fam, e, b)).collect::<Result<_>>()?;
    samples.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    Ok(QuotientCurve { pair: fam.pair, b, samples })
}

#[derive(Clone, Debug, Serialize)]
pub struct SlopeFit {
    pub intercept: f64,
    pub intercept_err: f64,
    pub slope: f64,
    pub slope_err: f64,
    /// Coefficient of the `θ^{3/2}` nuisance term.
    pub nuisance: f64,
    /// Root-mean-square weighted residual.
    pub residual: f64,
    pub regime: SlopeRegime,
}

/// Weighted regression of `Q` on `[1, θ_ε, θ_ε^{3/2}, ε^{n-2k}, ε^{n-2k+2}]`
/// with weights `1/err²`. The last two columns absorb the flat cutoff
/// remainder and are dropped when they coincide with `θ` or `θ^{3/2}`.
/// Standard errors are inflated by the residual scatter when the model does
/// not fit to within the stated errors.
pub fn slope_fit(curve: &QuotientCurve) -> Result<SlopeFit> {
    if curve.samples.len() < 6 {
        return Err(Error::Input(format!("slope fit needs at least 6 samples, got {}", curve.samples.len())));
    }
    let regime = slope_regime(curve.pair);
    let gap = curve.pair.gap() as i32;
    let remainder_powers: Vec<i32> = [gap, gap + 2]
        .into_iter()
        .filter(|&p| regime != SlopeRegime::Quadratic || (p != 2 && p != 3))
        .collect();
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    for s in &curve.samples {
        let th = theta_eps(curve.pair, s.eps)?;
        let mut row = vec![1.0, th, th.powf(1.5)];
        row.extend(remainder_powers.iter().map(|&p| s.eps.powi(p)));
        rows.push(row);
        ys.push(s.q);
        ws.push(1.0 / (s.err * s.err));
    }
    let f = fit::least_squares(&rows, &ys, Some(&ws));
    let birge = if f.dof > 0 { (f.rss / f.dof as f64).sqrt().max(1.0) } else { 1.0 };
    Ok(SlopeFit {
        intercept: f.coef[0],
        intercept_err: f.weighted_error(0) * birge,
        slope: f.coef[1],
        slope_err: f.weighted_error(1) * birge,
        nuisance: f.coef[2],
        residual: (f.rss / rows.len() as f64).sqrt(),
        regime,
    })
}

/// `D_{n,k} = C_{n,k}/(∫U^{2⋆})^{2/2⋆}` with `C_{n,k}` the half-Laplacian energy.
pub fn slope_constant(d: DimensionPair) -> Result<f64> {
    let energy = radial::half_laplacian_energy(d)?.value.to_f64();
    let mass = constants::bubble_critical_mass(d).to_f64();
    let crit = 2.0 * d.n() as f64 / d.gap() as f64;
    Ok(energy / mass.powf(2.0 / crit))
}

/// `-c_{n,k} R_g D_{n,k}`, the predicted coefficient of `θ_ε` in `Q(ε)`.
pub fn predicted_slope(m: &ModelManifold, d: DimensionPair) -> Result<f64> {
    if d.k() < 2 || d.gap() < 2 {
        return Err(Error::Input(format!("predicted slope needs k > 1 and n >= 2k+2, got {d}")));
    }
    let c = num_traits::ToPrimitive::to_f64(&constants::c_small(d)).unwrap();
    Ok(-c * m.scalar_curvature() * slope_constant(d)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub violated: bool,
    pub witness_eps: Option<f64>,
    /// `1/K - (Q + err)` at the witness, or the largest such value on the grid.
    pub margin: f64,
    pub sharp_level: f64,
    pub samples: Vec<QuotientSample>,
}

/// First ε (largest first) with `Q(ε) + err < 1/K(n,k)`.
pub fn probe_iopt(fam: &TestFunctionFamily, b: f64, eps_grid: &[f64]) -> Result<ProbeReport> {
    if b <= 0.0 {
        return Err(Error::Input(
            "B must be positive: with B = 0 constants already violate the inequality".into(),
        ));
    }
    let curve = quotient_curve(fam, eps_grid, b)?;
    let level = fam.sharp_level();
    let witness = curve.samples.iter().find(|s| s.q + s.err < level);
    let margin = match witness {
        Some(s) => level - (s.q + s.err),
        None => curve.samples.iter().map(|s| level - (s.q + s.err)).fold(f64::NEG_INFINITY, f64::max),
    };
    Ok(ProbeReport {
        violated: witness.is_some(),
        witness_eps: witness.map(|s| s.eps),
        margin,
        sharp_level: level,
        samples: curve.samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pair(n: i64, k: i64) -> DimensionPair {
        DimensionPair::new(n, k).unwrap()
    }

    #[test]
    fn theta_regimes() {
        assert_eq!(theta_eps(pair(8, 2), 0.1).unwrap(), 0.1 * 0.1);
        assert!((theta_eps(pair(6, 2), 0.1).unwrap() - 0.01 * 10f64.ln()).abs() < 1e-16);
        assert!(theta_eps(pair(5, 2), 0.1).is_err());
        assert_eq!(slope_regime(pair(5, 2)), SlopeRegime::Odd);
    }

    #[test]
    fn center_value_and_support() {
        let fam = TestFunctionFamily::new(&ModelManifold::sphere(6, 1.0), pair(6, 2)).unwrap();
        let eps = 0.02;
        assert!((fam.value(eps, 0.0) - eps.powf(-1.0)).abs() < 1e-12 * eps.powf(-1.0));
        let out = fam.support_radius();
        assert_eq!(fam.value(eps, out * 1.0001), 0.0);
        assert!(fam.value(eps, out * 0.99) > 0.0);
    }

    #[test]
    fn synthetic_slope_recovery() {
        let d = pair(8, 2);
        let level = 1.0 / constants::sharp_constant(d).value;
        let samples = default_eps_grid(1.0)
            .into_iter()
            .map(|eps| {
                let th = eps * eps;
                let q = level - 3.0 * th + 0.1 * th.powf(1.5);
                QuotientSample { eps, q, err: 1e-12, energy: 0.0, l2: 0.0, critical_mass: 0.0 }
            })
            .collect();
        let f = slope_fit(&QuotientCurve { pair: d, b: 0.0, samples }).unwrap();
        assert!((f.slope + 3.0).abs() < 0.06);
        assert!(((f.intercept - level) / level).abs() < 1e-10);
    }

    #[test]
    fn slope_predictions() {
        let torus = ModelManifold::torus(8, 2.0 * PI);
        assert_eq!(predicted_slope(&torus, pair(8, 2)).unwrap(), 0.0);
        let s6 = predicted_slope(&ModelManifold::sphere(6, 1.0), pair(6, 2)).unwrap();
        assert!((s6 + 10.0 * slope_constant(pair(6, 2)).unwrap()).abs() < 1e-12);
        assert!(s6 < 0.0);
        assert!(predicted_slope(&ModelManifold::sphere(5, 1.0), pair(5, 2)).is_err());
    }

    #[test]
    fn rejects_zero_b() {
        let fam = TestFunctionFamily::new(&ModelManifold::sphere(6, 1.0), pair(6, 2)).unwrap();
        assert!(matches!(probe_iopt(&fam, 0.0, &[0.01]), Err(Error::Input(_))));
    }

    #[test]
    fn relocating_the_center() {
        let m = ModelManifold::sphere(6, 1.0);
        let d = pair(6, 2);
        let north = TestFunctionFamily::new(&m, d).unwrap();
        let c = [0.3, -0.2, 0.5, 0.1, -0.4, 0.6, 0.2];
        let norm = c.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
        let other = north.clone().with_center(c.iter().map(|v| v / norm).collect()).unwrap();
        // points at geodesic distance t along a great circle from each center
        let along = |base: &[f64], t: f64| -> Vec<f64> {
            let mut dir = vec![0.0; 7];
            dir[0] = 1.0;
            let dot: f64 = dir.iter().zip(base).map(|(a, b)| a * b).sum();
            let mut tang: Vec<f64> = dir.iter().zip(base).map(|(a, b)| a - dot * b).collect();
            let tn = tang.iter().map(|v| v * v).sum::<f64>().sqrt();
            tang.iter_mut().for_each(|v| *v /= tn);
            base.iter().zip(&tang).map(|(b, v)| b * t.cos() + v * t.sin()).collect()
        };
        for t in [0.0, 0.01, 0.2, 1.3, 2.9] {
            let a = north.value_at(0.03, &along(north.center(), t));
            let b = other.value_at(0.03, &along(other.center(), t));
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "t={t}: {a} vs {b}");
        }
        assert!(other.clone().with_center(vec![1.0; 7]).is_err());
        let qa = quotient_eval(&north, 0.05, 1.0).unwrap().q;
        let qb = quotient_eval(&other, 0.05, 1.0).unwrap().q;
        assert!((qa - qb).abs() <= 1e-10 * qa);
    }

    #[test]
    fn critical_mass_on_sphere() {
        let d = pair(6, 2);
        let fam = TestFunctionFamily::new(&ModelManifold::sphere(6, 1.0), d).unwrap();
        let exact = constants::bubble_critical_mass(d).to_f64();
        let rel: Vec<f64> = [0.05f64, 0.02]
            .iter()
            .map(|&eps| {
                let s = quotient_eval(&fam, eps, 0.0).unwrap();
                (s.critical_mass - exact).abs() / exact
            })
            .collect();
        // the defect is the mass cut off beyond δ, of order εⁿ
        assert!(rel[0] < 1e-6, "{rel:?}");
        let order = (rel[0] / rel[1]).ln() / 2.5f64.ln();
        assert!((order - 6.0).abs() < 0.3, "order {order}");
    }

    #[test]
    fn flat_energy_integration_by_parts() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let profile = geometry::radial_profile(&ModelManifold::torus(7, 2.0 * PI));
        let bump = Cutoff::new(6);
        for trial in 0..5 {
            let k = 2 + trial % 2;
            let coef: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u = |r: f64| -> J {
                let rj = J::variable(r);
                (rj * rj).polynomial(&coef) * bump.eval_jet(rj.scale(1.2))
            };
            let full = |r: f64| {
                let rj = J::variable(r);
                let mut f = u(r);
                for _ in 0..k {
                    f = profile.laplacian(rj, f);
                }
                f.value() * u(r).value() * profile.volume_density(r)
            };
            let half = |r: f64| {
                let rj = J::variable(r);
                let mut f = u(r);
                for _ in 0..k / 2 {
                    f = profile.laplacian(rj, f);
                }
                let v = if k % 2 == 1 { f.c[1] } else { f.c[0] };
                v * v * profile.volume_density(r)
            };
            let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-13, max_intervals: 400 };
            let breaks = [1.0 / 1.2, 2.0 / 1.2];
            let a = quad::integrate_with_breaks(full, 0.0, 2.0 / 1.2, &breaks, opts).value;
            let b = quad::integrate_with_breaks(half, 0.0, 2.0 / 1.2, &breaks, opts).value;
            assert!((a - b).abs() < 1e-8 * b.abs(), "trial {trial}, k={k}: {a} vs {b}");
        }
    }

    #[test]
    fn violation_margin_grows_with_theta() {
        let d = pair(6, 2);
        let fam = TestFunctionFamily::new(&ModelManifold::sphere(6, 1.0), d).unwrap();
        let curve = quotient_curve(&fam, &default_eps_grid(fam.delta()), 1.0).unwrap();
        let level = fam.sharp_level();
        // samples are sorted by decreasing ε, hence decreasing θ_ε
        let margins: Vec<f64> = curve.samples.iter().map(|s| level - s.q).collect();
        assert!(margins.iter().all(|m| *m > 0.0));
        assert!(margins.windows(2).all(|w| w[0] > w[1]), "{margins:?}");
    }
}
