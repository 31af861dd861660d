//! Blow-up regime quantities for the truncated bubble
//! `V(x) = χ(α|x|) U_μ(x)`, `U_μ(x) = (μ/(μ² + a|x|²))^{(n-2k)/2}`:
//! the small quantities `σ`, `θ`, `θ'`, the curvature and `L²` energies
//! with their case tables, the Pohozaev identity and the balance table.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{self, DimensionPair};
use crate::cutoff::Cutoff;
use crate::error::{Error, Result};
use crate::fit;
use crate::geometry::{ModelManifold, RadialMetricProfile};
use crate::green;
use crate::jet::Jet;
use crate::quad::{self, QuadOptions};
use crate::radial::{self, EnergyKind};

const ORDER: usize = 8;
type J = Jet<ORDER>;

/// Smoothness of the cutoff in `V`.
pub const BLOWUP_CUTOFF_SMOOTHNESS: u32 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlowupParams {
    pub alpha: f64,
    pub mu: f64,
    pub tau: f64,
}

/// `min{2, (n-2k)/2}`, halved for `n = 2k+1` where `τ < 1/2` is needed.
pub fn default_tau(d: DimensionPair) -> f64 {
    let t = (d.gap() as f64 / 2.0).min(2.0);
    if d.gap() == 1 {
        t / 2.0
    } else {
        t
    }
}

impl BlowupParams {
    pub fn new(alpha: f64, mu: f64, tau: f64, d: DimensionPair) -> Result<Self> {
        if !(alpha > 0.0 && mu > 0.0 && alpha * mu <= 1.0) {
            return Err(Error::Input(format!("need α, μ > 0 with αμ <= 1, got α={alpha}, μ={mu}")));
        }
        let cap = (d.gap() as f64 / 2.0).min(2.0);
        if !(tau > 0.0 && tau <= cap) {
            return Err(Error::Input(format!("τ = {tau} must lie in (0, {cap}] for {d}")));
        }
        Ok(BlowupParams { alpha, mu, tau })
    }

    pub fn with_default_tau(alpha: f64, mu: f64, d: DimensionPair) -> Result<Self> {
        Self::new(alpha, mu, default_tau(d), d)
    }

    /// `αμ`, the ratio of the bubble scale to the cutoff scale.
    pub fn ratio(&self) -> f64 {
        self.alpha * self.mu
    }
}

/// Position of `n` relative to a case-table threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Above,
    At,
    Below,
}

pub fn branch(n: f64, threshold: f64) -> Branch {
    if n > threshold {
        Branch::Above
    } else if n == threshold {
        Branch::At
    } else {
        Branch::Below
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegimeValue {
    pub value: f64,
    /// `n` compared against this threshold selects the row.
    pub threshold: f64,
    pub branch: Branch,
}

fn log_inv(x: f64) -> f64 {
    (1.0 / x).ln()
}

/// `(αμ)²`, `(αμ)² ln(1/αμ)` or `(αμ)^{(n-2k)/2}` as `n` is above, at or
/// below `2k+4`.
pub fn sigma(p: &BlowupParams, d: DimensionPair) -> Result<RegimeValue> {
    let t = p.ratio();
    if t >= 1.0 {
        return Err(Error::Input(format!("σ needs αμ < 1, got {t}")));
    }
    let threshold = (2 * d.k() + 4) as f64;
    let br = branch(d.n() as f64, threshold);
    let value = match br {
        Branch::Above => t * t,
        Branch::At => t * t * log_inv(t),
        Branch::Below => t.powf(d.gap() as f64 / 2.0),
    };
    Ok(RegimeValue { value, threshold, branch: br })
}

/// `(θ, θ')`; `θ` branches at `2k+4`, `θ'` at `2k+2+τ`.
pub fn theta_pair(p: &BlowupParams, d: DimensionPair) -> (RegimeValue, RegimeValue) {
    let (n, k) = (d.n() as f64, d.k() as f64);
    let (alpha, mu, tau) = (p.alpha, p.mu, p.tau);
    let t = p.ratio();
    let th_threshold = 2.0 * k + 4.0;
    let th_branch = branch(n, th_threshold);
    let theta = match th_branch {
        Branch::Above => mu.powi(4),
        Branch::At => mu.powi(4) * log_inv(t),
        Branch::Below => mu.powf(n - 2.0 * k) / alpha.powf(2.0 * k + 4.0 - n),
    };
    let tp_threshold = 2.0 * k + 2.0 + tau;
    let tp_branch = branch(n, tp_threshold);
    let theta_prime = match tp_branch {
        Branch::Above => mu * mu * t.powf(tau),
        Branch::At => mu * mu * t.powf(tau) * log_inv(t),
        Branch::Below => mu * mu * t.powf(n - 2.0 * k - 2.0),
    };
    (
        RegimeValue { value: theta, threshold: th_threshold, branch: th_branch },
        RegimeValue { value: theta_prime, threshold: tp_threshold, branch: tp_branch },
    )
}

/// A quadrature measurement next to the leading-order prediction.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RegimeMeasurement {
    pub measured: f64,
    pub error: f64,
    /// Leading-order term; for `n = 2k+1` only the order `μ/α` is known.
    pub predicted: f64,
    pub ratio: f64,
    pub threshold: f64,
    pub branch: Branch,
}

/// `D^p f`: `Δ^{p/2} f` for even `p`, `∂_r Δ^{(p-1)/2} f` for odd `p`.
fn half_power_flat(profile: &RadialMetricProfile, p: u32, r: f64, f: J) -> f64 {
    let rj = J::variable(r);
    let mut f = f;
    for _ in 0..p / 2 {
        f = profile.laplacian(rj, f);
    }
    if p % 2 == 1 {
        f.c[1]
    } else {
        f.c[0]
    }
}

/// `χ(t|y|) U(y)` in bubble units.
fn truncated_bubble(d: DimensionPair, cutoff: &Cutoff, t: f64, y: f64) -> J {
    let a = constants::bubble_scale(d).to_f64();
    let yj = J::variable(y);
    let u = ((yj * yj).scale(a) + 1.0).powf(-(d.gap() as f64) / 2.0);
    if t == 0.0 {
        u
    } else {
        cutoff.eval_jet(yj.scale(t)) * u
    }
}

/// Dyadic breakpoints from `lo` to `hi`, then the cutoff annulus `[hi, 2hi]`.
fn dyadic_breaks(lo: f64, hi: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    let mut y = lo;
    while y < hi {
        b.push(y);
        y *= 2.0;
    }
    b.extend((0..=8).map(|i| hi * (1.0 + i as f64 / 8.0)));
    b
}

fn integrate_pieces(f: impl Fn(f64) -> f64, breaks: &[f64], rel: f64) -> (f64, f64) {
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: rel, max_intervals: 400 };
    breaks.windows(2).fold((0.0, 0.0), |(v, e), w| {
        let r = quad::integrate(&f, w[0], w[1], opts);
        (v + r.value, e + r.error)
    })
}

/// `∫ (D^{k-1}[χ(t|y|)U])² dy`; the curvature energy of `V` is `μ²` times this.
pub fn curvature_energy_unit(d: DimensionPair, t: f64) -> (f64, f64) {
    let profile = RadialMetricProfile::flat(d.n());
    let cutoff = Cutoff::new(BLOWUP_CUTOFF_SMOOTHNESS);
    let p = d.k() - 1;
    let dens = |y: f64| {
        let v = half_power_flat(&profile, p, y, truncated_bubble(d, &cutoff, t, y));
        v * v * profile.volume_density(y)
    };
    integrate_pieces(dens, &dyadic_breaks(0.125, 1.0 / t), 1e-12)
}

/// `∫ (D^{k-1} V)²` against the case table at `2k+2`: `μ²‖D^{k-1}U‖²` above,
/// `C μ² ln(1/αμ)` at (with the exact logarithmic coefficient `C`), and the
/// order `μ/α` below.
pub fn gradient_energy_regime(p: &BlowupParams, d: DimensionPair) -> Result<RegimeMeasurement> {
    let t = p.ratio();
    if t >= 1.0 {
        return Err(Error::Input(format!("need αμ < 1, got {t}")));
    }
    let (unit, err) = curvature_energy_unit(d, t);
    let mu2 = p.mu * p.mu;
    let threshold = (2 * d.k() + 2) as f64;
    let br = branch(d.n() as f64, threshold);
    let predicted = match br {
        Branch::Below => p.mu / p.alpha,
        _ => {
            let c = radial::half_laplacian_energy(d)?;
            match c.kind {
                EnergyKind::Integral => mu2 * c.value.to_f64(),
                EnergyKind::LogCoefficient => mu2 * log_inv(t) * c.value.to_f64(),
            }
        }
    };
    let measured = mu2 * unit;
    Ok(RegimeMeasurement { measured, error: mu2 * err, predicted, ratio: measured / predicted, threshold, branch: br })
}

/// Least-squares `c` in `I(t) ≈ c ln(1/t) + b` on the given ratios.
pub fn log_coefficient_fit(d: DimensionPair, ratios: &[f64], l2: bool) -> Result<f64> {
    if ratios.len() < 2 {
        return Err(Error::Input("need at least two ratios".into()));
    }
    let xs: Vec<f64> = ratios.iter().map(|&t| log_inv(t)).collect();
    let ys: Vec<f64> = ratios
        .par_iter()
        .map(|&t| if l2 { l2_mass_unit(d, t).0 } else { curvature_energy_unit(d, t).0 })
        .collect();
    Ok(fit::line_fit(&xs, &ys).coef[1])
}

/// `∫ χ(t|y|)² U² dy`; `α^{2k}∫V²` is `(αμ)^{2k}` times this.
pub fn l2_mass_unit(d: DimensionPair, t: f64) -> (f64, f64) {
    let profile = RadialMetricProfile::flat(d.n());
    let cutoff = Cutoff::new(BLOWUP_CUTOFF_SMOOTHNESS);
    let dens = |y: f64| truncated_bubble(d, &cutoff, t, y).value().powi(2) * profile.volume_density(y);
    integrate_pieces(dens, &dyadic_breaks(0.125, 1.0 / t), 1e-12)
}

/// Logarithmic coefficient of `∫_{|y|<L} U²` when `n = 4k`: `ω_{n-1} a^{-(n-2k)}`.
fn l2_log_coefficient(d: DimensionPair) -> f64 {
    let a = constants::bubble_scale(d).to_f64();
    constants::sphere_area(d.n()).expect("n >= 3").to_f64() * a.powi(-(d.gap() as i32))
}

/// `α^{2k} ∫ u²` against the case table at `4k`.
///
/// For `n < 4k` the mass sits at distance `1/α` where the solution looks like
/// `c_U Γ_α`, so the model is the bubble `U_μ` inside `|x| < Rμ` and the
/// rescaled far field `α^{n-2k} μ^{(n-2k)/2} c_U Γ(α|x|)` outside.
pub fn l2_mass_regime(p: &BlowupParams, d: DimensionPair, crossover: f64) -> Result<RegimeMeasurement> {
    let t = p.ratio();
    if t >= 1.0 {
        return Err(Error::Input(format!("need αμ < 1, got {t}")));
    }
    let (n, k) = (d.n(), d.k());
    let t2k = t.powi(2 * k as i32);
    let threshold = (4 * k) as f64;
    let br = branch(n as f64, threshold);
    let (measured, error, predicted) = match br {
        Branch::Above | Branch::At => {
            let (v, e) = l2_mass_unit(d, t);
            let pred = if br == Branch::Above {
                t2k * radial::bubble_l2(d)?.to_f64()
            } else {
                t2k * log_inv(t) * l2_log_coefficient(d)
            };
            (t2k * v, t2k * e, pred)
        }
        Branch::Below => {
            if !(crossover > 1.0 && crossover * t < 0.5) {
                return Err(Error::Input(format!("crossover R = {crossover} must satisfy 1 < R < 1/(2αμ)")));
            }
            let profile = RadialMetricProfile::flat(n);
            let cutoff = Cutoff::new(BLOWUP_CUTOFF_SMOOTHNESS);
            let mut near_breaks = dyadic_breaks(0.125, crossover);
            near_breaks.retain(|b| *b <= crossover);
            let (near, near_err) = integrate_pieces(
                |y| truncated_bubble(d, &cutoff, 0.0, y).value().powi(2) * profile.volume_density(y),
                &near_breaks,
                1e-12,
            );
            let kernel = green::gamma_fn(d);
            let c_u = radial::c_u_constant(d).to_f64();
            let start = crossover * t;
            let mut breaks = Vec::new();
            let mut x = start;
            while x < 1.0 {
                x *= 2.0;
                breaks.push(x);
            }
            breaks.extend([2.0, 5.0, 10.0]);
            let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-11, max_intervals: 2000 };
            let far = quad::integrate_to_infinity(
                |x| kernel.eval(x).powi(2) * profile.volume_density(x),
                start,
                &breaks,
                opts,
            );
            let tg = t.powi(d.gap() as i32);
            let measured = t2k * near + tg * c_u * c_u * far.value;
            let error = t2k * near_err + tg * c_u * c_u * far.error;
            let predicted = tg * c_u * c_u * green::l2_norm_sq(d)?.plancherel;
            (measured, error, predicted)
        }
    };
    Ok(RegimeMeasurement { measured, error, predicted, ratio: measured / predicted, threshold, branch: br })
}

/// How derivatives are taken in [`pohozaev_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Differentiation {
    /// Taylor-mode propagation through the profile.
    Exact,
    /// Eighth-order centered differences of the sampled profile with step `h`.
    FiniteDifference { h: f64 },
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PohozaevReport {
    /// `∫ Δ^k u · T(u) dx` with `T(u) = ((n-2k)/2) u + r u'`.
    pub integral: f64,
    /// `∫ |Δ^k u · T(u)| dx`.
    pub scale: f64,
    pub relative: f64,
    /// Relative residual above `1e-7`: `u` is not compactly supported in the
    /// given ball, or the derivatives are not resolved.
    pub flagged: bool,
}

/// Centered weights for the `j`-th derivative on the nodes `-m..=m`, exact
/// rationals by Fornberg's recursion.
fn fd_weights(j: usize, m: usize) -> Vec<f64> {
    let nodes: Vec<BigRational> = (-(m as i64)..=m as i64).map(|i| BigRational::from_integer(BigInt::from(i))).collect();
    let np = nodes.len();
    let zero = BigRational::zero();
    // c[d][i]: weight of node i for derivative d using the first nodes
    let mut c = vec![vec![zero.clone(); np]; j + 1];
    c[0][0] = BigRational::one();
    let mut c1 = BigRational::one();
    let x0 = &zero;
    let mut c4 = &nodes[0] - x0;
    for i in 1..np {
        let mn = i.min(j);
        let mut c2 = BigRational::one();
        let c5 = c4.clone();
        c4 = &nodes[i] - x0;
        for jj in 0..i {
            let c3 = &nodes[i] - &nodes[jj];
            c2 = &c2 * &c3;
            if jj == i - 1 {
                for d in (1..=mn).rev() {
                    let dd = BigRational::from_integer(BigInt::from(d));
                    c[d][i] = &c1 * (&dd * &c[d - 1][i - 1] - &c5 * &c[d][i - 1]) / &c2;
                }
                c[0][i] = -(&c1 * &c5 * &c[0][i - 1]) / &c2;
            }
            for d in (1..=mn).rev() {
                let dd = BigRational::from_integer(BigInt::from(d));
                c[d][jj] = (&c4 * &c[d][jj] - &dd * &c[d - 1][jj]) / &c3;
            }
            c[0][jj] = &c4 * &c[0][jj] / &c3;
        }
        c1 = c2;
    }
    c[j].iter().map(|w| w.to_f64().unwrap()).collect()
}

/// Stencils of order eight for derivatives `1..=6`.
fn stencils() -> &'static Vec<Vec<f64>> {
    static CELL: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    CELL.get_or_init(|| (1..=6).map(|j| fd_weights(j, 4 + (j - 1) / 2)).collect())
}

fn fd_jet(u: &impl Fn(J) -> J, r: f64, h: f64, order: usize) -> J {
    let reach = (stencils()[order - 1].len() - 1) / 2;
    let samples: Vec<f64> =
        (-(reach as i64)..=reach as i64).map(|i| u(J::constant(r + i as f64 * h)).value()).collect();
    let mut jet = J::constant(samples[reach]);
    let mut fact = 1.0;
    for j in 1..=order {
        fact *= j as f64;
        let w = &stencils()[j - 1];
        let off = reach - (w.len() - 1) / 2;
        let s: f64 = w.iter().zip(&samples[off..]).map(|(wi, ui)| wi * ui).sum();
        jet.c[j] = s / h.powi(j as i32) / fact;
    }
    jet
}

/// Pohozaev–Pucci–Serrin check on flat `ℝⁿ` for a radial profile given as a
/// jet map `r ↦ u(r)`, supported in `[0, support]`; `breaks` lists interior
/// points where the profile is only finitely smooth.
pub fn pohozaev_check<F>(u: F, support: f64, breaks: &[f64], d: DimensionPair, diff: Differentiation) -> Result<PohozaevReport>
where
    F: Fn(J) -> J + Sync,
{
    let k = d.k() as usize;
    if 2 * k >= ORDER {
        return Err(Error::Input(format!("k = {k} exceeds the supported order")));
    }
    if let Differentiation::FiniteDifference { h } = diff {
        if !(h > 0.0 && h < support) {
            return Err(Error::Input(format!("step h = {h} out of range")));
        }
    }
    let profile = RadialMetricProfile::flat(d.n());
    let half_gap = d.gap() as f64 / 2.0;
    let product = |r: f64| -> f64 {
        let f = match diff {
            Differentiation::Exact => u(J::variable(r)),
            Differentiation::FiniteDifference { h } => fd_jet(&u, r, h, 2 * k),
        };
        let rj = J::variable(r);
        let mut g = f;
        for _ in 0..k {
            g = profile.laplacian(rj, g);
        }
        g.c[0] * (half_gap * f.c[0] + r * f.c[1]) * profile.volume_density(r)
    };
    let mut pts: Vec<f64> = std::iter::once(0.0)
        .chain(breaks.iter().copied().filter(|b| *b > 0.0 && *b < support))
        .chain(std::iter::once(support))
        .collect();
    pts.sort_by(f64::total_cmp);
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-13, max_intervals: 1000 };
    let pieces: Vec<(f64, f64)> = pts
        .par_windows(2)
        .map(|w| {
            let a = quad::integrate(product, w[0], w[1], opts);
            // the normalization only needs a few digits
            let b = quad::integrate(|r| product(r).abs(), w[0], w[1], QuadOptions::rel(1e-6));
            (a.value, b.value)
        })
        .collect();
    let integral: f64 = pieces.iter().map(|p| p.0).sum();
    let scale: f64 = pieces.iter().map(|p| p.1).sum();
    let relative = integral.abs() / scale;
    Ok(PohozaevReport { integral, scale, relative, flagged: relative > 1e-7 })
}

/// One row of the blow-up balance: the curvature term
/// `c_{n,k} R_g ∫(D^{k-1}V)²` against the mass term `k α^{2k}∫u²`.
#[derive(Clone, Debug, Serialize)]
pub struct BalanceRow {
    pub alpha: f64,
    pub mu: f64,
    pub term_curvature: f64,
    pub term_l2: f64,
    pub theta: f64,
    pub theta_prime: f64,
    pub regime: String,
}

pub fn balance_table(m: &ModelManifold, d: DimensionPair, family: &[BlowupParams], crossover: f64) -> Result<Vec<BalanceRow>> {
    m.validate()?;
    if m.dim() != d.n() {
        return Err(Error::Input(format!("manifold has dimension {}, pair is {d}", m.dim())));
    }
    let c = constants::c_small(d).to_f64().unwrap() * m.scalar_curvature();
    family
        .par_iter()
        .map(|p| {
            let grad = gradient_energy_regime(p, d)?;
            let l2 = l2_mass_regime(p, d, crossover)?;
            let term_curvature = c * grad.measured;
            let term_l2 = d.k() as f64 * l2.measured;
            let (th, thp) = theta_pair(p, d);
            let bound = th.value + thp.value;
            let regime = if term_curvature == 0.0 {
                if term_l2 > bound { "flat: l2 exceeds theta bound" } else { "flat: l2 within theta bound" }
            } else if term_curvature.abs() > term_l2 {
                "curvature-dominant"
            } else {
                "l2-dominant"
            };
            Ok(BalanceRow {
                alpha: p.alpha,
                mu: p.mu,
                term_curvature,
                term_l2,
                theta: th.value,
                theta_prime: thp.value,
                regime: regime.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(n: i64, k: i64) -> DimensionPair {
        DimensionPair::new(n, k).unwrap()
    }

    #[test]
    fn sigma_table() {
        let p = |a: f64, m: f64, d| BlowupParams::with_default_tau(a, m, d).unwrap();
        let s = sigma(&p(1.0, 0.1, pair(9, 2)), pair(9, 2)).unwrap();
        assert!((s.value - 0.01).abs() < 1e-15 && s.branch == Branch::Above);
        let s = sigma(&p(1.0, 0.1, pair(8, 2)), pair(8, 2)).unwrap();
        assert!((s.value - 0.01 * 10f64.ln()).abs() < 1e-15 && s.branch == Branch::At);
        let s = sigma(&p(1.0, 0.04, pair(5, 2)), pair(5, 2)).unwrap();
        assert!((s.value - 0.2).abs() < 1e-15 && s.branch == Branch::Below);
    }

    #[test]
    fn theta_table() {
        let d = pair(9, 2);
        let (th, _) = theta_pair(&BlowupParams::with_default_tau(1.0, 1e-3, d).unwrap(), d);
        assert!((th.value - 1e-12).abs() < 1e-25);
        let d = pair(6, 2);
        let (_, thp) = theta_pair(&BlowupParams::new(10.0, 1e-3, 1.0, d).unwrap(), d);
        assert_eq!(thp.branch, Branch::Below);
        assert!((thp.value - 1e-6).abs() < 1e-20);
        assert_eq!(default_tau(pair(5, 2)), 0.25);
        assert!(BlowupParams::new(10.0, 1e-3, 1.5, d).is_err());
        assert!(BlowupParams::new(10.0, 0.2, 1.0, d).is_err());
    }

    #[test]
    fn untruncated_energy_is_pure_scaling() {
        let d = pair(8, 2);
        let profile = RadialMetricProfile::flat(8);
        let cutoff = Cutoff::new(BLOWUP_CUTOFF_SMOOTHNESS);
        let exact = radial::half_laplacian_energy(d).unwrap().value.to_f64();
        let dens = |y: f64| {
            let v = half_power_flat(&profile, 1, y, truncated_bubble(d, &cutoff, 0.0, y));
            v * v * profile.volume_density(y)
        };
        let r = quad::integrate_to_infinity(dens, 0.0, &[0.5, 1.0, 2.0, 4.0, 8.0], QuadOptions::rel(1e-13));
        assert!((r.value - exact).abs() < 1e-10 * exact, "{} vs {exact}", r.value);
    }

    #[test]
    fn fd_weights_match_known_stencils() {
        let w = fd_weights(2, 1);
        assert_eq!(w, vec![1.0, -2.0, 1.0]);
        let w = fd_weights(1, 2);
        let want = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        assert!(w.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn pohozaev_exact_and_negative_control() {
        let d = pair(6, 2);
        let bump = Cutoff::new(16);
        let a = constants::bubble_scale(d).to_f64();
        let bubble = |r: J| ((r * r).scale(a) + 1.0).powf(-1.0);
        let u = |r: J| bubble(r) * bump.eval_jet(r);
        let rep = pohozaev_check(u, 2.0, &[1.0], d, Differentiation::Exact).unwrap();
        assert!(rep.relative < 1e-12 && !rep.flagged, "{rep:?}");
        let cut = pohozaev_check(bubble, 1.5, &[], d, Differentiation::Exact).unwrap();
        assert!(cut.flagged && cut.relative > 1e-3, "{cut:?}");
    }

    #[test]
    fn balance_on_models() {
        use std::f64::consts::PI;
        let d = pair(6, 2);
        let fam: Vec<BlowupParams> =
            [1e-3, 1e-4, 1e-5].iter().map(|&mu| BlowupParams::with_default_tau(1.0, mu, d).unwrap()).collect();
        let rows = balance_table(&ModelManifold::sphere(6, 1.0), d, &fam, 20.0).unwrap();
        assert!(rows.iter().all(|r| r.regime == "curvature-dominant"), "{rows:?}");
        let ratios: Vec<f64> = rows.iter().map(|r| r.term_l2 / r.term_curvature).collect();
        assert!(ratios.windows(2).all(|w| w[1] < w[0]));
        let flat = balance_table(&ModelManifold::torus(6, 2.0 * PI), d, &fam, 20.0).unwrap();
        assert!(flat.iter().all(|r| r.term_curvature == 0.0 && r.term_l2 > 0.0));
        // n = 2k+1: the mass term beats the curvature term by a factor of order α²
        let d = pair(5, 2);
        let imbalance: Vec<f64> = [10.0, 100.0]
            .iter()
            .map(|&alpha| {
                let p = BlowupParams::with_default_tau(alpha, 1e-3 / alpha, d).unwrap();
                let l2 = l2_mass_regime(&p, d, 20.0).unwrap().measured;
                let grad = gradient_energy_regime(&p, d).unwrap().measured;
                l2 / grad
            })
            .collect();
        let growth = imbalance[1] / imbalance[0];
        assert!((growth / 100.0 - 1.0).abs() < 0.05, "{imbalance:?}");
    }

    #[test]
    fn logarithmic_constants_are_stable() {
        let d = pair(6, 2);
        let c1 = log_coefficient_fit(d, &[1e-2, 1e-3], false).unwrap();
        let c2 = log_coefficient_fit(d, &[1e-3, 1e-4], false).unwrap();
        assert!(c1 > 0.0 && (c1 / c2 - 1.0).abs() < 0.02);
        let exact = radial::half_laplacian_energy(d).unwrap().value.to_f64();
        assert!((c2 / exact - 1.0).abs() < 1e-3);
        let d = pair(8, 2);
        let m1 = log_coefficient_fit(d, &[1e-2, 1e-3], true).unwrap();
        let m2 = log_coefficient_fit(d, &[1e-3, 1e-4], true).unwrap();
        assert!(m1 > 0.0 && (m1 / m2 - 1.0).abs() < 0.02, "{m1} {m2}");
        assert!((m2 / l2_log_coefficient(d) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn composite_mass_ignores_crossover() {
        let d = pair(5, 2);
        let p = BlowupParams::with_default_tau(1.0, 1e-3, d).unwrap();
        let r: Vec<f64> = [10.0, 20.0, 40.0].iter().map(|&c| l2_mass_regime(&p, d, c).unwrap().ratio).collect();
        assert!(r.iter().all(|x| (x - 1.0).abs() < 0.02), "{r:?}");
    }
}
