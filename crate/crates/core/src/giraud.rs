//! Convolutions of radial envelope kernels on `ℝⁿ`,
//! `Z(x, y) = ∫ X(|x - z|) Y(|z - y|) dz`, and the regime laws they obey.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::constants;
use crate::error::{Error, Result};
use crate::fit;
use crate::quad::{self, QuadOptions};

/// `base^{a-n} / (1 + α^p t^p)` with `base = t`, or `base = μ + t` for the
/// softened variant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnvelopeKernel {
    pub singular: f64,
    pub tail: f64,
    pub alpha: f64,
    pub mu: Option<f64>,
}

impl EnvelopeKernel {
    pub fn new(singular: f64, tail: f64, alpha: f64, n: u32) -> Result<Self> {
        let nf = n as f64;
        if !(singular > 0.0 && singular <= nf && tail > nf && alpha > 0.0) {
            return Err(Error::Input(format!(
                "need a ∈ (0, n], p > n, α > 0; got a={singular}, p={tail}, α={alpha}, n={n}"
            )));
        }
        Ok(EnvelopeKernel { singular, tail, alpha, mu: None })
    }

    /// `(μ + t)^{b-n} / (1 + α^q t^q)`; any real `b` is allowed.
    pub fn softened(singular: f64, tail: f64, alpha: f64, mu: f64, n: u32) -> Result<Self> {
        if !(mu > 0.0 && mu <= 1.0 && tail > n as f64 && alpha > 0.0 && singular.is_finite()) {
            return Err(Error::Input(format!("need μ ∈ (0, 1], q > n, α > 0; got μ={mu}, q={tail}, α={alpha}")));
        }
        Ok(EnvelopeKernel { singular, tail, alpha, mu: Some(mu) })
    }

    pub fn eval(&self, n: u32, t: f64) -> f64 {
        let base = t + self.mu.unwrap_or(0.0);
        base.powf(self.singular - n as f64) / (1.0 + (self.alpha * t).powf(self.tail))
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConvolutionSample {
    pub d: f64,
    pub value: f64,
    pub error: f64,
}

const REL_TOL: f64 = 1e-10;

/// Angular average of `Y(|z - y|)` over the sphere `|z| = s`, with `|y| = d`:
/// `∫₀^π Y(ρ(φ)) sin^{n-2} φ dφ`, `ρ² = (s-d)² + 4sd sin²(φ/2)`.
fn angular(y: &EnvelopeKernel, n: u32, s: f64, d: f64) -> (f64, f64) {
    let f = |phi: f64| {
        let h = (phi / 2.0).sin();
        let rho = ((s - d).powi(2) + 4.0 * s * d * h * h).sqrt();
        y.eval(n, rho) * phi.sin().powi(n as i32 - 2)
    };
    // the peak at φ = 0 when s ≈ d has width ~ |s - d|/d
    let width = ((s - d).abs() / s.max(d)).max(1e-15);
    let mut breaks = Vec::new();
    let mut phi = std::f64::consts::PI / 2.0;
    while phi > width / 4.0 && breaks.len() < 60 {
        breaks.push(phi);
        phi /= 2.0;
    }
    let r = quad::integrate_with_breaks(
        f,
        0.0,
        std::f64::consts::PI,
        &breaks,
        QuadOptions { abs_tol: 0.0, rel_tol: REL_TOL, max_intervals: 2000 },
    );
    (r.value, r.error)
}

/// `Z` at separation `d` by bipolar reduction: radial integral around `x`
/// split at `0` and `d`, angular integral split toward the peak at `y`.
pub fn convolve_radial(x: &EnvelopeKernel, y: &EnvelopeKernel, d: f64, n: u32) -> Result<ConvolutionSample> {
    if n < 2 {
        return Err(Error::Input("dimension must be at least 2".into()));
    }
    if !(d > 0.0) {
        return Err(Error::Input(format!("separation must be positive, got {d}")));
    }
    let omega = constants::sphere_area(n - 1)?.to_f64();
    let outer = |s: f64| {
        if s == 0.0 {
            return 0.0;
        }
        s.powi(n as i32 - 1) * x.eval(n, s) * angular(y, n, s, d).0
    };
    let mut breaks = Vec::new();
    for j in 1..=40 {
        let e = 0.5f64.powi(j);
        breaks.push(d * e);
        breaks.push(d * (1.0 - e));
        breaks.push(d * (1.0 + e));
    }
    let reach = d + 1.0 / x.alpha.min(y.alpha);
    let mut t = 2.0 * d;
    while t < 8.0 * reach {
        breaks.push(t);
        t *= 2.0;
    }
    breaks.retain(|b| *b > 0.0 && *b < 8.0 * reach);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: REL_TOL, max_intervals: 4000 };
    let near = quad::integrate_with_breaks(outer, 0.0, 8.0 * reach, &breaks, opts);
    let far = quad::integrate_to_infinity(outer, 8.0 * reach, &[16.0 * reach, 64.0 * reach], opts);
    let value = omega * (near.value + far.value);
    let error = omega * (near.error + far.error);
    if !(near.converged && far.converged) && error > 1e-6 * value.abs() {
        return Err(Error::Quadrature(format!("convolution at d={d}: error {error:e} on {value:e}")));
    }
    Ok(ConvolutionSample { d, value, error })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Radius law with density `c v^{c-1}/(1+v)^{c+1}` on `(0, ∞)`, scaled by `scale`.
fn sample_radius(rng: &mut ChaCha8Rng, c: f64, scale: f64) -> f64 {
    let w: f64 = rng.gen::<f64>().powf(1.0 / c);
    scale * w / (1.0 - w)
}

fn radius_density(r: f64, c: f64, scale: f64) -> f64 {
    let v = r / scale;
    c * v.powf(c - 1.0) / (1.0 + v).powf(c + 1.0) / scale
}

/// Importance-sampled `Z(d)`: half the points are drawn around `x` with the
/// radial singularity of `X`, half around `y` with that of `Y`.
pub fn monte_carlo(x: &EnvelopeKernel, y: &EnvelopeKernel, d: f64, n: u32, samples: u64, seed: u64) -> Result<MonteCarloEstimate> {
    if samples < 2 {
        return Err(Error::Input("need at least two samples".into()));
    }
    let omega = constants::sphere_area(n)?.to_f64();
    let scale = d.min(1.0 / x.alpha.min(y.alpha));
    let cx = x.singular.clamp(0.5, n as f64);
    let cy = if y.mu.is_some() { n as f64 } else { y.singular.clamp(0.5, n as f64) };
    let chunks = 64u64;
    let per = samples.div_ceil(chunks);
    let sums: Vec<(f64, f64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let (mut s1, mut s2, mut m) = (0.0, 0.0, 0u64);
            let count = per.min(samples.saturating_sub(c * per));
            let mut dir = vec![0.0; n as usize];
            for _ in 0..count {
                for v in dir.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                let around_x = rng.gen::<bool>();
                let r = sample_radius(&mut rng, if around_x { cx } else { cy }, scale);
                // z relative to x; y sits at d·e₁
                let mut z: Vec<f64> = dir.iter().map(|v| r * v / norm).collect();
                if !around_x {
                    z[0] += d;
                }
                let rx = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                let ry = ((z[0] - d).powi(2) + z[1..].iter().map(|v| v * v).sum::<f64>()).sqrt();
                let shell = |r: f64, c: f64| radius_density(r, c, scale) / (omega * r.powi(n as i32 - 1));
                let g = 0.5 * shell(rx, cx) + 0.5 * shell(ry, cy);
                let w = x.eval(n, rx) * y.eval(n, ry) / g;
                s1 += w;
                s2 += w * w;
                m += 1;
            }
            (s1, s2, m)
        })
        .collect();
    let (s1, s2, m) = sums.iter().fold((0.0, 0.0, 0u64), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let mean = s1 / m as f64;
    let var = (s2 / m as f64 - mean * mean).max(0.0) * m as f64 / (m - 1) as f64;
    Ok(MonteCarloEstimate { mean, std_error: (var / m as f64).sqrt(), samples: m })
}

/// Which row of the convolution lemma applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GiraudRegime {
    Subcritical,
    Logarithmic,
    Supercritical,
}

pub fn giraud_regime(a: f64, b: f64, n: u32) -> GiraudRegime {
    let s = a + b - n as f64;
    if s.abs() < 1e-12 {
        GiraudRegime::Logarithmic
    } else if s < 0.0 {
        GiraudRegime::Subcritical
    } else {
        GiraudRegime::Supercritical
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RegimeCheck {
    pub regime: GiraudRegime,
    /// What was fitted, e.g. `"log Z vs log d, αd <= 0.3"`.
    pub quantity: String,
    pub fitted_exponent: f64,
    pub expected_exponent: f64,
    /// Largest `Z / bound` over the grid, with unit constant.
    pub max_ratio: f64,
    /// Smallest `Z / bound`; bounded away from 0 when the law is sharp.
    pub min_ratio: f64,
    pub r_squared: f64,
    pub samples: Vec<(f64, f64, f64)>,
}

/// Fitting windows exclude the crossover `αd ∈ (0.3, 3)`.
pub const SHORT_RANGE: f64 = 0.3;
pub const LONG_RANGE: f64 = 3.0;

fn bound(a: f64, b: f64, p: f64, q: f64, n: u32, alpha: f64, d: f64) -> f64 {
    let m = (a + q).min(b + p);
    let ad = alpha * d;
    match giraud_regime(a, b, n) {
        GiraudRegime::Subcritical => d.powf(a + b - n as f64) / (1.0 + ad.powf(m)),
        GiraudRegime::Logarithmic => {
            if ad < 0.5 {
                ad.ln().abs()
            } else {
                ad.powf(-m)
            }
        }
        GiraudRegime::Supercritical => alpha.powf(n as f64 - a - b) / (1.0 + ad.powf(m - a - b + n as f64)),
    }
}

/// Evaluates `Z` on the `α × d` grid and fits the law of the applicable row:
/// the short-range power `a+b-n`, the logarithm, or the `α^{n-a-b}` prefactor
/// at fixed `αd`; plus the long-range decay exponent.
pub fn regime_verify(a: f64, b: f64, p: f64, q: f64, n: u32, alpha_grid: &[f64], d_grid: &[f64]) -> Result<Vec<RegimeCheck>> {
    if alpha_grid.is_empty() || d_grid.len() < 3 {
        return Err(Error::Input("need at least one α and three separations".into()));
    }
    let regime = giraud_regime(a, b, n);
    // every α sees the same values of αd
    let al0 = alpha_grid[0];
    let pts: Vec<(f64, f64)> =
        alpha_grid.iter().flat_map(|&al| d_grid.iter().map(move |&d| (al, d * al0 / al))).collect();
    let samples: Vec<(f64, f64, f64)> = pts
        .par_iter()
        .map(|&(al, d)| {
            let x = EnvelopeKernel::new(a, p, al, n)?;
            let y = EnvelopeKernel::new(b, q, al, n)?;
            Ok((al, d, convolve_radial(&x, &y, d, n)?.value))
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = samples.iter().map(|&(al, d, z)| z / bound(a, b, p, q, n, al, d)).collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let m = (a + q).min(b + p);
    let mut out = Vec::new();
    let mut push = |quantity: &str, xs: Vec<f64>, ys: Vec<f64>, expected: f64| -> Result<()> {
        if xs.len() < 3 {
            return Ok(());
        }
        let f = fit::line_fit(&xs, &ys);
        if f.r_squared < 0.98 {
            return Err(Error::Quadrature(format!(
                "{quantity}: fit failed (R² = {:.4}) on samples {samples:?}",
                f.r_squared
            )));
        }
        out.push(RegimeCheck {
            regime,
            quantity: quantity.to_string(),
            fitted_exponent: f.coef[1],
            expected_exponent: expected,
            max_ratio,
            min_ratio,
            r_squared: f.r_squared,
            samples: samples.clone(),
        });
        Ok(())
    };
    let short: Vec<&(f64, f64, f64)> = samples.iter().filter(|s| s.0 == al0 && s.0 * s.1 <= SHORT_RANGE).collect();
    let long: Vec<&(f64, f64, f64)> = samples.iter().filter(|s| s.0 == al0 && s.0 * s.1 >= LONG_RANGE).collect();
    let nf = n as f64;
    let short_fit = |f: fn(&(f64, f64, f64)) -> f64| -> (Vec<f64>, Vec<f64>) {
        (short.iter().map(|s| f(s)).collect(), short.iter().map(|s| s.2.ln()).collect())
    };
    match regime {
        GiraudRegime::Subcritical => {
            let (xs, ys) = short_fit(|s| s.1.ln());
            push("log Z vs log d, short range", xs, ys, a + b - nf)?;
        }
        GiraudRegime::Logarithmic => {
            // Z ≈ c ln(1/αd): the local exponent of Z against ln(1/αd)
            // tends to 1 as αd → 0
            let (xs, ys) = short_fit(|s| (1.0 / (s.0 * s.1)).ln().ln());
            push("log Z vs log ln(1/αd), short range", xs, ys, 1.0)?;
        }
        GiraudRegime::Supercritical => {
            // Z(d) tends to a finite limit as d → 0; only the α law is fitted
            if alpha_grid.len() >= 3 {
                // one fit per αd, reported by the worst deviation
                let mut worst: Option<(f64, Vec<f64>, Vec<f64>)> = None;
                for &d in d_grid {
                    let t = al0 * d;
                    let (xs, ys): (Vec<f64>, Vec<f64>) = samples
                        .iter()
                        .filter(|s| ((s.0 * s.1 - t) / t).abs() < 1e-9)
                        .map(|s| (s.0.ln(), s.2.ln()))
                        .unzip();
                    let e = fit::line_fit(&xs, &ys).coef[1];
                    let dev = (e - (nf - a - b)).abs();
                    if worst.as_ref().is_none_or(|w| dev > w.0) {
                        worst = Some((dev, xs, ys));
                    }
                }
                if let Some((_, xs, ys)) = worst {
                    push("log Z vs log α at fixed αd", xs, ys, nf - a - b)?;
                }
            }
        }
    }
    let tail_expected = match regime {
        GiraudRegime::Supercritical => -(m - a - b + nf),
        GiraudRegime::Subcritical => a + b - nf - m,
        GiraudRegime::Logarithmic => -m,
    };
    push(
        "log Z vs log d, long range",
        long.iter().map(|s| s.1.ln()).collect(),
        long.iter().map(|s| s.2.ln()).collect(),
        tail_expected,
    )?;
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct MuEnvelopeReport {
    pub b: f64,
    /// Per separation, the fitted power of `μ` in `Z (μ+d)^{n-a}` (`b < 0`)
    /// or in `Z (μ+d)^{n-a-b}` (`b > 0`).
    pub mu_exponents: Vec<(f64, f64)>,
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub samples: Vec<(f64, f64, f64)>,
}

/// Convolution with the softened second kernel `(μ+t)^{b-n}/(1+α^q t^q)`.
///
/// The power of `μ` in the `b < 0` branch is fitted, not assumed.
pub fn mu_envelope_variant(
    a: f64,
    p: f64,
    b: f64,
    q: f64,
    n: u32,
    alpha: f64,
    mu_grid: &[f64],
    d_grid: &[f64],
) -> Result<MuEnvelopeReport> {
    if a + b >= n as f64 {
        return Err(Error::Input(format!("the softened row needs a + b < n, got a={a}, b={b}")));
    }
    if mu_grid.len() < 2 {
        return Err(Error::Input("need at least two values of μ".into()));
    }
    let pts: Vec<(f64, f64)> = mu_grid.iter().flat_map(|&mu| d_grid.iter().map(move |&d| (mu, d))).collect();
    let samples: Vec<(f64, f64, f64)> = pts
        .par_iter()
        .map(|&(mu, d)| {
            let x = EnvelopeKernel::new(a, p, alpha, n)?;
            let y = EnvelopeKernel::softened(b, q, alpha, mu, n)?;
            Ok((mu, d, convolve_radial(&x, &y, d, n)?.value))
        })
        .collect::<Result<_>>()?;
    let nf = n as f64;
    let m = (a + q).min(b + p);
    let normalized: Vec<f64> = samples
        .iter()
        .map(|&(mu, d, z)| {
            let power = if b < 0.0 { nf - a } else { nf - a - b };
            z * (mu + d).powf(power) * (1.0 + (alpha * d).powf(m))
        })
        .collect();
    let mu_exponents = d_grid
        .iter()
        .map(|&d| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = samples
                .iter()
                .zip(&normalized)
                .filter(|(s, _)| s.1 == d)
                .map(|(s, v)| (s.0.ln(), v.ln()))
                .unzip();
            (d, fit::line_fit(&xs, &ys).coef[1])
        })
        .collect();
    Ok(MuEnvelopeReport {
        b,
        mu_exponents,
        max_ratio: normalized.iter().copied().fold(0.0, f64::max),
        min_ratio: normalized.iter().copied().fold(f64::INFINITY, f64::min),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_rejects_bad_exponents() {
        assert!(EnvelopeKernel::new(0.0, 7.0, 1.0, 5).is_err());
        assert!(EnvelopeKernel::new(2.0, 5.0, 1.0, 5).is_err());
        assert!(EnvelopeKernel::softened(-1.0, 7.0, 1.0, 0.0, 5).is_err());
    }

    #[test]
    fn swapped_roles_agree() {
        let x = EnvelopeKernel::new(2.0, 7.0, 2.0, 5).unwrap();
        let y = EnvelopeKernel::new(3.0, 8.0, 1.5, 5).unwrap();
        for d in [0.05, 1.0] {
            let xy = convolve_radial(&x, &y, d, 5).unwrap().value;
            let yx = convolve_radial(&y, &x, d, 5).unwrap().value;
            assert!((xy - yx).abs() < 1e-9 * xy, "d={d}: {xy} vs {yx}");
        }
    }

    #[test]
    fn exact_scaling_in_alpha() {
        // Z_α(d) = α^{n-a-b} Z_1(αd) for pure envelopes
        let n = 5;
        let z = |al: f64, d: f64| {
            let x = EnvelopeKernel::new(3.0, 7.0, al, n).unwrap();
            let y = EnvelopeKernel::new(3.0, 7.0, al, n).unwrap();
            convolve_radial(&x, &y, d, n).unwrap().value
        };
        let (z1, z4) = (z(1.0, 0.8), z(4.0, 0.2));
        assert!((z4 / z1 - 4f64.powf(-1.0)).abs() < 1e-8);
    }

    #[test]
    fn decreasing_in_alpha() {
        let zs: Vec<f64> = [1.0, 2.0, 4.0]
            .iter()
            .map(|&al| {
                let x = EnvelopeKernel::new(2.0, 7.0, al, 5).unwrap();
                convolve_radial(&x, &x, 1.0, 5).unwrap().value
            })
            .collect();
        assert!(zs.windows(2).all(|w| w[1] < w[0]), "{zs:?}");
    }

    #[test]
    fn monte_carlo_agrees() {
        let x = EnvelopeKernel::new(2.0, 7.0, 2.0, 5).unwrap();
        let y = EnvelopeKernel::new(3.0, 8.0, 2.0, 5).unwrap();
        let z = convolve_radial(&x, &y, 0.7, 5).unwrap().value;
        let mc = monte_carlo(&x, &y, 0.7, 5, 400_000, 11).unwrap();
        assert!((mc.mean - z).abs() < 3.0 * mc.std_error, "{z} vs {mc:?}");
        let again = monte_carlo(&x, &y, 0.7, 5, 400_000, 11).unwrap();
        assert_eq!(mc.mean, again.mean);
    }

    #[test]
    fn subcritical_short_range_power() {
        let d = [1e-3, 3e-3, 1e-2, 3e-2, 0.1];
        let checks = regime_verify(2.0, 2.0, 7.0, 7.0, 5, &[2.0], &d).unwrap();
        assert_eq!(checks[0].regime, GiraudRegime::Subcritical);
        assert!((checks[0].fitted_exponent + 1.0).abs() < 0.1);
    }

    #[test]
    fn softened_kernel_branches() {
        let neg = mu_envelope_variant(2.0, 7.0, -1.0, 7.0, 5, 1.0, &[0.01, 0.02, 0.04], &[0.5, 1.0]).unwrap();
        let e: Vec<f64> = neg.mu_exponents.iter().map(|x| x.1).collect();
        assert!((e[0] - e[1]).abs() < 0.1, "{e:?}");
        let pos = mu_envelope_variant(2.0, 7.0, 1.0, 7.0, 5, 1.0, &[0.05, 0.1, 0.2], &[0.1, 0.3, 1.0]).unwrap();
        assert!(pos.max_ratio / pos.min_ratio < 10.0);
        assert!(mu_envelope_variant(2.0, 7.0, 3.0, 7.0, 5, 1.0, &[0.1, 0.2], &[0.5]).is_err());
    }
}
