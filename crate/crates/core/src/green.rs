//! Fundamental solution of `Δ^k + 1` on ℝⁿ as a finite sum of complex-scale
//! Macdonald kernels.
//!
//! With `t = |ξ|²`, `1/(1+t^k) = Σ_m c_m/(t - ω_m)` over the roots of
//! `t^k = -1`, and each `1/(|ξ|² + z²)` inverts to
//! `(2π)^{-n/2} (z/r)^{n/2-1} K_{n/2-1}(z r)`, so
//! `Γ(r) = Σ_m c_m (2π)^{-n/2} (z_m/r)^{n/2-1} K_{n/2-1}(z_m r)`, `z_m² = -ω_m`.
//!
//! For `k >= 2` the residues sum to zero and the singular parts of the terms
//! cancel near the origin; below `r_cancel` the kernel is summed from the
//! small-argument series in double-double arithmetic.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64 as C64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::constants::{self, DimensionPair, SymbolicConstant};
use crate::error::{Error, Result};
use crate::ext::{CDd, Dd, DD_DIGITS};
use crate::fit;
use crate::quad::{self, QuadOptions};

const EULER_GAMMA: Dd = Dd { hi: 0.577_215_664_901_532_9, lo: -4.942_915_152_430_645e-18 };

/// Default radius below which the extended-precision series is used.
pub const DEFAULT_R_CANCEL: f64 = 0.1;
/// Default working precision in significant digits.
pub const DEFAULT_PRECISION: u32 = 30;

#[derive(Clone, Debug)]
pub struct PartialFractionDecomp {
    pub k: u32,
    /// `ω_m = exp(iπ(2m+1)/k)`.
    pub poles: Vec<C64>,
    /// `c_m = ∏_{j≠m} (ω_m - ω_j)^{-1}`.
    pub residues: Vec<C64>,
    poles_ext: Vec<CDd>,
    residues_ext: Vec<CDd>,
}

fn refine_root_of_minus_one(w: CDd, k: u32) -> CDd {
    let kk = CDd::real(Dd::from_i64(k as i64));
    (0..3).fold(w, |w, _| {
        let f = w.powi(k) + CDd::ONE;
        let df = kk * w.powi(k - 1);
        w - f / df
    })
}

fn refine_sqrt(z: CDd, w: CDd) -> CDd {
    let half = Dd::new(0.5);
    (0..3).fold(z, |z, _| (z + w / z).scale(half))
}

pub fn partial_fractions(k: u32) -> PartialFractionDecomp {
    let poles_ext: Vec<CDd> = (0..k)
        .map(|m| {
            let w = C64::from_polar(1.0, PI * (2 * m + 1) as f64 / k as f64);
            refine_root_of_minus_one(CDd::from_c64(w), k)
        })
        .collect();
    let residues_ext: Vec<CDd> = (0..k as usize)
        .map(|m| {
            let prod = (0..k as usize)
                .filter(|&j| j != m)
                .fold(CDd::ONE, |acc, j| acc * (poles_ext[m] - poles_ext[j]));
            prod.inv()
        })
        .collect();
    PartialFractionDecomp {
        k,
        poles: poles_ext.iter().map(|w| w.to_c64()).collect(),
        residues: residues_ext.iter().map(|c| c.to_c64()).collect(),
        poles_ext,
        residues_ext,
    }
}

impl PartialFractionDecomp {
    /// `Σ_m c_m/(t - ω_m)`, which should equal `1/(1+t^k)`.
    pub fn reconstruct(&self, t: f64) -> C64 {
        self.poles
            .iter()
            .zip(&self.residues)
            .map(|(w, c)| c / (C64::new(t, 0.0) - w))
            .sum()
    }

    pub fn residue_sum(&self) -> C64 {
        self.residues.iter().sum()
    }
}

fn factorial_f64(m: u32) -> f64 {
    (1..=m).map(|i| i as f64).product()
}

/// Half-integer order `p + 1/2`: `√(π/2x) e^{-x} Σ_j (p+j)!/(j!(p-j)!) (2x)^{-j}`.
fn k_half_integer(p: u32, x: C64) -> C64 {
    let mut sum = C64::new(0.0, 0.0);
    let inv = 1.0 / (2.0 * x);
    let mut pw = C64::new(1.0, 0.0);
    for j in 0..=p {
        let c = factorial_f64(p + j) / (factorial_f64(j) * factorial_f64(p - j));
        sum += pw * c;
        pw *= inv;
    }
    (PI / (2.0 * x)).sqrt() * (-x).exp() * sum
}

fn digamma_int(m: u32) -> f64 {
    // ψ(m) for integer m >= 1
    -EULER_GAMMA.to_f64() + (1..m).map(|i| 1.0 / i as f64).sum::<f64>()
}

fn k_integer_series(p: u32, x: C64) -> C64 {
    let h = x / 2.0;
    let q = h * h;
    let mut first = C64::new(0.0, 0.0);
    let mut pw = C64::new(1.0, 0.0);
    for j in 0..p {
        first += pw * (factorial_f64(p - j - 1) / factorial_f64(j));
        pw *= -q;
    }
    first *= 0.5 * h.powi(-(p as i32));
    let mut ip = C64::new(0.0, 0.0);
    let mut rest = C64::new(0.0, 0.0);
    let mut term = C64::new(1.0 / factorial_f64(p), 0.0);
    let mut j = 0u32;
    loop {
        ip += term;
        rest += term * (digamma_int(j + 1) + digamma_int(p + j + 1));
        j += 1;
        term *= q / (j as f64 * (p + j) as f64);
        if term.norm() < 1e-18 * ip.norm().max(1e-300) && j > 2 {
            break;
        }
    }
    let hp = h.powi(p as i32);
    let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
    first - sign * h.ln() * hp * ip + sign * 0.5 * hp * rest
}

fn k_integer_integral(p: u32, x: C64) -> C64 {
    // K_p(x) = ∫_0^∞ e^{-x cosh t} cosh(pt) dt, trapezoid with step halving
    let f = |t: f64| (-x * t.cosh()).exp() * (p as f64 * t).cosh();
    let tail = |t: f64| -x.re * (t.cosh() - 1.0) + p as f64 * t < -40.0;
    let mut h = 0.5;
    let mut sum = f(0.0) * 0.5;
    let mut i = 1;
    loop {
        let t = i as f64 * h;
        sum += f(t);
        if tail(t) {
            break;
        }
        i += 1;
    }
    let mut est = sum * h;
    for level in 0..14 {
        let hh = h / 2.0;
        let mut odd = C64::new(0.0, 0.0);
        let mut i = 1;
        loop {
            let t = (2 * i - 1) as f64 * hh;
            odd += f(t);
            if tail(t) {
                break;
            }
            i += 1;
        }
        sum += odd;
        h = hh;
        let next = sum * h;
        let done = level >= 2 && (next - est).norm() <= 1e-15 * next.norm();
        est = next;
        if done {
            break;
        }
    }
    est
}

/// Macdonald function `K_ν(z)` for `ν = twice_nu/2` and `Re z > 0`.
pub fn macdonald_k(twice_nu: u32, z: C64) -> C64 {
    if twice_nu % 2 == 1 {
        k_half_integer(twice_nu / 2, z)
    } else if z.norm() <= 2.0 {
        k_integer_series(twice_nu / 2, z)
    } else {
        k_integer_integral(twice_nu / 2, z)
    }
}

/// Leading terms of the large-argument expansion
/// `√(π/2z) e^{-z} Σ_j a_j(ν)/z^j`, summed until the terms stop shrinking.
pub fn macdonald_k_asymptotic(twice_nu: u32, z: C64) -> C64 {
    let mu = (twice_nu * twice_nu) as f64;
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    for j in 1..60 {
        let odd = (2 * j - 1) as f64;
        let next = term * (mu - odd * odd) / (j as f64 * 8.0 * z);
        if next.norm() >= term.norm() {
            break;
        }
        term = next;
        sum += term;
    }
    (PI / (2.0 * z)).sqrt() * (-z).exp() * sum
}

/// Extended-precision data for one pole.
#[derive(Clone, Debug)]
struct PoleExt {
    residue: CDd,
    /// `z²`
    square: CDd,
    /// `z^{n-2}`
    top_power: CDd,
    /// `arg z`
    arg: Dd,
}

/// `Γ` for a dimension pair, evaluable at any `r > 0`.
#[derive(Clone, Debug)]
pub struct BesselKernelSum {
    d: DimensionPair,
    decomp: PartialFractionDecomp,
    scales: Vec<C64>,
    poles_ext: Vec<PoleExt>,
    r_cancel: f64,
    extended: bool,
}

pub fn gamma_fn(d: DimensionPair) -> BesselKernelSum {
    let decomp = partial_fractions(d.k());
    let k = d.k() as i64;
    let mut scales = Vec::new();
    let mut poles_ext = Vec::new();
    for (m, (w, c)) in decomp.poles_ext.iter().zip(&decomp.residues_ext).enumerate() {
        let minus_w = -*w;
        let z = refine_sqrt(CDd::from_c64(minus_w.to_c64().sqrt()), minus_w);
        scales.push(z.to_c64());
        poles_ext.push(PoleExt {
            residue: *c,
            square: minus_w,
            top_power: z.powi(d.n() - 2),
            arg: Dd::PI * Dd::from_ratio(2 * m as i64 + 1 - k, 2 * k),
        });
    }
    BesselKernelSum {
        d,
        decomp,
        scales,
        poles_ext,
        r_cancel: DEFAULT_R_CANCEL,
        extended: true,
    }
}

impl BesselKernelSum {
    pub fn pair(&self) -> DimensionPair {
        self.d
    }

    pub fn decomposition(&self) -> &PartialFractionDecomp {
        &self.decomp
    }

    /// `z_m = √(-ω_m)` with positive real part.
    pub fn scales(&self) -> &[C64] {
        &self.scales
    }

    pub fn min_decay_rate(&self) -> f64 {
        self.scales.iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
    }

    /// Working precision in significant digits: up to 15 stays in `f64`
    /// everywhere, up to 31 enables the double-double small-radius branch.
    pub fn with_precision(mut self, digits: u32) -> Result<Self> {
        if digits > DD_DIGITS {
            return Err(Error::Input(format!("precision {digits} exceeds the supported {DD_DIGITS} digits")));
        }
        self.extended = digits > 15;
        Ok(self)
    }

    pub fn with_r_cancel(mut self, r_cancel: f64) -> Self {
        self.r_cancel = r_cancel;
        self
    }

    pub fn r_cancel(&self) -> f64 {
        self.r_cancel
    }

    fn prefactor(&self) -> f64 {
        (2.0 * PI).powf(-(self.d.n() as f64) / 2.0)
    }

    fn term_f64(&self, m: usize, r: f64) -> C64 {
        let z = self.scales[m];
        let twice_nu = self.d.n() - 2;
        let x = z * r;
        let nu = twice_nu as f64 / 2.0;
        let zr = (z / r).powf(nu);
        self.decomp.residues[m] * zr * macdonald_k(twice_nu, x) * self.prefactor()
    }

    /// Complex sum; the imaginary part is rounding noise.
    pub fn eval_complex(&self, r: f64) -> C64 {
        if self.extended && r < self.r_cancel {
            return self.eval_small_ext(r).to_c64();
        }
        (0..self.scales.len()).map(|m| self.term_f64(m, r)).sum()
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.eval_complex(r).re
    }

    /// Real part of the double-double small-radius sum, for `r < r_cancel`.
    pub fn eval_extended(&self, r: f64) -> Option<Dd> {
        (self.extended && r < self.r_cancel).then(|| self.eval_small_ext(r).re)
    }

    /// `Σ_m |c_m term_m(r)|`, an upper bound for `|Γ(r)|`.
    pub fn envelope(&self, r: f64) -> f64 {
        (0..self.scales.len()).map(|m| self.term_f64(m, r).norm()).sum()
    }

    fn eval_small_ext(&self, r: f64) -> CDd {
        let n = self.d.n();
        let rr = Dd::new(r);
        let x2 = rr * rr * Dd::new(0.25);
        let mut total = CDd::ZERO;
        for pole in &self.poles_ext {
            let q = pole.square.scale(x2);
            let t = if n % 2 == 1 {
                small_term_half(n, rr, q, pole.top_power)
            } else {
                small_term_integer(n, r, rr, q, pole.square, pole.arg)
            };
            total = total + pole.residue * t;
        }
        // (2π)^{-n/2}
        let two_pi = Dd::PI * Dd::new(2.0);
        let mut pref = Dd::ONE / two_pi.powi(n / 2);
        if n % 2 == 1 {
            pref = pref / two_pi.sqrt();
        }
        total.scale(pref)
    }
}

fn small_series_done(term: CDd, sum: CDd) -> bool {
    term.norm_sqr().to_f64() <= 1e-68 * sum.norm_sqr().to_f64().max(1e-300)
}

/// `(z/r)^ν K_ν(zr)` for `ν = p + 1/2` from `K_ν = π/(2 sin νπ)(I_{-ν} - I_ν)`.
fn small_term_half(n: u32, r: Dd, q: CDd, z_top: CDd) -> CDd {
    let p = (n - 3) / 2;
    let sqrt_pi = Dd::PI.sqrt();
    // 1/Γ(j - ν + 1) and 1/Γ(j + ν + 1), j = 0
    let mut gm = sqrt_pi; // Γ(1/2 - p)
    for i in 0..p {
        // Γ(x) = Γ(x+1)/x, stepping down from 1/2
        gm = gm / Dd::from_ratio(1 - 2 * i as i64 - 2, 2);
    }
    let mut gp = sqrt_pi; // Γ(p + 3/2)
    for i in 0..=p {
        gp = gp * Dd::from_ratio(2 * i as i64 + 1, 2);
    }
    let mut s_minus = CDd::ZERO;
    let mut s_plus = CDd::ZERO;
    let mut pw = CDd::ONE;
    let mut fact = Dd::ONE;
    for j in 0..80u32 {
        let a = pw.scale(Dd::ONE / (fact * gm));
        let b = pw.scale(Dd::ONE / (fact * gp));
        s_minus = s_minus + a;
        s_plus = s_plus + b;
        if j > 2 && small_series_done(a, s_minus) && small_series_done(b, s_plus) {
            break;
        }
        // advance: Γ(j+1-ν+1) = (j+1-ν)Γ(j+1-ν), likewise for +ν
        gm = gm * Dd::from_ratio(2 * (j as i64 + 1) - 2 * p as i64 - 1, 2);
        gp = gp * Dd::from_ratio(2 * (j as i64 + 1) + 2 * p as i64 + 1, 2);
        fact = fact * Dd::from_i64(j as i64 + 1);
        pw = pw * q;
    }
    let two_nu = Dd::new(2.0).powi(p) * Dd::new(2.0).sqrt();
    let r_neg = Dd::ONE / r.powi(2 * p + 1);
    let lead = s_minus.scale(two_nu * r_neg);
    let tail = (z_top * s_plus).scale(Dd::ONE / two_nu);
    let sign = if p % 2 == 0 { Dd::ONE } else { -Dd::ONE };
    (lead - tail).scale(Dd::PI * Dd::new(0.5) * sign)
}

/// `(z/r)^p K_p(zr)` for integer `p` from the logarithmic series.
fn small_term_integer(n: u32, r_f64: f64, r: Dd, q: CDd, w: CDd, arg: Dd) -> CDd {
    let p = n / 2 - 1;
    let mut first = CDd::ZERO;
    let mut pw = CDd::ONE;
    let mut fj = Dd::ONE; // j!
    for j in 0..p {
        let c = factorial_dd(p - j - 1) / fj;
        first = first + pw.scale(c);
        pw = pw * (-q);
        fj = fj * Dd::from_i64(j as i64 + 1);
    }
    let two_p = Dd::new(2.0).powi(p);
    first = first.scale(Dd::new(0.5) * two_p / r.powi(2 * p));

    let mut ip = CDd::ZERO;
    let mut rest = CDd::ZERO;
    let mut term = CDd::real(Dd::ONE / factorial_dd(p));
    let mut psi_a = -EULER_GAMMA; // ψ(1)
    let mut psi_b = -EULER_GAMMA + harmonic_dd(p); // ψ(p+1)
    for j in 0..80u32 {
        ip = ip + term;
        let r_term = term.scale(psi_a + psi_b);
        rest = rest + r_term;
        if j > 2 && small_series_done(term, ip) && small_series_done(r_term, rest) {
            break;
        }
        let jj = j as i64 + 1;
        psi_a = psi_a + Dd::ONE / Dd::from_i64(jj);
        psi_b = psi_b + Dd::ONE / Dd::from_i64(p as i64 + jj);
        term = (term * q).scale(Dd::ONE / Dd::from_i64(jj * (p as i64 + jj)));
    }
    let wp = w.powi(p).scale(Dd::ONE / two_p);
    // ln(zr/2) = ln(r/2) + i arg z
    let log = CDd::new(Dd::new((r_f64 / 2.0).ln()), arg);
    let sign = if p % 2 == 0 { Dd::ONE } else { -Dd::ONE };
    let log_part = (log * wp * ip).scale(-sign);
    let psi_part = (wp * rest).scale(sign * Dd::new(0.5));
    first + log_part + psi_part
}

fn factorial_dd(m: u32) -> Dd {
    (1..=m).fold(Dd::ONE, |acc, i| acc * Dd::from_i64(i as i64))
}

fn harmonic_dd(m: u32) -> Dd {
    (1..=m).fold(Dd::ZERO, |acc, i| acc + Dd::ONE / Dd::from_i64(i as i64))
}

/// `Γ_α(r) = α^{n-2k} Γ(α r)`, the fundamental solution of `Δ^k + α^{2k}`.
pub fn gamma_alpha(kernel: &BesselKernelSum, alpha: f64, r: f64) -> f64 {
    alpha.powi(kernel.d.gap() as i32) * kernel.eval(alpha * r)
}

/// Radius beyond which `Γ` is below `e^{-40}` of its envelope scale.
fn tail_radius(kernel: &BesselKernelSum) -> f64 {
    45.0 / kernel.min_decay_rate() + 5.0
}

fn radial_breaks(kernel: &BesselKernelSum, end: f64) -> Vec<f64> {
    let mut b = vec![kernel.r_cancel, 0.01, 0.3, 1.0, 2.0];
    let mut x = 4.0;
    while x < end {
        b.push(x);
        x += 4.0;
    }
    b
}

/// `∫_{ℝⁿ} Γ dx` by radial quadrature; equals `Γ̂(0) = 1`.
pub fn mass(kernel: &BesselKernelSum) -> quad::QuadResult {
    let n = kernel.d.n() as i32;
    let end = tail_radius(kernel);
    let omega = constants::sphere_area(kernel.d.n()).expect("n >= 3").to_f64();
    let mut res = quad::integrate_with_breaks(
        |r| if r == 0.0 { 0.0 } else { r.powi(n - 1) * kernel.eval(r) },
        0.0,
        end,
        &radial_breaks(kernel, end),
        QuadOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 20000 },
    );
    res.value *= omega;
    res.error *= omega;
    res
}

/// Both routes to `∫ Γ²`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct L2Routes {
    pub quadrature: f64,
    pub quadrature_error: f64,
    pub plancherel: f64,
}

/// `(2π)^{-n} ω_{n-1} (1/2k) B(n/2k, 2 - n/2k)`, with
/// `B(s, 2-s) = (1-s)π/sin(πs)`.
pub fn plancherel_l2(d: DimensionPair) -> Result<f64> {
    if d.n() >= 4 * d.k() {
        return Err(Error::Divergent(format!("Γ is not square integrable for n >= 4k, got {d}")));
    }
    let s = d.n() as f64 / (2.0 * d.k() as f64);
    let beta = (1.0 - s) * PI / (PI * s).sin();
    let omega = constants::sphere_area(d.n())?.to_f64();
    Ok((2.0 * PI).powi(-(d.n() as i32)) * omega * beta / (2.0 * d.k() as f64))
}

/// Exact form of [`plancherel_l2`] when `sin(πn/2k)` is `±1`, `±1/2`,
/// `±√2/2` or `±√3/2`.
pub fn plancherel_l2_exact(d: DimensionPair) -> Result<SymbolicConstant> {
    if d.n() >= 4 * d.k() {
        return Err(Error::Divergent(format!("Γ is not square integrable for n >= 4k, got {d}")));
    }
    // B(s, 2-s) = tπ/sin(πt) with t = s - 1 in (0, 1)
    let t = constants::rat(d.n() as i64 - 2 * d.k() as i64, 2 * d.k() as i64);
    let q = t.denom().to_i64().expect("small denominator");
    let (surd, factor) = match q {
        2 => (1, constants::rat(1, 1)),
        6 => (1, constants::rat(2, 1)),
        4 => (2, constants::rat(1, 1)),
        3 => (3, constants::rat(2, 3)),
        _ => return Err(Error::NotExact(format!("sin(π{t}) is not a quadratic surd"))),
    };
    let n = d.n() as i64;
    let two_pi = constants::rat(1, 1) / BigRational::from_integer(BigInt::from(2).pow(d.n()));
    let beta = SymbolicConstant::from_parts(&t * &factor, BigInt::from(surd), constants::rat(1, 2), 2);
    let free = SymbolicConstant::pi_power_halves(-2 * n).scale(&(two_pi / BigRational::from_integer(BigInt::from(2 * d.k()))));
    let partial = free
        .checked_mul(&constants::sphere_area(d.n())?)
        .ok_or_else(|| Error::NotExact("incompatible bases".into()))?;
    partial.checked_mul(&beta).ok_or_else(|| Error::NotExact("incompatible bases".into()))
}

pub fn l2_norm_sq(d: DimensionPair) -> Result<L2Routes> {
    let plancherel = plancherel_l2(d)?;
    let kernel = gamma_fn(d);
    let n = d.n() as i32;
    let end = tail_radius(&kernel) / 2.0 + 5.0;
    let omega = constants::sphere_area(d.n())?.to_f64();
    let res = quad::integrate_with_breaks(
        |r| {
            if r == 0.0 {
                0.0
            } else {
                let g = kernel.eval(r);
                r.powi(n - 1) * g * g
            }
        },
        0.0,
        end,
        &radial_breaks(&kernel, end),
        QuadOptions { abs_tol: 1e-16, rel_tol: 1e-12, max_intervals: 20000 },
    );
    if !res.converged {
        return Err(Error::Quadrature(format!("∫Γ² for {d}: error estimate {:e}", res.error)));
    }
    Ok(L2Routes { quadrature: omega * res.value, quadrature_error: omega * res.error, plancherel })
}

/// `lim_{r→0} r^{n-2k} Γ_α(r)`, extrapolated by a least-squares fit of the
/// small-radius expansion over `r ∈ [1e-2, 1e-1]`.
pub fn singular_limit(kernel: &BesselKernelSum, alpha: f64) -> f64 {
    let d = kernel.d;
    let gap = d.gap() as i32;
    let pts: Vec<f64> = (0..41).map(|i| 1e-2 * 10f64.powf(i as f64 / 40.0)).collect();
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    for &r in &pts {
        let s = r / 0.1;
        let mut row = vec![1.0];
        for j in 1..=6 {
            row.push(s.powi(j));
        }
        if d.n() % 2 == 0 {
            let mut j = gap;
            while j <= 6 {
                row.push(s.powi(j) * s.ln());
                j += 2;
            }
        }
        rows.push(row);
        ys.push(r.powi(gap) * gamma_alpha(kernel, alpha, r));
    }
    fit::least_squares(&rows, &ys, None).coef[0]
}

/// Effective power-law exponent `q` of the envelope between two radii:
/// `envelope(r2)/envelope(r1) = (r2/r1)^{-q}` after removing `|x|^{2k-n}`.
pub fn envelope_decay_exponent(kernel: &BesselKernelSum, alpha: f64, r1: f64, r2: f64) -> f64 {
    let gap = kernel.d.gap() as f64;
    let e1 = kernel.envelope(alpha * r1) * r1.powf(gap);
    let e2 = kernel.envelope(alpha * r2) * r2.powf(gap);
    -(e2 / e1).ln() / (r2 / r1).ln()
}

/// `c_U = ∫ U^{2⋆-1}` as a float (exact value in [`crate::radial::c_u_constant`]).
pub fn c_u_value(d: DimensionPair) -> f64 {
    crate::radial::c_u_constant(d).to_f64()
}
