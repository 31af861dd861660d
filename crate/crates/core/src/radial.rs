//! Exact calculus on radial functions of the form
//! `a^s · r^p · P(t) / (1+t)^m`, with `t = a r²`, `p ∈ {0, 1}` and `m` a
//! half-integer.
//!
//! With `d/dr = 2 a r d/dt` the radial Laplacian becomes
//! `Δf = -a (4t f_tt + 2n f_t)`, so the class is closed and the powers of the
//! scale `a` can be tracked as a single integer.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::constants::{self, rat, DimensionPair, SymbolicConstant};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
struct Poly(Vec<BigRational>);

impl Poly {
    fn constant(c: BigRational) -> Self {
        Poly(vec![c]).trimmed()
    }

    fn one_plus_t() -> Self {
        Poly(vec![BigRational::one(), BigRational::one()])
    }

    fn t() -> Self {
        Poly(vec![BigRational::zero(), BigRational::one()])
    }

    fn trimmed(mut self) -> Self {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
        self
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    fn add(&self, o: &Poly) -> Poly {
        let len = self.0.len().max(o.0.len());
        let z = BigRational::zero();
        Poly(
            (0..len)
                .map(|i| self.0.get(i).unwrap_or(&z) + o.0.get(i).unwrap_or(&z))
                .collect(),
        )
        .trimmed()
    }

    fn scale(&self, c: &BigRational) -> Poly {
        Poly(self.0.iter().map(|x| x * c).collect()).trimmed()
    }

    fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly(vec![]);
        }
        let mut out = vec![BigRational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out).trimmed()
    }

    fn derivative(&self) -> Poly {
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
        .trimmed()
    }

    fn eval_at(&self, t: &BigRational) -> BigRational {
        self.0.iter().rev().fold(BigRational::zero(), |acc, c| acc * t + c)
    }

    fn eval(&self, t: f64) -> f64 {
        self.0
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * t + c.to_f64().unwrap_or(f64::NAN))
    }

    /// Quotient by `1 + t`, assuming exact divisibility.
    fn div_one_plus_t(&self) -> Poly {
        let d = self.0.len();
        let mut q = vec![BigRational::zero(); d - 1];
        let mut carry = BigRational::zero();
        for i in (1..d).rev() {
            let c = &self.0[i] - &carry;
            q[i - 1] = c.clone();
            carry = c;
        }
        Poly(q).trimmed()
    }

    fn times_one_plus_t_pow(&self, e: i64) -> Poly {
        (0..e).fold(self.clone(), |p, _| p.mul(&Poly::one_plus_t()))
    }
}

/// Whether the profile carries an extra factor `r`.
///
/// `OddR` profiles stand for vector fields `φ(r) x_j/r` with `φ = r ψ(t)`;
/// their "Laplacian" is the componentwise one,
/// `-φ'' - (n-1)φ'/r + (n-1)φ/r²`, which acts on `ψ` as the scalar radial
/// Laplacian of dimension `n + 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Parity {
    Even,
    OddR,
}

/// `a^{a_power} · r^{parity} · numerator(t) / (1+t)^{twice_m/2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialRational {
    numerator: Poly,
    twice_m: i64,
    a_power: i64,
    parity: Parity,
}

/// The scale `a = λ·Π^{-1/k}`; `λ = 1` is the bubble scale.
#[derive(Clone, Debug)]
pub struct Scale {
    d: DimensionPair,
    lambda: BigRational,
}

impl Scale {
    pub fn bubble(d: DimensionPair) -> Self {
        Scale { d, lambda: BigRational::one() }
    }

    pub fn perturbed(d: DimensionPair, lambda: BigRational) -> Self {
        Scale { d, lambda }
    }

    /// `a^s` when it is rational, i.e. when `k | s`.
    pub fn rational_power(&self, s: i64) -> Option<BigRational> {
        let k = self.d.k() as i64;
        if s % k != 0 {
            return None;
        }
        let pi = BigRational::from_integer(self.d.pi_product());
        let lam = self.lambda.clone();
        let pow = |x: BigRational, e: i64| {
            if e >= 0 {
                num_traits::pow(x, e as usize)
            } else {
                num_traits::pow(x.recip(), (-e) as usize)
            }
        };
        Some(pow(lam, s) * pow(pi, -s / k))
    }

    pub fn to_f64(&self) -> f64 {
        self.lambda.to_f64().unwrap_or(f64::NAN) * constants::bubble_scale(self.d).to_f64()
    }

    pub fn symbolic(&self) -> SymbolicConstant {
        constants::bubble_scale(self.d).scale(&self.lambda)
    }
}

impl RadialRational {
    /// `(1+t)^{-m}` with `m = twice_m/2`.
    pub fn base_power(twice_m: i64) -> Self {
        RadialRational {
            numerator: Poly::constant(BigRational::one()),
            twice_m,
            a_power: 0,
            parity: Parity::Even,
        }
    }

    pub fn zero() -> Self {
        RadialRational { numerator: Poly(vec![]), twice_m: 0, a_power: 0, parity: Parity::Even }
    }

    /// Build from numerator coefficients (ascending powers of `t`).
    pub fn from_coefficients(coeffs: Vec<BigRational>, twice_m: i64) -> Self {
        RadialRational { numerator: Poly(coeffs).trimmed(), twice_m, a_power: 0, parity: Parity::Even }
            .normalized()
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn twice_denominator_power(&self) -> i64 {
        self.twice_m
    }

    pub fn a_power(&self) -> i64 {
        self.a_power
    }

    pub fn numerator_degree(&self) -> Option<usize> {
        self.numerator.degree()
    }

    pub fn numerator_coefficients(&self) -> &[BigRational] {
        &self.numerator.0
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    fn normalized(mut self) -> Self {
        if self.numerator.is_zero() {
            return RadialRational::zero();
        }
        let minus_one = -BigRational::one();
        while self.numerator.degree().unwrap_or(0) > 0 && self.numerator.eval_at(&minus_one).is_zero() {
            self.numerator = self.numerator.div_one_plus_t();
            self.twice_m -= 2;
        }
        self
    }

    pub fn scaled(&self, c: &BigRational) -> Self {
        RadialRational { numerator: self.numerator.scale(c), ..self.clone() }.normalized()
    }

    /// Multiply by `a^s` symbolically.
    pub fn with_a_power(&self, s: i64) -> Self {
        RadialRational { a_power: self.a_power + s, ..self.clone() }
    }

    fn with_twice_m(&self, twice_m: i64) -> Result<Self> {
        let diff = twice_m - self.twice_m;
        if diff < 0 || diff % 2 != 0 {
            return Err(Error::NotExact(format!(
                "cannot write (1+t)^(-{}/2) over (1+t)^(-{}/2)",
                self.twice_m, twice_m
            )));
        }
        Ok(RadialRational {
            numerator: self.numerator.times_one_plus_t_pow(diff / 2),
            twice_m,
            ..self.clone()
        })
    }

    fn with_a_power_aligned(&self, target: i64, scale: &Scale) -> Result<Self> {
        let q = scale
            .rational_power(self.a_power - target)
            .ok_or_else(|| Error::NotExact(format!("a^{} is irrational", self.a_power - target)))?;
        Ok(RadialRational { numerator: self.numerator.scale(&q), a_power: target, ..self.clone() })
    }

    pub fn add(&self, o: &Self, scale: &Scale) -> Result<Self> {
        if self.is_zero() {
            return Ok(o.clone());
        }
        if o.is_zero() {
            return Ok(self.clone());
        }
        if self.parity != o.parity {
            return Err(Error::Input("adding profiles of different parity".into()));
        }
        let a_power = self.a_power.min(o.a_power);
        let x = self.with_a_power_aligned(a_power, scale)?;
        let y = o.with_a_power_aligned(a_power, scale)?;
        let m = x.twice_m.max(y.twice_m);
        let x = x.with_twice_m(m)?;
        let y = y.with_twice_m(m)?;
        Ok(RadialRational { numerator: x.numerator.add(&y.numerator), ..x }.normalized())
    }

    pub fn sub(&self, o: &Self, scale: &Scale) -> Result<Self> {
        self.add(&o.scaled(&-BigRational::one()), scale)
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut numerator = self.numerator.mul(&o.numerator);
        let mut a_power = self.a_power + o.a_power;
        let parity = match (self.parity, o.parity) {
            (Parity::Even, Parity::Even) => Parity::Even,
            (Parity::OddR, Parity::OddR) => {
                // r² = t/a
                numerator = numerator.mul(&Poly::t());
                a_power -= 1;
                Parity::Even
            }
            _ => Parity::OddR,
        };
        RadialRational { numerator, twice_m: self.twice_m + o.twice_m, a_power, parity }.normalized()
    }

    pub fn square(&self) -> Self {
        self.mul(self)
    }

    /// `d/dt` of the `t`-part, keeping parity and scale power.
    fn d_dt(&self) -> Self {
        // (P (1+t)^{-m})' = (P'(1+t) - m P) (1+t)^{-m-1}
        let m = BigRational::new(BigInt::from(self.twice_m), BigInt::from(2));
        let p = self
            .numerator
            .derivative()
            .mul(&Poly::one_plus_t())
            .add(&self.numerator.scale(&-m));
        RadialRational { numerator: p, twice_m: self.twice_m + 2, ..self.clone() }
    }

    fn t_times(&self) -> Self {
        RadialRational { numerator: self.numerator.mul(&Poly::t()), ..self.clone() }
    }

    /// `-a (4t f_tt + 2N f_t)` on the `t`-part with the given effective dimension.
    fn radial_operator(&self, dim: u32) -> Self {
        let ft = self.d_dt();
        let ftt = ft.d_dt();
        let lhs = ftt.t_times().numerator.scale(&BigRational::from_integer(BigInt::from(4)));
        let rhs = ft
            .with_twice_m(ftt.twice_m)
            .expect("one extra power")
            .numerator
            .scale(&BigRational::from_integer(BigInt::from(2 * dim as i64)));
        RadialRational {
            numerator: lhs.add(&rhs).scale(&-BigRational::one()),
            twice_m: ftt.twice_m,
            a_power: self.a_power + 1,
            parity: self.parity,
        }
        .normalized()
    }

    /// Radial Laplacian `-f'' - (n-1)f'/r`; for [`Parity::OddR`] the
    /// componentwise vector Laplacian of `φ(r) x_j/r`.
    pub fn laplacian(&self, n: u32) -> Self {
        match self.parity {
            Parity::Even => self.radial_operator(n),
            Parity::OddR => self.radial_operator(n + 2),
        }
    }

    pub fn laplacian_pow(&self, n: u32, times: u32) -> Self {
        (0..times).fold(self.clone(), |f, _| f.laplacian(n))
    }

    /// `d/dr`: even profiles map to `r·ψ`, odd ones back to even.
    pub fn radial_derivative(&self) -> Self {
        let ft = self.d_dt();
        match self.parity {
            // f_r = 2 a r f_t
            Parity::Even => RadialRational {
                numerator: ft.numerator.scale(&rat(2, 1)),
                a_power: self.a_power + 1,
                parity: Parity::OddR,
                ..ft
            }
            .normalized(),
            // (r ψ)_r = ψ + 2t ψ_t
            Parity::OddR => {
                let base = RadialRational { parity: Parity::Even, ..self.clone() };
                let two_t_ft = RadialRational { parity: Parity::Even, ..ft.t_times() }.scaled(&rat(2, 1));
                let m = two_t_ft.twice_m;
                let b = base.with_twice_m(m).expect("one extra power");
                RadialRational { numerator: b.numerator.add(&two_t_ft.numerator), ..b }.normalized()
            }
        }
    }

    /// `r ∂_r f = 2t f_t` for even profiles.
    pub fn euler_derivative(&self) -> Result<Self> {
        if self.parity != Parity::Even {
            return Err(Error::Input("Euler derivative of an odd profile".into()));
        }
        Ok(self.d_dt().t_times().scaled(&rat(2, 1)))
    }

    /// Value of the `t`-part `P(t)/(1+t)^m` (no scale or `r` factors).
    pub fn eval_t(&self, t: f64) -> f64 {
        self.numerator.eval(t) * (1.0 + t).powf(-(self.twice_m as f64) / 2.0)
    }

    /// Value at radius `r` for numeric scale `a`.
    pub fn eval_r(&self, r: f64, a: f64) -> f64 {
        let t = a * r * r;
        let base = a.powi(self.a_power as i32) * self.eval_t(t);
        match self.parity {
            Parity::Even => base,
            Parity::OddR => base * r,
        }
    }

    fn terms(&self) -> Vec<String> {
        self.numerator
            .0
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| format!("{}·t^{}/(1+t)^({}/2)·a^{}", c, i, self.twice_m, self.a_power))
            .collect()
    }
}

impl fmt::Display for RadialRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let r = if self.parity == Parity::OddR { "r·" } else { "" };
        write!(f, "a^{}·{}({})/(1+t)^({}/2)", self.a_power, r, self.terms().join(" + "), self.twice_m)
    }
}

/// The bubble `U = (1+t)^{-(n-2k)/2}`.
pub fn bubble_fn(d: DimensionPair) -> RadialRational {
    RadialRational::base_power(d.gap() as i64)
}

/// `∫_{ℝⁿ} r^{2w} f dx`, exactly, at the bubble scale.
pub fn energy_integral(f: &RadialRational, d: DimensionPair, weight_power: u32) -> Result<SymbolicConstant> {
    if f.parity != Parity::Even {
        return Err(Error::NotExact("integral of an odd profile".into()));
    }
    let a = constants::bubble_scale(d);
    let mut sum = SymbolicConstant::rational(BigRational::zero());
    for (i, c) in f.numerator.0.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let moment = constants::radial_moment(i as u32 + weight_power, f.twice_m, &a, d)?;
        let a_pow = a.pow(&BigRational::from_integer(BigInt::from(f.a_power + i as i64)))?;
        let term = (&a_pow * &moment).scale(c);
        sum = sum
            .checked_add(&term)
            .ok_or_else(|| Error::NotExact("moments with different irrational factors".into()))?;
    }
    Ok(&constants::sphere_area(d.n())? * &sum)
}

/// Which definition produced a [`HalfEnergy`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EnergyKind {
    /// `∫ (Δ^{(k-1)/2} U)²`, for `n > 2k + 2`.
    Integral,
    /// Coefficient of the logarithmic divergence, for `n = 2k + 2`.
    LogCoefficient,
}

#[derive(Clone, Debug)]
pub struct HalfEnergy {
    pub value: SymbolicConstant,
    pub kind: EnergyKind,
}

/// Profile whose square integrates to the half-Laplacian energy:
/// `Δ^l U` for `k - 1 = 2l` and `∂_r Δ^l U` for `k - 1 = 2l + 1`.
pub fn half_laplacian_profile(d: DimensionPair) -> RadialRational {
    let u = bubble_fn(d);
    let l = (d.k() - 1) / 2;
    let g = u.laplacian_pow(d.n(), l);
    if (d.k() - 1) % 2 == 1 {
        g.radial_derivative()
    } else {
        g
    }
}

/// The energy constant multiplying `θ_ε` in the test-function expansion.
///
/// For `n = 2k + 2` the integral diverges logarithmically; the returned value
/// is `ω_{n-1} · lim_{r→∞} rⁿ (Δ^{(k-1)/2} U)²`, the coefficient of
/// `ln(1/ε)` in the truncated integral.
pub fn half_laplacian_energy(d: DimensionPair) -> Result<HalfEnergy> {
    let sq = half_laplacian_profile(d).square();
    if d.n() > 2 * d.k() + 2 {
        return Ok(HalfEnergy { value: energy_integral(&sq, d, 0)?, kind: EnergyKind::Integral });
    }
    if d.n() < 2 * d.k() + 2 {
        return Err(Error::Divergent(format!("half-Laplacian energy needs n >= 2k+2, got {d}")));
    }
    // rⁿ·a^s P(t)/(1+t)^M = a^{s-n/2} tⁿ/² P(t)/(1+t)^M → a^{s-n/2}·lead(P)
    let deg = sq.numerator.degree().unwrap_or(0) as i64;
    if 2 * deg + d.n() as i64 != sq.twice_m {
        return Err(Error::Input("unexpected decay of the half-Laplacian profile".into()));
    }
    let lead = sq.numerator.0.last().cloned().unwrap_or_default();
    let a = constants::bubble_scale(d);
    let a_pow = a.pow(&(BigRational::from_integer(BigInt::from(sq.a_power)) - rat(d.n() as i64, 2)))?;
    let value = &constants::sphere_area(d.n())? * &a_pow.scale(&lead);
    Ok(HalfEnergy { value, kind: EnergyKind::LogCoefficient })
}

/// Outcome of an exact identity check.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub identity: String,
    pub n: u32,
    pub k: u32,
    pub residual_zero: bool,
    pub residual_terms: Vec<String>,
}

fn certificate(identity: &str, d: DimensionPair, residual: &RadialRational) -> Certificate {
    Certificate {
        identity: identity.to_string(),
        n: d.n(),
        k: d.k(),
        residual_zero: residual.is_zero(),
        residual_terms: residual.terms(),
    }
}

/// `Δ^k U - U^{2⋆-1}` at the given scale.
pub fn bubble_residual(d: DimensionPair, scale: &Scale) -> Result<RadialRational> {
    let lhs = bubble_fn(d).laplacian_pow(d.n(), d.k());
    let rhs = RadialRational::base_power((d.n() + 2 * d.k()) as i64);
    lhs.sub(&rhs, scale)
}

pub fn verify_bubble_identity(d: DimensionPair) -> Result<Certificate> {
    let res = bubble_residual(d, &Scale::bubble(d))?;
    Ok(certificate("bubble: Δ^k U = U^(2*-1)", d, &res))
}

/// Dilation and translation generators of the linearized kernel.
#[derive(Clone, Debug)]
pub struct KernelElements {
    /// `Z⁰ = y·∇U + (n-2k)/2 U`.
    pub dilation: RadialRational,
    /// Radial profile `∂_r U`, so that `Z^j = ∂_r U · y_j/|y|`.
    pub translation: RadialRational,
}

pub fn kernel_elements(d: DimensionPair) -> KernelElements {
    let u = bubble_fn(d);
    let half_gap = rat(d.gap() as i64, 2);
    let dilation = u
        .euler_derivative()
        .expect("bubble is even")
        .add(&u.scaled(&half_gap), &Scale::bubble(d))
        .expect("same class");
    KernelElements { dilation, translation: u.radial_derivative() }
}

/// `Δ^k Z - c·U^{2⋆-2} Z` for a kernel candidate `Z`.
pub fn kernel_residual(d: DimensionPair, z: &RadialRational, coefficient: &BigRational) -> Result<RadialRational> {
    let lhs = z.laplacian_pow(d.n(), d.k());
    let potential = RadialRational::base_power(4 * d.k() as i64).scaled(coefficient);
    lhs.sub(&potential.mul(z), &Scale::bubble(d))
}

/// Both kernel identities with the linearized coefficient `2⋆ - 1`.
pub fn verify_kernel_identity(d: DimensionPair) -> Result<[Certificate; 2]> {
    let ke = kernel_elements(d);
    let c = constants::critical_exponent(d) - BigRational::one();
    let r0 = kernel_residual(d, &ke.dilation, &c)?;
    let rj = kernel_residual(d, &ke.translation, &c)?;
    Ok([
        certificate("kernel: Δ^k Z0 = (2*-1) U^(2*-2) Z0", d, &r0),
        certificate("kernel: Δ^k Zj = (2*-1) U^(2*-2) Zj", d, &rj),
    ])
}

/// `∫ Z⁰ U^{2⋆-1} dx`, which vanishes by scaling invariance of `∫ U^{2⋆}`.
pub fn dilation_moment(d: DimensionPair) -> Result<SymbolicConstant> {
    let z0 = kernel_elements(d).dilation;
    let f = z0.mul(&RadialRational::base_power((d.n() + 2 * d.k()) as i64));
    energy_integral(&f, d, 0)
}

/// `∫ U^{2⋆-1} dx`, the far-field weight of the rescaled solutions.
pub fn c_u_constant(d: DimensionPair) -> SymbolicConstant {
    energy_integral(&RadialRational::base_power((d.n() + 2 * d.k()) as i64), d, 0)
        .expect("(n+2k)/2 > n/2 always converges")
}

/// `∫ U² dx`, finite only for `n > 4k`.
pub fn bubble_l2(d: DimensionPair) -> Result<SymbolicConstant> {
    energy_integral(&bubble_fn(d).square(), d, 0)
}

pub fn is_sign_positive(c: &SymbolicConstant) -> bool {
    c.mantissa().is_positive()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(n: i64, k: i64) -> DimensionPair {
        DimensionPair::new(n, k).unwrap()
    }

    #[test]
    fn bubble_profile_values() {
        let d = pair(3, 1);
        let u = bubble_fn(d);
        assert_eq!(u.eval_t(0.0), 1.0);
        assert_eq!(u.twice_denominator_power(), 1);
        // a = 1/3, r = √3 → t = 1
        let v = u.eval_r(3f64.sqrt(), 1.0 / 3.0);
        assert!((v - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let one = RadialRational::base_power(0);
        assert!(one.laplacian(5).is_zero());
    }

    #[test]
    fn k_one_bubble_laplacian() {
        // Δ(1+t)^{-(n-2)/2} = a n(n-2) (1+t)^{-(n+2)/2}
        for n in 3..10u32 {
            let f = RadialRational::base_power(n as i64 - 2).laplacian(n);
            let expect = RadialRational::base_power(n as i64 + 2)
                .scaled(&rat((n * (n - 2)) as i64, 1))
                .with_a_power(1);
            assert_eq!(f, expect, "n={n}");
        }
    }

    #[test]
    fn identities_hold_at_five_two_and_seven_three() {
        for (n, k) in [(5, 2), (7, 3)] {
            assert!(verify_bubble_identity(pair(n, k)).unwrap().residual_zero);
        }
    }

    #[test]
    fn perturbed_scale_breaks_identity() {
        let d = pair(5, 2);
        let res = bubble_residual(d, &Scale::perturbed(d, rat(101, 100))).unwrap();
        assert!(!res.is_zero());
    }

    #[test]
    fn kernel_identity_examples() {
        let [z0, _] = verify_kernel_identity(pair(5, 2)).unwrap();
        assert!(z0.residual_zero);
        let [_, zj] = verify_kernel_identity(pair(6, 2)).unwrap();
        assert!(zj.residual_zero);
    }

    #[test]
    fn wrong_eigenvalue_is_detected() {
        let d = pair(5, 2);
        let ke = kernel_elements(d);
        let c = constants::critical_exponent(d) - rat(2, 1);
        assert!(!kernel_residual(d, &ke.dilation, &c).unwrap().is_zero());
        assert!(!kernel_residual(d, &ke.translation, &c).unwrap().is_zero());
    }

    #[test]
    fn dilation_generator_shape() {
        let d = pair(7, 2);
        let z0 = kernel_elements(d).dilation;
        assert_eq!(z0.eval_t(0.0), 1.5);
        // Z⁰ = (1+t)^{-(n-2k)/2 - 1}·((n-2k)/2 - (n-2k)/2 t): decays like |y|^{2k-n}
        assert_eq!(z0.twice_denominator_power(), d.gap() as i64 + 2);
        assert_eq!(z0.numerator_degree(), Some(1));
    }

    #[test]
    fn dilation_is_orthogonal_to_critical_power() {
        for (n, k) in [(5, 2), (6, 2), (7, 3), (3, 1)] {
            assert!(dilation_moment(pair(n, k)).unwrap().is_zero());
        }
    }

    #[test]
    fn l2_of_bubble_follows_beta_formula_and_diverges_below_4k() {
        let d = pair(9, 2);
        let got = bubble_l2(d).unwrap();
        let a = constants::bubble_scale(d);
        let m = constants::radial_moment(0, 2 * d.gap() as i64, &a, d).unwrap();
        let expect = &constants::sphere_area(9).unwrap() * &m;
        assert_eq!(got, expect);
        assert!(matches!(bubble_l2(pair(8, 2)), Err(Error::Divergent(_))));
        assert!(matches!(bubble_l2(pair(5, 2)), Err(Error::Divergent(_))));
    }

    #[test]
    fn k_one_energy_is_l2() {
        let d = pair(7, 1);
        let e = half_laplacian_energy(d).unwrap();
        assert_eq!(e.kind, EnergyKind::Integral);
        assert_eq!(e.value, bubble_l2(d).unwrap());
    }

    #[test]
    fn log_coefficient_exists_in_critical_dimension() {
        let e = half_laplacian_energy(pair(6, 2)).unwrap();
        assert_eq!(e.kind, EnergyKind::LogCoefficient);
        assert!(e.value.to_f64() > 0.0);
    }
}
