//! Exact closed-form constants: the dimension pair, the product `Π`, the
//! bubble scale, half-integer Gamma/Beta values and the sharp constant.

use std::fmt;
use std::ops::{Div, Mul};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Space dimension `n` and operator half-order `k` with `2 <= 2k < n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DimensionPair {
    n: u32,
    k: u32,
}

impl DimensionPair {
    pub fn new(n: i64, k: i64) -> Result<Self> {
        if k >= 1 && n >= 3 && 2 * k < n && n <= u32::MAX as i64 {
            Ok(DimensionPair { n: n as u32, k: k as u32 })
        } else {
            Err(Error::InvalidDimension { n, k })
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// `n - 2k`, the homogeneity degree of the bubble's decay.
    pub fn gap(&self) -> u32 {
        self.n - 2 * self.k
    }

    /// `Π = ∏_{j=-k}^{k-1} (n + 2j)`.
    pub fn pi_product(&self) -> BigInt {
        let (n, k) = (self.n as i64, self.k as i64);
        (-k..k).map(|j| BigInt::from(n + 2 * j)).product()
    }

    /// Every valid pair with `n <= n_max`.
    pub fn all_up_to(n_max: u32) -> Vec<DimensionPair> {
        let mut out = Vec::new();
        for n in 3..=n_max {
            for k in 1..=n {
                if 2 * k < n {
                    out.push(DimensionPair { n, k });
                }
            }
        }
        out
    }
}

impl fmt::Display for DimensionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, k={})", self.n, self.k)
    }
}

pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

fn rat_int(p: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(p))
}

fn exact_root(x: &BigRational, root: u32) -> Option<BigRational> {
    if root == 1 {
        return Some(x.clone());
    }
    if x.is_negative() && root % 2 == 0 {
        return None;
    }
    let take = |v: &BigInt| -> Option<BigInt> {
        let r = v.nth_root(root);
        (r.pow(root) == *v).then_some(r)
    };
    Some(BigRational::new(take(x.numer())?, take(x.denom())?))
}

fn rational_pow(x: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        num_traits::pow(x.clone(), e as usize)
    } else {
        num_traits::pow(x.recip(), (-e) as usize)
    }
}

/// `mantissa · base^base_exponent · π^(pi_halves/2)`.
///
/// The base is `Π` of the ambient dimension pair (or 1 for constants that do
/// not involve it). The π power is an integer plus an optional `√π`.
#[derive(Clone, Debug)]
pub struct SymbolicConstant {
    mantissa: BigRational,
    base: BigInt,
    base_exponent: BigRational,
    pi_halves: i64,
}

impl SymbolicConstant {
    pub fn rational(q: BigRational) -> Self {
        SymbolicConstant {
            mantissa: q,
            base: BigInt::one(),
            base_exponent: BigRational::zero(),
            pi_halves: 0,
        }
        .normalized()
    }

    pub fn one() -> Self {
        Self::rational(BigRational::one())
    }

    pub fn from_parts(mantissa: BigRational, base: BigInt, base_exponent: BigRational, pi_halves: i64) -> Self {
        SymbolicConstant { mantissa, base, base_exponent, pi_halves }.normalized()
    }

    /// `Π^e` for the pair's product.
    pub fn pi_product_power(d: DimensionPair, e: BigRational) -> Self {
        Self::from_parts(BigRational::one(), d.pi_product(), e, 0)
    }

    /// `π^(halves/2)`.
    pub fn pi_power_halves(halves: i64) -> Self {
        Self::from_parts(BigRational::one(), BigInt::one(), BigRational::zero(), halves)
    }

    fn normalized(mut self) -> Self {
        if self.mantissa.is_zero() {
            self.base_exponent = BigRational::zero();
            self.pi_halves = 0;
        }
        if self.base.is_one() {
            self.base_exponent = BigRational::zero();
        }
        // fold integer powers of the base into the mantissa; the base itself
        // is kept so that later rational powers can unfold it again
        let whole = self.base_exponent.floor();
        if !whole.is_zero() {
            let w = whole.to_integer().to_i64().expect("base exponent fits in i64");
            self.mantissa *= rational_pow(&BigRational::from_integer(self.base.clone()), w);
            self.base_exponent -= whole;
        }
        self
    }

    pub fn mantissa(&self) -> &BigRational {
        &self.mantissa
    }

    pub fn base(&self) -> &BigInt {
        &self.base
    }

    /// Fractional part of the exponent of `Π` (integer parts live in the mantissa).
    pub fn base_exponent(&self) -> &BigRational {
        &self.base_exponent
    }

    /// Integer part of the exponent of π.
    pub fn pi_exponent(&self) -> i64 {
        self.pi_halves.div_euclid(2)
    }

    pub fn has_sqrt_pi(&self) -> bool {
        self.pi_halves.rem_euclid(2) == 1
    }

    pub fn pi_halves(&self) -> i64 {
        self.pi_halves
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.base_exponent.is_zero() && self.pi_halves == 0
    }

    pub fn to_f64(&self) -> f64 {
        let m = self.mantissa.to_f64().unwrap_or(f64::NAN);
        let b = self.base.to_f64().unwrap_or(f64::NAN);
        let e = self.base_exponent.to_f64().unwrap_or(f64::NAN);
        m * b.powf(e) * std::f64::consts::PI.powf(self.pi_halves as f64 / 2.0)
    }

    fn merged_base(&self, other: &Self) -> Option<BigInt> {
        if self.base == other.base || other.base_exponent.is_zero() && other.base.is_one() {
            Some(self.base.clone())
        } else if self.base_exponent.is_zero() && self.base.is_one() {
            Some(other.base.clone())
        } else if other.base_exponent.is_zero() {
            Some(self.base.clone())
        } else if self.base_exponent.is_zero() {
            Some(other.base.clone())
        } else {
            None
        }
    }

    pub fn checked_mul(&self, o: &Self) -> Option<Self> {
        let base = self.merged_base(o)?;
        Some(Self::from_parts(
            &self.mantissa * &o.mantissa,
            base,
            &self.base_exponent + &o.base_exponent,
            self.pi_halves + o.pi_halves,
        ))
    }

    pub fn recip(&self) -> Self {
        Self::from_parts(
            self.mantissa.recip(),
            self.base.clone(),
            -self.base_exponent.clone(),
            -self.pi_halves,
        )
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        let mut out = self.clone();
        out.mantissa *= q;
        out.normalized()
    }

    /// Sum of two constants sharing the same irrational factor.
    pub fn checked_add(&self, o: &Self) -> Option<Self> {
        if self.is_zero() {
            return Some(o.clone());
        }
        if o.is_zero() {
            return Some(self.clone());
        }
        let same = self.pi_halves == o.pi_halves
            && self.base_exponent == o.base_exponent
            && (self.base == o.base || self.base_exponent.is_zero());
        let base = self.merged_base(o)?;
        same.then(|| {
            Self::from_parts(
                &self.mantissa + &o.mantissa,
                base,
                self.base_exponent.clone(),
                self.pi_halves,
            )
        })
    }

    /// Mantissa and full base exponent after pulling every whole power of the
    /// base out of the mantissa, so `Π^{-1/2}` reads as such rather than
    /// `(1/Π)·Π^{1/2}`.
    pub fn unfolded(&self) -> (BigRational, BigRational) {
        let mut m = self.mantissa.clone();
        let mut e = self.base_exponent.clone();
        if self.base.is_one() || m.is_zero() {
            return (m, e);
        }
        let b = BigRational::from_integer(self.base.clone());
        while (m.numer() % self.base.clone()).is_zero() {
            m /= &b;
            e += BigRational::one();
        }
        while (m.denom() % self.base.clone()).is_zero() {
            m *= &b;
            e -= BigRational::one();
        }
        (m, e)
    }

    /// Exact rational power; fails when the mantissa root is irrational or
    /// the π exponent leaves the half-integers.
    pub fn pow(&self, e: &BigRational) -> Result<Self> {
        let p = e.numer().to_i64().ok_or_else(|| Error::NotExact("exponent too large".into()))?;
        let q = e.denom().to_u32().ok_or_else(|| Error::NotExact("exponent too large".into()))?;
        let (m, be) = self.unfolded();
        let powered = rational_pow(&m, p);
        let mantissa = exact_root(&powered, q)
            .ok_or_else(|| Error::NotExact(format!("({})^({}) is irrational", self.mantissa, e)))?;
        let halves = rat_int(self.pi_halves) * e;
        if !halves.is_integer() {
            return Err(Error::NotExact(format!("π^({}/2) to the power {}", self.pi_halves, e)));
        }
        let pi_halves = halves.to_integer().to_i64().expect("π exponent fits in i64");
        Ok(Self::from_parts(mantissa, self.base.clone(), &be * e, pi_halves))
    }
}

impl PartialEq for SymbolicConstant {
    fn eq(&self, o: &Self) -> bool {
        self.mantissa == o.mantissa
            && self.pi_halves == o.pi_halves
            && self.base_exponent == o.base_exponent
            && (self.base_exponent.is_zero() || self.base == o.base)
    }
}

impl Mul for &SymbolicConstant {
    type Output = SymbolicConstant;
    /// Panics when the operands carry different bases `Π`.
    fn mul(self, o: &SymbolicConstant) -> SymbolicConstant {
        self.checked_mul(o).expect("constants from different dimension pairs")
    }
}

impl Div for &SymbolicConstant {
    type Output = SymbolicConstant;
    fn div(self, o: &SymbolicConstant) -> SymbolicConstant {
        self * &o.recip()
    }
}

impl fmt::Display for SymbolicConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (m, e) = self.unfolded();
        let mut parts: Vec<String> = Vec::new();
        if !m.is_one() || (e.is_zero() && self.pi_halves == 0) {
            parts.push(m.to_string());
        }
        if !e.is_zero() {
            parts.push(format!("{}^{{{}}}", self.base, e));
        }
        match self.pi_halves {
            0 => {}
            1 => parts.push("√π".into()),
            2 => parts.push("π".into()),
            h if h % 2 == 0 => parts.push(format!("π^{{{}}}", h / 2)),
            h => parts.push(format!("π^{{{}/2}}", h)),
        }
        write!(f, "{}", parts.join("·"))
    }
}

/// `2⋆ = 2n/(n-2k)`.
pub fn critical_exponent(d: DimensionPair) -> BigRational {
    rat(2 * d.n as i64, d.gap() as i64)
}

/// `a_{n,k} = Π^{-1/k}`.
pub fn bubble_scale(d: DimensionPair) -> SymbolicConstant {
    SymbolicConstant::pi_product_power(d, rat(-1, d.k as i64))
}

/// `c_{n,k} = k(3n(n-2) - 4(k²-1)) / (12n(n-1))`.
pub fn c_small(d: DimensionPair) -> BigRational {
    let (n, k) = (d.n as i64, d.k as i64);
    rat(k * (3 * n * (n - 2) - 4 * (k * k - 1)), 12 * n * (n - 1))
}

fn factorial(m: i64) -> BigInt {
    (1..=m).map(BigInt::from).product()
}

/// `Γ(x)` for `x = twice/2 > 0`, exactly.
pub fn gamma_half(twice: i64) -> Result<SymbolicConstant> {
    if twice <= 0 {
        return Err(Error::Input(format!("Gamma at non-positive argument {twice}/2")));
    }
    if twice % 2 == 0 {
        return Ok(SymbolicConstant::rational(BigRational::from_integer(factorial(twice / 2 - 1))));
    }
    // Γ(m + 1/2) = (2m)! / (4^m m!) · √π
    let m = (twice - 1) / 2;
    let q = BigRational::new(factorial(2 * m), BigInt::from(4).pow(m as u32) * factorial(m));
    Ok(SymbolicConstant::from_parts(q, BigInt::one(), BigRational::zero(), 1))
}

/// `B(p, q)` for half-integer arguments `p = tp/2`, `q = tq/2`.
pub fn beta_half(tp: i64, tq: i64) -> Result<SymbolicConstant> {
    let num = &gamma_half(tp)? * &gamma_half(tq)?;
    Ok(&num / &gamma_half(tp + tq)?)
}

/// `ω_{n-1} = 2π^{n/2}/Γ(n/2)`, the area of the unit sphere in ℝⁿ.
pub fn sphere_area(n: u32) -> Result<SymbolicConstant> {
    if n < 2 {
        return Err(Error::Input(format!("sphere area needs n >= 2, got {n}")));
    }
    let top = SymbolicConstant::from_parts(rat_int(2), BigInt::one(), BigRational::zero(), n as i64);
    Ok(&top / &gamma_half(n as i64)?)
}

/// `C_{n,k} = Γ(n/2-k) / (2^{2k}(k-1)! π^{n/2})`, the singular coefficient of
/// the fundamental solution.
pub fn c_green(d: DimensionPair) -> SymbolicConstant {
    let g = gamma_half(d.gap() as i64).expect("n > 2k");
    let denom = BigRational::from_integer(BigInt::from(4).pow(d.k) * factorial(d.k as i64 - 1));
    let pi = SymbolicConstant::pi_power_halves(-(d.n as i64));
    (&g * &pi).scale(&denom.recip())
}

/// `∫_0^∞ r^{n-1} r^{2j} (1 + a r²)^{-m} dr` with `m = twice_m/2`.
pub fn radial_moment(j: u32, twice_m: i64, a: &SymbolicConstant, d: DimensionPair) -> Result<SymbolicConstant> {
    let tp = d.n as i64 + 2 * j as i64;
    let tq = twice_m - tp;
    if tq <= 0 {
        return Err(Error::Divergent(format!(
            "r^{}·(1+ar²)^(-{}/2) is not integrable at infinity in dimension {}",
            2 * j,
            twice_m,
            d.n
        )));
    }
    let a_pow = a.pow(&rat(-tp, 2))?;
    let b = beta_half(tp, tq)?;
    Ok((&a_pow * &b).scale(&rat(1, 2)))
}

/// `∫_{ℝⁿ} U^{2⋆} dx = ω_{n-1}·radial_moment(0, n, a_{n,k})`.
pub fn bubble_critical_mass(d: DimensionPair) -> SymbolicConstant {
    let a = bubble_scale(d);
    let m = radial_moment(0, 2 * d.n as i64, &a, d).expect("m = n always converges");
    &sphere_area(d.n).expect("n >= 3") * &m
}

/// The sharp Euclidean constant with its exact ingredient.
#[derive(Clone, Debug)]
pub struct SharpConstant {
    /// `∫ U^{2⋆}`, exact.
    pub critical_mass: SymbolicConstant,
    /// `K(n,k) = (∫ U^{2⋆})^{-2k/n}`.
    pub value: f64,
}

pub fn sharp_constant(d: DimensionPair) -> SharpConstant {
    let critical_mass = bubble_critical_mass(d);
    let value = critical_mass.to_f64().powf(-2.0 * d.k as f64 / d.n as f64);
    SharpConstant { critical_mass, value }
}
