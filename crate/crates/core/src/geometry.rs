//! Model manifolds with closed-form geometry: round spheres and flat tori.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{self, DimensionPair};
use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelManifold {
    Sphere {
        n: u32,
        #[serde(default = "unit")]
        radius: f64,
    },
    Torus {
        n: u32,
        /// One period per axis; empty means `2π` on every axis.
        #[serde(default)]
        periods: Vec<f64>,
    },
}

fn unit() -> f64 {
    1.0
}

impl ModelManifold {
    pub fn sphere(n: u32, radius: f64) -> Self {
        ModelManifold::Sphere { n, radius }
    }

    /// Cubic torus `ℝⁿ/(period·ℤ)ⁿ`.
    pub fn torus(n: u32, period: f64) -> Self {
        ModelManifold::Torus { n, periods: vec![period; n as usize] }
    }

    pub fn dim(&self) -> u32 {
        match *self {
            ModelManifold::Sphere { n, .. } | ModelManifold::Torus { n, .. } => n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelManifold::Sphere { n, radius } if *n >= 2 && *radius > 0.0 => Ok(()),
            ModelManifold::Torus { n, periods }
                if *n >= 1 && (periods.is_empty() || periods.len() == *n as usize) && periods.iter().all(|p| *p > 0.0) =>
            {
                Ok(())
            }
            m => Err(Error::Input(format!("invalid manifold {m:?}"))),
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self, ModelManifold::Torus { .. })
    }

    pub fn scalar_curvature(&self) -> f64 {
        match *self {
            ModelManifold::Sphere { n, radius } => (n * (n - 1)) as f64 / (radius * radius),
            ModelManifold::Torus { .. } => 0.0,
        }
    }

    /// `λ` with `Ric = λ g`.
    pub fn einstein_constant(&self) -> f64 {
        match *self {
            ModelManifold::Sphere { n, radius } => (n - 1) as f64 / (radius * radius),
            ModelManifold::Torus { .. } => 0.0,
        }
    }

    pub fn injectivity_radius(&self) -> f64 {
        match self {
            ModelManifold::Sphere { radius, .. } => PI * radius,
            ModelManifold::Torus { periods, .. } => 0.5 * periods.iter().copied().fold(2.0 * PI, f64::min),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            ModelManifold::Sphere { n, radius } => {
                constants::sphere_area(n + 1).expect("n >= 2").to_f64() * radius.powi(*n as i32)
            }
            ModelManifold::Torus { n, periods } if periods.is_empty() => (2.0 * PI).powi(*n as i32),
            ModelManifold::Torus { periods, .. } => periods.iter().product(),
        }
    }
}

impl ModelManifold {
    /// Base point used when none is given: the north pole `ρ e_{n+1}` of the
    /// sphere in `ℝ^{n+1}`, or the origin of the torus.
    pub fn default_point(&self) -> Vec<f64> {
        match *self {
            ModelManifold::Sphere { n, radius } => {
                let mut x = vec![0.0; n as usize + 1];
                x[n as usize] = radius;
                x
            }
            ModelManifold::Torus { n, .. } => vec![0.0; n as usize],
        }
    }

    /// Ambient coordinates of a point: `n+1` numbers on the sphere of radius `ρ`,
    /// `n` numbers on the torus (taken modulo the periods).
    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        match *self {
            ModelManifold::Sphere { n, radius } => {
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if x.len() != n as usize + 1 || (norm - radius).abs() > 1e-12 * radius {
                    return Err(Error::Input(format!("point is not on the sphere of radius {radius} in R^{}", n + 1)));
                }
            }
            ModelManifold::Torus { n, .. } => {
                if x.len() != n as usize {
                    return Err(Error::Input(format!("torus point needs {n} coordinates")));
                }
            }
        }
        Ok(())
    }

    /// Geodesic distance between two points given in ambient coordinates.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            ModelManifold::Sphere { radius, .. } => {
                // atan2 form stays accurate at small and antipodal separations
                let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                let cross_sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
                    * x.iter().zip(y).map(|(a, b)| (a + b) * (a + b)).sum::<f64>()
                    / 4.0;
                radius * cross_sq.sqrt().atan2(dot)
            }
            ModelManifold::Torus { n, periods } => (0..*n as usize)
                .map(|i| {
                    let p = periods.get(i).copied().unwrap_or(2.0 * PI);
                    let d = (x[i] - y[i]).rem_euclid(p);
                    d.min(p - d).powi(2)
                })
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// Trace of `T_g = (k(n-2)/(4(n-1))) R g - (2k(k²-1)/(3(n-2))) (Ric - R g/(2(n-1)))`
/// on an Einstein model, assembled term by term.
pub fn tensor_tg_trace(m: &ModelManifold, k: u32) -> f64 {
    let n = m.dim() as f64;
    let k = k as f64;
    let r = m.scalar_curvature();
    let ric_trace = n * m.einstein_constant();
    let g_trace = n;
    let first = k * (n - 2.0) / (4.0 * (n - 1.0)) * r * g_trace;
    let second = 2.0 * k * (k * k - 1.0) / (3.0 * (n - 2.0)) * (ric_trace - r * g_trace / (2.0 * (n - 1.0)));
    first - second
}

/// Geodesic polar coordinates around a point: `√|g| = (w(r)/r)^{n-1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialMetricProfile {
    n: u32,
    /// `None` for flat.
    radius: Option<f64>,
    pub validity_radius: f64,
}

pub fn radial_profile(m: &ModelManifold) -> RadialMetricProfile {
    match *m {
        ModelManifold::Sphere { n, radius } => RadialMetricProfile {
            n,
            radius: Some(radius),
            validity_radius: 0.9 * PI * radius,
        },
        ModelManifold::Torus { n, .. } => RadialMetricProfile {
            n,
            radius: None,
            validity_radius: m.injectivity_radius(),
        },
    }
}

impl RadialMetricProfile {
    /// Euclidean `ℝⁿ` in polar coordinates.
    pub fn flat(n: u32) -> Self {
        RadialMetricProfile { n, radius: None, validity_radius: f64::INFINITY }
    }

    pub fn dim(&self) -> u32 {
        self.n
    }

    pub fn warp(&self, r: f64) -> f64 {
        match self.radius {
            Some(rho) => rho * (r / rho).sin(),
            None => r,
        }
    }

    /// `(n-1) w'/w`, the first-order coefficient of the radial Laplacian.
    pub fn laplacian_coefficient<const N: usize>(&self, r: Jet<N>) -> Jet<N> {
        let nm1 = (self.n - 1) as f64;
        match self.radius {
            Some(rho) => {
                let (s, c) = r.scale(1.0 / rho).sin_cos();
                (c / s).scale(nm1 / rho)
            }
            None => r.recip().scale(nm1),
        }
    }

    /// `Δ_g f = -(f'' + (n-1)(w'/w) f')` for a radial jet; loses two orders.
    pub fn laplacian<const N: usize>(&self, r: Jet<N>, f: Jet<N>) -> Jet<N> {
        let d1 = f.differentiate();
        let d2 = d1.differentiate();
        -(d2 + self.laplacian_coefficient(r) * d1)
    }

    /// Radial volume density `ω_{n-1} w(r)^{n-1}`.
    pub fn volume_density(&self, r: f64) -> f64 {
        constants::sphere_area(self.n).expect("n >= 2").to_f64() * self.warp(r).powi(self.n as i32 - 1)
    }
}

/// Exact conformal flattening of the round sphere around a point:
/// `g = (1 + |y|²/(4ρ²))^{-2} dy²` with `|y| = 2ρ tan(r/(2ρ))`, and
/// `φ = (1 + |y|²/(4ρ²))^{(n-2k)/2}` so that `φ^{4/(n-2k)} g = dy²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConformalGauge {
    /// `None` on flat models, where the gauge is trivial.
    radius: Option<f64>,
    gap: u32,
}

pub fn conformal_dress(m: &ModelManifold, d: DimensionPair) -> ConformalGauge {
    let radius = match *m {
        ModelManifold::Sphere { radius, .. } => Some(radius),
        ModelManifold::Torus { .. } => None,
    };
    ConformalGauge { radius, gap: d.gap() }
}

impl ConformalGauge {
    pub fn is_trivial(&self) -> bool {
        self.radius.is_none()
    }

    /// Flat chart radius `|y|` of the point at geodesic distance `r`.
    pub fn chart_radius<const N: usize>(&self, r: Jet<N>) -> Jet<N> {
        match self.radius {
            Some(rho) => r.scale(0.5 / rho).tan().scale(2.0 * rho),
            None => r,
        }
    }

    pub fn geodesic_radius(&self, y: f64) -> f64 {
        match self.radius {
            Some(rho) => 2.0 * rho * (y / (2.0 * rho)).atan(),
            None => y,
        }
    }

    /// `1 + |y|²/(4ρ²)`.
    fn stretch<const N: usize>(&self, y: Jet<N>) -> Jet<N> {
        match self.radius {
            Some(rho) => (y * y).scale(0.25 / (rho * rho)) + 1.0,
            None => Jet::constant(1.0),
        }
    }

    /// `φ` as a function of the chart radius.
    pub fn factor<const N: usize>(&self, y: Jet<N>) -> Jet<N> {
        self.stretch(y).powf(self.gap as f64 / 2.0)
    }

    /// `dv_g/dy = (1 + |y|²/(4ρ²))^{-n}`.
    pub fn volume_ratio(&self, n: u32, y: f64) -> f64 {
        self.stretch(Jet::<1>::constant(y)).value().powi(-(n as i32))
    }

    /// `φ^{4/(n-2k)}`, the factor turning `g` into the flat metric.
    pub fn metric_factor(&self, y: f64) -> f64 {
        self.stretch(Jet::<1>::constant(y)).value().powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{self, QuadOptions};

    fn pair(n: i64, k: i64) -> DimensionPair {
        DimensionPair::new(n, k).unwrap()
    }

    #[test]
    fn curvatures() {
        assert_eq!(ModelManifold::sphere(6, 1.0).scalar_curvature(), 30.0);
        assert_eq!(ModelManifold::sphere(5, 2.0).scalar_curvature(), 5.0);
        assert_eq!(ModelManifold::torus(6, 2.0 * PI).scalar_curvature(), 0.0);
    }

    #[test]
    fn tg_trace_values() {
        assert!((tensor_tg_trace(&ModelManifold::sphere(6, 1.0), 2) - 60.0).abs() < 1e-12);
        assert_eq!(tensor_tg_trace(&ModelManifold::torus(7, 1.0), 3), 0.0);
    }

    #[test]
    fn tg_trace_is_n_c_r() {
        for radius in [0.5, 1.0, 2.0] {
            for k in [2u32, 3] {
                for n in (2 * k + 1)..=12 {
                    let m = ModelManifold::sphere(n, radius);
                    let c = constants::c_small(pair(n as i64, k as i64));
                    let want = n as f64 * num_traits::ToPrimitive::to_f64(&c).unwrap() * m.scalar_curvature();
                    let got = tensor_tg_trace(&m, k);
                    assert!((got - want).abs() <= 1e-13 * want.abs(), "n={n} k={k} ρ={radius}");
                }
            }
        }
    }

    #[test]
    fn parses_descriptors() {
        let m: ModelManifold = serde_json::from_str(r#"{"kind":"sphere","radius":1.0,"n":6}"#).unwrap();
        assert_eq!(m, ModelManifold::sphere(6, 1.0));
        let t: ModelManifold = serde_json::from_str(r#"{"kind":"torus","n":6}"#).unwrap();
        assert!(t.validate().is_ok());
        assert!((t.injectivity_radius() - PI).abs() < 1e-15);
    }

    #[test]
    fn laplacian_coefficient_limits() {
        let p = radial_profile(&ModelManifold::sphere(6, 1.0));
        let r = 0.7;
        let c = p.laplacian_coefficient(Jet::<2>::variable(r)).value();
        assert!((c - 5.0 / r.tan()).abs() < 1e-14);
        let small = p.laplacian_coefficient(Jet::<2>::variable(1e-6)).value() * 1e-6;
        assert!((small - 5.0).abs() < 1e-10);
        let t = radial_profile(&ModelManifold::torus(6, 2.0 * PI));
        assert_eq!(t.warp(0.3), 0.3);
    }

    #[test]
    fn profile_volume_of_ball() {
        // ∫_0^{πρ} ω_5 (ρ sin(r/ρ))^5 dr is the whole sphere
        for rho in [0.5, 2.0] {
            let m = ModelManifold::sphere(6, rho);
            let p = radial_profile(&m);
            assert!(p.validity_radius < m.injectivity_radius());
            let v = quad::integrate(|r| p.volume_density(r), 0.0, PI * rho, QuadOptions::rel(1e-13));
            assert!((v.value - m.volume()).abs() < 1e-10 * m.volume());
        }
        let t = radial_profile(&ModelManifold::torus(4, 2.0 * PI));
        let big_r = t.validity_radius;
        let v = quad::integrate(|r| t.volume_density(r), 0.0, big_r, QuadOptions::rel(1e-13));
        let want = PI * PI / 2.0 * big_r.powi(4);
        assert!((v.value - want).abs() < 1e-10 * want);
    }

    #[test]
    fn gauge_normalization_and_round_trip() {
        let g = conformal_dress(&ModelManifold::sphere(6, 1.5), pair(6, 2));
        let y0 = g.factor(Jet::<3>::variable(0.0));
        assert_eq!(y0.value(), 1.0);
        assert_eq!(y0.c[1], 0.0);
        for i in 1..200 {
            let r = PI * 1.5 * 0.9 * i as f64 / 200.0;
            let y = g.chart_radius(Jet::<1>::constant(r)).value();
            assert!((g.geodesic_radius(y) - r).abs() < 1e-13 * r.max(1.0));
        }
    }

    #[test]
    fn gauge_volume_is_sphere_volume() {
        for (n, rho) in [(6u32, 1.0), (5, 2.0)] {
            let m = ModelManifold::sphere(n, rho);
            let g = conformal_dress(&m, pair(n as i64, 2));
            let omega = constants::sphere_area(n).unwrap().to_f64();
            let v = quad::integrate_to_infinity(
                |y| omega * y.powi(n as i32 - 1) * g.volume_ratio(n, y),
                0.0,
                &[rho, 10.0 * rho],
                QuadOptions::rel(1e-13),
            );
            assert!((v.value - m.volume()).abs() < 1e-10 * m.volume(), "n={n}");
        }
    }

    #[test]
    fn classical_stereographic_factor() {
        let g = conformal_dress(&ModelManifold::sphere(3, 1.0), pair(3, 1));
        for y in [0.0, 0.5, 2.0] {
            let phi = g.factor(Jet::<1>::constant(y)).value();
            let want = (1.0 + y * y / 4.0).powi(2);
            assert!((phi.powi(4) - want).abs() < 1e-14 * want);
            assert!((g.metric_factor(y) - want).abs() < 1e-14 * want);
        }
    }
}
