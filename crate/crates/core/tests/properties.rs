use std::f64::consts::PI;

use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polysob::constants::{self, DimensionPair};
use polysob::geometry::ModelManifold;
use polysob::giraud::{self, EnvelopeKernel};
use polysob::quotient::{self, SlopeRegime, TestFunctionFamily};
use polysob::radial::RadialRational;
use polysob::regimes::{self, BlowupParams, Branch};

fn pair(n: i64, k: i64) -> DimensionPair {
    DimensionPair::new(n, k).unwrap()
}

fn all_pairs() -> impl Strategy<Value = DimensionPair> {
    prop::sample::select(DimensionPair::all_up_to(14))
}

fn side(n: f64, threshold: f64) -> Branch {
    if n > threshold {
        Branch::Above
    } else if n < threshold {
        Branch::Below
    } else {
        Branch::At
    }
}

proptest! {
    #[test]
    fn beta_symmetry_and_recurrence(tp in 1i64..40, tq in 1i64..40) {
        let b = constants::beta_half(tp, tq).unwrap();
        prop_assert_eq!(&b, &constants::beta_half(tq, tp).unwrap());
        // B(p+1, q) = B(p, q) p/(p+q)
        let shifted = constants::beta_half(tp + 2, tq).unwrap();
        prop_assert_eq!(shifted, b.scale(&constants::rat(tp, tp + tq)));
    }

    #[test]
    fn scale_power_inverts_product(d in all_pairs()) {
        let ak = constants::bubble_scale(d).pow(&constants::rat(d.k() as i64, 1)).unwrap();
        let prod = ak.scale(&BigRational::from_integer(d.pi_product()));
        prop_assert!(prod.is_rational() && prod.mantissa() == &constants::rat(1, 1));
    }

    #[test]
    fn exact_laplacian_matches_finite_differences(
        coeffs in prop::collection::vec(-6i64..=6, 1..5),
        denom in 1i64..5,
        twice_m in 2i64..14,
        n in 3u32..13,
        a in 0.2f64..2.0,
    ) {
        prop_assume!(coeffs.iter().any(|c| *c != 0));
        let f = RadialRational::from_coefficients(coeffs.iter().map(|c| constants::rat(*c, denom)).collect(), twice_m);
        let lap = f.laplacian(n);
        let h = 1e-2;
        let d1 = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
        let d2 = [1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
        for i in 0..20 {
            let r = 0.3 + 2.7 * i as f64 / 19.0;
            let s: Vec<f64> = (-3..=3).map(|j| f.eval_r(r + j as f64 * h, a)).collect();
            let fp: f64 = d1.iter().zip(&s).map(|(w, v)| w * v).sum::<f64>() / h;
            let fpp: f64 = d2.iter().zip(&s).map(|(w, v)| w * v).sum::<f64>() / (h * h);
            let fd = -fpp - (n as f64 - 1.0) * fp / r;
            let scale = fpp.abs() + (n as f64 - 1.0) * fp.abs() / r;
            // cancellation in the stencil sums
            let rounding = 1e3 * f64::EPSILON * s.iter().fold(0.0f64, |m, v| m.max(v.abs())) / (h * h);
            let exact = lap.eval_r(r, a);
            prop_assert!((exact - fd).abs() <= 1e-6 * scale + rounding, "r={} exact={} fd={}", r, exact, fd);
        }
    }

    #[test]
    fn regime_tags_follow_the_inequalities(
        d in all_pairs(),
        tau_frac in 0.05f64..=1.0,
        log_t in -6.0f64..-0.5,
        alpha in 0.5f64..50.0,
    ) {
        let (n, k) = (d.n() as f64, d.k() as f64);
        let tau = tau_frac * 2.0f64.min(d.gap() as f64 / 2.0);
        let t = 10f64.powf(log_t);
        let p = BlowupParams::new(alpha, t / alpha, tau, d).unwrap();
        let s = regimes::sigma(&p, d).unwrap();
        prop_assert_eq!(s.branch, side(n, 2.0 * k + 4.0));
        // σ never falls below the smooth rate (αμ)²
        prop_assert!(s.value >= t * t * (1.0 - 1e-12));
        let (th, thp) = regimes::theta_pair(&p, d);
        prop_assert_eq!(th.branch, side(n, 2.0 * k + 4.0));
        prop_assert_eq!(thp.branch, side(n, 2.0 * k + 2.0 + tau));
        prop_assert!(th.value > 0.0 && thp.value > 0.0);
        let expected = match d.gap() {
            1 => SlopeRegime::Odd,
            2 => SlopeRegime::Logarithmic,
            _ => SlopeRegime::Quadratic,
        };
        prop_assert_eq!(quotient::slope_regime(d), expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn measured_regime_tags(d in all_pairs(), log_t in -4.0f64..-2.0) {
        let p = BlowupParams::with_default_tau(1.0, 10f64.powf(log_t), d).unwrap();
        let g = regimes::gradient_energy_regime(&p, d).unwrap();
        prop_assert_eq!(g.branch, side(d.n() as f64, 2.0 * d.k() as f64 + 2.0));
        let l = regimes::l2_mass_regime(&p, d, 20.0).unwrap();
        prop_assert_eq!(l.branch, side(d.n() as f64, 4.0 * d.k() as f64));
        prop_assert!(g.measured > 0.0 && l.measured > 0.0);
    }
}

#[test]
fn gradient_ratio_converges_monotonically() {
    for d in [pair(7, 2), pair(8, 2), pair(9, 2), pair(9, 3)] {
        let gaps: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&t| {
                let p = BlowupParams::with_default_tau(1.0, t, d).unwrap();
                (regimes::gradient_energy_regime(&p, d).unwrap().ratio - 1.0).abs()
            })
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{d}: {gaps:?}");
    }
}

#[test]
fn convolution_routes_agree_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..5u64 {
        let n: u32 = rng.gen_range(3..=6);
        let nf = n as f64;
        let a = rng.gen_range(0.5..nf - 0.5);
        let b = rng.gen_range(0.5..nf - 0.5);
        let p = rng.gen_range(nf + 1.0..nf + 4.0);
        let q = rng.gen_range(nf + 1.0..nf + 4.0);
        let alpha = rng.gen_range(0.5..4.0);
        let d = rng.gen_range(0.05..3.0);
        let x = EnvelopeKernel::new(a, p, alpha, n).unwrap();
        let y = EnvelopeKernel::new(b, q, alpha, n).unwrap();
        let z = giraud::convolve_radial(&x, &y, d, n).unwrap().value;
        let mc = giraud::monte_carlo(&x, &y, d, n, 400_000, 100 + case).unwrap();
        assert!(
            (mc.mean - z).abs() < 3.0 * mc.std_error,
            "n={n} a={a} b={b} p={p} q={q} α={alpha} d={d}: {z} vs {mc:?}"
        );
    }
}

#[test]
fn intercept_is_the_sharp_level() {
    let grid = quotient::geometric_grid(0.003, 0.0003, 8);
    for d in [pair(6, 2), pair(8, 2), pair(8, 3), pair(9, 3)] {
        let n = d.n();
        for m in [ModelManifold::sphere(n, 1.0), ModelManifold::torus(n, 2.0 * PI)] {
            let fam = TestFunctionFamily::new(&m, d).unwrap();
            let fit = quotient::slope_fit(&quotient::quotient_curve(&fam, &grid, 0.0).unwrap()).unwrap();
            let gap = (fit.intercept / fam.sharp_level() - 1.0).abs();
            assert!(gap < 1e-3, "{d} on {m:?}: {gap}");
        }
    }
}

#[test]
fn log_regime_slope_on_s6() {
    let d = pair(6, 2);
    let m = ModelManifold::sphere(6, 1.0);
    let fam = TestFunctionFamily::new(&m, d).unwrap();
    let predicted = quotient::predicted_slope(&m, d).unwrap();
    for start in [0.03, 0.003] {
        let grid = quotient::geometric_grid(start, start / 10.0, 8);
        let fit = quotient::slope_fit(&quotient::quotient_curve(&fam, &grid, 0.0).unwrap()).unwrap();
        assert!((fit.slope / predicted - 1.0).abs() < 0.1, "ε from {start}: {} vs {predicted}", fit.slope);
    }
}

#[test]
fn k_one_is_the_classical_constant() {
    // 1/K(n,1) = (n(n-2)/4) ω_n^{2/n}, the classical Aubin–Talenti value
    for n in 3..=12u32 {
        let d = pair(n as i64, 1);
        let omega_n = constants::sphere_area(n + 1).unwrap().to_f64();
        let level = n as f64 * (n as f64 - 2.0) / 4.0 * omega_n.powf(2.0 / n as f64);
        let k = constants::sharp_constant(d).value;
        assert!((k * level - 1.0).abs() < 1e-13, "n={n}");
    }
}
