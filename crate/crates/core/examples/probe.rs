use polysob::geometry::ModelManifold;
use polysob::quotient::*;
use polysob::DimensionPair;
use std::f64::consts::PI;
fn main() {
    for (n, k, e0) in [(6, 2, 0.003), (6,2,0.01), (6,2,0.03), (8, 3, 0.003), (9, 3, 0.003), (10, 3, 0.003), (7,2,0.003)] {
        let d = DimensionPair::new(n, k).unwrap();
        for m in [ModelManifold::sphere(n as u32, 1.0), ModelManifold::torus(n as u32, 2.0 * PI)] {
            let fam = TestFunctionFamily::new(&m, d).unwrap();
            let c = quotient_curve(&fam, &geometric_grid(e0, e0 / 10.0, 8), 0.0);
            match c.and_then(|c| slope_fit(&c)) {
                Ok(f) => println!("({n},{k}) e0={e0} flat={} slope {:.5e}±{:.2e} pred {:?} icpt rel {:.2e}", m.is_flat(), f.slope, f.slope_err, predicted_slope(&m, d).ok(), f.intercept / fam.sharp_level() - 1.0),
                Err(e) => println!("({n},{k}) {e}"),
            }
        }
    }
}
