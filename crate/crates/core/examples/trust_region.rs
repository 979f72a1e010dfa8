//! The dogleg trust-region solver on small nonlinear systems, including one
//! whose second coordinate is projected onto `x >= 0` as the condensate amplitude is.

use tc_keldysh::trust_region::{trust_region_solve, TrustRegionOptions};

fn main() -> tc_keldysh::Result<()> {
    let opts = TrustRegionOptions::default();
    let free = |x: [f64; 2]| x;
    let cases: [(&str, fn([f64; 2]) -> [f64; 2], [f64; 2]); 3] = [
        ("circle and diagonal", |x| [x[0] * x[0] + x[1] * x[1] - 4.0, x[0] - x[1]], [1.0, 0.0]),
        ("Rosenbrock residual", |x| [10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]], [-1.2, 1.0]),
        ("sheared pair", |x| [x[0] + 10.0 * x[1], (x[0] - x[1]).powi(2) - 1.0], [3.0, -1.0]),
    ];
    for (name, f, x0) in cases {
        let r = trust_region_solve(|x| Ok(f(x)), x0, &opts, free)?;
        println!("{name}: {:?} x = {:?} |R| = {:.1e} after {} iterations", r.status, r.x, r.residual_norm, r.iterations);
    }
    let r = trust_region_solve(|x| Ok([x[0] - 1.0, x[1] * x[1] - 0.25]), [0.0, -1.0], &opts, |x| [x[0], x[1].abs()])?;
    println!("projected: {:?} x = {:?}", r.status, r.x);
    Ok(())
}
