//! Multi-start saddle-point solve at two operating points.
//!
//! The first is undriven with an inverted dephasing bath, which condenses; the
//! second is the same system under a strong resonant drive, which does not.

use tc_keldysh::grid::{FrequencyGrid, DEFAULT_POINTS};
use tc_keldysh::{solve_saddle, Dressing, DriveSpectrum, SaddleProblem, SolveOptions, SystemParams};

fn main() -> tc_keldysh::Result<()> {
    let params = SystemParams::resonant(0.05, 0.75, 0.5);
    for h in [0.0, 5.0] {
        let drive = DriveSpectrum::lorentzian(h, 0.0, 0.5);
        let grid = FrequencyGrid::for_problem(&params, &drive, DEFAULT_POINTS)?;
        let problem = SaddleProblem::new(params, drive, &grid, Dressing::OneShot)?;
        let sol = solve_saddle(&problem, &[], &SolveOptions::default());
        println!("h = {h}: {} mu_S = {:.6} psi_f = {:.6} |R| = {:.1e}", sol.phase, sol.mu_s, sol.psi_f, sol.residual_norm);
        if let Some(o) = sol.observables {
            println!("  polarization = {:.6} rho = {:.6} n_b = {:.6} n_a = {:.6}", o.polarization, o.rho, o.n_b.value, o.n_a.value);
        }
        for s in &sol.seeds {
            match &s.report {
                Some(r) => println!("  seed {:?}: {:?} at {:?} after {} iterations", s.seed, r.status, r.x, r.iterations),
                None => println!("  seed {:?}: {}", s.seed, s.error.as_deref().unwrap_or("no report")),
            }
        }
    }
    Ok(())
}
