//! Fluctuation-dissipation relation, spectral sum rule and thermal occupation of the bare fermions.

use num_complex::Complex64;
use tc_keldysh::greens::{bare_fermion_gf, fermi_distribution, occupation_from_k, KeldyshGF};
use tc_keldysh::grid::{FrequencyGrid, DEFAULT_POINTS};
use tc_keldysh::params::Species;
use tc_keldysh::{DriveSpectrum, SystemParams};

fn main() -> tc_keldysh::Result<()> {
    let params = SystemParams::resonant(0.25, 0.75, -0.5);
    let grid = FrequencyGrid::for_problem(&params, &DriveSpectrum::off(), DEFAULT_POINTS)?;
    let gf = bare_fermion_gf(&grid, &params, 0.0, Complex64::new(0.0, 0.0));
    for s in [Species::B, Species::A] {
        let (r, a, k) = (KeldyshGF::diagonal(&gf.r, s), KeldyshGF::diagonal(&gf.a, s), KeldyshGF::diagonal(&gf.k, s));
        let fdt = grid
            .points()
            .iter()
            .enumerate()
            .map(|(i, &w)| (k[i] - fermi_distribution(w, s, &params, 0.0) * (r[i] - a[i])).norm())
            .fold(0.0, f64::max);
        let spectral: Vec<Complex64> = r.iter().zip(&a).map(|(r, a)| Complex64::i() * (r - a)).collect();
        let weight = grid.integrate(&spectral)? / (2.0 * std::f64::consts::PI);
        let n = occupation_from_k(&gf, s, &grid)?;
        println!("{s:?}: max FDT defect {fdt:.1e}, spectral weight {:.9}, occupation {:.6}", weight.re, n.value);
    }
    Ok(())
}
