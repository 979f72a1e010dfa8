//! Drive-induced self-energy of the normal state, sampled on a coarse set of frequencies.

use tc_keldysh::convolution::{ConvolutionMethod, Correlator};
use tc_keldysh::greens::bare_fermion_gf;
use tc_keldysh::grid::{FrequencyGrid, DEFAULT_POINTS};
use tc_keldysh::selfenergy::{dyson, dyson_residual, sigma_from, PhotonKernels};
use tc_keldysh::{DriveSpectrum, SystemParams};

fn main() -> tc_keldysh::Result<()> {
    let params = SystemParams::resonant(0.25, 0.75, -0.5);
    let drive = DriveSpectrum::lorentzian(1.0, 0.0, 2.5);
    let grid = FrequencyGrid::for_problem(&params, &drive, DEFAULT_POINTS)?;
    let correlator = Correlator::new(&grid, ConvolutionMethod::Fft)?;
    let g0 = bare_fermion_gf(&grid, &params, 0.0, num_complex::Complex64::new(0.0, 0.0));
    let sigma = sigma_from(&g0, &PhotonKernels::new(&correlator, &params, &drive, 0.0), &params, &grid)?;
    let g = dyson(&g0, &sigma, &grid)?;

    println!("omega,{}", sigma.components().map(|(name, _)| format!("re_{name},im_{name}")).join(","));
    let step = grid.len() / 40;
    for i in (0..grid.len()).step_by(step).filter(|&i| grid.points()[i].abs() <= 4.0) {
        let row: Vec<String> = sigma.components().iter().flat_map(|(_, v)| [v[i].re, v[i].im]).map(|x| format!("{x:.6e}")).collect();
        println!("{:.4},{}", grid.points()[i], row.join(","));
    }
    eprintln!("conjugation defect {:.1e}, Dyson residual {:.1e}", sigma.conjugation_defect(), dyson_residual(&g, &g0, &sigma));
    Ok(())
}
