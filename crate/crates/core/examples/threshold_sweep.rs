//! Drive-amplitude sweep with continuation, printing the points CSV and the
//! located phase changes.

use tc_keldysh::sweep::{sweep_1d, transitions, write_points_csv, Axis, Provenance, SweepParam, SweepSpec};
use tc_keldysh::{DriveSpectrum, SystemParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = SystemParams::resonant(0.05, 0.75, 0.5);
    let mut spec = SweepSpec::new(Axis::new(SweepParam::H, 0.0, 3.0, 25), params, DriveSpectrum::lorentzian(0.0, 0.0, 0.5));
    spec.grid_points = 4095;
    let result = sweep_1d(&spec)?;

    let config = vec!["system.mu_B = 0.5".to_string(), "system.kappa = 0.05".to_string()];
    write_points_csv(&mut std::io::stdout().lock(), &result, &config, &Provenance::default())?;
    for (h, kind) in transitions(&result) {
        eprintln!("{kind:?} at h = {h:.4}");
    }
    Ok(())
}
