//! Two-dimensional (h, mu_B) phase diagram written as points and boundary CSVs.
//!
//! Usage: `cargo run --release --example phase_diagram [OUT_DIR]`.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use tc_keldysh::sweep::{extract_boundary, sweep_2d, write_boundary_csv, write_points_csv, Axis, Provenance, SweepParam, SweepSpec};
use tc_keldysh::{DriveSpectrum, Phase, SystemParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "phase_diagram".into());
    std::fs::create_dir_all(&dir)?;

    let params = SystemParams::resonant(0.05, 0.75, 0.5);
    let mut spec = SweepSpec::new(Axis::new(SweepParam::H, 0.0, 3.0, 13), params, DriveSpectrum::lorentzian(0.0, 0.0, 0.5))
        .with_axis2(Axis::new(SweepParam::MuB, -0.2, 0.6, 9));
    spec.grid_points = 4095;
    let result = sweep_2d(&spec)?;
    let boundary = extract_boundary(&result);

    let config = vec!["system.kappa = 0.05".to_string(), "drive.Omega = 0.5".to_string()];
    let prov = Provenance::default();
    write_points_csv(&mut BufWriter::new(File::create(dir.join("points.csv"))?), &result, &config, &prov)?;
    write_boundary_csv(&mut BufWriter::new(File::create(dir.join("boundary.csv"))?), &boundary, &config, &prov)?;

    let (n1, n2) = result.shape();
    for i2 in (0..n2).rev() {
        let row: String = (0..n1)
            .map(|i1| match result.point(i1, i2).phase() {
                Phase::Condensed => '#',
                Phase::Normal => '.',
                Phase::Inaccessible => '?',
            })
            .collect();
        println!("mu_B = {:+.2}  {row}", result.point(0, i2).axis2.unwrap_or_default());
    }
    println!("{} boundary points written to {}", boundary.len(), dir.display());
    Ok(())
}
