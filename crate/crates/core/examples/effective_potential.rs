//! Effective chemical potential of the normal state across dephasing-bath potentials,
//! bare and with a one-shot dressed fermion propagator.

use tc_keldysh::grid::FrequencyGrid;
use tc_keldysh::stability::{Stability, StabilityOptions};
use tc_keldysh::{Dressing, DriveSpectrum, SystemParams};

fn main() -> tc_keldysh::Result<()> {
    let drive = DriveSpectrum::off();
    for mu_b in [0.5, 0.2, 0.1, 0.05, 0.0, -0.1, -0.5] {
        let params = SystemParams::resonant(0.25, 0.75, mu_b);
        let grid = FrequencyGrid::for_problem(&params, &drive, 4095)?;
        let mut line = format!("mu_B = {mu_b:+.2}");
        for dressing in [Dressing::Bare, Dressing::OneShot] {
            let opts = StabilityOptions { dressing, ..Default::default() };
            let st = Stability::new(&params, &drive, &grid, opts)?;
            let roots: Vec<String> = st.roots()?.iter().map(|r| format!("{:.5}", r.omega)).collect();
            line += &format!("  {}: [{}]", dressing.as_str(), roots.join(", "));
        }
        println!("{line}");
    }
    Ok(())
}
