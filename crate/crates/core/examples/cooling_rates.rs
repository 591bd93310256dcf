//! Doppler cooling of every mode of the Be⁺–Mg⁺ pair through the Be⁺ ion
//! with a 313 nm beam along the trap axis.

use std::f64::consts::TAU;

use ionchain::chain::{find_equilibrium, normal_modes};
use ionchain::cooling::{cooling_report, LaserField};
use ionchain::trap::{be_mg_reference_trap, IonSpecies};

fn main() -> ionchain::Result<()> {
    let trap = be_mg_reference_trap();
    let species = [IonSpecies::beryllium9(), IonSpecies::magnesium24()];
    let modes = normal_modes(&trap, &find_equilibrium(&trap, &species, None)?)?;
    let gamma = TAU * 19.4e6;
    let laser = LaserField::with_saturation([0.0, 0.0, TAU / 313e-9], 1.0, -0.5 * gamma, gamma)?;
    let report = cooling_report(&modes, &laser, 0, 1.0)?;
    println!(
        "saturation {:.2}, excited population {:.4}",
        report.saturation, report.excited_population
    );
    println!(
        "{:>4} {:>9} {:>8} {:>14} {:>14} {:>8}",
        "mode", "f (MHz)", "eta", "cool (1/s)", "heat (1/s)", "n_ss"
    );
    for m in &report.modes {
        let n_ss = m.equilibrium_occupation.map_or("-".to_string(), |n| format!("{n:.2}"));
        println!(
            "{:>4} {:9.3} {:8.4} {:14.4e} {:14.4e} {:>8}",
            m.mode,
            m.frequency_hz * 1e-6,
            m.lamb_dicke,
            m.doppler_rate + 0.0,
            m.recoil_heating_rate,
            n_ss
        );
    }
    for a in &report.assumptions {
        println!("assumes: {a}");
    }
    Ok(())
}
